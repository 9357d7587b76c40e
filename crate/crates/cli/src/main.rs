//! `aitlab`: enumerate a budget into a cache, query complexities, and run
//! the conservation checks against cached tables.
//!
//! Exit status: 0 on success, 1 when a hard assert fails, 2 on malformed
//! input or IO errors, 3 when no program within the budget prints the
//! queried string.

mod store;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use aitlab::bits::BitString;
use aitlab::continuous::{self, check_thm5, check_thm6, ratio_report};
use aitlab::enumeration::{enumerate, OmegaPrefix};
use aitlab::exact::{code_length, show};
use aitlab::harness::{self, all_pairs, Report, Tables, DEFAULT_SLACK};
use aitlab::measures::{self, deficiency, measure_by_label};
use aitlab::staged::{self, function_by_label, thm2_b, Evaluable, TotalFunction};
use aitlab::{cache, Error};
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use store::{AuxSpec, Store};

#[derive(Parser)]
#[command(name = "aitlab", version, about = "Exact desk-scale algorithmic information experiments")]
struct Cli {
    /// Directory holding enumeration caches.
    #[arg(long, env = "AITLAB_CACHE_DIR", default_value = "aitlab-cache", global = true)]
    cache_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct BudgetArgs {
    #[arg(long, default_value_t = 18)]
    max_len: usize,
    #[arg(long, default_value_t = 100_000)]
    max_steps: u64,
    /// eps, omega:<c> or halting:<n>
    #[arg(long, default_value = "eps")]
    aux: AuxSpec,
    /// Cache file to use instead of the one derived from the budget.
    #[arg(long)]
    cache: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Conservation {
    Prop1,
    Thm1,
    Thm2,
    Thm3,
    Thm4,
}

#[derive(Clone, Copy, ValueEnum)]
enum ContinuousCheck {
    Ratio,
    Thm5,
    Thm6,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate every halting program within a budget and write the cache.
    Enumerate {
        #[command(flatten)]
        budget: BudgetArgs,
        /// Output path (defaults to the cache directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Replay every record through the interpreter after writing.
        #[arg(long)]
        verify: bool,
    },
    /// Print K, m and optionally a deficiency for one string.
    Complexity {
        #[command(flatten)]
        budget: BudgetArgs,
        /// Bit string, or `eps` for the empty string.
        x: String,
        /// Measure label for the deficiency, e.g. uniform:8.
        #[arg(long)]
        measure: Option<String>,
    },
    /// Run a discrete conservation check against cached tables.
    Conserve {
        which: Conservation,
        #[command(flatten)]
        budget: BudgetArgs,
        /// Aux source of the oracle table.
        #[arg(long, default_value = "halting:256")]
        oracle: AuxSpec,
        /// Function label, or `thm2` for the exotic-string map.
        #[arg(long, default_value = "identity")]
        function: String,
        #[arg(long, default_value = "uniform:4")]
        measure: String,
        #[arg(long, default_value_t = 4)]
        b: usize,
        #[arg(long, default_value_t = 3)]
        c: usize,
        #[arg(long)]
        slack: Option<i64>,
        /// Longest string in the evaluation domain.
        #[arg(long)]
        domain_len: Option<usize>,
        /// Budget whose tables supply Ω (defaults to the main budget).
        #[arg(long)]
        omega_max_len: Option<usize>,
        #[arg(long)]
        omega_max_steps: Option<u64>,
        /// Write `<out>.txt` and `<out>.tsv` instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a finite-depth Cantor-space check.
    Continuous {
        which: ContinuousCheck,
        #[arg(long, default_value_t = continuous::DEFAULT_DEPTH)]
        depth: usize,
        /// Tree measure label.
        #[arg(long, default_value = "uniform")]
        measure: String,
        /// Monotone map label.
        #[arg(long, default_value = "identity")]
        map: String,
        /// Highest ratio-test level.
        #[arg(long, default_value_t = 6)]
        levels: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List registered measures, functions, maps and tests.
    Catalog,
}

/// Soft outcome of a successful command.
enum Verdict {
    Ok,
    HardAssertFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let store = Store { dir: cli.cache_dir };
    match run(cli.command, &store) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::HardAssertFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<Error>() {
                Some(Error::NoProgram(_)) => ExitCode::from(3),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn run(command: Command, store: &Store) -> Result<Verdict> {
    match command {
        Command::Enumerate { budget, out, verify } => cmd_enumerate(store, &budget, out, verify),
        Command::Complexity { budget, x, measure } => cmd_complexity(store, &budget, &x, measure.as_deref()),
        Command::Conserve {
            which,
            budget,
            oracle,
            function,
            measure,
            b,
            c,
            slack,
            domain_len,
            omega_max_len,
            omega_max_steps,
            out,
        } => {
            let omega_budget = (omega_max_len.unwrap_or(budget.max_len), omega_max_steps.unwrap_or(budget.max_steps));
            let opts = ConserveOpts { oracle, function, measure, b, c, slack, domain_len, omega_budget };
            let report = cmd_conserve(store, which, &budget, &opts)?;
            emit(&report, out.as_deref())
        }
        Command::Continuous { which, depth, measure, map, levels, out } => {
            let report = cmd_continuous(which, depth, &measure, &map, levels)?;
            emit(&report, out.as_deref())
        }
        Command::Catalog => {
            print!("{}", catalog_text());
            Ok(Verdict::Ok)
        }
    }
}

fn cmd_enumerate(store: &Store, args: &BudgetArgs, out: Option<PathBuf>, verify: bool) -> Result<Verdict> {
    let budget = store.budget(args.max_len, args.max_steps, args.aux)?;
    let table = enumerate(&budget)?;
    let path = out.or_else(|| args.cache.clone()).unwrap_or_else(|| store.path_for(args.max_len, args.max_steps, args.aux));
    cache::save(&table, &path).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    println!("budget {budget}");
    println!("records {}", table.len());
    println!("kraft_sum {}", show(&table.kraft_sum()));
    println!("omega {}", show(&table.omega_approx()));
    if verify {
        if let Err(p) = cache::verify_by_replay(&table) {
            println!("replay FAIL at {p}");
            return Ok(Verdict::HardAssertFailed);
        }
        println!("replay PASS");
    }
    Ok(Verdict::Ok)
}

fn cmd_complexity(store: &Store, args: &BudgetArgs, x: &str, measure: Option<&str>) -> Result<Verdict> {
    let x: BitString = x.parse()?;
    let table = store.load(args.max_len, args.max_steps, args.aux, args.cache.as_deref())?;
    let k = table.k_approx(&x).ok_or_else(|| Error::NoProgram(x.clone()))?;
    let m = table.m_approx(&x);
    println!("x {x}");
    println!("budget {}", table.budget());
    println!("K {k}");
    println!("m {}", show(&m));
    println!("code_len_m {}", code_length(&m));
    if let Some(label) = measure {
        let p = measure_by_label(label)?;
        println!("deficiency[{label}] {}", deficiency(&p, &x, &table)?);
    }
    Ok(Verdict::Ok)
}

struct ConserveOpts {
    oracle: AuxSpec,
    function: String,
    measure: String,
    b: usize,
    c: usize,
    slack: Option<i64>,
    domain_len: Option<usize>,
    omega_budget: (usize, u64),
}

fn omega(store: &Store, c: usize, (len, steps): (usize, u64)) -> Result<OmegaPrefix> {
    let table = store.load(len, steps, AuxSpec::Eps, None)?;
    let half = store.load(len, steps / 2, AuxSpec::Eps, None)?;
    Ok(OmegaPrefix::from_tables(c, &table, &half))
}

fn cmd_conserve(store: &Store, which: Conservation, args: &BudgetArgs, o: &ConserveOpts) -> Result<Report> {
    if args.aux != AuxSpec::Eps {
        bail!("conservation checks take the plain budget; set the oracle with --oracle");
    }
    let plain = store.load(args.max_len, args.max_steps, AuxSpec::Eps, args.cache.as_deref())?;
    let with_h = store.load(args.max_len, args.max_steps, o.oracle, None)?;
    let tables = Tables::new(&plain, &with_h);
    let slack = o.slack.unwrap_or(DEFAULT_SLACK);
    let upto = |default: usize| BitString::all_up_to(o.domain_len.unwrap_or(default)).collect::<Vec<_>>();
    let function = |o: &ConserveOpts| -> Result<TotalFunction> {
        if o.function == "thm2" {
            let om = omega(store, o.c, o.omega_budget)?;
            Ok(thm2_b(o.b, o.c, vec![om.bits])?.at_stage(0))
        } else {
            Ok(function_by_label(&o.function)?)
        }
    };
    let mut report = match which {
        Conservation::Prop1 => harness::check_prop1(&upto(6), tables).report,
        Conservation::Thm1 => {
            let p = measure_by_label(&o.measure)?;
            let domain: Vec<_> = p.support().map(|(x, _)| x.clone()).collect();
            harness::check_thm1(&function(o)?, &p, &domain, tables, slack).report
        }
        Conservation::Thm2 => {
            let om = omega(store, o.c, o.omega_budget)?;
            let label = format!("max_len={} max_steps={}", o.omega_budget.0, o.omega_budget.1);
            let slack = o.slack.unwrap_or_else(|| harness::thm2_slack(o.b, o.c));
            harness::thm2_pipeline(o.b, o.c, &om, &label, tables, slack)?.report
        }
        Conservation::Thm3 => harness::check_thm3(&function(o)?, &all_pairs(&upto(4)), tables, slack)?.report,
        Conservation::Thm4 => harness::check_thm4(&function(o)?, &upto(6), tables, slack)?.report,
    };
    report.config("oracle", o.oracle);
    Ok(report)
}

fn cmd_continuous(which: ContinuousCheck, depth: usize, measure: &str, map: &str, levels: u32) -> Result<Report> {
    let m = continuous::mixture_m(&continuous::default_catalog(depth)?)?;
    let p = continuous::tree_measure_by_label(measure, depth)?;
    let nu = continuous::map_by_label(map)?;
    let tests = continuous::test_catalog(&m)?;
    Ok(match which {
        ContinuousCheck::Ratio => ratio_report(&p, &m, levels)?.1,
        ContinuousCheck::Thm5 => {
            let prefixes: Vec<_> = BitString::all_of_length(depth).collect();
            check_thm5(&nu, &tests, &m, &prefixes)?.report
        }
        ContinuousCheck::Thm6 => check_thm6(&nu, &p, &m, &tests)?.report,
    })
}

fn emit(report: &Report, out: Option<&Path>) -> Result<Verdict> {
    match out {
        None => print!("{}", report.render_text()),
        Some(prefix) => {
            if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            let txt = prefix.with_extension("txt");
            let tsv = prefix.with_extension("tsv");
            fs::write(&txt, report.render_text()).with_context(|| format!("writing {}", txt.display()))?;
            fs::write(&tsv, report.render_tsv()).with_context(|| format!("writing {}", tsv.display()))?;
            let passed = report.hard_asserts.iter().filter(|h| h.pass).count();
            let flags = report.consistency.iter().filter(|c| !c.ok).count();
            println!(
                "{}: hard asserts {passed}/{} passed, {flags} consistency flags; wrote {} and {}",
                report.experiment,
                report.hard_asserts.len(),
                txt.display(),
                tsv.display()
            );
        }
    }
    Ok(if report.all_hard_asserts_pass() { Verdict::Ok } else { Verdict::HardAssertFailed })
}

fn catalog_text() -> String {
    let mut s = format!("discrete measures\n  uniform:<n>  (1 <= n <= {})\n", measures::MAX_UNIFORM_LEN);
    s.push_str("functions\n");
    for f in staged::function_catalog() {
        s.push_str(&format!("  {}  cost={}\n", f.label(), f.description_cost()));
    }
    s.push_str("  thm2  (built from --b, --c and the cached Ω prefix)\n");
    s.push_str("tree measures\n");
    for l in continuous::TREE_MEASURES {
        s.push_str(&format!("  {l}\n"));
    }
    s.push_str("monotone maps\n");
    for m in continuous::map_catalog() {
        s.push_str(&format!("  {}\n", m.label()));
    }
    s.push_str("tests (weights 1/2, 1/4, 1/8)\n  one\n  ratio-uniform\n  ratio-ones\n");
    s
}
