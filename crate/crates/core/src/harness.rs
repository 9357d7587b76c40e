//! The discrete conservation checks, assembled from enumeration tables,
//! measures and staged functions.
//!
//! Each check returns typed rows plus a [`Report`]. Exact stage-level
//! identities (test sums, mass conservation, algebraic identities) are hard
//! asserts; asymptotic inequalities are compared against a slack and only
//! ever flagged.

use std::fmt::Write as _;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::bits::{pair_encode, BitString};
use crate::enumeration::{EnumerationTable, OmegaPrefix};
use crate::error::Result;
use crate::exact::{ceil_log2, code_length, int, pow2, show, Rational};
use crate::measures::{
    deficiency, image_measure, thm1_test, thm3_test, thm4_semimeasure, uniform_n, verify_m_test,
    DiscreteSemiMeasure,
};
use crate::staged::{thm2_b, Evaluable};

/// Default allowance for `O(1)` terms in the soft checks.
pub const DEFAULT_SLACK: i64 = 8;

/// `2⌈log2(bc)⌉ + 8`.
pub fn thm2_slack(b: usize, c: usize) -> i64 {
    2 * ceil_log2(&int((b * c) as i64)) + 8
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HardAssert {
    pub name: String,
    pub pass: bool,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Consistency {
    pub name: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    pub experiment: String,
    pub version_id: String,
    pub config: Vec<(String, String)>,
    pub hard_asserts: Vec<HardAssert>,
    pub consistency: Vec<Consistency>,
    pub notes: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(experiment: impl Into<String>, version_id: impl Into<String>) -> Self {
        Report { experiment: experiment.into(), version_id: version_id.into(), ..Default::default() }
    }

    pub fn config(&mut self, key: &str, value: impl ToString) {
        self.config.push((key.into(), value.to_string()));
    }

    pub fn hard_assert(&mut self, name: &str, pass: bool, value: impl ToString) {
        self.hard_asserts.push(HardAssert { name: name.into(), pass, value: value.to_string() });
    }

    pub fn consistency(&mut self, name: &str, ok: bool, detail: impl ToString) {
        self.consistency.push(Consistency { name: name.into(), ok, detail: detail.to_string() });
    }

    pub fn note(&mut self, note: impl ToString) {
        self.notes.push(note.to_string());
    }

    pub fn all_hard_asserts_pass(&self) -> bool {
        self.hard_asserts.iter().all(|h| h.pass)
    }

    pub fn flagged(&self) -> bool {
        self.consistency.iter().any(|c| !c.ok)
    }

    fn header(&self, prefix: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{prefix}experiment {}", self.experiment);
        let _ = writeln!(s, "{prefix}machine {}", self.version_id);
        for (k, v) in &self.config {
            let _ = writeln!(s, "{prefix}config {k}={v}");
        }
        s
    }

    /// Structured text: header, hard asserts, consistency flags, notes, rows.
    pub fn render_text(&self) -> String {
        let mut s = self.header("");
        for h in &self.hard_asserts {
            let _ = writeln!(s, "hard_assert {} {} {}", h.name, if h.pass { "PASS" } else { "FAIL" }, h.value);
        }
        for c in &self.consistency {
            let _ = writeln!(s, "consistency {} {} {}", c.name, if c.ok { "ok" } else { "FLAG" }, c.detail);
        }
        for n in &self.notes {
            let _ = writeln!(s, "note {n}");
        }
        for row in &self.rows {
            let fields: Vec<_> = self.columns.iter().zip(row).map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(s, "row {}", fields.join(" "));
        }
        s
    }

    /// Tab-separated table with the header echoed as `#` lines.
    pub fn render_tsv(&self) -> String {
        let mut s = self.header("# ");
        let _ = writeln!(s, "{}", self.columns.join("\t"));
        for row in &self.rows {
            let _ = writeln!(s, "{}", row.join("\t"));
        }
        s
    }
}

/// The plain table and the one enumerated with an `H_t` prefix as aux.
#[derive(Debug, Clone, Copy)]
pub struct Tables<'a> {
    pub plain: &'a EnumerationTable,
    pub with_h: &'a EnumerationTable,
}

impl<'a> Tables<'a> {
    pub fn new(plain: &'a EnumerationTable, with_h: &'a EnumerationTable) -> Self {
        Tables { plain, with_h }
    }

    fn k(&self, x: &BitString) -> Option<i64> {
        self.plain.k_approx(x).map(i64::from)
    }

    fn k_h(&self, x: &BitString) -> Option<i64> {
        self.with_h.k_approx(x).map(i64::from)
    }

    /// `I(x;H_t) = K(x) − K(x|H_t)`.
    fn info_h(&self, x: &BitString) -> Option<i64> {
        Some(self.k(x)? - self.k_h(x)?)
    }

    /// `I(x:y) = K(x) + K(y) − K(⟨x⟩⟨y⟩)`.
    fn mutual(&self, x: &BitString, y: &BitString) -> Option<i64> {
        Some(self.k(x)? + self.k(y)? - self.k(&pair_encode(x, y))?)
    }

    fn start(&self, experiment: &str) -> Report {
        let mut r = Report::new(experiment, self.plain.version_id());
        r.config("plain", self.plain.budget());
        r.config("with_h", self.with_h.budget());
        r
    }
}

fn cell(v: Option<i64>) -> String {
    v.map_or_else(|| "-".into(), |v| v.to_string())
}

fn domain_label(domain: &[BitString]) -> String {
    let max = domain.iter().map(BitString::len).max().unwrap_or(0);
    format!("{} strings, max length {max}", domain.len())
}

/// Wrapper so every check returns the same shape.
#[derive(Debug, Clone)]
pub struct Checked<R> {
    pub rows: Vec<R>,
    pub report: Report,
}

/// Flag rows whose gap exceeds the slack; rows with undefined gaps are
/// counted separately.
fn gap_consistency<R>(report: &mut Report, rows: &[R], gap: impl Fn(&R) -> Option<i64>, slack: i64) {
    let gaps: Vec<i64> = rows.iter().filter_map(&gap).collect();
    let over = gaps.iter().filter(|&&g| g > slack).count();
    let max = gaps.iter().max().map_or("-".into(), |g| g.to_string());
    report.consistency(
        "gap-within-slack",
        over == 0,
        format!("max_gap={max} slack={slack} rows_over={over} defined={} undefined={}", gaps.len(), rows.len() - gaps.len()),
    );
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Prop1Row {
    pub x: BitString,
    pub k: Option<i64>,
    pub k_h: Option<i64>,
    /// `⌈−log m_t(x)⌉`.
    pub code_len_m: Option<i64>,
    pub info: Option<i64>,
    /// `d_m(x|H_t) = ⌈−log m_t(x)⌉ − K(x|H_t)`.
    pub d_m: Option<i64>,
    /// `d_m(x|H_t) − I(x;H_t)`.
    pub gap: Option<i64>,
}

pub fn check_prop1(domain: &[BitString], tables: Tables) -> Checked<Prop1Row> {
    let rows: Vec<Prop1Row> = domain
        .par_iter()
        .map(|x| {
            let m = tables.plain.m_approx(x);
            let code_len_m = (!m.is_zero()).then(|| code_length(&m));
            let k = tables.k(x);
            let k_h = tables.k_h(x);
            let info = tables.info_h(x);
            let d_m = code_len_m.zip(k_h).map(|(c, kh)| c - kh);
            let gap = d_m.zip(info).map(|(d, i)| d - i);
            Prop1Row { x: x.clone(), k, k_h, code_len_m, info, d_m, gap }
        })
        .collect();

    let mut report = tables.start("prop1");
    report.config("domain", domain_label(domain));
    let defined: Vec<_> = rows.iter().filter(|r| r.gap.is_some()).collect();
    let identity = defined.iter().all(|r| r.gap == r.code_len_m.zip(r.k).map(|(c, k)| c - k));
    report.hard_assert("gap-identity", identity, format!("rows={}", defined.len()));
    let max_gap = defined.iter().filter_map(|r| r.gap).max();
    report.hard_assert("gap-nonpositive", max_gap.map_or(true, |g| g <= 0), format!("max_gap={}", cell(max_gap)));
    report.consistency(
        "complexities-defined",
        defined.len() == rows.len(),
        format!("defined={} undefined={}", defined.len(), rows.len() - defined.len()),
    );
    let mut hist = std::collections::BTreeMap::new();
    for g in defined.iter().filter_map(|r| r.gap) {
        *hist.entry(g).or_insert(0usize) += 1;
    }
    let hist: Vec<_> = hist.iter().map(|(g, n)| format!("{g}:{n}")).collect();
    report.note(format!("gap histogram {}", hist.join(" ")));
    report.columns = ["x", "K", "K_H", "code_len_m", "I_H", "d_m_H", "gap"].map(String::from).to_vec();
    report.rows = rows
        .iter()
        .map(|r| vec![r.x.to_string(), cell(r.k), cell(r.k_h), cell(r.code_len_m), cell(r.info), cell(r.d_m), cell(r.gap)])
        .collect();
    Checked { rows, report }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thm1Row {
    pub x: BitString,
    pub bx: BitString,
    pub d_p: Option<i64>,
    pub d_bp: Option<i64>,
    pub info: Option<i64>,
    /// `d_{Bp}(B(x)) − d_p(x) − I(x;H_t)`.
    pub gap: Option<i64>,
}

pub fn check_thm1(
    f: &dyn Evaluable,
    p: &DiscreteSemiMeasure,
    domain: &[BitString],
    tables: Tables,
    slack: i64,
) -> Checked<Thm1Row> {
    let image = image_measure(f, p);
    let rows: Vec<Thm1Row> = domain
        .par_iter()
        .map(|x| {
            let bx = f.eval(x);
            let d_p = deficiency(p, x, tables.plain).ok();
            let d_bp = deficiency(&image, &bx, tables.plain).ok();
            let info = tables.info_h(x);
            let gap = (|| Some(d_bp? - d_p? - info?))();
            Thm1Row { x: x.clone(), bx, d_p, d_bp, info, gap }
        })
        .collect();

    let mut report = tables.start("thm1");
    report.config("function", f.label());
    report.config("measure", &p.label);
    report.config("domain", domain_label(domain));
    report.config("slack", slack);
    let built = thm1_test(p, f, tables.plain);
    let verdict = verify_m_test(tables.plain, &built.test);
    report.hard_assert("thm1-test-sum", verdict.pass, show(&verdict.sum));
    let conserved = image.mass() + image.lost_mass() == p.mass();
    report.hard_assert(
        "image-mass-conservation",
        conserved,
        format!("image={} lost={} source={}", show(&image.mass()), show(image.lost_mass()), show(&p.mass())),
    );
    report.note(format!("zero denominators {}", built.zero_denominators.len()));
    report.note(format!(
        "description costs B={} p={}",
        f.description_cost(),
        p.description_cost
    ));
    gap_consistency(&mut report, &rows, |r| r.gap, slack);
    report.columns = ["x", "B(x)", "d_p", "d_Bp", "I_H", "gap"].map(String::from).to_vec();
    report.rows = rows
        .iter()
        .map(|r| vec![r.x.to_string(), r.bx.to_string(), cell(r.d_p), cell(r.d_bp), cell(r.info), cell(r.gap)])
        .collect();
    Checked { rows, report }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thm3Row {
    pub x: BitString,
    pub y: BitString,
    pub bx: BitString,
    pub i_bx_y: Option<i64>,
    pub i_x_y: Option<i64>,
    pub i_pair_h: Option<i64>,
    /// `I(B(x):y) − I(x:y) − I(⟨x,y⟩;H_t)`.
    pub gap: Option<i64>,
}

pub fn check_thm3(
    f: &dyn Evaluable,
    pairs: &[(BitString, BitString)],
    tables: Tables,
    slack: i64,
) -> Result<Checked<Thm3Row>> {
    let rows: Vec<Thm3Row> = pairs
        .par_iter()
        .map(|(x, y)| {
            let bx = f.eval(x);
            let i_bx_y = tables.mutual(&bx, y);
            let i_x_y = tables.mutual(x, y);
            let i_pair_h = tables.info_h(&pair_encode(x, y));
            let gap = (|| Some(i_bx_y? - i_x_y? - i_pair_h?))();
            Thm3Row { x: x.clone(), y: y.clone(), bx, i_bx_y, i_x_y, i_pair_h, gap }
        })
        .collect();

    let mut report = tables.start("thm3");
    report.config("function", f.label());
    report.config("pairs", pairs.len());
    report.config("slack", slack);
    let test = thm3_test(f, tables.plain, pairs)?;
    report.hard_assert("thm3-calibrated-sum", test.sum == Rational::one(), show(&test.sum));
    report.note(format!("calibration c={}", show(&test.c)));
    report.note(format!(
        "defined test entries {} zero denominators {}",
        test.uncalibrated.len(),
        test.zero_denominators.len()
    ));
    gap_consistency(&mut report, &rows, |r| r.gap, slack);
    report.columns = ["x", "y", "B(x)", "I_Bx_y", "I_x_y", "I_pair_H", "gap"].map(String::from).to_vec();
    report.rows = rows
        .iter()
        .map(|r| {
            vec![
                r.x.to_string(),
                r.y.to_string(),
                r.bx.to_string(),
                cell(r.i_bx_y),
                cell(r.i_x_y),
                cell(r.i_pair_h),
                cell(r.gap),
            ]
        })
        .collect();
    Ok(Checked { rows, report })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Thm4Row {
    pub x: BitString,
    pub fx: BitString,
    pub i_fx_h: Option<i64>,
    pub i_x_h: Option<i64>,
    /// `I(f(x);H_t) − I(x;H_t)`.
    pub gap: Option<i64>,
}

pub fn check_thm4(f: &dyn Evaluable, domain: &[BitString], tables: Tables, slack: i64) -> Result<Checked<Thm4Row>> {
    let rows: Vec<Thm4Row> = domain
        .par_iter()
        .map(|x| {
            let fx = f.eval(x);
            let i_fx_h = tables.info_h(&fx);
            let i_x_h = tables.info_h(x);
            let gap = i_fx_h.zip(i_x_h).map(|(a, b)| a - b);
            Thm4Row { x: x.clone(), fx, i_fx_h, i_x_h, gap }
        })
        .collect();

    let mut report = tables.start("thm4");
    report.config("function", f.label());
    report.config("domain", domain_label(domain));
    report.config("slack", slack);
    let s = thm4_semimeasure(f, tables.plain, tables.with_h, domain)?;
    let total = s.measure.mass();
    report.hard_assert("thm4-calibrated-sum", total == Rational::one(), show(&total));
    report.note(format!("calibration c={}", show(&s.c)));
    report.note(format!("zero denominators {}", s.zero_denominators.len()));
    gap_consistency(&mut report, &rows, |r| r.gap, slack);
    report.columns = ["x", "f(x)", "I_fx_H", "I_x_H", "gap"].map(String::from).to_vec();
    report.rows = rows
        .iter()
        .map(|r| vec![r.x.to_string(), r.fx.to_string(), cell(r.i_fx_h), cell(r.i_x_h), cell(r.gap)])
        .collect();
    Ok(Checked { rows, report })
}

/// Everything measured by the exotic-string pipeline.
#[derive(Debug, Clone)]
pub struct Thm2Outcome {
    pub b: usize,
    pub c: usize,
    pub omega: OmegaPrefix,
    /// `0^b Ω_c`.
    pub x: BitString,
    pub bx: BitString,
    pub d_p: Option<i64>,
    pub d_bp: Option<i64>,
    pub info: Option<i64>,
    /// `d_{Bp}(B(x)) − d_p(x)`.
    pub diff: Option<i64>,
    /// `⌈−log Bp(B(x))⌉ − ⌈−log p(x)⌉`.
    pub code_len_term: i64,
    /// `K(x) − K(B(x))`.
    pub k_term: Option<i64>,
    pub lost_mass: Rational,
    pub slack: i64,
    pub report: Report,
}

/// Build `B` from a fixed Ω guess and measure the deficiency jump at
/// `x = 0^b Ω_c`. Ω comes from `omega`, complexities from `tables`.
pub fn thm2_pipeline(
    b: usize,
    c: usize,
    omega: &OmegaPrefix,
    omega_budget: &str,
    tables: Tables,
    slack: i64,
) -> Result<Thm2Outcome> {
    let f = thm2_b(b, c, vec![omega.bits.clone()])?.at_stage(0);
    let p = uniform_n(b + c)?;
    let image = image_measure(&f, &p);
    let x = BitString::zeros(b).concat(&omega.bits);
    let bx = f.eval(&x);

    let d_p = deficiency(&p, &x, tables.plain).ok();
    let d_bp = deficiency(&image, &bx, tables.plain).ok();
    let info = tables.info_h(&x);
    let diff = d_bp.zip(d_p).map(|(a, b)| a - b);
    let code_len_term = code_length(&image.value(&bx)) - code_length(&p.value(&x));
    let k_term = tables.k(&x).zip(tables.k(&bx)).map(|(a, b)| a - b);

    let mut report = tables.start("thm2");
    report.config("b", b);
    report.config("c", c);
    report.config("omega_budget", omega_budget);
    report.config("slack", slack);
    report.note(format!("omega_c={} converged={}", omega.bits, omega.converged));
    report.note(format!("x={x} B(x)={bx}"));

    let conserved = image.mass() + image.lost_mass() == p.mass();
    report.hard_assert("image-mass-conservation", conserved, format!("lost={}", show(image.lost_mass())));
    let above = BitString::all_of_length(b + c)
        .filter(|z| crate::bits::numeric_less(&omega.bits, &z.suffix_after(b)).unwrap_or(false))
        .count();
    let expected_lost = int(above as i64) * pow2(-((b + c) as i64));
    report.hard_assert("lost-mass-count", *image.lost_mass() == expected_lost, show(&expected_lost));
    let decomposes = diff.zip(k_term).map_or(true, |(d, k)| d == code_len_term + k);
    report.hard_assert(
        "difference-decomposition",
        decomposes,
        format!("diff={} code_len_term={code_len_term} k_term={}", cell(diff), cell(k_term)),
    );

    report.consistency("omega-converged", omega.converged, omega.bits.to_string());
    let within = diff.is_some_and(|d| (d - c as i64).abs() <= slack);
    report.consistency(
        "difference-near-c",
        within && omega.converged,
        format!("diff={} predicted={c} slack={slack}", cell(diff)),
    );
    let near = |v: Option<i64>, target: usize| v.is_some_and(|v| (v - target as i64).abs() <= slack);
    report.consistency("d_p-near-b", near(d_p, b), format!("d_p={} predicted={b}", cell(d_p)));
    report.consistency("d_Bp-near-b+c", near(d_bp, b + c), format!("d_Bp={} predicted={}", cell(d_bp), b + c));
    report.consistency("info-near-c", near(info, c), format!("I_H={} predicted={c}", cell(info)));

    report.columns = ["x", "B(x)", "d_p", "d_Bp", "diff", "code_len_term", "k_term", "I_H"]
        .map(String::from)
        .to_vec();
    report.rows = vec![vec![
        x.to_string(),
        bx.to_string(),
        cell(d_p),
        cell(d_bp),
        cell(diff),
        code_len_term.to_string(),
        cell(k_term),
        cell(info),
    ]];
    Ok(Thm2Outcome {
        b,
        c,
        omega: omega.clone(),
        x,
        bx,
        d_p,
        d_bp,
        info,
        diff,
        code_len_term,
        k_term,
        lost_mass: image.lost_mass().clone(),
        slack,
        report,
    })
}

/// All `(x, y)` with both in `domain`.
pub fn all_pairs(domain: &[BitString]) -> Vec<(BitString, BitString)> {
    domain.iter().flat_map(|x| domain.iter().map(move |y| (x.clone(), y.clone()))).collect()
}
