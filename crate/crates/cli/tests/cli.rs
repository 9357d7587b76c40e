use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use aitlab::bits::BitString;
use aitlab::enumeration::{enumerate, Budget};
use aitlab::exact::{code_length, show};
use aitlab::measures::{deficiency, uniform_n};

fn aitlab(cache_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aitlab"))
        .env("AITLAB_CACHE_DIR", cache_dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn ok(o: Output) -> String {
    assert!(o.status.success(), "status {:?}\nstdout:\n{}\nstderr:\n{}", o.status, stdout(&o), String::from_utf8_lossy(&o.stderr));
    stdout(&o)
}

fn enumerate_into(dir: &Path, len: &str, steps: &str, aux: &str) {
    ok(aitlab(dir, &["enumerate", "--max-len", len, "--max-steps", steps, "--aux", aux]));
}

#[test]
fn empty_budget_gives_empty_cache() {
    let dir = tempfile::tempdir().unwrap();
    enumerate_into(dir.path(), "0", "100", "eps");
    let text = fs::read_to_string(dir.path().join("L0-T100-eps.cache")).unwrap();
    let lines: Vec<_> = text.lines().collect();
    assert!(lines[0].ends_with("records=0"), "{}", lines[0]);
    assert!(lines.len() <= 2);
}

#[test]
fn enumeration_is_byte_identical_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.cache");
    let b = dir.path().join("b.cache");
    for out in [&a, &b] {
        ok(aitlab(dir.path(), &["enumerate", "--max-len", "16", "--max-steps", "10000", "--out", out.to_str().unwrap()]));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let header = text.lines().next().unwrap();
    let count: usize = header.rsplit_once("records=").unwrap().1.parse().unwrap();
    assert_eq!(text.lines().count() - 1, count);
    assert_eq!(count, enumerate(&Budget::new(16, 10_000)).unwrap().len());
}

#[test]
fn complexity_matches_library_and_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    enumerate_into(dir.path(), "18", "100000", "eps");
    let budget = ["--max-len", "18", "--max-steps", "100000"];

    let out = ok(aitlab(dir.path(), &[&["complexity"][..], &budget, &["00000000", "--measure", "uniform:8"]].concat()));
    let table = enumerate(&Budget::new(18, 100_000)).unwrap();
    let x = BitString::zeros(8);
    let m = table.m_approx(&x);
    assert!(out.contains(&format!("K {}\n", table.k_approx(&x).unwrap())));
    assert!(out.contains(&format!("m {}\n", show(&m))));
    assert!(out.contains(&format!("code_len_m {}\n", code_length(&m))));
    let d = deficiency(&uniform_n(8).unwrap(), &x, &table).unwrap();
    assert!(out.contains(&format!("deficiency[uniform:8] {d}\n")), "{out}");

    let eps = ok(aitlab(dir.path(), &[&["complexity"][..], &budget, &["eps", "--measure", "uniform:8"]].concat()));
    assert!(eps.contains("deficiency[uniform:8] 0\n"));

    let absent = aitlab(dir.path(), &[&["complexity"][..], &budget, &["10110100"]].concat());
    assert_eq!(absent.status.code(), Some(3));

    let malformed = aitlab(dir.path(), &[&["complexity"][..], &budget, &["10x"]].concat());
    assert_eq!(malformed.status.code(), Some(2));
}

#[test]
fn missing_cache_names_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let o = aitlab(dir.path(), &["conserve", "thm1", "--max-len", "15", "--max-steps", "777"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("max_len=15 max_steps=777"), "{err}");
}

#[test]
fn conserve_thm1_identity_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    enumerate_into(dir.path(), "16", "10000", "eps");
    enumerate_into(dir.path(), "16", "10000", "halting:256");
    let run = |out: &str| {
        let out = dir.path().join(out);
        ok(aitlab(
            dir.path(),
            &["conserve", "thm1", "--max-len", "16", "--max-steps", "10000", "--measure", "uniform:3", "--out", out.to_str().unwrap()],
        ));
        (fs::read_to_string(out.with_extension("txt")).unwrap(), fs::read_to_string(out.with_extension("tsv")).unwrap())
    };
    let (txt, tsv) = run("r1");
    assert_eq!((txt.clone(), tsv.clone()), run("r2"));
    assert!(txt.contains("config function=identity"));
    assert!(!txt.contains("FAIL"));
    let rows: Vec<Vec<&str>> = tsv.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 8);
    for r in rows {
        assert_eq!(r[2], r[3], "d_p and d_Bp differ: {r:?}");
    }
}

#[test]
fn conserve_thm2_reports_convergence() {
    let dir = tempfile::tempdir().unwrap();
    enumerate_into(dir.path(), "18", "100000", "eps");
    enumerate_into(dir.path(), "18", "50000", "eps");
    enumerate_into(dir.path(), "18", "100000", "halting:256");
    let out = ok(aitlab(dir.path(), &["conserve", "thm2", "--b", "4", "--c", "3"]));
    assert!(out.contains("consistency omega-converged ok 001"), "{out}");
    assert!(out.contains("hard_assert image-mass-conservation PASS"));
    assert!(out.contains("config slack=16"));
}

#[test]
fn continuous_ratio_with_p_equal_m() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(aitlab(dir.path(), &["continuous", "ratio", "--measure", "mixture", "--depth", "10"]));
    assert!(!out.contains("FAIL"));
    for line in out.lines().filter(|l| l.starts_with("row ")) {
        assert!(line.contains("exceed_nodes=0 mass=0 "), "{line}");
    }
}

#[test]
fn continuous_thm5_and_thm6_pass() {
    let dir = tempfile::tempdir().unwrap();
    for which in ["thm5", "thm6"] {
        let out = ok(aitlab(dir.path(), &["continuous", which, "--map", "interleave", "--depth", "8"]));
        assert!(out.contains("PASS") && !out.contains("FAIL"), "{out}");
    }
    let bad = aitlab(dir.path(), &["continuous", "thm5", "--map", "nope"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn catalog_lists_everything() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(aitlab(dir.path(), &["catalog"]));
    for label in ["uniform:<n>", "drop-last", "thm2", "biased-1", "interleave", "machine-doubling", "ratio-ones"] {
        assert!(out.contains(label), "{label}");
    }
}
