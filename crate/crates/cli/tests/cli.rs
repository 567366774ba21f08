use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use commselect_core::graph::{parse_edge_list, parse_partition};
use commselect_core::measured_mixing;
use tempfile::TempDir;

fn commselect(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_commselect"))
        .current_dir(dir)
        .env_remove("COMMSELECT_SEED")
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn header_value(text: &str, key: &str) -> f64 {
    text.lines()
        .filter(|l| l.starts_with('#'))
        .flat_map(|l| l.split_whitespace())
        .find_map(|t| t.strip_prefix(&format!("{key}=")).map(|v| v.parse().unwrap()))
        .unwrap()
}

#[test]
fn generate_is_reproducible_and_self_describing() {
    let dir = TempDir::new().unwrap();
    let args = ["generate", "--mu-t", "0.1", "--mu-w", "0.1", "--seed", "8", "--edges", "a.txt", "--partition", "a.part"];
    ok(&commselect(dir.path(), &args));
    let first = (fs::read(dir.path().join("a.txt")).unwrap(), fs::read(dir.path().join("a.part")).unwrap());
    ok(&commselect(dir.path(), &args));
    assert_eq!(first.0, fs::read(dir.path().join("a.txt")).unwrap());
    assert_eq!(first.1, fs::read(dir.path().join("a.part")).unwrap());

    let text = String::from_utf8(first.0).unwrap();
    let g = parse_edge_list(&text).unwrap();
    let p = parse_partition(&String::from_utf8(first.1).unwrap()).unwrap();
    let (mu_t, mu_w) = measured_mixing(&g, &p);
    assert_eq!(mu_t, header_value(&text, "achieved_mu_t"));
    assert!((mu_w - header_value(&text, "achieved_mu_w")).abs() <= 1e-8);
}

#[test]
fn out_of_range_mixing_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = commselect(dir.path(), &["generate", "--mu-t", "1.2", "--edges", "a.txt", "--partition", "a.part"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("a.txt").exists());
    let out = commselect(dir.path(), &["sweep", "--mu-w-grid", "0.5,-0.1", "--out", "r.csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn single_cell_sweep_and_seed_sources() {
    let dir = TempDir::new().unwrap();
    let base = ["sweep", "--mu-t-grid", "0.1", "--mu-w-grid", "0.1", "--reps", "1", "--algorithms", "copra_uw"];
    let run = |extra: &[&str], env: Option<&str>, out: &str| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_commselect"));
        cmd.current_dir(dir.path()).env_remove("COMMSELECT_SEED").args(base).args(extra).args(["--out", out]);
        if let Some(seed) = env {
            cmd.env("COMMSELECT_SEED", seed);
        }
        ok(&cmd.output().unwrap());
        fs::read_to_string(dir.path().join(out)).unwrap()
    };
    let a = run(&[], None, "a.csv");
    assert_eq!(a.lines().count(), 2);
    assert!(dir.path().join("a.summary.csv").exists());
    assert_eq!(run(&[], None, "b.csv"), a);

    let flagged = run(&["--master-seed", "99"], None, "c.csv");
    assert_ne!(flagged, a);
    assert_eq!(run(&[], Some("99"), "d.csv"), flagged);

    fs::write(dir.path().join("cfg.txt"), "master_seed = 99\nworkers=1\n").unwrap();
    assert_eq!(run(&["--config", "cfg.txt"], None, "e.csv"), flagged);
    // the environment beats the config file
    assert_eq!(run(&["--config", "cfg.txt"], Some("5"), "f.csv"), run(&["--master-seed", "5"], None, "g.csv"));
}

/// Detail rows for one network scored by all four detectors.
fn network_rows(mu_t: f64, rep: usize, c: (f64, f64), scores: [f64; 4]) -> String {
    ["copra_uw", "copra_w", "infomap_uw", "infomap_w"]
        .iter()
        .zip(scores)
        .map(|(alg, s)| format!("{mu_t},0.1,{rep},{rep},{alg},ok,{s},{},{},{mu_t},0.1\n", c.0, c.1))
        .collect()
}

fn synthetic_results(with_none: bool) -> String {
    let mut text = String::from("mu_t,mu_w,rep,seed,algorithm,status,nmi,c_uw,c_w,achieved_mu_t,achieved_mu_w\n");
    for rep in 0..40 {
        let j = (rep % 8) as f64 * 0.005;
        text += &network_rows(0.1, rep, (0.8 + j, 0.8 + j), [0.9, 0.5, 0.9, 0.5]);
        text += &network_rows(0.5, rep, (0.2 + j, 0.8 - j), [0.5, 0.9, 0.5, 0.9]);
        if with_none {
            text += &network_rows(0.9, rep, (0.1 + j, 0.1 + j), [0.3, 0.4, 0.55, 0.2]);
        }
    }
    text
}

fn confusion(report: &str) -> Vec<Vec<usize>> {
    let mut lines = report.lines().skip_while(|l| !l.starts_with("true\\predicted"));
    lines.next().unwrap();
    lines.take(3).map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect()).collect()
}

#[test]
fn train_on_separable_results() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("r.csv"), synthetic_results(true)).unwrap();
    let args = ["train", "--results", "r.csv", "--model", "m.txt", "--report", "rep.txt"];
    ok(&commselect(dir.path(), &args));
    let report = fs::read_to_string(dir.path().join("rep.txt")).unwrap();
    let m = confusion(&report);
    for (t, row) in m.iter().enumerate() {
        for (p, &count) in row.iter().enumerate() {
            if t != p {
                assert_eq!(count, 0, "{report}");
            }
        }
    }
    // best score 0.55 sits below the threshold
    assert!(m[2][2] > 0);
    ok(&commselect(dir.path(), &args));
    assert_eq!(fs::read_to_string(dir.path().join("rep.txt")).unwrap(), report);
    assert!(fs::read_to_string(dir.path().join("m.txt")).unwrap().starts_with("commselect-svm v1\n"));

    fs::write(dir.path().join("r2.csv"), synthetic_results(false)).unwrap();
    let out = commselect(dir.path(), &["train", "--results", "r2.csv", "--model", "m2.txt", "--report", "rep2.txt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("none"));
}

#[test]
fn predict_prints_class_features_and_margins() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("r.csv"), synthetic_results(true)).unwrap();
    ok(&commselect(dir.path(), &["train", "--results", "r.csv", "--model", "m.txt", "--report", "rep.txt"]));
    fs::write(dir.path().join("g.txt"), "0 1\n1 2\n0 2\n2 3\n3 4\n4 5\n3 5\n").unwrap();
    let args = ["predict", "--model", "m.txt", "--graph", "g.txt", "--partition", "p.txt"];
    let first = ok(&commselect(dir.path(), &args));
    assert_eq!(first, ok(&commselect(dir.path(), &args)));
    let field = |key: &str| first.lines().find_map(|l| l.strip_prefix(&format!("{key} "))).unwrap().to_string();
    assert_eq!(field("c_uw"), field("c_w"));
    assert!(["weighted", "unweighted", "none"].contains(&field("class").as_str()));
    assert_eq!(first.lines().filter(|l| l.starts_with("margin ")).count(), 3);
    assert_eq!(parse_partition(&fs::read_to_string(dir.path().join("p.txt")).unwrap()).unwrap().node_count(), 6);

    fs::write(dir.path().join("loop.txt"), "0 1\n1 1\n").unwrap();
    let out = commselect(dir.path(), &["predict", "--model", "m.txt", "--graph", "loop.txt"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("self"), "{}", String::from_utf8_lossy(&out.stderr));

    fs::write(dir.path().join("bad.txt"), "commselect-svm v1\nthreshold x\n").unwrap();
    assert!(!commselect(dir.path(), &["predict", "--model", "bad.txt", "--graph", "g.txt"]).status.success());
}

fn constant_model(bias: [f64; 3]) -> String {
    format!(
        "commselect-svm v1\nmean 0 0\nstd 1 1\npair weighted unweighted 0 0 {}\npair weighted none 0 0 {}\n\
         pair unweighted none 0 0 {}\nhyper 1 200 0\nthreshold 0.6\n",
        bias[0], bias[1], bias[2]
    )
}

#[test]
fn report_with_degenerate_models() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("r.csv"), synthetic_results(true)).unwrap();
    fs::write(dir.path().join("w.txt"), constant_model([1.0, 1.0, 1.0])).unwrap();
    fs::write(dir.path().join("n.txt"), constant_model([1.0, -1.0, -1.0])).unwrap();

    ok(&commselect(dir.path(), &["report", "--results", "r.csv", "--model", "w.txt", "--out", "w.csv"]));
    let w = fs::read_to_string(dir.path().join("w.csv")).unwrap();
    assert_eq!(w.lines().next().unwrap(), "mu_t,mu_w,networks,best_weighted,best_unweighted,selected,none_predictions");
    for line in w.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[5], f[3]);
        assert_eq!(f[6], "0");
    }
    assert!(dir.path().join("w.curves.csv").exists());

    ok(&commselect(dir.path(), &["report", "--results", "r.csv", "--model", "n.txt", "--out", "n.csv"]));
    let n = fs::read_to_string(dir.path().join("n.csv")).unwrap();
    for line in n.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[5], f[4]);
        assert_eq!(f[6], f[2]);
    }
    let again = commselect(dir.path(), &["report", "--results", "r.csv", "--model", "n.txt", "--out", "n2.csv"]);
    ok(&again);
    assert_eq!(fs::read_to_string(dir.path().join("n2.csv")).unwrap(), n);
}
