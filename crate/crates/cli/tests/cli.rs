use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rankshap::io::ExplanationDocument;

const BIN: &str = env!("CARGO_BIN_EXE_rankshap");

fn admissions() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/admissions.csv")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

fn base<'a>(data: &'a str) -> Vec<&'a str> {
    vec!["--data", data, "--ids", "--weights", "0.4,0.4,0.2"]
}

fn with<'a>(cmd: &'a str, data: &'a str, rest: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![cmd];
    v.extend(base(data));
    v.extend_from_slice(rest);
    v
}

#[test]
fn explain_bob_score() {
    let data = admissions();
    let data = data.to_str().unwrap();
    let text = ok(&with("explain", data, &["--qoi", "score", "--item", "Bob"]));
    let doc = ExplanationDocument::from_json(&text).unwrap();
    let e = &doc.explanations::<f64>()[0];
    assert!((e.total() - (4.6 - 28.2 / 7.0)).abs() < 1e-9);
    assert_eq!(doc.records[0].id.as_deref(), Some("Bob"));
    // Index selectors work too.
    assert_eq!(ok(&with("explain", data, &["--qoi", "score", "--item", "0"])), text);
}

#[test]
fn exit_codes() {
    let data = admissions();
    let data = data.to_str().unwrap();
    assert_eq!(code(&with("explain", data, &["--qoi", "topk", "--k", "0", "--item", "Leo"])), 1);
    assert_eq!(code(&with("explain", data, &["--qoi", "rank", "--item", "Nobody"])), 1);
    assert_eq!(code(&with("explain", data, &["--qoi", "rank", "--item", "Leo", "--bogus"])), 1);
    assert_eq!(code(&with("explain", data, &["--qoi", "pairwise-rank", "--item", "Leo"])), 1);
    assert_eq!(code(&["explain", "--data", "/nonexistent.csv", "--weights", "1", "--qoi", "rank", "--item", "0"]), 2);

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("f.toml");
    std::fs::write(&cfg, "kind = \"expression\"\nexpression = \"gpa / (sat - sat)\"\n").unwrap();
    let args = ["explain", "--data", data, "--ids", "--scorer", cfg.to_str().unwrap(), "--qoi", "score", "--item", "Bob"];
    assert_eq!(code(&args), 3);
    std::fs::write(&cfg, "kind = \"bogus\"\n").unwrap();
    assert_eq!(code(&args), 1);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn scorer_config_and_percent_k() {
    let data = admissions();
    let data = data.to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("f.toml");
    std::fs::write(&cfg, "kind = \"linear\"\nweights = [0.4, 0.4, 0.2]\n").unwrap();
    let a = ok(&["explain", "--data", data, "--ids", "--scorer", cfg.to_str().unwrap(), "--qoi", "topk", "--k", "25%", "--item", "Cal"]);
    let b = ok(&with("explain", data, &["--qoi", "topk", "--k", "2", "--item", "Cal"]));
    assert_eq!(a, b);
    let doc = ExplanationDocument::from_json(&a).unwrap();
    assert_eq!(doc.qoi, rankshap::QoiKind::TopK(2));
    assert!((doc.records[0].reconstruction - 1.0).abs() < 1e-9);
}

#[test]
fn explain_all_is_deterministic_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let synth = dir.path().join("d3.csv");
    ok(&["synth", "--builtin", "D3", "--n", "150", "--seed", "5", "--out", synth.to_str().unwrap()]);
    let s = synth.to_str().unwrap();
    let common = ["explain-all", "--data", s, "--weights", "0.5,0.5", "--qoi", "rank", "--samples", "12", "--seed", "9"];
    let one = ok(&[&common[..], &["--jobs", "1"]].concat());
    let eight = ok(&[&common[..], &["--jobs", "8"]].concat());
    assert_eq!(one, eight);
    assert_eq!(one, ok(&[&common[..], &["--jobs", "1"]].concat()));
    let pairs = ["explain-all", "--data", s, "--weights", "0.5,0.5", "--qoi", "pairwise-rank", "--max-pairs", "20", "--seed", "2"];
    let p1 = ok(&[&pairs[..], &["--jobs", "1"]].concat());
    assert_eq!(p1, ok(&[&pairs[..], &["--jobs", "8"]].concat()));
    assert_eq!(ExplanationDocument::from_json(&p1).unwrap().records.len(), 20);
}

#[test]
fn aggregate_metrics_render() {
    let data = admissions();
    let data = data.to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("rank.json");
    let doc_s = doc.to_str().unwrap();
    ok(&with("explain-all", data, &["--qoi", "rank", "--out", doc_s]));

    let one = ok(&with("aggregate", data, &["--expl", doc_s, "--strata", "1"]));
    assert_eq!(one.lines().count(), 1 + 3);
    assert!(one.lines().nth(1).unwrap().starts_with("1,gpa,8,"));
    let plot = dir.path().join("plot.json");
    let all = ok(&with("aggregate", data, &["--expl", doc_s, "--strata", "8", "--plot-out", plot.to_str().unwrap()]));
    for line in all.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[2], "1");
        assert!(f[3] == f[4] && f[4] == f[5]);
    }
    let plot: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(plot).unwrap()).unwrap();
    assert_eq!(plot["boxes"].as_array().unwrap().len(), 24);
    assert_eq!(code(&with("aggregate", data, &["--expl", doc_s, "--strata", "9"])), 1);
    assert_eq!(ok(&with("aggregate", data, &["--qoi", "rank", "--strata", "1"])), one);

    let scatter = dir.path().join("scatter.csv");
    let report = ok(&with("metrics", data, &["--expl", doc_s, "--expl", doc_s, "--nbr-count", "2", "--plot-out", scatter.to_str().unwrap()]));
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    assert_eq!(report["documents"][0]["fidelity"].as_f64().unwrap(), 1.0);
    for kernel in report["agreement"].as_array().unwrap() {
        for row in kernel[1].as_array().unwrap() {
            assert!(row.as_array().unwrap().iter().all(|x| x.as_f64() == Some(1.0)));
        }
    }
    let sens = &report["documents"][0]["sensitivity"][0];
    assert_eq!(sens[0], "kendall");
    assert!((sens[1].as_f64().unwrap() - 7.0 / 12.0).abs() < 1e-12);
    let scatter = std::fs::read_to_string(scatter).unwrap();
    assert!(scatter.starts_with("reference,neighbor,expl_dist,rank_dist,feat_dist\n"));
    assert_eq!(scatter.lines().count(), 17);

    // A document computed on other data is rejected.
    let other = dir.path().join("other.csv");
    std::fs::write(&other, std::fs::read_to_string(data).unwrap().replace("Osi,3,3,3", "Osi,3,3,2")).unwrap();
    assert_eq!(code(&with("metrics", other.to_str().unwrap(), &["--expl", doc_s])), 1);

    let svg = ok(&["render", "--expl", doc_s, "--data", data, "--ids", "--item", "Leo", "--display-sign", "presentation"]);
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("rank: Leo"));
}

fn attr(tag: &str, name: &str) -> f64 {
    let key = format!(" {name}=\"");
    let at = tag.find(&key).unwrap() + key.len();
    tag[at..].split('"').next().unwrap().parse().unwrap()
}

#[test]
fn waterfall_geometry() {
    let data = admissions();
    let data = data.to_str().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("osi.json");
    ok(&with("explain", data, &["--qoi", "rank", "--item", "Osi", "--out", out.to_str().unwrap(), "--render", "waterfall"]));
    let doc = ExplanationDocument::read(&out).unwrap();
    let svg = std::fs::read_to_string(out.with_extension("svg")).unwrap();
    let root = svg.lines().next().unwrap();
    let (origin, scale) = (attr(root, "data-origin"), attr(root, "data-scale"));
    let rec = &doc.records[0];
    let arrows: Vec<&str> = svg.lines().filter(|l| l.contains("class=\"contribution\"")).collect();
    assert_eq!(arrows.len(), 3);
    let mut phis: Vec<f64> = arrows.iter().map(|a| attr(a, "data-phi")).collect();
    for a in &arrows {
        assert!(((attr(a, "x2") - attr(a, "x1")).abs() - scale * attr(a, "data-phi").abs()).abs() < 1e-9);
    }
    let fin = svg.lines().find(|l| l.contains("class=\"final\"")).unwrap();
    assert!(((attr(fin, "x1") - origin) / scale - rec.reconstruction).abs() < 1e-9);
    let mut want = rec.contributions.clone();
    phis.sort_by(f64::total_cmp);
    want.sort_by(f64::total_cmp);
    assert_eq!(phis, want);
}

#[test]
fn synth_command() {
    let a = ok(&["synth", "--builtin", "D3", "--seed", "7"]);
    assert_eq!(a, ok(&["synth", "--builtin", "D3", "--seed", "7"]));
    assert_eq!(a.lines().next(), Some("x1,x2"));
    assert_eq!(a.lines().count(), 2001);
    let d1 = ok(&["synth", "--builtin", "D1", "--n", "300"]);
    assert!(d1.lines().skip(1).all(|l| matches!(l.split(',').nth(1), Some("0" | "1"))));
    assert_eq!(code(&["synth", "--builtin", "D9"]), 1);
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("s.toml");
    std::fs::write(&spec, "n = 4\nfeatures = [{ kind = \"uniform\", lo = 1.0, hi = 1.0 }]\n").unwrap();
    assert_eq!(ok(&["synth", "--spec", spec.to_str().unwrap()]), "x1\n1\n1\n1\n1\n");
}

#[test]
fn bench_exact_row() {
    let data = admissions();
    let data = data.to_str().unwrap();
    let csv = ok(&with("bench", data, &["--qoi", "rank", "--sweep-samples", "3,exact", "--sweep-coalitions", "1,unbounded"]));
    let rows: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    let exact = rows.iter().find(|r| r[0] == "exact" && r[1] == "unbounded").unwrap();
    assert_eq!(exact[4], "1.000");
    assert_eq!(&exact[5..], ["1", "1", "1", "1"]);
    assert_eq!(code(&with("bench", data, &["--qoi", "rank", "--sweep-coalitions", "3"])), 1);
    assert_eq!(code(&with("bench", data, &["--qoi", "rank", "--sweep-samples", "8"])), 1);
}
