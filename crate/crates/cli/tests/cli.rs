use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use subgraph_space::derive_seed;
use subgraph_space::efrw::RateModel;
use subgraph_space::generators::{sample_gnp, simulate_efrw};
use subgraph_space_cli::formats::{read_collection, write_edge_list};
use subgraph_space_cli::manifest::Manifest;
use tempfile::TempDir;

fn sgspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sgspace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = sgspace(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn rows(csv_text: &str) -> Vec<Vec<String>> {
    csv_text
        .lines()
        .take_while(|l| !l.is_empty())
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn write_gnp_dir(dir: &Path, count: usize, n: usize, p: f64, seed: u64) {
    fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let g = sample_gnp(n, p, derive_seed(seed, i as u64)).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &g).unwrap();
        fs::write(dir.join(format!("g{i:04}.txt")), buf).unwrap();
    }
}

#[test]
fn census_of_a_directory() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("graphs");
    fs::create_dir(&dir).unwrap();
    fs::write(dir.join("a.txt"), "# triangle plus a tail\nx y\ny z\nz x\nz w\n").unwrap();
    fs::write(dir.join("b.txt"), "n 6\n0 1\n2 3\n").unwrap();
    fs::write(dir.join("c.txt"), "1 2\n2 3\n3 4\n4 5\n5 1\n").unwrap();
    let out = ok(&["census", s(&dir), "-k", "3"]);
    let header = out.lines().next().unwrap();
    assert_eq!(header, "id,n,density,s_000,s_001,s_011,s_111");
    let table = rows(&out);
    assert_eq!(table.len(), 3);
    assert_eq!(table[0][0], "a");
    assert_eq!(table[1][1], "6");
    for row in &table {
        let total: f64 = row[3..].iter().map(|x| x.parse::<f64>().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
    assert_eq!(table[0][6], "0.25");
}

#[test]
fn census_is_deterministic_and_skips_small_graphs() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("graphs");
    write_gnp_dir(&dir, 4, 30, 0.3, 1);
    fs::write(dir.join("tiny.txt"), "a b\n").unwrap();
    let args = ["census", s(&dir), "-k", "4", "--samples", "2000", "--seed", "9"];
    let first = sgspace(&args);
    let second = sgspace(&args);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(rows(&String::from_utf8(first.stdout.clone()).unwrap()).len(), 4);
    let warning = String::from_utf8(first.stderr).unwrap();
    assert!(warning.contains("skipping graph tiny"), "{warning}");

    let other = sgspace(&["census", s(&dir), "-k", "4", "--samples", "2000", "--seed", "10"]);
    assert_ne!(first.stdout, other.stdout);
}

#[test]
fn jsonl_and_edge_lists_agree() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("graphs");
    write_gnp_dir(&dir, 3, 12, 0.4, 2);
    let graphs = read_collection(&dir).unwrap();
    let jsonl = tmp.path().join("graphs.jsonl");
    let mut buf = Vec::new();
    subgraph_space_cli::formats::write_jsonl(&mut buf, &graphs).unwrap();
    fs::write(&jsonl, buf).unwrap();
    assert_eq!(
        ok(&["census", s(&dir), "--exact"]),
        ok(&["census", s(&jsonl), "--exact"])
    );
}

#[test]
fn malformed_input_reports_the_line() {
    let tmp = TempDir::new().unwrap();
    let bad = tmp.path().join("bad.txt");
    fs::write(&bad, "# comment\n1 2\n2 3 4\n").unwrap();
    let out = sgspace(&["census", s(&bad)]);
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    let line = err.lines().last().unwrap();
    assert!(line.starts_with("error: parse: "), "{line}");
    assert!(line.contains("bad.txt:3"), "{line}");

    let bad = tmp.path().join("bad.jsonl");
    fs::write(&bad, "{\"id\":\"a\",\"n\":3,\"edges\":[[0,1]]}\n{\"id\":\"b\",\"n\":2,\"edges\":[[0,5]]}\n").unwrap();
    let err = String::from_utf8(sgspace(&["census", s(&bad)]).stderr).unwrap();
    assert!(err.contains("bad.jsonl:2"), "{err}");

    let missing = sgspace(&["census", "/nonexistent/graphs"]);
    assert!(String::from_utf8(missing.stderr).unwrap().starts_with("error: io: "));
}

#[test]
fn simulate_writes_a_reproducible_collection() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sim");
    ok(&[
        "simulate", "--n", "50", "--nu", "1", "--lambda", "0", "--count", "500", "--seed", "4",
        "--outdir", s(&out),
    ]);
    let manifest: Manifest =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest.graphs.len(), 500);
    for (i, entry) in manifest.graphs.iter().enumerate() {
        assert_eq!(entry.seed, derive_seed(4, i as u64));
    }
    let graphs = read_collection(&out).unwrap();
    assert_eq!(graphs.len(), 500);
    let mean: f64 =
        graphs.iter().map(|g| g.graph.edge_density().unwrap()).sum::<f64>() / graphs.len() as f64;
    assert!((mean - 0.5).abs() <= 0.02, "mean density {mean}");

    let again = tmp.path().join("again");
    ok(&["simulate", "--manifest", s(&out.join("manifest.json")), "--outdir", s(&again)]);
    for entry in &manifest.graphs {
        assert_eq!(
            fs::read(out.join(&entry.file)).unwrap(),
            fs::read(again.join(&entry.file)).unwrap()
        );
    }
    assert_eq!(
        fs::read(out.join("manifest.json")).unwrap(),
        fs::read(again.join("manifest.json")).unwrap()
    );
}

#[test]
fn simulated_files_round_trip() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sim");
    ok(&[
        "simulate", "--n", "7", "--nu", "0.5", "--lambda", "1", "--count", "30", "--seed", "6",
        "--outdir", s(&out),
    ]);
    let model = RateModel::new(3, 0.5, 1.0).unwrap();
    let burn_in = subgraph_space::generators::default_burn_in(0.5);
    for (i, g) in read_collection(&out).unwrap().iter().enumerate() {
        let original = simulate_efrw(7, &model, burn_in, derive_seed(6, i as u64)).unwrap();
        assert_eq!(g.graph.canonical_code().unwrap(), original.canonical_code().unwrap());
    }
}

#[test]
fn simulate_rejects_an_unwritable_outdir() {
    let tmp = TempDir::new().unwrap();
    let file = tmp.path().join("occupied");
    fs::write(&file, "").unwrap();
    let out = sgspace(&["simulate", "--n", "5", "--outdir", s(&file.join("sub"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: io: "));
}

fn census_of(tmp: &TempDir, dir: &Path, name: &str, k: &str) -> PathBuf {
    let path = tmp.path().join(name);
    ok(&["census", s(dir), "-k", k, "--exact", "-o", s(&path)]);
    path
}

#[test]
fn fit_reports_both_objectives_and_a_backbone() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("gnp");
    fs::create_dir_all(&dir).unwrap();
    for i in 0..500u64 {
        let p = 0.1 + 0.8 * (i as f64 + 0.5) / 500.0;
        let g = sample_gnp(50, p, derive_seed(12, i)).unwrap();
        let mut buf = Vec::new();
        write_edge_list(&mut buf, &g).unwrap();
        fs::write(dir.join(format!("g{i:04}.txt")), buf).unwrap();
    }
    let census = census_of(&tmp, &dir, "gnp.csv", "3");
    let backbone = tmp.path().join("backbone.csv");
    let out = ok(&["fit", s(&census), "--backbone", s(&backbone)]);
    let summary = rows(&out);
    assert_eq!(out.lines().next().unwrap(), "lambda_opt,objective,objective_at_zero,graphs");
    let lambda: f64 = summary[0][0].parse().unwrap();
    let objective: f64 = summary[0][1].parse().unwrap();
    let at_zero: f64 = summary[0][2].parse().unwrap();
    assert!(lambda <= 0.2, "lambda {lambda}");
    assert!(objective <= at_zero);
    let table = fs::read_to_string(&backbone).unwrap();
    assert_eq!(rows(&table).len(), 99);
    assert!(table.starts_with("p,nu,s_000,s_001,s_011,s_111,gnp_s_000"));
}

#[test]
fn fit_rejects_an_empty_census() {
    let tmp = TempDir::new().unwrap();
    let empty = tmp.path().join("empty.csv");
    fs::write(&empty, "id,n,density,s_000,s_001,s_011,s_111\n").unwrap();
    let out = sgspace(&["fit", s(&empty)]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: invalid-input: "));

    let wrong = tmp.path().join("wrong.csv");
    fs::write(&wrong, "id,n,density,s_0,s_1\n").unwrap();
    let err = String::from_utf8(sgspace(&["fit", s(&wrong)]).stderr).unwrap();
    assert!(err.starts_with("error: parse: ") && err.contains("wrong.csv:1"), "{err}");
}

#[test]
fn bounds_envelopes_and_checks() {
    let out = ok(&["bounds", "-k", "3", "--grid", "101"]);
    let table = rows(&out);
    assert_eq!(table.len(), 404);
    let path_at_half = table.iter().find(|r| r[0] == "0.5" && r[2] == "011").unwrap();
    assert_eq!(path_at_half[4], "0.75");

    let start = std::time::Instant::now();
    let out = ok(&["bounds", "-k", "4", "--grid", "101"]);
    assert!(start.elapsed().as_secs_f64() < 60.0);
    assert_eq!(rows(&out).len(), 1111);

    let single = ok(&["bounds", "-k", "3", "--grid", "11", "--objective", "111"]);
    let table = rows(&single);
    assert_eq!(table.len(), 11);
    let p: f64 = table[3][0].parse().unwrap();
    let upper: f64 = table[3][4].parse().unwrap();
    assert!((upper - p.powf(1.5)).abs() < 1e-9);

    let tmp = TempDir::new().unwrap();
    let dir = tmp.path().join("gnp");
    write_gnp_dir(&dir, 10, 40, 0.35, 3);
    let census = census_of(&tmp, &dir, "c4.csv", "4");
    let out = ok(&["bounds", "-k", "4", "--grid", "3", "--check", s(&census)]);
    let report = out.split("\n\n").nth(1).unwrap();
    assert!(report.starts_with("id,n,density,tolerance,violations"));
    let lines: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(lines.len(), 10);
    assert!(lines.iter().all(|l| l.split(',').nth(4) == Some("0")));

    let bad = sgspace(&["bounds", "-k", "6"]);
    assert!(!bad.status.success());
}

fn split_collection(tmp: &TempDir, count: usize) -> (PathBuf, PathBuf) {
    let all = tmp.path().join("all");
    write_gnp_dir(&all, count, 30, 0.3, 21);
    let (a, b) = (tmp.path().join("left"), tmp.path().join("right"));
    fs::create_dir_all(&a).unwrap();
    fs::create_dir_all(&b).unwrap();
    for i in 0..count {
        let side = if derive_seed(99, i as u64) % 2 == 0 { &a } else { &b };
        let name = format!("g{i:04}.txt");
        fs::copy(all.join(&name), side.join(&name)).unwrap();
    }
    (a, b)
}

#[test]
fn classify_null_task_is_at_chance() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = split_collection(&tmp, 400);
    let out = ok(&["classify", s(&a), s(&b), "--features", "Triads", "--seed", "1"]);
    let table = rows(&out);
    assert_eq!(table[0][0], "left vs right");
    let mean: f64 = table[0][4].parse().unwrap();
    assert!((0.45..=0.55).contains(&mean), "accuracy {mean}");
    assert_eq!(out, ok(&["classify", s(&a), s(&b), "--features", "Triads", "--seed", "1"]));
}

#[test]
fn classify_separates_closure_strengths() {
    let tmp = TempDir::new().unwrap();
    let (lo, hi) = (tmp.path().join("lo"), tmp.path().join("hi"));
    for (dir, lambda, seed) in [(&lo, "0", "1"), (&hi, "0.5", "2")] {
        ok(&[
            "simulate", "--n", "24", "--nu", "0.15", "--lambda", lambda, "--count", "80",
            "--burn-in", "3", "--seed", seed, "--outdir", s(dir),
        ]);
    }
    let out = ok(&["classify", s(&lo), s(&hi), "--features", "Quads", "--features", "Edges"]);
    let table = rows(&out);
    let quads: f64 = table[0][4].parse().unwrap();
    assert!(quads >= 0.65, "quads accuracy {quads}");
}

#[test]
fn classify_runs_every_table_row() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = split_collection(&tmp, 40);
    let out = ok(&["classify", s(&a), s(&b), "--features", "table", "--folds", "3"]);
    let table = rows(&out);
    assert_eq!(table.len(), 11);
    let names: Vec<&str> = table.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(names, subgraph_space::classify::FeatureSpec::TABLE_ROWS);
    assert!(table[6][6].parse::<f64>().is_ok());

    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let out = sgspace(&["classify", s(&a), s(&empty)]);
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().starts_with("error: invalid-input: "));
}

#[test]
fn catalog_dump() {
    let out = ok(&["catalog", "-k", "4"]);
    let table = rows(&out);
    assert_eq!(table.len(), 11);
    let mass: u64 = table.iter().map(|r| r[4].parse::<u64>().unwrap()).sum();
    assert_eq!(mass, 64);
}
