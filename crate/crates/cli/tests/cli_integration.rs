//! End-to-end checks of the binary and the family registry: the golden
//! config suite passes, outputs are byte-reproducible, malformed configs die
//! with field diagnostics on exit code 2, and every catalog entry round-trips
//! through its own template.

use std::path::PathBuf;
use std::process::Command;

use ratelab_cli::config::ExperimentConfig;
use ratelab_cli::families::catalog;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ratelab"))
}

fn scratch_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("ratelab-test-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(format!("{name}.toml"))
}

#[test]
fn catalog_has_all_seventeen_families() {
    let ids: Vec<&str> = catalog().iter().map(|f| f.id).collect();
    assert_eq!(ids.len(), 17);
    for expected in [
        "imm-ld",
        "imm-weak",
        "imm-md",
        "imm-explicit-cases",
        "levy-ld",
        "levy-weak",
        "levy-md",
        "levy-inequality",
        "poisson-ld",
        "poisson-weak",
        "poisson-md",
        "poisson-inequality",
        "contraction-ld",
        "contraction-weak",
        "contraction-md",
        "logistic-example",
        "skew-example",
    ] {
        assert!(ids.contains(&expected), "missing family {expected}");
    }
}

#[test]
fn every_template_round_trips() {
    for info in catalog() {
        let cfg = ExperimentConfig::from_str(info.template)
            .unwrap_or_else(|e| panic!("template for {} does not parse: {e}", info.id));
        assert_eq!(
            cfg.family, info.id,
            "template family mismatch for {}",
            info.id
        );
    }
}

#[test]
fn list_prints_the_whole_catalog() {
    let out = bin().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for info in catalog() {
        assert!(text.contains(info.id), "list output misses {}", info.id);
    }
    assert!(text.contains("17 families"));
}

#[test]
fn golden_suite_passes_and_is_reproducible() {
    let dir_a = scratch_dir("golden-a");
    let dir_b = scratch_dir("golden-b");
    for info in catalog() {
        for dir in [&dir_a, &dir_b] {
            let out = bin()
                .arg("run")
                .arg(fixture(info.id))
                .arg("--out")
                .arg(dir)
                .output()
                .unwrap();
            assert!(
                out.status.success(),
                "{} failed:\n{}\n{}",
                info.id,
                String::from_utf8_lossy(&out.stdout),
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }
    // identical CSV bodies across the two runs
    let mut csv_count = 0;
    for entry in std::fs::read_dir(&dir_a).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) == Some("csv") {
            csv_count += 1;
            let twin = dir_b.join(path.file_name().unwrap());
            let a = std::fs::read(&path).unwrap();
            let b = std::fs::read(&twin).unwrap();
            assert_eq!(a, b, "CSV body differs: {}", path.display());
        }
    }
    assert!(csv_count >= 17, "expected at least one table per family");
}

#[test]
fn seed_override_changes_stochastic_output() {
    let dir_a = scratch_dir("seed-a");
    let dir_b = scratch_dir("seed-b");
    let run = |dir: &PathBuf, seed: Option<&str>| {
        let mut cmd = bin();
        cmd.arg("run")
            .arg(fixture("levy-weak"))
            .arg("--out")
            .arg(dir);
        if let Some(s) = seed {
            cmd.arg("--seed-override").arg(s);
        }
        assert!(cmd.output().unwrap().status.success());
    };
    run(&dir_a, None);
    run(&dir_b, Some("999"));
    let name = "levy-weak-golden.weak.csv";
    let a = std::fs::read(dir_a.join(name)).unwrap();
    let b = std::fs::read(dir_b.join(name)).unwrap();
    assert_ne!(a, b, "seed override should change the sampled table");
}

#[test]
fn malformed_config_exits_two_with_diagnostics() {
    let dir = scratch_dir("bad");
    let bad = dir.join("bad.toml");
    std::fs::write(
        &bad,
        "id = \"bad\"\nfamily = \"imm-ld\"\nseed = 1\n\n[params]\nnu = 1.5\ntheta_grid = [[0.5]]\nhorizons = [10.0]\n\n[params.driver]\nkind = \"brownian\"\nmu = [0.0]\nsigma = [[1.0]]\n",
    )
    .unwrap();
    let out = bin()
        .arg("run")
        .arg(&bad)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("params.nu"), "stderr: {err}");
    assert!(err.contains("(0, 1)"), "stderr: {err}");
}

#[test]
fn unknown_family_exits_two() {
    let dir = scratch_dir("unknown");
    let cfg = dir.join("u.toml");
    std::fs::write(&cfg, "id = \"u\"\nfamily = \"no-such-family\"\nseed = 1\n").unwrap();
    let out = bin()
        .arg("run")
        .arg(&cfg)
        .arg("--out")
        .arg(&dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("no-such-family"), "stderr: {err}");
}

#[test]
fn skew_example_with_zero_delta_is_the_quadratic() {
    // delta = 0 switches the skewness off: the closed column must be y²/2
    let cfg = ExperimentConfig::from_str(
        r#"
        id = "skew-flat"
        family = "skew-example"
        seed = 9

        [params]
        delta = [0.0]
        psi = [[1.0]]
        n = 400

        [params.y_grid]
        start = -2.0
        stop = 2.0
        points = 21
        "#,
    )
    .unwrap();
    let out = ratelab_cli::families::run_family(&cfg, cfg.seed).unwrap();
    assert!(out.pass());
    let rate = out.tables.iter().find(|t| t.name == "rate").unwrap();
    let col = |name: &str| rate.headers.iter().position(|h| h == name).unwrap();
    let (y_i, closed_i) = (col("y"), col("closed"));
    for row in &rate.rows {
        let (y, closed) = match (&row[y_i], &row[closed_i]) {
            (ratelab_cli::report::Cell::Num(y), ratelab_cli::report::Cell::Num(c)) => (*y, *c),
            other => panic!("unexpected cells {other:?}"),
        };
        assert!(
            (closed - 0.5 * y * y).abs() < 1e-12,
            "y={y}: closed {closed}"
        );
    }
}

#[test]
fn threads_flag_does_not_change_results() {
    let dir_a = scratch_dir("thr-a");
    let dir_b = scratch_dir("thr-b");
    for (dir, threads) in [(&dir_a, "1"), (&dir_b, "4")] {
        let out = bin()
            .arg("run")
            .arg(fixture("imm-weak"))
            .arg("--out")
            .arg(dir)
            .arg("--threads")
            .arg(threads)
            .output()
            .unwrap();
        assert!(out.status.success());
    }
    let name = "imm-weak-golden.weak.csv";
    let a = std::fs::read(dir_a.join(name)).unwrap();
    let b = std::fs::read(dir_b.join(name)).unwrap();
    assert_eq!(a, b, "results must not depend on thread count");
}
