use std::path::Path;
use std::process::{Command, Output};

fn oamlab(args: &[&str]) -> Output {
    oamlab_env(args, &[])
}

fn oamlab_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_oamlab"));
    cmd.args(args).env_remove("OAMLAB_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("spawn oamlab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

/// Data rows of a CSV produced by the CLI, header lines stripped.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(3)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn exit_codes() {
    assert_eq!(code(&oamlab(&["concurrence", "--b-tilde", "0.25"])), 0);
    assert_eq!(code(&oamlab(&["--help"])), 0);
    assert_eq!(code(&oamlab(&["no-such-command"])), 2);
    assert_eq!(
        code(&oamlab(&[
            "amplitudes",
            "--alpha",
            "2",
            "--l0",
            "1",
            "--bogus"
        ])),
        2
    );
    assert_eq!(code(&oamlab(&["amplitudes", "--l0", "1", "--t", "1"])), 2);
    assert_eq!(
        code(&oamlab(&[
            "amplitudes",
            "--alpha",
            "3",
            "--l0",
            "1",
            "--t",
            "1"
        ])),
        2
    );
    assert_eq!(
        code(&oamlab(&[
            "amplitudes",
            "--alpha",
            "2",
            "--l0",
            "0",
            "--t",
            "1"
        ])),
        2
    );
    assert_eq!(
        code(&oamlab(&[
            "amplitudes",
            "--alpha",
            "2",
            "--l0",
            "1",
            "--t",
            "-1"
        ])),
        2
    );
    assert_eq!(code(&oamlab(&["concurrence", "--b-tilde", "1.5"])), 2);
    let o = oamlab(&[
        "amplitudes",
        "--alpha",
        "5/3",
        "--l0",
        "2",
        "--t",
        "1",
        "--method",
        "exact_quadratic",
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("alpha=5/3 l0=2 t=1"));
    let o = oamlab_env(
        &["concurrence", "--b-tilde", "0.25"],
        &[("OAMLAB_THREADS", "zero")],
    );
    assert_eq!(code(&o), 2);
}

#[test]
fn io_failure_is_exit_1() {
    let o = oamlab(&[
        "concurrence",
        "--b-tilde",
        "0.25",
        "-o",
        "/nonexistent-dir/sub/out.json",
    ]);
    assert_eq!(code(&o), 1);
    let o = oamlab(&[
        "concurrence",
        "--config",
        "/nonexistent-dir/c.json",
        "--b-tilde",
        "0.1",
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn non_convergence_is_exit_3() {
    let o = oamlab(&[
        "amplitudes",
        "--alpha",
        "5/3",
        "--l0",
        "1",
        "--t",
        "40",
        "--max-subdivisions",
        "0",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(stderr.contains("alpha=5/3 l0=1 t=40"), "{stderr}");

    let o = oamlab(&[
        "montecarlo",
        "--alpha",
        "2",
        "--l0",
        "1",
        "--t",
        "0.5",
        "--samples",
        "100",
        "--grid",
        "256",
        "--extent",
        "12",
        "--max-std-err",
        "1e-5",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn amplitudes_json_document() {
    let o = oamlab(&[
        "amplitudes",
        "--alpha",
        "2",
        "--l0",
        "1",
        "--t",
        "0.5",
        "--method",
        "exact_quadratic",
    ]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_eq!(v["schema"], "oamlab.v1");
    assert_eq!(v["config"]["method"], "exact_quadratic");
    assert_eq!(v["config"]["gamma"], 6.88);
    assert!((v["a"].as_f64().unwrap() - 0.414629).abs() < 1e-6);
    assert!((v["b_tilde"].as_f64().unwrap() - 0.166563).abs() < 1e-6);

    let o = oamlab(&[
        "amplitudes",
        "--alpha",
        "2",
        "--l0",
        "1",
        "--t",
        "0",
        "--method",
        "exact_quadratic",
    ]);
    let v = json(&o);
    assert_eq!(v["a"], 1.0);
    assert_eq!(v["b_tilde"], 0.0);
}

#[test]
fn sweep_csv_layout_and_order() {
    let o = oamlab(&[
        "sweep",
        "--alpha",
        "1,2",
        "--l0",
        "2,5",
        "--t",
        "0.5,1",
        "--methods",
        "quadrature,asymptotic",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=oamlab.v1"));
    let config = lines.next().unwrap();
    assert!(config.starts_with("# config={"));
    let cfg: serde_json::Value = serde_json::from_str(&config["# config=".len()..]).unwrap();
    assert_eq!(cfg["l0"], serde_json::json!([2, 5]));
    assert_eq!(
        lines.next(),
        Some("alpha,l0,t,x,method,a,b,b_tilde,err,a_err,b_tilde_err,noise_floor,outside_validity")
    );
    let r = rows(&text);
    assert_eq!(r.len(), 16);
    // alpha outermost, method innermost
    assert_eq!(r[0][..5], ["1", "2", "0.5", r[0][3].as_str(), "quadrature"]);
    assert_eq!(r[1][4], "asymptotic");
    assert_eq!(r[2][2], "1.0");
    assert_eq!(r[8][0], "2");
    for row in &r {
        let b: f64 = row[7].parse().unwrap();
        assert!((0.0..=1.0).contains(&b));
        assert!(row[11] == "0" || row[11] == "1");
    }
}

#[test]
fn sweep_is_byte_identical_across_runs_and_thread_counts() {
    let args = [
        "sweep",
        "--alpha",
        "1,5/3",
        "--l0",
        "3,10,40",
        "--t",
        "0.3,2",
        "--methods",
        "quadrature,asymptotic,series",
    ];
    let one = oamlab_env(&args, &[("OAMLAB_THREADS", "1")]);
    let four = oamlab_env(&args, &[("OAMLAB_THREADS", "4")]);
    let default = oamlab(&args);
    assert_eq!(code(&one), 0, "{}", String::from_utf8_lossy(&one.stderr));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, default.stdout);
}

#[test]
fn montecarlo_is_deterministic_under_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let screen = dir.path().join("screen.csv");
    let args = |seed: &'static str| {
        vec![
            "montecarlo",
            "--alpha",
            "5/3",
            "--l0",
            "1",
            "--t",
            "0.5",
            "--samples",
            "100",
            "--grid",
            "256",
            "--extent",
            "12",
            "--seed",
            seed,
        ]
    };
    let a = oamlab_env(&args("7"), &[("OAMLAB_THREADS", "1")]);
    let b = oamlab_env(&args("7"), &[("OAMLAB_THREADS", "3")]);
    let c = oamlab(&args("8"));
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v = json(&a);
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["method"], "montecarlo");
    assert!(v["b_tilde_err"].as_f64().unwrap() > 0.0);

    let mut dump = args("7");
    let path = screen.to_str().unwrap();
    dump.extend(["--dump-screen", path]);
    assert_eq!(code(&oamlab(&dump)), 0);
    let text = std::fs::read_to_string(&screen).unwrap();
    let header: serde_json::Value =
        serde_json::from_str(text.lines().next().unwrap().trim_start_matches("# ")).unwrap();
    assert_eq!(header["n"], 256);
    assert_eq!(header["seed"], 7);
    assert_eq!(text.lines().count(), 1 + 256);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"alpha": "2", "l0": 3, "t": 0.5, "method": "exact_quadratic"}"#,
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let v = json(&oamlab(&["amplitudes", "--config", c]));
    assert_eq!(v["l0"], 3);
    let v = json(&oamlab(&["amplitudes", "--config", c, "--l0", "4"]));
    assert_eq!(v["l0"], 4);
    assert_eq!(v["method"], "exact_quadratic");

    std::fs::write(
        &cfg,
        r#"{"alpha": "2", "l0": 3, "t": 0.5, "colour": "red"}"#,
    )
    .unwrap();
    assert_eq!(code(&oamlab(&["amplitudes", "--config", c])), 2);
    std::fs::write(&cfg, "not json").unwrap();
    assert_eq!(code(&oamlab(&["amplitudes", "--config", c])), 2);
}

#[test]
fn output_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let args = ["universal", "--alpha", "1,2", "--x-range", "0:1:5"];
    let direct = oamlab(&args);
    let mut with_file = args.to_vec();
    with_file.extend(["-o", out.to_str().unwrap()]);
    assert_eq!(code(&oamlab(&with_file)), 0);
    assert_eq!(std::fs::read(&out).unwrap(), direct.stdout);
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1, "temporary file left behind");
}

#[test]
fn concurrence_from_b_tilde_and_from_x() {
    let v = json(&oamlab(&["concurrence", "--b-tilde", "0.5"]));
    assert_eq!(v["concurrence"], 0.0);
    let v = json(&oamlab(&["concurrence", "--alpha", "2", "--x", "0"]));
    assert_eq!(v["concurrence"], 1.0);
    let v = json(&oamlab(&["concurrence", "--b-tilde", "0.1"]));
    assert!((v["concurrence"].as_f64().unwrap() - 0.8 / 1.21).abs() < 1e-15);
}

fn figures_in(dir: &Path, which: &str) -> Output {
    oamlab(&[
        "figures",
        "--which",
        which,
        "--outdir",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn figure_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let o = figures_in(dir.path(), "2,3");
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("fig1a.csv").exists());

    let fig3 = std::fs::read_to_string(dir.path().join("fig3.csv")).unwrap();
    assert!(fig3.starts_with("# schema=oamlab.v1\n# config="));
    assert_eq!(fig3.lines().nth(2), Some("x,alpha_1,alpha_5_3,alpha_2,fit"));
    let r = rows(&fig3);
    assert_eq!(r.len(), 121);
    assert_eq!(r[0], ["0.0", "1.0", "1.0", "1.0", "1.0"]);
    // concurrence falls off fastest for the smallest exponent
    let mid: Vec<f64> = r[40][1..4].iter().map(|s| s.parse().unwrap()).collect();
    assert!(mid[0] < mid[1] && mid[1] < mid[2], "{mid:?}");

    let fig2 = std::fs::read_to_string(dir.path().join("fig2.csv")).unwrap();
    let r = rows(&fig2);
    assert_eq!(r.len(), 121);
    assert_eq!(r[0][0], "0.01");
    assert_eq!(r[120][0], "10.0");

    // a second run reproduces the files byte for byte
    let again = tempfile::tempdir().unwrap();
    assert_eq!(code(&figures_in(again.path(), "3,2")), 0);
    for f in ["fig2.csv", "fig3.csv"] {
        assert_eq!(
            std::fs::read(dir.path().join(f)).unwrap(),
            std::fs::read(again.path().join(f)).unwrap()
        );
    }

    assert_eq!(code(&figures_in(dir.path(), "4")), 2);
}

#[test]
fn figure_one_layout() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&figures_in(dir.path(), "1c")), 0);
    let text = std::fs::read_to_string(dir.path().join("fig1c.csv")).unwrap();
    assert_eq!(
        text.lines().nth(2),
        Some("l0,t,x,quadrature,quadrature_noise_floor,asymptotic,exact_quadratic")
    );
    let r = rows(&text);
    let l0s: Vec<i64> = oamlab_cli_fig1_l0(&r);
    assert_eq!(r.len(), 5 * l0s.len());
    for checkpoint in [10, 30, 100, 150, 300] {
        assert!(l0s.contains(&checkpoint));
    }
    assert_eq!(l0s.first(), Some(&2));
    // quadrature agrees with the exact form wherever it is above the noise floor
    for row in &r {
        if row[4] == "0" {
            let q: f64 = row[3].parse().unwrap();
            let e: f64 = row[6].parse().unwrap();
            assert!((q - e).abs() <= 1e-6 * e + 1e-15, "{row:?}");
        }
    }
}

/// The l0 column of the first t block.
fn oamlab_cli_fig1_l0(rows: &[Vec<String>]) -> Vec<i64> {
    let t0 = &rows[0][1];
    rows.iter()
        .take_while(|r| &r[1] == t0)
        .map(|r| r[0].parse().unwrap())
        .collect()
}

#[test]
fn sweep_json_always_has_rows() {
    let v = json(&oamlab(&[
        "sweep",
        "--alpha",
        "2",
        "--l0",
        "3",
        "--t",
        "1",
        "--methods",
        "exact_quadratic",
        "--format",
        "json",
    ]));
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0]["method"], "exact_quadratic");
}
