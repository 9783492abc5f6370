use std::path::Path;
use std::process::{Command, Output};

use i2bias_cli::figure::{read_curve_csv, render_svg, render_svg_grid, svg_path_data};

fn i2bias(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_i2bias"))
        .args(args)
        .output()
        .expect("run i2bias")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn assert_error(o: &Output, code: i32) {
    assert_eq!(o.status.code(), Some(code), "stderr: {}", stderr(o));
    let err = stderr(o);
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn analyze_two_studies() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "s.csv",
        "study_id,effect,std_err\na,0,1\nb,1,1\n",
    );
    let o = i2bias(&["analyze", &f]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("Q                0.5000000000"), "{text}");
    assert!(text.contains("I²               0\n"), "{text}");

    let o = i2bias(&["analyze", &f, "--json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["q_stat"], 0.5);
    assert_eq!(v["df"], 1);
    assert_eq!(v["i2"], 0.0);
    assert_eq!(v["i2_raw"], -1.0);
    assert!((v["p_value"].as_f64().unwrap() - 0.4795).abs() < 1e-4);
    assert!(v["ci"].is_null());
}

#[test]
fn analyze_json_is_bit_stable() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(
        dir.path(),
        "s.csv",
        "study_id,effect,std_err\ns1,0.31,0.12\ns2,-0.05,0.2\ns3,0.6,0.15\ns4,0.22,0.09\n",
    );
    let a = i2bias(&["analyze", &f, "--json"]);
    let b = i2bias(&["analyze", &f, "--json"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let ci = &v["ci"];
    assert!(ci["lower"].as_f64().unwrap() <= v["i2"].as_f64().unwrap());
    assert!(ci["upper"].as_f64().unwrap() >= v["i2"].as_f64().unwrap());
}

#[test]
fn analyze_identical_studies_is_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (1..=5).map(|i| format!("s{i},0.4,0.2\n")).collect();
    let f = write(
        dir.path(),
        "s.csv",
        &format!("study_id,effect,std_err\n{rows}"),
    );
    let text = stdout(&i2bias(&["analyze", &f]));
    assert!(text.contains("Q                0\n"), "{text}");
    assert!(text.contains("undefined (Q = 0)"), "{text}");
    assert!(text.contains("degenerate"), "{text}");
    let v: serde_json::Value =
        serde_json::from_slice(&i2bias(&["analyze", &f, "--json"]).stdout).unwrap();
    assert_eq!(v["ci"]["degenerate"], true);
    assert!(v["i2_raw"].is_null());
    assert_eq!(v["p_value"], 1.0);
}

#[test]
fn analyze_errors() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write(
        dir.path(),
        "z.csv",
        "study_id,effect,std_err\na,0,1\nb,1,0\n",
    );
    let o = i2bias(&["analyze", &zero]);
    assert_error(&o, 2);
    assert!(stderr(&o).contains("line 3"));

    let one = write(dir.path(), "o.csv", "study_id,effect,std_err\na,0,1\n");
    assert_error(&i2bias(&["analyze", &one]), 3);

    let header = write(dir.path(), "h.csv", "id,effect,std_err\na,0,1\nb,1,1\n");
    assert_error(&i2bias(&["analyze", &header]), 2);

    assert_error(&i2bias(&["analyze", "/nonexistent/file.csv"]), 2);
}

#[test]
fn bias_curve_csv_figure1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f1.csv");
    let o = i2bias(&[
        "bias-curve",
        "--i2",
        "0",
        "--k-min",
        "3",
        "--k-max",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("k,expectation,bias"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 98);
    let k7 = rows.iter().find(|r| r[0] == "7").unwrap();
    let e: f64 = k7[1].parse().unwrap();
    assert!((e - 0.1245).abs() < 5e-4);
    assert_eq!(k7[1], k7[2]);
    // 10 significant digits
    assert_eq!(k7[1].trim_start_matches("0.").len(), 10);
}

#[test]
fn bias_curve_reference_line_and_grid() {
    let dir = tempfile::tempdir().unwrap();
    let svg = dir.path().join("f2.svg");
    let o = i2bias(&[
        "bias-curve",
        "--i2",
        "0.05",
        "--k-min",
        "3",
        "--k-max",
        "100",
        "--out",
        svg.to_str().unwrap(),
        "--format",
        "svg",
    ]);
    assert!(o.status.success());
    let body = std::fs::read_to_string(&svg).unwrap();
    assert!(body.contains("stroke-dasharray"));
    assert!(body.contains("I² = 0.05"));

    let grid = dir.path().join("f3.csv");
    let o = i2bias(&[
        "bias-curve",
        "--i2-grid",
        "0.1:0.9:0.1",
        "--k-min",
        "3",
        "--k-max",
        "30",
        "--out",
        grid.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let series = read_curve_csv(&std::fs::read_to_string(&grid).unwrap()).unwrap();
    assert_eq!(series.len(), 9);
    assert_eq!(series[4].i2_true, 0.5);
    assert!(series.iter().all(|s| s.x.len() == 28));
}

#[test]
fn bias_curve_csv_replots_to_identical_svg() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, svg) = (dir.path().join("c.csv"), dir.path().join("c.svg"));
    for (path, fmt) in [(&csv, "csv"), (&svg, "svg")] {
        let o = i2bias(&[
            "bias-curve",
            "--i2",
            "0.3",
            "--k-min",
            "2",
            "--k-max",
            "60",
            "--out",
            path.to_str().unwrap(),
            "--format",
            fmt,
        ]);
        assert!(o.status.success());
    }
    let series = read_curve_csv(&std::fs::read_to_string(&csv).unwrap()).unwrap();
    let original = std::fs::read_to_string(&svg).unwrap();
    let replot = render_svg(&series[0]);
    assert_eq!(svg_path_data(&replot), svg_path_data(&original));
    assert_eq!(replot, original);

    let (gcsv, gsvg) = (dir.path().join("g.csv"), dir.path().join("g.svg"));
    for (path, fmt) in [(&gcsv, "csv"), (&gsvg, "svg")] {
        let o = i2bias(&[
            "bias-curve",
            "--i2-grid",
            "0.1:0.9:0.1",
            "--k-min",
            "3",
            "--k-max",
            "20",
            "--out",
            path.to_str().unwrap(),
            "--format",
            fmt,
        ]);
        assert!(o.status.success());
    }
    let series = read_curve_csv(&std::fs::read_to_string(&gcsv).unwrap()).unwrap();
    assert_eq!(
        render_svg_grid(&series),
        std::fs::read_to_string(&gsvg).unwrap()
    );
}

#[test]
fn bias_curve_errors() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let out = out.to_str().unwrap();
    assert_error(
        &i2bias(&[
            "bias-curve",
            "--i2",
            "0",
            "--k-min",
            "1",
            "--k-max",
            "5",
            "--out",
            out,
        ]),
        2,
    );
    assert_error(
        &i2bias(&[
            "bias-curve",
            "--i2",
            "0",
            "--k-min",
            "3",
            "--k-max",
            "501",
            "--out",
            out,
        ]),
        2,
    );
    assert_error(
        &i2bias(&[
            "bias-curve",
            "--i2",
            "1",
            "--k-min",
            "3",
            "--k-max",
            "5",
            "--out",
            out,
        ]),
        2,
    );
    assert_error(
        &i2bias(&[
            "bias-curve",
            "--i2",
            "0",
            "--k-min",
            "3",
            "--k-max",
            "5",
            "--out",
            "/nonexistent/dir/x.csv",
        ]),
        2,
    );
    // exactly one of --i2 / --i2-grid
    assert_eq!(
        i2bias(&["bias-curve", "--k-min", "3", "--k-max", "5", "--out", out])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn simulate_reports_agreement() {
    let o = i2bias(&[
        "simulate", "--k", "7", "--i2", "0", "--reps", "200000", "--seed", "42",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("AGREE"), "{text}");
    assert!(text.contains("(closed form)"), "{text}");

    let o = i2bias(&[
        "simulate", "--k", "2", "--i2", "0", "--reps", "1000", "--seed", "3",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("(quadrature)"));

    let o = i2bias(&[
        "simulate", "--k", "5", "--i2", "0.4", "--reps", "5000", "--seed", "3", "--mode", "random",
        "--json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["config"]["mode"], "random_effects");
    assert_eq!(v["config"]["reps"], 5000);
}

#[test]
fn simulate_is_reproducible() {
    let args = [
        "simulate", "--k", "9", "--i2", "0.5", "--reps", "30000", "--seed", "7",
    ];
    assert_eq!(i2bias(&args).stdout, i2bias(&args).stdout);
}

#[test]
fn simulate_errors() {
    assert_error(
        &i2bias(&[
            "simulate", "--k", "1", "--i2", "0", "--reps", "10", "--seed", "1",
        ]),
        2,
    );
    assert_error(
        &i2bias(&[
            "simulate", "--k", "5", "--i2", "1.5", "--reps", "10", "--seed", "1",
        ]),
        2,
    );
    assert_error(
        &i2bias(&[
            "simulate", "--k", "5", "--i2", "0", "--reps", "0", "--seed", "1",
        ]),
        2,
    );
}

#[test]
fn ci_subcommand() {
    let text = stdout(&i2bias(&["ci", "--q", "9", "--df", "9"]));
    assert!(
        text.starts_with("I²               0\n95% CI           [0, "),
        "{text}"
    );

    let text = stdout(&i2bias(&["ci", "--q", "30", "--df", "9"]));
    let bounds = text.lines().nth(1).unwrap();
    let lower: f64 = bounds
        .split('[')
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(lower > 0.0);

    assert!(stdout(&i2bias(&["ci", "--q", "0", "--df", "9"])).contains("degenerate"));
    assert_error(&i2bias(&["ci", "--q", "3", "--df", "1"]), 2);
    assert_error(&i2bias(&["ci", "--q", "-3", "--df", "4"]), 2);
}
