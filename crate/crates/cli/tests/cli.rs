use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use liepnm::table::Table;

fn liepnm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_liepnm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Paths whose stroke is red.
fn red_paths(svg: &str) -> usize {
    let doc = roxmltree::Document::parse(svg).expect("well-formed SVG");
    doc.descendants()
        .filter(|n| n.has_tag_name("path") && n.attribute("stroke") == Some("red"))
        .count()
}

#[test]
fn second_order_symmetries_print_the_table() {
    let out = liepnm(&["verify-symmetry", "--family", "second_order"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("[X1, X2] = -X1"));
    assert!(text.contains("[X1, X3] = -2 X2"));
    assert!(text.contains("[X2, X3] = -X3"));
    assert!(text.contains("lambda = -1"));
    assert_eq!(text.matches(" ok").count(), 3);
}

#[test]
fn first_order_scaling_is_admitted() {
    let out = liepnm(&["verify-symmetry", "--family", "first_order"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("X1 = (x) ∂x + (y) ∂y"));

    let out = liepnm(&["verify-symmetry", "--family", "first_order", "--F", "exp(r) - 1/r"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
}

#[test]
fn verify_symmetry_usage_errors() {
    assert_eq!(code(&liepnm(&["verify-symmetry", "--family", "third_order"])), 2);
    assert_eq!(code(&liepnm(&["verify-symmetry", "--family", "first_order", "--F", "1/"])), 2);
    assert_eq!(
        code(&liepnm(&["verify-symmetry", "--family", "second_order", "--F", "r"])),
        2
    );
}

#[test]
fn half_line_sampler_and_seed_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cons = dir.path().join("half.txt");
    fs::write(&cons, "# x >= 0\n1 0\n").unwrap();
    let run = |name: &str, seed: &str| {
        let out_csv = dir.path().join(name);
        let out = liepnm(&[
            "sample-tmg", "--dims", "1", "--constraints", p(&cons), "--count", "20000",
            "--seed", seed, "--out", p(&out_csv),
        ]);
        assert_eq!(code(&out), 0);
        (stdout(&out), fs::read(out_csv).unwrap())
    };
    let (summary, a) = run("a.csv", "9");
    let (_, b) = run("b.csv", "9");
    let (_, c) = run("c.csv", "10");
    assert_eq!(a, b);
    assert_ne!(a, c);

    let mean: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("x_0 mean "))
        .and_then(|rest| rest.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((mean - (2.0 / std::f64::consts::PI).sqrt()).abs() < 0.02, "{mean}");

    let table = Table::read_from(a.as_slice()).unwrap();
    assert_eq!(table.header, ["x_0"]);
    assert_eq!(table.rows.len(), 20000);
    assert!(table.rows.iter().all(|r| r[0] >= -1e-9));
}

#[test]
fn sampler_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_csv = dir.path().join("s.csv");
    let infeasible = dir.path().join("inf.txt");
    fs::write(&infeasible, "1 -1\n-1 -1\n").unwrap();
    let out = liepnm(&[
        "sample-tmg", "--dims", "1", "--constraints", p(&infeasible), "--out", p(&out_csv),
    ]);
    assert_eq!(code(&out), 3);

    let ragged = dir.path().join("ragged.txt");
    fs::write(&ragged, "1 0 2\n").unwrap();
    let out = liepnm(&["sample-tmg", "--dims", "1", "--constraints", p(&ragged), "--out", p(&out_csv)]);
    assert_eq!(code(&out), 2);

    let missing = dir.path().join("none.txt");
    let out = liepnm(&["sample-tmg", "--dims", "1", "--constraints", p(&missing), "--out", p(&out_csv)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn export_plot_layers() {
    let dir = tempfile::tempdir().unwrap();
    let with_ref = dir.path().join("ens.csv");
    fs::write(
        &with_ref,
        "x,y_sample_000,y_sample_001,lower,upper,reference\n\
         1,1,1.1,0,0,1\n2,2.1,2.2,0,0,2\n3,2.9,3.3,0,0,3\n",
    )
    .unwrap();
    let svg_path = dir.path().join("a.svg");
    assert_eq!(code(&liepnm(&["export-plot", p(&with_ref), p(&svg_path)])), 0);
    let svg = fs::read_to_string(&svg_path).unwrap();
    assert_eq!(red_paths(&svg), 1);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    let black = doc
        .descendants()
        .filter(|n| n.has_tag_name("g") && n.attribute("stroke") == Some("black"))
        .map(|g| g.children().filter(|c| c.has_tag_name("path")).count())
        .sum::<usize>();
    assert_eq!(black, 2);

    let no_ref = dir.path().join("plain.csv");
    fs::write(&no_ref, "r,s_sample_000\n0,1\n1,2\n").unwrap();
    let svg_path = dir.path().join("b.svg");
    assert_eq!(code(&liepnm(&["export-plot", p(&no_ref), p(&svg_path)])), 0);
    assert_eq!(red_paths(&fs::read_to_string(&svg_path).unwrap()), 0);
}

#[test]
fn export_plot_rejects_empty_ensembles() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.svg");
    for (name, body) in [("empty.csv", ""), ("header.csv", "x,y_sample_000\n"), ("nosamples.csv", "x,y\n1,2\n")] {
        let path = dir.path().join(name);
        fs::write(&path, body).unwrap();
        assert_eq!(code(&liepnm(&["export-plot", p(&path), p(&out)])), 2, "{name}");
    }
}

#[test]
fn solve_writes_csvs_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    let out_dir = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            "family = second_order\nx0 = 5\nxT = 10\ny0 = -10\ny0_prime = 1\n\
             n = 8\nr_max = -0.2375\nsamples = 20\nburn_in = 100\nplot = true\nout_dir = {}\n",
            out_dir.display()
        ),
    )
    .unwrap();
    let out = liepnm(&["solve", p(&cfg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let summary = Table::read_from(fs::File::open(out_dir.join("summary.csv")).unwrap()).unwrap();
    assert_eq!(
        summary.header,
        ["r", "s_mean", "s_q05", "s_q95", "x", "y_mean", "y_q05", "y_q95"]
    );
    assert_eq!(summary.rows.len(), 200);
    for row in &summary.rows {
        assert!(row[2] <= row[3] && row[6] <= row[7]);
    }
    let rs = Table::read_from(fs::File::open(out_dir.join("ensemble_rs.csv")).unwrap()).unwrap();
    assert_eq!(rs.header.len(), 21);

    let svg = fs::read_to_string(out_dir.join("posterior.svg")).unwrap();
    assert_eq!(red_paths(&svg), 0);
    let doc = roxmltree::Document::parse(&svg).unwrap();
    assert!(doc
        .descendants()
        .any(|n| n.has_tag_name("g") && n.attribute("stroke") == Some("blue")));

    let replot = dir.path().join("again.svg");
    let out = liepnm(&[
        "export-plot",
        p(&out_dir.join("ensemble_rs.csv")),
        p(&replot),
        "--config",
        p(&cfg),
    ]);
    assert_eq!(code(&out), 0);
    roxmltree::Document::parse(&fs::read_to_string(replot).unwrap()).unwrap();
}
