//! Every emitted file carries the header block and parses under its
//! documented schema.

use mvk::exec::Execution;
use mvk::experiments::commands::{self, BoundArgs, EXAMPLE1_DECAY_COLUMNS, EXAMPLE2_COLUMNS};
use mvk::experiments::config::{PointScheme, ShapeSource};
use mvk::experiments::output::{Artifact, Table};
use mvk::experiments::ExperimentConfig;
use mvk::interpolation::FitOptions;

const KERNEL: &str = r#"
[[terms]]
kind = "gaussian"
shape = 1.0
coeff = [[2.0, 1.0], [1.0, 2.0]]

[[terms]]
kind = "gaussian"
shape = 3.0
coeff = [[1.0, 0.0], [0.0, 0.0]]
"#;

const DATA: &str = "x_1,x_2,f_1,f_2\n0,0,1,2\n0.5,0.1,-1,0.5\n-0.3,0.8,0.25,0.75\n";

fn check_header(a: &Artifact, command: &str) {
    let lines: Vec<&str> = a.contents.lines().take(5).collect();
    assert!(lines[0].starts_with("# tool: mvk "), "{}", a.name);
    assert_eq!(lines[1], format!("# command: {command}"), "{}", a.name);
    assert!(lines[2].starts_with("# config_sha256: ") && lines[2].len() == "# config_sha256: ".len() + 64);
    assert!(lines[3].starts_with("# seeds: "));
    assert!(lines[4].starts_with("# tolerances: sym_tol="));
}

fn columns(a: &Artifact) -> Table {
    Table::parse(&a.contents, &a.name).unwrap()
}

fn parse_toml(a: &Artifact) -> toml::Table {
    a.contents.parse::<toml::Table>().unwrap_or_else(|e| panic!("{}: {e}", a.name))
}

fn small_example1(shapes: ShapeSource) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.example1.max_centers = 6;
    cfg.example1.shapes = shapes;
    cfg.test_set = Some(PointScheme::Equidistant { count: 50 });
    cfg.tuning.grid_size = 6;
    cfg.tuning.centers = 8;
    cfg.tuning.validation_points = 10;
    cfg
}

#[test]
fn example1_files() {
    let (_, arts) = commands::cmd_example1(&small_example1(ShapeSource::Tuned), Execution::Sequential).unwrap();
    let names: Vec<&str> = arts.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(
        names,
        vec![
            "example1_decay.csv",
            "example1_summary.toml",
            "example1_tuning_k1.csv",
            "example1_tuning_k2.csv",
            "example1_tuning_k3.csv",
            "example1_tuning_k4.csv"
        ]
    );
    for a in &arts {
        check_header(a, "example1");
    }
    let decay = columns(&arts[0]);
    assert_eq!(decay.columns, EXAMPLE1_DECAY_COLUMNS);
    assert_eq!(decay.rows.len(), 6);
    for (i, r) in decay.rows.iter().enumerate() {
        assert_eq!(r[0], (i + 1) as f64);
    }
    let summary = parse_toml(&arts[1]);
    for key in ["shape_source", "covariance_eigenvalues", "k4_groups", "k3_k4_equivalent", "kernels"] {
        assert!(summary.contains_key(key), "{key}");
    }
    assert_eq!(columns(&arts[2]).columns, ["candidate", "shape_1", "max_error"]);
    assert_eq!(columns(&arts[3]).columns, ["candidate", "slot", "shape", "max_error"]);
    assert_eq!(columns(&arts[3]).rows.len(), 18);
    assert_eq!(columns(&arts[4]).columns, ["candidate", "shape_1", "shape_2", "max_error"]);
    assert_eq!(columns(&arts[4]).rows.len(), 36);
    assert_eq!(columns(&arts[5]).columns, ["candidate", "shape_1", "shape_2", "shape_3", "max_error"]);
    assert_eq!(columns(&arts[5]).rows.len(), 216);
}

#[test]
fn example2_files() {
    let mut cfg = ExperimentConfig::default();
    cfg.example2.max_centers = 7;
    cfg.example2.targets = 2;
    cfg.test_set = Some(PointScheme::Equidistant { count: 4 });
    let (_, arts) = commands::cmd_example2(&cfg, Execution::Sequential).unwrap();
    let names: Vec<&str> = arts.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(
        names,
        vec!["example2_norm_2.csv", "example2_norm_inf.csv", "example2_norm_1.csv", "example2_summary.toml"]
    );
    for (a, norm) in arts.iter().zip(["2", "inf", "1"]) {
        check_header(a, "example2");
        assert!(a.contents.contains(&format!("# norm: {norm}\n")));
        let t = columns(a);
        assert_eq!(t.columns, EXAMPLE2_COLUMNS);
        assert_eq!(t.rows.len(), 14);
        assert!(t.rows.iter().all(|r| r.iter().all(|v| v.is_finite())));
    }
    check_header(&arts[3], "example2");
    let s = parse_toml(&arts[3]);
    assert_eq!(s["targets"].as_integer(), Some(2));
    assert_eq!(s["total_violations"].as_integer(), Some(0));
}

#[test]
fn counterexample_file() {
    let (_, arts) = commands::cmd_counterexample(&ExperimentConfig::default()).unwrap();
    assert_eq!(arts.len(), 1);
    check_header(&arts[0], "counterexample");
    let t = parse_toml(&arts[0]);
    assert_eq!(t["square_gramian"].as_array().unwrap().len(), 4);
    assert_eq!(t["base_strictly_pd"].as_bool(), Some(true));
}

#[test]
fn analyze_file() {
    let (out, arts) = commands::cmd_analyze(KERNEL, "kernel.toml", &ExperimentConfig::default()).unwrap();
    check_header(&arts[0], "analyze");
    let t = parse_toml(&arts[0]);
    assert!(t["report"].as_table().unwrap().contains_key("uncoupled"));
    assert_eq!(t["commuting"].as_bool(), Some(out.commuting));
}

#[test]
fn fit_and_eval_files() {
    let (model, arts) = commands::cmd_fit(DATA, "data.csv", KERNEL, "kernel.toml", &FitOptions::default()).unwrap();
    assert_eq!(arts[0].name, "model.toml");
    check_header(&arts[0], "fit");
    assert_eq!(model.input_dim, 2);
    for bounds in [None, Some(BoundArgs { residual_norm: 1.0 })] {
        let (_, arts) = commands::cmd_eval(&arts[0].contents, "model.toml", DATA, "data.csv", bounds, Execution::Sequential).unwrap();
        check_header(&arts[0], "eval");
        let t = columns(&arts[0]);
        let mut expected = vec!["x_1", "x_2", "s_1", "s_2"];
        if bounds.is_some() {
            expected.extend(["bound_2", "bound_inf", "bound_1"]);
        }
        assert_eq!(t.columns, expected);
        assert_eq!(t.rows.len(), 3);
    }
}

#[test]
fn malformed_inputs_are_reported() {
    let fit = |data: &str| commands::cmd_fit(data, "data.csv", KERNEL, "kernel.toml", &FitOptions::default()).unwrap_err().to_string();
    let e = fit("x_1,x_2,f_1,f_2\n0,0,1,2\n1,zz,0,0\n");
    assert!(e.contains("data.csv") && e.contains("line 3") && e.contains("x_2"), "{e}");
    let e = fit("x_1,x_2,f_1\n0,0,1\n");
    assert!(e.contains("dimension"), "{e}");
    let e = fit("x_1,x_2,f_1,f_2\n0,0,1,2\n0,0,3,4\n");
    assert!(e.contains("centers 0 and 1 coincide"), "{e}");
    let e = commands::parse_kernel("[[terms]]\nkind = \"gaussian\"\ncoeff = [[1.0]]\n", "k.toml").unwrap_err().to_string();
    assert!(e.contains("k.toml") && e.contains("shape"), "{e}");
}
