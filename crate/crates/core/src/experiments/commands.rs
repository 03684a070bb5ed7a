//! Subcommand bodies. Each returns its output files in memory so callers can
//! write them, compare them, or inspect them in tests.

use nalgebra::DMatrix;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::example1::{self, KERNEL_NAMES};
use super::example2::{self, NORMS};
use super::output::{csv_text, fmt_f64, fmt_opt, Artifact, Header, Table};
use crate::decomposition::{self, DecompositionReport, SampleDomain};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::interpolation::{fit_with, FitOptions, ModelFile};
use crate::kernels::{KernelSpec, PointSet, SeparableKernel};
use crate::linalg::RANK_TOL;
use crate::power::{BoundFactors, PowerEvaluator};
use crate::sampling::{self, DomainBox};

fn rows_of(a: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

fn with_header(header: &Header, body: &str) -> String {
    let mut s = header.render();
    s.push_str(body);
    s
}

fn to_toml<T: Serialize>(v: &T) -> String {
    toml::to_string(v).expect("report serializes")
}

pub const EXAMPLE1_DECAY_COLUMNS: [&str; 5] = ["N", "err_k1", "err_k2", "err_k3", "err_k4"];
pub const EXAMPLE2_COLUMNS: [&str; 9] = [
    "target",
    "n_centers",
    "rank",
    "error",
    "bound_residual",
    "bound_full",
    "residual_norm",
    "f_norm",
    "violations",
];

#[derive(Debug, Serialize)]
struct KernelShapes {
    name: String,
    shapes: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuning_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tuning_failures: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Example1Summary {
    shape_source: String,
    covariance_eigenvalues: Vec<f64>,
    covariance_eigenvectors: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ratio_k3_k1_at_21: Option<f64>,
    /// Largest ratio between any two curves over `N ≤ 5`.
    #[serde(skip_serializing_if = "Option::is_none")]
    small_n_spread: Option<f64>,
    /// Proportionality classes recovered from the fourth kernel.
    k4_groups: Vec<Vec<usize>>,
    k3_k4_equivalent: bool,
    kernels: Vec<KernelShapes>,
}

/// Ratio `err_k3(21) / err_k1(21)` when both fits succeeded.
pub fn ratio_at(result: &example1::Example1Result, n: usize) -> Option<f64> {
    let row = result.row(n)?;
    Some(row.errors[2]? / row.errors[0]?)
}

/// Largest pairwise ratio between the curves over `N ≤ max_n`.
pub fn small_n_spread(result: &example1::Example1Result, max_n: usize) -> Option<f64> {
    let mut worst: f64 = 1.0;
    for row in result.rows.iter().filter(|r| r.n <= max_n) {
        let e: Vec<f64> = row.errors.iter().map(|e| e.ok_or(())).collect::<std::result::Result<_, _>>().ok()?;
        let hi = e.iter().cloned().fold(f64::MIN, f64::max);
        let lo = e.iter().cloned().fold(f64::MAX, f64::min);
        worst = worst.max(hi / lo);
    }
    Some(worst)
}

pub fn example1_pairs(seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    sampling::sample_pairs(&example1::domain(), 200, &mut sampling::rng(seed))
}

pub fn cmd_example1(cfg: &ExperimentConfig, exec: Execution) -> Result<(example1::Example1Result, Vec<Artifact>)> {
    let result = example1::run(cfg, exec)?;
    let cfg_text = cfg.to_toml();
    let header = |cmd: &str| {
        Header::new(cmd, &cfg_text)
            .seed("seed", cfg.seed)
            .seed("covariance", example1::covariance_seed(cfg))
            .seed("validation", example1::validation_seed(cfg))
    };

    let rows: Vec<Vec<String>> = result
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.n.to_string()];
            v.extend(r.errors.iter().map(|e| fmt_opt(*e)));
            v
        })
        .collect();
    let mut artifacts = vec![Artifact::new(
        "example1_decay.csv",
        csv_text(&header("example1"), &EXAMPLE1_DECAY_COLUMNS, &rows)?,
    )];

    let pairs = example1_pairs(cfg.seed.wrapping_add(3));
    let rec = decomposition::recover_uncoupled(&result.kernels[3], &pairs)?;
    let equivalent = decomposition::decomposition_equivalent(&result.kernels[2], &rec, &pairs)?;
    let summary = Example1Summary {
        shape_source: format!("{:?}", cfg.example1.shapes).to_lowercase(),
        covariance_eigenvalues: result.covariance.eigenvalues.clone(),
        covariance_eigenvectors: rows_of(&result.covariance.eigenvectors),
        ratio_k3_k1_at_21: ratio_at(&result, 21),
        small_n_spread: small_n_spread(&result, 5),
        k4_groups: rec.groups.clone(),
        k3_k4_equivalent: equivalent,
        kernels: KERNEL_NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| KernelShapes {
                name: name.to_string(),
                shapes: result.shapes.as_array()[i].to_vec(),
                tuning_error: result.tuned.as_ref().map(|t| t[i].max_error),
                tuning_failures: result.tuned.as_ref().map(|t| t[i].failures),
            })
            .collect(),
    };
    artifacts.push(Artifact::new(
        "example1_summary.toml",
        with_header(&header("example1"), &to_toml(&summary)),
    ));

    if let Some(tuned) = &result.tuned {
        for (i, sel) in tuned.iter().enumerate() {
            let per_slot = sel.candidates.first().is_some_and(|c| c.slot.is_some());
            let (columns, body): (Vec<String>, Vec<Vec<String>>) = if per_slot {
                (
                    vec!["candidate".into(), "slot".into(), "shape".into(), "max_error".into()],
                    sel.candidates
                        .iter()
                        .map(|c| {
                            vec![
                                c.index.to_string(),
                                c.slot.unwrap_or(0).to_string(),
                                fmt_f64(c.shapes[0]),
                                fmt_opt(c.max_error),
                            ]
                        })
                        .collect(),
                )
            } else {
                let slots = sel.shapes.len();
                let mut cols = vec!["candidate".to_string()];
                cols.extend((1..=slots).map(|s| format!("shape_{s}")));
                cols.push("max_error".into());
                (
                    cols,
                    sel.candidates
                        .iter()
                        .map(|c| {
                            let mut v = vec![c.index.to_string()];
                            v.extend(c.shapes.iter().map(|s| fmt_f64(*s)));
                            v.push(fmt_opt(c.max_error));
                            v
                        })
                        .collect(),
                )
            };
            let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
            artifacts.push(Artifact::new(
                &format!("example1_tuning_{}.csv", KERNEL_NAMES[i]),
                csv_text(&header("example1"), &cols, &body)?,
            ));
        }
    }
    Ok((result, artifacts))
}

pub fn cmd_example2(cfg: &ExperimentConfig, exec: Execution) -> Result<(example2::Example2Result, Vec<Artifact>)> {
    let result = example2::run(cfg, exec)?;
    let cfg_text = cfg.to_toml();
    let mut header = Header::new("example2", &cfg_text)
        .seed("seed", cfg.seed)
        .seed("centers", example2::centers_seed(cfg));
    for (t, s) in result.target_seeds.iter().enumerate() {
        header = header.seed(&format!("target_{t}"), *s);
    }
    let mut artifacts = Vec::new();
    for (p, norm) in NORMS.iter().enumerate() {
        let rows: Vec<Vec<String>> = result
            .records
            .iter()
            .map(|r| {
                vec![
                    r.target.to_string(),
                    r.n_centers.to_string(),
                    r.rank.to_string(),
                    fmt_f64(r.errors[p]),
                    fmt_f64(r.bounds_residual[p]),
                    fmt_f64(r.bounds_full[p]),
                    fmt_f64(r.residual_norm),
                    fmt_f64(r.f_norm),
                    r.violations[p].to_string(),
                ]
            })
            .collect();
        let h = header.clone().note("norm", *norm);
        artifacts.push(Artifact::new(
            &format!("example2_norm_{norm}.csv"),
            csv_text(&h, &EXAMPLE2_COLUMNS, &rows)?,
        ));
    }
    #[derive(Serialize)]
    struct Summary {
        targets: usize,
        centers: usize,
        test_points: usize,
        total_violations: usize,
        max_excess: Vec<f64>,
        final_residual_norms: Vec<f64>,
    }
    let n = result.centers.len();
    let summary = Summary {
        targets: result.targets.len(),
        centers: n,
        test_points: result.test.len(),
        total_violations: result.total_violations(),
        max_excess: (0..3)
            .map(|p| result.records.iter().map(|r| r.max_excess[p]).fold(f64::NEG_INFINITY, f64::max))
            .collect(),
        final_residual_norms: result
            .records
            .iter()
            .filter(|r| r.n_centers == n)
            .map(|r| r.residual_norm)
            .collect(),
    };
    artifacts.push(Artifact::new("example2_summary.toml", with_header(&header, &to_toml(&summary))));
    Ok((result, artifacts))
}

pub fn cmd_counterexample(cfg: &ExperimentConfig) -> Result<(decomposition::CounterexampleReport, Vec<Artifact>)> {
    let r = decomposition::product_counterexample()?;
    #[derive(Serialize)]
    struct Report {
        centers: Vec<f64>,
        base_eigenvalues: Vec<f64>,
        base_strictly_pd: bool,
        square_eigenvalues: Vec<f64>,
        square_min_eigenvalue: f64,
        /// Blocks in component order.
        square_gramian: Vec<Vec<f64>>,
        /// Components swapped within every block.
        square_gramian_swapped: Vec<Vec<f64>>,
    }
    let report = Report {
        centers: r.centers.coords().to_vec(),
        base_eigenvalues: r.base_eigenvalues.clone(),
        base_strictly_pd: r.base_min_eigenvalue() > 0.0,
        square_eigenvalues: r.square_eigenvalues.clone(),
        square_min_eigenvalue: r.square_min_eigenvalue(),
        square_gramian: rows_of(&r.square_gramian),
        square_gramian_swapped: rows_of(&r.square_gramian_swapped),
    };
    let header = Header::new("counterexample", &cfg.to_toml());
    let text = with_header(&header, &to_toml(&report));
    Ok((r, vec![Artifact::new("counterexample.toml", text)]))
}

#[derive(Debug, Serialize)]
pub struct RecoveredTermView {
    pub indices: Vec<usize>,
    pub representative: usize,
    pub alphas: Vec<f64>,
    pub coeff: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize)]
pub struct RecoveredView {
    pub p: Vec<Vec<f64>>,
    pub groups: Vec<Vec<usize>>,
    pub null_indices: Vec<usize>,
    pub terms: Vec<RecoveredTermView>,
}

#[derive(Debug, Serialize)]
pub struct AnalyzeOutput {
    pub report: DecompositionReport,
    pub commuting: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovery_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovered: Option<RecoveredView>,
}

pub fn parse_kernel(text: &str, source_name: &str) -> Result<SeparableKernel> {
    let spec: KernelSpec = toml::from_str(text).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        message: e.to_string(),
    })?;
    SeparableKernel::from_spec(&spec).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        message: e.to_string(),
    })
}

pub fn cmd_analyze(kernel_text: &str, source_name: &str, cfg: &ExperimentConfig) -> Result<(AnalyzeOutput, Vec<Artifact>)> {
    let k = parse_kernel(kernel_text, source_name)?;
    let domain = cfg.domain_or(DomainBox::cube(1, -2.0, 2.0)?)?;
    let sampling_cfg = SampleDomain {
        domain: domain.clone(),
        samples: 200,
        seed: cfg.seed,
    };
    let report = decomposition::analyze_with(&k, RANK_TOL, &sampling_cfg)?;
    let pairs = sampling::sample_pairs(&domain, 200, &mut sampling::rng(cfg.seed.wrapping_add(1)));
    let values: Vec<DMatrix<f64>> = pairs.iter().map(|(x, y)| k.eval(x, y)).collect::<Result<_>>()?;
    let commuting = decomposition::commuting_family_check(&values, decomposition::COMMUTE_TOL);
    let (recovered, recovery_error) = if commuting {
        match decomposition::recover_uncoupled(&k, &pairs) {
            Ok(rec) => (
                Some(RecoveredView {
                    p: rows_of(&rec.p),
                    groups: rec.groups.clone(),
                    null_indices: rec.null_indices.clone(),
                    terms: rec
                        .terms
                        .iter()
                        .map(|t| RecoveredTermView {
                            indices: t.indices.clone(),
                            representative: t.representative,
                            alphas: t.alphas.clone(),
                            coeff: t.coeff.rows(),
                        })
                        .collect(),
                }),
                None,
            ),
            Err(e) => (None, Some(e.to_string())),
        }
    } else {
        (None, None)
    };
    let out = AnalyzeOutput {
        report,
        commuting,
        recovery_error,
        recovered,
    };
    let hash_input = format!("{}\n{}", cfg.to_toml(), kernel_text);
    let header = Header::new("analyze", &hash_input)
        .seed("independence", cfg.seed)
        .seed("recovery", cfg.seed.wrapping_add(1));
    let text = with_header(&header, &to_toml(&out));
    Ok((out, vec![Artifact::new("analyze.toml", text)]))
}

/// Splits a data table into points (`x_*`) and values (`f_*`).
pub fn split_data(table: &Table, source_name: &str, need_values: bool) -> Result<(PointSet, Option<DMatrix<f64>>)> {
    let xs = table.prefixed("x_");
    let fs = table.prefixed("f_");
    if xs.is_empty() {
        return Err(Error::Parse {
            source_name: source_name.to_string(),
            message: "no `x_*` columns".into(),
        });
    }
    if need_values && fs.is_empty() {
        return Err(Error::Parse {
            source_name: source_name.to_string(),
            message: "no `f_*` columns".into(),
        });
    }
    let mut coords = Vec::with_capacity(table.rows.len() * xs.len());
    for (i, row) in table.rows.iter().enumerate() {
        if row.len() != table.columns.len() {
            return Err(Error::Parse {
                source_name: source_name.to_string(),
                message: format!("row {i} has {} cells, expected {}", row.len(), table.columns.len()),
            });
        }
        coords.extend(xs.iter().map(|&c| row[c]));
    }
    let points = PointSet::new(xs.len(), coords).map_err(|e| Error::Parse {
        source_name: source_name.to_string(),
        message: e.to_string(),
    })?;
    let values = if fs.is_empty() {
        None
    } else {
        Some(DMatrix::from_fn(table.rows.len(), fs.len(), |i, j| table.rows[i][fs[j]]))
    };
    Ok((points, values))
}

pub fn cmd_fit(data_text: &str, data_name: &str, kernel_text: &str, kernel_name: &str, opts: &FitOptions) -> Result<(ModelFile, Vec<Artifact>)> {
    let k = parse_kernel(kernel_text, kernel_name)?;
    let table = Table::parse(data_text, data_name)?;
    let (points, values) = split_data(&table, data_name, true)?;
    let values = values.expect("values present");
    if values.ncols() != k.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: k.output_dim(),
            got: values.ncols(),
        });
    }
    let s = fit_with(&k, &points, &values, opts)?;
    let model = ModelFile::from_interpolant(&s);
    let header = Header::new("fit", &format!("{kernel_text}\n{data_text}"));
    let text = with_header(&header, &model.to_toml());
    Ok((model, vec![Artifact::new("model.toml", text)]))
}

/// Norms used to scale the per-point bound columns of `eval`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundArgs {
    /// `‖f − Πf‖` of the modelled function, unknown for tabulated data.
    pub residual_norm: f64,
}

pub fn eval_columns(d: usize, m: usize, bounds: bool) -> Vec<String> {
    let mut cols: Vec<String> = (1..=d).map(|i| format!("x_{i}")).collect();
    cols.extend((1..=m).map(|i| format!("s_{i}")));
    if bounds {
        cols.extend(["bound_2", "bound_inf", "bound_1"].map(String::from));
    }
    cols
}

pub fn cmd_eval(
    model_text: &str,
    model_name: &str,
    points_text: &str,
    points_name: &str,
    bounds: Option<BoundArgs>,
    exec: Execution,
) -> Result<(DMatrix<f64>, Vec<Artifact>)> {
    let model = ModelFile::from_toml(model_text, model_name)?;
    let s = model.to_interpolant()?;
    let table = Table::parse(points_text, points_name)?;
    let (points, _) = split_data(&table, points_name, false)?;
    if points.dim() != model.input_dim {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim,
            got: points.dim(),
        });
    }
    let pred = s.evaluate_many(&points)?;
    let factors = match bounds {
        Some(b) => {
            if !(b.residual_norm >= 0.0 && b.residual_norm.is_finite()) {
                return Err(Error::InvalidArgument(format!("residual norm {} must be finite and >= 0", b.residual_norm)));
            }
            let pe = PowerEvaluator::new(s.kernel(), s.centers())?;
            let q = pe.query_many(&points, exec)?;
            Some(
                q.iter()
                    .map(|q| BoundFactors::from_power(&q.power).map(|f| f.scaled(b.residual_norm)))
                    .collect::<Result<Vec<_>>>()?,
            )
        }
        None => None,
    };
    let d = points.dim();
    let m = model.output_dim;
    let cols = eval_columns(d, m, bounds.is_some());
    let rows: Vec<Vec<String>> = (0..points.len())
        .map(|i| {
            let mut r: Vec<String> = points.point(i).iter().map(|v| fmt_f64(*v)).collect();
            r.extend(pred.row(i).iter().map(|v| fmt_f64(*v)));
            if let Some(f) = &factors {
                r.extend([f[i].two, f[i].inf, f[i].one].map(fmt_f64));
            }
            r
        })
        .collect();
    let hash_input = format!("{model_text}\n{points_text}\n{bounds:?}");
    let header = Header::new("eval", &hash_input);
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let text = csv_text(&header, &col_refs, &rows)?;
    Ok((pred, vec![Artifact::new("predictions.csv", text)]))
}
