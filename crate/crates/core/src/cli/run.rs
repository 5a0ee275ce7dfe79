use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use thiserror::Error;

use crate::cwold::{
    cf_difference_at, counterexample_witness, lattice_mass_check, marginal_difference_along, octant_equality_scan,
    scan_rows, write_scan_table, CharFnExpr, CwoldError, Region, Univariate,
};
use crate::limit_theory::{alloc_cov, gnm_degree_cov, LimitError};
use crate::mc_engine::{
    compare_to_theory, normality_entry, run_experiment, Experiment, McError, Model, ReportEntry, RunOptions,
    VerificationReport,
};
use crate::monotone::{monotonicity_suite, MonotoneError};
use crate::simulators::write_count_rows;
use crate::transfer::{gnp_to_gnm, poissonized_to_alloc};

use super::{emit_report, ConfigError, ExperimentConfig, ExperimentKind};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Monotone(#[from] MonotoneError),
    #[error(transparent)]
    Cwold(#[from] CwoldError),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

/// Step of the one-dimensional directional scans.
const DIRECTION_STEP: f64 = 1e-3;
const KS_MIN_REPLICATES: u64 = 1000;

fn io_err(path: &std::path::Path, e: impl std::fmt::Display) -> RunError {
    RunError::Io { path: path.display().to_string(), message: e.to_string() }
}

/// Runs the configured experiment, writes the report (and any side
/// tables), and returns the report.
pub fn run(cfg: &ExperimentConfig) -> Result<VerificationReport, RunError> {
    let report = execute(cfg)?;
    match &cfg.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| io_err(path, e))?;
            emit_report(&report, cfg.format, BufWriter::new(f)).map_err(|e| io_err(path, e))?;
        }
        None => emit_report(&report, cfg.format, std::io::stdout().lock()).map_err(|e| io_err("stdout".as_ref(), e))?,
    }
    Ok(report)
}

/// Like [`run`] but leaves the report to the caller; side tables
/// (`dump`, `scan-out`) are still written.
pub fn execute(cfg: &ExperimentConfig) -> Result<VerificationReport, RunError> {
    let start = Instant::now();
    let mut report = match cfg.experiment {
        ExperimentKind::Alloc | ExperimentKind::Gnp | ExperimentKind::Gnm | ExperimentKind::Spacings => sampled(cfg)?,
        ExperimentKind::Transfer => transfer(cfg)?,
        ExperimentKind::Monotone => monotone(cfg)?,
        ExperimentKind::Cwold => cwold(cfg)?,
    };
    report.experiment = cfg.experiment.name().to_string();
    report.seed = cfg.seed;
    report.wall_time_s = start.elapsed().as_secs_f64();
    report.update_pass();
    Ok(report)
}

pub(crate) fn model_of(cfg: &ExperimentConfig) -> Model {
    let n = cfg.n.expect("validated");
    match cfg.experiment {
        ExperimentKind::Alloc => Model::Alloc { n, m: cfg.m.expect("validated") },
        ExperimentKind::Gnm => Model::Gnm { n, m: cfg.m.expect("validated") },
        ExperimentKind::Gnp => Model::Gnp { n, p: cfg.p.expect("validated") },
        ExperimentKind::Spacings => Model::Spacings { n, a: cfg.a.unwrap_or(1.0) },
        other => unreachable!("{other} is not sampled"),
    }
}

fn sampled(cfg: &ExperimentConfig) -> Result<VerificationReport, RunError> {
    let model = model_of(cfg);
    let reps = cfg.reps.unwrap_or(1000);
    let exp = Experiment::new(model, cfg.max_k.unwrap_or(5), reps, cfg.seed);
    let ks = !cfg.ks_coords.is_empty() && reps >= KS_MIN_REPLICATES;
    let options = RunOptions { workers: cfg.workers, retain_counts: ks || cfg.dump.is_some() };
    let run = run_experiment(&exp, options)?;
    let (mean, cov) = exp.theory()?;
    let mut report = compare_to_theory(&run.acc, &mean, &cov, cfg.z_gate)?;

    let p = &mut report.parameters;
    p.insert("n".into(), model.n() as f64);
    match model {
        Model::Alloc { m, .. } | Model::Gnm { m, .. } => {
            p.insert("m".into(), m as f64);
        }
        Model::Gnp { p: prob, .. } => {
            p.insert("p".into(), prob);
        }
        Model::Spacings { a, .. } => {
            p.insert("a".into(), a);
        }
    }
    if let Some(l) = model.lambda_n() {
        p.insert("lambda".into(), l);
        p.insert("K".into(), exp.max_k as f64);
    }
    p.insert("reps".into(), reps as f64);
    p.insert("z_gate".into(), cfg.z_gate);
    p.insert("ks_gate".into(), cfg.ks_gate);
    report.metadata.insert("standardization".into(), "(x - b_n) / sqrt(n)".into());
    report.metadata.insert("covariance_se".into(), "batch means over 20 contiguous batches".into());

    if ks {
        for &c in &cfg.ks_coords {
            let col = run.standardized_column(c).expect("counts retained");
            let step = 1.0 / run.spec.a_n;
            report.normality.push(normality_entry(&col, c, 0.0, cov[(c, c)], Some(step), cfg.ks_gate)?);
        }
    } else if !cfg.ks_coords.is_empty() {
        report.metadata.insert("normality".into(), format!("skipped: fewer than {KS_MIN_REPLICATES} replicates"));
    }
    if let (Some(path), Some(table)) = (&cfg.dump, &run.counts) {
        let f = File::create(path).map_err(|e| io_err(path, e))?;
        write_count_rows(table, BufWriter::new(f)).map_err(|e| io_err(path, e))?;
        report.metadata.insert("dump_columns".into(), table.columns.to_string());
    }
    Ok(report)
}

fn transfer(cfg: &ExperimentConfig) -> Result<VerificationReport, RunError> {
    let lambda = cfg.lambda.expect("validated");
    let k = cfg.max_k.unwrap_or(60);
    let mut report = VerificationReport::new("transfer", cfg.seed);
    report.parameters.insert("lambda".into(), lambda);
    report.parameters.insert("K".into(), k as f64);
    report.parameters.insert("tol".into(), cfg.tol);

    let g = gnp_to_gnm(lambda, k)?;
    report.entries.push(ReportEntry::check("gnp_conditioned_vs_gnm_max_abs_diff", 0.0, g.max_abs_diff, cfg.tol));
    if k >= 1 {
        report.entries.push(ReportEntry::check(
            "gnp_conditioned_cov_0_1",
            gnm_degree_cov(lambda, 0, 1)?,
            g.conditioned.cov[(0, 1)],
            cfg.tol,
        ));
    }
    let a = poissonized_to_alloc(lambda, k)?;
    report.entries.push(ReportEntry::check("poissonized_conditioned_vs_alloc_max_abs_diff", 0.0, a.max_abs_diff, cfg.tol));
    let mut gap: f64 = 0.0;
    for i in 0..=k {
        for j in 0..=k {
            gap = gap.max((alloc_cov(lambda, i, j)? - gnm_degree_cov(lambda, i, j)?).abs());
        }
    }
    report.entries.push(ReportEntry::check("alloc_minus_gnm_max_abs_diff", 0.0, gap, 0.0));
    Ok(report)
}

fn monotone(cfg: &ExperimentConfig) -> Result<VerificationReport, RunError> {
    let suite = monotonicity_suite(cfg.n_max, cfg.m_max, cfg.graph_n)?;
    let mut report = VerificationReport::new("monotone", cfg.seed);
    report.parameters.insert("n_max".into(), cfg.n_max as f64);
    report.parameters.insert("m_max".into(), cfg.m_max as f64);
    report.parameters.insert("graph_n".into(), cfg.graph_n as f64);
    report.entries.push(ReportEntry::check("dominance_failures", 0.0, suite.dominance_failures.len() as f64, 0.0));
    report.entries.push(ReportEntry::check("coupling_failures", 0.0, suite.coupling_failures.len() as f64, 0.0));
    report.metadata.insert("pairs_checked".into(), suite.pairs_checked.to_string());
    report.metadata.insert("coupling_atoms".into(), suite.coupling_atoms.to_string());
    if let Some(f) = suite.dominance_failures.first().or(suite.coupling_failures.first()) {
        report.metadata.insert("first_failure".into(), f.clone());
    }
    Ok(report)
}

fn cwold(cfg: &ExperimentConfig) -> Result<VerificationReport, RunError> {
    let (h, t) = (cfg.grid, cfg.t_extent);
    let (x, y) = (CharFnExpr::canonical_x(), CharFnExpr::canonical_y());
    let mut report = VerificationReport::new("cwold", cfg.seed);
    report.parameters.insert("grid".into(), h);
    report.parameters.insert("T".into(), t);
    report.parameters.insert("direction_step".into(), DIRECTION_STEP);

    let octant = octant_equality_scan(&x, &y, h, t)?;
    report.entries.push(ReportEntry::check("octant_max_abs_diff", 0.0, octant.max_diff, 1e-12));
    let at = cf_difference_at(&x, &y, -0.6, 0.6)?;
    report.entries.push(ReportEntry::check("diff_at_(-0.6,0.6)", 0.2, at, 1e-12));
    report.entries.push(ReportEntry::check("diff_at_(0.6,-0.6)_minus_(-0.6,0.6)", 0.0, cf_difference_at(&x, &y, 0.6, -0.6)? - at, 0.0));
    let witness = counterexample_witness(&x, &y, h, t)?;
    report.entries.push(ReportEntry::lower_bound("complement_max_abs_diff", 0.19, witness.max_diff));
    report.metadata.insert("witness_t1".into(), witness.argmax.0.to_string());
    report.metadata.insert("witness_t2".into(), witness.argmax.1.to_string());

    let full = (-5.0, 5.0);
    let d = marginal_difference_along(&x, &y, (1.0, -1.0), full, DIRECTION_STEP)?;
    report.entries.push(ReportEntry::lower_bound("direction_(1,-1)_max_abs_diff", 0.19, d));
    let d = marginal_difference_along(&x, &y, (1.0, 1.0), full, DIRECTION_STEP)?;
    report.entries.push(ReportEntry::upper_bound("direction_(1,1)_max_abs_diff", 1e-14, d));
    let d = marginal_difference_along(&x, &y, (1.0, 0.0), (0.0, 5.0), DIRECTION_STEP)?;
    report.entries.push(ReportEntry::upper_bound("direction_(1,0)_nonnegative_max_abs_diff", 1e-14, d));

    let lattice = lattice_mass_check(100_000);
    report.entries.push(ReportEntry::check("lattice_law_total_mass", 1.0, lattice.total(), 1e-12));
    report.entries.push(ReportEntry::lower_bound("lattice_law_min_atom", 0.0, lattice.min_atom));
    for (label, u) in [("U", Univariate::Triangular), ("V", Univariate::Triangular), ("W", Univariate::PeriodicTriangular)] {
        report.metadata.insert(format!("exponential_moment_{label}"), u.has_exponential_moment().to_string());
    }

    if let Some(path) = &cfg.scan_out {
        let mut rows = scan_rows(&x, &y, h, t, Region::Octant)?;
        rows.extend(scan_rows(&x, &y, h, t, Region::Complement)?);
        let f = File::create(path).map_err(|e| io_err(path, e))?;
        write_scan_table(&rows, BufWriter::new(f))?;
    }
    Ok(report)
}
