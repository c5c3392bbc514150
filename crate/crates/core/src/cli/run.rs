use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::cli::spec::{Algorithm, Init, ProblemSpec};
use crate::error::{Error, Result};
use crate::fdr::{characterization_check, fdr_solve, FdrConfig, InclusionProblem, PrimalDualResult};
use crate::fpi::{fpi_explicit_solve, fpi_solve, FpiConfig, LinearStep1, ScaledResolventOracle};
use crate::iteration::{IterationRecord, Status};
use crate::km::km_solve;
use crate::productspace::{parallel_dr2, sum_splitting_pi, sum_splitting_solve, ProductProblem, ProductResult};
use crate::spaces::Vector;
use crate::variational::min_over_subspace;

/// Final state of a run.
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub algorithm: Algorithm,
    pub status: Status,
    pub iterations: usize,
    pub final_residual: Option<f64>,
    pub solution: Vector,
    /// Algorithm-specific optimality certificate, named.
    pub certificate: Option<(&'static str, f64)>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub rows: Vec<IterationRecord>,
    pub summary: RunSummary,
}

impl RunRecord {
    pub fn exit_code(&self) -> i32 {
        exit_code(self.summary.status)
    }
}

pub const EXIT_CONVERGED: i32 = 0;
pub const EXIT_MAX_ITERS: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;
pub const EXIT_INVALID_SPEC: i32 = 64;
/// Failures after validation, such as I/O errors.
pub const EXIT_FAILURE: i32 = 1;

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Converged => EXIT_CONVERGED,
        Status::MaxIters => EXIT_MAX_ITERS,
        Status::Diverged => EXIT_DIVERGED,
    }
}

/// Whether a library error reflects invalid input rather than a runtime
/// failure.
pub fn is_validation_error(e: &Error) -> bool {
    matches!(
        e,
        Error::DimensionMismatch { .. }
            | Error::InvalidParameter(_)
            | Error::InadmissibleStep { .. }
            | Error::Schedule(_)
            | Error::Infeasible(_)
    )
}

fn from_primal_dual(algorithm: Algorithm, r: PrimalDualResult, certificate: Option<(&'static str, f64)>) -> RunSummary {
    RunSummary {
        algorithm,
        status: r.status,
        iterations: r.iterations,
        final_residual: r.final_residual(),
        solution: r.x,
        certificate,
        wall_time: Duration::ZERO,
    }
}

fn from_product(algorithm: Algorithm, r: ProductResult) -> RunSummary {
    RunSummary {
        algorithm,
        status: r.status,
        iterations: r.iterations,
        final_residual: r.final_residual(),
        solution: r.x,
        certificate: Some(("block", r.certificate.worst())),
        wall_time: Duration::ZERO,
    }
}

/// Dispatches a validated spec to its solver.
pub fn run(spec: &ProblemSpec) -> Result<RunRecord> {
    let start = Instant::now();
    let b = &spec.built;
    let stop = b.stop;
    let z0 = || match &b.init {
        Init::Z(z) => z.clone(),
        Init::XY(x, _) => x.clone(),
    };
    let xy0 = || match &b.init {
        Init::XY(x, y) => (x.clone(), y.clone()),
        Init::Z(z) => (z.clone(), Vector::zeros(z.len())),
    };
    let problem = || -> Result<InclusionProblem> {
        InclusionProblem::new(
            Arc::clone(b.a.as_ref().expect("validated")),
            Arc::clone(b.b.as_ref().expect("validated")),
            b.v.clone(),
        )
    };
    let fdr_cfg = FdrConfig {
        gamma: b.gamma,
        relax: b.relax.clone(),
        a_errors: b.a_errors.clone(),
        b_errors: b.b_errors.clone(),
        stop,
    };

    let (rows, mut summary) = match spec.algorithm {
        Algorithm::Fdr => {
            let prob = problem()?;
            let r = fdr_solve(&prob, &fdr_cfg, &z0())?;
            let cert = match (&r.z, r.status) {
                (Some(z), s) if s != Status::Diverged => {
                    Some(("inclusion", characterization_check(&prob, r.gamma, z)?.inclusion_residual))
                }
                _ => None,
            };
            (r.history.clone(), from_primal_dual(spec.algorithm, r, cert))
        }
        Algorithm::Fpi => {
            let prob = problem()?;
            let (x0, y0) = xy0();
            let cfg = FpiConfig {
                gamma: b.gamma,
                delta: b.delta.clone(),
                relax: b.relax.clone(),
                eps: b.eps,
                stop,
                ..FpiConfig::default()
            };
            let linear;
            let oracle: Option<&dyn ScaledResolventOracle> = if b.delta.is_unit() {
                None
            } else {
                linear = LinearStep1::new(b.linear_a.clone().expect("validated"), &b.v)?;
                Some(&linear)
            };
            let r = fpi_solve(&prob, &cfg, oracle, &x0, &y0)?;
            (r.history.clone(), from_primal_dual(spec.algorithm, r, None))
        }
        Algorithm::FpiExplicit => {
            let prob = problem()?;
            let (x0, y0) = xy0();
            let gamma = b.gamma.unwrap_or_else(|| prob.beta());
            let r = fpi_explicit_solve(&prob, gamma, &b.relax, &x0, &y0, &stop)?;
            (r.history.clone(), from_primal_dual(spec.algorithm, r, None))
        }
        Algorithm::Variational => {
            let r = min_over_subspace(
                Arc::clone(b.f.as_ref().expect("validated")),
                Arc::clone(b.g.as_ref().expect("validated")),
                b.v.clone(),
                &fdr_cfg,
                &z0(),
            )?;
            (r.history.clone(), from_primal_dual(spec.algorithm, r, None))
        }
        Algorithm::Km => {
            let r = km_solve(&b.km_ops, &b.relax, &b.a_errors, &z0(), &stop)?;
            let summary = RunSummary {
                algorithm: spec.algorithm,
                status: r.status,
                iterations: r.iterations,
                final_residual: r.final_residual(),
                solution: r.point.clone(),
                certificate: None,
                wall_time: Duration::ZERO,
            };
            (r.history, summary)
        }
        Algorithm::Product => {
            let prob = ProductProblem::new(
                b.blocks.clone(),
                Arc::clone(b.b.as_ref().expect("validated")),
                &b.weights,
            )?;
            let r = sum_splitting_solve(&prob, &fdr_cfg, &z0())?;
            (r.history.clone(), from_product(spec.algorithm, r))
        }
        Algorithm::PiSum => {
            let prob = ProductProblem::new(
                b.blocks.clone(),
                Arc::clone(b.b.as_ref().expect("validated")),
                &b.weights,
            )?;
            let (x0, y0) = xy0();
            let gamma = b.gamma.unwrap_or_else(|| prob.beta());
            let r = sum_splitting_pi(&prob, gamma, &b.relax, &x0, &y0, &stop)?;
            (r.history.clone(), from_product(spec.algorithm, r))
        }
        Algorithm::Dr2 => {
            let z = z0();
            let d = b.dim;
            let z1 = z.rows(0, d).into_owned();
            let z2 = z.rows(d, d).into_owned();
            let r = parallel_dr2(
                Arc::clone(&b.blocks[0]),
                Arc::clone(&b.blocks[1]),
                b.gamma.unwrap_or(1.0),
                &b.relax,
                &b.b_errors,
                (&z1, &z2),
                &stop,
            )?;
            (r.history.clone(), from_product(spec.algorithm, r))
        }
    };
    summary.wall_time = start.elapsed();
    Ok(RunRecord { rows, summary })
}

pub const CSV_HEADER: [&str; 6] = ["n", "lambda", "residual", "dx", "dy", "objective"];

fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Writes the history as CSV to any writer.
pub fn write_csv<W: std::io::Write>(record: &RunRecord, out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &record.rows {
        w.write_record([
            r.n.to_string(),
            cell(Some(r.lambda)),
            cell(Some(r.residual)),
            cell(Some(r.dx)),
            cell(r.dy),
            cell(r.objective),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the history as CSV to `path`.
pub fn emit_csv(record: &RunRecord, path: &Path) -> Result<()> {
    let io = |message: String| Error::Io {
        path: path.display().to_string(),
        message,
    };
    let file = std::fs::File::create(path).map_err(|e| io(e.to_string()))?;
    write_csv(record, std::io::BufWriter::new(file)).map_err(|e| io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::spec::parse_spec;

    #[test]
    fn zero_iterations_give_one_row() {
        let spec = parse_spec(
            r#"
            schema_version = 1
            algorithm = "fdr"
            dim = 2
            [operator]
            kind = "box"
            lo = [1.0, 1.0]
            hi = [2.0, 2.0]
            [cocoercive]
            kind = "identity"
            [stop]
            max_iters = 0
            tol = 0.0
        "#,
        )
        .unwrap();
        let r = run(&spec).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.summary.status, Status::MaxIters);
        assert_eq!(r.exit_code(), EXIT_MAX_ITERS);
    }

    #[test]
    fn csv_has_fixed_header_and_empty_cells() {
        let spec = parse_spec(
            r#"
            schema_version = 1
            algorithm = "km"
            dim = 2
            [[km_ops]]
            kind = "projector"
            subspace = { kind = "zero-mean" }
        "#,
        )
        .unwrap();
        let r = run(&spec).unwrap();
        let mut buf = Vec::new();
        write_csv(&r, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "n,lambda,residual,dx,dy,objective");
        assert!(lines.next().unwrap().ends_with(",,"));
    }
}
