//! Errored Krasnosel'skiĭ–Mann iteration for a composition of averaged
//! operators `T = T₁ ∘ ⋯ ∘ T_m`:
//!
//! ```text
//! z_{n+1} = z_n + λ_n ( T₁(T₂(⋯ T_m z_n + e_{m,n} ⋯) + e_{2,n}) + e_{1,n} − z_n )
//! ```
//!
//! The composition is `α`-averaged with `α` from [`composed_alpha`]. The
//! iteration converges when `λ_n ∈ ]0, 1/α[` with `Σ λ_n(1 − αλ_n) = +∞` and
//! `Σ λ_n‖e_{i,n}‖ < +∞` for every `i`; both conditions are audited before
//! the first iteration for the built-in schedules.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::iteration::{all_finite, IterationRecord, Status, StopCriteria};
use crate::operators::AveragedOperator;
use crate::spaces::{InnerProduct, Vector};

/// Averagedness constant of `T₁ ∘ ⋯ ∘ T_m` when each `Tᵢ` is `αᵢ`-averaged:
/// `m·max αᵢ / (1 + (m − 1)·max αᵢ)`.
pub fn composed_alpha(alphas: &[f64]) -> Result<f64> {
    if alphas.is_empty() {
        return Err(Error::InvalidParameter("composed_alpha needs at least one constant".into()));
    }
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::InvalidParameter(format!(
            "averagedness constants must lie in ]0,1[, got {a}"
        )));
    }
    let m = alphas.len() as f64;
    let amax = alphas.iter().copied().fold(f64::MIN, f64::max);
    Ok(m * amax / (1.0 + (m - 1.0) * amax))
}

/// Relaxation parameters `(λ_n)`.
#[derive(Debug, Clone, PartialEq)]
pub enum RelaxationSchedule {
    Constant(f64),
    /// `λ_n = scale / (n + 1)^exponent`
    Power { scale: f64, exponent: f64 },
    /// `λ_n = values[n mod len]`
    Periodic(Vec<f64>),
}

impl Default for RelaxationSchedule {
    fn default() -> Self {
        RelaxationSchedule::Constant(1.0)
    }
}

impl RelaxationSchedule {
    pub fn lambda(&self, n: usize) -> f64 {
        match self {
            RelaxationSchedule::Constant(l) => *l,
            RelaxationSchedule::Power { scale, exponent } => scale / ((n + 1) as f64).powf(*exponent),
            RelaxationSchedule::Periodic(v) => v[n % v.len()],
        }
    }

    /// `p` such that `λ_n ~ n^{-p}`; zero for schedules bounded away from 0.
    pub fn decay_exponent(&self) -> f64 {
        match self {
            RelaxationSchedule::Power { exponent, .. } => *exponent,
            _ => 0.0,
        }
    }

    pub fn supremum(&self) -> f64 {
        match self {
            RelaxationSchedule::Constant(l) => *l,
            RelaxationSchedule::Power { scale, exponent } => {
                if *exponent >= 0.0 {
                    *scale
                } else {
                    f64::INFINITY
                }
            }
            RelaxationSchedule::Periodic(v) => v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Infimum over all `n` (zero for a strictly decaying power schedule).
    pub fn infimum(&self) -> f64 {
        match self {
            RelaxationSchedule::Constant(l) => *l,
            RelaxationSchedule::Power { scale, exponent } => {
                if *exponent > 0.0 {
                    0.0
                } else {
                    *scale
                }
            }
            RelaxationSchedule::Periodic(v) => v.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    fn check_shape(&self) -> Result<()> {
        match self {
            RelaxationSchedule::Periodic(v) if v.is_empty() => {
                Err(Error::Schedule("periodic relaxation schedule is empty".into()))
            }
            RelaxationSchedule::Power { scale, exponent } if !scale.is_finite() || !exponent.is_finite() => {
                Err(Error::Schedule("power schedule parameters must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    /// Audits `λ_n ∈ ]0, upper[` and `Σ λ_n(upper − λ_n) = +∞` (the
    /// latter being `Σ λ_n(1 − αλ_n) = +∞` up to the factor `α = 1/upper`).
    /// `range` is the human-readable form of the interval used in messages.
    pub fn audit_open(&self, upper: f64, range: &str) -> Result<()> {
        self.check_shape()?;
        let sup = self.supremum();
        let inf = self.infimum();
        let inf_ok = match self {
            RelaxationSchedule::Power { scale, .. } => *scale > 0.0,
            _ => inf > 0.0,
        };
        if !inf_ok || !(sup < upper) {
            let bad = if !inf_ok { inf } else { sup };
            return Err(Error::InadmissibleStep {
                name: "λ_n",
                value: bad,
                range: range.to_string(),
            });
        }
        if self.decay_exponent() > 1.0 {
            return Err(Error::Schedule(format!(
                "relaxation decays like n^-{}, so Σ λ_n(1 − αλ_n) < +∞; need exponent ≤ 1",
                self.decay_exponent()
            )));
        }
        Ok(())
    }

    /// Audits the Krasnosel'skiĭ–Mann conditions for an `α`-averaged operator.
    pub fn audit_km(&self, alpha: f64) -> Result<()> {
        self.audit_open(1.0 / alpha, &format!("]0, 1/α[ = ]0, {}[ (α = {alpha})", 1.0 / alpha))
    }

    /// Audits `λ_n ∈ [ε, 1]`.
    pub fn audit_closed_unit(&self, eps: f64) -> Result<()> {
        self.check_shape()?;
        let inf = self.infimum();
        let sup = self.supremum();
        if inf < eps || sup > 1.0 {
            return Err(Error::InadmissibleStep {
                name: "λ_n",
                value: if inf < eps { inf } else { sup },
                range: format!("[ε, 1] = [{eps}, 1]"),
            });
        }
        Ok(())
    }
}

/// Declared bound `‖e_{i,n}‖ ≤ bound(n)`, used to audit summability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SummabilityCertificate {
    /// `scale · ratio^n`
    Geometric { scale: f64, ratio: f64 },
    /// `scale / (n + 1)^exponent`
    Polynomial { scale: f64, exponent: f64 },
}

impl SummabilityCertificate {
    pub fn bound(&self, n: usize) -> f64 {
        match *self {
            SummabilityCertificate::Geometric { scale, ratio } => scale * ratio.powi(n as i32),
            SummabilityCertificate::Polynomial { scale, exponent } => scale / ((n + 1) as f64).powf(exponent),
        }
    }

    /// Whether `Σ λ_n · bound(n) < +∞` for the given relaxation schedule.
    fn summable_with(&self, relax: &RelaxationSchedule) -> std::result::Result<(), String> {
        match *self {
            SummabilityCertificate::Geometric { ratio, .. } => {
                if (0.0..1.0).contains(&ratio) {
                    Ok(())
                } else {
                    Err(format!("geometric error ratio {ratio} is not in [0,1)"))
                }
            }
            SummabilityCertificate::Polynomial { exponent, .. } => {
                let p = relax.decay_exponent();
                if exponent + p > 1.0 {
                    Ok(())
                } else {
                    Err(format!(
                        "errors decay like n^-{exponent} and relaxation like n^-{p}; \
                         Σ λ_n‖e_n‖ diverges (need exponent sum > 1)"
                    ))
                }
            }
        }
    }
}

type ErrorFn = dyn Fn(usize, usize, usize) -> Vector + Send + Sync;

#[derive(Clone)]
enum ErrorKind {
    Zero,
    Geometric {
        scale: f64,
        ratio: f64,
        direction: Option<Vector>,
    },
    Polynomial {
        scale: f64,
        exponent: f64,
        direction: Option<Vector>,
    },
    Custom {
        generator: Arc<ErrorFn>,
        certificate: SummabilityCertificate,
    },
}

/// Error sequences `(e_{i,n})`, indexed by operator `i` and iteration `n`.
///
/// Built-in schedules emit `bound(n) · d` where `d` is a fixed direction
/// (the all-ones vector unless given) and ignore `i`.
#[derive(Clone)]
pub struct ErrorSchedule {
    kind: ErrorKind,
}

impl fmt::Debug for ErrorSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ErrorKind::Zero => f.write_str("ErrorSchedule::Zero"),
            ErrorKind::Geometric { scale, ratio, .. } => {
                write!(f, "ErrorSchedule::Geometric({scale}·{ratio}^n)")
            }
            ErrorKind::Polynomial { scale, exponent, .. } => {
                write!(f, "ErrorSchedule::Polynomial({scale}/(n+1)^{exponent})")
            }
            ErrorKind::Custom { certificate, .. } => write!(f, "ErrorSchedule::Custom({certificate:?})"),
        }
    }
}

impl Default for ErrorSchedule {
    fn default() -> Self {
        Self::zero()
    }
}

impl ErrorSchedule {
    pub fn zero() -> Self {
        Self { kind: ErrorKind::Zero }
    }

    /// `e_n = scale · ratio^n · (1, …, 1)`
    pub fn geometric(scale: f64, ratio: f64) -> Self {
        Self {
            kind: ErrorKind::Geometric {
                scale,
                ratio,
                direction: None,
            },
        }
    }

    /// `e_n = scale · ratio^n · direction`
    pub fn geometric_along(scale: f64, ratio: f64, direction: Vector) -> Self {
        Self {
            kind: ErrorKind::Geometric {
                scale,
                ratio,
                direction: Some(direction),
            },
        }
    }

    /// `e_n = scale / (n + 1)^exponent · (1, …, 1)`
    pub fn polynomial(scale: f64, exponent: f64) -> Self {
        Self {
            kind: ErrorKind::Polynomial {
                scale,
                exponent,
                direction: None,
            },
        }
    }

    pub fn polynomial_along(scale: f64, exponent: f64, direction: Vector) -> Self {
        Self {
            kind: ErrorKind::Polynomial {
                scale,
                exponent,
                direction: Some(direction),
            },
        }
    }

    /// User-defined errors `(i, n, dim) ↦ e_{i,n}` with a declared bound.
    pub fn custom<F>(certificate: SummabilityCertificate, generator: F) -> Self
    where
        F: Fn(usize, usize, usize) -> Vector + Send + Sync + 'static,
    {
        Self {
            kind: ErrorKind::Custom {
                generator: Arc::new(generator),
                certificate,
            },
        }
    }

    /// Stacks `m` per-block errors of length `base_dim` into one vector; block
    /// `k` receives `self.error(k, n, base_dim)`. Norms under the product
    /// weights are bounded by the largest block norm, so the certificate
    /// carries over.
    pub fn stacked(&self, m: usize, base_dim: usize) -> ErrorSchedule {
        let Some(certificate) = self.certificate(base_dim) else {
            return ErrorSchedule::zero();
        };
        let base = self.clone();
        ErrorSchedule::custom(certificate, move |_, n, dim| {
            let mut out = Vector::zeros(dim);
            for k in 0..m {
                if let Some(e) = base.error(k, n, base_dim) {
                    out.rows_mut(k * base_dim, base_dim).copy_from(&e);
                }
            }
            out
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ErrorKind::Zero)
    }

    /// `e_{i,n}` in a space of dimension `dim`; `None` for the zero schedule.
    pub fn error(&self, i: usize, n: usize, dim: usize) -> Option<Vector> {
        match &self.kind {
            ErrorKind::Zero => None,
            ErrorKind::Geometric { scale, ratio, direction } => {
                let c = scale * ratio.powi(n as i32);
                Some(along(direction, dim) * c)
            }
            ErrorKind::Polynomial {
                scale,
                exponent,
                direction,
            } => {
                let c = scale / ((n + 1) as f64).powf(*exponent);
                Some(along(direction, dim) * c)
            }
            ErrorKind::Custom { generator, .. } => Some(generator(i, n, dim)),
        }
    }

    /// Euclidean bound on `‖e_{i,n}‖` in dimension `dim`.
    pub fn certificate(&self, dim: usize) -> Option<SummabilityCertificate> {
        let dnorm = |d: &Option<Vector>| d.as_ref().map_or((dim as f64).sqrt(), |d| d.norm());
        match &self.kind {
            ErrorKind::Zero => None,
            ErrorKind::Geometric { scale, ratio, direction } => Some(SummabilityCertificate::Geometric {
                scale: scale.abs() * dnorm(direction),
                ratio: *ratio,
            }),
            ErrorKind::Polynomial {
                scale,
                exponent,
                direction,
            } => Some(SummabilityCertificate::Polynomial {
                scale: scale.abs() * dnorm(direction),
                exponent: *exponent,
            }),
            ErrorKind::Custom { certificate, .. } => Some(*certificate),
        }
    }

    /// Audits `Σ λ_n‖e_{i,n}‖ < +∞` against the declared certificate, and
    /// checks the generator against the certificate on the first `prefix`
    /// iterations for each of the `operators` indices.
    pub fn audit(
        &self,
        relax: &RelaxationSchedule,
        dim: usize,
        operators: usize,
        prefix: usize,
        inner: &InnerProduct,
    ) -> Result<()> {
        let direction_dim = match &self.kind {
            ErrorKind::Geometric { direction: Some(d), .. } | ErrorKind::Polynomial { direction: Some(d), .. } => {
                Some(d.len())
            }
            _ => None,
        };
        if let Some(d) = direction_dim {
            check_dim(dim, d)?;
        }
        let Some(cert) = self.certificate(dim) else {
            return Ok(());
        };
        cert.summable_with(relax).map_err(|msg| {
            Error::Schedule(format!("error schedule violates Σ λ_n‖e_n‖ < +∞: {msg}"))
        })?;
        if let ErrorKind::Custom { generator, .. } = &self.kind {
            for n in 0..prefix {
                let bound = cert.bound(n);
                for i in 0..operators {
                    let e = generator(i, n, dim);
                    check_dim(dim, e.len())?;
                    let norm = inner.norm(&e);
                    if !(norm <= bound * (1.0 + 1e-9) + 1e-300) {
                        return Err(Error::Schedule(format!(
                            "error e_({i},{n}) has norm {norm:e}, above its declared bound {bound:e}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn along(direction: &Option<Vector>, dim: usize) -> Vector {
    direction.clone().unwrap_or_else(|| Vector::from_element(dim, 1.0))
}

/// Number of leading iterations on which custom error generators are checked
/// against their certificates.
pub(crate) const AUDIT_PREFIX: usize = 1000;

#[derive(Debug, Clone)]
pub struct KmResult {
    pub point: Vector,
    pub status: Status,
    pub iterations: usize,
    pub alpha: f64,
    pub history: Vec<IterationRecord>,
    /// Running value of `Σ λ_k(1 − αλ_k)‖Tz_k − z_k‖²` at each logged record.
    pub descent_sums: Vec<f64>,
    pub trajectory: Option<Vec<Vector>>,
}

impl KmResult {
    pub fn final_residual(&self) -> Option<f64> {
        self.history.last().map(|r| r.residual)
    }
}

fn compose(ops: &[AveragedOperator], z: &Vector, errors: Option<(&ErrorSchedule, usize)>) -> Result<Vector> {
    let mut w = z.clone();
    for (i, op) in ops.iter().enumerate().rev() {
        w = op.apply(&w)?;
        if let Some((errs, n)) = errors {
            if let Some(e) = errs.error(i, n, w.len()) {
                w += e;
            }
        }
    }
    Ok(w)
}

/// Runs the errored Krasnosel'skiĭ–Mann iteration on `ops[0] ∘ ⋯ ∘ ops[m−1]`.
/// Error `e_{i,n}` is added right after applying `ops[i]`.
pub fn km_solve(
    ops: &[AveragedOperator],
    relax: &RelaxationSchedule,
    errors: &ErrorSchedule,
    z0: &Vector,
    stop: &StopCriteria,
) -> Result<KmResult> {
    let first = ops
        .first()
        .ok_or_else(|| Error::InvalidParameter("at least one operator is required".into()))?;
    let dim = first.dim();
    for op in ops {
        check_dim(dim, op.dim())?;
    }
    check_dim(dim, z0.len())?;
    stop.validate()?;
    let alphas: Vec<f64> = ops.iter().map(|o| o.alpha()).collect();
    let alpha = composed_alpha(&alphas)?;
    relax.audit_km(alpha)?;
    let inner = first.inner().clone();
    errors.audit(relax, dim, ops.len(), AUDIT_PREFIX.min(stop.max_iters + 1), &inner)?;

    let mut z = z0.clone();
    let mut history = Vec::new();
    let mut descent_sums = Vec::new();
    let mut trajectory = stop.keep_iterates.then(Vec::new);
    let mut descent = 0.0;
    let mut status = Status::MaxIters;
    let mut iterations = 0;

    for n in 0..=stop.max_iters {
        iterations = n;
        if let Some(t) = trajectory.as_mut() {
            t.push(z.clone());
        }
        let tz = compose(ops, &z, None)?;
        let residual = inner.distance(&tz, &z);
        let lambda = relax.lambda(n);
        let target = if errors.is_zero() {
            tz
        } else {
            compose(ops, &z, Some((errors, n)))?
        };
        let step = (target - &z) * lambda;
        descent += lambda * (1.0 - alpha * lambda) * residual * residual;
        let converged = residual <= stop.tol;
        let diverged = !residual.is_finite() || !all_finite(&step);
        let terminal = converged || diverged || n == stop.max_iters;
        if stop.should_log(n, terminal) {
            history.push(IterationRecord::new(n, lambda, residual, inner.norm(&step)));
            descent_sums.push(descent);
        }
        if diverged {
            status = Status::Diverged;
            break;
        }
        if converged {
            status = Status::Converged;
            break;
        }
        if n == stop.max_iters {
            break;
        }
        z += step;
    }

    Ok(KmResult {
        point: z,
        status,
        iterations,
        alpha,
        history,
        descent_sums,
        trajectory,
    })
}

/// Diagnostic-only proxy for the summands
/// `λ_n ‖(Id − T_i) Π_{j>i} T_j z_n − (Id − T_i) Π_{j>i} T_j z̄‖²`, with the
/// final iterate standing in for the unknown limit `z̄`. Returns one row per
/// kept iterate and one column per operator. Needs a run with
/// [`StopCriteria::keep_iterates`].
pub fn defect_proxy(
    ops: &[AveragedOperator],
    relax: &RelaxationSchedule,
    result: &KmResult,
) -> Result<Vec<Vec<f64>>> {
    let trajectory = result
        .trajectory
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("run was not recorded with keep_iterates".into()))?;
    let inner = ops.first().map(|o| o.inner().clone()).unwrap_or_default();
    let defects = |z: &Vector| -> Result<Vec<Vector>> {
        // tail[i] = Π_{j>i} T_j z, built from the innermost operator out.
        let m = ops.len();
        let mut tails = vec![Vector::zeros(0); m];
        let mut w = z.clone();
        for i in (0..m).rev() {
            tails[i] = w.clone();
            w = ops[i].apply(&w)?;
        }
        tails
            .iter()
            .enumerate()
            .map(|(i, t)| Ok(t - ops[i].apply(t)?))
            .collect()
    };
    let limit = defects(&result.point)?;
    trajectory
        .iter()
        .enumerate()
        .map(|(n, z)| {
            let d = defects(z)?;
            Ok(d.iter()
                .zip(&limit)
                .map(|(a, b)| relax.lambda(n) * inner.norm_squared(&(a - b)))
                .collect())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SubspaceProjector;
    use nalgebra::DMatrix;

    fn v(c: &[f64]) -> Vector {
        Vector::from_column_slice(c)
    }

    #[test]
    fn composed_alpha_examples() {
        assert_eq!(composed_alpha(&[0.5]).unwrap(), 0.5);
        assert!((composed_alpha(&[0.5, 0.5]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((composed_alpha(&[0.5, 0.75]).unwrap() - 6.0 / 7.0).abs() < 1e-15);
        assert!(composed_alpha(&[]).is_err());
        assert!(composed_alpha(&[0.5, 1.0]).is_err());
        assert!(composed_alpha(&[0.0]).is_err());
    }

    #[test]
    fn constant_zero_map_converges_in_one_iteration() {
        let t = AveragedOperator::new(2, 0.5, |x| Ok(Vector::zeros(x.len()))).unwrap();
        let r = km_solve(
            &[t],
            &RelaxationSchedule::Constant(1.0),
            &ErrorSchedule::zero(),
            &v(&[1.0, 1.0]),
            &StopCriteria::default(),
        )
        .unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.iterations, 1);
        assert_eq!(r.point, v(&[0.0, 0.0]));
    }

    fn alternating_projections() -> Vec<AveragedOperator> {
        let xaxis = SubspaceProjector::dense(DMatrix::from_diagonal(&v(&[1.0, 0.0]))).unwrap();
        vec![
            AveragedOperator::projector(SubspaceProjector::constant(2)),
            AveragedOperator::projector(xaxis),
        ]
    }

    #[test]
    fn alternating_projections_reach_intersection() {
        let ops = alternating_projections();
        let stop = StopCriteria::new(1e-12, 10_000);
        let r = km_solve(
            &ops,
            &RelaxationSchedule::Constant(1.0),
            &ErrorSchedule::zero(),
            &v(&[0.0, 2.0]),
            &stop,
        )
        .unwrap();
        assert_eq!(r.status, Status::Converged);
        assert!(r.point.norm() < 1e-10);

        let errs = ErrorSchedule::geometric_along(1.0, 0.5, v(&[1.0, 0.0]));
        let r2 = km_solve(&ops, &RelaxationSchedule::Constant(1.0), &errs, &v(&[0.0, 2.0]), &stop).unwrap();
        assert_eq!(r2.status, Status::Converged);
        assert!(r2.point.norm() < 1e-8);
    }

    #[test]
    fn schedules_are_audited_before_iterating() {
        let ops = alternating_projections();
        let z0 = v(&[0.0, 2.0]);
        let stop = StopCriteria::default();
        // α = 2/3 ⇒ λ must stay below 3/2.
        let err = km_solve(&ops, &RelaxationSchedule::Constant(1.5), &ErrorSchedule::zero(), &z0, &stop)
            .unwrap_err();
        assert!(matches!(err, Error::InadmissibleStep { .. }));
        let fast = RelaxationSchedule::Power {
            scale: 1.0,
            exponent: 1.5,
        };
        assert!(km_solve(&ops, &fast, &ErrorSchedule::zero(), &z0, &stop).is_err());
        let harmonic = ErrorSchedule::polynomial(1.0, 1.0);
        let err = km_solve(&ops, &RelaxationSchedule::Constant(1.0), &harmonic, &z0, &stop).unwrap_err();
        assert!(matches!(err, Error::Schedule(_)));
        // The same errors are summable against a decaying relaxation.
        let slow = RelaxationSchedule::Power {
            scale: 1.0,
            exponent: 0.5,
        };
        assert!(harmonic
            .audit(&slow, 2, 2, 10, &InnerProduct::Uniform)
            .is_ok());
    }

    #[test]
    fn custom_errors_are_checked_against_certificate() {
        let cert = SummabilityCertificate::Geometric { scale: 1.0, ratio: 0.5 };
        let honest = ErrorSchedule::custom(cert, |_, n, d| Vector::from_element(d, 0.5f64.powi(n as i32) / 2.0));
        let liar = ErrorSchedule::custom(cert, |_, _, d| Vector::from_element(d, 0.1));
        let relax = RelaxationSchedule::Constant(1.0);
        assert!(honest.audit(&relax, 2, 1, 100, &InnerProduct::Uniform).is_ok());
        assert!(liar.audit(&relax, 2, 1, 100, &InnerProduct::Uniform).is_err());
    }

    #[test]
    fn divergence_is_reported_with_partial_history() {
        let blowup = AveragedOperator::new(1, 0.5, |x| Ok(x * 1e200)).unwrap();
        let r = km_solve(
            &[blowup],
            &RelaxationSchedule::Constant(1.0),
            &ErrorSchedule::zero(),
            &v(&[1.0]),
            &StopCriteria::default(),
        )
        .unwrap();
        assert_eq!(r.status, Status::Diverged);
        assert!(!r.history.is_empty());
        assert!(r.history.len() < 10);
    }

    #[test]
    fn log_every_thins_history() {
        let ops = alternating_projections();
        let stop = StopCriteria::new(0.0, 100).with_log_every(10);
        let r = km_solve(
            &ops,
            &RelaxationSchedule::Constant(0.5),
            &ErrorSchedule::zero(),
            &v(&[0.0, 2.0]),
            &stop,
        )
        .unwrap();
        let ns: Vec<usize> = r.history.iter().map(|h| h.n).collect();
        assert_eq!(ns.first(), Some(&0));
        assert_eq!(ns.last(), Some(&r.iterations));
        assert!(ns.len() <= 12);
    }

    #[test]
    fn defect_proxy_vanishes_at_the_end() {
        let ops = alternating_projections();
        let stop = StopCriteria::new(1e-12, 10_000).keep_iterates();
        let relax = RelaxationSchedule::Constant(1.0);
        let r = km_solve(&ops, &relax, &ErrorSchedule::zero(), &v(&[0.0, 2.0]), &stop).unwrap();
        let proxy = defect_proxy(&ops, &relax, &r).unwrap();
        assert_eq!(proxy.len(), r.iterations + 1);
        assert!(proxy.last().unwrap().iter().all(|d| *d < 1e-20));
        assert!(proxy[0].iter().any(|d| *d > 0.0));
    }
}
