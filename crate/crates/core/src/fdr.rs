//! Forward-Douglas-Rachford splitting.
//!
//! For `γ ∈ ]0, 2β[` the operators
//!
//! ```text
//! T_γ = ½ (Id + R_{γA} ∘ R_{N_V})        firmly nonexpansive
//! S_γ = Id − γ P_V ∘ B ∘ P_V             γ/(2β)-averaged
//! ```
//!
//! characterize the solutions: `x` solves `0 ∈ Ax + Bx + N_V x` iff
//! `x = P_V z` for some `z ∈ Fix(T_γ ∘ S_γ)`. The solver runs the errored
//! Krasnosel'skiĭ–Mann iteration on that composition, written in primal-dual
//! form:
//!
//! ```text
//! x_n = P_V z_n
//! y_n = (x_n − z_n)/γ
//! s_n = x_n − γ P_V(B x_n + a_n) + γ y_n
//! p_n = J_{γA} s_n + b_n
//! z_{n+1} = z_n + λ_n (p_n − x_n)
//! ```

use std::sync::Arc;

use crate::error::{check_dim, Error, Result};
use crate::iteration::{all_finite, IterationRecord, Membership, Status, StopCriteria};
use crate::km::{composed_alpha, ErrorSchedule, RelaxationSchedule, AUDIT_PREFIX};
use crate::operators::{check_gamma, AveragedOperator, Cocoercive, ResolventFamily};
use crate::spaces::{SubspaceProjector, Vector};

/// `0 ∈ Ax + Bx + N_V x`
#[derive(Clone)]
pub struct InclusionProblem {
    a: Arc<dyn ResolventFamily>,
    b: Arc<dyn Cocoercive>,
    v: SubspaceProjector,
}

impl std::fmt::Debug for InclusionProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InclusionProblem")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("v", &self.v.label())
            .field("dim", &self.dim())
            .finish()
    }
}

impl InclusionProblem {
    pub fn new(a: Arc<dyn ResolventFamily>, b: Arc<dyn Cocoercive>, v: SubspaceProjector) -> Result<Self> {
        check_dim(v.dim(), a.dim())?;
        check_dim(v.dim(), b.dim())?;
        Ok(Self { a, b, v })
    }

    pub fn a(&self) -> &Arc<dyn ResolventFamily> {
        &self.a
    }

    pub fn b(&self) -> &Arc<dyn Cocoercive> {
        &self.b
    }

    pub fn v(&self) -> &SubspaceProjector {
        &self.v
    }

    pub fn dim(&self) -> usize {
        self.v.dim()
    }

    pub fn beta(&self) -> f64 {
        self.b.beta()
    }

    /// Rejects `γ ∉ ]0, 2β[`.
    pub fn check_gamma(&self, gamma: f64) -> Result<()> {
        let upper = 2.0 * self.beta();
        if gamma > 0.0 && gamma < upper {
            Ok(())
        } else {
            Err(Error::InadmissibleStep {
                name: "γ",
                value: gamma,
                range: format!("γ ∈ ]0, 2β[ = ]0, {upper}["),
            })
        }
    }

    /// `α = max{2/3, 2γ/(γ + 2β)}`, the averagedness constant of `T_γ ∘ S_γ`.
    pub fn alpha(&self, gamma: f64) -> Result<f64> {
        self.check_gamma(gamma)?;
        composed_alpha(&[0.5, gamma / (2.0 * self.beta())])
    }

    /// `P_V B P_V x`
    pub(crate) fn projected_forward(&self, x: &Vector) -> Result<Vector> {
        Ok(self.v.apply(&self.b.eval(&self.v.apply(x))?))
    }
}

/// `T_γ = ½(Id + R_{γA} ∘ R_{N_V})`, declared `1/2`-averaged.
pub fn build_t(a: Arc<dyn ResolventFamily>, v: SubspaceProjector, gamma: f64) -> Result<AveragedOperator> {
    check_gamma(gamma)?;
    check_dim(v.dim(), a.dim())?;
    let inner = v.inner().clone();
    AveragedOperator::with_inner(v.dim(), 0.5, inner, move |x| {
        let r = v.reflect(x)?;
        let j = a.resolve(gamma, &r)?;
        // ½(x + 2J(r) − r)
        Ok((x + j * 2.0 - r) * 0.5)
    })
}

/// `S_γ = Id − γ P_V B P_V`, declared `γ/(2β)`-averaged; needs `γ ∈ ]0, 2β[`.
pub fn build_s(b: Arc<dyn Cocoercive>, v: SubspaceProjector, gamma: f64) -> Result<AveragedOperator> {
    check_dim(v.dim(), b.dim())?;
    let upper = 2.0 * b.beta();
    if !(gamma > 0.0 && gamma < upper) {
        return Err(Error::InadmissibleStep {
            name: "γ",
            value: gamma,
            range: format!("γ ∈ ]0, 2β[ = ]0, {upper}["),
        });
    }
    let inner = v.inner().clone();
    let alpha = gamma / upper;
    AveragedOperator::with_inner(v.dim(), alpha, inner, move |x| {
        let px = v.project(x)?;
        let bx = b.eval(&px)?;
        Ok(x - v.apply(&bx) * gamma)
    })
}

#[derive(Debug, Clone)]
pub struct FdrConfig {
    /// Defaults to `β`, the midpoint of `]0, 2β[`.
    pub gamma: Option<f64>,
    pub relax: RelaxationSchedule,
    /// Errors `a_n` on the forward (`B`) step.
    pub a_errors: ErrorSchedule,
    /// Errors `b_n` on the resolvent step.
    pub b_errors: ErrorSchedule,
    pub stop: StopCriteria,
}

impl Default for FdrConfig {
    fn default() -> Self {
        Self {
            gamma: None,
            relax: RelaxationSchedule::Constant(1.0),
            a_errors: ErrorSchedule::zero(),
            b_errors: ErrorSchedule::zero(),
            stop: StopCriteria::default(),
        }
    }
}

impl FdrConfig {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_relax(mut self, relax: RelaxationSchedule) -> Self {
        self.relax = relax;
        self
    }

    pub fn with_errors(mut self, a: ErrorSchedule, b: ErrorSchedule) -> Self {
        self.a_errors = a;
        self.b_errors = b;
        self
    }

    pub fn with_stop(mut self, stop: StopCriteria) -> Self {
        self.stop = stop;
        self
    }
}

/// Outcome of a primal-dual solve: `x̄ ∈ V` and `ȳ ∈ V⊥ ∩ (Ax̄ + P_V Bx̄)`.
#[derive(Debug, Clone)]
pub struct PrimalDualResult {
    pub x: Vector,
    pub y: Vector,
    /// Final governing sequence `z_n` (forward-Douglas-Rachford only).
    pub z: Option<Vector>,
    pub gamma: f64,
    pub status: Status,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    /// `(x_n, y_n)` for every iteration when requested.
    pub trajectory: Option<Vec<(Vector, Vector)>>,
    /// Largest relative deviation between the iterates and the
    /// forward-backward recursion on `r_n = x_n + γ y_n` (partial-inverse
    /// closed-form path only).
    pub fb_view_deviation: Option<f64>,
}

impl PrimalDualResult {
    pub fn final_residual(&self) -> Option<f64> {
        self.history.last().map(|r| r.residual)
    }

    /// Largest relative membership defect over the logged iterations.
    pub fn worst_membership_defect(&self) -> f64 {
        self.history
            .iter()
            .filter_map(|r| r.membership.map(|m| m.relative_defect()))
            .fold(0.0, f64::max)
    }
}

pub(crate) type Objective<'a> = &'a dyn Fn(&Vector) -> Option<f64>;

pub(crate) fn membership(v: &SubspaceProjector, x: &Vector, y: &Vector) -> Membership {
    Membership {
        x_complement: v.norm(&v.apply_complement(x)),
        x_norm: v.norm(x),
        y_projection: v.norm(&v.apply(y)),
        y_norm: v.norm(y),
    }
}

/// Fills `forward_gap` on every logged record: `‖P_V B x_n − P_V B x̄‖`
/// with the final iterate as `x̄`.
pub(crate) fn fill_forward_gaps(
    v: &SubspaceProjector,
    history: &mut [IterationRecord],
    forward: &[Vector],
    last: &Vector,
) {
    for (rec, f) in history.iter_mut().zip(forward) {
        rec.forward_gap = Some(v.norm(&(f - last)));
    }
}

/// Solves `0 ∈ Ax + Bx + N_V x` by forward-Douglas-Rachford splitting.
pub fn fdr_solve(prob: &InclusionProblem, cfg: &FdrConfig, z0: &Vector) -> Result<PrimalDualResult> {
    fdr_run(prob, cfg, z0, None)
}

pub(crate) fn fdr_run(
    prob: &InclusionProblem,
    cfg: &FdrConfig,
    z0: &Vector,
    objective: Option<Objective<'_>>,
) -> Result<PrimalDualResult> {
    let dim = prob.dim();
    check_dim(dim, z0.len())?;
    cfg.stop.validate()?;
    let gamma = cfg.gamma.unwrap_or_else(|| prob.beta());
    let alpha = prob.alpha(gamma)?;
    let relax = &cfg.relax;
    relax.audit_open(
        1.0 / alpha,
        &format!("]0, 1/α[ with α = max{{2/3, 2γ/(γ+2β)}} = {alpha}, i.e. ]0, {}[", 1.0 / alpha),
    )?;
    let v = prob.v();
    let prefix = AUDIT_PREFIX.min(cfg.stop.max_iters + 1);
    cfg.a_errors.audit(relax, dim, 1, prefix, v.inner())?;
    cfg.b_errors.audit(relax, dim, 1, prefix, v.inner())?;
    let errored = !cfg.a_errors.is_zero() || !cfg.b_errors.is_zero();

    let stop = &cfg.stop;
    let mut z = z0.clone();
    let mut history = Vec::new();
    let mut forward = Vec::new();
    let mut trajectory = stop.keep_iterates.then(Vec::new);
    let mut status = Status::MaxIters;
    let mut iterations = 0;
    let mut last_x = v.apply(&z);
    let mut last_y = (&last_x - &z) / gamma;
    let mut last_forward = Vector::zeros(dim);

    for n in 0..=stop.max_iters {
        iterations = n;
        let x = v.apply(&z);
        let y = (&x - &z) / gamma;
        let bx = prob.b.eval(&x)?;
        let pbx = v.apply(&bx);
        let s_clean = &x - &pbx * gamma + &y * gamma;
        let p_clean = prob.a.resolve(gamma, &s_clean)?;
        let residual = v.norm(&(&p_clean - &x));

        let p = if errored {
            let mut fwd = bx.clone();
            if let Some(a) = cfg.a_errors.error(0, n, dim) {
                fwd += a;
            }
            let s = &x - v.apply(&fwd) * gamma + &y * gamma;
            let mut p = prob.a.resolve(gamma, &s)?;
            if let Some(b) = cfg.b_errors.error(0, n, dim) {
                p += b;
            }
            p
        } else {
            p_clean
        };

        let lambda = relax.lambda(n);
        let dz = (p - &x) * lambda;
        let dx = v.apply(&dz);
        let dy = v.apply_complement(&dz) / -gamma;

        let converged = residual <= stop.tol;
        let diverged = !residual.is_finite() || !all_finite(&dz);
        let terminal = converged || diverged || n == stop.max_iters;
        if let Some(t) = trajectory.as_mut() {
            t.push((x.clone(), y.clone()));
        }
        if stop.should_log(n, terminal) {
            let mut rec = IterationRecord::new(n, lambda, residual, v.norm(&dx));
            rec.dy = Some(v.norm(&dy));
            rec.objective = objective.and_then(|f| f(&x));
            rec.membership = Some(membership(v, &x, &y));
            history.push(rec);
            forward.push(pbx.clone());
        }
        last_forward = pbx;
        if diverged {
            status = Status::Diverged;
            last_x = x;
            last_y = y;
            break;
        }
        if converged || n == stop.max_iters {
            if converged {
                status = Status::Converged;
            }
            last_x = x;
            last_y = y;
            break;
        }
        z += dz;
    }

    fill_forward_gaps(v, &mut history, &forward, &last_forward);
    Ok(PrimalDualResult {
        x: last_x,
        y: last_y,
        z: Some(z),
        gamma,
        status,
        iterations,
        history,
        trajectory,
        fb_view_deviation: None,
    })
}

/// Fixed-point and inclusion diagnostics for a candidate `z`.
#[derive(Debug, Clone)]
pub struct CharacterizationReport {
    /// `‖T_γ(S_γ z) − z‖`
    pub fixed_point_residual: f64,
    /// `P_V z`
    pub x: Vector,
    /// `−P_{V⊥} z / γ`
    pub y: Vector,
    /// `‖x − J_A(x + y − P_V B x)‖`, zero iff `y − P_V Bx ∈ Ax`.
    pub inclusion_residual: f64,
}

/// Evaluates the fixed-point characterization of the solutions at `z`.
pub fn characterization_check(prob: &InclusionProblem, gamma: f64, z: &Vector) -> Result<CharacterizationReport> {
    prob.check_gamma(gamma)?;
    check_dim(prob.dim(), z.len())?;
    let v = prob.v();
    let t = build_t(Arc::clone(&prob.a), v.clone(), gamma)?;
    let s = build_s(Arc::clone(&prob.b), v.clone(), gamma)?;
    let tsz = t.apply(&s.apply(z)?)?;
    let x = v.apply(z);
    let y = v.apply_complement(z) / -gamma;
    let pbx = prob.projected_forward(&x)?;
    let j = prob.a.resolve(1.0, &(&x + &y - pbx))?;
    Ok(CharacterizationReport {
        fixed_point_residual: v.norm(&(tsz - z)),
        inclusion_residual: v.norm(&(&x - j)),
        x,
        y,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{identity_map, normal_cone_box, normal_cone_of_subspace, zero_map, zero_operator};
    use nalgebra::DMatrix;

    fn v(c: &[f64]) -> Vector {
        Vector::from_column_slice(c)
    }

    #[test]
    fn build_t_examples() {
        let x = v(&[0.3, -1.2]);
        let t = build_t(Arc::new(zero_operator(2)), SubspaceProjector::identity(2), 1.0).unwrap();
        assert!((t.apply(&x).unwrap() - &x).norm() < 1e-15);
        let t = build_t(Arc::new(zero_operator(2)), SubspaceProjector::zero(2), 1.0).unwrap();
        assert_eq!(t.apply(&x).unwrap(), v(&[0.0, 0.0]));
        let diag = Arc::new(normal_cone_of_subspace(SubspaceProjector::constant(2)));
        let xaxis = SubspaceProjector::dense(DMatrix::from_diagonal(&v(&[1.0, 0.0]))).unwrap();
        let t = build_t(diag, xaxis, 0.8).unwrap();
        assert_eq!(t.apply(&v(&[2.0, 0.0])).unwrap(), v(&[1.0, 1.0]));
        assert_eq!(t.alpha(), 0.5);
    }

    #[test]
    fn build_s_examples() {
        let x = v(&[2.0, 0.0]);
        let zero = Arc::new(zero_map(2, 1.0).unwrap());
        let s = build_s(zero, SubspaceProjector::identity(2), 1.0).unwrap();
        assert_eq!(s.apply(&x).unwrap(), x);
        let id = Arc::new(identity_map(2));
        let s = build_s(id.clone(), SubspaceProjector::identity(2), 1.0).unwrap();
        assert_eq!(s.apply(&x).unwrap(), v(&[0.0, 0.0]));
        assert_eq!(s.alpha(), 0.5);
        let s = build_s(id.clone(), SubspaceProjector::constant(2), 1.0).unwrap();
        assert_eq!(s.apply(&x).unwrap(), v(&[1.0, -1.0]));
        assert!(build_s(id.clone(), SubspaceProjector::identity(2), 2.0).is_err());
        assert!(build_s(id, SubspaceProjector::identity(2), 0.0).is_err());
    }

    fn box_problem() -> InclusionProblem {
        InclusionProblem::new(
            Arc::new(normal_cone_box(v(&[1.0, 1.0]), v(&[2.0, 2.0])).unwrap()),
            Arc::new(identity_map(2)),
            SubspaceProjector::constant(2),
        )
        .unwrap()
    }

    #[test]
    fn trivial_problem_converges_immediately() {
        let prob = InclusionProblem::new(
            Arc::new(zero_operator(3)),
            Arc::new(zero_map(3, 1.0).unwrap()),
            SubspaceProjector::identity(3),
        )
        .unwrap();
        let z0 = v(&[1.0, -4.0, 2.5]);
        let r = fdr_solve(&prob, &FdrConfig::default(), &z0).unwrap();
        assert_eq!(r.status, Status::Converged);
        assert_eq!(r.iterations, 0);
        assert_eq!(r.x, z0);
    }

    #[test]
    fn gamma_and_lambda_are_validated() {
        let prob = box_problem();
        let z0 = Vector::zeros(2);
        let err = fdr_solve(&prob, &FdrConfig::default().with_gamma(2.0), &z0).unwrap_err();
        assert!(err.to_string().contains("]0, 2β["), "{err}");
        // γ = β ⇒ α = 2/3 ⇒ λ < 3/2.
        let cfg = FdrConfig::default().with_relax(RelaxationSchedule::Constant(1.5));
        assert!(fdr_solve(&prob, &cfg, &z0).is_err());
        let cfg = FdrConfig::default().with_relax(RelaxationSchedule::Constant(1.45));
        assert!(fdr_solve(&prob, &cfg, &z0).is_ok());
    }

    #[test]
    fn max_iters_zero_gives_single_record() {
        let prob = box_problem();
        let cfg = FdrConfig::default().with_stop(StopCriteria::new(1e-8, 0));
        let r = fdr_solve(&prob, &cfg, &v(&[5.0, -3.0])).unwrap();
        assert_eq!(r.status, Status::MaxIters);
        assert_eq!(r.history.len(), 1);
        assert_eq!(r.history[0].n, 0);
    }

    #[test]
    fn alpha_matches_closed_form() {
        let prob = box_problem();
        for gamma in [0.1, 0.5, 1.0, 1.5, 1.99] {
            let expected = f64::max(2.0 / 3.0, 2.0 * gamma / (gamma + 2.0));
            assert!((prob.alpha(gamma).unwrap() - expected).abs() < 1e-15);
        }
    }
}
