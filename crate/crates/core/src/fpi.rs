//! Forward-partial-inverse splitting.
//!
//! With `𝒜_γ = (γA)_V` and `ℬ_γ = γ P_V B P_V`, `x` solves the inclusion iff
//! `x + γ(y − P_{V⊥}Bx) ∈ zer(𝒜_γ + ℬ_γ)` for some admissible `y`. Each
//! iteration performs
//!
//! ```text
//! Step 1: find (p_n, q_n) with  x_n − δ_n γ P_V B x_n + γ y_n = p_n + γ q_n
//!         and  P_V q_n / δ_n + P_{V⊥} q_n ∈ A(P_V p_n + P_{V⊥} p_n / δ_n)
//! Step 2: x_{n+1} = x_n + λ_n (P_V p_n − x_n)
//!         y_{n+1} = y_n + λ_n (P_{V⊥} q_n − y_n)
//! ```
//!
//! which is forward-backward splitting on `r_n = x_n + γ y_n`. Step 1 has a
//! closed form only for `δ_n = 1` (`p_n = J_{γA}(·)`); other step sizes need
//! a [`ScaledResolventOracle`], such as [`LinearStep1`] for affine `A`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::fdr::{fdr_solve, fill_forward_gaps, membership, FdrConfig, InclusionProblem, PrimalDualResult};
use crate::iteration::{all_finite, IterationRecord, Status, StopCriteria};
use crate::km::RelaxationSchedule;
use crate::operators::{partial_inverse_resolvent, LinearMonotone, ResolventFamily};
use crate::spaces::{SubspaceProjector, Vector};

pub const DEFAULT_EPS: f64 = 1e-3;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-9;
/// Relative tolerance of the per-iteration forward-backward cross-check.
pub const FB_VIEW_TOL: f64 = 1e-8;

/// Step sizes `(δ_n)`, required to lie in `[ε, 2β/γ − ε]`.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    Constant(f64),
    Periodic(Vec<f64>),
}

impl Default for StepSchedule {
    fn default() -> Self {
        StepSchedule::Constant(1.0)
    }
}

impl StepSchedule {
    pub fn delta(&self, n: usize) -> f64 {
        match self {
            StepSchedule::Constant(d) => *d,
            StepSchedule::Periodic(v) => v[n % v.len()],
        }
    }

    pub fn is_unit(&self) -> bool {
        match self {
            StepSchedule::Constant(d) => *d == 1.0,
            StepSchedule::Periodic(v) => v.iter().all(|d| *d == 1.0),
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            StepSchedule::Constant(d) => std::slice::from_ref(d),
            StepSchedule::Periodic(v) => v,
        }
    }

    /// Audits `ε ∈ ]0, max{1, β/γ}[` and `δ_n ∈ [ε, 2β/γ − ε]`.
    pub fn audit(&self, beta: f64, gamma: f64, eps: f64) -> Result<()> {
        let eps_max = f64::max(1.0, beta / gamma);
        if !(eps > 0.0 && eps < eps_max) {
            return Err(Error::InvalidParameter(format!(
                "ε = {eps} outside ]0, max{{1, β/γ}}[ = ]0, {eps_max}["
            )));
        }
        let values = self.values();
        if values.is_empty() {
            return Err(Error::Schedule("step schedule is empty".into()));
        }
        let hi = 2.0 * beta / gamma - eps;
        for &d in values {
            if !(d >= eps && d <= hi) {
                return Err(Error::InadmissibleStep {
                    name: "δ_n",
                    value: d,
                    range: format!("[ε, 2β/γ − ε] = [{eps}, {hi}]"),
                });
            }
        }
        Ok(())
    }
}

/// Data handed to a Step 1 oracle. `rhs = x − δγ P_V B x + γ y` is the point
/// that `p + γq` must reproduce.
#[derive(Debug, Clone, Copy)]
pub struct Step1Input<'a> {
    pub x: &'a Vector,
    pub y: &'a Vector,
    pub rhs: &'a Vector,
    pub delta: f64,
    pub gamma: f64,
}

/// Solves Step 1 for general `δ_n`: returns `(p, q)` with `p + γq = rhs` and
/// `P_V q/δ + P_{V⊥} q ∈ A(P_V p + P_{V⊥} p/δ)`.
pub trait ScaledResolventOracle: Send + Sync {
    fn solve_step1(&self, input: &Step1Input<'_>) -> Result<(Vector, Vector)>;
}

/// Step 1 for `δ = 1`: `p = J_{γA}(rhs)`, `q = (rhs − p)/γ`.
pub struct ClosedFormStep1 {
    a: Arc<dyn ResolventFamily>,
}

impl ClosedFormStep1 {
    pub fn new(a: Arc<dyn ResolventFamily>) -> Self {
        Self { a }
    }
}

impl ScaledResolventOracle for ClosedFormStep1 {
    fn solve_step1(&self, input: &Step1Input<'_>) -> Result<(Vector, Vector)> {
        if input.delta != 1.0 {
            return Err(Error::InvalidParameter(format!(
                "closed-form Step 1 requires δ = 1, got {}",
                input.delta
            )));
        }
        let p = self.a.resolve(input.gamma, input.rhs)?;
        let q = (input.rhs - &p) / input.gamma;
        Ok((p, q))
    }
}

/// Step 1 for an affine operator `Au = Mu + c` and any `δ`. Writing
/// `p = P_V u + δ P_{V⊥} u` and `q = (δP_V + P_{V⊥})(Mu + c)`, the pair is
/// found from the linear system
/// `[(P_V + δP_{V⊥}) + γ(δP_V + P_{V⊥})M] u = rhs − γ(δP_V + P_{V⊥})c`.
pub struct LinearStep1 {
    op: LinearMonotone,
    projector: DMatrix<f64>,
}

impl LinearStep1 {
    pub fn new(op: LinearMonotone, v: &SubspaceProjector) -> Result<Self> {
        check_dim(v.dim(), op.matrix().nrows())?;
        let n = v.dim();
        let mut projector = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut e = Vector::zeros(n);
            e[j] = 1.0;
            projector.set_column(j, &v.apply(&e));
        }
        Ok(Self { op, projector })
    }
}

impl ScaledResolventOracle for LinearStep1 {
    fn solve_step1(&self, input: &Step1Input<'_>) -> Result<(Vector, Vector)> {
        let (d, g) = (input.delta, input.gamma);
        let n = self.projector.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        let comp = &id - &self.projector;
        let left = &self.projector + &comp * d;
        let right = &self.projector * d + &comp;
        let system = &left + &right * self.op.matrix() * g;
        let target = input.rhs - &right * self.op.shift() * g;
        let u = system
            .lu()
            .solve(&target)
            .ok_or_else(|| Error::Singular("Step 1 system for the linear operator".into()))?;
        let q = &right * self.op.apply(&u);
        Ok((&left * u, q))
    }
}

/// Residuals of a Step 1 pair: the sum identity `‖p + γq − rhs‖` and the
/// inclusion `v ∈ Au` checked as `‖u − J_A(u + v)‖` with
/// `u = P_V p + P_{V⊥}p/δ`, `v = P_V q/δ + P_{V⊥} q`.
pub fn step1_residuals(
    a: &dyn ResolventFamily,
    v: &SubspaceProjector,
    input: &Step1Input<'_>,
    p: &Vector,
    q: &Vector,
) -> Result<(f64, f64)> {
    let sum = v.norm(&(p + q * input.gamma - input.rhs));
    let u = v.apply(p) + v.apply_complement(p) / input.delta;
    let w = v.apply(q) / input.delta + v.apply_complement(q);
    let j = a.resolve(1.0, &(&u + &w))?;
    Ok((sum, v.norm(&(u - j))))
}

#[derive(Debug, Clone)]
pub struct FpiConfig {
    /// Defaults to `β`.
    pub gamma: Option<f64>,
    pub delta: StepSchedule,
    pub relax: RelaxationSchedule,
    pub eps: f64,
    pub oracle_tol: f64,
    /// Cross-check the iterates against the forward-backward recursion on
    /// `r_n = x_n + γ y_n` (closed-form path only).
    pub check_fb_view: bool,
    pub stop: StopCriteria,
}

impl Default for FpiConfig {
    fn default() -> Self {
        Self {
            gamma: None,
            delta: StepSchedule::Constant(1.0),
            relax: RelaxationSchedule::Constant(1.0),
            eps: DEFAULT_EPS,
            oracle_tol: DEFAULT_ORACLE_TOL,
            check_fb_view: true,
            stop: StopCriteria::default(),
        }
    }
}

impl FpiConfig {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = Some(gamma);
        self
    }

    pub fn with_relax(mut self, relax: RelaxationSchedule) -> Self {
        self.relax = relax;
        self
    }

    pub fn with_delta(mut self, delta: StepSchedule) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_stop(mut self, stop: StopCriteria) -> Self {
        self.stop = stop;
        self
    }
}

/// Membership tolerance for initial points: `‖P_{V⊥}x0‖ ≤ tol·(1 + ‖x0‖)`.
const START_TOL: f64 = 1e-10;

pub(crate) fn check_start(v: &SubspaceProjector, x0: &Vector, y0: &Vector) -> Result<()> {
    check_dim(v.dim(), x0.len())?;
    check_dim(v.dim(), y0.len())?;
    let xc = v.norm(&v.apply_complement(x0));
    if xc > START_TOL * (1.0 + v.norm(x0)) {
        return Err(Error::Infeasible(format!("x0 must lie in V (‖P_V⊥ x0‖ = {xc:e})")));
    }
    let yp = v.norm(&v.apply(y0));
    if yp > START_TOL * (1.0 + v.norm(y0)) {
        return Err(Error::Infeasible(format!("y0 must lie in V⊥ (‖P_V y0‖ = {yp:e})")));
    }
    Ok(())
}

fn resolve_gamma(prob: &InclusionProblem, gamma: Option<f64>) -> f64 {
    gamma.unwrap_or_else(|| prob.beta())
}

/// Forward-partial-inverse splitting with general step sizes `δ_n`.
///
/// With `oracle = None` the closed-form Step 1 is used, which requires
/// `δ_n ≡ 1`; every iterate is then cross-checked against the
/// forward-backward recursion on `r_n` when `cfg.check_fb_view` is set. A
/// supplied oracle is verified at every iteration and the run aborts with
/// [`Error::OracleResidual`] when its answer is off by more than
/// `cfg.oracle_tol`.
pub fn fpi_solve(
    prob: &InclusionProblem,
    cfg: &FpiConfig,
    oracle: Option<&dyn ScaledResolventOracle>,
    x0: &Vector,
    y0: &Vector,
) -> Result<PrimalDualResult> {
    let gamma = resolve_gamma(prob, cfg.gamma);
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InadmissibleStep {
            name: "γ",
            value: gamma,
            range: "]0, +∞[".into(),
        });
    }
    cfg.stop.validate()?;
    cfg.delta.audit(prob.beta(), gamma, cfg.eps)?;
    cfg.relax.audit_closed_unit(cfg.eps)?;
    let v = prob.v();
    check_start(v, x0, y0)?;

    let closed_form = ClosedFormStep1::new(Arc::clone(prob.a()));
    let use_oracle = oracle.is_some();
    if !use_oracle && !cfg.delta.is_unit() {
        return Err(Error::InvalidParameter(
            "δ_n ≠ 1 needs a Step 1 oracle; only δ = 1 has a closed form".into(),
        ));
    }
    let oracle: &dyn ScaledResolventOracle = oracle.unwrap_or(&closed_form);
    let check_fb = !use_oracle && cfg.check_fb_view;

    let stop = &cfg.stop;
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut history = Vec::new();
    let mut forward = Vec::new();
    let mut last_forward = Vector::zeros(prob.dim());
    let mut trajectory = stop.keep_iterates.then(Vec::new);
    let mut status = Status::MaxIters;
    let mut iterations = 0;
    let mut fb_dev: f64 = 0.0;

    for n in 0..=stop.max_iters {
        iterations = n;
        let delta = cfg.delta.delta(n);
        let lambda = cfg.relax.lambda(n);
        let pbx = v.apply(&prob.b().eval(&x)?);
        let rhs = &x - &pbx * (delta * gamma) + &y * gamma;
        let input = Step1Input {
            x: &x,
            y: &y,
            rhs: &rhs,
            delta,
            gamma,
        };
        let (p, q) = oracle.solve_step1(&input)?;
        if use_oracle {
            let (sum, incl) = step1_residuals(prob.a().as_ref(), v, &input, &p, &q)?;
            let scale = 1.0 + v.norm(&rhs);
            if sum > cfg.oracle_tol * scale {
                return Err(Error::OracleResidual {
                    iteration: n,
                    what: "p + γq ≠ x − δγP_V Bx + γy",
                    residual: sum,
                    tol: cfg.oracle_tol,
                });
            }
            if incl > cfg.oracle_tol * scale {
                return Err(Error::OracleResidual {
                    iteration: n,
                    what: "P_V q/δ + P_V⊥ q ∉ A(P_V p + P_V⊥ p/δ)",
                    residual: incl,
                    tol: cfg.oracle_tol,
                });
            }
        }
        let ex = v.apply(&p) - &x;
        let ey = v.apply_complement(&q) - &y;
        let residual = (v.inner().norm_squared(&ex) + gamma * gamma * v.inner().norm_squared(&ey)).sqrt();
        let dx = ex * lambda;
        let dy = ey * lambda;

        let converged = residual <= stop.tol;
        let diverged = !residual.is_finite() || !all_finite(&dx) || !all_finite(&dy);
        let terminal = converged || diverged || n == stop.max_iters;
        if let Some(t) = trajectory.as_mut() {
            t.push((x.clone(), y.clone()));
        }
        if stop.should_log(n, terminal) {
            let mut rec = IterationRecord::new(n, lambda, residual, v.norm(&dx));
            rec.dy = Some(v.norm(&dy));
            rec.membership = Some(membership(v, &x, &y));
            history.push(rec);
            forward.push(pbx.clone());
        }
        last_forward = pbx;
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
        let x_next = &x + dx;
        let y_next = &y + dy;
        if check_fb {
            let r = &x + &y * gamma;
            let br = prob.projected_forward(&r)? * gamma;
            let j = partial_inverse_resolvent(prob.a().as_ref(), v, gamma, &(&r - br))?;
            let predicted = &r + (j - &r) * lambda;
            let actual = &x_next + &y_next * gamma;
            let dev = v.norm(&(predicted - &actual)) / (1.0 + v.norm(&actual));
            fb_dev = fb_dev.max(dev);
            debug_assert!(dev <= FB_VIEW_TOL, "forward-backward view deviates by {dev:e} at n = {n}");
        }
        x = x_next;
        y = y_next;
    }

    fill_forward_gaps(v, &mut history, &forward, &last_forward);
    Ok(PrimalDualResult {
        x,
        y,
        z: None,
        gamma,
        status,
        iterations,
        history,
        trajectory,
        fb_view_deviation: check_fb.then_some(fb_dev),
    })
}

/// The explicit `δ = 1` routine:
///
/// ```text
/// s_n = x_n − γ P_V B x_n + γ y_n
/// p_n = J_{γA} s_n
/// y_{n+1} = y_n + (λ_n/γ)(P_V p_n − p_n)
/// x_{n+1} = x_n + λ_n (P_V p_n − x_n)
/// ```
pub fn fpi_explicit_solve(
    prob: &InclusionProblem,
    gamma: f64,
    relax: &RelaxationSchedule,
    x0: &Vector,
    y0: &Vector,
    stop: &StopCriteria,
) -> Result<PrimalDualResult> {
    prob.check_gamma(gamma)?;
    relax.audit_closed_unit(DEFAULT_EPS)?;
    stop.validate()?;
    let v = prob.v();
    check_start(v, x0, y0)?;

    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut history = Vec::new();
    let mut forward = Vec::new();
    let mut last_forward = Vector::zeros(prob.dim());
    let mut trajectory = stop.keep_iterates.then(Vec::new);
    let mut status = Status::MaxIters;
    let mut iterations = 0;

    for n in 0..=stop.max_iters {
        iterations = n;
        let lambda = relax.lambda(n);
        let pbx = v.apply(&prob.b().eval(&x)?);
        let s = &x - &pbx * gamma + &y * gamma;
        let p = prob.a().resolve(gamma, &s)?;
        let pvp = v.apply(&p);
        let dy = (&pvp - &p) * (lambda / gamma);
        let dx = (&pvp - &x) * lambda;
        let residual = v.norm(&(&p - &x));

        let converged = residual <= stop.tol;
        let diverged = !residual.is_finite() || !all_finite(&dx) || !all_finite(&dy);
        let terminal = converged || diverged || n == stop.max_iters;
        if let Some(t) = trajectory.as_mut() {
            t.push((x.clone(), y.clone()));
        }
        if stop.should_log(n, terminal) {
            let mut rec = IterationRecord::new(n, lambda, residual, v.norm(&dx));
            rec.dy = Some(v.norm(&dy));
            rec.membership = Some(membership(v, &x, &y));
            history.push(rec);
            forward.push(pbx.clone());
        }
        last_forward = pbx;
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
        y += dy;
        x += dx;
    }

    fill_forward_gaps(v, &mut history, &forward, &last_forward);
    Ok(PrimalDualResult {
        x,
        y,
        z: None,
        gamma,
        status,
        iterations,
        history,
        trajectory,
        fb_view_deviation: None,
    })
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// `max_n ‖x¹_n − x²_n‖ + ‖y¹_n − y²_n‖` over the compared iterations.
    pub max_deviation: f64,
    pub deviations: Vec<f64>,
    pub iterations_compared: usize,
    /// The two runs stopped after different numbers of iterations.
    pub length_mismatch: bool,
}

/// Runs forward-Douglas-Rachford (error-free, `z0 = x0 − γ y0`) and the
/// explicit forward-partial-inverse routine from `(x0, y0)` for `n_iters`
/// iterations and compares their primal-dual sequences.
pub fn equivalence_harness(
    prob: &InclusionProblem,
    gamma: f64,
    relax: &RelaxationSchedule,
    x0: &Vector,
    y0: &Vector,
    n_iters: usize,
) -> Result<EquivalenceReport> {
    compare_fdr_fpi(prob, gamma, relax, (x0, y0), (x0, y0), n_iters)
}

/// Like [`equivalence_harness`] but with separate starting points for the
/// two runs.
pub fn compare_fdr_fpi(
    prob: &InclusionProblem,
    gamma: f64,
    relax: &RelaxationSchedule,
    fdr_start: (&Vector, &Vector),
    fpi_start: (&Vector, &Vector),
    n_iters: usize,
) -> Result<EquivalenceReport> {
    let v = prob.v();
    check_start(v, fdr_start.0, fdr_start.1)?;
    let stop = StopCriteria::fixed(n_iters).keep_iterates();
    let z0 = fdr_start.0 - fdr_start.1 * gamma;
    let cfg = FdrConfig::default()
        .with_gamma(gamma)
        .with_relax(relax.clone())
        .with_stop(stop);
    let (first, second) = std::thread::scope(|s| {
        let h = s.spawn(|| fdr_solve(prob, &cfg, &z0));
        let second = fpi_explicit_solve(prob, gamma, relax, fpi_start.0, fpi_start.1, &stop);
        (h.join().expect("fdr thread panicked"), second)
    });
    let (first, second) = (first?, second?);
    let a = first.trajectory.unwrap_or_default();
    let b = second.trajectory.unwrap_or_default();
    let deviations: Vec<f64> = a
        .iter()
        .zip(&b)
        .map(|((x1, y1), (x2, y2))| v.norm(&(x1 - x2)) + v.norm(&(y1 - y2)))
        .collect();
    Ok(EquivalenceReport {
        max_deviation: deviations.iter().copied().fold(0.0, f64::max),
        iterations_compared: deviations.len(),
        length_mismatch: a.len() != b.len(),
        deviations,
    })
}
