//! Sums of monotone operators on a weighted product space.
//!
//! `0 ∈ Σᵢ Aᵢx + Bx` on `H` is equivalent to `0 ∈ 𝐀𝐱 + 𝐁𝐱 + N_𝐕 𝐱` on
//! `𝐇 = Hᵐ` with inner product `Σ ωᵢ⟨xᵢ, yᵢ⟩`, where
//!
//! ```text
//! 𝐕 = {(x, …, x)}          P_𝐕 : (xᵢ) ↦ (Σ ωⱼ xⱼ, …)
//! 𝐀 = ×ᵢ Aᵢ/ωᵢ             J_{γ𝐀} : (xᵢ) ↦ (J_{γAᵢ/ωᵢ} xᵢ)
//! 𝐁 : (xᵢ) ↦ (B xᵢ)        β-cocoercive on 𝐇
//! ```
//!
//! Lifted vectors are plain [`Vector`]s holding the `m` blocks back to back.
//! The solvers here run the resulting parallel schemes directly on the
//! blocks; [`sum_splitting_via_fdr`] runs the same problem through the
//! generic forward-Douglas-Rachford solver instead.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::fdr::{fdr_solve, membership, FdrConfig, InclusionProblem};
use crate::iteration::{all_finite, IterationRecord, Status, StopCriteria};
use crate::km::{ErrorSchedule, RelaxationSchedule, AUDIT_PREFIX};
use crate::operators::{check_gamma, Cocoercive, ResolventFamily};
use crate::spaces::{weighted_block_mean, InnerProduct, SubspaceProjector, Vector};

/// Largest per-block resolvent parameter `γ/ωᵢ` passed on to a block.
pub const DEFAULT_SCALE_CAP: f64 = 1e12;

/// Stacked `m`-block vector in `Hᵐ`.
pub type LiftedVector = Vector;

/// Geometry of `Hᵐ` with weights `ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpace {
    weights: Vec<f64>,
    base_dim: usize,
    inner: InnerProduct,
}

impl ProductSpace {
    pub fn new(weights: &[f64], base_dim: usize) -> Result<Self> {
        let projector = SubspaceProjector::consensus(weights, base_dim)?;
        Ok(Self {
            weights: weights.to_vec(),
            base_dim,
            inner: projector.inner().clone(),
        })
    }

    pub fn uniform(m: usize, base_dim: usize) -> Result<Self> {
        Self::new(&uniform_weights(m), base_dim)
    }

    pub fn m(&self) -> usize {
        self.weights.len()
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn dim(&self) -> usize {
        self.m() * self.base_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn inner(&self) -> &InnerProduct {
        &self.inner
    }

    pub fn norm(&self, z: &LiftedVector) -> f64 {
        self.inner.norm(z)
    }

    pub fn projector(&self) -> SubspaceProjector {
        SubspaceProjector::consensus(&self.weights, self.base_dim).expect("weights were validated")
    }

    /// `x ↦ (x, …, x)`
    pub fn lift(&self, x: &Vector) -> Result<LiftedVector> {
        check_dim(self.base_dim, x.len())?;
        Ok(lift(x, self.m()))
    }

    /// Inverse of [`lift`](Self::lift) on the diagonal. Rejects inputs whose
    /// blocks differ from the first by more than `tol·(1 + ‖x₁‖)`.
    pub fn unlift(&self, z: &LiftedVector, tol: f64) -> Result<Vector> {
        check_dim(self.dim(), z.len())?;
        let first = self.block(z, 0);
        let scale = 1.0 + first.norm();
        for i in 1..self.m() {
            let gap = (self.block(z, i) - &first).norm();
            if gap > tol * scale {
                return Err(Error::InvalidParameter(format!(
                    "not on the diagonal: block {i} differs from block 0 by {gap:e}"
                )));
            }
        }
        Ok(first)
    }

    pub fn block(&self, z: &LiftedVector, i: usize) -> Vector {
        z.rows(i * self.base_dim, self.base_dim).into_owned()
    }

    pub fn from_blocks(&self, blocks: &[Vector]) -> Result<LiftedVector> {
        if blocks.len() != self.m() {
            return Err(Error::DimensionMismatch {
                expected: self.m(),
                found: blocks.len(),
            });
        }
        let mut out = Vector::zeros(self.dim());
        for (i, b) in blocks.iter().enumerate() {
            check_dim(self.base_dim, b.len())?;
            out.rows_mut(i * self.base_dim, self.base_dim).copy_from(b);
        }
        Ok(out)
    }

    /// `Σ ωᵢ zᵢ`, summed in block order.
    pub fn mean(&self, z: &LiftedVector) -> Vector {
        weighted_block_mean(z, &self.weights, self.base_dim)
    }
}

/// `(x, …, x)` with `m` copies.
pub fn lift(x: &Vector, m: usize) -> LiftedVector {
    let d = x.len();
    let mut out = Vector::zeros(m * d);
    for i in 0..m {
        out.rows_mut(i * d, d).copy_from(x);
    }
    out
}

pub fn uniform_weights(m: usize) -> Vec<f64> {
    vec![1.0 / m as f64; m]
}

/// Projector onto the diagonal of `Hᵐ` under the ω-weighted inner product.
pub fn consensus_projector(weights: &[f64], m: usize, base_dim: usize) -> Result<SubspaceProjector> {
    if weights.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: weights.len(),
        });
    }
    SubspaceProjector::consensus(weights, base_dim)
}

/// `0 ∈ Σᵢ Aᵢx + Bx`.
#[derive(Clone)]
pub struct ProductProblem {
    blocks: Vec<Arc<dyn ResolventFamily>>,
    b: Arc<dyn Cocoercive>,
    space: ProductSpace,
    scale_cap: f64,
    parallel: bool,
}

impl std::fmt::Debug for ProductProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProductProblem")
            .field("blocks", &self.blocks)
            .field("b", &self.b)
            .field("weights", &self.space.weights)
            .field("base_dim", &self.space.base_dim)
            .finish()
    }
}

impl ProductProblem {
    pub fn new(blocks: Vec<Arc<dyn ResolventFamily>>, b: Arc<dyn Cocoercive>, weights: &[f64]) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::InvalidParameter("at least one block operator is required".into()));
        }
        if weights.len() != blocks.len() {
            return Err(Error::DimensionMismatch {
                expected: blocks.len(),
                found: weights.len(),
            });
        }
        let base_dim = b.dim();
        for a in &blocks {
            check_dim(base_dim, a.dim())?;
        }
        Ok(Self {
            space: ProductSpace::new(weights, base_dim)?,
            blocks,
            b,
            scale_cap: DEFAULT_SCALE_CAP,
            parallel: false,
        })
    }

    /// Equal weights `1/m`.
    pub fn uniform(blocks: Vec<Arc<dyn ResolventFamily>>, b: Arc<dyn Cocoercive>) -> Result<Self> {
        let w = uniform_weights(blocks.len());
        Self::new(blocks, b, &w)
    }

    pub fn with_scale_cap(mut self, cap: f64) -> Self {
        self.scale_cap = cap;
        self
    }

    /// Evaluate the block resolvents on the rayon pool. Block results are
    /// combined in a fixed order, so the output does not depend on this.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn space(&self) -> &ProductSpace {
        &self.space
    }

    pub fn blocks(&self) -> &[Arc<dyn ResolventFamily>] {
        &self.blocks
    }

    pub fn b(&self) -> &Arc<dyn Cocoercive> {
        &self.b
    }

    pub fn m(&self) -> usize {
        self.blocks.len()
    }

    pub fn base_dim(&self) -> usize {
        self.space.base_dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.space.weights
    }

    pub fn beta(&self) -> f64 {
        self.b.beta()
    }

    /// `γ/ωᵢ`, capped at the configured limit.
    pub fn block_gamma(&self, i: usize, gamma: f64) -> f64 {
        let g = gamma / self.space.weights[i];
        if g > self.scale_cap {
            log::warn!(
                "block {i}: resolvent parameter γ/ω = {g:e} exceeds the cap {:e}; using the cap",
                self.scale_cap
            );
            self.scale_cap
        } else {
            g
        }
    }

    /// `(J_{γAᵢ/ωᵢ} sᵢ)ᵢ`
    fn resolve_blocks(&self, gamma: f64, inputs: &[Vector]) -> Result<Vec<Vector>> {
        let eval = |i: usize| self.blocks[i].resolve(self.block_gamma(i, gamma), &inputs[i]);
        if self.parallel {
            (0..self.m()).into_par_iter().map(eval).collect()
        } else {
            (0..self.m()).map(eval).collect()
        }
    }

    /// The equivalent single-operator problem on `Hᵐ`.
    pub fn lifted(&self) -> Result<InclusionProblem> {
        let a = LiftedResolvent {
            problem: self.clone(),
        };
        let b = LiftedCocoercive {
            b: Arc::clone(&self.b),
            m: self.m(),
        };
        InclusionProblem::new(Arc::new(a), Arc::new(b), self.space.projector())
    }
}

/// `J_{γ𝐀} : (xᵢ) ↦ (J_{γAᵢ/ωᵢ} xᵢ)`
pub struct LiftedResolvent {
    problem: ProductProblem,
}

impl LiftedResolvent {
    pub fn new(problem: ProductProblem) -> Self {
        Self { problem }
    }
}

impl ResolventFamily for LiftedResolvent {
    fn dim(&self) -> usize {
        self.problem.space.dim()
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_dim(self.dim(), x.len())?;
        let sp = &self.problem.space;
        let inputs: Vec<Vector> = (0..sp.m()).map(|i| sp.block(x, i)).collect();
        let out = self.problem.resolve_blocks(gamma, &inputs)?;
        sp.from_blocks(&out)
    }

    fn label(&self) -> &str {
        "lifted"
    }
}

/// `𝐁 : (xᵢ) ↦ (B xᵢ)`, with the same constant `β`.
pub struct LiftedCocoercive {
    b: Arc<dyn Cocoercive>,
    m: usize,
}

impl LiftedCocoercive {
    pub fn new(b: Arc<dyn Cocoercive>, m: usize) -> Self {
        Self { b, m }
    }
}

impl Cocoercive for LiftedCocoercive {
    fn dim(&self) -> usize {
        self.m * self.b.dim()
    }

    fn beta(&self) -> f64 {
        self.b.beta()
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        let d = self.b.dim();
        let mut out = Vector::zeros(x.len());
        for i in 0..self.m {
            let bx = self.b.eval(&x.rows(i * d, d).into_owned())?;
            out.rows_mut(i * d, d).copy_from(&bx);
        }
        Ok(out)
    }

    fn label(&self) -> &str {
        "lifted"
    }
}

/// Optimality diagnostics at a lifted point. With `pᵢ = J_{γAᵢ/ωᵢ} sᵢ` and
/// `qᵢ = (sᵢ − pᵢ)/γ`, each `ωᵢqᵢ ∈ Aᵢpᵢ` holds exactly, so `x` solves the
/// problem once every `pᵢ = x` and `Σ ωᵢqᵢ + Bx = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockCertificate {
    /// `maxᵢ ‖pᵢ − x‖`
    pub consensus_defect: f64,
    /// `‖Σ ωᵢqᵢ + Bx‖ = ‖x − Σ ωᵢpᵢ‖/γ`
    pub balance_defect: f64,
}

impl BlockCertificate {
    pub fn worst(&self) -> f64 {
        self.consensus_defect.max(self.balance_defect)
    }
}

/// Certificate for the governing point `z` of the parallel scheme:
/// `x = Σωᵢzᵢ`, `sᵢ = 2x − zᵢ − γBx`.
pub fn block_certificate(prob: &ProductProblem, gamma: f64, z: &LiftedVector) -> Result<BlockCertificate> {
    check_gamma(gamma)?;
    let sp = prob.space();
    check_dim(sp.dim(), z.len())?;
    let x = sp.mean(z);
    let bx = prob.b.eval(&x)?;
    let inputs: Vec<Vector> = (0..sp.m())
        .map(|i| &x * 2.0 - sp.block(z, i) - &bx * gamma)
        .collect();
    let p = prob.resolve_blocks(gamma, &inputs)?;
    let consensus_defect = p.iter().map(|pi| (pi - &x).norm()).fold(0.0, f64::max);
    let pbar = sp.mean(&sp.from_blocks(&p)?);
    Ok(BlockCertificate {
        consensus_defect,
        balance_defect: (&x - pbar).norm() / gamma,
    })
}

/// Outcome of a product-space solve.
#[derive(Debug, Clone)]
pub struct ProductResult {
    /// Base-space solution estimate `x_n = Σ ωᵢ z_{i,n}`.
    pub x: Vector,
    /// Lifted governing point, `z_i = x − γ y_i`.
    pub z: LiftedVector,
    /// Lifted dual point `(y_i)`, with `Σ ωᵢ yᵢ = 0`.
    pub y: LiftedVector,
    pub gamma: f64,
    pub status: Status,
    pub iterations: usize,
    pub history: Vec<IterationRecord>,
    /// `(x_n, y_n)` per iteration when requested; `x_n` in the base space.
    pub trajectory: Option<Vec<(Vector, LiftedVector)>>,
    pub certificate: BlockCertificate,
}

impl ProductResult {
    pub fn final_residual(&self) -> Option<f64> {
        self.history.last().map(|r| r.residual)
    }

    pub fn worst_membership_defect(&self) -> f64 {
        self.history
            .iter()
            .filter_map(|r| r.membership.map(|m| m.relative_defect()))
            .fold(0.0, f64::max)
    }
}

/// `Σ λ_n(1 − αλ_n) = +∞` and error summability for the parallel schemes.
#[allow(clippy::too_many_arguments)]
fn audit_schedules(
    relax: &RelaxationSchedule,
    alpha: f64,
    range: &str,
    a_errors: &ErrorSchedule,
    b_errors: &ErrorSchedule,
    base_dim: usize,
    m: usize,
    stop: &StopCriteria,
) -> Result<()> {
    stop.validate()?;
    relax.audit_open(1.0 / alpha, range)?;
    let prefix = AUDIT_PREFIX.min(stop.max_iters + 1);
    a_errors.audit(relax, base_dim, 1, prefix, &InnerProduct::Uniform)?;
    b_errors.audit(relax, base_dim, m, prefix, &InnerProduct::Uniform)?;
    Ok(())
}

/// Per-iteration state shared by the direct loops: lifted `x`, `y`, the step
/// `dz`, and the clean resolvent outputs.
struct Step {
    residual: f64,
    dz: LiftedVector,
}

struct LoopOutput {
    z: LiftedVector,
    status: Status,
    iterations: usize,
    history: Vec<IterationRecord>,
    trajectory: Option<Vec<(Vector, LiftedVector)>>,
}

/// Generic governing-sequence loop `z_{n+1} = z_n + dz_n` over lifted
/// vectors with `x_n = Σωᵢz_{i,n}`, `y_n = (x_n − z_n)/γ`.
fn run_lifted<F>(
    space: &ProductSpace,
    gamma: f64,
    relax: &RelaxationSchedule,
    z0: &LiftedVector,
    stop: &StopCriteria,
    mut step: F,
) -> Result<LoopOutput>
where
    F: FnMut(usize, f64, &Vector, &LiftedVector) -> Result<Step>,
{
    check_dim(space.dim(), z0.len())?;
    let v = space.projector();
    let mut z = z0.clone();
    let mut history = Vec::new();
    let mut trajectory = stop.keep_iterates.then(Vec::new);
    let mut status = Status::MaxIters;
    let mut iterations = 0;
    for n in 0..=stop.max_iters {
        iterations = n;
        let lambda = relax.lambda(n);
        let x = space.mean(&z);
        let xl = lift(&x, space.m());
        let y = (&xl - &z) / gamma;
        let Step { residual, dz } = step(n, lambda, &x, &z)?;
        let converged = residual <= stop.tol;
        let diverged = !residual.is_finite() || !all_finite(&dz);
        let terminal = converged || diverged || n == stop.max_iters;
        if stop.should_log(n, terminal) {
            let dx = space.mean(&dz);
            let dy = (lift(&dx, space.m()) - &dz) / gamma;
            let mut rec = IterationRecord::new(n, lambda, residual, dx.norm());
            rec.dy = Some(space.norm(&dy));
            rec.membership = Some(membership(&v, &xl, &y));
            history.push(rec);
        }
        if let Some(t) = trajectory.as_mut() {
            t.push((x, y));
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
        z += dz;
    }
    Ok(LoopOutput {
        z,
        status,
        iterations,
        history,
        trajectory,
    })
}

fn finish(prob: &ProductProblem, gamma: f64, out: LoopOutput) -> Result<ProductResult> {
    let sp = prob.space();
    let x = sp.mean(&out.z);
    let y = (lift(&x, sp.m()) - &out.z) / gamma;
    let certificate = if out.status == Status::Diverged {
        BlockCertificate {
            consensus_defect: f64::NAN,
            balance_defect: f64::NAN,
        }
    } else {
        block_certificate(prob, gamma, &out.z)?
    };
    Ok(ProductResult {
        x,
        z: out.z,
        y,
        gamma,
        status: out.status,
        iterations: out.iterations,
        history: out.history,
        trajectory: out.trajectory,
        certificate,
    })
}

/// Parallel splitting for `0 ∈ Σᵢ Aᵢx + Bx`:
///
/// ```text
/// x_n = Σ ωᵢ z_{i,n}
/// s_{i,n} = 2x_n − z_{i,n} − γ(B x_n + a_n)
/// p_{i,n} = J_{γAᵢ/ωᵢ} s_{i,n} + b_{i,n}
/// z_{i,n+1} = z_{i,n} + λ_n (p_{i,n} − x_n)
/// ```
///
/// `cfg.a_errors` supplies `a_n` (operator index 0) and `cfg.b_errors`
/// supplies `b_{i,n}` (operator index `i`), both in the base space. `z0` is
/// lifted.
pub fn sum_splitting_solve(prob: &ProductProblem, cfg: &FdrConfig, z0: &LiftedVector) -> Result<ProductResult> {
    let gamma = cfg.gamma.unwrap_or_else(|| prob.beta());
    let upper = 2.0 * prob.beta();
    if !(gamma > 0.0 && gamma < upper) {
        return Err(Error::InadmissibleStep {
            name: "γ",
            value: gamma,
            range: format!("γ ∈ ]0, 2β[ = ]0, {upper}["),
        });
    }
    let alpha = f64::max(2.0 / 3.0, 2.0 * gamma / (gamma + upper));
    let range = format!("]0, 1/α[ with α = max{{2/3, 2γ/(γ+2β)}} = {alpha}, i.e. ]0, {}[", 1.0 / alpha);
    let d = prob.base_dim();
    let m = prob.m();
    audit_schedules(&cfg.relax, alpha, &range, &cfg.a_errors, &cfg.b_errors, d, m, &cfg.stop)?;
    let sp = prob.space().clone();
    let errored = !cfg.a_errors.is_zero() || !cfg.b_errors.is_zero();

    let out = run_lifted(&sp, gamma, &cfg.relax, z0, &cfg.stop, |n, lambda, x, z| {
        let bx = prob.b.eval(x)?;
        let inputs: Vec<Vector> = (0..m).map(|i| x * 2.0 - sp.block(z, i) - &bx * gamma).collect();
        let clean = prob.resolve_blocks(gamma, &inputs)?;
        let residual = weighted_gap(&sp, &clean, x);
        let p = if errored {
            let mut fwd = bx.clone();
            if let Some(a) = cfg.a_errors.error(0, n, d) {
                fwd += a;
            }
            let inputs: Vec<Vector> = (0..m).map(|i| x * 2.0 - sp.block(z, i) - &fwd * gamma).collect();
            let mut p = prob.resolve_blocks(gamma, &inputs)?;
            for (i, pi) in p.iter_mut().enumerate() {
                if let Some(b) = cfg.b_errors.error(i, n, d) {
                    *pi += b;
                }
            }
            p
        } else {
            clean
        };
        let dz: Vec<Vector> = p.iter().map(|pi| (pi - x) * lambda).collect();
        Ok(Step {
            residual,
            dz: sp.from_blocks(&dz)?,
        })
    })?;
    finish(prob, gamma, out)
}

/// `(Σ ωᵢ ‖pᵢ − x‖²)^{1/2}`, the fixed-point residual in `Hᵐ`.
fn weighted_gap(sp: &ProductSpace, p: &[Vector], x: &Vector) -> f64 {
    p.iter()
        .zip(sp.weights())
        .map(|(pi, w)| w * (pi - x).norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// The same problem solved by forward-Douglas-Rachford on `Hᵐ` with lifted
/// operators. Error schedules are interpreted as in [`sum_splitting_solve`].
pub fn sum_splitting_via_fdr(prob: &ProductProblem, cfg: &FdrConfig, z0: &LiftedVector) -> Result<ProductResult> {
    let lifted = prob.lifted()?;
    let sp = prob.space().clone();
    let (m, d) = (prob.m(), prob.base_dim());
    let a_lifted = match cfg.a_errors.certificate(d) {
        None => ErrorSchedule::zero(),
        Some(cert) => {
            let a = cfg.a_errors.clone();
            ErrorSchedule::custom(cert, move |_, n, _| lift(&a.error(0, n, d).expect("nonzero schedule"), m))
        }
    };
    let lifted_cfg = FdrConfig {
        a_errors: a_lifted,
        b_errors: cfg.b_errors.stacked(m, d),
        ..cfg.clone()
    };
    let r = fdr_solve(&lifted, &lifted_cfg, z0)?;
    let z = r.z.expect("forward-Douglas-Rachford returns its governing point");
    let trajectory = r
        .trajectory
        .map(|t| t.into_iter().map(|(x, y)| (sp.block(&x, 0), y)).collect());
    let certificate = if r.status == Status::Diverged {
        BlockCertificate {
            consensus_defect: f64::NAN,
            balance_defect: f64::NAN,
        }
    } else {
        block_certificate(prob, r.gamma, &z)?
    };
    Ok(ProductResult {
        x: sp.block(&r.x, 0),
        z,
        y: r.y,
        gamma: r.gamma,
        status: r.status,
        iterations: r.iterations,
        history: r.history,
        trajectory,
        certificate,
    })
}

/// Two-operator parallel Douglas-Rachford for `0 ∈ A₁x + A₂x`:
///
/// ```text
/// x_n = (z_{1,n} + z_{2,n})/2
/// p_{1,n} = J_{2γA₁} z_{2,n} + b_{1,n}
/// p_{2,n} = J_{2γA₂} z_{1,n} + b_{2,n}
/// z_{i,n+1} = z_{i,n} + λ_n (p_{i,n} − x_n)
/// ```
///
/// with `λ_n ∈ ]0, 3/2[` and `Σ λ_n(3 − 2λ_n) = +∞`. `errors` supplies
/// `b_{i,n}` with operator index `i ∈ {0, 1}`.
pub fn parallel_dr2(
    a1: Arc<dyn ResolventFamily>,
    a2: Arc<dyn ResolventFamily>,
    gamma: f64,
    relax: &RelaxationSchedule,
    errors: &ErrorSchedule,
    z0: (&Vector, &Vector),
    stop: &StopCriteria,
) -> Result<ProductResult> {
    check_gamma(gamma)?;
    let d = a1.dim();
    check_dim(d, a2.dim())?;
    check_dim(d, z0.0.len())?;
    check_dim(d, z0.1.len())?;
    audit_schedules(
        relax,
        2.0 / 3.0,
        "]0, 3/2[",
        &ErrorSchedule::zero(),
        errors,
        d,
        2,
        stop,
    )?;
    let sp = ProductSpace::uniform(2, d)?;
    let zl = sp.from_blocks(&[z0.0.clone(), z0.1.clone()])?;
    let blocks = [Arc::clone(&a1), Arc::clone(&a2)];
    let out = run_lifted(&sp, gamma, relax, &zl, stop, |n, lambda, x, z| {
        let z1 = sp.block(z, 0);
        let z2 = sp.block(z, 1);
        let clean = [a1.resolve(2.0 * gamma, &z2)?, a2.resolve(2.0 * gamma, &z1)?];
        let residual = weighted_gap(&sp, &clean, x);
        let dz: Vec<Vector> = clean
            .into_iter()
            .enumerate()
            .map(|(i, mut p)| {
                if let Some(b) = errors.error(i, n, d) {
                    p += b;
                }
                (p - x) * lambda
            })
            .collect();
        Ok(Step {
            residual,
            dz: sp.from_blocks(&dz)?,
        })
    })?;
    let x = sp.mean(&out.z);
    let y = (lift(&x, 2) - &out.z) / gamma;
    let certificate = if out.status == Status::Diverged {
        BlockCertificate {
            consensus_defect: f64::NAN,
            balance_defect: f64::NAN,
        }
    } else {
        let p = [
            blocks[0].resolve(2.0 * gamma, &sp.block(&out.z, 1))?,
            blocks[1].resolve(2.0 * gamma, &sp.block(&out.z, 0))?,
        ];
        BlockCertificate {
            consensus_defect: p.iter().map(|pi| (pi - &x).norm()).fold(0.0, f64::max),
            balance_defect: (&x - (&p[0] + &p[1]) * 0.5).norm() / gamma,
        }
    };
    Ok(ProductResult {
        x,
        z: out.z,
        y,
        gamma,
        status: out.status,
        iterations: out.iterations,
        history: out.history,
        trajectory: out.trajectory,
        certificate,
    })
}

/// Tolerance on the dual feasibility `Σ ωᵢ y_{i,0} = 0`, relative to `1 + ‖y‖`.
const DUAL_TOL: f64 = 1e-10;

/// Primal-dual form of [`sum_splitting_solve`]:
///
/// ```text
/// s_{i,n} = x_n − γ B x_n + γ y_{i,n}
/// p_{i,n} = J_{γAᵢ/ωᵢ} s_{i,n}
/// p̄_n = Σ ωᵢ p_{i,n}
/// y_{i,n+1} = y_{i,n} + (λ_n/γ)(p̄_n − p_{i,n})
/// x_{n+1} = x_n + λ_n (p̄_n − x_n)
/// ```
///
/// `y0` is lifted and must satisfy `Σ ωᵢ y_{i,0} = 0`. Started from
/// `z_{i,0} = x_0 − γ y_{i,0}`, [`sum_splitting_solve`] produces the same
/// iterates.
pub fn sum_splitting_pi(
    prob: &ProductProblem,
    gamma: f64,
    relax: &RelaxationSchedule,
    x0: &Vector,
    y0: &LiftedVector,
    stop: &StopCriteria,
) -> Result<ProductResult> {
    let upper = 2.0 * prob.beta();
    if !(gamma > 0.0 && gamma < upper) {
        return Err(Error::InadmissibleStep {
            name: "γ",
            value: gamma,
            range: format!("γ ∈ ]0, 2β[ = ]0, {upper}["),
        });
    }
    relax.audit_closed_unit(crate::fpi::DEFAULT_EPS)?;
    stop.validate()?;
    let sp = prob.space().clone();
    let (m, d) = (prob.m(), prob.base_dim());
    check_dim(d, x0.len())?;
    check_dim(sp.dim(), y0.len())?;
    let ybar = sp.mean(y0);
    if ybar.norm() > DUAL_TOL * (1.0 + sp.norm(y0)) {
        return Err(Error::Infeasible(format!(
            "dual start must satisfy Σ ωᵢ y_(i,0) = 0 (‖Σ ωᵢ y_(i,0)‖ = {:e})",
            ybar.norm()
        )));
    }
    let v = sp.projector();

    let mut x = x0.clone();
    let mut y: Vec<Vector> = (0..m).map(|i| sp.block(y0, i)).collect();
    let mut history = Vec::new();
    let mut trajectory = stop.keep_iterates.then(Vec::new);
    let mut status = Status::MaxIters;
    let mut iterations = 0;
    for n in 0..=stop.max_iters {
        iterations = n;
        let lambda = relax.lambda(n);
        let bx = prob.b.eval(&x)?;
        let base = &x - &bx * gamma;
        let inputs: Vec<Vector> = y.iter().map(|yi| &base + yi * gamma).collect();
        let p = prob.resolve_blocks(gamma, &inputs)?;
        let pl = sp.from_blocks(&p)?;
        let pbar = sp.mean(&pl);
        let residual = weighted_gap(&sp, &p, &x);
        let dx = (&pbar - &x) * lambda;
        let dy: Vec<Vector> = p.iter().map(|pi| (&pbar - pi) * (lambda / gamma)).collect();
        let dyl = sp.from_blocks(&dy)?;
        let converged = residual <= stop.tol;
        let diverged = !residual.is_finite() || !all_finite(&dx) || !all_finite(&dyl);
        let terminal = converged || diverged || n == stop.max_iters;
        let yl = sp.from_blocks(&y)?;
        if stop.should_log(n, terminal) {
            let mut rec = IterationRecord::new(n, lambda, residual, dx.norm());
            rec.dy = Some(sp.norm(&dyl));
            rec.membership = Some(membership(&v, &lift(&x, m), &yl));
            history.push(rec);
        }
        if let Some(t) = trajectory.as_mut() {
            t.push((x.clone(), yl));
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
        for (yi, di) in y.iter_mut().zip(dy) {
            *yi += di;
        }
        x += dx;
    }
    let yl = sp.from_blocks(&y)?;
    let z = lift(&x, m) - &yl * gamma;
    let certificate = if status == Status::Diverged {
        BlockCertificate {
            consensus_defect: f64::NAN,
            balance_defect: f64::NAN,
        }
    } else {
        block_certificate(prob, gamma, &z)?
    };
    Ok(ProductResult {
        x,
        z,
        y: yl,
        gamma,
        status,
        iterations,
        history,
        trajectory,
        certificate,
    })
}
