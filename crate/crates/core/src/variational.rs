//! Minimizing `f(x) + g(x)` over a subspace `V`, with `f` accessed through
//! its proximity operator and `g` smooth with `L`-Lipschitz gradient.
//!
//! This is the inclusion `0 ∈ ∂f(x) + ∇g(x) + N_V x` with
//! `J_{γ∂f} = prox_{γf}` and `∇g` being `1/L`-cocoercive, solved by
//! forward-Douglas-Rachford splitting. Existence of a minimizer is the
//! caller's responsibility; [`probe_unbounded`] only offers a coarse warning.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::fdr::{fdr_run, FdrConfig, InclusionProblem, PrimalDualResult};
use crate::operators::{check_gamma, symmetric_psd_lmax, Cocoercive, LinearMonotone, ResolventFamily};
use crate::spaces::{Sampler, SubspaceProjector, Vector};

/// Proper lower semicontinuous convex `f` given by `prox_{γf}`.
pub trait ProxFunction: Send + Sync {
    fn dim(&self) -> usize;

    /// `argmin_u f(u) + ‖u − x‖²/(2γ)`
    fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector>;

    /// `f(x)`, `+∞` outside the domain; `None` when unavailable.
    fn value(&self, _x: &Vector) -> Option<f64> {
        None
    }

    fn label(&self) -> &str {
        "prox"
    }
}

/// Convex differentiable `g` with `L`-Lipschitz gradient.
pub trait SmoothFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn grad(&self, x: &Vector) -> Result<Vector>;

    fn lipschitz(&self) -> f64;

    fn value(&self, _x: &Vector) -> Option<f64> {
        None
    }

    fn label(&self) -> &str {
        "smooth"
    }
}

/// Coordinatewise soft-threshold `sign(xᵢ) max(|xᵢ| − γ, 0)`.
pub fn prox_l1(gamma: f64, x: &Vector) -> Vector {
    x.map(|c| crate::operators::soft_threshold(c, gamma))
}

/// Projection onto `[lo, hi]`; independent of `γ`.
pub fn prox_indicator_box(lo: &Vector, hi: &Vector, _gamma: f64, x: &Vector) -> Vector {
    Vector::from_fn(x.len(), |i, _| x[i].clamp(lo[i], hi[i]))
}

/// `‖x‖₁`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L1Norm {
    dim: usize,
}

pub fn l1_norm(dim: usize) -> L1Norm {
    L1Norm { dim }
}

impl ProxFunction for L1Norm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_dim(self.dim, x.len())?;
        Ok(prox_l1(gamma, x))
    }

    fn value(&self, x: &Vector) -> Option<f64> {
        Some(x.lp_norm(1))
    }

    fn label(&self) -> &str {
        "l1"
    }
}

/// Indicator of the box `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxIndicator {
    lo: Vector,
    hi: Vector,
}

pub fn box_indicator(lo: Vector, hi: Vector) -> Result<BoxIndicator> {
    check_dim(lo.len(), hi.len())?;
    if lo.iter().zip(hi.iter()).any(|(l, h)| !(l <= h)) {
        return Err(Error::InvalidParameter("box bounds need lo ≤ hi".into()));
    }
    Ok(BoxIndicator { lo, hi })
}

impl ProxFunction for BoxIndicator {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_dim(self.dim(), x.len())?;
        Ok(prox_indicator_box(&self.lo, &self.hi, gamma, x))
    }

    fn value(&self, x: &Vector) -> Option<f64> {
        let inside = (0..x.len()).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i]);
        Some(if inside { 0.0 } else { f64::INFINITY })
    }

    fn label(&self) -> &str {
        "box"
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroFunction {
    dim: usize,
}

pub fn zero_function(dim: usize) -> ZeroFunction {
    ZeroFunction { dim }
}

impl ProxFunction for ZeroFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_dim(self.dim, x.len())?;
        Ok(x.clone())
    }

    fn value(&self, _x: &Vector) -> Option<f64> {
        Some(0.0)
    }

    fn label(&self) -> &str {
        "zero"
    }
}

/// `½ xᵀQx − bᵀx` with `Q` symmetric positive semidefinite; its prox solves
/// `(I + γQ)u = x + γb`.
#[derive(Debug, Clone)]
pub struct QuadraticProx {
    op: LinearMonotone,
    q: DMatrix<f64>,
    b: Vector,
}

pub fn quadratic_prox(q: DMatrix<f64>, b: Vector) -> Result<QuadraticProx> {
    check_dim(q.nrows(), b.len())?;
    symmetric_psd_lmax(&q)?;
    let op = crate::operators::affine_monotone(q.clone(), -&b)?;
    Ok(QuadraticProx { op, q, b })
}

impl QuadraticProx {
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }
}

impl ProxFunction for QuadraticProx {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn prox(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        self.op.resolve(gamma, x)
    }

    fn value(&self, x: &Vector) -> Option<f64> {
        Some(0.5 * x.dot(&(&self.q * x)) - self.b.dot(x))
    }

    fn label(&self) -> &str {
        "quadratic"
    }
}

/// `½ xᵀQx − bᵀx + c` with gradient `Qx − b` and `L = λ_max(Q)`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    q: DMatrix<f64>,
    b: Vector,
    c: f64,
    lipschitz: f64,
}

pub fn quadratic_smooth(q: DMatrix<f64>, b: Vector) -> Result<Quadratic> {
    check_dim(q.nrows(), b.len())?;
    let lipschitz = symmetric_psd_lmax(&q)?;
    if !(lipschitz > 0.0) {
        return Err(Error::InvalidParameter(
            "quadratic with Q = 0 has no positive Lipschitz constant".into(),
        ));
    }
    Ok(Quadratic { q, b, c: 0.0, lipschitz })
}

/// `½‖x − c‖²`
pub fn squared_distance(center: Vector) -> Quadratic {
    let n = center.len();
    let c = 0.5 * center.norm_squared();
    Quadratic {
        q: DMatrix::identity(n, n),
        b: center,
        c,
        lipschitz: 1.0,
    }
}

impl Quadratic {
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn grad(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(&self.q * x - &self.b)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn value(&self, x: &Vector) -> Option<f64> {
        Some(0.5 * x.dot(&(&self.q * x)) - self.b.dot(x) + self.c)
    }

    fn label(&self) -> &str {
        "quadratic"
    }
}

/// `J_{γ∂f} = prox_{γf}` as a resolvent family.
pub struct ProxResolvent(pub Arc<dyn ProxFunction>);

impl ResolventFamily for ProxResolvent {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        self.0.prox(gamma, x)
    }

    fn label(&self) -> &str {
        self.0.label()
    }
}

/// `∇g`, cocoercive with `β = 1/L`.
pub struct GradientMap(pub Arc<dyn SmoothFunction>);

impl Cocoercive for GradientMap {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn beta(&self) -> f64 {
        1.0 / self.0.lipschitz()
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        self.0.grad(x)
    }

    fn label(&self) -> &str {
        self.0.label()
    }
}

/// `f + g` when both values are available.
pub fn objective(f: &dyn ProxFunction, g: &dyn SmoothFunction, x: &Vector) -> Option<f64> {
    Some(f.value(x)? + g.value(x)?)
}

/// Minimizes `f + g` over `V`:
///
/// ```text
/// x_n = P_V z_n
/// y_n = (x_n − z_n)/γ
/// s_n = x_n − γ P_V(∇g(x_n) + a_n) + γ y_n
/// p_n = prox_{γf} s_n + b_n
/// z_{n+1} = z_n + λ_n (p_n − x_n)
/// ```
///
/// Records carry `f(x_n) + g(x_n)` when both values are available.
pub fn min_over_subspace(
    f: Arc<dyn ProxFunction>,
    g: Arc<dyn SmoothFunction>,
    v: SubspaceProjector,
    cfg: &FdrConfig,
    z0: &Vector,
) -> Result<PrimalDualResult> {
    if !(g.lipschitz() > 0.0 && g.lipschitz().is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "Lipschitz constant must be positive and finite, got {}",
            g.lipschitz()
        )));
    }
    let prob = InclusionProblem::new(
        Arc::new(ProxResolvent(Arc::clone(&f))),
        Arc::new(GradientMap(Arc::clone(&g))),
        v,
    )?;
    let value = |x: &Vector| objective(f.as_ref(), g.as_ref(), x);
    fdr_run(&prob, cfg, z0, Some(&value))
}

/// Samples `f + g` along coordinate and random directions in `V` out from
/// `center` and warns when the objective keeps decreasing out to the largest
/// radius, which suggests the problem is unbounded below. Returns whether the warning
/// fired; never blocks a solve.
pub fn probe_unbounded(
    f: &dyn ProxFunction,
    g: &dyn SmoothFunction,
    v: &SubspaceProjector,
    center: &Vector,
    seed: u64,
) -> bool {
    const RADII: [f64; 4] = [1.0, 1e2, 1e4, 1e6];
    const DIRECTIONS: usize = 16;
    let c = v.apply(center);
    let Some(base) = objective(f, g, &c) else {
        return false;
    };
    let mut sampler = Sampler::new(seed);
    let n = v.dim();
    let axes = (0..2 * n).map(|k| {
        let mut e = Vector::zeros(n);
        e[k / 2] = if k % 2 == 0 { 1.0 } else { -1.0 };
        e
    });
    let random: Vec<Vector> = (0..DIRECTIONS).map(|_| sampler.vector(n, 1.0)).collect();
    for d in axes.chain(random) {
        let d = v.apply(&d);
        let norm = v.norm(&d);
        if norm == 0.0 {
            continue;
        }
        let d = d / norm;
        let values: Vec<f64> = RADII
            .iter()
            .filter_map(|r| objective(f, g, &(&c + &d * *r)))
            .collect();
        let falling = values.len() == RADII.len()
            && values.windows(2).all(|w| w[1] < w[0])
            && values[RADII.len() - 1] < base - 1e3 * (1.0 + base.abs());
        if falling {
            log::warn!("objective keeps decreasing along a sampled direction in V; the problem may be unbounded below");
            return true;
        }
    }
    false
}
