//! Operator abstractions.
//!
//! A maximally monotone operator `A` is represented by its family of
//! resolvents `γ ↦ J_{γA} = (Id + γA)⁻¹`; none of the algorithms in this crate
//! ever evaluate `A` itself. A cocoercive operator `B` is an ordinary map with
//! a declared constant `β`, satisfying `⟨x − y, Bx − By⟩ ≥ β‖Bx − By‖²`.
//! Declared constants are audited by sampling, never inferred.

use std::fmt;
use std::sync::{Arc, RwLock};

use nalgebra::{DMatrix, Dyn, SymmetricEigen, LU};

use crate::error::{check_dim, Error, Result};
use crate::spaces::{InnerProduct, Sampler, SubspaceProjector, Vector};

/// Scale of the Gaussian sample points used by the sampled certificates.
pub const AUDIT_SCALE: f64 = 2.0;

/// A maximally monotone operator, accessed through its resolvents.
pub trait ResolventFamily: Send + Sync {
    fn dim(&self) -> usize;

    /// `J_{γA} x` for `γ > 0`.
    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector>;

    fn label(&self) -> &str {
        "custom"
    }
}

impl fmt::Debug for dyn ResolventFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ResolventFamily({}, dim={})", self.label(), self.dim())
    }
}

/// A single-valued `β`-cocoercive operator.
pub trait Cocoercive: Send + Sync {
    fn dim(&self) -> usize;

    fn beta(&self) -> f64;

    fn eval(&self, x: &Vector) -> Result<Vector>;

    fn label(&self) -> &str {
        "custom"
    }
}

impl fmt::Debug for dyn Cocoercive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cocoercive({}, dim={}, beta={})", self.label(), self.dim(), self.beta())
    }
}

pub(crate) fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InadmissibleStep {
            name: "γ",
            value: gamma,
            range: "]0, +∞[".into(),
        })
    }
}

// ---------------------------------------------------------------------------
// Built-in resolvent families

/// `A = 0`, `J_{γA} = Id`.
#[derive(Debug, Clone)]
pub struct ZeroOperator {
    dim: usize,
}

pub fn zero_operator(dim: usize) -> ZeroOperator {
    ZeroOperator { dim }
}

impl ResolventFamily for ZeroOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn resolve(&self, _gamma: f64, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok(x.clone())
    }

    fn label(&self) -> &str {
        "zero"
    }
}

/// `A = N_V`, whose resolvent is `P_V` for every `γ`.
#[derive(Debug, Clone)]
pub struct NormalConeOfSubspace {
    projector: SubspaceProjector,
}

pub fn normal_cone_of_subspace(projector: SubspaceProjector) -> NormalConeOfSubspace {
    NormalConeOfSubspace { projector }
}

impl ResolventFamily for NormalConeOfSubspace {
    fn dim(&self) -> usize {
        self.projector.dim()
    }

    fn resolve(&self, _gamma: f64, x: &Vector) -> Result<Vector> {
        self.projector.project(x)
    }

    fn label(&self) -> &str {
        "normal-cone-subspace"
    }
}

/// `A = ∂‖· − c‖₁`; the resolvent is soft-thresholding around `c`.
#[derive(Debug, Clone)]
pub struct AbsSubdifferential {
    center: Vector,
}

pub fn subdifferential_abs(dim: usize) -> AbsSubdifferential {
    AbsSubdifferential {
        center: Vector::zeros(dim),
    }
}

pub fn shifted_abs(center: Vector) -> AbsSubdifferential {
    AbsSubdifferential { center }
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    x.signum() * (x.abs() - t).max(0.0)
}

impl ResolventFamily for AbsSubdifferential {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        check_gamma(gamma)?;
        Ok(x.zip_map(&self.center, |v, c| c + soft_threshold(v - c, gamma)))
    }

    fn label(&self) -> &str {
        "abs"
    }
}

/// `A = N_C` for the box `C = [lo, hi]`; the resolvent is the clamp.
#[derive(Debug, Clone)]
pub struct BoxNormalCone {
    lo: Vector,
    hi: Vector,
}

pub fn normal_cone_box(lo: Vector, hi: Vector) -> Result<BoxNormalCone> {
    check_dim(lo.len(), hi.len())?;
    for (l, h) in lo.iter().zip(hi.iter()) {
        if l.is_nan() || h.is_nan() || l > h {
            return Err(Error::InvalidParameter(format!(
                "box bounds must satisfy lo <= hi, got [{l}, {h}]"
            )));
        }
    }
    Ok(BoxNormalCone { lo, hi })
}

impl BoxNormalCone {
    pub fn clamp(&self, x: &Vector) -> Vector {
        Vector::from_fn(x.len(), |i, _| x[i].max(self.lo[i]).min(self.hi[i]))
    }
}

impl ResolventFamily for BoxNormalCone {
    fn dim(&self) -> usize {
        self.lo.len()
    }

    fn resolve(&self, _gamma: f64, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(self.clamp(x))
    }

    fn label(&self) -> &str {
        "box"
    }
}

type Factorization = Arc<LU<f64, Dyn, Dyn>>;

const MAX_CACHED_FACTORIZATIONS: usize = 16;

/// Affine monotone operator `x ↦ Mx + c` where the symmetric part of `M` is
/// positive semidefinite (skew parts allowed). The resolvent solves
/// `(I + γM) z = x − γc` with an LU factorization cached per `γ`.
pub struct LinearMonotone {
    matrix: DMatrix<f64>,
    shift: Vector,
    cache: RwLock<Vec<(u64, Factorization)>>,
}

impl fmt::Debug for LinearMonotone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearMonotone")
            .field("matrix", &self.matrix)
            .field("shift", &self.shift)
            .finish()
    }
}

impl Clone for LinearMonotone {
    fn clone(&self) -> Self {
        Self {
            matrix: self.matrix.clone(),
            shift: self.shift.clone(),
            cache: RwLock::new(Vec::new()),
        }
    }
}

pub fn linear_monotone(matrix: DMatrix<f64>) -> Result<LinearMonotone> {
    let n = matrix.nrows();
    affine_monotone(matrix, Vector::zeros(n))
}

pub fn affine_monotone(matrix: DMatrix<f64>, shift: Vector) -> Result<LinearMonotone> {
    if matrix.nrows() != matrix.ncols() {
        return Err(Error::InvalidParameter(format!(
            "operator matrix must be square, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    check_dim(matrix.nrows(), shift.len())?;
    if matrix.iter().chain(shift.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("operator data has non-finite entries".into()));
    }
    let sym = (&matrix + matrix.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let scale = eig.eigenvalues.amax().max(1.0);
    let min = eig.eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(Error::InvalidParameter(format!(
            "operator is not monotone: symmetric part has eigenvalue {min:e}"
        )));
    }
    Ok(LinearMonotone {
        matrix,
        shift,
        cache: RwLock::new(Vec::new()),
    })
}

impl LinearMonotone {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn shift(&self) -> &Vector {
        &self.shift
    }

    /// `Mx + c`
    pub fn apply(&self, x: &Vector) -> Vector {
        &self.matrix * x + &self.shift
    }

    fn factorization(&self, gamma: f64) -> Factorization {
        let key = gamma.to_bits();
        {
            let cache = self.cache.read().unwrap_or_else(|e| e.into_inner());
            if let Some((_, lu)) = cache.iter().find(|(k, _)| *k == key) {
                return Arc::clone(lu);
            }
        }
        let n = self.matrix.nrows();
        let lu = Arc::new((DMatrix::identity(n, n) + &self.matrix * gamma).lu());
        let mut cache = self.cache.write().unwrap_or_else(|e| e.into_inner());
        if cache.len() >= MAX_CACHED_FACTORIZATIONS {
            cache.clear();
        }
        cache.push((key, Arc::clone(&lu)));
        lu
    }
}

impl ResolventFamily for LinearMonotone {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        check_gamma(gamma)?;
        let rhs = x - &self.shift * gamma;
        self.factorization(gamma)
            .solve(&rhs)
            .ok_or_else(|| Error::Singular(format!("I + {gamma}·M")))
    }

    fn label(&self) -> &str {
        "linear"
    }
}

/// Not monotone: `x ↦ factor · x` posing as a resolvent. Exists only to
/// inject blow-ups when exercising divergence handling.
#[derive(Debug, Clone)]
pub struct Expansive {
    dim: usize,
    factor: f64,
}

pub fn expansive(dim: usize, factor: f64) -> Expansive {
    Expansive { dim, factor }
}

impl ResolventFamily for Expansive {
    fn dim(&self) -> usize {
        self.dim
    }

    fn resolve(&self, _gamma: f64, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok(x * self.factor)
    }

    fn label(&self) -> &str {
        "expansive"
    }
}

/// `J_{γ(sA)} = J_{(γs)A}`: the family of a positively scaled operator.
pub struct ScaledResolvent {
    inner: Arc<dyn ResolventFamily>,
    scale: f64,
}

impl ScaledResolvent {
    pub fn new(inner: Arc<dyn ResolventFamily>, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "operator scale must be positive and finite, got {scale}"
            )));
        }
        Ok(Self { inner, scale })
    }
}

impl ResolventFamily for ScaledResolvent {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        self.inner.resolve(gamma * self.scale, x)
    }

    fn label(&self) -> &str {
        self.inner.label()
    }
}

type ResolventFn = dyn Fn(f64, &Vector) -> Result<Vector> + Send + Sync;

/// Resolvent family from a closure.
pub struct FnResolvent {
    dim: usize,
    label: String,
    f: Arc<ResolventFn>,
}

impl FnResolvent {
    pub fn new<F>(dim: usize, label: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64, &Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        Self {
            dim,
            label: label.into(),
            f: Arc::new(f),
        }
    }
}

impl ResolventFamily for FnResolvent {
    fn dim(&self) -> usize {
        self.dim
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        (self.f)(gamma, x)
    }

    fn label(&self) -> &str {
        &self.label
    }
}

// ---------------------------------------------------------------------------
// Built-in cocoercive maps

/// `B = 0`. Cocoercive for every `β > 0`; the caller declares which one.
#[derive(Debug, Clone)]
pub struct ZeroMap {
    dim: usize,
    beta: f64,
}

pub fn zero_map(dim: usize, beta: f64) -> Result<ZeroMap> {
    check_beta(beta)?;
    Ok(ZeroMap { dim, beta })
}

fn check_beta(beta: f64) -> Result<()> {
    if beta > 0.0 && beta.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "cocoercivity constant must be positive and finite, got {beta}"
        )))
    }
}

impl Cocoercive for ZeroMap {
    fn dim(&self) -> usize {
        self.dim
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok(Vector::zeros(self.dim))
    }

    fn label(&self) -> &str {
        "zero"
    }
}

/// `x ↦ Qx − b` for symmetric positive semidefinite `Q`, with
/// `β = 1/λ_max(Q)`.
#[derive(Debug, Clone)]
pub struct AffineGradient {
    q: DMatrix<f64>,
    b: Vector,
    beta: f64,
}

pub fn affine_gradient(q: DMatrix<f64>, b: Vector) -> Result<AffineGradient> {
    let lmax = symmetric_psd_lmax(&q)?;
    check_dim(q.nrows(), b.len())?;
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("offset has non-finite entries".into()));
    }
    if !(lmax > 0.0) {
        return Err(Error::InvalidParameter(
            "Q must have a positive largest eigenvalue (use the zero map for Q = 0)".into(),
        ));
    }
    Ok(AffineGradient {
        q,
        b,
        beta: 1.0 / lmax,
    })
}

/// `B = Id`, `β = 1`.
pub fn identity_map(dim: usize) -> AffineGradient {
    AffineGradient {
        q: DMatrix::identity(dim, dim),
        b: Vector::zeros(dim),
        beta: 1.0,
    }
}

/// Largest eigenvalue of a symmetric positive semidefinite matrix, rejecting
/// asymmetric or indefinite input.
pub fn symmetric_psd_lmax(q: &DMatrix<f64>) -> Result<f64> {
    if q.nrows() != q.ncols() || q.nrows() == 0 {
        return Err(Error::InvalidParameter(format!(
            "matrix must be square and nonempty, got {}x{}",
            q.nrows(),
            q.ncols()
        )));
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    let scale = q.amax().max(1.0);
    let asym = (q - q.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!(
            "matrix must be symmetric (asymmetry {asym:e})"
        )));
    }
    let eig = SymmetricEigen::new(q.clone());
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    if min < -1e-10 * max.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "matrix must be positive semidefinite (eigenvalue {min:e})"
        )));
    }
    Ok(max)
}

impl AffineGradient {
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }
}

impl Cocoercive for AffineGradient {
    fn dim(&self) -> usize {
        self.q.nrows()
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(&self.q * x - &self.b)
    }

    fn label(&self) -> &str {
        "affine"
    }
}

type MapFn = dyn Fn(&Vector) -> Result<Vector> + Send + Sync;

/// Cocoercive map from a closure and a declared constant.
pub struct FnCocoercive {
    dim: usize,
    beta: f64,
    f: Arc<MapFn>,
}

impl FnCocoercive {
    pub fn new<F>(dim: usize, beta: f64, f: F) -> Result<Self>
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        check_beta(beta)?;
        Ok(Self {
            dim,
            beta,
            f: Arc::new(f),
        })
    }
}

impl Cocoercive for FnCocoercive {
    fn dim(&self) -> usize {
        self.dim
    }

    fn beta(&self) -> f64 {
        self.beta
    }

    fn eval(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        (self.f)(x)
    }
}

// ---------------------------------------------------------------------------
// Averaged operators

/// An operator `T` declared `α`-averaged, i.e. `T = (1 − α) Id + α R` for
/// some nonexpansive `R`, with respect to `inner`.
#[derive(Clone)]
pub struct AveragedOperator {
    apply: Arc<MapFn>,
    alpha: f64,
    dim: usize,
    inner: InnerProduct,
}

impl fmt::Debug for AveragedOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AveragedOperator")
            .field("alpha", &self.alpha)
            .field("dim", &self.dim)
            .finish()
    }
}

impl AveragedOperator {
    pub fn new<F>(dim: usize, alpha: f64, apply: F) -> Result<Self>
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        Self::with_inner(dim, alpha, InnerProduct::Uniform, apply)
    }

    pub fn with_inner<F>(dim: usize, alpha: f64, inner: InnerProduct, apply: F) -> Result<Self>
    where
        F: Fn(&Vector) -> Result<Vector> + Send + Sync + 'static,
    {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "averagedness constant must lie in ]0,1[, got {alpha}"
            )));
        }
        if let Some(d) = inner.dim() {
            check_dim(dim, d)?;
        }
        Ok(Self {
            apply: Arc::new(apply),
            alpha,
            dim,
            inner,
        })
    }

    /// `P_V`, firmly nonexpansive.
    pub fn projector(p: SubspaceProjector) -> Self {
        let dim = p.dim();
        let inner = p.inner().clone();
        Self::with_inner(dim, 0.5, inner, move |x| p.project(x)).expect("1/2 is admissible")
    }

    /// `J_{γA}`, firmly nonexpansive.
    pub fn resolvent(a: Arc<dyn ResolventFamily>, gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        let dim = a.dim();
        Self::new(dim, 0.5, move |x| a.resolve(gamma, x))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inner(&self) -> &InnerProduct {
        &self.inner
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        (self.apply)(x)
    }
}

// ---------------------------------------------------------------------------
// Derived resolvents

/// `R_{γA} x = 2 J_{γA} x − x`
pub fn reflected_resolvent(a: &dyn ResolventFamily, gamma: f64, x: &Vector) -> Result<Vector> {
    check_gamma(gamma)?;
    let j = a.resolve(gamma, x)?;
    Ok(j * 2.0 - x)
}

/// Resolvent of the partial inverse `(γA)_V` at `s`:
/// `P_V p + P_{V⊥}(s − p)` with `p = J_{γA} s`.
pub fn partial_inverse_resolvent(
    a: &dyn ResolventFamily,
    v: &SubspaceProjector,
    gamma: f64,
    s: &Vector,
) -> Result<Vector> {
    check_gamma(gamma)?;
    check_dim(v.dim(), s.len())?;
    check_dim(a.dim(), s.len())?;
    let p = a.resolve(gamma, s)?;
    Ok(v.apply(&p) + v.apply_complement(&(s - &p)))
}

/// Checks `s − z ∈ (γA)_V z` by unfolding the partial inverse: with
/// `u = P_V z + P_{V⊥}(s − z)` and `w = P_V(s − z) + P_{V⊥} z`, the inclusion
/// holds iff `w ∈ γA u`, i.e. `u = J_{γA}(u + w)`. Returns `‖u − J_{γA}(u + w)‖`.
pub fn partial_inverse_residual(
    a: &dyn ResolventFamily,
    v: &SubspaceProjector,
    gamma: f64,
    s: &Vector,
    z: &Vector,
) -> Result<f64> {
    check_dim(v.dim(), s.len())?;
    check_dim(v.dim(), z.len())?;
    let d = s - z;
    let u = v.apply(z) + v.apply_complement(&d);
    let w = v.apply(&d) + v.apply_complement(z);
    let j = a.resolve(gamma, &(&u + &w))?;
    Ok(v.norm(&(u - j)))
}

// ---------------------------------------------------------------------------
// Sampled certificates

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledCertificate {
    pub samples: usize,
    pub tol: f64,
    /// Largest observed violation of the audited inequality (`≤ 0` when it
    /// holds with slack everywhere).
    pub worst_violation: f64,
}

impl SampledCertificate {
    fn new(samples: usize, tol: f64) -> Self {
        Self {
            samples,
            tol,
            worst_violation: f64::NEG_INFINITY,
        }
    }

    fn observe(&mut self, violation: f64) {
        if violation.is_nan() {
            self.worst_violation = f64::INFINITY;
        } else {
            self.worst_violation = self.worst_violation.max(violation);
        }
    }

    pub fn passed(&self) -> bool {
        self.worst_violation <= self.tol
    }
}

/// Samples `‖Tx − Ty‖² ≤ ‖x − y‖² − ((1 − α)/α)‖(Id − T)x − (Id − T)y‖²`
/// on random pairs.
pub fn certify_averaged(t: &AveragedOperator, samples: usize, tol: f64, seed: u64) -> SampledCertificate {
    let mut rng = Sampler::new(seed);
    let mut cert = SampledCertificate::new(samples, tol);
    let k = (1.0 - t.alpha) / t.alpha;
    for _ in 0..samples {
        let x = rng.vector(t.dim, AUDIT_SCALE);
        let y = rng.vector(t.dim, AUDIT_SCALE);
        let violation = match (t.apply(&x), t.apply(&y)) {
            (Ok(tx), Ok(ty)) => {
                let lhs = t.inner.norm_squared(&(&tx - &ty));
                let rx = &x - &tx;
                let ry = &y - &ty;
                let rhs = t.inner.norm_squared(&(&x - &y)) - k * t.inner.norm_squared(&(rx - ry));
                lhs - rhs
            }
            _ => f64::INFINITY,
        };
        cert.observe(violation);
    }
    cert
}

/// Samples `⟨Jx − Jy, x − y⟩ ≥ ‖Jx − Jy‖²` for `J = J_{γA}`.
pub fn certify_firmly_nonexpansive(
    a: &dyn ResolventFamily,
    gamma: f64,
    samples: usize,
    tol: f64,
    seed: u64,
) -> SampledCertificate {
    let mut rng = Sampler::new(seed);
    let mut cert = SampledCertificate::new(samples, tol);
    for _ in 0..samples {
        let x = rng.vector(a.dim(), AUDIT_SCALE);
        let y = rng.vector(a.dim(), AUDIT_SCALE);
        let violation = match (a.resolve(gamma, &x), a.resolve(gamma, &y)) {
            (Ok(jx), Ok(jy)) => {
                let dj = jx - jy;
                dj.norm_squared() - dj.dot(&(&x - &y))
            }
            _ => f64::INFINITY,
        };
        cert.observe(violation);
    }
    cert
}

/// Samples `⟨x − y, Bx − By⟩ ≥ β‖Bx − By‖²` for `x, y ∈ V`, using the
/// ambient inner product of `v`.
pub fn certify_cocoercive(
    b: &dyn Cocoercive,
    v: &SubspaceProjector,
    samples: usize,
    tol: f64,
    seed: u64,
) -> SampledCertificate {
    let mut rng = Sampler::new(seed);
    let mut cert = SampledCertificate::new(samples, tol);
    for _ in 0..samples {
        let x = v.apply(&rng.vector(b.dim(), AUDIT_SCALE));
        let y = v.apply(&rng.vector(b.dim(), AUDIT_SCALE));
        let violation = match (b.eval(&x), b.eval(&y)) {
            (Ok(bx), Ok(by)) => {
                let db = bx - by;
                b.beta() * v.inner().norm_squared(&db) - v.inner().dot(&(&x - &y), &db)
            }
            _ => f64::INFINITY,
        };
        cert.observe(violation);
    }
    cert
}
