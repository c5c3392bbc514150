//! Finite-dimensional real Hilbert space primitives.
//!
//! Points are plain [`Vector`]s. The ambient geometry is described by an
//! [`InnerProduct`], which is the uniform Euclidean product unless a weight
//! vector is supplied; weighted products appear in the product-space
//! reduction, where the consensus subspace is orthogonal only with respect to
//! `⟨x, y⟩ = Σ ωᵢ ⟨xᵢ, yᵢ⟩`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};

pub type Vector = DVector<f64>;

/// Default absolute tolerance for projector audits on unit-scale samples.
pub const PROJECTOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InnerProduct {
    #[default]
    Uniform,
    /// `⟨x, y⟩ = Σ wᵢ xᵢ yᵢ` with strictly positive weights, one per coordinate.
    Weighted(Vec<f64>),
}

impl InnerProduct {
    pub fn weighted(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidParameter("weight vector is empty".into()));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "inner-product weights must be finite and strictly positive, got {w}"
            )));
        }
        Ok(InnerProduct::Weighted(weights))
    }

    pub fn dim(&self) -> Option<usize> {
        match self {
            InnerProduct::Uniform => None,
            InnerProduct::Weighted(w) => Some(w.len()),
        }
    }

    pub fn dot(&self, x: &Vector, y: &Vector) -> f64 {
        match self {
            InnerProduct::Uniform => x.dot(y),
            InnerProduct::Weighted(w) => w
                .iter()
                .zip(x.iter().zip(y.iter()))
                .map(|(w, (a, b))| w * a * b)
                .sum(),
        }
    }

    pub fn norm_squared(&self, x: &Vector) -> f64 {
        self.dot(x, x)
    }

    pub fn norm(&self, x: &Vector) -> f64 {
        self.norm_squared(x).sqrt()
    }

    pub fn distance(&self, x: &Vector, y: &Vector) -> f64 {
        self.norm(&(x - y))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ProjectorKind {
    Identity,
    Zero,
    /// `V = span{(1, …, 1)}`
    Constant,
    /// `V = {x : Σ xᵢ = 0}`
    ZeroMean,
    /// Diagonal of a weighted product of `m` copies of a `base_dim` space.
    Consensus { weights: Vec<f64>, base_dim: usize },
    Dense(DMatrix<f64>),
}

/// Orthogonal projector `P_V` onto a closed subspace `V`.
///
/// Structured variants apply in `O(n)`; the dense variant holds an explicit
/// matrix, which must be idempotent and self-adjoint with respect to the
/// ambient inner product (see [`SubspaceProjector::audit`]).
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceProjector {
    kind: ProjectorKind,
    dim: usize,
    inner: InnerProduct,
}

impl SubspaceProjector {
    pub fn identity(dim: usize) -> Self {
        Self::structured(ProjectorKind::Identity, dim)
    }

    pub fn zero(dim: usize) -> Self {
        Self::structured(ProjectorKind::Zero, dim)
    }

    pub fn constant(dim: usize) -> Self {
        Self::structured(ProjectorKind::Constant, dim)
    }

    pub fn zero_mean(dim: usize) -> Self {
        Self::structured(ProjectorKind::ZeroMean, dim)
    }

    fn structured(kind: ProjectorKind, dim: usize) -> Self {
        Self {
            kind,
            dim,
            inner: InnerProduct::Uniform,
        }
    }

    /// Consensus projector `(xᵢ) ↦ (x̄, …, x̄)` with `x̄ = Σ ωᵢ xᵢ`, acting on
    /// `m = weights.len()` stacked blocks of length `base_dim`. The ambient
    /// inner product is the ω-weighted one.
    pub fn consensus(weights: &[f64], base_dim: usize) -> Result<Self> {
        validate_weights(weights)?;
        if base_dim == 0 {
            return Err(Error::InvalidParameter("base dimension must be positive".into()));
        }
        let coord_weights = weights
            .iter()
            .flat_map(|w| std::iter::repeat_n(*w, base_dim))
            .collect();
        Ok(Self {
            kind: ProjectorKind::Consensus {
                weights: weights.to_vec(),
                base_dim,
            },
            dim: weights.len() * base_dim,
            inner: InnerProduct::Weighted(coord_weights),
        })
    }

    /// Projector given by an explicit square matrix, orthogonal for the
    /// uniform inner product.
    pub fn dense(matrix: DMatrix<f64>) -> Result<Self> {
        Self::dense_with_inner(matrix, InnerProduct::Uniform)
    }

    pub fn dense_with_inner(matrix: DMatrix<f64>, inner: InnerProduct) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::InvalidParameter(format!(
                "projector matrix must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("projector matrix has non-finite entries".into()));
        }
        if let Some(d) = inner.dim() {
            check_dim(matrix.nrows(), d)?;
        }
        let dim = matrix.nrows();
        Ok(Self {
            kind: ProjectorKind::Dense(matrix),
            dim,
            inner,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn inner(&self) -> &InnerProduct {
        &self.inner
    }

    pub fn label(&self) -> &'static str {
        match self.kind {
            ProjectorKind::Identity => "identity",
            ProjectorKind::Zero => "zero",
            ProjectorKind::Constant => "constant",
            ProjectorKind::ZeroMean => "zero-mean",
            ProjectorKind::Consensus { .. } => "consensus",
            ProjectorKind::Dense(_) => "dense",
        }
    }

    /// `true` when `V` is the whole space.
    pub fn is_identity(&self) -> bool {
        matches!(self.kind, ProjectorKind::Identity)
    }

    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok(self.apply(x))
    }

    pub fn project_complement(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok(self.apply_complement(x))
    }

    /// `R_{N_V} x = 2 P_V x − x`
    pub fn reflect(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim, x.len())?;
        Ok(self.apply_reflect(x))
    }

    pub fn norm(&self, x: &Vector) -> f64 {
        self.inner.norm(x)
    }

    pub fn dot(&self, x: &Vector, y: &Vector) -> f64 {
        self.inner.dot(x, y)
    }

    // Unchecked variants used inside solver loops whose dimensions were
    // validated up front.

    pub(crate) fn apply(&self, x: &Vector) -> Vector {
        match &self.kind {
            ProjectorKind::Identity => x.clone(),
            ProjectorKind::Zero => Vector::zeros(self.dim),
            ProjectorKind::Constant => Vector::from_element(self.dim, mean(x)),
            ProjectorKind::ZeroMean => {
                let m = mean(x);
                x.map(|v| v - m)
            }
            ProjectorKind::Consensus { weights, base_dim } => {
                let avg = weighted_block_mean(x, weights, *base_dim);
                let mut out = Vector::zeros(self.dim);
                for i in 0..weights.len() {
                    out.rows_mut(i * base_dim, *base_dim).copy_from(&avg);
                }
                out
            }
            ProjectorKind::Dense(m) => m * x,
        }
    }

    pub(crate) fn apply_complement(&self, x: &Vector) -> Vector {
        match &self.kind {
            ProjectorKind::Identity => Vector::zeros(self.dim),
            ProjectorKind::Zero => x.clone(),
            _ => x - self.apply(x),
        }
    }

    pub(crate) fn apply_reflect(&self, x: &Vector) -> Vector {
        match &self.kind {
            ProjectorKind::Identity => x.clone(),
            ProjectorKind::Zero => -x,
            _ => self.apply(x) * 2.0 - x,
        }
    }

    /// Samples the projector invariants (idempotence, self-adjointness with
    /// respect to the ambient inner product, linearity) on random points.
    pub fn audit(&self, samples: usize, tol: f64, seed: u64) -> ProjectorAudit {
        let mut rng = Sampler::new(seed);
        let mut audit = ProjectorAudit {
            samples,
            tol,
            ..ProjectorAudit::default()
        };
        for _ in 0..samples {
            let x = rng.vector(self.dim, 1.0);
            let y = rng.vector(self.dim, 1.0);
            let a = rng.scalar(1.0);
            let px = self.apply(&x);
            let py = self.apply(&y);
            let idem = self.inner.distance(&self.apply(&px), &px);
            let adj = (self.inner.dot(&px, &y) - self.inner.dot(&x, &py)).abs();
            let lin = self.inner.norm(&(self.apply(&(&x * a + &y)) - &px * a - &py));
            audit.idempotence = audit.idempotence.max(idem);
            audit.self_adjointness = audit.self_adjointness.max(adj);
            audit.linearity = audit.linearity.max(lin);
        }
        audit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProjectorAudit {
    pub samples: usize,
    pub tol: f64,
    pub idempotence: f64,
    pub self_adjointness: f64,
    pub linearity: f64,
}

impl ProjectorAudit {
    pub fn worst(&self) -> f64 {
        self.idempotence.max(self.self_adjointness).max(self.linearity)
    }

    pub fn passed(&self) -> bool {
        self.worst() <= self.tol
    }
}

/// Product-space weights must lie in `]0, 1[` and sum to one. A single block
/// with weight one is the degenerate product `H¹ = H` and is accepted.
pub fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidParameter("at least one weight is required".into()));
    }
    let single = weights.len() == 1;
    for &w in weights {
        let ok = w.is_finite() && w > 0.0 && (w < 1.0 || (single && w == 1.0));
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "weights must lie in ]0,1[ (got {w})"
            )));
        }
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "weights must sum to 1 within 1e-12 (sum = {total})"
        )));
    }
    Ok(())
}

fn mean(x: &Vector) -> f64 {
    if x.is_empty() {
        0.0
    } else {
        x.sum() / x.len() as f64
    }
}

/// `Σ ωᵢ xᵢ` over the stacked blocks of `x`, summed in block order.
pub(crate) fn weighted_block_mean(x: &Vector, weights: &[f64], base_dim: usize) -> Vector {
    let mut avg = Vector::zeros(base_dim);
    for (i, w) in weights.iter().enumerate() {
        avg.axpy(*w, &x.rows(i * base_dim, base_dim), 1.0);
    }
    avg
}

/// Seeded source of Gaussian test points, shared by the sampled audits.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn scalar(&mut self, scale: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        scale * z
    }

    pub fn vector(&mut self, dim: usize, scale: f64) -> Vector {
        Vector::from_fn(dim, |_, _| self.scalar(scale))
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        use rand::Rng;
        self.rng.random_range(lo..hi)
    }
}
