//! Problem-definition files.
//!
//! A spec is a TOML document with `schema_version = 1`. See the README for
//! the full schema; every table is optional unless the chosen algorithm
//! needs it.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Deserialize;

use crate::fpi::{StepSchedule, DEFAULT_EPS};
use crate::km::{composed_alpha, ErrorSchedule, RelaxationSchedule, AUDIT_PREFIX};
use crate::operators::{
    affine_gradient, affine_monotone, expansive, identity_map, normal_cone_box, normal_cone_of_subspace,
    shifted_abs, subdifferential_abs, zero_map, zero_operator, AveragedOperator, Cocoercive, LinearMonotone,
    ResolventFamily,
};
use crate::spaces::{validate_weights, InnerProduct, Sampler, SubspaceProjector, Vector, PROJECTOR_TOL};
use crate::variational::{box_indicator, l1_norm, quadratic_prox, quadratic_smooth, squared_distance, zero_function};
use crate::variational::{ProxFunction, SmoothFunction};

pub const SCHEMA_VERSION: u32 = 1;

pub const ALGORITHMS: [&str; 8] = ["fdr", "fpi", "fpi-explicit", "km", "product", "dr2", "variational", "pi-sum"];
pub const OPERATOR_KINDS: [&str; 7] = ["zero", "abs", "shifted-abs", "box", "linear", "normal-cone", "expansive"];
pub const COCOERCIVE_KINDS: [&str; 3] = ["zero", "identity", "affine"];
pub const SUBSPACE_KINDS: [&str; 5] = ["identity", "zero", "constant", "zero-mean", "dense"];
pub const SCHEDULE_KINDS: [&str; 3] = ["constant", "power", "periodic"];
pub const ERROR_KINDS: [&str; 3] = ["zero", "geometric", "polynomial"];
pub const FUNCTION_KINDS: [&str; 4] = ["zero", "l1", "box", "quadratic"];
pub const SMOOTH_KINDS: [&str; 2] = ["quadratic", "squared-distance"];
pub const KM_OP_KINDS: [&str; 3] = ["projector", "resolvent", "forward"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Fdr,
    Fpi,
    FpiExplicit,
    Km,
    Product,
    Dr2,
    Variational,
    PiSum,
}

impl Algorithm {
    pub fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "fdr" => Self::Fdr,
            "fpi" => Self::Fpi,
            "fpi-explicit" => Self::FpiExplicit,
            "km" => Self::Km,
            "product" => Self::Product,
            "dr2" => Self::Dr2,
            "variational" => Self::Variational,
            "pi-sum" => Self::PiSum,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Fdr => "fdr",
            Self::Fpi => "fpi",
            Self::FpiExplicit => "fpi-explicit",
            Self::Km => "km",
            Self::Product => "product",
            Self::Dr2 => "dr2",
            Self::Variational => "variational",
            Self::PiSum => "pi-sum",
        }
    }

    fn uses_blocks(&self) -> bool {
        matches!(self, Self::Product | Self::Dr2 | Self::PiSum)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSpec {
    pub schema_version: Option<u32>,
    pub algorithm: Option<String>,
    pub dim: Option<usize>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub operator: Option<OperatorSpec>,
    pub cocoercive: Option<CocoerciveSpec>,
    pub subspace: Option<SubspaceSpec>,
    pub lambda: Option<ScheduleSpec>,
    pub delta: Option<ScheduleSpec>,
    pub eps: Option<f64>,
    pub errors: Option<ErrorsSpec>,
    pub blocks: Option<Vec<OperatorSpec>>,
    pub weights: Option<Vec<f64>>,
    pub f: Option<FunctionSpec>,
    pub g: Option<SmoothSpec>,
    pub km_ops: Option<Vec<KmOpSpec>>,
    pub init: Option<InitSpec>,
    pub stop: Option<StopSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorSpec {
    pub kind: String,
    pub center: Option<Vec<f64>>,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub shift: Option<Vec<f64>>,
    pub subspace: Option<SubspaceSpec>,
    pub factor: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CocoerciveSpec {
    pub kind: String,
    pub beta: Option<f64>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubspaceSpec {
    pub kind: String,
    /// Projector matrix for `dense`, row by row.
    pub matrix: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub kind: Option<String>,
    pub value: Option<f64>,
    pub values: Option<Vec<f64>>,
    pub scale: Option<f64>,
    pub exponent: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorsSpec {
    pub a: Option<ErrorSpec>,
    pub b: Option<ErrorSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErrorSpec {
    pub kind: String,
    pub scale: Option<f64>,
    pub ratio: Option<f64>,
    pub exponent: Option<f64>,
    pub direction: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub kind: String,
    pub lo: Option<Vec<f64>>,
    pub hi: Option<Vec<f64>>,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoothSpec {
    pub kind: String,
    pub matrix: Option<Vec<Vec<f64>>>,
    pub b: Option<Vec<f64>>,
    pub center: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KmOpSpec {
    pub kind: String,
    pub gamma: Option<f64>,
    pub operator: Option<OperatorSpec>,
    pub cocoercive: Option<CocoerciveSpec>,
    pub subspace: Option<SubspaceSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub z: Option<Vec<f64>>,
    pub x: Option<Vec<f64>>,
    pub y: Option<Vec<f64>>,
    /// Draw missing entries from a seeded Gaussian instead of using zeros.
    pub random: Option<bool>,
    /// Standard deviation of the random start.
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub log_every: Option<usize>,
}

/// Command-line overrides applied on top of a spec before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub algorithm: Option<String>,
    pub tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub seed: Option<u64>,
    pub log_every: Option<usize>,
}

/// Every problem found while validating a spec.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecErrors(pub Vec<String>);

impl fmt::Display for SpecErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for SpecErrors {}

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 10_000;

/// A validated spec.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub algorithm: Algorithm,
    pub raw: RawSpec,
    pub(crate) built: Built,
}

impl ProblemSpec {
    pub fn seed(&self) -> u64 {
        self.raw.seed.unwrap_or(0)
    }

    pub fn max_iters(&self) -> usize {
        self.built.stop.max_iters
    }
}

/// Solver inputs assembled from a spec.
#[derive(Clone)]
pub(crate) struct Built {
    pub dim: usize,
    pub gamma: Option<f64>,
    pub a: Option<Arc<dyn ResolventFamily>>,
    pub linear_a: Option<LinearMonotone>,
    pub b: Option<Arc<dyn Cocoercive>>,
    pub v: SubspaceProjector,
    pub relax: RelaxationSchedule,
    pub delta: StepSchedule,
    pub eps: f64,
    pub a_errors: ErrorSchedule,
    pub b_errors: ErrorSchedule,
    pub blocks: Vec<Arc<dyn ResolventFamily>>,
    pub weights: Vec<f64>,
    pub f: Option<Arc<dyn ProxFunction>>,
    pub g: Option<Arc<dyn SmoothFunction>>,
    pub km_ops: Vec<AveragedOperator>,
    pub init: Init,
    pub stop: crate::iteration::StopCriteria,
}

impl fmt::Debug for Built {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Built")
            .field("dim", &self.dim)
            .field("gamma", &self.gamma)
            .field("v", &self.v.label())
            .field("blocks", &self.blocks.len())
            .field("stop", &self.stop)
            .finish()
    }
}

/// Starting point, in the layout the chosen algorithm expects.
#[derive(Debug, Clone)]
pub(crate) enum Init {
    Z(Vector),
    XY(Vector, Vector),
}

pub fn parse_spec(text: &str) -> Result<ProblemSpec, SpecErrors> {
    parse_spec_with(text, &Overrides::default())
}

pub fn parse_spec_with(text: &str, overrides: &Overrides) -> Result<ProblemSpec, SpecErrors> {
    let mut raw: RawSpec = toml::from_str(text).map_err(|e| SpecErrors(vec![format!("malformed spec: {e}")]))?;
    apply_overrides(&mut raw, overrides);
    validate(raw)
}

fn apply_overrides(raw: &mut RawSpec, o: &Overrides) {
    if let Some(a) = &o.algorithm {
        raw.algorithm = Some(a.clone());
    }
    if let Some(s) = o.seed {
        raw.seed = Some(s);
    }
    if o.tol.is_some() || o.max_iters.is_some() || o.log_every.is_some() {
        let stop = raw.stop.get_or_insert_with(StopSpec::default);
        if let Some(t) = o.tol {
            stop.tol = Some(t);
        }
        if let Some(m) = o.max_iters {
            stop.max_iters = Some(m);
        }
        if let Some(k) = o.log_every {
            stop.log_every = Some(k);
        }
    }
}

struct Ctx {
    errors: Vec<String>,
}

impl Ctx {
    fn push(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn lib<T>(&mut self, section: &str, r: crate::Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(format!("{section}: {e}"));
                None
            }
        }
    }

    fn unknown(&mut self, section: &str, what: &str, kind: &str, known: &[&str]) {
        self.push(format!(
            "{section}: unknown {what} `{kind}` (expected one of: {})",
            known.join(", ")
        ));
    }

    fn vector(&mut self, section: &str, field: &str, v: &Option<Vec<f64>>, dim: usize) -> Option<Vector> {
        match v {
            None => {
                self.push(format!("{section}: missing `{field}` (a list of {dim} numbers)"));
                None
            }
            Some(v) if v.len() != dim => {
                self.push(format!("{section}: `{field}` has length {}, expected {dim}", v.len()));
                None
            }
            Some(v) => Some(Vector::from_column_slice(v)),
        }
    }

    fn matrix(&mut self, section: &str, field: &str, m: &Option<Vec<Vec<f64>>>, dim: usize) -> Option<DMatrix<f64>> {
        let Some(rows) = m else {
            self.push(format!("{section}: missing `{field}` ({dim} rows of {dim} numbers)"));
            return None;
        };
        if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
            self.push(format!("{section}: `{field}` must be {dim}x{dim}"));
            return None;
        }
        Some(DMatrix::from_fn(dim, dim, |i, j| rows[i][j]))
    }
}

fn build_subspace(ctx: &mut Ctx, section: &str, s: &SubspaceSpec, dim: usize) -> Option<SubspaceProjector> {
    match s.kind.as_str() {
        "identity" => Some(SubspaceProjector::identity(dim)),
        "zero" => Some(SubspaceProjector::zero(dim)),
        "constant" => Some(SubspaceProjector::constant(dim)),
        "zero-mean" => Some(SubspaceProjector::zero_mean(dim)),
        "dense" => {
            let m = ctx.matrix(section, "matrix", &s.matrix, dim)?;
            let p = ctx.lib(section, SubspaceProjector::dense(m))?;
            let audit = p.audit(64, PROJECTOR_TOL, 0);
            if !audit.passed() {
                ctx.push(format!(
                    "{section}: matrix is not an orthogonal projector (worst defect {:e}, tolerance {PROJECTOR_TOL:e})",
                    audit.worst()
                ));
                return None;
            }
            Some(p)
        }
        other => {
            ctx.unknown(section, "subspace kind", other, &SUBSPACE_KINDS);
            None
        }
    }
}

/// Returns the operator and, for `linear`, its concrete form.
fn build_operator(
    ctx: &mut Ctx,
    section: &str,
    s: &OperatorSpec,
    dim: usize,
) -> Option<(Arc<dyn ResolventFamily>, Option<LinearMonotone>)> {
    let op: Arc<dyn ResolventFamily> = match s.kind.as_str() {
        "zero" => Arc::new(zero_operator(dim)),
        "abs" => Arc::new(subdifferential_abs(dim)),
        "shifted-abs" => Arc::new(shifted_abs(ctx.vector(section, "center", &s.center, dim)?)),
        "box" => {
            let lo = ctx.vector(section, "lo", &s.lo, dim);
            let hi = ctx.vector(section, "hi", &s.hi, dim);
            Arc::new(ctx.lib(section, normal_cone_box(lo?, hi?))?)
        }
        "linear" => {
            let m = ctx.matrix(section, "matrix", &s.matrix, dim)?;
            let shift = match &s.shift {
                None => Vector::zeros(dim),
                Some(_) => ctx.vector(section, "shift", &s.shift, dim)?,
            };
            let op = ctx.lib(section, affine_monotone(m, shift))?;
            return Some((Arc::new(op.clone()), Some(op)));
        }
        "normal-cone" => {
            let Some(sub) = &s.subspace else {
                ctx.push(format!("{section}: `normal-cone` needs a `subspace` table"));
                return None;
            };
            Arc::new(normal_cone_of_subspace(build_subspace(ctx, section, sub, dim)?))
        }
        "expansive" => {
            let factor = s.factor.unwrap_or(1e100);
            Arc::new(expansive(dim, factor))
        }
        other => {
            ctx.unknown(section, "operator kind", other, &OPERATOR_KINDS);
            return None;
        }
    };
    Some((op, None))
}

fn build_cocoercive(ctx: &mut Ctx, section: &str, s: &CocoerciveSpec, dim: usize) -> Option<Arc<dyn Cocoercive>> {
    match s.kind.as_str() {
        "zero" => Some(Arc::new(ctx.lib(section, zero_map(dim, s.beta.unwrap_or(1.0)))?)),
        "identity" => Some(Arc::new(identity_map(dim))),
        "affine" => {
            let q = ctx.matrix(section, "matrix", &s.matrix, dim);
            let b = match &s.b {
                None => Some(Vector::zeros(dim)),
                Some(_) => ctx.vector(section, "b", &s.b, dim),
            };
            Some(Arc::new(ctx.lib(section, affine_gradient(q?, b?))?))
        }
        other => {
            ctx.unknown(section, "cocoercive kind", other, &COCOERCIVE_KINDS);
            None
        }
    }
}

fn build_relax(ctx: &mut Ctx, section: &str, s: &Option<ScheduleSpec>) -> Option<RelaxationSchedule> {
    let Some(s) = s else {
        return Some(RelaxationSchedule::Constant(1.0));
    };
    match s.kind.as_deref().unwrap_or("constant") {
        "constant" => Some(RelaxationSchedule::Constant(s.value.unwrap_or(1.0))),
        "power" => Some(RelaxationSchedule::Power {
            scale: s.scale.unwrap_or(1.0),
            exponent: s.exponent.unwrap_or(0.0),
        }),
        "periodic" => match &s.values {
            Some(v) if !v.is_empty() => Some(RelaxationSchedule::Periodic(v.clone())),
            _ => {
                ctx.push(format!("{section}: `periodic` needs a nonempty `values` list"));
                None
            }
        },
        other => {
            ctx.unknown(section, "schedule kind", other, &SCHEDULE_KINDS);
            None
        }
    }
}

fn build_delta(ctx: &mut Ctx, s: &Option<ScheduleSpec>) -> Option<StepSchedule> {
    let Some(s) = s else {
        return Some(StepSchedule::Constant(1.0));
    };
    match s.kind.as_deref().unwrap_or("constant") {
        "constant" => Some(StepSchedule::Constant(s.value.unwrap_or(1.0))),
        "periodic" => match &s.values {
            Some(v) if !v.is_empty() => Some(StepSchedule::Periodic(v.clone())),
            _ => {
                ctx.push("delta: `periodic` needs a nonempty `values` list");
                None
            }
        },
        other => {
            ctx.unknown("delta", "schedule kind", other, &["constant", "periodic"]);
            None
        }
    }
}

fn build_errors(ctx: &mut Ctx, section: &str, s: &Option<ErrorSpec>, dim: usize) -> Option<ErrorSchedule> {
    let Some(s) = s else {
        return Some(ErrorSchedule::zero());
    };
    let direction = match &s.direction {
        None => None,
        Some(_) => Some(ctx.vector(section, "direction", &s.direction, dim)?),
    };
    let scale = s.scale.unwrap_or(1.0);
    match s.kind.as_str() {
        "zero" => Some(ErrorSchedule::zero()),
        "geometric" => {
            let ratio = s.ratio.unwrap_or(0.5);
            Some(match direction {
                Some(d) => ErrorSchedule::geometric_along(scale, ratio, d),
                None => ErrorSchedule::geometric(scale, ratio),
            })
        }
        "polynomial" => {
            let exponent = s.exponent.unwrap_or(2.0);
            Some(match direction {
                Some(d) => ErrorSchedule::polynomial_along(scale, exponent, d),
                None => ErrorSchedule::polynomial(scale, exponent),
            })
        }
        other => {
            ctx.unknown(section, "error kind", other, &ERROR_KINDS);
            None
        }
    }
}

fn build_function(ctx: &mut Ctx, s: &Option<FunctionSpec>, dim: usize) -> Option<Arc<dyn ProxFunction>> {
    let Some(s) = s else {
        return Some(Arc::new(zero_function(dim)));
    };
    match s.kind.as_str() {
        "zero" => Some(Arc::new(zero_function(dim))),
        "l1" => Some(Arc::new(l1_norm(dim))),
        "box" => {
            let lo = ctx.vector("f", "lo", &s.lo, dim);
            let hi = ctx.vector("f", "hi", &s.hi, dim);
            Some(Arc::new(ctx.lib("f", box_indicator(lo?, hi?))?))
        }
        "quadratic" => {
            let q = ctx.matrix("f", "matrix", &s.matrix, dim);
            let b = match &s.b {
                None => Some(Vector::zeros(dim)),
                Some(_) => ctx.vector("f", "b", &s.b, dim),
            };
            Some(Arc::new(ctx.lib("f", quadratic_prox(q?, b?))?))
        }
        other => {
            ctx.unknown("f", "function kind", other, &FUNCTION_KINDS);
            None
        }
    }
}

fn build_smooth(ctx: &mut Ctx, s: &Option<SmoothSpec>, dim: usize) -> Option<Arc<dyn SmoothFunction>> {
    let Some(s) = s else {
        ctx.push("g: the variational algorithm needs a smooth term `[g]`");
        return None;
    };
    match s.kind.as_str() {
        "quadratic" => {
            let q = ctx.matrix("g", "matrix", &s.matrix, dim);
            let b = match &s.b {
                None => Some(Vector::zeros(dim)),
                Some(_) => ctx.vector("g", "b", &s.b, dim),
            };
            Some(Arc::new(ctx.lib("g", quadratic_smooth(q?, b?))?))
        }
        "squared-distance" => Some(Arc::new(squared_distance(ctx.vector("g", "center", &s.center, dim)?))),
        other => {
            ctx.unknown("g", "smooth kind", other, &SMOOTH_KINDS);
            None
        }
    }
}

fn build_km_op(ctx: &mut Ctx, i: usize, s: &KmOpSpec, dim: usize) -> Option<AveragedOperator> {
    let section = format!("km_ops[{i}]");
    let section = section.as_str();
    let gamma = s.gamma.unwrap_or(1.0);
    match s.kind.as_str() {
        "projector" => {
            let Some(sub) = &s.subspace else {
                ctx.push(format!("{section}: `projector` needs a `subspace` table"));
                return None;
            };
            Some(AveragedOperator::projector(build_subspace(ctx, section, sub, dim)?))
        }
        "resolvent" => {
            let Some(op) = &s.operator else {
                ctx.push(format!("{section}: `resolvent` needs an `operator` table"));
                return None;
            };
            let (a, _) = build_operator(ctx, section, op, dim)?;
            ctx.lib(section, AveragedOperator::resolvent(a, gamma))
        }
        "forward" => {
            let Some(c) = &s.cocoercive else {
                ctx.push(format!("{section}: `forward` needs a `cocoercive` table"));
                return None;
            };
            let b = build_cocoercive(ctx, section, c, dim)?;
            let upper = 2.0 * b.beta();
            if !(gamma > 0.0 && gamma < upper) {
                ctx.push(format!(
                    "{section}: gamma = {gamma} outside admissible range γ ∈ ]0, 2β[ = ]0, {upper}["
                ));
                return None;
            }
            let alpha = gamma / upper;
            ctx.lib(
                section,
                AveragedOperator::new(dim, alpha, move |x| Ok(x - b.eval(x)? * gamma)),
            )
        }
        other => {
            ctx.unknown(section, "km operator kind", other, &KM_OP_KINDS);
            None
        }
    }
}

fn validate(raw: RawSpec) -> Result<ProblemSpec, SpecErrors> {
    let mut ctx = Ctx { errors: Vec::new() };
    match raw.schema_version {
        Some(SCHEMA_VERSION) => {}
        Some(v) => ctx.push(format!("schema_version: unsupported version {v} (expected {SCHEMA_VERSION})")),
        None => ctx.push(format!("schema_version: missing (expected {SCHEMA_VERSION})")),
    }
    let algorithm = match raw.algorithm.as_deref() {
        None => {
            ctx.push(format!("algorithm: missing (expected one of: {})", ALGORITHMS.join(", ")));
            None
        }
        Some(name) => {
            let a = Algorithm::parse(name);
            if a.is_none() {
                ctx.unknown("algorithm", "algorithm", name, &ALGORITHMS);
            }
            a
        }
    };
    let dim = match raw.dim {
        Some(d) if d > 0 => d,
        Some(_) => {
            ctx.push("dim: must be positive");
            1
        }
        None => {
            ctx.push("dim: missing");
            1
        }
    };

    let stop_raw = raw.stop.clone().unwrap_or_default();
    let stop = crate::iteration::StopCriteria {
        tol: stop_raw.tol.unwrap_or(DEFAULT_TOL),
        max_iters: stop_raw.max_iters.unwrap_or(DEFAULT_MAX_ITERS),
        log_every: stop_raw.log_every.unwrap_or(1),
        keep_iterates: false,
    };
    ctx.lib("stop", stop.validate());

    let relax = build_relax(&mut ctx, "lambda", &raw.lambda);
    let eps = raw.eps.unwrap_or(DEFAULT_EPS);
    let errs = raw.errors.clone().unwrap_or_default();

    let Some(algorithm) = algorithm else {
        return Err(SpecErrors(ctx.errors));
    };

    let mut built = Built {
        dim,
        gamma: raw.gamma,
        a: None,
        linear_a: None,
        b: None,
        v: SubspaceProjector::identity(dim),
        relax: relax.clone().unwrap_or_default(),
        delta: StepSchedule::Constant(1.0),
        eps,
        a_errors: ErrorSchedule::zero(),
        b_errors: ErrorSchedule::zero(),
        blocks: Vec::new(),
        weights: Vec::new(),
        f: None,
        g: None,
        km_ops: Vec::new(),
        init: Init::Z(Vector::zeros(0)),
        stop,
    };

    let b = match &raw.cocoercive {
        Some(c) => build_cocoercive(&mut ctx, "cocoercive", c, dim),
        None => zero_map(dim, 1.0).ok().map(|z| Arc::new(z) as Arc<dyn Cocoercive>),
    };
    let v = match &raw.subspace {
        Some(s) => build_subspace(&mut ctx, "subspace", s, dim),
        None => Some(SubspaceProjector::identity(dim)),
    };
    if let Some(v) = &v {
        built.v = v.clone();
    }
    built.b = b.clone();

    let a_err = build_errors(&mut ctx, "errors.a", &errs.a, dim);
    let b_err = build_errors(&mut ctx, "errors.b", &errs.b, dim);
    built.a_errors = a_err.clone().unwrap_or_default();
    built.b_errors = b_err.clone().unwrap_or_default();
    let has_errors = !built.a_errors.is_zero() || !built.b_errors.is_zero();

    // Problem components per algorithm.
    match algorithm {
        Algorithm::Fdr | Algorithm::Fpi | Algorithm::FpiExplicit => {
            let a = match &raw.operator {
                Some(op) => build_operator(&mut ctx, "operator", op, dim),
                None => Some((Arc::new(zero_operator(dim)) as Arc<dyn ResolventFamily>, None)),
            };
            if let Some((a, lin)) = a {
                built.a = Some(a);
                built.linear_a = lin;
            }
        }
        Algorithm::Variational => {
            built.f = build_function(&mut ctx, &raw.f, dim);
            built.g = build_smooth(&mut ctx, &raw.g, dim);
        }
        Algorithm::Km => match &raw.km_ops {
            Some(ops) if !ops.is_empty() => {
                built.km_ops = ops
                    .iter()
                    .enumerate()
                    .filter_map(|(i, op)| build_km_op(&mut ctx, i, op, dim))
                    .collect();
            }
            _ => ctx.push("km_ops: the km algorithm needs at least one `[[km_ops]]` entry"),
        },
        Algorithm::Product | Algorithm::PiSum | Algorithm::Dr2 => match &raw.blocks {
            Some(blocks) if !blocks.is_empty() => {
                built.blocks = blocks
                    .iter()
                    .enumerate()
                    .filter_map(|(i, op)| build_operator(&mut ctx, &format!("blocks[{i}]"), op, dim).map(|x| x.0))
                    .collect();
                if algorithm == Algorithm::Dr2 && blocks.len() != 2 {
                    ctx.push(format!("blocks: dr2 needs exactly 2 blocks, got {}", blocks.len()));
                }
                let m = blocks.len();
                let weights = raw.weights.clone().unwrap_or_else(|| vec![1.0 / m as f64; m]);
                if weights.len() != m {
                    ctx.push(format!("weights: {} weights for {m} blocks", weights.len()));
                } else if ctx.lib("weights", validate_weights(&weights)).is_some() {
                    built.weights = weights;
                }
            }
            _ => ctx.push(format!("blocks: {algorithm} needs at least one `[[blocks]]` entry")),
        },
    }

    // Sections that the algorithm does not read are rejected rather than ignored.
    let unused = |present: bool, name: &str, ctx: &mut Ctx| {
        if present {
            ctx.push(format!("{name}: not used by the {algorithm} algorithm"));
        }
    };
    let pd = matches!(algorithm, Algorithm::Fdr | Algorithm::Fpi | Algorithm::FpiExplicit);
    unused(raw.operator.is_some() && !pd, "operator", &mut ctx);
    unused(raw.blocks.is_some() && !algorithm.uses_blocks(), "blocks", &mut ctx);
    unused(raw.weights.is_some() && !matches!(algorithm, Algorithm::Product | Algorithm::PiSum), "weights", &mut ctx);
    unused((raw.f.is_some() || raw.g.is_some()) && algorithm != Algorithm::Variational, "f/g", &mut ctx);
    unused(raw.km_ops.is_some() && algorithm != Algorithm::Km, "km_ops", &mut ctx);
    unused(raw.delta.is_some() && algorithm != Algorithm::Fpi, "delta", &mut ctx);
    unused(
        raw.subspace.is_some() && (algorithm == Algorithm::Km || algorithm.uses_blocks()),
        "subspace",
        &mut ctx,
    );
    unused(
        raw.cocoercive.is_some() && matches!(algorithm, Algorithm::Km | Algorithm::Dr2 | Algorithm::Variational),
        "cocoercive",
        &mut ctx,
    );
    unused(
        has_errors && matches!(algorithm, Algorithm::Fpi | Algorithm::FpiExplicit | Algorithm::PiSum),
        "errors",
        &mut ctx,
    );
    unused(
        errs.a.is_some() && algorithm == Algorithm::Dr2,
        "errors.a",
        &mut ctx,
    );
    unused(errs.b.is_some() && algorithm == Algorithm::Km, "errors.b", &mut ctx);

    // Step sizes and schedules.
    let beta = match algorithm {
        Algorithm::Variational => built.g.as_ref().map(|g| 1.0 / g.lipschitz()),
        Algorithm::Km | Algorithm::Dr2 => None,
        _ => b.as_ref().map(|b| b.beta()),
    };
    let prefix = AUDIT_PREFIX.min(stop.max_iters + 1);
    let uniform = InnerProduct::Uniform;
    match algorithm {
        Algorithm::Fdr | Algorithm::Variational | Algorithm::Product => {
            if let Some(beta) = beta {
                let gamma = raw.gamma.unwrap_or(beta);
                let upper = 2.0 * beta;
                if !(gamma > 0.0 && gamma < upper) {
                    ctx.push(format!(
                        "gamma: γ = {gamma} outside admissible range γ ∈ ]0, 2β[ = ]0, {upper}["
                    ));
                } else if let Some(relax) = &relax {
                    let alpha = f64::max(2.0 / 3.0, 2.0 * gamma / (gamma + upper));
                    let range = format!(
                        "]0, 1/α[ with α = max{{2/3, 2γ/(γ+2β)}} = {alpha}, i.e. ]0, {}[",
                        1.0 / alpha
                    );
                    if ctx.lib("lambda", relax.audit_open(1.0 / alpha, &range)).is_some() {
                        let m = built.blocks.len().max(1);
                        let (inner, b_ops) = if algorithm == Algorithm::Product {
                            (&uniform, m)
                        } else {
                            (built.v.inner(), 1)
                        };
                        if let Some(e) = &a_err {
                            ctx.lib("errors.a", e.audit(relax, dim, 1, prefix, inner));
                        }
                        if let Some(e) = &b_err {
                            ctx.lib("errors.b", e.audit(relax, dim, b_ops, prefix, inner));
                        }
                    }
                }
            }
        }
        Algorithm::Fpi => {
            let delta = build_delta(&mut ctx, &raw.delta);
            if let (Some(beta), Some(delta)) = (beta, delta) {
                let gamma = raw.gamma.unwrap_or(beta);
                if !(gamma > 0.0 && gamma.is_finite()) {
                    ctx.push(format!("gamma: γ = {gamma} outside admissible range ]0, +∞["));
                } else {
                    ctx.lib("delta", delta.audit(beta, gamma, eps));
                    if !delta.is_unit() && built.linear_a.is_none() {
                        ctx.push(
                            "delta: δ_n ≠ 1 needs a Step 1 oracle, available here only for `linear` operators; \
                             use δ = 1 otherwise",
                        );
                    }
                }
                built.delta = delta;
            }
            if let Some(relax) = &relax {
                ctx.lib("lambda", relax.audit_closed_unit(eps));
            }
        }
        Algorithm::FpiExplicit | Algorithm::PiSum => {
            if let Some(beta) = beta {
                let gamma = raw.gamma.unwrap_or(beta);
                let upper = 2.0 * beta;
                if !(gamma > 0.0 && gamma < upper) {
                    ctx.push(format!(
                        "gamma: γ = {gamma} outside admissible range γ ∈ ]0, 2β[ = ]0, {upper}["
                    ));
                }
            }
            if let Some(relax) = &relax {
                ctx.lib("lambda", relax.audit_closed_unit(DEFAULT_EPS));
            }
        }
        Algorithm::Dr2 => {
            let gamma = raw.gamma.unwrap_or(1.0);
            if !(gamma > 0.0 && gamma.is_finite()) {
                ctx.push(format!("gamma: γ = {gamma} outside admissible range ]0, +∞["));
            }
            if let Some(relax) = &relax {
                if ctx.lib("lambda", relax.audit_open(1.5, "]0, 3/2[")).is_some() {
                    if let Some(e) = &b_err {
                        ctx.lib("errors.b", e.audit(relax, dim, 2, prefix, &uniform));
                    }
                }
            }
        }
        Algorithm::Km => {
            if built.km_ops.len() == raw.km_ops.as_ref().map_or(0, |v| v.len()) && !built.km_ops.is_empty() {
                let alphas: Vec<f64> = built.km_ops.iter().map(|o| o.alpha()).collect();
                if let (Some(alpha), Some(relax)) = (ctx.lib("km_ops", composed_alpha(&alphas)), &relax) {
                    if ctx.lib("lambda", relax.audit_km(alpha)).is_some() {
                        if let Some(e) = &a_err {
                            ctx.lib("errors.a", e.audit(relax, dim, built.km_ops.len(), prefix, &uniform));
                        }
                    }
                }
            }
        }
    }

    built.init = build_init(&mut ctx, &raw, algorithm, &built);

    if ctx.errors.is_empty() {
        Ok(ProblemSpec { algorithm, raw, built })
    } else {
        Err(SpecErrors(ctx.errors))
    }
}

fn build_init(ctx: &mut Ctx, raw: &RawSpec, algorithm: Algorithm, built: &Built) -> Init {
    let init = raw.init.clone().unwrap_or_default();
    let dim = built.dim;
    let m = match algorithm {
        Algorithm::Product | Algorithm::PiSum => built.blocks.len().max(1),
        Algorithm::Dr2 => 2,
        _ => 1,
    };
    let mut sampler = Sampler::new(raw.seed.unwrap_or(0));
    let scale = init.scale.unwrap_or(1.0);
    let random = init.random.unwrap_or(false);
    let mut take = |ctx: &mut Ctx, field: &str, v: &Option<Vec<f64>>, len: usize| -> Vector {
        let fallback = if random {
            sampler.vector(len, scale)
        } else {
            Vector::zeros(len)
        };
        match v {
            None => fallback,
            Some(_) => ctx.vector("init", field, v, len).unwrap_or(fallback),
        }
    };
    match algorithm {
        Algorithm::Fpi | Algorithm::FpiExplicit => {
            if init.z.is_some() {
                ctx.push("init: fpi algorithms start from `x` and `y`, not `z`");
            }
            let x = take(ctx, "x", &init.x, dim);
            let y = take(ctx, "y", &init.y, dim);
            // Generated starts are projected onto V and V⊥; explicit ones are checked by the solver.
            let x = if init.x.is_none() { built.v.apply(&x) } else { x };
            let y = if init.y.is_none() { built.v.apply_complement(&y) } else { y };
            Init::XY(x, y)
        }
        Algorithm::PiSum => {
            if init.z.is_some() {
                ctx.push("init: pi-sum starts from `x` and lifted `y`, not `z`");
            }
            let x = take(ctx, "x", &init.x, dim);
            // Σ ωᵢ yᵢ = 0 is required, so the dual start is zero unless given.
            let y = match &init.y {
                None => Vector::zeros(m * dim),
                Some(_) => take(ctx, "y", &init.y, m * dim),
            };
            Init::XY(x, y)
        }
        _ => {
            if init.x.is_some() || init.y.is_some() {
                ctx.push(format!("init: {algorithm} starts from `z`, not `x`/`y`"));
            }
            Init::Z(take(ctx, "z", &init.z, m * dim))
        }
    }
}
