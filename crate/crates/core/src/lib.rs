//! Splitting methods for monotone inclusions of the form
//!
//! ```text
//! find x such that 0 ∈ A x + B x + N_V x
//! ```
//!
//! where `A` is maximally monotone (accessed only through its resolvents),
//! `B` is cocoercive, and `N_V` is the normal cone of a closed linear subspace
//! `V` of a finite-dimensional real space.
//!
//! The crate is organized bottom-up:
//!
//! - [`spaces`]: vectors, weighted inner products, subspace projectors.
//! - [`operators`]: resolvent families, cocoercive maps, averaged operators,
//!   reflections and partial-inverse resolvents, plus sampled certificates.
//! - [`km`]: the errored Krasnosel'skiĭ–Mann iteration for compositions of
//!   averaged operators.
//! - [`fdr`]: forward-Douglas-Rachford splitting.
//! - [`fpi`]: forward-partial-inverse splitting and its equivalence harness.
//! - [`productspace`]: sums of `m` maximally monotone operators via a
//!   weighted product space and consensus subspace.
//! - [`variational`]: minimizing `f + g` over `V` with proximity operators.
//! - [`cli`]: problem files, dispatch, and CSV output for the batch harness.

// Negated float comparisons are how parameter checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod fdr;
pub mod fpi;
pub mod iteration;
pub mod km;
pub mod operators;
pub mod productspace;
pub mod spaces;
pub mod variational;

pub use error::{Error, Result};
pub use iteration::{IterationRecord, Membership, Status, StopCriteria};
pub use spaces::{InnerProduct, SubspaceProjector, Vector};
