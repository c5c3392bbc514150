//! Batch harness: problem-definition files in, residual histories out.

mod run;
mod spec;

pub use run::{
    emit_csv, exit_code, is_validation_error, run, write_csv, RunRecord, RunSummary, CSV_HEADER, EXIT_CONVERGED,
    EXIT_DIVERGED, EXIT_FAILURE, EXIT_INVALID_SPEC, EXIT_MAX_ITERS,
};
pub use spec::{
    parse_spec, parse_spec_with, Algorithm, CocoerciveSpec, ErrorSpec, ErrorsSpec, FunctionSpec, InitSpec, KmOpSpec,
    OperatorSpec, Overrides, ProblemSpec, RawSpec, ScheduleSpec, SmoothSpec, SpecErrors, StopSpec, SubspaceSpec,
    ALGORITHMS, DEFAULT_MAX_ITERS, DEFAULT_TOL, OPERATOR_KINDS, SCHEMA_VERSION,
};
