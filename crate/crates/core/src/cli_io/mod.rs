//! Run configuration, output formats, the model drivers behind the
//! command-line tool and the kernel verification suite.

mod config;
mod run;
mod snapshot;
mod verify;

pub use config::{parse_config, to_toml, GridSpec, Model, OutputSpec, ParamSpec, RunSpec, TimeSpec, VerifySpec};
pub use run::{run, RunReport, Verdict};
pub use snapshot::{write_contour_csv, Snapshot};
pub use verify::{admissible_profile, verify_kernels, verify_kernels_with, VerifyReport, VerifyRow, BOUND_ALPHAS};
