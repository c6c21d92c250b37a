//! Parameterized rational macromodels of scattering data: identification,
//! uniform passivity verification over a parameter range, and passivity
//! enforcement by numerator perturbation.

pub mod basis;
pub mod dataset;
pub mod descriptor;
pub mod enforcement;
pub mod error;
pub mod fixtures;
pub mod gsk;
pub mod model;
pub mod oracle;
pub mod passivity;
pub mod qz;
pub mod report;

pub use basis::{BasisKind, ParamBasis, PoleSet};
pub use dataset::{load_dataset, rms_error, FitSplit, RmsMode, RmsReport, SampledDataset};
pub use descriptor::{build_descriptor, eval_descriptor_tf, model_poles, DescriptorRealization};
pub use enforcement::{enforce, EnforceConfig, EnforceOutcome};
pub use error::{Error, Result};
pub use gsk::{default_poles, fit, stability_sweep, FitOutcome, GskConfig, GskLogRow, StabilityReport};
pub use model::{CoeffPerturbation, Laplace, ParamModel};
pub use oracle::{dense_sweep, OracleResult};
pub use passivity::{adaptive_check, CheckConfig, ViolationReport};

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/fitting.md")]
    mod fitting {}
    #[doc = include_str!("../../../book/src/descriptor.md")]
    mod descriptor {}
    #[doc = include_str!("../../../book/src/passivity.md")]
    mod passivity {}
    #[doc = include_str!("../../../book/src/enforcement.md")]
    mod enforcement {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
