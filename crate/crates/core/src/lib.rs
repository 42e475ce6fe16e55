//! Weakly supervised binary classification from N-tuple constraints and
//! pointwise unlabeled data.
//!
//! The pipeline: a [`scenario::ScenarioSpec`] fixes which joint label
//! assignments a tuple may carry; [`coefficients`] turns that constraint
//! plus the class priors into per-position mixture weights and the
//! left-inverse reconstruction weights; [`risk`] assembles unbiased risk
//! estimates from scores; [`train`] minimizes the corrected risk with
//! momentum SGD; [`data`] generates reproducible synthetic datasets and
//! reads/writes the CSV formats; [`eval`] hosts the accuracy, bound, and
//! unbiasedness harnesses.

pub mod coefficients;
pub mod data;
pub mod error;
pub mod eval;
pub mod losses;
pub mod risk;
pub mod scenario;
pub mod train;

pub use coefficients::{
    mixture_closed_form, mixture_for, mixture_from_enumeration, reconstruction_weights,
    symmetric_weights, MixtureCoefficients, Priors, ReconstructionWeights, SymmetricWeights,
};
pub use error::{Error, Result};
pub use losses::{loss, loss_grad, LossKind};
pub use risk::{correct, CorrectionSpec, RiskReport, RiskWeights, TupleScores};
pub use scenario::{LabelVector, ScenarioKind, ScenarioSpec};
pub use train::{Model, ModelArch, TrainConfig};
