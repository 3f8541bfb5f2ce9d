//! Dense tensors, the parameter registry, Adam, the seeded generator and the
//! finite-difference gradient checker.

mod adam;
mod gradcheck;
mod params;
mod rng;
mod scalar;
mod tensor;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use gradcheck::{finite_diff_check, relative_error, GradCheckReport, ParamCheck};
pub use params::{ParamId, ParamStore};
pub use rng::Rng;
pub use scalar::{axpy, dot, sigmoid, Scalar};
pub use tensor::{softmax, softmax_in_place, Tensor};
