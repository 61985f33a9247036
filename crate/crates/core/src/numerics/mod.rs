//! Dense numeric substrate for the expansion models.

mod adam;
mod gradcheck;
pub mod linalg;
mod ops;
mod params;
mod sampled_softmax;
mod sampler;
mod scalar;
mod tensor;

pub use adam::{adam_step, AdamConfig};
pub use gradcheck::{finite_diff_check, finite_diff_check_piecewise, GradCheckReport};
pub use ops::{log_sum_exp, masked_softmax, sigmoid, softmax};
pub use params::{AdamState, Grads, ParamId, ParamStore, Values};
pub use sampled_softmax::{sampled_softmax_loss, CandidateSet, SampledLoss};
pub use sampler::{CandidateSampler, SampleDistribution, SampledCandidates, SamplerConfig};
pub use scalar::{cast, Scalar};
pub use tensor::Tensor;
