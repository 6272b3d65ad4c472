//! Energy-based density models trained by Parzen score matching: MLP
//! energies with their exact input gradients, the training objectives,
//! and the diagnostics and denoisers built on the learned score.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod block;
pub mod checkpoint;
pub mod data;
pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod filter;
pub mod idx;
pub mod net;
pub mod objectives;
pub mod optim;
pub mod output;
pub mod parzen;
pub mod patches;
pub mod rng;
pub mod tensor;
pub mod train;

pub use data::{Dataset, NoisyPairBatch};
pub use diagnostics::GridSpec;
pub use error::{Error, Result};
pub use net::{Activation, NetConfig, NetParams, ParamGrad};
pub use rng::RngState;
pub use tensor::Tensor;
pub use train::{LossHistory, ModelKind, TrainConfig, Trainer};
