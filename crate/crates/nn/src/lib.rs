//! 3-D convolutional ConfMap networks (CDC, stacked hourglass, and stacked
//! hourglass with temporal inception) on a small reverse-mode autograd.
//!
//! Tensors are `[batch, channel, time, range, azimuth]`; everything is
//! generic over [`rodkit_core::Scalar`].

pub mod checkpoint;
pub mod conv;
pub mod gradcheck;
pub mod graph;
pub mod inception;
pub mod input;
pub mod loss;
pub mod model;
pub mod params;
pub mod tensor;
pub mod train;

pub use conv::{conv3d_backward, conv3d_forward, deconv3d_backward, deconv3d_forward, Conv3dSpec, Deconv3dSpec};
pub use inception::{temporal_inception_backward, temporal_inception_forward, InceptionSpec};
pub use input::{confmaps_to_target, output_to_confmaps, ramap_to_input, Normalization};
pub use loss::{bce_loss, sigmoid, sigmoid_bce, Reduction};
pub use model::{build_model, Model, ModelSpec, Variant};
pub use params::ParamStore;
pub use tensor::Tensor5;
pub use train::{train, EpochReport, Optimizer, Sample, TrainConfig, TrainReport};

pub type Tensor5F32 = Tensor5<f32>;
pub type Tensor5F64 = Tensor5<f64>;
pub type ModelF32 = Model<f32>;
pub type ModelF64 = Model<f64>;
