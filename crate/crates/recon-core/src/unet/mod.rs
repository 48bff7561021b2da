//! 3D residual U-Net with from-scratch reverse-mode gradients.
//!
//! Layers (3x3x3 convolutions, ReLU, max pooling, transposed-convolution
//! upsampling, channel-concatenated skips) are hand-differentiated and
//! verified against central finite differences. The network output is
//! `ReLU(input + residual)`, trained with ADAM on an l2 (or l1) loss.

mod adam;
mod checkpoint;
mod layers;
mod loss;
mod model;
mod tensor4;
mod train;

pub use adam::{adam_step, AdamParams, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use layers::{
    concat_channels, conv3d_backward, conv3d_forward, maxpool_backward, maxpool_forward,
    relu_backward, relu_forward, split_channels, upconv_backward, upconv_forward, ConvKernel,
};
pub use loss::{loss_and_grad, LossKind};
pub use model::{
    backward, build_plan, cine_to_tensor, forward_with_tape, init_params, parameter_count,
    tensor_to_cine, unet_forward, unet_forward_frame_2d, ParamSet, ParamTensor, PlanOp, Tape,
    TensorSpec, UNetConfig, UNetPlan,
};
pub use tensor4::Tensor4;
pub use train::{history_to_csv, train, TrainConfig, TrainOutput};
