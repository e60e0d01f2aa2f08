//! Small convolutional network: 3x3 same-padded convolutions, ReLU, 2x2
//! max-pooling, dense layers and a softmax head trained with Adam on
//! categorical cross-entropy.

mod model;
mod ops;
mod tensor;
mod train;

pub use model::{default_architecture, infer_shapes, vgg16_architecture, CnnModel, Gradients, Layer, LayerSpec};
pub use ops::{conv2d_forward, cross_entropy, maxpool, relu, softmax, PROB_FLOOR};
pub use tensor::Tensor;
pub use train::{backward_and_step, evaluate, train, Adam, AdamConfig, EpochStats, History, TrainConfig};
