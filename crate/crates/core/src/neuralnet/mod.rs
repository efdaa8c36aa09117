//! Small feedforward patch classifier with dropout: deterministic and
//! dropout-active inference, mini-batch training, and model files.

mod io;
mod layer;
mod network;
mod train;

pub use io::{load_model, parse_model, save_model, write_model};
pub use layer::{softmax, Layer, LayerSpec, Shape};
pub use network::{DropoutPlan, Gradient, Label, Masks, NetworkParams, PrefixActivation};
pub use train::{accuracy, train, EpochStats, TrainConfig, TrainingExample};
