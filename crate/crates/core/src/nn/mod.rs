//! Graded neurons, activations, layers and networks.

pub mod activation;
pub mod layer;
pub mod network;
pub mod neuron;

pub use activation::{graded_exp, graded_relu, ActivationKind, CLAMP};
pub use layer::{GradeBlock, Layer};
pub use network::{Network, NetworkDoc};
pub use neuron::{effective_weight, AdditiveNeuron, LogValue, MultiplicativeNeuron};
