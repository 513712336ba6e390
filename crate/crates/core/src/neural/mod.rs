//! Dense network machinery: the path LSTM, the hidden and softmax layers,
//! SGD training and gradient verification.

mod gradcheck;
mod head;
mod lstm;
mod matrix;
mod network;

pub use gradcheck::{grad_check, relative_error, GradCheckReport, RELATIVE_FLOOR};
pub use head::{head_backward, head_forward, DenseHead, DropoutMask, HeadGrads, HeadOutput};
pub use lstm::{lstm_backward, lstm_forward, LstmCache, LstmGrads, LstmParams, LstmSpec};
pub use matrix::{sigmoid, softmax, Mat, RowGrads};
pub use network::{
    mean_loss, train_epoch, Ablation, Example, Network, NetworkGrads, Prediction, TrainConfig,
    INIT_SCALE,
};
