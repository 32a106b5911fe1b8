//! Numeric core: dense tensors, recurrent cells with hand-written gradients,
//! losses, dropout, SGD with global-norm clipping, and a finite-difference
//! gradient checker.
//!
//! Everything is `f64`. Gradients are stored next to their parameters in a
//! [`ParamSet`] and are accumulated by the backward passes; [`sgd_step`]
//! consumes and zeroes them.

pub mod cells;
pub mod dropout;
pub mod gradcheck;
pub mod linalg;
pub mod loss;
pub mod params;
pub mod sgd;
pub mod tensor;

pub use cells::{lstm_step, rnn_step, CellParams, LstmLayer, Nonlinearity, RnnLayer};
pub use dropout::{dropout, dropout_mask};
pub use gradcheck::{grad_check, GradCheckReport};
pub use params::{Param, ParamSet};
pub use sgd::sgd_step;
pub use tensor::Tensor;
