//! Parameter store, Adam optimizer, loss metrics and the generic
//! graph-based training loop shared by all models.

mod adam;
mod fc;
mod loss;
mod store;
mod train;

pub use adam::Adam;
pub use fc::FcModel;
pub use loss::{mse, r_squared};
pub use store::{ParamGrads, ParameterStore};
pub use train::{
    predict, supervised_term, train_supervised, GraphModel, LossTerm, MaintenanceCtx,
    TrainConfig, TrainLog, Trainer,
};
