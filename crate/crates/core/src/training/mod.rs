//! Losses, batch sampling, optimisation and the training loop.

pub mod config;
pub mod loss;
pub mod optim;
pub mod sampler;
mod trainer;

pub use config::TrainConfig;
pub use loss::{
    adaptive_lambda, combine, hardest_pairs, identity_loss, total_loss, triplet_batch_hard, LambdaMode, LossReport,
    TripletOutcome,
};
pub use optim::{lr_schedule, Adam};
pub use sampler::{pk_sample, Batch};
pub use trainer::{EpochLog, Trainer};
