//! Training machinery: cluster targets, the reward, dual-clip PPO, and the
//! training and evaluation loops.

pub mod kmeans;
pub mod ppo;
pub mod reward;
pub mod targets;
pub mod train;

pub use ppo::{PpoConfig, TrajectoryBuffer, Transition};
pub use reward::RewardConfig;
pub use targets::{ClusterAssignment, CentroidTracker};
pub use train::{evaluate, train, train_with_progress, Controller, EvalResult, PolicyController, TrainConfig, TrainOutput};
