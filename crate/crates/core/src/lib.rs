//! Simulator and multi-agent PPO trainer for 3D trajectory control of mobile
//! access points (MAPs) serving mobile ground users.

pub mod baselines;
pub mod channel;
pub mod checkpoint;
pub mod config;
pub mod encoder;
pub mod env;
pub mod error;
pub mod experiment;
pub mod nn;
pub mod policy;
pub mod rng;
pub mod trainer;

pub use error::{Error, Result};
