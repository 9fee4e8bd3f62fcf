pub mod config;
pub mod error;
pub mod features;
pub mod kernels;
pub mod learner;
pub mod linalg;
pub mod par;
pub mod plot;
pub mod rng;
pub mod special;
pub mod sweep;
pub mod targets;
