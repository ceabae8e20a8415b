//! Market Contact Protocol: messages, seller and buyer behaviour, sampling
//! thresholds, kill policies, contact counting and peer value.

mod message;
mod peer;
pub mod wire;

pub use message::*;
pub use peer::*;
