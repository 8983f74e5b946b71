//! Symbol-level precoding and detection toolkit for the multi-user MIMO
//! downlink.
//!
//! The crate covers the full link: QAM alphabets with constructive-interference
//! classification ([`constellation`]), dense complex linear algebra
//! ([`linalg`]), the small optimizers behind the precoders ([`solvers`]),
//! transmit-side schemes ([`precoding`]), receive-side detection
//! ([`detection`]), random channels ([`channel`]) and a Monte Carlo BER
//! harness ([`sim`]).

pub mod channel;
pub mod constellation;
pub mod detection;
pub mod error;
pub mod linalg;
pub mod precoding;
pub mod sim;
pub mod solvers;

pub use error::{Result, SlpError};
