//! Simulation library for two-layer amplify-and-forward relay networks using
//! distributed space-time coding.
//!
//! The pipeline is: draw a [`channel::ChannelRealization`], pick transmit
//! factors for a [`protocols::PowerAllocation`], propagate a codebook block
//! through the relays, and detect it with [`decoder::MlDecoder`] using the
//! exact conditional statistics from [`protocols::build_statistics`].

pub mod channel;
pub mod decoder;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod powalloc;
pub mod protocols;
pub mod signal;
pub mod snr;

pub use error::{Error, Result};
