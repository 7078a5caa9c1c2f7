//! Simulation and multiresolution analysis of network traffic traces.
//!
//! Traces enter as packet events or pre-binned series ([`trace`], [`ingest`]),
//! are summarised scale by scale ([`multires`], [`gaussianity`]), and are
//! searched for characteristic time scales ([`ida`], [`tools`]). The
//! [`simulate`] module produces synthetic traces from ON/OFF, packetized,
//! Slow Start and multi-level source models.

pub mod error;
pub mod gaussianity;
pub mod ida;
pub mod ingest;
pub mod multires;
pub mod simulate;
pub mod stats;
pub mod tools;
pub mod trace;

pub use error::{Error, ErrorFamily, Result};
pub use trace::{BinnedTrace, DyadicView, Event, PacketTrace, SessionBitmap};
