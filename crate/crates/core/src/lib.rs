//! Charge sharpening of Z_N-symmetric monitored circuits through their
//! flow-loop statistical mechanics.
//!
//! Measurement records are Born-sampled, the worm sampler estimates the
//! winding-sector distribution `P(Q|s)` for each record, and the results are
//! reduced to disorder-averaged diagnostics. A brute-force oracle covers
//! tiny tori for validation.

pub mod channel;
pub mod disorder;
pub mod error;
pub mod flow;
pub mod lattice;
pub mod metropolis;
pub mod observables;
pub mod oracle;
pub mod rng;
pub mod stats;
pub mod worm;

pub use channel::ClockChannel;
pub use disorder::{realization, DisorderRealization};
pub use error::{Error, Result};
pub use flow::{DualSpinConfig, FlowConfig};
pub use lattice::{Cycle, TorusLattice};
pub use metropolis::Schedule;
pub use observables::DisorderedObservable;
pub use worm::{SectorEstimate, WindingHistogram};
