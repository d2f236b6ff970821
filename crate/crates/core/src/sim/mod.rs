//! Pathwise-exact simulation of the coupled workload pair and of the
//! externalities process.
//!
//! Everything is event driven on arrival epochs: between arrivals the
//! workload falls with slope one, so no time discretisation is involved.

mod decomposition;
mod direct;
mod path;

pub use decomposition::{sample_decomposition, sample_increment, DecompositionSampler};
pub use direct::{direct_externality, sample_busy_period};
pub use path::{
    derivative_process, externality_from_path, first_passage, simulate_path, simulate_path_on,
    ArrivalStream, Passage, PathRealization, StopRule,
};

/// Default cap on processed arrivals per path.
pub const DEFAULT_MAX_EVENTS: u64 = 10_000_000;
