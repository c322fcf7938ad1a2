//! Monte Carlo sampling of the square-lattice Ising model in an `L × L` box
//! with plus boundary conditions.

mod checkpoint;
mod chi;
mod dynamics;
mod multicanonical;
mod spin;

pub use checkpoint::{Checkpoint, SamplerKind, MAGIC as CHECKPOINT_MAGIC, VERSION as CHECKPOINT_VERSION};
pub use chi::{blocking_error, measure_chi, ChiEstimate, MIN_MEASUREMENT_SWEEPS};
pub use dynamics::{
    exchange_at, glauber_flip_at, glauber_step, glauber_sweep, CanonicalConstraint, CanonicalSampler,
    ExchangeMode, InitMode,
};
pub use multicanonical::{
    combine_log_p, log_sum_exp, multicanonical_logp, snap_range, LogNormalization, MagnetizationHistogram,
    MulticanonicalSchedule,
};
pub use spin::{Boundary, SpinConfig};
