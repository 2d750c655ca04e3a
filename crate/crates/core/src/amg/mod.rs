//! Algebraic multigrid.

mod coarsen;
mod dense;
mod hierarchy;
mod interp;
mod smoother;
mod strength;

pub use coarsen::{cljp_coarsen, rs_coarsen, CfLabel, CfSplitting};
pub use hierarchy::{
    amg_setup, AmgHierarchy, AmgOptions, AmgPrecond, Coarsening, Interpolation,
};
pub use interp::{interp_direct, interp_standard};
pub use smoother::{smooth, Smoother, SmootherConfig, SmootherKind};
pub use strength::{strength, strength_with, StrengthGraph, StrengthRule};
