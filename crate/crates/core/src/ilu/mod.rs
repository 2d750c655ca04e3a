//! ILU(k) factorization, level-scheduled triangular solves, and the
//! restricted additive Schwarz preconditioner built from them.

mod numeric;
mod ras;
mod schedule;
mod symbolic;

pub use numeric::{ilu, ilu_factorize, IluFactors, IluOptions};
pub use ras::{ras_apply, RasIlu, RasLevel};
pub use schedule::{build_level_schedule, LevelSchedule, TriangularSide};
pub use symbolic::{ilu_symbolic, FillLevels};
