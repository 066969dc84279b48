//! Momentum maps with integrating factors, Noether drift, reduction by
//! invariant functions and the pointwise reducibility condition.

mod momentum;
mod reducibility;
mod reduction;

pub use momentum::{
    invariance_residual, momentum_map_check, noether_drift, solve_factor, ActionSpec, GroupAction,
    MomentumMapSpec, INVARIANCE_TOL,
};
pub use reducibility::{pointwise_reducibility, SubspacePair, DEFAULT_REDUCIBILITY_TOL};
pub use reduction::{reduce_by_invariants, welldefinedness_check, InvariantReduction, SECTION_TOL};
