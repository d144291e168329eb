//! Classical stochastic processes driving surrogate-field Hamiltonians:
//! exact joint statistics and seeded trajectory sampling.

mod cumulants;
mod process;

pub use cumulants::{cumulant, cumulants_up_to_4, MomentFn};
pub use process::{
    rtn_joint, rtn_moment, sample_asym, sample_gauss_sum, sample_rtn, AsymTelegraphSpec,
    GaussSumSpec, ProcessSpec, RtnSpec, Trajectory,
};
