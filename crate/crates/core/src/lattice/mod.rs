//! Randomly shifted rank-1 lattice rules: weights, CBC construction, point
//! generation, and the seeded random streams shared with the MC baseline.

pub mod cbc;
pub mod points;
pub mod rng;
pub mod weights;

pub use cbc::{cbc_construct, CbcOutcome, GaussianExpKernel, KernelProvider, ProductCubeKernel};
pub use points::{lattice_points, GeneratingVector};
pub use rng::{mc_point_into, mc_points, random_shifts, ShiftSet};
pub use weights::{
    build_weight_spec, check_p1_condition, lambda_star, regularize_p, rho, theta_for, zeta,
    P1Check, PodWeights, WeightSpec,
};
