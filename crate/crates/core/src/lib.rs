//! Radio-resource optimizer for a full-duplex integrated sensing and
//! communication base station: joint timeslot allocation and transmit/receive
//! beam selection under imperfect self-interference cancellation, solved to
//! certified global optimality.
//!
//! The nonlinear scheduling problem (per-slot communication/sensing flags,
//! one-hot beam choices, worst-case sensing SINR over a bounded residual-SI
//! interval) is linearized exactly into a MILP. Three solvers share the same
//! coefficient tables: a structured closed form, a branch-and-bound over the
//! MILP, and an exhaustive enumeration used as the oracle.

pub mod beams;
pub mod channels;
pub mod config;
pub mod linalg;
pub mod metrics;
pub mod milp;
pub mod runner;
pub mod solver;

pub use beams::{build_codebook, make_codeword, steering_vector, ArrayGeometry, Codebook, Codeword};
pub use channels::{
    rician_channel, residual_si, sensing_outer, si_channel, uma_pathloss_db, ChannelSet,
    CommChannelParams, SensingParams, SiUncertainty,
};
pub use config::{parse_config, ScenarioConfig, ScenarioId};
pub use metrics::{
    comm_rate_bits, evaluate_schedule, robust_sinr_feasible, sensing_sinr, ScheduleEvaluation,
    SlotAssignment,
};
pub use milp::{assignment_to_point, build_milp, export_lp, precompute, CoefficientTable, MilpModel};
pub use runner::{emit_csv, run, run_nonrobust_comparison, ResultRow};
pub use solver::{certify, solve_branch_bound, solve_bruteforce, solve_structured, Solution};
