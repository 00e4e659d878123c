//! Optimal auction transfers for two ambiguity-averse bidders.
//!
//! Bidders evaluate payoffs by their minimum expectation over a divergence ball
//! `{Q : D(Q || P) <= η}` around a reference belief `P`. Given an allocation
//! rule, the revenue-maximizing transfer can be taken win-lose dependent and
//! pinned down type by type from a two-variable linear program whose
//! utility constraint is the envelope `U(θ) = ∫ X^min`.
//!
//! Modules:
//! - [`model`]: type space, reference beliefs, ambiguity models, grids.
//! - [`divergence`]: divergences, extreme event probabilities, worst-case expectations.
//! - [`allocation`]: efficient allocation with a reserve and its interim curves.
//! - [`transfers`]: the interim program, optimal transfers, standard formats.
//! - [`analysis`]: IC/IR checks, revenue, envelope residuals, optimal reserve.

pub mod allocation;
pub mod analysis;
pub mod divergence;
pub mod error;
pub mod model;
mod numeric;
pub mod transfers;

pub use allocation::{envelope_integral, AllocationKind, AllocationRule, InterimProfile};
pub use analysis::{
    efficient_profile, endogenous_allocation, envelope_gaps, envelope_residual, feasibility_check,
    interim_worst_case_utility, mechanism_report, revenue, sosd_property_check, truthful_utilities,
    EndogenousResult, FeasibilityReport, MechanismReport, RevenueReport,
};
pub use divergence::{
    attaining_density, binary_divergence, discrete_divergence, max_probability, min_probability,
    worst_case_belief_for_event, worst_case_expectation, zero_probability_threshold,
    AttainingBelief, TwoLevelBelief, WorstCaseResult,
};
pub use error::{Error, Result};
pub use model::{
    discretize, integrate_curve, integrate_curve_with_breaks, AmbiguityModel, BeliefFamily,
    Divergence, PayoffSchedule, Phi, ReferenceBelief, TypeGrid, TypeSpace,
};
pub use transfers::{
    optimal_limited_premium, optimal_winner_favored, premium_threshold, solve_interim_lp,
    standard_format, ConstraintClass, Construction, Format, LpSolution, Mechanism, OptimalTransfer,
    SecondPrice, WinLoseTransfer,
};

/// Default number of grid nodes.
pub const DEFAULT_GRID: usize = 101;
