//! Shared fixtures for the criterion benches.

use ambiguity_auction::{efficient_profile, AmbiguityModel, InterimProfile, PayoffSchedule, ReferenceBelief};

pub fn uniform_profile(model: &AmbiguityModel, n: usize) -> InterimProfile {
    let belief = ReferenceBelief::uniform(0.0, 1.0).expect("valid support");
    efficient_profile(&belief, model, 0.0, n).expect("valid profile")
}

/// Linear payoff `θ' ↦ 1 − θ'` on an `n`-point uniform grid.
pub fn linear_schedule(n: usize) -> PayoffSchedule {
    let values = (0..n).map(|i| 1.0 - i as f64 / (n - 1) as f64).collect();
    PayoffSchedule::new(values, vec![1.0 / n as f64; n]).expect("valid schedule")
}
