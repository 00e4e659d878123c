//! Divergences, extreme event probabilities over the divergence ball, and
//! worst-case expectations of payoff schedules.
//!
//! The minimum probability of an event `E` with `P(E) = p` only depends on
//! `p`: the minimizing belief has a density that is constant on `E` and on its
//! complement, so the problem reduces to a Bernoulli pair `(q, p)`.
//!
//! For general payoff schedules the relative-entropy worst case is computed
//! from the one-dimensional dual
//!
//! ```text
//! inf_Q { E_Q[π] : KL(Q || P) <= η } = sup_{λ > 0} -λ log E_P[exp(-π/λ)] - λη
//! ```
//!
//! When `η >= -log P(argmin π)` the supremum is reached as `λ -> 0` and the
//! worst case is the essential infimum of `π`; that branch is returned in
//! closed form.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{AmbiguityModel, Divergence, PayoffSchedule, Phi};
use crate::numeric::{bisect_first_true, bisect_last_true, golden_section_max};

const PROBABILITY_TOL: f64 = 1e-12;
const LOG_LAMBDA_MIN: f64 = -18.420_680_743_952_367; // ln 1e-8
const LOG_LAMBDA_MAX: f64 = 13.815_510_557_964_274; // ln 1e6
const LOG_LAMBDA_TOL: f64 = 1e-10;

/// `x log(x / y)` with the `0 log 0 = 0` convention.
fn xlogx_over(x: f64, y: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * (x / y).ln()
    }
}

/// Divergence between Bernoulli(`q`) and Bernoulli(`p`).
pub fn binary_divergence(q: f64, p: f64, model: &AmbiguityModel) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DegenerateEvent(p));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!("q must lie in [0, 1], got {q}")));
    }
    Ok(binary_divergence_unchecked(q, p, model.divergence()))
}

fn binary_divergence_unchecked(q: f64, p: f64, divergence: &Divergence) -> f64 {
    match divergence {
        Divergence::RelativeEntropy => xlogx_over(q, p) + xlogx_over(1.0 - q, 1.0 - p),
        Divergence::Contamination => (1.0 - q / p).max(1.0 - (1.0 - q) / (1.0 - p)),
        Divergence::CustomPhi(phi) => {
            p * phi.eval(q / p) + (1.0 - p) * phi.eval((1.0 - q) / (1.0 - p))
        }
    }
}

/// Divergence `D(Q || P)` between two distributions on the same finite set.
/// Returns `+inf` when `Q` is not absolutely continuous with respect to `P`.
pub fn discrete_divergence(q: &[f64], p: &[f64], model: &AmbiguityModel) -> Result<f64> {
    if q.len() != p.len() || q.is_empty() {
        return Err(Error::InvalidInput("distributions must have equal non-zero length".into()));
    }
    for dist in [q, p] {
        if dist.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::InvalidInput("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = dist.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}, not 1")));
        }
    }
    if q.iter().zip(p).any(|(&qi, &pi)| qi > 0.0 && pi == 0.0) {
        return Ok(f64::INFINITY);
    }
    let pairs = q.iter().zip(p).filter(|(_, &pi)| pi > 0.0);
    Ok(match model.divergence() {
        Divergence::RelativeEntropy => pairs.map(|(&qi, &pi)| xlogx_over(qi, pi)).sum(),
        Divergence::Contamination => pairs
            .map(|(&qi, &pi)| 1.0 - qi / pi)
            .fold(f64::NEG_INFINITY, f64::max),
        Divergence::CustomPhi(phi) => pairs.map(|(&qi, &pi)| pi * phi.eval(qi / pi)).sum(),
    })
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!("probability must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// Least probability the divergence ball assigns to an event of reference mass `p`.
pub fn min_probability(p: f64, model: &AmbiguityModel) -> Result<f64> {
    check_probability(p)?;
    let eta = model.eta();
    if p == 0.0 || p == 1.0 || eta == 0.0 {
        return Ok(p);
    }
    match model.divergence() {
        Divergence::Contamination => Ok((1.0 - eta) * p),
        divergence => {
            let within = |q: f64| binary_divergence_unchecked(q, p, divergence) <= eta;
            Ok(bisect_first_true(within, 0.0, p, PROBABILITY_TOL))
        }
    }
}

/// Greatest probability the divergence ball assigns to an event of reference mass `p`.
pub fn max_probability(p: f64, model: &AmbiguityModel) -> Result<f64> {
    check_probability(p)?;
    let eta = model.eta();
    if p == 0.0 || p == 1.0 || eta == 0.0 {
        return Ok(p);
    }
    match model.divergence() {
        Divergence::Contamination => Ok(((1.0 - eta) * p + eta).min(1.0)),
        divergence => {
            let within = |q: f64| binary_divergence_unchecked(q, p, divergence) <= eta;
            Ok(bisect_last_true(within, p, 1.0, PROBABILITY_TOL))
        }
    }
}

/// Largest reference mass `p` whose event can be driven to probability zero,
/// i.e. `sup { p : min_probability(p) = 0 }`.
pub fn zero_probability_threshold(model: &AmbiguityModel) -> f64 {
    let eta = model.eta();
    if eta == 0.0 {
        return 0.0;
    }
    match model.divergence() {
        Divergence::Contamination => 0.0,
        Divergence::RelativeEntropy => 1.0 - (-eta).exp(),
        divergence => {
            let vanishes = |p: f64| {
                p <= 0.0 || (p < 1.0 && binary_divergence_unchecked(0.0, p, divergence) <= eta)
            };
            bisect_last_true(vanishes, 0.0, 1.0, 1e-14)
        }
    }
}

/// Belief whose density relative to the reference is `on_event_level` on an
/// event and `off_event_level` on its complement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoLevelBelief {
    pub event_mass: f64,
    pub reference_event_mass: f64,
    pub on_event_level: f64,
    pub off_event_level: f64,
}

impl TwoLevelBelief {
    pub fn new(event_mass: f64, reference_event_mass: f64) -> Result<Self> {
        let p = reference_event_mass;
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::DegenerateEvent(p));
        }
        check_probability(event_mass)?;
        Ok(Self {
            event_mass,
            reference_event_mass: p,
            on_event_level: event_mass / p,
            off_event_level: (1.0 - event_mass) / (1.0 - p),
        })
    }

    pub fn divergence(&self, model: &AmbiguityModel) -> f64 {
        binary_divergence_unchecked(self.event_mass, self.reference_event_mass, model.divergence())
    }
}

/// Worst-case belief for an event of reference mass `p`: the two-level density
/// that minimizes the event probability inside the ball.
pub fn worst_case_belief_for_event(p: f64, model: &AmbiguityModel) -> Result<TwoLevelBelief> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DegenerateEvent(p));
    }
    TwoLevelBelief::new(min_probability(p, model)?, p)
}

/// Belief attaining a worst-case expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AttainingBelief {
    TwoLevel(TwoLevelBelief),
    /// Density `dQ/dP` at each schedule node.
    Discrete(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCaseResult {
    pub value: f64,
    pub belief: AttainingBelief,
    /// Dual multiplier of the divergence constraint (relative entropy only).
    pub multiplier: Option<f64>,
}

/// `inf_Q { E_Q[π] : D(Q || P) <= η }` for a payoff schedule on a finite grid.
pub fn worst_case_expectation(pi: &PayoffSchedule, model: &AmbiguityModel) -> Result<WorstCaseResult> {
    let values = pi.values();
    let probs = pi.probabilities();
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("payoff entries must be finite, got {bad}")));
    }
    let eta = model.eta();
    let support = || values.iter().zip(probs).filter(|(_, &p)| p > 0.0);
    let low = support().map(|(&v, _)| v).fold(f64::INFINITY, f64::min);
    let high = support().map(|(&v, _)| v).fold(f64::NEG_INFINITY, f64::max);
    let mean = pi.reference_mean();
    let ones = || AttainingBelief::Discrete(vec![1.0; values.len()]);

    if high == low {
        return Ok(WorstCaseResult {
            value: low,
            belief: ones(),
            multiplier: None,
        });
    }
    if eta == 0.0 {
        return Ok(WorstCaseResult {
            value: mean,
            belief: ones(),
            multiplier: None,
        });
    }

    let at_low = |v: f64, p: f64| p > 0.0 && v == low;
    let low_mass: f64 = support().filter(|(&v, _)| v == low).map(|(_, &p)| p).sum();

    match model.divergence() {
        Divergence::Contamination => {
            let density = values
                .iter()
                .zip(probs)
                .map(|(&v, &p)| (1.0 - eta) + if at_low(v, p) { eta / low_mass } else { 0.0 })
                .collect();
            Ok(WorstCaseResult {
                value: (1.0 - eta) * mean + eta * low,
                belief: AttainingBelief::Discrete(density),
                multiplier: None,
            })
        }
        Divergence::RelativeEntropy => {
            if eta >= -low_mass.ln() {
                let density = values
                    .iter()
                    .zip(probs)
                    .map(|(&v, &p)| if at_low(v, p) { 1.0 / low_mass } else { 0.0 })
                    .collect();
                return Ok(WorstCaseResult {
                    value: low,
                    belief: AttainingBelief::Discrete(density),
                    multiplier: Some(0.0),
                });
            }
            let dual = |log_lambda: f64| {
                let lambda = log_lambda.exp();
                let z: f64 = support()
                    .map(|(&v, &p)| p * (-(v - low) / lambda).exp())
                    .sum();
                low - lambda * z.ln() - lambda * eta
            };
            let (log_lambda, _) =
                golden_section_max(dual, LOG_LAMBDA_MIN, LOG_LAMBDA_MAX, LOG_LAMBDA_TOL);
            // The dual is flat at its maximum, so the golden-section argmax is
            // only accurate to ~sqrt(eps). Polish it on the stationarity
            // condition KL(Q_λ || P) = η, keeping the feasible side.
            let excess = |log_lambda: f64| {
                let lambda = log_lambda.exp();
                let z: f64 = support()
                    .map(|(&v, &p)| p * (-(v - low) / lambda).exp())
                    .sum();
                let mean_shift: f64 = support()
                    .map(|(&v, &p)| p * (-(v - low) / lambda).exp() * (v - low))
                    .sum::<f64>()
                    / z;
                -mean_shift / lambda - z.ln() - eta
            };
            let (a, b) = (
                (log_lambda - 1e-4).max(LOG_LAMBDA_MIN),
                (log_lambda + 1e-4).min(LOG_LAMBDA_MAX),
            );
            let log_lambda = if excess(a) > 0.0 && excess(b) <= 0.0 {
                bisect_first_true(|t| excess(t) <= 0.0, a, b, 1e-15)
            } else {
                log_lambda
            };
            let value = dual(log_lambda);
            let lambda = log_lambda.exp();
            let tilt: Vec<f64> = values
                .iter()
                .zip(probs)
                .map(|(&v, &p)| if p > 0.0 { (-(v - low) / lambda).exp() } else { 0.0 })
                .collect();
            let z: f64 = tilt.iter().zip(probs).map(|(t, p)| t * p).sum();
            Ok(WorstCaseResult {
                value,
                belief: AttainingBelief::Discrete(tilt.into_iter().map(|t| t / z).collect()),
                multiplier: Some(lambda),
            })
        }
        Divergence::CustomPhi(phi) => two_valued_worst_case(values, probs, low, high, model, phi),
    }
}

fn two_valued_worst_case(
    values: &[f64],
    probs: &[f64],
    low: f64,
    high: f64,
    model: &AmbiguityModel,
    phi: &Phi,
) -> Result<WorstCaseResult> {
    let distinct_inner = values
        .iter()
        .zip(probs)
        .any(|(&v, &p)| p > 0.0 && v != low && v != high);
    if distinct_inner {
        return Err(Error::Unsupported(format!(
            "worst-case expectation under phi '{}' needs a two-valued payoff schedule",
            phi.name()
        )));
    }
    let high_mass: f64 = values
        .iter()
        .zip(probs)
        .filter(|(&v, &p)| p > 0.0 && v == high)
        .map(|(_, &p)| p)
        .sum::<f64>()
        .clamp(0.0, 1.0);
    let q = min_probability(high_mass, model)?;
    let belief = TwoLevelBelief::new(q, high_mass)?;
    Ok(WorstCaseResult {
        value: high * q + low * (1.0 - q),
        belief: AttainingBelief::TwoLevel(belief),
        multiplier: None,
    })
}

/// Density of the attaining belief at each schedule node.
pub fn attaining_density(result: &WorstCaseResult, pi: &PayoffSchedule) -> Vec<f64> {
    match &result.belief {
        AttainingBelief::Discrete(d) => d.clone(),
        AttainingBelief::TwoLevel(b) => {
            let high = pi
                .values()
                .iter()
                .zip(pi.probabilities())
                .filter(|(_, &p)| p > 0.0)
                .map(|(&v, _)| v)
                .fold(f64::NEG_INFINITY, f64::max);
            pi.values()
                .iter()
                .map(|&v| if v == high { b.on_event_level } else { b.off_event_level })
                .collect()
        }
    }
}
