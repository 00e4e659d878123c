//! Feasibility, revenue and envelope diagnostics for mechanisms, the
//! second-order-dominance check on payoff schedules, and the optimal reserve
//! under contamination.

use rayon::prelude::*;
use serde::Serialize;

use crate::allocation::{envelope_integral, InterimProfile};
use crate::divergence::{max_probability, min_probability, worst_case_expectation};
use crate::error::{Error, Result};
use crate::model::{
    discretize, integrate_curve_with_breaks, AmbiguityModel, Divergence, PayoffSchedule,
    ReferenceBelief,
};
use crate::numeric::bisect_last_true;
use crate::transfers::{Mechanism, OptimalTransfer, SecondPrice};

/// Worst-case expected payoff of a bidder of type `theta` who reports `report`.
pub fn interim_worst_case_utility(mechanism: &Mechanism, theta: f64, report: f64) -> Result<f64> {
    let space = mechanism.profile().rule().belief().space();
    let theta = space.check(theta)?;
    let report = space.check(report)?;
    match mechanism {
        Mechanism::WinLose(t) => {
            let (tw, tl) = t.eval(report);
            let rule = t.profile().rule();
            let xmin = rule.min_win_probability(report);
            let x = rule.interim_win_probability(report)?;
            Ok(win_lose_utility(theta, tw, tl, xmin, || {
                max_probability(x, rule.ambiguity()).unwrap_or(x)
            }))
        }
        Mechanism::SecondPrice(s) => second_price_utility(s, theta, report),
    }
}

/// Payoff is `θ − t^w` on a win and `−t^l` on a loss; the worst case
/// minimizes the probability of the better outcome.
fn win_lose_utility(theta: f64, tw: f64, tl: f64, xmin: f64, xmax: impl FnOnce() -> f64) -> f64 {
    let high = theta - tw;
    let low = -tl;
    if high >= low {
        high * xmin + low * (1.0 - xmin)
    } else {
        let xmax = xmax();
        high * xmax + low * (1.0 - xmax)
    }
}

fn second_price_utility(s: &SecondPrice, theta: f64, report: f64) -> Result<f64> {
    let model = s.profile().rule().ambiguity();
    if let Divergence::CustomPhi(phi) = model.divergence() {
        return Err(Error::Unsupported(format!(
            "second-price worst case under phi '{}' is not supported",
            phi.name()
        )));
    }
    let schedule = s.competitor_schedule(theta, report)?;
    Ok(worst_case_expectation(&schedule, model)?.value)
}

/// Node-level utility tables for fast grid sweeps.
struct UtilityTable<'a> {
    mechanism: &'a Mechanism,
    tw: Vec<f64>,
    tl: Vec<f64>,
}

impl<'a> UtilityTable<'a> {
    fn new(mechanism: &'a Mechanism) -> Self {
        match mechanism {
            Mechanism::WinLose(t) => {
                let tab = t.tabulate();
                Self {
                    mechanism,
                    tw: tab.tw,
                    tl: tab.tl,
                }
            }
            Mechanism::SecondPrice(_) => Self {
                mechanism,
                tw: Vec::new(),
                tl: Vec::new(),
            },
        }
    }

    fn utility(&self, i: usize, j: usize) -> Result<f64> {
        let profile = self.mechanism.profile();
        let nodes = profile.nodes();
        match self.mechanism {
            Mechanism::WinLose(_) => Ok(win_lose_utility(
                nodes[i],
                self.tw[j],
                self.tl[j],
                profile.xmin()[j],
                || profile.xmax()[j],
            )),
            Mechanism::SecondPrice(s) => second_price_utility(s, nodes[i], nodes[j]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    /// `max (U(θ; θ̂) − U(θ; θ))⁺` over grid pairs.
    pub max_ic_violation: f64,
    /// `max (−U(θ; θ))⁺` over grid nodes.
    pub max_ir_violation: f64,
    /// `(θ, θ̂)` attaining the IC maximum when positive.
    pub ic_location: Option<(f64, f64)>,
    pub ir_location: Option<f64>,
}

/// Checks incentive compatibility and individual rationality with types and
/// reports restricted to the mechanism's grid.
pub fn feasibility_check(mechanism: &Mechanism) -> Result<FeasibilityReport> {
    let table = UtilityTable::new(mechanism);
    let nodes = mechanism.profile().nodes();
    let n = nodes.len();
    let rows: Vec<(f64, usize, f64)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<(f64, usize, f64)> {
            let truthful = table.utility(i, i)?;
            let mut worst = (0.0, i);
            for j in 0..n {
                if j == i {
                    continue;
                }
                let gain = table.utility(i, j)? - truthful;
                if gain > worst.0 {
                    worst = (gain, j);
                }
            }
            Ok((worst.0, worst.1, truthful))
        })
        .collect::<Result<_>>()?;

    let mut report = FeasibilityReport {
        max_ic_violation: 0.0,
        max_ir_violation: 0.0,
        ic_location: None,
        ir_location: None,
    };
    for (i, &(gain, j, truthful)) in rows.iter().enumerate() {
        if gain > report.max_ic_violation {
            report.max_ic_violation = gain;
            report.ic_location = Some((nodes[i], nodes[j]));
        }
        if -truthful > report.max_ir_violation {
            report.max_ir_violation = -truthful;
            report.ir_location = Some(nodes[i]);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RevenueReport {
    /// `T(θ)` at each grid node.
    pub interim: Vec<f64>,
    /// `2 ∫ T dP` for the two symmetric bidders.
    pub ex_ante: f64,
}

fn win_lose_interim_revenue(t: &OptimalTransfer, theta: f64) -> f64 {
    let (tw, tl) = t.eval(theta);
    let x = t.profile().rule().interim_win_probability(theta).unwrap_or(0.0);
    tw * x + tl * (1.0 - x)
}

fn second_price_interim_revenue(s: &SecondPrice, theta: f64) -> Result<f64> {
    let rule = s.profile().rule();
    if theta < rule.reserve() {
        return Ok(0.0);
    }
    let belief = rule.belief();
    let reserve = rule.reserve();
    integrate_curve_with_breaks(
        s.profile().grid(),
        |z| z.max(reserve) * belief.pdf(z),
        theta,
        s.profile().breakpoints(),
    )
}

/// Interim revenue at the grid nodes and ex-ante revenue under the reference belief.
pub fn revenue(mechanism: &Mechanism) -> Result<RevenueReport> {
    let profile = mechanism.profile();
    let rule = profile.rule();
    let belief = rule.belief();
    let grid = profile.grid();
    let mut breaks = profile.breakpoints().to_vec();
    match mechanism {
        Mechanism::WinLose(t) => {
            if let Some(threshold) = t.threshold() {
                breaks.push(threshold);
            }
            let interim = profile
                .nodes()
                .iter()
                .map(|&theta| win_lose_interim_revenue(t, theta))
                .collect();
            let per_bidder = integrate_curve_with_breaks(
                grid,
                |theta| win_lose_interim_revenue(t, theta) * belief.pdf(theta),
                rule.hi(),
                &breaks,
            )?;
            Ok(RevenueReport {
                interim,
                ex_ante: 2.0 * per_bidder,
            })
        }
        Mechanism::SecondPrice(s) => {
            let interim = profile
                .nodes()
                .iter()
                .map(|&theta| second_price_interim_revenue(s, theta))
                .collect::<Result<_>>()?;
            // Swapping the order of integration: a competitor of type z is
            // charged max(z, r) whenever the other type exceeds max(z, r).
            let reserve = rule.reserve();
            let per_bidder = integrate_curve_with_breaks(
                grid,
                |z| {
                    let price = z.max(reserve);
                    price * (1.0 - belief.cdf(price)) * belief.pdf(z)
                },
                rule.hi(),
                &breaks,
            )?;
            Ok(RevenueReport {
                interim,
                ex_ante: 2.0 * per_bidder,
            })
        }
    }
}

/// `U(θ; θ) − ∫_{lo}^{θ} X^min` at every grid node.
pub fn envelope_gaps(mechanism: &Mechanism) -> Result<Vec<f64>> {
    let profile = mechanism.profile();
    let table = UtilityTable::new(mechanism);
    (0..profile.nodes().len())
        .into_par_iter()
        .map(|i| {
            let env = envelope_integral(profile.rule(), profile.grid(), profile.nodes()[i])?;
            Ok(table.utility(i, i)? - env)
        })
        .collect()
}

/// `max_θ |U(θ; θ) − ∫_{lo}^{θ} X^min|` over the grid.
pub fn envelope_residual(mechanism: &Mechanism) -> Result<f64> {
    Ok(envelope_gaps(mechanism)?
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MechanismReport {
    pub ex_ante_revenue: f64,
    pub interim_revenue: Vec<f64>,
    pub max_ic_violation: f64,
    pub max_ir_violation: f64,
    pub max_envelope_residual: f64,
    pub ic_location: Option<(f64, f64)>,
    pub ir_location: Option<f64>,
}

pub fn mechanism_report(mechanism: &Mechanism) -> Result<MechanismReport> {
    let rev = revenue(mechanism)?;
    let feas = feasibility_check(mechanism)?;
    Ok(MechanismReport {
        ex_ante_revenue: rev.ex_ante,
        interim_revenue: rev.interim,
        max_ic_violation: feas.max_ic_violation,
        max_ir_violation: feas.max_ir_violation,
        max_envelope_residual: envelope_residual(mechanism)?,
        ic_location: feas.ic_location,
        ir_location: feas.ir_location,
    })
}

/// Profile-free helper: the interim profile's truthful utility at each node.
pub fn truthful_utilities(mechanism: &Mechanism) -> Result<Vec<f64>> {
    let table = UtilityTable::new(mechanism);
    (0..mechanism.profile().nodes().len())
        .map(|i| table.utility(i, i))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EndogenousResult {
    pub nodes: Vec<f64>,
    /// `θ − (1 − F(θ)) / f(θ)` at each node.
    pub virtual_value: Vec<f64>,
    /// `r* = sup { θ : virtual value <= 0 }`.
    pub reserve: f64,
    /// Reserve bid of the all-pay auction implementing the same allocation.
    pub apa_reserve: f64,
}

fn virtual_value(belief: &ReferenceBelief, theta: f64) -> f64 {
    let survival = 1.0 - belief.cdf(theta);
    if survival <= 0.0 {
        return theta;
    }
    let density = belief.pdf(theta);
    if density <= 0.0 {
        return f64::NEG_INFINITY;
    }
    theta - survival / density
}

/// Optimal efficient-with-reserve allocation under contamination, with the
/// virtual-value curve tabulated on an `n`-node grid.
pub fn endogenous_allocation(
    belief: &ReferenceBelief,
    ambiguity: &AmbiguityModel,
    n: usize,
) -> Result<EndogenousResult> {
    if !ambiguity.is_contamination() {
        return Err(Error::Unsupported(format!(
            "endogenous allocation requires the contamination divergence, got {}",
            ambiguity.divergence().label()
        )));
    }
    let grid = discretize(belief, n)?;
    let nodes = grid.nodes().to_vec();
    for &theta in &nodes[1..nodes.len() - 1] {
        if belief.pdf(theta) <= 0.0 {
            return Err(Error::Regularity(format!("density vanishes at interior type {theta}")));
        }
    }
    let psi: Vec<f64> = nodes.iter().map(|&t| virtual_value(belief, t)).collect();
    for (k, w) in psi.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Regularity(format!(
                "virtual value is not strictly increasing between {} and {} ({} then {}); ironing is not supported",
                nodes[k],
                nodes[k + 1],
                w[0],
                w[1]
            )));
        }
    }
    let (lo, hi) = (belief.lo(), belief.hi());
    let nonpositive = |t: f64| virtual_value(belief, t) <= 0.0;
    // An empty set {ψ <= 0} leaves the reserve at the bottom of the support.
    let reserve = if nonpositive(lo) {
        bisect_last_true(nonpositive, lo, hi, 0.0)
    } else {
        lo
    };
    let mass = belief.cdf(reserve);
    let apa_reserve = if mass < 1.0 {
        (1.0 - ambiguity.eta()) * reserve * mass
    } else {
        reserve * min_probability(mass, ambiguity)?
    };
    Ok(EndogenousResult {
        nodes,
        virtual_value: psi,
        reserve,
        apa_reserve,
    })
}

/// Whether replacing `pi` by its conditional mean on the partition given by
/// `labels` weakly raises the worst-case expectation (within 1e-9).
pub fn sosd_property_check(pi: &PayoffSchedule, labels: &[usize], model: &AmbiguityModel) -> Result<bool> {
    let coarse = pi.conditional_mean(labels)?;
    let fine = worst_case_expectation(pi, model)?.value;
    let smoothed = worst_case_expectation(&coarse, model)?.value;
    Ok(smoothed >= fine - 1e-9)
}

/// Convenience: interim profile of an efficient rule on an `n`-node grid.
pub fn efficient_profile(
    belief: &ReferenceBelief,
    ambiguity: &AmbiguityModel,
    reserve: f64,
    n: usize,
) -> Result<InterimProfile> {
    let rule = crate::allocation::AllocationRule::efficient(belief.clone(), ambiguity.clone(), reserve)?;
    InterimProfile::new(rule, discretize(belief, n)?)
}
