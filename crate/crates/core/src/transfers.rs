//! Win-lose dependent transfers: the interim two-dimensional program, the
//! closed-form optimal transfers for the limited-premium and winner-favored
//! classes, and the standard auction formats built on them.

use std::fmt;

use serde::Serialize;

use crate::allocation::InterimProfile;
use crate::error::{Error, Result};
use crate::model::PayoffSchedule;
use crate::numeric::{bisect_last_true, gauss_legendre_split};

/// Transfer class `α t(θ, θ_win) − β t(θ, θ_lose) <= K` with `0 <= α <= β <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstraintClass {
    pub alpha: f64,
    pub beta: f64,
    pub cap: f64,
}

impl ConstraintClass {
    pub fn new(alpha: f64, beta: f64, cap: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&beta) || alpha > beta {
            return Err(Error::InvalidInput(format!(
                "constraint class needs 0 <= alpha <= beta <= 1, got ({alpha}, {beta})"
            )));
        }
        if cap.is_nan() || cap < 0.0 {
            return Err(Error::InvalidInput(format!("cap must be >= 0, got {cap}")));
        }
        Ok(Self { alpha, beta, cap })
    }

    /// Losers receive at most `cap`.
    pub fn limited_premium(cap: f64) -> Result<Self> {
        Self::new(0.0, 1.0, cap)
    }

    /// Winners pay no more than losers.
    pub fn winner_favored() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            cap: 0.0,
        }
    }

    pub fn unconstrained() -> Self {
        Self {
            alpha: 0.0,
            beta: 0.0,
            cap: 0.0,
        }
    }
}

/// Optimal winning and losing payoffs of one type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpSolution {
    /// Winning payoff `θ − t^w`.
    pub w: f64,
    /// Losing payoff `−t^l`.
    pub l: f64,
    /// Bidder's expected payoff under the reference belief, `w X + l (1 − X)`.
    pub objective: f64,
}

/// Minimizes the bidder's share of surplus `w X + l (1 − X)` subject to
/// `w >= l`, `w X^min + l (1 − X^min) = U0` and `α(θ − w) + β l <= K`.
///
/// The feasible set is a ray on the line of the utility constraint. Writing
/// `d = w − l`, the objective is `U0 + d (X − X^min)`, so the optimum is the
/// feasible vertex with the smallest gap between winning and losing payoffs.
pub fn solve_interim_lp(
    x: f64,
    xmin: f64,
    theta: f64,
    u0: f64,
    class: &ConstraintClass,
) -> Result<LpSolution> {
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&xmin) || xmin > x + 1e-15 {
        return Err(Error::InvalidInput(format!(
            "interim program needs 0 <= X^min <= X <= 1, got X = {x}, X^min = {xmin}"
        )));
    }
    if !(u0.is_finite() && u0 >= 0.0) || !theta.is_finite() {
        return Err(Error::InvalidInput(format!(
            "interim program needs finite theta and U0 >= 0, got theta = {theta}, U0 = {u0}"
        )));
    }
    let ConstraintClass { alpha, beta, cap } = *class;
    // Constraint (iii) along the ray reads  d * slope >= rhs.
    let slope = alpha * (1.0 - xmin) + beta * xmin;
    let rhs = alpha * theta + (beta - alpha) * u0 - cap;
    let tol = 1e-12 * (1.0 + theta.abs() + u0);

    let mut vertices = Vec::with_capacity(2);
    // Full-insurance vertex on the 45-degree line.
    if rhs <= tol {
        vertices.push(0.0);
    }
    if slope > 0.0 {
        let d = rhs / slope;
        if d >= 0.0 {
            vertices.push(d);
        }
    }
    let gap = vertices
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    if !gap.is_finite() {
        return Err(Error::Infeasible(format!(
            "no (w, l) satisfies the class constraint at theta = {theta} (U0 = {u0}, X^min = {xmin})"
        )));
    }
    let w = u0 + gap * (1.0 - xmin);
    let l = u0 - gap * xmin;
    Ok(LpSolution {
        w,
        l,
        objective: w * x + l * (1.0 - x),
    })
}

/// Winning and losing transfers tabulated on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WinLoseTransfer {
    pub nodes: Vec<f64>,
    pub tw: Vec<f64>,
    pub tl: Vec<f64>,
    /// Threshold type above which the loser premium is capped.
    pub threshold: Option<f64>,
}

impl WinLoseTransfer {
    pub fn winning_payoffs(&self) -> Vec<f64> {
        self.nodes.iter().zip(&self.tw).map(|(t, w)| t - w).collect()
    }

    pub fn losing_payoffs(&self) -> Vec<f64> {
        self.tl.iter().map(|l| -l).collect()
    }

    /// Largest violation of `θ − t^w(θ) >= −t^l(θ)` over the nodes (0 if none).
    pub fn win_lose_violation(&self) -> f64 {
        self.nodes
            .iter()
            .zip(self.tw.iter().zip(&self.tl))
            .map(|(t, (w, l))| (-l - (t - w)).max(0.0))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Construction {
    LimitedPremium { cap: f64, threshold: f64 },
    WinnerFavored,
}

/// Closed-form optimal win-lose transfer for an interim profile. Evaluates at
/// any type, not only at grid nodes.
#[derive(Debug, Clone)]
pub struct OptimalTransfer {
    profile: InterimProfile,
    construction: Construction,
}

impl OptimalTransfer {
    pub fn profile(&self) -> &InterimProfile {
        &self.profile
    }

    pub fn construction(&self) -> Construction {
        self.construction
    }

    pub fn threshold(&self) -> Option<f64> {
        match self.construction {
            Construction::LimitedPremium { threshold, .. } => Some(threshold),
            Construction::WinnerFavored => None,
        }
    }

    pub fn class(&self) -> ConstraintClass {
        match self.construction {
            Construction::LimitedPremium { cap, .. } => ConstraintClass {
                alpha: 0.0,
                beta: 1.0,
                cap,
            },
            Construction::WinnerFavored => ConstraintClass::winner_favored(),
        }
    }

    /// `(t^w(θ), t^l(θ))`.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        let cum = self.profile.cum_xmin_at(theta);
        let xmin = self.profile.rule().min_win_probability(theta);
        self.split(theta, cum, xmin)
    }

    fn split(&self, theta: f64, cum: f64, xmin: f64) -> (f64, f64) {
        match self.construction {
            Construction::LimitedPremium { cap, .. } => {
                // Types at or below the threshold are fully insured.
                if cum <= cap || xmin <= 0.0 {
                    (theta - cum, -cum)
                } else {
                    (theta - cap - (cum - cap) / xmin, -cap)
                }
            }
            Construction::WinnerFavored => {
                let t = theta * xmin - cum;
                (t, t)
            }
        }
    }

    pub fn tabulate(&self) -> WinLoseTransfer {
        let p = &self.profile;
        let (tw, tl) = p
            .nodes()
            .iter()
            .zip(p.cum_xmin().iter().zip(p.xmin()))
            .map(|(&theta, (&cum, &xmin))| self.split(theta, cum, xmin))
            .unzip();
        WinLoseTransfer {
            nodes: p.nodes().to_vec(),
            tw,
            tl,
            threshold: self.threshold(),
        }
    }
}

/// `sup { θ : ∫_{lo}^{θ} X^min <= K }`.
pub fn premium_threshold(profile: &InterimProfile, cap: f64) -> f64 {
    let (lo, hi) = (profile.rule().lo(), profile.rule().hi());
    if profile.full_insurance_cap() <= cap {
        return hi;
    }
    bisect_last_true(|t| profile.cum_xmin_at(t) <= cap, lo, hi, 1e-14 * (hi - lo).max(1.0))
}

/// Revenue-maximizing transfer among mechanisms whose loser premium is at most `cap`.
pub fn optimal_limited_premium(profile: &InterimProfile, cap: f64) -> Result<OptimalTransfer> {
    ConstraintClass::limited_premium(cap)?;
    let threshold = premium_threshold(profile, cap);
    Ok(OptimalTransfer {
        profile: profile.clone(),
        construction: Construction::LimitedPremium { cap, threshold },
    })
}

/// Revenue-maximizing winner-favored transfer: `t^w = t^l = θ X^min(θ) − ∫ X^min`.
pub fn optimal_winner_favored(profile: &InterimProfile) -> OptimalTransfer {
    OptimalTransfer {
        profile: profile.clone(),
        construction: Construction::WinnerFavored,
    }
}

/// Second-price auction: the winner pays the larger of the competitor's type
/// and the reserve; losers pay nothing.
#[derive(Debug, Clone)]
pub struct SecondPrice {
    profile: InterimProfile,
    cells: Vec<PriceCell>,
}

/// Competitor types in one grid cell: reference mass and conditional mean price.
#[derive(Debug, Clone, Copy)]
struct PriceCell {
    lo: f64,
    hi: f64,
    mass: f64,
    mean_price: f64,
}

impl SecondPrice {
    pub fn new(profile: &InterimProfile) -> Self {
        let cells = profile
            .nodes()
            .windows(2)
            .map(|w| price_cell(profile, w[0], w[1]))
            .collect();
        Self {
            profile: profile.clone(),
            cells,
        }
    }

    pub fn profile(&self) -> &InterimProfile {
        &self.profile
    }

    /// Transfer `t(report, competitor)`.
    pub fn transfer(&self, report: f64, competitor: f64) -> f64 {
        let price = competitor.max(self.profile.rule().reserve());
        self.profile.rule().allocation(report, competitor) * price
    }

    /// Payoff of type `theta` reporting `report`, conditioned on the grid cell
    /// of the competitor's type (cells are split at an off-grid report).
    ///
    /// The win event `{competitor < report}` is a union of cells, so each cell
    /// value is the reference-conditional mean of the exact payoff.
    pub fn competitor_schedule(&self, theta: f64, report: f64) -> Result<PayoffSchedule> {
        let wins = report >= self.profile.rule().reserve();
        let mut values = Vec::with_capacity(self.cells.len() + 1);
        let mut masses = Vec::with_capacity(self.cells.len() + 1);
        let mut push = |cell: PriceCell| {
            let won = wins && cell.hi <= report;
            values.push(if won { theta - cell.mean_price } else { 0.0 });
            masses.push(cell.mass);
        };
        for &cell in &self.cells {
            if report > cell.lo && report < cell.hi {
                push(price_cell(&self.profile, cell.lo, report));
                push(price_cell(&self.profile, report, cell.hi));
            } else {
                push(cell);
            }
        }
        PayoffSchedule::new(values, masses)
    }
}

fn price_cell(profile: &InterimProfile, lo: f64, hi: f64) -> PriceCell {
    let rule = profile.rule();
    let belief = rule.belief();
    let reserve = rule.reserve();
    let mass = belief.cdf(hi) - belief.cdf(lo);
    let mean_price = if mass > 0.0 {
        let weighted = gauss_legendre_split(
            &|z: f64| z.max(reserve) * belief.pdf(z),
            lo,
            hi,
            profile.breakpoints(),
        );
        weighted / mass
    } else {
        (0.5 * (lo + hi)).max(reserve)
    };
    PriceCell {
        lo,
        hi,
        mass,
        mean_price,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Format {
    FirstPrice,
    AllPay,
    FullInsurance,
    SecondPrice,
    OptimalHybrid(f64),
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Format::FirstPrice => write!(f, "FPA"),
            Format::AllPay => write!(f, "APA"),
            Format::FullInsurance => write!(f, "FullInsurance"),
            Format::SecondPrice => write!(f, "SPA"),
            Format::OptimalHybrid(k) => write!(f, "OptimalHybrid({k})"),
        }
    }
}

/// A mechanism built on an interim profile.
#[derive(Debug, Clone)]
pub enum Mechanism {
    WinLose(OptimalTransfer),
    SecondPrice(SecondPrice),
}

impl Mechanism {
    pub fn profile(&self) -> &InterimProfile {
        match self {
            Mechanism::WinLose(t) => t.profile(),
            Mechanism::SecondPrice(s) => s.profile(),
        }
    }
}

pub fn standard_format(profile: &InterimProfile, format: Format) -> Result<Mechanism> {
    Ok(match format {
        Format::FirstPrice => Mechanism::WinLose(optimal_limited_premium(profile, 0.0)?),
        Format::AllPay => Mechanism::WinLose(optimal_winner_favored(profile)),
        Format::FullInsurance => {
            Mechanism::WinLose(optimal_limited_premium(profile, profile.full_insurance_cap())?)
        }
        Format::OptimalHybrid(cap) => Mechanism::WinLose(optimal_limited_premium(profile, cap)?),
        Format::SecondPrice => Mechanism::SecondPrice(SecondPrice::new(profile)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::AllocationRule;
    use crate::model::{discretize, AmbiguityModel, ReferenceBelief};

    fn uniform_profile(model: AmbiguityModel, n: usize) -> InterimProfile {
        let b = ReferenceBelief::uniform(0.0, 1.0).unwrap();
        let rule = AllocationRule::efficient(b.clone(), model, 0.0).unwrap();
        InterimProfile::new(rule, discretize(&b, n).unwrap()).unwrap()
    }

    #[test]
    fn lp_examples() {
        let s = solve_interim_lp(0.6, 0.4, 0.8, 0.2, &ConstraintClass::limited_premium(0.0).unwrap()).unwrap();
        assert!((s.w - 0.5).abs() < 1e-15 && s.l.abs() < 1e-15);

        let s = solve_interim_lp(0.6, 0.4, 0.8, 0.2, &ConstraintClass::limited_premium(0.3).unwrap()).unwrap();
        assert!((s.w - 0.2).abs() < 1e-15 && (s.l - 0.2).abs() < 1e-15);

        let s = solve_interim_lp(0.6, 0.4, 1.0, 0.3, &ConstraintClass::winner_favored()).unwrap();
        assert!((s.w - 0.9).abs() < 1e-15 && (s.l + 0.1).abs() < 1e-15);
        assert!((s.w * 0.4 + s.l * 0.6 - 0.3).abs() < 1e-15);
    }

    #[test]
    fn lp_rejects_inconsistent_inputs() {
        let class = ConstraintClass::limited_premium(0.0).unwrap();
        assert!(matches!(solve_interim_lp(0.3, 0.4, 1.0, 0.1, &class), Err(Error::InvalidInput(_))));
        // No-premium with a type that never wins under the worst case but is owed utility.
        assert!(matches!(solve_interim_lp(0.3, 0.0, 1.0, 0.1, &class), Err(Error::Infeasible(_))));
    }

    #[test]
    fn lp_handles_certain_win() {
        let s = solve_interim_lp(1.0, 1.0, 1.0, 0.4, &ConstraintClass::limited_premium(0.0).unwrap()).unwrap();
        assert!((s.w - 0.4).abs() < 1e-15);
        assert!(s.l <= 0.0);
    }

    #[test]
    fn class_validation() {
        assert!(ConstraintClass::new(0.6, 0.5, 0.0).is_err());
        assert!(ConstraintClass::new(0.0, 1.0, -1.0).is_err());
        assert!(ConstraintClass::limited_premium(f64::INFINITY).is_ok());
    }

    #[test]
    fn first_price_bid_is_half_the_type() {
        let p = uniform_profile(AmbiguityModel::none(), 101);
        let t = optimal_limited_premium(&p, 0.0).unwrap().tabulate();
        for (i, &theta) in t.nodes.iter().enumerate() {
            assert!((t.tw[i] - theta / 2.0).abs() < 1e-12, "theta={theta}");
            assert_eq!(t.tl[i], 0.0);
        }
    }

    #[test]
    fn hybrid_threshold_and_full_insurance() {
        let p = uniform_profile(AmbiguityModel::none(), 101);
        let hybrid = optimal_limited_premium(&p, 0.08).unwrap();
        assert!((hybrid.threshold().unwrap() - 0.4).abs() < 1e-10);

        let fi = optimal_limited_premium(&p, 0.5).unwrap();
        assert_eq!(fi.threshold(), Some(1.0));
        let t = fi.tabulate();
        for (i, &theta) in t.nodes.iter().enumerate() {
            assert!((t.tw[i] - (theta - theta * theta / 2.0)).abs() < 1e-12);
            assert!((t.tl[i] + theta * theta / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn all_pay_bids() {
        let p = uniform_profile(AmbiguityModel::none(), 101);
        let t = optimal_winner_favored(&p).tabulate();
        assert_eq!(t.tw[0], 0.0);
        for (i, &theta) in t.nodes.iter().enumerate() {
            assert!((t.tw[i] - theta * theta / 2.0).abs() < 1e-12);
            assert_eq!(t.tw[i], t.tl[i]);
        }
        let p = uniform_profile(AmbiguityModel::contamination(0.2).unwrap(), 101);
        let t = optimal_winner_favored(&p).tabulate();
        for (i, &theta) in t.nodes.iter().enumerate().take(100) {
            assert!((t.tw[i] - 0.8 * theta * theta / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_forms_agree_with_the_interim_program() {
        for model in [
            AmbiguityModel::none(),
            AmbiguityModel::contamination(0.2).unwrap(),
            AmbiguityModel::relative_entropy(0.3).unwrap(),
        ] {
            let p = uniform_profile(model, 41);
            let constructions = [
                optimal_limited_premium(&p, 0.0).unwrap(),
                optimal_limited_premium(&p, 0.05).unwrap(),
                optimal_limited_premium(&p, f64::INFINITY).unwrap(),
                optimal_winner_favored(&p),
            ];
            for c in &constructions {
                let t = c.tabulate();
                for i in 0..t.nodes.len() {
                    let theta = t.nodes[i];
                    let s = solve_interim_lp(p.x()[i], p.xmin()[i], theta, p.cum_xmin()[i], &c.class()).unwrap();
                    // Types with X^min = 0 have a revenue-irrelevant winning payoff.
                    if p.xmin()[i] > 0.0 {
                        assert!((s.w - (theta - t.tw[i])).abs() < 1e-10, "{:?} at {theta}", c.construction());
                    }
                    assert!((s.l + t.tl[i]).abs() < 1e-10, "{:?} at {theta}", c.construction());
                }
                assert!(t.win_lose_violation() <= 1e-12);
            }
        }
    }

    #[test]
    fn second_price_transfer() {
        let p = uniform_profile(AmbiguityModel::none(), 11);
        let spa = SecondPrice::new(&p);
        assert_eq!(spa.transfer(0.7, 0.3), 0.3);
        assert_eq!(spa.transfer(0.3, 0.7), 0.0);
        assert_eq!(spa.transfer(0.5, 0.5), 0.25);
    }

    #[test]
    fn format_labels() {
        assert_eq!(Format::FirstPrice.to_string(), "FPA");
        assert_eq!(Format::OptimalHybrid(0.08).to_string(), "OptimalHybrid(0.08)");
    }
}
