//! Efficient allocation with a reserve price and its interim winning
//! probabilities under the reference belief and over the divergence ball.

use serde::Serialize;

use crate::divergence::{max_probability, min_probability, zero_probability_threshold};
use crate::error::{Error, Result};
use crate::model::{integrate_curve_with_breaks, AmbiguityModel, ReferenceBelief, TypeGrid};
use crate::numeric::gauss_legendre_split;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AllocationKind {
    /// The higher type wins if it clears the reserve; ties split evenly.
    EfficientWithReserve,
}

/// Symmetric two-bidder allocation rule together with the beliefs used to
/// evaluate it.
#[derive(Debug, Clone)]
pub struct AllocationRule {
    kind: AllocationKind,
    reserve: f64,
    belief: ReferenceBelief,
    ambiguity: AmbiguityModel,
}

impl AllocationRule {
    pub fn efficient(belief: ReferenceBelief, ambiguity: AmbiguityModel, reserve: f64) -> Result<Self> {
        if !(reserve.is_finite() && reserve >= 0.0 && reserve <= belief.hi()) {
            return Err(Error::InvalidInput(format!(
                "reserve must lie in [0, {}], got {reserve}",
                belief.hi()
            )));
        }
        // Only the top type may win with certainty.
        let top = belief.quantile(1.0);
        if top < belief.hi() {
            return Err(Error::InvalidInput(format!(
                "reference cdf reaches 1 at {top} < {}; types above it would win for sure",
                belief.hi()
            )));
        }
        Ok(Self {
            kind: AllocationKind::EfficientWithReserve,
            reserve,
            belief,
            ambiguity,
        })
    }

    pub fn kind(&self) -> AllocationKind {
        self.kind
    }

    pub fn reserve(&self) -> f64 {
        self.reserve
    }

    pub fn belief(&self) -> &ReferenceBelief {
        &self.belief
    }

    pub fn ambiguity(&self) -> &AmbiguityModel {
        &self.ambiguity
    }

    pub fn lo(&self) -> f64 {
        self.belief.lo()
    }

    pub fn hi(&self) -> f64 {
        self.belief.hi()
    }

    /// Probability that a bidder reporting `report` wins against `competitor`.
    pub fn allocation(&self, report: f64, competitor: f64) -> f64 {
        if report < self.reserve {
            0.0
        } else if report > competitor {
            1.0
        } else if report == competitor {
            0.5
        } else {
            0.0
        }
    }

    /// `X(θ)`: winning probability under the reference belief.
    pub fn interim_win_probability(&self, theta: f64) -> Result<f64> {
        let theta = self.belief.space().check(theta)?;
        Ok(self.win_probability(theta))
    }

    /// `X^min(θ)`: least winning probability over the divergence ball.
    pub fn interim_min_win_probability(&self, theta: f64) -> Result<f64> {
        let theta = self.belief.space().check(theta)?;
        Ok(self.min_win_probability(theta))
    }

    /// `X^max(θ)`: greatest winning probability over the divergence ball.
    pub fn interim_max_win_probability(&self, theta: f64) -> Result<f64> {
        let theta = self.belief.space().check(theta)?;
        max_probability(self.win_probability(theta), &self.ambiguity)
    }

    fn win_probability(&self, theta: f64) -> f64 {
        if theta < self.reserve {
            0.0
        } else if theta >= self.hi() {
            1.0
        } else {
            self.belief.cdf(theta)
        }
    }

    pub(crate) fn min_win_probability(&self, theta: f64) -> f64 {
        // Winning probabilities are always in [0, 1], so this cannot fail.
        min_probability(self.win_probability(theta), &self.ambiguity).unwrap_or(0.0)
    }

    /// Interior points where `X^min` jumps or kinks.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = (self.lo(), self.hi());
        let mut points = self.belief.kinks();
        points.push(self.reserve);
        let threshold = zero_probability_threshold(&self.ambiguity);
        if threshold > 0.0 && threshold < 1.0 {
            points.push(self.belief.quantile(threshold));
        }
        points.retain(|&x| x > lo && x < hi);
        points.sort_by(f64::total_cmp);
        points.dedup();
        points
    }
}

/// `∫_{lo}^{θ} X^min(z) dz`.
pub fn envelope_integral(rule: &AllocationRule, grid: &TypeGrid, theta: f64) -> Result<f64> {
    let breaks = rule.breakpoints();
    integrate_curve_with_breaks(grid, |z| rule.min_win_probability(z), theta, &breaks)
}

/// Interim curves of an allocation rule tabulated on a grid.
#[derive(Debug, Clone)]
pub struct InterimProfile {
    rule: AllocationRule,
    grid: TypeGrid,
    breaks: Vec<f64>,
    x: Vec<f64>,
    xmin: Vec<f64>,
    xmax: Vec<f64>,
    cum_xmin: Vec<f64>,
}

impl InterimProfile {
    pub fn new(rule: AllocationRule, grid: TypeGrid) -> Result<Self> {
        if grid.lo() != rule.lo() || grid.hi() != rule.hi() {
            return Err(Error::InvalidInput(
                "grid does not span the support of the allocation rule".into(),
            ));
        }
        let breaks = rule.breakpoints();
        let nodes = grid.nodes();
        let mut x = Vec::with_capacity(nodes.len());
        let mut xmin = Vec::with_capacity(nodes.len());
        let mut xmax = Vec::with_capacity(nodes.len());
        for &theta in nodes {
            x.push(rule.win_probability(theta));
            xmin.push(rule.min_win_probability(theta));
            xmax.push(max_probability(rule.win_probability(theta), rule.ambiguity())?);
        }
        let mut cum_xmin = Vec::with_capacity(nodes.len());
        cum_xmin.push(0.0);
        let xmin_fn = |z: f64| rule.min_win_probability(z);
        for w in nodes.windows(2) {
            let last = *cum_xmin.last().expect("non-empty");
            cum_xmin.push(last + gauss_legendre_split(&xmin_fn, w[0], w[1], &breaks));
        }
        Ok(Self {
            rule,
            grid,
            breaks,
            x,
            xmin,
            xmax,
            cum_xmin,
        })
    }

    pub fn rule(&self) -> &AllocationRule {
        &self.rule
    }

    pub fn grid(&self) -> &TypeGrid {
        &self.grid
    }

    pub fn nodes(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn xmin(&self) -> &[f64] {
        &self.xmin
    }

    pub fn xmax(&self) -> &[f64] {
        &self.xmax
    }

    pub fn cum_xmin(&self) -> &[f64] {
        &self.cum_xmin
    }

    /// `∫_{lo}^{θ} X^min` at an arbitrary type, consistent with the node table.
    pub fn cum_xmin_at(&self, theta: f64) -> f64 {
        let i = self.grid.cell_of(theta);
        let left = self.grid.nodes()[i];
        if theta <= left {
            return self.cum_xmin[i];
        }
        if theta == self.grid.nodes()[i + 1] {
            return self.cum_xmin[i + 1];
        }
        let xmin_fn = |z: f64| self.rule.min_win_probability(z);
        self.cum_xmin[i] + gauss_legendre_split(&xmin_fn, left, theta, &self.breaks)
    }

    /// `K̄ = ∫ X^min` over the whole support: the smallest premium cap at which
    /// every type can be fully insured.
    pub fn full_insurance_cap(&self) -> f64 {
        self.cum_xmin[self.cum_xmin.len() - 1]
    }
}
