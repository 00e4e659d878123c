//! Domain types shared by every solver: the type space, the reference belief,
//! the ambiguity model, the discretization grid, and payoff schedules.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::gauss_legendre_split;

/// Closed interval of bidder valuations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypeSpace {
    lo: f64,
    hi: f64,
}

impl TypeSpace {
    /// `lo = 0` is admitted so that the classical uniform-[0, 1] cases can be run.
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo < 0.0 || lo >= hi {
            return Err(Error::InvalidInput(format!(
                "type space needs 0 <= lo < hi, got [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, theta: f64) -> bool {
        theta >= self.lo && theta <= self.hi
    }

    /// Checks `theta` against the support, snapping values within 1e-12 of an
    /// endpoint onto it.
    pub fn check(&self, theta: f64) -> Result<f64> {
        let slack = 1e-12 * self.width().max(1.0);
        if theta.is_nan() || theta < self.lo - slack || theta > self.hi + slack {
            return Err(Error::OutOfSupport {
                value: theta,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(theta.clamp(self.lo, self.hi))
    }
}

/// Parametric family of an atomless reference belief.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum BeliefFamily {
    Uniform,
    /// `F(θ) = ((θ - lo) / (hi - lo))^exponent`.
    Power { exponent: f64 },
    /// Continuous piecewise-linear cdf through `(θ, F(θ))` knots.
    PiecewiseLinearCdf { knots: Vec<(f64, f64)> },
}

/// The seller's prior over one bidder's type: cdf, density and quantile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceBelief {
    space: TypeSpace,
    #[serde(flatten)]
    family: BeliefFamily,
}

impl ReferenceBelief {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(TypeSpace::new(lo, hi)?, BeliefFamily::Uniform)
    }

    pub fn power(lo: f64, hi: f64, exponent: f64) -> Result<Self> {
        Self::new(TypeSpace::new(lo, hi)?, BeliefFamily::Power { exponent })
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        let (lo, hi) = match (knots.first(), knots.last()) {
            (Some(a), Some(b)) if knots.len() >= 2 => (a.0, b.0),
            _ => {
                return Err(Error::InvalidInput(
                    "piecewise-linear cdf needs at least two knots".into(),
                ))
            }
        };
        Self::new(TypeSpace::new(lo, hi)?, BeliefFamily::PiecewiseLinearCdf { knots })
    }

    pub fn new(space: TypeSpace, family: BeliefFamily) -> Result<Self> {
        match &family {
            BeliefFamily::Uniform => {}
            BeliefFamily::Power { exponent } => {
                if !(exponent.is_finite() && *exponent > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "power cdf exponent must be positive, got {exponent}"
                    )));
                }
            }
            BeliefFamily::PiecewiseLinearCdf { knots } => validate_knots(&space, knots)?,
        }
        let belief = Self { space, family };
        belief.check_round_trip()?;
        Ok(belief)
    }

    fn check_round_trip(&self) -> Result<()> {
        for i in 0..=100 {
            let u = i as f64 / 100.0;
            let back = self.cdf(self.quantile(u));
            if (back - u).abs() > 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "quantile/cdf round trip failed at u = {u}: got {back}"
                )));
            }
        }
        Ok(())
    }

    pub fn space(&self) -> TypeSpace {
        self.space
    }

    pub fn family(&self) -> &BeliefFamily {
        &self.family
    }

    pub fn lo(&self) -> f64 {
        self.space.lo
    }

    pub fn hi(&self) -> f64 {
        self.space.hi
    }

    fn unit(&self, theta: f64) -> f64 {
        ((theta - self.space.lo) / self.space.width()).clamp(0.0, 1.0)
    }

    pub fn cdf(&self, theta: f64) -> f64 {
        if theta <= self.space.lo {
            return 0.0;
        }
        if theta >= self.space.hi {
            return 1.0;
        }
        match &self.family {
            BeliefFamily::Uniform => self.unit(theta),
            BeliefFamily::Power { exponent } => self.unit(theta).powf(*exponent),
            BeliefFamily::PiecewiseLinearCdf { knots } => {
                let k = segment_index(knots, theta);
                let (x0, f0) = knots[k];
                let (x1, f1) = knots[k + 1];
                f0 + (f1 - f0) * (theta - x0) / (x1 - x0)
            }
        }
    }

    /// Density with respect to Lebesgue measure. Zero outside the support.
    pub fn pdf(&self, theta: f64) -> f64 {
        if theta < self.space.lo || theta > self.space.hi {
            return 0.0;
        }
        let width = self.space.width();
        match &self.family {
            BeliefFamily::Uniform => 1.0 / width,
            BeliefFamily::Power { exponent } => {
                let u = self.unit(theta);
                if *exponent == 1.0 {
                    1.0 / width
                } else {
                    exponent * u.powf(exponent - 1.0) / width
                }
            }
            BeliefFamily::PiecewiseLinearCdf { knots } => {
                let k = segment_index(knots, theta);
                let (x0, f0) = knots[k];
                let (x1, f1) = knots[k + 1];
                (f1 - f0) / (x1 - x0)
            }
        }
    }

    /// Left-continuous inverse of the cdf.
    pub fn quantile(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        let (lo, width) = (self.space.lo, self.space.width());
        match &self.family {
            BeliefFamily::Uniform => lo + width * u,
            BeliefFamily::Power { exponent } => lo + width * u.powf(1.0 / exponent),
            BeliefFamily::PiecewiseLinearCdf { knots } => {
                if u <= 0.0 {
                    return lo;
                }
                let k = knots
                    .windows(2)
                    .position(|w| w[1].1 >= u)
                    .unwrap_or(knots.len() - 2);
                let (x0, f0) = knots[k];
                let (x1, f1) = knots[k + 1];
                if f1 == f0 {
                    x0
                } else {
                    x0 + (x1 - x0) * (u - f0) / (f1 - f0)
                }
            }
        }
    }

    /// Points where the cdf is not smooth (interior knots).
    pub fn kinks(&self) -> Vec<f64> {
        match &self.family {
            BeliefFamily::PiecewiseLinearCdf { knots } => knots[1..knots.len() - 1]
                .iter()
                .map(|k| k.0)
                .collect(),
            _ => Vec::new(),
        }
    }
}

fn validate_knots(space: &TypeSpace, knots: &[(f64, f64)]) -> Result<()> {
    if knots.len() < 2 {
        return Err(Error::InvalidInput(
            "piecewise-linear cdf needs at least two knots".into(),
        ));
    }
    let first = knots[0];
    let last = knots[knots.len() - 1];
    if first.0 != space.lo || last.0 != space.hi {
        return Err(Error::InvalidInput(
            "piecewise-linear knots must start at lo and end at hi".into(),
        ));
    }
    if first.1 != 0.0 || last.1 != 1.0 {
        return Err(Error::InvalidInput(
            "piecewise-linear cdf must run from 0 to 1".into(),
        ));
    }
    for w in knots.windows(2) {
        let ((x0, f0), (x1, f1)) = (w[0], w[1]);
        if !(x1 > x0) {
            // A repeated abscissa would encode a jump, i.e. an atom.
            return Err(Error::InvalidInput(format!(
                "knot abscissae must be strictly increasing (atoms are not supported), got {x0} then {x1}"
            )));
        }
        if f1 < f0 {
            return Err(Error::NonMonotoneCdf {
                left: x0,
                f_left: f0,
                right: x1,
                f_right: f1,
            });
        }
    }
    Ok(())
}

fn segment_index(knots: &[(f64, f64)], theta: f64) -> usize {
    let k = knots.partition_point(|k| k.0 <= theta);
    k.saturating_sub(1).min(knots.len() - 2)
}

/// Convex generator of a φ-divergence, with `φ(1) = 0`.
#[derive(Clone)]
pub struct Phi {
    name: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Phi {
    pub fn new<F>(name: impl Into<String>, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let phi = Self {
            name: name.into(),
            f: Arc::new(f),
        };
        phi.validate()?;
        Ok(phi)
    }

    /// `(x - 1)^2`.
    pub fn chi_squared() -> Self {
        Self::new("chi-squared", |x| (x - 1.0) * (x - 1.0)).expect("valid generator")
    }

    /// `(sqrt(x) - 1)^2`.
    pub fn hellinger() -> Self {
        Self::new("hellinger", |x: f64| (x.sqrt() - 1.0).powi(2)).expect("valid generator")
    }

    /// `|x - 1| / 2`.
    pub fn total_variation() -> Self {
        Self::new("total-variation", |x: f64| 0.5 * (x - 1.0).abs()).expect("valid generator")
    }

    /// `x log x`, the relative-entropy generator.
    pub fn x_log_x() -> Self {
        Self::new("x-log-x", |x: f64| if x <= 0.0 { 0.0 } else { x * x.ln() })
            .expect("valid generator")
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "chi-squared" => Ok(Self::chi_squared()),
            "hellinger" => Ok(Self::hellinger()),
            "total-variation" => Ok(Self::total_variation()),
            "x-log-x" => Ok(Self::x_log_x()),
            other => Err(Error::InvalidInput(format!(
                "unknown phi generator '{other}' (expected chi-squared, hellinger, total-variation or x-log-x)"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    fn validate(&self) -> Result<()> {
        let at_one = self.eval(1.0);
        if at_one.abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "phi({}) must vanish at 1, got {at_one}",
                self.name
            )));
        }
        // Midpoint convexity and finiteness on a probe grid of (0, 8].
        let probes: Vec<f64> = (1..=160).map(|i| i as f64 * 0.05).collect();
        for &x in &probes {
            if !self.eval(x).is_finite() {
                return Err(Error::InvalidInput(format!(
                    "phi({}) is not finite at {x}",
                    self.name
                )));
            }
        }
        for w in probes.windows(3) {
            let (a, b, c) = (self.eval(w[0]), self.eval(w[1]), self.eval(w[2]));
            if b > 0.5 * (a + c) + 1e-9 * (1.0 + a.abs() + c.abs()) {
                return Err(Error::InvalidInput(format!(
                    "phi({}) is not convex near {}",
                    self.name, w[1]
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Phi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Phi").field("name", &self.name).finish()
    }
}

/// Family of divergence that defines the prior set.
#[derive(Debug, Clone)]
pub enum Divergence {
    RelativeEntropy,
    Contamination,
    CustomPhi(Phi),
}

impl Divergence {
    pub fn label(&self) -> String {
        match self {
            Divergence::RelativeEntropy => "relative-entropy".into(),
            Divergence::Contamination => "contamination".into(),
            Divergence::CustomPhi(phi) => format!("phi:{}", phi.name()),
        }
    }
}

/// Divergence ball `{Q : D(Q || P) <= eta}` around the reference belief.
#[derive(Debug, Clone)]
pub struct AmbiguityModel {
    divergence: Divergence,
    eta: f64,
}

impl AmbiguityModel {
    pub fn new(divergence: Divergence, eta: f64) -> Result<Self> {
        if !(eta.is_finite() && eta >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "ambiguity radius must be finite and >= 0, got {eta}"
            )));
        }
        if matches!(divergence, Divergence::Contamination) && eta >= 1.0 {
            return Err(Error::InvalidInput(format!(
                "contamination radius must be < 1, got {eta}"
            )));
        }
        Ok(Self { divergence, eta })
    }

    pub fn relative_entropy(eta: f64) -> Result<Self> {
        Self::new(Divergence::RelativeEntropy, eta)
    }

    pub fn contamination(eta: f64) -> Result<Self> {
        Self::new(Divergence::Contamination, eta)
    }

    pub fn custom_phi(phi: Phi, eta: f64) -> Result<Self> {
        Self::new(Divergence::CustomPhi(phi), eta)
    }

    /// No ambiguity: the prior set is `{P}`.
    pub fn none() -> Self {
        Self {
            divergence: Divergence::RelativeEntropy,
            eta: 0.0,
        }
    }

    pub fn divergence(&self) -> &Divergence {
        &self.divergence
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn is_contamination(&self) -> bool {
        matches!(self.divergence, Divergence::Contamination)
    }
}

/// Discretization of the type space: nodes, trapezoid weights, and the
/// reference-belief mass attached to each node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    masses: Vec<f64>,
}

impl TypeGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Trapezoid weights; they sum to the width of the support.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Reference mass of the half-cells surrounding each node; sums to 1.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn lo(&self) -> f64 {
        self.nodes[0]
    }

    pub fn hi(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index `i` of the cell `[node_i, node_{i+1}]` containing `theta`.
    pub fn cell_of(&self, theta: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x <= theta);
        i.saturating_sub(1).min(self.nodes.len() - 2)
    }

    /// Index of a node equal to `theta`, if any.
    pub fn node_index(&self, theta: f64) -> Option<usize> {
        let i = self.cell_of(theta);
        if self.nodes[i] == theta {
            Some(i)
        } else if self.nodes[i + 1] == theta {
            Some(i + 1)
        } else {
            None
        }
    }
}

/// Builds an `n`-node uniform grid on the support of `belief`. Node masses are
/// cdf increments over the midpoint cells.
pub fn discretize(belief: &ReferenceBelief, n: usize) -> Result<TypeGrid> {
    if n < 3 {
        return Err(Error::InvalidInput(format!("grid needs n >= 3 nodes, got {n}")));
    }
    let (lo, hi) = (belief.lo(), belief.hi());
    let h = (hi - lo) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + h * i as f64 })
        .collect();

    let mut weights = vec![h; n];
    weights[0] = 0.5 * h;
    weights[n - 1] = 0.5 * h;

    let mut edges = Vec::with_capacity(n + 1);
    edges.push(lo);
    edges.extend(nodes.windows(2).map(|w| 0.5 * (w[0] + w[1])));
    edges.push(hi);
    let cdf: Vec<f64> = edges.iter().map(|&x| belief.cdf(x)).collect();
    for (i, w) in cdf.windows(2).enumerate() {
        if w[1] < w[0] {
            return Err(Error::NonMonotoneCdf {
                left: edges[i],
                f_left: w[0],
                right: edges[i + 1],
                f_right: w[1],
            });
        }
    }
    let masses = cdf.windows(2).map(|w| w[1] - w[0]).collect();
    Ok(TypeGrid {
        nodes,
        weights,
        masses,
    })
}

/// `∫_{lo}^{upper} f(z) dz` with a 5-point Gauss-Legendre panel on every grid
/// cell.
pub fn integrate_curve<F: Fn(f64) -> f64>(grid: &TypeGrid, f: F, upper: f64) -> Result<f64> {
    integrate_curve_with_breaks(grid, f, upper, &[])
}

/// As [`integrate_curve`], additionally splitting cells at the given
/// breakpoints (jumps or kinks of the integrand).
pub fn integrate_curve_with_breaks<F: Fn(f64) -> f64>(
    grid: &TypeGrid,
    f: F,
    upper: f64,
    breaks: &[f64],
) -> Result<f64> {
    let space = TypeSpace::new(grid.lo(), grid.hi())?;
    let upper = space.check(upper)?;
    let mut breaks = breaks.to_vec();
    breaks.sort_by(f64::total_cmp);
    let nodes = grid.nodes();
    let mut total = 0.0;
    for w in nodes.windows(2) {
        if w[0] >= upper {
            break;
        }
        total += gauss_legendre_split(&f, w[0], w[1].min(upper), &breaks);
    }
    Ok(total)
}

/// Payoff per grid node together with the reference mass of each node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PayoffSchedule {
    values: Vec<f64>,
    probabilities: Vec<f64>,
}

impl PayoffSchedule {
    pub fn new(values: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if values.len() != probabilities.len() || values.is_empty() {
            return Err(Error::InvalidInput(format!(
                "payoff schedule needs matching non-empty vectors, got {} values and {} probabilities",
                values.len(),
                probabilities.len()
            )));
        }
        if probabilities.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput("probabilities must be finite and >= 0".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!(
                "probabilities must sum to 1, got {total}"
            )));
        }
        Ok(Self {
            values,
            probabilities,
        })
    }

    /// Schedule on the grid nodes, weighted by the grid masses.
    pub fn on_grid(grid: &TypeGrid, values: Vec<f64>) -> Result<Self> {
        Self::new(values, grid.masses().to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn reference_mean(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.probabilities)
            .map(|(v, p)| v * p)
            .sum()
    }

    /// Replaces each value by its reference-conditional mean over the cell of
    /// `labels` it belongs to. Cells with zero mass keep their values.
    pub fn conditional_mean(&self, labels: &[usize]) -> Result<Self> {
        if labels.len() != self.values.len() {
            return Err(Error::InvalidInput(
                "partition labels must match the schedule length".into(),
            ));
        }
        let cells = labels.iter().copied().max().unwrap_or(0) + 1;
        let mut mass = vec![0.0; cells];
        let mut weighted = vec![0.0; cells];
        for ((&v, &p), &c) in self.values.iter().zip(&self.probabilities).zip(labels) {
            mass[c] += p;
            weighted[c] += p * v;
        }
        let values = self
            .values
            .iter()
            .zip(labels)
            .map(|(&v, &c)| if mass[c] > 0.0 { weighted[c] / mass[c] } else { v })
            .collect();
        Ok(Self {
            values,
            probabilities: self.probabilities.clone(),
        })
    }
}
