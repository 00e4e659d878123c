//! Scenario configs, accepted as TOML or JSON.

use std::fs;
use std::path::{Path, PathBuf};

use ambiguity_auction::{AmbiguityModel, Divergence, Phi, ReferenceBelief};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub belief: Option<BeliefSpec>,
    pub ambiguity: AmbiguitySpec,
    #[serde(default)]
    pub allocation: AllocationSpec,
    pub class: Option<ClassSpec>,
    pub grid: Option<usize>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BeliefKind {
    Uniform,
    Power,
    PiecewiseLinear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefSpec {
    pub family: BeliefKind,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub exponent: Option<f64>,
    pub knots: Option<Vec<(f64, f64)>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AmbiguityKind {
    None,
    RelativeEntropy,
    Contamination,
    Phi,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmbiguitySpec {
    pub family: AmbiguityKind,
    pub eta: Option<f64>,
    /// Radii swept by `psi`; falls back to `eta`.
    pub etas: Option<Vec<f64>>,
    pub phi: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ReserveSpec {
    Value(f64),
    Keyword(String),
}

impl Default for ReserveSpec {
    fn default() -> Self {
        ReserveSpec::Value(0.0)
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSpec {
    #[serde(default)]
    pub reserve: ReserveSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassKind {
    LimitedPremium,
    WinnerFavored,
    Unconstrained,
}

/// A cap given as a number or as `"inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum CapSpec {
    Value(f64),
    Keyword(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSpec {
    pub kind: ClassKind,
    pub k: Option<CapSpec>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClassChoice {
    LimitedPremium(Cap),
    WinnerFavored,
    Unconstrained,
}

/// Reserve after resolving the `"optimal"` keyword.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reserve {
    Fixed(f64),
    Optimal,
}

/// Premium cap; `Infinite` resolves to the full-insurance cap of the profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cap {
    Finite(f64),
    Infinite,
}

pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path
        .extension()
        .map(|ext| ext.eq_ignore_ascii_case("json"))
        .unwrap_or(false);
    if is_json {
        serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

fn missing(field: &str) -> CliError {
    CliError::Config(format!("missing field `{field}`"))
}

impl ScenarioConfig {
    pub fn belief(&self) -> Result<ReferenceBelief, CliError> {
        let b = self.belief.as_ref().ok_or_else(|| missing("belief"))?;
        let belief = match b.family {
            BeliefKind::Uniform => ReferenceBelief::uniform(
                b.lo.ok_or_else(|| missing("belief.lo"))?,
                b.hi.ok_or_else(|| missing("belief.hi"))?,
            ),
            BeliefKind::Power => ReferenceBelief::power(
                b.lo.ok_or_else(|| missing("belief.lo"))?,
                b.hi.ok_or_else(|| missing("belief.hi"))?,
                b.exponent.ok_or_else(|| missing("belief.exponent"))?,
            ),
            BeliefKind::PiecewiseLinear => {
                if b.lo.is_some() || b.hi.is_some() {
                    return Err(CliError::Config(
                        "belief.lo/hi are implied by the knots of a piecewise-linear belief".into(),
                    ));
                }
                ReferenceBelief::piecewise_linear(
                    b.knots.clone().ok_or_else(|| missing("belief.knots"))?,
                )
            }
        };
        belief.map_err(|e| CliError::Config(format!("belief: {e}")))
    }

    fn divergence(&self) -> Result<Option<Divergence>, CliError> {
        let a = &self.ambiguity;
        if a.phi.is_some() && a.family != AmbiguityKind::Phi {
            return Err(CliError::Config(
                "ambiguity.phi is only valid with family = \"phi\"".into(),
            ));
        }
        Ok(match a.family {
            AmbiguityKind::None => None,
            AmbiguityKind::RelativeEntropy => Some(Divergence::RelativeEntropy),
            AmbiguityKind::Contamination => Some(Divergence::Contamination),
            AmbiguityKind::Phi => {
                let name = a.phi.as_deref().ok_or_else(|| missing("ambiguity.phi"))?;
                let phi =
                    Phi::by_name(name).map_err(|e| CliError::Config(format!("ambiguity.phi: {e}")))?;
                Some(Divergence::CustomPhi(phi))
            }
        })
    }

    fn model_at(&self, eta: f64) -> Result<AmbiguityModel, CliError> {
        let model = match self.divergence()? {
            None if eta != 0.0 => {
                return Err(CliError::Config(format!(
                    "ambiguity family \"none\" needs eta = 0, got {eta}"
                )))
            }
            None => Ok(AmbiguityModel::none()),
            Some(d) => AmbiguityModel::new(d, eta),
        };
        model.map_err(|e| CliError::Config(format!("ambiguity: {e}")))
    }

    /// The single ambiguity model used by `build`, `compare` and `reserve`.
    pub fn ambiguity(&self) -> Result<AmbiguityModel, CliError> {
        if self.ambiguity.etas.is_some() {
            return Err(CliError::Config(
                "ambiguity.etas is only read by `psi`; use ambiguity.eta".into(),
            ));
        }
        let eta = match self.ambiguity.family {
            AmbiguityKind::None => self.ambiguity.eta.unwrap_or(0.0),
            _ => self.ambiguity.eta.ok_or_else(|| missing("ambiguity.eta"))?,
        };
        self.model_at(eta)
    }

    /// One model per requested radius, for `psi`.
    pub fn ambiguity_sweep(&self) -> Result<Vec<AmbiguityModel>, CliError> {
        let etas = match (&self.ambiguity.etas, self.ambiguity.eta) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "give either ambiguity.eta or ambiguity.etas, not both".into(),
                ))
            }
            (Some(list), None) if !list.is_empty() => list.clone(),
            (Some(_), None) => return Err(CliError::Config("ambiguity.etas is empty".into())),
            (None, Some(eta)) => vec![eta],
            (None, None) if self.ambiguity.family == AmbiguityKind::None => vec![0.0],
            (None, None) => return Err(missing("ambiguity.eta")),
        };
        etas.into_iter().map(|eta| self.model_at(eta)).collect()
    }

    pub fn reserve(&self) -> Result<Reserve, CliError> {
        match &self.allocation.reserve {
            ReserveSpec::Value(r) => Ok(Reserve::Fixed(*r)),
            ReserveSpec::Keyword(k) if k == "optimal" => Ok(Reserve::Optimal),
            ReserveSpec::Keyword(k) => Err(CliError::Config(format!(
                "allocation.reserve must be a number or \"optimal\", got \"{k}\""
            ))),
        }
    }

    /// The configured transfer class, if a `[class]` section is present.
    pub fn class(&self) -> Result<Option<ClassChoice>, CliError> {
        let Some(spec) = &self.class else {
            return Ok(None);
        };
        let cap = match &spec.k {
            None => None,
            Some(CapSpec::Value(k)) if k.is_finite() && *k >= 0.0 => Some(Cap::Finite(*k)),
            Some(CapSpec::Value(k)) => {
                return Err(CliError::Config(format!("class.k must be >= 0, got {k}")))
            }
            Some(CapSpec::Keyword(k)) if k == "inf" => Some(Cap::Infinite),
            Some(CapSpec::Keyword(k)) => {
                return Err(CliError::Config(format!(
                    "class.k must be a number or \"inf\", got \"{k}\""
                )))
            }
        };
        let choice = match (spec.kind, cap) {
            (ClassKind::LimitedPremium, Some(cap)) => ClassChoice::LimitedPremium(cap),
            (ClassKind::LimitedPremium, None) => return Err(missing("class.k")),
            (_, Some(_)) => {
                return Err(CliError::Config(
                    "class.k is only valid for the limited-premium class".into(),
                ))
            }
            (ClassKind::WinnerFavored, None) => ClassChoice::WinnerFavored,
            (ClassKind::Unconstrained, None) => ClassChoice::Unconstrained,
        };
        Ok(Some(choice))
    }

    pub fn grid(&self, flag: Option<usize>) -> Result<usize, CliError> {
        let n = flag.or(self.grid).unwrap_or(ambiguity_auction::DEFAULT_GRID);
        if n < 3 {
            return Err(CliError::Config(format!("grid must have at least 3 nodes, got {n}")));
        }
        Ok(n)
    }

    pub fn out_dir(&self, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        flag.or_else(|| self.output.dir.clone())
            .ok_or_else(|| CliError::Config("no output directory: pass --out or set [output] dir".into()))
    }
}
