use std::fs;
use std::path::{Path, PathBuf};

use ambiguity_auction::{
    efficient_profile, endogenous_allocation, max_probability, mechanism_report, min_probability,
    optimal_limited_premium, optimal_winner_favored, standard_format, AmbiguityModel,
    ConstraintClass, Construction, Error, Format, InterimProfile, Mechanism, MechanismReport,
    OptimalTransfer, ReferenceBelief,
};
use serde::Serialize;

use crate::config::{Cap, ClassChoice, Reserve, ScenarioConfig};
use crate::output::{num, write_json, Csv};
use crate::CliError;

/// Largest IC violation accepted before a mechanism is written.
pub const IC_TOLERANCE: f64 = 1e-4;
/// Largest IR violation accepted before a mechanism is written.
pub const IR_TOLERANCE: f64 = 1e-8;

const PSI_POINTS: usize = 201;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible(msg) => CliError::Feasibility(msg),
            Error::Unsupported(msg) => CliError::Unsupported(msg),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))
}

fn write_csv(csv: &Csv, path: &Path) -> Result<(), CliError> {
    csv.write(path)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_json_file<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    write_json(path, value)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

struct Scenario {
    belief: ReferenceBelief,
    model: AmbiguityModel,
    reserve: f64,
    profile: InterimProfile,
}

fn scenario(cfg: &ScenarioConfig, n: usize) -> Result<Scenario, CliError> {
    let belief = cfg.belief()?;
    let model = cfg.ambiguity()?;
    let reserve = match cfg.reserve()? {
        Reserve::Fixed(r) => r,
        Reserve::Optimal => endogenous_allocation(&belief, &model, n)?.reserve,
    };
    let profile = efficient_profile(&belief, &model, reserve, n)?;
    Ok(Scenario {
        belief,
        model,
        reserve,
        profile,
    })
}

fn resolve_cap(cap: Cap, profile: &InterimProfile) -> f64 {
    match cap {
        Cap::Finite(k) => k,
        Cap::Infinite => profile.full_insurance_cap(),
    }
}

pub fn psi(cfg: &ScenarioConfig, out: PathBuf) -> Result<(), CliError> {
    let models = cfg.ambiguity_sweep()?;
    let mut csv = Csv::new(&["eta", "p", "min_probability", "max_probability"]);
    for model in &models {
        for i in 0..PSI_POINTS {
            let p = i as f64 / (PSI_POINTS - 1) as f64;
            let lo = min_probability(p, model)?;
            let hi = max_probability(p, model)?;
            csv.row([num(model.eta()), num(p), num(lo), num(hi)]);
        }
    }
    prepare_dir(&out)?;
    write_csv(&csv, &out.join("psi.csv"))
}

#[derive(Serialize)]
struct AmbiguitySummary {
    divergence: String,
    eta: f64,
}

#[derive(Serialize)]
struct FeasibilitySummary {
    max_ic_violation: f64,
    max_ir_violation: f64,
    ic_location: Option<(f64, f64)>,
    ir_location: Option<f64>,
    max_envelope_residual: f64,
}

#[derive(Serialize)]
struct MechanismArtifact<'a> {
    belief: &'a ReferenceBelief,
    ambiguity: AmbiguitySummary,
    reserve: f64,
    grid: usize,
    class: &'static str,
    constraint: ConstraintClass,
    construction: Construction,
    theta_k: Option<f64>,
    full_insurance_cap: f64,
    ex_ante_revenue: f64,
    feasibility: FeasibilitySummary,
}

fn check_feasible(label: &str, report: &MechanismReport) -> Result<(), CliError> {
    if report.max_ic_violation > IC_TOLERANCE {
        let (theta, hat) = report.ic_location.unwrap_or((f64::NAN, f64::NAN));
        return Err(CliError::Feasibility(format!(
            "{label}: IC violation {} at type {} reporting {}",
            num(report.max_ic_violation),
            num(theta),
            num(hat)
        )));
    }
    if report.max_ir_violation > IR_TOLERANCE {
        return Err(CliError::Feasibility(format!(
            "{label}: IR violation {} at type {}",
            num(report.max_ir_violation),
            num(report.ir_location.unwrap_or(f64::NAN))
        )));
    }
    Ok(())
}

pub fn build(cfg: &ScenarioConfig, out: PathBuf, n: usize) -> Result<(), CliError> {
    let choice = cfg
        .class()?
        .ok_or_else(|| CliError::Config("missing section `class`".into()))?;
    let sc = scenario(cfg, n)?;
    let profile = &sc.profile;
    let (label, transfer): (&'static str, OptimalTransfer) = match choice {
        ClassChoice::LimitedPremium(cap) => (
            "limited-premium",
            optimal_limited_premium(profile, resolve_cap(cap, profile))?,
        ),
        ClassChoice::WinnerFavored => ("winner-favored", optimal_winner_favored(profile)),
        // Without a class constraint the full-insurance vertex is optimal at every type.
        ClassChoice::Unconstrained => (
            "unconstrained",
            optimal_limited_premium(profile, profile.full_insurance_cap())?,
        ),
    };
    let mechanism = Mechanism::WinLose(transfer.clone());
    let report = mechanism_report(&mechanism)?;
    check_feasible(label, &report)?;

    let constraint = match choice {
        ClassChoice::Unconstrained => ConstraintClass::unconstrained(),
        _ => transfer.class(),
    };
    let artifact = MechanismArtifact {
        belief: &sc.belief,
        ambiguity: AmbiguitySummary {
            divergence: sc.model.divergence().label(),
            eta: sc.model.eta(),
        },
        reserve: sc.reserve,
        grid: n,
        class: label,
        constraint,
        construction: transfer.construction(),
        theta_k: transfer.threshold(),
        full_insurance_cap: profile.full_insurance_cap(),
        ex_ante_revenue: report.ex_ante_revenue,
        feasibility: FeasibilitySummary {
            max_ic_violation: report.max_ic_violation,
            max_ir_violation: report.max_ir_violation,
            ic_location: report.ic_location,
            ir_location: report.ir_location,
            max_envelope_residual: report.max_envelope_residual,
        },
    };

    let table = transfer.tabulate();
    let winning = table.winning_payoffs();
    let losing = table.losing_payoffs();
    let theta_k = transfer.threshold().map(num).unwrap_or_default();
    let mut csv = Csv::new(&[
        "theta",
        "X",
        "Xmin",
        "tw",
        "tl",
        "winning_payoff",
        "losing_payoff",
        "theta_K",
    ]);
    for i in 0..table.nodes.len() {
        csv.row([
            num(table.nodes[i]),
            num(profile.x()[i]),
            num(profile.xmin()[i]),
            num(table.tw[i]),
            num(table.tl[i]),
            num(winning[i]),
            num(losing[i]),
            theta_k.clone(),
        ]);
    }
    prepare_dir(&out)?;
    write_json_file(&artifact, &out.join("mechanism.json"))?;
    write_csv(&csv, &out.join("curves.csv"))
}

pub fn compare(cfg: &ScenarioConfig, out: PathBuf, n: usize) -> Result<(), CliError> {
    let sc = scenario(cfg, n)?;
    let profile = &sc.profile;
    let cap = match cfg.class()? {
        Some(ClassChoice::LimitedPremium(cap)) => cap,
        _ => Cap::Infinite,
    };
    let hybrid_label = match cap {
        Cap::Finite(k) => format!("OptimalHybrid({})", num(k)),
        Cap::Infinite => "OptimalHybrid(inf)".to_string(),
    };
    let formats = [
        ("FPA".to_string(), Format::FirstPrice),
        ("APA".to_string(), Format::AllPay),
        ("SPA".to_string(), Format::SecondPrice),
        ("FullInsurance".to_string(), Format::FullInsurance),
        (hybrid_label, Format::OptimalHybrid(resolve_cap(cap, profile))),
    ];

    let mut csv = Csv::new(&[
        "format",
        "ex_ante_revenue",
        "max_ic_violation",
        "max_ir_violation",
        "envelope_residual",
        "status",
    ]);
    let mut infeasible = Vec::new();
    for (label, format) in formats {
        let report = standard_format(profile, format).and_then(|m| mechanism_report(&m));
        match report {
            Ok(r) => {
                let status = match check_feasible(&label, &r) {
                    Ok(()) => "ok",
                    Err(e) => {
                        infeasible.push(e.to_string());
                        "infeasible"
                    }
                };
                csv.row([
                    label,
                    num(r.ex_ante_revenue),
                    num(r.max_ic_violation),
                    num(r.max_ir_violation),
                    num(r.max_envelope_residual),
                    status.to_string(),
                ]);
            }
            Err(Error::Unsupported(msg)) => {
                eprintln!("skipped {label}: {msg}");
                csv.row([label.as_str(), "", "", "", "", "skipped"]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    prepare_dir(&out)?;
    write_csv(&csv, &out.join("compare.csv"))?;
    if infeasible.is_empty() {
        Ok(())
    } else {
        Err(CliError::Feasibility(infeasible.join("; ")))
    }
}

#[derive(Serialize)]
struct ReserveArtifact {
    ambiguity: AmbiguitySummary,
    reserve: f64,
    apa_reserve: f64,
    nodes: Vec<f64>,
    virtual_value: Vec<f64>,
}

pub fn reserve(cfg: &ScenarioConfig, out: PathBuf, n: usize) -> Result<(), CliError> {
    let belief = cfg.belief()?;
    let model = cfg.ambiguity()?;
    let result = endogenous_allocation(&belief, &model, n)?;
    let artifact = ReserveArtifact {
        ambiguity: AmbiguitySummary {
            divergence: model.divergence().label(),
            eta: model.eta(),
        },
        reserve: result.reserve,
        apa_reserve: result.apa_reserve,
        nodes: result.nodes,
        virtual_value: result.virtual_value,
    };
    prepare_dir(&out)?;
    write_json_file(&artifact, &out.join("reserve.json"))
}
