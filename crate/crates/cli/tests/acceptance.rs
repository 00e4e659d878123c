//! Acceptance suite: one pass/fail line per criterion. Runs without the libtest
//! harness so that the summary is always printed.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use ambiguity_auction::{
    binary_divergence, discrete_divergence, efficient_profile, endogenous_allocation,
    envelope_residual, feasibility_check, max_probability, min_probability, optimal_limited_premium,
    optimal_winner_favored, premium_threshold, revenue, solve_interim_lp, sosd_property_check,
    standard_format, truthful_utilities, worst_case_expectation, AmbiguityModel, ConstraintClass,
    Format, InterimProfile, Mechanism, PayoffSchedule, Phi, ReferenceBelief,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn lib<T>(r: ambiguity_auction::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// Independent oracles

fn xlogx_ratio(q: f64, p: f64) -> f64 {
    if q == 0.0 {
        0.0
    } else {
        q * (q / p).ln()
    }
}

fn kl_binary(q: f64, p: f64) -> f64 {
    if (p == 0.0 && q > 0.0) || (p == 1.0 && q < 1.0) {
        return f64::INFINITY;
    }
    xlogx_ratio(q, p) + xlogx_ratio(1.0 - q, 1.0 - p)
}

fn kl(q: &[f64], p: &[f64]) -> f64 {
    q.iter().zip(p).map(|(&qi, &pi)| xlogx_ratio(qi, pi)).sum()
}

/// First and last q on a 1e-6 lattice with `KL(q || p) <= eta`.
fn scan_extremes(p: f64, eta: f64) -> (f64, f64) {
    let steps = 1_000_000;
    let mut first = None;
    let mut last = 0.0;
    for i in 0..=steps {
        let q = i as f64 / steps as f64;
        if kl_binary(q, p) <= eta {
            first.get_or_insert(q);
            last = q;
        }
    }
    (first.expect("q = p is always feasible"), last)
}

/// Exponential tilting of `p` toward low payoffs, with the temperature set by
/// bisection so that the tilted belief sits on the boundary of the ball.
fn tilted_minimum(v: &[f64], p: &[f64], eta: f64) -> f64 {
    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let floor_mass: f64 = v.iter().zip(p).filter(|(x, _)| **x == vmin).map(|(_, w)| w).sum();
    if eta >= -floor_mass.ln() {
        return vmin;
    }
    let tilt = |log_t: f64| -> Vec<f64> {
        let t = log_t.exp();
        let w: Vec<f64> = v.iter().zip(p).map(|(x, pi)| pi * (-(x - vmin) / t).exp()).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    };
    let (mut lo, mut hi) = (-40.0f64, 40.0f64);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        // KL of the tilt decreases in the temperature.
        if kl(&tilt(mid), p) > eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    tilt(hi).iter().zip(v).map(|(q, x)| q * x).sum()
}

fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| -(rng.gen::<f64>().max(1e-300)).ln()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn random_schedule(rng: &mut ChaCha8Rng, n: usize) -> (Vec<f64>, Vec<f64>) {
    let values = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    (values, raw.into_iter().map(|x| x / s).collect())
}

/// Smallest `q` with binary `KL(q || p) <= eta`.
fn oracle_min_probability(p: f64, eta: f64) -> f64 {
    if p >= 1.0 {
        return 1.0;
    }
    if kl_binary(0.0, p) <= eta {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, p);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kl_binary(mid, p) > eta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, m: usize) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / m as f64;
    let mut s = f(a) + f(b);
    for i in 1..m {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

// ---------------------------------------------------------------------------
// Scenario helpers

fn uniform() -> ReferenceBelief {
    ReferenceBelief::uniform(0.0, 1.0).unwrap()
}

fn uniform_profile(model: &AmbiguityModel) -> Result<InterimProfile, String> {
    lib(efficient_profile(&uniform(), model, 0.0, 101))
}

/// The limited-premium constructions at three caps plus the winner-favored one.
fn constructions(profile: &InterimProfile) -> Result<Vec<(String, Mechanism)>, String> {
    let mut out = Vec::new();
    for k in [0.0, 0.08, 0.5] {
        out.push((
            format!("limited-premium K={k}"),
            Mechanism::WinLose(lib(optimal_limited_premium(profile, k))?),
        ));
    }
    out.push((
        "winner-favored".into(),
        Mechanism::WinLose(optimal_winner_favored(profile)),
    ));
    Ok(out)
}

fn envelope_models() -> Vec<(AmbiguityModel, f64, &'static str)> {
    vec![
        (AmbiguityModel::contamination(0.0).unwrap(), 1e-9, "contamination eta=0"),
        (AmbiguityModel::contamination(0.2).unwrap(), 1e-9, "contamination eta=0.2"),
        (AmbiguityModel::relative_entropy(0.1).unwrap(), 1e-4, "relative-entropy eta=0.1"),
        (AmbiguityModel::relative_entropy(0.3).unwrap(), 1e-4, "relative-entropy eta=0.3"),
    ]
}

// ---------------------------------------------------------------------------
// Criteria

fn c01_contamination_exact() -> Outcome {
    let mut worst: f64 = 0.0;
    for eta in [0.1, 0.2, 0.5] {
        let m = lib(AmbiguityModel::contamination(eta))?;
        for i in 0..=200 {
            let p = i as f64 / 200.0;
            // The certain event keeps probability 1 (criterion 4, D3).
            let expected = if p < 1.0 { (1.0 - eta) * p } else { 1.0 };
            let err = (lib(min_probability(p, &m))? - expected).abs();
            worst = worst.max(err);
            ensure(err <= 1e-12, || format!("eta={eta} p={p}: error {err:e}"))?;
        }
    }
    Ok(format!("max error {worst:.1e}"))
}

fn c02_relative_entropy_scan() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let p = rng.gen_range(0.01..0.99);
        let eta = rng.gen_range(0.005..1.0);
        let m = lib(AmbiguityModel::relative_entropy(eta))?;
        let (lo, hi) = scan_extremes(p, eta);
        let e1 = (lib(min_probability(p, &m))? - lo).abs();
        let e2 = (lib(max_probability(p, &m))? - hi).abs();
        worst = worst.max(e1).max(e2);
        ensure(e1 <= 1e-5 && e2 <= 1e-5, || {
            format!("p={p} eta={eta}: min error {e1:e}, max error {e2:e}")
        })?;
    }
    Ok(format!("max error {worst:.1e}"))
}

fn c03_dual_vs_brute_force() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    let mut below: f64 = 0.0;
    for eta in [0.05, 0.2] {
        let m = lib(AmbiguityModel::relative_entropy(eta))?;
        for trial in 0..100 {
            let n = rng.gen_range(5..=20);
            let (v, p) = random_schedule(&mut rng, n);
            let pi = lib(PayoffSchedule::new(v.clone(), p.clone()))?;
            let got = lib(worst_case_expectation(&pi, &m))?.value;
            let tilted = tilted_minimum(&v, &p, eta);
            let err = (got - tilted).abs();
            worst = worst.max(err);
            ensure(err <= 1e-5, || {
                format!("eta={eta} trial {trial}: solver {got} vs tilted primal {tilted}")
            })?;
            // No feasible point of the simplex does better than the solver.
            for _ in 0..300 {
                let r = random_simplex(&mut rng, n);
                let mix = |t: f64| -> Vec<f64> {
                    p.iter().zip(&r).map(|(a, b)| (1.0 - t) * a + t * b).collect()
                };
                let t = if kl(&r, &p) <= eta {
                    1.0
                } else {
                    let (mut lo, mut hi) = (0.0, 1.0);
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if kl(&mix(mid), &p) <= eta {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    lo
                };
                let e: f64 = mix(t).iter().zip(&v).map(|(q, x)| q * x).sum();
                below = below.max(got - e);
                ensure(e >= got - 1e-9, || {
                    format!("eta={eta} trial {trial}: feasible belief attains {e} < solver {got}")
                })?;
            }
        }
    }
    Ok(format!("max error vs primal {worst:.1e}, max sampled undercut {below:.1e}"))
}

fn c04_divergence_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let families = |eta: f64| -> Vec<AmbiguityModel> {
        vec![
            AmbiguityModel::relative_entropy(eta).unwrap(),
            AmbiguityModel::contamination(eta.min(0.99)).unwrap(),
            AmbiguityModel::custom_phi(Phi::chi_squared(), eta).unwrap(),
        ]
    };
    // D1: zero at Q = P.
    for trial in 0..1000 {
        let n = rng.gen_range(2..=10);
        let p = random_simplex(&mut rng, n);
        for m in families(0.1) {
            let d = lib(discrete_divergence(&p, &p, &m))?;
            ensure(d.abs() <= 1e-12, || format!("D1 trial {trial} {}: D(P||P) = {d:e}", m.divergence().label()))?;
            let b = lib(binary_divergence(p[0], p[0], &m))?;
            ensure(b.abs() <= 1e-12, || format!("D1 trial {trial}: binary D(p||p) = {b:e}"))?;
        }
    }
    // D3: the certain and the null event keep their probability.
    for trial in 0..1000 {
        let eta = rng.gen_range(0.0..0.99);
        for m in families(eta) {
            let fixed = [
                lib(min_probability(0.0, &m))?,
                lib(max_probability(0.0, &m))?,
                lib(min_probability(1.0, &m))?,
                lib(max_probability(1.0, &m))?,
            ];
            ensure(fixed == [0.0, 0.0, 1.0, 1.0], || {
                format!("D3 trial {trial} {} eta={eta}: {fixed:?}", m.divergence().label())
            })?;
        }
    }
    // D4: coarsening never increases the divergence.
    for trial in 0..1000 {
        let n = rng.gen_range(2..=10);
        let p = random_simplex(&mut rng, n);
        let q = random_simplex(&mut rng, n);
        let cells = rng.gen_range(1..=n);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..cells)).collect();
        let coarse = |x: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; cells];
            for (xi, &l) in x.iter().zip(&labels) {
                out[l] += xi;
            }
            out
        };
        let (cq, cp) = (coarse(&q), coarse(&p));
        for m in families(0.1) {
            let fine = lib(discrete_divergence(&q, &p, &m))?;
            let grouped = lib(discrete_divergence(&cq, &cp, &m))?;
            // Cell 0 against the rest, unless that event is empty or certain.
            let proper = labels.contains(&0) && labels.iter().any(|&l| l != 0);
            let event = if proper {
                lib(binary_divergence(cq[0], cp[0], &m))?
            } else {
                grouped
            };
            let tol = 1e-12 * (1.0 + fine.abs());
            ensure(grouped <= fine + tol && event <= fine + tol, || {
                format!(
                    "D4 trial {trial} {}: fine {fine}, partition {grouped}, event {event}",
                    m.divergence().label()
                )
            })?;
        }
    }
    Ok("D1, D3, D4: 1000 trials each, 3 families, no failures".into())
}

fn c05_sosd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut trials = 0;
    for family in ["relative-entropy", "contamination"] {
        for trial in 0..1000 {
            let eta = rng.gen_range(0.01..0.9);
            let m = match family {
                "relative-entropy" => lib(AmbiguityModel::relative_entropy(eta))?,
                _ => lib(AmbiguityModel::contamination(eta))?,
            };
            let n = rng.gen_range(2..=15);
            let (v, p) = random_schedule(&mut rng, n);
            let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
            let pi = lib(PayoffSchedule::new(v, p))?;
            let ok = lib(sosd_property_check(&pi, &labels, &m))?;
            ensure(ok, || format!("{family} trial {trial} eta={eta}: conditional mean lowers the worst case"))?;
            trials += 1;
        }
    }
    Ok(format!("{trials} trials, no failures"))
}

fn c06_envelope() -> Outcome {
    let mut summary = Vec::new();
    for (model, tol, name) in envelope_models() {
        let profile = uniform_profile(&model)?;
        let nodes = profile.nodes().to_vec();
        let eta = model.eta();
        // Envelope U(θ) = ∫ X^min computed outside the library.
        let oracle: Vec<f64> = if model.is_contamination() {
            nodes.iter().map(|t| (1.0 - eta) * t * t / 2.0).collect()
        } else {
            let kink = 1.0 - (-eta).exp();
            let xmin = |t: f64| oracle_min_probability(t, eta);
            nodes
                .iter()
                .map(|&t| simpson(xmin, 0.0, t.min(kink), 2000) + simpson(xmin, kink.min(t), t, 2000))
                .collect()
        };
        let mut worst: f64 = 0.0;
        for (label, mech) in constructions(&profile)? {
            let residual = lib(envelope_residual(&mech))?;
            let utilities = lib(truthful_utilities(&mech))?;
            let vs_oracle = utilities
                .iter()
                .zip(&oracle)
                .map(|(u, o)| (u - o).abs())
                .fold(0.0, f64::max);
            worst = worst.max(residual).max(vs_oracle);
            ensure(residual <= tol && vs_oracle <= tol, || {
                format!("{name}, {label}: residual {residual:e}, vs oracle {vs_oracle:e} (tol {tol:e})")
            })?;
        }
        summary.push(format!("{name} {worst:.1e}"));
    }
    Ok(summary.join("; "))
}

fn c07_ic_ir() -> Outcome {
    let (mut ic, mut ir, mut spa_ic): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for (model, _, name) in envelope_models() {
        let profile = uniform_profile(&model)?;
        for (label, mech) in constructions(&profile)? {
            let f = lib(feasibility_check(&mech))?;
            ic = ic.max(f.max_ic_violation);
            ir = ir.max(f.max_ir_violation);
            ensure(f.max_ic_violation <= 1e-4 && f.max_ir_violation <= 1e-8, || {
                format!("{name}, {label}: {f:?}")
            })?;
        }
        let spa = lib(standard_format(&profile, Format::SecondPrice))?;
        let f = lib(feasibility_check(&spa))?;
        spa_ic = spa_ic.max(f.max_ic_violation);
        ir = ir.max(f.max_ir_violation);
        ensure(f.max_ic_violation <= 1e-12 && f.max_ir_violation <= 1e-8, || {
            format!("{name}, SPA: {f:?}")
        })?;
    }
    Ok(format!("IC {ic:.1e}, IR {ir:.1e}, SPA IC {spa_ic:.1e}"))
}

fn c08_classical() -> Outcome {
    let profile = uniform_profile(&AmbiguityModel::none())?;
    let fpa = lib(optimal_limited_premium(&profile, 0.0))?;
    let apa = optimal_winner_favored(&profile);
    let mut probes: Vec<f64> = profile.nodes().to_vec();
    probes.extend((0..1000).map(|i| (i as f64 + 0.37) / 1000.0));
    let mut worst: f64 = 0.0;
    for &t in &probes {
        let e1 = (fpa.eval(t).0 - t / 2.0).abs();
        let e2 = (apa.eval(t).0 - t * t / 2.0).abs();
        worst = worst.max(e1).max(e2);
        ensure(e1 <= 1e-9 && e2 <= 1e-9, || format!("theta={t}: FPA err {e1:e}, APA err {e2:e}"))?;
    }
    let mut revs = Vec::new();
    for format in [Format::FirstPrice, Format::AllPay, Format::SecondPrice] {
        let r = lib(revenue(&lib(standard_format(&profile, format))?))?.ex_ante;
        ensure((r - 1.0 / 3.0).abs() <= 1e-4, || format!("{format} revenue {r}"))?;
        revs.push(format!("{format} {r:.9}"));
    }
    Ok(format!("bid error {worst:.1e}; {}", revs.join(", ")))
}

fn c09_dominance() -> Outcome {
    let mut margins = Vec::new();
    for model in [
        AmbiguityModel::contamination(0.1).unwrap(),
        AmbiguityModel::contamination(0.3).unwrap(),
        AmbiguityModel::relative_entropy(0.1).unwrap(),
        AmbiguityModel::relative_entropy(0.3).unwrap(),
    ] {
        let name = format!("{} eta={}", model.divergence().label(), model.eta());
        let profile = uniform_profile(&model)?;
        let rev = |f: Format| -> Result<f64, String> {
            Ok(lib(revenue(&lib(standard_format(&profile, f))?))?.ex_ante)
        };
        let hybrid = rev(Format::OptimalHybrid(profile.full_insurance_cap()))?;
        let fpa = rev(Format::FirstPrice)?;
        let spa = rev(Format::SecondPrice)?;
        ensure(fpa >= spa - 1e-6, || format!("{name}: FPA {fpa} < SPA {spa}"))?;
        for f in [Format::FirstPrice, Format::AllPay, Format::SecondPrice, Format::FullInsurance] {
            let other = rev(f)?;
            ensure(hybrid >= other - 1e-6, || format!("{name}: hybrid {hybrid} < {f} {other}"))?;
        }
        margins.push(format!("{name}: FPA-SPA {:.2e}", fpa - spa));
    }
    Ok(margins.join("; "))
}

fn c10_lp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let (mut gap_max, mut res_max): (f64, f64) = (0.0, 0.0);
    for trial in 0..1000 {
        let x = rng.gen_range(0.1..1.0);
        let xmin = rng.gen_range(0.1..=x);
        let theta = rng.gen_range(0.0..1.0);
        let u0 = rng.gen_range(0.0..0.5);
        let class = match trial % 4 {
            0 => ConstraintClass::limited_premium(rng.gen_range(0.0..0.6)).unwrap(),
            1 => ConstraintClass::winner_favored(),
            2 => ConstraintClass::unconstrained(),
            _ => {
                let beta = rng.gen_range(0.5..=1.0);
                let alpha = rng.gen_range(0.0..=beta);
                ConstraintClass::new(alpha, beta, rng.gen_range(0.0..0.6)).unwrap()
            }
        };
        let sol = lib(solve_interim_lp(x, xmin, theta, u0, &class))?;
        let util = (sol.w * xmin + sol.l * (1.0 - xmin) - u0).abs();
        let cons = (class.alpha * (theta - sol.w) + class.beta * sol.l - class.cap).max(0.0);
        let order = (sol.l - sol.w).max(0.0);
        let obj = (sol.w * x + sol.l * (1.0 - x) - sol.objective).abs();
        let res = util.max(cons).max(order).max(obj);
        res_max = res_max.max(res);
        ensure(res <= 1e-10, || format!("trial {trial}: residuals {util:e} {cons:e} {order:e} {obj:e}"))?;

        // Brute force over (w, l) on the utility line, 1e-3 steps in w - l.
        let mut best = f64::INFINITY;
        let steps = 40_000;
        for i in 0..=steps {
            let d = i as f64 * 1e-3;
            let w = u0 + d * (1.0 - xmin);
            let l = u0 - d * xmin;
            if class.alpha * (theta - w) + class.beta * l <= class.cap + 1e-12 {
                best = best.min(w * x + l * (1.0 - x));
            }
        }
        ensure(best.is_finite(), || format!("trial {trial}: brute force found no feasible point"))?;
        let gap = best - sol.objective;
        gap_max = gap_max.max(gap.abs());
        ensure((-1e-10..=1.5e-3).contains(&gap), || {
            format!("trial {trial}: vertex {} vs brute force {best}", sol.objective)
        })?;
    }
    Ok(format!("max gap {gap_max:.1e}, max residual {res_max:.1e}"))
}

fn c11_hybrid_threshold() -> Outcome {
    let k = 0.08;
    let profile = uniform_profile(&AmbiguityModel::none())?;
    let t = lib(optimal_limited_premium(&profile, k))?;
    let theta_k = t.threshold().ok_or("no threshold")?;
    ensure((theta_k - 0.4).abs() <= 1e-8, || format!("theta_K = {theta_k}"))?;
    ensure((premium_threshold(&profile, k) - theta_k).abs() == 0.0, || "threshold mismatch".into())?;
    let mut above: Vec<f64> = profile.nodes().iter().cloned().filter(|&x| x > theta_k).collect();
    above.extend((1..=600).map(|i| theta_k + i as f64 * (1.0 - theta_k) / 600.0));
    for &x in &above {
        let losing = -t.eval(x).1;
        ensure((losing - k).abs() <= 1e-12, || format!("losing payoff {losing} at {x}"))?;
    }
    let eps = 1e-9;
    let win = |x: f64| x - t.eval(x).0;
    let jump = (win(theta_k - eps) - win(theta_k + eps)).abs();
    let lose_jump = (t.eval(theta_k - eps).1 - t.eval(theta_k + eps).1).abs();
    ensure(jump <= 1e-6 && lose_jump <= 1e-6, || format!("jumps: winning {jump:e}, losing {lose_jump:e}"))?;
    Ok(format!("theta_K = {theta_k}, winning-payoff jump {jump:.1e}"))
}

fn c12_reserve() -> Outcome {
    for eta in [0.0, 0.2, 0.5] {
        let m = lib(AmbiguityModel::contamination(eta))?;
        let b = uniform();
        let r = lib(endogenous_allocation(&b, &m, 101))?;
        ensure((r.reserve - 0.5).abs() <= 1e-9, || format!("eta={eta}: r* = {}", r.reserve))?;
        let expected = (1.0 - eta) * r.reserve * b.cdf(r.reserve);
        ensure(r.apa_reserve == expected, || format!("eta={eta}: apa {} vs {expected}", r.apa_reserve))?;
    }
    let m = lib(AmbiguityModel::contamination(0.2))?;
    let power = lib(ReferenceBelief::power(0.0, 1.0, 2.0))?;
    let rp = lib(endogenous_allocation(&power, &m, 101))?.reserve;
    ensure((rp - 1.0 / 3f64.sqrt()).abs() <= 1e-8, || format!("power r* = {rp}"))?;
    let shifted = lib(ReferenceBelief::uniform(1.0, 2.0))?;
    let rs = lib(endogenous_allocation(&shifted, &m, 101))?.reserve;
    ensure((rs - 1.0).abs() <= 1e-9, || format!("uniform [1,2] r* = {rs}"))?;
    Ok(format!("power r* = {rp:.12}"))
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect()
}

fn c13_cli_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_ambiguity-auction");
    let configs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut entries: Vec<PathBuf> = fs::read_dir(&configs)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = 0;
    for cfg in entries {
        let stem = cfg.file_stem().unwrap().to_string_lossy().into_owned();
        let sub = stem.split('_').next().unwrap().to_string();
        let mut outputs = Vec::new();
        for rep in 0..2 {
            let out = tmp.path().join(format!("{stem}-{rep}"));
            let status = Command::new(bin)
                .args([sub.as_str(), "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(status.status.success(), || {
                format!("{stem}: exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr))
            })?;
            outputs.push(read_outputs(&out));
            runs += 1;
        }
        ensure(!outputs[0].is_empty() && outputs[0] == outputs[1], || format!("{stem}: outputs differ"))?;
    }
    Ok(format!("{runs} runs over {} configs, identical outputs", runs / 2))
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("contamination transform exactness", c01_contamination_exact),
        ("relative-entropy extremes vs scan", c02_relative_entropy_scan),
        ("dual worst case vs brute force", c03_dual_vs_brute_force),
        ("divergence properties D1/D3/D4", c04_divergence_properties),
        ("conditional-mean monotonicity", c05_sosd),
        ("envelope identity", c06_envelope),
        ("IC/IR on the grid", c07_ic_ir),
        ("classical degeneracy", c08_classical),
        ("revenue dominance", c09_dominance),
        ("LP vertex optimality", c10_lp),
        ("hybrid threshold", c11_hybrid_threshold),
        ("endogenous reserve", c12_reserve),
        ("CLI determinism", c13_cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} [{secs:.1}s]: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} [{secs:.1}s]: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
