//! Falsification-based certification of the structural hypotheses:
//! hemicontinuity, local monotonicity, coercivity, growth, the η/ρ
//! growth-and-subadditivity bounds, strong monotonicity of M, the
//! Gagliardo–Nirenberg constant estimator, and the closed-form
//! admissibility gates.
//!
//! Nothing here proves an inequality; a check fails loudly on a sampled
//! counterexample and otherwise reports the fitted constants.

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::basis::{grid_deriv, lq_norm, pairing, to_grid, GelfandTriple, SpectralField};
use crate::error::{Error, Result};
use crate::models::{Kind, ModelOperator};
use crate::rng;
use crate::testutil::sample_field_decay;

/// Outcome of one sampled condition check.
#[derive(Debug, Clone, Serialize)]
pub struct ConditionEntry {
    pub name: String,
    pub n_samples: usize,
    /// Positive margin = violation (after subtracting the fitted C).
    pub worst_margin: f64,
    /// Sample index of the worst margin.
    pub witness: Option<u64>,
    /// Minimal constant making all samples pass (inequality-specific).
    pub c_est: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub model: String,
    pub seed: u64,
    pub budget: usize,
    pub entries: Vec<ConditionEntry>,
    pub c_mono_est: Option<f64>,
    pub pass: bool,
}

/// Sampling ladder: decay exponents {0.5, 1, 2} crossed with geometric
/// amplitudes 2^{−3..6}, cycled deterministically over the sample index.
fn ladder_sample(triple: &Arc<GelfandTriple>, seed: u64, idx: u64, stream: u64) -> SpectralField {
    let decay = [0.5, 1.0, 2.0][(idx % 3) as usize];
    let amp = 2.0_f64.powi(-3 + (idx % 10) as i32);
    sample_field_decay(triple, amp, decay, rng::mix(&[seed, stream, idx]))
}

/// (A1)-style hemicontinuity: continuity of s ↦ ⟨A(v₁+s·v₂), v⟩, checked
/// by requiring the max successive jump to shrink under s-grid refinement.
pub fn check_hemicontinuity(model: &ModelOperator, budget: usize, seed: u64) -> ConditionEntry {
    let n = budget.max(1);
    let results: Vec<(f64, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let v1 = ladder_sample(&model.triple, seed, i, 101);
            let v2 = ladder_sample(&model.triple, seed, i, 102);
            let v = ladder_sample(&model.triple, seed, i, 103);
            let max_jump = |pts: usize| -> f64 {
                let mut prev = f64::NAN;
                let mut worst = 0.0_f64;
                for j in 0..=pts {
                    let s = j as f64 / pts as f64;
                    let arg = v1.add(&v2.scale(s));
                    let val = pairing(&model.apply(&arg), &v).unwrap();
                    if j > 0 {
                        worst = worst.max((val - prev).abs());
                    }
                    prev = val;
                }
                worst
            };
            let coarse = max_jump(16);
            let fine = max_jump(64);
            // Continuity ⇒ jumps shrink ∝ step; allow a factor-2 slack.
            (fine - 0.5 * coarse - 1e-9, i)
        })
        .collect();
    finish_entry("hemicontinuity (A1)", n, results, None)
}

fn finish_entry(
    name: &str,
    n: usize,
    margins: Vec<(f64, u64)>,
    c_est: Option<f64>,
) -> ConditionEntry {
    let (worst, witness) = margins
        .into_iter()
        .fold((f64::NEG_INFINITY, 0), |acc, m| if m.0 > acc.0 { m } else { acc });
    ConditionEntry {
        name: name.into(),
        n_samples: n,
        worst_margin: worst,
        witness: Some(witness),
        c_est,
        pass: worst <= 0.0,
    }
}

/// (A2): 2⟨A(v₁)−A(v₂), v₁−v₂⟩ ≤ (C + η(v₁) + ρ(v₂))‖v₁−v₂‖_H².
/// Reports the minimal C over the sample set and the margin against it.
pub fn check_local_monotonicity(
    model: &ModelOperator,
    budget: usize,
    seed: u64,
) -> (ConditionEntry, Vec<f64>) {
    let n = budget.max(1);
    let ratios: Vec<(f64, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let v1 = ladder_sample(&model.triple, seed, i, 201);
            let v2 = ladder_sample(&model.triple, seed, i, 202);
            let d = v1.sub(&v2);
            let h2 = d.h_norm().powi(2);
            if h2 < 1e-28 {
                return (f64::NEG_INFINITY, i);
            }
            let lhs = 2.0 * pairing(&model.apply(&v1).sub(&model.apply(&v2)), &d).unwrap();
            let locality = (model.eta(&v1) + model.rho(&v2)) * h2;
            ((lhs - locality) / h2, i)
        })
        .collect();
    let c_est = ratios
        .iter()
        .map(|r| r.0)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let margins: Vec<f64> = ratios.iter().map(|r| r.0 - c_est).collect();
    let entry = finish_entry(
        "local monotonicity (A2)",
        n,
        ratios.iter().map(|r| (r.0 - c_est - 1e-12, r.1)).collect(),
        Some(c_est),
    );
    (entry, margins)
}

/// (A2′) for M: 2⟨M(v₁)−M(v₂), v₁−v₂⟩ ≤ −c‖v₁−v₂‖_V^α. The raw pairing
/// must be ≤ 0 for every sample (hard), and c_mono_est is the minimal
/// sampled ratio, optionally polished by local descent from the worst
/// sample.
pub fn check_strong_monotonicity(
    model: &ModelOperator,
    budget: usize,
    seed: u64,
    polish: bool,
) -> (ConditionEntry, f64, Vec<f64>) {
    let n = budget.max(1);
    let alpha = model.constants.alpha;
    let samples: Vec<(f64, f64, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let v1 = ladder_sample(&model.triple, seed, i, 301);
            let v2 = ladder_sample(&model.triple, seed, i, 302);
            let d = v1.sub(&v2);
            let va = d.v_norm().powf(alpha);
            let lhs =
                2.0 * pairing(&model.monotone_part(&v1).sub(&model.monotone_part(&v2)), &d)
                    .unwrap();
            let ratio = if va > 1e-28 { -lhs / va } else { f64::INFINITY };
            (lhs, ratio, i)
        })
        .collect();
    let margins: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let mut c_est = samples.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let worst_idx = samples
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|s| s.2)
        .unwrap_or(0);
    if polish {
        c_est = c_est.min(polish_mono_ratio(model, seed, worst_idx));
    }
    let entry = finish_entry(
        "strong monotonicity (A2')",
        n,
        samples.iter().map(|s| (s.0, s.2)).collect(),
        Some(c_est),
    );
    (entry, c_est, margins)
}

/// Derivative-free descent on the monotonicity ratio −2⟨ΔM,d⟩/‖d‖_V^α
/// starting from the worst sampled pair; shrinking random perturbations.
fn polish_mono_ratio(model: &ModelOperator, seed: u64, idx: u64) -> f64 {
    let alpha = model.constants.alpha;
    let ratio = |v1: &SpectralField, d: &SpectralField| -> f64 {
        let va = d.v_norm().powf(alpha);
        if va < 1e-28 {
            return f64::INFINITY;
        }
        let v2 = v1.sub(d);
        let lhs = 2.0
            * pairing(&model.monotone_part(v1).sub(&model.monotone_part(&v2)), d).unwrap();
        -lhs / va
    };
    let v1 = ladder_sample(&model.triple, seed, idx, 301);
    let v2 = ladder_sample(&model.triple, seed, idx, 302);
    let mut d = v1.sub(&v2);
    let mut best = ratio(&v1, &d);
    let mut step = 0.5;
    for it in 0..400u64 {
        let pert = sample_field_decay(&model.triple, step, 0.5, rng::mix(&[seed, 0xB055, it]));
        let cand = d.add(&pert.scale(d.h_norm().max(1e-8)));
        let r = ratio(&v1, &cand);
        if r < best {
            best = r;
            d = cand;
        } else {
            step *= 0.97;
        }
    }
    best
}

/// (A3): 2⟨A(v),v⟩ ≤ −γ‖v‖_V^α + K‖v‖_H² + C; reports minimal C.
pub fn check_coercivity(model: &ModelOperator, budget: usize, seed: u64) -> (ConditionEntry, Vec<f64>) {
    let n = budget.max(1);
    let c = &model.constants;
    let slacks: Vec<(f64, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let v = ladder_sample(&model.triple, seed, i, 401);
            let lhs = 2.0 * pairing(&model.apply(&v), &v).unwrap();
            let rhs = -c.gamma * v.v_norm().powf(c.alpha) + c.k_coer * v.h_norm().powi(2);
            (lhs - rhs, i)
        })
        .collect();
    let c_est = slacks
        .iter()
        .map(|s| s.0)
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.0);
    let margins: Vec<f64> = slacks.iter().map(|s| s.0 - c_est).collect();
    let entry = finish_entry(
        "coercivity (A3)",
        n,
        slacks.iter().map(|s| (s.0 - c_est - 1e-12, s.1)).collect(),
        Some(c_est),
    );
    (entry, margins)
}

/// (A4): ‖A(v)‖_{V*}^{α/(α−1)} ≤ C(1+‖v‖_V^α)(1+‖v‖_H^β); reports the
/// minimal admissible C.
pub fn check_growth(model: &ModelOperator, budget: usize, seed: u64) -> (ConditionEntry, Vec<f64>) {
    let n = budget.max(1);
    let c = &model.constants;
    let ratios: Vec<(f64, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let v = ladder_sample(&model.triple, seed, i, 501);
            let lhs = model
                .apply(&v)
                .v_star_norm()
                .powf(c.alpha / (c.alpha - 1.0));
            let rhs = (1.0 + v.v_norm().powf(c.alpha)) * (1.0 + v.h_norm().powf(c.beta));
            (lhs / rhs, i)
        })
        .collect();
    let c_est = ratios.iter().map(|r| r.0).fold(0.0_f64, f64::max);
    let margins: Vec<f64> = ratios.iter().map(|r| r.0 - c_est).collect();
    let entry = finish_entry(
        "growth (A4)",
        n,
        ratios.iter().map(|r| (r.0 - c_est - 1e-12, r.1)).collect(),
        Some(c_est),
    );
    (entry, margins)
}

/// η,ρ growth bound η(v)+ρ(v) ≤ C(1+‖v‖_V^α)(1+‖v‖_H^κ) and
/// subadditivity η(v₁+v₂) ≤ C(η(v₁)+η(v₂)).
pub fn check_eta_rho(model: &ModelOperator, budget: usize, seed: u64) -> Vec<ConditionEntry> {
    let n = budget.max(1);
    let c = &model.constants;
    let growth: Vec<(f64, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let v = ladder_sample(&model.triple, seed, i, 601);
            let lhs = model.eta(&v) + model.rho(&v);
            let rhs = (1.0 + v.v_norm().powf(c.alpha)) * (1.0 + v.h_norm().powf(c.kappa));
            (lhs / rhs, i)
        })
        .collect();
    let cg = growth.iter().map(|g| g.0).fold(0.0_f64, f64::max);
    let growth_entry = finish_entry(
        "eta/rho growth",
        n,
        growth.iter().map(|g| (g.0 - cg - 1e-12, g.1)).collect(),
        Some(cg),
    );

    let sub: Vec<(f64, u64)> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let v1 = ladder_sample(&model.triple, seed, i, 602);
            let v2 = ladder_sample(&model.triple, seed, i, 603);
            let parts = model.eta(&v1) + model.eta(&v2);
            if parts < 1e-28 {
                return (f64::NEG_INFINITY, i);
            }
            (model.eta(&v1.add(&v2)) / parts, i)
        })
        .collect();
    let cs = sub.iter().map(|s| s.0).fold(0.0_f64, f64::max);
    let sub_entry = finish_entry(
        "eta subadditivity",
        n,
        sub.iter().map(|s| (s.0 - cs - 1e-12, s.1)).collect(),
        Some(cs),
    );
    vec![growth_entry, sub_entry]
}

/// Gagliardo–Nirenberg target: ‖D^n u‖_{L^q} ≤ C‖u‖_{W^{m,2}}^θ‖u‖_{L²}^{1−θ}
/// (seminorm form). The tuple must satisfy the scaling relation
/// 1/q = 1/2 + n/d − mθ/d and n/m ≤ θ ≤ 1.
#[derive(Debug, Clone, Copy)]
pub struct GnTarget {
    pub n: u32,
    pub q: f64,
    pub m: u32,
    pub theta: f64,
}

fn gn_seminorm_lq(triple: &GelfandTriple, u: &SpectralField, n: u32, q: f64) -> f64 {
    match n {
        0 => lq_norm(triple, &to_grid(u), q),
        1 => {
            let dims = triple.spec.spatial_dimension as usize;
            if dims == 1 {
                lq_norm(triple, &grid_deriv(u, 0), q)
            } else {
                // |∇u| pointwise over all components and directions.
                let dx = grid_deriv(u, 0);
                let dy = grid_deriv(u, 1);
                let np = dx.comps[0].len();
                let mag: Vec<f64> = (0..np)
                    .map(|j| {
                        let mut s = 0.0;
                        for c in 0..dx.comps.len() {
                            s += dx.comps[c][j].powi(2) + dy.comps[c][j].powi(2);
                        }
                        s.sqrt()
                    })
                    .collect();
                if q.is_infinite() {
                    mag.iter().cloned().fold(0.0, f64::max)
                } else {
                    mag.iter()
                        .zip(triple.quad_weights())
                        .map(|(m, w)| m.powf(q) * w)
                        .sum::<f64>()
                        .powf(1.0 / q)
                }
            }
        }
        _ => panic!("seminorm order > 1 not needed"),
    }
}

fn gn_sobolev_h(u: &SpectralField, m: u32) -> f64 {
    u.coeffs
        .iter()
        .zip(&u.triple.mu)
        .map(|(c, mu)| mu.powi(m as i32) * c * c)
        .sum::<f64>()
        .sqrt()
}

fn gn_ratio(triple: &Arc<GelfandTriple>, t: &GnTarget, u: &SpectralField) -> f64 {
    let denom = gn_sobolev_h(u, t.m).powf(t.theta) * u.h_norm().powf(1.0 - t.theta);
    if denom < 1e-28 {
        return 0.0;
    }
    gn_seminorm_lq(triple, u, t.n, t.q) / denom
}

/// Observed supremum of the GN ratio (a certified lower bound for C):
/// random fields plus random-perturbation ascent polishing.
pub fn estimate_gn_constant(
    triple: &Arc<GelfandTriple>,
    target: GnTarget,
    budget: usize,
    seed: u64,
) -> Result<f64> {
    let d = triple.spec.spatial_dimension as f64;
    let scaling = 0.5 + target.n as f64 / d - target.m as f64 * target.theta / d;
    if (1.0 / target.q - scaling).abs() > 1e-9 {
        return Err(Error::config(
            "gn_target",
            "exponents violate the scaling relation 1/q = 1/2 + n/d - m*theta/d",
        ));
    }
    if target.theta < target.n as f64 / target.m as f64 - 1e-12 || target.theta > 1.0 + 1e-12 {
        return Err(Error::config("gn_target", "requires n/m <= theta <= 1"));
    }
    let n = budget.max(8);
    let best_sampled: (f64, u64) = (0..n as u64)
        .into_par_iter()
        .map(|i| (gn_ratio(triple, &target, &ladder_sample(triple, seed, i, 701)), i))
        .reduce(
            || (f64::NEG_INFINITY, 0),
            |a, b| if b.0 > a.0 { b } else { a },
        );
    // Polish by ascent from the best sample.
    let mut u = ladder_sample(triple, seed, best_sampled.1, 701);
    let mut best = best_sampled.0;
    let mut step = 0.3;
    for it in 0..600u64 {
        let pert = sample_field_decay(triple, step, 0.5, rng::mix(&[seed, 0x6E47, it]));
        let cand = u.add(&pert.scale(u.h_norm().max(1e-8)));
        let r = gn_ratio(triple, &target, &cand);
        if r > best {
            best = r;
            u = cand;
        } else {
            step *= 0.98;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize)]
pub struct GateResult {
    pub gate: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Closed-form admissibility gates relevant to the model.
pub fn check_admissibility(model: &ModelOperator) -> Vec<GateResult> {
    let c = &model.constants;
    let lambda = model.triple.lambda;
    let mut gates = vec![GateResult {
        gate: "beta*(alpha-1) <= 2".into(),
        value: c.beta * (c.alpha - 1.0),
        bound: 2.0,
        pass: c.beta * (c.alpha - 1.0) <= 2.0 + 1e-12,
    }];
    // Model-specific gates come before the generic alpha = 2 gate: when
    // both fail simultaneously (they coincide on the Cahn-Hilliard
    // boundary) the refusal names the sharper constraint.
    if let Kind::CahnHilliard { phi, c_gn } = &model.kind {
        let c_phi = phi.c_phi().unwrap_or(f64::INFINITY);
        let bound = lambda.sqrt() / (2.0 * c_gn * c_gn);
        gates.push(GateResult {
            gate: "C_phi < sqrt(lambda)/(2*C_GN^2)".into(),
            value: c_phi,
            bound,
            pass: c_phi < bound,
        });
    }
    if (c.alpha - 2.0).abs() < 1e-12 {
        gates.push(GateResult {
            gate: "K < gamma*lambda/4".into(),
            value: c.k_coer,
            bound: c.gamma * lambda / 4.0,
            pass: c.k_coer < c.gamma * lambda / 4.0,
        });
    }
    gates
}

/// Hard form of the gates: refuses with the failed gate named.
pub fn enforce_admissibility(model: &ModelOperator) -> Result<()> {
    for g in check_admissibility(model) {
        if !g.pass {
            return Err(Error::GateRefused {
                gate: g.gate,
                reason: format!("value {} violates bound {}", g.value, g.bound),
            });
        }
    }
    Ok(())
}

/// Run every sampled check and assemble the report.
pub fn certify(model: &ModelOperator, budget: usize, seed: u64) -> ConditionReport {
    let mut entries = Vec::new();
    entries.push(check_hemicontinuity(model, (budget / 20).max(5), seed));
    let (a2, _) = check_local_monotonicity(model, budget, seed);
    entries.push(a2);
    let (a2p, c_mono_est, _) = check_strong_monotonicity(model, budget, seed, false);
    entries.push(a2p);
    let (a3, _) = check_coercivity(model, budget, seed);
    entries.push(a3);
    let (a4, _) = check_growth(model, budget, seed);
    entries.push(a4);
    entries.extend(check_eta_rho(model, budget, seed));
    for g in check_admissibility(model) {
        entries.push(ConditionEntry {
            name: format!("gate: {}", g.gate),
            n_samples: 0,
            worst_margin: g.value - g.bound,
            witness: None,
            c_est: None,
            pass: g.pass,
        });
    }
    let pass = entries.iter().all(|e| e.pass);
    ConditionReport {
        model: model.name.clone(),
        seed,
        budget,
        entries,
        c_mono_est: Some(c_mono_est),
        pass,
    }
}
