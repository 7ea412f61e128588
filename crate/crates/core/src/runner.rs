//! End-to-end experiment pipeline: admissibility and condition gates,
//! noise synthesis, stationary section, flow self-checks, absorption and
//! attractor estimation, and deterministic on-disk artifacts.
//!
//! Every file the runner writes is a pure function of (config, seed):
//! no wall-clock times, thread counts or pointers leak into artifacts,
//! so reruns produce bit-identical manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::attractor::{self, AttractorEstimate, FamilyRule, TemperedFamily};
use crate::basis::{build_triple, GelfandTriple, SpectralField};
use crate::conditions::{self, ConditionReport, GateResult};
use crate::config::{hex, RunConfig};
use crate::error::{Error, Result};
use crate::flow;
use crate::models::ModelOperator;
use crate::noise::{sample_path, NoisePath};
use crate::ou::{self, StationarySection};

pub struct Prepared {
    pub triple: Arc<GelfandTriple>,
    /// Drift operator A.
    pub a: ModelOperator,
    /// Strongly monotone OU operator M.
    pub m: ModelOperator,
}

/// Build the operators and refuse inadmissible configurations up front.
pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    cfg.validate()?;
    let triple = build_triple(&cfg.basis)?;
    let a = cfg.model.build(&triple)?;
    let m = cfg.ou_operator(&triple)?;
    conditions::enforce_admissibility(&a)?;
    conditions::enforce_admissibility(&m)?;
    Ok(Prepared { triple, a, m })
}

#[derive(Debug, Serialize)]
pub struct Certification {
    pub report: ConditionReport,
    pub gates: Vec<GateResult>,
}

/// Randomized condition checks plus closed-form gates; `Err` when any
/// entry fails, naming the first failing check.
pub fn certify_config(cfg: &RunConfig, prep: &Prepared) -> Result<Certification> {
    let report = conditions::certify(&prep.a, cfg.check_budget, cfg.seed);
    let gates = conditions::check_admissibility(&prep.a);
    if !report.pass {
        let failed = report
            .entries
            .iter()
            .find(|e| !e.pass)
            .map(|e| e.name.clone())
            .unwrap_or_default();
        return Err(Error::GateRefused {
            gate: failed,
            reason: "randomized condition check failed on the drift".into(),
        });
    }
    Ok(Certification { report, gates })
}

#[derive(Debug, Serialize)]
pub struct FlowChecks {
    /// ‖Z(t,s)x − Z(t,r)Z(r,s)x‖_H; zero bit-exact.
    pub flow_defect: f64,
    /// Shifted-section cocycle defect; zero bit-exact.
    pub cocycle_defect: f64,
    /// Cocycle defect with the shifted section rebuilt from scratch.
    pub cocycle_recomputed: f64,
    pub tol: f64,
}

pub fn flow_checks(
    cfg: &RunConfig,
    prep: &Prepared,
    path: &NoisePath,
    section: &StationarySection,
) -> Result<FlowChecks> {
    let fc = cfg.flow_config();
    let (s, t) = (cfg.attractor.schedule[0], 0.0);
    let r = (s / 2.0 / path.dt()).round() * path.dt();
    let x = SpectralField::from_coeffs(
        &prep.triple,
        (0..prep.triple.n_modes())
            .map(|k| 0.3 / (k + 1) as f64)
            .collect(),
    )?;
    let flow_defect = flow::flow_property_check(&prep.a, &prep.m, &fc, section, s, r, t, &x)?;
    let cocycle_defect = flow::cocycle_check(&prep.a, &prep.m, &fc, section, s, t, &x)?;
    let cocycle_recomputed = flow::cocycle_check_recomputed(
        &prep.a,
        &prep.m,
        &fc,
        &cfg.ou_config(),
        path,
        s,
        t,
        &x,
    )?;
    Ok(FlowChecks {
        flow_defect,
        cocycle_defect,
        cocycle_recomputed,
        tol: cfg.ou.cauchy_tol,
    })
}

#[derive(Debug, Serialize)]
pub struct RunSummary {
    pub experiment: String,
    pub config_hash: String,
    pub seed: u64,
    pub section_depth: f64,
    pub section_gap: f64,
    pub flow: FlowChecks,
    pub absorption_radius: f64,
    pub absorption_truncation: f64,
    pub birkhoff_v_alpha: f64,
    pub first_absorbed: Option<f64>,
    pub absorption_per_depth: Vec<(f64, f64)>,
    pub attractor_diameter: f64,
    pub attractor_cloud_size: usize,
    pub attractor_converged: bool,
    pub decay: Vec<(f64, f64)>,
    pub pass: bool,
}

fn write_file(dir: &Path, name: &str, bytes: &[u8], hashes: &mut BTreeMap<String, String>) -> Result<()> {
    fs::write(dir.join(name), bytes)?;
    let mut h = Sha256::new();
    h.update(bytes);
    hashes.insert(name.to_string(), hex(&h.finalize()));
    Ok(())
}

fn csv(header: &str, rows: impl Iterator<Item = String>) -> Vec<u8> {
    let mut out = String::from(header);
    out.push('\n');
    for r in rows {
        out.push_str(&r);
        out.push('\n');
    }
    out.into_bytes()
}

fn field_row(i: usize, f: &SpectralField) -> String {
    let mut row = i.to_string();
    for c in &f.coeffs {
        row.push(',');
        row.push_str(&format!("{c}"));
    }
    row
}

/// Full pipeline; writes artifacts plus `manifest.json` into `out` and
/// returns the summary. Fails (without a manifest) when a gate refuses.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<RunSummary> {
    let prep = prepare(cfg)?;
    let cert = certify_config(cfg, &prep)?;
    fs::create_dir_all(out)?;
    let mut hashes = BTreeMap::new();

    write_file(out, "config.json", &serde_json::to_vec_pretty(cfg)?, &mut hashes)?;
    write_file(out, "conditions.json", &serde_json::to_vec_pretty(&cert)?, &mut hashes)?;

    let path = sample_path(&cfg.noise, cfg.seed)?;
    let mut noise_bytes = Vec::new();
    path.write_to(&mut noise_bytes)?;
    write_file(out, "noise.bin", &noise_bytes, &mut hashes)?;

    let section = ou::stationary_section(&prep.m, &cfg.ou_config(), &path, cfg.section_window())?;
    write_file(
        out,
        "section.csv",
        &csv(
            "t,h_norm,v_norm",
            section
                .times
                .iter()
                .zip(&section.values)
                .map(|(t, u)| format!("{t},{},{}", u.h_norm(), u.v_norm())),
        ),
        &mut hashes,
    )?;

    let checks = flow_checks(cfg, &prep, &path, &section)?;

    let att = &cfg.attractor;
    let alpha = prep.a.constants.alpha;
    let radius = attractor::absorption_radius(&section, alpha, att.c_tilde, att.c_big, att.s0)?;
    let family = TemperedFamily {
        rule: FamilyRule::FixedBall { r: att.ball_radius },
        samples_per_set: att.samples,
    };
    let fc = cfg.flow_config();
    let absorption = attractor::check_absorption(
        &prep.a,
        &prep.m,
        &fc,
        &section,
        &family,
        &att.schedule,
        radius.r.max(att.ball_radius),
        cfg.seed,
    )?;
    write_file(
        out,
        "absorption.csv",
        &csv(
            "s,worst_h_norm",
            absorption.per_depth.iter().map(|(s, w)| format!("{s},{w}")),
        ),
        &mut hashes,
    )?;

    let estimate = attractor::estimate_attractor(
        &prep.a,
        &prep.m,
        &fc,
        &section,
        std::slice::from_ref(&family),
        &att.schedule,
        0.0,
        att.cluster_tol,
        cfg.seed,
    )?;
    write_file(
        out,
        "decay.csv",
        &csv(
            "s,semidistance",
            estimate.decay.iter().map(|(s, d)| format!("{s},{d}")),
        ),
        &mut hashes,
    )?;
    write_file(
        out,
        "cloud.csv",
        &csv(
            "index,coefficients",
            estimate.cloud.iter().enumerate().map(|(i, f)| field_row(i, f)),
        ),
        &mut hashes,
    )?;

    let summary = summarize(cfg, &section, checks, &radius, &absorption, &estimate);
    write_file(out, "summary.json", &serde_json::to_vec_pretty(&summary)?, &mut hashes)?;

    let manifest = serde_json::json!({
        "experiment": cfg.experiment,
        "config_hash": cfg.hash_hex(),
        "seed": cfg.seed,
        "files": hashes,
    });
    let mut f = fs::File::create(out.join("manifest.json"))?;
    f.write_all(serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(summary)
}

fn summarize(
    cfg: &RunConfig,
    section: &StationarySection,
    flow: FlowChecks,
    radius: &attractor::AbsorptionRadius,
    absorption: &attractor::AbsorptionReport,
    estimate: &AttractorEstimate,
) -> RunSummary {
    let pass = flow.flow_defect == 0.0
        && flow.cocycle_defect == 0.0
        && flow.cocycle_recomputed <= 2.0 * flow.tol
        && absorption.first_absorbed.is_some()
        && estimate.converged;
    RunSummary {
        experiment: cfg.experiment.clone(),
        config_hash: cfg.hash_hex(),
        seed: cfg.seed,
        section_depth: section.depth,
        section_gap: section.gap,
        flow,
        absorption_radius: absorption.radius,
        absorption_truncation: radius.truncation_error,
        birkhoff_v_alpha: radius.birkhoff_average,
        first_absorbed: absorption.first_absorbed,
        absorption_per_depth: absorption.per_depth.clone(),
        attractor_diameter: estimate.diameter,
        attractor_cloud_size: estimate.cloud.len(),
        attractor_converged: estimate.converged,
        decay: estimate.decay.clone(),
        pass,
    }
}
