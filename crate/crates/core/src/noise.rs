//! Two-sided Lévy paths: trace-class Q-Wiener part plus finite-activity
//! compound-Poisson jumps, with exact Wiener-shift semantics.
//!
//! All randomness is counter-based: Gaussian increments are keyed by
//! (seed, absolute interval index, mode) and jump events by (seed, unit
//! time cell, event index), so a path is a pure function of (spec, seed)
//! and shifts are pure relabelings of the same underlying realization.
//! Increments and jump marks are quantized to the dyadic grid 2⁻³³,
//! which makes increment additivity and the shift group law bit-exact
//! under any summation order.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng;

const TAG_GAUSS: u64 = 0x6741_5553;
const TAG_JCOUNT: u64 = 0x4a43_4e54;
const TAG_JTIME: u64 = 0x4a54_494d;
const TAG_JMARK: u64 = 0x4a4d_524b;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialLaw {
    /// Standard normal radial factor.
    Gaussian,
    /// ±a with equal probability.
    TwoPoint { a: f64 },
}

impl RadialLaw {
    pub fn second_moment(&self) -> f64 {
        match self {
            RadialLaw::Gaussian => 1.0,
            RadialLaw::TwoPoint { a } => a * a,
        }
    }

    pub fn fourth_moment(&self) -> f64 {
        match self {
            RadialLaw::Gaussian => 3.0,
            RadialLaw::TwoPoint { a } => a.powi(4),
        }
    }

    fn draw(&self, key: &[u64]) -> f64 {
        match self {
            RadialLaw::Gaussian => rng::normal(key),
            RadialLaw::TwoPoint { a } => {
                if rng::uniform(key) < 0.5 {
                    -*a
                } else {
                    *a
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpLaw {
    /// Per-mode scale vector; mark = radial · scale.
    pub scale: Vec<f64>,
    pub radial: RadialLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Covariance eigenvalues q_k of the Q-Wiener part; modes beyond the
    /// truncation K_Q = q_eigenvalues.len() are noise-free.
    pub q_eigenvalues: Vec<f64>,
    /// Total mode count of the target basis.
    pub n_modes: usize,
    /// Jump intensity ν(H); 0 disables jumps.
    pub jump_rate: f64,
    pub jump_law: Option<JumpLaw>,
    pub base_dt: f64,
    /// Two-sided horizon [s_min, t_max], both grid-aligned, with 0 inside.
    pub horizon: (f64, f64),
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if self.q_eigenvalues.len() > self.n_modes {
            return Err(Error::config(
                "q_eigenvalues",
                "truncation K_Q exceeds the basis mode count",
            ));
        }
        if self.q_eigenvalues.iter().any(|q| !(*q >= 0.0)) {
            return Err(Error::config("q_eigenvalues", "entries must be >= 0"));
        }
        if !(self.jump_rate >= 0.0) {
            return Err(Error::config("jump_rate", "must be >= 0"));
        }
        if self.jump_rate > 0.0 {
            match &self.jump_law {
                None => return Err(Error::config("jump_law", "required when jump_rate > 0")),
                Some(law) => {
                    if law.scale.len() > self.n_modes {
                        return Err(Error::config("jump_law", "scale vector exceeds mode count"));
                    }
                }
            }
        }
        if !(self.base_dt > 0.0) {
            return Err(Error::config("base_dt", "must be positive"));
        }
        let (s, t) = self.horizon;
        if !(s < t) {
            return Err(Error::config("horizon", "empty horizon"));
        }
        if s > 0.0 || t < 0.0 {
            return Err(Error::config("horizon", "horizon must contain time 0"));
        }
        grid_index(s, self.base_dt)?;
        grid_index(t, self.base_dt)?;
        Ok(())
    }

    /// Trace of Q over the truncation.
    pub fn trace_q(&self) -> f64 {
        self.q_eigenvalues.iter().sum()
    }

    /// Per-mode variance rate of the increment law: q_k plus the compound
    /// Poisson contribution λ_J·E[mark_k²].
    pub fn variance_rate(&self, k: usize) -> f64 {
        let q = self.q_eigenvalues.get(k).copied().unwrap_or(0.0);
        let jump = match &self.jump_law {
            Some(law) if self.jump_rate > 0.0 => {
                let s = law.scale.get(k).copied().unwrap_or(0.0);
                self.jump_rate * s * s * law.radial.second_moment()
            }
            _ => 0.0,
        };
        q + jump
    }

    pub fn hash(&self) -> [u8; 32] {
        let json = serde_json::to_vec(self).expect("spec serializes");
        let mut h = Sha256::new();
        h.update(&json);
        h.finalize().into()
    }
}

/// Nearest grid index of t on the dt-grid; rejects off-grid times.
pub fn grid_index(t: f64, dt: f64) -> Result<i64> {
    let r = t / dt;
    let i = r.round();
    if (r - i).abs() > 1e-6 {
        return Err(Error::OffGrid(t, dt));
    }
    Ok(i as i64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    /// Absolute time of the event (quantized to the underlying RNG cell).
    pub time: f64,
    /// Absolute interval index the event is binned into.
    pub interval: i64,
    /// Full mark vector, dyadically quantized.
    pub marks: Vec<f64>,
}

/// Immutable realization of the Lévy path over a grid of absolute
/// interval indices [i0, i1). Shifting relabels `anchor` (the absolute
/// index of local time 0) without touching the data.
#[derive(Debug, Clone)]
pub struct NoisePath {
    pub spec: NoiseSpec,
    pub seed: u64,
    i0: i64,
    n_intervals: usize,
    anchor: i64,
    /// Gaussian part: flat [interval][mode], quantized.
    gauss: Arc<Vec<f64>>,
    /// Combined per-interval increments (Gaussian + binned jump marks).
    step: Arc<Vec<f64>>,
    pub jumps: Arc<Vec<JumpEvent>>,
}

fn gauss_increment(seed: u64, abs_index: i64, k: usize, q: f64, dt: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    rng::quantize((q * dt).sqrt() * rng::normal(&[seed, TAG_GAUSS, abs_index as u64, k as u64]))
}

/// Deterministically sample a two-sided path from (spec, seed).
pub fn sample_path(spec: &NoiseSpec, seed: u64) -> Result<NoisePath> {
    spec.validate()?;
    let dt = spec.base_dt;
    let i0 = grid_index(spec.horizon.0, dt)?;
    let i1 = grid_index(spec.horizon.1, dt)?;
    let n = (i1 - i0) as usize;
    let nm = spec.n_modes;

    let mut gauss = vec![0.0; n * nm];
    for i in 0..n {
        let abs = i0 + i as i64;
        for (k, &q) in spec.q_eigenvalues.iter().enumerate() {
            gauss[i * nm + k] = gauss_increment(seed, abs, k, q, dt);
        }
    }

    let mut jumps = Vec::new();
    if spec.jump_rate > 0.0 {
        let law = spec.jump_law.as_ref().expect("validated");
        // Jump events live on unit cells of absolute time so that any
        // horizon sees the same realization.
        let cell_lo = spec.horizon.0.floor() as i64;
        let cell_hi = (spec.horizon.1.ceil() as i64).max(cell_lo + 1);
        for cell in cell_lo..cell_hi {
            let count = rng::poisson(&[seed, TAG_JCOUNT, cell as u64], spec.jump_rate);
            for j in 0..count {
                let u = rng::uniform(&[seed, TAG_JTIME, cell as u64, j]);
                let time = cell as f64 + u;
                let idx = (time / dt).floor() as i64;
                if idx < i0 || idx >= i1 {
                    continue;
                }
                let mut marks = vec![0.0; nm];
                for (k, &s) in law.scale.iter().enumerate() {
                    if s != 0.0 {
                        marks[k] = rng::quantize(
                            s * law.radial.draw(&[seed, TAG_JMARK, cell as u64, j, k as u64]),
                        );
                    }
                }
                jumps.push(JumpEvent {
                    time,
                    interval: idx,
                    marks,
                });
            }
        }
        jumps.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
    }

    let mut step = gauss.clone();
    for ev in &jumps {
        let i = (ev.interval - i0) as usize;
        for (k, m) in ev.marks.iter().enumerate() {
            step[i * nm + k] += m;
        }
    }

    Ok(NoisePath {
        spec: spec.clone(),
        seed,
        i0,
        n_intervals: n,
        anchor: 0,
        gauss: Arc::new(gauss),
        step: Arc::new(step),
        jumps: Arc::new(jumps),
    })
}

impl NoisePath {
    pub fn dt(&self) -> f64 {
        self.spec.base_dt
    }

    pub fn n_modes(&self) -> usize {
        self.spec.n_modes
    }

    /// Horizon in local (anchored) time.
    pub fn horizon(&self) -> (f64, f64) {
        let dt = self.dt();
        (
            (self.i0 - self.anchor) as f64 * dt,
            (self.i0 + self.n_intervals as i64 - self.anchor) as f64 * dt,
        )
    }

    fn local_to_abs(&self, t: f64) -> Result<i64> {
        let i = self.anchor + grid_index(t, self.dt())?;
        if i < self.i0 || i > self.i0 + self.n_intervals as i64 {
            let (lo, hi) = self.horizon();
            return Err(Error::WindowExceeded(t, t, lo, hi));
        }
        Ok(i)
    }

    /// Per-interval combined increment for the step starting at local
    /// grid index offset (fast path for solvers).
    pub fn step_increment(&self, abs_index: i64) -> &[f64] {
        let i = (abs_index - self.i0) as usize;
        let nm = self.spec.n_modes;
        &self.step[i * nm..(i + 1) * nm]
    }

    /// Absolute interval index of a local grid time.
    pub fn abs_index(&self, t: f64) -> Result<i64> {
        self.local_to_abs(t)
    }

    /// N_t − N_s per mode, s ≤ t grid-aligned local times.
    pub fn increment(&self, s: f64, t: f64) -> Result<Vec<f64>> {
        let a = self.local_to_abs(s)?;
        let b = self.local_to_abs(t)?;
        if a > b {
            return Err(Error::Format(format!("increment needs s <= t, got {s} > {t}")));
        }
        let nm = self.spec.n_modes;
        let mut out = vec![0.0; nm];
        for i in a..b {
            let row = self.step_increment(i);
            for (o, r) in out.iter_mut().zip(row) {
                *o += r;
            }
        }
        Ok(out)
    }

    /// Path value N_t (anchored: N_0 = 0).
    pub fn value(&self, t: f64) -> Result<Vec<f64>> {
        if t >= 0.0 {
            self.increment(0.0, t)
        } else {
            Ok(self.increment(t, 0.0)?.iter().map(|x| -x).collect())
        }
    }

    /// Wiener shift θ_τ: N'_t = N_{t+τ} − N_τ. Pure relabeling of the
    /// same realization; exact group law.
    pub fn shift(&self, tau: f64) -> Result<NoisePath> {
        let new_anchor = self.anchor + grid_index(tau, self.dt())?;
        if new_anchor < self.i0 || new_anchor > self.i0 + self.n_intervals as i64 {
            let (lo, hi) = self.horizon();
            return Err(Error::WindowExceeded(tau, tau, lo, hi));
        }
        let mut p = self.clone();
        p.anchor = new_anchor;
        Ok(p)
    }

    /// Exact coarsening to a step `factor` times larger: increments are
    /// summed, jumps rebinned. Used for refinement studies against a
    /// fixed fine realization.
    pub fn coarsen(&self, factor: usize) -> Result<NoisePath> {
        if factor == 0 || self.n_intervals % factor != 0 {
            return Err(Error::config(
                "coarsen",
                "factor must divide the interval count",
            ));
        }
        if self.i0.rem_euclid(factor as i64) != 0 || self.anchor.rem_euclid(factor as i64) != 0 {
            return Err(Error::config(
                "coarsen",
                "grid origin and anchor must align with the coarse grid",
            ));
        }
        let nm = self.spec.n_modes;
        let n_c = self.n_intervals / factor;
        let mut gauss = vec![0.0; n_c * nm];
        let mut step = vec![0.0; n_c * nm];
        for i in 0..self.n_intervals {
            let c = i / factor;
            for k in 0..nm {
                gauss[c * nm + k] += self.gauss[i * nm + k];
                step[c * nm + k] += self.step[i * nm + k];
            }
        }
        let dt_c = self.dt() * factor as f64;
        let jumps: Vec<JumpEvent> = self
            .jumps
            .iter()
            .map(|ev| JumpEvent {
                time: ev.time,
                interval: ev.interval.div_euclid(factor as i64),
                marks: ev.marks.clone(),
            })
            .collect();
        let mut spec = self.spec.clone();
        spec.base_dt = dt_c;
        Ok(NoisePath {
            spec,
            seed: self.seed,
            i0: self.i0 / factor as i64,
            n_intervals: n_c,
            anchor: self.anchor / factor as i64,
            gauss: Arc::new(gauss),
            step: Arc::new(step),
            jumps: Arc::new(jumps),
        })
    }

    pub fn write_to(&self, w: &mut impl std::io::Write) -> Result<()> {
        w.write_all(b"LEVYPATH")?;
        w.write_all(&1u32.to_le_bytes())?;
        w.write_all(&self.spec.hash())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.i0.to_le_bytes())?;
        w.write_all(&(self.n_intervals as u64).to_le_bytes())?;
        w.write_all(&(self.spec.n_modes as u64).to_le_bytes())?;
        w.write_all(&self.anchor.to_le_bytes())?;
        for x in self.gauss.iter() {
            w.write_all(&x.to_le_bytes())?;
        }
        w.write_all(&(self.jumps.len() as u64).to_le_bytes())?;
        for ev in self.jumps.iter() {
            w.write_all(&ev.time.to_le_bytes())?;
            w.write_all(&ev.interval.to_le_bytes())?;
            for m in &ev.marks {
                w.write_all(&m.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Read a persisted path; `spec` must hash-match the header.
    pub fn read_from(spec: &NoiseSpec, r: &mut impl std::io::Read) -> Result<NoisePath> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != b"LEVYPATH" {
            return Err(Error::Format("bad magic".into()));
        }
        let version = read_u32(r)?;
        if version != 1 {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut hash = [0u8; 32];
        r.read_exact(&mut hash)?;
        if hash != spec.hash() {
            return Err(Error::Format("spec hash mismatch".into()));
        }
        let seed = read_u64(r)?;
        let i0 = read_i64(r)?;
        let n_intervals = read_u64(r)? as usize;
        let nm = read_u64(r)? as usize;
        if nm != spec.n_modes {
            return Err(Error::Format("mode count mismatch".into()));
        }
        let anchor = read_i64(r)?;
        let mut gauss = vec![0.0; n_intervals * nm];
        for g in gauss.iter_mut() {
            *g = read_f64(r)?;
        }
        let n_jumps = read_u64(r)? as usize;
        let mut jumps = Vec::with_capacity(n_jumps);
        for _ in 0..n_jumps {
            let time = read_f64(r)?;
            let interval = read_i64(r)?;
            let mut marks = vec![0.0; nm];
            for m in marks.iter_mut() {
                *m = read_f64(r)?;
            }
            jumps.push(JumpEvent {
                time,
                interval,
                marks,
            });
        }
        let mut step = gauss.clone();
        for ev in &jumps {
            let i = (ev.interval - i0) as usize;
            for (k, m) in ev.marks.iter().enumerate() {
                step[i * nm + k] += m;
            }
        }
        Ok(NoisePath {
            spec: spec.clone(),
            seed,
            i0,
            n_intervals,
            anchor,
            gauss: Arc::new(gauss),
            step: Arc::new(step),
            jumps: Arc::new(jumps),
        })
    }
}

fn read_u32(r: &mut impl std::io::Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl std::io::Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_i64(r: &mut impl std::io::Read) -> Result<i64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(i64::from_le_bytes(b))
}

fn read_f64(r: &mut impl std::io::Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentReport {
    pub n_paths: usize,
    pub window: (f64, f64),
    /// Per-mode sample mean of the window increment.
    pub mean: Vec<f64>,
    /// Per-mode sample variance.
    pub variance: Vec<f64>,
    /// Per-mode theoretical variance (q_k + λ_J E[mark²])·|window|.
    pub expected_variance: Vec<f64>,
    /// Standard error of the mean per mode.
    pub mean_se: Vec<f64>,
    /// Standard error of the variance per mode (Gaussian approximation).
    pub variance_se: Vec<f64>,
    pub mean_jump_count: f64,
}

/// Monte Carlo moment check over independent seeds.
pub fn empirical_moments(
    spec: &NoiseSpec,
    n_paths: usize,
    window: (f64, f64),
    seed0: u64,
) -> Result<MomentReport> {
    if n_paths < 100 {
        return Err(Error::config("n_paths", "need at least 100 paths"));
    }
    let nm = spec.n_modes;
    let mut sum = vec![0.0; nm];
    let mut sumsq = vec![0.0; nm];
    let mut sum4 = vec![0.0; nm];
    let mut jump_total = 0usize;
    for i in 0..n_paths {
        let p = sample_path(spec, seed0 + i as u64)?;
        let inc = p.increment(window.0, window.1)?;
        for k in 0..nm {
            sum[k] += inc[k];
            sumsq[k] += inc[k] * inc[k];
            sum4[k] += inc[k].powi(4);
        }
        jump_total += p.jumps.len();
    }
    let n = n_paths as f64;
    let len = window.1 - window.0;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let variance: Vec<f64> = sumsq
        .iter()
        .zip(&mean)
        .map(|(sq, m)| sq / n - m * m)
        .collect();
    let expected_variance: Vec<f64> = (0..nm).map(|k| spec.variance_rate(k) * len).collect();
    let mean_se: Vec<f64> = variance.iter().map(|v| (v / n).sqrt()).collect();
    let variance_se: Vec<f64> = (0..nm)
        .map(|k| {
            let m4 = sum4[k] / n;
            let v = variance[k];
            (((m4 - v * v).max(0.0)) / n).sqrt()
        })
        .collect();
    Ok(MomentReport {
        n_paths,
        window,
        mean,
        variance,
        expected_variance,
        mean_se,
        variance_se,
        mean_jump_count: jump_total as f64 / n,
    })
}
