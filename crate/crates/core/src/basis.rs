//! Spectral realization of the Gelfand triple `V ⊆ H ⊆ V*`.
//!
//! States are coefficient vectors in a fixed orthonormal basis of H; the
//! V- and V*-norms are diagonal with weights given by the eigenvalues of
//! the leading differential operator. Nonlinearities are evaluated on an
//! oversampled collocation grid and projected back onto the retained
//! modes, which realizes the dealiasing truncation exactly for
//! polynomial products.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Dirichlet,
    Periodic,
    /// `∇X·n = ∇(ΔX)·n = 0`, realized by a zero-mean cosine basis.
    NeumannCh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub spatial_dimension: u8,
    /// Interval `(0, L)` in 1D, torus `[0, L)^2` in 2D.
    pub length: f64,
    pub boundary: Boundary,
    /// Modes per spatial dimension.
    pub mode_count: usize,
    /// 1 for H^1-type V, 2 for H^2-type V.
    pub v_order: u8,
    #[serde(default)]
    pub divergence_free: bool,
    /// Represent states by coefficients orthonormal in H^{-1} instead of
    /// L^2 (porous-medium pivot). Dirichlet 1D only.
    #[serde(default)]
    pub dual_pivot: bool,
}

impl BasisSpec {
    pub fn validate(&self) -> Result<()> {
        if self.spatial_dimension != 1 && self.spatial_dimension != 2 {
            return Err(Error::config("spatial_dimension", "must be 1 or 2"));
        }
        if !(self.length > 0.0) {
            return Err(Error::config("length", "must be positive"));
        }
        if self.mode_count < 2 {
            return Err(Error::config("mode_count", "must be at least 2"));
        }
        if self.v_order != 1 && self.v_order != 2 {
            return Err(Error::config("v_order", "must be 1 or 2"));
        }
        if self.divergence_free
            && (self.spatial_dimension != 2 || self.boundary != Boundary::Periodic)
        {
            return Err(Error::config(
                "divergence_free",
                "requires spatial_dimension = 2 and periodic boundary",
            ));
        }
        if self.spatial_dimension == 2 && self.boundary != Boundary::Periodic {
            return Err(Error::config(
                "boundary",
                "2D bases are periodic (torus) only",
            ));
        }
        if self.boundary == Boundary::NeumannCh && self.spatial_dimension != 1 {
            return Err(Error::config("boundary", "Neumann-CH basis is 1D only"));
        }
        if self.dual_pivot && (self.spatial_dimension != 1 || self.boundary != Boundary::Dirichlet)
        {
            return Err(Error::config(
                "dual_pivot",
                "H^{-1} pivot is supported for the 1D Dirichlet basis only",
            ));
        }
        Ok(())
    }

    fn describe(&self) -> String {
        format!(
            "{}d/{:?}/N={}/v_order={}{}",
            self.spatial_dimension,
            self.boundary,
            self.mode_count,
            self.v_order,
            if self.divergence_free { "/div-free" } else { "" }
        )
    }
}

/// Grid values of a field: one flat vector per vector component,
/// row-major over the collocation points.
#[derive(Debug, Clone)]
pub struct GridValues {
    pub comps: Vec<Vec<f64>>,
}

impl GridValues {
    pub fn scalar(values: Vec<f64>) -> Self {
        GridValues { comps: vec![values] }
    }

    /// Pointwise Euclidean magnitude across components.
    pub fn magnitude(&self) -> Vec<f64> {
        let np = self.comps[0].len();
        (0..np)
            .map(|j| {
                self.comps
                    .iter()
                    .map(|c| c[j] * c[j])
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }
}

/// Gauss–Legendre nodes and weights on (0, len). Used for the
/// non-periodic 1D bases, where uniform rules lose spectral accuracy on
/// even-parity products of sine modes.
fn gauss_legendre(n: usize, len: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Standard initial guess, then Newton on P_n.
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, t);
            let dt = p / dp;
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, t);
        nodes[n - 1 - i] = 0.5 * len * (t + 1.0);
        weights[n - 1 - i] = len / ((1.0 - t * t) * dp * dp);
    }
    (nodes, weights)
}

/// Legendre polynomial P_n and its derivative at t, by recurrence.
fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, dp)
}

struct Tables {
    /// val[(comp * nm + k) * np + j]
    val: Vec<f64>,
    /// First-derivative tables per spatial direction; dx[1] is empty in 1D.
    dx: [Vec<f64>; 2],
}

pub struct GelfandTriple {
    pub spec: BasisSpec,
    /// V-norm weights w_k (eigenvalues of -Δ or Δ² with the boundary
    /// condition of the basis), one per mode.
    pub weights: Vec<f64>,
    /// Embedding constant: λ ‖v‖_H² ≤ ‖v‖_V².
    pub lambda: f64,
    /// Laplacian eigenvalues μ_k (first-order weights), independent of v_order.
    pub mu: Vec<f64>,
    n_modes: usize,
    n_comps: usize,
    n_points: usize,
    quad: Vec<f64>,
    /// Per-mode grid scale: 1 for L²-orthonormal bases, √μ_k for the
    /// H^{-1} pivot.
    grid_scale: Vec<f64>,
    tables: Tables,
    points: Vec<[f64; 2]>,
}

impl std::fmt::Debug for GelfandTriple {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GelfandTriple")
            .field("spec", &self.spec)
            .field("n_modes", &self.n_modes)
            .field("lambda", &self.lambda)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub h: f64,
    pub v: f64,
    pub v_star: f64,
}

/// Coefficient vector of a function in the triple's basis. The same
/// representation is used for states (elements of H or V) and for dual
/// elements f, with `pairing(f, v) = Σ f_k v_k`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    pub coeffs: Vec<f64>,
    pub triple: Arc<GelfandTriple>,
}

pub fn build_triple(spec: &BasisSpec) -> Result<Arc<GelfandTriple>> {
    spec.validate()?;
    let triple = match (spec.spatial_dimension, spec.boundary) {
        (1, Boundary::Dirichlet) => build_1d(spec, Trig1d::Sine),
        (1, Boundary::NeumannCh) => build_1d(spec, Trig1d::Cosine),
        (1, Boundary::Periodic) => build_1d_periodic(spec),
        (2, Boundary::Periodic) => build_2d(spec),
        _ => unreachable!("validated above"),
    };
    Ok(Arc::new(triple))
}

enum Trig1d {
    Sine,
    Cosine,
}

fn build_1d(spec: &BasisSpec, trig: Trig1d) -> GelfandTriple {
    let n = spec.mode_count;
    let l = spec.length;
    let np = 5 * n + 10;
    let (nodes, quad) = gauss_legendre(np, l);
    let amp = (2.0 / l).sqrt();

    let mut mu = Vec::with_capacity(n);
    let mut val = vec![0.0; n * np];
    let mut d1 = vec![0.0; n * np];
    let points: Vec<[f64; 2]> = nodes.iter().map(|&x| [x, 0.0]).collect();
    for k in 1..=n {
        let freq = k as f64 * std::f64::consts::PI / l;
        mu.push(freq * freq);
        for j in 0..np {
            let x = points[j][0];
            let (v, d) = match trig {
                Trig1d::Sine => (amp * (freq * x).sin(), amp * freq * (freq * x).cos()),
                Trig1d::Cosine => (amp * (freq * x).cos(), -amp * freq * (freq * x).sin()),
            };
            val[(k - 1) * np + j] = v;
            d1[(k - 1) * np + j] = d;
        }
    }
    finish_triple(spec, mu, 1, np, quad, val, d1, Vec::new(), points)
}

fn build_1d_periodic(spec: &BasisSpec) -> GelfandTriple {
    let n = spec.mode_count;
    let l = spec.length;
    let np = 4 * n + 4;
    let h = l / np as f64;
    let amp = (2.0 / l).sqrt();
    let nm = 2 * n;

    let mut mu = Vec::with_capacity(nm);
    let mut val = vec![0.0; nm * np];
    let mut d1 = vec![0.0; nm * np];
    let mut points = Vec::with_capacity(np);
    for j in 0..np {
        points.push([(j as f64 + 0.5) * h, 0.0]);
    }
    for k in 1..=n {
        let freq = 2.0 * std::f64::consts::PI * k as f64 / l;
        let m2 = freq * freq;
        mu.push(m2);
        mu.push(m2);
        for j in 0..np {
            let x = points[j][0];
            let (s, c) = (freq * x).sin_cos();
            let kc = 2 * (k - 1);
            let ks = kc + 1;
            val[kc * np + j] = amp * c;
            d1[kc * np + j] = -amp * freq * s;
            val[ks * np + j] = amp * s;
            d1[ks * np + j] = amp * freq * c;
        }
    }
    finish_triple(spec, mu, 1, np, vec![h; np], val, d1, Vec::new(), points)
}

/// Wavevector enumeration for the 2D torus: one representative per
/// `±(k1,k2)` pair, deterministic order.
fn torus_wavevectors(kmax: usize) -> Vec<(i64, i64)> {
    let k = kmax as i64;
    let mut out = Vec::new();
    for k1 in 0..=k {
        for k2 in -k..=k {
            if (k1, k2) == (0, 0) {
                continue;
            }
            if k1 > 0 || k2 > 0 {
                out.push((k1, k2));
            }
        }
    }
    out
}

fn build_2d(spec: &BasisSpec) -> GelfandTriple {
    let kmax = spec.mode_count;
    let l = spec.length;
    let m = 4 * kmax + 4;
    let np = m * m;
    let h = l / m as f64;
    let amp = 2.0_f64.sqrt() / l;
    let waves = torus_wavevectors(kmax);
    let modes_per_wave = if spec.divergence_free { 2 } else { 4 };
    let nm = waves.len() * modes_per_wave;

    let mut points = Vec::with_capacity(np);
    for j1 in 0..m {
        for j2 in 0..m {
            points.push([(j1 as f64 + 0.5) * h, (j2 as f64 + 0.5) * h]);
        }
    }

    let mut mu = vec![0.0; nm];
    let mut val = vec![0.0; 2 * nm * np];
    let mut d1 = vec![0.0; 2 * nm * np];
    let mut d2 = vec![0.0; 2 * nm * np];

    let two_pi = 2.0 * std::f64::consts::PI;
    for (w, &(k1, k2)) in waves.iter().enumerate() {
        let kappa = [two_pi * k1 as f64 / l, two_pi * k2 as f64 / l];
        let knorm = (kappa[0] * kappa[0] + kappa[1] * kappa[1]).sqrt();
        // Unit directions carried by each mode of this wavevector.
        let dirs: Vec<[f64; 2]> = if spec.divergence_free {
            vec![[-kappa[1] / knorm, kappa[0] / knorm]]
        } else {
            vec![[1.0, 0.0], [0.0, 1.0]]
        };
        for (t, trig_sin) in [false, true].iter().enumerate() {
            for (d, dir) in dirs.iter().enumerate() {
                let k_mode = w * modes_per_wave + t * dirs.len() + d;
                mu[k_mode] = knorm * knorm;
                for j in 0..np {
                    let phase = kappa[0] * points[j][0] + kappa[1] * points[j][1];
                    let (s, c) = phase.sin_cos();
                    let (v, dv) = if *trig_sin {
                        (amp * s, amp * c)
                    } else {
                        (amp * c, -amp * s)
                    };
                    for comp in 0..2 {
                        let idx = (comp * nm + k_mode) * np + j;
                        val[idx] = v * dir[comp];
                        d1[idx] = dv * kappa[0] * dir[comp];
                        d2[idx] = dv * kappa[1] * dir[comp];
                    }
                }
            }
        }
    }
    finish_triple(spec, mu, 2, np, vec![h * h; np], val, d1, d2, points)
}

#[allow(clippy::too_many_arguments)]
fn finish_triple(
    spec: &BasisSpec,
    mu: Vec<f64>,
    n_comps: usize,
    n_points: usize,
    quad: Vec<f64>,
    val: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    points: Vec<[f64; 2]>,
) -> GelfandTriple {
    let weights: Vec<f64> = mu
        .iter()
        .map(|&m| if spec.v_order == 2 { m * m } else { m })
        .collect();
    let lambda = weights.iter().cloned().fold(f64::INFINITY, f64::min);
    let grid_scale: Vec<f64> = if spec.dual_pivot {
        mu.iter().map(|m| m.sqrt()).collect()
    } else {
        vec![1.0; mu.len()]
    };
    GelfandTriple {
        spec: spec.clone(),
        n_modes: mu.len(),
        mu,
        weights,
        lambda,
        n_comps,
        n_points,
        quad,
        grid_scale,
        tables: Tables { val, dx: [d1, d2] },
        points,
    }
}

impl GelfandTriple {
    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn n_components(&self) -> usize {
        self.n_comps
    }

    pub fn n_grid_points(&self) -> usize {
        self.n_points
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad
    }

    pub fn grid_points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn same_basis(&self, other: &GelfandTriple) -> bool {
        self.spec == other.spec
    }
}

impl SpectralField {
    pub fn zero(triple: &Arc<GelfandTriple>) -> Self {
        SpectralField {
            coeffs: vec![0.0; triple.n_modes()],
            triple: Arc::clone(triple),
        }
    }

    pub fn from_coeffs(triple: &Arc<GelfandTriple>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != triple.n_modes() {
            return Err(Error::BasisMismatch(format!(
                "coefficient length {} != mode count {}",
                coeffs.len(),
                triple.n_modes()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Format("non-finite coefficient".into()));
        }
        Ok(SpectralField {
            coeffs,
            triple: Arc::clone(triple),
        })
    }

    /// Basis vector e_k.
    pub fn basis_vector(triple: &Arc<GelfandTriple>, k: usize) -> Self {
        let mut f = Self::zero(triple);
        f.coeffs[k] = 1.0;
        f
    }

    pub fn check_same_basis(&self, other: &SpectralField) -> Result<()> {
        if self.triple.same_basis(&other.triple) {
            Ok(())
        } else {
            Err(Error::BasisMismatch(format!(
                "{} vs {}",
                self.triple.spec.describe(),
                other.triple.spec.describe()
            )))
        }
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        debug_assert!(self.triple.same_basis(&other.triple));
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        SpectralField {
            coeffs,
            triple: Arc::clone(&self.triple),
        }
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        debug_assert!(self.triple.same_basis(&other.triple));
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        SpectralField {
            coeffs,
            triple: Arc::clone(&self.triple),
        }
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        SpectralField {
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
            triple: Arc::clone(&self.triple),
        }
    }

    pub fn axpy(&mut self, a: f64, x: &SpectralField) {
        for (c, xc) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *c += a * xc;
        }
    }

    pub fn h_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn v_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.triple.weights)
            .map(|(c, w)| w * c * c)
            .sum::<f64>()
            .sqrt()
    }

    pub fn v_star_norm(&self) -> f64 {
        self.coeffs
            .iter()
            .zip(&self.triple.weights)
            .map(|(c, w)| c * c / w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }
}

pub fn norms(field: &SpectralField) -> Norms {
    Norms {
        h: field.h_norm(),
        v: field.v_norm(),
        v_star: field.v_star_norm(),
    }
}

/// Dual pairing `⟨f, v⟩ = Σ f_k v_k`; equals the H-inner product when both
/// arguments lie in H.
pub fn pairing(f: &SpectralField, v: &SpectralField) -> Result<f64> {
    f.check_same_basis(v)?;
    Ok(f.coeffs.iter().zip(&v.coeffs).map(|(a, b)| a * b).sum())
}

/// Evaluate a state on the collocation grid.
pub fn to_grid(field: &SpectralField) -> GridValues {
    grid_eval(field, None)
}

/// Evaluate the spatial derivative `∂/∂x_dim` of a state on the grid.
pub fn grid_deriv(field: &SpectralField, dim: usize) -> GridValues {
    grid_eval(field, Some(dim))
}

fn grid_eval(field: &SpectralField, deriv: Option<usize>) -> GridValues {
    let t = &field.triple;
    let np = t.n_points;
    let nm = t.n_modes;
    let table = match deriv {
        None => &t.tables.val,
        Some(d) => {
            assert!(d < t.spec.spatial_dimension as usize, "derivative direction");
            &t.tables.dx[d]
        }
    };
    let mut comps = Vec::with_capacity(t.n_comps);
    for comp in 0..t.n_comps {
        let mut out = vec![0.0; np];
        for k in 0..nm {
            let c = field.coeffs[k] * t.grid_scale[k];
            if c == 0.0 {
                continue;
            }
            let row = &table[(comp * nm + k) * np..(comp * nm + k + 1) * np];
            for (o, v) in out.iter_mut().zip(row) {
                *o += c * v;
            }
        }
        comps.push(out);
    }
    GridValues { comps }
}

/// L²-project grid values back onto the retained modes (state
/// reconstruction; the left-inverse of `to_grid`).
pub fn from_grid(triple: &Arc<GelfandTriple>, values: &GridValues) -> SpectralField {
    let raw = quadrature_project(triple, values);
    let coeffs = raw
        .iter()
        .zip(&triple.grid_scale)
        .map(|(c, s)| c / s)
        .collect();
    SpectralField {
        coeffs,
        triple: Arc::clone(triple),
    }
}

/// Represent the functional `v ↦ ∫ g · v dx` (grid integrand `g` against
/// the *grid realization* of states) as a dual coefficient vector.
pub fn dual_from_grid(triple: &Arc<GelfandTriple>, integrand: &GridValues) -> SpectralField {
    let raw = quadrature_project(triple, integrand);
    let coeffs = raw
        .iter()
        .zip(&triple.grid_scale)
        .map(|(c, s)| c * s)
        .collect();
    SpectralField {
        coeffs,
        triple: Arc::clone(triple),
    }
}

/// Same but the integrand pairs against the spatial derivative of states:
/// `v ↦ ∫ g · ∂_dim v dx`.
pub fn dual_from_grid_deriv(
    triple: &Arc<GelfandTriple>,
    integrand: &GridValues,
    dim: usize,
) -> SpectralField {
    let raw = quadrature_project_table(triple, integrand, &triple.tables.dx[dim]);
    let coeffs = raw
        .iter()
        .zip(&triple.grid_scale)
        .map(|(c, s)| c * s)
        .collect();
    SpectralField {
        coeffs,
        triple: Arc::clone(triple),
    }
}

fn quadrature_project(triple: &Arc<GelfandTriple>, values: &GridValues) -> Vec<f64> {
    quadrature_project_table(triple, values, &triple.tables.val)
}

fn quadrature_project_table(
    triple: &Arc<GelfandTriple>,
    values: &GridValues,
    table: &[f64],
) -> Vec<f64> {
    let np = triple.n_points;
    let nm = triple.n_modes;
    assert_eq!(values.comps.len(), triple.n_comps, "component count");
    let mut out = vec![0.0; nm];
    for comp in 0..triple.n_comps {
        let vals = &values.comps[comp];
        assert_eq!(vals.len(), np, "grid length");
        for (k, o) in out.iter_mut().enumerate() {
            let row = &table[(comp * nm + k) * np..(comp * nm + k + 1) * np];
            let mut acc = 0.0;
            for ((r, v), w) in row.iter().zip(vals).zip(&triple.quad) {
                acc += r * v * w;
            }
            *o += acc;
        }
    }
    out
}

/// Lq norm of grid values (vector magnitude pointwise); `q = f64::INFINITY`
/// gives the sup norm.
pub fn lq_norm(triple: &GelfandTriple, values: &GridValues, q: f64) -> f64 {
    let mag = values.magnitude();
    if q.is_infinite() {
        mag.iter().cloned().fold(0.0, f64::max)
    } else {
        let s: f64 = mag
            .iter()
            .zip(&triple.quad)
            .map(|(m, w)| m.powf(q) * w)
            .sum();
        s.powf(1.0 / q)
    }
}

/// Helmholtz–Leray projection onto divergence-free fields, mode-wise on
/// the 2D full-vector Fourier basis. Identity on the solenoidal basis.
pub fn leray_project(field: &SpectralField) -> Result<SpectralField> {
    let t = &field.triple;
    if t.spec.spatial_dimension != 2 || t.spec.boundary != Boundary::Periodic {
        return Err(Error::UnsupportedBasis {
            op: "leray_project".into(),
            basis: t.spec.describe(),
        });
    }
    if t.spec.divergence_free {
        return Ok(field.clone());
    }
    let waves = torus_wavevectors(t.spec.mode_count);
    let mut out = field.clone();
    for (w, &(k1, k2)) in waves.iter().enumerate() {
        let kn = ((k1 * k1 + k2 * k2) as f64).sqrt();
        let d = [-(k2 as f64) / kn, k1 as f64 / kn];
        // Mode layout per wavevector: [cos·e1, cos·e2, sin·e1, sin·e2].
        for trig in 0..2 {
            let base = w * 4 + trig * 2;
            let a = field.coeffs[base];
            let b = field.coeffs[base + 1];
            let proj = a * d[0] + b * d[1];
            out.coeffs[base] = proj * d[0];
            out.coeffs[base + 1] = proj * d[1];
        }
    }
    Ok(out)
}

/// Pointwise divergence of a 2D field on the grid (diagnostic).
pub fn grid_divergence(field: &SpectralField) -> Vec<f64> {
    let dx = grid_deriv(field, 0);
    let dy = grid_deriv(field, 1);
    dx.comps[0]
        .iter()
        .zip(&dy.comps[1])
        .map(|(a, b)| a + b)
        .collect()
}
