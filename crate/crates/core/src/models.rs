//! Drift operators A: V → V* and their strongly monotone parts M, each
//! bundled with certified structural constants and the locality
//! functionals η, ρ.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::basis::{
    dual_from_grid, dual_from_grid_deriv, grid_deriv, lq_norm, to_grid, Boundary, GelfandTriple,
    GridValues, SpectralField,
};
use crate::error::{Error, Result};

/// Structural constants of the variational framework:
/// α (coercivity exponent), β (growth exponent), γ (coercivity), K
/// (coercivity H-term), C (generic constant, estimated), c (strong
/// monotonicity of M), κ (η,ρ growth exponent), σ (OU strength).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantsRecord {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k_coer: f64,
    pub c_generic: f64,
    pub c_mono: f64,
    pub kappa: f64,
    pub sigma: f64,
}

impl ConstantsRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 2.0) {
            return Err(Error::config("alpha", "must be >= 2"));
        }
        if !(self.beta >= 0.0) {
            return Err(Error::config("beta", "must be >= 0"));
        }
        if !(self.gamma > 0.0) {
            return Err(Error::config("gamma", "must be > 0"));
        }
        if !(self.k_coer >= 0.0) {
            return Err(Error::config("k_coer", "must be >= 0"));
        }
        if !(self.c_mono > 0.0) {
            return Err(Error::config("c_mono", "must be > 0"));
        }
        if !(self.sigma > 0.0) {
            return Err(Error::config("sigma", "must be > 0"));
        }
        if self.beta * (self.alpha - 1.0) > 2.0 + 1e-12 {
            return Err(Error::GateRefused {
                gate: "beta*(alpha-1) <= 2".into(),
                reason: format!(
                    "beta = {}, alpha = {} give beta*(alpha-1) = {}",
                    self.beta,
                    self.alpha,
                    self.beta * (self.alpha - 1.0)
                ),
            });
        }
        Ok(())
    }
}

/// Scalar reaction term f₀ with at most quadratic growth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reaction {
    None,
    /// a·x
    Linear { a: f64 },
    /// a·x − b·x·|x| (quadratic growth, dissipative for b ≥ 0)
    Quadratic { a: f64, b: f64 },
}

impl Reaction {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Reaction::None => 0.0,
            Reaction::Linear { a } => a * x,
            Reaction::Quadratic { a, b } => a * x - b * x * x.abs(),
        }
    }

    fn is_none(&self) -> bool {
        matches!(self, Reaction::None)
    }

    /// Contribution to the coercivity H-term: 2∫f₀(v)v ≤ K‖v‖².
    fn k_contribution(&self) -> f64 {
        match self {
            Reaction::None => 0.0,
            Reaction::Linear { a } => (2.0 * a).max(0.0),
            Reaction::Quadratic { a, .. } => (2.0 * a).max(0.0),
        }
    }
}

/// Transport coefficient f₁ in f₁(v)·∂ₓv.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transport {
    None,
    /// c·v·∂ₓv (classical Burgers at c = 1)
    Classical { c: f64 },
    /// c·tanh(v)·∂ₓv (globally Lipschitz coefficient)
    Bounded { c: f64 },
}

impl Transport {
    fn eval(&self, x: f64) -> f64 {
        match self {
            Transport::None => 0.0,
            Transport::Classical { c } => c * x,
            Transport::Bounded { c } => c * x.tanh(),
        }
    }

    fn is_none(&self) -> bool {
        matches!(self, Transport::None)
    }
}

/// C¹ scalar nonlinearity φ(x) = c1·x + c2·x·|x| (growth exponent ≤ 2;
/// φ' = c1 + 2·c2·|x| is bounded below by c1 when c2 ≥ 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Phi {
    pub c1: f64,
    pub c2: f64,
}

impl Phi {
    pub fn eval(&self, x: f64) -> f64 {
        self.c1 * x + self.c2 * x * x.abs()
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.c1 + 2.0 * self.c2 * x.abs()
    }

    /// Lower Lipschitz constant C_φ with φ' ≥ −C_φ.
    pub fn c_phi(&self) -> Result<f64> {
        if self.c2 < 0.0 {
            return Err(Error::config("phi", "c2 must be >= 0 (phi' unbounded below)"));
        }
        Ok((-self.c1).max(0.0))
    }

    /// Growth exponent p with |φ(x)| ≤ C(1+|x|^p).
    pub fn growth(&self) -> f64 {
        if self.c2 != 0.0 {
            2.0
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Kind {
    /// A(v)_k = symbol_k · v_k.
    Diagonal { symbol: Vec<f64> },
    Burgers {
        transport: Transport,
        reaction: Reaction,
    },
    Nse2d { nu: f64 },
    CahnHilliard { phi: Phi, c_gn: f64 },
    Kse { phi: Phi },
    PLaplace { p: f64 },
    PorousMedia { r: f64 },
}

#[derive(Debug, Clone)]
pub struct ModelOperator {
    pub name: String,
    pub triple: Arc<GelfandTriple>,
    pub constants: ConstantsRecord,
    pub(crate) kind: Kind,
}

fn diag_apply(triple: &Arc<GelfandTriple>, symbol: &[f64], v: &SpectralField) -> SpectralField {
    let coeffs = v
        .coeffs
        .iter()
        .zip(symbol)
        .map(|(c, s)| c * s)
        .collect();
    SpectralField {
        coeffs,
        triple: Arc::clone(triple),
    }
}

impl ModelOperator {
    /// Galerkin drift A(v) as a dual coefficient vector.
    pub fn apply(&self, v: &SpectralField) -> SpectralField {
        let t = &self.triple;
        match &self.kind {
            Kind::Diagonal { symbol } => diag_apply(t, symbol, v),
            Kind::Burgers {
                transport,
                reaction,
            } => {
                let mut out = diag_apply(t, &self.laplacian_symbol(), v);
                if !transport.is_none() || !reaction.is_none() {
                    let vg = to_grid(v);
                    let dvg = grid_deriv(v, 0);
                    let nl: Vec<f64> = vg.comps[0]
                        .iter()
                        .zip(&dvg.comps[0])
                        .map(|(x, dx)| transport.eval(*x) * dx + reaction.eval(*x))
                        .collect();
                    let f = dual_from_grid(t, &GridValues::scalar(nl));
                    out.axpy(1.0, &f);
                }
                out
            }
            Kind::Nse2d { nu } => {
                let symbol: Vec<f64> = t.mu.iter().map(|m| -nu * m).collect();
                let mut out = diag_apply(t, &symbol, v);
                let f = self.nse_convection(v);
                out.axpy(-1.0, &f);
                out
            }
            Kind::CahnHilliard { phi, .. } => {
                // A(v) = −Δ²v + Δφ(v); ⟨Δφ(v), e_k⟩ = −μ_k (φ(v))_k.
                let symbol: Vec<f64> = t.mu.iter().map(|m| -m * m).collect();
                let mut out = diag_apply(t, &symbol, v);
                let vg = to_grid(v);
                let pg: Vec<f64> = vg.comps[0].iter().map(|x| phi.eval(*x)).collect();
                let mut f = dual_from_grid(t, &GridValues::scalar(pg));
                for (c, m) in f.coeffs.iter_mut().zip(&t.mu) {
                    *c *= -m;
                }
                out.axpy(1.0, &f);
                out
            }
            Kind::Kse { phi } => {
                // A(v) = −∂ₓ⁴v − ∂ₓ²φ(v) − v∂ₓv; ⟨−∂ₓ²φ(v), e_k⟩ = μ_k (φ(v))_k.
                let symbol: Vec<f64> = t.mu.iter().map(|m| -m * m).collect();
                let mut out = diag_apply(t, &symbol, v);
                let vg = to_grid(v);
                let pg: Vec<f64> = vg.comps[0].iter().map(|x| phi.eval(*x)).collect();
                let mut f = dual_from_grid(t, &GridValues::scalar(pg));
                for (c, m) in f.coeffs.iter_mut().zip(&t.mu) {
                    *c *= *m;
                }
                out.axpy(1.0, &f);
                let dvg = grid_deriv(v, 0);
                let nl: Vec<f64> = vg.comps[0]
                    .iter()
                    .zip(&dvg.comps[0])
                    .map(|(x, dx)| -x * dx)
                    .collect();
                let b = dual_from_grid(t, &GridValues::scalar(nl));
                out.axpy(1.0, &b);
                out
            }
            Kind::PLaplace { p } => {
                // ⟨A(v), e_k⟩ = −∫|v'|^{p−2}v'·e_k' dx.
                let dvg = grid_deriv(v, 0);
                let psi: Vec<f64> = dvg.comps[0]
                    .iter()
                    .map(|s| s.abs().powf(p - 2.0) * s)
                    .collect();
                dual_from_grid_deriv(t, &GridValues::scalar(psi), 0).scale(-1.0)
            }
            Kind::PorousMedia { r } => {
                // H = H⁻¹ pivot: ⟨Δψ(v), w⟩ = −∫ψ(v)·w dx.
                let vg = to_grid(v);
                let psi: Vec<f64> = vg.comps[0]
                    .iter()
                    .map(|s| s.abs().powf(r - 1.0) * s)
                    .collect();
                dual_from_grid(t, &GridValues::scalar(psi)).scale(-1.0)
            }
        }
    }

    fn laplacian_symbol(&self) -> Vec<f64> {
        self.triple.mu.iter().map(|m| -m).collect()
    }

    /// −(v·∇)v paired against the (divergence-free) basis; returns the
    /// positive convection functional ∫(v·∇)v·e_k.
    fn nse_convection(&self, v: &SpectralField) -> SpectralField {
        let vg = to_grid(v);
        let dx = grid_deriv(v, 0);
        let dy = grid_deriv(v, 1);
        let np = vg.comps[0].len();
        let mut conv = vec![vec![0.0; np]; 2];
        for comp in 0..2 {
            for j in 0..np {
                conv[comp][j] =
                    vg.comps[0][j] * dx.comps[comp][j] + vg.comps[1][j] * dy.comps[comp][j];
            }
        }
        dual_from_grid(&self.triple, &GridValues { comps: conv })
    }

    /// The strongly monotone part M(v).
    pub fn monotone_part(&self, v: &SpectralField) -> SpectralField {
        match &self.kind {
            Kind::Diagonal { symbol } => diag_apply(&self.triple, symbol, v),
            Kind::Burgers { .. } => diag_apply(&self.triple, &self.laplacian_symbol(), v),
            Kind::Nse2d { nu } => {
                let symbol: Vec<f64> = self.triple.mu.iter().map(|m| -nu * m).collect();
                diag_apply(&self.triple, &symbol, v)
            }
            Kind::CahnHilliard { .. } | Kind::Kse { .. } => {
                let symbol: Vec<f64> = self.triple.mu.iter().map(|m| -m * m).collect();
                diag_apply(&self.triple, &symbol, v)
            }
            Kind::PLaplace { .. } | Kind::PorousMedia { .. } => self.apply(v),
        }
    }

    /// Per-mode symbol of M when M is diagonal (None for the fully
    /// nonlinear monotone operators).
    pub fn monotone_symbol(&self) -> Option<Vec<f64>> {
        match &self.kind {
            Kind::Diagonal { symbol } => Some(symbol.clone()),
            Kind::Burgers { .. } => Some(self.laplacian_symbol()),
            Kind::Nse2d { nu } => Some(self.triple.mu.iter().map(|m| -nu * m).collect()),
            Kind::CahnHilliard { .. } | Kind::Kse { .. } => {
                Some(self.triple.mu.iter().map(|m| -m * m).collect())
            }
            Kind::PLaplace { .. } | Kind::PorousMedia { .. } => None,
        }
    }

    /// Diagonal implicit part of A for IMEX stepping (the stiff linear
    /// symbol; the remainder A − diag is treated explicitly).
    pub fn linear_symbol(&self) -> Vec<f64> {
        match &self.kind {
            Kind::Diagonal { symbol } => symbol.clone(),
            Kind::Burgers { .. } => self.laplacian_symbol(),
            Kind::Nse2d { nu } => self.triple.mu.iter().map(|m| -nu * m).collect(),
            Kind::CahnHilliard { phi, .. } => self
                .triple
                .mu
                .iter()
                .map(|m| -m * m - phi.c1.max(0.0) * m)
                .collect(),
            Kind::Kse { phi } => self
                .triple
                .mu
                .iter()
                .map(|m| -m * m + phi.c1 * m)
                .collect(),
            Kind::PLaplace { .. } | Kind::PorousMedia { .. } => {
                vec![0.0; self.triple.n_modes()]
            }
        }
    }

    /// Whether the implicit step must solve a nonlinear system.
    pub fn needs_nonlinear_solve(&self) -> bool {
        matches!(self.kind, Kind::PLaplace { .. } | Kind::PorousMedia { .. })
    }

    pub fn eta(&self, v: &SpectralField) -> f64 {
        match &self.kind {
            Kind::Burgers {
                transport,
                reaction,
            } => {
                if transport.is_none() && reaction.is_none() {
                    0.0
                } else {
                    let g = to_grid(v);
                    lq_norm(&self.triple, &g, f64::INFINITY).powi(2)
                }
            }
            Kind::CahnHilliard { phi, .. } => {
                if phi.c2 == 0.0 {
                    0.0
                } else {
                    let g = to_grid(v);
                    lq_norm(&self.triple, &g, f64::INFINITY).powi(2)
                }
            }
            Kind::Kse { .. } => {
                let g = grid_deriv(v, 0);
                lq_norm(&self.triple, &g, f64::INFINITY)
            }
            _ => 0.0,
        }
    }

    pub fn rho(&self, v: &SpectralField) -> f64 {
        match &self.kind {
            Kind::Burgers {
                transport,
                reaction,
            } => {
                if transport.is_none() && reaction.is_none() {
                    0.0
                } else {
                    let g = to_grid(v);
                    lq_norm(&self.triple, &g, f64::INFINITY).powi(2)
                }
            }
            Kind::Nse2d { .. } => {
                let g = to_grid(v);
                lq_norm(&self.triple, &g, 4.0).powi(4)
            }
            Kind::CahnHilliard { phi, .. } => {
                if phi.c2 == 0.0 {
                    0.0
                } else {
                    let g = to_grid(v);
                    lq_norm(&self.triple, &g, f64::INFINITY).powi(2)
                }
            }
            Kind::Kse { .. } => {
                let g = grid_deriv(v, 0);
                lq_norm(&self.triple, &g, f64::INFINITY)
            }
            _ => 0.0,
        }
    }
}

fn require_1d(triple: &GelfandTriple, boundary: &[Boundary], op: &str) -> Result<()> {
    if triple.spec.spatial_dimension != 1 || !boundary.contains(&triple.spec.boundary) {
        return Err(Error::UnsupportedBasis {
            op: op.into(),
            basis: format!("{:?}", triple.spec),
        });
    }
    Ok(())
}

/// A = Δ as a standalone (strongly monotone, linear) model.
pub fn laplacian(triple: &Arc<GelfandTriple>, sigma: f64) -> Result<ModelOperator> {
    let symbol: Vec<f64> = triple.mu.iter().map(|m| -m).collect();
    let constants = ConstantsRecord {
        alpha: 2.0,
        beta: 0.0,
        gamma: 2.0,
        k_coer: 0.0,
        c_generic: 1.0,
        c_mono: 2.0,
        kappa: 0.0,
        sigma,
    };
    constants.validate()?;
    Ok(ModelOperator {
        name: "laplacian".into(),
        triple: Arc::clone(triple),
        constants,
        kind: Kind::Diagonal { symbol },
    })
}

/// A = −Δ² as a standalone model (monotone, linear, fourth order).
pub fn neg_biharmonic(triple: &Arc<GelfandTriple>, sigma: f64) -> Result<ModelOperator> {
    if triple.spec.v_order != 2 {
        return Err(Error::config("v_order", "biharmonic model needs v_order = 2"));
    }
    let symbol: Vec<f64> = triple.mu.iter().map(|m| -m * m).collect();
    let constants = ConstantsRecord {
        alpha: 2.0,
        beta: 0.0,
        gamma: 2.0,
        k_coer: 0.0,
        c_generic: 1.0,
        c_mono: 2.0,
        kappa: 0.0,
        sigma,
    };
    constants.validate()?;
    Ok(ModelOperator {
        name: "neg-biharmonic".into(),
        triple: Arc::clone(triple),
        constants,
        kind: Kind::Diagonal { symbol },
    })
}

/// Burgers / reaction–diffusion drift A(v) = Δv + f₁(v)∂ₓv + f₀(v).
pub fn burgers_rde(
    triple: &Arc<GelfandTriple>,
    transport: Transport,
    reaction: Reaction,
    sigma: f64,
) -> Result<ModelOperator> {
    require_1d(triple, &[Boundary::Dirichlet, Boundary::Periodic], "burgers_rde")?;
    if triple.spec.v_order != 1 || triple.spec.dual_pivot {
        return Err(Error::config("basis", "burgers_rde needs a v_order-1 L2 basis"));
    }
    let constants = ConstantsRecord {
        alpha: 2.0,
        beta: 2.0,
        gamma: 0.5,
        k_coer: reaction.k_contribution(),
        c_generic: 1.0,
        c_mono: 2.0,
        kappa: 2.0,
        sigma,
    };
    constants.validate()?;
    Ok(ModelOperator {
        name: "burgers-rde".into(),
        triple: Arc::clone(triple),
        constants,
        kind: Kind::Burgers {
            transport,
            reaction,
        },
    })
}

/// 2D Navier–Stokes on the torus: A(u) = νΔu − P[(u·∇)u].
pub fn nse2d(triple: &Arc<GelfandTriple>, nu: f64) -> Result<ModelOperator> {
    if !triple.spec.divergence_free {
        return Err(Error::config(
            "divergence_free",
            "nse2d requires the solenoidal 2D basis",
        ));
    }
    if !(nu > 0.0) {
        return Err(Error::config("nu", "viscosity must be positive"));
    }
    let constants = ConstantsRecord {
        alpha: 2.0,
        beta: 2.0,
        gamma: nu,
        k_coer: 0.0,
        c_generic: 1.0,
        c_mono: 2.0 * nu,
        kappa: 2.0,
        sigma: 1.0,
    };
    constants.validate()?;
    Ok(ModelOperator {
        name: "nse2d".into(),
        triple: Arc::clone(triple),
        constants,
        kind: Kind::Nse2d { nu },
    })
}

/// Cahn–Hilliard-type drift A(v) = −Δ²v + Δφ(v). `c_gn` is the
/// Gagliardo–Nirenberg constant estimate entering K = C_φ²·C_GN⁴/2.
pub fn cahn_hilliard(triple: &Arc<GelfandTriple>, phi: Phi, c_gn: f64, sigma: f64) -> Result<ModelOperator> {
    require_1d(triple, &[Boundary::NeumannCh, Boundary::Periodic], "cahn_hilliard")?;
    if triple.spec.v_order != 2 {
        return Err(Error::config("v_order", "cahn_hilliard needs v_order = 2"));
    }
    let p = phi.growth();
    if p > 2.0 {
        return Err(Error::config(
            "phi",
            "growth exponent p > 2 violates beta*(alpha-1) <= 2",
        ));
    }
    let c_phi = phi.c_phi()?;
    let constants = ConstantsRecord {
        alpha: 2.0,
        beta: 2.0 * (p - 1.0),
        gamma: 0.5,
        k_coer: 0.5 * c_phi * c_phi * c_gn.powi(4),
        c_generic: 1.0,
        c_mono: 2.0,
        kappa: 2.0,
        sigma,
    };
    constants.validate()?;
    Ok(ModelOperator {
        name: "cahn-hilliard".into(),
        triple: Arc::clone(triple),
        constants,
        kind: Kind::CahnHilliard { phi, c_gn },
    })
}

/// Kuramoto–Sivashinsky drift A(u) = −∂ₓ⁴u − ∂ₓ²φ(u) − u∂ₓu on the
/// zero-mean periodic basis; the classical equation is φ(x) = x.
pub fn kuramoto_sivashinsky(triple: &Arc<GelfandTriple>, phi: Phi, sigma: f64) -> Result<ModelOperator> {
    require_1d(triple, &[Boundary::Periodic], "kuramoto_sivashinsky")?;
    if triple.spec.v_order != 2 {
        return Err(Error::config("v_order", "kuramoto_sivashinsky needs v_order = 2"));
    }
    if phi.growth() > 2.0 {
        return Err(Error::config("phi", "growth exponent p > 2 rejected"));
    }
    // K: max over the discrete spectrum of the destabilizing part of
    // −2μ² + 2c1·μ against −γμ².
    let gamma = 0.5;
    let k_coer = triple
        .mu
        .iter()
        .map(|m| (gamma - 2.0) * m * m + 2.0 * phi.c1 * m)
        .fold(0.0_f64, f64::max);
    let constants = ConstantsRecord {
        alpha: 2.0,
        beta: 2.0,
        gamma,
        k_coer,
        c_generic: 1.0,
        c_mono: 2.0,
        kappa: 2.0,
        sigma,
    };
    constants.validate()?;
    Ok(ModelOperator {
        name: "kuramoto-sivashinsky".into(),
        triple: Arc::clone(triple),
        constants,
        kind: Kind::Kse { phi },
    })
}

/// p-Laplace drift A(v) = div(|∇v|^{p−2}∇v), p ≥ 2.
pub fn p_laplace(triple: &Arc<GelfandTriple>, p: f64, sigma: f64) -> Result<ModelOperator> {
    require_1d(triple, &[Boundary::Dirichlet], "p_laplace")?;
    if triple.spec.dual_pivot {
        return Err(Error::config("dual_pivot", "p_laplace uses the L2 pivot"));
    }
    if !(p >= 2.0) {
        return Err(Error::config("p", "shear-thinning p < 2 is out of scope"));
    }
    let vol = triple.spec.length;
    // ‖v'‖_{L²} ≤ |Λ|^{1/2−1/p}‖v'‖_{L^p} transfers coercivity and strong
    // monotonicity to the spectral H¹ stand-in for the V-norm.
    let transfer = vol.powf(1.0 - p / 2.0);
    let c_p = 2.0_f64.powf(2.0 - p);
    let constants = ConstantsRecord {
        alpha: p,
        beta: 0.0,
        gamma: 2.0 * transfer,
        k_coer: 0.0,
        c_generic: 1.0,
        c_mono: 2.0 * c_p * transfer,
        kappa: 0.0,
        sigma,
    };
    constants.validate()?;
    Ok(ModelOperator {
        name: "p-laplace".into(),
        triple: Arc::clone(triple),
        constants,
        kind: Kind::PLaplace { p },
    })
}

/// Porous-medium drift A(v) = Δ(|v|^{r−1}v) on the H⁻¹-pivot basis.
pub fn porous_media(triple: &Arc<GelfandTriple>, r: f64, sigma: f64) -> Result<ModelOperator> {
    if !triple.spec.dual_pivot {
        return Err(Error::config(
            "dual_pivot",
            "porous_media requires the H^{-1}-pivot basis",
        ));
    }
    if !(r >= 1.0) {
        return Err(Error::config("r", "must be >= 1"));
    }
    let alpha = r + 1.0;
    let vol = triple.spec.length;
    // ‖d‖_{L²} ≤ |Λ|^{1/2−1/(r+1)}‖d‖_{L^{r+1}} and the pointwise bound
    // (ψ(a)−ψ(b))(a−b) ≥ 2^{1−r}|a−b|^{r+1}.
    let transfer = vol.powf(-(r - 1.0) / 2.0);
    let c_r = 2.0_f64.powf(1.0 - r);
    let constants = ConstantsRecord {
        alpha,
        beta: 0.0,
        gamma: 2.0 * c_r * transfer,
        k_coer: 0.0,
        c_generic: 1.0,
        c_mono: 2.0 * c_r * transfer,
        kappa: 0.0,
        sigma,
    };
    constants.validate()?;
    Ok(ModelOperator {
        name: "porous-media".into(),
        triple: Arc::clone(triple),
        constants,
        kind: Kind::PorousMedia { r },
    })
}

/// Exponents of the power-law fluid example: θ = d/((d+2)p − 2d),
/// β = (3−p)p/(p−1); admissible iff (d+2)/2 ≤ p ≤ 3.
pub fn power_law_constants(d: u32, p: f64) -> Result<(f64, f64, bool)> {
    if !(2..=4).contains(&d) {
        return Err(Error::config("d", "power-law exponents cover 2 <= d <= 4"));
    }
    let df = d as f64;
    let theta = df / ((df + 2.0) * p - 2.0 * df);
    let beta = (3.0 - p) * p / (p - 1.0);
    let admissible = p >= (df + 2.0) / 2.0 && p <= 3.0;
    Ok((theta, beta, admissible))
}

/// Critical exponent of the Ladyzhenskaya model:
/// p_c = 3/2 + √((d+18)/(d+2))/2, for 2 ≤ d ≤ 6.
pub fn ladyzhenskaya_pc(d: u32) -> Result<f64> {
    if !(2..=6).contains(&d) {
        return Err(Error::config("d", "requires 2 <= d <= 6"));
    }
    let df = d as f64;
    Ok(1.5 + 0.5 * ((df + 18.0) / (df + 2.0)).sqrt())
}
