//! State, regularization layers and right-hand-side assembly.
//!
//! The unknown is `𝐮 = (n, c, u)`. Writing `A^α = diag(−Δ, −Δ, P(−Δ)^α)`,
//! `B(𝐮) = (u·∇n, u·∇c, P(u·∇)u)` and
//!
//! ```text
//! F^ε(𝐮) = ( −div(n (∇c ∗ ρ^ε)) + n − n²,  −c (n ∗ ρ^ε),  P(n∇φ) ∗ ρ^ε )
//! ```
//!
//! the assembled drift is
//!
//! ```text
//! −J_k A^α 𝐮 − θ_R(‖𝐮‖_{W^{1,∞}}) J_k B(J_k 𝐮) + θ_R(‖𝐮‖_{W^{1,∞}}) J_k F^ε(J_k 𝐮)
//! ```
//!
//! where every layer that is switched off acts as the identity (`ρ^ε = δ`,
//! `J_k = Id`, `θ_R ≡ 1`). All quadratic products are formed on the grid
//! and masked by the dealiasing rule.

use crate::error::{parameter, Error, Result};
use crate::smooth::ramp_down;
use crate::spectral::ops::{fractional_symbol, mollifier_symbol, truncation_indicator};
use crate::spectral::{
    curl2d, dealias, dealias_vector, dealiased_product, div, grad, helmholtz_project, partial,
    Field, SpectralField, SpectralGrid, SpectralVectorField, TruncationBand, VectorField,
};

/// Cell density, chemical concentration and velocity on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub n: Field,
    pub c: Field,
    pub u: VectorField,
}

impl State {
    pub fn new(n: Field, c: Field, u: VectorField) -> Result<Self> {
        n.grid().check_same(c.grid())?;
        n.grid().check_same(u.grid())?;
        Ok(Self { n, c, u })
    }

    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            n: Field::zeros(grid),
            c: Field::zeros(grid),
            u: VectorField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.n.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.n.is_finite() && self.c.is_finite() && self.u.is_finite()
    }

    pub fn to_spectral(&self) -> SpectralState {
        SpectralState {
            n: self.n.to_spectral(),
            c: self.c.to_spectral(),
            u: self.u.to_spectral(),
        }
    }

    /// Mollifies every component (the regularized initial datum).
    pub fn mollified(&self, eps: f64) -> Result<State> {
        let s = self.to_spectral();
        let g = self.grid().clone();
        let sym = |i: usize| mollifier_symbol(g.radial_wavenumber(i), eps);
        if !(eps > 0.0) {
            return Err(parameter("eps", format!("must be positive, got {eps}")));
        }
        Ok(SpectralState {
            n: s.n.apply_real_symbol(sym),
            c: s.c.apply_real_symbol(sym),
            u: s.u.apply_real_symbol(sym),
        }
        .to_physical())
    }

    /// Applies the dealiasing mask to every component and re-projects `u`.
    pub fn dealiased(&self) -> State {
        let s = self.to_spectral();
        SpectralState {
            n: dealias(&s.n),
            c: dealias(&s.c),
            u: helmholtz_project(&dealias_vector(&s.u)),
        }
        .to_physical()
    }

    /// Positivity tolerance `1e−8 · max(1, max n, max c)`.
    pub fn positivity_tolerance(&self) -> f64 {
        1e-8 * 1f64.max(self.n.max()).max(self.c.max())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub n: SpectralField,
    pub c: SpectralField,
    pub u: SpectralVectorField,
}

impl SpectralState {
    pub fn to_physical(&self) -> State {
        State {
            n: self.n.to_physical(),
            c: self.c.to_physical(),
            u: self.u.to_physical(),
        }
    }
}

/// Which approximation layers are active; `None` switches a layer off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizationParams {
    pub eps: Option<f64>,
    pub k_band: Option<f64>,
    pub r_cut: Option<f64>,
    /// Apply the annulus `1/k ≤ |ξ| ≤ k` to `n` and `c` too. Off by default:
    /// on the torus the mean of `n` and `c` is their mass.
    pub strict_annulus: bool,
}

impl Default for RegularizationParams {
    fn default() -> Self {
        Self::off()
    }
}

impl RegularizationParams {
    pub fn off() -> Self {
        Self {
            eps: None,
            k_band: None,
            r_cut: None,
            strict_annulus: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(parameter("eps", format!("must be positive, got {e}")));
            }
        }
        if let Some(k) = self.k_band {
            if !(k > 0.0) {
                return Err(parameter("k_band", format!("must be positive, got {k}")));
            }
        }
        if let Some(r) = self.r_cut {
            if !(r > 0.0) {
                return Err(parameter("r_cut", format!("must be positive, got {r}")));
            }
        }
        Ok(())
    }

    pub(crate) fn scalar_band(&self) -> TruncationBand {
        if self.strict_annulus {
            TruncationBand::Annulus
        } else {
            TruncationBand::LowPass
        }
    }

    /// Indicator of `J_k` on `n`/`c` at a flat index.
    pub(crate) fn keeps_scalar(&self, grid: &SpectralGrid, i: usize) -> bool {
        self.k_band
            .is_none_or(|k| truncation_indicator(grid.radial_wavenumber(i), k, self.scalar_band()))
    }

    /// Indicator of `J_k` on `u` at a flat index.
    pub(crate) fn keeps_velocity(&self, grid: &SpectralGrid, i: usize) -> bool {
        self.k_band
            .is_none_or(|k| truncation_indicator(grid.radial_wavenumber(i), k, TruncationBand::Annulus))
    }

    fn truncate_scalar(&self, f: &SpectralField) -> SpectralField {
        if self.k_band.is_none() {
            return f.clone();
        }
        let g = f.grid().clone();
        f.apply_real_symbol(|i| if self.keeps_scalar(&g, i) { 1.0 } else { 0.0 })
    }

    fn truncate_velocity(&self, u: &SpectralVectorField) -> SpectralVectorField {
        if self.k_band.is_none() {
            return u.clone();
        }
        let g = u.grid().clone();
        u.apply_real_symbol(|i| if self.keeps_velocity(&g, i) { 1.0 } else { 0.0 })
    }

    /// Applies `J_k` to every component.
    pub fn truncate_state(&self, s: &State) -> State {
        let sp = s.to_spectral();
        SpectralState {
            n: self.truncate_scalar(&sp.n),
            c: self.truncate_scalar(&sp.c),
            u: self.truncate_velocity(&sp.u),
        }
        .to_physical()
    }

    fn mollify_scalar(&self, f: &SpectralField) -> SpectralField {
        match self.eps {
            None => f.clone(),
            Some(e) => {
                let g = f.grid().clone();
                f.apply_real_symbol(|i| mollifier_symbol(g.radial_wavenumber(i), e))
            }
        }
    }

    fn mollify_vector(&self, u: &SpectralVectorField) -> SpectralVectorField {
        match self.eps {
            None => u.clone(),
            Some(e) => {
                let g = u.grid().clone();
                u.apply_real_symbol(|i| mollifier_symbol(g.radial_wavenumber(i), e))
            }
        }
    }
}

/// Potential `φ` with its precomputed gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub phi: Field,
    pub grad_phi: VectorField,
}

impl Potential {
    pub fn from_phi(phi: Field) -> Result<Self> {
        if !phi.is_finite() {
            return Err(Error::Precondition("potential has non-finite samples".into()));
        }
        let s = phi.to_spectral();
        let grad_phi = VectorField::new(partial(&s, 0).to_physical(), partial(&s, 1).to_physical())?;
        Ok(Self { phi, grad_phi })
    }

    /// `φ = g·L/(2π) · sin(2πx₂/L)`, so that `‖∇φ‖_{L^∞} = g`.
    pub fn sinusoidal(grid: &SpectralGrid, strength: f64) -> Self {
        let l = grid.side_length();
        let w = 2.0 * std::f64::consts::PI / l;
        let phi = Field::from_fn(grid, |_, y| strength / w * (w * y).sin());
        let grad_phi = VectorField::from_fns(grid, |_, _| 0.0, |_, y| strength * (w * y).cos());
        Self { phi, grad_phi }
    }

    pub fn zero(grid: &SpectralGrid) -> Self {
        Self {
            phi: Field::zeros(grid),
            grad_phi: VectorField::zeros(grid),
        }
    }

    /// `‖φ‖_{L^∞} + ‖∇φ‖_{L^∞}` on the grid.
    pub fn w1inf_norm(&self) -> f64 {
        self.phi.max_abs() + self.grad_phi.magnitude().max_abs()
    }
}

/// Smooth cutoff: 1 on `[0, R]`, 0 on `[2R, ∞)`,
/// `θ_R(x) = 1 − step((x − R)/R)` in between.
pub fn theta_cutoff(x: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) {
        return Err(parameter("r_cut", format!("must be positive, got {r}")));
    }
    Ok(ramp_down(x, r, 2.0 * r))
}

fn gradient_sup(f: &SpectralField) -> f64 {
    let d1 = partial(f, 0).to_physical();
    let d2 = partial(f, 1).to_physical();
    d1.zip_with(&d2, f64::hypot).max_abs()
}

/// `max` over `n, c, u₁, u₂` of `‖f‖_{L^∞} + ‖∇f‖_{L^∞}`.
pub fn w1inf_norm(state: &State) -> f64 {
    let s = state.to_spectral();
    [
        (&state.n, &s.n),
        (&state.c, &s.c),
        (&state.u.components[0], &s.u.components[0]),
        (&state.u.components[1], &s.u.components[1]),
    ]
    .iter()
    .map(|(f, fs)| f.max_abs() + gradient_sup(fs))
    .fold(0.0, f64::max)
}

/// Dealiased `u·∇f`.
pub fn transport(u: &VectorField, f: &Field) -> Result<Field> {
    u.grid().check_same(f.grid())?;
    Ok(transport_spectral(u, &f.to_spectral()).to_physical())
}

fn transport_spectral(u: &VectorField, f: &SpectralField) -> SpectralField {
    let d1 = partial(f, 0).to_physical();
    let d2 = partial(f, 1).to_physical();
    let prod = u.components[0].zip_with(&d1, |a, b| a * b);
    let prod = prod.zip_with(&u.components[1].zip_with(&d2, |a, b| a * b), |a, b| a + b);
    dealias(&prod.to_spectral())
}

/// A tendency `(dn, dc, du)` in physical space.
#[derive(Debug, Clone, PartialEq)]
pub struct Tendency {
    pub dn: Field,
    pub dc: Field,
    pub du: VectorField,
}

/// Spectral tendency used by the integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTendency {
    pub dn: SpectralField,
    pub dc: SpectralField,
    pub du: SpectralVectorField,
}

impl SpectralTendency {
    pub fn to_physical(&self) -> Tendency {
        Tendency {
            dn: self.dn.to_physical(),
            dc: self.dc.to_physical(),
            du: self.du.to_physical(),
        }
    }

    fn scaled(&self, s: f64) -> SpectralTendency {
        SpectralTendency {
            dn: self.dn.scale(s),
            dc: self.dc.scale(s),
            du: self.du.scale(s),
        }
    }

    fn plus(&self, other: &SpectralTendency) -> SpectralTendency {
        SpectralTendency {
            dn: self.dn.zip_coeffs(&other.dn, |a, b| a + b),
            dc: self.dc.zip_coeffs(&other.dc, |a, b| a + b),
            du: SpectralVectorField {
                components: [
                    self.du.components[0].zip_coeffs(&other.du.components[0], |a, b| a + b),
                    self.du.components[1].zip_coeffs(&other.du.components[1], |a, b| a + b),
                ],
                divergence_free: true,
            },
        }
    }
}

fn forcing_parts(
    n: &Field,
    c: &Field,
    cs: &SpectralField,
    ns: &SpectralField,
    params: &RegularizationParams,
    potential: &Potential,
) -> SpectralTendency {
    // −div(n (∇c ∗ ρ^ε)) + n − n²
    let grad_c = grad(&params.mollify_scalar(cs)).to_physical();
    let flux = SpectralVectorField {
        components: [
            dealias(&n.zip_with(&grad_c.components[0], |a, b| a * b).to_spectral()),
            dealias(&n.zip_with(&grad_c.components[1], |a, b| a * b).to_spectral()),
        ],
        divergence_free: false,
    };
    let chemotaxis = div(&flux).expect("same grid");
    let square = dealias(&n.zip_with(n, |a, b| a * b).to_spectral());
    let dn = ns
        .zip_coeffs(&square, |a, b| a - b)
        .zip_coeffs(&chemotaxis, |a, b| a - b);

    // −c (n ∗ ρ^ε)
    let n_moll = params.mollify_scalar(ns).to_physical();
    let dc = dealias(&c.zip_with(&n_moll, |a, b| -a * b).to_spectral());

    // P(n∇φ) ∗ ρ^ε
    let buoyancy = SpectralVectorField {
        components: [
            dealiased_product(n, &potential.grad_phi.components[0]).expect("same grid"),
            dealiased_product(n, &potential.grad_phi.components[1]).expect("same grid"),
        ],
        divergence_free: false,
    };
    let du = helmholtz_project(&params.mollify_vector(&buoyancy));

    SpectralTendency { dn, dc, du }
}

/// `F^ε(𝐮)` without truncation or cutoff.
pub fn forcing(state: &State, params: &RegularizationParams, potential: &Potential) -> Result<Tendency> {
    params.validate()?;
    state.grid().check_same(potential.phi.grid())?;
    let s = state.to_spectral();
    Ok(forcing_parts(&state.n, &state.c, &s.c, &s.n, params, potential).to_physical())
}

fn transport_parts(u: &VectorField, s: &SpectralState) -> SpectralTendency {
    let adv = SpectralVectorField {
        components: [
            transport_spectral(u, &s.u.components[0]),
            transport_spectral(u, &s.u.components[1]),
        ],
        divergence_free: false,
    };
    SpectralTendency {
        dn: transport_spectral(u, &s.n),
        dc: transport_spectral(u, &s.c),
        du: helmholtz_project(&adv),
    }
}

/// `θ_R(‖𝐮‖_{W^{1,∞}})`, or 1 when the cutoff is off.
pub fn cutoff_factor(state: &State, params: &RegularizationParams) -> f64 {
    match params.r_cut {
        Some(r) => theta_cutoff(w1inf_norm(state), r).expect("validated"),
        None => 1.0,
    }
}

/// Explicit part of the drift, `θ J_k (F^ε − B)(J_k 𝐮)`.
pub fn nonlinear_tendency(
    state: &State,
    spectral: &SpectralState,
    params: &RegularizationParams,
    potential: &Potential,
) -> SpectralTendency {
    let theta = cutoff_factor(state, params);
    nonlinear_tendency_with_cutoff(state, spectral, params, potential, theta)
}

/// As [`nonlinear_tendency`] with a given value of the cutoff factor.
pub fn nonlinear_tendency_with_cutoff(
    state: &State,
    spectral: &SpectralState,
    params: &RegularizationParams,
    potential: &Potential,
    theta: f64,
) -> SpectralTendency {
    let g = state.grid();
    if theta == 0.0 {
        return SpectralTendency {
            dn: SpectralField::zeros(g),
            dc: SpectralField::zeros(g),
            du: SpectralVectorField::zeros(g),
        };
    }

    let (phys, spec) = if params.k_band.is_some() {
        let spec = SpectralState {
            n: params.truncate_scalar(&spectral.n),
            c: params.truncate_scalar(&spectral.c),
            u: params.truncate_velocity(&spectral.u),
        };
        (spec.to_physical(), spec)
    } else {
        (state.clone(), spectral.clone())
    };

    let b = transport_parts(&phys.u, &spec);
    let f = forcing_parts(&phys.n, &phys.c, &spec.c, &spec.n, params, potential);
    let combined = f.plus(&b.scaled(-1.0));
    let truncated = SpectralTendency {
        dn: params.truncate_scalar(&combined.dn),
        dc: params.truncate_scalar(&combined.dc),
        du: params.truncate_velocity(&combined.du),
    };
    if theta == 1.0 {
        truncated
    } else {
        truncated.scaled(theta)
    }
}

/// Diffusion symbols `(μ_n, μ_c, μ_u)` at a flat index, with the `J_k`
/// indicator folded in.
pub fn linear_symbols(grid: &SpectralGrid, i: usize, alpha: f64, params: &RegularizationParams) -> (f64, f64, f64) {
    let r = grid.radial_wavenumber(i);
    let scalar = if params.keeps_scalar(grid, i) {
        fractional_symbol(r, 1.0)
    } else {
        0.0
    };
    let velocity = if params.keeps_velocity(grid, i) {
        fractional_symbol(r, alpha)
    } else {
        0.0
    };
    (scalar, scalar, velocity)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.5..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(parameter("alpha", format!("must lie in [1/2, 1], got {alpha}")))
    }
}

/// Full drift `−J_k A^α 𝐮 − θ J_k B(J_k 𝐮) + θ J_k F^ε(J_k 𝐮)`.
pub fn rhs(state: &State, params: &RegularizationParams, potential: &Potential, alpha: f64) -> Result<Tendency> {
    Ok(rhs_spectral(state, params, potential, alpha)?.to_physical())
}

pub fn rhs_spectral(
    state: &State,
    params: &RegularizationParams,
    potential: &Potential,
    alpha: f64,
) -> Result<SpectralTendency> {
    check_alpha(alpha)?;
    params.validate()?;
    state.grid().check_same(potential.phi.grid())?;
    let s = state.to_spectral();
    let nl = nonlinear_tendency(state, &s, params, potential);
    let g = state.grid().clone();
    let lin_n = s.n.apply_real_symbol(|i| -linear_symbols(&g, i, alpha, params).0);
    let lin_c = s.c.apply_real_symbol(|i| -linear_symbols(&g, i, alpha, params).1);
    let lin_u = s.u.apply_real_symbol(|i| -linear_symbols(&g, i, alpha, params).2);
    let linear = SpectralTendency {
        dn: lin_n,
        dc: lin_c,
        du: helmholtz_project(&lin_u),
    };
    Ok(linear.plus(&nl))
}

/// Tendency of the vorticity `v = ∇∧u`:
/// `−J_k(−Δ)^α v − θ J_k(u_k·∇v_k) + θ J_k ∇∧(P(n_k∇φ) ∗ ρ^ε)`.
pub fn vorticity_rhs(state: &State, potential: &Potential, params: &RegularizationParams, alpha: f64) -> Result<Field> {
    check_alpha(alpha)?;
    params.validate()?;
    state.grid().check_same(potential.phi.grid())?;
    let g = state.grid().clone();
    let s = state.to_spectral();
    let v = curl2d(&s.u)?;
    let diffusion = v.apply_real_symbol(|i| -linear_symbols(&g, i, alpha, params).2);

    let theta = match params.r_cut {
        Some(r) => theta_cutoff(w1inf_norm(state), r)?,
        None => 1.0,
    };
    if theta == 0.0 {
        return Ok(diffusion.to_physical());
    }
    let u_k = params.truncate_velocity(&s.u);
    let n_k = params.truncate_scalar(&s.n).to_physical();
    let v_k = curl2d(&u_k)?;
    let advect = transport_spectral(&u_k.to_physical(), &v_k);
    let buoyancy = SpectralVectorField {
        components: [
            dealiased_product(&n_k, &potential.grad_phi.components[0])?,
            dealiased_product(&n_k, &potential.grad_phi.components[1])?,
        ],
        divergence_free: false,
    };
    let forced = curl2d(&helmholtz_project(&params.mollify_vector(&buoyancy)))?;
    let nonlinear = forced.zip_coeffs(&advect, |a, b| a - b);
    let nonlinear = nonlinear.apply_real_symbol(|i| {
        if params.keeps_velocity(&g, i) {
            theta
        } else {
            0.0
        }
    });
    Ok(diffusion.zip_coeffs(&nonlinear, |a, b| a + b).to_physical())
}
