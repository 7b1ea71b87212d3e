use std::f64::consts::PI;

use chemoflow::lp_besov::{homogeneous_sobolev_norm, sobolev_norm_spectral};
use chemoflow::model::*;
use chemoflow::spectral::sampling::{random_solenoidal, random_spectral};
use chemoflow::spectral::{curl2d, fractional_laplacian, laplacian, Field, SpectralField, SpectralGrid, VectorField};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// modes up to 5 on N = 32 stay clear of aliasing for cubic integrands
const MAX_MODE: i64 = 5;

fn random_state(g: &SpectralGrid, seed: u64) -> State {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = random_spectral(g, &mut rng, MAX_MODE, false).to_physical().map(|v| 1.0 + 0.3 * v);
    let c = random_spectral(g, &mut rng, MAX_MODE, false).to_physical().map(|v| 2.0 + 0.3 * v);
    let u = random_solenoidal(g, &mut rng, MAX_MODE);
    State::new(n, c, u).unwrap()
}

fn grid() -> SpectralGrid {
    SpectralGrid::new(32, 2.0 * PI).unwrap()
}

fn relative(a: &Field, b: &Field) -> f64 {
    a.sub(b).unwrap().l2_norm() / b.l2_norm().max(1e-300)
}

#[test]
fn transport_trivial_cases() {
    let g = grid();
    let s = random_state(&g, 1);
    assert_eq!(transport(&VectorField::zeros(&g), &s.n).unwrap().max_abs(), 0.0);
    assert!(transport(&s.u, &Field::constant(&g, 3.0)).unwrap().max_abs() < 1e-13);
}

#[test]
fn transport_is_skew_symmetric() {
    let g = grid();
    for seed in 0..10 {
        let s = random_state(&g, 10 + seed);
        for f in [&s.n, &s.c, &s.u.components[0], &s.u.components[1]] {
            let t = transport(&s.u, f).unwrap();
            let pairing = t.inner(f).unwrap();
            let scale = t.l2_norm() * f.l2_norm();
            assert!(pairing.abs() < 1e-10 * scale, "{pairing} vs {scale}");
        }
    }
}

#[test]
fn forcing_preserves_the_mass_identity() {
    let g = grid();
    let pot = Potential::sinusoidal(&g, 1.0);
    for eps in [None, Some(0.3)] {
        let params = RegularizationParams { eps, ..RegularizationParams::off() };
        let s = random_state(&g, 3);
        let f = forcing(&s, &params, &pot).unwrap();
        let expected = s.n.map(|v| v - v * v).integral();
        assert!((f.dn.integral() - expected).abs() < 1e-12 * expected.abs().max(1.0));
    }
}

#[test]
fn cutoff_above_threshold_leaves_only_diffusion() {
    let g = grid();
    let s = random_state(&g, 4);
    let pot = Potential::sinusoidal(&g, 1.0);
    let norm = w1inf_norm(&s);
    let params = RegularizationParams {
        r_cut: Some(0.4 * norm),
        ..RegularizationParams::off()
    };
    let alpha = 0.75;
    let t = rhs(&s, &params, &pot, alpha).unwrap();
    let lap_n = laplacian(&s.n.to_spectral()).to_physical();
    let lap_c = laplacian(&s.c.to_spectral()).to_physical();
    assert!(relative(&t.dn, &lap_n) < 1e-12);
    assert!(relative(&t.dc, &lap_c) < 1e-12);
    for i in 0..2 {
        let expected = fractional_laplacian(&s.u.components[i].to_spectral(), alpha)
            .unwrap()
            .to_physical()
            .scale(-1.0);
        assert!(relative(&t.du.components[i], &expected) < 1e-12);
    }
}

#[test]
fn diffusion_energy_pairing() {
    let g = grid();
    let pot = Potential::zero(&g);
    for alpha in [0.5, 0.8, 1.0] {
        let s = random_state(&g, 5);
        let params = RegularizationParams {
            r_cut: Some(1e-6),
            ..RegularizationParams::off()
        };
        let t = rhs(&s, &params, &pot, alpha).unwrap();
        let pairing = t.du.inner(&s.u).unwrap();
        let spec = s.u.to_spectral();
        let energy: f64 = spec
            .components
            .iter()
            .map(|c| homogeneous_sobolev_norm(c, alpha).powi(2))
            .sum::<f64>()
            * g.area();
        assert!((pairing + energy).abs() < 1e-10 * energy, "{pairing} vs {energy}");
    }
}

#[test]
fn mollification_error_is_second_order() {
    let g = SpectralGrid::new(32, 2.0 * PI).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = random_spectral(&g, &mut rng, 2, false).to_physical().map(|v| 1.0 + 0.3 * v);
    let c = random_spectral(&g, &mut rng, 2, false).to_physical().map(|v| 1.0 + 0.3 * v);
    let u = random_solenoidal(&g, &mut rng, 2);
    let s = State::new(n, c, u).unwrap();
    let pot = Potential::sinusoidal(&g, 1.0);
    let base = rhs(&s, &RegularizationParams::off(), &pot, 0.75).unwrap();
    let gap = |eps: f64| {
        let p = RegularizationParams {
            eps: Some(eps),
            ..RegularizationParams::off()
        };
        let t = rhs(&s, &p, &pot, 0.75).unwrap();
        let dn = t.dn.sub(&base.dn).unwrap().l2_norm();
        let dc = t.dc.sub(&base.dc).unwrap().l2_norm();
        let du = t.du.sub(&base.du).unwrap().l2_norm();
        (dn * dn + dc * dc + du * du).sqrt()
    };
    let eps = [0.2, 0.1, 0.05];
    let gaps: Vec<f64> = eps.iter().map(|&e| gap(e)).collect();
    // least-squares slope on log-log axes
    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / 3.0;
    let my = ys.iter().sum::<f64>() / 3.0;
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope - 2.0).abs() < 0.2, "slope {slope}, gaps {gaps:?}");
}

fn curl_matches_vorticity_tendency(params: RegularizationParams, alpha: f64, seed: u64) {
    let g = grid();
    let s = random_state(&g, seed);
    let pot = Potential::sinusoidal(&g, 1.3);
    let t = rhs(&s, &params, &pot, alpha).unwrap();
    let curl = curl2d(&t.du.to_spectral()).unwrap().to_physical();
    let direct = vorticity_rhs(&s, &pot, &params, alpha).unwrap();
    assert!(relative(&curl, &direct) < 1e-8, "{}", relative(&curl, &direct));
}

#[test]
fn vorticity_tendency_is_curl_of_momentum_tendency() {
    for seed in 0..5 {
        curl_matches_vorticity_tendency(RegularizationParams::off(), 0.5 + 0.1 * seed as f64, 20 + seed);
    }
    let s = random_state(&grid(), 25);
    let layered = RegularizationParams {
        eps: Some(0.2),
        k_band: Some(3.0 / (2.0 * PI)),
        r_cut: Some(w1inf_norm(&s)),
        strict_annulus: false,
    };
    curl_matches_vorticity_tendency(layered, 0.75, 25);
}

#[test]
fn single_mode_vorticity_only_diffuses() {
    let g = grid();
    let alpha = 0.6;
    // Kolmogorov flow u = (sin 3x₂, 0) on L = 2π
    let u = VectorField::from_fns(&g, |_, y| (3.0 * y).sin(), |_, _| 0.0);
    let s = State::new(Field::zeros(&g), Field::zeros(&g), u).unwrap();
    let v = curl2d(&s.u.to_spectral()).unwrap().to_physical();
    let out = vorticity_rhs(&s, &Potential::sinusoidal(&g, 1.0), &RegularizationParams::off(), alpha).unwrap();
    let expected = v.scale(-(3.0f64).powf(2.0 * alpha));
    assert!(relative(&out, &expected) < 1e-12);
    let zero = vorticity_rhs(&State::zeros(&g), &Potential::zero(&g), &RegularizationParams::off(), alpha).unwrap();
    assert_eq!(zero.max_abs(), 0.0);
}

#[test]
fn inactive_layers_match_the_limit_system() {
    let g = grid();
    let s = random_state(&g, 7);
    let pot = Potential::sinusoidal(&g, 1.0);
    let base = rhs(&s, &RegularizationParams::off(), &pot, 0.9).unwrap();
    let wide = RegularizationParams {
        eps: Some(1e-7),
        k_band: Some(2.0 * g.max_wavenumber()),
        r_cut: Some(1e12),
        strict_annulus: false,
    };
    let t = rhs(&s, &wide, &pot, 0.9).unwrap();
    assert!(relative(&t.dn, &base.dn) < 1e-10);
    assert!(relative(&t.dc, &base.dc) < 1e-10);
    // the annulus drops ξ = 0, so the mean momentum forcing ∫n∇φ is removed
    let centered = |u: &VectorField| {
        VectorField::new(
            u.components[0].map(|v| v - u.components[0].mean()),
            u.components[1].map(|v| v - u.components[1].mean()),
        )
        .unwrap()
    };
    assert!(t.du.components[0].mean().abs() < 1e-14 && t.du.components[1].mean().abs() < 1e-14);
    let gap = centered(&t.du).sub(&centered(&base.du)).unwrap().l2_norm();
    assert!(gap < 1e-10 * base.du.l2_norm(), "{gap}");
}

#[test]
fn momentum_tendency_is_solenoidal() {
    let g = grid();
    let s = random_state(&g, 8);
    let t = rhs(&s, &RegularizationParams::off(), &Potential::sinusoidal(&g, 2.0), 0.7).unwrap();
    assert!(t.du.to_spectral().divergence_residual() < 1e-12);
}

// |(T(𝐮), 𝐮)_{H^s}| summed over the four scalar components
fn hs_pairing(t: &Tendency, s: &State, order: f64) -> f64 {
    let pairs = [
        (t.dn.to_spectral(), s.n.to_spectral()),
        (t.dc.to_spectral(), s.c.to_spectral()),
        (t.du.components[0].to_spectral(), s.u.components[0].to_spectral()),
        (t.du.components[1].to_spectral(), s.u.components[1].to_spectral()),
    ];
    pairs
        .iter()
        .map(|(a, b)| weighted_inner(a, b, order))
        .sum::<f64>()
        .abs()
}

fn weighted_inner(a: &SpectralField, b: &SpectralField, order: f64) -> f64 {
    let g = a.grid();
    a.coeffs()
        .iter()
        .zip(b.coeffs())
        .enumerate()
        .map(|(i, (x, y))| {
            let w = 2.0 * PI * g.radial_wavenumber(i);
            (1.0 + w * w).powf(order) * (x * y.conj()).re
        })
        .sum()
}

fn hs_norm_sq(s: &State, order: f64) -> f64 {
    [s.n.to_spectral(), s.c.to_spectral(), s.u.components[0].to_spectral(), s.u.components[1].to_spectral()]
        .iter()
        .map(|f| sobolev_norm_spectral(f, order).powi(2))
        .sum()
}

fn grad_sup(s: &State) -> f64 {
    [&s.n, &s.c, &s.u.components[0], &s.u.components[1]]
        .iter()
        .map(|f| {
            let spec = f.to_spectral();
            let g = chemoflow::spectral::grad(&spec).to_physical();
            g.magnitude().max_abs()
        })
        .fold(0.0, f64::max)
}

fn appendix_ratios(n: usize, order: f64) -> (f64, f64) {
    let g = SpectralGrid::new(n, 2.0 * PI).unwrap();
    let pot = Potential::sinusoidal(&g, 1.0);
    let params = RegularizationParams {
        eps: Some(0.3),
        ..RegularizationParams::off()
    };
    let mut worst = (0.0f64, 0.0f64);
    for seed in 0..12 {
        let s = random_state(&g, 300 + seed);
        let transport_part = {
            let t = Tendency {
                dn: transport(&s.u, &s.n).unwrap(),
                dc: transport(&s.u, &s.c).unwrap(),
                du: chemoflow::spectral::helmholtz_project(&VectorField::new(
                    transport(&s.u, &s.u.components[0]).unwrap(),
                    transport(&s.u, &s.u.components[1]).unwrap(),
                )
                .unwrap()
                .to_spectral())
                .to_physical(),
            };
            hs_pairing(&t, &s, order) / (grad_sup(&s) * hs_norm_sq(&s, order))
        };
        let f = forcing(&s, &params, &pot).unwrap();
        let forcing_part = hs_pairing(&f, &s, order) / (w1inf_norm(&s) * hs_norm_sq(&s, order));
        worst = (worst.0.max(transport_part), worst.1.max(forcing_part));
    }
    worst
}

#[test]
fn appendix_pairings_stay_bounded() {
    for order in [1.0, 2.0] {
        let (b32, f32_) = appendix_ratios(32, order);
        let (b64, f64_) = appendix_ratios(64, order);
        for (coarse, fine) in [(b32, b64), (f32_, f64_)] {
            assert!(coarse.is_finite() && fine.is_finite());
            assert!(fine <= 1.2 * coarse + 1e-12, "order {order}: {coarse} vs {fine}");
        }
    }
}
