//! Generating symbols δ(ξ) of the discrete fractional derivatives, their
//! sector position on the unit circle, the multiplier factor used for the
//! L1 schemes and the step-size bounds of the explicit schemes.

use crate::error::{Error, Result};
use crate::order::{FracOrder, Regime};
use crate::special::{frac_power, gamma_real, polylog_circle};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::{PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolScheme {
    Be,
    Bdf2,
    L1Sub,
    L1Wave,
    Ee,
    Fcn,
}

/// How θ maps to the unit circle for a given scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CircleConvention {
    /// ξ = e^{iθ}
    #[serde(rename = "exp(+i theta)")]
    PlusI,
    /// ξ = e^{-iθ}
    #[serde(rename = "exp(-i theta)")]
    MinusI,
}

impl CircleConvention {
    pub fn point(self, theta: f64) -> Complex64 {
        match self {
            CircleConvention::PlusI => Complex64::from_polar(1.0, theta),
            CircleConvention::MinusI => Complex64::from_polar(1.0, -theta),
        }
    }
}

impl SymbolScheme {
    /// The L1 analysis runs on e^{-iθ}; everything else on e^{iθ}.
    pub fn convention(self) -> CircleConvention {
        match self {
            SymbolScheme::L1Sub | SymbolScheme::L1Wave => CircleConvention::MinusI,
            _ => CircleConvention::PlusI,
        }
    }

    fn check_regime(self, alpha: FracOrder) -> Result<()> {
        let ok = match self {
            SymbolScheme::L1Sub => alpha.regime() == Regime::Sub,
            SymbolScheme::L1Wave => alpha.regime() == Regime::Wave,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain("delta", format!("{self:?} is not defined for α = {}", alpha.value())))
        }
    }
}

/// One point of the image curve θ ↦ τ^{-α} δ(ξ(θ)).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSample {
    pub theta: f64,
    pub value: Complex64,
    pub modulus: f64,
    pub argument: f64,
    pub convention: CircleConvention,
}

const UNIT_TOL: f64 = 1e-12;

/// θ ∈ [0, 2π) with ξ = e^{-iθ}.
fn minus_angle(xi: Complex64) -> f64 {
    let t = -xi.im.atan2(xi.re);
    if t < 0.0 {
        t + TAU
    } else {
        t
    }
}

fn on_circle(op: &'static str, xi: Complex64) -> Result<f64> {
    if (xi.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::domain(op, format!("|ξ| = {} but the polylog form needs |ξ| = 1", xi.norm())));
    }
    Ok(minus_angle(xi))
}

/// Generating symbol δ(ξ) of a scheme, ξ in the closed unit disk.
///
/// L1 symbols are only available on the unit circle minus ξ = 1 (and ξ = -1
/// for the superdiffusive rule).
pub fn delta(scheme: SymbolScheme, alpha: FracOrder, xi: Complex64) -> Result<Complex64> {
    scheme.check_regime(alpha)?;
    let a = alpha.value();
    if xi.norm() > 1.0 + UNIT_TOL {
        return Err(Error::domain("delta", format!("|ξ| = {} exceeds 1", xi.norm())));
    }
    let one = Complex64::new(1.0, 0.0);
    match scheme {
        SymbolScheme::Be => frac_power(one - xi, a),
        SymbolScheme::Bdf2 => {
            // Product of principal powers of the two linear factors keeps the
            // phase continuous; the product of the factors itself never wraps.
            let f1 = frac_power(one - xi, a)?;
            let f2 = frac_power(one - xi / 3.0, a)?;
            Ok(1.5f64.powf(a) * f1 * f2)
        }
        SymbolScheme::Ee => {
            if xi.norm() == 0.0 {
                return Err(Error::domain("delta", "explicit Euler symbol has a pole at ξ = 0"));
            }
            Ok(frac_power(one - xi, a)? / xi)
        }
        SymbolScheme::Fcn => {
            let den = (1.0 - 0.5 * a) + 0.5 * a * xi;
            if den.norm() < 1e-300 {
                return Err(Error::domain("delta", "fractional Crank-Nicolson symbol has a pole here"));
            }
            Ok(frac_power(one - xi, a)? / den)
        }
        SymbolScheme::L1Sub => {
            let theta = on_circle("delta", xi)?;
            let li = polylog_circle(a - 1.0, theta)?;
            // (1-ξ)²/ξ = 2cos θ - 2 on the circle
            Ok(li * ((2.0 * theta.cos() - 2.0) / gamma_real(2.0 - a)))
        }
        SymbolScheme::L1Wave => {
            let theta = on_circle("delta", xi)?;
            if (theta - PI).abs() < 1e-12 {
                return Err(Error::domain("delta", "superdiffusive L1 symbol is singular at ξ = -1"));
            }
            let li = polylog_circle(a - 2.0, theta)?;
            // (1-ξ)/(1+ξ) = i tan(θ/2) for ξ = e^{-iθ}
            let factor = 2.0 * (2.0 * theta.cos() - 2.0) * (0.5 * theta).tan() / gamma_real(3.0 - a);
            Ok(Complex64::i() * li * factor)
        }
    }
}

/// Symbol of the alternative kernel z^{1-α}(1-z)^α, kept only as a
/// counterexample: it leaves the sector Σ_{απ/2} for α < 2/3.
pub fn lizama_delta(alpha: FracOrder, xi: Complex64) -> Result<Complex64> {
    let a = alpha.value();
    Ok(frac_power(xi, 1.0 - a)? * frac_power(Complex64::new(1.0, 0.0) - xi, a)?)
}

/// Uniform θ grid on (0, 2π) offset by half a cell, so it never hits 0, π or 2π
/// when `n` is even.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| TAU * (k as f64 + 0.5) / n as f64).collect()
}

/// Sample the image curve of τ^{-α} δ on `n_points` grid angles.
pub fn curve_sample(scheme: SymbolScheme, alpha: FracOrder, tau: f64, n_points: usize) -> Result<Vec<CurveSample>> {
    if !(tau > 0.0) {
        return Err(Error::domain("curve_sample", format!("tau = {tau} must be positive")));
    }
    if n_points < 2 || n_points % 2 == 1 {
        return Err(Error::domain("curve_sample", "n_points must be even and ≥ 2"));
    }
    let conv = scheme.convention();
    let scale = tau.powf(-alpha.value());
    theta_grid(n_points)
        .into_iter()
        .map(|theta| {
            let value = delta(scheme, alpha, conv.point(theta))? * scale;
            Ok(CurveSample { theta, value, modulus: value.norm(), argument: value.im.atan2(value.re), convention: conv })
        })
        .collect()
}

/// απ/2 - |arg δ(ξ(θ))| on the given angles; negative means the symbol has
/// left the sector Σ_{απ/2}.
pub fn sector_margin(scheme: SymbolScheme, alpha: FracOrder, theta_grid: &[f64]) -> Result<Vec<f64>> {
    let conv = scheme.convention();
    theta_grid
        .iter()
        .map(|&theta| {
            let d = delta(scheme, alpha, conv.point(theta))?;
            Ok(alpha.half_angle() - d.im.atan2(d.re).abs())
        })
        .collect()
}

/// The factor d(ξ) with ξ M'(ξ)(1-ξ) = d(ξ) M(ξ)(1 - M(ξ)) for the L1
/// multiplier M = δ/(δ - z); ξ on the unit circle.
pub fn d_factor(alpha: FracOrder, xi: Complex64) -> Result<Complex64> {
    let a = alpha.value();
    let theta = on_circle("d_factor", xi)?;
    let one = Complex64::new(1.0, 0.0);
    let q = (one - xi) / xi;
    match alpha.regime() {
        Regime::Sub => {
            let l1 = polylog_circle(a - 1.0, theta)?;
            let l2 = polylog_circle(a - 2.0, theta)?;
            Ok((one + xi) * (-2.0 + q * (l2 - l1) / l1))
        }
        Regime::Wave => {
            let l2 = polylog_circle(a - 2.0, theta)?;
            let l3 = polylog_circle(a - 3.0, theta)?;
            Ok((one + xi) * (-3.0 + q * (l3 - l2) / l2) + (xi - one))
        }
    }
}

/// Largest admissible τ^α r(A) for explicit Euler when the numerical range
/// avoids Σ_φ: 2^α sin((φ - απ/2)/(2-α))^α, for φ ∈ (απ/2, π].
pub fn ee_stability_bound(alpha: FracOrder, phi: f64) -> Result<f64> {
    let a = alpha.value();
    if !(phi > alpha.half_angle() && phi <= PI) {
        return Err(Error::domain("ee_stability_bound", format!("phi = {phi} not in (απ/2, π]")));
    }
    Ok(2f64.powf(a) * ((phi - alpha.half_angle()) / (2.0 - a)).sin().powf(a))
}

/// |1 - α/2 + (α/2) e^{iθ}|.
pub fn cn_rho(alpha: FracOrder, theta: f64) -> f64 {
    let a = alpha.value();
    let c = 1.0 - 0.5 * a;
    (c * c + 0.25 * a * a + a * c * theta.cos()).max(0.0).sqrt()
}

/// Continuous argument of 1 - α/2 + (α/2) e^{iθ} for θ ∈ [0, 2π).
///
/// For α > 1 the circle winds around the origin, so the branch is lifted by
/// 2π past θ = π.
pub fn cn_psi(alpha: FracOrder, theta: f64) -> f64 {
    let a = alpha.value();
    let psi = (0.5 * a * theta.sin()).atan2(1.0 - 0.5 * a + 0.5 * a * theta.cos());
    if a > 1.0 && theta > PI && psi < 0.0 {
        psi + TAU
    } else {
        psi
    }
}

/// Root θ_φ ∈ (0, π) of ψ(θ) - αθ/2 = φ - απ/2, by bisection to 1e-12.
pub fn cn_theta_phi(alpha: FracOrder, phi: f64) -> Result<f64> {
    if alpha.regime() != Regime::Wave {
        return Err(Error::domain("cn_theta_phi", "only defined for 1 < α < 2"));
    }
    let a = alpha.value();
    if !(phi > alpha.half_angle() && phi < PI) {
        return Err(Error::domain("cn_theta_phi", format!("phi = {phi} not in (απ/2, π)")));
    }
    let g = |t: f64| cn_psi(alpha, t) - 0.5 * a * t - (phi - alpha.half_angle());
    let (mut lo, mut hi) = (0.0, PI);
    let (glo, ghi) = (g(lo), g(hi));
    if !(glo < 0.0 && ghi > 0.0) {
        return Err(Error::RootBracket(format!("g(0) = {glo}, g(π) = {ghi} for phi = {phi}")));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Largest admissible τ^α r(A) for fractional Crank-Nicolson with 1 < α < 2:
/// 2^α sin(θ_φ/2)^α / ρ(θ_φ).
pub fn cn_stability_bound(alpha: FracOrder, phi: f64) -> Result<f64> {
    let t = cn_theta_phi(alpha, phi)?;
    Ok(2f64.powf(alpha.value()) * (0.5 * t).sin().powf(alpha.value()) / cn_rho(alpha, t))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ExplicitScheme {
    Ee,
    Fcn,
}

/// Step-size condition of an explicit or semi-explicit scheme.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityBound {
    pub scheme: ExplicitScheme,
    pub alpha: FracOrder,
    pub phi: f64,
    /// Bound on τ^α r(A); `None` when the scheme is unconditionally stable.
    pub bound: Option<f64>,
    pub theta_phi: Option<f64>,
}

/// Bound for `scheme`. Fractional Crank-Nicolson with α < 1 needs none.
pub fn stability_bound(scheme: ExplicitScheme, alpha: FracOrder, phi: f64) -> Result<StabilityBound> {
    let (bound, theta_phi) = match (scheme, alpha.regime()) {
        (ExplicitScheme::Ee, _) => (Some(ee_stability_bound(alpha, phi)?), None),
        (ExplicitScheme::Fcn, Regime::Sub) => {
            if !(phi > alpha.half_angle() && phi <= PI) {
                return Err(Error::domain("stability_bound", format!("phi = {phi} not in (απ/2, π]")));
            }
            (None, None)
        }
        (ExplicitScheme::Fcn, Regime::Wave) => {
            let t = cn_theta_phi(alpha, phi)?;
            (Some(cn_stability_bound(alpha, phi)?), Some(t))
        }
    };
    Ok(StabilityBound { scheme, alpha, phi, bound, theta_phi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{bdf2_weights, be_weights, l1_weights};
    use proptest::prelude::*;

    fn fo(a: f64) -> FracOrder {
        FracOrder::new(a).unwrap()
    }

    fn series(c: &[f64], xi: Complex64) -> Complex64 {
        let mut s = Complex64::new(0.0, 0.0);
        let mut p = Complex64::new(1.0, 0.0);
        for &cj in c {
            s += p * cj;
            p *= xi;
        }
        s
    }

    #[test]
    fn examples() {
        let d = delta(SymbolScheme::Be, fo(0.5), Complex64::new(-1.0, 0.0)).unwrap();
        assert!((d - Complex64::new(2f64.sqrt(), 0.0)).norm() < 1e-15);
        let d = delta(SymbolScheme::Ee, fo(1.0 - 1e-12), Complex64::new(-1.0, 0.0)).unwrap();
        assert!((d + 2.0).norm() < 1e-10);
        let m = sector_margin(SymbolScheme::Ee, fo(0.5), &[PI / 2.0]).unwrap();
        assert!(m[0] < 0.0);
        let m = sector_margin(SymbolScheme::Be, fo(0.5), &[PI]).unwrap();
        assert!(m[0] > 0.0);
    }

    #[test]
    fn l1_small_angle_asymptotic() {
        // δ ≈ (iθ)^α as θ → 0
        let theta = 0.01;
        let xi = Complex64::from_polar(1.0, -theta);
        let d = delta(SymbolScheme::L1Sub, fo(0.5), xi).unwrap();
        let want = frac_power(Complex64::new(0.0, theta), 0.5).unwrap();
        assert!((d - want).norm() / want.norm() < 0.01);
    }

    #[test]
    fn l1_symbols_match_weight_series() {
        // δ = (1-ξ) Σ b_j ξ^j and δ = 2(1-ξ)²/((1+ξ)Γ(3-α)) Σ a_j ξ^j; checked
        // inside the disk by Abel limit r → 1.
        for (a, scheme) in [(0.4, SymbolScheme::L1Sub), (1.6, SymbolScheme::L1Wave)] {
            let w = l1_weights(fo(a), 400_000).unwrap().coeffs;
            for theta in [0.7, 2.0, 4.0] {
                let xi = Complex64::from_polar(1.0, -theta);
                let d = delta(scheme, fo(a), xi).unwrap();
                let z = xi * (1.0 - 5e-5);
                let s = series(&w, z);
                let one = Complex64::new(1.0, 0.0);
                let got = if scheme == SymbolScheme::L1Sub {
                    (one - z) * s
                } else {
                    (one - z) * (one - z) * s * 2.0 / ((one + z) * gamma_real(3.0 - a))
                };
                assert!((got - d).norm() < 1e-3 * d.norm(), "α {a} θ {theta}: {got} vs {d}");
            }
        }
    }

    #[test]
    fn ee_bound_values() {
        let a = fo(0.5);
        assert!((ee_stability_bound(a, PI).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let want = 2f64.sqrt() * (PI / 3.0).sin().sqrt();
        assert!((ee_stability_bound(a, 0.75 * PI).unwrap() - want).abs() < 1e-14);
        assert!(ee_stability_bound(a, 0.2 * PI).is_err());
    }

    #[test]
    fn cn_helpers() {
        let a = fo(1.0 - 1e-12);
        assert!((cn_psi(a, PI / 2.0) - PI / 4.0).abs() < 1e-10);
        let a = fo(1.5);
        assert!((cn_rho(a, PI) - 0.5).abs() < 1e-14);
        let b = cn_stability_bound(a, PI - 1e-9).unwrap();
        assert!((b - 2f64.powf(1.5) / 0.5).abs() < 1e-6, "{b}");
        assert!(cn_stability_bound(a, 0.9 * PI).unwrap() > cn_stability_bound(a, 0.8 * PI).unwrap());
        assert!(cn_theta_phi(fo(0.5), 0.9 * PI).is_err());
    }

    #[test]
    fn cn_theta_phi_solves_equation() {
        for a in [1.1, 1.5, 1.9] {
            let al = fo(a);
            for f in [0.6, 0.8, 0.95, 0.999] {
                let phi = al.half_angle() + f * (PI - al.half_angle());
                let t = cn_theta_phi(al, phi).unwrap();
                let r = cn_psi(al, t) - 0.5 * a * t - (phi - al.half_angle());
                assert!(r.abs() < 1e-10, "α {a} φ {phi}: {r}");
            }
        }
    }

    #[test]
    fn fcn_curve_hits_bound_on_ray() {
        // At θ_φ the curve point has argument -φ and modulus equal to the bound.
        let al = fo(1.5);
        let phi = 0.9 * PI;
        let t = cn_theta_phi(al, phi).unwrap();
        let d = delta(SymbolScheme::Fcn, al, Complex64::from_polar(1.0, t)).unwrap();
        assert!((d.arg() + phi).abs() < 1e-9);
        assert!((d.norm() - cn_stability_bound(al, phi).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn lizama_leaves_sector() {
        for a in [0.3, 0.5] {
            let al = fo(a);
            let exits = theta_grid(1000).iter().any(|&t| {
                let d = lizama_delta(al, Complex64::from_polar(1.0, t)).unwrap();
                d.arg().abs() > al.half_angle()
            });
            assert!(exits, "α {a}");
        }
    }

    #[test]
    fn l1_wave_rejects_minus_one_and_wrong_regime() {
        assert!(delta(SymbolScheme::L1Wave, fo(1.5), Complex64::new(-1.0, 0.0)).is_err());
        assert!(delta(SymbolScheme::L1Sub, fo(1.5), Complex64::new(0.0, 1.0)).is_err());
        assert!(delta(SymbolScheme::L1Sub, fo(0.5), Complex64::new(0.0, 0.5)).is_err());
    }

    proptest! {
        #[test]
        fn be_bdf2_inside_disk(a in 0.05f64..1.95, r in 0.0f64..0.9, t in 0.0f64..6.28) {
            prop_assume!((a - 1.0).abs() > 1e-3);
            let xi = Complex64::from_polar(r, t);
            let be = be_weights(fo(a), 400).unwrap().coeffs;
            let bd = bdf2_weights(fo(a), 400).unwrap().coeffs;
            let d1 = delta(SymbolScheme::Be, fo(a), xi).unwrap();
            let d2 = delta(SymbolScheme::Bdf2, fo(a), xi).unwrap();
            prop_assert!((series(&be, xi) - d1).norm() < 1e-10);
            prop_assert!((series(&bd, xi) - d2).norm() < 1e-10);
        }

        #[test]
        fn fcn_phase_monotone(a in 0.05f64..1.95) {
            prop_assume!((a - 1.0).abs() > 1e-3);
            let al = fo(a);
            let g = theta_grid(1000);
            let h: Vec<f64> = g.iter().map(|&t| 0.5 * a * t - cn_psi(al, t)).collect();
            for w in h.windows(2) {
                if a < 1.0 { prop_assert!(w[1] - w[0] >= -1e-12); } else { prop_assert!(w[1] - w[0] <= 1e-12); }
            }
        }

        #[test]
        fn ee_bound_monotone(a in 0.05f64..1.95, f1 in 0.01f64..1.0, f2 in 0.01f64..1.0) {
            prop_assume!((a - 1.0).abs() > 1e-3);
            let al = fo(a);
            let (lo, hi) = if f1 < f2 { (f1, f2) } else { (f2, f1) };
            let span = PI - al.half_angle();
            let b1 = ee_stability_bound(al, al.half_angle() + lo * span).unwrap();
            let b2 = ee_stability_bound(al, al.half_angle() + hi * span).unwrap();
            prop_assert!(b1 <= b2 + 1e-15);
        }
    }
}
