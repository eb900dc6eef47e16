//! Special functions: gamma, principal complex powers, the polylogarithm on
//! the unit circle, the two-parameter Mittag-Leffler function on the negative
//! real axis and the Caputo derivative of a monomial.

use crate::error::{Error, Result};
use crate::order::FracOrder;
use num_complex::Complex64;
use std::f64::consts::PI;

const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS_COEF: [f64; 15] = [
    0.999_999_999_999_997_1,
    57.156_235_665_862_923_517,
    -59.597_960_355_475_491_248,
    14.136_097_974_741_747_174,
    -0.491_913_816_097_620_199_78,
    0.339_946_499_848_118_886_99e-4,
    0.465_236_289_270_485_756_65e-4,
    -0.983_744_753_048_795_646_77e-4,
    0.158_088_703_224_912_488_84e-3,
    -0.210_264_441_724_104_883_19e-3,
    0.217_439_618_115_212_643_20e-3,
    -0.164_318_106_536_763_890_22e-3,
    0.844_182_239_838_527_432_93e-4,
    -0.261_908_384_015_814_086_70e-4,
    0.368_991_826_595_316_227_04e-5,
];

/// Lanczos sum for Γ(x), valid for x ≥ 1/2.
fn lanczos(x: f64) -> f64 {
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    // Split the power so that Γ(x) does not overflow before it has to.
    let half = t.powf(0.5 * (x + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * a
}

/// Γ(x) for any real x that is not a pole. Reflection below 1/2.
pub(crate) fn gamma_real(x: f64) -> f64 {
    if x < 0.5 {
        PI / ((PI * x).sin() * lanczos(1.0 - x))
    } else {
        lanczos(x)
    }
}

/// 1/Γ(x) for all real x, zero at the poles 0, -1, -2, ...
pub(crate) fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x < 0.5 {
        sin_pi(x) * lanczos(1.0 - x) / PI
    } else {
        1.0 / lanczos(x)
    }
}

/// sin(πx) with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).round();
    if r == r.round() {
        return 0.0;
    }
    (PI * r).sin()
}

/// Gamma function for positive arguments.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain("gamma", format!("x = {x} must be a finite positive real")));
    }
    Ok(gamma_real(x))
}

/// Principal branch power `exp(a (ln|z| + i arg z))` with arg z ∈ (-π, π].
pub fn frac_power(z: Complex64, a: f64) -> Result<Complex64> {
    if z.re == 0.0 && z.im == 0.0 {
        if a > 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        return Err(Error::domain("frac_power", format!("0^{a} is undefined")));
    }
    let mut arg = z.im.atan2(z.re);
    if arg == -PI {
        arg = PI;
    }
    Ok(Complex64::from_polar(z.norm().powf(a), a * arg))
}

/// (2j)! / B_{2j} for j = 1..12, the Euler-Maclaurin correction denominators.
const EM_DENOM: [f64; 12] = [
    12.0,
    -720.0,
    30240.0,
    -1209600.0,
    47900160.0,
    -1.892_437_580_318_379_2e9,
    7.472_424_96e10,
    -2.950_130_727_918_164_2e12,
    1.164_678_281_435_006_7e14,
    -4.597_978_722_407_472_6e15,
    1.815_210_540_194_354_7e17,
    -7.166_165_256_175_667e18,
];

/// Hurwitz zeta ζ(s, q) = Σ_{k≥0} (k+q)^{-s} for s > 1, q > 0.
///
/// Direct summation of the leading terms, then an Euler-Maclaurin tail.
pub fn hurwitz_zeta(s: f64, q: f64) -> Result<f64> {
    if !(s > 1.0) || !(q > 0.0) {
        return Err(Error::domain("hurwitz_zeta", format!("need s > 1, q > 0 (s = {s}, q = {q})")));
    }
    let eps = f64::EPSILON;
    let mut sum = q.powf(-s);
    let mut a = q;
    let mut b = 0.0;
    let mut i = 0;
    while i < 9 || a <= 9.0 {
        i += 1;
        a += 1.0;
        b = a.powf(-s);
        sum += b;
        if (b / sum).abs() < eps {
            return Ok(sum);
        }
    }
    let w = a;
    sum += b * w / (s - 1.0);
    sum -= 0.5 * b;
    let mut fac = 1.0;
    let mut k = 0.0;
    for d in EM_DENOM {
        fac *= s + k;
        b /= w;
        let t = fac * b / d;
        sum += t;
        if (t / sum).abs() < eps {
            break;
        }
        k += 1.0;
        fac *= s + k;
        b /= w;
        k += 1.0;
    }
    Ok(sum)
}

/// Polylogarithm Li_p(e^{-iθ}) for p < 0 and θ ∈ (0, 2π).
///
/// Uses the Hurwitz representation
/// `Γ(1-p) (2π)^{p-1} [ e^{-iπ(p-1)/2} ζ(1-p, 1-θ/2π) + e^{iπ(p-1)/2} ζ(1-p, θ/2π) ]`
/// assembled from real parts so that symmetric cancellations stay exact.
pub fn polylog_circle(p: f64, theta: f64) -> Result<Complex64> {
    if !(p < 0.0) || !p.is_finite() {
        return Err(Error::domain("polylog_circle", format!("index p = {p} must be negative")));
    }
    if !(theta >= 1e-8 && theta <= 2.0 * PI - 1e-8) {
        return Err(Error::domain(
            "polylog_circle",
            format!("theta = {theta} must lie in (0, 2π) at least 1e-8 from the endpoints"),
        ));
    }
    let c = theta / (2.0 * PI);
    let s = 1.0 - p;
    let near = hurwitz_zeta(s, c)?;
    let far = hurwitz_zeta(s, 1.0 - c)?;
    let phase = 0.5 * PI * s;
    let scale = gamma_real(s) * (2.0 * PI).powf(p - 1.0);
    Ok(Complex64::new(
        scale * phase.cos() * (near + far),
        scale * phase.sin() * (far - near),
    ))
}

/// Neumaier compensated accumulator.
#[derive(Default)]
struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Reduced modulus |x|^{1/a} below which the Taylor series is used.
const ML_SERIES_LIMIT: f64 = 16.0;

/// Two-parameter Mittag-Leffler function E_{a,b}(x) for 0 < a < 2, b > 0 and x ≤ 0.
///
/// Taylor series with compensated summation while |x|^{1/a} ≤ 16, otherwise the
/// optimally truncated algebraic expansion plus, for a > 1, the pair of
/// exponential terms coming from the poles of the Laplace transform.
pub fn ml_e(a: f64, b: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a < 2.0) {
        return Err(Error::domain("ml_e", format!("a = {a} not in (0, 2)")));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::domain("ml_e", format!("b = {b} must be positive")));
    }
    if !(x <= 0.0) || !x.is_finite() {
        return Err(Error::domain("ml_e", format!("x = {x} must be finite and ≤ 0")));
    }
    let y = (-x).powf(1.0 / a);
    if y <= ML_SERIES_LIMIT {
        Ok(ml_series(a, b, x))
    } else {
        Ok(ml_asymptotic(a, b, x, y))
    }
}

fn ml_series(a: f64, b: f64, x: f64) -> f64 {
    let mut acc = Compensated::default();
    let mut peak = 0.0_f64;
    let mut k = 0usize;
    loop {
        let kf = k as f64;
        let pow = if x == 0.0 {
            if k == 0 { 1.0 } else { 0.0 }
        } else {
            (-x).powf(kf) * if k % 2 == 0 { 1.0 } else { -1.0 }
        };
        let term = pow * recip_gamma(a * kf + b);
        acc.add(term);
        peak = peak.max(term.abs());
        // Past the maximum the terms decay geometrically; stop once negligible.
        if k > 2 && term.abs() <= 1e-18 * peak && a * kf + b > 2.0 {
            break;
        }
        k += 1;
        if k > 4000 {
            break;
        }
    }
    acc.value()
}

fn ml_asymptotic(a: f64, b: f64, x: f64, y: f64) -> f64 {
    // The smallest term sits near a k = |x|^{1/a}; truncate there.
    let k_max = ((y / a).ceil() as usize).clamp(1, 3000);
    let mut acc = Compensated::default();
    let inv = 1.0 / x;
    let mut pow = 1.0;
    let mut small = 0;
    for k in 1..=k_max {
        pow *= inv;
        let term = -pow * recip_gamma(b - a * k as f64);
        if !term.is_finite() {
            break;
        }
        if term == 0.0 {
            continue;
        }
        acc.add(term);
        if term.abs() < 1e-17 * acc.value().abs() {
            small += 1;
            if small == 2 {
                break;
            }
        } else {
            small = 0;
        }
    }
    let mut value = acc.value();
    if a > 1.0 {
        let s = Complex64::from_polar(y, PI / a);
        let r = Complex64::from_polar(y.powf(1.0 - b), (1.0 - b) * PI / a) * s.exp();
        value += 2.0 / a * r.re;
    }
    value
}

/// Caputo derivative of t^g of order α: Γ(g+1)/Γ(g+1-α) t^{g-α}, for g ≥ ⌈α⌉, t > 0.
pub fn caputo_power(alpha: FracOrder, g: f64, t: f64) -> Result<f64> {
    let a = alpha.value();
    if !(g >= a.ceil()) || !g.is_finite() {
        return Err(Error::domain("caputo_power", format!("exponent g = {g} must be ≥ ⌈α⌉ = {}", a.ceil())));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain("caputo_power", format!("t = {t} must be positive")));
    }
    Ok(gamma_real(g + 1.0) * recip_gamma(g + 1.0 - a) * t.powf(g - a))
}
