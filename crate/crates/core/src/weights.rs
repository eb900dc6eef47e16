//! Quadrature weight tables for the time-discrete fractional derivative.

use crate::error::{Error, Result};
use crate::order::{FracOrder, Regime};
use crate::special::gamma_real;
use serde::Serialize;

/// Largest table we are willing to allocate.
pub const MAX_WEIGHTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    Be,
    Bdf2,
    L1Sub,
    L1Wave,
    Pcdg,
}

/// Coefficients `coeffs[j]`, j = 0..=n, of one weight family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightTable {
    pub scheme: WeightScheme,
    pub alpha: FracOrder,
    pub coeffs: Vec<f64>,
}

fn check_len(n: usize) -> Result<()> {
    if n >= MAX_WEIGHTS {
        return Err(Error::SizeLimit(format!("weight table of length {} exceeds {MAX_WEIGHTS}", n + 1)));
    }
    Ok(())
}

/// Grünwald-Letnikov coefficients of (1-ξ)^a for any real a.
pub(crate) fn grunwald(a: f64, n: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(n + 1);
    c.push(1.0);
    for j in 1..=n {
        let prev = c[j - 1];
        c.push(prev * (j as f64 - 1.0 - a) / j as f64);
    }
    c
}

/// Backward Euler convolution weights: coefficients of (1-ξ)^α.
pub fn be_weights(alpha: FracOrder, n: usize) -> Result<WeightTable> {
    check_len(n)?;
    Ok(WeightTable { scheme: WeightScheme::Be, alpha, coeffs: grunwald(alpha.value(), n) })
}

/// BDF2 convolution weights: coefficients of (3/2 - 2ξ + ξ²/2)^α.
///
/// The generator factors as (3/2)^α (1-ξ)^α (1-ξ/3)^α, so the table is the
/// Cauchy product of two Grünwald sequences, the second scaled by 3^{-j}.
pub fn bdf2_weights(alpha: FracOrder, n: usize) -> Result<WeightTable> {
    check_len(n)?;
    let a = alpha.value();
    let g = grunwald(a, n);
    let mut h = g.clone();
    let mut scale = 1.0;
    let mut h_len = h.len();
    for (j, v) in h.iter_mut().enumerate() {
        *v *= scale;
        scale /= 3.0;
        if scale == 0.0 {
            h_len = j + 1;
            break;
        }
    }
    h.truncate(h_len);
    let lead = 1.5f64.powf(a);
    let mut w = vec![0.0; n + 1];
    for (k, wk) in w.iter_mut().enumerate() {
        let mut s = 0.0;
        for (i, hi) in h.iter().enumerate().take(k + 1) {
            s += hi * g[k - i];
        }
        *wk = lead * s;
    }
    Ok(WeightTable { scheme: WeightScheme::Bdf2, alpha, coeffs: w })
}

/// L1 weights. Sub: b_j = ((j+1)^{1-α} - j^{1-α}) / Γ(2-α).
/// Wave: a_j = (j+1)^{2-α} - j^{2-α} (the Γ(3-α) factor is left to the stepper).
pub fn l1_weights(alpha: FracOrder, n: usize) -> Result<WeightTable> {
    check_len(n)?;
    let a = alpha.value();
    let (scheme, e, scale) = match alpha.regime() {
        Regime::Sub => (WeightScheme::L1Sub, 1.0 - a, 1.0 / gamma_real(2.0 - a)),
        Regime::Wave => (WeightScheme::L1Wave, 2.0 - a, 1.0),
    };
    let coeffs = (0..=n)
        .map(|j| {
            let j = j as f64;
            scale * ((j + 1.0).powf(e) - j.powf(e))
        })
        .collect();
    Ok(WeightTable { scheme, alpha, coeffs })
}

/// Convolution form of the subdiffusive L1 rule: β_0 = b_0, β_j = b_j - b_{j-1}.
pub fn pcdg_weights(alpha: FracOrder, n: usize) -> Result<WeightTable> {
    if alpha.regime() != Regime::Sub {
        return Err(Error::domain("pcdg_weights", "defined for 0 < α < 1 only"));
    }
    let b = l1_weights(alpha, n)?.coeffs;
    let mut coeffs = Vec::with_capacity(n + 1);
    coeffs.push(b[0]);
    for j in 1..=n {
        coeffs.push(b[j] - b[j - 1]);
    }
    Ok(WeightTable { scheme: WeightScheme::Pcdg, alpha, coeffs })
}

/// Dispatch by scheme name. `L1Sub`/`L1Wave` must agree with the regime of α.
pub fn weights(scheme: WeightScheme, alpha: FracOrder, n: usize) -> Result<WeightTable> {
    match scheme {
        WeightScheme::Be => be_weights(alpha, n),
        WeightScheme::Bdf2 => bdf2_weights(alpha, n),
        WeightScheme::L1Sub | WeightScheme::L1Wave => {
            let t = l1_weights(alpha, n)?;
            if t.scheme != scheme {
                return Err(Error::domain("l1_weights", format!("scheme {scheme:?} does not match α = {}", alpha.value())));
            }
            Ok(t)
        }
        WeightScheme::Pcdg => pcdg_weights(alpha, n),
    }
}
