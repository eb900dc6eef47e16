//! Numerical experiments: manufactured-solution convergence, maximal-regularity
//! ratio sweeps, decay of homogeneous solutions and explicit-scheme stability probes.

use crate::error::{Error, Result};
use crate::linalg::{norm2, zero, C};
use crate::operators::OperatorHandle;
use crate::order::{FracOrder, Regime};
use crate::solvers::{counting_lp_norm, lp_scaled_norm, solve, Scheme, SolveInput, SolveResult, TimeGrid};
use crate::special::caputo_power;
use crate::symbols::{stability_bound, ExplicitScheme};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

/// Safety factor applied to explicit step-size bounds in sweeps.
pub const STABILITY_SAFETY: f64 = 0.95;
/// FCN bounds are only defined for φ < π; hermitian operators use this value.
const PHI_CLAMP: f64 = PI - 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub scheme: String,
    pub alpha: FracOrder,
    pub p: Option<f64>,
    pub operator: String,
    pub seed: Option<u64>,
}

/// Exact solution u(t) = t^g · direction of ∂_t^α u = A u + f.
#[derive(Debug, Clone)]
pub struct ManufacturedProblem<'a> {
    pub alpha: FracOrder,
    pub exponent: f64,
    pub direction: Vec<C>,
    pub operator: &'a OperatorHandle,
    pub horizon: f64,
}

impl ManufacturedProblem<'_> {
    fn validate(&self) -> Result<()> {
        if !(self.exponent >= self.alpha.value().ceil()) {
            return Err(Error::domain("manufactured", format!("exponent {} < ⌈α⌉", self.exponent)));
        }
        if self.direction.len() != self.operator.dim() {
            return Err(Error::InvalidInput("direction length does not match the operator".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon {} must be positive", self.horizon)));
        }
        Ok(())
    }

    pub fn exact(&self, t: f64) -> Vec<C> {
        let s = t.powf(self.exponent);
        self.direction.iter().map(|d| d * s).collect()
    }
}

/// f^n = ∂_t^α(t^g)(t_n) d - t_n^g A d, with f^0 = 0 (g > α).
pub fn manufactured_forcing(prob: &ManufacturedProblem<'_>, grid: TimeGrid) -> Result<Vec<Vec<C>>> {
    prob.validate()?;
    if (grid.horizon() - prob.horizon).abs() > 1e-9 * prob.horizon {
        return Err(Error::InvalidInput(format!("grid horizon {} ≠ T = {}", grid.horizon(), prob.horizon)));
    }
    let ad = prob.operator.apply(&prob.direction)?;
    let mut out = vec![vec![zero(); prob.direction.len()]];
    for n in 1..=grid.n_steps() {
        let t = grid.t(n);
        let c = caputo_power(prob.alpha, prob.exponent, t)?;
        let s = t.powf(prob.exponent);
        out.push(prob.direction.iter().zip(&ad).map(|(d, a)| d * c - a * s).collect());
    }
    Ok(out)
}

/// Which error sequence a convergence study measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorNorm {
    /// A(u^n - u(t_n))
    #[default]
    OperatorApplied,
    /// u^n - u(t_n)
    State,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub tau: f64,
    pub n_steps: usize,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub meta: ReportMeta,
    pub rows: Vec<ConvergenceRow>,
    /// log(e_i/e_{i+1}) / log(τ_i/τ_{i+1})
    #[serde(rename = "orders")]
    pub observed_orders: Vec<f64>,
}

fn steps_for(horizon: f64, tau: f64) -> Result<usize> {
    let n = (horizon / tau).round();
    if !(n >= 1.0) || (n * tau - horizon).abs() > 1e-9 * horizon {
        return Err(Error::InvalidInput(format!("tau = {tau} does not divide the horizon {horizon}")));
    }
    Ok(n as usize)
}

fn check_ladder(taus: &[f64], min_len: usize) -> Result<()> {
    if taus.len() < min_len {
        return Err(Error::InvalidInput(format!("need at least {min_len} step sizes, got {}", taus.len())));
    }
    if taus.windows(2).any(|w| !(w[1] < w[0])) || taus.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidInput("step sizes must be positive and strictly decreasing".into()));
    }
    Ok(())
}

/// Error of `scheme` against the manufactured solution for each τ, measured in
/// the τ-scaled ℓ^p norm over n = 1..N.
pub fn convergence_study(scheme: Scheme, prob: &ManufacturedProblem<'_>, taus: &[f64], p: f64) -> Result<ConvergenceTable> {
    convergence_study_with(scheme, prob, taus, p, ErrorNorm::OperatorApplied)
}

pub fn convergence_study_with(
    scheme: Scheme,
    prob: &ManufacturedProblem<'_>,
    taus: &[f64],
    p: f64,
    norm: ErrorNorm,
) -> Result<ConvergenceTable> {
    prob.validate()?;
    check_ladder(taus, 3)?;
    let rows: Vec<ConvergenceRow> = taus
        .par_iter()
        .map(|&tau| {
            let n = steps_for(prob.horizon, tau)?;
            let grid = TimeGrid::new(tau, n)?;
            let f = manufactured_forcing(prob, grid)?;
            let r = solve(&SolveInput::new(scheme, prob.alpha, prob.operator, grid, f))?;
            if r.truncated {
                return Err(Error::Precondition(format!("trajectory overflowed at tau = {tau}")));
            }
            let errs: Vec<Vec<C>> = (1..=n)
                .map(|k| {
                    let e: Vec<C> = r.u[k].iter().zip(prob.exact(grid.t(k))).map(|(a, b)| a - b).collect();
                    match norm {
                        ErrorNorm::OperatorApplied => prob.operator.apply(&e),
                        ErrorNorm::State => Ok(e),
                    }
                })
                .collect::<Result<_>>()?;
            Ok(ConvergenceRow { tau, n_steps: n, error: lp_scaled_norm(&errs, tau, p)? })
        })
        .collect::<Result<_>>()?;
    let observed_orders = rows.windows(2).map(|w| (w[0].error / w[1].error).ln() / (w[0].tau / w[1].tau).ln()).collect();
    Ok(ConvergenceTable {
        meta: ReportMeta {
            scheme: scheme.name().into(),
            alpha: prob.alpha,
            p: Some(p),
            operator: prob.operator.label().into(),
            seed: None,
        },
        rows,
        observed_orders,
    })
}

/// Forcing sequences for regularity sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ForcingFamily {
    /// f^n = (1, …, 1)
    Constant,
    /// f^n = (-1)^n (1, …, 1)
    AlternatingSign,
    /// Independent uniform entries in [-1, 1) from [`Lcg64`].
    RandomSeeded(u64),
}

/// 64-bit linear congruential generator, state ← 6364136223846793005·state + 1442695040888963407.
#[derive(Debug, Clone)]
pub struct Lcg64 {
    state: u64,
}

impl Lcg64 {
    pub fn new(seed: u64) -> Self {
        Lcg64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.state
    }

    /// Top 53 bits as a uniform value in [0, 1).
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform value in [-1, 1).
    pub fn next_symmetric(&mut self) -> f64 {
        2.0 * self.next_unit() - 1.0
    }
}

/// f^0..f^N of the family in dimension `dim`. Random entries are drawn step by
/// step, component by component.
pub fn forcing_sequence(family: ForcingFamily, dim: usize, n_steps: usize) -> Vec<Vec<C>> {
    match family {
        ForcingFamily::Constant => vec![vec![C::new(1.0, 0.0); dim]; n_steps + 1],
        ForcingFamily::AlternatingSign => (0..=n_steps)
            .map(|n| vec![C::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0); dim])
            .collect(),
        ForcingFamily::RandomSeeded(seed) => {
            let mut g = Lcg64::new(seed);
            (0..=n_steps).map(|_| (0..dim).map(|_| C::new(g.next_symmetric(), 0.0)).collect()).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityRow {
    pub tau: f64,
    pub n_steps: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub meta: ReportMeta,
    pub rows: Vec<RegularityRow>,
    /// max ratio / min ratio
    pub uniformity: f64,
}

/// Index windows (first, last) over which dbar, Au and f enter the ratio.
struct Windows {
    dbar: (usize, usize),
    au: (usize, usize),
    f: (usize, usize),
}

fn windows(scheme: Scheme, regime: Regime, n: usize) -> Windows {
    match (scheme, regime) {
        (Scheme::Bdf2, _) => Windows { dbar: (2, n), au: (2, n), f: (2, n) },
        (Scheme::Ee, _) => Windows { dbar: (1, n), au: (1, n - 1), f: (0, n - 1) },
        (Scheme::Fcn, _) | (Scheme::L1, Regime::Wave) => Windows { dbar: (1, n), au: (1, n), f: (0, n) },
        _ => Windows { dbar: (1, n), au: (1, n), f: (1, n) },
    }
}

fn window_norm(seq: &[Vec<C>], offset: usize, (lo, hi): (usize, usize), p: f64) -> Result<f64> {
    if lo > hi {
        return Ok(0.0);
    }
    counting_lp_norm(&seq[lo - offset..=hi - offset], p)
}

/// Ratio [‖dbar‖_{ℓ^p} + ‖Au‖_{ℓ^p}] / ‖f‖_{ℓ^p} of one solve.
pub fn regularity_ratio(scheme: Scheme, alpha: FracOrder, result: &SolveResult, forcing: &[Vec<C>], p: f64) -> Result<f64> {
    let n = forcing.len() - 1;
    let w = windows(scheme, alpha.regime(), n);
    let fnorm = window_norm(forcing, 0, w.f, p)?;
    if !(fnorm > 0.0) {
        return Err(Error::InvalidInput("forcing vanishes on the measured window; ratio undefined".into()));
    }
    let d = window_norm(&result.dbar, 1, w.dbar, p)?;
    let a = if w.au.0 <= w.au.1 { window_norm(&result.au, 1, w.au, p)? } else { 0.0 };
    Ok((d + a) / fnorm)
}

/// Check that the scheme is admissible for `op` at step size `tau`.
pub fn check_sweep_preconditions(scheme: Scheme, alpha: FracOrder, op: &OperatorHandle, tau: f64) -> Result<()> {
    let phi = op
        .sector_phi()
        .ok_or_else(|| Error::Precondition(format!("sector angle of {} unknown", op.label())))?;
    if !(phi > alpha.half_angle()) {
        return Err(Error::Precondition(format!(
            "sector angle {phi} of {} does not exceed απ/2 = {}",
            op.label(),
            alpha.half_angle()
        )));
    }
    let explicit = match scheme {
        Scheme::Ee => Some(ExplicitScheme::Ee),
        Scheme::Fcn if alpha.regime() == Regime::Wave => Some(ExplicitScheme::Fcn),
        _ => None,
    };
    if let Some(e) = explicit {
        let phi = if e == ExplicitScheme::Fcn { phi.min(PHI_CLAMP) } else { phi };
        let bound = stability_bound(e, alpha, phi)?.bound.expect("conditionally stable scheme has a bound");
        let lhs = tau.powf(alpha.value()) * op.numerical_radius();
        if lhs > STABILITY_SAFETY * bound {
            return Err(Error::Precondition(format!(
                "tau = {tau}: tau^α r(A) = {lhs} exceeds {STABILITY_SAFETY}·{bound}"
            )));
        }
    }
    Ok(())
}

/// Maximal ℓ^p-regularity ratios over a step-size ladder on [0, horizon].
pub fn regularity_sweep(
    scheme: Scheme,
    alpha: FracOrder,
    p: f64,
    op: &OperatorHandle,
    family: ForcingFamily,
    taus: &[f64],
    horizon: f64,
) -> Result<RegularityReport> {
    check_ladder(taus, 2)?;
    for &tau in taus {
        check_sweep_preconditions(scheme, alpha, op, tau)?;
    }
    let rows: Vec<RegularityRow> = taus
        .par_iter()
        .map(|&tau| {
            let n = steps_for(horizon, tau)?;
            let grid = TimeGrid::new(tau, n)?;
            let f = forcing_sequence(family, op.dim(), n);
            let r = solve(&SolveInput::new(scheme, alpha, op, grid, f.clone()))?;
            if r.blow_up {
                return Err(Error::Precondition(format!("trajectory blew up at tau = {tau}")));
            }
            Ok(RegularityRow { tau, n_steps: n, ratio: regularity_ratio(scheme, alpha, &r, &f, p)? })
        })
        .collect::<Result<_>>()?;
    let max = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    Ok(RegularityReport {
        meta: ReportMeta {
            scheme: scheme.name().into(),
            alpha,
            p: Some(p),
            operator: op.label().into(),
            seed: match family {
                ForcingFamily::RandomSeeded(s) => Some(s),
                _ => None,
            },
        },
        rows,
        uniformity: max / min,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayRow {
    pub n: usize,
    pub t: f64,
    pub u_norm: f64,
    pub au_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub meta: ReportMeta,
    pub rows: Vec<DecayRow>,
    /// Least-squares slope of log ‖Au^n‖ against log t_n over n ∈ [N/4, N].
    pub slope: f64,
    /// max_n ‖u^n‖ / ‖v‖
    pub sup_ratio: f64,
}

/// Least-squares slope of y against x.
pub fn fit_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::DegenerateFit(format!("{n} points")));
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(Error::DegenerateFit("abscissae coincide or data not finite".into()));
    }
    Ok(sxy / sxx)
}

/// Backward Euler for the homogeneous problem u^0 = v; reports the decay rate of ‖Au^n‖.
pub fn decay_study(alpha: FracOrder, op: &OperatorHandle, v: &[C], grid: TimeGrid) -> Result<DecayReport> {
    if alpha.regime() != Regime::Sub {
        return Err(Error::domain("decay_study", "requires 0 < α < 1"));
    }
    let vn = norm2(v);
    if !(vn > 0.0) {
        return Err(Error::InvalidInput("initial value v must be nonzero".into()));
    }
    let n = grid.n_steps();
    if n < 8 {
        return Err(Error::DegenerateFit(format!("N = {n} too small for the [N/4, N] window")));
    }
    let f = vec![vec![zero(); op.dim()]; n + 1];
    let input = SolveInput::new(Scheme::Be, alpha, op, grid, f).with_initial(Some(v.to_vec()), None);
    let r = solve(&input)?;
    let rows: Vec<DecayRow> = (1..r.u.len())
        .map(|k| DecayRow { n: k, t: grid.t(k), u_norm: norm2(&r.u[k]), au_norm: norm2(&r.au[k - 1]) })
        .collect();
    let window: Vec<&DecayRow> = rows.iter().filter(|row| row.n >= n / 4).collect();
    if window.iter().any(|row| !(row.au_norm > f64::MIN_POSITIVE) || !row.au_norm.is_finite()) {
        return Err(Error::DegenerateFit("‖Au^n‖ underflowed in the fit window".into()));
    }
    let x: Vec<f64> = window.iter().map(|row| row.t.ln()).collect();
    let y: Vec<f64> = window.iter().map(|row| row.au_norm.ln()).collect();
    let slope = fit_slope(&x, &y)?;
    let sup = r.u.iter().map(|u| norm2(u)).fold(0.0, f64::max);
    Ok(DecayReport {
        meta: ReportMeta { scheme: Scheme::Be.name().into(), alpha, p: None, operator: op.label().into(), seed: None },
        rows,
        slope,
        sup_ratio: sup / vn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Bounded,
    #[serde(rename = "blowup")]
    BlowUp,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityVerdict {
    pub scheme: ExplicitScheme,
    pub alpha: FracOrder,
    pub lambda: C,
    pub tau: f64,
    pub n_steps: usize,
    pub classification: Classification,
    pub max_norm: f64,
}

/// Scalar recurrence with impulse forcing f^0 = 1, f^n = 0 (n ≥ 1).
pub fn stability_probe(scheme: ExplicitScheme, alpha: FracOrder, lambda: C, tau: f64, n_steps: usize) -> Result<StabilityVerdict> {
    if !(lambda.re < 0.0 || (lambda != zero() && lambda.arg().abs() >= alpha.half_angle())) {
        return Err(Error::Precondition(format!("lambda = {lambda} lies in the sector of angle απ/2")));
    }
    let op = OperatorHandle::scalar(lambda)?;
    let grid = TimeGrid::new(tau, n_steps)?;
    let mut f = vec![vec![zero()]; n_steps + 1];
    f[0][0] = C::new(1.0, 0.0);
    let s = match scheme {
        ExplicitScheme::Ee => Scheme::Ee,
        ExplicitScheme::Fcn => Scheme::Fcn,
    };
    let r = solve(&SolveInput::new(s, alpha, &op, grid, f))?;
    Ok(StabilityVerdict {
        scheme,
        alpha,
        lambda,
        tau,
        n_steps,
        classification: if r.blow_up { Classification::BlowUp } else { Classification::Bounded },
        max_norm: r.max_norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{complex_scaled, dirichlet_laplacian_1d};
    use crate::special::{gamma, ml_e};

    fn fo(a: f64) -> FracOrder {
        FracOrder::new(a).unwrap()
    }

    fn ladder(k0: i32, k1: i32) -> Vec<f64> {
        (k0..=k1).map(|k| 2f64.powi(-k)).collect()
    }

    #[test]
    fn forcing_for_zero_operator() {
        let op = OperatorHandle::scalar(zero()).unwrap();
        let prob = ManufacturedProblem { alpha: fo(0.5), exponent: 1.0, direction: vec![C::new(2.0, 0.0)], operator: &op, horizon: 1.0 };
        let f = manufactured_forcing(&prob, TimeGrid::new(0.25, 4).unwrap()).unwrap();
        assert_eq!(f[0][0], zero());
        for n in 1..=4 {
            let t = 0.25 * n as f64;
            assert!((f[n][0].re - 2.0 * t.sqrt() / gamma(1.5).unwrap()).abs() < 1e-14);
        }
        let bad = ManufacturedProblem { exponent: 1.0, alpha: fo(1.5), ..prob.clone() };
        assert!(manufactured_forcing(&bad, TimeGrid::new(0.25, 4).unwrap()).is_err());
        assert!(manufactured_forcing(&prob, TimeGrid::new(0.25, 3).unwrap()).is_err());
    }

    #[test]
    fn forcing_along_eigenvector() {
        let op = dirichlet_laplacian_1d(8, 1.0).unwrap();
        let h = 1.0 / 9.0;
        let dir: Vec<C> = (1..=8).map(|j| C::new((PI * j as f64 * h).sin(), 0.0)).collect();
        let prob = ManufacturedProblem { alpha: fo(0.7), exponent: 2.0, direction: dir.clone(), operator: &op, horizon: 1.0 };
        let f = manufactured_forcing(&prob, TimeGrid::new(0.1, 10).unwrap()).unwrap();
        for fv in &f[1..] {
            let s = fv[0] / dir[0];
            for (a, b) in fv.iter().zip(&dir) {
                assert!((a - s * b).norm() < 1e-9 * s.norm());
            }
        }
    }

    #[test]
    fn be_scalar_first_order() {
        let op = OperatorHandle::scalar(C::new(-1.0, 0.0)).unwrap();
        let prob = ManufacturedProblem { alpha: fo(0.5), exponent: 2.0, direction: vec![C::new(1.0, 0.0)], operator: &op, horizon: 1.0 };
        let t = convergence_study(Scheme::Be, &prob, &ladder(3, 8), 2.0).unwrap();
        let last = *t.observed_orders.last().unwrap();
        assert!((last - 1.0).abs() <= 0.15, "{:?}", t.observed_orders);
    }

    #[test]
    fn l1_order_exceeds_one() {
        let op = OperatorHandle::scalar(C::new(-1.0, 0.0)).unwrap();
        let prob = ManufacturedProblem { alpha: fo(0.5), exponent: 2.0, direction: vec![C::new(1.0, 0.0)], operator: &op, horizon: 1.0 };
        let t = convergence_study(Scheme::L1, &prob, &ladder(3, 8), 2.0).unwrap();
        let last = *t.observed_orders.last().unwrap();
        assert!(last > 1.0 && last < 1.7, "{:?}", t.observed_orders);
    }

    #[test]
    fn lcg_is_reproducible() {
        let mut g = Lcg64::new(0);
        assert_eq!(g.next_u64(), 1442695040888963407);
        let a = forcing_sequence(ForcingFamily::RandomSeeded(7), 3, 5);
        assert_eq!(a, forcing_sequence(ForcingFamily::RandomSeeded(7), 3, 5));
        assert!(a.iter().flatten().all(|v| v.re >= -1.0 && v.re < 1.0));
    }

    #[test]
    fn scalar_be_ratio_is_small() {
        let op = OperatorHandle::scalar(C::new(-1.0, 0.0)).unwrap();
        let r = regularity_sweep(Scheme::Be, fo(0.5), 2.0, &op, ForcingFamily::Constant, &ladder(2, 6), 1.0).unwrap();
        assert!(r.rows.iter().all(|row| row.ratio > 0.0 && row.ratio <= 2.0 + 1e-9));
        assert!(r.rows.windows(2).all(|w| w[0].tau > w[1].tau));
        let op0 = OperatorHandle::scalar(C::new(-1.0, 0.0)).unwrap();
        let f = vec![vec![zero()]; 5];
        let res = solve(&SolveInput::new(Scheme::Be, fo(0.5), &op0, TimeGrid::new(0.25, 4).unwrap(), f.clone())).unwrap();
        assert!(regularity_ratio(Scheme::Be, fo(0.5), &res, &f, 2.0).is_err());
    }

    #[test]
    fn rotation_robustness() {
        let rot = complex_scaled(&dirichlet_laplacian_1d(15, 1.0).unwrap(), 0.6 * PI).unwrap();
        let taus = ladder(2, 6);
        assert!(regularity_sweep(Scheme::Be, fo(0.5), 2.0, &rot, ForcingFamily::RandomSeeded(3), &taus, 1.0).is_ok());
        let e = regularity_sweep(Scheme::Be, fo(1.5), 2.0, &rot, ForcingFamily::RandomSeeded(3), &taus, 1.0).unwrap_err();
        assert_eq!(e.code(), "precondition");
    }

    #[test]
    fn explicit_sweep_rejects_large_steps() {
        let op = dirichlet_laplacian_1d(15, 1.0).unwrap();
        let e = regularity_sweep(Scheme::Ee, fo(0.5), 2.0, &op, ForcingFamily::Constant, &ladder(2, 4), 1.0).unwrap_err();
        assert!(e.to_string().contains("tau = 0.25"), "{e}");
    }

    #[test]
    fn decay_of_eigenvector_matches_scalar() {
        let op = dirichlet_laplacian_1d(31, 1.0).unwrap();
        let l = op.spectrum().unwrap()[0];
        let h = 1.0 / 32.0;
        let v: Vec<C> = (1..=31).map(|j| C::new((PI * j as f64 * h).sin(), 0.0)).collect();
        let grid = TimeGrid::new(1e-2, 400).unwrap();
        let a = decay_study(fo(0.5), &op, &v, grid).unwrap();
        let b = decay_study(fo(0.5), &OperatorHandle::scalar(l).unwrap(), &[C::new(1.0, 0.0)], grid).unwrap();
        assert!((a.slope - b.slope).abs() < 1e-8, "{} {}", a.slope, b.slope);
        assert!(a.sup_ratio <= 1.0 + 1e-10 && b.sup_ratio <= 1.0 + 1e-10);
        // Continuous solution E_α(λ t^α) on the same window.
        let (x, y): (Vec<f64>, Vec<f64>) = b
            .rows
            .iter()
            .filter(|r| r.n >= 100)
            .map(|r| (r.t.ln(), (l.re.abs() * ml_e(0.5, 1.0, l.re * r.t.sqrt()).unwrap()).ln()))
            .unzip();
        let exact = fit_slope(&x, &y).unwrap();
        assert!((a.slope - exact).abs() < 0.05, "{} vs {exact}", a.slope);
    }

    #[test]
    fn decay_unit_rate_is_preasymptotic() {
        // With λ = -1 the window t ∈ [2.5, 10] is still far from the t^{-α} tail;
        // the discrete slope follows the continuous solution instead.
        let op = OperatorHandle::scalar(C::new(-1.0, 0.0)).unwrap();
        let grid = TimeGrid::new(1e-2, 1000).unwrap();
        let d = decay_study(fo(0.5), &op, &[C::new(1.0, 0.0)], grid).unwrap();
        let (x, y): (Vec<f64>, Vec<f64>) = d
            .rows
            .iter()
            .filter(|r| r.n >= 250)
            .map(|r| (r.t.ln(), ml_e(0.5, 1.0, -r.t.sqrt()).unwrap().ln()))
            .unzip();
        let exact = fit_slope(&x, &y).unwrap();
        assert!((d.slope - exact).abs() < 0.02, "{} vs {exact}", d.slope);
        assert!((d.slope + 0.5).abs() <= 0.1);
    }

    #[test]
    fn decay_rejects_degenerate_input() {
        let op = OperatorHandle::scalar(C::new(-1.0, 0.0)).unwrap();
        let g = TimeGrid::new(0.1, 100).unwrap();
        assert!(decay_study(fo(1.5), &op, &[C::new(1.0, 0.0)], g).is_err());
        assert!(decay_study(fo(0.5), &op, &[zero()], g).is_err());
        assert!(fit_slope(&[1.0, 1.0], &[0.0, 2.0]).is_err());
    }

    #[test]
    fn probe_examples() {
        let tau: f64 = 0.5;
        for (s, want) in [(0.95, Classification::Bounded), (1.3, Classification::BlowUp)] {
            let l = C::new(-s * 2f64.sqrt() * tau.powf(-0.5), 0.0);
            let v = stability_probe(ExplicitScheme::Ee, fo(0.5), l, tau, 2048).unwrap();
            assert_eq!(v.classification, want);
        }
        let l = C::new(-1e3 * tau.powf(-0.5), 0.0);
        let v = stability_probe(ExplicitScheme::Fcn, fo(0.5), l, tau, 2048).unwrap();
        assert_eq!(v.classification, Classification::Bounded);
        assert!(stability_probe(ExplicitScheme::Ee, fo(0.5), C::new(1.0, 0.1), tau, 10).is_err());
    }
}
