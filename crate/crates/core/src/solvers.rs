//! Time-stepping schemes for ∂_t^α u = A u + f and the discrete norms used to measure them.

use crate::error::{Error, Result};
use crate::linalg::{axpy, norm2, zero, C};
use crate::operators::OperatorHandle;
use crate::order::{FracOrder, Regime};
use crate::special::gamma_real;
use crate::weights::{bdf2_weights, be_weights, l1_weights, pcdg_weights};
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

/// Trajectories are flagged once ‖u^n‖ exceeds this multiple of the data scale.
pub const BLOW_UP_FACTOR: f64 = 1e8;
/// Marching stops once ‖u^n‖ exceeds this multiple of the data scale.
const ABORT_FACTOR: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Convolution quadrature generated by backward Euler.
    Be,
    /// Convolution quadrature generated by BDF2, zero starting values.
    Bdf2,
    /// L1 scheme; the subdiffusive or diffusion-wave variant follows α.
    L1,
    /// Explicit Euler.
    Ee,
    /// Fractional Crank-Nicolson.
    Fcn,
    /// Piecewise-constant discontinuous Galerkin (convolution form of L1, α < 1).
    Pcdg,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [Scheme::Be, Scheme::Bdf2, Scheme::L1, Scheme::Ee, Scheme::Fcn, Scheme::Pcdg];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Be => "be",
            Scheme::Bdf2 => "bdf2",
            Scheme::L1 => "l1",
            Scheme::Ee => "ee",
            Scheme::Fcn => "fcn",
            Scheme::Pcdg => "pcdg",
        }
    }

    pub fn is_explicit(self) -> bool {
        self == Scheme::Ee
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown scheme '{s}'")))
    }
}

/// Uniform grid t_n = n τ, n = 0..=N.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    tau: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(tau: f64, n_steps: usize) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidInput(format!("tau = {tau} must be positive")));
        }
        if n_steps == 0 {
            return Err(Error::InvalidInput("n_steps must be ≥ 1".into()));
        }
        Ok(TimeGrid { tau, n_steps })
    }

    /// N steps covering [0, horizon].
    pub fn covering(horizon: f64, n_steps: usize) -> Result<Self> {
        TimeGrid::new(horizon / n_steps as f64, n_steps)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.tau
    }

    pub fn horizon(&self) -> f64 {
        self.t(self.n_steps)
    }
}

#[derive(Debug, Clone)]
pub struct SolveInput<'a> {
    pub scheme: Scheme,
    pub alpha: FracOrder,
    pub operator: &'a OperatorHandle,
    pub grid: TimeGrid,
    /// f^0..f^N.
    pub forcing: Vec<Vec<C>>,
    pub initial_v: Option<Vec<C>>,
    /// Initial velocity; diffusion-wave regime only.
    pub initial_w: Option<Vec<C>>,
}

impl<'a> SolveInput<'a> {
    pub fn new(scheme: Scheme, alpha: FracOrder, operator: &'a OperatorHandle, grid: TimeGrid, forcing: Vec<Vec<C>>) -> Self {
        SolveInput { scheme, alpha, operator, grid, forcing, initial_v: None, initial_w: None }
    }

    pub fn with_initial(mut self, v: Option<Vec<C>>, w: Option<Vec<C>>) -> Self {
        self.initial_v = v;
        self.initial_w = w;
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub scheme: Scheme,
    /// u^0..u^M with M = N unless the run was truncated.
    pub u: Vec<Vec<C>>,
    /// Discrete derivative at n = 1..M.
    pub dbar: Vec<Vec<C>>,
    /// A u^n at n = 1..M.
    pub au: Vec<Vec<C>>,
    /// Largest step residual of the scheme equation, relative to the data scale.
    pub residual_max: f64,
    pub blow_up: bool,
    /// Marching stopped early on overflow.
    pub truncated: bool,
}

impl SolveResult {
    pub fn max_norm(&self) -> f64 {
        self.u.iter().map(|v| norm2(v)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
enum History {
    /// Σ_{j=1}^n w_j u^{n-j}
    Conv(Vec<f64>),
    /// Difference form of the subdiffusive L1 rule.
    L1Sub(Vec<f64>),
    /// Diffusion-wave L1 rule, a_j scaled by c = 1/Γ(3-α).
    L1Wave { a: Vec<f64>, c: f64 },
}

/// Step data: (w0 τ^{-α} - κ_impl A) u^n = F^n + κ_expl A u^{n-1} - τ^{-α} H^n with
/// F^n = f_now f^n + f_prev f^{n-1}, and τ^{-α}(w0 u^n + H^n) the discrete derivative.
#[derive(Debug, Clone)]
struct Plan {
    w0: f64,
    kappa_impl: f64,
    kappa_expl: f64,
    f_now: f64,
    f_prev: f64,
    start: usize,
    history: History,
}

fn plan(scheme: Scheme, alpha: FracOrder, n: usize) -> Result<Plan> {
    let a = alpha.value();
    let conv = |w: Vec<f64>, ki: f64, ke: f64, fnow: f64, fprev: f64, start: usize| Plan {
        w0: w[0],
        kappa_impl: ki,
        kappa_expl: ke,
        f_now: fnow,
        f_prev: fprev,
        start,
        history: History::Conv(w),
    };
    Ok(match scheme {
        Scheme::Be => conv(be_weights(alpha, n)?.coeffs, 1.0, 0.0, 1.0, 0.0, 1),
        Scheme::Bdf2 => conv(bdf2_weights(alpha, n)?.coeffs, 1.0, 0.0, 1.0, 0.0, 2),
        Scheme::Pcdg => conv(pcdg_weights(alpha, n)?.coeffs, 1.0, 0.0, 1.0, 0.0, 1),
        Scheme::Ee => conv(be_weights(alpha, n)?.coeffs, 0.0, 1.0, 0.0, 1.0, 1),
        Scheme::Fcn => {
            let (i, e) = (1.0 - a / 2.0, a / 2.0);
            conv(be_weights(alpha, n)?.coeffs, i, e, i, e, 1)
        }
        Scheme::L1 => match alpha.regime() {
            Regime::Sub => {
                let b = l1_weights(alpha, n)?.coeffs;
                Plan { w0: b[0], kappa_impl: 1.0, kappa_expl: 0.0, f_now: 1.0, f_prev: 0.0, start: 1, history: History::L1Sub(b) }
            }
            Regime::Wave => {
                let a_w = l1_weights(alpha, n)?.coeffs;
                let c = 1.0 / gamma_real(3.0 - a);
                Plan {
                    w0: c * a_w[0],
                    kappa_impl: 0.5,
                    kappa_expl: 0.5,
                    f_now: 0.5,
                    f_prev: 0.5,
                    start: 1,
                    history: History::L1Wave { a: a_w, c },
                }
            }
        },
    })
}

fn re(x: f64) -> C {
    C::new(x, 0.0)
}

impl Plan {
    fn history(&self, u: &[Vec<C>], n: usize, dim: usize) -> Vec<C> {
        let mut h = vec![zero(); dim];
        match &self.history {
            History::Conv(w) => {
                for j in 1..=n {
                    axpy(&mut h, re(w[j]), &u[n - j]);
                }
            }
            History::L1Sub(b) => {
                axpy(&mut h, re(-b[0]), &u[n - 1]);
                for j in 1..n {
                    axpy(&mut h, re(b[j]), &u[n - j]);
                    axpy(&mut h, re(-b[j]), &u[n - j - 1]);
                }
            }
            History::L1Wave { a, c } => {
                axpy(&mut h, re(-c * a[0]), &u[n - 1]);
                for k in 1..n {
                    let s = c * (a[n - k] - a[n - k - 1]);
                    axpy(&mut h, re(s), &u[k]);
                    axpy(&mut h, re(-s), &u[k - 1]);
                }
            }
        }
        h
    }

    /// The discrete derivative recomputed from a stored trajectory by a different
    /// arrangement of the same sums.
    fn dbar_check(&self, u: &[Vec<C>], n: usize, tau_a: f64, dim: usize) -> Vec<C> {
        let mut d = vec![zero(); dim];
        match &self.history {
            History::Conv(w) => {
                for j in (0..=n).rev() {
                    axpy(&mut d, re(w[j]), &u[n - j]);
                }
            }
            History::L1Sub(b) => {
                axpy(&mut d, re(b[0]), &u[n]);
                axpy(&mut d, re(-b[n - 1]), &u[0]);
                for j in 1..n {
                    axpy(&mut d, re(b[j] - b[j - 1]), &u[n - j]);
                }
            }
            History::L1Wave { a, c } => {
                let delta = |j: usize| -> Vec<C> { u[j].iter().zip(&u[j - 1]).map(|(p, q)| p - q).collect() };
                axpy(&mut d, re(c * a[0]), &delta(n));
                for j in 1..n {
                    axpy(&mut d, re(-c * (a[n - j - 1] - a[n - j])), &delta(j));
                }
            }
        }
        d.iter_mut().for_each(|v| *v *= tau_a);
        d
    }

    fn forcing(&self, f: &[Vec<C>], n: usize) -> Vec<C> {
        let mut out = vec![zero(); f[n].len()];
        if self.f_now != 0.0 {
            axpy(&mut out, re(self.f_now), &f[n]);
        }
        if self.f_prev != 0.0 {
            axpy(&mut out, re(self.f_prev), &f[n - 1]);
        }
        out
    }
}

struct March {
    u: Vec<Vec<C>>,
    dbar: Vec<Vec<C>>,
    /// A u^n for n = 0..=M.
    au: Vec<Vec<C>>,
    blow_up: bool,
    truncated: bool,
}

fn data_norm(seq: &[Vec<C>]) -> f64 {
    seq.iter().map(|v| norm2(v)).fold(0.0, f64::max)
}

/// March the scheme from zero initial data.
fn march(plan: &Plan, op: &OperatorHandle, alpha: FracOrder, grid: TimeGrid, forcing: &[Vec<C>], scale: f64) -> Result<March> {
    let dim = op.dim();
    let tau_a = grid.tau().powf(-alpha.value());
    let diag = plan.w0 * tau_a;
    let step = if plan.kappa_impl != 0.0 { Some(op.step_matrix(re(diag), re(plan.kappa_impl))?) } else { None };
    let big = ABORT_FACTOR * scale.max(f64::MIN_POSITIVE);
    let mut out = March { u: vec![vec![zero(); dim]], dbar: Vec::new(), au: vec![vec![zero(); dim]], blow_up: false, truncated: false };
    for n in 1..=grid.n_steps() {
        if n < plan.start {
            out.u.push(vec![zero(); dim]);
            out.au.push(vec![zero(); dim]);
            out.dbar.push(vec![zero(); dim]);
            continue;
        }
        let h = plan.history(&out.u, n, dim);
        let mut rhs = plan.forcing(forcing, n);
        if plan.kappa_expl != 0.0 {
            axpy(&mut rhs, re(plan.kappa_expl), &out.au[n - 1]);
        }
        axpy(&mut rhs, re(-tau_a), &h);
        let un = match &step {
            Some(s) => s.solve(&rhs),
            None => rhs.iter().map(|v| v / diag).collect(),
        };
        let nu = norm2(&un);
        if !nu.is_finite() || nu > big {
            out.blow_up = true;
            out.truncated = true;
            break;
        }
        if nu > BLOW_UP_FACTOR * scale {
            out.blow_up = true;
        }
        let d: Vec<C> = un.iter().zip(&h).map(|(p, q)| tau_a * (plan.w0 * p + q)).collect();
        out.au.push(op.apply(&un)?);
        out.u.push(un);
        out.dbar.push(d);
    }
    Ok(out)
}

/// max_n ‖dbar(shifted)^n - κ_i A u^n - κ_e A u^{n-1} - F^n‖ relative to the same terms' sizes.
fn residual(plan: &Plan, alpha: FracOrder, grid: TimeGrid, shifted: &[Vec<C>], au: &[Vec<C>], forcing: &[Vec<C>]) -> f64 {
    let dim = shifted[0].len();
    let tau_a = grid.tau().powf(-alpha.value());
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for n in plan.start..shifted.len() {
        let d = plan.dbar_check(shifted, n, tau_a, dim);
        let f = plan.forcing(forcing, n);
        let mut r = d.clone();
        axpy(&mut r, re(-plan.kappa_impl), &au[n]);
        axpy(&mut r, re(-plan.kappa_expl), &au[n - 1]);
        axpy(&mut r, re(-1.0), &f);
        worst = worst.max(norm2(&r));
        scale = scale.max(norm2(&d) + plan.kappa_impl * norm2(&au[n]) + plan.kappa_expl * norm2(&au[n - 1]) + norm2(&f));
    }
    if scale > 0.0 {
        worst / scale
    } else {
        worst
    }
}

fn validate(input: &SolveInput<'_>, expected: &[Scheme]) -> Result<()> {
    if !expected.contains(&input.scheme) {
        return Err(Error::InvalidInput(format!("input scheme {} does not match the solver", input.scheme)));
    }
    let n = input.grid.n_steps();
    if input.forcing.len() != n + 1 {
        return Err(Error::InvalidInput(format!("forcing has {} entries, expected N+1 = {}", input.forcing.len(), n + 1)));
    }
    let dim = input.operator.dim();
    let bad = |v: &Vec<C>| v.len() != dim || v.iter().any(|x| !x.re.is_finite() || !x.im.is_finite());
    if input.forcing.iter().any(bad) {
        return Err(Error::InvalidInput(format!("forcing vectors must be finite with length {dim}")));
    }
    for v in input.initial_v.iter().chain(&input.initial_w) {
        if bad(v) {
            return Err(Error::InvalidInput(format!("initial data must be finite with length {dim}")));
        }
    }
    if input.initial_w.is_some() && input.alpha.regime() != Regime::Wave {
        return Err(Error::InvalidInput("initial_w requires 1 < α < 2".into()));
    }
    Ok(())
}

fn reject_initial_data(input: &SolveInput<'_>) -> Result<()> {
    let nonzero = |v: &Option<Vec<C>>| v.as_ref().is_some_and(|x| x.iter().any(|c| *c != zero()));
    if nonzero(&input.initial_v) || nonzero(&input.initial_w) {
        return Err(Error::InvalidInput(format!("{} requires zero initial data; use solve_be_inhomogeneous", input.scheme)));
    }
    Ok(())
}

fn solve_homogeneous(input: &SolveInput<'_>, expected: &[Scheme]) -> Result<SolveResult> {
    validate(input, expected)?;
    reject_initial_data(input)?;
    let plan = plan(input.scheme, input.alpha, input.grid.n_steps())?;
    let scale = data_norm(&input.forcing);
    let m = march(&plan, input.operator, input.alpha, input.grid, &input.forcing, scale)?;
    let residual_max = residual(&plan, input.alpha, input.grid, &m.u, &m.au, &input.forcing);
    let mut au = m.au;
    au.remove(0);
    Ok(SolveResult { scheme: input.scheme, u: m.u, dbar: m.dbar, au, residual_max, blow_up: m.blow_up, truncated: m.truncated })
}

/// Dispatch on `input.scheme`. Nonzero initial data is routed to [`solve_be_inhomogeneous`].
pub fn solve(input: &SolveInput<'_>) -> Result<SolveResult> {
    match input.scheme {
        Scheme::Be if input.initial_v.is_some() || input.initial_w.is_some() => solve_be_inhomogeneous(input),
        Scheme::Be => solve_be(input),
        Scheme::Bdf2 => solve_bdf2(input),
        Scheme::L1 => solve_l1(input),
        Scheme::Ee => solve_ee(input),
        Scheme::Fcn => solve_fcn(input),
        Scheme::Pcdg => solve_pcdg(input),
    }
}

/// Backward Euler convolution quadrature, u^0 = 0.
pub fn solve_be(input: &SolveInput<'_>) -> Result<SolveResult> {
    solve_homogeneous(input, &[Scheme::Be])
}

/// BDF2 convolution quadrature with u^0 = u^1 = 0.
pub fn solve_bdf2(input: &SolveInput<'_>) -> Result<SolveResult> {
    solve_homogeneous(input, &[Scheme::Bdf2])
}

/// L1 scheme. For 1 < α < 2 the equation is taken at t_{n-1/2}: A and f are averaged.
pub fn solve_l1(input: &SolveInput<'_>) -> Result<SolveResult> {
    solve_homogeneous(input, &[Scheme::L1])
}

/// Convolution form Σ β_j u^{n-j} of the L1 rule (0 < α < 1).
pub fn solve_pcdg(input: &SolveInput<'_>) -> Result<SolveResult> {
    solve_homogeneous(input, &[Scheme::Pcdg])
}

/// Explicit Euler: ∂̄^α u^n = A u^{n-1} + f^{n-1}. Instability is reported through `blow_up`.
pub fn solve_ee(input: &SolveInput<'_>) -> Result<SolveResult> {
    solve_homogeneous(input, &[Scheme::Ee])
}

/// Fractional Crank-Nicolson with weights (1-α/2, α/2).
pub fn solve_fcn(input: &SolveInput<'_>) -> Result<SolveResult> {
    solve_homogeneous(input, &[Scheme::Fcn])
}

/// Backward Euler for u^0 = v (and u'(0) = w when 1 < α < 2): the discrete
/// derivative acts on u^n - v - t_n w.
pub fn solve_be_inhomogeneous(input: &SolveInput<'_>) -> Result<SolveResult> {
    validate(input, &[Scheme::Be])?;
    let op = input.operator;
    let dim = op.dim();
    let grid = input.grid;
    let v = input.initial_v.clone().unwrap_or_else(|| vec![zero(); dim]);
    let w = input.initial_w.clone().unwrap_or_else(|| vec![zero(); dim]);
    let av = op.apply(&v)?;
    let aw = op.apply(&w)?;
    let shifted_forcing: Vec<Vec<C>> = input
        .forcing
        .iter()
        .enumerate()
        .map(|(n, f)| {
            let mut g = f.clone();
            axpy(&mut g, re(1.0), &av);
            axpy(&mut g, re(grid.t(n)), &aw);
            g
        })
        .collect();
    let plan = plan(Scheme::Be, input.alpha, grid.n_steps())?;
    let scale = data_norm(&input.forcing).max(norm2(&v)).max(norm2(&w));
    let m = march(&plan, op, input.alpha, grid, &shifted_forcing, scale)?;
    let u: Vec<Vec<C>> = m
        .u
        .iter()
        .enumerate()
        .map(|(n, s)| {
            let mut x = s.clone();
            axpy(&mut x, re(1.0), &v);
            axpy(&mut x, re(grid.t(n)), &w);
            x
        })
        .collect();
    let au: Vec<Vec<C>> = u.iter().map(|x| op.apply(x)).collect::<Result<_>>()?;
    let residual_max = residual(&plan, input.alpha, grid, &m.u, &au, &input.forcing);
    Ok(SolveResult {
        scheme: Scheme::Be,
        u,
        dbar: m.dbar,
        au: au[1..].to_vec(),
        residual_max,
        blow_up: m.blow_up,
        truncated: m.truncated,
    })
}

/// Euclidean norm on C^d.
pub fn vector_norm(x: &[C]) -> f64 {
    norm2(x)
}

fn check_p(p: f64, allow_inf: bool) -> Result<()> {
    let ok = p >= 1.0 && (p.is_finite() || (allow_inf && p == f64::INFINITY));
    if !ok {
        return Err(Error::domain("lp_norm", format!("p = {p} outside [1, ∞{}", if allow_inf { "]" } else { ")" })));
    }
    Ok(())
}

fn check_seq(seq: &[Vec<C>]) -> Result<()> {
    if seq.is_empty() {
        return Err(Error::InvalidInput("norm of an empty sequence".into()));
    }
    Ok(())
}

/// (Σ ‖u^n‖^p)^{1/p}; p = ∞ gives the maximum.
pub fn counting_lp_norm(seq: &[Vec<C>], p: f64) -> Result<f64> {
    check_seq(seq)?;
    check_p(p, true)?;
    let norms = seq.iter().map(|v| norm2(v));
    if p == f64::INFINITY {
        return Ok(norms.fold(0.0, f64::max));
    }
    // Factor out the maximum to avoid overflow for large p.
    let m = seq.iter().map(|v| norm2(v)).fold(0.0, f64::max);
    if m == 0.0 {
        return Ok(0.0);
    }
    Ok(m * norms.map(|x| (x / m).powf(p)).sum::<f64>().powf(1.0 / p))
}

/// (τ Σ ‖u^n‖^p)^{1/p}; p = ∞ gives the maximum.
pub fn lp_scaled_norm(seq: &[Vec<C>], tau: f64, p: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!("tau = {tau} must be positive")));
    }
    let c = counting_lp_norm(seq, p)?;
    Ok(if p == f64::INFINITY { c } else { c * tau.powf(1.0 / p) })
}

/// sup_λ λ (τ #{n : ‖u^n‖ > λ})^{1/p}, evaluated exactly on the sorted step norms.
pub fn weak_lp_norm(seq: &[Vec<C>], tau: f64, p: f64) -> Result<f64> {
    check_seq(seq)?;
    check_p(p, false)?;
    if !(tau > 0.0) {
        return Err(Error::InvalidInput(format!("tau = {tau} must be positive")));
    }
    let mut norms: Vec<f64> = seq.iter().map(|v| norm2(v)).collect();
    norms.sort_by(|a, b| b.total_cmp(a));
    Ok(norms.iter().enumerate().map(|(k, v)| v * ((k + 1) as f64 * tau).powf(1.0 / p)).fold(0.0, f64::max))
}
