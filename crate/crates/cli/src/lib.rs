//! Command-line front end for `fracstep`: every subcommand wraps one group of
//! library operations and prints a CSV table or a JSON document.
//!
//! Exit codes: 0 on success, 2 on usage errors, 3 on numerical errors. Errors
//! are reported on one line as `ERROR <code>: <message>`.

mod output;

pub use output::format_num;
use output::{to_json_text, Cell, Rendered, Table};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fracstep::harness::{
    convergence_study_with, decay_study, regularity_sweep, stability_probe, ErrorNorm, ForcingFamily,
    ManufacturedProblem,
};
use fracstep::operators::{
    complex_scaled, dirichlet_laplacian_1d, dirichlet_laplacian_2d, fractional_laplacian_half, resolvent_norm_scan,
    OperatorHandle,
};
use fracstep::solvers::{counting_lp_norm, lp_scaled_norm, solve, weak_lp_norm, Scheme, SolveInput, TimeGrid};
use fracstep::special::polylog_circle;
use fracstep::symbols::{
    cn_psi, curve_sample, d_factor, sector_margin, stability_bound, theta_grid, ExplicitScheme, SymbolScheme,
};
use fracstep::weights::{weights, WeightScheme};
use fracstep::{Complex64 as C, Error, FracOrder, Regime};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable capping the worker pool; 0 runs sequentially.
pub const THREADS_ENV: &str = "FRACSTEP_THREADS";

/// Library operations reachable from each subcommand.
pub const DISPATCH: &[(&str, &[&str])] = &[
    ("weights", &["be_weights", "bdf2_weights", "l1_sub_weights", "l1_wave_weights", "pcdg_weights"]),
    (
        "symbol",
        &["delta", "curve_sample", "sector_margin", "d_factor", "polylog_circle", "gamma", "frac_power", "ml_e", "caputo_power"],
    ),
    (
        "stability",
        &["ee_stability_bound", "cn_psi", "cn_theta_phi", "cn_stability_bound", "numerical_radius", "resolvent_norm_scan"],
    ),
    (
        "solve",
        &[
            "solve_be",
            "solve_bdf2",
            "solve_l1",
            "solve_ee",
            "solve_fcn",
            "solve_pcdg",
            "solve_be_inhomogeneous",
            "lp_scaled_norm",
            "weak_lp_norm",
            "counting_lp_norm",
        ],
    ),
    ("converge", &["manufactured_forcing", "convergence_study"]),
    ("sweep", &["regularity_sweep"]),
    ("decay", &["decay_study"]),
    ("probe", &["stability_probe"]),
];

/// FCN bounds need φ < π; hermitian operators are evaluated just below.
const FCN_PHI_MAX: f64 = PI - 1e-12;

#[derive(Parser, Debug)]
#[command(name = "fracstep", version, about = "Time stepping experiments for fractional evolution equations")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Quadrature weight table
    Weights(WeightsArgs),
    /// Generating symbol samples on the unit circle
    Symbol(SymbolArgs),
    /// Step-size bound of an explicit scheme
    Stability(StabilityArgs),
    /// Run one time-stepping scheme
    Solve(SolveArgs),
    /// Convergence orders against a manufactured solution
    Converge(ConvergeArgs),
    /// Maximal-regularity ratio over a step-size ladder
    Sweep(SweepArgs),
    /// Decay rate of the homogeneous problem
    Decay(DecayArgs),
    /// Scalar stability probe with impulse forcing
    Probe(ProbeArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Shorthand for --format csv
    #[arg(long)]
    csv: bool,
    /// Write to a file instead of standard output
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OperatorKind {
    Lap1d,
    Lap2d,
    Halflap,
    Rotlap,
    Scalar,
}

#[derive(Args, Debug)]
struct OperatorArgs {
    #[arg(long, value_enum)]
    operator: Option<OperatorKind>,
    /// Interior grid points per direction
    #[arg(long)]
    dim: Option<usize>,
    /// Angle in radians; accepts forms like pi, 0.9pi, pi/2
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<String>,
    /// Real part of the scalar operator
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Imaginary part of the scalar operator
    #[arg(long = "lambda-im", allow_hyphen_values = true)]
    lambda_im: Option<f64>,
    /// Domain side length
    #[arg(long)]
    length: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum WeightArg {
    Be,
    Bdf2,
    L1,
    Pcdg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SymbolArg {
    Be,
    Bdf2,
    L1,
    Ee,
    Fcn,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum SchemeArg {
    Be,
    Bdf2,
    L1,
    Ee,
    Fcn,
    Pcdg,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ExplicitArg {
    Ee,
    Fcn,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Quantity {
    Delta,
    Margin,
    Dfactor,
    Polylog,
    Gamma,
    MlE,
    FracPower,
    CaputoPower,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum ForcingArg {
    Constant,
    Alternating,
    Random,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum NormArg {
    Operator,
    State,
}

#[derive(Args, Debug)]
struct WeightsArgs {
    #[arg(long, value_enum)]
    scheme: WeightArg,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Largest index j
    #[arg(short = 'n', long = "n-steps")]
    n_steps: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct SymbolArgs {
    #[arg(long, value_enum)]
    scheme: Option<SymbolArg>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, value_enum, default_value = "delta")]
    quantity: Quantity,
    /// Number of grid angles (even)
    #[arg(long, default_value_t = 64)]
    points: usize,
    #[arg(long)]
    tau: Option<f64>,
    /// Polylogarithm index
    #[arg(long = "p", allow_hyphen_values = true)]
    p: Option<f64>,
    /// Arguments of a scalar special function, comma separated
    #[arg(long, allow_hyphen_values = true, value_delimiter = ',')]
    x: Vec<f64>,
    /// Imaginary parts matching --x (frac-power)
    #[arg(long = "x-im", allow_hyphen_values = true, value_delimiter = ',')]
    x_im: Vec<f64>,
    /// First parameter: ml-e order a, frac-power exponent
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Second ml-e parameter b
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    /// Power g of t^g (caputo-power)
    #[arg(long, allow_hyphen_values = true)]
    exponent: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct StabilityArgs {
    #[arg(long, value_enum)]
    scheme: ExplicitArg,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[command(flatten)]
    op: OperatorArgs,
    /// Samples per ray for the resolvent scan
    #[arg(long, default_value_t = 32)]
    samples: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long)]
    tau: f64,
    #[arg(short = 'n', long = "n-steps")]
    n_steps: usize,
    #[arg(long, value_enum, default_value = "constant")]
    forcing: ForcingArg,
    #[arg(long)]
    seed: Option<u64>,
    /// Initial value, the same in every component (backward Euler only)
    #[arg(long, allow_hyphen_values = true)]
    v: Option<f64>,
    /// Initial velocity, the same in every component (backward Euler, 1 < α < 2)
    #[arg(long, allow_hyphen_values = true)]
    w: Option<f64>,
    /// Exponent of the reported sequence norms
    #[arg(long = "p", default_value_t = 2.0)]
    p: f64,
    /// Include the full trajectory in JSON output
    #[arg(long)]
    full: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[command(flatten)]
    op: OperatorArgs,
    /// Exponent g of the exact solution t^g
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    /// Largest step size; the ladder halves it
    #[arg(long, default_value_t = 0.125)]
    tau: f64,
    #[arg(long, default_value_t = 5)]
    levels: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long = "p", default_value_t = 2.0)]
    p: f64,
    #[arg(long, value_enum, default_value = "operator")]
    norm: NormArg,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long = "p", default_value_t = 2.0)]
    p: f64,
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long, value_enum, default_value = "random")]
    forcing: ForcingArg,
    #[arg(long)]
    seed: Option<u64>,
    /// Largest step size; the ladder halves it
    #[arg(long, default_value_t = 0.25)]
    tau: f64,
    #[arg(long, default_value_t = 7)]
    levels: usize,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct DecayArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[command(flatten)]
    op: OperatorArgs,
    #[arg(long, default_value_t = 0.01)]
    tau: f64,
    #[arg(short = 'n', long = "n-steps", default_value_t = 1000)]
    n_steps: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[arg(long, value_enum)]
    scheme: ExplicitArg,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    lambda: f64,
    #[arg(long = "lambda-im", allow_hyphen_values = true, default_value_t = 0.0)]
    lambda_im: f64,
    #[arg(long)]
    tau: f64,
    #[arg(short = 'n', long = "n-steps", default_value_t = 2048)]
    n_steps: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Res<T> {
    Err(Failure::Usage(msg.into()))
}

/// Parse an angle such as `pi`, `-pi/4`, `0.9pi`, `3pi/4` or `1.25`.
pub fn parse_angle(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace('π', "pi");
    let bad = || format!("cannot parse angle '{s}'");
    let Some(idx) = t.find("pi") else {
        return t.parse::<f64>().map_err(|_| bad());
    };
    let coef = t[..idx].trim_end_matches('*');
    let c = match coef {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let rest = &t[idx + 2..];
    let d = if rest.is_empty() {
        1.0
    } else {
        rest.strip_prefix('/').ok_or_else(bad)?.parse::<f64>().map_err(|_| bad())?
    };
    let v = c * PI / d;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

fn alpha(a: f64) -> Res<FracOrder> {
    FracOrder::new(a).map_err(|e| Failure::Usage(format!("--alpha: {e}")))
}

fn positive(name: &str, x: f64) -> Res<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        usage(format!("{name} must be positive, got {x}"))
    }
}

impl OperatorArgs {
    fn phi(&self) -> Res<Option<f64>> {
        self.phi.as_deref().map(|s| parse_angle(s).map_err(|e| Failure::Usage(format!("--phi: {e}")))).transpose()
    }

    fn check_flags(&self, kind: OperatorKind) -> Res<()> {
        if kind == OperatorKind::Scalar {
            if self.dim.is_some() {
                return usage("--dim does not apply to --operator scalar");
            }
            if self.length.is_some() {
                return usage("--length does not apply to --operator scalar");
            }
        } else if self.lambda.is_some() || self.lambda_im.is_some() {
            return usage("--lambda/--lambda-im require --operator scalar");
        }
        if kind != OperatorKind::Rotlap && self.phi.is_some() {
            return usage("--phi requires --operator rotlap here");
        }
        Ok(())
    }

    /// The operator and a unit direction along its smoothest mode.
    fn build(&self, kind: OperatorKind) -> Res<(OperatorHandle, Vec<C>)> {
        self.check_flags(kind)?;
        let m = self.dim.unwrap_or(31);
        let length = positive("--length", self.length.unwrap_or(1.0))?;
        let mode = |m: usize| -> Vec<f64> { (1..=m).map(|j| (PI * j as f64 / (m as f64 + 1.0)).sin()).collect() };
        let op = match kind {
            OperatorKind::Lap1d => dirichlet_laplacian_1d(m, length)?,
            OperatorKind::Lap2d => dirichlet_laplacian_2d(m, length)?,
            OperatorKind::Halflap => fractional_laplacian_half(m, length)?,
            OperatorKind::Rotlap => complex_scaled(&dirichlet_laplacian_1d(m, length)?, self.phi()?.unwrap_or(0.0))?,
            OperatorKind::Scalar => {
                OperatorHandle::scalar(C::new(self.lambda.unwrap_or(-1.0), self.lambda_im.unwrap_or(0.0)))?
            }
        };
        let dir: Vec<f64> = match kind {
            OperatorKind::Scalar => vec![1.0],
            OperatorKind::Lap2d => {
                let s = mode(m);
                s.iter().flat_map(|a| s.iter().map(move |b| a * b)).collect()
            }
            _ => mode(m),
        };
        let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        Ok((op, dir.into_iter().map(|x| C::new(x / n, 0.0)).collect()))
    }
}

impl SchemeArg {
    fn scheme(self) -> Scheme {
        match self {
            SchemeArg::Be => Scheme::Be,
            SchemeArg::Bdf2 => Scheme::Bdf2,
            SchemeArg::L1 => Scheme::L1,
            SchemeArg::Ee => Scheme::Ee,
            SchemeArg::Fcn => Scheme::Fcn,
            SchemeArg::Pcdg => Scheme::Pcdg,
        }
    }
}

impl ExplicitArg {
    fn scheme(self) -> ExplicitScheme {
        match self {
            ExplicitArg::Ee => ExplicitScheme::Ee,
            ExplicitArg::Fcn => ExplicitScheme::Fcn,
        }
    }
}

fn symbol_scheme(s: SymbolArg, a: FracOrder) -> SymbolScheme {
    match s {
        SymbolArg::Be => SymbolScheme::Be,
        SymbolArg::Bdf2 => SymbolScheme::Bdf2,
        SymbolArg::Ee => SymbolScheme::Ee,
        SymbolArg::Fcn => SymbolScheme::Fcn,
        SymbolArg::L1 => match a.regime() {
            Regime::Sub => SymbolScheme::L1Sub,
            Regime::Wave => SymbolScheme::L1Wave,
        },
    }
}

fn forcing_family(f: ForcingArg, seed: Option<u64>) -> Res<ForcingFamily> {
    Ok(match f {
        ForcingArg::Random => ForcingFamily::RandomSeeded(seed.unwrap_or(0)),
        _ if seed.is_some() => return usage("--seed requires --forcing random"),
        ForcingArg::Constant => ForcingFamily::Constant,
        ForcingArg::Alternating => ForcingFamily::AlternatingSign,
    })
}

fn ladder(tau: f64, levels: usize) -> Res<Vec<f64>> {
    positive("--tau", tau)?;
    if levels < 2 {
        return usage("--levels must be at least 2");
    }
    Ok((0..levels).map(|k| tau / 2f64.powi(k as i32)).collect())
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn complex_json(z: C) -> Value {
    json!([z.re, z.im])
}

fn cmd_weights(a: &WeightsArgs) -> Res<Rendered> {
    let alpha = alpha(a.alpha)?;
    let scheme = match (a.scheme, alpha.regime()) {
        (WeightArg::Be, _) => WeightScheme::Be,
        (WeightArg::Bdf2, _) => WeightScheme::Bdf2,
        (WeightArg::L1, Regime::Sub) => WeightScheme::L1Sub,
        (WeightArg::L1, Regime::Wave) => WeightScheme::L1Wave,
        (WeightArg::Pcdg, _) => WeightScheme::Pcdg,
    };
    let t = weights(scheme, alpha, a.n_steps)?;
    let mut table = Table::new(&["j", "coeff"]);
    for (j, c) in t.coeffs.iter().enumerate() {
        table.push(vec![j.into(), (*c).into()]);
    }
    Ok(Rendered { json: to_value(&t), table })
}

fn special_name(q: Quantity) -> Option<&'static str> {
    match q {
        Quantity::Gamma => Some("gamma"),
        Quantity::MlE => Some("ml-e"),
        Quantity::FracPower => Some("frac-power"),
        Quantity::CaputoPower => Some("caputo-power"),
        _ => None,
    }
}

/// Point evaluation of the scalar special functions.
fn cmd_special(a: &SymbolArgs, q: Quantity, name: &str) -> Res<Rendered> {
    let wants = |flag: bool, used: bool, label: &str| -> Res<()> {
        match (flag, used) {
            (true, false) => usage(format!("--quantity {name} requires {label}")),
            (false, true) => usage(format!("{label} does not apply to --quantity {name}")),
            _ => Ok(()),
        }
    };
    if a.scheme.is_some() || a.tau.is_some() || a.p.is_some() {
        return usage(format!("--scheme/--tau/--p do not apply to --quantity {name}"));
    }
    wants(true, !a.x.is_empty(), "--x")?;
    wants(q == Quantity::MlE || q == Quantity::FracPower, a.a.is_some(), "--a")?;
    wants(q == Quantity::MlE, a.b.is_some(), "--b")?;
    wants(q == Quantity::CaputoPower, a.exponent.is_some(), "--exponent")?;
    wants(q == Quantity::CaputoPower, a.alpha.is_some(), "--alpha")?;
    if q != Quantity::FracPower && !a.x_im.is_empty() {
        return usage(format!("--x-im does not apply to --quantity {name}"));
    }
    if q == Quantity::FracPower && !a.x_im.is_empty() && a.x_im.len() != a.x.len() {
        return usage("--x-im must have as many entries as --x");
    }
    let mut rows = Vec::new();
    let mut table;
    if q == Quantity::FracPower {
        let e = a.a.unwrap_or_default();
        table = Table::new(&["re", "im", "value_re", "value_im"]);
        for (i, &re) in a.x.iter().enumerate() {
            let z = C::new(re, a.x_im.get(i).copied().unwrap_or(0.0));
            let v = fracstep::special::frac_power(z, e)?;
            table.push(vec![z.re.into(), z.im.into(), v.re.into(), v.im.into()]);
            rows.push(json!({"z": complex_json(z), "value": complex_json(v)}));
        }
        return Ok(Rendered { json: json!({"quantity": name, "a": e, "rows": rows}), table });
    }
    let al = match a.alpha {
        Some(x) => Some(alpha(x)?),
        None => None,
    };
    table = Table::new(&["x", "value"]);
    for &x in &a.x {
        let v = match q {
            Quantity::Gamma => fracstep::special::gamma(x)?,
            Quantity::MlE => fracstep::special::ml_e(a.a.unwrap_or_default(), a.b.unwrap_or_default(), x)?,
            _ => fracstep::special::caputo_power(al.expect("checked above"), a.exponent.unwrap_or_default(), x)?,
        };
        table.push(vec![x.into(), v.into()]);
        rows.push(json!({"x": x, "value": v}));
    }
    let mut doc = json!({"quantity": name});
    match q {
        Quantity::MlE => {
            doc["a"] = json!(a.a);
            doc["b"] = json!(a.b);
        }
        Quantity::CaputoPower => {
            doc["alpha"] = json!(al);
            doc["exponent"] = json!(a.exponent);
        }
        _ => {}
    }
    doc["rows"] = Value::Array(rows);
    Ok(Rendered { json: doc, table })
}

fn cmd_symbol(a: &SymbolArgs) -> Res<Rendered> {
    if let Some(name) = special_name(a.quantity) {
        return cmd_special(a, a.quantity, name);
    }
    if !a.x.is_empty() || !a.x_im.is_empty() || a.a.is_some() || a.b.is_some() || a.exponent.is_some() {
        return usage("--x/--x-im/--a/--b/--exponent only apply to the special-function quantities");
    }
    if a.points < 2 || a.points % 2 == 1 {
        return usage("--points must be even and at least 2");
    }
    if a.quantity != Quantity::Delta && a.tau.is_some() {
        return usage("--tau only applies to --quantity delta");
    }
    if a.quantity == Quantity::Polylog {
        if a.scheme.is_some() || a.alpha.is_some() {
            return usage("--scheme/--alpha do not apply to --quantity polylog");
        }
        let p = a.p.ok_or_else(|| Failure::Usage("--quantity polylog requires --p".into()))?;
        let mut table = Table::new(&["theta", "re", "im"]);
        let mut rows = Vec::new();
        for theta in theta_grid(a.points) {
            let v = polylog_circle(p, theta)?;
            table.push(vec![theta.into(), v.re.into(), v.im.into()]);
            rows.push(json!({"theta": theta, "value": complex_json(v)}));
        }
        return Ok(Rendered { json: json!({"quantity": "polylog", "p": p, "rows": rows}), table });
    }
    if a.p.is_some() {
        return usage("--p only applies to --quantity polylog");
    }
    let al = alpha(a.alpha.ok_or_else(|| Failure::Usage("--alpha is required".into()))?)?;
    if a.quantity == Quantity::Dfactor {
        if a.scheme.is_some_and(|s| s != SymbolArg::L1) {
            return usage("--quantity dfactor is defined for --scheme l1 only");
        }
        let mut table = Table::new(&["theta", "re", "im", "modulus"]);
        let mut rows = Vec::new();
        let mut sup: f64 = 0.0;
        for theta in theta_grid(a.points) {
            let v = d_factor(al, C::from_polar(1.0, -theta))?;
            sup = sup.max(v.norm());
            table.push(vec![theta.into(), v.re.into(), v.im.into(), v.norm().into()]);
            rows.push(json!({"theta": theta, "value": complex_json(v), "modulus": v.norm()}));
        }
        return Ok(Rendered { json: json!({"quantity": "dfactor", "alpha": al, "sup": sup, "rows": rows}), table });
    }
    let scheme = symbol_scheme(a.scheme.ok_or_else(|| Failure::Usage("--scheme is required".into()))?, al);
    match a.quantity {
        Quantity::Delta => {
            let tau = positive("--tau", a.tau.unwrap_or(1.0))?;
            let samples = curve_sample(scheme, al, tau, a.points)?;
            let mut table = Table::new(&["theta", "re", "im", "modulus", "argument"]);
            for s in &samples {
                table.push(vec![s.theta.into(), s.value.re.into(), s.value.im.into(), s.modulus.into(), s.argument.into()]);
            }
            Ok(Rendered {
                json: json!({"quantity": "delta", "scheme": to_value(&scheme), "alpha": al, "tau": tau, "rows": to_value(&samples)}),
                table,
            })
        }
        Quantity::Margin => {
            let grid = theta_grid(a.points);
            let m = sector_margin(scheme, al, &grid)?;
            let mut table = Table::new(&["theta", "margin"]);
            let mut rows = Vec::new();
            for (t, v) in grid.iter().zip(&m) {
                table.push(vec![(*t).into(), (*v).into()]);
                rows.push(json!({"theta": t, "margin": v}));
            }
            let min = m.iter().copied().fold(f64::INFINITY, f64::min);
            Ok(Rendered {
                json: json!({"quantity": "margin", "scheme": to_value(&scheme), "alpha": al, "min_margin": min, "rows": rows}),
                table,
            })
        }
        _ => unreachable!("handled above"),
    }
}

fn cmd_stability(a: &StabilityArgs) -> Res<Rendered> {
    let al = alpha(a.alpha)?;
    let scheme = a.scheme.scheme();
    let (phi, op) = match a.op.operator {
        None => {
            if a.op.dim.is_some() || a.op.lambda.is_some() || a.op.lambda_im.is_some() || a.op.length.is_some() {
                return usage("--dim/--lambda/--length require --operator");
            }
            (a.op.phi()?.unwrap_or(PI), None)
        }
        Some(kind) => {
            let (op, _) = a.op.build(kind)?;
            let phi = op
                .sector_phi()
                .ok_or_else(|| Failure::Lib(Error::Precondition(format!("sector angle of {} unknown", op.label()))))?;
            (phi, Some(op))
        }
    };
    let phi_eval = if scheme == ExplicitScheme::Fcn { phi.min(FCN_PHI_MAX) } else { phi };
    let sb = stability_bound(scheme, al, phi_eval)?;
    let residual = sb.theta_phi.map(|t| cn_psi(al, t) - 0.5 * al.value() * t - (phi_eval - al.half_angle()));
    let mut pairs: Vec<(&str, Cell)> = vec![
        ("scheme", a.scheme.scheme_name().into()),
        ("alpha", al.value().into()),
        ("phi", phi_eval.into()),
        ("bound", sb.bound.map_or(Cell::Text(String::new()), Cell::Num)),
        ("theta_phi", sb.theta_phi.map_or(Cell::Text(String::new()), Cell::Num)),
    ];
    let mut doc = json!({
        "scheme": to_value(&sb.scheme),
        "alpha": al,
        "phi": phi_eval,
        "bound": sb.bound,
        "theta_phi": sb.theta_phi,
        "theta_residual": residual,
    });
    if let Some(op) = op {
        let r = op.numerical_radius();
        let angle = 0.5 * (al.half_angle() + phi.min(FCN_PHI_MAX));
        let c_r = resolvent_norm_scan(&op, angle, a.samples)?;
        let tau_max = sb.bound.map(|b| (b / r).powf(1.0 / al.value()));
        pairs.push(("operator", op.label().into()));
        pairs.push(("numerical_radius", r.into()));
        pairs.push(("resolvent_bound", c_r.into()));
        pairs.push(("tau_max", tau_max.map_or(Cell::Text(String::new()), Cell::Num)));
        doc["operator"] = json!({
            "label": op.label(),
            "dim": op.dim(),
            "numerical_radius": r,
            "sector_phi": phi,
            "scan_angle": angle,
            "resolvent_bound": c_r,
            "tau_max": tau_max,
        });
    }
    Ok(Rendered { json: doc, table: Table::from_pairs(pairs) })
}

impl ExplicitArg {
    fn scheme_name(self) -> &'static str {
        match self {
            ExplicitArg::Ee => "ee",
            ExplicitArg::Fcn => "fcn",
        }
    }
}

fn cmd_solve(a: &SolveArgs, fmt: Format) -> Res<Rendered> {
    let al = alpha(a.alpha)?;
    let scheme = a.scheme.scheme();
    if (a.v.is_some() || a.w.is_some()) && scheme != Scheme::Be {
        return usage("--v/--w require --scheme be");
    }
    if a.full && fmt == Format::Csv {
        return usage("--full requires JSON output");
    }
    if !(a.p >= 1.0) {
        return usage(format!("--p must be at least 1, got {}", a.p));
    }
    let family = forcing_family(a.forcing, a.seed)?;
    let (op, _) = a.op.build(a.op.operator.unwrap_or(OperatorKind::Lap1d))?;
    let grid = TimeGrid::new(positive("--tau", a.tau)?, a.n_steps)?;
    let f = fracstep::harness::forcing_sequence(family, op.dim(), a.n_steps);
    let constant = |x: f64| vec![C::new(x, 0.0); op.dim()];
    let input = SolveInput::new(scheme, al, &op, grid, f.clone()).with_initial(a.v.map(constant), a.w.map(constant));
    let r = solve(&input)?;
    let m = r.u.len() - 1;
    let mut table = Table::new(&["n", "t", "u_norm", "au_norm", "dbar_norm"]);
    let mut rows = Vec::new();
    for n in 1..=m {
        let (u, au, d) = (norm(&r.u[n]), norm(&r.au[n - 1]), norm(&r.dbar[n - 1]));
        table.push(vec![n.into(), grid.t(n).into(), u.into(), au.into(), d.into()]);
        rows.push(json!({"n": n, "t": grid.t(n), "u_norm": u, "au_norm": au, "dbar_norm": d}));
    }
    let norms = if m >= 1 {
        json!({
            "p": a.p,
            "dbar": counting_lp_norm(&r.dbar, a.p)?,
            "au": counting_lp_norm(&r.au, a.p)?,
            "f": counting_lp_norm(&f[1..=m], a.p)?,
            "u_lp": lp_scaled_norm(&r.u[1..], grid.tau(), a.p)?,
            "u_weak": if a.p.is_finite() { Some(weak_lp_norm(&r.u[1..], grid.tau(), a.p)?) } else { None },
        })
    } else {
        Value::Null
    };
    let seed = match family {
        ForcingFamily::RandomSeeded(s) => Some(s),
        _ => None,
    };
    let mut doc = json!({
        "meta": {
            "scheme": scheme.name(),
            "alpha": al,
            "operator": op.label(),
            "tau": grid.tau(),
            "n_steps": grid.n_steps(),
            "forcing": to_value(&family),
            "seed": seed,
        },
        "residual_max": r.residual_max,
        "blow_up": r.blow_up,
        "truncated": r.truncated,
        "norms": norms,
        "rows": rows,
    });
    if a.full {
        doc["u"] = to_value(&r.u);
    }
    Ok(Rendered { json: doc, table })
}

fn norm(x: &[C]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn cmd_converge(a: &ConvergeArgs) -> Res<Rendered> {
    let al = alpha(a.alpha)?;
    let taus = ladder(a.tau, a.levels)?;
    let horizon = positive("--horizon", a.horizon)?;
    let (op, dir) = a.op.build(a.op.operator.unwrap_or(OperatorKind::Lap1d))?;
    let prob = ManufacturedProblem { alpha: al, exponent: a.exponent, direction: dir, operator: &op, horizon };
    let norm = match a.norm {
        NormArg::Operator => ErrorNorm::OperatorApplied,
        NormArg::State => ErrorNorm::State,
    };
    let t = convergence_study_with(a.scheme.scheme(), &prob, &taus, a.p, norm)?;
    let mut table = Table::new(&["tau", "n_steps", "error", "order"]);
    for (i, row) in t.rows.iter().enumerate() {
        let order = if i == 0 { Cell::Text(String::new()) } else { Cell::Num(t.observed_orders[i - 1]) };
        table.push(vec![row.tau.into(), row.n_steps.into(), row.error.into(), order]);
    }
    Ok(Rendered { json: to_value(&t), table })
}

fn cmd_sweep(a: &SweepArgs) -> Res<Rendered> {
    let al = alpha(a.alpha)?;
    let taus = ladder(a.tau, a.levels)?;
    let family = forcing_family(a.forcing, a.seed)?;
    let (op, _) = a.op.build(a.op.operator.unwrap_or(OperatorKind::Lap1d))?;
    let r = regularity_sweep(a.scheme.scheme(), al, a.p, &op, family, &taus, positive("--horizon", a.horizon)?)?;
    let mut table = Table::new(&["tau", "n_steps", "ratio"]);
    for row in &r.rows {
        table.push(vec![row.tau.into(), row.n_steps.into(), row.ratio.into()]);
    }
    Ok(Rendered { json: to_value(&r), table })
}

fn cmd_decay(a: &DecayArgs) -> Res<Rendered> {
    let al = alpha(a.alpha)?;
    let (op, v) = a.op.build(a.op.operator.unwrap_or(OperatorKind::Lap1d))?;
    let grid = TimeGrid::new(positive("--tau", a.tau)?, a.n_steps)?;
    let r = decay_study(al, &op, &v, grid)?;
    let mut table = Table::new(&["n", "t", "u_norm", "au_norm"]);
    for row in &r.rows {
        table.push(vec![row.n.into(), row.t.into(), row.u_norm.into(), row.au_norm.into()]);
    }
    Ok(Rendered { json: to_value(&r), table })
}

fn cmd_probe(a: &ProbeArgs) -> Res<Rendered> {
    let al = alpha(a.alpha)?;
    let lambda = C::new(a.lambda, a.lambda_im);
    let v = stability_probe(a.scheme.scheme(), al, lambda, positive("--tau", a.tau)?, a.n_steps)?;
    let class = match to_value(&v.classification) {
        Value::String(s) => s,
        other => other.to_string(),
    };
    let table = Table::from_pairs(vec![
        ("scheme", a.scheme.scheme_name().into()),
        ("alpha", al.value().into()),
        ("lambda_re", lambda.re.into()),
        ("lambda_im", lambda.im.into()),
        ("tau", v.tau.into()),
        ("n_steps", v.n_steps.into()),
        ("classification", class.into()),
        ("max_norm", v.max_norm.into()),
    ]);
    Ok(Rendered { json: to_value(&v), table })
}

impl Command {
    fn output(&self) -> &OutputArgs {
        match self {
            Command::Weights(a) => &a.out,
            Command::Symbol(a) => &a.out,
            Command::Stability(a) => &a.out,
            Command::Solve(a) => &a.out,
            Command::Converge(a) => &a.out,
            Command::Sweep(a) => &a.out,
            Command::Decay(a) => &a.out,
            Command::Probe(a) => &a.out,
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Weights(_) | Command::Symbol(_) | Command::Solve(_) => Format::Csv,
            _ => Format::Json,
        }
    }

    fn format(&self) -> Res<Format> {
        let o = self.output();
        match (o.csv, o.format) {
            (true, Some(Format::Json)) => usage("--csv conflicts with --format json"),
            (true, _) => Ok(Format::Csv),
            (false, Some(f)) => Ok(f),
            (false, None) => Ok(self.default_format()),
        }
    }

    fn execute(&self, fmt: Format) -> Res<Rendered> {
        match self {
            Command::Weights(a) => cmd_weights(a),
            Command::Symbol(a) => cmd_symbol(a),
            Command::Stability(a) => cmd_stability(a),
            Command::Solve(a) => cmd_solve(a, fmt),
            Command::Converge(a) => cmd_converge(a),
            Command::Sweep(a) => cmd_sweep(a),
            Command::Decay(a) => cmd_decay(a),
            Command::Probe(a) => cmd_probe(a),
        }
    }
}

fn thread_pool() -> Res<Option<rayon::ThreadPool>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Usage(format!("{THREADS_ENV} must be a non-negative integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n.max(1))
        .build()
        .map(Some)
        .map_err(|e| Failure::Io(format!("thread pool: {e}")))
}

fn execute(cli: &Cli) -> Res<String> {
    let fmt = cli.command.format()?;
    let pool = thread_pool()?;
    let rendered = match &pool {
        Some(p) => p.install(|| cli.command.execute(fmt)),
        None => cli.command.execute(fmt),
    }?;
    Ok(match fmt {
        Format::Json => to_json_text(&rendered.json),
        Format::Csv => rendered.table.to_csv(),
    })
}

fn one_line(s: &str) -> String {
    s.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join(" ")
}

/// Parse `args` (including the program name), run the subcommand and write
/// the report to `out` or to the `--output` file. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let text = e.render().to_string();
                    let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
                    let _ = writeln!(err, "ERROR usage: {}", one_line(first));
                    EXIT_USAGE
                }
            };
        }
    };
    let result = execute(&cli).and_then(|text| match &cli.command.output().output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Usage(m)) => {
            let _ = writeln!(err, "ERROR usage: {}", one_line(&m));
            EXIT_USAGE
        }
        Err(Failure::Io(m)) => {
            let _ = writeln!(err, "ERROR io: {}", one_line(&m));
            EXIT_USAGE
        }
        Err(Failure::Lib(e)) => {
            let _ = writeln!(err, "ERROR {}: {}", e.code(), one_line(&e.to_string()));
            if matches!(e, Error::InvalidInput(_)) {
                EXIT_USAGE
            } else {
                EXIT_NUMERICAL
            }
        }
    }
}

/// Subcommand names as registered with the parser.
pub fn subcommand_names() -> Vec<String> {
    use clap::CommandFactory;
    Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect()
}
