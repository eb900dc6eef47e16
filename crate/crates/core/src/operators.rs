//! Model spatial operators, numerical radius and resolvent scans.

use crate::error::{Error, Result};
use crate::linalg::{
    dot, general_eigenvalues, hermitian_eigenvalues, hermitian_top, norm2, sine_apply, sine_apply_2d, sine_matrix,
    to_dmatrix, zero, DenseLu, TridiagLu, C,
};
use serde::Serialize;
use std::f64::consts::{PI, TAU};

/// Largest supported state dimension.
pub const MAX_DIM: usize = 4096;
/// Dense matrices above this size skip the eigenvalue-based diagnostics.
const DENSE_SPECTRUM_MAX: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageKind {
    Dense,
    Tridiagonal,
    Spectral,
}

/// Sine eigenbasis of a Dirichlet problem on a segment or a square.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SineBasis {
    Line,
    Square,
}

/// One eigenpair of a spectrally stored operator; `index` addresses the sine
/// coefficient (j for a line, j·m + k for a square).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub eigenvalue: C,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub enum Storage {
    /// Row-major n×n.
    Dense(Vec<C>),
    Tridiagonal { lower: Vec<C>, diag: Vec<C>, upper: Vec<C> },
    /// Modes sorted by modulus of the eigenvalue.
    Spectral { basis: SineBasis, m: usize, sine: Vec<f64>, modes: Vec<Mode> },
}

/// A linear operator on C^dim together with its cached sectorial data.
#[derive(Debug, Clone)]
pub struct OperatorHandle {
    label: String,
    dim: usize,
    storage: Storage,
    hermitian: bool,
    normal: bool,
    radius: f64,
    sector_phi: Option<f64>,
    spectrum: Option<Vec<C>>,
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidInput("operator dimension must be positive".into()));
    }
    if dim > MAX_DIM {
        return Err(Error::SizeLimit(format!("dimension {dim} exceeds {MAX_DIM}")));
    }
    Ok(())
}

fn check_grid(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidInput(format!("need m ≥ 2 interior points, got {m}")));
    }
    check_dim(m)
}

fn sort_spectrum(mut v: Vec<C>) -> Vec<C> {
    v.sort_by(|a, b| a.norm().total_cmp(&b.norm()).then(a.arg().total_cmp(&b.arg())));
    v
}

/// Eigenvalues -(4/h²) sin²(kπ/(2(m+1))), k = 1..m, of the 1D Dirichlet Laplacian.
fn lap1d_eigenvalues(m: usize, h: f64) -> Vec<f64> {
    (1..=m)
        .map(|k| {
            let s = (k as f64 * PI / (2.0 * (m as f64 + 1.0))).sin();
            -4.0 / (h * h) * s * s
        })
        .collect()
}

fn check_length(length: f64) -> Result<()> {
    if !(length > 0.0) || !length.is_finite() {
        return Err(Error::InvalidInput(format!("domain length {length} must be positive")));
    }
    Ok(())
}

/// Minimum of |arg| over a segment; 0 if it touches the closed positive real axis.
fn segment_min_arg(p: C, q: C) -> f64 {
    let d = q - p;
    // Closest approach to the origin on the segment.
    let t = if d.norm_sqr() > 0.0 { (-(p.re * d.re + p.im * d.im) / d.norm_sqr()).clamp(0.0, 1.0) } else { 0.0 };
    if (p + d * t).norm() <= 1e-14 * (p.norm() + q.norm()) {
        return 0.0;
    }
    if (p.im <= 0.0 && q.im >= 0.0) || (p.im >= 0.0 && q.im <= 0.0) {
        if p.im != q.im {
            let s = p.im / (p.im - q.im);
            if p.re + s * d.re > 0.0 {
                return 0.0;
            }
        } else if p.re > 0.0 || q.re > 0.0 {
            return 0.0;
        }
    }
    p.arg().abs().min(q.arg().abs())
}

/// Largest φ with the convex polygon (ordered vertices) outside Σ_φ.
fn polygon_sector(pts: &[C]) -> f64 {
    let n = pts.len();
    if n == 1 {
        return pts[0].arg().abs();
    }
    let mut best = f64::INFINITY;
    for i in 0..n {
        best = best.min(segment_min_arg(pts[i], pts[(i + 1) % n]));
    }
    // Origin strictly inside the polygon means no sector at all.
    let mut sign = 0.0;
    let mut inside = n >= 3;
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let cr = (q.re - p.re) * (-p.im) - (q.im - p.im) * (-p.re);
        if cr.abs() < 1e-300 {
            continue;
        }
        if sign == 0.0 {
            sign = cr.signum();
        } else if cr.signum() != sign {
            inside = false;
            break;
        }
    }
    if inside {
        0.0
    } else {
        best
    }
}

fn hermitian_part(n: usize, a: &[C], theta: f64) -> nalgebra::DMatrix<C> {
    let r = C::from_polar(1.0, theta);
    let mut h = nalgebra::DMatrix::<C>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            h[(i, j)] = 0.5 * (r * a[i * n + j] + (r * a[j * n + i]).conj());
        }
    }
    h
}

/// max_θ λ_max(Re(e^{iθ} A)): 64-point scan refined by golden section.
fn dense_numerical_radius(n: usize, a: &[C]) -> f64 {
    let f = |t: f64| hermitian_top(hermitian_part(n, a, t)).0;
    let grid = 64;
    let step = TAU / grid as f64;
    let (k, mut best) = (0..grid).map(|k| (k, f(k as f64 * step))).fold((0, f64::NEG_INFINITY), |acc, v| {
        if v.1 > acc.1 {
            v
        } else {
            acc
        }
    });
    let (mut lo, mut hi) = ((k as f64 - 1.0) * step, (k as f64 + 1.0) * step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > 1e-10 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    best = best.max(f1).max(f2);
    best
}

/// Boundary points x*Ax of the numerical range, x the top eigenvector of Re(e^{iθ}A).
fn numerical_range_boundary(n: usize, a: &[C], samples: usize) -> Vec<C> {
    (0..samples)
        .map(|k| {
            let (_, x) = hermitian_top(hermitian_part(n, a, TAU * k as f64 / samples as f64));
            let mut s = zero();
            for i in 0..n {
                let mut row = zero();
                for j in 0..n {
                    row += a[i * n + j] * x[j];
                }
                s += x[i].conj() * row;
            }
            s
        })
        .collect()
}

impl OperatorHandle {
    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn kind(&self) -> StorageKind {
        match self.storage {
            Storage::Dense(_) => StorageKind::Dense,
            Storage::Tridiagonal { .. } => StorageKind::Tridiagonal,
            Storage::Spectral { .. } => StorageKind::Spectral,
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_normal(&self) -> bool {
        self.normal
    }

    /// Cached numerical radius sup{|⟨Ax, x⟩| : |x| = 1}.
    pub fn numerical_radius(&self) -> f64 {
        self.radius
    }

    /// Largest φ with the numerical range contained in C \ Σ_φ, when known.
    pub fn sector_phi(&self) -> Option<f64> {
        self.sector_phi
    }

    /// Eigenvalues sorted by modulus, when known.
    pub fn spectrum(&self) -> Option<&[C]> {
        self.spectrum.as_deref()
    }

    /// Build from a row-major dense matrix.
    pub fn from_dense(dim: usize, entries: Vec<C>, label: impl Into<String>) -> Result<Self> {
        check_dim(dim)?;
        if entries.len() != dim * dim {
            return Err(Error::InvalidInput(format!("expected {} entries, got {}", dim * dim, entries.len())));
        }
        if entries.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        let n = dim;
        let hermitian = (0..n).all(|i| (0..n).all(|j| entries[i * n + j] == entries[j * n + i].conj()));
        let fro2: f64 = entries.iter().map(|v| v.norm_sqr()).sum();
        let mut comm = 0.0;
        for i in 0..n {
            for j in 0..n {
                let mut s = zero();
                for k in 0..n {
                    s += entries[i * n + k] * entries[j * n + k].conj() - entries[k * n + i].conj() * entries[k * n + j];
                }
                comm += s.norm_sqr();
            }
        }
        let normal = comm.sqrt() <= 1e-12 * fro2.max(f64::MIN_POSITIVE);
        let (radius, sector_phi, spectrum) = if n == 1 {
            let l = entries[0];
            (l.norm(), Some(l.arg().abs()), Some(vec![l]))
        } else if n <= DENSE_SPECTRUM_MAX {
            let eigs = if hermitian {
                Some(hermitian_eigenvalues(to_dmatrix(n, &entries)).into_iter().map(|v| C::new(v, 0.0)).collect())
            } else {
                general_eigenvalues(to_dmatrix(n, &entries))
            };
            let radius = match (&eigs, normal) {
                (Some(s), true) => s.iter().map(|v: &C| v.norm()).fold(0.0, f64::max),
                _ => dense_numerical_radius(n, &entries),
            };
            let phi = if hermitian {
                let s = eigs.as_ref().expect("hermitian spectrum");
                let max = s.iter().map(|v: &C| v.re).fold(f64::NEG_INFINITY, f64::max);
                if max < 0.0 {
                    PI
                } else {
                    0.0
                }
            } else {
                polygon_sector(&numerical_range_boundary(n, &entries, 256))
            };
            (radius, Some(phi), eigs.map(sort_spectrum))
        } else {
            (dense_numerical_radius(n, &entries), None, None)
        };
        Ok(OperatorHandle {
            label: label.into(),
            dim,
            storage: Storage::Dense(entries),
            hermitian,
            normal,
            radius,
            sector_phi,
            spectrum,
        })
    }

    /// The 1×1 operator `lambda`.
    pub fn scalar(lambda: C) -> Result<Self> {
        OperatorHandle::from_dense(1, vec![lambda], format!("scalar({lambda})"))
    }

    /// y = A x
    pub fn apply(&self, x: &[C]) -> Result<Vec<C>> {
        if x.len() != self.dim {
            return Err(Error::InvalidInput(format!("vector length {} ≠ dimension {}", x.len(), self.dim)));
        }
        let n = self.dim;
        Ok(match &self.storage {
            Storage::Dense(a) => (0..n).map(|i| a[i * n..(i + 1) * n].iter().zip(x).map(|(p, q)| p * q).sum()).collect(),
            Storage::Tridiagonal { lower, diag, upper } => (0..n)
                .map(|i| {
                    let mut s = diag[i] * x[i];
                    if i > 0 {
                        s += lower[i - 1] * x[i - 1];
                    }
                    if i + 1 < n {
                        s += upper[i] * x[i + 1];
                    }
                    s
                })
                .collect(),
            Storage::Spectral { basis, m, sine, modes } => {
                let mut c = match basis {
                    SineBasis::Line => sine_apply(sine, *m, x),
                    SineBasis::Square => sine_apply_2d(sine, *m, x),
                };
                let mut scaled = vec![zero(); n];
                for md in modes {
                    scaled[md.index] = md.eigenvalue * c[md.index];
                }
                c = scaled;
                match basis {
                    SineBasis::Line => sine_apply(sine, *m, &c),
                    SineBasis::Square => sine_apply_2d(sine, *m, &c),
                }
            }
        })
    }

    /// Explicit row-major matrix, built column by column from `apply`.
    pub fn to_dense(&self) -> Vec<C> {
        let n = self.dim;
        let mut out = vec![zero(); n * n];
        let mut e = vec![zero(); n];
        for j in 0..n {
            e[j] = C::new(1.0, 0.0);
            let col = self.apply(&e).expect("dimension matches");
            for i in 0..n {
                out[i * n + j] = col[i];
            }
            e[j] = zero();
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> OperatorHandle {
        let n = self.dim;
        let storage = match &self.storage {
            Storage::Dense(a) => {
                let mut b = vec![zero(); n * n];
                for i in 0..n {
                    for j in 0..n {
                        b[j * n + i] = a[i * n + j].conj();
                    }
                }
                Storage::Dense(b)
            }
            Storage::Tridiagonal { lower, diag, upper } => Storage::Tridiagonal {
                lower: upper.iter().map(|v| v.conj()).collect(),
                diag: diag.iter().map(|v| v.conj()).collect(),
                upper: lower.iter().map(|v| v.conj()).collect(),
            },
            Storage::Spectral { basis, m, sine, modes } => Storage::Spectral {
                basis: *basis,
                m: *m,
                sine: sine.clone(),
                modes: modes.iter().map(|md| Mode { eigenvalue: md.eigenvalue.conj(), index: md.index }).collect(),
            },
        };
        OperatorHandle {
            label: format!("adj({})", self.label),
            dim: n,
            storage,
            hermitian: self.hermitian,
            normal: self.normal,
            radius: self.radius,
            sector_phi: self.sector_phi,
            spectrum: self.spectrum.as_ref().map(|s| sort_spectrum(s.iter().map(|v| v.conj()).collect())),
        }
    }

    /// Factor the step matrix σ I - κ A once for repeated solves.
    pub fn step_matrix(&self, sigma: C, kappa: C) -> Result<StepMatrix<'_>> {
        let n = self.dim;
        let factor = match &self.storage {
            Storage::Dense(a) => {
                let mut m: Vec<C> = a.iter().map(|v| -kappa * v).collect();
                for i in 0..n {
                    m[i * n + i] += sigma;
                }
                Factor::Dense(DenseLu::factor(n, m)?)
            }
            Storage::Tridiagonal { lower, diag, upper } => {
                let l: Vec<C> = lower.iter().map(|v| -kappa * v).collect();
                let u: Vec<C> = upper.iter().map(|v| -kappa * v).collect();
                let d: Vec<C> = diag.iter().map(|v| sigma - kappa * v).collect();
                Factor::Tridiagonal(TridiagLu::factor(&l, &d, &u)?)
            }
            Storage::Spectral { modes, .. } => {
                let scale = sigma.norm() + kappa.norm() * self.radius;
                let mut inv = vec![zero(); n];
                for md in modes {
                    let d = sigma - kappa * md.eigenvalue;
                    if d.norm() <= 1e-14 * scale {
                        return Err(Error::Singular(format!("step matrix vanishes on mode {}", md.index)));
                    }
                    inv[md.index] = 1.0 / d;
                }
                Factor::Spectral(inv)
            }
        };
        Ok(StepMatrix { op: self, factor })
    }
}

#[derive(Debug, Clone)]
enum Factor {
    Dense(DenseLu),
    Tridiagonal(TridiagLu),
    Spectral(Vec<C>),
}

/// A factored σ I - κ A bound to its operator.
#[derive(Debug, Clone)]
pub struct StepMatrix<'a> {
    op: &'a OperatorHandle,
    factor: Factor,
}

impl StepMatrix<'_> {
    pub fn solve(&self, rhs: &[C]) -> Vec<C> {
        match &self.factor {
            Factor::Dense(lu) => lu.solve(rhs),
            Factor::Tridiagonal(lu) => lu.solve(rhs),
            Factor::Spectral(inv) => {
                let Storage::Spectral { basis, m, sine, .. } = &self.op.storage else {
                    unreachable!("spectral factor on non-spectral storage")
                };
                let t = |v: &[C]| match basis {
                    SineBasis::Line => sine_apply(sine, *m, v),
                    SineBasis::Square => sine_apply_2d(sine, *m, v),
                };
                let c: Vec<C> = t(rhs).iter().zip(inv).map(|(a, b)| a * b).collect();
                t(&c)
            }
        }
    }
}

/// Dirichlet Laplacian on (0, length) with m interior points, h = length/(m+1).
pub fn dirichlet_laplacian_1d(m: usize, length: f64) -> Result<OperatorHandle> {
    check_grid(m)?;
    check_length(length)?;
    let h = length / (m as f64 + 1.0);
    let off = C::new(1.0 / (h * h), 0.0);
    let eigs = lap1d_eigenvalues(m, h);
    let radius = eigs.iter().map(|v| v.abs()).fold(0.0, f64::max);
    Ok(OperatorHandle {
        label: format!("lap1d({m})"),
        dim: m,
        storage: Storage::Tridiagonal { lower: vec![off; m - 1], diag: vec![-2.0 * off; m], upper: vec![off; m - 1] },
        hermitian: true,
        normal: true,
        radius,
        sector_phi: Some(PI),
        spectrum: Some(sort_spectrum(eigs.into_iter().map(|v| C::new(v, 0.0)).collect())),
    })
}

fn spectral_line(label: String, m: usize, eig: Vec<f64>) -> OperatorHandle {
    let mut modes: Vec<Mode> = eig.iter().enumerate().map(|(i, &v)| Mode { eigenvalue: C::new(v, 0.0), index: i }).collect();
    modes.sort_by(|a, b| a.eigenvalue.norm().total_cmp(&b.eigenvalue.norm()).then(a.index.cmp(&b.index)));
    let radius = eig.iter().map(|v| v.abs()).fold(0.0, f64::max);
    OperatorHandle {
        label,
        dim: m,
        spectrum: Some(modes.iter().map(|md| md.eigenvalue).collect()),
        storage: Storage::Spectral { basis: SineBasis::Line, m, sine: sine_matrix(m), modes },
        hermitian: true,
        normal: true,
        radius,
        sector_phi: Some(PI),
    }
}

/// Dirichlet Laplacian on the square (0, length)², m² unknowns, stored by its
/// eigenvalues λ_j + λ_k in the tensor sine basis.
pub fn dirichlet_laplacian_2d(m: usize, length: f64) -> Result<OperatorHandle> {
    check_grid(m)?;
    check_dim(m.saturating_mul(m))?;
    check_length(length)?;
    let h = length / (m as f64 + 1.0);
    let e = lap1d_eigenvalues(m, h);
    let mut modes = Vec::with_capacity(m * m);
    for j in 0..m {
        for k in 0..m {
            modes.push(Mode { eigenvalue: C::new(e[j] + e[k], 0.0), index: j * m + k });
        }
    }
    modes.sort_by(|a, b| a.eigenvalue.norm().total_cmp(&b.eigenvalue.norm()).then(a.index.cmp(&b.index)));
    let radius = modes.iter().map(|md| md.eigenvalue.norm()).fold(0.0, f64::max);
    Ok(OperatorHandle {
        label: format!("lap2d({m})"),
        dim: m * m,
        spectrum: Some(modes.iter().map(|md| md.eigenvalue).collect()),
        storage: Storage::Spectral { basis: SineBasis::Square, m, sine: sine_matrix(m), modes },
        hermitian: true,
        normal: true,
        radius,
        sector_phi: Some(PI),
    })
}

/// -(-Δ)^{1/2} on (0, length): eigenvalues -|λ_k|^{1/2} of the 1D Laplacian.
pub fn fractional_laplacian_half(m: usize, length: f64) -> Result<OperatorHandle> {
    check_grid(m)?;
    check_length(length)?;
    let h = length / (m as f64 + 1.0);
    let e = lap1d_eigenvalues(m, h).into_iter().map(|v| -v.abs().sqrt()).collect();
    Ok(spectral_line(format!("halflap({m})"), m, e))
}

/// e^{iφ} A for a Hermitian negative definite A, |φ| < π.
pub fn complex_scaled(a: &OperatorHandle, phi: f64) -> Result<OperatorHandle> {
    if !(phi.abs() < PI) {
        return Err(Error::domain("complex_scaled", format!("|phi| = {} must be < π", phi.abs())));
    }
    let negdef = a.hermitian && a.spectrum().is_some_and(|s| s.iter().all(|v| v.re < 0.0));
    if !negdef {
        return Err(Error::Precondition(format!("{} is not Hermitian negative definite", a.label)));
    }
    let r = C::from_polar(1.0, phi);
    let storage = match &a.storage {
        Storage::Dense(v) => Storage::Dense(v.iter().map(|x| r * x).collect()),
        Storage::Tridiagonal { lower, diag, upper } => Storage::Tridiagonal {
            lower: lower.iter().map(|x| r * x).collect(),
            diag: diag.iter().map(|x| r * x).collect(),
            upper: upper.iter().map(|x| r * x).collect(),
        },
        Storage::Spectral { basis, m, sine, modes } => Storage::Spectral {
            basis: *basis,
            m: *m,
            sine: sine.clone(),
            modes: modes.iter().map(|md| Mode { eigenvalue: r * md.eigenvalue, index: md.index }).collect(),
        },
    };
    Ok(OperatorHandle {
        label: if phi == 0.0 { a.label.clone() } else { format!("rot({phi})*{}", a.label) },
        dim: a.dim,
        storage,
        hermitian: phi == 0.0,
        normal: true,
        radius: a.radius,
        sector_phi: Some(PI - phi.abs()),
        spectrum: a.spectrum.as_ref().map(|s| s.iter().map(|v| r * v).collect()),
    })
}

/// Numerical radius; cached at construction.
pub fn numerical_radius(a: &OperatorHandle) -> f64 {
    a.numerical_radius()
}

/// One resolvent evaluation |z| ‖(z - A)^{-1}‖₂.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolventSample {
    pub z: C,
    pub value: f64,
}

/// Deterministic start vector with components along every sine mode.
fn start_vector(n: usize) -> Vec<C> {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut v: Vec<C> = (0..n)
        .map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            C::new(0.5 + (state >> 11) as f64 / (1u64 << 53) as f64, 0.25)
        })
        .collect();
    let s = norm2(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Largest singular value of R = (z - A)^{-1}: Lanczos iteration on R*R with
/// full reorthogonalization, stopped when the top Ritz value changes by less
/// than 1e-10 relative (or the Krylov space is exhausted).
pub fn resolvent_norm(a: &OperatorHandle, z: C) -> Result<f64> {
    let one = C::new(1.0, 0.0);
    let f = a.step_matrix(z, one)?;
    let adj = a.adjoint();
    let fa = adj.step_matrix(z.conj(), one)?;
    let n = a.dim;
    let mut basis: Vec<Vec<C>> = vec![start_vector(n)];
    let (mut diag, mut off): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut top = 0.0;
    for j in 0..n.min(400) {
        let mut w = fa.solve(&f.solve(&basis[j]));
        if w.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Singular(format!("resolvent blew up at z = {z}")));
        }
        diag.push(dot(&basis[j], &w).re);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let k = diag.len();
        let mut t = nalgebra::DMatrix::<C>::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = C::new(diag[i], 0.0);
            if i + 1 < k {
                t[(i, i + 1)] = C::new(off[i], 0.0);
                t[(i + 1, i)] = C::new(off[i], 0.0);
            }
        }
        let next = hermitian_top(t).0;
        let beta = norm2(&w);
        let done = (next - top).abs() <= 1e-10 * next || beta <= 1e-13 * next;
        top = next;
        if done {
            break;
        }
        off.push(beta);
        basis.push(w.into_iter().map(|v| v / beta).collect());
    }
    Ok(top.max(0.0).sqrt())
}

/// Samples of |z| ‖(z - A)^{-1}‖ on the rays arg z = ±angle and arg z = 0,
/// with |z| log-spaced over [1e-3, 1e6]·(r(A) + 1).
pub fn resolvent_norm_samples(a: &OperatorHandle, angle: f64, n_samples: usize) -> Result<Vec<ResolventSample>> {
    if !(angle > 0.0 && angle < PI) {
        return Err(Error::domain("resolvent_norm_scan", format!("angle = {angle} not in (0, π)")));
    }
    if n_samples < 2 {
        return Err(Error::domain("resolvent_norm_scan", "need at least two samples per ray"));
    }
    if let Some(eigs) = a.spectrum() {
        if let Some(l) = eigs.iter().find(|l| l.norm() == 0.0 || l.arg().abs() <= angle) {
            return Err(Error::Precondition(format!("eigenvalue {l} lies in the closed sector of angle {angle}")));
        }
    }
    let base = a.numerical_radius() + 1.0;
    let mut out = Vec::with_capacity(3 * n_samples);
    for ray in [angle, -angle, 0.0] {
        for k in 0..n_samples {
            let e = -3.0 + 9.0 * k as f64 / (n_samples - 1) as f64;
            let z = C::from_polar(base * 10f64.powf(e), ray);
            let r = resolvent_norm(a, z)?;
            let value = z.norm() * r;
            if !(value < 1e12) {
                return Err(Error::Singular(format!("resolvent numerically singular at z = {z}")));
            }
            out.push(ResolventSample { z, value });
        }
    }
    Ok(out)
}

/// sup of |z| ‖(z - A)^{-1}‖ over [`resolvent_norm_samples`]; an estimate of R-boundedness constants.
pub fn resolvent_norm_scan(a: &OperatorHandle, angle: f64, n_samples: usize) -> Result<f64> {
    Ok(resolvent_norm_samples(a, angle, n_samples)?.iter().map(|s| s.value).fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn lap1d_example() {
        let a = dirichlet_laplacian_1d(2, 3.0).unwrap();
        let s = a.spectrum().unwrap();
        assert!((s[0] - c(-1.0, 0.0)).norm() < 1e-14 && (s[1] - c(-3.0, 0.0)).norm() < 1e-14);
        assert!((a.numerical_radius() - 3.0).abs() < 1e-14);
        assert_eq!(a.sector_phi(), Some(PI));
        assert!(dirichlet_laplacian_1d(5000, 1.0).is_err());
    }

    #[test]
    fn lap2d_example_and_kronecker() {
        let a = dirichlet_laplacian_2d(2, 3.0).unwrap();
        let got: Vec<f64> = a.spectrum().unwrap().iter().map(|v| v.re).collect();
        let want = [-2.0, -4.0, -4.0, -6.0];
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() < 1e-13);
        }
        // Matrix-free apply against I⊗T + T⊗I.
        let m = 3;
        let a = dirichlet_laplacian_2d(m, 1.0).unwrap();
        let h = 1.0 / (m as f64 + 1.0);
        let t = |i: usize, j: usize| -> f64 {
            if i == j {
                -2.0 / (h * h)
            } else if i.abs_diff(j) == 1 {
                1.0 / (h * h)
            } else {
                0.0
            }
        };
        let dense = a.to_dense();
        let n = m * m;
        for r in 0..n {
            for q in 0..n {
                let (ra, rb, qa, qb) = (r / m, r % m, q / m, q % m);
                let mut want = 0.0;
                if rb == qb {
                    want += t(ra, qa);
                }
                if ra == qa {
                    want += t(rb, qb);
                }
                assert!((dense[r * n + q] - c(want, 0.0)).norm() < 1e-11, "({r},{q})");
            }
        }
    }

    #[test]
    fn halflap_eigenvalues() {
        let a = fractional_laplacian_half(4, 1.0).unwrap();
        let l = dirichlet_laplacian_1d(4, 1.0).unwrap();
        for (x, y) in a.spectrum().unwrap().iter().zip(l.spectrum().unwrap()) {
            assert!((x.re + y.re.abs().sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn complex_scaling() {
        let base = dirichlet_laplacian_1d(8, 1.0).unwrap();
        let same = complex_scaled(&base, 0.0).unwrap();
        assert!(same.is_hermitian());
        assert_eq!(same.to_dense(), base.to_dense());
        let rot = complex_scaled(&base, 0.6 * PI).unwrap();
        assert!((rot.numerical_radius() - base.numerical_radius()).abs() < 1e-12);
        assert!((rot.sector_phi().unwrap() - 0.4 * PI).abs() < 1e-15);
        assert!(complex_scaled(&rot, 0.1).is_err());
    }

    #[test]
    fn nilpotent_radius() {
        let a = OperatorHandle::from_dense(2, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], "jordan").unwrap();
        assert!((a.numerical_radius() - 0.5).abs() < 1e-12);
        assert!(!a.is_normal());
        assert_eq!(a.sector_phi(), Some(0.0));
    }

    #[test]
    fn step_matrix_inverts() {
        let ops = [
            dirichlet_laplacian_1d(7, 1.0).unwrap(),
            dirichlet_laplacian_2d(3, 1.0).unwrap(),
            fractional_laplacian_half(6, 2.0).unwrap(),
            complex_scaled(&dirichlet_laplacian_1d(5, 1.0).unwrap(), 0.3).unwrap(),
        ];
        for a in &ops {
            let x: Vec<C> = (0..a.dim()).map(|i| c(i as f64 * 0.1 - 0.3, 1.0 / (i as f64 + 1.0))).collect();
            let (s, k) = (c(3.0, 0.5), c(0.7, 0.0));
            let ax = a.apply(&x).unwrap();
            let b: Vec<C> = x.iter().zip(&ax).map(|(xi, yi)| s * xi - k * yi).collect();
            let y = a.step_matrix(s, k).unwrap().solve(&b);
            for (p, q) in x.iter().zip(&y) {
                assert!((p - q).norm() < 1e-10 * (1.0 + p.norm()), "{}", a.label());
            }
        }
    }

    #[test]
    fn scalar_resolvent() {
        let a = OperatorHandle::scalar(c(-1.0, 0.0)).unwrap();
        let v = resolvent_norm_scan(&a, PI / 2.0, 40).unwrap();
        assert!((v - 1.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn rotated_scan_fails_past_sector() {
        let base = dirichlet_laplacian_1d(8, 1.0).unwrap();
        let rot = complex_scaled(&base, 0.6 * PI).unwrap();
        assert!(resolvent_norm_scan(&rot, 0.35 * PI, 20).is_ok());
        assert!(resolvent_norm_scan(&rot, 0.45 * PI, 20).is_err());
    }

    #[test]
    fn adjoint_is_conjugate_transpose() {
        let a = complex_scaled(&dirichlet_laplacian_1d(4, 1.0).unwrap(), 0.4).unwrap();
        let d = a.to_dense();
        let e = a.adjoint().to_dense();
        for i in 0..4 {
            for j in 0..4 {
                assert!((d[i * 4 + j].conj() - e[j * 4 + i]).norm() < 1e-12);
            }
        }
    }
}
