//! Small dense complex matrices and the contraction calculus built on them:
//! Hermitian square roots, defect operators, the Gelfand spectral radius,
//! the characteristic function `Θ_T`, numerical-range sampling and the
//! two-group Berezin pairing.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::grouplib::Su11Element;
use crate::C64;

/// Largest supported dimension.
pub const MAX_DIM: usize = 16;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    n: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

impl ComplexMatrix {
    pub fn new(n: usize, data: Vec<C64>) -> Result<Self> {
        if n == 0 || n > MAX_DIM {
            return Err(invalid(format!(
                "matrix dimension must be in 1..={MAX_DIM}, got {n}"
            )));
        }
        if data.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("matrix has non-finite entries"));
        }
        Ok(Self { n, data })
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let n = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: r.len(),
            });
        }
        Self::new(n, rows.into_iter().flatten().collect())
    }

    pub fn zeros(n: usize) -> Self {
        assert!((1..=MAX_DIM).contains(&n), "dimension {n} out of range");
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
    }

    pub fn diag(d: &[C64]) -> Result<Self> {
        let n = d.len();
        let mut data = vec![ZERO; n * n];
        for (i, v) in d.iter().enumerate() {
            data[i * n + i] = *v;
        }
        Self::new(n, data)
    }

    pub fn scalar(t: C64) -> Self {
        Self {
            n: 1,
            data: vec![t],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    fn check_dim(&self, other: &ComplexMatrix) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    pub fn adjoint(&self) -> ComplexMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    pub fn mul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_dim(other)?;
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, x: &[C64]) -> Result<Vec<C64>> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self
            .data
            .chunks(self.n)
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    fn zip_with(
        &self,
        other: &ComplexMatrix,
        f: impl Fn(C64, C64) -> C64,
    ) -> Result<ComplexMatrix> {
        self.check_dim(other)?;
        Ok(ComplexMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, t: C64) -> ComplexMatrix {
        ComplexMatrix {
            n: self.n,
            data: self.data.iter().map(|a| a * t).collect(),
        }
    }

    /// `self + t·I`.
    pub fn shift(&self, t: C64) -> ComplexMatrix {
        let mut out = self.clone();
        for i in 0..self.n {
            out.data[i * self.n + i] += t;
        }
        out
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entry modulus.
    pub fn norm_max(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Spectral norm `‖A‖₂ = √λ_max(A*A)`.
    pub fn norm_op(&self) -> f64 {
        let s = self.norm_max();
        if s == 0.0 {
            return 0.0;
        }
        let unit = self.scale(C64::new(1.0 / s, 0.0));
        let gram = unit.adjoint().mul(&unit).expect("same dimension");
        s * hermitian_eigenvalues_unchecked(&gram)
            .last()
            .copied()
            .unwrap_or(0.0)
            .max(0.0)
            .sqrt()
    }

    /// `(A + A*)/2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        let adj = self.adjoint();
        self.zip_with(&adj, |a, b| (a + b) * 0.5)
            .expect("same dimension")
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.n;
        (0..n).all(|i| (i..n).all(|j| (self.get(i, j) - self.get(j, i).conj()).norm() <= tol))
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let g = self.adjoint().mul(self).expect("same dimension");
        g.sub(&Self::identity(self.n))
            .expect("same dimension")
            .norm_max()
            <= tol
    }

    /// Inverse by Gaussian elimination with partial pivoting.
    pub fn inverse(&self) -> Result<ComplexMatrix> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        let scale = self.norm_max().max(f64::MIN_POSITIVE);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[i * n + col].norm().total_cmp(&a[j * n + col].norm()))
                .expect("non-empty range");
            if a[pivot * n + col].norm() <= 1e-14 * scale {
                return Err(Error::Singular("matrix inverse"));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                    inv.swap(pivot * n + j, col * n + j);
                }
            }
            let p = ONE / a[col * n + col];
            for j in 0..n {
                a[col * n + j] *= p;
                inv[col * n + j] *= p;
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = a[i * n + col];
                if f == ZERO {
                    continue;
                }
                for j in 0..n {
                    let (u, v) = (a[col * n + j], inv[col * n + j]);
                    a[i * n + j] -= f * u;
                    inv[i * n + j] -= f * v;
                }
            }
        }
        Ok(ComplexMatrix { n, data: inv })
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        crate::serde_complex::matrix::serialize(&self.rows(), s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = crate::serde_complex::matrix::deserialize(d)?;
        ComplexMatrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

// ---------------------------------------------------------------------------
// Vectors
// ---------------------------------------------------------------------------

/// `⟨u, v⟩ = Σ u_i · conj(v_i)`.
pub fn inner(u: &[C64], v: &[C64]) -> C64 {
    u.iter().zip(v).map(|(a, b)| a * b.conj()).sum()
}

pub fn vec_norm(u: &[C64]) -> f64 {
    u.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------
// Hermitian eigenproblems
// ---------------------------------------------------------------------------

/// Real symmetric eigen-decomposition by cyclic Jacobi with threshold
/// sweeps. Returns eigenvalues (unsorted) and eigenvectors as the columns of
/// a row-major `m × m` array.
fn jacobi_symmetric(mut a: Vec<f64>, m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; m * m];
    for i in 0..m {
        v[i * m + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    for sweep in 0..100 {
        let off: f64 = (0..m)
            .flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * m + j] * a[i * m + j])
            .sum::<f64>()
            .sqrt();
        if off < 1e-12 * scale * 1e-3 {
            break;
        }
        let threshold = if sweep < 3 {
            0.2 * off / (m * m) as f64
        } else {
            0.0
        };
        for p in 0..m {
            for q in p + 1..m {
                let apq = a[p * m + q];
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                let theta = (a[q * m + q] - a[p * m + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..m {
                    let (akp, akq) = (a[k * m + p], a[k * m + q]);
                    a[k * m + p] = c * akp - s * akq;
                    a[k * m + q] = s * akp + c * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[p * m + k], a[q * m + k]);
                    a[p * m + k] = c * apk - s * aqk;
                    a[q * m + k] = s * apk + c * aqk;
                }
                for k in 0..m {
                    let (vkp, vkq) = (v[k * m + p], v[k * m + q]);
                    v[k * m + p] = c * vkp - s * vkq;
                    v[k * m + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..m).map(|i| a[i * m + i]).collect(), v)
}

/// Real embedding `[[Re, −Im], [Im, Re]]` of a Hermitian matrix.
fn real_embedding(h: &ComplexMatrix) -> Vec<f64> {
    let n = h.n;
    let m = 2 * n;
    let mut a = vec![0.0; m * m];
    for i in 0..n {
        for j in 0..n {
            let z = h.get(i, j);
            a[i * m + j] = z.re;
            a[i * m + n + j] = -z.im;
            a[(n + i) * m + j] = z.im;
            a[(n + i) * m + n + j] = z.re;
        }
    }
    a
}

/// Applies `f` to the spectrum of a Hermitian matrix (no validation).
fn hermitian_function(h: &ComplexMatrix, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let n = h.n;
    let m = 2 * n;
    let (w, v) = jacobi_symmetric(real_embedding(&h.hermitian_part()), m);
    let fw: Vec<f64> = w.iter().map(|&x| f(x)).collect();
    let mut out = ComplexMatrix::zeros(n);
    // the embedding of f(H) has top-left block Re and bottom-left block Im
    for i in 0..n {
        for j in 0..n {
            let (mut re, mut im) = (0.0, 0.0);
            for k in 0..m {
                re += v[i * m + k] * fw[k] * v[j * m + k];
                im += v[(n + i) * m + k] * fw[k] * v[j * m + k];
            }
            out.set(i, j, C64::new(re, im));
        }
    }
    out.hermitian_part()
}

fn hermitian_eigenvalues_unchecked(h: &ComplexMatrix) -> Vec<f64> {
    let (mut w, _) = jacobi_symmetric(real_embedding(&h.hermitian_part()), 2 * h.n);
    w.sort_by(f64::total_cmp);
    // every eigenvalue appears twice in the real embedding
    w.into_iter().step_by(2).collect()
}

/// Ascending eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(h: &ComplexMatrix) -> Result<Vec<f64>> {
    if !h.is_hermitian(1e-10 * h.norm_max().max(1.0)) {
        return Err(invalid("matrix is not Hermitian"));
    }
    Ok(hermitian_eigenvalues_unchecked(h))
}

/// Positive semidefinite square root of a Hermitian PSD matrix.
pub fn hermitian_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eigenvalues(m)?;
    let tol = 1e-10 * m.norm_max().max(1.0);
    if eig[0] < -tol {
        return Err(invalid(format!(
            "matrix is indefinite (smallest eigenvalue {})",
            eig[0]
        )));
    }
    Ok(hermitian_function(m, |x| x.max(0.0).sqrt()))
}

/// `(D_T, D_{T*}) = ((I − T*T)^{1/2}, (I − TT*)^{1/2})`.
pub fn defect_operators(t: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let norm = t.norm_op();
    if norm > 1.0 + 1e-10 {
        return Err(invalid(format!(
            "operator norm {norm} exceeds 1; defect operators undefined"
        )));
    }
    let n = t.dim();
    let id = ComplexMatrix::identity(n);
    let adj = t.adjoint();
    let dt = id.sub(&adj.mul(t)?)?.hermitian_part();
    let dts = id.sub(&t.mul(&adj)?)?.hermitian_part();
    Ok((
        hermitian_function(&dt, |x| x.max(0.0).sqrt()),
        hermitian_function(&dts, |x| x.max(0.0).sqrt()),
    ))
}

// ---------------------------------------------------------------------------
// Spectral radius
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralRadius {
    pub radius: f64,
    pub converged: bool,
    /// Number of squarings performed.
    pub squarings: u32,
}

/// Gelfand estimate `‖T^{2^k}‖₂^{1/2^k}`, iterated until the relative change
/// drops below 1e−6 or `k = 24`. Powers are renormalised every step and the
/// scale is carried as a logarithm, so nothing overflows.
pub fn spectral_radius_gelfand(t: &ComplexMatrix) -> SpectralRadius {
    let norm = t.norm_op();
    if norm == 0.0 {
        return SpectralRadius {
            radius: 0.0,
            converged: true,
            squarings: 0,
        };
    }
    let mut b = t.scale(C64::new(1.0 / norm, 0.0));
    let mut log_norm = norm.ln();
    let mut estimate = norm;
    for k in 1..=24u32 {
        let sq = b.mul(&b).expect("same dimension");
        let s = sq.norm_op();
        // T^{2^k} vanished (relative to working precision): nilpotent
        if s <= 1e-300 || s < f64::EPSILON * f64::EPSILON {
            return SpectralRadius {
                radius: 0.0,
                converged: true,
                squarings: k,
            };
        }
        log_norm = 2.0 * log_norm + s.ln();
        b = sq.scale(C64::new(1.0 / s, 0.0));
        let next = (log_norm / 2f64.powi(k as i32)).exp();
        if (next - estimate).abs() < 1e-6 * estimate {
            return SpectralRadius {
                radius: next,
                converged: true,
                squarings: k,
            };
        }
        estimate = next;
    }
    SpectralRadius {
        radius: estimate,
        converged: false,
        squarings: 24,
    }
}

fn require_spectral_radius_below_one(t: &ComplexMatrix) -> Result<()> {
    let r = spectral_radius_gelfand(t).radius;
    if r >= 1.0 {
        return Err(invalid(format!("spectral radius {r} is not below 1")));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Characteristic function and functional model
// ---------------------------------------------------------------------------

/// `Θ_T(z) = −T + D_{T*} (I − zT*)⁻¹ z D_T`.
pub fn characteristic_function(t: &ComplexMatrix, z: C64) -> Result<ComplexMatrix> {
    if !(z.norm() <= 1.0 + 1e-12) {
        return Err(invalid(format!("|z| must be at most 1, got {}", z.norm())));
    }
    require_spectral_radius_below_one(t)?;
    let (dt, dts) = defect_operators(t)?;
    let n = t.dim();
    let resolvent = ComplexMatrix::identity(n)
        .sub(&t.adjoint().scale(z))?
        .inverse()
        .map_err(|_| Error::Singular("I − zT* in the characteristic function"))?;
    let tail = dts.mul(&resolvent)?.mul(&dt)?.scale(z);
    tail.sub(t)
}

/// `−e^{iφ} Θ_T(z) D_T`.
pub fn functional_model_transform(t: &ComplexMatrix, phi: f64, z: C64) -> Result<ComplexMatrix> {
    if !(z.norm() < 1.0) {
        return Err(invalid(format!("|z| must be below 1, got {}", z.norm())));
    }
    let theta = characteristic_function(t, z)?;
    let (dt, _) = defect_operators(t)?;
    Ok(theta.mul(&dt)?.scale(-C64::from_polar(1.0, phi)))
}

/// `‖D_{(g·T)*} − |−e^{iφ}Θ_T(z)D_T|‖₂` with `g` built from `(φ, z)`.
///
/// Compares the model transform with the defect operator of the Möbius
/// image, reading `F` as `S ↦ D_{S*}`. The two do not agree in general; this
/// reports the gap rather than asserting it.
pub fn functional_model_discrepancy(t: &ComplexMatrix, phi: f64, z: C64) -> Result<f64> {
    let w = functional_model_transform(t, phi, z)?;
    let modulus = hermitian_function(&w.adjoint().mul(&w)?, |x| x.max(0.0).sqrt());
    let g = Su11Element::from_phi_z(phi, z)?;
    let image = crate::repr::mobius_on_operator(&g, t)?;
    let (_, d_star) = defect_operators(&image)?;
    Ok(d_star.sub(&modulus)?.norm_op())
}

// ---------------------------------------------------------------------------
// Numerical range and Berezin pairing
// ---------------------------------------------------------------------------

fn require_unitary(u: &ComplexMatrix, what: &str) -> Result<()> {
    if !u.is_unitary(1e-10) {
        return Err(invalid(format!("{what} is not unitary")));
    }
    Ok(())
}

/// `⟨Aρ(g)x, ρ(g)x⟩` for every supplied `ρ(g)`.
pub fn numerical_range_sample(
    a: &ComplexMatrix,
    x: &[C64],
    gs: &[ComplexMatrix],
) -> Result<Vec<C64>> {
    if x.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: x.len(),
        });
    }
    if (vec_norm(x) - 1.0).abs() > 1e-10 {
        return Err(invalid(format!(
            "x must be a unit vector, norm is {}",
            vec_norm(x)
        )));
    }
    gs.iter()
        .enumerate()
        .map(|(k, u)| {
            a.check_dim(u)?;
            require_unitary(u, &format!("rho(g_{k})"))?;
            let y = u.mul_vec(x)?;
            Ok(inner(&a.mul_vec(&y)?, &y))
        })
        .collect()
}

/// Largest eigenvalue of `Re(e^{−iθ}A)`: the support function of the
/// numerical range in direction `θ`.
pub fn numerical_range_support(a: &ComplexMatrix, theta: f64) -> f64 {
    let h = a.scale(C64::from_polar(1.0, -theta)).hermitian_part();
    *hermitian_eigenvalues_unchecked(&h)
        .last()
        .expect("non-empty")
}

/// `⟨Aρ₁(g₁)x, ρ₂(g₂)l⟩`, with `ρ₁`, `ρ₂` given as matrix lists indexed by
/// group element.
pub fn berezin_transform(
    a: &ComplexMatrix,
    rho1: &[ComplexMatrix],
    rho2: &[ComplexMatrix],
    x: &[C64],
    l: &[C64],
    g1: usize,
    g2: usize,
) -> Result<C64> {
    let r1 = rho1
        .get(g1)
        .ok_or_else(|| invalid(format!("g1 = {g1} out of range for rho1 ({})", rho1.len())))?;
    let r2 = rho2
        .get(g2)
        .ok_or_else(|| invalid(format!("g2 = {g2} out of range for rho2 ({})", rho2.len())))?;
    a.check_dim(r1)?;
    a.check_dim(r2)?;
    if l.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: l.len(),
        });
    }
    let u = a.mul_vec(&r1.mul_vec(x)?)?;
    let v = r2.mul_vec(l)?;
    Ok(inner(&u, &v))
}
