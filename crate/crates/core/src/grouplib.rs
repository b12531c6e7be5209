//! Exact group structures for the affine ("ax+b") group, SL(2,R), SU(1,1)
//! and the Euclidean motions SE(2), together with the sampled affine grid.
//!
//! Affine elements use the coordinates `(a, b)` with the law
//! `(a, b) * (a', b') = (aa', ab' + b)` and identity `(1, 0)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::C64;

// ---------------------------------------------------------------------------
// Affine group
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAffine")]
pub struct AffinePoint {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
struct RawAffine {
    a: f64,
    b: f64,
}

impl TryFrom<RawAffine> for AffinePoint {
    type Error = Error;
    fn try_from(r: RawAffine) -> Result<Self> {
        AffinePoint::new(r.a, r.b)
    }
}

impl AffinePoint {
    pub const IDENTITY: AffinePoint = AffinePoint { a: 1.0, b: 0.0 };

    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) || a <= 0.0 {
            return Err(invalid(format!(
                "affine point needs finite a > 0, got ({a}, {b})"
            )));
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn compose(&self, other: &AffinePoint) -> AffinePoint {
        AffinePoint {
            a: self.a * other.a,
            b: self.a * other.b + self.b,
        }
    }

    pub fn inverse(&self) -> AffinePoint {
        AffinePoint {
            a: 1.0 / self.a,
            b: -self.b / self.a,
        }
    }

    /// Distance in the natural coordinates.
    pub fn distance(&self, other: &AffinePoint) -> f64 {
        (self.a - other.a).abs().max((self.b - other.b).abs())
    }
}

pub fn affine_compose(g: &AffinePoint, h: &AffinePoint) -> AffinePoint {
    g.compose(h)
}

pub fn affine_inverse(g: &AffinePoint) -> AffinePoint {
    g.inverse()
}

/// Density `a⁻²` of the left Haar measure `a⁻² da db`.
pub fn affine_haar_weight(a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(invalid(format!("Haar weight needs a > 0, got {a}")));
    }
    Ok(1.0 / (a * a))
}

// ---------------------------------------------------------------------------
// SL(2, R)
// ---------------------------------------------------------------------------

const DET_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSl2")]
pub struct Sl2Element {
    m: [[f64; 2]; 2],
}

#[derive(Deserialize)]
struct RawSl2 {
    m: [[f64; 2]; 2],
}

impl TryFrom<RawSl2> for Sl2Element {
    type Error = Error;
    fn try_from(r: RawSl2) -> Result<Self> {
        Sl2Element::new(r.m[0][0], r.m[0][1], r.m[1][0], r.m[1][1])
    }
}

impl Sl2Element {
    pub const IDENTITY: Sl2Element = Sl2Element {
        m: [[1.0, 0.0], [0.0, 1.0]],
    };

    /// Matrix `(a b; c d)`; the determinant must be 1 up to `1e-9` and is
    /// then renormalized exactly.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let det = a * d - b * c;
        if ![a, b, c, d].iter().all(|v| v.is_finite()) || (det - 1.0).abs() > DET_TOL {
            return Err(invalid(format!("SL(2,R) element needs det = 1, got {det}")));
        }
        Ok(Self::renormalized([[a, b], [c, d]]))
    }

    /// The compact-subgroup element `h_t = (cos t, sin t; −sin t, cos t)`.
    pub fn rotation(t: f64) -> Self {
        let (s, c) = t.sin_cos();
        Self {
            m: [[c, s], [-s, c]],
        }
    }

    fn renormalized(m: [[f64; 2]; 2]) -> Self {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let k = 1.0 / det.sqrt();
        Self {
            m: [[m[0][0] * k, m[0][1] * k], [m[1][0] * k, m[1][1] * k]],
        }
    }

    pub fn entries(&self) -> (f64, f64, f64, f64) {
        (self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1])
    }

    pub fn det(&self) -> f64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn compose(&self, other: &Sl2Element) -> Sl2Element {
        let (p, q) = (&self.m, &other.m);
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = p[i][0] * q[0][j] + p[i][1] * q[1][j];
            }
        }
        Self::renormalized(r)
    }

    pub fn inverse(&self) -> Sl2Element {
        let (a, b, c, d) = self.entries();
        Self::renormalized([[d, -b], [-c, a]])
    }

    /// Möbius map `z ↦ (az + b)/(cz + d)`.
    pub fn mobius(&self, z: C64) -> C64 {
        let (a, b, c, d) = self.entries();
        (z * a + b) / (z * c + d)
    }

    pub fn distance(&self, other: &Sl2Element) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.m[i][j] - other.m[i][j]).abs());
            }
        }
        d
    }
}

pub fn sl2_compose(g: &Sl2Element, h: &Sl2Element) -> Sl2Element {
    g.compose(h)
}

pub fn sl2_inverse(g: &Sl2Element) -> Sl2Element {
    g.inverse()
}

// ---------------------------------------------------------------------------
// SU(1, 1)
// ---------------------------------------------------------------------------

/// Matrix `(α β; β̄ ᾱ)` with `|α|² − |β|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSu11")]
pub struct Su11Element {
    #[serde(with = "crate::serde_complex")]
    alpha: C64,
    #[serde(with = "crate::serde_complex")]
    beta: C64,
}

#[derive(Deserialize)]
struct RawSu11 {
    #[serde(with = "crate::serde_complex")]
    alpha: C64,
    #[serde(with = "crate::serde_complex")]
    beta: C64,
}

impl TryFrom<RawSu11> for Su11Element {
    type Error = Error;
    fn try_from(r: RawSu11) -> Result<Self> {
        Su11Element::new(r.alpha, r.beta)
    }
}

impl Su11Element {
    pub const IDENTITY: Su11Element = Su11Element {
        alpha: C64::new(1.0, 0.0),
        beta: C64::new(0.0, 0.0),
    };

    pub fn new(alpha: C64, beta: C64) -> Result<Self> {
        let q = alpha.norm_sqr() - beta.norm_sqr();
        if !(alpha.is_finite() && beta.is_finite()) || (q - 1.0).abs() > DET_TOL {
            return Err(invalid(format!(
                "SU(1,1) element needs |α|²−|β|² = 1, got {q}"
            )));
        }
        Ok(Self::normalized(alpha, beta))
    }

    fn normalized(alpha: C64, beta: C64) -> Self {
        let k = 1.0 / (alpha.norm_sqr() - beta.norm_sqr()).sqrt();
        Self {
            alpha: alpha * k,
            beta: beta * k,
        }
    }

    /// `diag(e^{iφ/2}, e^{−iφ/2}) · (1 −z; −z̄ 1)`, scaled by `1/√(1−|z|²)`.
    pub fn from_phi_z(phi: f64, z: C64) -> Result<Self> {
        if !(phi.is_finite() && z.is_finite()) || z.norm() >= 1.0 {
            return Err(invalid(format!(
                "from_phi_z needs |z| < 1, got |z| = {}",
                z.norm()
            )));
        }
        let rot = C64::from_polar(1.0, phi / 2.0);
        let k = 1.0 / (1.0 - z.norm_sqr()).sqrt();
        Ok(Self {
            alpha: rot * k,
            beta: -z * rot * k,
        })
    }

    pub fn alpha(&self) -> C64 {
        self.alpha
    }

    pub fn beta(&self) -> C64 {
        self.beta
    }

    /// `|α|² − |β|²`.
    pub fn invariant(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr()
    }

    pub fn compose(&self, other: &Su11Element) -> Su11Element {
        let alpha = self.alpha * other.alpha + self.beta * other.beta.conj();
        let beta = self.alpha * other.beta + self.beta * other.alpha.conj();
        Self::normalized(alpha, beta)
    }

    pub fn inverse(&self) -> Su11Element {
        Su11Element {
            alpha: self.alpha.conj(),
            beta: -self.beta,
        }
    }

    /// `z ↦ (αz + β)/(β̄z + ᾱ)`, an automorphism of the unit disk.
    pub fn mobius(&self, z: C64) -> C64 {
        (self.alpha * z + self.beta) / (self.beta.conj() * z + self.alpha.conj())
    }

    pub fn distance(&self, other: &Su11Element) -> f64 {
        (self.alpha - other.alpha)
            .norm()
            .max((self.beta - other.beta).norm())
    }
}

pub fn su11_from_phi_z(phi: f64, z: C64) -> Result<Su11Element> {
    Su11Element::from_phi_z(phi, z)
}

// ---------------------------------------------------------------------------
// SE(2)
// ---------------------------------------------------------------------------

/// Euclidean motion acting as rotation by `theta`, then translation by `t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "RawSe2")]
pub struct Se2Element {
    theta: f64,
    t: [f64; 2],
}

#[derive(Deserialize)]
struct RawSe2 {
    theta: f64,
    t: [f64; 2],
}

impl From<RawSe2> for Se2Element {
    fn from(r: RawSe2) -> Self {
        Se2Element::new(r.theta, r.t[0], r.t[1])
    }
}

/// Normalizes an angle to `(−π, π]`.
pub fn normalize_angle(theta: f64) -> f64 {
    let mut t = theta.rem_euclid(2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    }
    t
}

impl Se2Element {
    pub const IDENTITY: Se2Element = Se2Element {
        theta: 0.0,
        t: [0.0, 0.0],
    };

    pub fn new(theta: f64, tx: f64, ty: f64) -> Self {
        Self {
            theta: normalize_angle(theta),
            t: [tx, ty],
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn translation(&self) -> [f64; 2] {
        self.t
    }

    fn rotate(theta: f64, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = theta.sin_cos();
        [c * p[0] - s * p[1], s * p[0] + c * p[1]]
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let r = Self::rotate(self.theta, p);
        [r[0] + self.t[0], r[1] + self.t[1]]
    }

    /// `(g ∘ h)(p) = g(h(p))`.
    pub fn compose(&self, other: &Se2Element) -> Se2Element {
        let rt = Self::rotate(self.theta, other.t);
        Se2Element::new(
            self.theta + other.theta,
            rt[0] + self.t[0],
            rt[1] + self.t[1],
        )
    }

    pub fn inverse(&self) -> Se2Element {
        let r = Self::rotate(-self.theta, self.t);
        Se2Element::new(-self.theta, -r[0], -r[1])
    }

    pub fn distance(&self, other: &Se2Element) -> f64 {
        let dt = normalize_angle(self.theta - other.theta).abs();
        dt.max((self.t[0] - other.t[0]).abs())
            .max((self.t[1] - other.t[1]).abs())
    }
}

pub fn se2_apply(g: &Se2Element, p: [f64; 2]) -> [f64; 2] {
    g.apply(p)
}

// ---------------------------------------------------------------------------
// Affine grid
// ---------------------------------------------------------------------------

/// Log-spaced scales `a` times uniformly spaced translations `b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid")]
pub struct AffineGrid {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Deserialize)]
struct RawGrid {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<RawGrid> for AffineGrid {
    type Error = Error;
    fn try_from(r: RawGrid) -> Result<Self> {
        AffineGrid::from_values(r.a, r.b)
    }
}

impl AffineGrid {
    /// Validates externally supplied node values.
    pub fn from_values(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() < 2 || b.len() < 2 {
            return Err(invalid("affine grid needs at least two nodes per axis"));
        }
        if a.iter().any(|&v| !(v.is_finite() && v > 0.0)) || b.iter().any(|v| !v.is_finite()) {
            return Err(invalid("affine grid values must be finite with a > 0"));
        }
        let ratio = a[1] / a[0];
        let step = b[1] - b[0];
        if ratio <= 1.0 || step <= 0.0 {
            return Err(invalid("affine grid values must be strictly increasing"));
        }
        let log_ok = a
            .windows(2)
            .all(|w| (w[1] / w[0] / ratio - 1.0).abs() <= 1e-9);
        let lin_ok = b
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.max(1.0));
        if !log_ok || !lin_ok {
            return Err(invalid(
                "affine grid must be log-spaced in a and uniform in b",
            ));
        }
        Ok(Self { a, b })
    }

    pub fn a_values(&self) -> &[f64] {
        &self.a
    }

    pub fn b_values(&self) -> &[f64] {
        &self.b
    }

    pub fn n_a(&self) -> usize {
        self.a.len()
    }

    pub fn n_b(&self) -> usize {
        self.b.len()
    }

    pub fn len(&self) -> usize {
        self.a.len() * self.b.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn a_min(&self) -> f64 {
        self.a[0]
    }

    pub fn a_max(&self) -> f64 {
        self.a[self.a.len() - 1]
    }

    pub fn b_min(&self) -> f64 {
        self.b[0]
    }

    pub fn b_max(&self) -> f64 {
        self.b[self.b.len() - 1]
    }

    /// Spacing in `ln a`.
    pub fn log_step(&self) -> f64 {
        (self.a_max() / self.a_min()).ln() / (self.a.len() - 1) as f64
    }

    pub fn b_step(&self) -> f64 {
        (self.b_max() - self.b_min()) / (self.b.len() - 1) as f64
    }

    /// Row-major node index: rows are `a`, columns are `b`.
    pub fn index(&self, ia: usize, ib: usize) -> usize {
        ia * self.b.len() + ib
    }

    pub fn point(&self, ia: usize, ib: usize) -> AffinePoint {
        AffinePoint {
            a: self.a[ia],
            b: self.b[ib],
        }
    }

    /// Index of a node whose scale equals `a` up to `1e-9` relative.
    pub fn find_a(&self, a: f64) -> Option<usize> {
        self.a.iter().position(|&v| ((v - a) / a).abs() <= 1e-9)
    }

    pub fn find_b(&self, b: f64) -> Option<usize> {
        let t = (b - self.b_min()) / self.b_step();
        let k = t.round();
        if k < 0.0 || k as usize >= self.b.len() || (t - k).abs() > 1e-6 {
            None
        } else {
            Some(k as usize)
        }
    }

    /// Fractional `(row, column)` coordinates of `(a, b)`, or `None` when the
    /// point is outside the sampled rectangle.
    pub fn locate(&self, a: f64, b: f64) -> Option<(f64, f64)> {
        if !(a > 0.0) {
            return None;
        }
        let u = (a / self.a_min()).ln() / self.log_step();
        let v = (b - self.b_min()) / self.b_step();
        let (ua, vb) = ((self.a.len() - 1) as f64, (self.b.len() - 1) as f64);
        let eps = 1e-9;
        if u < -eps || u > ua + eps || v < -eps || v > vb + eps {
            return None;
        }
        Some((u.clamp(0.0, ua), v.clamp(0.0, vb)))
    }

    /// Grid with half the spacing on both axes; the old nodes are kept.
    pub fn refined(&self) -> AffineGrid {
        let na = 2 * self.a.len() - 1;
        let nb = 2 * self.b.len() - 1;
        make_affine_grid(
            self.a_min(),
            self.a_max(),
            na,
            self.b_min(),
            self.b_max(),
            nb,
        )
        .expect("refining a valid grid")
    }
}

/// Log-spaced `a` and uniform `b` with both endpoints included.
pub fn make_affine_grid(
    a_min: f64,
    a_max: f64,
    n_a: usize,
    b_min: f64,
    b_max: f64,
    n_b: usize,
) -> Result<AffineGrid> {
    if n_a < 2 || n_b < 2 {
        return Err(invalid(format!(
            "grid needs nA, nB >= 2, got ({n_a}, {n_b})"
        )));
    }
    if !(a_min.is_finite() && a_max.is_finite() && 0.0 < a_min && a_min < a_max) {
        return Err(invalid(format!(
            "grid needs 0 < aMin < aMax, got ({a_min}, {a_max})"
        )));
    }
    if !(b_min.is_finite() && b_max.is_finite() && b_min < b_max) {
        return Err(invalid(format!(
            "grid needs bMin < bMax, got ({b_min}, {b_max})"
        )));
    }
    let log_span = (a_max / a_min).ln();
    let a = (0..n_a)
        .map(|i| {
            if i == n_a - 1 {
                a_max
            } else {
                a_min * (log_span * i as f64 / (n_a - 1) as f64).exp()
            }
        })
        .collect();
    let step = (b_max - b_min) / (n_b - 1) as f64;
    let b = (0..n_b)
        .map(|j| {
            if j == n_b - 1 {
                b_max
            } else {
                b_min + step * j as f64
            }
        })
        .collect();
    Ok(AffineGrid { a, b })
}
