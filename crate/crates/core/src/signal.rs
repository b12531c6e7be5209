//! Sampled signals on the line and the plane.
//!
//! A [`SignalGrid`] stores samples `f(x0 + k·dx)`. Off-grid values come from
//! local cubic (four-point Lagrange) interpolation and are zero outside the
//! sampled window: signals are compactly supported by convention.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grouplib::AffineGrid;
use crate::C64;

/// JSON form: `{"x0": …, "dx": …, "values": [[re, im], …]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignal")]
pub struct SignalGrid {
    x0: f64,
    dx: f64,
    #[serde(with = "complex_list")]
    values: Vec<C64>,
}

#[derive(Deserialize)]
struct RawSignal {
    x0: f64,
    dx: f64,
    #[serde(with = "complex_list")]
    values: Vec<C64>,
}

impl TryFrom<RawSignal> for SignalGrid {
    type Error = Error;
    fn try_from(r: RawSignal) -> Result<Self> {
        SignalGrid::new(r.x0, r.dx, r.values)
    }
}

mod complex_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[C64], s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        pairs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<C64>, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(pairs.into_iter().map(|[re, im]| C64::new(re, im)).collect())
    }
}

/// Geometry header written next to CSV files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignalHeader {
    pub x0: f64,
    pub dx: f64,
    pub n: usize,
}

impl SignalGrid {
    pub fn new(x0: f64, dx: f64, values: Vec<C64>) -> Result<Self> {
        if !(x0.is_finite() && dx.is_finite() && dx > 0.0) {
            return Err(invalid(format!(
                "signal grid needs finite x0 and dx > 0, got ({x0}, {dx})"
            )));
        }
        if values.len() < 2 {
            return Err(invalid("signal grid needs at least two samples"));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite sample at index {k}")));
        }
        Ok(Self { x0, dx, values })
    }

    pub fn from_fn(x0: f64, dx: f64, n: usize, f: impl Fn(f64) -> C64) -> Result<Self> {
        let values = (0..n).map(|k| f(x0 + dx * k as f64)).collect();
        Self::new(x0, dx, values)
    }

    pub fn from_real_fn(x0: f64, dx: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_fn(x0, dx, n, |x| C64::new(f(x), 0.0))
    }

    /// All-zero signal on the same grid.
    pub fn zeros_like(&self) -> SignalGrid {
        SignalGrid {
            x0: self.x0,
            dx: self.dx,
            values: vec![C64::new(0.0, 0.0); self.values.len()],
        }
    }

    /// Replaces the samples, keeping the geometry.
    pub fn with_values(&self, values: Vec<C64>) -> Result<SignalGrid> {
        if values.len() != self.values.len() {
            return Err(Error::DimensionMismatch {
                expected: self.values.len(),
                got: values.len(),
            });
        }
        SignalGrid::new(self.x0, self.dx, values)
    }

    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn x_at(&self, k: usize) -> f64 {
        self.x0 + self.dx * k as f64
    }

    pub fn x_max(&self) -> f64 {
        self.x_at(self.values.len() - 1)
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |k| self.x_at(k))
    }

    pub fn header(&self) -> SignalHeader {
        SignalHeader {
            x0: self.x0,
            dx: self.dx,
            n: self.values.len(),
        }
    }

    pub fn scaled(&self, t: C64) -> SignalGrid {
        SignalGrid {
            x0: self.x0,
            dx: self.dx,
            values: self.values.iter().map(|v| v * t).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64, C64) -> C64) -> Result<SignalGrid> {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(k, &v)| f(self.x_at(k), v))
            .collect();
        SignalGrid::new(self.x0, self.dx, values)
    }

    /// `α·self + β·other` on identical grids.
    pub fn combine(&self, alpha: C64, other: &SignalGrid, beta: C64) -> Result<SignalGrid> {
        self.check_same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u * alpha + v * beta)
            .collect();
        SignalGrid::new(self.x0, self.dx, values)
    }

    pub fn check_same_grid(&self, other: &SignalGrid) -> Result<()> {
        if self.values.len() != other.values.len()
            || (self.x0 - other.x0).abs() > 1e-12 * self.dx
            || (self.dx - other.dx).abs() > 1e-12 * self.dx
        {
            return Err(Error::GridMismatch(format!(
                "({}, {}, {}) vs ({}, {}, {})",
                self.x0,
                self.dx,
                self.len(),
                other.x0,
                other.dx,
                other.len()
            )));
        }
        Ok(())
    }

    /// Largest sample modulus.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// First sample index of the four-point stencil around `t = (x−x0)/dx`.
    fn stencil_start(&self, t: f64) -> usize {
        let n = self.values.len();
        let k = (t.floor() as isize).clamp(0, n as isize - 2);
        (k - 1).clamp(0, (n as isize - 4).max(0)) as usize
    }

    /// Cubic interpolation; zero outside `[x0, x_max]`.
    pub fn interpolate_eval(&self, x: f64) -> C64 {
        let t = (x - self.x0) / self.dx;
        let n = self.values.len();
        if !(t >= -1e-12 && t <= (n - 1) as f64 + 1e-12) {
            return C64::new(0.0, 0.0);
        }
        // exactly on a node: return the sample untouched
        let r = t.round();
        if (t - r).abs() <= 1e-12 {
            return self.values[(r.max(0.0) as usize).min(n - 1)];
        }
        if n < 4 {
            let k = (t.floor() as usize).min(n - 2);
            let s = t - k as f64;
            return self.values[k] * (1.0 - s) + self.values[k + 1] * s;
        }
        let start = self.stencil_start(t);
        let w = lagrange4(t - start as f64);
        let v = &self.values[start..start + 4];
        v[0] * w[0] + v[1] * w[1] + v[2] * w[2] + v[3] * w[3]
    }

    /// Local cubic interpolant continued to a complex abscissa.
    pub fn interpolate_complex(&self, z: C64) -> C64 {
        let n = self.values.len();
        if n < 4 {
            return self.interpolate_eval(z.re);
        }
        let t = (z.re - self.x0) / self.dx;
        let start = self.stencil_start(t);
        let u = (z - self.x_at(start)) / self.dx;
        let w = [
            -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
            u * (u - 2.0) * (u - 3.0) / 2.0,
            -u * (u - 1.0) * (u - 3.0) / 2.0,
            u * (u - 1.0) * (u - 2.0) / 6.0,
        ];
        let v = &self.values[start..start + 4];
        v[0] * w[0] + v[1] * w[1] + v[2] * w[2] + v[3] * w[3]
    }

    /// Composite Simpson rule; an odd interval count closes with one
    /// trapezoid panel. Summation runs left to right.
    pub fn quadrature_integral(&self) -> C64 {
        simpson(&self.values, self.dx)
    }

    pub fn trapezoid_integral(&self) -> C64 {
        let n = self.values.len();
        let mut s = (self.values[0] + self.values[n - 1]) * 0.5;
        for v in &self.values[1..n - 1] {
            s += v;
        }
        s * self.dx
    }

    /// `(1/2πi) ∫ f(t)/(t − z) dt` for `Im z ≠ 0`.
    ///
    /// Uses the trapezoid rule, which converges geometrically for the
    /// analytic kernel. When `|Im z|` is within a few steps of the real
    /// axis the lattice residue of the pole, `f(z)·(−π cot(π(z−x0)/dx) ∓ iπ)`,
    /// is subtracted with `f(z)` taken from the local cubic interpolant.
    pub fn cauchy_integral(&self, z: C64) -> Result<C64> {
        if !(z.is_finite() && z.im != 0.0) {
            return Err(Error::PoleOnContour(z.im));
        }
        let n = self.values.len();
        let mut s = C64::new(0.0, 0.0);
        for (k, v) in self.values.iter().enumerate() {
            let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            s += v * w / (self.x_at(k) - z);
        }
        s *= self.dx;
        s -= self.pole_lattice_error(z);
        Ok(s / C64::new(0.0, 2.0 * PI))
    }

    /// Cauchy integral along the horizontal line `Im z = im` at each `Re z`
    /// in `bs` (ascending).
    ///
    /// When `bs` sits on the sample lattice with an integer stride the whole
    /// row is one discrete convolution, evaluated by FFT; otherwise each
    /// point is summed directly. Both paths apply the same quadrature.
    pub fn cauchy_integral_row(&self, im: f64, bs: &[f64]) -> Result<Vec<C64>> {
        if !(im.is_finite() && im != 0.0) {
            return Err(Error::PoleOnContour(im));
        }
        match self.lattice_alignment(bs) {
            Some((j0, stride)) if bs.len() >= 32 => Ok(self.cauchy_row_fft(im, bs, j0, stride)),
            _ => bs
                .iter()
                .map(|&b| self.cauchy_integral(C64::new(b, im)))
                .collect(),
        }
    }

    /// `(j0, m)` with `bs[i] = x0 + (j0 + m·i)·dx`, if such integers exist.
    fn lattice_alignment(&self, bs: &[f64]) -> Option<(i64, i64)> {
        let first = *bs.first()?;
        let t0 = (first - self.x0) / self.dx;
        let j0 = t0.round();
        if (t0 - j0).abs() > 1e-9 {
            return None;
        }
        let stride = if bs.len() > 1 {
            let m = (bs[1] - bs[0]) / self.dx;
            if (m - m.round()).abs() > 1e-9 || m.round() < 1.0 {
                return None;
            }
            m.round() as i64
        } else {
            1
        };
        let last = (bs.len() - 1) as f64;
        let tl = (bs[bs.len() - 1] - self.x0) / self.dx;
        if (tl - (j0 + stride as f64 * last)).abs() > 1e-7 {
            return None;
        }
        Some((j0 as i64, stride))
    }

    fn cauchy_row_fft(&self, im: f64, bs: &[f64], j0: i64, stride: i64) -> Vec<C64> {
        LatticeRowPlan::new(self, bs.len(), j0, stride).cauchy_row(im, bs)
    }

    /// Reusable FFT set-up for many rows over the same `bs`; `None` when
    /// `bs` is off the sample lattice or too short to benefit.
    pub fn row_plan(&self, bs: &[f64]) -> Option<LatticeRowPlan<'_>> {
        match self.lattice_alignment(bs) {
            Some((j0, stride)) if bs.len() >= 32 => {
                Some(LatticeRowPlan::new(self, bs.len(), j0, stride))
            }
            _ => None,
        }
    }

    /// Trapezoid error contributed by the pole of `f(t)/(t − z)`.
    pub(crate) fn pole_lattice_error(&self, z: C64) -> C64 {
        if z.im.abs() > 6.0 * self.dx || z.re < self.x0 || z.re > self.x_max() {
            return C64::new(0.0, 0.0);
        }
        let w = (z - self.x0) / self.dx;
        let cot = (w * PI).cos() / (w * PI).sin();
        let side = C64::new(0.0, PI * z.im.signum());
        self.interpolate_complex(z) * (-cot * PI - side)
    }

    /// `(∫ |f|^p dx)^{1/p}`, or the largest sample modulus for `p = ∞`.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        if p.is_infinite() {
            return Ok(self.sup_norm());
        }
        let powered: Vec<C64> = self
            .values
            .iter()
            .map(|v| C64::new(v.norm().powf(p), 0.0))
            .collect();
        Ok(simpson(&powered, self.dx).re.max(0.0).powf(1.0 / p))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("x,re,im\n");
        for (k, v) in self.values.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", self.x_at(k), v.re, v.im);
        }
        crate::cli::write_atomic(path, s.as_bytes())
    }

    pub fn read_csv(path: &Path) -> Result<SignalGrid> {
        let text = std::fs::read_to_string(path)?;
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('x') {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            let parse = |i: usize| -> Result<f64> {
                cols.get(i)
                    .and_then(|c| c.trim().parse::<f64>().ok())
                    .ok_or_else(|| {
                        invalid(format!(
                            "{}:{}: bad column {i}",
                            path.display(),
                            line_no + 1
                        ))
                    })
            };
            xs.push(parse(0)?);
            let im = if cols.len() > 2 { parse(2)? } else { 0.0 };
            values.push(C64::new(parse(1)?, im));
        }
        if xs.len() < 2 {
            return Err(invalid(format!(
                "{}: fewer than two samples",
                path.display()
            )));
        }
        let dx = (xs[xs.len() - 1] - xs[0]) / (xs.len() - 1) as f64;
        for (k, x) in xs.iter().enumerate() {
            if (x - (xs[0] + dx * k as f64)).abs() > 1e-9 * dx.max(1.0) {
                return Err(invalid(format!(
                    "{}: samples are not uniformly spaced",
                    path.display()
                )));
            }
        }
        SignalGrid::new(xs[0], dx, values)
    }
}

/// Correlations `Σ_k v_k h(j − k)` of the trapezoid-weighted samples with a
/// lattice kernel, at the lattice indices `j` of one row of `b` values.
///
/// The padded signal spectrum and FFT plans are computed once per row set.
/// Only outputs free of wrap-around are read, so the transform length only
/// has to cover the kernel support.
pub struct LatticeRowPlan<'a> {
    f: &'a SignalGrid,
    j0: i64,
    stride: i64,
    len: usize,
    size: usize,
    spectrum: Vec<C64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl<'a> LatticeRowPlan<'a> {
    fn new(f: &'a SignalGrid, len: usize, j0: i64, stride: i64) -> Self {
        let n = f.values.len();
        let span = stride * (len as i64 - 1) + 1;
        let klen = (n as i64 - 1 + span) as usize;
        let size = klen.max(2).next_power_of_two();
        let fwd = fft_plan(size, Direction::Forward);
        let inv = fft_plan(size, Direction::Inverse);
        let mut spectrum = vec![C64::new(0.0, 0.0); size];
        for (k, (slot, &v)) in spectrum.iter_mut().zip(&f.values).enumerate() {
            *slot = if k == 0 || k == n - 1 { v * 0.5 } else { v };
        }
        fwd.process(&mut spectrum);
        Self {
            f,
            j0,
            stride,
            len,
            size,
            spectrum,
            fwd,
            inv,
        }
    }

    /// `Σ_k w_k v_k h(j_i − k)` for each row node `i`, with `w_k` the
    /// trapezoid weights (without `dx`).
    pub fn correlate(&self, h: impl Fn(i64) -> C64) -> Vec<C64> {
        let n = self.f.values.len() as i64;
        let span = self.stride * (self.len as i64 - 1) + 1;
        let klen = (n - 1 + span) as usize;
        let mut q = vec![C64::new(0.0, 0.0); self.size];
        for (s, slot) in q.iter_mut().enumerate().take(klen) {
            // s = j − k − j0 + n − 1
            *slot = h(s as i64 + self.j0 - (n - 1));
        }
        self.fwd.process(&mut q);
        q.iter_mut().zip(&self.spectrum).for_each(|(x, y)| *x *= y);
        self.inv.process(&mut q);
        let scale = 1.0 / self.size as f64;
        (0..self.len)
            .map(|i| q[(self.stride * i as i64 + n - 1) as usize] * scale)
            .collect()
    }

    /// [`SignalGrid::cauchy_integral_row`] for the `bs` the plan was built from.
    pub fn cauchy_row(&self, im: f64, bs: &[f64]) -> Vec<C64> {
        let f = self.f;
        let dx = f.dx;
        let sums = self.correlate(|e| C64::new(1.0, 0.0) / C64::new(-(e as f64) * dx, -im));
        let denom = C64::new(0.0, 2.0 * PI);
        sums.iter()
            .zip(bs)
            .map(|(&g, &b)| (g * dx - f.pole_lattice_error(C64::new(b, im))) / denom)
            .collect()
    }
}

fn lagrange4(u: f64) -> [f64; 4] {
    [
        -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
        u * (u - 2.0) * (u - 3.0) / 2.0,
        -u * (u - 1.0) * (u - 3.0) / 2.0,
        u * (u - 1.0) * (u - 2.0) / 6.0,
    ]
}

pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!(
            "exponent p must be >= 1 or infinite, got {p}"
        )));
    }
    Ok(())
}

/// Composite Simpson over uniformly spaced samples.
pub fn simpson(values: &[C64], h: f64) -> C64 {
    let n = values.len();
    match n {
        0 | 1 => return C64::new(0.0, 0.0),
        2 => return (values[0] + values[1]) * (0.5 * h),
        _ => {}
    }
    let intervals = n - 1;
    let even = intervals - intervals % 2;
    let mut s = C64::new(0.0, 0.0);
    let mut k = 0;
    while k < even {
        s += (values[k] + values[k + 1] * 4.0 + values[k + 2]) * (h / 3.0);
        k += 2;
    }
    if even < intervals {
        s += (values[n - 2] + values[n - 1]) * (0.5 * h);
    }
    s
}

pub fn simpson_real(values: &[f64], h: f64) -> f64 {
    let c: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
    simpson(&c, h).re
}

// ---------------------------------------------------------------------------
// Windowed integrals of |f|
// ---------------------------------------------------------------------------

/// Cumulative integral of the piecewise-linear interpolant of `|f|`.
///
/// Answers `∫_lo^hi |f(x)| dx` in O(1); the integrand is zero outside the
/// sampled window.
#[derive(Clone, Debug)]
pub struct AbsCumulative {
    x0: f64,
    dx: f64,
    abs: Vec<f64>,
    cum: Vec<f64>,
}

impl AbsCumulative {
    pub fn new(f: &SignalGrid) -> Self {
        let abs: Vec<f64> = f.values.iter().map(|v| v.norm()).collect();
        let mut cum = Vec::with_capacity(abs.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in abs.windows(2) {
            acc += 0.5 * (w[0] + w[1]) * f.dx;
            cum.push(acc);
        }
        Self {
            x0: f.x0,
            dx: f.dx,
            abs,
            cum,
        }
    }

    fn primitive(&self, x: f64) -> f64 {
        let n = self.abs.len();
        let t = (x - self.x0) / self.dx;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= (n - 1) as f64 {
            return self.cum[n - 1];
        }
        let k = (t.floor() as usize).min(n - 2);
        let s = t - k as f64;
        let (u, v) = (self.abs[k], self.abs[k + 1]);
        self.cum[k] + self.dx * (u * s + 0.5 * (v - u) * s * s)
    }

    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.primitive(hi) - self.primitive(lo)
    }
}

// ---------------------------------------------------------------------------
// Discrete Fourier transform
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Inverse,
}

/// Unitary DFT of a signal, with centred angular frequencies
/// `λ_k = 2πk/(n·dx)`, `k ∈ (−n/2, n/2]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    x0: f64,
    dx: f64,
    values: Vec<C64>,
}

thread_local! {
    // the planner caches plans per size
    static PLANNER: std::cell::RefCell<FftPlanner<f64>> = std::cell::RefCell::new(FftPlanner::new());
}

fn fft_plan(n: usize, dir: Direction) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut planner = p.borrow_mut();
        match dir {
            Direction::Forward => planner.plan_fft_forward(n),
            Direction::Inverse => planner.plan_fft_inverse(n),
        }
    })
}

fn unitary_fft(values: &[C64], dir: Direction) -> Result<Vec<C64>> {
    let n = values.len();
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    let mut buf = values.to_vec();
    fft_plan(n, dir).process(&mut buf);
    let k = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= k);
    Ok(buf)
}

fn natural_to_centered<T: Copy>(v: &[T]) -> Vec<T> {
    let n = v.len();
    // centred index m holds k = m − n/2 + 1; natural index is k mod n
    (0..n).map(|m| v[(m + n / 2 + 1) % n]).collect()
}

fn centered_to_natural<T: Copy>(v: &[T]) -> Vec<T> {
    let n = v.len();
    (0..n).map(|j| v[(j + n - n / 2 - 1) % n]).collect()
}

impl Spectrum {
    pub fn forward(f: &SignalGrid) -> Result<Spectrum> {
        let out = unitary_fft(&f.values, Direction::Forward)?;
        Ok(Spectrum {
            x0: f.x0,
            dx: f.dx,
            values: natural_to_centered(&out),
        })
    }

    pub fn inverse(&self) -> SignalGrid {
        let natural = centered_to_natural(&self.values);
        let out =
            unitary_fft(&natural, Direction::Inverse).expect("length checked on construction");
        SignalGrid {
            x0: self.x0,
            dx: self.dx,
            values: out,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn d_lambda(&self) -> f64 {
        2.0 * PI / (self.values.len() as f64 * self.dx)
    }

    /// Angular frequency of centred bin `m`.
    pub fn lambda(&self, m: usize) -> f64 {
        let n = self.values.len() as isize;
        (m as isize - n / 2 + 1) as f64 * self.d_lambda()
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Multiplies every bin by `g(λ)`.
    pub fn multiply(&mut self, g: impl Fn(f64) -> C64) {
        for m in 0..self.values.len() {
            let l = self.lambda(m);
            self.values[m] *= g(l);
        }
    }
}

/// Unitary DFT on the sample values.
///
/// `Forward` returns the spectrum as a grid over angular frequency
/// (`x0 = λ_min`, `dx = Δλ`). `Inverse` reads its input the same way and
/// returns samples on a grid starting at 0 with step `2π/(n·Δλ)`.
pub fn dft(f: &SignalGrid, direction: Direction) -> Result<SignalGrid> {
    let n = f.len();
    match direction {
        Direction::Forward => {
            let s = Spectrum::forward(f)?;
            let dl = s.d_lambda();
            SignalGrid::new(s.lambda(0), dl, s.values)
        }
        Direction::Inverse => {
            if !n.is_power_of_two() {
                return Err(Error::NotPowerOfTwo(n));
            }
            let natural = centered_to_natural(&f.values);
            let out = unitary_fft(&natural, Direction::Inverse)?;
            SignalGrid::new(0.0, 2.0 * PI / (n as f64 * f.dx), out)
        }
    }
}

/// Applies the Fourier multiplier `g(λ)` and transforms back.
pub fn spectral_multiply(f: &SignalGrid, g: impl Fn(f64) -> C64) -> Result<SignalGrid> {
    let mut s = Spectrum::forward(f)?;
    s.multiply(g);
    Ok(s.inverse())
}

/// Spectral derivative `f′` (multiplier `iλ`); the Nyquist bin is zeroed.
pub fn spectral_derivative(f: &SignalGrid) -> Result<SignalGrid> {
    let nyquist = PI / f.dx;
    spectral_multiply(f, |l| {
        if (l - nyquist).abs() < 1e-9 * nyquist {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, l)
        }
    })
}

// ---------------------------------------------------------------------------
// Plane and half-plane fields
// ---------------------------------------------------------------------------

/// Uniform 1-D axis `start + k·step`, `k < n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(start: f64, step: f64, n: usize) -> Result<Self> {
        if !(start.is_finite() && step.is_finite() && step > 0.0) || n < 2 {
            return Err(invalid(format!(
                "axis needs step > 0 and n >= 2, got ({start}, {step}, {n})"
            )));
        }
        Ok(Self { start, step, n })
    }

    /// `n` points spanning `[lo, hi]` inclusive.
    pub fn span(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(hi > lo) {
            return Err(invalid(format!(
                "axis span needs lo < hi and n >= 2, got ({lo}, {hi}, {n})"
            )));
        }
        Self::new(lo, (hi - lo) / (n - 1) as f64, n)
    }

    pub fn at(&self, k: usize) -> f64 {
        self.start + self.step * k as f64
    }

    pub fn end(&self) -> f64 {
        self.at(self.n - 1)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start - 1e-12 * self.step && x <= self.end() + 1e-12 * self.step
    }
}

/// Samples `f(x, y)` on a rectangle; row-major in `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneField {
    x: Axis,
    y: Axis,
    values: Vec<C64>,
}

impl PlaneField {
    pub fn new(x: Axis, y: Axis, values: Vec<C64>) -> Result<Self> {
        if values.len() != x.n * y.n {
            return Err(Error::DimensionMismatch {
                expected: x.n * y.n,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("plane field has non-finite samples"));
        }
        Ok(Self { x, y, values })
    }

    pub fn from_fn(x: Axis, y: Axis, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let mut values = Vec::with_capacity(x.n * y.n);
        for j in 0..y.n {
            for i in 0..x.n {
                values.push(f(x.at(i), y.at(j)));
            }
        }
        Self::new(x, y, values)
    }

    pub fn x_axis(&self) -> Axis {
        self.x
    }

    pub fn y_axis(&self) -> Axis {
        self.y
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.values[j * self.x.n + i]
    }

    /// Bilinear interpolation; zero outside the sampled rectangle.
    pub fn eval(&self, x: f64, y: f64) -> C64 {
        let u = (x - self.x.start) / self.x.step;
        let v = (y - self.y.start) / self.y.step;
        let (nx, ny) = ((self.x.n - 1) as f64, (self.y.n - 1) as f64);
        if !(u >= 0.0 && u <= nx && v >= 0.0 && v <= ny) {
            return C64::new(0.0, 0.0);
        }
        let i = (u.floor() as usize).min(self.x.n - 2);
        let j = (v.floor() as usize).min(self.y.n - 2);
        let (s, t) = (u - i as f64, v - j as f64);
        self.get(i, j) * ((1.0 - s) * (1.0 - t))
            + self.get(i + 1, j) * (s * (1.0 - t))
            + self.get(i, j + 1) * ((1.0 - s) * t)
            + self.get(i + 1, j + 1) * (s * t)
    }

    /// Tensor-product cubic (four-point Lagrange) interpolation; zero
    /// outside the sampled rectangle.
    pub fn eval_cubic(&self, x: f64, y: f64) -> C64 {
        let u = (x - self.x.start) / self.x.step;
        let v = (y - self.y.start) / self.y.step;
        let (nx, ny) = ((self.x.n - 1) as f64, (self.y.n - 1) as f64);
        if !(u >= 0.0 && u <= nx && v >= 0.0 && v <= ny) {
            return C64::new(0.0, 0.0);
        }
        if self.x.n < 4 || self.y.n < 4 {
            return self.eval(x, y);
        }
        let start = |t: f64, n: usize| {
            let k = (t.floor() as isize).clamp(0, n as isize - 2);
            (k - 1).clamp(0, n as isize - 4) as usize
        };
        let (i0, j0) = (start(u, self.x.n), start(v, self.y.n));
        let (wu, wv) = (lagrange4(u - i0 as f64), lagrange4(v - j0 as f64));
        let mut acc = C64::new(0.0, 0.0);
        for (dj, wj) in wv.iter().enumerate() {
            let mut row = C64::new(0.0, 0.0);
            for (di, wi) in wu.iter().enumerate() {
                row += self.get(i0 + di, j0 + dj) * wi;
            }
            acc += row * wj;
        }
        acc
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("x,y,re,im\n");
        for j in 0..self.y.n {
            for i in 0..self.x.n {
                let v = self.get(i, j);
                let _ = writeln!(s, "{},{},{},{}", self.x.at(i), self.y.at(j), v.re, v.im);
            }
        }
        crate::cli::write_atomic(path, s.as_bytes())
    }
}

/// Samples `F(b + i·a)` on an affine grid (rows `a`, columns `b`).
#[derive(Clone, Debug, PartialEq)]
pub struct HalfPlaneField {
    grid: AffineGrid,
    values: Vec<C64>,
}

impl HalfPlaneField {
    pub fn new(grid: AffineGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("half-plane field has non-finite samples"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: AffineGrid, f: impl Fn(C64) -> C64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for &a in grid.a_values() {
            for &b in grid.b_values() {
                values.push(f(C64::new(b, a)));
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &AffineGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn get(&self, ia: usize, ib: usize) -> C64 {
        self.values[self.grid.index(ia, ib)]
    }

    /// Bilinear in `(ln a, b)`; zero outside the sampled window.
    pub fn eval(&self, z: C64) -> C64 {
        match self.grid.locate(z.im, z.re) {
            Some((u, v)) => bilinear(&self.values, self.grid.n_a(), self.grid.n_b(), u, v),
            None => C64::new(0.0, 0.0),
        }
    }
}

/// Bilinear interpolation on a row-major `rows × cols` array at fractional
/// coordinates `(u, v)` already clamped into range.
pub(crate) fn bilinear(values: &[C64], rows: usize, cols: usize, u: f64, v: f64) -> C64 {
    let i = (u.floor() as usize).min(rows - 2);
    let j = (v.floor() as usize).min(cols - 2);
    let (s, t) = (u - i as f64, v - j as f64);
    let at = |r: usize, c: usize| values[r * cols + c];
    at(i, j) * ((1.0 - s) * (1.0 - t))
        + at(i + 1, j) * (s * (1.0 - t))
        + at(i, j + 1) * ((1.0 - s) * t)
        + at(i + 1, j + 1) * (s * t)
}
