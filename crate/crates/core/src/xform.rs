//! The covariant transform `[W f](a, b) = F(ρ_p(a,b) f)` over affine grids
//! and the analyzers built on it.
//!
//! Fields are indexed by the pair that enters `ρ_p` directly (the
//! coordinates of `g⁻¹`). With that bookkeeping the group law gives
//! `W(ρ_p(c0) f)(c) = W f(c0 ∗ c)`, which every shift verifier below uses.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fiducial::{FiducialSpec, PreparedFiducial};
use crate::grouplib::{AffineGrid, AffinePoint, Sl2Element};
use crate::repr::{affine_prefactor, affine_rep_apply, sl2_line_rep_apply, ReprSpec};
use crate::signal::{bilinear, simpson, spectral_derivative, Axis, PlaneField, SignalGrid};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// Sampled transform: `u_dim` complex components per grid node, node-major,
/// rows in `a`. Nodes whose value could not be produced (shifted reads off
/// the grid) are marked missing.
#[derive(Clone, Debug, PartialEq)]
pub struct TransformField {
    grid: AffineGrid,
    p: f64,
    u_dim: usize,
    fiducial: String,
    values: Vec<C64>,
    present: Vec<bool>,
}

/// Geometry and provenance written next to field CSV files.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FieldHeader {
    pub grid: AffineGrid,
    #[serde(with = "crate::repr::exponent")]
    pub p: f64,
    pub u_dim: usize,
    pub fiducial: String,
    /// Pairs are formula coordinates: the node `(a, b)` holds `F(ρ_p(a,b) f)`.
    pub coordinates: String,
}

impl TransformField {
    pub fn new(
        grid: AffineGrid,
        p: f64,
        u_dim: usize,
        fiducial: &str,
        values: Vec<C64>,
    ) -> Result<Self> {
        if u_dim == 0 || values.len() != grid.len() * u_dim {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * u_dim,
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("transform field has non-finite values"));
        }
        let present = vec![true; grid.len()];
        Ok(Self {
            grid,
            p,
            u_dim,
            fiducial: fiducial.to_string(),
            values,
            present,
        })
    }

    /// Scalar field from a closure of `(a, b)`; handy for pairings.
    pub fn from_fn(grid: AffineGrid, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let mut values = Vec::with_capacity(grid.len());
        for &a in grid.a_values() {
            for &b in grid.b_values() {
                values.push(f(a, b));
            }
        }
        Self::new(grid, 2.0, 1, "custom", values)
    }

    pub fn grid(&self) -> &AffineGrid {
        &self.grid
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn u_dim(&self) -> usize {
        self.u_dim
    }

    pub fn fiducial(&self) -> &str {
        &self.fiducial
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn is_present(&self, ia: usize, ib: usize) -> bool {
        self.present[self.grid.index(ia, ib)]
    }

    pub fn component(&self, ia: usize, ib: usize, c: usize) -> C64 {
        self.values[self.grid.index(ia, ib) * self.u_dim + c]
    }

    pub fn get(&self, ia: usize, ib: usize) -> C64 {
        self.component(ia, ib, 0)
    }

    /// Component `c` at an arbitrary `(a, b)`, bilinear in `(ln a, b)`;
    /// `None` off the grid or next to a missing node.
    pub fn eval(&self, a: f64, b: f64, c: usize) -> Option<C64> {
        let (u, v) = self.grid.locate(a, b)?;
        let (u, v) = (snap(u), snap(v));
        let (na, nb) = (self.grid.n_a(), self.grid.n_b());
        let i = (u.floor() as usize).min(na - 2);
        let j = (v.floor() as usize).min(nb - 2);
        for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            if !self.is_present(i + di, j + dj) {
                return None;
            }
        }
        Some(bilinear(&self.plane(c), na, nb, u, v))
    }

    /// One component as a dense row-major array.
    pub fn plane(&self, c: usize) -> Vec<C64> {
        self.values
            .iter()
            .skip(c)
            .step_by(self.u_dim)
            .copied()
            .collect()
    }

    pub fn header(&self) -> FieldHeader {
        FieldHeader {
            grid: self.grid.clone(),
            p: self.p,
            u_dim: self.u_dim,
            fiducial: self.fiducial.clone(),
            coordinates: "formula".into(),
        }
    }

    /// CSV with columns `a,b,re,im[,re1,im1]`; missing nodes are skipped.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("a,b");
        for c in 0..self.u_dim {
            if c == 0 {
                s.push_str(",re,im");
            } else {
                let _ = write!(s, ",re{c},im{c}");
            }
        }
        s.push('\n');
        for (ia, &a) in self.grid.a_values().iter().enumerate() {
            for (ib, &b) in self.grid.b_values().iter().enumerate() {
                if !self.is_present(ia, ib) {
                    continue;
                }
                let _ = write!(s, "{a},{b}");
                for c in 0..self.u_dim {
                    let v = self.component(ia, ib, c);
                    let _ = write!(s, ",{},{}", v.re, v.im);
                }
                s.push('\n');
            }
        }
        crate::cli::write_atomic(path, s.as_bytes())
    }
}

// ---------------------------------------------------------------------------
// The transform
// ---------------------------------------------------------------------------

/// `[W f](a, b) = F(f_{a,b})`, `f_{a,b}(x) = a^{1/p} f(ax + b)`, on every grid
/// node. Rows are computed in parallel and assembled in index order.
pub fn covariant_transform(
    rho: &ReprSpec,
    fiducial: &FiducialSpec,
    f: &SignalGrid,
    grid: &AffineGrid,
) -> Result<TransformField> {
    let p = rho.affine_exponent()?;
    let prep = PreparedFiducial::new(fiducial, f, p)?;
    let plan = prep.row_plan(grid.b_values());
    let rows: Vec<Vec<C64>> = grid
        .a_values()
        .par_iter()
        .map(|&a| prep.eval_row_with(plan.as_ref(), a, grid.b_values()))
        .collect::<Result<_>>()?;
    TransformField::new(
        grid.clone(),
        p,
        prep.u_dim(),
        fiducial.name(),
        rows.concat(),
    )
}

/// The transform at a single pair.
pub fn covariant_transform_at(
    rho: &ReprSpec,
    fiducial: &FiducialSpec,
    f: &SignalGrid,
    pair: AffinePoint,
) -> Result<Vec<C64>> {
    let p = rho.affine_exponent()?;
    let prep = PreparedFiducial::new(fiducial, f, p)?;
    let v = prep.eval(pair.a(), pair.b())?;
    Ok(v[..prep.u_dim()].to_vec())
}

/// `Λ` in formula coordinates: the value at `c` becomes the old value at
/// `c0 ∗ c`. Reads off the grid are marked missing.
pub fn left_shift_field(c0: AffinePoint, field: &TransformField) -> TransformField {
    remap_field(field, |a, b| (c0.a() * a, c0.a() * b + c0.b()))
}

fn remap_field(
    field: &TransformField,
    source: impl Fn(f64, f64) -> (f64, f64) + Sync,
) -> TransformField {
    let g = &field.grid;
    let d = field.u_dim;
    let planes: Vec<Vec<C64>> = (0..d).map(|c| field.plane(c)).collect();
    let mut values = vec![ZERO; field.values.len()];
    let mut present = vec![false; g.len()];
    for (ia, &a) in g.a_values().iter().enumerate() {
        for (ib, &b) in g.b_values().iter().enumerate() {
            let idx = g.index(ia, ib);
            let (sa, sb) = source(a, b);
            let Some((u, v)) = g.locate(sa, sb) else {
                continue;
            };
            let (u, v) = (snap(u), snap(v));
            let i = (u.floor() as usize).min(g.n_a() - 2);
            let j = (v.floor() as usize).min(g.n_b() - 2);
            let ok = [(0, 0), (1, 0), (0, 1), (1, 1)]
                .iter()
                .all(|&(di, dj)| field.is_present(i + di, j + dj));
            if !ok {
                continue;
            }
            present[idx] = true;
            for c in 0..d {
                values[idx * d + c] = bilinear(&planes[c], g.n_a(), g.n_b(), u, v);
            }
        }
    }
    TransformField {
        grid: g.clone(),
        p: field.p,
        u_dim: d,
        fiducial: field.fiducial.clone(),
        values,
        present,
    }
}

/// Fractional grid coordinates within rounding of a node read the node.
fn snap(u: f64) -> f64 {
    let r = u.round();
    if (u - r).abs() <= 1e-9 {
        r
    } else {
        u
    }
}

/// Outcome of a residual check over the interior of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub residual: f64,
    pub interior_nodes: usize,
    pub grid: AffineGrid,
}

/// Largest `|lhs − rhs|` over nodes present in both fields, excluding the
/// boundary ring.
pub fn interior_residual(lhs: &TransformField, rhs: &TransformField) -> Result<Residual> {
    let g = &lhs.grid;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for ia in 1..g.n_a() - 1 {
        for ib in 1..g.n_b() - 1 {
            if !(lhs.is_present(ia, ib) && rhs.is_present(ia, ib)) {
                continue;
            }
            count += 1;
            for c in 0..lhs.u_dim {
                worst = worst.max((lhs.component(ia, ib, c) - rhs.component(ia, ib, c)).norm());
            }
        }
    }
    if count == 0 {
        return Err(Error::EmptyInterior(
            "no interior node has both values".into(),
        ));
    }
    Ok(Residual {
        residual: worst,
        interior_nodes: count,
        grid: g.clone(),
    })
}

/// `max |W(ρ_p(c0) f) − Λ W f|` over the interior, where `ρ_p(c0) f` is an
/// explicitly resampled signal.
pub fn intertwining_residual(
    rho: &ReprSpec,
    fiducial: &FiducialSpec,
    f: &SignalGrid,
    c0: AffinePoint,
    grid: &AffineGrid,
) -> Result<Residual> {
    let p = rho.affine_exponent()?;
    let moved = affine_rep_apply(p, c0, f)?;
    let lhs = covariant_transform(rho, fiducial, &moved.signal, grid)?;
    let rhs = left_shift_field(c0, &covariant_transform(rho, fiducial, f, grid)?);
    interior_residual(&lhs, &rhs)
}

// ---------------------------------------------------------------------------
// Maximal function and the shift-invariant norm
// ---------------------------------------------------------------------------

fn require_maximal(field: &TransformField) -> Result<()> {
    if field.fiducial != "maximal" || !field.p.is_infinite() {
        return Err(Error::WrongVariant(format!(
            "maximal function needs the maximal fiducial with p = inf, got {} with p = {}",
            field.fiducial, field.p
        )));
    }
    Ok(())
}

/// `M̂_f(b) = max_a [W_∞ f](a, b)` over the a-grid.
pub fn maximal_function(field: &TransformField) -> Result<SignalGrid> {
    require_maximal(field)?;
    let g = &field.grid;
    let values = (0..g.n_b())
        .map(|ib| {
            let m = (0..g.n_a())
                .map(|ia| field.get(ia, ib).re)
                .fold(f64::NEG_INFINITY, f64::max);
            C64::new(m, 0.0)
        })
        .collect();
    SignalGrid::new(g.b_min(), g.b_step(), values)
}

/// The grid maximum polished by a golden-section search in `ln a` between
/// the neighbours of the best grid scale, evaluating `W_∞ f` directly.
///
/// Never below [`maximal_function`]: the grid value is kept when the search
/// does not improve on it.
pub fn maximal_function_refined(f: &SignalGrid, grid: &AffineGrid) -> Result<SignalGrid> {
    let fid = FiducialSpec::Maximal;
    let prep = PreparedFiducial::new(&fid, f, f64::INFINITY)?;
    let w = |a: f64, b: f64| prep.eval(a, b).map(|v| v[0].re);
    let a = grid.a_values();
    let values: Vec<C64> = grid
        .b_values()
        .par_iter()
        .map(|&b| {
            let row: Vec<f64> = a.iter().map(|&s| w(s, b)).collect::<Result<_>>()?;
            let (best, top) =
                row.iter()
                    .enumerate()
                    .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| {
                        if v > bv {
                            (i, v)
                        } else {
                            (bi, bv)
                        }
                    });
            let lo = a[best.saturating_sub(1)].ln();
            let hi = a[(best + 1).min(a.len() - 1)].ln();
            let refined = golden_max(|t| w(t.exp(), b).unwrap_or(f64::NEG_INFINITY), lo, hi);
            Ok(C64::new(top.max(refined), 0.0))
        })
        .collect::<Result<_>>()?;
    SignalGrid::new(grid.b_min(), grid.b_step(), values)
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    let mut best = f(lo).max(f(hi)).max(f1).max(f2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
        best = best.max(f1).max(f2);
        if hi - lo < 1e-13 {
            break;
        }
    }
    best
}

/// `‖f‖ = max_b [W_∞ f](½, b)`.
pub fn shift_invariant_norm(f: &SignalGrid, grid: &AffineGrid) -> Result<f64> {
    let ia = grid
        .find_a(0.5)
        .ok_or_else(|| invalid("shift-invariant norm needs a = 1/2 in the a-grid"))?;
    let fid = FiducialSpec::Maximal;
    let prep = PreparedFiducial::new(&fid, f, f64::INFINITY)?;
    let row = prep.eval_row(grid.a_values()[ia], grid.b_values())?;
    Ok(row.iter().map(|v| v.re).fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------
// Derived representation and the Cauchy–Riemann residual
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivedGenerator {
    /// Dilations: `f + x f′`.
    A,
    /// Translations: `f′`.
    N,
}

/// `dρ_A f = f + x f′`, `dρ_N f = f′`, with a spectral derivative.
pub fn derived_rep_apply(which: DerivedGenerator, f: &SignalGrid) -> Result<SignalGrid> {
    let d = spectral_derivative(f)?;
    match which {
        DerivedGenerator::N => Ok(d),
        DerivedGenerator::A => {
            let vals = f
                .values()
                .iter()
                .zip(d.values())
                .enumerate()
                .map(|(k, (u, v))| u + v * f.x_at(k))
                .collect();
            f.with_values(vals)
        }
    }
}

/// `max |a∂ₐW − i·a∂_bW − W/p|` over interior nodes, with centred
/// differences (`∂ₐ` taken in `ln a`).
///
/// For `W = a^{1/p} G(b + ia)` with `G` holomorphic the first two terms sum
/// to `W/p`, so the weight term is what makes the operator annihilate the
/// Cauchy field for finite `p`.
pub fn cauchy_riemann_residual(field: &TransformField) -> Result<f64> {
    cauchy_riemann_operator(field, true)
}

/// The same stencil; `weighted = false` drops the `W/p` term.
pub fn cauchy_riemann_operator(field: &TransformField, weighted: bool) -> Result<f64> {
    let g = &field.grid;
    if g.n_a() < 3 || g.n_b() < 3 {
        return Err(Error::EmptyInterior(
            "centred stencils need at least 3×3 nodes".into(),
        ));
    }
    if field.u_dim != 1 {
        return Err(Error::WrongVariant(
            "Cauchy–Riemann residual needs a scalar field".into(),
        ));
    }
    let (h, db) = (g.log_step(), g.b_step());
    let weight = if weighted { 1.0 / field.p } else { 0.0 };
    let mut worst: f64 = 0.0;
    for ia in 1..g.n_a() - 1 {
        for ib in 1..g.n_b() - 1 {
            let w = field.get(ia, ib);
            let a_da = (field.get(ia + 1, ib) - field.get(ia - 1, ib)) / (2.0 * h);
            let a = g.a_values()[ia];
            let a_db = (field.get(ia, ib + 1) - field.get(ia, ib - 1)) * (a / (2.0 * db));
            let r = a_da - C64::new(0.0, 1.0) * a_db - w * weight;
            worst = worst.max(r.norm());
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Induced transform on SL(2,R)
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CosetResidual {
    pub plus: f64,
    pub minus: f64,
    pub lost_fraction: f64,
    pub zeroed_nodes: usize,
}

/// Residuals of `F± ∘ ρ(h_t) = e^{∓it} F±` under the SL(2,R) line
/// representation, `h_t = (cos t, sin t; −sin t, cos t)`.
pub fn induced_coset_residual(f: &SignalGrid, t: f64) -> Result<CosetResidual> {
    // ρ(h_t) enters the action formula through h_t⁻¹
    let m = Sl2Element::rotation(t).inverse();
    let moved = sl2_line_rep_apply(&m, f)?;
    let limit = 1e-6;
    if moved.lost_fraction > limit {
        return Err(Error::MassLoss {
            lost: moved.lost_fraction,
            limit,
        });
    }
    let i = C64::new(0.0, 1.0);
    let (fp, fm) = (f.cauchy_integral(i)?, f.cauchy_integral(-i)?);
    let (gp, gm) = (
        moved.signal.cauchy_integral(i)?,
        moved.signal.cauchy_integral(-i)?,
    );
    Ok(CosetResidual {
        plus: (gp - C64::from_polar(1.0, -t) * fp).norm(),
        minus: (gm - C64::from_polar(1.0, t) * fm).norm(),
        lost_fraction: moved.lost_fraction,
        zeroed_nodes: moved.zeroed_nodes,
    })
}

// ---------------------------------------------------------------------------
// Right shifts
// ---------------------------------------------------------------------------

/// `F ∘ ρ_p(c′)` written as a pairing with an explicit weight sampled on
/// `like`'s grid. Available for the linear line fiducials.
pub fn compose_fiducial(
    fiducial: &FiducialSpec,
    c: AffinePoint,
    p: f64,
    like: &SignalGrid,
) -> Result<FiducialSpec> {
    if c == AffinePoint::IDENTITY {
        return Ok(fiducial.clone());
    }
    let (a, b) = (c.a(), c.b());
    let k = affine_prefactor(p, a);
    // F(ρ(c)f) = ∫ f(t) conj(w′(t)) dt after t = a x + b
    let cauchy = |sign: f64| {
        move |t: f64| {
            // conj of k/(2πi (t − b − i·sign·a))
            (C64::new(k, 0.0) / (C64::new(0.0, 2.0 * PI) * C64::new(t - b, -sign * a))).conj()
        }
    };
    let w = match fiducial {
        FiducialSpec::CauchyPlus => like.map(|t, _| cauchy(1.0)(t))?,
        FiducialSpec::CauchyMinus => like.map(|t, _| cauchy(-1.0)(t))?,
        FiducialSpec::Poisson => like.map(|t, _| cauchy(1.0)(t) - cauchy(-1.0)(t))?,
        FiducialSpec::PairWith { w } => {
            like.map(|t, _| w.interpolate_eval((t - b) / a) * (k / a))?
        }
        other => {
            return Err(Error::WrongVariant(format!(
                "{} cannot be rewritten as a pairing",
                other.name()
            )))
        }
    };
    Ok(FiducialSpec::PairWith { w })
}

/// `max |W_{F∘ρ(c′)} f (c) − W_F f (c ∗ c′)|` over the interior.
///
/// The left side pairs `f` against an explicit weight, the right side reads
/// the `F`-field at the composed pair; they agree exactly in theory.
pub fn right_shift_consistency(
    rho: &ReprSpec,
    fiducial: &FiducialSpec,
    f: &SignalGrid,
    c_prime: AffinePoint,
    grid: &AffineGrid,
) -> Result<Residual> {
    let p = rho.affine_exponent()?;
    let composed = compose_fiducial(fiducial, c_prime, p, f)?;
    let lhs = covariant_transform(rho, &composed, f, grid)?;
    let base = covariant_transform(rho, fiducial, f, grid)?;
    let rhs = remap_field(&base, |a, b| (a * c_prime.a(), a * c_prime.b() + b));
    interior_residual(&lhs, &rhs)
}

// ---------------------------------------------------------------------------
// Radon transform
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct Sinogram {
    pub thetas: Axis,
    pub offsets: Axis,
    /// Row-major in θ.
    pub values: Vec<C64>,
}

impl Sinogram {
    pub fn get(&self, it: usize, is: usize) -> C64 {
        self.values[it * self.offsets.n + is]
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("theta,s,re,im\n");
        for it in 0..self.thetas.n {
            for is in 0..self.offsets.n {
                let v = self.get(it, is);
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    self.thetas.at(it),
                    self.offsets.at(is),
                    v.re,
                    v.im
                );
            }
        }
        crate::cli::write_atomic(path, s.as_bytes())
    }
}

/// Line integrals of `f` along the x-axis moved by the Euclidean motion
/// (rotation θ, translation `(0, s)` in the rotated frame): the points
/// `(x cos θ − s sin θ, x sin θ + s cos θ)`. Samples are taken every
/// `min(dx, dy)` with tensor-cubic interpolation.
pub fn radon_transform(f: &PlaneField, thetas: Axis, offsets: Axis) -> Result<Sinogram> {
    let (xa, ya) = (f.x_axis(), f.y_axis());
    let step = xa.step.min(ya.step);
    let reach = [xa.start, xa.end()]
        .iter()
        .flat_map(|&x| [ya.start, ya.end()].map(|y| (x * x + y * y).sqrt()))
        .fold(0.0, f64::max);
    let half = (reach / step).ceil() as usize;
    let n = 2 * half + 1;
    let rows: Vec<Vec<C64>> = (0..thetas.n)
        .into_par_iter()
        .map(|it| {
            let (sin, cos) = thetas.at(it).sin_cos();
            (0..offsets.n)
                .map(|is| {
                    let s = offsets.at(is);
                    let samples: Vec<C64> = (0..n)
                        .map(|k| {
                            let x = (k as f64 - half as f64) * step;
                            f.eval_cubic(x * cos - s * sin, x * sin + s * cos)
                        })
                        .collect();
                    simpson(&samples, step)
                })
                .collect()
        })
        .collect();
    Ok(Sinogram {
        thetas,
        offsets,
        values: rows.concat(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouplib::make_affine_grid;

    fn rational(l: f64, dx: f64) -> SignalGrid {
        let n = (2.0 * l / dx).round() as usize;
        SignalGrid::from_real_fn(-l, dx, n, |t| 1.0 / (1.0 + t * t)).unwrap()
    }

    fn oracle(z: C64) -> C64 {
        C64::new(0.0, 1.0) / ((z + C64::new(0.0, 1.0)) * 2.0)
    }

    #[test]
    fn transform_examples() {
        let f = rational(256.0, 1.0 / 64.0);
        let rho = ReprSpec::Affine { p: 2.0 };
        let fid = FiducialSpec::CauchyPlus;
        let v = covariant_transform_at(&rho, &fid, &f, AffinePoint::IDENTITY).unwrap()[0];
        assert!((v - 0.25).norm() <= 1e-6);
        let v =
            covariant_transform_at(&rho, &fid, &f, AffinePoint::new(2.0, 0.0).unwrap()).unwrap()[0];
        assert!((v - 2f64.sqrt() / 6.0).norm() <= 1e-6);
        let direct = crate::fiducial::eval_fiducial(&FiducialSpec::Poisson, &f)
            .unwrap()
            .as_scalar()
            .unwrap();
        let at_id = covariant_transform_at(&rho, &FiducialSpec::Poisson, &f, AffinePoint::IDENTITY)
            .unwrap()[0];
        assert_eq!(direct, at_id);

        let grid = make_affine_grid(0.25, 4.0, 9, -2.0, 2.0, 65).unwrap();
        let w = covariant_transform(&rho, &fid, &f, &grid).unwrap();
        for ia in 0..grid.n_a() {
            for ib in 0..grid.n_b() {
                let (a, b) = (grid.a_values()[ia], grid.b_values()[ib]);
                let expect = oracle(C64::new(b, a)) * a.sqrt();
                assert!((w.get(ia, ib) - expect).norm() <= 1e-6);
            }
        }
        assert!(covariant_transform(&ReprSpec::Sl2HalfPlane, &fid, &f, &grid).is_err());
    }

    #[test]
    fn left_shift_examples() {
        let grid = make_affine_grid(0.5, 2.0, 9, -2.0, 2.0, 33).unwrap();
        let w = TransformField::from_fn(grid.clone(), |a, b| C64::new(a.ln() + b, a * b)).unwrap();
        assert_eq!(
            left_shift_field(AffinePoint::IDENTITY, &w).values(),
            w.values()
        );

        let shifted = left_shift_field(AffinePoint::new(1.0, 1.0).unwrap(), &w);
        for ia in 0..grid.n_a() {
            for ib in 0..grid.n_b() {
                if ib + 8 < grid.n_b() {
                    assert!((shifted.get(ia, ib) - w.get(ia, ib + 8)).norm() < 1e-12);
                } else {
                    assert!(!shifted.is_present(ia, ib));
                }
            }
        }

        let c0 = AffinePoint::new(1.0, 0.25).unwrap();
        let back = left_shift_field(c0.inverse(), &left_shift_field(c0, &w));
        for ia in 1..grid.n_a() - 1 {
            for ib in 1..grid.n_b() - 1 {
                if back.is_present(ia, ib) {
                    assert!((back.get(ia, ib) - w.get(ia, ib)).norm() <= 1e-8);
                }
            }
        }
    }

    #[test]
    fn intertwining_examples() {
        let f = SignalGrid::from_real_fn(-8.0, 1.0 / 64.0, 1024, |x| (-x * x).exp()).unwrap();
        let grid = make_affine_grid(0.5, 2.0, 33, -2.0, 2.0, 65).unwrap();
        let rho = ReprSpec::Affine { p: 2.0 };
        let fid = FiducialSpec::CauchyPlus;
        let r = intertwining_residual(&rho, &fid, &f, AffinePoint::IDENTITY, &grid).unwrap();
        assert_eq!(r.residual, 0.0);
        let r = intertwining_residual(&rho, &fid, &f, AffinePoint::new(1.0, 0.5).unwrap(), &grid)
            .unwrap();
        assert!(r.residual <= 1e-6, "{}", r.residual);

        let c0 = AffinePoint::new(1.1, 0.3).unwrap();
        let coarse = intertwining_residual(&rho, &fid, &f, c0, &grid)
            .unwrap()
            .residual;
        let fine = intertwining_residual(&rho, &fid, &f, c0, &grid.refined())
            .unwrap()
            .residual;
        assert!(coarse / fine >= 3.5, "{coarse} / {fine}");
    }

    #[test]
    fn maximal_examples() {
        let grid = make_affine_grid(2f64.powi(-6), 16.0, 64, -4.0, 5.0, 512).unwrap();
        let rho = ReprSpec::Affine { p: f64::INFINITY };
        let one = SignalGrid::from_real_fn(-64.0, 1.0 / 64.0, 8193, |_| 1.0).unwrap();
        let w = covariant_transform(&rho, &FiducialSpec::Maximal, &one, &grid).unwrap();
        let m = maximal_function(&w).unwrap();
        assert!(m.values().iter().all(|v| (v.re - 1.0).abs() < 1e-12));

        let ind = SignalGrid::from_real_fn(-32.0, 2f64.powi(-10), 65537, |x| {
            if (0.0..=1.0).contains(&x) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let m = maximal_function_refined(&ind, &grid).unwrap();
        for &(b, expect) in &[(0.5, 1.0), (2.0, 0.25), (-1.0, 0.25)] {
            let k = ((b - grid.b_min()) / grid.b_step()).round() as usize;
            let bb = grid.b_values()[k];
            let exact = if bb > 1.0 {
                1.0 / (2.0 * bb)
            } else if bb < 0.0 {
                1.0 / (2.0 * (1.0 - bb))
            } else {
                1.0
            };
            assert!((m.values()[k].re - exact).abs() <= 2e-3, "b = {bb}");
            assert!((exact - expect).abs() < 0.01);
        }

        let w3 = covariant_transform(
            &rho,
            &FiducialSpec::Maximal,
            &ind.scaled(C64::new(3.0, 0.0)),
            &grid,
        )
        .unwrap();
        let w1 = covariant_transform(&rho, &FiducialSpec::Maximal, &ind, &grid).unwrap();
        let (m3, m1) = (
            maximal_function(&w3).unwrap(),
            maximal_function(&w1).unwrap(),
        );
        for (u, v) in m3.values().iter().zip(m1.values()) {
            assert!((u - v * 3.0).norm() <= 1e-12);
        }
        // grid-only maximum never exceeds the refined one
        for (u, v) in m1.values().iter().zip(m.values()) {
            assert!(u.re <= v.re + 1e-15);
        }
        let wrong = covariant_transform(
            &ReprSpec::Affine { p: 2.0 },
            &FiducialSpec::Maximal,
            &ind,
            &grid,
        )
        .unwrap();
        assert!(maximal_function(&wrong).is_err());
    }

    #[test]
    fn maximal_intertwines_on_grid_shifts() {
        let grid = make_affine_grid(0.125, 4.0, 16, -2.0, 2.0, 65).unwrap();
        let f = SignalGrid::from_real_fn(-8.0, 1.0 / 64.0, 1025, |x| {
            (-(x - 0.2).powi(2)).exp() * (3.0 * x).cos()
        })
        .unwrap();
        let rho = ReprSpec::Affine { p: f64::INFINITY };
        let shift = 0.25; // four b-steps and sixteen samples
        let moved =
            affine_rep_apply(f64::INFINITY, AffinePoint::new(1.0, shift).unwrap(), &f).unwrap();
        let m0 = maximal_function(
            &covariant_transform(&rho, &FiducialSpec::Maximal, &f, &grid).unwrap(),
        )
        .unwrap();
        let m1 = maximal_function(
            &covariant_transform(&rho, &FiducialSpec::Maximal, &moved.signal, &grid).unwrap(),
        )
        .unwrap();
        for ib in 0..grid.n_b() - 4 {
            assert!((m1.values()[ib] - m0.values()[ib + 4]).norm() <= 1e-8);
        }
    }

    #[test]
    fn shift_invariant_norm_examples() {
        let grid = make_affine_grid(0.25, 1.0, 3, -4.0, 5.0, 73).unwrap();
        let ind = |c: f64| {
            SignalGrid::from_real_fn(-8.0, 2f64.powi(-10), 16385, move |x| {
                if (c..=c + 1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            })
            .unwrap()
        };
        let n0 = shift_invariant_norm(&ind(0.0), &grid).unwrap();
        assert!((n0 - 1.0).abs() <= 1e-6);
        let n1 = shift_invariant_norm(&ind(0.375), &grid).unwrap();
        assert!((n0 - n1).abs() <= 1e-10);
        assert_eq!(
            shift_invariant_norm(&ind(0.0).zeros_like(), &grid).unwrap(),
            0.0
        );
        let no_half = make_affine_grid(0.3, 1.0, 3, -4.0, 5.0, 73).unwrap();
        assert!(shift_invariant_norm(&ind(0.0), &no_half).is_err());
    }

    /// Smooth plateau: 1 on `[−r, r]`, 0 beyond `r + w`.
    fn plateau(x: f64, r: f64, w: f64) -> f64 {
        let s = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
        let u = (x.abs() - r) / w;
        if u <= 0.0 {
            1.0
        } else if u >= 1.0 {
            0.0
        } else {
            s(1.0 - u) / (s(1.0 - u) + s(u))
        }
    }

    #[test]
    fn derived_examples() {
        let n = 4096;
        let dx = 32.0 / n as f64;
        let win = |x: f64| plateau(x, 8.0, 6.0);
        let f = SignalGrid::from_real_fn(-16.0, dx, n, |x| x * x * win(x)).unwrap();
        let dn = derived_rep_apply(DerivedGenerator::N, &f).unwrap();
        let da = derived_rep_apply(DerivedGenerator::A, &f).unwrap();
        for k in 0..n {
            let x = f.x_at(k);
            if x.abs() <= 6.0 {
                assert!(
                    (dn.values()[k] - C64::new(2.0 * x, 0.0)).norm() <= 1e-6,
                    "x = {x}"
                );
                assert!(
                    (da.values()[k] - C64::new(3.0 * x * x, 0.0)).norm() <= 1e-6,
                    "x = {x}"
                );
            }
        }
        let w = SignalGrid::from_fn(-16.0, dx, n, |x| C64::new(win(x), 0.0) / C64::new(x, 1.0))
            .unwrap();
        let a = derived_rep_apply(DerivedGenerator::A, &w).unwrap();
        let nn = derived_rep_apply(DerivedGenerator::N, &w).unwrap();
        let sum = a
            .combine(C64::new(1.0, 0.0), &nn, C64::new(0.0, 1.0))
            .unwrap();
        for k in 0..n {
            if f.x_at(k).abs() <= 6.0 {
                assert!(sum.values()[k].norm() <= 1e-8);
            }
        }
    }

    #[test]
    fn cauchy_riemann_examples() {
        let f = rational(256.0, 1.0 / 64.0);
        let rho = ReprSpec::Affine { p: 1.0 };
        let grid = make_affine_grid(0.5, 4.0, 65, -4.0, 4.0, 257).unwrap();
        let w = covariant_transform(&rho, &FiducialSpec::CauchyPlus, &f, &grid).unwrap();
        let coarse = cauchy_riemann_residual(&w).unwrap();
        assert!(coarse <= 1e-3, "{coarse}");
        let wf = covariant_transform(&rho, &FiducialSpec::CauchyPlus, &f, &grid.refined()).unwrap();
        let fine = cauchy_riemann_residual(&wf).unwrap();
        assert!(coarse / fine >= 3.5, "{coarse} / {fine}");
        // without the weight term the residual is |W|
        let raw = cauchy_riemann_operator(&w, false).unwrap();
        let sup = w.values().iter().fold(0.0f64, |m, v| m.max(v.norm()));
        assert!(raw > 0.5 * sup);
        let p = covariant_transform(&rho, &FiducialSpec::Poisson, &f, &grid).unwrap();
        assert!(cauchy_riemann_residual(&p).unwrap() > 1e-2);
    }

    #[test]
    fn induced_examples() {
        let n = 32768;
        let f = SignalGrid::from_real_fn(-16.0, 32.0 / n as f64, n, |x| {
            (-(x + 4.0) * (x + 4.0)).exp()
        })
        .unwrap();
        let r0 = induced_coset_residual(&f, 0.0).unwrap();
        assert_eq!((r0.plus, r0.minus), (0.0, 0.0));
        let t = PI / 3.0;
        let r = induced_coset_residual(&f, t).unwrap();
        assert!(r.plus <= 1e-4 && r.minus <= 1e-4, "{r:?}");
        let r2 = induced_coset_residual(&f, t + 2.0 * PI).unwrap();
        assert!((r.plus - r2.plus).abs() <= 1e-12 && (r.minus - r2.minus).abs() <= 1e-12);

        let slow = rational(16.0, 1.0 / 64.0);
        assert!(matches!(
            induced_coset_residual(&slow, 1.0),
            Err(Error::MassLoss { .. })
        ));
    }

    #[test]
    fn right_shift_examples() {
        let f = SignalGrid::from_real_fn(-16.0, 1.0 / 64.0, 2048, |x| (-x * x).exp()).unwrap();
        let rho = ReprSpec::Affine { p: 2.0 };
        let grid = make_affine_grid(0.5, 4.0, 25, -2.0, 2.0, 33).unwrap();
        let id = right_shift_consistency(
            &rho,
            &FiducialSpec::CauchyPlus,
            &f,
            AffinePoint::IDENTITY,
            &grid,
        )
        .unwrap();
        assert!(id.residual <= 1e-10, "{}", id.residual);
        let r = right_shift_consistency(
            &rho,
            &FiducialSpec::CauchyPlus,
            &f,
            AffinePoint::new(2.0, 0.0).unwrap(),
            &grid,
        )
        .unwrap();
        assert!(r.residual <= 1e-6, "{}", r.residual);
        // a third of a log-step off the grid: bilinear error is then equal
        // in shape on both grids and the ratio measures the order
        let c = AffinePoint::new((grid.log_step() * 4.0 / 3.0).exp(), 0.0).unwrap();
        let coarse = right_shift_consistency(&rho, &FiducialSpec::CauchyPlus, &f, c, &grid)
            .unwrap()
            .residual;
        let fine = right_shift_consistency(&rho, &FiducialSpec::CauchyPlus, &f, c, &grid.refined())
            .unwrap()
            .residual;
        assert!(coarse / fine >= 3.5, "{coarse} / {fine}");
    }

    fn disk(ax: Axis, r: f64) -> PlaneField {
        PlaneField::from_fn(ax, ax, move |x, y| {
            if x * x + y * y <= r * r {
                C64::new(1.0, 0.0)
            } else {
                ZERO
            }
        })
        .unwrap()
    }

    #[test]
    fn radon_examples() {
        let ax = Axis::span(-2.0, 2.0, 257).unwrap();
        let thetas = Axis::span(0.0, PI, 9).unwrap();
        let offsets = Axis::span(-1.5, 1.5, 25).unwrap();
        let zero = PlaneField::from_fn(ax, ax, |_, _| ZERO).unwrap();
        assert!(radon_transform(&zero, thetas, offsets)
            .unwrap()
            .values
            .iter()
            .all(|v| *v == ZERO));

        let r = 1.0;
        let sino = radon_transform(&disk(ax, r), thetas, offsets).unwrap();
        let step = ax.step;
        for it in 0..thetas.n {
            for is in 0..offsets.n {
                let s: f64 = offsets.at(is);
                let v = sino.get(it, is).re;
                if s.abs() < r {
                    let chord = 2.0 * (r * r - s * s).sqrt();
                    assert!((v - chord).abs() <= 2.0 * step, "θ={} s={s}", thetas.at(it));
                } else if s.abs() > r + 3.0 * step {
                    assert_eq!(v, 0.0);
                }
            }
        }

        let radial =
            PlaneField::from_fn(ax, ax, |x, y| C64::new((-4.0 * (x * x + y * y)).exp(), 0.0))
                .unwrap();
        let sino = radon_transform(&radial, Axis::span(0.0, PI, 13).unwrap(), offsets).unwrap();
        for is in 0..offsets.n {
            for it in 1..13 {
                assert!((sino.get(it, is) - sino.get(0, is)).norm() <= 1e-6);
            }
        }
    }

    #[test]
    fn radon_shift_property() {
        let ax = Axis::span(-3.0, 3.0, 385).unwrap();
        let (u, v) = (0.5, -0.25);
        let bump = |x: f64, y: f64| C64::new((-3.0 * (x * x + 2.0 * y * y)).exp(), 0.0);
        let f = PlaneField::from_fn(ax, ax, bump).unwrap();
        let g = PlaneField::from_fn(ax, ax, move |x, y| bump(x - u, y - v)).unwrap();
        let thetas = Axis::span(0.0, PI, 7).unwrap();
        let offsets = Axis::span(-1.0, 1.0, 9).unwrap();
        let sg = radon_transform(&g, thetas, offsets).unwrap();
        for it in 0..thetas.n {
            let th: f64 = thetas.at(it);
            let moved = Axis::new(
                offsets.start + u * th.sin() - v * th.cos(),
                offsets.step,
                offsets.n,
            )
            .unwrap();
            let sf = radon_transform(&f, Axis::new(th, 1.0, 2).unwrap(), moved).unwrap();
            for is in 0..offsets.n {
                assert!((sg.get(it, is) - sf.get(0, is)).norm() <= 2.0 * ax.step);
            }
        }
    }

    #[test]
    fn field_csv_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let f = rational(64.0, 1.0 / 32.0);
        let grid = make_affine_grid(0.5, 2.0, 5, -1.0, 1.0, 9).unwrap();
        let w = covariant_transform(&ReprSpec::Affine { p: 2.0 }, &FiducialSpec::Jump, &f, &grid)
            .unwrap();
        let (p1, p2) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
        w.write_csv(&p1).unwrap();
        w.write_csv(&p2).unwrap();
        let t = std::fs::read_to_string(&p1).unwrap();
        assert_eq!(t, std::fs::read_to_string(&p2).unwrap());
        assert!(t.starts_with("a,b,re,im,re1,im1\n"));
        assert_eq!(t.lines().count(), 1 + grid.len());
    }
}
