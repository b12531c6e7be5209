//! Invariant pairings of transform fields and the inverse transform
//! `M: F ↦ ⟨F, w⟩`, `w(g) = ρ(g) v₀`.

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fiducial::FiducialSpec;
use crate::grouplib::AffineGrid;
use crate::repr::{affine_prefactor, ReprSpec};
use crate::signal::SignalGrid;
use crate::xform::{covariant_transform, TransformField};
use crate::C64;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum PairingSpec {
    /// `∫ F₁ F̄₂ a⁻² da db` over the whole grid.
    Haar,
    /// `lim_{a→0} ∫ F₁(a,b) F̄₂(a,b) db`, extrapolated from the listed scales.
    Hardy { a_sequence: Vec<f64> },
}

impl PairingSpec {
    pub fn validate(&self) -> Result<()> {
        if let PairingSpec::Hardy { a_sequence } = self {
            let bad = |m: &str| Error::Config {
                field: "pairing.a_sequence".into(),
                message: m.into(),
            };
            if a_sequence.len() < 3 {
                return Err(bad("needs at least three scales"));
            }
            if a_sequence.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                return Err(bad("scales must be positive"));
            }
            if a_sequence.windows(2).any(|w| w[1] >= w[0]) {
                return Err(bad("scales must be strictly decreasing"));
            }
        }
        Ok(())
    }

    /// Grid rows of the Hardy scales, in the listed order.
    fn rows(&self, grid: &AffineGrid) -> Result<Vec<usize>> {
        self.validate()?;
        match self {
            PairingSpec::Haar => Ok((0..grid.n_a()).collect()),
            PairingSpec::Hardy { a_sequence } => a_sequence
                .iter()
                .map(|&a| {
                    grid.find_a(a).ok_or_else(|| Error::Config {
                        field: "pairing.a_sequence".into(),
                        message: format!("a = {a} is not on the field grid"),
                    })
                })
                .collect(),
        }
    }
}

/// Limit estimate with its diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HardyEstimate {
    #[serde(with = "crate::serde_complex")]
    pub value: C64,
    /// `|I(a_min) − I₀|`.
    pub error_estimate: f64,
    /// `I(a)` for each scale of the sequence.
    #[serde(with = "crate::serde_complex::vec")]
    pub levels: Vec<C64>,
}

fn check_grids(f1: &TransformField, f2: &TransformField) -> Result<()> {
    if f1.grid() != f2.grid() {
        return Err(Error::GridMismatch("pairing needs identical grids".into()));
    }
    if f1.u_dim() != 1 || f2.u_dim() != 1 {
        return Err(Error::WrongVariant("pairings act on scalar fields".into()));
    }
    Ok(())
}

fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            if n > 1 && (i == 0 || i == n - 1) {
                0.5 * h
            } else {
                h
            }
        })
        .collect()
}

/// Trapezoid in `ln a` (Jacobian `a`) and in `b`: net weight `a⁻¹ d(ln a) db`.
pub fn haar_pairing(f1: &TransformField, f2: &TransformField) -> Result<C64> {
    check_grids(f1, f2)?;
    let g = f1.grid();
    let wa = trapezoid_weights(g.n_a(), g.log_step());
    let wb = trapezoid_weights(g.n_b(), g.b_step());
    let mut total = ZERO;
    for (ia, &a) in g.a_values().iter().enumerate() {
        let row: C64 = (0..g.n_b())
            .map(|ib| f1.get(ia, ib) * f2.get(ia, ib).conj() * wb[ib])
            .sum();
        total += row * (wa[ia] / a);
    }
    Ok(total)
}

/// Errors unless the level differences shrink along the sequence.
fn check_decreasing(diffs: &[f64], scale: f64) -> Result<()> {
    if diffs.windows(2).any(|d| d[1] > d[0] + 1e-12 * scale) {
        return Err(Error::NonConvergent(format!(
            "hardy pairing: level differences {diffs:?} do not decrease as a → 0"
        )));
    }
    Ok(())
}

/// `I₀` from `I(a) = I₀ + c·a` through the two smallest scales.
fn richardson(scales: &[f64], levels: &[C64]) -> C64 {
    let n = levels.len();
    let (a1, a2) = (scales[n - 1], scales[n - 2]);
    (levels[n - 1] * a2 - levels[n - 2] * a1) / (a2 - a1)
}

/// Linear Richardson step on the two smallest scales, with a check that the
/// level differences shrink along the sequence.
pub fn extrapolate_to_zero(scales: &[f64], levels: &[C64]) -> Result<HardyEstimate> {
    let n = levels.len();
    if n < 2 || scales.len() != n {
        return Err(invalid("extrapolation needs matching scales and levels"));
    }
    let scale = levels.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let diffs: Vec<f64> = levels.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    check_decreasing(&diffs, scale)?;
    let value = richardson(scales, levels);
    Ok(HardyEstimate {
        value,
        error_estimate: (levels[n - 1] - value).norm(),
        levels: levels.to_vec(),
    })
}

pub fn hardy_pairing(
    f1: &TransformField,
    f2: &TransformField,
    spec: &PairingSpec,
) -> Result<HardyEstimate> {
    check_grids(f1, f2)?;
    let PairingSpec::Hardy { a_sequence } = spec else {
        return Err(Error::WrongVariant(
            "hardy_pairing needs a Hardy spec".into(),
        ));
    };
    let g = f1.grid();
    let rows = spec.rows(g)?;
    let wb = trapezoid_weights(g.n_b(), g.b_step());
    let levels: Vec<C64> = rows
        .iter()
        .map(|&ia| {
            (0..g.n_b())
                .map(|ib| f1.get(ia, ib) * f2.get(ia, ib).conj() * wb[ib])
                .sum()
        })
        .collect();
    extrapolate_to_zero(a_sequence, &levels)
}

/// `out[j] = Σ_k u[k] h(j − k)` for `j, k < n`.
fn lattice_convolve(u: &[C64], h: impl Fn(i64) -> C64) -> Vec<C64> {
    let n = u.len();
    let size = (3 * n).next_power_of_two();
    let mut a = vec![ZERO; size];
    a[..n].copy_from_slice(u);
    let mut k = vec![ZERO; size];
    for m in -(n as i64 - 1)..n as i64 {
        k[m.rem_euclid(size as i64) as usize] = h(m);
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    fwd.process(&mut a);
    fwd.process(&mut k);
    a.iter_mut().zip(&k).for_each(|(x, y)| *x *= y);
    planner.plan_fft_inverse(size).process(&mut a);
    a[..n].iter().map(|v| v / size as f64).collect()
}

/// `M F̂(x) = ⟨F̂, g ↦ [ρ(g) v₀](x)⟩` on the field's b-nodes.
///
/// The node `(a, b)` stands for `g⁻¹`, so `ρ(g) v₀(x) = a^{−1/p} v₀((x − b)/a)`
/// with `p` from `rho`, which may differ from the exponent the field was
/// built with. Each a-row becomes a lattice convolution in `b`.
pub fn inverse_covariant_transform(
    fhat: &TransformField,
    rho: &ReprSpec,
    v0: &SignalGrid,
    spec: &PairingSpec,
) -> Result<SignalGrid> {
    if fhat.u_dim() != 1 {
        return Err(Error::WrongVariant(
            "inverse transform needs a scalar field".into(),
        ));
    }
    let p = rho.affine_exponent()?;
    let g = fhat.grid();
    let rows = spec.rows(g)?;
    let db = g.b_step();
    let wb = trapezoid_weights(g.n_b(), db);
    // one output row per a-level: Σ_b F̂(a,b)·conj(w_{a,b}(x_j))·Δb
    let levels: Vec<Vec<C64>> = rows
        .par_iter()
        .map(|&ia| {
            let a = g.a_values()[ia];
            let k = affine_prefactor(p, a).recip();
            let u: Vec<C64> = (0..g.n_b()).map(|ib| fhat.get(ia, ib) * wb[ib]).collect();
            lattice_convolve(&u, |m| (v0.interpolate_eval(m as f64 * db / a) * k).conj())
        })
        .collect();
    let values = match spec {
        PairingSpec::Haar => {
            let wa = trapezoid_weights(g.n_a(), g.log_step());
            let mut acc = vec![ZERO; g.n_b()];
            for (r, &ia) in rows.iter().enumerate() {
                let w = wa[ia] / g.a_values()[ia];
                acc.iter_mut()
                    .zip(&levels[r])
                    .for_each(|(s, v)| *s += v * w);
            }
            acc
        }
        PairingSpec::Hardy { a_sequence } => {
            // the levels are signals; convergence is judged in L² over x
            let l2 = |u: &[C64], v: &[C64]| {
                u.iter()
                    .zip(v)
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            };
            let diffs: Vec<f64> = levels.windows(2).map(|w| l2(&w[0], &w[1])).collect();
            let zero = vec![ZERO; g.n_b()];
            let scale = levels.iter().map(|l| l2(l, &zero)).fold(0.0, f64::max);
            check_decreasing(&diffs, scale)?;
            (0..g.n_b())
                .map(|j| {
                    let col: Vec<C64> = levels.iter().map(|l| l[j]).collect();
                    richardson(a_sequence, &col)
                })
                .collect()
        }
    };
    SignalGrid::new(g.b_min(), db, values)
}

/// `W₊f − W₋f` at `p = ∞`: the jump of the Cauchy integral across the line.
pub fn jump_difference_field(f: &SignalGrid, grid: &AffineGrid) -> Result<TransformField> {
    let rho = ReprSpec::Affine { p: f64::INFINITY };
    let plus = covariant_transform(&rho, &FiducialSpec::CauchyPlus, f, grid)?;
    let minus = covariant_transform(&rho, &FiducialSpec::CauchyMinus, f, grid)?;
    TransformField::new(
        grid.clone(),
        f64::INFINITY,
        1,
        "jump",
        plus.values()
            .iter()
            .zip(minus.values())
            .map(|(u, v)| u - v)
            .collect(),
    )
}

/// `⟨m, f⟩ / ⟨f, f⟩` over the nodes with `|x| ≤ radius` (same grids).
pub fn least_squares_constant(m: &SignalGrid, f: &SignalGrid, radius: f64) -> Result<C64> {
    m.check_same_grid(f)?;
    let (mut num, mut den) = (C64::new(0.0, 0.0), 0.0);
    for k in 0..f.len() {
        if f.x_at(k).abs() <= radius {
            num += m.values()[k] * f.values()[k].conj();
            den += f.values()[k].norm_sqr();
        }
    }
    if den == 0.0 {
        return Err(invalid("signal vanishes on the fitting window"));
    }
    Ok(num / den)
}

/// `‖(f₊ − f₋)(·, a) − f‖₂ / ‖f‖₂`, with `f±` the Cauchy integrals at
/// `b ± ia` sampled on the nodes of `f`.
pub fn jump_reconstruction_defect(f: &SignalGrid, a: f64) -> Result<f64> {
    if !(a.is_finite() && a > 0.0) {
        return Err(invalid("jump defect needs a > 0"));
    }
    let norm = f.lp_norm(2.0)?;
    if norm == 0.0 {
        return Ok(0.0);
    }
    let xs: Vec<f64> = f.xs().collect();
    let plus = f.cauchy_integral_row(a, &xs)?;
    let minus = f.cauchy_integral_row(-a, &xs)?;
    let jump = f.with_values(plus.iter().zip(&minus).map(|(u, v)| u - v).collect())?;
    let diff = jump.combine(C64::new(1.0, 0.0), f, C64::new(-1.0, 0.0))?;
    Ok(diff.lp_norm(2.0)? / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fiducial::FiducialSpec;
    use crate::grouplib::make_affine_grid;
    use crate::xform::covariant_transform;
    use std::f64::consts::PI;

    fn hardy(seq: &[f64]) -> PairingSpec {
        PairingSpec::Hardy {
            a_sequence: seq.to_vec(),
        }
    }

    #[test]
    fn haar_examples() {
        let grid = make_affine_grid(1.0, 2.0, 257, 0.0, 1.0, 65).unwrap();
        let one = TransformField::from_fn(grid.clone(), |_, _| C64::new(1.0, 0.0)).unwrap();
        let v = haar_pairing(&one, &one).unwrap();
        assert!((v - 0.5).norm() <= 1e-5, "{v}");

        let zero = TransformField::from_fn(grid.clone(), |_, _| ZERO).unwrap();
        assert_eq!(haar_pairing(&one, &zero).unwrap(), ZERO);

        let f1 = TransformField::from_fn(grid.clone(), |a, b| C64::new(a * b, a - b)).unwrap();
        let f2 = TransformField::from_fn(grid.clone(), |a, b| C64::new(b.cos(), a.sin())).unwrap();
        let (u, v) = (
            haar_pairing(&f1, &f2).unwrap(),
            haar_pairing(&f2, &f1).unwrap(),
        );
        assert!((u - v.conj()).norm() <= 1e-12);

        let other = TransformField::from_fn(
            make_affine_grid(1.0, 2.0, 9, 0.0, 1.0, 65).unwrap(),
            |_, _| ZERO,
        )
        .unwrap();
        assert!(matches!(
            haar_pairing(&one, &other),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn hardy_examples() {
        let grid = make_affine_grid(1.0 / 64.0, 1.0, 7, -16.0, 16.0, 4097).unwrap();
        let spec = hardy(&[0.25, 0.125, 1.0 / 16.0]);
        let gauss =
            TransformField::from_fn(grid.clone(), |_, b| C64::new((-b * b).exp(), 0.0)).unwrap();
        let est = hardy_pairing(&gauss, &gauss, &spec).unwrap();
        assert!((est.value - (PI / 2.0).sqrt()).norm() <= 1e-6);

        let zero = TransformField::from_fn(grid.clone(), |_, _| ZERO).unwrap();
        assert_eq!(hardy_pairing(&zero, &gauss, &spec).unwrap().value, ZERO);

        let lin = TransformField::from_fn(grid.clone(), |a, _| C64::new(a, 0.0)).unwrap();
        assert!(hardy_pairing(&lin, &gauss, &spec).unwrap().value.norm() <= 1e-8);

        let wild =
            TransformField::from_fn(grid.clone(), |a, _| C64::new((1.0 / a).sin(), 0.0)).unwrap();
        let wild_spec = hardy(&[1.0, 0.5, 0.25, 0.125]);
        assert!(matches!(
            hardy_pairing(&wild, &gauss, &wild_spec),
            Err(Error::NonConvergent(_))
        ));

        assert!(hardy_pairing(&gauss, &gauss, &hardy(&[0.25, 0.125])).is_err());
        assert!(hardy_pairing(&gauss, &gauss, &hardy(&[0.125, 0.25, 0.5])).is_err());
        assert!(hardy_pairing(&gauss, &gauss, &hardy(&[0.3, 0.2, 0.1])).is_err());
    }

    #[test]
    fn inverse_transform_basics() {
        let grid = make_affine_grid(0.25, 1.0, 3, -4.0, 4.0, 257).unwrap();
        let v0 = SignalGrid::from_real_fn(-64.0, 1.0 / 32.0, 4096, |x| (-x * x).exp()).unwrap();
        let rho = ReprSpec::Affine { p: 1.0 };
        let spec = hardy(&[1.0, 0.5, 0.25]);
        let zero = TransformField::from_fn(grid.clone(), |_, _| ZERO).unwrap();
        let m = inverse_covariant_transform(&zero, &rho, &v0, &spec).unwrap();
        assert!(m.values().iter().all(|v| *v == ZERO));

        let f1 = TransformField::from_fn(grid.clone(), |a, b| C64::new((-b * b).exp(), a)).unwrap();
        let f2 =
            TransformField::from_fn(grid.clone(), |a, b| C64::new(a * b, (-b * b / 2.0).exp()))
                .unwrap();
        let sum = TransformField::from_fn(grid.clone(), |a, b| {
            C64::new((-b * b).exp(), a) + C64::new(a * b, (-b * b / 2.0).exp())
        })
        .unwrap();
        for spec in [PairingSpec::Haar, hardy(&[1.0, 0.5, 0.25])] {
            let m1 = inverse_covariant_transform(&f1, &rho, &v0, &spec).unwrap();
            let m2 = inverse_covariant_transform(&f2, &rho, &v0, &spec).unwrap();
            let ms = inverse_covariant_transform(&sum, &rho, &v0, &spec).unwrap();
            for k in 0..ms.len() {
                assert!((ms.values()[k] - m1.values()[k] - m2.values()[k]).norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn inverse_transform_matches_direct_sum() {
        let grid = make_affine_grid(0.5, 1.0, 3, -2.0, 2.0, 65).unwrap();
        let v0 =
            SignalGrid::from_real_fn(-32.0, 1.0 / 64.0, 4096, |x| 1.0 / (1.0 + x * x)).unwrap();
        let rho = ReprSpec::Affine { p: 2.0 };
        let fhat = TransformField::from_fn(grid.clone(), |a, b| C64::new(b.sin(), a * b)).unwrap();
        let m = inverse_covariant_transform(&fhat, &rho, &v0, &PairingSpec::Haar).unwrap();
        let wb = trapezoid_weights(grid.n_b(), grid.b_step());
        let wa = trapezoid_weights(grid.n_a(), grid.log_step());
        for (j, &x) in grid.b_values().iter().enumerate().step_by(7) {
            let mut s = ZERO;
            for (ia, &a) in grid.a_values().iter().enumerate() {
                for (ib, &b) in grid.b_values().iter().enumerate() {
                    let w = v0.interpolate_eval((x - b) / a) / a.sqrt();
                    s += fhat.get(ia, ib) * w.conj() * wb[ib] * wa[ia] / a;
                }
            }
            assert!((m.values()[j] - s).norm() <= 1e-12, "x = {x}");
        }
    }

    #[test]
    fn hardy_reconstruction_constant() {
        // field with p = ∞ paired against ρ₁(g)v₀: the scale factors cancel
        let dx = 1.0 / 256.0;
        let f = SignalGrid::from_real_fn(-16.0, dx, 8192, |x| (-x * x).exp()).unwrap();
        let grid = make_affine_grid(0.0125, 0.05, 3, -16.0, 16.0 - dx, 8192).unwrap();
        let field_rho = ReprSpec::Affine { p: f64::INFINITY };
        let wp = covariant_transform(&field_rho, &FiducialSpec::CauchyPlus, &f, &grid).unwrap();
        let wm = covariant_transform(&field_rho, &FiducialSpec::CauchyMinus, &f, &grid).unwrap();
        let jump = TransformField::new(
            grid.clone(),
            f64::INFINITY,
            1,
            "jump",
            wp.values()
                .iter()
                .zip(wm.values())
                .map(|(u, v)| u - v)
                .collect(),
        )
        .unwrap();
        let v0 = SignalGrid::from_fn(-4096.0, 1.0 / 32.0, 262144, |x| {
            C64::new(1.0, 0.0) / (C64::new(0.0, 2.0 * PI) * C64::new(x, 1.0))
        })
        .unwrap();
        let m = inverse_covariant_transform(
            &jump,
            &ReprSpec::Affine { p: 1.0 },
            &v0,
            &hardy(&[0.05, 0.025, 0.0125]),
        )
        .unwrap();
        // the real part is −f/2; the imaginary part is odd for even f
        for k in (0..m.len()).step_by(64) {
            let x = m.x_at(k);
            if x.abs() <= 4.0 {
                assert!(
                    (m.values()[k].re + 0.5 * f.values()[k].re).abs() <= 1e-3,
                    "x = {x}"
                );
            }
        }
    }

    #[test]
    fn jump_defect_examples() {
        let f =
            SignalGrid::from_real_fn(-256.0, 1.0 / 64.0, 32768, |t| 1.0 / (1.0 + t * t)).unwrap();
        let d1 = jump_reconstruction_defect(&f, 0.1).unwrap();
        let d2 = jump_reconstruction_defect(&f, 0.05).unwrap();
        // Poisson smoothing of 1/(1+t²) has a closed form; compare the defect
        let exact = |a: f64| {
            let g = f
                .map(|t, v| C64::new((1.0 + a) / ((1.0 + a).powi(2) + t * t), 0.0) - v)
                .unwrap();
            g.lp_norm(2.0).unwrap() / f.lp_norm(2.0).unwrap()
        };
        assert!((d1 - exact(0.1)).abs() <= 1e-6, "{d1} vs {}", exact(0.1));
        assert!((d2 - exact(0.05)).abs() <= 1e-6);
        let ratio = d1 / d2;
        assert!((ratio - 2.0).abs() <= 0.5, "{ratio}");
        assert_eq!(
            jump_reconstruction_defect(&f.zeros_like(), 0.1).unwrap(),
            0.0
        );
    }

    #[test]
    fn spec_json() {
        let s: PairingSpec =
            serde_json::from_str(r#"{"type":"hardy","a_sequence":[0.4,0.2,0.1]}"#).unwrap();
        assert_eq!(s, hardy(&[0.4, 0.2, 0.1]));
        let h: PairingSpec = serde_json::from_str(r#"{"type":"haar"}"#).unwrap();
        assert_eq!(h, PairingSpec::Haar);
        assert!(matches!(
            hardy(&[0.1, 0.2, 0.3]).validate(),
            Err(Error::Config { .. })
        ));
    }
}
