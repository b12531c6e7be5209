//! Fiducial operators `F: V → U`.
//!
//! Linear functionals (Cauchy±, Poisson, pairing with a fixed vector), the
//! vector-valued jump pair, the non-linear window mean behind the maximal
//! function, the Littlewood–Paley band projector and the Radon line integral.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::repr::affine_prefactor;
use crate::signal::{
    simpson, spectral_multiply, AbsCumulative, LatticeRowPlan, PlaneField, SignalGrid,
};
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };
const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum FiducialSpec {
    /// `f ↦ C f(i)`.
    #[serde(rename = "cauchy+")]
    CauchyPlus,
    /// `f ↦ C f(−i)`.
    #[serde(rename = "cauchy-")]
    CauchyMinus,
    /// `C f(i) − C f(−i)`, the Poisson integral at `i`.
    #[serde(rename = "poisson")]
    Poisson,
    /// The pair `(C f(i), C f(−i))`.
    #[serde(rename = "jump")]
    Jump,
    /// `f ↦ ∫ f · conj(w)`.
    #[serde(rename = "pair_with")]
    PairWith { w: SignalGrid },
    /// `f ↦ ½ ∫₋₁¹ |f|`.
    #[serde(rename = "maximal")]
    Maximal,
    #[serde(rename = "littlewood_paley")]
    LittlewoodPaley,
    #[serde(rename = "radon_line")]
    RadonLine,
}

impl FiducialSpec {
    pub fn name(&self) -> &'static str {
        match self {
            FiducialSpec::CauchyPlus => "cauchy+",
            FiducialSpec::CauchyMinus => "cauchy-",
            FiducialSpec::Poisson => "poisson",
            FiducialSpec::Jump => "jump",
            FiducialSpec::PairWith { .. } => "pair_with",
            FiducialSpec::Maximal => "maximal",
            FiducialSpec::LittlewoodPaley => "littlewood_paley",
            FiducialSpec::RadonLine => "radon_line",
        }
    }

    /// Number of complex components of a value, for fiducials acting on
    /// line signals pointwise in the group.
    pub fn u_dim(&self) -> Result<usize> {
        match self {
            FiducialSpec::Jump => Ok(2),
            FiducialSpec::LittlewoodPaley | FiducialSpec::RadonLine => {
                Err(Error::WrongVariant(format!(
                    "{} has a dedicated operation and no scalar arity",
                    self.name()
                )))
            }
            _ => Ok(1),
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, FiducialSpec::Maximal)
    }

    pub fn validate(&self) -> Result<()> {
        if let FiducialSpec::PairWith { w } = self {
            let norm = w.lp_norm(2.0)?;
            if !norm.is_finite() {
                return Err(invalid("pair_with weight must have finite L2 norm"));
            }
        }
        Ok(())
    }
}

/// A value of `F`.
#[derive(Clone, Debug, PartialEq)]
pub enum UValue {
    Scalar(C64),
    Pair(C64, C64),
    Real(f64),
    Signal(SignalGrid),
}

impl UValue {
    /// Complex components (a real value becomes one component).
    pub fn components(&self) -> Result<Vec<C64>> {
        match self {
            UValue::Scalar(z) => Ok(vec![*z]),
            UValue::Pair(u, v) => Ok(vec![*u, *v]),
            UValue::Real(r) => Ok(vec![C64::new(*r, 0.0)]),
            UValue::Signal(_) => Err(Error::WrongVariant(
                "signal-valued U has no components".into(),
            )),
        }
    }

    pub fn as_scalar(&self) -> Result<C64> {
        match self {
            UValue::Scalar(z) => Ok(*z),
            UValue::Real(r) => Ok(C64::new(*r, 0.0)),
            other => Err(Error::WrongVariant(format!(
                "expected a scalar value, got {other:?}"
            ))),
        }
    }
}

/// `½ ∫₋₁¹ |f|` with `|f|` piecewise linear between samples.
fn window_mean(f: &SignalGrid) -> f64 {
    0.5 * AbsCumulative::new(f).integral(-1.0, 1.0)
}

/// `∫ f·conj(w)` on `w`'s grid, `f` interpolated there.
fn pair_with(f: &SignalGrid, w: &SignalGrid) -> C64 {
    let prod: Vec<C64> = if f.check_same_grid(w).is_ok() {
        f.values()
            .iter()
            .zip(w.values())
            .map(|(u, v)| u * v.conj())
            .collect()
    } else {
        w.xs()
            .zip(w.values())
            .map(|(x, v)| f.interpolate_eval(x) * v.conj())
            .collect()
    };
    simpson(&prod, w.dx())
}

pub fn eval_fiducial(spec: &FiducialSpec, f: &SignalGrid) -> Result<UValue> {
    Ok(match spec {
        FiducialSpec::CauchyPlus => UValue::Scalar(f.cauchy_integral(I)?),
        FiducialSpec::CauchyMinus => UValue::Scalar(f.cauchy_integral(-I)?),
        FiducialSpec::Poisson => UValue::Scalar(f.cauchy_integral(I)? - f.cauchy_integral(-I)?),
        FiducialSpec::Jump => UValue::Pair(f.cauchy_integral(I)?, f.cauchy_integral(-I)?),
        FiducialSpec::PairWith { w } => UValue::Scalar(pair_with(f, w)),
        FiducialSpec::Maximal => UValue::Real(window_mean(f)),
        FiducialSpec::LittlewoodPaley | FiducialSpec::RadonLine => {
            return Err(Error::WrongVariant(format!(
                "{} is evaluated by its dedicated operation",
                spec.name()
            )))
        }
    })
}

/// `F` evaluated on affine images `ρ_p(a,b) f` without resampling `f`.
///
/// Each fiducial is rewritten in the variable `t = ax + b`:
/// Cauchy± become `a^{1/p} C f(b ± ia)`, the window mean becomes
/// `a^{1/p}/(2a) ∫_{b−a}^{b+a} |f|`, and the pairing reads `f` at `ax + b` on
/// the grid of the weight. This keeps the full accuracy of the sampled `f`
/// at scales where the image would no longer fit the sampling window.
pub struct PreparedFiducial<'a> {
    spec: &'a FiducialSpec,
    f: &'a SignalGrid,
    p: f64,
    abs: Option<AbsCumulative>,
}

impl<'a> PreparedFiducial<'a> {
    pub fn new(spec: &'a FiducialSpec, f: &'a SignalGrid, p: f64) -> Result<Self> {
        crate::signal::check_exponent(p)?;
        spec.u_dim()?;
        let abs = matches!(spec, FiducialSpec::Maximal).then(|| AbsCumulative::new(f));
        Ok(Self { spec, f, p, abs })
    }

    pub fn u_dim(&self) -> usize {
        self.spec.u_dim().expect("checked on construction")
    }

    /// Value of `F(ρ_p(a,b) f)`, components in the first `u_dim` slots.
    pub fn eval(&self, a: f64, b: f64) -> Result<[C64; 2]> {
        let k = affine_prefactor(self.p, a);
        let f = self.f;
        Ok(match self.spec {
            FiducialSpec::CauchyPlus => [f.cauchy_integral(C64::new(b, a))? * k, ZERO],
            FiducialSpec::CauchyMinus => [f.cauchy_integral(C64::new(b, -a))? * k, ZERO],
            FiducialSpec::Poisson => [
                (f.cauchy_integral(C64::new(b, a))? - f.cauchy_integral(C64::new(b, -a))?) * k,
                ZERO,
            ],
            FiducialSpec::Jump => [
                f.cauchy_integral(C64::new(b, a))? * k,
                f.cauchy_integral(C64::new(b, -a))? * k,
            ],
            FiducialSpec::PairWith { w } => {
                let prod: Vec<C64> = w
                    .xs()
                    .zip(w.values())
                    .map(|(x, v)| f.interpolate_eval(a * x + b) * v.conj())
                    .collect();
                [simpson(&prod, w.dx()) * k, ZERO]
            }
            FiducialSpec::Maximal => {
                let acc = self.abs.as_ref().expect("prepared for maximal");
                [
                    C64::new(k / (2.0 * a) * acc.integral(b - a, b + a), 0.0),
                    ZERO,
                ]
            }
            _ => unreachable!("rejected on construction"),
        })
    }

    /// One row `a = const` of the field, flattened node-major.
    pub fn eval_row(&self, a: f64, bs: &[f64]) -> Result<Vec<C64>> {
        self.eval_row_with(None, a, bs)
    }

    /// FFT set-up shared by every row over the same `bs` (Cauchy family and
    /// pairings).
    pub fn row_plan(&self, bs: &[f64]) -> Option<LatticeRowPlan<'a>> {
        match self.spec {
            FiducialSpec::CauchyPlus
            | FiducialSpec::CauchyMinus
            | FiducialSpec::Poisson
            | FiducialSpec::Jump
            | FiducialSpec::PairWith { .. } => self.f.row_plan(bs),
            _ => None,
        }
    }

    /// [`Self::eval_row`] reusing a plan built by [`Self::row_plan`] for `bs`.
    pub fn eval_row_with(
        &self,
        plan: Option<&LatticeRowPlan>,
        a: f64,
        bs: &[f64],
    ) -> Result<Vec<C64>> {
        let k = affine_prefactor(self.p, a);
        let f = self.f;
        let row = |im: f64| match plan {
            Some(plan) if im.is_finite() && im != 0.0 => Ok(plan.cauchy_row(im, bs)),
            _ => f.cauchy_integral_row(im, bs),
        };
        let scaled = |row: Vec<C64>| row.into_iter().map(|v| v * k).collect::<Vec<_>>();
        match self.spec {
            FiducialSpec::CauchyPlus => Ok(scaled(row(a)?)),
            FiducialSpec::CauchyMinus => Ok(scaled(row(-a)?)),
            FiducialSpec::Poisson => {
                let (up, down) = (row(a)?, row(-a)?);
                Ok(up.iter().zip(&down).map(|(u, d)| (u - d) * k).collect())
            }
            FiducialSpec::Jump => {
                let (up, down) = (row(a)?, row(-a)?);
                Ok(up
                    .iter()
                    .zip(&down)
                    .flat_map(|(u, d)| [u * k, d * k])
                    .collect())
            }
            FiducialSpec::PairWith { w } if plan.is_some() => {
                // a^{1/p} ∫ f(ax+b) w̄(x) dx = a^{1/p−1} ∫ f(y) w̄((y−b)/a) dy
                let dx = f.dx();
                let sums = plan
                    .expect("guarded")
                    .correlate(|e| w.interpolate_eval(-(e as f64) * dx / a).conj());
                Ok(scaled(sums.into_iter().map(|v| v * (dx / a)).collect()))
            }
            _ => {
                let mut out = Vec::with_capacity(bs.len() * self.u_dim());
                for &b in bs {
                    let v = self.eval(a, b)?;
                    out.extend_from_slice(&v[..self.u_dim()]);
                }
                Ok(out)
            }
        }
    }
}

/// `(Ff)^(λ) = χ(λ) f̂(λ)` with `χ` the indicator of `1 ≤ |λ| ≤ 2`
/// (boundary bins included).
pub fn littlewood_paley_project(f: &SignalGrid) -> Result<SignalGrid> {
    let tol = 1e-12;
    spectral_multiply(f, |l| {
        let m = l.abs();
        if m >= 1.0 - tol && m <= 2.0 + tol {
            C64::new(1.0, 0.0)
        } else {
            ZERO
        }
    })
}

/// `∫ f(x, 0) dx` along the sampled x-axis.
pub fn radon_line_functional(f: &PlaneField) -> Result<C64> {
    let ys = f.y_axis();
    if !ys.contains(0.0) {
        return Err(invalid(format!(
            "the line y = 0 is outside the sampled y range [{}, {}]",
            ys.start,
            ys.end()
        )));
    }
    let xs = f.x_axis();
    let slice: Vec<C64> = (0..xs.n).map(|i| f.eval(xs.at(i), 0.0)).collect();
    Ok(simpson(&slice, xs.step))
}

/// `|F(t·f) − t·F(f)|`, the largest over components.
pub fn homogeneity_check(spec: &FiducialSpec, f: &SignalGrid, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!(
            "homogeneity factor must be positive, got {t}"
        )));
    }
    let tf = f.scaled(C64::new(t, 0.0));
    let (lhs, rhs) = match spec {
        FiducialSpec::LittlewoodPaley => {
            let u = littlewood_paley_project(&tf)?;
            let v = littlewood_paley_project(f)?.scaled(C64::new(t, 0.0));
            return Ok(u
                .combine(C64::new(1.0, 0.0), &v, C64::new(-1.0, 0.0))?
                .sup_norm());
        }
        _ => (
            eval_fiducial(spec, &tf)?.components()?,
            eval_fiducial(spec, f)?.components()?,
        ),
    };
    Ok(lhs
        .iter()
        .zip(&rhs)
        .map(|(u, v)| (u - v * t).norm())
        .fold(0.0, f64::max))
}

/// Poisson kernel integral `(a/π) ∫ f(t) / ((t − b)² + a²) dt` evaluated by
/// direct quadrature; an independent check on the `C₊ − C₋` construction.
pub fn poisson_kernel_integral(f: &SignalGrid, b: f64, a: f64) -> C64 {
    let prod: Vec<C64> = f
        .xs()
        .zip(f.values())
        .map(|(t, v)| v * (a / PI / ((t - b) * (t - b) + a * a)))
        .collect();
    simpson(&prod, f.dx())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Axis;

    fn rational() -> SignalGrid {
        SignalGrid::from_real_fn(-256.0, 1.0 / 64.0, 32768, |t| 1.0 / (1.0 + t * t)).unwrap()
    }

    fn gaussian() -> SignalGrid {
        SignalGrid::from_real_fn(-16.0, 1.0 / 128.0, 4096, |x| (-x * x).exp()).unwrap()
    }

    #[test]
    fn catalogue_examples() {
        let r = rational();
        let v = eval_fiducial(&FiducialSpec::CauchyPlus, &r)
            .unwrap()
            .as_scalar()
            .unwrap();
        assert!((v - 0.25).norm() <= 1e-6);
        let v = eval_fiducial(&FiducialSpec::Poisson, &r)
            .unwrap()
            .as_scalar()
            .unwrap();
        assert!((v - 0.5).norm() <= 1e-6);
        // independent Poisson-kernel oracle fixes the sign convention
        assert!((v - poisson_kernel_integral(&r, 0.0, 1.0)).norm() <= 1e-6);

        let one = SignalGrid::from_real_fn(-4.0, 1.0 / 64.0, 513, |_| 1.0).unwrap();
        let m = eval_fiducial(&FiducialSpec::Maximal, &one).unwrap();
        assert!(matches!(m, UValue::Real(x) if (x - 1.0).abs() < 1e-14));
        let abs = SignalGrid::from_real_fn(-4.0, 1.0 / 64.0, 513, f64::abs).unwrap();
        let m = eval_fiducial(&FiducialSpec::Maximal, &abs).unwrap();
        assert!(matches!(m, UValue::Real(x) if (x - 0.5).abs() < 1e-14));

        let g = gaussian();
        let v = eval_fiducial(&FiducialSpec::PairWith { w: g.clone() }, &g)
            .unwrap()
            .as_scalar()
            .unwrap();
        assert!((v - (PI / 2.0).sqrt()).norm() <= 1e-6);

        assert!(eval_fiducial(&FiducialSpec::LittlewoodPaley, &g).is_err());
    }

    #[test]
    fn jump_components_are_consistent() {
        let g = gaussian();
        let UValue::Pair(p, m) = eval_fiducial(&FiducialSpec::Jump, &g).unwrap() else {
            panic!("jump is pair-valued")
        };
        let poisson = eval_fiducial(&FiducialSpec::Poisson, &g)
            .unwrap()
            .as_scalar()
            .unwrap();
        assert_eq!(p - m, poisson);
    }

    #[test]
    fn prepared_matches_resampled_evaluation() {
        let g =
            SignalGrid::from_real_fn(-16.0, 1.0 / 64.0, 2048, |x| (-(x - 0.3) * (x - 0.3)).exp())
                .unwrap();
        let specs = [
            FiducialSpec::CauchyPlus,
            FiducialSpec::Poisson,
            FiducialSpec::Jump,
            FiducialSpec::Maximal,
            FiducialSpec::PairWith { w: gaussian() },
        ];
        for spec in &specs {
            for p in [1.0, 2.0, f64::INFINITY] {
                let prep = PreparedFiducial::new(spec, &g, p).unwrap();
                for &(a, b) in &[(1.0, 0.0), (1.5, -0.4), (0.7, 0.9)] {
                    let pair = crate::grouplib::AffinePoint::new(a, b).unwrap();
                    let image = crate::repr::affine_rep_apply(p, pair, &g).unwrap().signal;
                    let direct = eval_fiducial(spec, &image).unwrap().components().unwrap();
                    let fast = prep.eval(a, b).unwrap();
                    // the window mean models |f| piecewise linearly on two
                    // different grids: O(dx²) apart
                    let tol = if spec.is_linear() { 1e-8 } else { 1e-4 };
                    for (u, v) in direct.iter().zip(&fast) {
                        assert!(
                            (u - v).norm() <= tol,
                            "{} p={p} ({a},{b}): {u} vs {v}",
                            spec.name()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn rows_match_pointwise() {
        let g = gaussian();
        let bs: Vec<f64> = (0..64).map(|i| -2.0 + i as f64 / 16.0).collect();
        for spec in [FiducialSpec::Jump, FiducialSpec::Maximal] {
            let prep = PreparedFiducial::new(&spec, &g, 2.0).unwrap();
            let row = prep.eval_row(0.3, &bs).unwrap();
            let d = prep.u_dim();
            for (i, &b) in bs.iter().enumerate() {
                let v = prep.eval(0.3, b).unwrap();
                for c in 0..d {
                    assert!((row[i * d + c] - v[c]).norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn planned_rows_match_pointwise() {
        let g = gaussian();
        let bs: Vec<f64> = (0..64).map(|i| g.x_at(40 + 2 * i)).collect();
        let w =
            SignalGrid::from_real_fn(-3.0, 1.0 / 64.0, 384, |x| (-2.0 * (x - 0.5).powi(2)).exp())
                .unwrap();
        for spec in [FiducialSpec::Poisson, FiducialSpec::PairWith { w }] {
            let prep = PreparedFiducial::new(&spec, &g, 2.0).unwrap();
            let plan = prep.row_plan(&bs).expect("aligned row");
            for a in [0.3, 1.0, 1.7] {
                let row = prep.eval_row_with(Some(&plan), a, &bs).unwrap();
                for (i, &b) in bs.iter().enumerate() {
                    let v = prep.eval(a, b).unwrap()[0];
                    assert!(
                        (row[i] - v).norm() <= 1e-7,
                        "{} a={a} b={b}: {} vs {v}",
                        spec.name(),
                        row[i]
                    );
                }
            }
        }
    }

    #[test]
    fn littlewood_paley_examples() {
        let n = 4096;
        let dx = 1.0 / 32.0;
        let window = |x: f64| (-x * x / 128.0).exp();
        let tone = |w: f64| {
            SignalGrid::from_fn(-64.0, dx, n, |x| C64::from_polar(window(x), w * x)).unwrap()
        };
        let inside = tone(1.5);
        let once = littlewood_paley_project(&inside).unwrap();
        let twice = littlewood_paley_project(&once).unwrap();
        let diff = |u: &SignalGrid, v: &SignalGrid| {
            u.combine(C64::new(1.0, 0.0), v, C64::new(-1.0, 0.0))
                .unwrap()
                .lp_norm(2.0)
                .unwrap()
        };
        assert!(diff(&once, &twice) <= 1e-12);
        assert!(diff(&once, &inside) <= 1e-3 * inside.lp_norm(2.0).unwrap());
        let outside = tone(3.0);
        let out = littlewood_paley_project(&outside).unwrap();
        assert!(out.lp_norm(2.0).unwrap() <= 1e-3 * outside.lp_norm(2.0).unwrap());
    }

    #[test]
    fn radon_line_examples() {
        let ax = Axis::span(-2.0, 2.0, 401).unwrap();
        let step = ax.step;
        let zero = PlaneField::from_fn(ax, ax, |_, _| ZERO).unwrap();
        assert_eq!(radon_line_functional(&zero).unwrap(), ZERO);
        let disk = |cx: f64, cy: f64| {
            PlaneField::from_fn(ax, Axis::span(-2.0, 4.0, 601).unwrap(), move |x, y| {
                if (x - cx).powi(2) + (y - cy).powi(2) <= 1.0 {
                    C64::new(1.0, 0.0)
                } else {
                    ZERO
                }
            })
            .unwrap()
        };
        assert!((radon_line_functional(&disk(0.0, 0.0)).unwrap().re - 2.0).abs() <= 2.0 * step);
        assert_eq!(radon_line_functional(&disk(0.0, 2.0)).unwrap(), ZERO);
        let high = PlaneField::from_fn(ax, Axis::span(1.0, 2.0, 11).unwrap(), |_, _| ZERO).unwrap();
        assert!(radon_line_functional(&high).is_err());
    }

    #[test]
    fn homogeneity_examples() {
        let g = gaussian()
            .map(|x, v| v * C64::new(x.cos(), x.sin()))
            .unwrap();
        assert!(homogeneity_check(&FiducialSpec::Maximal, &g, 3.0).unwrap() <= 1e-12);
        assert!(homogeneity_check(&FiducialSpec::CauchyPlus, &g, 2.0).unwrap() <= 1e-12);
        let neg = g.scaled(C64::new(-1.0, 0.0));
        assert_eq!(
            eval_fiducial(&FiducialSpec::Maximal, &g).unwrap(),
            eval_fiducial(&FiducialSpec::Maximal, &neg).unwrap()
        );
        assert!(homogeneity_check(&FiducialSpec::Maximal, &g, -1.0).is_err());
    }

    #[test]
    fn spec_json_shapes() {
        let f: FiducialSpec = serde_json::from_str(r#"{"type":"cauchy+"}"#).unwrap();
        assert_eq!(f, FiducialSpec::CauchyPlus);
        let f: FiducialSpec = serde_json::from_str(r#"{"type":"maximal"}"#).unwrap();
        assert_eq!(f.u_dim().unwrap(), 1);
        assert_eq!(
            serde_json::to_string(&FiducialSpec::Jump).unwrap(),
            r#"{"type":"jump"}"#
        );
        let w = r#"{"type":"pair_with","w":{"x0":0.0,"dx":1.0,"values":[[1.0,0.0],[0.0,0.0]]}}"#;
        assert!(matches!(
            serde_json::from_str::<FiducialSpec>(w).unwrap(),
            FiducialSpec::PairWith { .. }
        ));
        assert!(serde_json::from_str::<FiducialSpec>(r#"{"type":"nope"}"#).is_err());
    }
}
