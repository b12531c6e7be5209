//! Representations acting on signals, half-plane fields and matrices.
//!
//! Every applier takes the pair or matrix that appears *inside* the action
//! formula (the coordinates of `g⁻¹`), so formulas read verbatim:
//!
//! * affine: `[ρ_p(a,b) f](x) = a^{1/p} f(ax + b)`;
//! * SL(2,R) on the line: `f((ax+b)/(cx+d)) / (cx+d)`;
//! * SL(2,R) on the half-plane: `F((az+b)/(cz+d)) / (cz+d)²`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::grouplib::{AffinePoint, Sl2Element, Su11Element};
use crate::opmodel::{spectral_radius_gelfand, ComplexMatrix};
use crate::signal::{check_exponent, AbsCumulative, HalfPlaneField, SignalGrid};
use crate::C64;

/// Exponent `p ∈ [1, ∞]`; `∞` is written `"inf"` in JSON.
pub mod exponent {
    use super::*;

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if p.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*p)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(p),
            Raw::Text(t) => match t.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
                other => other
                    .parse()
                    .map_err(|_| serde::de::Error::custom(format!("bad exponent {t:?}"))),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ReprSpec {
    /// `ρ_p` on `L^p(R)`.
    Affine {
        #[serde(with = "exponent")]
        p: f64,
    },
    /// SL(2,R) on `L²(R)` by linear-fractional substitution.
    Sl2Line,
    /// SL(2,R) on the upper half-plane with weight `(cz+d)⁻²`.
    Sl2HalfPlane,
    /// A finite unitary representation listed element by element.
    UnitaryMatrix { matrices: Vec<ComplexMatrix> },
}

impl ReprSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ReprSpec::Affine { p } => check_exponent(*p).map_err(|e| Error::Config {
                field: "rho.p".into(),
                message: e.to_string(),
            }),
            ReprSpec::UnitaryMatrix { matrices } => {
                for (k, m) in matrices.iter().enumerate() {
                    if !m.is_unitary(1e-10) {
                        return Err(Error::Config {
                            field: format!("rho.matrices[{k}]"),
                            message: "matrix is not unitary to 1e-10".into(),
                        });
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Exponent of the affine action realised by this representation: `p`
    /// for `Affine`, 2 for `Sl2Line` restricted to the affine subgroup.
    pub fn affine_exponent(&self) -> Result<f64> {
        match self {
            ReprSpec::Affine { p } => {
                check_exponent(*p)?;
                Ok(*p)
            }
            ReprSpec::Sl2Line => Ok(2.0),
            other => Err(Error::WrongVariant(format!(
                "representation {other:?} does not act on signals by the affine group"
            ))),
        }
    }
}

/// `a^{1/p}`, with the convention `a^{1/∞} = 1`.
pub fn affine_prefactor(p: f64, a: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        a.powf(1.0 / p)
    }
}

/// A resampled signal plus bookkeeping about what fell off the window.
#[derive(Clone, Debug, PartialEq)]
pub struct Resampled {
    pub signal: SignalGrid,
    /// Fraction of `∫|f|²` that the resampled window cannot see.
    pub lost_fraction: f64,
    /// Nodes zeroed because they sit on a pole of the action.
    pub zeroed_nodes: usize,
}

fn energy_signal(f: &SignalGrid) -> SignalGrid {
    f.map(|_, v| C64::new(v.norm_sqr(), 0.0)).expect("finite")
}

/// `x ↦ a^{1/p} f(ax + b)` resampled on `f`'s grid.
pub fn affine_rep_apply(p: f64, pair: AffinePoint, f: &SignalGrid) -> Result<Resampled> {
    check_exponent(p)?;
    let (a, b) = (pair.a(), pair.b());
    let k = affine_prefactor(p, a);
    let signal = f.map(|x, _| f.interpolate_eval(a * x + b) * k)?;
    let energy = AbsCumulative::new(&energy_signal(f));
    let total = energy.integral(f.x0(), f.x_max());
    let seen = energy.integral(a * f.x0() + b, a * f.x_max() + b);
    let lost_fraction = if total > 0.0 {
        (1.0 - seen / total).max(0.0)
    } else {
        0.0
    };
    Ok(Resampled {
        signal,
        lost_fraction,
        zeroed_nodes: 0,
    })
}

/// Below this `|cx + d|` a node is treated as a pole and zeroed.
pub const POLE_GUARD: f64 = 1e-8;

/// `x ↦ f((ax+b)/(cx+d)) / (cx+d)` with `m = (a b; c d)`.
///
/// The action is unitary on `L²(R)`, so the lost fraction is read off as
/// `1 − ‖ρf‖²/‖f‖²`.
pub fn sl2_line_rep_apply(m: &Sl2Element, f: &SignalGrid) -> Result<Resampled> {
    let (a, b, c, d) = m.entries();
    let mut zeroed = 0;
    let values = f
        .xs()
        .map(|x| {
            let den = c * x + d;
            if den.abs() < POLE_GUARD {
                zeroed += 1;
                C64::new(0.0, 0.0)
            } else {
                f.interpolate_eval((a * x + b) / den) / den
            }
        })
        .collect();
    let signal = f.with_values(values)?;
    let before = f.lp_norm(2.0)?.powi(2);
    let after = signal.lp_norm(2.0)?.powi(2);
    let lost_fraction = if before > 0.0 {
        (1.0 - after / before).max(0.0)
    } else {
        0.0
    };
    Ok(Resampled {
        signal,
        lost_fraction,
        zeroed_nodes: zeroed,
    })
}

/// `z ↦ F((az+b)/(cz+d)) / (cz+d)²` with `m = (a b; c d)`; points mapped
/// outside the sampled window read as 0.
pub fn sl2_halfplane_rep_apply(m: &Sl2Element, field: &HalfPlaneField) -> Result<HalfPlaneField> {
    let (a, b, c, d) = m.entries();
    let grid = field.grid().clone();
    HalfPlaneField::from_fn(grid, |z| {
        let den = z * c + d;
        field.eval((z * a + b) / den) / (den * den)
    })
}

/// `(ρ_B(g)A) = A·ρ(g⁻¹) = A·ρ(g)*` for the `g`-th listed unitary.
pub fn operator_rep_apply(rho: &ReprSpec, g: usize, a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let ReprSpec::UnitaryMatrix { matrices } = rho else {
        return Err(Error::WrongVariant(format!(
            "operator representation needs unitary matrices, got {rho:?}"
        )));
    };
    let u = matrices.get(g).ok_or_else(|| {
        invalid(format!(
            "group element {g} out of range ({} listed)",
            matrices.len()
        ))
    })?;
    operator_rep_apply_matrix(u, a)
}

/// Same as [`operator_rep_apply`] for an explicit `ρ(g)`.
pub fn operator_rep_apply_matrix(
    rho_g: &ComplexMatrix,
    a: &ComplexMatrix,
) -> Result<ComplexMatrix> {
    if !rho_g.is_unitary(1e-10) {
        return Err(invalid("rho(g) is not unitary"));
    }
    a.mul(&rho_g.adjoint())
}

/// `g·T = (αT + βI)(β̄T + ᾱI)⁻¹`.
pub fn mobius_on_operator(g: &Su11Element, t: &ComplexMatrix) -> Result<ComplexMatrix> {
    let r = spectral_radius_gelfand(t).radius;
    if r >= 1.0 {
        return Err(invalid(format!(
            "Möbius action needs spectral radius below 1, got {r}"
        )));
    }
    let (alpha, beta) = (g.alpha(), g.beta());
    let num = t.scale(alpha).shift(beta);
    let den = t.scale(beta.conj()).shift(alpha.conj());
    let inv = den
        .inverse()
        .map_err(|_| Error::Singular("denominator of the Möbius action"))?;
    num.mul(&inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grouplib::make_affine_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn gaussian(n: usize, lo: f64, hi: f64) -> SignalGrid {
        let dx = (hi - lo) / n as f64;
        SignalGrid::from_real_fn(lo, dx, n, |x| (-x * x).exp()).unwrap()
    }

    #[test]
    fn spec_json_shapes() {
        let r: ReprSpec = serde_json::from_str(r#"{"type":"affine","p":2}"#).unwrap();
        assert_eq!(r, ReprSpec::Affine { p: 2.0 });
        let r: ReprSpec = serde_json::from_str(r#"{"type":"affine","p":"inf"}"#).unwrap();
        assert_eq!(r.affine_exponent().unwrap(), f64::INFINITY);
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"type":"affine","p":"inf"}"#
        );
        let r: ReprSpec = serde_json::from_str(r#"{"type":"sl2_line"}"#).unwrap();
        assert_eq!(r.affine_exponent().unwrap(), 2.0);
        let bad: ReprSpec = serde_json::from_str(r#"{"type":"affine","p":0.5}"#).unwrap();
        assert!(matches!(bad.validate(), Err(Error::Config { ref field, .. }) if field == "rho.p"));
        assert!(ReprSpec::Sl2HalfPlane.affine_exponent().is_err());
    }

    #[test]
    fn affine_examples() {
        let f = gaussian(1024, -8.0, 8.0);
        let same = affine_rep_apply(2.0, AffinePoint::IDENTITY, &f).unwrap();
        assert_eq!(same.signal, f);
        assert_eq!(same.lost_fraction, 0.0);

        let ind = SignalGrid::from_real_fn(-2.0, 1.0 / 256.0, 1025, |x| {
            if (0.0..=1.0).contains(&x) {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let out =
            affine_rep_apply(f64::INFINITY, AffinePoint::new(2.0, 0.0).unwrap(), &ind).unwrap();
        for (k, v) in out.signal.values().iter().enumerate() {
            let x = out.signal.x_at(k);
            if (0.0..=0.5).contains(&x) {
                assert!((v.re - 1.0).abs() < 1e-12, "x = {x}");
            } else if x < -0.01 || x > 0.51 {
                assert!(v.norm() < 1e-12, "x = {x}");
            }
        }

        let g = gaussian(4096, -16.0, 16.0);
        let out = affine_rep_apply(2.0, AffinePoint::new(4.0, 0.0).unwrap(), &g).unwrap();
        assert!((out.signal.lp_norm(2.0).unwrap() - g.lp_norm(2.0).unwrap()).abs() <= 1e-6);
        assert!(out.lost_fraction < 1e-12);

        let far = affine_rep_apply(2.0, AffinePoint::new(1.0, 20.0).unwrap(), &g).unwrap();
        assert!(far.lost_fraction > 0.99);
    }

    #[test]
    fn affine_is_anti_homomorphic_on_pairs() {
        let f =
            SignalGrid::from_real_fn(-16.0, 1.0 / 64.0, 2048, |x| (-(x * x) / 4.0).exp()).unwrap();
        let c1 = AffinePoint::new(1.3, 0.4).unwrap();
        let c2 = AffinePoint::new(0.8, -0.7).unwrap();
        for p in [1.0, 2.0, f64::INFINITY] {
            let step = affine_rep_apply(p, c2, &f).unwrap().signal;
            let twice = affine_rep_apply(p, c1, &step).unwrap().signal;
            let once = affine_rep_apply(p, c2.compose(&c1), &f).unwrap().signal;
            let err = twice
                .combine(C64::new(1.0, 0.0), &once, C64::new(-1.0, 0.0))
                .unwrap()
                .sup_norm();
            assert!(err <= 1e-8, "p = {p}: {err}");
        }
    }

    #[test]
    fn sl2_line_examples() {
        let f = gaussian(2048, -16.0, 16.0);
        let same = sl2_line_rep_apply(&Sl2Element::IDENTITY, &f).unwrap();
        assert_eq!(same.signal, f);

        let (a, b) = (1.7f64, -0.6);
        let m = Sl2Element::new(a.sqrt(), b / a.sqrt(), 0.0, 1.0 / a.sqrt()).unwrap();
        let lhs = sl2_line_rep_apply(&m, &f).unwrap().signal;
        let rhs = affine_rep_apply(2.0, AffinePoint::new(a, b).unwrap(), &f)
            .unwrap()
            .signal;
        let err = lhs
            .combine(C64::new(1.0, 0.0), &rhs, C64::new(-1.0, 0.0))
            .unwrap()
            .sup_norm();
        assert!(err <= 1e-10, "{err}");

        // rotation by a quarter turn hits a pole at x = 0
        let q = sl2_line_rep_apply(&Sl2Element::rotation(PI / 2.0), &f).unwrap();
        assert_eq!(q.zeroed_nodes, 1);
    }

    #[test]
    fn halfplane_examples() {
        let grid = make_affine_grid(0.25, 4.0, 33, -4.0, 4.0, 129).unwrap();
        let field = HalfPlaneField::from_fn(grid, |z| {
            C64::new(1.0, 0.0) / (z + C64::new(0.0, 1.0)).powi(2)
        })
        .unwrap();
        let same = sl2_halfplane_rep_apply(&Sl2Element::IDENTITY, &field).unwrap();
        assert!(same
            .values()
            .iter()
            .zip(field.values())
            .all(|(u, v)| (u - v).norm() < 1e-12));

        let shift = Sl2Element::new(1.0, 1.0, 0.0, 1.0).unwrap();
        let moved = sl2_halfplane_rep_apply(&shift, &field).unwrap();
        let g = field.grid();
        for ia in 0..g.n_a() {
            for ib in 0..g.n_b() - 16 {
                // b step is 1/16, so b + 1 is sixteen columns to the right
                assert!((moved.get(ia, ib) - field.get(ia, ib + 16)).norm() < 1e-12);
            }
        }

        let g1 = Sl2Element::new(1.0, 0.3, 0.0, 1.0).unwrap();
        let g2 = Sl2Element::new(1.1, 0.0, 0.2, 1.0 / 1.1).unwrap();
        let two =
            sl2_halfplane_rep_apply(&g1, &sl2_halfplane_rep_apply(&g2, &field).unwrap()).unwrap();
        let one = sl2_halfplane_rep_apply(&g2.compose(&g1), &field).unwrap();
        let mut worst: f64 = 0.0;
        let inside = |m: &Sl2Element, z: C64| {
            let w = m.mobius(z);
            // a few cells of margin: bilinear reads touch the neighbouring nodes
            let margin = (3.0 * g.log_step()).exp();
            w.im > g.a_min() * margin
                && w.im < g.a_max() / margin
                && w.re > g.b_min() + 3.0 * g.b_step()
                && w.re < g.b_max() - 3.0 * g.b_step()
        };
        for ia in 0..g.n_a() {
            for ib in 0..g.n_b() {
                let z = C64::new(g.b_values()[ib], g.a_values()[ia]);
                if inside(&g1, z) && inside(&g2, g1.mobius(z)) {
                    worst = worst.max((two.get(ia, ib) - one.get(ia, ib)).norm());
                }
            }
        }
        assert!(worst <= 5e-3, "{worst}");
    }

    fn random_contraction(rng: &mut impl Rng, n: usize) -> ComplexMatrix {
        let data = (0..n * n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let m = ComplexMatrix::new(n, data).unwrap();
        let r = rng.gen_range(0.1..0.95);
        m.scale(C64::new(r / m.norm_op(), 0.0))
    }

    fn random_su11(rng: &mut impl Rng) -> Su11Element {
        let z = C64::from_polar(rng.gen_range(0.0..0.9), rng.gen_range(-PI..PI));
        Su11Element::from_phi_z(rng.gen_range(-PI..PI), z).unwrap()
    }

    #[test]
    fn mobius_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = random_contraction(&mut rng, 3);
        let same = mobius_on_operator(&Su11Element::IDENTITY, &t).unwrap();
        assert!(same.sub(&t).unwrap().norm_max() < 1e-15);

        let phi = 0.8;
        let rot = Su11Element::from_phi_z(phi, C64::new(0.0, 0.0)).unwrap();
        let out = mobius_on_operator(&rot, &t).unwrap();
        assert!(
            out.sub(&t.scale(C64::from_polar(1.0, phi)))
                .unwrap()
                .norm_max()
                < 1e-14
        );

        for _ in 0..100 {
            let t = random_contraction(&mut rng, 3);
            let (g1, g2) = (random_su11(&mut rng), random_su11(&mut rng));
            let lhs = mobius_on_operator(&g1.compose(&g2), &t).unwrap();
            let rhs = mobius_on_operator(&g1, &mobius_on_operator(&g2, &t).unwrap()).unwrap();
            assert!(lhs.sub(&rhs).unwrap().norm_max() <= 1e-10);
            assert!(spectral_radius_gelfand(&lhs).radius < 1.0);
        }
        let big = ComplexMatrix::scalar(C64::new(1.2, 0.0));
        assert!(mobius_on_operator(&rot, &big).is_err());
    }

    #[test]
    fn operator_rep_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_contraction(&mut rng, 2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let u1 = ComplexMatrix::from_rows(vec![
            vec![C64::new(s, 0.0), C64::new(0.0, s)],
            vec![C64::new(0.0, s), C64::new(s, 0.0)],
        ])
        .unwrap();
        let u2 =
            ComplexMatrix::diag(&[C64::from_polar(1.0, 0.3), C64::from_polar(1.0, -1.1)]).unwrap();
        let rho = ReprSpec::UnitaryMatrix {
            matrices: vec![
                ComplexMatrix::identity(2),
                u1.clone(),
                u2.clone(),
                u1.mul(&u2).unwrap(),
            ],
        };
        rho.validate().unwrap();
        assert_eq!(operator_rep_apply(&rho, 0, &a).unwrap(), a);
        let id = operator_rep_apply(&rho, 1, &ComplexMatrix::identity(2)).unwrap();
        assert!(id.sub(&u1.adjoint()).unwrap().norm_max() < 1e-15);
        let chained =
            operator_rep_apply(&rho, 1, &operator_rep_apply(&rho, 2, &a).unwrap()).unwrap();
        let direct = operator_rep_apply(&rho, 3, &a).unwrap();
        assert!(chained.sub(&direct).unwrap().norm_max() <= 1e-12);

        let x = vec![C64::new(0.3, -0.2), C64::new(1.0, 0.5)];
        let lhs = direct.mul_vec(&x).unwrap();
        let rhs = a
            .mul_vec(&u1.mul(&u2).unwrap().adjoint().mul_vec(&x).unwrap())
            .unwrap();
        assert!(lhs.iter().zip(&rhs).all(|(u, v)| (u - v).norm() <= 1e-12));
        assert!(operator_rep_apply(&rho, 9, &a).is_err());
        assert!(operator_rep_apply(&ReprSpec::Sl2Line, 0, &a).is_err());
    }
}
