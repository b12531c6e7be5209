//! The invariant suite behind `covtrans verify`: one group of checks per
//! property, each measured against an analytic oracle at a fixed setup.
//!
//! Every check reports its measured value, the tolerance and which side of
//! it counts as passing, so reports stay comparable across runs.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiducial::{littlewood_paley_project, FiducialSpec};
use crate::grouplib::{make_affine_grid, AffineGrid, AffinePoint, Su11Element};
use crate::opmodel::{
    characteristic_function, numerical_range_sample, numerical_range_support,
    spectral_radius_gelfand, ComplexMatrix,
};
use crate::pairing::{
    inverse_covariant_transform, jump_difference_field, jump_reconstruction_defect,
    least_squares_constant, PairingSpec,
};
use crate::repr::{affine_rep_apply, mobius_on_operator, ReprSpec};
use crate::signal::{Axis, PlaneField, SignalGrid};
use crate::xform::{
    cauchy_riemann_residual, covariant_transform, covariant_transform_at, derived_rep_apply,
    induced_coset_residual, interior_residual, left_shift_field, maximal_function_refined,
    radon_transform, shift_invariant_norm, DerivedGenerator,
};
use crate::C64;

const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// Passes when `value ≤ tolerance`.
    AtMost,
    /// Passes when `value ≥ tolerance`.
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub group: String,
    pub value: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub seed: u64,
    pub checks: Vec<Check>,
    pub passed: usize,
    pub failed: usize,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.failed == 0
    }
}

/// Groups in suite order.
pub const GROUPS: [&str; 11] = [
    "intertwining",
    "cauchy_field",
    "maximal",
    "invariant_norm",
    "cauchy_riemann",
    "null_solution",
    "induced",
    "jump_reconstruction",
    "littlewood_paley",
    "radon",
    "operator_models",
];

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyOptions {
    #[serde(default)]
    pub seed: u64,
    /// Subset of [`GROUPS`]; all when absent.
    #[serde(default)]
    pub groups: Option<Vec<String>>,
    /// Replacement tolerances keyed by check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

impl VerifyOptions {
    pub fn validate(&self) -> Result<()> {
        if let Some(groups) = &self.groups {
            for g in groups {
                if !GROUPS.contains(&g.as_str()) {
                    return Err(Error::Config {
                        field: "verify.groups".into(),
                        message: format!("unknown check group `{g}`"),
                    });
                }
            }
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v > 0.0) {
                return Err(Error::Config {
                    field: format!("tolerances.{k}"),
                    message: "tolerances must be positive".into(),
                });
            }
        }
        Ok(())
    }
}

/// Collects checks for one group.
pub struct Recorder<'a> {
    group: &'static str,
    overrides: &'a BTreeMap<String, f64>,
    checks: Vec<Check>,
}

impl<'a> Recorder<'a> {
    fn new(group: &'static str, overrides: &'a BTreeMap<String, f64>) -> Self {
        Self {
            group,
            overrides,
            checks: Vec::new(),
        }
    }

    fn push(&mut self, name: &str, value: f64, tolerance: f64, relation: Relation) {
        let name = format!("{}.{}", self.group, name);
        let tolerance = self.overrides.get(&name).copied().unwrap_or(tolerance);
        let pass = match relation {
            Relation::AtMost => value <= tolerance,
            Relation::AtLeast => value >= tolerance,
        };
        self.checks.push(Check {
            name,
            group: self.group.to_string(),
            value,
            tolerance,
            relation,
            pass,
        });
    }

    fn at_most(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push(name, value, tolerance, Relation::AtMost);
    }

    fn at_least(&mut self, name: &str, value: f64, tolerance: f64) {
        self.push(name, value, tolerance, Relation::AtLeast);
    }
}

/// Runs one group with the given seed; checks come back in a fixed order.
pub fn run_group(group: &str, seed: u64, overrides: &BTreeMap<String, f64>) -> Result<Vec<Check>> {
    let name = GROUPS
        .iter()
        .find(|g| **g == group)
        .ok_or_else(|| Error::Config {
            field: "verify.groups".into(),
            message: format!("unknown check group `{group}`"),
        })?;
    let mut rec = Recorder::new(name, overrides);
    // each group draws from its own stream so subsets reproduce the full run
    let stream = GROUPS.iter().position(|g| g == name).unwrap_or(0) as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    match *name {
        "intertwining" => intertwining(&mut rec, &mut rng)?,
        "cauchy_field" => cauchy_field(&mut rec, &mut rng)?,
        "maximal" => maximal(&mut rec)?,
        "invariant_norm" => invariant_norm(&mut rec)?,
        "cauchy_riemann" => cauchy_riemann(&mut rec)?,
        "null_solution" => null_solution(&mut rec)?,
        "induced" => induced(&mut rec)?,
        "jump_reconstruction" => jump_reconstruction(&mut rec)?,
        "littlewood_paley" => littlewood_paley(&mut rec)?,
        "radon" => radon(&mut rec)?,
        "operator_models" => operator_models(&mut rec, &mut rng)?,
        _ => unreachable!(),
    }
    Ok(rec.checks)
}

pub fn run_suite(opts: &VerifyOptions) -> Result<Report> {
    opts.validate()?;
    let groups: Vec<&str> = match &opts.groups {
        Some(g) => GROUPS
            .iter()
            .copied()
            .filter(|n| g.iter().any(|s| s == n))
            .collect(),
        None => GROUPS.to_vec(),
    };
    let mut checks = Vec::new();
    for g in groups {
        checks.extend(run_group(g, opts.seed, &opts.tolerances)?);
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    Ok(Report {
        seed: opts.seed,
        failed: checks.len() - passed,
        passed,
        checks,
    })
}

// ---------------------------------------------------------------------------
// Signals and grids shared by the groups
// ---------------------------------------------------------------------------

/// `1/(1+t²)` on `[−l, l)`.
pub fn rational_signal(l: f64, dx: f64) -> SignalGrid {
    let n = (2.0 * l / dx).round() as usize;
    SignalGrid::from_real_fn(-l, dx, n, |t| 1.0 / (1.0 + t * t)).expect("valid grid")
}

/// `C(z) = i / (2(z + i))`, the Cauchy integral of `1/(1+t²)` for `Im z > 0`.
pub fn rational_cauchy(z: C64) -> C64 {
    C64::new(0.0, 1.0) / ((z + C64::new(0.0, 1.0)) * 2.0)
}

/// `1_{[lo,hi]}` with both end nodes set.
pub fn indicator_signal(x0: f64, dx: f64, n: usize, lo: f64, hi: f64) -> SignalGrid {
    SignalGrid::from_real_fn(
        x0,
        dx,
        n,
        |x| if (lo..=hi).contains(&x) { 1.0 } else { 0.0 },
    )
    .expect("valid grid")
}

/// C^∞ plateau: 1 on `[−r, r]`, 0 beyond `r + w`.
pub fn plateau(x: f64, r: f64, w: f64) -> f64 {
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

/// `a ∈ [2⁻⁶, 2⁴]` (64 log-spaced scales), `b ∈ [−4, 5]` (512 nodes).
pub fn default_grid() -> AffineGrid {
    make_affine_grid(2f64.powi(-6), 16.0, 64, -4.0, 5.0, 512).expect("valid grid")
}

/// `W_∞ 1_{[0,1]}(a, b) = |[b−a, b+a] ∩ [0,1]| / 2a`.
pub fn indicator_mean(a: f64, b: f64) -> f64 {
    let overlap = ((b + a).min(1.0) - (b - a).max(0.0)).max(0.0);
    overlap / (2.0 * a)
}

/// Closed form of the Hardy maximal function of `1_{[0,1]}`.
pub fn indicator_maximal(b: f64) -> f64 {
    if b > 1.0 {
        1.0 / (2.0 * b)
    } else if b < 0.0 {
        1.0 / (2.0 * (1.0 - b))
    } else {
        1.0
    }
}

fn l2_diff(u: &SignalGrid, v: &SignalGrid) -> Result<f64> {
    u.combine(ONE, v, -ONE)?.lp_norm(2.0)
}

// ---------------------------------------------------------------------------
// Groups
// ---------------------------------------------------------------------------

fn intertwining(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let shifts: Vec<AffinePoint> = (0..5)
        .map(|_| AffinePoint::new(rng.gen_range(0.7..1.4), rng.gen_range(-1.0..1.0)))
        .collect::<Result<_>>()?;
    let coarse = make_affine_grid(0.5, 2.0, 257, -3.0, 3.0, 769)?;
    let fine = coarse.refined();
    // a wide Gaussian keeps the bilinear read-back error of the shifted
    // field below tolerance at this grid density
    let gauss = |dx: f64| {
        let n = (48.0 / dx).round() as usize;
        SignalGrid::from_real_fn(-24.0, dx, n, |x| (-x * x / 9.0).exp())
    };
    let w = SignalGrid::from_real_fn(-6.0, 1.0 / 64.0, 768, |x| (-(x - 0.5).powi(2) * 2.0).exp())?;
    let cases = [
        ("cauchy+", FiducialSpec::CauchyPlus, 2.0),
        ("poisson", FiducialSpec::Poisson, 2.0),
        ("maximal", FiducialSpec::Maximal, f64::INFINITY),
        ("pair_with", FiducialSpec::PairWith { w }, 2.0),
    ];
    // signal samples stay on the b-lattice at both levels so Cauchy rows go by FFT
    let levels = [(coarse, gauss(1.0 / 128.0)?), (fine, gauss(1.0 / 256.0)?)];
    for (label, fid, p) in cases {
        let rho = ReprSpec::Affine { p };
        let mut worst = [0.0f64; 2];
        for (k, (g, f)) in levels.iter().enumerate() {
            let base = covariant_transform(&rho, &fid, f, g)?;
            for c0 in &shifts {
                let moved = affine_rep_apply(p, *c0, f)?;
                let lhs = covariant_transform(&rho, &fid, &moved.signal, g)?;
                let r = interior_residual(&lhs, &left_shift_field(*c0, &base))?.residual;
                worst[k] = worst[k].max(r);
            }
        }
        rec.at_most(&format!("{label}.residual"), worst[0], 1e-5);
        // worst case over shifts at each level: a single shift's ratio swings
        // with the fractional grid offset it induces
        rec.at_least(
            &format!("{label}.refinement_ratio"),
            worst[0] / worst[1],
            3.5,
        );
    }
    Ok(())
}

fn cauchy_field(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let f = rational_signal(256.0, 1.0 / 64.0);
    let grid = default_grid();
    let rho = ReprSpec::Affine { p: 2.0 };
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let (ia, ib) = (rng.gen_range(0..grid.n_a()), rng.gen_range(0..grid.n_b()));
        let c = grid.point(ia, ib);
        let v = covariant_transform_at(&rho, &FiducialSpec::CauchyPlus, &f, c)?[0];
        let expect = rational_cauchy(C64::new(c.b(), c.a())) * c.a().sqrt();
        worst = worst.max((v - expect).norm());
    }
    rec.at_most("max_error", worst, 1e-6);
    Ok(())
}

fn maximal(rec: &mut Recorder) -> Result<()> {
    let grid = default_grid();
    // oracle: the closed form against a dense scan of the exact mean
    let dense: Vec<f64> = (0..=40000)
        .map(|k| (-10.0 + 20.0 * k as f64 / 40000.0).exp2())
        .collect();
    let oracle_gap = grid
        .b_values()
        .iter()
        .map(|&b| {
            let m = dense
                .iter()
                .map(|&a| indicator_mean(a, b))
                .fold(0.0, f64::max);
            (m - indicator_maximal(b)).abs()
        })
        .fold(0.0, f64::max);
    rec.at_most("oracle_gap", oracle_gap, 1e-4);

    let f = indicator_signal(-32.0, 2f64.powi(-10), 65537, 0.0, 1.0);
    let m = maximal_function_refined(&f, &grid)?;
    let err = grid
        .b_values()
        .iter()
        .zip(m.values())
        .map(|(&b, v)| (v.re - indicator_maximal(b)).abs())
        .fold(0.0, f64::max);
    rec.at_most("max_error", err, 2e-3);
    Ok(())
}

fn invariant_norm(rec: &mut Recorder) -> Result<()> {
    let grid = make_affine_grid(0.25, 1.0, 3, -4.0, 5.0, 73)?;
    let ind = |c: f64| indicator_signal(-8.0, 2f64.powi(-10), 16385, c, c + 1.0);
    let n0 = shift_invariant_norm(&ind(0.0), &grid)?;
    rec.at_most("indicator_error", (n0 - 1.0).abs(), 1e-6);
    let mut drift: f64 = 0.0;
    for c in [0.375, 1.25, -0.5, 2.0] {
        drift = drift.max((shift_invariant_norm(&ind(c), &grid)? - n0).abs());
    }
    rec.at_most("translation_drift", drift, 1e-10);
    Ok(())
}

fn cauchy_riemann(rec: &mut Recorder) -> Result<()> {
    // the Cauchy integral of the truncated signal is still holomorphic, so a
    // short window suffices; the signal is refined with the grid so the
    // b-nodes stay on its lattice
    let f = rational_signal(64.0, 1.0 / 64.0);
    let rho = ReprSpec::Affine { p: 1.0 };
    let grid = make_affine_grid(0.5, 4.0, 129, -4.0, 4.0, 513)?;
    let w = covariant_transform(&rho, &FiducialSpec::CauchyPlus, &f, &grid)?;
    let coarse = cauchy_riemann_residual(&w)?;
    let ff = rational_signal(64.0, 1.0 / 128.0);
    let wf = covariant_transform(&rho, &FiducialSpec::CauchyPlus, &ff, &grid.refined())?;
    let fine = cauchy_riemann_residual(&wf)?;
    rec.at_most("residual", coarse, 1e-4);
    rec.at_least("refinement_ratio", coarse / fine, 3.5);
    let p = covariant_transform(&rho, &FiducialSpec::Poisson, &f, &grid)?;
    rec.at_least("poisson_control", cauchy_riemann_residual(&p)?, 1e-2);
    Ok(())
}

fn null_solution(rec: &mut Recorder) -> Result<()> {
    let n = 4096;
    let dx = 32.0 / n as f64;
    let w = SignalGrid::from_fn(-16.0, dx, n, |x| {
        C64::new(plateau(x, 8.0, 6.0), 0.0) / C64::new(x, 1.0)
    })?;
    let a = derived_rep_apply(DerivedGenerator::A, &w)?;
    let nn = derived_rep_apply(DerivedGenerator::N, &w)?;
    let sum = a.combine(ONE, &nn, C64::new(0.0, 1.0))?;
    let sup = (0..n)
        .filter(|&k| w.x_at(k).abs() <= 6.0)
        .map(|k| sum.values()[k].norm())
        .fold(0.0, f64::max);
    rec.at_most("interior_sup", sup, 1e-8);
    Ok(())
}

fn induced(rec: &mut Recorder) -> Result<()> {
    let n = 32768;
    let f = SignalGrid::from_real_fn(-16.0, 32.0 / n as f64, n, |x| {
        (-(x + 4.0) * (x + 4.0)).exp()
    })?;
    for (label, t) in [("pi_6", PI / 6.0), ("pi_3", PI / 3.0), ("one", 1.0)] {
        let r = induced_coset_residual(&f, t)?;
        rec.at_most(&format!("{label}.plus"), r.plus, 1e-4);
        rec.at_most(&format!("{label}.minus"), r.minus, 1e-4);
    }
    Ok(())
}

/// `⟨M, f⟩ / ⟨f, f⟩` over `|x| ≤ 4` for the Hardy-pairing reconstruction of
/// `f` from its jump field (`p = ∞`) against `ρ₁(g) v₀`.
pub fn hardy_reconstruction_constant(
    f: &SignalGrid,
    v0: &SignalGrid,
    scales: &[f64],
) -> Result<C64> {
    let n = scales.len();
    let grid = make_affine_grid(scales[n - 1], scales[0], n, f.x0(), f.x_max(), f.len())?;
    let jump = jump_difference_field(f, &grid)?;
    let spec = PairingSpec::Hardy {
        a_sequence: scales.to_vec(),
    };
    let m = inverse_covariant_transform(&jump, &ReprSpec::Affine { p: 1.0 }, v0, &spec)?;
    least_squares_constant(&m, f, 4.0)
}

fn jump_reconstruction(rec: &mut Recorder) -> Result<()> {
    let f = rational_signal(256.0, 1.0 / 64.0);
    let d1 = jump_reconstruction_defect(&f, 0.1)?;
    let d2 = jump_reconstruction_defect(&f, 0.05)?;
    rec.at_most("defect", d1, 0.05);
    rec.at_most("halving_deviation", (d1 / d2 / 2.0 - 1.0).abs(), 0.25);

    let dx = 1.0 / 512.0;
    let rational = rational_signal(32.0, dx);
    let gauss = SignalGrid::from_real_fn(-32.0, dx, 32768, |x| (-x * x).exp())?;
    let v0 = SignalGrid::from_fn(-8192.0, 1.0 / 32.0, 524288, |x| {
        ONE / (C64::new(0.0, 2.0 * PI) * C64::new(x, 1.0))
    })?;
    let scales = [0.04, 0.02, 0.01];
    let c1 = hardy_reconstruction_constant(&rational, &v0, &scales)?;
    let c2 = hardy_reconstruction_constant(&gauss, &v0, &scales)?;
    rec.at_most("constant_mismatch", (c1 - c2).norm() / c1.norm(), 1e-3);
    Ok(())
}

fn littlewood_paley(rec: &mut Recorder) -> Result<()> {
    let (n, dx) = (4096, 1.0 / 32.0);
    let tone = |w: f64| {
        SignalGrid::from_fn(-64.0, dx, n, |x| {
            C64::from_polar((-x * x / 128.0).exp(), w * x)
        })
    };
    let inside = tone(1.5)?;
    let once = littlewood_paley_project(&inside)?;
    let twice = littlewood_paley_project(&once)?;
    rec.at_most("idempotence", l2_diff(&once, &twice)?, 1e-12);
    rec.at_most(
        "in_band_loss",
        l2_diff(&once, &inside)? / inside.lp_norm(2.0)?,
        1e-3,
    );
    let outside = tone(3.0)?;
    let kept = littlewood_paley_project(&outside)?.lp_norm(2.0)? / outside.lp_norm(2.0)?;
    rec.at_most("out_of_band_leak", kept, 1e-3);
    Ok(())
}

fn radon(rec: &mut Recorder) -> Result<()> {
    let ax = Axis::span(-2.0, 2.0, 257)?;
    let offsets = Axis::span(-0.96875, 0.96875, 63)?;
    let r = 1.0;
    let disk = PlaneField::from_fn(ax, ax, |x, y| {
        if x * x + y * y <= r * r {
            ONE
        } else {
            C64::new(0.0, 0.0)
        }
    })?;
    let sino = radon_transform(&disk, Axis::span(0.0, PI, 16)?, offsets)?;
    let mut worst: f64 = 0.0;
    for it in 0..sino.thetas.n {
        for is in 0..offsets.n {
            let s = offsets.at(is);
            let chord = 2.0 * (r * r - s * s).sqrt();
            worst = worst.max((sino.get(it, is).re - chord).abs());
        }
    }
    rec.at_most("disk_error_in_steps", worst / ax.step, 2.0);

    let radial = PlaneField::from_fn(ax, ax, |x, y| C64::new((-4.0 * (x * x + y * y)).exp(), 0.0))?;
    let sino = radon_transform(
        &radial,
        Axis::span(0.0, PI, 16)?,
        Axis::span(-1.5, 1.5, 25)?,
    )?;
    let mut spread: f64 = 0.0;
    for is in 0..sino.offsets.n {
        for it in 1..sino.thetas.n {
            spread = spread.max((sino.get(it, is) - sino.get(0, is)).norm());
        }
    }
    rec.at_most("radial_theta_spread", spread, 1e-6);
    Ok(())
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Result<ComplexMatrix> {
    let data = (0..n * n)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    ComplexMatrix::new(n, data)
}

/// Random matrix rescaled to operator norm `r`.
pub fn random_contraction(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Result<ComplexMatrix> {
    let m = random_matrix(rng, n)?;
    Ok(m.scale(C64::new(r / m.norm_op(), 0.0)))
}

fn random_disk_point(rng: &mut ChaCha8Rng, rmax: f64) -> C64 {
    C64::from_polar(rmax * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI))
}

fn operator_models(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    // scalar characteristic function against the Blaschke factor
    let mut scalar: f64 = 0.0;
    for _ in 0..64 {
        let t = rng.gen_range(-0.99..0.99);
        let z = random_disk_point(rng, 0.99);
        let theta = characteristic_function(&ComplexMatrix::scalar(C64::new(t, 0.0)), z)?.get(0, 0);
        scalar = scalar.max((theta - (z - t) / (1.0 - z * t)).norm());
    }
    rec.at_most("scalar_theta", scalar, 1e-12);

    let mut at_zero: f64 = 0.0;
    for _ in 0..32 {
        let r = rng.gen_range(0.1..0.95);
        let t = random_contraction(rng, 4, r)?;
        let theta = characteristic_function(&t, C64::new(0.0, 0.0))?;
        at_zero = at_zero.max(theta.add(&t)?.norm_max());
    }
    rec.at_most("theta_at_zero", at_zero, 1e-12);

    let mut modulus: f64 = 0.0;
    for k in 0..64 {
        let t = rng.gen_range(-0.95..0.95);
        let z = C64::from_polar(1.0, 2.0 * PI * k as f64 / 64.0);
        let theta = characteristic_function(&ComplexMatrix::scalar(C64::new(t, 0.0)), z)?.get(0, 0);
        modulus = modulus.max((theta.norm() - 1.0).abs());
    }
    rec.at_most("boundary_modulus", modulus, 1e-10);

    // Möbius action: composition law and the spectral-radius bound
    let mut law: f64 = 0.0;
    let mut radius: f64 = 0.0;
    for k in 0..100 {
        let n = if k % 2 == 0 { 1 } else { 2 };
        let r = rng.gen_range(0.05..0.9);
        let t = random_contraction(rng, n, r)?;
        let g1 =
            Su11Element::from_phi_z(rng.gen_range(0.0..2.0 * PI), random_disk_point(rng, 0.8))?;
        let g2 =
            Su11Element::from_phi_z(rng.gen_range(0.0..2.0 * PI), random_disk_point(rng, 0.8))?;
        let once = mobius_on_operator(&g1.compose(&g2), &t)?;
        let twice = mobius_on_operator(&g1, &mobius_on_operator(&g2, &t)?)?;
        law = law.max(once.sub(&twice)?.norm_max());
        radius = radius.max(spectral_radius_gelfand(&once).radius);
    }
    rec.at_most("mobius_law", law, 1e-10);
    rec.at_most("mobius_spectral_radius", radius, 1.0 - 1e-12);

    // numerical range samples against the support function
    let a = random_matrix(rng, 4)?;
    let x: Vec<C64> = {
        let v: Vec<C64> = (0..4)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = crate::opmodel::vec_norm(&v);
        v.iter().map(|u| u / s).collect()
    };
    let gs: Vec<ComplexMatrix> = (0..32)
        .map(|k| {
            let d: Vec<C64> = (0..4)
                .map(|j| C64::from_polar(1.0, 0.37 * (k * (j + 1)) as f64))
                .collect();
            ComplexMatrix::diag(&d)
        })
        .collect::<Result<_>>()?;
    let samples = numerical_range_sample(&a, &x, &gs)?;
    let mut excess = f64::NEG_INFINITY;
    for k in 0..64 {
        let th = 2.0 * PI * k as f64 / 64.0;
        let h = numerical_range_support(&a, th);
        for p in &samples {
            excess = excess.max((C64::from_polar(1.0, -th) * p).re - h);
        }
    }
    rec.at_most("numerical_range_excess", excess.max(0.0), 1e-8);
    Ok(())
}
