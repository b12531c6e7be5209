//! Batch driver behind the `covtrans` binary.
//!
//! Every command reads one JSON [`ExperimentConfig`] and writes its artifacts
//! into the output directory: CSV for fields and signals, JSON for summaries
//! and reports. Files are written to a temporary sibling and renamed, so a
//! reader never sees a partial artifact.
//!
//! Exit status: 0 when the command succeeds (for `verify`: every check
//! passes), 1 when `verify` reports a failing check, 2 for configuration
//! errors, 3 for a non-convergent limit, 4 for any other failure.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fiducial::FiducialSpec;
use crate::grouplib::{make_affine_grid, AffineGrid};
use crate::opmodel::{
    characteristic_function, defect_operators, functional_model_discrepancy,
    numerical_range_support, spectral_radius_gelfand, ComplexMatrix, SpectralRadius,
};
use crate::pairing::{
    inverse_covariant_transform, jump_difference_field, jump_reconstruction_defect,
    least_squares_constant, PairingSpec,
};
use crate::repr::ReprSpec;
use crate::signal::{Axis, PlaneField, SignalGrid};
use crate::verify::{
    indicator_signal, random_contraction, rational_signal, run_suite, VerifyOptions,
};
use crate::xform::{
    covariant_transform, maximal_function, maximal_function_refined, radon_transform,
    shift_invariant_norm,
};
use crate::C64;

/// Writes `bytes` to a temporary sibling and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn config_error(field: impl Into<String>, message: impl ToString) -> Error {
    Error::Config {
        field: field.into(),
        message: message.to_string(),
    }
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

#[derive(Debug, Parser)]
#[command(
    name = "covtrans",
    version,
    about = "Covariant transforms, maximal functions and operator models"
)]
pub struct Args {
    #[command(subcommand)]
    pub command: CommandArgs,
}

#[derive(Debug, Subcommand)]
pub enum CommandArgs {
    /// Transform field of a signal over an affine grid.
    Transform(CommonArgs),
    /// Hardy maximal function and the shift-invariant norm.
    Maximal(CommonArgs),
    /// Inverse transform of the jump field through a pairing.
    Reconstruct(CommonArgs),
    /// Sinogram of a plane image.
    Radon(CommonArgs),
    /// Characteristic function, defect operators and numerical range.
    Opmodel(CommonArgs),
    /// Run the invariant suite and write a report.
    Verify(CommonArgs),
}

#[derive(Debug, clap::Args)]
pub struct CommonArgs {
    /// JSON experiment config; defaults apply to every omitted field.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Seed for randomised checks and defaults; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Transform,
    Maximal,
    Reconstruct,
    Radon,
    Opmodel,
    Verify,
}

impl CommandArgs {
    fn split(&self) -> (Command, &CommonArgs) {
        match self {
            CommandArgs::Transform(c) => (Command::Transform, c),
            CommandArgs::Maximal(c) => (Command::Maximal, c),
            CommandArgs::Reconstruct(c) => (Command::Reconstruct, c),
            CommandArgs::Radon(c) => (Command::Radon, c),
            CommandArgs::Opmodel(c) => (Command::Opmodel, c),
            CommandArgs::Verify(c) => (Command::Verify, c),
        }
    }
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

/// One experiment. Only the sections a command reads need to be present.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Must match the subcommand when given.
    pub command: Option<Command>,
    pub signal: Option<SignalConfig>,
    pub rho: Option<ReprSpec>,
    pub fiducial: Option<FiducialConfig>,
    pub grid: Option<GridConfig>,
    pub pairing: Option<PairingSpec>,
    /// File stem for the main artifact; the command name by default.
    pub output: Option<String>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub seed: Option<u64>,
    /// `verify` only: subset of check groups.
    pub groups: Option<Vec<String>>,
    pub reconstruct: Option<ReconstructConfig>,
    pub radon: Option<RadonConfig>,
    pub opmodel: Option<OpmodelConfig>,
}

/// Builtin signals by name, or samples from a CSV file (`x,re[,im]`).
///
/// Line signals are sampled on `[−half_width, half_width)` with spacing `dx`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalConfig {
    /// `1/(1+t²)`.
    Rational(RationalParams),
    /// `exp(−((x−center)/sigma)²)`; radial in the plane.
    Gaussian(GaussianParams),
    /// `1` on `[lo, hi]`.
    Indicator(IndicatorParams),
    /// `e^{iωx}` under the window `exp(−x²/(2·window²))`.
    Tone(ToneParams),
    /// Indicator of the disk `|z| ≤ radius` (plane only).
    Disk(DiskParams),
    Csv {
        path: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RationalParams {
    pub half_width: f64,
    pub dx: f64,
}

impl Default for RationalParams {
    // the 1/t² tails need a wide window for 1e-6 accuracy near the line
    fn default() -> Self {
        Self {
            half_width: 256.0,
            dx: 1.0 / 64.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianParams {
    pub sigma: f64,
    pub center: f64,
    pub half_width: f64,
    pub dx: f64,
    /// Samples per plane axis.
    pub n: usize,
}

impl Default for GaussianParams {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            center: 0.0,
            half_width: 16.0,
            dx: 1.0 / 128.0,
            n: 257,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IndicatorParams {
    pub lo: f64,
    pub hi: f64,
    pub half_width: f64,
    pub dx: f64,
}

impl Default for IndicatorParams {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 1.0,
            half_width: 16.0,
            dx: 1.0 / 128.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToneParams {
    pub frequency: f64,
    pub window: f64,
    pub half_width: f64,
    pub dx: f64,
}

impl Default for ToneParams {
    fn default() -> Self {
        Self {
            frequency: 1.5,
            window: 8.0,
            half_width: 64.0,
            dx: 1.0 / 32.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiskParams {
    pub radius: f64,
    /// The image covers `[−half_width, half_width]²`.
    pub half_width: f64,
    pub n: usize,
}

impl Default for DiskParams {
    fn default() -> Self {
        Self {
            radius: 1.0,
            half_width: 2.0,
            n: 257,
        }
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(config_error(
            field,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn samples(field: &str, half_width: f64, dx: f64) -> Result<usize> {
    positive(&format!("{field}.half_width"), half_width)?;
    positive(&format!("{field}.dx"), dx)?;
    let n = (2.0 * half_width / dx).round();
    if !(4.0..=(1u64 << 26) as f64).contains(&n) {
        return Err(config_error(field, format!("{n} samples is out of range")));
    }
    Ok(n as usize)
}

impl SignalConfig {
    /// The sampled line signal; `field` names the config entry in errors.
    pub fn line(&self, field: &str, base: &Path) -> Result<SignalGrid> {
        let wrap = |e: Error| config_error(field, e);
        match self {
            SignalConfig::Rational(p) => {
                samples(field, p.half_width, p.dx)?;
                Ok(rational_signal(p.half_width, p.dx))
            }
            SignalConfig::Gaussian(p) => {
                let n = samples(field, p.half_width, p.dx)?;
                let sigma = positive(&format!("{field}.sigma"), p.sigma)?;
                let c = p.center;
                SignalGrid::from_real_fn(-p.half_width, p.dx, n, |x| {
                    (-((x - c) / sigma).powi(2)).exp()
                })
                .map_err(wrap)
            }
            SignalConfig::Indicator(p) => {
                let n = samples(field, p.half_width, p.dx)?;
                if !(p.lo < p.hi) {
                    return Err(config_error(format!("{field}.hi"), "need lo < hi"));
                }
                Ok(indicator_signal(-p.half_width, p.dx, n, p.lo, p.hi))
            }
            SignalConfig::Tone(p) => {
                let n = samples(field, p.half_width, p.dx)?;
                let w = positive(&format!("{field}.window"), p.window)?;
                let omega = p.frequency;
                SignalGrid::from_fn(-p.half_width, p.dx, n, |x| {
                    C64::from_polar((-x * x / (2.0 * w * w)).exp(), omega * x)
                })
                .map_err(wrap)
            }
            SignalConfig::Disk(_) => Err(config_error(field, "the disk is a plane image")),
            SignalConfig::Csv { path } => {
                let full = base.join(path);
                if !full.exists() {
                    return Err(config_error(
                        format!("{field}.path"),
                        format!("{} does not exist", full.display()),
                    ));
                }
                SignalGrid::read_csv(&full).map_err(|e| config_error(format!("{field}.path"), e))
            }
        }
    }

    /// The sampled plane image.
    pub fn plane(&self, field: &str) -> Result<PlaneField> {
        let axis = |hw: f64, n: usize| {
            positive(&format!("{field}.half_width"), hw)?;
            if n < 4 {
                return Err(config_error(
                    format!("{field}.n"),
                    "need at least 4 samples per axis",
                ));
            }
            Axis::span(-hw, hw, n).map_err(|e| config_error(field, e))
        };
        match self {
            SignalConfig::Disk(p) => {
                let ax = axis(p.half_width, p.n)?;
                let r = positive(&format!("{field}.radius"), p.radius)?;
                PlaneField::from_fn(ax, ax, |x, y| {
                    C64::new(if x * x + y * y <= r * r { 1.0 } else { 0.0 }, 0.0)
                })
                .map_err(|e| config_error(field, e))
            }
            SignalConfig::Gaussian(p) => {
                let ax = axis(p.half_width, p.n)?;
                let s = positive(&format!("{field}.sigma"), p.sigma)?;
                PlaneField::from_fn(ax, ax, |x, y| {
                    C64::new((-(x * x + y * y) / (s * s)).exp(), 0.0)
                })
                .map_err(|e| config_error(field, e))
            }
            _ => Err(config_error(
                field,
                "only disk and gaussian are plane images",
            )),
        }
    }
}

/// [`FiducialSpec`] with the pairing weight given as a signal config.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "type", deny_unknown_fields)]
pub enum FiducialConfig {
    #[serde(rename = "cauchy+")]
    CauchyPlus,
    #[serde(rename = "cauchy-")]
    CauchyMinus,
    #[serde(rename = "poisson")]
    Poisson,
    #[serde(rename = "jump")]
    Jump,
    #[serde(rename = "pair_with")]
    PairWith { signal: SignalConfig },
    #[serde(rename = "maximal")]
    Maximal,
    #[serde(rename = "littlewood_paley")]
    LittlewoodPaley,
    #[serde(rename = "radon_line")]
    RadonLine,
}

impl FiducialConfig {
    pub fn resolve(&self, base: &Path) -> Result<FiducialSpec> {
        let spec = match self {
            FiducialConfig::CauchyPlus => FiducialSpec::CauchyPlus,
            FiducialConfig::CauchyMinus => FiducialSpec::CauchyMinus,
            FiducialConfig::Poisson => FiducialSpec::Poisson,
            FiducialConfig::Jump => FiducialSpec::Jump,
            FiducialConfig::PairWith { signal } => FiducialSpec::PairWith {
                w: signal.line("fiducial.signal", base)?,
            },
            FiducialConfig::Maximal => FiducialSpec::Maximal,
            FiducialConfig::LittlewoodPaley => FiducialSpec::LittlewoodPaley,
            FiducialConfig::RadonLine => FiducialSpec::RadonLine,
        };
        spec.validate().map_err(|e| config_error("fiducial", e))?;
        Ok(spec)
    }
}

/// Log-spaced `a` by uniform `b`; the defaults give the 64×512 grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub a_min: f64,
    pub a_max: f64,
    pub n_a: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub n_b: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            a_min: 2f64.powi(-6),
            a_max: 16.0,
            n_a: 64,
            b_min: -4.0,
            b_max: 5.0,
            n_b: 512,
        }
    }
}

impl GridConfig {
    pub fn build(&self) -> Result<AffineGrid> {
        make_affine_grid(
            self.a_min, self.a_max, self.n_a, self.b_min, self.b_max, self.n_b,
        )
        .map_err(|e| config_error("grid", e))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    /// Scale at which the jump defect is reported.
    pub defect_a: f64,
    /// Half-width of the window the constant is fitted on.
    pub fit_radius: f64,
    /// Sampling of `v₀ = 1/(2πi(x+i))`.
    pub v0_half_width: f64,
    pub v0_dx: f64,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            defect_a: 0.1,
            fit_radius: 4.0,
            v0_half_width: 8192.0,
            v0_dx: 1.0 / 32.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadonConfig {
    /// Angles `kπ/n_theta`.
    pub n_theta: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub n_s: usize,
}

impl Default for RadonConfig {
    fn default() -> Self {
        Self {
            n_theta: 16,
            s_min: -1.5,
            s_max: 1.5,
            n_s: 97,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpmodelConfig {
    /// The contraction; a seeded random 4×4 one of norm 0.9 when absent.
    pub t: Option<ComplexMatrix>,
    /// Points of the unit disk where `Θ_T` is evaluated.
    #[serde(with = "crate::serde_complex::vec")]
    pub points: Vec<C64>,
    /// Rotation angle of the disk automorphism used by the model check.
    pub phi: f64,
    /// Directions for the numerical-range support function.
    pub n_angles: usize,
}

impl Default for OpmodelConfig {
    fn default() -> Self {
        Self {
            t: None,
            points: vec![
                C64::new(0.0, 0.0),
                C64::new(0.5, 0.0),
                C64::new(0.0, 0.5),
                C64::new(-0.3, 0.3),
            ],
            phi: 0.0,
            n_angles: 16,
        }
    }
}

impl ExperimentConfig {
    /// Parses JSON; errors name the offending field path and position.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let field = if path == "." {
                "config".to_string()
            } else {
                path
            };
            config_error(
                field,
                format!("line {} column {}: {inner}", inner.line(), inner.column()),
            )
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Checks the parts every command shares.
    pub fn validate(&self) -> Result<()> {
        if let Some(rho) = &self.rho {
            rho.validate()?;
        }
        if let Some(pairing) = &self.pairing {
            pairing.validate()?;
        }
        for (k, v) in &self.tolerances {
            if !(v.is_finite() && *v > 0.0) {
                return Err(config_error(
                    format!("tolerances.{k}"),
                    "tolerances must be positive",
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

/// What a finished command reports back.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// `false` only when `verify` found a failing check.
    pub success: bool,
    pub summary: String,
}

/// Process exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::Json(_) => 2,
        Error::NonConvergent(_) => 3,
        _ => 4,
    }
}

/// Parses arguments, runs the command in a pool of the requested size and
/// returns the exit status.
pub fn main_with_args(args: Args) -> i32 {
    let (command, common) = args.command.split();
    let result = match common.threads {
        Some(0) => Err(config_error("--threads", "must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))
            .and_then(|pool| pool.install(|| run(command, common))),
        None => run(command, common),
    };
    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.success {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Loads the config (if any) and runs `command`.
pub fn run(command: Command, common: &CommonArgs) -> Result<Outcome> {
    let (config, base) = match &common.config {
        Some(path) => (
            ExperimentConfig::read(path)?,
            path.parent().map(Path::to_path_buf).unwrap_or_default(),
        ),
        None => (ExperimentConfig::default(), PathBuf::new()),
    };
    if let Some(c) = config.command {
        if c != command {
            return Err(config_error(
                "command",
                format!("config is for `{c:?}`, not `{command:?}`"),
            ));
        }
    }
    config.validate()?;
    std::fs::create_dir_all(&common.out)?;
    let seed = common.seed.or(config.seed).unwrap_or(0);
    let ctx = Context {
        config: &config,
        base: &base,
        out: &common.out,
        seed,
    };
    match command {
        Command::Transform => ctx.transform(),
        Command::Maximal => ctx.maximal(),
        Command::Reconstruct => ctx.reconstruct(),
        Command::Radon => ctx.radon(),
        Command::Opmodel => ctx.opmodel(),
        Command::Verify => ctx.verify(),
    }
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    base: &'a Path,
    out: &'a Path,
    seed: u64,
}

#[derive(Serialize)]
struct MaximalSummary {
    /// `sup_b M_f(b)` at `a = ½`.
    shift_invariant_norm: f64,
    sup_grid: f64,
    sup_refined: f64,
}

#[derive(Serialize)]
struct ReconstructSummary {
    pairing: PairingSpec,
    /// `⟨M, f⟩/⟨f, f⟩` on the fitting window.
    #[serde(with = "crate::serde_complex")]
    constant: C64,
    fit_radius: f64,
    defect: f64,
    defect_a: f64,
}

#[derive(Serialize)]
struct ThetaValue {
    #[serde(with = "crate::serde_complex")]
    z: C64,
    theta: ComplexMatrix,
    model_discrepancy: f64,
}

#[derive(Serialize)]
struct SupportValue {
    angle: f64,
    support: f64,
}

#[derive(Serialize)]
struct OpmodelSummary {
    t: ComplexMatrix,
    defect_t: ComplexMatrix,
    defect_t_star: ComplexMatrix,
    spectral_radius: SpectralRadius,
    characteristic: Vec<ThetaValue>,
    numerical_range_support: Vec<SupportValue>,
}

impl Context<'_> {
    fn path(&self, default_stem: &str, ext: &str) -> PathBuf {
        let stem = self.config.output.as_deref().unwrap_or(default_stem);
        self.out.join(format!("{stem}.{ext}"))
    }

    fn signal(&self, default: SignalConfig) -> Result<SignalGrid> {
        self.config
            .signal
            .as_ref()
            .unwrap_or(&default)
            .line("signal", self.base)
    }

    fn grid(&self) -> Result<AffineGrid> {
        self.config.grid.clone().unwrap_or_default().build()
    }

    fn transform(&self) -> Result<Outcome> {
        let f = self.signal(SignalConfig::Rational(RationalParams::default()))?;
        let rho = self
            .config
            .rho
            .clone()
            .unwrap_or(ReprSpec::Affine { p: 2.0 });
        rho.affine_exponent().map_err(|e| config_error("rho", e))?;
        let fid = match &self.config.fiducial {
            Some(fc) => fc.resolve(self.base)?,
            None => FiducialSpec::CauchyPlus,
        };
        if matches!(fid, FiducialSpec::LittlewoodPaley | FiducialSpec::RadonLine) {
            return Err(config_error(
                "fiducial.type",
                format!("{} has its own command", fid.name()),
            ));
        }
        let field = covariant_transform(&rho, &fid, &f, &self.grid()?)?;
        let csv = self.path("transform", "csv");
        let header = self.path("transform", "json");
        field.write_csv(&csv)?;
        write_json(&header, &field.header())?;
        Ok(Outcome {
            summary: format!(
                "transform: {} nodes, fiducial {}",
                field.grid().len(),
                fid.name()
            ),
            files: vec![csv, header],
            success: true,
        })
    }

    fn maximal(&self) -> Result<Outcome> {
        let f = self.signal(SignalConfig::Indicator(IndicatorParams::default()))?;
        if self
            .config
            .fiducial
            .as_ref()
            .is_some_and(|fc| *fc != FiducialConfig::Maximal)
        {
            return Err(config_error(
                "fiducial.type",
                "maximal always uses the window-mean fiducial",
            ));
        }
        let grid = self.grid()?;
        let rho = ReprSpec::Affine { p: f64::INFINITY };
        let field = covariant_transform(&rho, &FiducialSpec::Maximal, &f, &grid)?;
        let coarse = maximal_function(&field)?;
        let refined = maximal_function_refined(&f, &grid)?;
        // the norm reads a = ½, which a generic grid does not contain; the
        // translations run over the signal's own lattice inside the b-range
        let lattice: Vec<f64> = f
            .xs()
            .filter(|&x| x >= grid.b_min() && x <= grid.b_max())
            .collect();
        if lattice.len() < 2 {
            return Err(config_error(
                "grid",
                "b-range holds fewer than two signal samples",
            ));
        }
        let norm_grid = AffineGrid::from_values(vec![0.25, 0.5, 1.0], lattice)?;
        let norm = shift_invariant_norm(&f, &norm_grid)?;

        let mut text = String::from("b,grid,refined\n");
        for (k, &b) in grid.b_values().iter().enumerate() {
            text.push_str(&format!(
                "{b},{},{}\n",
                coarse.values()[k].re,
                refined.values()[k].re
            ));
        }
        let csv = self.path("maximal", "csv");
        write_atomic(&csv, text.as_bytes())?;
        let sup = |s: &SignalGrid| {
            s.values()
                .iter()
                .map(|v| v.re)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let summary = MaximalSummary {
            shift_invariant_norm: norm,
            sup_grid: sup(&coarse),
            sup_refined: sup(&refined),
        };
        let json = self.path("maximal", "json");
        write_json(&json, &summary)?;
        Ok(Outcome {
            summary: format!("maximal: shift-invariant norm {norm}"),
            files: vec![csv, json],
            success: true,
        })
    }

    fn reconstruct(&self) -> Result<Outcome> {
        let f = self.signal(SignalConfig::Rational(RationalParams {
            half_width: 32.0,
            dx: 1.0 / 512.0,
        }))?;
        let opts = self.config.reconstruct.clone().unwrap_or_default();
        positive("reconstruct.defect_a", opts.defect_a)?;
        positive("reconstruct.fit_radius", opts.fit_radius)?;
        let nv = samples("reconstruct.v0", opts.v0_half_width, opts.v0_dx)?;
        let spec = self.config.pairing.clone().unwrap_or(PairingSpec::Hardy {
            a_sequence: vec![0.04, 0.02, 0.01],
        });
        let grid = match &spec {
            PairingSpec::Hardy { a_sequence } => {
                let mut a = a_sequence.clone();
                a.reverse();
                let n = f.len();
                let b = (0..n).map(|k| f.x_at(k)).collect();
                AffineGrid::from_values(a, b).map_err(|e| config_error("pairing.a_sequence", e))?
            }
            PairingSpec::Haar => self.grid()?,
        };
        let v0 = SignalGrid::from_fn(-opts.v0_half_width, opts.v0_dx, nv, |x| {
            C64::new(1.0, 0.0) / (C64::new(0.0, 2.0 * PI) * C64::new(x, 1.0))
        })?;
        let jump = jump_difference_field(&f, &grid)?;
        let m = inverse_covariant_transform(&jump, &ReprSpec::Affine { p: 1.0 }, &v0, &spec)?;
        let fit = if m.check_same_grid(&f).is_ok() {
            least_squares_constant(&m, &f, opts.fit_radius)?
        } else {
            // Haar output lives on the grid's b-nodes
            let resampled = m.map(|x, _| f.interpolate_eval(x))?;
            least_squares_constant(&m, &resampled, opts.fit_radius)?
        };
        let defect = jump_reconstruction_defect(&f, opts.defect_a)?;

        let csv = self.path("reconstruct", "csv");
        m.write_csv(&csv)?;
        let summary = ReconstructSummary {
            pairing: spec,
            constant: fit,
            fit_radius: opts.fit_radius,
            defect,
            defect_a: opts.defect_a,
        };
        let json = self.path("reconstruct", "json");
        write_json(&json, &summary)?;
        Ok(Outcome {
            summary: format!(
                "reconstruct: constant {fit}, defect {defect} at a = {}",
                opts.defect_a
            ),
            files: vec![csv, json],
            success: true,
        })
    }

    fn radon(&self) -> Result<Outcome> {
        let image = self
            .config
            .signal
            .clone()
            .unwrap_or(SignalConfig::Disk(DiskParams::default()))
            .plane("signal")?;
        let rc = self.config.radon.clone().unwrap_or_default();
        if rc.n_theta == 0 {
            return Err(config_error("radon.n_theta", "need at least one angle"));
        }
        let thetas = Axis::new(0.0, PI / rc.n_theta as f64, rc.n_theta)
            .map_err(|e| config_error("radon", e))?;
        let offsets =
            Axis::span(rc.s_min, rc.s_max, rc.n_s).map_err(|e| config_error("radon", e))?;
        let sino = radon_transform(&image, thetas, offsets)?;
        let csv = self.path("sinogram", "csv");
        sino.write_csv(&csv)?;
        Ok(Outcome {
            summary: format!("radon: {} angles × {} offsets", rc.n_theta, rc.n_s),
            files: vec![csv],
            success: true,
        })
    }

    fn opmodel(&self) -> Result<Outcome> {
        let oc = self.config.opmodel.clone().unwrap_or_default();
        let t = match oc.t {
            Some(t) => t,
            None => random_contraction(&mut ChaCha8Rng::seed_from_u64(self.seed), 4, 0.9)?,
        };
        if t.norm_op() >= 1.0 {
            return Err(config_error(
                "opmodel.t",
                "T must be a strict contraction (‖T‖ < 1)",
            ));
        }
        for (k, z) in oc.points.iter().enumerate() {
            if z.norm() >= 1.0 {
                return Err(config_error(
                    format!("opmodel.points[{k}]"),
                    "points must lie in the open unit disk",
                ));
            }
        }
        let (dt, dts) = defect_operators(&t)?;
        let characteristic = oc
            .points
            .iter()
            .map(|&z| {
                Ok(ThetaValue {
                    z,
                    theta: characteristic_function(&t, z)?,
                    model_discrepancy: functional_model_discrepancy(&t, oc.phi, z)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let support = (0..oc.n_angles)
            .map(|k| {
                let angle = 2.0 * PI * k as f64 / oc.n_angles as f64;
                SupportValue {
                    angle,
                    support: numerical_range_support(&t, angle),
                }
            })
            .collect();
        let summary = OpmodelSummary {
            spectral_radius: spectral_radius_gelfand(&t),
            t,
            defect_t: dt,
            defect_t_star: dts,
            characteristic,
            numerical_range_support: support,
        };
        let json = self.path("opmodel", "json");
        write_json(&json, &summary)?;
        Ok(Outcome {
            summary: format!("opmodel: {} points", summary.characteristic.len()),
            files: vec![json],
            success: true,
        })
    }

    fn verify(&self) -> Result<Outcome> {
        let opts = VerifyOptions {
            seed: self.seed,
            groups: self.config.groups.clone(),
            tolerances: self.config.tolerances.clone(),
        };
        opts.validate()?;
        let report = run_suite(&opts)?;
        let json = self.path("report", "json");
        write_json(&json, &report)?;
        let mut summary = format!("verify: {} passed, {} failed", report.passed, report.failed);
        for c in report.checks.iter().filter(|c| !c.pass) {
            summary.push_str(&format!(
                "\n  FAIL {} = {:.6e} (tolerance {:e})",
                c.name, c.value, c.tolerance
            ));
        }
        Ok(Outcome {
            success: report.all_pass(),
            summary,
            files: vec![json],
        })
    }
}
