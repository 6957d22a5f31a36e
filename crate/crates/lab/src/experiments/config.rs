//! Experiment configuration files (TOML, or JSON with the same schema).

use crate::grid_core::{Grid, GridFunction, DEFAULT_POINT_BUDGET};
use crate::meanfield::{InteractionKernel, ScfSettings};
use crate::operators::{KineticScheme, Potential, PotentialKind};
use crate::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Potential by kind and parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Harmonic {
        #[serde(default = "one")]
        strength: f64,
        #[serde(default)]
        chemical_shift: f64,
    },
    ShiftedHarmonic {
        mu: f64,
    },
    DoubleWell {
        separation: f64,
        barrier: f64,
        offset: f64,
    },
    GaussianWell {
        depth: f64,
        width: f64,
        confinement: f64,
    },
    /// Samples in the grid-function CSV format; the grid must match every sweep point.
    Tabulated {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

impl PotentialSpec {
    /// Build the potential on `grid`.
    pub fn build(&self, grid: &Grid) -> Result<Potential> {
        Ok(match *self {
            PotentialSpec::Harmonic { strength, chemical_shift } => {
                Potential::new(PotentialKind::Harmonic { strength }).with_chemical_shift(chemical_shift)
            }
            PotentialSpec::ShiftedHarmonic { mu } => Potential::shifted_harmonic(mu),
            PotentialSpec::DoubleWell { separation, barrier, offset } => Potential::double_well(separation, barrier, offset),
            PotentialSpec::GaussianWell { depth, width, confinement } => Potential::gaussian_well(depth, width, confinement),
            PotentialSpec::Tabulated { ref path } => {
                let file = std::fs::File::open(path)
                    .map_err(|e| LabError::Config(format!("cannot open potential table {}: {e}", path.display())))?;
                Potential::tabulated(GridFunction::read_csv(*grid, file)?)
            }
        })
    }
}

/// Soft-core interaction `κ(|x|² + s²)^{-a/2}`.
///
/// `softening_cells` ties `s` to the grid as a multiple of `Δx`; otherwise `softening` is used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    pub strength: f64,
    pub exponent: f64,
    #[serde(default)]
    pub softening: Option<f64>,
    #[serde(default)]
    pub softening_cells: Option<f64>,
}

impl KernelSpec {
    /// Softening length on `grid`.
    pub fn softening_on(&self, grid: &Grid) -> Result<f64> {
        match (self.softening, self.softening_cells) {
            (Some(_), Some(_)) => Err(LabError::Config("give either softening or softening_cells, not both".into())),
            (Some(s), None) => Ok(s),
            (None, Some(c)) => Ok(c * grid.spacing()),
            (None, None) => Ok(0.0),
        }
    }

    /// Kernel on `grid`.
    pub fn build(&self, grid: &Grid) -> Result<InteractionKernel> {
        InteractionKernel::new(self.strength, self.exponent, self.softening_on(grid)?)
            .map_err(|e| LabError::Config(e.to_string()))
    }
}

/// `ħ` values: an explicit list or a geometric progression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HbarSpec {
    #[serde(default = "default_hbar_start")]
    pub start: f64,
    #[serde(default = "default_hbar_stop")]
    pub stop: f64,
    #[serde(default = "default_hbar_points")]
    pub points: usize,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

fn default_hbar_start() -> f64 {
    0.4
}
fn default_hbar_stop() -> f64 {
    0.02
}
fn default_hbar_points() -> usize {
    12
}

impl Default for HbarSpec {
    fn default() -> Self {
        HbarSpec { start: default_hbar_start(), stop: default_hbar_stop(), points: default_hbar_points(), values: None }
    }
}

impl HbarSpec {
    /// Resolved list, strictly decreasing and positive.
    pub fn values(&self) -> Result<Vec<f64>> {
        let list = match &self.values {
            Some(v) => v.clone(),
            None => geometric_hbar(self.start, self.stop, self.points)?,
        };
        if list.is_empty() {
            return Err(LabError::Config("empty hbar list".into()));
        }
        if list.iter().any(|&h| !(h > 0.0 && h < 1.0)) {
            return Err(LabError::Config(format!("hbar values must lie in (0, 1): {list:?}")));
        }
        if list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(LabError::Config(format!("hbar values must be strictly decreasing: {list:?}")));
        }
        Ok(list)
    }
}

/// `points` values from `start` down to `stop` with a constant ratio.
pub fn geometric_hbar(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 || !(start > stop && stop > 0.0) {
        return Err(LabError::Config(format!("geometric hbar list needs start > stop > 0 and 2+ points, got {start}, {stop}, {points}")));
    }
    let ratio = (stop / start).powf(1.0 / (points - 1) as f64);
    Ok((0..points).map(|i| if i + 1 == points { stop } else { start * ratio.powi(i as i32) }).collect())
}

/// Grid growth rule `n(ħ) = base·2^k`, the smallest such `n` with `ħ ≥ 16Δx²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPolicy {
    #[serde(default = "default_dim")]
    pub dim: usize,
    #[serde(default = "default_half_length")]
    pub half_length: f64,
    #[serde(default = "default_base_points")]
    pub base_points: usize,
    /// Cap on `n^d` for the dense solvers.
    #[serde(default = "default_max_points")]
    pub max_points: usize,
}

fn default_dim() -> usize {
    1
}
fn default_half_length() -> f64 {
    6.0
}
fn default_base_points() -> usize {
    48
}
fn default_max_points() -> usize {
    DEFAULT_POINT_BUDGET
}

impl Default for GridPolicy {
    fn default() -> Self {
        GridPolicy {
            dim: default_dim(),
            half_length: default_half_length(),
            base_points: default_base_points(),
            max_points: default_max_points(),
        }
    }
}

impl GridPolicy {
    /// Points per axis at `ħ`.
    pub fn points_for(&self, hbar: f64) -> usize {
        let mut n = self.base_points;
        while 16.0 * (2.0 * self.half_length / n as f64).powi(2) > hbar {
            n *= 2;
        }
        n
    }

    /// Grid at `ħ`, failing with a configuration error beyond the point budget.
    pub fn grid_for(&self, hbar: f64) -> Result<Grid> {
        let n = self.points_for(hbar);
        let total = n.checked_pow(self.dim as u32).unwrap_or(usize::MAX);
        if total > self.max_points {
            return Err(LabError::Config(format!(
                "grid policy needs n = {n} (n^d = {total}) at hbar {hbar}, above the cap {}",
                self.max_points
            )));
        }
        Grid::with_budget(self.dim, n, self.half_length, self.max_points).map_err(|e| LabError::Config(e.to_string()))
    }

    /// Human-readable rule, recorded on every row.
    pub fn describe(&self) -> String {
        format!("n = {}*2^k minimal with hbar >= 16 dx^2", self.base_points)
    }
}

/// Numerical tolerances and solver settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative tolerance of the exact identities (times their scale).
    pub identity: f64,
    /// Relative tolerance of Plancherel and the round trip.
    pub transform: f64,
    pub tf_tol: f64,
    pub tf_damping: f64,
    pub tf_max_iter: usize,
    pub scf: ScfSettings,
    /// Weight `β` of the derivative-growth diagnostic.
    pub h4_beta: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            identity: 1e-9,
            transform: 1e-9,
            tf_tol: 1e-8,
            tf_damping: 0.5,
            tf_max_iter: 500,
            scf: ScfSettings::default(),
            h4_beta: 1.0,
        }
    }
}

/// Sampling parameters of the shift-based audits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShiftSpec {
    /// Besov exponent `p` of the `besov_p` quantity.
    pub besov_p: f64,
    /// Besov order `s`.
    pub besov_s: f64,
    /// Dyadic exponents `j` of the shifts `|z| = 2^{-j}`.
    pub dyadic: (i32, i32),
    /// Samples of the Weyl-law envelope window between consecutive sweep points.
    pub envelope_samples: usize,
    /// Values of `λ/ħ`-independent resolvent samples in `[ħ, 1]`.
    pub resolvent_samples: usize,
}

impl Default for ShiftSpec {
    fn default() -> Self {
        ShiftSpec { besov_p: 2.0, besov_s: 0.5, dyadic: (0, 9), envelope_samples: 16, resolvent_samples: 9 }
    }
}

/// Requested log-log fit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSpec {
    pub quantity: String,
    pub target: f64,
    #[serde(default)]
    pub log_power: f64,
    #[serde(default)]
    pub label: String,
}

/// Complete sweep configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub name: String,
    pub potential: PotentialSpec,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub hbar: HbarSpec,
    #[serde(default)]
    pub grid: GridPolicy,
    #[serde(default = "default_scheme")]
    pub scheme: KineticScheme,
    /// Measured quantities; `None` selects the defaults of the subcommand.
    #[serde(default)]
    pub quantities: Option<Vec<String>>,
    #[serde(default)]
    pub fits: Option<Vec<FitSpec>>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub shifts: ShiftSpec,
    /// CSV files consumed by the `rates` subcommand.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
}

fn default_scheme() -> KineticScheme {
    KineticScheme::Spectral
}

impl SweepConfig {
    /// Configuration for `potential` with every other field at its default.
    pub fn new(potential: PotentialSpec) -> Self {
        SweepConfig {
            name: String::new(),
            potential,
            kernel: None,
            hbar: HbarSpec::default(),
            grid: GridPolicy::default(),
            scheme: default_scheme(),
            quantities: None,
            fits: None,
            tolerances: Tolerances::default(),
            shifts: ShiftSpec::default(),
            inputs: Vec::new(),
        }
    }

    /// Parse TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let config: SweepConfig = parse_lenient(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Read and parse a configuration file; relative table paths resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config = SweepConfig::parse(&read_config(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let PotentialSpec::Tabulated { path: table } = &mut config.potential {
            if table.is_relative() {
                *table = base.join(&*table);
            }
        }
        for input in &mut config.inputs {
            if input.is_relative() {
                *input = base.join(&*input);
            }
        }
        Ok(config)
    }

    /// Check every structural precondition, including the grid budget at the smallest `ħ`.
    pub fn validate(&self) -> Result<()> {
        let hbars = self.hbar.values()?;
        let g = &self.grid;
        if !(1..=3).contains(&g.dim) {
            return Err(LabError::Config(format!("dimension {} outside 1..=3", g.dim)));
        }
        if g.base_points < 4 || !g.base_points.is_multiple_of(2) {
            return Err(LabError::Config(format!("base_points {} must be even and at least 4", g.base_points)));
        }
        if !(g.half_length > 0.0) {
            return Err(LabError::Config(format!("half_length {} must be positive", g.half_length)));
        }
        g.grid_for(*hbars.last().unwrap())?;
        if let Some(k) = &self.kernel {
            k.softening_on(&g.grid_for(hbars[0])?)?;
            InteractionKernel::new(k.strength, k.exponent, k.softening.or(k.softening_cells).unwrap_or(0.0))
                .map_err(|e| LabError::Config(e.to_string()))?;
        }
        let t = &self.tolerances;
        if !(t.tf_damping > 0.0 && t.tf_damping <= 1.0) || !(t.scf.mixing > 0.0 && t.scf.mixing <= 1.0) {
            return Err(LabError::Config("damping and mixing must lie in (0, 1]".into()));
        }
        let s = &self.shifts;
        if s.dyadic.0 >= s.dyadic.1 {
            return Err(LabError::Config(format!("empty dyadic range {:?}", s.dyadic)));
        }
        if !(s.besov_p >= 1.0) || !(s.besov_s > 0.0 && s.besov_s < 1.0) {
            return Err(LabError::Config(format!("Besov parameters p = {}, s = {} out of range", s.besov_p, s.besov_s)));
        }
        if let Some(q) = &self.quantities {
            for name in q {
                if super::quantities::Quantity::parse(name).is_none() {
                    return Err(LabError::Config(format!("unknown quantity {name:?}")));
                }
            }
        }
        Ok(())
    }
}

fn parse_lenient<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    if text.trim_start().starts_with('{') {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    } else {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }
}

fn read_config(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("cannot read config {}: {e}", path.display())))
}

/// Input of the `rates` subcommand. Unknown keys are ignored, so a sweep configuration
/// with `inputs` also works.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RatesConfig {
    /// Sweep CSV files; relative paths resolve against the configuration file.
    #[serde(default)]
    pub inputs: Vec<PathBuf>,
    /// Requested fits; `None` selects the suite defaults of every quantity present.
    #[serde(default)]
    pub fits: Option<Vec<FitSpec>>,
}

impl RatesConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: RatesConfig = parse_lenient(&read_config(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for input in &mut config.inputs {
            if input.is_relative() {
                *input = base.join(&*input);
            }
        }
        if config.inputs.is_empty() {
            return Err(LabError::Config("rates needs at least one input CSV".into()));
        }
        Ok(config)
    }
}

fn default_identity_count() -> usize {
    200
}
fn default_identity_tolerance() -> f64 {
    1e-9
}

/// Optional input of the `identities` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentitiesConfig {
    /// Random instances per identity kind.
    #[serde(default = "default_identity_count")]
    pub count: usize,
    /// Residual bound relative to `max(1, |lhs| + |rhs|)`.
    #[serde(default = "default_identity_tolerance")]
    pub tolerance: f64,
}

impl Default for IdentitiesConfig {
    fn default() -> Self {
        IdentitiesConfig { count: default_identity_count(), tolerance: default_identity_tolerance() }
    }
}

impl IdentitiesConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let config: IdentitiesConfig = parse_lenient(&read_config(path)?)?;
        if config.count == 0 || !(config.tolerance > 0.0) {
            return Err(LabError::Config("identities needs count ≥ 1 and a positive tolerance".into()));
        }
        Ok(config)
    }
}
