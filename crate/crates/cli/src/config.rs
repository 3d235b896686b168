//! Run configuration: a single JSON document.
//!
//! All quantities are SI: metres, kelvin, kilograms, and angular frequencies
//! in rad/s.

use serde::{Deserialize, Serialize};
use spatial_witness::constants::RB87_MASS;
use spatial_witness::{
    AxialOptions, CoherenceOptions, DetectorProfile, DiagonalConvention, EvalOptions, GasSpec,
    Strategy, TrapSpec, TransverseReduction,
};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub gas: GasConfig,
    pub analysis: AnalysisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub numerics: NumericsConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrapConfig {
    Uniform1d { length: f64 },
    Box3d { lx: f64, ly: f64, lz: f64 },
    Harmonic1d { omega: f64 },
    Cigar3d { omega_ax: f64, omega_per: f64 },
}

impl TrapConfig {
    pub fn spec(&self) -> TrapSpec {
        match *self {
            TrapConfig::Uniform1d { length } => TrapSpec::Uniform1D { length },
            TrapConfig::Box3d { lx, ly, lz } => TrapSpec::UniformBox3D { lx, ly, lz },
            TrapConfig::Harmonic1d { omega } => TrapSpec::Harmonic1D { omega },
            TrapConfig::Cigar3d {
                omega_ax,
                omega_per,
            } => TrapSpec::HarmonicCigar3D {
                omega_ax,
                omega_per,
            },
        }
    }
}

fn default_mass() -> f64 {
    RB87_MASS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasConfig {
    pub trap: TrapConfig,
    pub n: u64,
    #[serde(default = "default_mass")]
    pub mass: f64,
}

impl GasConfig {
    pub fn spec(&self) -> Result<GasSpec, CliError> {
        GasSpec::new(self.trap.spec(), self.n, self.mass)
            .map_err(|e| CliError::Config(format!("gas: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnalysisKind {
    Tc,
    Bipartite,
    Od,
    Tripartite,
    Tmax,
    Scan,
    Validate,
}

impl AnalysisKind {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisKind::Tc => "tc",
            AnalysisKind::Bipartite => "bipartite",
            AnalysisKind::Od => "od",
            AnalysisKind::Tripartite => "tripartite",
            AnalysisKind::Tmax => "tmax",
            AnalysisKind::Scan => "scan",
            AnalysisKind::Validate => "validate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string())).ok()
    }
}

/// Region specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionConfig {
    /// Explicit intervals for A and B; C is the complement.
    Slabs { a: [f64; 2], b: [f64; 2] },
    /// Two slabs of equal `length` separated by `gap`, placed symmetrically
    /// about `center` (the trap centre by default).
    Gap {
        length: f64,
        gap: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<f64>,
    },
    /// Three regions tiling the analysis domain, lengths in metres.
    Tiling { l_a: f64, l_b: f64 },
    /// Three regions tiling the analysis domain, lengths as domain fractions.
    TilingFraction { f_a: f64, f_b: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileConfig {
    #[default]
    UniformNormalized,
    Indicator,
    /// `[[u, g], ...]` over region-relative `u in [0, 1]`.
    TabulatedNormalized(Vec<[f64; 2]>),
}

impl ProfileConfig {
    pub fn profile(&self) -> DetectorProfile {
        match self {
            ProfileConfig::UniformNormalized => DetectorProfile::UniformNormalized,
            ProfileConfig::Indicator => DetectorProfile::Indicator,
            ProfileConfig::TabulatedNormalized(p) => {
                DetectorProfile::TabulatedNormalized(p.iter().map(|x| (x[0], x[1])).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ConventionConfig {
    StrictProjection,
    #[default]
    Population,
}

impl ConventionConfig {
    pub fn convention(&self) -> DiagonalConvention {
        match self {
            ConventionConfig::StrictProjection => DiagonalConvention::StrictProjection,
            ConventionConfig::Population => DiagonalConvention::Population,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub kind: AnalysisKind,
    #[serde(default)]
    pub axis: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionConfig>,
    #[serde(default)]
    pub profile: ProfileConfig,
    #[serde(default)]
    pub convention: ConventionConfig,
    /// K; used when the sweep does not vary temperature.
    #[serde(default)]
    pub temperature: f64,
    /// Fix transverse coordinates at the trap centre instead of integrating
    /// over full slabs.
    #[serde(default)]
    pub centre_slice: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// K
    Temperature,
    /// m, for `gap` partitions
    Gap,
    /// Length of B (m for `tiling`, fraction for `tiling_fraction`), with
    /// A and C sharing the remainder equally.
    LengthB,
    /// Particle number.
    N,
}

impl SweepParameter {
    pub fn column(&self) -> &'static str {
        match self {
            SweepParameter::Temperature => "T_K",
            SweepParameter::Gap => "gap_m",
            SweepParameter::LengthB => "length_b",
            SweepParameter::N => "N",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

fn default_tail() -> f64 {
    1e-10
}
fn default_rel_tol() -> f64 {
    1e-12
}
fn default_cap() -> usize {
    spatial_witness::modes::DEFAULT_MODE_CAP
}
fn default_crossover() -> usize {
    3000
}
fn default_abs_tol() -> f64 {
    1e-12
}
fn default_tmax_tol() -> f64 {
    spatial_witness::witness::DEFAULT_TMAX_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StrategyConfig {
    #[default]
    Auto,
    OverlapMatrix,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default = "default_tail")]
    pub tail_tolerance: f64,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
    #[serde(default = "default_cap")]
    pub mode_cap: usize,
    #[serde(default = "default_crossover")]
    pub crossover: usize,
    #[serde(default)]
    pub strategy: StrategyConfig,
    #[serde(default = "default_abs_tol")]
    pub abs_tol: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// K
    #[serde(default = "default_tmax_tol")]
    pub tmax_tol: f64,
    /// K; defaults to (1 nK, 1.5 T_C).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bracket: Option<[f64; 2]>,
    /// Grid points for `validate`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle_points: Option<usize>,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

fn default_precision() -> usize {
    12
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    #[serde(default)]
    pub format: Format,
    /// Significant digits in scientific notation.
    #[serde(default = "default_precision")]
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

impl RunConfig {
    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| {
            CliError::Config(format!("line {}, column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        let gas = self.gas.spec()?;
        if self.analysis.axis >= gas.trap.dims() {
            return bad(
                "analysis.axis",
                format!("axis {} out of range for a {}-axis trap", self.analysis.axis, gas.trap.dims()),
            );
        }
        if !(self.analysis.temperature.is_finite() && self.analysis.temperature >= 0.0) {
            return bad("analysis.temperature", "must be finite and non-negative".into());
        }
        self.analysis
            .profile
            .profile()
            .validate()
            .or_else(|e| bad("analysis.profile", e.to_string()))?;
        if let Some(p) = &self.analysis.partition {
            let ok = match *p {
                PartitionConfig::Slabs { a, b } => {
                    a.iter().chain(&b).all(|v| v.is_finite()) && a[1] >= a[0] && b[1] >= b[0]
                }
                PartitionConfig::Gap { length, gap, center } => {
                    length > 0.0 && gap >= 0.0 && center.is_none_or(|c| c.is_finite())
                }
                PartitionConfig::Tiling { l_a, l_b } => l_a > 0.0 && l_b > 0.0,
                PartitionConfig::TilingFraction { f_a, f_b } => {
                    f_a > 0.0 && f_b > 0.0 && f_a + f_b < 1.0
                }
            };
            if !ok {
                return bad("analysis.partition", "lengths must be positive and finite".into());
            }
        }
        let kind = self.analysis.kind;
        let needs_pair = matches!(kind, AnalysisKind::Bipartite | AnalysisKind::Od);
        let needs_tiling = matches!(kind, AnalysisKind::Tripartite | AnalysisKind::Tmax | AnalysisKind::Scan);
        match (&self.analysis.partition, needs_pair, needs_tiling) {
            (None, true, _) | (None, _, true) => {
                return bad("analysis.partition", format!("required for '{}'", kind.name()));
            }
            (Some(PartitionConfig::Tiling { .. } | PartitionConfig::TilingFraction { .. }), true, _) => {
                return bad("analysis.partition", format!("'{}' needs a slabs or gap partition", kind.name()));
            }
            (Some(PartitionConfig::Slabs { .. } | PartitionConfig::Gap { .. }), _, true) => {
                return bad("analysis.partition", format!("'{}' needs a tiling partition", kind.name()));
            }
            _ => {}
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return bad("sweep.values", "grid is empty".into());
            }
            if s.values.iter().any(|v| !v.is_finite()) {
                return bad("sweep.values", "non-finite grid value".into());
            }
            let up = s.values.windows(2).all(|w| w[1] > w[0]);
            let down = s.values.windows(2).all(|w| w[1] < w[0]);
            if !(up || down) {
                return bad("sweep.values", "grid must be strictly monotone".into());
            }
            let positive = match s.parameter {
                SweepParameter::Temperature => s.values.iter().all(|&v| v >= 0.0),
                SweepParameter::N => s.values.iter().all(|&v| v >= 1.0 && v.fract() == 0.0),
                _ => s.values.iter().all(|&v| v > 0.0),
            };
            if !positive {
                return bad("sweep.values", format!("invalid value for parameter '{:?}'", s.parameter));
            }
            match (s.parameter, &self.analysis.partition) {
                (SweepParameter::Gap, Some(PartitionConfig::Gap { .. })) => {}
                (SweepParameter::Gap, _) => {
                    return bad("sweep.parameter", "'gap' sweeps need a gap partition".into());
                }
                (SweepParameter::LengthB, Some(PartitionConfig::Tiling { .. } | PartitionConfig::TilingFraction { .. })) => {}
                (SweepParameter::LengthB, _) => {
                    return bad("sweep.parameter", "'length_b' sweeps need a tiling partition".into());
                }
                _ => {}
            }
            if kind == AnalysisKind::Tmax && s.parameter == SweepParameter::Temperature {
                return bad("sweep.parameter", "'tmax' solves for temperature; sweep length_b or n".into());
            }
            if kind == AnalysisKind::Scan && s.parameter != SweepParameter::LengthB {
                return bad("sweep.parameter", "'scan' sweeps length_b".into());
            }
        } else if kind == AnalysisKind::Scan {
            return bad("sweep", "'scan' needs a length_b grid".into());
        }
        let n = &self.numerics;
        if !(n.tail_tolerance > 0.0 && n.tail_tolerance < 1.0) {
            return bad("numerics.tail_tolerance", "must lie in (0, 1)".into());
        }
        if !(n.rel_tol > 0.0 && n.rel_tol <= 1e-3) {
            return bad("numerics.rel_tol", "must lie in (0, 1e-3]".into());
        }
        if !(n.abs_tol > 0.0) || !(n.tmax_tol > 0.0) {
            return bad("numerics", "tolerances must be positive".into());
        }
        if n.mode_cap == 0 || n.threads == Some(0) {
            return bad("numerics", "mode_cap and threads must be positive".into());
        }
        if let Some([lo, hi]) = n.bracket {
            if !(lo >= 0.0 && hi > lo) {
                return bad("numerics.bracket", "must be an ordered pair of temperatures".into());
            }
        }
        if self.output.precision == 0 || self.output.precision > 17 {
            return bad("output.precision", "must lie in 1..=17".into());
        }
        Ok(())
    }

    pub fn eval_options(&self) -> EvalOptions {
        let n = &self.numerics;
        EvalOptions {
            axial: AxialOptions {
                tail_tolerance: n.tail_tolerance,
                rel_tol: n.rel_tol,
                reduction: if self.analysis.centre_slice {
                    TransverseReduction::CentreSlice
                } else {
                    TransverseReduction::Slab
                },
                mode_cap: n.mode_cap,
            },
            coherence: CoherenceOptions {
                abs_tol: n.abs_tol,
                crossover: n.crossover,
                strategy: match n.strategy {
                    StrategyConfig::Auto => Strategy::Auto,
                    StrategyConfig::OverlapMatrix => Strategy::OverlapMatrix,
                    StrategyConfig::Direct => Strategy::Direct,
                },
            },
        }
    }
}
