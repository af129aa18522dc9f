//! Experiment configuration: a TOML document with `[walk]`, `[run]`,
//! `[spectral]` and `[sweep]` tables.
//!
//! ```toml
//! [walk]
//! family = "lazy"          # lazy | normal | stay_or_right | classical_normal | classical_lazy
//! coin = "dft3"            # coin grammar of `CoinOperator::parse`
//! initial = ["0.9219544457292887", "0", "-0.3872983346207417"]
//! steps = 200
//!
//! [run]
//! stride = 1
//! metrics = ["occrate", "entropy", "moment:2", "genoccrate:0.5"]
//!
//! [spectral]
//! grid = 2048
//! bins = 201
//!
//! [sweep]
//! parameter = "rho"
//! values = [0.1, 0.2, 0.3]
//! metric = "occrate"
//! ```

use std::fmt;
use std::ops::Range;

use lazywalk::classical::ClassicalStepLaw;
use lazywalk::coin::parse_complex;
use lazywalk::spectral::{DEFAULT_GRID_POINTS, DEFAULT_VELOCITY_BINS};
use lazywalk::{CoinOperator, ShiftKind, WalkSpec};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub walk: WalkSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub spectral: SpectralSection,
    pub sweep: Option<SweepSection>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSection {
    pub family: Spanned<String>,
    pub coin: Option<Spanned<String>>,
    pub initial: Option<Vec<Spanned<Amplitude>>>,
    pub steps: Spanned<u64>,
    /// Stay probability of the classical lazy walk; defaults to 1/3.
    pub p_stay: Option<Spanned<f64>>,
}

/// A complex amplitude written either as a TOML number or as `"re"`,
/// `"re+imj"` or `"imj"`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Amplitude {
    Real(f64),
    Text(String),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_stride")]
    pub stride: Spanned<u64>,
    #[serde(default)]
    pub metrics: Vec<Spanned<String>>,
    /// Output directory, overridden by `--out`.
    pub output: Option<String>,
    /// Worker threads, overridden by `--workers`.
    pub workers: Option<usize>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            stride: default_stride(),
            metrics: Vec::new(),
            output: None,
            workers: None,
        }
    }
}

fn default_stride() -> Spanned<u64> {
    Spanned::new(0..0, 1)
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    #[serde(default = "default_grid")]
    pub grid: Spanned<usize>,
    #[serde(default = "default_bins")]
    pub bins: Spanned<usize>,
}

impl Default for SpectralSection {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            bins: default_bins(),
        }
    }
}

fn default_grid() -> Spanned<usize> {
    Spanned::new(0..0, DEFAULT_GRID_POINTS)
}

fn default_bins() -> Spanned<usize> {
    Spanned::new(0..0, DEFAULT_VELOCITY_BINS)
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub parameter: Spanned<String>,
    pub values: Spanned<Vec<f64>>,
    pub metric: Spanned<String>,
}

/// Walk family named in `[walk] family`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Quantum(ShiftKind),
    ClassicalNormal,
    ClassicalLazy,
}

impl Family {
    pub fn shift(self) -> ShiftKind {
        match self {
            Family::Quantum(s) => s,
            Family::ClassicalNormal | Family::ClassicalLazy => ShiftKind::Normal,
        }
    }

    pub fn is_classical(self) -> bool {
        !matches!(self, Family::Quantum(_))
    }
}

/// The walk described by a config, validated and ready to run.
#[derive(Clone, Debug)]
pub enum PreparedWalk {
    Quantum(WalkSpec),
    Classical { law: ClassicalStepLaw, steps: u64 },
}

impl PreparedWalk {
    pub fn steps(&self) -> u64 {
        match self {
            PreparedWalk::Quantum(spec) => spec.steps() as u64,
            PreparedWalk::Classical { steps, .. } => *steps,
        }
    }

    pub fn shift(&self) -> ShiftKind {
        match self {
            PreparedWalk::Quantum(spec) => spec.shift(),
            PreparedWalk::Classical { .. } => ShiftKind::Normal,
        }
    }

    pub fn with_steps(&self, steps: u64) -> Self {
        match self {
            PreparedWalk::Quantum(spec) => PreparedWalk::Quantum(spec.with_steps(steps as usize)),
            PreparedWalk::Classical { law, .. } => PreparedWalk::Classical { law: *law, steps },
        }
    }
}

/// One requested observable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Metric {
    Distribution,
    Moment(u32),
    Occ,
    OccRate,
    GenOcc(f64),
    GenOccRate(f64),
    Entropy,
    Bands,
    VDensity,
    OccRateAsymptotic,
    XStar,
}

impl Metric {
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        let with_arg = |prefix: &str| text.strip_prefix(prefix).map(str::trim);
        Some(match text {
            "distribution" => Metric::Distribution,
            "occ" => Metric::Occ,
            "occrate" => Metric::OccRate,
            "entropy" => Metric::Entropy,
            "bands" => Metric::Bands,
            "vdensity" => Metric::VDensity,
            "occrate_asymptotic" => Metric::OccRateAsymptotic,
            "x_star" => Metric::XStar,
            _ => {
                if let Some(n) = with_arg("moment:") {
                    Metric::Moment(n.parse().ok().filter(|&n| n >= 1)?)
                } else if let Some(d) = with_arg("genoccrate:") {
                    Metric::GenOccRate(positive(d)?)
                } else {
                    let d = with_arg("genocc:")?;
                    Metric::GenOcc(positive(d)?)
                }
            }
        })
    }

    /// Whether the metric is a number per recorded time.
    pub fn is_scalar(self) -> bool {
        !matches!(self, Metric::Distribution | Metric::Bands | Metric::VDensity)
    }

    /// Output file stem, e.g. `moment_2` or `genoccrate_0.5`.
    pub fn file_stem(self) -> String {
        match self {
            Metric::Moment(n) => format!("moment_{n}"),
            Metric::GenOcc(d) => format!("genocc_{d}"),
            Metric::GenOccRate(d) => format!("genoccrate_{d}"),
            other => other.to_string(),
        }
    }
}

fn positive(text: &str) -> Option<f64> {
    text.parse::<f64>().ok().filter(|d| d.is_finite() && *d > 0.0)
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::Distribution => write!(f, "distribution"),
            Metric::Moment(n) => write!(f, "moment:{n}"),
            Metric::Occ => write!(f, "occ"),
            Metric::OccRate => write!(f, "occrate"),
            Metric::GenOcc(d) => write!(f, "genocc:{d}"),
            Metric::GenOccRate(d) => write!(f, "genoccrate:{d}"),
            Metric::Entropy => write!(f, "entropy"),
            Metric::Bands => write!(f, "bands"),
            Metric::VDensity => write!(f, "vdensity"),
            Metric::OccRateAsymptotic => write!(f, "occrate_asymptotic"),
            Metric::XStar => write!(f, "x_star"),
        }
    }
}

/// Sweepable parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepParameter {
    Rho,
    Delta,
    Steps,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Rho => "rho",
            SweepParameter::Delta => "delta",
            SweepParameter::Steps => "steps",
        }
    }
}

/// A parsed config plus its source text, for positioned error messages.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub source_name: String,
    pub text: String,
    pub config: ExperimentConfig,
}

impl LoadedConfig {
    pub fn parse(source_name: &str, text: &str) -> Result<Self, CliError> {
        let config = toml::from_str(text).map_err(|e| CliError::Config(format!("{source_name}: {e}")))?;
        Ok(Self {
            source_name: source_name.to_string(),
            text: text.to_string(),
            config,
        })
    }

    /// A config error pointing at `span`, as `name:line:column: message`.
    pub fn error_at(&self, span: Range<usize>, message: impl fmt::Display) -> CliError {
        if span.is_empty() && span.start == 0 {
            return CliError::Config(format!("{}: {message}", self.source_name));
        }
        let (line, column) = line_column(&self.text, span.start);
        CliError::Config(format!("{}:{line}:{column}: {message}", self.source_name))
    }

    pub fn family(&self) -> Result<Family, CliError> {
        let f = &self.config.walk.family;
        match f.get_ref().as_str() {
            "lazy" => Ok(Family::Quantum(ShiftKind::Lazy)),
            "normal" => Ok(Family::Quantum(ShiftKind::Normal)),
            "stay_or_right" => Ok(Family::Quantum(ShiftKind::StayOrRight)),
            "classical_normal" => Ok(Family::ClassicalNormal),
            "classical_lazy" => Ok(Family::ClassicalLazy),
            other => Err(self.error_at(
                f.span(),
                format!(
                    "unknown walk family {other:?} (expected lazy, normal, stay_or_right, classical_normal or classical_lazy)"
                ),
            )),
        }
    }

    /// Builds the walk, replacing the coin when `coin_override` is given.
    pub fn prepare(&self, coin_override: Option<&str>) -> Result<PreparedWalk, CliError> {
        let walk = &self.config.walk;
        let steps = *walk.steps.get_ref();
        match self.family()? {
            Family::Quantum(shift) => {
                let coin_field = walk
                    .coin
                    .as_ref()
                    .ok_or_else(|| self.error_at(walk.family.span(), "quantum walk families need a `coin`"))?;
                let coin_text = coin_override.unwrap_or(coin_field.get_ref());
                let coin = CoinOperator::parse(coin_text).map_err(|e| self.error_at(coin_field.span(), e))?;
                let initial = walk
                    .initial
                    .as_ref()
                    .ok_or_else(|| self.error_at(walk.family.span(), "quantum walk families need `initial` amplitudes"))?;
                let psi = initial
                    .iter()
                    .map(|a| match a.get_ref() {
                        Amplitude::Real(re) => Ok(Complex64::new(*re, 0.0)),
                        Amplitude::Text(t) => parse_complex(t).map_err(|e| self.error_at(a.span(), e)),
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let span = initial.first().map(|a| a.span()).unwrap_or(walk.family.span());
                let spec = WalkSpec::new(coin, shift, psi, steps as usize).map_err(|e| self.error_at(span, e))?;
                Ok(PreparedWalk::Quantum(spec))
            }
            Family::ClassicalNormal => Ok(PreparedWalk::Classical {
                law: ClassicalStepLaw::normal(),
                steps,
            }),
            Family::ClassicalLazy => {
                let law = match &walk.p_stay {
                    Some(p) => ClassicalStepLaw::lazy(*p.get_ref()).map_err(|e| self.error_at(p.span(), e))?,
                    None => ClassicalStepLaw::lazy_uniform(),
                };
                Ok(PreparedWalk::Classical { law, steps })
            }
        }
    }

    pub fn stride(&self) -> Result<u64, CliError> {
        let s = &self.config.run.stride;
        if *s.get_ref() == 0 {
            return Err(self.error_at(s.span(), "stride must be at least 1"));
        }
        Ok(*s.get_ref())
    }

    pub fn metrics(&self) -> Result<Vec<Metric>, CliError> {
        let family = self.family()?;
        self.config
            .run
            .metrics
            .iter()
            .map(|m| self.check_metric(m, family))
            .collect()
    }

    fn check_metric(&self, m: &Spanned<String>, family: Family) -> Result<Metric, CliError> {
        let metric = Metric::parse(m.get_ref()).ok_or_else(|| {
            self.error_at(
                m.span(),
                format!(
                    "unknown metric {:?} (expected distribution, moment:<n>, occ, occrate, genocc:<delta>, \
                     genoccrate:<delta>, entropy, bands, vdensity, occrate_asymptotic or x_star)",
                    m.get_ref()
                ),
            )
        })?;
        let quantum_only = matches!(metric, Metric::Entropy | Metric::Bands | Metric::VDensity);
        if quantum_only && family.is_classical() {
            return Err(self.error_at(m.span(), format!("metric {metric} needs a quantum walk family")));
        }
        Ok(metric)
    }

    pub fn sweep(&self) -> Result<(SweepParameter, Vec<f64>, Metric), CliError> {
        let sweep = self
            .config
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{}: missing [sweep] table", self.source_name)))?;
        let parameter = match sweep.parameter.get_ref().as_str() {
            "rho" => SweepParameter::Rho,
            "delta" => SweepParameter::Delta,
            "steps" => SweepParameter::Steps,
            other => {
                return Err(self.error_at(
                    sweep.parameter.span(),
                    format!("unknown sweep parameter {other:?} (expected rho, delta or steps)"),
                ))
            }
        };
        let values = sweep.values.get_ref().clone();
        if values.is_empty() {
            return Err(self.error_at(sweep.values.span(), "sweep needs at least one value"));
        }
        let metric = self.check_metric(&sweep.metric, self.family()?)?;
        if !metric.is_scalar() {
            return Err(self.error_at(sweep.metric.span(), format!("sweep metric {metric} is not a scalar")));
        }
        match parameter {
            SweepParameter::Rho if self.family()? != Family::Quantum(ShiftKind::Lazy) => {
                return Err(self.error_at(sweep.parameter.span(), "rho sweeps need the lazy family"));
            }
            SweepParameter::Delta if !matches!(metric, Metric::GenOcc(_) | Metric::GenOccRate(_)) => {
                return Err(self.error_at(sweep.metric.span(), "delta sweeps need a genocc or genoccrate metric"));
            }
            SweepParameter::Steps if values.iter().any(|v| *v < 0.0 || v.fract() != 0.0) => {
                return Err(self.error_at(sweep.values.span(), "step counts must be non-negative integers"));
            }
            _ => {}
        }
        Ok((parameter, values, metric))
    }

    pub fn grid(&self) -> usize {
        *self.config.spectral.grid.get_ref()
    }

    pub fn bins(&self) -> usize {
        *self.config.spectral.bins.get_ref()
    }

    pub fn spectral_error(&self, grid: bool, e: impl fmt::Display) -> CliError {
        let field = if grid {
            &self.config.spectral.grid
        } else {
            &self.config.spectral.bins
        };
        self.error_at(field.span(), e)
    }
}

/// 1-based line and column of byte offset `pos`.
fn line_column(text: &str, pos: usize) -> (usize, usize) {
    let before = &text[..pos.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |i| before.len() - i - 1) + 1;
    (line, column)
}
