//! Run configuration: TOML with explicit units on every dimensioned quantity.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::de::{self, Deserializer};
use serde::Deserialize;

use mmgauss::elements::{build_jsa, JsaSpec, LobeSign};
use mmgauss::experiments::{default_grid, DetectorKind, FilterSpec, HhomConfig, SweepAxis};
use mmgauss::FrequencyGrid;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{0}")]
    Syntax(String),
    #[error("field `{field}`: {reason}")]
    Field { field: String, reason: String },
}

fn field(name: impl Into<String>, reason: impl fmt::Display) -> ConfigError {
    ConfigError::Field {
        field: name.into(),
        reason: reason.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    /// Angular frequency, stored in rad/s.
    Frequency,
    /// Time, stored in seconds.
    Time,
}

/// A number with a unit suffix, e.g. `"0.1 THz"`, `"1.2e11 rad/s"`, `"29 ps"`.
///
/// Frequencies in Hz-type units are ordinary frequencies and are converted to
/// angular frequency (`1 THz = 2 pi 1e12 rad/s`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity {
    pub value: f64,
    pub dimension: Dimension,
}

impl FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let split = s
            .find(|c: char| c.is_ascii_alphabetic() && c != 'e' && c != 'E')
            .or_else(|| s.rfind(' ').map(|i| i + 1))
            .ok_or_else(|| format!("`{s}` has no unit (use THz, GHz, Hz, rad/s, ps, fs, ns or s)"))?;
        let (num, unit) = s.split_at(split);
        let x: f64 = num
            .trim()
            .parse()
            .map_err(|_| format!("`{}` is not a number", num.trim()))?;
        let (scale, dimension) = match unit.trim() {
            "THz" => (TAU * 1e12, Dimension::Frequency),
            "GHz" => (TAU * 1e9, Dimension::Frequency),
            "Hz" => (TAU, Dimension::Frequency),
            "rad/s" => (1.0, Dimension::Frequency),
            "s" => (1.0, Dimension::Time),
            "ns" => (1e-9, Dimension::Time),
            "ps" => (1e-12, Dimension::Time),
            "fs" => (1e-15, Dimension::Time),
            other => return Err(format!("unknown unit `{other}`")),
        };
        if !x.is_finite() {
            return Err(format!("`{s}` is not finite"));
        }
        Ok(Quantity {
            value: x * scale,
            dimension,
        })
    }
}

impl<'de> Deserialize<'de> for Quantity {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
            Raw::Number(x) => Err(de::Error::custom(format!(
                "{x} needs a unit, e.g. \"{x} THz\", \"{x} rad/s\" or \"{x} ps\""
            ))),
        }
    }
}

impl Quantity {
    fn expect(self, dim: Dimension, name: &str) -> Result<f64, ConfigError> {
        if self.dimension != dim {
            let want = match dim {
                Dimension::Frequency => "a frequency",
                Dimension::Time => "a time",
            };
            return Err(field(name, format!("expected {want}")));
        }
        Ok(self.value)
    }
}

/// A sweep value: a plain number for dimensionless axes, a quantity otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepValue {
    Plain(f64),
    Unit(Quantity),
}

impl<'de> Deserialize<'de> for SweepValue {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        Ok(match Raw::deserialize(d)? {
            Raw::Text(s) => SweepValue::Unit(s.parse().map_err(de::Error::custom)?),
            Raw::Number(x) => SweepValue::Plain(x),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    HomDelaySweep,
    MziAngleSweep,
    PowerSweep,
    LossSweep,
    FilterStudy,
    StructuredSources,
    Probe,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::HomDelaySweep => "hom_delay_sweep",
            Experiment::MziAngleSweep => "mzi_angle_sweep",
            Experiment::PowerSweep => "power_sweep",
            Experiment::LossSweep => "loss_sweep",
            Experiment::FilterStudy => "filter_study",
            Experiment::StructuredSources => "structured_sources",
            Experiment::Probe => "probe",
        }
    }

    pub fn default_axis(self) -> Option<SweepAxis> {
        match self {
            Experiment::HomDelaySweep | Experiment::StructuredSources => Some(SweepAxis::Delay),
            Experiment::MziAngleSweep => Some(SweepAxis::Angle),
            Experiment::PowerSweep | Experiment::FilterStudy => Some(SweepAxis::Squeezing),
            Experiment::LossSweep => Some(SweepAxis::Loss),
            Experiment::Probe => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Gaussian,
    Waveguide,
    DoubleLobe,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub shape: Shape,
    pub squeezing: f64,
    pub bandwidth: Quantity,
    pub center: Quantity,
    pub idler_center: Option<Quantity>,
    pub walkoff: Option<Quantity>,
    pub separation: Option<Quantity>,
    pub sign: Option<Sign>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub bins: usize,
    pub half_span: Option<Quantity>,
    pub center: Option<Quantity>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum LossConfig {
    Uniform(f64),
    PerMode([f64; 4]),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorName {
    Pnr,
    Threshold,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub delay: Option<Quantity>,
    /// Beam-splitter angle in radians.
    pub bs_angle: Option<f64>,
    pub loss: Option<LossConfig>,
    pub detector: Option<DetectorName>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FilterWidth {
    Width(Quantity),
    /// Only `"none"` is accepted.
    None(String),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterConfig {
    pub half_width: Option<Quantity>,
    /// Several settings for `filter_study`; `"none"` means unfiltered.
    pub half_widths: Option<Vec<FilterWidth>>,
    pub center: Option<Quantity>,
    pub modes: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub axis: Option<String>,
    pub values: Option<Vec<SweepValue>>,
    pub from: Option<SweepValue>,
    pub to: Option<SweepValue>,
    pub points: Option<usize>,
    /// Column plotted and summarized; defaults per axis.
    pub metric: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    /// Output file prefix, relative to the output directory.
    pub output: String,
    #[serde(default = "yes")]
    pub svg: bool,
    pub source: Option<SourceConfig>,
    pub source_a: Option<SourceConfig>,
    pub source_b: Option<SourceConfig>,
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub circuit: CircuitConfig,
    pub filter: Option<FilterConfig>,
    pub sweep: Option<SweepConfig>,
}

fn yes() -> bool {
    true
}

/// Everything a runner needs, validated and in SI / rad/s units.
#[derive(Debug, Clone)]
pub struct Plan {
    pub experiment: Experiment,
    pub output: String,
    pub svg: bool,
    pub template: HhomConfig,
    pub axis: Option<SweepAxis>,
    pub values: Vec<f64>,
    pub metric: String,
    /// Filter settings for `filter_study`; `None` entries are unfiltered.
    pub filters: Vec<Option<FilterSpec>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    pub fn plan(&self) -> Result<Plan, ConfigError> {
        if self.output.is_empty() || self.output.contains(['/', '\\']) {
            return Err(field("output", "must be a bare file prefix"));
        }
        let (a, b) = match (&self.source, &self.source_a, &self.source_b) {
            (Some(s), None, None) => (source_spec(s, "source")?, source_spec(s, "source")?),
            (None, Some(a), Some(b)) => (source_spec(a, "source_a")?, source_spec(b, "source_b")?),
            _ => {
                return Err(field(
                    "source",
                    "give either [source] or both [source_a] and [source_b]",
                ))
            }
        };
        let grid = match &self.grid {
            None => default_grid(&[a, b]).map_err(|e| field("grid", e))?,
            Some(g) => {
                let center = match g.center {
                    Some(q) => q.expect(Dimension::Frequency, "grid.center")?,
                    None => a.signal_center,
                };
                let half = match g.half_span {
                    Some(q) => q.expect(Dimension::Frequency, "grid.half_span")?,
                    None => default_grid(&[a, b]).map_err(|e| field("grid", e))?.half_span(),
                };
                FrequencyGrid::spanning(center, half, g.bins).map_err(|e| field("grid", e))?
            }
        };
        let mut t = HhomConfig::new(a, b).map_err(|e| field("source", e))?.with_grid(grid);
        let c = &self.circuit;
        if let Some(d) = c.delay {
            t = t.with_delay(d.expect(Dimension::Time, "circuit.delay")?);
        }
        if let Some(theta) = c.bs_angle {
            t = t.with_bs_angle(theta);
        }
        match &c.loss {
            Some(LossConfig::Uniform(e)) => t = t.with_uniform_loss(*e),
            Some(LossConfig::PerMode(l)) => t.loss = *l,
            None => {}
        }
        if let Some(d) = c.detector {
            t = t.with_detector(match d {
                DetectorName::Pnr => DetectorKind::Pnr,
                DetectorName::Threshold => DetectorKind::Threshold,
            });
        }

        let mut filters = Vec::new();
        if let Some(f) = &self.filter {
            let center = match f.center {
                Some(q) => q.expect(Dimension::Frequency, "filter.center")?,
                None => grid.center(),
            };
            let modes = f.modes.clone().unwrap_or_else(|| vec![0, 1, 2, 3]);
            let spec = |w: f64| FilterSpec {
                center,
                half_width: w,
                modes: modes.clone(),
            };
            match (f.half_width, &f.half_widths) {
                (Some(w), None) => {
                    t = t.with_filter(Some(spec(w.expect(Dimension::Frequency, "filter.half_width")?)))
                }
                (None, Some(list)) => {
                    if self.experiment != Experiment::FilterStudy {
                        return Err(field("filter.half_widths", "only used by filter_study"));
                    }
                    for w in list {
                        filters.push(match w {
                            FilterWidth::Width(q) => {
                                Some(spec(q.expect(Dimension::Frequency, "filter.half_widths")?))
                            }
                            FilterWidth::None(s) if s == "none" => None,
                            FilterWidth::None(s) => {
                                return Err(field("filter.half_widths", format!("`{s}` is neither a frequency nor \"none\"")))
                            }
                        });
                    }
                }
                (None, None) => {}
                (Some(_), Some(_)) => {
                    return Err(field("filter", "give half_width or half_widths, not both"))
                }
            }
        }
        if self.experiment == Experiment::FilterStudy && filters.is_empty() {
            return Err(field("filter.half_widths", "filter_study needs a list of filter settings"));
        }
        t.validate().map_err(|e| field("circuit", e))?;
        for (name, src) in [("source_a", &t.source_a), ("source_b", &t.source_b)] {
            build_jsa(src, &t.grid, &t.grid).map_err(|e| field(if self.grid.is_some() { "grid" } else { name }, e))?;
        }

        let axis = match self.sweep.as_ref().and_then(|s| s.axis.as_deref()) {
            Some(name) => {
                if self.experiment == Experiment::Probe {
                    return Err(field("sweep.axis", "probe does not sweep"));
                }
                Some(name.parse().map_err(|e| field("sweep.axis", e))?)
            }
            None => self.experiment.default_axis(),
        };
        let values = match (axis, &self.sweep) {
            (None, None) => Vec::new(),
            (None, Some(_)) => return Err(field("sweep", "probe does not sweep")),
            (Some(_), None) => return Err(field("sweep", "missing [sweep] section")),
            (Some(axis), Some(s)) => sweep_values(axis, s)?,
        };
        if axis == Some(SweepAxis::FilterWidth) && self.experiment == Experiment::FilterStudy {
            return Err(field("sweep.axis", "filter_study sweeps xi over each filter setting"));
        }
        let metric = match self.sweep.as_ref().and_then(|s| s.metric.clone()) {
            Some(m) => {
                const METRICS: [&str; 6] = ["p4", "p_bunch", "p_herald", "eta_herald", "v_hom", "v_mzi"];
                if !METRICS.contains(&m.as_str()) {
                    return Err(field("sweep.metric", format!("unknown metric `{m}`, expected one of {METRICS:?}")));
                }
                m
            }
            None => match axis {
                Some(SweepAxis::Delay) | None => "p4",
                Some(SweepAxis::Angle) => "v_mzi",
                Some(_) => "v_hom",
            }
            .to_string(),
        };
        Ok(Plan {
            experiment: self.experiment,
            output: self.output.clone(),
            svg: self.svg,
            template: t,
            axis,
            values,
            metric,
            filters,
        })
    }
}

fn source_spec(s: &SourceConfig, name: &str) -> Result<JsaSpec, ConfigError> {
    let f = |q: Quantity, what: &str| q.expect(Dimension::Frequency, &format!("{name}.{what}"));
    let bandwidth = f(s.bandwidth, "bandwidth")?;
    let center = f(s.center, "center")?;
    let unused = |present: bool, what: &str| -> Result<(), ConfigError> {
        if present {
            Err(field(format!("{name}.{what}"), "not used by this shape"))
        } else {
            Ok(())
        }
    };
    let mut spec = match s.shape {
        Shape::Gaussian => {
            unused(s.walkoff.is_some(), "walkoff")?;
            unused(s.separation.is_some() || s.sign.is_some(), "separation")?;
            JsaSpec::gaussian(s.squeezing, bandwidth, center)
        }
        Shape::Waveguide => {
            unused(s.separation.is_some() || s.sign.is_some(), "separation")?;
            let w = s
                .walkoff
                .ok_or_else(|| field(format!("{name}.walkoff"), "required for a waveguide source"))?
                .expect(Dimension::Time, &format!("{name}.walkoff"))?;
            JsaSpec::waveguide(s.squeezing, bandwidth, w, center)
        }
        Shape::DoubleLobe => {
            unused(s.walkoff.is_some(), "walkoff")?;
            let sep = f(
                s.separation
                    .ok_or_else(|| field(format!("{name}.separation"), "required for a double-lobe source"))?,
                "separation",
            )?;
            let sign = match s.sign.unwrap_or(Sign::Plus) {
                Sign::Plus => LobeSign::Plus,
                Sign::Minus => LobeSign::Minus,
            };
            JsaSpec::double_lobe(s.squeezing, bandwidth, sep, sign, center)
        }
    };
    if let Some(q) = s.idler_center {
        spec.idler_center = f(q, "idler_center")?;
    }
    spec.validate().map_err(|e| field(name, e))?;
    Ok(spec)
}

fn axis_value(axis: SweepAxis, v: SweepValue) -> Result<f64, ConfigError> {
    let name = "sweep.values";
    let x = match (axis, v) {
        (SweepAxis::Delay, SweepValue::Unit(q)) => q.expect(Dimension::Time, name)?,
        (SweepAxis::FilterWidth, SweepValue::Unit(q)) => q.expect(Dimension::Frequency, name)?,
        (SweepAxis::Delay | SweepAxis::FilterWidth, SweepValue::Plain(x)) => {
            return Err(field(name, format!("{x} needs a unit on the {} axis", axis.name())))
        }
        (_, SweepValue::Plain(x)) => x,
        (_, SweepValue::Unit(_)) => {
            return Err(field(name, format!("the {} axis is dimensionless", axis.name())))
        }
    };
    Ok(x)
}

fn sweep_values(axis: SweepAxis, s: &SweepConfig) -> Result<Vec<f64>, ConfigError> {
    match (&s.values, s.from, s.to, s.points) {
        (Some(list), None, None, None) => list.iter().map(|&v| axis_value(axis, v)).collect(),
        (None, Some(from), Some(to), Some(n)) => {
            let (a, b) = (axis_value(axis, from)?, axis_value(axis, to)?);
            match n {
                0 => Err(field("sweep.points", "must be at least 1")),
                1 => Ok(vec![a]),
                _ => Ok((0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()),
            }
        }
        _ => Err(field("sweep", "give either `values` or all of `from`, `to`, `points`")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
experiment = "power_sweep"
output = "out"

[source]
shape = "gaussian"
squeezing = 0.1
bandwidth = "0.1 THz"
center = "193.1 THz"

[sweep]
values = [0.1, 0.5]
"#;

    #[test]
    fn units() {
        let q: Quantity = "0.1 THz".parse().unwrap();
        assert!((q.value - TAU * 1e11).abs() < 1e-3);
        let q: Quantity = "1.2e11rad/s".parse().unwrap();
        assert_eq!(q.value, 1.2e11);
        let q: Quantity = "29 ps".parse().unwrap();
        assert_eq!(q.dimension, Dimension::Time);
        assert!((q.value - 29e-12).abs() < 1e-24);
        assert!("3".parse::<Quantity>().is_err());
        assert!("3 furlongs".parse::<Quantity>().is_err());
    }

    #[test]
    fn plain_numbers_need_units() {
        let text = BASE.replace("\"0.1 THz\"", "0.1");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("needs a unit"), "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = BASE.replace("squeezing = 0.1", "squeezing = 0.1\ncolour = \"red\"");
        let err = RunConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn plan_defaults() {
        let plan = RunConfig::parse(BASE).unwrap().plan().unwrap();
        assert_eq!(plan.axis, Some(SweepAxis::Squeezing));
        assert_eq!(plan.values, vec![0.1, 0.5]);
        assert_eq!(plan.metric, "v_hom");
        assert_eq!(plan.template.detector, DetectorKind::Pnr);
        assert_eq!(plan.template.source_a, plan.template.source_b);
    }

    #[test]
    fn ranges_and_dimensions() {
        let text = BASE
            .replace("power_sweep", "hom_delay_sweep")
            .replace("values = [0.1, 0.5]", "from = \"-2 ps\"\nto = \"2 ps\"\npoints = 5");
        let plan = RunConfig::parse(&text).unwrap().plan().unwrap();
        assert_eq!(plan.values.len(), 5);
        assert!((plan.values[4] - 2e-12).abs() < 1e-24);

        let wrong = BASE.replace("power_sweep", "hom_delay_sweep");
        let err = RunConfig::parse(&wrong).unwrap().plan().unwrap_err().to_string();
        assert!(err.contains("sweep.values"), "{err}");

        let time_as_width = BASE.replace("bandwidth = \"0.1 THz\"", "bandwidth = \"1 ps\"");
        let err = RunConfig::parse(&time_as_width).unwrap().plan().unwrap_err().to_string();
        assert!(err.contains("source.bandwidth"), "{err}");
    }

    #[test]
    fn coarse_grid_is_a_config_error() {
        let text = BASE.to_string() + "\n[grid]\nbins = 5\nhalf_span = \"0.25 THz\"\n";
        let err = RunConfig::parse(&text).unwrap().plan().unwrap_err().to_string();
        assert!(err.contains("field `grid`"), "{err}");
    }

    #[test]
    fn waveguide_needs_walkoff() {
        let text = BASE.replace("gaussian", "waveguide");
        let err = RunConfig::parse(&text).unwrap().plan().unwrap_err().to_string();
        assert!(err.contains("source.walkoff"), "{err}");
    }

    #[test]
    fn filter_study_settings() {
        let text = BASE.replace("power_sweep", "filter_study")
            + "\n[filter]\nhalf_widths = [\"none\", \"2e15 rad/s\", \"1.2e15 rad/s\"]\n";
        let plan = RunConfig::parse(&text).unwrap().plan().unwrap();
        assert_eq!(plan.filters.len(), 3);
        assert!(plan.filters[0].is_none());
        assert_eq!(plan.filters[2].as_ref().unwrap().half_width, 1.2e15);

        let bad = BASE.replace("power_sweep", "filter_study") + "\n[filter]\nhalf_widths = [\"off\"]\n";
        assert!(RunConfig::parse(&bad).unwrap().plan().is_err());
    }

    #[test]
    fn loss_forms() {
        let per_mode = BASE.to_string() + "\n[circuit]\nloss = [0.1, 0.2, 0.3, 0.4]\n";
        let plan = RunConfig::parse(&per_mode).unwrap().plan().unwrap();
        assert_eq!(plan.template.loss, [0.1, 0.2, 0.3, 0.4]);
        let bad = BASE.to_string() + "\n[circuit]\nloss = 1.5\n";
        let err = RunConfig::parse(&bad).unwrap().plan().unwrap_err().to_string();
        assert!(err.contains("circuit"), "{err}");
    }
}
