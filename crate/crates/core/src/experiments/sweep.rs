use std::f64::consts::FRAC_PI_4;
use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;

use super::hhom::{
    figures_of_merit, four_fold_infinite_delay, hhom_probabilities, DetectorKind, FilterSpec,
    HhomCircuit, HhomConfig,
};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "param,value,p4,p_bunch,p_herald,eta_herald,v_hom,v_mzi";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    /// Delay on idler A (s).
    Delay,
    /// Beam-splitter angle (rad).
    Angle,
    /// Squeezing of both sources.
    Squeezing,
    /// Uniform loss on all four spatial modes.
    Loss,
    /// Half-width of the bandpass filter (rad/s).
    FilterWidth,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Delay => "tau",
            SweepAxis::Angle => "theta",
            SweepAxis::Squeezing => "xi",
            SweepAxis::Loss => "epsilon",
            SweepAxis::FilterWidth => "filter_half_width",
        }
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "tau" => SweepAxis::Delay,
            "theta" => SweepAxis::Angle,
            "xi" => SweepAxis::Squeezing,
            "epsilon" => SweepAxis::Loss,
            "filter_half_width" => SweepAxis::FilterWidth,
            other => return Err(Error::Parse(format!("unknown sweep axis `{other}`"))),
        })
    }
}

/// One sweep point. Metrics that do not apply to the axis are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub p4: Option<f64>,
    pub p_bunch: Option<f64>,
    pub p_herald: Option<f64>,
    pub eta_herald: Option<f64>,
    pub v_hom: Option<f64>,
    pub v_mzi: Option<f64>,
    /// `P4(theta = 0) / P4(tau = inf)`; the inverse is its reciprocal.
    pub ratio_max_over_inf: Option<f64>,
}

impl SweepRow {
    fn empty(value: f64) -> Self {
        Self {
            value,
            p4: None,
            p_bunch: None,
            p_herald: None,
            eta_herald: None,
            v_hom: None,
            v_mzi: None,
            ratio_max_over_inf: None,
        }
    }

    fn metrics(&self) -> [Option<f64>; 6] {
        [self.p4, self.p_bunch, self.p_herald, self.eta_herald, self.v_hom, self.v_mzi]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub axis: SweepAxis,
    pub detector: DetectorKind,
    pub config_hash: u64,
    pub rows: Vec<SweepRow>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Shortest round-trip form; exponent notation for very small or large magnitudes.
fn fmt_num(out: &mut String, v: f64) {
    if v != 0.0 && !(1e-4..1e15).contains(&v.abs()) {
        write!(out, "{v:e}").unwrap();
    } else {
        write!(out, "{v}").unwrap();
    }
}

fn fmt_opt(out: &mut String, v: Option<f64>) {
    if let Some(v) = v {
        fmt_num(out, v);
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse()
        .map_err(|_| Error::Parse(format!("line {line}: `{s}` is not a number")))
}

fn parse_opt(s: &str, line: usize) -> Result<Option<f64>> {
    if s.is_empty() {
        Ok(None)
    } else {
        parse_f64(s, line).map(Some)
    }
}

impl SweepResult {
    /// CSV with the fixed header, one row per sweep value, then `#` lines
    /// carrying the metadata and the ratio `R` in both orders.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            write!(out, "{},", self.axis.name()).unwrap();
            fmt_num(&mut out, row.value);
            for m in row.metrics() {
                out.push(',');
                fmt_opt(&mut out, m);
            }
            out.push('\n');
        }
        writeln!(out, "# axis={}", self.axis.name()).unwrap();
        writeln!(out, "# detector={}", self.detector.name()).unwrap();
        writeln!(out, "# config_hash={:016x}", self.config_hash).unwrap();
        writeln!(out, "# ratio_r columns: value,p4_max/p4_inf,p4_inf/p4_max").unwrap();
        for row in &self.rows {
            if let Some(r) = row.ratio_max_over_inf {
                writeln!(out, "# ratio_r,{},{},{}", row.value, r, 1.0 / r).unwrap();
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            _ => return Err(Error::Parse("missing or wrong CSV header".into())),
        }
        let mut axis = None;
        let mut detector = None;
        let mut config_hash = None;
        let mut rows: Vec<SweepRow> = Vec::new();
        let mut ratio_idx = 0;
        for (i, line) in lines {
            let n = i + 1;
            if let Some(meta) = line.strip_prefix("# ") {
                if let Some(a) = meta.strip_prefix("axis=") {
                    let a: SweepAxis = a.parse()?;
                    if *axis.get_or_insert(a) != a {
                        return Err(Error::Parse(format!("line {n}: axis metadata disagrees with the rows")));
                    }
                } else if let Some(d) = meta.strip_prefix("detector=") {
                    detector = Some(match d {
                        "pnr" => DetectorKind::Pnr,
                        "threshold" => DetectorKind::Threshold,
                        _ => return Err(Error::Parse(format!("line {n}: unknown detector `{d}`"))),
                    });
                } else if let Some(h) = meta.strip_prefix("config_hash=") {
                    config_hash = Some(
                        u64::from_str_radix(h, 16)
                            .map_err(|_| Error::Parse(format!("line {n}: bad hash")))?,
                    );
                } else if let Some(r) = meta.strip_prefix("ratio_r,") {
                    let f: Vec<&str> = r.split(',').collect();
                    if f.len() != 3 {
                        return Err(Error::Parse(format!("line {n}: bad ratio line")));
                    }
                    let value = parse_f64(f[0], n)?;
                    let ratio = parse_f64(f[1], n)?;
                    while ratio_idx < rows.len() && rows[ratio_idx].value.to_bits() != value.to_bits() {
                        ratio_idx += 1;
                    }
                    let row = rows
                        .get_mut(ratio_idx)
                        .ok_or_else(|| Error::Parse(format!("line {n}: ratio for unknown value")))?;
                    row.ratio_max_over_inf = Some(ratio);
                    ratio_idx += 1;
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(Error::Parse(format!("line {n}: expected 8 fields, found {}", f.len())));
            }
            let a: SweepAxis = f[0].parse()?;
            if *axis.get_or_insert(a) != a {
                return Err(Error::Parse(format!("line {n}: mixed sweep axes")));
            }
            rows.push(SweepRow {
                value: parse_f64(f[1], n)?,
                p4: parse_opt(f[2], n)?,
                p_bunch: parse_opt(f[3], n)?,
                p_herald: parse_opt(f[4], n)?,
                eta_herald: parse_opt(f[5], n)?,
                v_hom: parse_opt(f[6], n)?,
                v_mzi: parse_opt(f[7], n)?,
                ratio_max_over_inf: None,
            });
        }
        Ok(Self {
            axis: axis.ok_or_else(|| Error::Parse("missing axis metadata".into()))?,
            detector: detector.ok_or_else(|| Error::Parse("missing detector metadata".into()))?,
            config_hash: config_hash.ok_or_else(|| Error::Parse("missing config hash".into()))?,
            rows,
        })
    }

    /// Values of one CSV column, by header name.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let idx = match name {
            "value" => return Some(self.rows.iter().map(|r| Some(r.value)).collect()),
            "p4" => 0,
            "p_bunch" => 1,
            "p_herald" => 2,
            "eta_herald" => 3,
            "v_hom" => 4,
            "v_mzi" => 5,
            _ => return None,
        };
        Some(self.rows.iter().map(|r| r.metrics()[idx]).collect())
    }
}

fn fom_row(config: &HhomConfig, value: f64) -> Result<SweepRow> {
    let f = figures_of_merit(config)?;
    let ratio = (f.p4_inf > 0.0).then(|| f.p4_no_bs / f.p4_inf);
    Ok(SweepRow {
        value,
        p4: Some(f.probabilities.four_fold),
        p_bunch: Some(f.probabilities.bunching),
        p_herald: Some(f.probabilities.herald),
        eta_herald: f.eta_herald.is_finite().then_some(f.eta_herald),
        v_hom: f.v_hom.is_finite().then_some(f.v_hom),
        v_mzi: f.v_mzi.is_finite().then_some(f.v_mzi),
        ratio_max_over_inf: ratio,
    })
}

/// Runs `template` at every value of `axis`, in parallel, rows in input order.
///
/// Delay rows report the probabilities at the template angle and the
/// normalized dip `1 - P4(tau) / P4(inf)` in `v_hom`. Angle rows report the
/// probabilities at the template delay and `(P4(0) - P4(theta)) / (P4(0) +
/// P4(theta))` in `v_mzi`. Every other axis reports the full set of figures of
/// merit at `tau = 0`, `theta = pi/4`.
pub fn sweep(template: &HhomConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepResult> {
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::param("values", format!("sweep value {v} is not finite")));
    }
    template.validate()?;
    let config_hash = fnv1a(format!("{axis:?}|{template:?}").as_bytes());
    let kind = template.detector;
    let limits = template.limits;
    let rows = if values.is_empty() {
        Vec::new()
    } else {
        match axis {
            SweepAxis::Delay => {
                let circuit = HhomCircuit::new(template)?;
                let p4_inf = four_fold_infinite_delay(template)?;
                values
                    .par_iter()
                    .map(|&tau| {
                        let p = hhom_probabilities(&circuit.state(tau, template.bs_angle)?, kind, &limits)?;
                        Ok(SweepRow {
                            p4: Some(p.four_fold),
                            p_bunch: Some(p.bunching),
                            p_herald: Some(p.herald),
                            v_hom: (p4_inf > 0.0).then(|| 1.0 - p.four_fold / p4_inf),
                            ..SweepRow::empty(tau)
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            SweepAxis::Angle => {
                let circuit = HhomCircuit::new(template)?;
                let p0 = hhom_probabilities(&circuit.state(template.delay, 0.0)?, kind, &limits)?;
                values
                    .par_iter()
                    .map(|&theta| {
                        let p = hhom_probabilities(&circuit.state(template.delay, theta)?, kind, &limits)?;
                        let sum = p0.four_fold + p.four_fold;
                        Ok(SweepRow {
                            p4: Some(p.four_fold),
                            p_bunch: Some(p.bunching),
                            p_herald: Some(p.herald),
                            v_mzi: (sum > 0.0).then(|| (p0.four_fold - p.four_fold) / sum),
                            ..SweepRow::empty(theta)
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            SweepAxis::Squeezing | SweepAxis::Loss | SweepAxis::FilterWidth => values
                .par_iter()
                .map(|&v| {
                    let cfg = match axis {
                        SweepAxis::Squeezing => template.clone().with_squeezing(v),
                        SweepAxis::Loss => template.clone().with_uniform_loss(v),
                        _ => {
                            let base = template.filter.clone().unwrap_or(FilterSpec {
                                center: template.grid.center(),
                                half_width: v,
                                modes: vec![0, 1, 2, 3],
                            });
                            template.clone().with_filter(Some(FilterSpec { half_width: v, ..base }))
                        }
                    };
                    fom_row(&cfg.with_delay(0.0).with_bs_angle(FRAC_PI_4), v)
                })
                .collect::<Result<Vec<_>>>()?,
        }
    };
    Ok(SweepResult {
        axis,
        detector: kind,
        config_hash,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SweepResult {
        SweepResult {
            axis: SweepAxis::Squeezing,
            detector: DetectorKind::Pnr,
            config_hash: 0xdead_beef,
            rows: vec![
                SweepRow {
                    value: 0.1,
                    p4: Some(1.234_567_890_123e-7),
                    p_bunch: Some(0.0),
                    p_herald: Some(0.3),
                    eta_herald: None,
                    v_hom: Some(1.0 - 1e-15),
                    v_mzi: None,
                    ratio_max_over_inf: Some(2.0000001),
                },
                SweepRow::empty(0.2),
            ],
        }
    }

    #[test]
    fn csv_round_trip() {
        let r = sample();
        let text = r.to_csv();
        assert!(text.starts_with(CSV_HEADER));
        assert!(text.contains("xi,0.2,,,,,,\n"));
        assert_eq!(SweepResult::from_csv(&text).unwrap(), r);
    }

    #[test]
    fn csv_rejects_garbage() {
        assert!(SweepResult::from_csv("a,b\n").is_err());
        let bad = format!("{CSV_HEADER}\nxi,zz,,,,,,\n# detector=pnr\n# config_hash=0\n");
        assert!(SweepResult::from_csv(&bad).is_err());
        let mixed = format!("{CSV_HEADER}\nxi,1,,,,,,\ntau,1,,,,,,\n# detector=pnr\n# config_hash=0\n");
        assert!(SweepResult::from_csv(&mixed).is_err());
    }

    #[test]
    fn axis_names_parse_back() {
        for a in [
            SweepAxis::Delay,
            SweepAxis::Angle,
            SweepAxis::Squeezing,
            SweepAxis::Loss,
            SweepAxis::FilterWidth,
        ] {
            assert_eq!(a.name().parse::<SweepAxis>().unwrap(), a);
        }
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(fnv1a(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a(b"a"), 0xaf63_dc4c_8601_ec8c);
    }
}
