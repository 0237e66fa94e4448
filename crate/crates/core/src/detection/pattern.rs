use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// Exactly this many photons (PNR detector).
    Count(usize),
    /// At least one photon (threshold detector).
    On,
    /// No photon (threshold detector).
    Off,
}

/// Outcome request on an ordered list of distinct spatial modes. All
/// outcomes are of one detector kind.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DetectionPattern {
    modes: Vec<usize>,
    outcomes: Vec<Outcome>,
}

impl DetectionPattern {
    pub fn new(modes: Vec<usize>, outcomes: Vec<Outcome>) -> Result<Self> {
        if modes.len() != outcomes.len() || modes.is_empty() {
            return Err(Error::InvalidModes(format!(
                "{} modes but {} outcomes",
                modes.len(),
                outcomes.len()
            )));
        }
        for (i, m) in modes.iter().enumerate() {
            if modes[..i].contains(m) {
                return Err(Error::InvalidModes(format!("spatial mode {m} repeated")));
            }
        }
        let pnr = matches!(outcomes[0], Outcome::Count(_));
        if outcomes.iter().any(|o| matches!(o, Outcome::Count(_)) != pnr) {
            return Err(Error::InvalidModes(
                "pattern mixes PNR counts with threshold outcomes".into(),
            ));
        }
        Ok(Self { modes, outcomes })
    }

    pub fn pnr(modes: &[usize], counts: &[usize]) -> Result<Self> {
        Self::new(modes.to_vec(), counts.iter().map(|&n| Outcome::Count(n)).collect())
    }

    /// `on[i]` true means a click on `modes[i]`.
    pub fn threshold(modes: &[usize], on: &[bool]) -> Result<Self> {
        Self::new(
            modes.to_vec(),
            on.iter().map(|&b| if b { Outcome::On } else { Outcome::Off }).collect(),
        )
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn is_pnr(&self) -> bool {
        matches!(self.outcomes[0], Outcome::Count(_))
    }

    pub fn counts(&self) -> Option<Vec<usize>> {
        self.outcomes
            .iter()
            .map(|o| match o {
                Outcome::Count(n) => Some(*n),
                _ => None,
            })
            .collect()
    }

    /// `(on, off)` spatial modes; empty for PNR patterns.
    pub fn threshold_sets(&self) -> (Vec<usize>, Vec<usize>) {
        let mut on = Vec::new();
        let mut off = Vec::new();
        for (m, o) in self.modes.iter().zip(&self.outcomes) {
            match o {
                Outcome::On => on.push(*m),
                Outcome::Off => off.push(*m),
                Outcome::Count(_) => {}
            }
        }
        (on, off)
    }
}

impl fmt::Display for DetectionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .modes
            .iter()
            .zip(&self.outcomes)
            .map(|(m, o)| match o {
                Outcome::Count(n) => format!("{m}:{n}"),
                Outcome::On => format!("{m}:on"),
                Outcome::Off => format!("{m}:off"),
            })
            .collect();
        write!(f, "[{}]", parts.join(" "))
    }
}
