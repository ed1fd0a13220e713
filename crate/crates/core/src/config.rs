//! TOML experiment configuration: molecule, schedule and delay bindings.
//!
//! ```toml
//! schema = 1
//! temperature_K = 295.7
//! reference_spin = "C1"          # optional, defaults to the first spin
//!
//! [[spins]]
//! name = "H"
//! frequency_MHz = 500.133245
//! T1_s = 3.5                     # or "inf"
//!
//! [[schedule]]
//! op = "pt"                      # pt | compress | permute | wait
//! src = "H"
//! dst = "C2"
//! efficiency = 0.92              # optional, default 1
//!
//! [[schedule]]
//! op = "wait"
//! param = "t1"                   # or duration_s = 2.5
//!
//! [params]
//! t1 = 8.25
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Coupling, Molecule, SpinSpec};
use crate::schedule::{Delay, Schedule, Step};

pub const SCHEMA_VERSION: u32 = 1;

/// Bundled two-carbon one-proton fixture.
pub const TCE_CONFIG: &str = include_str!("../configs/tce.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigDocument {
    pub schema: u32,
    #[serde(rename = "temperature_K")]
    pub temperature_k: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_spin: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_unit: Option<f64>,
    pub spins: Vec<SpinEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub couplings: Vec<CouplingEntry>,
    #[serde(default)]
    pub schedule: Vec<StepEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinEntry {
    pub name: String,
    #[serde(rename = "frequency_MHz")]
    pub frequency_mhz: f64,
    #[serde(rename = "T1_s")]
    pub t1_s: T1Value,
}

/// T1 in seconds, or the string `"inf"` for a spin that never relaxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum T1Value {
    Seconds(f64),
    Text(String),
}

impl T1Value {
    fn seconds(&self, spin: &str) -> Result<f64> {
        match self {
            T1Value::Seconds(t) => Ok(*t),
            T1Value::Text(s) if s.eq_ignore_ascii_case("inf") => Ok(f64::INFINITY),
            T1Value::Text(s) => Err(Error::Config(format!(
                "spins.{spin}.T1_s: expected a number or \"inf\", got \"{s}\""
            ))),
        }
    }

    fn from_seconds(t: f64) -> Self {
        if t.is_infinite() {
            T1Value::Text("inf".into())
        } else {
            T1Value::Seconds(t)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    pub a: String,
    pub b: String,
    #[serde(rename = "J_Hz")]
    pub j_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum StepEntry {
    Pt {
        src: String,
        dst: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        efficiency: Option<f64>,
    },
    Compress {
        target: String,
        aux1: String,
        aux2: String,
    },
    Permute {
        operands: Vec<String>,
        table: Vec<usize>,
    },
    Wait {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        duration_s: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        param: Option<String>,
    },
}

impl ConfigDocument {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn molecule(&self) -> Result<Molecule> {
        if self.schema != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "schema: unsupported version {}, expected {SCHEMA_VERSION}",
                self.schema
            )));
        }
        if self.spins.is_empty() {
            return Err(Error::Config("spins: at least one spin is required".into()));
        }
        let spins = self
            .spins
            .iter()
            .map(|s| SpinSpec::new(s.name.clone(), s.frequency_mhz, s.t1_s.seconds(&s.name)?))
            .collect::<Result<Vec<_>>>()?;
        let mut molecule = Molecule::new(spins, self.temperature_k)?;
        if let Some(r) = &self.reference_spin {
            molecule = molecule.with_reference(r)?;
        }
        if let Some(unit) = self.bias_unit {
            molecule = molecule.with_bias_unit(unit)?;
        }
        let couplings = self
            .couplings
            .iter()
            .map(|c| Coupling {
                a: c.a.clone(),
                b: c.b.clone(),
                j_hz: c.j_hz,
            })
            .collect();
        molecule.with_couplings(couplings)
    }

    pub fn schedule(&self) -> Result<Schedule> {
        let steps = self
            .schedule
            .iter()
            .enumerate()
            .map(|(k, entry)| {
                Ok(match entry {
                    StepEntry::Pt {
                        src,
                        dst,
                        efficiency,
                    } => Step::transfer(src, dst, efficiency.unwrap_or(1.0)),
                    StepEntry::Compress { target, aux1, aux2 } => {
                        Step::compress(target, aux1, aux2)
                    }
                    StepEntry::Permute { operands, table } => Step::Permute {
                        operands: operands.clone(),
                        table: table.clone(),
                    },
                    StepEntry::Wait { duration_s, param } => match (duration_s, param) {
                        (Some(t), None) => Step::wait(*t),
                        (None, Some(p)) => Step::wait_param(p),
                        _ => {
                            return Err(Error::Config(format!(
                                "schedule[{k}]: wait needs exactly one of duration_s or param"
                            )))
                        }
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut schedule = Schedule::new(steps);
        for (name, &t) in &self.params {
            if !(t >= 0.0) {
                return Err(Error::Config(format!("params.{name}: negative delay {t}")));
            }
            schedule = schedule.with_binding(name, t);
        }
        Ok(schedule)
    }

    /// Validated domain objects. The schedule is checked against the
    /// molecule; delays may still be unbound.
    pub fn build(&self) -> Result<(Molecule, Schedule)> {
        let molecule = self.molecule()?;
        let schedule = self.schedule()?;
        schedule.validate(&molecule)?;
        Ok((molecule, schedule))
    }

    pub fn from_domain(molecule: &Molecule, schedule: &Schedule) -> Self {
        let schedule_entries = schedule
            .steps()
            .iter()
            .map(|s| match s {
                Step::Transfer {
                    src,
                    dst,
                    efficiency,
                } => StepEntry::Pt {
                    src: src.clone(),
                    dst: dst.clone(),
                    efficiency: Some(*efficiency),
                },
                Step::Compress { target, aux1, aux2 } => StepEntry::Compress {
                    target: target.clone(),
                    aux1: aux1.clone(),
                    aux2: aux2.clone(),
                },
                Step::Permute { operands, table } => StepEntry::Permute {
                    operands: operands.clone(),
                    table: table.clone(),
                },
                Step::Wait { duration } => match duration {
                    Delay::Fixed(t) => StepEntry::Wait {
                        duration_s: Some(*t),
                        param: None,
                    },
                    Delay::Param(p) => StepEntry::Wait {
                        duration_s: None,
                        param: Some(p.clone()),
                    },
                },
            })
            .collect();
        Self {
            schema: SCHEMA_VERSION,
            temperature_k: molecule.temperature_k(),
            reference_spin: Some(molecule.spin(molecule.reference()).name().to_string()),
            bias_unit: Some(molecule.bias_unit()),
            spins: molecule
                .spins()
                .iter()
                .map(|s| SpinEntry {
                    name: s.name().to_string(),
                    frequency_mhz: s.frequency_mhz(),
                    t1_s: T1Value::from_seconds(s.t1_s()),
                })
                .collect(),
            couplings: molecule
                .couplings()
                .iter()
                .map(|c| CouplingEntry {
                    a: c.a.clone(),
                    b: c.b.clone(),
                    j_hz: c.j_hz,
                })
                .collect(),
            schedule: schedule_entries,
            params: schedule.bindings().clone(),
        }
    }
}

pub fn parse_config(text: &str) -> Result<(Molecule, Schedule)> {
    ConfigDocument::parse(text)?.build()
}

pub fn load_config(path: impl AsRef<Path>) -> Result<(Molecule, Schedule)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_config(molecule: &Molecule, schedule: &Schedule) -> Result<String> {
    ConfigDocument::from_domain(molecule, schedule).to_toml()
}

pub fn bundled_tce() -> (Molecule, Schedule) {
    parse_config(TCE_CONFIG).expect("bundled config is valid")
}
