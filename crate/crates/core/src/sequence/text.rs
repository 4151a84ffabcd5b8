//! Line-oriented sequence listing.
//!
//! ```text
//! # name: four-body-A
//! # description: free text
//! ROT spins=1,2,4 axis=-y angle=1.5707963267948966 [dur=1e-5]
//! CPL pair=1,2 tau=0.006906077348066298 mode=ideal
//! CPL pair=3,4 angle=pi/8 mode=compiled
//! DELAY tau=0.001
//! GRAD
//! ```
//!
//! One instruction per line. `# name:` and `# description:` lines carry
//! metadata; other `#` lines and blank lines are ignored. Angles accept the
//! expressions understood by [`crate::angle::parse_angle`]. Numbers are
//! printed in shortest round-trip form, so printing a parsed listing
//! reproduces it exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use super::{Axis, CouplingAmount, Instruction, PulseSequence, Realization};
use crate::angle::parse_angle;
use crate::error::{Error, Result};

fn join(spins: &[usize]) -> String {
    spins
        .iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instruction::Rotation {
                spins,
                axis,
                angle,
                duration,
            } => {
                write!(
                    f,
                    "ROT spins={} axis={} angle={}",
                    join(spins),
                    axis.as_str(),
                    angle
                )?;
                if *duration != 0.0 {
                    write!(f, " dur={duration}")?;
                }
                Ok(())
            }
            Instruction::CouplingBlock {
                pair,
                amount,
                realization,
            } => {
                write!(f, "CPL pair={},{} ", pair.0, pair.1)?;
                match amount {
                    CouplingAmount::Tau(t) => write!(f, "tau={t}")?,
                    CouplingAmount::Angle(a) => write!(f, "angle={a}")?,
                }
                write!(f, " mode={}", realization.as_str())
            }
            Instruction::FreeDelay { tau } => write!(f, "DELAY tau={tau}"),
            Instruction::Gradient => write!(f, "GRAD"),
        }
    }
}

impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.name.is_empty() {
            writeln!(f, "# name: {}", self.name)?;
        }
        if !self.description.is_empty() {
            writeln!(f, "# description: {}", self.description)?;
        }
        for instr in self.instructions() {
            writeln!(f, "{instr}")?;
        }
        Ok(())
    }
}

impl FromStr for PulseSequence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_sequence(s)
    }
}

pub fn parse_sequence(text: &str) -> Result<PulseSequence> {
    let mut seq = PulseSequence::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim_start();
            if let Some(name) = comment.strip_prefix("name:") {
                seq.name = name.trim().to_string();
            } else if let Some(desc) = comment.strip_prefix("description:") {
                seq.description = desc.trim().to_string();
            }
            continue;
        }
        let instr = parse_line(line).map_err(|message| Error::SequenceParse {
            line: idx + 1,
            message,
        })?;
        instr.validate().map_err(|e| Error::SequenceParse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        seq.push(instr);
    }
    Ok(seq)
}

type LineResult<T> = std::result::Result<T, String>;

struct Fields<'a> {
    map: BTreeMap<&'a str, &'a str>,
}

impl<'a> Fields<'a> {
    fn parse(tokens: &[&'a str]) -> LineResult<Self> {
        let mut map = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| format!("expected key=value, got {tok:?}"))?;
            if map.insert(k, v).is_some() {
                return Err(format!("repeated key {k:?}"));
            }
        }
        Ok(Self { map })
    }

    fn take(&mut self, key: &str) -> Option<&'a str> {
        self.map.remove(key)
    }

    fn require(&mut self, key: &str) -> LineResult<&'a str> {
        self.take(key).ok_or_else(|| format!("missing {key}="))
    }

    fn finish(self) -> LineResult<()> {
        match self.map.keys().next() {
            Some(k) => Err(format!("unknown key {k:?}")),
            None => Ok(()),
        }
    }
}

fn number(s: &str) -> LineResult<f64> {
    s.parse::<f64>()
        .map_err(|_| format!("invalid number {s:?}"))
}

fn angle(s: &str) -> LineResult<f64> {
    parse_angle(s).map_err(|e| e.to_string())
}

fn spin_list(s: &str) -> LineResult<Vec<usize>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("invalid spin {p:?}"))
        })
        .collect()
}

fn parse_line(line: &str) -> LineResult<Instruction> {
    let tokens: Vec<&str> = line.split_whitespace().collect();
    let (op, rest) = tokens.split_first().expect("line is non-empty");
    let mut fields = Fields::parse(rest)?;
    let instr = match *op {
        "ROT" => {
            let spins = spin_list(fields.require("spins")?)?;
            let axis_text = fields.require("axis")?;
            let axis =
                Axis::parse(axis_text).ok_or_else(|| format!("unknown axis {axis_text:?}"))?;
            let angle = angle(fields.require("angle")?)?;
            let duration = fields.take("dur").map(number).transpose()?.unwrap_or(0.0);
            Instruction::Rotation {
                spins,
                axis,
                angle,
                duration,
            }
        }
        "CPL" => {
            let pair = spin_list(fields.require("pair")?)?;
            let [k, l] = pair[..] else {
                return Err(format!("pair needs two spins, got {}", pair.len()));
            };
            let amount = match (fields.take("tau"), fields.take("angle")) {
                (Some(t), None) => CouplingAmount::Tau(number(t)?),
                (None, Some(a)) => CouplingAmount::Angle(angle(a)?),
                _ => return Err("CPL needs exactly one of tau= or angle=".into()),
            };
            let realization = match fields.take("mode").unwrap_or("ideal") {
                "ideal" => Realization::Ideal,
                "compiled" => Realization::Compiled,
                m => return Err(format!("unknown mode {m:?}")),
            };
            Instruction::CouplingBlock {
                pair: (k, l),
                amount,
                realization,
            }
        }
        "DELAY" => Instruction::FreeDelay {
            tau: number(fields.require("tau")?)?,
        },
        "GRAD" => Instruction::Gradient,
        other => return Err(format!("unknown instruction {other:?}")),
    };
    fields.finish()?;
    Ok(instr)
}
