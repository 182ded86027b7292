//! Channel naming shared by the simulator, the recovery pipeline and the
//! file formats: `gen:<id>:freq`, `gen:<id>:angle`, `bus:<id>:angle`,
//! `line:<from>-<to>:flow`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A measurement channel of the grid model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelId {
    /// Rotor speed deviation of a generator (frequency surrogate).
    GenFreq(u32),
    /// Rotor angle deviation of a generator.
    GenAngle(u32),
    /// Phase-angle deviation of a (possibly non-generator) bus.
    BusAngle(u32),
    /// Active-flow deviation of the line between two buses.
    LineFlow(u32, u32),
}

impl ChannelId {
    /// Channels carrying an angle-like (position) quantity; these are the
    /// ones the reference-angle subtraction applies to.
    pub fn is_angle(&self) -> bool {
        matches!(self, ChannelId::GenAngle(_) | ChannelId::BusAngle(_))
    }

    /// Channels carrying a speed-like quantity.
    pub fn is_speed(&self) -> bool {
        matches!(self, ChannelId::GenFreq(_))
    }

    pub fn is_flow(&self) -> bool {
        matches!(self, ChannelId::LineFlow(_, _))
    }
}

impl fmt::Display for ChannelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelId::GenFreq(id) => write!(f, "gen:{id}:freq"),
            ChannelId::GenAngle(id) => write!(f, "gen:{id}:angle"),
            ChannelId::BusAngle(id) => write!(f, "bus:{id}:angle"),
            ChannelId::LineFlow(a, b) => write!(f, "line:{a}-{b}:flow"),
        }
    }
}

impl FromStr for ChannelId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("invalid channel name `{s}`"));
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        match (parts[0], parts[2]) {
            ("gen", "freq") => Ok(ChannelId::GenFreq(parts[1].parse().map_err(|_| bad())?)),
            ("gen", "angle") => Ok(ChannelId::GenAngle(parts[1].parse().map_err(|_| bad())?)),
            ("bus", "angle") => Ok(ChannelId::BusAngle(parts[1].parse().map_err(|_| bad())?)),
            ("line", "flow") => {
                let (a, b) = parts[1].split_once('-').ok_or_else(bad)?;
                Ok(ChannelId::LineFlow(
                    a.parse().map_err(|_| bad())?,
                    b.parse().map_err(|_| bad())?,
                ))
            }
            _ => Err(bad()),
        }
    }
}
