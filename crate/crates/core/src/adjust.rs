//! Types shared by the LP block builders: the hour window being optimized,
//! nodal injection terms and extracted per-unit adjustments.

use serde::{Deserialize, Serialize};

use crate::lp::VarId;

/// Consecutive hours `[start, start + len)` optimized jointly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Interval {
    pub start: usize,
    pub len: usize,
}

impl Interval {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    pub fn hours(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }
}

/// Contribution `coeff * var` to the net electric injection of `node` at
/// local hour `hour`. Generation increases are positive, consumption
/// increases negative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Injection {
    pub hour: usize,
    pub node: usize,
    pub var: VarId,
    pub coeff: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechClass {
    PowerPlant,
    Res,
    PumpedStorage,
    Slack,
    Hvdc,
    Pst,
    HeatPump,
    PowerToHeat,
    Chp,
    Hob,
    Tes,
    ThermalRes,
}

impl TechClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TechClass::PowerPlant => "power_plant",
            TechClass::Res => "res",
            TechClass::PumpedStorage => "pumped_storage",
            TechClass::Slack => "slack",
            TechClass::Hvdc => "hvdc",
            TechClass::Pst => "pst",
            TechClass::HeatPump => "heat_pump",
            TechClass::PowerToHeat => "power_to_heat",
            TechClass::Chp => "chp",
            TechClass::Hob => "hob",
            TechClass::Tes => "tes",
            TechClass::ThermalRes => "thermal_res",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        use TechClass::*;
        [
            PowerPlant,
            Res,
            PumpedStorage,
            Slack,
            Hvdc,
            Pst,
            HeatPump,
            PowerToHeat,
            Chp,
            Hob,
            Tes,
            ThermalRes,
        ]
        .into_iter()
        .find(|c| c.as_str() == s)
    }

    /// Whether `up` means more consumption rather than more generation.
    pub fn is_load(self) -> bool {
        matches!(self, TechClass::HeatPump | TechClass::PowerToHeat)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// MW electric.
    Electric,
    /// MW thermal.
    Thermal,
    /// Degrees of phase shift.
    Angle,
}

impl Domain {
    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Electric => "el",
            Domain::Thermal => "th",
            Domain::Angle => "deg",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "el" => Some(Domain::Electric),
            "th" => Some(Domain::Thermal),
            "deg" => Some(Domain::Angle),
            _ => None,
        }
    }
}

/// Hourly adjustment of one unit in one domain. `up` increases the unit's own
/// quantity (output for generators, consumption for loads, charging for
/// storage), `down` decreases it. Both are non-negative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    pub hour: usize,
    pub unit: String,
    pub class: TechClass,
    pub domain: Domain,
    pub up: f64,
    pub down: f64,
}

impl Adjustment {
    pub fn net(&self) -> f64 {
        self.up - self.down
    }
}

/// Splits a net change into non-negative (up, down) parts.
pub fn split(net: f64) -> (f64, f64) {
    if net >= 0.0 {
        (net, 0.0)
    } else {
        (0.0, -net)
    }
}
