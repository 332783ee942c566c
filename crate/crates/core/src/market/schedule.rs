use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Quantity recorded per unit-hour in a market schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Field {
    /// Electric set-point, MW (generation positive, consumption of PtH/HP positive as load).
    P,
    /// Thermal set-point, MW_th (TES: positive means charging).
    Q,
    /// TES level at the end of the hour, MWh_th.
    E,
    /// Indoor temperature, degrees C.
    TIn,
    /// Heating power, kW_th.
    Phi,
}

impl Field {
    pub fn name(self) -> &'static str {
        match self {
            Field::P => "p_mw",
            Field::Q => "q_th_mw",
            Field::E => "e_tes_mwh",
            Field::TIn => "t_in_c",
            Field::Phi => "phi_kw",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UnitSeries {
    pub p_mw: Vec<Option<f64>>,
    pub q_th_mw: Vec<Option<f64>>,
    pub e_tes_mwh: Vec<Option<f64>>,
    pub t_in_c: Vec<Option<f64>>,
    pub phi_kw: Vec<Option<f64>>,
}

impl UnitSeries {
    fn new(hours: usize) -> Self {
        Self {
            p_mw: vec![None; hours],
            q_th_mw: vec![None; hours],
            e_tes_mwh: vec![None; hours],
            t_in_c: vec![None; hours],
            phi_kw: vec![None; hours],
        }
    }

    pub fn field(&self, f: Field) -> &[Option<f64>] {
        match f {
            Field::P => &self.p_mw,
            Field::Q => &self.q_th_mw,
            Field::E => &self.e_tes_mwh,
            Field::TIn => &self.t_in_c,
            Field::Phi => &self.phi_kw,
        }
    }

    fn field_mut(&mut self, f: Field) -> &mut Vec<Option<f64>> {
        match f {
            Field::P => &mut self.p_mw,
            Field::Q => &mut self.q_th_mw,
            Field::E => &mut self.e_tes_mwh,
            Field::TIn => &mut self.t_in_c,
            Field::Phi => &mut self.phi_kw,
        }
    }
}

/// Pre-redispatch operating points per unit and hour.
///
/// Heat pump baselines are stored per grid node under the id `hp:<node>`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MarketSchedule {
    pub hours: usize,
    pub units: BTreeMap<String, UnitSeries>,
}

/// Schedule key of the aggregated heat pump stock at `node`.
pub fn hp_key(node: &str) -> String {
    format!("hp:{node}")
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    unit_id: String,
    hour: usize,
    p_mw: Option<f64>,
    q_th_mw: Option<f64>,
    e_tes_mwh: Option<f64>,
    t_in_c: Option<f64>,
    phi_kw: Option<f64>,
}

impl MarketSchedule {
    pub fn new(hours: usize) -> Self {
        Self {
            hours,
            units: BTreeMap::new(),
        }
    }

    pub fn set(&mut self, unit: &str, hour: usize, field: Field, value: f64) {
        let hours = self.hours;
        let series = self
            .units
            .entry(unit.to_string())
            .or_insert_with(|| UnitSeries::new(hours));
        series.field_mut(field)[hour] = Some(value);
    }

    pub fn try_get(&self, unit: &str, hour: usize, field: Field) -> Option<f64> {
        self.units
            .get(unit)
            .and_then(|s| s.field(field).get(hour).copied().flatten())
    }

    /// Value of `field` for `unit` at `hour`, or a schedule-gap error.
    pub fn get(&self, unit: &str, hour: usize, field: Field) -> Result<f64> {
        self.try_get(unit, hour, field)
            .ok_or_else(|| Error::ScheduleGap {
                unit: unit.to_string(),
                hour,
                field: field.name(),
            })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for (id, s) in &self.units {
            for h in 0..self.hours {
                let row = Row {
                    unit_id: id.clone(),
                    hour: h,
                    p_mw: s.p_mw[h],
                    q_th_mw: s.q_th_mw[h],
                    e_tes_mwh: s.e_tes_mwh[h],
                    t_in_c: s.t_in_c[h],
                    phi_kw: s.phi_kw[h],
                };
                if row.p_mw.is_none()
                    && row.q_th_mw.is_none()
                    && row.e_tes_mwh.is_none()
                    && row.t_in_c.is_none()
                    && row.phi_kw.is_none()
                {
                    continue;
                }
                wr.serialize(row)?;
            }
        }
        wr.flush()?;
        Ok(())
    }

    /// Parses the schedule CSV. `hours` is the horizon the schedule must span;
    /// rows beyond it are rejected, missing rows surface later as gaps.
    pub fn read_csv<R: Read>(r: R, hours: usize) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut out = MarketSchedule::new(hours);
        let mut problems = Vec::new();
        for (i, rec) in rd.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = match rec {
                Ok(r) => r,
                Err(e) => {
                    problems.push(format!("row {line}: {e}"));
                    continue;
                }
            };
            if row.hour >= hours {
                problems.push(format!(
                    "row {line}: hour {} of '{}' outside horizon of {hours} hours",
                    row.hour, row.unit_id
                ));
                continue;
            }
            for (f, v) in [
                (Field::P, row.p_mw),
                (Field::Q, row.q_th_mw),
                (Field::E, row.e_tes_mwh),
                (Field::TIn, row.t_in_c),
                (Field::Phi, row.phi_kw),
            ] {
                if let Some(v) = v {
                    if !v.is_finite() {
                        problems.push(format!(
                            "row {line}: {} of '{}' is not finite",
                            f.name(),
                            row.unit_id
                        ));
                    }
                    out.set(&row.unit_id, row.hour, f, v);
                }
            }
        }
        if problems.is_empty() {
            Ok(out)
        } else {
            Err(Error::Validation(format!(
                "invalid market schedule: {}",
                problems.join("; ")
            )))
        }
    }
}
