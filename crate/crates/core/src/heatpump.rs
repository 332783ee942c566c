//! Aggregated small-scale heat pumps: one 1R1C virtual building per grid node.
//!
//! Inside the LP, heating power is expressed in MW and the capacitance in
//! MWh/K; building data is given in kW and kWh/K.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adjust::{Adjustment, Domain, Injection, Interval, TechClass};
use crate::error::{Error, Result};
use crate::grid::{Node, Topology};
use crate::lp::{LinearProgram, Relation, VarId};
use crate::market::hp_key;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildingType {
    pub id: String,
    /// Thermal resistance, K/kW.
    pub r: f64,
    /// Thermal capacitance, kWh/K.
    pub c: f64,
    /// Maximum heating power, kW_th.
    pub max_heating_kw: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeatherCluster {
    pub id: String,
    pub lon: f64,
    pub lat: f64,
    /// Number of buildings per building type id.
    pub buildings: BTreeMap<String, u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatPumpConfig {
    pub building_types: Vec<BuildingType>,
    pub clusters: Vec<WeatherCluster>,
    /// Indoor set-point held by the market baseline, degrees C.
    #[serde(default = "default_setpoint")]
    pub setpoint_c: f64,
    /// Half-width of the admissible indoor temperature band, K.
    #[serde(default = "default_corridor")]
    pub corridor_k: f64,
    /// Cost per MWh_el of added consumption.
    #[serde(default = "default_hp_cost")]
    pub cost_up: f64,
    /// Cost per MWh_el of reduced consumption.
    #[serde(default = "default_hp_cost")]
    pub cost_down: f64,
}

fn default_setpoint() -> f64 {
    21.0
}
fn default_corridor() -> f64 {
    1.0
}
fn default_hp_cost() -> f64 {
    5.0
}

/// Aggregated building stock at one node.
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualBuilding {
    pub node: String,
    /// K/kW.
    pub r: f64,
    /// kWh/K.
    pub c: f64,
    pub cop: Vec<f64>,
    pub outdoor_temp: Vec<f64>,
    /// kW_th per hour.
    pub phi_max: Vec<f64>,
    /// kW_th per hour.
    pub market_phi: Vec<f64>,
    pub market_indoor_temp: Vec<f64>,
    pub temp_min: Vec<f64>,
    pub temp_max: Vec<f64>,
}

impl VirtualBuilding {
    /// Time constant R*C in hours.
    pub fn tau(&self) -> f64 {
        self.r * self.c
    }

    /// Attaches a market baseline and a symmetric corridor of `corridor_k`
    /// around it.
    pub fn with_market(mut self, indoor: Vec<f64>, phi: Vec<f64>, corridor_k: f64) -> Self {
        self.temp_min = indoor.iter().map(|t| t - corridor_k).collect();
        self.temp_max = indoor.iter().map(|t| t + corridor_k).collect();
        self.market_indoor_temp = indoor;
        self.market_phi = phi;
        self
    }

    /// Absolute indoor temperature after one hour starting from `t_prev`
    /// with heating power `phi` (kW) at outdoor temperature `t_out`.
    pub fn step(&self, t_prev: f64, phi: f64, t_out: f64) -> f64 {
        t_prev + (phi - (t_prev - t_out) / self.r) / self.c
    }
}

/// Assigns each cluster to the node at the smallest coordinate distance,
/// breaking ties by the smaller node id.
pub fn map_cluster_to_node(
    clusters: &[WeatherCluster],
    nodes: &[Node],
) -> Result<BTreeMap<String, String>> {
    if nodes.is_empty() {
        return Err(Error::Validation(
            "cluster mapping needs at least one node".into(),
        ));
    }
    let mut bad: Vec<String> = nodes
        .iter()
        .filter(|n| !n.lon.is_finite() || !n.lat.is_finite())
        .map(|n| format!("node '{}' has no valid coordinates", n.id))
        .collect();
    bad.extend(
        clusters
            .iter()
            .filter(|c| !c.lon.is_finite() || !c.lat.is_finite())
            .map(|c| format!("cluster '{}' has no valid coordinates", c.id)),
    );
    if !bad.is_empty() {
        return Err(Error::Validation(bad.join("; ")));
    }
    Ok(clusters
        .iter()
        .map(|c| {
            let best = nodes
                .iter()
                .map(|n| ((c.lon - n.lon).hypot(c.lat - n.lat), &n.id))
                .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
                .expect("nodes nonempty");
            (c.id.clone(), best.1.clone())
        })
        .collect())
}

/// Builds one virtual building per node with at least one building.
///
/// Parallel resistances and summed capacitances per node. COP is averaged
/// weighted by building count, outdoor temperature weighted by conductance.
/// Series are keyed by cluster id.
pub fn aggregate_buildings(
    assignment: &BTreeMap<String, String>,
    clusters: &[WeatherCluster],
    building_types: &[BuildingType],
    cop: &BTreeMap<String, Vec<f64>>,
    outdoor_temp: &BTreeMap<String, Vec<f64>>,
    hours: usize,
) -> Result<Vec<VirtualBuilding>> {
    let types: BTreeMap<&str, &BuildingType> =
        building_types.iter().map(|b| (b.id.as_str(), b)).collect();

    #[derive(Default)]
    struct Acc {
        conductance: f64,
        c: f64,
        phi_max: f64,
        count: f64,
        cop: Vec<f64>,
        out: Vec<f64>,
    }
    let mut per_node: BTreeMap<&str, Acc> = BTreeMap::new();
    for cl in clusters {
        let node = assignment.get(&cl.id).ok_or_else(|| {
            Error::Validation(format!("cluster '{}' is not mapped to a node", cl.id))
        })?;
        let series = |map: &BTreeMap<String, Vec<f64>>, what: &str| -> Result<Vec<f64>> {
            let s = map.get(&cl.id).ok_or_else(|| {
                Error::Validation(format!("no {what} series for cluster '{}'", cl.id))
            })?;
            if s.len() < hours {
                return Err(Error::Validation(format!(
                    "{what} series for cluster '{}' too short",
                    cl.id
                )));
            }
            Ok(s[..hours].to_vec())
        };
        let mut g = 0.0;
        let mut c = 0.0;
        let mut phi = 0.0;
        let mut count = 0.0;
        for (bt, &nb) in &cl.buildings {
            let t = types.get(bt.as_str()).ok_or_else(|| {
                Error::Validation(format!(
                    "cluster '{}' references unknown building type '{bt}'",
                    cl.id
                ))
            })?;
            let nb = nb as f64;
            g += nb / t.r;
            c += nb * t.c;
            phi += nb * t.max_heating_kw;
            count += nb;
        }
        if count == 0.0 {
            continue;
        }
        let cop_s = series(cop, "COP")?;
        let out_s = series(outdoor_temp, "outdoor temperature")?;
        let acc = per_node.entry(node.as_str()).or_insert_with(|| Acc {
            cop: vec![0.0; hours],
            out: vec![0.0; hours],
            ..Default::default()
        });
        acc.conductance += g;
        acc.c += c;
        acc.phi_max += phi;
        acc.count += count;
        for h in 0..hours {
            acc.cop[h] += count * cop_s[h];
            acc.out[h] += g * out_s[h];
        }
    }
    Ok(per_node
        .into_iter()
        .map(|(node, a)| VirtualBuilding {
            node: node.to_string(),
            r: 1.0 / a.conductance,
            c: a.c,
            cop: a.cop.iter().map(|x| x / a.count).collect(),
            outdoor_temp: a.out.iter().map(|x| x / a.conductance).collect(),
            phi_max: vec![a.phi_max; hours],
            market_phi: Vec::new(),
            market_indoor_temp: Vec::new(),
            temp_min: Vec::new(),
            temp_max: Vec::new(),
        })
        .collect())
}

/// Forward simulation of the temperature deviation for a heating-power
/// deviation series (kW), starting from zero deviation before the first entry.
pub fn simulate_temperature(vb: &VirtualBuilding, delta_phi_kw: &[f64]) -> Vec<f64> {
    let a = 1.0 - 1.0 / vb.tau();
    let mut prev = 0.0;
    delta_phi_kw
        .iter()
        .map(|dphi| {
            prev = a * prev + dphi / vb.c;
            prev
        })
        .collect()
}

/// Checks the invariants a virtual building must meet before it is optimized.
pub fn check_virtual_building(vb: &VirtualBuilding, hours: std::ops::Range<usize>) -> Result<()> {
    if !(vb.r > 0.0 && vb.c > 0.0 && vb.r.is_finite() && vb.c.is_finite()) {
        return Err(Error::Validation(format!(
            "virtual building at '{}' has non-positive R*C",
            vb.node
        )));
    }
    for t in hours {
        let (tm, lo, hi) = (vb.market_indoor_temp[t], vb.temp_min[t], vb.temp_max[t]);
        if !(lo - 1e-9 <= tm && tm <= hi + 1e-9) {
            return Err(Error::Validation(format!(
                "market indoor temperature {tm} at '{}' hour {t} outside [{lo}, {hi}]",
                vb.node
            )));
        }
        if vb.cop[t] <= 0.0 {
            return Err(Error::Validation(format!(
                "COP at '{}' hour {t} is not positive",
                vb.node
            )));
        }
    }
    Ok(())
}

#[derive(Clone, Debug)]
struct NodeVars {
    node: String,
    /// Per local hour from 1: (dT, p_up, p_down). `dT` absent for fixed operation.
    hours: Vec<(usize, Option<VarId>, VarId, VarId)>,
}

/// Temperature and heating state of one node-hour.
#[derive(Clone, Debug, PartialEq)]
pub struct HpState {
    pub node: String,
    pub hour: usize,
    pub delta_t: f64,
    pub delta_phi_kw: f64,
    pub delta_p_kw: f64,
    /// First hour of an optimization interval, held at the market state.
    pub anchor: bool,
}

#[derive(Clone, Debug, Default)]
pub struct HpBlock {
    pub injections: Vec<Injection>,
    nodes: Vec<NodeVars>,
    start: usize,
}

impl HpBlock {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn extract(&self, values: &[f64]) -> Vec<Adjustment> {
        self.nodes
            .iter()
            .flat_map(|n| {
                n.hours.iter().map(move |&(k, _, up, down)| Adjustment {
                    hour: self.start + k,
                    unit: hp_key(&n.node),
                    class: TechClass::HeatPump,
                    domain: Domain::Electric,
                    up: values[up.0],
                    down: values[down.0],
                })
            })
            .collect()
    }

    /// Per node-hour states, ordered by node then hour, with the fixed anchor
    /// hour reported as zero. `buildings` supplies the COP.
    pub fn states(
        &self,
        buildings: &[VirtualBuilding],
        values: &[f64],
        len: usize,
    ) -> Vec<HpState> {
        let mut out = Vec::new();
        for n in &self.nodes {
            let vb = buildings.iter().find(|b| b.node == n.node);
            let mut rows: Vec<HpState> = (0..len)
                .map(|k| HpState {
                    node: n.node.clone(),
                    hour: self.start + k,
                    delta_t: 0.0,
                    delta_phi_kw: 0.0,
                    delta_p_kw: 0.0,
                    anchor: k == 0,
                })
                .collect();
            for &(k, dt, up, down) in &n.hours {
                let dp = values[up.0] - values[down.0];
                let cop = vb.map_or(1.0, |b| b.cop[self.start + k]);
                rows[k].delta_p_kw = dp * 1e3;
                rows[k].delta_phi_kw = dp * cop * 1e3;
                rows[k].delta_t = dt.map_or(f64::NAN, |v| values[v.0]);
            }
            out.extend(rows);
        }
        out
    }
}

/// Variables and dynamics of the virtual buildings over `interval`.
///
/// The first hour of the interval is the anchor and keeps the market state.
/// Nodes whose heating power cannot move are skipped.
pub fn build_hp_block(
    lp: &mut LinearProgram,
    topo: &Topology,
    buildings: &[VirtualBuilding],
    interval: Interval,
    cost_up: f64,
    cost_down: f64,
) -> Result<HpBlock> {
    let mut block = HpBlock {
        start: interval.start,
        ..Default::default()
    };
    for vb in buildings {
        check_virtual_building(vb, interval.hours())?;
        let node = topo.node(&vb.node).ok_or_else(|| {
            Error::Validation(format!("virtual building at unknown node '{}'", vb.node))
        })?;
        let movable = interval.hours().skip(1).any(|t| vb.phi_max[t] > 0.0);
        if !movable {
            continue;
        }
        let a = 1.0 - 1.0 / vb.tau();
        let c_mwh = vb.c / 1e3;
        let mut hours = Vec::new();
        let mut prev_dt: Option<VarId> = None;
        for (k, t) in interval.hours().enumerate().skip(1) {
            let cop = vb.cop[t];
            let phi_m = vb.market_phi[t] / 1e3;
            let phi_max = vb.phi_max[t] / 1e3;
            let tm = vb.market_indoor_temp[t];
            let dt = lp.add_variable(
                format!("hp_dt_{}_{t}", vb.node),
                vb.temp_min[t] - tm,
                vb.temp_max[t] - tm,
                0.0,
            );
            let up = lp.add_variable(
                format!("hp_up_{}_{t}", vb.node),
                0.0,
                ((phi_max - phi_m) / cop).max(0.0),
                cost_up,
            );
            let down = lp.add_variable(
                format!("hp_dn_{}_{t}", vb.node),
                0.0,
                (phi_m / cop).max(0.0),
                cost_down,
            );
            // C dT_t - a C dT_{t-1} - COP (up - down) = 0
            let mut terms = vec![(dt, c_mwh), (up, -cop), (down, cop)];
            if let Some(p) = prev_dt {
                terms.push((p, -a * c_mwh));
            }
            lp.add_constraint(format!("hp_dyn_{}_{t}", vb.node), terms, Relation::Eq(0.0));
            block.injections.push(Injection {
                hour: k,
                node,
                var: up,
                coeff: -1.0,
            });
            block.injections.push(Injection {
                hour: k,
                node,
                var: down,
                coeff: 1.0,
            });
            hours.push((k, Some(dt), up, down));
            prev_dt = Some(dt);
        }
        block.nodes.push(NodeVars {
            node: vb.node.clone(),
            hours,
        });
    }
    Ok(block)
}

/// Heat pump consumption changes fixed to given values (MW, keyed by node id
/// and absolute hour) without dynamics. Used when the heat pump operating
/// points were decided by an earlier stage.
pub fn build_hp_fixed_block(
    lp: &mut LinearProgram,
    topo: &Topology,
    fixed: &BTreeMap<String, BTreeMap<usize, (f64, f64)>>,
    interval: Interval,
    cost_up: f64,
    cost_down: f64,
) -> Result<HpBlock> {
    let mut block = HpBlock {
        start: interval.start,
        ..Default::default()
    };
    for (node_id, by_hour) in fixed {
        let node = topo
            .node(node_id)
            .ok_or_else(|| Error::Validation(format!("heat pump at unknown node '{node_id}'")))?;
        let mut hours = Vec::new();
        for (k, t) in interval.hours().enumerate() {
            let Some(&(u, d)) = by_hour.get(&t) else {
                continue;
            };
            let up = lp.add_variable(format!("hp_up_{node_id}_{t}"), u, u, cost_up);
            let down = lp.add_variable(format!("hp_dn_{node_id}_{t}"), d, d, cost_down);
            block.injections.push(Injection {
                hour: k,
                node,
                var: up,
                coeff: -1.0,
            });
            block.injections.push(Injection {
                hour: k,
                node,
                var: down,
                coeff: 1.0,
            });
            hours.push((k, None, up, down));
        }
        if !hours.is_empty() {
            block.nodes.push(NodeVars {
                node: node_id.clone(),
                hours,
            });
        }
    }
    Ok(block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn node(id: &str, lon: f64, lat: f64) -> Node {
        Node {
            id: id.into(),
            lon,
            lat,
            slack: false,
        }
    }

    fn cluster(id: &str, lon: f64, lat: f64, b: &[(&str, u32)]) -> WeatherCluster {
        WeatherCluster {
            id: id.into(),
            lon,
            lat,
            buildings: b.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    #[test]
    fn cluster_on_node_maps_to_it() {
        let nodes = [node("a", 0.0, 0.0), node("b", 5.0, 5.0)];
        let m = map_cluster_to_node(&[cluster("c", 5.0, 5.0, &[])], &nodes).unwrap();
        assert_eq!(m["c"], "b");
    }

    #[test]
    fn equidistant_cluster_takes_smaller_id() {
        let nodes = [node("z", 2.0, 0.0), node("m", 0.0, 0.0)];
        let m = map_cluster_to_node(&[cluster("c", 1.0, 0.0, &[])], &nodes).unwrap();
        assert_eq!(m["c"], "m");
    }

    #[test]
    fn missing_coordinates_rejected() {
        let nodes = [node("a", f64::NAN, 0.0)];
        assert!(map_cluster_to_node(&[cluster("c", 0.0, 0.0, &[])], &nodes).is_err());
    }

    fn types() -> Vec<BuildingType> {
        vec![
            BuildingType {
                id: "x".into(),
                r: 1.5,
                c: 4.0,
                max_heating_kw: 10.0,
            },
            BuildingType {
                id: "y".into(),
                r: 3.0,
                c: 7.0,
                max_heating_kw: 5.0,
            },
        ]
    }

    #[test]
    fn mixed_counts_aggregate() {
        let cl = [cluster("c", 0.0, 0.0, &[("x", 3), ("y", 2)])];
        let asg = BTreeMap::from([("c".to_string(), "n".to_string())]);
        let cop = BTreeMap::from([("c".to_string(), vec![3.0; 2])]);
        let out = BTreeMap::from([("c".to_string(), vec![0.0; 2])]);
        let vb = aggregate_buildings(&asg, &cl, &types(), &cop, &out, 2).unwrap();
        assert_eq!(vb.len(), 1);
        assert_relative_eq!(vb[0].r, 0.375, epsilon = 1e-12);
        assert_relative_eq!(vb[0].c, 26.0, epsilon = 1e-12);
        assert_relative_eq!(vb[0].phi_max[0], 40.0, epsilon = 1e-12);
    }

    #[test]
    fn empty_node_omitted_and_unknown_type_rejected() {
        let asg = BTreeMap::from([("c".to_string(), "n".to_string())]);
        let cop = BTreeMap::from([("c".to_string(), vec![3.0])]);
        let out = BTreeMap::from([("c".to_string(), vec![0.0])]);
        let empty = [cluster("c", 0.0, 0.0, &[("x", 0)])];
        assert!(aggregate_buildings(&asg, &empty, &types(), &cop, &out, 1)
            .unwrap()
            .is_empty());
        let bad = [cluster("c", 0.0, 0.0, &[("q", 1)])];
        assert!(aggregate_buildings(&asg, &bad, &types(), &cop, &out, 1).is_err());
    }

    fn vb(r: f64, c: f64) -> VirtualBuilding {
        VirtualBuilding {
            node: "n".into(),
            r,
            c,
            cop: vec![3.0; 40],
            outdoor_temp: vec![0.0; 40],
            phi_max: vec![10.0; 40],
            market_phi: vec![5.0; 40],
            market_indoor_temp: vec![21.0; 40],
            temp_min: vec![20.0; 40],
            temp_max: vec![22.0; 40],
        }
    }

    #[test]
    fn single_step_and_step_response() {
        assert_relative_eq!(simulate_temperature(&vb(1.0, 10.0), &[1.0])[0], 0.1);
        assert!(simulate_temperature(&vb(1.0, 10.0), &[0.0; 5])
            .iter()
            .all(|&x| x == 0.0));
        let b = vb(0.5, 10.0);
        let s = simulate_temperature(&b, &[2.0; 25]);
        let target = b.r * 2.0;
        assert!(
            (s[24] - target).abs() <= 0.01 * target,
            "{} vs {target}",
            s[24]
        );
    }

    #[test]
    fn zero_tau_rejected() {
        let b = vb(1.0, 0.0);
        assert!(check_virtual_building(&b, 0..2).is_err());
    }
}
