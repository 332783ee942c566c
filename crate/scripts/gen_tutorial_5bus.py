#!/usr/bin/env python3
"""Generates the 5-bus one-week tutorial scenarios.

Usage: gen_tutorial_5bus.py <out_dir> [--uncongested]

Wind in the north meets load and a district heating network in the south.
The --uncongested variant scales all flow limits so that no redispatch is
needed.
"""
import csv
import json
import math
import random
import sys
from pathlib import Path

HOURS = 168


def write_series(path, columns):
    ids = sorted(columns)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["hour"] + ids)
        for h in range(HOURS):
            w.writerow([h] + [repr(round(columns[i][h], 4)) for i in ids])


def main():
    out = Path(sys.argv[1])
    uncongested = "--uncongested" in sys.argv[2:]
    rng = random.Random(2035)
    out.mkdir(parents=True, exist_ok=True)

    day = [math.sin(2 * math.pi * (h % 24 - 6) / 24) for h in range(HOURS)]
    demand = {
        "n3": [90 + 15 * d for d in day],
        "n4": [230 + 40 * d for d in day],
        "n5": [180 + 30 * d for d in day],
    }

    # Wind: slow weather fronts plus hourly noise, capped at the capacity.
    wind = []
    level = 0.5
    for h in range(HOURS):
        front = 0.5 + 0.4 * math.sin(2 * math.pi * h / 70 + 1.0)
        level += 0.25 * (front - level) + rng.gauss(0, 0.05)
        level = min(max(level, 0.02), 1.0)
        wind.append(600 * level)

    outdoor = [2 + 4 * math.sin(2 * math.pi * (h % 24 - 9) / 24) - 3 * h / HOURS for h in range(HOURS)]
    cop_cluster = [2.6 + 0.06 * t for t in outdoor]
    heat = [110 + 25 * math.cos(2 * math.pi * (h % 24 - 7) / 24) - 2 * t for h, t in zip(range(HOURS), outdoor)]

    scale = 10.0 if uncongested else 1.0
    branches = [
        ("l12", "n1", "n2", 0.05, 420),
        ("l15", "n1", "n5", 0.08, 260),
        ("l23", "n2", "n3", 0.06, 380),
        ("l34", "n3", "n4", 0.07, 260),
        ("l45", "n4", "n5", 0.05, 220),
        ("l24", "n2", "n4", 0.09, 200),
    ]
    grid = {
        "base_mva": 100.0,
        "nodes": [
            {"id": "n1", "lon": 8.5, "lat": 54.3, "slack": True},
            {"id": "n2", "lon": 10.0, "lat": 53.5},
            {"id": "n3", "lon": 9.5, "lat": 51.5},
            {"id": "n4", "lon": 11.0, "lat": 49.0},
            {"id": "n5", "lon": 8.8, "lat": 48.7},
        ],
        "branches": [
            {"id": i, "from": f, "to": t, "reactance": x, "flow_limit": lim * scale, "outage_candidate": True}
            for i, f, t, x, lim in branches
        ],
        "phase_shifters": [
            {"id": "pst15", "branch": "l15", "angle_min": -10.0, "angle_max": 10.0, "cost_per_degree": 20.0}
        ],
    }
    units = [
        {"id": "wind_north", "node": "n1", "kind": "res", "p_max": 600.0, "marginal_cost": 0.0, "cost_up": 30.0, "cost_down": 30.0},
        {"id": "coal_n2", "node": "n2", "kind": "pp", "p_min": 0.0, "p_max": 300.0, "marginal_cost": 35.0, "cost_up": 45.0, "cost_down": 15.0},
        {"id": "gas_n5", "node": "n5", "kind": "pp", "p_max": 400.0, "marginal_cost": 60.0, "cost_up": 70.0, "cost_down": 20.0},
        {"id": "peak_n4", "node": "n4", "kind": "pp", "p_max": 250.0, "marginal_cost": 90.0, "cost_up": 100.0, "cost_down": 20.0},
        {"id": "hydro_n3", "node": "n3", "kind": "ps", "p_max": 80.0, "flex_mw": 80.0, "cost_up": 25.0, "cost_down": 25.0},
    ]
    dhn = {
        "id": "dhn_south",
        "node": "n4",
        "chp": [
            {"id": "chp_south", "turbine": "ext", "eta_cond": 0.45, "eta_total_max": 0.85, "sigma": 0.7,
             "p_min": 10.0, "p_max": 90.0, "q_max": 80.0, "fuel_cost": 30.0}
        ],
        "pth": [
            {"id": "eboiler_south", "kind": "electric_boiler", "p_max": 120.0, "cop": 0.99, "heat_cost": 1.0},
            {"id": "lhp_south", "kind": "heat_pump", "p_max": 25.0, "heat_cost": 1.0},
        ],
        "storage": [{"id": "tes_south", "e_max": 800.0, "q_max": 80.0, "eta": 0.995, "e_init": 300.0}],
        "boilers": [{"id": "hob_south", "q_max": 250.0, "fuel_cost": 45.0}],
    }
    heat_pumps = {
        "building_types": [
            {"id": "sfh_old", "r": 5.0, "c": 8.0, "max_heating_kw": 9.0},
            {"id": "sfh_new", "r": 10.0, "c": 12.0, "max_heating_kw": 6.0},
        ],
        "clusters": [
            {"id": "wc_south_east", "lon": 11.2, "lat": 49.1, "buildings": {"sfh_old": 3000, "sfh_new": 4000}},
            {"id": "wc_south_west", "lon": 8.6, "lat": 48.5, "buildings": {"sfh_old": 2000, "sfh_new": 5000}},
        ],
        "setpoint_c": 21.0,
        "corridor_k": 1.0,
    }
    doc = {
        "format_version": "1.0",
        "name": "uncongested-5bus" if uncongested else "tutorial-5bus",
        "grid": grid,
        "units": units,
        "district_heating": [dhn],
        "heat_pumps": heat_pumps,
        "series": {
            "electric_demand": "electric_demand.csv",
            "res_availability": "res_availability.csv",
            "heat_demand": "heat_demand.csv",
            "cop": "cop.csv",
            "outdoor_temp": "outdoor_temp.csv",
        },
        "config": {"horizon_hours": HOURS, "interval_hours": 168, "mode": "both", "histogram_bin_mw": 10.0},
    }
    (out / "scenario.json").write_text(json.dumps(doc, indent=2) + "\n")
    write_series(out / "electric_demand.csv", demand)
    write_series(out / "res_availability.csv", {"wind_north": wind})
    write_series(out / "heat_demand.csv", {"dhn_south": heat})
    write_series(out / "cop.csv", {
        "wc_south_east": cop_cluster,
        "wc_south_west": [c + 0.1 for c in cop_cluster],
        "lhp_south": [c + 0.4 for c in cop_cluster],
    })
    write_series(out / "outdoor_temp.csv", {
        "wc_south_east": outdoor,
        "wc_south_west": [t + 1.0 for t in outdoor],
    })


if __name__ == "__main__":
    main()
