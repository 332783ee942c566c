#![allow(dead_code)]

pub mod grids;
pub mod scenarios;
pub mod tableau;

use rand::Rng;
use redispatch_core::lp::{LinearProgram, Relation};

/// Random bounded LP that is feasible by construction: a random interior
/// point satisfies every row.
pub fn random_lp<R: Rng>(rng: &mut R, n: usize, m: usize) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let mut point = Vec::with_capacity(n);
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let l = -rng.gen_range(0.0..5.0f64).round();
            let u = rng.gen_range(1.0..10.0f64).round();
            point.push(rng.gen_range(l..u));
            lp.add_variable(format!("x{j}"), l, u, rng.gen_range(-10.0..10.0f64).round())
        })
        .collect();
    for i in 0..m {
        let mut terms = Vec::new();
        let mut act = 0.0;
        for (j, &v) in vars.iter().enumerate() {
            if rng.gen_bool(0.4) {
                let a = rng.gen_range(-5.0..5.0f64).round();
                if a != 0.0 {
                    terms.push((v, a));
                    act += a * point[j];
                }
            }
        }
        let slack = rng.gen_range(0.0..3.0f64);
        let rel = match rng.gen_range(0..4) {
            0 => Relation::Le((act + slack).round() + 1.0),
            1 => Relation::Ge((act - slack).round() - 1.0),
            2 => Relation::Range((act - slack).floor() - 1.0, (act + slack).ceil() + 1.0),
            _ => {
                // Equality through the random point keeps feasibility.
                Relation::Eq(act)
            }
        };
        lp.add_constraint(format!("r{i}"), terms, rel);
    }
    lp
}
