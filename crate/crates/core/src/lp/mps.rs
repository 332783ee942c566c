//! Free-format MPS export.

use std::io::Write;

use super::model::{LinearProgram, Relation};

fn clean(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_whitespace() { '_' } else { c })
        .collect()
}

pub fn write_mps<W: Write>(lp: &LinearProgram, name: &str, mut w: W) -> std::io::Result<()> {
    writeln!(w, "NAME {}", clean(name))?;
    writeln!(w, "ROWS")?;
    writeln!(w, " N  COST")?;
    let row_names: Vec<String> = lp.constraints.iter().map(|c| clean(&c.name)).collect();
    for (c, rn) in lp.constraints.iter().zip(&row_names) {
        let kind = match c.relation {
            Relation::Le(_) => "L",
            Relation::Ge(_) | Relation::Range(..) => "G",
            Relation::Eq(_) => "E",
        };
        writeln!(w, " {kind}  {rn}")?;
    }
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_variables()];
    for (i, c) in lp.constraints.iter().enumerate() {
        for (v, a) in &c.terms {
            by_col[v.0].push((i, *a));
        }
    }
    writeln!(w, "COLUMNS")?;
    for (j, v) in lp.variables.iter().enumerate() {
        let vn = clean(&v.name);
        if v.cost != 0.0 {
            writeln!(w, "    {vn}  COST  {:?}", v.cost)?;
        }
        for (i, a) in &by_col[j] {
            writeln!(w, "    {vn}  {}  {a:?}", row_names[*i])?;
        }
    }
    writeln!(w, "RHS")?;
    for (c, rn) in lp.constraints.iter().zip(&row_names) {
        let rhs = match c.relation {
            Relation::Le(b) | Relation::Ge(b) | Relation::Eq(b) => b,
            Relation::Range(l, _) => l,
        };
        if rhs != 0.0 {
            writeln!(w, "    RHS  {rn}  {rhs:?}")?;
        }
    }
    let ranges: Vec<(&String, f64)> = lp
        .constraints
        .iter()
        .zip(&row_names)
        .filter_map(|(c, rn)| match c.relation {
            Relation::Range(l, u) => Some((rn, u - l)),
            _ => None,
        })
        .collect();
    if !ranges.is_empty() {
        writeln!(w, "RANGES")?;
        for (rn, r) in ranges {
            writeln!(w, "    RNG  {rn}  {r:?}")?;
        }
    }
    writeln!(w, "BOUNDS")?;
    for v in &lp.variables {
        let vn = clean(&v.name);
        let (l, u) = (v.lower, v.upper);
        if l == u {
            writeln!(w, " FX BND  {vn}  {l:?}")?;
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            writeln!(w, " FR BND  {vn}")?;
        } else {
            if l == f64::NEG_INFINITY {
                writeln!(w, " MI BND  {vn}")?;
            } else if l != 0.0 {
                writeln!(w, " LO BND  {vn}  {l:?}")?;
            }
            if u != f64::INFINITY {
                writeln!(w, " UP BND  {vn}  {u:?}")?;
            }
        }
    }
    writeln!(w, "ENDATA")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_ranges_and_bounds() {
        let mut lp = LinearProgram::new();
        let x = lp.add_variable("x", 0.0, 10.0, 1.0);
        let y = lp.add_variable("y", f64::NEG_INFINITY, f64::INFINITY, 0.0);
        lp.add_constraint("r0", vec![(x, 1.0), (y, 2.0)], Relation::Range(-1.0, 3.0));
        let mut out = Vec::new();
        write_mps(&lp, "t", &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains(" G  r0"));
        assert!(text.contains("RNG  r0  4.0"));
        assert!(text.contains("RHS  r0  -1.0"));
        assert!(text.contains(" UP BND  x  10.0"));
        assert!(text.contains(" FR BND  y"));
        assert!(text.ends_with("ENDATA\n"));
    }
}
