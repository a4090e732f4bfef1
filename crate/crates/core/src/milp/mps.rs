//! Fixed-format MPS writer.
//!
//! Names longer than eight characters, containing blanks, empty or
//! duplicated are replaced for the whole section by generated names
//! (`C0000001`, `R0000001`); a comment block maps them back. Maximization
//! is written as minimization of the negated objective, since fixed MPS
//! has no standard sense marker.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use super::{Comparator, MilpProblem, Sense};

const OBJ_ROW: &str = "OBJ";

fn valid_names<'a>(names: impl Iterator<Item = &'a str>) -> bool {
    let mut seen = BTreeSet::new();
    for n in names {
        if n.is_empty() || n.len() > 8 || n.contains(char::is_whitespace) || n == OBJ_ROW || n.starts_with('*') {
            return false;
        }
        if !seen.insert(n) {
            return false;
        }
    }
    true
}

/// Formats a number into at most 12 characters.
fn num(x: f64) -> String {
    let plain = format!("{x}");
    if plain.len() <= 12 {
        return plain;
    }
    for prec in (1..=7).rev() {
        let s = format!("{x:.prec$e}");
        if s.len() <= 12 {
            return s;
        }
    }
    format!("{x:.0e}")
}

/// Writes `problem` as fixed-format MPS text.
pub fn export_mps(problem: &MilpProblem) -> String {
    let var_names: Vec<String> = if valid_names(problem.variables.iter().map(|v| v.name.as_str())) {
        problem.variables.iter().map(|v| v.name.clone()).collect()
    } else {
        (0..problem.variables.len()).map(|j| format!("C{:07}", j + 1)).collect()
    };
    let row_names: Vec<String> = if valid_names(problem.constraints.iter().map(|c| c.name.as_str())) {
        problem.constraints.iter().map(|c| c.name.clone()).collect()
    } else {
        (0..problem.constraints.len()).map(|i| format!("R{:07}", i + 1)).collect()
    };
    let name = if problem.name.is_empty() || problem.name.contains(char::is_whitespace) {
        "PROBLEM".to_string()
    } else {
        problem.name.clone()
    };
    let obj_sign = match problem.objective.sense {
        Sense::Maximize => -1.0,
        Sense::Minimize => 1.0,
    };

    let mut out = String::new();
    let w = &mut out;
    if problem.objective.sense == Sense::Maximize {
        let _ = writeln!(w, "* objective negated: original sense is MAX");
    }
    for (j, v) in problem.variables.iter().enumerate() {
        if var_names[j] != v.name {
            let _ = writeln!(w, "* column {} = {}", var_names[j], v.name);
        }
    }
    for (i, c) in problem.constraints.iter().enumerate() {
        if row_names[i] != c.name {
            let _ = writeln!(w, "* row {} = {}", row_names[i], c.name);
        }
    }
    let _ = writeln!(w, "NAME          {name}");
    let _ = writeln!(w, "ROWS");
    let _ = writeln!(w, " N  {OBJ_ROW}");
    for (i, c) in problem.constraints.iter().enumerate() {
        let t = match c.cmp {
            Comparator::Le => 'L',
            Comparator::Ge => 'G',
            Comparator::Eq => 'E',
        };
        let _ = writeln!(w, " {t}  {}", row_names[i]);
    }

    // Column-major coefficient lists, merging duplicate terms.
    let mut cols: Vec<Vec<(usize, f64)>> = alloc::vec![Vec::new(); problem.variables.len()];
    let mut obj = alloc::vec![0.0; problem.variables.len()];
    for (v, a) in &problem.objective.terms {
        obj[v.0] += obj_sign * a;
    }
    for (i, c) in problem.constraints.iter().enumerate() {
        for (v, a) in &c.terms {
            match cols[v.0].last_mut() {
                Some((row, acc)) if *row == i => *acc += a,
                _ => cols[v.0].push((i, *a)),
            }
        }
    }

    let _ = writeln!(w, "COLUMNS");
    let mut in_int = false;
    let mut marker = 0;
    for (j, v) in problem.variables.iter().enumerate() {
        if v.is_integer() != in_int {
            let kind = if in_int { "'INTEND'" } else { "'INTORG'" };
            let _ = writeln!(w, "    {:<8}  {:<8}{:17}{}", format!("MARKER{marker:02}"), "'MARKER'", "", kind);
            marker += 1;
            in_int = !in_int;
        }
        let mut entries: Vec<(&str, f64)> = Vec::new();
        if obj[j] != 0.0 || cols[j].iter().all(|(_, a)| *a == 0.0) {
            entries.push((OBJ_ROW, obj[j]));
        }
        for (i, a) in &cols[j] {
            if *a != 0.0 {
                entries.push((row_names[*i].as_str(), *a));
            }
        }
        for (row, a) in entries {
            let _ = writeln!(w, "    {:<8}  {:<8}  {:>12}", var_names[j], row, num(a));
        }
    }
    if in_int {
        let _ = writeln!(w, "    {:<8}  {:<8}{:17}'INTEND'", format!("MARKER{marker:02}"), "'MARKER'", "");
    }

    let _ = writeln!(w, "RHS");
    for (i, c) in problem.constraints.iter().enumerate() {
        if c.rhs != 0.0 {
            let _ = writeln!(w, "    {:<8}  {:<8}  {:>12}", "RHS", row_names[i], num(c.rhs));
        }
    }

    let _ = writeln!(w, "BOUNDS");
    for (j, v) in problem.variables.iter().enumerate() {
        let (lo, hi) = v.effective_bounds();
        let n = &var_names[j];
        let mut bound = |kind: &str, value: Option<f64>| {
            match value {
                Some(x) => writeln!(w, " {kind} {:<8}  {:<8}  {:>12}", "BND", n, num(x)),
                None => writeln!(w, " {kind} {:<8}  {:<8}", "BND", n),
            }
            .ok();
        };
        if lo == hi {
            bound("FX", Some(lo));
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => bound("FR", None),
            (false, true) => {
                bound("MI", None);
                bound("UP", Some(hi));
            }
            (true, false) => {
                if lo != 0.0 {
                    bound("LO", Some(lo));
                }
                if v.is_integer() {
                    // some readers default integer columns to [0, 1]
                    bound("PL", None);
                }
            }
            (true, true) => {
                if lo != 0.0 || v.is_integer() {
                    bound("LO", Some(lo));
                }
                bound("UP", Some(hi));
            }
        }
    }
    let _ = writeln!(w, "ENDATA");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{Comparator, Integrality, MilpProblem, Sense};
    use super::*;
    use alloc::vec;

    /// Fields of a fixed-format data line by column range (1-based 2-3,
    /// 5-12, 15-22, 25-36), trimmed.
    fn fields(line: &str) -> [&str; 4] {
        let get = |a: usize, b: usize| line.get(a - 1..b.min(line.len())).unwrap_or("").trim();
        [get(2, 3), get(5, 12), get(15, 22), get(25, 36)]
    }

    fn has_line(text: &str, want: [&str; 4]) -> bool {
        text.lines().filter(|l| l.starts_with(' ')).any(|l| fields(l) == want)
    }

    #[test]
    fn skeleton_has_every_section() {
        let mut p = MilpProblem::new("skel", Sense::Minimize);
        p.add_var("x", 0.0, 4.0, Integrality::Continuous);
        let text = export_mps(&p);
        let sections: Vec<&str> =
            text.lines().filter(|l| !l.starts_with(' ') && !l.starts_with('*')).collect();
        assert_eq!(sections, vec!["NAME          skel", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]);
        assert!(has_line(&text, ["UP", "BND", "x", "4"]));
        assert!(has_line(&text, ["", "x", "OBJ", "0"]));
    }

    #[test]
    fn binary_is_inside_markers_with_unit_bounds() {
        let mut p = MilpProblem::new("bin", Sense::Maximize);
        let x = p.add_var("x", 0.0, 2.0, Integrality::Continuous);
        let b = p.add_var("b", 0.0, 1.0, Integrality::Binary);
        p.add_constraint("c1", vec![(x, 1.0), (b, -2.0)], Comparator::Le, 0.0);
        p.set_objective_coef(x, 1.0);
        let text = export_mps(&p);
        let lines: Vec<&str> = text.lines().collect();
        let org = lines.iter().position(|l| l.contains("'INTORG'")).unwrap();
        let end = lines.iter().position(|l| l.contains("'INTEND'")).unwrap();
        let b_line = lines.iter().position(|l| l.starts_with("    b ")).unwrap();
        assert!(org < b_line && b_line < end);
        assert!(has_line(&text, ["LO", "BND", "b", "0"]));
        assert!(has_line(&text, ["UP", "BND", "b", "1"]));
        // maximization is negated
        assert!(has_line(&text, ["", "x", "OBJ", "-1"]));
        let marker = lines[org];
        assert_eq!(&marker[39..47], "'INTORG'");
    }

    #[test]
    fn long_names_are_replaced_deterministically() {
        let mut p = MilpProblem::new("long", Sense::Minimize);
        let a = p.add_var("a_very_long_name", 0.0, 1.0, Integrality::Continuous);
        p.add_var("", 0.0, 1.0, Integrality::Continuous);
        p.add_constraint("row", vec![(a, 1.0)], Comparator::Ge, 0.5);
        let text = export_mps(&p);
        assert!(text.contains("* column C0000001 = a_very_long_name"));
        assert!(text.contains("    C0000002  OBJ"));
        assert!(text.contains(" G  row"));
        assert_eq!(text, export_mps(&p));
    }

    #[test]
    fn numbers_fit_twelve_columns() {
        for x in [1.0 / 3.0, -123456789.123, 1e-17, 2.5, -0.999, 312.5] {
            assert!(num(x).len() <= 12, "{}", num(x));
            let back: f64 = num(x).parse().unwrap();
            assert!((back - x).abs() <= 1e-6 * x.abs().max(1e-300), "{x} -> {back}");
        }
    }
}
