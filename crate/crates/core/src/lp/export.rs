//! Free-MPS and LP-text writers.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::model::{LinearProgram, Relation};
use super::LpError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    FreeMps,
    LpText,
}

impl FromStr for ExportFormat {
    type Err = LpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mps" => Ok(ExportFormat::FreeMps),
            "lp" => Ok(ExportFormat::LpText),
            other => Err(LpError::Malformed(format!("unknown export format {other:?}"))),
        }
    }
}

const OBJ_ROW: &str = "obj";

fn row_name(i: usize) -> String {
    format!("r{i}")
}

pub fn export(lp: &LinearProgram, format: ExportFormat, path: &Path) -> Result<(), LpError> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        ExportFormat::FreeMps => write_mps(lp, &mut out)?,
        ExportFormat::LpText => write_lp(lp, &mut out)?,
    }
    out.flush()?;
    Ok(())
}

/// Writes free MPS with sections NAME, OBJSENSE, ROWS, COLUMNS, RHS, BOUNDS
/// and ENDATA. Every column gets explicit bounds.
pub fn write_mps<W: Write>(lp: &LinearProgram, out: &mut W) -> Result<(), LpError> {
    lp.validate()?;
    let name = if lp.name.is_empty() { "polarize" } else { lp.name.as_str() };
    writeln!(out, "NAME {name}")?;
    writeln!(out, "OBJSENSE\n    MIN")?;
    writeln!(out, "ROWS")?;
    writeln!(out, " N  {OBJ_ROW}")?;
    for (i, c) in lp.constraints().iter().enumerate() {
        let kind = match c.relation {
            Relation::LessEq => "L",
            Relation::Eq => "E",
            Relation::GreaterEq => "G",
        };
        writeln!(out, " {kind}  {}", row_name(i))?;
    }

    // Column-major view of the matrix.
    let n = lp.num_variables();
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, c) in lp.constraints().iter().enumerate() {
        for &(j, v) in c.row.entries() {
            columns[j].push((i, v));
        }
    }
    let mut cost = vec![0.0; n];
    for &(j, v) in lp.objective().entries() {
        cost[j] = v;
    }
    writeln!(out, "COLUMNS")?;
    for (j, entries) in columns.iter().enumerate() {
        let var = &lp.variable_names()[j];
        if cost[j] != 0.0 {
            writeln!(out, "    {var}  {OBJ_ROW}  {}", cost[j])?;
        }
        for &(i, v) in entries {
            writeln!(out, "    {var}  {}  {v}", row_name(i))?;
        }
        if cost[j] == 0.0 && entries.is_empty() {
            // Keep the column declared even when it appears nowhere.
            writeln!(out, "    {var}  {OBJ_ROW}  0")?;
        }
    }
    writeln!(out, "RHS")?;
    if lp.objective_constant() != 0.0 {
        writeln!(out, "    RHS  {OBJ_ROW}  {}", -lp.objective_constant())?;
    }
    for (i, c) in lp.constraints().iter().enumerate() {
        if c.rhs != 0.0 {
            writeln!(out, "    RHS  {}  {}", row_name(i), c.rhs)?;
        }
    }
    writeln!(out, "BOUNDS")?;
    for j in 0..n {
        let var = &lp.variable_names()[j];
        let (lo, hi) = (lp.lower()[j], lp.upper()[j]);
        if lo == hi {
            writeln!(out, " FX BND  {var}  {lo}")?;
            continue;
        }
        match (lo.is_finite(), hi.is_finite()) {
            (false, false) => writeln!(out, " FR BND  {var}")?,
            (false, true) => {
                writeln!(out, " MI BND  {var}")?;
                writeln!(out, " UP BND  {var}  {hi}")?;
            }
            (true, false) => writeln!(out, " LO BND  {var}  {lo}")?,
            (true, true) => {
                writeln!(out, " LO BND  {var}  {lo}")?;
                writeln!(out, " UP BND  {var}  {hi}")?;
            }
        }
    }
    writeln!(out, "ENDATA")?;
    Ok(())
}

/// Maps a canonical column name onto the LP-text identifier alphabet:
/// `y[U11+U12;V23]` becomes `y_U11_U12__V23`.
pub fn lp_text_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    for ch in name.chars() {
        match ch {
            '[' | '+' => out.push('_'),
            ';' => out.push_str("__"),
            ']' => {}
            c if c.is_ascii_alphanumeric() || c == '_' || c == '.' => out.push(c),
            _ => out.push('_'),
        }
    }
    out
}

fn write_terms<W: Write>(out: &mut W, terms: &[(usize, f64)], names: &[String]) -> Result<(), LpError> {
    if terms.is_empty() {
        write!(out, " 0 {}", names.first().map(String::as_str).unwrap_or("0"))?;
        return Ok(());
    }
    for (k, &(j, v)) in terms.iter().enumerate() {
        match (v < 0.0, k) {
            (true, _) => write!(out, " - {} {}", v.abs(), names[j])?,
            (false, 0) => write!(out, " {} {}", v, names[j])?,
            (false, _) => write!(out, " + {} {}", v, names[j])?,
        }
    }
    Ok(())
}

/// Writes CPLEX-style LP text.
pub fn write_lp<W: Write>(lp: &LinearProgram, out: &mut W) -> Result<(), LpError> {
    lp.validate()?;
    let names: Vec<String> = lp.variable_names().iter().map(|n| lp_text_name(n)).collect();
    let mut seen = HashSet::with_capacity(names.len());
    for n in &names {
        if !seen.insert(n.as_str()) {
            return Err(LpError::Malformed(format!("LP-text name collision on {n}")));
        }
    }
    writeln!(out, "\\ {}", lp.name)?;
    writeln!(out, "Minimize")?;
    write!(out, " {OBJ_ROW}:")?;
    write_terms(out, lp.objective().entries(), &names)?;
    if lp.objective_constant() != 0.0 {
        let c = lp.objective_constant();
        write!(out, " {} {}", if c < 0.0 { "-" } else { "+" }, c.abs())?;
    }
    writeln!(out)?;
    writeln!(out, "Subject To")?;
    for (i, c) in lp.constraints().iter().enumerate() {
        write!(out, " {}:", row_name(i))?;
        write_terms(out, c.row.entries(), &names)?;
        writeln!(out, " {} {}", c.relation, c.rhs)?;
    }
    writeln!(out, "Bounds")?;
    for (j, name) in names.iter().enumerate() {
        let (lo, hi) = (lp.lower()[j], lp.upper()[j]);
        match (lo.is_finite(), hi.is_finite()) {
            _ if lo == hi => writeln!(out, " {name} = {lo}")?,
            (false, false) => writeln!(out, " {name} free")?,
            (false, true) => writeln!(out, " -inf <= {name} <= {hi}")?,
            (true, false) => writeln!(out, " {name} >= {lo}")?,
            (true, true) => writeln!(out, " {lo} <= {name} <= {hi}")?,
        }
    }
    writeln!(out, "End")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::model::SparseRow;

    fn tiny() -> LinearProgram {
        let mut lp = LinearProgram::new("tiny");
        lp.add_variable("y[U11;]", 0.0, 1.0);
        lp.add_constraint(SparseRow::from_pairs([(0, 1.0)]), Relation::Eq, 1.0);
        lp
    }

    #[test]
    fn mps_has_seven_sections() {
        let mut buf = Vec::new();
        write_mps(&tiny(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let sections: Vec<&str> = text
            .lines()
            .filter(|l| !l.starts_with(' '))
            .map(|l| l.split_whitespace().next().unwrap())
            .collect();
        assert_eq!(sections, ["NAME", "OBJSENSE", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"]);
        assert!(text.contains("    y[U11;]  r0  1\n"));
        assert!(text.contains(" UP BND  y[U11;]  1\n"));
    }

    #[test]
    fn export_is_deterministic() {
        let lp = tiny();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        write_mps(&lp, &mut a).unwrap();
        write_mps(&lp, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn lp_text_names() {
        assert_eq!(lp_text_name("y[U11+U12;V23]"), "y_U11_U12__V23");
        assert_eq!(lp_text_name("y[;]"), "y___");
        let mut buf = Vec::new();
        write_lp(&tiny(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(" r0: 1 y_U11__ = 1\n"), "{text}");
    }
}
