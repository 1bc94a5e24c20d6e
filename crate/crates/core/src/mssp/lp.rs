//! LP and free-MPS writers for [`MsspModel`].

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use serde::Serialize;

use super::model::{MsspModel, Sense, Var};

/// Terms per line in LP output; keeps lines short for strict readers.
const TERMS_PER_LINE: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Lp,
    Mps,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lp" => Ok(Format::Lp),
            "mps" => Ok(Format::Mps),
            other => Err(format!("unknown model format {other:?} (expected lp or mps)")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Lp => "lp",
            Format::Mps => "mps",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EmitSummary {
    pub variables: u64,
    pub binaries: u64,
    pub rows: u64,
    pub nac_rows: u64,
}

/// Formats a number with 6 significant digits, C `%g` style.
pub fn fmt_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.5e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn sense_lp(s: Sense) -> &'static str {
    match s {
        Sense::Le => "<=",
        Sense::Ge => ">=",
        Sense::Eq => "=",
    }
}

fn write_terms<W: Write>(out: &mut W, terms: &[(Var, f64)]) -> io::Result<()> {
    for (k, (var, coef)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.write_all(b"\n   ")?;
        }
        let sign = if *coef < 0.0 { '-' } else { '+' };
        write!(out, " {sign} {} {var}", fmt_g6(coef.abs()))?;
    }
    Ok(())
}

/// Writes the model in CPLEX LP format.
pub fn write_lp<W: Write>(model: &MsspModel, out: &mut W) -> io::Result<EmitSummary> {
    let vars = model.variables();
    let mut summary = EmitSummary {
        variables: vars.len() as u64,
        binaries: vars.iter().filter(|v| v.is_binary()).count() as u64,
        ..EmitSummary::default()
    };
    writeln!(out, "\\ {}: {} scenarios, {} NAC pairs", model.case().name, model.scenario_count(), model.pairs().len())?;
    writeln!(out, "Maximize")?;
    write!(out, " obj:")?;
    write_terms(out, &model.objective())?;
    writeln!(out, "\nSubject To")?;

    let mut result = Ok(());
    model.for_each_row(true, |row| {
        if result.is_err() {
            return;
        }
        summary.rows += 1;
        if row.group.is_nac() {
            summary.nac_rows += 1;
        }
        result = (|| {
            write!(out, " {}:", row.name)?;
            write_terms(out, &row.terms)?;
            writeln!(out, " {} {}", sense_lp(row.sense), fmt_g6(row.rhs))
        })();
    });
    result?;

    writeln!(out, "Bounds")?;
    for v in vars.iter().filter(|v| !v.is_binary()) {
        writeln!(out, " {v} free")?;
    }
    writeln!(out, "Binaries")?;
    for v in vars.iter().filter(|v| v.is_binary()) {
        writeln!(out, " {v}")?;
    }
    writeln!(out, "End")?;
    Ok(summary)
}

/// Writes the model in free MPS format. Columns are gathered in memory first,
/// so prefer LP output for very large models.
pub fn write_mps<W: Write>(model: &MsspModel, out: &mut W) -> io::Result<EmitSummary> {
    let vars = model.variables();
    let index: HashMap<Var, usize> = vars.iter().enumerate().map(|(k, v)| (*v, k)).collect();
    let mut columns: Vec<Vec<(u32, f64)>> = vec![Vec::new(); vars.len()];
    let mut row_names = Vec::new();
    let mut row_senses = Vec::new();
    let mut rhs = Vec::new();
    let mut summary = EmitSummary {
        variables: vars.len() as u64,
        binaries: vars.iter().filter(|v| v.is_binary()).count() as u64,
        ..EmitSummary::default()
    };

    model.for_each_row(true, |row| {
        let r = row_names.len() as u32;
        summary.rows += 1;
        if row.group.is_nac() {
            summary.nac_rows += 1;
        }
        row_names.push(row.name.clone());
        row_senses.push(row.sense);
        if row.rhs != 0.0 {
            rhs.push((r, row.rhs));
        }
        for (var, coef) in &row.terms {
            columns[index[var]].push((r, *coef));
        }
    });
    let objective: HashMap<Var, f64> = model.objective().into_iter().collect();

    writeln!(out, "NAME {}", model.case().name)?;
    writeln!(out, "OBJSENSE\n    MAX")?;
    writeln!(out, "ROWS\n N obj")?;
    for (name, sense) in row_names.iter().zip(&row_senses) {
        let tag = match sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        writeln!(out, " {tag} {name}")?;
    }
    writeln!(out, "COLUMNS")?;
    let mut in_int = false;
    for (k, var) in vars.iter().enumerate() {
        if var.is_binary() != in_int {
            let marker = if in_int { "INTEND" } else { "INTORG" };
            writeln!(out, "    MARKER 'MARKER' '{marker}'")?;
            in_int = !in_int;
        }
        if let Some(c) = objective.get(var) {
            writeln!(out, "    {var} obj {}", fmt_g6(*c))?;
        }
        for &(r, coef) in &columns[k] {
            writeln!(out, "    {var} {} {}", row_names[r as usize], fmt_g6(coef))?;
        }
    }
    if in_int {
        writeln!(out, "    MARKER 'MARKER' 'INTEND'")?;
    }
    writeln!(out, "RHS")?;
    for (r, value) in rhs {
        writeln!(out, "    rhs {} {}", row_names[r as usize], fmt_g6(value))?;
    }
    writeln!(out, "BOUNDS")?;
    for var in &vars {
        if var.is_binary() {
            writeln!(out, " BV bnd {var}")?;
        } else {
            writeln!(out, " FR bnd {var}")?;
        }
    }
    writeln!(out, "ENDATA")?;
    Ok(summary)
}

pub fn write_model<W: Write>(model: &MsspModel, format: Format, out: &mut W) -> io::Result<EmitSummary> {
    match format {
        Format::Lp => write_lp(model, out),
        Format::Mps => write_mps(model, out),
    }
}
