//! Fixed-format MPS writer and parser, plus the plain `name value` solution
//! import used by the export-only solver mode.
//!
//! Column and row names are positional (`X0000001`, `R0000001`) so the file
//! stays within classic 8-character fields regardless of how descriptive
//! the in-memory names are. Values print in the shortest round-trip form;
//! a re-import therefore reproduces the numbers bit for bit, and a
//! re-export of the re-import is byte-identical.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{MilpModel, Sense, VarKind};

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("line {0}: {1}")]
    Syntax(usize, String),
    #[error("unknown name {0}")]
    UnknownName(String),
    #[error("missing section {0}")]
    MissingSection(&'static str),
}

fn col_name(i: usize) -> String {
    format!("X{:07}", i)
}

fn row_name(i: usize) -> String {
    format!("R{:07}", i)
}

fn fmt(v: f64) -> String {
    if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{}", v)
    }
}

/// Serializes the model in fixed-format MPS with deterministic row/column
/// order (emission order).
pub fn write_mps(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str(&format!("NAME          {}\n", model.name));
    out.push_str("ROWS\n");
    out.push_str(" N  COST\n");
    for (i, r) in model.rows().iter().enumerate() {
        let tag = match r.sense {
            Sense::Le => "L",
            Sense::Eq => "E",
            Sense::Ge => "G",
        };
        out.push_str(&format!(" {}  {}\n", tag, row_name(i)));
    }
    out.push_str("COLUMNS\n");
    // Column-major entries: objective first, then rows in order.
    let mut by_col: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.n_vars()];
    for (j, &c) in model.objective().iter().enumerate() {
        if c != 0.0 {
            by_col[j].push(("COST".to_string(), c));
        }
    }
    for (i, r) in model.rows().iter().enumerate() {
        for &(v, c) in &r.coeffs {
            if c != 0.0 {
                by_col[v.0].push((row_name(i), c));
            }
        }
    }
    let mut in_integer_block = false;
    let mut marker_count = 0usize;
    for (j, entries) in by_col.iter().enumerate() {
        let is_int = model.vars()[j].kind == VarKind::Binary;
        if is_int != in_integer_block {
            let word = if is_int { "'INTORG'" } else { "'INTEND'" };
            out.push_str(&format!(
                "    MKR{:05}   'MARKER'                 {}\n",
                marker_count, word
            ));
            marker_count += 1;
            in_integer_block = is_int;
        }
        let name = col_name(j);
        for (row, c) in entries {
            out.push_str(&format!("    {:<8}  {:<8}  {}\n", name, row, fmt(*c)));
        }
        if entries.is_empty() {
            // Keep the column visible so the round trip preserves arity.
            out.push_str(&format!("    {:<8}  COST      0\n", name));
        }
    }
    if in_integer_block {
        out.push_str(&format!(
            "    MKR{:05}   'MARKER'                 'INTEND'\n",
            marker_count
        ));
    }
    out.push_str("RHS\n");
    for (i, r) in model.rows().iter().enumerate() {
        if r.rhs != 0.0 {
            out.push_str(&format!("    RHS       {:<8}  {}\n", row_name(i), fmt(r.rhs)));
        }
    }
    if model.obj_offset != 0.0 {
        // Objective constants ride on the objective row's RHS, negated.
        out.push_str(&format!("    RHS       COST      {}\n", fmt(-model.obj_offset)));
    }
    out.push_str("BOUNDS\n");
    for (j, v) in model.vars().iter().enumerate() {
        let name = col_name(j);
        if v.lb == v.ub {
            out.push_str(&format!(" FX BND       {:<8}  {}\n", name, fmt(v.lb)));
        } else if v.lb.is_infinite() && v.ub.is_infinite() {
            out.push_str(&format!(" FR BND       {:<8}\n", name));
        } else if v.lb.is_infinite() {
            out.push_str(&format!(" MI BND       {:<8}\n", name));
            out.push_str(&format!(" UP BND       {:<8}  {}\n", name, fmt(v.ub)));
        } else {
            out.push_str(&format!(" LO BND       {:<8}  {}\n", name, fmt(v.lb)));
            if v.ub.is_finite() {
                out.push_str(&format!(" UP BND       {:<8}  {}\n", name, fmt(v.ub)));
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// Parses the subset of MPS emitted by [`write_mps`] (plus free whitespace
/// tolerance). Variable kinds come from the INTORG/INTEND markers; names
/// are preserved as written.
pub fn parse_mps(text: &str) -> Result<MilpModel, MpsError> {
    #[derive(PartialEq)]
    enum Section {
        None,
        Rows,
        Columns,
        Rhs,
        Bounds,
        Done,
    }
    let mut model = MilpModel::new("");
    let mut section = Section::None;
    let mut row_sense: BTreeMap<String, Sense> = BTreeMap::new();
    let mut row_order: Vec<String> = Vec::new();
    let mut col_ids: BTreeMap<String, super::VarId> = BTreeMap::new();
    let mut col_entries: BTreeMap<String, Vec<(String, f64)>> = BTreeMap::new();
    let mut col_kind: BTreeMap<String, VarKind> = BTreeMap::new();
    let mut col_order: Vec<String> = Vec::new();
    let mut rhs: BTreeMap<String, f64> = BTreeMap::new();
    let mut bounds: Vec<(String, String, Option<f64>)> = Vec::new();
    let mut integer_block = false;
    let mut saw_endata = false;

    for (lineno, raw) in text.lines().enumerate() {
        let n = lineno + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let is_header = !raw.starts_with(' ');
        if is_header {
            let mut it = line.split_whitespace();
            match it.next().unwrap_or("") {
                "NAME" => {
                    model.name = it.next().unwrap_or("").to_string();
                }
                "ROWS" => section = Section::Rows,
                "COLUMNS" => section = Section::Columns,
                "RHS" => section = Section::Rhs,
                "RANGES" => {
                    return Err(MpsError::Syntax(n, "RANGES not supported".into()));
                }
                "BOUNDS" => section = Section::Bounds,
                "ENDATA" => {
                    saw_endata = true;
                    section = Section::Done;
                }
                other => {
                    return Err(MpsError::Syntax(n, format!("unknown section {other}")));
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Rows => {
                if fields.len() != 2 {
                    return Err(MpsError::Syntax(n, "ROWS entry needs 2 fields".into()));
                }
                match fields[0] {
                    "N" => {} // objective row
                    "L" | "G" | "E" => {
                        let sense = match fields[0] {
                            "L" => Sense::Le,
                            "G" => Sense::Ge,
                            _ => Sense::Eq,
                        };
                        row_sense.insert(fields[1].to_string(), sense);
                        row_order.push(fields[1].to_string());
                    }
                    other => {
                        return Err(MpsError::Syntax(n, format!("bad row type {other}")));
                    }
                }
            }
            Section::Columns => {
                if fields.len() >= 3 && fields[1] == "'MARKER'" {
                    match *fields.last().unwrap() {
                        "'INTORG'" => integer_block = true,
                        "'INTEND'" => integer_block = false,
                        other => {
                            return Err(MpsError::Syntax(n, format!("bad marker {other}")));
                        }
                    }
                    continue;
                }
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(MpsError::Syntax(n, "COLUMNS entry needs 3 or 5 fields".into()));
                }
                let col = fields[0].to_string();
                if !col_entries.contains_key(&col) {
                    col_order.push(col.clone());
                    col_kind.insert(
                        col.clone(),
                        if integer_block {
                            VarKind::Binary
                        } else {
                            VarKind::Continuous
                        },
                    );
                }
                let entry = col_entries.entry(col).or_default();
                for pair in fields[1..].chunks(2) {
                    let val: f64 = pair[1]
                        .parse()
                        .map_err(|_| MpsError::Syntax(n, format!("bad number {}", pair[1])))?;
                    entry.push((pair[0].to_string(), val));
                }
            }
            Section::Rhs => {
                if fields.len() != 3 && fields.len() != 5 {
                    return Err(MpsError::Syntax(n, "RHS entry needs 3 or 5 fields".into()));
                }
                for pair in fields[1..].chunks(2) {
                    let val: f64 = pair[1]
                        .parse()
                        .map_err(|_| MpsError::Syntax(n, format!("bad number {}", pair[1])))?;
                    rhs.insert(pair[0].to_string(), val);
                }
            }
            Section::Bounds => {
                if fields.len() < 3 {
                    return Err(MpsError::Syntax(n, "BOUNDS entry needs >= 3 fields".into()));
                }
                let val = if fields.len() >= 4 {
                    Some(fields[3].parse().map_err(|_| {
                        MpsError::Syntax(n, format!("bad number {}", fields[3]))
                    })?)
                } else {
                    None
                };
                bounds.push((fields[0].to_string(), fields[2].to_string(), val));
            }
            Section::None | Section::Done => {
                return Err(MpsError::Syntax(n, "data outside any section".into()));
            }
        }
    }
    if !saw_endata {
        return Err(MpsError::MissingSection("ENDATA"));
    }

    // Materialize columns in file order.
    for col in &col_order {
        let kind = col_kind[col];
        let (lb, ub) = match kind {
            VarKind::Binary => (0.0, 1.0),
            VarKind::Continuous => (0.0, f64::INFINITY),
        };
        let id = model.add_var(col.clone(), kind, lb, ub);
        col_ids.insert(col.clone(), id);
    }
    // Gather each row's coefficients in column-major file order, then emit
    // rows in declaration order.
    let mut row_coeffs: BTreeMap<&str, Vec<(super::VarId, f64)>> = BTreeMap::new();
    for col in &col_order {
        let id = col_ids[col];
        for (row, val) in &col_entries[col] {
            if row == "COST" {
                model.add_obj(id, *val);
            } else {
                if !row_sense.contains_key(row.as_str()) {
                    return Err(MpsError::UnknownName(row.clone()));
                }
                row_coeffs.entry(row).or_default().push((id, *val));
            }
        }
    }
    for name in &row_order {
        let sense = row_sense[name];
        model.add_row(
            // Markers do not survive the file format.
            "imported",
            row_coeffs.remove(name.as_str()).unwrap_or_default(),
            sense,
            rhs.get(name).copied().unwrap_or(0.0),
        );
    }
    if let Some(&off) = rhs.get("COST") {
        model.obj_offset = -off;
    }
    for (kind, name, val) in bounds {
        let &id = col_ids
            .get(&name)
            .ok_or_else(|| MpsError::UnknownName(name.clone()))?;
        let (lb, ub) = (model.var(id).lb, model.var(id).ub);
        let (nlb, nub) = match kind.as_str() {
            "FX" => {
                let v = val.ok_or_else(|| MpsError::UnknownName(name.clone()))?;
                (v, v)
            }
            "FR" => (f64::NEG_INFINITY, f64::INFINITY),
            "MI" => (f64::NEG_INFINITY, ub),
            "UP" => (lb, val.ok_or_else(|| MpsError::UnknownName(name.clone()))?),
            "LO" => (val.ok_or_else(|| MpsError::UnknownName(name.clone()))?, ub),
            "BV" => (0.0, 1.0),
            other => {
                return Err(MpsError::Syntax(0, format!("bound type {other}")));
            }
        };
        model.set_bounds(id, nlb, nub);
    }
    Ok(model)
}

/// Plain `name value` solution import. Accepts either the positional MPS
/// column names or the model's own variable names; anything absent stays 0.
pub fn import_solution(model: &MilpModel, text: &str) -> Result<Vec<f64>, MpsError> {
    let mut by_name: BTreeMap<&str, usize> = BTreeMap::new();
    for (i, v) in model.vars().iter().enumerate() {
        by_name.insert(v.name.as_str(), i);
    }
    let positional: BTreeMap<String, usize> =
        (0..model.n_vars()).map(|i| (col_name(i), i)).collect();
    let mut values = vec![0.0; model.n_vars()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let name = it
            .next()
            .ok_or_else(|| MpsError::Syntax(lineno + 1, "missing name".into()))?;
        let val: f64 = it
            .next()
            .ok_or_else(|| MpsError::Syntax(lineno + 1, "missing value".into()))?
            .parse()
            .map_err(|_| MpsError::Syntax(lineno + 1, "bad value".into()))?;
        let idx = by_name
            .get(name)
            .copied()
            .or_else(|| positional.get(name).copied())
            .ok_or_else(|| MpsError::UnknownName(name.to_string()))?;
        values[idx] = val;
    }
    Ok(values)
}
