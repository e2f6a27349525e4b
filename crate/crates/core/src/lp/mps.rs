//! Free-format MPS export and import.
//!
//! Ids are mangled bijectively so any identifier survives the trip: bytes
//! outside `[A-Za-z0-9_.-]` are written as `%XX` (uppercase hex), and `%`
//! itself is escaped the same way. Every variable gets an explicit objective
//! entry (even zero) so columns that touch no row still round-trip. Ranged
//! rows and integer markers are rejected on import; the exporter never
//! produces them.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::{LinearProgram, Sense};

const OBJ_ROW: &str = "OBJ";

#[derive(Debug, Error)]
pub enum MpsError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
}

fn mangle(id: &str) -> String {
    let mut out = String::with_capacity(id.len());
    for &b in id.as_bytes() {
        match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'_' | b'.' | b'-' => out.push(b as char),
            _ => {
                let _ = write!(out, "%{b:02X}");
            }
        }
    }
    out
}

fn demangle(name: &str) -> Option<String> {
    let bytes = name.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if i + 2 >= bytes.len() + 1 {
                return None;
            }
            let hex = name.get(i + 1..i + 3)?;
            out.push(u8::from_str_radix(hex, 16).ok()?);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).ok()
}

pub(super) fn export_mps(lp: &LinearProgram, path: &Path) -> io::Result<()> {
    let mut buf = String::new();
    let name = if lp.name.is_empty() { "LP" } else { &lp.name };
    let _ = writeln!(buf, "NAME {}", mangle(name));
    let _ = writeln!(buf, "ROWS");
    let _ = writeln!(buf, " N {OBJ_ROW}");
    for row in lp.rows() {
        let tag = match row.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(buf, " {tag} {}", mangle(&row.id));
    }

    // Column-major entries; prebuild per-column row lists in row order.
    let mut entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_vars()];
    for (i, row) in lp.rows().iter().enumerate() {
        for &(col, a) in &row.coeffs {
            entries[col].push((i, a));
        }
    }
    let _ = writeln!(buf, "COLUMNS");
    for (j, var) in lp.vars().iter().enumerate() {
        let col = mangle(&var.id);
        let _ = writeln!(buf, " {col} {OBJ_ROW} {}", var.obj);
        for &(i, a) in &entries[j] {
            let _ = writeln!(buf, " {col} {} {}", mangle(&lp.rows()[i].id), a);
        }
    }

    let _ = writeln!(buf, "RHS");
    if lp.obj_offset() != 0.0 {
        let _ = writeln!(buf, " RHS1 {OBJ_ROW} {}", -lp.obj_offset());
    }
    for row in lp.rows() {
        let _ = writeln!(buf, " RHS1 {} {}", mangle(&row.id), row.rhs);
    }
    let _ = writeln!(buf, "RANGES");
    let _ = writeln!(buf, "BOUNDS");
    for var in lp.vars() {
        let col = mangle(&var.id);
        if var.lower == var.upper {
            let _ = writeln!(buf, " FX BND {col} {}", var.lower);
            continue;
        }
        match (var.lower.is_finite(), var.upper.is_finite()) {
            (false, false) => {
                let _ = writeln!(buf, " FR BND {col}");
            }
            (true, true) => {
                if var.lower != 0.0 {
                    let _ = writeln!(buf, " LO BND {col} {}", var.lower);
                }
                let _ = writeln!(buf, " UP BND {col} {}", var.upper);
            }
            (true, false) => {
                if var.lower != 0.0 {
                    let _ = writeln!(buf, " LO BND {col} {}", var.lower);
                }
            }
            (false, true) => {
                let _ = writeln!(buf, " MI BND {col}");
                let _ = writeln!(buf, " UP BND {col} {}", var.upper);
            }
        }
    }
    let _ = writeln!(buf, "ENDATA");

    let mut file = fs::File::create(path)?;
    file.write_all(buf.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    Done,
}

/// Parses a free-format MPS file produced by [`LinearProgram::export_mps`]
/// (or any single-objective, continuous, unranged MPS).
pub fn import_mps(path: &Path) -> Result<LinearProgram, MpsError> {
    let text = fs::read_to_string(path).map_err(|source| MpsError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let err = |line: usize, message: String| MpsError::Parse {
        path: path.display().to_string(),
        line,
        message,
    };

    let mut lp = LinearProgram::new("");
    let mut section = Section::Preamble;
    let mut obj_row: Option<String> = None;
    // (id, sense, rhs, coeffs) accumulated until ENDATA, then materialized.
    let mut rows: Vec<(String, Sense, f64, Vec<(usize, f64)>)> = Vec::new();
    let mut row_lookup: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    let mut cols: Vec<(String, f64, f64, f64)> = Vec::new(); // id, obj, lower, upper
    let mut col_lookup: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    let mut obj_offset = 0.0f64;

    let parse_num = |tok: &str, line: usize| -> Result<f64, MpsError> {
        tok.parse::<f64>()
            .map_err(|_| err(line, format!("bad number {tok:?}")))
    };

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        let is_header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if is_header {
            section = match toks[0] {
                "NAME" => {
                    if let Some(tok) = toks.get(1) {
                        lp.name = demangle(tok)
                            .ok_or_else(|| err(line, format!("bad name {tok:?}")))?;
                    }
                    Section::Preamble
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::Done,
                other => return Err(err(line, format!("unknown section {other:?}"))),
            };
            continue;
        }
        match section {
            Section::Preamble => return Err(err(line, "data before ROWS section".into())),
            Section::Done => return Err(err(line, "data after ENDATA".into())),
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(err(line, "expected <sense> <row>".into()));
                }
                let id = demangle(toks[1])
                    .ok_or_else(|| err(line, format!("bad row name {:?}", toks[1])))?;
                match toks[0] {
                    "N" => {
                        if obj_row.is_some() {
                            return Err(err(line, "multiple objective rows".into()));
                        }
                        obj_row = Some(toks[1].to_string());
                    }
                    sense_tok => {
                        let sense = match sense_tok {
                            "L" => Sense::Le,
                            "G" => Sense::Ge,
                            "E" => Sense::Eq,
                            other => return Err(err(line, format!("bad row sense {other:?}"))),
                        };
                        row_lookup.insert(toks[1].to_string(), rows.len());
                        rows.push((id, sense, 0.0, Vec::new()));
                    }
                }
            }
            Section::Columns => {
                if toks.iter().any(|t| *t == "'MARKER'") {
                    return Err(err(line, "integer markers are not supported".into()));
                }
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(err(line, "expected <col> (<row> <val>)+".into()));
                }
                let col_idx = match col_lookup.get(toks[0]) {
                    Some(&i) => i,
                    None => {
                        let id = demangle(toks[0])
                            .ok_or_else(|| err(line, format!("bad column name {:?}", toks[0])))?;
                        col_lookup.insert(toks[0].to_string(), cols.len());
                        cols.push((id, 0.0, 0.0, f64::INFINITY));
                        cols.len() - 1
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let val = parse_num(pair[1], line)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        cols[col_idx].1 += val;
                    } else {
                        let &ri = row_lookup
                            .get(pair[0])
                            .ok_or_else(|| err(line, format!("unknown row {:?}", pair[0])))?;
                        rows[ri].3.push((col_idx, val));
                    }
                }
            }
            Section::Rhs => {
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(err(line, "expected <set> (<row> <val>)+".into()));
                }
                for pair in toks[1..].chunks(2) {
                    let val = parse_num(pair[1], line)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        obj_offset = -val;
                    } else {
                        let &ri = row_lookup
                            .get(pair[0])
                            .ok_or_else(|| err(line, format!("unknown row {:?}", pair[0])))?;
                        rows[ri].2 = val;
                    }
                }
            }
            Section::Ranges => {
                return Err(err(line, "ranged rows are not supported".into()));
            }
            Section::Bounds => {
                let kind = toks[0];
                let needs_val = !matches!(kind, "FR" | "MI" | "PL");
                let expected = if needs_val { 4 } else { 3 };
                if toks.len() != expected {
                    return Err(err(line, format!("malformed {kind} bound")));
                }
                let &ci = col_lookup
                    .get(toks[2])
                    .ok_or_else(|| err(line, format!("unknown column {:?}", toks[2])))?;
                match kind {
                    "UP" => cols[ci].3 = parse_num(toks[3], line)?,
                    "LO" => cols[ci].2 = parse_num(toks[3], line)?,
                    "FX" => {
                        let v = parse_num(toks[3], line)?;
                        cols[ci].2 = v;
                        cols[ci].3 = v;
                    }
                    "FR" => {
                        cols[ci].2 = f64::NEG_INFINITY;
                        cols[ci].3 = f64::INFINITY;
                    }
                    "MI" => cols[ci].2 = f64::NEG_INFINITY,
                    "PL" => cols[ci].3 = f64::INFINITY,
                    other => {
                        return Err(err(line, format!("unsupported bound type {other:?}")))
                    }
                }
            }
        }
    }
    if section != Section::Done {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }

    let mut var_refs = Vec::with_capacity(cols.len());
    for (id, obj, lower, upper) in cols {
        let var = lp
            .add_var(id, lower, upper, obj)
            .map_err(|e| err(0, e.to_string()))?;
        var_refs.push(var);
    }
    for (id, sense, rhs, coeffs) in rows {
        let terms: Vec<_> = coeffs.iter().map(|&(c, v)| (var_refs[c], v)).collect();
        lp.add_row(id, sense, rhs, &terms)
            .map_err(|e| err(0, e.to_string()))?;
    }
    lp.add_obj_offset(obj_offset);
    Ok(lp)
}
