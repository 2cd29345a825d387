//! CSV emission with a self-describing `#` header line.
//!
//! Floats are written with 17 significant digits so every double survives a
//! text round trip. A NaN or infinity anywhere refuses the whole table.

use std::fmt::Write as _;
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(&'static str),
    /// Value undefined for this row (e.g. a missing scan cell).
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

/// `(name, unit)` pairs.
pub type Columns = &'static [(&'static str, &'static str)];

pub const FIELDS_COLUMNS: Columns = &[
    ("x", "length"),
    ("t", "time"),
    ("re_psi", "length^-1/2"),
    ("im_psi", "length^-1/2"),
    ("rho", "length^-1"),
    ("p_bohm", "momentum"),
    ("p_osmotic", "momentum"),
    ("q_pot", "energy"),
    ("e_bohm", "energy"),
    ("hj_residual", "energy"),
];

pub const TRAJECTORY_COLUMNS: Columns = &[
    ("traj_id", "index"),
    ("t", "time"),
    ("x", "length"),
    ("status", "completed|aborted-at-node"),
];

pub const WEAK_SCAN_COLUMNS: Columns = &[
    ("plane_k", "index"),
    ("t", "time"),
    ("y", "length"),
    ("bin_j", "index"),
    ("x", "length"),
    ("w_true_re", "momentum"),
    ("w_true_im", "momentum"),
    ("p_right", "probability"),
    ("n_right", "count"),
    ("n_left", "count"),
    ("w_est", "momentum"),
    ("missing_flag", "0|1"),
];

pub const RECONSTRUCTED_COLUMNS: Columns = &[
    ("traj_id", "index"),
    ("plane_k", "index"),
    ("y", "length"),
    ("x", "length"),
    ("terminated_flag", "0|1"),
];

pub const COMPARE_COLUMNS: Columns = &[
    ("traj_id", "index"),
    ("rms", "length"),
    ("max_dev", "length"),
    ("planes_used", "count"),
];

pub const MODE_BEABLE_COLUMNS: Columns = &[
    ("t", "time"),
    ("re_q", "amplitude"),
    ("im_q", "amplitude"),
    ("abs_q", "amplitude"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct NonFiniteCell {
    pub row: usize,
    pub column: &'static str,
}

impl std::fmt::Display for NonFiniteCell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "non-finite value in row {} column `{}`", self.row, self.column)
    }
}

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders a table; rows must match the column count.
pub fn render_csv(file_name: &str, columns: Columns, rows: &[Vec<Cell>]) -> Result<String, NonFiniteCell> {
    let mut out = String::new();
    let units: Vec<String> = columns.iter().map(|(n, u)| format!("{n}[{u}]")).collect();
    let _ = writeln!(
        out,
        "# {file_name} schema_version={SCHEMA_VERSION} units: {}",
        units.join(" ")
    );
    let names: Vec<&str> = columns.iter().map(|(n, _)| *n).collect();
    let _ = writeln!(out, "{}", names.join(","));
    for (r, row) in rows.iter().enumerate() {
        assert_eq!(row.len(), columns.len(), "row {r} of {file_name} has wrong width");
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            match cell {
                Cell::Int(i) => {
                    let _ = write!(out, "{i}");
                }
                Cell::Float(v) => {
                    if !v.is_finite() {
                        return Err(NonFiniteCell {
                            row: r,
                            column: columns[c].0,
                        });
                    }
                    out.push_str(&format_float(*v));
                }
                Cell::Text(s) => out.push_str(s),
                Cell::Empty => {}
            }
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_file(path: &Path, contents: &str) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_rows() {
        let s = render_csv(
            "compare.csv",
            COMPARE_COLUMNS,
            &[vec![0usize.into(), 0.1.into(), 0.25.into(), 50usize.into()]],
        )
        .unwrap();
        let mut lines = s.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("# compare.csv schema_version=1 units: traj_id[index]"));
        assert_eq!(lines.next().unwrap(), "traj_id,rms,max_dev,planes_used");
        assert_eq!(
            lines.next().unwrap(),
            "0,1.0000000000000001e-1,2.5000000000000000e-1,50"
        );
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.718281828459045e-300, 6.02214076e23] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn nan_refused() {
        let err = render_csv(
            "mode_beable.csv",
            MODE_BEABLE_COLUMNS,
            &[vec![0.0.into(), f64::NAN.into(), 0.0.into(), 0.0.into()]],
        )
        .unwrap_err();
        assert_eq!(err, NonFiniteCell { row: 0, column: "re_q" });
    }
}
