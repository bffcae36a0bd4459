//! Field files.
//!
//! CSV: a header `# d=<d> m=<m> side=<side> kind=<kind> time=<s>`, then
//! rows of `m` values along axis 0, rows ordered by the remaining axes with
//! axis 1 fastest. Values are printed in the shortest form that parses back
//! to the same `f64`. PGM: plain P2 with one row per CSV row, values mapped
//! linearly from `[min, max]` onto `0..=255`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HjdError, Result};
use crate::grid::{ScalarField, TorusGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Csv,
    Pgm,
}

/// What a stored field represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    Rho,
    Phi,
    /// Forward difference of a potential along one axis.
    Gradient(usize),
}

impl Quantity {
    fn label(&self) -> String {
        match self {
            Quantity::Rho => "rho".into(),
            Quantity::Phi => "phi".into(),
            Quantity::Gradient(a) => format!("grad{a}"),
        }
    }

    fn from_label(s: &str) -> Option<Self> {
        match s {
            "rho" => Some(Quantity::Rho),
            "phi" => Some(Quantity::Phi),
            _ => s.strip_prefix("grad")?.parse().ok().map(Quantity::Gradient),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldMeta {
    pub quantity: Quantity,
    pub time: f64,
}

fn fmt_value(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| HjdError::io(path, e))
}

pub fn write_field(field: &ScalarField, path: &Path, format: FieldFormat, meta: FieldMeta) -> Result<()> {
    match format {
        FieldFormat::Csv => write_bytes(path, to_csv(field, meta).as_bytes()),
        FieldFormat::Pgm => write_bytes(path, to_pgm(field).as_bytes()),
    }
}

pub fn to_csv(field: &ScalarField, meta: FieldMeta) -> String {
    let g = field.grid();
    let mut out = format!(
        "# d={} m={} side={} kind={} time={}\n",
        g.dim(),
        g.m_per_axis(),
        g.side(),
        meta.quantity.label(),
        meta.time
    );
    for row in field.values().chunks(g.m_per_axis()) {
        let line: Vec<String> = row.iter().map(|&x| fmt_value(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

pub fn to_pgm(field: &ScalarField) -> String {
    let g = field.grid();
    let m = g.m_per_axis();
    let (lo, hi) = (field.min(), field.max());
    let mut out = String::new();
    let _ = writeln!(out, "P2");
    let _ = writeln!(out, "# min={lo} max={hi}");
    let _ = writeln!(out, "{} {}", m, g.n_vertices() / m);
    let _ = writeln!(out, "255");
    for row in field.values().chunks(m) {
        let line: Vec<String> = row
            .iter()
            .map(|&x| {
                let level = if hi > lo { ((x - lo) / (hi - lo) * 255.0).round() } else { 0.0 };
                (level as u8).to_string()
            })
            .collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_field(path: &Path) -> Result<(ScalarField, FieldMeta)> {
    let text = std::fs::read_to_string(path).map_err(|e| HjdError::io(path, e))?;
    parse_csv(&text).map_err(|msg| HjdError::FieldFormat {
        path: path.to_path_buf(),
        msg,
    })
}

pub fn parse_csv(text: &str) -> std::result::Result<(ScalarField, FieldMeta), String> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .and_then(|l| l.strip_prefix('#'))
        .ok_or("missing `#` header line")?;
    let mut d = None;
    let mut m = None;
    let mut side = None;
    let mut quantity = None;
    let mut time = None;
    for tok in header.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| format!("bad header token `{tok}`"))?;
        let bad = |e: &dyn std::fmt::Display| format!("header `{k}`: {e}");
        match k {
            "d" => d = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
            "m" => m = Some(v.parse::<usize>().map_err(|e| bad(&e))?),
            "side" => side = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
            "kind" => quantity = Some(Quantity::from_label(v).ok_or_else(|| bad(&"unknown kind"))?),
            "time" => time = Some(v.parse::<f64>().map_err(|e| bad(&e))?),
            _ => return Err(format!("unknown header key `{k}`")),
        }
    }
    let missing = |k: &str| format!("header lacks `{k}`");
    let grid = TorusGrid::new(d.ok_or_else(|| missing("d"))?, m.ok_or_else(|| missing("m"))?, side.ok_or_else(|| missing("side"))?)
        .map_err(|e| e.to_string())?;
    let meta = FieldMeta {
        quantity: quantity.ok_or_else(|| missing("kind"))?,
        time: time.ok_or_else(|| missing("time"))?,
    };
    let m = grid.m_per_axis();
    let mut values = Vec::with_capacity(grid.n_vertices());
    for (r, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let before = values.len();
        for tok in line.split(',') {
            let tok = tok.trim();
            values.push(tok.parse::<f64>().map_err(|e| format!("row {r}: `{tok}`: {e}"))?);
        }
        if values.len() - before != m {
            return Err(format!("row {r} has {} values, expected {m}", values.len() - before));
        }
    }
    if values.len() != grid.n_vertices() {
        return Err(format!("expected {} values, found {}", grid.n_vertices(), values.len()));
    }
    let field = ScalarField::new(grid, values).map_err(|e| e.to_string())?;
    Ok((field, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const RHO0: FieldMeta = FieldMeta {
        quantity: Quantity::Rho,
        time: 0.0,
    };

    #[test]
    fn two_by_two_body() {
        let g = TorusGrid::new(2, 2, 1.0).unwrap();
        let f = ScalarField::new(g, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let csv = to_csv(&f, RHO0);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines, vec!["# d=2 m=2 side=1 kind=rho time=0", "0,1", "2,3"]);
    }

    #[test]
    fn constant_field_pgm_is_flat() {
        let g = TorusGrid::new(2, 3, 1.0).unwrap();
        let pgm = to_pgm(&ScalarField::constant(g, 0.25));
        let lines: Vec<&str> = pgm.lines().collect();
        assert_eq!(lines[..4], ["P2", "# min=0.25 max=0.25", "3 3", "255"]);
        assert!(lines[4..].iter().all(|l| *l == "0 0 0"));
    }

    #[test]
    fn pgm_spans_full_range() {
        let g = TorusGrid::new(1, 3, 1.0).unwrap();
        let pgm = to_pgm(&ScalarField::new(g, vec![-1.0, 0.0, 1.0]).unwrap());
        assert_eq!(pgm.lines().last(), Some("0 128 255"));
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(parse_csv("0,1\n2,3\n").is_err());
        assert!(parse_csv("# d=2 m=2 side=1 kind=rho time=0\n0,1\n2\n").is_err());
        assert!(parse_csv("# d=2 m=2 side=1 kind=mass time=0\n0,1\n2,3\n").is_err());
        assert!(parse_csv("# d=2 m=2 side=1 kind=rho\n0,1\n2,3\n").is_err());
        assert!(parse_csv("# d=2 m=2 side=1 kind=rho time=0\n0,1\n").is_err());
    }

    #[test]
    fn gradient_label_round_trips() {
        let g = TorusGrid::new(1, 2, 1.0).unwrap();
        let meta = FieldMeta {
            quantity: Quantity::Gradient(1),
            time: 1.0,
        };
        let (_, back) = parse_csv(&to_csv(&ScalarField::zeros(g), meta)).unwrap();
        assert_eq!(back, meta);
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join(format!("hjd-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("f.csv");
        let g = TorusGrid::new(2, 4, 8.0).unwrap();
        let f = ScalarField::from_fn(g, |x| (x[0] * 1.3).sin() * 1e-7 + x[1]);
        write_field(&f, &path, FieldFormat::Csv, RHO0).unwrap();
        let (back, meta) = read_field(&path).unwrap();
        assert_eq!(back, f);
        assert_eq!(meta, RHO0);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(
            values in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO, 9),
            time in 0.0f64..10.0,
        ) {
            let g = TorusGrid::new(2, 3, 2.5).unwrap();
            let f = ScalarField::new(g, values).unwrap();
            let meta = FieldMeta { quantity: Quantity::Phi, time };
            let (back, back_meta) = parse_csv(&to_csv(&f, meta)).unwrap();
            for (a, b) in back.values().iter().zip(f.values()) {
                prop_assert_eq!(a.to_bits(), b.to_bits());
            }
            prop_assert_eq!(back_meta, meta);
        }
    }
}
