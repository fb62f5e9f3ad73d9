//! File output: CSV with the column header in row 1 and 17 significant
//! digits, JSON with a provenance header block.

use crate::dynamics::{FlowControls, Trajectory};
use crate::emom::{BifurcationData, CurveKind};
use crate::error::{Error, Result};
use crate::orbit::{calibration, structure_constant, Calibration};
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Provenance written into every JSON file and next to every CSV set.
#[derive(Clone, Debug, Serialize)]
pub struct Header {
    pub program: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub calibration: Calibration,
    /// The affine law the calibration is compared against.
    pub claimed_calibration: [f64; 2],
    pub structure_constant: [f64; 2],
}

impl Header {
    pub fn new(seed: u64) -> Self {
        let c = structure_constant();
        Self {
            program: "holoform",
            version: VERSION,
            seed,
            calibration: *calibration(),
            claimed_calibration: [1.0, 0.0],
            structure_constant: [c.re, c.im],
        }
    }
}

/// Shortest round-trip is not enough for byte-stable diffs across tools;
/// always 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

pub enum Cell {
    F(f64),
    U(usize),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::U(n) => n.to_string(),
            Cell::S(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::S(s) => s.clone(),
        }
    }
}

pub fn csv_string(columns: &[&str], rows: impl IntoIterator<Item = Vec<Cell>>) -> String {
    let mut out = columns.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(Cell::render).collect();
        let _ = writeln!(out, "{}", line.join(","));
    }
    out
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::Output(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::Output(format!("{}: {e}", path.display())))
}

/// serde_json keeps struct field order, so output key order is stable.
pub fn json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[derive(Serialize)]
struct WithHeader<'a, T: Serialize> {
    header: &'a Header,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, header: &Header, body: &T) -> Result<()> {
    write(path, &json_string(&WithHeader { header, body })?)
}

pub const TRAJECTORY_COLUMNS: [&str; 19] = [
    "t", "x1_re", "x1_im", "y1_re", "y1_im", "z1_re", "z1_im", "x2_re", "x2_im", "y2_re", "y2_im", "z2_re", "z2_im", "H_re", "H_im", "J_re", "J_im",
    "casimir1", "casimir2",
];

/// One row per sample; the Casimir columns are |x·x − 1| per factor.
pub fn trajectory_csv(tr: &Trajectory) -> String {
    let rows = tr.times.iter().zip(&tr.states).zip(&tr.drift).map(|((t, st), d)| {
        let mut row = vec![Cell::F(*t)];
        for z in st.x {
            row.push(Cell::F(z.re));
            row.push(Cell::F(z.im));
        }
        for z in [d.h, d.j] {
            row.push(Cell::F(z.re));
            row.push(Cell::F(z.im));
        }
        for c in d.casimirs {
            row.push(Cell::F((c - 1.0).norm()));
        }
        row
    });
    csv_string(&TRAJECTORY_COLUMNS, rows)
}

#[derive(Serialize)]
pub struct FlowSummary<'a> {
    pub start: &'a str,
    pub hamiltonian: &'a str,
    pub t_final: f64,
    pub t_reached: f64,
    pub samples: usize,
    pub controls: FlowControls,
    /// Relative drift of H, J and the two Casimirs.
    pub drift: [f64; 4],
    pub casimir_residual: f64,
    pub max_imaginary: f64,
    pub endpoint_distance: f64,
    pub error: Option<String>,
}

pub fn write_trajectory(dir: &Path, header: &Header, tr: &Trajectory, summary: &FlowSummary, csv: bool) -> Result<()> {
    if csv {
        write(&dir.join("trajectory.csv"), &trajectory_csv(tr))?;
        write_json(&dir.join("summary.json"), header, summary)
    } else {
        #[derive(Serialize)]
        struct Body<'a> {
            summary: &'a FlowSummary<'a>,
            trajectory: &'a Trajectory,
        }
        write_json(&dir.join("trajectory.json"), header, &Body { summary, trajectory: tr })
    }
}

pub const RANK0_COLUMNS: [&str; 9] = ["J", "H", "rank", "w0", "w1", "w2", "w3", "w4", "w5"];
pub const BOUNDARY_COLUMNS: [&str; 5] = ["curve", "kind", "index", "J", "H"];
pub const IMAGE_COLUMNS: [&str; 2] = ["J", "H"];

pub fn rank0_csv(d: &BifurcationData) -> String {
    let rows = d.rank0.iter().map(|p| {
        let mut row = vec![Cell::F(p.j), Cell::F(p.h), Cell::U(p.rank)];
        row.extend(p.location.iter().map(|v| Cell::F(*v)));
        row
    });
    csv_string(&RANK0_COLUMNS, rows)
}

fn kind_name(k: CurveKind) -> &'static str {
    match k {
        CurveKind::RankOne => "rank-one",
        CurveKind::SingularLimit => "singular-limit",
    }
}

pub fn boundary_csv(d: &BifurcationData) -> String {
    let rows = d.boundary.iter().enumerate().flat_map(|(c, cv)| {
        cv.points
            .iter()
            .enumerate()
            .map(move |(i, p)| vec![Cell::U(c), Cell::S(kind_name(cv.kind).into()), Cell::U(i), Cell::F(p[0]), Cell::F(p[1])])
    });
    csv_string(&BOUNDARY_COLUMNS, rows)
}

pub fn image_csv(d: &BifurcationData) -> String {
    csv_string(&IMAGE_COLUMNS, d.image.iter().map(|p| vec![Cell::F(p[0]), Cell::F(p[1])]))
}

#[derive(Serialize)]
pub struct BifurcationSummary {
    pub form: &'static str,
    pub rank0: usize,
    pub curves: usize,
    pub image_samples: usize,
    pub starts: usize,
    pub warning: Option<String>,
    pub error: Option<String>,
    pub files: Vec<&'static str>,
}

pub fn write_bifurcation(dir: &Path, header: &Header, d: &BifurcationData, error: Option<String>, csv: bool) -> Result<()> {
    let files = if csv { vec!["rank0.csv", "boundary.csv", "image.csv"] } else { vec!["bifurcation.json"] };
    let summary = BifurcationSummary {
        form: d.form.name(),
        rank0: d.rank0.len(),
        curves: d.boundary.len(),
        image_samples: d.image.len(),
        starts: d.starts,
        warning: d.warning.clone(),
        error,
        files,
    };
    if csv {
        write(&dir.join("rank0.csv"), &rank0_csv(d))?;
        write(&dir.join("boundary.csv"), &boundary_csv(d))?;
        write(&dir.join("image.csv"), &image_csv(d))?;
    } else {
        write_json(&dir.join("bifurcation.json"), header, d)?;
    }
    write_json(&dir.join("summary.json"), header, &summary)
}

/// Plain file write used for reports that carry their own structure.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    write(path, contents)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(-0.1), "-1.0000000000000001e-1");
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn header_row_first() {
        let s = csv_string(&["a", "b"], vec![vec![Cell::F(0.5), Cell::U(3)]]);
        assert_eq!(s, "a,b\n5.0000000000000000e-1,3\n");
    }

    #[test]
    fn strings_with_commas_are_quoted() {
        let s = csv_string(&["m"], vec![vec![Cell::S("(q, \"p\")".into())]]);
        assert_eq!(s, "m\n\"(q, \"\"p\"\")\"\n");
    }

    #[test]
    fn header_carries_calibration() {
        let h = Header::new(7);
        let v: serde_json::Value = serde_json::from_str(&json_string(&h).unwrap()).unwrap();
        assert_eq!(v["seed"], 7);
        assert!((v["calibration"]["slope"].as_f64().unwrap() - 2.0).abs() < 1e-9);
        assert_eq!(v["structure_constant"][0].as_f64().unwrap(), -2.0);
    }
}
