use crate::args::{resolve, BifurcationArgs, FlowArgs, Format, Resolved, TableArgs, VerifyArgs};
use holoform::dynamics::{flow, radicand, FlowControls, Generator, ProductPoint, Trajectory};
use holoform::emom::{bifurcation, regular_compact_point, BifurcationConfig, EmomForm};
use holoform::io::{self, Cell, FlowSummary, Header};
use holoform::realstruct::{
    cell, check_descent, check_fixed_set, check_involution, check_linearity, check_real_symplectic, sample_regular_product, Column, FixedSetLabel,
    Point, RealStructureId,
};
use holoform::sample::Sampler;
use holoform::verify::{self, VerifyConfig};
use holoform::{Axis, C};
use serde::Serialize;
use std::path::Path;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILED: u8 = 1;
pub const EXIT_SINGULAR: u8 = 2;
pub const EXIT_STALL: u8 = 3;
pub const EXIT_USAGE: u8 = 64;

/// A command failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn usage(m: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: m.into() }
    }
    fn failed(m: impl Into<String>) -> Self {
        Self { code: EXIT_FAILED, message: m.into() }
    }
}

impl From<holoform::Error> for Failure {
    fn from(e: holoform::Error) -> Self {
        match e {
            holoform::Error::InvalidArgument(_) | holoform::Error::NotMember { .. } => Self::usage(e.to_string()),
            _ => Self::failed(e.to_string()),
        }
    }
}

type Outcome = Result<u8, Failure>;

/// Like `println!`, but a closed stdout (e.g. piped into `head`) is not an error.
macro_rules! say {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

fn setup(c: &crate::args::Common) -> Result<Resolved, Failure> {
    resolve(c).map_err(Failure::usage)
}

fn write_manifest(dir: &Path, header: &Header, command: &str, files: &[&str]) -> Result<(), Failure> {
    #[derive(Serialize)]
    struct Manifest<'a> {
        command: &'a str,
        files: &'a [&'a str],
    }
    io::write_json(&dir.join("manifest.json"), header, &Manifest { command, files })?;
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Outcome {
    let r = setup(&a.common)?;
    let mut only = a.only.clone();
    if only.is_empty() {
        if let Some(v) = r.file.0.get("only") {
            only = v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        }
    }
    let cfg = VerifyConfig { seed: r.seed, samples: r.samples, tolerances: r.tolerances.clone(), only };
    let report = verify::run(&cfg)?;
    let header = Header::new(r.seed);
    io::write_json(&r.out.join("verify_report.json"), &header, &report)?;
    if r.format == Format::Csv {
        let rows = report.results.iter().map(|e| {
            vec![
                Cell::S(e.group.into()),
                Cell::S(e.report.id.clone()),
                Cell::S(e.report.property.clone()),
                Cell::U(e.report.samples),
                Cell::F(e.report.max_residual),
                Cell::F(e.report.tolerance),
                Cell::S(e.report.pass.to_string()),
                Cell::S(e.tolerance_induced.to_string()),
            ]
        });
        let cols = ["group", "id", "property", "samples", "max_residual", "tolerance", "pass", "tolerance_induced"];
        io::write_file(&r.out.join("verify_report.csv"), &io::csv_string(&cols, rows))?;
        write_manifest(&r.out, &header, "verify", &["verify_report.json", "verify_report.csv"])?;
    }
    for e in report.failed() {
        let flag = if e.tolerance_induced { " [tolerance-induced]" } else { "" };
        eprintln!(
            "FAIL {} {} ({}): residual {:e} > tolerance {:e}{flag}{}",
            e.group,
            e.report.id,
            e.report.property,
            e.report.max_residual,
            e.report.tolerance,
            e.report.detail.as_deref().map(|d| format!(": {d}")).unwrap_or_default()
        );
    }
    say!(
        "verify: {} checks in {} groups, {} failed ({} tolerance-induced); report in {}",
        report.checks,
        report.groups.len(),
        report.failures,
        report.tolerance_induced,
        r.out.join("verify_report.json").display()
    );
    Ok(if report.pass { EXIT_OK } else { EXIT_FAILED })
}

fn parse_start(spec: &str, seed: u64) -> Result<ProductPoint, Failure> {
    let re = |v: f64| C::new(v, 0.0);
    let mut s = Sampler::new(seed);
    Ok(match spec {
        "rest-top" => ProductPoint::new([re(0.0), re(0.0), re(1.0), re(0.0), re(0.0), re(-1.0)])?,
        "rest-bottom" => ProductPoint::new([re(0.0), re(0.0), re(-1.0), re(0.0), re(0.0), re(1.0)])?,
        "s2xs2" => regular_compact_point(&mut s),
        "conj-diagonal" => loop {
            let Point::Product(pt) = FixedSetLabel::ConjugateDiagonal.sample(&mut s) else { unreachable!() };
            if radicand(&pt.x).norm() > 0.1 {
                break pt;
            }
        },
        "generic" => sample_regular_product(&mut s, 1.0),
        raw => {
            let parts: Vec<&str> = raw.split(',').map(str::trim).collect();
            if parts.len() != 6 {
                return Err(Failure::usage(format!(
                    "start {raw:?}: expected rest-top, rest-bottom, s2xs2, conj-diagonal, generic or six comma-separated complex coordinates"
                )));
            }
            let mut x = [C::new(0.0, 0.0); 6];
            for (k, p) in parts.iter().enumerate() {
                x[k] = p.parse().map_err(|_| Failure::usage(format!("start coordinate {p:?} is not a complex number")))?;
            }
            ProductPoint::new(x)?
        }
    })
}

pub fn flow_cmd(a: &FlowArgs) -> Outcome {
    let r = setup(&a.common)?;
    let start_spec = a.start.clone().or_else(|| r.file.0.get("start").cloned()).unwrap_or_else(|| "rest-top".into());
    let gen_name = a.hamiltonian.clone().or_else(|| r.file.0.get("hamiltonian").cloned()).unwrap_or_else(|| "H".into());
    let t_final = match a.t_final {
        Some(t) => t,
        None => r.file.get("t-final").map_err(Failure::usage)?.unwrap_or(10.0),
    };
    if !(t_final >= 0.0) || !t_final.is_finite() {
        return Err(Failure::usage(format!("--t-final must be finite and non-negative, got {t_final}")));
    }
    let generator = Generator::parse(&gen_name)?;
    let start = parse_start(&start_spec, r.seed)?;
    let (traj, error): (Trajectory, Option<String>) = match flow(&start, &generator, t_final, &FlowControls::default()) {
        Ok(t) => (t, None),
        Err(e) => {
            let msg = e.to_string();
            (e.partial, Some(msg))
        }
    };
    let summary = FlowSummary {
        start: &start_spec,
        hamiltonian: generator.name(),
        t_final,
        t_reached: traj.times.last().copied().unwrap_or(0.0),
        samples: traj.len(),
        controls: FlowControls::default(),
        drift: traj.relative_drift(),
        casimir_residual: traj.casimir_residual(),
        max_imaginary: traj.max_imaginary(),
        endpoint_distance: traj.last().map(|p| p.distance(&start)).unwrap_or(0.0),
        error: error.clone(),
    };
    let header = Header::new(r.seed);
    io::write_trajectory(&r.out, &header, &traj, &summary, r.format == Format::Csv)?;
    say!(
        "flow {} from {}: t = {} of {}, {} samples",
        generator.name(),
        start_spec,
        summary.t_reached,
        t_final,
        summary.samples
    );
    say!(
        "drift H {:.3e}  J {:.3e}  casimirs {:.3e} {:.3e}; max imaginary {:.3e}; endpoint distance {:.3e}",
        summary.drift[0], summary.drift[1], summary.drift[2], summary.drift[3], summary.max_imaginary, summary.endpoint_distance
    );
    match error {
        Some(e) => {
            eprintln!("flow stopped: {e}; partial trajectory written");
            Ok(EXIT_SINGULAR)
        }
        None => Ok(EXIT_OK),
    }
}

pub fn bifurcation_cmd(a: &BifurcationArgs) -> Outcome {
    let r = setup(&a.common)?;
    let form_name = a.form.clone().or_else(|| r.file.0.get("form").cloned()).ok_or_else(|| Failure::usage("--form is required (tstar-s2 or s2xs2)"))?;
    let form = EmomForm::parse(&form_name)?;
    let mut cfg = BifurcationConfig::default();
    if let Some(n) = r.samples {
        cfg.image_samples = n;
    }
    if let Some(n) = a.starts.or(r.file.get("starts").map_err(Failure::usage)?) {
        cfg.starts = n;
    }
    if cfg.image_samples == 0 || cfg.starts == 0 {
        return Err(Failure::usage("sample and start counts must be positive"));
    }
    let header = Header::new(r.seed);
    let csv = r.format == Format::Csv;
    let (data, code, error) = match bifurcation(form, &cfg) {
        Ok(d) => (d, EXIT_OK, None),
        Err(e) => {
            let msg = e.error.to_string();
            (e.partial, EXIT_STALL, Some(msg))
        }
    };
    io::write_bifurcation(&r.out, &header, &data, error.clone(), csv)?;
    say!("bifurcation {}: {} rank-0 points, {} boundary curves, {} image samples", form.name(), data.rank0.len(), data.boundary.len(), data.image.len());
    for p in &data.rank0 {
        say!("  rank 0 at (J, H) = ({:+.9}, {:+.9})", p.j, p.h);
    }
    if let Some(w) = &data.warning {
        eprintln!("warning: {w}");
    }
    if let Some(e) = error {
        eprintln!("boundary tracing stopped: {e}; partial curves written");
    }
    Ok(code)
}

#[derive(Serialize)]
struct TableRow {
    column: Column,
    row: &'static str,
    phase_map: &'static str,
    printed_phase_map: &'static str,
    reduced_map: &'static str,
    fixed_set: Option<&'static str>,
    claimed: holoform::realstruct::Classification,
    found: holoform::realstruct::Classification,
    involution: f64,
    linearity: f64,
    descent: f64,
    classification_residual: f64,
    fixed_set_residual: Option<f64>,
    pass: bool,
    note: Option<&'static str>,
}

fn table_rows(seed: u64, samples: usize) -> Result<Vec<TableRow>, Failure> {
    let mut rows = Vec::new();
    for axis in Axis::ALL {
        for column in Column::ALL {
            let info = cell(column, axis);
            let id = RealStructureId::Phase { column, axis };
            let inv = check_involution(id, samples, seed, 1e-14);
            let lin = check_linearity(id, samples, seed, 1e-10);
            let desc = check_descent(column, axis, samples, seed, 1e-12);
            let cls = check_real_symplectic(id, samples, seed);
            let fixed = match info.fixed_set {
                Some(label) => Some(check_fixed_set(label, samples, seed, 1e-10)?),
                None => None,
            };
            let pass = inv.pass && lin.pass && desc.pass && cls.report.pass && fixed.as_ref().map_or(true, |f| f.pass);
            rows.push(TableRow {
                column,
                row: info.row,
                phase_map: info.phase_map,
                printed_phase_map: info.printed_phase_map,
                reduced_map: info.reduced_map,
                fixed_set: info.fixed_set.map(|l| l.symbol()),
                claimed: info.claimed,
                found: cls.classification,
                involution: inv.max_residual,
                linearity: lin.max_residual,
                descent: desc.max_residual,
                classification_residual: cls.report.max_residual,
                fixed_set_residual: fixed.map(|f| f.max_residual),
                pass,
                note: info.note,
            });
        }
    }
    Ok(rows)
}

fn class_name(c: holoform::realstruct::Classification) -> String {
    serde_json::to_value(c).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

pub fn table(a: &TableArgs) -> Outcome {
    let r = setup(&a.common)?;
    let rows = table_rows(r.seed, r.samples.unwrap_or(100))?;
    let header = Header::new(r.seed);
    if r.format == Format::Csv {
        let cols = [
            "column", "row", "phase_map", "printed_phase_map", "reduced_map", "fixed_set", "claimed", "found", "involution", "linearity", "descent",
            "classification_residual", "fixed_set_residual", "pass", "note",
        ];
        let cells = rows.iter().map(|t| {
            vec![
                Cell::S(t.column.to_string()),
                Cell::S(t.row.into()),
                Cell::S(t.phase_map.into()),
                Cell::S(t.printed_phase_map.into()),
                Cell::S(t.reduced_map.into()),
                Cell::S(t.fixed_set.unwrap_or("").into()),
                Cell::S(class_name(t.claimed)),
                Cell::S(class_name(t.found)),
                Cell::F(t.involution),
                Cell::F(t.linearity),
                Cell::F(t.descent),
                Cell::F(t.classification_residual),
                t.fixed_set_residual.map_or(Cell::S(String::new()), Cell::F),
                Cell::S(t.pass.to_string()),
                Cell::S(t.note.unwrap_or("").into()),
            ]
        });
        io::write_file(&r.out.join("table.csv"), &io::csv_string(&cols, cells))?;
        write_manifest(&r.out, &header, "table", &["table.csv"])?;
    } else {
        #[derive(Serialize)]
        struct Body<'a> {
            cells: &'a [TableRow],
        }
        io::write_json(&r.out.join("table.json"), &header, &Body { cells: &rows })?;
    }
    for t in &rows {
        say!(
            "{:<3}{:<7} {:<22} {:<12} {:<8} {}",
            t.column.to_string(),
            t.row,
            t.phase_map,
            t.fixed_set.unwrap_or("·"),
            if t.pass { "ok" } else { "FAIL" },
            class_name(t.found)
        );
    }
    Ok(EXIT_OK)
}
