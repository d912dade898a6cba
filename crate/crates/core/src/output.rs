//! CSV files for run results and comparisons.
//!
//! Every file starts with a block of `# key: value` metadata lines followed
//! by one header line. Schemas:
//!
//! | file                      | columns                                            |
//! |---------------------------|----------------------------------------------------|
//! | `<run>_trace.csv`         | `time,position,exact_position,error,relative_error` |
//! | `<run>_field.csv`         | `x,theta` (1D) or `x,y,theta` (2D)                 |
//! | `<run>_profiles.csv`      | `time,s,theta` (`s` is `x` in 1D, diagonal arclength in 2D) |
//! | `<run>_isolines.csv`      | `level,polyline_id,x,y`                            |
//! | `<run>_summary.csv`       | `key,value`                                        |
//! | comparison                | `time`, `<label>_position`..., `<label>_error`..., `exact_position` |
//! | timing table              | `method,n,steps,seconds,seconds_per_step`          |
//!
//! `<run>` is `<method>_n<N>`.

use std::fs;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::diagnostics::InterfaceTrace;
use crate::runner::{BenchRow, RunReport};

#[derive(Debug, Error)]
pub enum CompareError {
    #[error("no traces to compare")]
    Empty,
    #[error("trace `{0}` has no samples")]
    EmptyTrace(String),
    #[error("reading trace `{label}`: {message}")]
    Read { label: String, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn metadata(report: &RunReport) -> Vec<(String, String)> {
    let s = &report.spec;
    let mut m = vec![
        ("case_hash".to_string(), format!("{:016x}", s.hash())),
        ("method".into(), report.method.to_string()),
        ("lattice".into(), s.case.lattice.to_string()),
        ("n".into(), s.case.n.to_string()),
        ("dx".into(), format!("{:e}", report.grid.dx)),
        ("dt".into(), format!("{:e}", report.dt)),
        ("tau".into(), report.tau.to_string()),
        ("ste".into(), s.case.ste.to_string()),
        ("t_start".into(), format!("{:e}", report.t_start)),
        ("t_end".into(), format!("{:e}", report.t_final)),
        ("steps".into(), report.steps.to_string()),
    ];
    if report.method == crate::schemes::Method::Irebm {
        m.push(("delta".into(), s.scheme.delta.to_string()));
    }
    m
}

fn write_metadata(w: &mut impl Write, meta: &[(String, String)]) -> io::Result<()> {
    for (k, v) in meta {
        writeln!(w, "# {k}: {v}")?;
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> io::Error {
    io::Error::other(e)
}

fn write_csv<R>(path: &Path, meta: &[(String, String)], header: &[&str], rows: R) -> io::Result<()>
where
    R: IntoIterator<Item = Vec<String>>,
{
    let mut file = io::BufWriter::new(fs::File::create(path)?);
    write_metadata(&mut file, meta)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()
}

fn num(v: f64) -> String {
    format!("{v:e}")
}

pub fn run_label(report: &RunReport) -> String {
    format!("{}_n{}", report.method, report.spec.case.n)
}

/// Writes the outputs selected in the case; returns the paths written.
pub fn write_report(report: &RunReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let label = run_label(report);
    let meta = metadata(report);
    let out = &report.spec.output;
    let mut written = Vec::new();

    if let Some(tr) = &report.trace {
        let path = dir.join(format!("{label}_trace.csv"));
        write_trace(&path, &meta, tr)?;
        written.push(path);
    }
    if out.profile {
        let path = dir.join(format!("{label}_field.csv"));
        let g = report.grid;
        if g.ny == 1 {
            let rows = report
                .theta
                .iter()
                .enumerate()
                .map(|(j, &t)| vec![num(j as f64 * g.dx), num(t)]);
            write_csv(&path, &meta, &["x", "theta"], rows)?;
        } else {
            let rows = report.theta.iter().enumerate().map(|(n, &t)| {
                let p = g.position(n);
                vec![num(p[0]), num(p[1]), num(t)]
            });
            write_csv(&path, &meta, &["x", "y", "theta"], rows)?;
        }
        written.push(path);
    }
    if !report.profiles.is_empty() {
        let path = dir.join(format!("{label}_profiles.csv"));
        let rows = report.profiles.iter().flat_map(|p| {
            p.coordinate
                .iter()
                .zip(&p.theta)
                .map(move |(&s, &t)| vec![num(p.time), num(s), num(t)])
        });
        write_csv(&path, &meta, &["time", "s", "theta"], rows)?;
        written.push(path);
    }
    if let Some(set) = &report.isolines {
        let path = dir.join(format!("{label}_isolines.csv"));
        let rows = set.isolines.iter().flat_map(|line| {
            line.polylines
                .iter()
                .enumerate()
                .flat_map(move |(id, poly)| {
                    poly.iter()
                        .map(move |v| vec![num(line.level), id.to_string(), num(v[0]), num(v[1])])
                })
        });
        write_csv(&path, &meta, &["level", "polyline_id", "x", "y"], rows)?;
        written.push(path);
    }

    let path = dir.join(format!("{label}_summary.csv"));
    write_csv(&path, &meta, &["key", "value"], summary_rows(report))?;
    written.push(path);
    Ok(written)
}

fn summary_rows(r: &RunReport) -> Vec<Vec<String>> {
    let mut rows = vec![
        ("wall_seconds", num(r.wall_seconds)),
        ("steps", r.steps.to_string()),
        ("newton_mean_iterations", num(r.newton.mean_iterations)),
        ("newton_max_iterations", r.newton.max_iterations.to_string()),
        ("newton_bisections", r.newton.bisections.to_string()),
        ("inner_mean_iterations", num(r.inner.mean_iterations)),
        ("inner_max_iterations", r.inner.max_iterations.to_string()),
        ("max_residual", num(r.max_residual)),
        ("max_dirichlet_deviation", num(r.max_dirichlet_deviation)),
        ("max_neumann_deviation", num(r.max_neumann_deviation)),
        ("enthalpy_start", num(r.enthalpy_start)),
        ("enthalpy_end", num(r.enthalpy_end)),
    ];
    if let Some(e) = r.linf_error {
        rows.push(("linf_error", num(e)));
    }
    if let Some(tr) = &r.trace {
        rows.push(("interface_max_error", num(tr.max_error())));
        rows.push(("interface_mean_error", num(tr.mean_error())));
    }
    rows.into_iter()
        .map(|(k, v)| vec![k.to_string(), v])
        .collect()
}

pub fn write_trace(path: &Path, meta: &[(String, String)], tr: &InterfaceTrace) -> io::Result<()> {
    let rows = (0..tr.len()).map(|k| {
        vec![
            num(tr.times[k]),
            num(tr.positions[k]),
            num(tr.exact_positions[k]),
            num(tr.errors[k]),
            num(tr.errors[k] / tr.exact_positions[k]),
        ]
    });
    write_csv(
        path,
        meta,
        &[
            "time",
            "position",
            "exact_position",
            "error",
            "relative_error",
        ],
        rows,
    )
}

/// Reads a trace CSV; returns the `method` metadata value (if any) and the
/// samples.
pub fn read_trace(
    reader: impl Read,
    label: &str,
) -> Result<(Option<String>, InterfaceTrace), CompareError> {
    let bad = |message: String| CompareError::Read {
        label: label.to_string(),
        message,
    };
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let method = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.strip_prefix("# method:").map(|v| v.trim().to_string()));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column `{name}`")))
    };
    let (ct, cp, ce) = (col("time")?, col("position")?, col("exact_position")?);
    let mut trace = InterfaceTrace::new();
    for record in rdr.records() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let field = |i: usize| -> Result<f64, CompareError> {
            record
                .get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("bad number in row {:?}", record.position())))
        };
        trace
            .push(field(ct)?, field(cp)?, field(ce)?)
            .map_err(|e| bad(e.to_string()))?;
    }
    Ok((method, trace))
}

/// Loads a trace file; the label is the `method` metadata or the file stem.
pub fn load_trace(path: &Path) -> Result<(String, InterfaceTrace), CompareError> {
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let file = fs::File::open(path).map_err(|e| CompareError::Read {
        label: path.display().to_string(),
        message: e.to_string(),
    })?;
    let (method, trace) = read_trace(file, &label)?;
    Ok((method.unwrap_or(label), trace))
}

/// Traces side by side on the time grid of the first one.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Linear interpolation of `(xs, ys)` at `x`, clamped to the end values.
fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.partition_point(|&v| v < x) {
        0 => ys[0],
        k if k >= xs.len() => ys[xs.len() - 1],
        k if xs[k] == x => ys[k],
        k => {
            let s = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
            ys[k - 1] + s * (ys[k] - ys[k - 1])
        }
    }
}

/// Columns `time`, one position column per trace, one absolute error
/// column per trace, then the exact position. Traces on another time grid
/// are resampled linearly; duplicate labels get a numeric suffix.
pub fn compare_runs(traces: &[(String, InterfaceTrace)]) -> Result<Comparison, CompareError> {
    let (_, base) = traces.first().ok_or(CompareError::Empty)?;
    for (label, tr) in traces {
        if tr.is_empty() {
            return Err(CompareError::EmptyTrace(label.clone()));
        }
    }
    let mut labels: Vec<String> = Vec::new();
    for (label, _) in traces {
        let mut name = label.clone();
        let mut k = 2;
        while labels.contains(&name) {
            name = format!("{label}_{k}");
            k += 1;
        }
        labels.push(name);
    }
    let mut header = vec!["time".to_string()];
    header.extend(labels.iter().map(|l| format!("{l}_position")));
    header.extend(labels.iter().map(|l| format!("{l}_error")));
    header.push("exact_position".into());

    let rows = base
        .times
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let exact = base.exact_positions[k];
            let positions: Vec<f64> = traces
                .iter()
                .map(|(_, tr)| interpolate(&tr.times, &tr.positions, t))
                .collect();
            let mut row = vec![t];
            row.extend(&positions);
            row.extend(positions.iter().map(|p| (p - exact).abs()));
            row.push(exact);
            row
        })
        .collect();
    Ok(Comparison { header, rows })
}

pub fn write_comparison(cmp: &Comparison, out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&cmp.header).map_err(csv_error)?;
    for row in &cmp.rows {
        w.write_record(row.iter().map(|&v| num(v)))
            .map_err(csv_error)?;
    }
    w.flush()
}

pub fn write_timing(rows: &[BenchRow], out: impl Write) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "n", "steps", "seconds", "seconds_per_step"])
        .map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.method.to_string(),
            r.n.to_string(),
            r.steps.to_string(),
            num(r.seconds),
            num(r.seconds_per_step()),
        ])
        .map_err(csv_error)?;
    }
    w.flush()
}

/// Metadata lines of a CSV file as key/value pairs.
pub fn read_metadata(reader: impl Read) -> io::Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for line in BufReader::new(reader).lines() {
        let line = line?;
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        if let Some((k, v)) = rest.split_once(':') {
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
    }
    Ok(out)
}
