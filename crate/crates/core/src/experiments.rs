//! Scenario runners and their CSV reports.
//!
//! Three scenarios are provided: the empty ideal-mirror cavity, a C-slice
//! wafer sliced at several resolutions, and the stress inside a generic
//! dielectric gradient as the slicing is refined (which does not converge).
//!
//! Floats are written with 17 significant digits so that every report
//! re-parses to the same values and re-serializes to the same bytes.

use std::fmt::Write as _;
use std::time::Instant;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::materials::{
    discretize_filling, BoundarySpec, Filling, Profile, ProfileShape, SliceRule,
};
use crate::stress::{
    pressure_cslice_analytic, pressure_ideal, pressure_on_mirror, stress_at, QuadratureConfig, Side,
};

pub const REPORT_HEADER: [&str; 9] = [
    "scenario",
    "d",
    "profile",
    "N",
    "pressure_numeric",
    "pressure_analytic",
    "rel_err",
    "nodes",
    "runtime_ms",
];

pub const CONVERGENCE_HEADER: [&str; 4] = ["N", "sigma_xx", "gap_local", "rel_change_vs_prev"];

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub scenario: String,
    pub d: f64,
    pub profile: String,
    pub n: usize,
    pub pressure_numeric: f64,
    pub pressure_analytic: Option<f64>,
    pub rel_err: Option<f64>,
    pub nodes: usize,
    /// Wall time; left out of reports unless explicitly requested, since it
    /// differs between runs.
    pub runtime_ms: Option<f64>,
    /// Digest of the inputs that determine the numbers. Not serialized.
    pub inputs_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub n: usize,
    pub sigma_xx: f64,
    pub gap_local: f64,
    /// `|σ_N − σ_prev| / |σ_prev|`; NaN on the first row.
    pub rel_change_vs_prev: f64,
}

/// Relative error `|numeric − analytic| / |analytic|`.
pub fn relative_error(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / analytic.abs()
}

/// Short text form of a profile and its interval, used in reports.
pub fn describe_profile(profile: &Profile) -> String {
    let (a, b) = profile.interval();
    let shape = match profile.shape() {
        ProfileShape::Constant(m) => format!("const:{m}"),
        ProfileShape::Linear { start, end } => format!("linear:{start},{end}"),
        ProfileShape::Table(samples) => format!("table:{}-samples", samples.len()),
    };
    format!("{shape}@[{a};{b}]")
}

fn inputs_digest(
    scenario: &str,
    d: f64,
    profile: &str,
    n: usize,
    extra: &str,
    cfg: &QuadratureConfig,
) -> String {
    let text = format!(
        "{scenario}|{:016x}|{profile}|{n}|{extra}|{:016x}|{:016x}|{}|{:016x}|{}|{:?}",
        d.to_bits(),
        cfg.rel_tol.to_bits(),
        cfg.abs_tol.to_bits(),
        cfg.max_nodes,
        cfg.w_cutoff_factor.to_bits(),
        cfg.integration,
        cfg.integrand,
    );
    hex(&Sha256::digest(text.as_bytes())[..8])
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn mirrors() -> (BoundarySpec, BoundarySpec) {
    (BoundarySpec::IdealMirror, BoundarySpec::IdealMirror)
}

/// Empty cavity between ideal mirrors against `−π²/(240 d⁴)`.
pub fn run_empty_cavity(d: f64, cfg: &QuadratureConfig) -> Result<ScenarioReport> {
    let start = Instant::now();
    let stack = discretize_filling(&Filling::Vacuum, mirrors(), d, 1, SliceRule::Midpoint)?;
    let result = pressure_on_mirror(&stack, Side::Left, cfg)?;
    let analytic = pressure_ideal(d);
    Ok(ScenarioReport {
        scenario: "empty".into(),
        d,
        profile: "vacuum".into(),
        n: 1,
        pressure_numeric: result.pressure(),
        pressure_analytic: Some(analytic),
        rel_err: Some(relative_error(result.pressure(), analytic)),
        nodes: result.node_count,
        runtime_ms: Some(start.elapsed().as_secs_f64() * 1e3),
        inputs_digest: inputs_digest("empty", d, "vacuum", 1, &result.stack_digest, cfg),
    })
}

/// C-slice wafer sliced into each `n` of `n_list`, using cell averages.
///
/// Midpoint sampling of a non-constant profile misstates the wafer's virtual
/// width by `O(1/n²)`; the cell average (harmonic mean of `m`) preserves it
/// for every `n`, which is what makes the result independent of slicing.
pub fn run_cslice(
    d: f64,
    profile: &Profile,
    n_list: &[usize],
    cfg: &QuadratureConfig,
) -> Result<Vec<ScenarioReport>> {
    run_cslice_with(d, profile, n_list, SliceRule::CellAverage, cfg)
}

pub fn run_cslice_with(
    d: f64,
    profile: &Profile,
    n_list: &[usize],
    rule: SliceRule,
    cfg: &QuadratureConfig,
) -> Result<Vec<ScenarioReport>> {
    let analytic = pressure_cslice_analytic(d, profile)?;
    let label = describe_profile(profile);
    let filling = Filling::CSlice(profile.clone());
    let (a, b) = profile.interval();
    if a <= 0.0 && b >= d {
        return Err(Error::InvalidGeometry(
            "the wafer must leave a vacuum gap next to a mirror".into(),
        ));
    }
    // Evaluate next to whichever mirror has a vacuum gap.
    let side = if a > 0.0 { Side::Left } else { Side::Right };
    n_list
        .iter()
        .map(|&n| {
            let start = Instant::now();
            let stack = discretize_filling(&filling, mirrors(), d, n, rule)?;
            let result = pressure_on_mirror(&stack, side, cfg)?;
            Ok(ScenarioReport {
                scenario: "cslice".into(),
                d,
                profile: label.clone(),
                n,
                pressure_numeric: result.pressure(),
                pressure_analytic: Some(analytic),
                rel_err: Some(relative_error(result.pressure(), analytic)),
                nodes: result.node_count,
                runtime_ms: Some(start.elapsed().as_secs_f64() * 1e3),
                inputs_digest: inputs_digest(
                    "cslice",
                    d,
                    &label,
                    n,
                    &format!("{rule}|{}", result.stack_digest),
                    cfg,
                ),
            })
        })
        .collect()
}

/// Stress in the slice holding `point` as the filling is cut into each `n`
/// of `n_list` midpoint-sampled slices between ideal mirrors.
///
/// `point` defaults to the middle of the profile interval.
pub fn run_divergence(
    filling: &Filling,
    d: f64,
    point: Option<f64>,
    n_list: &[usize],
    cfg: &QuadratureConfig,
) -> Result<Vec<ConvergenceRow>> {
    let (a, b) = filling.profile().map_or((0.0, d), |p| p.interval());
    let point = point.unwrap_or(0.5 * (a + b));
    if !(point > a && point < b) {
        return Err(Error::InvalidGeometry(format!(
            "evaluation point {point} is not strictly inside [{a}, {b}]"
        )));
    }
    if n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGeometry(
            "slice counts must be strictly increasing".into(),
        ));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let stack = discretize_filling(filling, mirrors(), d, n, SliceRule::Midpoint)?;
        let result = stress_at(&stack, point, cfg)?;
        let rel_change_vs_prev = rows.last().map_or(f64::NAN, |prev| {
            relative_error(result.sigma_xx, prev.sigma_xx)
        });
        rows.push(ConvergenceRow {
            n,
            sigma_xx: result.sigma_xx,
            gap_local: result.gap,
            rel_change_vs_prev,
        });
    }
    Ok(rows)
}

/// The default generic filling: `eps(z) = 1 + z/d` across the whole cavity.
pub fn default_gradient(d: f64) -> Result<Filling> {
    Ok(Filling::Dielectric(Profile::linear((0.0, d), 1.0, 2.0)?))
}

fn float(x: f64) -> String {
    format!("{x:.16e}")
}

fn optional(x: Option<f64>) -> String {
    x.map(float).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn finish(writer: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

/// Scenario reports as CSV; `runtime_ms` stays empty unless `timing`.
pub fn write_reports(reports: &[ScenarioReport], timing: bool) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(REPORT_HEADER).map_err(csv_error)?;
    for r in reports {
        w.write_record([
            r.scenario.clone(),
            float(r.d),
            r.profile.clone(),
            r.n.to_string(),
            float(r.pressure_numeric),
            optional(r.pressure_analytic),
            optional(r.rel_err),
            r.nodes.to_string(),
            if timing {
                optional(r.runtime_ms)
            } else {
                String::new()
            },
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

pub fn write_convergence(rows: &[ConvergenceRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(CONVERGENCE_HEADER).map_err(csv_error)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            float(r.sigma_xx),
            float(r.gap_local),
            float(r.rel_change_vs_prev),
        ])
        .map_err(csv_error)?;
    }
    finish(w)
}

fn reader<'a>(text: &'a str, header: &[&str]) -> Result<csv::Reader<&'a [u8]>> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let found = r.headers().map_err(csv_error)?;
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "unexpected header `{}`",
                found.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    Ok(r)
}

fn field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: usize,
) -> Result<T> {
    let raw = record.get(idx).ok_or_else(|| Error::Parse {
        line,
        message: format!("missing `{name}`"),
    })?;
    raw.parse().map_err(|_| Error::Parse {
        line,
        message: format!("malformed `{name}`: `{raw}`"),
    })
}

fn optional_field(
    record: &csv::StringRecord,
    idx: usize,
    name: &str,
    line: usize,
) -> Result<Option<f64>> {
    match record.get(idx) {
        Some("") => Ok(None),
        _ => field(record, idx, name, line).map(Some),
    }
}

/// Parse a report written by [`write_reports`]. `inputs_digest` is empty.
pub fn parse_reports(text: &str) -> Result<Vec<ScenarioReport>> {
    let mut r = reader(text, &REPORT_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = i + 2;
        if record.len() != REPORT_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} fields, got {}",
                    REPORT_HEADER.len(),
                    record.len()
                ),
            });
        }
        out.push(ScenarioReport {
            scenario: record[0].to_string(),
            d: field(&record, 1, "d", line)?,
            profile: record[2].to_string(),
            n: field(&record, 3, "N", line)?,
            pressure_numeric: field(&record, 4, "pressure_numeric", line)?,
            pressure_analytic: optional_field(&record, 5, "pressure_analytic", line)?,
            rel_err: optional_field(&record, 6, "rel_err", line)?,
            nodes: field(&record, 7, "nodes", line)?,
            runtime_ms: optional_field(&record, 8, "runtime_ms", line)?,
            inputs_digest: String::new(),
        });
    }
    Ok(out)
}

pub fn parse_convergence(text: &str) -> Result<Vec<ConvergenceRow>> {
    let mut r = reader(text, &CONVERGENCE_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = i + 2;
        if record.len() != CONVERGENCE_HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected 4 fields, got {}", record.len()),
            });
        }
        out.push(ConvergenceRow {
            n: field(&record, 0, "N", line)?,
            sigma_xx: field(&record, 1, "sigma_xx", line)?,
            gap_local: field(&record, 2, "gap_local", line)?,
            rel_change_vs_prev: field(&record, 3, "rel_change_vs_prev", line)?,
        });
    }
    Ok(out)
}

/// SHA-256 of a serialized report, hex encoded.
pub fn report_digest(csv_text: &str) -> String {
    hex(&Sha256::digest(csv_text.as_bytes()))
}
