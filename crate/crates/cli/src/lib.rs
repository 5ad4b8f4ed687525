//! Argument and config-file parsing, scenario dispatch and CSV emission for
//! the `casimir` binary. All physics lives in `casimir_core`.

use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use casimir_core::experiments::{
    run_cslice_with, run_divergence, run_empty_cavity, write_convergence, write_reports,
    ConvergenceRow, ScenarioReport,
};
use casimir_core::materials::{Filling, Profile, ProfileSpec, SliceRule};
use casimir_core::stress::{Integration, QuadratureConfig};
use casimir_core::Error as CoreError;

/// Environment variable capping the worker pool; `0` or unset means automatic.
pub const THREADS_ENV: &str = "CASIMIR_THREADS";

const DIVERGENCE_N: [usize; 5] = [8, 16, 32, 64, 128];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Scenario {
    Empty,
    Cslice,
    Divergence,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Empty => "empty",
            Scenario::Cslice => "cslice",
            Scenario::Divergence => "divergence",
        })
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "casimir",
    version,
    about = "Casimir pressure in layered cavities",
    args_override_self = true
)]
struct Args {
    /// Scenario to run.
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,
    /// Cavity width.
    #[arg(long)]
    d: Option<f64>,
    /// Profile: const:<m>, linear:<m_a>,<m_b> or table:<path>.
    #[arg(long, allow_hyphen_values = true)]
    profile: Option<String>,
    /// Profile interval `a,b`.
    #[arg(long, allow_hyphen_values = true)]
    interval: Option<String>,
    /// Comma-separated slice counts.
    #[arg(long = "N", value_name = "N1,N2,...")]
    n: Option<String>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Cap on spectral points per stress value.
    #[arg(long)]
    max_nodes: Option<usize>,
    /// auto, radial or polar.
    #[arg(long)]
    integration: Option<String>,
    /// Output CSV path; defaults to `<scenario>.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of `key=value` lines supplying any other flag.
    #[arg(long)]
    config: Option<PathBuf>,
    /// midpoint or cell-average (cslice scenario).
    #[arg(long)]
    slice_rule: Option<String>,
    /// Evaluation point (divergence scenario); defaults to the profile midpoint.
    #[arg(long, allow_hyphen_values = true)]
    point: Option<f64>,
    /// Fill the runtime_ms column.
    #[arg(long)]
    timing: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub d: f64,
    /// Profile text as given, if any.
    pub profile_text: Option<String>,
    /// Resolved profile with its interval.
    pub profile: Option<Profile>,
    pub n_list: Vec<usize>,
    pub quadrature: QuadratureConfig,
    pub out: PathBuf,
    pub slice_rule: SliceRule,
    pub point: Option<f64>,
    pub timing: bool,
}

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or inputs; includes `--help` and `--version`.
    Usage(clap::Error),
    Invalid(String),
    Numerical(CoreError),
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(e) if !e.use_stderr() => 0,
            CliError::Usage(_) | CliError::Invalid(_) | CliError::Output(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(e) => write!(f, "{e}"),
            CliError::Invalid(msg) => write!(f, "error: {msg}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Output(msg) => write!(f, "error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

/// Core errors raised while preparing or running a scenario: input problems
/// are usage errors, everything else is numerical.
fn classify(e: CoreError) -> CliError {
    match e {
        CoreError::InvalidMaterial(_)
        | CoreError::InvalidProfile(_)
        | CoreError::InvalidGeometry(_)
        | CoreError::Unsupported(_)
        | CoreError::Parse { .. }
        | CoreError::Io(_) => CliError::Invalid(e.to_string()),
        other => CliError::Numerical(other),
    }
}

/// `key=value` lines; blank lines and `#` comments are skipped. Keys are
/// flag names without the leading dashes.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            invalid(format!(
                "config line {}: expected key=value, got `{line}`",
                idx + 1
            ))
        })?;
        let key = key.trim();
        if key.is_empty() || key.starts_with('-') || key.contains(char::is_whitespace) {
            return Err(invalid(format!(
                "config line {}: malformed key `{key}`",
                idx + 1
            )));
        }
        if key == "config" {
            return Err(invalid(format!(
                "config line {}: config files cannot nest",
                idx + 1
            )));
        }
        out.push((key.to_string(), value.trim().to_string()));
    }
    Ok(out)
}

fn config_argv(entries: &[(String, String)]) -> Vec<OsString> {
    let mut argv = Vec::new();
    for (key, value) in entries {
        if key == "timing" {
            match value.as_str() {
                "true" | "1" | "yes" => argv.push(OsString::from("--timing")),
                _ => {}
            }
            continue;
        }
        argv.push(OsString::from(format!("--{key}")));
        argv.push(OsString::from(value));
    }
    argv
}

/// Parses `a,b`.
pub fn parse_interval(text: &str) -> Result<(f64, f64), CliError> {
    let (a, b) = text
        .split_once(',')
        .ok_or_else(|| invalid(format!("malformed interval `{text}`: expected a,b")))?;
    let parse = |tok: &str| {
        tok.trim()
            .parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| invalid(format!("malformed interval bound `{tok}` in `{text}`")))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if a > b {
        return Err(invalid("interval start exceeds end"));
    }
    if a == b {
        return Err(invalid(format!("interval `{text}` is empty")));
    }
    Ok((a, b))
}

/// Parses `n1,n2,...` into strictly increasing positive counts.
pub fn parse_n_list(text: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for tok in text.split(',') {
        let n: usize = tok
            .trim()
            .parse()
            .map_err(|_| invalid(format!("malformed slice count `{tok}` in `{text}`")))?;
        if n == 0 {
            return Err(invalid("slice counts must be at least 1"));
        }
        if n > 1_000_000 {
            return Err(invalid(format!("slice count {n} exceeds 1000000")));
        }
        if out.last().is_some_and(|&prev| n <= prev) {
            return Err(invalid(format!(
                "slice counts must be strictly increasing: `{text}`"
            )));
        }
        out.push(n);
    }
    Ok(out)
}

/// Parses and validates a full argument vector (program name first).
///
/// A `--config` file is read and its entries are placed ahead of the
/// command-line flags, so flags given on the command line win.
pub fn parse_args<I, T>(argv: I) -> Result<RunConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let first = Args::try_parse_from(&argv).map_err(CliError::Usage)?;
    let args = match &first.config {
        None => first,
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
            let entries = parse_config_text(&text)?;
            let mut merged = vec![argv.first().cloned().unwrap_or_else(|| "casimir".into())];
            merged.extend(config_argv(&entries));
            merged.extend(argv.iter().skip(1).cloned());
            Args::try_parse_from(merged).map_err(CliError::Usage)?
        }
    };
    validate(args)
}

fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x.is_finite() && x > 0.0 {
        Ok(x)
    } else {
        Err(invalid(format!(
            "--{name} must be positive and finite, got {x}"
        )))
    }
}

fn validate(args: Args) -> Result<RunConfig, CliError> {
    let scenario = args
        .scenario
        .ok_or_else(|| invalid("--scenario is required (empty, cslice or divergence)"))?;
    let d = positive("d", args.d.unwrap_or(1.0))?;
    let interval = args.interval.as_deref().map(parse_interval).transpose()?;
    if let Some((a, b)) = interval {
        if a < 0.0 || b > d {
            return Err(invalid(format!(
                "interval [{a}, {b}] is not inside the cavity [0, {d}]"
            )));
        }
    }

    let defaults = QuadratureConfig::default();
    let quadrature = QuadratureConfig {
        rel_tol: positive("rel-tol", args.rel_tol.unwrap_or(defaults.rel_tol))?,
        abs_tol: positive("abs-tol", args.abs_tol.unwrap_or(defaults.abs_tol))?,
        max_nodes: args.max_nodes.unwrap_or(defaults.max_nodes),
        integration: match args.integration.as_deref() {
            Some(s) => s.parse::<Integration>().map_err(classify)?,
            None => defaults.integration,
        },
        ..defaults
    };
    quadrature.validate().map_err(classify)?;

    let slice_rule = match args.slice_rule.as_deref() {
        Some(s) => s.parse::<SliceRule>().map_err(classify)?,
        None => SliceRule::CellAverage,
    };

    let default_n: &[usize] = match scenario {
        Scenario::Empty => &[1],
        Scenario::Cslice => &[64],
        Scenario::Divergence => &DIVERGENCE_N,
    };
    let n_list = match args.n.as_deref() {
        Some(text) => parse_n_list(text)?,
        None => default_n.to_vec(),
    };

    let spec = args
        .profile
        .as_deref()
        .map(|s| s.parse::<ProfileSpec>())
        .transpose()
        .map_err(classify)?;
    let profile = match (scenario, &spec) {
        (Scenario::Empty, Some(_)) => {
            return Err(invalid("the empty scenario takes no --profile"));
        }
        (Scenario::Empty, None) => None,
        (Scenario::Cslice, None) => return Err(invalid("the cslice scenario needs --profile")),
        (Scenario::Cslice, Some(spec)) => Some(spec.resolve(interval).map_err(classify)?),
        (Scenario::Divergence, spec) => {
            let spec = spec.clone().unwrap_or(ProfileSpec::Linear(1.0, 2.0));
            let interval = match (&spec, interval) {
                (ProfileSpec::Table(_), iv) => iv,
                (_, iv) => Some(iv.unwrap_or((0.0, d))),
            };
            Some(spec.resolve(interval).map_err(classify)?)
        }
    };
    if let Some(p) = &profile {
        let (a, b) = p.interval();
        if a < 0.0 || b > d {
            return Err(invalid(format!(
                "profile interval [{a}, {b}] is not inside the cavity [0, {d}]"
            )));
        }
        if scenario == Scenario::Cslice && a <= 0.0 && b >= d {
            return Err(invalid(
                "the cslice wafer must leave a vacuum gap next to a mirror",
            ));
        }
    }
    if scenario == Scenario::Empty && n_list != [1] {
        return Err(invalid(
            "the empty scenario has a single slice; --N does not apply",
        ));
    }
    if let Some(z) = args.point {
        let (a, b) = profile.as_ref().map_or((0.0, d), |p| p.interval());
        if scenario != Scenario::Divergence {
            return Err(invalid("--point applies only to the divergence scenario"));
        }
        if !(z > a && z < b) {
            return Err(invalid(format!(
                "--point {z} is not strictly inside [{a}, {b}]"
            )));
        }
    }

    Ok(RunConfig {
        scenario,
        d,
        profile_text: spec.map(|s| s.to_string()),
        profile,
        n_list,
        quadrature,
        out: args
            .out
            .unwrap_or_else(|| PathBuf::from(format!("{scenario}.csv"))),
        slice_rule,
        point: args.point,
        timing: args.timing,
    })
}

/// Results of one run.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Reports(Vec<ScenarioReport>),
    Convergence(Vec<ConvergenceRow>),
}

impl Outcome {
    pub fn to_csv(&self, timing: bool) -> Result<String, CliError> {
        match self {
            Outcome::Reports(r) => write_reports(r, timing),
            Outcome::Convergence(rows) => write_convergence(rows),
        }
        .map_err(classify)
    }

    /// One human-readable line.
    pub fn summary(&self, scenario: Scenario) -> String {
        match self {
            Outcome::Reports(reports) => {
                let last = reports.last().expect("at least one slice count");
                let rel = |x: Option<f64>| x.map_or("n/a".to_string(), |e| format!("{e:.3e}"));
                let mut line = format!(
                    "{scenario}: N={} pressure {:.6e} rel_err {}",
                    last.n,
                    last.pressure_numeric,
                    rel(last.rel_err)
                );
                if reports.len() > 1 {
                    let worst = reports.iter().filter_map(|r| r.rel_err).reduce(f64::max);
                    let ns: Vec<String> = reports.iter().map(|r| r.n.to_string()).collect();
                    line += &format!("; worst rel_err {} over N={}", rel(worst), ns.join(","));
                }
                line
            }
            Outcome::Convergence(rows) => {
                let last = rows.last().expect("at least one slice count");
                let monotone = rows
                    .windows(2)
                    .all(|w| w[1].sigma_xx.abs() > w[0].sigma_xx.abs());
                format!(
                    "{scenario}: sigma_xx {:.6e} at N={} rel_change {:.3e} |sigma_xx| {}",
                    last.sigma_xx,
                    last.n,
                    last.rel_change_vs_prev,
                    if monotone {
                        "increasing"
                    } else {
                        "not increasing"
                    }
                )
            }
        }
    }
}

/// Runs the configured scenario.
pub fn execute(config: &RunConfig) -> Result<Outcome, CliError> {
    let cfg = &config.quadrature;
    match config.scenario {
        Scenario::Empty => Ok(Outcome::Reports(vec![
            run_empty_cavity(config.d, cfg).map_err(classify)?
        ])),
        Scenario::Cslice => {
            let profile = config.profile.as_ref().expect("validated");
            run_cslice_with(config.d, profile, &config.n_list, config.slice_rule, cfg)
                .map(Outcome::Reports)
                .map_err(classify)
        }
        Scenario::Divergence => {
            let profile = config.profile.as_ref().expect("validated");
            let filling = Filling::Dielectric(profile.clone());
            run_divergence(&filling, config.d, config.point, &config.n_list, cfg)
                .map(Outcome::Convergence)
                .map_err(classify)
        }
    }
}

/// Worker count from [`THREADS_ENV`]; `None` means automatic.
pub fn threads_from_env(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(text) => match text.parse::<usize>() {
            Ok(0) => Ok(None),
            Ok(n) => Ok(Some(n)),
            Err(_) => Err(invalid(format!(
                "{THREADS_ENV} must be a non-negative integer, got `{text}`"
            ))),
        },
    }
}

pub fn write_output(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

/// Parse, run and write; returns the summary line.
pub fn run<I, T>(argv: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = parse_args(argv)?;
    let outcome = execute(&config)?;
    write_output(&config.out, &outcome.to_csv(config.timing)?)?;
    Ok(outcome.summary(config.scenario))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        parse_args(std::iter::once("casimir").chain(args.iter().copied()))
    }

    #[test]
    fn defaults() {
        let c = parse(&["--scenario", "empty", "--d", "1.0"]).unwrap();
        assert_eq!(c.scenario, Scenario::Empty);
        assert_eq!(c.d, 1.0);
        assert_eq!(c.quadrature.rel_tol, 1e-8);
        assert_eq!(c.quadrature.abs_tol, 1e-14);
        assert_eq!(c.out, PathBuf::from("empty.csv"));
        let c = parse(&[
            "--scenario",
            "cslice",
            "--profile",
            "const:0.5",
            "--interval",
            "0.4,0.6",
        ])
        .unwrap();
        assert_eq!(c.n_list, vec![64]);
        assert_eq!(c.profile.unwrap().interval(), (0.4, 0.6));
        let c = parse(&["--scenario", "divergence"]).unwrap();
        assert_eq!(c.n_list, DIVERGENCE_N.to_vec());
        assert_eq!(c.profile.unwrap().value_at(0.5), 1.5);
    }

    #[test]
    fn interval_order_is_checked() {
        let err = parse(&[
            "--scenario",
            "cslice",
            "--profile",
            "const:0.5",
            "--interval",
            "0.7,0.2",
        ])
        .unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(
            err.to_string().contains("interval start exceeds end"),
            "{err}"
        );
    }

    #[test]
    fn usage_errors() {
        for args in [
            vec!["--scenario", "bogus"],
            vec!["--scenario", "empty", "--frobnicate"],
            vec![
                "--scenario",
                "cslice",
                "--profile",
                "cubic:1",
                "--interval",
                "0.1,0.2",
            ],
            vec!["--scenario", "cslice", "--profile", "const:0.5"],
            vec![
                "--scenario",
                "cslice",
                "--profile",
                "const:-1",
                "--interval",
                "0.1,0.2",
            ],
            vec![
                "--scenario",
                "cslice",
                "--profile",
                "const:1",
                "--interval",
                "0.1,2",
            ],
            vec![
                "--scenario",
                "cslice",
                "--profile",
                "const:1",
                "--interval",
                "0,1",
            ],
            vec!["--scenario", "divergence", "--N", "16,8"],
            vec!["--scenario", "divergence", "--N", "0"],
            vec!["--scenario", "divergence", "--point", "1.5"],
            vec!["--scenario", "empty", "--rel-tol", "0"],
            vec!["--scenario", "empty", "--max-nodes", "3"],
            vec!["--scenario", "empty", "--profile", "const:1"],
            vec!["--d", "1"],
        ] {
            let err = parse(&args).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{args:?}: {err}");
        }
    }

    #[test]
    fn config_file_and_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# wafer\nscenario = cslice\nprofile=const:0.5\ninterval=0.4,0.6\nN=4,16\nd=1.0\ntiming=true\n",
        )
        .unwrap();
        let p = path.to_str().unwrap();
        let c = parse(&["--config", p]).unwrap();
        assert_eq!(c.n_list, vec![4, 16]);
        assert!(c.timing);
        let c = parse(&["--config", p, "--N", "8"]).unwrap();
        assert_eq!(c.n_list, vec![8]);
        let c = parse(&["--N", "8", "--config", p]).unwrap();
        assert_eq!(c.n_list, vec![8]);

        std::fs::write(&path, "scenario=empty\nwhat=1\n").unwrap();
        assert_eq!(parse(&["--config", p]).unwrap_err().exit_code(), 1);
        assert_eq!(
            parse(&["--config", "/nonexistent/file"])
                .unwrap_err()
                .exit_code(),
            1
        );
    }

    #[test]
    fn config_text_syntax() {
        let e = parse_config_text("a=1\n\n  # c\nb = two words \n").unwrap();
        assert_eq!(
            e,
            vec![("a".into(), "1".into()), ("b".into(), "two words".into())]
        );
        assert!(parse_config_text("novalue\n").is_err());
        assert!(parse_config_text("=1\n").is_err());
        assert!(parse_config_text("--d=1\n").is_err());
        assert!(parse_config_text("config=x\n").is_err());
    }

    #[test]
    fn thread_env() {
        assert_eq!(threads_from_env(None).unwrap(), None);
        assert_eq!(threads_from_env(Some("0")).unwrap(), None);
        assert_eq!(threads_from_env(Some("4")).unwrap(), Some(4));
        assert!(threads_from_env(Some("four")).is_err());
    }

    #[test]
    fn numerical_failures_exit_two() {
        let c = parse(&["--scenario", "empty", "--max-nodes", "16"]).unwrap();
        assert_eq!(execute(&c).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn summary_mentions_pressure() {
        let c = parse(&["--scenario", "empty"]).unwrap();
        let s = execute(&c).unwrap().summary(c.scenario);
        assert!(s.contains("-4.112335e-2"), "{s}");
    }
}
