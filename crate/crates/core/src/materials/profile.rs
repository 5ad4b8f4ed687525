//! Scalar profiles over an interval of the cavity axis.
//!
//! A [`Profile`] describes a strictly positive function `m(z)` on `[a, b]`.
//! It is used for the compression factor of a C-slice wafer and, through the
//! same representation, for the permittivity of a generic dielectric filling.
//!
//! Profiles are written in a small mini-language:
//!
//! ```text
//! const:<m>
//! linear:<m_a>,<m_b>
//! table:<path>
//! ```
//!
//! Table files hold one `z m` pair per line, whitespace separated, with `#`
//! starting a comment. Tabulated profiles are interpolated linearly.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Functional form of a profile between its endpoints.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileShape {
    Constant(f64),
    /// Linear from `start` at `a` to `end` at `b`.
    Linear {
        start: f64,
        end: f64,
    },
    /// Samples `(z, m)` with strictly increasing `z` covering `[a, b]`.
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    a: f64,
    b: f64,
    shape: ProfileShape,
}

/// The compression profile `m(z)` of a C-slice wafer.
pub type CompressionProfile = Profile;

impl Profile {
    pub fn new(interval: (f64, f64), shape: ProfileShape) -> Result<Self> {
        let (a, b) = interval;
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "interval endpoints must be finite, got [{a}, {b}]"
            )));
        }
        if a > b {
            return Err(Error::InvalidProfile(
                "interval start exceeds end".to_string(),
            ));
        }
        if a == b {
            return Err(Error::InvalidProfile(format!("empty interval [{a}, {b}]")));
        }
        match &shape {
            ProfileShape::Constant(m) => check_sample(*m)?,
            ProfileShape::Linear { start, end } => {
                check_sample(*start)?;
                check_sample(*end)?;
            }
            ProfileShape::Table(samples) => {
                if samples.len() < 2 {
                    return Err(Error::InvalidProfile(
                        "a table needs at least two samples".to_string(),
                    ));
                }
                for pair in samples.windows(2) {
                    if !(pair[1].0 > pair[0].0) {
                        return Err(Error::InvalidProfile(format!(
                            "table z values must be strictly increasing ({} then {})",
                            pair[0].0, pair[1].0
                        )));
                    }
                }
                for &(z, m) in samples {
                    if !z.is_finite() {
                        return Err(Error::InvalidProfile(format!("non-finite z value {z}")));
                    }
                    check_sample(m)?;
                }
                let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
                if first > a || last < b {
                    return Err(Error::InvalidProfile(format!(
                        "table spans [{first}, {last}] which does not cover [{a}, {b}]"
                    )));
                }
            }
        }
        Ok(Self { a, b, shape })
    }

    pub fn constant(interval: (f64, f64), m: f64) -> Result<Self> {
        Self::new(interval, ProfileShape::Constant(m))
    }

    pub fn linear(interval: (f64, f64), start: f64, end: f64) -> Result<Self> {
        Self::new(interval, ProfileShape::Linear { start, end })
    }

    /// Tabulated profile over the span of its own samples.
    pub fn table(samples: Vec<(f64, f64)>) -> Result<Self> {
        let span = match (samples.first(), samples.last()) {
            (Some(first), Some(last)) => (first.0, last.0),
            _ => {
                return Err(Error::InvalidProfile(
                    "a table needs at least two samples".to_string(),
                ))
            }
        };
        Self::new(span, ProfileShape::Table(samples))
    }

    pub fn interval(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn width(&self) -> f64 {
        self.b - self.a
    }

    pub fn shape(&self) -> &ProfileShape {
        &self.shape
    }

    pub fn is_constant(&self) -> bool {
        matches!(self.shape, ProfileShape::Constant(_))
    }

    /// Value of the profile at `z`, clamped to the interval.
    pub fn value_at(&self, z: f64) -> f64 {
        let z = z.clamp(self.a, self.b);
        match &self.shape {
            ProfileShape::Constant(m) => *m,
            ProfileShape::Linear { start, end } => {
                let t = (z - self.a) / (self.b - self.a);
                start + (end - start) * t
            }
            ProfileShape::Table(samples) => {
                let idx = segment_index(samples, z);
                let (z0, m0) = samples[idx];
                let (z1, m1) = samples[idx + 1];
                m0 + (m1 - m0) * (z - z0) / (z1 - z0)
            }
        }
    }

    /// Exact `∫ dz / m(z)` over `[z0, z1]`, which must lie inside the interval.
    pub fn reciprocal_integral(&self, z0: f64, z1: f64) -> Result<f64> {
        if !(z0 <= z1) || z0 < self.a || z1 > self.b {
            return Err(Error::InvalidProfile(format!(
                "sub-interval [{z0}, {z1}] is not inside [{}, {}]",
                self.a, self.b
            )));
        }
        let value = match &self.shape {
            ProfileShape::Constant(m) => (z1 - z0) / m,
            ProfileShape::Linear { .. } => {
                reciprocal_linear(z1 - z0, self.value_at(z0), self.value_at(z1))
            }
            ProfileShape::Table(samples) => {
                let mut total = 0.0;
                let mut lo = z0;
                let mut idx = segment_index(samples, z0);
                while lo < z1 {
                    let seg_end = samples[idx + 1].0.min(z1);
                    if seg_end > lo {
                        total += reciprocal_linear(
                            seg_end - lo,
                            self.value_at(lo),
                            self.value_at(seg_end),
                        );
                    }
                    lo = seg_end;
                    idx += 1;
                    if idx + 1 >= samples.len() {
                        break;
                    }
                }
                total
            }
        };
        Ok(value)
    }

    /// Exact mean of `m(z)` over `[z0, z1]`.
    pub fn mean_over(&self, z0: f64, z1: f64) -> Result<f64> {
        if !(z0 < z1) || z0 < self.a || z1 > self.b {
            return Err(Error::InvalidProfile(format!(
                "sub-interval [{z0}, {z1}] is not inside [{}, {}]",
                self.a, self.b
            )));
        }
        let integral = match &self.shape {
            ProfileShape::Constant(m) => m * (z1 - z0),
            ProfileShape::Linear { .. } => {
                0.5 * (self.value_at(z0) + self.value_at(z1)) * (z1 - z0)
            }
            ProfileShape::Table(samples) => {
                let mut total = 0.0;
                let mut lo = z0;
                let mut idx = segment_index(samples, z0);
                while lo < z1 && idx + 1 < samples.len() {
                    let seg_end = samples[idx + 1].0.min(z1);
                    if seg_end > lo {
                        total +=
                            0.5 * (self.value_at(lo) + self.value_at(seg_end)) * (seg_end - lo);
                    }
                    lo = seg_end;
                    idx += 1;
                }
                total
            }
        };
        Ok(integral / (z1 - z0))
    }
}

fn check_sample(m: f64) -> Result<()> {
    if m.is_finite() && m > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidProfile(format!(
            "profile values must be finite and positive, got {m}"
        )))
    }
}

/// Index `i` of the table segment `[z_i, z_{i+1}]` containing `z`.
fn segment_index(samples: &[(f64, f64)], z: f64) -> usize {
    let upper = samples.partition_point(|&(zs, _)| zs <= z);
    upper.saturating_sub(1).min(samples.len() - 2)
}

/// `∫ dz / m` over a segment of length `len` where `m` runs linearly from
/// `m0` to `m1`: `len · ln(m1/m0) / (m1 − m0)`.
fn reciprocal_linear(len: f64, m0: f64, m1: f64) -> f64 {
    let x = (m1 - m0) / m0;
    let factor = if x == 0.0 { 1.0 } else { x.ln_1p() / x };
    len / m0 * factor
}

/// `Δ_virtual = ∫_a^b dz / m(z)`: the width of the profile region seen in
/// the compressed (virtual) coordinates.
pub fn virtual_width(profile: &Profile) -> f64 {
    let (a, b) = profile.interval();
    profile
        .reciprocal_integral(a, b)
        .expect("profile interval is always inside itself")
}

/// Harmonic-mean compression `C_S = Δ / Δ_virtual`.
pub fn compression_factor(profile: &Profile) -> f64 {
    profile.width() / virtual_width(profile)
}

/// Effective cavity length `d' = d − Δ + Δ_virtual` for a wafer inside `[0, d]`.
pub fn effective_length(d: f64, profile: &Profile) -> Result<f64> {
    let (a, b) = profile.interval();
    if !(d > 0.0) || a < 0.0 || b > d {
        return Err(Error::InvalidGeometry(format!(
            "profile interval [{a}, {b}] is not contained in the cavity [0, {d}]"
        )));
    }
    Ok(d - profile.width() + virtual_width(profile))
}

/// A parsed profile expression, before an interval is attached.
#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Const(f64),
    Linear(f64, f64),
    Table(PathBuf),
}

impl FromStr for ProfileSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').ok_or_else(|| {
            Error::InvalidProfile(format!("malformed profile `{s}`: expected <kind>:<args>"))
        })?;
        match kind {
            "const" => Ok(ProfileSpec::Const(parse_positive(rest, s)?)),
            "linear" => {
                let (lhs, rhs) = rest.split_once(',').ok_or_else(|| {
                    Error::InvalidProfile(format!(
                        "malformed profile `{s}`: expected linear:<m_a>,<m_b>"
                    ))
                })?;
                Ok(ProfileSpec::Linear(
                    parse_positive(lhs, s)?,
                    parse_positive(rhs, s)?,
                ))
            }
            "table" => {
                if rest.is_empty() {
                    return Err(Error::InvalidProfile(format!(
                        "malformed profile `{s}`: missing table path"
                    )));
                }
                Ok(ProfileSpec::Table(PathBuf::from(rest)))
            }
            other => Err(Error::InvalidProfile(format!(
                "unknown profile kind `{other}` in `{s}`"
            ))),
        }
    }
}

impl fmt::Display for ProfileSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileSpec::Const(m) => write!(f, "const:{m}"),
            ProfileSpec::Linear(a, b) => write!(f, "linear:{a},{b}"),
            ProfileSpec::Table(path) => write!(f, "table:{}", path.display()),
        }
    }
}

fn parse_positive(token: &str, whole: &str) -> Result<f64> {
    let value: f64 = token.trim().parse().map_err(|_| {
        Error::InvalidProfile(format!("malformed number `{token}` in profile `{whole}`"))
    })?;
    check_sample(value)?;
    Ok(value)
}

impl ProfileSpec {
    /// Attach an interval (and, for tables, load the file).
    ///
    /// Tables without an explicit interval cover the span of their samples.
    pub fn resolve(&self, interval: Option<(f64, f64)>) -> Result<Profile> {
        match self {
            ProfileSpec::Const(m) => Profile::constant(require_interval(interval)?, *m),
            ProfileSpec::Linear(a, b) => Profile::linear(require_interval(interval)?, *a, *b),
            ProfileSpec::Table(path) => {
                let samples = read_table(path)?;
                match interval {
                    Some(iv) => Profile::new(iv, ProfileShape::Table(samples)),
                    None => Profile::table(samples),
                }
            }
        }
    }
}

fn require_interval(interval: Option<(f64, f64)>) -> Result<(f64, f64)> {
    interval
        .ok_or_else(|| Error::InvalidProfile("closed-form profiles need an interval".to_string()))
}

pub fn read_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_table(&text)
}

/// Parse a two-column `z m` table. Only the syntax is checked here; ordering
/// and positivity are enforced when the table becomes a [`Profile`].
pub fn parse_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (Some(z), Some(m), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected two columns `z m`, got `{line}`"),
            });
        };
        let parse = |tok: &str| {
            tok.parse::<f64>().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("malformed number `{tok}`"),
            })
        };
        samples.push((parse(z)?, parse(m)?));
    }
    Ok(samples)
}
