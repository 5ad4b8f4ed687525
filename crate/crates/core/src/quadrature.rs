//! Adaptive Gauss–Kronrod (7/15) quadrature with a shared evaluation budget.
//!
//! Node values may carry their own error estimate (an inner integral); those
//! are integrated with the Kronrod weights and added to the panel error.
//! Interval bookkeeping and summation follow a fixed order, so the result
//! does not depend on how node evaluations are scheduled across threads.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Kronrod abscissae on `[0, 1]`, descending; odd indices are the Gauss nodes.
#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss weights for `XGK[1], XGK[3], XGK[5], XGK[7]`.
#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// A value with an absolute error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, error: 0.0 }
    }
}

/// Evaluation counter shared by nested integrations.
#[derive(Debug)]
pub struct NodeBudget {
    used: AtomicUsize,
    limit: usize,
}

impl NodeBudget {
    pub fn new(limit: usize) -> Self {
        Self {
            used: AtomicUsize::new(0),
            limit,
        }
    }

    pub fn charge(&self, n: usize) {
        self.used.fetch_add(n, Ordering::Relaxed);
    }

    pub fn used(&self) -> usize {
        self.used.load(Ordering::Relaxed)
    }

    pub fn exhausted(&self) -> bool {
        self.used() > self.limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Tolerance {
    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

/// Abscissae of one panel, centre last.
fn panel_nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [c; 15];
    for j in 0..7 {
        x[2 * j] = c - h * XGK[j];
        x[2 * j + 1] = c + h * XGK[j];
    }
    x
}

/// QUADPACK error rescaling of a raw `|K − G|` estimate.
fn rescale_error(raw: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = raw.abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

fn combine(a: f64, b: f64, f: &[Estimate]) -> Panel {
    let h = 0.5 * (b - a);
    let centre = f[14].value;
    let mut kronrod = WGK[7] * centre;
    let mut gauss = WG[3] * centre;
    let mut res_abs = WGK[7] * centre.abs();
    let mut inner_err = WGK[7] * f[14].error;
    for j in 0..7 {
        let (lo, hi) = (f[2 * j], f[2 * j + 1]);
        let sum = lo.value + hi.value;
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
        res_abs += WGK[j] * (lo.value.abs() + hi.value.abs());
        inner_err += WGK[j] * (lo.error + hi.error);
    }
    let mean = 0.5 * kronrod;
    let mut res_asc = WGK[7] * (centre - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((f[2 * j].value - mean).abs() + (f[2 * j + 1].value - mean).abs());
    }
    let scale = h.abs();
    Panel {
        a,
        b,
        value: kronrod * h,
        error: rescale_error((kronrod - gauss) * h, res_abs * scale, res_asc * scale)
            + inner_err * scale,
    }
}

/// Result of an adaptive run that may have stopped short of its tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outcome {
    pub estimate: Estimate,
    pub converged: bool,
}

/// Controls for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Settings {
    pub tol: Tolerance,
    /// Largest number of panels kept before giving up.
    pub max_panels: usize,
    /// Evaluate the nodes of a panel pair on the rayon pool.
    pub parallel: bool,
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, starting from one panel
/// per break interval and bisecting the panel with the largest error.
///
/// Stops early with an error when `budget` is exhausted, checked after every
/// panel evaluation.
pub fn integrate<F>(
    f: F,
    breaks: &[f64],
    settings: Settings,
    budget: &NodeBudget,
) -> Result<Outcome>
where
    F: Fn(f64) -> Result<Estimate> + Sync,
{
    assert!(breaks.len() >= 2, "need at least one interval");
    let eval = |xs: &[f64]| -> Result<Vec<Estimate>> {
        budget.charge(xs.len());
        if settings.parallel {
            xs.par_iter().map(|&x| f(x)).collect()
        } else {
            xs.iter().map(|&x| f(x)).collect()
        }
    };
    let totals = |panels: &[Panel]| {
        panels.iter().fold(Estimate::exact(0.0), |acc, p| Estimate {
            value: acc.value + p.value,
            error: acc.error + p.error,
        })
    };
    let out_of_budget = |panels: &[Panel]| {
        let t = totals(panels);
        Error::NonConvergence {
            estimate: t.value,
            error: t.error,
            nodes: budget.used(),
        }
    };

    let mut panels = Vec::with_capacity(breaks.len() - 1);
    for w in breaks.windows(2) {
        let values = eval(&panel_nodes(w[0], w[1]))?;
        panels.push(combine(w[0], w[1], &values));
        if budget.exhausted() {
            return Err(out_of_budget(&panels));
        }
    }

    loop {
        let total = totals(&panels);
        if total.error <= settings.tol.target(total.value) {
            return Ok(Outcome {
                estimate: total,
                converged: true,
            });
        }
        let (worst, panel) = panels
            .iter()
            .enumerate()
            .fold((0, panels[0]), |best, (i, p)| {
                if p.error > best.1.error {
                    (i, *p)
                } else {
                    best
                }
            });
        let mid = 0.5 * (panel.a + panel.b);
        let resolvable = mid > panel.a && mid < panel.b;
        if panels.len() >= settings.max_panels || !resolvable {
            return Ok(Outcome {
                estimate: total,
                converged: false,
            });
        }
        let mut xs = panel_nodes(panel.a, mid).to_vec();
        xs.extend_from_slice(&panel_nodes(mid, panel.b));
        let values = eval(&xs)?;
        panels[worst] = combine(panel.a, mid, &values[..15]);
        panels.push(combine(mid, panel.b, &values[15..]));
        if budget.exhausted() {
            return Err(out_of_budget(&panels));
        }
    }
}
