//! Regularized Casimir stress inside a layered cavity and the pressure on
//! its mirrors, plus the closed-form ideal-mirror benchmarks.
//!
//! With `ħ = c = 1`, the `xx` stress in a homogeneous layer of width `g` is
//!
//! ```text
//! σ = 1/(2π²) ∫₀^∞ dκ ∫₀^∞ dk k · w Tr[X (I − X)⁻¹],   X = R_L R_R e^{−2 w g},
//! ```
//!
//! where `w` is the layer's axial constant and `R_L`, `R_R` are the layer's
//! reflection matrices toward each boundary. Both polarizations must share
//! `w`, and the media must be uniaxial about z so that the transverse
//! wavevector integral reduces to its magnitude.
//!
//! The `(κ, k)` quarter plane is integrated in polar form, `κ = ρ cos θ`,
//! `k = ρ sin θ`. When every medium is vacuum-equivalent the integrand depends
//! on `ρ` alone and the angular integral is done analytically.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::materials::{effective_length, CompressionProfile, Stack};
use crate::quadrature::{integrate, Estimate, NodeBudget, Settings, Tolerance};
use crate::transfer::{slice_reflections, ReflectionMatrix};
use crate::wavesolver::{min_axial_slope, SpectralPoint};

/// How the `(κ, k)` quarter plane is covered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Integration {
    /// Radial when the stack is vacuum-equivalent, polar otherwise.
    #[default]
    Auto,
    /// One-dimensional `ρ` integral; requires a vacuum-equivalent stack.
    Radial,
    /// Nested `ρ`, `θ` integrals.
    Polar,
}

impl FromStr for Integration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Integration::Auto),
            "radial" => Ok(Integration::Radial),
            "polar" => Ok(Integration::Polar),
            other => Err(Error::Unsupported(format!("unknown integration `{other}`"))),
        }
    }
}

impl fmt::Display for Integration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Integration::Auto => "auto",
            Integration::Radial => "radial",
            Integration::Polar => "polar",
        })
    }
}

/// Which form of the trace is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IntegrandForm {
    /// `w Tr[X (I − X)⁻¹]` on 2×2 matrices.
    #[default]
    Trace,
    /// Per-polarization geometric sums; requires diagonal reflection matrices.
    Scalar,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Cap on spectral points evaluated per stress value.
    pub max_nodes: usize,
    /// The `ρ` integral stops where `w g` reaches this value.
    pub w_cutoff_factor: f64,
    pub integration: Integration,
    pub integrand: IntegrandForm,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-14,
            max_nodes: 50_000_000,
            w_cutoff_factor: 40.0,
            integration: Integration::Auto,
            integrand: IntegrandForm::Trace,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol.is_finite()) {
            return Err(Error::Unsupported(format!(
                "rel_tol must be positive, got {}",
                self.rel_tol
            )));
        }
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::Unsupported(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_nodes < 16 {
            return Err(Error::Unsupported(format!(
                "max_nodes must be at least 16, got {}",
                self.max_nodes
            )));
        }
        if !(self.w_cutoff_factor > 0.0 && self.w_cutoff_factor.is_finite()) {
            return Err(Error::Unsupported(format!(
                "w_cutoff_factor must be positive, got {}",
                self.w_cutoff_factor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StressResult {
    /// In units of `ħc/L⁴` for lengths measured in `L`.
    pub sigma_xx: f64,
    pub est_error: f64,
    pub node_count: usize,
    /// 0-based layer the stress was evaluated in.
    pub slice: usize,
    /// Width of that layer.
    pub gap: f64,
    pub stack_digest: String,
}

impl StressResult {
    /// Pressure on a mirror; negative means attraction.
    pub fn pressure(&self) -> f64 {
        -self.sigma_xx
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// `w Tr[X (I − X)⁻¹]` with `X = R_L R_R e^{−2 gap w}`.
pub fn stress_integrand(
    rl: &ReflectionMatrix,
    rr: &ReflectionMatrix,
    w: f64,
    gap: f64,
) -> Result<f64> {
    let x = rl.as_matrix() * rr.as_matrix() * (-2.0 * gap * w).exp();
    let radius = spectral_radius(&x);
    if !(radius < 1.0) {
        return Err(Error::Gain { radius });
    }
    let resolvent = (Matrix2::identity() - x)
        .try_inverse()
        .ok_or(Error::Gain { radius })?;
    Ok(w * (x * resolvent).trace())
}

/// `w Σ r_L r_R e/(1 − r_L r_R e)` over the two polarizations.
pub fn stress_integrand_scalar(
    rl: &ReflectionMatrix,
    rr: &ReflectionMatrix,
    w: f64,
    gap: f64,
) -> Result<f64> {
    if !(rl.is_diagonal() && rr.is_diagonal()) {
        return Err(Error::Unsupported(
            "the scalar integrand needs diagonal reflection matrices".into(),
        ));
    }
    let decay = (-2.0 * gap * w).exp();
    let mut sum = 0.0;
    for (a, b) in [(rl.ss, rr.ss), (rl.pp, rr.pp)] {
        let x = a * b * decay;
        if !(x.abs() < 1.0) {
            return Err(Error::Gain { radius: x.abs() });
        }
        sum += x / (1.0 - x);
    }
    Ok(w * sum)
}

fn spectral_radius(x: &Matrix2<f64>) -> f64 {
    let half_trace = 0.5 * x.trace();
    let det = x.determinant();
    let disc = half_trace * half_trace - det;
    if disc >= 0.0 {
        let root = disc.sqrt();
        (half_trace + root).abs().max((half_trace - root).abs())
    } else {
        det.sqrt()
    }
}

/// Stress at layer `slice` (0-based).
pub fn stress_at_point(
    stack: &Stack,
    slice: usize,
    cfg: &QuadratureConfig,
) -> Result<StressResult> {
    cfg.validate()?;
    if slice >= stack.len() {
        return Err(Error::InvalidGeometry(format!(
            "slice {slice} is outside a stack of {} layers",
            stack.len()
        )));
    }
    let media = stack
        .layers()
        .iter()
        .map(|l| l.material)
        .chain(stack.left().medium())
        .chain(stack.right().medium());
    for m in media {
        if !m.is_uniaxial() {
            return Err(Error::Unsupported(format!(
                "medium {m} is not uniaxial about z; the transverse integral does not reduce"
            )));
        }
    }
    let layer = stack.layers()[slice];
    if !layer.material.has_degenerate_polarizations() {
        return Err(Error::Unsupported(format!(
            "stress needs one axial constant for both polarizations in {}",
            layer.material
        )));
    }

    let gap = layer.thickness;
    let slope = min_axial_slope(&layer.material);
    let rho_max = cfg.w_cutoff_factor / (gap * slope);
    let breaks = radial_breaks(rho_max, stack.width());

    let integrand = |kappa: f64, kpar: f64| -> Result<f64> {
        let sp = SpectralPoint::new(kappa, kpar)?;
        let r = slice_reflections(stack, slice, sp)?;
        let w = r.axial.0;
        match cfg.integrand {
            IntegrandForm::Trace => stress_integrand(&r.left, &r.right, w, gap),
            IntegrandForm::Scalar => stress_integrand_scalar(&r.left, &r.right, w, gap),
        }
    };

    let radial = match cfg.integration {
        Integration::Auto => stack.is_vacuum_equivalent(),
        Integration::Radial => {
            if !stack.is_vacuum_equivalent() {
                return Err(Error::Unsupported(
                    "radial integration needs a vacuum-equivalent stack".into(),
                ));
            }
            true
        }
        Integration::Polar => false,
    };

    let budget = NodeBudget::new(cfg.max_nodes);
    let outer = Settings {
        tol: Tolerance {
            rel: cfg.rel_tol,
            abs: cfg.abs_tol,
        },
        max_panels: 100_000,
        parallel: true,
    };
    let outcome = if radial {
        // ∫₀^{π/2} sin θ dθ = 1 once the integrand no longer depends on θ.
        integrate(
            |rho| {
                let (s, c) = FRAC_PI_4.sin_cos();
                Ok(Estimate::exact(rho * rho * integrand(rho * c, rho * s)?))
            },
            &breaks,
            outer,
            &budget,
        )?
    } else {
        let inner = Settings {
            tol: Tolerance {
                rel: 0.1 * cfg.rel_tol,
                abs: 0.1 * cfg.abs_tol / rho_max,
            },
            max_panels: 200,
            parallel: false,
        };
        integrate(
            |rho| {
                // A private budget keeps the limit check in the outer loop,
                // where a partial estimate is meaningful.
                let local = NodeBudget::new(usize::MAX / 2);
                let angular = integrate(
                    |theta| {
                        let (s, c) = theta.sin_cos();
                        Ok(Estimate::exact(s * integrand(rho * c, rho * s)?))
                    },
                    &[0.0, FRAC_PI_2],
                    inner,
                    &local,
                );
                budget.charge(local.used());
                let a = angular?.estimate;
                Ok(Estimate {
                    value: rho * rho * a.value,
                    error: rho * rho * a.error,
                })
            },
            &breaks,
            outer,
            &budget,
        )?
    };

    let norm = 1.0 / (2.0 * PI * PI);
    let nodes = budget.used();
    let est = outcome.estimate;
    if !outcome.converged {
        return Err(Error::NonConvergence {
            estimate: norm * est.value,
            error: norm * est.error,
            nodes,
        });
    }
    Ok(StressResult {
        sigma_xx: norm * est.value,
        est_error: norm * est.error,
        node_count: nodes,
        slice,
        gap,
        stack_digest: stack.digest(),
    })
}

/// Geometric panel edges from `rho_max` down past the cavity scale, so the
/// first panels resolve the bulk of the integrand even when `rho_max` is far
/// beyond it.
fn radial_breaks(rho_max: f64, width: f64) -> Vec<f64> {
    let octaves = ((rho_max * width).log2().ceil() as i64 + 3).clamp(1, 60) as usize;
    let mut breaks = vec![0.0];
    for k in (0..octaves).rev() {
        breaks.push(rho_max / f64::powi(2.0, k as i32));
    }
    breaks
}

/// Stress in the layer holding `z`; layer spans are half-open `[z_i, z_{i+1})`.
pub fn stress_at(stack: &Stack, z: f64, cfg: &QuadratureConfig) -> Result<StressResult> {
    stress_at_point(stack, stack.locate(z)?, cfg)
}

/// Stress in the vacuum layer adjacent to one boundary; its
/// [`pressure`](StressResult::pressure) is the pressure on that mirror.
pub fn pressure_on_mirror(
    stack: &Stack,
    side: Side,
    cfg: &QuadratureConfig,
) -> Result<StressResult> {
    let slice = match side {
        Side::Left => 0,
        Side::Right => stack.len() - 1,
    };
    if !stack.layers()[slice].material.is_vacuum() {
        return Err(Error::InvalidGeometry(format!(
            "the layer next to the {} boundary is not vacuum",
            match side {
                Side::Left => "left",
                Side::Right => "right",
            }
        )));
    }
    stress_at_point(stack, slice, cfg)
}

/// `−π²/(240 d⁴)` between ideal mirrors in vacuum.
pub fn pressure_ideal(d: f64) -> f64 {
    -PI.powi(2) / (240.0 * d.powi(4))
}

/// Ideal-mirror pressure at the cavity's effective length.
pub fn pressure_cslice_analytic(d: f64, profile: &CompressionProfile) -> Result<f64> {
    Ok(pressure_ideal(effective_length(d, profile)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{
        cslice_material, dielectric_material, discretize, BoundarySpec, Layer, MaterialSpec,
        Profile,
    };
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cavity(layers: Vec<Layer>) -> Stack {
        Stack::new(BoundarySpec::IdealMirror, BoundarySpec::IdealMirror, layers).unwrap()
    }

    fn empty(d: f64) -> Stack {
        cavity(vec![Layer::new(d, MaterialSpec::VACUUM)])
    }

    #[test]
    fn closed_forms() {
        assert_relative_eq!(
            pressure_ideal(1.0),
            -0.041_123_351_671_205_66,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            pressure_ideal(2.0),
            -0.002_570_209_479_450_354,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            pressure_ideal(0.5),
            -0.657_973_626_739_290_6,
            max_relative = 1e-15
        );
        let wafer = Profile::constant((0.4, 0.6), 0.5).unwrap();
        assert_relative_eq!(
            pressure_cslice_analytic(1.0, &wafer).unwrap(),
            -0.019_831_863_267_363_84,
            max_relative = 1e-14
        );
        let dense = Profile::constant((0.4, 0.6), 2.0).unwrap();
        assert_relative_eq!(
            pressure_cslice_analytic(1.0, &dense).unwrap(),
            -0.062_678_481_437_594_36,
            max_relative = 1e-14
        );
        let thin = Profile::constant((0.5, 0.5 + 1e-300), 2.0);
        assert!(
            thin.is_err()
                || pressure_cslice_analytic(1.0, &thin.unwrap()).unwrap() == pressure_ideal(1.0)
        );
    }

    #[test]
    fn integrand_examples() {
        let z = ReflectionMatrix::ZERO;
        assert_eq!(stress_integrand(&z, &z, 1.0, 1.0).unwrap(), 0.0);
        let m = ReflectionMatrix::MIRROR;
        let v = stress_integrand(&m, &m, 1.0, 1.0).unwrap();
        let e = (-2.0_f64).exp();
        assert_relative_eq!(v, 2.0 * e / (1.0 - e), max_relative = 1e-15);
        assert_relative_eq!(v, 0.313_035_285_499_331_3, max_relative = 1e-15);

        let gain = ReflectionMatrix::diagonal(-1.0, -1.0);
        assert!(matches!(
            stress_integrand(&gain, &gain, 1.0, 0.0),
            Err(Error::Gain { .. })
        ));
        let mixed = ReflectionMatrix {
            ss: 0.3,
            sp: 0.1,
            ps: 0.0,
            pp: 0.2,
        };
        assert!(stress_integrand_scalar(&mixed, &m, 1.0, 1.0).is_err());
        assert!(stress_integrand(&mixed, &m, 1.0, 1.0).unwrap().is_finite());
    }

    proptest! {
        #[test]
        fn trace_equals_scalar_for_diagonal(
            a in -1.0f64..1.0, b in -1.0f64..1.0, c in -1.0f64..1.0, d in -1.0f64..1.0,
            w in 1e-3f64..50.0, gap in 1e-3f64..5.0,
        ) {
            let rl = ReflectionMatrix::diagonal(a, b);
            let rr = ReflectionMatrix::diagonal(c, d);
            let t = stress_integrand(&rl, &rr, w, gap).unwrap();
            let s = stress_integrand_scalar(&rl, &rr, w, gap).unwrap();
            prop_assert!((t - s).abs() <= 1e-12 * t.abs().max(s.abs()) + 1e-300);
        }

        #[test]
        fn ideal_mirror_integrand_is_positive(w in 1e-6f64..100.0, gap in 1e-6f64..10.0) {
            let m = ReflectionMatrix::MIRROR;
            let v = stress_integrand(&m, &m, w, gap).unwrap();
            prop_assert!(v > 0.0 || (-2.0 * w * gap).exp() == 0.0);
        }

        #[test]
        fn trace_is_ordering_invariant(
            l in prop::array::uniform4(-0.7f64..0.7),
            r in prop::array::uniform4(-0.7f64..0.7),
            w in 0.1f64..5.0,
        ) {
            let rl = ReflectionMatrix { ss: l[0], sp: l[1], ps: l[2], pp: l[3] };
            let rr = ReflectionMatrix { ss: r[0], sp: r[1], ps: r[2], pp: r[3] };
            let a = stress_integrand(&rl, &rr, w, 0.5).unwrap();
            let b = stress_integrand(&rr, &rl, w, 0.5).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
        }
    }

    #[test]
    fn empty_cavity_matches_closed_form() {
        let cfg = QuadratureConfig::default();
        for d in [0.5, 1.0, 2.0] {
            let r = pressure_on_mirror(&empty(d), Side::Left, &cfg).unwrap();
            assert_relative_eq!(r.pressure(), pressure_ideal(d), max_relative = 1e-8);
            assert!(r.est_error >= 0.0);
        }
    }

    #[test]
    fn empty_cavity_polar_matches_radial() {
        let cfg = QuadratureConfig {
            integration: Integration::Polar,
            ..Default::default()
        };
        let r = pressure_on_mirror(&empty(1.0), Side::Left, &cfg).unwrap();
        assert_relative_eq!(r.pressure(), pressure_ideal(1.0), max_relative = 1e-7);
    }

    #[test]
    fn open_space_has_no_stress() {
        let stack = Stack::new(
            BoundarySpec::Vacuum,
            BoundarySpec::Vacuum,
            vec![Layer::new(1.0, MaterialSpec::VACUUM)],
        )
        .unwrap();
        let r = stress_at_point(&stack, 0, &QuadratureConfig::default()).unwrap();
        assert!(r.sigma_xx.abs() <= 1e-14);
    }

    #[test]
    fn tiny_budget_fails_loudly() {
        let cfg = QuadratureConfig {
            max_nodes: 16,
            ..Default::default()
        };
        assert!(matches!(
            pressure_on_mirror(&empty(1.0), Side::Left, &cfg),
            Err(Error::NonConvergence { .. })
        ));
        let bad = QuadratureConfig {
            max_nodes: 15,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn wafer_pressure_is_the_same_on_both_mirrors() {
        let wafer = Profile::linear((0.3, 0.55), 0.6, 2.0).unwrap();
        let stack = discretize(
            &wafer,
            (BoundarySpec::IdealMirror, BoundarySpec::IdealMirror),
            1.0,
            8,
        )
        .unwrap();
        let cfg = QuadratureConfig::default();
        let l = pressure_on_mirror(&stack, Side::Left, &cfg).unwrap();
        let r = pressure_on_mirror(&stack, Side::Right, &cfg).unwrap();
        assert_relative_eq!(l.pressure(), r.pressure(), max_relative = 1e-8);
    }

    #[test]
    fn constant_wafer_matches_effective_length() {
        let wafer = Profile::constant((0.4, 0.6), 0.5).unwrap();
        let stack = discretize(
            &wafer,
            (BoundarySpec::IdealMirror, BoundarySpec::IdealMirror),
            1.0,
            4,
        )
        .unwrap();
        let r = pressure_on_mirror(&stack, Side::Left, &QuadratureConfig::default()).unwrap();
        assert_relative_eq!(
            r.pressure(),
            pressure_cslice_analytic(1.0, &wafer).unwrap(),
            max_relative = 1e-7
        );
    }

    #[test]
    fn stress_inside_a_cslice_layer_is_the_virtual_cavity_stress() {
        // Inside a layer of compression m the local w is w₀/m and the local
        // gap g, so σ scales as the virtual-cavity stress times 1/m.
        let m = 2.0;
        let stack = cavity(vec![
            Layer::new(0.3, MaterialSpec::VACUUM),
            Layer::new(0.4, cslice_material(m).unwrap()),
            Layer::new(0.3, MaterialSpec::VACUUM),
        ]);
        let cfg = QuadratureConfig::default();
        let inside = stress_at(&stack, 0.5, &cfg).unwrap();
        let mirror = pressure_on_mirror(&stack, Side::Left, &cfg).unwrap();
        assert_eq!(inside.slice, 1);
        assert_relative_eq!(inside.sigma_xx, mirror.sigma_xx / m, max_relative = 1e-7);
    }

    #[test]
    fn rejects_unsupported_media() {
        let biaxial = MaterialSpec::new([1.0, 2.0, 3.0], [1.0; 3]).unwrap();
        let stack = cavity(vec![
            Layer::new(0.5, MaterialSpec::VACUUM),
            Layer::new(0.5, biaxial),
        ]);
        assert!(matches!(
            stress_at_point(&stack, 0, &QuadratureConfig::default()),
            Err(Error::Unsupported(_))
        ));
        let split = MaterialSpec::new([2.0, 2.0, 5.0], [1.0; 3]).unwrap();
        let stack = cavity(vec![
            Layer::new(0.5, split),
            Layer::new(0.5, MaterialSpec::VACUUM),
        ]);
        assert!(matches!(
            stress_at_point(&stack, 0, &QuadratureConfig::default()),
            Err(Error::Unsupported(_))
        ));
        // A dielectric next to the mirror has no vacuum layer to evaluate in.
        let stack = cavity(vec![Layer::new(1.0, dielectric_material(2.0).unwrap())]);
        assert!(pressure_on_mirror(&stack, Side::Left, &QuadratureConfig::default()).is_err());
        let radial = QuadratureConfig {
            integration: Integration::Radial,
            ..Default::default()
        };
        assert!(stress_at_point(&stack, 0, &radial).is_err());
    }

    #[test]
    fn scalar_path_matches_trace_path() {
        let stack = cavity(vec![
            Layer::new(0.4, MaterialSpec::VACUUM),
            Layer::new(0.2, dielectric_material(3.0).unwrap()),
            Layer::new(0.4, MaterialSpec::VACUUM),
        ]);
        let trace = pressure_on_mirror(&stack, Side::Left, &QuadratureConfig::default()).unwrap();
        let scalar = pressure_on_mirror(
            &stack,
            Side::Left,
            &QuadratureConfig {
                integrand: IntegrandForm::Scalar,
                ..Default::default()
            },
        )
        .unwrap();
        assert_relative_eq!(trace.sigma_xx, scalar.sigma_xx, max_relative = 1e-12);
        assert!(trace.sigma_xx > 0.0);
    }
}
