//! Plane-wave eigenmodes of a homogeneous diagonal-anisotropic slab on the
//! imaginary frequency axis.
//!
//! With `ω = iκ` and the plane of incidence rotated onto xz, a mode has the
//! form `exp(i k∥ x − q z)`. The axial constant `q` is real: `q > 0` decays
//! toward `+z` (rightward), `q < 0` toward `−z` (leftward).
//!
//! The z components of `e` and `h` carry a factor `i` relative to the
//! tangential components. Vectors here store that factor stripped, i.e.
//! `E = (e_x, e_y, i e_z)`, so every quantity is real. Tangential
//! components, which are all the transfer matrices need, are unaffected.

use nalgebra::{Matrix3, Matrix4, Vector3};

use crate::error::{Error, Result};
use crate::materials::MaterialSpec;

/// `(κ, k∥)` with `ω = iκ`, `k_x = k∥`, `k_y = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPoint {
    kappa: f64,
    kpar: f64,
}

impl SpectralPoint {
    pub fn new(kappa: f64, kpar: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0 && kpar.is_finite() && kpar >= 0.0) {
            return Err(Error::InvalidSpectralPoint { kappa, kpar });
        }
        Ok(Self { kappa, kpar })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kpar(&self) -> f64 {
        self.kpar
    }

    /// Vacuum axial constant `√(κ² + k∥²)`.
    pub fn vacuum_wavenumber(&self) -> f64 {
        self.kappa.hypot(self.kpar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Rightward,
    Leftward,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    /// Electric field along y, perpendicular to the plane of incidence.
    S,
    /// Electric field in the xz plane.
    P,
}

/// Wave-equation matrix `W(q)` acting on `(e_x, e_y, e_z)`.
///
/// This is `ε⁻¹ {k × [μ⁻¹ (k × E)]} + ω² E = 0` multiplied through by `ε`,
/// with `ω² → −κ²` and `k_z → i q`; the third row is divided by `i` to keep
/// the matrix real under the stripped-`i` convention for `e_z`.
pub fn wave_matrix(material: &MaterialSpec, sp: SpectralPoint, q: f64) -> Matrix3<f64> {
    let [ex, ey, ez] = material.eps();
    let [mx, my, mz] = material.mu();
    let k2 = sp.kappa * sp.kappa;
    let kx = sp.kpar;
    Matrix3::new(
        q * q / my - k2 * ex,
        0.0,
        -q * kx / my,
        0.0,
        q * q / mx - k2 * ey - kx * kx / mz,
        0.0,
        q * kx / my,
        0.0,
        -k2 * ez - kx * kx / my,
    )
}

/// Squared axial constants `(q_s², q_p²)`.
///
/// With `k_y = 0` the secular determinant factorizes into the s block
/// `W_yy` and the xz block; each is linear in `u = q²`, and the roots are
/// read off their coefficients.
fn secular_roots(material: &MaterialSpec, kappa: f64, kpar: f64) -> (f64, f64) {
    let [ex, ey, ez] = material.eps();
    let [mx, my, mz] = material.mu();
    let k2 = kappa * kappa;
    let kx2 = kpar * kpar;
    // W_yy(u) = u/mx − (k2 ey + kx2/mz)
    let s_root = mx * (k2 * ey + kx2 / mz);
    // det_xz(u) = −u k2 ez/my + k2 ex (k2 ez + kx2/my)
    let p_root = ex * (k2 * ez + kx2 / my) * my / ez;
    (s_root, p_root)
}

/// Rightward axial constants `(q_s, q_p)`.
pub fn axial_pair(material: &MaterialSpec, sp: SpectralPoint) -> Result<(f64, f64)> {
    let (us, up) = secular_roots(material, sp.kappa, sp.kpar);
    let mut out = [0.0; 2];
    for (slot, u) in out.iter_mut().zip([us, up]) {
        if !(u.is_finite() && u > 0.0) {
            return Err(Error::SecularSolve {
                material: material.to_string(),
                kappa: sp.kappa,
                kpar: sp.kpar,
                reason: format!("secular root q^2 = {u} has no positive square root"),
            });
        }
        *slot = u.sqrt();
    }
    Ok((out[0], out[1]))
}

/// Smallest axial constant per unit `|(κ, k∥)|` over all directions in the
/// `(κ, k∥)` quarter plane, for uniaxial media.
pub(crate) fn min_axial_slope(material: &MaterialSpec) -> f64 {
    let (s0, p0) = secular_roots(material, 1.0, 0.0);
    let (s1, p1) = secular_roots(material, 0.0, 1.0);
    s0.min(p0).min(s1).min(p1).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxialConstant {
    pub q: f64,
    pub multiplicity: usize,
}

/// The distinct rightward axial constants, with multiplicity.
pub fn axial_constants(material: &MaterialSpec, sp: SpectralPoint) -> Result<Vec<AxialConstant>> {
    let (qs, qp) = axial_pair(material, sp)?;
    if (qs - qp).abs() <= 4.0 * f64::EPSILON * qs.max(qp) {
        Ok(vec![AxialConstant {
            q: qs,
            multiplicity: 2,
        }])
    } else {
        let (lo, hi) = if qs < qp { (qs, qp) } else { (qp, qs) };
        Ok(vec![
            AxialConstant {
                q: lo,
                multiplicity: 1,
            },
            AxialConstant {
                q: hi,
                multiplicity: 1,
            },
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    /// Unit electric polarization (stripped-`i` z component).
    pub e: Vector3<f64>,
    /// Magnetic polarization `h = (1/ω) μ⁻¹ (k × e)`.
    pub h: Vector3<f64>,
    /// Signed axial constant; positive for rightward modes.
    pub q: f64,
    pub direction: Direction,
    pub polarization: Polarization,
}

/// Four modes ordered (rightward s, leftward s, rightward p, leftward p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeBasis {
    pub modes: [Mode; 4],
    material: MaterialSpec,
    point: SpectralPoint,
}

impl ModeBasis {
    pub fn material(&self) -> &MaterialSpec {
        &self.material
    }

    pub fn point(&self) -> SpectralPoint {
        self.point
    }

    /// `(q_s, q_p)` of the rightward modes.
    pub fn axial_pair(&self) -> (f64, f64) {
        (self.modes[0].q, self.modes[2].q)
    }

    /// Largest relative residual `‖W(q) e‖ / (‖W‖ ‖e‖)` over the four modes.
    pub fn max_residual(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let w = wave_matrix(&self.material, self.point, m.q);
                (w * m.e).norm() / (w.norm() * m.e.norm())
            })
            .fold(0.0, f64::max)
    }
}

fn magnetic(material: &MaterialSpec, sp: SpectralPoint, q: f64, e: &Vector3<f64>) -> Vector3<f64> {
    let [mx, my, mz] = material.mu();
    let kx = sp.kpar;
    let kappa = sp.kappa;
    Vector3::new(
        -q * e.y / (kappa * mx),
        (q * e.x - kx * e.z) / (kappa * my),
        -kx * e.y / (kappa * mz),
    )
}

pub fn mode_basis(material: &MaterialSpec, sp: SpectralPoint) -> Result<ModeBasis> {
    let (qs, qp) = axial_pair(material, sp)?;
    let [_, my, _] = material.mu();
    let [_, _, ez] = material.eps();
    let kx = sp.kpar;
    let transverse = sp.kappa * sp.kappa * ez * my + kx * kx;

    let build = |polarization, direction| {
        let sign = match direction {
            Direction::Rightward => 1.0,
            Direction::Leftward => -1.0,
        };
        let (q, e, h) = match polarization {
            Polarization::S => {
                let q = sign * qs;
                let e = Vector3::new(0.0, 1.0, 0.0);
                (q, e, magnetic(material, sp, q, &e))
            }
            Polarization::P => {
                let q = sign * qp;
                // Null vector of the xz block; reduces to x̂ at normal incidence.
                let raw = Vector3::new(transverse, 0.0, q * kx);
                let norm = raw.norm();
                // q·transverse − k∥·q·k∥ = q κ² ε_z μ_y, taken in closed form
                // because the difference cancels badly when κ ≪ k∥.
                let hy = q * sp.kappa * ez / norm;
                (q, raw / norm, Vector3::new(0.0, hy, 0.0))
            }
        };
        Mode {
            e,
            h,
            q,
            direction,
            polarization,
        }
    };

    Ok(ModeBasis {
        modes: [
            build(Polarization::S, Direction::Rightward),
            build(Polarization::S, Direction::Leftward),
            build(Polarization::P, Direction::Rightward),
            build(Polarization::P, Direction::Leftward),
        ],
        material: *material,
        point: sp,
    })
}

/// Tangential field components of the four modes.
///
/// Rows are `(e·ŷ, h·x̂, h·ŷ, e·x̂)`, columns follow the [`ModeBasis`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicalMatrix(pub Matrix4<f64>);

impl DynamicalMatrix {
    /// Inverse, rejected when singular or worse conditioned than `1e14`
    /// in the 1-norm.
    pub fn inverse(&self, sp: SpectralPoint) -> Result<Matrix4<f64>> {
        let inv = self.0.try_inverse();
        let condition = match &inv {
            Some(inv) => one_norm(&self.0) * one_norm(inv),
            None => f64::INFINITY,
        };
        match inv {
            Some(inv) if condition.is_finite() && condition < 1e14 => Ok(inv),
            _ => Err(Error::SingularDynamicalMatrix {
                condition,
                kappa: sp.kappa,
                kpar: sp.kpar,
            }),
        }
    }

    pub fn condition_number(&self) -> f64 {
        match self.0.try_inverse() {
            Some(inv) => one_norm(&self.0) * one_norm(&inv),
            None => f64::INFINITY,
        }
    }
}

fn one_norm(m: &Matrix4<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn dynamical_matrix(basis: &ModeBasis) -> DynamicalMatrix {
    let mut d = Matrix4::zeros();
    for (col, mode) in basis.modes.iter().enumerate() {
        d[(0, col)] = mode.e.y;
        d[(1, col)] = mode.h.x;
        d[(2, col)] = mode.h.y;
        d[(3, col)] = mode.e.x;
    }
    DynamicalMatrix(d)
}
