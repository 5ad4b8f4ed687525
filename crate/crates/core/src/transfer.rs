//! Interface, propagation and cumulative transfer matrices, reflection
//! matrices of half-space splits, and the isotropic closed-form oracles.
//!
//! Amplitude vectors follow the [`ModeBasis`](crate::wavesolver::ModeBasis)
//! order `(s→, s←, p→, p←)` and are referenced at the left edge of their
//! layer. Stack positions use extended indices: `0` is the left boundary,
//! `1..=N` are the layers, `N + 1` is the right boundary. Layer `i` of
//! [`Stack::layers`] has extended index `i + 1`.
//!
//! An ideal mirror is treated as a pseudo half-space whose interface matrix
//! forces the tangential electric field to vanish; with no incoming wave from
//! the far side this closes the stack with `r = −1` in both polarizations.

use nalgebra::{Matrix2, Matrix4};

use crate::error::{Error, Result};
use crate::materials::{BoundarySpec, MaterialSpec, Stack};
use crate::wavesolver::{dynamical_matrix, mode_basis, SpectralPoint};

/// Largest `|q·thickness|` a propagation factor may carry.
pub const MAX_EXPONENT: f64 = 700.0;

const FORWARD: [usize; 2] = [0, 2];
const BACKWARD: [usize; 2] = [1, 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub matrix: Matrix4<f64>,
    /// Extended indices `(from, to)` the matrix carries amplitudes between.
    pub span: (usize, usize),
}

impl TransferMatrix {
    pub fn identity(at: usize) -> Self {
        Self {
            matrix: Matrix4::identity(),
            span: (at, at),
        }
    }

    /// `later · self`, for `later` starting where `self` ends.
    pub fn then(&self, later: &TransferMatrix) -> Result<TransferMatrix> {
        if later.span.0 != self.span.1 {
            return Err(Error::InvalidGeometry(format!(
                "cannot chain transfer spans {:?} and {:?}",
                self.span, later.span
            )));
        }
        let span = (self.span.0, later.span.1);
        let matrix = later.matrix * self.matrix;
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::TransferOverflow { span });
        }
        Ok(TransferMatrix { matrix, span })
    }

    /// Whether every off-diagonal entry is below `tol` times the largest entry.
    pub fn is_diagonal(&self, tol: f64) -> bool {
        let scale = self.matrix.amax();
        (0..4).all(|r| (0..4).all(|c| r == c || self.matrix[(r, c)].abs() <= tol * scale))
    }
}

/// Reflection amplitudes `r_pq = (reflected p) / (incident q)`, measured by
/// the tangential electric field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReflectionMatrix {
    pub ss: f64,
    pub sp: f64,
    pub ps: f64,
    pub pp: f64,
}

impl ReflectionMatrix {
    pub const ZERO: ReflectionMatrix = ReflectionMatrix {
        ss: 0.0,
        sp: 0.0,
        ps: 0.0,
        pp: 0.0,
    };

    /// Ideal conductor.
    pub const MIRROR: ReflectionMatrix = ReflectionMatrix {
        ss: -1.0,
        sp: 0.0,
        ps: 0.0,
        pp: -1.0,
    };

    pub fn diagonal(rs: f64, rp: f64) -> Self {
        Self {
            ss: rs,
            sp: 0.0,
            ps: 0.0,
            pp: rp,
        }
    }

    /// Operator mapping incident `(s, p)` to reflected `(s, p)`.
    pub fn as_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.ss, self.sp, self.ps, self.pp)
    }

    pub fn from_matrix(m: &Matrix2<f64>) -> Self {
        Self {
            ss: m[(0, 0)],
            sp: m[(0, 1)],
            ps: m[(1, 0)],
            pp: m[(1, 1)],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.ss
            .abs()
            .max(self.sp.abs())
            .max(self.ps.abs())
            .max(self.pp.abs())
    }

    pub fn is_diagonal(&self) -> bool {
        self.sp == 0.0 && self.ps == 0.0
    }
}

/// `D_right⁻¹ · D_left`.
pub fn interface_matrix(
    left: &MaterialSpec,
    right: &MaterialSpec,
    sp: SpectralPoint,
) -> Result<TransferMatrix> {
    Ok(TransferMatrix {
        matrix: interface_block(left, right, sp)?,
        span: (0, 1),
    })
}

fn interface_block(
    left: &MaterialSpec,
    right: &MaterialSpec,
    sp: SpectralPoint,
) -> Result<Matrix4<f64>> {
    if left == right {
        return Ok(Matrix4::identity());
    }
    let d_left = dynamical_matrix(&mode_basis(left, sp)?);
    let d_right = dynamical_matrix(&mode_basis(right, sp)?);
    Ok(d_right.inverse(sp)? * d_left.0)
}

/// `diag(e^{−q_s t}, e^{q_s t}, e^{−q_p t}, e^{q_p t})`.
pub fn propagation_matrix(
    material: &MaterialSpec,
    thickness: f64,
    sp: SpectralPoint,
) -> Result<TransferMatrix> {
    if !(thickness.is_finite() && thickness >= 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "propagation thickness must be non-negative, got {thickness}"
        )));
    }
    let basis = mode_basis(material, sp)?;
    let mut matrix = Matrix4::zeros();
    for (i, mode) in basis.modes.iter().enumerate() {
        let exponent = -mode.q * thickness;
        if exponent.abs() > MAX_EXPONENT {
            return Err(Error::PropagationOverflow { exponent });
        }
        matrix[(i, i)] = exponent.exp();
    }
    Ok(TransferMatrix {
        matrix,
        span: (0, 0),
    })
}

/// Left pseudo half-space → first layer for an ideal mirror: only leftward
/// pseudo amplitudes exist, and each produces `f = −b` in the layer.
fn left_mirror_closure() -> Matrix4<f64> {
    Matrix4::new(
        1.0, -1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, -1.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// Last layer → right pseudo half-space for an ideal mirror: the pseudo
/// leftward amplitude is the tangential field `f + b`, which must vanish.
fn right_mirror_closure() -> Matrix4<f64> {
    Matrix4::new(
        1.0, 0.0, 0.0, 0.0, //
        1.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0, 1.0,
    )
}

/// Medium at an extended index; `None` for an ideal-mirror boundary.
fn medium_at(stack: &Stack, idx: usize) -> Option<MaterialSpec> {
    let n = stack.len();
    if idx == 0 {
        stack.left().medium()
    } else if idx <= n {
        Some(stack.layers()[idx - 1].material)
    } else {
        stack.right().medium()
    }
}

/// Interface matrix from extended index `idx − 1` to `idx`.
fn step_interface(stack: &Stack, idx: usize, sp: SpectralPoint) -> Result<Matrix4<f64>> {
    let n = stack.len();
    if idx == 1 && stack.left() == BoundarySpec::IdealMirror {
        return Ok(left_mirror_closure());
    }
    if idx == n + 1 && stack.right() == BoundarySpec::IdealMirror {
        return Ok(right_mirror_closure());
    }
    let (Some(a), Some(b)) = (medium_at(stack, idx - 1), medium_at(stack, idx)) else {
        unreachable!("mirror boundaries are handled above")
    };
    interface_block(&a, &b, sp)
}

/// Propagation across extended index `idx`; the identity for boundaries.
fn step_propagation(stack: &Stack, idx: usize, sp: SpectralPoint) -> Result<Matrix4<f64>> {
    if idx == 0 || idx > stack.len() {
        return Ok(Matrix4::identity());
    }
    let layer = stack.layers()[idx - 1];
    Ok(propagation_matrix(&layer.material, layer.thickness, sp)?.matrix)
}

/// `∏_{j = from+1}^{to} M(j−1 → j) · Φ(j−1)`, later factors on the left.
///
/// `from == to` gives the identity. Amplitudes at `from` are referenced at
/// the left edge of that layer (at `z = 0` for the left boundary).
pub fn stack_transfer(
    stack: &Stack,
    from: usize,
    to: usize,
    sp: SpectralPoint,
) -> Result<TransferMatrix> {
    let last = stack.len() + 1;
    if from > to || to > last {
        return Err(Error::InvalidGeometry(format!(
            "transfer range {from}..{to} is outside 0..{last}"
        )));
    }
    let mut matrix = Matrix4::identity();
    for j in from + 1..=to {
        matrix = step_interface(stack, j, sp)? * step_propagation(stack, j - 1, sp)? * matrix;
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::TransferOverflow { span: (from, j) });
        }
    }
    Ok(TransferMatrix {
        matrix,
        span: (from, to),
    })
}

fn block(m: &Matrix4<f64>, rows: [usize; 2], cols: [usize; 2]) -> Matrix2<f64> {
    Matrix2::new(
        m[(rows[0], cols[0])],
        m[(rows[0], cols[1])],
        m[(rows[1], cols[0])],
        m[(rows[1], cols[1])],
    )
}

fn checked_inverse(m: &Matrix2<f64>) -> Result<Matrix2<f64>> {
    let det = m.determinant();
    let scale = m.amax() * m.amax();
    if !(det.is_finite() && det.abs() > 1e-300 && det.abs() > 1e-15 * scale) {
        return Err(Error::VanishingDenominator { denominator: det });
    }
    Ok(Matrix2::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)]) / det)
}

/// Reflection seen from the start of `t` when nothing returns from its end.
///
/// With 1-based entries and `Δ = M₂₂M₄₄ − M₂₄M₄₂`:
/// `r_ss = (M₂₄M₄₁ − M₂₁M₄₄)/Δ`, `r_sp = (M₂₄M₄₃ − M₂₃M₄₄)/Δ`,
/// `r_ps = (M₂₁M₄₂ − M₂₂M₄₁)/Δ`, `r_pp = (M₂₃M₄₂ − M₂₂M₄₃)/Δ`.
pub fn reflection_matrix(t: &TransferMatrix) -> Result<ReflectionMatrix> {
    let m = |r: usize, c: usize| t.matrix[(r - 1, c - 1)];
    let det = m(2, 2) * m(4, 4) - m(2, 4) * m(4, 2);
    let scale = m(2, 2)
        .abs()
        .max(m(4, 4).abs())
        .max(m(2, 4).abs())
        .max(m(4, 2).abs());
    if !(det.is_finite() && det != 0.0 && det.abs() > 1e-15 * scale * scale) {
        return Err(Error::VanishingDenominator { denominator: det });
    }
    Ok(ReflectionMatrix {
        ss: (m(2, 4) * m(4, 1) - m(2, 1) * m(4, 4)) / det,
        sp: (m(2, 4) * m(4, 3) - m(2, 3) * m(4, 4)) / det,
        ps: (m(2, 1) * m(4, 2) - m(2, 2) * m(4, 1)) / det,
        pp: (m(2, 3) * m(4, 2) - m(2, 2) * m(4, 3)) / det,
    })
}

/// Reflection seen from the end of `t` when nothing enters from its start:
/// forward amplitudes produced per unit backward amplitude.
pub fn left_reflection_matrix(t: &TransferMatrix) -> Result<ReflectionMatrix> {
    let fb = block(&t.matrix, FORWARD, BACKWARD);
    let bb = block(&t.matrix, BACKWARD, BACKWARD);
    Ok(ReflectionMatrix::from_matrix(&(fb * checked_inverse(&bb)?)))
}

/// Reflection matrices seen from inside one layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceReflections {
    /// Toward the left boundary, at the layer's left edge.
    pub left: ReflectionMatrix,
    /// Toward the right boundary, at the layer's right edge.
    pub right: ReflectionMatrix,
    /// Rightward `(q_s, q_p)` in the layer.
    pub axial: (f64, f64),
    pub thickness: f64,
}

/// Half-space split about layer `slice` (0-based) by products of transfer
/// matrices. Exact in algebra but loses precision, then overflows, once
/// `q · d` grows past a few hundred; kept as the reference route.
pub fn slice_reflections_via_transfer(
    stack: &Stack,
    slice: usize,
    sp: SpectralPoint,
) -> Result<SliceReflections> {
    let idx = checked_slice(stack, slice)?;
    let layer = stack.layers()[slice];
    let t_left = stack_transfer(stack, 0, idx, sp)?;
    let t_right = stack_transfer(stack, idx, stack.len() + 1, sp)?;
    let at_left_edge = reflection_matrix(&t_right)?.as_matrix();
    let (qs, qp) = crate::wavesolver::axial_pair(&layer.material, sp)?;
    let grow = Matrix2::new(
        (qs * layer.thickness).exp(),
        0.0,
        0.0,
        (qp * layer.thickness).exp(),
    );
    Ok(SliceReflections {
        left: left_reflection_matrix(&t_left)?,
        right: ReflectionMatrix::from_matrix(&(grow * at_left_edge * grow)),
        axial: (qs, qp),
        thickness: layer.thickness,
    })
}

fn checked_slice(stack: &Stack, slice: usize) -> Result<usize> {
    if slice >= stack.len() {
        return Err(Error::InvalidGeometry(format!(
            "slice {slice} is outside a stack of {} layers",
            stack.len()
        )));
    }
    Ok(slice + 1)
}

/// Half-space split about layer `slice` (0-based) by layer-by-layer
/// reflection recursion. Only decaying exponentials appear, so it is stable
/// for arbitrarily thick stacks. Identical neighbours are skipped exactly.
pub fn slice_reflections(
    stack: &Stack,
    slice: usize,
    sp: SpectralPoint,
) -> Result<SliceReflections> {
    let idx = checked_slice(stack, slice)?;
    let n = stack.len();
    let decay = |j: usize| -> Result<Matrix2<f64>> {
        let layer = stack.layers()[j - 1];
        let (qs, qp) = crate::wavesolver::axial_pair(&layer.material, sp)?;
        Ok(Matrix2::new(
            (-qs * layer.thickness).exp(),
            0.0,
            0.0,
            (-qp * layer.thickness).exp(),
        ))
    };
    let same = |a: usize, b: usize| match (medium_at(stack, a), medium_at(stack, b)) {
        (Some(x), Some(y)) => x == y,
        _ => false,
    };

    // Rightward: reflection at the right edge of layer j, starting from the
    // right boundary (nothing returns from beyond it).
    let mut right = Matrix2::zeros();
    for j in (idx..=n).rev() {
        if j < n {
            let p = decay(j + 1)?;
            right = p * right * p;
        }
        if same(j, j + 1) {
            continue;
        }
        let m = step_interface(stack, j + 1, sp)?;
        let lhs = block(&m, BACKWARD, BACKWARD) - right * block(&m, FORWARD, BACKWARD);
        let rhs = right * block(&m, FORWARD, FORWARD) - block(&m, BACKWARD, FORWARD);
        right = checked_inverse(&lhs)? * rhs;
    }

    // Leftward: reflection at the left edge of layer j.
    let mut left = Matrix2::zeros();
    for j in 1..=idx {
        if j > 1 {
            let p = decay(j - 1)?;
            left = p * left * p;
        }
        if same(j - 1, j) {
            continue;
        }
        let m = step_interface(stack, j, sp)?;
        let num = block(&m, FORWARD, FORWARD) * left + block(&m, FORWARD, BACKWARD);
        let den = block(&m, BACKWARD, FORWARD) * left + block(&m, BACKWARD, BACKWARD);
        left = num * checked_inverse(&den)?;
    }

    let layer = stack.layers()[slice];
    Ok(SliceReflections {
        left: ReflectionMatrix::from_matrix(&left),
        right: ReflectionMatrix::from_matrix(&right),
        axial: crate::wavesolver::axial_pair(&layer.material, sp)?,
        thickness: layer.thickness,
    })
}

fn isotropic_w(eps: f64, mu: f64, sp: SpectralPoint) -> f64 {
    (eps * mu * sp.kappa() * sp.kappa() + sp.kpar() * sp.kpar()).sqrt()
}

/// Isotropic interface reflection `(r_s, r_p)` for a wave in `in` meeting `out`.
pub fn fresnel_isotropic(
    eps_in: f64,
    mu_in: f64,
    eps_out: f64,
    mu_out: f64,
    sp: SpectralPoint,
) -> (f64, f64) {
    let w_in = isotropic_w(eps_in, mu_in, sp);
    let w_out = isotropic_w(eps_out, mu_out, sp);
    let rs = (mu_out * w_in - mu_in * w_out) / (mu_out * w_in + mu_in * w_out);
    let rp = -(eps_out * w_in - eps_in * w_out) / (eps_out * w_in + eps_in * w_out);
    (rs, rp)
}

/// Three-medium Airy reflection `(r_s, r_p)` seen from medium 0; `width` is
/// the thickness of medium 1.
pub fn airy_reflection(eps: [f64; 3], mu: [f64; 3], width: f64, sp: SpectralPoint) -> (f64, f64) {
    airy_multilayer(&eps, &mu, &[width], sp)
}

/// Airy recursion over isotropic media `0..n`, with `widths` the thicknesses
/// of the interior media `1..n−1`; seen from medium 0.
pub fn airy_multilayer(eps: &[f64], mu: &[f64], widths: &[f64], sp: SpectralPoint) -> (f64, f64) {
    let n = eps.len();
    assert!(
        n >= 2 && mu.len() == n && widths.len() == n - 2,
        "inconsistent Airy geometry"
    );
    let (mut rs, mut rp) = fresnel_isotropic(eps[n - 2], mu[n - 2], eps[n - 1], mu[n - 1], sp);
    for j in (1..n - 1).rev() {
        let phase = (-2.0 * isotropic_w(eps[j], mu[j], sp) * widths[j - 1]).exp();
        let (fs, fp) = fresnel_isotropic(eps[j - 1], mu[j - 1], eps[j], mu[j], sp);
        rs = (fs + rs * phase) / (1.0 + fs * rs * phase);
        rp = (fp + rp * phase) / (1.0 + fp * rp * phase);
    }
    (rs, rp)
}
