//! Materials, cavity geometry and the slicing of continuous profiles.

mod profile;

pub use profile::{
    compression_factor, effective_length, parse_table, read_table, virtual_width,
    CompressionProfile, Profile, ProfileShape, ProfileSpec,
};

use std::fmt;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Diagonal relative permittivity and permeability of a homogeneous slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialSpec {
    eps: [f64; 3],
    mu: [f64; 3],
}

impl MaterialSpec {
    pub const VACUUM: MaterialSpec = MaterialSpec {
        eps: [1.0; 3],
        mu: [1.0; 3],
    };

    pub fn new(eps: [f64; 3], mu: [f64; 3]) -> Result<Self> {
        for (name, v) in [("eps", eps), ("mu", mu)] {
            if v.iter().any(|c| !c.is_finite() || *c <= 0.0) {
                return Err(Error::InvalidMaterial(format!(
                    "{name} components must be finite and positive, got {v:?}"
                )));
            }
        }
        Ok(Self { eps, mu })
    }

    pub fn isotropic(eps: f64, mu: f64) -> Result<Self> {
        Self::new([eps; 3], [mu; 3])
    }

    pub fn eps(&self) -> [f64; 3] {
        self.eps
    }

    pub fn mu(&self) -> [f64; 3] {
        self.mu
    }

    pub fn is_vacuum(&self) -> bool {
        *self == Self::VACUUM
    }

    pub fn is_isotropic(&self) -> bool {
        self.eps.iter().all(|&e| e == self.eps[0]) && self.mu.iter().all(|&m| m == self.mu[0])
    }

    /// Rotationally symmetric about the z axis.
    pub fn is_uniaxial(&self) -> bool {
        self.eps[0] == self.eps[1] && self.mu[0] == self.mu[1]
    }

    /// Impedance matched (`eps = mu`) with `eps_x = eps_y = 1/eps_z`,
    /// compared to a few ulps.
    pub fn is_cslice(&self) -> bool {
        let close = |x: f64, y: f64| (x - y).abs() <= 4.0 * f64::EPSILON * x.abs().max(y.abs());
        self.eps == self.mu && self.eps[0] == self.eps[1] && close(self.eps[0] * self.eps[2], 1.0)
    }

    /// Whether both polarizations share one axial constant at every spectral point.
    pub fn has_degenerate_polarizations(&self) -> bool {
        let [ex, ey, ez] = self.eps;
        let [mx, my, mz] = self.mu;
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-14 * x.abs().max(y.abs());
        close(mx * ey, ex * my) && close(mx / mz, ex / ez)
    }
}

impl fmt::Display for MaterialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "eps=diag({}, {}, {}) mu=diag({}, {}, {})",
            self.eps[0], self.eps[1], self.eps[2], self.mu[0], self.mu[1], self.mu[2]
        )
    }
}

/// C-slice tensors `eps = mu = diag(1/m, 1/m, m)`.
pub fn cslice_material(m: f64) -> Result<MaterialSpec> {
    if !(m.is_finite() && m > 0.0) {
        return Err(Error::InvalidMaterial(format!(
            "compression factor must be finite and positive, got {m}"
        )));
    }
    let t = [1.0 / m, 1.0 / m, m];
    MaterialSpec::new(t, t)
}

/// Dielectric with scalar permittivity and `mu = 1`.
pub fn dielectric_material(eps: f64) -> Result<MaterialSpec> {
    MaterialSpec::isotropic(eps, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundarySpec {
    /// Perfect conductor: `r_ss = r_pp = -1`, no polarization mixing.
    IdealMirror,
    Vacuum,
    HalfSpace(MaterialSpec),
}

impl BoundarySpec {
    /// The semi-infinite medium, if the boundary is one.
    pub fn medium(&self) -> Option<MaterialSpec> {
        match self {
            BoundarySpec::IdealMirror => None,
            BoundarySpec::Vacuum => Some(MaterialSpec::VACUUM),
            BoundarySpec::HalfSpace(m) => Some(*m),
        }
    }
}

impl fmt::Display for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundarySpec::IdealMirror => write!(f, "mirror"),
            BoundarySpec::Vacuum => write!(f, "vacuum"),
            BoundarySpec::HalfSpace(m) => write!(f, "halfspace[{m}]"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub thickness: f64,
    pub material: MaterialSpec,
}

impl Layer {
    pub fn new(thickness: f64, material: MaterialSpec) -> Self {
        Self {
            thickness,
            material,
        }
    }
}

/// Homogeneous layers between two boundaries, tiling `[0, d]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stack {
    left: BoundarySpec,
    right: BoundarySpec,
    layers: Vec<Layer>,
    edges: Vec<f64>,
}

impl Stack {
    pub fn new(left: BoundarySpec, right: BoundarySpec, layers: Vec<Layer>) -> Result<Self> {
        let mut edges = Vec::with_capacity(layers.len() + 1);
        let mut z = 0.0;
        edges.push(z);
        for layer in &layers {
            z += layer.thickness;
            edges.push(z);
        }
        Self::assemble(left, right, layers, edges)
    }

    /// Stack whose layer thicknesses must add up to `width` (1e-12 relative).
    pub fn with_width(
        left: BoundarySpec,
        right: BoundarySpec,
        layers: Vec<Layer>,
        width: f64,
    ) -> Result<Self> {
        let stack = Self::new(left, right, layers)?;
        let total = stack.width();
        if !((total - width).abs() <= 1e-12 * width.abs()) {
            return Err(Error::InvalidGeometry(format!(
                "layer thicknesses sum to {total}, expected {width}"
            )));
        }
        Ok(stack)
    }

    /// Layers given by explicit edge positions `edges[0] = 0 < ... < edges[n]`.
    pub fn from_edges(
        left: BoundarySpec,
        right: BoundarySpec,
        edges: Vec<f64>,
        materials: Vec<MaterialSpec>,
    ) -> Result<Self> {
        if edges.len() != materials.len() + 1 {
            return Err(Error::InvalidGeometry(format!(
                "{} edges for {} layers",
                edges.len(),
                materials.len()
            )));
        }
        let layers = edges
            .windows(2)
            .zip(&materials)
            .map(|(w, m)| Layer::new(w[1] - w[0], *m))
            .collect();
        Self::assemble(left, right, layers, edges)
    }

    fn assemble(
        left: BoundarySpec,
        right: BoundarySpec,
        layers: Vec<Layer>,
        edges: Vec<f64>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidGeometry(
                "a stack needs at least one layer".into(),
            ));
        }
        if edges[0] != 0.0 {
            return Err(Error::InvalidGeometry("first edge must be at z = 0".into()));
        }
        for (idx, layer) in layers.iter().enumerate() {
            if !(layer.thickness.is_finite() && layer.thickness > 0.0) {
                return Err(Error::InvalidGeometry(format!(
                    "layer {idx} has non-positive thickness {}",
                    layer.thickness
                )));
            }
        }
        for b in [left, right] {
            if let BoundarySpec::HalfSpace(m) = b {
                MaterialSpec::new(m.eps(), m.mu())?;
            }
        }
        Ok(Self {
            left,
            right,
            layers,
            edges,
        })
    }

    pub fn left(&self) -> BoundarySpec {
        self.left
    }

    pub fn right(&self) -> BoundarySpec {
        self.right
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    pub fn width(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    /// Position of the left edge of each layer, followed by `d`.
    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    /// Index of the layer whose half-open span `[z_i, z_{i+1})` holds `z`;
    /// `z = d` maps to the last layer.
    pub fn locate(&self, z: f64) -> Result<usize> {
        let d = self.width();
        if !(0.0..=d).contains(&z) {
            return Err(Error::InvalidGeometry(format!(
                "point {z} lies outside the cavity [0, {d}]"
            )));
        }
        let idx = self.edges.partition_point(|&e| e <= z);
        Ok(idx.saturating_sub(1).min(self.layers.len() - 1))
    }

    /// Stack mirrored about the cavity midplane.
    pub fn reversed(&self) -> Stack {
        let d = self.width();
        let edges = self.edges.iter().rev().map(|e| d - e).collect();
        let layers = self.layers.iter().rev().copied().collect();
        Stack {
            left: self.right,
            right: self.left,
            layers,
            edges,
        }
    }

    /// Every medium is impedance matched and compresses vacuum, so the
    /// optical response depends only on the vacuum wavenumber.
    pub fn is_vacuum_equivalent(&self) -> bool {
        let boundary_ok = |b: BoundarySpec| b.medium().map_or(true, |m| m.is_cslice());
        boundary_ok(self.left)
            && boundary_ok(self.right)
            && self.layers.iter().all(|l| l.material.is_cslice())
    }

    /// Short hex digest of the geometry, stable across runs and platforms.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("L={}|R={}|", self.left, self.right).as_bytes());
        for (layer, z) in self.layers.iter().zip(&self.edges) {
            hasher.update(z.to_bits().to_le_bytes());
            hasher.update(layer.thickness.to_bits().to_le_bytes());
            for c in layer
                .material
                .eps()
                .iter()
                .chain(layer.material.mu().iter())
            {
                hasher.update(c.to_bits().to_le_bytes());
            }
        }
        hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// What fills the profile region of a cavity.
#[derive(Debug, Clone, PartialEq)]
pub enum Filling {
    /// Empty cavity.
    Vacuum,
    /// C-slice wafer with compression profile `m(z)`.
    CSlice(CompressionProfile),
    /// Isotropic dielectric with permittivity profile `eps(z)` and `mu = 1`.
    Dielectric(Profile),
}

impl Filling {
    pub fn profile(&self) -> Option<&Profile> {
        match self {
            Filling::Vacuum => None,
            Filling::CSlice(p) | Filling::Dielectric(p) => Some(p),
        }
    }

    fn material_for(&self, value: f64) -> Result<MaterialSpec> {
        match self {
            Filling::Vacuum => Ok(MaterialSpec::VACUUM),
            Filling::CSlice(_) => cslice_material(value),
            Filling::Dielectric(_) => dielectric_material(value),
        }
    }
}

/// How a continuous profile is sampled on each slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SliceRule {
    /// The profile value at the slice midpoint.
    #[default]
    Midpoint,
    /// The cell average that preserves the slice's optical thickness: the
    /// harmonic mean of `m` for C-slices, the arithmetic mean of `eps` for
    /// dielectrics.
    CellAverage,
}

impl std::str::FromStr for SliceRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(SliceRule::Midpoint),
            "cell-average" => Ok(SliceRule::CellAverage),
            other => Err(Error::Unsupported(format!("unknown slice rule `{other}`"))),
        }
    }
}

impl fmt::Display for SliceRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SliceRule::Midpoint => "midpoint",
            SliceRule::CellAverage => "cell-average",
        })
    }
}

/// Slice a C-slice wafer into `n` homogeneous layers by midpoint sampling.
pub fn discretize(
    profile: &CompressionProfile,
    boundaries: (BoundarySpec, BoundarySpec),
    d: f64,
    n: usize,
) -> Result<Stack> {
    discretize_filling(
        &Filling::CSlice(profile.clone()),
        boundaries,
        d,
        n,
        SliceRule::Midpoint,
    )
}

/// Slice a cavity of width `d`.
///
/// The profile interval `[a, b]` is cut into `n` equal slices whose edges
/// include `a` and `b` exactly; the vacuum gaps `[0, a]` and `[b, d]` (when
/// non-empty) are single layers. A vacuum filling is cut into `n` equal
/// slices across the whole cavity.
pub fn discretize_filling(
    filling: &Filling,
    boundaries: (BoundarySpec, BoundarySpec),
    d: f64,
    n: usize,
    rule: SliceRule,
) -> Result<Stack> {
    if n == 0 {
        return Err(Error::InvalidGeometry(
            "slice count must be at least 1".into(),
        ));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidGeometry(format!(
            "cavity width must be positive, got {d}"
        )));
    }
    let (left, right) = boundaries;
    let (a, b) = match filling.profile() {
        Some(p) => p.interval(),
        None => (0.0, d),
    };
    if a < 0.0 || b > d {
        return Err(Error::InvalidGeometry(format!(
            "profile interval [{a}, {b}] is not contained in the cavity [0, {d}]"
        )));
    }

    let mut edges = Vec::with_capacity(n + 3);
    let mut materials = Vec::with_capacity(n + 2);
    edges.push(0.0);
    if a > 0.0 {
        edges.push(a);
        materials.push(MaterialSpec::VACUUM);
    }
    let step = (b - a) / n as f64;
    for i in 0..n {
        let lo = a + step * i as f64;
        let hi = if i + 1 == n {
            b
        } else {
            a + step * (i + 1) as f64
        };
        let value = match (filling.profile(), rule) {
            (None, _) => 1.0,
            (Some(p), SliceRule::Midpoint) => p.value_at(0.5 * (lo + hi)),
            (Some(p), SliceRule::CellAverage) => match filling {
                Filling::CSlice(_) => (hi - lo) / p.reciprocal_integral(lo, hi)?,
                _ => p.mean_over(lo, hi)?,
            },
        };
        materials.push(filling.material_for(value)?);
        edges.push(hi);
    }
    if b < d {
        edges.push(d);
        materials.push(MaterialSpec::VACUUM);
    }
    Stack::from_edges(left, right, edges, materials)
}
