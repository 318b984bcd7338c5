//! Piecewise-periodic coefficient data: diagonal diffusion `a`, drift `b`,
//! interior source `f` and lateral flux `g`, each given per zone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{least_squares_line, Line};
use crate::geometry::{BoundaryKind, CellGrid, CrossSection, CylinderGrid, Mesh, Zone};

const PERIODICITY_PROBES: usize = 16;
const PERIODICITY_TOL: f64 = 1e-12;
const DECAY_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub m: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// One product term `amp · Π_j cos(π n_j (x_j - lo_j) / L_j)` over the box.
/// Cosines are used so that every term has zero normal derivative on `∂Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxMode {
    pub modes: Vec<u32>,
    pub amp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum CrossProfile {
    #[default]
    #[serde(skip)]
    One,
    Constant {
        value: f64,
    },
    #[serde(rename = "fourier_box")]
    FourierBox {
        terms: Vec<BoxMode>,
    },
}

impl CrossProfile {
    fn eval(&self, xc: &[f64], cs: &CrossSection) -> f64 {
        match self {
            CrossProfile::One => 1.0,
            CrossProfile::Constant { value } => *value,
            CrossProfile::FourierBox { terms } => terms
                .iter()
                .map(|t| {
                    t.amp
                        * t.modes
                            .iter()
                            .zip(xc)
                            .zip(&cs.extents)
                            .map(|((&n, &x), &(lo, hi))| (std::f64::consts::PI * n as f64 * (x - lo) / (hi - lo)).cos())
                            .product::<f64>()
                })
                .sum(),
        }
    }

    fn is_one(&self) -> bool {
        matches!(self, CrossProfile::One)
    }
}

/// A scalar coefficient field on the cylinder.
///
/// Axial dependence is one of the listed kinds; `Fourier` alone may carry a
/// cross-section profile. `Sign` and `Indicator` are the discontinuous kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScalarField {
    Constant {
        value: f64,
    },
    /// `Σ (cos·cos(2πm x₁) + sin·sin(2πm x₁))`, times the cross profile.
    Fourier {
        modes: Vec<FourierMode>,
        #[serde(default, skip_serializing_if = "CrossProfile::is_one")]
        cross: CrossProfile,
    },
    /// `scale · sign(x₁)` with `sign(0) = 0`.
    Sign {
        scale: f64,
    },
    /// `value` on `lo ≤ x₁ ≤ hi`, zero elsewhere.
    Indicator {
        lo: f64,
        hi: f64,
        value: f64,
    },
    /// Piecewise-linear interpolation of samples at `x_start + i·spacing`.
    /// A periodic table covers exactly one unit period.
    Tabulated {
        x_start: f64,
        spacing: f64,
        values: Vec<f64>,
        #[serde(default)]
        periodic: bool,
    },
}

impl ScalarField {
    pub fn constant(value: f64) -> Self {
        ScalarField::Constant { value }
    }

    pub fn sign(scale: f64) -> Self {
        ScalarField::Sign { scale }
    }

    pub fn indicator(lo: f64, hi: f64, value: f64) -> Self {
        ScalarField::Indicator { lo, hi, value }
    }

    /// Pure axial Fourier series from `(m, cos, sin)` triples.
    pub fn fourier(modes: &[(u32, f64, f64)]) -> Self {
        ScalarField::Fourier {
            modes: modes.iter().map(|&(m, cos, sin)| FourierMode { m, cos, sin }).collect(),
            cross: CrossProfile::One,
        }
    }

    pub fn tabulate(x_start: f64, spacing: f64, values: Vec<f64>) -> Self {
        ScalarField::Tabulated { x_start, spacing, values, periodic: false }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ScalarField::Tabulated { x_start, spacing, values, periodic } => {
                if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidCoefficients("tabulated field needs finite samples".into()));
                }
                if !(*spacing > 0.0) || !x_start.is_finite() {
                    return Err(Error::InvalidCoefficients("tabulated field needs positive spacing".into()));
                }
                if *periodic && (spacing * values.len() as f64 - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidCoefficients(format!(
                        "periodic table spans {} instead of one unit period",
                        spacing * values.len() as f64
                    )));
                }
                Ok(())
            }
            ScalarField::Indicator { lo, hi, .. } if hi < lo => {
                Err(Error::InvalidCoefficients(format!("indicator interval ({lo}, {hi}) is empty")))
            }
            _ => Ok(()),
        }
    }

    /// Highest axial Fourier mode, for aliasing diagnostics.
    pub fn max_mode(&self) -> u32 {
        match self {
            ScalarField::Fourier { modes, .. } => modes.iter().map(|m| m.m).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// Value at `x = (x₁, x')`.
    pub fn eval(&self, x: &[f64], cs: &CrossSection) -> Result<f64> {
        let x1 = x[0];
        Ok(match self {
            ScalarField::Constant { value } => *value,
            ScalarField::Fourier { modes, cross } => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let axial: f64 = modes
                    .iter()
                    .map(|md| {
                        let t = two_pi * md.m as f64 * x1;
                        md.cos * t.cos() + md.sin * t.sin()
                    })
                    .sum();
                axial * cross.eval(&x[1..], cs)
            }
            ScalarField::Sign { scale } => {
                if x1 > 0.0 {
                    *scale
                } else if x1 < 0.0 {
                    -*scale
                } else {
                    0.0
                }
            }
            ScalarField::Indicator { lo, hi, value } => {
                if x1 >= *lo && x1 <= *hi {
                    *value
                } else {
                    0.0
                }
            }
            ScalarField::Tabulated { x_start, spacing, values, periodic } => {
                let n = values.len();
                let t = (x1 - x_start) / spacing;
                if *periodic {
                    let t = t.rem_euclid(n as f64);
                    let i = (t.floor() as usize).min(n - 1);
                    let w = t - i as f64;
                    (1.0 - w) * values[i] + w * values[(i + 1) % n]
                } else {
                    let last = (n - 1) as f64;
                    if t < -1e-9 || t > last + 1e-9 {
                        return Err(Error::InvalidCoefficients(format!(
                            "tabulated field covers [{}, {}] but is sampled at x1 = {x1}",
                            x_start,
                            x_start + last * spacing
                        )));
                    }
                    let t = t.clamp(0.0, last);
                    let i = (t.floor() as usize).min(n.saturating_sub(2));
                    if n == 1 {
                        values[0]
                    } else {
                        let w = t - i as f64;
                        (1.0 - w) * values[i] + w * values[i + 1]
                    }
                }
            }
        })
    }
}

/// One value per zone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zoned<T> {
    pub left: T,
    pub middle: T,
    pub right: T,
}

impl<T> Zoned<T> {
    pub fn get(&self, zone: Zone) -> &T {
        match zone {
            Zone::Left => &self.left,
            Zone::Middle => &self.middle,
            Zone::Right => &self.right,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (Zone, &T)> {
        [(Zone::Left, &self.left), (Zone::Middle, &self.middle), (Zone::Right, &self.right)].into_iter()
    }
}

impl<T: Clone> Zoned<T> {
    pub fn uniform(value: T) -> Self {
        Zoned { left: value.clone(), middle: value.clone(), right: value }
    }
}

/// Diagonal diffusion and drift vector of one zone, one field per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZoneCoefficients {
    pub a: Vec<ScalarField>,
    pub b: Vec<ScalarField>,
}

impl ZoneCoefficients {
    /// `a = I`, `b = (b₁, 0, …)`.
    pub fn isotropic(dim: usize, b1: ScalarField) -> Self {
        let mut b = vec![ScalarField::constant(0.0); dim];
        b[0] = b1;
        ZoneCoefficients { a: vec![ScalarField::constant(1.0); dim], b }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientModel {
    dim: usize,
    pub zones: Zoned<ZoneCoefficients>,
    pub f: Zoned<ScalarField>,
    pub g: Option<Zoned<ScalarField>>,
}

impl CoefficientModel {
    /// Validates field shapes and the 1-periodicity of the tail coefficients.
    pub fn new(
        dim: usize,
        zones: Zoned<ZoneCoefficients>,
        f: Zoned<ScalarField>,
        g: Option<Zoned<ScalarField>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCoefficients("dimension must be at least 1".into()));
        }
        for (zone, zc) in zones.iter() {
            if zc.a.len() != dim || zc.b.len() != dim {
                return Err(Error::InvalidCoefficients(format!(
                    "{zone:?} zone needs {dim} diffusion and drift entries, got {} and {}",
                    zc.a.len(),
                    zc.b.len()
                )));
            }
            for field in zc.a.iter().chain(&zc.b) {
                field.validate()?;
            }
        }
        for (_, field) in f.iter() {
            field.validate()?;
        }
        if let Some(g) = &g {
            for (_, field) in g.iter() {
                field.validate()?;
            }
        }
        let model = CoefficientModel { dim, zones, f, g };
        model.check_periodicity()?;
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn check_periodicity(&self) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        // The cross-section extents are unknown here; probe on the unit box.
        let cs = CrossSection::new(vec![(0.0, 1.0); self.dim - 1], vec![1; self.dim - 1])?;
        for (zone, range) in [(Zone::Left, (-12.0, -2.0)), (Zone::Right, (1.0, 11.0))] {
            let zc = self.zones.get(zone);
            for (name, fields) in [("a", &zc.a), ("b", &zc.b)] {
                for (axis, field) in fields.iter().enumerate() {
                    for _ in 0..PERIODICITY_PROBES {
                        let mut x: Vec<f64> = (0..self.dim).map(|_| rng.gen::<f64>()).collect();
                        x[0] = rng.gen_range(range.0..range.1);
                        let v0 = field.eval(&x, &cs)?;
                        x[0] += 1.0;
                        let v1 = field.eval(&x, &cs)?;
                        if (v0 - v1).abs() > PERIODICITY_TOL * (1.0 + v0.abs()) {
                            return Err(Error::InvalidCoefficients(format!(
                                "{zone:?} zone {name}[{axis}] is not 1-periodic in x1 \
                                 ({v0} at x1 = {}, {v1} one period later)",
                                x[0] - 1.0
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Mirror image `x₁ → -x₁`: zones swap and the axial drift changes sign.
    pub fn mirrored(&self) -> Result<Self> {
        fn flip(field: &ScalarField, negate: bool) -> ScalarField {
            let s = if negate { -1.0 } else { 1.0 };
            match field {
                ScalarField::Constant { value } => ScalarField::Constant { value: s * value },
                ScalarField::Fourier { modes, cross } => ScalarField::Fourier {
                    modes: modes.iter().map(|m| FourierMode { m: m.m, cos: s * m.cos, sin: -s * m.sin }).collect(),
                    cross: cross.clone(),
                },
                ScalarField::Sign { scale } => ScalarField::Sign { scale: -s * scale },
                ScalarField::Indicator { lo, hi, value } => {
                    ScalarField::Indicator { lo: -hi, hi: -lo, value: s * value }
                }
                ScalarField::Tabulated { x_start, spacing, values, periodic } => {
                    let n = values.len() as f64;
                    ScalarField::Tabulated {
                        x_start: -x_start - spacing * (n - 1.0),
                        spacing: *spacing,
                        values: values.iter().rev().map(|v| s * v).collect(),
                        periodic: *periodic,
                    }
                }
            }
        }
        let mirror_zone = |zc: &ZoneCoefficients| ZoneCoefficients {
            a: zc.a.iter().map(|f| flip(f, false)).collect(),
            b: zc.b.iter().enumerate().map(|(axis, f)| flip(f, axis == 0)).collect(),
        };
        let mirror_scalar = |z: &Zoned<ScalarField>| Zoned {
            left: flip(&z.right, false),
            middle: flip(&z.middle, false),
            right: flip(&z.left, false),
        };
        CoefficientModel::new(
            self.dim,
            Zoned {
                left: mirror_zone(&self.zones.right),
                middle: mirror_zone(&self.zones.middle),
                right: mirror_zone(&self.zones.left),
            },
            mirror_scalar(&self.f),
            self.g.as_ref().map(mirror_scalar),
        )
    }
}

/// Coefficients sampled on a mesh. Face arrays follow the mesh face order.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientTable {
    pub dim: usize,
    /// Diagonal of `a` at cell centers, `dim` entries per cell.
    pub a_cell: Vec<f64>,
    /// Face value of the diagonal entry of `a` matching the face axis.
    pub a_face: Vec<f64>,
    /// Drift component along the face axis, at face centers.
    pub b_face: Vec<f64>,
    pub a_boundary: Vec<f64>,
    pub b_boundary: Vec<f64>,
    pub f: Vec<f64>,
    /// Lateral flux data; zero on base faces.
    pub g: Vec<f64>,
}

fn sample(
    model: &CoefficientModel,
    mesh: &Mesh,
    cs: &CrossSection,
    zone_at: impl Fn(f64) -> Zone,
) -> Result<CoefficientTable> {
    if model.dim != mesh.dim {
        return Err(Error::DimensionMismatch { model: model.dim, grid: mesh.dim });
    }
    let dim = model.dim;
    let n = mesh.n_cells();
    let mut a_cell = Vec::with_capacity(n * dim);
    let mut f = Vec::with_capacity(n);
    for c in 0..n {
        let x = mesh.center(c);
        let zone = zone_at(x[0]);
        for field in &model.zones.get(zone).a {
            a_cell.push(field.eval(x, cs)?);
        }
        f.push(model.f.get(zone).eval(x, cs)?);
    }
    let mut a_face = Vec::with_capacity(mesh.interior_faces.len());
    let mut b_face = Vec::with_capacity(mesh.interior_faces.len());
    for face in &mesh.interior_faces {
        a_face.push(0.5 * (a_cell[face.lo * dim + face.axis] + a_cell[face.hi * dim + face.axis]));
        let zone = zone_at(face.center[0]);
        b_face.push(model.zones.get(zone).b[face.axis].eval(&face.center, cs)?);
    }
    let mut a_boundary = Vec::with_capacity(mesh.boundary_faces.len());
    let mut b_boundary = Vec::with_capacity(mesh.boundary_faces.len());
    let mut g = Vec::with_capacity(mesh.boundary_faces.len());
    for face in &mesh.boundary_faces {
        a_boundary.push(a_cell[face.cell * dim + face.axis]);
        let zone = zone_at(face.center[0]);
        b_boundary.push(model.zones.get(zone).b[face.axis].eval(&face.center, cs)?);
        let gv = match (&model.g, face.kind) {
            (Some(gz), BoundaryKind::Lateral) => gz.get(zone).eval(&face.center, cs)?,
            _ => 0.0,
        };
        g.push(gv);
    }
    Ok(CoefficientTable { dim, a_cell, a_face, b_face, a_boundary, b_boundary, f, g })
}

/// Samples the model on a cylinder grid; zones follow the (H1) split at ±1.
pub fn sample_on_grid(model: &CoefficientModel, grid: &CylinderGrid) -> Result<CoefficientTable> {
    sample(model, grid.mesh(), &grid.cross_section, Zone::of)
}

/// Samples one periodic zone on the cell `T¹ × Q`.
pub fn sample_on_cell(model: &CoefficientModel, grid: &CellGrid, zone: Zone) -> Result<CoefficientTable> {
    sample(model, grid.mesh(), &grid.cross_section, |_| zone)
}

/// Smallest sampled diagonal diffusion entry, the discrete ellipticity constant.
pub fn verify_ellipticity(table: &CoefficientTable) -> Result<f64> {
    let min = table.a_cell.iter().chain(&table.a_face).chain(&table.a_boundary).copied().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(Error::NonElliptic { min });
    }
    Ok(min)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowNorm {
    /// Left end of the unit window `G_n^{n+1}`.
    pub n: i64,
    pub f_norm: f64,
    pub g_norm: f64,
}

/// Result of the exponential-decay check on the data `f`, `g`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayReport {
    pub c0: f64,
    /// Fitted rate; `+∞` for compactly supported data.
    pub gamma0: f64,
    pub windows: Vec<WindowNorm>,
    pub compact_support: bool,
    pub enough_windows: bool,
    pub passed: bool,
}

/// Fits `‖f‖_{L²(G_n^{n+1})} + ‖g‖_{L²(Σ_n^{n+1})} ≈ C₀ e^{-γ₀ |n|}`.
///
/// The distance of a window is that of its inner edge, so windows on both
/// sides of the origin are treated symmetrically.
pub fn verify_decay(model: &CoefficientModel, grid: &CylinderGrid) -> Result<DecayReport> {
    let table = sample_on_grid(model, grid)?;
    let mesh = grid.mesh();
    let first = grid.x_lo.floor() as i64;
    let last = grid.x_hi.ceil() as i64;
    let count = (last - first) as usize;
    let mut f_sq = vec![0.0; count];
    let mut g_sq = vec![0.0; count];
    for c in 0..mesh.n_cells() {
        let w = ((mesh.x1(c).floor() as i64 - first) as usize).min(count - 1);
        f_sq[w] += table.f[c] * table.f[c] * mesh.volumes[c];
    }
    for (face, g) in mesh.boundary_faces.iter().zip(&table.g) {
        if face.kind != BoundaryKind::Lateral {
            continue;
        }
        let w = ((face.center[0].floor() as i64 - first) as usize).min(count - 1);
        g_sq[w] += g * g * face.area;
    }
    let windows: Vec<WindowNorm> = (0..count)
        .map(|w| WindowNorm { n: first + w as i64, f_norm: f_sq[w].sqrt(), g_norm: g_sq[w].sqrt() })
        .collect();

    let distance = |n: i64| if n >= 0 { n } else { -(n + 1) };
    let per_side = |positive: bool| windows.iter().filter(|w| (w.n >= 0) == positive).count();
    let enough_windows = per_side(true) >= 4 && per_side(false) >= 4;

    let points: Vec<(f64, f64)> = windows
        .iter()
        .filter(|w| w.f_norm + w.g_norm > DECAY_FLOOR)
        .map(|w| (distance(w.n) as f64, (w.f_norm + w.g_norm).ln()))
        .collect();
    let compact_support = points.iter().all(|&(d, _)| d < 1.0);

    let (c0, gamma0) = if compact_support {
        let c0 = points.iter().map(|p| p.1.exp()).fold(0.0, f64::max);
        (c0, f64::INFINITY)
    } else {
        match least_squares_line(&points) {
            Some(Line { slope, intercept, .. }) => (intercept.exp(), -slope),
            None => (f64::NAN, 0.0),
        }
    };
    let passed = enough_windows && gamma0 > 1e-6;
    Ok(DecayReport { c0, gamma0, windows, compact_support, enough_windows, passed })
}
