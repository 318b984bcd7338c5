//! Tensor-product finite-volume grids on truncated cylinders `(lo, hi) × Q`
//! and on the periodicity cell `T¹ × Q`.
//!
//! Cells are numbered slice by slice: `index = axial * n_cross + cross`, where
//! `cross` is the row-major index inside the box cross-section. Axis 0 is the
//! cylinder axis `x₁`; axes `1..d` span the cross-section.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const VOLUME_RTOL: f64 = 1e-12;

/// Axis-aligned box cross-section `Q ⊂ R^{d-1}` with a uniform tensor grid.
///
/// `dim == 0` is the degenerate one-dimensional cylinder: `Q` is a point with
/// unit measure and no lateral boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossSection {
    pub extents: Vec<(f64, f64)>,
    pub cells_per_axis: Vec<usize>,
}

impl CrossSection {
    pub fn new(extents: Vec<(f64, f64)>, cells_per_axis: Vec<usize>) -> Result<Self> {
        let cs = Self { extents, cells_per_axis };
        cs.validate()?;
        Ok(cs)
    }

    /// The point cross-section of a 1D problem.
    pub fn point() -> Self {
        Self { extents: Vec::new(), cells_per_axis: Vec::new() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.extents.len() != self.cells_per_axis.len() {
            return Err(Error::InvalidGrid(format!(
                "cross_section has {} extents but {} cell counts",
                self.extents.len(),
                self.cells_per_axis.len()
            )));
        }
        for (axis, &(lo, hi)) in self.extents.iter().enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
                return Err(Error::InvalidGrid(format!(
                    "cross_section.extents[{axis}]: need lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        if let Some(axis) = self.cells_per_axis.iter().position(|&n| n == 0) {
            return Err(Error::InvalidGrid(format!("cross_section.cells_per_axis[{axis}] must be positive")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells_per_axis.iter().product()
    }

    /// Lebesgue measure of `Q` (1 for the point cross-section).
    pub fn measure(&self) -> f64 {
        self.extents.iter().map(|(lo, hi)| hi - lo).product()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let (lo, hi) = self.extents[axis];
        (hi - lo) / self.cells_per_axis[axis] as f64
    }

    pub fn cell_measure(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).product()
    }

    /// Row-major multi-index of a cross-section cell.
    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for axis in (0..self.dim()).rev() {
            let n = self.cells_per_axis[axis];
            out[axis] = idx % n;
            idx /= n;
        }
        out
    }

    fn stride(&self, axis: usize) -> usize {
        self.cells_per_axis[axis + 1..].iter().product()
    }

    pub fn cell_center(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .iter()
            .enumerate()
            .map(|(axis, &m)| self.extents[axis].0 + (m as f64 + 0.5) * self.spacing(axis))
            .collect()
    }
}

/// Zones of hypothesis (H1): periodic tails left of `x₁ = -1` and right of
/// `x₁ = 1`, arbitrary bounded data in between.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Zone {
    Left,
    Middle,
    Right,
}

impl Zone {
    pub fn of(x1: f64) -> Zone {
        if x1 < -1.0 {
            Zone::Left
        } else if x1 > 1.0 {
            Zone::Right
        } else {
            Zone::Middle
        }
    }
}

/// A face shared by two cells. The normal points from `lo` to `hi` along `axis`.
#[derive(Debug, Clone)]
pub struct InteriorFace {
    pub lo: usize,
    pub hi: usize,
    pub axis: usize,
    pub area: f64,
    pub distance: f64,
    pub center: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Part of the lateral surface `Σ = R × ∂Q`.
    Lateral,
    /// The left base `S_lo`.
    BaseLeft,
    /// The right base `S_hi`.
    BaseRight,
}

#[derive(Debug, Clone)]
pub struct BoundaryFace {
    pub cell: usize,
    pub axis: usize,
    /// `+1` or `-1`: direction of the outward normal along `axis`.
    pub outward: f64,
    pub area: f64,
    pub center: Vec<f64>,
    pub kind: BoundaryKind,
}

/// Cell/face bookkeeping shared by cylinder and cell grids.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub dim: usize,
    pub axial_cells: usize,
    pub n_cross: usize,
    pub h: f64,
    centers: Vec<f64>,
    pub volumes: Vec<f64>,
    pub interior_faces: Vec<InteriorFace>,
    pub boundary_faces: Vec<BoundaryFace>,
    /// Solver ordering with small bandwidth, when the natural one is not.
    pub band_order: Option<Vec<usize>>,
}

impl Mesh {
    pub fn n_cells(&self) -> usize {
        self.volumes.len()
    }

    pub fn center(&self, cell: usize) -> &[f64] {
        &self.centers[cell * self.dim..(cell + 1) * self.dim]
    }

    pub fn x1(&self, cell: usize) -> f64 {
        self.centers[cell * self.dim]
    }

    pub fn axial_index(&self, cell: usize) -> usize {
        cell / self.n_cross
    }

    pub fn cross_index(&self, cell: usize) -> usize {
        cell % self.n_cross
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn lateral_faces(&self) -> impl Iterator<Item = &BoundaryFace> {
        self.boundary_faces.iter().filter(|f| f.kind == BoundaryKind::Lateral)
    }

    pub fn base_faces(&self, kind: BoundaryKind) -> impl Iterator<Item = &BoundaryFace> {
        self.boundary_faces.iter().filter(move |f| f.kind == kind)
    }

    /// Cells whose centers lie strictly inside `(lo, hi)` along the axis.
    pub fn cells_in_slab(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.n_cells())
            .filter(|&c| {
                let x = self.x1(c);
                x > lo && x < hi
            })
            .collect()
    }

    fn build(x_lo: f64, axial_cells: usize, h: f64, cs: &CrossSection, periodic: bool) -> Mesh {
        let n_cross = cs.n_cells();
        let dim = cs.dim() + 1;
        let cross_measure = cs.cell_measure();
        let n = axial_cells * n_cross;

        let mut centers = Vec::with_capacity(n * dim);
        let mut volumes = Vec::with_capacity(n);
        let cross_centers: Vec<Vec<f64>> = (0..n_cross).map(|j| cs.cell_center(j)).collect();
        for i in 0..axial_cells {
            let x1 = x_lo + (i as f64 + 0.5) * h;
            for cc in &cross_centers {
                centers.push(x1);
                centers.extend_from_slice(cc);
                volumes.push(h * cross_measure);
            }
        }

        let mut interior_faces = Vec::new();
        let mut boundary_faces = Vec::new();

        // Axial faces.
        let face_range = if periodic { 0..axial_cells } else { 1..axial_cells };
        for f in face_range {
            let (left, right) = if f == 0 { (axial_cells - 1, 0) } else { (f - 1, f) };
            let x1 = x_lo + f as f64 * h;
            for (j, cc) in cross_centers.iter().enumerate() {
                let mut center = vec![x1];
                center.extend_from_slice(cc);
                interior_faces.push(InteriorFace {
                    lo: left * n_cross + j,
                    hi: right * n_cross + j,
                    axis: 0,
                    area: cross_measure,
                    distance: h,
                    center,
                });
            }
        }
        if !periodic {
            let x_hi = x_lo + axial_cells as f64 * h;
            for (j, cc) in cross_centers.iter().enumerate() {
                for (slice, x1, outward, kind) in
                    [(0, x_lo, -1.0, BoundaryKind::BaseLeft), (axial_cells - 1, x_hi, 1.0, BoundaryKind::BaseRight)]
                {
                    let mut center = vec![x1];
                    center.extend_from_slice(cc);
                    boundary_faces.push(BoundaryFace {
                        cell: slice * n_cross + j,
                        axis: 0,
                        outward,
                        area: cross_measure,
                        center,
                        kind,
                    });
                }
            }
        }

        // Cross-section faces, interior and lateral.
        for axis in 0..cs.dim() {
            let hc = cs.spacing(axis);
            let area = h * cross_measure / hc;
            let stride = cs.stride(axis);
            let (lo_ext, _) = cs.extents[axis];
            for i in 0..axial_cells {
                let x1 = x_lo + (i as f64 + 0.5) * h;
                for j in 0..n_cross {
                    let m = cs.multi_index(j);
                    let cell = i * n_cross + j;
                    let face_center = |offset: f64| {
                        let mut c = vec![x1];
                        c.extend_from_slice(&cross_centers[j]);
                        c[axis + 1] = lo_ext + (m[axis] as f64 + offset) * hc;
                        c
                    };
                    if m[axis] + 1 < cs.cells_per_axis[axis] {
                        interior_faces.push(InteriorFace {
                            lo: cell,
                            hi: cell + stride,
                            axis: axis + 1,
                            area,
                            distance: hc,
                            center: face_center(1.0),
                        });
                    } else {
                        boundary_faces.push(BoundaryFace {
                            cell,
                            axis: axis + 1,
                            outward: 1.0,
                            area,
                            center: face_center(1.0),
                            kind: BoundaryKind::Lateral,
                        });
                    }
                    if m[axis] == 0 {
                        boundary_faces.push(BoundaryFace {
                            cell,
                            axis: axis + 1,
                            outward: -1.0,
                            area,
                            center: face_center(0.0),
                            kind: BoundaryKind::Lateral,
                        });
                    }
                }
            }
        }

        let band_order = periodic.then(|| interleaved_order(axial_cells, n_cross));

        Mesh { dim, axial_cells, n_cross, h, centers, volumes, interior_faces, boundary_faces, band_order }
    }
}

/// Slice ordering `0, N-1, 1, N-2, ...` that turns the torus coupling into a
/// band of width `2 * n_cross`. Entry `p` is the cell placed at position `p`.
fn interleaved_order(axial_cells: usize, n_cross: usize) -> Vec<usize> {
    let mut slices = Vec::with_capacity(axial_cells);
    let (mut lo, mut hi) = (0usize, axial_cells);
    while lo < hi {
        slices.push(lo);
        lo += 1;
        if lo < hi {
            hi -= 1;
            slices.push(hi);
        }
    }
    slices.into_iter().flat_map(|s| (0..n_cross).map(move |j| s * n_cross + j)).collect()
}

/// Grid on the finite cylinder `G_lo^hi = (lo, hi) × Q`.
#[derive(Debug, Clone)]
pub struct CylinderGrid {
    pub x_lo: f64,
    pub x_hi: f64,
    pub cross_section: CrossSection,
    pub zone_of_cell: Vec<Zone>,
    mesh: Mesh,
}

impl CylinderGrid {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn axial_cells(&self) -> usize {
        self.mesh.axial_cells
    }

    pub fn h(&self) -> f64 {
        self.mesh.h
    }

    /// Half length `k` of a symmetric grid `(-k, k)`.
    pub fn half_length(&self) -> f64 {
        0.5 * (self.x_hi - self.x_lo)
    }

    pub fn cells_per_unit(&self) -> usize {
        (1.0 / self.mesh.h).round() as usize
    }
}

fn check_cells_per_unit(h: f64) -> Result<()> {
    let per_unit = 1.0 / h;
    if (per_unit - per_unit.round()).abs() > 1e-9 * per_unit || per_unit.round() < 1.0 {
        return Err(Error::InvalidGrid(format!("axial spacing {h} does not divide the unit period")));
    }
    Ok(())
}

/// Symmetric grid on `G_{-k}^k` with `axial_cells` uniform slices.
pub fn build_cylinder_grid(k: f64, axial_cells: usize, cs: &CrossSection) -> Result<CylinderGrid> {
    if !(k >= 2.0) {
        return Err(Error::InvalidGrid(format!("half length k = {k} leaves an empty periodic zone; need k >= 2")));
    }
    if axial_cells < 4 {
        return Err(Error::InvalidGrid(format!("need at least 4 axial cells, got {axial_cells}")));
    }
    build_interval_grid(-k, k, axial_cells, cs)
}

/// Grid on an arbitrary interval `(lo, hi) × Q`, zones labeled by position.
pub fn build_interval_grid(x_lo: f64, x_hi: f64, axial_cells: usize, cs: &CrossSection) -> Result<CylinderGrid> {
    cs.validate()?;
    if !(x_hi > x_lo) || axial_cells == 0 {
        return Err(Error::InvalidGrid(format!("empty axial interval ({x_lo}, {x_hi}) with {axial_cells} cells")));
    }
    let h = (x_hi - x_lo) / axial_cells as f64;
    check_cells_per_unit(h)?;
    let mesh = Mesh::build(x_lo, axial_cells, h, cs, false);
    let zone_of_cell = (0..mesh.n_cells()).map(|c| Zone::of(mesh.x1(c))).collect();
    let grid = CylinderGrid { x_lo, x_hi, cross_section: cs.clone(), zone_of_cell, mesh };
    debug_assert!(volume_matches(grid.mesh.total_volume(), (x_hi - x_lo) * cs.measure()));
    Ok(grid)
}

/// Grid on the periodicity cell `Y = T¹ × Q`, axial coordinate in `[0, 1)`.
#[derive(Debug, Clone)]
pub struct CellGrid {
    pub cross_section: CrossSection,
    mesh: Mesh,
}

impl CellGrid {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn axial_cells(&self) -> usize {
        self.mesh.axial_cells
    }

    /// Axial neighbor to the right, with wrap-around.
    pub fn right_neighbor(&self, cell: usize) -> usize {
        let n = self.mesh.n_cross;
        let slice = (self.mesh.axial_index(cell) + 1) % self.mesh.axial_cells;
        slice * n + cell % n
    }
}

pub fn build_cell_grid(axial_cells: usize, cs: &CrossSection) -> Result<CellGrid> {
    cs.validate()?;
    if axial_cells < 2 {
        return Err(Error::InvalidGrid(format!("periodic cell needs at least 2 axial cells, got {axial_cells}")));
    }
    let h = 1.0 / axial_cells as f64;
    let mesh = Mesh::build(0.0, axial_cells, h, cs, true);
    debug_assert!(volume_matches(mesh.total_volume(), cs.measure()));
    Ok(CellGrid { cross_section: cs.clone(), mesh })
}

fn volume_matches(got: f64, want: f64) -> bool {
    (got - want).abs() <= VOLUME_RTOL * want
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn strip(cells: usize) -> CrossSection {
        CrossSection::new(vec![(0.0, 1.0)], vec![cells]).unwrap()
    }

    #[test]
    fn degenerate_cylinder_has_four_unit_cells() {
        let g = build_cylinder_grid(2.0, 4, &CrossSection::point()).unwrap();
        assert_eq!(g.mesh().n_cells(), 4);
        assert!(g.mesh().volumes.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        assert_eq!(g.zone_of_cell, vec![Zone::Left, Zone::Middle, Zone::Middle, Zone::Right]);
        assert_eq!(g.mesh().lateral_faces().count(), 0);
    }

    #[test]
    fn strip_cells_have_half_volume() {
        let g = build_cylinder_grid(3.0, 6, &strip(2)).unwrap();
        assert_eq!(g.mesh().n_cells(), 12);
        assert!(g.mesh().volumes.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn box_volume() {
        let cs = CrossSection::new(vec![(0.0, 2.0), (0.0, 3.0)], vec![2, 3]).unwrap();
        let g = build_cylinder_grid(5.0, 10, &cs).unwrap();
        assert!((g.mesh().total_volume() - 60.0).abs() <= 60.0 * 1e-12);
    }

    #[test]
    fn rejects_short_cylinders_and_bad_extents() {
        assert!(build_cylinder_grid(1.5, 6, &CrossSection::point()).is_err());
        assert!(CrossSection::new(vec![(1.0, 1.0)], vec![2]).is_err());
        // 3 cells per 2 units does not resolve the unit period
        assert!(build_cylinder_grid(2.0, 6, &CrossSection::point()).is_err());
    }

    #[test]
    fn cell_grid_wraps() {
        let g = build_cell_grid(2, &CrossSection::point()).unwrap();
        assert_eq!(g.mesh().n_cells(), 2);
        assert_eq!(g.right_neighbor(1), 0);
        let axial = g.mesh().interior_faces.iter().filter(|f| f.axis == 0).count();
        assert_eq!(axial, g.mesh().n_cells());
        assert!(build_cell_grid(1, &CrossSection::point()).is_err());
    }

    #[test]
    fn cell_grid_volume_and_face_count() {
        let g = build_cell_grid(8, &CrossSection::new(vec![(0.0, 1.0)], vec![4]).unwrap()).unwrap();
        assert_eq!(g.mesh().n_cells(), 32);
        assert!((g.mesh().total_volume() - 1.0).abs() < 1e-12);
        let axial = g.mesh().interior_faces.iter().filter(|f| f.axis == 0).count();
        assert_eq!(axial, 32);
    }

    #[test]
    fn interleaved_order_is_a_permutation() {
        let mut o = interleaved_order(7, 2);
        o.sort_unstable();
        assert_eq!(o, (0..14).collect::<Vec<_>>());
    }

    #[test]
    fn lateral_normals_are_cross_axes() {
        let cs = CrossSection::new(vec![(0.0, 1.0), (-1.0, 1.0)], vec![2, 3]).unwrap();
        let g = build_cylinder_grid(2.0, 8, &cs).unwrap();
        assert!(g.mesh().lateral_faces().all(|f| f.axis > 0));
        assert!(g.mesh().boundary_faces.iter().filter(|f| f.kind != BoundaryKind::Lateral).all(|f| f.axis == 0));
        // 2 faces per boundary row on each cross axis, per slice
        assert_eq!(g.mesh().lateral_faces().count(), 8 * (2 * 3 + 2 * 2));
    }

    proptest! {
        #[test]
        fn volumes_partition_the_domain(
            k in 2usize..6,
            per_unit in 1usize..5,
            dims in proptest::collection::vec((0.1f64..3.0, 1usize..4), 0..3),
        ) {
            let extents = dims.iter().map(|&(l, _)| (-0.5 * l, 0.5 * l)).collect();
            let cells = dims.iter().map(|&(_, n)| n).collect();
            let cs = CrossSection::new(extents, cells).unwrap();
            let g = build_cylinder_grid(k as f64, 2 * k * per_unit, &cs).unwrap();
            let want = 2.0 * k as f64 * cs.measure();
            prop_assert!((g.mesh().total_volume() - want).abs() <= 1e-12 * want);

            // every interior face couples two distinct cells exactly once
            let mut seen = std::collections::HashSet::new();
            for f in &g.mesh().interior_faces {
                prop_assert!(f.lo != f.hi);
                prop_assert!(seen.insert((f.lo.min(f.hi), f.lo.max(f.hi))));
            }
            for c in 0..g.mesh().n_cells() {
                prop_assert_eq!(g.zone_of_cell[c], Zone::of(g.mesh().x1(c)));
            }
        }
    }
}
