//! Uniform dyadic mesh hierarchy on the unit square.
//!
//! Fine cell `(ix, iy)` has id `iy·I + ix`. Fine interfaces are the unit-length
//! edges of the fine grid: vertical edge `(ix, iy)` with `ix ∈ 0..=I` has id
//! `iy·(I+1) + ix`; horizontal edge `(ix, iy)` with `iy ∈ 0..=I` has id
//! `I(I+1) + iy·I + ix`. Coarse interfaces are the runs of fine interfaces
//! along coarse cell edges.

use crate::error::{Result, RteError};
use crate::tfps_basis::{CellGeometry, Edge};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Vertical,
    Horizontal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FineInterface {
    pub id: usize,
    pub orientation: Orientation,
    pub ix: usize,
    pub iy: usize,
    /// Left (vertical) or bottom (horizontal) neighbour.
    pub lower: Option<usize>,
    /// Right (vertical) or top (horizontal) neighbour.
    pub upper: Option<usize>,
    pub midpoint: (f64, f64),
}

impl FineInterface {
    pub fn is_boundary(&self) -> bool {
        self.lower.is_none() || self.upper.is_none()
    }

    /// Edge of the domain for boundary interfaces.
    pub fn boundary_edge(&self) -> Option<Edge> {
        match (self.orientation, self.lower, self.upper) {
            (Orientation::Vertical, None, _) => Some(Edge::Left),
            (Orientation::Vertical, _, None) => Some(Edge::Right),
            (Orientation::Horizontal, None, _) => Some(Edge::Bottom),
            (Orientation::Horizontal, _, None) => Some(Edge::Top),
            _ => None,
        }
    }

    /// The only adjacent cell of a boundary interface.
    pub fn sole_cell(&self) -> Option<usize> {
        match (self.lower, self.upper) {
            (Some(c), None) | (None, Some(c)) => Some(c),
            _ => None,
        }
    }

    /// Which edge of `cell` this interface is.
    pub fn edge_of(&self, cell: usize) -> Edge {
        match (self.orientation, self.lower == Some(cell)) {
            (Orientation::Vertical, true) => Edge::Right,
            (Orientation::Vertical, false) => Edge::Left,
            (Orientation::Horizontal, true) => Edge::Top,
            (Orientation::Horizontal, false) => Edge::Bottom,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MeshHierarchy {
    /// Fine cells per axis.
    pub n: usize,
    /// Number of coarsening levels.
    pub levels: usize,
    pub h: f64,
    pub interfaces: Vec<FineInterface>,
}

/// Largest `L` with `I/2^L ≥ 2` (or 0 for `I = 1`) leaving a coarsest grid of size 1, 2 or 4.
pub fn default_levels(n: usize) -> usize {
    let mut l = 0;
    while n % (1 << (l + 1)) == 0 && n >> (l + 1) >= 2 {
        l += 1;
    }
    l
}

pub fn build_hierarchy(n: usize, levels: usize) -> Result<MeshHierarchy> {
    let err = RteError::NonDyadicMesh { cells: n, levels };
    if n == 0 || levels >= usize::BITS as usize - 1 || n % (1 << levels) != 0 {
        return Err(err);
    }
    if !matches!(n >> levels, 1 | 2 | 4) {
        return Err(err);
    }
    let h = 1.0 / n as f64;
    let mut interfaces = Vec::with_capacity(2 * n * (n + 1));
    for iy in 0..n {
        for ix in 0..=n {
            interfaces.push(FineInterface {
                id: interfaces.len(),
                orientation: Orientation::Vertical,
                ix,
                iy,
                lower: (ix > 0).then(|| iy * n + ix - 1),
                upper: (ix < n).then(|| iy * n + ix),
                midpoint: (ix as f64 * h, (iy as f64 + 0.5) * h),
            });
        }
    }
    for iy in 0..=n {
        for ix in 0..n {
            interfaces.push(FineInterface {
                id: interfaces.len(),
                orientation: Orientation::Horizontal,
                ix,
                iy,
                lower: (iy > 0).then(|| (iy - 1) * n + ix),
                upper: (iy < n).then(|| iy * n + ix),
                midpoint: ((ix as f64 + 0.5) * h, iy as f64 * h),
            });
        }
    }
    Ok(MeshHierarchy { n, levels, h, interfaces })
}

impl MeshHierarchy {
    pub fn n_cells(&self) -> usize {
        self.n * self.n
    }

    pub fn cell_id(&self, ix: usize, iy: usize) -> usize {
        iy * self.n + ix
    }

    pub fn cell_geometry(&self, id: usize) -> CellGeometry {
        let (ix, iy) = (id % self.n, id / self.n);
        CellGeometry { id, x0: ix as f64 * self.h, y0: iy as f64 * self.h, h: self.h }
    }

    /// Fine cell containing a point (upper edges belong to the lower cell at the domain boundary).
    pub fn locate(&self, x: f64, y: f64) -> usize {
        let f = |v: f64| ((v * self.n as f64).floor().max(0.0) as usize).min(self.n - 1);
        self.cell_id(f(x), f(y))
    }

    pub fn vertical(&self, ix: usize, iy: usize) -> usize {
        iy * (self.n + 1) + ix
    }

    pub fn horizontal(&self, ix: usize, iy: usize) -> usize {
        self.n * (self.n + 1) + iy * self.n + ix
    }

    /// Fine interface forming edge `e` of fine cell `cell`.
    pub fn cell_edge(&self, cell: usize, e: Edge) -> usize {
        let (ix, iy) = (cell % self.n, cell / self.n);
        match e {
            Edge::Left => self.vertical(ix, iy),
            Edge::Right => self.vertical(ix + 1, iy),
            Edge::Bottom => self.horizontal(ix, iy),
            Edge::Top => self.horizontal(ix, iy + 1),
        }
    }

    /// Cells per axis at level `l`.
    pub fn cells_per_axis(&self, l: usize) -> usize {
        self.n >> l
    }

    pub fn n_level_cells(&self, l: usize) -> usize {
        self.cells_per_axis(l).pow(2)
    }

    /// Does fine interface `i` lie on a level-`l` grid line?
    pub fn on_level_line(&self, i: usize, l: usize) -> bool {
        let f = &self.interfaces[i];
        let step = 1 << l;
        match f.orientation {
            Orientation::Vertical => f.ix % step == 0,
            Orientation::Horizontal => f.iy % step == 0,
        }
    }

    /// Fine interfaces on level-`l` lines, ascending id.
    pub fn level_interfaces(&self, l: usize) -> Vec<usize> {
        (0..self.interfaces.len()).filter(|&i| self.on_level_line(i, l)).collect()
    }

    /// Fine interfaces on level-(l−1) lines that are not on level-l lines.
    pub fn removed_interfaces(&self, l: usize) -> Vec<usize> {
        if l == 0 {
            return Vec::new();
        }
        (0..self.interfaces.len())
            .filter(|&i| self.on_level_line(i, l - 1) && !self.on_level_line(i, l))
            .collect()
    }

    /// Level-`l` cell containing fine cell `cell`.
    pub fn ancestor(&self, cell: usize, l: usize) -> usize {
        let (ix, iy) = (cell % self.n, cell / self.n);
        (iy >> l) * self.cells_per_axis(l) + (ix >> l)
    }

    /// The four level-(l−1) children of level-`l` cell `c`, ordered
    /// bottom-left, bottom-right, top-left, top-right.
    pub fn children(&self, l: usize, c: usize) -> [usize; 4] {
        let n = self.cells_per_axis(l);
        let (cx, cy) = (c % n, c / n);
        let nc = 2 * n;
        [
            2 * cy * nc + 2 * cx,
            2 * cy * nc + 2 * cx + 1,
            (2 * cy + 1) * nc + 2 * cx,
            (2 * cy + 1) * nc + 2 * cx + 1,
        ]
    }

    /// Fine interfaces along the boundary of level-`l` cell `c`, ordered:
    /// left edge bottom to top, right edge, bottom edge left to right, top edge.
    /// Each comes with the fine cell inside `c` adjacent to it.
    pub fn level_cell_boundary(&self, l: usize, c: usize) -> Vec<(usize, usize)> {
        let n = self.cells_per_axis(l);
        let s = 1 << l;
        let (x0, y0) = ((c % n) * s, (c / n) * s);
        let mut out = Vec::with_capacity(4 * s);
        for k in 0..s {
            out.push((self.vertical(x0, y0 + k), self.cell_id(x0, y0 + k)));
        }
        for k in 0..s {
            out.push((self.vertical(x0 + s, y0 + k), self.cell_id(x0 + s - 1, y0 + k)));
        }
        for k in 0..s {
            out.push((self.horizontal(x0 + k, y0), self.cell_id(x0 + k, y0)));
        }
        for k in 0..s {
            out.push((self.horizontal(x0 + k, y0 + s), self.cell_id(x0 + k, y0 + s - 1)));
        }
        out
    }

    /// Fine interfaces strictly inside level-`l` cell `c` that lie on level-(l−1) lines.
    pub fn removed_in_cell(&self, l: usize, c: usize) -> Vec<usize> {
        let n = self.cells_per_axis(l);
        let s = 1 << l;
        let half = s / 2;
        let (x0, y0) = ((c % n) * s, (c / n) * s);
        let mut out = Vec::with_capacity(2 * s);
        for k in 0..s {
            out.push(self.vertical(x0 + half, y0 + k));
        }
        for k in 0..s {
            out.push(self.horizontal(x0 + k, y0 + half));
        }
        out.sort_unstable();
        out
    }

    /// Constituent fine interfaces of the level-`l` interface on edge `e` of level-`l` cell `c`.
    pub fn constituents(&self, l: usize, c: usize, e: Edge) -> Vec<usize> {
        let s = 1 << l;
        let b = self.level_cell_boundary(l, c);
        b[(e as usize) * s..(e as usize + 1) * s].iter().map(|p| p.0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn fig3_levels() {
        let m = build_hierarchy(8, 2).unwrap();
        assert_eq!((0..=2).map(|l| m.cells_per_axis(l)).collect::<Vec<_>>(), vec![8, 4, 2]);
        assert_eq!(m.removed_interfaces(1).len(), 64);
        for l in 0..=2 {
            assert_eq!(m.level_interfaces(l).len(), 2 * 8 * (8 / (1 << l) + 1));
        }
    }

    #[test]
    fn single_level_has_no_removed() {
        let m = build_hierarchy(4, 0).unwrap();
        assert!(m.removed_interfaces(0).is_empty());
        assert_eq!(m.interfaces.len(), 40);
    }

    #[test]
    fn rejects_non_dyadic() {
        assert!(build_hierarchy(12, 2).is_err());
        assert!(build_hierarchy(16, 1).is_err());
        assert!(build_hierarchy(0, 0).is_err());
        assert!(build_hierarchy(16, 3).is_ok());
        assert_eq!(default_levels(16), 3);
        assert_eq!(default_levels(4), 1);
        assert_eq!(default_levels(2), 0);
        assert_eq!(default_levels(1), 0);
    }

    #[test]
    fn partition_and_sharing() {
        let m = build_hierarchy(16, 3).unwrap();
        for l in 1..=3 {
            let prev: BTreeSet<_> = m.level_interfaces(l - 1).into_iter().collect();
            let cur: BTreeSet<_> = m.level_interfaces(l).into_iter().collect();
            let rem: BTreeSet<_> = m.removed_interfaces(l).into_iter().collect();
            assert!(cur.is_disjoint(&rem));
            assert_eq!(cur.union(&rem).copied().collect::<BTreeSet<_>>(), prev);
            let mut inside = BTreeSet::new();
            for c in 0..m.n_level_cells(l) {
                inside.extend(m.removed_in_cell(l, c));
            }
            assert_eq!(inside, rem);
            // each level-l line interface is on the boundary of 1 or 2 level-l cells
            let mut count = vec![0; m.interfaces.len()];
            for c in 0..m.n_level_cells(l) {
                for (i, fine) in m.level_cell_boundary(l, c) {
                    count[i] += 1;
                    assert_eq!(m.ancestor(fine, l), c);
                }
            }
            for &i in &cur {
                let expect = if m.interfaces[i].is_boundary() { 1 } else { 2 };
                assert_eq!(count[i], expect);
            }
        }
    }

    #[test]
    fn nesting_of_constituents() {
        let m = build_hierarchy(8, 2).unwrap();
        for c in 0..m.n_level_cells(1) {
            for e in Edge::ALL {
                let fine = m.constituents(1, c, e);
                assert_eq!(fine.len(), 2);
                let parent = m.ancestor(m.level_cell_boundary(1, c)[0].1, 2);
                let found = Edge::ALL.iter().any(|&pe| {
                    let coarse = m.constituents(2, parent, pe);
                    fine.iter().all(|f| coarse.contains(f))
                });
                let interior = fine.iter().all(|&f| !m.on_level_line(f, 2));
                assert!(found || interior);
            }
        }
    }

    #[test]
    fn adjacency() {
        let m = build_hierarchy(4, 1).unwrap();
        for c in 0..16 {
            for e in Edge::ALL {
                let i = m.cell_edge(c, e);
                assert_eq!(m.interfaces[i].edge_of(c), e);
            }
        }
        assert_eq!(m.locate(1.0, 1.0), 15);
        assert_eq!(m.children(1, 3), [10, 11, 14, 15]);
    }
}
