//! Multilevel factorization of the projected interface-condition operator.
//!
//! A level-`l` coordinate is a pair (fine interface on a level-`l` line, slow
//! slot) and belongs to the level-`l` cell containing the fine cell that owns
//! the slot. A level-`l` basis function of cell `C` has unit projected trace
//! at one of `C`'s coordinates and zero at the others, and is expanded in the
//! level-(l−1) bases of `C`'s four children with zero projected jumps across
//! the fine interfaces removed when going from level l−1 to l.
//!
//! Rows of `B_l` are ordered boundary rows first (by fine interface, then
//! slot) followed by jump rows at interior fine interfaces on level-`l` lines.
//! Jumps are right minus left and top minus bottom.

mod io;

pub use io::{read_factorization, write_factorization, FORMAT_VERSION, MAGIC};

use crate::discretization::Discretization;
use crate::error::{Result, RteError};
use crate::linalg::{gemv_acc, inverse_with_cond};
use crate::mesh::MeshHierarchy;
use crate::tfps_basis::Edge;
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::Arc;

/// Local systems with a condition estimate above this are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Coordinates and rows of one level.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelLayout {
    /// `cell_offsets[c]..cell_offsets[c+1]` are the coordinates of level cell `c`.
    pub cell_offsets: Vec<usize>,
    /// `(fine interface, slot)` of every coordinate.
    pub coords: Vec<(usize, usize)>,
    /// `(fine interface, slot)` of every row.
    pub rows: Vec<(usize, usize)>,
    pub n_boundary_rows: usize,
}

impl LevelLayout {
    pub fn n_coords(&self) -> usize {
        self.coords.len()
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cell_range(&self, c: usize) -> std::ops::Range<usize> {
        self.cell_offsets[c]..self.cell_offsets[c + 1]
    }
}

/// Projected trace of a level cell's basis at one fine interface.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceBlock {
    pub iface: usize,
    /// `|V_i| × n_coords(cell)`
    pub mat: Arc<DMatrix<f64>>,
}

/// Level-`l` basis: per level cell, its projected traces at the fine
/// interfaces along the cell boundary (in `level_cell_boundary` order).
#[derive(Debug, Clone, PartialEq)]
pub struct LevelBasis {
    pub level: usize,
    pub layout: LevelLayout,
    pub traces: Vec<Vec<TraceBlock>>,
}

/// Expansion of one coarse cell's F and G bases in its children's bases.
#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    /// Fine-level positions of the children's coordinates on removed interfaces.
    pub int_pos: Vec<usize>,
    /// Fine-level positions of the coarse cell's coordinates, in coarse order.
    pub bnd_pos: Vec<usize>,
    pub coarse_offset: usize,
    /// Fine-level row indices of the jump rows at the removed interfaces.
    pub removed_rows: Vec<usize>,
    /// G basis: `n_int × n_removed_rows`.
    pub q: Arc<DMatrix<f64>>,
    /// F basis, interior part: `n_int × n_bnd`.
    pub p: Arc<DMatrix<f64>>,
    pub condition: f64,
}

/// Jump of the fine-level field at an interior interface on a coarse line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpOp {
    /// First coarse row of the interface.
    pub row: usize,
    pub lower: (usize, usize),
    pub upper: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultilevelFactorization {
    pub n: usize,
    pub levels: usize,
    /// Per fine cell: dual coefficients, raw retained modes × level-0 coordinates.
    pub dual: Vec<DMatrix<f64>>,
    pub bases: Vec<LevelBasis>,
    /// `lifts[l]`: level l → l+1, one per level-(l+1) cell.
    pub lifts: Vec<Vec<Lift>>,
    /// `jumps[l]`: level-(l+1) interior rows evaluated from level-`l` cells.
    pub jumps: Vec<Vec<JumpOp>>,
    /// `restrict[l][r]`: level-`l` row of level-(l+1) row `r`.
    pub restrict: Vec<Vec<usize>>,
    pub coarse_inverse: DMatrix<f64>,
    pub coarse_condition: f64,
    /// `|F^(l)|` for l = 0..=L.
    pub dim_f: Vec<usize>,
    /// `|G^(l)|` for l = 1..=L (index 0 unused, zero).
    pub dim_g: Vec<usize>,
}

fn layout(mesh: &MeshHierarchy, disc: &Discretization, l: usize) -> LevelLayout {
    let mut cell_offsets = vec![0];
    let mut coords = Vec::new();
    for c in 0..mesh.n_level_cells(l) {
        for (i, fine) in mesh.level_cell_boundary(l, c) {
            for (s, &(owner, _)) in disc.projections[i].slow_modes.iter().enumerate() {
                if owner == fine {
                    coords.push((i, s));
                }
            }
        }
        cell_offsets.push(coords.len());
    }
    let ifaces = mesh.level_interfaces(l);
    let mut rows = Vec::new();
    for pass_boundary in [true, false] {
        for &i in &ifaces {
            if mesh.interfaces[i].is_boundary() == pass_boundary {
                rows.extend((0..disc.projections[i].n_slow()).map(|s| (i, s)));
            }
        }
    }
    let n_boundary_rows = ifaces
        .iter()
        .filter(|&&i| mesh.interfaces[i].is_boundary())
        .map(|&i| disc.projections[i].n_slow())
        .sum();
    LevelLayout { cell_offsets, coords, rows, n_boundary_rows }
}

fn row_starts(layout: &LevelLayout, n_ifaces: usize) -> Vec<usize> {
    let mut start = vec![usize::MAX; n_ifaces];
    for (r, &(i, s)) in layout.rows.iter().enumerate() {
        if s == 0 {
            start[i] = r;
        }
    }
    start
}

/// Dual basis of every fine cell: raw coefficients with identity own traces.
pub fn build_level0_basis(disc: &Discretization) -> Result<(LevelBasis, Vec<DMatrix<f64>>)> {
    let mesh = &disc.mesh;
    let lay = layout(mesh, disc, 0);
    let per_cell = (0..mesh.n_cells())
        .into_par_iter()
        .map(|c| {
            let basis = &disc.bases[c];
            let r = basis.retained.len();
            let mut raw_traces = Vec::with_capacity(4);
            for e in Edge::ALL {
                let i = mesh.cell_edge(c, e);
                let proj = &disc.projections[i];
                let mut t = DMatrix::zeros(proj.n_slow(), r);
                let mut tmp = vec![0.0; proj.dim()];
                for (col, &k) in basis.retained.iter().enumerate() {
                    let f = basis.edge_factor(k, e);
                    let xi = basis.modes.xi.column(k);
                    for (d, &m) in proj.components.iter().enumerate() {
                        tmp[d] = f * xi[m];
                    }
                    let p = proj.project(&tmp)?;
                    t.column_mut(col).copy_from_slice(&p);
                }
                raw_traces.push((i, t));
            }
            let range = lay.cell_range(c);
            if range.len() != r {
                return Err(RteError::DimensionMismatch { expected: r, got: range.len() });
            }
            let mut own = DMatrix::zeros(range.len(), r);
            for (row, &(i, s)) in lay.coords[range].iter().enumerate() {
                let t = &raw_traces.iter().find(|(j, _)| *j == i).unwrap().1;
                own.row_mut(row).copy_from(&t.row(s));
            }
            let dual = match inverse_with_cond(&own) {
                Some((inv, cond)) if cond <= MAX_CONDITION => inv,
                Some((_, cond)) => return Err(RteError::SingularLocalSystem { level: 0, cell: c, cond }),
                None => return Err(RteError::SingularLocalSystem { level: 0, cell: c, cond: f64::INFINITY }),
            };
            let traces = raw_traces.into_iter().map(|(iface, t)| TraceBlock { iface, mat: Arc::new(t * &dual) }).collect();
            Ok((traces, dual))
        })
        .collect::<Result<Vec<_>>>()?;
    let (traces, dual): (Vec<_>, Vec<_>) = per_cell.into_iter().unzip();
    Ok((LevelBasis { level: 0, layout: lay, traces }, dual))
}

/// Lower and upper `(level cell, block)` of each fine interface at level `l`.
fn adjacency(mesh: &MeshHierarchy, l: usize) -> Vec<[Option<(usize, usize)>; 2]> {
    let mut adj = vec![[None, None]; mesh.interfaces.len()];
    for c in 0..mesh.n_level_cells(l) {
        for (pos, (i, fine)) in mesh.level_cell_boundary(l, c).into_iter().enumerate() {
            let side = if mesh.interfaces[i].lower == Some(fine) { 0 } else { 1 };
            adj[i][side] = Some((c, pos));
        }
    }
    adj
}

/// Builds level `l+1` from level `l`: F and G expansions of every coarse cell
/// and the coarse cells' projected traces.
pub fn lift_level(disc: &Discretization, fine: &LevelBasis) -> Result<(LevelBasis, Vec<Lift>)> {
    let mesh = &disc.mesh;
    let l = fine.level;
    let lay = layout(mesh, disc, l + 1);
    let fine_rows = row_starts(&fine.layout, mesh.interfaces.len());
    let adj = adjacency(mesh, l);
    let results = (0..mesh.n_level_cells(l + 1))
        .into_par_iter()
        .map(|c0| {
            let children = mesh.children(l + 1, c0);
            let removed = mesh.removed_in_cell(l + 1, c0);
            let removed_set: std::collections::HashSet<usize> = removed.iter().copied().collect();
            // classify children's coordinates
            let mut pos_of: HashMap<(usize, usize), usize> = HashMap::new();
            let mut int_pos = Vec::new();
            for &ch in &children {
                for p in fine.layout.cell_range(ch) {
                    let key = fine.layout.coords[p];
                    pos_of.insert(key, p);
                    if removed_set.contains(&key.0) {
                        int_pos.push(p);
                    }
                }
            }
            let coarse_range = lay.cell_range(c0);
            let bnd_pos: Vec<usize> = lay.coords[coarse_range.clone()].iter().map(|k| pos_of[k]).collect();
            let n_int = int_pos.len();
            let n_bnd = bnd_pos.len();
            // column index of each fine position inside [int | bnd]
            let mut col_of: HashMap<usize, usize> = HashMap::new();
            for (j, &p) in int_pos.iter().enumerate() {
                col_of.insert(p, j);
            }
            for (j, &p) in bnd_pos.iter().enumerate() {
                col_of.insert(p, n_int + j);
            }
            let mut removed_rows = Vec::new();
            let mut jmat = DMatrix::zeros(n_int, n_int + n_bnd);
            let mut r0 = 0;
            for &i in &removed {
                let nv = disc.projections[i].n_slow();
                for s in 0..nv {
                    removed_rows.push(fine_rows[i] + s);
                }
                for (sign, side) in [(-1.0, 0), (1.0, 1)] {
                    let (cell, blk) = adj[i][side].expect("removed interfaces are interior");
                    let t = &fine.traces[cell][blk].mat;
                    let off = fine.layout.cell_offsets[cell];
                    for a in 0..t.ncols() {
                        // children's coordinates are either interior or on the coarse boundary
                        let col = col_of[&(off + a)];
                        for s in 0..nv {
                            jmat[(r0 + s, col)] += sign * t[(s, a)];
                        }
                    }
                }
                r0 += nv;
            }
            if removed_rows.len() != n_int {
                return Err(RteError::DimensionMismatch { expected: n_int, got: removed_rows.len() });
            }
            let j_int = jmat.columns(0, n_int).clone_owned();
            let j_bnd = jmat.columns(n_int, n_bnd).clone_owned();
            let (q, condition) = match inverse_with_cond(&j_int) {
                Some((inv, cond)) if cond <= MAX_CONDITION => (inv, cond),
                Some((_, cond)) => return Err(RteError::SingularLocalSystem { level: l + 1, cell: c0, cond }),
                None => return Err(RteError::SingularLocalSystem { level: l + 1, cell: c0, cond: f64::INFINITY }),
            };
            let p = -(&q * j_bnd);
            // coarse traces: child trace times child's rows of the prolongation
            let mut traces = Vec::new();
            for (i, fine_cell) in mesh.level_cell_boundary(l + 1, c0) {
                let ch = mesh.ancestor(fine_cell, l);
                let blk = fine.traces[ch].iter().find(|b| b.iface == i).expect("child trace");
                let off = fine.layout.cell_offsets[ch];
                let mut mat = DMatrix::zeros(blk.mat.nrows(), n_bnd);
                for a in 0..blk.mat.ncols() {
                    let col = col_of[&(off + a)];
                    if col < n_int {
                        mat.gemm(1.0, &blk.mat.columns(a, 1), &p.rows(col, 1), 1.0);
                    } else {
                        let mut dst = mat.column_mut(col - n_int);
                        dst += blk.mat.column(a);
                    }
                }
                traces.push(TraceBlock { iface: i, mat: Arc::new(mat) });
            }
            let lift = Lift {
                int_pos,
                bnd_pos,
                coarse_offset: coarse_range.start,
                removed_rows,
                q: Arc::new(q),
                p: Arc::new(p),
                condition,
            };
            Ok((traces, lift))
        })
        .collect::<Result<Vec<_>>>()?;
    let (traces, lifts): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    Ok((LevelBasis { level: l + 1, layout: lay, traces }, lifts))
}

/// Dense `B_l` of a level basis.
pub fn assemble_dense(mesh: &MeshHierarchy, basis: &LevelBasis) -> DMatrix<f64> {
    let lay = &basis.layout;
    let mut b = DMatrix::zeros(lay.n_rows(), lay.n_coords());
    let starts = row_starts(lay, mesh.interfaces.len());
    let adj = adjacency(mesh, basis.level);
    let mut coord_index: HashMap<(usize, usize), usize> = HashMap::new();
    for (p, &k) in lay.coords.iter().enumerate() {
        coord_index.insert(k, p);
    }
    for (r, &(i, s)) in lay.rows.iter().enumerate() {
        if mesh.interfaces[i].is_boundary() {
            b[(r, coord_index[&(i, s)])] = 1.0;
        }
    }
    for i in mesh.level_interfaces(basis.level) {
        if mesh.interfaces[i].is_boundary() {
            continue;
        }
        for (sign, side) in [(-1.0, 0), (1.0, 1)] {
            let (cell, blk) = adj[i][side].unwrap();
            let t = &basis.traces[cell][blk].mat;
            let off = lay.cell_offsets[cell];
            for s in 0..t.nrows() {
                for a in 0..t.ncols() {
                    b[(starts[i] + s, off + a)] += sign * t[(s, a)];
                }
            }
        }
    }
    b
}

fn jump_ops(mesh: &MeshHierarchy, fine: &LevelBasis, coarse: &LevelLayout) -> Vec<JumpOp> {
    let adj = adjacency(mesh, fine.level);
    let starts = row_starts(coarse, mesh.interfaces.len());
    let mut ops = Vec::new();
    for i in mesh.level_interfaces(fine.level + 1) {
        if mesh.interfaces[i].is_boundary() || starts[i] == usize::MAX {
            continue;
        }
        ops.push(JumpOp { row: starts[i], lower: adj[i][0].unwrap(), upper: adj[i][1].unwrap() });
    }
    ops
}

/// Builds every level and the dense coarsest inverse.
pub fn factorize(disc: &Discretization) -> Result<MultilevelFactorization> {
    let mesh = &disc.mesh;
    let (b0, dual) = build_level0_basis(disc)?;
    let mut bases = vec![b0];
    let mut lifts = Vec::new();
    let mut jumps = Vec::new();
    let mut restrict = Vec::new();
    for l in 0..mesh.levels {
        let (next, lift) = lift_level(disc, &bases[l])?;
        jumps.push(jump_ops(mesh, &bases[l], &next.layout));
        let fine_starts = row_starts(&bases[l].layout, mesh.interfaces.len());
        restrict.push(next.layout.rows.iter().map(|&(i, s)| fine_starts[i] + s).collect());
        lifts.push(lift);
        bases.push(next);
    }
    let top = bases.last().unwrap();
    let b_top = assemble_dense(mesh, top);
    let (coarse_inverse, coarse_condition) = match inverse_with_cond(&b_top) {
        Some((inv, cond)) if cond <= 1e14 => (inv, cond),
        Some((_, cond)) => return Err(RteError::CoarseSingular { cond }),
        None => return Err(RteError::CoarseSingular { cond: f64::INFINITY }),
    };
    let dim_f: Vec<usize> = bases.iter().map(|b| b.layout.n_coords()).collect();
    let mut dim_g = vec![0];
    for lift in &lifts {
        dim_g.push(lift.iter().map(|x| x.q.ncols()).sum());
    }
    let mut fact = MultilevelFactorization {
        n: mesh.n,
        levels: mesh.levels,
        dual,
        bases,
        lifts,
        jumps,
        restrict,
        coarse_inverse,
        coarse_condition,
        dim_f,
        dim_g,
    };
    fact.share_blocks();
    Ok(fact)
}

/// Bitwise-equal matrices map to one shared allocation.
#[derive(Default)]
struct BlockPool(HashMap<(usize, usize, Vec<u64>), Arc<DMatrix<f64>>>);

impl BlockPool {
    fn intern(&mut self, m: &mut Arc<DMatrix<f64>>) {
        let key = (m.nrows(), m.ncols(), m.iter().map(|v| v.to_bits()).collect());
        *m = self.0.entry(key).or_insert_with(|| m.clone()).clone();
    }
}

impl MultilevelFactorization {
    /// Shares identical local blocks between cells. Cells with equal optics
    /// and equal boundary situation produce bitwise-equal lifts and traces,
    /// so in piecewise-constant media the online working set collapses to a
    /// few distinct blocks per level.
    pub fn share_blocks(&mut self) {
        let mut pool = BlockPool::default();
        for lift in self.lifts.iter_mut().flatten() {
            pool.intern(&mut lift.q);
            pool.intern(&mut lift.p);
        }
        for blk in self.bases.iter_mut().flat_map(|b| b.traces.iter_mut().flatten()) {
            pool.intern(&mut blk.mat);
        }
    }

    /// Number of distinct lift and trace allocations.
    pub fn distinct_blocks(&self) -> usize {
        let mut seen = std::collections::HashSet::new();
        for lift in self.lifts.iter().flatten() {
            seen.insert(Arc::as_ptr(&lift.q));
            seen.insert(Arc::as_ptr(&lift.p));
        }
        for blk in self.bases.iter().flat_map(|b| b.traces.iter().flatten()) {
            seen.insert(Arc::as_ptr(&blk.mat));
        }
        seen.len()
    }

    pub fn n_rows(&self, l: usize) -> usize {
        self.bases[l].layout.n_rows()
    }

    pub fn n_coords(&self, l: usize) -> usize {
        self.bases[l].layout.n_coords()
    }

    /// `B_0⁻¹ v`.
    pub fn apply_inverse(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut flops = 0;
        self.apply_inverse_counted(v, &mut flops)
    }

    /// `B_0⁻¹ v`, adding the multiply-add count to `flops`.
    pub fn apply_inverse_counted(&self, v: &[f64], flops: &mut u64) -> Result<Vec<f64>> {
        self.apply_level(0, v, flops)
    }

    /// `B_l⁻¹ v` for a level-`l` row vector.
    pub fn apply_level(&self, l: usize, v: &[f64], flops: &mut u64) -> Result<Vec<f64>> {
        if v.len() != self.n_rows(l) {
            return Err(RteError::DimensionMismatch { expected: self.n_rows(l), got: v.len() });
        }
        Ok(self.apply_rec(l, v, flops))
    }

    fn apply_rec(&self, l: usize, v: &[f64], flops: &mut u64) -> Vec<f64> {
        if l == self.levels {
            let mut x = vec![0.0; self.coarse_inverse.nrows()];
            gemv_acc(&self.coarse_inverse, v, &mut x, 1.0);
            *flops += 2 * (self.coarse_inverse.len() as u64);
            return x;
        }
        let lay = &self.bases[l].layout;
        // G part from the removed jumps
        let mut w = vec![0.0; lay.n_coords()];
        let mut buf = Vec::new();
        for lift in &self.lifts[l] {
            buf.clear();
            buf.extend(lift.removed_rows.iter().map(|&r| v[r]));
            let mut out = vec![0.0; lift.int_pos.len()];
            gemv_acc(&lift.q, &buf, &mut out, 1.0);
            *flops += 2 * lift.q.len() as u64;
            for (&p, o) in lift.int_pos.iter().zip(out) {
                w[p] = o;
            }
        }
        // coarse right-hand side: surviving rows minus what the G part already produces
        let mut u: Vec<f64> = self.restrict[l].iter().map(|&r| v[r]).collect();
        for op in &self.jumps[l] {
            for (sign, (cell, blk)) in [(1.0, op.upper), (-1.0, op.lower)] {
                let t = &self.bases[l].traces[cell][blk].mat;
                let range = lay.cell_range(cell);
                gemv_acc(t, &w[range], &mut u[op.row..op.row + t.nrows()], -sign);
                *flops += 2 * t.len() as u64;
            }
        }
        let y = self.apply_rec(l + 1, &u, flops);
        let mut x = w;
        for lift in &self.lifts[l] {
            let yc = &y[lift.coarse_offset..lift.coarse_offset + lift.bnd_pos.len()];
            for (&p, &val) in lift.bnd_pos.iter().zip(yc) {
                x[p] = val;
            }
            let mut out = vec![0.0; lift.int_pos.len()];
            gemv_acc(&lift.p, yc, &mut out, 1.0);
            *flops += 2 * lift.p.len() as u64;
            for (&p, o) in lift.int_pos.iter().zip(out) {
                x[p] += o;
            }
        }
        x
    }

    /// Level-(l−1) coordinates of the F^(l) function with level-`l` coordinates `y`.
    pub fn prolong_once(&self, l: usize, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_coords(l - 1)];
        for lift in &self.lifts[l - 1] {
            let yc = &y[lift.coarse_offset..lift.coarse_offset + lift.bnd_pos.len()];
            for (&p, &val) in lift.bnd_pos.iter().zip(yc) {
                x[p] = val;
            }
            let mut out = vec![0.0; lift.int_pos.len()];
            gemv_acc(&lift.p, yc, &mut out, 1.0);
            for (&p, o) in lift.int_pos.iter().zip(out) {
                x[p] += o;
            }
        }
        x
    }

    /// Level-0 coordinates of a level-`l` F function.
    pub fn prolong(&self, l: usize, y: &[f64]) -> Vec<f64> {
        let mut cur = y.to_vec();
        for m in (1..=l).rev() {
            cur = self.prolong_once(m, &cur);
        }
        cur
    }

    /// Level-(l−1) coordinates of the G^(l) function with removed-jump values `j`
    /// (ordered like the concatenated `removed_rows` of the level-`l` lifts).
    pub fn g_function(&self, l: usize, j: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_coords(l - 1)];
        let mut at = 0;
        for lift in &self.lifts[l - 1] {
            let n = lift.removed_rows.len();
            let mut out = vec![0.0; lift.int_pos.len()];
            gemv_acc(&lift.q, &j[at..at + n], &mut out, 1.0);
            for (&p, o) in lift.int_pos.iter().zip(out) {
                x[p] = o;
            }
            at += n;
        }
        x
    }

    /// Raw retained-mode coefficients per fine cell from level-0 coordinates.
    pub fn raw_coefficients(&self, coords: &[f64]) -> Vec<Vec<f64>> {
        let lay = &self.bases[0].layout;
        (0..self.dual.len())
            .map(|c| {
                let d = &self.dual[c];
                let mut out = vec![0.0; d.nrows()];
                gemv_acc(d, &coords[lay.cell_range(c)], &mut out, 1.0);
                out
            })
            .collect()
    }

    /// Number of stored floating-point values.
    pub fn storage(&self) -> usize {
        let mut total = self.coarse_inverse.len();
        total += self.dual.iter().map(|d| d.len()).sum::<usize>();
        for b in &self.bases {
            total += b.traces.iter().flatten().map(|t| t.mat.len()).sum::<usize>();
        }
        for lifts in &self.lifts {
            total += lifts.iter().map(|x| x.p.len() + x.q.len()).sum::<usize>();
        }
        total
    }

    /// Largest condition estimate among all local systems.
    pub fn max_local_condition(&self) -> f64 {
        self.lifts.iter().flatten().map(|x| x.condition).fold(0.0, f64::max)
    }
}

/// Dense LU of `B_0`, for verification only.
pub struct DenseOracle {
    pub matrix: DMatrix<f64>,
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

pub const DENSE_LIMIT: usize = 20000;

pub fn dense_oracle_inverse(disc: &Discretization, level0: &LevelBasis) -> Result<DenseOracle> {
    let n = level0.layout.n_coords();
    if n > DENSE_LIMIT {
        return Err(RteError::SizeGuard { what: "dense B_0".into(), size: n, limit: DENSE_LIMIT });
    }
    let matrix = assemble_dense(&disc.mesh, level0);
    let lu = matrix.clone().lu();
    Ok(DenseOracle { matrix, lu })
}

impl DenseOracle {
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        let b = nalgebra::DVector::from_column_slice(v);
        let x = self.lu.solve(&b).ok_or(RteError::SingularSystem)?;
        Ok(x.as_slice().to_vec())
    }
}
