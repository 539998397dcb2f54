//! Binary factorization files.
//!
//! Layout (all integers little-endian u64 unless noted, floats little-endian f64):
//! magic `RSMF`, version (u32), key length + key bytes, fine cells `I`,
//! levels `L`, `|F^(0..=L)|`, `|G^(1..=L)|`, then the body.

use super::*;
use std::io::{Read, Write};

pub const MAGIC: &[u8; 4] = b"RSMF";
pub const FORMAT_VERSION: u32 = 1;

struct Out(Vec<u8>);

impl Out {
    fn u(&mut self, v: usize) {
        self.0.extend_from_slice(&(v as u64).to_le_bytes());
    }
    fn f(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn us(&mut self, v: &[usize]) {
        self.u(v.len());
        for &x in v {
            self.u(x);
        }
    }
    fn mat(&mut self, m: &DMatrix<f64>) {
        self.u(m.nrows());
        self.u(m.ncols());
        for &x in m.as_slice() {
            self.f(x);
        }
    }
}

struct In<'a> {
    data: &'a [u8],
    at: usize,
}

fn bad(msg: &str) -> RteError {
    RteError::Format(msg.to_string())
}

impl In<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.at + n > self.data.len() {
            return Err(bad("truncated file"));
        }
        let s = &self.data[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }
    fn u(&mut self) -> Result<usize> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| bad("integer overflow"))
    }
    fn f(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u()?;
        if n > self.data.len() {
            return Err(bad("implausible length"));
        }
        Ok(n)
    }
    fn us(&mut self) -> Result<Vec<usize>> {
        let n = self.len()?;
        (0..n).map(|_| self.u()).collect()
    }
    fn mat(&mut self) -> Result<DMatrix<f64>> {
        let (r, c) = (self.len()?, self.len()?);
        if r.checked_mul(c).map_or(true, |n| n * 8 > self.data.len()) {
            return Err(bad("implausible matrix size"));
        }
        let v = (0..r * c).map(|_| self.f()).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_vec(r, c, v))
    }
    fn pairs(&mut self) -> Result<Vec<(usize, usize)>> {
        let n = self.len()?;
        (0..n).map(|_| Ok((self.u()?, self.u()?))).collect()
    }
}

pub fn write_factorization<W: Write>(fact: &MultilevelFactorization, key: &str, mut w: W) -> Result<()> {
    let mut o = Out(Vec::new());
    o.0.extend_from_slice(MAGIC);
    o.0.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    o.u(key.len());
    o.0.extend_from_slice(key.as_bytes());
    o.u(fact.n);
    o.u(fact.levels);
    for &d in &fact.dim_f {
        o.u(d);
    }
    for &d in &fact.dim_g[1..] {
        o.u(d);
    }
    o.u(fact.dual.len());
    for d in &fact.dual {
        o.mat(d);
    }
    for b in &fact.bases {
        let lay = &b.layout;
        o.us(&lay.cell_offsets);
        o.u(lay.coords.len());
        for &(i, s) in &lay.coords {
            o.u(i);
            o.u(s);
        }
        o.u(lay.rows.len());
        for &(i, s) in &lay.rows {
            o.u(i);
            o.u(s);
        }
        o.u(lay.n_boundary_rows);
        o.u(b.traces.len());
        for cell in &b.traces {
            o.u(cell.len());
            for t in cell {
                o.u(t.iface);
                o.mat(&t.mat);
            }
        }
    }
    for l in 0..fact.levels {
        o.u(fact.lifts[l].len());
        for x in &fact.lifts[l] {
            o.us(&x.int_pos);
            o.us(&x.bnd_pos);
            o.u(x.coarse_offset);
            o.us(&x.removed_rows);
            o.mat(&x.q);
            o.mat(&x.p);
            o.f(x.condition);
        }
        o.u(fact.jumps[l].len());
        for j in &fact.jumps[l] {
            for v in [j.row, j.lower.0, j.lower.1, j.upper.0, j.upper.1] {
                o.u(v);
            }
        }
        o.us(&fact.restrict[l]);
    }
    o.mat(&fact.coarse_inverse);
    o.f(fact.coarse_condition);
    w.write_all(&o.0)?;
    Ok(())
}

/// Reads a factorization; the stored key must equal `expected_key` when given.
pub fn read_factorization<R: Read>(mut r: R, expected_key: Option<&str>) -> Result<MultilevelFactorization> {
    let mut data = Vec::new();
    r.read_to_end(&mut data)?;
    let mut i = In { data: &data, at: 0 };
    if i.take(4)? != MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u32::from_le_bytes(i.take(4)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let klen = i.len()?;
    let key = String::from_utf8(i.take(klen)?.to_vec()).map_err(|_| bad("key is not utf-8"))?;
    if let Some(k) = expected_key {
        if k != key {
            return Err(bad("key mismatch"));
        }
    }
    let n = i.u()?;
    let levels = i.u()?;
    if levels > 64 {
        return Err(bad("implausible level count"));
    }
    let dim_f = (0..=levels).map(|_| i.u()).collect::<Result<Vec<_>>>()?;
    let mut dim_g = vec![0];
    for _ in 0..levels {
        dim_g.push(i.u()?);
    }
    let nd = i.len()?;
    let dual = (0..nd).map(|_| i.mat()).collect::<Result<Vec<_>>>()?;
    let mut bases = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        let cell_offsets = i.us()?;
        let coords = i.pairs()?;
        let rows = i.pairs()?;
        let n_boundary_rows = i.u()?;
        let nc = i.len()?;
        let mut traces = Vec::with_capacity(nc);
        for _ in 0..nc {
            let nb = i.len()?;
            let mut cell = Vec::with_capacity(nb);
            for _ in 0..nb {
                let iface = i.u()?;
                cell.push(TraceBlock { iface, mat: Arc::new(i.mat()?) });
            }
            traces.push(cell);
        }
        bases.push(LevelBasis { level, layout: LevelLayout { cell_offsets, coords, rows, n_boundary_rows }, traces });
    }
    let mut lifts = Vec::new();
    let mut jumps = Vec::new();
    let mut restrict = Vec::new();
    for _ in 0..levels {
        let nl = i.len()?;
        let mut v = Vec::with_capacity(nl);
        for _ in 0..nl {
            v.push(Lift {
                int_pos: i.us()?,
                bnd_pos: i.us()?,
                coarse_offset: i.u()?,
                removed_rows: i.us()?,
                q: Arc::new(i.mat()?),
                p: Arc::new(i.mat()?),
                condition: i.f()?,
            });
        }
        lifts.push(v);
        let nj = i.len()?;
        let mut js = Vec::with_capacity(nj);
        for _ in 0..nj {
            js.push(JumpOp { row: i.u()?, lower: (i.u()?, i.u()?), upper: (i.u()?, i.u()?) });
        }
        jumps.push(js);
        restrict.push(i.us()?);
    }
    let coarse_inverse = i.mat()?;
    let coarse_condition = i.f()?;
    if i.at != data.len() {
        return Err(bad("trailing bytes"));
    }
    let fact = MultilevelFactorization {
        n,
        levels,
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
    validate(&fact)?;
    let mut fact = fact;
    fact.share_blocks();
    Ok(fact)
}

/// Index bounds checks so a corrupted file cannot cause out-of-range access.
fn validate(f: &MultilevelFactorization) -> Result<()> {
    let check = |ok: bool, what: &str| if ok { Ok(()) } else { Err(bad(what)) };
    for (l, b) in f.bases.iter().enumerate() {
        let lay = &b.layout;
        check(lay.cell_offsets.last() == Some(&lay.coords.len()), "cell offsets")?;
        check(lay.cell_offsets.windows(2).all(|w| w[0] <= w[1]), "cell offsets order")?;
        check(b.traces.len() + 1 == lay.cell_offsets.len(), "trace count")?;
        check(f.dim_f[l] == lay.coords.len(), "dimension table")?;
        for (c, cell) in b.traces.iter().enumerate() {
            for t in cell {
                check(t.mat.ncols() == lay.cell_range(c).len(), "trace width")?;
            }
        }
    }
    for l in 0..f.levels {
        let (fine, coarse) = (&f.bases[l].layout, &f.bases[l + 1].layout);
        for x in &f.lifts[l] {
            check(x.int_pos.iter().chain(&x.bnd_pos).all(|&p| p < fine.n_coords()), "lift positions")?;
            check(x.removed_rows.iter().all(|&r| r < fine.n_rows()), "lift rows")?;
            check(x.coarse_offset + x.bnd_pos.len() <= coarse.n_coords(), "lift offset")?;
            check(x.q.shape() == (x.int_pos.len(), x.removed_rows.len()), "Q shape")?;
            check(x.p.shape() == (x.int_pos.len(), x.bnd_pos.len()), "P shape")?;
        }
        for j in &f.jumps[l] {
            for (c, k) in [j.lower, j.upper] {
                check(c < f.bases[l].traces.len() && k < f.bases[l].traces[c].len(), "jump block")?;
                check(j.row + f.bases[l].traces[c][k].mat.nrows() <= coarse.n_rows(), "jump row")?;
            }
        }
        check(f.restrict[l].len() == coarse.n_rows(), "restriction length")?;
        check(f.restrict[l].iter().all(|&r| r < fine.n_rows()), "restriction index")?;
    }
    let top = &f.bases[f.levels].layout;
    check(f.coarse_inverse.shape() == (top.n_coords(), top.n_rows()), "coarse inverse shape")?;
    check(f.dual.len() == f.bases[0].traces.len(), "dual count")?;
    Ok(())
}
