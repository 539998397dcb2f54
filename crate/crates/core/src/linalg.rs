//! Small dense helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Induced 1-norm (max column sum).
pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Inverse together with the 1-norm condition estimate `‖A‖₁‖A⁻¹‖₁`.
/// Returns `None` when LU breaks down.
pub fn inverse_with_cond(a: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    if a.nrows() == 0 {
        return Some((DMatrix::zeros(0, 0), 1.0));
    }
    let inv = a.clone().lu().try_inverse()?;
    if inv.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let cond = norm1(a) * norm1(&inv);
    Some((inv, cond))
}

/// `y += alpha · A x` on raw slices (column-major `A`).
#[inline]
pub fn gemv_acc(a: &DMatrix<f64>, x: &[f64], y: &mut [f64], alpha: f64) {
    debug_assert_eq!(a.ncols(), x.len());
    debug_assert_eq!(a.nrows(), y.len());
    let rows = a.nrows();
    let data = a.as_slice();
    for (j, &xj) in x.iter().enumerate() {
        let s = alpha * xj;
        if s == 0.0 {
            continue;
        }
        let col = &data[j * rows..(j + 1) * rows];
        for (yi, ai) in y.iter_mut().zip(col) {
            *yi += s * ai;
        }
    }
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative 2-norm distance `‖a − b‖/‖b‖` (absolute when `b = 0`).
pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let n = norm2(b);
    if n == 0.0 { d } else { d / n }
}

/// Real eigen-decomposition of a general matrix with a real, diagonalizable
/// spectrum. Eigenvalues ascending; eigenvector `k` is column `k`.
pub struct RealEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
    pub max_imag: f64,
    /// A cluster had fewer independent null vectors than its size.
    pub defective: bool,
}

pub fn real_eigen(m: &DMatrix<f64>) -> RealEigen {
    let n = m.nrows();
    let complex = m.clone().complex_eigenvalues();
    let max_imag = complex.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    let mut vals: Vec<f64> = complex.iter().map(|z| z.re).collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = norm1(m).max(1.0);

    let mut vectors = DMatrix::zeros(n, n);
    let mut values = Vec::with_capacity(n);
    let mut defective = false;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && (vals[j] - vals[j - 1]).abs() <= 1e-7 * scale {
            j += 1;
        }
        let g = j - i;
        let lam = vals[i..j].iter().sum::<f64>() / g as f64;
        let mut shifted = m.clone();
        for d in 0..n {
            shifted[(d, d)] -= lam;
        }
        let svd = shifted.svd(false, true);
        let v_t = svd.v_t.expect("requested right singular vectors");
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].partial_cmp(&svd.singular_values[b]).unwrap());
        if svd.singular_values[order[g - 1]] > 1e-8 * scale {
            defective = true;
        }
        for (slot, &o) in order[..g].iter().enumerate() {
            let mut v: DVector<f64> = v_t.row(o).transpose();
            if defective && slot > 0 {
                v = v_t.row(order[0]).transpose();
            }
            normalize_max(&mut v);
            vectors.set_column(i + slot, &v);
            values.push(if g > 1 { lam } else { vals[i] });
        }
        i = j;
    }
    RealEigen { values, vectors, max_imag, defective }
}

/// Scales to unit max-norm with the largest-magnitude entry positive.
pub fn normalize_max(v: &mut DVector<f64>) {
    let mut best = 0.0f64;
    let mut signed = 0.0;
    for &x in v.iter() {
        if x.abs() > best * (1.0 + 1e-12) {
            best = x.abs();
            signed = x;
        }
    }
    if signed != 0.0 {
        *v /= signed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_of_symmetric_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 4.0]);
        let e = real_eigen(&a);
        let reference = a.clone().symmetric_eigen();
        let mut r: Vec<f64> = reference.eigenvalues.iter().copied().collect();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for k in 0..3 {
            assert!((e.values[k] - r[k]).abs() < 1e-12);
            let v = e.vectors.column(k);
            let res = &a * v - v * e.values[k];
            assert!(res.amax() < 1e-12);
            assert!((v.amax() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn repeated_eigenvalue_gets_independent_vectors() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1.0, 2.0]));
        let e = real_eigen(&a);
        assert!(!e.defective);
        let sub = e.vectors.view((0, 0), (3, 2)).clone_owned();
        assert_eq!(sub.rank(1e-10), 2);
    }

    #[test]
    fn jordan_block_is_flagged() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        assert!(real_eigen(&a).defective);
    }

    #[test]
    fn condition_estimate() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1e-3]);
        let (inv, cond) = inverse_with_cond(&a).unwrap();
        assert!((inv[(1, 1)] - 1e3).abs() < 1e-9);
        assert!((cond - 1e3).abs() < 1e-9);
        assert!(inverse_with_cond(&DMatrix::zeros(2, 2)).is_none());
    }
}
