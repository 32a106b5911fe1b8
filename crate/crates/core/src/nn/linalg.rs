//! Matrix kernels on raw row-major slices.
//!
//! Three product layouts cover every forward and backward pass in the crate:
//! `nn` (X·W), `nt` (dZ·Wᵀ) and `tn` (Xᵀ·dZ, accumulating). Each kernel has a
//! sequential implementation plus a row-parallel wrapper; the parallel split
//! assigns whole output rows to threads, so the floating-point evaluation
//! order — and therefore the result — is identical in both.

use crate::par;

/// Below this many multiply-adds the parallel dispatch is not worth it.
const PAR_MIN_FLOPS: usize = 1 << 16;

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// out = A (m×k) · B (k×n), sequential.
pub fn matmul_nn_seq(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        row.iter_mut().for_each(|v| *v = 0.0);
        for (l, &aval) in a[i * k..(i + 1) * k].iter().enumerate() {
            if aval != 0.0 {
                axpy(aval, &b[l * n..(l + 1) * n], row);
            }
        }
    }
}

/// out = A (m×k) · B (k×n).
pub fn matmul_nn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    if !par::parallel_enabled() || m * k * n < PAR_MIN_FLOPS || m < 2 {
        return matmul_nn_seq(a, b, m, k, n, out);
    }
    let rows_per_chunk = (m / (4 * par::current_threads()).max(1)).max(1);
    par::for_each_row_chunk(out, n, rows_per_chunk, |row0, chunk| {
        let rows = chunk.len() / n;
        for r in 0..rows {
            let i = row0 + r;
            let row = &mut chunk[r * n..(r + 1) * n];
            row.iter_mut().for_each(|v| *v = 0.0);
            for (l, &aval) in a[i * k..(i + 1) * k].iter().enumerate() {
                if aval != 0.0 {
                    axpy(aval, &b[l * n..(l + 1) * n], row);
                }
            }
        }
    });
}

/// out = A (m×k) · Bᵀ where B is (n×k), sequential.
pub fn matmul_nt_seq(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (j, oval) in orow.iter_mut().enumerate() {
            *oval = dot(arow, &b[j * k..(j + 1) * k]);
        }
    }
}

/// out = A (m×k) · Bᵀ where B is (n×k).
pub fn matmul_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, out: &mut [f64]) {
    if !par::parallel_enabled() || m * k * n < PAR_MIN_FLOPS || m < 2 {
        return matmul_nt_seq(a, b, m, k, n, out);
    }
    let rows_per_chunk = (m / (4 * par::current_threads()).max(1)).max(1);
    par::for_each_row_chunk(out, n, rows_per_chunk, |row0, chunk| {
        let rows = chunk.len() / n;
        for r in 0..rows {
            let i = row0 + r;
            let arow = &a[i * k..(i + 1) * k];
            let orow = &mut chunk[r * n..(r + 1) * n];
            for (j, oval) in orow.iter_mut().enumerate() {
                *oval = dot(arow, &b[j * k..(j + 1) * k]);
            }
        }
    });
}

/// out += Aᵀ · B where A is (p×m) and B is (p×n), sequential.
pub fn matmul_tn_acc_seq(a: &[f64], b: &[f64], p: usize, m: usize, n: usize, out: &mut [f64]) {
    debug_assert_eq!(a.len(), p * m);
    debug_assert_eq!(b.len(), p * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..p {
        let arow = &a[i * m..(i + 1) * m];
        let brow = &b[i * n..(i + 1) * n];
        for (l, &aval) in arow.iter().enumerate() {
            if aval != 0.0 {
                axpy(aval, brow, &mut out[l * n..(l + 1) * n]);
            }
        }
    }
}

/// out += Aᵀ · B where A is (p×m) and B is (p×n).
pub fn matmul_tn_acc(a: &[f64], b: &[f64], p: usize, m: usize, n: usize, out: &mut [f64]) {
    if !par::parallel_enabled() || p * m * n < PAR_MIN_FLOPS || m < 2 {
        return matmul_tn_acc_seq(a, b, p, m, n, out);
    }
    let rows_per_chunk = (m / (4 * par::current_threads()).max(1)).max(1);
    par::for_each_row_chunk(out, n, rows_per_chunk, |row0, chunk| {
        let rows = chunk.len() / n;
        for i in 0..p {
            let arow = &a[i * m..(i + 1) * m];
            let brow = &b[i * n..(i + 1) * n];
            for r in 0..rows {
                let aval = arow[row0 + r];
                if aval != 0.0 {
                    axpy(aval, brow, &mut chunk[r * n..(r + 1) * n]);
                }
            }
        }
    });
}

/// y = x (1×k) · B (k×n); single-row product for incremental evaluation.
pub fn gemv(x: &[f64], b: &[f64], k: usize, n: usize, y: &mut [f64]) {
    matmul_nn_seq(x, b, 1, k, n, y);
}
