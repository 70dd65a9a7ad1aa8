//! Small sparse/dense kernels: diagonal and symmetric sparse matrices,
//! conjugate gradients, and a restarted GMRES for matrix-free operators.

use crate::error::{Error, Result};

/// Diagonal matrix with strictly positive entries (lumped mass).
#[derive(Debug, Clone)]
pub struct DiagMatrix {
    pub diag: Vec<f64>,
}

impl DiagMatrix {
    pub fn new(diag: Vec<f64>) -> Self {
        debug_assert!(diag.iter().all(|&d| d > 0.0));
        Self { diag }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.diag.iter().zip(x).map(|(d, v)| d * v).collect()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.diag.iter().zip(b).map(|(d, v)| v / d).collect()
    }

    pub fn sum(&self) -> f64 {
        self.diag.iter().sum()
    }
}

/// Symmetric sparse matrix in CSR layout (full pattern stored).
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    pub dim: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Build from (row, col, value) triplets. Duplicates are summed in
    /// sorted index order, so assembly is deterministic.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut col_idx: Vec<usize> = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut rows: Vec<usize> = Vec::new();
        for (i, j, v) in triplets {
            if rows.last() == Some(&i) && col_idx.last() == Some(&j) {
                *values.last_mut().unwrap() += v;
            } else {
                rows.push(i);
                col_idx.push(j);
                values.push(v);
            }
        }
        let mut row_ptr = vec![0usize; dim + 1];
        for &i in &rows {
            row_ptr[i + 1] += 1;
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        let mut y = vec![0.0; self.dim];
        self.apply_into(x, &mut y);
        y
    }

    pub fn apply_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            let mut acc = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                acc += v * x[j];
            }
            y[i] = acc;
        }
    }

    /// Matrix-vector product restricted to rows [0, n_rows).
    pub fn apply_rows(&self, x: &[f64], n_rows: usize) -> Vec<f64> {
        let mut y = vec![0.0; n_rows];
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
        y
    }

    /// Matrix-vector product restricted to rows [n_skip, dim).
    pub fn apply_rows_from(&self, x: &[f64], n_skip: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.dim - n_skip];
        for (k, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(n_skip + k);
            *yi = cols.iter().zip(vals).map(|(&j, &v)| v * x[j]).sum();
        }
        y
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// Largest symmetry defect |A_ij - A_ji|.
    pub fn symmetry_defect(&self) -> f64 {
        let mut defect = 0.0f64;
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                defect = defect.max((v - self.get(j, i)).abs());
            }
        }
        defect
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut m = nalgebra::DMatrix::zeros(self.dim, self.dim);
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                m[(i, j)] = v;
            }
        }
        m
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, &v| m.max(v.abs()))
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Conjugate gradients for SPD systems. Returns the iteration count.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iters: usize,
) -> Result<usize> {
    let n = b.len();
    if n == 0 {
        return Ok(0);
    }
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        x.fill(0.0);
        return Ok(0);
    }
    let ax = apply(x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for it in 0..max_iters {
        if rr.sqrt() <= rel_tol * b_norm {
            return Ok(it);
        }
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::LinearSolve(format!(
                "CG detected non-positive curvature (pAp = {pap:.3e}); operator is not SPD"
            )));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    if rr.sqrt() <= rel_tol * b_norm {
        Ok(max_iters)
    } else {
        Err(Error::LinearSolve(format!(
            "CG did not converge in {max_iters} iterations (rel. residual {:.3e})",
            rr.sqrt() / b_norm
        )))
    }
}

/// Restarted GMRES for a matrix-free linear operator. Solves A x = b to a
/// relative residual `rel_tol`, starting from x = 0.
pub fn gmres(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    rel_tol: f64,
    restart: usize,
    max_iters: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let b_norm = norm2(b);
    if b_norm == 0.0 {
        return Ok(x);
    }
    let target = rel_tol * b_norm;
    let m = restart.max(1);
    let mut total_iters = 0usize;

    loop {
        let ax = apply(&x);
        let r0: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm2(&r0);
        if beta <= target {
            return Ok(x);
        }

        // Arnoldi with Givens rotations on the Hessenberg matrix.
        let mut basis: Vec<Vec<f64>> = vec![r0.iter().map(|v| v / beta).collect()];
        let mut h = vec![vec![0.0f64; 0]; 0]; // h[j] holds column j (len j+2)
        let mut cs = Vec::new();
        let mut sn = Vec::new();
        let mut g = vec![beta];
        let mut k_used = 0;

        for j in 0..m {
            let mut w = apply(&basis[j]);
            let mut hj = vec![0.0; j + 2];
            for (i, q) in basis.iter().enumerate() {
                hj[i] = dot(&w, q);
                axpy(-hj[i], q, &mut w);
            }
            hj[j + 1] = norm2(&w);

            for i in 0..j {
                let (c, s): (f64, f64) = (cs[i], sn[i]);
                let t = c * hj[i] + s * hj[i + 1];
                hj[i + 1] = -s * hj[i] + c * hj[i + 1];
                hj[i] = t;
            }
            let denom = (hj[j] * hj[j] + hj[j + 1] * hj[j + 1]).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (hj[j] / denom, hj[j + 1] / denom)
            };
            cs.push(c);
            sn.push(s);
            hj[j] = c * hj[j] + s * hj[j + 1];
            let lucky = hj[j + 1].abs() < 1e-300 || denom == 0.0;
            hj[j + 1] = 0.0;
            g.push(-s * g[j]);
            g[j] *= c;
            h.push(hj);
            k_used = j + 1;
            total_iters += 1;

            let res = g[j + 1].abs();
            if res <= target || lucky || total_iters >= max_iters {
                break;
            }
            let wn = norm2(&w);
            if wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }

        // Back-substitution for the least-squares coefficients.
        let k = k_used;
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for (jj, yj) in y.iter().enumerate().skip(i + 1) {
                s -= h[jj][i] * yj;
            }
            y[i] = s / h[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            axpy(*yj, &basis[j], &mut x);
        }

        let ax = apply(&x);
        let res_vec: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let res = norm2(&res_vec);
        if res <= target * 1.01 {
            return Ok(x);
        }
        if total_iters >= max_iters {
            if res <= 10.0 * target {
                // close enough for a Newton inner solve; the outer loop
                // controls the nonlinear residual
                return Ok(x);
            }
            return Err(Error::LinearSolve(format!(
                "GMRES stagnated after {total_iters} iterations (rel. residual {:.3e})",
                res / b_norm
            )));
        }
    }
}
