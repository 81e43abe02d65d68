//! Small dense linear algebra: a row-major matrix, a cyclic Jacobi symmetric
//! eigensolver, the Cholesky-reduced generalized symmetric problem, and PCA
//! through the Gram matrix.
//!
//! Matrices here are at most a few hundred rows square (the PCA subspace has
//! `N - c` dimensions), so O(n^3) Jacobi sweeps are fine.

use std::fmt::Write as _;
use std::ops::{Index, IndexMut};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericError {
    #[error("matrix is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("Jacobi iteration did not converge in {0} sweeps")]
    NoConvergence(usize),
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("Cholesky factorization failed at pivot {0}")]
    CholeskyFailure(usize),
    #[error("only {found} principal directions above threshold, {wanted} requested")]
    RankDeficient { wanted: usize, found: usize },
    #[error("requested {k} components from {n} samples")]
    TooManyComponents { k: usize, n: usize },
    #[error("matrix text: {0}")]
    Parse(String),
    #[error("non-finite matrix entry")]
    NonFinite,
}

pub type Result<T, E = NumericError> = std::result::Result<T, E>;

const JACOBI_MAX_SWEEPS: usize = 100;

/// Dense row-major `f64` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(NumericError::DimMismatch(format!(
                "{} entries for {rows}x{cols}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(NumericError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    /// # Panics
    ///
    /// Panics on ragged input.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_columns(cols: &[Vec<f64>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for (i, &v) in c.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn set_column(&mut self, j: usize, v: &[f64]) {
        for (i, &x) in v.iter().enumerate() {
            self[(i, j)] = x;
        }
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    /// # Panics
    ///
    /// Panics if the inner dimensions differ.
    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul inner dimension");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rrow = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `selfᵀ · rhs` without materializing the transpose.
    pub fn t_matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.rows, rhs.rows, "t_matmul row count");
        let mut out = Mat::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let arow = self.row(k);
            let brow = rhs.row(k);
            for (i, &a) in arow.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ · v`.
    pub fn t_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len(), "t_mul_vec dimension");
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    pub fn add(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Mat { data, ..*self }
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Mat { data, ..*self }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            data: self.data.iter().map(|v| v * s).collect(),
            ..*self
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in i + 1..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// `"MAT <rows> <cols>"` followed by one line per row.
    pub fn to_text(&self) -> String {
        let mut s = format!("MAT {} {}\n", self.rows, self.cols);
        for i in 0..self.rows {
            let mut first = true;
            for v in self.row(i) {
                if !first {
                    s.push(' ');
                }
                first = false;
                // `{:?}` is Rust's shortest round-trip float form.
                let _ = write!(s, "{v:?}");
            }
            s.push('\n');
        }
        s
    }

    /// Parses a `MAT` block from the front of `lines`, consuming header and rows.
    pub fn from_lines<'a>(lines: &mut impl Iterator<Item = &'a str>) -> Result<Mat> {
        let header = lines
            .next()
            .ok_or_else(|| NumericError::Parse("missing MAT header".into()))?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some("MAT") {
            return Err(NumericError::Parse(format!("bad header {header:?}")));
        }
        let mut dim = || -> Result<usize> {
            parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| NumericError::Parse(format!("bad header {header:?}")))
        };
        let (rows, cols) = (dim()?, dim()?);
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let line = lines
                .next()
                .ok_or_else(|| NumericError::Parse(format!("missing row {r}")))?;
            let before = data.len();
            for tok in line.split_whitespace() {
                data.push(
                    tok.parse::<f64>()
                        .map_err(|e| NumericError::Parse(format!("row {r}: {e}")))?,
                );
            }
            if data.len() - before != cols {
                return Err(NumericError::Parse(format!(
                    "row {r} has {} entries, expected {cols}",
                    data.len() - before
                )));
            }
        }
        Mat::from_vec(rows, cols, data)
    }

    pub fn from_text(text: &str) -> Result<Mat> {
        Mat::from_lines(&mut text.lines())
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Eigenpairs sorted by descending eigenvalue; `vectors` holds them as columns.
#[derive(Clone, Debug)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: Mat,
}

impl SymEig {
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// Rotations continue until the largest off-diagonal magnitude drops below
/// `1e-12 * ‖a‖_F`. Each eigenvector's first non-negligible component is made
/// non-negative.
pub fn sym_eig(a: &Mat) -> Result<SymEig> {
    if !a.is_square() {
        return Err(NumericError::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    let n = a.rows;
    let fro = a.frobenius();
    let asym = a.max_asymmetry();
    if asym > 1e-9 * fro {
        return Err(NumericError::NotSymmetric(asym));
    }
    let mut m = a.clone();
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
    let mut v = Mat::identity(n);
    let tol = 1e-12 * fro;

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if max_off_diagonal(&m) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }
    if !converged && max_off_diagonal(&m) > tol {
        return Err(NumericError::NoConvergence(JACOBI_MAX_SWEEPS));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src);
        canonical_sign(&mut col);
        vectors.set_column(dst, &col);
    }
    Ok(SymEig { values, vectors })
}

fn max_off_diagonal(m: &Mat) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.rows {
        for j in i + 1..m.cols {
            worst = worst.max(m[(i, j)].abs());
        }
    }
    worst
}

/// Applies the rotation in the (p, q) plane that zeroes `m[(p, q)]`.
fn rotate(m: &mut Mat, v: &mut Mat, p: usize, q: usize, c: f64, s: f64) {
    let n = m.rows;
    let app = m[(p, p)];
    let aqq = m[(q, q)];
    let apq = m[(p, q)];
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = m[(k, p)];
        let akq = m[(k, q)];
        let np = c * akp - s * akq;
        let nq = s * akp + c * akq;
        m[(k, p)] = np;
        m[(p, k)] = np;
        m[(k, q)] = nq;
        m[(q, k)] = nq;
    }
    m[(p, p)] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
    m[(q, q)] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

/// Flips `v` so its first component with magnitude above 1e-12·‖v‖ is positive.
fn canonical_sign(v: &mut [f64]) {
    let eps = 1e-12 * norm(v);
    if let Some(&first) = v.iter().find(|x| x.abs() > eps) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &Mat) -> Result<Mat> {
    let n = a.rows;
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return Err(NumericError::CholeskyFailure(i));
                }
                l[(i, i)] = s.sqrt();
            } else {
                l[(i, j)] = s / l[(j, j)];
            }
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
fn forward_solve(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut x = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
fn backward_solve_t(l: &Mat, b: &[f64]) -> Vec<f64> {
    let n = l.rows;
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// The Tikhonov shift added to `S_w` by [`gen_eig`].
pub fn regularization(s_w: &Mat) -> f64 {
    let tr = s_w.trace();
    if tr == 0.0 || s_w.rows == 0 {
        1e-6
    } else {
        1e-6 * tr / s_w.rows as f64
    }
}

/// Generalized symmetric eigenproblem `S_b v = λ (S_w + reg·I) v`.
///
/// Returned eigenvectors are unit-norm with the same sign convention as
/// [`sym_eig`].
pub fn gen_eig(s_b: &Mat, s_w: &Mat) -> Result<SymEig> {
    if !s_b.is_square() || !s_w.is_square() || s_b.rows != s_w.rows {
        return Err(NumericError::DimMismatch(format!(
            "S_b {}x{} vs S_w {}x{}",
            s_b.rows, s_b.cols, s_w.rows, s_w.cols
        )));
    }
    for m in [s_b, s_w] {
        let asym = m.max_asymmetry();
        if asym > 1e-9 * m.frobenius() {
            return Err(NumericError::NotSymmetric(asym));
        }
    }
    let n = s_b.rows;
    let reg = regularization(s_w);
    let mut sw = s_w.clone();
    for i in 0..n {
        sw[(i, i)] += reg;
    }
    let l = cholesky(&sw)?;

    // C = L⁻¹ S_b L⁻ᵀ, built column by column then symmetrized.
    let mut tmp = Mat::zeros(n, n);
    for j in 0..n {
        let col = forward_solve(&l, &s_b.column(j));
        tmp.set_column(j, &col);
    }
    // tmp = L⁻¹ S_b; C = (L⁻¹ (L⁻¹ S_b)ᵀ)ᵀ = L⁻¹ S_b L⁻ᵀ since S_b is symmetric.
    let tmp_t = tmp.transpose();
    let mut c = Mat::zeros(n, n);
    for j in 0..n {
        let col = forward_solve(&l, &tmp_t.column(j));
        c.set_column(j, &col);
    }
    for i in 0..n {
        for j in i + 1..n {
            let avg = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = avg;
            c[(j, i)] = avg;
        }
    }
    let eig = sym_eig(&c)?;
    let mut vectors = Mat::zeros(n, n);
    for k in 0..n {
        let mut v = backward_solve_t(&l, &eig.vectors.column(k));
        let nv = norm(&v);
        if nv > 0.0 {
            v.iter_mut().for_each(|x| *x /= nv);
        }
        canonical_sign(&mut v);
        vectors.set_column(k, &v);
    }
    Ok(SymEig {
        values: eig.values,
        vectors,
    })
}

/// PCA basis of mean-centered column data via the `N x N` Gram matrix.
///
/// Returns a `d x k` matrix of orthonormal principal directions. An eigenvalue
/// counts as non-zero when it exceeds `1e-10 * max(1, λ_max)`.
pub fn gram_pca(data: &Mat, k: usize) -> Result<Mat> {
    let n = data.cols;
    if k > n {
        return Err(NumericError::TooManyComponents { k, n });
    }
    let gram = data.t_matmul(data);
    let eig = sym_eig(&gram)?;
    let top = eig.values.first().copied().unwrap_or(0.0);
    let cutoff = 1e-10 * top.max(1.0);
    let found = eig.values.iter().filter(|&&l| l > cutoff).count();
    if found < k {
        return Err(NumericError::RankDeficient { wanted: k, found });
    }
    let mut basis = Mat::zeros(data.rows, k);
    for i in 0..k {
        let u = eig.vector(i);
        let mut col = data.mul_vec(&u);
        let s = eig.values[i].sqrt();
        col.iter_mut().for_each(|x| *x /= s);
        canonical_sign(&mut col);
        basis.set_column(i, &col);
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, rng: &mut impl Rng) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = rng.gen_range(-5.0..5.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        m
    }

    fn random_spd(n: usize, rng: &mut impl Rng) -> Mat {
        let b = Mat::from_vec(n, n + 3, (0..n * (n + 3)).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .unwrap();
        b.matmul(&b.transpose())
    }

    #[test]
    fn identity_eigenvalues() {
        let e = sym_eig(&Mat::identity(3)).unwrap();
        assert_eq!(e.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn two_by_two() {
        let e = sym_eig(&Mat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!((e.values[0] - 3.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = e.vector(0);
        let v1 = e.vector(1);
        assert!((v0[0] - h).abs() < 1e-12 && (v0[1] - h).abs() < 1e-12);
        assert!((v1[0] - h).abs() < 1e-12 && (v1[1] + h).abs() < 1e-12);
    }

    #[test]
    fn diagonal_is_sorted_permutation() {
        let e = sym_eig(&Mat::diag(&[2.0, 5.0, 0.0])).unwrap();
        assert_eq!(e.values, vec![5.0, 2.0, 0.0]);
        assert_eq!(e.vector(0), vec![0.0, 1.0, 0.0]);
        assert_eq!(e.vector(1), vec![1.0, 0.0, 0.0]);
        assert_eq!(e.vector(2), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn rejects_asymmetric_and_non_square() {
        let m = Mat::from_rows(&[&[1.0, 2.0], &[0.0, 1.0]]);
        assert!(matches!(sym_eig(&m), Err(NumericError::NotSymmetric(_))));
        assert!(matches!(
            sym_eig(&Mat::zeros(2, 3)),
            Err(NumericError::NotSquare { .. })
        ));
    }

    #[test]
    fn random_reconstruction_and_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 2, 5, 12, 30] {
            let a = random_sym(n, &mut rng);
            let e = sym_eig(&a).unwrap();
            let recon = e
                .vectors
                .matmul(&Mat::diag(&e.values))
                .matmul(&e.vectors.transpose());
            assert!(recon.sub(&a).frobenius() <= 1e-8 * a.frobenius());
            let vtv = e.vectors.t_matmul(&e.vectors);
            assert!(vtv.sub(&Mat::identity(n)).frobenius() <= 1e-8);
            let tr: f64 = e.values.iter().sum();
            assert!((tr - a.trace()).abs() <= 1e-9 * a.trace().abs() + 1e-12);
            for w in e.values.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn gen_eig_identity_pair() {
        let e = gen_eig(&Mat::identity(3), &Mat::identity(3)).unwrap();
        let reg = 1e-6;
        for v in e.values {
            assert!((v - 1.0 / (1.0 + reg)).abs() < 1e-12);
        }
    }

    #[test]
    fn gen_eig_diagonal_between() {
        let e = gen_eig(&Mat::diag(&[4.0, 0.0]), &Mat::identity(2)).unwrap();
        assert!((e.values[0] - 4.0).abs() < 1e-5);
        let v = e.vector(0);
        assert!((v[0].abs() - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
    }

    #[test]
    fn gen_eig_zero_between() {
        let e = gen_eig(&Mat::zeros(3, 3), &Mat::identity(3)).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn gen_eig_dim_mismatch() {
        assert!(matches!(
            gen_eig(&Mat::identity(2), &Mat::identity(3)),
            Err(NumericError::DimMismatch(_))
        ));
    }

    #[test]
    fn gen_eig_residual_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2, 4, 9] {
            let s_b = random_spd(n, &mut rng);
            let s_w = random_spd(n, &mut rng);
            let e = gen_eig(&s_b, &s_w).unwrap();
            let reg = regularization(&s_w);
            let bound = 1e-6 * (s_b.frobenius() + s_w.frobenius());
            for k in 0..n {
                let v = e.vector(k);
                let lhs = s_b.mul_vec(&v);
                let rhs = s_w.mul_vec(&v);
                let res: Vec<f64> = lhs
                    .iter()
                    .zip(&rhs)
                    .zip(&v)
                    .map(|((b, w), x)| b - e.values[k] * (w + reg * x))
                    .collect();
                assert!(norm(&res) <= bound, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn gram_pca_rank_one() {
        let data = Mat::from_columns(&[vec![3.0, 0.0, 4.0]]);
        let b = gram_pca(&data, 1).unwrap();
        assert_eq!(b.cols(), 1);
        let c = b.column(0);
        assert!((c[0] - 0.6).abs() < 1e-12 && c[1].abs() < 1e-12 && (c[2] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn gram_pca_planar_points_reconstruct() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d = 100;
        let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let coeffs = [(1.0, 2.0), (-3.0, 0.5), (2.0, -2.5)];
        let cols: Vec<Vec<f64>> = coeffs
            .iter()
            .map(|&(a, b)| u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect())
            .collect();
        let data = Mat::from_columns(&cols);
        let basis = gram_pca(&data, 2).unwrap();
        let btb = basis.t_matmul(&basis);
        assert!(btb.sub(&Mat::identity(2)).frobenius() < 1e-8);
        let recon = basis.matmul(&basis.t_matmul(&data));
        assert!(recon.sub(&data).frobenius() <= 1e-8 * data.frobenius());
    }

    #[test]
    fn gram_pca_errors() {
        let data = Mat::from_columns(&[vec![1.0, 0.0], vec![2.0, 0.0]]);
        assert_eq!(
            gram_pca(&data, 3),
            Err(NumericError::TooManyComponents { k: 3, n: 2 })
        );
        assert!(matches!(
            gram_pca(&data, 2),
            Err(NumericError::RankDeficient { wanted: 2, found: 1 })
        ));
    }

    #[test]
    fn text_roundtrip() {
        let m = Mat::from_rows(&[&[0.1, -2.5e-300, 3.0], &[1.0 / 3.0, 0.0, -7.25]]);
        let text = m.to_text();
        assert!(text.starts_with("MAT 2 3\n"));
        assert_eq!(Mat::from_text(&text).unwrap(), m);
        assert!(Mat::from_text("MAT 1 2\n1.0\n").is_err());
    }
}
