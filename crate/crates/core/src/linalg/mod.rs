//! Dense complex linear algebra used throughout the simulator.
//!
//! Everything is column-major: `vec` stacks columns, and every index map in
//! [`perm`] is derived from that convention.

mod perm;
mod rank1;

pub use perm::{commutation_map, vec_kron_map, PermutationMap};
pub use rank1::{nearest_kron_rank1, Rank1, RANK1_MAX_ITERATIONS, RANK1_TOLERANCE};

use std::f64::consts::PI;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn ones(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(1.0, 0.0); rows * cols],
        }
    }

    pub fn identity(k: usize) -> Self {
        let mut m = Self::zeros(k, k);
        for i in 0..k {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Wraps column-major storage.
    pub fn from_column_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dims(
                "from_column_major",
                format!("{} entries for {rows}x{cols}", rows * cols),
                data.len(),
            ));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from real-valued rows; handy for literals in tests.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Self::from_fn(nrows, ncols, |r, c| Complex64::new(rows[r][c], 0.0))
    }

    /// A single column vector.
    pub fn column_vector(v: &[Complex64]) -> Self {
        Self {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn column(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn column_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Contiguous block of columns `[start, start + count)`.
    pub fn column_block(&self, start: usize, count: usize) -> ComplexMatrix {
        assert!(start + count <= self.cols, "column block out of range");
        Self {
            rows: self.rows,
            cols: count,
            data: self.data[start * self.rows..(start + count) * self.rows].to_vec(),
        }
    }

    pub fn transpose(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)])
    }

    pub fn conj(&self) -> ComplexMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with("add", other, |a, b| a + b)
    }

    pub fn sub(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.zip_with("sub", other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        op: &'static str,
        other: &ComplexMatrix,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<ComplexMatrix> {
        if self.shape() != other.shape() {
            return Err(Error::dims(
                op,
                format!("{:?}", self.shape()),
                format!("{:?}", other.shape()),
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn matmul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::dims("matmul", format!("rhs with {} rows", self.cols), rhs.rows));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for j in 0..rhs.cols {
            let dst = &mut out.data[j * self.rows..(j + 1) * self.rows];
            for (k, &b) in rhs.column(j).iter().enumerate() {
                if b == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for (d, &a) in dst.iter_mut().zip(self.column(k)) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self · v` for a column vector `v`.
    pub fn matvec(&self, v: &[Complex64]) -> Result<Vec<Complex64>> {
        if v.len() != self.cols {
            return Err(Error::dims("matvec", self.cols, v.len()));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.rows];
        for (k, &b) in v.iter().enumerate() {
            for (d, &a) in out.iter_mut().zip(self.column(k)) {
                *d += a * b;
            }
        }
        Ok(out)
    }

    /// `selfᴴ · self`.
    pub fn gram(&self) -> ComplexMatrix {
        let n = self.cols;
        let mut out = Self::zeros(n, n);
        self.for_each_gram_entry(|i, j, g| {
            out[(i, j)] = g;
            out[(j, i)] = g.conj();
        });
        out
    }

    /// Calls `f(i, j, column(i)ᴴ column(j))` once for every `i <= j`, in
    /// unspecified order.
    ///
    /// Columns are visited in tiles so each one is reused from cache; a
    /// plain pairwise loop is bound by memory traffic on tall matrices.
    pub fn for_each_gram_entry(&self, mut f: impl FnMut(usize, usize, Complex64)) {
        const TILE: usize = 32;
        let n = self.cols;
        for jb in (0..n).step_by(TILE) {
            let jend = (jb + TILE).min(n);
            for ib in (0..=jb).step_by(TILE) {
                let iend = (ib + TILE).min(n);
                let mut j = jb;
                while j < jend {
                    let pair_j = j + 1 < jend;
                    let mut i = ib;
                    while i < iend && i <= j + 1 {
                        let pair_i = i + 1 < iend;
                        if pair_i && pair_j {
                            let g = dotc_2x2(
                                [self.column(i), self.column(i + 1)],
                                [self.column(j), self.column(j + 1)],
                            );
                            for (di, dj) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                                if i + di <= j + dj {
                                    f(i + di, j + dj, g[di][dj]);
                                }
                            }
                        } else {
                            for di in 0..if pair_i { 2 } else { 1 } {
                                for dj in 0..if pair_j { 2 } else { 1 } {
                                    if i + di <= j + dj {
                                        f(i + di, j + dj, dotc(self.column(i + di), self.column(j + dj)));
                                    }
                                }
                            }
                        }
                        i += 2;
                    }
                    j += 2;
                }
            }
        }
    }

    /// `self · selfᴴ`.
    pub fn outer_gram(&self) -> ComplexMatrix {
        self.adjoint().gram()
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape");
        max_abs_diff(&self.data, &other.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[c * self.rows + r]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[c * self.rows + r]
    }
}

/// `aᴴ b`, accumulated in four independent lanes.
pub fn dotc(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let (mut re0, mut re1, mut im0, mut im1) = (0.0, 0.0, 0.0, 0.0);
    let mut ca = a.chunks_exact(2);
    let mut cb = b.chunks_exact(2);
    for (x, y) in (&mut ca).zip(&mut cb) {
        re0 += x[0].re * y[0].re + x[0].im * y[0].im;
        im0 += x[0].re * y[0].im - x[0].im * y[0].re;
        re1 += x[1].re * y[1].re + x[1].im * y[1].im;
        im1 += x[1].re * y[1].im - x[1].im * y[1].re;
    }
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        re0 += x.re * y.re + x.im * y.im;
        im0 += x.re * y.im - x.im * y.re;
    }
    Complex64::new(re0 + re1, im0 + im1)
}

/// The four products `a[k]ᴴ b[l]`, reading each column once.
fn dotc_2x2(a: [&[Complex64]; 2], b: [&[Complex64]; 2]) -> [[Complex64; 2]; 2] {
    let mut re = [[0.0f64; 2]; 2];
    let mut im = [[0.0f64; 2]; 2];
    for (((a0, a1), b0), b1) in a[0].iter().zip(a[1]).zip(b[0]).zip(b[1]) {
        for (k, x) in [a0, a1].into_iter().enumerate() {
            for (l, y) in [b0, b1].into_iter().enumerate() {
                re[k][l] += x.re * y.re + x.im * y.im;
                im[k][l] += x.re * y.im - x.im * y.re;
            }
        }
    }
    [
        [Complex64::new(re[0][0], im[0][0]), Complex64::new(re[0][1], im[0][1])],
        [Complex64::new(re[1][0], im[1][0]), Complex64::new(re[1][1], im[1][1])],
    ]
}

pub fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    norm_sqr(v).sqrt()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len(), "max_abs_diff length");
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Stacks the columns of `a`; entry `(r, c)` lands at `c * rows + r`.
pub fn vec(a: &ComplexMatrix) -> Vec<Complex64> {
    a.data.clone()
}

/// Inverse of [`vec`].
pub fn unvec(a: &[Complex64], rows: usize, cols: usize) -> Result<ComplexMatrix> {
    if a.len() != rows * cols {
        return Err(Error::dims(
            "unvec",
            format!("length {} for {rows}x{cols}", rows * cols),
            a.len(),
        ));
    }
    Ok(ComplexMatrix {
        rows,
        cols,
        data: a.to_vec(),
    })
}

/// Kronecker product; block `(i, j)` of the result is `a[(i, j)] · b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (m, n) = a.shape();
    let (p, q) = b.shape();
    let mut out = ComplexMatrix::zeros(m * p, n * q);
    for j in 0..n {
        for l in 0..q {
            let col = out.column_mut(j * q + l);
            for i in 0..m {
                let s = a[(i, j)];
                let dst = &mut col[i * p..(i + 1) * p];
                for (d, &v) in dst.iter_mut().zip(b.column(l)) {
                    *d = s * v;
                }
            }
        }
    }
    out
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &s in a {
        out.extend(b.iter().map(|&v| s * v));
    }
    out
}

/// Column-wise Kronecker product: column `r` is `kron(x_r, y_r)`.
pub fn khatri_rao(x: &ComplexMatrix, y: &ComplexMatrix) -> Result<ComplexMatrix> {
    if x.cols != y.cols {
        return Err(Error::dims("khatri_rao", format!("{} columns", x.cols), y.cols));
    }
    let mut data = Vec::with_capacity(x.rows * y.rows * x.cols);
    for r in 0..x.cols {
        data.extend(kron_vec(x.column(r), y.column(r)));
    }
    Ok(ComplexMatrix {
        rows: x.rows * y.rows,
        cols: x.cols,
        data,
    })
}

pub fn hadamard(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.zip_with("hadamard", b, |x, y| x * y)
}

pub fn blkdiag(blocks: &[ComplexMatrix]) -> Result<ComplexMatrix> {
    if blocks.is_empty() {
        return Err(Error::Empty("blkdiag"));
    }
    let rows = blocks.iter().map(|b| b.rows).sum();
    let cols = blocks.iter().map(|b| b.cols).sum();
    let mut out = ComplexMatrix::zeros(rows, cols);
    let (mut r0, mut c0) = (0, 0);
    for b in blocks {
        for c in 0..b.cols {
            out.column_mut(c0 + c)[r0..r0 + b.rows].copy_from_slice(b.column(c));
        }
        r0 += b.rows;
        c0 += b.cols;
    }
    Ok(out)
}

/// Unnormalized DFT matrix, `[F]_{a,b} = exp(-j 2π ab / k)`.
pub fn dft_matrix(k: usize) -> ComplexMatrix {
    // Reducing ab mod k before the angle keeps large k accurate.
    let roots: Vec<Complex64> = (0..k)
        .map(|e| Complex64::from_polar(1.0, -2.0 * PI * e as f64 / k as f64))
        .collect();
    ComplexMatrix::from_fn(k, k, |a, b| roots[(a * b) % k])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn vec_stacks_columns() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 3.0], &[2.0, 4.0]]);
        assert_eq!(vec(&a), vec![c(1.0), c(2.0), c(3.0), c(4.0)]);
        assert_eq!(vec(&ComplexMatrix::identity(2)), vec![c(1.0), c(0.0), c(0.0), c(1.0)]);
    }

    #[test]
    fn unvec_examples() {
        let m = unvec(&[c(1.0), c(2.0), c(3.0), c(4.0)], 2, 2).unwrap();
        assert_eq!(m, ComplexMatrix::from_real_rows(&[&[1.0, 3.0], &[2.0, 4.0]]));
        assert_eq!(
            unvec(&[c(5.0)], 1, 1).unwrap(),
            ComplexMatrix::from_real_rows(&[&[5.0]])
        );
        assert!(matches!(
            unvec(&[c(1.0), c(2.0), c(3.0)], 2, 2),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn kron_examples() {
        let b = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(
            kron(&ComplexMatrix::identity(2), &b),
            blkdiag(&[b.clone(), b.clone()]).unwrap()
        );
        let s = kron(
            &ComplexMatrix::from_real_rows(&[&[2.0]]),
            &ComplexMatrix::from_real_rows(&[&[1.0, 1.0]]),
        );
        assert_eq!(s, ComplexMatrix::from_real_rows(&[&[2.0, 2.0]]));

        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 5.0]]);
        let b = ComplexMatrix::from_real_rows(&[&[7.0, 11.0], &[13.0, 17.0]]);
        let k = kron(&a, &b);
        // brute force over every (i,j,k,l)
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        assert_eq!(k[(i * 2 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                    }
                }
            }
        }
        assert_eq!(k[(2, 3)], a[(1, 1)] * b[(0, 1)]);
    }

    #[test]
    fn khatri_rao_examples() {
        let x = ComplexMatrix::from_real_rows(&[&[1.0], &[2.0]]);
        let y = ComplexMatrix::from_real_rows(&[&[3.0], &[4.0]]);
        assert_eq!(
            khatri_rao(&x, &y).unwrap(),
            ComplexMatrix::from_real_rows(&[&[3.0], &[4.0], &[6.0], &[8.0]])
        );
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(
            khatri_rao(&i2, &i2).unwrap(),
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0], &[0.0, 1.0]])
        );
        assert!(khatri_rao(&ComplexMatrix::zeros(2, 3), &ComplexMatrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn hadamard_examples() {
        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(hadamard(&a, &ComplexMatrix::ones(2, 2)).unwrap(), a);
        assert_eq!(
            hadamard(&a, &ComplexMatrix::identity(2)).unwrap(),
            ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 4.0]])
        );
        assert!(hadamard(&a, &ComplexMatrix::ones(2, 3)).is_err());
    }

    #[test]
    fn blkdiag_examples() {
        let d = blkdiag(&[
            ComplexMatrix::from_real_rows(&[&[1.0]]),
            ComplexMatrix::from_real_rows(&[&[2.0]]),
        ])
        .unwrap();
        assert_eq!(d, ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 2.0]]));

        let a = ComplexMatrix::from_real_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(blkdiag(std::slice::from_ref(&a)).unwrap(), a);

        let two = blkdiag(&[a.clone(), a.clone()]).unwrap();
        let zeros = (0..4)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .filter(|&(r, col)| r / 2 != col / 2)
            .inspect(|&(r, col)| assert_eq!(two[(r, col)], c(0.0)))
            .count();
        assert_eq!(zeros, 8);
        assert!(matches!(blkdiag(&[]), Err(Error::Empty(_))));
    }

    #[test]
    fn dft_examples() {
        assert_eq!(dft_matrix(1), ComplexMatrix::from_real_rows(&[&[1.0]]));
        let f2 = dft_matrix(2);
        let expect = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, -1.0]]);
        assert!(f2.max_abs_diff(&expect) < 1e-15);
        let f8 = dft_matrix(8);
        let resid = f8
            .outer_gram()
            .sub(&ComplexMatrix::identity(8).scale(c(8.0)))
            .unwrap()
            .frobenius_norm();
        assert!(resid < 1e-12, "{resid}");
    }

    #[test]
    fn gram_matches_matmul() {
        let a = ComplexMatrix::from_fn(5, 3, |r, c| Complex64::new(r as f64 - c as f64, (r * c) as f64));
        let direct = a.adjoint().matmul(&a).unwrap();
        assert!(a.gram().max_abs_diff(&direct) < 1e-12);
        let outer = a.matmul(&a.adjoint()).unwrap();
        assert!(a.outer_gram().max_abs_diff(&outer) < 1e-12);
    }

    #[test]
    fn tiled_gram_visits_each_pair_once() {
        for cols in [1, 2, 31, 33, 64, 71] {
            let a = ComplexMatrix::from_fn(3, cols, |r, c| {
                Complex64::new((r + c) as f64, r as f64 - 0.5 * c as f64)
            });
            let mut seen = vec![0u8; cols * cols];
            a.for_each_gram_entry(|i, j, g| {
                assert!(i <= j);
                seen[i * cols + j] += 1;
                assert!((g - dotc(a.column(i), a.column(j))).norm() < 1e-12);
            });
            for i in 0..cols {
                for j in 0..cols {
                    assert_eq!(seen[i * cols + j], u8::from(i <= j), "{cols}: ({i}, {j})");
                }
            }
        }
    }

    #[test]
    fn matmul_rejects_bad_shapes() {
        assert!(ComplexMatrix::zeros(2, 3).matmul(&ComplexMatrix::zeros(2, 3)).is_err());
        assert!(ComplexMatrix::zeros(2, 3).matvec(&[c(1.0)]).is_err());
    }
}
