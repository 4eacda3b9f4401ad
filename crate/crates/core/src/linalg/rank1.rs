use num_complex::Complex64;

use super::{dotc, norm, ComplexMatrix};
use crate::error::{Error, Result};

/// Relative eigen-residual at which power iteration stops.
pub const RANK1_TOLERANCE: f64 = 1e-10;
pub const RANK1_MAX_ITERATIONS: usize = 1000;

/// Dominant singular triplet: `W ≈ sigma · u · vᴴ`.
#[derive(Clone, Debug)]
pub struct Rank1 {
    pub u: Vec<Complex64>,
    pub v: Vec<Complex64>,
    pub sigma: f64,
}

impl Rank1 {
    pub fn to_matrix(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.u.len(), self.v.len(), |r, c| {
            self.u[r] * self.v[c].conj() * self.sigma
        })
    }
}

/// Best rank-1 approximation of `w` in Frobenius norm, by power iteration on
/// the smaller of `wᴴw` and `wwᴴ`.
pub fn nearest_kron_rank1(w: &ComplexMatrix) -> Result<Rank1> {
    let (a, b) = w.shape();
    if a == 0 || b == 0 {
        return Err(Error::Empty("nearest_kron_rank1"));
    }
    if w.frobenius_norm() == 0.0 {
        return Ok(Rank1 {
            u: unit(a),
            v: unit(b),
            sigma: 0.0,
        });
    }

    if b <= a {
        let v = dominant_eigvec(&w.gram())?;
        let wv = w.matvec(&v)?;
        let sigma = norm(&wv);
        let u = wv.into_iter().map(|z| z / sigma).collect();
        Ok(Rank1 { u, v, sigma })
    } else {
        let u = dominant_eigvec(&w.outer_gram())?;
        let whu = w.adjoint().matvec(&u)?;
        let sigma = norm(&whu);
        let v = whu.into_iter().map(|z| z / sigma).collect();
        Ok(Rank1 { u, v, sigma })
    }
}

fn unit(n: usize) -> Vec<Complex64> {
    let mut e = vec![Complex64::new(0.0, 0.0); n];
    e[0] = Complex64::new(1.0, 0.0);
    e
}

/// Dominant eigenvector of a nonzero Hermitian PSD matrix.
fn dominant_eigvec(g: &ComplexMatrix) -> Result<Vec<Complex64>> {
    // Start from the heaviest column: it has a nonzero component along the
    // dominant eigenvector whenever g ≠ 0.
    let start = (0..g.cols())
        .max_by(|&i, &j| norm(g.column(i)).total_cmp(&norm(g.column(j))))
        .expect("non-empty");
    let mut v = g.column(start).to_vec();
    normalize(&mut v);

    let mut residual = f64::INFINITY;
    for _ in 0..RANK1_MAX_ITERATIONS {
        let z = g.matvec(&v)?;
        let lambda = dotc(&v, &z).re;
        if lambda <= 0.0 {
            break;
        }
        residual = z
            .iter()
            .zip(&v)
            .map(|(zi, vi)| (zi - vi * lambda).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / lambda;
        v = z;
        normalize(&mut v);
        if residual <= RANK1_TOLERANCE {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence {
        iterations: RANK1_MAX_ITERATIONS,
        residual,
    })
}

fn normalize(v: &mut [Complex64]) {
    let n = norm(v);
    v.iter_mut().for_each(|z| *z /= n);
}
