//! Singular values, numerical rank and symmetric eigendecomposition, all by
//! Jacobi rotations.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::matrix::Matrix;

const MAX_SWEEPS: usize = 80;

pub const DEFAULT_RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    /// Nonincreasing, length `min(k, m)`.
    pub singular_values: Vec<f64>,
    pub frobenius: f64,
    pub rank: usize,
    pub spectral: f64,
}

/// Thin SVD data: singular values (nonincreasing) and the matching right
/// singular vectors, each of length `cols`.
#[derive(Debug, Clone)]
pub struct Svd {
    pub values: Vec<f64>,
    pub right: Vec<Vec<f64>>,
}

/// One-sided (Hestenes) Jacobi SVD.
///
/// Orthogonalizes the columns of whichever of `A`, `Aᵀ` has fewer columns;
/// this is cyclic Jacobi on the smaller Gram matrix without ever forming it.
pub fn svd(a: &Matrix) -> Svd {
    let transposed = a.cols() > a.rows();
    let work = if transposed { a.transpose() } else { a.clone() };
    let (k, n) = (work.rows(), work.cols());
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| work.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: f64 = cols[p].iter().map(|x| x * x).sum();
                let beta: f64 = cols[q].iter().map(|x| x * x).sum();
                let gamma: f64 = cols[p].iter().zip(&cols[q]).map(|(x, y)| x * y).sum();
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<(f64, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (c.iter().map(|x| x * x).sum::<f64>().sqrt(), j))
        .collect();
    order.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));

    let values: Vec<f64> = order.iter().map(|&(s, _)| s).collect();
    let right = order
        .iter()
        .map(|&(s, j)| {
            if !transposed {
                v[j].clone()
            } else if s > 0.0 {
                cols[j].iter().map(|x| x / s).collect()
            } else {
                let mut e = vec![0.0; k];
                e[j.min(k - 1)] = 1.0;
                e
            }
        })
        .collect();
    Svd { values, right }
}

fn rotate(vecs: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = vecs.split_at_mut(q);
    let (vp, vq) = (&mut head[p], &mut tail[0]);
    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

pub fn spectrum(a: &Matrix, rank_tol_factor: f64) -> Spectrum {
    let values = svd(a).values;
    let spectral = values[0];
    let cutoff = spectral * a.rows().max(a.cols()) as f64 * rank_tol_factor;
    let rank = if spectral == 0.0 {
        0
    } else {
        values.iter().filter(|&&s| s > cutoff).count()
    };
    Spectrum {
        singular_values: values,
        frobenius: a.frobenius(),
        rank,
        spectral,
    }
}

/// Eigendecomposition of a symmetric matrix: eigenvalues in nonincreasing
/// order and the matching orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi eigenvalue iteration.
pub fn symmetric_eigen(a: &Matrix) -> Result<SymmetricEigen> {
    if !a.is_symmetric(1e-10) {
        return Err(invalid("symmetric_eigen needs a symmetric matrix"));
    }
    let n = a.rows();
    let mut s = a.clone();
    let mut vecs = Matrix::identity(n);
    let scale = a.frobenius();

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| s[(i, j)] * s[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = s[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (s[(q, q)] - s[(p, p)]) / (2.0 * apq);
                let t = if theta == 0.0 {
                    1.0
                } else {
                    theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * c;
                for r in 0..n {
                    let (srp, srq) = (s[(r, p)], s[(r, q)]);
                    s[(r, p)] = c * srp - sn * srq;
                    s[(r, q)] = sn * srp + c * srq;
                }
                for r in 0..n {
                    let (spr, sqr) = (s[(p, r)], s[(q, r)]);
                    s[(p, r)] = c * spr - sn * sqr;
                    s[(q, r)] = sn * spr + c * sqr;
                }
                for r in 0..n {
                    let (vrp, vrq) = (vecs[(r, p)], vecs[(r, q)]);
                    vecs[(r, p)] = c * vrp - sn * vrq;
                    vecs[(r, q)] = sn * vrp + c * vrq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s[(j, j)].total_cmp(&s[(i, i)]).then(i.cmp(&j)));
    Ok(SymmetricEigen {
        values: order.iter().map(|&i| s[(i, i)]).collect(),
        vectors: order.iter().map(|&i| vecs.column(i)).collect(),
    })
}
