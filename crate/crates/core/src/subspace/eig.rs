//! Dense eigen-solvers for the small matrices of the estimators.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative asymmetry above which a matrix is refused as non-Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-9;
/// Jacobi stops once the off-diagonal Frobenius mass falls below this
/// fraction of the matrix norm.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;

/// Eigenvalues in descending order with orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<Complex64>,
}

fn frobenius(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
///
/// Each rotation first removes the phase of the pivot `a_pq`, reducing the
/// 2×2 subproblem to the real symmetric case.
pub fn hermitian_eig(r: &DMatrix<Complex64>) -> Result<HermitianEigen> {
    let n = r.nrows();
    if r.ncols() != n {
        return Err(Error::Dimension {
            what: "square matrix",
            expected: n,
            actual: r.ncols(),
        });
    }
    let norm = frobenius(r);
    let asym = frobenius(&(r - r.adjoint()));
    if norm > 0.0 && asym > HERMITIAN_TOLERANCE * norm {
        return Err(Error::NotHermitian(asym / norm));
    }
    let mut a = (r + r.adjoint()) * Complex64::new(0.5, 0.0);
    let mut v = DMatrix::<Complex64>::identity(n, n);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[(p, q)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOLERANCE * norm || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag == 0.0 {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let unphase = apq.conj() / mag;
                let jpp = Complex64::new(c, 0.0);
                let jpq = Complex64::new(s, 0.0);
                let jqp = unphase * -s;
                let jqq = unphase * c;

                // A ← A J
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * jpp + akq * jqp;
                    a[(k, q)] = akp * jpq + akq * jqq;
                }
                // A ← Jᴴ A
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = jpp.conj() * apk + jqp.conj() * aqk;
                    a[(q, k)] = jpq.conj() * apk + jqq.conj() * aqk;
                }
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                a[(p, p)] = Complex64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = Complex64::new(a[(q, q)].re, 0.0);
                // V ← V J
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * jpp + vkq * jqp;
                    v[(k, q)] = vkp * jpq + vkq * jqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |row, col| v[(row, order[col])]);
    Ok(HermitianEigen {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues and unit eigenvector columns of a general complex matrix.
///
/// 1×1 and 2×2 are solved in closed form; larger matrices go through a
/// complex Schur form and triangular back-substitution.
pub fn general_eig(m: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    if m.ncols() != n || n == 0 {
        return Err(Error::Dimension {
            what: "square matrix",
            expected: n,
            actual: m.ncols(),
        });
    }
    match n {
        1 => Ok((vec![m[(0, 0)]], DMatrix::identity(1, 1))),
        2 => Ok(eig_2x2(m)),
        _ => eig_schur(m),
    }
}

fn eig_2x2(m: &DMatrix<Complex64>) -> (Vec<Complex64>, DMatrix<Complex64>) {
    let (a, b, c, d) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let half_tr = (a + d) * 0.5;
    let det = a * d - b * c;
    let disc = (half_tr * half_tr - det).sqrt();
    let lambdas = [half_tr + disc, half_tr - disc];
    let scale = [a, b, c, d].iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut vecs = DMatrix::zeros(2, 2);
    for (col, &l) in lambdas.iter().enumerate() {
        // two candidate null vectors of (M - λI); keep the better conditioned
        let v1 = DVector::from_vec(vec![b, l - a]);
        let v2 = DVector::from_vec(vec![l - d, c]);
        let v = if v1.norm() >= v2.norm() { v1 } else { v2 };
        let v = if v.norm() <= 1e-14 * scale {
            let mut e = DVector::zeros(2);
            e[col] = Complex64::new(1.0, 0.0);
            e
        } else {
            v.normalize()
        };
        vecs.set_column(col, &v);
    }
    (lambdas.to_vec(), vecs)
}

fn eig_schur(m: &DMatrix<Complex64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 10_000)
        .ok_or_else(|| Error::Config("Schur iteration did not converge".into()))?;
    let (q, t) = schur.unpack();
    let lambdas: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let scale = frobenius(&t).max(f64::MIN_POSITIVE);
    let mut vecs = DMatrix::zeros(n, n);
    for k in 0..n {
        let mut y = DVector::<Complex64>::zeros(n);
        y[k] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let sum: Complex64 = (i + 1..=k).map(|j| t[(i, j)] * y[j]).sum();
            let mut denom = t[(i, i)] - lambdas[k];
            if denom.norm() < 1e-14 * scale {
                denom = Complex64::new(1e-14 * scale, 0.0);
            }
            y[i] = -sum / denom;
        }
        let v = (&q * y).normalize();
        vecs.set_column(k, &v);
    }
    Ok((lambdas, vecs))
}

/// Least-squares `X` minimising `‖A X - B‖` through the normal equations.
pub fn least_squares(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let ah = a.adjoint();
    let gram = &ah * a;
    let rhs = &ah * b;
    gram.lu().solve(&rhs).ok_or(Error::RankDeficient {
        rank: 0,
        required: a.ncols(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(n: usize, m: usize, rng: &mut ChaCha8Rng) -> DMatrix<Complex64> {
        DMatrix::from_fn(n, m, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn identity_and_diagonal() {
        let e = hermitian_eig(&DMatrix::identity(3, 3)).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0, 1.0, 1.0]);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0, 0.0), c(3.0, 0.0), c(2.0, 0.0)]));
        let e = hermitian_eig(&d).unwrap();
        assert_eq!(e.eigenvalues, vec![3.0, 2.0, 1.0]);
        for (col, basis) in [1usize, 2, 0].iter().enumerate() {
            assert!((e.eigenvectors[(*basis, col)].norm() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn random_psd_reconstruction() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [2, 3, 5, 8, 24] {
            let x = random_matrix(n, n + 3, &mut rng);
            let r = &x * x.adjoint();
            let e = hermitian_eig(&r).unwrap();
            let lam = DMatrix::from_diagonal(&DVector::from_iterator(
                n,
                e.eigenvalues.iter().map(|l| c(*l, 0.0)),
            ));
            let v = &e.eigenvectors;
            let back = v * lam * v.adjoint();
            assert!(frobenius(&(back - &r)) <= 1e-9 * frobenius(&r), "n = {n}");
            let gram = v.adjoint() * v;
            assert!(frobenius(&(gram - DMatrix::identity(n, n))) < 1e-10);
            assert!(e.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn general_eig_satisfies_definition() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [1, 2, 3, 4, 6] {
            let m = random_matrix(n, n, &mut rng);
            let (lams, vecs) = general_eig(&m).unwrap();
            for k in 0..n {
                let v = vecs.column(k);
                let resid = &m * v - v * lams[k];
                assert!(resid.norm() < 1e-9 * frobenius(&m), "n {n} k {k}");
            }
        }
    }

    #[test]
    fn two_by_two_diagonal_and_degenerate() {
        let m = DMatrix::from_row_slice(2, 2, &[c(2.0, 1.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
        let (l, v) = general_eig(&m).unwrap();
        for k in 0..2 {
            let resid = &m * v.column(k) - v.column(k) * l[k];
            assert!(resid.norm() < 1e-14);
        }
        let id = DMatrix::<Complex64>::identity(2, 2);
        let (l, v) = general_eig(&id).unwrap();
        assert_eq!(l, vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!((v.determinant().norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_matrix(6, 2, &mut rng);
        let x = random_matrix(2, 3, &mut rng);
        let b = &a * &x;
        let got = least_squares(&a, &b).unwrap();
        assert!(frobenius(&(got - x)) < 1e-10);
    }
}
