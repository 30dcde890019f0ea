//! Dense matrix primitives used by the bound evaluators and certificates.
//!
//! Every matrix in this crate is small (a handful of antennas), so the
//! routines favour clarity and numerical robustness over speed. Symmetric
//! inputs are always symmetrised before an eigendecomposition so that
//! round-off asymmetry never leaks into eigenvalues.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Dense real matrix.
pub type Mat = DMatrix<f64>;

/// Dense real column vector.
pub type Vect = DVector<f64>;

/// Relative singular-value cutoff for pseudo-inverses.
pub const PINV_RCOND: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix with eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEig {
    /// Eigenvalues, largest first.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored column-wise, matching `values`.
    pub vectors: Mat,
}

impl SymEig {
    /// Rebuilds `V diag(f(lambda)) V^T`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Mat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let s = f(self.values[j]);
            scaled.column_mut(j).scale_mut(s);
        }
        scaled * self.vectors.transpose()
    }

    /// Rebuilds the decomposed matrix.
    pub fn reconstruct(&self) -> Mat {
        self.map(|x| x)
    }

    /// Smallest eigenvalue, or zero for an empty matrix.
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    /// Largest eigenvalue, or zero for an empty matrix.
    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

/// Returns `(M + M^T) / 2`.
pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// Eigendecomposition of the symmetric part of `m`.
pub fn sym_eig(m: &Mat) -> SymEig {
    let n = m.nrows();
    if n == 0 {
        return SymEig { values: Vec::new(), vectors: Mat::zeros(0, 0) };
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    SymEig { values, vectors }
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_eig(m: &Mat) -> f64 {
    sym_eig(m).min()
}

/// Frobenius norm.
pub fn frob(m: &Mat) -> f64 {
    m.norm()
}

/// Identity of size `n`.
pub fn eye(n: usize) -> Mat {
    Mat::identity(n, n)
}

/// Numerical radius `max_{a^T a <= 1} |a^T X a|` over real vectors.
///
/// Because `a^T X a` only sees the symmetric part of `X`, the maximum is the
/// largest eigenvalue magnitude of `(X + X^T) / 2`.
pub fn numerical_radius(x: &Mat) -> Result<f64> {
    if x.nrows() != x.ncols() {
        return Err(Error::NonSquare(x.nrows(), x.ncols()));
    }
    let eig = sym_eig(x);
    Ok(eig.max().abs().max(eig.min().abs()))
}

/// Euclidean projection of a vector onto `{x >= 0, sum(x) <= cap}`.
fn project_capped_simplex(values: &[f64], cap: Option<f64>) -> Vec<f64> {
    let clipped: Vec<f64> = values.iter().map(|v| v.max(0.0)).collect();
    let cap = match cap {
        Some(c) if clipped.iter().sum::<f64>() > c => c,
        _ => return clipped,
    };
    // Find the shift tau with sum(max(v - tau, 0)) = cap by scanning the
    // sorted breakpoints; this is the exact simplex projection.
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut tau = 0.0;
    for (k, v) in sorted.iter().enumerate() {
        prefix += v;
        let candidate = (prefix - cap) / (k as f64 + 1.0);
        if k + 1 == sorted.len() || sorted[k + 1] <= candidate {
            tau = candidate;
            break;
        }
    }
    values.iter().map(|v| (v - tau).max(0.0)).collect()
}

/// Projects a symmetric matrix onto `{S >= 0, tr(S) <= cap}` in Frobenius norm.
///
/// Eigenvalues are clipped at zero and, when the clipped trace exceeds the
/// cap, shifted down uniformly in the manner of a simplex projection.
pub fn psd_project(m: &Mat, trace_cap: Option<f64>) -> Mat {
    let eig = sym_eig(m);
    let projected = project_capped_simplex(&eig.values, trace_cap);
    let mut scaled = eig.vectors.clone();
    for (j, w) in projected.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*w);
    }
    symmetrize(&(scaled * eig.vectors.transpose()))
}

/// Number of eigenvalues at or above `rel * tr(S)`.
pub fn numerical_rank(s: &Mat, rel: f64) -> usize {
    let eig = sym_eig(s);
    let tr: f64 = eig.values.iter().map(|v| v.max(0.0)).sum();
    if tr <= 0.0 {
        return 0;
    }
    eig.values.iter().filter(|&&v| v >= rel * tr).count()
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
///
/// Falls back to an LU inverse when the factorisation fails, which only
/// happens for matrices that are not numerically positive definite.
pub fn inv_pd(m: &Mat) -> Mat {
    let s = symmetrize(m);
    match s.clone().cholesky() {
        Some(ch) => symmetrize(&ch.inverse()),
        None => s.try_inverse().unwrap_or_else(|| pinv(m)),
    }
}

/// Inverse of a symmetric matrix through its eigendecomposition.
///
/// Returns `None` when the smallest eigenvalue is below `rel` times the
/// largest eigenvalue magnitude, or not positive.
pub fn inv_sym_checked(m: &Mat, rel: f64) -> Option<Mat> {
    let eig = sym_eig(m);
    let scale = eig.max().abs().max(eig.min().abs()).max(f64::MIN_POSITIVE);
    if eig.min() <= rel * scale {
        return None;
    }
    Some(eig.map(|v| 1.0 / v))
}

/// `M^{-1/2}` of a symmetric positive definite matrix, or `None`.
pub fn inv_sqrt_pd(m: &Mat) -> Option<Mat> {
    let eig = sym_eig(m);
    if eig.values.is_empty() {
        return Some(Mat::zeros(0, 0));
    }
    if eig.min() <= 0.0 {
        return None;
    }
    Some(eig.map(|v| 1.0 / v.sqrt()))
}

/// Natural log-determinant of a symmetric positive definite matrix.
pub fn log_det_pd(m: &Mat) -> f64 {
    let s = symmetrize(m);
    match s.clone().cholesky() {
        Some(ch) => 2.0 * ch.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>(),
        None => sym_eig(&s).values.iter().map(|v| v.ln()).sum(),
    }
}

/// Natural log of `|det(M)|` for a general square matrix via LU.
pub fn log_abs_det(m: &Mat) -> f64 {
    m.clone().lu().determinant().abs().ln()
}

/// Moore-Penrose pseudo-inverse with singular values below
/// `PINV_RCOND * sigma_max` treated as zero.
pub fn pinv(m: &Mat) -> Mat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Mat::zeros(c, r);
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V^T");
    let mut out = Mat::zeros(c, r);
    if smax == 0.0 {
        return out;
    }
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > PINV_RCOND * smax {
            out += vt.row(k).transpose() * u.column(k).transpose() / s;
        }
    }
    out
}

/// Result of a vectorised least-squares solve `B A = C`.
#[derive(Debug, Clone)]
pub struct KronSolve {
    /// Minimum-norm least-squares solution.
    pub a: Mat,
    /// Frobenius norm of `B A - C`.
    pub residual: f64,
}

/// Solves `B A = C` for the minimum-norm least-squares `A`.
///
/// Written as a Kronecker system this is `(I (x) B) vec(A) = vec(C)`, whose
/// block-diagonal structure decouples into one solve per column of `C`, all
/// sharing the pseudo-inverse of `B`. The residual is reported so the caller
/// can decide whether the equation is solved exactly.
pub fn kron_vec_solve(b: &Mat, c: &Mat) -> Result<KronSolve> {
    if b.nrows() != c.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "B has {} rows, C has {}",
            b.nrows(),
            c.nrows()
        )));
    }
    let a = pinv(b) * c;
    let residual = frob(&(b * &a - c));
    Ok(KronSolve { a, residual })
}

/// Inverse of the partitioned matrix `[[A11, A12], [A21, A22]]` assembled
/// from the Schur complement `S = A22 - A21 A11^{-1} A12`:
///
/// ```text
/// [ A11^{-1} + A11^{-1} A12 S^{-1} A21 A11^{-1}   -A11^{-1} A12 S^{-1} ]
/// [ -S^{-1} A21 A11^{-1}                           S^{-1}              ]
/// ```
pub fn block_inverse(a11: &Mat, a12: &Mat, a21: &Mat, a22: &Mat) -> Result<Mat> {
    let (n1, n2) = (a11.nrows(), a22.nrows());
    if a11.ncols() != n1
        || a22.ncols() != n2
        || a12.shape() != (n1, n2)
        || a21.shape() != (n2, n1)
    {
        return Err(Error::DimensionMismatch("block partition is not conformable".into()));
    }
    let scale = 1.0 + [a11, a12, a21, a22].iter().map(|m| frob(m)).fold(0.0, f64::max);
    let a11_inv = checked_inverse(a11, scale)?;
    let s = a22 - a21 * &a11_inv * a12;
    let s_inv = checked_inverse(&s, scale)?;
    let upper_right = -(&a11_inv * a12 * &s_inv);
    let lower_left = -(&s_inv * a21 * &a11_inv);
    let upper_left = &a11_inv + &a11_inv * a12 * &s_inv * a21 * &a11_inv;
    let mut out = Mat::zeros(n1 + n2, n1 + n2);
    out.view_mut((0, 0), (n1, n1)).copy_from(&upper_left);
    out.view_mut((0, n1), (n1, n2)).copy_from(&upper_right);
    out.view_mut((n1, 0), (n2, n1)).copy_from(&lower_left);
    out.view_mut((n1, n1), (n2, n2)).copy_from(&s_inv);
    Ok(out)
}

fn checked_inverse(m: &Mat, scale: f64) -> Result<Mat> {
    if m.nrows() == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let sv = m.clone().singular_values();
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 1e-12 * scale {
        return Err(Error::SingularBlock);
    }
    m.clone().try_inverse().ok_or(Error::SingularBlock)
}

/// Builds a matrix from row-major nested slices.
pub fn from_rows(rows: &[&[f64]]) -> Mat {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    Mat::from_fn(r, c, |i, j| rows[i][j])
}

/// Largest absolute entrywise difference between two equally sized matrices.
pub fn max_abs_diff(a: &Mat, b: &Mat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch in max_abs_diff");
    (a - b).iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Mat {
        Mat::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn radius_of_identity_and_nilpotent() {
        assert!((numerical_radius(&eye(2)).unwrap() - 1.0).abs() < 1e-14);
        let n = from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!((numerical_radius(&n).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(numerical_radius(&Mat::zeros(2, 3)), Err(Error::NonSquare(2, 3)));
    }

    #[test]
    fn radius_dominates_rayleigh_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..5 {
            let x = random(&mut rng, n, n);
            let r = numerical_radius(&x).unwrap();
            for _ in 0..10_000 {
                let a = Vect::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
                let a = &a / a.norm();
                let q = (a.transpose() * &x * &a)[0];
                assert!(q.abs() <= r + 1e-12);
            }
            assert!((numerical_radius(&x.transpose()).unwrap() - r).abs() < 1e-12);
            assert!((numerical_radius(&(&x * -2.5)).unwrap() - 2.5 * r).abs() < 1e-12);
        }
    }

    #[test]
    fn psd_project_examples() {
        let m = Mat::from_diagonal(&Vect::from_vec(vec![2.0, -1.0]));
        let p = psd_project(&m, None);
        assert!(max_abs_diff(&p, &Mat::from_diagonal(&Vect::from_vec(vec![2.0, 0.0]))) < 1e-14);
        let m = Mat::from_diagonal(&Vect::from_vec(vec![2.0, 2.0]));
        let p = psd_project(&m, Some(2.0));
        assert!(max_abs_diff(&p, &eye(2)) < 1e-14);
    }

    #[test]
    fn psd_project_is_idempotent_and_nonexpansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let a = symmetrize(&random(&mut rng, 3, 3));
            let b = symmetrize(&random(&mut rng, 3, 3));
            let pa = psd_project(&a, Some(1.0));
            let pb = psd_project(&b, Some(1.0));
            assert!(max_abs_diff(&psd_project(&pa, Some(1.0)), &pa) < 1e-12);
            assert!(frob(&(&pa - &pb)) <= frob(&(&a - &b)) + 1e-12);
            assert!(pa.trace() <= 1.0 + 1e-12);
            assert!(min_eig(&pa) >= -1e-12);
        }
    }

    #[test]
    fn capped_simplex_matches_exhaustive_active_set_oracle() {
        // The projection of v onto {x >= 0, sum x <= c} is a QP whose
        // solution is determined by its active set; enumerate all sets.
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let v: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..2.0)).collect();
            let cap = 1.0;
            let got = project_capped_simplex(&v, Some(cap));
            let mut best = f64::INFINITY;
            for mask in 0u32..8 {
                let free: Vec<usize> = (0..3).filter(|i| mask & (1 << i) != 0).collect();
                for budget_active in [false, true] {
                    let mut x = [0.0; 3];
                    if budget_active && !free.is_empty() {
                        let tau = (free.iter().map(|&i| v[i]).sum::<f64>() - cap) / free.len() as f64;
                        for &i in &free {
                            x[i] = v[i] - tau;
                        }
                    } else {
                        for &i in &free {
                            x[i] = v[i];
                        }
                    }
                    if x.iter().all(|&xi| xi >= -1e-15) && x.iter().sum::<f64>() <= cap + 1e-12 {
                        let d: f64 = x.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
                        best = best.min(d);
                    }
                }
            }
            let d: f64 = got.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
            assert!((d - best).abs() < 1e-12, "got {d}, oracle {best}");
        }
    }

    #[test]
    fn block_inverse_examples() {
        let one = Mat::identity(1, 1);
        let zero = Mat::zeros(1, 1);
        let inv = block_inverse(&one, &zero, &zero, &one).unwrap();
        assert!(max_abs_diff(&inv, &eye(2)) < 1e-15);

        let a11 = from_rows(&[&[2.0, 1.0], &[0.0, 1.0]]);
        let a12 = from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let a21 = from_rows(&[&[1.0, 2.0], &[3.0, 1.0]]);
        let a22 = &a21 * a11.clone().try_inverse().unwrap() * &a12;
        assert_eq!(block_inverse(&a11, &a12, &a21, &a22), Err(Error::SingularBlock));
    }

    #[test]
    fn block_inverse_matches_direct_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let m = random(&mut rng, 4, 4) + eye(4) * 3.0;
            let got = block_inverse(
                &m.view((0, 0), (2, 2)).into_owned(),
                &m.view((0, 2), (2, 2)).into_owned(),
                &m.view((2, 0), (2, 2)).into_owned(),
                &m.view((2, 2), (2, 2)).into_owned(),
            )
            .unwrap();
            let direct = m.clone().try_inverse().unwrap();
            assert!(max_abs_diff(&got, &direct) < 1e-10);
        }
    }

    #[test]
    fn kron_vec_solve_examples() {
        let b = from_rows(&[&[2.0, 1.0], &[1.0, 3.0]]);
        let s = kron_vec_solve(&b, &b).unwrap();
        assert!(max_abs_diff(&s.a, &eye(2)) < 1e-12);
        assert!(s.residual < 1e-12);

        let c = from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let s = kron_vec_solve(&Mat::zeros(2, 2), &c).unwrap();
        assert!(max_abs_diff(&s.a, &Mat::zeros(2, 2)) == 0.0);
        assert!((s.residual - frob(&c)).abs() < 1e-14);
    }

    #[test]
    fn kron_vec_solve_matches_explicit_kronecker_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            // Rank-deficient B so the minimum-norm choice matters.
            let u = random(&mut rng, 3, 1);
            let v = random(&mut rng, 1, 2);
            let b = &u * &v;
            let c = random(&mut rng, 3, 2);
            let got = kron_vec_solve(&b, &c).unwrap();
            let big = eye(c.ncols()).kronecker(&b);
            let vec_c = Vect::from_column_slice(c.as_slice());
            let vec_a = pinv(&big) * vec_c;
            let oracle = Mat::from_column_slice(2, 2, vec_a.as_slice());
            assert!(max_abs_diff(&got.a, &oracle) < 1e-10);
        }
    }

    #[test]
    fn determinant_and_woodbury_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let c = random(&mut rng, 3, 2);
            let d = random(&mut rng, 2, 3);
            let lhs = (eye(3) + &c * &d).determinant();
            let rhs = (eye(2) + &d * &c).determinant();
            assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1.0));

            // (A + U C V)^{-1} = A^{-1} - A^{-1} U (C^{-1} + V A^{-1} U)^{-1} V A^{-1}
            let a = eye(3) * 2.0 + symmetrize(&random(&mut rng, 3, 3)) * 0.5;
            let u = random(&mut rng, 3, 2);
            let cm = eye(2) + symmetrize(&random(&mut rng, 2, 2)) * 0.3;
            let v = u.transpose();
            let a_inv = a.clone().try_inverse().unwrap();
            let inner = (cm.clone().try_inverse().unwrap() + &v * &a_inv * &u).try_inverse().unwrap();
            let woodbury = &a_inv - &a_inv * &u * inner * &v * &a_inv;
            let direct = (&a + &u * &cm * &v).try_inverse().unwrap();
            assert!(max_abs_diff(&woodbury, &direct) < 1e-10);
        }
    }

    #[test]
    fn eigendecomposition_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in 1..6 {
            let m = symmetrize(&random(&mut rng, n, n));
            let e = sym_eig(&m);
            assert!(frob(&(&m - e.reconstruct())) <= 1e-10 * frob(&m).max(1e-300));
            assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }
    }
}
