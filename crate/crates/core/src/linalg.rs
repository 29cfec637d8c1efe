//! Dense complex kernel shared by every detector.
//!
//! Composite indices are row-major throughout: the basis vector `|i>|k>` of
//! `C^dA (x) C^dB` sits at position `i * dB + k`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Relative tolerance used to accept a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn r(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Real eigenvalues of a Hermitian matrix, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
}

impl Spectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(f64::NAN)
    }

    pub fn sum(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    /// `sum_i |lambda_i|`
    pub fn abs_sum(&self) -> f64 {
        self.eigenvalues.iter().map(|x| x.abs()).sum()
    }

    /// `(sum_i lambda_i, sum_i lambda_i^2, ..., sum_i lambda_i^n_max)`
    pub fn power_sums(&self, n_max: usize) -> Vec<f64> {
        let mut pows: Vec<f64> = self.eigenvalues.clone();
        let mut out = Vec::with_capacity(n_max);
        for n in 1..=n_max {
            if n > 1 {
                for (p, &l) in pows.iter_mut().zip(&self.eigenvalues) {
                    *p *= l;
                }
            }
            out.push(pows.iter().sum());
        }
        out
    }
}

/// A linear map acting on square matrices, `M_in -> M_out`.
pub trait LinearMap {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    /// Apply the map to an `input_dim x input_dim` matrix.
    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Subsystem {
    A,
    B,
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_dim(m: &ComplexMatrix, expected: usize) -> Result<()> {
    let n = ensure_square(m)?;
    if n != expected {
        return Err(Error::DimensionMismatch {
            expected,
            actual: n,
        });
    }
    Ok(())
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max_ij |M_ij - conj(M_ji)|`
pub fn hermiticity_defect(m: &ComplexMatrix) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn ensure_hermitian(m: &ComplexMatrix) -> Result<()> {
    ensure_square(m)?;
    let defect = hermiticity_defect(m);
    let tolerance = HERMITIAN_TOL * max_abs(m).max(1.0);
    if defect > tolerance {
        return Err(Error::NonHermitianInput { defect, tolerance });
    }
    Ok(())
}

pub fn is_hermitian(m: &ComplexMatrix) -> bool {
    ensure_hermitian(m).is_ok()
}

/// `(M + M^dagger) / 2`
pub fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()) * r(0.5)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

pub fn trace(m: &ComplexMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// `|v><v|`
pub fn projector(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// The standard basis vector `|i>` in dimension `d`.
pub fn basis(d: usize, i: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[i] = ONE;
    v
}

/// `|i><j|` in dimension `d`.
pub fn unit(d: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(i, j)] = ONE;
    m
}

pub fn from_real_rows(rows: &[&[f64]]) -> ComplexMatrix {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    ComplexMatrix::from_fn(n, m, |i, j| r(rows[i][j]))
}

pub fn diag_real(values: &[f64]) -> ComplexMatrix {
    let n = values.len();
    ComplexMatrix::from_fn(n, n, |i, j| if i == j { r(values[i]) } else { ZERO })
}

/// Kronecker product with row-major composite indexing.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Spectrum> {
    ensure_hermitian(m)?;
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(Spectrum { eigenvalues })
}

/// Eigenvalues (ascending) and eigenvectors as columns in matching order.
///
/// Each eigenvector's phase is fixed by making its largest-magnitude component
/// real and positive (first such component on ties), so the decomposition is
/// deterministic for a given input.
pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<(Spectrum, ComplexMatrix)> {
    ensure_hermitian(m)?;
    let n = m.nrows();
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(src);
        let mut pivot = 0;
        let mut best = -1.0;
        for (i, z) in col.iter().enumerate() {
            if z.norm() > best + 1e-14 {
                best = z.norm();
                pivot = i;
            }
        }
        let phase = if best > 0.0 {
            col[pivot].conj() / best
        } else {
            ONE
        };
        vectors.set_column(dst, &(col * phase));
    }
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    Ok((Spectrum { eigenvalues }, vectors))
}

fn split_dims(rho: &ComplexMatrix, da: usize, db: usize) -> Result<()> {
    ensure_dim(rho, da * db)
}

/// Transpose on the indices of one tensor factor.
pub fn partial_transpose(
    rho: &ComplexMatrix,
    da: usize,
    db: usize,
    subsystem: Subsystem,
) -> Result<ComplexMatrix> {
    split_dims(rho, da, db)?;
    let n = da * db;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..da {
        for k in 0..db {
            for j in 0..da {
                for l in 0..db {
                    let v = rho[(i * db + k, j * db + l)];
                    let (row, col) = match subsystem {
                        Subsystem::A => (j * db + k, i * db + l),
                        Subsystem::B => (i * db + l, j * db + k),
                    };
                    out[(row, col)] = v;
                }
            }
        }
    }
    Ok(out)
}

/// `(id_A (x) map)(rho)`, computed block by block.
///
/// `rho` is read as a `da x da` grid of `db x db` blocks; each block is replaced
/// by its image under `map`, which may change the block size.
pub fn apply_to_second<M: LinearMap + ?Sized>(
    map: &M,
    rho: &ComplexMatrix,
    da: usize,
    db: usize,
) -> Result<ComplexMatrix> {
    split_dims(rho, da, db)?;
    if map.input_dim() != db {
        return Err(Error::DimensionMismatch {
            expected: map.input_dim(),
            actual: db,
        });
    }
    let dout = map.output_dim();
    let mut out = ComplexMatrix::zeros(da * dout, da * dout);
    for i in 0..da {
        for j in 0..da {
            let block = rho.view((i * db, j * db), (db, db)).into_owned();
            let image = map.apply(&block)?;
            ensure_dim(&image, dout)?;
            out.view_mut((i * dout, j * dout), (dout, dout))
                .copy_from(&image);
        }
    }
    Ok(out)
}

/// Swap the tensor factors: `rho` on `A (x) B` becomes the same operator on `B (x) A`.
pub fn swap_subsystems(rho: &ComplexMatrix, da: usize, db: usize) -> Result<ComplexMatrix> {
    split_dims(rho, da, db)?;
    let n = da * db;
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..da {
        for k in 0..db {
            for j in 0..da {
                for l in 0..db {
                    out[(k * da + i, l * da + j)] = rho[(i * db + k, j * db + l)];
                }
            }
        }
    }
    Ok(out)
}

/// `Tr_B rho`
pub fn partial_trace_second(rho: &ComplexMatrix, da: usize, db: usize) -> Result<ComplexMatrix> {
    split_dims(rho, da, db)?;
    Ok(ComplexMatrix::from_fn(da, da, |i, j| {
        (0..db).map(|k| rho[(i * db + k, j * db + k)]).sum()
    }))
}

/// `Tr_A rho`
pub fn partial_trace_first(rho: &ComplexMatrix, da: usize, db: usize) -> Result<ComplexMatrix> {
    split_dims(rho, da, db)?;
    Ok(ComplexMatrix::from_fn(db, db, |k, l| {
        (0..da).map(|i| rho[(i * db + k, i * db + l)]).sum()
    }))
}

/// Tolerance on trace and negativity when accepting a density matrix.
pub const DENSITY_TOL: f64 = 1e-10;

/// Check that `rho` is Hermitian, unit trace and PSD, all within [`DENSITY_TOL`].
pub fn ensure_density(rho: &ComplexMatrix) -> Result<()> {
    ensure_hermitian(rho).map_err(|e| Error::InvalidState(e.to_string()))?;
    let tr = trace(rho);
    if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
        return Err(Error::InvalidState(format!("trace is {tr}, not 1")));
    }
    let min = hermitian_eigenvalues(rho)?.min();
    if min < -DENSITY_TOL {
        return Err(Error::InvalidState(format!(
            "minimum eigenvalue {min:e} is negative"
        )));
    }
    Ok(())
}

/// `||M||_1` for Hermitian `M`: the sum of absolute eigenvalues.
pub fn trace_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(m)?.abs_sum())
}

/// `(Tr M, Tr M^2, ..., Tr M^n_max)` from the spectrum of a Hermitian `M`.
pub fn trace_powers(m: &ComplexMatrix, n_max: usize) -> Result<Vec<f64>> {
    if n_max == 0 {
        return Err(Error::ParameterOutOfRange("n_max must be at least 1".into()));
    }
    Ok(hermitian_eigenvalues(m)?.power_sums(n_max))
}

/// Determinant of a small dense real matrix by partial-pivot LU.
pub fn real_det(m: &DMatrix<f64>) -> f64 {
    m.clone().lu().determinant()
}

/// Smallest eigenvalue of a real symmetric matrix.
pub fn real_symmetric_min_eig(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn phi_plus(d: usize) -> ComplexMatrix {
        let mut v = ComplexVector::zeros(d * d);
        for i in 0..d {
            v[i * d + i] = r(1.0 / (d as f64).sqrt());
        }
        projector(&v)
    }

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        a.shape() == b.shape() && (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn kron_examples() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        let k = kron(&diag_real(&[1.0, 2.0]), &diag_real(&[3.0, 4.0]));
        assert_eq!(k, diag_real(&[3.0, 4.0, 6.0, 8.0]));
        let k = kron(&unit(2, 0, 0), &unit(2, 1, 1));
        assert_eq!(k, unit(4, 1, 1));
    }

    #[test]
    fn eigenvalue_examples() {
        let s = hermitian_eigenvalues(&diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(s.eigenvalues, vec![1.0, 2.0, 3.0]);
        let x = from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let s = hermitian_eigenvalues(&x).unwrap();
        assert_abs_diff_eq!(s.eigenvalues[0], -1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s.eigenvalues[1], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let x = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(
            hermitian_eigenvalues(&x),
            Err(Error::NonHermitianInput { .. })
        ));
        assert!(trace_norm(&x).is_err());
        assert!(trace_powers(&x, 2).is_err());
    }

    #[test]
    fn eigen_reconstructs() {
        let x = ComplexMatrix::from_fn(4, 4, |i, j| c((i + j) as f64, i as f64 - j as f64));
        let (s, v) = hermitian_eigen(&x).unwrap();
        let d = diag_real(&s.eigenvalues);
        let back = &v * d * v.adjoint();
        assert!(close(&back, &x, 1e-10));
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn partial_transpose_of_phi_plus() {
        let rho = phi_plus(2);
        for sub in [Subsystem::A, Subsystem::B] {
            let pt = partial_transpose(&rho, 2, 2, sub).unwrap();
            let s = hermitian_eigenvalues(&pt).unwrap();
            for (got, want) in s.eigenvalues.iter().zip([-0.5, 0.5, 0.5, 0.5]) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn partial_transpose_diagonal_and_product() {
        let d = diag_real(&[0.1, 0.2, 0.3, 0.4, 0.0, 0.0]);
        assert_eq!(partial_transpose(&d, 2, 3, Subsystem::A).unwrap(), d);
        let a = ComplexMatrix::from_fn(2, 2, |i, j| c((i + 1) as f64, (i as f64) - (j as f64)));
        let b = ComplexMatrix::from_fn(3, 3, |i, j| c((i * 3 + j) as f64, (j as f64) * 0.5));
        let pt = partial_transpose(&kron(&a, &b), 2, 3, Subsystem::B).unwrap();
        assert_eq!(pt, kron(&a, &b.transpose()));
        let pt = partial_transpose(&kron(&a, &b), 2, 3, Subsystem::A).unwrap();
        assert_eq!(pt, kron(&a.transpose(), &b));
    }

    #[test]
    fn partial_transpose_dimension_mismatch() {
        assert!(matches!(
            partial_transpose(&identity(5), 2, 3, Subsystem::A),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    struct Transpose(usize);
    impl LinearMap for Transpose {
        fn input_dim(&self) -> usize {
            self.0
        }
        fn output_dim(&self) -> usize {
            self.0
        }
        fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
            Ok(x.transpose())
        }
    }

    #[test]
    fn apply_to_second_with_transpose_is_partial_transpose() {
        let rho = ComplexMatrix::from_fn(6, 6, |i, j| c((i * 6 + j) as f64, (i as f64) - (j as f64)));
        let a = apply_to_second(&Transpose(3), &rho, 2, 3).unwrap();
        let b = partial_transpose(&rho, 2, 3, Subsystem::B).unwrap();
        assert_eq!(a, b);
        assert!(apply_to_second(&Transpose(2), &rho, 2, 3).is_err());
    }

    #[test]
    fn swap_and_partial_traces() {
        let a = diag_real(&[0.25, 0.75]);
        let b = diag_real(&[0.5, 0.3, 0.2]);
        let ab = kron(&a, &b);
        assert_eq!(swap_subsystems(&ab, 2, 3).unwrap(), kron(&b, &a));
        assert!(close(&partial_trace_second(&ab, 2, 3).unwrap(), &a, 1e-15));
        assert!(close(&partial_trace_first(&ab, 2, 3).unwrap(), &b, 1e-15));
    }

    #[test]
    fn trace_norm_examples() {
        assert_abs_diff_eq!(trace_norm(&diag_real(&[0.5, -0.5])).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(trace_norm(&phi_plus(3)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn trace_powers_examples() {
        let m = identity(3) * r(1.0 / 3.0);
        let p = trace_powers(&m, 3).unwrap();
        for (got, want) in p.iter().zip([1.0, 1.0 / 3.0, 1.0 / 9.0]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
        let p = trace_powers(&phi_plus(2), 4).unwrap();
        for got in p {
            assert_abs_diff_eq!(got, 1.0, epsilon = 1e-12);
        }
        let p = trace_powers(&diag_real(&[0.6, 0.4]), 2).unwrap();
        assert_abs_diff_eq!(p[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.52, epsilon = 1e-15);
        assert!(trace_powers(&m, 0).is_err());
    }

    #[test]
    fn real_det_and_min_eig() {
        let h = DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.06]);
        assert_abs_diff_eq!(real_det(&h), 0.02, epsilon = 1e-15);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        assert_abs_diff_eq!(real_symmetric_min_eig(&m), -1.0, epsilon = 1e-14);
    }
}
