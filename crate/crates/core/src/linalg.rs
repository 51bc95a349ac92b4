//! Small dense complex helpers on top of `nalgebra`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

/// Dense complex matrix (column-major, as stored by `nalgebra`).
pub type CMatrix = DMatrix<Complex64>;

/// Relative norm below which a Gram–Schmidt residual is treated as zero.
const RANK_EPS: f64 = 1e-10;

/// Draws a `rows x cols` matrix of i.i.d. CN(0,1) entries.
///
/// Entries are drawn in row-major order, real part first.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows * cols {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        data.push(Complex64::new(re * scale, im * scale));
    }
    CMatrix::from_row_slice(rows, cols, &data)
}

/// Orthonormalizes the columns of `m` in place with modified Gram–Schmidt,
/// applying a second projection pass for stability.
///
/// Returns the index of the first column that is linearly dependent on its
/// predecessors, if any; that column is left as zero.
pub fn orthonormalize_columns(m: &mut CMatrix) -> Result<(), usize> {
    let (rows, cols) = m.shape();
    for j in 0..cols {
        let original = m.column(j).norm();
        for _pass in 0..2 {
            for i in 0..j {
                let mut proj = Complex64::new(0.0, 0.0);
                for r in 0..rows {
                    proj += m[(r, i)].conj() * m[(r, j)];
                }
                for r in 0..rows {
                    let qi = m[(r, i)];
                    m[(r, j)] -= proj * qi;
                }
            }
        }
        let norm = m.column(j).norm();
        if original == 0.0 || !(norm > RANK_EPS * original) {
            m.column_mut(j).fill(Complex64::new(0.0, 0.0));
            return Err(j);
        }
        m.column_mut(j).unscale_mut(norm);
    }
    Ok(())
}

/// Rotates each column so that its first nonzero entry is real and positive.
pub fn canonicalize_phases(m: &mut CMatrix) {
    for j in 0..m.ncols() {
        let pivot = (0..m.nrows()).find(|&r| m[(r, j)].norm() > 0.0);
        if let Some(r) = pivot {
            let value = m[(r, j)];
            let modulus = value.norm();
            let rot = value.conj() / modulus;
            for row in 0..m.nrows() {
                m[(row, j)] *= rot;
            }
            m[(r, j)] = Complex64::new(modulus, 0.0);
        }
    }
}

/// Max-norm of `F* F - I`.
pub fn orthonormality_error(m: &CMatrix) -> f64 {
    let gram = m.adjoint() * m;
    let mut worst = 0.0_f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Completes the first `have` orthonormal columns of `m` with standard basis
/// vectors projected onto the orthogonal complement.
pub fn complete_basis(m: &mut CMatrix, have: usize) {
    let (rows, cols) = m.shape();
    let mut filled = have;
    let mut candidate = 0;
    while filled < cols && candidate < rows {
        let mut trial = m.clone();
        trial.column_mut(filled).fill(Complex64::new(0.0, 0.0));
        trial[(candidate, filled)] = Complex64::new(1.0, 0.0);
        let mut head = trial.columns(0, filled + 1).into_owned();
        if orthonormalize_columns(&mut head).is_ok() {
            m.column_mut(filled).copy_from(&head.column(filled));
            filled += 1;
        }
        candidate += 1;
    }
}
