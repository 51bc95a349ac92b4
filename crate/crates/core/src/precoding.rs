//! Capacity metric, codebook selection and the unquantized SVD precoder.

use nalgebra::SVD;
use num_complex::Complex64;
use rand::Rng;

use crate::codebook::{Codebook, CodebookView, PrecodingMatrix};
use crate::linalg::{self, CMatrix};
use crate::{Error, Result};

/// Linear transmit SNR `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SnrPoint(f64);

impl SnrPoint {
    pub fn from_linear(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Parameter(format!(
                "SNR must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(Self(gamma))
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::from_linear(10f64.powf(db / 10.0))
    }

    pub fn gamma(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

/// Evaluates `log2 det(I_M + gamma (HF)*(HF))` for one channel against many
/// precoders, reusing scratch buffers.
///
/// The determinant comes from the Cholesky pivots of the `M x M` Hermitian
/// matrix `I + gamma (HF)*(HF)`, which is positive definite.
#[derive(Debug)]
pub struct CapacityEvaluator<'h> {
    h: &'h CMatrix,
    gamma: f64,
    hf: Vec<Complex64>,
    gram: Vec<Complex64>,
}

impl<'h> CapacityEvaluator<'h> {
    pub fn new(h: &'h CMatrix, gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Parameter(format!(
                "SNR must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(Self {
            h,
            gamma,
            hf: Vec::new(),
            gram: Vec::new(),
        })
    }

    pub fn check(&self, f: &PrecodingMatrix) -> Result<()> {
        if self.h.ncols() != f.m_t() {
            return Err(Error::Dimension(format!(
                "channel has {} transmit antennas, precoder has {} rows",
                self.h.ncols(),
                f.m_t()
            )));
        }
        Ok(())
    }

    /// Capacity in bits/s/Hz. Dimensions must already be compatible.
    pub fn eval(&mut self, f: &PrecodingMatrix) -> f64 {
        let h = self.h.as_slice();
        let fm = f.matrix().as_slice();
        let (m_r, m_t) = self.h.shape();
        let m = f.m();
        debug_assert_eq!(m_t, f.m_t());

        // hf = H F, column-major m_r x m.
        self.hf.clear();
        self.hf.resize(m_r * m, Complex64::new(0.0, 0.0));
        for c in 0..m {
            let fcol = &fm[c * m_t..(c + 1) * m_t];
            let out = &mut self.hf[c * m_r..(c + 1) * m_r];
            for (t, &fv) in fcol.iter().enumerate() {
                let hcol = &h[t * m_r..(t + 1) * m_r];
                for (o, &hv) in out.iter_mut().zip(hcol) {
                    *o += hv * fv;
                }
            }
        }

        // Lower triangle of I + gamma (HF)*(HF), row-major m x m.
        self.gram.clear();
        self.gram.resize(m * m, Complex64::new(0.0, 0.0));
        for i in 0..m {
            let ci = &self.hf[i * m_r..(i + 1) * m_r];
            for j in 0..=i {
                let cj = &self.hf[j * m_r..(j + 1) * m_r];
                let dot: Complex64 = ci.iter().zip(cj).map(|(a, b)| a * b.conj()).sum();
                let diag = if i == j { 1.0 } else { 0.0 };
                self.gram[i * m + j] = dot * self.gamma + diag;
            }
        }

        // In-place Cholesky; log det = sum of log pivots.
        let g = &mut self.gram;
        let mut log2_det = 0.0;
        for j in 0..m {
            let mut pivot = g[j * m + j].re;
            for k in 0..j {
                pivot -= g[j * m + k].norm_sqr();
            }
            log2_det += pivot.log2();
            let root = pivot.sqrt();
            g[j * m + j] = Complex64::new(root, 0.0);
            for i in j + 1..m {
                let mut v = g[i * m + j];
                for k in 0..j {
                    v -= g[i * m + k] * g[j * m + k].conj();
                }
                g[i * m + j] = v / root;
            }
        }
        log2_det
    }
}

/// `log2 det(I_M + gamma F* H* H F)` in bits/s/Hz.
pub fn capacity(h: &CMatrix, f: &PrecodingMatrix, gamma: f64) -> Result<f64> {
    let mut eval = CapacityEvaluator::new(h, gamma)?;
    eval.check(f)?;
    Ok(eval.eval(f))
}

/// Index and matrix maximizing capacity over `view`.
///
/// Ties go to the smallest index, except that the reserved index of an
/// altered view wins whenever it attains the maximum.
pub fn select_best<'v, V: CodebookView + ?Sized>(
    h: &CMatrix,
    view: &'v V,
    gamma: f64,
) -> Result<(usize, &'v PrecodingMatrix)> {
    let mut eval = CapacityEvaluator::new(h, gamma)?;
    select_with(&mut eval, view)
}

/// [`select_best`] with a caller-owned evaluator.
pub fn select_with<'v, V: CodebookView + ?Sized>(
    eval: &mut CapacityEvaluator<'_>,
    view: &'v V,
) -> Result<(usize, &'v PrecodingMatrix)> {
    if view.is_empty() {
        return Err(Error::Parameter(
            "cannot select from an empty codebook".into(),
        ));
    }
    eval.check(view.entry(0))?;
    let mut best = (0, f64::NEG_INFINITY);
    let mut reserved_value = None;
    for i in 0..view.len() {
        let c = eval.eval(view.entry(i));
        if c > best.1 {
            best = (i, c);
        }
        if view.reserved_index() == Some(i) {
            reserved_value = Some(c);
        }
    }
    if let (Some(r), Some(c)) = (view.reserved_index(), reserved_value) {
        if c >= best.1 {
            best.0 = r;
        }
    }
    Ok((best.0, view.entry(best.0)))
}

/// Thin SVD `H = U diag(sigma) V*` with singular values non-increasing.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

impl SvdFactors {
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u.clone();
        for (j, &s) in self.sigma.iter().enumerate() {
            us.column_mut(j).scale_mut(s);
        }
        us * self.v.adjoint()
    }
}

pub fn svd(h: &CMatrix) -> SvdFactors {
    let decomp = SVD::new(h.clone(), true, true);
    let u = decomp.u.expect("requested U");
    let v = decomp.v_t.expect("requested V*").adjoint();
    let raw = decomp.singular_values;
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].total_cmp(&raw[a]));
    SvdFactors {
        u: u.select_columns(order.iter()),
        sigma: order.iter().map(|&i| raw[i]).collect(),
        v: v.select_columns(order.iter()),
    }
}

/// The capacity-optimal unitary precoder: the `m` dominant right singular
/// vectors of `h`, with canonical column phases.
///
/// When `m` exceeds `min(M_R, M_T)` the remaining columns are completed from
/// the orthogonal complement; they carry no channel gain.
pub fn optimal_unquantized(h: &CMatrix, m: usize) -> Result<PrecodingMatrix> {
    let m_t = h.ncols();
    if m == 0 || m > m_t {
        return Err(Error::Dimension(format!(
            "need 1 <= m <= M_T, got m={m}, M_T={m_t}"
        )));
    }
    let factors = svd(h);
    let have = m.min(factors.v.ncols());
    let mut f = CMatrix::zeros(m_t, m);
    // Re-orthonormalize against SVD round-off before completing the basis.
    let mut head = factors.v.columns(0, have).into_owned();
    if linalg::orthonormalize_columns(&mut head).is_ok() {
        f.columns_mut(0, have).copy_from(&head);
        linalg::complete_basis(&mut f, have);
    } else {
        linalg::complete_basis(&mut f, 0);
    }
    linalg::canonicalize_phases(&mut f);
    PrecodingMatrix::new(f)
}

/// Open-loop transmission: a uniformly random codebook entry.
pub fn open_loop_pick<'c, R: Rng + ?Sized>(
    codebook: &'c Codebook,
    rng: &mut R,
) -> &'c PrecodingMatrix {
    let i = rng.random_range(0..codebook.len());
    codebook.entry(i)
}
