//! Unitary precoding codebooks.
//!
//! A [`Codebook`] holds `2^L` precoding matrices addressed by their `L`-bit
//! index. A mother codebook of `L'` bits is split into `K = 2^(L'-L)`
//! contiguous child codebooks used in rotation, and an [`AlteredCodebook`]
//! is the per-slot view in which one reserved index stands for the default
//! matrix instead of the child's own entry.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{self, CMatrix};
use crate::seeds::mix64;
use crate::{Error, Result};

/// Tolerance on `max |F*F - I|` for a valid precoding matrix.
pub const UNITARITY_TOL: f64 = 1e-8;

/// Largest codebook size accepted, in bits.
pub const MAX_BITS: u32 = 24;

/// An `M_T x M` complex matrix with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecodingMatrix(CMatrix);

impl PrecodingMatrix {
    /// Validates dimensions and column orthonormality.
    pub fn new(entries: CMatrix) -> Result<Self> {
        let (m_t, m) = entries.shape();
        if m == 0 || m > m_t {
            return Err(Error::Dimension(format!(
                "precoder must have 1 <= M <= M_T, got {m_t}x{m}"
            )));
        }
        let err = linalg::orthonormality_error(&entries);
        if !(err <= UNITARITY_TOL) {
            return Err(Error::Parameter(format!(
                "columns are not orthonormal (max |F*F - I| = {err:e})"
            )));
        }
        Ok(Self(entries))
    }

    pub(crate) fn from_orthonormal(entries: CMatrix) -> Self {
        debug_assert!(linalg::orthonormality_error(&entries) <= UNITARITY_TOL);
        Self(entries)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    /// Number of transmit antennas (rows).
    pub fn m_t(&self) -> usize {
        self.0.nrows()
    }

    /// Number of streams (columns).
    pub fn m(&self) -> usize {
        self.0.ncols()
    }

    pub fn unitarity_error(&self) -> f64 {
        linalg::orthonormality_error(&self.0)
    }
}

/// Seeded random `m_t x m` precoder: complex Gaussian fill, Gram–Schmidt,
/// then phase canonicalization of every column.
pub fn gen_random_unitary(m_t: usize, m: usize, seed: u64) -> Result<PrecodingMatrix> {
    if m == 0 || m > m_t {
        return Err(Error::Dimension(format!(
            "need 1 <= m <= m_t, got m_t={m_t}, m={m}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let mut f = linalg::complex_gaussian(&mut rng, m_t, m);
        // A rank-deficient Gaussian draw has probability zero; redraw anyway.
        if linalg::orthonormalize_columns(&mut f).is_ok() {
            linalg::canonicalize_phases(&mut f);
            return Ok(PrecodingMatrix::from_orthonormal(f));
        }
    }
}

/// Common read access to plain and altered codebooks.
pub trait CodebookView {
    fn len(&self) -> usize;

    fn entry(&self, index: usize) -> &PrecodingMatrix;

    /// The index standing for the default matrix, if this view has one.
    fn reserved_index(&self) -> Option<usize> {
        None
    }

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// An ordered set of exactly `2^bits` precoding matrices of equal shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    matrices: Vec<PrecodingMatrix>,
    bits: u32,
}

impl Codebook {
    pub fn new(matrices: Vec<PrecodingMatrix>, bits: u32) -> Result<Self> {
        if bits > MAX_BITS {
            return Err(Error::Parameter(format!(
                "codebook of {bits} bits exceeds the {MAX_BITS}-bit limit"
            )));
        }
        if matrices.len() != 1usize << bits {
            return Err(Error::Parameter(format!(
                "a {bits}-bit codebook needs {} matrices, got {}",
                1usize << bits,
                matrices.len()
            )));
        }
        let shape = (matrices[0].m_t(), matrices[0].m());
        if let Some(bad) = matrices.iter().find(|f| (f.m_t(), f.m()) != shape) {
            return Err(Error::Dimension(format!(
                "mixed precoder shapes {}x{} and {}x{}",
                shape.0,
                shape.1,
                bad.m_t(),
                bad.m()
            )));
        }
        Ok(Self { matrices, bits })
    }

    /// Generates `2^bits` seeded random unitary entries; entry `i` uses the
    /// seed `mix64(seed ^ i)`, so smaller codebooks from the same seed are
    /// prefixes of larger ones.
    pub fn generate(bits: u32, m_t: usize, m: usize, seed: u64) -> Result<Self> {
        if bits > MAX_BITS {
            return Err(Error::Parameter(format!(
                "codebook of {bits} bits exceeds the {MAX_BITS}-bit limit"
            )));
        }
        let matrices = (0..1u64 << bits)
            .map(|i| gen_random_unitary(m_t, m, mix64(seed ^ i)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { matrices, bits })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn m_t(&self) -> usize {
        self.matrices[0].m_t()
    }

    pub fn m(&self) -> usize {
        self.matrices[0].m()
    }

    pub fn get(&self, index: usize) -> Option<&PrecodingMatrix> {
        self.matrices.get(index)
    }

    pub fn matrices(&self) -> &[PrecodingMatrix] {
        &self.matrices
    }

    pub fn iter(&self) -> impl Iterator<Item = &PrecodingMatrix> {
        self.matrices.iter()
    }

    /// The first `2^bits` entries as a codebook of their own.
    pub fn prefix(&self, bits: u32) -> Result<Codebook> {
        if bits > self.bits {
            return Err(Error::Parameter(format!(
                "cannot take a {bits}-bit prefix of a {}-bit codebook",
                self.bits
            )));
        }
        Ok(Self {
            matrices: self.matrices[..1usize << bits].to_vec(),
            bits,
        })
    }

    /// Writes a debugging dump: a `m_t,m,L,seed` header line, then one
    /// line per matrix with row-major `re,im` pairs.
    pub fn write_dump<W: Write>(&self, seed: u64, mut out: W) -> Result<()> {
        writeln!(out, "{},{},{},{}", self.m_t(), self.m(), self.bits, seed)?;
        for f in &self.matrices {
            let m = f.matrix();
            let fields: Vec<String> = (0..m.nrows())
                .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
                .map(|(r, c)| format!("{},{}", m[(r, c)].re, m[(r, c)].im))
                .collect();
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

impl CodebookView for Codebook {
    fn len(&self) -> usize {
        self.matrices.len()
    }

    fn entry(&self, index: usize) -> &PrecodingMatrix {
        &self.matrices[index]
    }
}

/// Generates a mother codebook of `2^l_prime` entries.
pub fn gen_mother_codebook(l_prime: u32, m_t: usize, m: usize, seed: u64) -> Result<Codebook> {
    if l_prime == 0 {
        return Err(Error::Parameter(
            "mother codebook needs at least 1 bit".into(),
        ));
    }
    Codebook::generate(l_prime, m_t, m, seed)
}

/// `K` child codebooks of `2^L` entries each, in rotation order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChildCodebookSet {
    children: Vec<Codebook>,
    mother_bits: u32,
}

impl ChildCodebookSet {
    /// Wraps a single codebook as a one-child set (`K = 1`).
    pub fn single(codebook: Codebook) -> Self {
        let mother_bits = codebook.bits();
        Self {
            children: vec![codebook],
            mother_bits,
        }
    }

    pub fn children(&self) -> &[Codebook] {
        &self.children
    }

    pub fn child(&self, k: usize) -> &Codebook {
        &self.children[k]
    }

    pub fn k(&self) -> usize {
        self.children.len()
    }

    /// Bits per child codebook (`L`).
    pub fn bits(&self) -> u32 {
        self.children[0].bits()
    }

    pub fn mother_bits(&self) -> u32 {
        self.mother_bits
    }
}

/// Splits `mother` into contiguous children of `2^l` entries: child `k`
/// holds mother entries `k*2^l .. (k+1)*2^l`.
pub fn split_codebook(mother: &Codebook, l: u32) -> Result<ChildCodebookSet> {
    if l >= mother.bits() {
        return Err(Error::Parameter(format!(
            "child bits {l} must be below mother bits {}",
            mother.bits()
        )));
    }
    let size = 1usize << l;
    let children = mother
        .matrices()
        .chunks(size)
        .map(|chunk| Codebook {
            matrices: chunk.to_vec(),
            bits: l,
        })
        .collect();
    Ok(ChildCodebookSet {
        children,
        mother_bits: mother.bits(),
    })
}

/// A codebook seen with its `reserved_index` entry replaced by the default
/// matrix. The base codebook is borrowed, never modified.
#[derive(Debug, Clone, Copy)]
pub struct AlteredCodebook<'a> {
    base: &'a Codebook,
    reserved_index: usize,
    default_matrix: &'a PrecodingMatrix,
}

impl<'a> AlteredCodebook<'a> {
    pub fn base(&self) -> &'a Codebook {
        self.base
    }

    pub fn default_matrix(&self) -> &'a PrecodingMatrix {
        self.default_matrix
    }
}

impl CodebookView for AlteredCodebook<'_> {
    fn len(&self) -> usize {
        self.base.len()
    }

    fn entry(&self, index: usize) -> &PrecodingMatrix {
        if index == self.reserved_index {
            self.default_matrix
        } else {
            self.base.entry(index)
        }
    }

    fn reserved_index(&self) -> Option<usize> {
        Some(self.reserved_index)
    }
}

pub fn alter<'a>(
    base: &'a Codebook,
    reserved_index: usize,
    default_matrix: &'a PrecodingMatrix,
) -> Result<AlteredCodebook<'a>> {
    if reserved_index >= base.len() {
        return Err(Error::IndexOutOfRange {
            index: reserved_index,
            size: base.len(),
        });
    }
    if (default_matrix.m_t(), default_matrix.m()) != (base.m_t(), base.m()) {
        return Err(Error::Dimension(format!(
            "default matrix is {}x{}, codebook entries are {}x{}",
            default_matrix.m_t(),
            default_matrix.m(),
            base.m_t(),
            base.m()
        )));
    }
    Ok(AlteredCodebook {
        base,
        reserved_index,
        default_matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn scalar_precoder_is_one() {
        for seed in [0, 1, 99, u64::MAX] {
            let f = gen_random_unitary(1, 1, seed).unwrap();
            assert!((f.matrix()[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
            assert_eq!(f.matrix()[(0, 0)].im, 0.0);
        }
    }

    #[test]
    fn random_unitary_is_orthonormal_and_canonical() {
        let f = gen_random_unitary(4, 2, 7).unwrap();
        assert!(f.unitarity_error() <= UNITARITY_TOL);
        for j in 0..2 {
            let first = f.matrix()[(0, j)];
            assert_eq!(first.im, 0.0);
            assert!(first.re > 0.0);
        }
    }

    #[test]
    fn random_unitary_is_deterministic() {
        let a = gen_random_unitary(8, 1, 42).unwrap();
        let b = gen_random_unitary(8, 1, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, gen_random_unitary(8, 1, 43).unwrap());
    }

    #[test]
    fn too_many_streams_is_dimension_error() {
        assert!(matches!(
            gen_random_unitary(2, 3, 0),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            gen_random_unitary(2, 0, 0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn mother_codebook_sizes_and_prefix_nesting() {
        let cb = gen_mother_codebook(2, 4, 1, 5).unwrap();
        assert_eq!(cb.len(), 4);
        assert!(cb.iter().all(|f| f.unitarity_error() <= UNITARITY_TOL));
        let big = gen_mother_codebook(4, 4, 1, 5).unwrap();
        assert_eq!(big.prefix(2).unwrap(), cb);
        assert_eq!(gen_mother_codebook(2, 4, 1, 5).unwrap(), cb);
        assert!(gen_mother_codebook(0, 4, 1, 5).is_err());
    }

    #[test]
    fn split_into_blocks() {
        let mother = gen_mother_codebook(4, 2, 1, 11).unwrap();
        let set = split_codebook(&mother, 2).unwrap();
        assert_eq!(set.k(), 4);
        assert_eq!(set.bits(), 2);
        assert_eq!(set.mother_bits(), 4);
        for i in 0..4 {
            assert_eq!(set.child(1).entry(i), mother.entry(4 + i));
        }
    }

    #[test]
    fn split_degenerate_and_invalid() {
        let mother = gen_mother_codebook(2, 2, 1, 11).unwrap();
        assert!(matches!(
            split_codebook(&mother, 2),
            Err(Error::Parameter(_))
        ));
        let set = split_codebook(&mother, 1).unwrap();
        assert_eq!(set.k(), 2);
        let single = ChildCodebookSet::single(mother.clone());
        assert_eq!(single.k(), 1);
        assert_eq!(single.child(0), &mother);
    }

    #[test]
    fn alter_replaces_only_reserved_entry() {
        let base = gen_mother_codebook(2, 3, 1, 1).unwrap();
        let g = gen_random_unitary(3, 1, 1234).unwrap();
        let view = alter(&base, 2, &g).unwrap();
        assert_eq!(view.entry(0), base.entry(0));
        assert_eq!(view.entry(1), base.entry(1));
        assert_eq!(view.entry(2), &g);
        assert_eq!(view.entry(3), base.entry(3));
        assert_eq!(view.len(), 4);
        assert_eq!(view.reserved_index(), Some(2));
    }

    #[test]
    fn alter_with_own_entry_is_fixed_point() {
        let base = gen_mother_codebook(2, 3, 1, 1).unwrap();
        let own = base.entry(1).clone();
        let view = alter(&base, 1, &own).unwrap();
        assert!((0..4).all(|i| view.entry(i) == base.entry(i)));
    }

    #[test]
    fn alter_rejects_bad_index_and_shape() {
        let base = gen_mother_codebook(2, 3, 1, 1).unwrap();
        let g = gen_random_unitary(3, 1, 9).unwrap();
        assert!(matches!(
            alter(&base, 5, &g),
            Err(Error::IndexOutOfRange { index: 5, size: 4 })
        ));
        let wide = gen_random_unitary(3, 2, 9).unwrap();
        assert!(matches!(alter(&base, 0, &wide), Err(Error::Dimension(_))));
    }

    #[test]
    fn precoding_matrix_validation() {
        let not_unit = CMatrix::from_element(2, 1, Complex64::new(1.0, 0.0));
        assert!(matches!(
            PrecodingMatrix::new(not_unit),
            Err(Error::Parameter(_))
        ));
        let id = CMatrix::identity(2, 2);
        assert!(PrecodingMatrix::new(id).is_ok());
        let tall = CMatrix::identity(2, 3);
        assert!(matches!(
            PrecodingMatrix::new(tall),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn codebook_new_checks_size_and_shape() {
        let a = gen_random_unitary(2, 1, 0).unwrap();
        let b = gen_random_unitary(3, 1, 0).unwrap();
        assert!(Codebook::new(vec![a.clone()], 0).is_ok());
        assert!(Codebook::new(vec![a.clone()], 1).is_err());
        assert!(matches!(
            Codebook::new(vec![a, b], 1),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn dump_has_header_and_one_line_per_matrix() {
        let cb = gen_mother_codebook(1, 2, 1, 3).unwrap();
        let mut buf = Vec::new();
        cb.write_dump(3, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "2,1,1,3");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1].split(',').count(), 4);
    }
}
