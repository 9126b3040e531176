//! Symbolic algebra of n-qubit Pauli strings.
//!
//! Conventions used throughout the crate:
//! * qubit `q` is bit `q` of a computational basis index (qubit 0 is the
//!   least significant bit), so a dense matrix is `P_{n-1} ⊗ … ⊗ P_0`;
//! * a word is written with qubit 0 first: `"XZ"` is `X` on qubit 0 and `Z`
//!   on qubit 1;
//! * `Y` is the Hermitian Pauli `[[0, -i], [i, 0]]`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::dense::DenseOperator;
use crate::error::{structural, Error, Result};
use crate::state::StateVector;

/// Largest qubit count a Pauli word can carry (bit masks live in a `u64`).
pub const MAX_QUBITS: usize = 63;

/// Largest qubit count for which [`OperatorSum::to_dense`] materialises a
/// matrix unless the caller passes another limit.
pub const DEFAULT_DENSE_LIMIT: usize = 14;

/// Coefficients with modulus below this are dropped during normalisation.
pub const MERGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    /// Single-qubit product `self · other = i^k · result`; returns `(k, result)`.
    fn product(self, other: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
        }
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A tensor product of single-qubit Paulis stored as X and Z bit masks
/// (a `Y` sets both bits).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self { n, x: 0, z: 0 })
    }

    pub fn from_paulis(word: &[Pauli]) -> Result<Self> {
        check_qubits(word.len())?;
        let (mut x, mut z) = (0u64, 0u64);
        for (q, p) in word.iter().enumerate() {
            let (xb, zb) = p.bits();
            x |= (xb as u64) << q;
            z |= (zb as u64) << q;
        }
        Ok(Self { n: word.len(), x, z })
    }

    /// A single non-identity factor `p` on qubit `q`.
    pub fn single(n: usize, q: usize, p: Pauli) -> Result<Self> {
        Self::from_sparse(n, &[(q, p)])
    }

    /// Builds a word from `(qubit, pauli)` pairs; unnamed qubits are `I`.
    pub fn from_sparse(n: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        check_qubits(n)?;
        let mut s = Self { n, x: 0, z: 0 };
        for &(q, p) in factors {
            if q >= n {
                return Err(structural(format!("qubit {q} out of range for n = {n}")));
            }
            let (xb, zb) = p.bits();
            s.x = (s.x & !(1 << q)) | ((xb as u64) << q);
            s.z = (s.z & !(1 << q)) | ((zb as u64) << q);
        }
        Ok(s)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Bit mask of qubits carrying `X` or `Y`.
    pub fn x_mask(&self) -> u64 {
        self.x
    }

    /// Bit mask of qubits carrying `Z` or `Y`.
    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn paulis(&self) -> impl Iterator<Item = Pauli> + '_ {
        (0..self.n).map(move |q| self.get(q))
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// True when the word contains only `I` and `Z`.
    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones().is_multiple_of(2)
    }

    /// Matrix element structure: `P|b⟩ = phase(b) |b ⊕ x_mask⟩`.
    #[inline]
    pub fn phase_on(&self, basis: usize) -> C64 {
        let k = self.y_count() + 2 * ((basis as u64 & self.z).count_ones() & 1);
        I_POWERS[(k % 4) as usize]
    }

    /// Lexicographic key over the word (qubit 0 most significant, I < X < Y < Z).
    fn sort_key(&self) -> u128 {
        self.paulis().fold(0u128, |acc, p| (acc << 2) | p as u128)
    }
}

const I_POWERS: [C64; 4] = [C64::new(1.0, 0.0), C64::new(0.0, 1.0), C64::new(-1.0, 0.0), C64::new(0.0, -1.0)];

fn check_qubits(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        return Err(Error::Resource(format!("Pauli words support at most {MAX_QUBITS} qubits, got {n}")));
    }
    Ok(())
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.n.cmp(&other.n).then_with(|| self.sort_key().cmp(&other.sort_key()))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in self.paulis() {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let word = s
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(structural(format!("invalid Pauli letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_paulis(&word)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub coeff: C64,
    pub word: PauliString,
}

impl PauliTerm {
    pub fn new(coeff: impl Into<C64>, word: PauliString) -> Self {
        Self { coeff: coeff.into(), word }
    }

    /// Parses the word and attaches a coefficient: `PauliTerm::parse(0.5, "ZZ")`.
    pub fn parse(coeff: impl Into<C64>, word: &str) -> Result<Self> {
        Ok(Self::new(coeff, word.parse()?))
    }

    /// Operator product `self · other` as a single term.
    pub fn multiply(&self, other: &PauliTerm) -> Result<PauliTerm> {
        let (a, b) = (&self.word, &other.word);
        if a.n != b.n {
            return Err(structural(format!("cannot multiply Pauli words of lengths {} and {}", a.n, b.n)));
        }
        let mut phase = 0u8;
        let mut word = Vec::with_capacity(a.n);
        for q in 0..a.n {
            let (k, p) = a.get(q).product(b.get(q));
            phase += k;
            word.push(p);
        }
        Ok(PauliTerm {
            coeff: self.coeff * other.coeff * I_POWERS[(phase % 4) as usize],
            word: PauliString::from_paulis(&word)?,
        })
    }
}

/// Free-function form of [`PauliTerm::multiply`].
pub fn pauli_multiply(a: &PauliTerm, b: &PauliTerm) -> Result<PauliTerm> {
    a.multiply(b)
}

/// A normalised linear combination of Pauli words on a fixed number of qubits:
/// words are unique, sorted lexicographically, and coefficients below
/// [`MERGE_TOLERANCE`] are dropped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorSum {
    n: usize,
    terms: Vec<PauliTerm>,
}

impl OperatorSum {
    pub fn zero(n: usize) -> Result<Self> {
        check_qubits(n)?;
        Ok(Self { n, terms: Vec::new() })
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_terms(n, [PauliTerm::new(1.0, PauliString::identity(n)?)])
    }

    pub fn from_terms(n: usize, terms: impl IntoIterator<Item = PauliTerm>) -> Result<Self> {
        check_qubits(n)?;
        let mut merged: BTreeMap<PauliString, C64> = BTreeMap::new();
        for t in terms {
            if t.word.n != n {
                return Err(structural(format!("term {} has {} qubits, expected {n}", t.word, t.word.n)));
            }
            *merged.entry(t.word).or_default() += t.coeff;
        }
        let terms = merged
            .into_iter()
            .filter(|(_, c)| c.norm() >= MERGE_TOLERANCE)
            .map(|(word, coeff)| PauliTerm { coeff, word })
            .collect();
        Ok(Self { n, terms })
    }

    /// Convenience constructor from `(coefficient, word)` pairs.
    pub fn parse(n: usize, terms: &[(f64, &str)]) -> Result<Self> {
        let terms = terms.iter().map(|&(c, w)| PauliTerm::parse(c, w)).collect::<Result<Vec<_>>>()?;
        Self::from_terms(n, terms)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// True when every coefficient is real, i.e. the sum is Hermitian.
    pub fn is_hermitian(&self) -> bool {
        self.terms.iter().all(|t| t.coeff.im.abs() < MERGE_TOLERANCE)
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(|t| t.word.is_diagonal())
    }

    /// Σ |coeff|, an upper bound on the spectral norm.
    pub fn one_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).sum()
    }

    fn check_same_n(&self, other: &OperatorSum) -> Result<()> {
        if self.n != other.n {
            return Err(structural(format!("qubit-count mismatch: {} vs {}", self.n, other.n)));
        }
        Ok(())
    }

    pub fn add(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.check_same_n(other)?;
        Self::from_terms(self.n, self.terms.iter().chain(&other.terms).copied())
    }

    pub fn scale(&self, factor: impl Into<C64>) -> OperatorSum {
        let f = factor.into();
        let terms = self.terms.iter().map(|t| PauliTerm { coeff: t.coeff * f, word: t.word });
        Self::from_terms(self.n, terms).expect("qubit count already validated")
    }

    pub fn multiply(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.check_same_n(other)?;
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                out.push(a.multiply(b)?);
            }
        }
        Self::from_terms(self.n, out)
    }

    /// `self·other − other·self`. Commuting word pairs cancel exactly and
    /// anticommuting pairs contribute `2·a·b`, so the result is empty iff
    /// the operators commute.
    pub fn commutator(&self, other: &OperatorSum) -> Result<OperatorSum> {
        self.check_same_n(other)?;
        let mut out = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                if !a.word.commutes_with(&b.word) {
                    let ab = a.multiply(b)?;
                    out.push(PauliTerm { coeff: ab.coeff * 2.0, word: ab.word });
                }
            }
        }
        Self::from_terms(self.n, out)
    }

    /// Diagonal of the matrix in the computational basis (only `I`/`Z`
    /// words contribute).
    pub fn diagonal(&self) -> Result<Vec<C64>> {
        let dim = state_dim(self.n)?;
        let mut diag = vec![C64::new(0.0, 0.0); dim];
        for t in self.terms.iter().filter(|t| t.word.is_diagonal()) {
            for (b, d) in diag.iter_mut().enumerate() {
                *d += t.coeff * t.word.phase_on(b);
            }
        }
        Ok(diag)
    }

    /// Dense `2ⁿ×2ⁿ` matrix, built by scattering each term's `2ⁿ` nonzero
    /// entries.
    pub fn to_dense(&self) -> Result<DenseOperator> {
        self.to_dense_limited(DEFAULT_DENSE_LIMIT)
    }

    pub fn to_dense_limited(&self, max_qubits: usize) -> Result<DenseOperator> {
        if self.n > max_qubits {
            return Err(Error::Resource(format!(
                "dense materialisation limited to {max_qubits} qubits, got {}",
                self.n
            )));
        }
        let dim = 1usize << self.n;
        let mut m = DenseOperator::zeros(dim);
        for t in &self.terms {
            let flip = t.word.x as usize;
            for col in 0..dim {
                let v = t.coeff * t.word.phase_on(col);
                m.add_to(col ^ flip, col, v);
            }
        }
        Ok(m)
    }

    /// Matrix-free `op·v`; the result is not renormalised.
    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        let dim = state_dim(self.n)?;
        if v.dim() != dim {
            return Err(structural(format!(
                "operator on {} qubits applied to vector of dimension {}",
                self.n,
                v.dim()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); dim];
        self.apply_into(v.amplitudes(), &mut out);
        Ok(StateVector::from_vec(out))
    }

    /// Accumulates `op·src` into `dst` (both of length `2ⁿ`).
    pub fn apply_into(&self, src: &[C64], dst: &mut [C64]) {
        debug_assert_eq!(src.len(), dst.len());
        for t in &self.terms {
            let flip = t.word.x as usize;
            let zmask = t.word.z as usize;
            let base = t.coeff * I_POWERS[(t.word.y_count() % 4) as usize];
            for (b, &a) in src.iter().enumerate() {
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                let sign = if (b & zmask).count_ones() & 1 == 1 { -1.0 } else { 1.0 };
                dst[b ^ flip] += base * a * sign;
            }
        }
    }

    /// Bit masks of all distinct `X`-parts; the operator couples `|b⟩` only to
    /// `|b ⊕ mask⟩` for these masks.
    pub fn flip_masks(&self) -> Vec<u64> {
        let mut masks: Vec<u64> = self.terms.iter().map(|t| t.word.x).collect();
        masks.sort_unstable();
        masks.dedup();
        masks
    }

    /// True when all words pairwise commute.
    pub fn terms_commute(&self) -> bool {
        self.terms.iter().enumerate().all(|(i, a)| self.terms[i + 1..].iter().all(|b| a.word.commutes_with(&b.word)))
    }
}

/// An operator sum regrouped by `X`-mask for repeated application:
/// `(op·v)[b ⊕ m] += coeffs_m[b]·v[b]`, with the diagonal part kept apart.
#[derive(Debug, Clone)]
pub struct CompiledOperator {
    n: usize,
    diagonal: Option<Vec<C64>>,
    flips: Vec<(usize, Vec<C64>)>,
}

impl CompiledOperator {
    pub fn new(op: &OperatorSum) -> Result<Self> {
        let dim = state_dim(op.n)?;
        let mut diagonal = None;
        let mut flips = Vec::new();
        for mask in op.flip_masks() {
            let mut coeffs = vec![C64::new(0.0, 0.0); dim];
            for t in op.terms.iter().filter(|t| t.word.x == mask) {
                for (b, c) in coeffs.iter_mut().enumerate() {
                    *c += t.coeff * t.word.phase_on(b);
                }
            }
            if mask == 0 {
                diagonal = Some(coeffs);
            } else {
                flips.push((mask as usize, coeffs));
            }
        }
        Ok(Self { n: op.n, diagonal, flips })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Diagonal entries when the operator has no off-diagonal part.
    pub fn as_diagonal(&self) -> Option<Vec<C64>> {
        if !self.flips.is_empty() {
            return None;
        }
        Some(self.diagonal.clone().unwrap_or_else(|| vec![C64::new(0.0, 0.0); self.dim()]))
    }

    /// Overwrites `dst` with `op·src`.
    pub fn apply_to(&self, src: &[C64], dst: &mut [C64]) {
        debug_assert_eq!(src.len(), self.dim());
        debug_assert_eq!(dst.len(), self.dim());
        match &self.diagonal {
            Some(d) => dst.iter_mut().zip(src).zip(d).for_each(|((o, &a), &c)| *o = c * a),
            None => dst.fill(C64::new(0.0, 0.0)),
        }
        for (mask, coeffs) in &self.flips {
            for (b, (&a, &c)) in src.iter().zip(coeffs).enumerate() {
                dst[b ^ mask] += c * a;
            }
        }
    }

    pub fn apply(&self, v: &StateVector) -> Result<StateVector> {
        if v.dim() != self.dim() {
            return Err(structural(format!(
                "operator of dimension {} applied to vector of dimension {}",
                self.dim(),
                v.dim()
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); v.dim()];
        self.apply_to(v.amplitudes(), &mut out);
        Ok(StateVector::from_vec(out))
    }
}

impl fmt::Display for OperatorSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if t.coeff.im == 0.0 {
                write!(f, "{}*{}", t.coeff.re, t.word)?;
            } else {
                write!(f, "({})*{}", t.coeff, t.word)?;
            }
        }
        Ok(())
    }
}

/// `2ⁿ`, rejecting qubit counts whose state vector could not be indexed.
pub(crate) fn state_dim(n: usize) -> Result<usize> {
    if n >= usize::BITS as usize - 1 || n > 40 {
        return Err(Error::Resource(format!("state vector for {n} qubits is not addressable")));
    }
    Ok(1usize << n)
}

/// Free-function form of [`OperatorSum::commutator`].
pub fn commutator(a: &OperatorSum, b: &OperatorSum) -> Result<OperatorSum> {
    a.commutator(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dense::DenseOperator;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // Independent Kronecker-product oracle (qubit 0 is the rightmost factor).
    fn single_matrix(p: Pauli) -> [[C64; 2]; 2] {
        let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
        match p {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }

    fn kron_oracle(term: &PauliTerm) -> Vec<Vec<C64>> {
        let mut m = vec![vec![term.coeff]];
        for q in 0..term.word.n() {
            let s = single_matrix(term.word.get(q));
            let d = m.len();
            let mut next = vec![vec![c(0.0, 0.0); 2 * d]; 2 * d];
            for (a, row) in s.iter().enumerate() {
                for (b, &sv) in row.iter().enumerate() {
                    for i in 0..d {
                        for j in 0..d {
                            next[a * d + i][b * d + j] = sv * m[i][j];
                        }
                    }
                }
            }
            m = next;
        }
        m
    }

    fn assert_dense_eq(a: &DenseOperator, b: &[Vec<C64>], tol: f64) {
        for (i, row) in b.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!((a.get(i, j) - v).norm() <= tol, "entry ({i},{j}): {} vs {v}", a.get(i, j));
            }
        }
    }

    #[test]
    fn single_qubit_products() {
        let p = pauli_multiply(&PauliTerm::parse(1.0, "X").unwrap(), &PauliTerm::parse(1.0, "Y").unwrap()).unwrap();
        assert_eq!(p.word.to_string(), "Z");
        assert_eq!(p.coeff, c(0.0, 1.0));

        let p = pauli_multiply(&PauliTerm::parse(1.0, "Z").unwrap(), &PauliTerm::parse(1.0, "Z").unwrap()).unwrap();
        assert_eq!(p.word.to_string(), "I");
        assert_eq!(p.coeff, c(1.0, 0.0));
    }

    #[test]
    fn two_qubit_product_matches_matrices() {
        let a = PauliTerm::parse(2.0, "XZ").unwrap();
        let b = PauliTerm::parse(0.5, "YI").unwrap();
        let p = a.multiply(&b).unwrap();
        assert_eq!(p.word.to_string(), "ZZ");
        assert!((p.coeff - c(0.0, 1.0)).norm() < 1e-15);

        let ma = kron_oracle(&a);
        let mb = kron_oracle(&b);
        let mut prod = vec![vec![c(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    prod[i][j] += ma[i][k] * mb[k][j];
                }
            }
        }
        let dense = OperatorSum::from_terms(2, [p]).unwrap().to_dense().unwrap();
        assert_dense_eq(&dense, &prod, 1e-14);
    }

    #[test]
    fn length_mismatch_is_structural() {
        let a = PauliTerm::parse(1.0, "X").unwrap();
        let b = PauliTerm::parse(1.0, "XX").unwrap();
        assert!(matches!(a.multiply(&b), Err(Error::Structural(_))));
        let sa = OperatorSum::parse(1, &[(1.0, "X")]).unwrap();
        let sb = OperatorSum::parse(2, &[(1.0, "XX")]).unwrap();
        assert!(matches!(sa.commutator(&sb), Err(Error::Structural(_))));
    }

    #[test]
    fn canonical_commutators() {
        let z = OperatorSum::parse(1, &[(1.0, "Z")]).unwrap();
        let x = OperatorSum::parse(1, &[(1.0, "X")]).unwrap();
        let zx = z.commutator(&x).unwrap();
        assert_eq!(zx.terms().len(), 1);
        assert_eq!(zx.terms()[0].word.to_string(), "Y");
        assert_eq!(zx.terms()[0].coeff, c(0.0, 2.0));

        let zz = OperatorSum::parse(2, &[(1.0, "ZZ")]).unwrap();
        let xx = OperatorSum::parse(2, &[(1.0, "XX")]).unwrap();
        assert!(zz.commutator(&xx).unwrap().is_empty());

        let z1 = OperatorSum::parse(2, &[(1.0, "ZI")]).unwrap();
        let x2 = OperatorSum::parse(2, &[(1.0, "IX")]).unwrap();
        assert!(z1.commutator(&x2).unwrap().is_empty());
    }

    #[test]
    fn dense_examples() {
        let z = OperatorSum::parse(1, &[(1.0, "Z")]).unwrap().to_dense().unwrap();
        assert_dense_eq(&z, &[vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]], 0.0);
        let x = OperatorSum::parse(1, &[(1.0, "X")]).unwrap().to_dense().unwrap();
        assert_dense_eq(&x, &[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]], 0.0);
    }

    #[test]
    fn dense_limit_is_resource_error() {
        let op = OperatorSum::identity(5).unwrap();
        assert!(matches!(op.to_dense_limited(4), Err(Error::Resource(_))));
    }

    #[test]
    fn apply_examples() {
        let x = OperatorSum::parse(1, &[(1.0, "X")]).unwrap();
        let out = x.apply(&StateVector::basis(2, 0)).unwrap();
        assert_eq!(out.amplitudes(), &[c(0.0, 0.0), c(1.0, 0.0)]);

        // |01⟩ in qubit-0-first notation is index 2; Z₁ + Z₂ has eigenvalue 0.
        let zsum = OperatorSum::parse(2, &[(1.0, "ZI"), (1.0, "IZ")]).unwrap();
        let out = zsum.apply(&StateVector::basis(4, 2)).unwrap();
        assert!(out.amplitudes().iter().all(|a| a.norm() == 0.0));

        let bad = StateVector::basis(4, 0);
        assert!(matches!(x.apply(&bad), Err(Error::Structural(_))));
    }

    #[test]
    fn normalisation_merges_and_orders() {
        let op = OperatorSum::parse(2, &[(1.0, "ZI"), (0.5, "XX"), (-1.0, "ZI"), (0.25, "IZ"), (1e-14, "YY")]).unwrap();
        let words: Vec<String> = op.terms().iter().map(|t| t.word.to_string()).collect();
        assert_eq!(words, ["IZ", "XX"]);
    }

    fn arb_pauli() -> impl Strategy<Value = Pauli> {
        prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
    }

    fn arb_term(n: usize) -> impl Strategy<Value = PauliTerm> {
        (prop::collection::vec(arb_pauli(), n), -2.0..2.0f64, -2.0..2.0f64)
            .prop_map(|(w, re, im)| PauliTerm::new(C64::new(re, im), PauliString::from_paulis(&w).unwrap()))
    }

    fn arb_sum(n: usize, max_terms: usize) -> impl Strategy<Value = OperatorSum> {
        prop::collection::vec(arb_term(n), 1..max_terms).prop_map(move |t| OperatorSum::from_terms(n, t).unwrap())
    }

    proptest! {
        #[test]
        fn product_matches_dense(n in 1usize..=6, seed in any::<u64>()) {
            let mut g = crate::rng::SplitMix64::new(seed);
            let mut term = || {
                let w: Vec<Pauli> = (0..n).map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][(g.next_u64() % 4) as usize]).collect();
                PauliTerm::new(C64::new(g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0)), PauliString::from_paulis(&w).unwrap())
            };
            let (a, b) = (term(), term());
            let p = OperatorSum::from_terms(n, [a.multiply(&b).unwrap()]).unwrap().to_dense().unwrap();
            let da = OperatorSum::from_terms(n, [a]).unwrap().to_dense().unwrap();
            let db = OperatorSum::from_terms(n, [b]).unwrap().to_dense().unwrap();
            let prod = da.matmul(&db);
            prop_assert!(p.sub(&prod).frobenius_norm() <= 1e-12);
        }

        #[test]
        fn term_dense_matches_kron(t in arb_term(3)) {
            let dense = OperatorSum::from_terms(3, [t]).unwrap().to_dense().unwrap();
            assert_dense_eq(&dense, &kron_oracle(&t), 1e-14);
        }

        #[test]
        fn commutator_antisymmetric(a in arb_sum(3, 6), b in arb_sum(3, 6)) {
            let ab = a.commutator(&b).unwrap();
            let ba = b.commutator(&a).unwrap().scale(-1.0);
            prop_assert_eq!(ab.terms().len(), ba.terms().len());
            for (x, y) in ab.terms().iter().zip(ba.terms()) {
                prop_assert_eq!(x.word, y.word);
                prop_assert!((x.coeff - y.coeff).norm() <= 1e-12);
            }
        }

        #[test]
        fn jacobi_identity(a in arb_term(4), b in arb_term(4), c in arb_term(4)) {
            let (a, b, c) = (
                OperatorSum::from_terms(4, [a]).unwrap(),
                OperatorSum::from_terms(4, [b]).unwrap(),
                OperatorSum::from_terms(4, [c]).unwrap(),
            );
            let t1 = a.commutator(&b.commutator(&c).unwrap()).unwrap();
            let t2 = b.commutator(&c.commutator(&a).unwrap()).unwrap();
            let t3 = c.commutator(&a.commutator(&b).unwrap()).unwrap();
            let total = t1.add(&t2).unwrap().add(&t3).unwrap();
            prop_assert!(total.terms().iter().all(|t| t.coeff.norm() <= 1e-12), "{}", total);
        }

        #[test]
        fn compiled_matches_term_wise(a in arb_sum(4, 8), seed in any::<u64>()) {
            let mut g = crate::rng::SplitMix64::new(seed);
            let v = StateVector::from_vec((0..16).map(|_| C64::new(g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0))).collect());
            let direct = a.apply(&v).unwrap();
            let compiled = CompiledOperator::new(&a).unwrap().apply(&v).unwrap();
            prop_assert!(direct.distance(&compiled).unwrap() <= 1e-12);
        }

        #[test]
        fn apply_matches_dense(n in 1usize..=10, seed in any::<u64>()) {
            let mut g = crate::rng::SplitMix64::new(seed);
            let terms: Vec<PauliTerm> = (0..5).map(|_| {
                let w: Vec<Pauli> = (0..n).map(|_| [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][(g.next_u64() % 4) as usize]).collect();
                PauliTerm::new(C64::new(g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0)), PauliString::from_paulis(&w).unwrap())
            }).collect();
            let op = OperatorSum::from_terms(n, terms).unwrap();
            let v = StateVector::from_vec((0..1usize << n).map(|_| C64::new(g.uniform(-1.0, 1.0), g.uniform(-1.0, 1.0))).collect());
            let matrix_free = op.apply(&v).unwrap();
            let dense = op.to_dense().unwrap().apply(&v).unwrap();
            let err: f64 = matrix_free.amplitudes().iter().zip(dense.amplitudes()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-12);
        }
    }
}
