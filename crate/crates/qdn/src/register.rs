//! Detector registers, basis-state encoding, signal monomials and sparse labstates.
//!
//! A rank-r register is the tensor product of r detector qubits. Its
//! computational basis is labelled little-endian: qubit k fired contributes
//! 2^k, so |100) over three qubits is basis index 1. A signal monomial is a
//! product of distinct creation operators applied to the void state |0...0)
//! and encodes to exactly one basis index. Labstates are stored sparsely:
//! physical runs occupy a tiny low-rank corner of the 2^r-dimensional space.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64;

use crate::error::QdnError;

/// Largest supported register rank; basis indices must fit one 64-bit word.
pub const MAX_RANK: u32 = 64;

/// Norm deviation above which a labstate is rejected as unnormalized.
pub const NORM_TOLERANCE: f64 = 1e-9;

/// A register of detector qubits Q_0..Q_{r-1}, 1 <= r <= 64.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RegisterSpec {
    rank: u32,
}

impl RegisterSpec {
    pub fn new(rank: u32) -> Result<Self, QdnError> {
        if rank == 0 || rank > MAX_RANK {
            return Err(QdnError::InvalidRank(rank));
        }
        Ok(RegisterSpec { rank })
    }

    pub fn rank(&self) -> u32 {
        self.rank
    }

    /// Hilbert-space dimension 2^rank.
    pub fn dimension(&self) -> u128 {
        1u128 << self.rank
    }

    pub fn contains(&self, value: u64) -> bool {
        (value as u128) < self.dimension()
    }

    pub fn basis_index(&self, value: u64) -> Result<BasisIndex, QdnError> {
        if !self.contains(value) {
            return Err(QdnError::BasisOutOfRange {
                value,
                rank: self.rank,
            });
        }
        Ok(BasisIndex(value))
    }
}

/// A computational-basis label |a), 0 <= a < 2^rank of the owning register.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisIndex(u64);

impl BasisIndex {
    pub fn value(self) -> u64 {
        self.0
    }

    /// Number of fired qubits (the state rank p).
    pub fn fired_count(self) -> u32 {
        self.0.count_ones()
    }

    pub fn monomial(self) -> SignalMonomial {
        SignalMonomial { mask: self.0 }
    }
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "|{})", self.0)
    }
}

/// A product of distinct creation operators A+_{k1}..A+_{kp} applied to the
/// void, canonically ordered (strictly ascending indices) and stored as a
/// bitmask. The empty monomial is the void itself.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignalMonomial {
    mask: u64,
}

impl SignalMonomial {
    pub fn void() -> Self {
        SignalMonomial { mask: 0 }
    }

    /// Single-generator monomial A+_k|0).
    pub fn generator(k: u32) -> Result<Self, QdnError> {
        if k >= MAX_RANK {
            return Err(QdnError::IndexOutOfRange {
                index: k,
                rank: MAX_RANK,
            });
        }
        Ok(SignalMonomial { mask: 1u64 << k })
    }

    /// Builds a monomial from strictly ascending qubit indices.
    pub fn from_indices(indices: &[u32]) -> Result<Self, QdnError> {
        let mut mask = 0u64;
        let mut last: Option<u32> = None;
        for &k in indices {
            if k >= MAX_RANK {
                return Err(QdnError::IndexOutOfRange {
                    index: k,
                    rank: MAX_RANK,
                });
            }
            if let Some(prev) = last {
                if k <= prev {
                    return Err(QdnError::IndicesNotAscending);
                }
            }
            last = Some(k);
            mask |= 1u64 << k;
        }
        Ok(SignalMonomial { mask })
    }

    pub fn from_mask(mask: u64) -> Self {
        SignalMonomial { mask }
    }

    pub fn mask(&self) -> u64 {
        self.mask
    }

    pub fn indices(&self) -> Vec<u32> {
        (0..MAX_RANK).filter(|k| self.contains(*k)).collect()
    }

    /// The monomial rank p (number of creation operators).
    pub fn degree(&self) -> u32 {
        self.mask.count_ones()
    }

    pub fn is_void(&self) -> bool {
        self.mask == 0
    }

    pub fn contains(&self, k: u32) -> bool {
        k < MAX_RANK && self.mask & (1u64 << k) != 0
    }

    pub fn is_disjoint(&self, other: &SignalMonomial) -> bool {
        self.mask & other.mask == 0
    }

    /// Union of two monomials with disjoint supports (the operator product).
    pub fn union(&self, other: &SignalMonomial) -> SignalMonomial {
        SignalMonomial {
            mask: self.mask | other.mask,
        }
    }

    /// Basis index of A+_{k1}..A+_{kp}|0): the sum of 2^k over fired qubits.
    pub fn encode(&self, register: RegisterSpec) -> Result<BasisIndex, QdnError> {
        if !register.contains(self.mask) {
            let worst = 63 - self.mask.leading_zeros();
            return Err(QdnError::IndexOutOfRange {
                index: worst,
                rank: register.rank(),
            });
        }
        Ok(BasisIndex(self.mask))
    }
}

impl fmt::Display for SignalMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, k) in self.indices().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, "}}")
    }
}

/// A sparse labstate: complex amplitudes over the basis of one register.
/// Only nonzero amplitudes are stored; exact zeros are removed, with no
/// magnitude-based pruning.
#[derive(Debug, Clone, PartialEq)]
pub struct Labstate {
    register: RegisterSpec,
    amplitudes: BTreeMap<u64, Complex64>,
}

impl Labstate {
    /// The void state |0...0): idle apparatus between runs.
    pub fn void(register: RegisterSpec) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(0, Complex64::new(1.0, 0.0));
        Labstate {
            register,
            amplitudes,
        }
    }

    /// The zero vector (no amplitudes at all; not a physical state).
    pub fn zero(register: RegisterSpec) -> Self {
        Labstate {
            register,
            amplitudes: BTreeMap::new(),
        }
    }

    /// The basis state reached by applying a signal monomial to the void.
    pub fn basis_state(register: RegisterSpec, monomial: &SignalMonomial) -> Result<Self, QdnError> {
        let index = monomial.encode(register)?;
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(index.value(), Complex64::new(1.0, 0.0));
        Ok(Labstate {
            register,
            amplitudes,
        })
    }

    /// Accumulates a sparse superposition of monomial terms.
    pub fn from_terms(
        register: RegisterSpec,
        terms: &[(Complex64, SignalMonomial)],
    ) -> Result<Self, QdnError> {
        let mut state = Labstate::zero(register);
        for (coeff, monomial) in terms {
            let index = monomial.encode(register)?;
            state.add_amplitude(index.value(), *coeff);
        }
        state.prune_zeros();
        Ok(state)
    }

    pub fn register(&self) -> RegisterSpec {
        self.register
    }

    pub fn is_zero(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.amplitudes.len()
    }

    /// Iterates stored terms in ascending basis-index order.
    pub fn terms(&self) -> impl Iterator<Item = (BasisIndex, Complex64)> + '_ {
        self.amplitudes.iter().map(|(&v, &a)| (BasisIndex(v), a))
    }

    /// The amplitude on one monomial outcome (zero when absent).
    pub fn amplitude(&self, monomial: &SignalMonomial) -> Result<Complex64, QdnError> {
        let index = monomial.encode(self.register)?;
        Ok(self
            .amplitudes
            .get(&index.value())
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0)))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Applies the creation operator A+_k = |1)_k(0| extended by identities.
    /// Terms with qubit k already fired are annihilated; the result may be
    /// the zero vector.
    pub fn apply_creation(&self, k: u32) -> Result<Labstate, QdnError> {
        if k >= self.register.rank() {
            return Err(QdnError::IndexOutOfRange {
                index: k,
                rank: self.register.rank(),
            });
        }
        let bit = 1u64 << k;
        let mut amplitudes = BTreeMap::new();
        for (&value, &amp) in &self.amplitudes {
            if value & bit == 0 {
                amplitudes.insert(value | bit, amp);
            }
        }
        Ok(Labstate {
            register: self.register,
            amplitudes,
        })
    }

    /// Inner product (x|y), conjugate-linear in `self`.
    pub fn inner_product(&self, other: &Labstate) -> Result<Complex64, QdnError> {
        if self.register != other.register {
            return Err(QdnError::RegisterMismatch {
                expected: self.register.rank(),
                found: other.register.rank(),
            });
        }
        let mut sum = Complex64::new(0.0, 0.0);
        if self.amplitudes.len() <= other.amplitudes.len() {
            for (value, x) in &self.amplitudes {
                if let Some(y) = other.amplitudes.get(value) {
                    sum += x.conj() * y;
                }
            }
        } else {
            for (value, y) in &other.amplitudes {
                if let Some(x) = self.amplitudes.get(value) {
                    sum += x.conj() * y;
                }
            }
        }
        Ok(sum)
    }

    /// Born probability of one outcome monomial: |(outcome|state)|^2.
    /// The state must be normalized to within [`NORM_TOLERANCE`].
    pub fn born_probability(&self, outcome: &SignalMonomial) -> Result<f64, QdnError> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QdnError::NotNormalized { norm });
        }
        Ok(self.amplitude(outcome)?.norm_sqr())
    }

    /// The state scaled to unit norm; the zero vector has no direction.
    pub fn normalized(&self) -> Result<Labstate, QdnError> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(QdnError::NotNormalized { norm });
        }
        let scale = Complex64::new(1.0 / norm, 0.0);
        let zero = Labstate::zero(self.register);
        Labstate::linear_combination(scale, self, Complex64::new(0.0, 0.0), &zero)
    }

    /// a*x + b*y over a shared register, with exact zeros removed.
    pub fn linear_combination(
        a: Complex64,
        x: &Labstate,
        b: Complex64,
        y: &Labstate,
    ) -> Result<Labstate, QdnError> {
        if x.register != y.register {
            return Err(QdnError::RegisterMismatch {
                expected: x.register.rank(),
                found: y.register.rank(),
            });
        }
        let mut state = Labstate::zero(x.register);
        for (&value, &amp) in &x.amplitudes {
            state.add_amplitude(value, a * amp);
        }
        for (&value, &amp) in &y.amplitudes {
            state.add_amplitude(value, b * amp);
        }
        state.prune_zeros();
        Ok(state)
    }

    /// Born probabilities of every monomial in the support, ascending.
    pub fn probability_table(&self) -> ProbabilityTable {
        let rows = self
            .terms()
            .map(|(index, amplitude)| TableRow {
                monomial: index.monomial(),
                basis_index: index.value(),
                amplitude,
                probability: amplitude.norm_sqr(),
            })
            .collect();
        ProbabilityTable {
            register_rank: self.register.rank(),
            rows,
        }
    }

    pub(crate) fn add_amplitude(&mut self, value: u64, amp: Complex64) {
        let entry = self
            .amplitudes
            .entry(value)
            .or_insert_with(|| Complex64::new(0.0, 0.0));
        *entry += amp;
    }

    pub(crate) fn prune_zeros(&mut self) {
        self.amplitudes.retain(|_, a| a.re != 0.0 || a.im != 0.0);
    }
}

/// Outcome probabilities of one run, sorted by encoded basis index.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityTable {
    pub register_rank: u32,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub monomial: SignalMonomial,
    pub basis_index: u64,
    pub amplitude: Complex64,
    pub probability: f64,
}

impl ProbabilityTable {
    pub fn total(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }

    /// Probability of one outcome monomial (zero when absent).
    pub fn probability(&self, monomial: &SignalMonomial) -> f64 {
        self.rows
            .iter()
            .find(|r| r.monomial == *monomial)
            .map(|r| r.probability)
            .unwrap_or(0.0)
    }

    /// Restricts the table to the queried outcomes, in ascending basis-index
    /// order; queried outcomes outside the support appear with zero rows.
    pub fn restricted_to(&self, queries: &[SignalMonomial]) -> ProbabilityTable {
        let mut sorted: Vec<SignalMonomial> = queries.to_vec();
        sorted.sort();
        sorted.dedup();
        let rows = sorted
            .into_iter()
            .map(|monomial| {
                self.rows
                    .iter()
                    .find(|r| r.monomial == monomial)
                    .cloned()
                    .unwrap_or(TableRow {
                        monomial,
                        basis_index: monomial.mask(),
                        amplitude: Complex64::new(0.0, 0.0),
                        probability: 0.0,
                    })
            })
            .collect();
        ProbabilityTable {
            register_rank: self.register_rank,
            rows,
        }
    }
}

/// All basis indices of the register with exactly p fired qubits, ascending.
/// The subsets for p = 0..=rank are disjoint and exhaust the basis, with
/// cardinality rank!/((rank-p)!p!).
pub fn rank_subset(register: RegisterSpec, p: u32) -> Result<Vec<BasisIndex>, QdnError> {
    let rank = register.rank();
    if p > rank {
        return Err(QdnError::SubsetOutOfRange { p, rank });
    }
    if p == 0 {
        return Ok(vec![BasisIndex(0)]);
    }
    let limit: u128 = 1u128 << rank;
    let mut out = Vec::new();
    // Gosper's hack walks same-popcount masks in ascending order.
    let mut v: u128 = (1u128 << p) - 1;
    while v < limit {
        out.push(BasisIndex(v as u64));
        let low = v & v.wrapping_neg();
        let ripple = v + low;
        v = ripple | (((v ^ ripple) >> 2) / low);
    }
    Ok(out)
}
