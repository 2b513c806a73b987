//! Super-increasing sequence packing of per-segment values.
//!
//! A sequence `a_1 < a_2 < … < a_M` is generated so that each element
//! exceeds the largest value the earlier segments can jointly contribute:
//! `Σ_{i<j} a_i·Q·V < a_j`, with Q the per-segment vehicle cap and V the
//! speed cap. A vehicle's vector `v` packs to the single integer
//! `Σ a_i·v_i`; sums of up to Q packed vectors unpack exactly back into
//! per-segment sums by repeated division from the top of the sequence.
//! The whole sequence must also fit under the Paillier modulus
//! (`Σ a_i·Q·V < n`) so packed aggregates never wrap.

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound (exclusive) for the randomly drawn first element. Keeping
/// `a_1` small maximizes headroom under the modulus bound.
const A1_RANGE: u32 = 1 << 16;
/// Small random slack added to each minimal-growth element.
const JITTER_RANGE: u32 = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SeqError {
    #[error("sequence of {m} segments with Q={q}, V={v} needs {needed_bits} bits but the bound has {bound_bits}")]
    Capacity {
        m: usize,
        q: u64,
        v: u64,
        needed_bits: u64,
        bound_bits: u64,
    },
    #[error("segment {index} value {value} exceeds the {role:?} bound {bound}")]
    ValueOutOfRange {
        index: usize,
        value: u64,
        role: ValueRole,
        bound: u64,
    },
    #[error("vector has {got} segments, sequence expects {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("packed value is not a legal aggregate (segment {index}: {reason})")]
    Corrupted { index: usize, reason: String },
    #[error("M, Q and V must all be at least 1")]
    BadParams,
}

/// Which value class a vector carries; decoding bounds differ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueRole {
    /// Presence flags: per-vehicle entries in {0, 1}, aggregates ≤ Q.
    Flag,
    /// Scaled speeds: per-vehicle entries ≤ V, aggregates ≤ Q·V.
    Speed,
}

/// The packing weights together with the caps they were built for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperIncreasingSeq {
    #[serde(with = "crate::serdes::biguint_vec_hex")]
    a: Vec<BigUint>,
    q_cap: u64,
    v_cap: u64,
}

impl SuperIncreasingSeq {
    pub fn segments(&self) -> usize {
        self.a.len()
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.a
    }

    pub fn q_cap(&self) -> u64 {
        self.q_cap
    }

    pub fn v_cap(&self) -> u64 {
        self.v_cap
    }

    /// Largest packed aggregate the sequence can represent: Σ a_i·Q·V.
    pub fn max_aggregate(&self) -> BigUint {
        let qv = BigUint::from(self.q_cap) * BigUint::from(self.v_cap);
        self.a.iter().map(|a| a * &qv).sum()
    }

    /// Build from explicit weights, validating the growth invariant.
    /// Used by tests and by deserialized material.
    pub fn from_weights(a: Vec<BigUint>, q_cap: u64, v_cap: u64) -> Result<Self, SeqError> {
        if a.is_empty() || q_cap == 0 || v_cap == 0 {
            return Err(SeqError::BadParams);
        }
        let qv = BigUint::from(q_cap) * BigUint::from(v_cap);
        let mut prefix = BigUint::zero();
        for (j, aj) in a.iter().enumerate() {
            if j > 0 && &prefix * &qv >= *aj {
                return Err(SeqError::Corrupted {
                    index: j,
                    reason: "growth invariant violated".into(),
                });
            }
            prefix += aj;
        }
        Ok(Self { a, q_cap, v_cap })
    }

    /// Per-vehicle entry bound for a role.
    fn entry_bound(&self, role: ValueRole) -> u64 {
        match role {
            ValueRole::Flag => 1,
            ValueRole::Speed => self.v_cap,
        }
    }

    /// Aggregate component bound for a role.
    fn aggregate_bound(&self, role: ValueRole) -> u64 {
        match role {
            ValueRole::Flag => self.q_cap,
            ValueRole::Speed => self.q_cap * self.v_cap,
        }
    }
}

/// One vehicle's (or one aggregate's) per-segment values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentVector(pub Vec<u64>);

impl SegmentVector {
    pub fn zeros(m: usize) -> Self {
        SegmentVector(vec![0; m])
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&v| v == 0)
    }
}

/// Generate a sequence for `m` segments under the modulus bound.
///
/// `a_1` is drawn from a small range and every later element takes the
/// minimal admissible value plus a little jitter, so capacity under
/// `n_bound` is maximized.
pub fn gen_sequence<R: RngCore>(
    m: usize,
    q_cap: u64,
    v_cap: u64,
    n_bound: &BigUint,
    rng: &mut R,
) -> Result<SuperIncreasingSeq, SeqError> {
    if m == 0 || q_cap == 0 || v_cap == 0 {
        return Err(SeqError::BadParams);
    }
    let qv = BigUint::from(q_cap) * BigUint::from(v_cap);
    let mut a = Vec::with_capacity(m);
    let mut prefix = BigUint::from(rng.gen_range(1..A1_RANGE));
    a.push(prefix.clone());
    for _ in 1..m {
        let next = &prefix * &qv + 1u32 + rng.gen_range(0..JITTER_RANGE);
        prefix += &next;
        a.push(next);
    }
    let seq = SuperIncreasingSeq { a, q_cap, v_cap };
    let max = seq.max_aggregate();
    if &max >= n_bound {
        return Err(SeqError::Capacity {
            m,
            q: q_cap,
            v: v_cap,
            needed_bits: max.bits(),
            bound_bits: n_bound.bits(),
        });
    }
    Ok(seq)
}

/// Pack a vector: `Σ a_i·v_i`. Entries are checked against the role's
/// per-vehicle bound.
pub fn encode(
    seq: &SuperIncreasingSeq,
    v: &SegmentVector,
    role: ValueRole,
) -> Result<BigUint, SeqError> {
    if v.0.len() != seq.segments() {
        return Err(SeqError::LengthMismatch {
            got: v.0.len(),
            expected: seq.segments(),
        });
    }
    let bound = seq.entry_bound(role);
    let mut packed = BigUint::zero();
    for (i, (&value, weight)) in v.0.iter().zip(&seq.a).enumerate() {
        if value > bound {
            return Err(SeqError::ValueOutOfRange {
                index: i,
                value,
                role,
                bound,
            });
        }
        packed += weight * value;
    }
    Ok(packed)
}

/// Unpack an aggregate: from the top of the sequence, each component is
/// the quotient by `a_i` of what remains. The final division by `a_1`
/// must be exact and every component must respect the role's aggregate
/// bound; anything else means the input exceeded capacity or was
/// corrupted in transit.
pub fn decode(
    seq: &SuperIncreasingSeq,
    packed: &BigUint,
    role: ValueRole,
) -> Result<SegmentVector, SeqError> {
    let m = seq.segments();
    let bound = seq.aggregate_bound(role);
    let mut out = vec![0u64; m];
    let mut rest = packed.clone();
    for i in (1..m).rev() {
        let remainder = &rest % &seq.a[i];
        let component = (&rest - &remainder) / &seq.a[i];
        out[i] = component_to_u64(&component, i, bound)?;
        rest = remainder;
    }
    let remainder = &rest % &seq.a[0];
    if !remainder.is_zero() {
        return Err(SeqError::Corrupted {
            index: 0,
            reason: "final division is not exact".into(),
        });
    }
    out[0] = component_to_u64(&(rest / &seq.a[0]), 0, bound)?;
    Ok(SegmentVector(out))
}

fn component_to_u64(component: &BigUint, index: usize, bound: u64) -> Result<u64, SeqError> {
    let digits = component.to_u64_digits();
    let value = match digits.len() {
        0 => 0,
        1 => digits[0],
        _ => {
            return Err(SeqError::Corrupted {
                index,
                reason: "component exceeds machine range".into(),
            })
        }
    };
    if value > bound {
        return Err(SeqError::Corrupted {
            index,
            reason: format!("component {value} exceeds aggregate bound {bound}"),
        });
    }
    Ok(value)
}
