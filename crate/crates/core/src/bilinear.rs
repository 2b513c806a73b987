//! Pairing-based short signatures with batch verification.
//!
//! Signing key `x ∈ Z*_q`, verification key `Y = x·P`, signature
//! `σ = x·H(m)`, accepted when `e(P, σ) = e(Y, H(m))`. A batch of N
//! signatures is checked with a single equation
//! `e(P, Σ σ_j) = Π e(Y_j, H(m_j))`, which costs N+1 pairings instead of
//! the 2N an item-by-item check needs.
//!
//! The bilinear group is a transparent simulation model, not a hardness
//! assumption: G1 is the additive group Z_q and the pairing maps into the
//! order-q subgroup of Z*_p via `e(U, V) = h^{U·V}`. This satisfies
//! bilinearity and non-degeneracy exactly and keeps group elements at
//! `ceil(kappa/8)` bytes on the wire, which is what the protocol's cost
//! accounting assumes. Discrete logs in G1 are readable by construction,
//! so this backend is for simulation and benchmarking, never for
//! protecting real traffic.
//!
//! Every pairing evaluation increments the meter it is handed, so callers
//! can hold verification to an exact pairing budget.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::metrics::Meter;
use crate::paillier::is_probable_prime;

/// Format tag carried by serialized parameters so signatures stay
/// self-describing if the hash-to-group construction ever changes.
pub const PARAMS_VERSION: u32 = 1;

const HASH_DOMAIN: &[u8] = b"pptm/hash-to-group/v1";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BilinearError {
    #[error("unsupported kappa {0}; supported orders are 128, 160, 256 bits")]
    UnsupportedKappa(u32),
    #[error("batch verification needs at least one item")]
    EmptyBatch,
    #[error("group element encoding is out of range")]
    MalformedElement,
}

/// An element of G1, the group signatures and hash outputs live in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct G1(#[serde(with = "crate::serdes::biguint_hex")] BigUint);

impl G1 {
    pub fn is_identity(&self) -> bool {
        self.0.is_zero()
    }

    /// Canonical fixed-width big-endian encoding, `ceil(kappa/8)` bytes.
    pub fn to_bytes(&self, params: &GroupParams) -> Vec<u8> {
        let width = params.element_bytes();
        let raw = self.0.to_bytes_be();
        let mut out = vec![0u8; width - raw.len()];
        out.extend_from_slice(&raw);
        out
    }

    /// Decode and range-check an element; a value at or above the group
    /// order is a malformed encoding, not a verification failure.
    pub fn from_bytes(params: &GroupParams, bytes: &[u8]) -> Result<Self, BilinearError> {
        if bytes.len() != params.element_bytes() {
            return Err(BilinearError::MalformedElement);
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= params.q {
            return Err(BilinearError::MalformedElement);
        }
        Ok(G1(v))
    }
}

/// An element of the target group, the order-q subgroup of Z*_p.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gt(BigUint);

impl Gt {
    pub fn is_identity(&self) -> bool {
        self.0.is_one()
    }

    /// Exponentiation in the target group (test oracle for bilinearity).
    pub fn pow(&self, params: &GroupParams, k: &BigUint) -> Gt {
        Gt(self.0.modpow(k, &params.p))
    }

    pub fn mul(&self, params: &GroupParams, other: &Gt) -> Gt {
        Gt((&self.0 * &other.0) % &params.p)
    }
}

/// Public group description shared by every entity in a deployment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupParams {
    pub version: u32,
    /// Prime group order, kappa bits.
    #[serde(with = "crate::serdes::biguint_hex")]
    q: BigUint,
    /// Prime modulus of the target group, p ≡ 1 (mod q).
    #[serde(with = "crate::serdes::biguint_hex")]
    p: BigUint,
    /// Generator of the order-q subgroup of Z*_p.
    #[serde(with = "crate::serdes::biguint_hex")]
    gt_gen: BigUint,
    /// Generator of G1.
    generator: G1,
}

impl GroupParams {
    pub fn order(&self) -> &BigUint {
        &self.q
    }

    pub fn order_bits(&self) -> u64 {
        self.q.bits()
    }

    pub fn generator(&self) -> &G1 {
        &self.generator
    }

    /// Wire width of a G1 element in bytes.
    pub fn element_bytes(&self) -> usize {
        self.q.bits().div_ceil(8) as usize
    }

    /// Wire width of a G1 element in bits (the cost model's |G|).
    pub fn element_bits(&self) -> u64 {
        self.element_bytes() as u64 * 8
    }

    /// Group addition in G1.
    pub fn add(&self, a: &G1, b: &G1) -> G1 {
        G1((&a.0 + &b.0) % &self.q)
    }

    /// Scalar multiplication in G1. Counted as one `C_m`.
    pub fn scalar_mul(&self, k: &BigUint, e: &G1, meter: &mut Meter) -> G1 {
        meter.mul_g += 1;
        G1((k % &self.q) * &e.0 % &self.q)
    }

    /// The bilinear map. Counted as one `C_e`.
    pub fn pair(&self, a: &G1, b: &G1, meter: &mut Meter) -> Gt {
        meter.pairings += 1;
        let exp = (&a.0 * &b.0) % &self.q;
        Gt(self.gt_gen.modpow(&exp, &self.p))
    }
}

/// Secret scalar of a signer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SigningKey(#[serde(with = "crate::serdes::biguint_hex")] BigUint);

impl SigningKey {
    /// Test hook for pinning a known scalar.
    pub fn from_scalar(x: BigUint) -> Self {
        SigningKey(x)
    }
}

/// Public verification key `Y = x·P`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyKey(pub G1);

/// A short signature, one G1 element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature(pub G1);

/// Supported (order bits → target modulus bits) parameter sets.
fn target_bits(kappa: u32) -> Result<u64, BilinearError> {
    match kappa {
        128 => Ok(512),
        160 => Ok(1024),
        256 => Ok(2048),
        other => Err(BilinearError::UnsupportedKappa(other)),
    }
}

/// Generate group parameters for a supported kappa. Deterministic for a
/// fixed seed.
pub fn setup<R: RngCore>(kappa: u32, rng: &mut R) -> Result<GroupParams, BilinearError> {
    let p_bits = target_bits(kappa)?;

    let q = loop {
        let mut c = rng.gen_biguint(kappa as u64);
        c.set_bit(kappa as u64 - 1, true);
        c.set_bit(0, true);
        if is_probable_prime(&c) {
            break c;
        }
    };

    // p = q·c + 1 with c even and sized so p has exactly p_bits bits.
    let cofactor_bits = p_bits - kappa as u64;
    let p = loop {
        let mut c = rng.gen_biguint(cofactor_bits);
        c.set_bit(cofactor_bits - 1, true);
        c.set_bit(0, false);
        let candidate = &q * &c + 1u32;
        if candidate.bits() == p_bits && is_probable_prime(&candidate) {
            break candidate;
        }
    };

    let exponent = (&p - 1u32) / &q;
    let gt_gen = loop {
        let w = rng.gen_biguint_range(&BigUint::from(2u32), &p);
        let h = w.modpow(&exponent, &p);
        if !h.is_one() {
            break h;
        }
    };

    let generator = G1(rng.gen_biguint_range(&BigUint::one(), &q));

    Ok(GroupParams {
        version: PARAMS_VERSION,
        q,
        p,
        gt_gen,
        generator,
    })
}

/// Draw a signing key and its verification key.
pub fn keygen<R: RngCore>(params: &GroupParams, rng: &mut R) -> (SigningKey, VerifyKey) {
    let x = rng.gen_biguint_range(&BigUint::one(), &params.q);
    let y = verify_key_for(params, &SigningKey(x.clone()));
    (SigningKey(x), y)
}

/// Recompute `Y = x·P` (used by key generation and tests).
pub fn verify_key_for(params: &GroupParams, sk: &SigningKey) -> VerifyKey {
    let mut scratch = Meter::new();
    VerifyKey(params.scalar_mul(&sk.0, params.generator(), &mut scratch))
}

/// Hash an arbitrary byte string onto a non-identity element of G1.
///
/// Deterministic and parameter-free apart from the group order, so every
/// entity holding the same params maps messages identically.
pub fn hash_to_group(params: &GroupParams, message: &[u8]) -> G1 {
    let mut counter = 0u32;
    loop {
        let mut hasher = Sha256::new();
        hasher.update(HASH_DOMAIN);
        hasher.update(params.version.to_be_bytes());
        hasher.update(counter.to_be_bytes());
        hasher.update(message);
        let digest = hasher.finalize();
        let v = BigUint::from_bytes_be(&digest) % &params.q;
        if !v.is_zero() {
            return G1(v);
        }
        counter += 1;
    }
}

/// σ = x·H(message).
pub fn sign(params: &GroupParams, sk: &SigningKey, message: &[u8], meter: &mut Meter) -> Signature {
    let h = hash_to_group(params, message);
    Signature(params.scalar_mul(&sk.0, &h, meter))
}

/// Check `e(P, σ) = e(Y, H(message))`. Exactly two pairings.
pub fn verify(
    params: &GroupParams,
    vk: &VerifyKey,
    message: &[u8],
    sig: &Signature,
    meter: &mut Meter,
) -> bool {
    let lhs = params.pair(params.generator(), &sig.0, meter);
    let rhs = params.pair(&vk.0, &hash_to_group(params, message), meter);
    lhs == rhs
}

/// Check `e(P, Σ σ_j) = Π e(Y_j, H(m_j))`. Exactly N+1 pairings.
///
/// A passing batch of adversarial inputs does not certify each item
/// individually; callers that need per-item verdicts fall back to
/// [`verify`] when the batch check fails.
pub fn batch_verify(
    params: &GroupParams,
    items: &[(&VerifyKey, &[u8], &Signature)],
    meter: &mut Meter,
) -> Result<bool, BilinearError> {
    if items.is_empty() {
        return Err(BilinearError::EmptyBatch);
    }
    let mut sigma_sum = G1(BigUint::zero());
    for (_, _, sig) in items {
        sigma_sum = params.add(&sigma_sum, &sig.0);
    }
    let lhs = params.pair(params.generator(), &sigma_sum, meter);
    let mut rhs = Gt(BigUint::one());
    for (vk, message, _) in items {
        let term = params.pair(&vk.0, &hash_to_group(params, message), meter);
        rhs = rhs.mul(params, &term);
    }
    Ok(lhs == rhs)
}
