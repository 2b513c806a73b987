//! Additively homomorphic Paillier cryptosystem over arbitrary-precision
//! integers.
//!
//! Keys are `pk = (n, g)` and `sk = (λ, μ)` with `n = p·q` a product of two
//! equal-length primes, `λ = lcm(p−1, q−1)`, and
//! `μ = (L(g^λ mod n²))^{−1} mod n` where `L(a) = (a−1)/n`. Encryption of
//! `m ∈ [0, n)` with randomizer `r ∈ Z*_n` is `c = g^m · r^n mod n²`;
//! decryption is `m = L(c^λ mod n²) · μ mod n`. Multiplying ciphertexts
//! adds plaintexts and raising a ciphertext to a scalar multiplies its
//! plaintext, which is all the aggregation pipeline needs.
//!
//! The default generator is `g = n + 1`, for which `g^m mod n² = 1 + m·n`
//! costs one modular multiplication instead of an exponentiation; an
//! encryption then performs exactly one exponentiation (`r^n`), matching
//! the cost model. Any other `g` passing the decryptability check is
//! accepted and costs a second exponentiation per encryption.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::Meter;

/// Miller-Rabin iteration count; error probability below 4^-64 < 2^-80.
const MILLER_RABIN_ROUNDS: u32 = 64;

/// Smallest accepted prime bit length. Toy keys below this are only
/// constructible through [`from_primes`].
pub const MIN_KAPPA1: u32 = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PaillierError {
    #[error("kappa1 = {0} is below the minimum of {MIN_KAPPA1} bits")]
    Kappa1TooSmall(u32),
    #[error("plaintext is not in [0, n)")]
    MessageOutOfRange,
    #[error("randomizer is not a unit modulo n")]
    BadRandomizer,
    #[error("scalar is not in [0, n)")]
    ScalarOutOfRange,
    #[error("ciphertext is not a unit modulo n² (corrupted or wrong key)")]
    CorruptedCiphertext,
    #[error("p and q must be distinct primes of equal bit length")]
    BadPrimes,
    #[error("g is not usable: gcd(L(g^λ mod n²), n) ≠ 1")]
    BadGenerator,
}

/// Public key `(n, g)` with the modulus square cached.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaillierPublicKey {
    #[serde(with = "crate::serdes::biguint_hex")]
    n: BigUint,
    #[serde(with = "crate::serdes::biguint_hex")]
    n_squared: BigUint,
    #[serde(with = "crate::serdes::biguint_hex")]
    g: BigUint,
}

impl PaillierPublicKey {
    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn g(&self) -> &BigUint {
        &self.g
    }

    /// Bit length of the modulus; a ciphertext occupies twice this.
    pub fn n_bits(&self) -> u64 {
        self.n.bits()
    }

    fn uses_default_generator(&self) -> bool {
        self.g == &self.n + 1u32
    }
}

/// Secret key `(λ, μ)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaillierSecretKey {
    #[serde(with = "crate::serdes::biguint_hex")]
    lambda: BigUint,
    #[serde(with = "crate::serdes::biguint_hex")]
    mu: BigUint,
}

impl PaillierSecretKey {
    pub fn lambda(&self) -> &BigUint {
        &self.lambda
    }

    pub fn mu(&self) -> &BigUint {
        &self.mu
    }
}

/// An element of Z*_{n²} produced by [`encrypt`] or the homomorphic ops.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ciphertext(#[serde(with = "crate::serdes::biguint_hex")] BigUint);

impl Ciphertext {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Rebuild from a decoded wire value. Validity against a key is
    /// checked at decryption time.
    pub fn from_value(v: BigUint) -> Self {
        Ciphertext(v)
    }
}

/// `L(a) = (a − 1) / n`, defined on a ≡ 1 (mod n).
fn l_function(a: &BigUint, n: &BigUint) -> BigUint {
    (a - 1u32) / n
}

/// Generate a keypair with two fresh `kappa1`-bit primes.
///
/// The two top bits of each prime are forced so the modulus has exactly
/// `2·kappa1` bits. Deterministic for a fixed RNG state.
pub fn keygen<R: RngCore>(
    kappa1: u32,
    rng: &mut R,
) -> Result<(PaillierPublicKey, PaillierSecretKey), PaillierError> {
    if kappa1 < MIN_KAPPA1 {
        return Err(PaillierError::Kappa1TooSmall(kappa1));
    }
    loop {
        let p = sample_prime(kappa1 as u64, rng);
        let q = sample_prime(kappa1 as u64, rng);
        if p == q {
            continue;
        }
        match build_keypair(&p, &q, None) {
            Ok(pair) => return Ok(pair),
            // gcd(λ, n) ≠ 1 can happen when p divides q−1; resample.
            Err(PaillierError::BadGenerator) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Build a keypair from caller-supplied primes, e.g. the toy key (5, 7).
///
/// `g` defaults to `n + 1` when not given.
pub fn from_primes(
    p: &BigUint,
    q: &BigUint,
    g: Option<BigUint>,
) -> Result<(PaillierPublicKey, PaillierSecretKey), PaillierError> {
    if p == q || p.bits() != q.bits() || !is_probable_prime(p) || !is_probable_prime(q) {
        return Err(PaillierError::BadPrimes);
    }
    build_keypair(p, q, g)
}

fn build_keypair(
    p: &BigUint,
    q: &BigUint,
    g: Option<BigUint>,
) -> Result<(PaillierPublicKey, PaillierSecretKey), PaillierError> {
    let n = p * q;
    let n_squared = &n * &n;
    let g = g.unwrap_or(&n + 1u32);
    let lambda = (p - 1u32).lcm(&(q - 1u32));
    let l = l_function(&g.modpow(&lambda, &n_squared), &n);
    let mu = match l.modinv(&n) {
        Some(mu) => mu,
        None => return Err(PaillierError::BadGenerator),
    };
    Ok((PaillierPublicKey { n, n_squared, g }, PaillierSecretKey { lambda, mu }))
}

/// Encrypt `m` with a fresh randomizer drawn from `rng`.
pub fn encrypt<R: RngCore>(
    pk: &PaillierPublicKey,
    m: &BigUint,
    rng: &mut R,
    meter: &mut Meter,
) -> Result<Ciphertext, PaillierError> {
    let r = sample_unit(&pk.n, rng);
    encrypt_with_randomizer(pk, m, &r, meter)
}

/// Encrypt `m` with an explicit randomizer `r ∈ Z*_n`.
pub fn encrypt_with_randomizer(
    pk: &PaillierPublicKey,
    m: &BigUint,
    r: &BigUint,
    meter: &mut Meter,
) -> Result<Ciphertext, PaillierError> {
    if m >= &pk.n {
        return Err(PaillierError::MessageOutOfRange);
    }
    if r.is_zero() || r >= &pk.n || r.gcd(&pk.n) != BigUint::one() {
        return Err(PaillierError::BadRandomizer);
    }
    let g_to_m = if pk.uses_default_generator() {
        // (1 + n)^m = 1 + m·n (mod n²): one multiplication, no exponentiation.
        (BigUint::one() + m * &pk.n) % &pk.n_squared
    } else {
        meter.exp_n2 += 1;
        pk.g.modpow(m, &pk.n_squared)
    };
    meter.exp_n2 += 1;
    let r_to_n = r.modpow(&pk.n, &pk.n_squared);
    meter.mul_n2 += 1;
    Ok(Ciphertext((g_to_m * r_to_n) % &pk.n_squared))
}

/// Recover the plaintext of `c`.
pub fn decrypt(
    sk: &PaillierSecretKey,
    pk: &PaillierPublicKey,
    c: &Ciphertext,
    meter: &mut Meter,
) -> Result<BigUint, PaillierError> {
    if c.0.is_zero() || c.0 >= pk.n_squared || c.0.gcd(&pk.n_squared) != BigUint::one() {
        return Err(PaillierError::CorruptedCiphertext);
    }
    meter.exp_n2 += 1;
    let l = l_function(&c.0.modpow(&sk.lambda, &pk.n_squared), &pk.n);
    Ok((l * &sk.mu) % &pk.n)
}

/// Homomorphic addition: the product of ciphertexts encrypts the sum.
pub fn add_ciphertexts(
    pk: &PaillierPublicKey,
    c1: &Ciphertext,
    c2: &Ciphertext,
    meter: &mut Meter,
) -> Ciphertext {
    meter.mul_n2 += 1;
    Ciphertext((&c1.0 * &c2.0) % &pk.n_squared)
}

/// Homomorphic scalar multiplication: `c^a` encrypts `a·m`.
pub fn scalar_mul(
    pk: &PaillierPublicKey,
    c: &Ciphertext,
    a: &BigUint,
    meter: &mut Meter,
) -> Result<Ciphertext, PaillierError> {
    if a >= &pk.n {
        return Err(PaillierError::ScalarOutOfRange);
    }
    meter.exp_n2 += 1;
    Ok(Ciphertext(c.0.modpow(a, &pk.n_squared)))
}

/// Draw a uniform element of Z*_n.
pub fn sample_unit<R: RngCore>(n: &BigUint, rng: &mut R) -> BigUint {
    loop {
        let r = rng.gen_biguint_below(n);
        if !r.is_zero() && r.gcd(n) == BigUint::one() {
            return r;
        }
    }
}

fn sample_prime<R: RngCore>(bits: u64, rng: &mut R) -> BigUint {
    loop {
        let mut candidate = rng.gen_biguint(bits);
        // Force the two top bits (exact product width) and oddness.
        candidate.set_bit(bits - 1, true);
        candidate.set_bit(bits - 2, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate) {
            return candidate;
        }
    }
}

const SMALL_PRIMES: [u32; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Miller-Rabin with fixed pseudo-random bases; deterministic verdicts.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for sp in SMALL_PRIMES {
        let sp = BigUint::from(sp);
        if n == &sp {
            return true;
        }
        if (n % &sp).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;

    // Bases from a splitmix-style sequence keyed on the candidate, so the
    // test itself needs no RNG handle and stays reproducible.
    let mut base_seed = n.iter_u64_digits().fold(0u64, |acc, d| {
        acc.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(d)
    });
    let mut next_base = || {
        base_seed = base_seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (base_seed >> 16) | 2
    };

    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let a = BigUint::from(next_base()) % (n - 3u32) + &two; // a in [2, n-2]
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
