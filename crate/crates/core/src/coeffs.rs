//! Exact mod-p arithmetic for the coefficients that govern divided-power
//! multiplication.
//!
//! Everything here is computed digitwise in base p. Lucas' theorem reduces a
//! binomial coefficient mod p to a product of digit binomials, so no
//! big-integer arithmetic is ever needed; the test suite cross-checks against
//! a big-integer oracle instead.

use crate::error::{EngineError, Result};

/// A fixed prime, validated at construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrimeP(u32);

/// A residue in `[0, p)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldScalar(pub u32);

impl FieldScalar {
    pub const ZERO: FieldScalar = FieldScalar(0);
    pub const ONE: FieldScalar = FieldScalar(1);

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl std::fmt::Display for FieldScalar {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl PrimeP {
    /// Largest accepted prime: keeps every product of residues, digit
    /// binomial, and tower exponent comfortably inside u64 arithmetic.
    pub const MAX: u32 = 1 << 16;

    pub fn new(p: u32) -> Result<Self> {
        if p > Self::MAX {
            return Err(EngineError::Schema(format!(
                "prime {p} exceeds the supported bound {}",
                Self::MAX
            )));
        }
        if is_prime(p as u64) {
            Ok(PrimeP(p))
        } else {
            Err(EngineError::NotPrime(p as u64))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    pub fn scalar(self, n: i64) -> FieldScalar {
        let p = self.0 as i64;
        FieldScalar(n.rem_euclid(p) as u32)
    }

    pub fn add(self, a: FieldScalar, b: FieldScalar) -> FieldScalar {
        FieldScalar((a.0 + b.0) % self.0)
    }

    pub fn sub(self, a: FieldScalar, b: FieldScalar) -> FieldScalar {
        FieldScalar((a.0 + self.0 - b.0) % self.0)
    }

    pub fn neg(self, a: FieldScalar) -> FieldScalar {
        if a.0 == 0 {
            a
        } else {
            FieldScalar(self.0 - a.0)
        }
    }

    pub fn mul(self, a: FieldScalar, b: FieldScalar) -> FieldScalar {
        FieldScalar(((a.0 as u64 * b.0 as u64) % self.0 as u64) as u32)
    }

    pub fn pow(self, a: FieldScalar, mut e: u64) -> FieldScalar {
        let mut base = a;
        let mut acc = FieldScalar::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse by Fermat's little theorem.
    pub fn inv(self, a: FieldScalar) -> Result<FieldScalar> {
        if a.is_zero() {
            return Err(EngineError::Internal("inverse of zero".into()));
        }
        Ok(self.pow(a, self.0 as u64 - 2))
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// The base-p expansion of a nonnegative integer, least significant digit
/// first. Zero has the empty expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasePExpansion {
    pub digits: Vec<u32>,
    pub value: u64,
}

pub fn base_p_digits(n: u64, p: PrimeP) -> BasePExpansion {
    let mut digits = Vec::new();
    let mut rest = n;
    while rest > 0 {
        digits.push((rest % p.get() as u64) as u32);
        rest /= p.get() as u64;
    }
    BasePExpansion { digits, value: n }
}

/// Binomial of two digits `a, b < p`, reduced mod p. No factor of p can
/// divide numerator or denominator, so plain modular arithmetic is exact.
fn digit_binom(a: u32, b: u32, p: PrimeP) -> FieldScalar {
    if b > a {
        return FieldScalar::ZERO;
    }
    let mut num = FieldScalar::ONE;
    let mut den = FieldScalar::ONE;
    for i in 0..b {
        num = p.mul(num, FieldScalar((a - i) % p.get()));
        den = p.mul(den, FieldScalar((i + 1) % p.get()));
    }
    // den is a product of nonzero residues, hence invertible
    p.mul(num, p.inv(den).expect("digit factorial is a unit"))
}

/// `binom(n, m) mod p` by Lucas' theorem: expand both arguments in base p
/// and multiply the digitwise binomials. The convention `binom(n, m) = 0`
/// for `m > n` is applied up front.
pub fn binom_mod_p(n: u64, m: u64, p: PrimeP) -> FieldScalar {
    if m > n {
        return FieldScalar::ZERO;
    }
    let nd = base_p_digits(n, p).digits;
    let md = base_p_digits(m, p).digits;
    let mut acc = FieldScalar::ONE;
    for (i, &mi) in md.iter().enumerate() {
        let ni = nd.get(i).copied().unwrap_or(0);
        acc = p.mul(acc, digit_binom(ni, mi, p));
        if acc.is_zero() {
            return acc;
        }
    }
    acc
}

/// Multinomial coefficient `n! / (parts_0! parts_1! ...)` mod p, computed as
/// an iterated product of Lucas binomials. The parts must sum to `n`.
pub fn multinomial_mod_p(n: u64, parts: &[u64], p: PrimeP) -> Result<FieldScalar> {
    let sum: u64 = parts.iter().sum();
    if sum != n {
        return Err(EngineError::Schema(format!(
            "multinomial parts sum to {sum}, expected {n}"
        )));
    }
    let mut rest = n;
    let mut acc = FieldScalar::ONE;
    for &k in parts {
        acc = p.mul(acc, binom_mod_p(rest, k, p));
        rest -= k;
        if acc.is_zero() {
            return Ok(acc);
        }
    }
    Ok(acc)
}

/// `b_{t,m}`: the coefficient of `y^(t p^m)` in `(y^(p^m))^t`, i.e. the
/// multinomial of `t p^m` into `t` blocks of size `p^m`. For `t < p` this is
/// `t! mod p`; for `t = p - 1` it is `-1` by Wilson's theorem.
///
/// The block size `t * p^m` must fit in u64.
pub fn coeff_b(t: u64, m: u32, p: PrimeP) -> FieldScalar {
    let block = (p.get() as u64)
        .checked_pow(m)
        .and_then(|b| b.checked_mul(t).map(|_| b))
        .expect("t * p^m overflows u64");
    let parts = vec![block; t as usize];
    multinomial_mod_p(t * block, &parts, p).expect("blocks sum by construction")
}

/// `b_m := b_{p-1, m}`, always `-1 mod p`.
pub fn coeff_b_unit(m: u32, p: PrimeP) -> FieldScalar {
    coeff_b(p.get() as u64 - 1, m, p)
}

/// `c_n`: the coefficient of `y^(n)` in `y^(n_0) y^(n_1 p) ... y^(n_l p^l)`
/// where `n = [n_0 ... n_l]_p`. Always `1 mod p`.
pub fn coeff_c(n: u64, p: PrimeP) -> FieldScalar {
    let digits = base_p_digits(n, p).digits;
    let parts: Vec<u64> = digits
        .iter()
        .enumerate()
        .map(|(i, &d)| d as u64 * (p.get() as u64).pow(i as u32))
        .collect();
    multinomial_mod_p(n, &parts, p).expect("digits sum by construction")
}

/// The unit `d_i` used by the comparison map, with the convention `d_0 = 1`:
///
/// `d_i = c_{p^i - 1} * prod_{j=0}^{i-1} (b_j * c_{p^j - 1}^{p-1})^{p^{i-1-j}}`
///
/// `p^i` must fit in u64.
pub fn coeff_d(i: u32, p: PrimeP) -> FieldScalar {
    if i == 0 {
        return FieldScalar::ONE;
    }
    let pe = |e: u32| {
        (p.get() as u64)
            .checked_pow(e)
            .expect("p^i overflows u64")
    };
    let mut acc = coeff_c(pe(i) - 1, p);
    for j in 0..i {
        let base = p.mul(
            coeff_b_unit(j, p),
            p.pow(coeff_c(pe(j) - 1, p), p.get() as u64 - 1),
        );
        acc = p.mul(acc, p.pow(base, pe(i - 1 - j)));
    }
    acc
}
