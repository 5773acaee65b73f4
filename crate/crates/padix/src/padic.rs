//! Exact arithmetic on p-adic numbers at a fixed working precision.
//!
//! A nonzero value is stored as its valuation together with the unit part
//! reduced mod p^N, where N is the number of known unit digits. The digit
//! sequence d0, d1, ... of the unit part (little-endian, d0 != 0) is derived
//! from that residue on demand. Zero is a distinguished value with no
//! valuation.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;

use crate::error::{Error, Result};

/// Default number of unit digits carried by a context.
pub const DEFAULT_PRECISION: usize = 32;
/// No criterion in scope looks past the first four digits of a unit.
pub const MIN_PRECISION: usize = 4;

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    let powmod = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= n;
        while e > 0 {
            if e & 1 == 1 {
                acc = mulmod(acc, b);
            }
            b = mulmod(b, b);
            e >>= 1;
        }
        acc
    };
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// A prime together with the working precision (count of unit digits).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionContext {
    prime: u64,
    precision: usize,
}

impl PrecisionContext {
    pub fn new(prime: u64, precision: usize) -> Result<Self> {
        if !is_prime_u64(prime) {
            return Err(Error::NotPrime(prime));
        }
        if precision < MIN_PRECISION {
            return Err(Error::PrecisionTooLow {
                got: precision,
                min: MIN_PRECISION,
            });
        }
        Ok(Self { prime, precision })
    }

    pub fn with_default_precision(prime: u64) -> Result<Self> {
        Self::new(prime, DEFAULT_PRECISION)
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    /// p^k as a big integer.
    pub fn prime_pow(&self, k: usize) -> BigUint {
        BigUint::from(self.prime).pow(k as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Repr {
    Zero,
    Nonzero {
        valuation: i64,
        /// Unit part reduced mod p^precision; never divisible by p.
        unit: BigUint,
        /// Number of known unit digits.
        precision: usize,
    },
}

/// A p-adic number: valuation plus truncated canonical digit expansion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PadicNumber {
    prime: u64,
    repr: Repr,
}

fn vp_biguint(n: &BigUint, p: u64) -> (u64, BigUint) {
    debug_assert!(!n.is_zero());
    let p = BigUint::from(p);
    let mut v = 0u64;
    let mut m = n.clone();
    loop {
        let (q, r) = m.div_rem(&p);
        if r.is_zero() {
            v += 1;
            m = q;
        } else {
            return (v, m);
        }
    }
}

fn modinv(a: &BigUint, m: &BigUint) -> BigUint {
    // extended gcd on BigInt; a must be invertible mod m
    let a = BigInt::from(a.clone());
    let m = BigInt::from(m.clone());
    let e = a.extended_gcd(&m);
    debug_assert!(e.gcd.is_one());
    let x = e.x.mod_floor(&m);
    x.to_biguint().expect("non-negative after mod_floor")
}

impl PadicNumber {
    pub fn zero(prime: u64) -> Self {
        Self {
            prime,
            repr: Repr::Zero,
        }
    }

    pub fn one(ctx: &PrecisionContext) -> Self {
        Self {
            prime: ctx.prime(),
            repr: Repr::Nonzero {
                valuation: 0,
                unit: BigUint::one(),
                precision: ctx.precision(),
            },
        }
    }

    /// Builds a value from its parts. `unit` is reduced mod p^precision and
    /// must not be divisible by p.
    pub fn from_parts(prime: u64, valuation: i64, unit: BigUint, precision: usize) -> Result<Self> {
        if precision == 0 {
            return Err(Error::PrecisionTooLow { got: 0, min: 1 });
        }
        let modulus = BigUint::from(prime).pow(precision as u32);
        let unit = unit % &modulus;
        if (&unit % prime).is_zero() {
            return Err(Error::Domain(format!(
                "unit part {unit} is divisible by p={prime}"
            )));
        }
        Ok(Self {
            prime,
            repr: Repr::Nonzero {
                valuation,
                unit,
                precision,
            },
        })
    }

    /// Canonical expansion of n/d to the context's working precision.
    /// A zero numerator yields the zero value.
    pub fn from_rational(n: &BigInt, d: &BigInt, ctx: &PrecisionContext) -> Result<Self> {
        if d.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if n.is_zero() {
            return Ok(Self::zero(ctx.prime()));
        }
        let p = ctx.prime();
        let (vn, un) = vp_biguint(&n.abs().to_biguint().unwrap(), p);
        let (vd, ud) = vp_biguint(&d.abs().to_biguint().unwrap(), p);
        let modulus = ctx.prime_pow(ctx.precision());
        let mut unit = (un % &modulus) * modinv(&(ud % &modulus), &modulus) % &modulus;
        if n.is_negative() != d.is_negative() {
            unit = &modulus - unit;
        }
        Ok(Self {
            prime: p,
            repr: Repr::Nonzero {
                valuation: vn as i64 - vd as i64,
                unit,
                precision: ctx.precision(),
            },
        })
    }

    pub fn from_integer(n: i64, ctx: &PrecisionContext) -> Self {
        Self::from_rational(&BigInt::from(n), &BigInt::one(), ctx)
            .expect("integer canonicalization cannot fail")
    }

    pub fn prime(&self) -> u64 {
        self.prime
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.repr, Repr::Zero)
    }

    /// The valuation gamma(x); undefined (None) for zero.
    pub fn valuation(&self) -> Option<i64> {
        match &self.repr {
            Repr::Zero => None,
            Repr::Nonzero { valuation, .. } => Some(*valuation),
        }
    }

    /// Count of known unit digits; None for zero.
    pub fn precision(&self) -> Option<usize> {
        match &self.repr {
            Repr::Zero => None,
            Repr::Nonzero { precision, .. } => Some(*precision),
        }
    }

    /// Unit part reduced mod p^precision.
    pub fn unit(&self) -> Option<&BigUint> {
        match &self.repr {
            Repr::Zero => None,
            Repr::Nonzero { unit, .. } => Some(unit),
        }
    }

    /// Unit part mod p^k as a machine word. Requires k <= precision and
    /// p^k to fit in u64.
    pub fn unit_u64(&self, k: usize) -> Option<u64> {
        match &self.repr {
            Repr::Zero => None,
            Repr::Nonzero {
                unit, precision, ..
            } => {
                if k > *precision {
                    return None;
                }
                let m = BigUint::from(self.prime).pow(k as u32);
                (unit % m).to_u64()
            }
        }
    }

    /// Digit d_i of the unit part. Zero has all digits 0; indices at or
    /// beyond the known precision of a nonzero value are unknown (None).
    pub fn digit(&self, i: usize) -> Option<u64> {
        match &self.repr {
            Repr::Zero => Some(0),
            Repr::Nonzero {
                unit, precision, ..
            } => {
                if i >= *precision {
                    return None;
                }
                let p = BigUint::from(self.prime);
                ((unit / p.pow(i as u32)) % self.prime).to_u64()
            }
        }
    }

    /// All known unit digits, little-endian.
    pub fn digits(&self) -> Vec<u64> {
        match &self.repr {
            Repr::Zero => Vec::new(),
            Repr::Nonzero {
                unit, precision, ..
            } => {
                let mut ds = Vec::with_capacity(*precision);
                let mut u = unit.clone();
                let p = BigUint::from(self.prime);
                for _ in 0..*precision {
                    let (q, r) = u.div_rem(&p);
                    ds.push(r.to_u64().unwrap());
                    u = q;
                }
                ds
            }
        }
    }

    /// |x|_p = p^(-gamma) as an exact rational; 0 for zero.
    pub fn norm(&self) -> BigRational {
        match &self.repr {
            Repr::Zero => BigRational::zero(),
            Repr::Nonzero { valuation, .. } => {
                let p = BigInt::from(self.prime);
                if *valuation >= 0 {
                    BigRational::new(BigInt::one(), p.pow(*valuation as u32))
                } else {
                    BigRational::from_integer(p.pow((-valuation) as u32))
                }
            }
        }
    }

    fn check_same_prime(&self, other: &Self) -> Result<()> {
        if self.prime != other.prime {
            return Err(Error::PrimeMismatch(self.prime, other.prime));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same_prime(other)?;
        match (&self.repr, &other.repr) {
            (Repr::Zero, _) | (_, Repr::Zero) => Ok(Self::zero(self.prime)),
            (
                Repr::Nonzero {
                    valuation: va,
                    unit: ua,
                    precision: na,
                },
                Repr::Nonzero {
                    valuation: vb,
                    unit: ub,
                    precision: nb,
                },
            ) => {
                let n = (*na).min(*nb);
                let m = BigUint::from(self.prime).pow(n as u32);
                Ok(Self {
                    prime: self.prime,
                    repr: Repr::Nonzero {
                        valuation: va + vb,
                        unit: (ua % &m) * (ub % &m) % &m,
                        precision: n,
                    },
                })
            }
        }
    }

    pub fn inv(&self) -> Result<Self> {
        match &self.repr {
            Repr::Zero => Err(Error::DivisionByZero),
            Repr::Nonzero {
                valuation,
                unit,
                precision,
            } => {
                let m = BigUint::from(self.prime).pow(*precision as u32);
                Ok(Self {
                    prime: self.prime,
                    repr: Repr::Nonzero {
                        valuation: -valuation,
                        unit: modinv(unit, &m),
                        precision: *precision,
                    },
                })
            }
        }
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.inv()?)
    }

    pub fn neg(&self) -> Self {
        match &self.repr {
            Repr::Zero => self.clone(),
            Repr::Nonzero {
                valuation,
                unit,
                precision,
            } => {
                let m = BigUint::from(self.prime).pow(*precision as u32);
                Self {
                    prime: self.prime,
                    repr: Repr::Nonzero {
                        valuation: *valuation,
                        unit: &m - unit,
                        precision: *precision,
                    },
                }
            }
        }
    }

    /// Addition tracks precision loss under cancellation. A sum whose known
    /// digits all cancel is reported as precision-exhausted, never as zero.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_prime(other)?;
        match (&self.repr, &other.repr) {
            (Repr::Zero, _) => Ok(other.clone()),
            (_, Repr::Zero) => Ok(self.clone()),
            (
                Repr::Nonzero {
                    valuation: va,
                    unit: ua,
                    precision: na,
                },
                Repr::Nonzero {
                    valuation: vb,
                    unit: ub,
                    precision: nb,
                },
            ) => {
                // absolute precision: the sum is known mod p^min(va+na, vb+nb)
                let base = (*va).min(*vb);
                let abs = (va + *na as i64).min(vb + *nb as i64);
                let k = (abs - base) as usize;
                if k == 0 {
                    return Err(Error::PrecisionExhausted(0));
                }
                let m = BigUint::from(self.prime).pow(k as u32);
                let lift = |v: i64, u: &BigUint| -> BigUint {
                    let shift = (v - base) as u32;
                    if shift as usize >= k {
                        BigUint::zero()
                    } else {
                        u * BigUint::from(self.prime).pow(shift) % &m
                    }
                };
                let sum = (lift(*va, ua) + lift(*vb, ub)) % &m;
                if sum.is_zero() {
                    return Err(Error::PrecisionExhausted(k));
                }
                let (v, unit) = vp_biguint(&sum, self.prime);
                Ok(Self {
                    prime: self.prime,
                    repr: Repr::Nonzero {
                        valuation: base + v as i64,
                        unit,
                        precision: k - v as usize,
                    },
                })
            }
        }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// x^e by repeated squaring, e >= 0. 0^0 is a domain error.
    pub fn pow(&self, e: u64) -> Result<Self> {
        match &self.repr {
            Repr::Zero => {
                if e == 0 {
                    Err(Error::Domain("0^0 is undefined".into()))
                } else {
                    Ok(self.clone())
                }
            }
            Repr::Nonzero {
                valuation,
                unit,
                precision,
            } => {
                let m = BigUint::from(self.prime).pow(*precision as u32);
                Ok(Self {
                    prime: self.prime,
                    repr: Repr::Nonzero {
                        valuation: valuation
                            .checked_mul(e as i64)
                            .ok_or_else(|| Error::Domain("valuation overflow in pow".into()))?,
                        unit: unit.modpow(&BigUint::from(e), &m),
                        precision: *precision,
                    },
                })
            }
        }
    }

    /// Equality at precision M: same zero flag, same valuation, and digits
    /// agreeing for i < min(M, known precision of both sides).
    pub fn eq_at_precision(&self, other: &Self, m: usize) -> bool {
        if self.prime != other.prime {
            return false;
        }
        match (&self.repr, &other.repr) {
            (Repr::Zero, Repr::Zero) => true,
            (Repr::Zero, _) | (_, Repr::Zero) => false,
            (
                Repr::Nonzero {
                    valuation: va,
                    unit: ua,
                    precision: na,
                },
                Repr::Nonzero {
                    valuation: vb,
                    unit: ub,
                    precision: nb,
                },
            ) => {
                if va != vb {
                    return false;
                }
                let k = m.min(*na).min(*nb);
                let md = BigUint::from(self.prime).pow(k as u32);
                ua % &md == ub % &md
            }
        }
    }

    /// Compact serialization "gamma|d0,d1,...". Zero prints "0".
    pub fn compact(&self) -> String {
        match &self.repr {
            Repr::Zero => "0".to_string(),
            Repr::Nonzero { valuation, .. } => {
                let ds: Vec<String> = self.digits().iter().map(|d| d.to_string()).collect();
                format!("{}|{}", valuation, ds.join(","))
            }
        }
    }

    /// Expanded text form "p^gamma * (d0 + d1*p + d2*p^2 + ...)".
    pub fn expanded(&self) -> String {
        match &self.repr {
            Repr::Zero => "0".to_string(),
            Repr::Nonzero { valuation, .. } => {
                let p = self.prime;
                let mut terms = Vec::new();
                for (i, d) in self.digits().iter().enumerate() {
                    if *d == 0 {
                        continue;
                    }
                    terms.push(match i {
                        0 => format!("{d}"),
                        1 => format!("{d}*{p}"),
                        _ => format!("{d}*{p}^{i}"),
                    });
                }
                if terms.is_empty() {
                    terms.push("0".to_string());
                }
                format!("{}^{} * ({} + ...)", p, valuation, terms.join(" + "))
            }
        }
    }

    /// Parses "n/d" rationals, plain integers, or the compact form
    /// "gamma|d0,d1,...".
    pub fn parse(s: &str, ctx: &PrecisionContext) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(Self::zero(ctx.prime()));
        }
        if let Some((v, ds)) = s.split_once('|') {
            let valuation: i64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad valuation in {s:?}")))?;
            let p = ctx.prime();
            let mut unit = BigUint::zero();
            let mut count = 0usize;
            for (i, tok) in ds.split(',').enumerate() {
                let d: u64 = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad digit {tok:?}")))?;
                if d >= p {
                    return Err(Error::Parse(format!("digit {d} out of range for p={p}")));
                }
                unit += BigUint::from(d) * BigUint::from(p).pow(i as u32);
                count += 1;
            }
            if count == 0 || (&unit % p).is_zero() {
                return Err(Error::Parse(
                    "compact form needs d0 != 0 (canonical unit part)".into(),
                ));
            }
            return Self::from_parts(p, valuation, unit, count);
        }
        let (n, d) = match s.split_once('/') {
            Some((n, d)) => (n.trim(), d.trim()),
            None => (s, "1"),
        };
        let n: BigInt = n
            .parse()
            .map_err(|_| Error::Parse(format!("bad integer {n:?}")))?;
        let d: BigInt = d
            .parse()
            .map_err(|_| Error::Parse(format!("bad integer {d:?}")))?;
        Self::from_rational(&n, &d, ctx)
    }
}

impl fmt::Display for PadicNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.compact())
    }
}
