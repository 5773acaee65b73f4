//! Solvability of x^q = a over Q_p and digit-by-digit root extraction,
//! together with an independent brute-force oracle.
//!
//! Exponents are handled by regime: q = 2 (quadratic), gcd(q, p) = 1
//! (coprime), q = p (one lifting stage), q = mp, and the general q = m*p^s
//! reduction that iterates the p-th-root stage s times. Root extraction for
//! the p | q stages keeps a residue known mod p^k and extends it one digit at
//! a time, keeping a candidate digit d iff (x + d*p^k)^q' = a mod p^(k+2);
//! uniqueness of the surviving digit is an invariant of the lifting.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};
use std::collections::{BTreeSet, HashSet};

use crate::error::{Error, Result};
use crate::padic::PadicNumber;

/// Default cap on p^K for brute-force enumerations.
pub const DEFAULT_ORACLE_BUDGET: u128 = 10_000_000;

/// Which criterion produced a verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CriterionTag {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    GeneralMps,
    #[serde(rename = "proposition-fastpath")]
    PropositionFastPath,
    Oracle,
}

/// The specific condition that failed, for unsolvable inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "condition", rename_all = "kebab-case")]
pub enum FailureReason {
    ValuationDivisibility { divisor: u64, valuation: i64 },
    ResidueCondition { digit: u64, exponent: u64, prime: u64 },
    DigitCondition { congruence: String },
}

/// Verdict of a solvability check. `solvable` iff `root` is present;
/// `failure` is present iff not solvable.
#[derive(Debug, Clone)]
pub struct SolveVerdict {
    pub solvable: bool,
    pub root: Option<PadicNumber>,
    pub failure: Option<FailureReason>,
    pub criterion: CriterionTag,
}

impl SolveVerdict {
    fn solved(root: PadicNumber, criterion: CriterionTag) -> Self {
        Self {
            solvable: true,
            root: Some(root),
            failure: None,
            criterion,
        }
    }

    fn unsolvable(failure: FailureReason, criterion: CriterionTag) -> Self {
        Self {
            solvable: false,
            root: None,
            failure: Some(failure),
            criterion,
        }
    }

    /// Unit-digit precision of the returned root, if any.
    pub fn effective_precision(&self) -> Option<usize> {
        self.root.as_ref().and_then(|r| r.precision())
    }
}

impl Serialize for SolveVerdict {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("SolveVerdict", 5)?;
        st.serialize_field("solvable", &self.solvable)?;
        st.serialize_field("criterion_used", &self.criterion)?;
        if let Some(f) = &self.failure {
            st.serialize_field("failure_reason", f)?;
        }
        if let Some(r) = &self.root {
            st.serialize_field("root", &r.compact())?;
        }
        if let Some(n) = self.effective_precision() {
            st.serialize_field("effective_precision", &n)?;
        }
        st.end()
    }
}

/// q = m * p^s with gcd(m, p) = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExponentFactorization {
    pub m: u64,
    pub s: u32,
}

pub fn factor_exponent(q: u64, p: u64) -> ExponentFactorization {
    debug_assert!(q >= 1);
    let mut m = q;
    let mut s = 0;
    while m % p == 0 {
        m /= p;
        s += 1;
    }
    ExponentFactorization { m, s }
}

fn mulmod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn powmod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Square root mod an odd prime via Tonelli-Shanks. `a` must be a quadratic
/// residue; returns the root in [1, p).
fn tonelli_shanks(a: u64, p: u64) -> u64 {
    let a = a % p;
    debug_assert!(a != 0 && powmod(a, (p - 1) / 2, p) == 1);
    if p % 4 == 3 {
        return powmod(a, (p + 1) / 4, p);
    }
    // write p - 1 = q * 2^s with q odd
    let mut q = p - 1;
    let mut s = 0u32;
    while q % 2 == 0 {
        q /= 2;
        s += 1;
    }
    let mut z = 2;
    while powmod(z, (p - 1) / 2, p) != p - 1 {
        z += 1;
    }
    let mut m = s;
    let mut c = powmod(z, q, p);
    let mut t = powmod(a, q, p);
    let mut r = powmod(a, (q + 1) / 2, p);
    while t != 1 {
        let mut i = 0u32;
        let mut t2 = t;
        while t2 != 1 {
            t2 = mulmod(t2, t2, p);
            i += 1;
        }
        let b = powmod(c, 1 << (m - i - 1), p);
        m = i;
        c = mulmod(b, b, p);
        t = mulmod(t, c, p);
        r = mulmod(r, b, p);
    }
    r
}

fn modinv_big(a: &BigUint, m: &BigUint) -> BigUint {
    use num_bigint::BigInt;
    let e = BigInt::from(a.clone()).extended_gcd(&BigInt::from(m.clone()));
    debug_assert!(e.gcd.is_one());
    e.x.mod_floor(&BigInt::from(m.clone())).to_biguint().unwrap()
}

/// Newton lifting of a simple root: given x0 with x0^q = u mod p and
/// q*x0^(q-1) a unit (p does not divide q), returns x with x^q = u mod p^n.
fn lift_simple_root(u: &BigUint, q: u64, x0: u64, p: u64, n: usize) -> BigUint {
    let mut precs = vec![n];
    while *precs.last().unwrap() > 1 {
        let last = *precs.last().unwrap();
        precs.push(last.div_ceil(2));
    }
    precs.reverse();
    let mut x = BigUint::from(x0);
    for &k in &precs[1..] {
        let m = BigUint::from(p).pow(k as u32);
        let xq1 = x.modpow(&BigUint::from(q - 1), &m);
        let fx = (&xq1 * &x + (&m - u % &m)) % &m;
        let deriv = (BigUint::from(q) * &xq1) % &m;
        let corr = fx * modinv_big(&deriv, &m) % &m;
        x = ((&x % &m) + (&m - corr)) % &m;
    }
    debug_assert!(x.modpow(&BigUint::from(q), &BigUint::from(p).pow(n as u32)) == u % BigUint::from(p).pow(n as u32));
    x
}

/// Digit-at-a-time p-th root of a unit `u` known mod p^n, p odd, assuming the
/// Theorem-3 digit condition holds. Returns the unique root mod p^(n-1).
fn pth_root_unit_odd(u: &BigUint, p: u64, n: usize) -> BigUint {
    let a0 = (u % p).to_u64().unwrap();
    let mut x = BigUint::from(a0);
    for j in 1..=(n - 2) {
        let m = BigUint::from(p).pow((j + 2) as u32);
        let target = u % &m;
        let step = BigUint::from(p).pow(j as u32);
        let mut survivor = None;
        for d in 0..p {
            let cand = &x + BigUint::from(d) * &step;
            if cand.modpow(&BigUint::from(p), &m) == target {
                debug_assert!(survivor.is_none(), "digit lifting must be unique");
                survivor = Some(cand);
                if cfg!(not(debug_assertions)) {
                    break;
                }
            }
        }
        x = survivor.expect("digit lifting found no extension; Theorem-3 condition violated");
    }
    x
}

/// 2-adic square root of a unit u = 1 mod 8 known mod 2^n, n >= 3. Returns
/// the root congruent to 1 mod 4, known mod 2^(n-1).
fn sqrt_unit_2adic(u: &BigUint, n: usize) -> BigUint {
    debug_assert!((u % 8u32).to_u64().unwrap() == 1);
    let mut x = BigUint::one(); // known mod 4: the branch fixed to 1 mod 4
    for j in 2..=(n - 2) {
        let m = BigUint::from(2u64).pow((j + 2) as u32);
        let target = u % &m;
        let cand = &x + BigUint::from(2u64).pow(j as u32);
        let keep_zero = x.modpow(&BigUint::from(2u64), &m) == target;
        let keep_one = cand.modpow(&BigUint::from(2u64), &m) == target;
        debug_assert!(keep_zero != keep_one, "exactly one digit must survive");
        if keep_one {
            x = cand;
        }
        let _ = keep_zero;
    }
    x
}

// Condition (ii) of the q = p criterion: a0^p = a0 + a1*p mod p^2.
fn pth_digit_condition(a0: u64, a1: u64, p: u64) -> bool {
    let p2 = p * p;
    powmod(a0, p, p2) == (a0 + a1 * p) % p2
}

/// One p-th-root stage: checks p | gamma plus the digit condition and
/// extracts the unique (canonical, for p = 2) root. Costs one digit of
/// precision.
fn pth_root_stage(a: &PadicNumber) -> Result<std::result::Result<PadicNumber, FailureReason>> {
    let p = a.prime();
    let gamma = a.valuation().ok_or(Error::ZeroInput)?;
    let n = a.precision().unwrap();
    if gamma % p as i64 != 0 {
        return Ok(Err(FailureReason::ValuationDivisibility {
            divisor: p,
            valuation: gamma,
        }));
    }
    if p == 2 {
        if n < 3 {
            return Err(Error::PrecisionTooLow { got: n, min: 3 });
        }
        let (a1, a2) = (a.digit(1).unwrap(), a.digit(2).unwrap());
        if a1 != 0 || a2 != 0 {
            return Ok(Err(FailureReason::DigitCondition {
                congruence: format!("a1 = a2 = 0 required, got a1={a1}, a2={a2}"),
            }));
        }
        let root = sqrt_unit_2adic(a.unit().unwrap(), n);
        return Ok(Ok(PadicNumber::from_parts(2, gamma / 2, root, n - 1)?));
    }
    if n < 2 {
        return Err(Error::PrecisionTooLow { got: n, min: 2 });
    }
    let (a0, a1) = (a.digit(0).unwrap(), a.digit(1).unwrap());
    if !pth_digit_condition(a0, a1, p) {
        return Ok(Err(FailureReason::DigitCondition {
            congruence: format!("a0^p = a0 + a1*p (mod p^2) failed for a0={a0}, a1={a1}, p={p}"),
        }));
    }
    if n < 3 {
        return Err(Error::PrecisionTooLow { got: n, min: 3 });
    }
    let root = pth_root_unit_odd(a.unit().unwrap(), p, n);
    Ok(Ok(PadicNumber::from_parts(
        p,
        gamma / p as i64,
        root,
        n - 1,
    )?))
}

/// m-residue test for a unit digit a0 mod an odd prime p:
/// a0^((p-1)/gcd(m, p-1)) = 1 mod p.
pub fn is_power_residue(a0: u64, m: u64, p: u64) -> bool {
    if p == 2 {
        return true;
    }
    let g = m.gcd(&(p - 1));
    powmod(a0, (p - 1) / g, p) == 1
}

/// Coprime-exponent root stage (m >= 1, gcd(m, p) = 1): checks m | gamma
/// and the m-residue condition, then Hensel-lifts. Preserves precision.
fn coprime_root_stage(
    a: &PadicNumber,
    m: u64,
) -> Result<std::result::Result<PadicNumber, FailureReason>> {
    let p = a.prime();
    let gamma = a.valuation().ok_or(Error::ZeroInput)?;
    let n = a.precision().unwrap();
    if m == 1 {
        return Ok(Ok(a.clone()));
    }
    if gamma % m as i64 != 0 {
        return Ok(Err(FailureReason::ValuationDivisibility {
            divisor: m,
            valuation: gamma,
        }));
    }
    let a0 = a.digit(0).unwrap();
    if p == 2 {
        // every unit is an m-th power for odd m
        let root = lift_simple_root(a.unit().unwrap(), m, 1, 2, n);
        return Ok(Ok(PadicNumber::from_parts(2, gamma / m as i64, root, n)?));
    }
    if !is_power_residue(a0, m, p) {
        return Ok(Err(FailureReason::ResidueCondition {
            digit: a0,
            exponent: m,
            prime: p,
        }));
    }
    let x0 = if m == 2 {
        tonelli_shanks(a0, p)
    } else {
        (1..p)
            .find(|&x| powmod(x, m, p) == a0)
            .expect("residue condition guarantees a root mod p")
    };
    let root = lift_simple_root(a.unit().unwrap(), m, x0, p, n);
    Ok(Ok(PadicNumber::from_parts(p, gamma / m as i64, root, n)?))
}

/// Decides x^2 = a. For odd p: gamma even and a0 a quadratic residue.
/// For p = 2: gamma even and a1 = a2 = 0.
pub fn is_square(a: &PadicNumber) -> Result<SolveVerdict> {
    let p = a.prime();
    let gamma = a.valuation().ok_or(Error::ZeroInput)?;
    if gamma % 2 != 0 {
        return Ok(SolveVerdict::unsolvable(
            FailureReason::ValuationDivisibility {
                divisor: 2,
                valuation: gamma,
            },
            CriterionTag::Thm1,
        ));
    }
    if p == 2 {
        let n = a.precision().unwrap();
        if n < 3 {
            return Err(Error::PrecisionTooLow { got: n, min: 3 });
        }
        let (a1, a2) = (a.digit(1).unwrap(), a.digit(2).unwrap());
        if a1 != 0 || a2 != 0 {
            return Ok(SolveVerdict::unsolvable(
                FailureReason::DigitCondition {
                    congruence: format!("a1 = a2 = 0 required, got a1={a1}, a2={a2}"),
                },
                CriterionTag::Thm1,
            ));
        }
        let root = sqrt_unit_2adic(a.unit().unwrap(), n);
        return Ok(SolveVerdict::solved(
            PadicNumber::from_parts(2, gamma / 2, root, n - 1)?,
            CriterionTag::Thm1,
        ));
    }
    let a0 = a.digit(0).unwrap();
    if !is_power_residue(a0, 2, p) {
        return Ok(SolveVerdict::unsolvable(
            FailureReason::ResidueCondition {
                digit: a0,
                exponent: 2,
                prime: p,
            },
            CriterionTag::Thm1,
        ));
    }
    let n = a.precision().unwrap();
    let x0 = tonelli_shanks(a0, p);
    let root = lift_simple_root(a.unit().unwrap(), 2, x0, p, n);
    Ok(SolveVerdict::solved(
        PadicNumber::from_parts(p, gamma / 2, root, n)?,
        CriterionTag::Thm1,
    ))
}

/// Decides x^q = a for q > 2 coprime to p (Theorem-2 regime).
pub fn solve_coprime(a: &PadicNumber, q: u64) -> Result<SolveVerdict> {
    let p = a.prime();
    if q <= 2 || q % p == 0 {
        return Err(Error::Domain(format!(
            "solve_coprime requires q > 2 with gcd(q, p) = 1; got q={q}, p={p}"
        )));
    }
    if a.is_zero() {
        return Err(Error::ZeroInput);
    }
    Ok(match coprime_root_stage(a, q)? {
        Ok(root) => SolveVerdict::solved(root, CriterionTag::Thm2),
        Err(f) => SolveVerdict::unsolvable(f, CriterionTag::Thm2),
    })
}

/// Decides x^p = a (Theorem-3 regime; for p = 2 this is the quadratic case).
pub fn solve_p(a: &PadicNumber) -> Result<SolveVerdict> {
    if a.is_zero() {
        return Err(Error::ZeroInput);
    }
    if a.prime() == 2 {
        return is_square(a);
    }
    Ok(match pth_root_stage(a)? {
        Ok(root) => SolveVerdict::solved(root, CriterionTag::Thm3),
        Err(f) => SolveVerdict::unsolvable(f, CriterionTag::Thm3),
    })
}

/// Decides x^(mp) = a with gcd(m, p) = 1 (Theorem-4 regime), chaining the
/// p-th-root stage with the coprime stage.
pub fn solve_mp(a: &PadicNumber, m: u64) -> Result<SolveVerdict> {
    let p = a.prime();
    if m % p == 0 {
        return Err(Error::Domain(format!(
            "solve_mp requires gcd(m, p) = 1; got m={m}, p={p}"
        )));
    }
    if m == 1 {
        return solve_p(a);
    }
    let gamma = a.valuation().ok_or(Error::ZeroInput)?;
    let q = m
        .checked_mul(p)
        .ok_or_else(|| Error::Domain("exponent overflow".into()))?;
    if gamma % q as i64 != 0 {
        return Ok(SolveVerdict::unsolvable(
            FailureReason::ValuationDivisibility {
                divisor: q,
                valuation: gamma,
            },
            CriterionTag::Thm4,
        ));
    }
    let y = match pth_root_stage(a)? {
        Ok(y) => y,
        Err(f) => return Ok(SolveVerdict::unsolvable(f, CriterionTag::Thm4)),
    };
    Ok(match coprime_root_stage(&y, m)? {
        Ok(root) => SolveVerdict::solved(root, CriterionTag::Thm4),
        Err(f) => SolveVerdict::unsolvable(f, CriterionTag::Thm4),
    })
}

/// Decides x^q = a for any q >= 1, dispatching on q = m * p^s.
/// For s >= 2 the p-th-root stage is iterated s times; each stage costs one
/// digit of absolute precision, so the root is reported to precision N - s.
pub fn solve(a: &PadicNumber, q: u64) -> Result<SolveVerdict> {
    if q == 0 {
        return Err(Error::Domain("exponent must be positive".into()));
    }
    if a.is_zero() {
        return Err(Error::ZeroInput);
    }
    let p = a.prime();
    if q == 1 {
        return Ok(SolveVerdict::solved(a.clone(), CriterionTag::GeneralMps));
    }
    if q == 2 {
        return is_square(a);
    }
    let ExponentFactorization { m, s } = factor_exponent(q, p);
    match s {
        0 => solve_coprime(a, q),
        1 => solve_mp(a, m),
        _ => {
            let n = a.precision().unwrap();
            if n <= s as usize + 2 {
                return Err(Error::PrecisionTooLow {
                    got: n,
                    min: s as usize + 3,
                });
            }
            let gamma = a.valuation().unwrap();
            if gamma % q as i64 != 0 {
                return Ok(SolveVerdict::unsolvable(
                    FailureReason::ValuationDivisibility {
                        divisor: q,
                        valuation: gamma,
                    },
                    CriterionTag::GeneralMps,
                ));
            }
            let mut y = match coprime_root_stage(a, m)? {
                Ok(y) => y,
                Err(f) => return Ok(SolveVerdict::unsolvable(f, CriterionTag::GeneralMps)),
            };
            for _ in 0..s {
                y = match pth_root_stage(&y)? {
                    Ok(next) => next,
                    Err(f) => return Ok(SolveVerdict::unsolvable(f, CriterionTag::GeneralMps)),
                };
            }
            Ok(SolveVerdict::solved(y, CriterionTag::GeneralMps))
        }
    }
}

/// Closed-form fast-path verdict from one part of the five-case proposition.
/// No root is constructed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FastVerdict {
    /// Which closed-form case applied (1 through 5).
    pub part: u8,
    pub solvable: bool,
    pub failure: Option<FailureReason>,
}

/// Evaluates the closed-form digit conditions for (q, p) pairs covered by the
/// five-part proposition; `None` when no fast path matches. The conditions
/// are evaluated exactly as printed; where they disagree with the oracle the
/// conformance report records it.
pub fn fast_criterion(a: &PadicNumber, q: u64) -> Result<Option<FastVerdict>> {
    let p = a.prime();
    let gamma = a.valuation().ok_or(Error::ZeroInput)?;
    let n = a.precision().unwrap();
    let dig = |i: usize| a.digit(i);

    let val_fail = |part: u8| {
        Some(FastVerdict {
            part,
            solvable: false,
            failure: Some(FailureReason::ValuationDivisibility {
                divisor: q,
                valuation: gamma,
            }),
        })
    };
    let digit_fail = |part: u8, congruence: String| {
        Some(FastVerdict {
            part,
            solvable: false,
            failure: Some(FailureReason::DigitCondition { congruence }),
        })
    };
    let ok = |part: u8| {
        Some(FastVerdict {
            part,
            solvable: true,
            failure: None,
        })
    };

    // part 1: q = 6 over Q_2: 6 | gamma and a1 = 0
    if p == 2 && q == 6 {
        if gamma % 6 != 0 {
            return Ok(val_fail(1));
        }
        let a1 = dig(1).ok_or(Error::PrecisionTooLow { got: n, min: 2 })?;
        return Ok(if a1 == 0 {
            ok(1)
        } else {
            digit_fail(1, format!("a1 = 0 required, got {a1}"))
        });
    }
    // part 2: q = (p-1)p, p >= 3: a0 = 1 and a1 = 0
    if p >= 3 && q == (p - 1) * p {
        if gamma % q as i64 != 0 {
            return Ok(val_fail(2));
        }
        let (a0, a1) = (dig(0).unwrap(), dig(1).unwrap());
        return Ok(if a0 == 1 && a1 == 0 {
            ok(2)
        } else {
            digit_fail(2, format!("a0 = 1 and a1 = 0 required, got a0={a0}, a1={a1}"))
        });
    }
    // part 5: q = 2^k over Q_2: a1 = ... = a_(k+1) = 0
    if p == 2 && q.is_power_of_two() {
        let k = q.trailing_zeros() as usize;
        if gamma % q as i64 != 0 {
            return Ok(val_fail(5));
        }
        if n < k + 2 {
            return Err(Error::PrecisionTooLow { got: n, min: k + 2 });
        }
        for i in 1..=(k + 1) {
            let ai = dig(i).unwrap();
            if ai != 0 {
                return Ok(digit_fail(
                    5,
                    format!("a1 = ... = a{} = 0 required, a{i} = {ai}", k + 1),
                ));
            }
        }
        return Ok(ok(5));
    }
    // part 3: q = p^2
    if q == p * p {
        if gamma % q as i64 != 0 {
            return Ok(val_fail(3));
        }
        let (a0, a1, a2) = (dig(0).unwrap(), dig(1).unwrap(), dig(2).unwrap());
        if !pth_digit_condition(a0, a1, p) {
            return Ok(digit_fail(
                3,
                format!("a0^p = a0 + a1*p (mod p^2) failed for a0={a0}, a1={a1}"),
            ));
        }
        return Ok(if a1 == a2 {
            ok(3)
        } else {
            digit_fail(3, format!("a1 = a2 required, got a1={a1}, a2={a2}"))
        });
    }
    // part 4: q = p^3, p odd (the (p-1)/2 coefficient needs p odd)
    if p >= 3 && q == p * p * p {
        if gamma % q as i64 != 0 {
            return Ok(val_fail(4));
        }
        let (a0, a1, a2, a3) = (
            dig(0).unwrap(),
            dig(1).unwrap(),
            dig(2).unwrap(),
            dig(3).unwrap(),
        );
        if !pth_digit_condition(a0, a1, p) {
            return Ok(digit_fail(
                4,
                format!("a0^p = a0 + a1*p (mod p^2) failed for a0={a0}, a1={a1}"),
            ));
        }
        if a1 != a2 {
            return Ok(digit_fail(
                4,
                format!("a1 = a2 required, got a1={a1}, a2={a2}"),
            ));
        }
        // a1 = a3 - ((p-1)/2) a0^(p-2) a1^2 mod p
        let c = (p - 1) / 2 % p;
        let rhs = (a3 % p + p - mulmod(c, mulmod(powmod(a0, p - 2, p), mulmod(a1, a1, p), p), p) % p) % p;
        return Ok(if a1 % p == rhs {
            ok(4)
        } else {
            digit_fail(
                4,
                format!("a1 = a3 - ((p-1)/2) a0^(p-2) a1^2 (mod p) failed for a0={a0}, a1={a1}, a3={a3}"),
            )
        });
    }
    Ok(None)
}

/// Result of an exhaustive residue enumeration.
#[derive(Debug, Clone)]
pub struct BruteForceRoots {
    /// All unit residues u mod p^K with u^q = unit(a) mod p^K.
    pub residues: BTreeSet<u64>,
    /// Whether q divides gamma(a).
    pub valuation_divisible: bool,
    pub depth: usize,
}

fn checked_prime_pow(p: u64, k: usize, budget: u128) -> Result<u64> {
    let mut acc: u128 = 1;
    for _ in 0..k {
        acc = acc.checked_mul(p as u128).ok_or(Error::BudgetExceeded {
            needed: u128::MAX,
            limit: budget,
        })?;
        if acc > budget {
            return Err(Error::BudgetExceeded {
                needed: acc,
                limit: budget,
            });
        }
    }
    Ok(acc as u64)
}

/// Exhaustively enumerates the q-th roots of unit(a) mod p^K. This is the
/// ground-truth oracle every criterion is validated against.
pub fn brute_force_root(
    a: &PadicNumber,
    q: u64,
    depth: usize,
    budget: Option<u128>,
) -> Result<BruteForceRoots> {
    let gamma = a.valuation().ok_or(Error::ZeroInput)?;
    let p = a.prime();
    let budget = budget.unwrap_or(DEFAULT_ORACLE_BUDGET);
    let modulus = checked_prime_pow(p, depth, budget)?;
    let target = a
        .unit_u64(depth.min(a.precision().unwrap()))
        .expect("nonzero value has a unit");
    let target = target % modulus;
    let mut residues = BTreeSet::new();
    for u in 1..modulus {
        if u % p == 0 {
            continue;
        }
        if powmod(u, q, modulus) == target % modulus {
            residues.insert(u);
        }
    }
    Ok(BruteForceRoots {
        residues,
        valuation_divisible: gamma % q as i64 == 0,
        depth,
    })
}

/// Depth at which a root set is exact evidence of solvability for a unit
/// known exactly to that depth: one past twice the valuation of q.
pub fn stabilization_depth(p: u64, q: u64) -> usize {
    2 * factor_exponent(q, p).s as usize + 1
}

/// Stabilized brute-force verdict: a residue passing at depth K must still
/// pass at depth K + 1 before the input is called solvable.
pub fn oracle_verdict(a: &PadicNumber, q: u64, budget: Option<u128>) -> Result<bool> {
    let p = a.prime();
    let k = stabilization_depth(p, q);
    let shallow = brute_force_root(a, q, k, budget)?;
    if !shallow.valuation_divisible {
        return Ok(false);
    }
    let deep = brute_force_root(a, q, k + 1, budget)?;
    let pk = checked_prime_pow(p, k, budget.unwrap_or(DEFAULT_ORACLE_BUDGET))?;
    Ok(deep
        .residues
        .iter()
        .any(|r| shallow.residues.contains(&(r % pk))))
}

/// Residues at depth K that still pass at depth K + 1. Mod-p^K ghost roots
/// (roots of the congruence that do not lift) are filtered out; for a
/// solvable q = p input this set is a singleton.
pub fn stabilized_residues(
    a: &PadicNumber,
    q: u64,
    depth: usize,
    budget: Option<u128>,
) -> Result<BTreeSet<u64>> {
    let p = a.prime();
    let shallow = brute_force_root(a, q, depth, budget)?;
    let deep = brute_force_root(a, q, depth + 1, budget)?;
    let pk = checked_prime_pow(p, depth, budget.unwrap_or(DEFAULT_ORACLE_BUDGET))?;
    Ok(deep
        .residues
        .iter()
        .map(|r| r % pk)
        .filter(|r| shallow.residues.contains(r))
        .collect())
}

/// The set of q-th powers of units mod p^K. One pass over all units; sweeps
/// test membership instead of re-enumerating per input.
pub fn unit_power_residues(p: u64, q: u64, depth: usize, budget: Option<u128>) -> Result<HashSet<u64>> {
    let budget = budget.unwrap_or(DEFAULT_ORACLE_BUDGET);
    let modulus = checked_prime_pow(p, depth, budget)?;
    let mut set = HashSet::new();
    for u in 1..modulus {
        if u % p == 0 {
            continue;
        }
        set.insert(powmod(u, q, modulus));
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrecisionContext;
    use num_bigint::BigInt;

    fn ctx(p: u64, n: usize) -> PrecisionContext {
        PrecisionContext::new(p, n).unwrap()
    }

    fn int(n: i64, c: &PrecisionContext) -> PadicNumber {
        PadicNumber::from_integer(n, c)
    }

    #[test]
    fn square_of_two_in_q7() {
        let c = ctx(7, 8);
        let v = is_square(&int(2, &c)).unwrap();
        assert!(v.solvable);
        let r0 = v.root.as_ref().unwrap().digit(0).unwrap();
        assert!(r0 == 3 || r0 == 4);
        let sq = v.root.unwrap().pow(2).unwrap();
        assert!(sq.eq_at_precision(&int(2, &c), 8));
    }

    #[test]
    fn square_of_17_in_q2() {
        let c = ctx(2, 8);
        let v = is_square(&int(17, &c)).unwrap();
        assert!(v.solvable);
        let root = v.root.unwrap();
        assert_eq!(root.unit_u64(2).unwrap(), 1); // canonical branch: 1 mod 4
        assert_eq!(root.unit_u64(6).unwrap(), 41); // 41^2 = 1681 = 17 mod 128
        assert!(root.pow(2).unwrap().eq_at_precision(&int(17, &c), 7));
    }

    #[test]
    fn odd_valuation_is_unsolvable() {
        let c = ctx(5, 6);
        let v = is_square(&int(5, &c)).unwrap();
        assert!(!v.solvable);
        assert!(matches!(
            v.failure,
            Some(FailureReason::ValuationDivisibility { divisor: 2, .. })
        ));
    }

    #[test]
    fn cube_examples_coprime() {
        let c7 = ctx(7, 8);
        let v = solve_coprime(&int(2, &c7), 3).unwrap();
        assert!(!v.solvable); // cubic residues mod 7 are {1, 6}
        assert!(matches!(
            v.failure,
            Some(FailureReason::ResidueCondition { exponent: 3, .. })
        ));

        let c5 = ctx(5, 8);
        let v = solve_coprime(&int(2, &c5), 3).unwrap();
        assert!(v.solvable); // gcd(3, 4) = 1: every unit is a cube
        assert!(v
            .root
            .unwrap()
            .pow(3)
            .unwrap()
            .eq_at_precision(&int(2, &c5), 8));

        // exact power with valuation: a = p^q
        let v = solve_coprime(&int(343, &c7.clone()), 3).unwrap();
        assert!(v.solvable);
        assert_eq!(v.root.as_ref().unwrap().valuation(), Some(1));
        assert_eq!(v.root.unwrap().digit(0), Some(1));
    }

    #[test]
    fn theorem3_examples() {
        let c = ctx(3, 8);
        let v = solve_p(&int(8, &c)).unwrap();
        assert!(v.solvable);
        let root = v.root.unwrap();
        assert!(root.eq_at_precision(&int(2, &c), 7));

        let v = solve_p(&int(2, &c)).unwrap();
        assert!(!v.solvable);

        let v = solve_p(&int(1, &c)).unwrap();
        assert!(v.solvable);
        assert!(v.root.unwrap().eq_at_precision(&int(1, &c), 7));

        // 4/5 in Q_3: root = 23 mod 27, digits [2, 1, 2]
        let a = PadicNumber::from_rational(&BigInt::from(4), &BigInt::from(5), &c).unwrap();
        let v = solve_p(&a).unwrap();
        assert!(v.solvable);
        let root = v.root.unwrap();
        assert_eq!(root.digits()[..3], [2, 1, 2]);
    }

    #[test]
    fn theorem4_examples() {
        let c = ctx(2, 10);
        let v = solve_mp(&int(3, &c), 3).unwrap(); // q = 6
        assert!(!v.solvable);

        let v = solve_mp(&int(729, &c), 3).unwrap(); // 3^6
        assert!(v.solvable);
        let root = v.root.unwrap();
        assert!(root.pow(6).unwrap().eq_at_precision(&int(729, &c), 8));
        // the canonical 1-mod-4 square-root branch lands on -3 here
        assert!(root.eq_at_precision(&int(-3, &c), 6) || root.eq_at_precision(&int(3, &c), 6));

        let v = solve_mp(&int(1, &c), 3).unwrap();
        assert!(v.solvable);
    }

    #[test]
    fn general_dispatch() {
        let c5 = ctx(5, 8);
        let v = solve(&int(16, &c5), 4).unwrap();
        assert!(v.solvable);
        // 16 has four 4th roots in Q_5 (5 = 1 mod 4); the returned one powers back
        assert!(v
            .root
            .unwrap()
            .pow(4)
            .unwrap()
            .eq_at_precision(&int(16, &c5), 8));

        // q = p^2 with a1 != a2 is unsolvable
        let c3 = ctx(3, 8);
        let a = int(1 + 2 * 3, &c3); // digits [1,2,0,...]: condition (ii) fails already
        assert!(!solve(&a, 9).unwrap().solvable);
        let b = int(1 + 9, &c3); // digits [1,0,1]: (ii) holds (a1=0), a1 != a2
        assert!(!solve(&b, 9).unwrap().solvable);

        // q = 2^k over Q_2 with a1 = ... = a_{k+1} = 0 and 2^k | gamma
        let c2 = ctx(2, 12);
        let a = int(1 + 32, &c2); // 33: a1..a4 = 0
        let v = solve(&a, 8).unwrap();
        assert!(v.solvable);
        assert!(v
            .root
            .unwrap()
            .pow(8)
            .unwrap()
            .eq_at_precision(&a, 12 - 3 - 1));
        assert!(!solve(&int(1 + 16, &c2), 8).unwrap().solvable); // a4 = 1
    }

    #[test]
    fn solve_q1_and_q2() {
        let c = ctx(3, 6);
        let v = solve(&int(7, &c), 1).unwrap();
        assert!(v.solvable);
        assert!(v.root.unwrap().eq_at_precision(&int(7, &c), 6));
        assert_eq!(solve(&int(7, &c), 2).unwrap().criterion, CriterionTag::Thm1);
    }

    #[test]
    fn fast_criterion_examples() {
        let c2 = ctx(2, 8);
        let v = fast_criterion(&int(3, &c2), 6).unwrap().unwrap();
        assert_eq!(v.part, 1);
        assert!(!v.solvable);

        let c5 = ctx(5, 8);
        let v = fast_criterion(&int(1, &c5), 20).unwrap().unwrap(); // (p-1)p = 20
        assert_eq!(v.part, 2);
        assert!(v.solvable);

        let v = fast_criterion(&int(126, &c5), 125).unwrap().unwrap(); // 126 = [1,0,0,1]
        assert_eq!(v.part, 4);
        assert!(!v.solvable); // a1=a2=0 but a1 != a3 - 2*a0^3*a1^2 = 1

        // p = 2, q = 4 dispatches to part 5, not part 3
        let v = fast_criterion(&int(9, &c2), 4).unwrap().unwrap();
        assert_eq!(v.part, 5);
        assert!(!v.solvable); // 9 = 1 mod 8 but not 1 mod 16

        assert!(fast_criterion(&int(2, &ctx(7, 8)), 10).unwrap().is_none());
    }

    #[test]
    fn brute_force_examples() {
        let c3 = ctx(3, 8);
        // raw roots of x^3 = 8 mod 27 include the two non-lifting ghosts
        let r = brute_force_root(&int(8, &c3), 3, 3, None).unwrap();
        assert_eq!(
            r.residues.iter().copied().collect::<Vec<_>>(),
            vec![2, 11, 20]
        );
        // stabilizing against depth 4 leaves only the true root 2 mod 27
        let stable = stabilized_residues(&int(8, &c3), 3, 3, None).unwrap();
        assert_eq!(stable.iter().copied().collect::<Vec<_>>(), vec![2]);

        let c7 = ctx(7, 8);
        let r = brute_force_root(&int(2, &c7), 2, 2, None).unwrap();
        assert_eq!(r.residues.iter().copied().collect::<Vec<_>>(), vec![10, 39]);

        let c2 = ctx(2, 8);
        let r = brute_force_root(&int(1, &c2), 2, 4, None).unwrap();
        assert_eq!(
            r.residues.iter().copied().collect::<Vec<_>>(),
            vec![1, 7, 9, 15]
        );
    }

    #[test]
    fn oracle_stabilization_kills_ghost_roots() {
        // 7^2 = 49 = 1 mod 16, so 7 is a depth-4 root of 1, but it does not
        // extend to depth 5; the stabilized verdict keeps only residues that
        // lift. 1 stays solvable, 5 (= 5 mod 8) is rejected.
        let c2 = ctx(2, 8);
        let shallow = brute_force_root(&int(1, &c2), 2, 4, None).unwrap();
        assert!(shallow.residues.contains(&7));
        let deep = brute_force_root(&int(1, &c2), 2, 5, None).unwrap();
        assert!(deep.residues.iter().all(|r| r % 16 != 7));
        assert!(oracle_verdict(&int(1, &c2), 2, None).unwrap());
        assert!(!oracle_verdict(&int(5, &c2), 2, None).unwrap());
        assert!(oracle_verdict(&int(17, &c2), 2, None).unwrap());
    }

    #[test]
    fn oracle_verdict_matches_criteria_smoke() {
        let c = ctx(5, 8);
        for a in [1i64, 2, 3, 4, 6, 7, 11, 26, 57] {
            let x = int(a, &c);
            assert_eq!(
                oracle_verdict(&x, 5, None).unwrap(),
                solve_p(&x).unwrap().solvable,
                "a = {a}"
            );
        }
    }

    #[test]
    fn budget_is_enforced() {
        let c = ctx(13, 8);
        match brute_force_root(&int(2, &c), 2, 9, Some(1_000_000)) {
            Err(Error::BudgetExceeded { .. }) => {}
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn verdict_serialization_schema() {
        let c = ctx(3, 6);
        let v = solve_p(&int(8, &c)).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["solvable"], true);
        assert_eq!(json["criterion_used"], "thm3");
        assert!(json["root"].is_string());
        assert!(json["effective_precision"].is_number());
        let v = solve_p(&int(2, &c)).unwrap();
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["failure_reason"]["condition"], "digit-condition");
    }
}
