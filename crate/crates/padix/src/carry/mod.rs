//! Carry polynomials of the p-th power map and the digit recursion built on
//! them: enumerate the summands of N_k, assemble the polynomial, run the
//! digit recursion for x^(p^m) = a, and emit solvability criteria.
//!
//! N_k is the degree-k carry of (x_0 + x_1 p + ...)^p excluding the linear
//! term p*x_0^(p-1)*x_k and the pure powers x_j^p: exactly the exponent
//! tuples (l_0, ..., l_{k-1}) with sum(l_j) = p, sum(j*l_j) = k and every
//! l_j < p, each with its multinomial coefficient. Excluding the pure powers
//! (which surface at positions divisible by p and belong to the recursion's
//! correction terms, not to N_k) is what makes every coefficient divisible
//! by p; the division by p happens at use sites.

pub mod criteria;
mod expr;

pub use criteria::{emit_criterion, Congruence, Criterion, PrimeParam};
pub use expr::{DigitExpr, ExpLin, Monomial, PPoly};

use num_bigint::BigUint;
use serde::Serialize;
use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::roots::powmod;

/// Exponent tuple (l_0, ..., l_{k-1}) of one summand of N_k.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ExponentTuple {
    pub exponents: Vec<u64>,
}

/// All exponent tuples of N_k for concrete p: sum l_j = p, sum j*l_j = k,
/// every l_j < p. Empty for k < 2 (N_0 and N_1 vanish).
pub fn summand_list(p: u64, k: usize) -> BTreeSet<ExponentTuple> {
    let mut out = BTreeSet::new();
    if k < 2 {
        return out;
    }
    // choose multiplicities for part sizes j = k-1 down to 1, each < p
    fn rec(
        j: usize,
        remaining: usize,
        used: u64,
        p: u64,
        acc: &mut Vec<(usize, u64)>,
        out: &mut BTreeSet<ExponentTuple>,
        k: usize,
    ) {
        if remaining == 0 {
            let s: u64 = acc.iter().map(|&(_, l)| l).sum();
            if s >= 1 && s <= p {
                let mut exps = vec![0u64; k];
                exps[0] = p - s;
                for &(idx, l) in acc.iter() {
                    exps[idx] = l;
                }
                out.insert(ExponentTuple { exponents: exps });
            }
            return;
        }
        if j == 0 {
            return;
        }
        let max_l = ((remaining / j) as u64).min(p - 1);
        for l in 0..=max_l.min(p.saturating_sub(used)) {
            if l > 0 {
                acc.push((j, l));
            }
            rec(j - 1, remaining - j * l as usize, used + l, p, acc, out, k);
            if l > 0 {
                acc.pop();
            }
        }
    }
    rec(k - 1, k, 0, p, &mut Vec::new(), &mut out, k);
    out
}

/// One summand of N_k: exact multinomial coefficient and exponent tuple.
#[derive(Debug, Clone, Serialize)]
pub struct CarryTerm {
    pub coefficient: u128,
    pub tuple: ExponentTuple,
}

/// N_k as a set of (coefficient, exponent-tuple) terms, pre-division by p.
#[derive(Debug, Clone, Serialize)]
pub struct CarryPolynomial {
    pub prime: u64,
    pub k: usize,
    pub terms: Vec<CarryTerm>,
}

fn multinomial(p: u64, exps: &[u64]) -> u128 {
    let mut num: u128 = 1;
    for t in 1..=p as u128 {
        num *= t;
    }
    let mut den: u128 = 1;
    for &l in exps {
        for t in 1..=l as u128 {
            den *= t;
        }
    }
    num / den
}

/// Builds N_k for concrete p (N_1 = 0).
pub fn carry_polynomial(p: u64, k: usize) -> CarryPolynomial {
    let terms = summand_list(p, k)
        .into_iter()
        .map(|tuple| CarryTerm {
            coefficient: multinomial(p, &tuple.exponents),
            tuple,
        })
        .collect();
    CarryPolynomial { prime: p, k, terms }
}

impl CarryPolynomial {
    /// Evaluates N_k(values)/p mod `modulus`. Every coefficient is divisible
    /// by p, so the division is exact.
    pub fn eval_div_p_mod(&self, values: &[u64], modulus: u64) -> u64 {
        let mut acc: u128 = 0;
        for term in &self.terms {
            debug_assert_eq!(term.coefficient % self.prime as u128, 0);
            let mut v = ((term.coefficient / self.prime as u128) % modulus as u128) as u64;
            for (j, &l) in term.tuple.exponents.iter().enumerate() {
                if l == 0 {
                    continue;
                }
                let base = values[j] % modulus;
                v = ((v as u128 * powmod(base, l, modulus) as u128) % modulus as u128) as u64;
            }
            acc = (acc + v as u128) % modulus as u128;
        }
        acc as u64
    }

    /// Evaluates the full N_k(values) exactly as a big integer.
    pub fn eval_exact(&self, values: &[BigUint]) -> BigUint {
        let mut acc = BigUint::ZERO;
        for term in &self.terms {
            let mut v = BigUint::from(term.coefficient);
            for (j, &l) in term.tuple.exponents.iter().enumerate() {
                if l == 0 {
                    continue;
                }
                v *= values[j].pow(l as u32);
            }
            acc += v;
        }
        acc
    }
}

/// The digit recursion for x^(p^m) = a, ported from the published program.
/// One stage maps the digit vector A to L with L[0] = A[0] and
/// L[i] = A[i+1] - N_i(L[0..i])/p mod p, evaluating each N_i at the digits
/// already corrected earlier in the same stage; m stages recurse. The last
/// digit of every stage is never corrected, so m stages of a k-digit input
/// yield k - m output digits. The recursion reproduces true root digits only
/// on part of its range; measured agreement is a conformance-report concern,
/// not an invariant here.
pub fn digit_recursion(a_digits: &[u64], p: u64, m: usize) -> Result<Vec<u64>> {
    if m == 0 || m as u64 > p - 1 {
        return Err(Error::Domain(format!(
            "stage count m = {m} outside the supported range 1..=p-1 for p = {p}"
        )));
    }
    let k = a_digits.len();
    if k < m + 2 {
        return Err(Error::PrecisionTooLow { got: k, min: m + 2 });
    }
    if a_digits.iter().any(|&d| d >= p) || a_digits[0] == 0 {
        return Err(Error::Domain(
            "digits must be canonical: 0 <= d < p with d0 != 0".into(),
        ));
    }
    let polys: Vec<CarryPolynomial> = (0..k).map(|i| carry_polynomial(p, i)).collect();
    let mut cur = a_digits.to_vec();
    for _ in 0..m {
        let input = cur.clone();
        for d in 1..=(k - 2) {
            let n_val = polys[d].eval_div_p_mod(&cur[..d], p);
            cur[d] = (input[d + 1] + p - n_val) % p;
        }
    }
    cur.truncate(k - m);
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::ToPrimitive;

    #[test]
    fn summand_base_cases() {
        for p in [3u64, 5, 7, 11] {
            let s = summand_list(p, 2);
            assert_eq!(s.len(), 1);
            let t = s.into_iter().next().unwrap();
            assert_eq!(t.exponents, vec![p - 2, 2]);
        }
        assert!(summand_list(5, 1).is_empty());
        assert!(summand_list(5, 0).is_empty());
    }

    #[test]
    fn summand_list_5_3() {
        let s: Vec<Vec<u64>> = summand_list(5, 3)
            .into_iter()
            .map(|t| t.exponents)
            .collect();
        assert_eq!(s, vec![vec![2, 3, 0], vec![3, 1, 1]]);
    }

    #[test]
    fn summand_constraints_hold() {
        for p in [3u64, 5, 7] {
            for k in 2..=10usize {
                for t in summand_list(p, k) {
                    let sum: u64 = t.exponents.iter().sum();
                    let weight: u64 = t
                        .exponents
                        .iter()
                        .enumerate()
                        .map(|(j, &l)| j as u64 * l)
                        .sum();
                    assert_eq!(sum, p);
                    assert_eq!(weight, k as u64);
                    assert!(t.exponents.iter().all(|&l| l < p));
                }
            }
        }
    }

    #[test]
    fn n2_is_printed_formula() {
        for p in [3u64, 5, 7, 11] {
            let n2 = carry_polynomial(p, 2);
            assert_eq!(n2.terms.len(), 1);
            assert_eq!(n2.terms[0].coefficient, (p * (p - 1) / 2) as u128);
            assert_eq!(n2.terms[0].tuple.exponents, vec![p - 2, 2]);
        }
        // instantiated at p = 3: 3*x0*x1^2
        let n2 = carry_polynomial(3, 2);
        assert_eq!(n2.terms[0].coefficient, 3);
        assert_eq!(n2.terms[0].tuple.exponents, vec![1, 2]);
    }

    #[test]
    fn n3_at_p5() {
        let n3 = carry_polynomial(5, 3);
        let mut terms: Vec<(u128, Vec<u64>)> = n3
            .terms
            .iter()
            .map(|t| (t.coefficient, t.tuple.exponents.clone()))
            .collect();
        terms.sort();
        assert_eq!(terms, vec![(10, vec![2, 3, 0]), (20, vec![3, 1, 1])]);
    }

    #[test]
    fn coefficients_divisible_by_p() {
        for p in [3u64, 5, 7, 11] {
            for k in 1..=12usize {
                for t in carry_polynomial(p, k).terms {
                    assert_eq!(
                        t.coefficient % p as u128,
                        0,
                        "p={p}, k={k}, tuple={:?}",
                        t.tuple
                    );
                }
            }
        }
    }

    #[test]
    fn expansion_identity() {
        // (sum x_j p^j)^p = x_0^p + sum_w p^w (p x_0^(p-1) x_w + N_w) exactly
        use num_bigint::BigUint;
        let p = 5u64;
        let digits: Vec<u64> = vec![2, 4, 0, 3, 1, 2, 4, 1];
        let k = digits.len();
        let big_digits: Vec<BigUint> = digits.iter().map(|&d| BigUint::from(d)).collect();
        let x: BigUint = digits
            .iter()
            .enumerate()
            .map(|(j, &d)| BigUint::from(d) * BigUint::from(p).pow(j as u32))
            .sum();
        let lhs = x.pow(p as u32);
        let mut rhs = BigUint::from(digits[0]).pow(p as u32);
        for w in 1..=(p as usize * (k - 1)) {
            let pure = if w < k {
                BigUint::from(p) * BigUint::from(digits[0]).pow(p as u32 - 1) * BigUint::from(digits[w])
            } else {
                BigUint::ZERO
            };
            let carry = carry_polynomial(p, w).eval_exact(&big_digits[..w.min(k)]);
            rhs += BigUint::from(p).pow(w as u32) * (pure + carry);
        }
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn recursion_spec_examples() {
        assert_eq!(digit_recursion(&[1, 0, 0, 0], 3, 1).unwrap(), vec![1, 0, 0]);
        let out = digit_recursion(&[2, 2, 0, 0], 3, 1).unwrap();
        assert_eq!(out[..2], [2, 0]); // root 2 of a = 8
    }

    #[test]
    fn recursion_on_fifth_power_with_unit_leading_digit() {
        // digits of b and b^5 for b = 1 + 5 + 2*25 (b_0 = 1: the recursion's
        // exact domain)
        let p = 5u64;
        let b: u64 = 1 + 5 + 2 * 25;
        let bp = BigUint::from(b).pow(5);
        let modulus = BigUint::from(p).pow(8);
        let mut rem = &bp % &modulus;
        let mut a_digits = Vec::new();
        for _ in 0..8 {
            let d = (&rem % p).to_u64().unwrap();
            a_digits.push(d);
            rem /= p;
        }
        let out = digit_recursion(&a_digits, p, 1).unwrap();
        let b_digits = [1u64, 1, 2, 0, 0, 0, 0];
        // agreement on indices 0..=p-2
        assert_eq!(out[..(p as usize - 1)], b_digits[..(p as usize - 1)]);
    }

    #[test]
    fn recursion_domain_errors() {
        assert!(matches!(
            digit_recursion(&[1, 0, 0, 0, 0], 3, 3),
            Err(Error::Domain(_))
        )); // m > p - 1
        assert!(matches!(
            digit_recursion(&[1, 0], 5, 1),
            Err(Error::PrecisionTooLow { .. })
        ));
    }
}
