//! Small symbolic layer for criterion emission: polynomials in the prime
//! symbol p, exponents linear in p, and multivariate expressions over the
//! digit symbols a_0, a_1, ....

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::roots::powmod;

/// A polynomial in the prime symbol with rational coefficients,
/// little-endian by degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PPoly {
    coeffs: Vec<BigRational>,
}

impl PPoly {
    pub fn zero() -> Self {
        Self { coeffs: vec![] }
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = Self { coeffs: vec![c] };
        p.trim();
        p
    }

    pub fn from_int(c: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(c)))
    }

    /// The monomial p itself.
    pub fn symbol() -> Self {
        Self {
            coeffs: vec![BigRational::zero(), BigRational::one()],
        }
    }

    fn trim(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        let mut coeffs = vec![BigRational::zero(); n];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        for (i, c) in other.coeffs.iter().enumerate() {
            coeffs[i] += c;
        }
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn neg(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![BigRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        let mut p = Self { coeffs };
        p.trim();
        p
    }

    pub fn div_int(&self, d: i64) -> Self {
        let d = BigRational::from_integer(BigInt::from(d));
        Self {
            coeffs: self.coeffs.iter().map(|c| c / &d).collect(),
        }
    }

    pub fn eval(&self, p: u64) -> BigRational {
        let pv = BigRational::from_integer(BigInt::from(p));
        let mut acc = BigRational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * &pv + c;
        }
        acc
    }

    /// Evaluates at a concrete prime and reduces mod `modulus`; the value
    /// must be an integer.
    pub fn eval_mod(&self, p: u64, modulus: u64) -> Result<u64> {
        let v = self.eval(p);
        if !v.denom().is_one() {
            return Err(Error::Domain(format!(
                "coefficient {v} is not an integer at p = {p}"
            )));
        }
        let m = BigInt::from(modulus);
        let r = ((v.numer() % &m) + &m) % &m;
        Ok(r.to_u64().unwrap())
    }

    /// Display with small integer roots factored out, e.g. "(p-1)(p-2)/6".
    pub fn pretty(&self) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        // common denominator
        let mut den = BigInt::one();
        for c in &self.coeffs {
            den = den.lcm(c.denom());
        }
        let mut ints: Vec<BigInt> = self
            .coeffs
            .iter()
            .map(|c| (c * BigRational::from_integer(den.clone())).to_integer())
            .collect();
        // divide out (p - r) factors with small nonneg integer roots
        let mut roots = Vec::new();
        'outer: loop {
            if ints.len() < 2 {
                break;
            }
            for r in 0i64..=12 {
                let rb = BigInt::from(r);
                // synthetic division by (p - r)
                let mut q = vec![BigInt::zero(); ints.len() - 1];
                let mut carry = BigInt::zero();
                for i in (0..ints.len()).rev() {
                    let cur = &ints[i] + &carry * &rb;
                    if i == 0 {
                        if cur.is_zero() {
                            ints = q;
                            roots.push(r);
                            continue 'outer;
                        }
                    } else {
                        q[i - 1] = cur.clone();
                        carry = cur;
                    }
                }
            }
            break;
        }
        let core = if ints.len() == 1 {
            let c = &ints[0];
            if c.is_one() && !roots.is_empty() {
                String::new()
            } else {
                format!("{c}")
            }
        } else {
            let mut parts = Vec::new();
            for (i, c) in ints.iter().enumerate().rev() {
                if c.is_zero() {
                    continue;
                }
                let body = match i {
                    0 => format!("{c}"),
                    1 => {
                        if c.is_one() {
                            "p".into()
                        } else {
                            format!("{c}p")
                        }
                    }
                    _ => {
                        if c.is_one() {
                            format!("p^{i}")
                        } else {
                            format!("{c}p^{i}")
                        }
                    }
                };
                parts.push(body);
            }
            format!("({})", parts.join(" + ").replace("+ -", "- "))
        };
        let mut s = core;
        for r in roots {
            if r == 0 {
                s.push('p');
            } else {
                s.push_str(&format!("(p-{r})"));
            }
        }
        if !den.is_one() {
            s = format!("{s}/{den}");
        }
        if s.is_empty() {
            s = "1".into();
        }
        s
    }
}

/// Exponent of the form c1*p + c0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct ExpLin {
    pub p_coeff: i64,
    pub constant: i64,
}

impl ExpLin {
    pub const ZERO: Self = Self {
        p_coeff: 0,
        constant: 0,
    };

    pub fn constant(c: i64) -> Self {
        Self {
            p_coeff: 0,
            constant: c,
        }
    }

    pub fn add(self, o: Self) -> Self {
        Self {
            p_coeff: self.p_coeff + o.p_coeff,
            constant: self.constant + o.constant,
        }
    }

    pub fn eval(self, p: u64) -> Result<u64> {
        let v = self.p_coeff * p as i64 + self.constant;
        if v < 0 {
            return Err(Error::Domain(format!(
                "negative exponent {v} at p = {p}"
            )));
        }
        Ok(v as u64)
    }

    pub fn is_zero(self) -> bool {
        self.p_coeff == 0 && self.constant == 0
    }

    pub fn pretty(self) -> String {
        match (self.p_coeff, self.constant) {
            (0, c) => format!("{c}"),
            (1, 0) => "p".into(),
            (1, c) if c < 0 => format!("p-{}", -c),
            (1, c) => format!("p+{c}"),
            (k, 0) => format!("{k}p"),
            (k, c) if c < 0 => format!("{k}p-{}", -c),
            (k, c) => format!("{k}p+{c}"),
        }
    }
}

/// One term: coeff(p) * a_0^(a0_exp) * prod_{i >= 1} a_i^(powers[i]).
#[derive(Debug, Clone)]
pub struct Monomial {
    pub coeff: PPoly,
    pub a0_exp: ExpLin,
    pub powers: BTreeMap<usize, u32>,
}

/// A sum of monomials over the digit symbols.
#[derive(Debug, Clone, Default)]
pub struct DigitExpr {
    terms: Vec<Monomial>,
}

impl DigitExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn digit(i: usize) -> Self {
        if i == 0 {
            return Self {
                terms: vec![Monomial {
                    coeff: PPoly::from_int(1),
                    a0_exp: ExpLin::constant(1),
                    powers: BTreeMap::new(),
                }],
            };
        }
        Self {
            terms: vec![Monomial {
                coeff: PPoly::from_int(1),
                a0_exp: ExpLin::ZERO,
                powers: BTreeMap::from([(i, 1)]),
            }],
        }
    }

    pub fn monomial(coeff: PPoly, a0_exp: ExpLin, powers: BTreeMap<usize, u32>) -> Self {
        let mut e = Self {
            terms: vec![Monomial {
                coeff,
                a0_exp,
                powers,
            }],
        };
        e.normalize();
        e
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn normalize(&mut self) {
        let mut map: BTreeMap<(ExpLin, Vec<(usize, u32)>), PPoly> = BTreeMap::new();
        for t in self.terms.drain(..) {
            let key = (
                t.a0_exp,
                t.powers
                    .iter()
                    .filter(|(_, &e)| e > 0)
                    .map(|(&i, &e)| (i, e))
                    .collect::<Vec<_>>(),
            );
            let entry = map.entry(key).or_insert_with(PPoly::zero);
            *entry = entry.add(&t.coeff);
        }
        for ((a0_exp, pows), coeff) in map {
            if coeff.is_zero() {
                continue;
            }
            self.terms.push(Monomial {
                coeff,
                a0_exp,
                powers: pows.into_iter().collect(),
            });
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut e = Self {
            terms: self
                .terms
                .iter()
                .chain(other.terms.iter())
                .cloned()
                .collect(),
        };
        e.normalize();
        e
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| Monomial {
                    coeff: t.coeff.neg(),
                    a0_exp: t.a0_exp,
                    powers: t.powers.clone(),
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::new();
        for a in &self.terms {
            for b in &other.terms {
                let mut powers = a.powers.clone();
                for (&i, &e) in &b.powers {
                    *powers.entry(i).or_insert(0) += e;
                }
                terms.push(Monomial {
                    coeff: a.coeff.mul(&b.coeff),
                    a0_exp: a.a0_exp.add(b.a0_exp),
                    powers,
                });
            }
        }
        let mut e = Self { terms };
        e.normalize();
        e
    }

    pub fn scale(&self, c: &PPoly) -> Self {
        let mut e = Self {
            terms: self
                .terms
                .iter()
                .map(|t| Monomial {
                    coeff: t.coeff.mul(c),
                    a0_exp: t.a0_exp,
                    powers: t.powers.clone(),
                })
                .collect(),
        };
        e.normalize();
        e
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::digit(0).sub(&Self::digit(0)); // zero
        acc = acc.add(&Self::monomial(
            PPoly::from_int(1),
            ExpLin::ZERO,
            BTreeMap::new(),
        ));
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Highest digit index appearing in the expression (0 if only a_0).
    pub fn max_digit(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|t| t.powers.keys().copied())
            .max()
            .unwrap_or(0)
    }

    /// Replaces every occurrence of digit symbol `i` (i >= 1) by `repl`.
    pub fn substitute(&self, i: usize, repl: &Self) -> Self {
        let mut out = Self::zero();
        for t in &self.terms {
            let e = t.powers.get(&i).copied().unwrap_or(0);
            let mut rest = t.powers.clone();
            rest.remove(&i);
            let base = Self::monomial(t.coeff.clone(), t.a0_exp, rest);
            out = out.add(&base.mul(&repl.pow(e)));
        }
        out
    }

    /// Extracts the coefficient of the plain monomial a_i (degree 1, nothing
    /// else), returning (coefficient, remainder) with expr = coeff*a_i + rem.
    pub fn split_linear(&self, i: usize) -> (PPoly, Self) {
        let mut coeff = PPoly::zero();
        let mut rest = Vec::new();
        for t in &self.terms {
            let is_plain =
                t.a0_exp.is_zero() && t.powers.len() == 1 && t.powers.get(&i) == Some(&1);
            if is_plain {
                coeff = coeff.add(&t.coeff);
            } else {
                rest.push(t.clone());
            }
        }
        let mut rem = Self { terms: rest };
        rem.normalize();
        (coeff, rem)
    }

    /// Evaluates at a concrete prime with the given unit digits, mod
    /// `modulus` (a power of p that fits u64).
    pub fn eval_mod(&self, p: u64, digits: &[u64], modulus: u64) -> Result<u64> {
        let mut acc: u64 = 0;
        for t in &self.terms {
            let mut v = t.coeff.eval_mod(p, modulus)?;
            let e0 = t.a0_exp.eval(p)?;
            if e0 > 0 {
                v = ((v as u128 * powmod(digits[0], e0, modulus) as u128) % modulus as u128) as u64;
            }
            for (&i, &e) in &t.powers {
                let d = *digits.get(i).ok_or(Error::PrecisionTooLow {
                    got: digits.len(),
                    min: i + 1,
                })?;
                v = ((v as u128 * powmod(d, e as u64, modulus) as u128) % modulus as u128) as u64;
            }
            acc = ((acc as u128 + v as u128) % modulus as u128) as u64;
        }
        Ok(acc)
    }

    pub fn pretty(&self) -> String {
        if self.terms.is_empty() {
            return "0".to_string();
        }
        const SUBS: [char; 10] = ['₀', '₁', '₂', '₃', '₄', '₅', '₆', '₇', '₈', '₉'];
        let sub = |i: usize| -> String {
            i.to_string()
                .chars()
                .map(|c| SUBS[c.to_digit(10).unwrap() as usize])
                .collect()
        };
        let mut parts = Vec::new();
        for t in &self.terms {
            let mut factors = Vec::new();
            let c = t.coeff.pretty();
            if c != "1" || (t.a0_exp.is_zero() && t.powers.is_empty()) {
                factors.push(c.clone());
            }
            if !t.a0_exp.is_zero() {
                if t.a0_exp == ExpLin::constant(1) {
                    factors.push(format!("a{}", sub(0)));
                } else {
                    factors.push(format!("a{}^({})", sub(0), t.a0_exp.pretty()));
                }
            }
            for (&i, &e) in &t.powers {
                if e == 1 {
                    factors.push(format!("a{}", sub(i)));
                } else {
                    factors.push(format!("a{}{}", sub(i), superscript(e)));
                }
            }
            parts.push(factors.join("·"));
        }
        parts.join(" + ").replace("+ -", "− ")
    }
}

fn superscript(e: u32) -> String {
    const SUPS: [char; 10] = ['⁰', '¹', '²', '³', '⁴', '⁵', '⁶', '⁷', '⁸', '⁹'];
    e.to_string()
        .chars()
        .map(|c| SUPS[c.to_digit(10).unwrap() as usize])
        .collect()
}

impl fmt::Display for DigitExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

impl Serialize for Monomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("Monomial", 3)?;
        let coeffs: Vec<String> = self.coeff.coeffs.iter().map(|c| c.to_string()).collect();
        st.serialize_field("coeff_poly_in_p", &coeffs)?;
        st.serialize_field("a0_exp", &self.a0_exp)?;
        let powers: BTreeMap<String, u32> = self
            .powers
            .iter()
            .map(|(&i, &e)| (format!("a{i}"), e))
            .collect();
        st.serialize_field("digit_powers", &powers)?;
        st.end()
    }
}

impl Serialize for DigitExpr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("DigitExpr", 2)?;
        st.serialize_field("terms", &self.terms)?;
        st.serialize_field("text", &self.pretty())?;
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppoly_arith_and_eval() {
        let p = PPoly::symbol();
        let pm1 = p.add(&PPoly::from_int(-1));
        let pm2 = p.add(&PPoly::from_int(-2));
        let prod = pm1.mul(&pm2).div_int(6); // (p-1)(p-2)/6
        assert_eq!(prod.eval(5), BigRational::from_integer(2.into()));
        assert_eq!(prod.eval_mod(7, 7).unwrap(), 5);
        assert_eq!(prod.pretty(), "(p-1)(p-2)/6");
    }

    #[test]
    fn expr_substitution_and_split() {
        // e = a_3 - 2 a_0^(p-2) a_2^2
        let c = PPoly::from_int(-2);
        let e = DigitExpr::digit(3).add(&DigitExpr::monomial(
            c,
            ExpLin {
                p_coeff: 1,
                constant: -2,
            },
            BTreeMap::from([(2usize, 2u32)]),
        ));
        let (coeff, rem) = e.split_linear(3);
        assert_eq!(coeff.eval(5), BigRational::from_integer(1.into()));
        assert_eq!(rem.terms().len(), 1);
        let sub = e.substitute(2, &DigitExpr::digit(1));
        assert_eq!(sub.max_digit(), 3);
        // evaluate at p=5, digits a=[3,1,4,2]: a3 - 2*a0^3*a1^2 = 2 - 2*27*16
        let v = sub.eval_mod(5, &[3, 1, 4, 2], 5).unwrap();
        assert_eq!(v, ((2i64 - 2 * 27 * 16).rem_euclid(5)) as u64);
    }
}
