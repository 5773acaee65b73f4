//! Criterion emission for x^(p^m) = a by symbolic iteration of the digit
//! recursion's stage transform.
//!
//! Each stage j contributes the condition that the j-th successive root has
//! a valid leading pair; combined with the first line, stage j >= 2 reads
//! a_1 = B_1^(j) mod p where B^(j) is the (j-1)-fold stage transform of the
//! input digits. Lines are normalized by back-substituting the relations of
//! earlier lines, which reproduces the published closed forms. The emitted
//! congruences are exact over the whole unit group only for m = 1; for
//! m >= 2 their validity domain is measured by the conformance sweep, not
//! assumed.

use serde::Serialize;

use super::expr::{DigitExpr, ExpLin, PPoly};
use crate::error::{Error, Result};
use crate::padic::PadicNumber;
use std::collections::BTreeMap;

/// The prime a criterion is instantiated at: the formal symbol, or concrete.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum PrimeParam {
    #[serde(serialize_with = "ser_symbolic")]
    Symbolic,
    Concrete(u64),
}

fn ser_symbolic<S: serde::Serializer>(s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str("p")
}

/// One congruence line: lhs = rhs mod p^modulus_exp.
#[derive(Debug, Clone, Serialize)]
pub struct Congruence {
    pub lhs: DigitExpr,
    pub rhs: DigitExpr,
    pub modulus_exp: u32,
}

/// A machine-checkable solvability criterion for x^(p^m) = a:
/// a divisibility requirement p^m | gamma(a) plus an ordered congruence
/// list over the digits a_0..a_m, evaluated left-to-right with
/// short-circuit failure.
#[derive(Debug, Clone, Serialize)]
pub struct Criterion {
    pub prime: PrimeParam,
    /// m: the equation is x^(p^m) = a.
    pub stages: usize,
    pub congruences: Vec<Congruence>,
}

/// Outcome of evaluating a criterion against a concrete input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriterionVerdict {
    pub satisfied: bool,
    /// Index of the first failed check: 0 is the divisibility line,
    /// i >= 1 is congruence i-1.
    pub failed_line: Option<usize>,
}

/// Applies N_k(args)/p symbolically. `args[0]` must be the pure a_0 symbol;
/// its power enters through the symbolic exponent p - s.
fn apply_carry_div_p(k: usize, args: &[DigitExpr]) -> DigitExpr {
    let mut out = DigitExpr::zero();
    if k < 2 {
        return out;
    }
    // partitions of k into parts 1..=k-1 with multiplicities
    fn rec(part: usize, remaining: usize, acc: &mut Vec<(usize, u64)>, sink: &mut Vec<Vec<(usize, u64)>>) {
        if remaining == 0 {
            sink.push(acc.clone());
            return;
        }
        if part == 0 {
            return;
        }
        for l in 0..=(remaining / part) as u64 {
            if l > 0 {
                acc.push((part, l));
            }
            rec(part - 1, remaining - part * l as usize, acc, sink);
            if l > 0 {
                acc.pop();
            }
        }
    }
    let mut partitions = Vec::new();
    rec(k - 1, k, &mut Vec::new(), &mut partitions, );
    for parts in partitions {
        let s: u64 = parts.iter().map(|&(_, l)| l).sum();
        // coefficient (p-1)(p-2)...(p-s+1) / prod l_j!
        let mut coeff = PPoly::from_int(1);
        for t in 1..s {
            coeff = coeff.mul(&PPoly::symbol().add(&PPoly::from_int(-(t as i64))));
        }
        for &(_, l) in &parts {
            let mut fact = 1i64;
            for t in 1..=l as i64 {
                fact *= t;
            }
            coeff = coeff.div_int(fact);
        }
        let mut term = DigitExpr::monomial(
            coeff,
            ExpLin {
                p_coeff: 1,
                constant: -(s as i64),
            },
            BTreeMap::new(),
        );
        for &(j, l) in &parts {
            for _ in 0..l {
                term = term.mul(&args[j]);
            }
        }
        out = out.add(&term);
    }
    out
}

/// One stage of the digit recursion on symbolic digit expressions:
/// C_0 = B_0, C_d = B_(d+1) - N_d(C_0..C_(d-1))/p. The stale last digit is
/// dropped, so the output is one shorter.
fn stage_transform(b: &[DigitExpr]) -> Vec<DigitExpr> {
    let len = b.len() - 1;
    let mut c: Vec<DigitExpr> = Vec::with_capacity(len);
    c.push(b[0].clone());
    for d in 1..len {
        let n = apply_carry_div_p(d, &c[..d]);
        c.push(b[d + 1].sub(&n));
    }
    c
}

/// Emits the solvability criterion for x^(p^m) = a: p^m | gamma(a) plus
/// m congruence lines. For a concrete prime, m must stay within the
/// supported range m <= p - 1.
pub fn emit_criterion(prime: PrimeParam, m: usize) -> Result<Criterion> {
    if m == 0 {
        return Err(Error::Domain("stage count m must be >= 1".into()));
    }
    if let PrimeParam::Concrete(p) = prime {
        if m as u64 > p - 1 {
            return Err(Error::Domain(format!(
                "m = {m} outside the supported range 1..=p-1 for p = {p}"
            )));
        }
    }
    let mut congruences = Vec::with_capacity(m);
    // line 1: a_0^p = a_0 + a_1 p (mod p^2)
    congruences.push(Congruence {
        lhs: DigitExpr::monomial(
            PPoly::from_int(1),
            ExpLin {
                p_coeff: 1,
                constant: 0,
            },
            BTreeMap::new(),
        ),
        rhs: DigitExpr::digit(0).add(&DigitExpr::digit(1).scale(&PPoly::symbol())),
        modulus_exp: 2,
    });
    // stages 2..=m: a_1 = B_1^(j) (mod p), back-substituted to digits a_0,
    // a_1 and the new digit a_j
    let mut b: Vec<DigitExpr> = (0..=m).map(DigitExpr::digit).collect();
    let mut relations: BTreeMap<usize, DigitExpr> = BTreeMap::new();
    for j in 2..=m {
        b = stage_transform(&b);
        let mut line = b[1].clone();
        for i in (2..j).rev() {
            if let Some(rel) = relations.get(&i) {
                line = line.substitute(i, rel);
            }
        }
        let (lead, rest) = line.split_linear(j);
        debug_assert_eq!(lead.eval(1009), num_rational::BigRational::from_integer(1.into()),
            "digit a_{j} must appear linearly with coefficient 1");
        // relation a_j = a_1 - rest, used to normalize later lines
        relations.insert(j, DigitExpr::digit(1).sub(&rest));
        congruences.push(Congruence {
            lhs: DigitExpr::digit(1),
            rhs: line,
            modulus_exp: 1,
        });
    }
    Ok(Criterion {
        prime,
        stages: m,
        congruences,
    })
}

impl Criterion {
    /// Concrete prime of this criterion, if any.
    pub fn concrete_prime(&self) -> Option<u64> {
        match self.prime {
            PrimeParam::Concrete(p) => Some(p),
            PrimeParam::Symbolic => None,
        }
    }

    /// Evaluates the criterion against a nonzero value. The criterion must
    /// be instantiated at (or evaluable at) the value's prime.
    pub fn evaluate(&self, a: &PadicNumber) -> Result<CriterionVerdict> {
        let p = a.prime();
        if let Some(cp) = self.concrete_prime() {
            if cp != p {
                return Err(Error::PrimeMismatch(cp, p));
            }
        }
        let gamma = a.valuation().ok_or(Error::ZeroInput)?;
        let n = a.precision().unwrap();
        if n < self.stages + 1 {
            return Err(Error::PrecisionTooLow {
                got: n,
                min: self.stages + 1,
            });
        }
        let q = (p as i64)
            .checked_pow(self.stages as u32)
            .ok_or_else(|| Error::Domain("p^m overflows".into()))?;
        if gamma % q != 0 {
            return Ok(CriterionVerdict {
                satisfied: false,
                failed_line: Some(0),
            });
        }
        let digits = a.digits();
        for (i, c) in self.congruences.iter().enumerate() {
            let modulus = p.pow(c.modulus_exp);
            let lhs = c.lhs.eval_mod(p, &digits, modulus)?;
            let rhs = c.rhs.eval_mod(p, &digits, modulus)?;
            if lhs != rhs {
                return Ok(CriterionVerdict {
                    satisfied: false,
                    failed_line: Some(i + 1),
                });
            }
        }
        Ok(CriterionVerdict {
            satisfied: true,
            failed_line: None,
        })
    }

    /// Human-readable rendering with one line per condition.
    pub fn pretty(&self) -> String {
        let p = match self.prime {
            PrimeParam::Symbolic => "p".to_string(),
            PrimeParam::Concrete(p) => p.to_string(),
        };
        let q = match self.prime {
            PrimeParam::Symbolic => format!("p^{}", self.stages),
            PrimeParam::Concrete(pv) => format!("{}", (pv as u128).pow(self.stages as u32)),
        };
        let mut out = format!("(i)  {q} divides γ(a)\n(ii) congruences:\n");
        for c in &self.congruences {
            let modulus = if c.modulus_exp == 1 {
                p.clone()
            } else {
                format!("{p}^{}", c.modulus_exp)
            };
            out.push_str(&format!(
                "     {} ≡ {}   (mod {})\n",
                c.lhs.pretty(),
                c.rhs.pretty(),
                modulus
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::padic::PrecisionContext;
    use crate::roots;
    use num_rational::BigRational;

    #[test]
    fn m1_reproduces_two_conditions() {
        let c = emit_criterion(PrimeParam::Symbolic, 1).unwrap();
        assert_eq!(c.congruences.len(), 1);
        assert_eq!(c.congruences[0].modulus_exp, 2);
        assert_eq!(c.congruences[0].lhs.pretty(), "a₀^(p)");
    }

    #[test]
    fn m2_adds_digit_equality() {
        let c = emit_criterion(PrimeParam::Symbolic, 2).unwrap();
        assert_eq!(c.congruences.len(), 2);
        let l2 = &c.congruences[1];
        assert_eq!(l2.lhs.pretty(), "a₁");
        assert_eq!(l2.rhs.pretty(), "a₂");
        assert_eq!(l2.modulus_exp, 1);
    }

    #[test]
    fn m3_adds_proposition_congruence() {
        let c = emit_criterion(PrimeParam::Symbolic, 3).unwrap();
        let rhs = &c.congruences[2].rhs;
        // a_3 - ((p-1)/2) a_0^(p-2) a_1^2
        let mut found_a3 = false;
        let mut found_quad = false;
        for t in rhs.terms() {
            if t.powers.get(&3) == Some(&1) {
                found_a3 = true;
                assert_eq!(t.coeff.eval(7), BigRational::from_integer(1.into()));
            }
            if t.powers.get(&1) == Some(&2) {
                found_quad = true;
                assert_eq!(
                    t.a0_exp,
                    ExpLin {
                        p_coeff: 1,
                        constant: -2
                    }
                );
                assert_eq!(t.coeff.eval(7), BigRational::from_integer((-3).into()));
            }
        }
        assert!(found_a3 && found_quad);
        assert_eq!(rhs.terms().len(), 2);
    }

    #[test]
    fn m4_fourth_line_shape() {
        let c = emit_criterion(PrimeParam::Symbolic, 4).unwrap();
        assert_eq!(c.congruences.len(), 4);
        let rhs = &c.congruences[3].rhs;
        assert_eq!(rhs.terms().len(), 3);
        for t in rhs.terms() {
            if t.powers.get(&4) == Some(&1) {
                assert_eq!(t.coeff.eval(5), BigRational::from_integer(1.into()));
            } else if t.powers.get(&1) == Some(&3) {
                // -(p-1)(p-2)/6 a_0^(p-3) a_1^3
                assert_eq!(
                    t.a0_exp,
                    ExpLin {
                        p_coeff: 1,
                        constant: -3
                    }
                );
                assert_eq!(t.coeff.eval(5), BigRational::from_integer((-2).into()));
                assert_eq!(t.coeff.eval(7), BigRational::from_integer((-5).into()));
            } else if t.powers.get(&1) == Some(&2) {
                // the derived sign: -3(p-1)/2 a_0^(p-2) a_1^2
                assert_eq!(t.coeff.eval(5), BigRational::from_integer((-6).into()));
                assert_eq!(t.coeff.eval(7), BigRational::from_integer((-9).into()));
            } else {
                panic!("unexpected term in line 4: {t:?}");
            }
        }
    }

    #[test]
    fn symbolic_and_concrete_agree() {
        let sym = emit_criterion(PrimeParam::Symbolic, 3).unwrap();
        let conc = emit_criterion(PrimeParam::Concrete(7), 3).unwrap();
        let ctx = PrecisionContext::new(7, 8).unwrap();
        for a in [1i64, 8, 50, 344, 2402, 100, 5] {
            let x = PadicNumber::from_integer(a, &ctx);
            let v1 = sym.evaluate(&x).unwrap();
            let v2 = conc.evaluate(&x).unwrap();
            assert_eq!(v1, v2, "a = {a}");
        }
    }

    #[test]
    fn m1_matches_exact_solver() {
        let ctx = PrecisionContext::new(5, 8).unwrap();
        let crit = emit_criterion(PrimeParam::Concrete(5), 1).unwrap();
        for u in 1..625u64 {
            if u % 5 == 0 {
                continue;
            }
            let x = PadicNumber::from_integer(u as i64, &ctx);
            let v = crit.evaluate(&x).unwrap();
            let s = roots::solve_p(&x).unwrap();
            assert_eq!(v.satisfied, s.solvable, "u = {u}");
        }
    }

    #[test]
    fn concrete_range_enforced() {
        assert!(emit_criterion(PrimeParam::Concrete(3), 4).is_err());
        assert!(emit_criterion(PrimeParam::Concrete(5), 4).is_ok());
    }

    #[test]
    fn pretty_prints_unicode() {
        let c = emit_criterion(PrimeParam::Symbolic, 4).unwrap();
        let s = c.pretty();
        assert!(s.contains("p^4 divides γ(a)"));
        assert!(s.contains("a₀^(p) ≡ a₀ + p·a₁   (mod p^2)"));
        assert!(s.contains("a₁ ≡ a₂   (mod p)"));
    }
}
