//! Closed-form bounds over the model parameters.
//!
//! Text form: `const | EFFICIENCY | CONC_CASES | (e+e) | (e*e) | (e/e) | max(e,e) | trunc(e/e)`.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::lang::{ModelParam, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BoundExpr {
    Const(Rational),
    Param(ModelParam),
    Add(Box<BoundExpr>, Box<BoundExpr>),
    Mul(Box<BoundExpr>, Box<BoundExpr>),
    Div(Box<BoundExpr>, Box<BoundExpr>),
    Max(Box<BoundExpr>, Box<BoundExpr>),
    /// Truncation toward zero.
    Trunc(Box<BoundExpr>),
}

use BoundExpr::*;

// Smart constructors that simplify as they build; not arithmetic on values.
#[allow(clippy::should_implement_trait)]
impl BoundExpr {
    pub fn int(v: i128) -> Self {
        Const(Rational::from_integer(v))
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn as_const(&self) -> Option<Rational> {
        match self {
            Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn add(a: BoundExpr, b: BoundExpr) -> Self {
        match (a, b) {
            (Const(x), Const(y)) => Const(x + y),
            (Const(z), e) | (e, Const(z)) if z.is_zero() => e,
            // Keep constants on the right so that `(x+1)+2` folds.
            (Add(x, y), Const(c)) if y.as_const().is_some() => Self::add(*x, Const(y.as_const().unwrap() + c)),
            (Const(c), e) => Add(Box::new(e), Box::new(Const(c))),
            (a, b) => Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: BoundExpr, b: BoundExpr) -> Self {
        Self::add(a, Self::mul(Self::int(-1), b))
    }

    pub fn mul(a: BoundExpr, b: BoundExpr) -> Self {
        match (a, b) {
            (Const(x), Const(y)) => Const(x * y),
            (Const(z), _) | (_, Const(z)) if z.is_zero() => Self::zero(),
            (Const(o), e) | (e, Const(o)) if o == Rational::from_integer(1) => e,
            (e, Const(c)) => Mul(Box::new(Const(c)), Box::new(e)),
            (a, b) => Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: BoundExpr, b: BoundExpr) -> Self {
        match (a, b) {
            (Const(x), Const(y)) if !y.is_zero() => Const(x / y),
            (e, Const(o)) if o == Rational::from_integer(1) => e,
            // c1 * (c2 / e) = (c1*c2) / e
            (a, b) => Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn trunc(a: BoundExpr) -> Self {
        match a {
            Const(x) => Const(x.trunc()),
            Trunc(e) => Trunc(e),
            Param(p) => Param(p),
            Mul(c, e) if matches!(*c, Const(_)) => match *e {
                // c * (n / d) with constant c and n: fold into one quotient.
                Div(n, d) if n.as_const().is_some() => {
                    Trunc(Box::new(Self::div(Const(c.as_const().unwrap() * n.as_const().unwrap()), *d)))
                }
                e => Trunc(Box::new(Mul(c, Box::new(e)))),
            },
            e => Trunc(Box::new(e)),
        }
    }

    pub fn max(a: BoundExpr, b: BoundExpr) -> Self {
        let mut cands: Vec<BoundExpr> = Vec::new();
        for e in [a, b] {
            e.flatten_max(&mut cands);
        }
        let mut keep: Vec<BoundExpr> = Vec::new();
        for (i, c) in cands.iter().enumerate() {
            let dominated = cands.iter().enumerate().any(|(j, d)| {
                j != i && d.dominates(c) && (!c.dominates(d) || j < i)
            });
            if !dominated {
                keep.push(c.clone());
            }
        }
        keep.into_iter()
            .reduce(|x, y| Max(Box::new(x), Box::new(y)))
            .expect("at least one candidate")
    }

    fn flatten_max(self, out: &mut Vec<BoundExpr>) {
        match self {
            Max(a, b) => {
                a.flatten_max(out);
                b.flatten_max(out);
            }
            e => out.push(e),
        }
    }

    fn flatten_add<'a>(&'a self, out: &mut Vec<&'a BoundExpr>) {
        match self {
            Add(a, b) => {
                a.flatten_add(out);
                b.flatten_add(out);
            }
            e => out.push(e),
        }
    }

    /// `self >= other` for every admissible parameter value, judged syntactically:
    /// `self` is `other` plus non-negative terms, or both are constants.
    fn dominates(&self, other: &BoundExpr) -> bool {
        if let (Const(x), Const(y)) = (self, other) {
            return x >= y;
        }
        if let Const(y) = other {
            if !y.is_positive() && self.nonneg() {
                return true;
            }
        }
        let mut big = Vec::new();
        self.flatten_add(&mut big);
        let mut small = Vec::new();
        other.flatten_add(&mut small);
        for s in small {
            match big.iter().position(|b| *b == s) {
                Some(i) => {
                    big.remove(i);
                }
                None => return false,
            }
        }
        big.iter().all(|b| b.nonneg())
    }

    /// Provably non-negative for every admissible parameter value.
    pub fn nonneg(&self) -> bool {
        match self {
            Const(c) => !c.is_negative(),
            Param(_) => true,
            Add(a, b) | Mul(a, b) | Div(a, b) => a.nonneg() && b.nonneg(),
            Max(a, b) => a.nonneg() || b.nonneg(),
            Trunc(a) => a.nonneg(),
        }
    }

    /// Exact value at the given parameters.
    pub fn eval(&self, efficiency: u32, cases: u32) -> Rational {
        match self {
            Const(c) => *c,
            Param(ModelParam::Efficiency) => Rational::from_integer(efficiency as i128),
            Param(ModelParam::ConcCases) => Rational::from_integer(cases as i128),
            Param(ModelParam::Availability) => Rational::from_integer(100),
            Add(a, b) => a.eval(efficiency, cases) + b.eval(efficiency, cases),
            Mul(a, b) => a.eval(efficiency, cases) * b.eval(efficiency, cases),
            Div(a, b) => {
                let d = b.eval(efficiency, cases);
                if d.is_zero() {
                    Rational::zero()
                } else {
                    a.eval(efficiency, cases) / d
                }
            }
            Max(a, b) => a.eval(efficiency, cases).max(b.eval(efficiency, cases)),
            Trunc(a) => a.eval(efficiency, cases).trunc(),
        }
    }

    pub fn params(&self) -> Vec<ModelParam> {
        let mut out = Vec::new();
        self.collect(&mut out);
        out
    }

    fn collect(&self, out: &mut Vec<ModelParam>) {
        match self {
            Const(_) => {}
            Param(p) => {
                if !out.contains(p) {
                    out.push(*p)
                }
            }
            Add(a, b) | Mul(a, b) | Div(a, b) | Max(a, b) => {
                a.collect(out);
                b.collect(out);
            }
            Trunc(a) => a.collect(out),
        }
    }
}

impl fmt::Display for BoundExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(c) if c.is_integer() => write!(f, "{}", c.to_integer()),
            Const(c) => write!(f, "({}/{})", c.numer(), c.denom()),
            Param(p) => f.write_str(p.name()),
            Add(a, b) => write!(f, "({a}+{b})"),
            Mul(a, b) => write!(f, "({a}*{b})"),
            Div(a, b) => write!(f, "({a}/{b})"),
            Max(a, b) => write!(f, "max({a},{b})"),
            Trunc(a) => match &**a {
                Div(n, d) => write!(f, "trunc({n}/{d})"),
                e => write!(f, "trunc({e}/1)"),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad bound expression at offset {offset}: {message}")]
pub struct BoundParseError {
    pub offset: usize,
    pub message: String,
}

/// Parses the text form produced by `Display`.
pub fn parse_bound(s: &str) -> Result<BoundExpr, BoundParseError> {
    let text: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut p = BoundParser { s: &text, pos: 0 };
    let e = p.expr()?;
    if p.pos != text.len() {
        return Err(p.fail("trailing input"));
    }
    Ok(e)
}

struct BoundParser<'a> {
    s: &'a [char],
    pos: usize,
}

impl BoundParser<'_> {
    fn fail(&self, m: &str) -> BoundParseError {
        BoundParseError {
            offset: self.pos,
            message: m.into(),
        }
    }

    fn eat(&mut self, c: char) -> Result<(), BoundParseError> {
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.fail(&format!("expected `{c}`")))
        }
    }

    fn word(&mut self) -> String {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || self.s[self.pos] == '_') {
            self.pos += 1;
        }
        self.s[start..self.pos].iter().collect()
    }

    fn expr(&mut self) -> Result<BoundExpr, BoundParseError> {
        match self.s.get(self.pos) {
            Some('(') => {
                self.pos += 1;
                let a = self.expr()?;
                let op = *self.s.get(self.pos).ok_or_else(|| self.fail("unexpected end"))?;
                self.pos += 1;
                let b = self.expr()?;
                self.eat(')')?;
                Ok(match op {
                    '+' => Add(Box::new(a), Box::new(b)),
                    '*' => Mul(Box::new(a), Box::new(b)),
                    '/' => match (&a, &b) {
                        (Const(x), Const(y)) if !y.is_zero() => Const(x / y),
                        _ => Div(Box::new(a), Box::new(b)),
                    },
                    _ => return Err(self.fail("expected `+`, `*` or `/`")),
                })
            }
            Some('-') => {
                self.pos += 1;
                match self.expr()? {
                    Const(c) => Ok(Const(-c)),
                    _ => Err(self.fail("`-` applies to constants only")),
                }
            }
            Some(c) if c.is_ascii_digit() => {
                let w = self.word();
                w.parse::<i128>()
                    .map(BoundExpr::int)
                    .map_err(|_| self.fail("bad number"))
            }
            Some(_) => {
                let w = self.word();
                match w.as_str() {
                    "max" => {
                        self.eat('(')?;
                        let a = self.expr()?;
                        self.eat(',')?;
                        let b = self.expr()?;
                        self.eat(')')?;
                        Ok(Max(Box::new(a), Box::new(b)))
                    }
                    "trunc" => {
                        self.eat('(')?;
                        let a = self.expr()?;
                        self.eat('/')?;
                        let b = self.expr()?;
                        self.eat(')')?;
                        Ok(match b {
                            Const(o) if o == Rational::from_integer(1) => Trunc(Box::new(a)),
                            b => Trunc(Box::new(Div(Box::new(a), Box::new(b)))),
                        })
                    }
                    name => ModelParam::from_name(name)
                        .filter(|p| *p != ModelParam::Availability)
                        .map(Param)
                        .ok_or_else(|| self.fail(&format!("unknown name `{name}`"))),
                }
            }
            None => Err(self.fail("unexpected end")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eff() -> BoundExpr {
        Param(ModelParam::Efficiency)
    }

    fn t(effort: i128) -> BoundExpr {
        BoundExpr::trunc(BoundExpr::mul(BoundExpr::int(effort), BoundExpr::div(BoundExpr::int(100), eff())))
    }

    #[test]
    fn effort_scaling_folds_to_one_quotient() {
        assert_eq!(t(150).to_string(), "trunc(15000/EFFICIENCY)");
        assert_eq!(t(150).eval(70, 1), Rational::from_integer(214));
    }

    #[test]
    fn max_absorbs_extension() {
        let a = t(50);
        let b = BoundExpr::add(a.clone(), t(200));
        assert_eq!(BoundExpr::max(a.clone(), b.clone()), BoundExpr::max(b.clone(), a));
        assert!(!matches!(BoundExpr::max(t(50), b), Max(..)));
        assert_eq!(BoundExpr::max(BoundExpr::zero(), Param(ModelParam::ConcCases)), Param(ModelParam::ConcCases));
    }

    #[test]
    fn constants_fold() {
        let e = BoundExpr::add(BoundExpr::add(eff(), BoundExpr::int(1)), BoundExpr::int(2));
        assert_eq!(e.to_string(), "(EFFICIENCY+3)");
    }

    fn arb() -> impl Strategy<Value = BoundExpr> {
        let leaf = prop_oneof![
            (0i128..500).prop_map(BoundExpr::int),
            Just(Param(ModelParam::Efficiency)),
            Just(Param(ModelParam::ConcCases)),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Add(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Mul(Box::new(a), Box::new(b))),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Max(Box::new(a), Box::new(b))),
                (inner.clone(), Just(Param(ModelParam::Efficiency)))
                    .prop_map(|(a, b)| Trunc(Box::new(Div(Box::new(a), Box::new(b))))),
            ]
        })
    }

    proptest! {
        #[test]
        fn text_round_trips(e in arb(), eff in 1u32..200, cases in 1u32..10) {
            let back = parse_bound(&e.to_string()).unwrap();
            prop_assert_eq!(back.eval(eff, cases), e.eval(eff, cases));
            prop_assert_eq!(back.to_string(), e.to_string());
        }

        #[test]
        fn smart_constructors_preserve_value(e in arb(), f in arb(), eff in 1u32..200, cases in 1u32..10) {
            prop_assert_eq!(BoundExpr::add(e.clone(), f.clone()).eval(eff, cases), e.eval(eff, cases) + f.eval(eff, cases));
            prop_assert_eq!(BoundExpr::mul(e.clone(), f.clone()).eval(eff, cases), e.eval(eff, cases) * f.eval(eff, cases));
            prop_assert_eq!(BoundExpr::max(e.clone(), f.clone()).eval(eff, cases), e.eval(eff, cases).max(f.eval(eff, cases)));
        }
    }
}
