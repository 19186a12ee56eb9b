//! Runtime values. Numbers are exact rationals; only `truncate` produces integers.

use std::fmt;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FutureId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    /// Uninitialised variable.
    Unit,
    Num(Rational),
    Bool(bool),
    List(Vec<Value>),
    Set(Vec<Value>),
    Pair(Box<Value>, Box<Value>),
    Fut(FutureId),
    Obj(ObjectId),
}

impl Value {
    pub fn int(v: i128) -> Self {
        Value::Num(Rational::from_integer(v))
    }

    pub fn as_num(&self) -> Option<Rational> {
        match self {
            Value::Num(r) => Some(*r),
            _ => None,
        }
    }

    /// The value as an integer, if it is a number with denominator 1.
    pub fn as_integer(&self) -> Option<i128> {
        match self {
            Value::Num(r) if r.is_integer() => Some(r.to_integer()),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Unit => "unit",
            Value::Num(_) => "number",
            Value::Bool(_) => "boolean",
            Value::List(_) => "list",
            Value::Set(_) => "set",
            Value::Pair(..) => "pair",
            Value::Fut(_) => "future",
            Value::Obj(_) => "object",
        }
    }
}

/// Rounds toward zero.
pub fn truncate(r: Rational) -> Rational {
    r.trunc()
}

/// Renders a rational with exactly two decimals, rounding half away from zero.
pub fn render_2dp(r: Rational) -> String {
    let scaled = r * Rational::from_integer(100);
    let rounded = scaled.round().to_integer();
    let neg = rounded < 0;
    let abs = rounded.unsigned_abs();
    format!("{}{}.{:02}", if neg { "-" } else { "" }, abs / 100, abs % 100)
}

pub fn rational_to_f64(r: Rational) -> f64 {
    r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Unit => f.write_str("()"),
            Value::Num(r) if r.denom().is_zero() => f.write_str("NaN"),
            Value::Num(r) if r.is_integer() => write!(f, "{}", r.to_integer()),
            Value::Num(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Value::Bool(b) => write!(f, "{}", if *b { "True" } else { "False" }),
            Value::List(items) | Value::Set(items) => {
                f.write_str(if matches!(self, Value::List(_)) { "list[" } else { "set[" })?;
                for (i, v) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Pair(a, b) => write!(f, "Pair({a},{b})"),
            Value::Fut(id) => write!(f, "fut#{}", id.0),
            Value::Obj(id) => write!(f, "obj#{}", id.0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_is_exact() {
        let r = Rational::from_integer(150) * (Rational::from_integer(100) / Rational::from_integer(70));
        assert_eq!(truncate(r), Rational::from_integer(214));
        assert_eq!(truncate(-r), Rational::from_integer(-214));
    }

    #[test]
    fn two_decimal_rendering() {
        assert_eq!(render_2dp(Rational::new(1000, 3)), "333.33");
        assert_eq!(render_2dp(Rational::new(2, 3)), "0.67");
        assert_eq!(render_2dp(Rational::from_integer(400)), "400.00");
        assert_eq!(render_2dp(Rational::new(-1, 8)), "-0.13");
    }
}
