//! Pure operations on runtime values, shared by the interpreter and the static analyses.

use num_traits::{CheckedAdd, CheckedDiv, CheckedMul, CheckedSub, Zero};

use crate::lang::{BinOp, Builtin, Rational, UnOp, Value};

fn num(v: &Value) -> Result<Rational, String> {
    v.as_num().ok_or_else(|| format!("expected a number, got {}", v.type_name()))
}

pub fn unop(op: UnOp, a: Value) -> Result<Value, String> {
    match op {
        UnOp::Not => a
            .as_bool()
            .map(|b| Value::Bool(!b))
            .ok_or_else(|| format!("`!` expects a boolean, got {}", a.type_name())),
        UnOp::Neg => Ok(Value::Num(-num(&a)?)),
    }
}

/// Every binary operator except the short-circuiting `&&` and `||`.
pub fn binop(op: BinOp, l: Value, r: Value) -> Result<Value, String> {
    let overflow = || "arithmetic overflow".to_string();
    Ok(match op {
        BinOp::Eq => Value::Bool(l == r),
        BinOp::Ne => Value::Bool(l != r),
        BinOp::Add => Value::Num(num(&l)?.checked_add(&num(&r)?).ok_or_else(overflow)?),
        BinOp::Sub => Value::Num(num(&l)?.checked_sub(&num(&r)?).ok_or_else(overflow)?),
        BinOp::Mul => Value::Num(num(&l)?.checked_mul(&num(&r)?).ok_or_else(overflow)?),
        BinOp::Div => {
            let d = num(&r)?;
            if d.is_zero() {
                return Err("division by zero".into());
            }
            Value::Num(num(&l)?.checked_div(&d).ok_or_else(overflow)?)
        }
        BinOp::Lt => Value::Bool(num(&l)? < num(&r)?),
        BinOp::Le => Value::Bool(num(&l)? <= num(&r)?),
        BinOp::Gt => Value::Bool(num(&l)? > num(&r)?),
        BinOp::Ge => Value::Bool(num(&l)? >= num(&r)?),
        BinOp::And | BinOp::Or => {
            let (a, b) = (l.as_bool(), r.as_bool());
            match (a, b) {
                (Some(a), Some(b)) => Value::Bool(if op == BinOp::And { a && b } else { a || b }),
                _ => return Err(format!("`{}` expects booleans", op.symbol())),
            }
        }
    })
}

/// Every builtin except `random`, which needs a chooser.
pub fn builtin(b: Builtin, mut args: Vec<Value>) -> Result<Value, String> {
    let name = b.name();
    let first = args.remove(0);
    Ok(match b {
        Builtin::Truncate => Value::Num(num(&first)?.trunc()),
        Builtin::ResEfficiency => Value::Num(num(&first)?),
        Builtin::Random => unreachable!("random is evaluated by the caller"),
        Builtin::Fst | Builtin::Snd => match first {
            Value::Pair(l, r) => {
                if b == Builtin::Fst {
                    *l
                } else {
                    *r
                }
            }
            v => return Err(format!("{name} expects a pair, got {}", v.type_name())),
        },
        Builtin::Pair => Value::Pair(Box::new(first), Box::new(args.remove(0))),
        Builtin::AppendRight => match first {
            Value::List(mut l) => {
                l.push(args.remove(0));
                Value::List(l)
            }
            v => return Err(format!("appendright expects a list, got {}", v.type_name())),
        },
        Builtin::Head | Builtin::Tail | Builtin::IsEmpty => {
            let l = match first {
                Value::List(l) | Value::Set(l) => l,
                v => return Err(format!("{name} expects a list, got {}", v.type_name())),
            };
            match b {
                Builtin::IsEmpty => Value::Bool(l.is_empty()),
                _ if l.is_empty() => return Err(format!("{name} of an empty list")),
                Builtin::Head => l.into_iter().next().unwrap(),
                _ => Value::List(l.into_iter().skip(1).collect()),
            }
        }
    })
}
