//! Canonical source rendering of a [`Program`].

use std::fmt::Write;

use crate::lang::{Block, Expr, ExprKind, Program, StmtKind, UnOp};

pub fn pretty(p: &Program) -> String {
    let mut out = String::new();
    writeln!(out, "module {};", p.module_name).unwrap();
    for i in &p.interfaces {
        writeln!(out, "interface {} {{", i.name).unwrap();
        for m in &i.methods {
            writeln!(out, "  {} {}({});", m.return_type, m.name, params(&m.params)).unwrap();
        }
        writeln!(out, "}}").unwrap();
    }
    for c in &p.classes {
        writeln!(out, "class {} implements {} {{", c.name, c.implements).unwrap();
        for f in &c.fields {
            match &f.init {
                Some(e) => writeln!(out, "  {} {} = {};", f.ty, f.name, expr(e)).unwrap(),
                None => writeln!(out, "  {} {};", f.ty, f.name).unwrap(),
            }
        }
        for m in &c.methods {
            writeln!(out, "  {} {}({}) {{", m.return_type, m.name, params(&m.params)).unwrap();
            block(&mut out, &m.body, 2);
            writeln!(out, "  }}").unwrap();
        }
        writeln!(out, "}}").unwrap();
    }
    out.push_str("{\n");
    block(&mut out, &p.main, 1);
    out.push_str("}\n");
    if !p.resources.is_empty() {
        out.push_str("Resources:\n");
        for (i, g) in p.resources.iter().enumerate() {
            if i > 0 {
                out.push_str("$\n");
            }
            for d in &g.descriptors {
                writeln!(
                    out,
                    "{},{},{},{}",
                    d.category, d.efficiency, d.cost_per_unit, d.extra_quality
                )
                .unwrap();
            }
        }
    }
    out
}

fn params(ps: &[crate::lang::Param]) -> String {
    ps.iter()
        .map(|p| format!("{} {}", p.ty, p.name))
        .collect::<Vec<_>>()
        .join(", ")
}

fn block(out: &mut String, b: &Block, depth: usize) {
    let pad = "  ".repeat(depth);
    for s in &b.stmts {
        out.push_str(&pad);
        match &s.kind {
            StmtKind::VarDecl { name, ty, init } => match init {
                Some(e) => writeln!(out, "{ty} {name} = {};", expr(e)).unwrap(),
                None => writeln!(out, "{ty} {name};").unwrap(),
            },
            StmtKind::Assign { target, value } => writeln!(out, "{target} = {};", expr(value)).unwrap(),
            StmtKind::AsyncCall {
                target,
                method,
                callee,
                args,
                after,
                deadline,
            } => {
                let mut all = vec![expr(callee)];
                all.extend(args.iter().map(expr));
                let deps: String = after.iter().map(|f| format!("{f} ")).collect();
                writeln!(
                    out,
                    "{} = !{method}({}) after {deps}dl {};",
                    binding(target),
                    all.join(", "),
                    expr(deadline)
                )
                .unwrap();
            }
            StmtKind::Await { future } => writeln!(out, "await {future}?;").unwrap(),
            StmtKind::Get { target, future } => writeln!(out, "{} = {future}.get;", binding(target)).unwrap(),
            StmtKind::If {
                cond,
                then_block,
                else_block,
            } => {
                writeln!(out, "if ({}) {{", expr(cond)).unwrap();
                block(out, then_block, depth + 1);
                match else_block {
                    Some(e) => {
                        writeln!(out, "{pad}}} else {{").unwrap();
                        block(out, e, depth + 1);
                        writeln!(out, "{pad}}}").unwrap();
                    }
                    None => writeln!(out, "{pad}}}").unwrap(),
                }
            }
            StmtKind::While { cond, body } => {
                writeln!(out, "while ({}) {{", expr(cond)).unwrap();
                block(out, body, depth + 1);
                writeln!(out, "{pad}}}").unwrap();
            }
            StmtKind::Cost(e) => writeln!(out, "cost({});", expr(e)).unwrap(),
            StmtKind::Hold { target, requests } => {
                let reqs: Vec<String> = requests
                    .iter()
                    .map(|r| format!("set[ResEfficiency({}), {}]", r.min_efficiency, r.category))
                    .collect();
                writeln!(out, "{} = hold(list[{}]);", binding(target), reqs.join(", ")).unwrap();
            }
            StmtKind::Release(e) => writeln!(out, "release({});", expr(e)).unwrap(),
            StmtKind::Return(e) => writeln!(out, "return {};", expr(e)).unwrap(),
            StmtKind::New { target, class } => writeln!(out, "{} = new {class}();", binding(target)).unwrap(),
        }
    }
}

fn binding(b: &crate::lang::Binding) -> String {
    match &b.decl {
        Some(ty) => format!("{ty} {}", b.name),
        None => b.name.clone(),
    }
}

pub fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Int(v) => v.to_string(),
        ExprKind::Bool(b) => if *b { "True" } else { "False" }.to_string(),
        ExprKind::Var(v) => v.clone(),
        ExprKind::Param(p) => p.name().to_string(),
        ExprKind::Nil => "Nil".to_string(),
        ExprKind::Unary(op, a) => {
            let sym = match op {
                UnOp::Not => "!",
                UnOp::Neg => "-",
            };
            match a.kind {
                ExprKind::Binary(..) => format!("{sym}({})", expr(a)),
                // avoid `--x` reading as one token in other tools
                ExprKind::Unary(..) | ExprKind::Int(_) if *op == UnOp::Neg => format!("{sym}({})", expr(a)),
                _ => format!("{sym}{}", expr(a)),
            }
        }
        ExprKind::Binary(op, a, b) => {
            let prec = op.precedence();
            let left = match &a.kind {
                ExprKind::Binary(inner, ..) if inner.precedence() < prec => format!("({})", expr(a)),
                _ => expr(a),
            };
            let right = match &b.kind {
                ExprKind::Binary(inner, ..) if inner.precedence() <= prec => format!("({})", expr(b)),
                _ => expr(b),
            };
            format!("{left} {} {right}", op.symbol())
        }
        ExprKind::Call(b, args) => {
            format!("{}({})", b.name(), args.iter().map(expr).collect::<Vec<_>>().join(", "))
        }
        ExprKind::List(items) => format!("list[{}]", items.iter().map(expr).collect::<Vec<_>>().join(", ")),
        ExprKind::Set(items) => format!("set[{}]", items.iter().map(expr).collect::<Vec<_>>().join(", ")),
    }
}
