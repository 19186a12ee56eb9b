//! RPL front end: lexing, parsing, validation, pretty-printing and outlines.

pub mod diag;
mod grammar;
pub mod lexer;
pub mod outline;
pub mod pretty;
pub mod validate;

pub use diag::{ParseDiagnostic, Severity};
pub use outline::{outline, OutlineEntry, OutlineKind};
pub use pretty::pretty;

use crate::lang::Program;

/// Parse result together with every diagnostic (warnings included).
#[derive(Debug, Clone)]
pub struct ParseOutput {
    pub program: Option<Program>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl ParseOutput {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(ParseDiagnostic::is_error)
    }
}

/// Parses and validates preprocessed source. On failure every collected diagnostic is returned.
pub fn parse(source: &str) -> Result<Program, Vec<ParseDiagnostic>> {
    let out = parse_with_diagnostics(source);
    match out.program {
        Some(p) if !out.has_errors() => Ok(p),
        _ => Err(out.diagnostics),
    }
}

pub fn parse_with_diagnostics(source: &str) -> ParseOutput {
    let tokens = match lexer::lex(source) {
        Ok(t) => t,
        Err(diagnostics) => {
            return ParseOutput {
                program: None,
                diagnostics,
            }
        }
    };
    let mut parser = grammar::Parser::new(tokens);
    let result = parser.program();
    let mut diagnostics = std::mem::take(&mut parser.diags);
    let program = match result {
        Ok(p) => {
            if !diagnostics.iter().any(ParseDiagnostic::is_error) {
                diagnostics.extend(validate::validate(&p));
            }
            Some(p)
        }
        Err(d) => {
            diagnostics.push(d);
            None
        }
    };
    diagnostics.sort_by_key(|d| (d.span.line, d.span.column));
    ParseOutput { program, diagnostics }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::{preprocess, strip_spans, ExprKind, Profile, SourceSpan, StmtKind};

    const SUPPLY: &str = include_str!("../../corpus/supply.rpl");

    fn supply() -> Program {
        parse(&preprocess(SUPPLY, &Profile::default()).unwrap()).unwrap()
    }

    #[test]
    fn supply_model_structure() {
        let out = parse_with_diagnostics(&preprocess(SUPPLY, &Profile::default()).unwrap());
        assert!(out.diagnostics.is_empty(), "{:?}", out.diagnostics);
        let p = out.program.unwrap();
        assert_eq!(p.module_name, "Retail");
        assert_eq!(p.interfaces.len(), 4);
        assert_eq!(p.classes.len(), 4);
        let sizes: Vec<_> = p.resources.iter().map(|g| (g.category().to_string(), g.len())).collect();
        assert_eq!(
            sizes,
            [("Van".to_string(), 8), ("Driver".to_string(), 8), ("Helper".to_string(), 4)]
        );
        assert_eq!(p.resources[2].descriptors[1].id, 18);
        assert_eq!(p.resources[2].descriptors[1].cost_per_unit, 450);
    }

    #[test]
    fn minimal_program() {
        let p = parse("module M; {  }").unwrap();
        assert!(p.main.stmts.is_empty());
        assert!(p.classes.is_empty());
        assert!(p.resources.is_empty());
    }

    #[test]
    fn async_call_without_dependencies() {
        let p = supply();
        let order = p.class("Retailer").unwrap().method("process_order").unwrap();
        let mut found = None;
        crate::lang::walk_stmts(&order.body, &mut |s| {
            if let StmtKind::AsyncCall { method, after, deadline, .. } = &s.kind {
                if method == "order_goods" {
                    found = Some((after.clone(), deadline.kind.clone(), s.span.line));
                }
            }
        });
        let (after, deadline, line) = found.unwrap();
        assert!(after.is_empty());
        assert_eq!(deadline, ExprKind::Int(220));
        assert_eq!(line, 21);
    }

    #[test]
    fn check_goods_call_sits_on_line_12() {
        let p = supply();
        let order = p.class("Retailer").unwrap().method("process_order").unwrap();
        let s = &order.body.stmts[4];
        assert!(matches!(&s.kind, StmtKind::AsyncCall { method, .. } if method == "check_goods"));
        assert_eq!(s.span.line, 12);
    }

    #[test]
    fn outline_lists_classes_and_methods() {
        let entries = outline(&supply());
        assert!(entries
            .iter()
            .any(|e| e.kind == OutlineKind::Class && e.name == "Retailer" && e.line == 6));
        assert!(entries
            .iter()
            .any(|e| e.kind == OutlineKind::Method && e.name == "process_order" && e.line == 8));
        assert!(entries.windows(2).all(|w| (w[0].line, w[0].column) <= (w[1].line, w[1].column)));
    }

    #[test]
    fn outline_of_empty_program() {
        assert!(outline(&parse("module M; { }").unwrap()).is_empty());
    }

    #[test]
    fn outline_counts_class_and_methods() {
        let src = "module M;\ninterface I { }\nclass C implements I {\n  Int a() { return 1; }\n  Int b() { return 2; }\n}\n{ }";
        let entries = outline(&parse(src).unwrap());
        let class_or_method = entries.iter().filter(|e| e.kind != OutlineKind::Interface).count();
        assert_eq!(class_or_method, 3);
    }

    #[test]
    fn syntax_error_has_span() {
        let errs = parse("module M;\n{\n  Int x = ;\n}").unwrap_err();
        assert_eq!(errs[0].span.line, 3);
        assert!(errs[0].is_error());
    }

    #[test]
    fn resynchronises_after_bad_statement() {
        let errs = parse("module M;\n{\n  Int x = ;\n  Int y = 2 2;\n  Int z = 3;\n}").unwrap_err();
        let lines: Vec<_> = errs.iter().map(|d| d.span.line).collect();
        assert_eq!(lines, [3, 4]);
    }

    #[test]
    fn undeclared_method_is_rejected() {
        let src = SUPPLY.replace("!check_goods(wr)", "!check_stock(wr)");
        let errs = parse(&preprocess(&src, &Profile::default()).unwrap()).unwrap_err();
        assert!(errs.iter().any(|d| d.message.contains("`check_stock` is not declared on `Warehouse`")));
    }

    #[test]
    fn arity_mismatch_is_rejected() {
        let src = SUPPLY.replace("!deliver_goods(cr) after f2", "!deliver_goods(cr, 3) after f2");
        let errs = parse(&preprocess(&src, &Profile::default()).unwrap()).unwrap_err();
        assert!(errs
            .iter()
            .any(|d| d.message.contains("expects 0 argument(s) after the callee, got 1") && d.span.line == 22));
    }

    #[test]
    fn unknown_type_is_rejected() {
        let errs = parse("module M;\n{\n  Truck t;\n}").unwrap_err();
        assert_eq!(errs[0].message, "unknown type `Truck`");
        assert_eq!(errs[0].span, SourceSpan::new(3, 3, 8));
    }

    #[test]
    fn undeclared_after_future_is_rejected() {
        let src = SUPPLY.replace("after f2 dl 170", "after f9 dl 170");
        let errs = parse(&preprocess(&src, &Profile::default()).unwrap()).unwrap_err();
        assert!(errs.iter().any(|d| d.message == "undeclared future `f9`"));
    }

    #[test]
    fn missing_return_is_rejected() {
        let src = "module M;\ninterface I { Int a(); }\nclass C implements I {\n  Int a() { cost(1); }\n}\n{ }";
        let errs = parse(src).unwrap_err();
        assert!(errs[0].message.contains("does not return on every path"));
    }

    #[test]
    fn mixed_group_is_rejected() {
        let errs = parse("module M; { }\nResources:\nVan,1,2,3\nDriver,1,2,3\n").unwrap_err();
        assert!(errs[0].message.contains("mixes categories"));
    }

    #[test]
    fn pretty_print_reparses_to_same_shape() {
        let mut a = supply();
        let mut b = parse(&pretty(&a)).unwrap();
        strip_spans(&mut a);
        strip_spans(&mut b);
        assert_eq!(a, b);
    }
}
