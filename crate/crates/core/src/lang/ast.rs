//! Abstract syntax of RPL models.

use serde::Serialize;

use super::resources::ResourceGroup;

/// Position of a syntax node in the source text. Lines and columns are 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SourceSpan {
    pub line: u32,
    pub column: u32,
    pub length: u32,
}

impl SourceSpan {
    pub fn new(line: u32, column: u32, length: u32) -> Self {
        Self { line, column, length }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Type {
    pub name: String,
    pub args: Vec<Type>,
}

impl Type {
    pub fn simple(name: impl Into<String>) -> Self {
        Self { name: name.into(), args: Vec::new() }
    }

    pub fn generic(name: impl Into<String>, args: Vec<Type>) -> Self {
        Self { name: name.into(), args }
    }

    pub fn is_future(&self) -> bool {
        self.name == "Fut"
    }
}

impl std::fmt::Display for Type {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name)?;
        if !self.args.is_empty() {
            f.write_str("<")?;
            for (i, a) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(">")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub module_name: String,
    pub interfaces: Vec<InterfaceDecl>,
    pub classes: Vec<ClassDecl>,
    pub main: Block,
    pub resources: Vec<ResourceGroup>,
}

impl Program {
    pub fn interface(&self, name: &str) -> Option<&InterfaceDecl> {
        self.interfaces.iter().find(|i| i.name == name)
    }

    pub fn class(&self, name: &str) -> Option<&ClassDecl> {
        self.classes.iter().find(|c| c.name == name)
    }

    /// Classes whose values may inhabit the static type `name`: the class itself,
    /// or every class implementing the interface `name`.
    pub fn implementors<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a ClassDecl> + 'a {
        self.classes
            .iter()
            .filter(move |c| c.name == name || c.implements == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSig {
    pub name: String,
    pub return_type: Type,
    pub params: Vec<Param>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceDecl {
    pub name: String,
    pub methods: Vec<MethodSig>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldDecl {
    pub name: String,
    pub ty: Type,
    pub init: Option<Expr>,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodDecl {
    pub name: String,
    pub return_type: Type,
    pub params: Vec<Param>,
    pub body: Block,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDecl {
    pub name: String,
    pub implements: String,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub span: SourceSpan,
}

impl ClassDecl {
    pub fn method(&self, name: &str) -> Option<&MethodDecl> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn field(&self, name: &str) -> Option<&FieldDecl> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
}

/// Left-hand side of a binding statement, optionally declaring the variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Binding {
    pub name: String,
    pub decl: Option<Type>,
}

/// One unit of a `hold` request: `set[ResEfficiency(n), Category]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ResourceRequest {
    pub category: String,
    pub min_efficiency: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: SourceSpan,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    VarDecl {
        name: String,
        ty: Type,
        init: Option<Expr>,
    },
    Assign {
        target: String,
        value: Expr,
    },
    /// `f = !m(callee, args..) after f1 f2 dl d;`
    AsyncCall {
        target: Binding,
        method: String,
        callee: Expr,
        args: Vec<Expr>,
        after: Vec<String>,
        deadline: Expr,
    },
    Await {
        future: String,
    },
    Get {
        target: Binding,
        future: String,
    },
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
    },
    While {
        cond: Expr,
        body: Block,
    },
    Cost(Expr),
    Hold {
        target: Binding,
        requests: Vec<ResourceRequest>,
    },
    Release(Expr),
    Return(Expr),
    New {
        target: Binding,
        class: String,
    },
}

/// Model parameters left symbolic by the time analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelParam {
    Efficiency,
    ConcCases,
    Availability,
}

impl ModelParam {
    pub fn name(self) -> &'static str {
        match self {
            ModelParam::Efficiency => "EFFICIENCY",
            ModelParam::ConcCases => "CONC_CASES",
            ModelParam::Availability => "AVAILABILITY",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "EFFICIENCY" => Some(ModelParam::Efficiency),
            "CONC_CASES" => Some(ModelParam::ConcCases),
            "AVAILABILITY" => Some(ModelParam::Availability),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    Truncate,
    Random,
    Fst,
    Snd,
    Pair,
    AppendRight,
    Head,
    Tail,
    IsEmpty,
    ResEfficiency,
}

impl Builtin {
    pub const ALL: [Builtin; 10] = [
        Builtin::Truncate,
        Builtin::Random,
        Builtin::Fst,
        Builtin::Snd,
        Builtin::Pair,
        Builtin::AppendRight,
        Builtin::Head,
        Builtin::Tail,
        Builtin::IsEmpty,
        Builtin::ResEfficiency,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Truncate => "truncate",
            Builtin::Random => "random",
            Builtin::Fst => "fst",
            Builtin::Snd => "snd",
            Builtin::Pair => "Pair",
            Builtin::AppendRight => "appendright",
            Builtin::Head => "head",
            Builtin::Tail => "tail",
            Builtin::IsEmpty => "isEmpty",
            Builtin::ResEfficiency => "ResEfficiency",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == s)
    }

    pub fn arity(self) -> usize {
        match self {
            Builtin::Pair | Builtin::AppendRight => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: SourceSpan,
}

impl Expr {
    pub fn new(kind: ExprKind, span: SourceSpan) -> Self {
        Self { kind, span }
    }

    pub fn int(v: i64) -> Self {
        Self::new(ExprKind::Int(v), SourceSpan::default())
    }

    pub fn var(name: &str) -> Self {
        Self::new(ExprKind::Var(name.to_string()), SourceSpan::default())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int(i64),
    Bool(bool),
    Var(String),
    Param(ModelParam),
    Nil,
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Builtin, Vec<Expr>),
    List(Vec<Expr>),
    Set(Vec<Expr>),
}

/// Resets every span to the default so that two programs can be compared by shape alone.
pub fn strip_spans(p: &mut Program) {
    for i in &mut p.interfaces {
        i.span = SourceSpan::default();
        for m in &mut i.methods {
            m.span = SourceSpan::default();
        }
    }
    for c in &mut p.classes {
        c.span = SourceSpan::default();
        for f in &mut c.fields {
            f.span = SourceSpan::default();
            if let Some(e) = &mut f.init {
                strip_expr(e);
            }
        }
        for m in &mut c.methods {
            m.span = SourceSpan::default();
            strip_block(&mut m.body);
        }
    }
    strip_block(&mut p.main);
}

fn strip_block(b: &mut Block) {
    for s in &mut b.stmts {
        s.span = SourceSpan::default();
        match &mut s.kind {
            StmtKind::VarDecl { init, .. } => {
                if let Some(e) = init {
                    strip_expr(e);
                }
            }
            StmtKind::Assign { value, .. } => strip_expr(value),
            StmtKind::AsyncCall { callee, args, deadline, .. } => {
                strip_expr(callee);
                args.iter_mut().for_each(strip_expr);
                strip_expr(deadline);
            }
            StmtKind::If { cond, then_block, else_block } => {
                strip_expr(cond);
                strip_block(then_block);
                if let Some(b) = else_block {
                    strip_block(b);
                }
            }
            StmtKind::While { cond, body } => {
                strip_expr(cond);
                strip_block(body);
            }
            StmtKind::Cost(e) | StmtKind::Release(e) | StmtKind::Return(e) => strip_expr(e),
            StmtKind::Await { .. } | StmtKind::Get { .. } | StmtKind::Hold { .. } | StmtKind::New { .. } => {}
        }
    }
}

fn strip_expr(e: &mut Expr) {
    e.span = SourceSpan::default();
    match &mut e.kind {
        ExprKind::Unary(_, a) => strip_expr(a),
        ExprKind::Binary(_, a, b) => {
            strip_expr(a);
            strip_expr(b);
        }
        ExprKind::Call(_, args) | ExprKind::List(args) | ExprKind::Set(args) => {
            args.iter_mut().for_each(strip_expr)
        }
        ExprKind::Int(_) | ExprKind::Bool(_) | ExprKind::Var(_) | ExprKind::Param(_) | ExprKind::Nil => {}
    }
}

/// Visits every statement of a block, recursing into nested blocks.
pub fn walk_stmts<'a>(b: &'a Block, f: &mut impl FnMut(&'a Stmt)) {
    for s in &b.stmts {
        f(s);
        match &s.kind {
            StmtKind::If { then_block, else_block, .. } => {
                walk_stmts(then_block, f);
                if let Some(e) = else_block {
                    walk_stmts(e, f);
                }
            }
            StmtKind::While { body, .. } => walk_stmts(body, f),
            _ => {}
        }
    }
}
