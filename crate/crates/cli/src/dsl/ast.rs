use super::Span;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Program {
    pub items: Vec<Item>,
}

impl Program {
    pub fn directives(&self) -> impl Iterator<Item = &Directive> {
        self.items.iter().filter_map(|i| match i {
            Item::Directive(d) => Some(d),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Item {
    Let { name: Ident, value: Expr },
    Signal { name: Ident, value: Value },
    Gadget { name: Ident, kind: Ident, params: Vec<Param> },
    /// `wrapper` is e.g. `slowstop(T, theta)` between the name and the body.
    System { name: Ident, wrapper: Option<(Ident, Vec<Value>)>, stmts: Vec<Stmt> },
    Witness { name: Ident, value: Value },
    Directive(Directive),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    Args(Vec<Ident>),
    Input(Vec<Ident>),
    Deriv(Ident, Expr),
    Init(Vec<Expr>, Span),
    Output(Vec<Ident>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectiveKind {
    Simulate,
    Verify,
    Transform,
}

impl DirectiveKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            DirectiveKind::Simulate => "simulate",
            DirectiveKind::Verify => "verify",
            DirectiveKind::Transform => "transform",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Directive {
    pub kind: DirectiveKind,
    /// System name, check name or transformation name.
    pub target: Ident,
    /// Witness name or file for `transform`.
    pub source: Option<Ident>,
    pub opts: Vec<Param>,
    pub span: Span,
}

impl Directive {
    pub fn opt(&self, key: &str) -> Option<&Value> {
        self.opts.iter().find(|p| p.key.name == key).map(|p| &p.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub key: Ident,
    pub value: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    /// Numeric literal as written, with an optional leading minus.
    Num(String, Span),
    Str(String, Span),
    Ident(Ident),
    Tuple(Vec<Value>, Span),
    Call(Ident, Vec<Value>),
}

impl Value {
    pub fn span(&self) -> Span {
        match self {
            Value::Num(_, s) | Value::Str(_, s) | Value::Tuple(_, s) => *s,
            Value::Ident(i) | Value::Call(i, _) => i.span,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub fn precedence(&self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Num(String),
    Name(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// Integer power, exponent as written.
    Pow(Box<Expr>, String),
    Call { name: Ident, params: Vec<Param>, args: Vec<Expr> },
}
