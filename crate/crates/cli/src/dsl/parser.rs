use super::lexer::{lex, Tok, Token};
use super::*;

pub fn parse(src: &str) -> Result<Program, DslError> {
    let toks = lex(src)?;
    let end = toks.last().map(|t| Span { offset: t.span.offset + t.span.len, len: 0, ..t.span }).unwrap_or(Span {
        offset: 0,
        len: 0,
        line: 1,
        col: 1,
    });
    let mut p = Parser { toks, pos: 0, end };
    let mut items = Vec::new();
    while !p.done() {
        items.push(p.item()?);
    }
    Ok(Program { items })
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: Span,
}

const KEYWORDS: &[&str] = &["let", "signal", "gadget", "system", "witness", "simulate", "verify", "transform"];

impl Parser {
    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.toks.get(self.pos + k).map(|t| &t.tok)
    }

    fn span(&self) -> Span {
        self.toks.get(self.pos).map(|t| t.span).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn unexpected(&self, what: &str) -> DslError {
        match self.toks.get(self.pos) {
            Some(t) => DslError::syntax(t.span, format!("expected {what}, found {}", t.tok.describe())),
            None => DslError::syntax(self.end, format!("expected {what}, found end of input")),
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, DslError> {
        if self.peek() == Some(&tok) {
            Ok(self.bump().expect("token").span)
        } else {
            Err(self.unexpected(&format!("`{}`", tok.symbol())))
        }
    }

    fn ident(&mut self) -> Result<Ident, DslError> {
        match self.peek() {
            Some(Tok::Ident(_)) => {
                let t = self.bump().expect("token");
                let Tok::Ident(name) = t.tok else { unreachable!() };
                Ok(Ident { name, span: t.span })
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn keyword(&self) -> Option<&str> {
        match self.peek() {
            Some(Tok::Ident(s)) if KEYWORDS.contains(&s.as_str()) => Some(s.as_str()),
            _ => None,
        }
    }

    fn item(&mut self) -> Result<Item, DslError> {
        let kw = self.keyword().ok_or_else(|| self.unexpected("a declaration or directive"))?.to_string();
        let kw_span = self.span();
        self.pos += 1;
        let item = match kw.as_str() {
            "let" => {
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                Item::Let { name, value: self.expr()? }
            }
            "signal" => {
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                Item::Signal { name, value: self.value()? }
            }
            "witness" => {
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                Item::Witness { name, value: self.value()? }
            }
            "gadget" => {
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                let kind = self.ident()?;
                let params = if self.peek() == Some(&Tok::LBracket) { self.params()? } else { Vec::new() };
                Item::Gadget { name, kind, params }
            }
            "system" => self.system()?,
            _ => {
                let kind = match kw.as_str() {
                    "simulate" => DirectiveKind::Simulate,
                    "verify" => DirectiveKind::Verify,
                    _ => DirectiveKind::Transform,
                };
                let target = if kind == DirectiveKind::Simulate { self.ident()? } else { self.word(false)? };
                let source = if kind == DirectiveKind::Transform { Some(self.word(true)?) } else { None };
                let mut opts = Vec::new();
                while matches!(self.peek(), Some(Tok::Ident(_))) && self.peek_at(1) == Some(&Tok::Eq) {
                    opts.push(self.param()?);
                }
                Item::Directive(Directive { kind, target, source, opts, span: kw_span })
            }
        };
        self.eat(&Tok::Semi);
        Ok(item)
    }

    /// Adjacent tokens joined into one name, e.g. `tanh-bound` or `out/w.json`.
    fn word(&mut self, path: bool) -> Result<Ident, DslError> {
        if path {
            if let Some(Tok::Str(_)) = self.peek() {
                let t = self.bump().expect("token");
                let Tok::Str(s) = t.tok else { unreachable!() };
                return Ok(Ident { name: s, span: t.span });
            }
        }
        let first = self.ident()?;
        let mut name = first.name.clone();
        let mut last = first.span;
        while let Some(t) = self.toks.get(self.pos) {
            if t.span.offset != last.offset + last.len {
                break;
            }
            let piece = match &t.tok {
                Tok::Ident(s) | Tok::Num(s) => s.clone(),
                Tok::Minus => "-".into(),
                Tok::Dot | Tok::Slash if path => t.tok.symbol().into(),
                _ => break,
            };
            name.push_str(&piece);
            last = t.span;
            self.pos += 1;
        }
        if name.ends_with('-') {
            return Err(DslError::syntax(last, "name cannot end with `-`"));
        }
        Ok(Ident { name, span: Span { len: last.offset + last.len - first.span.offset, ..first.span } })
    }

    fn system(&mut self) -> Result<Item, DslError> {
        let name = self.ident()?;
        let wrapper = match self.peek() {
            Some(Tok::Ident(_)) => {
                let w = self.ident()?;
                match self.value()? {
                    Value::Tuple(vs, _) => Some((w, vs)),
                    other => return Err(DslError::syntax(other.span(), "expected wrapper arguments in parentheses")),
                }
            }
            _ => None,
        };
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        loop {
            while self.eat(&Tok::Semi) {}
            if self.eat(&Tok::RBrace) {
                break;
            }
            let head = self.ident()?;
            let stmt = match head.name.as_str() {
                "args" => Stmt::Args(self.ident_list()?),
                "input" => Stmt::Input(self.ident_list()?),
                "output" => Stmt::Output(self.ident_list()?),
                "init" if self.peek() == Some(&Tok::LParen) => {
                    self.expect(Tok::LParen)?;
                    let mut es = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            es.push(self.expr()?);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(Tok::Comma)?;
                        }
                    }
                    Stmt::Init(es, head.span)
                }
                _ => {
                    self.expect(Tok::Prime).map_err(|_| self.unexpected("`'` after a state name"))?;
                    self.expect(Tok::Eq)?;
                    Stmt::Deriv(head, self.expr()?)
                }
            };
            stmts.push(stmt);
            if self.peek() != Some(&Tok::RBrace) {
                self.expect(Tok::Semi)?;
            }
        }
        Ok(Item::System { name, wrapper, stmts })
    }

    fn ident_list(&mut self) -> Result<Vec<Ident>, DslError> {
        let mut v = vec![self.ident()?];
        while self.eat(&Tok::Comma) {
            v.push(self.ident()?);
        }
        Ok(v)
    }

    fn params(&mut self) -> Result<Vec<Param>, DslError> {
        self.expect(Tok::LBracket)?;
        let mut ps = Vec::new();
        if self.eat(&Tok::RBracket) {
            return Ok(ps);
        }
        loop {
            ps.push(self.param()?);
            if self.eat(&Tok::RBracket) {
                return Ok(ps);
            }
            self.expect(Tok::Comma)?;
        }
    }

    fn param(&mut self) -> Result<Param, DslError> {
        let key = self.ident()?;
        self.expect(Tok::Eq)?;
        Ok(Param { key, value: self.value()? })
    }

    fn value(&mut self) -> Result<Value, DslError> {
        let sp = self.span();
        match self.peek().cloned() {
            Some(Tok::Minus) => {
                self.pos += 1;
                match self.bump().map(|t| t.tok) {
                    Some(Tok::Num(n)) => Ok(Value::Num(format!("-{n}"), sp)),
                    _ => {
                        self.pos -= 1;
                        Err(self.unexpected("a number after `-`"))
                    }
                }
            }
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Value::Num(n, sp))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Value::Str(s, sp))
            }
            Some(Tok::Ident(_)) => {
                let id = self.ident()?;
                if self.peek() == Some(&Tok::LParen) {
                    let Value::Tuple(vs, _) = self.value()? else { unreachable!() };
                    Ok(Value::Call(id, vs))
                } else {
                    Ok(Value::Ident(id))
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let mut vs = Vec::new();
                if !self.eat(&Tok::RParen) {
                    loop {
                        vs.push(self.value()?);
                        if self.eat(&Tok::RParen) {
                            break;
                        }
                        self.expect(Tok::Comma)?;
                    }
                }
                Ok(Value::Tuple(vs, sp))
            }
            _ => Err(self.unexpected("a value")),
        }
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            let span = lhs.span;
            lhs = Expr { kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), span };
        }
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            let span = lhs.span;
            lhs = Expr { kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)), span };
        }
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        let span = self.span();
        if self.eat(&Tok::Minus) {
            let inner = self.unary()?;
            return Ok(Expr { kind: ExprKind::Neg(Box::new(inner)), span });
        }
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            let sp = self.span();
            match self.bump().map(|t| t.tok) {
                Some(Tok::Num(n)) if n.bytes().all(|b| b.is_ascii_digit()) => {
                    return Ok(Expr { kind: ExprKind::Pow(Box::new(base), n), span });
                }
                _ => return Err(DslError::syntax(sp, "exponent must be a nonnegative integer literal")),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, DslError> {
        let span = self.span();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.pos += 1;
                Ok(Expr { kind: ExprKind::Num(n), span })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Some(Tok::Ident(_)) => {
                let name = self.ident()?;
                let params = if self.peek() == Some(&Tok::LBracket) { Some(self.params()?) } else { None };
                if self.eat(&Tok::LParen) {
                    let mut args = Vec::new();
                    if !self.eat(&Tok::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(&Tok::RParen) {
                                break;
                            }
                            self.expect(Tok::Comma)?;
                        }
                    }
                    Ok(Expr { kind: ExprKind::Call { name, params: params.unwrap_or_default(), args }, span })
                } else if params.is_some() {
                    Err(self.unexpected("`(` after gadget parameters"))
                } else {
                    Ok(Expr { kind: ExprKind::Name(name.name), span })
                }
            }
            _ => Err(self.unexpected("an expression")),
        }
    }
}
