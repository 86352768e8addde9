use super::*;

/// Canonical text of a program. Parsing the output yields an equal program.
pub fn print_program(prog: &Program) -> String {
    let mut out = String::new();
    let mut prev = None;
    for item in &prog.items {
        let group = match item {
            Item::System { .. } => 1,
            Item::Directive(_) => 2,
            _ => 0,
        };
        if prev.is_some_and(|g| g != group || group == 1) {
            out.push('\n');
        }
        item_text(item, &mut out);
        prev = Some(group);
    }
    out
}

fn item_text(item: &Item, out: &mut String) {
    match item {
        Item::Let { name, value } => out.push_str(&format!("let {} = {};\n", name.name, expr(value))),
        Item::Signal { name, value } => out.push_str(&format!("signal {} = {};\n", name.name, val(value))),
        Item::Witness { name, value } => out.push_str(&format!("witness {} = {};\n", name.name, val(value))),
        Item::Gadget { name, kind, params } => {
            out.push_str(&format!("gadget {} = {}{};\n", name.name, kind.name, param_list(params)))
        }
        Item::System { name, wrapper, stmts } => {
            let w = match wrapper {
                Some((f, vs)) => format!(" {}({})", f.name, vs.iter().map(val).collect::<Vec<_>>().join(", ")),
                None => String::new(),
            };
            out.push_str(&format!("system {}{w} {{\n", name.name));
            for s in stmts {
                let line = match s {
                    Stmt::Args(v) => format!("args {}", names(v)),
                    Stmt::Input(v) => format!("input {}", names(v)),
                    Stmt::Output(v) => format!("output {}", names(v)),
                    Stmt::Deriv(x, e) => format!("{}' = {}", x.name, expr(e)),
                    Stmt::Init(es, _) => format!("init ({})", es.iter().map(expr).collect::<Vec<_>>().join(", ")),
                };
                out.push_str(&format!("  {line};\n"));
            }
            out.push_str("}\n");
        }
        Item::Directive(d) => {
            out.push_str(d.kind.keyword());
            out.push(' ');
            out.push_str(&d.target.name);
            if let Some(s) = &d.source {
                out.push(' ');
                out.push_str(&word(&s.name));
            }
            for p in &d.opts {
                out.push_str(&format!(" {}={}", p.key.name, val(&p.value)));
            }
            out.push_str(";\n");
        }
    }
}

fn names(v: &[Ident]) -> String {
    v.iter().map(|i| i.name.as_str()).collect::<Vec<_>>().join(", ")
}

fn word(s: &str) -> String {
    let mut chars = s.chars();
    let plain = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        && !s.ends_with('-');
    if plain {
        s.to_string()
    } else {
        format!("\"{s}\"")
    }
}

fn param_list(ps: &[Param]) -> String {
    if ps.is_empty() {
        return String::new();
    }
    let inner: Vec<String> = ps.iter().map(|p| format!("{}={}", p.key.name, val(&p.value))).collect();
    format!("[{}]", inner.join(", "))
}

fn val(v: &Value) -> String {
    match v {
        Value::Num(n, _) => n.clone(),
        Value::Str(s, _) => format!("\"{s}\""),
        Value::Ident(i) => i.name.clone(),
        Value::Tuple(vs, _) => format!("({})", vs.iter().map(val).collect::<Vec<_>>().join(", ")),
        Value::Call(f, vs) => format!("{}({})", f.name, vs.iter().map(val).collect::<Vec<_>>().join(", ")),
    }
}

/// Binding strength: 1 additive, 2 multiplicative, 3 unary minus, 4 power, 5 atoms.
fn strength(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Bin(op, ..) => op.precedence(),
        ExprKind::Neg(_) => 3,
        ExprKind::Pow(..) => 4,
        _ => 5,
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    let s = expr(e);
    if strength(e) < min {
        format!("({s})")
    } else {
        s
    }
}

pub(crate) fn expr(e: &Expr) -> String {
    match &e.kind {
        ExprKind::Num(n) => n.clone(),
        ExprKind::Name(n) => n.clone(),
        ExprKind::Neg(x) => format!("-{}", wrap(x, 3)),
        ExprKind::Pow(b, k) => format!("{}^{k}", wrap(b, 5)),
        ExprKind::Bin(op, l, r) => {
            let p = op.precedence();
            format!("{} {} {}", wrap(l, p), op.symbol(), wrap(r, p + 1))
        }
        ExprKind::Call { name, params, args } => {
            format!("{}{}({})", name.name, param_list(params), args.iter().map(expr).collect::<Vec<_>>().join(", "))
        }
    }
}
