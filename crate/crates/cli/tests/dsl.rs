use odeprog_cli::dsl::{parse, parse_program, print_program, elaborate, ErrorKind, Item};
use proptest::prelude::*;

const SINE: &str = "system sine { y1' = y2; y2' = -y1; init (0, 1); output y1 }";

#[test]
fn sine_system_has_two_states() {
    let prog = parse_program(SINE).unwrap();
    let env = elaborate(&prog).unwrap();
    let def = &env.systems["sine"];
    assert_eq!(def.dim(), 2);
    assert_eq!(def.output_names(), vec!["y1"]);
    let (p, cert) = def.lowered.as_ref().unwrap();
    assert_eq!(p.dim, 2);
    assert!(cert.aux.is_empty());
    assert_eq!(p.initial_state(&[]).unwrap(), vec![0.0, 1.0]);
}

#[test]
fn empty_program_has_no_directives() {
    for src in ["", "   \n# only a comment\n"] {
        let prog = parse_program(src).unwrap();
        assert!(prog.items.is_empty());
        assert_eq!(prog.directives().count(), 0);
    }
}

#[test]
fn plil_window_outside_period_is_rejected() {
    let err = parse_program("gadget p = plil[I=(3, 5), tau=4];").unwrap_err();
    assert_eq!(err.kind, ErrorKind::Invariant);
    assert_eq!((err.span.line, err.span.col), (1, 12));
    assert!(err.message.contains("[3, 5]"), "{}", err.message);
    let inline = "system s { y' = plil[I=(3,5), tau=4](t, 1, y) }";
    assert_eq!(parse_program(inline).unwrap_err().kind, ErrorKind::Invariant);
}

#[test]
fn unknown_names_report_their_location() {
    let err = parse_program("system s {\n  y' = z + 1\n}").unwrap_err();
    assert_eq!(err.kind, ErrorKind::Name);
    assert_eq!((err.span.line, err.span.col), (2, 8));
    assert!(err.to_string().starts_with("2:8: unknown name"));
    let err = parse_program("simulate nothing;").unwrap_err();
    assert_eq!(err.kind, ErrorKind::Name);
    let err = parse_program("verify no-such-check;").unwrap_err();
    assert_eq!(err.kind, ErrorKind::Name);
}

#[test]
fn arity_errors() {
    let cases = [
        "system s { y' = tanh(y, y) }",
        "system s { y' = reach(1, y) }",
        "system s { y' = -y; init (1, 2) }",
        "system s { y' = sabs(y) }",
        "signal u = sine(1);",
    ];
    for src in cases {
        assert_eq!(parse_program(src).unwrap_err().kind, ErrorKind::Arity, "{src}");
    }
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let err = parse("system s {\n  y' = (y + ;\n}").unwrap_err();
    assert_eq!(err.kind, ErrorKind::Syntax);
    assert_eq!(err.span.line, 2);
    assert_eq!(parse("let a = 2 ^ x;").unwrap_err().kind, ErrorKind::Syntax);
    assert_eq!(parse("let s = \"open").unwrap_err().kind, ErrorKind::Syntax);
}

#[test]
fn lets_expand_with_cycle_detection() {
    let ok = "let k = 3/2; let rate = k * mu; system s { input mu; y' = rate * (1 - y) }";
    let env = elaborate(&parse(ok).unwrap()).unwrap();
    let sys = &env.systems["s"].system;
    let mut out = [0.0];
    sys.eval_rhs(0.0, &[0.5], &[2.0], &mut out).unwrap();
    assert!((out[0] - 1.5).abs() < 1e-15);
    let cyc = "let a = b + 1; let b = a; system s { y' = a }";
    assert_eq!(parse_program(cyc).unwrap_err().kind, ErrorKind::Invariant);
    assert_eq!(parse_program("let a = q;").unwrap_err().kind, ErrorKind::Name);
}

#[test]
fn decimals_are_exact() {
    let env = elaborate(&parse("system s { y' = 0.1 + 2.5e-1 * t; init (1e2) }").unwrap()).unwrap();
    let sys = &env.systems["s"].system;
    assert_eq!(sys.initial_state(&[]).unwrap(), vec![100.0]);
    let mut out = [0.0];
    sys.eval_rhs(2.0, &[0.0], &[], &mut out).unwrap();
    assert_eq!(out[0], 0.6);
    assert_eq!(odeprog_cli::dsl::decimal("0.1").unwrap().to_string(), "1/10");
    assert_eq!(odeprog_cli::dsl::decimal("-12.5e-3").unwrap().to_string(), "-1/80");
}

#[test]
fn slowstop_wrapper_builds_the_wrapped_system() {
    let env = elaborate(&parse("system g slowstop(2, 1) { y' = 1; init (0) }").unwrap()).unwrap();
    let ss = env.systems["g"].slowstop.as_ref().unwrap();
    assert_eq!(ss.spec.t_stop, 2.0);
    let bad = "system g slowstop(2, 1) { y' = tanh(y) }";
    assert_eq!(parse_program(bad).unwrap_err().kind, ErrorKind::Invariant);
}

#[test]
fn demo_programs_elaborate_and_print_canonically() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demos");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("odp") {
            continue;
        }
        let src = std::fs::read_to_string(&path).unwrap();
        let prog = parse_program(&src).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let text = print_program(&prog);
        let again = parse(&text).unwrap();
        assert_eq!(again, prog, "{}", path.display());
        assert_eq!(print_program(&again), text);
        n += 1;
    }
    assert!(n >= 7);
}

#[test]
fn printing_keeps_needed_parentheses() {
    let src = "let a = -(x + 1)^2 * (y - z) / (2 * w) - -3;";
    let prog = parse(src).unwrap();
    let text = print_program(&prog);
    assert_eq!(text, "let a = -(x + 1)^2 * (y - z) / (2 * w) - -3;\n");
    let Item::Let { .. } = &prog.items[0] else { panic!() };
}

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (0u32..100).prop_map(|n| n.to_string()),
        (0u32..100, 1u32..100).prop_map(|(a, b)| format!("{a}.{b}")),
        prop::sample::select(vec!["x", "y", "t", "mu"]).prop_map(String::from),
    ];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/"]), inner.clone()).prop_map(|(a, o, b)| format!("{a} {o} {b}")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("({a})")),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            inner.clone().prop_map(|a| format!("tanh({a})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("norm[delta=0.5]({a}, {b})")),
        ]
    })
}

proptest! {
    #[test]
    fn parse_print_parse_is_a_fixpoint(e in expr_text(), f in expr_text()) {
        let src = format!("let a = {e};\nsystem s {{ input x, mu; y' = {f}; output y }}\nsimulate s horizon=2 inputs=(u, v);");
        let prog = parse(&src).unwrap();
        let text = print_program(&prog);
        let again = parse(&text).unwrap();
        prop_assert_eq!(&again, &prog);
        prop_assert_eq!(print_program(&again), text);
    }
}
