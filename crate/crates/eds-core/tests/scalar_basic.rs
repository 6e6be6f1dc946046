use std::collections::BTreeMap;

use eds_core::scalar::{
    decide_zero, expr, is_zero_default, parse_expr, rat_i, rat_q, Assumptions, Expr, FnSym,
    SampleSpec, SymbolTable, Verdict, ZeroPolicy,
};

fn zero_eq(a: &Expr, b: &Expr) {
    let d = a.sub(b).cleared();
    assert!(d.is_zero_expr(), "expected equal canonical forms, difference = {d}");
}

#[test]
fn arithmetic_canonicalization() {
    zero_eq(&expr("(x + y)^2"), &expr("x^2 + 2*x*y + y^2"));
    zero_eq(&expr("x/x"), &Expr::one());
    zero_eq(&expr("2/4"), &expr("1/2"));
    zero_eq(&expr("x^3 * x^(-1)"), &expr("x^2"));
    zero_eq(&expr("(2*x)^3"), &expr("8*x^3"));
    zero_eq(&expr("0.25*x"), &expr("x/4"));
    assert_eq!(expr("x - x"), Expr::zero());
}

#[test]
fn power_content_extraction() {
    // constants leave the radical
    zero_eq(&expr("(4*x^2)^(1/2)"), &expr("2*(x^2)^(1/2)"));
    zero_eq(&expr("(9 + 9*x)^(1/2)"), &expr("3*(1 + x)^(1/2)"));
    // shared atom powers leave the radical
    zero_eq(&expr("(x^2*y + x^2*z)^(1/2)"), &expr("x^2*(y + z)").pow_rat(&rat_q(1, 2)));
    // negative integer powers expand through a sign flip
    zero_eq(&expr("(-x - 1)^(-2)"), &expr("(x + 1)^(-2)"));
    // integer powers of sums always expand
    assert_eq!(expr("(x + 1)^3").num_terms(), 4);
}

#[test]
fn radical_arithmetic() {
    // (1+x)^(1/2) * (1+x)^(1/2) = 1 + x
    let r = expr("(1 + x)^(1/2)");
    zero_eq(&r.mul(&r), &expr("1 + x"));
    // sqrt parses as the half power
    zero_eq(&expr("sqrt(1 + x)"), &r);
    // sqrt(2)*sqrt(2) = 2
    zero_eq(&expr("sqrt(2)*sqrt(2)"), &expr("2"));
}

#[test]
fn exp_log_rules() {
    zero_eq(&expr("exp(x)*exp(y)"), &expr("exp(x + y)"));
    zero_eq(&expr("exp(0)"), &Expr::one());
    zero_eq(&expr("log(exp(x))"), &expr("x"));
    zero_eq(&expr("exp(2*log(u))"), &expr("u^2"));
    zero_eq(&expr("exp(x)^3"), &expr("exp(3*x)"));
}

#[test]
fn hyperbolics_rewrite_to_exp() {
    // cosh^2 - sinh^2 = 1 becomes exact after the exp rewrite
    zero_eq(&expr("cosh(u)^2 - sinh(u)^2"), &Expr::one());
    // sech u = 2 e^u / (1 + e^{2u}) after normalization against the shared exp orbit
    zero_eq(&expr("sech(w)"), &expr("2*exp(w) / (1 + exp(2*w))"));
    zero_eq(&expr("tanh(w)"), &expr("(exp(2*w) - 1)/(exp(2*w) + 1)"));
}

#[test]
fn trig_pythagorean_and_parity() {
    zero_eq(&expr("sin(u)^2 + cos(u)^2"), &Expr::one());
    zero_eq(&expr("sin(-u)"), &expr("-sin(u)"));
    zero_eq(&expr("cos(-u)"), &expr("cos(u)"));
    zero_eq(&expr("sin(0)"), &Expr::zero());
    zero_eq(&expr("cos(0)"), &Expr::one());
    // tan folds to sin/cos
    zero_eq(&expr("tan(u)*cos(u)"), &expr("sin(u)"));
    // sqrt(1 + tan(z)^2) * cos(z) = 1 for cos z > 0
    zero_eq(&expr("sqrt(1 + tan(z)^2) * cos(z)"), &Expr::one());
}

#[test]
fn special_angles() {
    zero_eq(&expr("sin(pi/6)"), &expr("1/2"));
    zero_eq(&expr("cos(pi/3)"), &expr("1/2"));
    zero_eq(&expr("sin(pi/2)"), &Expr::one());
    zero_eq(&expr("cos(pi)"), &expr("-1"));
    zero_eq(&expr("sin(pi/4)^2"), &expr("1/2"));
    zero_eq(&expr("sin(7*pi/6)"), &expr("-1/2"));
    zero_eq(&expr("cos(2*pi)"), &Expr::one());
    zero_eq(&expr("sin(pi/4) - cos(pi/4)"), &Expr::zero());
}

#[test]
fn double_angle_reduction() {
    // arguments with all-even integer coefficients reduce
    zero_eq(&expr("cos(2*u) - cos(u)^2 + sin(u)^2"), &Expr::zero());
    zero_eq(&expr("sin(2*u) - 2*sin(u)*cos(u)"), &Expr::zero());
    zero_eq(&expr("cos(2*u) + 2*sin(u)^2"), &Expr::one().add(&Expr::zero()));
}

#[test]
fn atan_compositions() {
    zero_eq(&expr("atan(0)"), &Expr::zero());
    zero_eq(&expr("atan(1)"), &expr("pi/4"));
    zero_eq(&expr("sin(atan(t))"), &expr("t*(1 + t^2)^(-1/2)"));
    zero_eq(&expr("cos(atan(t))"), &expr("(1 + t^2)^(-1/2)"));
    zero_eq(&expr("sin(atan(t))^2 + cos(atan(t))^2"), &Expr::one());
}

#[test]
fn differentiation_rules() {
    zero_eq(&expr("x^3").diff("x"), &expr("3*x^2"));
    zero_eq(&expr("sin(x^2)").diff("x"), &expr("2*x*cos(x^2)"));
    zero_eq(&expr("exp(3*x)").diff("x"), &expr("3*exp(3*x)"));
    zero_eq(&expr("log(x)").diff("x"), &expr("x^(-1)"));
    zero_eq(&expr("atan(x)").diff("x"), &expr("(1 + x^2)^(-1)"));
    zero_eq(&expr("x*y").diff("x"), &expr("y"));
    zero_eq(&expr("sqrt(1 + x^2)").diff("x"), &expr("x*(1 + x^2)^(-1/2)"));
    // d/dx sin(x)cos(x) = cos(2x), both routes canonicalize equal
    zero_eq(&expr("sin(x)*cos(x)").diff("x"), &expr("cos(2*x)"));
}

#[test]
fn user_function_derivatives() {
    let mut table = SymbolTable::new();
    table.register(FnSym::new("F", 1));
    let e = parse_expr("F(z)", &table).unwrap();
    let d = e.diff("z");
    let expected = parse_expr("F'(z)", &table).unwrap();
    zero_eq(&d, &expected);
    // second derivative chains the prime
    zero_eq(&d.diff("z"), &parse_expr("F''(z)", &table).unwrap());
    // chain rule through the argument
    let g = parse_expr("F(x^2)", &table).unwrap();
    zero_eq(&g.diff("x"), &parse_expr("2*x*F'(x^2)", &table).unwrap());

    // multivariate: named partial slots
    let mut t2 = SymbolTable::new();
    t2.register(FnSym::with_derivs("L", 2, vec!["L_z".into(), "L_p".into()]));
    let h = parse_expr("L(z, p)", &t2).unwrap();
    let hz = h.diff("z");
    zero_eq(&hz, &parse_expr("L_z(z, p)", &t2).unwrap());
}

#[test]
fn substitution() {
    let mut m = BTreeMap::new();
    m.insert("x".to_string(), expr("u + 1"));
    zero_eq(&expr("x^2 + x").subst(&m), &expr("(u + 1)^2 + u + 1"));
    // substitution into function arguments
    zero_eq(&expr("sin(x)").subst(&m), &expr("sin(u + 1)"));
    // capture-free: replaced symbol disappears
    assert!(!expr("exp(x)").subst(&m).symbols().contains("x"));
}

#[test]
fn rational_evaluation() {
    let mut m = BTreeMap::new();
    m.insert("x".to_string(), rat_q(1, 2));
    m.insert("y".to_string(), rat_i(3));
    let v = expr("x^2*y + 2*x").eval_rat(&m).unwrap();
    assert_eq!(v, rat_q(7, 4));
    // non-rational atoms refuse
    assert!(expr("sin(x)").eval_rat(&m).is_none());
    assert!(expr("pi*x").eval_rat(&m).is_none());
}

#[test]
fn parse_and_print_round_trip() {
    for src in [
        "x^2 + 2*x*y + y^2",
        "sin(x)*cos(y) - 1/2",
        "exp(2*z) + exp(-2*z)",
        "sqrt(1 + p1^2 + p2^2)",
        "F'(z)*p11 - 3/2",
        "atan(t)^2*pi",
    ] {
        let e = expr(src);
        let printed = format!("{e}");
        let back = expr(&printed);
        zero_eq(&back, &e);
    }
}

#[test]
fn serde_round_trip() {
    for src in ["x^2 - sqrt(1 + y^2)", "sin(pi*x/3) + exp(x)*log(u)", "F''(z) - 2"] {
        let e = expr(src);
        let js = serde_json::to_string(&e).unwrap();
        let back: Expr = serde_json::from_str(&js).unwrap();
        zero_eq(&back, &e);
    }
}

#[test]
fn parse_errors_carry_position() {
    let err = parse_expr("x + ", &SymbolTable::new()).unwrap_err();
    assert!(err.col > 1);
    assert!(parse_expr("x + $", &SymbolTable::new()).is_err());
    assert!(parse_expr("(x + 1", &SymbolTable::new()).is_err());
    assert!(parse_expr("x^y", &SymbolTable::new()).is_err(), "only rational exponents");
}

#[test]
fn zero_decisions() {
    // exact zero from cancellation
    let t = is_zero_default(&expr("(x + 1)^2 - x^2 - 2*x - 1"));
    assert_eq!(t.verdict, Verdict::Zero);
    assert!(t.transcript.exact.is_some());

    // single monomials are formally nonzero, however small the coefficient
    let t = is_zero_default(&Expr::sym("p1").scale(&rat_q(1, 10_i64.pow(18))));
    assert_eq!(t.verdict, Verdict::NonZero);

    // angle addition is invisible to the rewrite set but numerically zero
    let e = expr("sin(x + y) - sin(x)*cos(y) - cos(x)*sin(y)");
    let t = is_zero_default(&e);
    assert_eq!(t.verdict, Verdict::Zero);
    assert!(t.transcript.samples.is_some());

    // relative scaling stops tiny-but-genuine differences from reading as zero
    let tiny = expr("x - y").scale(&rat_q(1, 10_i64.pow(18)));
    let tiny = tiny.scale(&rat_q(1, 10_i64.pow(18))); // 1e-36 * (x - y)
    assert_eq!(is_zero_default(&tiny).verdict, Verdict::NonZero);

    // sum of squares of independent samples is nonzero
    assert_eq!(is_zero_default(&expr("x^2 + y^2 + 1/100")).verdict, Verdict::NonZero);

    // opaque functions stay unknown under the numeric fallback
    let t = is_zero_default(&expr("F(x) - F(y)"));
    assert_eq!(t.verdict, Verdict::Unknown);

    // exact-only policy stops at multi-term forms
    let t = decide_zero(
        &expr("sin(x + y) - sin(x)*cos(y) - cos(x)*sin(y)"),
        ZeroPolicy::ExactOnly,
        &SampleSpec::default(),
        &Assumptions::default(),
    );
    assert_eq!(t.verdict, Verdict::Unknown);
}

#[test]
fn zero_decision_respects_positivity() {
    // sqrt(x^2) = x only for positive x; the sampler must honor the assumption
    let e = expr("sqrt(x^2) - x");
    let t = decide_zero(
        &e,
        ZeroPolicy::ExactThenNumeric,
        &SampleSpec::default(),
        &Assumptions::positive(["x"]),
    );
    assert_eq!(t.verdict, Verdict::Zero);
}

#[test]
fn transcripts_are_deterministic() {
    let e = expr("sin(x + y) - sin(x)*cos(y) - cos(x)*sin(y)");
    let a = serde_json::to_string(&is_zero_default(&e)).unwrap();
    let b = serde_json::to_string(&is_zero_default(&e)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn display_is_stable_and_readable() {
    assert_eq!(format!("{}", expr("x^2 - 2*x + 1")), "x^2 - 2*x + 1");
    assert_eq!(format!("{}", Expr::zero()), "0");
    assert_eq!(format!("{}", expr("-x - 1")), "-x - 1");
    assert_eq!(format!("{}", expr("sqrt(1 + x)")), "sqrt(x + 1)");
}

#[test]
fn latex_output() {
    let s = eds_core::scalar::latex_expr(&expr("p11*sin(x1) - 1/2"));
    assert!(s.contains("\\sin"), "{s}");
    assert!(s.contains("p_{11}"), "{s}");
    assert!(s.contains("\\tfrac{1}{2}"), "{s}");
}
