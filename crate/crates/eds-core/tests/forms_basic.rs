use std::collections::BTreeMap;
use std::sync::Arc;

use eds_core::forms::{express_in, CoframeMap, CoframeSpace, SpaceBuilder, VectorField};
use eds_core::scalar::{expr, Assumptions, Expr, SampleSpec, Verdict, ZeroPolicy};

/// Flat chart on R^3 with coordinates x, y, z.
fn chart3() -> Arc<CoframeSpace> {
    SpaceBuilder::new("R3")
        .basis(["dx", "dy", "dz"])
        .scalar("x", vec![("dx", Expr::one())])
        .scalar("y", vec![("dy", Expr::one())])
        .scalar("z", vec![("dz", Expr::one())])
        .build()
        .unwrap()
}

/// First jet space of maps R^2 -> R with the contact coframe.
fn jet1() -> Arc<CoframeSpace> {
    SpaceBuilder::new("J1")
        .basis(["dx1", "dx2", "theta", "dp1", "dp2"])
        .d(
            "theta",
            vec![
                (vec!["dx1", "dp1"], Expr::one()),
                (vec!["dx2", "dp2"], Expr::one()),
            ],
        )
        .scalar(
            "z",
            vec![
                ("theta", Expr::one()),
                ("dx1", expr("p1")),
                ("dx2", expr("p2")),
            ],
        )
        .scalar("x1", vec![("dx1", Expr::one())])
        .scalar("x2", vec![("dx2", Expr::one())])
        .scalar("p1", vec![("dp1", Expr::one())])
        .scalar("p2", vec![("dp2", Expr::one())])
        .build()
        .unwrap()
}

#[test]
fn d_of_scalars_in_a_chart() {
    let s = chart3();
    let f = s.scalar(expr("x^2*y + z"));
    let df = f.d();
    assert_eq!(df.coefficient(&["dx"]), expr("2*x*y"));
    assert_eq!(df.coefficient(&["dy"]), expr("x^2"));
    assert_eq!(df.coefficient(&["dz"]), expr("1"));
    assert!(df.d().is_zero_exact());
}

#[test]
fn wedge_is_graded_commutative() {
    let s = chart3();
    let a = s.basis_form("dx").scale(&expr("x*y"));
    let b = s.basis_form("dy").scale(&expr("z"));
    let ab = a.wedge(&b);
    let ba = b.wedge(&a);
    assert!(ab.add(&ba).is_zero_exact());
    assert!(a.wedge(&a).is_zero_exact());
    // degree above the dimension collapses to zero
    let vol = s.volume();
    assert!(vol.wedge(&a).is_zero_exact());
}

#[test]
fn contact_condition_on_jet_space() {
    let s = jet1();
    let theta = s.basis_form("theta");
    let dtheta = theta.d();
    assert_eq!(dtheta.coefficient(&["dx1", "dp1"]), Expr::one());
    assert_eq!(dtheta.coefficient(&["dp1", "dx1"]), expr("-1"));
    let top = theta.wedge(&dtheta).wedge(&dtheta);
    // theta ^ (dtheta)^2 = -2 dx1^dx2^theta^dp1^dp2
    assert_eq!(
        top.coefficient(&["dx1", "dx2", "theta", "dp1", "dp2"]),
        expr("-2")
    );
    assert!(!top.is_zero_exact());
}

#[test]
fn d_squared_violation_is_rejected_at_build() {
    // d(alpha) = x * beta^gamma fails d^2 = 0 because d(x) = alpha brings
    // back an alpha^beta^gamma term.
    let err = SpaceBuilder::new("bad")
        .basis(["alpha", "beta", "gamma"])
        .d("alpha", vec![(vec!["beta", "gamma"], expr("x"))])
        .scalar("x", vec![("alpha", Expr::one())])
        .build()
        .err()
        .expect("build must fail");
    assert!(err.to_string().contains("d^2"));
}

#[test]
fn frame_bundle_structure_equations_close() {
    // Orthonormal frame bundle of Euclidean 3-space, adapted to surfaces:
    // this is the master coframe for the surface-theory computations, so the
    // builder's d^2 = 0 audit doubles as a check of the structure constants.
    let s = SpaceBuilder::new("F(E3)")
        .basis(["w1", "w2", "theta", "w12", "pi1", "pi2"])
        .d(
            "w1",
            vec![
                (vec!["w12", "w2"], expr("-1")),
                (vec!["pi1", "theta"], Expr::one()),
            ],
        )
        .d(
            "w2",
            vec![
                (vec!["w12", "w1"], Expr::one()),
                (vec!["pi2", "theta"], Expr::one()),
            ],
        )
        .d(
            "theta",
            vec![
                (vec!["pi1", "w1"], expr("-1")),
                (vec!["pi2", "w2"], expr("-1")),
            ],
        )
        .d("w12", vec![(vec!["pi1", "pi2"], Expr::one())])
        .d("pi1", vec![(vec!["pi2", "w12"], Expr::one())])
        .d("pi2", vec![(vec!["pi1", "w12"], expr("-1"))])
        .build();
    assert!(s.is_ok(), "{:?}", s.err().map(|e| e.to_string()));
}

#[test]
fn interior_product_and_lie_derivative() {
    let s = jet1();
    // v = d/dx1 + p1 d/dz lifted through the contact coframe: pairings
    // <v, dx1> = 1, <v, theta> = <v, dz - p dx> = 0, others 0.
    let v = VectorField::from_pairs(s.clone(), &[("dx1", Expr::one())]);
    let theta = s.basis_form("theta");
    let hook = theta.d().contract(&v);
    // v _| (dx1^dp1 + dx2^dp2) = dp1
    assert!(hook.sub(&s.basis_form("dp1")).is_zero_exact());

    // on scalars, L_v f = v _| df
    let f = s.scalar(expr("x1^2*p2 + z"));
    let lie = f.lie(&v);
    let expected = f.d().contract(&v);
    assert!(lie.sub(&expected).is_zero_exact());
    // <v, dz> = p1 here, so L_v (x1^2 p2 + z) = 2 x1 p2 + p1
    assert_eq!(lie.as_scalar().unwrap(), expr("2*x1*p2 + p1"));

    // Cartan formula against a fully independent route on a 1-form:
    // L_v (z dx2) = (v z) dx2 = p1 dx2.
    let alpha = s.basis_form("dx2").scale(&expr("z"));
    let lie_alpha = alpha.lie(&v);
    assert!(lie_alpha
        .sub(&s.basis_form("dx2").scale(&expr("p1")))
        .is_zero_exact());
}

#[test]
fn reduction_mod_a_pfaffian_system() {
    let s = jet1();
    let theta = s.basis_form("theta");
    // dz = theta + p1 dx1 + p2 dx2, so mod theta it is p1 dx1 + p2 dx2
    let dz = s.d_scalar("z").unwrap();
    let red = dz.reduce_mod_pfaffian(&[theta.clone()]).unwrap();
    let expected = s
        .basis_form("dx1")
        .scale(&expr("p1"))
        .add(&s.basis_form("dx2").scale(&expr("p2")));
    assert!(red.sub(&expected).is_zero_exact());

    // a 2-form whose theta-content disappears on the subbundle
    let psi = theta.wedge(&s.basis_form("dx1")).add(&s.basis_form("dp2").wedge(&s.basis_form("dx2")));
    let red2 = psi.reduce_mod_pfaffian(&[theta]).unwrap();
    assert!(red2
        .sub(&s.basis_form("dp2").wedge(&s.basis_form("dx2")))
        .is_zero_exact());

    // scaled generator with a symbolic invertible coefficient
    let gen = s.basis_form("theta").scale(&expr("x1^2"));
    let red3 = dz_like(&s).reduce_mod_pfaffian(&[gen]).unwrap();
    assert!(red3.sub(&expected).is_zero_exact());
}

fn dz_like(s: &Arc<CoframeSpace>) -> eds_core::forms::Form {
    s.d_scalar("z").unwrap()
}

#[test]
fn express_in_recovers_membership_coefficients() {
    let s = jet1();
    let dtheta = s.basis_form("theta").d();
    let b1 = s.basis_form("dx1").wedge(&s.basis_form("dp1"));
    let b2 = s.basis_form("dx2").wedge(&s.basis_form("dp2"));
    let b3 = s.basis_form("dx1").wedge(&s.basis_form("dx2"));
    let lam = express_in(&dtheta, &[b1.clone(), b2.clone(), b3.clone()]).unwrap();
    assert_eq!(lam[0], Expr::one());
    assert_eq!(lam[1], Expr::one());
    assert!(lam[2].is_zero_expr());

    // symbolic division: p1^2 dx1^dp1 against p1 dx1^dp1
    let target = b1.scale(&expr("p1^2"));
    let lam2 = express_in(&target, &[b1.scale(&expr("p1"))]).unwrap();
    assert_eq!(lam2[0], expr("p1"));

    // not in the span
    assert!(express_in(&dtheta, &[b3]).is_none());
}

#[test]
fn pullback_commutes_with_d() {
    // sigma: R3 -> J1, the 1-jet graph of z = f(x, y) with f = x^2 y.
    let chart = chart3();
    let jet = jet1();
    let dx = chart.basis_form("dx");
    let dy = chart.basis_form("dy");
    // p1 = f_x = 2xy, p2 = f_y = x^2; theta pulls back to
    // dz - p1 dx - p2 dy = 0 on the graph.
    let f = expr("x^2*y");
    let fx = f.diff("x");
    let fy = f.diff("y");
    let theta_image = chart
        .scalar(f.clone())
        .d()
        .sub(&dx.scale(&fx))
        .sub(&dy.scale(&fy));
    assert!(theta_image.is_zero_exact());
    let map = CoframeMap::new(
        chart.clone(),
        jet.clone(),
        vec![
            ("dx1", dx.clone()),
            ("dx2", dy.clone()),
            ("theta", chart.zero(1)),
            ("dp1", chart.scalar(fx.clone()).d()),
            ("dp2", chart.scalar(fy.clone()).d()),
        ],
        vec![
            ("x1", expr("x")),
            ("x2", expr("y")),
            ("z", f.clone()),
            ("p1", fx.clone()),
            ("p2", fy.clone()),
        ],
    )
    .unwrap();
    map.verify().unwrap();

    // pulling back the contact form along a jet graph kills it
    assert!(map.pullback(&jet.basis_form("theta")).is_zero_exact());
    // and a nontrivial form pulls back coherently
    let psi = jet.basis_form("dp1").wedge(&jet.basis_form("dx2"));
    let pulled = map.pullback(&psi);
    // d(2xy)^dy = 2y dx^dy
    assert_eq!(pulled.coefficient(&["dx", "dy"]), expr("2*y"));

    // an inconsistent map is caught by verify()
    let bad = CoframeMap::new(
        chart.clone(),
        jet,
        vec![
            ("dx1", dx.clone()),
            ("dx2", dy.clone()),
            ("theta", chart.zero(1)),
            ("dp1", dx.scale(&expr("7"))),
            ("dp2", chart.scalar(fy).d()),
        ],
        vec![
            ("x1", expr("x")),
            ("x2", expr("y")),
            ("z", f),
            ("p1", fx),
            ("p2", expr("x^2")),
        ],
    )
    .unwrap();
    assert!(bad.verify().is_err());
}

#[test]
fn substitute_basis_rewrites_a_coframe() {
    let s = jet1();
    // rewrite dp1 in terms of a shifted form: dp1 = eta + a dx1 models
    // passing to an adapted coframe.
    let eta = s
        .basis_form("dp1")
        .sub(&s.basis_form("dx1").scale(&expr("a")));
    let mut repl = BTreeMap::new();
    repl.insert(s.basis_index("dp1").unwrap(), eta.add(&s.basis_form("dx1").scale(&expr("a"))));
    let dtheta = s.basis_form("theta").d();
    let same = dtheta.substitute_basis(&repl);
    assert!(same.sub(&dtheta).is_zero_exact());
}

#[test]
fn form_zero_decisions_aggregate_transcripts() {
    let s = chart3();
    // angle-addition residue: exact canonicalization cannot see it, numerics can
    let c = expr("sin(x + y) - sin(x)*cos(y) - cos(x)*sin(y)");
    let f = s.basis_form("dx").scale(&c).add(&s.basis_form("dy"));
    let v = f.decide_zero(
        ZeroPolicy::ExactThenNumeric,
        &SampleSpec::default(),
        &Assumptions::default(),
    );
    assert_eq!(v.verdict, Verdict::NonZero); // the dy coefficient is 1
    let vz = s
        .basis_form("dx")
        .scale(&c)
        .decide_zero(
            ZeroPolicy::ExactThenNumeric,
            &SampleSpec::default(),
            &Assumptions::default(),
        );
    assert_eq!(vz.verdict, Verdict::Zero);
    assert_eq!(vz.coefficients.len(), 1);
}

#[test]
fn display_and_serialization_are_stable() {
    let s = chart3();
    let f = s
        .basis_form("dx")
        .wedge(&s.basis_form("dy"))
        .scale(&expr("x + 1"))
        .add(&s.basis_form("dx").wedge(&s.basis_form("dz")).scale(&expr("-1")));
    assert_eq!(format!("{f}"), "(x + 1)*dx^dy + -dx^dz");
    let json = serde_json::to_value(&f).unwrap();
    assert_eq!(json["degree"], 2);
    assert_eq!(json["terms"][0]["blade"][0], "dx");
}
