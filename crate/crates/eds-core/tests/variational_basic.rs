use eds_core::jets::JetChart;
use eds_core::scalar::{expr, rat_q, Assumptions, Expr, FnSym, SampleSpec, Verdict, ZeroPolicy};
use eds_core::variational::{
    admissible_lift, betounes_form, check_stationary, el_equation, el_system, pc_form_classical,
    Lagrangian,
};
fn dirichlet(n: usize) -> (JetChart, Expr) {
    let chart = JetChart::new(n, 1, 1).unwrap();
    let mut l = Expr::zero();
    for i in 0..n {
        let p = Expr::sym(chart.p_name(0, &[i]));
        l = l.add(&p.mul(&p).mul(&expr("1/2")));
    }
    let fz = Expr::user_app(FnSym::new("F", 1), vec![Expr::sym("z")]);
    (chart, l.add(&fz))
}

#[test]
fn classical_pc_form_of_the_dirichlet_density() {
    let (chart, l) = dirichlet(3);
    let pc = pc_form_classical(&chart, &l).unwrap();

    // beta keeps no theta component and matches -sum L_{p_i} dx_(i)
    let mut beta_expected = chart.space().zero(2);
    for i in 0..3 {
        let p = Expr::sym(chart.p_name(0, &[i]));
        beta_expected = beta_expected.sub(&chart.dx_hook(i).scale(&p));
    }
    assert!(pc.beta().unwrap().sub(&beta_expected).is_zero_exact());

    // psi = F'(z) dx - sum dp_i ^ dx_(i)
    let fprime = Expr::user_app(FnSym::new("F'", 1), vec![Expr::sym("z")]);
    let mut psi_expected = chart.dx_volume().scale(&fprime);
    for i in 0..3 {
        let dp = chart.space().basis_form(&format!("d{}", chart.p_name(0, &[i])));
        psi_expected = psi_expected.sub(&dp.wedge(&chart.dx_hook(i)));
    }
    assert!(pc.psi().sub(&psi_expected).is_zero_exact());

    // the two defining identities, exactly
    assert!(pc.pi().d().is_zero_exact());
    assert!(chart.theta(0).wedge(pc.pi()).is_zero_exact());
    assert!(pc.pi().sub(&chart.theta(0).wedge(pc.psi())).is_zero_exact());

    // the lift agrees with the lift computed without the beta solve
    let lag = Lagrangian::classical(&chart, l).unwrap();
    assert!(admissible_lift(&lag).unwrap().form().sub(pc.lambda()).is_zero_exact());
}

#[test]
fn el_equation_normalizes_the_leading_sign() {
    let (chart, l) = dirichlet(3);
    let el = el_equation(&chart, &l).unwrap();
    let fprime = Expr::user_app(FnSym::new("F'", 1), vec![Expr::sym("z")]);
    let expected = expr("p11 + p22 + p33").sub(&fprime);
    assert!(el.expr().sub(&expected).is_zero_expr());
    assert!(el.flipped());
    assert!(el.raw().add(&expected).is_zero_expr());

    let chart1 = JetChart::new(1, 1, 1).unwrap();
    let el1 = el_equation(&chart1, &expr("1/2*p1^2")).unwrap();
    assert!(el1.expr().sub(&expr("p11")).is_zero_expr());
    assert!(el1.flipped());
}

#[test]
fn linear_momentum_density_is_variationally_trivial() {
    let chart = JetChart::new(2, 1, 1).unwrap();
    let l = expr("3*p1 - p2 + 5");
    let pc = pc_form_classical(&chart, &l).unwrap();
    assert_eq!(pc.pi().num_terms(), 0);
    assert_eq!(pc.psi().num_terms(), 0);
    let el = el_equation(&chart, &l).unwrap();
    assert!(el.raw().is_zero_expr());
    assert!(!el.flipped());
}

#[test]
fn minimal_surface_density() {
    let chart = JetChart::new(2, 1, 1).unwrap();
    let w2 = expr("1 + p1^2 + p2^2");
    let l = Expr::sqrt(&w2);
    let pc = pc_form_classical(&chart, &l).unwrap();

    // momentum Hessian is symmetric
    let h = pc.hessian();
    for i in 0..2 {
        for j in 0..2 {
            assert!(h[i][j].sub(&h[j][i]).cleared().is_zero_expr());
        }
    }

    // mean-curvature operator: W^3 * el = (1+p2^2) p11 - 2 p1 p2 p12 + (1+p1^2) p22
    let el = el_equation(&chart, &l).unwrap();
    let cleared = el.expr().mul(&w2.pow_rat(&rat_q(3, 2)));
    let expected = expr("(1 + p2^2)*p11 - 2*p1*p2*p12 + (1 + p1^2)*p22");
    assert!(cleared.sub(&expected).cleared().is_zero_expr());
}

#[test]
fn wave_density_on_a_lorentz_chart() {
    let chart =
        JetChart::with_names(&["t", "y1", "y2"], &["z"], 1, 0, Some(vec![-1, 1, 1])).unwrap();
    let fz = Expr::user_app(FnSym::new("F", 1), vec![Expr::sym("z")]);
    let l = expr("1/2*(-p0^2 + p1^2 + p2^2)").add(&fz);
    let el = el_equation(&chart, &l).unwrap();
    let fprime = Expr::user_app(FnSym::new("F'", 1), vec![Expr::sym("z")]);
    let expected = expr("p11 + p22 - p00").sub(&fprime);
    assert!(el.expr().sub(&expected).is_zero_expr());
}

fn flat_energy(chart: &JetChart) -> Expr {
    let mut l = Expr::zero();
    for a in 0..chart.s() {
        for i in 0..chart.n() {
            let p = Expr::sym(chart.p_name(a, &[i]));
            l = l.add(&p.mul(&p).mul(&expr("1/2")));
        }
    }
    l
}

#[test]
fn betounes_form_of_the_flat_energy() {
    let chart = JetChart::new(2, 2, 1).unwrap();
    let lag = Lagrangian::classical(&chart, flat_energy(&chart)).unwrap();
    let pc = betounes_form(&lag).unwrap();

    // Pi = -theta^a ^ dp^a_i ^ dx_(i); the naive lift needs no correction here
    let mut expected = chart.space().zero(3);
    for a in 0..2 {
        for i in 0..2 {
            let dp = chart.space().basis_form(&format!("d{}", chart.p_name(a, &[i])));
            expected = expected.sub(&chart.theta(a).wedge(&dp).wedge(&chart.dx_hook(i)));
        }
    }
    assert!(pc.pi().sub(&expected).is_zero_exact());
    assert_eq!(pc.corrections().len(), 1);
    assert_eq!(pc.corrections()[0].num_terms(), 0);

    // psi_a = -sum_i dp^a_i ^ dx_(i)
    for a in 0..2 {
        let mut psi_expected = chart.space().zero(2);
        for i in 0..2 {
            let dp = chart.space().basis_form(&format!("d{}", chart.p_name(a, &[i])));
            psi_expected = psi_expected.sub(&dp.wedge(&chart.dx_hook(i)));
        }
        assert!(pc.psis()[a].sub(&psi_expected).is_zero_exact());
    }

    // every level of the coefficient tensor is symmetric
    assert!(pc.symmetry_defects(1).iter().all(|t| t.cleared().is_zero_expr()));
}

#[test]
fn betounes_form_kills_the_skew_part() {
    let chart = JetChart::new(2, 2, 1).unwrap();

    // an uncorrected lift of p^1_1 p^2_2 keeps a skew coefficient tensor
    let lag = Lagrangian::classical(&chart, expr("p1_1*p2_2")).unwrap();
    let lift = admissible_lift(&lag).unwrap();
    let pc = betounes_form(&lag).unwrap();
    assert!(pc.symmetry_defects(1).iter().all(|t| t.cleared().is_zero_expr()));
    assert_eq!(pc.corrections()[0].num_terms(), 1);
    assert!(!pc.lambda().sub(lift.form()).is_zero_exact());

    // the symmetrized lift still has d(lambda) in the contact ideal and closed
    assert!(pc.pi().d().is_zero_exact());

    // a null density: the Jacobian determinant has vanishing Poincare-Cartan form
    let det = Lagrangian::classical(&chart, expr("p1_1*p2_2 - p1_2*p2_1")).unwrap();
    let pc0 = betounes_form(&det).unwrap();
    assert_eq!(pc0.pi().num_terms(), 0);
}

#[test]
fn betounes_form_is_divergence_insensitive() {
    let chart = JetChart::new(2, 2, 1).unwrap();
    for base in [flat_energy(&chart), expr("p1_1*p2_2"), expr("p1_1*p1_1 + z1*p2_2")] {
        // mu^i(x, z): add D_1 mu^1 + D_2 mu^2 to the density
        let mu = [expr("x1*z1^2 - 3*z2"), expr("x2^2*z2 + z1*z2")];
        let mut div = Expr::zero();
        for (i, m) in mu.iter().enumerate() {
            let mut d = m.diff(chart.x_name(i));
            for a in 0..2 {
                d = d.add(&m.diff(chart.z_name(a)).mul(&Expr::sym(chart.p_name(a, &[i]))));
            }
            div = div.add(&d);
        }
        let pc = betounes_form(&Lagrangian::classical(&chart, base.clone()).unwrap()).unwrap();
        let pc2 =
            betounes_form(&Lagrangian::classical(&chart, base.add(&div)).unwrap()).unwrap();
        assert!(pc.pi().sub(pc2.pi()).is_zero_exact());
    }
}

#[test]
fn scalar_betounes_form_reduces_to_the_classical_lift() {
    let (chart, l) = dirichlet(2);
    let lag = Lagrangian::classical(&chart, l.clone()).unwrap();
    let pc_a = betounes_form(&lag).unwrap();
    let pc_b = pc_form_classical(&chart, &l).unwrap();
    assert!(pc_a.pi().sub(pc_b.pi()).is_zero_exact());
    assert!(pc_a.lambda().sub(pc_b.lambda()).is_zero_exact());
}

#[test]
fn el_system_closure_and_membership() {
    let (chart, l) = dirichlet(2);
    let sys = el_system(pc_form_classical(&chart, &l).unwrap()).unwrap();
    let policy = ZeroPolicy::ExactThenNumeric;
    let spec = SampleSpec::default();
    let assume = Assumptions::default();

    // the closure certificate reassembles d(psi) exactly
    let comb = sys.closure()[0].as_ref().expect("scalar closure certificate");
    assert!(comb.reassemble(&sys).sub(&sys.pc().psi().d()).is_zero_exact());

    // members with exact combinations
    let theta = chart.theta(0);
    let dp1 = chart.space().basis_form("dp1");
    for f in [
        theta.wedge(&dp1),
        theta.d(),
        sys.pc().psi().clone(),
        sys.pc().psi().wedge(&dp1).add(&theta.d().wedge(&chart.dx(0).scale(&expr("x2^2")))),
    ] {
        let m = sys.membership(&f, policy, &spec, &assume).unwrap();
        assert_eq!(m.member.verdict, Verdict::Zero, "{f}");
        let c = m.combination.expect("exact combination");
        assert!(c.reassemble(&sys).sub(&f).is_zero_exact());
    }

    // a non-member: decided through the primitive part
    let bad = dp1.wedge(&chart.dx(0));
    let m = sys.membership(&bad, policy, &spec, &assume).unwrap();
    assert_eq!(m.member.verdict, Verdict::NonZero);

    // degenerate functional: psi = 0, membership is contact reduction
    let triv = el_system(pc_form_classical(&chart, &expr("p1")).unwrap()).unwrap();
    let m = triv.membership(&bad, policy, &spec, &assume).unwrap();
    assert_eq!(m.member.verdict, Verdict::NonZero);
    let m = triv.membership(&theta.wedge(&dp1), policy, &spec, &assume).unwrap();
    assert_eq!(m.member.verdict, Verdict::Zero);
}

#[test]
fn stationarity_of_sections() {
    let policy = ZeroPolicy::ExactThenNumeric;
    let spec = SampleSpec::default();
    let assume = Assumptions::default();

    // affine graphs are minimal surfaces
    let chart = JetChart::new(2, 1, 1).unwrap();
    let l = Expr::sqrt(&expr("1 + p1^2 + p2^2"));
    let sys = el_system(pc_form_classical(&chart, &l).unwrap()).unwrap();
    let sec = chart.section(vec![expr("x1 - 2*x2 + 3")]).unwrap();
    let report = check_stationary(&sec, &sys, policy, &spec, &assume).unwrap();
    assert_eq!(report.verdict.verdict, Verdict::Zero);

    // z'' = 0 rejects a parabola
    let chart1 = JetChart::new(1, 1, 1).unwrap();
    let sys1 = el_system(pc_form_classical(&chart1, &expr("1/2*p1^2")).unwrap()).unwrap();
    let sec1 = chart1.section(vec![expr("x1^2")]).unwrap();
    let report = check_stationary(&sec1, &sys1, policy, &spec, &assume).unwrap();
    assert_eq!(report.verdict.verdict, Verdict::NonZero);
    assert!(report.residuals[0].add(&expr("2")).is_zero_expr());
}

#[test]
fn higher_order_densities_are_rejected() {
    let chart = JetChart::new(2, 1, 1).unwrap();
    assert!(pc_form_classical(&chart, &expr("p11^2")).is_err());
    assert!(el_equation(&chart, &expr("z*p12")).is_err());
    assert!(Lagrangian::classical(&chart, expr("p112")).is_err());
}

#[test]
fn random_densities_satisfy_the_structure_identities() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(5);
    for n in [2usize, 3] {
        let chart = JetChart::new(n, 1, 1).unwrap();
        let mut syms = vec!["z".to_string()];
        for i in 0..n {
            syms.push(chart.x_name(i).to_string());
            syms.push(chart.p_name(0, &[i]));
        }
        for _ in 0..5 {
            // a small random polynomial density
            let mut l = Expr::zero();
            for _ in 0..4 {
                let mut term = Expr::from_int(rng.gen_range(-3i64..=3));
                for _ in 0..rng.gen_range(1..=2) {
                    let s = &syms[rng.gen_range(0..syms.len())];
                    term = term.mul(&Expr::sym(s));
                }
                l = l.add(&term);
            }
            let pc = match pc_form_classical(&chart, &l) {
                Ok(pc) => pc,
                Err(e) => panic!("pc({l}) failed: {e:?}"),
            };
            assert!(pc.pi().d().is_zero_exact());
            assert!(chart.theta(0).wedge(pc.pi()).is_zero_exact());
            // el consistency against the contact factor is checked inside
            let _ = el_equation(&chart, &l).unwrap();
        }
    }
}

#[test]
fn membership_report_degree_guard() {
    // forms of degree below n fall back to the exact attempt only
    let (chart, l) = dirichlet(2);
    let sys = el_system(pc_form_classical(&chart, &l).unwrap()).unwrap();
    let m = sys
        .membership(
            &chart.theta(0),
            ZeroPolicy::ExactThenNumeric,
            &SampleSpec::default(),
            &Assumptions::default(),
        )
        .unwrap();
    assert_eq!(m.member.verdict, Verdict::Zero);
    let m = sys
        .membership(
            &chart.dx(0),
            ZeroPolicy::ExactThenNumeric,
            &SampleSpec::default(),
            &Assumptions::default(),
        )
        .unwrap();
    assert_eq!(m.member.verdict, Verdict::Unknown);
}
