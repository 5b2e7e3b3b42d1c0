use super::*;
use crate::design::weight_budget_trick;
use crate::fnspace::{fa, make_fa, DomainSpec, Point};
use crate::rng::rng_for;
use rand::Rng;
use std::f64::consts::PI;

fn trig(freqs: &[i64]) -> Space {
    Space::new(FunctionSystem::trig_1d(freqs).unwrap(), DomainSpec::torus(1, 256)).unwrap()
}

fn modes(freqs: &[i64], v: usize) -> CollectionSpec {
    CollectionSpec {
        dictionary: FunctionSystem::trig_1d(freqs).unwrap(),
        v,
        domain: DomainSpec::torus(1, 256),
    }
}

fn wave(label: &str, terms: Vec<(i64, C64)>) -> Target {
    Target::new(label, move |x: &Point| {
        terms.iter().map(|(k, c)| c * C64::from_polar(1.0, *k as f64 * x.coords()[0])).sum()
    })
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn random_points(m: usize, seed: u64) -> PointSet {
    let mut rng = rng_for(seed, 0);
    PointSet::scalars(&(0..m).map(|_| rng.random::<f64>() * 2.0 * PI).collect::<Vec<_>>())
}

#[test]
fn ell_fit_reproduces() {
    let space = trig(&[-1, 0, 2]);
    let coef = CVec::from_vec(vec![C64::new(0.5, 1.0), c(-1.0), C64::new(0.0, 2.0)]);
    let f = Target::element(space.system(), &coef);
    let ps = random_points(7, 1);
    for p in [1.0, 2.0, 3.0, f64::INFINITY] {
        let fit = ell_fit(&f, &space, &ps, Exponent::new(p).unwrap(), None).unwrap();
        assert!(fit.disc_error < 1e-9, "p={p}: {}", fit.disc_error);
        assert!((&fit.coefficients - &coef).norm() < 1e-7, "p={p}");
    }
}

#[test]
fn ell_fit_chebyshev_center() {
    let space = Space::new(FunctionSystem::monomials(0), DomainSpec::interval(64)).unwrap();
    let f = Target::real("f_1/4", |x: &Point| fa(0.25, x.coords()[0]));
    let ps = PointSet::scalars(&[0.125, 0.75]);
    let fit = ell_fit(&f, &space, &ps, Exponent::INF, None).unwrap();
    assert!((fit.coefficients[0] - c(0.5)).norm() < 1e-12);
    assert!((fit.disc_error - 0.5).abs() < 1e-12);
}

#[test]
fn ell_fit_two_is_linear() {
    let space = trig(&[0, 1]);
    let ps = random_points(6, 4);
    let f = wave("f", vec![(3, c(1.0)), (0, c(0.2))]);
    let g = wave("g", vec![(-2, C64::new(0.0, 1.0)), (1, c(0.7))]);
    let (al, be) = (C64::new(1.5, -0.5), c(-2.0));
    let h = f.combine(al, &g, be);
    let two = Exponent::TWO;
    let cf = ell_fit(&f, &space, &ps, two, None).unwrap().coefficients;
    let cg = ell_fit(&g, &space, &ps, two, None).unwrap().coefficients;
    let ch = ell_fit(&h, &space, &ps, two, None).unwrap().coefficients;
    assert!((ch - (cf * al + cg * be)).norm() < 1e-10);
}

#[test]
fn ell_fit_empty_points() {
    let space = trig(&[0]);
    assert!(ell_fit(&wave("f", vec![]), &space, &PointSet::new(vec![]), Exponent::TWO, None).is_err());
}

#[test]
fn sigma_v_examples() {
    let f = wave("f", vec![(1, c(1.0)), (3, c(0.5))]);
    let col = modes(&[0, 1, 2, 3], 1);
    let s = sigma_v(&f, &col, &NormSpec::Continuous(Exponent::TWO)).unwrap();
    assert!((s.value - 0.5).abs() < 1e-12);
    assert_eq!(s.support, vec![1]);

    let zero = CollectionSpec { v: 0, ..col.clone() };
    let s0 = sigma_v(&f, &zero, &NormSpec::Continuous(Exponent::TWO)).unwrap();
    assert!((s0.value - 1.25f64.sqrt()).abs() < 1e-12);
    assert!(s0.support.is_empty());

    let two = CollectionSpec { v: 2, ..col };
    for norm in [
        NormSpec::Continuous(Exponent::TWO),
        NormSpec::Continuous(Exponent::INF),
        NormSpec::Discrete(Exponent::new(3.0).unwrap(), random_points(5, 2)),
    ] {
        let s = sigma_v(&f, &two, &norm).unwrap();
        assert!(s.value < 1e-9, "{norm:?}: {}", s.value);
        assert_eq!(s.support, vec![1, 3]);
    }
}

#[test]
fn sigma_v_lexicographic_ties() {
    let f = wave("f", vec![(1, c(1.0)), (2, c(1.0))]);
    let s = sigma_v(&f, &modes(&[0, 1, 2], 1), &NormSpec::Continuous(Exponent::TWO)).unwrap();
    assert_eq!(s.support, vec![1]);
}

#[test]
fn sigma_v_guard() {
    let freqs: Vec<i64> = (0..40).collect();
    let col = modes(&freqs, 10);
    assert!(matches!(
        sigma_v(&wave("f", vec![]), &col, &NormSpec::Continuous(Exponent::TWO)),
        Err(Error::Guard { .. })
    ));
}

#[test]
fn universal_sparse_reproduction() {
    let freqs = [-2, -1, 0, 1, 2, 3];
    let col = modes(&freqs, 2);
    let f = wave("sparse", vec![(-1, C64::new(0.3, 0.4)), (3, c(-1.2))]);
    let ps = random_points(9, 11);
    // Universal LDI on 4-term spans makes the sample fit exact.
    let hyp = CollectionSpec { v: 4, ..col.clone() };
    let u = universal_ldi_constant(&hyp, &ps, Exponent::TWO, Exponent::TWO, &RatioOptions::default()).unwrap();
    assert!(u.value.is_finite());
    let rep = recover_universal(&f, &col, &ps, Exponent::TWO, Variant::LpSample).unwrap();
    assert_eq!(rep.support, vec![1, 5]);
    assert!(rep.errors["L2"] < 1e-9);
    assert!(rep.errors["disc2"] < 1e-9);
}

#[test]
fn universal_full_span_is_ell_fit() {
    let freqs = [0, 1, 4];
    let col = modes(&freqs, 3);
    let space = trig(&freqs);
    let f = wave("f", vec![(2, c(1.0)), (0, c(0.5)), (5, C64::new(0.0, 0.3))]);
    let ps = random_points(6, 3);
    for (variant, fp) in [
        (Variant::Lp, Exponent::TWO),
        (Variant::LpSample, Exponent::TWO),
        (Variant::LpInf, Exponent::INF),
    ] {
        let rep = recover_universal(&f, &col, &ps, Exponent::TWO, variant).unwrap();
        let fit = ell_fit(&f, &space, &ps, fp, None).unwrap();
        assert_eq!(rep.support, vec![0, 1, 2]);
        assert!((rep.coefficients.to_cvec() - fit.coefficients).norm() < 1e-9, "{variant:?}");
    }
}

#[test]
fn universal_perturbed_mode_bound() {
    let freqs = [0, 1, 2, 5];
    let col = modes(&freqs, 1);
    let ps = PointSet::scalars(&(0..8).map(|j| 2.0 * PI * j as f64 / 8.0 + 0.1).collect::<Vec<_>>());
    let delta = 0.05;
    let f = wave("mode+g", vec![(2, c(1.0))]).combine(c(1.0), &Target::real("g", move |x: &Point| delta * (7.0 * x.coords()[0]).cos()), c(1.0));
    let hyp = CollectionSpec { v: 2, ..col.clone() };
    let d = universal_ldi_constant(&hyp, &ps, Exponent::TWO, Exponent::INF, &RatioOptions::default()).unwrap();
    let rep = recover_universal(&f, &col, &ps, Exponent::TWO, Variant::LpSample).unwrap();
    assert_eq!(rep.support, vec![2]);
    assert!(rep.errors["L2"] <= (2.0 * d.value.value() + 1.0) * delta + 1e-9);
}

#[test]
fn scale_equivariance() {
    let col = modes(&[0, 1, 3], 1);
    let ps = random_points(7, 8);
    let f = wave("f", vec![(1, c(1.0)), (3, c(0.3)), (4, c(0.1))]);
    let alpha = C64::new(-2.0, 0.5);
    for variant in [Variant::Lp, Variant::LpSample, Variant::LpInf] {
        let a = recover_universal(&f, &col, &ps, Exponent::TWO, variant).unwrap();
        let b = recover_universal(&f.scaled(alpha), &col, &ps, Exponent::TWO, variant).unwrap();
        assert_eq!(a.support, b.support);
        if variant != Variant::LpInf {
            assert!((b.coefficients.to_cvec() - a.coefficients.to_cvec() * alpha).norm() < 1e-9);
        }
    }
}

#[test]
fn audit_trivial_for_elements() {
    let space = trig(&[-1, 0, 1]);
    let coef = CVec::from_vec(vec![c(1.0), C64::new(0.0, -1.0), c(0.5)]);
    let ps = PointSet::new(space.domain().equispaced(3));
    for th in [Theorem::BT1, Theorem::BT2, Theorem::BT3, Theorem::BT4] {
        let inst = AuditInstance {
            model: AuditModel::Subspace(space.clone()),
            pointset: ps.clone(),
            target: Target::element(space.system(), &coef),
            p: Exponent::TWO,
            opts: RatioOptions::default(),
        };
        let rep = lebesgue_audit(th, &inst).unwrap();
        assert!(rep.applicable);
        assert!(rep.audits[0].left < 1e-9 && rep.audits[0].right < 1e-9, "{th:?}");
        assert_eq!(rep.violations(), 0);
    }
}

#[test]
fn audit_bt2_trig() {
    let space = trig(&[-1, 0, 1]);
    let ps = PointSet::new(space.domain().equispaced(3));
    let f = wave("f", vec![(0, c(1.0)), (1, c(0.5)), (4, c(0.2)), (-3, C64::new(0.0, 0.1))]);
    let inst = AuditInstance {
        model: AuditModel::Subspace(space),
        pointset: ps,
        target: f,
        p: Exponent::TWO,
        opts: RatioOptions::default(),
    };
    let rep = lebesgue_audit(Theorem::BT2, &inst).unwrap();
    assert!((rep.constants["D"] - 1.0).abs() < 1e-9);
    assert!(rep.audits[0].slack >= 0.0);
    assert!(rep.audits[0].left > 0.0);
}

#[test]
fn audit_bt1_with_budget_weights() {
    let space = trig(&[0, 1, 2]);
    let pts = space.domain().equispaced(5);
    let ps = PointSet::weighted(pts, vec![0.2; 5]).unwrap();
    let budget = weight_budget_trick(&space, &ps, Exponent::TWO, Exponent::TWO, Exponent::TWO, 1.0, &DiscOptions::default()).unwrap();
    let f = wave("f", vec![(1, c(1.0)), (3, c(0.3))]);
    let inst = AuditInstance {
        model: AuditModel::Subspace(space),
        pointset: ps,
        target: f,
        p: Exponent::TWO,
        opts: RatioOptions::default(),
    };
    let rep = lebesgue_audit(Theorem::BT1, &inst).unwrap();
    assert!((rep.constants["W"] - budget.sum).abs() < 1e-12);
    assert!(rep.audits[0].holds);
    let rep = lebesgue_audit(Theorem::BT1a, &inst).unwrap();
    assert!((rep.constants["M"] - 3f64.sqrt()).abs() < 1e-6);
    assert!(rep.audits[0].holds);
}

#[test]
fn audit_not_applicable() {
    let space = trig(&[-1, 0, 1]);
    let inst = AuditInstance {
        model: AuditModel::Subspace(space),
        pointset: PointSet::scalars(&[0.0, 1.0]),
        target: wave("f", vec![(1, c(1.0))]),
        p: Exponent::TWO,
        opts: RatioOptions::default(),
    };
    let rep = lebesgue_audit(Theorem::BT2, &inst).unwrap();
    assert!(!rep.applicable);
    assert!(rep.audits.is_empty());
    assert!(lebesgue_audit(Theorem::UbT3, &inst).is_err());

    let inst = AuditInstance {
        model: AuditModel::Sparse(modes(&[0, 1, 2], 2)),
        ..inst
    };
    let rep = lebesgue_audit(Theorem::UbT5, &inst).unwrap();
    assert!(!rep.applicable);
}

#[test]
fn audit_sparse_theorems() {
    let col = modes(&[-1, 0, 1, 2], 1);
    let ps = random_points(8, 21);
    let f = wave("f", vec![(1, c(1.0)), (5, c(0.05))]);
    for th in [Theorem::UbT3, Theorem::UbT3a, Theorem::UbT5, Theorem::UbT5a, Theorem::UbT6] {
        let inst = AuditInstance {
            model: AuditModel::Sparse(col.clone()),
            pointset: ps.clone(),
            target: f.clone(),
            p: Exponent::TWO,
            opts: RatioOptions::default(),
        };
        let rep = lebesgue_audit(th, &inst).unwrap();
        assert!(rep.applicable, "{th:?}: {:?}", rep.note);
        assert_eq!(rep.violations(), 0, "{th:?}: {:?}", rep.audits);
        assert_eq!(rep.support, vec![2]);
    }
}

#[test]
fn randomized_audits_have_no_violations() {
    let space = Space::new(FunctionSystem::monomials(2), DomainSpec::interval(128)).unwrap();
    let mut rng = rng_for(5, 0);
    let mut reports = Vec::new();
    for trial in 0..6 {
        let m = rng.random_range(3..9);
        let ps = PointSet::scalars(&(0..m).map(|_| rng.random::<f64>()).collect::<Vec<_>>());
        let a = 0.1 + 0.3 * rng.random::<f64>();
        let f = Target::real(format!("f_{a:.3}"), move |x: &Point| fa(a, x.coords()[0]));
        for th in [Theorem::BT1, Theorem::BT1a, Theorem::BT2, Theorem::BT4] {
            let p = [1.0, 2.0, 3.0][trial % 3];
            let inst = AuditInstance {
                model: AuditModel::Subspace(space.clone()),
                pointset: ps.clone(),
                target: f.clone(),
                p: Exponent::new(p).unwrap(),
                opts: RatioOptions { restarts: 6, max_iter: 300, sweep: false, ..RatioOptions::default() },
            };
            reports.push(lebesgue_audit(th, &inst).unwrap());
        }
    }
    let s = BatchSummary::from_reports("mixed", &reports);
    assert_eq!(s.violations, 0, "{s:?}");
    assert!(s.instances > s.not_applicable);
}

#[test]
fn chain_audits() {
    let space = trig(&[-2, -1, 0, 1, 2]);
    let ps = PointSet::new(space.domain().equispaced(7));
    let coef = CVec::from_vec(vec![c(1.0), C64::new(0.0, 1.0), c(-0.5), c(0.2), c(0.9)]);
    let rep = chain_audit("TrDi", &space, &ps, &coef, None, &DiscOptions::default()).unwrap();
    assert_eq!(rep.audits.len(), 3);
    assert_eq!(rep.violations(), 0, "{:?}", rep.audits);
    assert!((rep.constants["M"] - 5f64.sqrt()).abs() < 1e-9);
    let rep = chain_audit("BP1b", &space, &ps, &coef, Some(2 * 5), &DiscOptions::default()).unwrap();
    assert!(rep.applicable);
    let many = PointSet::new(space.domain().equispaced(11));
    let rep = chain_audit("BP1b", &space, &many, &coef, Some(10), &DiscOptions::default()).unwrap();
    assert!(!rep.applicable);
}

#[test]
fn chain_audit_hat() {
    let space = Space::new(make_fa(0.25).unwrap(), DomainSpec::interval(256)).unwrap();
    let ps = PointSet::scalars(&[0.1, 0.6]);
    let rep = chain_audit("chain", &space, &ps, &CVec::from_vec(vec![c(2.0)]), None, &DiscOptions::default()).unwrap();
    assert_eq!(rep.violations(), 0);
}

#[test]
fn report_json_and_batch_csv() {
    let space = trig(&[0, 1]);
    let inst = AuditInstance {
        model: AuditModel::Subspace(space),
        pointset: PointSet::new(DomainSpec::torus(1, 64).equispaced(4)),
        target: wave("f", vec![(0, c(1.0)), (2, c(0.1))]),
        p: Exponent::TWO,
        opts: RatioOptions::default(),
    };
    let rep = lebesgue_audit(Theorem::BT2, &inst).unwrap();
    let text = serde_json::to_string(&rep).unwrap();
    for key in ["algorithm", "theorem", "support", "coefficients", "errors", "audits", "slack"] {
        assert!(text.contains(key), "{key}");
    }
    let back: RecoveryReport = serde_json::from_str(&text).unwrap();
    assert_eq!(back, rep);
    let mut buf = Vec::new();
    write_batch_csv(&[BatchSummary::from_reports("BT2", &[rep])], &mut buf).unwrap();
    let csv = String::from_utf8(buf).unwrap();
    assert!(csv.starts_with("theorem,instances,not_applicable,min_slack,violations\nBT2,1,0,"));
}

#[test]
fn theorem_ids_roundtrip() {
    for t in Theorem::ALL {
        assert_eq!(Theorem::parse(t.id()).unwrap(), t);
    }
    assert!(Theorem::parse("nope").is_err());
}
