use std::f64::consts::PI;

use proptest::prelude::*;

use super::*;
use crate::optim::{sphere_sweep, NormMap, RatioOptions, RatioProblem};
use crate::scalar::{Exponent, Field, C64};
use crate::linalg::{CMat, CVec};

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn hat_pair() -> Space {
    Space::new(FunctionSystem::hat(&[0.25, 0.125]).unwrap(), DomainSpec::interval(64)).unwrap()
}

fn identity_error(g: &CMat) -> f64 {
    let n = g.nrows();
    (g - CMat::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Gram of the orthonormal basis, computed independently from the quadrature.
fn ortho_gram(s: &Space) -> CMat {
    let q = s.quadrature();
    let u = s.ortho_rows(&q.points).unwrap();
    let mut w = u.clone();
    for (j, wt) in q.weights.iter().enumerate() {
        w.row_mut(j).scale_mut(*wt);
    }
    u.adjoint() * w
}

#[test]
fn trig_gram_is_identity() {
    let s = Space::new(FunctionSystem::trig_degree(3), DomainSpec::torus(1, 32)).unwrap();
    assert!(s.gram_is_exact());
    assert!(identity_error(s.gram()) == 0.0);
    assert!(identity_error(&ortho_gram(&s)) < 1e-12);
}

#[test]
fn hat_pair_gram() {
    let s = hat_pair();
    let g = s.gram();
    let want = [[1.0 / 3.0, 3.0 / 16.0], [3.0 / 16.0, 1.0 / 6.0]];
    for i in 0..2 {
        for j in 0..2 {
            assert!((g[(i, j)].re - want[i][j]).abs() < 1e-14, "{i}{j}: {}", g[(i, j)]);
        }
    }
    assert!(identity_error(&ortho_gram(&s)) < 1e-9);
    // T is the inverse Cholesky factor: T G T* = I with T lower triangular.
    let t = &s.basis().transform;
    assert!(t[(0, 1)].norm() == 0.0);
    assert!((t[(0, 0)].re - 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn discrete_identity_gram() {
    let sys = FunctionSystem::discrete(vec![
        vec![1.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0],
        vec![0.0, 0.0, 1.0],
    ])
    .unwrap();
    let s = Space::new(sys, DomainSpec::finite_set(3)).unwrap();
    assert!(identity_error(&(s.gram() * c(3.0))) < 1e-15);
}

#[test]
fn scaled_system_transform() {
    let sys = FunctionSystem::trig_degree(1).scaled(2.0);
    let s = Space::new(sys, DomainSpec::torus(1, 16)).unwrap();
    assert!(identity_error(&(&s.basis().transform * c(2.0))) < 1e-15);
}

#[test]
fn degenerate_system_rejected() {
    let sys = FunctionSystem::discrete(vec![vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
    let e = Space::new(sys, DomainSpec::finite_set(2)).unwrap_err();
    assert!(matches!(e, crate::Error::DegenerateSystem { .. }));
}

#[test]
fn exponential_norms_are_one() {
    let s = Space::new(FunctionSystem::trig_1d(&[3]).unwrap(), DomainSpec::torus(1, 16)).unwrap();
    let one = CVec::from_element(1, c(1.0));
    for p in [1.0, 1.5, 2.0, 4.0, f64::INFINITY] {
        let v = s.lp_norm(&one, Exponent::new(p).unwrap());
        assert!((v - 1.0).abs() < 1e-12, "p={p}: {v}");
    }
}

#[test]
fn fa_norms() {
    let s = Space::new(make_fa(0.25).unwrap(), DomainSpec::interval(16)).unwrap();
    let one = CVec::from_element(1, c(1.0));
    assert!((s.lp_norm(&one, Exponent::TWO) - (1.0f64 / 3.0).sqrt()).abs() < 1e-14);
    assert!((s.lp_norm(&one, Exponent::INF) - 1.0).abs() < 1e-15);
    for a in [0.5, 0.25, 0.1, 1.0 / 32.0] {
        let s = Space::new(make_fa(a).unwrap(), DomainSpec::interval(16)).unwrap();
        for p in [1.0, 1.5, 3.0, 4.0, 7.0] {
            let v = s.lp_norm(&one, Exponent::new(p).unwrap()).powf(p);
            let want = a * (p + 2.0) / (p + 1.0);
            // Non-integer p: the ramp piece is integrated by Gauss–Legendre.
            let tol = if p.fract() == 0.0 { 1e-13 } else { 1e-10 };
            assert!((v - want).abs() < tol, "a={a} p={p}: {v} vs {want}");
        }
    }
}

#[test]
fn christoffel_values() {
    let s = Space::new(FunctionSystem::trig_degree(2), DomainSpec::torus(1, 16)).unwrap();
    for x in [0.0, 1.0, 4.5] {
        assert!((s.christoffel(&Point::scalar(x)).unwrap() - 5.0).abs() < 1e-12);
    }
    let sine = Space::new(
        FunctionSystem::real_trig(&[], &[1]).unwrap(),
        DomainSpec::torus(1, 64),
    )
    .unwrap();
    assert!(sine.christoffel(&Point::scalar(0.0)).unwrap().abs() < 1e-30);
    assert!((sine.christoffel(&Point::scalar(PI / 2.0)).unwrap() - 2.0).abs() < 1e-12);
}

#[test]
fn christoffel_unitary_invariance() {
    // cos/sin and the two exponentials span the same space.
    let a = Space::new(FunctionSystem::real_trig(&[0, 1], &[1]).unwrap(), DomainSpec::torus(1, 32)).unwrap();
    let b = Space::new(FunctionSystem::trig_degree(1), DomainSpec::torus(1, 32)).unwrap();
    for x in [0.3, 2.0, 5.9] {
        let p = Point::scalar(x);
        assert!((a.christoffel(&p).unwrap() - b.christoffel(&p).unwrap()).abs() < 1e-12);
    }
}

#[test]
fn best_approx_examples() {
    let s = Space::new(FunctionSystem::trig_1d(&[0, 1]).unwrap(), DomainSpec::torus(1, 32)).unwrap();
    let f = Target::new("e2", |x| C64::from_polar(1.0, 2.0 * x.0[0]));
    let (u, d) = s.best_approx(&f, Exponent::TWO).unwrap();
    assert!(u.norm() < 1e-14);
    assert!((d - 1.0).abs() < 1e-14);

    let s = Space::new(FunctionSystem::monomials(0), DomainSpec::interval(16)).unwrap();
    let f = Target::real("fa", |x| fa(0.25, x.0[0]));
    let (u, d) = s.best_approx(&f, Exponent::INF).unwrap();
    assert!((u[0].re - 0.5).abs() < 1e-12);
    assert!((d - 0.5).abs() < 1e-12);
}

#[test]
fn best_approx_reproduces_members() {
    let s = hat_pair();
    let coef = CVec::from_vec(vec![c(0.7), c(-1.3)]);
    let f = Target::element(s.system(), &coef);
    for p in [1.0, 2.0, 3.0, f64::INFINITY] {
        let (u, d) = s.best_approx(&f, Exponent::new(p).unwrap()).unwrap();
        assert!(d < 1e-8, "p={p}: {d}");
        assert!((u - &coef).norm() < 1e-7, "p={p}");
    }
}

#[test]
fn projection_residual_is_orthogonal() {
    let s = Space::new(FunctionSystem::trig_degree(2), DomainSpec::torus(1, 64)).unwrap();
    let f = Target::real("bump", |x| (x.0[0].cos()).exp());
    let (u, _) = s.best_approx(&f, Exponent::TWO).unwrap();
    let q = s.quadrature();
    let phi = s.raw_rows(&q.points).unwrap();
    let fu = &phi * &u;
    for i in 0..s.dim() {
        let ip: C64 = (0..q.points.len())
            .map(|j| q.weights[j] * phi[(j, i)].conj() * (f.value(&q.points[j]) - fu[j]))
            .sum();
        assert!(ip.norm() < 1e-9);
    }
}

#[test]
fn nikolskii_examples() {
    let s = Space::new(FunctionSystem::trig_degree(2), DomainSpec::torus(1, 64)).unwrap();
    let opts = RatioOptions::default();
    let m = s.nikolskii(Exponent::TWO, Exponent::INF, &opts).unwrap();
    assert!((m.value - 5f64.sqrt()).abs() < 1e-10);
    let m = s.nikolskii(Exponent::new(3.0).unwrap(), Exponent::new(3.0).unwrap(), &opts).unwrap();
    assert_eq!(m.value, 1.0);
    assert!(s.nikolskii(Exponent::INF, Exponent::TWO, &opts).is_err());
    let f = Space::new(make_fa(0.25).unwrap(), DomainSpec::interval(32)).unwrap();
    let m = f.nikolskii(Exponent::TWO, Exponent::INF, &opts).unwrap();
    assert!((m.value - 3f64.sqrt()).abs() < 1e-12);
}

#[test]
fn nikolskii_two_four_trig() {
    // Symmetric family a e^{-ix} + 1 + a e^{ix}:
    // ratio⁴ = (1 + 12a² + 6a⁴) / (1 + 2a²)².
    let s = Space::new(FunctionSystem::trig_degree(1), DomainSpec::torus(1, 64)).unwrap();
    let m = s.nikolskii(Exponent::TWO, Exponent::new(4.0).unwrap(), &RatioOptions::default()).unwrap();
    let family = |a: f64| ((1.0 + 12.0 * a * a + 6.0 * a.powi(4)) / (1.0 + 2.0 * a * a).powi(2)).powf(0.25);
    let scan = (0..=200_000).map(|i| family(i as f64 * 1e-5)).fold(0.0, f64::max);
    assert!(m.value >= scan - 1e-9, "{} vs {scan}", m.value);
    assert!(m.value <= scan + 1e-8, "{} vs {scan}", m.value);
}

#[test]
fn json_construction() {
    let s = Space::from_json(
        r#"{"system":{"kind":"trig","frequencies":[[-1],[0],[1]]},
            "domain":{"kind":"torus","dim":1,"grid_size":32}}"#,
    )
    .unwrap();
    assert_eq!(s.dim(), 3);
    let bad = Space::from_json(
        r#"{"system":{"kind":"hat","a":[0.25]},"domain":{"kind":"torus","dim":1,"grid_size":32}}"#,
    );
    assert!(bad.is_err());
}

#[test]
fn sup_refinement_beats_grid() {
    // A coarse grid misses the peak of cos(x - 0.1).
    let s = Space::new(FunctionSystem::trig_1d(&[-1, 1]).unwrap(), DomainSpec::torus(1, 8)).unwrap();
    let ph = C64::from_polar(0.5, -0.1);
    let coef = CVec::from_vec(vec![ph.conj(), ph]);
    assert!((s.lp_norm(&coef, Exponent::INF) - 1.0).abs() < 1e-12);
}

fn trig_space() -> Space {
    Space::new(FunctionSystem::trig_1d(&[-1, 0, 2]).unwrap(), DomainSpec::torus(1, 64)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval(re in prop::collection::vec(-2.0f64..2.0, 3), im in prop::collection::vec(-2.0f64..2.0, 3)) {
        let s = trig_space();
        let coef = CVec::from_fn(3, |i, _| C64::new(re[i], im[i]));
        let n = s.lp_norm(&coef, Exponent::TWO).powi(2);
        prop_assert!((n - coef.norm_squared()).abs() < 1e-12);
        // Quadrature agrees with the closed form.
        let q = s.lp_norm_fn(&Target::element(s.system(), &coef), Exponent::TWO).powi(2);
        prop_assert!((q - n).abs() < 1e-12 * (1.0 + n));
    }

    #[test]
    fn norm_monotone_and_homogeneous(re in prop::collection::vec(-2.0f64..2.0, 2), t in 0.1f64..5.0) {
        let s = hat_pair();
        let coef = CVec::from_fn(2, |i, _| C64::new(re[i], 0.0));
        let ps = [1.0, 1.5, 2.0, 3.0, 6.0, f64::INFINITY];
        let vals: Vec<f64> = ps.iter().map(|&p| s.lp_norm(&coef, Exponent::new(p).unwrap())).collect();
        for w in vals.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-8);
        }
        for (&p, v) in ps.iter().zip(&vals) {
            let scaled = s.lp_norm(&coef.map(|z| z * t), Exponent::new(p).unwrap());
            prop_assert!((scaled - t * v).abs() <= 1e-10 * (1.0 + t * v));
        }
    }

    #[test]
    fn christoffel_duality(x in 0.0f64..(2.0 * PI)) {
        let s = Space::new(FunctionSystem::real_trig(&[0, 1], &[2]).unwrap(), DomainSpec::torus(1, 32)).unwrap();
        let pt = Point::scalar(x);
        let k = s.christoffel(&pt).unwrap();
        let row = s.ortho_rows(std::slice::from_ref(&pt)).unwrap();
        let problem = RatioProblem {
            num: NormMap::sampled(row, vec![1.0], Exponent::INF),
            den: NormMap::Euclid,
            field: Field::Real,
            dim: 3,
        };
        let (v, _) = sphere_sweep(&problem);
        prop_assert!((v - k.sqrt()).abs() <= 1e-3 * k.sqrt());
    }
}
