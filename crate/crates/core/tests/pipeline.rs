//! End-to-end checks through the public API, each against an oracle computed here.

use std::f64::consts::PI;

use sampdisc::design::kw_design;
use sampdisc::discretize::{disc_constants, is_injective, sample_vector, DiscOptions, PointSet};
use sampdisc::fnspace::{fa, DomainSpec, FunctionSystem, Point, Space, Target};
use sampdisc::linalg::{CMat, CVec};
use sampdisc::matrixtools::{build_design, opnorm_rp, BasisKind};
use sampdisc::recovery::ell_fit;
use sampdisc::{Exponent, C64};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    h / 3.0 * (f(a) + f(b) + inner)
}

#[test]
fn equispaced_trig_aliases_and_discretizes_exactly() {
    let space = Space::new(FunctionSystem::trig_degree(2), DomainSpec::torus(1, 64)).unwrap();
    let ps = PointSet::new(space.domain().equispaced(5));
    assert!(is_injective(&space, &ps).unwrap());

    let d = build_design(&space, &ps, BasisKind::Orthonormal).unwrap();
    let gram = d.a.adjoint() * &d.a / C64::new(5.0, 0.0);
    assert!((gram - CMat::identity(5, 5)).iter().all(|z| z.norm() < 1e-12));

    let r = disc_constants(&space, &ps, Exponent::TWO, Exponent::TWO, &DiscOptions::default()).unwrap();
    assert!((r.d_left.value() - 1.0).abs() < 1e-9 && (r.d_right.value() - 1.0).abs() < 1e-9);

    // e^{3ix} agrees with e^{-2ix} on five equispaced points.
    let f = Target::new("e3", |x: &Point| C64::from_polar(1.0, 3.0 * x.coords()[0]));
    let fit = ell_fit(&f, &space, &ps, Exponent::TWO, None).unwrap();
    assert!(fit.disc_error < 1e-12);
    let u = Target::element(space.system(), &fit.coefficients);
    for k in 0..7 {
        let x = Point::scalar(0.37 + k as f64);
        let want = C64::from_polar(1.0, -2.0 * x.coords()[0]);
        assert!((u.value(&x) - want).norm() < 1e-10);
    }
}

#[test]
fn hat_gram_and_norms_match_simpson() {
    let a = [0.25, 0.125];
    let space = Space::new(FunctionSystem::hat(&a).unwrap(), DomainSpec::interval(64)).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            // Kinks at a and 2a lie on the Simpson grid.
            let want = simpson(|x| fa(a[i], x) * fa(a[j], x), 0.0, 1.0, 4096);
            assert!((space.gram()[(i, j)].re - want).abs() < 1e-9, "{i}{j}");
        }
    }
    let e0 = CVec::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]);
    for p in [1.0, 3.0, 4.5] {
        let want = simpson(|x| fa(0.25, x).powf(p), 0.0, 1.0, 4096).powf(1.0 / p);
        assert!((space.lp_norm(&e0, Exponent::new(p).unwrap()) - want).abs() < 1e-8, "p = {p}");
    }
    assert!((space.lp_norm(&e0, Exponent::INF) - 1.0).abs() < 1e-12);
}

#[test]
fn sampling_is_linear_and_pointwise() {
    let ps = PointSet::scalars(&[0.125, 0.375, 0.75]);
    let f = Target::real("f_1/4", |x: &Point| fa(0.25, x.coords()[0]));
    let g = Target::real("x", |x: &Point| x.coords()[0]);
    let s = sample_vector(&f, &ps);
    assert_eq!(s.iter().map(|z| z.re).collect::<Vec<_>>(), vec![1.0, 0.5, 0.0]);
    let (al, be) = (C64::new(2.0, -1.0), C64::new(0.5, 0.0));
    let combo = sample_vector(&f.combine(al, &g, be), &ps);
    let direct = s * al + sample_vector(&g, &ps) * be;
    assert!((combo - direct).norm() < 1e-15);
}

#[test]
fn kw_reaches_its_target_on_a_sine_cosine_grid() {
    let sys = FunctionSystem::real_trig(&[0, 1], &[1]).unwrap();
    let space = Space::new(sys.clone(), DomainSpec::torus(1, 64)).unwrap();
    let grid: Vec<Point> = (0..24).map(|k| Point::scalar(2.0 * PI * k as f64 / 24.0)).collect();
    let out = kw_design(&space, &grid, 1e-3, 20_000).unwrap();
    // Christoffel function of the returned measure, recomputed from scratch.
    let rows: Vec<Vec<C64>> = grid.iter().map(|x| sys.eval_point(x)).collect();
    let n = 3;
    let mut g = CMat::zeros(n, n);
    for (r, &w) in rows.iter().zip(&out.measure.masses) {
        let v = CVec::from_vec(r.clone());
        g += &v * v.adjoint() * C64::new(w, 0.0);
    }
    let gi = g.try_inverse().unwrap();
    let kmax = rows
        .iter()
        .map(|r| {
            let v = CVec::from_vec(r.clone());
            (v.adjoint() * &gi * &v)[(0, 0)].re
        })
        .fold(0.0, f64::max);
    assert!((kmax - out.max_christoffel).abs() < 1e-8 * kmax);
    assert!((3.0 - 1e-9..=3.0 * (1.0 + 1e-3)).contains(&kmax));
    assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn optimized_operator_norm_matches_angle_sweep() {
    let a = CMat::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 2.0, 0.8, 0.1].map(|x| C64::new(x, 0.0)));
    let (r, p) = (3.0, 4.0);
    let norm = |v: &[f64], e: f64| v.iter().map(|x| x.abs().powf(e)).sum::<f64>().powf(1.0 / e);
    let sweep = (0..200_000)
        .map(|k| {
            let t = PI * k as f64 / 200_000.0;
            let x = [t.cos(), t.sin()];
            let ax: Vec<f64> = (0..3).map(|i| a[(i, 0)].re * x[0] + a[(i, 1)].re * x[1]).collect();
            norm(&ax, p) / norm(&x, r)
        })
        .fold(0.0, f64::max);
    let got = opnorm_rp(&a, Exponent::new(r).unwrap(), Exponent::new(p).unwrap());
    assert!(got >= sweep * (1.0 - 1e-12));
    assert!(got <= sweep * (1.0 + 1e-6), "{got} vs {sweep}");
}
