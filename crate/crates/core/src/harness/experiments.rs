use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

use super::{num, Ctx, Experiment};
use crate::design::{
    equalize_audit, iid_points_verified, kw_design, search_ldi_points, universal_ldi_constant,
    weight_budget_trick, CollectionSpec, SearchOptions,
};
use crate::discretize::{
    disc_constants, disc_norm, khinchin_audit, khinchin_constant, rademacher_average, ril1_audit,
    rip1_audit, rip3_audit, sample_vector, wrdi_audit, DiscOptions, PointSet,
};
use crate::error::{Error, Result};
use crate::fnspace::{fa, DomainSpec, FunctionSystem, Point, Space, SpaceSpec, Target};
use crate::linalg::{CMat, CVec};
use crate::matrixtools::{
    build_design, even_power_rdi, exhaustive_rdi_rows, opnorm_rp, opnorm_rp_with,
    orthonormal_columns, pointwise_check, select_rdi_rows, BasisKind, PointwiseSide,
};
use crate::optim::RatioOptions;
use crate::recovery::{
    chain_audit, lebesgue_audit, recover_universal, AuditInstance, AuditModel, BatchSummary,
    RecoveryReport, Theorem, Variant,
};
use crate::scalar::{Constant, Exponent, C64};

pub static REGISTRY: &[Experiment] = &[
    Experiment {
        name: "disc_basics",
        about: "D_L, D_R and chaining on equispaced sets; norm, sampling and Nikol'skii consistency",
        topics: &["lp_norms", "sampling_vector", "ldi", "rdi", "nikolskii"],
        run: disc_basics,
    },
    Experiment {
        name: "dft_exact",
        about: "exact two-sided discretization of trigonometric polynomials at 2n+1 equispaced points",
        topics: &["ldi", "rdi"],
        run: dft_exact,
    },
    Experiment {
        name: "oracle_agreement",
        about: "optimizer constants against the generalized eigenvalue oracle for p = q = 2",
        topics: &["ldi", "rdi"],
        run: oracle_agreement,
    },
    Experiment {
        name: "ril1",
        about: "weighted point bound λ_j K(ξ^j)^{q/2} ≤ (DM)^q on random weighted sets",
        topics: &["RIL1", "weighted_one_sided"],
        run: ril1,
    },
    Experiment {
        name: "ric1_scaling",
        about: "N^{q/2} ≤ m (D_R M)^q for dyadic lacunary systems",
        topics: &["RIP1", "RIC1"],
        run: ric1_scaling,
    },
    Experiment {
        name: "remlosi",
        about: "LDI(p, q) with m = O(N) points through L2 discretization and a Nikol'skii step",
        topics: &["RemLosi"],
        run: remlosi,
    },
    Experiment {
        name: "khinchin",
        about: "exact Rademacher averages and the Khinchin chain",
        topics: &["RIP2"],
        run: khinchin,
    },
    Experiment {
        name: "rip3_fa",
        about: "point count bound for injective RDI on span{f_a, f_{a/2}}",
        topics: &["RIP3", "fa_family"],
        run: rip3_fa,
    },
    Experiment {
        name: "wrdi_transfer",
        about: "weighted RDI(r) from weighted RDI(p) and NI(2, p)",
        topics: &["wrdi_transfer", "weighted_one_sided"],
        run: wrdi_transfer,
    },
    Experiment {
        name: "weight_budget",
        about: "weight sum of a two-sided weighted discretizer against D_2^q",
        topics: &["weight_budget"],
        run: weight_budget,
    },
    Experiment {
        name: "ap4_equalize",
        about: "replication of weighted points into an unweighted LDI set",
        topics: &["AP4"],
        run: ap4_equalize,
    },
    Experiment {
        name: "ldi_search",
        about: "LDI point sets of size m = O(N) by randomized search",
        topics: &["AP6", "ldi_2_2"],
        run: ldi_search,
    },
    Experiment {
        name: "iid_sampling",
        about: "i.i.d. points with a verified two-sided bound",
        topics: &["iid_sampling"],
        run: iid_sampling,
    },
    Experiment {
        name: "design_matrix",
        about: "design matrices and (r, p) operator norms against direct formulas",
        topics: &["design_matrix", "opnorm"],
        run: design_matrix,
    },
    Experiment {
        name: "pointwise",
        about: "pointwise matrix estimates and the operator norm corollary",
        topics: &["pointwise", "opnorm"],
        run: pointwise,
    },
    Experiment {
        name: "lunin_bench",
        about: "greedy RDI(2,2) row selection against the exhaustive optimum",
        topics: &["Lunin"],
        run: lunin_bench,
    },
    Experiment {
        name: "even_q",
        about: "RDI(2s) from the RDI(2,2) selection on s-fold products",
        topics: &["even_q"],
        run: even_q,
    },
    Experiment {
        name: "recovery_suite",
        about: "Lebesgue-type audits of the recovery theorems with measured hypothesis constants",
        topics: &[
            "best_approx",
            "assumptions_A1_A2",
            "alg_lpw",
            "alg_linf",
            "BT1",
            "BT1a",
            "BT2",
            "BT3",
            "BT4",
            "sigma_v",
            "alg_lp",
            "alg_lp_s",
            "alg_lp_inf",
            "universal_ldi",
            "ubT3",
            "ubT3a",
            "ubT5",
            "ubT5a",
            "ubT6",
        ],
        run: recovery_suite,
    },
    Experiment {
        name: "kw_chain",
        about: "optimal design measure, its Nikol'skii certificate, and the sup-norm chain",
        topics: &["KW", "BP1", "BP1a", "BP1b"],
        run: kw_chain,
    },
    Experiment {
        name: "trd_chain",
        about: "sup-norm chain for trigonometric polynomials and LDI(∞, ∞)",
        topics: &["TrD", "TrDi", "LDI_infty"],
        run: trd_chain,
    },
    Experiment {
        name: "sparse_recovery",
        about: "exact recovery of v-sparse elements by the sample algorithm",
        topics: &["alg_lp_s", "universal_ldi", "sigma_v"],
        run: sparse_recovery,
    },
    Experiment {
        name: "universal_ldi",
        about: "universal LDI constants over all v-term spans",
        topics: &["universal_ldi"],
        run: universal_ldi,
    },
];

fn cval(c: Constant) -> Value {
    num(c.value())
}

fn trig_spec(degree: usize, grid: usize) -> SpaceSpec {
    SpaceSpec {
        system: FunctionSystem::trig_degree(degree as i64),
        domain: DomainSpec::torus(1, grid),
    }
}

fn random_points(domain: &DomainSpec, m: usize, rng: &mut ChaCha8Rng) -> Vec<Point> {
    (0..m).map(|_| domain.sample(rng)).collect()
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_coef(n: usize, complex: bool, rng: &mut ChaCha8Rng) -> CVec {
    CVec::from_fn(n, |_, _| {
        let re = gaussian(rng);
        let im = if complex { gaussian(rng) } else { 0.0 };
        C64::new(re, im)
    })
}

fn random_matrix(m: usize, n: usize, complex: bool, rng: &mut ChaCha8Rng) -> CMat {
    CMat::from_fn(m, n, |_, _| {
        let re = gaussian(rng);
        let im = if complex { gaussian(rng) } else { 0.0 };
        C64::new(re, im)
    })
}

/// Distinct sorted frequencies from `-k..=k`.
fn random_frequencies(n: usize, k: i64, rng: &mut ChaCha8Rng) -> Vec<i64> {
    let mut f: Vec<i64> = sample(rng, (2 * k + 1) as usize, n).into_iter().map(|i| i as i64 - k).collect();
    f.sort_unstable();
    f
}

fn rel_diff(a: Constant, b: Constant) -> f64 {
    match (a, b) {
        (Constant::Infinite, Constant::Infinite) => 0.0,
        (Constant::Finite(x), Constant::Finite(y)) => {
            let s = x.abs().max(y.abs());
            if s == 0.0 {
                0.0
            } else {
                (x - y).abs() / s
            }
        }
        _ => f64::INFINITY,
    }
}

fn disc_opts(ratio: RatioOptions) -> DiscOptions {
    DiscOptions {
        ratio,
        ..Default::default()
    }
}

fn disc_basics(ctx: &mut Ctx) -> Result<()> {
    let degree = ctx.usize("degree", 2)?;
    let grid = ctx.usize("grid_size", 64)?;
    let space = ctx.space(|| Ok(trig_spec(degree, grid)))?;
    let ms = ctx.usizes("m", &[5, 7, 9])?;
    let exps = ctx.exponents("p", &[2.0, 4.0])?;
    let opts = disc_opts(ctx.ratio_opts(32)?);
    let sets: Vec<(String, PointSet)> = match ctx.pointset() {
        Some(ps) => vec![("configured".into(), ps)],
        None => ms
            .iter()
            .map(|&m| (format!("equispaced_{m}"), PointSet::new(space.domain().equispaced(m))))
            .collect(),
    };
    for (label, ps) in &sets {
        for &p in &exps {
            let r = disc_constants(&space, ps, p, p, &opts)?;
            let chain = r.margins.chaining;
            ctx.case(
                format!("{label}_p{p}"),
                vec![
                    ("m", Value::from(ps.len())),
                    ("p", num(p.value())),
                    ("D_L", cval(r.d_left)),
                    ("D_R", cval(r.d_right)),
                    ("chaining", chain.map_or(Value::Null, num)),
                ],
                chain.is_none_or(|c| c >= -1e-9),
                chain,
            );
        }
    }
    // Two independent evaluations of norms and the sampling operator.
    let mut rng = ctx.rng();
    let n = space.dim();
    let c = random_coef(n, space.field() == crate::Field::Complex, &mut rng);
    let f = Target::element(space.system(), &c);
    let g = Target::element(space.system(), &random_coef(n, false, &mut rng));
    for &p in exps.iter().chain([Exponent::INF].iter()) {
        let a = space.lp_norm(&c, p);
        let b = space.lp_norm_fn(&f, p);
        let dev = (a - b).abs() / a.max(1e-300);
        ctx.case(
            format!("norm_paths_p{p}"),
            vec![("coefficient_path", num(a)), ("function_path", num(b))],
            dev <= 1e-9,
            Some(1e-9 - dev),
        );
    }
    let ps = PointSet::new(random_points(space.domain(), 7, &mut rng));
    let (alpha, beta) = (C64::new(0.3, -1.1), C64::new(2.0, 0.5));
    let h = f.combine(alpha, &g, beta);
    let lhs = sample_vector(&h, &ps);
    let rhs = sample_vector(&f, &ps) * alpha + sample_vector(&g, &ps) * beta;
    let dev = (&lhs - &rhs).camax() / lhs.camax().max(1e-300);
    ctx.case("sampling_linearity", vec![("deviation", num(dev))], dev <= 1e-12, Some(1e-12 - dev));
    let ones = CVec::from_element(4, C64::new(1.0, 0.0));
    let d1 = disc_norm(&ones, Exponent::new(3.0)?, None)?;
    ctx.case("disc_norm_ones", vec![("value", num(d1))], (d1 - 1.0).abs() <= 1e-15, None);
    let ni = space.nikolskii(Exponent::TWO, Exponent::INF, &opts.ratio)?;
    let (kmax, _) = space.max_christoffel();
    let dev = (ni.value - kmax.sqrt()).abs() / kmax.sqrt();
    ctx.case(
        "nikolskii_2_inf",
        vec![("M", num(ni.value)), ("sqrt_max_christoffel", num(kmax.sqrt()))],
        dev <= 1e-9,
        Some(1e-9 - dev),
    );
    Ok(())
}

fn dft_exact(ctx: &mut Ctx) -> Result<()> {
    let degree = ctx.usize("degree", 8)?;
    let m = ctx.usize("m", 2 * degree + 1)?;
    let grid = ctx.usize("grid_size", 64)?;
    let tol = ctx.f64("tolerance", 1e-9)?;
    let space = Space::from_spec(&trig_spec(degree, grid))?;
    let ps = PointSet::new(space.domain().equispaced(m));
    let r = disc_constants(&space, &ps, Exponent::TWO, Exponent::TWO, &disc_opts(ctx.ratio_opts(32)?))?;
    let dev = (r.d_left.value() - 1.0).abs().max((r.d_right.value() - 1.0).abs());
    ctx.case(
        format!("N{}_m{m}", space.dim()),
        vec![
            ("N", Value::from(space.dim())),
            ("m", Value::from(m)),
            ("D_L", cval(r.d_left)),
            ("D_R", cval(r.d_right)),
            ("method", serde_json::to_value(&r.method)?),
        ],
        dev <= tol,
        Some(tol - dev),
    );
    Ok(())
}

fn oracle_agreement(ctx: &mut Ctx) -> Result<()> {
    let count = ctx.usize("instances", 20)?;
    let nmax = ctx.usize("n_max", 6)?;
    let mmax = ctx.usize("m_max", 12)?;
    let tol = ctx.f64("tolerance", 1e-6)?;
    let base = ctx.ratio_opts(32)?;
    let mut rng = ctx.rng();
    let domain = DomainSpec::torus(1, 32);
    let mut worst = 0.0f64;
    for i in 0..count {
        let n = rng.random_range(1..=nmax);
        let freqs = random_frequencies(n, 6, &mut rng);
        let space = Space::new(FunctionSystem::trig_1d(&freqs)?, domain.clone())?;
        let m = rng.random_range(1..=mmax);
        let ps = PointSet::new(random_points(&domain, m, &mut rng));
        let exact = disc_constants(&space, &ps, Exponent::TWO, Exponent::TWO, &disc_opts(base.clone()))?;
        let forced = RatioOptions {
            force_optimizer: true,
            ..base.clone()
        };
        let opt = disc_constants(&space, &ps, Exponent::TWO, Exponent::TWO, &disc_opts(forced))?;
        let diff = rel_diff(exact.d_left, opt.d_left).max(rel_diff(exact.d_right, opt.d_right));
        worst = worst.max(diff);
        let chain_ok = exact.margins.chaining.is_none_or(|c| c >= -1e-9);
        ctx.case(
            format!("instance_{i}"),
            vec![
                ("N", Value::from(n)),
                ("m", Value::from(m)),
                ("D_L_eigen", cval(exact.d_left)),
                ("D_L_optimizer", cval(opt.d_left)),
                ("D_R_eigen", cval(exact.d_right)),
                ("D_R_optimizer", cval(opt.d_right)),
                ("relative_difference", num(diff)),
                ("chaining", exact.margins.chaining.map_or(Value::Null, num)),
            ],
            diff <= tol && chain_ok,
            Some(tol - diff),
        );
    }
    ctx.summary("worst_relative_difference", num(worst));
    Ok(())
}

fn ril1(ctx: &mut Ctx) -> Result<()> {
    let count = ctx.usize("instances", 10)?;
    let p_choices = ctx.f64s("p", &[3.0, 4.0])?;
    let q_choices = ctx.f64s("q", &[2.0, 3.0, 4.0])?;
    let nmax = ctx.usize("n_max", 3)?;
    let opts = ctx.ratio_opts(16)?;
    let mut rng = ctx.rng();
    let domain = DomainSpec::torus(1, 64);
    for i in 0..count {
        let n = rng.random_range(1..=nmax);
        let space = Space::new(FunctionSystem::trig_1d(&random_frequencies(n, 3, &mut rng))?, domain.clone())?;
        let m = rng.random_range(n..=n + 5);
        let pts = random_points(&domain, m, &mut rng);
        let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let p = Exponent::new(p_choices[i % p_choices.len()])?;
        let q = Exponent::new(q_choices[i % q_choices.len()])?;
        let r = ril1_audit(&space, &PointSet::weighted(pts, w)?, p, q, &opts)?;
        ctx.case(
            format!("instance_{i}"),
            vec![
                ("N", Value::from(n)),
                ("m", Value::from(m)),
                ("p", num(p.value())),
                ("q", num(q.value())),
                ("D", num(r.d)),
                ("M", num(r.m_const)),
                ("worst_relative_slack", num(r.worst_slack)),
            ],
            r.violations == 0,
            Some(r.worst_slack),
        );
    }
    Ok(())
}

fn ric1_scaling(ctx: &mut Ctx) -> Result<()> {
    let n_min = ctx.usize("n_min", 2)?;
    let n_max = ctx.usize("n_max", 6)?;
    let p = ctx.exponent("p", 4.0)?;
    let q = ctx.exponent("q", 4.0)?;
    let multipliers = ctx.usizes("m_multipliers", &[1, 2, 4])?;
    let random_sets = ctx.usize("random_sets", 1)?;
    let grid = ctx.usize("grid_size", 256)?;
    let opts = ctx.ratio_opts(16)?;
    let mut rng = ctx.rng();
    for n in n_min..=n_max {
        let space = Space::new(FunctionSystem::dyadic_lacunary(n), DomainSpec::torus(1, grid))?;
        let mut sets: Vec<(String, PointSet)> = multipliers
            .iter()
            .map(|&k| (format!("equispaced_{}", k * n), PointSet::new(space.domain().equispaced(k * n))))
            .collect();
        for s in 0..random_sets {
            sets.push((format!("random_{s}"), PointSet::new(random_points(space.domain(), 2 * n, &mut rng))));
        }
        for (label, ps) in sets {
            let r = rip1_audit(&space, &ps, p, q, &opts)?;
            ctx.case(
                format!("N{n}_{label}"),
                vec![
                    ("N", Value::from(n)),
                    ("m", Value::from(r.m)),
                    ("c", num(r.c)),
                    ("D_R", num(r.d)),
                    ("M", num(r.m_const)),
                    ("lhs", num(r.lhs)),
                    ("rhs", num(r.rhs)),
                ],
                r.holds,
                Some((r.rhs - r.lhs) / r.rhs),
            );
        }
    }
    Ok(())
}

fn remlosi(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.usize("n", 4)?;
    let p = ctx.exponent("p", 4.0)?;
    let q = ctx.exponent("q", 4.0)?;
    let factors = ctx.usizes("m_factors", &[2, 4, 8])?;
    let grid = ctx.usize("grid_size", 256)?;
    if q.value() < 2.0 {
        return Err(Error::InvalidParameters("the chain needs q ≥ 2".into()));
    }
    let opts = disc_opts(ctx.ratio_opts(16)?);
    let space = Space::new(FunctionSystem::dyadic_lacunary(n), DomainSpec::torus(1, grid))?;
    let m_const = space.nikolskii(Exponent::TWO, p, &opts.ratio)?.value;
    let mut rng = ctx.rng();
    for &k in &factors {
        let m = k * n;
        let ps = PointSet::new(random_points(space.domain(), m, &mut rng));
        let d2 = disc_constants(&space, &ps, Exponent::TWO, Exponent::TWO, &opts)?.d_left;
        let dl = disc_constants(&space, &ps, p, q, &opts)?.d_left;
        let bound = m_const * d2.value();
        let pass = dl.is_finite() && dl.value() <= bound * (1.0 + 1e-9);
        ctx.case(
            format!("m{m}"),
            vec![
                ("m", Value::from(m)),
                ("m_over_N", Value::from(k)),
                ("M", num(m_const)),
                ("D_L_2_2", cval(d2)),
                ("chain_bound", num(bound)),
                ("D_L", cval(dl)),
            ],
            pass,
            Some(bound - dl.value()),
        );
    }
    Ok(())
}

fn khinchin(ctx: &mut Ctx) -> Result<()> {
    let nmax = ctx.usize("n_max", 10)?;
    let exps = ctx.f64s("p", &[2.0, 4.0, 6.0])?;
    let degrees = ctx.usizes("audit_degrees", &[0, 1])?;
    let opts = ctx.ratio_opts(16)?;
    let mut rng = ctx.rng();
    for n in 1..=nmax {
        let a: Vec<C64> = (0..n).map(|_| C64::new(gaussian(&mut rng), 0.0)).collect();
        let s2: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let s4: f64 = a.iter().map(|z| z.norm_sqr().powi(2)).sum();
        for &p in &exps {
            let avg = rademacher_average(&a, p)?;
            let kp = khinchin_constant(p)?;
            let upper = kp.powf(p) * s2.powf(0.5 * p);
            let mut values = vec![("N", Value::from(n)), ("p", num(p)), ("average", num(avg)), ("khinchin_bound", num(upper))];
            let mut pass = avg <= upper * (1.0 + 1e-12);
            if p == 4.0 {
                let closed = 3.0 * s2 * s2 - 2.0 * s4;
                let dev = (avg - closed).abs() / (s2 * s2);
                values.push(("fourth_moment_formula", num(closed)));
                values.push(("formula_deviation", num(dev)));
                pass &= dev <= 1e-12;
            }
            if p == 2.0 {
                pass &= (avg - s2).abs() <= 1e-12 * s2;
            }
            ctx.case(format!("moments_N{n}_p{p}"), values, pass, Some((upper - avg) / upper));
        }
    }
    for &deg in &degrees {
        let space = Space::from_spec(&trig_spec(deg, 64))?;
        let m = 2 * space.dim() + 2;
        let mut w: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.0)).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        let ps = PointSet::weighted(space.domain().equispaced(m), w)?;
        for &p in exps.iter().filter(|&&p| p >= 2.0) {
            let r = khinchin_audit(&space, &ps, p, None, &opts)?;
            let slack = r.slacks.iter().copied().fold(f64::INFINITY, f64::min);
            ctx.case(
                format!("chain_N{}_p{p}", space.dim()),
                vec![
                    ("N", Value::from(r.n)),
                    ("m", Value::from(r.m)),
                    ("p", num(p)),
                    ("K_p", num(r.k_p)),
                    ("D1", num(r.d1)),
                    ("D2", num(r.d2)),
                    ("M", num(r.m_const)),
                    ("final_lhs", num(r.final_lhs)),
                    ("final_rhs", num(r.final_rhs)),
                ],
                r.holds,
                Some(slack),
            );
        }
    }
    Ok(())
}

fn rip3_fa(ctx: &mut Ctx) -> Result<()> {
    let k_min = ctx.usize("k_min", 3)?;
    let k_max = ctx.usize("k_max", 8)?;
    let p = ctx.exponent("p", 2.0)?;
    let q = ctx.exponent("q", 2.0)?;
    let sets = ctx.usize("sets", 4)?;
    let grid = ctx.usize("grid_size", 256)?;
    let opts = ctx.ratio_opts(16)?;
    let mut rng = ctx.rng();
    for k in k_min..=k_max {
        let a = 0.5f64.powi(k as i32);
        for s in 0..sets {
            let m = rng.random_range(2..=8);
            let xs: Vec<f64> = (0..m)
                .map(|_| if rng.random::<f64>() < 0.75 { 2.0 * a * rng.random::<f64>() } else { rng.random() })
                .collect();
            let r = rip3_audit(a, p, q, &PointSet::scalars(&xs), grid, &opts)?;
            ctx.case(
                format!("k{k}_set{s}"),
                vec![
                    ("a", num(a)),
                    ("m", Value::from(r.m)),
                    ("injective", Value::from(r.injective)),
                    ("D", num(r.d)),
                    ("bound", num(r.bound)),
                ],
                r.holds,
                r.injective.then_some(r.m as f64 - r.bound),
            );
        }
    }
    Ok(())
}

fn normalized_weights(m: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn wrdi_transfer(ctx: &mut Ctx) -> Result<()> {
    let degree = ctx.usize("degree", 1)?;
    let grid = ctx.usize("grid_size", 64)?;
    let space = ctx.space(|| Ok(trig_spec(degree, grid)))?;
    let p = ctx.f64("p", 4.0)?;
    let rs = ctx.f64s("r", &[2.0, 3.0])?;
    let count = ctx.usize("instances", 3)?;
    let opts = ctx.ratio_opts(16)?;
    let mut rng = ctx.rng();
    let n = space.dim();
    let mut sets = vec![PointSet::weighted(space.domain().equispaced(n), vec![1.0 / n as f64; n])?];
    for _ in 0..count {
        let m = rng.random_range(n..=n + 4);
        sets.push(PointSet::weighted(random_points(space.domain(), m, &mut rng), normalized_weights(m, &mut rng))?);
    }
    for (i, ps) in sets.iter().enumerate() {
        for &r in &rs {
            let a = wrdi_audit(&space, ps, p, r, &opts)?;
            ctx.case(
                format!("set{i}_r{r}"),
                vec![
                    ("m", Value::from(ps.len())),
                    ("p", num(p)),
                    ("r", num(r)),
                    ("D_r", num(a.d_r)),
                    ("D_p", num(a.d_p)),
                    ("M", num(a.m_const)),
                    ("bound", num(a.bound)),
                ],
                a.holds,
                Some(a.bound - a.d_r),
            );
        }
    }
    Ok(())
}

fn weight_budget(ctx: &mut Ctx) -> Result<()> {
    let degree = ctx.usize("degree", 1)?;
    let count = ctx.usize("instances", 4)?;
    let q = ctx.exponent("q", 2.0)?;
    let opts = disc_opts(ctx.ratio_opts(16)?);
    let space = Space::from_spec(&trig_spec(degree, 64))?;
    let mut rng = ctx.rng();
    let n = space.dim();
    let mut sets = vec![PointSet::weighted(space.domain().equispaced(n + 2), vec![1.0 / (n + 2) as f64; n + 2])?];
    for _ in 0..count {
        let m = rng.random_range(n + 1..=n + 5);
        let scale = rng.random_range(0.5..1.5);
        let w: Vec<f64> = normalized_weights(m, &mut rng).into_iter().map(|x| x * scale).collect();
        sets.push(PointSet::weighted(random_points(space.domain(), m, &mut rng), w)?);
    }
    for (i, ps) in sets.iter().enumerate() {
        let first = match weight_budget_trick(&space, ps, Exponent::TWO, Exponent::TWO, q, f64::INFINITY, &opts) {
            Ok(r) => r,
            Err(Error::Premise(why)) => {
                ctx.case(format!("set{i}"), vec![("applicable", Value::from(false)), ("note", Value::from(why))], true, None);
                continue;
            }
            Err(e) => return Err(e),
        };
        let d2 = first.d2_measured.value();
        let (pass, values, slack) = match weight_budget_trick(&space, ps, Exponent::TWO, Exponent::TWO, q, d2, &opts) {
            Ok(r) => (
                true,
                vec![
                    ("applicable", Value::from(true)),
                    ("augmented", Value::from(r.augmented)),
                    ("D1", cval(r.d1_measured)),
                    ("D2", num(d2)),
                    ("sum", num(r.sum)),
                    ("budget", num(r.budget)),
                ],
                Some(r.budget - r.sum),
            ),
            Err(Error::Premise(why)) => (false, vec![("note", Value::from(why))], None),
            Err(e) => return Err(e),
        };
        ctx.case(format!("set{i}"), values, pass, slack);
    }
    Ok(())
}

fn ap4_equalize(ctx: &mut Ctx) -> Result<()> {
    let count = ctx.usize("instances", 20)?;
    let q_choices = ctx.f64s("q", &[1.0, 2.0, 3.0])?;
    let opts = disc_opts(ctx.ratio_opts(16)?);
    let space = Space::from_spec(&trig_spec(1, 64))?;
    let mut rng = ctx.rng();
    for i in 0..count {
        let m = rng.random_range(3..9);
        let pts = random_points(space.domain(), m, &mut rng);
        let c = 0.5 + 2.5 * rng.random::<f64>();
        let w: Vec<f64> = normalized_weights(m, &mut rng)
            .into_iter()
            .map(|x| x * c * rng.random_range(0.5..1.0))
            .collect();
        let q = Exponent::new(q_choices[i % q_choices.len()])?;
        let a = equalize_audit(&space, &PointSet::weighted(pts, w)?, c, Exponent::TWO, q, &opts)?;
        let size_ok = a.equalized.m0 as f64 <= a.equalized.size_bound;
        ctx.case(
            format!("instance_{i}"),
            vec![
                ("m", Value::from(m)),
                ("C", num(c)),
                ("q", num(q.value())),
                ("m0", Value::from(a.equalized.m0)),
                ("size_bound", num(a.equalized.size_bound)),
                ("D_weighted", cval(a.d_weighted)),
                ("D_equal", cval(a.d_equal)),
                ("bound", cval(a.bound)),
            ],
            a.holds && size_ok,
            Some(a.bound.value() - a.d_equal.value()),
        );
    }
    Ok(())
}

fn ldi_search(ctx: &mut Ctx) -> Result<()> {
    let degree = ctx.usize("degree", 2)?;
    let grid = ctx.usize("grid_size", 64)?;
    let space = ctx.space(|| Ok(trig_spec(degree, grid)))?;
    let factors = ctx.usizes("m_factors", &[1, 2])?;
    let p = ctx.exponent("p", 2.0)?;
    let q = ctx.exponent("q", 2.0)?;
    let restarts = ctx.usize("search_restarts", 8)?;
    let ratio = ctx.ratio_opts(8)?;
    let n = space.dim();
    for &k in &factors {
        let seed = ctx.next_seed();
        let so = SearchOptions {
            restarts,
            ratio: ratio.clone(),
            ..Default::default()
        };
        let r = search_ldi_points(&space, k * n, p, q, seed, &so)?;
        ctx.case(
            format!("m{}", k * n),
            vec![
                ("N", Value::from(n)),
                ("m", Value::from(k * n)),
                ("D_L", cval(r.d_left)),
                ("D_L_before_refinement", cval(r.d_unrefined)),
                ("evaluations", Value::from(r.evaluations)),
            ],
            r.d_left.is_finite(),
            None,
        );
    }
    Ok(())
}

fn iid_sampling(ctx: &mut Ctx) -> Result<()> {
    let degree = ctx.usize("degree", 1)?;
    let grid = ctx.usize("grid_size", 64)?;
    let space = ctx.space(|| Ok(trig_spec(degree, grid)))?;
    let p = ctx.exponent("p", 2.0)?;
    let eps = ctx.f64("epsilon", 0.5)?;
    let rounds = ctx.usize("max_rounds", 12)?;
    let opts = disc_opts(ctx.ratio_opts(16)?);
    let seed = ctx.next_seed();
    let out = iid_points_verified(&space, p, eps, seed, rounds, &opts)?;
    let dev = (out.upper - 1.0).max(1.0 - out.lower);
    ctx.case(
        "iid",
        vec![
            ("m", Value::from(out.pointset.len())),
            ("rounds", Value::from(out.rounds)),
            ("lower", num(out.lower)),
            ("upper", num(out.upper)),
            ("certified", Value::from(out.certified)),
        ],
        out.certified,
        Some(eps - dev),
    );
    Ok(())
}

fn design_matrix(ctx: &mut Ctx) -> Result<()> {
    let degree = ctx.usize("degree", 1)?;
    let grid = ctx.usize("grid_size", 64)?;
    let space = ctx.space(|| Ok(trig_spec(degree, grid)))?;
    let ms = ctx.usizes("m", &[3, 5])?;
    let count = ctx.usize("matrices", 4)?;
    let opts = ctx.ratio_opts(16)?;
    let mut rng = ctx.rng();
    let n = space.dim();
    for &m in &ms {
        let ps = PointSet::new(space.domain().equispaced(m));
        for basis in [BasisKind::Raw, BasisKind::Orthonormal] {
            let dm = build_design(&space, &ps, basis)?;
            let c = random_coef(n, true, &mut rng);
            let raw = match basis {
                BasisKind::Raw => c.clone(),
                BasisKind::Orthonormal => space.to_raw(&c),
            };
            let s = sample_vector(&Target::element(space.system(), &raw), &ps);
            let err = (&dm.a * &c - &s).camax() / s.camax().max(1e-300);
            ctx.case(
                format!("m{m}_{basis:?}").to_lowercase(),
                vec![("m", Value::from(m)), ("consistency_error", num(err))],
                err <= 1e-10,
                Some(1e-10 - err),
            );
        }
    }
    let exps = [1.0, 2.0, 3.0, f64::INFINITY];
    for i in 0..count {
        let a = random_matrix(4, 3, i % 2 == 1, &mut rng);
        let s_max = a.singular_values().max();
        let v22 = opnorm_rp(&a, Exponent::TWO, Exponent::TWO);
        let dev = (v22 - s_max).abs() / s_max;
        ctx.case(format!("matrix{i}_2_2"), vec![("opnorm", num(v22)), ("sigma_max", num(s_max))], dev <= 1e-10, Some(1e-10 - dev));
        for &p in &exps {
            let pe = Exponent::new(p)?;
            let col = (0..a.ncols()).map(|j| lp(a.column(j).iter(), p)).fold(0.0, f64::max);
            let v = opnorm_rp(&a, Exponent::ONE, pe);
            let dev = (v - col).abs() / col;
            ctx.case(format!("matrix{i}_1_{p}"), vec![("opnorm", num(v)), ("max_column", num(col))], dev <= 1e-12, Some(1e-12 - dev));
            let dual = if p == 1.0 { f64::INFINITY } else if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
            let row = (0..a.nrows()).map(|j| lp(a.row(j).iter(), dual)).fold(0.0, f64::max);
            let v = opnorm_rp(&a, pe, Exponent::INF);
            let dev = (v - row).abs() / row;
            ctx.case(format!("matrix{i}_{p}_inf"), vec![("opnorm", num(v)), ("max_row_dual", num(row))], dev <= 1e-9, Some(1e-9 - dev));
        }
        // A non-exact pair on a real two-column matrix, against an angle sweep.
        let b = random_matrix(4, 2, false, &mut rng);
        let (r, p) = (3.0, 4.0);
        let sweep = (0..20_000)
            .map(|k| {
                let t = PI * k as f64 / 20_000.0;
                let x = [t.cos(), t.sin()];
                let den = lp(x.iter().map(|v| C64::new(*v, 0.0)).collect::<Vec<_>>().iter(), r);
                let y: Vec<C64> = (0..b.nrows()).map(|j| b[(j, 0)] * x[0] + b[(j, 1)] * x[1]).collect();
                lp(y.iter(), p) / den
            })
            .fold(0.0, f64::max);
        let v = opnorm_rp_with(&b, Exponent::new(r)?, Exponent::new(p)?, &opts);
        let dev = (v - sweep) / sweep;
        ctx.case(
            format!("matrix{i}_3_4"),
            vec![("opnorm", num(v)), ("sweep", num(sweep))],
            dev.abs() <= 1e-6,
            Some(1e-6 - dev.abs()),
        );
    }
    Ok(())
}

fn lp<'a>(v: impl Iterator<Item = &'a C64>, p: f64) -> f64 {
    if p.is_infinite() {
        v.map(|z| z.norm()).fold(0.0, f64::max)
    } else {
        v.map(|z| z.norm().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn pointwise(ctx: &mut Ctx) -> Result<()> {
    let count = ctx.usize("instances", 4)?;
    let m0 = ctx.usize("m0", 10)?;
    let n = ctx.usize("n", 3)?;
    let exps = ctx.exponents("p", &[2.0, 4.0])?;
    let opts = ctx.ratio_opts(16)?;
    let mut rng = ctx.rng();
    for i in 0..count {
        let a = orthonormal_columns(&random_matrix(m0, n, true, &mut rng))?;
        let all: Vec<usize> = (0..m0).collect();
        for side in [PointwiseSide::Ldi, PointwiseSide::Rdi] {
            let r = pointwise_check(&a, &all, side, Exponent::TWO, 1.0, &opts)?;
            ctx.case(
                format!("instance{i}_all_rows_{side:?}").to_lowercase(),
                vec![("measured", cval(r.measured))],
                r.holds,
                Some(1.0 - r.measured.value()),
            );
        }
        let sel = select_rdi_rows(&a, n)?;
        for &p in &exps {
            let d = if p.is_two() { sel.ratio * (1.0 + 1e-9) } else { f64::INFINITY };
            let r = pointwise_check(&a, &sel.indices, PointwiseSide::Rdi, p, d, &opts)?;
            let cor_ok = r.corollaries.iter().all(|c| c.holds);
            let cor_slack = r.corollaries.iter().map(|c| c.rhs - c.lhs).fold(f64::INFINITY, f64::min);
            ctx.case(
                format!("instance{i}_greedy_rdi_p{p}"),
                vec![
                    ("rows", serde_json::to_value(&sel.indices)?),
                    ("p", num(p.value())),
                    ("selection_ratio", num(sel.ratio)),
                    ("measured", cval(r.measured)),
                    ("corollaries", serde_json::to_value(&r.corollaries)?),
                ],
                r.holds && cor_ok,
                Some(cor_slack),
            );
        }
        let r = pointwise_check(&a, &sel.indices, PointwiseSide::Ldi, Exponent::TWO, f64::INFINITY, &opts)?;
        ctx.case(
            format!("instance{i}_greedy_ldi"),
            vec![("measured", cval(r.measured))],
            true,
            None,
        );
    }
    Ok(())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let i = ((sorted.len() - 1) as f64 * q).round() as usize;
    sorted[i]
}

fn lunin_bench(ctx: &mut Ctx) -> Result<()> {
    let count = ctx.usize("instances", 100)?;
    let m0_max = ctx.usize("m0_max", 12)?;
    let n_max = ctx.usize("n_max", 4)?;
    let factor = ctx.f64("factor", 2.0)?;
    let required = ctx.f64("required_fraction", 0.95)?;
    let mut rng = ctx.rng();
    let mut ratios = Vec::with_capacity(count);
    for i in 0..count {
        let n = rng.random_range(1..=n_max);
        let m0 = rng.random_range(n..=m0_max.max(n));
        let a = orthonormal_columns(&random_matrix(m0, n, false, &mut rng))?;
        let greedy = select_rdi_rows(&a, n)?;
        let best = exhaustive_rdi_rows(&a, n, 1_000_000)?;
        let ratio = greedy.value / best.value;
        ratios.push(ratio);
        ctx.case(
            format!("instance_{i}"),
            vec![
                ("N", Value::from(n)),
                ("m0", Value::from(m0)),
                ("greedy", num(greedy.value)),
                ("exhaustive", num(best.value)),
                ("ratio", num(ratio)),
                ("within_factor", Value::from(ratio <= factor)),
            ],
            true,
            None,
        );
    }
    let within = ratios.iter().filter(|&&r| r <= factor).count() as f64 / count.max(1) as f64;
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    if !sorted.is_empty() {
        let mut dist = BTreeMap::new();
        for (k, q) in [("min", 0.0), ("p50", 0.5), ("p90", 0.9), ("p95", 0.95), ("max", 1.0)] {
            dist.insert(k.to_string(), num(quantile(&sorted, q)));
        }
        ctx.summary("ratio_quantiles", serde_json::to_value(dist)?);
        let edges = [1.0, 1.1, 1.25, 1.5, 2.0];
        let mut hist = BTreeMap::new();
        for w in edges.windows(2) {
            let c = ratios.iter().filter(|&&r| r >= w[0] && r < w[1]).count();
            hist.insert(format!("[{}, {})", w[0], w[1]), Value::from(c));
        }
        hist.insert("[2, inf)".into(), Value::from(ratios.iter().filter(|&&r| r >= 2.0).count()));
        ctx.summary("ratio_histogram", serde_json::to_value(hist)?);
    }
    ctx.summary("fraction_within_factor", num(within));
    ctx.case(
        "fraction_within_factor",
        vec![("fraction", num(within)), ("required", num(required))],
        within >= required,
        Some(within - required),
    );
    Ok(())
}

fn even_q(ctx: &mut Ctx) -> Result<()> {
    let count = ctx.usize("instances", 4)?;
    let n_max = ctx.usize("n_max", 3)?;
    let m0 = ctx.usize("m0", 12)?;
    let s = ctx.usize("s", 2)?;
    let opts = ctx.ratio_opts(16)?;
    let mut rng = ctx.rng();
    for i in 0..count {
        let n = rng.random_range(1..=n_max);
        let a = orthonormal_columns(&random_matrix(m0, n, false, &mut rng))?;
        let r = even_power_rdi(&a, s, 1_000_000, &opts)?;
        ctx.case(
            format!("instance_{i}"),
            vec![
                ("N", Value::from(n)),
                ("p", num(r.p)),
                ("product_rank", Value::from(r.product_rank)),
                ("rows", Value::from(r.selection.indices.len())),
                ("implied", num(r.implied)),
                ("measured", num(r.measured)),
            ],
            r.holds,
            Some(r.implied - r.measured),
        );
    }
    Ok(())
}

fn recovery_case(ctx: &mut Ctx, id: String, extra: Vec<(&str, Value)>, r: &RecoveryReport) {
    let mut values = extra;
    values.push(("algorithm", Value::from(r.algorithm.clone())));
    values.push(("applicable", Value::from(r.applicable)));
    values.push(("constants", serde_json::to_value(&r.constants).unwrap_or(Value::Null)));
    values.push(("errors", serde_json::to_value(&r.errors).unwrap_or(Value::Null)));
    if let Some(n) = &r.note {
        values.push(("note", Value::from(n.clone())));
    }
    ctx.case(id, values, r.violations() == 0, r.min_slack());
}

fn recovery_suite(ctx: &mut Ctx) -> Result<()> {
    let ids = ctx.strings("theorems", &Theorem::ALL.map(|t| t.id()))?;
    let theorems: Vec<Theorem> = ids.iter().map(|s| Theorem::parse(s)).collect::<Result<_>>()?;
    let count = ctx.usize("instances", 3)?;
    let exps = ctx.f64s("p", &[1.0, 2.0, 3.0])?;
    let max_iter = ctx.usize("max_iter", 300)?;
    let opts = RatioOptions {
        max_iter,
        sweep: false,
        ..ctx.ratio_opts(6)?
    };
    let mut rng = ctx.rng();
    let subspace = Space::new(FunctionSystem::monomials(2), DomainSpec::interval(128))?;
    let collection = CollectionSpec {
        dictionary: FunctionSystem::real_trig(&[0, 1, 2], &[1, 2])?,
        v: 1,
        domain: DomainSpec::torus(1, 64),
    };
    let mut batches: BTreeMap<String, Vec<RecoveryReport>> = BTreeMap::new();
    for &th in &theorems {
        for i in 0..count {
            let p = Exponent::new(exps[i % exps.len()])?;
            let universal = th.id().starts_with("ub");
            let inst = if universal {
                let nd = collection.dictionary.len();
                let m = rng.random_range(4..=8);
                let mut coef = random_coef(nd, false, &mut rng).map(|z| z * 0.05);
                coef[rng.random_range(0..nd)] += C64::new(1.0 + gaussian(&mut rng).abs(), 0.0);
                let label = format!("near-sparse #{i}");
                let mut f = Target::element(&collection.dictionary, &coef);
                f.label = label;
                AuditInstance {
                    model: AuditModel::Sparse(collection.clone()),
                    pointset: PointSet::new(random_points(&collection.domain, m, &mut rng)),
                    target: f,
                    p,
                    opts: opts.clone(),
                }
            } else {
                let m = rng.random_range(3..9);
                let xs: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
                let a = 0.1 + 0.3 * rng.random::<f64>();
                AuditInstance {
                    model: AuditModel::Subspace(subspace.clone()),
                    pointset: PointSet::scalars(&xs),
                    target: Target::real(format!("f_{a:.4}"), move |x: &Point| fa(a, x.coords()[0])),
                    p,
                    opts: opts.clone(),
                }
            };
            let m = inst.pointset.len();
            let r = lebesgue_audit(th, &inst)?;
            recovery_case(
                ctx,
                format!("{}_{i}", th.id()),
                vec![("theorem", Value::from(th.id())), ("p", num(p.value())), ("m", Value::from(m))],
                &r,
            );
            batches.entry(th.id().to_string()).or_default().push(r);
        }
    }
    // The three sparse algorithms on one near-sparse target.
    let nd = collection.dictionary.len();
    let mut coef = random_coef(nd, false, &mut rng).map(|z| z * 0.05);
    coef[0] += C64::new(1.5, 0.0);
    let f = Target::element(&collection.dictionary, &coef);
    let ps = PointSet::new(random_points(&collection.domain, 8, &mut rng));
    for variant in [Variant::Lp, Variant::LpSample, Variant::LpInf] {
        let r = recover_universal(&f, &collection, &ps, Exponent::TWO, variant)?;
        let sigma = crate::recovery::sigma_v(&f, &collection, &crate::recovery::NormSpec::Continuous(Exponent::TWO))?;
        let err = r.errors["L2"];
        ctx.case(
            format!("algorithm_{}", variant.id()),
            vec![
                ("support", serde_json::to_value(&r.support)?),
                ("L2_error", num(err)),
                ("sigma_v_L2", num(sigma.value)),
            ],
            err >= sigma.value * (1.0 - 1e-9),
            Some(err - sigma.value * (1.0 - 1e-9)),
        );
    }
    let summaries: Vec<BatchSummary> = batches.iter().map(|(k, v)| BatchSummary::from_reports(k, v)).collect();
    ctx.summary("batches", serde_json::to_value(&summaries)?);
    Ok(())
}

fn discrete_gaussian_system(n: usize, size: usize, rng: &mut ChaCha8Rng) -> Result<FunctionSystem> {
    FunctionSystem::discrete((0..n).map(|_| (0..size).map(|_| gaussian(rng)).collect()).collect())
}

fn kw_chain(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.usize("dim", 6)?;
    let size = ctx.usize("grid_size", 1024)?;
    let eps = ctx.f64("epsilon", 1e-3)?;
    let max_iters = ctx.usize("max_iters", 50_000)?;
    let trials = ctx.usize("trials", 2)?;
    let sample_factor = ctx.usize("sample_factor", 4)?;
    let restarts = ctx.usize("search_restarts", 4)?;
    let opts = disc_opts(ctx.ratio_opts(8)?);
    let mut rng = ctx.rng();
    for t in 0..trials {
        let system = discrete_gaussian_system(n, size, &mut rng)?;
        let uniform = Space::new(system.clone(), DomainSpec::finite_set(size))?;
        let grid: Vec<Point> = (0..size).map(Point::index).collect();
        let kw = kw_design(&uniform, &grid, eps, max_iters)?;
        let target = n as f64 * (1.0 + eps);
        ctx.case(
            format!("trial{t}_KW"),
            vec![
                ("N", Value::from(n)),
                ("iterations", Value::from(kw.iterations)),
                ("max_christoffel", num(kw.max_christoffel)),
                ("target", num(target)),
            ],
            kw.max_christoffel <= target,
            Some(target - kw.max_christoffel),
        );
        let weighted = Space::new(system, kw.measure.to_domain(&DomainSpec::finite_set(size))?)?;
        let ni = weighted.nikolskii(Exponent::TWO, Exponent::INF, &opts.ratio)?.value;
        let bound = (n as f64).sqrt() * (1.0 + eps);
        ctx.case(
            format!("trial{t}_NI_certificate"),
            vec![("M", num(ni)), ("bound", num(bound))],
            ni <= bound,
            Some(bound - ni),
        );
        let coef = random_coef(n, false, &mut rng);
        let so = SearchOptions {
            restarts,
            ratio: opts.ratio.clone(),
            ..Default::default()
        };
        let found = search_ldi_points(&weighted, 2 * n, Exponent::TWO, Exponent::TWO, ctx.next_seed(), &so)?;
        let chains = [
            ("BP1b", found.pointset.clone(), Some(2 * n)),
            ("BP1a", PointSet::new(random_points(weighted.domain(), sample_factor * n, &mut rng)), None),
            ("BP1", PointSet::new(random_points(uniform.domain(), sample_factor * n, &mut rng)), None),
        ];
        for (name, ps, cap) in chains {
            let space = if name == "BP1" { &uniform } else { &weighted };
            let r = chain_audit(name, space, &ps, &coef, cap, &opts)?;
            recovery_case(ctx, format!("trial{t}_{name}"), vec![("m", Value::from(ps.len()))], &r);
        }
    }
    Ok(())
}

fn trd_chain(ctx: &mut Ctx) -> Result<()> {
    let degree = ctx.usize("degree", 2)?;
    let grid = ctx.usize("grid_size", 64)?;
    let space = ctx.space(|| Ok(trig_spec(degree, grid)))?;
    let ms = ctx.usizes("m", &[5, 9, 17])?;
    let count = ctx.usize("elements", 2)?;
    let opts = disc_opts(ctx.ratio_opts(16)?);
    let mut rng = ctx.rng();
    let n = space.dim();
    let ni = space.nikolskii(Exponent::TWO, Exponent::INF, &opts.ratio)?.value;
    let (kmax, _) = space.max_christoffel();
    ctx.case(
        "TrD_nikolskii",
        vec![("M", num(ni)), ("sqrt_max_christoffel", num(kmax.sqrt())), ("sqrt_N", num((n as f64).sqrt()))],
        (ni - kmax.sqrt()).abs() <= 1e-9 * kmax.sqrt(),
        Some(kmax.sqrt() * (1.0 + 1e-9) - ni),
    );
    for &m in &ms {
        let ps = PointSet::new(space.domain().equispaced(m));
        for e in 0..count {
            let coef = random_coef(n, space.field() == crate::Field::Complex, &mut rng);
            let r = chain_audit("TrDi", &space, &ps, &coef, None, &opts)?;
            recovery_case(ctx, format!("TrDi_m{m}_element{e}"), vec![("m", Value::from(m))], &r);
        }
        let d2 = disc_constants(&space, &ps, Exponent::TWO, Exponent::TWO, &opts)?.d_left;
        let dinf = disc_constants(&space, &ps, Exponent::INF, Exponent::INF, &opts)?.d_left;
        let bound = ni * d2.value();
        ctx.case(
            format!("LDI_infty_m{m}"),
            vec![("m", Value::from(m)), ("D_L_inf", cval(dinf)), ("M_times_D_L_2", num(bound))],
            !d2.is_finite() || dinf.value() <= bound * (1.0 + 1e-9),
            d2.is_finite().then(|| bound - dinf.value()),
        );
    }
    Ok(())
}

fn sparse_dictionary(n: usize) -> Result<FunctionSystem> {
    let cos: Vec<i64> = (0..n.div_ceil(2) as i64).collect();
    let sin: Vec<i64> = (1..=(n / 2) as i64).collect();
    FunctionSystem::real_trig(&cos, &sin)
}

fn sparse_recovery(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.usize("n", 8)?;
    let v = ctx.usize("v", 2)?;
    let count = ctx.usize("supports", 10)?;
    let m = ctx.usize("m", 12)?;
    let p = ctx.exponent("p", 2.0)?;
    let tol = ctx.f64("tolerance", 1e-8)?;
    let opts = ctx.ratio_opts(8)?;
    let mut rng = ctx.rng();
    if 2 * v > n {
        return Err(Error::InvalidParameters(format!("needs 2v ≤ N, have v = {v}, N = {n}")));
    }
    let col = CollectionSpec {
        dictionary: sparse_dictionary(n)?,
        v,
        domain: DomainSpec::torus(1, 64),
    };
    let doubled = CollectionSpec { v: 2 * v, ..col.clone() };
    let mut chosen = None;
    for _ in 0..20 {
        let ps = PointSet::new(random_points(&col.domain, m, &mut rng));
        let uni = universal_ldi_constant(&doubled, &ps, p, p, &opts)?;
        if uni.value.is_finite() {
            chosen = Some((ps, uni));
            break;
        }
    }
    let Some((ps, uni)) = chosen else {
        return Err(Error::Premise(format!("no point set with a finite universal LDI on X_{}", 2 * v)));
    };
    ctx.summary("universal_ldi_2v", cval(uni.value));
    ctx.summary("points", Value::from(ps.len()));
    for i in 0..count {
        let support: Vec<usize> = {
            let mut s: Vec<usize> = sample(&mut rng, n, v).into_vec();
            s.sort_unstable();
            s
        };
        let mut coef = CVec::zeros(n);
        for &j in &support {
            coef[j] = C64::new(gaussian(&mut rng), 0.0);
        }
        let f = Target::element(&col.dictionary, &coef);
        let r = recover_universal(&f, &col, &ps, p, Variant::LpSample)?;
        let err = r.errors[&format!("L{}", p.value())];
        ctx.case(
            format!("support_{i}"),
            vec![
                ("support", serde_json::to_value(&support)?),
                ("recovered_support", serde_json::to_value(&r.support)?),
                ("error", num(err)),
            ],
            err <= tol,
            Some(tol - err),
        );
    }
    Ok(())
}

fn universal_ldi(ctx: &mut Ctx) -> Result<()> {
    let n = ctx.usize("n", 7)?;
    let vs = ctx.usizes("v", &[1, 2, 3])?;
    let m = ctx.usize("m", 9)?;
    let exps = ctx.exponents("p", &[2.0])?;
    let opts = ctx.ratio_opts(8)?;
    let mut rng = ctx.rng();
    let dictionary = sparse_dictionary(n)?;
    let domain = DomainSpec::torus(1, 64);
    let ps = PointSet::new(random_points(&domain, m, &mut rng));
    for &p in &exps {
        for q in [p, Exponent::INF] {
            let mut prev: Option<f64> = None;
            for &v in &vs {
                let col = CollectionSpec {
                    dictionary: dictionary.clone(),
                    v,
                    domain: domain.clone(),
                };
                let r = universal_ldi_constant(&col, &ps, p, q, &opts)?;
                let value = r.value.value();
                let monotone = prev.is_none_or(|x| value >= x * (1.0 - 1e-9));
                ctx.case(
                    format!("p{p}_q{q}_v{v}"),
                    vec![
                        ("v", Value::from(v)),
                        ("spans", Value::from(r.subspaces as u64)),
                        ("D", cval(r.value)),
                        ("worst_support", serde_json::to_value(&r.worst)?),
                    ],
                    monotone,
                    prev.map(|x| value - x),
                );
                prev = Some(value);
            }
        }
    }
    Ok(())
}
