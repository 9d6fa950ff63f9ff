use nalgebra::DVector;

use nlriver::discretize::{build_grid, Grid};
use nlriver::eigen::PersistenceProblem;
use nlriver::model::{BoundaryRegime, DomainInterval, GrowthLaw, InitialDatum, KernelSpec, ReactionSpec, Scenario};
use nlriver::stationary::{profile_distance, stationary_via_longtime, Classification, Start, StationaryProblem, LONGTIME_T_MAX};

fn river(q: f64) -> Scenario {
    Scenario::river_example(q, BoundaryRegime::DirichletNonlocal)
}

fn check_nontrivial(u: &DVector<f64>, pinned: usize) {
    assert_eq!(u[pinned], 0.0);
    assert!(u.iter().enumerate().all(|(i, &v)| i == pinned || v > 0.0));
}

#[test]
fn both_starts_meet_in_persistence() {
    let s = river(0.3);
    let g = build_grid(s.domain, 200).unwrap();
    let p = StationaryProblem::new(&s, &g).unwrap();
    let lo = p.monotone_iterate(Start::Lower).unwrap();
    let hi = p.monotone_iterate(Start::Upper).unwrap();
    for r in [&lo, &hi] {
        assert_eq!(r.classification, Classification::Nontrivial);
        assert!(r.residual <= 1e-8 * r.residual_scale, "{:e}", r.residual);
        check_nontrivial(&r.profile, 0);
    }
    assert!(profile_distance(&lo.profile, &hi.profile) < 1e-8);
}

#[test]
fn both_starts_collapse_in_extinction() {
    let s = river(2.0);
    let g = build_grid(s.domain, 200).unwrap();
    let p = StationaryProblem::new(&s, &g).unwrap();
    let lo = p.monotone_iterate(Start::Lower).unwrap();
    assert_eq!(lo.classification, Classification::Trivial);
    assert_eq!(lo.sup_norm(), 0.0);
    let hi = p.monotone_iterate(Start::Upper).unwrap();
    assert_eq!(hi.classification, Classification::Trivial);
    assert_eq!(stationary_via_longtime(&s, &g).unwrap().classification, Classification::Trivial);
}

#[test]
fn classification_follows_indicator_sign() {
    let s = river(1.0);
    let g = build_grid(s.domain, 200).unwrap();
    let problem = PersistenceProblem::new(&s, &g).unwrap();
    let qs: Vec<f64> = (0..=20).map(|k| 0.5 + 0.1 * k as f64).collect();
    let indicators: Vec<f64> = qs.iter().map(|&q| problem.indicator(q).unwrap().value).collect();
    let nearest = (0..qs.len()).min_by(|&i, &j| indicators[i].abs().total_cmp(&indicators[j].abs())).unwrap();
    assert!(indicators[0] < 0.0 && *indicators.last().unwrap() > 0.0);
    for (k, (&q, &ind)) in qs.iter().zip(&indicators).enumerate() {
        if k == nearest {
            continue;
        }
        let sq = s.with_q(q);
        let r = StationaryProblem::new(&sq, &g).unwrap().monotone_iterate(Start::Upper).unwrap();
        let expected = if ind < 0.0 { Classification::Nontrivial } else { Classification::Trivial };
        assert_eq!(r.classification, expected, "q {q}, indicator {ind}");
    }
}

fn data(g: &Grid) -> Vec<DVector<f64>> {
    let l = 5.0;
    let mut out = vec![
        g.sample(|x| (std::f64::consts::PI * x / l).sin()),
        g.sample(|x| 0.01 * x),
        g.sample(|x| 4.0 * (x / l).powi(3)),
        g.sample(|x| if (2.0..3.0).contains(&x) { 1.5 } else { 0.0 }),
        g.sample(|x| 3.0 * (1.0 + (7.0 * x).cos()) / 2.0),
    ];
    for u in &mut out {
        u[0] = 0.0;
    }
    out
}

#[test]
fn long_time_limits_agree_across_initial_data() {
    let s = river(0.5);
    let g = build_grid(s.domain, 200).unwrap();
    let p = StationaryProblem::new(&s, &g).unwrap();
    let limits: Vec<DVector<f64>> = data(&g)
        .into_iter()
        .map(|u0| {
            let r = p.via_longtime(u0, LONGTIME_T_MAX).unwrap();
            assert_eq!(r.classification, Classification::Nontrivial);
            r.profile
        })
        .collect();
    for i in 0..limits.len() {
        for j in i + 1..limits.len() {
            let gap = profile_distance(&limits[i], &limits[j]);
            assert!(gap < 1e-6, "data {i} vs {j}: {gap:e}");
        }
    }
    let monotone = p.monotone_iterate(Start::Upper).unwrap();
    assert!(profile_distance(&limits[0], &monotone.profile) < 1e-6);
}

#[test]
fn small_and_large_data_reach_the_same_state() {
    let s = river(0.5);
    let g = build_grid(s.domain, 200).unwrap();
    let p = StationaryProblem::new(&s, &g).unwrap();
    let n_bound = s.reaction.n_bound();
    let base = g.sample(|x| s.u0_at(x));
    let small = p.via_longtime(&base * 0.1, LONGTIME_T_MAX).unwrap();
    let large = p.via_longtime((&base * 10.0).map(|v| v.min(n_bound)), LONGTIME_T_MAX).unwrap();
    assert_eq!(small.classification, Classification::Nontrivial);
    assert_eq!(large.classification, Classification::Nontrivial);
    assert!(profile_distance(&small.profile, &large.profile) < 1e-6);
}

#[test]
fn sandwich_is_monotone_in_persistence() {
    for q in [0.1, 0.5, 1.0] {
        let s = river(q);
        let g = build_grid(s.domain, 150).unwrap();
        let report = StationaryProblem::new(&s, &g).unwrap().sandwich().unwrap();
        assert!(report.lower_from_eigenfunction);
        assert!(report.monotone_within(1e-12), "q {q}: {report:?}");
        assert!(report.gap() < 1e-8);
    }
}

#[test]
fn homogeneous_neumann_state_is_flat_away_from_inflow() {
    let c = 1.0;
    let domain = DomainInterval::new(0.0, 10.0).unwrap();
    let s = Scenario {
        domain,
        kernel: KernelSpec::standard_gaussian(),
        d: 0.26,
        q: 0.01,
        reaction: ReactionSpec::new(GrowthLaw::kpp_quadratic([c, 0.0, 0.0], 1.0), &domain),
        regime: BoundaryRegime::NeumannNonlocal,
        u0: InitialDatum::Sine { amplitude: 1.0 },
    };
    let g = build_grid(domain, 400).unwrap();
    let p = StationaryProblem::new(&s, &g).unwrap();
    let r = p.monotone_iterate(Start::Upper).unwrap();
    let long = p.via_longtime(g.sample(|x| s.u0_at(x)), LONGTIME_T_MAX).unwrap();
    assert!(profile_distance(&r.profile, &long.profile) < 1e-6);
    let far = g.nearest(5.0);
    let flat = r.profile.rows(far, g.len() - far).iter().map(|v| (v - c).abs()).fold(0.0, f64::max);
    assert!(flat < 1e-3, "{flat:e}");
    assert!(r.profile[1] < c - 0.1);
}
