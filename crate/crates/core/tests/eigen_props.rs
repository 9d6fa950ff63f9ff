use nalgebra::DVector;
use proptest::prelude::*;

use nlriver::discretize::{assemble, build_grid, DiscreteOperator, Grid};
use nlriver::eigen::{lambda_p_with, EigenOptions, PersistenceProblem};
use nlriver::model::{BoundaryRegime, DomainInterval, KernelSpec, Scenario};

fn compact(regime: BoundaryRegime) -> Scenario {
    let mut s = Scenario::river_example(0.5, regime);
    s.kernel = KernelSpec::TruncatedGaussian { sigma: 1.0, cutoff: 2.0 };
    s
}

fn setup(s: &Scenario, n: usize) -> (Grid, DiscreteOperator) {
    let g = build_grid(s.domain, n).unwrap();
    let op = assemble(s, &g).unwrap();
    (g, op)
}

fn lp(op: &DiscreteOperator, a: &DVector<f64>, q: f64) -> f64 {
    lambda_p_with(op, a, q, &EigenOptions::default()).unwrap().lambda_p
}

#[test]
fn larger_zero_order_term_lowers_lambda() {
    let s = compact(BoundaryRegime::DirichletNonlocal);
    let (g, op) = setup(&s, 200);
    let a1 = g.sample(|x| s.reaction.h(x, 0.0));
    for bump in [1e-3, 0.1, 1.0] {
        let a2 = g.sample(|x| s.reaction.h(x, 0.0) + bump * (1.0 + x.sin()));
        for q in [0.2, 0.7, 1.5] {
            assert!(lp(&op, &a1, q) >= lp(&op, &a2, q), "bump {bump}, q {q}");
        }
    }
}

#[test]
fn nested_domains_order_lambda() {
    // same spacing: (0, 4) with 320 cells, (0, 5) with 400 cells
    let h0 = |x: f64| 2.5 - x * x / 16.0;
    let mut small = compact(BoundaryRegime::DirichletNonlocal);
    small.domain = DomainInterval::new(0.0, 4.0).unwrap();
    let big = compact(BoundaryRegime::DirichletNonlocal);
    let (gs, ops) = setup(&small, 320);
    let (gb, opb) = setup(&big, 400);
    assert!((gs.step() - gb.step()).abs() < 1e-15);
    for q in [0.1, 0.5, 1.0, 2.0] {
        let ls = lp(&ops, &gs.sample(h0), q);
        let lb = lp(&opb, &gb.sample(h0), q);
        assert!(ls >= lb, "q {q}: {ls} < {lb}");
    }
}

#[test]
fn eigenfunction_is_nondecreasing_for_nondecreasing_zero_order() {
    let s = compact(BoundaryRegime::DirichletNonlocal);
    let (g, op) = setup(&s, 400);
    for a in [g.sample(|x| 1.0 + 0.2 * x), g.sample(|x| 0.5 * x * x)] {
        for q in [0.01, 0.1, 0.5, 1.0, 3.0] {
            let r = lambda_p_with(&op, &a, q, &EigenOptions::default()).unwrap();
            assert_eq!(r.phi[0], 0.0);
            for i in 1..r.phi.len() {
                assert!(r.phi[i] >= r.phi[i - 1] - 1e-8, "q {q}, node {i}");
            }
        }
    }
}

#[test]
fn slow_flow_eigenfunction_peaks_inside_for_constant_zero_order() {
    let s = compact(BoundaryRegime::DirichletNonlocal);
    let (g, op) = setup(&s, 400);
    let a = g.sample(|_| 1.0);
    let slow = lambda_p_with(&op, &a, 0.01, &EigenOptions::default()).unwrap();
    assert!(slow.phi.imax() < g.len() - 1);
    assert!(slow.phi[g.len() - 1] < 0.9);
    let fast = lambda_p_with(&op, &a, 1.0, &EigenOptions::default()).unwrap();
    assert_eq!(fast.phi.imax(), g.len() - 1);
}

#[test]
fn neumann_integral_identity_converges_at_first_order() {
    let s = Scenario::river_example(0.5, BoundaryRegime::NeumannNonlocal);
    let defect = |n: usize| {
        let g = build_grid(s.domain, n).unwrap();
        let ind = PersistenceProblem::new(&s, &g).unwrap().indicator(s.q).unwrap();
        let w = DVector::from_column_slice(g.weights());
        let phi = &ind.eigen.phi;
        let h0 = g.sample(|x| s.reaction.h(x, 0.0));
        (-ind.value * w.dot(phi) - (w.dot(&h0.component_mul(phi)) - s.q * phi[n])).abs()
    };
    let d: Vec<f64> = [100, 200, 400, 800].into_iter().map(defect).collect();
    for k in 1..d.len() {
        let ratio = d[k - 1] / d[k];
        assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
    }
    assert!(d[3] < 1e-3);
}

#[test]
fn lambda_is_continuous_in_q() {
    let s = compact(BoundaryRegime::DirichletNonlocal);
    let (g, op) = setup(&s, 200);
    let a = g.sample(|x| s.reaction.h(x, 0.0));
    for q in [0.3, 0.8, 1.6] {
        let base = lp(&op, &a, q);
        let gaps: Vec<f64> = [1e-2, 1e-3, 1e-4].iter().map(|&dq| (lp(&op, &a, q + dq) - base).abs()).collect();
        for k in 1..gaps.len() {
            let ratio = gaps[k - 1] / gaps[k];
            assert!((5.0..=20.0).contains(&ratio), "q {q}: ratio {ratio}");
        }
    }
}

#[test]
fn neumann_without_zero_order_term() {
    // h(x, 0) = d m(x) makes the Neumann zero-order coefficient vanish
    let s = Scenario::river_example(0.5, BoundaryRegime::NeumannNonlocal);
    let (g, op) = setup(&s, 200);
    let growth = op.row_mass() * s.d;
    let problem = PersistenceProblem::from_operator(op.clone(), growth);
    let zero = DVector::zeros(g.len());
    assert!(problem.zero_order().amax() < 1e-15);
    let qs: Vec<f64> = (1..=200).map(|k| k as f64 * 0.01).collect();
    let values: Vec<f64> = qs.iter().map(|&q| problem.indicator(q).unwrap().value).collect();
    for (q, v) in qs.iter().zip(&values) {
        assert!((v - lp(&op, &zero, *q)).abs() < 1e-12);
    }
    for w in values.windows(2) {
        assert!(w[1] > w[0]);
    }
    // dispersal alone is net growth without flow, loss once the flow is fast
    assert!(values[0] < 0.0);
    assert!(*values.last().unwrap() > 0.0);
}

#[test]
fn compact_kernel_reflection_gap_is_first_order() {
    let s = compact(BoundaryRegime::DirichletNonlocal);
    let gap = |n: usize| {
        let (g, op) = setup(&s, n);
        let a = g.sample(|x| s.reaction.h(x, 0.0));
        (lp(&op, &a, 0.8) - lp(&op, &a, -0.8)).abs()
    };
    let (g1, g2) = (gap(100), gap(200));
    assert!(g2 < g1);
    assert!((1.6..=2.4).contains(&(g1 / g2)), "{g1} {g2}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn eigenpair_invariants(
        q in prop_oneof![0.05f64..3.0, -3.0f64..-0.05],
        c in -1.0f64..3.0,
        slope in -0.5f64..0.5,
        n in 20usize..120,
        neumann in any::<bool>(),
    ) {
        let regime = if neumann { BoundaryRegime::NeumannNonlocal } else { BoundaryRegime::DirichletNonlocal };
        let s = compact(regime);
        let (g, op) = setup(&s, n);
        let a = g.sample(|x| c + slope * x);
        let lin = nlriver::discretize::linearized_operator(&op.with_q(q), &a).unwrap();
        let r = lambda_p_with(&op, &a, q, &EigenOptions::default()).unwrap();
        prop_assert!(r.phi.iter().all(|&v| v >= 0.0));
        prop_assert!((r.phi.max() - 1.0).abs() < 1e-14);
        let inflow = lin.boundary.unwrap();
        prop_assert_eq!(r.phi[inflow], 0.0);
        let restricted = lin.restricted();
        let free = restricted.nrows();
        let phi_free = DVector::from_iterator(free, (0..g.len()).filter(|&i| i != inflow).map(|i| r.phi[i]));
        let res = (&restricted * &phi_free + &phi_free * r.lambda_p).amax();
        let norm = (0..free).map(|i| restricted.row(i).iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        prop_assert!(res <= 1e-10 * norm, "residual {res:e}, norm {norm}");
    }
}
