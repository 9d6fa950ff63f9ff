use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use statrs::function::erf::erf;

use nlriver::discretize::{assemble, build_grid, linearized_operator};
use nlriver::model::{BoundaryRegime, DomainInterval, InitialDatum, KernelSpec, Scenario};

fn river(q: f64, regime: BoundaryRegime) -> Scenario {
    Scenario::river_example(q, regime)
}

fn gaussian(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Composite Gauss-Legendre (5 points per panel) of `f` on `[a, b]`.
fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let nodes = [0.0, 0.538_469_310_105_683_1, -0.538_469_310_105_683_1, 0.906_179_845_938_664, -0.906_179_845_938_664];
    let weights = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let width = (b - a) / panels as f64;
    (0..panels)
        .map(|k| {
            let c = a + width * (k as f64 + 0.5);
            nodes.iter().zip(weights).map(|(t, w)| w * f(c + 0.5 * width * t)).sum::<f64>() * 0.5 * width
        })
        .sum()
}

#[test]
fn central_row_mass_matches_error_function() {
    let s = river(0.5, BoundaryRegime::NeumannNonlocal);
    let g = build_grid(s.domain, 1000).unwrap();
    let op = assemble(&s, &g).unwrap();
    let i = g.nearest(2.5);
    assert!((g.nodes()[i] - 2.5).abs() < 1e-12);
    let exact = erf(2.5 / 2f64.sqrt());
    let quadrature = gauss_legendre(|y| gaussian(2.5 - y), 0.0, 5.0, 200);
    assert!((exact - 0.98758).abs() < 1e-5);
    assert!((quadrature - exact).abs() < 1e-12);
    assert!((op.row_mass()[i] - quadrature).abs() < 1e-4, "{}", op.row_mass()[i]);
}

#[test]
fn trapezoid_row_mass_converges_at_second_order() {
    let s = river(0.5, BoundaryRegime::NeumannNonlocal);
    let mass_at = |n: usize, x: f64| {
        let g = build_grid(s.domain, n).unwrap();
        let op = assemble(&s, &g).unwrap();
        op.row_mass()[g.nearest(x)]
    };
    for x in [1.0, 2.5, 4.0] {
        let (m1, m2, m3) = (mass_at(50, x), mass_at(100, x), mass_at(200, x));
        let ratio = (m1 - m2) / (m2 - m3);
        assert!((3.5..=4.5).contains(&ratio), "x = {x}: ratio {ratio}");
    }
}

#[test]
fn neumann_linearization_matches_direct_assembly() {
    let s = river(0.5, BoundaryRegime::NeumannNonlocal);
    let g = build_grid(s.domain, 200).unwrap();
    let op = assemble(&s, &g).unwrap();
    let n = g.len();
    let (x, w, h) = (g.nodes(), g.weights(), g.step());
    let b: Vec<f64> = x.iter().map(|&xi| 2.5 - xi * xi / 16.0).collect();
    let mut direct = DMatrix::zeros(n, n);
    for i in 1..n {
        let mass: f64 = (0..n).map(|j| w[j] * gaussian(x[i] - x[j])).sum();
        for j in 0..n {
            direct[(i, j)] = s.d * w[j] * gaussian(x[i] - x[j]);
        }
        direct[(i, i)] += b[i] - s.d * mass - s.q / h;
        direct[(i, i - 1)] += s.q / h;
    }
    direct[(0, 0)] = 1.0;
    let a = DVector::from_iterator(n, (0..n).map(|i| b[i] - s.d * op.row_mass()[i]));
    let lin = linearized_operator(&op, &a).unwrap();
    let diff = (&lin.matrix - &direct).amax();
    assert!(diff < 1e-12, "max entry difference {diff}");
}

#[test]
fn symmetric_kernels_give_symmetric_interior_conv() {
    for kernel in [
        KernelSpec::standard_gaussian(),
        KernelSpec::TruncatedGaussian { sigma: 0.7, cutoff: 1.5 },
        KernelSpec::UniformCompact { radius: 0.8 },
    ] {
        let mut s = river(0.3, BoundaryRegime::DirichletNonlocal);
        s.kernel = kernel;
        let g = build_grid(s.domain, 120).unwrap();
        let c = assemble(&s, &g).unwrap().conv().clone();
        for i in 1..g.len() - 1 {
            for j in 1..g.len() - 1 {
                assert!((c[(i, j)] - c[(j, i)]).abs() <= 1e-15);
            }
        }
    }
}

fn kernel_strategy() -> impl Strategy<Value = KernelSpec> {
    prop_oneof![
        (0.2f64..2.0).prop_map(|sigma| KernelSpec::Gaussian { sigma }),
        (0.2f64..1.5, 1.0f64..3.0).prop_map(|(sigma, k)| KernelSpec::TruncatedGaussian { sigma, cutoff: k * sigma }),
        (0.1f64..2.0).prop_map(|radius| KernelSpec::UniformCompact { radius }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn operator_structure(
        l1 in -3.0f64..3.0,
        len in 0.5f64..8.0,
        n in 2usize..80,
        kernel in kernel_strategy(),
        d in 0.01f64..3.0,
        q in -3.0f64..3.0,
        neumann in any::<bool>(),
    ) {
        let regime = if neumann { BoundaryRegime::NeumannNonlocal } else { BoundaryRegime::DirichletNonlocal };
        let mut s = river(q, regime);
        s.domain = DomainInterval::new(l1, l1 + len).unwrap();
        s.kernel = kernel;
        s.d = d;
        s.u0 = InitialDatum::Sine { amplitude: 1.0 };
        let g = build_grid(s.domain, n).unwrap();
        prop_assert!((g.weights().iter().sum::<f64>() - len).abs() < 1e-12);
        for k in 1..g.len() {
            prop_assert!(((g.nodes()[k] - g.nodes()[k - 1]) - g.step()).abs() < 1e-14 * len.max(1.0));
        }
        let op = assemble(&s, &g).unwrap();
        prop_assert!(op.conv().iter().all(|&v| v >= 0.0));
        // kernels with jumps: the trapezoid rule may overshoot by h sup J
        let excess = g.step() * s.kernel.density(0.0) + 1e-12;
        prop_assert!(op.row_mass().iter().all(|&m| m > 0.0 && m <= 1.0 + excess));
        let l = op.linear_part();
        let free: Vec<usize> = (0..g.len()).filter(|&i| Some(i) != op.inflow_node()).collect();
        for &i in &free {
            for j in 0..g.len() {
                if i != j {
                    prop_assert!(l[(i, j)] >= 0.0, "negative off-diagonal at ({i}, {j})");
                }
            }
        }
        let u = g.sample(|x| (x - l1).sin().abs() + 0.1);
        let lhs = op.apply(&u);
        let rhs = &l * &u;
        prop_assert!((lhs - rhs).amax() < 1e-10 * (1.0 + q.abs() / g.step()));
    }
}
