//! Small scalar routines shared by the solvers: adaptive quadrature,
//! golden-section search and root bracketing.

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates over `[a, b]` by splitting into `pieces` panels first, which keeps
/// the adaptive scheme from missing narrow features (kernel kinks, cutoffs).
pub fn integrate_panels<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let pieces = pieces.max(1);
    let width = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + width * k as f64;
            adaptive_simpson(f, lo, lo + width, tol / pieces as f64)
        })
        .sum()
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section minimisation of a unimodal `f` on `[a, b]`; returns `(argmin, min)`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    // the interior probes can beat the midpoint on a flat valley
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .min_by(|l, r| l.1.total_cmp(&r.1))
        .unwrap()
}

/// Supremum and infimum of `g` on `[a, b]`: dense scan, then golden-section
/// refinement around the best samples. Returns `((x_max, max), (x_min, min))`.
pub fn extrema<F: Fn(f64) -> f64>(g: &F, a: f64, b: f64, samples: usize) -> ((f64, f64), (f64, f64)) {
    let samples = samples.max(3);
    let step = (b - a) / (samples - 1) as f64;
    let xs: Vec<f64> = (0..samples).map(|k| if k + 1 == samples { b } else { a + step * k as f64 }).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| g(x)).collect();

    let refine = |sign: f64| -> (f64, f64) {
        let (k, _) = vals
            .iter()
            .enumerate()
            .min_by(|l, r| (sign * l.1).total_cmp(&(sign * r.1)))
            .unwrap();
        let lo = xs[k.saturating_sub(1)];
        let hi = xs[(k + 1).min(samples - 1)];
        let (x, v) = golden_min(|x| sign * g(x), lo, hi, 1e-12 * (b - a).max(1.0));
        let v = sign * v;
        if sign * v < sign * vals[k] {
            (x, v)
        } else {
            (xs[k], vals[k])
        }
    };
    let max = refine(-1.0);
    let min = refine(1.0);
    (max, min)
}

/// Bisection for a sign change of `f` on `[a, b]` (requires `f(a)` and `f(b)` of
/// opposite sign); returns the midpoint of the final bracket.
pub fn bisect_root<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, xtol: f64) -> f64 {
    let mut fa = f(a);
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
