//! Adaptive Simpson quadrature.

/// Maximum recursion depth; intervals are bisected at most this often.
const MAX_DEPTH: u32 = 48;

/// `∫_a^b f` to relative tolerance `rel_tol` (with an absolute floor of
/// `rel_tol * 1e-300` so zero integrands terminate).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // coarse magnitude estimate from a 5-point rule keeps the tolerance relative
    let q1 = f(0.5 * (a + m));
    let q3 = f(0.5 * (m + b));
    let scale = ((b - a) / 12.0 * (fa + 4.0 * q1 + 2.0 * fm + 4.0 * q3 + fb)).abs().max(whole.abs());
    let tol = (rel_tol * scale).max(1e-300);
    let first = refine(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH);
    // a coarse estimate far above the converged value means the tolerance
    // was too loose; redo the pass relative to the first answer
    if first.abs() < 0.5 * scale {
        let tol = (rel_tol * first.abs()).max(1e-300);
        return refine(f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH);
    }
    first
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
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
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Five-point Gauss–Legendre nodes on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss–Legendre rule on [a, b].
pub fn gauss_legendre5<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    GL5_NODES.iter().zip(GL5_WEIGHTS.iter()).map(|(x, w)| w * f(c + h * x)).sum::<f64>() * h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_and_transcendentals() {
        let v = adaptive_simpson(&|x: f64| x * x, 0.0, 3.0, 1e-12);
        assert!((v - 9.0).abs() < 1e-12);
        let v = adaptive_simpson(&|x: f64| x.exp(), 0.0, 1.0, 1e-12);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-12);
        let v = adaptive_simpson(&|x: f64| 1.0 / x, 1.0, 1e6, 1e-11);
        assert!((v - 1e6f64.ln()).abs() < 1e-9);
        assert_eq!(adaptive_simpson(&|_x: f64| 0.0, 0.0, 1.0, 1e-10), 0.0);
    }

    #[test]
    fn handles_kinks() {
        let v = adaptive_simpson(&|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12);
        assert!((v - (0.045 + 0.245)).abs() < 1e-11);
    }

    #[test]
    fn reversed_interval_is_negative() {
        let v = adaptive_simpson(&|x: f64| x, 2.0, 0.0, 1e-12);
        assert!((v + 2.0).abs() < 1e-13);
    }

    #[test]
    fn gauss_legendre_exact_for_degree_nine() {
        let v = gauss_legendre5(&|x: f64| x.powi(9) + x.powi(4), 0.0, 2.0);
        assert!((v - (102.4 + 6.4)).abs() < 1e-11);
    }
}
