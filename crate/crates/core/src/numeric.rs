//! Small numerical building blocks shared across the crate: local polynomial
//! differentiation on scattered nodes, fixed-order Gauss–Legendre panels, and
//! a safeguarded scalar root refiner.

/// First and second derivative at `x0` of the degree-(m-1) polynomial through
/// the nodes `(xs, ys)` (m ≤ 8). Uses a Newton divided-difference table; the
/// nodes need not be uniformly spaced.
pub fn poly_derivatives_at(xs: &[f64], ys: &[f64], x0: f64) -> (f64, f64) {
    let m = xs.len();
    debug_assert!((2..=8).contains(&m) && ys.len() == m);
    let mut coef = [0.0_f64; 8];
    coef[..m].copy_from_slice(ys);
    // Divided differences in place: coef[j] = f[x_0..x_j].
    for order in 1..m {
        for j in (order..m).rev() {
            coef[j] = (coef[j] - coef[j - 1]) / (xs[j] - xs[j - order]);
        }
    }
    // Evaluate p'(x0) and p''(x0) from the Newton form by synthetic
    // differentiation: track p, p', p''/2 while folding in factors (x0 - x_j).
    let mut p = coef[m - 1];
    let mut d1 = 0.0;
    let mut d2h = 0.0; // p''/2
    for j in (0..m - 1).rev() {
        let dx = x0 - xs[j];
        d2h = d2h * dx + d1;
        d1 = d1 * dx + p;
        p = p * dx + coef[j];
    }
    (d1, 2.0 * d2h)
}

/// Abscissas and weights of 4-point Gauss–Legendre on [-1, 1].
const GAUSS4_X: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_26,
    0.339_981_043_584_856_26,
    0.861_136_311_594_052_6,
];
const GAUSS4_W: [f64; 4] = [
    0.347_854_845_137_453_85,
    0.652_145_154_862_546_2,
    0.652_145_154_862_546_2,
    0.347_854_845_137_453_85,
];

/// Abscissas and weights of 8-point Gauss–Legendre on [-1, 1].
const GAUSS8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GAUSS8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// ∫_a^b f by 4-point Gauss–Legendre on a single panel.
pub fn gauss4<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for i in 0..4 {
        acc += GAUSS4_W[i] * f(mid + half * GAUSS4_X[i]);
    }
    acc * half
}

/// ∫_a^b f by 8-point Gauss–Legendre on a single panel.
pub fn gauss8<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for i in 0..8 {
        acc += GAUSS8_W[i] * f(mid + half * GAUSS8_X[i]);
    }
    acc * half
}

/// ∫_a^b f by composite 8-point Gauss over `panels` equal panels.
pub fn gauss8_composite<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let n = panels.max(1);
    let width = (b - a) / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        let lo = a + width * k as f64;
        acc += gauss8(lo, lo + width, &mut f);
    }
    acc
}

/// Root of a continuous `f` inside a bracket `[a, b]` with `f(a)·f(b) ≤ 0`,
/// refined by bisection with secant acceleration until `|f| ≤ f_tol` or the
/// bracket shrinks below `x_tol`. Deterministic for fixed inputs.
pub fn refine_root<F: FnMut(f64) -> f64>(
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    f_tol: f64,
    x_tol: f64,
    mut f: F,
) -> (f64, f64) {
    if fa == 0.0 {
        return (a, 0.0);
    }
    if fb == 0.0 {
        return (b, 0.0);
    }
    debug_assert!(fa.signum() != fb.signum(), "refine_root needs a bracket");
    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    for iter in 0..200 {
        if best.1.abs() <= f_tol || (b - a).abs() <= x_tol {
            break;
        }
        // Secant candidate, fall back to bisection if it leaves the bracket
        // or fails to shrink it fast enough (every third step bisects).
        let mid = 0.5 * (a + b);
        let mut x = if fb != fa { b - fb * (b - a) / (fb - fa) } else { mid };
        if !(x > a && x < b) || iter % 3 == 2 {
            x = mid;
        }
        let fx = f(x);
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 {
            return (x, 0.0);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    best
}

/// Cubic Hermite interpolation of `(y0, d0)`–`(y1, d1)` over `[x0, x1]`.
#[inline]
pub fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + d0 * h * (t3 - 2.0 * t2 + t)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + d1 * h * (t3 - t2)
}

/// Derivative of the cubic Hermite interpolant at `x`.
#[inline]
pub fn hermite_derivative(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let t2 = t * t;
    (y0 * (6.0 * t2 - 6.0 * t) / h)
        + d0 * (3.0 * t2 - 4.0 * t + 1.0)
        + (y1 * (-6.0 * t2 + 6.0 * t) / h)
        + d1 * (3.0 * t2 - 2.0 * t)
}
