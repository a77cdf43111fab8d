//! Derivative-free scalar maximization: grid scan plus golden-section refinement.

/// Outcome of a golden-section search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub arg: f64,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9; // (√5 − 1) / 2

/// Golden-section maximization of `f` on `[lo, hi]`.
///
/// Stops when the bracket is narrower than `tol·max(1, |x|)` or after
/// `max_iter` shrink steps. The best point seen (including both ends) is
/// returned, so the result never undershoots the bracket endpoints.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64, max_iter: usize) -> Maximum
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut best = (a, f(a));
    let fb = f(b);
    if fb > best.1 {
        best = (b, fb);
    }

    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < max_iter {
        if b - a <= tol * (0.5 * (a + b)).abs().max(1.0) {
            converged = true;
            break;
        }
        iterations += 1;
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
    }
    if !converged && b - a <= tol * (0.5 * (a + b)).abs().max(1.0) {
        converged = true;
    }

    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    let mid = 0.5 * (a + b);
    let fm = f(mid);
    if fm >= best.1 {
        best = (mid, fm);
    }
    Maximum {
        arg: best.0,
        value: best.1,
        iterations,
        converged,
    }
}

/// Evenly spaced grid of `n >= 2` points on `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least two points");
    let span = hi - lo;
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + span * (i as f64 / last) })
        .collect()
}

/// Odd-length grid on `[−half_width, half_width]` that contains 0 and is
/// exactly antisymmetric: `grid[n−1−i] == −grid[i]`.
pub fn symmetric_grid(half_width: f64, n: usize) -> Vec<f64> {
    let n = if n % 2 == 0 { n + 1 } else { n };
    let last = (n - 1) as f64;
    (0..n)
        .map(|i| half_width * ((2.0 * i as f64 - last) / last))
        .collect()
}
