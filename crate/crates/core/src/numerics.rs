//! Small shared numerical utilities: 1D root finding, quadrature helpers and
//! an explicit Runge-Kutta integrator for profile ODEs.

/// Classical fixed-step RK4 for autonomous first-order systems.
///
/// `f` maps state to derivative; the state is advanced in place over `steps`
/// uniform steps of size `h`.
pub fn rk4_step<const N: usize>(f: &impl Fn(&[f64; N]) -> [f64; N], y: &mut [f64; N], h: f64) {
    let k1 = f(y);
    let mut y2 = *y;
    for i in 0..N {
        y2[i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = f(&y2);
    for i in 0..N {
        y2[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = f(&y2);
    for i in 0..N {
        y2[i] = y[i] + h * k3[i];
    }
    let k4 = f(&y2);
    for i in 0..N {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Bisection refined by Newton steps for a monotone scalar function.
///
/// Finds `x` in `[lo, hi]` with `f(x) = target` assuming `f` is continuous and
/// strictly monotone on the bracket. Converges to `tol` in `x`.
pub fn invert_monotone(
    f: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    let flo = f(lo) - target;
    let increasing = f(hi) - target > flo;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid) - target;
        if (fm > 0.0) == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < tol {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Inverse hyperbolic cosine via the logarithmic identity, valid for `x >= 1`.
pub fn arcosh(x: f64) -> f64 {
    (x + (x * x - 1.0).sqrt()).ln()
}

/// Linear least-squares fit `y = a + b x` returning `(a, b)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let det = n * sxx - sx * sx;
    let b = (n * sxy - sx * sy) / det;
    let a = (sy - b * sx) / n;
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk4_exponential() {
        let f = |y: &[f64; 1]| [y[0]];
        let mut y = [1.0];
        let h = 1e-3;
        for _ in 0..1000 {
            rk4_step(&f, &mut y, h);
        }
        assert!((y[0] - 1.0f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn invert_monotone_cubic() {
        let x = invert_monotone(|x| x * x * x, 8.0, 0.0, 10.0, 1e-14);
        assert!((x - 2.0).abs() < 1e-12);
    }

    #[test]
    fn arcosh_identity() {
        for &x in &[1.0, 1.5, 10.0, 123.0] {
            assert!((arcosh(x).cosh() - x).abs() < 1e-10 * x);
        }
    }
}
