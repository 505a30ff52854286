//! Adaptive Simpson quadrature.

/// Hard cap on bisection depth; beyond it the local estimate is accepted.
const MAX_DEPTH: u32 = 48;

/// Integrate `f` over `[a, b]` to relative tolerance `rel_tol`.
///
/// Returns `None` as soon as `f` produces a non-finite value.
pub fn adaptive_simpson<F>(f: &mut F, a: f64, b: f64, rel_tol: f64) -> Option<f64>
where
    F: FnMut(f64) -> Option<f64>,
{
    if a == b {
        return Some(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // seed the absolute target from a 5-point estimate so the tolerance is
    // relative to the integral, not to one bad Simpson panel
    let l = f(0.5 * (a + m))?;
    let r = f(0.5 * (m + b))?;
    let scale = ((b - a) / 12.0 * (fa + 4.0 * l + 2.0 * fm + 4.0 * r + fb)).abs();
    let eps = rel_tol * scale.max(f64::MIN_POSITIVE);
    recurse(f, a, b, fa, fm, fb, whole, eps, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F>(f: &mut F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, eps: f64, depth: u32) -> Option<f64>
where
    F: FnMut(f64) -> Option<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * eps {
        return Some(left + right + delta / 15.0);
    }
    Some(
        recurse(f, a, m, fa, flm, fm, left, 0.5 * eps, depth - 1)?
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * eps, depth - 1)?,
    )
}

/// Composite Simpson with a fixed number of panels (`n` is rounded up to even).
pub fn simpson_fixed<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = (n.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_reciprocal() {
        // ∫₁² dt/t = log 2
        let v = adaptive_simpson(&mut |t: f64| Some(1.0 / t), 1.0, 2.0, 1e-10).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-11);
        // ∫₀^0.9 dt/(1−t) = log 10
        let v = adaptive_simpson(&mut |t: f64| Some(1.0 / (1.0 - t)), 0.0, 0.9, 1e-10).unwrap();
        assert!((v - 10f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn stops_on_non_finite() {
        let r = adaptive_simpson(
            &mut |t: f64| {
                let v = 1.0 / t;
                v.is_finite().then_some(v)
            },
            0.0,
            1.0,
            1e-8,
        );
        assert!(r.is_none());
    }

    #[test]
    fn fixed_simpson_exact_on_cubics() {
        let v = simpson_fixed(|x| x * x * x - x, 0.0, 2.0, 2);
        assert!((v - 2.0).abs() < 1e-14);
    }
}
