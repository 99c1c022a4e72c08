//! Scalar kernels behind the metric formulas: real fractional powers,
//! bracketed root finding, the gauge of the ellipsoid, the t <-> v
//! reparametrization, the x-root solvers of the two branch equations, and
//! the branch-switch threshold.
//!
//! Everything here is a pure function of value inputs and is safe to call
//! concurrently.

use serde::Serialize;

use crate::error::{Error, Result};

/// Bisection target width; Newton polish refines the last digits.
const BISECT_WIDTH: f64 = 1e-13;

/// Relative band inside which interval endpoints (vanishing discriminant,
/// t = tmax, ...) are treated as exact so that branch dispatch can hit them.
const ENDPOINT_BAND: f64 = 1e-12;

/// `x^e` computed as `exp(e ln x)`, defined for `x >= 0` only; fractional
/// powers of negative reals never arise in this crate.
#[inline]
pub fn real_pow(x: f64, e: f64) -> f64 {
    if x == 0.0 {
        return if e > 0.0 {
            0.0
        } else if e == 0.0 {
            1.0
        } else {
            f64::INFINITY
        };
    }
    debug_assert!(x > 0.0, "real_pow of negative base {x}");
    (e * x.ln()).exp()
}

/// Exponent data for the ellipsoid `{ |z1|^2 + |z2|^(2m) < 1 }` together
/// with the derived endpoints of the branch parameter intervals:
/// `vmax = 1/(4m(1-m))` and `tmax = m/(1-m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EllipsoidParam {
    m: f64,
    vmax: f64,
    tmax: f64,
}

impl EllipsoidParam {
    /// Requires `0 < m < 1/2` (the non-convex range; the convex case has
    /// different formulas and is out of scope).
    pub fn new(m: f64) -> Result<Self> {
        if !(m > 0.0 && m < 0.5) {
            return Err(Error::InvalidInput(format!(
                "exponent m must lie in (0, 1/2), got {m}"
            )));
        }
        let vmax = 1.0 / (4.0 * m * (1.0 - m));
        let tmax = m / (1.0 - m);
        debug_assert!(vmax > 1.0);
        debug_assert!(tmax > 0.0 && tmax < 1.0);
        Ok(Self { m, vmax, tmax })
    }

    #[inline]
    pub fn m(&self) -> f64 {
        self.m
    }

    /// Upper endpoint of the v-interval on which the first branch is defined.
    #[inline]
    pub fn vmax(&self) -> f64 {
        self.vmax
    }

    /// Upper endpoint of the t-interval, the image of `[0, vmax]` under t(v).
    #[inline]
    pub fn tmax(&self) -> f64 {
        self.tmax
    }

    /// `x^(2m)`.
    #[inline]
    pub fn pow2m(&self, x: f64) -> f64 {
        real_pow(x, 2.0 * self.m)
    }

    /// `x^(2m-2)`.
    #[inline]
    pub fn pow2m_minus2(&self, x: f64) -> f64 {
        real_pow(x, 2.0 * self.m - 2.0)
    }
}

/// Bracketed root finding: bisection down to [`BISECT_WIDTH`], then at most
/// five Newton polish steps with the analytic derivative. Newton steps that
/// leave the original bracket or hit a vanishing derivative are discarded,
/// so the bisection answer always stands as a fallback.
pub(crate) fn bisect_then_newton(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    lo0: f64,
    hi0: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo0, hi0);
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Internal(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {flo:e}, f(hi) = {fhi:e}"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= BISECT_WIDTH * (1.0 + mid.abs()) || mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..5 {
        let fx = f(x);
        if fx == 0.0 {
            break;
        }
        let dfx = df(x);
        if dfx == 0.0 || !dfx.is_finite() {
            break;
        }
        let xn = x - fx / dfx;
        if !(xn >= lo0 && xn <= hi0) || xn == x {
            break;
        }
        x = xn;
    }
    Ok(x)
}

/// The gauge (Minkowski functional) of the ellipsoid on moduli: the unique
/// `s > 0` with `(xmag/s)^2 + (ymag/s)^(2m) = 1`. Positively homogeneous of
/// degree one; errors on the zero vector.
pub fn gauge(param: &EllipsoidParam, xmag: f64, ymag: f64) -> Result<f64> {
    if !(xmag >= 0.0) || !(ymag >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "gauge arguments must be nonnegative reals, got ({xmag}, {ymag})"
        )));
    }
    if xmag == 0.0 && ymag == 0.0 {
        return Err(Error::InvalidInput(
            "gauge of the zero vector is undefined".into(),
        ));
    }
    // Single-term cases collapse to the modulus itself.
    if ymag == 0.0 {
        return Ok(xmag);
    }
    if xmag == 0.0 {
        return Ok(ymag);
    }
    let two_m = 2.0 * param.m;
    let y2m = real_pow(ymag, two_m);
    // f is strictly decreasing in s. The left end keeps at least one term
    // at 1, the right end pushes both terms to <= 1/2.
    let lo = xmag.max(ymag);
    let hi = (xmag * std::f64::consts::SQRT_2).max(ymag * real_pow(2.0, 1.0 / two_m));
    let f = |s: f64| (xmag / s).powi(2) + real_pow(ymag / s, two_m) - 1.0;
    let df =
        |s: f64| -2.0 * xmag * xmag / (s * s * s) - two_m * y2m * real_pow(s, -two_m - 1.0);
    bisect_then_newton(f, df, lo, hi)
}

/// The reparametrization t(v), strictly increasing from t(0) = 0 to
/// t(vmax) = tmax. The vanishing discriminant at v = vmax is clamped so the
/// endpoint is reachable in floating point.
pub fn t_of_v(param: &EllipsoidParam, v: f64) -> Result<f64> {
    let m = param.m;
    if !(v >= 0.0) {
        return Err(Error::Domain(format!("t(v) requires v >= 0, got {v}")));
    }
    let mut disc = 1.0 + 4.0 * m * (m - 1.0) * v;
    if disc < 0.0 {
        if disc > -1e-14 {
            disc = 0.0;
        } else {
            return Err(Error::Domain(format!(
                "v = {v} exceeds vmax = {}",
                param.vmax
            )));
        }
    }
    let t = 2.0 * m * m * v / (1.0 + 2.0 * m * (m - 1.0) * v + disc.sqrt());
    Ok(t.clamp(0.0, param.tmax))
}

/// Inverse of [`t_of_v`] on `[0, tmax]`: `v = t / (t(1-m) + m)^2`.
pub fn v_of_t(param: &EllipsoidParam, t: f64) -> Result<f64> {
    let m = param.m;
    if !(t >= 0.0) || t > param.tmax * (1.0 + ENDPOINT_BAND) {
        return Err(Error::Domain(format!(
            "t = {t} outside [0, tmax = {}]",
            param.tmax
        )));
    }
    let d = t * (1.0 - m) + m;
    Ok(t / (d * d))
}

/// Root in `[b, 1)` of `x^(2m) - t x^(2m-2) - (1-t) b^(2m) = 0`, the
/// equation defining the Blaschke zero of the one-zero extremal disc. The
/// left end of the bracket is nonpositive and the value at 1 is
/// `(1-t)(1-b^(2m)) > 0`, so the sign change is guaranteed.
pub fn solve_x_given_t(param: &EllipsoidParam, b: f64, t: f64) -> Result<f64> {
    check_b(b)?;
    if !(t >= 0.0) || t > param.tmax * (1.0 + ENDPOINT_BAND) {
        return Err(Error::Domain(format!(
            "t = {t} outside [0, tmax = {}]",
            param.tmax
        )));
    }
    if t == 0.0 {
        return Ok(b);
    }
    let two_m = 2.0 * param.m;
    let b2m = param.pow2m(b);
    let f = |x: f64| param.pow2m(x) - t * param.pow2m_minus2(x) - (1.0 - t) * b2m;
    let df = |x: f64| {
        two_m * real_pow(x, two_m - 1.0) + t * (2.0 - two_m) * real_pow(x, two_m - 3.0)
    };
    let x = bisect_then_newton(f, df, b, 1.0)?;
    debug_assert!(f(x).abs() <= 1e-12 * (1.0 + b2m), "root residual too large");
    Ok(x)
}

/// Root in `(0, 1]` of the second branch equation
/// `(m-1)^2 v x^(2m) - (m^2 v / t) x^(2m-2) + ((1-v)/(1-t)) b^(2m) = 0`
/// with `t = t(v)`. No root exists in `(0,1)` for `v < 1`; at `v = 1` the
/// root sits at the endpoint `x = 1`.
pub fn solve_x_given_v(param: &EllipsoidParam, b: f64, v: f64) -> Result<f64> {
    check_b(b)?;
    let m = param.m;
    if v < 1.0 {
        return Err(Error::Domain(format!(
            "the second branch equation has no root in (0,1) for v = {v} < 1"
        )));
    }
    if v > param.vmax * (1.0 + ENDPOINT_BAND) {
        return Err(Error::Domain(format!(
            "v = {v} exceeds vmax = {}",
            param.vmax
        )));
    }
    if v == 1.0 {
        return Ok(1.0);
    }
    let t = t_of_v(param, v)?;
    let two_m = 2.0 * m;
    let b2m = param.pow2m(b);
    let ca = (m - 1.0) * (m - 1.0) * v;
    let cb = m * m * v / t;
    let cc = (1.0 - v) / (1.0 - t) * b2m;
    let f = |x: f64| ca * param.pow2m(x) - cb * param.pow2m_minus2(x) + cc;
    let df = |x: f64| {
        ca * two_m * real_pow(x, two_m - 1.0) + cb * (2.0 - two_m) * real_pow(x, two_m - 3.0)
    };
    // The root lies in (b, 1); f(b) < 0 because there is a single sign
    // change on (0,1) and f -> -inf at 0. Widen downward on the off chance
    // rounding puts f(b) on the wrong side.
    let mut lo = b;
    let mut tries = 0;
    while f(lo) >= 0.0 {
        lo *= 0.5;
        tries += 1;
        if tries > 60 {
            return Err(Error::Internal(format!(
                "failed to bracket the second branch root for b = {b}, v = {v}"
            )));
        }
    }
    let x = bisect_then_newton(f, df, lo, 1.0)?;
    debug_assert!(
        f(x).abs() <= 1e-10 * cb.max(1.0),
        "second branch residual too large"
    );
    Ok(x)
}

/// Solution of the branch-switch threshold: the root `x0` of the threshold
/// equation, the parameter `t0` it induces, and the switch point `v0` at
/// which the two branch values cross.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchSwitch {
    pub x0: f64,
    pub t0: f64,
    pub v0: f64,
}

/// Locates the branch switch for a given base coordinate `b`.
///
/// The threshold equation
///
/// ```text
/// x^(4m-2) (b^(2m) - 1 - 2m + 2m^2) + x^(2m) (1 + (1-2m) b^(2m))
///   + x^(2m-2) (1 + (2m-1) b^(2m)) - (1-m)^2 x^(4m) - m^2 x^(4m-4) - b^(2m) = 0
/// ```
///
/// has exactly one root in `(0,1)` yielding a switch point in `(1, vmax)`.
/// Root isolation scans 1024 points uniform in `x^(2m)`; more than one
/// bracketed root raises a diagnostic error instead of silently picking one.
pub fn branch_switch(param: &EllipsoidParam, b: f64) -> Result<BranchSwitch> {
    check_b(b)?;
    let m = param.m;
    let two_m = 2.0 * m;
    let b2m = param.pow2m(b);
    let ca = b2m - 1.0 - 2.0 * m + 2.0 * m * m;
    let cb = 1.0 + (1.0 - 2.0 * m) * b2m;
    let cc = 1.0 + (2.0 * m - 1.0) * b2m;
    let c4 = (1.0 - m) * (1.0 - m);
    let f = |x: f64| {
        ca * real_pow(x, 2.0 * two_m - 2.0) + cb * real_pow(x, two_m)
            + cc * real_pow(x, two_m - 2.0)
            - c4 * real_pow(x, 2.0 * two_m)
            - m * m * real_pow(x, 2.0 * two_m - 4.0)
            - b2m
    };
    let df = |x: f64| {
        ca * (2.0 * two_m - 2.0) * real_pow(x, 2.0 * two_m - 3.0)
            + cb * two_m * real_pow(x, two_m - 1.0)
            + cc * (two_m - 2.0) * real_pow(x, two_m - 3.0)
            - c4 * 2.0 * two_m * real_pow(x, 2.0 * two_m - 1.0)
            - m * m * (2.0 * two_m - 4.0) * real_pow(x, 2.0 * two_m - 5.0)
    };

    const SCAN: usize = 1024;
    let mut brackets: Vec<(f64, f64)> = Vec::new();
    let mut prev_x = real_pow(1.0 / SCAN as f64, 1.0 / two_m);
    let mut prev_f = f(prev_x);
    for k in 2..SCAN {
        let x = real_pow(k as f64 / SCAN as f64, 1.0 / two_m);
        let fx = f(x);
        if prev_f == 0.0 {
            brackets.push((prev_x, prev_x));
        } else if fx != 0.0 && prev_f.signum() != fx.signum() {
            brackets.push((prev_x, x));
        }
        prev_x = x;
        prev_f = fx;
    }
    if prev_f == 0.0 {
        brackets.push((prev_x, prev_x));
    }
    if brackets.len() != 1 {
        return Err(Error::Internal(format!(
            "threshold root isolation found {} sign changes for m = {m}, b = {b}; expected exactly one",
            brackets.len()
        )));
    }
    let (lo, hi) = brackets[0];
    let x0 = if lo == hi {
        lo
    } else {
        bisect_then_newton(f, df, lo, hi)?
    };
    let t0 = (param.pow2m(x0) - b2m) / (param.pow2m_minus2(x0) - b2m);
    let v0 = v_of_t(param, t0)?;
    if !(v0 > 1.0 && v0 < param.vmax) {
        return Err(Error::Internal(format!(
            "switch point v0 = {v0} outside (1, vmax = {}) for m = {m}, b = {b}",
            param.vmax
        )));
    }
    // The two branch values must cross here.
    let k1 = branch1_tau(param, b, v0)?;
    let k2 = branch2_tau(param, b, v0);
    if (k1 - k2).abs() > 1e-8 * k2 {
        return Err(Error::Internal(format!(
            "branch values do not cross at v0 = {v0}: {k1} vs {k2}"
        )));
    }
    Ok(BranchSwitch { x0, t0, v0 })
}

/// Shared branch-value formula `(m/b) x^(2m-1) / ((1-m) x^(2m) + m x^(2m-2) - b^(2m))`.
/// The denominator is provably positive for the roots fed into it; a
/// nonpositive value indicates a bug upstream.
pub(crate) fn tau_from_x(param: &EllipsoidParam, b: f64, x: f64) -> Result<f64> {
    let den =
        (1.0 - param.m) * param.pow2m(x) + param.m * param.pow2m_minus2(x) - param.pow2m(b);
    if !(den > 0.0) {
        return Err(Error::Internal(format!(
            "nonpositive denominator {den:e} in the branch value at x = {x}, b = {b}"
        )));
    }
    Ok(param.m / b * real_pow(x, 2.0 * param.m - 1.0) / den)
}

/// First branch value as a function of v (root of the t-equation substituted
/// into the shared formula).
pub(crate) fn branch1_tau(param: &EllipsoidParam, b: f64, v: f64) -> Result<f64> {
    let t = t_of_v(param, v)?;
    let x = solve_x_given_t(param, b, t)?;
    tau_from_x(param, b, x)
}

/// Second branch value `(m/b) sqrt((1-b^(2m)) v + b^(2m)) / (1 - b^(2m))`,
/// defined for every `v >= 0`.
pub(crate) fn branch2_tau(param: &EllipsoidParam, b: f64, v: f64) -> f64 {
    let b2m = param.pow2m(b);
    param.m / b * ((1.0 - b2m) * v + b2m).sqrt() / (1.0 - b2m)
}

fn check_b(b: f64) -> Result<()> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!(
            "base coordinate b must lie in (0, 1), got {b}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(m: f64) -> EllipsoidParam {
        EllipsoidParam::new(m).unwrap()
    }

    /// Independent gauge oracle: plain bisection on [max(x,y), x+y], valid
    /// whenever the right end lies outside the ellipsoid scaled copy, which
    /// holds for the specific inputs used below.
    fn gauge_oracle(m: f64, x: f64, y: f64) -> f64 {
        let f = |s: f64| (x / s).powi(2) + (y / s).powf(2.0 * m) - 1.0;
        let (mut lo, mut hi) = (x.max(y), x + y);
        assert!(f(lo) >= 0.0 && f(hi) <= 0.0, "oracle bracket invalid");
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn param_rejects_bad_exponent() {
        assert!(EllipsoidParam::new(0.0).is_err());
        assert!(EllipsoidParam::new(0.5).is_err());
        assert!(EllipsoidParam::new(-0.1).is_err());
        assert!(EllipsoidParam::new(f64::NAN).is_err());
        let e = p(0.25);
        assert!((e.vmax() - 4.0 / 3.0).abs() < 1e-15);
        assert!((e.tmax() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn gauge_single_term_is_modulus() {
        let e = p(0.25);
        assert_eq!(gauge(&e, 1.0, 0.0).unwrap(), 1.0);
        assert_eq!(gauge(&e, 0.0, 0.7).unwrap(), 0.7);
        assert!(gauge(&e, 0.0, 0.0).is_err());
        assert!(gauge(&e, -1.0, 0.5).is_err());
    }

    #[test]
    fn gauge_matches_bisection_oracle() {
        let e = p(0.25);
        let g = gauge(&e, 0.6, 0.8).unwrap();
        let oracle = gauge_oracle(0.25, 0.6, 0.8);
        assert!((g - oracle).abs() <= 1e-12, "{g} vs {oracle}");
        // frozen from the oracle
        assert!((g - 1.2960140508067628).abs() <= 1e-12);
        let resid = (0.6 / g).powi(2) + real_pow(0.8 / g, 0.5) - 1.0;
        assert!(resid.abs() <= 1e-14);
    }

    #[test]
    fn gauge_homogeneous_degree_one() {
        let e = p(0.2);
        for c in [0.125, 0.5, 3.0, 17.0] {
            let g1 = gauge(&e, 0.3, 0.4).unwrap();
            let g2 = gauge(&e, c * 0.3, c * 0.4).unwrap();
            assert!((g2 - c * g1).abs() <= 1e-12 * c * g1);
        }
    }

    #[test]
    fn t_of_v_exact_endpoints() {
        let e = p(0.25);
        // vanishing discriminant at vmax gives tmax = m/(1-m)
        let t = t_of_v(&e, 4.0 / 3.0).unwrap();
        assert!((t - 1.0 / 3.0).abs() <= 1e-15);
        // v = 1 gives (m/(1-m))^2 exactly in rational arithmetic
        let t1 = t_of_v(&e, 1.0).unwrap();
        assert!((t1 - 1.0 / 9.0).abs() <= 1e-15);
        assert_eq!(t_of_v(&e, 0.0).unwrap(), 0.0);
        assert!(t_of_v(&e, 4.0 / 3.0 + 1e-6).is_err());
        assert!(t_of_v(&e, -0.5).is_err());
    }

    #[test]
    fn v_of_t_inverts_t_of_v() {
        let e = p(0.25);
        assert!((v_of_t(&e, 1.0 / 9.0).unwrap() - 1.0).abs() <= 1e-15);
        assert!((v_of_t(&e, 1.0 / 3.0).unwrap() - 4.0 / 3.0).abs() <= 1e-15);
        assert_eq!(v_of_t(&e, 0.0).unwrap(), 0.0);
        assert!(v_of_t(&e, 0.34).is_err());
        for m in [0.05, 0.25, 0.45] {
            let e = p(m);
            for k in 1..1000 {
                let v = e.vmax() * k as f64 / 1000.0;
                let t = t_of_v(&e, v).unwrap();
                let back = v_of_t(&e, t).unwrap();
                assert!(
                    (back - v).abs() <= 1e-10 * v.max(1e-30),
                    "roundtrip failed at m={m}, v={v}: {back}"
                );
            }
        }
    }

    #[test]
    fn t_v_maps_are_monotone() {
        for m in [0.05, 0.3, 0.45] {
            let e = p(m);
            let mut prev_t = -1.0;
            for k in 0..=1000 {
                let v = e.vmax() * k as f64 / 1000.0;
                let t = t_of_v(&e, v).unwrap();
                assert!(t > prev_t || (k == 0 && t == 0.0), "t(v) not increasing");
                assert!(t <= e.tmax());
                prev_t = t;
            }
        }
    }

    #[test]
    fn x_root_given_t_degenerates_to_b() {
        let e = p(0.17);
        assert_eq!(solve_x_given_t(&e, 0.42, 0.0).unwrap(), 0.42);
    }

    #[test]
    fn x_root_given_t_forward_substitution() {
        // t constructed so that x = 0.64 is the exact root for m = 1/4, b = 1/4:
        // t = (x^(2m) - b^(2m)) / (x^(2m-2) - b^(2m)) = 32/155.
        let e = p(0.25);
        let t = 32.0 / 155.0;
        let x = solve_x_given_t(&e, 0.25, t).unwrap();
        assert!((x - 0.64).abs() <= 1e-12, "x = {x}");
    }

    #[test]
    fn x_root_given_t_residual_and_interval() {
        let e = p(0.25);
        let b = 0.5;
        let t = 0.2;
        let x = solve_x_given_t(&e, b, t).unwrap();
        assert!(x > b && x < 1.0);
        let resid = e.pow2m(x) - t * e.pow2m_minus2(x) - (1.0 - t) * e.pow2m(b);
        assert!(resid.abs() <= 1e-12 * (1.0 + e.pow2m(b)));
    }

    #[test]
    fn x_root_given_t_monotone_in_t() {
        for m in [0.1, 0.3] {
            let e = p(m);
            for b in [0.2, 0.7] {
                let mut prev = 0.0;
                for k in 0..=200 {
                    let t = e.tmax() * k as f64 / 200.0;
                    let x = solve_x_given_t(&e, b, t).unwrap();
                    assert!(x >= prev, "x(t) not monotone at m={m} b={b} t={t}");
                    prev = x;
                }
            }
        }
    }

    #[test]
    fn x_root_given_v_unit_v_is_one() {
        let e = p(0.25);
        assert_eq!(solve_x_given_v(&e, 0.5, 1.0).unwrap(), 1.0);
        assert!(solve_x_given_v(&e, 0.5, 0.9).is_err());
    }

    #[test]
    fn x_roots_merge_at_vmax() {
        for m in [0.05, 0.25, 0.45] {
            let e = p(m);
            for b in [0.1, 0.5, 0.9] {
                let x1 = solve_x_given_t(&e, b, e.tmax()).unwrap();
                let x2 = solve_x_given_v(&e, b, e.vmax()).unwrap();
                assert!(
                    (x1 - x2).abs() <= 1e-8,
                    "roots fail to merge at vmax: m={m} b={b}: {x1} vs {x2}"
                );
            }
        }
    }

    #[test]
    fn x_root_given_v_residual_and_interval() {
        let e = p(0.25);
        let (b, v) = (0.5, 1.2);
        let x = solve_x_given_v(&e, b, v).unwrap();
        assert!(x > 0.0 && x < 1.0);
        let m = 0.25;
        let t = t_of_v(&e, v).unwrap();
        let resid = (m - 1.0) * (m - 1.0) * v * e.pow2m(x) - m * m * v / t * e.pow2m_minus2(x)
            + (1.0 - v) / (1.0 - t) * e.pow2m(b);
        assert!(resid.abs() <= 1e-10 * (m * m * v / t).max(1.0));
    }

    #[test]
    fn branch_switch_satisfies_defining_equation() {
        // t0 is the t-equation solved for t, so feeding it back must return x0.
        for (m, b) in [(0.25, 0.5), (0.1, 0.3), (0.45, 0.85)] {
            let e = p(m);
            let sw = branch_switch(&e, b).unwrap();
            let x = solve_x_given_t(&e, b, sw.t0).unwrap();
            assert!((x - sw.x0).abs() <= 1e-10, "m={m} b={b}: {x} vs {}", sw.x0);
            assert!(sw.v0 > 1.0 && sw.v0 < e.vmax());
        }
    }

    #[test]
    fn branch_switch_frozen_values() {
        let e = p(0.25);
        let sw = branch_switch(&e, 0.5).unwrap();
        assert!((sw.x0 - 0.780388814434603).abs() <= 1e-9);
        assert!((sw.t0 - 0.237124783846132).abs() <= 1e-9);
        assert!((sw.v0 - 1.295408948740527).abs() <= 1e-9);
        let e = p(0.1);
        let sw = branch_switch(&e, 0.3).unwrap();
        assert!((sw.v0 - 2.5594628682342715).abs() <= 1e-8);
    }

    #[test]
    fn branch_values_cross_at_switch() {
        for (m, b) in [(0.25, 0.5), (0.1, 0.3)] {
            let e = p(m);
            let sw = branch_switch(&e, b).unwrap();
            let k1 = branch1_tau(&e, b, sw.v0).unwrap();
            let k2 = branch2_tau(&e, b, sw.v0);
            assert!((k1 - k2).abs() <= 1e-8 * k2);
            // constant sign of the difference on each side of v0
            for k in 1..100 {
                let v = 1.0 + (sw.v0 - 1.0) * k as f64 / 100.0;
                assert!(branch1_tau(&e, b, v).unwrap() <= branch2_tau(&e, b, v));
                let v = sw.v0 + (e.vmax() - sw.v0) * k as f64 / 100.0;
                assert!(branch1_tau(&e, b, v).unwrap() >= branch2_tau(&e, b, v));
            }
        }
    }

    #[test]
    fn real_pow_edge_cases() {
        assert_eq!(real_pow(0.0, 0.5), 0.0);
        assert_eq!(real_pow(0.0, 0.0), 1.0);
        assert_eq!(real_pow(0.0, -1.0), f64::INFINITY);
        assert_eq!(real_pow(1.0, 0.37), 1.0);
        assert!((real_pow(2.0, 2.0) - 4.0).abs() < 1e-14);
    }
}
