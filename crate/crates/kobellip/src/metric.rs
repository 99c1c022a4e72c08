//! Reduction of an arbitrary (base point, tangent vector) query to the
//! canonical axis form by ellipsoid automorphisms, and the branch dispatch
//! that evaluates the metric itself.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{self, real_pow, EllipsoidParam};

/// A point of the ellipsoid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl Point {
    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        Self { z1, z2 }
    }

    /// The canonical base point `(0, b)` on the second axis.
    pub fn on_axis(b: f64) -> Self {
        Self {
            z1: Complex64::new(0.0, 0.0),
            z2: Complex64::new(b, 0.0),
        }
    }

    /// Value of the defining criterion `|z1|^2 + |z2|^(2m)`; interior points
    /// have value < 1.
    pub fn criterion(&self, param: &EllipsoidParam) -> f64 {
        self.z1.norm_sqr() + param.pow2m(self.z2.norm())
    }
}

/// A tangent vector at a point; any value is allowed, including zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    pub x: Complex64,
    pub y: Complex64,
}

impl TangentVector {
    pub fn new(x: Complex64, y: Complex64) -> Self {
        Self { x, y }
    }

    pub fn is_zero(&self) -> bool {
        self.x == Complex64::new(0.0, 0.0) && self.y == Complex64::new(0.0, 0.0)
    }
}

/// The holomorphic automorphism of the ellipsoid determined by `a` in the
/// unit disk and a rotation angle `theta`:
///
/// ```text
/// (z1, z2) -> ( (z1 - a)/(1 - conj(a) z1),
///               e^(i theta) (1-|a|^2)^(1/(2m)) z2 / (1 - conj(a) z1)^(1/m) )
/// ```
#[derive(Debug, Clone, Copy)]
pub struct Automorphism {
    pub a: Complex64,
    pub theta: f64,
}

impl Automorphism {
    pub fn new(a: Complex64, theta: f64) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return Err(Error::InvalidInput(format!(
                "automorphism parameter a must lie in the unit disk, |a| = {}",
                a.norm()
            )));
        }
        Ok(Self { a, theta })
    }

    pub fn apply_point(&self, param: &EllipsoidParam, p: &Point) -> Point {
        let one = Complex64::new(1.0, 0.0);
        let denom = one - self.a.conj() * p.z1;
        let fac = 1.0 - self.a.norm_sqr();
        let phase = Complex64::from_polar(1.0, self.theta);
        Point {
            z1: (p.z1 - self.a) / denom,
            z2: phase * real_pow(fac, 1.0 / (2.0 * param.m())) * p.z2
                * denom.powf(-1.0 / param.m()),
        }
    }

    /// Total derivative of the automorphism at `p`, applied to `w`.
    pub fn apply_tangent(&self, param: &EllipsoidParam, p: &Point, w: &TangentVector) -> TangentVector {
        let m = param.m();
        let one = Complex64::new(1.0, 0.0);
        let denom = one - self.a.conj() * p.z1;
        let fac = 1.0 - self.a.norm_sqr();
        let phase = Complex64::from_polar(1.0, self.theta);
        let x = fac * w.x / (denom * denom);
        let scale = phase * real_pow(fac, 1.0 / (2.0 * m));
        let y = scale
            * (p.z2 * (self.a.conj() / m) * denom.powf(-1.0 / m - 1.0) * w.x
                + denom.powf(-1.0 / m) * w.y);
        TangentVector { x, y }
    }
}

/// Query data after the automorphism/rotation reduction: base point `(0, b)`
/// and nonnegative vector moduli. `v` is defined when both `b` and `ymag`
/// are positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormalizedQuery {
    pub b: f64,
    pub xmag: f64,
    pub ymag: f64,
    pub v: Option<f64>,
}

/// Which formula produced the metric value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Zero tangent vector; the pseudometric vanishes.
    #[serde(rename = "zero")]
    Zero,
    /// Base point at the origin; the metric is the gauge of the vector.
    #[serde(rename = "origin-gauge")]
    OriginGauge,
    /// Vanishing first component of the reduced vector.
    #[serde(rename = "X-zero")]
    XZero,
    /// Vanishing second component of the reduced vector.
    #[serde(rename = "Y-zero")]
    YZero,
    #[serde(rename = "kappa1")]
    Kappa1,
    #[serde(rename = "kappa2")]
    Kappa2,
    /// The two branch values agree to within the tie band.
    #[serde(rename = "tie")]
    Tie,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Branch::Zero => "zero",
            Branch::OriginGauge => "origin-gauge",
            Branch::XZero => "X-zero",
            Branch::YZero => "Y-zero",
            Branch::Kappa1 => "kappa1",
            Branch::Kappa2 => "kappa2",
            Branch::Tie => "tie",
        };
        f.write_str(s)
    }
}

/// Metric value with branch tag and solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MetricValue {
    pub kappa: f64,
    pub branch: Branch,
    /// Reduced base coordinate.
    pub b: f64,
    /// Reduced branch parameter, when the dispatch reached the generic case.
    pub v: Option<f64>,
    /// Reparametrized branch parameter, when computed (v <= vmax).
    pub t: Option<f64>,
    /// Root of the first branch equation, when computed.
    pub x: Option<f64>,
    /// Branch-switch point; only filled by callers that solve for it.
    pub v0: Option<f64>,
}

/// Reduces `(p, w)` to canonical form: moves the base point to `(0, b)` with
/// `b in [0, 1)` by the automorphism centered at `z1`, transforms the vector
/// by the total derivative, and strips phases from both components.
pub fn normalize(param: &EllipsoidParam, p: &Point, w: &TangentVector) -> Result<NormalizedQuery> {
    let crit = p.criterion(param);
    if !(crit < 1.0) {
        let g = scalar::gauge(param, p.z1.norm(), p.z2.norm())?;
        return Err(Error::Domain(format!(
            "base point is not interior: gauge(z) = {g:.17}"
        )));
    }
    let m = param.m();
    let fac = 1.0 - p.z1.norm_sqr();
    let r2 = p.z2.norm();
    let b = r2 * real_pow(fac, -1.0 / (2.0 * m));
    if !(b < 1.0) {
        return Err(Error::Domain(format!(
            "reduced base coordinate b = {b} fell outside [0, 1)"
        )));
    }
    let x_new = w.x / fac;
    // e^(i theta) rotates the image base coordinate onto the positive axis.
    let phase = if r2 > 0.0 {
        p.z2.conj() / r2
    } else {
        Complex64::new(1.0, 0.0)
    };
    let y_new = phase
        * real_pow(fac, -1.0 / (2.0 * m))
        * (p.z2 * p.z1.conj() / (m * fac) * w.x + w.y);
    let xmag = x_new.norm();
    let ymag = y_new.norm();
    let v = if b > 0.0 && ymag > 0.0 {
        let r = b * xmag / (m * ymag);
        Some(r * r)
    } else {
        None
    };
    Ok(NormalizedQuery { b, xmag, ymag, v })
}

/// First branch formula: the shared branch value at the root of the first
/// branch equation. Defined for `0 <= v <= vmax`.
pub fn kappa1(param: &EllipsoidParam, b: f64, v: f64) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!("kappa1 requires b in (0,1), got {b}")));
    }
    scalar::branch1_tau(param, b, v)
}

/// Second branch formula `(m/b) sqrt((1-b^(2m)) v + b^(2m)) / (1-b^(2m))`,
/// defined for every `v >= 0`.
pub fn kappa2(param: &EllipsoidParam, b: f64, v: f64) -> Result<f64> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!("kappa2 requires b in (0,1), got {b}")));
    }
    if !(v >= 0.0) {
        return Err(Error::Domain(format!("kappa2 requires v >= 0, got {v}")));
    }
    Ok(scalar::branch2_tau(param, b, v))
}

/// Relative tie band for reporting the two branch values as equal.
const TIE_BAND: f64 = 1e-12;

/// The metric for the normalized data `(0, b)` with vector `(xmag, 1)`,
/// `v = (b xmag / m)^2`, dispatched over the three branch regions.
pub fn kappa_v(param: &EllipsoidParam, b: f64, v: f64) -> Result<MetricValue> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!(
            "kappa_v requires b in (0,1), got {b}"
        )));
    }
    if !(v > 0.0) {
        return Err(Error::Domain(format!("kappa_v requires v > 0, got {v}")));
    }
    if v >= param.vmax() {
        return Ok(MetricValue {
            kappa: scalar::branch2_tau(param, b, v),
            branch: Branch::Kappa2,
            b,
            v: Some(v),
            t: None,
            x: None,
            v0: None,
        });
    }
    let t = scalar::t_of_v(param, v)?;
    let x = scalar::solve_x_given_t(param, b, t)?;
    let k1 = scalar::tau_from_x(param, b, x)?;
    if v <= 1.0 {
        return Ok(MetricValue {
            kappa: k1,
            branch: Branch::Kappa1,
            b,
            v: Some(v),
            t: Some(t),
            x: Some(x),
            v0: None,
        });
    }
    let k2 = scalar::branch2_tau(param, b, v);
    let branch = if (k1 - k2).abs() <= TIE_BAND * k2 {
        Branch::Tie
    } else if k1 < k2 {
        Branch::Kappa1
    } else {
        Branch::Kappa2
    };
    Ok(MetricValue {
        kappa: k1.min(k2),
        branch,
        b,
        v: Some(v),
        t: Some(t),
        x: Some(x),
        v0: None,
    })
}

/// The Kobayashi pseudometric of the ellipsoid at `p` in direction `w`.
///
/// Dispatch: zero vector -> 0; base at the origin -> gauge of the vector;
/// a vanishing reduced component -> the corresponding closed form; otherwise
/// the branch formulas scaled by `ymag` (the metric is absolutely
/// homogeneous in the vector).
pub fn kappa(param: &EllipsoidParam, p: &Point, w: &TangentVector) -> Result<MetricValue> {
    let q = normalize(param, p, w)?;
    if q.xmag == 0.0 && q.ymag == 0.0 {
        return Ok(MetricValue {
            kappa: 0.0,
            branch: Branch::Zero,
            b: q.b,
            v: None,
            t: None,
            x: None,
            v0: None,
        });
    }
    if q.b == 0.0 {
        return Ok(MetricValue {
            kappa: scalar::gauge(param, q.xmag, q.ymag)?,
            branch: Branch::OriginGauge,
            b: 0.0,
            v: None,
            t: None,
            x: None,
            v0: None,
        });
    }
    if q.xmag == 0.0 {
        return Ok(MetricValue {
            kappa: q.ymag / (1.0 - q.b * q.b),
            branch: Branch::XZero,
            b: q.b,
            v: Some(0.0),
            t: None,
            x: None,
            v0: None,
        });
    }
    if q.ymag == 0.0 {
        return Ok(MetricValue {
            kappa: q.xmag / (1.0 - param.pow2m(q.b)).sqrt(),
            branch: Branch::YZero,
            b: q.b,
            v: None,
            t: None,
            x: None,
            v0: None,
        });
    }
    let v = q.v.expect("v defined when b > 0 and ymag > 0");
    let mut mv = kappa_v(param, q.b, v)?;
    mv.kappa *= q.ymag;
    Ok(mv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(m: f64) -> EllipsoidParam {
        EllipsoidParam::new(m).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn normalize_identity_on_axis() {
        let e = p(0.25);
        let q = normalize(
            &e,
            &Point::on_axis(0.5),
            &TangentVector::new(c(1.0, 0.0), c(1.0, 0.0)),
        )
        .unwrap();
        assert_eq!(q.b, 0.5);
        assert_eq!(q.xmag, 1.0);
        assert_eq!(q.ymag, 1.0);
        let v = q.v.unwrap();
        assert!((v - (0.5 / 0.25) * (0.5 / 0.25)).abs() <= 1e-14);
    }

    #[test]
    fn normalize_base_reduction_exact_arithmetic() {
        // m = 1/4 makes 1/(2m) = 2, so b = 0.3 * (1 - 0.25)^-2 exactly.
        let e = p(0.25);
        let q = normalize(
            &e,
            &Point::new(c(0.5, 0.0), c(0.3, 0.0)),
            &TangentVector::new(c(0.2, 0.1), c(-0.4, 0.9)),
        )
        .unwrap();
        let expect = 0.3 / (0.75 * 0.75);
        assert!((q.b - expect).abs() <= 1e-15, "b = {}", q.b);
    }

    #[test]
    fn normalize_rejects_exterior_points_naming_gauge() {
        let e = p(0.25);
        let err = normalize(
            &e,
            &Point::new(c(0.9, 0.0), c(0.9, 0.0)),
            &TangentVector::new(c(1.0, 0.0), c(0.0, 0.0)),
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("gauge"), "message should name the gauge: {msg}");
    }

    #[test]
    fn kappa1_v_to_zero_limit() {
        for (m, b) in [(0.25, 0.5), (0.1, 0.3), (0.45, 0.8)] {
            let e = p(m);
            let k = kappa1(&e, b, 1e-10).unwrap();
            let closed = 1.0 / (1.0 - b * b);
            assert!((k - closed).abs() <= 1e-8 * closed, "m={m} b={b}: {k}");
        }
    }

    #[test]
    fn kappa1_forward_substitution_oracle() {
        // Oracle: pick x = 0.64, derive t and v by substitution, and evaluate
        // the branch value directly at x, bypassing the root solver.
        let e = p(0.25);
        let (b, x) = (0.25, 0.64);
        let t = (e.pow2m(x) - e.pow2m(b)) / (e.pow2m_minus2(x) - e.pow2m(b));
        let v = scalar::v_of_t(&e, t).unwrap();
        assert!((v - 1.2596625450389676).abs() <= 1e-12);
        let den = 0.75 * e.pow2m(x) + 0.25 * e.pow2m_minus2(x) - e.pow2m(b);
        let oracle = 0.25 / b * real_pow(x, -0.5) / den;
        let k = kappa1(&e, b, v).unwrap();
        assert!((k - oracle).abs() <= 1e-11 * oracle, "{k} vs {oracle}");
        assert!((k - 2.1248).abs() <= 1e-3);
        assert!((k - 2.1248339973439574).abs() <= 1e-9);
    }

    #[test]
    fn kappa1_continuous_increasing_grid() {
        for (m, b) in [(0.25, 0.5), (0.05, 0.2)] {
            let e = p(m);
            let mut prev = 0.0;
            for k in 1..=1000 {
                let v = e.vmax() * k as f64 / 1000.0;
                let val = kappa1(&e, b, v).unwrap();
                assert!(val > prev, "kappa1 not increasing at m={m} b={b} v={v}");
                prev = val;
            }
        }
    }

    #[test]
    fn kappa2_closed_form_values() {
        let e = p(0.25);
        let k = kappa2(&e, 0.5, 4.0).unwrap();
        assert!((k - 2.3398).abs() <= 1e-4);
        assert!((k - 2.339844809843789).abs() <= 1e-12);
        // v = 0 collapses the radicand to b^(2m)
        let b: f64 = 0.37;
        let b2m = e.pow2m(b);
        let expect = 0.25 / b * b2m.sqrt() / (1.0 - b2m);
        assert!((kappa2(&e, b, 0.0).unwrap() - expect).abs() <= 1e-15 * expect);
    }

    #[test]
    fn kappa_x_zero_is_exact() {
        let e = p(0.25);
        let mv = kappa(
            &e,
            &Point::on_axis(0.5),
            &TangentVector::new(c(0.0, 0.0), c(1.0, 0.0)),
        )
        .unwrap();
        assert_eq!(mv.kappa, 4.0 / 3.0);
        assert_eq!(mv.branch, Branch::XZero);
    }

    #[test]
    fn kappa_y_zero_closed_form() {
        let e = p(0.25);
        let mv = kappa(
            &e,
            &Point::on_axis(0.5),
            &TangentVector::new(c(1.0, 0.0), c(0.0, 0.0)),
        )
        .unwrap();
        let closed = 1.0 / (1.0 - real_pow(0.5, 0.5)).sqrt();
        assert_eq!(mv.kappa, closed);
        assert!((mv.kappa - 1.8478).abs() <= 1e-4);
        assert!((mv.kappa - 1.8477590650225737).abs() <= 1e-12);
        assert_eq!(mv.branch, Branch::YZero);
    }

    #[test]
    fn kappa_at_origin_delegates_to_gauge() {
        let e = p(0.25);
        let w = TangentVector::new(c(0.6, 0.0), c(0.0, 0.8));
        let mv = kappa(&e, &Point::on_axis(0.0), &w).unwrap();
        let g = scalar::gauge(&e, 0.6, 0.8).unwrap();
        assert_eq!(mv.kappa, g);
        assert_eq!(mv.branch, Branch::OriginGauge);
    }

    #[test]
    fn kappa_zero_vector_is_zero() {
        let e = p(0.3);
        let mv = kappa(
            &e,
            &Point::on_axis(0.4),
            &TangentVector::new(c(0.0, 0.0), c(0.0, 0.0)),
        )
        .unwrap();
        assert_eq!(mv.kappa, 0.0);
        assert_eq!(mv.branch, Branch::Zero);
    }

    #[test]
    fn kappa_boundary_normalized_flat_data_is_one() {
        // |z1|^2 + |z2|^(2m) = 1 on the boundary makes the Y-zero value
        // exactly 1 when the vector reuses the same square root.
        for m in [0.1, 0.25, 0.4] {
            let e = p(m);
            for b in [0.2, 0.5, 0.8] {
                let z1 = (1.0 - e.pow2m(b)).sqrt();
                let mv = kappa(
                    &e,
                    &Point::on_axis(b),
                    &TangentVector::new(c(z1, 0.0), c(0.0, 0.0)),
                )
                .unwrap();
                assert_eq!(mv.kappa, 1.0, "m={m} b={b}");
            }
        }
    }

    #[test]
    fn kappa_homogeneity() {
        let e = p(0.2);
        let pt = Point::new(c(0.3, 0.1), c(0.2, -0.4));
        let w = TangentVector::new(c(0.7, -0.2), c(0.1, 0.5));
        let base = kappa(&e, &pt, &w).unwrap().kappa;
        for scale in [c(2.0, 0.0), c(0.0, 3.0), c(-1.2, 0.7)] {
            let ws = TangentVector::new(scale * w.x, scale * w.y);
            let k = kappa(&e, &pt, &ws).unwrap().kappa;
            assert!(
                (k - scale.norm() * base).abs() <= 1e-12 * scale.norm() * base,
                "homogeneity failed for scale {scale}"
            );
        }
    }

    #[test]
    fn kappa_invariant_under_automorphisms() {
        let e = p(0.25);
        let pt = Point::new(c(0.25, -0.15), c(0.3, 0.2));
        let w = TangentVector::new(c(0.9, 0.4), c(-0.3, 0.6));
        let base = kappa(&e, &pt, &w).unwrap().kappa;
        for (are, aim, th) in [(0.3, 0.2, 0.7), (-0.5, 0.1, 2.1), (0.0, -0.6, -1.3)] {
            let auto = Automorphism::new(c(are, aim), th).unwrap();
            let pt2 = auto.apply_point(&e, &pt);
            let w2 = auto.apply_tangent(&e, &pt, &w);
            assert!(pt2.criterion(&e) < 1.0);
            let k = kappa(&e, &pt2, &w2).unwrap().kappa;
            assert!(
                (k - base).abs() <= 1e-10 * base,
                "automorphism invariance failed: {k} vs {base}"
            );
        }
    }

    #[test]
    fn dispatch_seams_are_continuous() {
        let e = p(0.25);
        let b = 0.5;
        let eps = 1e-9;
        for seam in [1.0, e.vmax()] {
            let left = kappa_v(&e, b, seam * (1.0 - eps)).unwrap().kappa;
            let right = kappa_v(&e, b, seam * (1.0 + eps)).unwrap().kappa;
            assert!((left - right).abs() <= 1e-8 * right, "seam at {seam}");
        }
    }

    #[test]
    fn dispatch_branch_tags() {
        let e = p(0.25);
        let b = 0.5;
        let sw = scalar::branch_switch(&e, b).unwrap();
        assert_eq!(kappa_v(&e, b, 0.9).unwrap().branch, Branch::Kappa1);
        let mid_lo = 1.0 + 0.5 * (sw.v0 - 1.0);
        assert_eq!(kappa_v(&e, b, mid_lo).unwrap().branch, Branch::Kappa1);
        let mid_hi = sw.v0 + 0.5 * (e.vmax() - sw.v0);
        assert_eq!(kappa_v(&e, b, mid_hi).unwrap().branch, Branch::Kappa2);
        assert_eq!(kappa_v(&e, b, 2.0 * e.vmax()).unwrap().branch, Branch::Kappa2);
    }
}
