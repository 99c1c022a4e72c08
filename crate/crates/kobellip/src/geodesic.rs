//! The two families of candidate extremal discs through `(0, b)` and their
//! boundary diagnostics.
//!
//! Every disc here has the shape
//!
//! ```text
//! phi(lambda) = ( c1 a1 lambda / (1 - alpha0 lambda),
//!                 c2 B(lambda)^r (a2 (1 - alpha2 lambda) / (1 - alpha0 lambda))^(1/m) )
//! ```
//!
//! with real coefficients, unimodular prefactors `c1, c2`, and `B` the
//! Blaschke factor with zero `alpha2` (`r = 1` for the one-zero form, `r = 0`
//! for the zero-free form). The structural identities
//!
//! ```text
//! alpha0 = a2^2 alpha2                       (coupling)
//! 1 + alpha0^2 = a1^2 + a2^2 (1 + alpha2^2)  (normalization)
//! ```
//!
//! force the boundary trace onto the ellipsoid boundary, which is what makes
//! these discs extremal candidates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{self, real_pow, EllipsoidParam};

/// Structure of the second component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiscForm {
    /// Second component is a pure 1/m power of a Moebius quotient; exists
    /// iff `v >= 1`.
    #[serde(rename = "zero-free")]
    ZeroFree,
    /// Second component carries one Blaschke zero; exists iff `v <= vmax`.
    #[serde(rename = "one-zero")]
    OneZero,
}

impl std::fmt::Display for DiscForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DiscForm::ZeroFree => "zero-free",
            DiscForm::OneZero => "one-zero",
        })
    }
}

/// A candidate extremal disc with its normalization constant `tau`, so that
/// `tau * phi'(0) = (xmag, 1)` for the data it was built from (`(xmag, 0)`
/// for the flat disc).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeodesicDisc {
    pub form: DiscForm,
    pub m: f64,
    pub b: f64,
    /// Branch parameter the disc was constructed for; `None` for the flat
    /// disc (vanishing second derivative component).
    pub v: Option<f64>,
    pub a1: f64,
    pub a2: f64,
    pub alpha0: f64,
    /// Moebius coefficient of the second component; for the one-zero form
    /// this is the (signed) Blaschke zero.
    pub alpha2: f64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub tau: f64,
}

/// Boundary and interior containment diagnostics for a disc.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryReport {
    pub samples: usize,
    /// Max over the unit circle of | |phi1|^2 + |phi2|^(2m) - 1 |.
    pub max_defect: f64,
    /// Max of the defining criterion over an interior polar grid; must stay
    /// below 1 for a valid disc.
    pub interior_max: f64,
}

impl GeodesicDisc {
    /// Evaluates the disc at `lambda`, `|lambda| <= 1`.
    pub fn eval(&self, lambda: Complex64) -> (Complex64, Complex64) {
        let one = Complex64::new(1.0, 0.0);
        let denom = one - self.alpha0 * lambda;
        let phi1 = self.c1 * self.a1 * lambda / denom;
        let base = self.a2 * (one - self.alpha2 * lambda) / denom;
        let pw = base.powf(1.0 / self.m);
        let phi2 = match self.form {
            DiscForm::ZeroFree => self.c2 * pw,
            DiscForm::OneZero => {
                let blaschke = (lambda - self.alpha2) / (one - self.alpha2 * lambda);
                self.c2 * blaschke * pw
            }
        };
        (phi1, phi2)
    }

    /// `phi(0)` from the closed form.
    pub fn value_origin(&self) -> (Complex64, Complex64) {
        let g0 = real_pow(self.a2, 1.0 / self.m);
        let phi2 = match self.form {
            DiscForm::ZeroFree => self.c2 * g0,
            DiscForm::OneZero => self.c2 * (-self.alpha2) * g0,
        };
        (Complex64::new(0.0, 0.0), phi2)
    }

    /// `phi'(0)` from the closed form (no numerical differentiation).
    pub fn derivative_origin(&self) -> (Complex64, Complex64) {
        let d1 = self.c1 * self.a1;
        let g0 = real_pow(self.a2, 1.0 / self.m);
        let d2 = match self.form {
            DiscForm::ZeroFree => g0 * (self.alpha0 - self.alpha2) / self.m,
            DiscForm::OneZero => {
                let beta = self.alpha2;
                g0 * ((1.0 - beta * beta) - beta * (self.alpha0 - beta) / self.m)
            }
        };
        (d1, self.c2 * d2)
    }

    /// Residuals of the coupling and normalization identities.
    pub fn condition_residuals(&self) -> (f64, f64) {
        let r_coupling = (self.alpha0 - self.a2 * self.a2 * self.alpha2).abs();
        let r_norm = (1.0 + self.alpha0 * self.alpha0
            - (self.a1 * self.a1 + self.a2 * self.a2 * (1.0 + self.alpha2 * self.alpha2)))
            .abs();
        (r_coupling, r_norm)
    }

    /// Samples the boundary trace and an interior polar grid.
    pub fn boundary_report(&self, n_samples: usize) -> Result<BoundaryReport> {
        if n_samples < 16 {
            return Err(Error::InvalidInput(format!(
                "boundary report needs at least 16 samples, got {n_samples}"
            )));
        }
        let param = EllipsoidParam::new(self.m)?;
        let crit = |lam: Complex64| {
            let (p1, p2) = self.eval(lam);
            p1.norm_sqr() + param.pow2m(p2.norm())
        };
        let mut max_defect = 0.0f64;
        for k in 0..n_samples {
            let th = std::f64::consts::TAU * k as f64 / n_samples as f64;
            let g = crit(Complex64::from_polar(1.0, th));
            max_defect = max_defect.max((g - 1.0).abs());
        }
        let mut interior_max = 0.0f64;
        let radii = [0.25, 0.5, 0.75, 0.9, 0.99, 0.999, 1.0 - 1e-4, 1.0 - 1e-6];
        for r in radii {
            for k in 0..n_samples {
                let th = std::f64::consts::TAU * (k as f64 + 0.5) / n_samples as f64;
                interior_max = interior_max.max(crit(Complex64::from_polar(r, th)));
            }
        }
        Ok(BoundaryReport {
            samples: n_samples,
            max_defect,
            interior_max,
        })
    }
}

/// The flat disc `lambda -> (a1 lambda, b)` with `a1 = sqrt(1 - b^(2m))`:
/// the extremal disc for data with vanishing second vector component,
/// normalized so `tau * phi'(0) = (xmag, 0)`.
pub fn flat_disc(param: &EllipsoidParam, b: f64, xmag: f64) -> Result<GeodesicDisc> {
    if !(b >= 0.0 && b < 1.0) {
        return Err(Error::Domain(format!("flat disc requires b in [0,1), got {b}")));
    }
    if !(xmag > 0.0) {
        return Err(Error::Domain(format!(
            "flat disc normalization requires xmag > 0, got {xmag}"
        )));
    }
    let a1 = (1.0 - param.pow2m(b)).sqrt();
    Ok(GeodesicDisc {
        form: DiscForm::ZeroFree,
        m: param.m(),
        b,
        v: None,
        a1,
        a2: real_pow(b, param.m()),
        alpha0: 0.0,
        alpha2: 0.0,
        c1: Complex64::new(1.0, 0.0),
        c2: Complex64::new(1.0, 0.0),
        tau: xmag / a1,
    })
}

/// Constructs the zero-free disc for `(b, v)`. Solving the interpolation
/// system `phi(0) = (0, b)`, `tau phi'(0) = (xmag, 1)` with the structural
/// identities eliminates to closed form: the family exists iff `v >= 1`
/// (below that the Moebius coefficient would leave the closed unit disk),
/// and `tau` comes out as the second branch value.
pub fn construct_zero_free(param: &EllipsoidParam, b: f64, v: f64) -> Result<GeodesicDisc> {
    check_b(b)?;
    if !(v >= 1.0) {
        return Err(Error::Domain(format!(
            "a zero-free disc interpolates the data iff v >= 1; got v = {v}"
        )));
    }
    let m = param.m();
    let b2m = param.pow2m(b);
    let tau = scalar::branch2_tau(param, b, v);
    let alpha2 = -m / (tau * b * (1.0 - b2m));
    debug_assert!(alpha2.abs() <= 1.0 + 1e-12);
    let alpha0 = b2m * alpha2;
    let a2 = real_pow(b, m);
    let a1_sq = 1.0 + alpha0 * alpha0 - a2 * a2 * (1.0 + alpha2 * alpha2);
    if !(a1_sq > 0.0) {
        return Err(Error::Infeasible(format!(
            "zero-free disc has nonpositive first coefficient square {a1_sq:e} at b = {b}, v = {v}"
        )));
    }
    Ok(GeodesicDisc {
        form: DiscForm::ZeroFree,
        m,
        b,
        v: Some(v),
        a1: a1_sq.sqrt(),
        a2,
        alpha0,
        alpha2,
        c1: Complex64::new(1.0, 0.0),
        c2: Complex64::new(1.0, 0.0),
        tau,
    })
}

/// Constructs the one-zero disc for `(b, v)`, `0 < v <= vmax`. The Blaschke
/// zero is the mirrored root `-x` of the first branch equation: with the
/// zero at `+x` the interpolation `tau phi'(0) = (xmag, 1)` cannot hold with
/// `tau > 0`, and the mirrored disc is the same disc up to the disk rotation
/// `lambda -> -lambda`. `tau` comes out as the first branch value.
pub fn construct_one_zero(param: &EllipsoidParam, b: f64, v: f64) -> Result<GeodesicDisc> {
    check_b(b)?;
    if !(v > 0.0) {
        return Err(Error::Domain(format!(
            "a one-zero disc requires v > 0, got v = {v}"
        )));
    }
    let m = param.m();
    let t = scalar::t_of_v(param, v)?;
    let x = scalar::solve_x_given_t(param, b, t)?;
    let b2m = param.pow2m(b);
    let a2 = real_pow(b / x, m);
    let beta = -x;
    let alpha0 = a2 * a2 * beta;
    let a1_sq = 1.0 + alpha0 * alpha0 - a2 * a2 * (1.0 + x * x);
    if !(a1_sq > 0.0) {
        return Err(Error::Infeasible(format!(
            "one-zero disc has nonpositive first coefficient square {a1_sq:e} at b = {b}, v = {v}"
        )));
    }
    // phi2'(0) in closed form; tau normalizes the second component to 1.
    let d2 = (b / x) * ((1.0 - x * x) + real_pow(x, 2.0 - 2.0 * m) * (param.pow2m(x) - b2m) / m);
    debug_assert!(d2 > 0.0);
    Ok(GeodesicDisc {
        form: DiscForm::OneZero,
        m,
        b,
        v: Some(v),
        a1: a1_sq.sqrt(),
        a2,
        alpha0,
        alpha2: beta,
        c1: Complex64::new(1.0, 0.0),
        c2: Complex64::new(1.0, 0.0),
        tau: 1.0 / d2,
    })
}

fn check_b(b: f64) -> Result<()> {
    if !(b > 0.0 && b < 1.0) {
        return Err(Error::Domain(format!(
            "base coordinate b must lie in (0, 1), got {b}"
        )));
    }
    Ok(())
}
