//! Closed-form reference objects: the dispersion constant, the arctan
//! centre `L_s` of the branch, the cubic forcing `pi_s`, and the quadratic
//! "bricks" built from sliding averages.

use std::f64::consts::FRAC_2_PI;

use crate::error::{Error, Result};
use crate::quadrature::{gk15_adaptive, QuadConfig};

/// Asymptotic slope `s >= 0` of a self-similar profile.
///
/// Negative slopes follow from `k_{-s} = -k_s` and are never stored.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SlopeParam(f64);

impl SlopeParam {
    pub fn new(s: f64) -> Result<Self> {
        if s.is_finite() && s >= 0.0 {
            Ok(Self(s))
        } else {
            Err(Error::InvalidArgument(format!(
                "slope must be finite and non-negative, got {s}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SlopeParam {
    type Error = Error;
    fn try_from(s: f64) -> Result<Self> {
        Self::new(s)
    }
}

/// Dispersion constant `(1 + s^2/3)^{-1}`.
pub fn kappa(s: SlopeParam) -> f64 {
    1.0 / (1.0 + s.0 * s.0 / 3.0)
}

/// `L_s(y) = (2s/pi) arctan((1 + s^2/3) y)`.
pub fn linear_profile(s: SlopeParam, y: f64) -> f64 {
    let s = s.0;
    FRAC_2_PI * s * ((1.0 + s * s / 3.0) * y).atan()
}

/// `L_s` in the compactified variable `z = arctan y`.
pub fn linear_profile_compact(s: SlopeParam, z: f64) -> f64 {
    let sv = s.0;
    let c = 1.0 + sv * sv / 3.0;
    // arctan(c tan z) written through atan2 so z = +-pi/2 is exact.
    FRAC_2_PI * sv * (c * z.sin()).atan2(z.cos())
}

/// Derivative of [`linear_profile_compact`] with respect to `z`.
pub fn linear_profile_compact_deriv(s: SlopeParam, z: f64) -> f64 {
    let sv = s.0;
    let c = 1.0 + sv * sv / 3.0;
    let (sz, cz) = z.sin_cos();
    FRAC_2_PI * sv * c / (cz * cz + c * c * sz * sz)
}

/// `pi_s = (L_s^2 - s^2) L_s`.
pub fn pi_s(s: SlopeParam, y: f64) -> f64 {
    let l = linear_profile(s, y);
    (l * l - s.0 * s.0) * l
}

/// `int_0^y L_s(u) du` in closed form.
pub fn linear_profile_integral(s: SlopeParam, y: f64) -> f64 {
    let sv = s.0;
    if sv == 0.0 {
        return 0.0;
    }
    let c = 1.0 + sv * sv / 3.0;
    FRAC_2_PI * sv * (y * (c * y).atan() - (c * c * y * y).ln_1p() / (2.0 * c))
}

fn brick_quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-10,
        rel_tol: 1e-10,
        max_subdivisions: 200,
    }
}

/// Sliding average `(1/alpha) int_{y-alpha}^{y} f`.
///
/// Negative `alpha` averages over `[y, y - alpha]`; `alpha = 0` returns
/// `f(y)`.
pub fn sliding_average<F>(f: &F, alpha: f64, y: f64) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha = {alpha}")));
    }
    if alpha == 0.0 {
        return Ok(f(y));
    }
    let (lo, hi) = if alpha > 0.0 {
        (y - alpha, y)
    } else {
        (y, y - alpha)
    };
    let r = gk15_adaptive(f, lo, hi, &brick_quad())?;
    Ok(r.value / (hi - lo))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "brick averaging length must be >= 0, got {alpha}"
        )))
    }
}

/// `delta_alpha[f](y) = (avg_alpha f)^2 - (avg_{-alpha} f)^2`.
pub fn delta_brick<F>(f: &F, alpha: f64, y: f64) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    delta_bilinear(f, f, alpha, y)
}

/// Polarized form of [`delta_brick`].
pub fn delta_bilinear<F, G>(f: &F, g: &G, alpha: f64, y: f64) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
    G: Fn(f64) -> f64 + ?Sized,
{
    check_alpha(alpha)?;
    let fp = sliding_average(f, alpha, y)?;
    let fm = sliding_average(f, -alpha, y)?;
    let gp = sliding_average(g, alpha, y)?;
    let gm = sliding_average(g, -alpha, y)?;
    Ok(fp * gp - fm * gm)
}

/// `J_alpha[h](y) = (avg_alpha h)^2 - 2 h(y)^2 + (avg_{-alpha} h)^2`.
pub fn j_brick<F>(h: &F, alpha: f64, y: f64) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
{
    j_bilinear(h, h, alpha, y)
}

/// Polarized form of [`j_brick`].
pub fn j_bilinear<F, G>(f: &F, g: &G, alpha: f64, y: f64) -> Result<f64>
where
    F: Fn(f64) -> f64 + ?Sized,
    G: Fn(f64) -> f64 + ?Sized,
{
    check_alpha(alpha)?;
    let fp = sliding_average(f, alpha, y)?;
    let fm = sliding_average(f, -alpha, y)?;
    let gp = sliding_average(g, alpha, y)?;
    let gm = sliding_average(g, -alpha, y)?;
    Ok(fp * gp - 2.0 * f(y) * g(y) + fm * gm)
}

/// Log-spaced sample lattice `[lo, hi]^2` with `n` points per axis.
pub fn log_lattice(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2 && lo > 0.0 && hi > lo);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Smallest `C` with `|delta_alpha[L_s](y)| <= C s^2 min(alpha^{1/2}, alpha^{-1/2})`
/// over an `n x n` log lattice of `(alpha, y)` in `[1e-2, 1e2]^2`.
pub fn fitted_delta_constant(s: SlopeParam, n: usize) -> Result<f64> {
    let l = |y: f64| linear_profile(s, y);
    let pts = log_lattice(1e-2, 1e2, n);
    let s2 = s.get() * s.get();
    let mut c: f64 = 0.0;
    for &alpha in &pts {
        let shape = alpha.sqrt().min(1.0 / alpha.sqrt());
        for &y in &pts {
            let d = delta_brick(&l, alpha, y)?;
            c = c.max(d.abs() / (s2 * shape));
        }
    }
    Ok(c)
}

/// Smallest `C` with `|J_alpha[L_s](y)| <= C s^2 min(alpha, 1)` over the
/// same lattice as [`fitted_delta_constant`].
pub fn fitted_j_constant(s: SlopeParam, n: usize) -> Result<f64> {
    let l = |y: f64| linear_profile(s, y);
    let pts = log_lattice(1e-2, 1e2, n);
    let s2 = s.get() * s.get();
    let mut c: f64 = 0.0;
    for &alpha in &pts {
        let shape = alpha.min(1.0);
        for &y in &pts {
            let j = j_brick(&l, alpha, y)?;
            c = c.max(j.abs() / (s2 * shape));
        }
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(s: f64) -> SlopeParam {
        SlopeParam::new(s).unwrap()
    }

    #[test]
    fn kappa_values() {
        assert_eq!(kappa(sp(0.0)), 1.0);
        assert!((kappa(sp(1.0)) - 0.75).abs() < 1e-15);
        assert!((kappa(sp(3f64.sqrt())) - 0.5).abs() < 1e-15);
        for i in 0..=100 {
            let s = 0.1 * i as f64;
            assert!((kappa(sp(s)) * (1.0 + s * s / 3.0) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn slope_param_rejects_negative() {
        assert!(SlopeParam::new(-0.1).is_err());
        assert!(SlopeParam::new(f64::NAN).is_err());
        assert!(SlopeParam::try_from(0.3).is_ok());
    }

    #[test]
    fn linear_profile_limits() {
        assert_eq!(linear_profile(sp(0.0), 3.0), 0.0);
        assert_eq!(linear_profile(sp(0.7), 0.0), 0.0);
        assert!((linear_profile(sp(0.7), 1e12) - 0.7).abs() < 1e-11);
        assert!((linear_profile_compact(sp(0.7), std::f64::consts::FRAC_PI_2) - 0.7).abs() < 1e-15);
        let s = sp(1.3);
        for y in [-4.0, -0.3, 0.2, 5.0] {
            assert_eq!(linear_profile(s, -y), -linear_profile(s, y));
            assert_eq!(pi_s(s, -y), -pi_s(s, y));
            let z = y.atan();
            assert!((linear_profile_compact(s, z) - linear_profile(s, y)).abs() < 1e-14);
        }
        assert!(linear_profile(s, 1.0) < linear_profile(s, 1.1));
    }

    #[test]
    fn compact_derivative_matches_difference() {
        let s = sp(0.9);
        for z in [0.0, 0.4, 1.2, 1.5] {
            let h = 1e-6;
            let fd =
                (linear_profile_compact(s, z + h) - linear_profile_compact(s, z - h)) / (2.0 * h);
            assert!((fd - linear_profile_compact_deriv(s, z)).abs() < 1e-8);
        }
    }

    #[test]
    fn pi_s_decays_like_inverse() {
        let s = sp(0.5);
        assert_eq!(pi_s(sp(0.0), 2.0), 0.0);
        assert_eq!(pi_s(s, 0.0), 0.0);
        let ys = log_lattice(1e2, 1e4, 9);
        let pts: Vec<(f64, f64)> = ys
            .iter()
            .map(|&y| (y.ln(), pi_s(s, y).abs().ln()))
            .collect();
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn linear_integral_closed_form() {
        let s = sp(0.8);
        let l = |u: f64| linear_profile(s, u);
        for y in [0.5, 3.0, 40.0] {
            let q = gk15_adaptive(l, 0.0, y, &brick_quad()).unwrap().value;
            assert!((q - linear_profile_integral(s, y)).abs() < 1e-8);
        }
    }

    #[test]
    fn brick_closed_forms() {
        let c = |_: f64| 2.5;
        let id = |y: f64| y;
        for (alpha, y) in [(0.3, 1.0), (2.0, -0.7), (0.01, 5.0)] {
            assert!(delta_brick(&c, alpha, y).unwrap().abs() < 1e-12);
            assert!(j_brick(&c, alpha, y).unwrap().abs() < 1e-12);
            assert!((delta_brick(&id, alpha, y).unwrap() + 2.0 * y * alpha).abs() < 1e-10);
            assert!((j_brick(&id, alpha, y).unwrap() - alpha * alpha / 2.0).abs() < 1e-10);
        }
        assert_eq!(delta_brick(&id, 0.0, 1.0).unwrap(), 0.0);
        assert!(delta_brick(&id, -1.0, 1.0).is_err());
    }

    #[test]
    fn brick_parity_for_odd_functions() {
        let f = |y: f64| y.sin() + 0.3 * (2.0 * y).atan();
        for (alpha, y) in [(0.4, 0.9), (3.0, 2.2)] {
            let dp = delta_brick(&f, alpha, y).unwrap();
            let dm = delta_brick(&f, alpha, -y).unwrap();
            assert!((dp + dm).abs() < 1e-9);
            let jp = j_brick(&f, alpha, y).unwrap();
            let jm = j_brick(&f, alpha, -y).unwrap();
            assert!((jp - jm).abs() < 1e-9);
        }
    }

    #[test]
    fn polarization_identity() {
        let f = |y: f64| y.tanh();
        let g = |y: f64| (0.5 * y).sin();
        let fg = |y: f64| f(y) + g(y);
        for (alpha, y) in [(0.5, 0.2), (4.0, -1.5)] {
            let lhs = delta_brick(&fg, alpha, y).unwrap();
            let rhs = delta_brick(&f, alpha, y).unwrap()
                + 2.0 * delta_bilinear(&f, &g, alpha, y).unwrap()
                + delta_brick(&g, alpha, y).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
            let lhs = j_brick(&fg, alpha, y).unwrap();
            let rhs = j_brick(&f, alpha, y).unwrap()
                + 2.0 * j_bilinear(&f, &g, alpha, y).unwrap()
                + j_brick(&g, alpha, y).unwrap();
            assert!((lhs - rhs).abs() < 1e-10);
        }
    }
}
