//! Residual of the self-similar equation written in the compactified
//! variable `z = arctan y`.
//!
//! For `z` in `[0, pi/2]` the residual is
//!
//! ```text
//! R(z) = sin z cos z k'(z)
//!      + 1/pi int_0^{pi/2} [ (P(z)-P(y))/(tan z - tan y) A(z,y)
//!                          + (P(z)-P(y))/(tan z + tan y) B(z,y) ] sec^2 y dy
//!      - 2/pi int_0^{pi/2} [ ((k(z)-k(y))/(tan z - tan y))^2 D+ A^2
//!                          + ((k(z)+k(y))/(tan z + tan y))^2 D- B^2 ] sec^2 y dy
//! ```
//!
//! with `P = k' cos^2`, `D+` the mean of `k` over `[tan z, tan y]`, `D-` the
//! mean over `[-tan y, tan z]` (odd extension), `A = 1/(1+D+^2)` and
//! `B = 1/(1+D-^2)`.
//!
//! Every difference quotient is rewritten as a divided difference of the
//! spline times `cos z cos y / sinc`, which is finite everywhere. Three
//! regions of the outer variable are treated separately:
//!
//! * `y ~ z` (and `y ~ -z` near the origin): divided differences use a
//!   midpoint Taylor expansion instead of subtracting nearby values;
//! * `y ~ pi/2`: the two `sec^2 y / (tan z -+ tan y)` terms are combined over
//!   a common denominator, removing the `inf - inf` cancellation;
//! * elsewhere: the direct form.
//!
//! Every term vanishes at `z = pi/2`, so the row there is the limit of
//! `R(z) / cos z`. For `k ~ s - c/y` at infinity only the local term and
//! the far part of the first integral survive, giving
//!
//! ```text
//! lim R(z) / cos z = k~'(pi/2) - (2s/pi) / (1 + s^2)
//! ```
//!
//! This far-field balance fixes the decay rate of `k` and with it the
//! approach to the boundary value; without it the collocated system admits
//! profiles whose interior tends to a value other than `k~(pi/2)`.

use std::f64::consts::{FRAC_1_PI, FRAC_PI_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gk15_adaptive, trapezoid_weights, QuadConfig};
use crate::spline::Profile;

/// Separation below which an inner average is replaced by its limit.
const COINCIDENT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualConfig {
    /// Trapezoid nodes for the outer `y` integrals; `None` means `10 N`.
    pub outer_nodes: Option<usize>,
    /// Quadrature settings for the inner mean-value integrals.
    pub inner_quad: QuadConfig,
    /// Half-width of the `y ~ z` region, in outer-node spacings.
    pub split_halfwidth_z: f64,
    /// Width (radians) of the `y ~ pi/2` region.
    pub split_halfwidth_end: f64,
    /// Terms kept in the midpoint expansion of divided differences (1 or 2).
    pub series_order: usize,
    /// Include the far-field row at `z = pi/2` (the limit of
    /// `R(z) / cos z`).
    pub include_endpoint: bool,
}

impl Default for ResidualConfig {
    fn default() -> Self {
        Self {
            outer_nodes: None,
            inner_quad: QuadConfig::default(),
            split_halfwidth_z: 2.0,
            split_halfwidth_end: 0.1,
            series_order: 2,
            include_endpoint: true,
        }
    }
}

impl ResidualConfig {
    pub fn outer_nodes_for(&self, n: usize) -> usize {
        self.outer_nodes.unwrap_or(10 * n)
    }

    pub fn validate(&self) -> Result<()> {
        self.inner_quad.validate()?;
        if matches!(self.outer_nodes, Some(m) if m < 2) {
            return Err(Error::InvalidArgument("outer_nodes must be >= 2".into()));
        }
        if !(self.split_halfwidth_z > 0.0 && self.split_halfwidth_end > 0.0) {
            return Err(Error::InvalidArgument(
                "singular-region half-widths must be positive".into(),
            ));
        }
        if !(1..=2).contains(&self.series_order) {
            return Err(Error::InvalidArgument(format!(
                "series_order must be 1 or 2, got {}",
                self.series_order
            )));
        }
        Ok(())
    }
}

/// Collocated residuals plus the two boundary rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    /// Equation residuals at `z_1, ..., z_{N-1}` (the last one only when
    /// the endpoint row is included).
    pub interior: Vec<f64>,
    /// `k(0) - 0`.
    pub bc0: f64,
    /// `k(pi/2) - s`.
    pub bc_end: f64,
}

impl ResidualVector {
    pub fn len(&self) -> usize {
        self.interior.len() + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Flattened as `[interior..., bc0, bc_end]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.interior.clone();
        v.push(self.bc0);
        v.push(self.bc_end);
        v
    }

    pub fn max_abs(&self) -> f64 {
        self.to_vec().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_interior(&self) -> f64 {
        self.interior.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Which mean-value average to take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Mean of `k` over `[tan z, tan y]`.
    Plus,
    /// Mean of `k` over `[-tan y, tan z]`.
    Minus,
}

/// Compactified mean value of an odd function `k~` (given through a closure)
/// between `tan a` and `tan b`; `end_value` is `k~(pi/2)`.
fn compact_mean<F>(k: &F, end_value: f64, a: f64, b: f64, quad: &QuadConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if (b - a).abs() < COINCIDENT {
        return Ok(k(0.5 * (a + b)));
    }
    let (pa, pb) = (a.abs(), b.abs());
    // cos is taken as exactly 0 at the compactified endpoint.
    let cos_or_zero = |w: f64| if w >= FRAC_PI_2 { 0.0 } else { w.cos() };
    let (ca, cb) = (cos_or_zero(pa), cos_or_zero(pb));
    let span = (b - a).sin();
    // int_a^b sec^2 k = end_value (tan|b| - tan|a|) + int_|a|^|b| sec^2 (k - end_value)
    let mut mean = end_value * (pb - pa).sin() / span;
    if ca > 0.0 && cb > 0.0 {
        let (lo, hi, sign) = if pa <= pb {
            (pa, pb, 1.0)
        } else {
            (pb, pa, -1.0)
        };
        let g = gk15_adaptive(
            |w| {
                let c = w.cos();
                (k(w) - end_value) / (c * c)
            },
            lo,
            hi,
            quad,
        )?;
        mean += sign * g.value * ca * cb / span;
    }
    Ok(mean)
}

/// Mean value `Delta~_{+-y} k~(z)` for an arbitrary odd closure.
pub fn delta_tilde_fn<F>(
    k: &F,
    end_value: f64,
    z: f64,
    y: f64,
    side: Side,
    quad: &QuadConfig,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(z.abs() <= FRAC_PI_2 && (0.0..=FRAC_PI_2).contains(&y)) {
        return Err(Error::OutOfDomain(if z.abs() > FRAC_PI_2 { z } else { y }));
    }
    let (a, b) = match side {
        Side::Plus => (z, y),
        Side::Minus => (-y, z),
    };
    compact_mean(k, end_value, a, b, quad).map_err(|e| Error::InnerAverage {
        z,
        y,
        source: Box::new(e),
    })
}

/// Mean value `Delta~_{+-y} k~(z)` of a profile.
pub fn delta_tilde(
    profile: &Profile,
    z: f64,
    y: f64,
    side: Side,
    cfg: &ResidualConfig,
) -> Result<f64> {
    delta_tilde_fn(
        &|w| profile.eval_unchecked(w),
        profile.end_value(),
        z,
        y,
        side,
        &cfg.inner_quad,
    )
}

/// Values of `k~`, `P = k~' cos^2` and their derivatives needed by the
/// divided differences.
#[derive(Debug, Clone, Copy)]
struct Local {
    k: [f64; 5],
    p: [f64; 4],
}

fn local(profile: &Profile, w: f64) -> Local {
    let k = profile.derivatives(w);
    let (s2, c2) = (2.0 * w).sin_cos();
    let cos2 = w.cos().powi(2);
    // P = k' cos^2 w; derivatives of cos^2 w are -sin 2w, -2 cos 2w, 4 sin 2w.
    let p = [
        k[1] * cos2,
        k[2] * cos2 - k[1] * s2,
        k[3] * cos2 - 2.0 * k[2] * s2 - 2.0 * k[1] * c2,
        k[4] * cos2 - 3.0 * k[3] * s2 - 6.0 * k[2] * c2 + 4.0 * k[1] * s2,
    ];
    Local { k, p }
}

/// Midpoint expansion of `(F(b) - F(a)) / (b - a)` from `F'` and `F'''`.
fn taylor_dd(d1: f64, d3: f64, gap: f64, order: usize) -> f64 {
    if order >= 2 {
        d1 + d3 * gap * gap / 24.0
    } else {
        d1
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Per-profile precomputation shared by all collocation points.
struct Context<'a> {
    profile: &'a Profile,
    cfg: &'a ResidualConfig,
    end_value: f64,
    ys: Vec<f64>,
    weights: Vec<f64>,
    cos_y: Vec<f64>,
    sin_y: Vec<f64>,
    k_y: Vec<f64>,
    p_y: Vec<f64>,
    /// `int_0^{y_j} sec^2 (k - end_value)`; undefined at the last node.
    primitive: Vec<f64>,
    spacing: f64,
}

impl<'a> Context<'a> {
    fn new(profile: &'a Profile, cfg: &'a ResidualConfig) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.outer_nodes_for(profile.grid().len());
        let spacing = FRAC_PI_2 / (m - 1) as f64;
        let ys: Vec<f64> = (0..m)
            .map(|j| {
                if j == m - 1 {
                    FRAC_PI_2
                } else {
                    spacing * j as f64
                }
            })
            .collect();
        let weights = trapezoid_weights(FRAC_PI_2, m);
        let mut cos_y = Vec::with_capacity(m);
        let mut sin_y = Vec::with_capacity(m);
        let mut k_y = Vec::with_capacity(m);
        let mut p_y = Vec::with_capacity(m);
        for &y in &ys {
            let (s, c) = y.sin_cos();
            let c = if y == FRAC_PI_2 { 0.0 } else { c };
            let d = profile.derivatives(y);
            sin_y.push(s);
            cos_y.push(c);
            k_y.push(d[0]);
            p_y.push(d[1] * c * c);
        }
        let end_value = profile.end_value();
        let panels: Vec<f64> = (0..m.saturating_sub(2))
            .into_par_iter()
            .map(|j| Self::panel(profile, end_value, ys[j], ys[j + 1], &cfg.inner_quad))
            .collect::<Result<_>>()?;
        let mut primitive = Vec::with_capacity(m);
        primitive.push(0.0);
        for p in panels {
            let last = *primitive.last().expect("non-empty");
            primitive.push(last + p);
        }
        primitive.push(f64::NAN);
        Ok(Self {
            profile,
            cfg,
            end_value,
            ys,
            weights,
            cos_y,
            sin_y,
            k_y,
            p_y,
            primitive,
            spacing,
        })
    }

    fn panel(profile: &Profile, end_value: f64, a: f64, b: f64, quad: &QuadConfig) -> Result<f64> {
        gk15_adaptive(
            |w| {
                let c = w.cos();
                (profile.eval_unchecked(w) - end_value) / (c * c)
            },
            a,
            b,
            quad,
        )
        .map(|r| r.value)
        .map_err(|e| Error::InnerAverage {
            z: a,
            y: b,
            source: Box::new(e),
        })
    }

    /// `int_a^b sec^2 (k - end_value)` by direct quadrature.
    fn direct(&self, a: f64, b: f64) -> Result<f64> {
        if a <= b {
            Self::panel(self.profile, self.end_value, a, b, &self.cfg.inner_quad)
        } else {
            Self::panel(self.profile, self.end_value, b, a, &self.cfg.inner_quad).map(|v| -v)
        }
    }

    fn primitive_at(&self, z: f64) -> Result<f64> {
        let m = self.ys.len();
        let j = ((z / self.spacing).floor() as usize).min(m.saturating_sub(2));
        Ok(self.primitive[j] + self.direct(self.ys[j], z)?)
    }

    fn residual_at(&self, z: f64) -> Result<f64> {
        if !(0.0..=FRAC_PI_2).contains(&z) {
            return Err(Error::OutOfDomain(z));
        }
        if z == FRAC_PI_2 {
            let s = self.end_value;
            let slope = self.profile.derivatives(FRAC_PI_2)[1];
            return Ok(slope - 2.0 * FRAC_1_PI * s / (1.0 + s * s));
        }
        let order = self.cfg.series_order;
        let window = self.cfg.split_halfwidth_z * self.spacing;
        let end_start = FRAC_PI_2 - self.cfg.split_halfwidth_end;
        let (sz, cz) = z.sin_cos();
        let lz = local(self.profile, z);
        let (kz, pz) = (lz.k[0], lz.p[0]);
        let prim_z = self.primitive_at(z)?;
        let s_end = self.end_value;

        let mut integral = 0.0;
        for (j, &y) in self.ys.iter().enumerate() {
            let (sy, cy) = (self.sin_y[j], self.cos_y[j]);
            let (ky, py) = (self.k_y[j], self.p_y[j]);
            let dm = z - y;
            let dp = z + y;

            // Divided differences of the odd k~ and the even P between z and +-y.
            let (ddk_m, ddp_m) = if dm.abs() <= window {
                let l = local(self.profile, 0.5 * (z + y));
                (
                    taylor_dd(l.k[1], l.k[3], dm, order),
                    taylor_dd(l.p[1], l.p[3], dm, order),
                )
            } else {
                ((kz - ky) / dm, (pz - py) / dm)
            };
            let (ddk_p, ddp_p) = if dp <= window {
                let l = local(self.profile, 0.5 * (z - y));
                (
                    taylor_dd(l.k[1], l.k[3], dp, order),
                    taylor_dd(l.p[1], l.p[3], dp, order),
                )
            } else {
                ((kz + ky) / dp, (pz - py) / dp)
            };
            let (sinc_m, sinc_p) = (sinc(dm), sinc(dp));
            let sin_p = dp.sin();
            let sin_m = if dm.abs() <= window {
                dm.sin()
            } else {
                sz * cy - cz * sy
            };

            // Mean of k over [tan z, tan y] and over [-tan y, tan z].
            let d_plus = if y == FRAC_PI_2 {
                s_end
            } else if dm.abs() < COINCIDENT {
                self.profile.eval_unchecked(0.5 * (z + y))
            } else {
                let g = if dm.abs() <= window {
                    self.direct(z, y)?
                } else {
                    self.primitive[j] - prim_z
                };
                s_end - g * cy * cz / sin_m
            };
            let d_minus = if dp < COINCIDENT {
                0.5 * lz.k[1] * (z - y)
            } else {
                -d_plus * (y - z).sin() / sin_p
            };
            let a = 1.0 / (1.0 + d_plus * d_plus);
            let b = 1.0 / (1.0 + d_minus * d_minus);

            let q_m = ddp_m / sinc_m;
            let q_p = ddp_p / sinc_p;
            let t24 = if y >= end_start || cy == 0.0 {
                // (D-^2 - D+^2) / cos y, finite at y = pi/2.
                let e = -4.0 * d_plus * d_plus * sy * sz * cz / (sin_p * sin_p);
                FRAC_1_PI * cz * ((a + b) * sz + a * b * e * cz * sy) * q_m / sin_p
            } else {
                FRAC_1_PI * cz / cy * (a * q_m + b * q_p)
            };
            let r_m = ddk_m / sinc_m;
            let r_p = ddk_p / sinc_p;
            let t35 = -2.0
                * FRAC_1_PI
                * cz
                * cz
                * (r_m * r_m * d_plus * a * a + r_p * r_p * d_minus * b * b);

            let f = t24 + t35;
            if !f.is_finite() {
                return Err(Error::NonFiniteIntegrand { z, y });
            }
            integral += self.weights[j] * f;
        }
        Ok(sz * cz * lz.k[1] + integral)
    }
}

/// Residual of the compactified equation at one point `z` in `[0, pi/2]`.
pub fn residual_at(profile: &Profile, z: f64, cfg: &ResidualConfig) -> Result<f64> {
    Context::new(profile, cfg)?.residual_at(z)
}

/// Residuals at several points sharing one precomputation.
pub fn residuals_at(profile: &Profile, zs: &[f64], cfg: &ResidualConfig) -> Result<Vec<f64>> {
    let ctx = Context::new(profile, cfg)?;
    zs.par_iter().map(|&z| ctx.residual_at(z)).collect()
}

/// Collocated residuals at `z_1..z_{N-1}` and the boundary rows.
pub fn residual_vector(profile: &Profile, cfg: &ResidualConfig) -> Result<ResidualVector> {
    let grid = profile.grid();
    let n = grid.len();
    let last = if cfg.include_endpoint { n } else { n - 1 };
    let zs: Vec<f64> = (1..last).map(|i| grid.node(i)).collect();
    let interior = residuals_at(profile, &zs, cfg)?;
    Ok(ResidualVector {
        interior,
        bc0: profile.values()[0],
        bc_end: profile.end_value() - profile.s().get(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::SlopeParam;
    use crate::spline::{fit_spline, make_grid};
    use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, LN_2};

    fn sp(s: f64) -> SlopeParam {
        SlopeParam::new(s).unwrap()
    }

    fn quad() -> QuadConfig {
        QuadConfig::default()
    }

    // k(u) = u / (1 + u^2), i.e. k~(w) = sin w cos w; its mean over
    // [p, q] is ln((1+q^2)/(1+p^2)) / (2 (q - p)).
    fn sc(w: f64) -> f64 {
        w.sin() * w.cos()
    }
    fn sc_mean(p: f64, q: f64) -> f64 {
        ((1.0 + q * q).ln() - (1.0 + p * p).ln()) / (2.0 * (q - p))
    }

    #[test]
    fn delta_tilde_closed_form() {
        let v = delta_tilde_fn(&sc, 0.0, 0.0, FRAC_PI_4, Side::Plus, &quad()).unwrap();
        assert!((v - LN_2 / 2.0).abs() < 1e-8);
        for (z, y) in [(0.3, 1.1), (1.2, 0.4), (0.05, 1.5)] {
            let v = delta_tilde_fn(&sc, 0.0, z, y, Side::Plus, &quad()).unwrap();
            assert!((v - sc_mean(z.tan(), y.tan())).abs() < 1e-10);
            let v = delta_tilde_fn(&sc, 0.0, z, y, Side::Minus, &quad()).unwrap();
            assert!((v - sc_mean(-y.tan(), z.tan())).abs() < 1e-10);
        }
    }

    #[test]
    fn delta_tilde_limits() {
        let z = 0.7;
        let v = delta_tilde_fn(&sc, 0.0, z, z + 5e-9, Side::Plus, &quad()).unwrap();
        assert!((v - sc(z)).abs() < 1e-8);
        let y = FRAC_PI_2 - 1e-6;
        let v = delta_tilde_fn(&sc, 0.0, z, y, Side::Plus, &quad()).unwrap();
        assert!((v - sc_mean(z.tan(), y.tan())).abs() < 1e-12);
        assert!(v.abs() < 2e-5);
        let v = delta_tilde_fn(&sc, 0.0, z, FRAC_PI_2, Side::Plus, &quad()).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn delta_tilde_symmetry() {
        let k = |w: f64| 0.4 * w + 0.2 * (2.0 * w).sin();
        let s_end = k(FRAC_PI_2);
        for (z, y) in [(0.3, 1.0), (1.1, 0.2), (0.6, 1.45)] {
            let m = delta_tilde_fn(&k, s_end, z, y, Side::Minus, &quad()).unwrap();
            let p = delta_tilde_fn(&k, s_end, -z, y, Side::Plus, &quad()).unwrap();
            assert!((m + p).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_profile_has_zero_residual() {
        let g = make_grid(33).unwrap();
        let p = fit_spline(&g, &vec![0.0; 33], sp(0.0)).unwrap();
        let r = residual_vector(&p, &ResidualConfig::default()).unwrap();
        assert_eq!(r.len(), 34);
        assert!(r.max_abs() < 1e-10);
    }

    #[test]
    fn origin_cancels_for_odd_profiles() {
        let g = make_grid(33).unwrap();
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&z| 0.3 * z + 0.1 * (2.0 * z).sin())
            .collect();
        let s = vals[32];
        let p = fit_spline(&g, &vals, sp(s)).unwrap();
        let r = residual_at(&p, 0.0, &ResidualConfig::default()).unwrap();
        assert!(r.abs() < 1e-10, "{r}");
    }

    #[test]
    fn boundary_rows() {
        let g = make_grid(17).unwrap();
        let p = Profile::linear(&g, sp(0.2)).unwrap();
        let r = residual_vector(&p, &ResidualConfig::default()).unwrap();
        assert_eq!(r.bc0, 0.0);
        assert_eq!(r.bc_end, 0.0);
        // Slope 2s/pi at infinity against the required 2s/(pi (1 + s^2)).
        let far = FRAC_2_PI * 0.2 * (1.0 - 1.0 / 1.04);
        assert!((r.interior.last().unwrap() - far).abs() < 1e-12);
        let cfg = ResidualConfig {
            include_endpoint: false,
            ..ResidualConfig::default()
        };
        assert_eq!(residual_vector(&p, &cfg).unwrap().interior.len(), 15);
    }

    #[test]
    fn far_field_row_is_scaled_limit() {
        let g = make_grid(129).unwrap();
        let s = sp(0.1);
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&z| crate::analytic::linear_profile_compact(s, z))
            .collect();
        let p = fit_spline(&g, &vals, s).unwrap();
        let cfg = ResidualConfig::default();
        let far = residual_at(&p, FRAC_PI_2, &cfg).unwrap();
        let exact = FRAC_2_PI * 0.1 * (1.0 / (1.0 + 0.01 / 3.0) - 1.0 / 1.01);
        assert!((far - exact).abs() < 1e-7 * exact, "{far} vs {exact}");
        for z in [1.5, 1.55] {
            let r = residual_at(&p, z, &cfg).unwrap() / z.cos();
            assert!((r - exact).abs() < 0.03 * exact, "z = {z}: {r} vs {exact}");
        }
    }

    #[test]
    fn linear_ansatz_residual_is_cubic() {
        let g = make_grid(65).unwrap();
        let cfg = ResidualConfig::default();
        let maxres = |s: f64| {
            let p = Profile::linear(&g, sp(s)).unwrap();
            residual_vector(&p, &cfg).unwrap().max_interior()
        };
        let (r1, r2) = (maxres(0.1), maxres(0.2));
        let order = (r2 / r1).ln() / 2f64.ln();
        assert!((order - 3.0).abs() < 0.3, "order {order}, {r1} {r2}");
    }

    #[test]
    fn seam_consistency() {
        let g = make_grid(33).unwrap();
        let vals: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&z| FRAC_2_PI * 0.3 * z + 0.01 * (2.0 * z).sin())
            .collect();
        let p = fit_spline(&g, &vals, sp(vals[32])).unwrap();
        let base = ResidualConfig::default();
        let narrow = ResidualConfig {
            split_halfwidth_z: 1.0,
            ..base
        };
        let wide_end = ResidualConfig {
            split_halfwidth_end: 0.3,
            ..base
        };
        for z in [0.013, 0.4, 0.91, 1.3, 1.55] {
            let r0 = residual_at(&p, z, &base).unwrap();
            assert!((r0 - residual_at(&p, z, &narrow).unwrap()).abs() < 1e-7);
            assert!((r0 - residual_at(&p, z, &wide_end).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_config() {
        let g = make_grid(9).unwrap();
        let p = Profile::linear(&g, sp(0.1)).unwrap();
        let cfg = ResidualConfig {
            series_order: 3,
            ..ResidualConfig::default()
        };
        assert!(residual_at(&p, 0.2, &cfg).is_err());
        assert!(residual_at(&p, 2.0, &ResidualConfig::default()).is_err());
    }
}
