//! Distances between computed profiles and the arctan references, and the
//! tables behind the published figures.
//!
//! The `H^1(R)` norm of an odd `f` is evaluated in the compactified
//! variable:
//!
//! ```text
//! ||f||^2 = 2 int_0^{pi/2} ( f~(z)^2 sec^2 z + f~'(z)^2 cos^2 z ) dz
//! ```
//!
//! The integral stops `END_GAP` short of `pi/2`; on the omitted sliver
//! `f~(z) ~ f~'(pi/2) (z - pi/2)`, which contributes
//! `END_GAP f~'(pi/2)^2` to the half-line integral.

use std::f64::consts::{FRAC_2_PI, FRAC_PI_2};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::analytic::{linear_profile_compact, linear_profile_compact_deriv, SlopeParam};
use crate::continuation::Branch;
use crate::error::{Error, Result};
use crate::quadrature::{gk15_adaptive, QuadConfig};
use crate::spline::Profile;

const END_GAP: f64 = 1e-8;
/// Largest `|f~(pi/2)|` accepted as a decaying difference.
const DECAY_TOL: f64 = 1e-9;

fn quad() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_subdivisions: 200,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    /// `(2s/pi) arctan y`.
    TheoremArctan,
    /// `(2s/pi) arctan((1 + s^2/3) y)`.
    KappaArctan,
}

impl Reference {
    pub fn eval(self, s: SlopeParam, z: f64) -> f64 {
        match self {
            Self::TheoremArctan => FRAC_2_PI * s.get() * z,
            Self::KappaArctan => linear_profile_compact(s, z),
        }
    }

    pub fn deriv(self, s: SlopeParam, z: f64) -> f64 {
        match self {
            Self::TheoremArctan => FRAC_2_PI * s.get(),
            Self::KappaArctan => linear_profile_compact_deriv(s, z),
        }
    }
}

impl std::str::FromStr for Reference {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        match text {
            "theorem_arctan" | "theorem" => Ok(Self::TheoremArctan),
            "kappa_arctan" | "kappa" => Ok(Self::KappaArctan),
            other => Err(Error::InvalidArgument(format!(
                "unknown reference {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct H1Report {
    pub s: f64,
    pub h1_distance: f64,
    pub linf_distance: f64,
    pub reference: Reference,
}

/// `H^1(R)` norm of the odd function with compactified form `f` and
/// derivative `df`, integrating panel by panel between `breaks` (an
/// increasing partition of `[0, pi/2]`).
pub fn h1_norm<F, G>(f: F, df: G, breaks: &[f64]) -> Result<f64>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let end = f(FRAC_PI_2);
    if !(end.abs() <= DECAY_TOL) {
        return Err(Error::ReferenceMismatch(end));
    }
    let stop = FRAC_PI_2 - END_GAP;
    let integrand = |z: f64| {
        let c = z.cos();
        let v = f(z) / c;
        let d = df(z) * c;
        v * v + d * d
    };
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1].min(stop));
        if a < b {
            total += gk15_adaptive(integrand, a, b, &quad())?.value;
        }
    }
    let slope = df(FRAC_PI_2);
    total += END_GAP * slope * slope;
    Ok((2.0 * total).sqrt())
}

fn sample_max<F: Fn(f64) -> f64>(f: F, samples: usize) -> f64 {
    (0..=samples)
        .map(|i| f(FRAC_PI_2 * i as f64 / samples as f64).abs())
        .fold(0.0, f64::max)
}

/// Distance between a profile and the chosen reference with the same slope.
pub fn h1_distance(profile: &Profile, reference: Reference) -> Result<H1Report> {
    let s = profile.s();
    let f = |z: f64| profile.derivatives(z)[0] - reference.eval(s, z);
    let df = |z: f64| profile.derivatives(z)[1] - reference.deriv(s, z);
    let breaks = profile.grid().nodes();
    Ok(H1Report {
        s: s.get(),
        h1_distance: h1_norm(f, df, &breaks)?,
        linf_distance: sample_max(f, 16 * (breaks.len() - 1)),
        reference,
    })
}

/// `H^1` distance between two profiles on the same grid.
pub fn h1_between(a: &Profile, b: &Profile) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(Error::InvalidArgument(
            "profiles live on different grids".into(),
        ));
    }
    let f = |z: f64| a.derivatives(z)[0] - b.derivatives(z)[0];
    let df = |z: f64| a.derivatives(z)[1] - b.derivatives(z)[1];
    h1_norm(f, df, &a.grid().nodes())
}

/// `H^1` distance between `(k_{s+ds} - k_s)/ds` and `(2/pi) arctan y`.
pub fn ds_derivative_check(branch: &Branch, s: f64) -> Result<f64> {
    let lo = branch.step(s)?;
    let hi = branch.step(s + branch.ds)?;
    derivative_distance(&lo.profile, &hi.profile)
}

/// `H^1` distance between the difference quotient of two profiles in `s`
/// and `(2/pi) arctan y`.
pub fn derivative_distance(p: &Profile, q: &Profile) -> Result<f64> {
    let ds = q.s().get() - p.s().get();
    if !(ds > 0.0) || p.grid() != q.grid() {
        return Err(Error::InvalidArgument(
            "need two profiles on one grid with increasing slope".into(),
        ));
    }
    let f = |z: f64| (q.derivatives(z)[0] - p.derivatives(z)[0]) / ds - FRAC_2_PI * z;
    let df = |z: f64| (q.derivatives(z)[1] - p.derivatives(z)[1]) / ds - FRAC_2_PI;
    h1_norm(f, df, &p.grid().nodes())
}

/// Least-squares slope of `ln d` against `ln s`; `None` with fewer than two
/// usable points.
pub fn fit_order(s: &[f64], d: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = s
        .iter()
        .zip(d)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Figure {
    /// `k~(z) - (2/pi) s z` against `z`.
    Discrepancy,
    /// `k(y) / s` against `y`.
    Normalized,
    /// `int_0^y k` against `y`.
    Integrated,
}

impl Figure {
    pub fn default_slopes(self) -> &'static [f64] {
        match self {
            Self::Discrepancy => &[1.0, 2.0, 4.0, 7.0],
            Self::Normalized | Self::Integrated => &[0.1, 0.2, 0.4, 1.0, 2.0, 4.0, 7.0],
        }
    }

    pub fn default_range(self) -> (f64, f64) {
        match self {
            Self::Discrepancy => (0.0, FRAC_PI_2),
            Self::Normalized => (0.0, 10.0),
            Self::Integrated => (-50.0, 50.0),
        }
    }

    fn axis(self) -> &'static str {
        match self {
            Self::Discrepancy => "z",
            Self::Normalized | Self::Integrated => "y",
        }
    }
}

impl std::str::FromStr for Figure {
    type Err = Error;
    fn from_str(text: &str) -> Result<Self> {
        match text {
            "discrepancy" => Ok(Self::Discrepancy),
            "normalized" => Ok(Self::Normalized),
            "integrated" => Ok(Self::Integrated),
            other => Err(Error::InvalidArgument(format!("unknown figure {other:?}"))),
        }
    }
}

/// Sampled curves sharing one abscissa.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    /// Row-major: abscissa first, then one value per curve.
    pub rows: Vec<Vec<f64>>,
}

/// Rounds to 15 significant digits and prints without exponent.
fn fmt15(v: f64) -> String {
    let r: f64 = format!("{v:.14e}").parse().expect("formatted float parses");
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

fn slope_label(s: f64) -> String {
    let r: f64 = format!("{s:.11e}").parse().expect("formatted float parses");
    format!("s={r}")
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| fmt15(*v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }
}

/// `int_0^y k = int_0^{arctan y} k~(z) sec^2 z dz`, even in `y`.
pub fn integrated_profile(profile: &Profile, y: f64) -> Result<f64> {
    let top = y.abs().atan();
    let mut nodes: Vec<f64> = profile
        .grid()
        .nodes()
        .into_iter()
        .filter(|z| *z < top)
        .collect();
    nodes.push(top);
    let mut total = 0.0;
    for w in nodes.windows(2) {
        total += gk15_adaptive(
            |z: f64| {
                let c = z.cos();
                profile.derivatives(z)[0] / (c * c)
            },
            w[0],
            w[1],
            &quad(),
        )?
        .value;
    }
    Ok(total)
}

/// Tabulates one figure for the slopes `slopes` (each must be in the
/// branch) at `samples` equally spaced abscissae covering `range`.
pub fn figure_data(
    branch: &Branch,
    which: Figure,
    slopes: &[f64],
    range: (f64, f64),
    samples: usize,
) -> Result<Table> {
    if branch.is_empty() {
        return Err(Error::InvalidArgument("branch is empty".into()));
    }
    if samples < 2 || !(range.0 < range.1) {
        return Err(Error::InvalidArgument(format!(
            "need at least 2 samples on a proper range, got {samples} on {range:?}"
        )));
    }
    if which == Figure::Discrepancy && (range.0 < -FRAC_PI_2 || range.1 > FRAC_PI_2) {
        return Err(Error::OutOfDomain(range.0.min(-range.1)));
    }
    let profiles: Vec<&Profile> = slopes
        .iter()
        .map(|&s| branch.step(s).map(|st| &st.profile))
        .collect::<Result<_>>()?;
    let mut header = vec![which.axis().to_string()];
    header.extend(profiles.iter().map(|p| slope_label(p.s().get())));

    let step = (range.1 - range.0) / (samples - 1) as f64;
    let mut rows = Vec::with_capacity(samples);
    for i in 0..samples {
        let x = if i == samples - 1 {
            range.1
        } else {
            range.0 + step * i as f64
        };
        let mut row = vec![x];
        for p in &profiles {
            let s = p.s().get();
            row.push(match which {
                Figure::Discrepancy => p.eval(x)? - FRAC_2_PI * s * x,
                Figure::Normalized => p.eval(x.atan())? / s,
                Figure::Integrated => integrated_profile(p, x)?,
            });
        }
        rows.push(row);
    }
    Ok(Table { header, rows })
}
