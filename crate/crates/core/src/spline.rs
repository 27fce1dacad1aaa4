//! Uniform grids in the compactified variable `z = arctan y` and the
//! degree-4 interpolating spline used to evaluate profiles and their
//! derivatives between nodes.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::analytic::SlopeParam;
use crate::error::{Error, Result};

/// Slack allowed when checking that an evaluation point lies in the domain.
const DOMAIN_SLACK: f64 = 1e-12;

/// Uniform nodes `z_i = pi i / (2 (N - 1))` on `[0, pi/2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 nodes, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        FRAC_PI_2 / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        assert!(i < self.n);
        if i == self.n - 1 {
            FRAC_PI_2
        } else {
            std::f64::consts::PI * i as f64 / (2 * (self.n - 1)) as f64
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.node(i)).collect()
    }
}

/// Builds the grid with `n` nodes.
pub fn make_grid(n: usize) -> Result<Grid> {
    Grid::new(n)
}

/// Piecewise quartic with `C^3` joins; piece `i` is stored as Taylor
/// coefficients about `knots[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticSpline {
    knots: Vec<f64>,
    coeffs: Vec<[f64; 5]>,
    uniform: bool,
}

/// Interior knots whose fourth-derivative jump is forced to zero.
fn closure_knots(n: usize) -> Vec<usize> {
    if n >= 6 {
        vec![1, (n - 1) / 2, n - 2]
    } else {
        (1..n.saturating_sub(1)).collect()
    }
}

fn falling(e: usize, d: usize) -> f64 {
    ((e - d + 1)..=e).map(|v| v as f64).product()
}

/// Interpolation system whose solution, applied to a data vector, yields
/// the stacked piece coefficients.
///
/// Closure: with six or more knots the fourth derivative is continuous at
/// the second, middle and next-to-last knots (not-a-knot style; symmetric
/// knot sets therefore give symmetric closures). Fewer knots reduce to the
/// interpolating polynomial of degree `n - 1`.
fn system_matrix(knots: &[f64]) -> DMatrix<f64> {
    let n = knots.len();
    let m = 5 * (n - 1);
    let mut a = DMatrix::<f64>::zeros(m, m);
    let mut row = 0;
    for i in 0..n - 1 {
        let h = knots[i + 1] - knots[i];
        a[(row, 5 * i)] = 1.0;
        row += 1;
        for d in 0..5 {
            a[(row, 5 * i + d)] = h.powi(d as i32);
        }
        row += 1;
    }
    for k in 1..n - 1 {
        let h = knots[k] - knots[k - 1];
        for d in 1..4 {
            for e in d..5 {
                a[(row, 5 * (k - 1) + e)] = falling(e, d) * h.powi((e - d) as i32);
            }
            a[(row, 5 * k + d)] = -falling(d, d);
            row += 1;
        }
    }
    for k in closure_knots(n) {
        a[(row, 5 * (k - 1) + 4)] = 1.0;
        a[(row, 5 * k + 4)] = -1.0;
        row += 1;
    }
    // Degree caps for short knot sets.
    for d in n.max(2)..5 {
        a[(row, d)] = 1.0;
        row += 1;
    }
    debug_assert_eq!(row, m);
    a
}

fn rhs_positions(n: usize) -> Vec<(usize, usize)> {
    // (row, data index) pairs for the interpolation rows.
    (0..n - 1)
        .flat_map(|i| [(2 * i, i), (2 * i + 1, i + 1)])
        .collect()
}

/// Dense map `values -> stacked coefficients` for a knot set.
fn coefficient_map(knots: &[f64]) -> Result<DMatrix<f64>> {
    let n = knots.len();
    let m = 5 * (n - 1);
    let lu = system_matrix(knots).lu();
    let mut rhs = DMatrix::<f64>::zeros(m, n);
    for (row, j) in rhs_positions(n) {
        rhs[(row, j)] = 1.0;
    }
    let sol = lu.solve(&rhs).ok_or(Error::SingularSpline(n))?;
    if sol.iter().any(|v| !v.is_finite()) {
        return Err(Error::SingularSpline(n));
    }
    Ok(sol)
}

fn is_uniform(knots: &[f64]) -> bool {
    let h = (knots[knots.len() - 1] - knots[0]) / (knots.len() - 1) as f64;
    knots
        .windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() <= 1e-12 * h.abs().max(1.0))
}

impl QuarticSpline {
    /// Interpolates `values` at strictly increasing `knots`.
    pub fn interpolate(knots: &[f64], values: &[f64]) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "need matching knots/values with at least 2 entries ({} vs {})",
                knots.len(),
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "knots must increase strictly".into(),
            ));
        }
        let map = coefficient_map(knots)?;
        let flat = &map * DVector::from_column_slice(values);
        Ok(Self::from_flat(knots.to_vec(), flat.as_slice()))
    }

    fn from_flat(knots: Vec<f64>, flat: &[f64]) -> Self {
        let coeffs = flat
            .chunks_exact(5)
            .map(|c| [c[0], c[1], c[2], c[3], c[4]])
            .collect();
        let uniform = is_uniform(&knots);
        Self {
            knots,
            coeffs,
            uniform,
        }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    fn piece(&self, x: f64) -> usize {
        let last = self.coeffs.len() - 1;
        if self.uniform {
            let a = self.knots[0];
            let h = (self.knots[last + 1] - a) / (last + 1) as f64;
            (((x - a) / h).floor().max(0.0) as usize).min(last)
        } else {
            match self.knots.partition_point(|&k| k <= x) {
                0 => 0,
                p => (p - 1).min(last),
            }
        }
    }

    /// Value and derivatives of orders 0..=4 at `x` (no domain check;
    /// outside the knots the end pieces are extrapolated).
    pub fn derivatives(&self, x: f64) -> [f64; 5] {
        let i = self.piece(x);
        let c = &self.coeffs[i];
        let u = x - self.knots[i];
        [
            c[0] + u * (c[1] + u * (c[2] + u * (c[3] + u * c[4]))),
            c[1] + u * (2.0 * c[2] + u * (3.0 * c[3] + u * 4.0 * c[4])),
            2.0 * c[2] + u * (6.0 * c[3] + u * 12.0 * c[4]),
            6.0 * c[3] + u * 24.0 * c[4],
            24.0 * c[4],
        ]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivatives(x)[0]
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.derivatives(x)[1]
    }
}

/// Coefficient map from the `N` half-grid values to the pieces on
/// `[0, pi/2]` of the spline fitted on the odd-extended node set.
#[derive(Debug)]
struct OddSplineMap {
    map: DMatrix<f64>,
}

impl OddSplineMap {
    fn build(grid: &Grid) -> Result<Self> {
        let n = grid.len();
        let half = grid.nodes();
        let mut knots: Vec<f64> = half[1..].iter().rev().map(|z| -z).collect();
        knots.extend_from_slice(&half);
        let full = coefficient_map(&knots)?;
        // Column j of the odd data basis is e_{n-1+j} - e_{n-1-j}.
        let rows = 5 * (n - 1);
        let offset = 5 * (n - 1);
        let mut map = DMatrix::<f64>::zeros(rows, n);
        for j in 0..n {
            for r in 0..rows {
                let mut v = full[(offset + r, n - 1 + j)];
                if j > 0 {
                    v -= full[(offset + r, n - 1 - j)];
                }
                map[(r, j)] = v;
            }
        }
        Ok(Self { map })
    }

    fn cached(grid: &Grid) -> Result<Arc<Self>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<OddSplineMap>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(m) = cache
            .lock()
            .expect("spline cache poisoned")
            .get(&grid.len())
        {
            return Ok(Arc::clone(m));
        }
        let built = Arc::new(Self::build(grid)?);
        cache
            .lock()
            .expect("spline cache poisoned")
            .entry(grid.len())
            .or_insert_with(|| Arc::clone(&built));
        Ok(built)
    }
}

/// Nodal values of an odd profile `k~` on a [`Grid`] together with its
/// spline interpolant.
#[derive(Debug, Clone)]
pub struct Profile {
    grid: Grid,
    values: Vec<f64>,
    s: SlopeParam,
    spline: QuarticSpline,
}

/// Fits the odd degree-4 spline through `values` (with `values[0] = 0`).
pub fn fit_spline(grid: &Grid, values: &[f64], s: SlopeParam) -> Result<Profile> {
    Profile::new(grid.clone(), values.to_vec(), s)
}

impl Profile {
    pub fn new(grid: Grid, values: Vec<f64>, s: SlopeParam) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "odd profile must vanish at z = 0, got {}",
                values[0]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite nodal value".into()));
        }
        let map = OddSplineMap::cached(&grid)?;
        let flat = &map.map * DVector::from_column_slice(&values);
        let spline = QuarticSpline::from_flat(grid.nodes(), flat.as_slice());
        Ok(Self {
            grid,
            values,
            s,
            spline,
        })
    }

    /// The straight line `(2/pi) s z`, i.e. `L_0`-type initial guess.
    pub fn linear(grid: &Grid, s: SlopeParam) -> Result<Self> {
        let values = grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, z)| {
                if i + 1 == grid.len() {
                    s.get()
                } else {
                    std::f64::consts::FRAC_2_PI * s.get() * z
                }
            })
            .collect();
        Self::new(grid.clone(), values, s)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn s(&self) -> SlopeParam {
        self.s
    }

    /// Value at `z = pi/2`.
    pub fn end_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    fn check(z: f64) -> Result<()> {
        if z.is_finite() && z.abs() <= FRAC_PI_2 + DOMAIN_SLACK {
            Ok(())
        } else {
            Err(Error::OutOfDomain(z))
        }
    }

    /// Value and derivatives of orders 0..=4 of the odd extension.
    pub fn derivatives(&self, z: f64) -> [f64; 5] {
        let mut d = self.spline.derivatives(z.abs());
        if z < 0.0 {
            // Odd function: even-order derivatives flip sign.
            d[0] = -d[0];
            d[2] = -d[2];
            d[4] = -d[4];
        }
        d
    }

    pub fn eval(&self, z: f64) -> Result<f64> {
        Self::check(z)?;
        Ok(self.derivatives(z)[0])
    }

    pub fn eval_deriv(&self, z: f64) -> Result<f64> {
        Self::check(z)?;
        Ok(self.derivatives(z)[1])
    }

    pub(crate) fn eval_unchecked(&self, z: f64) -> f64 {
        self.derivatives(z)[0]
    }
}
