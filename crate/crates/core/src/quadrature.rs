//! Composite trapezoid rule on uniform nodes and adaptive 15-point
//! Gauss-Kronrod integration (with the embedded 7-point Gauss rule used for
//! the per-panel error estimate).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Abscissae of the 15-point Kronrod rule on [-1, 1]; odd indices are the
/// nodes of the embedded 7-point Gauss rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Sum of the per-panel |K15 - G7| differences.
    pub error_estimate: f64,
    pub subdivisions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 200,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidArgument(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Composite trapezoid rule with `nodes` equally spaced samples including
/// both endpoints.
pub fn trapezoid<F>(f: F, a: f64, b: f64, nodes: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if nodes < 2 {
        return Err(Error::InvalidArgument(format!(
            "trapezoid needs at least 2 nodes, got {nodes}"
        )));
    }
    if !(a <= b) {
        return Err(Error::InvalidArgument(format!(
            "trapezoid interval [{a}, {b}] is reversed"
        )));
    }
    let h = (b - a) / (nodes - 1) as f64;
    let mut sum = 0.0;
    for i in 0..nodes {
        let x = if i == nodes - 1 { b } else { a + h * i as f64 };
        let v = f(x);
        if !v.is_finite() {
            return Err(Error::NonFiniteSample {
                index: i,
                x,
                value: v,
            });
        }
        let w = if i == 0 || i == nodes - 1 { 0.5 } else { 1.0 };
        sum += w * v;
    }
    Ok(sum * h)
}

/// Trapezoid weights for `nodes` uniform samples on an interval of length
/// `len`.
pub fn trapezoid_weights(len: f64, nodes: usize) -> Vec<f64> {
    assert!(nodes >= 2);
    let h = len / (nodes - 1) as f64;
    let mut w = vec![h; nodes];
    w[0] = 0.5 * h;
    w[nodes - 1] = 0.5 * h;
    w
}

/// Single application of the Kronrod rule: returns (K15, |K15 - G7|).
pub fn gk15<F>(f: &F, a: f64, b: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn sum_panels(panels: &mut [Panel]) -> (f64, f64) {
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    panels
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
}

/// Adaptive Gauss-Kronrod integration by repeated bisection of the panel
/// with the largest error estimate.
pub fn gk15_adaptive<F>(f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    cfg.validate()?;
    if !(a <= b) {
        return Err(Error::InvalidArgument(format!(
            "integration interval [{a}, {b}] is reversed"
        )));
    }
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions: 1,
        });
    }

    let (value, error) = gk15(&f, a, b);
    if !value.is_finite() {
        return Err(Error::NonFiniteSample {
            index: 0,
            x: 0.5 * (a + b),
            value,
        });
    }
    let mut heap = BinaryHeap::new();
    heap.push(Panel { a, b, value, error });
    let mut total = value;
    let mut total_err = error;

    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        if heap.len() >= cfg.max_subdivisions {
            let mut panels = heap.into_vec();
            let (value, error_bound) = sum_panels(&mut panels);
            return Err(Error::QuadratureDiverged {
                a,
                b,
                max_subdivisions: cfg.max_subdivisions,
                value,
                error_bound,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            total_err -= worst.error;
            continue;
        }
        let (lv, le) = gk15(&f, worst.a, mid);
        let (rv, re) = gk15(&f, mid, worst.b);
        if !(lv.is_finite() && rv.is_finite()) {
            return Err(Error::NonFiniteSample {
                index: heap.len(),
                x: mid,
                value: if lv.is_finite() { rv } else { lv },
            });
        }
        total += lv + rv - worst.value;
        total_err += le + re - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: lv,
            error: le,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: rv,
            error: re,
        });
    }

    let subdivisions = heap.len();
    let mut panels = heap.into_vec();
    let (value, error_estimate) = sum_panels(&mut panels);
    Ok(QuadResult {
        value,
        error_estimate,
        subdivisions,
    })
}
