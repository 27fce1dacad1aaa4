//! Continuation in the asymptotic slope `s`.
//!
//! Step `m` solves for `s_m = m ds` from the guess
//! `previous + ds (2/pi) z`, whose value at `pi/2` is exactly `s_m`. The
//! unknowns are the nodal values strictly between the two boundary nodes,
//! so `k~(0) = 0` and `k~(pi/2) = s` hold by construction. The far-field
//! row makes the system overdetermined by one; it is solved in the
//! least-squares sense.

use std::f64::consts::FRAC_2_PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::SlopeParam;
use crate::error::{Error, Result};
use crate::lm::{lm_solve, LMConfig, SolverReport};
use crate::residual::{residual_vector, ResidualConfig};
use crate::spline::{make_grid, Grid, Profile};

/// Largest slope increment used when a single slope is requested.
pub const MAX_SOLVE_INCREMENT: f64 = 0.1;

/// Solver settings shared by every step of a branch.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverSettings {
    pub lm: LMConfig,
    pub residual: ResidualConfig,
}

/// Solves the collocated equations at slope `s` starting from `guess`.
///
/// The first and last entries of `guess` are replaced by `0` and `s`.
pub fn solve_profile(
    grid: &Grid,
    s: SlopeParam,
    guess: &[f64],
    settings: &SolverSettings,
) -> Result<(Profile, SolverReport)> {
    let n = grid.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "solving needs at least 3 grid nodes, got {n}"
        )));
    }
    if guess.len() != n {
        return Err(Error::InvalidArgument(format!(
            "guess has {} values for a grid of {n}",
            guess.len()
        )));
    }
    settings.residual.validate()?;
    let assemble = |x: &[f64]| {
        let mut v = Vec::with_capacity(n);
        v.push(0.0);
        v.extend_from_slice(x);
        v.push(s.get());
        v
    };
    let residual = |x: &[f64]| -> Result<Vec<f64>> {
        let profile = Profile::new(grid.clone(), assemble(x), s)?;
        Ok(residual_vector(&profile, &settings.residual)?.to_vec())
    };
    let report = lm_solve(residual, &guess[1..n - 1], &settings.lm)?;
    let profile = Profile::new(grid.clone(), assemble(&report.solution), s)?;
    Ok((profile, report))
}

fn advance(previous: &[f64], grid: &Grid, ds: f64, s_next: f64) -> Vec<f64> {
    let n = previous.len();
    previous
        .iter()
        .enumerate()
        .map(|(i, v)| match i {
            0 => 0.0,
            _ if i == n - 1 => s_next,
            _ => v + ds * FRAC_2_PI * grid.node(i),
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct BranchStep {
    pub s: f64,
    pub profile: Profile,
    pub report: SolverReport,
    /// Reached through two half steps after the full step failed.
    pub halved: bool,
}

/// Step at which the branch stopped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFailure {
    pub s: f64,
    pub message: String,
    pub report: Option<SolverReport>,
}

#[derive(Debug, Clone)]
pub struct Branch {
    pub grid: Grid,
    pub ds: f64,
    pub settings: SolverSettings,
    pub steps: Vec<BranchStep>,
    pub failure: Option<StepFailure>,
}

enum Attempt {
    Solved(Profile, SolverReport),
    Failed(String, Option<SolverReport>),
}

fn attempt(grid: &Grid, s: f64, guess: &[f64], settings: &SolverSettings) -> Result<Attempt> {
    let sp = SlopeParam::new(s)?;
    Ok(match solve_profile(grid, sp, guess, settings) {
        Ok((p, r)) if r.converged => Attempt::Solved(p, r),
        Ok((_, r)) => Attempt::Failed(
            format!(
                "LM stopped ({:?}) after {} iterations with max residual {:.3e}",
                r.termination, r.iterations, r.residual_norm
            ),
            Some(r),
        ),
        Err(e) => Attempt::Failed(e.to_string(), None),
    })
}

/// `m ds` rounded to 12 significant digits, so `3 x 0.1` is stored as `0.3`.
fn slope_at(m: usize, ds: f64) -> f64 {
    format!("{:.11e}", m as f64 * ds)
        .parse()
        .expect("formatted float parses")
}

/// Number of `ds` increments that reach `s_max`, if it is a multiple.
pub fn step_count(s_max: f64, ds: f64) -> Result<usize> {
    if !(s_max > 0.0 && ds > 0.0 && s_max.is_finite() && ds.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "need s_max > 0 and ds > 0, got s_max = {s_max}, ds = {ds}"
        )));
    }
    let m = (s_max / ds).round();
    if m < 1.0 || (m * ds - s_max).abs() > 1e-9 * s_max.max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "s_max = {s_max} is not a multiple of ds = {ds}"
        )));
    }
    Ok(m as usize)
}

/// Marches from `s = 0` to `s_max` in increments of `ds`.
pub fn continue_branch(s_max: f64, ds: f64, n: usize, settings: &SolverSettings) -> Result<Branch> {
    continue_branch_with(s_max, ds, n, settings, |_| {})
}

/// As [`continue_branch`], calling `on_step` after every stored step.
pub fn continue_branch_with<F>(
    s_max: f64,
    ds: f64,
    n: usize,
    settings: &SolverSettings,
    mut on_step: F,
) -> Result<Branch>
where
    F: FnMut(&BranchStep),
{
    let steps_total = step_count(s_max, ds)?;
    settings.lm.validate()?;
    settings.residual.validate()?;
    let grid = make_grid(n)?;
    let mut branch = Branch {
        grid: grid.clone(),
        ds,
        settings: *settings,
        steps: Vec::with_capacity(steps_total),
        failure: None,
    };
    let mut previous = vec![0.0; n];
    for m in 1..=steps_total {
        let s_prev = slope_at(m - 1, ds);
        let s = slope_at(m, ds);
        let guess = advance(&previous, &grid, ds, s);
        let (profile, report, halved) = match attempt(&grid, s, &guess, settings)? {
            Attempt::Solved(p, r) => (p, r, false),
            Attempt::Failed(first, _) => {
                let s_half = s_prev + 0.5 * ds;
                let half_guess = advance(&previous, &grid, 0.5 * ds, s_half);
                let second = match attempt(&grid, s_half, &half_guess, settings)? {
                    Attempt::Solved(p, _) => {
                        let guess = advance(p.values(), &grid, 0.5 * ds, s);
                        attempt(&grid, s, &guess, settings)?
                    }
                    failed => failed,
                };
                match second {
                    Attempt::Solved(p, r) => (p, r, true),
                    Attempt::Failed(msg, report) => {
                        branch.failure = Some(StepFailure {
                            s,
                            message: format!("{first}; retry with ds/2: {msg}"),
                            report,
                        });
                        break;
                    }
                }
            }
        };
        previous = profile.values().to_vec();
        branch.steps.push(BranchStep {
            s,
            profile,
            report,
            halved,
        });
        on_step(branch.steps.last().expect("just pushed"));
    }
    Ok(branch)
}

/// Solves a single slope, marching from zero in equal increments no larger
/// than [`MAX_SOLVE_INCREMENT`]. `s = 0` returns the zero profile.
pub fn solve_single(s: f64, n: usize, settings: &SolverSettings) -> Result<Branch> {
    SlopeParam::new(s)?;
    if s == 0.0 {
        let grid = make_grid(n)?;
        let (profile, report) =
            solve_profile(&grid, SlopeParam::new(0.0)?, &vec![0.0; n], settings)?;
        return Ok(Branch {
            grid,
            ds: 0.0,
            settings: *settings,
            steps: vec![BranchStep {
                s,
                profile,
                report,
                halved: false,
            }],
            failure: None,
        });
    }
    let m = (s / MAX_SOLVE_INCREMENT).ceil().max(1.0);
    let ds = s / m;
    let mut branch = continue_branch(m * ds, ds, n, settings)?;
    // m ds may differ from s in the last bit; pin the final slope.
    if let Some(last) = branch.steps.last_mut() {
        if branch.failure.is_none() {
            last.s = s;
        }
    }
    Ok(branch)
}

impl Branch {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn s_values(&self) -> Vec<f64> {
        self.steps.iter().map(|st| st.s).collect()
    }

    pub fn last_s(&self) -> Option<f64> {
        self.steps.last().map(|st| st.s)
    }

    /// Step whose slope matches `s` up to rounding.
    pub fn step(&self, s: f64) -> Result<&BranchStep> {
        self.steps
            .iter()
            .find(|st| (st.s - s).abs() <= 1e-9 * s.abs().max(1.0))
            .ok_or(Error::MissingSlope(s))
    }

    pub fn to_document(&self) -> BranchDocument {
        BranchDocument {
            meta: Meta {
                n: self.grid.len(),
                ds: self.ds,
                tolerances: self.settings,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            steps: self
                .steps
                .iter()
                .map(|st| StepRecord {
                    s: st.s,
                    values: st.profile.values().to_vec(),
                    residual_norm: st.report.residual_norm,
                    iterations: st.report.iterations,
                    converged: st.report.converged,
                    halved: st.halved,
                    lambda_history: st.report.lambda_history.clone(),
                    residual_history: st.report.residual_history.clone(),
                    termination: st.report.termination,
                })
                .collect(),
            failure: self.failure.clone(),
        }
    }

    pub fn from_document(doc: BranchDocument) -> Result<Self> {
        let bad = |m: String| Error::DataFormat(m);
        let grid = make_grid(doc.meta.n).map_err(|e| bad(e.to_string()))?;
        if !(doc.meta.ds >= 0.0 && doc.meta.ds.is_finite()) {
            return Err(bad(format!("invalid ds {}", doc.meta.ds)));
        }
        let mut steps = Vec::with_capacity(doc.steps.len());
        let mut last_s = f64::NEG_INFINITY;
        for (i, rec) in doc.steps.into_iter().enumerate() {
            if !(rec.s > last_s) {
                return Err(bad(format!("step {i}: slopes must increase")));
            }
            last_s = rec.s;
            let s = SlopeParam::new(rec.s).map_err(|e| bad(format!("step {i}: {e}")))?;
            let profile = Profile::new(grid.clone(), rec.values.clone(), s)
                .map_err(|e| bad(format!("step {i}: {e}")))?;
            let n = rec.values.len();
            steps.push(BranchStep {
                s: rec.s,
                profile,
                report: SolverReport {
                    solution: rec.values[1..n - 1].to_vec(),
                    residual_norm: rec.residual_norm,
                    iterations: rec.iterations,
                    converged: rec.converged,
                    termination: rec.termination,
                    lambda_history: rec.lambda_history,
                    residual_history: rec.residual_history,
                },
                halved: rec.halved,
            });
        }
        Ok(Self {
            grid,
            ds: doc.meta.ds,
            settings: doc.meta.tolerances,
            steps,
            failure: doc.failure,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("document is serializable")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: BranchDocument =
            serde_json::from_str(text).map_err(|e| Error::DataFormat(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::DataFormat(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    #[serde(rename = "N")]
    pub n: usize,
    pub ds: f64,
    pub tolerances: SolverSettings,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub s: f64,
    pub values: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default)]
    pub halved: bool,
    #[serde(default)]
    pub lambda_history: Vec<f64>,
    #[serde(default)]
    pub residual_history: Vec<f64>,
    pub termination: crate::lm::Termination,
}

/// On-disk form of a [`Branch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDocument {
    pub meta: Meta,
    pub steps: Vec<StepRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<StepFailure>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lm::Termination;
    use proptest::prelude::*;

    #[test]
    fn step_count_arithmetic() {
        assert_eq!(step_count(0.5, 0.1).unwrap(), 5);
        assert_eq!(step_count(7.0, 0.1).unwrap(), 70);
        assert_eq!(step_count(0.1, 0.1).unwrap(), 1);
        assert!(step_count(0.3, 0.2).is_err());
        assert!(step_count(-1.0, 0.1).is_err());
        assert!(step_count(1.0, 0.0).is_err());
        assert_eq!(slope_at(3, 0.1), 0.3);
        assert_eq!(slope_at(70, 0.1), 7.0);
    }

    #[test]
    fn guess_hits_boundary_value() {
        let grid = make_grid(17).unwrap();
        let prev: Vec<f64> = grid.nodes().iter().map(|z| 0.3 * z.sin()).collect();
        let g = advance(&prev, &grid, 0.1, 0.7);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[16], 0.7);
        assert!((g[5] - prev[5] - 0.1 * FRAC_2_PI * grid.node(5)).abs() < 1e-15);
    }

    #[test]
    fn zero_slope_is_immediate() {
        let b = solve_single(0.0, 17, &SolverSettings::default()).unwrap();
        assert_eq!(b.steps[0].report.iterations, 0);
        assert!(b.steps[0].profile.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn single_small_step_converges() {
        let b = continue_branch(0.1, 0.1, 33, &SolverSettings::default()).unwrap();
        assert_eq!(b.len(), 1);
        let st = &b.steps[0];
        assert!(st.report.converged, "{:?}", st.report);
        assert_eq!(st.profile.end_value(), 0.1);
        assert_eq!(st.profile.values()[0], 0.0);
    }

    fn record(n: usize, s: f64, vals: &[f64]) -> StepRecord {
        let mut values = vec![0.0];
        values.extend_from_slice(&vals[..n - 1]);
        StepRecord {
            s,
            values,
            residual_norm: vals[0].abs() * 1e-9,
            iterations: 3,
            converged: true,
            halved: false,
            lambda_history: vals[..3].to_vec(),
            residual_history: vec![],
            termination: Termination::ResidualTolerance,
        }
    }

    proptest! {
        #[test]
        fn json_round_trip_is_bit_exact(
            n in 5usize..20,
            ds in 1e-3f64..1.0,
            raw in proptest::collection::vec(-1e3f64..1e3, 40),
        ) {
            let doc = BranchDocument {
                meta: Meta {
                    n,
                    ds,
                    tolerances: SolverSettings::default(),
                    version: "test".into(),
                },
                steps: vec![record(n, ds, &raw), record(n, 2.0 * ds, &raw[1..])],
                failure: Some(StepFailure { s: 3.0 * ds, message: "x".into(), report: None }),
            };
            let branch = Branch::from_document(doc.clone()).unwrap();
            let text = branch.to_json();
            let back = Branch::from_json(&text).unwrap();
            prop_assert_eq!(back.to_document(), branch.to_document());
            for (a, b) in back.steps.iter().zip(&doc.steps) {
                for (x, y) in a.profile.values().iter().zip(&b.values) {
                    prop_assert_eq!(x.to_bits(), y.to_bits());
                }
            }
            prop_assert_eq!(back.to_json(), text);
        }
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(matches!(Branch::from_json("{"), Err(Error::DataFormat(_))));
        let grid_doc = |values: Vec<f64>| {
            serde_json::json!({
                "meta": {"N": 5, "ds": 0.1, "tolerances": SolverSettings::default(), "version": "t"},
                "steps": [{"s": 0.1, "values": values, "residual_norm": 0.0, "iterations": 1,
                           "converged": true, "termination": "residual_tolerance"}]
            })
            .to_string()
        };
        assert!(Branch::from_json(&grid_doc(vec![0.0, 0.1, 0.2, 0.3, 0.1])).is_ok());
        assert!(Branch::from_json(&grid_doc(vec![0.0, 0.1, 0.2])).is_err());
        assert!(Branch::from_json(&grid_doc(vec![1.0, 0.1, 0.2, 0.3, 0.1])).is_err());
    }
}
