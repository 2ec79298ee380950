//! Simple random walks on sampled trees: exact and killed return
//! probabilities, annealed curves, continuous-time return probabilities and
//! stretched-exponent fits.

mod ball;
mod continuous;
mod discrete;
mod fit;

pub use ball::BallWalk;
pub use continuous::{
    ct_return_mixture, ct_return_semigroup, ct_return_semigroup_in, Certified, Region, Variant,
    SEMIGROUP_TOL,
};
pub use discrete::{
    annealed_return, killed_return_curve, return_prob_enumerate, return_prob_exact, sample_path,
    tree_for_ball, AnnealedOptions, RadiusPolicy, WalkPath,
};
pub use fit::{fit_log_log, fit_stretch_exponent, ExponentFit, MIN_FIT_POINTS};

use serde::{Deserialize, Serialize};

use crate::branching::BranchingError;
use crate::numeric::format_float;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WalkError {
    #[error("tree is expanded only through depth {available}, depth {needed} is required")]
    InsufficientRadius { needed: u32, available: u32 },
    #[error("sample {sample}: ball generation exceeded the vertex cap {cap}")]
    BudgetExceeded { cap: usize, sample: u64 },
    #[error("curve horizon {horizon} is shorter than the required {needed}")]
    HorizonTooShort { horizon: f64, needed: f64 },
    #[error("nonpositive estimates at times {times:?}")]
    NonpositiveEstimate { times: Vec<f64> },
    #[error("estimates equal to 1 at times {times:?}")]
    SaturatedEstimate { times: Vec<f64> },
    #[error("fit needs {needed} points, found {found}")]
    TooFewPoints { found: usize, needed: usize },
    #[error("invalid times: {0}")]
    InvalidTimes(String),
    #[error("malformed curve csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Branching(#[from] BranchingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeAxis {
    Discrete,
    Continuous,
}

/// Return probabilities over a list of times, with Monte-Carlo standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnCurve {
    pub axis: TimeAxis,
    pub times: Vec<f64>,
    pub estimates: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub n_trees: u64,
    pub model_tag: String,
    /// Set when later times come from a walk killed beyond this depth.
    pub truncation_radius: Option<u32>,
}

impl ReturnCurve {
    /// Curve of a single tree (zero standard errors).
    pub fn discrete_single(times: &[u64], estimates: &[f64], model_tag: &str) -> Self {
        Self {
            axis: TimeAxis::Discrete,
            times: times.iter().map(|&t| t as f64).collect(),
            estimates: estimates.to_vec(),
            stderrs: vec![0.0; times.len()],
            n_trees: 1,
            model_tag: model_tag.to_string(),
            truncation_radius: None,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Estimate at `t`, if that time is on the curve.
    pub fn at(&self, t: f64) -> Option<f64> {
        self.times.iter().position(|&x| x == t).map(|i| self.estimates[i])
    }

    /// CSV with header `t,estimate,stderr,n_trees` (`s,...` for continuous time).
    pub fn to_csv(&self) -> String {
        let head = match self.axis {
            TimeAxis::Discrete => "t",
            TimeAxis::Continuous => "s",
        };
        let mut out = format!("{head},estimate,stderr,n_trees\n");
        for i in 0..self.times.len() {
            let t = match self.axis {
                TimeAxis::Discrete => format!("{}", self.times[i] as u64),
                TimeAxis::Continuous => format_float(self.times[i]),
            };
            out.push_str(&format!(
                "{t},{},{},{}\n",
                format_float(self.estimates[i]),
                format_float(self.stderrs[i]),
                self.n_trees
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, WalkError> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| WalkError::Csv("empty input".into()))?;
        let axis = match header.trim() {
            "t,estimate,stderr,n_trees" => TimeAxis::Discrete,
            "s,estimate,stderr,n_trees" => TimeAxis::Continuous,
            other => return Err(WalkError::Csv(format!("unexpected header {other:?}"))),
        };
        let mut curve = Self {
            axis,
            times: Vec::new(),
            estimates: Vec::new(),
            stderrs: Vec::new(),
            n_trees: 0,
            model_tag: String::new(),
            truncation_radius: None,
        };
        for (no, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = || WalkError::Csv(format!("line {}: {line:?}", no + 2));
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 4 {
                return Err(bad());
            }
            curve.times.push(f[0].parse().map_err(|_| bad())?);
            curve.estimates.push(f[1].parse().map_err(|_| bad())?);
            curve.stderrs.push(f[2].parse().map_err(|_| bad())?);
            curve.n_trees = f[3].parse().map_err(|_| bad())?;
        }
        Ok(curve)
    }
}
