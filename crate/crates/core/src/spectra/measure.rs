use serde::{Deserialize, Serialize};

use super::{laplacian_eigs, SpectraError, Variant};
use crate::branching::{sample_extinct, BranchingError, Conditioning, OffspringModel};
use crate::isoperimetry::HostGraph;
use crate::numeric::{format_float, MeanAccumulator};
use crate::parallel::try_map_chunks;
use crate::seed::SampleSeed;
use crate::walks::{tree_for_ball, Certified};

/// A spectral probability measure tabulated on cells `]E_(i-1), E_i]` with
/// `E_(-1) = 0`; the atom at zero and the mass beyond the grid are separate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralMeasureEstimate {
    pub grid: Vec<f64>,
    pub masses: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// Mass of `]0, E_i]`.
    pub cumulative: Vec<f64>,
    /// Not stored in CSV; `NaN` after [`SpectralMeasureEstimate::from_csv`].
    pub cumulative_stderrs: Vec<f64>,
    pub atom_at_zero: f64,
    pub atom_stderr: f64,
    /// Mass above the last grid point.
    pub tail: f64,
    pub tail_stderr: f64,
    pub n_samples: u64,
    /// Set for measures of radius-truncated trees, which are biased.
    pub truncation_radius: Option<u32>,
}

/// Per-sample contributions: atom, cell masses, tail, in that order.
pub(crate) struct MeasureAccumulator {
    atom: MeanAccumulator,
    cells: Vec<MeanAccumulator>,
    cumulative: Vec<MeanAccumulator>,
    tail: MeanAccumulator,
}

impl MeasureAccumulator {
    pub(crate) fn new(cells: usize) -> Self {
        Self {
            atom: MeanAccumulator::new(),
            cells: vec![MeanAccumulator::new(); cells],
            cumulative: vec![MeanAccumulator::new(); cells],
            tail: MeanAccumulator::new(),
        }
    }

    pub(crate) fn push(&mut self, atom: f64, cells: &[f64], tail: f64) {
        self.atom.push(atom);
        let mut run = 0.0;
        for (i, &m) in cells.iter().enumerate() {
            self.cells[i].push(m);
            run += m;
            self.cumulative[i].push(run);
        }
        self.tail.push(tail);
    }

    pub(crate) fn merge(&mut self, other: &Self) {
        self.atom.merge(&other.atom);
        self.tail.merge(&other.tail);
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.merge(b);
        }
        for (a, b) in self.cumulative.iter_mut().zip(&other.cumulative) {
            a.merge(b);
        }
    }

    pub(crate) fn finish(&self, grid: &[f64], truncation_radius: Option<u32>) -> SpectralMeasureEstimate {
        SpectralMeasureEstimate {
            grid: grid.to_vec(),
            masses: self.cells.iter().map(MeanAccumulator::mean).collect(),
            stderrs: self.cells.iter().map(MeanAccumulator::stderr).collect(),
            cumulative: self.cumulative.iter().map(MeanAccumulator::mean).collect(),
            cumulative_stderrs: self.cumulative.iter().map(MeanAccumulator::stderr).collect(),
            atom_at_zero: self.atom.mean(),
            atom_stderr: self.atom.stderr(),
            tail: self.tail.mean(),
            tail_stderr: self.tail.stderr(),
            n_samples: self.atom.count(),
            truncation_radius,
        }
    }
}

pub(crate) fn validate_grid(grid: &[f64]) -> Result<(), SpectraError> {
    if grid.is_empty() {
        return Err(SpectraError::InvalidGrid("empty grid".into()));
    }
    if grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(SpectraError::InvalidGrid("grid energies must be positive".into()));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SpectraError::InvalidGrid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Cell of `]0, grid_last]` containing `x > 0`, or `grid.len()` beyond the grid.
/// Values up to `E (1 + 1e-9)` count as `E`, matching [`count_eigs_in`].
///
/// [`count_eigs_in`]: super::count_eigs_in
pub(crate) fn cell_of(grid: &[f64], x: f64) -> usize {
    grid.partition_point(|&e| e * (1.0 + super::COLLISION_WINDOW) < x)
}

impl SpectralMeasureEstimate {
    /// Rows `E_lo,E_hi,mass,stderr`: the atom as `0,0,..`, one row per cell
    /// and a final `E_last,inf,..` row for the tail.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("E_lo,E_hi,mass,stderr\n");
        out.push_str(&format!("0,0,{},{}\n", format_float(self.atom_at_zero), format_float(self.atom_stderr)));
        let mut lo = 0.0;
        for i in 0..self.grid.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                format_float(lo),
                format_float(self.grid[i]),
                format_float(self.masses[i]),
                format_float(self.stderrs[i])
            ));
            lo = self.grid[i];
        }
        out.push_str(&format!("{},inf,{},{}\n", format_float(lo), format_float(self.tail), format_float(self.tail_stderr)));
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, SpectraError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        if lines.next().map(str::trim) != Some("E_lo,E_hi,mass,stderr") {
            return Err(SpectraError::Csv("expected header E_lo,E_hi,mass,stderr".into()));
        }
        let mut rows = Vec::new();
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            let parsed: Result<Vec<f64>, _> = f.iter().map(|s| s.trim().parse::<f64>()).collect();
            match parsed {
                Ok(v) if v.len() == 4 => rows.push(v),
                _ => return Err(SpectraError::Csv(format!("bad row {line:?}"))),
            }
        }
        if rows.len() < 2 || rows[0][..2] != [0.0, 0.0] || rows.last().is_some_and(|r| r[1] != f64::INFINITY) {
            return Err(SpectraError::Csv("missing atom or tail row".into()));
        }
        let cells = &rows[1..rows.len() - 1];
        let masses: Vec<f64> = cells.iter().map(|r| r[2]).collect();
        let cumulative = masses
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        let tail = rows.last().expect("checked");
        Ok(Self {
            grid: cells.iter().map(|r| r[1]).collect(),
            stderrs: cells.iter().map(|r| r[3]).collect(),
            cumulative_stderrs: vec![f64::NAN; masses.len()],
            masses,
            cumulative,
            atom_at_zero: rows[0][2],
            atom_stderr: rows[0][3],
            tail: tail[2],
            tail_stderr: tail[3],
            n_samples: 0,
            truncation_radius: None,
        })
    }

    /// Mass of `]0, E]` for a grid point `E`.
    pub fn cumulative_at(&self, e: f64) -> Option<(f64, f64)> {
        self.grid
            .iter()
            .position(|&g| g == e)
            .map(|i| (self.cumulative[i], self.cumulative_stderrs[i]))
    }
}

/// Trees whose root spectral measure is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralConditioning {
    /// Finite trees, exact.
    Extinct { size_cap: usize },
    /// The radius ball of a surviving tree, as a finite graph.
    SurvivorTruncated { radius: u32, vertex_cap: usize },
}

/// Splits the root spectral measure of one connected graph into atom, cells
/// and tail. The kernel is the bottom eigenvector, with root weight `1/n`.
fn root_measure(g: &HostGraph, grid: &[f64]) -> Result<(f64, Vec<f64>, f64), SpectraError> {
    let n = g.len();
    let spec = laplacian_eigs(g, Variant::Laplacian)?;
    let weights = spec.root_weights.expect("trees have a root");
    let mut cells = vec![0.0; grid.len()];
    let mut tail = 0.0;
    for (&x, &w) in spec.values.iter().zip(&weights).skip(1) {
        match cell_of(grid, x) {
            i if i < grid.len() => cells[i] += w,
            _ => tail += w,
        }
    }
    Ok((1.0 / n as f64, cells, tail))
}

/// Monte-Carlo average of the root spectral measure of the Laplacian.
pub fn root_spectral_mass(
    model: &OffspringModel,
    grid: &[f64],
    n_samples: u64,
    seed: u64,
    conditioning: SpectralConditioning,
) -> Result<SpectralMeasureEstimate, SpectraError> {
    validate_grid(grid)?;
    let parts = try_map_chunks(n_samples, |range| {
        let mut acc = MeasureAccumulator::new(grid.len());
        for i in range {
            let s = SampleSeed::new(seed, i);
            let host = match conditioning {
                SpectralConditioning::Extinct { size_cap } => {
                    if model.extinction() >= 1.0 {
                        // every tree is finite: the unconditional law
                        let t = tree_for_ball(model, s, u32::MAX - 1, size_cap, Conditioning::Unconditional)?;
                        if !t.is_finite_complete() {
                            return Err(BranchingError::SizeCapExceeded { cap: size_cap, sample: i }.into());
                        }
                        HostGraph::from_tree(&t)
                    } else {
                        HostGraph::from_tree(&sample_extinct(model, s, size_cap)?)
                    }
                }
                SpectralConditioning::SurvivorTruncated { radius, vertex_cap } => {
                    let t = tree_for_ball(model, s, radius, vertex_cap, Conditioning::Survivor)?;
                    HostGraph::from_tree_ball(&t, radius)
                }
            };
            let (atom, cells, tail) = root_measure(&host, grid)?;
            acc.push(atom, &cells, tail);
        }
        Ok::<_, SpectraError>(acc)
    })?;
    let mut acc = MeasureAccumulator::new(grid.len());
    for p in &parts {
        acc.merge(p);
    }
    let radius = match conditioning {
        SpectralConditioning::SurvivorTruncated { radius, .. } => Some(radius),
        SpectralConditioning::Extinct { .. } => None,
    };
    Ok(acc.finish(grid, radius))
}

/// Survivor-ensemble estimates at radii `R` and `R + 2` on the same seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusStability {
    pub radius: u32,
    pub inner: SpectralMeasureEstimate,
    pub outer: SpectralMeasureEstimate,
    /// Largest `|F_R(E) - F_(R+2)(E)| / stderr` over the grid and the atom.
    pub max_ratio: f64,
    /// Every cumulative value and the atom moved by less than one standard error.
    pub stable: bool,
}

/// Compares the survivor-truncated root spectral measure at `radius` and
/// `radius + 2`. Standard errors are those of the outer estimate.
pub fn survivor_radius_stability(
    model: &OffspringModel,
    grid: &[f64],
    n_samples: u64,
    seed: u64,
    radius: u32,
    vertex_cap: usize,
) -> Result<RadiusStability, SpectraError> {
    let at = |r| root_spectral_mass(model, grid, n_samples, seed, SpectralConditioning::SurvivorTruncated { radius: r, vertex_cap });
    let inner = at(radius)?;
    let outer = at(radius + 2)?;
    let mut pairs: Vec<(f64, f64)> = inner
        .cumulative
        .iter()
        .zip(&outer.cumulative)
        .zip(&outer.cumulative_stderrs)
        .map(|((a, b), se)| ((a - b).abs(), *se))
        .collect();
    pairs.push(((inner.atom_at_zero - outer.atom_at_zero).abs(), outer.atom_stderr));
    let mut max_ratio = 0.0f64;
    let mut stable = true;
    for (diff, se) in pairs {
        let ratio = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        max_ratio = max_ratio.max(ratio);
        stable &= ratio < 1.0;
    }
    Ok(RadiusStability { radius, inner, outer, max_ratio, stable })
}

/// `sum_sigma e^(-s E)` for the tabulated measure: the atom counts fully,
/// each cell's mass is spread uniformly over the cell, which is the
/// integrated-by-parts form `s int F(E) e^(-sE) dE` with a piecewise-linear
/// distribution function. The error bound covers every placement of the mass
/// inside its cell and the tail beyond the grid.
pub fn laplace_transform_check(dos: &SpectralMeasureEstimate, s: f64) -> Result<Certified, SpectraError> {
    validate_grid(&dos.grid)?;
    if !(s > 0.0 && s.is_finite()) {
        return Err(SpectraError::InvalidGrid(format!("time {s} must be positive")));
    }
    let e_max = *dos.grid.last().expect("validated");
    if s * e_max < 30.0 {
        return Err(SpectraError::GridTooShort { reach: e_max, needed: 30.0 / s });
    }
    let max_step = 1.0 / (4.0 * s);
    let mut lo = 0.0;
    let mut value = dos.atom_at_zero;
    let mut error = 0.0;
    for (&hi, &m) in dos.grid.iter().zip(&dos.masses) {
        if hi - lo > max_step {
            return Err(SpectraError::GridTooCoarse { spacing: hi - lo, max: max_step });
        }
        let (a, b) = ((-s * lo).exp(), (-s * hi).exp());
        value += m * (a - b) / (s * (hi - lo));
        error += m * (a - b);
        lo = hi;
    }
    error += dos.tail * (-s * e_max).exp();
    Ok(Certified { value, error_bound: error })
}
