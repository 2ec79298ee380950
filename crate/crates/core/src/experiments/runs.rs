use serde::Serialize;
use serde_json::json;

use super::{ExperimentConfig, OutputFile, RunError};
use crate::branching::{Conditioning, OffspringModel};
use crate::ergraph::{bgw_atom_at_zero, dos_estimate, er_atom_at_zero, giant_spectral_masses, DosMode};
use crate::induced_walk::{build_induced_partial, compression_norm, induced_return_prob_killed};
use crate::isoperimetry::{big_island_hit_prob, exceeds_cube_root, islands, HostGraph, QParam};
use crate::numeric::{format_float, poisson_quantile_tail, MeanAccumulator};
use crate::parallel::{map_chunks, try_map_chunks};
use crate::seed::SampleSeed;
use crate::spectra::{lifshits_bounds, root_spectral_mass, SpectralConditioning};
use crate::walks::{
    annealed_return, ct_return_mixture, ct_return_semigroup_in, fit_log_log, fit_stretch_exponent,
    killed_return_curve, tree_for_ball, AnnealedOptions, RadiusPolicy, Region, ReturnCurve, TimeAxis, Variant,
};

pub const CT_DEFAULT_RADIUS: u32 = 8;
pub const NORM_DEFAULT_RADIUS: u32 = 12;
pub const NORM_HOST_MARGIN: u32 = 3;
pub const NORM_ITERATIONS: usize = 100_000;
pub const BAD_EVENT_DEFAULT_RADIUS: u32 = 12;
/// Samples examined per qualifying tree before the induced-return search gives up.
pub const QUALIFY_ATTEMPTS: u64 = 20;
/// Allowed excess over the explicit bounds.
pub const BOUND_SLACK: f64 = 1e-9;
pub const INDUCED_SLACK: f64 = 1e-12;

pub(super) fn json_file(name: &str, value: &impl Serialize) -> OutputFile {
    let mut text = serde_json::to_string_pretty(value).expect("outputs serialize");
    text.push('\n');
    OutputFile::new(name, text)
}

pub(super) fn return_prob(c: &ExperimentConfig) -> Result<Vec<OutputFile>, RunError> {
    let model = c.offspring_model()?;
    let options = AnnealedOptions {
        radius: c.radius.map_or(RadiusPolicy::Exact, RadiusPolicy::Truncated),
        vertex_cap: c.vertex_cap_or_default(),
    };
    let times = c.times.as_deref().unwrap_or_default();
    let cond = c.conditioning.unwrap_or(Conditioning::Survivor);
    let curve = annealed_return(&model, times, c.n_samples, c.seed, cond, options)?;
    let mut files = vec![OutputFile::new("return_prob.csv", curve.to_csv())];
    if let Some([lo, hi]) = c.fit_range {
        let fit = fit_stretch_exponent(&curve, lo, hi)?;
        let all_positive = curve
            .times
            .iter()
            .zip(&curve.estimates)
            .filter(|(t, _)| (**t as u64).is_multiple_of(2))
            .all(|(_, p)| *p > 0.0);
        files.push(json_file(
            "fit.json",
            &json!({
                "slope": fit.slope,
                "intercept": fit.intercept,
                "r_squared": fit.r_squared,
                "fit_range": [fit.fit_range.0, fit.fit_range.1],
                "even_estimates_positive": all_positive,
                "truncation_radius": curve.truncation_radius,
            }),
        ));
    }
    Ok(files)
}

/// One tree's continuous-time values at one `s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CtRow {
    pub sample: u64,
    pub s: f64,
    pub semigroup: f64,
    pub semigroup_error: f64,
    pub mixture: f64,
    pub mixture_error: f64,
}

/// Smallest even horizon whose Poisson tail at `s` is below `1e-13` and
/// that satisfies the mixture's minimum-horizon rule.
fn mixture_horizon(s: f64) -> u64 {
    let need = (2.0 * s + 6.0 * s.sqrt()).ceil() as u64;
    let h = need.max(poisson_quantile_tail(s, 1e-13));
    h + h % 2
}

/// Mixture and semigroup values on each tree's ball of radius `radius`,
/// for the walk killed on leaving it.
pub fn ct_rows(
    model: &OffspringModel,
    cond: Conditioning,
    s_values: &[f64],
    n_samples: u64,
    seed: u64,
    radius: u32,
    vertex_cap: usize,
    variant: Variant,
) -> Result<Vec<CtRow>, RunError> {
    let horizon = s_values.iter().map(|&s| mixture_horizon(s)).max().unwrap_or(0);
    let times: Vec<u64> = (0..=horizon).step_by(2).collect();
    let parts = try_map_chunks(n_samples, |range| {
        let mut rows = Vec::new();
        for i in range {
            let tree = tree_for_ball(model, SampleSeed::new(seed, i), radius, vertex_cap, cond)?;
            let curve = ReturnCurve::discrete_single(&times, &killed_return_curve(&tree, radius, &times)?, "killed");
            for &s in s_values {
                let semi = ct_return_semigroup_in(&tree, s, variant, Region::Killed { radius })?;
                let (mixture, mixture_error) = match variant {
                    Variant::Normalized => {
                        let m = ct_return_mixture(&curve, s)?;
                        (m.value, m.error_bound)
                    }
                    Variant::Laplacian => (f64::NAN, f64::NAN),
                };
                rows.push(CtRow {
                    sample: i,
                    s,
                    semigroup: semi.value,
                    semigroup_error: semi.error_bound,
                    mixture,
                    mixture_error,
                });
            }
        }
        Ok::<_, RunError>(rows)
    })?;
    Ok(parts.into_iter().flatten().collect())
}

pub(super) fn ct_return(c: &ExperimentConfig) -> Result<Vec<OutputFile>, RunError> {
    let model = c.offspring_model()?;
    let s_values = c.s_values.as_deref().unwrap_or_default();
    let radius = c.radius.unwrap_or(CT_DEFAULT_RADIUS);
    let variant = c.variant.unwrap_or(Variant::Normalized);
    let cond = c.conditioning.unwrap_or(Conditioning::Survivor);
    let rows = ct_rows(&model, cond, s_values, c.n_samples, c.seed, radius, c.vertex_cap_or_default(), variant)?;
    let mut accs = vec![MeanAccumulator::new(); s_values.len()];
    for (k, row) in rows.iter().enumerate() {
        accs[k % s_values.len()].push(row.semigroup);
    }
    let curve = ReturnCurve {
        axis: TimeAxis::Continuous,
        times: s_values.to_vec(),
        estimates: accs.iter().map(MeanAccumulator::mean).collect(),
        stderrs: accs.iter().map(MeanAccumulator::stderr).collect(),
        n_trees: c.n_samples,
        model_tag: model.to_string(),
        truncation_radius: Some(radius),
    };
    let mut files = vec![OutputFile::new("ct_return.csv", curve.to_csv())];
    if variant == Variant::Normalized {
        let mut text = String::from("sample,s,mixture,mixture_error,semigroup,semigroup_error,abs_diff\n");
        for r in &rows {
            text.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.sample,
                format_float(r.s),
                format_float(r.mixture),
                format_float(r.mixture_error),
                format_float(r.semigroup),
                format_float(r.semigroup_error),
                format_float((r.mixture - r.semigroup).abs()),
            ));
        }
        files.push(OutputFile::new("ct_identity.csv", text));
    }
    Ok(files)
}

pub(super) fn lifshits_extinct(c: &ExperimentConfig) -> Result<Vec<OutputFile>, RunError> {
    let lambda = c.lambda.unwrap_or(2.0);
    let model = OffspringModel::poisson(lambda)?;
    let grid = c.grid.as_deref().unwrap_or_default();
    let est = root_spectral_mass(
        &model,
        grid,
        c.n_samples,
        c.seed,
        SpectralConditioning::Extinct { size_cap: c.size_cap_or_default() },
    )?;
    let bounds = lifshits_bounds(lambda)?;
    let mut check = String::from("E,cumulative,stderr,lower,upper,within_3sigma\n");
    for (i, &e) in grid.iter().enumerate() {
        let (cum, se) = (est.cumulative[i], est.cumulative_stderrs[i]);
        let (lo, hi) = (bounds.lower(e), bounds.upper(e).min(1.0));
        let within = cum + 3.0 * se >= lo && cum - 3.0 * se <= hi;
        check.push_str(&format!(
            "{},{},{},{},{},{}\n",
            format_float(e),
            format_float(cum),
            format_float(se),
            format_float(lo),
            format_float(hi),
            within
        ));
    }
    let mut bounds_json = bounds.to_json();
    bounds_json.push('\n');
    Ok(vec![
        OutputFile::new("spectral_measure.csv", est.to_csv()),
        OutputFile::new("lifshits_bounds.json", bounds_json),
        OutputFile::new("lifshits_check.csv", check),
    ])
}

pub(super) fn dos(c: &ExperimentConfig) -> Result<Vec<OutputFile>, RunError> {
    let n = c.n_vertices.unwrap_or_default();
    let lambda = c.lambda.unwrap_or_default();
    let grid = c.grid.as_deref().unwrap_or_default();
    let mode = c.dos_mode.unwrap_or(DosMode::Inertia);
    let est = dos_estimate(n, lambda, c.n_samples, grid, c.seed, mode)?;
    let mut files = vec![OutputFile::new("dos.csv", est.to_csv())];
    if let Some(energies) = &c.giant_energies {
        let masses = giant_spectral_masses(n, lambda, c.n_samples, energies, c.seed)?;
        let mut text = String::from(
            "E,laplacian,laplacian_stderr,normalized,normalized_stderr,trace_violations,mean_giant_size,n_graphs\n",
        );
        for m in &masses {
            text.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                format_float(m.energy),
                format_float(m.laplacian),
                format_float(m.laplacian_stderr),
                format_float(m.normalized),
                format_float(m.normalized_stderr),
                m.trace_violations,
                format_float(m.mean_giant_size),
                m.n_graphs
            ));
        }
        files.push(OutputFile::new("giant_mass.csv", text));
        let fit = |f: fn(&crate::ergraph::GiantMass) -> f64| {
            let pts: Vec<(f64, f64)> = masses.iter().map(|m| (m.energy, f(m))).collect();
            fit_log_log(&pts)
                .ok()
                .map(|x| json!({ "slope": x.slope, "intercept": x.intercept, "r_squared": x.r_squared }))
        };
        files.push(json_file(
            "giant_fit.json",
            &json!({ "laplacian": fit(|m| m.laplacian), "normalized": fit(|m| m.normalized) }),
        ));
    }
    Ok(files)
}

pub(super) fn atom_zero(c: &ExperimentConfig) -> Result<Vec<OutputFile>, RunError> {
    let lambda = c.lambda.unwrap_or_default();
    let n = c.n_vertices.unwrap_or_default();
    let n_graphs = c.n_graphs.unwrap_or(50);
    let model = OffspringModel::poisson(lambda)?;
    let bgw = bgw_atom_at_zero(&model, c.n_samples, c.seed, c.size_cap_or_default())?;
    let er = er_atom_at_zero(n, lambda, n_graphs, c.seed)?;
    Ok(vec![json_file(
        "atom_zero.json",
        &json!({
            "lambda": lambda,
            "er_estimate": er.value,
            "er_stderr": er.stderr,
            "er_graphs": n_graphs,
            "n_vertices": n,
            "bgw_estimate": bgw.value,
            "bgw_stderr": bgw.stderr,
            "bgw_samples": bgw.n_samples,
            "relative_diff": (er.value - bgw.value).abs() / bgw.value,
        }),
    )])
}

/// Compression norm of one conditioned host.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSample {
    pub sample: u64,
    pub host_vertices: usize,
    /// Ocean vertices of the ball whose induced rows are exact.
    pub region_vertices: usize,
    /// Ocean vertices of the ball left out because their rows depend on the frontier.
    pub excluded_vertices: usize,
    /// `None` when the region is empty.
    pub norm: Option<f64>,
}

/// Norms on `n_samples` survivor hosts of radius `host_radius`, each over the
/// exact ocean vertices within `radius` of the root.
pub fn norm_samples(
    model: &OffspringModel,
    q: QParam,
    radius: u32,
    host_radius: u32,
    n_samples: u64,
    seed: u64,
    vertex_cap: usize,
) -> Result<Vec<NormSample>, RunError> {
    let parts = try_map_chunks(n_samples, |range| {
        let mut out = Vec::new();
        for i in range {
            let tree = tree_for_ball(model, SampleSeed::new(seed, i), host_radius, vertex_cap, Conditioning::Survivor)?;
            let host = HostGraph::from_tree_ball(&tree, host_radius);
            let dec = islands(&host, q)?;
            let g = build_induced_partial(&host, &dec)?;
            let ocean: Vec<u32> = host.ball(0, radius).into_iter().filter(|&x| g.contains(x)).collect();
            let region: Vec<u32> = ocean.iter().copied().filter(|&x| g.is_exact(x)).collect();
            let norm = if region.is_empty() {
                None
            } else {
                Some(compression_norm(&g, &region, NORM_ITERATIONS)?)
            };
            out.push(NormSample {
                sample: i,
                host_vertices: host.len(),
                region_vertices: region.len(),
                excluded_vertices: ocean.len() - region.len(),
                norm,
            });
        }
        Ok::<_, RunError>(out)
    })?;
    Ok(parts.into_iter().flatten().collect())
}

/// Compression norm of the binary tree (root degree 2) on the ball of radius `r`.
pub fn binary_norm(q: QParam, r: u32) -> Result<f64, RunError> {
    let host = HostGraph::from_tree(&crate::branching::SampledTree::regular(2, r + 1));
    let dec = islands(&host, q)?;
    let g = build_induced_partial(&host, &dec)?;
    Ok(compression_norm(&g, g.ocean(), NORM_ITERATIONS)?)
}

pub fn norm_bound(q: QParam) -> f64 {
    1.0 - q.value() * q.value() / 18.0
}

pub(super) fn norm_audit(c: &ExperimentConfig) -> Result<Vec<OutputFile>, RunError> {
    let model = c.offspring_model()?;
    let q = c.q.unwrap_or(QParam::Rational { num: 1, den: 5 });
    let radius = c.radius.unwrap_or(NORM_DEFAULT_RADIUS);
    let host_radius = c.host_radius.unwrap_or(radius + NORM_HOST_MARGIN);
    let samples = norm_samples(&model, q, radius, host_radius, c.n_samples, c.seed, c.vertex_cap_or_default())?;
    let bound = norm_bound(q);
    let mut text = String::from("sample,host_vertices,region_vertices,excluded_vertices,norm,bound,within\n");
    let mut max_norm = 0.0f64;
    let (mut usable, mut violations) = (0u64, 0u64);
    for s in &samples {
        let within = s.norm.map(|x| x <= bound + BOUND_SLACK);
        if let Some(x) = s.norm {
            usable += 1;
            max_norm = max_norm.max(x);
            violations += u64::from(within == Some(false));
        }
        text.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            s.sample,
            s.host_vertices,
            s.region_vertices,
            s.excluded_vertices,
            s.norm.map_or("nan".into(), format_float),
            format_float(bound),
            within.map_or("na".into(), |w| w.to_string())
        ));
    }
    let binary: Vec<serde_json::Value> = c
        .binary_radii
        .as_deref()
        .unwrap_or_default()
        .iter()
        .map(|&r| binary_norm(q, r).map(|x| json!({ "radius": r, "norm": x })))
        .collect::<Result<_, _>>()?;
    Ok(vec![
        OutputFile::new("norm_audit.csv", text),
        json_file(
            "norm_audit.json",
            &json!({
                "q": q.value(),
                "bound": bound,
                "radius": radius,
                "host_radius": host_radius,
                "hosts": c.n_samples,
                "usable": usable,
                "violations": violations,
                "max_norm": max_norm,
                "binary": binary,
            }),
        ),
    ])
}

/// The induced return probability at time `t` on trees without islands
/// larger than `t^(1/3)` at `q = t^(-1/3)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedReturnAudit {
    pub t: u64,
    pub q: f64,
    pub qualifying: u64,
    pub examined: u64,
    pub excluded_big: u64,
    /// Qualifying-size trees whose root lies in an island.
    pub excluded_root: u64,
    pub values: Vec<f64>,
    pub max_value: f64,
    pub max_early_exit_mass: f64,
    pub bound: f64,
    pub violations: u64,
}

enum Outcome {
    Big,
    RootInIsland,
    Value(f64, f64),
}

/// Examines survivor trees in index order until `wanted` qualify (or
/// `QUALIFY_ATTEMPTS * wanted` have been examined).
pub fn induced_return_audit(
    model: &OffspringModel,
    t: u64,
    wanted: u64,
    seed: u64,
    radius: u32,
    vertex_cap: usize,
) -> Result<InducedReturnAudit, RunError> {
    let q = QParam::inv_cbrt(t)?;
    let mut audit = InducedReturnAudit {
        t,
        q: q.value(),
        qualifying: 0,
        examined: 0,
        excluded_big: 0,
        excluded_root: 0,
        values: Vec::new(),
        max_value: 0.0,
        max_early_exit_mass: 0.0,
        bound: (-(t as f64).cbrt() / 18.0).exp(),
        violations: 0,
    };
    let batch = wanted.max(crate::parallel::CHUNK);
    let limit = wanted.saturating_mul(QUALIFY_ATTEMPTS);
    while audit.qualifying < wanted && audit.examined < limit {
        let start = audit.examined;
        let parts = map_chunks(batch, |range| {
            range
                .map(|k| -> Result<Outcome, RunError> {
                    let i = start + k;
                    let tree = tree_for_ball(model, SampleSeed::new(seed, i), radius, vertex_cap, Conditioning::Survivor)?;
                    let host = HostGraph::from_tree_ball(&tree, radius);
                    let dec = islands(&host, q)?;
                    if dec.islands.iter().any(|c| exceeds_cube_root(c.len(), t)) {
                        return Ok(Outcome::Big);
                    }
                    let g = build_induced_partial(&host, &dec)?;
                    if g.root().is_none() {
                        return Ok(Outcome::RootInIsland);
                    }
                    let k = induced_return_prob_killed(&g, t)?;
                    Ok(Outcome::Value(k.value, k.early_exit_mass))
                })
                .collect::<Vec<_>>()
        });
        for outcome in parts.into_iter().flatten() {
            if audit.qualifying == wanted || audit.examined == limit {
                break;
            }
            audit.examined += 1;
            match outcome? {
                Outcome::Big => audit.excluded_big += 1,
                Outcome::RootInIsland => audit.excluded_root += 1,
                Outcome::Value(v, exit) => {
                    audit.qualifying += 1;
                    audit.values.push(v);
                    audit.max_value = audit.max_value.max(v);
                    audit.max_early_exit_mass = audit.max_early_exit_mass.max(exit);
                    audit.violations += u64::from(v > audit.bound + INDUCED_SLACK);
                }
            }
        }
    }
    Ok(audit)
}

pub(super) fn bad_event(c: &ExperimentConfig) -> Result<Vec<OutputFile>, RunError> {
    let model = c.offspring_model()?;
    let radius = c.radius.unwrap_or(BAD_EVENT_DEFAULT_RADIUS);
    let options = AnnealedOptions {
        radius: RadiusPolicy::Truncated(radius),
        vertex_cap: c.vertex_cap_or_default(),
    };
    let mut hits = String::from("t,q,probability,stderr,n_samples,samples_with_big_islands,uncertified_islands,radius\n");
    let mut induced = String::from(
        "t,q,qualifying,examined,excluded_big,excluded_root,max_value,max_early_exit_mass,bound,violations\n",
    );
    for &t in c.times.as_deref().unwrap_or_default() {
        let q = QParam::inv_cbrt(t)?;
        let e = big_island_hit_prob(&model, t, q, c.n_samples, c.seed, options)?;
        hits.push_str(&format!(
            "{t},{},{},{},{},{},{},{}\n",
            format_float(q.value()),
            format_float(e.probability),
            format_float(e.stderr),
            e.n_samples,
            e.samples_with_big_islands,
            e.uncertified_islands,
            e.radius
        ));
        let a = induced_return_audit(&model, t, c.n_samples, c.seed, radius, c.vertex_cap_or_default())?;
        induced.push_str(&format!(
            "{t},{},{},{},{},{},{},{},{},{}\n",
            format_float(a.q),
            a.qualifying,
            a.examined,
            a.excluded_big,
            a.excluded_root,
            format_float(a.max_value),
            format_float(a.max_early_exit_mass),
            format_float(a.bound),
            a.violations
        ));
    }
    Ok(vec![
        OutputFile::new("bad_event.csv", hits),
        OutputFile::new("induced_return.csv", induced),
    ])
}
