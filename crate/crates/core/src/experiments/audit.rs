use serde::{Deserialize, Serialize};

use super::samplers::random_forest_host;
use super::{ExperimentConfig, OutputFile, RunError};
use crate::branching::{Conditioning, SampledTree};
use crate::isoperimetry::{boundary, islands, islands_bruteforce, HostGraph, IslandDecomposition, QParam};
use crate::parallel::try_map_chunks;
use crate::seed::SampleSeed;
use crate::walks::tree_for_ball;

pub const AUDIT_DEFAULT_RADIUS: u32 = 5;
pub const AUDIT_DEFAULT_MAX_VERTICES: usize = 12;
pub const AUDIT_DEFAULT_LADDER: [QParam; 3] = [
    QParam::Rational { num: 1, den: 10 },
    QParam::Rational { num: 1, den: 5 },
    QParam::Rational { num: 2, den: 5 },
];
const BINARY_DEFAULT_DEPTHS: [u32; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

/// Pass/fail counts of the island audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IslandAudit {
    pub q_ladder: Vec<f64>,
    /// Random small forests compared against the exhaustive oracle at every ladder q.
    pub oracle_hosts: u64,
    pub oracle_mismatches: u64,
    /// Sampled tree balls, used with the small forests for the ladder checks.
    pub tree_hosts: u64,
    /// Islands found on the tree balls, per ladder q.
    pub tree_islands: Vec<u64>,
    /// `A_q' subset A_q` for consecutive ladder pairs.
    pub nesting_checks: u64,
    pub nesting_violations: u64,
    /// q-islands with at most `1/q'` vertices and a nonempty boundary must avoid `A_q'`.
    pub small_island_checks: u64,
    pub small_island_violations: u64,
    /// Positive isolation of every reported island.
    pub positivity_violations: u64,
    pub binary_hosts: u64,
    pub binary_islands: u64,
    pub passed: bool,
}

#[derive(Default)]
struct Counts {
    mismatches: u64,
    nesting: (u64, u64),
    small: (u64, u64),
    positivity: u64,
    tree_islands: Vec<u64>,
}

impl Counts {
    fn add(&mut self, o: &Counts) {
        self.mismatches += o.mismatches;
        self.nesting.0 += o.nesting.0;
        self.nesting.1 += o.nesting.1;
        self.small.0 += o.small.0;
        self.small.1 += o.small.1;
        self.positivity += o.positivity;
        if self.tree_islands.len() < o.tree_islands.len() {
            self.tree_islands.resize(o.tree_islands.len(), 0);
        }
        for (a, b) in self.tree_islands.iter_mut().zip(&o.tree_islands) {
            *a += b;
        }
    }
}

/// Ladder checks on the decompositions of one host, `ladder` ascending.
fn ladder_checks(host: &HostGraph, ladder: &[QParam], decs: &[IslandDecomposition], counts: &mut Counts) {
    let n = host.len();
    let masks: Vec<Vec<bool>> = decs.iter().map(|d| d.island_mask(n)).collect();
    for dec in decs {
        counts.positivity += dec.iotas.iter().filter(|&&x| !(x > 0.0)).count() as u64;
    }
    for j in 1..ladder.len() {
        let (lo, hi) = (&masks[j - 1], &masks[j]);
        counts.nesting.0 += 1;
        if lo.iter().zip(hi).any(|(&a, &b)| a && !b) {
            counts.nesting.1 += 1;
        }
        for i in 0..j {
            let q_small = ladder[i];
            for island in &decs[j].islands {
                // |V| <= 1/q'  <=>  q' |V| - 1 <= 0. Closed components are
                // cores at every q and are not covered.
                let closed = boundary(host, island).map_or(true, |b| b.boundary == 0);
                if !closed && q_small.cmp_scaled(island.len() as i64, 1).is_le() {
                    counts.small.0 += 1;
                    if island.iter().any(|&v| masks[i][v as usize]) {
                        counts.small.1 += 1;
                    }
                }
            }
        }
    }
}

/// Runs the island audit described by `c` (an `islands-audit` config).
pub fn audit_islands(c: &ExperimentConfig) -> Result<IslandAudit, RunError> {
    let model = c.offspring_model()?;
    let mut ladder = c.q_ladder.clone().unwrap_or_else(|| AUDIT_DEFAULT_LADDER.to_vec());
    ladder.sort_by(|a, b| a.value().total_cmp(&b.value()));
    ladder.dedup();
    let radius = c.radius.unwrap_or(AUDIT_DEFAULT_RADIUS);
    let max_vertices = c.max_host_vertices.unwrap_or(AUDIT_DEFAULT_MAX_VERTICES);
    let vertex_cap = c.vertex_cap_or_default();
    let parts = try_map_chunks(c.n_samples, |range| {
        let mut counts = Counts { tree_islands: vec![0; ladder.len()], ..Counts::default() };
        for i in range {
            let seed = SampleSeed::new(c.seed, i);
            let small = random_forest_host(seed, max_vertices);
            let mut decs = Vec::with_capacity(ladder.len());
            for &q in &ladder {
                let fast = islands(&small, q)?;
                if fast != islands_bruteforce(&small, q)? {
                    counts.mismatches += 1;
                }
                decs.push(fast);
            }
            ladder_checks(&small, &ladder, &decs, &mut counts);

            let tree = tree_for_ball(&model, seed, radius, vertex_cap, Conditioning::Survivor)?;
            let host = HostGraph::from_tree_ball(&tree, radius);
            let decs = ladder.iter().map(|&q| islands(&host, q)).collect::<Result<Vec<_>, _>>()?;
            for (k, d) in decs.iter().enumerate() {
                counts.tree_islands[k] += d.islands.len() as u64;
            }
            ladder_checks(&host, &ladder, &decs, &mut counts);
        }
        Ok::<_, RunError>(counts)
    })?;
    let mut total = Counts { tree_islands: vec![0; ladder.len()], ..Counts::default() };
    for p in &parts {
        total.add(p);
    }

    let depths = c.binary_depths.clone().unwrap_or_else(|| BINARY_DEFAULT_DEPTHS.to_vec());
    let mut binary_qs = ladder.clone();
    binary_qs.push(QParam::Rational { num: 1, den: 1 });
    let mut binary_islands = 0u64;
    for &d in &depths {
        let host = HostGraph::from_tree(&SampledTree::regular(2, d));
        for &q in &binary_qs {
            binary_islands += islands(&host, q)?.islands.len() as u64;
        }
    }
    let passed = total.mismatches == 0
        && total.nesting.1 == 0
        && total.small.1 == 0
        && total.positivity == 0
        && binary_islands == 0;
    Ok(IslandAudit {
        q_ladder: ladder.iter().map(QParam::value).collect(),
        oracle_hosts: c.n_samples,
        oracle_mismatches: total.mismatches,
        tree_hosts: c.n_samples,
        tree_islands: total.tree_islands,
        nesting_checks: total.nesting.0,
        nesting_violations: total.nesting.1,
        small_island_checks: total.small.0,
        small_island_violations: total.small.1,
        positivity_violations: total.positivity,
        binary_hosts: depths.len() as u64,
        binary_islands,
        passed,
    })
}

pub(super) fn islands_audit(c: &ExperimentConfig) -> Result<Vec<OutputFile>, RunError> {
    Ok(vec![super::runs::json_file("islands_audit.json", &audit_islands(c)?)])
}
