//! Partitioning a finite set with ball counts `<= M (r/delta)^s` into
//! few subsets whose counts obey the same bound with constant 1.
//!
//! Two stages over the dyadic lattice cubes of `[0,1]^m`:
//!
//! 1. Split so that each part holds at most one point per cube of side
//!    `r1 >= 10^{m/s} delta`, refined by the `2^m` parity coloring of the
//!    `r1`-cubes so points of one part are pairwise `>= r1` apart. The
//!    separation is what makes the final ball audit pass with constant 1
//!    at radii below `r1/2`.
//! 2. Within each part, grow a chain of graphs indexed by the dyadic
//!    scales: at scale `r`, cliques inside one lattice cube are merged
//!    (smallest canonical identifier first) while at least two of them
//!    have order at most `10^{3m} M / 2`. Each resulting clique has order
//!    at most `10^{3m} M`, cubes hold at most `10^{-m}(r/delta)^s`
//!    cliques, and coloring clique members apart finishes the split.
//!
//! The subset count is at most `2^{m+s} 10^{4m} M^2 <= 10^{5m} M^2`.

use std::collections::HashMap;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::dyadic_level;
use crate::spacing::{spacing_check_points, SpacingReport};

/// A lattice cube of side `2^-level` in `[0,1]^m`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DyadicCubeIndex {
    pub level: u32,
    pub coords: Vec<u64>,
}

impl DyadicCubeIndex {
    /// The cube containing `point`; the upper boundary folds into the
    /// last cube so `[0,1]^m` is fully covered.
    pub fn containing(point: &DVector<f64>, level: u32) -> Self {
        let cells = 1u64 << level;
        let coords = point
            .iter()
            .map(|&x| ((x * cells as f64).floor() as i64).clamp(0, cells as i64 - 1) as u64)
            .collect();
        DyadicCubeIndex { level, coords }
    }

    fn parity_color(&self) -> usize {
        self.coords
            .iter()
            .enumerate()
            .fold(0usize, |acc, (i, &c)| acc | (((c & 1) as usize) << i))
    }

    fn ancestor(&self, level: u32) -> DyadicCubeIndex {
        debug_assert!(level <= self.level);
        let shift = self.level - level;
        DyadicCubeIndex {
            level,
            coords: self.coords.iter().map(|&c| c >> shift).collect(),
        }
    }
}

struct Dsu {
    parent: Vec<usize>,
    size: Vec<usize>,
    canonical: Vec<usize>,
}

impl Dsu {
    fn new(ids: &[usize]) -> Self {
        Dsu {
            parent: (0..ids.len()).collect(),
            size: vec![1; ids.len()],
            canonical: ids.to_vec(),
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return ra;
        }
        let (big, small) = if self.size[ra] >= self.size[rb] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small] = big;
        self.size[big] += self.size[small];
        self.canonical[big] = self.canonical[big].min(self.canonical[small]);
        big
    }
}

fn validate_points(points: &[DVector<f64>]) -> Result<usize> {
    let m = points
        .first()
        .map(|p| p.len())
        .ok_or_else(|| Error::InvalidParams("empty point set".into()))?;
    for (i, p) in points.iter().enumerate() {
        if p.len() != m {
            return Err(Error::DimensionMismatch(p.len(), m));
        }
        for &x in p.iter() {
            if !(-1e-12..=1.0 + 1e-12).contains(&x) {
                return Err(Error::InvalidParams(format!(
                    "point {i} leaves [0,1]^{m}: coordinate {x}"
                )));
            }
        }
    }
    Ok(m)
}

/// Partitions `points ⊂ [0,1]^m` into subsets (as lists of input
/// indices) so that each subset satisfies `#(A' ∩ Q_r) <= (r/delta)^s`
/// for every ball of dyadic radius `r` in `[delta, 1]`.
///
/// The input must satisfy the same bound with constant `m_slack`; with
/// debug assertions enabled this is audited and violations are rejected.
pub fn frostman_partition(
    points: &[DVector<f64>],
    delta: f64,
    s: f64,
    m_slack: f64,
) -> Result<Vec<Vec<usize>>> {
    let levels = dyadic_level(delta)?;
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let m = validate_points(points)?;
    if s <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "spacing exponent must be positive, got {s}"
        )));
    }
    if cfg!(debug_assertions) {
        let report = spacing_check_points(points, delta, s, m_slack)?;
        if !report.pass {
            let w = report.worst.expect("nonempty input");
            return Err(Error::SpacingViolation {
                r: w.r,
                center: w.center,
                count: w.count,
                bound: w.bound,
            });
        }
    }

    // Stage 1: side r1 = 2^-level1 is the smallest dyadic >= 10^{m/s} delta.
    let r1 = 10f64.powf(m as f64 / s) * delta;
    let level1 = if r1 >= 1.0 {
        0
    } else {
        ((1.0 / r1).log2().floor() as u32).min(levels)
    };
    let n_pts = points.len();
    let mut stage1_key = vec![(0usize, 0usize); n_pts];
    {
        let mut rank_in_cube: HashMap<DyadicCubeIndex, usize> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            let cube = DyadicCubeIndex::containing(p, level1);
            let color = cube.parity_color();
            let rank = rank_in_cube.entry(cube).or_insert(0);
            stage1_key[i] = (color, *rank);
            *rank += 1;
        }
    }

    // Stage 2 runs inside each stage-1 part separately.
    let mut parts_by_key: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (i, key) in stage1_key.iter().enumerate() {
        parts_by_key.entry(*key).or_default().push(i);
    }
    let theta = 10f64.powi(3 * m as i32) * m_slack;
    let half_theta = theta / 2.0;

    let mut final_key: Vec<(usize, usize, usize)> = vec![(0, 0, 0); n_pts];
    let mut sorted_keys: Vec<(usize, usize)> = parts_by_key.keys().cloned().collect();
    sorted_keys.sort();
    for key in sorted_keys {
        let members = &parts_by_key[&key];
        let mut dsu = Dsu::new(members);
        // Coarsen from just above the transversal scale up to the unit cube.
        for level in (0..level1).rev() {
            let mut cubes: HashMap<DyadicCubeIndex, Vec<usize>> = HashMap::new();
            for (local, &global) in members.iter().enumerate() {
                let cube = DyadicCubeIndex::containing(&points[global], level);
                cubes.entry(cube).or_default().push(local);
            }
            let mut cube_list: Vec<&DyadicCubeIndex> = cubes.keys().collect();
            cube_list.sort_by_key(|c| c.coords.clone());
            for cube in cube_list {
                let locals = &cubes[cube];
                loop {
                    // Cliques inside this cube, small ones first by
                    // canonical identifier.
                    let mut roots: Vec<usize> = locals.iter().map(|&l| dsu.find(l)).collect();
                    roots.sort_unstable();
                    roots.dedup();
                    let mut mergeable: Vec<usize> = roots
                        .into_iter()
                        .filter(|&r| (dsu.size[r] as f64) <= half_theta)
                        .collect();
                    if mergeable.len() < 2 {
                        break;
                    }
                    mergeable.sort_by_key(|&r| dsu.canonical[r]);
                    dsu.union(mergeable[0], mergeable[1]);
                }
                if cfg!(debug_assertions) {
                    let mut roots: Vec<usize> = locals.iter().map(|&l| dsu.find(l)).collect();
                    roots.sort_unstable();
                    roots.dedup();
                    let r = 2f64.powi(-(level as i32));
                    let cap = 10f64.powi(-(m as i32)) * (r / delta).powf(s);
                    debug_assert!(
                        roots.len() as f64 <= cap.max(1.0) + 1e-9,
                        "cube at level {level}: {} cliques > {cap}",
                        roots.len()
                    );
                }
            }
        }
        // Color each clique's members apart.
        let mut clique_members: HashMap<usize, Vec<usize>> = HashMap::new();
        for (local, &global) in members.iter().enumerate() {
            let root = dsu.find(local);
            clique_members.entry(root).or_default().push(global);
        }
        for member_list in clique_members.values_mut() {
            member_list.sort_unstable();
            for (color, &global) in member_list.iter().enumerate() {
                final_key[global] = (key.0, key.1, color);
            }
        }
    }

    let mut grouped: HashMap<(usize, usize, usize), Vec<usize>> = HashMap::new();
    for (i, key) in final_key.iter().enumerate() {
        grouped.entry(*key).or_default().push(i);
    }
    let mut keys: Vec<(usize, usize, usize)> = grouped.keys().cloned().collect();
    keys.sort();
    Ok(keys.into_iter().map(|k| grouped.remove(&k).unwrap()).collect())
}

/// Upper bound on the number of parts the construction may produce.
pub fn partition_part_bound(m: usize, m_slack: f64) -> f64 {
    10f64.powi(5 * m as i32) * m_slack * m_slack
}

/// Post-audit of a partition: disjoint cover of the input and a
/// constant-1 ball audit for every part.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionAudit {
    pub disjoint_cover: bool,
    pub all_parts_pass: bool,
    pub part_reports: Vec<SpacingReport>,
}

pub fn partition_audit(
    points: &[DVector<f64>],
    parts: &[Vec<usize>],
    delta: f64,
    s: f64,
) -> Result<PartitionAudit> {
    let mut seen = vec![false; points.len()];
    let mut disjoint_cover = true;
    for part in parts {
        for &i in part {
            if i >= points.len() || seen[i] {
                disjoint_cover = false;
            } else {
                seen[i] = true;
            }
        }
    }
    disjoint_cover &= seen.iter().all(|&s| s);

    let mut part_reports = Vec::with_capacity(parts.len());
    let mut all_parts_pass = true;
    for part in parts {
        let subset: Vec<DVector<f64>> = part.iter().map(|&i| points[i].clone()).collect();
        let report = spacing_check_points(&subset, delta, s, 1.0)?;
        all_parts_pass &= report.pass;
        part_reports.push(report);
    }
    Ok(PartitionAudit {
        disjoint_cover,
        all_parts_pass,
        part_reports,
    })
}

/// Rejection-samples up to `target` points in `[0,1]^m` satisfying the
/// ball-count budget `#(A ∩ Q_r) <= (r/delta)^s` with constant 1 (used
/// to build partition inputs and random plane families). Gives up after
/// `attempts_per_point * target` draws and returns what it has.
pub fn rejection_sample_points(
    m: usize,
    delta: f64,
    s: f64,
    target: usize,
    attempts_per_point: usize,
    seed: u64,
) -> Result<Vec<DVector<f64>>> {
    let levels = dyadic_level(delta)?;
    let bounds: Vec<f64> = (0..=levels).map(|t| 2f64.powf(s * t as f64)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut accepted: Vec<DVector<f64>> = Vec::new();
    // Shell counts per accepted point: counts[i][t] = neighbors within
    // delta 2^t.
    let mut counts: Vec<Vec<usize>> = Vec::new();
    let mut attempts = 0usize;
    let max_attempts = attempts_per_point.saturating_mul(target.max(1));
    while accepted.len() < target && attempts < max_attempts {
        attempts += 1;
        let cand = DVector::from_fn(m, |_, _| rng.random::<f64>());
        let mut cand_counts = vec![0usize; levels as usize + 1];
        let mut ok = true;
        for (i, p) in accepted.iter().enumerate() {
            let d = (&cand - p).norm();
            if d > 1.0 + delta {
                continue;
            }
            // Smallest dyadic shell containing this distance.
            let mut t = 0usize;
            while (t as u32) < levels && delta * 2f64.powi(t as i32) < d {
                t += 1;
            }
            if delta * 2f64.powi(t as i32) < d {
                continue;
            }
            for shell in t..=(levels as usize) {
                cand_counts[shell] += 1;
                if (counts[i][shell] + 1) as f64 > bounds[shell] {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
        }
        if !ok {
            continue;
        }
        for shell in 0..=(levels as usize) {
            // The candidate's own ball contains itself.
            if (cand_counts[shell] + 1) as f64 > bounds[shell] {
                ok = false;
                break;
            }
        }
        if !ok {
            continue;
        }
        // Commit: update neighbor shells.
        for (i, p) in accepted.iter().enumerate() {
            let d = (&cand - p).norm();
            let mut t = 0usize;
            while (t as u32) < levels && delta * 2f64.powi(t as i32) < d {
                t += 1;
            }
            if delta * 2f64.powi(t as i32) >= d {
                for shell in t..=(levels as usize) {
                    counts[i][shell] += 1;
                }
            }
        }
        let mut with_self = cand_counts;
        for c in with_self.iter_mut() {
            *c += 1;
        }
        counts.push(with_self);
        accepted.push(cand);
    }
    Ok(accepted)
}
