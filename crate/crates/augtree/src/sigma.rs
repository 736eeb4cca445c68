//! The level-preserving bijection σ from the augmented tree onto the plain
//! tree, built from rearrangement certificates, and its distortion audit.
//!
//! σ is defined inductively: identity on the root and on level one of the
//! iterated alphabet, and for a component `T` of class `i` whose members
//! already map to siblings, the offspring components of `T` are pooled into
//! `b_i` groups by the class-`i` certificate row (pool `s` takes `C[s][j]`
//! components of class `j` in canonical order); pool `s`, which has exactly
//! `m^k` words, is assigned in word order to the `m^k` children of the image
//! of member `s`. Every choice is canonical, so σ is deterministic given the
//! certificates.

use serde::Serialize;

use crate::classify::{signature_of, Classification, Component};
use crate::error::{Error, Result};
use crate::geometry::AdjacencyOracle;
use crate::model::{IfsSpec, Word};
use crate::rearrange::PowerCertificate;
use crate::tree::ExploredTree;

/// Audit record: which offspring components were pooled under which parent.
#[derive(Clone, Debug, Serialize)]
pub struct PoolRecord {
    pub tree_level: u32,
    pub component: Vec<String>,
    pub class_index: usize,
    pub pools: Vec<PoolDetail>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PoolDetail {
    pub target_parent: String,
    pub offspring_components: Vec<String>,
}

/// Level-indexed bijection on the `k`-th iterated alphabet.
pub struct SigmaMap {
    iteration: u32,
    m: usize,
    /// `levels[n][rank] = σ(rank)` on iterated level `n` (tree level `k·n`).
    levels: Vec<Vec<u32>>,
    pub pools: Vec<PoolRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DistortionAudit {
    pub pairs_checked: u64,
    pub max_distortion: u64,
    /// Proven bound `k + 2` (`k` the horizontal-geodesic bound).
    pub bound: u64,
    pub within_bound: bool,
}

impl SigmaMap {
    pub fn iteration(&self) -> u32 {
        self.iteration
    }

    /// Depth in iterated levels.
    pub fn depth(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    fn block(&self) -> usize {
        self.m.pow(self.iteration)
    }

    pub fn apply(&self, w: &Word) -> Result<Word> {
        let k = self.iteration;
        if w.level() % k != 0 {
            return Err(Error::Precondition(format!(
                "σ is defined on levels divisible by {k}"
            )));
        }
        let n = (w.level() / k) as usize;
        if n >= self.levels.len() {
            return Err(Error::DepthExceeded(w.level(), self.depth() * k));
        }
        let mapped = self.levels[n][w.rank(self.m)] as usize;
        Ok(Word::from_rank(w.level(), mapped, self.m))
    }

    /// Per-level permutation tables (iterated levels).
    pub fn permutation_tables(&self) -> &[Vec<u32>] {
        &self.levels
    }

    /// Every level map is a bijection (pigeonhole-checked).
    pub fn check_level_bijections(&self) -> bool {
        self.levels.iter().all(|table| {
            let mut seen = vec![false; table.len()];
            table.iter().all(|&t| {
                let t = t as usize;
                t < seen.len() && !std::mem::replace(&mut seen[t], true)
            })
        })
    }

    /// Sibling property: for every horizontal component on an iterated
    /// level, all σ-images share one parent.
    pub fn check_sibling_property(&self, tree: &ExploredTree) -> Result<bool> {
        let k = self.iteration;
        let block = self.block();
        for n in 1..=self.depth() {
            let tree_level = n * k;
            if tree_level > tree.depth() {
                return Err(Error::DepthExceeded(tree_level, tree.depth()));
            }
            for comp in &tree.level(tree_level).components {
                let parents: Vec<usize> = comp
                    .members
                    .iter()
                    .map(|&r| self.levels[n as usize][r] as usize / block)
                    .collect();
                if parents.windows(2).any(|w| w[0] != w[1]) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Exhaustive distortion check over all pairs of iterated words up to
    /// `max_iter_level`: `|d_tree(σx, σy) - d_aug(x, y)| <= bound`.
    pub fn verify_near_isometry(
        &self,
        tree: &ExploredTree,
        horizontal_bound: u32,
        max_iter_level: u32,
    ) -> Result<DistortionAudit> {
        let k = self.iteration;
        let m = self.m;
        let top = max_iter_level.min(self.depth());
        let mut words: Vec<(u32, usize)> = Vec::new();
        for n in 0..=top {
            for r in 0..m.pow(n * k) {
                words.push((n, r));
            }
        }
        let mut max_distortion = 0u64;
        let mut pairs = 0u64;
        for (i, &(nx, rx)) in words.iter().enumerate() {
            let x = Word::from_rank(nx * k, rx, m);
            let sx = Word::from_rank(nx * k, self.levels[nx as usize][rx] as usize, m);
            for &(ny, ry) in &words[i + 1..] {
                let y = Word::from_rank(ny * k, ry, m);
                let sy = Word::from_rank(ny * k, self.levels[ny as usize][ry] as usize, m);
                let d_aug = tree.augmented_distance_strided(&x, &y, k)?;
                let d_tree = iterated_tree_distance(&sx, &sy, k);
                let distortion = d_tree.abs_diff(d_aug);
                max_distortion = max_distortion.max(distortion);
                pairs += 1;
            }
        }
        let bound = horizontal_bound as u64 + 2;
        Ok(DistortionAudit {
            pairs_checked: pairs,
            max_distortion,
            bound,
            within_bound: max_distortion <= bound,
        })
    }

    /// Same check with the outer pair loop split across threads. The result
    /// is a max-reduction, so the outcome is identical to the sequential run.
    pub fn verify_near_isometry_threaded(
        &self,
        tree: &ExploredTree,
        horizontal_bound: u32,
        max_iter_level: u32,
        threads: usize,
    ) -> Result<DistortionAudit> {
        if threads <= 1 {
            return self.verify_near_isometry(tree, horizontal_bound, max_iter_level);
        }
        let k = self.iteration;
        let m = self.m;
        let top = max_iter_level.min(self.depth());
        let mut words: Vec<(u32, usize)> = Vec::new();
        for n in 0..=top {
            for r in 0..m.pow(n * k) {
                words.push((n, r));
            }
        }
        let n_words = words.len();
        let chunk = n_words.div_ceil(threads);
        let results: Vec<Result<(u64, u64)>> = std::thread::scope(|scope| {
            let mut handles = Vec::new();
            for t in 0..threads {
                let lo = t * chunk;
                let hi = ((t + 1) * chunk).min(n_words);
                if lo >= hi {
                    break;
                }
                let words = &words;
                handles.push(scope.spawn(move || {
                    let mut max_distortion = 0u64;
                    let mut pairs = 0u64;
                    for i in lo..hi {
                        let (nx, rx) = words[i];
                        let x = Word::from_rank(nx * k, rx, m);
                        let sx =
                            Word::from_rank(nx * k, self.levels[nx as usize][rx] as usize, m);
                        for &(ny, ry) in &words[i + 1..] {
                            let y = Word::from_rank(ny * k, ry, m);
                            let sy = Word::from_rank(
                                ny * k,
                                self.levels[ny as usize][ry] as usize,
                                m,
                            );
                            let d_aug = tree.augmented_distance_strided(&x, &y, k)?;
                            let d_tree = iterated_tree_distance(&sx, &sy, k);
                            max_distortion = max_distortion.max(d_tree.abs_diff(d_aug));
                            pairs += 1;
                        }
                    }
                    Ok((max_distortion, pairs))
                }));
            }
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        });
        let mut max_distortion = 0u64;
        let mut pairs = 0u64;
        for r in results {
            let (d, p) = r?;
            max_distortion = max_distortion.max(d);
            pairs += p;
        }
        let bound = horizontal_bound as u64 + 2;
        Ok(DistortionAudit {
            pairs_checked: pairs,
            max_distortion,
            bound,
            within_bound: max_distortion <= bound,
        })
    }
}

/// Plain-tree distance on the `k`-th iterated tree: vertical steps span `k`
/// levels, confluence is the longest common prefix of whole `k`-blocks.
pub fn iterated_tree_distance(x: &Word, y: &Word, k: u32) -> u64 {
    let common = x.common_prefix_len(y) / k;
    ((x.level() / k - common) + (y.level() / k - common)) as u64
}

/// Build σ to `depth` iterated levels from a simple classification and a full
/// set of row certificates for `A^k` with target `m^k`.
pub fn build_sigma(
    spec: &IfsSpec,
    oracle: &AdjacencyOracle,
    tree: &ExploredTree,
    classification: &Classification,
    certificate: &PowerCertificate,
    depth: u32,
) -> Result<SigmaMap> {
    if !classification.is_simple() {
        return Err(Error::Precondition(
            "σ construction requires a simple classification".into(),
        ));
    }
    let k = certificate.k;
    let m = spec.map_count();
    let block = m.pow(k);
    if tree.depth() < depth * k {
        return Err(Error::DepthExceeded(depth * k, tree.depth()));
    }
    for (i, row) in certificate.rows.iter().enumerate() {
        if row.groups.len() != classification.b[i] as usize {
            return Err(Error::CertificateMismatch(format!(
                "row {i} has {} groups, expected b_{} = {}",
                row.groups.len(),
                i + 1,
                classification.b[i]
            )));
        }
    }

    let mut levels: Vec<Vec<u32>> = vec![vec![0]];
    if depth >= 1 {
        levels.push((0..block as u32).collect());
    }
    let mut pools_audit: Vec<PoolRecord> = Vec::new();

    for n in 1..depth {
        let tree_level = n * k;
        let child_level = tree_level + k;
        let child_count = m.pow(child_level);
        let mut next = vec![u32::MAX; child_count];

        let level_data = tree.level(tree_level);
        for (comp_id, comp) in level_data.components.iter().enumerate() {
            // class of this component
            let component = Component {
                level: tree_level,
                members: comp
                    .members
                    .iter()
                    .map(|&r| {
                        let w = Word::from_rank(tree_level, r, m);
                        let cell = level_data.cells[r].clone();
                        (w, cell)
                    })
                    .collect(),
            };
            let sig = signature_of(oracle, &component);
            let class = classification.class_of_signature(&sig).ok_or_else(|| {
                Error::CertificateMismatch(format!(
                    "component at level {tree_level} has a signature outside the classification"
                ))
            })?;
            let b_i = classification.b[class] as usize;
            if comp.members.len() != b_i {
                return Err(Error::CertificateMismatch(format!(
                    "component size {} does not match class b = {b_i}",
                    comp.members.len()
                )));
            }

            // offspring components of this component, k levels down
            let mut offspring: Vec<usize> = Vec::new();
            for (cid, c) in tree.level(child_level).components.iter().enumerate() {
                let mut ancestor = c.parent;
                let mut lvl = child_level - 1;
                while lvl > tree_level {
                    ancestor = tree.level(lvl).components[ancestor.unwrap() as usize].parent;
                    lvl -= 1;
                }
                if ancestor == Some(comp_id as u32) {
                    offspring.push(cid);
                }
            }
            offspring.sort_by_key(|&cid| tree.level(child_level).components[cid].members[0]);

            // queue per class, canonical order
            let r = classification.class_count();
            let mut queues: Vec<std::collections::VecDeque<usize>> =
                vec![std::collections::VecDeque::new(); r];
            for &cid in &offspring {
                let c = &tree.level(child_level).components[cid];
                let oc = Component {
                    level: child_level,
                    members: c
                        .members
                        .iter()
                        .map(|&rk| {
                            (
                                Word::from_rank(child_level, rk, m),
                                tree.level(child_level).cells[rk].clone(),
                            )
                        })
                        .collect(),
                };
                let osig = signature_of(oracle, &oc);
                let oclass = classification.class_of_signature(&osig).ok_or_else(|| {
                    Error::CertificateMismatch(
                        "offspring signature outside the classification".into(),
                    )
                })?;
                queues[oclass].push_back(cid);
            }
            for (j, queue) in queues.iter().enumerate() {
                if queue.len() as u64 != certificate.matrix_power[class][j] {
                    return Err(Error::CertificateMismatch(format!(
                        "class {} component has {} offspring of class {}, matrix says {}",
                        class + 1,
                        queue.len(),
                        j + 1,
                        certificate.matrix_power[class][j]
                    )));
                }
            }

            let mut audit_pools = Vec::with_capacity(b_i);
            for (s, pool_row) in certificate.rows[class].groups.iter().enumerate() {
                let member_rank = comp.members[s];
                let target_parent = levels[n as usize][member_rank] as usize;
                let mut pool_words: Vec<usize> = Vec::with_capacity(block);
                let mut pooled_components = Vec::new();
                for (j, &take) in pool_row.iter().enumerate() {
                    for _ in 0..take {
                        let cid = queues[j].pop_front().ok_or_else(|| {
                            Error::CertificateMismatch(format!(
                                "certificate consumes more class-{} components than exist",
                                j + 1
                            ))
                        })?;
                        let c = &tree.level(child_level).components[cid];
                        pooled_components
                            .push(Word::from_rank(child_level, c.members[0], m).to_string());
                        pool_words.extend(c.members.iter().copied());
                    }
                }
                if pool_words.len() != block {
                    return Err(Error::CertificateMismatch(format!(
                        "pool has {} words, expected m^k = {block}",
                        pool_words.len()
                    )));
                }
                pool_words.sort_unstable();
                for (idx, &w) in pool_words.iter().enumerate() {
                    next[w] = (target_parent * block + idx) as u32;
                }
                audit_pools.push(PoolDetail {
                    target_parent: Word::from_rank(tree_level, target_parent, m).to_string(),
                    offspring_components: pooled_components,
                });
            }
            if queues.iter().any(|q| !q.is_empty()) {
                return Err(Error::CertificateMismatch(
                    "certificate left offspring components unassigned".into(),
                ));
            }
            pools_audit.push(PoolRecord {
                tree_level,
                component: component
                    .members
                    .iter()
                    .map(|(w, _)| w.to_string())
                    .collect(),
                class_index: class + 1,
                pools: audit_pools,
            });
        }
        debug_assert!(next.iter().all(|&v| v != u32::MAX));
        levels.push(next);
    }

    Ok(SigmaMap {
        iteration: k,
        m,
        levels,
        pools: pools_audit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify, tests::{setup, CFG_024, CFG_034, CFG_REFL}};
    use crate::rearrange::{rearrange_power, PowerOutcome, DEFAULT_NODE_BUDGET};

    fn build(cfg: &str, depth: u32) -> (IfsSpec, AdjacencyOracle, ExploredTree, Classification, SigmaMap) {
        let (spec, oracle) = setup(cfg);
        let c = classify(&spec, &oracle).unwrap();
        let cert = match rearrange_power(&c.matrix, &c.b, c.m as u64, 6, DEFAULT_NODE_BUDGET)
            .unwrap()
        {
            PowerOutcome::Certified(cert) => cert,
            PowerOutcome::Failed(_) => panic!("fixture must be rearrangeable"),
        };
        let tree = ExploredTree::expand(&spec, &oracle, depth * cert.k).unwrap();
        let sigma = build_sigma(&spec, &oracle, &tree, &c, &cert, depth).unwrap();
        (spec, oracle, tree, c, sigma)
    }

    #[test]
    fn identity_on_level_one_and_root() {
        let (_, _, _, _, sigma) = build(CFG_034, 3);
        assert_eq!(sigma.permutation_tables()[0], vec![0]);
        assert_eq!(sigma.permutation_tables()[1], vec![0, 1, 2]);
    }

    #[test]
    fn dust_like_sigma_is_identity() {
        let (_, _, tree, c, sigma) = build(CFG_024, 4);
        for (n, table) in sigma.permutation_tables().iter().enumerate() {
            for (i, &v) in table.iter().enumerate() {
                assert_eq!(i as u32, v, "level {n}");
            }
        }
        let audit = sigma.verify_near_isometry(&tree, c.horizontal_bound, 3).unwrap();
        assert_eq!(audit.max_distortion, 0);
    }

    #[test]
    fn interval_system_level_two_pooling() {
        // component {2,3} (class 2): pools from certificate row a_2 = [1,1,1]
        let (_, _, tree, c, sigma) = build(CFG_034, 4);
        assert!(sigma.check_level_bijections());
        assert!(sigma.check_sibling_property(&tree).unwrap());
        // each pool of the {2,3} expansion has exactly m = 3 words and the
        // two pools land under the two distinct parents 2 and 3
        let rec = sigma
            .pools
            .iter()
            .find(|p| p.component == vec!["2", "3"])
            .expect("component {2,3} is explored");
        assert_eq!(rec.class_index, 2);
        assert_eq!(rec.pools.len(), 2);
        let parents: Vec<&str> = rec.pools.iter().map(|p| p.target_parent.as_str()).collect();
        assert_eq!(parents, vec!["2", "3"]);
        let _ = c;
    }

    #[test]
    fn distortion_bound_holds() {
        let (_, _, tree, c, sigma) = build(CFG_034, 5);
        let audit = sigma.verify_near_isometry(&tree, c.horizontal_bound, 4).unwrap();
        assert!(audit.within_bound, "distortion {} over bound {}", audit.max_distortion, audit.bound);
        assert_eq!(audit.bound, 4); // k = 2 for this system
        assert!(audit.pairs_checked > 5000);
    }

    #[test]
    fn reflected_system_has_no_sigma() {
        let (spec, oracle) = setup(CFG_REFL);
        let c = classify(&spec, &oracle).unwrap();
        match rearrange_power(&c.matrix, &c.b, c.m as u64, 3, DEFAULT_NODE_BUDGET).unwrap() {
            PowerOutcome::Failed(att) => assert_eq!(att.len(), 3),
            PowerOutcome::Certified(_) => panic!("must not certify"),
        }
    }

    #[test]
    fn sigma_at_iteration_two() {
        // force k = 2 by certifying A² with target m²
        let (spec, oracle) = setup(CFG_034);
        let c = classify(&spec, &oracle).unwrap();
        let a2 = vec![vec![2, 2, 1], vec![3, 3, 3], vec![4, 4, 5]];
        let cert = match rearrange_power(&c.matrix, &c.b, 3, 2, DEFAULT_NODE_BUDGET).unwrap() {
            PowerOutcome::Certified(mut k1) => {
                // bump to k = 2 via a fresh search at target 9
                let rows: Vec<_> = a2
                    .iter()
                    .map(|row| {
                        crate::rearrange::rearrange_row(row, &c.b, 9, DEFAULT_NODE_BUDGET)
                            .unwrap()
                            .certificate()
                            .unwrap()
                            .clone()
                    })
                    .collect();
                k1.k = 2;
                k1.target = 9;
                k1.matrix_power = a2.clone();
                k1.rows = rows;
                k1
            }
            PowerOutcome::Failed(_) => unreachable!(),
        };
        let tree = ExploredTree::expand(&spec, &oracle, 6).unwrap();
        let sigma = build_sigma(&spec, &oracle, &tree, &c, &cert, 3).unwrap();
        assert_eq!(sigma.iteration(), 2);
        assert!(sigma.check_level_bijections());
        assert!(sigma.check_sibling_property(&tree).unwrap());
        let audit = sigma.verify_near_isometry(&tree, c.horizontal_bound, 2).unwrap();
        assert!(audit.within_bound);
    }
}
