//! The truncated augmented tree: every word up to a depth, its cell, and the
//! horizontal components of each level.
//!
//! Components are computed per parent component: offspring of distinct
//! components on one level can never be adjacent (their parents' cell unions
//! are disjoint), so union-find runs inside each parent's offspring set.
//! Grouping uses bucket lookups — lattice backends probe `t + s` for each
//! neighbor offset `s`, the box backend hashes lower corners on a grid of
//! pitch `side` — so expansion is near-linear in the number of words.

use std::collections::HashMap;

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

use crate::error::{Error, Result};
use crate::exact::IVec;
use crate::geometry::AdjacencyOracle;
use crate::model::{CellState, IfsSpec, Word};

/// One horizontal component of a level.
#[derive(Clone, Debug)]
pub struct TreeComponent {
    /// Word ranks of the members, ascending.
    pub members: Vec<usize>,
    /// Adjacency lists in member-local indices.
    pub adjacency: Vec<Vec<u32>>,
    /// Component id of the parent component on the previous level.
    pub parent: Option<u32>,
    /// Number of horizontal edges inside the component.
    pub edge_count: u64,
}

impl TreeComponent {
    /// Graph diameter of the component (0 for singletons).
    pub fn diameter(&self) -> u32 {
        let n = self.members.len();
        let mut best = 0;
        for start in 0..n {
            let d = self.bfs(start);
            best = best.max(*d.iter().max().unwrap());
        }
        best
    }

    fn bfs(&self, start: usize) -> Vec<u32> {
        let n = self.members.len();
        let mut dist = vec![u32::MAX; n];
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adjacency[u] {
                let v = v as usize;
                if dist[v] == u32::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Distance between two members (local indices).
    pub fn distance(&self, a: usize, b: usize) -> u32 {
        self.bfs(a)[b]
    }
}

/// One fully expanded level: `m^n` cells in word-rank order.
pub struct LevelData {
    pub cells: Vec<CellState>,
    pub component_of: Vec<u32>,
    /// Local index of each word inside its component.
    pub member_index: Vec<u32>,
    pub components: Vec<TreeComponent>,
}

impl LevelData {
    pub fn horizontal_edge_count(&self) -> u64 {
        self.components.iter().map(|c| c.edge_count).sum()
    }
}

/// The augmented tree expanded to a fixed depth.
pub struct ExploredTree {
    m: usize,
    levels: Vec<LevelData>,
}

impl ExploredTree {
    /// Expand all words to `depth`. Fails only if a component outgrows the
    /// spec's `max_component_size` cap.
    pub fn expand(spec: &IfsSpec, oracle: &AdjacencyOracle, depth: u32) -> Result<ExploredTree> {
        let m = spec.map_count();
        let root_level = LevelData {
            cells: vec![spec.root_cell()],
            component_of: vec![0],
            member_index: vec![0],
            components: vec![TreeComponent {
                members: vec![0],
                adjacency: vec![Vec::new()],
                parent: None,
                edge_count: 0,
            }],
        };
        let mut tree = ExploredTree {
            m,
            levels: vec![root_level],
        };
        for _ in 0..depth {
            let next = tree.expand_next_level(spec, oracle)?;
            tree.levels.push(next);
        }
        Ok(tree)
    }

    fn expand_next_level(&self, spec: &IfsSpec, oracle: &AdjacencyOracle) -> Result<LevelData> {
        let m = self.m;
        let prev = self.levels.last().unwrap();
        let n_words = prev.cells.len() * m;
        let mut cells: Vec<CellState> = Vec::with_capacity(n_words);
        for cell in &prev.cells {
            for digit in 1..=m {
                cells.push(spec.child_cell(cell, digit));
            }
        }

        let mut component_of = vec![u32::MAX; n_words];
        let mut member_index = vec![u32::MAX; n_words];
        let mut components: Vec<TreeComponent> = Vec::new();

        for (parent_id, parent) in prev.components.iter().enumerate() {
            // offspring ranks of this parent component, ascending
            let mut offspring: Vec<usize> = Vec::with_capacity(parent.members.len() * m);
            for &pr in &parent.members {
                for i in 0..m {
                    offspring.push(pr * m + i);
                }
            }
            offspring.sort_unstable();

            let edges = adjacency_edges(oracle, &cells, &offspring);

            // union-find over the offspring
            let mut uf: Vec<usize> = (0..offspring.len()).collect();
            for &(a, b) in &edges {
                let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
                if ra != rb {
                    uf[ra] = rb;
                }
            }

            let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
            for local in 0..offspring.len() {
                groups.entry(find(&mut uf, local)).or_default().push(local);
            }
            let mut group_list: Vec<Vec<usize>> = groups.into_values().collect();
            group_list.sort_by_key(|g| g[0]);

            let cap = spec.caps().max_component_size;
            for group in group_list {
                if group.len() as u64 > cap {
                    return Err(Error::ComponentCap(group.len() as u64, cap));
                }
                let comp_id = components.len() as u32;
                let mut local_of = HashMap::new();
                let members: Vec<usize> = group.iter().map(|&l| offspring[l]).collect();
                for (idx, &l) in group.iter().enumerate() {
                    local_of.insert(l, idx);
                    component_of[offspring[l]] = comp_id;
                    member_index[offspring[l]] = idx as u32;
                }
                let mut adjacency = vec![Vec::new(); group.len()];
                let mut edge_count = 0;
                for &(a, b) in &edges {
                    if let (Some(&ia), Some(&ib)) = (local_of.get(&a), local_of.get(&b)) {
                        adjacency[ia].push(ib as u32);
                        adjacency[ib].push(ia as u32);
                        edge_count += 1;
                    }
                }
                components.push(TreeComponent {
                    members,
                    adjacency,
                    parent: Some(parent_id as u32),
                    edge_count,
                });
            }
        }
        Ok(LevelData {
            cells,
            component_of,
            member_index,
            components,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn depth(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn level(&self, n: u32) -> &LevelData {
        &self.levels[n as usize]
    }

    pub fn cell(&self, w: &Word) -> Result<&CellState> {
        self.check_depth(w)?;
        Ok(&self.levels[w.level() as usize].cells[w.rank(self.m)])
    }

    fn check_depth(&self, w: &Word) -> Result<()> {
        if w.level() > self.depth() {
            return Err(Error::DepthExceeded(w.level(), self.depth()));
        }
        Ok(())
    }

    pub fn total_horizontal_edges(&self) -> u64 {
        self.levels.iter().map(|l| l.horizontal_edge_count()).sum()
    }

    /// Horizontal graph distance between two same-level words inside their
    /// component; `None` if they lie in different components.
    pub fn horizontal_distance(&self, level: u32, rank_a: usize, rank_b: usize) -> Option<u32> {
        let lv = &self.levels[level as usize];
        let ca = lv.component_of[rank_a];
        if ca != lv.component_of[rank_b] {
            return None;
        }
        let comp = &lv.components[ca as usize];
        Some(comp.distance(
            lv.member_index[rank_a] as usize,
            lv.member_index[rank_b] as usize,
        ))
    }

    /// Graph distance in the augmented tree `(X, E_v ∪ E_h)`: minimum over
    /// meeting levels `l` of `(|x|-l) + (|y|-l) + h_l`, where `h_l` is the
    /// horizontal distance of the level-`l` ancestors (0 if equal, absent if
    /// in different components). Geodesics never gain from descending below
    /// `min(|x|,|y|)`; the BFS oracle in the tests confirms this exactly.
    pub fn augmented_distance(&self, x: &Word, y: &Word) -> Result<u64> {
        self.check_depth(x)?;
        self.check_depth(y)?;
        self.strided_distance(x, y, 1)
    }

    /// Same, on the `k`-th iterated tree (levels restricted to multiples of
    /// `k`, each vertical step spanning `k` original levels).
    pub fn augmented_distance_strided(&self, x: &Word, y: &Word, k: u32) -> Result<u64> {
        self.check_depth(x)?;
        self.check_depth(y)?;
        if x.level() % k != 0 || y.level() % k != 0 {
            return Err(Error::Precondition(format!(
                "words must live on levels divisible by {k}"
            )));
        }
        self.strided_distance(x, y, k)
    }

    fn strided_distance(&self, x: &Word, y: &Word, k: u32) -> Result<u64> {
        let lx = x.level();
        let ly = y.level();
        let top = lx.min(ly);
        let mut best = u64::MAX;
        let mut l = top;
        loop {
            let ra = x.prefix_rank(l, self.m);
            let rb = y.prefix_rank(l, self.m);
            let vertical = ((lx - l) / k + (ly - l) / k) as u64;
            if ra == rb {
                best = best.min(vertical);
            } else if let Some(h) = self.horizontal_distance(l, ra, rb) {
                best = best.min(vertical + h as u64);
            }
            if l < k {
                break;
            }
            l -= k;
        }
        debug_assert!(best < u64::MAX);
        Ok(best)
    }

    /// Twice the Gromov product `2|x∧y| = |x| + |y| - d(x,y)` (an integer,
    /// so the product itself is a half-integer).
    pub fn gromov_product_twice(&self, x: &Word, y: &Word) -> Result<u64> {
        let d = self.augmented_distance(x, y)?;
        Ok((x.level() + y.level()) as u64 - d)
    }

    /// Distance in the plain tree `(X, E_v)`.
    pub fn tree_distance(x: &Word, y: &Word) -> u64 {
        let c = x.common_prefix_len(y);
        (x.level() - c) as u64 + (y.level() - c) as u64
    }
}

fn find(uf: &mut Vec<usize>, mut i: usize) -> usize {
    while uf[i] != i {
        uf[i] = uf[uf[i]];
        i = uf[i];
    }
    i
}

/// All adjacent pairs (as indices into `ranks`) among the given same-level
/// cells, found by bucket probing rather than all-pairs comparison.
fn adjacency_edges(
    oracle: &AdjacencyOracle,
    cells: &[CellState],
    ranks: &[usize],
) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    if let Some(set) = oracle.lattice_set() {
        // map translation -> local indices (identical cells share a key)
        let mut by_trans: HashMap<&IVec, Vec<usize>> = HashMap::new();
        for (local, &r) in ranks.iter().enumerate() {
            by_trans.entry(&cells[r].trans).or_default().push(local);
        }
        for (local, &r) in ranks.iter().enumerate() {
            let t = &cells[r].trans;
            for &other in &by_trans[t] {
                if other > local {
                    edges.push((local, other));
                }
            }
            for s in set {
                let shifted: IVec = t.iter().zip(s).map(|(a, b)| a + b).collect();
                if let Some(list) = by_trans.get(&shifted) {
                    for &other in list {
                        if other > local {
                            edges.push((local, other));
                        }
                    }
                }
            }
        }
    } else {
        let side = oracle.box_side().unwrap().clone();
        let key_of = |corner: &IVec| -> Vec<i128> {
            corner
                .iter()
                .map(|c| c.div_floor(&side).to_i128().expect("grid key fits i128"))
                .collect()
        };
        let corners: Vec<IVec> = ranks
            .iter()
            .map(|&r| oracle.realized_corner(&cells[r]))
            .collect();
        let mut buckets: HashMap<Vec<i128>, Vec<usize>> = HashMap::new();
        for (local, corner) in corners.iter().enumerate() {
            buckets.entry(key_of(corner)).or_default().push(local);
        }
        let dim = corners[0].len();
        let mut offsets: Vec<Vec<i128>> = vec![vec![]];
        for _ in 0..dim {
            offsets = offsets
                .into_iter()
                .flat_map(|v| {
                    [-1i128, 0, 1].iter().map(move |&d| {
                        let mut w = v.clone();
                        w.push(d);
                        w
                    })
                })
                .collect();
        }
        for (local, corner) in corners.iter().enumerate() {
            let key = key_of(corner);
            for off in &offsets {
                let probe: Vec<i128> = key.iter().zip(off).map(|(a, b)| a + b).collect();
                if let Some(list) = buckets.get(&probe) {
                    for &other in list {
                        if other > local
                            && corner
                                .iter()
                                .zip(&corners[other])
                                .all(|(a, b)| (a - b).abs() <= side)
                        {
                            edges.push((local, other));
                        }
                    }
                }
            }
        }
    }
    edges
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::geometry::adjacent;

    fn tree_034(depth: u32) -> (IfsSpec, AdjacencyOracle, ExploredTree) {
        let spec = IfsSpec::parse(
            r#"{"dimension":1,"matrix":[[5]],"digits":[[0],[3],[4]],
                "invariant_set":{"type":"box","corner":[0],"side":1}}"#,
        )
        .unwrap();
        let oracle = AdjacencyOracle::for_spec(&spec).unwrap();
        let tree = ExploredTree::expand(&spec, &oracle, depth).unwrap();
        (spec, oracle, tree)
    }

    fn words_of(level: u32, m: usize) -> Vec<Word> {
        (0..m.pow(level))
            .map(|r| Word::from_rank(level, r, m))
            .collect()
    }

    #[test]
    fn level_structure_matches_hand_computation() {
        let (_, _, tree) = tree_034(2);
        // level 1: components {1}, {2,3}
        let l1 = tree.level(1);
        assert_eq!(l1.components.len(), 2);
        assert_eq!(l1.components[0].members, vec![0]);
        assert_eq!(l1.components[1].members, vec![1, 2]);
        // level 2: {21}, {22,23,31}, {32,33} plus the children of 1
        let l2 = tree.level(2);
        let comp_sets: Vec<Vec<usize>> = l2.components.iter().map(|c| c.members.clone()).collect();
        // ranks: 21=3, 22=4, 23=5, 31=6, 32=7, 33=8
        assert!(comp_sets.contains(&vec![3]));
        assert!(comp_sets.contains(&vec![4, 5, 6]));
        assert!(comp_sets.contains(&vec![7, 8]));
        assert_eq!(tree.level(2).components.iter().map(|c| c.members.len()).sum::<usize>(), 9);
    }

    #[test]
    fn per_parent_expansion_equals_global_union_find() {
        // The per-component grouping must coincide with a global union-find
        // over the entire level.
        for cfg in [
            r#"{"dimension":1,"matrix":[[5]],"digits":[[0],[3],[4]],
                "invariant_set":{"type":"box","corner":[0],"side":1}}"#,
            r#"{"dimension":1,"matrix":[[5]],"digits":[[0],[4],[4]],
                "linear_parts":[[[1]],[[-1]],[[1]]],
                "invariant_set":{"type":"box","corner":[0],"side":1}}"#,
            r#"{"dimension":2,"matrix":[[5,0],[0,5]],
                "digits":[[0,0],["18/5",0],[4,0],[0,2],[0,3]],
                "invariant_set":{"type":"box","corner":[0,0],"side":1}}"#,
        ] {
            let spec = IfsSpec::parse(cfg).unwrap();
            let oracle = AdjacencyOracle::for_spec(&spec).unwrap();
            let tree = ExploredTree::expand(&spec, &oracle, 4).unwrap();
            for level in 1..=4u32 {
                let lv = tree.level(level);
                let n = lv.cells.len();
                let mut uf: Vec<usize> = (0..n).collect();
                for a in 0..n {
                    for b in a + 1..n {
                        if adjacent(&oracle, &lv.cells[a], &lv.cells[b]).unwrap() {
                            let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
                            if ra != rb {
                                uf[ra] = rb;
                            }
                        }
                    }
                }
                for a in 0..n {
                    for b in 0..n {
                        let same_global = find(&mut uf, a) == find(&mut uf, b);
                        let same_local = lv.component_of[a] == lv.component_of[b];
                        assert_eq!(same_global, same_local, "level {level}: {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn augmented_distance_examples() {
        let (_, _, tree) = tree_034(4);
        let w = |ds: &[u8]| Word::from_digits(ds, 3).unwrap();
        assert_eq!(tree.augmented_distance(&w(&[2]), &w(&[3])).unwrap(), 1);
        assert_eq!(tree.augmented_distance(&w(&[2, 1]), &w(&[3, 1])).unwrap(), 3);
        assert_eq!(tree.augmented_distance(&w(&[2]), &w(&[2])).unwrap(), 0);
        assert_eq!(tree.augmented_distance(&w(&[2, 1]), &w(&[2])).unwrap(), 1);
        // Gromov products: 2|2∧3| = 1, 2|21∧31| = 1
        assert_eq!(tree.gromov_product_twice(&w(&[2]), &w(&[3])).unwrap(), 1);
        assert_eq!(
            tree.gromov_product_twice(&w(&[2, 1]), &w(&[3, 1])).unwrap(),
            1
        );
        // outside explored depth
        assert!(tree
            .augmented_distance(&w(&[1, 1, 1, 1, 1]), &w(&[1]))
            .is_err());
    }

    /// Independent BFS oracle on the explicit truncated graph
    /// (all words to `max(|x|,|y|) + buffer`, vertical and horizontal edges).
    pub(crate) fn bfs_oracle(tree: &ExploredTree, buffer: u32, x: &Word, y: &Word) -> u64 {
        let m = tree.m();
        let max_level = (x.level().max(y.level()) + buffer).min(tree.depth());
        let mut offsets = vec![0usize];
        for l in 0..=max_level {
            offsets.push(offsets[l as usize] + m.pow(l));
        }
        let n = offsets[max_level as usize + 1];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for l in 0..=max_level {
            let base = offsets[l as usize];
            if l > 0 {
                let parent_base = offsets[l as usize - 1];
                for r in 0..m.pow(l) {
                    adj[base + r].push(parent_base + r / m);
                    adj[parent_base + r / m].push(base + r);
                }
            }
            for comp in &tree.level(l).components {
                for (local, nbrs) in comp.adjacency.iter().enumerate() {
                    for &other in nbrs {
                        adj[base + comp.members[local]].push(base + comp.members[other as usize]);
                    }
                }
            }
        }
        let start = offsets[x.level() as usize] + x.rank(m);
        let goal = offsets[y.level() as usize] + y.rank(m);
        let mut dist = vec![u64::MAX; n];
        dist[start] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            if u == goal {
                break;
            }
            for &v in &adj[u] {
                if dist[v] == u64::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist[goal]
    }

    #[test]
    fn distance_formula_matches_bfs_oracle() {
        let (_, _, tree) = tree_034(5);
        let words: Vec<Word> = (0..=3u32).flat_map(|l| words_of(l, 3)).collect();
        for x in &words {
            for y in &words {
                let fast = tree.augmented_distance(x, y).unwrap();
                let slow = bfs_oracle(&tree, 2, x, y);
                assert_eq!(fast, slow, "{x} vs {y}");
                // stability under a larger truncation buffer
                assert_eq!(slow, bfs_oracle(&tree, 4, x, y), "{x} vs {y} buffer");
            }
        }
    }
}
