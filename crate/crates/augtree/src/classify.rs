//! Connected classes of horizontal components and the incidence matrix.
//!
//! Components are classified by a translation-normalized *signature*: the
//! multiset of members' `(linear part, translation)` pairs with the
//! translation of the lexicographically-least realized corner subtracted.
//! Equal signatures mean the two cell configurations are exact translates of
//! one another, which forces equal connectivity structure at every deeper
//! level, so signature classes are always consistent. Classification is a
//! worklist closure: expand one representative per unseen signature, record
//! its offspring class counts as a matrix row, and stop when no new
//! signatures appear (verdict `Simple`) or a cap is hit.
//!
//! One-level graph-isomorphism merging (`merge_isomorphic`) can coarsen the
//! signature classes; it is validated and refused per group when merged
//! members disagree on their merged offspring rows.

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::exact::{ivec_sub, IVec};
use crate::geometry::{adjacent, AdjacencyOracle};
use crate::model::{CellState, IfsSpec, Word};

/// A horizontal component: same-level words with their cells, sorted by word.
#[derive(Clone, Debug)]
pub struct Component {
    pub level: u32,
    pub members: Vec<(Word, CellState)>,
}

impl Component {
    pub fn root(spec: &IfsSpec) -> Component {
        Component {
            level: 0,
            members: vec![(Word::root(), spec.root_cell())],
        }
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    /// Adjacency lists among members (local indices).
    fn adjacency(&self, oracle: &AdjacencyOracle) -> Result<Vec<Vec<u32>>> {
        let n = self.members.len();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if adjacent(oracle, &self.members[i].1, &self.members[j].1)? {
                    adj[i].push(j as u32);
                    adj[j].push(i as u32);
                }
            }
        }
        Ok(adj)
    }

    /// Graph diameter under the member adjacency (0 for singletons).
    pub fn diameter(&self, oracle: &AdjacencyOracle) -> Result<u32> {
        let adj = self.adjacency(oracle)?;
        let n = self.members.len();
        let mut best = 0u32;
        for s in 0..n {
            let mut dist = vec![u32::MAX; n];
            dist[s] = 0;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &adj[u] {
                    let v = v as usize;
                    if dist[v] == u32::MAX {
                        dist[v] = dist[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            best = best.max(*dist.iter().max().unwrap());
        }
        Ok(best)
    }
}

/// Translation-normalized canonical form of a component. Components whose
/// cell configurations differ by an integer translation get equal signatures.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct Signature {
    items: Vec<(Vec<i8>, IVec)>,
}

impl Signature {
    pub fn member_count(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[(Vec<i8>, IVec)] {
        &self.items
    }
}

/// Canonical signature: anchor at the member whose realized corner is
/// lexicographically least (ties broken by the linear-part encoding — equal
/// corner and equal linear part force an equal translation).
pub fn signature_of(oracle: &AdjacencyOracle, component: &Component) -> Signature {
    let anchor = component
        .members
        .iter()
        .map(|(_, c)| (oracle.realized_corner(c), c.linear.encode(), c.trans.clone()))
        .min()
        .expect("component is nonempty");
    let t0 = anchor.2;
    let mut items: Vec<(Vec<i8>, IVec)> = component
        .members
        .iter()
        .map(|(_, c)| (c.linear.encode(), ivec_sub(&c.trans, &t0)))
        .collect();
    items.sort();
    Signature { items }
}

/// Partition the `m·#T` offspring of a component into maximal
/// adjacency-connected groups, in canonical order (by minimal member word).
pub fn expand_component(
    spec: &IfsSpec,
    oracle: &AdjacencyOracle,
    component: &Component,
) -> Result<Vec<Component>> {
    let m = spec.map_count();
    let mut children: Vec<(Word, CellState)> = Vec::with_capacity(component.size() * m);
    for (w, cell) in &component.members {
        for digit in 1..=m {
            children.push((w.child(digit as u8), spec.child_cell(cell, digit)));
        }
    }
    children.sort_by(|a, b| a.0.cmp(&b.0));

    let n = children.len();
    let mut uf: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in i + 1..n {
            if adjacent(oracle, &children[i].1, &children[j].1)? {
                let (ri, rj) = (find(&mut uf, i), find(&mut uf, j));
                if ri != rj {
                    uf[ri] = rj;
                }
            }
        }
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..n {
        groups.entry(find(&mut uf, i)).or_default().push(i);
    }
    let mut group_list: Vec<Vec<usize>> = groups.into_values().collect();
    group_list.sort_by_key(|g| g[0]);

    let cap = spec.caps().max_component_size;
    group_list
        .into_iter()
        .map(|g| {
            if g.len() as u64 > cap {
                return Err(Error::ComponentCap(g.len() as u64, cap));
            }
            Ok(Component {
                level: component.level + 1,
                members: g.into_iter().map(|i| children[i].clone()).collect(),
            })
        })
        .collect()
}

fn find(uf: &mut Vec<usize>, mut i: usize) -> usize {
    while uf[i] != i {
        uf[i] = uf[uf[i]];
        i = uf[i];
    }
    i
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeVerdict {
    /// The signature set closed under expansion: finitely many classes.
    Simple,
    /// Depth cap hit with unexpanded signatures remaining.
    NotSimpleUpToDepth,
    /// Class-count or component-size cap exceeded.
    CapExceeded,
}

#[derive(Clone, Debug)]
pub struct ClassInfo {
    pub signature: Signature,
    pub b: u64,
    pub representative: Component,
    pub discovered_level: u32,
    pub diameter: u32,
}

/// Outcome of the isomorphism-merging pass.
#[derive(Clone, Debug, Default)]
pub struct MergeInfo {
    /// Accepted groups of original class indices (each sorted ascending).
    pub groups: Vec<Vec<usize>>,
    /// Isomorphic groups refused because members disagreed on merged rows.
    pub refused: Vec<Vec<usize>>,
    pub warning: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: TreeVerdict,
    pub classes: Vec<ClassInfo>,
    /// Incidence matrix rows for the expanded classes (all of them when the
    /// verdict is `Simple`; a prefix otherwise).
    pub matrix: Vec<Vec<u64>>,
    pub b: Vec<u64>,
    pub m: usize,
    /// Max horizontal-geodesic length over explored components
    /// (max component diameter).
    pub horizontal_bound: u32,
    pub max_component_size: u64,
    pub merge: Option<MergeInfo>,
    signature_index: HashMap<Signature, usize>,
}

impl Classification {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn class_of_signature(&self, sig: &Signature) -> Option<usize> {
        self.signature_index.get(sig).copied()
    }

    pub fn is_simple(&self) -> bool {
        self.verdict == TreeVerdict::Simple
    }

    /// No horizontal edge can ever occur: the classification closed and every
    /// class is a singleton.
    pub fn is_dust_like(&self) -> bool {
        self.is_simple() && self.max_component_size == 1
    }
}

/// Worklist closure over unexplored signatures, starting from the root.
///
/// New classes discovered while expanding one representative are numbered by
/// ascending member count, ties broken by canonical component order. Class 1
/// is always the root class (`b_1 = 1`).
pub fn classify(spec: &IfsSpec, oracle: &AdjacencyOracle) -> Result<Classification> {
    let root = Component::root(spec);
    let root_sig = signature_of(oracle, &root);
    let mut classes = vec![ClassInfo {
        signature: root_sig.clone(),
        b: 1,
        representative: root,
        discovered_level: 0,
        diameter: 0,
    }];
    let mut sig_index: HashMap<Signature, usize> = HashMap::from([(root_sig, 0usize)]);
    let mut rows: Vec<Vec<u64>> = Vec::new();
    let mut verdict = TreeVerdict::Simple;

    let mut next = 0usize;
    while next < classes.len() {
        let ci = next;
        next += 1;
        if classes[ci].representative.level >= spec.caps().max_depth {
            verdict = TreeVerdict::NotSimpleUpToDepth;
            break;
        }
        let offspring = match expand_component(spec, oracle, &classes[ci].representative) {
            Ok(o) => o,
            Err(Error::ComponentCap(..)) => {
                verdict = TreeVerdict::CapExceeded;
                break;
            }
            Err(e) => return Err(e),
        };

        let mut offspring_sigs: Vec<Signature> = Vec::with_capacity(offspring.len());
        let mut fresh: Vec<(Signature, Component)> = Vec::new();
        for comp in &offspring {
            let sig = signature_of(oracle, comp);
            if !sig_index.contains_key(&sig) && fresh.iter().all(|(s, _)| *s != sig) {
                fresh.push((sig.clone(), comp.clone()));
            }
            offspring_sigs.push(sig);
        }
        fresh.sort_by_key(|(_, comp)| comp.size()); // stable: ties keep scan order
        for (sig, comp) in fresh {
            if classes.len() >= spec.caps().max_classes {
                verdict = TreeVerdict::CapExceeded;
                break;
            }
            let idx = classes.len();
            sig_index.insert(sig.clone(), idx);
            classes.push(ClassInfo {
                b: comp.size() as u64,
                diameter: comp.diameter(oracle)?,
                discovered_level: comp.level,
                signature: sig,
                representative: comp,
            });
        }
        if verdict == TreeVerdict::CapExceeded {
            break;
        }
        let mut row = vec![0u64; classes.len()];
        for sig in &offspring_sigs {
            row[sig_index[sig]] += 1;
        }
        rows.push(row);
    }

    let r = classes.len();
    for row in &mut rows {
        row.resize(r, 0);
    }
    let b: Vec<u64> = classes.iter().map(|c| c.b).collect();
    let horizontal_bound = classes.iter().map(|c| c.diameter).max().unwrap_or(0);
    let max_component_size = classes.iter().map(|c| c.b).max().unwrap_or(1);
    Ok(Classification {
        verdict,
        matrix: rows,
        b,
        m: spec.map_count(),
        horizontal_bound,
        max_component_size,
        merge: None,
        signature_index: sig_index,
        classes,
    })
}

// ---------------------------------------------------------------------------
// Incidence-matrix analysis
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IncidenceAnalysis {
    /// `A·b = m·b` exactly.
    pub eigen_ok: bool,
    /// Least exponent `n` with `A^n > 0`, if one exists.
    pub primitive: Option<u64>,
    pub irreducible: bool,
}

/// Exact eigen check, primitivity with least witness exponent (bounded by the
/// Wielandt exponent `(r-1)² + 1`), and irreducibility via reachability.
pub fn analyze_matrix(matrix: &[Vec<u64>], b: &[u64], m: u64) -> Result<IncidenceAnalysis> {
    let r = matrix.len();
    if r == 0 || matrix.iter().any(|row| row.len() != r) || b.len() != r {
        return Err(Error::Dimension(format!(
            "matrix must be square and match b (r = {r}, b has {})",
            b.len()
        )));
    }
    let eigen_ok = (0..r).all(|i| {
        let lhs: Option<u64> = matrix[i]
            .iter()
            .zip(b)
            .try_fold(0u64, |acc, (a, w)| a.checked_mul(*w)?.checked_add(acc));
        lhs == m.checked_mul(b[i])
    });

    let adj: Vec<Vec<bool>> = matrix
        .iter()
        .map(|row| row.iter().map(|&x| x > 0).collect())
        .collect();
    let irreducible = strongly_connected(&adj);
    let primitive = if irreducible {
        primitivity_witness(&adj)
    } else {
        None
    };
    Ok(IncidenceAnalysis {
        eigen_ok,
        primitive,
        irreducible,
    })
}

fn strongly_connected(adj: &[Vec<bool>]) -> bool {
    let r = adj.len();
    let reach = |flip: bool| {
        let mut seen = vec![false; r];
        seen[0] = true;
        let mut stack = vec![0usize];
        while let Some(u) = stack.pop() {
            for v in 0..r {
                let edge = if flip { adj[v][u] } else { adj[u][v] };
                if edge && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reach(false) && reach(true)
}

/// Least `n` with `A^n > 0`, or None. Once some power is all-positive, every
/// larger power is too (an all-positive power excludes zero rows and zero
/// columns), so the least witness is found by checking one power of two past
/// the Wielandt bound and binary-searching below it.
fn primitivity_witness(adj: &[Vec<bool>]) -> Option<u64> {
    let r = adj.len();
    let blocks = r.div_ceil(64);
    let pack = |m: &[Vec<bool>]| -> Vec<u64> {
        let mut bits = vec![0u64; r * blocks];
        for i in 0..r {
            for j in 0..r {
                if m[i][j] {
                    bits[i * blocks + j / 64] |= 1 << (j % 64);
                }
            }
        }
        bits
    };
    let full_row: Vec<u64> = {
        let mut v = vec![u64::MAX; blocks];
        if r % 64 != 0 {
            v[blocks - 1] = (1u64 << (r % 64)) - 1;
        }
        v
    };
    let all_positive =
        |bits: &Vec<u64>| (0..r).all(|i| bits[i * blocks..(i + 1) * blocks] == full_row);
    let multiply = |a: &Vec<u64>, b: &Vec<u64>| -> Vec<u64> {
        let mut out = vec![0u64; r * blocks];
        for i in 0..r {
            for k in 0..r {
                if a[i * blocks + k / 64] >> (k % 64) & 1 == 1 {
                    for w in 0..blocks {
                        out[i * blocks + w] |= b[k * blocks + w];
                    }
                }
            }
        }
        out
    };
    let base = pack(adj);
    let power = |mut n: u64| -> Vec<u64> {
        let mut acc: Option<Vec<u64>> = None;
        let mut sq = base.clone();
        while n > 0 {
            if n & 1 == 1 {
                acc = Some(match acc {
                    None => sq.clone(),
                    Some(a) => multiply(&a, &sq),
                });
            }
            n >>= 1;
            if n > 0 {
                sq = multiply(&sq, &sq);
            }
        }
        acc.expect("power exponent must be positive")
    };

    let wielandt = ((r as u64 - 1) * (r as u64 - 1)) + 1;
    let mut p = 1u64;
    while p < wielandt {
        p *= 2;
    }
    if !all_positive(&power(p)) {
        return None;
    }
    let (mut lo, mut hi) = (1u64, p);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if all_positive(&power(mid)) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(lo)
}

// ---------------------------------------------------------------------------
// Isomorphism merging
// ---------------------------------------------------------------------------

/// `T ∪ TΣ` as a small two-colored graph with typed edges.
struct OneLevelGraph {
    parents: usize,
    /// parent index of each child; children are grouped per parent in order.
    parent_of: Vec<usize>,
    h_parent: Vec<Vec<bool>>,
    h_child: Vec<Vec<bool>>,
}

impl OneLevelGraph {
    fn build(
        spec: &IfsSpec,
        oracle: &AdjacencyOracle,
        component: &Component,
    ) -> Result<OneLevelGraph> {
        let m = spec.map_count();
        let parents = component.size();
        let mut children: Vec<CellState> = Vec::with_capacity(parents * m);
        let mut parent_of = Vec::with_capacity(parents * m);
        for (pi, (_, cell)) in component.members.iter().enumerate() {
            for digit in 1..=m {
                children.push(spec.child_cell(cell, digit));
                parent_of.push(pi);
            }
        }
        let mut h_parent = vec![vec![false; parents]; parents];
        for i in 0..parents {
            for j in i + 1..parents {
                if adjacent(oracle, &component.members[i].1, &component.members[j].1)? {
                    h_parent[i][j] = true;
                    h_parent[j][i] = true;
                }
            }
        }
        let nc = children.len();
        let mut h_child = vec![vec![false; nc]; nc];
        for i in 0..nc {
            for j in i + 1..nc {
                if adjacent(oracle, &children[i], &children[j])? {
                    h_child[i][j] = true;
                    h_child[j][i] = true;
                }
            }
        }
        Ok(OneLevelGraph {
            parents,
            parent_of,
            h_parent,
            h_child,
        })
    }

    fn parent_degree(&self, p: usize) -> usize {
        self.h_parent[p].iter().filter(|&&e| e).count()
    }

    fn child_degree(&self, c: usize) -> usize {
        self.h_child[c].iter().filter(|&&e| e).count()
    }

    /// Sorted child h-degree profile of a parent.
    fn child_profile(&self, p: usize) -> Vec<usize> {
        let mut prof: Vec<usize> = (0..self.parent_of.len())
            .filter(|&c| self.parent_of[c] == p)
            .map(|c| self.child_degree(c))
            .collect();
        prof.sort();
        prof
    }
}

/// Exhaustive backtracking isomorphism on level-colored, type-preserving
/// graphs, with degree pruning.
fn one_level_isomorphic(g1: &OneLevelGraph, g2: &OneLevelGraph) -> bool {
    if g1.parents != g2.parents || g1.parent_of.len() != g2.parent_of.len() {
        return false;
    }

    fn match_parents(
        g1: &OneLevelGraph,
        g2: &OneLevelGraph,
        pmap: &mut Vec<usize>,
        pused: &mut Vec<bool>,
        next: usize,
    ) -> bool {
        let p = g1.parents;
        if next == p {
            return match_children(g1, g2, pmap);
        }
        for cand in 0..p {
            if pused[cand]
                || g1.parent_degree(next) != g2.parent_degree(cand)
                || g1.child_profile(next) != g2.child_profile(cand)
            {
                continue;
            }
            if (0..next).any(|q| g1.h_parent[next][q] != g2.h_parent[cand][pmap[q]]) {
                continue;
            }
            pmap[next] = cand;
            pused[cand] = true;
            if match_parents(g1, g2, pmap, pused, next + 1) {
                return true;
            }
            pused[cand] = false;
            pmap[next] = usize::MAX;
        }
        false
    }

    fn match_children(g1: &OneLevelGraph, g2: &OneLevelGraph, pmap: &[usize]) -> bool {
        let n = g1.parent_of.len();
        let mut cand_pool: Vec<Vec<usize>> = vec![Vec::new(); g1.parents];
        for c in 0..n {
            cand_pool[g2.parent_of[c]].push(c);
        }
        let mut cmap = vec![usize::MAX; n];
        let mut cused = vec![false; n];

        #[allow(clippy::too_many_arguments)]
        fn rec(
            g1: &OneLevelGraph,
            g2: &OneLevelGraph,
            pmap: &[usize],
            cand_pool: &[Vec<usize>],
            cmap: &mut Vec<usize>,
            cused: &mut Vec<bool>,
            next: usize,
        ) -> bool {
            let n = g1.parent_of.len();
            if next == n {
                return true;
            }
            let target_parent = pmap[g1.parent_of[next]];
            for &cand in &cand_pool[target_parent] {
                if cused[cand] || g1.child_degree(next) != g2.child_degree(cand) {
                    continue;
                }
                if (0..next).any(|d| {
                    cmap[d] != usize::MAX && g1.h_child[next][d] != g2.h_child[cand][cmap[d]]
                }) {
                    continue;
                }
                cmap[next] = cand;
                cused[cand] = true;
                if rec(g1, g2, pmap, cand_pool, cmap, cused, next + 1) {
                    return true;
                }
                cused[cand] = false;
                cmap[next] = usize::MAX;
            }
            false
        }
        rec(g1, g2, pmap, &cand_pool, &mut cmap, &mut cused, 0)
    }

    let mut pmap = vec![usize::MAX; g1.parents];
    let mut pused = vec![false; g1.parents];
    match_parents(g1, g2, &mut pmap, &mut pused, 0)
}

/// Merge classes whose representatives have isomorphic `T ∪ TΣ` graphs
/// (vertices colored by relative level, edges typed). A group is refused —
/// its classes stay separate, with a warning — if its members disagree on
/// the merged offspring row.
pub fn merge_isomorphic(
    spec: &IfsSpec,
    oracle: &AdjacencyOracle,
    classification: &Classification,
) -> Result<Classification> {
    if !classification.is_simple() {
        return Err(Error::Precondition(
            "merge requires a completed (simple) classification".into(),
        ));
    }
    let r = classification.class_count();
    let graphs: Vec<OneLevelGraph> = classification
        .classes
        .iter()
        .map(|c| OneLevelGraph::build(spec, oracle, &c.representative))
        .collect::<Result<_>>()?;

    let mut uf: Vec<usize> = (0..r).collect();
    for i in 0..r {
        for j in i + 1..r {
            if classification.b[i] != classification.b[j] {
                continue;
            }
            if find(&mut uf, i) == find(&mut uf, j) {
                continue;
            }
            if one_level_isomorphic(&graphs[i], &graphs[j]) {
                let (ri, rj) = (find(&mut uf, i), find(&mut uf, j));
                uf[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups_map: HashMap<usize, Vec<usize>> = HashMap::new();
    for i in 0..r {
        groups_map.entry(find(&mut uf, i)).or_default().push(i);
    }
    let mut groups: Vec<Vec<usize>> = groups_map.into_values().collect();
    groups.sort_by_key(|g| g[0]);

    // Validate: every member of a group must produce the same row over merged
    // classes. Refused groups fall back to singletons (which may change other
    // groups' merged rows, so revalidate from scratch after each refusal).
    let mut refused: Vec<Vec<usize>> = Vec::new();
    loop {
        let group_of =
            |class: usize, gs: &[Vec<usize>]| gs.iter().position(|g| g.contains(&class)).unwrap();
        let merged_row = |class: usize, gs: &[Vec<usize>]| -> Vec<u64> {
            let mut row = vec![0u64; gs.len()];
            for (j, &count) in classification.matrix[class].iter().enumerate() {
                row[group_of(j, gs)] += count;
            }
            row
        };
        let mut bad: Option<usize> = None;
        for (gi, group) in groups.iter().enumerate() {
            if group.len() < 2 {
                continue;
            }
            let first = merged_row(group[0], &groups);
            if group.iter().any(|&c| merged_row(c, &groups) != first) {
                bad = Some(gi);
                break;
            }
        }
        match bad {
            None => break,
            Some(gi) => {
                let group = groups.remove(gi);
                refused.push(group.clone());
                for c in group {
                    groups.push(vec![c]);
                }
                groups.sort_by_key(|g| g[0]);
            }
        }
    }
    let accepted: Vec<Vec<usize>> = groups.iter().filter(|g| g.len() > 1).cloned().collect();

    let group_of =
        |class: usize| -> usize { groups.iter().position(|g| g.contains(&class)).unwrap() };
    let merged_matrix: Vec<Vec<u64>> = groups
        .iter()
        .map(|g| {
            let mut row = vec![0u64; groups.len()];
            for (j, &count) in classification.matrix[g[0]].iter().enumerate() {
                row[group_of(j)] += count;
            }
            row
        })
        .collect();
    let merged_b: Vec<u64> = groups.iter().map(|g| classification.b[g[0]]).collect();
    let merged_classes: Vec<ClassInfo> = groups
        .iter()
        .map(|g| classification.classes[g[0]].clone())
        .collect();
    let mut signature_index = HashMap::new();
    for (idx, g) in groups.iter().enumerate() {
        for &c in g {
            signature_index.insert(classification.classes[c].signature.clone(), idx);
        }
    }
    let warning = if refused.is_empty() {
        None
    } else {
        Some(format!(
            "refused isomorphism merge for class groups {refused:?}: members disagree on merged offspring rows"
        ))
    };
    Ok(Classification {
        verdict: TreeVerdict::Simple,
        classes: merged_classes,
        matrix: merged_matrix,
        b: merged_b,
        m: classification.m,
        horizontal_bound: classification.horizontal_bound,
        max_component_size: classification.max_component_size,
        merge: Some(MergeInfo {
            groups: accepted,
            refused,
            warning,
        }),
        signature_index,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn setup(cfg: &str) -> (IfsSpec, AdjacencyOracle) {
        let spec = IfsSpec::parse(cfg).unwrap();
        let oracle = AdjacencyOracle::for_spec(&spec).unwrap();
        (spec, oracle)
    }

    pub(crate) const CFG_034: &str = r#"{"dimension":1,"matrix":[[5]],"digits":[[0],[3],[4]],
        "invariant_set":{"type":"box","corner":[0],"side":1}}"#;
    pub(crate) const CFG_024: &str = r#"{"dimension":1,"matrix":[[5]],"digits":[[0],[2],[4]],
        "invariant_set":{"type":"box","corner":[0],"side":1}}"#;
    pub(crate) const CFG_REFL: &str = r#"{"dimension":1,"matrix":[[5]],"digits":[[0],[4],[4]],
        "linear_parts":[[[1]],[[-1]],[[1]]],
        "invariant_set":{"type":"box","corner":[0],"side":1}}"#;
    pub(crate) const CFG_OVERLAP: &str = r#"{"dimension":2,"matrix":[[5,0],[0,5]],
        "digits":[[0,0],["18/5",0],[4,0],[0,2],[0,3]],
        "invariant_set":{"type":"box","corner":[0,0],"side":1}}"#;
    pub(crate) const CFG_COLLINEAR: &str = r#"{"dimension":2,"matrix":[[0,1],[-5,-3]],
        "digits":[[0,0],[0,3],[0,4]],
        "invariant_set":{"type":"tile","full_digits":[[0,0],[0,1],[0,2],[0,3],[0,4]]}}"#;
    pub(crate) const CFG_GOSPER: &str = r#"{"dimension":2,"matrix":[[2,1],[-1,3]],
        "digits":[[0,1],[1,0],[0,-1],[-1,-1]],
        "invariant_set":{"type":"tile",
            "full_digits":[[0,0],[1,0],[-1,0],[0,1],[0,-1],[1,1],[-1,-1]]}}"#;

    #[test]
    fn expansion_examples() {
        let (spec, oracle) = setup(CFG_034);
        let root = Component::root(&spec);
        let level1 = expand_component(&spec, &oracle, &root).unwrap();
        let words: Vec<Vec<String>> = level1
            .iter()
            .map(|c| c.members.iter().map(|(w, _)| w.to_string()).collect())
            .collect();
        assert_eq!(words, vec![vec!["1"], vec!["2", "3"]]);

        let level2 = expand_component(&spec, &oracle, &level1[1]).unwrap();
        let words: Vec<Vec<String>> = level2
            .iter()
            .map(|c| c.members.iter().map(|(w, _)| w.to_string()).collect())
            .collect();
        assert_eq!(
            words,
            vec![vec!["21"], vec!["22", "23", "31"], vec!["32", "33"]]
        );
    }

    #[test]
    fn expansion_reflected_system() {
        let (spec, oracle) = setup(CFG_REFL);
        let root = Component::root(&spec);
        let level1 = expand_component(&spec, &oracle, &root).unwrap();
        let t = &level1[1];
        assert_eq!(t.size(), 2);
        let level2 = expand_component(&spec, &oracle, t).unwrap();
        let words: Vec<Vec<String>> = level2
            .iter()
            .map(|c| c.members.iter().map(|(w, _)| w.to_string()).collect())
            .collect();
        assert_eq!(
            words,
            vec![vec!["21", "31"], vec!["22", "23"], vec!["32", "33"]]
        );
        // all three offspring carry the class-2 signature
        let s1 = signature_of(&oracle, &level1[1]);
        for c in &level2 {
            assert_eq!(signature_of(&oracle, c), s1);
        }
    }

    #[test]
    fn signatures_normalize_translation() {
        let (spec, oracle) = setup(CFG_034);
        let root = Component::root(&spec);
        let level1 = expand_component(&spec, &oracle, &root).unwrap();
        // singleton signature equals the root signature
        assert_eq!(
            signature_of(&oracle, &level1[0]),
            signature_of(&oracle, &Component::root(&spec))
        );
        let level2 = expand_component(&spec, &oracle, &level1[1]).unwrap();
        // {32,33} is a translate of {2,3}
        assert_eq!(
            signature_of(&oracle, &level2[2]),
            signature_of(&oracle, &level1[1])
        );
        assert_ne!(
            signature_of(&oracle, &level2[1]),
            signature_of(&oracle, &level1[1])
        );
    }

    #[test]
    fn classify_interval_034() {
        let (spec, oracle) = setup(CFG_034);
        let c = classify(&spec, &oracle).unwrap();
        assert!(c.is_simple());
        assert_eq!(c.class_count(), 3);
        assert_eq!(c.b, vec![1, 2, 3]);
        assert_eq!(c.matrix, vec![vec![1, 1, 0], vec![1, 1, 1], vec![1, 1, 2]]);
        assert_eq!(c.horizontal_bound, 2);
        assert!(!c.is_dust_like());
    }

    #[test]
    fn classify_dust_like_024() {
        let (spec, oracle) = setup(CFG_024);
        let c = classify(&spec, &oracle).unwrap();
        assert!(c.is_simple());
        assert!(c.is_dust_like());
        assert_eq!(c.matrix, vec![vec![3]]);
        assert_eq!(c.b, vec![1]);
    }

    #[test]
    fn classify_reflected_system() {
        let (spec, oracle) = setup(CFG_REFL);
        let c = classify(&spec, &oracle).unwrap();
        assert!(c.is_simple());
        assert_eq!(c.class_count(), 2);
        assert_eq!(c.b, vec![1, 2]);
        assert_eq!(c.matrix, vec![vec![1, 1], vec![0, 3]]);
    }

    #[test]
    fn classify_planar_overlap() {
        let (spec, oracle) = setup(CFG_OVERLAP);
        let c = classify(&spec, &oracle).unwrap();
        assert!(c.is_simple());
        assert_eq!(c.class_count(), 3);
        assert_eq!(c.b, vec![1, 2, 2]);
        assert_eq!(c.matrix, vec![vec![1, 1, 1], vec![2, 2, 2], vec![2, 2, 2]]);
    }

    #[test]
    fn classify_collinear_tile() {
        // Four signature classes close the worklist; the two 3-element
        // classes are genuinely different configurations (an L-shaped one and
        // a straight one).
        let (spec, oracle) = setup(CFG_COLLINEAR);
        let c = classify(&spec, &oracle).unwrap();
        assert!(c.is_simple());
        assert_eq!(c.class_count(), 4);
        assert_eq!(c.b, vec![1, 2, 3, 3]);
        assert_eq!(
            c.matrix,
            vec![
                vec![1, 1, 0, 0],
                vec![1, 1, 1, 0],
                vec![1, 1, 1, 1],
                vec![1, 1, 2, 0]
            ]
        );
    }

    #[test]
    fn classify_gosper_subset() {
        let (spec, oracle) = setup(CFG_GOSPER);
        let c = classify(&spec, &oracle).unwrap();
        assert!(c.is_simple());
        assert_eq!(c.class_count(), 6);
        assert_eq!(c.b, vec![1, 3, 4, 6, 7, 10]);
        assert_eq!(
            c.matrix,
            vec![
                vec![1, 1, 0, 0, 0, 0],
                vec![2, 0, 1, 1, 0, 0],
                vec![2, 1, 1, 0, 1, 0],
                vec![4, 0, 1, 1, 0, 1],
                vec![4, 1, 1, 0, 1, 1],
                vec![6, 1, 1, 0, 1, 2]
            ]
        );
    }

    #[test]
    fn eigen_relation_holds_on_all_fixtures() {
        for cfg in [
            CFG_034,
            CFG_024,
            CFG_REFL,
            CFG_OVERLAP,
            CFG_COLLINEAR,
            CFG_GOSPER,
        ] {
            let (spec, oracle) = setup(cfg);
            let c = classify(&spec, &oracle).unwrap();
            let analysis = analyze_matrix(&c.matrix, &c.b, c.m as u64).unwrap();
            assert!(analysis.eigen_ok, "{cfg}");
            assert_eq!(c.b[0], 1);
        }
    }

    #[test]
    fn matrix_analysis_examples() {
        // interval system: primitive with witness 2
        let a = vec![vec![1, 1, 0], vec![1, 1, 1], vec![1, 1, 2]];
        let r = analyze_matrix(&a, &[1, 2, 3], 3).unwrap();
        assert!(r.eigen_ok && r.irreducible);
        assert_eq!(r.primitive, Some(2));

        // reflected system: not irreducible, not primitive
        let a = vec![vec![1, 1], vec![0, 3]];
        let r = analyze_matrix(&a, &[1, 2], 3).unwrap();
        assert!(r.eigen_ok);
        assert!(!r.irreducible);
        assert_eq!(r.primitive, None);

        // period-2 cycle: irreducible but not primitive
        let a = vec![vec![0, 1], vec![1, 0]];
        let r = analyze_matrix(&a, &[1, 1], 1).unwrap();
        assert!(r.eigen_ok && r.irreducible);
        assert_eq!(r.primitive, None);

        // all-positive matrix: witness 1
        let a = vec![vec![1, 2], vec![2, 4]];
        let r = analyze_matrix(&a, &[1, 2], 5).unwrap();
        assert_eq!(r.primitive, Some(1));

        assert!(analyze_matrix(&a, &[1, 2, 3], 5).is_err());
    }

    #[test]
    fn merge_overlap_classes() {
        let (spec, oracle) = setup(CFG_OVERLAP);
        let c = classify(&spec, &oracle).unwrap();
        let merged = merge_isomorphic(&spec, &oracle, &c).unwrap();
        assert_eq!(merged.class_count(), 2);
        assert_eq!(merged.b, vec![1, 2]);
        assert_eq!(merged.matrix, vec![vec![1, 2], vec![2, 4]]);
        let info = merged.merge.as_ref().unwrap();
        assert_eq!(info.groups, vec![vec![1, 2]]);
        assert!(info.refused.is_empty());
        let analysis = analyze_matrix(&merged.matrix, &merged.b, 5).unwrap();
        assert_eq!(analysis.primitive, Some(1));
    }

    #[test]
    fn merge_is_noop_for_interval_system() {
        let (spec, oracle) = setup(CFG_034);
        let c = classify(&spec, &oracle).unwrap();
        let merged = merge_isomorphic(&spec, &oracle, &c).unwrap();
        assert_eq!(merged.class_count(), 3);
        assert_eq!(merged.matrix, c.matrix);
        assert!(merged.merge.as_ref().unwrap().groups.is_empty());
    }

    #[test]
    fn merge_collinear_tile_collapses_triples() {
        // the straight and L-shaped 3-element classes are one-level
        // isomorphic and their merged rows agree
        let (spec, oracle) = setup(CFG_COLLINEAR);
        let c = classify(&spec, &oracle).unwrap();
        let merged = merge_isomorphic(&spec, &oracle, &c).unwrap();
        assert_eq!(merged.class_count(), 3);
        assert_eq!(merged.b, vec![1, 2, 3]);
        assert_eq!(
            merged.matrix,
            vec![vec![1, 1, 0], vec![1, 1, 1], vec![1, 1, 2]]
        );
    }

    #[test]
    fn signature_soundness_to_depth_four() {
        // components with equal signatures produce offspring whose signature
        // multisets are equal
        for cfg in [CFG_034, CFG_REFL, CFG_OVERLAP, CFG_COLLINEAR] {
            let (spec, oracle) = setup(cfg);
            let mut frontier = vec![Component::root(&spec)];
            let mut by_sig: HashMap<Signature, Vec<Signature>> = HashMap::new();
            for _ in 0..4 {
                let mut next_frontier = Vec::new();
                for comp in &frontier {
                    let sig = signature_of(&oracle, comp);
                    let offspring = expand_component(&spec, &oracle, comp).unwrap();
                    let mut child_sigs: Vec<Signature> =
                        offspring.iter().map(|c| signature_of(&oracle, c)).collect();
                    child_sigs.sort();
                    match by_sig.get(&sig) {
                        None => {
                            by_sig.insert(sig, child_sigs);
                        }
                        Some(prev) => assert_eq!(*prev, child_sigs, "{cfg}"),
                    }
                    next_frontier.extend(offspring);
                }
                frontier = next_frontier;
            }
        }
    }
}
