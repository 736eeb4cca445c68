//! The horizontal-edge predicate: do two same-level cells intersect?
//!
//! Box backend: realized cells are integer hypercubes `G·J + t` (the common
//! `B^{-n}` factor cancels), so intersection is a per-axis closed-interval
//! test. Tile backend: `J` is the attractor tile of `(B, full_digits)` and
//! `J_u ∩ J_v ≠ ∅  ⟺  t_u - t_v ∈ N ∪ {0}` for the finite neighbor set `N`,
//! computed here by contact-graph pruning.

use std::collections::{HashMap, HashSet};

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{ivec_sub, rat_mat_mul, rat_norm_inf, IMatrix, IVec, Int, Rat};
use crate::model::{CellState, IfsSpec, InvariantSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Computed,
    UserSupplied,
    BoxPredicate,
}

/// Finite symmetric set of nonzero lattice vectors `s` with `J ∩ (J+s) ≠ ∅`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeighborSet {
    pub vectors: Vec<IVec>,
    pub provenance: Provenance,
}

impl NeighborSet {
    pub fn is_symmetric(&self) -> bool {
        let set: HashSet<&IVec> = self.vectors.iter().collect();
        self.vectors.iter().all(|v| {
            let neg: IVec = v.iter().map(|x| -x).collect();
            set.contains(&neg) && !v.iter().all(|x| x.is_zero())
        })
    }
}

/// Decides cell adjacency for one spec; immutable and shareable.
#[derive(Clone, Debug)]
pub struct AdjacencyOracle {
    flavor: Flavor,
}

#[derive(Clone, Debug)]
enum Flavor {
    Box {
        corner: IVec,
        side: Int,
    },
    Lattice {
        set: HashSet<IVec>,
        neighbors: NeighborSet,
    },
}

impl AdjacencyOracle {
    /// Build the oracle, computing the tile neighbor set when needed.
    pub fn for_spec(spec: &IfsSpec) -> Result<AdjacencyOracle> {
        let flavor = match spec.invariant_set() {
            InvariantSet::Box { corner, side } => Flavor::Box {
                corner: corner.clone(),
                side: side.clone(),
            },
            InvariantSet::Tile { full_digits } => {
                let neighbors = compute_neighbor_set(spec.matrix(), full_digits)?;
                Flavor::Lattice {
                    set: neighbors.vectors.iter().cloned().collect(),
                    neighbors,
                }
            }
            InvariantSet::CustomNeighbors { vectors } => {
                let neighbors = NeighborSet {
                    vectors: {
                        let mut v = vectors.clone();
                        v.sort();
                        v
                    },
                    provenance: Provenance::UserSupplied,
                };
                Flavor::Lattice {
                    set: neighbors.vectors.iter().cloned().collect(),
                    neighbors,
                }
            }
        };
        Ok(AdjacencyOracle { flavor })
    }

    pub fn neighbor_set(&self) -> Option<&NeighborSet> {
        match &self.flavor {
            Flavor::Lattice { neighbors, .. } => Some(neighbors),
            Flavor::Box { .. } => None,
        }
    }

    pub(crate) fn box_side(&self) -> Option<&Int> {
        match &self.flavor {
            Flavor::Box { side, .. } => Some(side),
            _ => None,
        }
    }

    pub(crate) fn lattice_set(&self) -> Option<&HashSet<IVec>> {
        match &self.flavor {
            Flavor::Lattice { set, .. } => Some(set),
            _ => None,
        }
    }

    /// Lower corner of the realized box `G·J + t` (box backend), or `t`
    /// itself (lattice backends). Used as the translation-normalization
    /// anchor for signatures and for rendering.
    pub fn realized_corner(&self, cell: &CellState) -> IVec {
        match &self.flavor {
            Flavor::Lattice { .. } => cell.trans.clone(),
            Flavor::Box { corner, side } => {
                let d = cell.linear.dim();
                (0..d)
                    .map(|i| {
                        let j = (0..d).find(|&j| cell.linear.entry(i, j) != 0).unwrap();
                        if cell.linear.entry(i, j) > 0 {
                            &cell.trans[i] + &corner[j]
                        } else {
                            &cell.trans[i] - &corner[j] - side
                        }
                    })
                    .collect()
            }
        }
    }

    fn adjacent_unchecked(&self, c1: &CellState, c2: &CellState) -> bool {
        match &self.flavor {
            Flavor::Box { side, .. } => {
                let lo1 = self.realized_corner(c1);
                let lo2 = self.realized_corner(c2);
                lo1.iter().zip(&lo2).all(|(a, b)| (a - b).abs() <= *side)
            }
            Flavor::Lattice { set, .. } => {
                let diff = ivec_sub(&c1.trans, &c2.trans);
                diff.iter().all(|x| x.is_zero()) || set.contains(&diff)
            }
        }
    }
}

/// `J_u ∩ J_v ≠ ∅` for two same-level cells; touching counts. Identical cells
/// from distinct words count as adjacent.
pub fn adjacent(oracle: &AdjacencyOracle, c1: &CellState, c2: &CellState) -> Result<bool> {
    if c1.level != c2.level {
        return Err(Error::LevelMismatch(c1.level, c2.level));
    }
    Ok(oracle.adjacent_unchecked(c1, c2))
}

/// Compute `{ s ≠ 0 : J ∩ (J+s) ≠ ∅ }` for the attractor tile `J` of
/// `(B, full_digits)`.
///
/// `s` is a neighbor offset iff the chain `s → B·s + d' - d` can be continued
/// forever inside the ball `‖·‖∞ ≤ 2R` (`R` a radius bound on `J`): iterating
/// the tile equation one subdivision at a time both stays inside that ball
/// and, conversely, any infinite chain converges to a common point of `J` and
/// `J+s`. States whose every path exits the ball are pruned; an exiting path
/// cannot return.
pub fn compute_neighbor_set(matrix: &IMatrix, full_digits: &[IVec]) -> Result<NeighborSet> {
    let d = matrix.dim();
    let q = matrix.det().abs();
    if Int::from(full_digits.len()) != q {
        return Err(Error::NeighborSet(format!(
            "tile digits are not a full residue system: |full_digits| = {}, |det B| = {q}",
            full_digits.len()
        )));
    }

    let binv = matrix
        .inverse_rational()
        .ok_or_else(|| Error::NeighborSet("matrix is singular".into()))?;

    // Smallest k with ‖B^{-k}‖∞ < 1, and the partial sum Σ_{j<=k} ‖B^{-j}‖∞.
    let mut power = binv.clone();
    let mut partial_sum = rat_norm_inf(&power, d);
    let mut eta = partial_sum.clone();
    let mut k = 1u32;
    while eta >= Rat::one() {
        k += 1;
        if k > 64 {
            return Err(Error::NeighborSet(
                "no power of B^{-1} contracts within k <= 64".into(),
            ));
        }
        power = rat_mat_mul(&power, &binv, d);
        eta = rat_norm_inf(&power, d);
        partial_sum += &eta;
    }

    let max_digit: Rat = full_digits
        .iter()
        .flat_map(|v| v.iter())
        .map(|x| Rat::from_integer(x.abs()))
        .fold(Rat::zero(), |acc, x| if x > acc { x } else { acc });

    // J ⊆ ball(R):  R = maxd · Σ_{j>=1} ‖B^{-j}‖ ≤ maxd · S_k / (1 - η).
    let radius = &max_digit * &partial_sum / (Rat::one() - &eta);
    let bound = (radius * Rat::from_integer(Int::from(2))).floor().to_integer();
    let bound = bound
        .to_i64()
        .filter(|&b| {
            // candidate count (2b+1)^d must stay enumerable
            (2 * b + 1).checked_pow(d as u32).map_or(false, |n| n <= 4_000_000)
        })
        .ok_or_else(|| Error::NeighborSet("candidate radius too large to enumerate".into()))?;

    // Candidate states and digit differences.
    let mut candidates: Vec<IVec> = Vec::new();
    let mut odometer = vec![-bound; d];
    loop {
        candidates.push(odometer.iter().map(|&x| Int::from(x)).collect());
        let mut axis = 0;
        loop {
            if axis == d {
                break;
            }
            odometer[axis] += 1;
            if odometer[axis] <= bound {
                break;
            }
            odometer[axis] = -bound;
            axis += 1;
        }
        if axis == d {
            break;
        }
    }
    let mut diffs: HashSet<IVec> = HashSet::new();
    for a in full_digits {
        for b in full_digits {
            diffs.insert(ivec_sub(b, a));
        }
    }

    let index: HashMap<&IVec, usize> = candidates.iter().zip(0..).collect();
    let in_ball = |v: &IVec| v.iter().all(|x| x.abs() <= Int::from(bound));

    // Directed edges s -> B·s + (d' - d); prune states with no live successor.
    let n = candidates.len();
    let mut succ: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut pred: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (i, s) in candidates.iter().enumerate() {
        let bs = matrix.mul_vec(s);
        for delta in &diffs {
            let target: IVec = bs.iter().zip(delta).map(|(x, y)| x + y).collect();
            if in_ball(&target) {
                let j = index[&target];
                succ[i].push(j as u32);
                pred[j as usize].push(i as u32);
            }
        }
    }
    let mut out_degree: Vec<usize> = succ.iter().map(|s| s.len()).collect();
    let mut dead: Vec<usize> = (0..n).filter(|&i| out_degree[i] == 0).collect();
    let mut alive = vec![true; n];
    while let Some(i) = dead.pop() {
        alive[i] = false;
        for &p in &pred[i] {
            let p = p as usize;
            if alive[p] {
                out_degree[p] -= 1;
                if out_degree[p] == 0 {
                    dead.push(p);
                }
            }
        }
    }

    let mut vectors: Vec<IVec> = candidates
        .into_iter()
        .enumerate()
        .filter(|(i, v)| alive[*i] && !v.iter().all(|x| x.is_zero()))
        .map(|(_, v)| v)
        .collect();
    vectors.sort();
    Ok(NeighborSet {
        vectors,
        provenance: Provenance::Computed,
    })
}

/// Reference 1-D adjacency oracle over exact rational intervals, used by
/// tests to cross-check the corner-distance predicate.
#[cfg(test)]
pub(crate) fn interval_adjacent(
    lo1: &num_rational::BigRational,
    lo2: &num_rational::BigRational,
    side: &num_rational::BigRational,
) -> bool {
    let hi1 = lo1 + side;
    let hi2 = lo2 + side;
    lo1 <= &hi2 && lo2 <= &hi1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ivec;
    use crate::model::Word;

    fn spec_034() -> IfsSpec {
        IfsSpec::parse(
            r#"{"dimension":1,"matrix":[[5]],"digits":[[0],[3],[4]],
                "invariant_set":{"type":"box","corner":[0],"side":1}}"#,
        )
        .unwrap()
    }

    #[test]
    fn box_adjacency_touching_and_gap() {
        let spec = spec_034();
        let oracle = AdjacencyOracle::for_spec(&spec).unwrap();
        let w = |ds: &[u8]| spec.cell_of_word(&Word::from_digits(ds, 3).unwrap());
        // boxes [19,20] and [20,21] touch
        assert!(adjacent(&oracle, &w(&[2, 3]), &w(&[3, 1])).unwrap());
        // level 1: [0,1] vs [3,4]
        assert!(!adjacent(&oracle, &w(&[1]), &w(&[2])).unwrap());
        // identical cell against itself-as-different-word
        assert!(adjacent(&oracle, &w(&[2]), &w(&[2])).unwrap());
        // level mismatch is an error
        assert!(adjacent(&oracle, &w(&[1]), &w(&[1, 1])).is_err());
    }

    #[test]
    fn box_adjacency_matches_rational_interval_oracle() {
        let spec = spec_034();
        let oracle = AdjacencyOracle::for_spec(&spec).unwrap();
        let words: Vec<Word> = (0..27).map(|r| Word::from_rank(3, r, 3)).collect();
        for x in &words {
            for y in &words {
                let cx = spec.cell_of_word(x);
                let cy = spec.cell_of_word(y);
                let lox = Rat::from_integer(oracle.realized_corner(&cx)[0].clone());
                let loy = Rat::from_integer(oracle.realized_corner(&cy)[0].clone());
                let side = Rat::from_integer(Int::from(1));
                assert_eq!(
                    adjacent(&oracle, &cx, &cy).unwrap(),
                    interval_adjacent(&lox, &loy, &side),
                    "{x} vs {y}"
                );
            }
        }
    }

    #[test]
    fn unit_interval_tile_neighbors() {
        let b = IMatrix::from_rows(&[vec![2]]).unwrap();
        let n = compute_neighbor_set(&b, &[ivec(&[0]), ivec(&[1])]).unwrap();
        assert_eq!(n.vectors, vec![ivec(&[-1]), ivec(&[1])]);
        assert!(n.is_symmetric());
    }

    #[test]
    fn collinear_tile_neighbors() {
        // B = [[0,1],[-5,-3]], digits (0,i) i=0..4: six neighbors
        // ±v, ±(Bv+2v), ±(Bv+3v) with v = (0,1).
        let b = IMatrix::from_rows(&[vec![0, 1], vec![-5, -3]]).unwrap();
        let full: Vec<IVec> = (0..5).map(|i| ivec(&[0, i])).collect();
        let n = compute_neighbor_set(&b, &full).unwrap();
        let mut expect = vec![
            ivec(&[0, 1]),
            ivec(&[0, -1]),
            ivec(&[1, -1]),
            ivec(&[-1, 1]),
            ivec(&[1, 0]),
            ivec(&[-1, 0]),
        ];
        expect.sort();
        assert_eq!(n.vectors, expect);
    }

    #[test]
    fn gosper_lattice_neighbors() {
        // Hexagonal-lattice coordinates of the Gosper island: six neighbors.
        let b = IMatrix::from_rows(&[vec![2, 1], vec![-1, 3]]).unwrap();
        let full: Vec<IVec> = [
            [0i64, 0],
            [1, 0],
            [-1, 0],
            [0, 1],
            [0, -1],
            [1, 1],
            [-1, -1],
        ]
        .iter()
        .map(|v| ivec(v))
        .collect();
        let n = compute_neighbor_set(&b, &full).unwrap();
        let mut expect = vec![
            ivec(&[1, 0]),
            ivec(&[-1, 0]),
            ivec(&[0, 1]),
            ivec(&[0, -1]),
            ivec(&[1, 1]),
            ivec(&[-1, -1]),
        ];
        expect.sort();
        assert_eq!(n.vectors, expect);
        assert!(n.is_symmetric());
    }

    #[test]
    fn neighbor_set_rejects_partial_digit_systems() {
        let b = IMatrix::from_rows(&[vec![0, 1], vec![-5, -3]]).unwrap();
        let err = compute_neighbor_set(&b, &[ivec(&[0, 0]), ivec(&[0, 1])]).unwrap_err();
        assert!(err.to_string().contains("full residue system"));
    }

    #[test]
    fn hereditary_separation() {
        // Non-adjacent, non-identical parents have pairwise non-adjacent children.
        let spec = spec_034();
        let oracle = AdjacencyOracle::for_spec(&spec).unwrap();
        for ra in 0..9usize {
            for rb in 0..9usize {
                let a = Word::from_rank(2, ra, 3);
                let b = Word::from_rank(2, rb, 3);
                let ca = spec.cell_of_word(&a);
                let cb = spec.cell_of_word(&b);
                if adjacent(&oracle, &ca, &cb).unwrap() {
                    continue;
                }
                for i in 1..=3 {
                    for j in 1..=3 {
                        let ci = spec.child_cell(&ca, i);
                        let cj = spec.child_cell(&cb, j);
                        assert!(!adjacent(&oracle, &ci, &cj).unwrap());
                    }
                }
            }
        }
    }
}
