//! Boundary diagnostics: the hyperbolic metric ρ_a on words, the point map Φ
//! into the attractor, Hölder-ratio sampling, and the hyperbolicity constant.
//!
//! Boundary points are represented by deep finite words (truncated rays); the
//! asymptotic statements are tested as two-window stability. Gromov products
//! and Φ values stay exact (integers / rationals) until the final
//! exponentiation and norm.

use num_traits::{One, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{rat_mat_vec, IMatrix, Int, Rat};
use crate::model::{IfsSpec, Word};
use crate::tree::ExploredTree;

/// `ρ_a(x, y) = exp(-a·|x∧y|)` for distinct words, 0 otherwise.
pub fn rho_a(tree: &ExploredTree, x: &Word, y: &Word, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::Precondition("a must be positive".into()));
    }
    if x == y {
        return Ok(0.0);
    }
    let two_gp = tree.gromov_product_twice(x, y)?;
    Ok((-a * two_gp as f64 / 2.0).exp())
}

/// Exact rational inverse of `B`, kept for repeated Φ evaluations.
pub struct PointMap<'a> {
    spec: &'a IfsSpec,
    binv: Vec<Rat>,
    x0: Vec<Rat>,
}

impl<'a> PointMap<'a> {
    /// Base point: the fixed point of the first map, `(B - R_1)^{-1} d_1`,
    /// which always lies in the attractor (hence in `J`).
    pub fn new(spec: &'a IfsSpec) -> Result<PointMap<'a>> {
        let d = spec.dimension();
        let r1 = spec.linear_part(1);
        let rows: Vec<Vec<i64>> = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| {
                        let b = spec.matrix().get(i, j).to_i64().expect("matrix entry fits i64");
                        b - r1.entry(i, j) as i64
                    })
                    .collect()
            })
            .collect();
        let shifted = IMatrix::from_rows(&rows)?;
        let inv = shifted
            .inverse_rational()
            .ok_or_else(|| Error::Precondition("B - R_1 is singular".into()))?;
        let d1: Vec<Rat> = spec
            .digit(1)
            .iter()
            .map(|x| Rat::from_integer(x.clone()))
            .collect();
        let x0 = rat_mat_vec(&inv, &d1, d);
        Self::with_base_point(spec, x0)
    }

    pub fn with_base_point(spec: &'a IfsSpec, x0: Vec<Rat>) -> Result<PointMap<'a>> {
        let binv = spec
            .matrix()
            .inverse_rational()
            .ok_or_else(|| Error::Precondition("matrix is singular".into()))?;
        Ok(PointMap { spec, binv, x0 })
    }

    pub fn base_point(&self) -> &[Rat] {
        &self.x0
    }

    /// Depth-`|w|` approximant of Φ: `S_w(x0)`, exact.
    pub fn eval(&self, w: &Word) -> Vec<Rat> {
        let d = self.spec.dimension();
        let mut x = self.x0.clone();
        for &digit in w.digits().iter().rev() {
            let r = self.spec.linear_part(digit as usize);
            let dv = self.spec.digit(digit as usize);
            let moved: Vec<Rat> = (0..d)
                .map(|i| {
                    let mut acc = Rat::from_integer(dv[i].clone());
                    for j in 0..d {
                        match r.entry(i, j) {
                            1 => acc += &x[j],
                            -1 => acc -= &x[j],
                            _ => {}
                        }
                    }
                    acc
                })
                .collect();
            x = rat_mat_vec(&self.binv, &moved, d);
        }
        x
    }
}

/// Exact squared Euclidean distance of two rational points.
pub fn squared_distance(p: &[Rat], q: &[Rat]) -> Rat {
    p.iter()
        .zip(q)
        .map(|(a, b)| {
            let d = a - b;
            &d * &d
        })
        .sum()
}

#[derive(Clone, Debug, Serialize)]
pub struct WindowStats {
    pub depth: u32,
    pub pairs: u64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub spread: f64,
}

/// Hölder-equivalence diagnostics for `Φ`: per-pair ratios
/// `|Φx - Φy| / ρ_a(x,y)^α` over two depth windows.
#[derive(Clone, Debug, Serialize)]
pub struct BoundarySample {
    pub a: f64,
    pub alpha: f64,
    pub seed: u64,
    pub windows: Vec<WindowStats>,
    /// Ratio of the two windows' spreads (larger / smaller).
    pub window_spread_ratio: f64,
    pub skipped_identical: u64,
    /// Twice the sampled hyperbolicity constant δ (exact half-integers).
    pub delta_twice: u64,
    pub delta_exhaustive: bool,
    /// `a' = exp(δ·a) - 1`; the ultrametric comparison wants `a' < √2 - 1`.
    pub a_prime: f64,
    pub a_constraint_ok: bool,
}

/// Sample `pair_count` distinct word pairs at `depth` and `depth + 3` and
/// report the ratio spread of both windows. The tree must be expanded to
/// `depth + 3`.
pub fn holder_sample(
    spec: &IfsSpec,
    tree: &ExploredTree,
    depth: u32,
    pair_count: u64,
    a: f64,
    seed: u64,
) -> Result<BoundarySample> {
    if !(a > 0.0) {
        return Err(Error::Precondition("a must be positive".into()));
    }
    let windows = [depth, depth + 3];
    if tree.depth() < depth + 3 {
        return Err(Error::DepthExceeded(depth + 3, tree.depth()));
    }
    let m = spec.map_count();
    let alpha = (spec.det_abs().to_f64().unwrap().ln() / spec.dimension() as f64) / a;
    let log_r = -(spec.det_abs().to_f64().unwrap().ln()) / spec.dimension() as f64;
    let phi = PointMap::new(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats = Vec::new();
    let mut skipped = 0u64;
    for &w in &windows {
        let count = m.checked_pow(w).unwrap_or(usize::MAX);
        if count < 2 {
            return Err(Error::Precondition(format!(
                "level {w} has fewer than two words"
            )));
        }
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio = 0.0f64;
        let mut pairs = 0u64;
        let mut attempts = 0u64;
        while pairs < pair_count {
            attempts += 1;
            if attempts > pair_count * 20 {
                return Err(Error::Precondition(format!(
                    "insufficient distinct pairs at depth {w}"
                )));
            }
            let ra = rng.gen_range(0..count);
            let rb = rng.gen_range(0..count);
            if ra == rb {
                continue;
            }
            let x = Word::from_rank(w, ra, m);
            let y = Word::from_rank(w, rb, m);
            let px = phi.eval(&x);
            let py = phi.eval(&y);
            let dist2 = squared_distance(&px, &py);
            if dist2.is_zero() {
                skipped += 1;
                continue;
            }
            let dist = dist2.to_f64().unwrap().sqrt();
            let two_gp = tree.gromov_product_twice(&x, &y)?;
            // ρ_a(x,y)^α = r^{|x∧y|}
            let denom = (log_r * two_gp as f64 / 2.0).exp();
            let ratio = dist / denom;
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
            pairs += 1;
        }
        stats.push(WindowStats {
            depth: w,
            pairs,
            min_ratio,
            max_ratio,
            spread: max_ratio / min_ratio,
        });
    }
    let (s1, s2) = (stats[0].spread, stats[1].spread);
    let window_spread_ratio = if s1 > s2 { s1 / s2 } else { s2 / s1 };
    let (delta_twice, delta_exhaustive) =
        hyperbolicity_delta_twice(tree, depth.min(4), seed)?;
    let delta = delta_twice as f64 / 2.0;
    let a_prime = (delta * a).exp_m1();
    Ok(BoundarySample {
        a,
        alpha,
        seed,
        windows: stats,
        window_spread_ratio,
        skipped_identical: skipped,
        delta_twice,
        delta_exhaustive,
        a_prime,
        a_constraint_ok: a_prime < std::f64::consts::SQRT_2 - 1.0,
    })
}

/// Twice the four-point hyperbolicity constant over words up to `depth`:
/// `2δ = max min(2|x∧z|, 2|z∧y|) - 2|x∧y|` clipped at 0. Exhaustive when the
/// word count allows, otherwise a seeded triple sample (the bool result says
/// which).
pub fn hyperbolicity_delta_twice(
    tree: &ExploredTree,
    depth: u32,
    seed: u64,
) -> Result<(u64, bool)> {
    if depth > tree.depth() {
        return Err(Error::DepthExceeded(depth, tree.depth()));
    }
    let m = tree.m();
    let mut words: Vec<Word> = Vec::new();
    for l in 0..=depth {
        for r in 0..m.pow(l) {
            words.push(Word::from_rank(l, r, m));
        }
    }
    let n = words.len();
    const EXHAUSTIVE_LIMIT: usize = 360;
    if n <= EXHAUSTIVE_LIMIT {
        let mut gp = vec![0u32; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let g = tree.gromov_product_twice(&words[i], &words[j])? as u32;
                gp[i * n + j] = g;
                gp[j * n + i] = g;
            }
            gp[i * n + i] = 2 * words[i].level();
        }
        let mut best = 0u32;
        for x in 0..n {
            for z in 0..n {
                let gxz = gp[x * n + z];
                for y in 0..n {
                    let lhs = gxz.min(gp[z * n + y]);
                    let gxy = gp[x * n + y];
                    if lhs > gxy {
                        best = best.max(lhs - gxy);
                    }
                }
            }
        }
        Ok((best as u64, true))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15);
        let mut best = 0u64;
        for _ in 0..200_000 {
            let x = &words[rng.gen_range(0..n)];
            let y = &words[rng.gen_range(0..n)];
            let z = &words[rng.gen_range(0..n)];
            let gxz = tree.gromov_product_twice(x, z)?;
            let gzy = tree.gromov_product_twice(z, y)?;
            let gxy = tree.gromov_product_twice(x, y)?;
            let lhs = gxz.min(gzy);
            if lhs > gxy {
                best = best.max(lhs - gxy);
            }
        }
        Ok((best, false))
    }
}

/// Exact Cauchy-rate check for similitude specs: `|S_{wi}(x0) - S_w(x0)|² · c^{|w|} <= diam(J)²`
/// where `BᵀB = c·I`. Returns the (rational) worst slack for tests.
pub fn contraction_gap_ok(spec: &IfsSpec, phi: &PointMap, w: &Word, digit: u8) -> Result<bool> {
    if !spec.is_similitude() {
        return Err(Error::Precondition("similitude specs only".into()));
    }
    let c = {
        let bt = spec.matrix().transpose().mul(spec.matrix());
        bt.get(0, 0).clone()
    };
    let diam2 = match spec.invariant_set() {
        crate::model::InvariantSet::Box { side, .. } => {
            Rat::from_integer(side * side * Int::from(spec.dimension() as i64))
        }
        _ => {
            // tile diameter is not rational in general; use the candidate
            // ball bound 2R from the neighbor computation instead
            return Err(Error::Precondition(
                "exact contraction check is box-backend only".into(),
            ));
        }
    };
    let a = phi.eval(w);
    let b = phi.eval(&w.child(digit));
    let gap2 = squared_distance(&a, &b);
    let mut scale = Rat::one();
    for _ in 0..w.level() {
        scale *= Rat::from_integer(c.clone());
    }
    Ok(gap2 * scale <= diam2)
}
