//! IFS specifications and exact word→cell arithmetic.
//!
//! A spec is a validated bundle `(B, digits, linear parts, invariant set)`.
//! Rational digits in the config are cleared by conjugating the whole system
//! with `x ↦ qx` (`q` the common denominator), so every downstream quantity is
//! an integer. The cell of a word `w` is `B^{-|w|}(G·J + t)` where `(G, t)` is
//! tracked exactly; `B^{-n}` is never materialized.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ivec_add, rat_mat_vec, IMatrix, IVec, Int, Rat, SignedPerm};

/// Analysis caps; hitting one is a reported verdict, not a fault.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub max_depth: u32,
    pub max_classes: usize,
    pub max_component_size: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            max_depth: 12,
            max_classes: 512,
            max_component_size: 4096,
        }
    }
}

/// Bounded closed invariant set `J` with `S_i(J) ⊆ J`, fixing the
/// horizontal-edge predicate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvariantSet {
    /// Axis-aligned hypercube `[corner, corner + side]^d`.
    Box { corner: IVec, side: Int },
    /// Attractor tile of `(B, full_digits)` with `|full_digits| = |det B|`.
    Tile { full_digits: Vec<IVec> },
    /// User-supplied neighbor vectors for a tile-like `J` (trusted).
    CustomNeighbors { vectors: Vec<IVec> },
}

/// A word over the digit alphabet `{1..m}`; the root is the empty word `o`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn root() -> Self {
        Word(Vec::new())
    }

    pub fn from_digits(digits: &[u8], m: usize) -> Result<Self> {
        if digits.iter().any(|&d| d == 0 || d as usize > m) {
            return Err(Error::Precondition(format!(
                "word digits must lie in 1..={m}"
            )));
        }
        Ok(Word(digits.to_vec()))
    }

    pub fn level(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn digits(&self) -> &[u8] {
        &self.0
    }

    pub fn child(&self, digit: u8) -> Word {
        let mut d = self.0.clone();
        d.push(digit);
        Word(d)
    }

    pub fn parent(&self) -> Option<Word> {
        if self.0.is_empty() {
            None
        } else {
            Some(Word(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// Rank in the lexicographic enumeration of its level (base-`m` value).
    pub fn rank(&self, m: usize) -> usize {
        self.0
            .iter()
            .fold(0usize, |acc, &d| acc * m + (d as usize - 1))
    }

    /// Rank of the length-`l` prefix.
    pub fn prefix_rank(&self, l: u32, m: usize) -> usize {
        self.0[..l as usize]
            .iter()
            .fold(0usize, |acc, &d| acc * m + (d as usize - 1))
    }

    pub fn from_rank(level: u32, rank: usize, m: usize) -> Word {
        let mut digits = vec![0u8; level as usize];
        let mut r = rank;
        for i in (0..level as usize).rev() {
            digits[i] = (r % m) as u8 + 1;
            r /= m;
        }
        Word(digits)
    }

    pub fn common_prefix_len(&self, other: &Word) -> u32 {
        self.0
            .iter()
            .zip(&other.0)
            .take_while(|(a, b)| a == b)
            .count() as u32
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "o");
        }
        if self.0.iter().all(|&d| d <= 9) {
            for d in &self.0 {
                write!(f, "{d}")?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|d| d.to_string()).collect();
            write!(f, "{}", parts.join("."))
        }
    }
}

/// Exact algebraic position of a word's cell: the realized set is
/// `B^{-level}(G·J + t)`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct CellState {
    pub level: u32,
    pub linear: SignedPerm,
    pub trans: IVec,
}

// ---------------------------------------------------------------------------
// Config schema
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberLike {
    Int(i64),
    Text(String),
}

impl NumberLike {
    fn to_rational(&self) -> Result<Rat> {
        match self {
            NumberLike::Int(v) => Ok(Rat::from_integer(Int::from(*v))),
            NumberLike::Text(s) => {
                let parse_int = |t: &str| -> Result<Int> {
                    t.trim()
                        .parse::<BigInt>()
                        .map_err(|_| Error::Parse(format!("bad number {t:?}")))
                };
                match s.split_once('/') {
                    Some((p, q)) => {
                        let num = parse_int(p)?;
                        let den = parse_int(q)?;
                        if den.is_zero() {
                            return Err(Error::Parse(format!("zero denominator in {s:?}")));
                        }
                        Ok(Rat::new(num, den))
                    }
                    None => Ok(Rat::from_integer(parse_int(s)?)),
                }
            }
        }
    }
}

#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum InvariantSetConfig {
    Box {
        corner: Vec<NumberLike>,
        side: NumberLike,
    },
    Tile {
        full_digits: Vec<Vec<i64>>,
    },
    CustomNeighbors {
        vectors: Vec<Vec<i64>>,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    #[serde(default)]
    name: Option<String>,
    /// Free-form documentation; echoed into reports, never interpreted.
    #[serde(default)]
    notes: Option<serde_json::Value>,
    dimension: usize,
    matrix: Vec<Vec<i64>>,
    digits: Vec<Vec<NumberLike>>,
    #[serde(default)]
    linear_parts: Option<Vec<Vec<Vec<i64>>>>,
    invariant_set: InvariantSetConfig,
    #[serde(default)]
    caps: Option<Caps>,
    #[serde(default)]
    a_param: Option<f64>,
}

// ---------------------------------------------------------------------------
// The validated spec
// ---------------------------------------------------------------------------

/// A validated IFS `S_i(x) = B^{-1}(R_i x + d_i)`, `i = 1..m`, together with
/// the invariant set defining horizontal edges and the analysis caps.
#[derive(Clone, Debug, PartialEq)]
pub struct IfsSpec {
    name: Option<String>,
    notes: Option<serde_json::Value>,
    dimension: usize,
    matrix: IMatrix,
    digits: Vec<IVec>,
    linear_parts: Vec<SignedPerm>,
    invariant_set: InvariantSet,
    caps: Caps,
    a_param: f64,
    det_abs: Int,
    scale: Int,
}

impl IfsSpec {
    /// Parse and validate a JSON config. Rational digits are cleared by
    /// conjugation with the common-denominator scaling.
    pub fn parse(text: &str) -> Result<IfsSpec> {
        let cfg: ConfigFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_config(cfg)
    }

    fn from_config(cfg: ConfigFile) -> Result<IfsSpec> {
        let d = cfg.dimension;
        if d == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        if cfg.matrix.len() != d || cfg.matrix.iter().any(|r| r.len() != d) {
            return Err(Error::Validation(format!("matrix must be {d}x{d}")));
        }
        let matrix = IMatrix::from_rows(&cfg.matrix)?;
        if !matrix.is_expanding() {
            return Err(Error::Validation(
                "matrix is not expanding: some eigenvalue has modulus <= 1".into(),
            ));
        }
        let det_abs = matrix.det().abs();

        let m = cfg.digits.len();
        if m < 2 {
            return Err(Error::Validation(format!("need m >= 2 maps, got {m}")));
        }
        if m > 255 {
            return Err(Error::Validation("more than 255 maps not supported".into()));
        }

        // Rational digits (and box data) -> common denominator q.
        let mut digit_rats: Vec<Vec<Rat>> = Vec::with_capacity(m);
        for (i, dv) in cfg.digits.iter().enumerate() {
            if dv.len() != d {
                return Err(Error::Validation(format!(
                    "digit {} has dimension {} (want {d})",
                    i + 1,
                    dv.len()
                )));
            }
            digit_rats.push(dv.iter().map(|x| x.to_rational()).collect::<Result<_>>()?);
        }
        let mut denoms: Vec<Int> = digit_rats
            .iter()
            .flatten()
            .map(|r| r.denom().clone())
            .collect();

        let linear_parts: Vec<SignedPerm> = match &cfg.linear_parts {
            None => vec![SignedPerm::identity(d); m],
            Some(parts) => {
                if parts.len() != m {
                    return Err(Error::Validation(format!(
                        "linear_parts has {} entries, want {m}",
                        parts.len()
                    )));
                }
                parts
                    .iter()
                    .map(|p| SignedPerm::from_rows(p))
                    .collect::<Result<_>>()?
            }
        };

        let (corner_rats, side_rat) = match &cfg.invariant_set {
            InvariantSetConfig::Box { corner, side } => {
                if corner.len() != d {
                    return Err(Error::Validation("box corner has wrong dimension".into()));
                }
                let c: Vec<Rat> = corner
                    .iter()
                    .map(|x| x.to_rational())
                    .collect::<Result<_>>()?;
                let s = side.to_rational()?;
                denoms.extend(c.iter().map(|r| r.denom().clone()));
                denoms.push(s.denom().clone());
                (Some(c), Some(s))
            }
            _ => (None, None),
        };

        let scale = denoms
            .iter()
            .fold(Int::one(), |acc, q| acc.lcm(q));

        let clear = |r: &Rat| -> Int {
            let scaled = r * Rat::from_integer(scale.clone());
            debug_assert!(scaled.is_integer());
            scaled.to_integer()
        };
        let digits: Vec<IVec> = digit_rats
            .iter()
            .map(|dv| dv.iter().map(clear).collect())
            .collect();

        let invariant_set = match cfg.invariant_set {
            InvariantSetConfig::Box { .. } => {
                let corner: IVec = corner_rats.unwrap().iter().map(clear).collect();
                let side = clear(&side_rat.unwrap());
                if side <= Int::zero() {
                    return Err(Error::Validation("box side must be positive".into()));
                }
                InvariantSet::Box { corner, side }
            }
            InvariantSetConfig::Tile { full_digits } => {
                if !scale.is_one() {
                    return Err(Error::Validation(
                        "tile backend requires integer digits (no denominator clearing)".into(),
                    ));
                }
                let fd: Vec<IVec> = full_digits
                    .iter()
                    .map(|v| {
                        if v.len() != d {
                            Err(Error::Validation("tile digit has wrong dimension".into()))
                        } else {
                            Ok(v.iter().map(|&x| Int::from(x)).collect())
                        }
                    })
                    .collect::<Result<_>>()?;
                InvariantSet::Tile { full_digits: fd }
            }
            InvariantSetConfig::CustomNeighbors { vectors } => {
                let vs: Vec<IVec> = vectors
                    .iter()
                    .map(|v| {
                        if v.len() != d {
                            Err(Error::Validation(
                                "neighbor vector has wrong dimension".into(),
                            ))
                        } else {
                            Ok(v.iter().map(|&x| Int::from(x) * &scale).collect())
                        }
                    })
                    .collect::<Result<_>>()?;
                InvariantSet::CustomNeighbors { vectors: vs }
            }
        };

        let a_default = {
            let q = det_abs.to_f64().unwrap_or(f64::INFINITY);
            q.ln() / d as f64
        };
        let a_param = cfg.a_param.unwrap_or(a_default);
        if !(a_param > 0.0) {
            return Err(Error::Validation("a_param must be positive".into()));
        }

        let spec = IfsSpec {
            name: cfg.name,
            notes: cfg.notes,
            dimension: d,
            matrix,
            digits,
            linear_parts,
            invariant_set,
            caps: cfg.caps.unwrap_or_default(),
            a_param,
            det_abs,
            scale,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dimension;
        // (linear part, digit) pairs pairwise distinct.
        let mut seen = BTreeSet::new();
        for (r, dv) in self.linear_parts.iter().zip(&self.digits) {
            if !seen.insert((r.encode(), dv.clone())) {
                return Err(Error::Validation(
                    "duplicate (linear part, digit) pair".into(),
                ));
            }
        }

        match &self.invariant_set {
            InvariantSet::Box { corner, side } => {
                let nontrivial = self.linear_parts.iter().any(|r| !r.is_identity());
                if nontrivial && !self.is_scalar_matrix() {
                    return Err(Error::Validation(
                        "box backend with non-identity linear parts requires B = n*I".into(),
                    ));
                }
                self.check_box_invariance(corner, side)?;
            }
            InvariantSet::Tile { full_digits } => {
                if self.linear_parts.iter().any(|r| !r.is_identity()) {
                    return Err(Error::Validation(
                        "tile backend requires trivial linear parts".into(),
                    ));
                }
                let q = self
                    .det_abs
                    .to_usize()
                    .ok_or_else(|| Error::Validation("determinant too large".into()))?;
                if full_digits.len() != q {
                    return Err(Error::Validation(format!(
                        "tile needs |full_digits| = |det B| = {q}, got {}",
                        full_digits.len()
                    )));
                }
                self.check_full_residues(full_digits)?;
                for dv in &self.digits {
                    if !full_digits.contains(dv) {
                        return Err(Error::Validation(
                            "tile backend: every digit must be in full_digits".into(),
                        ));
                    }
                }
            }
            InvariantSet::CustomNeighbors { vectors } => {
                let set: BTreeSet<&IVec> = vectors.iter().collect();
                for v in vectors {
                    if v.iter().all(|x| x.is_zero()) {
                        return Err(Error::Validation("neighbor vectors must be nonzero".into()));
                    }
                    let neg: IVec = v.iter().map(|x| -x).collect();
                    if !set.contains(&neg) {
                        return Err(Error::Validation(
                            "neighbor set must be symmetric under negation".into(),
                        ));
                    }
                }
                if self.linear_parts.iter().any(|r| !r.is_identity()) {
                    return Err(Error::Validation(
                        "custom-neighbor backend requires trivial linear parts".into(),
                    ));
                }
            }
        }
        let _ = d;
        Ok(())
    }

    fn is_scalar_matrix(&self) -> bool {
        let d = self.dimension;
        let n = self.matrix.get(0, 0);
        for i in 0..d {
            for j in 0..d {
                let e = self.matrix.get(i, j);
                if i == j && e != n {
                    return false;
                }
                if i != j && !e.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    /// `S_i(J) ⊆ J` for the box backend: all vertices of `B^{-1}(R_i J + d_i)`
    /// must lie in `J`. Exact rational check.
    fn check_box_invariance(&self, corner: &IVec, side: &Int) -> Result<()> {
        let d = self.dimension;
        let binv = self
            .matrix
            .inverse_rational()
            .ok_or_else(|| Error::Validation("matrix is singular".into()))?;
        let lo: Vec<Rat> = corner.iter().map(|c| Rat::from_integer(c.clone())).collect();
        let hi: Vec<Rat> = corner
            .iter()
            .map(|c| Rat::from_integer(c + side))
            .collect();
        for (i, (r, dv)) in self.linear_parts.iter().zip(&self.digits).enumerate() {
            for mask in 0..(1usize << d) {
                let vertex: IVec = (0..d)
                    .map(|k| {
                        if mask >> k & 1 == 1 {
                            &corner[k] + side
                        } else {
                            corner[k].clone()
                        }
                    })
                    .collect();
                let moved = ivec_add(&r.apply(&vertex), dv);
                let moved_rat: Vec<Rat> =
                    moved.iter().map(|x| Rat::from_integer(x.clone())).collect();
                let image = rat_mat_vec(&binv, &moved_rat, d);
                for k in 0..d {
                    if image[k] < lo[k] || image[k] > hi[k] {
                        return Err(Error::Validation(format!(
                            "S_{}(J) is not contained in J (vertex escapes on axis {k})",
                            i + 1
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Digits of a tile must be pairwise distinct mod `B·Z^d`.
    fn check_full_residues(&self, full_digits: &[IVec]) -> Result<()> {
        let d = self.dimension;
        let binv = self
            .matrix
            .inverse_rational()
            .ok_or_else(|| Error::Validation("matrix is singular".into()))?;
        for i in 0..full_digits.len() {
            for j in i + 1..full_digits.len() {
                let diff: Vec<Rat> = (0..d)
                    .map(|k| Rat::from_integer(&full_digits[i][k] - &full_digits[j][k]))
                    .collect();
                let x = rat_mat_vec(&binv, &diff, d);
                if x.iter().all(|v| v.is_integer()) {
                    return Err(Error::Validation(format!(
                        "tile digits {i} and {j} coincide mod B·Z^d (not a full residue system)"
                    )));
                }
            }
        }
        Ok(())
    }

    // -- accessors ---------------------------------------------------------

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn map_count(&self) -> usize {
        self.digits.len()
    }

    pub fn matrix(&self) -> &IMatrix {
        &self.matrix
    }

    pub fn digit(&self, i: usize) -> &IVec {
        &self.digits[i - 1]
    }

    pub fn linear_part(&self, i: usize) -> &SignedPerm {
        &self.linear_parts[i - 1]
    }

    pub fn invariant_set(&self) -> &InvariantSet {
        &self.invariant_set
    }

    pub fn caps(&self) -> &Caps {
        &self.caps
    }

    pub fn with_max_depth(mut self, max_depth: u32) -> Self {
        self.caps.max_depth = max_depth;
        self
    }

    pub fn a_param(&self) -> f64 {
        self.a_param
    }

    pub fn det_abs(&self) -> &Int {
        &self.det_abs
    }

    pub fn scale(&self) -> &Int {
        &self.scale
    }

    /// Contraction ratio `r = |det B|^{-1/d}`.
    pub fn contraction_ratio(&self) -> f64 {
        let q = self.det_abs.to_f64().unwrap_or(f64::INFINITY);
        q.powf(-1.0 / self.dimension as f64)
    }

    /// True iff `B` is a scaled orthogonal matrix (`BᵀB = c·I`), i.e. the IFS
    /// maps are similitudes in the ambient coordinates.
    pub fn is_similitude(&self) -> bool {
        let bt = self.matrix.transpose();
        let g = bt.mul(&self.matrix);
        let c = g.get(0, 0).clone();
        let d = self.dimension;
        for i in 0..d {
            for j in 0..d {
                let e = g.get(i, j);
                if i == j && *e != c {
                    return false;
                }
                if i != j && !e.is_zero() {
                    return false;
                }
            }
        }
        true
    }

    // -- cell arithmetic ----------------------------------------------------

    pub fn root_cell(&self) -> CellState {
        CellState {
            level: 0,
            linear: SignedPerm::identity(self.dimension),
            trans: vec![Int::zero(); self.dimension],
        }
    }

    /// Cell of the word `w·i`: `G' = G·R_i`, `t' = G·d_i + B·t`.
    pub fn child_cell(&self, cell: &CellState, digit: usize) -> CellState {
        assert!(digit >= 1 && digit <= self.map_count(), "digit out of range");
        let r = &self.linear_parts[digit - 1];
        let d = &self.digits[digit - 1];
        let linear = cell.linear.compose(r);
        let trans = ivec_add(&cell.linear.apply(d), &self.matrix.mul_vec(&cell.trans));
        CellState {
            level: cell.level + 1,
            linear,
            trans,
        }
    }

    pub fn cell_of_word(&self, w: &Word) -> CellState {
        let mut cell = self.root_cell();
        for &d in w.digits() {
            cell = self.child_cell(&cell, d as usize);
        }
        cell
    }

    /// Serialize the (cleared) spec back to config JSON. Parsing the output
    /// yields an identical spec.
    pub fn to_config_json(&self) -> serde_json::Value {
        use serde_json::{json, Value};
        let int_str = |x: &Int| Value::String(x.to_string());
        let vec_json = |v: &IVec| Value::Array(v.iter().map(int_str).collect());
        let inv = match &self.invariant_set {
            InvariantSet::Box { corner, side } => json!({
                "type": "box",
                "corner": vec_json(corner),
                "side": int_str(side),
            }),
            InvariantSet::Tile { full_digits } => json!({
                "type": "tile",
                "full_digits": full_digits.iter().map(|v| v.iter().map(|x| x.to_i64().unwrap()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }),
            InvariantSet::CustomNeighbors { vectors } => json!({
                "type": "custom_neighbors",
                "vectors": vectors.iter().map(|v| v.iter().map(|x| x.to_i64().unwrap()).collect::<Vec<_>>()).collect::<Vec<_>>(),
            }),
        };
        let mut obj = serde_json::Map::new();
        if let Some(n) = &self.name {
            obj.insert("name".into(), json!(n));
        }
        if let Some(n) = &self.notes {
            obj.insert("notes".into(), n.clone());
        }
        obj.insert("dimension".into(), json!(self.dimension));
        obj.insert(
            "matrix".into(),
            json!(self.matrix.rows_i64().expect("matrix entries fit i64")),
        );
        obj.insert(
            "digits".into(),
            Value::Array(self.digits.iter().map(vec_json).collect()),
        );
        if self.linear_parts.iter().any(|r| !r.is_identity()) {
            obj.insert(
                "linear_parts".into(),
                json!(self
                    .linear_parts
                    .iter()
                    .map(|r| r.rows_i64())
                    .collect::<Vec<_>>()),
            );
        }
        obj.insert("invariant_set".into(), inv);
        obj.insert("caps".into(), serde_json::to_value(&self.caps).unwrap());
        obj.insert("a_param".into(), json!(self.a_param));
        Value::Object(obj)
    }
}
