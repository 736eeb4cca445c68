//! Pipeline orchestration: run the full analysis on a parsed spec, assemble
//! the serializable report, render the human summary, and compare two specs.
//!
//! Exit discipline: semantic outcomes (UNKNOWN, caps, non-rearrangeable rows)
//! are verdicts inside a successful report; `Err` is reserved for faults
//! (unparseable config, invalid spec, I/O). The JSON serialization is
//! deterministic — struct field order, sorted config keys, and no timing
//! field (elapsed time is printed in the human rendering only).

use serde::Serialize;

use crate::boundary::{holder_sample, BoundarySample};
use crate::classify::{
    analyze_matrix, classify, merge_isomorphic, Classification, IncidenceAnalysis, TreeVerdict,
};
use crate::error::{Error, Result};
use crate::geometry::{AdjacencyOracle, Provenance};
use crate::model::{IfsSpec, InvariantSet};
use crate::rearrange::{
    rearrange_power, validate_certificate, PowerOutcome, RowFailure, DEFAULT_NODE_BUDGET,
};
use crate::sigma::{build_sigma, DistortionAudit, SigmaMap};
use crate::tree::ExploredTree;

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    /// Override for the spec's max_depth cap.
    pub max_depth: Option<u32>,
    pub k_max: u32,
    pub merge_isomorphic: bool,
    pub seed: u64,
    pub threads: usize,
    /// Depth (iterated levels) for the σ construction.
    pub sigma_depth: u32,
    /// Pair count per Hölder window.
    pub boundary_pairs: u64,
    pub node_budget: u64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            max_depth: None,
            k_max: 6,
            merge_isomorphic: false,
            seed: 0,
            threads: 1,
            sigma_depth: 5,
            boundary_pairs: 500,
            node_budget: DEFAULT_NODE_BUDGET,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    DustLike,
    EquivalentToDustLike,
    Unknown,
    NotSimpleUpToDepth,
    CapExceeded,
}

#[derive(Clone, Debug, Serialize)]
pub struct SignatureItemReport {
    pub linear: Vec<Vec<i64>>,
    pub offset: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassReport {
    pub index: usize,
    pub b: u64,
    pub discovered_level: u32,
    pub diameter: u32,
    pub representative: Vec<String>,
    pub signature: Vec<SignatureItemReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MergeReport {
    pub groups: Vec<Vec<usize>>,
    pub refused: Vec<Vec<usize>>,
    pub warning: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationReport {
    pub verdict: String,
    pub class_count: usize,
    pub b: Vec<u64>,
    pub matrix: Vec<Vec<u64>>,
    pub horizontal_bound: u32,
    pub max_component_size: u64,
    pub classes: Vec<ClassReport>,
    pub merge: Option<MergeReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct IncidenceReport {
    pub eigen_ok: bool,
    pub irreducible: bool,
    pub primitive_witness: Option<u64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RowFailureReport {
    pub row: usize,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttemptReport {
    pub k: u32,
    pub target: u64,
    pub failures: Vec<RowFailureReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RowCertificateReport {
    pub row: usize,
    pub groups: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RearrangeReport {
    pub k_max: u32,
    pub certified_k: Option<u32>,
    pub target: Option<u64>,
    pub certificates: Option<Vec<RowCertificateReport>>,
    pub certificates_validated: Option<bool>,
    pub attempts: Vec<AttemptReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SigmaAuditReport {
    pub iteration: u32,
    pub depth: u32,
    pub bijective: bool,
    pub sibling_property: bool,
    pub distortion: DistortionAudit,
}

#[derive(Clone, Debug, Serialize)]
pub struct NeighborSetReport {
    pub provenance: Provenance,
    pub vectors: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub name: Option<String>,
    pub seed: u64,
    pub merge_isomorphic: bool,
    pub k_max: u32,
    pub config: serde_json::Value,
    pub similitude: bool,
    pub contraction_ratio: f64,
    pub neighbor_set: Option<NeighborSetReport>,
    pub classification: ClassificationReport,
    pub incidence: Option<IncidenceReport>,
    pub rearrangement: Option<RearrangeReport>,
    pub sigma_audit: Option<SigmaAuditReport>,
    pub boundary: Option<BoundarySample>,
    pub explored_depth: u32,
    pub horizontal_edges_explored: Option<u64>,
    pub totally_disconnected: Option<bool>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

/// Everything the pipeline produced, for callers that need more than the
/// serialized report (σ tables, the explored tree, the oracle).
pub struct Analysis {
    pub spec: IfsSpec,
    pub oracle: AdjacencyOracle,
    pub classification: Classification,
    pub incidence: Option<IncidenceAnalysis>,
    pub power: Option<PowerOutcome>,
    pub sigma: Option<SigmaMap>,
    pub tree: Option<ExploredTree>,
    pub boundary: Option<BoundarySample>,
    pub report: Report,
    pub human: String,
    pub elapsed: std::time::Duration,
}

fn max_depth_for_words(m: usize, limit: usize) -> u32 {
    let mut depth = 0u32;
    let mut words = 1usize;
    while words.saturating_mul(m) <= limit {
        words *= m;
        depth += 1;
    }
    depth
}

fn failure_name(f: RowFailure) -> &'static str {
    match f {
        RowFailure::Divisibility => "divisibility",
        RowFailure::NoPartition => "no-partition",
        RowFailure::BudgetExhausted => "budget-exhausted",
    }
}

/// Full pipeline on one config.
pub fn run_analyze(config_text: &str, opts: &AnalyzeOptions) -> Result<Analysis> {
    let start = std::time::Instant::now();
    let mut spec = IfsSpec::parse(config_text)?;
    if let Some(d) = opts.max_depth {
        spec = spec.with_max_depth(d);
    }
    let oracle = AdjacencyOracle::for_spec(&spec)?;
    let m = spec.map_count();

    let base = classify(&spec, &oracle)?;
    let classification = if opts.merge_isomorphic && base.is_simple() {
        merge_isomorphic(&spec, &oracle, &base)?
    } else {
        base
    };

    let mut notes: Vec<String> = Vec::new();
    notes.push(
        "separation condition for disjoint same-level cells is assumed (it holds for integer digit systems of this kind)".into(),
    );
    if matches!(spec.invariant_set(), InvariantSet::CustomNeighbors { .. }) {
        notes.push("user-supplied neighbor set trusted; validated for symmetry only".into());
    }
    if !spec.is_similitude() {
        notes.push(
            "expanding matrix is not a similarity: tree-level analysis only; geometric equivalence statements hold in the matrix-adapted ultrametric".into(),
        );
    }
    if let Some(info) = &classification.merge {
        if let Some(w) = &info.warning {
            notes.push(w.clone());
        }
    }

    // incidence + rearrangement only for completed classifications
    let (incidence, power) = if classification.is_simple() {
        let inc = analyze_matrix(&classification.matrix, &classification.b, m as u64)?;
        let power = if inc.eigen_ok {
            Some(rearrange_power(
                &classification.matrix,
                &classification.b,
                m as u64,
                opts.k_max,
                opts.node_budget,
            )?)
        } else {
            None
        };
        (Some(inc), power)
    } else {
        (None, None)
    };

    // diagnostics tree: edge counts, σ audit, boundary windows
    let word_limit = 250_000usize;
    let depth_limit = max_depth_for_words(m, word_limit).min(spec.caps().max_depth);
    let edge_depth = depth_limit.min(6);
    let cert = match &power {
        Some(PowerOutcome::Certified(c)) => Some(c),
        _ => None,
    };
    let sigma_iter_depth = cert
        .map(|c| (depth_limit / c.k).min(opts.sigma_depth))
        .unwrap_or(0);
    let boundary_depth = {
        let d = depth_limit.saturating_sub(3).min(6);
        if d >= 2 {
            Some(d)
        } else {
            None
        }
    };
    let mut tree_depth = edge_depth.max(4.min(depth_limit));
    if let Some(c) = cert {
        tree_depth = tree_depth.max(c.k * sigma_iter_depth);
    }
    if classification.is_simple() {
        if let Some(bd) = boundary_depth {
            tree_depth = tree_depth.max(bd + 3);
        }
    }

    let tree = {
        let mut depth = tree_depth;
        loop {
            match ExploredTree::expand(&spec, &oracle, depth) {
                Ok(t) => break Some(t),
                Err(Error::ComponentCap(..)) if depth > 0 => depth -= 1,
                Err(Error::ComponentCap(..)) => break None,
                Err(e) => return Err(e),
            }
        }
    };

    let mut sigma = None;
    let mut sigma_audit = None;
    if let (Some(c), Some(t)) = (cert, &tree) {
        if sigma_iter_depth >= 1 && classification.is_simple() {
            let s = build_sigma(&spec, &oracle, t, &classification, c, sigma_iter_depth)?;
            let audit_level = {
                // keep the exhaustive pair check around a few hundred words
                let mut level = 0u32;
                let mut total = 1usize;
                while level < s.depth() {
                    let next = total + m.pow((level + 1) * c.k);
                    if next > 500 {
                        break;
                    }
                    total = next;
                    level += 1;
                }
                level.max(1).min(s.depth())
            };
            let distortion = s.verify_near_isometry_threaded(
                t,
                classification.horizontal_bound,
                audit_level,
                opts.threads,
            )?;
            sigma_audit = Some(SigmaAuditReport {
                iteration: c.k,
                depth: s.depth(),
                bijective: s.check_level_bijections(),
                sibling_property: s.check_sibling_property(t)?,
                distortion,
            });
            sigma = Some(s);
        }
    }

    let boundary = match (&tree, boundary_depth, classification.is_simple()) {
        (Some(t), Some(bd), true) if t.depth() >= bd + 3 => Some(holder_sample(
            &spec,
            t,
            bd,
            opts.boundary_pairs,
            spec.a_param(),
            opts.seed,
        )?),
        _ => None,
    };
    if let Some(bs) = &boundary {
        if !bs.a_constraint_ok {
            notes.push(format!(
                "a' = exp(δa) - 1 = {:.4} is not below √2 - 1 for the sampled δ; the ultrametric comparison constant is not certified",
                bs.a_prime
            ));
        }
    }

    // verdict
    let verdict = match classification.verdict {
        TreeVerdict::NotSimpleUpToDepth => Verdict::NotSimpleUpToDepth,
        TreeVerdict::CapExceeded => Verdict::CapExceeded,
        TreeVerdict::Simple => {
            if classification.is_dust_like() {
                Verdict::DustLike
            } else {
                let eigen_ok = incidence.as_ref().map(|i| i.eigen_ok).unwrap_or(false);
                match (&power, eigen_ok) {
                    (Some(PowerOutcome::Certified(_)), true) => Verdict::EquivalentToDustLike,
                    _ => Verdict::Unknown,
                }
            }
        }
    };
    match verdict {
        Verdict::DustLike => notes.push(
            "no horizontal edges: the attractor is dust-like (strongly separated pieces)".into(),
        ),
        Verdict::EquivalentToDustLike => {
            notes.push(
                "simple tree, eigen relation, and rearrangement certificates: the attractor is Lipschitz equivalent to a dust-like set with the same map count and ratio".into(),
            );
            notes.push("consequently the system satisfies the open set condition".into());
        }
        Verdict::Unknown => {
            if let Some(inc) = &incidence {
                if !inc.eigen_ok {
                    notes.push("obstruction: A·b = m·b fails".into());
                } else if inc.primitive.is_none() {
                    notes.push("obstruction: incidence matrix is not primitive".into());
                }
            }
            if let Some(PowerOutcome::Failed(attempts)) = &power {
                for att in attempts {
                    for (row, f) in &att.row_failures {
                        notes.push(format!(
                            "row {} of A^{} is not ({}, b)-rearrangeable: {}",
                            row + 1,
                            att.k,
                            att.target,
                            failure_name(*f)
                        ));
                    }
                }
                notes.push(
                    "equivalence to a dust-like set is undetermined (never refuted by this analysis)".into(),
                );
            }
        }
        _ => {}
    }
    if classification.is_simple() {
        notes.push(
            "horizontal components are uniformly bounded: the attractor is totally disconnected"
                .into(),
        );
    }

    let report = Report {
        schema: "augtree-report/1",
        name: spec.name().map(|s| s.to_string()),
        seed: opts.seed,
        merge_isomorphic: opts.merge_isomorphic,
        k_max: opts.k_max,
        config: spec.to_config_json(),
        similitude: spec.is_similitude(),
        contraction_ratio: spec.contraction_ratio(),
        neighbor_set: oracle.neighbor_set().map(|n| NeighborSetReport {
            provenance: n.provenance,
            vectors: n
                .vectors
                .iter()
                .map(|v| v.iter().map(|x| x.to_string()).collect())
                .collect(),
        }),
        classification: classification_report(&classification),
        incidence: incidence.as_ref().map(|i| IncidenceReport {
            eigen_ok: i.eigen_ok,
            irreducible: i.irreducible,
            primitive_witness: i.primitive,
        }),
        rearrangement: power.as_ref().map(|p| rearrange_report(
            p,
            opts.k_max,
            &classification,
            m as u64,
        )),
        sigma_audit: sigma_audit.clone(),
        boundary: boundary.clone(),
        explored_depth: tree.as_ref().map(|t| t.depth()).unwrap_or(0),
        horizontal_edges_explored: tree.as_ref().map(|t| t.total_horizontal_edges()),
        totally_disconnected: if classification.is_simple() {
            Some(true)
        } else {
            None
        },
        verdict,
        notes,
    };
    let elapsed = start.elapsed();
    let human = render_human(&report, elapsed);
    Ok(Analysis {
        spec,
        oracle,
        classification,
        incidence,
        power,
        sigma,
        tree,
        boundary,
        report,
        human,
        elapsed,
    })
}

fn classification_report(c: &Classification) -> ClassificationReport {
    ClassificationReport {
        verdict: match c.verdict {
            TreeVerdict::Simple => "simple".into(),
            TreeVerdict::NotSimpleUpToDepth => "not-simple-up-to-depth".into(),
            TreeVerdict::CapExceeded => "cap-exceeded".into(),
        },
        class_count: c.class_count(),
        b: c.b.clone(),
        matrix: c.matrix.clone(),
        horizontal_bound: c.horizontal_bound,
        max_component_size: c.max_component_size,
        classes: c
            .classes
            .iter()
            .enumerate()
            .map(|(i, info)| ClassReport {
                index: i + 1,
                b: info.b,
                discovered_level: info.discovered_level,
                diameter: info.diameter,
                representative: info
                    .representative
                    .members
                    .iter()
                    .map(|(w, _)| w.to_string())
                    .collect(),
                signature: info
                    .signature
                    .items()
                    .iter()
                    .map(|(linear, offset)| SignatureItemReport {
                        linear: decode_linear(linear),
                        offset: offset.iter().map(|x| x.to_string()).collect(),
                    })
                    .collect(),
            })
            .collect(),
        merge: c.merge.as_ref().map(|m| MergeReport {
            groups: m
                .groups
                .iter()
                .map(|g| g.iter().map(|&i| i + 1).collect())
                .collect(),
            refused: m
                .refused
                .iter()
                .map(|g| g.iter().map(|&i| i + 1).collect())
                .collect(),
            warning: m.warning.clone(),
        }),
    }
}

fn decode_linear(encoded: &[i8]) -> Vec<Vec<i64>> {
    let d = (encoded.len() as f64).sqrt() as usize;
    (0..d)
        .map(|i| (0..d).map(|j| encoded[i * d + j] as i64).collect())
        .collect()
}

fn rearrange_report(
    p: &PowerOutcome,
    k_max: u32,
    classification: &Classification,
    m: u64,
) -> RearrangeReport {
    match p {
        PowerOutcome::Certified(cert) => {
            let validated = cert
                .rows
                .iter()
                .enumerate()
                .all(|(i, rc)| {
                    validate_certificate(rc, &cert.matrix_power[i], &classification.b, cert.target)
                });
            let _ = m;
            RearrangeReport {
                k_max,
                certified_k: Some(cert.k),
                target: Some(cert.target),
                certificates: Some(
                    cert.rows
                        .iter()
                        .enumerate()
                        .map(|(i, rc)| RowCertificateReport {
                            row: i + 1,
                            groups: rc.groups.clone(),
                        })
                        .collect(),
                ),
                certificates_validated: Some(validated),
                attempts: Vec::new(),
            }
        }
        PowerOutcome::Failed(attempts) => RearrangeReport {
            k_max,
            certified_k: None,
            target: None,
            certificates: None,
            certificates_validated: None,
            attempts: attempts
                .iter()
                .map(|a| AttemptReport {
                    k: a.k,
                    target: a.target,
                    failures: a
                        .row_failures
                        .iter()
                        .map(|(row, f)| RowFailureReport {
                            row: row + 1,
                            reason: failure_name(*f).into(),
                        })
                        .collect(),
                })
                .collect(),
        },
    }
}

fn render_human(report: &Report, elapsed: std::time::Duration) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let name = report.name.as_deref().unwrap_or("(unnamed spec)");
    let _ = writeln!(out, "augtree analysis — {name}");
    let _ = writeln!(
        out,
        "  contraction ratio r = {:.6}{}",
        report.contraction_ratio,
        if report.similitude {
            ""
        } else {
            "  (self-affine: tree-level metrics)"
        }
    );
    if let Some(ns) = &report.neighbor_set {
        let vs: Vec<String> = ns
            .vectors
            .iter()
            .map(|v| format!("({})", v.join(",")))
            .collect();
        let _ = writeln!(out, "  neighbor set ({:?}): {}", ns.provenance, vs.join(" "));
    }
    let c = &report.classification;
    let _ = writeln!(
        out,
        "  classification: {} — {} classes, b = {:?}, horizontal bound k = {}, max component {}",
        c.verdict, c.class_count, c.b, c.horizontal_bound, c.max_component_size
    );
    for row in &c.matrix {
        let _ = writeln!(out, "    A row: {row:?}");
    }
    if let Some(mr) = &c.merge {
        let _ = writeln!(
            out,
            "  merged classes: groups {:?}{}",
            mr.groups,
            if mr.refused.is_empty() {
                String::new()
            } else {
                format!(", refused {:?}", mr.refused)
            }
        );
    }
    if let Some(inc) = &report.incidence {
        let _ = writeln!(
            out,
            "  incidence: A·b = m·b: {}; irreducible: {}; primitive: {}",
            inc.eigen_ok,
            inc.irreducible,
            match inc.primitive_witness {
                Some(w) => format!("yes (witness {w})"),
                None => "no".into(),
            }
        );
    }
    if let Some(re) = &report.rearrangement {
        match re.certified_k {
            Some(k) => {
                let _ = writeln!(
                    out,
                    "  rearrangeable: k = {k} (target {}), certificates validated: {}",
                    re.target.unwrap(),
                    re.certificates_validated.unwrap_or(false)
                );
            }
            None => {
                let _ = writeln!(out, "  rearrangeable: no certificate for k <= {}", re.k_max);
            }
        }
    }
    if let Some(sa) = &report.sigma_audit {
        let _ = writeln!(
            out,
            "  near-isometry: iteration {}, depth {}, bijective: {}, siblings: {}, distortion {} <= {}: {}",
            sa.iteration,
            sa.depth,
            sa.bijective,
            sa.sibling_property,
            sa.distortion.max_distortion,
            sa.distortion.bound,
            sa.distortion.within_bound
        );
    } else {
        let _ = writeln!(out, "  near-isometry: not constructed");
    }
    if let Some(bs) = &report.boundary {
        let _ = writeln!(
            out,
            "  boundary: a = {:.4}, α = {:.4}, window spreads {:?} (ratio {:.3}), δ = {:.1}, a' = {:.4} (< √2-1: {})",
            bs.a,
            bs.alpha,
            bs.windows.iter().map(|w| w.spread).collect::<Vec<_>>(),
            bs.window_spread_ratio,
            bs.delta_twice as f64 / 2.0,
            bs.a_prime,
            bs.a_constraint_ok
        );
    }
    if let Some(e) = report.horizontal_edges_explored {
        let _ = writeln!(
            out,
            "  explored to depth {}: {} horizontal edges",
            report.explored_depth, e
        );
    }
    let _ = writeln!(out, "  verdict: {}", verdict_name(report.verdict));
    for n in &report.notes {
        let _ = writeln!(out, "  note: {n}");
    }
    let _ = writeln!(out, "  elapsed: {} ms", elapsed.as_millis());
    out
}

pub fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::DustLike => "DUST_LIKE",
        Verdict::EquivalentToDustLike => "EQUIVALENT_TO_DUST_LIKE",
        Verdict::Unknown => "UNKNOWN",
        Verdict::NotSimpleUpToDepth => "NOT_SIMPLE_UP_TO_DEPTH",
        Verdict::CapExceeded => "CAP_EXCEEDED",
    }
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CompareVerdict {
    Equivalent,
    Undetermined,
    NotApplicable,
}

#[derive(Serialize)]
pub struct ComparisonReport {
    pub schema: &'static str,
    pub verdict: CompareVerdict,
    pub applicable: bool,
    pub reason: Option<String>,
    pub notes: Vec<String>,
    pub left: Report,
    pub right: Report,
}

/// Compare two specs: with equal map count, dimension, and |det B|, two
/// attractors that are each (equivalent to) dust-like are Lipschitz
/// equivalent to each other.
pub fn run_compare(
    left_text: &str,
    right_text: &str,
    opts: &AnalyzeOptions,
) -> Result<(ComparisonReport, String)> {
    let left = run_analyze(left_text, opts)?;
    let right = run_analyze(right_text, opts)?;
    let mut notes = Vec::new();

    let mut reason = None;
    if left.spec.map_count() != right.spec.map_count() {
        reason = Some(format!(
            "map counts differ: {} vs {}",
            left.spec.map_count(),
            right.spec.map_count()
        ));
    } else if left.spec.dimension() != right.spec.dimension() {
        reason = Some(format!(
            "dimensions differ: {} vs {}",
            left.spec.dimension(),
            right.spec.dimension()
        ));
    } else if left.spec.det_abs() != right.spec.det_abs() {
        reason = Some(format!(
            "contraction ratios differ: |det B| = {} vs {}",
            left.spec.det_abs(),
            right.spec.det_abs()
        ));
    }
    let applicable = reason.is_none();

    let is_dustlike_side = |v: Verdict| {
        matches!(v, Verdict::DustLike | Verdict::EquivalentToDustLike)
    };
    let verdict = if !applicable {
        CompareVerdict::NotApplicable
    } else if is_dustlike_side(left.report.verdict) && is_dustlike_side(right.report.verdict) {
        CompareVerdict::Equivalent
    } else {
        CompareVerdict::Undetermined
    };
    match verdict {
        CompareVerdict::Equivalent => {
            notes.push(
                "both attractors are Lipschitz equivalent to dust-like sets with the same map count and contraction ratio, hence to each other".into(),
            );
            if !left.spec.is_similitude() || !right.spec.is_similitude() {
                notes.push(
                    "self-affine input: the equivalence holds in the matrix-adapted ultrametric".into(),
                );
            }
        }
        CompareVerdict::Undetermined => {
            for (side, report) in [("left", &left.report), ("right", &right.report)] {
                if !is_dustlike_side(report.verdict) {
                    notes.push(format!(
                        "{side} spec is not certified dust-like-equivalent (verdict {})",
                        verdict_name(report.verdict)
                    ));
                }
            }
        }
        CompareVerdict::NotApplicable => {
            notes.push("hypotheses fail: the dust-like comparison needs equal map counts and equal contraction ratios".into());
        }
    }

    let comparison = ComparisonReport {
        schema: "augtree-compare/1",
        verdict,
        applicable,
        reason,
        notes,
        left: left.report,
        right: right.report,
    };
    let mut human = String::new();
    use std::fmt::Write;
    let _ = writeln!(
        human,
        "augtree comparison: {}",
        match verdict {
            CompareVerdict::Equivalent => "K ≃ K′ (both equivalent to the same dust-like model)",
            CompareVerdict::Undetermined => "undetermined",
            CompareVerdict::NotApplicable => "NOT_APPLICABLE",
        }
    );
    if let Some(r) = &comparison.reason {
        let _ = writeln!(human, "  reason: {r}");
    }
    for n in &comparison.notes {
        let _ = writeln!(human, "  note: {n}");
    }
    let _ = writeln!(human, "--- left ---\n{}", left.human);
    let _ = writeln!(human, "--- right ---\n{}", right.human);
    Ok((comparison, human))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::tests::{CFG_024, CFG_034, CFG_GOSPER, CFG_OVERLAP, CFG_REFL};

    #[test]
    fn analyze_interval_system() {
        let a = run_analyze(CFG_034, &AnalyzeOptions::default()).unwrap();
        assert_eq!(a.report.verdict, Verdict::EquivalentToDustLike);
        let re = a.report.rearrangement.as_ref().unwrap();
        assert_eq!(re.certified_k, Some(1));
        assert_eq!(re.certificates_validated, Some(true));
        let sa = a.report.sigma_audit.as_ref().unwrap();
        assert!(sa.bijective && sa.sibling_property && sa.distortion.within_bound);
        assert_eq!(a.report.totally_disconnected, Some(true));
    }

    #[test]
    fn analyze_dust_like() {
        let a = run_analyze(CFG_024, &AnalyzeOptions::default()).unwrap();
        assert_eq!(a.report.verdict, Verdict::DustLike);
        assert_eq!(a.report.horizontal_edges_explored, Some(0));
        assert!(a.report.explored_depth >= 6);
    }

    #[test]
    fn analyze_reflected_system_unknown() {
        let a = run_analyze(CFG_REFL, &AnalyzeOptions::default()).unwrap();
        assert_eq!(a.report.verdict, Verdict::Unknown);
        let inc = a.report.incidence.as_ref().unwrap();
        assert!(inc.eigen_ok && !inc.irreducible);
        assert!(a
            .report
            .notes
            .iter()
            .any(|n| n.contains("not primitive")));
        assert!(a
            .report
            .notes
            .iter()
            .any(|n| n.contains("no-partition")));
        assert!(a.report.sigma_audit.is_none());
    }

    #[test]
    fn analyze_merge_flag() {
        let mut opts = AnalyzeOptions::default();
        opts.merge_isomorphic = true;
        let a = run_analyze(CFG_OVERLAP, &opts).unwrap();
        assert_eq!(a.report.classification.class_count, 2);
        assert_eq!(
            a.report.classification.matrix,
            vec![vec![1, 2], vec![2, 4]]
        );
        assert_eq!(a.report.verdict, Verdict::EquivalentToDustLike);
    }

    #[test]
    fn report_json_is_deterministic() {
        for cfg in [CFG_034, CFG_REFL, CFG_GOSPER] {
            let opts = AnalyzeOptions {
                seed: 7,
                ..Default::default()
            };
            let a1 = run_analyze(cfg, &opts).unwrap();
            let a2 = run_analyze(cfg, &opts).unwrap();
            let j1 = serde_json::to_string_pretty(&a1.report).unwrap();
            let j2 = serde_json::to_string_pretty(&a2.report).unwrap();
            assert_eq!(j1, j2);
        }
    }

    #[test]
    fn compare_dust_like_and_equivalent() {
        let (cmp, _) = run_compare(CFG_024, CFG_034, &AnalyzeOptions::default()).unwrap();
        assert_eq!(cmp.verdict, CompareVerdict::Equivalent);
    }

    #[test]
    fn compare_mismatched_map_counts() {
        let (cmp, _) = run_compare(CFG_024, CFG_OVERLAP, &AnalyzeOptions::default()).unwrap();
        assert_eq!(cmp.verdict, CompareVerdict::NotApplicable);
        assert!(!cmp.applicable);
    }

    #[test]
    fn compare_reflected_undetermined() {
        let (cmp, _) = run_compare(CFG_034, CFG_REFL, &AnalyzeOptions::default()).unwrap();
        assert_eq!(cmp.verdict, CompareVerdict::Undetermined);
    }
}
