//! `augtree` — analyze augmented symbolic trees of integer IFS attractors.
//!
//! Semantic verdicts (UNKNOWN, caps, non-rearrangeable) exit 0; only faults
//! (unreadable config, invalid spec, I/O) exit nonzero.

use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use augtree::{emit_svg, run_analyze, run_compare, AnalyzeOptions, ExploredTree};

#[derive(Parser)]
#[command(
    name = "augtree",
    version,
    about = "Horizontal components, incidence matrices, rearrangement certificates, and near-isometries of integer IFS attractors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonFlags {
    /// Override the spec's max exploration depth cap.
    #[arg(long)]
    max_depth: Option<u32>,
    /// Largest matrix power tried for rearrangement certificates.
    #[arg(long, default_value_t = 6)]
    k_max: u32,
    /// Coarsen signature classes by one-level graph isomorphism (validated).
    #[arg(long)]
    merge_isomorphic: bool,
    /// Seed for boundary sampling; reports are byte-stable per seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the distortion audit (1 = sequential reference).
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl CommonFlags {
    fn to_options(&self) -> AnalyzeOptions {
        AnalyzeOptions {
            max_depth: self.max_depth,
            k_max: self.k_max,
            merge_isomorphic: self.merge_isomorphic,
            seed: self.seed,
            threads: self.threads.max(1),
            ..Default::default()
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on one config and print the report.
    Analyze {
        config: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
        /// Print the JSON report instead of the human summary.
        #[arg(long)]
        json: bool,
        /// Also write a component diagram of the deepest small level.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Analyze two configs and decide Lipschitz equivalence via the
    /// dust-like reduction.
    Compare {
        config_a: PathBuf,
        config_b: PathBuf,
        #[command(flatten)]
        flags: CommonFlags,
        #[arg(long)]
        json: bool,
    },
    /// Compute (or echo) the invariant-set neighbor vectors.
    Neighbors {
        config: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Build the near-isometry and export its permutation tables.
    Sigma {
        config: PathBuf,
        /// Depth of the bijection in iterated levels.
        #[arg(long, default_value_t = 4)]
        depth: u32,
        #[command(flatten)]
        flags: CommonFlags,
        #[arg(long)]
        json: bool,
    },
    /// Render one level's cells as SVG (box backend: rectangles; tile
    /// backend: lattice points and horizontal edges).
    Plot {
        config: PathBuf,
        #[arg(long, default_value_t = 2)]
        level: u32,
        /// Output path; stdout when omitted.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn read_config(path: &PathBuf) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Analyze {
            config,
            flags,
            json,
            svg,
        } => {
            let text = read_config(&config)?;
            let analysis = run_analyze(&text, &flags.to_options())?;
            if json {
                println!("{}", serde_json::to_string_pretty(&analysis.report)?);
            } else {
                print!("{}", analysis.human);
            }
            if let Some(path) = svg {
                let tree = analysis
                    .tree
                    .as_ref()
                    .context("no explored tree available for rendering")?;
                let level = tree.depth().min(3);
                let doc = emit_svg(&analysis.spec, &analysis.oracle, tree, level)?;
                std::fs::write(&path, doc)
                    .with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote level-{level} diagram to {}", path.display());
            }
        }
        Command::Compare {
            config_a,
            config_b,
            flags,
            json,
        } => {
            let (report, human) = run_compare(
                &read_config(&config_a)?,
                &read_config(&config_b)?,
                &flags.to_options(),
            )?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{human}");
            }
        }
        Command::Neighbors { config, json } => {
            let spec = augtree::IfsSpec::parse(&read_config(&config)?)?;
            let oracle = augtree::AdjacencyOracle::for_spec(&spec)?;
            match oracle.neighbor_set() {
                Some(ns) => {
                    if json {
                        let vectors: Vec<Vec<String>> = ns
                            .vectors
                            .iter()
                            .map(|v| v.iter().map(|x| x.to_string()).collect())
                            .collect();
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&serde_json::json!({
                                "provenance": ns.provenance,
                                "vectors": vectors,
                            }))?
                        );
                    } else {
                        println!("neighbor set ({:?}), {} vectors:", ns.provenance, ns.vectors.len());
                        for v in &ns.vectors {
                            let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
                            println!("  ({})", parts.join(", "));
                        }
                    }
                }
                None => {
                    if json {
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&serde_json::json!({
                                "provenance": "box-predicate",
                                "vectors": null,
                            }))?
                        );
                    } else {
                        println!(
                            "box backend: adjacency is decided by exact box intersection; no neighbor set"
                        );
                    }
                }
            }
        }
        Command::Sigma {
            config,
            depth,
            flags,
            json,
        } => {
            let mut opts = flags.to_options();
            opts.sigma_depth = depth;
            let analysis = run_analyze(&read_config(&config)?, &opts)?;
            match (&analysis.sigma, &analysis.report.sigma_audit) {
                (Some(sigma), Some(audit)) => {
                    if json {
                        println!(
                            "{}",
                            serde_json::to_string_pretty(&serde_json::json!({
                                "iteration": sigma.iteration(),
                                "depth": sigma.depth(),
                                "tables": sigma.permutation_tables(),
                                "audit": audit,
                                "pools": sigma.pools,
                            }))?
                        );
                    } else {
                        println!(
                            "near-isometry at iteration {} to depth {} (bijective: {}, siblings: {})",
                            sigma.iteration(),
                            sigma.depth(),
                            audit.bijective,
                            audit.sibling_property
                        );
                        println!(
                            "distortion over {} pairs: max {} <= bound {}: {}",
                            audit.distortion.pairs_checked,
                            audit.distortion.max_distortion,
                            audit.distortion.bound,
                            audit.distortion.within_bound
                        );
                        for (n, table) in sigma.permutation_tables().iter().enumerate() {
                            println!("level {n}: {table:?}");
                        }
                    }
                }
                _ => {
                    println!(
                        "near-isometry not constructed (verdict {}): no rearrangement certificate",
                        augtree::report::verdict_name(analysis.report.verdict)
                    );
                }
            }
        }
        Command::Plot { config, level, svg } => {
            let spec = augtree::IfsSpec::parse(&read_config(&config)?)?;
            let oracle = augtree::AdjacencyOracle::for_spec(&spec)?;
            let tree = ExploredTree::expand(&spec, &oracle, level)?;
            let doc = emit_svg(&spec, &oracle, &tree, level)?;
            match svg {
                Some(path) => {
                    std::fs::write(&path, doc)
                        .with_context(|| format!("writing {}", path.display()))?;
                    eprintln!("wrote {}", path.display());
                }
                None => print!("{doc}"),
            }
        }
    }
    Ok(())
}
