//! Library behind the `recognet` binary: load BNET files, dispatch
//! solvers, and render reports in a human-readable text form or a stable
//! machine-readable records form.

use clap::ValueEnum;
use recognet_core::eigen::{self, EigenError};
use recognet_core::format::{canonical, load, LoadError, NetBundle};
use recognet_core::net::{Evidence, NetError, NodeId, StructureClass};
use recognet_core::oracle::{self, OracleError};
use recognet_core::pearl::{self, PearlError};
use recognet_core::vision::{self, VisionError};
use recognet_core::BayesNet;
use std::fmt;
use std::path::Path;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Report rendering formats. `records` is line-oriented key/value output
/// that stays byte-identical for identical inputs (modulo the version
/// header line).
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Records,
}

/// Concrete solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Exact,
    Pearl,
    Eigen,
    LambdaOnly,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Solver::Exact => "exact",
            Solver::Pearl => "pearl",
            Solver::Eigen => "eigen",
            Solver::LambdaOnly => "lambda-only",
        };
        f.write_str(s)
    }
}

/// Solver argument for `infer`; `auto` picks by structure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Exact,
    Pearl,
    Eigen,
    LambdaOnly,
}

/// The regime-to-solver mapping used by `--solver auto`.
pub fn auto_solver(structure: StructureClass) -> Solver {
    match structure {
        StructureClass::Tree => Solver::LambdaOnly,
        StructureClass::Polytree => Solver::Pearl,
        StructureClass::SharedLeafPair => Solver::Eigen,
        StructureClass::General => Solver::Exact,
    }
}

pub fn applicable(solver: Solver, structure: StructureClass) -> bool {
    match solver {
        Solver::Exact => true,
        Solver::Pearl => matches!(structure, StructureClass::Tree | StructureClass::Polytree),
        Solver::Eigen => structure == StructureClass::SharedLeafPair,
        Solver::LambdaOnly => structure == StructureClass::Tree,
    }
}

#[derive(Debug)]
pub enum CliError {
    Io {
        path: String,
        message: String,
    },
    Load(LoadError),
    Pearl(PearlError),
    Eigen(EigenError),
    Oracle(OracleError),
    Vision(VisionError),
    SolverInapplicable {
        solver: Solver,
        structure: StructureClass,
        suggestion: Solver,
    },
    UnknownQueryNode {
        node: String,
    },
    QueryNotCovered {
        node: String,
        solver: Solver,
    },
    NotEnoughSolvers,
    BadSizeCap {
        value: String,
    },
}

impl CliError {
    /// Stable machine-parsable code for the single-line error output.
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io-error",
            CliError::Load(LoadError::Parse(_)) => "parse-error",
            CliError::Load(LoadError::Net(e)) => net_code(e),
            CliError::Pearl(e) => match e {
                PearlError::NotPolytree { .. } => "not-polytree",
                PearlError::NotTree { .. } => "not-tree",
                PearlError::EvidenceOnInternalNode { .. } => "evidence-on-internal-node",
                PearlError::InconsistentEvidence => "inconsistent-evidence",
                PearlError::DimensionMismatch { .. } => "dimension-mismatch",
                PearlError::WrongArity { .. } => "wrong-arity",
                PearlError::NotInstantiated => "not-instantiated",
                PearlError::TargetNotParent => "target-not-parent",
                PearlError::InvalidEvidenceState { .. } => "invalid-evidence-state",
            },
            CliError::Eigen(e) => match e {
                EigenError::NotSharedLeafPair { .. } => "not-shared-leaf-pair",
                EigenError::UninstantiatedLeaf { .. } => "uninstantiated-leaf",
                EigenError::NonConvergence { .. } => "non-convergence",
                EigenError::DegenerateSpectrum { .. } => "degenerate-spectrum",
                EigenError::DimensionMismatch { .. } => "dimension-mismatch",
                EigenError::NotSquare { .. } => "not-square",
                EigenError::NegativeEntry => "negative-entry",
                EigenError::ZeroMatrix => "zero-matrix",
            },
            CliError::Oracle(e) => match e {
                OracleError::TooLarge { .. } => "too-large",
                OracleError::ZeroProbabilityEvidence => "zero-probability-evidence",
            },
            CliError::Vision(e) => match e {
                VisionError::LevelViolation { .. } => "level-violation",
                VisionError::BadEpsilon { .. } => "bad-epsilon",
                VisionError::Malformed { .. } => "malformed-decomposition",
                VisionError::Net(e) => net_code(e),
            },
            CliError::SolverInapplicable { .. } => "solver-inapplicable",
            CliError::UnknownQueryNode { .. } => "unknown-node",
            CliError::QueryNotCovered { .. } => "query-not-covered",
            CliError::NotEnoughSolvers => "not-enough-solvers",
            CliError::BadSizeCap { .. } => "bad-size-cap",
        }
    }
}

fn net_code(e: &NetError) -> &'static str {
    match e {
        NetError::EmptyNet => "empty-net",
        NetError::DuplicateNode(_) => "duplicate-node",
        NetError::InvalidNode { .. } => "invalid-node",
        NetError::UnknownNode(_) => "unknown-node",
        NetError::DuplicateArc { .. } => "duplicate-arc",
        NetError::CycleDetected { .. } => "cycle-detected",
        NetError::CptMismatch { .. } => "cpt-mismatch",
        NetError::NoSuchArc { .. } => "no-such-arc",
        NetError::WouldCreateCycle { .. } => "would-create-cycle",
        NetError::WrongArity { .. } => "wrong-arity",
        NetError::InvalidEvidence { .. } => "invalid-evidence",
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, message } => write!(f, "{path}: {message}"),
            CliError::Load(e) => e.fmt(f),
            CliError::Pearl(e) => e.fmt(f),
            CliError::Eigen(e) => e.fmt(f),
            CliError::Oracle(e) => e.fmt(f),
            CliError::Vision(e) => e.fmt(f),
            CliError::SolverInapplicable {
                solver,
                structure,
                suggestion,
            } => write!(
                f,
                "solver '{solver}' does not apply to a {structure} net; try '--solver {suggestion}'"
            ),
            CliError::UnknownQueryNode { node } => write!(f, "unknown query node '{node}'"),
            CliError::QueryNotCovered { node, solver } => write!(
                f,
                "solver '{solver}' does not produce a belief for '{node}'"
            ),
            CliError::NotEnoughSolvers => {
                write!(f, "compare needs at least two distinct solvers")
            }
            CliError::BadSizeCap { value } => {
                write!(
                    f,
                    "RECOGNET_SIZE_CAP must be a positive integer, got '{value}'"
                )
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<LoadError> for CliError {
    fn from(e: LoadError) -> Self {
        CliError::Load(e)
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Oracle(e)
    }
}

impl From<PearlError> for CliError {
    fn from(e: PearlError) -> Self {
        CliError::Pearl(e)
    }
}

impl From<EigenError> for CliError {
    fn from(e: EigenError) -> Self {
        CliError::Eigen(e)
    }
}

/// Joint-size cap, overridable through RECOGNET_SIZE_CAP.
pub fn size_cap_from_env() -> Result<usize, CliError> {
    match std::env::var("RECOGNET_SIZE_CAP") {
        Ok(v) => v
            .parse::<usize>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or(CliError::BadSizeCap { value: v }),
        Err(_) => Ok(oracle::DEFAULT_JOINT_CAP),
    }
}

pub fn load_bundle(path: &Path) -> Result<NetBundle, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    Ok(load(&text)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub nodes: usize,
    pub arcs: usize,
    pub structure: StructureClass,
    pub evidence: usize,
    pub warnings: Vec<String>,
}

/// Parse and validate a file; levels, when present, must cover every node
/// and point strictly downward.
pub fn cmd_validate(path: &Path) -> Result<ValidationReport, CliError> {
    let bundle = load_bundle(path)?;
    vision::check_levels(&bundle.net, &bundle.levels).map_err(CliError::Vision)?;
    Ok(ValidationReport {
        nodes: bundle.net.node_count(),
        arcs: bundle.net.arcs().len(),
        structure: bundle.net.classify(),
        evidence: bundle.evidence.len(),
        warnings: bundle.net.warnings().to_vec(),
    })
}

pub fn cmd_classify(path: &Path) -> Result<StructureClass, CliError> {
    Ok(load_bundle(path)?.net.classify())
}

/// Canonical serialization of a parsed file.
pub fn cmd_canonical(path: &Path) -> Result<String, CliError> {
    Ok(canonical(&load_bundle(path)?))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceReport {
    pub solver: Solver,
    pub auto_selected: bool,
    pub structure: StructureClass,
    /// Per-node beliefs in declaration order (or query order when given).
    pub beliefs: Vec<(String, Vec<f64>)>,
    /// Solver-specific diagnostics as ordered key/value pairs.
    pub diagnostics: Vec<(String, String)>,
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Per-node beliefs plus solver diagnostics.
type SolverOutput = (Vec<(NodeId, Vec<f64>)>, Vec<(String, String)>);

fn solve(
    net: &BayesNet,
    evidence: &Evidence,
    solver: Solver,
    cap: usize,
) -> Result<SolverOutput, CliError> {
    match solver {
        Solver::Exact => {
            let size: usize = net.nodes().map(|(_, d)| d.cardinality).product();
            let beliefs = oracle::posterior_all_capped(net, evidence, cap)?;
            let out = beliefs
                .into_iter()
                .enumerate()
                .map(|(i, b)| (NodeId(i), b))
                .collect();
            Ok((out, vec![("joint-size".into(), size.to_string())]))
        }
        Solver::Pearl => {
            let state = pearl::propagate(net, evidence)?;
            let out = state
                .beliefs()
                .iter()
                .enumerate()
                .map(|(i, b)| (NodeId(i), b.clone()))
                .collect();
            let diags = vec![("messages".into(), state.message_count().to_string())];
            Ok((out, diags))
        }
        Solver::LambdaOnly => {
            let root = net.roots().into_iter().next().expect("a tree has a root");
            let bel = pearl::lambda_only_update(net, evidence, root)?;
            let diags = vec![("root".into(), net.node(root).id.clone())];
            Ok((vec![(root, bel)], diags))
        }
        Solver::Eigen => {
            let sol = eigen::solve_shared_leaf_pair(net, evidence)?;
            let fp1 = sol
                .cycle
                .fixed_point_residual(&sol.bel_root1)
                .unwrap_or(f64::NAN);
            let mut diags = vec![
                (
                    "cycle-eigenvalue".into(),
                    sol.alpha.cycle_eigenvalue.to_string(),
                ),
                (
                    "cycle-normalizer".into(),
                    sol.alpha.cycle_normalizer.to_string(),
                ),
            ];
            for (leaf, val) in &sol.alpha.leaf_slice_eigenvalues {
                diags.push((
                    "leaf-eigenvalue".into(),
                    format!("{} {}", net.node(*leaf).id, val),
                ));
            }
            diags.push((
                "eigen-iterations".into(),
                format!("{} {}", sol.eigen1.iterations, sol.eigen2.iterations),
            ));
            diags.push((
                "eigen-residual".into(),
                format!("{} {}", sol.eigen1.residual, sol.eigen2.residual),
            ));
            diags.push(("fixed-point-residual".into(), fp1.to_string()));
            if let Some(gap) = sol.direct_agreement {
                diags.push(("direct-agreement-2x2".into(), gap.to_string()));
            }
            diags.push((
                "positivity".into(),
                if sol.strictly_positive {
                    "strictly-positive".into()
                } else {
                    "nonnegative".into()
                },
            ));
            diags.push(("orientation".into(), sol.cycle.orientation.to_string()));
            // The second root's components follow its own state order, which
            // mirrors the first cycle's ordering convention.
            diags.push(("h2-component-order".into(), "transposed-cycle".into()));
            diags.push(("alpha-note".into(), sol.alpha.note.to_string()));
            Ok((
                vec![
                    (sol.roots.0, sol.bel_root1.clone()),
                    (sol.roots.1, sol.bel_root2.clone()),
                ],
                diags,
            ))
        }
    }
}

/// Run one solver over a file and report posteriors for the queried nodes
/// (all covered nodes when no query is given).
pub fn cmd_infer(
    path: &Path,
    solver: SolverArg,
    query: &[String],
    cap: usize,
) -> Result<InferenceReport, CliError> {
    let bundle = load_bundle(path)?;
    let structure = bundle.net.classify();
    let (resolved, auto_selected) = match solver {
        SolverArg::Auto => (auto_solver(structure), true),
        SolverArg::Exact => (Solver::Exact, false),
        SolverArg::Pearl => (Solver::Pearl, false),
        SolverArg::Eigen => (Solver::Eigen, false),
        SolverArg::LambdaOnly => (Solver::LambdaOnly, false),
    };
    if !applicable(resolved, structure) {
        return Err(CliError::SolverInapplicable {
            solver: resolved,
            structure,
            suggestion: auto_solver(structure),
        });
    }
    let (by_id, diagnostics) = solve(&bundle.net, &bundle.evidence, resolved, cap)?;
    let beliefs = select_beliefs(&bundle.net, &by_id, query, resolved)?;
    Ok(InferenceReport {
        solver: resolved,
        auto_selected,
        structure,
        beliefs,
        diagnostics,
    })
}

fn select_beliefs(
    net: &BayesNet,
    by_id: &[(NodeId, Vec<f64>)],
    query: &[String],
    solver: Solver,
) -> Result<Vec<(String, Vec<f64>)>, CliError> {
    if query.is_empty() {
        return Ok(by_id
            .iter()
            .map(|(id, b)| (net.node(*id).id.clone(), b.clone()))
            .collect());
    }
    let mut out = Vec::with_capacity(query.len());
    for name in query {
        let id = net
            .node_id(name)
            .ok_or_else(|| CliError::UnknownQueryNode { node: name.clone() })?;
        let bel =
            by_id
                .iter()
                .find(|(n, _)| *n == id)
                .ok_or_else(|| CliError::QueryNotCovered {
                    node: name.clone(),
                    solver,
                })?;
        out.push((name.clone(), bel.1.clone()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub structure: StructureClass,
    pub results: Vec<InferenceReport>,
    /// (node, solver a, solver b, L1 distance) for every node covered by
    /// both solvers of a pair. Distances are reported as computed, never
    /// thresholded away.
    pub divergence: Vec<(String, Solver, Solver, f64)>,
}

/// Run several solvers on one file and tabulate per-node L1 distances.
pub fn cmd_compare(path: &Path, solvers: &[Solver], cap: usize) -> Result<CompareReport, CliError> {
    let mut distinct: Vec<Solver> = Vec::new();
    for &s in solvers {
        if !distinct.contains(&s) {
            distinct.push(s);
        }
    }
    if distinct.len() < 2 {
        return Err(CliError::NotEnoughSolvers);
    }
    let bundle = load_bundle(path)?;
    let structure = bundle.net.classify();
    let mut results = Vec::with_capacity(distinct.len());
    let mut covered: Vec<Vec<(NodeId, Vec<f64>)>> = Vec::with_capacity(distinct.len());
    for &solver in &distinct {
        if !applicable(solver, structure) {
            return Err(CliError::SolverInapplicable {
                solver,
                structure,
                suggestion: auto_solver(structure),
            });
        }
        let (by_id, diagnostics) = solve(&bundle.net, &bundle.evidence, solver, cap)?;
        results.push(InferenceReport {
            solver,
            auto_selected: false,
            structure,
            beliefs: by_id
                .iter()
                .map(|(id, b)| (bundle.net.node(*id).id.clone(), b.clone()))
                .collect(),
            diagnostics,
        });
        covered.push(by_id);
    }
    let mut divergence = Vec::new();
    for i in 0..distinct.len() {
        for j in (i + 1)..distinct.len() {
            for (id, bi) in &covered[i] {
                if let Some((_, bj)) = covered[j].iter().find(|(n, _)| n == id) {
                    let l1: f64 = bi.iter().zip(bj).map(|(a, b)| (a - b).abs()).sum();
                    divergence.push((
                        bundle.net.node(*id).id.clone(),
                        distinct[i],
                        distinct[j],
                        l1,
                    ));
                }
            }
        }
    }
    Ok(CompareReport {
        structure,
        results,
        divergence,
    })
}

fn records_header(command: &str) -> String {
    format!("recognet {VERSION}\ncommand {command}\n")
}

pub fn render_validate(r: &ValidationReport, format: Format) -> String {
    match format {
        Format::Text => {
            let mut out = format!(
                "ok: {} nodes, {} arcs, {} evidence\nstructure: {}\n",
                r.nodes, r.arcs, r.evidence, r.structure
            );
            for w in &r.warnings {
                out.push_str(&format!("warning: {w}\n"));
            }
            out
        }
        Format::Records => {
            let mut out = records_header("validate");
            out.push_str("status ok\n");
            out.push_str(&format!("nodes {}\n", r.nodes));
            out.push_str(&format!("arcs {}\n", r.arcs));
            out.push_str(&format!("evidence {}\n", r.evidence));
            out.push_str(&format!("structure {}\n", r.structure));
            for w in &r.warnings {
                out.push_str(&format!("warning {w}\n"));
            }
            out
        }
    }
}

pub fn render_classify(structure: StructureClass, format: Format) -> String {
    match format {
        Format::Text => format!("{structure}\n"),
        Format::Records => {
            let mut out = records_header("classify");
            out.push_str(&format!("structure {structure}\n"));
            out
        }
    }
}

pub fn render_infer(r: &InferenceReport, format: Format) -> String {
    match format {
        Format::Text => {
            let mut out = format!("structure: {}\n", r.structure);
            out.push_str(&format!(
                "solver: {}{}\n",
                r.solver,
                if r.auto_selected { " (auto)" } else { "" }
            ));
            for (node, bel) in &r.beliefs {
                out.push_str(&format!("belief {node}: {}\n", fmt_vec(bel)));
            }
            for (k, v) in &r.diagnostics {
                out.push_str(&format!("{k}: {v}\n"));
            }
            out
        }
        Format::Records => {
            let mut out = records_header("infer");
            out.push_str(&format!("structure {}\n", r.structure));
            out.push_str(&format!("solver {}\n", r.solver));
            for (node, bel) in &r.beliefs {
                out.push_str(&format!("belief {node} {}\n", fmt_vec(bel)));
            }
            for (k, v) in &r.diagnostics {
                out.push_str(&format!("diag {k} {v}\n"));
            }
            out
        }
    }
}

pub fn render_compare(r: &CompareReport, format: Format) -> String {
    match format {
        Format::Text => {
            let mut out = format!("structure: {}\n", r.structure);
            for res in &r.results {
                out.push_str(&format!("solver: {}\n", res.solver));
                for (node, bel) in &res.beliefs {
                    out.push_str(&format!("  belief {node}: {}\n", fmt_vec(bel)));
                }
            }
            for (node, a, b, l1) in &r.divergence {
                out.push_str(&format!("divergence {node} ({a} vs {b}): {l1}\n"));
            }
            out
        }
        Format::Records => {
            let mut out = records_header("compare");
            out.push_str(&format!("structure {}\n", r.structure));
            for res in &r.results {
                for (node, bel) in &res.beliefs {
                    out.push_str(&format!("belief {} {node} {}\n", res.solver, fmt_vec(bel)));
                }
            }
            for (node, a, b, l1) in &r.divergence {
                out.push_str(&format!("divergence {node} {a} {b} {l1}\n"));
            }
            out
        }
    }
}
