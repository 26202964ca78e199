//! Builders that turn object-appearance decompositions into nets: level
//! hierarchies compiled top-down, plus the exclusion (XOR-like) and
//! co-incidence (AND-like) evidence tables that let one shared leaf relate
//! two hypotheses.
//!
//! Convention: state 0 of a hypothesis node means "present". The noise
//! parameter epsilon must lie strictly inside (0, 0.5); at 0.5 the
//! evidence carries no information.

use crate::net::{BayesNet, CptDecl, NetError, NodeDecl, NodeId};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum VisionError {
    LevelViolation { reason: String },
    BadEpsilon { epsilon: f64 },
    Malformed { reason: String },
    Net(NetError),
}

impl fmt::Display for VisionError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VisionError::LevelViolation { reason } => write!(f, "level violation: {reason}"),
            VisionError::BadEpsilon { epsilon } => {
                write!(f, "epsilon {epsilon} outside (0, 0.5)")
            }
            VisionError::Malformed { reason } => write!(f, "malformed decomposition: {reason}"),
            VisionError::Net(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for VisionError {}

impl From<NetError> for VisionError {
    fn from(e: NetError) -> Self {
        VisionError::Net(e)
    }
}

/// One named part of a decomposition. Roots carry priors; everything else
/// gets its table from the arc or shared-child entry that targets it.
#[derive(Debug, Clone, PartialEq)]
pub struct PartDecl {
    pub name: String,
    /// Index into [`DecompositionSpec::levels`]; 0 is the top.
    pub level: usize,
    pub cardinality: usize,
    pub prior: Option<Vec<f64>>,
}

impl PartDecl {
    pub fn root(name: impl Into<String>, level: usize, prior: Vec<f64>) -> Self {
        PartDecl {
            name: name.into(),
            level,
            cardinality: prior.len(),
            prior: Some(prior),
        }
    }

    pub fn inner(name: impl Into<String>, level: usize, cardinality: usize) -> Self {
        PartDecl {
            name: name.into(),
            level,
            cardinality,
            prior: None,
        }
    }
}

/// Single-parent predictive arc with the child's conditional table
/// (row per parent state).
#[derive(Debug, Clone, PartialEq)]
pub struct DecompArc {
    pub parent: String,
    pub child: String,
    pub table: Vec<f64>,
}

/// A feature predicted by several higher-level parts at once; parents are
/// listed explicitly and the table spans all of them.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedChild {
    pub child: String,
    pub parents: Vec<String>,
    pub table: Vec<f64>,
}

/// A top-down decomposition: ordered levels, parts with level assignments,
/// predictive arcs, and shared children.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DecompositionSpec {
    pub levels: Vec<String>,
    pub parts: Vec<PartDecl>,
    pub arcs: Vec<DecompArc>,
    pub shared_children: Vec<SharedChild>,
}

/// Compile a decomposition into a validated net. Every arc must point
/// strictly downward in the level order; with no shared children the
/// result is a tree per root.
pub fn compile_decomposition(spec: &DecompositionSpec) -> Result<BayesNet, VisionError> {
    let level_of: BTreeMap<&str, usize> = spec
        .parts
        .iter()
        .map(|p| (p.name.as_str(), p.level))
        .collect();
    if level_of.len() != spec.parts.len() {
        return Err(VisionError::Malformed {
            reason: "duplicate part names".into(),
        });
    }
    for part in &spec.parts {
        if part.level >= spec.levels.len() {
            return Err(VisionError::LevelViolation {
                reason: format!(
                    "part '{}' assigned level {}, only {} levels declared",
                    part.name,
                    part.level,
                    spec.levels.len()
                ),
            });
        }
    }
    let check_arc = |parent: &str, child: &str| -> Result<(), VisionError> {
        let lp = level_of.get(parent).ok_or_else(|| VisionError::Malformed {
            reason: format!("unknown part '{parent}'"),
        })?;
        let lc = level_of.get(child).ok_or_else(|| VisionError::Malformed {
            reason: format!("unknown part '{child}'"),
        })?;
        if lc <= lp {
            return Err(VisionError::LevelViolation {
                reason: format!(
                    "'{child}' (level {lc}) must sit strictly below its parent '{parent}' (level {lp})"
                ),
            });
        }
        Ok(())
    };

    let mut arcs: Vec<(String, String)> = Vec::new();
    let mut cpts: Vec<CptDecl> = Vec::new();
    let mut has_table: BTreeMap<&str, &'static str> = BTreeMap::new();

    for part in &spec.parts {
        if let Some(prior) = &part.prior {
            has_table.insert(&part.name, "prior");
            cpts.push(CptDecl {
                node: part.name.clone(),
                parents: Vec::new(),
                table: prior.clone(),
            });
        }
    }
    for arc in &spec.arcs {
        check_arc(&arc.parent, &arc.child)?;
        if has_table.insert(&arc.child, "arc").is_some() {
            return Err(VisionError::Malformed {
                reason: format!(
                    "part '{}' receives more than one table; multi-parent features go in shared_children",
                    arc.child
                ),
            });
        }
        arcs.push((arc.parent.clone(), arc.child.clone()));
        cpts.push(CptDecl {
            node: arc.child.clone(),
            parents: vec![arc.parent.clone()],
            table: arc.table.clone(),
        });
    }
    for shared in &spec.shared_children {
        if shared.parents.len() < 2 {
            return Err(VisionError::Malformed {
                reason: format!(
                    "shared child '{}' lists {} parents, need at least 2",
                    shared.child,
                    shared.parents.len()
                ),
            });
        }
        for p in &shared.parents {
            check_arc(p, &shared.child)?;
            arcs.push((p.clone(), shared.child.clone()));
        }
        if has_table.insert(&shared.child, "shared").is_some() {
            return Err(VisionError::Malformed {
                reason: format!("part '{}' receives more than one table", shared.child),
            });
        }
        cpts.push(CptDecl {
            node: shared.child.clone(),
            parents: shared.parents.clone(),
            table: shared.table.clone(),
        });
    }
    for part in &spec.parts {
        if !has_table.contains_key(part.name.as_str()) {
            return Err(VisionError::Malformed {
                reason: format!(
                    "part '{}' has neither a prior nor an incoming table",
                    part.name
                ),
            });
        }
    }

    let nodes: Vec<NodeDecl> = spec
        .parts
        .iter()
        .map(|p| NodeDecl::new(p.name.clone(), p.cardinality))
        .collect();
    Ok(BayesNet::build(nodes, arcs, cpts)?)
}

/// Check `level` assignments against a net's arcs: when any levels are
/// given, every node needs one and every arc must point strictly downward.
pub fn check_levels(net: &BayesNet, levels: &[(NodeId, usize)]) -> Result<(), VisionError> {
    if levels.is_empty() {
        return Ok(());
    }
    let mut depth: BTreeMap<NodeId, usize> = BTreeMap::new();
    for &(node, d) in levels {
        depth.insert(node, d);
    }
    for (id, decl) in net.nodes() {
        if !depth.contains_key(&id) {
            return Err(VisionError::LevelViolation {
                reason: format!("node '{}' has no level assignment", decl.id),
            });
        }
    }
    for &(p, c) in net.arcs() {
        if depth[&c] <= depth[&p] {
            return Err(VisionError::LevelViolation {
                reason: format!(
                    "'{}' (level {}) must sit strictly below its parent '{}' (level {})",
                    net.node(c).id,
                    depth[&c],
                    net.node(p).id,
                    depth[&p]
                ),
            });
        }
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<(), VisionError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(VisionError::BadEpsilon { epsilon });
    }
    Ok(())
}

fn two_parent_binary_table(
    card1: usize,
    card2: usize,
    present: impl Fn(usize, usize) -> bool,
    epsilon: f64,
) -> Vec<f64> {
    let mut table = Vec::with_capacity(card1 * card2 * 2);
    for i in 0..card1 {
        for j in 0..card2 {
            let p = if present(i, j) {
                1.0 - epsilon
            } else {
                epsilon
            };
            table.push(p);
            table.push(1.0 - p);
        }
    }
    table
}

/// XOR-like evidence table for a binary leaf under two hypotheses:
/// p(present | h1, h2) = 1 - epsilon when exactly one hypothesis is in its
/// "present" state (state 0), epsilon otherwise. Observing the leaf
/// present drives the hypotheses apart.
pub fn exclusion_evidence_cpt(
    child: impl Into<String>,
    parents: (&str, &str),
    card1: usize,
    card2: usize,
    epsilon: f64,
) -> Result<CptDecl, VisionError> {
    check_epsilon(epsilon)?;
    check_cards(card1, card2)?;
    Ok(CptDecl {
        node: child.into(),
        parents: vec![parents.0.to_string(), parents.1.to_string()],
        table: two_parent_binary_table(card1, card2, |i, j| (i == 0) != (j == 0), epsilon),
    })
}

/// AND-like evidence table: p(present | h1, h2) = 1 - epsilon only when
/// both hypotheses are present. Observing the leaf present pulls the
/// hypotheses together.
pub fn coincidence_evidence_cpt(
    child: impl Into<String>,
    parents: (&str, &str),
    card1: usize,
    card2: usize,
    epsilon: f64,
) -> Result<CptDecl, VisionError> {
    check_epsilon(epsilon)?;
    check_cards(card1, card2)?;
    Ok(CptDecl {
        node: child.into(),
        parents: vec![parents.0.to_string(), parents.1.to_string()],
        table: two_parent_binary_table(card1, card2, |i, j| i == 0 && j == 0, epsilon),
    })
}

fn check_cards(card1: usize, card2: usize) -> Result<(), VisionError> {
    if card1 < 2 || card2 < 2 {
        return Err(VisionError::Malformed {
            reason: format!("hypothesis cardinalities must be at least 2, got {card1} and {card2}"),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{BayesNet, Evidence, StructureClass};
    use crate::oracle;

    fn two_hypothesis_net(cpt: CptDecl) -> BayesNet {
        BayesNet::build(
            vec![
                NodeDecl::new("h1", 2),
                NodeDecl::new("h2", 2),
                NodeDecl::new("E", 2),
            ],
            vec![("h1".into(), "E".into()), ("h2".into(), "E".into())],
            vec![
                CptDecl::new("h1", &[], vec![0.5, 0.5]),
                CptDecl::new("h2", &[], vec![0.5, 0.5]),
                cpt,
            ],
        )
        .unwrap()
    }

    #[test]
    fn exclusion_slice_values() {
        let cpt = exclusion_evidence_cpt("E", ("h1", "h2"), 2, 2, 0.05).unwrap();
        // present-state slice rows (h1, h2): [.05 .95; .95 .05]
        assert_eq!(cpt.table[0], 0.05);
        assert_eq!(cpt.table[2], 0.95);
        assert_eq!(cpt.table[4], 0.95);
        assert_eq!(cpt.table[6], 0.05);
    }

    #[test]
    fn exclusion_posterior_mass_on_disagreement() {
        let net =
            two_hypothesis_net(exclusion_evidence_cpt("E", ("h1", "h2"), 2, 2, 0.05).unwrap());
        let ev = Evidence::from_pairs(&net, &[("E", 0)]).unwrap();
        let joint = oracle::joint_enumeration(&net).unwrap();
        let total: f64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| joint.prob(&[i, j, 0]))
            .sum();
        let disagree = (joint.prob(&[0, 1, 0]) + joint.prob(&[1, 0, 0])) / total;
        assert!((disagree - 0.95).abs() < 1e-9);

        // Negative dependence: P(both present | E) < product of marginals.
        let post = oracle::posterior_all(&net, &ev).unwrap();
        let both = joint.prob(&[0, 0, 0]) / total;
        assert!(both < post[0][0] * post[1][0]);
    }

    #[test]
    fn coincidence_slice_values() {
        let cpt = coincidence_evidence_cpt("E", ("h1", "h2"), 2, 2, 0.05).unwrap();
        assert_eq!(cpt.table[0], 0.95);
        assert_eq!(cpt.table[2], 0.05);
        assert_eq!(cpt.table[4], 0.05);
        assert_eq!(cpt.table[6], 0.05);
    }

    #[test]
    fn coincidence_posterior_masses() {
        let net =
            two_hypothesis_net(coincidence_evidence_cpt("E", ("h1", "h2"), 2, 2, 0.05).unwrap());
        let joint = oracle::joint_enumeration(&net).unwrap();
        let total_present: f64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| joint.prob(&[i, j, 0]))
            .sum();
        let both_present = joint.prob(&[0, 0, 0]) / total_present;
        assert!((both_present - 0.95 / 1.10).abs() < 1e-4);

        let total_absent: f64 = (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| joint.prob(&[i, j, 1]))
            .sum();
        let both_absent_case = joint.prob(&[0, 0, 1]) / total_absent;
        assert!((both_absent_case - 0.05 / 2.90).abs() < 1e-4);

        // Positive dependence under E = present.
        let ev = Evidence::from_pairs(&net, &[("E", 0)]).unwrap();
        let post = oracle::posterior_all(&net, &ev).unwrap();
        assert!(both_present > post[0][0] * post[1][0]);
    }

    #[test]
    fn epsilon_bounds() {
        for eps in [0.5, 0.0, -0.1, 0.75] {
            let err = exclusion_evidence_cpt("E", ("a", "b"), 2, 2, eps).unwrap_err();
            assert!(matches!(err, VisionError::BadEpsilon { .. }), "eps {eps}");
        }
    }

    fn cylinder_spec(with_limb: bool) -> DecompositionSpec {
        let mut spec = DecompositionSpec {
            levels: vec!["object".into(), "volume-primitive".into(), "surface".into()],
            parts: vec![
                PartDecl::root("cylinder", 0, vec![0.5, 0.5]),
                PartDecl::inner("face", 1, 2),
                PartDecl::inner("axis", 1, 2),
            ],
            arcs: vec![
                DecompArc {
                    parent: "cylinder".into(),
                    child: "face".into(),
                    table: vec![0.9, 0.1, 0.2, 0.8],
                },
                DecompArc {
                    parent: "cylinder".into(),
                    child: "axis".into(),
                    table: vec![0.85, 0.15, 0.3, 0.7],
                },
            ],
            shared_children: Vec::new(),
        };
        if with_limb {
            spec.parts.push(PartDecl::inner("limb", 2, 2));
            spec.shared_children.push(SharedChild {
                child: "limb".into(),
                parents: vec!["face".into(), "axis".into()],
                table: vec![0.95, 0.05, 0.6, 0.4, 0.5, 0.5, 0.1, 0.9],
            });
        }
        spec
    }

    #[test]
    fn cylinder_with_limb_is_general() {
        let net = compile_decomposition(&cylinder_spec(true)).unwrap();
        assert_eq!(net.classify(), StructureClass::General);
        let without = compile_decomposition(&cylinder_spec(false)).unwrap();
        assert_eq!(without.classify(), StructureClass::Tree);
    }

    #[test]
    fn single_object_single_edge_is_tree() {
        let spec = DecompositionSpec {
            levels: vec!["object".into(), "edge".into()],
            parts: vec![
                PartDecl::root("obj", 0, vec![0.3, 0.7]),
                PartDecl::inner("edge", 1, 2),
            ],
            arcs: vec![DecompArc {
                parent: "obj".into(),
                child: "edge".into(),
                table: vec![0.9, 0.1, 0.25, 0.75],
            }],
            shared_children: Vec::new(),
        };
        let net = compile_decomposition(&spec).unwrap();
        assert_eq!(net.node_count(), 2);
        assert_eq!(net.classify(), StructureClass::Tree);
    }

    #[test]
    fn two_objects_sharing_leaves_form_pair() {
        let spec = DecompositionSpec {
            levels: vec!["object".into(), "edge".into()],
            parts: vec![
                PartDecl::root("man", 0, vec![0.5, 0.5]),
                PartDecl::root("tires", 0, vec![0.5, 0.5]),
                PartDecl::inner("blob", 1, 2),
                PartDecl::inner("outline", 1, 2),
            ],
            arcs: Vec::new(),
            shared_children: vec![
                SharedChild {
                    child: "blob".into(),
                    parents: vec!["man".into(), "tires".into()],
                    table: coincidence_evidence_cpt("blob", ("man", "tires"), 2, 2, 0.05)
                        .unwrap()
                        .table,
                },
                SharedChild {
                    child: "outline".into(),
                    parents: vec!["man".into(), "tires".into()],
                    table: coincidence_evidence_cpt("outline", ("man", "tires"), 2, 2, 0.1)
                        .unwrap()
                        .table,
                },
            ],
        };
        let net = compile_decomposition(&spec).unwrap();
        assert_eq!(net.classify(), StructureClass::SharedLeafPair);
    }

    #[test]
    fn upward_arc_rejected() {
        let spec = DecompositionSpec {
            levels: vec!["object".into(), "edge".into()],
            parts: vec![
                PartDecl::root("obj", 1, vec![0.5, 0.5]),
                PartDecl::inner("edge", 0, 2),
            ],
            arcs: vec![DecompArc {
                parent: "obj".into(),
                child: "edge".into(),
                table: vec![0.9, 0.1, 0.25, 0.75],
            }],
            shared_children: Vec::new(),
        };
        let err = compile_decomposition(&spec).unwrap_err();
        assert!(matches!(err, VisionError::LevelViolation { .. }));
    }

    #[test]
    fn check_levels_against_net() {
        let net = compile_decomposition(&cylinder_spec(true)).unwrap();
        let ids = |name: &str| net.node_id(name).unwrap();
        let good = vec![
            (ids("cylinder"), 0),
            (ids("face"), 1),
            (ids("axis"), 1),
            (ids("limb"), 2),
        ];
        assert!(check_levels(&net, &good).is_ok());
        let bad = vec![
            (ids("cylinder"), 1),
            (ids("face"), 0),
            (ids("axis"), 1),
            (ids("limb"), 2),
        ];
        assert!(matches!(
            check_levels(&net, &bad),
            Err(VisionError::LevelViolation { .. })
        ));
    }
}
