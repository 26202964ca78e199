//! Pi/lambda message passing: exact propagation on polytrees, the
//! two-parent leaf reflection, and the lambda-only upward pass for trees.
//!
//! Every stored message and belief is L1-normalized; the normalizer is
//! recomputed per message. Evidence is accepted on leaf nodes only; nets
//! needing internal-node evidence are served by the enumeration oracle.

use crate::net::{decode_states, BayesNet, Cpt, Evidence, NodeId, StructureClass};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum PearlError {
    NotPolytree { found: StructureClass },
    NotTree { reason: String },
    EvidenceOnInternalNode { node: String },
    InconsistentEvidence,
    DimensionMismatch { expected: usize, found: usize },
    WrongArity { expected: usize, found: usize },
    NotInstantiated,
    TargetNotParent,
    InvalidEvidenceState { state: usize, cardinality: usize },
}

impl fmt::Display for PearlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PearlError::NotPolytree { found } => {
                write!(f, "propagation requires a tree or polytree, net is {found}")
            }
            PearlError::NotTree { reason } => write!(f, "not a rooted tree: {reason}"),
            PearlError::EvidenceOnInternalNode { node } => {
                write!(
                    f,
                    "evidence on internal node '{node}'; only leaves may be instantiated"
                )
            }
            PearlError::InconsistentEvidence => {
                write!(f, "evidence has zero probability under the net")
            }
            PearlError::DimensionMismatch { expected, found } => {
                write!(f, "vector of length {found}, expected {expected}")
            }
            PearlError::WrongArity { expected, found } => {
                write!(f, "leaf has {found} parents, expected {expected}")
            }
            PearlError::NotInstantiated => write!(f, "leaf is not instantiated"),
            PearlError::TargetNotParent => write!(f, "target node is not a parent of the leaf"),
            PearlError::InvalidEvidenceState { state, cardinality } => {
                write!(
                    f,
                    "evidence state {state} out of range for cardinality {cardinality}"
                )
            }
        }
    }
}

impl std::error::Error for PearlError {}

/// The pi and lambda vectors on directed edges after one propagation run,
/// plus the resulting beliefs.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    pi: BTreeMap<(NodeId, NodeId), Vec<f64>>,
    lambda: BTreeMap<(NodeId, NodeId), Vec<f64>>,
    beliefs: Vec<Vec<f64>>,
}

impl MessageState {
    /// Pi message on the arc `parent -> child`, over the parent's states.
    pub fn pi_message(&self, parent: NodeId, child: NodeId) -> Option<&[f64]> {
        self.pi.get(&(parent, child)).map(Vec::as_slice)
    }

    /// Lambda message from `child` to `parent`, over the parent's states.
    pub fn lambda_message(&self, child: NodeId, parent: NodeId) -> Option<&[f64]> {
        self.lambda.get(&(child, parent)).map(Vec::as_slice)
    }

    pub fn belief(&self, node: NodeId) -> &[f64] {
        &self.beliefs[node.0]
    }

    pub fn beliefs(&self) -> &[Vec<f64>] {
        &self.beliefs
    }

    pub fn message_count(&self) -> usize {
        self.pi.len() + self.lambda.len()
    }

    /// All pi messages as ((parent, child), vector) in key order.
    pub fn pi_messages(&self) -> impl Iterator<Item = (&(NodeId, NodeId), &Vec<f64>)> {
        self.pi.iter()
    }

    /// All lambda messages as ((child, parent), vector) in key order.
    pub fn lambda_messages(&self) -> impl Iterator<Item = (&(NodeId, NodeId), &Vec<f64>)> {
        self.lambda.iter()
    }
}

fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>, PearlError> {
    let sum: f64 = v.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(PearlError::InconsistentEvidence);
    }
    for x in &mut v {
        *x /= sum;
    }
    Ok(v)
}

/// Message a root sends to one child: its prior times the lambda messages
/// received from every other child, L1-normalized. With no other children
/// this is just the prior.
pub fn root_pi_message(
    prior: &[f64],
    incoming_lambdas: &[(NodeId, Vec<f64>)],
    excluding: NodeId,
) -> Result<Vec<f64>, PearlError> {
    let mut v = prior.to_vec();
    for (child, lambda) in incoming_lambdas {
        if *child == excluding {
            continue;
        }
        if lambda.len() != prior.len() {
            return Err(PearlError::DimensionMismatch {
                expected: prior.len(),
                found: lambda.len(),
            });
        }
        for (x, l) in v.iter_mut().zip(lambda) {
            *x *= l;
        }
    }
    normalize(v)
}

/// Lambda message an instantiated two-parent leaf reflects to one parent:
/// lambda(i) = alpha * sum_j pi(j) * p(leaf = k | target = i, other = j).
///
/// The CPT slice is applied in receiving-parent x sending-parent
/// orientation, so the stored table is transposed when the target is the
/// second declared parent. For slices that factor per state the output is
/// independent of the incoming pi.
pub fn leaf_lambda_message(
    cpt: &Cpt,
    evidence_state: Option<usize>,
    incoming_pi: &[f64],
    target: NodeId,
) -> Result<Vec<f64>, PearlError> {
    if cpt.parents().len() != 2 {
        return Err(PearlError::WrongArity {
            expected: 2,
            found: cpt.parents().len(),
        });
    }
    let k = evidence_state.ok_or(PearlError::NotInstantiated)?;
    if k >= cpt.child_card() {
        return Err(PearlError::InvalidEvidenceState {
            state: k,
            cardinality: cpt.child_card(),
        });
    }
    let t = cpt
        .parents()
        .iter()
        .position(|&p| p == target)
        .ok_or(PearlError::TargetNotParent)?;
    let (recv_card, send_card) = (cpt.parent_cards()[t], cpt.parent_cards()[1 - t]);
    if incoming_pi.len() != send_card {
        return Err(PearlError::DimensionMismatch {
            expected: send_card,
            found: incoming_pi.len(),
        });
    }
    let mut out = vec![0.0; recv_card];
    for (i, o) in out.iter_mut().enumerate() {
        for (j, pi_j) in incoming_pi.iter().enumerate() {
            let states = if t == 0 { [i, j] } else { [j, i] };
            *o += pi_j * cpt.prob(&states, k);
        }
    }
    normalize(out)
}

fn check_leaf_evidence(net: &BayesNet, evidence: &Evidence) -> Result<(), PearlError> {
    for (node, _) in evidence.iter() {
        if !net.is_leaf(node) {
            return Err(PearlError::EvidenceOnInternalNode {
                node: net.node(node).id.clone(),
            });
        }
    }
    Ok(())
}

/// Exact propagation on a tree or polytree: a collect sweep toward the
/// lowest node id of each component followed by a distribute sweep back
/// out. Beliefs equal the exact posteriors given the evidence.
pub fn propagate(net: &BayesNet, evidence: &Evidence) -> Result<MessageState, PearlError> {
    let class = net.classify();
    if !matches!(class, StructureClass::Tree | StructureClass::Polytree) {
        return Err(PearlError::NotPolytree { found: class });
    }
    check_leaf_evidence(net, evidence)?;

    let n = net.node_count();
    let mut state = MessageState {
        pi: BTreeMap::new(),
        lambda: BTreeMap::new(),
        beliefs: vec![Vec::new(); n],
    };

    // Undirected neighbors in ascending id order.
    let neighbors: Vec<Vec<NodeId>> = (0..n)
        .map(|i| {
            let id = NodeId(i);
            let mut nb: Vec<NodeId> = net
                .parents(id)
                .iter()
                .chain(net.children(id))
                .copied()
                .collect();
            nb.sort_unstable();
            nb
        })
        .collect();

    let mut visited = vec![false; n];
    for pivot in 0..n {
        if visited[pivot] {
            continue;
        }
        // Discovery order from the pivot; via[x] is the neighbor toward it.
        let mut order: Vec<NodeId> = Vec::new();
        let mut via: Vec<Option<NodeId>> = vec![None; n];
        let mut stack = vec![NodeId(pivot)];
        visited[pivot] = true;
        while let Some(x) = stack.pop() {
            order.push(x);
            for &nb in &neighbors[x.0] {
                if !visited[nb.0] {
                    visited[nb.0] = true;
                    via[nb.0] = Some(x);
                    stack.push(nb);
                }
            }
        }
        // Collect: leaves of the sweep first.
        for &x in order.iter().rev() {
            if let Some(to) = via[x.0] {
                send_message(net, evidence, &mut state, x, to)?;
            }
        }
        // Distribute back out.
        for &x in &order {
            for &nb in &neighbors[x.0] {
                if via[x.0] != Some(nb) {
                    send_message(net, evidence, &mut state, x, nb)?;
                }
            }
        }
    }

    for i in 0..n {
        let id = NodeId(i);
        let mut v = node_pi(net, &state, id);
        mul_assign(&mut v, &own_lambda(net, evidence, &state, id, None));
        state.beliefs[i] = normalize(v)?;
    }
    Ok(state)
}

fn mul_assign(v: &mut [f64], w: &[f64]) {
    for (a, b) in v.iter_mut().zip(w) {
        *a *= b;
    }
}

/// Prior-side support of a node from the pi messages of its parents.
fn node_pi(net: &BayesNet, state: &MessageState, x: NodeId) -> Vec<f64> {
    let cpt = net.cpt(x);
    if cpt.parents().is_empty() {
        return cpt.row(0).to_vec();
    }
    let parent_msgs: Vec<&[f64]> = cpt
        .parents()
        .iter()
        .map(|&u| {
            state
                .pi
                .get(&(u, x))
                .map(Vec::as_slice)
                .expect("pi message present")
        })
        .collect();
    let cards = cpt.parent_cards();
    let mut out = vec![0.0; cpt.child_card()];
    let mut states = vec![0usize; cards.len()];
    for row in 0..cpt.row_count() {
        decode_states(row, cards, &mut states);
        let mut w = 1.0;
        for (msg, &s) in parent_msgs.iter().zip(&states) {
            w *= msg[s];
        }
        if w == 0.0 {
            continue;
        }
        for (o, p) in out.iter_mut().zip(cpt.row(row)) {
            *o += w * p;
        }
    }
    out
}

/// Evidence indicator times incoming lambda messages, optionally skipping
/// one child.
fn own_lambda(
    net: &BayesNet,
    evidence: &Evidence,
    state: &MessageState,
    x: NodeId,
    skip_child: Option<NodeId>,
) -> Vec<f64> {
    let card = net.cardinality(x);
    let mut v = match evidence.get(x) {
        Some(k) => {
            let mut ind = vec![0.0; card];
            ind[k] = 1.0;
            ind
        }
        None => vec![1.0; card],
    };
    for &c in net.children(x) {
        if Some(c) == skip_child {
            continue;
        }
        if let Some(msg) = state.lambda.get(&(c, x)) {
            mul_assign(&mut v, msg);
        }
    }
    v
}

/// Compute and store the message from `x` to its undirected neighbor `to`.
fn send_message(
    net: &BayesNet,
    evidence: &Evidence,
    state: &mut MessageState,
    x: NodeId,
    to: NodeId,
) -> Result<(), PearlError> {
    if net.children(x).contains(&to) {
        // pi message x -> child
        let mut v = node_pi(net, state, x);
        mul_assign(&mut v, &own_lambda(net, evidence, state, x, Some(to)));
        state.pi.insert((x, to), normalize(v)?);
        return Ok(());
    }
    debug_assert!(net.parents(x).contains(&to));
    // lambda message x -> parent `to`
    let cpt = net.cpt(x);
    let lam = own_lambda(net, evidence, state, x, None);
    let t = cpt.parents().iter().position(|&u| u == to).unwrap();
    let cards = cpt.parent_cards();
    let other_msgs: Vec<Option<&[f64]>> = cpt
        .parents()
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            if i == t {
                None
            } else {
                Some(
                    state
                        .pi
                        .get(&(u, x))
                        .map(Vec::as_slice)
                        .expect("pi message present"),
                )
            }
        })
        .collect();
    let mut out = vec![0.0; cards[t]];
    let mut states = vec![0usize; cards.len()];
    for row in 0..cpt.row_count() {
        decode_states(row, cards, &mut states);
        let mut w = 1.0;
        for (i, msg) in other_msgs.iter().enumerate() {
            if let Some(m) = msg {
                w *= m[states[i]];
            }
        }
        if w == 0.0 {
            continue;
        }
        let dot: f64 = cpt.row(row).iter().zip(&lam).map(|(p, l)| p * l).sum();
        out[states[t]] += w * dot;
    }
    state.lambda.insert((x, to), normalize(out)?);
    Ok(())
}

/// Root posterior of a tree from a single upward lambda pass; no pi
/// messages are computed. Equals the root belief of [`propagate`].
pub fn lambda_only_update(
    net: &BayesNet,
    evidence: &Evidence,
    root: NodeId,
) -> Result<Vec<f64>, PearlError> {
    let class = net.classify();
    if class != StructureClass::Tree {
        return Err(PearlError::NotTree {
            reason: format!("net is {class}"),
        });
    }
    if !net.is_root(root) {
        return Err(PearlError::NotTree {
            reason: format!("'{}' is not the root", net.node(root).id),
        });
    }
    check_leaf_evidence(net, evidence)?;

    let lambda = lambda_below(net, evidence, root)?;
    let mut v = net.prior(root).to_vec();
    mul_assign(&mut v, &lambda);
    normalize(v)
}

fn lambda_below(net: &BayesNet, evidence: &Evidence, x: NodeId) -> Result<Vec<f64>, PearlError> {
    let card = net.cardinality(x);
    let mut lam = match evidence.get(x) {
        Some(k) => {
            let mut ind = vec![0.0; card];
            ind[k] = 1.0;
            ind
        }
        None => vec![1.0; card],
    };
    for &c in net.children(x) {
        let child_lambda = lambda_below(net, evidence, c)?;
        let cpt = net.cpt(c);
        let mut msg = vec![0.0; card];
        for (x_state, m) in msg.iter_mut().enumerate() {
            *m = cpt
                .row(x_state)
                .iter()
                .zip(&child_lambda)
                .map(|(p, l)| p * l)
                .sum();
        }
        mul_assign(&mut lam, &normalize(msg)?);
    }
    Ok(lam)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{BayesNet, CptDecl, NodeDecl};
    use crate::oracle;
    use crate::testnets;

    #[test]
    fn root_pi_no_other_children_is_prior() {
        let msg = root_pi_message(&[0.5, 0.5], &[], NodeId(1)).unwrap();
        assert_eq!(msg, vec![0.5, 0.5]);
    }

    #[test]
    fn root_pi_uniform_prior_passes_lambda() {
        let msg = root_pi_message(&[0.5, 0.5], &[(NodeId(2), vec![0.7, 0.3])], NodeId(1)).unwrap();
        assert!((msg[0] - 0.7).abs() < 1e-12);
        assert!((msg[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn root_pi_uniform_lambda_passes_prior() {
        let msg = root_pi_message(&[0.8, 0.2], &[(NodeId(2), vec![0.5, 0.5])], NodeId(1)).unwrap();
        assert!((msg[0] - 0.8).abs() < 1e-12);
        assert!((msg[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn root_pi_dimension_mismatch() {
        let err = root_pi_message(&[0.5, 0.5], &[(NodeId(2), vec![0.3, 0.3, 0.4])], NodeId(9))
            .unwrap_err();
        assert!(matches!(err, PearlError::DimensionMismatch { .. }));
    }

    #[test]
    fn leaf_lambda_reference_slice() {
        let net = testnets::shared_pair_reference();
        let e1 = net.node_id("E1").unwrap();
        let h1 = net.node_id("h1").unwrap();
        let lam = leaf_lambda_message(net.cpt(e1), Some(0), &[0.5, 0.5], h1).unwrap();
        // Unnormalized (0.35, 0.15).
        assert!((lam[0] - 0.7).abs() < 1e-12);
        assert!((lam[1] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn leaf_lambda_separable_slice_ignores_pi() {
        let a = [0.9, 0.1];
        let b = [0.6, 0.4];
        let mut table = Vec::new();
        for &ai in &a {
            for &bj in &b {
                let p = ai * bj;
                table.extend_from_slice(&[p, 1.0 - p]);
            }
        }
        let net = BayesNet::build(
            vec![
                NodeDecl::new("p", 2),
                NodeDecl::new("q", 2),
                NodeDecl::new("E", 2),
            ],
            vec![("p".into(), "E".into()), ("q".into(), "E".into())],
            vec![
                CptDecl::new("p", &[], vec![0.5, 0.5]),
                CptDecl::new("q", &[], vec![0.5, 0.5]),
                CptDecl::new("E", &["p", "q"], table),
            ],
        )
        .unwrap();
        let e = net.node_id("E").unwrap();
        let p = net.node_id("p").unwrap();
        let m1 = leaf_lambda_message(net.cpt(e), Some(0), &[0.2, 0.8], p).unwrap();
        let m2 = leaf_lambda_message(net.cpt(e), Some(0), &[0.95, 0.05], p).unwrap();
        for (x, y) in m1.iter().zip(&m2) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((m1[0] - 0.9).abs() < 1e-12);
        assert!((m1[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn leaf_lambda_uniform_slice_gives_uniform() {
        let net = BayesNet::build(
            vec![
                NodeDecl::new("p", 2),
                NodeDecl::new("q", 3),
                NodeDecl::new("E", 2),
            ],
            vec![("p".into(), "E".into()), ("q".into(), "E".into())],
            vec![
                CptDecl::new("p", &[], vec![0.5, 0.5]),
                CptDecl::new("q", &[], vec![0.25, 0.25, 0.5]),
                CptDecl::new("E", &["p", "q"], vec![0.5; 12]),
            ],
        )
        .unwrap();
        let e = net.node_id("E").unwrap();
        let q = net.node_id("q").unwrap();
        let lam = leaf_lambda_message(net.cpt(e), Some(1), &[0.9, 0.1], q).unwrap();
        for x in &lam {
            assert!((x - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn leaf_lambda_requires_two_parents() {
        let net = testnets::two_node_chain();
        let e = net.node_id("E").unwrap();
        let h = net.node_id("h").unwrap();
        let err = leaf_lambda_message(net.cpt(e), Some(0), &[0.5, 0.5], h).unwrap_err();
        assert!(matches!(err, PearlError::WrongArity { .. }));
    }

    #[test]
    fn leaf_lambda_requires_evidence() {
        let net = testnets::shared_pair_reference();
        let e1 = net.node_id("E1").unwrap();
        let h1 = net.node_id("h1").unwrap();
        let err = leaf_lambda_message(net.cpt(e1), None, &[0.5, 0.5], h1).unwrap_err();
        assert_eq!(err, PearlError::NotInstantiated);
    }

    #[test]
    fn propagate_chain_evidence() {
        let net = testnets::two_node_chain();
        let ev = Evidence::from_pairs(&net, &[("E", 0)]).unwrap();
        let state = propagate(&net, &ev).unwrap();
        let bel = state.belief(NodeId(0));
        assert!((bel[0] - 0.45 / 0.55).abs() < 1e-9);
        assert!((bel[1] - 0.10 / 0.55).abs() < 1e-9);
        // Observed leaf carries a degenerate belief.
        assert_eq!(state.belief(NodeId(1))[0], 1.0);
    }

    #[test]
    fn propagate_no_evidence_gives_marginals() {
        let net = testnets::two_node_chain();
        let state = propagate(&net, &Evidence::empty()).unwrap();
        for (id, _) in net.nodes() {
            let want = oracle::pre_posterior(&net, id).unwrap();
            for (a, b) in state.belief(id).iter().zip(&want) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn propagate_v_structure_matches_oracle() {
        let net = BayesNet::build(
            vec![
                NodeDecl::new("a", 2),
                NodeDecl::new("b", 3),
                NodeDecl::new("c", 2),
            ],
            vec![("a".into(), "c".into()), ("b".into(), "c".into())],
            vec![
                CptDecl::new("a", &[], vec![0.3, 0.7]),
                CptDecl::new("b", &[], vec![0.2, 0.5, 0.3]),
                CptDecl::new(
                    "c",
                    &["a", "b"],
                    vec![
                        0.9, 0.1, 0.6, 0.4, 0.3, 0.7, //
                        0.2, 0.8, 0.55, 0.45, 0.05, 0.95,
                    ],
                ),
            ],
        )
        .unwrap();
        let ev = Evidence::from_pairs(&net, &[("c", 0)]).unwrap();
        let state = propagate(&net, &ev).unwrap();
        let want = oracle::posterior_all(&net, &ev).unwrap();
        for (id, _) in net.nodes() {
            for (a, b) in state.belief(id).iter().zip(&want[id.0]) {
                assert!((a - b).abs() < 1e-9, "node {id}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn propagate_rejects_multiply_connected() {
        let net = testnets::diamond();
        let err = propagate(&net, &Evidence::empty()).unwrap_err();
        assert!(matches!(err, PearlError::NotPolytree { .. }));
    }

    #[test]
    fn propagate_rejects_internal_evidence() {
        let net = BayesNet::build(
            vec![
                NodeDecl::new("a", 2),
                NodeDecl::new("b", 2),
                NodeDecl::new("c", 2),
            ],
            vec![("a".into(), "b".into()), ("b".into(), "c".into())],
            vec![
                CptDecl::new("a", &[], vec![0.5, 0.5]),
                CptDecl::new("b", &["a"], vec![0.7, 0.3, 0.4, 0.6]),
                CptDecl::new("c", &["b"], vec![0.1, 0.9, 0.8, 0.2]),
            ],
        )
        .unwrap();
        let ev = Evidence::from_pairs(&net, &[("b", 0)]).unwrap();
        let err = propagate(&net, &ev).unwrap_err();
        assert!(matches!(err, PearlError::EvidenceOnInternalNode { .. }));
    }

    #[test]
    fn propagate_rejects_impossible_evidence() {
        let net = BayesNet::build(
            vec![NodeDecl::new("a", 2), NodeDecl::new("b", 2)],
            vec![("a".into(), "b".into())],
            vec![
                CptDecl::new("a", &[], vec![1.0, 0.0]),
                CptDecl::new("b", &["a"], vec![1.0, 0.0, 0.5, 0.5]),
            ],
        )
        .unwrap();
        let ev = Evidence::from_pairs(&net, &[("b", 1)]).unwrap();
        let err = propagate(&net, &ev).unwrap_err();
        assert_eq!(err, PearlError::InconsistentEvidence);
    }

    #[test]
    fn propagate_forest_components_independently() {
        let net = BayesNet::build(
            vec![NodeDecl::new("a", 2), NodeDecl::new("b", 3)],
            vec![],
            vec![
                CptDecl::new("a", &[], vec![0.3, 0.7]),
                CptDecl::new("b", &[], vec![0.2, 0.5, 0.3]),
            ],
        )
        .unwrap();
        let ev = Evidence::from_pairs(&net, &[("a", 1)]).unwrap();
        let state = propagate(&net, &ev).unwrap();
        assert_eq!(state.belief(NodeId(0)), &[0.0, 1.0]);
        assert!((state.belief(NodeId(1))[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lambda_only_rejects_internal_evidence() {
        let net = BayesNet::build(
            vec![
                NodeDecl::new("r", 2),
                NodeDecl::new("m", 2),
                NodeDecl::new("l", 2),
            ],
            vec![("r".into(), "m".into()), ("m".into(), "l".into())],
            vec![
                CptDecl::new("r", &[], vec![0.5, 0.5]),
                CptDecl::new("m", &["r"], vec![0.7, 0.3, 0.4, 0.6]),
                CptDecl::new("l", &["m"], vec![0.1, 0.9, 0.8, 0.2]),
            ],
        )
        .unwrap();
        let ev = Evidence::from_pairs(&net, &[("m", 0)]).unwrap();
        let err = lambda_only_update(&net, &ev, NodeId(0)).unwrap_err();
        assert!(matches!(err, PearlError::EvidenceOnInternalNode { .. }));
    }

    #[test]
    fn lambda_only_single_arc() {
        let net = testnets::two_node_chain();
        let ev = Evidence::from_pairs(&net, &[("E", 0)]).unwrap();
        let bel = lambda_only_update(&net, &ev, NodeId(0)).unwrap();
        assert!((bel[0] - 0.45 / 0.55).abs() < 1e-12);
        assert!((bel[1] - 0.10 / 0.55).abs() < 1e-12);
    }

    #[test]
    fn lambda_only_no_evidence_is_prior() {
        let net = testnets::two_node_chain();
        let bel = lambda_only_update(&net, &Evidence::empty(), NodeId(0)).unwrap();
        assert!((bel[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lambda_only_matches_propagate_on_tree() {
        // root with two children, one of them with two leaf children
        let net = BayesNet::build(
            vec![
                NodeDecl::new("r", 2),
                NodeDecl::new("m", 3),
                NodeDecl::new("u", 2),
                NodeDecl::new("v", 2),
                NodeDecl::new("w", 2),
            ],
            vec![
                ("r".into(), "m".into()),
                ("r".into(), "u".into()),
                ("m".into(), "v".into()),
                ("m".into(), "w".into()),
            ],
            vec![
                CptDecl::new("r", &[], vec![0.35, 0.65]),
                CptDecl::new("m", &["r"], vec![0.5, 0.3, 0.2, 0.1, 0.45, 0.45]),
                CptDecl::new("u", &["r"], vec![0.75, 0.25, 0.4, 0.6]),
                CptDecl::new("v", &["m"], vec![0.9, 0.1, 0.2, 0.8, 0.5, 0.5]),
                CptDecl::new("w", &["m"], vec![0.3, 0.7, 0.6, 0.4, 0.05, 0.95]),
            ],
        )
        .unwrap();
        let ev = Evidence::from_pairs(&net, &[("u", 1), ("v", 0)]).unwrap();
        let fast = lambda_only_update(&net, &ev, NodeId(0)).unwrap();
        let full = propagate(&net, &ev).unwrap();
        for (a, b) in fast.iter().zip(full.belief(NodeId(0))) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_only_rejects_polytree() {
        let net = BayesNet::build(
            vec![
                NodeDecl::new("a", 2),
                NodeDecl::new("b", 2),
                NodeDecl::new("c", 2),
            ],
            vec![("a".into(), "c".into()), ("b".into(), "c".into())],
            vec![
                CptDecl::new("a", &[], vec![0.5, 0.5]),
                CptDecl::new("b", &[], vec![0.5, 0.5]),
                CptDecl::new(
                    "c",
                    &["a", "b"],
                    vec![0.9, 0.1, 0.6, 0.4, 0.3, 0.7, 0.2, 0.8],
                ),
            ],
        )
        .unwrap();
        let err = lambda_only_update(&net, &Evidence::empty(), NodeId(0)).unwrap_err();
        assert!(matches!(err, PearlError::NotTree { .. }));
    }

    #[test]
    fn lambda_only_requires_root_argument() {
        let net = testnets::two_node_chain();
        let err = lambda_only_update(&net, &Evidence::empty(), NodeId(1)).unwrap_err();
        assert!(matches!(err, PearlError::NotTree { .. }));
    }
}
