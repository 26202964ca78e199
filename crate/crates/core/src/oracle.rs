//! Brute-force exact inference by joint enumeration.
//!
//! Deliberately naive: the full joint table is materialized and marginals
//! are read off it. This is the ground truth the propagation and
//! eigenvector solvers are verified against, capped at
//! [`DEFAULT_JOINT_CAP`] assignments.

use crate::net::{decode_states, BayesNet, Evidence, NodeId};
use std::fmt;

/// Default cap on the number of joint assignments (2^20).
pub const DEFAULT_JOINT_CAP: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq)]
pub enum OracleError {
    TooLarge { size: usize, cap: usize },
    ZeroProbabilityEvidence,
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::TooLarge { size, cap } => {
                write!(f, "joint table would hold {size} assignments, cap is {cap}")
            }
            OracleError::ZeroProbabilityEvidence => {
                write!(f, "evidence has zero probability under the net")
            }
        }
    }
}

impl std::error::Error for OracleError {}

/// Full joint distribution over all nodes, in declaration order with the
/// last node varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    order: Vec<NodeId>,
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn order(&self) -> &[NodeId] {
        &self.order
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn index(&self, assignment: &[usize]) -> usize {
        let mut idx = 0;
        for (s, card) in assignment.iter().zip(&self.cards) {
            idx = idx * card + s;
        }
        idx
    }

    pub fn prob(&self, assignment: &[usize]) -> f64 {
        self.probs[self.index(assignment)]
    }

    /// Marginal distribution of one node, summing out all others.
    pub fn marginal(&self, node: NodeId) -> Vec<f64> {
        let pos = self.order.iter().position(|&n| n == node).unwrap();
        let mut out = vec![0.0; self.cards[pos]];
        let mut states = vec![0usize; self.cards.len()];
        for (i, &p) in self.probs.iter().enumerate() {
            decode_states(i, &self.cards, &mut states);
            out[states[pos]] += p;
        }
        out
    }
}

fn joint_size(net: &BayesNet, cap: usize) -> Result<usize, OracleError> {
    let mut size: usize = 1;
    for (_, decl) in net.nodes() {
        size = size
            .checked_mul(decl.cardinality)
            .ok_or(OracleError::TooLarge {
                size: usize::MAX,
                cap,
            })?;
        if size > cap {
            return Err(OracleError::TooLarge { size, cap });
        }
    }
    Ok(size)
}

/// Probability of every full assignment as the product of CPT entries.
pub fn joint_enumeration(net: &BayesNet) -> Result<JointTable, OracleError> {
    joint_enumeration_capped(net, DEFAULT_JOINT_CAP)
}

pub fn joint_enumeration_capped(net: &BayesNet, cap: usize) -> Result<JointTable, OracleError> {
    let size = joint_size(net, cap)?;
    let n = net.node_count();
    let order: Vec<NodeId> = (0..n).map(NodeId).collect();
    let cards: Vec<usize> = order.iter().map(|&i| net.cardinality(i)).collect();

    let mut probs = Vec::with_capacity(size);
    let mut states = vec![0usize; n];
    let mut parent_states: Vec<usize> = Vec::new();
    for idx in 0..size {
        decode_states(idx, &cards, &mut states);
        let mut p = 1.0;
        for (i, &s) in states.iter().enumerate() {
            let cpt = net.cpt(NodeId(i));
            parent_states.clear();
            parent_states.extend(cpt.parents().iter().map(|u| states[u.0]));
            p *= cpt.prob(&parent_states, s);
            if p == 0.0 {
                break;
            }
        }
        probs.push(p);
    }
    Ok(JointTable {
        order,
        cards,
        probs,
    })
}

/// Exact conditional marginals of every node given the evidence.
pub fn posterior_all(net: &BayesNet, evidence: &Evidence) -> Result<Vec<Vec<f64>>, OracleError> {
    posterior_all_capped(net, evidence, DEFAULT_JOINT_CAP)
}

pub fn posterior_all_capped(
    net: &BayesNet,
    evidence: &Evidence,
    cap: usize,
) -> Result<Vec<Vec<f64>>, OracleError> {
    let joint = joint_enumeration_capped(net, cap)?;
    let n = net.node_count();
    let mut acc: Vec<Vec<f64>> = (0..n).map(|i| vec![0.0; joint.cards[i]]).collect();
    let mut total = 0.0;
    let mut states = vec![0usize; n];
    'outer: for (idx, &p) in joint.probs.iter().enumerate() {
        decode_states(idx, &joint.cards, &mut states);
        for (node, s) in evidence.iter() {
            if states[node.0] != s {
                continue 'outer;
            }
        }
        total += p;
        for (i, &s) in states.iter().enumerate() {
            acc[i][s] += p;
        }
    }
    if total <= 0.0 {
        return Err(OracleError::ZeroProbabilityEvidence);
    }
    for dist in &mut acc {
        for x in dist.iter_mut() {
            *x /= total;
        }
    }
    Ok(acc)
}

/// Exact conditional marginal of one node given the evidence.
pub fn posterior(
    net: &BayesNet,
    evidence: &Evidence,
    query: NodeId,
) -> Result<Vec<f64>, OracleError> {
    Ok(posterior_all(net, evidence)?.swap_remove(query.0))
}

/// Marginal of a node with no evidence: the distribution the priors impute
/// before any observation is made.
pub fn pre_posterior(net: &BayesNet, node: NodeId) -> Result<Vec<f64>, OracleError> {
    posterior(net, &Evidence::empty(), node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{BayesNet, CptDecl, NodeDecl};
    use crate::testnets;

    #[test]
    fn single_node_joint() {
        let net = BayesNet::build(
            vec![NodeDecl::new("a", 2)],
            vec![],
            vec![CptDecl::new("a", &[], vec![0.3, 0.7])],
        )
        .unwrap();
        let joint = joint_enumeration(&net).unwrap();
        assert_eq!(joint.probs(), &[0.3, 0.7]);
    }

    #[test]
    fn chain_joint_products() {
        let net = testnets::two_node_chain();
        let joint = joint_enumeration(&net).unwrap();
        let expected = [0.45, 0.05, 0.10, 0.40];
        for (got, want) in joint.probs().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
        let total: f64 = joint.probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reference_net_joint_and_posteriors() {
        let net = testnets::shared_pair_reference();
        let joint = joint_enumeration(&net).unwrap();
        assert_eq!(joint.len(), 16);
        let p = [[0.52, 0.18], [0.08, 0.22]];
        for (i, row) in p.iter().enumerate() {
            for (j, &pij) in row.iter().enumerate() {
                let got = joint.prob(&[i, j, 0, 0]);
                assert!((got - 0.25 * pij * pij).abs() < 1e-12);
            }
        }

        let ev = Evidence::from_pairs(&net, &[("E1", 0), ("E2", 0)]).unwrap();
        let post = posterior_all(&net, &ev).unwrap();
        // Row and column mass of 0.25 * P(i,j)^2, normalized by 0.0894.
        let bel_h1 = &post[0];
        assert!((bel_h1[0] - 0.3028 / 0.3576).abs() < 1e-12);
        assert!((bel_h1[1] - 0.0548 / 0.3576).abs() < 1e-12);
        let bel_h2 = &post[1];
        assert!((bel_h2[0] - 0.2768 / 0.3576).abs() < 1e-12);
        assert!((bel_h2[1] - 0.0808 / 0.3576).abs() < 1e-12);
        // Four-digit reference values.
        assert!((bel_h1[0] - 0.8468).abs() < 1e-4);
        assert!((bel_h1[1] - 0.1532).abs() < 1e-4);
        assert!((bel_h2[0] - 0.7741).abs() < 1e-4);
        assert!((bel_h2[1] - 0.2259).abs() < 1e-4);
    }

    #[test]
    fn pre_posterior_of_root_is_prior() {
        let net = testnets::two_node_chain();
        let pp = pre_posterior(&net, NodeId(0)).unwrap();
        assert!((pp[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pre_posterior_of_chain_leaf() {
        let net = testnets::two_node_chain();
        let pp = pre_posterior(&net, NodeId(1)).unwrap();
        assert!((pp[0] - 0.55).abs() < 1e-12);
        assert!((pp[1] - 0.45).abs() < 1e-12);
    }

    #[test]
    fn reference_leaf_pre_posterior() {
        let net = testnets::shared_pair_reference();
        let e1 = net.node_id("E1").unwrap();
        let pp = pre_posterior(&net, e1).unwrap();
        assert!((pp[0] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn empty_evidence_matches_pre_posterior() {
        let net = testnets::diamond();
        let post = posterior_all(&net, &Evidence::empty()).unwrap();
        for (id, _) in net.nodes() {
            let pp = pre_posterior(&net, id).unwrap();
            for (a, b) in post[id.0].iter().zip(&pp) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn two_node_bayes_rule() {
        let net = testnets::two_node_chain();
        let ev = Evidence::from_pairs(&net, &[("E", 0)]).unwrap();
        let bel = posterior(&net, &ev, NodeId(0)).unwrap();
        assert!((bel[0] - 0.45 / 0.55).abs() < 1e-12);
        assert!((bel[1] - 0.10 / 0.55).abs() < 1e-12);
    }

    #[test]
    fn zero_probability_evidence_rejected() {
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
        let err = posterior_all(&net, &ev).unwrap_err();
        assert_eq!(err, OracleError::ZeroProbabilityEvidence);
    }

    #[test]
    fn cap_enforced() {
        let net = testnets::shared_pair_reference();
        let err = joint_enumeration_capped(&net, 8).unwrap_err();
        assert!(matches!(err, OracleError::TooLarge { size: 16, cap: 8 }));
    }
}
