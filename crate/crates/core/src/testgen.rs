//! Deterministic pseudo-random nets for cross-checking solvers against the
//! enumeration oracle. Everything here is seeded, so sweeps reproduce
//! bit-for-bit across runs and platforms.

use crate::net::{BayesNet, CptDecl, Evidence, NodeDecl};

/// splitmix64; small, seedable, and stable.
#[derive(Debug, Clone)]
pub struct Rng(u64);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in [0, 1).
    pub fn f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn in_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.f64()
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.f64() < p
    }
}

/// Strictly positive distribution over `card` states.
pub fn positive_distribution(rng: &mut Rng, card: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..card).map(|_| rng.in_range(0.05, 1.0)).collect();
    let sum: f64 = v.iter().sum();
    for x in &mut v {
        *x /= sum;
    }
    v
}

/// Strictly positive CPT over the given parent cardinalities.
pub fn positive_cpt_table(rng: &mut Rng, parent_cards: &[usize], card: usize) -> Vec<f64> {
    let rows: usize = parent_cards.iter().product();
    let mut table = Vec::with_capacity(rows * card);
    for _ in 0..rows {
        table.extend(positive_distribution(rng, card));
    }
    table
}

/// Random polytree: a random undirected tree over `n` nodes with each edge
/// oriented by a coin flip. Cardinalities drawn from 2..=max_card.
pub fn random_polytree(rng: &mut Rng, n: usize, max_card: usize) -> BayesNet {
    let cards: Vec<usize> = (0..n).map(|_| 2 + rng.below(max_card - 1)).collect();
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    for i in 1..n {
        let j = rng.below(i);
        if rng.chance(0.5) {
            arcs.push((j, i));
        } else {
            arcs.push((i, j));
        }
    }
    assemble(rng, &cards, &arcs)
}

/// Random rooted tree: node 0 is the root and every edge points away from
/// it, so each node has at most one parent.
pub fn random_tree(rng: &mut Rng, n: usize, max_card: usize) -> BayesNet {
    let cards: Vec<usize> = (0..n).map(|_| 2 + rng.below(max_card - 1)).collect();
    let arcs: Vec<(usize, usize)> = (1..n).map(|i| (rng.below(i), i)).collect();
    assemble(rng, &cards, &arcs)
}

/// Random binary DAG with at most `max_parents` parents per node.
pub fn random_binary_dag(rng: &mut Rng, n: usize, max_parents: usize) -> BayesNet {
    let cards = vec![2usize; n];
    let mut arcs: Vec<(usize, usize)> = Vec::new();
    for child in 1..n {
        let mut count = 0;
        for parent in 0..child {
            if count < max_parents && rng.chance(0.35) {
                arcs.push((parent, child));
                count += 1;
            }
        }
    }
    assemble(rng, &cards, &arcs)
}

fn assemble(rng: &mut Rng, cards: &[usize], arcs: &[(usize, usize)]) -> BayesNet {
    let name = |i: usize| format!("n{i}");
    let nodes: Vec<NodeDecl> = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| NodeDecl::new(name(i), c))
        .collect();
    let arc_names: Vec<(String, String)> = arcs.iter().map(|&(p, c)| (name(p), name(c))).collect();
    let mut cpts = Vec::with_capacity(cards.len());
    for (i, &card) in cards.iter().enumerate() {
        let parents: Vec<usize> = arcs
            .iter()
            .filter(|&&(_, c)| c == i)
            .map(|&(p, _)| p)
            .collect();
        let parent_cards: Vec<usize> = parents.iter().map(|&p| cards[p]).collect();
        cpts.push(CptDecl {
            node: name(i),
            parents: parents.iter().map(|&p| name(p)).collect(),
            table: positive_cpt_table(rng, &parent_cards, card),
        });
    }
    BayesNet::build(nodes, arc_names, cpts).expect("generated net is valid")
}

/// Observe each leaf with the given probability, at a random state.
pub fn random_leaf_evidence(rng: &mut Rng, net: &BayesNet, per_leaf: f64) -> Evidence {
    let mut ev = Evidence::empty();
    for leaf in net.leaves() {
        if rng.chance(per_leaf) {
            let state = rng.below(net.cardinality(leaf));
            ev.set(net, leaf, state).expect("leaf state in range");
        }
    }
    ev
}
