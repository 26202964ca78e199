//! Discrete Bayesian networks: node and table declarations, build-time
//! validation, structural classification, arc reversal, and the rank-1
//! separability test for two-parent tables.

use std::collections::BTreeSet;
use std::fmt;

/// CPT rows must sum to 1 within this bound; violations are rejected at build.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Default relative tolerance for [`Cpt::separability`].
pub const SEPARABILITY_TOLERANCE: f64 = 1e-9;

/// Index of a node inside its [`BayesNet`], assigned in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A discrete chance node: at least two states, uniquely labelled.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeDecl {
    pub id: String,
    pub label: String,
    pub cardinality: usize,
    pub state_labels: Vec<String>,
}

impl NodeDecl {
    /// Node with default state labels `s0`, `s1`, ...
    pub fn new(id: impl Into<String>, cardinality: usize) -> Self {
        let id = id.into();
        NodeDecl {
            label: id.clone(),
            id,
            cardinality,
            state_labels: (0..cardinality).map(|i| format!("s{i}")).collect(),
        }
    }

    pub fn with_labels(id: impl Into<String>, state_labels: Vec<String>) -> Self {
        let id = id.into();
        NodeDecl {
            label: id.clone(),
            id,
            cardinality: state_labels.len(),
            state_labels,
        }
    }
}

/// Conditional probability table declaration, referencing nodes by name.
///
/// `table` is row-major over parent-state combinations with the
/// last-declared parent varying fastest; each row is a distribution over
/// the node's own states. Root nodes have an empty parent list and a
/// single row holding the prior.
#[derive(Debug, Clone, PartialEq)]
pub struct CptDecl {
    pub node: String,
    pub parents: Vec<String>,
    pub table: Vec<f64>,
}

impl CptDecl {
    pub fn new(node: impl Into<String>, parents: &[&str], table: Vec<f64>) -> Self {
        CptDecl {
            node: node.into(),
            parents: parents.iter().map(|p| p.to_string()).collect(),
            table,
        }
    }
}

/// A validated conditional probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    node: NodeId,
    parents: Vec<NodeId>,
    parent_cards: Vec<usize>,
    child_card: usize,
    table: Vec<f64>,
}

impl Cpt {
    pub fn node(&self) -> NodeId {
        self.node
    }

    pub fn parents(&self) -> &[NodeId] {
        &self.parents
    }

    pub fn parent_cards(&self) -> &[usize] {
        &self.parent_cards
    }

    pub fn child_card(&self) -> usize {
        self.child_card
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn row_count(&self) -> usize {
        self.parent_cards.iter().product()
    }

    /// Row index of a parent-state combination, last parent fastest.
    pub fn row_index(&self, parent_states: &[usize]) -> usize {
        debug_assert_eq!(parent_states.len(), self.parents.len());
        let mut idx = 0;
        for (s, card) in parent_states.iter().zip(&self.parent_cards) {
            debug_assert!(s < card);
            idx = idx * card + s;
        }
        idx
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let k = self.child_card;
        &self.table[row * k..(row + 1) * k]
    }

    /// p(node = `child_state` | parents = `parent_states`).
    pub fn prob(&self, parent_states: &[usize], child_state: usize) -> f64 {
        self.row(self.row_index(parent_states))[child_state]
    }

    /// For a two-parent table, the slice p(node = `child_state` | i, j) as a
    /// row-major matrix indexed (first parent, second parent).
    pub fn two_parent_slice(&self, child_state: usize) -> Result<Vec<f64>, NetError> {
        if self.parents.len() != 2 {
            return Err(NetError::WrongArity {
                node: self.node,
                expected: 2,
                found: self.parents.len(),
            });
        }
        let (c1, c2) = (self.parent_cards[0], self.parent_cards[1]);
        let mut m = Vec::with_capacity(c1 * c2);
        for i in 0..c1 {
            for j in 0..c2 {
                m.push(self.prob(&[i, j], child_state));
            }
        }
        Ok(m)
    }

    /// Rank-1 test of each child-state slice of a two-parent table.
    ///
    /// Slice `k` factorizes as a(i)*b(j) exactly when every 2x2 minor
    /// vanishes; the test is relative, |minor| <= tolerance * max_entry^2,
    /// so it is insensitive to the overall scale of the slice.
    pub fn separability(&self, tolerance: f64) -> Result<Vec<bool>, NetError> {
        let (c1, c2) = match self.parents.len() {
            2 => (self.parent_cards[0], self.parent_cards[1]),
            n => {
                return Err(NetError::WrongArity {
                    node: self.node,
                    expected: 2,
                    found: n,
                })
            }
        };
        let mut out = Vec::with_capacity(self.child_card);
        for k in 0..self.child_card {
            let m = self.two_parent_slice(k)?;
            let max_entry = m.iter().cloned().fold(0.0_f64, f64::max);
            let bound = tolerance * max_entry * max_entry;
            let mut separable = true;
            'minors: for i0 in 0..c1 {
                for i1 in (i0 + 1)..c1 {
                    for j0 in 0..c2 {
                        for j1 in (j0 + 1)..c2 {
                            let minor = m[i0 * c2 + j0] * m[i1 * c2 + j1]
                                - m[i0 * c2 + j1] * m[i1 * c2 + j0];
                            if minor.abs() > bound {
                                separable = false;
                                break 'minors;
                            }
                        }
                    }
                }
            }
            out.push(separable);
        }
        Ok(out)
    }
}

/// Structural regime of a net, in decreasing order of specificity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StructureClass {
    /// Connected, undirected-acyclic, every node has at most one parent.
    Tree,
    /// Underlying undirected graph is acyclic (forests included).
    Polytree,
    /// Two roots, every other node a leaf, at least one leaf with both
    /// roots as parents.
    SharedLeafPair,
    General,
}

impl fmt::Display for StructureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StructureClass::Tree => "tree",
            StructureClass::Polytree => "polytree",
            StructureClass::SharedLeafPair => "shared-leaf-pair",
            StructureClass::General => "general",
        };
        f.write_str(s)
    }
}

/// Observed states for a subset of nodes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evidence {
    assignments: std::collections::BTreeMap<NodeId, usize>,
}

impl Evidence {
    pub fn empty() -> Self {
        Evidence::default()
    }

    /// Evidence from (node id, state index) pairs, validated against the net.
    pub fn from_pairs(net: &BayesNet, pairs: &[(&str, usize)]) -> Result<Self, NetError> {
        let mut ev = Evidence::empty();
        for (name, state) in pairs {
            let node = net
                .node_id(name)
                .ok_or_else(|| NetError::UnknownNode(name.to_string()))?;
            ev.set(net, node, *state)?;
        }
        Ok(ev)
    }

    pub fn set(&mut self, net: &BayesNet, node: NodeId, state: usize) -> Result<(), NetError> {
        let card = net.cardinality(node);
        if state >= card {
            return Err(NetError::InvalidEvidence {
                node: net.node(node).id.clone(),
                reason: format!("state index {state} out of range for cardinality {card}"),
            });
        }
        if self.assignments.insert(node, state).is_some() {
            return Err(NetError::InvalidEvidence {
                node: net.node(node).id.clone(),
                reason: "node observed more than once".into(),
            });
        }
        Ok(())
    }

    pub fn get(&self, node: NodeId) -> Option<usize> {
        self.assignments.get(&node).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, usize)> + '_ {
        self.assignments.iter().map(|(n, s)| (*n, *s))
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }
}

/// Validation and transformation errors for nets.
#[derive(Debug, Clone, PartialEq)]
pub enum NetError {
    EmptyNet,
    DuplicateNode(String),
    InvalidNode {
        node: String,
        reason: String,
    },
    UnknownNode(String),
    DuplicateArc {
        parent: String,
        child: String,
    },
    CycleDetected {
        cycle: Vec<String>,
    },
    CptMismatch {
        node: String,
        reason: String,
    },
    NoSuchArc {
        parent: String,
        child: String,
    },
    WouldCreateCycle {
        parent: String,
        child: String,
    },
    WrongArity {
        node: NodeId,
        expected: usize,
        found: usize,
    },
    InvalidEvidence {
        node: String,
        reason: String,
    },
}

impl fmt::Display for NetError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NetError::EmptyNet => write!(f, "net declares no nodes"),
            NetError::DuplicateNode(n) => write!(f, "node '{n}' declared more than once"),
            NetError::InvalidNode { node, reason } => write!(f, "node '{node}': {reason}"),
            NetError::UnknownNode(n) => write!(f, "unknown node '{n}'"),
            NetError::DuplicateArc { parent, child } => {
                write!(f, "arc {parent} -> {child} declared more than once")
            }
            NetError::CycleDetected { cycle } => {
                write!(f, "arcs form a directed cycle: {}", cycle.join(" -> "))
            }
            NetError::CptMismatch { node, reason } => write!(f, "cpt for '{node}': {reason}"),
            NetError::NoSuchArc { parent, child } => write!(f, "no arc {parent} -> {child}"),
            NetError::WouldCreateCycle { parent, child } => {
                write!(
                    f,
                    "reversing {parent} -> {child} would create a directed cycle"
                )
            }
            NetError::WrongArity {
                node,
                expected,
                found,
            } => write!(f, "node {node}: expected {expected} parents, found {found}"),
            NetError::InvalidEvidence { node, reason } => {
                write!(f, "evidence on '{node}': {reason}")
            }
        }
    }
}

impl std::error::Error for NetError {}

/// A validated, immutable Bayesian network.
///
/// Built once by [`BayesNet::build`]; every operation afterwards is a pure
/// function, so a shared net can be evaluated concurrently.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesNet {
    nodes: Vec<NodeDecl>,
    arcs: Vec<(NodeId, NodeId)>,
    cpts: Vec<Cpt>,
    parents: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    topo: Vec<NodeId>,
    warnings: Vec<String>,
}

impl BayesNet {
    /// Validate declarations into a net.
    ///
    /// Checks: unique node ids, cardinality >= 2 with unique state labels,
    /// declared arc endpoints, acyclicity, one CPT per node whose parent
    /// list matches the node's in-arcs in declaration order, table sizes,
    /// entries in [0, 1], and row sums within [`ROW_SUM_TOLERANCE`] of 1.
    /// Rows are stored exactly as given; nothing is renormalized. Rows
    /// containing zero entries are accepted but recorded as warnings.
    pub fn build(
        nodes: Vec<NodeDecl>,
        arcs: Vec<(String, String)>,
        cpts: Vec<CptDecl>,
    ) -> Result<BayesNet, NetError> {
        if nodes.is_empty() {
            return Err(NetError::EmptyNet);
        }
        let mut warnings = Vec::new();

        let mut seen = BTreeSet::new();
        for decl in &nodes {
            if !seen.insert(decl.id.clone()) {
                return Err(NetError::DuplicateNode(decl.id.clone()));
            }
            if decl.cardinality < 2 {
                return Err(NetError::InvalidNode {
                    node: decl.id.clone(),
                    reason: format!("cardinality must be at least 2, got {}", decl.cardinality),
                });
            }
            if decl.state_labels.len() != decl.cardinality {
                return Err(NetError::InvalidNode {
                    node: decl.id.clone(),
                    reason: format!(
                        "{} state labels for cardinality {}",
                        decl.state_labels.len(),
                        decl.cardinality
                    ),
                });
            }
            let unique: BTreeSet<&String> = decl.state_labels.iter().collect();
            if unique.len() != decl.cardinality {
                return Err(NetError::InvalidNode {
                    node: decl.id.clone(),
                    reason: "state labels are not unique".into(),
                });
            }
        }

        let lookup = |name: &str| -> Result<NodeId, NetError> {
            nodes
                .iter()
                .position(|d| d.id == name)
                .map(NodeId)
                .ok_or_else(|| NetError::UnknownNode(name.to_string()))
        };

        let n = nodes.len();
        let mut id_arcs = Vec::with_capacity(arcs.len());
        let mut parents: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (p, c) in &arcs {
            let pi = lookup(p)?;
            let ci = lookup(c)?;
            if pi == ci {
                return Err(NetError::CycleDetected {
                    cycle: vec![p.clone(), c.clone()],
                });
            }
            if id_arcs.contains(&(pi, ci)) {
                return Err(NetError::DuplicateArc {
                    parent: p.clone(),
                    child: c.clone(),
                });
            }
            id_arcs.push((pi, ci));
            parents[ci.0].push(pi);
            children[pi.0].push(ci);
        }

        let topo =
            toposort(n, &parents, &children).map_err(|cycle_ids| NetError::CycleDetected {
                cycle: cycle_ids.iter().map(|i| nodes[i.0].id.clone()).collect(),
            })?;

        // One CPT per node, parents exactly matching the in-arcs.
        let mut cpt_slots: Vec<Option<Cpt>> = vec![None; n];
        for decl in cpts {
            let node = lookup(&decl.node)?;
            if cpt_slots[node.0].is_some() {
                return Err(NetError::CptMismatch {
                    node: decl.node.clone(),
                    reason: "more than one cpt declared".into(),
                });
            }
            let mut declared_parents = Vec::with_capacity(decl.parents.len());
            for p in &decl.parents {
                declared_parents.push(lookup(p)?);
            }
            if declared_parents != parents[node.0] {
                let want: Vec<&str> = parents[node.0]
                    .iter()
                    .map(|p| nodes[p.0].id.as_str())
                    .collect();
                return Err(NetError::CptMismatch {
                    node: decl.node.clone(),
                    reason: format!(
                        "parent list [{}] does not match in-arcs [{}]",
                        decl.parents.join(", "),
                        want.join(", ")
                    ),
                });
            }
            let parent_cards: Vec<usize> = declared_parents
                .iter()
                .map(|p| nodes[p.0].cardinality)
                .collect();
            let child_card = nodes[node.0].cardinality;
            let rows: usize = parent_cards.iter().product();
            if decl.table.len() != rows * child_card {
                return Err(NetError::CptMismatch {
                    node: decl.node.clone(),
                    reason: format!(
                        "table has {} entries, expected {}",
                        decl.table.len(),
                        rows * child_card
                    ),
                });
            }
            for (r, row) in decl.table.chunks(child_card).enumerate() {
                let mut sum = 0.0;
                for &p in row {
                    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                        return Err(NetError::CptMismatch {
                            node: decl.node.clone(),
                            reason: format!("row {r} has entry {p} outside [0, 1]"),
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(NetError::CptMismatch {
                        node: decl.node.clone(),
                        reason: format!("row {r} sums to {sum}, not 1"),
                    });
                }
                if row.contains(&0.0) {
                    warnings.push(format!("cpt {}: row {r} has zero entries", decl.node));
                }
            }
            cpt_slots[node.0] = Some(Cpt {
                node,
                parents: declared_parents,
                parent_cards,
                child_card,
                table: decl.table,
            });
        }
        let mut cpt_vec = Vec::with_capacity(n);
        for (i, slot) in cpt_slots.into_iter().enumerate() {
            match slot {
                Some(c) => cpt_vec.push(c),
                None => {
                    return Err(NetError::CptMismatch {
                        node: nodes[i].id.clone(),
                        reason: "no cpt declared".into(),
                    })
                }
            }
        }

        Ok(BayesNet {
            nodes,
            arcs: id_arcs,
            cpts: cpt_vec,
            parents,
            children,
            topo,
            warnings,
        })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &NodeDecl {
        &self.nodes[id.0]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &NodeDecl)> {
        self.nodes.iter().enumerate().map(|(i, d)| (NodeId(i), d))
    }

    pub fn node_id(&self, name: &str) -> Option<NodeId> {
        self.nodes.iter().position(|d| d.id == name).map(NodeId)
    }

    pub fn cardinality(&self, id: NodeId) -> usize {
        self.nodes[id.0].cardinality
    }

    pub fn arcs(&self) -> &[(NodeId, NodeId)] {
        &self.arcs
    }

    pub fn parents(&self, id: NodeId) -> &[NodeId] {
        &self.parents[id.0]
    }

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.children[id.0]
    }

    pub fn cpt(&self, id: NodeId) -> &Cpt {
        &self.cpts[id.0]
    }

    pub fn is_root(&self, id: NodeId) -> bool {
        self.parents[id.0].is_empty()
    }

    pub fn is_leaf(&self, id: NodeId) -> bool {
        self.children[id.0].is_empty()
    }

    pub fn roots(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .map(NodeId)
            .filter(|&i| self.is_root(i))
            .collect()
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .map(NodeId)
            .filter(|&i| self.is_leaf(i))
            .collect()
    }

    /// Nodes in a topological order (parents before children).
    pub fn topo_order(&self) -> &[NodeId] {
        &self.topo
    }

    /// The prior of a root node.
    pub fn prior(&self, id: NodeId) -> &[f64] {
        debug_assert!(self.is_root(id));
        self.cpts[id.0].row(0)
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Structural regime of the net, most specific class first.
    pub fn classify(&self) -> StructureClass {
        let n = self.nodes.len();
        // Undirected cycle detection via union-find over the arcs.
        let mut uf: Vec<usize> = (0..n).collect();
        fn find(uf: &mut [usize], mut x: usize) -> usize {
            while uf[x] != x {
                uf[x] = uf[uf[x]];
                x = uf[x];
            }
            x
        }
        let mut undirected_acyclic = true;
        for &(p, c) in &self.arcs {
            let (rp, rc) = (find(&mut uf, p.0), find(&mut uf, c.0));
            if rp == rc {
                undirected_acyclic = false;
                break;
            }
            uf[rp] = rc;
        }

        if undirected_acyclic {
            let connected = {
                let mut roots: BTreeSet<usize> = BTreeSet::new();
                for i in 0..n {
                    let r = find(&mut uf, i);
                    roots.insert(r);
                }
                roots.len() <= 1
            };
            let single_parent = (0..n).all(|i| self.parents[i].len() <= 1);
            if connected && single_parent {
                return StructureClass::Tree;
            }
            return StructureClass::Polytree;
        }

        let roots = self.roots();
        if roots.len() == 2 {
            let all_rest_leaves = (0..n)
                .map(NodeId)
                .filter(|i| !roots.contains(i))
                .all(|i| self.is_leaf(i));
            let some_shared = (0..n).map(NodeId).any(|i| {
                self.parents(i).contains(&roots[0]) && self.parents(i).contains(&roots[1])
            });
            if all_rest_leaves && some_shared {
                return StructureClass::SharedLeafPair;
            }
        }
        StructureClass::General
    }

    /// Leaves whose parent set contains both given roots.
    pub fn shared_leaves(&self, r1: NodeId, r2: NodeId) -> Vec<NodeId> {
        self.leaves()
            .into_iter()
            .filter(|&l| self.parents(l).contains(&r1) && self.parents(l).contains(&r2))
            .collect()
    }

    /// Reverse the arc `parent -> child`, preserving the joint distribution.
    ///
    /// Both endpoints inherit the union of the two nodes' former parents;
    /// the child additionally becomes a parent of the former parent. Where
    /// the marginalized child probability is zero the inverted conditional
    /// is undefined; such rows are emitted uniform and a warning recorded.
    pub fn reverse_arc(&self, parent: NodeId, child: NodeId) -> Result<BayesNet, NetError> {
        let p_name = || self.nodes[parent.0].id.clone();
        let c_name = || self.nodes[child.0].id.clone();
        if !self.arcs.contains(&(parent, child)) {
            return Err(NetError::NoSuchArc {
                parent: p_name(),
                child: c_name(),
            });
        }
        // Another directed path parent -> child means reversal closes a cycle.
        if self.path_exists_excluding(parent, child, (parent, child)) {
            return Err(NetError::WouldCreateCycle {
                parent: p_name(),
                child: c_name(),
            });
        }

        let pa: Vec<NodeId> = self.parents[parent.0].clone();
        let pb: Vec<NodeId> = self.parents[child.0]
            .iter()
            .copied()
            .filter(|&x| x != parent)
            .collect();
        // Union, order: parent's parents first, then child's remaining ones.
        let mut union = pa.clone();
        for &x in &pb {
            if !union.contains(&x) {
                union.push(x);
            }
        }

        let card = |id: NodeId| self.nodes[id.0].cardinality;
        let union_cards: Vec<usize> = union.iter().map(|&u| card(u)).collect();
        let np = card(parent);
        let nc = card(child);
        let union_rows: usize = union_cards.iter().product();

        let mut child_table = vec![0.0; union_rows * nc];
        let mut parent_table = vec![0.0; union_rows * nc * np];
        let mut zero_rows = Vec::new();

        let old_parent_cpt = &self.cpts[parent.0];
        let old_child_cpt = &self.cpts[child.0];
        let mut union_states = vec![0usize; union.len()];
        for row in 0..union_rows {
            decode_states(row, &union_cards, &mut union_states);
            let pa_states: Vec<usize> = pa
                .iter()
                .map(|u| union_states[union.iter().position(|x| x == u).unwrap()])
                .collect();
            // Joint over (parent, child) given this union configuration.
            let mut joint = vec![0.0; np * nc];
            for x in 0..np {
                let px = old_parent_cpt.prob(&pa_states, x);
                let child_parent_states: Vec<usize> = self.parents[child.0]
                    .iter()
                    .map(|&u| {
                        if u == parent {
                            x
                        } else {
                            union_states[union.iter().position(|&w| w == u).unwrap()]
                        }
                    })
                    .collect();
                for y in 0..nc {
                    joint[x * nc + y] = px * old_child_cpt.prob(&child_parent_states, y);
                }
            }
            for y in 0..nc {
                let py: f64 = (0..np).map(|x| joint[x * nc + y]).sum();
                child_table[row * nc + y] = py;
                let parent_row = row * nc + y;
                if py > 0.0 {
                    for x in 0..np {
                        parent_table[parent_row * np + x] = joint[x * nc + y] / py;
                    }
                } else {
                    zero_rows.push((row, y));
                    for x in 0..np {
                        parent_table[parent_row * np + x] = 1.0 / np as f64;
                    }
                }
            }
        }

        let name = |id: NodeId| self.nodes[id.0].id.clone();
        let mut new_arcs: Vec<(String, String)> = self
            .arcs
            .iter()
            .filter(|(_, c)| *c != parent && *c != child)
            .map(|&(p, c)| (name(p), name(c)))
            .collect();
        for &u in &union {
            new_arcs.push((name(u), name(child)));
        }
        for &u in &union {
            new_arcs.push((name(u), name(parent)));
        }
        new_arcs.push((name(child), name(parent)));

        let union_names: Vec<String> = union.iter().map(|&u| name(u)).collect();
        let mut parent_cpt_parents = union_names.clone();
        parent_cpt_parents.push(name(child));
        let mut new_cpts: Vec<CptDecl> = Vec::with_capacity(self.nodes.len());
        for (i, cpt) in self.cpts.iter().enumerate() {
            let id = NodeId(i);
            if id == parent {
                new_cpts.push(CptDecl {
                    node: name(parent),
                    parents: parent_cpt_parents.clone(),
                    table: parent_table.clone(),
                });
            } else if id == child {
                new_cpts.push(CptDecl {
                    node: name(child),
                    parents: union_names.clone(),
                    table: child_table.clone(),
                });
            } else {
                new_cpts.push(CptDecl {
                    node: name(id),
                    parents: cpt.parents.iter().map(|&p| name(p)).collect(),
                    table: cpt.table.clone(),
                });
            }
        }

        let mut net = BayesNet::build(self.nodes.clone(), new_arcs, new_cpts)?;
        for (row, y) in zero_rows {
            net.warnings.push(format!(
                "reversal of {} -> {}: conditional undefined at combination {row}, state {y} (zero marginal); uniform row emitted",
                name(parent),
                name(child),
            ));
        }
        Ok(net)
    }

    fn path_exists_excluding(&self, from: NodeId, to: NodeId, skip: (NodeId, NodeId)) -> bool {
        let mut stack = vec![from];
        let mut seen = vec![false; self.nodes.len()];
        while let Some(x) = stack.pop() {
            for &c in &self.children[x.0] {
                if (x, c) == skip {
                    continue;
                }
                if c == to {
                    return true;
                }
                if !seen[c.0] {
                    seen[c.0] = true;
                    stack.push(c);
                }
            }
        }
        false
    }
}

/// Decode a flat index into per-position states, last position fastest.
pub(crate) fn decode_states(mut index: usize, cards: &[usize], out: &mut [usize]) {
    for i in (0..cards.len()).rev() {
        out[i] = index % cards[i];
        index /= cards[i];
    }
}

fn toposort(
    n: usize,
    parents: &[Vec<NodeId>],
    children: &[Vec<NodeId>],
) -> Result<Vec<NodeId>, Vec<NodeId>> {
    let mut indeg: Vec<usize> = parents.iter().map(|p| p.len()).collect();
    let mut order = Vec::with_capacity(n);
    let mut ready: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    ready.sort_unstable();
    let mut queue = std::collections::VecDeque::from(ready);
    while let Some(i) = queue.pop_front() {
        order.push(NodeId(i));
        for &c in &children[i] {
            indeg[c.0] -= 1;
            if indeg[c.0] == 0 {
                queue.push_back(c.0);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }
    // Surface one concrete cycle by walking backward: every unprocessed
    // node still has an unprocessed parent.
    let mut processed = vec![false; n];
    for id in &order {
        processed[id.0] = true;
    }
    let start = (0..n).find(|&i| !processed[i]).unwrap();
    let mut path = vec![NodeId(start)];
    let mut cur = start;
    loop {
        let prev = parents[cur]
            .iter()
            .find(|p| !processed[p.0])
            .copied()
            .expect("unprocessed node has an unprocessed parent");
        if let Some(pos) = path.iter().position(|&x| x == prev) {
            // path[pos..] was walked against the arcs; reverse it to list
            // the cycle in arc direction.
            let mut cycle = vec![prev];
            cycle.extend(path[pos..].iter().rev().copied());
            return Err(cycle);
        }
        path.push(prev);
        cur = prev.0;
    }
}
