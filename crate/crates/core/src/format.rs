//! The BNET text format: one statement per line, `#` starts a comment.
//!
//! ```text
//! node <id> <cardinality> [<state-label> ...]
//! arc <parent-id> <child-id>
//! cpt <node-id>
//! row <parent-state-indices or '-' for roots> : <p1> <p2> ... <pk>
//! evidence <node-id> <state-index>
//! level <node-id> <n>
//! ```
//!
//! Tokens are whitespace-delimited; state indices are zero-based and listed
//! in declared parent order. CPT rows must appear in canonical order: the
//! last-declared parent varies fastest. Root nodes use a single `-` row
//! holding the prior. The `level` statement assigns decomposition depths
//! (0 is the top); it is optional and checked by the vision compiler.
//!
//! [`canonical`] renders a net back into this format deterministically, so
//! parse -> serialize -> parse is the identity and serialize is
//! byte-stable.

use crate::net::{BayesNet, CptDecl, Evidence, NetError, NodeDecl, NodeId};
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

/// A structurally validated BNET document, not yet checked for
/// probabilistic consistency (row sums, acyclicity, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct BnetDocument {
    pub nodes: Vec<NodeDecl>,
    pub arcs: Vec<(String, String)>,
    pub cpts: Vec<CptDecl>,
    pub evidence: Vec<(String, usize)>,
    pub levels: Vec<(String, usize)>,
}

/// A fully built net together with the file's evidence and levels.
#[derive(Debug, Clone, PartialEq)]
pub struct NetBundle {
    pub net: BayesNet,
    pub evidence: Evidence,
    pub levels: Vec<(NodeId, usize)>,
}

struct RawRow {
    line: usize,
    indices: Vec<String>,
    probs: Vec<f64>,
}

struct RawBlock {
    line: usize,
    node: String,
    rows: Vec<RawRow>,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

impl BnetDocument {
    pub fn parse(text: &str) -> Result<BnetDocument, ParseError> {
        let mut nodes: Vec<NodeDecl> = Vec::new();
        let mut node_lines: Vec<usize> = Vec::new();
        let mut arcs: Vec<(String, String, usize)> = Vec::new();
        let mut blocks: Vec<RawBlock> = Vec::new();
        let mut evidence: Vec<(String, usize, usize)> = Vec::new();
        let mut levels: Vec<(String, usize, usize)> = Vec::new();
        let mut in_block = false;

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let stripped = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = stripped.split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            match tokens[0] {
                "node" => {
                    in_block = false;
                    if tokens.len() < 3 {
                        return Err(err(line_no, "node statement needs an id and a cardinality"));
                    }
                    let id = tokens[1].to_string();
                    let card: usize = tokens[2]
                        .parse()
                        .map_err(|_| err(line_no, format!("bad cardinality '{}'", tokens[2])))?;
                    let labels: Vec<String> = tokens[3..].iter().map(|s| s.to_string()).collect();
                    let decl = if labels.is_empty() {
                        NodeDecl::new(id, card)
                    } else {
                        if labels.len() != card {
                            return Err(err(
                                line_no,
                                format!("{} state labels for cardinality {card}", labels.len()),
                            ));
                        }
                        NodeDecl::with_labels(id, labels)
                    };
                    nodes.push(decl);
                    node_lines.push(line_no);
                }
                "arc" => {
                    in_block = false;
                    if tokens.len() != 3 {
                        return Err(err(line_no, "arc statement needs a parent and a child"));
                    }
                    arcs.push((tokens[1].to_string(), tokens[2].to_string(), line_no));
                }
                "cpt" => {
                    if tokens.len() != 2 {
                        return Err(err(line_no, "cpt statement needs exactly one node id"));
                    }
                    blocks.push(RawBlock {
                        line: line_no,
                        node: tokens[1].to_string(),
                        rows: Vec::new(),
                    });
                    in_block = true;
                }
                "row" => {
                    if !in_block {
                        return Err(err(line_no, "row statement outside a cpt block"));
                    }
                    let colon = tokens
                        .iter()
                        .position(|&t| t == ":")
                        .ok_or_else(|| err(line_no, "row statement is missing ':'"))?;
                    if colon < 2 {
                        return Err(err(line_no, "row statement needs parent indices or '-'"));
                    }
                    let indices: Vec<String> =
                        tokens[1..colon].iter().map(|s| s.to_string()).collect();
                    let mut probs = Vec::with_capacity(tokens.len() - colon - 1);
                    for t in &tokens[colon + 1..] {
                        let p: f64 = t
                            .parse()
                            .map_err(|_| err(line_no, format!("bad probability '{t}'")))?;
                        probs.push(p);
                    }
                    if probs.is_empty() {
                        return Err(err(line_no, "row statement has no probabilities"));
                    }
                    blocks
                        .last_mut()
                        .expect("inside a block")
                        .rows
                        .push(RawRow {
                            line: line_no,
                            indices,
                            probs,
                        });
                }
                "evidence" => {
                    in_block = false;
                    if tokens.len() != 3 {
                        return Err(err(line_no, "evidence statement needs a node and a state"));
                    }
                    let state: usize = tokens[2]
                        .parse()
                        .map_err(|_| err(line_no, format!("bad state index '{}'", tokens[2])))?;
                    evidence.push((tokens[1].to_string(), state, line_no));
                }
                "level" => {
                    in_block = false;
                    if tokens.len() != 3 {
                        return Err(err(line_no, "level statement needs a node and a depth"));
                    }
                    let depth: usize = tokens[2]
                        .parse()
                        .map_err(|_| err(line_no, format!("bad level '{}'", tokens[2])))?;
                    levels.push((tokens[1].to_string(), depth, line_no));
                }
                other => {
                    return Err(err(line_no, format!("unknown statement '{other}'")));
                }
            }
        }

        // Cross-statement validation once all declarations are known.
        for (idx, decl) in nodes.iter().enumerate() {
            if nodes[..idx].iter().any(|d| d.id == decl.id) {
                return Err(err(
                    node_lines[idx],
                    format!("node '{}' redeclared", decl.id),
                ));
            }
        }
        let find = |name: &str| nodes.iter().position(|d| d.id == name);
        for (p, c, line) in &arcs {
            if find(p).is_none() {
                return Err(err(*line, format!("unknown node '{p}'")));
            }
            if find(c).is_none() {
                return Err(err(*line, format!("unknown node '{c}'")));
            }
        }
        for (n, state, line) in &evidence {
            match find(n) {
                None => return Err(err(*line, format!("unknown node '{n}'"))),
                Some(i) if *state >= nodes[i].cardinality => {
                    return Err(err(
                        *line,
                        format!(
                            "state {state} out of range for '{n}' (cardinality {})",
                            nodes[i].cardinality
                        ),
                    ))
                }
                _ => {}
            }
            if evidence.iter().filter(|(m, _, _)| m == n).count() > 1 {
                return Err(err(*line, format!("node '{n}' observed more than once")));
            }
        }
        for (n, _, line) in &levels {
            if find(n).is_none() {
                return Err(err(*line, format!("unknown node '{n}'")));
            }
            if levels.iter().filter(|(m, _, _)| m == n).count() > 1 {
                return Err(err(*line, format!("node '{n}' leveled more than once")));
            }
        }

        let parents_of = |name: &str| -> Vec<&str> {
            arcs.iter()
                .filter(|(_, c, _)| c == name)
                .map(|(p, _, _)| p.as_str())
                .collect()
        };

        let mut cpts: Vec<CptDecl> = Vec::new();
        for block in &blocks {
            let node_idx = find(&block.node)
                .ok_or_else(|| err(block.line, format!("unknown node '{}'", block.node)))?;
            if cpts.iter().any(|c| c.node == block.node) {
                return Err(err(
                    block.line,
                    format!("duplicate cpt block for '{}'", block.node),
                ));
            }
            let card = nodes[node_idx].cardinality;
            let parents = parents_of(&block.node);
            let parent_cards: Vec<usize> = parents
                .iter()
                .map(|p| nodes[find(p).unwrap()].cardinality)
                .collect();
            let expected_rows: usize = parent_cards.iter().product();
            if block.rows.len() != expected_rows {
                return Err(err(
                    block.line,
                    format!(
                        "cpt for '{}' has {} rows, expected {expected_rows}",
                        block.node,
                        block.rows.len()
                    ),
                ));
            }
            let mut table = Vec::with_capacity(expected_rows * card);
            let mut combo = vec![0usize; parents.len()];
            for (r, row) in block.rows.iter().enumerate() {
                if parents.is_empty() {
                    if row.indices != ["-"] {
                        return Err(err(
                            row.line,
                            format!("root row must use '-', found '{}'", row.indices.join(" ")),
                        ));
                    }
                } else {
                    crate::net::decode_states(r, &parent_cards, &mut combo);
                    let want: Vec<String> = combo.iter().map(|s| s.to_string()).collect();
                    if row.indices != want {
                        return Err(err(
                            row.line,
                            format!(
                                "row indices [{}] out of canonical order (last parent fastest); expected [{}]",
                                row.indices.join(" "),
                                want.join(" ")
                            ),
                        ));
                    }
                }
                if row.probs.len() != card {
                    return Err(err(
                        row.line,
                        format!("{} probabilities, expected {card}", row.probs.len()),
                    ));
                }
                table.extend_from_slice(&row.probs);
            }
            cpts.push(CptDecl {
                node: block.node.clone(),
                parents: parents.iter().map(|p| p.to_string()).collect(),
                table,
            });
        }

        Ok(BnetDocument {
            nodes,
            arcs: arcs.into_iter().map(|(p, c, _)| (p, c)).collect(),
            cpts,
            evidence: evidence.into_iter().map(|(n, s, _)| (n, s)).collect(),
            levels: levels.into_iter().map(|(n, d, _)| (n, d)).collect(),
        })
    }

    /// Validate into an immutable net plus evidence and levels.
    pub fn build(&self) -> Result<NetBundle, NetError> {
        let net = BayesNet::build(self.nodes.clone(), self.arcs.clone(), self.cpts.clone())?;
        let pairs: Vec<(&str, usize)> = self
            .evidence
            .iter()
            .map(|(n, s)| (n.as_str(), *s))
            .collect();
        let evidence = Evidence::from_pairs(&net, &pairs)?;
        let mut levels: Vec<(NodeId, usize)> = self
            .levels
            .iter()
            .map(|(n, d)| (net.node_id(n).expect("validated at parse"), *d))
            .collect();
        levels.sort_by_key(|(n, _)| *n);
        Ok(NetBundle {
            net,
            evidence,
            levels,
        })
    }
}

/// Parse and build in one step.
pub fn load(text: &str) -> Result<NetBundle, LoadError> {
    let doc = BnetDocument::parse(text).map_err(LoadError::Parse)?;
    doc.build().map_err(LoadError::Net)
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadError {
    Parse(ParseError),
    Net(NetError),
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LoadError::Parse(e) => e.fmt(f),
            LoadError::Net(e) => e.fmt(f),
        }
    }
}

impl std::error::Error for LoadError {}

/// Canonical serialization: nodes, arcs, one cpt block per node in
/// declaration order with rows in canonical order, evidence, levels.
/// Floats are printed in shortest round-trip form, so serialization is
/// byte-stable and re-parsing reproduces the exact net.
pub fn canonical(bundle: &NetBundle) -> String {
    let net = &bundle.net;
    let mut out = String::new();
    for (_, decl) in net.nodes() {
        out.push_str(&format!("node {} {}", decl.id, decl.cardinality));
        for l in &decl.state_labels {
            out.push(' ');
            out.push_str(l);
        }
        out.push('\n');
    }
    for &(p, c) in net.arcs() {
        out.push_str(&format!("arc {} {}\n", net.node(p).id, net.node(c).id));
    }
    for (id, decl) in net.nodes() {
        let cpt = net.cpt(id);
        out.push_str(&format!("cpt {}\n", decl.id));
        let cards = cpt.parent_cards();
        let mut combo = vec![0usize; cards.len()];
        for r in 0..cpt.row_count() {
            out.push_str("row ");
            if cards.is_empty() {
                out.push('-');
            } else {
                crate::net::decode_states(r, cards, &mut combo);
                let idx: Vec<String> = combo.iter().map(|s| s.to_string()).collect();
                out.push_str(&idx.join(" "));
            }
            out.push_str(" :");
            for p in cpt.row(r) {
                out.push_str(&format!(" {p}"));
            }
            out.push('\n');
        }
    }
    for (node, state) in bundle.evidence.iter() {
        out.push_str(&format!("evidence {} {}\n", net.node(node).id, state));
    }
    for &(node, depth) in &bundle.levels {
        out.push_str(&format!("level {} {}\n", net.node(node).id, depth));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::StructureClass;

    const REFERENCE: &str = "\
# two-hypothesis, two-leaf net
node h1 2
node h2 2
node E1 2
node E2 2
arc h1 E1
arc h2 E1
arc h1 E2
arc h2 E2
cpt h1
row - : 0.5 0.5
cpt h2
row - : 0.5 0.5
cpt E1
row 0 0 : 0.52 0.48
row 0 1 : 0.18 0.82
row 1 0 : 0.08 0.92
row 1 1 : 0.22 0.78
cpt E2
row 0 0 : 0.52 0.48
row 0 1 : 0.18 0.82
row 1 0 : 0.08 0.92
row 1 1 : 0.22 0.78
evidence E1 0
evidence E2 0
";

    #[test]
    fn parse_reference() {
        let bundle = load(REFERENCE).unwrap();
        assert_eq!(bundle.net.classify(), StructureClass::SharedLeafPair);
        assert_eq!(bundle.evidence.len(), 2);
    }

    #[test]
    fn round_trip_is_identity_and_byte_stable() {
        let first = load(REFERENCE).unwrap();
        let text1 = canonical(&first);
        let second = load(&text1).unwrap();
        assert_eq!(first.net, second.net);
        assert_eq!(first.evidence, second.evidence);
        assert_eq!(first.levels, second.levels);
        let text2 = canonical(&second);
        assert_eq!(text1, text2);
    }

    #[test]
    fn float_precision_survives_round_trip() {
        let text = "node a 2\ncpt a\nrow - : 0.3333333333333333 0.6666666666666667\n";
        let bundle = load(text).unwrap();
        let again = load(&canonical(&bundle)).unwrap();
        assert_eq!(bundle.net, again.net);
    }

    #[test]
    fn rows_out_of_order_rejected() {
        let text = "\
node a 2
node b 2
arc a b
cpt a
row - : 0.5 0.5
cpt b
row 1 : 0.2 0.8
row 0 : 0.9 0.1
";
        let e = BnetDocument::parse(text).unwrap_err();
        assert_eq!(e.line, 7);
        assert!(e.message.contains("canonical order"));
    }

    #[test]
    fn missing_row_rejected() {
        let text = "\
node a 2
node b 2
arc a b
cpt a
row - : 0.5 0.5
cpt b
row 0 : 0.9 0.1
";
        let e = BnetDocument::parse(text).unwrap_err();
        assert!(e.message.contains("expected 2"));
    }

    #[test]
    fn root_rows_use_dash() {
        let text = "node a 2\ncpt a\nrow 0 : 0.5 0.5\n";
        let e = BnetDocument::parse(text).unwrap_err();
        assert!(e.message.contains("'-'"));
    }

    #[test]
    fn unknown_statement_cites_line() {
        let text = "node a 2\nnode b 2\nbogus a b\n";
        let e = BnetDocument::parse(text).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("bogus"));
    }

    #[test]
    fn unknown_arc_node_cites_line() {
        let text = "node a 2\narc a zz\n";
        let e = BnetDocument::parse(text).unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("zz"));
    }

    #[test]
    fn evidence_out_of_range_rejected() {
        let text = "node a 2\ncpt a\nrow - : 0.5 0.5\nevidence a 2\n";
        let e = BnetDocument::parse(text).unwrap_err();
        assert_eq!(e.line, 4);
    }

    #[test]
    fn bad_probability_token() {
        let text = "node a 2\ncpt a\nrow - : 0.5 half\n";
        let e = BnetDocument::parse(text).unwrap_err();
        assert!(e.message.contains("half"));
    }

    #[test]
    fn non_normalized_row_cited_at_build() {
        let text = "node a 2\ncpt a\nrow - : 0.6 0.6\n";
        let errv = load(text).unwrap_err();
        match errv {
            LoadError::Net(NetError::CptMismatch { node, reason }) => {
                assert_eq!(node, "a");
                assert!(reason.contains("row 0"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn levels_parse_and_round_trip() {
        let text = "\
node obj 2
node edge 2
arc obj edge
level obj 0
level edge 1
cpt obj
row - : 0.5 0.5
cpt edge
row 0 : 0.9 0.1
row 1 : 0.3 0.7
";
        let bundle = load(text).unwrap();
        assert_eq!(bundle.levels.len(), 2);
        let text1 = canonical(&bundle);
        let again = load(&text1).unwrap();
        assert_eq!(bundle.levels, again.levels);
        assert_eq!(canonical(&again), text1);
    }

    #[test]
    fn mid_line_comments_ignored() {
        let text = "node a 2 # binary\ncpt a\nrow - : 0.25 0.75 # prior\n";
        let bundle = load(text).unwrap();
        assert_eq!(bundle.net.node_count(), 1);
        assert_eq!(bundle.net.prior(NodeId(0)), &[0.25, 0.75]);
    }
}
