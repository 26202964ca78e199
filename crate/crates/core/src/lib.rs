//! Inference engine for discrete Bayesian networks built around three
//! solution regimes: a single upward lambda pass for trees, exact pi/lambda
//! propagation for polytrees, and a closed-form eigenvector fixed point for
//! two-root nets whose evidence leaves are shared by both roots. A
//! brute-force enumeration oracle serves as the ground truth every solver
//! can be checked against.
//!
//! Nets are immutable after [`net::BayesNet::build`]; all solvers are pure
//! functions over a shared net, so concurrent evaluation needs no locking.

pub mod eigen;
pub mod format;
pub mod net;
pub mod oracle;
pub mod pearl;
pub mod testgen;
pub mod vision;

pub use net::{
    BayesNet, Cpt, CptDecl, Evidence, NetError, NodeDecl, NodeId, StructureClass,
    ROW_SUM_TOLERANCE, SEPARABILITY_TOLERANCE,
};

#[cfg(test)]
pub(crate) mod testnets {
    use crate::net::{BayesNet, CptDecl, NodeDecl};

    /// Two uniform binary roots, two binary leaves, both leaves shared, each
    /// leaf's observed-state slice equal to [[.52, .18], [.08, .22]].
    pub fn shared_pair_reference() -> BayesNet {
        let leaf = |name: &str| {
            CptDecl::new(
                name,
                &["h1", "h2"],
                vec![
                    0.52, 0.48, // h1=0, h2=0
                    0.18, 0.82, // h1=0, h2=1
                    0.08, 0.92, // h1=1, h2=0
                    0.22, 0.78, // h1=1, h2=1
                ],
            )
        };
        BayesNet::build(
            vec![
                NodeDecl::new("h1", 2),
                NodeDecl::new("h2", 2),
                NodeDecl::new("E1", 2),
                NodeDecl::new("E2", 2),
            ],
            vec![
                ("h1".into(), "E1".into()),
                ("h2".into(), "E1".into()),
                ("h1".into(), "E2".into()),
                ("h2".into(), "E2".into()),
            ],
            vec![
                CptDecl::new("h1", &[], vec![0.5, 0.5]),
                CptDecl::new("h2", &[], vec![0.5, 0.5]),
                leaf("E1"),
                leaf("E2"),
            ],
        )
        .unwrap()
    }

    /// a -> b, a -> c, b -> d, c -> d.
    pub fn diamond() -> BayesNet {
        BayesNet::build(
            vec![
                NodeDecl::new("a", 2),
                NodeDecl::new("b", 2),
                NodeDecl::new("c", 2),
                NodeDecl::new("d", 2),
            ],
            vec![
                ("a".into(), "b".into()),
                ("a".into(), "c".into()),
                ("b".into(), "d".into()),
                ("c".into(), "d".into()),
            ],
            vec![
                CptDecl::new("a", &[], vec![0.4, 0.6]),
                CptDecl::new("b", &["a"], vec![0.7, 0.3, 0.2, 0.8]),
                CptDecl::new("c", &["a"], vec![0.1, 0.9, 0.55, 0.45]),
                CptDecl::new(
                    "d",
                    &["b", "c"],
                    vec![0.9, 0.1, 0.6, 0.4, 0.3, 0.7, 0.25, 0.75],
                ),
            ],
        )
        .unwrap()
    }

    /// h -> E with prior (0.5, 0.5) and p(E = s0 | h) = (0.9, 0.2).
    pub fn two_node_chain() -> BayesNet {
        BayesNet::build(
            vec![NodeDecl::new("h", 2), NodeDecl::new("E", 2)],
            vec![("h".into(), "E".into())],
            vec![
                CptDecl::new("h", &[], vec![0.5, 0.5]),
                CptDecl::new("E", &["h"], vec![0.9, 0.1, 0.2, 0.8]),
            ],
        )
        .unwrap()
    }
}
