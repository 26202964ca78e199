//! Closed-form solution of two-root shared-leaf nets.
//!
//! With both evidence leaves instantiated, the messages circulating between
//! the two roots obey a linear recursion: composing one full trip around
//! the loop gives a square nonnegative matrix whose dominant eigenvector is
//! the steady state the messages converge to. The solver builds that cycle
//! matrix for each root, extracts the dominant eigenpair by power iteration
//! (cross-checked against the direct 2x2 closed form), and reports the
//! normalization conventions alongside.
//!
//! The fixed point is the solution of the message recursion, not the exact
//! conditional; `recognet compare` surfaces the gap against the
//! enumeration oracle instead of hiding it.

use crate::net::{BayesNet, Evidence, NodeId, StructureClass};
use std::fmt;

/// Power iteration convergence threshold (successive-iterate L1 distance).
pub const DEFAULT_TOLERANCE: f64 = 1e-12;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub enum EigenError {
    NotSharedLeafPair { reason: String },
    UninstantiatedLeaf { node: String },
    NonConvergence { iterations: usize },
    DegenerateSpectrum { gap: f64 },
    DimensionMismatch { expected: usize, found: usize },
    NotSquare { rows: usize, cols: usize },
    NegativeEntry,
    ZeroMatrix,
}

impl fmt::Display for EigenError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EigenError::NotSharedLeafPair { reason } => {
                write!(f, "not a solvable shared-leaf pair: {reason}")
            }
            EigenError::UninstantiatedLeaf { node } => {
                write!(f, "shared leaf '{node}' is not instantiated")
            }
            EigenError::NonConvergence { iterations } => {
                write!(
                    f,
                    "power iteration did not converge within {iterations} iterations"
                )
            }
            EigenError::DegenerateSpectrum { gap } => {
                write!(
                    f,
                    "dominant eigenvalue is not isolated (gap {gap}); fixed point ambiguous"
                )
            }
            EigenError::DimensionMismatch { expected, found } => {
                write!(f, "vector of length {found}, expected {expected}")
            }
            EigenError::NotSquare { rows, cols } => {
                write!(f, "matrix is {rows}x{cols}, expected square")
            }
            EigenError::NegativeEntry => write!(f, "matrix has a negative entry"),
            EigenError::ZeroMatrix => {
                write!(f, "matrix or iterate is zero; no positive fixed point")
            }
        }
    }
}

impl std::error::Error for EigenError {}

/// Dense row-major matrix; just enough linear algebra for the cycle solver.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn transpose(&self) -> Matrix {
        let mut data = vec![0.0; self.data.len()];
        for (i, row) in self.data.chunks(self.cols).enumerate() {
            for (j, &x) in row.iter().enumerate() {
                data[j * self.rows + i] = x;
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.cols);
        let mut out = vec![0.0; self.rows];
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * self.cols..(i + 1) * self.cols];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.cols, other.rows);
        let mut data = vec![0.0; self.rows * other.cols];
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        Matrix {
            rows: self.rows,
            cols: other.cols,
            data,
        }
    }

    /// Left-multiply by diag(d).
    pub fn scale_rows(&self, d: &[f64]) -> Matrix {
        assert_eq!(d.len(), self.rows);
        let mut m = self.clone();
        for (row, &scale) in m.data.chunks_mut(self.cols).zip(d) {
            for x in row {
                *x *= scale;
            }
        }
        m
    }
}

/// How the first leaf's slice enters the cycle product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CycleOrientation {
    /// Use each slice exactly as stored (rows indexed by the first root).
    /// Only defined when both roots share a cardinality. This is the
    /// default composition and the one the reference beliefs come from.
    AsStored,
    /// Transpose the first leaf's slice so that every factor maps the
    /// sending root's states onto the receiving root's states. Exposed as
    /// a diagnostic; the only well-formed choice for unequal root
    /// cardinalities.
    ReceivingSending,
}

impl fmt::Display for CycleOrientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CycleOrientation::AsStored => f.write_str("as-stored"),
            CycleOrientation::ReceivingSending => f.write_str("receiving-sending"),
        }
    }
}

/// The two cycle matrices of a shared-leaf pair, one per root.
///
/// `a` runs over the first root's states and composes
/// diag(prior1) * S2 * diag(prior2) * S1'; `a_t` is the transposed cycle
/// over the second root's states, diag(prior2) * S1^T * diag(prior1) * S2'.
/// S1/S2 are the leaves' observed-state slices canonicalized to
/// (first root x second root) index order.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleMatrix {
    pub a: Matrix,
    pub a_t: Matrix,
    pub priors: (Vec<f64>, Vec<f64>),
    pub likelihoods: (Matrix, Matrix),
    pub orientation: CycleOrientation,
}

impl CycleMatrix {
    /// Assemble the cycle matrices from raw parts. Priors need only be
    /// nonnegative with positive mass; scaling both by a common factor
    /// scales the eigenvalue and leaves the normalized eigenvector alone.
    pub fn from_parts(
        prior1: &[f64],
        prior2: &[f64],
        slice1: Matrix,
        slice2: Matrix,
        orientation: CycleOrientation,
    ) -> Result<CycleMatrix, EigenError> {
        let (n1, n2) = (prior1.len(), prior2.len());
        for s in [&slice1, &slice2] {
            if s.rows() != n1 {
                return Err(EigenError::DimensionMismatch {
                    expected: n1,
                    found: s.rows(),
                });
            }
            if s.cols() != n2 {
                return Err(EigenError::DimensionMismatch {
                    expected: n2,
                    found: s.cols(),
                });
            }
            if s.data().iter().any(|&x| x < 0.0) {
                return Err(EigenError::NegativeEntry);
            }
        }
        for p in [prior1, prior2] {
            if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
                return Err(EigenError::NegativeEntry);
            }
            if p.iter().sum::<f64>() <= 0.0 {
                return Err(EigenError::ZeroMatrix);
            }
        }
        if orientation == CycleOrientation::AsStored && n1 != n2 {
            return Err(EigenError::DimensionMismatch {
                expected: n1,
                found: n2,
            });
        }

        let s1_up = match orientation {
            CycleOrientation::AsStored => slice1.clone(),
            CycleOrientation::ReceivingSending => slice1.transpose(),
        };
        let s2_back = match orientation {
            CycleOrientation::AsStored => slice2.transpose(),
            CycleOrientation::ReceivingSending => slice2.clone(),
        };
        // Cycle for the first root: prior1 * S2 * prior2 * S1'.
        let a = slice2.scale_rows(prior1).matmul(&s1_up.scale_rows(prior2));
        // Transposed cycle for the second root: prior2 * S1^T * prior1 * S2'.
        let a_t = slice1
            .transpose()
            .scale_rows(prior2)
            .matmul(&s2_back.scale_rows(prior1));
        Ok(CycleMatrix {
            a,
            a_t,
            priors: (prior1.to_vec(), prior2.to_vec()),
            likelihoods: (slice1, slice2),
            orientation,
        })
    }

    /// Build the cycle matrices from a shared-leaf-pair net with both
    /// shared leaves instantiated. The default orientation is
    /// [`CycleOrientation::AsStored`] when the roots share a cardinality.
    pub fn from_net(net: &BayesNet, evidence: &Evidence) -> Result<CycleMatrix, EigenError> {
        let (r1, r2) = pair_roots(net)?;
        let orientation = if net.cardinality(r1) == net.cardinality(r2) {
            CycleOrientation::AsStored
        } else {
            CycleOrientation::ReceivingSending
        };
        CycleMatrix::from_net_oriented(net, evidence, orientation)
    }

    pub fn from_net_oriented(
        net: &BayesNet,
        evidence: &Evidence,
        orientation: CycleOrientation,
    ) -> Result<CycleMatrix, EigenError> {
        let (r1, r2) = pair_roots(net)?;
        let shared = net.shared_leaves(r1, r2);
        if shared.len() != 2 {
            return Err(EigenError::NotSharedLeafPair {
                reason: format!(
                    "{} shared leaves, the cycle solver needs exactly 2",
                    shared.len()
                ),
            });
        }
        for (node, _) in evidence.iter() {
            if !shared.contains(&node) {
                return Err(EigenError::NotSharedLeafPair {
                    reason: format!(
                        "evidence on '{}' outside the two shared leaves",
                        net.node(node).id
                    ),
                });
            }
        }
        let mut slices = Vec::with_capacity(2);
        for &leaf in &shared {
            let k = evidence
                .get(leaf)
                .ok_or_else(|| EigenError::UninstantiatedLeaf {
                    node: net.node(leaf).id.clone(),
                })?;
            let cpt = net.cpt(leaf);
            let raw = cpt
                .two_parent_slice(k)
                .expect("shared leaf has two parents");
            let (c1, c2) = (cpt.parent_cards()[0], cpt.parent_cards()[1]);
            let m = Matrix::new(c1, c2, raw);
            // Canonical index order: rows = first root, cols = second root.
            slices.push(if cpt.parents()[0] == r1 {
                m
            } else {
                m.transpose()
            });
        }
        let s2 = slices.pop().unwrap();
        let s1 = slices.pop().unwrap();
        CycleMatrix::from_parts(net.prior(r1), net.prior(r2), s1, s2, orientation)
    }

    /// L1 distance between normalize(a * candidate) and candidate; zero
    /// exactly at the normalized fixed point.
    pub fn fixed_point_residual(&self, candidate: &[f64]) -> Result<f64, EigenError> {
        fixed_point_residual(&self.a, candidate)
    }
}

fn pair_roots(net: &BayesNet) -> Result<(NodeId, NodeId), EigenError> {
    let class = net.classify();
    if class != StructureClass::SharedLeafPair {
        return Err(EigenError::NotSharedLeafPair {
            reason: format!("net structure is {class}"),
        });
    }
    let roots = net.roots();
    debug_assert_eq!(roots.len(), 2);
    Ok((roots[0], roots[1]))
}

/// Dominant eigenvalue and eigenvector of a square nonnegative matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub value: f64,
    /// L1-normalized, nonnegative; strictly positive for positive matrices.
    pub vector: Vec<f64>,
    /// L1 norm of A*v - value*v at the returned vector.
    pub residual: f64,
    pub iterations: usize,
}

fn check_square_nonneg(m: &Matrix) -> Result<usize, EigenError> {
    if !m.is_square() {
        return Err(EigenError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if m.data().iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return Err(EigenError::NegativeEntry);
    }
    if m.data().iter().all(|&x| x == 0.0) {
        return Err(EigenError::ZeroMatrix);
    }
    Ok(m.rows())
}

fn residual_l1(m: &Matrix, value: f64, v: &[f64]) -> f64 {
    m.matvec(v)
        .iter()
        .zip(v)
        .map(|(av, x)| (av - value * x).abs())
        .sum()
}

/// Power iteration with a uniform start vector and L1 normalization each
/// step; converged when successive iterates differ by less than
/// `tolerance` in L1. For 2x2 matrices the spectrum is checked first and
/// [`EigenError::DegenerateSpectrum`] returned when the dominant
/// eigenvalue is not isolated by more than `tolerance`.
pub fn dominant_eigenpair(
    m: &Matrix,
    tolerance: f64,
    max_iterations: usize,
) -> Result<Eigenpair, EigenError> {
    let n = check_square_nonneg(m)?;
    if n == 2 {
        let (l1, l2) = eigenvalues_2x2(m);
        if l1 - l2.abs() <= tolerance {
            return Err(EigenError::DegenerateSpectrum { gap: l1 - l2.abs() });
        }
    }
    let mut v = vec![1.0 / n as f64; n];
    for it in 1..=max_iterations {
        let w = m.matvec(&v);
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(EigenError::ZeroMatrix);
        }
        let w: Vec<f64> = w.iter().map(|x| x / sum).collect();
        let delta: f64 = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v = w;
        if delta < tolerance {
            let value: f64 = m.matvec(&v).iter().sum();
            let residual = residual_l1(m, value, &v);
            return Ok(Eigenpair {
                value,
                vector: v,
                residual,
                iterations: it,
            });
        }
    }
    Err(EigenError::NonConvergence {
        iterations: max_iterations,
    })
}

fn eigenvalues_2x2(m: &Matrix) -> (f64, f64) {
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    let trace = a + d;
    let det = a * d - b * c;
    // Nonnegative entries keep the discriminant real.
    let disc = (trace * trace - 4.0 * det).max(0.0);
    let s = disc.sqrt();
    ((trace + s) / 2.0, (trace - s) / 2.0)
}

/// Direct closed-form eigenpair of a nonnegative 2x2 matrix via its
/// characteristic polynomial, for cross-checking power iteration.
pub fn dominant_eigenpair_2x2(m: &Matrix, tolerance: f64) -> Result<Eigenpair, EigenError> {
    let n = check_square_nonneg(m)?;
    if n != 2 {
        return Err(EigenError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    let (l1, l2) = eigenvalues_2x2(m);
    if l1 - l2.abs() <= tolerance {
        return Err(EigenError::DegenerateSpectrum { gap: l1 - l2.abs() });
    }
    let (a, b, c, d) = (m.get(0, 0), m.get(0, 1), m.get(1, 0), m.get(1, 1));
    // Either row of (A - l1 I) yields the eigenvector; take the better
    // conditioned candidate. Both are nonnegative for a nonnegative matrix.
    let cand1 = [b, l1 - a];
    let cand2 = [l1 - d, c];
    let pick = if cand1[0] + cand1[1] >= cand2[0] + cand2[1] {
        cand1
    } else {
        cand2
    };
    let sum = pick[0] + pick[1];
    let vector = if sum > 0.0 {
        vec![pick[0] / sum, pick[1] / sum]
    } else {
        // Diagonal matrix: unit vector on the dominant entry.
        if a >= d {
            vec![1.0, 0.0]
        } else {
            vec![0.0, 1.0]
        }
    };
    let residual = residual_l1(m, l1, &vector);
    Ok(Eigenpair {
        value: l1,
        vector,
        residual,
        iterations: 0,
    })
}

/// L1 distance between normalize(m * candidate) and candidate.
pub fn fixed_point_residual(m: &Matrix, candidate: &[f64]) -> Result<f64, EigenError> {
    if candidate.len() != m.cols() {
        return Err(EigenError::DimensionMismatch {
            expected: m.cols(),
            found: candidate.len(),
        });
    }
    let w = m.matvec(candidate);
    let sum: f64 = w.iter().sum();
    if sum <= 0.0 || !sum.is_finite() {
        return Err(EigenError::ZeroMatrix);
    }
    Ok(w.iter()
        .zip(candidate)
        .map(|(a, b)| (a / sum - b).abs())
        .sum())
}

/// Message vectors after literally iterating the four reflection steps of
/// the cycle to convergence.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleIteration {
    pub pi11: Vec<f64>,
    pub lambda12: Vec<f64>,
    pub pi22: Vec<f64>,
    pub lambda21: Vec<f64>,
    pub iterations: usize,
}

/// Iterate the message cycle step by step from a uniform start, with L1
/// normalization after every reflection, until the first root's downward
/// message stabilizes. Converges to the same vector as the dominant
/// eigenvector of `cycle.a`.
pub fn iterate_cycle(
    cycle: &CycleMatrix,
    tolerance: f64,
    max_iterations: usize,
) -> Result<CycleIteration, EigenError> {
    let normalize = |v: Vec<f64>| -> Result<Vec<f64>, EigenError> {
        let sum: f64 = v.iter().sum();
        if sum <= 0.0 || !sum.is_finite() {
            return Err(EigenError::ZeroMatrix);
        }
        Ok(v.iter().map(|x| x / sum).collect())
    };
    let hadamard =
        |d: &[f64], v: &[f64]| -> Vec<f64> { d.iter().zip(v).map(|(a, b)| a * b).collect() };
    let s1_up = match cycle.orientation {
        CycleOrientation::AsStored => cycle.likelihoods.0.clone(),
        CycleOrientation::ReceivingSending => cycle.likelihoods.0.transpose(),
    };
    let s2 = &cycle.likelihoods.1;
    let (p1, p2) = (&cycle.priors.0, &cycle.priors.1);

    let n1 = p1.len();
    let mut pi11 = vec![1.0 / n1 as f64; n1];
    for it in 1..=max_iterations {
        let lambda12 = normalize(s1_up.matvec(&pi11))?;
        let pi22 = normalize(hadamard(p2, &lambda12))?;
        let lambda21 = normalize(s2.matvec(&pi22))?;
        let next = normalize(hadamard(p1, &lambda21))?;
        let delta: f64 = next.iter().zip(&pi11).map(|(a, b)| (a - b).abs()).sum();
        pi11 = next;
        if delta < tolerance {
            return Ok(CycleIteration {
                pi11,
                lambda12,
                pi22,
                lambda21,
                iterations: it,
            });
        }
    }
    Err(EigenError::NonConvergence {
        iterations: max_iterations,
    })
}

/// The normalization conventions attached to a cycle solution. The cycle
/// product has its own dominant eigenvalue (reciprocal of the recursion's
/// normalizer), and each square leaf slice has one too; published figures
/// may quote either, so both are reported.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaReport {
    /// Dominant eigenvalue of the first root's cycle matrix.
    pub cycle_eigenvalue: f64,
    /// Its reciprocal: the per-cycle normalization constant.
    pub cycle_normalizer: f64,
    /// Dominant eigenvalue of each (square) leaf slice.
    pub leaf_slice_eigenvalues: Vec<(NodeId, f64)>,
    pub note: &'static str,
}

pub const ALPHA_NOTE: &str =
    "cycle-eigenvalue and per-leaf slice eigenvalues are distinct normalization conventions; both are reported";

/// Beliefs of both roots of a shared-leaf pair from the dominant
/// eigenvectors of the two cycle matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedLeafSolution {
    pub roots: (NodeId, NodeId),
    pub leaves: (NodeId, NodeId),
    /// Dominant eigenvector of `cycle.a`.
    pub bel_root1: Vec<f64>,
    /// Dominant eigenvector of `cycle.a_t`, indexed by the second root's
    /// own state order (the transposed cycle's convention).
    pub bel_root2: Vec<f64>,
    pub eigen1: Eigenpair,
    pub eigen2: Eigenpair,
    pub cycle: CycleMatrix,
    pub alpha: AlphaReport,
    /// False when a cycle matrix has zero entries: the dominant
    /// eigenvector is then not guaranteed unique.
    pub strictly_positive: bool,
    /// L1 gap between power iteration and the direct 2x2 solution of the
    /// first cycle, when the roots are binary.
    pub direct_agreement: Option<f64>,
}

/// Solve a shared-leaf pair net: both shared leaves must be instantiated.
pub fn solve_shared_leaf_pair(
    net: &BayesNet,
    evidence: &Evidence,
) -> Result<SharedLeafSolution, EigenError> {
    let cycle = CycleMatrix::from_net(net, evidence)?;
    let (r1, r2) = pair_roots(net)?;
    let shared = net.shared_leaves(r1, r2);
    let eigen1 = dominant_eigenpair(&cycle.a, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)?;
    let eigen2 = dominant_eigenpair(&cycle.a_t, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS)?;

    let mut leaf_slice_eigenvalues = Vec::new();
    for (leaf, slice) in [
        (shared[0], &cycle.likelihoods.0),
        (shared[1], &cycle.likelihoods.1),
    ] {
        if slice.is_square() {
            if let Ok(pair) = dominant_eigenpair(slice, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS) {
                leaf_slice_eigenvalues.push((leaf, pair.value));
            }
        }
    }

    let strictly_positive =
        cycle.a.data().iter().all(|&x| x > 0.0) && cycle.a_t.data().iter().all(|&x| x > 0.0);
    let direct_agreement = if cycle.a.rows() == 2 {
        dominant_eigenpair_2x2(&cycle.a, DEFAULT_TOLERANCE)
            .ok()
            .map(|direct| {
                direct
                    .vector
                    .iter()
                    .zip(&eigen1.vector)
                    .map(|(a, b)| (a - b).abs())
                    .sum()
            })
    } else {
        None
    };

    let alpha = AlphaReport {
        cycle_eigenvalue: eigen1.value,
        cycle_normalizer: 1.0 / eigen1.value,
        leaf_slice_eigenvalues,
        note: ALPHA_NOTE,
    };
    Ok(SharedLeafSolution {
        roots: (r1, r2),
        leaves: (shared[0], shared[1]),
        bel_root1: eigen1.vector.clone(),
        bel_root2: eigen2.vector.clone(),
        eigen1,
        eigen2,
        cycle,
        alpha,
        strictly_positive,
        direct_agreement,
    })
}
