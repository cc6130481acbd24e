//! Plumbing graphs and their linking algebra: Neumann moves, the linking
//! matrix and its exact inverse, branch/trunk chains, the reduced matrix on
//! vertices of degree >= 3, and Spin^c / cocycle coset enumeration.

use crate::numeric::{Int, Rat};
use crate::ratmat::RatMat;
use crate::signedsum::smith_normal_form;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlumbingError {
    #[error("graph is not a tree: {0}")]
    NotATree(String),
    #[error("duplicate vertex id {0}")]
    DuplicateId(i64),
    #[error("edge references unknown vertex id {0}")]
    UnknownId(i64),
    #[error("linking matrix is singular")]
    SingularMatrix,
    #[error("move site does not match the required pattern: {0}")]
    PatternMismatch(String),
    #[error("graph is not strongly nondegenerate")]
    NotStronglyNondegenerate,
    #[error("no vertices of degree >= 3")]
    EmptyVeeSet,
}

/// A plumbing graph: a tree with integer weights on the vertices.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct PlumbingGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<(i64, i64)>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Vertex {
    pub id: i64,
    pub weight: i64,
}

impl PlumbingGraph {
    pub fn new(weights: &[(i64, i64)], edges: &[(i64, i64)]) -> Result<Self, PlumbingError> {
        let g = PlumbingGraph {
            vertices: weights
                .iter()
                .map(|&(id, weight)| Vertex { id, weight })
                .collect(),
            edges: edges.to_vec(),
        };
        g.validate()?;
        Ok(g)
    }

    /// A single vertex graph.
    pub fn single(weight: i64) -> Self {
        PlumbingGraph::new(&[(0, weight)], &[]).unwrap()
    }

    /// Star-shaped graph: center weight, then one chain of weights per leg.
    pub fn star(center: i64, legs: &[Vec<i64>]) -> Self {
        let mut weights = vec![(0i64, center)];
        let mut edges = Vec::new();
        let mut next = 1i64;
        for leg in legs {
            let mut prev = 0i64;
            for &w in leg {
                weights.push((next, w));
                edges.push((prev, next));
                prev = next;
                next += 1;
            }
        }
        PlumbingGraph::new(&weights, &edges).unwrap()
    }

    /// The E8 tree as the Seifert star (2,3,5) presentation: all weights -2.
    pub fn e8() -> Self {
        PlumbingGraph::star(-2, &[vec![-2], vec![-2, -2], vec![-2, -2, -2, -2]])
    }

    /// The H-graph on six vertices: two adjacent centers, two leaves each.
    pub fn h_graph(w: [i64; 6]) -> Self {
        PlumbingGraph::new(
            &[
                (1, w[0]),
                (2, w[1]),
                (3, w[2]),
                (4, w[3]),
                (5, w[4]),
                (6, w[5]),
            ],
            &[(1, 2), (1, 3), (1, 4), (2, 5), (2, 6)],
        )
        .unwrap()
    }

    fn validate(&self) -> Result<(), PlumbingError> {
        let mut seen = BTreeSet::new();
        for v in &self.vertices {
            if !seen.insert(v.id) {
                return Err(PlumbingError::DuplicateId(v.id));
            }
        }
        for &(a, b) in &self.edges {
            if !seen.contains(&a) {
                return Err(PlumbingError::UnknownId(a));
            }
            if !seen.contains(&b) {
                return Err(PlumbingError::UnknownId(b));
            }
        }
        if self.edges.len() + 1 != self.vertices.len() {
            return Err(PlumbingError::NotATree(format!(
                "{} vertices need {} edges, found {}",
                self.vertices.len(),
                self.vertices.len() - 1,
                self.edges.len()
            )));
        }
        // Connectivity; with |E| = |V| - 1, connected <=> acyclic.
        let mut adj: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
        for &(a, b) in &self.edges {
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let start = self.vertices[0].id;
        let mut visited = BTreeSet::new();
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if !visited.insert(v) {
                continue;
            }
            for &w in adj.get(&v).into_iter().flatten() {
                if !visited.contains(&w) {
                    stack.push(w);
                }
            }
        }
        if visited.len() != self.vertices.len() {
            let missing: Vec<i64> = self
                .vertices
                .iter()
                .map(|v| v.id)
                .filter(|id| !visited.contains(id))
                .collect();
            return Err(PlumbingError::NotATree(format!(
                "disconnected component containing vertices {missing:?}"
            )));
        }
        Ok(())
    }

    pub fn load_json(text: &str) -> Result<Self, PlumbingError> {
        let g: PlumbingGraph = serde_json::from_str(text)
            .map_err(|e| PlumbingError::NotATree(format!("invalid JSON: {e}")))?;
        g.validate()?;
        Ok(g)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).unwrap()
    }

    pub fn degree(&self, id: i64) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == id || b == id)
            .count()
    }

    pub fn neighbors(&self, id: i64) -> Vec<i64> {
        let mut out = Vec::new();
        for &(a, b) in &self.edges {
            if a == id {
                out.push(b);
            } else if b == id {
                out.push(a);
            }
        }
        out
    }

    pub fn weight(&self, id: i64) -> i64 {
        self.vertices.iter().find(|v| v.id == id).unwrap().weight
    }

    fn weight_mut(&mut self, id: i64) -> &mut i64 {
        &mut self
            .vertices
            .iter_mut()
            .find(|v| v.id == id)
            .unwrap()
            .weight
    }

    /// Vertex ids in stored order; this order indexes all matrices below.
    pub fn ids(&self) -> Vec<i64> {
        self.vertices.iter().map(|v| v.id).collect()
    }
}

/// Result of [`linking`]: the linking matrix with exact inverse and the
/// degree/vertex-class bookkeeping.
#[derive(Clone, Debug)]
pub struct LinkingData {
    pub graph: PlumbingGraph,
    /// Vertex ids in matrix order.
    pub ids: Vec<i64>,
    pub w: RatMat,
    pub det: Rat,
    pub w_inv: RatMat,
    pub degrees: Vec<usize>,
    /// Index sets by degree class: degree 1, degree 2, degree >= 3.
    pub v1: Vec<usize>,
    pub v2: Vec<usize>,
    pub vee: Vec<usize>,
    pub negative_definite: bool,
    /// Signature of W (positive minus negative eigenvalue count).
    pub signature: i64,
}

/// Build the linking matrix (weights on the diagonal, adjacency off it) and
/// its exact inverse.
pub fn linking(graph: &PlumbingGraph) -> Result<LinkingData, PlumbingError> {
    graph.validate()?;
    let ids = graph.ids();
    let n = ids.len();
    let pos: BTreeMap<i64, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut w = RatMat::zeros(n, n);
    for (i, &id) in ids.iter().enumerate() {
        w[(i, i)] = Rat::from(graph.weight(id));
    }
    for &(a, b) in &graph.edges {
        let (i, j) = (pos[&a], pos[&b]);
        w[(i, j)] = Rat::from(1);
        w[(j, i)] = Rat::from(1);
    }
    let det = w.det();
    if det.cmp0() == std::cmp::Ordering::Equal {
        return Err(PlumbingError::SingularMatrix);
    }
    let w_inv = w.inverse().expect("nonzero determinant");
    let degrees: Vec<usize> = ids.iter().map(|&id| graph.degree(id)).collect();
    let v1 = (0..n).filter(|&i| degrees[i] == 1).collect();
    let v2 = (0..n).filter(|&i| degrees[i] == 2).collect();
    let vee = (0..n).filter(|&i| degrees[i] >= 3).collect();
    let negative_definite = w.is_negative_definite();
    let signature = w.signature();
    Ok(LinkingData {
        graph: graph.clone(),
        ids,
        w,
        det,
        w_inv,
        degrees,
        v1,
        v2,
        vee,
        negative_definite,
        signature,
    })
}

impl LinkingData {
    pub fn index_of(&self, id: i64) -> usize {
        self.ids.iter().position(|&x| x == id).unwrap()
    }

    /// Weak negative definiteness: W invertible and the Vee x Vee submatrix
    /// of W^{-1} negative definite.
    pub fn weakly_negative_definite(&self) -> bool {
        if self.vee.is_empty() {
            return true;
        }
        self.w_inv
            .submatrix(&self.vee, &self.vee)
            .scale(&Rat::from(-1))
            .is_positive_definite()
    }

    /// Strong nondegeneracy: W invertible and the Vee x Vee submatrix of
    /// W^{-1} invertible.
    pub fn strongly_nondegenerate(&self) -> bool {
        if self.vee.is_empty() {
            return true;
        }
        self.w_inv.submatrix(&self.vee, &self.vee).det().cmp0() != std::cmp::Ordering::Equal
    }
}

// ---------------------------------------------------------------------------
// Neumann moves
// ---------------------------------------------------------------------------

/// A Neumann move, both directions.
#[derive(Clone, Debug)]
pub enum NeumannMove {
    /// Remove a degree-2 vertex `mid` of weight +/-1 between two vertices,
    /// connecting its neighbors and adjusting both weights by -/+ 1.
    BlowdownInterior { mid: i64 },
    /// Remove a degree-1 vertex `leaf` of weight +/-1, adjusting its
    /// neighbor's weight by -/+ 1.
    BlowdownLeaf { leaf: i64 },
    /// Merge `(w) - (0) - (w')` (where the 0-vertex `mid` has degree 2)
    /// into a single vertex of weight `w + w'`.
    ZeroChain { mid: i64 },
    /// Insert a new vertex of weight `sign` (+/-1) on the edge `(a, b)`,
    /// adding `sign` to both endpoint weights.
    BlowupInterior { a: i64, b: i64, sign: i64, new_id: i64 },
    /// Attach a new leaf of weight `sign` (+/-1) at `v`, adding `sign` to
    /// the weight of `v`.
    BlowupLeaf { v: i64, sign: i64, new_id: i64 },
}

/// Apply a Neumann move; |det W| is preserved by every move.
pub fn neumann_move(
    graph: &PlumbingGraph,
    mv: &NeumannMove,
) -> Result<PlumbingGraph, PlumbingError> {
    let mut g = graph.clone();
    match *mv {
        NeumannMove::BlowdownInterior { mid } => {
            let eps = g.weight(mid);
            if eps.abs() != 1 || g.degree(mid) != 2 {
                return Err(PlumbingError::PatternMismatch(format!(
                    "vertex {mid} is not a degree-2 vertex of weight +/-1"
                )));
            }
            let nb = g.neighbors(mid);
            let (a, b) = (nb[0], nb[1]);
            *g.weight_mut(a) -= eps;
            *g.weight_mut(b) -= eps;
            g.edges.retain(|&(x, y)| x != mid && y != mid);
            g.edges.push((a, b));
            g.vertices.retain(|v| v.id != mid);
        }
        NeumannMove::BlowdownLeaf { leaf } => {
            let eps = g.weight(leaf);
            if eps.abs() != 1 || g.degree(leaf) != 1 {
                return Err(PlumbingError::PatternMismatch(format!(
                    "vertex {leaf} is not a degree-1 vertex of weight +/-1"
                )));
            }
            let a = g.neighbors(leaf)[0];
            *g.weight_mut(a) -= eps;
            g.edges.retain(|&(x, y)| x != leaf && y != leaf);
            g.vertices.retain(|v| v.id != leaf);
        }
        NeumannMove::ZeroChain { mid } => {
            if g.weight(mid) != 0 || g.degree(mid) != 2 {
                return Err(PlumbingError::PatternMismatch(format!(
                    "vertex {mid} is not a degree-2 vertex of weight 0"
                )));
            }
            let nb = g.neighbors(mid);
            let (a, b) = (nb[0], nb[1]);
            // merge b into a
            let wb = g.weight(b);
            *g.weight_mut(a) += wb;
            g.edges.retain(|&(x, y)| x != mid && y != mid);
            let mut new_edges = Vec::new();
            for &(x, y) in &g.edges {
                let x = if x == b { a } else { x };
                let y = if y == b { a } else { y };
                new_edges.push((x, y));
            }
            g.edges = new_edges;
            g.vertices.retain(|v| v.id != mid && v.id != b);
        }
        NeumannMove::BlowupInterior { a, b, sign, new_id } => {
            if sign.abs() != 1 {
                return Err(PlumbingError::PatternMismatch("sign must be +/-1".into()));
            }
            let pos = g
                .edges
                .iter()
                .position(|&(x, y)| (x == a && y == b) || (x == b && y == a))
                .ok_or_else(|| PlumbingError::PatternMismatch(format!("no edge ({a}, {b})")))?;
            if g.vertices.iter().any(|v| v.id == new_id) {
                return Err(PlumbingError::DuplicateId(new_id));
            }
            g.edges.remove(pos);
            g.vertices.push(Vertex {
                id: new_id,
                weight: sign,
            });
            g.edges.push((a, new_id));
            g.edges.push((new_id, b));
            *g.weight_mut(a) += sign;
            *g.weight_mut(b) += sign;
        }
        NeumannMove::BlowupLeaf { v, sign, new_id } => {
            if sign.abs() != 1 {
                return Err(PlumbingError::PatternMismatch("sign must be +/-1".into()));
            }
            if g.vertices.iter().any(|x| x.id == new_id) {
                return Err(PlumbingError::DuplicateId(new_id));
            }
            g.vertices.push(Vertex {
                id: new_id,
                weight: sign,
            });
            g.edges.push((v, new_id));
            *g.weight_mut(v) += sign;
        }
    }
    g.validate()?;
    Ok(g)
}

// ---------------------------------------------------------------------------
// Chains (branches and trunks)
// ---------------------------------------------------------------------------

/// Where a chain ends: at a leaf (branch) or at another high-degree vertex
/// (trunk).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChainKind {
    Branch,
    Trunk,
}

/// A branch or trunk emanating from `origin`: interior vertices
/// `i_1, ..., i_s` ordered away from the origin (for a branch the last one
/// is the leaf), plus the determinant data of the tridiagonal chain matrix.
#[derive(Clone, Debug)]
pub struct Chain {
    pub kind: ChainKind,
    pub origin: i64,
    /// Interior vertex ids, ordered from `origin` outward.
    pub interior: Vec<i64>,
    /// For a trunk, the far vertex in Vee; for a branch, the leaf id
    /// (the last interior vertex).
    pub terminal: i64,
    /// Determinant of the full chain matrix.
    pub p: Rat,
    /// Determinant of the chain minus the origin-adjacent vertex
    /// (the (1,1) cofactor of the chain matrix as seen from `origin`).
    pub q_far: Rat,
    /// Determinant of the chain minus the far-end vertex
    /// (the (s,s) cofactor as seen from `origin`).
    pub q_near: Rat,
    pub len: usize,
}

impl Chain {
    /// Sign of the (1, s) entry of the inverse chain matrix:
    /// `(W_beta^{-1})_{1,s} = (-1)^{s+1} / p`.
    pub fn corner_sign(&self) -> i64 {
        if self.len % 2 == 1 {
            1
        } else {
            -1
        }
    }

    /// The leaf of a branch.
    pub fn leaf(&self) -> i64 {
        debug_assert_eq!(self.kind, ChainKind::Branch);
        self.terminal
    }
}

fn tridiag_det(weights: &[i64]) -> Rat {
    // det of the tridiagonal matrix with the given diagonal and unit
    // off-diagonals: d_k = w_k d_{k-1} - d_{k-2}, d_0 = 1, d_{-1} = 1
    // (so the empty chain has determinant 1).
    let mut prev2 = Rat::from(1);
    let mut prev1 = Rat::from(1);
    for (k, &w) in weights.iter().enumerate() {
        let cur = Rat::from(w) * &prev1 - if k >= 1 { prev2.clone() } else { Rat::new() };
        prev2 = prev1;
        prev1 = cur;
    }
    prev1
}

/// Enumerate all branches and trunks. Every leaf belongs to exactly one
/// branch and every degree-2 vertex to exactly one chain. Trunks are
/// reported once per direction; callers needing each undirected trunk once
/// should keep `origin < terminal`.
pub fn chains(graph: &PlumbingGraph) -> Result<Vec<Chain>, PlumbingError> {
    let vee_ids: Vec<i64> = graph
        .ids()
        .into_iter()
        .filter(|&id| graph.degree(id) >= 3)
        .collect();
    if vee_ids.is_empty() {
        return Err(PlumbingError::EmptyVeeSet);
    }
    let mut out = Vec::new();
    for &v in &vee_ids {
        for &start in &graph.neighbors(v) {
            if graph.degree(start) >= 3 {
                continue; // directly adjacent Vee vertices: no chain between
            }
            // walk outward until a leaf or a Vee vertex
            let mut interior = Vec::new();
            let mut prev = v;
            let mut cur = start;
            let (kind, terminal) = loop {
                if graph.degree(cur) >= 3 {
                    break (ChainKind::Trunk, cur);
                }
                interior.push(cur);
                if graph.degree(cur) == 1 {
                    break (ChainKind::Branch, cur);
                }
                let next = *graph
                    .neighbors(cur)
                    .iter()
                    .find(|&&x| x != prev)
                    .expect("degree-2 vertex has two neighbors");
                prev = cur;
                cur = next;
            };
            let weights: Vec<i64> = interior.iter().map(|&id| graph.weight(id)).collect();
            let p = tridiag_det(&weights);
            let q_far = tridiag_det(&weights[1..]);
            let q_near = tridiag_det(&weights[..weights.len() - 1]);
            out.push(Chain {
                kind,
                origin: v,
                interior,
                terminal,
                p,
                q_far,
                q_near,
                len: weights.len(),
            });
        }
    }
    Ok(out)
}

/// Necessary minimality condition: every chain has |p| >= 2. (A chain with
/// |p| = 1 admits a blowdown; this reports the condition, not a full
/// minimality decision.)
pub fn minimality_check(graph: &PlumbingGraph) -> Result<bool, PlumbingError> {
    match chains(graph) {
        Ok(cs) => Ok(cs.iter().all(|c| c.p.clone().abs() >= Rat::from(2))),
        Err(PlumbingError::EmptyVeeSet) => Ok(true),
        Err(e) => Err(e),
    }
}

// ---------------------------------------------------------------------------
// Reduced matrix
// ---------------------------------------------------------------------------

/// The reduced matrix `W_vee` on vertices of degree >= 3, with the
/// per-vertex lcm `P_v` of branch determinants.
#[derive(Clone, Debug)]
pub struct ReducedMatrix {
    /// Vertex ids in Vee, in matrix order.
    pub vee_ids: Vec<i64>,
    /// The exact inverse of the Vee x Vee submatrix of W^{-1}.
    pub w_vee: RatMat,
    /// `P_v` = lcm of |p_beta| over branches at `v` (1 when there are none).
    pub p_lcm: Vec<Int>,
    /// All chains of the graph (trunks once per direction).
    pub chains: Vec<Chain>,
    /// `Delta_vee - Delta = -sum_v sum_{branches at v} q_near / (4 p)`.
    pub delta_shift: Rat,
}

/// Assemble `W_vee` from the chain data: diagonal `w_v - sum q_far / p` over
/// chains at `v`; off-diagonal `1` for adjacent Vee vertices and
/// `(-1)^{s} / p` across a trunk with `s` interior vertices. Verifies
/// exactly that the result inverts the Vee x Vee submatrix of `W^{-1}` and
/// that `det W = det(W_vee) * prod p` before returning.
pub fn reduced_matrix(ld: &LinkingData) -> Result<ReducedMatrix, PlumbingError> {
    if ld.vee.is_empty() {
        return Err(PlumbingError::EmptyVeeSet);
    }
    if !ld.strongly_nondegenerate() {
        return Err(PlumbingError::NotStronglyNondegenerate);
    }
    let graph = &ld.graph;
    let all_chains = chains(graph)?;
    let vee_ids: Vec<i64> = ld.vee.iter().map(|&i| ld.ids[i]).collect();
    let k = vee_ids.len();
    let mut w_vee = RatMat::zeros(k, k);
    for (i, &v) in vee_ids.iter().enumerate() {
        let mut diag = Rat::from(graph.weight(v));
        for c in all_chains.iter().filter(|c| c.origin == v) {
            diag -= c.q_far.clone() / &c.p;
        }
        w_vee[(i, i)] = diag;
        for (j, &v2) in vee_ids.iter().enumerate() {
            if i == j {
                continue;
            }
            if graph.neighbors(v).contains(&v2) {
                w_vee[(i, j)] = Rat::from(1);
            } else if let Some(t) = all_chains
                .iter()
                .find(|c| c.kind == ChainKind::Trunk && c.origin == v && c.terminal == v2)
            {
                w_vee[(i, j)] = Rat::from(-t.corner_sign()) / &t.p;
            }
        }
    }
    // Invariant 1: W_vee inverts the Vee x Vee submatrix of W^{-1}, exactly.
    let sub = ld.w_inv.submatrix(&ld.vee, &ld.vee);
    let prod = w_vee.mul(&sub);
    assert_eq!(prod, RatMat::identity(k), "reduced matrix fails inversion");
    // Invariant 2: det W = det(W_vee) * prod p over undirected chains.
    let mut p_prod = w_vee.det();
    for c in &all_chains {
        if c.kind == ChainKind::Trunk && c.origin > c.terminal {
            continue; // count each trunk once
        }
        p_prod *= &c.p;
    }
    assert_eq!(p_prod, ld.det, "determinant factorization fails");

    let mut p_lcm = Vec::with_capacity(k);
    let mut delta_shift = Rat::new();
    for &v in &vee_ids {
        let mut l = Int::from(1);
        for c in all_chains
            .iter()
            .filter(|c| c.origin == v && c.kind == ChainKind::Branch)
        {
            let pn = c.p.numer().clone().abs();
            l = l.lcm(&pn);
            delta_shift -= c.q_near.clone() / (Rat::from(4) * &c.p);
        }
        p_lcm.push(l);
    }
    Ok(ReducedMatrix {
        vee_ids,
        w_vee,
        p_lcm,
        chains: all_chains,
        delta_shift,
    })
}

// ---------------------------------------------------------------------------
// Coset enumeration
// ---------------------------------------------------------------------------

/// A Spin^c class: a representative of `(delta + 2Z^V) / 2W(Z^V)`.
#[derive(Clone, Debug)]
pub struct SpinCClass {
    pub rep: Vec<Int>,
}

/// A cocycle class: a representative of `W^{-1}(Z^V) / Z^V`, stored as the
/// exact rational vector `W^{-1} y`.
#[derive(Clone, Debug)]
pub struct CocycleClass {
    pub rep: Vec<Rat>,
}

impl CocycleClass {
    pub fn zero(n: usize) -> Self {
        CocycleClass {
            rep: vec![Rat::new(); n],
        }
    }

    pub fn is_zero_class(&self) -> bool {
        self.rep.iter().all(|r| *r.denom() == 1)
    }
}

fn int_mat_from_ratmat(m: &RatMat) -> Vec<Vec<Int>> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| {
                    let r = &m[(i, j)];
                    assert_eq!(*r.denom(), 1, "expected integer matrix");
                    r.numer().clone()
                })
                .collect()
        })
        .collect()
}

/// Coset representatives of `Z^n / M Z^n` for a nonsingular integer matrix M,
/// via the Smith normal form: with `U M V = D`, classes correspond to
/// `y` in the box `prod [0, |d_i|)` through `x = U^{-1} y`. Representatives
/// are the image of the lexicographically smallest box vectors.
fn lattice_cosets(m_int: &[Vec<Int>]) -> Vec<Vec<Int>> {
    let n = m_int.len();
    let snf = smith_normal_form(&m_int.to_vec());
    let u_inv = invert_unimodular(&snf.u);
    let mut reps = Vec::new();
    let dims: Vec<Int> = (0..n).map(|i| snf.d[i][i].clone().abs()).collect();
    let mut idx = vec![Int::from(0); n];
    loop {
        // rep = U^{-1} * idx
        let rep: Vec<Int> = (0..n)
            .map(|i| {
                let mut acc = Int::from(0);
                for j in 0..n {
                    acc += u_inv[i][j].clone() * &idx[j];
                }
                acc
            })
            .collect();
        reps.push(rep);
        // advance the mixed-radix counter
        let mut carry = true;
        for i in 0..n {
            if !carry {
                break;
            }
            idx[i] += 1;
            if idx[i] < dims[i] {
                carry = false;
            } else {
                idx[i] = Int::from(0);
            }
        }
        if carry {
            break;
        }
    }
    reps
}

fn invert_unimodular(u: &[Vec<Int>]) -> Vec<Vec<Int>> {
    let n = u.len();
    let m = RatMat::from_fn(n, n, |i, j| Rat::from(u[i][j].clone()));
    let inv = m.inverse().expect("unimodular");
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let r = &inv[(i, j)];
                    assert_eq!(*r.denom(), 1);
                    r.numer().clone()
                })
                .collect()
        })
        .collect()
}

/// Complete irredundant Spin^c representatives: `delta + 2u` for `u` over
/// `Z^V / W(Z^V)`; there are `|det W|` of them.
pub fn spin_c_classes(ld: &LinkingData) -> Vec<SpinCClass> {
    let w_int = int_mat_from_ratmat(&ld.w);
    let cosets = lattice_cosets(&w_int);
    cosets
        .into_iter()
        .map(|u| SpinCClass {
            rep: ld
                .degrees
                .iter()
                .zip(u)
                .map(|(&d, ui)| Int::from(d as i64) + ui * 2)
                .collect(),
        })
        .collect()
}

/// Complete irredundant cocycle representatives `W^{-1} y`, `y` over
/// `Z^V / W(Z^V)`; there are `|det W|` of them.
pub fn cocycle_classes(ld: &LinkingData) -> Vec<CocycleClass> {
    let w_int = int_mat_from_ratmat(&ld.w);
    let cosets = lattice_cosets(&w_int);
    cosets
        .into_iter()
        .map(|y| {
            let yr: Vec<Rat> = y.into_iter().map(Rat::from).collect();
            CocycleClass {
                rep: ld.w_inv.mul_vec(&yr),
            }
        })
        .collect()
}

impl LinkingData {
    /// Do two Spin^c representatives name the same class? Decided by the
    /// exact solve `b1 - b2 in 2 W(Z^V)`.
    pub fn spin_c_eq(&self, b1: &[Int], b2: &[Int]) -> bool {
        let d: Vec<Rat> = b1
            .iter()
            .zip(b2)
            .map(|(x, y)| Rat::from(x.clone() - y.clone()))
            .collect();
        let sol = self.w_inv.mul_vec(&d);
        sol.iter().all(|s| {
            let half = s.clone() / Rat::from(2);
            *half.denom() == 1
        })
    }

    /// Conjugate Spin^c representative (the action by -1).
    pub fn spin_c_conjugate(&self, b: &[Int]) -> Vec<Int> {
        b.iter().map(|x| -x.clone()).collect()
    }

    /// Do two cocycle representatives name the same class (differ by Z^V)?
    pub fn cocycle_eq(&self, a1: &[Rat], a2: &[Rat]) -> bool {
        a1.iter()
            .zip(a2)
            .all(|(x, y)| *(x.clone() - y.clone()).denom() == 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::rat_int;

    #[test]
    fn single_vertex_linking() {
        let g = PlumbingGraph::single(-1);
        let ld = linking(&g).unwrap();
        assert_eq!(ld.det, rat_int(-1));
        assert!(ld.negative_definite);
        assert_eq!(spin_c_classes(&ld).len(), 1);
        assert_eq!(cocycle_classes(&ld).len(), 1);
    }

    #[test]
    fn e8_linking() {
        let ld = linking(&PlumbingGraph::e8()).unwrap();
        assert_eq!(ld.det, rat_int(1));
        assert!(ld.negative_definite);
        assert_eq!(ld.signature, -8);
        // homology sphere: one class each
        assert_eq!(spin_c_classes(&ld).len(), 1);
        assert_eq!(cocycle_classes(&ld).len(), 1);
        // W * W^{-1} = I exactly
        assert_eq!(ld.w.mul(&ld.w_inv), RatMat::identity(8));
    }

    #[test]
    fn w_minus_three_has_three_cocycles() {
        let ld = linking(&PlumbingGraph::single(-3)).unwrap();
        let cs = cocycle_classes(&ld);
        assert_eq!(cs.len(), 3);
        // pairwise distinct classes
        for i in 0..cs.len() {
            for j in 0..i {
                assert!(!ld.cocycle_eq(&cs[i].rep, &cs[j].rep));
            }
        }
    }

    #[test]
    fn h_graph_linking_and_reduced() {
        let g = PlumbingGraph::h_graph([-2, -3, -3, -5, -2, -7]);
        let ld = linking(&g).unwrap();
        assert!(ld.negative_definite);
        let rm = reduced_matrix(&ld).unwrap();
        assert_eq!(rm.vee_ids.len(), 2);
        assert_eq!(rm.w_vee[(0, 1)], rat_int(1)); // adjacent centers
        // H-graph closed form: w_1_vee = w_1 - 1/w_3 - 1/w_4.
        let want = Rat::from(-2) - Rat::from((1i64, -3i64)) - Rat::from((1i64, -5i64));
        assert_eq!(rm.w_vee[(0, 0)], want);
    }

    #[test]
    fn chain_determinants() {
        // Single (-2): p = -2, q_far = 1.
        let g = PlumbingGraph::star(-2, &[vec![-2], vec![-2], vec![-2, -2]]);
        let cs = chains(&g).unwrap();
        let single = cs.iter().find(|c| c.len == 1).unwrap();
        assert_eq!(single.p, rat_int(-2));
        assert_eq!(single.q_far, rat_int(1));
        // (-2, -2): p = det [[-2,1],[1,-2]] = 3, q_far = -2.
        let double = cs.iter().find(|c| c.len == 2).unwrap();
        assert_eq!(double.p, rat_int(3));
        assert_eq!(double.q_far, rat_int(-2));
    }

    #[test]
    fn continued_fraction_identity() {
        // q_far/p = 1/(w_{i_1} - 1/(... - 1/w_{i_s})) exactly.
        let weights = vec![-3i64, -2, -4, -2];
        let g = PlumbingGraph::star(-2, &[weights.clone(), vec![-2], vec![-3]]);
        let cs = chains(&g).unwrap();
        let c = cs.iter().find(|c| c.len == 4).unwrap();
        let mut cf = Rat::new(); // build from the tail: 1/(w - prev)
        for &w in weights.iter().rev() {
            cf = (Rat::from(w) - cf).recip();
        }
        assert_eq!(c.q_far.clone() / &c.p, cf);
    }

    #[test]
    fn seifert_reduced_matrix_closed_form() {
        // Star with one center: W_vee is 1x1 and equals det W * prod(1/p).
        let g = PlumbingGraph::star(-2, &[vec![-2], vec![-2, -2], vec![-3]]);
        let ld = linking(&g).unwrap();
        let rm = reduced_matrix(&ld).unwrap();
        let mut want = ld.det.clone();
        for c in &rm.chains {
            want /= &c.p;
        }
        assert_eq!(rm.w_vee[(0, 0)], want);
    }

    #[test]
    fn neumann_moves_small_patterns() {
        // interior blowdown: (w)-(+1)-(w') -> (w-1)-(w'-1)
        let g = PlumbingGraph::new(&[(0, -3), (1, 1), (2, -4)], &[(0, 1), (1, 2)]).unwrap();
        let g2 = neumann_move(&g, &NeumannMove::BlowdownInterior { mid: 1 }).unwrap();
        assert_eq!(g2.weight(0), -4);
        assert_eq!(g2.weight(2), -5);
        assert_eq!(g2.edges.len(), 1);

        // leaf blowdown: (w+eps)-(eps) -> (w)
        let g = PlumbingGraph::new(&[(0, -3), (1, -1)], &[(0, 1)]).unwrap();
        let g2 = neumann_move(&g, &NeumannMove::BlowdownLeaf { leaf: 1 }).unwrap();
        assert_eq!(g2.weight(0), -2);

        // zero chain: (w)-(0)-(w') -> (w + w')
        let g = PlumbingGraph::new(&[(0, -3), (1, 0), (2, -4)], &[(0, 1), (1, 2)]).unwrap();
        let g2 = neumann_move(&g, &NeumannMove::ZeroChain { mid: 1 }).unwrap();
        assert_eq!(g2.vertices.len(), 1);
        assert_eq!(g2.weight(0), -7);
    }

    #[test]
    fn loader_rejects_non_trees() {
        let bad = r#"{"vertices":[{"id":0,"weight":-2},{"id":1,"weight":-2},{"id":2,"weight":-2}],
                      "edges":[[0,1],[1,2],[2,0]]}"#;
        let err = PlumbingGraph::load_json(bad).unwrap_err();
        assert!(matches!(err, PlumbingError::NotATree(_)));
        let disconnected = r#"{"vertices":[{"id":0,"weight":-2},{"id":1,"weight":-2},
                                           {"id":2,"weight":-2},{"id":3,"weight":-2}],
                      "edges":[[0,1],[0,1],[2,3]]}"#;
        let err2 = PlumbingGraph::load_json(disconnected).unwrap_err();
        assert!(matches!(err2, PlumbingError::NotATree(_)));
    }

    #[test]
    fn vee_empty_is_vacuously_minimal() {
        let g = PlumbingGraph::new(&[(0, -2), (1, -2)], &[(0, 1)]).unwrap();
        assert!(minimality_check(&g).unwrap());
    }

    #[test]
    fn minimality_flags_unit_chain() {
        // A chain containing weight -1 where p = +/-1 is not minimal.
        let g = PlumbingGraph::star(-3, &[vec![-1], vec![-2], vec![-2]]);
        assert!(!minimality_check(&g).unwrap());
        let g2 = PlumbingGraph::star(-2, &[vec![-2], vec![-3], vec![-7]]);
        assert!(minimality_check(&g2).unwrap());
    }
}
