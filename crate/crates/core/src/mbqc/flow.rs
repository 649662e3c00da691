//! X-only stabilizers of graph states over GF(2).
//!
//! A vertex set S whose indicator lies in the kernel of the adjacency
//! matrix gives prod_{i in S} K_i = (-1)^{|E(S)|} prod_{i in S} X_i, so the
//! x outcomes over S have fixed parity |E(S)| mod 2. Each such relation ties
//! an output to a set of inputs plus body atoms that act as byproducts.

use crate::error::{Error, Result};
use crate::geometry::GraphSpec;

/// Row `i` has bit `j` set when vertices `i` and `j` share an edge.
pub fn adjacency_rows(graph: &GraphSpec) -> Vec<u64> {
    let mut rows = vec![0u64; graph.n_vertices()];
    for e in graph.edges() {
        rows[e.a] |= 1 << e.b;
        rows[e.b] |= 1 << e.a;
    }
    rows
}

/// Basis of { v : A v = 0 } for an `n`-column matrix given by bit rows.
pub fn kernel_basis(rows: &[u64], n: usize) -> Vec<u64> {
    let mut m: Vec<u64> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m.len()).find(|&i| m[i] >> c & 1 == 1) else { continue };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && m[i] >> c & 1 == 1 {
                m[i] ^= m[r];
            }
        }
        pivots.push(c);
        r += 1;
    }
    let mut basis = Vec::new();
    for f in (0..n).filter(|c| !pivots.contains(c)) {
        let mut v = 1u64 << f;
        for (row, &pc) in pivots.iter().enumerate() {
            if m[row] >> f & 1 == 1 {
                v |= 1 << pc;
            }
        }
        basis.push(v);
    }
    basis
}

/// Solves sum_j x_j cols[j] = rhs over GF(2), where each column is a bit
/// vector of `len` entries. Returns the coefficient mask.
fn solve(cols: &[u64], rhs: u64, len: usize) -> Option<u64> {
    let k = cols.len();
    // Augmented rows: bits 0..k are coefficients, bit k is the rhs.
    let mut rows: Vec<u64> = (0..len)
        .map(|i| {
            let mut r = 0u64;
            for (j, &c) in cols.iter().enumerate() {
                r |= (c >> i & 1) << j;
            }
            r | (rhs >> i & 1) << k
        })
        .collect();
    let mut piv = Vec::new();
    let mut r = 0;
    for c in 0..k {
        let Some(p) = (r..len).find(|&i| rows[i] >> c & 1 == 1) else { continue };
        rows.swap(r, p);
        for i in 0..len {
            if i != r && rows[i] >> c & 1 == 1 {
                rows[i] ^= rows[r];
            }
        }
        piv.push(c);
        r += 1;
    }
    if rows[r..].iter().any(|&row| row >> k & 1 == 1) {
        return None;
    }
    let mut x = 0u64;
    for (row, &c) in piv.iter().enumerate() {
        if rows[row] >> k & 1 == 1 {
            x |= 1 << c;
        }
    }
    Some(x)
}

pub fn internal_edges(graph: &GraphSpec, support: u64) -> usize {
    graph
        .edges()
        .iter()
        .filter(|e| support >> e.a & 1 == 1 && support >> e.b & 1 == 1)
        .count()
}

/// Deterministic parity tying one output to a set of inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub output: usize,
    /// Inputs whose outcomes determine the corrected output.
    pub inputs: Vec<usize>,
    /// Body atoms whose outcomes are folded in as byproducts.
    pub byproducts: Vec<usize>,
    /// Constant flip from an odd number of edges inside the support.
    pub flip: bool,
}

impl Relation {
    pub fn support(&self) -> u64 {
        self.inputs
            .iter()
            .chain(&self.byproducts)
            .chain(std::iter::once(&self.output))
            .fold(0u64, |m, &i| m | 1 << i)
    }
}

fn indices(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

/// For every output, an X-only stabilizer containing it and no other output.
pub fn derive_relations(graph: &GraphSpec, inputs: &[usize], outputs: &[usize]) -> Result<Vec<Relation>> {
    let n = graph.n_vertices();
    if n > 64 {
        return Err(Error::Capacity { requested: n, cap: 64 });
    }
    let basis = kernel_basis(&adjacency_rows(graph), n);
    let out_mask = outputs.iter().fold(0u64, |m, &o| m | 1 << o);
    let in_mask = inputs.iter().fold(0u64, |m, &i| m | 1 << i);
    // Restrict each kernel vector to the outputs, packed in output order.
    let packed: Vec<u64> = basis
        .iter()
        .map(|&v| outputs.iter().enumerate().fold(0u64, |m, (k, &o)| m | (v >> o & 1) << k))
        .collect();
    let mut rels = Vec::with_capacity(outputs.len());
    for (k, &o) in outputs.iter().enumerate() {
        let x = solve(&packed, 1 << k, outputs.len()).ok_or_else(|| {
            Error::Layout(format!("no x-only stabilizer isolates output atom {o}"))
        })?;
        let v = indices(x).iter().fold(0u64, |m, &j| m ^ basis[j]);
        debug_assert_eq!(v & out_mask, 1 << o);
        rels.push(Relation {
            output: o,
            inputs: indices(v & in_mask),
            byproducts: indices(v & !in_mask & !out_mask),
            flip: internal_edges(graph, v) % 2 == 1,
        });
    }
    Ok(rels)
}
