//! Maximal clique enumeration (Bron–Kerbosch with pivoting).
//!
//! Used for three different graphs that all stay small at workbench scale:
//! context graphs of measurement scenarios, commeasurability graphs of
//! algebras, and event-exclusivity graphs of empirical models.

use crate::bitset::{BitMatrix, BitRow};

/// All maximal cliques of the undirected graph given by a symmetric adjacency
/// matrix. Loops are ignored. Cliques come out sorted internally and sorted
/// among themselves, so the enumeration order is deterministic.
///
/// An isolated vertex forms the maximal clique `{v}`.
pub fn maximal_cliques(adj: &BitMatrix) -> Vec<Vec<usize>> {
    let n = adj.size();
    // Strip self-loops so reflexive relations (commeasurability) can be
    // passed in directly.
    let nb: Vec<BitRow> = (0..n)
        .map(|i| {
            let mut row = adj.row(i).clone();
            row.set(i, false);
            row
        })
        .collect();
    let mut found = Vec::new();
    let mut r: Vec<usize> = Vec::new();
    let mut p = BitRow::new(n);
    let x = BitRow::new(n);
    for i in 0..n {
        p.set(i, true);
    }
    expand(&nb, &mut r, p, x, &mut found);
    for c in &mut found {
        c.sort_unstable();
    }
    found.sort();
    found
}

fn expand(
    nb: &[BitRow],
    r: &mut Vec<usize>,
    p: BitRow,
    mut x: BitRow,
    found: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() && x.is_empty() {
        found.push(r.clone());
        return;
    }
    // Pivot on the vertex of P ∪ X with the most neighbours in P; only
    // non-neighbours of the pivot need to be branched on.
    let pivot = p
        .iter_ones()
        .chain(x.iter_ones())
        .max_by_key(|&u| {
            let mut row = nb[u].clone();
            row.intersect_with(&p);
            row.count_ones()
        })
        .expect("P or X nonempty");
    let mut candidates = p.clone();
    for u in nb[pivot].iter_ones() {
        candidates.set(u, false);
    }
    let mut p = p;
    for v in candidates.iter_ones().collect::<Vec<_>>() {
        r.push(v);
        let mut p_next = p.clone();
        p_next.intersect_with(&nb[v]);
        let mut x_next = x.clone();
        x_next.intersect_with(&nb[v]);
        expand(nb, r, p_next, x_next, found);
        r.pop();
        p.set(v, false);
        x.set(v, true);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(n: usize, edges: &[(usize, usize)]) -> BitMatrix {
        let mut m = BitMatrix::new(n);
        for &(a, b) in edges {
            m.set_sym(a, b, true);
        }
        m
    }

    #[test]
    fn triangle_plus_pendant() {
        let g = graph(4, &[(0, 1), (0, 2), (1, 2), (2, 3)]);
        assert_eq!(maximal_cliques(&g), vec![vec![0, 1, 2], vec![2, 3]]);
    }

    #[test]
    fn isolated_vertices_are_singleton_cliques() {
        let g = graph(3, &[(0, 1)]);
        assert_eq!(maximal_cliques(&g), vec![vec![0, 1], vec![2]]);
    }

    #[test]
    fn complete_graph_is_one_clique() {
        let g = graph(5, &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (1, 3), (1, 4), (2, 3), (2, 4), (3, 4)]);
        assert_eq!(maximal_cliques(&g), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn two_square_contexts() {
        // 4-cycle: maximal cliques are the edges.
        let g = graph(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]);
        assert_eq!(
            maximal_cliques(&g),
            vec![vec![0, 1], vec![0, 3], vec![1, 2], vec![2, 3]]
        );
    }
}
