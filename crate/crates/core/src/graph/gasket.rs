//! Pre-fractal Sierpiński gasket graphs.
//!
//! Vertices carry axial coordinates `(a, b)` in the basis `e1 = (1, 0)`,
//! `e2 = (1/2, √3/2)`. Level `L` has side `2^L` with corners `(0, 0)`,
//! `(2^L, 0)` and `(0, 2^L)`; it is the union of three copies of level `L - 1`
//! glued at their shared corners.

use std::collections::HashMap;

/// Vertex coordinates and undirected edges of the level-`level` gasket, with
/// vertex ids assigned in construction order. Corner `(0, 0)` always gets id
/// 0; use [`corners`] for the other two.
pub fn build(level: u32) -> (Vec<[i64; 2]>, Vec<(usize, usize)>) {
    let mut coords: Vec<[i64; 2]> = vec![[0, 0], [1, 0], [0, 1]];
    let mut edges: Vec<(usize, usize)> = vec![(0, 1), (1, 2), (0, 2)];
    for l in 1..=level {
        let half = 1i64 << (l - 1);
        let mut index: HashMap<[i64; 2], usize> = HashMap::new();
        let mut next_coords = Vec::with_capacity(coords.len() * 3);
        let mut next_edges = Vec::with_capacity(edges.len() * 3);
        for shift in [[0, 0], [half, 0], [0, half]] {
            let ids: Vec<usize> = coords
                .iter()
                .map(|c| {
                    let p = [c[0] + shift[0], c[1] + shift[1]];
                    *index.entry(p).or_insert_with(|| {
                        next_coords.push(p);
                        next_coords.len() - 1
                    })
                })
                .collect();
            next_edges.extend(edges.iter().map(|&(u, v)| (ids[u], ids[v])));
        }
        coords = next_coords;
        edges = next_edges;
    }
    (coords, edges)
}

/// Ids of the three extreme corners, corner 0 first.
pub fn corners(coords: &[[i64; 2]], level: u32) -> [usize; 3] {
    let side = 1i64 << level;
    let find = |p: [i64; 2]| coords.iter().position(|&c| c == p).expect("corner present");
    [find([0, 0]), find([side, 0]), find([0, side])]
}

/// `3 (3^L + 1) / 2`
pub fn vertex_count(level: u32) -> usize {
    (3 * (3usize.pow(level) + 1)) / 2
}
