#![allow(dead_code)]

use nonloc_core::graph::RegularGraph;

/// Cubic graph from LCF notation: a Hamiltonian cycle plus chords
/// `i -> i + pattern[i mod len]`.
pub fn lcf(n: usize, pattern: &[i64]) -> RegularGraph {
    let mut edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    for i in 0..n {
        let j = (i as i64 + pattern[i % pattern.len()]).rem_euclid(n as i64) as usize;
        if i < j {
            edges.push((i, j));
        }
    }
    RegularGraph::from_edges(n, &edges).expect("valid LCF pattern")
}

/// Girth 6, 14 vertices.
pub fn heawood() -> RegularGraph {
    lcf(14, &[5, -5])
}

/// Girth 8, 30 vertices.
pub fn tutte_8_cage() -> RegularGraph {
    lcf(30, &[-13, -9, 7, -7, 9, 13])
}

/// Girth 12, 126 vertices.
pub fn tutte_12_cage() -> RegularGraph {
    lcf(
        126,
        &[17, 27, -13, -59, -35, 35, -11, 13, -53, 53, -27, 21, 57, 11, -21, -57, 59, -17],
    )
}

/// The 3-cube.
pub fn cube() -> RegularGraph {
    let edges: Vec<(usize, usize)> = (0..8usize)
        .flat_map(|v| (0..3).map(move |b| (v, v ^ (1 << b))))
        .filter(|(u, v)| u < v)
        .collect();
    RegularGraph::from_edges(8, &edges).unwrap()
}

/// Complete graph on `n` vertices.
pub fn complete(n: usize) -> RegularGraph {
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
    RegularGraph::from_edges(n, &edges).unwrap()
}
