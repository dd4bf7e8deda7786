//! Pairwise boundary construction: the time-adjacency graph over
//! intersection points, degree-limited Kruskal, and path selection.

use std::cmp::Ordering;

use crate::error::{Error, Result};

use super::{IntersectionVertex, PairBoundary};

/// Undirected graph over a slice of intersection vertices.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PairGraph {
    /// Edges as `(i, j)` with `i < j`, indices into the vertex slice.
    pub edges: Vec<(usize, usize)>,
}

/// Connects vertices on adjacent horizons, plus every pair on the lowest
/// horizon present.
pub fn build_pair_graph(vertices: &[IntersectionVertex]) -> PairGraph {
    let Some(min_step) = vertices.iter().map(|v| v.step).min() else {
        return PairGraph::default();
    };
    let mut edges = Vec::new();
    for i in 0..vertices.len() {
        for j in (i + 1)..vertices.len() {
            let (si, sj) = (vertices[i].step, vertices[j].step);
            if si.abs_diff(sj) == 1 || (si == min_step && sj == min_step) {
                edges.push((i, j));
            }
        }
    }
    PairGraph { edges }
}

struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

fn edge_order(vertices: &[IntersectionVertex], e: (usize, usize)) -> (f64, usize, usize) {
    let (a, b) = e;
    let len = vertices[a].point.dist(vertices[b].point);
    // lexicographic endpoint order for ties
    let (lo, hi) = if vertices[a].point.lex_cmp(&vertices[b].point) == Ordering::Greater {
        (b, a)
    } else {
        (a, b)
    };
    (len, lo, hi)
}

fn cmp_edges(vertices: &[IntersectionVertex], x: (usize, usize), y: (usize, usize)) -> Ordering {
    let (lx, ax, bx) = edge_order(vertices, x);
    let (ly, ay, by) = edge_order(vertices, y);
    lx.total_cmp(&ly)
        .then_with(|| vertices[ax].point.lex_cmp(&vertices[ay].point))
        .then_with(|| vertices[bx].point.lex_cmp(&vertices[by].point))
        .then_with(|| x.cmp(&y))
}

/// Kruskal's algorithm restricted to edges whose endpoints both have degree
/// below two, so every component of the output is a simple path. Each
/// returned path lists vertex indices from one end to the other; isolated
/// vertices come back as single-vertex paths.
pub fn spanning_paths(graph: &PairGraph, vertices: &[IntersectionVertex]) -> Vec<Vec<usize>> {
    let n = vertices.len();
    let mut order = graph.edges.clone();
    order.sort_by(|&x, &y| cmp_edges(vertices, x, y));
    let mut dsu = DisjointSet::new(n);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in order {
        if adj[a].len() < 2 && adj[b].len() < 2 && dsu.union(a, b) {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    let mut seen = vec![false; n];
    let mut paths = Vec::new();
    for start in 0..n {
        if seen[start] || adj[start].len() > 1 {
            continue;
        }
        let mut path = vec![start];
        seen[start] = true;
        let mut prev = usize::MAX;
        let mut cur = start;
        while let Some(&next) = adj[cur].iter().find(|&&x| x != prev) {
            seen[next] = true;
            path.push(next);
            prev = cur;
            cur = next;
        }
        paths.push(path);
    }
    paths.sort_by_key(|p| *p.iter().min().expect("non-empty path"));
    paths
}

fn path_length(path: &[usize], vertices: &[IntersectionVertex]) -> f64 {
    path.windows(2)
        .map(|w| vertices[w[0]].point.dist(vertices[w[1]].point))
        .sum()
}

fn has_min_level_edge(path: &[usize], vertices: &[IntersectionVertex], min_step: usize) -> bool {
    path.windows(2)
        .any(|w| vertices[w[0]].step == min_step && vertices[w[1]].step == min_step)
}

fn longest<'a>(candidates: &[&'a Vec<usize>], vertices: &[IntersectionVertex]) -> &'a Vec<usize> {
    candidates
        .iter()
        .copied()
        .max_by(|a, b| {
            path_length(a, vertices)
                .total_cmp(&path_length(b, vertices))
                .then_with(|| {
                    // earlier lexicographic start wins ties
                    vertices[b[0]].point.lex_cmp(&vertices[a[0]].point)
                })
        })
        .expect("non-empty candidate list")
}

/// Picks the boundary path: the only one, else the one holding an edge on
/// the lowest horizon. With zero or several such paths the longest
/// (qualifying, if any) wins.
pub fn select_boundary(paths: &[Vec<usize>], vertices: &[IntersectionVertex]) -> Result<PairBoundary> {
    if paths.is_empty() {
        return Err(Error::NoPath);
    }
    let chosen = if paths.len() == 1 {
        &paths[0]
    } else {
        let min_step = vertices.iter().map(|v| v.step).min().ok_or(Error::NoPath)?;
        let qualifying: Vec<&Vec<usize>> = paths
            .iter()
            .filter(|p| has_min_level_edge(p, vertices, min_step))
            .collect();
        match qualifying.len() {
            1 => qualifying[0],
            0 => longest(&paths.iter().collect::<Vec<_>>(), vertices),
            _ => longest(&qualifying, vertices),
        }
    };
    let path: Vec<IntersectionVertex> = chosen.iter().map(|&i| vertices[i]).collect();
    Ok(PairBoundary {
        pair: path[0].pair,
        path,
    })
}
