//! Dependent rounding of fractional bipartite edge values.
//!
//! Each step finds a cycle or a maximal path among the strictly fractional edges, splits it
//! into alternating halves and moves mass between them in one of two directions, chosen so
//! every edge keeps its expectation. Interior nodes of the path keep their fractional degree
//! exactly, which gives degree preservation; node-local negative correlation follows from the
//! alternation.

use rand::Rng;

/// Values closer than this to 0 or 1 are treated as integral.
pub const SNAP_TOL: f64 = 1e-12;

fn snap(z: f64) -> f64 {
    if z <= SNAP_TOL {
        0.0
    } else if z >= 1.0 - SNAP_TOL {
        1.0
    } else {
        z
    }
}

fn is_fractional(z: f64) -> bool {
    z > 0.0 && z < 1.0
}

/// Edge values on a bipartite graph with `left` and `right` node sets.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalAssignment {
    left: usize,
    right: usize,
    edges: Vec<(usize, usize)>,
    values: Vec<f64>,
}

impl FractionalAssignment {
    /// Values are clamped to `[0, 1]` and snapped. Panics if an edge leaves the node ranges or
    /// the value count differs from the edge count.
    pub fn new(left: usize, right: usize, edges: Vec<(usize, usize)>, values: Vec<f64>) -> Self {
        assert_eq!(edges.len(), values.len(), "one value per edge");
        for &(u, v) in &edges {
            assert!(u < left && v < right, "edge ({u}, {v}) outside the node sets");
        }
        let values = values
            .into_iter()
            .map(|z| snap(if z.is_nan() { 0.0 } else { z.clamp(0.0, 1.0) }))
            .collect();
        Self {
            left,
            right,
            edges,
            values,
        }
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn num_left(&self) -> usize {
        self.left
    }

    pub fn num_right(&self) -> usize {
        self.right
    }

    /// Scales the edges of every node whose value sum exceeds its capacity down to it, so
    /// solver noise cannot let rounding overshoot a capacity.
    pub fn cap_node_sums(&mut self, left_caps: &[f64], right_caps: &[f64]) {
        let mut sums = vec![0.0; self.left + self.right];
        for (&(u, v), &z) in self.edges.iter().zip(&self.values) {
            sums[u] += z;
            sums[self.left + v] += z;
        }
        let caps = left_caps.iter().chain(right_caps);
        let factor: Vec<f64> = sums
            .iter()
            .zip(caps)
            .map(|(&s, &c)| if s > c { c / s } else { 1.0 })
            .collect();
        for (&(u, v), z) in self.edges.iter().zip(&mut self.values) {
            let f = factor[u].min(factor[self.left + v]);
            if f < 1.0 {
                *z = snap(*z * f);
            }
        }
    }
}

enum Walk {
    Cycle(Vec<usize>),
    Path(Vec<usize>),
}

struct Graph<'a> {
    left: usize,
    edges: &'a [(usize, usize)],
    /// Incident edge ids per node, ascending; left nodes first.
    adj: Vec<Vec<usize>>,
}

impl Graph<'_> {
    fn ends(&self, e: usize) -> (usize, usize) {
        let (u, v) = self.edges[e];
        (u, self.left + v)
    }

    fn other(&self, e: usize, node: usize) -> usize {
        let (a, b) = self.ends(e);
        if a == node {
            b
        } else {
            a
        }
    }

    /// Cycle or maximal path of fractional edges through `start`.
    fn walk(&self, start: usize, z: &[f64], pos: &mut [usize]) -> Walk {
        const NONE: usize = usize::MAX;
        let (a, b) = self.ends(start);
        let mut nodes = vec![a, b];
        let mut path = vec![start];
        pos[a] = 0;
        pos[b] = 1;
        let mut reversed = false;
        let result = loop {
            let cur = *nodes.last().unwrap();
            let prev = *path.last().unwrap();
            let next_edge = self.adj[cur]
                .iter()
                .copied()
                .find(|&e| e != prev && is_fractional(z[e]));
            match next_edge {
                Some(e) => {
                    let nxt = self.other(e, cur);
                    if pos[nxt] != NONE {
                        let mut cycle = path[pos[nxt]..].to_vec();
                        cycle.push(e);
                        break Walk::Cycle(cycle);
                    }
                    pos[nxt] = nodes.len();
                    nodes.push(nxt);
                    path.push(e);
                }
                None if !reversed => {
                    reversed = true;
                    nodes.reverse();
                    path.reverse();
                    for (k, &n) in nodes.iter().enumerate() {
                        pos[n] = k;
                    }
                }
                None => break Walk::Path(path),
            }
        };
        for &n in &nodes {
            pos[n] = NONE;
        }
        result
    }
}

/// One mass shift along `chain` (alternating halves at even/odd positions).
fn shift<R: Rng + ?Sized>(chain: &[usize], z: &mut [f64], rng: &mut R) {
    let mut alpha = f64::INFINITY;
    let mut beta = f64::INFINITY;
    for (k, &e) in chain.iter().enumerate() {
        if k % 2 == 0 {
            alpha = alpha.min(1.0 - z[e]);
            beta = beta.min(z[e]);
        } else {
            alpha = alpha.min(z[e]);
            beta = beta.min(1.0 - z[e]);
        }
    }
    let up = rng.random::<f64>() < beta / (alpha + beta);
    let delta = if up { alpha } else { -beta };
    for (k, &e) in chain.iter().enumerate() {
        let d = if k % 2 == 0 { delta } else { -delta };
        z[e] = snap(z[e] + d);
    }
}

/// Rounds every edge to 0/1 with `E[Z_e] = z_e`, node degrees in `{⌊Σ z⌋, ⌈Σ z⌉}` and
/// negative correlation among edges sharing a node.
pub fn dependent_round<R: Rng + ?Sized>(fa: &FractionalAssignment, rng: &mut R) -> Vec<bool> {
    let n = fa.left + fa.right;
    let mut adj = vec![Vec::new(); n];
    for (e, &(u, v)) in fa.edges.iter().enumerate() {
        adj[u].push(e);
        adj[fa.left + v].push(e);
    }
    let graph = Graph {
        left: fa.left,
        edges: &fa.edges,
        adj,
    };
    let mut z = fa.values.clone();
    let mut pos = vec![usize::MAX; n];
    let mut cursor = 0;
    loop {
        while cursor < z.len() && !is_fractional(z[cursor]) {
            cursor += 1;
        }
        if cursor == z.len() {
            break;
        }
        match graph.walk(cursor, &z, &mut pos) {
            Walk::Cycle(chain) | Walk::Path(chain) => shift(&chain, &mut z, rng),
        }
    }
    z.iter().map(|&v| v == 1.0).collect()
}

/// [`dependent_round`] specialised to a star whose hub touches every edge; consumes the
/// generator identically, so both give the same output for the same seed.
pub fn dependent_round_star<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> Vec<bool> {
    let mut z: Vec<f64> = values
        .iter()
        .map(|&v| snap(if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) }))
        .collect();
    let mut first = 0;
    loop {
        while first < z.len() && !is_fractional(z[first]) {
            first += 1;
        }
        if first == z.len() {
            break;
        }
        let second = (first + 1..z.len()).find(|&e| is_fractional(z[e]));
        match second {
            Some(s) => shift(&[first, s], &mut z, rng),
            None => shift(&[first], &mut z, rng),
        }
    }
    z.iter().map(|&v| v == 1.0).collect()
}

/// Clamps star values to `[0, 1]` and scales them down if their sum exceeds `cap`.
pub fn sanitize_star(values: &mut [f64], cap: f64) {
    for v in values.iter_mut() {
        *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    }
    let sum: f64 = values.iter().sum();
    if sum > cap {
        let f = cap / sum;
        for v in values.iter_mut() {
            *v *= f;
        }
    }
}
