//! Graphs, graph-state vectors and the Pauli-to-Z rewrite rules.
//!
//! Vertex `i` occupies bit `i` of every basis-state integer, bit 0 being the
//! least significant. The graph state of `G` is
//!
//! ```text
//! |G_0⟩ = ∏_{ {i,j} ∈ E } CZ_ij |+⟩^⊗n
//! ```
//!
//! and the graph basis is `|G_ν⟩ = Z^ν |G_0⟩` for the `2^n` bit strings `ν`.
//! Applied to any graph-basis state, `X_i` acts like `Z` on the neighbourhood
//! of `i` and `Y_i` like `Z_i` times that, up to a global phase.

use std::fmt;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{check_limit, Error, Result};

/// Largest vertex count representable by the `u64` neighbour masks.
pub const MAX_VERTICES: usize = 64;

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Simple undirected graph with bit-mask adjacency.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    n: usize,
    adjacency: Vec<u64>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph from an edge list; duplicate edges collapse.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph needs at least one vertex".into()));
        }
        if n > MAX_VERTICES {
            return Err(Error::LimitExceeded {
                what: "graph order",
                requested: n,
                limit: MAX_VERTICES,
            });
        }
        let mut adjacency = vec![0u64; n];
        for (a, b) in edges {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop on vertex {a}")));
            }
            adjacency[a] |= 1 << b;
            adjacency[b] |= 1 << a;
        }
        let mut edges = Vec::new();
        for (i, &mask) in adjacency.iter().enumerate() {
            for j in bits_of(mask) {
                if i < j {
                    edges.push((i, j));
                }
            }
        }
        Ok(Self {
            n,
            adjacency,
            edges,
        })
    }

    /// Graph with `n` vertices and no edges.
    pub fn empty(n: usize) -> Result<Self> {
        Self::new(n, [])
    }

    /// Linear cluster `0 - 1 - ... - (n-1)`.
    pub fn chain(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    /// Cycle on `n >= 3` vertices.
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGraph(format!("ring needs at least 3 vertices, got {n}")));
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    /// Star with centre 0 and leaves `1..n`.
    pub fn star(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (0, i)))
    }

    /// Parses the edge-list text format: one `i j` pair per line, `#` comments.
    ///
    /// The vertex count is one more than the largest index mentioned.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_vertex = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::InvalidGraph(format!(
                    "line {}: expected `i j`, got {raw:?}",
                    lineno + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| {
                    Error::InvalidGraph(format!("line {}: bad vertex index {s:?}", lineno + 1))
                })
            };
            let (a, b) = (parse(fields[0])?, parse(fields[1])?);
            max_vertex = Some(max_vertex.unwrap_or(0).max(a).max(b));
            edges.push((a, b));
        }
        let n = max_vertex
            .map(|m| m + 1)
            .ok_or_else(|| Error::InvalidGraph("edge list is empty".into()))?;
        Self::new(n, edges)
    }

    /// Resolves a preset (`chain:N`, `ring:N`, `star:N`) or reads an edge-list file.
    pub fn from_spec(spec: &str) -> Result<Self> {
        if let Some((kind, arg)) = spec.split_once(':') {
            let build: Option<fn(usize) -> Result<Graph>> = match kind {
                "chain" => Some(Graph::chain),
                "ring" => Some(Graph::ring),
                "star" => Some(Graph::star),
                _ => None,
            };
            if let Some(build) = build {
                let n = arg
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidGraph(format!("bad vertex count in {spec:?}")))?;
                return build(n);
            }
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("cannot read graph file {spec:?}: {e}")))?;
        Self::from_edge_list(&text)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// Neighbour mask `N_i`.
    pub fn neighbors(&self, i: usize) -> u64 {
        self.adjacency[i]
    }

    pub fn adjacency(&self) -> &[u64] {
        &self.adjacency
    }

    /// Canonical edge list, `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n && self.adjacency[i] >> j & 1 == 1
    }

    /// Mask with one bit per vertex.
    pub fn full_mask(&self) -> u64 {
        low_mask(self.n)
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = 1u64;
        let mut frontier = 1u64;
        while frontier != 0 {
            let mut next = 0;
            for v in bits_of(frontier) {
                next |= self.adjacency[v];
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen == self.full_mask()
    }

    /// Parity of the number of edges inside the vertex set `x`, the CZ sign of `|x⟩`.
    pub fn cz_parity(&self, x: u64) -> u32 {
        let mut parity = 0;
        for i in bits_of(x) {
            parity ^= (self.adjacency[i] & x & !low_mask(i + 1)).count_ones() & 1;
        }
        parity
    }
}

impl fmt::Display for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, edges=[", self.n)?;
        for (k, (i, j)) in self.edges.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{i}-{j}")?;
        }
        write!(f, "])")
    }
}

/// Mask of the lowest `width` bits.
pub fn low_mask(width: usize) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Iterates over the indices of the set bits of `mask`, ascending.
pub fn bits_of(mut mask: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

/// Fixed-width bit string; bit `i` belongs to vertex `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: u64,
    width: usize,
}

impl BitString {
    pub fn new(bits: u64, width: usize) -> Result<Self> {
        if width > 64 || bits & !low_mask(width) != 0 {
            return Err(Error::WidthMismatch {
                expected: width,
                got: 64 - bits.leading_zeros() as usize,
            });
        }
        Ok(Self { bits, width })
    }

    pub fn zeros(width: usize) -> Self {
        Self { bits: 0, width }
    }

    /// Parses a string written vertex 0 first, e.g. `"10"` sets bit 0 only.
    pub fn from_str_lsb_first(s: &str) -> Result<Self> {
        let mut bits = 0u64;
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << i,
                _ => return Err(Error::InvalidGraph(format!("bad bit {c:?} in {s:?}"))),
            }
        }
        Self::new(bits, s.len())
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, i: usize) -> bool {
        self.bits >> i & 1 == 1
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.width {
            write!(f, "{}", if self.get(i) { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// Single-qubit Pauli label; the discriminant is the base-4 index `μ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I = 0,
    X = 1,
    Y = 2,
    Z = 3,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Chord labels `(u, v)` with `σ = Z^v X^u` up to phase.
    pub fn chord_labels(self) -> (u8, u8) {
        match self {
            Pauli::I => (0, 0),
            Pauli::X => (1, 0),
            Pauli::Y => (1, 1),
            Pauli::Z => (0, 1),
        }
    }

    /// Inverse of [`Pauli::chord_labels`]: index `2v + |v + u|_2`.
    pub fn from_chord(u: u8, v: u8) -> Self {
        let (u, v) = (u & 1, v & 1);
        Self::ALL[(2 * v + (v ^ u)) as usize]
    }

    /// The 2x2 matrix of the operator.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// Chord labels of the single-qubit Pauli with base-4 index `index`.
pub fn chord_labels(index: usize) -> Result<(u8, u8)> {
    Pauli::from_index(index)
        .map(Pauli::chord_labels)
        .ok_or_else(|| Error::InvalidChannel(format!("Pauli index {index} outside 0..=3")))
}

/// Tensor product of single-qubit Paulis, entry `i` acting on vertex `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString(pub Vec<Pauli>);

impl PauliString {
    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    /// Parses e.g. `"XIZY"`, vertex 0 first.
    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(Error::InvalidChannel(format!("bad Pauli label {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Decodes a base-4 multi-index, digit `i` for vertex `i`.
    pub fn from_base4(mut index: u64, n: usize) -> Self {
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            labels.push(Pauli::ALL[(index & 3) as usize]);
            index >>= 2;
        }
        Self(labels)
    }

    /// Chord masks `(U, V)`.
    pub fn chord_masks(&self) -> (u64, u64) {
        let (mut u, mut v) = (0u64, 0u64);
        for (i, p) in self.0.iter().enumerate() {
            let (ui, vi) = p.chord_labels();
            u |= (ui as u64) << i;
            v |= (vi as u64) << i;
        }
        (u, v)
    }
}

/// Image of a Pauli string under the graph rewrite rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZImage {
    /// Support of the equivalent `Z^μ̃`.
    pub mask: BitString,
    /// `k` such that `σ_μ |G_0⟩ = i^k Z^μ̃ |G_0⟩`.
    pub phase: u8,
}

/// Rewrites `σ_μ` into the `Z^μ̃` it is equivalent to on graph-basis states.
///
/// `μ̃_i = |v_i + Σ_{j ∈ N_i} u_j|_2` with `(u_i, v_i)` the chord labels of
/// `μ_i`. The phase is exact for `|G_0⟩`; on `|G_ν⟩` it picks up an extra
/// `(-1)^{ν·U}`.
pub fn pauli_to_z_image(graph: &Graph, mu: &PauliString) -> Result<ZImage> {
    if mu.len() != graph.order() {
        return Err(Error::WidthMismatch {
            expected: graph.order(),
            got: mu.len(),
        });
    }
    let (u, v) = mu.chord_masks();
    let mut image = v;
    for j in bits_of(u) {
        image ^= graph.neighbors(j);
    }
    // Y = -i Z X, and X^U |G_0⟩ carries the CZ sign of U.
    let phase = (3 * (u & v).count_ones() + 2 * graph.cz_parity(u)) % 4;
    Ok(ZImage {
        mask: BitString::new(image, graph.order())?,
        phase: phase as u8,
    })
}

/// Dense `2^n` amplitude vector.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(n: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n {
            return Err(Error::Dimension(format!(
                "{} amplitudes for {n} qubits",
                amplitudes.len()
            )));
        }
        Ok(Self { n, amplitudes })
    }

    /// `|+⟩^⊗n`.
    pub fn plus(n: usize) -> Self {
        let a = Complex64::new(0.5f64.powf(n as f64 / 2.0), 0.0);
        Self {
            n,
            amplitudes: vec![a; 1 << n],
        }
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn apply_cz(&mut self, i: usize, j: usize) {
        let m = (1u64 << i) | (1u64 << j);
        for (x, a) in self.amplitudes.iter_mut().enumerate() {
            if x as u64 & m == m {
                *a = -*a;
            }
        }
    }

    pub fn apply_z_mask(&mut self, mask: u64) {
        for (x, a) in self.amplitudes.iter_mut().enumerate() {
            if (x as u64 & mask).count_ones() & 1 == 1 {
                *a = -*a;
            }
        }
    }

    /// Applies a 2x2 matrix to qubit `q`.
    pub fn apply_single(&mut self, q: usize, m: &[[Complex64; 2]; 2]) {
        let bit = 1usize << q;
        for x in 0..self.amplitudes.len() {
            if x & bit == 0 {
                let (a0, a1) = (self.amplitudes[x], self.amplitudes[x | bit]);
                self.amplitudes[x] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[x | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    pub fn apply_pauli(&mut self, mu: &PauliString) {
        for (q, p) in mu.0.iter().enumerate() {
            if *p != Pauli::I {
                self.apply_single(q, &p.matrix());
            }
        }
    }

    /// Projector `|ψ⟩⟨ψ|` as a dense matrix.
    pub fn projector(&self) -> DMatrix<Complex64> {
        let d = self.amplitudes.len();
        DMatrix::from_fn(d, d, |r, c| self.amplitudes[r] * self.amplitudes[c].conj())
    }
}

/// Builds `|G_0⟩` with the default 20-qubit dense limit.
pub fn build_graph_state(graph: &Graph) -> Result<StateVector> {
    build_graph_state_limited(graph, crate::Limits::default().dense_state)
}

/// Builds `|G_0⟩`, refusing graphs larger than `limit`.
pub fn build_graph_state_limited(graph: &Graph, limit: usize) -> Result<StateVector> {
    graph_basis_vector(graph, 0, limit)
}

/// Builds the graph-basis state `Z^ν |G_0⟩`.
pub fn graph_basis_state(graph: &Graph, nu: BitString) -> Result<StateVector> {
    if nu.width() != graph.order() {
        return Err(Error::WidthMismatch {
            expected: graph.order(),
            got: nu.width(),
        });
    }
    graph_basis_vector(graph, nu.bits(), crate::Limits::default().dense_state)
}

fn graph_basis_vector(graph: &Graph, nu: u64, limit: usize) -> Result<StateVector> {
    let n = graph.order();
    check_limit("dense graph state", n, limit)?;
    let scale = SQRT_HALF.powi(n as i32);
    let amplitudes = (0..1u64 << n)
        .map(|x| {
            let sign = graph.cz_parity(x) ^ ((x & nu).count_ones() & 1);
            Complex64::new(if sign == 1 { -scale } else { scale }, 0.0)
        })
        .collect();
    Ok(StateVector { n, amplitudes })
}

/// Dense stabilizer generator `S_i = X_i ⊗ Z_{N_i}`.
pub fn stabilizer_matrix(graph: &Graph, i: usize) -> Result<DMatrix<Complex64>> {
    let n = graph.order();
    if i >= n {
        return Err(Error::VertexOutOfRange { vertex: i, n });
    }
    check_limit("dense stabilizer matrix", n, crate::Limits::default().eigensolver)?;
    let d = 1usize << n;
    let flip = 1u64 << i;
    let zmask = graph.neighbors(i);
    let mut m = DMatrix::zeros(d, d);
    for x in 0..d as u64 {
        let sign = if (x & zmask).count_ones() & 1 == 1 { -1.0 } else { 1.0 };
        m[((x ^ flip) as usize, x as usize)] = Complex64::new(sign, 0.0);
    }
    Ok(m)
}

/// Dense matrix of a Pauli string.
pub fn pauli_matrix(mu: &PauliString) -> DMatrix<Complex64> {
    let n = mu.len();
    let d = 1usize << n;
    let mut m = DMatrix::zeros(d, d);
    for x in 0..d {
        let mut basis = vec![Complex64::new(0.0, 0.0); d];
        basis[x] = Complex64::new(1.0, 0.0);
        let mut s = StateVector { n, amplitudes: basis };
        s.apply_pauli(mu);
        for (r, a) in s.amplitudes.iter().enumerate() {
            m[(r, x)] = *a;
        }
    }
    m
}
