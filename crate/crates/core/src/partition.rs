//! Multipartitions and the boundary decomposition.
//!
//! Edges whose endpoints carry different part labels are the crossing edges
//! `𝒳`; their endpoints form the boundary `𝒴`. Every other CZ gate acts
//! locally with respect to the partition and can be factored out, leaving the
//! boundary graph state `|G_(𝒴,𝒳)⟩` on `𝒴` and `|+⟩` on each remaining vertex.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{bits_of, build_graph_state_limited, Graph, StateVector};

/// Per-vertex part labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    labels: Vec<usize>,
    part_count: usize,
}

impl Partition {
    /// Validates that labels are `0..k` with every part non-empty.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidPartition("no vertices".into()));
        }
        let part_count = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; part_count];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!("part {missing} is empty")));
        }
        Ok(Self { labels, part_count })
    }

    /// Vertex `k` alone against everything else.
    pub fn one_vs_rest(n: usize, k: usize) -> Result<Self> {
        if k >= n {
            return Err(Error::VertexOutOfRange { vertex: k, n });
        }
        if n < 2 {
            return Err(Error::InvalidPartition("one-vs-rest needs two vertices".into()));
        }
        let labels = (0..n).map(|i| usize::from(i != k)).collect();
        Self::new(labels)
    }

    /// Parses `"0,1,1,1"` or `"one-vs-rest:k"` for a graph on `n` vertices.
    pub fn parse(spec: &str, n: usize) -> Result<Self> {
        if let Some(k) = spec.strip_prefix("one-vs-rest:") {
            let k = k
                .parse()
                .map_err(|_| Error::InvalidPartition(format!("bad vertex in {spec:?}")))?;
            return Self::one_vs_rest(n, k);
        }
        let labels = spec
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidPartition(format!("bad label {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if labels.len() != n {
            return Err(Error::InvalidPartition(format!(
                "{} labels for {n} vertices",
                labels.len()
            )));
        }
        Self::new(labels)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label(&self, vertex: usize) -> usize {
        self.labels[vertex]
    }

    pub fn part_count(&self) -> usize {
        self.part_count
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Vertex mask of one part.
    pub fn mask(&self, part: usize) -> u64 {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == part)
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    /// Errors unless the partition has exactly two parts.
    pub fn require_bipartition(&self) -> Result<()> {
        if self.part_count == 2 {
            Ok(())
        } else {
            Err(Error::NotBipartite(self.part_count))
        }
    }
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(labels: Vec<usize>) -> Result<Self> {
        Self::new(labels)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.labels
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.labels.iter().map(|l| l.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// Crossing edges, boundary vertices and the boundary subgraph of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryDecomposition {
    n: usize,
    crossing_edges: Vec<(usize, usize)>,
    non_crossing_edges: Vec<(usize, usize)>,
    boundary: u64,
    non_boundary: u64,
    boundary_vertices: Vec<usize>,
    non_boundary_vertices: Vec<usize>,
    boundary_subgraph: Option<Graph>,
    induced_partition: Option<Partition>,
}

/// Splits the graph along the partition.
pub fn decompose(graph: &Graph, partition: &Partition) -> Result<BoundaryDecomposition> {
    let n = graph.order();
    if partition.len() != n {
        return Err(Error::InvalidPartition(format!(
            "{} labels for {n} vertices",
            partition.len()
        )));
    }
    let (crossing_edges, non_crossing_edges): (Vec<_>, Vec<_>) = graph
        .edges()
        .iter()
        .copied()
        .partition(|&(i, j)| partition.label(i) != partition.label(j));
    let boundary = crossing_edges
        .iter()
        .fold(0u64, |m, &(i, j)| m | 1 << i | 1 << j);
    let non_boundary = graph.full_mask() & !boundary;
    let boundary_vertices: Vec<usize> = bits_of(boundary).collect();
    let non_boundary_vertices: Vec<usize> = bits_of(non_boundary).collect();

    let local = |v: usize| boundary_vertices.binary_search(&v).expect("boundary vertex");
    let (boundary_subgraph, induced_partition) = if boundary_vertices.is_empty() {
        (None, None)
    } else {
        let sub = Graph::new(
            boundary_vertices.len(),
            crossing_edges.iter().map(|&(i, j)| (local(i), local(j))),
        )?;
        // Keep part order, compress labels not present on the boundary.
        let mut present: Vec<usize> = boundary_vertices.iter().map(|&v| partition.label(v)).collect();
        present.sort_unstable();
        present.dedup();
        let labels = boundary_vertices
            .iter()
            .map(|&v| present.binary_search(&partition.label(v)).expect("label"))
            .collect();
        (Some(sub), Some(Partition::new(labels)?))
    };

    Ok(BoundaryDecomposition {
        n,
        crossing_edges,
        non_crossing_edges,
        boundary,
        non_boundary,
        boundary_vertices,
        non_boundary_vertices,
        boundary_subgraph,
        induced_partition,
    })
}

impl BoundaryDecomposition {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn crossing_edges(&self) -> &[(usize, usize)] {
        &self.crossing_edges
    }

    /// Edges whose CZ gates act locally and get factored out.
    pub fn non_crossing_edges(&self) -> &[(usize, usize)] {
        &self.non_crossing_edges
    }

    pub fn boundary_mask(&self) -> u64 {
        self.boundary
    }

    pub fn non_boundary_mask(&self) -> u64 {
        self.non_boundary
    }

    /// Original vertex of each boundary-local index, ascending.
    pub fn boundary_vertices(&self) -> &[usize] {
        &self.boundary_vertices
    }

    pub fn non_boundary_vertices(&self) -> &[usize] {
        &self.non_boundary_vertices
    }

    pub fn boundary_size(&self) -> usize {
        self.boundary_vertices.len()
    }

    pub fn non_boundary_size(&self) -> usize {
        self.non_boundary_vertices.len()
    }

    /// Boundary subgraph `G_(𝒴,𝒳)`; `None` when nothing crosses the cut.
    pub fn boundary_subgraph(&self) -> Option<&Graph> {
        self.boundary_subgraph.as_ref()
    }

    /// Partition labels restricted to the boundary, in boundary-local order.
    pub fn induced_partition(&self) -> Option<&Partition> {
        self.induced_partition.as_ref()
    }

    /// Boundary-local index of an original vertex.
    pub fn boundary_index(&self, vertex: usize) -> Option<usize> {
        self.boundary_vertices.binary_search(&vertex).ok()
    }

    pub fn non_boundary_index(&self, vertex: usize) -> Option<usize> {
        self.non_boundary_vertices.binary_search(&vertex).ok()
    }

    /// Gathers the boundary bits of a global mask into boundary-local positions.
    pub fn boundary_bits(&self, mask: u64) -> u64 {
        gather(mask, &self.boundary_vertices)
    }

    pub fn non_boundary_bits(&self, mask: u64) -> u64 {
        gather(mask, &self.non_boundary_vertices)
    }

    /// Scatters boundary-local bits back to global vertex positions.
    pub fn boundary_to_global(&self, local: u64) -> u64 {
        scatter(local, &self.boundary_vertices)
    }

    pub fn non_boundary_to_global(&self, local: u64) -> u64 {
        scatter(local, &self.non_boundary_vertices)
    }

    /// Tensor product of a boundary vector and a non-boundary vector, as a global vector.
    pub fn embed_product(&self, boundary: &[Complex64], non_boundary: &[Complex64]) -> StateVector {
        let mut out = vec![Complex64::new(0.0, 0.0); 1 << self.n];
        for (b, &bv) in boundary.iter().enumerate() {
            if bv == Complex64::new(0.0, 0.0) {
                continue;
            }
            let gb = self.boundary_to_global(b as u64);
            for (f, &fv) in non_boundary.iter().enumerate() {
                out[(gb | self.non_boundary_to_global(f as u64)) as usize] = bv * fv;
            }
        }
        StateVector::new(self.n, out).expect("dimension")
    }
}

/// Compresses the bits of `mask` at `positions` into the low bits.
pub(crate) fn gather(mask: u64, positions: &[usize]) -> u64 {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &v)| acc | (mask >> v & 1) << k)
}

pub(crate) fn scatter(local: u64, positions: &[usize]) -> u64 {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (k, &v)| acc | (local >> k & 1) << v)
}

/// `|G_0⟩` split into boundary graph state, `|+⟩` flags and the factored CZ gates.
#[derive(Debug, Clone, PartialEq)]
pub struct FactoredState {
    pub boundary: StateVector,
    pub non_boundary: StateVector,
    pub factored_gates: Vec<(usize, usize)>,
}

impl FactoredState {
    /// Reapplies the factored gates; reproduces the full graph state.
    pub fn reconstruct(&self, decomposition: &BoundaryDecomposition) -> StateVector {
        let mut full = decomposition.embed_product(
            self.boundary.amplitudes(),
            self.non_boundary.amplitudes(),
        );
        for &(i, j) in &self.factored_gates {
            full.apply_cz(i, j);
        }
        full
    }
}

pub fn factored_graph_state(
    graph: &Graph,
    decomposition: &BoundaryDecomposition,
) -> Result<FactoredState> {
    if graph.order() != decomposition.order()
        || decomposition
            .crossing_edges()
            .iter()
            .chain(decomposition.non_crossing_edges())
            .any(|&(i, j)| !graph.has_edge(i, j))
        || decomposition.crossing_edges().len() + decomposition.non_crossing_edges().len()
            != graph.edges().len()
    {
        return Err(Error::Dimension(
            "decomposition was not computed from this graph".into(),
        ));
    }
    let boundary = match decomposition.boundary_subgraph() {
        Some(sub) => build_graph_state_limited(sub, crate::Limits::default().dense_state)?,
        None => StateVector::plus(0),
    };
    Ok(FactoredState {
        boundary,
        non_boundary: StateVector::plus(decomposition.non_boundary_size()),
        factored_gates: decomposition.non_crossing_edges().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph_state;

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![0, 2, 2]).is_err());
        assert!(Partition::new(vec![]).is_err());
        let p = Partition::parse("0,1,1,1", 4).unwrap();
        assert_eq!(p.part_count(), 2);
        assert_eq!(p.mask(1), 0b1110);
        assert_eq!(Partition::parse("one-vs-rest:2", 4).unwrap().labels(), &[1, 1, 0, 1]);
        assert!(Partition::parse("0,1", 4).is_err());
        assert!(Partition::parse("one-vs-rest:9", 4).is_err());
        assert_eq!(Partition::new(vec![0, 1, 2]).unwrap().require_bipartition(), Err(Error::NotBipartite(3)));
    }

    #[test]
    fn chain_first_qubit_versus_rest() {
        let g = Graph::chain(4).unwrap();
        let d = decompose(&g, &Partition::one_vs_rest(4, 0).unwrap()).unwrap();
        assert_eq!(d.crossing_edges(), &[(0, 1)]);
        assert_eq!(d.boundary_mask(), 0b0011);
        assert_eq!(d.non_boundary_mask(), 0b1100);
        assert_eq!(d.boundary_subgraph().unwrap(), &Graph::chain(2).unwrap());
        assert_eq!(d.induced_partition().unwrap().labels(), &[0, 1]);
        let f = factored_graph_state(&g, &d).unwrap();
        assert_eq!(f.factored_gates, vec![(1, 2), (2, 3)]);
    }

    #[test]
    fn single_part_has_no_boundary() {
        let g = Graph::ring(5).unwrap();
        let d = decompose(&g, &Partition::new(vec![0; 5]).unwrap()).unwrap();
        assert!(d.crossing_edges().is_empty());
        assert_eq!(d.boundary_mask(), 0);
        assert_eq!(d.non_boundary_mask(), 0b11111);
        assert!(d.boundary_subgraph().is_none());
    }

    #[test]
    fn middle_of_long_chain_has_three_qubit_boundary() {
        let g = Graph::chain(14).unwrap();
        let d = decompose(&g, &Partition::one_vs_rest(14, 7).unwrap()).unwrap();
        assert_eq!(d.boundary_size(), 3);
        assert_eq!(d.boundary_vertices(), &[6, 7, 8]);
        assert_eq!(d.boundary_subgraph().unwrap(), &Graph::chain(3).unwrap());
    }

    #[test]
    fn edge_with_both_parts_is_all_boundary() {
        let g = Graph::chain(2).unwrap();
        let d = decompose(&g, &Partition::one_vs_rest(2, 0).unwrap()).unwrap();
        let f = factored_graph_state(&g, &d).unwrap();
        assert_eq!(f.boundary, build_graph_state(&g).unwrap());
        assert_eq!(f.non_boundary.qubits(), 0);
        assert!(f.factored_gates.is_empty());
    }

    #[test]
    fn gather_scatter_roundtrip() {
        let g = Graph::new(6, [(0, 3), (3, 4), (1, 5), (2, 4)]).unwrap();
        let d = decompose(&g, &Partition::new(vec![0, 0, 1, 1, 0, 1]).unwrap()).unwrap();
        for m in 0..64u64 {
            let back = d.boundary_to_global(d.boundary_bits(m))
                | d.non_boundary_to_global(d.non_boundary_bits(m));
            assert_eq!(back, m);
        }
    }

    #[test]
    fn mismatched_decomposition_rejected() {
        let g = Graph::chain(4).unwrap();
        let d = decompose(&Graph::ring(4).unwrap(), &Partition::one_vs_rest(4, 0).unwrap()).unwrap();
        assert!(factored_graph_state(&g, &d).is_err());
        assert!(decompose(&g, &Partition::one_vs_rest(3, 0).unwrap()).is_err());
    }

    #[test]
    fn partition_serde_validates() {
        let p: Partition = serde_json::from_str("[0,1,1]").unwrap();
        assert_eq!(p.part_count(), 2);
        assert!(serde_json::from_str::<Partition>("[0,2]").is_err());
    }
}
