//! Effective dephasing distribution of Pauli maps on graph states and the
//! exact negativity built from it.
//!
//! A product Pauli channel acting on `|G_0⟩` is equivalent to the map
//! `ρ ↦ Σ_μ̃ P̃_μ̃ Z^μ̃ ρ Z^μ̃`. Each qubit independently draws a chord label and
//! contributes the mask `v·e_i ⊕ u·N_i`, so `P̃` is the XOR-convolution of `n`
//! four-point distributions.

use rayon::prelude::*;

use crate::channels::ProductChannel;
use crate::density::{graph_diagonal_unchecked, negativity_of_mask, DensityMatrix, WEIGHT_SUM_TOL};
use crate::error::{check_limit, Error, Limits, Result};
use crate::graph::{Graph, Pauli};
use crate::numeric::{compensated_sum, walsh_hadamard};
use crate::partition::{decompose, gather, BoundaryDecomposition, Partition};

/// Conditionals with a smaller flag weight are dropped.
pub const OMEGA_CUTOFF: f64 = 1e-15;

/// Probability table over `Z^μ̃` masks, indexed by the mask's integer value.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveDistribution {
    n: usize,
    table: Vec<f64>,
}

impl EffectiveDistribution {
    /// Validates non-negativity and normalization within `1e-9`.
    pub fn new(n: usize, table: Vec<f64>) -> Result<Self> {
        check_limit("probability table", n, Limits::default().table)?;
        if table.len() != 1usize << n {
            return Err(Error::Dimension(format!("{} entries for {n} qubits", table.len())));
        }
        if let Some(&bad) = table.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::ProbabilityRange {
                what: "distribution entry",
                value: bad,
            });
        }
        let sum = compensated_sum(table.iter().copied());
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Unnormalized { sum });
        }
        Ok(Self { n, table })
    }

    pub fn point_mass(n: usize, mask: u64) -> Result<Self> {
        check_limit("probability table", n, Limits::default().table)?;
        let mut table = vec![0.0; 1 << n];
        let slot = table
            .get_mut(mask as usize)
            .ok_or(Error::WidthMismatch {
                expected: n,
                got: 64 - mask.leading_zeros() as usize,
            })?;
        *slot = 1.0;
        Ok(Self { n, table })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        check_limit("probability table", n, Limits::default().table)?;
        let d = 1usize << n;
        Ok(Self {
            n,
            table: vec![1.0 / d as f64; d],
        })
    }

    pub fn qubits(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn into_table(self) -> Vec<f64> {
        self.table
    }

    pub fn prob(&self, mask: u64) -> f64 {
        self.table.get(mask as usize).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        compensated_sum(self.table.iter().copied())
    }

    /// Distribution of `a ⊕ b` for independent `a ~ self`, `b ~ other`.
    pub fn xor_convolve(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::WidthMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        let mut a = self.table.clone();
        let mut b = other.table.clone();
        walsh_hadamard(&mut a);
        walsh_hadamard(&mut b);
        for (x, y) in a.iter_mut().zip(&b) {
            *x *= y;
        }
        walsh_hadamard(&mut a);
        let scale = 1.0 / a.len() as f64;
        let table = a.into_iter().map(|x| (x * scale).max(0.0)).collect();
        Ok(Self { n: self.n, table })
    }
}

/// Algorithm used to build the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Depth-first walk over joint chord labels, pruning zero-probability labels.
    Enumeration,
    /// One qubit at a time: `new[m] = Σ_label p · old[m ⊕ c_label]`.
    #[default]
    Elimination,
}

fn label_masks(graph: &Graph, i: usize, probs: &[f64; 4]) -> Vec<(u64, f64)> {
    Pauli::ALL
        .iter()
        .filter(|p| probs[p.index()] > 0.0)
        .map(|&p| {
            let (u, v) = p.chord_labels();
            let mut c = if v == 1 { 1u64 << i } else { 0 };
            if u == 1 {
                c ^= graph.neighbors(i);
            }
            (c, probs[p.index()])
        })
        .collect()
}

fn prepare(graph: &Graph, channel: &ProductChannel) -> Result<Vec<Vec<(u64, f64)>>> {
    channel.require_len(graph.order())?;
    let probs = channel.pauli_probs()?;
    Ok(probs
        .iter()
        .enumerate()
        .map(|(i, p)| label_masks(graph, i, p))
        .collect())
}

/// `P̃` for an all-Pauli product channel, using [`Strategy::Elimination`].
pub fn effective_distribution(graph: &Graph, channel: &ProductChannel) -> Result<EffectiveDistribution> {
    effective_distribution_with(graph, channel, Strategy::default())
}

pub fn effective_distribution_with(
    graph: &Graph,
    channel: &ProductChannel,
    strategy: Strategy,
) -> Result<EffectiveDistribution> {
    let n = graph.order();
    let limits = Limits::default();
    match strategy {
        Strategy::Enumeration => check_limit("joint-label enumeration", n, limits.enumeration)?,
        Strategy::Elimination => check_limit("probability table", n, limits.table)?,
    }
    let labels = prepare(graph, channel)?;
    let table = match strategy {
        Strategy::Enumeration => enumerate(n, &labels),
        Strategy::Elimination => eliminate(n, &labels),
    };
    Ok(EffectiveDistribution { n, table })
}

fn enumerate(n: usize, labels: &[Vec<(u64, f64)>]) -> Vec<f64> {
    fn walk(labels: &[Vec<(u64, f64)>], depth: usize, mask: u64, prob: f64, table: &mut [f64]) {
        match labels.get(depth) {
            None => table[mask as usize] += prob,
            Some(options) => {
                for &(c, p) in options {
                    walk(labels, depth + 1, mask ^ c, prob * p, table);
                }
            }
        }
    }
    let mut table = vec![0.0; 1 << n];
    walk(labels, 0, 0, 1.0, &mut table);
    table
}

fn eliminate(n: usize, labels: &[Vec<(u64, f64)>]) -> Vec<f64> {
    let mut table = vec![0.0; 1 << n];
    table[0] = 1.0;
    let mut next = vec![0.0; 1 << n];
    for options in labels {
        if options.len() == 1 && options[0].0 == 0 {
            continue;
        }
        next.iter_mut().for_each(|x| *x = 0.0);
        for (m, slot) in next.iter_mut().enumerate() {
            *slot = options
                .iter()
                .map(|&(c, p)| p * table[m ^ c as usize])
                .sum();
        }
        std::mem::swap(&mut table, &mut next);
    }
    table
}

/// `P̃` split into the flag marginal over the non-boundary and the boundary
/// conditionals.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagConditional {
    boundary_size: usize,
    non_boundary_size: usize,
    omega_marginal: Vec<f64>,
    conditionals: Vec<(u64, Vec<f64>)>,
    dropped_weight: f64,
}

impl FlagConditional {
    /// Splits `dist` along the decomposition's vertex maps.
    pub fn split(dist: &EffectiveDistribution, decomp: &BoundaryDecomposition) -> Result<Self> {
        if dist.qubits() != decomp.order() {
            return Err(Error::WidthMismatch {
                expected: decomp.order(),
                got: dist.qubits(),
            });
        }
        let by = decomp.boundary_size();
        let bo = decomp.non_boundary_size();
        let mut joint = vec![vec![0.0; 1 << by]; 1 << bo];
        for (mask, &p) in dist.table().iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let gamma = gather(mask as u64, decomp.boundary_vertices());
            let omega = gather(mask as u64, decomp.non_boundary_vertices());
            joint[omega as usize][gamma as usize] += p;
        }
        let omega_marginal: Vec<f64> = joint
            .iter()
            .map(|row| compensated_sum(row.iter().copied()))
            .collect();
        let mut conditionals = Vec::new();
        let mut dropped = Vec::new();
        for (omega, row) in joint.into_iter().enumerate() {
            let w = omega_marginal[omega];
            if w > OMEGA_CUTOFF {
                conditionals.push((omega as u64, row.into_iter().map(|p| p / w).collect()));
            } else {
                dropped.push(w);
            }
        }
        let dropped_weight = compensated_sum(dropped);
        if dropped_weight > 0.0 {
            log::debug!("dropped flag weight {dropped_weight:.3e}");
        }
        Ok(Self {
            boundary_size: by,
            non_boundary_size: bo,
            omega_marginal,
            conditionals,
            dropped_weight,
        })
    }

    pub fn boundary_size(&self) -> usize {
        self.boundary_size
    }

    pub fn non_boundary_size(&self) -> usize {
        self.non_boundary_size
    }

    /// `P̃_ω` indexed by the compressed non-boundary mask.
    pub fn omega_marginal(&self) -> &[f64] {
        &self.omega_marginal
    }

    /// `(ω, P̃(γ | ω))` for every kept ω, ascending in ω.
    pub fn conditionals(&self) -> &[(u64, Vec<f64>)] {
        &self.conditionals
    }

    pub fn conditional(&self, omega: u64) -> Option<&[f64]> {
        self.conditionals
            .binary_search_by_key(&omega, |(w, _)| *w)
            .ok()
            .map(|k| self.conditionals[k].1.as_slice())
    }

    /// Total flag weight below [`OMEGA_CUTOFF`].
    pub fn dropped_weight(&self) -> f64 {
        self.dropped_weight
    }

    /// Boundary marginal `Σ_ω P̃_ω P̃(γ | ω)`.
    pub fn boundary_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; 1 << self.boundary_size];
        for (omega, cond) in &self.conditionals {
            let w = self.omega_marginal[*omega as usize];
            for (o, c) in out.iter_mut().zip(cond) {
                *o += w * c;
            }
        }
        out
    }
}

pub fn flag_conditional(graph: &Graph, partition: &Partition, channel: &ProductChannel) -> Result<FlagConditional> {
    partition.require_bipartition()?;
    let decomp = decompose(graph, partition)?;
    let dist = effective_distribution(graph, channel)?;
    FlagConditional::split(&dist, &decomp)
}

/// Result of the exact evaluation together with what was solved.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactReport {
    pub negativity: f64,
    pub boundary_size: usize,
    /// Flag values whose conditional was evaluated.
    pub omega_count: usize,
    pub dropped_weight: f64,
    /// Dimension of every partial-transposed matrix handed to the eigensolver.
    pub eigenproblem_dims: Vec<usize>,
}

/// Exact negativity across a bipartition under an all-Pauli product channel.
pub fn exact_entanglement_pauli(graph: &Graph, partition: &Partition, channel: &ProductChannel) -> Result<f64> {
    exact_entanglement_report(graph, partition, channel).map(|r| r.negativity)
}

pub fn exact_entanglement_report(
    graph: &Graph,
    partition: &Partition,
    channel: &ProductChannel,
) -> Result<ExactReport> {
    partition.require_bipartition()?;
    channel.require_len(graph.order())?;
    if !channel.is_all_pauli() {
        return Err(Error::NonPauliChannel);
    }
    let decomp = decompose(graph, partition)?;
    check_limit("boundary eigensolve", decomp.boundary_size(), Limits::default().eigensolver)?;
    let dist = effective_distribution(graph, channel)?;
    exact_from_distribution(&decomp, &dist)
}

/// Exact negativity of `Σ_μ̃ P̃_μ̃ Z^μ̃ |G⟩⟨G| Z^μ̃` for a given table.
pub fn exact_from_distribution(decomp: &BoundaryDecomposition, dist: &EffectiveDistribution) -> Result<ExactReport> {
    let (Some(sub), Some(cut)) = (decomp.boundary_subgraph(), decomp.induced_partition()) else {
        return Ok(ExactReport {
            negativity: 0.0,
            boundary_size: 0,
            omega_count: 0,
            dropped_weight: 0.0,
            eigenproblem_dims: Vec::new(),
        });
    };
    check_limit("boundary eigensolve", sub.order(), Limits::default().eigensolver)?;
    let split = FlagConditional::split(dist, decomp)?;
    let mask = cut.mask(1);
    let parts: Vec<(f64, usize)> = split
        .conditionals()
        .par_iter()
        .map(|(omega, cond)| {
            let rho: DensityMatrix = graph_diagonal_unchecked(sub, cond);
            let neg = negativity_of_mask(&rho, mask)?;
            Ok((split.omega_marginal()[*omega as usize] * neg, rho.dim()))
        })
        .collect::<Result<_>>()?;
    Ok(ExactReport {
        negativity: compensated_sum(parts.iter().map(|p| p.0)),
        boundary_size: sub.order(),
        omega_count: parts.len(),
        dropped_weight: split.dropped_weight(),
        eigenproblem_dims: parts.iter().map(|p| p.1).collect(),
    })
}

/// Effective table for `Λ ∘ Λ_GD`, where the graph-diagonal prior `P_ν` acts
/// as the map `ρ ↦ Σ_ν P_ν Z^ν ρ Z^ν`.
pub fn compose_graph_diagonal_prior(
    graph: &Graph,
    prior: &EffectiveDistribution,
    channel: &ProductChannel,
) -> Result<EffectiveDistribution> {
    let dist = effective_distribution(graph, channel)?;
    prior.xor_convolve(&dist)
}

/// Exact negativity of a graph-diagonal initial state after an all-Pauli channel.
pub fn exact_entanglement_with_prior(
    graph: &Graph,
    partition: &Partition,
    prior: &EffectiveDistribution,
    channel: &ProductChannel,
) -> Result<ExactReport> {
    partition.require_bipartition()?;
    let decomp = decompose(graph, partition)?;
    let composed = compose_graph_diagonal_prior(graph, prior, channel)?;
    exact_from_distribution(&decomp, &composed)
}

/// `P_ν = ⟨G_ν|ρ|G_ν⟩`.
pub fn project_to_graph_diagonal(rho: &DensityMatrix, graph: &Graph) -> Result<EffectiveDistribution> {
    let n = graph.order();
    if rho.qubits() != n {
        return Err(Error::WidthMismatch {
            expected: n,
            got: rho.qubits(),
        });
    }
    check_limit("graph-diagonal projection", n, Limits::default().eigensolver)?;
    let d = 1usize << n;
    let sign: Vec<f64> = (0..d as u64)
        .map(|x| if graph.cz_parity(x) == 1 { -1.0 } else { 1.0 })
        .collect();
    let m = rho.matrix();
    // r(z) = Σ_x s(x) s(x⊕z) ρ(x, x⊕z); then P_ν = 2^-n Σ_z (-1)^{ν·z} r(z).
    let mut r: Vec<f64> = (0..d)
        .map(|z| compensated_sum((0..d).map(|x| sign[x] * sign[x ^ z] * m[(x, x ^ z)].re)))
        .collect();
    walsh_hadamard(&mut r);
    let scale = 1.0 / d as f64;
    let table = r
        .into_iter()
        .map(|x| {
            let p = x * scale;
            if p < 0.0 && p > -1e-12 {
                0.0
            } else {
                p
            }
        })
        .collect();
    EffectiveDistribution::new(n, table)
}
