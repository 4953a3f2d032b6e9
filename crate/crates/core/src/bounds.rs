//! Bounds on the negativity for product channels whose Kraus operators are
//! diagonal or anti-diagonal.
//!
//! Every Kraus product is pushed through the non-crossing CZ gates. An
//! anti-diagonal factor on qubit `i` leaves a `Z` on each non-crossing
//! neighbour, so each term becomes a boundary vector times a product flag
//! state on the non-boundary qubits. Terms are grouped by flag, and the
//! groups give:
//!
//! * `UB = Σ_g P_g N(σ_g)`,
//! * `LLB = N(Σ_g P_g σ_g)` (flags traced out),
//! * `LB(θ)`, measuring every flag qubit in `{|θ+⟩, |θ−⟩}`.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{Mat2, ProductChannel};
use crate::density::{negativity_of_mask, DensityMatrix};
use crate::error::{check_limit, Error, Limits, Result};
use crate::graph::{build_graph_state, Graph, StateVector};
use crate::numeric::compensated_sum;
use crate::partition::{decompose, BoundaryDecomposition, Partition};

/// Two normalized flag factors are the same state when `|⟨a|b⟩| ≥ 1 - FLAG_MATCH_TOL`.
pub const FLAG_MATCH_TOL: f64 = 1e-12;

/// Largest pairwise flag overlap still certified as orthogonal.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// Off-pattern entries below this are treated as zero when classifying Kraus operators.
pub const STRUCTURE_TOL: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

type Ket = [Complex64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Diagonal,
    AntiDiagonal,
    General,
}

fn shape(k: &Mat2) -> Shape {
    let off = k[0][1].norm().max(k[1][0].norm());
    let diag = k[0][0].norm().max(k[1][1].norm());
    if off <= STRUCTURE_TOL {
        Shape::Diagonal
    } else if diag <= STRUCTURE_TOL {
        Shape::AntiDiagonal
    } else {
        Shape::General
    }
}

fn z_times(k: &Mat2, flip: bool) -> Mat2 {
    if flip {
        [k[0], [-k[1][0], -k[1][1]]]
    } else {
        *k
    }
}

fn apply_to_plus(k: &Mat2) -> Ket {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [(k[0][0] + k[0][1]) * h, (k[1][0] + k[1][1]) * h]
}

fn ket_norm_sqr(v: &Ket) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

fn ket_overlap(a: &Ket, b: &Ket) -> f64 {
    (a[0].conj() * b[0] + a[1].conj() * b[1]).norm()
}

/// One Kraus product after commuting through the non-crossing CZ gates.
#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedKrausTerm {
    /// Kraus index chosen on each vertex.
    pub label: Vec<usize>,
    /// `Z^{c_i} K_i` for each boundary vertex, in boundary order.
    pub boundary_op: Vec<Mat2>,
    /// Unnormalized `boundary_op |G_𝒴⟩`.
    pub boundary_state: Vec<Complex64>,
    /// Unnormalized `Z^{c_k} K_k |+⟩` for each non-boundary vertex.
    pub flag_state: Vec<Ket>,
    /// `‖boundary_state‖²`.
    pub boundary_weight: f64,
    /// `‖flag_state‖²`.
    pub flag_weight: f64,
}

impl ModifiedKrausTerm {
    /// Probability of the term, `‖boundary_state‖² ‖flag_state‖²`.
    pub fn weight(&self) -> f64 {
        self.boundary_weight * self.flag_weight
    }

    /// Dense flag vector over the non-boundary qubits.
    pub fn flag_vector(&self) -> Vec<Complex64> {
        product_vector(&self.flag_state)
    }
}

fn product_vector(factors: &[Ket]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(1.0, 0.0)];
    for (k, f) in factors.iter().enumerate() {
        let mut next = vec![ZERO; out.len() * 2];
        for (x, a) in out.iter().enumerate() {
            next[x] = a * f[0];
            next[x | 1 << k] = a * f[1];
        }
        out = next;
    }
    out
}

/// Precomputed per-decomposition data for term generation.
struct TermContext<'a> {
    decomp: &'a BoundaryDecomposition,
    kraus: Vec<Vec<Mat2>>,
    anti: Vec<Vec<bool>>,
    non_crossing_neighbors: Vec<u64>,
    boundary_graph_state: StateVector,
}

impl<'a> TermContext<'a> {
    fn new(decomp: &'a BoundaryDecomposition, channel: &ProductChannel) -> Result<Self> {
        let n = decomp.order();
        check_limit("general-channel terms", n, Limits::default().general_channel)?;
        if channel.len() != n {
            return Err(Error::WidthMismatch {
                expected: n,
                got: channel.len(),
            });
        }
        let mut non_crossing_neighbors = vec![0u64; n];
        for &(i, j) in decomp.non_crossing_edges() {
            non_crossing_neighbors[i] |= 1 << j;
            non_crossing_neighbors[j] |= 1 << i;
        }
        let mut kraus = Vec::with_capacity(n);
        let mut anti = Vec::with_capacity(n);
        for (q, ch) in channel.iter().enumerate() {
            let ops = ch.kraus_operators();
            let mut flags = Vec::with_capacity(ops.len());
            for (index, k) in ops.iter().enumerate() {
                let s = shape(k);
                if s == Shape::General && non_crossing_neighbors[q] != 0 {
                    return Err(Error::NonCommutingKraus { qubit: q, index });
                }
                flags.push(s == Shape::AntiDiagonal);
            }
            kraus.push(ops);
            anti.push(flags);
        }
        let boundary_graph_state = match decomp.boundary_subgraph() {
            Some(sub) => build_graph_state(sub)?,
            None => StateVector::plus(0),
        };
        Ok(Self {
            decomp,
            kraus,
            anti,
            non_crossing_neighbors,
            boundary_graph_state,
        })
    }

    fn term_count(&self) -> usize {
        self.kraus.iter().map(Vec::len).product()
    }

    fn for_each_term(&self, mut f: impl FnMut(ModifiedKrausTerm)) {
        let n = self.decomp.order();
        let mut label = vec![0usize; n];
        if self.kraus.iter().any(Vec::is_empty) {
            return;
        }
        loop {
            f(self.term(&label));
            let mut q = 0;
            loop {
                if q == n {
                    return;
                }
                label[q] += 1;
                if label[q] < self.kraus[q].len() {
                    break;
                }
                label[q] = 0;
                q += 1;
            }
        }
    }

    fn term(&self, label: &[usize]) -> ModifiedKrausTerm {
        let anti_mask = label
            .iter()
            .enumerate()
            .filter(|&(q, &k)| self.anti[q][k])
            .fold(0u64, |m, (q, _)| m | 1 << q);
        let modified = |q: usize| {
            let flip = (anti_mask & self.non_crossing_neighbors[q]).count_ones() & 1 == 1;
            z_times(&self.kraus[q][label[q]], flip)
        };
        let boundary_op: Vec<Mat2> = self.decomp.boundary_vertices().iter().map(|&q| modified(q)).collect();
        let mut b = self.boundary_graph_state.clone();
        for (local, op) in boundary_op.iter().enumerate() {
            b.apply_single(local, op);
        }
        let flag_state: Vec<Ket> = self
            .decomp
            .non_boundary_vertices()
            .iter()
            .map(|&q| apply_to_plus(&modified(q)))
            .collect();
        let boundary_weight = b.norm_sqr();
        let flag_weight = flag_state.iter().map(ket_norm_sqr).product();
        ModifiedKrausTerm {
            label: label.to_vec(),
            boundary_op,
            boundary_state: b.into_amplitudes(),
            flag_state,
            boundary_weight,
            flag_weight,
        }
    }
}

/// All Kraus products rewritten in boundary-times-flag form.
pub fn commute_through_cz(
    graph: &Graph,
    decomp: &BoundaryDecomposition,
    channel: &ProductChannel,
) -> Result<Vec<ModifiedKrausTerm>> {
    check_decomposition(graph, decomp)?;
    let ctx = TermContext::new(decomp, channel)?;
    let mut terms = Vec::with_capacity(ctx.term_count());
    ctx.for_each_term(|t| terms.push(t));
    Ok(terms)
}

fn check_decomposition(graph: &Graph, decomp: &BoundaryDecomposition) -> Result<()> {
    let matches = graph.order() == decomp.order()
        && decomp.crossing_edges().len() + decomp.non_crossing_edges().len() == graph.edges().len()
        && decomp
            .crossing_edges()
            .iter()
            .chain(decomp.non_crossing_edges())
            .all(|&(i, j)| graph.has_edge(i, j));
    if matches {
        Ok(())
    } else {
        Err(Error::InvalidPartition("decomposition does not belong to this graph".into()))
    }
}

/// Boundary sub-ensemble sharing one normalized flag state.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagGroup {
    /// Normalized flag factors, one per non-boundary vertex.
    pub flag: Vec<Ket>,
    pub probability: f64,
    /// Normalized boundary state of the group.
    pub boundary: DensityMatrix,
}

/// Terms grouped by flag state, with what is needed to evaluate the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct FlagEnsemble {
    /// Partial-transpose mask on the boundary qubits; `None` without crossing edges.
    cut_mask: Option<u64>,
    non_boundary_size: usize,
    groups: Vec<FlagGroup>,
}

struct GroupAccumulator {
    catalogs: Vec<Vec<Ket>>,
    index: HashMap<Vec<usize>, usize>,
    flags: Vec<Vec<Ket>>,
    weights: Vec<Vec<f64>>,
    sums: Vec<DMatrix<Complex64>>,
    dim: usize,
}

impl GroupAccumulator {
    fn new(non_boundary_size: usize, boundary_size: usize) -> Self {
        Self {
            catalogs: vec![Vec::new(); non_boundary_size],
            index: HashMap::new(),
            flags: Vec::new(),
            weights: Vec::new(),
            sums: Vec::new(),
            dim: 1 << boundary_size,
        }
    }

    fn catalog_id(&mut self, k: usize, factor: &Ket, norm: f64) -> usize {
        let unit = [factor[0] / norm, factor[1] / norm];
        let catalog = &mut self.catalogs[k];
        if let Some(id) = catalog.iter().position(|c| ket_overlap(c, &unit) >= 1.0 - FLAG_MATCH_TOL) {
            return id;
        }
        catalog.push(unit);
        catalog.len() - 1
    }

    fn add(&mut self, term: &ModifiedKrausTerm) {
        if term.weight() <= 0.0 {
            return;
        }
        let key: Vec<usize> = term
            .flag_state
            .iter()
            .enumerate()
            .map(|(k, f)| self.catalog_id(k, f, ket_norm_sqr(f).sqrt()))
            .collect();
        let g = match self.index.get(&key) {
            Some(&g) => g,
            None => {
                let flag = key.iter().enumerate().map(|(k, &id)| self.catalogs[k][id]).collect();
                self.flags.push(flag);
                self.weights.push(Vec::new());
                self.sums.push(DMatrix::zeros(self.dim, self.dim));
                self.index.insert(key, self.flags.len() - 1);
                self.flags.len() - 1
            }
        };
        self.weights[g].push(term.weight());
        let b = DVector::from_column_slice(&term.boundary_state);
        let outer = &b * b.adjoint();
        self.sums[g] += outer * Complex64::new(term.flag_weight, 0.0);
    }

    fn finish(self, cut_mask: Option<u64>, labels: Vec<usize>) -> Result<FlagEnsemble> {
        let non_boundary_size = self.catalogs.len();
        let mut groups = Vec::with_capacity(self.flags.len());
        for ((flag, weights), sum) in self.flags.into_iter().zip(self.weights).zip(self.sums) {
            let probability = compensated_sum(weights);
            let boundary = DensityMatrix::from_matrix(sum * Complex64::new(1.0 / probability, 0.0))?
                .with_labels(labels.clone())?;
            groups.push(FlagGroup {
                flag,
                probability,
                boundary,
            });
        }
        Ok(FlagEnsemble {
            cut_mask,
            non_boundary_size,
            groups,
        })
    }
}

fn ensemble_shape(decomp: &BoundaryDecomposition) -> (Option<u64>, Vec<usize>) {
    let cut = decomp.induced_partition().map(|p| p.mask(1));
    (cut, decomp.boundary_vertices().to_vec())
}

/// Groups terms whose normalized flag states coincide up to a global phase.
pub fn group_flags(decomp: &BoundaryDecomposition, terms: &[ModifiedKrausTerm]) -> Result<FlagEnsemble> {
    let mut acc = GroupAccumulator::new(decomp.non_boundary_size(), decomp.boundary_size());
    for t in terms {
        acc.add(t);
    }
    let (cut, labels) = ensemble_shape(decomp);
    acc.finish(cut, labels)
}

/// Builds the flag ensemble without materializing the term list.
pub fn flag_ensemble(graph: &Graph, partition: &Partition, channel: &ProductChannel) -> Result<FlagEnsemble> {
    partition.require_bipartition()?;
    let decomp = decompose(graph, partition)?;
    check_limit("boundary eigensolve", decomp.boundary_size(), Limits::default().eigensolver)?;
    let ctx = TermContext::new(&decomp, channel)?;
    let mut acc = GroupAccumulator::new(decomp.non_boundary_size(), decomp.boundary_size());
    ctx.for_each_term(|t| acc.add(&t));
    let (cut, labels) = ensemble_shape(&decomp);
    acc.finish(cut, labels)
}

/// Product measurement on the non-boundary qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasurementBasis {
    /// The same angle on every qubit.
    Uniform(f64),
    /// One angle per non-boundary qubit, in ascending vertex order.
    PerQubit(Vec<f64>),
}

impl MeasurementBasis {
    fn angle(&self, k: usize) -> f64 {
        match self {
            MeasurementBasis::Uniform(t) => *t,
            MeasurementBasis::PerQubit(ts) => ts[k],
        }
    }

    fn validate(&self, non_boundary_size: usize) -> Result<()> {
        let angles: &[f64] = match self {
            MeasurementBasis::Uniform(t) => std::slice::from_ref(t),
            MeasurementBasis::PerQubit(ts) => {
                if ts.len() != non_boundary_size {
                    return Err(Error::WidthMismatch {
                        expected: non_boundary_size,
                        got: ts.len(),
                    });
                }
                ts
            }
        };
        match angles.iter().find(|t| !(-1e-12..=FRAC_PI_2 + 1e-12).contains(*t)) {
            Some(t) => Err(Error::Config(format!("measurement angle {t} outside [0, π/2]"))),
            None => Ok(()),
        }
    }

    /// `(|θ+⟩, |θ−⟩)` for non-boundary qubit `k`.
    pub fn projectors(&self, k: usize) -> [[f64; 2]; 2] {
        let (s, c) = self.angle(k).sin_cos();
        [[c, s], [-s, c]]
    }
}

/// Whether the flag groups are certified to give the exact value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Certificate {
    Exact,
    BoundsOnly,
}

impl std::fmt::Display for Certificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Certificate::Exact => "exact",
            Certificate::BoundsOnly => "bounds-only",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactnessCertificate {
    pub certificate: Certificate,
    pub max_overlap: f64,
}

impl FlagEnsemble {
    pub fn groups(&self) -> &[FlagGroup] {
        &self.groups
    }

    pub fn non_boundary_size(&self) -> usize {
        self.non_boundary_size
    }

    pub fn total_probability(&self) -> f64 {
        compensated_sum(self.groups.iter().map(|g| g.probability))
    }

    fn negativity_of(&self, rho: &DensityMatrix) -> Result<f64> {
        match self.cut_mask {
            Some(mask) => negativity_of_mask(rho, mask),
            None => Ok(0.0),
        }
    }

    /// Weighted sum `Σ_g w_g σ_g` as a density matrix.
    fn mixture(&self, weights: &[f64]) -> Result<DensityMatrix> {
        DensityMatrix::mixture(weights.iter().copied().zip(self.groups.iter().map(|g| &g.boundary)))
    }

    pub fn upper_bound(&self) -> Result<f64> {
        let parts: Vec<f64> = self
            .groups
            .par_iter()
            .map(|g| Ok(g.probability * self.negativity_of(&g.boundary)?))
            .collect::<Result<_>>()?;
        Ok(compensated_sum(parts))
    }

    pub fn lowest_lower_bound(&self) -> Result<f64> {
        if self.groups.is_empty() || self.cut_mask.is_none() {
            return Ok(0.0);
        }
        let weights: Vec<f64> = self.groups.iter().map(|g| g.probability).collect();
        self.negativity_of(&self.mixture(&weights)?)
    }

    pub fn lower_bound(&self, basis: &MeasurementBasis) -> Result<f64> {
        basis.validate(self.non_boundary_size)?;
        if self.groups.is_empty() || self.cut_mask.is_none() {
            return Ok(0.0);
        }
        let m = self.non_boundary_size;
        let projectors: Vec<[[f64; 2]; 2]> = (0..m).map(|k| basis.projectors(k)).collect();
        // |⟨outcome|factor⟩|² per group, qubit and outcome bit.
        let likelihood: Vec<Vec<[f64; 2]>> = self
            .groups
            .iter()
            .map(|g| {
                g.flag
                    .iter()
                    .zip(&projectors)
                    .map(|(f, pr)| {
                        let amp = |e: &[f64; 2]| (f[0] * e[0] + f[1] * e[1]).norm_sqr();
                        [amp(&pr[0]), amp(&pr[1])]
                    })
                    .collect()
            })
            .collect();
        let parts: Vec<f64> = (0..1u64 << m)
            .into_par_iter()
            .map(|outcome| {
                let weights: Vec<f64> = self
                    .groups
                    .iter()
                    .zip(&likelihood)
                    .map(|(g, lk)| {
                        g.probability
                            * lk.iter()
                                .enumerate()
                                .map(|(k, l)| l[(outcome >> k & 1) as usize])
                                .product::<f64>()
                    })
                    .collect();
                let p_m = compensated_sum(weights.iter().copied());
                if p_m <= 1e-15 {
                    return Ok(0.0);
                }
                let normalized: Vec<f64> = weights.iter().map(|w| w / p_m).collect();
                Ok(p_m * self.negativity_of(&self.mixture(&normalized)?)?)
            })
            .collect::<Result<_>>()?;
        Ok(compensated_sum(parts))
    }

    /// Largest `|⟨φ_g|φ_h⟩|` over distinct groups.
    pub fn max_flag_overlap(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (a, ga) in self.groups.iter().enumerate() {
            for gb in &self.groups[a + 1..] {
                let o: f64 = ga.flag.iter().zip(&gb.flag).map(|(x, y)| ket_overlap(x, y)).product();
                worst = worst.max(o);
            }
        }
        worst
    }

    pub fn certificate(&self) -> ExactnessCertificate {
        let max_overlap = self.max_flag_overlap();
        ExactnessCertificate {
            certificate: if max_overlap <= ORTHOGONALITY_TOL {
                Certificate::Exact
            } else {
                Certificate::BoundsOnly
            },
            max_overlap,
        }
    }

    /// Merges group `j` into group `i`; the merged group keeps the flag of `i`,
    /// so only the upper bound stays meaningful.
    pub fn merge(&self, i: usize, j: usize) -> Result<FlagEnsemble> {
        if i == j || i >= self.groups.len() || j >= self.groups.len() {
            return Err(Error::Config(format!("cannot merge groups {i} and {j}")));
        }
        let (gi, gj) = (&self.groups[i], &self.groups[j]);
        let probability = gi.probability + gj.probability;
        let boundary = DensityMatrix::mixture([
            (gi.probability / probability, &gi.boundary),
            (gj.probability / probability, &gj.boundary),
        ])?;
        let mut groups = self.groups.clone();
        groups[i] = FlagGroup {
            flag: gi.flag.clone(),
            probability,
            boundary,
        };
        groups.remove(j);
        Ok(FlagEnsemble {
            cut_mask: self.cut_mask,
            non_boundary_size: self.non_boundary_size,
            groups,
        })
    }
}

pub fn exactness_certificate(ensemble: &FlagEnsemble) -> ExactnessCertificate {
    ensemble.certificate()
}

pub fn upper_bound(graph: &Graph, partition: &Partition, channel: &ProductChannel) -> Result<f64> {
    flag_ensemble(graph, partition, channel)?.upper_bound()
}

pub fn lowest_lower_bound(graph: &Graph, partition: &Partition, channel: &ProductChannel) -> Result<f64> {
    flag_ensemble(graph, partition, channel)?.lowest_lower_bound()
}

pub fn lower_bound_measured(
    graph: &Graph,
    partition: &Partition,
    channel: &ProductChannel,
    basis: &MeasurementBasis,
) -> Result<f64> {
    flag_ensemble(graph, partition, channel)?.lower_bound(basis)
}

/// All bounds at one channel strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundsReport {
    pub llb: f64,
    pub lb_theta0: f64,
    pub lb_theta_pi4: f64,
    pub ub: f64,
    pub certificate: ExactnessCertificate,
}

pub fn bounds_report(graph: &Graph, partition: &Partition, channel: &ProductChannel) -> Result<BoundsReport> {
    let ens = flag_ensemble(graph, partition, channel)?;
    Ok(BoundsReport {
        llb: ens.lowest_lower_bound()?,
        lb_theta0: ens.lower_bound(&MeasurementBasis::Uniform(0.0))?,
        lb_theta_pi4: ens.lower_bound(&MeasurementBasis::Uniform(std::f64::consts::FRAC_PI_4))?,
        ub: ens.upper_bound()?,
        certificate: ens.certificate(),
    })
}

/// `LB(θ)` over a grid of shared angles.
pub fn theta_scan(
    graph: &Graph,
    partition: &Partition,
    channel: &ProductChannel,
    thetas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let ens = flag_ensemble(graph, partition, channel)?;
    thetas
        .iter()
        .map(|&t| Ok((t, ens.lower_bound(&MeasurementBasis::Uniform(t))?)))
        .collect()
}

/// Exact reference value: the Pauli fast path when it applies, the dense oracle otherwise.
pub fn reference_negativity(graph: &Graph, partition: &Partition, channel: &ProductChannel) -> Result<f64> {
    if channel.is_all_pauli() {
        crate::effective::exact_entanglement_pauli(graph, partition, channel)
    } else {
        crate::oracle::oracle_negativity(graph, partition, channel)
    }
}

/// Mask of the flag qubits whose factor is changed by the given term relative to `|+⟩`.
pub fn z_deposits(term: &ModifiedKrausTerm, decomp: &BoundaryDecomposition) -> u64 {
    let mut mask = 0u64;
    for (k, &q) in decomp.non_boundary_vertices().iter().enumerate() {
        let f = term.flag_state[k];
        if (f[0] - f[1]).norm() > (f[0] + f[1]).norm() {
            mask |= 1 << q;
        }
    }
    mask
}
