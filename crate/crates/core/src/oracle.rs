//! Brute-force reference: dense Kraus evolution of the full graph state.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::channels::{Mat2, ProductChannel};
use crate::density::{negativity, DensityMatrix};
use crate::error::{check_limit, Error, Limits, Result};
use crate::graph::{build_graph_state, Graph};
use crate::partition::Partition;

/// `Σ_k K ρ K†` on qubit `q` of a dense matrix.
fn apply_on_qubit(rho: &DMatrix<Complex64>, q: usize, kraus: &[Mat2]) -> DMatrix<Complex64> {
    let d = rho.nrows();
    let bit = 1usize << q;
    let mut out = DMatrix::zeros(d, d);
    for r in 0..d {
        let r0 = r & !bit;
        let rb = (r >> q) & 1;
        for c in 0..d {
            let c0 = c & !bit;
            let cb = (c >> q) & 1;
            let mut acc = Complex64::new(0.0, 0.0);
            for k in kraus {
                for a in 0..2 {
                    let kra = k[rb][a];
                    if kra == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for b in 0..2 {
                        acc += kra * rho[(r0 | a << q, c0 | b << q)] * k[cb][b].conj();
                    }
                }
            }
            out[(r, c)] = acc;
        }
    }
    out
}

/// Applies the product channel one qubit at a time in ascending order.
pub fn evolve_density(rho: &DensityMatrix, channel: &ProductChannel) -> Result<DensityMatrix> {
    let order: Vec<usize> = (0..rho.qubits()).collect();
    evolve_density_in_order(rho, channel, &order)
}

/// Applies the factors in the given qubit order.
pub fn evolve_density_in_order(
    rho: &DensityMatrix,
    channel: &ProductChannel,
    order: &[usize],
) -> Result<DensityMatrix> {
    let n = rho.qubits();
    check_limit("dense oracle", n, Limits::default().oracle)?;
    if channel.len() != n {
        return Err(Error::WidthMismatch {
            expected: n,
            got: channel.len(),
        });
    }
    let mut seen = vec![false; n];
    for &q in order {
        if q >= n || std::mem::replace(&mut seen[q], true) {
            return Err(Error::Config(format!("qubit order {order:?} is not a permutation")));
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Config(format!("qubit order {order:?} is not a permutation")));
    }
    let mut m = rho.matrix().clone();
    for &q in order {
        m = apply_on_qubit(&m, q, &channel.qubit(q).kraus_operators());
    }
    DensityMatrix::from_matrix(m)?.with_labels(rho.labels().to_vec())
}

/// `|G_0⟩⟨G_0|` evolved densely by `channel`.
pub fn evolved_graph_state(graph: &Graph, channel: &ProductChannel) -> Result<DensityMatrix> {
    check_limit("dense oracle", graph.order(), Limits::default().oracle)?;
    let psi = build_graph_state(graph)?;
    evolve_density(&DensityMatrix::from_pure(&psi), channel)
}

/// Negativity of the densely evolved graph state across `partition`.
pub fn oracle_negativity(graph: &Graph, partition: &Partition, channel: &ProductChannel) -> Result<f64> {
    partition.require_bipartition()?;
    let rho = evolved_graph_state(graph, channel)?;
    negativity(&rho, partition)
}
