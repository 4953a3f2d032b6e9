use proptest::prelude::*;

use graphent::bounds::{flag_ensemble, MeasurementBasis};
use graphent::channels::{amplitude_damping, gad, PauliQubitChannel, ProductChannel, QubitChannel};
use graphent::density::{max_abs, negativity, negativity_of_mask, DensityMatrix};
use graphent::effective::{effective_distribution, effective_distribution_with, exact_entanglement_pauli, Strategy as Route};
use graphent::graph::{build_graph_state, pauli_to_z_image, Graph, PauliString};
use graphent::oracle::{evolved_graph_state, oracle_negativity};
use graphent::partition::{decompose, Partition};

fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let k = pairs.len();
        proptest::collection::vec(any::<bool>(), k).prop_map(move |keep| {
            let edges = pairs.iter().zip(&keep).filter(|(_, k)| **k).map(|(e, _)| *e);
            Graph::new(n, edges).unwrap()
        })
    })
}

fn case_strategy(max_n: usize) -> impl Strategy<Value = (Graph, Partition)> {
    graph_strategy(max_n).prop_flat_map(|g| {
        let n = g.order();
        proptest::collection::vec(0..2usize, n).prop_map(move |mut labels| {
            labels[0] = 0;
            labels[n - 1] = 1;
            (g.clone(), Partition::new(labels).unwrap())
        })
    })
}

fn pauli_strategy() -> impl Strategy<Value = PauliQubitChannel> {
    proptest::array::uniform4(0.0..1.0f64).prop_map(|w| {
        let s: f64 = w.iter().sum::<f64>() + 1e-9;
        let (a, b, c) = (w[0] / s, w[1] / s, w[2] / s);
        PauliQubitChannel::new([a, b, c, (1.0 - a - b - c).max(0.0)]).unwrap()
    })
}

fn pauli_product(n: usize) -> impl Strategy<Value = ProductChannel> {
    proptest::collection::vec(pauli_strategy(), n)
        .prop_map(|v| ProductChannel::new(v.into_iter().map(QubitChannel::from).collect()).unwrap())
}

fn commuting_channel() -> impl Strategy<Value = QubitChannel> {
    (0.0..=1.0f64, 0.0..5.0f64, 0..3usize).prop_map(|(p, nbar, kind)| match kind {
        0 => amplitude_damping(p).unwrap().into(),
        1 => gad(nbar, p).unwrap().into(),
        _ => graphent::channels::depolarizing(p).unwrap().into(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_matches_oracle((g, part) in case_strategy(6), seed in pauli_product(6)) {
        let n = g.order();
        let ch = ProductChannel::new(seed.iter().take(n).cloned().collect()).unwrap();
        let fast = exact_entanglement_pauli(&g, &part, &ch).unwrap();
        let oracle = oracle_negativity(&g, &part, &ch).unwrap();
        prop_assert!((fast - oracle).abs() <= 1e-9, "{} vs {}", fast, oracle);
    }

    #[test]
    fn table_is_normalized_and_strategies_agree(g in graph_strategy(10), seed in pauli_product(10)) {
        let ch = ProductChannel::new(seed.iter().take(g.order()).cloned().collect()).unwrap();
        let a = effective_distribution(&g, &ch).unwrap();
        prop_assert!((a.total() - 1.0).abs() <= 1e-9);
        let b = effective_distribution_with(&g, &ch, Route::Enumeration).unwrap();
        for (x, y) in a.table().iter().zip(b.table()) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn rewrite_rule_overlap(g in graph_strategy(5), idx in any::<u64>()) {
        let n = g.order();
        let mu = PauliString::from_base4(idx % 4u64.pow(n as u32), n);
        let img = pauli_to_z_image(&g, &mu).unwrap();
        let psi = build_graph_state(&g).unwrap();
        let mut lhs = psi.clone();
        lhs.apply_pauli(&mu);
        let mut rhs = psi;
        rhs.apply_z_mask(img.mask.bits());
        prop_assert!((rhs.inner(&lhs).norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn negativity_side_symmetry((g, part) in case_strategy(5), seed in pauli_product(5)) {
        let ch = ProductChannel::new(seed.iter().take(g.order()).cloned().collect()).unwrap();
        let rho = evolved_graph_state(&g, &ch).unwrap();
        let a = negativity_of_mask(&rho, part.mask(0)).unwrap();
        let b = negativity_of_mask(&rho, part.mask(1)).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn local_unitaries_keep_negativity((g, part) in case_strategy(5), seed in pauli_product(5), z in any::<u64>()) {
        let n = g.order();
        let ch = ProductChannel::new(seed.iter().take(n).cloned().collect()).unwrap();
        let rho = evolved_graph_state(&g, &ch).unwrap();
        let before = negativity(&rho, &part).unwrap();
        let mut conj = rho.conjugate_by_z(z & ((1 << n) - 1));
        for &(i, j) in g.edges() {
            if part.label(i) == part.label(j) {
                conj = conj.conjugate_by_cz(i, j);
            }
        }
        prop_assert!((negativity(&conj, &part).unwrap() - before).abs() <= 1e-10);
    }

    #[test]
    fn negativity_is_convex((g, part) in case_strategy(4), s1 in pauli_product(4), s2 in pauli_product(4), w in 0.0..=1.0f64) {
        let n = g.order();
        let c1 = ProductChannel::new(s1.iter().take(n).cloned().collect()).unwrap();
        let c2 = ProductChannel::new(s2.iter().take(n).cloned().collect()).unwrap();
        let r1 = evolved_graph_state(&g, &c1).unwrap();
        let r2 = evolved_graph_state(&g, &c2).unwrap();
        let mix = DensityMatrix::mixture([(w, &r1), (1.0 - w, &r2)]).unwrap();
        let lhs = negativity(&mix, &part).unwrap();
        let rhs = w * negativity(&r1, &part).unwrap() + (1.0 - w) * negativity(&r2, &part).unwrap();
        prop_assert!(lhs <= rhs + 1e-10);
    }

    #[test]
    fn oracle_output_is_a_state(g in graph_strategy(5), chans in proptest::collection::vec(commuting_channel(), 5)) {
        let ch = ProductChannel::new(chans.into_iter().take(g.order()).collect()).unwrap();
        let rho = evolved_graph_state(&g, &ch).unwrap();
        let v = rho.validity();
        prop_assert!(v.is_valid(), "{:?}", v);
        let reversed: Vec<usize> = (0..g.order()).rev().collect();
        let start = DensityMatrix::from_pure(&build_graph_state(&g).unwrap());
        let other = graphent::oracle::evolve_density_in_order(&start, &ch, &reversed).unwrap();
        prop_assert!(max_abs(&(other.matrix() - rho.matrix())) <= 1e-12);
    }

    #[test]
    fn bounds_sandwich((g, part) in case_strategy(6), chans in proptest::collection::vec(commuting_channel(), 6), theta in 0.0..=std::f64::consts::FRAC_PI_2) {
        let n = g.order();
        let ch = ProductChannel::new(chans.into_iter().take(n).collect()).unwrap();
        let ens = flag_ensemble(&g, &part, &ch).unwrap();
        prop_assert!((ens.total_probability() - 1.0).abs() <= 1e-9 || ens.groups().is_empty());
        let exact = oracle_negativity(&g, &part, &ch).unwrap();
        let llb = ens.lowest_lower_bound().unwrap();
        let lb = ens.lower_bound(&MeasurementBasis::Uniform(theta)).unwrap();
        let ub = ens.upper_bound().unwrap();
        prop_assert!(llb <= lb + 1e-9, "llb {} lb {}", llb, lb);
        prop_assert!(lb <= exact + 1e-9, "lb {} exact {}", lb, exact);
        prop_assert!(exact <= ub + 1e-9, "exact {} ub {}", exact, ub);
        let d = decompose(&g, &part).unwrap();
        prop_assert_eq!(ens.non_boundary_size(), d.non_boundary_size());
    }
}
