use proptest::prelude::*;

use qrandlab::infotheory::{
    entropy_lower_bound_check, entropy_upper_bound_check, flatten_distribution, step_family,
    ui_profile, uniformity_dominance, StepFamily,
};
use qrandlab::linalg::{
    eigendecompose, projection_weight, shannon_entropy, tau_weight, top_k_projector, top_k_sum,
    von_neumann_entropy, DensityOperator, Projection,
};
use qrandlab::random::{random_density, random_descending, random_projection, seeded};
use qrandlab::rtests::{block_qstest, evaluate_failure, pad_to_multiple};
use qrandlab::states::{
    block_state, check_coherence, pure_bitstring_state, tensor_power_state, tracial_state,
    BitSource,
};

fn spectrum_strategy() -> impl Strategy<Value = Vec<f64>> {
    (any::<u64>(), 1usize..=8, 0.2f64..12.0)
        .prop_map(|(seed, n, spread)| random_descending(&mut seeded(seed), 1 << n, spread))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn projection_weight_below_top_k_sum(seed in any::<u64>(), qubits in 1usize..=3, frac in 0.0f64..1.0) {
        let mut rng = seeded(seed);
        let d = random_density(&mut rng, qubits);
        let dim = 1usize << qubits;
        let k = 1 + ((dim - 1) as f64 * frac) as usize;
        let g = random_projection(&mut rng, qubits, k);
        let spec = eigendecompose(&d).unwrap();
        let top = top_k_sum(&spec, k).unwrap();
        prop_assert!(projection_weight(&d, &g).unwrap() <= top + 1e-9);
        let best = top_k_projector(&spec, k).unwrap();
        prop_assert!((projection_weight(&d, &best).unwrap() - top).abs() < 1e-9);
    }

    #[test]
    fn entropy_is_additive(seed in any::<u64>(), a in 1usize..=3, b in 1usize..=2) {
        let mut rng = seeded(seed);
        let x = random_density(&mut rng, a);
        let y = random_density(&mut rng, b);
        let joint = x.tensor(&y).unwrap();
        let h = von_neumann_entropy(&joint.materialize().unwrap()).unwrap();
        let sum = von_neumann_entropy(&x).unwrap() + von_neumann_entropy(&y).unwrap();
        prop_assert!((h - sum).abs() < 1e-9);
    }

    #[test]
    fn partial_trace_undoes_tensor(seed in any::<u64>(), a in 1usize..=3, b in 1usize..=3) {
        let mut rng = seeded(seed);
        let x = random_density(&mut rng, a);
        let y = random_density(&mut rng, b);
        let joint = x.tensor(&y).unwrap().materialize().unwrap();
        let back = joint.partial_trace_k(b).unwrap();
        prop_assert!(back.max_abs_diff(&x).unwrap() < 1e-12);
    }

    #[test]
    fn spectra_are_sorted_distributions(seed in any::<u64>(), qubits in 1usize..=4) {
        let d = random_density(&mut seeded(seed), qubits);
        let s = eigendecompose(&d).unwrap();
        prop_assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!((s.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(s.values().iter().all(|&x| x >= 0.0));
        let r = s.reconstruct().unwrap();
        prop_assert!(r.max_abs_diff(&d.to_matrix().unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn flattening_never_raises_entropy(alpha in spectrum_strategy(), eps in 0.05f64..0.95) {
        let f = flatten_distribution(&alpha, eps).unwrap();
        let h_alpha = shannon_entropy(&alpha).unwrap();
        let h_p = shannon_entropy(&f.p).unwrap();
        prop_assert!(h_p <= h_alpha + 1e-9, "H(p) = {h_p} > H(α) = {h_alpha}");
        prop_assert!(uniformity_dominance(&f.p, &alpha).unwrap());
        let level = alpha[f.cut - 1];
        prop_assert!(1.0 - level <= f.mass + 1e-12 && f.mass <= 1.0 + 1e-12);
        prop_assert!((f.p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for i in 0..alpha.len() {
            if i < f.cut {
                prop_assert_eq!(f.r[i], alpha[i]);
            } else if i < f.xi_index {
                prop_assert_eq!(f.r[i], level);
            } else {
                prop_assert_eq!(f.r[i], 0.0);
            }
        }
    }

    #[test]
    fn dominance_implies_entropy_order(alpha in spectrum_strategy(), eps in 0.05f64..0.95) {
        // p = flatten(α).p dominates α on its support
        let f = flatten_distribution(&alpha, eps).unwrap();
        if uniformity_dominance(&f.p, &alpha).unwrap() {
            prop_assert!(shannon_entropy(&alpha).unwrap() >= shannon_entropy(&f.p).unwrap() - 1e-9);
        }
    }

    #[test]
    fn lower_bound_is_strict_under_premise(seed in any::<u64>(), n in 4usize..=10, eps in 0.1f64..0.6, delta in 0.05f64..0.49) {
        let alpha = random_descending(&mut seeded(seed), 1 << n, 0.5);
        let c = entropy_lower_bound_check(&alpha, eps, delta).unwrap();
        if c.applicable {
            prop_assert!(c.entropy > c.bound, "{c:?}");
        }
    }

    #[test]
    fn upper_bound_and_block_average(alpha in spectrum_strategy(), mfrac in 0.0f64..=1.0) {
        let n = alpha.len().trailing_zeros() as usize;
        let m = (n as f64 * mfrac).round() as usize;
        let c = entropy_upper_bound_check(&alpha, m).unwrap();
        prop_assert!(c.holds(1e-9), "{c:?}");
        prop_assert!(c.intermediate_holds(1e-9), "{c:?}");
    }

    #[test]
    fn prefixes_carry_the_most_mass(alpha in spectrum_strategy(), cuts in prop::collection::vec((0.0f64..1.0, 0.0f64..0.3), 1..6)) {
        let n = alpha.len().trailing_zeros() as usize;
        let mut members: Vec<Vec<f64>> = (1..n).map(|k| vec![1.0 / (1u64 << k) as f64; 1 << k]).collect();
        members.push(alpha);
        let fam = StepFamily::from_spectra(members).unwrap();
        let w: Vec<(f64, f64)> = cuts.iter().map(|&(a, len)| (a, (a + len).min(1.0))).collect();
        let mu = qrandlab::infotheory::union_measure(&w);
        prop_assert!(fam.integral_over(n, &w).unwrap() <= fam.prefix_integral(n, mu).unwrap() + 1e-12);
    }

    #[test]
    fn padding_preserves_weights(seed in any::<u64>(), u in 1usize..=5, k in 1usize..=4) {
        let mut rng = seeded(seed);
        let dim = 1usize << u;
        let mut idx: Vec<usize> = (0..dim).filter(|_| rand::Rng::random::<bool>(&mut rng)).collect();
        if idx.is_empty() { idx.push(0); }
        let t = Projection::basis_subset(u, idx).unwrap();
        let c = pad_to_multiple(&t, k).unwrap();
        prop_assert_eq!(c.qubits() % k, 0);
        prop_assert_eq!(tau_weight(&c), tau_weight(&t));
        let factor = DensityOperator::diagonal(random_descending(&mut rng, 2, 1.0)).unwrap();
        let states = [
            tracial_state(12).unwrap(),
            block_state(12).unwrap(),
            pure_bitstring_state(BitSource::Seeded { seed }, 12).unwrap(),
            tensor_power_state(factor, 12).unwrap(),
        ];
        for s in &states {
            let a = projection_weight(&s.rho(u).unwrap(), &t).unwrap();
            let b = projection_weight(&s.rho(c.qubits()).unwrap(), &c).unwrap();
            prop_assert!((a - b).abs() < 1e-10, "{}: {a} vs {b}", s.name());
        }
    }

    #[test]
    fn dense_padding_preserves_weights(seed in any::<u64>(), u in 1usize..=3, k in 2usize..=3) {
        let mut rng = seeded(seed);
        let t = random_projection(&mut rng, u, 1);
        let c = pad_to_multiple(&t, k).unwrap();
        let d = random_density(&mut rng, 2);
        let s = tensor_power_state(d, 6).unwrap();
        let a = projection_weight(&s.rho(u).unwrap(), &t).unwrap();
        let b = projection_weight(&s.rho(c.qubits()).unwrap(), &c).unwrap();
        prop_assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn tracial_never_fails_geometric_tests(depth in 1usize..=6, delta in 0.5f64..1.0) {
        let t = block_qstest(depth).unwrap();
        let rep = evaluate_failure(&tracial_state(30).unwrap(), &t, delta, depth).unwrap();
        prop_assert!(rep.witnesses.is_empty());
    }

    #[test]
    fn tensor_powers_are_coherent(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = seeded(seed);
        let d = DensityOperator::diagonal(random_descending(&mut rng, 1 << k, 2.0)).unwrap();
        let s = tensor_power_state(d, 12).unwrap();
        prop_assert!(check_coherence(&s, 12, 1e-8).unwrap().passed());
    }

    #[test]
    fn step_members_integrate_to_one_and_decrease(seed in any::<u64>(), k in 1usize..=2) {
        let mut rng = seeded(seed);
        let d = random_density(&mut rng, k);
        let s = tensor_power_state(d, 6).unwrap();
        let fam = step_family(&s, 6).unwrap();
        for n in 1..=6 {
            prop_assert!((fam.total(n).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!(fam.spectrum(n).unwrap().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn ui_modulus_grows_as_delta_shrinks(seed in any::<u64>()) {
        let mut rng = seeded(seed);
        let d = DensityOperator::diagonal(random_descending(&mut rng, 2, 1.0)).unwrap();
        let fam = step_family(&tensor_power_state(d, 10).unwrap(), 10).unwrap();
        let deltas = [0.9, 0.7, 0.5, 0.3, 0.2, 0.1, 0.05];
        let prof = ui_profile(&fam, &deltas, 10).unwrap();
        let mut last = 0usize;
        for e in &prof.entries {
            match e.modulus {
                Some(m) => { prop_assert!(m >= last); last = m; }
                None => last = usize::MAX,
            }
        }
    }
}
