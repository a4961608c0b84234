use qpair::classify::{classify_state, Verdict};
use qpair::coupling::{coupled_basis, coupled_mixture, paraqutrit_d_family, CoupledWeights};
use qpair::io;
use qpair::matcore::{partial_trace, BipartiteDims, Subsystem};
use qpair::measurement::{conditional_and_marginals, joint_distribution, sample_joint_counts, Analyzer};
use qpair::random;
use qpair::states::DensityMatrix;
use qpair::tomography::{reconstruct, simulate_series, SeriesMode};
use qpair::HalfInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn h(twice: i32) -> HalfInt {
    HalfInt::from_twice(twice)
}

#[test]
fn tomography_of_a_marginal_recovers_it() {
    let rho = paraqutrit_d_family(0.4).unwrap();
    let qutrit = rho.marginal(Subsystem::B).unwrap();
    let back = reconstruct(&simulate_series(&qutrit, SeriesMode::Exact).unwrap()).unwrap();
    assert!(back.matrix().frobenius_distance(qutrit.matrix()) < 1e-8);
}

#[test]
fn state_survives_json_then_classifies_the_same() {
    let dims = BipartiteDims { a: 2, b: 3 };
    let w = CoupledWeights::new([(h(3), h(-1), 0.7), (h(1), h(-1), 0.3)]).unwrap();
    let rho = coupled_mixture(dims, &w).unwrap();
    let text = io::to_json_string(&io::density_to_value(&rho)).unwrap();
    let back = io::density_from_value(serde_json::from_str(&text).unwrap()).unwrap();
    let (a, b) = (
        classify_state(&rho, 1e-9).unwrap(),
        classify_state(&back, 1e-9).unwrap(),
    );
    assert_eq!(a, b);
    assert_eq!(a.verdict, Verdict::Entangled);
}

#[test]
fn joint_table_marginals_match_predictions() {
    let dims = BipartiteDims { a: 2, b: 3 };
    let basis = coupled_basis(dims).unwrap();
    let w = CoupledWeights::uniform(&basis);
    let rho = basis.mixture(&w).unwrap();
    let joint = joint_distribution(&rho, &Analyzer::standard(2), &Analyzer::standard(3)).unwrap();
    let corr = conditional_and_marginals(&joint);
    let pa = basis.predicted_marginal_a(&w).unwrap();
    let pb = basis.predicted_marginal_b(&w).unwrap();
    for (x, y) in corr.marginal_a.iter().zip(&pa).chain(corr.marginal_b.iter().zip(&pb)) {
        assert!((x - y).abs() < 1e-12);
    }
    let rb = partial_trace(rho.matrix(), dims, Subsystem::A).unwrap();
    for (k, p) in corr.marginal_b.iter().enumerate() {
        assert!((rb[(k, k)].re - p).abs() < 1e-12);
    }
}

#[test]
fn sampled_joint_counts_follow_the_table() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dims = BipartiteDims { a: 2, b: 3 };
    let rho = DensityMatrix::bipartite(random::density_matrix(6, &mut rng), dims).unwrap();
    let (aa, ab) = (Analyzer::standard(2), Analyzer::standard(3));
    let joint = joint_distribution(&rho, &aa, &ab).unwrap();
    let shots = 400_000;
    let counts = sample_joint_counts(&rho, &aa, &ab, shots, 17).unwrap();
    for (m, row) in counts.iter().enumerate() {
        for (n, &k) in row.iter().enumerate() {
            let p = joint.get(m, n);
            let sigma = (p * (1.0 - p) / shots as f64).sqrt();
            let freq = k as f64 / shots as f64;
            assert!((freq - p).abs() < 5.0 * sigma + 1e-12, "({m},{n}): {freq} vs {p}");
        }
    }
}

#[test]
fn local_unitaries_keep_separable_mixes_separable() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rho = paraqutrit_d_family(0.0).unwrap();
    for _ in 0..20 {
        let u = qpair::matcore::tensor(&random::unitary(2, &mut rng), &random::unitary(3, &mut rng));
        let moved = rho.evolve(&u).unwrap();
        assert_eq!(classify_state(&moved, 1e-9).unwrap().verdict, Verdict::SeparableMix);
    }
}
