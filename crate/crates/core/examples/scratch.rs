use std::time::Instant;

use qcem::channels;
use qcem::entropy;
use qcem::linalg::ComplexMatrix;
use qcem::majorize::{self, CondMode};
use qcem::states::{self, SampleKind};

fn random_joint(rows: usize, cols: usize, seed: u64) -> majorize::ClassicalJoint {
    let mut rng = qcem::rng::Rng::new(seed, 0x4a4f494e);
    let mut probs: Vec<f64> = (0..rows * cols).map(|_| rng.u01()).collect();
    let total: f64 = probs.iter().sum();
    for p in &mut probs {
        *p /= total;
    }
    majorize::ClassicalJoint::new(rows, cols, probs).unwrap()
}

fn main() {
    for k in 2..=5usize {
        let phi = states::maximally_entangled(k);
        let t = Instant::now();
        let h = entropy::hmin_up(&phi).unwrap();
        println!("hmin_up(phi_{k}) = {:+.9}  in {:?}", h.value, t.elapsed());
    }

    // complex cond_majorizes at (2,2) -> (2,2)
    let rho = states::sample_random((2, 2), SampleKind::Ginibre, 11);
    let n = channels::ChoiChannel::identity(2, 2);
    let sigma = channels::apply(&n, &rho).unwrap();
    let t = Instant::now();
    let v = majorize::cond_majorizes(&rho, &sigma, CondMode::LocallyBalanced).unwrap();
    println!("cond_majorizes complex (2,2) identity pair: holds={} margin={:.2e} in {:?}", v.holds, v.margin, t.elapsed());

    let rho = states::sample_random((2, 2), SampleKind::Ginibre, 12);
    let sig = states::sample_random((2, 2), SampleKind::Ginibre, 13);
    let t = Instant::now();
    let v = majorize::cond_majorizes(&rho, &sig, CondMode::LocallyBalanced).unwrap();
    println!("cond_majorizes complex (2,2) random pair: holds={} margin={:.2e} in {:?}", v.holds, v.margin, t.elapsed());

    // (3,3) complex pair, the largest criterion-9 shape if used
    let rho = states::sample_random((3, 3), SampleKind::Ginibre, 14);
    let sig = states::sample_random((3, 3), SampleKind::Ginibre, 15);
    let t = Instant::now();
    let v = majorize::cond_majorizes(&rho, &sig, CondMode::LocallyBalanced).unwrap();
    println!("cond_majorizes complex (3,3) random pair: holds={} margin={:.2e} in {:?}", v.holds, v.margin, t.elapsed());

    // classical 3x3 agreement pair
    let t = Instant::now();
    let mut quantum = std::time::Duration::ZERO;
    for seed in 0..10u64 {
        let p = random_joint(3, 3, 1000 + seed);
        let q = random_joint(3, 3, 2000 + seed);
        let c = majorize::classical_cond_majorizes(&p, &q).unwrap();
        let tq = Instant::now();
        let v = majorize::cond_majorizes(
            &states::classical_embed(&p),
            &states::classical_embed(&q),
            CondMode::LocallyBalanced,
        )
        .unwrap();
        quantum += tq.elapsed();
        assert_eq!(c.holds, v.holds);
    }
    println!("10 classical agreement pairs in {:?} (quantum part {quantum:?})", t.elapsed());

    // spectral-vs-sdp majorization, dim 3
    let t = Instant::now();
    for seed in 0..10u64 {
        let a = states::sample_random((3, 1), SampleKind::Ginibre, 3000 + seed);
        let b = states::sample_random((3, 1), SampleKind::Ginibre, 4000 + seed);
        let s = majorize::majorizes(&a, &b).unwrap();
        let v = majorize::majorizes_via_sdp(&a, &b).unwrap();
        assert_eq!(s.holds, v.holds, "seed {seed}");
    }
    println!("10 spectral-vs-sdp dim-3 pairs in {:?}", t.elapsed());

    // criterion 2/3 corpus scale: entropies on (3,3)
    let kinds = [
        entropy::DivergenceKind::Umegaki,
        entropy::DivergenceKind::Petz(0.5),
        entropy::DivergenceKind::Petz(2.0),
        entropy::DivergenceKind::Sandwiched(0.5),
        entropy::DivergenceKind::Sandwiched(2.0),
        entropy::DivergenceKind::MaxRelative,
    ];
    let t = Instant::now();
    for seed in 0..100u64 {
        let rho = states::sample_random((3, 3), SampleKind::Ginibre, 5000 + seed);
        let h = entropy::hmin(&rho);
        for kind in kinds {
            let v = entropy::conditional_entropy(kind, &rho).unwrap();
            assert!(v.value >= h.value - 1e-6);
        }
    }
    println!("100 (3,3) corpus states x 6 kinds + hmin in {:?}", t.elapsed());

    // additivity scale check: (2,2) x (2,2) tensor through all kinds
    let t = Instant::now();
    for seed in 0..10u64 {
        let a = states::sample_random((2, 2), SampleKind::Ginibre, 6000 + seed);
        let b = states::sample_random((2, 2), SampleKind::Ginibre, 7000 + seed);
        let ab = states::tensor(&a, &b);
        for kind in kinds {
            let va = entropy::conditional_entropy(kind, &a).unwrap();
            let vb = entropy::conditional_entropy(kind, &b).unwrap();
            let vab = entropy::conditional_entropy(kind, &ab).unwrap();
            assert!((vab.value - va.value - vb.value).abs() < 1e-8, "{kind:?}");
        }
    }
    println!("10 additivity tensor pairs x 6 kinds in {:?}", t.elapsed());

    // hmin_up monotonicity scale: (2,2) through b-controlled
    let t = Instant::now();
    for seed in 0..10u64 {
        let rho = states::sample_random((2, 2), SampleKind::Ginibre, 8000 + seed);
        let _ = entropy::hmin_up(&rho).unwrap();
    }
    println!("10 hmin_up (2,2) solves in {:?}", t.elapsed());

    let _ = ComplexMatrix::identity(2);
}
