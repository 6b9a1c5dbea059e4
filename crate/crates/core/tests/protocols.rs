use commlab::cinfo::{entropy_bits, Distribution, JointDistribution};
use commlab::cproto::{
    brute_force_one_way, builders, compress_multiround_classical, evaluate_tree, exact_error,
    privacy_loss_classical, transcript_distribution, CompressionParams, Relation,
};
use commlab::ersp::{evaluate_ersp, ErspInstance};
use commlab::linalg::{random_density, random_state};
use commlab::par::{self, Mode};
use commlab::qmath::DensityMatrix;
use commlab::qproto::demos::{argmax_relation, index_one_way, random_two_way, send_input_protocol};
use commlab::qproto::{compress_multiround_quantum, compress_one_way, quantum_privacy_loss};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform_pair(nx: usize, ny: usize) -> JointDistribution {
    JointDistribution::product(&Distribution::uniform(nx), &Distribution::uniform(ny))
}

/// `I(X : S Y)` and `I(Y : S X)` from the full joint table.
fn privacy_oracle(
    tree: &commlab::cproto::ClassicalProtocolTree,
    mx: &Distribution,
    my: &Distribution,
) -> (f64, f64) {
    let (nx, ny, t) = (tree.nx(), tree.ny(), tree.num_transcripts());
    let mut joint = vec![0.0; nx * ny * t];
    for x in 0..nx {
        for y in 0..ny {
            let d = transcript_distribution(tree, x, y).unwrap();
            for s in 0..t {
                joint[(x * ny + y) * t + s] = mx.prob(x) * my.prob(y) * d.prob(s);
            }
        }
    }
    let h_xys = entropy_bits(&joint);
    let marg = |f: &dyn Fn(usize, usize, usize) -> usize, n: usize| {
        let mut m = vec![0.0; n];
        for x in 0..nx {
            for y in 0..ny {
                for s in 0..t {
                    m[f(x, y, s)] += joint[(x * ny + y) * t + s];
                }
            }
        }
        entropy_bits(&m)
    };
    let h_ys = marg(&|_, y, s| y * t + s, ny * t);
    let h_xs = marg(&|x, _, s| x * t + s, nx * t);
    let k_a = entropy_bits(mx.probs()) + h_ys - h_xys;
    let k_b = entropy_bits(my.probs()) + h_xs - h_xys;
    (k_a, k_b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn classical_privacy_matches_joint_table(seed in any::<u64>(), rounds in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nx, ny) = (rng.random_range(1..=4), rng.random_range(1..=4));
        let tree = builders::random_tree(&mut rng, nx, ny, 2, rounds, 3).unwrap();
        let mx = Distribution::from_weights((0..nx).map(|_| 0.05 + rng.random::<f64>()).collect()).unwrap();
        let my = Distribution::from_weights((0..ny).map(|_| 0.05 + rng.random::<f64>()).collect()).unwrap();
        let (k_a, k_b) = privacy_loss_classical(&tree, &mx, &my).unwrap();
        let (o_a, o_b) = privacy_oracle(&tree, &mx, &my);
        prop_assert!((k_a - o_a).abs() <= 1e-9, "{} vs {}", k_a, o_a);
        prop_assert!((k_b - o_b).abs() <= 1e-9, "{} vs {}", k_b, o_b);
        prop_assert!(k_a >= -1e-12 && k_a <= entropy_bits(mx.probs()) + 1e-9);
    }

    #[test]
    fn transcript_laws_are_distributions(seed in any::<u64>(), rounds in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = builders::random_tree(&mut rng, 3, 2, 2, rounds, 4).unwrap();
        for x in 0..3 {
            for y in 0..2 {
                let d = transcript_distribution(&tree, x, y).unwrap();
                let s: f64 = d.probs().iter().sum();
                prop_assert!((s - 1.0).abs() <= 1e-12);
                prop_assert!(d.probs().iter().all(|&p| p >= 0.0));
            }
        }
    }

    #[test]
    fn two_way_output_laws_are_normalized(seed in any::<u64>(), t in prop::sample::select(vec![1usize, 3, 5])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_two_way(2, 2, 3, [2, 2, 2], t, &mut rng).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let law = p.output_law(x, y);
                prop_assert!((law.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
                prop_assert!((p.state(x, y, t).norm() - 1.0).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn tree_monte_carlo_tracks_exact_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let tree = builders::random_tree(&mut rng, 3, 3, 2, 3, 3).unwrap();
    let rel = builders::random_relation(&mut rng, 3, 3, 2, 0.2).unwrap();
    let mu = uniform_pair(3, 3);
    let exact = exact_error(&tree, &rel, &mu).unwrap();
    let ev = evaluate_tree(&tree, &rel, &mu, 50_000, 8, Mode::Parallel).unwrap();
    assert!(
        (ev.error_rate - exact).abs() <= 4.0 * ev.sigma_floor(),
        "{} vs {exact}",
        ev.error_rate
    );
}

#[test]
fn brute_force_equality_needs_full_input() {
    let rel = builders::equality_relation(2).unwrap();
    let opt = brute_force_one_way(&rel, &uniform_pair(4, 4), 0.0).unwrap();
    assert_eq!(opt.bits, 2);
    assert!(opt
        .min_error_by_bits
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12));
    // a message class of size s errs on min(s, s² − s) of the 16 pairs, so one
    // bit is best spent isolating a single input: 3/16
    assert!((opt.min_error_by_bits[1] - 3.0 / 16.0).abs() < 1e-12);
    assert!((opt.min_error_by_bits[0] - 0.25).abs() < 1e-12);
}

#[test]
fn direct_sum_relation_is_product() {
    let rel = Relation::function(2, 2, 2, |x, y| x & y).unwrap();
    let two = rel.direct_sum(2).unwrap();
    assert_eq!((two.nx(), two.ny(), two.nz()), (4, 4, 4));
    for x in 0..4 {
        for y in 0..4 {
            for z in 0..4 {
                let ok = rel.allows(x >> 1, y >> 1, z >> 1) && rel.allows(x & 1, y & 1, z & 1);
                assert_eq!(two.allows(x, y, z), ok);
            }
        }
    }
}

#[test]
fn index_message_leaks_two_bits() {
    let (p, rel) = index_one_way(4).unwrap();
    let mx = Distribution::uniform(16);
    assert!((p.privacy_loss(&mx).unwrap() - 2.0).abs() < 1e-10);
    let c = compress_one_way(&p, &rel, &uniform_pair(16, 4), 0.2).unwrap();
    let ev = c.evaluate(40_000, 17, Mode::Parallel).unwrap();
    assert!((ev.error_rate - c.exact_error()).abs() <= 4.0 * ev.sigma_floor());
}

#[test]
fn sending_the_input_leaks_its_entropy() {
    let (p, _) = send_input_protocol(8).unwrap();
    let l = quantum_privacy_loss(&p, &uniform_pair(8, 1), 1).unwrap();
    assert!((l - 3.0).abs() < 1e-10);
}

#[test]
fn modes_and_thread_counts_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let tree = builders::random_tree(&mut rng, 3, 3, 2, 2, 3).unwrap();
    let rel = builders::random_relation(&mut rng, 3, 3, 2, 0.6).unwrap();
    let (mx, my) = (Distribution::uniform(3), Distribution::uniform(3));
    let comp = compress_multiround_classical(&tree, &rel, &mx, &my, CompressionParams::new(0.1, 4))
        .unwrap();
    let seq = comp.evaluate(3000, 5, Mode::Sequential).unwrap();
    assert_eq!(seq, comp.evaluate(3000, 5, Mode::Parallel).unwrap());
    assert_eq!(
        seq,
        par::with_threads(Some(3), || comp.evaluate(3000, 5, Mode::Parallel).unwrap())
    );

    let p = random_two_way(2, 2, 2, [2, 2, 2], 3, &mut rng).unwrap();
    let qrel = argmax_relation(&p).unwrap();
    let mq = compress_multiround_quantum(&p, &qrel, &uniform_pair(2, 2), 1, 0.2).unwrap();
    assert_eq!(
        mq.evaluate(2000, 6, Mode::Sequential).unwrap(),
        mq.evaluate(2000, 6, Mode::Parallel).unwrap()
    );

    let sigma = DensityMatrix::new(random_density(3, 3, &mut rng)).unwrap();
    let inst = ErspInstance::new(vec![random_state(3, &mut rng)], sigma).unwrap();
    let a = evaluate_ersp(&inst, 0, 1 << 16, 2000, 7, Mode::Sequential).unwrap();
    let b = par::with_threads(Some(2), || {
        evaluate_ersp(&inst, 0, 1 << 16, 2000, 7, Mode::Parallel).unwrap()
    });
    assert_eq!(a, b);
}
