use crate::cinfo::{kl_bits, Distribution};
use crate::error::{Error, Result};
use crate::par;

use super::tree::{ClassicalProtocolTree, Party};

/// `(k_a, k_b) = (I(X:M), I(Y:M))` for the full transcript `M` under the
/// product prior `μ_X × μ_Y`.
///
/// Uses the private-coin factorization `p^{x,y}(s) = A_x(s) B_y(s)`, so the
/// cost is linear in `|X| + |Y|` rather than in `|X|·|Y|`.
pub fn privacy_loss_classical(
    tree: &ClassicalProtocolTree,
    mu_x: &Distribution,
    mu_y: &Distribution,
) -> Result<(f64, f64)> {
    if mu_x.len() != tree.nx() || mu_y.len() != tree.ny() {
        return Err(Error::AlphabetMismatch(
            "prior does not match protocol inputs".into(),
        ));
    }
    let t = tree.num_transcripts();
    let mean = |party: Party, mu: &Distribution| -> Vec<f64> {
        let rows = par::map_indexed(mu.len() as u64, |i| {
            let w = mu.prob(i as usize);
            if w == 0.0 {
                return vec![0.0; t];
            }
            tree.party_weights(party, i as usize)
                .into_iter()
                .map(|v| v * w)
                .collect::<Vec<f64>>()
        });
        let mut acc = vec![0.0; t];
        for r in rows {
            for (a, v) in acc.iter_mut().zip(r) {
                *a += v;
            }
        }
        acc
    };
    let a_bar = mean(Party::Alice, mu_x);
    let b_bar = mean(Party::Bob, mu_y);
    let p: Vec<f64> = a_bar.iter().zip(&b_bar).map(|(a, b)| a * b).collect();
    let loss = |party: Party, mu: &Distribution, other: &[f64]| -> f64 {
        par::map_indexed(mu.len() as u64, |i| {
            let w = mu.prob(i as usize);
            if w == 0.0 {
                return 0.0;
            }
            let cond: Vec<f64> = tree
                .party_weights(party, i as usize)
                .iter()
                .zip(other)
                .map(|(a, b)| a * b)
                .collect();
            w * kl_bits(&cond, &p)
        })
        .into_iter()
        .sum()
    };
    let ka = loss(Party::Alice, mu_x, &b_bar);
    let kb = loss(Party::Bob, mu_y, &a_bar);
    Ok((ka.max(0.0), kb.max(0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cinfo::{entropy_bits, mutual_information_table};
    use crate::cproto::builders;
    use crate::cproto::tree::transcript_probs;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// I(X:M) and I(Y:M) from the full joint table of (x, y, s).
    fn oracle(tree: &ClassicalProtocolTree, mx: &Distribution, my: &Distribution) -> (f64, f64) {
        let t = tree.num_transcripts();
        let mut xm = vec![vec![0.0; t]; tree.nx()];
        let mut ym = vec![vec![0.0; t]; tree.ny()];
        for x in 0..tree.nx() {
            for y in 0..tree.ny() {
                let d = transcript_probs(tree, x, y).unwrap();
                for s in 0..t {
                    let v = mx.prob(x) * my.prob(y) * d[s];
                    xm[x][s] += v;
                    ym[y][s] += v;
                }
            }
        }
        (mutual_information_table(&xm), mutual_information_table(&ym))
    }

    #[test]
    fn examples() {
        let t = builders::send_input(4).unwrap();
        let (ka, kb) =
            privacy_loss_classical(&t, &Distribution::uniform(4), &Distribution::uniform(1))
                .unwrap();
        assert!((ka - 2.0).abs() < 1e-12 && kb.abs() < 1e-12);

        let t = builders::constant_tree(3, 3, 2).unwrap();
        let (ka, kb) =
            privacy_loss_classical(&t, &Distribution::uniform(3), &Distribution::uniform(3))
                .unwrap();
        assert_eq!((ka, kb), (0.0, 0.0));

        // 16-bit database, Bob sends 1 index bit, Alice replies with 8 bits
        let (t, _) = builders::index_tradeoff(16, 1).unwrap();
        let (ka, kb) = privacy_loss_classical(
            &t,
            &Distribution::uniform(1 << 16),
            &Distribution::uniform(16),
        )
        .unwrap();
        assert!((ka - 8.0).abs() < 1e-9, "{ka}");
        assert!((kb - 1.0).abs() < 1e-12);
    }

    #[test]
    fn matches_joint_table_and_entropy_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        for rounds in 1..=4 {
            let t = builders::random_tree(&mut rng, 3, 4, 2, rounds, 3).unwrap();
            let mx = Distribution::from_weights(vec![1.0, 2.0, 0.5]).unwrap();
            let my = Distribution::from_weights(vec![3.0, 1.0, 1.0, 2.0]).unwrap();
            let (ka, kb) = privacy_loss_classical(&t, &mx, &my).unwrap();
            let (oa, ob) = oracle(&t, &mx, &my);
            assert!((ka - oa).abs() < 1e-10 && (kb - ob).abs() < 1e-10);
            let avg = crate::cproto::average_transcripts(&t, &mx, &my).unwrap();
            let h = entropy_bits(&avg.p);
            assert!(ka <= h + 1e-10 && kb <= h + 1e-10);
        }
    }
}
