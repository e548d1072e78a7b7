use kfusion::fusion::{
    max_rule, max_supports, mean_rule, mean_supports, min_rule, min_supports, predict_baseline, product_rule,
    product_supports, vote,
};
use kfusion::{DecisionProfile, DecisionTemplates, Method};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Profiles with continuous entries, so ties have probability zero.
fn random_profile(rng: &mut impl Rng, bn: usize, cn: usize) -> DecisionProfile {
    DecisionProfile::new(bn, cn, (0..bn * cn).map(|_| rng.gen()).collect()).unwrap()
}

fn random_templates(rng: &mut impl Rng, bn: usize, cn: usize) -> (Vec<DecisionProfile>, Vec<usize>) {
    let n = 3 * cn;
    let profiles = (0..n).map(|_| random_profile(rng, bn, cn)).collect();
    (profiles, (0..n).map(|i| i % cn).collect())
}

fn supports(m: Method, p: &DecisionProfile, t: &DecisionTemplates) -> Vec<f64> {
    match m {
        Method::Vote => {
            let mut counts = vec![0.0; p.num_classes()];
            p.rows().for_each(|r| counts[kfusion::argmax(r)] += 1.0);
            counts
        }
        Method::Mean => mean_supports(p),
        Method::Max => max_supports(p),
        Method::Min => min_supports(p),
        Method::Product => product_supports(p),
        Method::DtEuclidean => t.euclidean_similarities(p).unwrap(),
        Method::DtSymDiff => t.symdiff_similarities(p).unwrap(),
        Method::DempsterShafer => t.ds_supports(p).unwrap(),
        Method::Nnklms => unreachable!(),
    }
}

fn permute_columns(p: &DecisionProfile, perm: &[usize]) -> DecisionProfile {
    let (bn, cn) = p.shape();
    let mut v = vec![0.0; bn * cn];
    for i in 0..bn {
        for j in 0..cn {
            v[i * cn + perm[j]] = p.get(i, j);
        }
    }
    DecisionProfile::new(bn, cn, v).unwrap()
}

fn permute_rows(p: &DecisionProfile, perm: &[usize]) -> DecisionProfile {
    let rows: Vec<Vec<f64>> = perm.iter().map(|&i| p.row(i).to_vec()).collect();
    DecisionProfile::from_rows(&rows).unwrap()
}

proptest! {
    #[test]
    fn class_permutation_moves_decisions(seed in any::<u64>(), bn in 1usize..5, cn in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (train, labels) = random_templates(&mut rng, bn, cn);
        let mut perm: Vec<usize> = (0..cn).collect();
        perm.shuffle(&mut rng);
        let t = DecisionTemplates::build(&train, &labels, cn).unwrap();
        let train_p: Vec<_> = train.iter().map(|p| permute_columns(p, &perm)).collect();
        let labels_p: Vec<usize> = labels.iter().map(|&l| perm[l]).collect();
        let t_p = DecisionTemplates::build(&train_p, &labels_p, cn).unwrap();
        let p = random_profile(&mut rng, bn, cn);
        let q = permute_columns(&p, &perm);
        for m in Method::BASELINES {
            let sp = supports(m, &p, &t);
            let sq = supports(m, &q, &t_p);
            let (a, b) = (predict_baseline(m, &p, &t).unwrap(), predict_baseline(m, &q, &t_p).unwrap());
            let best = sp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let winners: Vec<usize> = (0..cn).filter(|&c| sp[c] == best).collect();
            if winners.len() == 1 {
                prop_assert_eq!(perm[a], b, "{}", m);
            } else {
                prop_assert_eq!(a, winners[0], "{}", m);
                prop_assert_eq!(b, (0..cn).find(|&c| sq[c] == best).unwrap(), "{}", m);
            }
        }
    }

    #[test]
    fn classifier_order_is_irrelevant(seed in any::<u64>(), bn in 1usize..5, cn in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (train, labels) = random_templates(&mut rng, bn, cn);
        let mut perm: Vec<usize> = (0..bn).collect();
        perm.shuffle(&mut rng);
        let t = DecisionTemplates::build(&train, &labels, cn).unwrap();
        let train_p: Vec<_> = train.iter().map(|p| permute_rows(p, &perm)).collect();
        let t_p = DecisionTemplates::build(&train_p, &labels, cn).unwrap();
        let p = random_profile(&mut rng, bn, cn);
        let q = permute_rows(&p, &perm);
        for m in Method::BASELINES {
            prop_assert_eq!(predict_baseline(m, &p, &t).unwrap(), predict_baseline(m, &q, &t_p).unwrap(), "{}", m);
        }
    }

    #[test]
    fn identical_rows_make_the_simple_rules_agree(seed in any::<u64>(), bn in 1usize..5, cn in 2usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row: Vec<f64> = (0..cn).map(|_| rng.gen()).collect();
        let p = DecisionProfile::from_rows(&vec![row; bn]).unwrap();
        let v = vote(&p);
        prop_assert_eq!(mean_rule(&p), v);
        prop_assert_eq!(max_rule(&p), v);
        prop_assert_eq!(min_rule(&p), v);
        prop_assert_eq!(product_rule(&p), v);
    }

    #[test]
    fn raising_a_support_never_hurts_that_class(
        seed in any::<u64>(), bn in 1usize..5, cn in 2usize..5, bump in 0.0f64..1.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = random_profile(&mut rng, bn, cn);
        let before = mean_rule(&p);
        let row = rng.gen_range(0..bn);
        let mut v = p.as_flat().to_vec();
        v[row * cn + before] = (v[row * cn + before] + bump).min(1.0);
        let q = DecisionProfile::new(bn, cn, v).unwrap();
        prop_assert_eq!(mean_rule(&q), before);
        let target = rng.gen_range(0..cn);
        let mut v = p.as_flat().to_vec();
        v[row * cn + target] = (v[row * cn + target] + bump).min(1.0);
        let r = DecisionProfile::new(bn, cn, v).unwrap();
        let after = mean_rule(&r);
        prop_assert!(after == before || after == target);
    }
}

#[test]
fn rules_are_pure() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let (train, labels) = random_templates(&mut rng, 3, 3);
    let t = DecisionTemplates::build(&train, &labels, 3).unwrap();
    let p = random_profile(&mut rng, 3, 3);
    for m in Method::BASELINES {
        let first = predict_baseline(m, &p, &t).unwrap();
        for _ in 0..5 {
            assert_eq!(predict_baseline(m, &p, &t).unwrap(), first);
        }
    }
    assert_eq!(mean_supports(&p), mean_supports(&p));
}

#[test]
fn shape_mismatch_is_an_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (train, labels) = random_templates(&mut rng, 2, 2);
    let t = DecisionTemplates::build(&train, &labels, 2).unwrap();
    let wrong = random_profile(&mut rng, 3, 2);
    for m in [Method::DempsterShafer, Method::DtEuclidean, Method::DtSymDiff] {
        assert!(predict_baseline(m, &wrong, &t).is_err());
    }
}
