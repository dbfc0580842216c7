mod common;

use common::*;
use pseudolabel::corpus::{Corpus, TaskKind, TokenSequence};
use pseudolabel::crf::{crf_gradient, crf_train};
use pseudolabel::learner::TrainHyper;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn viterbi_and_marginals_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let (model, _) = random_crf(&mut rng, 4, 4, 2.0);
        let len = rng.gen_range(1..=4);
        let tokens = random_tokens(&mut rng, len);
        let paths = all_paths(model.num_labels(), len);
        let scores: Vec<f64> = paths.iter().map(|p| path_score(&model, &tokens, p)).collect();
        let log_z = log_sum_exp(&scores);

        // first maximal path in lexicographic order = lower-index tie-break
        let best = (0..paths.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
        let pred = model.viterbi(&tokens).unwrap();
        let idx = model.label_indices(&pred.labels).unwrap();
        assert_eq!(idx, paths[best]);

        let (marg, z) = model.forward_backward(&tokens).unwrap();
        assert!((z - log_z).abs() < 1e-9);
        assert!(scores.iter().all(|&s| z >= s - 1e-12));
        for j in 0..len {
            for y in 0..model.num_labels() {
                let m: f64 = paths
                    .iter()
                    .zip(&scores)
                    .filter(|(p, _)| p[j] == y)
                    .map(|(_, s)| (s - log_z).exp())
                    .sum();
                assert!((marg.get(j, y) - m).abs() < 1e-8, "marginal {j},{y}");
            }
            assert!((marg.row(j).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        // confidence of the Viterbi label is its marginal
        for (j, &y) in idx.iter().enumerate() {
            assert!((pred.confidences[j] - marg.get(j, y)).abs() < 1e-12);
        }
    }
}

#[test]
fn score_sequence_matches_template_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let (model, batch) = random_crf(&mut rng, 5, 3, 1.0);
        let ex = &batch[0];
        let path = model.label_indices(ex.tags().unwrap()).unwrap();
        let s = model.score_sequence(&ex.tokens, ex.tags().unwrap()).unwrap();
        assert!((s - path_score(&model, &ex.tokens, &path)).abs() < 1e-12);
    }
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let h = 1e-5;
    for _ in 0..100 {
        let (model, batch) = random_crf(&mut rng, 3, 3, 1.0);
        let l2 = rng.gen_range(0.0..0.5);
        let (loss, grad) = crf_gradient(&model, &batch, l2).unwrap();
        assert!(rel_close(loss, crf_loss_brute(&model, &batch, l2), 1e-10));
        for i in 0..model.emission().len() {
            let mut p = model.clone();
            p.emission_mut()[i] += h;
            let mut m = model.clone();
            m.emission_mut()[i] -= h;
            let fd = (crf_loss_brute(&p, &batch, l2) - crf_loss_brute(&m, &batch, l2)) / (2.0 * h);
            assert!(rel_close(grad.emission[i], fd, 1e-5), "emission {i}: {} vs {fd}", grad.emission[i]);
        }
        for i in 0..model.transition().len() {
            let mut p = model.clone();
            p.transition_mut()[i] += h;
            let mut m = model.clone();
            m.transition_mut()[i] -= h;
            let fd = (crf_loss_brute(&p, &batch, l2) - crf_loss_brute(&m, &batch, l2)) / (2.0 * h);
            assert!(rel_close(grad.transition[i], fd, 1e-5), "transition {i}");
        }
    }
}

#[test]
fn unregularized_transition_gradient_sums_to_zero() {
    // expected and empirical transition counts both total n - 1 per sequence
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let (model, batch) = random_crf(&mut rng, 6, 4, 1.5);
        let (_, grad) = crf_gradient(&model, &batch, 0.0).unwrap();
        assert!(grad.transition.iter().sum::<f64>().abs() < 1e-9);
    }
}

#[test]
fn doubling_the_batch_doubles_the_data_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..50 {
        let (model, batch) = random_crf(&mut rng, 4, 3, 1.0);
        let mut doubled = batch.clone();
        doubled.extend(batch.iter().cloned());
        let (l1, g1) = crf_gradient(&model, &batch, 0.0).unwrap();
        let (l2, g2) = crf_gradient(&model, &doubled, 0.0).unwrap();
        assert!(rel_close(l2, 2.0 * l1, 1e-12));
        for (a, b) in g1.emission.iter().chain(&g1.transition).zip(g2.emission.iter().chain(&g2.transition)) {
            assert!((b - 2.0 * a).abs() < 1e-10);
        }
    }
}

#[test]
fn separable_toy_set_is_learned() {
    // each word determines its tag
    let lexicon = [("ka", "A"), ("mo", "B"), ("zu", "C")];
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let examples = (0..30)
        .map(|id| {
            let len = rng.gen_range(2..=6);
            let picks: Vec<_> = (0..len).map(|_| lexicon[rng.gen_range(0..3)]).collect();
            seq_example(
                id,
                TokenSequence::new(picks.iter().map(|p| p.0.to_string()).collect()).unwrap(),
                picks.iter().map(|p| p.1.to_string()).collect(),
            )
        })
        .collect();
    let corpus = Corpus::new(TaskKind::Sequence, strings(&["A", "B", "C"]), examples).unwrap();
    let empty = Corpus::empty(TaskKind::Sequence, corpus.label_set().to_vec());
    let model = crf_train(&corpus, &empty, 20, &TrainHyper::default(), None).unwrap();
    for ex in corpus.examples() {
        assert_eq!(model.viterbi(&ex.tokens).unwrap().labels, ex.tags().unwrap());
    }
}

#[test]
fn training_is_deterministic_under_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let (_, batch) = random_crf(&mut rng, 6, 3, 1.0);
    let labels: Vec<String> = (0..3).map(|i| format!("T{i}")).collect();
    let corpus = Corpus::new(TaskKind::Sequence, labels, batch).unwrap();
    let hyper = TrainHyper {
        batch_size: 1,
        seed: 5,
        ..TrainHyper::default()
    };
    let a = crf_train(&corpus, &corpus, 4, &hyper, None).unwrap();
    let b = crf_train(&corpus, &corpus, 4, &hyper, None).unwrap();
    assert_eq!(a, b);
}
