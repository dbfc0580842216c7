mod common;

use common::*;
use pseudolabel::selftrain::{select_by_threshold, select_class_balanced, select_top_k, Candidate, ClassCandidate};

// ties are deliberate
const POOL: [(u64, f64, usize); 6] = [
    (3, 0.5, 0),
    (5, 0.9, 1),
    (8, 0.5, 1),
    (9, 1.0, 0),
    (12, 0.2, 2),
    (20, 0.9, 0),
];

fn pool_subsets() -> impl Iterator<Item = Vec<(u64, f64, usize)>> {
    subsets(POOL.len()).map(|s| s.into_iter().map(|i| POOL[i]).collect())
}

fn candidates(sub: &[(u64, f64, usize)]) -> Vec<Candidate> {
    sub.iter().map(|&(id, confidence, _)| Candidate { id, confidence }).collect()
}

#[test]
fn threshold_matches_definition() {
    for sub in pool_subsets() {
        for tau in [0.1, 0.2, 0.5, 0.7, 0.9, 1.0] {
            let mut want: Vec<u64> = sub.iter().filter(|c| c.1 >= tau).map(|c| c.0).collect();
            want.sort_unstable();
            assert_eq!(select_by_threshold(&candidates(&sub), tau), want);
        }
    }
}

#[test]
fn top_k_matches_definition() {
    for sub in pool_subsets() {
        let pairs: Vec<(u64, f64)> = sub.iter().map(|c| (c.0, c.1)).collect();
        for k in 0..=7 {
            assert_eq!(select_top_k(&candidates(&sub), k), oracle_top(&pairs, k), "{sub:?} k={k}");
        }
    }
}

#[test]
fn top_k_is_order_independent() {
    for sub in pool_subsets() {
        let mut rev = candidates(&sub);
        rev.reverse();
        for k in 0..=6 {
            assert_eq!(select_top_k(&rev, k), select_top_k(&candidates(&sub), k));
        }
    }
}

#[test]
fn class_balanced_matches_definition() {
    for sub in pool_subsets() {
        for num_classes in 1..=3 {
            let cands: Vec<ClassCandidate> = sub
                .iter()
                .filter(|c| c.2 < num_classes)
                .map(|&(id, confidence, class)| ClassCandidate { id, class, confidence })
                .collect();
            for s in 0..=8 {
                let quota = s / num_classes;
                let mut want = Vec::new();
                for class in 0..num_classes {
                    let members: Vec<(u64, f64)> =
                        cands.iter().filter(|c| c.class == class).map(|c| (c.id, c.confidence)).collect();
                    want.extend(oracle_top(&members, quota));
                }
                want.sort_unstable();
                let got = select_class_balanced(&cands, s, num_classes);
                assert_eq!(got, want, "{sub:?} C={num_classes} S={s}");
                assert!(got.len() <= quota * num_classes);
            }
        }
    }
}

#[test]
fn class_balanced_floor_and_short_classes() {
    let cands: Vec<ClassCandidate> = POOL
        .iter()
        .map(|&(id, confidence, class)| ClassCandidate { id, class, confidence })
        .collect();
    // S = 5, C = 3: quota 1 per class
    assert_eq!(select_class_balanced(&cands, 5, 3), vec![5, 9, 12]);
    // quota 3 exceeds class 1 (2 members) and class 2 (1 member)
    assert_eq!(select_class_balanced(&cands, 9, 3), vec![3, 5, 8, 9, 12, 20]);
}
