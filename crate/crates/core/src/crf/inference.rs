//! Linear-chain inference over score lattices.
//!
//! Everything here works on raw scores — `emissions[t][y]` plus
//! `transitions[prev][next]` — so the feature-based tagger and the neural
//! CRF output layer share one implementation of the forward algorithm,
//! forward-backward marginals and Viterbi decoding. All recursions run in
//! log space with log-sum-exp stabilization.

/// log Σ exp over a slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Score of one tag path: Σ emissions + Σ transitions.
pub fn path_score(emissions: &[Vec<f64>], transitions: &[Vec<f64>], path: &[usize]) -> f64 {
    assert_eq!(emissions.len(), path.len());
    let mut score = 0.0;
    for (t, &y) in path.iter().enumerate() {
        score += emissions[t][y];
        if t > 0 {
            score += transitions[path[t - 1]][y];
        }
    }
    score
}

/// Log-partition: log Σ over all |L|^T paths of exp(score), via the
/// forward algorithm.
pub fn log_partition(emissions: &[Vec<f64>], transitions: &[Vec<f64>]) -> f64 {
    let alpha = forward(emissions, transitions);
    log_sum_exp(alpha.last().expect("non-empty sentence"))
}

fn forward(emissions: &[Vec<f64>], transitions: &[Vec<f64>]) -> Vec<Vec<f64>> {
    assert!(!emissions.is_empty(), "empty sentence");
    let labels = emissions[0].len();
    let mut alpha = vec![vec![0.0; labels]; emissions.len()];
    alpha[0].clone_from_slice(&emissions[0]);
    let mut scratch = vec![0.0; labels];
    for t in 1..emissions.len() {
        for y in 0..labels {
            for (prev, s) in scratch.iter_mut().enumerate() {
                *s = alpha[t - 1][prev] + transitions[prev][y];
            }
            alpha[t][y] = emissions[t][y] + log_sum_exp(&scratch);
        }
    }
    alpha
}

fn backward(emissions: &[Vec<f64>], transitions: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let len = emissions.len();
    let labels = emissions[0].len();
    let mut beta = vec![vec![0.0; labels]; len];
    let mut scratch = vec![0.0; labels];
    for t in (0..len - 1).rev() {
        for y in 0..labels {
            for (next, s) in scratch.iter_mut().enumerate() {
                *s = transitions[y][next] + emissions[t + 1][next] + beta[t + 1][next];
            }
            beta[t][y] = log_sum_exp(&scratch);
        }
    }
    beta
}

/// Per-position posterior marginals `P(y_t = y)` and the log-partition.
pub fn posterior_marginals(
    emissions: &[Vec<f64>],
    transitions: &[Vec<f64>],
) -> (Vec<Vec<f64>>, f64) {
    let alpha = forward(emissions, transitions);
    let beta = backward(emissions, transitions);
    let log_z = log_sum_exp(alpha.last().expect("non-empty sentence"));
    let marginals = alpha
        .iter()
        .zip(&beta)
        .map(|(a, b)| {
            a.iter().zip(b).map(|(x, y)| (x + y - log_z).exp()).collect::<Vec<f64>>()
        })
        .collect();
    (marginals, log_z)
}

/// Negative log-likelihood of `gold` and its gradient with respect to the
/// emission scores and the transition matrix:
/// expected counts (marginals) minus empirical counts.
pub fn nll_grad_scores(
    emissions: &[Vec<f64>],
    transitions: &[Vec<f64>],
    gold: &[usize],
) -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let len = emissions.len();
    let labels = emissions[0].len();
    assert_eq!(gold.len(), len);

    let alpha = forward(emissions, transitions);
    let beta = backward(emissions, transitions);
    let log_z = log_sum_exp(alpha.last().expect("non-empty sentence"));
    let nll = log_z - path_score(emissions, transitions, gold);

    let mut d_emissions = vec![vec![0.0; labels]; len];
    for t in 0..len {
        for y in 0..labels {
            d_emissions[t][y] = (alpha[t][y] + beta[t][y] - log_z).exp();
        }
        d_emissions[t][gold[t]] -= 1.0;
    }

    let mut d_transitions = vec![vec![0.0; labels]; labels];
    for t in 0..len - 1 {
        for a in 0..labels {
            for b in 0..labels {
                // pairwise marginal ξ_t(a, b)
                let xi =
                    (alpha[t][a] + transitions[a][b] + emissions[t + 1][b] + beta[t + 1][b]
                        - log_z)
                        .exp();
                d_transitions[a][b] += xi;
            }
        }
        d_transitions[gold[t]][gold[t + 1]] -= 1.0;
    }
    (nll, d_emissions, d_transitions)
}

/// Highest-scoring path. Ties break toward the lower label index at every
/// backpointer and at the final state, making decoding deterministic.
pub fn viterbi(emissions: &[Vec<f64>], transitions: &[Vec<f64>]) -> Vec<usize> {
    assert!(!emissions.is_empty(), "empty sentence");
    let len = emissions.len();
    let labels = emissions[0].len();
    let mut delta = vec![vec![0.0; labels]; len];
    let mut back = vec![vec![0usize; labels]; len];
    delta[0].clone_from_slice(&emissions[0]);
    for t in 1..len {
        for y in 0..labels {
            let mut best_prev = 0;
            let mut best = delta[t - 1][0] + transitions[0][y];
            for prev in 1..labels {
                let score = delta[t - 1][prev] + transitions[prev][y];
                if score > best {
                    best = score;
                    best_prev = prev;
                }
            }
            delta[t][y] = emissions[t][y] + best;
            back[t][y] = best_prev;
        }
    }
    let mut last = 0;
    for y in 1..labels {
        if delta[len - 1][y] > delta[len - 1][last] {
            last = y;
        }
    }
    let mut path = vec![0usize; len];
    path[len - 1] = last;
    for t in (1..len).rev() {
        path[t - 1] = back[t][path[t]];
    }
    path
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_lattice(
        len: usize,
        labels: usize,
        rng: &mut ChaCha8Rng,
    ) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let emissions = (0..len)
            .map(|_| (0..labels).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let transitions = (0..labels)
            .map(|_| (0..labels).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        (emissions, transitions)
    }

    fn enumerate_paths(len: usize, labels: usize) -> Vec<Vec<usize>> {
        let mut paths = vec![vec![]];
        for _ in 0..len {
            paths = paths
                .into_iter()
                .flat_map(|p| {
                    (0..labels).map(move |y| {
                        let mut q = p.clone();
                        q.push(y);
                        q
                    })
                })
                .collect();
        }
        paths
    }

    #[test]
    fn single_position_zero_weights_is_log_l() {
        let emissions = vec![vec![0.0; 5]];
        let transitions = vec![vec![0.0; 5]; 5];
        assert!((log_partition(&emissions, &transitions) - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn log_partition_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let len = rng.gen_range(1..=5);
            let labels = rng.gen_range(2..=3);
            let (emissions, transitions) = random_lattice(len, labels, &mut rng);
            let scores: Vec<f64> = enumerate_paths(len, labels)
                .iter()
                .map(|p| path_score(&emissions, &transitions, p))
                .collect();
            let brute = log_sum_exp(&scores);
            let fast = log_partition(&emissions, &transitions);
            assert!((brute - fast).abs() < 1e-10, "{brute} vs {fast}");
        }
    }

    #[test]
    fn emission_shift_adds_constant_to_log_partition() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (mut emissions, transitions) = random_lattice(4, 3, &mut rng);
        let base = log_partition(&emissions, &transitions);
        let c = 0.73;
        for e in emissions[2].iter_mut() {
            *e += c;
        }
        let shifted = log_partition(&emissions, &transitions);
        assert!((shifted - base - c).abs() < 1e-10);
    }

    #[test]
    fn viterbi_matches_brute_force_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..30 {
            let len = rng.gen_range(1..=5);
            let labels = rng.gen_range(2..=4);
            let (emissions, transitions) = random_lattice(len, labels, &mut rng);
            let best = viterbi(&emissions, &transitions);
            let brute = enumerate_paths(len, labels)
                .into_iter()
                .max_by(|a, b| {
                    path_score(&emissions, &transitions, a)
                        .partial_cmp(&path_score(&emissions, &transitions, b))
                        .unwrap()
                })
                .unwrap();
            assert!(
                (path_score(&emissions, &transitions, &best)
                    - path_score(&emissions, &transitions, &brute))
                    .abs()
                    < 1e-10
            );
        }
    }

    #[test]
    fn all_zero_weights_tie_breaks_to_label_zero() {
        let emissions = vec![vec![0.0; 5]; 4];
        let transitions = vec![vec![0.0; 5]; 5];
        assert_eq!(viterbi(&emissions, &transitions), vec![0, 0, 0, 0]);
    }

    #[test]
    fn dominant_emission_forces_its_label() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut emissions, transitions) = random_lattice(4, 4, &mut rng);
        emissions[1][2] = 100.0;
        assert_eq!(viterbi(&emissions, &transitions)[1], 2);
    }

    #[test]
    fn marginals_sum_to_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let (emissions, transitions) = random_lattice(6, 4, &mut rng);
            let (marginals, _) = posterior_marginals(&emissions, &transitions);
            for row in &marginals {
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() < 1e-10, "sum={sum}");
            }
        }
    }

    #[test]
    fn gold_log_likelihood_is_nonpositive() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (emissions, transitions) = random_lattice(5, 3, &mut rng);
        let gold = vec![0, 2, 1, 1, 0];
        let (nll, _, _) = nll_grad_scores(&emissions, &transitions, &gold);
        assert!(nll >= -1e-12);
    }

    #[test]
    fn viterbi_beats_random_paths() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let (emissions, transitions) = random_lattice(6, 4, &mut rng);
        let best = path_score(&emissions, &transitions, &viterbi(&emissions, &transitions));
        for _ in 0..1000 {
            let path: Vec<usize> = (0..6).map(|_| rng.gen_range(0..4)).collect();
            assert!(best >= path_score(&emissions, &transitions, &path) - 1e-12);
        }
    }

    #[test]
    fn per_position_shift_keeps_the_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let (mut emissions, transitions) = random_lattice(5, 4, &mut rng);
        let before = viterbi(&emissions, &transitions);
        for e in emissions[3].iter_mut() {
            *e += 11.5;
        }
        assert_eq!(before, viterbi(&emissions, &transitions));
    }
}
