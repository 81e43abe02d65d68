//! Boosts decision stumps on a small two-feature problem and prints the
//! per-round weight identities.

use crowdlens::boostcascade::{adaboost_train_traced, LabeledSample};
use crowdlens::Label;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let samples: Vec<LabeledSample> = (0..40)
        .map(|_| {
            let (a, b): (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let label = if a + 0.5 * b > 0.1 { Label::Positive } else { Label::Negative };
            LabeledSample { values: vec![a, b], label }
        })
        .collect();
    let (strong, trace) = adaboost_train_traced(&samples, 12)?;
    let mut bound = 1.0;
    for (t, (round, tr)) in strong.rounds.iter().zip(&trace).enumerate() {
        bound *= 2.0 * (round.epsilon * (1.0 - round.epsilon)).sqrt();
        let post_err: f64 = samples
            .iter()
            .zip(&tr.weights_after)
            .filter(|(s, _)| round.stump.predict(s.values[round.stump.feature]) != s.label.sign())
            .map(|(_, w)| w)
            .sum();
        println!(
            "round {t}: feature {} thr {:+.3} eps {:.4} alpha {:.4} post-round error {:.6} bound {:.4}",
            round.stump.feature, round.stump.threshold, round.epsilon, round.alpha, post_err, bound
        );
    }
    let wrong = samples
        .iter()
        .filter(|s| strong.classify(&s.values).unwrap() != s.label)
        .count();
    println!("training error {:.3}", wrong as f64 / samples.len() as f64);
    Ok(())
}
