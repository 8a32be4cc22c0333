use crate::domain::{check_label, Round, Transcript};
use crate::error::{Error, Result};
use crate::harness::adversary::Adversary;
use crate::hypothesis::HypothesisClass;
use crate::online::OnlineLearner;
use crate::rng::rng_from_seed;

/// Plays `horizon` rounds. The learner's randomness comes from `seed`.
///
/// Labels are checked against the adversary's target as they arrive, and the
/// finished transcript must be realized by some hypothesis in `class`.
pub fn run_game(
    learner: &mut dyn OnlineLearner,
    adversary: &mut dyn Adversary,
    class: &HypothesisClass,
    horizon: usize,
    seed: u64,
) -> Result<Transcript> {
    let mut rng = rng_from_seed(seed);
    let mut transcript = Transcript::new(horizon, seed);
    for t in 0..horizon {
        let x = adversary.next_instance()?;
        class.check_instance(x)?;
        let yhat = learner.predict(x, &mut rng)?;
        check_label(yhat).map_err(|_| Error::Protocol(format!("learner predicted {yhat} in round {}", t + 1)))?;
        let y = adversary.label(x)?;
        if let Some(c) = adversary.target() {
            if class.eval(c, x) != y {
                return Err(Error::NonRealizableLabel { round: t + 1, label: y });
            }
        }
        adversary.observe(x, y, yhat);
        learner.update(x, y, &mut rng)?;
        transcript.push(Round::new(x, y, yhat))?;
    }
    if transcript.realizing_hypotheses(class).next().is_none() {
        return Err(Error::NotRealizable);
    }
    Ok(transcript)
}
