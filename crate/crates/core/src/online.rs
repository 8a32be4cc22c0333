//! The predict-then-update contract shared by every online learner here.

use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::domain::{Instance, Label};
use crate::error::Result;
use crate::hypothesis::{HypothesisClass, HypothesisId};

/// A randomized online learner. Each round the caller invokes `predict`
/// and then, once the label is revealed, `update`. A round whose label is
/// never revealed may be abandoned by calling `predict` again.
pub trait OnlineLearner: Send {
    fn predict(&mut self, x: Instance, rng: &mut dyn RngCore) -> Result<Label>;

    fn update(&mut self, x: Instance, y: Label, rng: &mut dyn RngCore) -> Result<()>;
}

impl<L: OnlineLearner + ?Sized> OnlineLearner for Box<L> {
    fn predict(&mut self, x: Instance, rng: &mut dyn RngCore) -> Result<Label> {
        (**self).predict(x, rng)
    }

    fn update(&mut self, x: Instance, y: Label, rng: &mut dyn RngCore) -> Result<()> {
        (**self).update(x, y, rng)
    }
}

/// Builds an independent learner instance from a seed.
pub type LearnerFactory = Arc<dyn Fn(u64) -> Result<Box<dyn OnlineLearner>> + Send + Sync>;

/// Always predicts the same label.
#[derive(Debug, Clone, Copy)]
pub struct ConstantLearner(pub Label);

impl OnlineLearner for ConstantLearner {
    fn predict(&mut self, _: Instance, _: &mut dyn RngCore) -> Result<Label> {
        Ok(self.0)
    }

    fn update(&mut self, _: Instance, _: Label, _: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }
}

/// Predicts with a fixed hypothesis.
#[derive(Debug, Clone)]
pub struct HypothesisLearner {
    pub class: Arc<HypothesisClass>,
    pub hypothesis: HypothesisId,
}

impl OnlineLearner for HypothesisLearner {
    fn predict(&mut self, x: Instance, _: &mut dyn RngCore) -> Result<Label> {
        self.class.check_instance(x)?;
        Ok(self.class.eval(self.hypothesis, x))
    }

    fn update(&mut self, _: Instance, _: Label, _: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }
}

/// Predicts a uniformly random label.
#[derive(Debug, Clone, Copy, Default)]
pub struct CoinFlipLearner;

impl OnlineLearner for CoinFlipLearner {
    fn predict(&mut self, _: Instance, rng: &mut dyn RngCore) -> Result<Label> {
        Ok(rng.random_bool(0.5) as Label)
    }

    fn update(&mut self, _: Instance, _: Label, _: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }
}
