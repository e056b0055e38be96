use crate::chain::ChainWalker;
use crate::error::Result;
use crate::regression::{NoiseMode, Problem};
use crate::rng::SimRng;

/// One labelled sample, borrowed from the stream until the next read.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'s> {
    /// 1-based position in the stream.
    pub index: usize,
    pub x: &'s [f64],
    pub y: f64,
}

/// The labelled data stream `(X_1, Y_1), (X_2, Y_2), ...` of a problem,
/// started from the stationary law.
///
/// Every position draws its label noise whether it is read or skipped, so the
/// pair at position `t` depends only on the seed and `t`, never on which
/// positions an algorithm chose to look at.
pub struct SampleStream<'a> {
    problem: &'a Problem,
    walker: ChainWalker<'a>,
    chain_rng: SimRng,
    noise_rng: SimRng,
    position: usize,
    mode: NoiseMode,
}

impl<'a> SampleStream<'a> {
    pub fn new(
        problem: &'a Problem,
        mut chain_rng: SimRng,
        noise_rng: SimRng,
        mode: NoiseMode,
    ) -> Result<Self> {
        let walker =
            ChainWalker::stationary_start(problem.chain(), problem.stationary_law(), &mut chain_rng)?;
        Ok(Self {
            problem,
            walker,
            chain_rng,
            noise_rng,
            position: 0,
            mode,
        })
    }

    /// Number of positions read or skipped so far.
    pub fn position(&self) -> usize {
        self.position
    }

    #[inline]
    fn advance(&mut self) -> f64 {
        if self.position > 0 {
            self.walker.advance(&mut self.chain_rng);
        }
        self.position += 1;
        self.problem.label(
            self.walker.vector(),
            self.walker.state_index(),
            self.mode,
            &mut self.noise_rng,
        )
    }

    #[inline]
    pub fn next_sample(&mut self) -> Sample<'_> {
        let y = self.advance();
        Sample {
            index: self.position,
            x: self.walker.vector(),
            y,
        }
    }

    /// Move past `n` positions without reading them.
    pub fn skip(&mut self, n: usize) {
        for _ in 0..n {
            self.advance();
        }
    }
}
