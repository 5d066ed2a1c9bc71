//! Two-class Gaussian classification data.

use fragshap::{Dataset, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Class `y` draws feature `f < informative` from `N(±separation/2, 1)` and the
/// remaining features from `N(0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub samples: usize,
    pub features: usize,
    pub informative: usize,
    pub test: usize,
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec { samples: 200, features: 10, informative: 10, test: 100, separation: 2.5, seed: 0 }
    }
}

impl SynthSpec {
    /// `(train, test)`, drawn from one stream so both depend only on the seed.
    pub fn generate(&self) -> Result<(Dataset, Dataset)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let train = self.draw(self.samples, &mut rng)?;
        let test = self.draw(self.test, &mut rng)?;
        Ok((train, test))
    }

    fn draw(&self, rows: usize, rng: &mut ChaCha8Rng) -> Result<Dataset> {
        let mut data = Vec::with_capacity(rows * self.features);
        let mut labels = Vec::with_capacity(rows);
        for _ in 0..rows {
            let y = usize::from(rng.random_bool(0.5));
            let shift = if y == 1 { self.separation / 2.0 } else { -self.separation / 2.0 };
            for f in 0..self.features {
                let z: f64 = StandardNormal.sample(rng);
                data.push(if f < self.informative { z + shift } else { z });
            }
            labels.push(y);
        }
        Dataset::new(data, self.features, labels, 2)?
            .with_feature_names((0..self.features).map(|f| format!("x{f}")).collect())
    }
}
