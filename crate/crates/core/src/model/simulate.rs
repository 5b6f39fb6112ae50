use crate::error::Result;
use crate::model::data::{Subject, SubjectRecord};
use crate::model::latent::LatentState;
use crate::model::params::ModelParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Independent random stream for subject `index` under a run seed.
pub fn subject_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Draws outcomes for each design from the model; existing `y` values are ignored.
pub fn simulate(params: &ModelParams, designs: &[Subject], seed: u64) -> Result<Vec<SubjectRecord>> {
    params.validate()?;
    designs
        .iter()
        .enumerate()
        .map(|(i, subject)| {
            let mut rng = subject_rng(seed, i);
            let disc = params.discretize(subject)?;
            let latent = LatentState::sample_prior(params, subject, disc.as_ref(), &mut rng)?;
            let rec = &subject.record;
            let mut y = &rec.x * &params.beta;
            if params.q() > 0 {
                y += &rec.d * &latent.u;
            }
            if let Some(obs) = &subject.obs {
                if disc.is_some() {
                    for (yj, a) in y.iter_mut().zip(obs.mul_vec(&latent.w)) {
                        *yj += a;
                    }
                }
            }
            for (yj, v) in y.iter_mut().zip(&latent.v_z) {
                *yj += params.sigma * v.sqrt() * rng.sample::<f64, _>(StandardNormal);
            }
            Ok(SubjectRecord {
                y: y.iter().copied().collect(),
                ..rec.clone()
            })
        })
        .collect()
}
