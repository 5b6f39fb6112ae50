use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "strategy", rename_all = "lowercase")]
pub enum Strategy {
    Full,
    /// Keep each subject with probability 1/s.
    Bernoulli { s: f64 },
    /// About `m` subjects per iteration: `r` random full-rank groups plus a top-up from G_0.
    Grouped {
        #[serde(rename = "M")]
        m: usize,
        r: usize,
    },
}

/// Leftover group G_0 and full-rank groups G_1..G_k of subject indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Groups {
    pub g0: Vec<usize>,
    pub groups: Vec<Vec<usize>>,
}

/// Numerical rank with relative tolerance 1e-10 on the singular values.
pub fn matrix_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > max * 1e-10).count()
}

fn gram_sum(designs: &[DMatrix<f64>], members: &[usize], p: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(p, p);
    for &i in members {
        g += designs[i].transpose() * &designs[i];
    }
    g
}

fn create_group(pool: &[usize], designs: &[DMatrix<f64>], p: usize) -> Vec<usize> {
    let mut group = vec![pool[0]];
    let mut rest = &pool[1..];
    let mut gram = gram_sum(designs, &group, p);
    let mut rank = matrix_rank(&gram);
    while rank < p && !rest.is_empty() {
        let cand = rest[0];
        let with = &gram + designs[cand].transpose() * &designs[cand];
        let r = matrix_rank(&with);
        if r > rank {
            group.push(cand);
            gram = with;
            rank = r;
        }
        rest = &rest[1..];
    }
    group
}

/// Greedy group formation: each group is grown in input order until its
/// summed Gram matrix has full column rank; what cannot form a group is G_0.
pub fn form_groups(designs: &[DMatrix<f64>]) -> Result<Groups> {
    if designs.is_empty() {
        return Err(Error::Domain("group formation needs at least one subject".into()));
    }
    let p = designs[0].ncols();
    if designs.iter().any(|x| x.ncols() != p) {
        return Err(Error::Shape("designs have different column counts".into()));
    }
    let mut pool: Vec<usize> = (0..designs.len()).collect();
    let mut groups = Vec::new();
    let mut g0 = Vec::new();
    while !pool.is_empty() {
        let g = create_group(&pool, designs, p);
        if matrix_rank(&gram_sum(designs, &g, p)) == p {
            pool.retain(|i| !g.contains(i));
            groups.push(g);
        } else {
            g0 = std::mem::take(&mut pool);
        }
    }
    Ok(Groups { g0, groups })
}

/// Selected subjects (ascending) and their inverse-inclusion-probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsamplePlan {
    strategy: Strategy,
    m: usize,
    groups: Option<Groups>,
}

impl SubsamplePlan {
    pub fn new(strategy: Strategy, designs: &[DMatrix<f64>]) -> Result<Self> {
        let m = designs.len();
        if m == 0 {
            return Err(Error::Domain("no subjects to sample from".into()));
        }
        match strategy {
            Strategy::Full => Ok(SubsamplePlan { strategy, m, groups: None }),
            Strategy::Bernoulli { s } => {
                if !(s >= 1.0 && s.is_finite()) {
                    return Err(Error::Config(format!("bernoulli s must be >= 1, got {s}")));
                }
                Ok(SubsamplePlan { strategy, m, groups: None })
            }
            Strategy::Grouped { m: target, r } => {
                let groups = form_groups(designs)?;
                let k = groups.groups.len();
                if k == 0 {
                    log::warn!("no full-rank subject group could be formed; using all subjects");
                    return Ok(SubsamplePlan {
                        strategy: Strategy::Full,
                        m,
                        groups: None,
                    });
                }
                if r == 0 || r > k {
                    return Err(Error::Config(format!("subsample.r must be in 1..={k}, got {r}")));
                }
                let mut sizes: Vec<usize> = groups.groups.iter().map(Vec::len).collect();
                sizes.sort_unstable_by(|a, b| b.cmp(a));
                let largest_r: usize = sizes.iter().take(r).sum();
                // every selection must leave room for at least one G_0 draw
                if !groups.g0.is_empty() && target <= largest_r {
                    return Err(Error::Config(format!(
                        "subsample.M = {target} must exceed {largest_r}, the size of the {r} largest groups"
                    )));
                }
                if groups.g0.is_empty() && target < sizes[0] {
                    return Err(Error::Config(format!(
                        "subsample.M = {target} is smaller than the largest group ({})",
                        sizes[0]
                    )));
                }
                Ok(SubsamplePlan {
                    strategy,
                    m,
                    groups: Some(groups),
                })
            }
        }
    }

    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    pub fn groups(&self) -> Option<&Groups> {
        self.groups.as_ref()
    }

    pub fn subjects(&self) -> usize {
        self.m
    }

    /// Number of G_0 subjects drawn after selecting the given groups.
    pub fn g0_draws(&self, chosen_groups: &[usize]) -> usize {
        match (self.strategy, &self.groups) {
            (Strategy::Grouped { m, .. }, Some(g)) => {
                let taken: usize = chosen_groups.iter().map(|&j| g.groups[j].len()).sum();
                m.saturating_sub(taken).min(g.g0.len())
            }
            _ => 0,
        }
    }

    /// Grouped selection from chosen group indices and chosen G_0 positions.
    pub fn grouped_selection(&self, chosen_groups: &[usize], chosen_g0: &[usize]) -> Result<Selection> {
        let (r, g) = match (self.strategy, &self.groups) {
            (Strategy::Grouped { r, .. }, Some(g)) => (r, g),
            _ => return Err(Error::Config("plan is not grouped".into())),
        };
        let k = g.groups.len() as f64;
        let mut pairs: Vec<(usize, f64)> = Vec::new();
        for &j in chosen_groups {
            pairs.extend(g.groups[j].iter().map(|&i| (i, k / r as f64)));
        }
        if !chosen_g0.is_empty() {
            let w = g.g0.len() as f64 / chosen_g0.len() as f64;
            pairs.extend(chosen_g0.iter().map(|&pos| (g.g0[pos], w)));
        }
        pairs.sort_by_key(|p| p.0);
        Ok(Selection {
            indices: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Bernoulli selection from a keep mask.
    pub fn bernoulli_selection(&self, keep: &[bool]) -> Result<Selection> {
        let s = match self.strategy {
            Strategy::Bernoulli { s } => s,
            _ => return Err(Error::Config("plan is not bernoulli".into())),
        };
        let indices: Vec<usize> = (0..self.m).filter(|&i| keep[i]).collect();
        let weights = vec![s; indices.len()];
        Ok(Selection { indices, weights })
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Selection {
        match self.strategy {
            Strategy::Full => Selection {
                indices: (0..self.m).collect(),
                weights: vec![1.0; self.m],
            },
            Strategy::Bernoulli { s } => {
                let keep: Vec<bool> = (0..self.m).map(|_| rng.random::<f64>() < 1.0 / s).collect();
                self.bernoulli_selection(&keep).expect("bernoulli plan")
            }
            Strategy::Grouped { r, .. } => {
                let g = self.groups.as_ref().expect("grouped plan has groups");
                let chosen: Vec<usize> = sample(rng, g.groups.len(), r).into_vec();
                let n0 = self.g0_draws(&chosen);
                let from_g0: Vec<usize> = sample(rng, g.g0.len(), n0).into_vec();
                self.grouped_selection(&chosen, &from_g0).expect("grouped plan")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(rs: &[[f64; 2]]) -> DMatrix<f64> {
        DMatrix::from_fn(rs.len(), 2, |i, j| rs[i][j])
    }

    #[test]
    fn pairs_unit_vectors() {
        let e1 = rows(&[[1.0, 0.0]]);
        let e2 = rows(&[[0.0, 1.0]]);
        let g = form_groups(&[e1.clone(), e1.clone(), e2.clone(), e2.clone(), e1]).unwrap();
        assert_eq!(g.groups, vec![vec![0, 2], vec![1, 3]]);
        assert_eq!(g.g0, vec![4]);
    }

    #[test]
    fn full_rank_singletons() {
        let x = rows(&[[1.0, 0.0], [1.0, 1.0]]);
        let g = form_groups(&vec![x; 4]).unwrap();
        assert_eq!(g.groups.len(), 4);
        assert!(g.g0.is_empty());
    }

    #[test]
    fn census_weights() {
        let x = rows(&[[1.0, 0.0], [1.0, 1.0]]);
        let plan = SubsamplePlan::new(Strategy::Grouped { m: 10, r: 3 }, &vec![x; 3]).unwrap();
        let mut rng = rand::rng();
        let s = plan.draw(&mut rng);
        assert_eq!(s.indices, vec![0, 1, 2]);
        assert!(s.weights.iter().all(|&w| w == 1.0));
    }
}
