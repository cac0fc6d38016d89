//! Resampling sweep over (number of identification images, maximal depth)
//! and the convergence rule that picks the final pair.
//!
//! Every (N, d0, iteration) work item draws from its own random stream, so
//! the grid does not depend on how items are scheduled across threads.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CameraDataset, ImageRecord, RapConfig};
use crate::quadtree::{hair_error, identify_hair};

/// Root mean square of the per-iteration HAIR errors.
pub fn rmse(errors: &[f64]) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::EmptyErrors);
    }
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / errors.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub n_values: Vec<usize>,
    pub d0_values: Vec<usize>,
    pub iterations: usize,
    pub holdout_size: usize,
    pub seed: u64,
    pub rap: RapConfig,
    /// Keep every per-iteration error in the grid.
    pub keep_errors: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_values: (1..=10).map(|k| k * 10).collect(),
            d0_values: (1..=5).collect(),
            iterations: 1000,
            holdout_size: 10,
            seed: 0,
            rap: RapConfig::default(),
            keep_errors: false,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self, pool: usize) -> Result<()> {
        self.rap.validate()?;
        if self.n_values.is_empty() || self.d0_values.is_empty() {
            return Err(Error::Config("n_values and d0_values must be non-empty".into()));
        }
        if self.n_values.contains(&0) {
            return Err(Error::Config("N must be at least 1".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be at least 1".into()));
        }
        if self.holdout_size == 0 {
            return Err(Error::Config("holdout_size must be at least 1".into()));
        }
        let needed = self.n_values.iter().max().unwrap() + self.holdout_size;
        if needed > pool {
            return Err(Error::PoolTooSmall { needed, available: pool });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub n: usize,
    pub d0: usize,
    pub rmse: f64,
    pub errors: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub config: SweepConfig,
    pub cells: BTreeMap<(usize, usize), SweepCell>,
}

impl SweepGrid {
    pub fn rmse(&self, n: usize, d0: usize) -> Option<f64> {
        self.cells.get(&(n, d0)).map(|c| c.rmse)
    }

    pub fn check_complete(&self) -> Result<()> {
        for &n in &self.config.n_values {
            for &d0 in &self.config.d0_values {
                if !self.cells.contains_key(&(n, d0)) {
                    return Err(Error::IncompleteGrid { n, d0 });
                }
            }
        }
        Ok(())
    }

    /// Plot-ready rows `N  d0  rmse`, tab separated with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("N\td0\trmse\n");
        for ((n, d0), cell) in &self.cells {
            out.push_str(&format!("{n}\t{d0}\t{}\n", cell.rmse));
        }
        out
    }

    /// Grid built from explicit values, mainly for selection tests.
    pub fn from_values(n_values: &[usize], d0_values: &[usize], rmse: impl Fn(usize, usize) -> f64) -> Self {
        let config = SweepConfig {
            n_values: n_values.to_vec(),
            d0_values: d0_values.to_vec(),
            ..SweepConfig::default()
        };
        let cells = n_values
            .iter()
            .flat_map(|&n| d0_values.iter().map(move |&d0| (n, d0)))
            .map(|(n, d0)| ((n, d0), SweepCell { n, d0, rmse: rmse(n, d0), errors: None }))
            .collect();
        Self { config, cells }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of the stream for one work item: the key words are folded into the
/// base seed one at a time through SplitMix64.
pub fn stream_seed(seed: u64, n: usize, d0: usize, iteration: usize) -> u64 {
    [n as u64, d0 as u64, iteration as u64]
        .into_iter()
        .fold(splitmix64(seed), |acc, k| splitmix64(acc ^ splitmix64(k)))
}

pub fn stream_rng(seed: u64, n: usize, d0: usize, iteration: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(stream_seed(seed, n, d0, iteration))
}

/// One resampling iteration: draw N identification images, build the HAIR,
/// draw the holdout from the rest and return its HAIR error.
fn iteration_error(d: &CameraDataset, cfg: &SweepConfig, n: usize, d0: usize, it: usize) -> Result<f64> {
    let mut rng = stream_rng(cfg.seed, n, d0, it);
    let pool = d.images.len();
    let picked = sample(&mut rng, pool, n).into_vec();
    let mut used = vec![false; pool];
    for &i in &picked {
        used[i] = true;
    }
    let ident: Vec<String> = picked.iter().map(|&i| d.images[i].image_id.clone()).collect();
    let hair = identify_hair(d, &ident, &cfg.rap, d0)?;

    let rest: Vec<usize> = (0..pool).filter(|&i| !used[i]).collect();
    let holdout: Vec<&ImageRecord> = sample(&mut rng, rest.len(), cfg.holdout_size)
        .into_iter()
        .map(|j| &d.images[rest[j]])
        .collect();
    Ok(hair_error(&hair, &holdout, &cfg.rap)?.e)
}

/// Runs every (N, d0) cell of the sweep.
pub fn run_sweep(d: &CameraDataset, cfg: &SweepConfig) -> Result<SweepGrid> {
    cfg.validate(d.images.len())?;
    for &d0 in &cfg.d0_values {
        crate::quadtree::check_depth(&d.extent(), d0)?;
    }
    let items: Vec<(usize, usize, usize)> = cfg
        .n_values
        .iter()
        .flat_map(|&n| {
            cfg.d0_values
                .iter()
                .flat_map(move |&d0| (0..cfg.iterations).map(move |it| (n, d0, it)))
        })
        .collect();

    let run = |&(n, d0, it): &(usize, usize, usize)| iteration_error(d, cfg, n, d0, it);
    #[cfg(feature = "parallel")]
    let errors: Vec<f64> = {
        use rayon::prelude::*;
        items.par_iter().map(run).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let errors: Vec<f64> = items.iter().map(run).collect::<Result<_>>()?;

    let mut cells = BTreeMap::new();
    for (chunk, &(n, d0, _)) in errors.chunks(cfg.iterations).zip(items.iter().step_by(cfg.iterations)) {
        let value = rmse(chunk)?;
        let kept = cfg.keep_errors.then(|| chunk.to_vec());
        cells.insert((n, d0), SweepCell { n, d0, rmse: value, errors: kept });
    }
    Ok(SweepGrid { config: cfg.clone(), cells })
}

/// How the image-count rule quantifies over N.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NRule {
    /// The depth-step decreases are checked at the candidate N only.
    #[default]
    CandidateOnly,
    /// The condition must also hold at every larger N.
    AllLarger,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionThresholds {
    pub delta_depth: f64,
    pub delta_n: f64,
    pub n_rule: NRule,
}

impl Default for SelectionThresholds {
    fn default() -> Self {
        Self { delta_depth: 0.01, delta_n: 0.001, n_rule: NRule::CandidateOnly }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterChoice {
    pub d0_star: usize,
    pub n_star: usize,
    pub delta_depth_threshold: f64,
    pub delta_n_threshold: f64,
}

// Absorbs representation error in differences such as 0.09 - 0.089.
const DELTA_SLACK: f64 = 1e-12;

/// Decrease in RMSE when the depth goes from `i` to `j` at image count `k`.
fn delta(g: &SweepGrid, i: usize, j: usize, k: usize) -> f64 {
    g.rmse(k, i).unwrap() - g.rmse(k, j).unwrap()
}

/// Picks d0* as the smallest depth whose decrease to every deeper configured
/// depth stays within `delta_depth` at every N, then N* as the smallest N at
/// which the decreases from d0* stay within `delta_n`. The deepest configured
/// depth is never a candidate because it has nothing to compare against.
pub fn select_parameters(g: &SweepGrid, t: &SelectionThresholds) -> Result<ParameterChoice> {
    g.check_complete()?;
    let mut depths = g.config.d0_values.clone();
    depths.sort_unstable();
    depths.dedup();
    let mut ns = g.config.n_values.clone();
    ns.sort_unstable();
    ns.dedup();

    let d0_star = depths
        .iter()
        .enumerate()
        .filter(|&(pos, _)| pos + 1 < depths.len())
        .find(|&(pos, &i)| {
            depths[pos + 1..]
                .iter()
                .all(|&j| ns.iter().all(|&k| delta(g, i, j, k) <= t.delta_depth + DELTA_SLACK))
        })
        .map(|(_, &i)| i)
        .ok_or(Error::NoConvergence("d0"))?;

    let deeper: Vec<usize> = depths.iter().copied().filter(|&j| j > d0_star).collect();
    let ok_at = |k: usize| deeper.iter().all(|&j| delta(g, d0_star, j, k) <= t.delta_n + DELTA_SLACK);
    let n_star = ns
        .iter()
        .enumerate()
        .find(|&(pos, &k)| match t.n_rule {
            NRule::CandidateOnly => ok_at(k),
            NRule::AllLarger => ns[pos..].iter().all(|&k2| ok_at(k2)),
        })
        .map(|(_, &k)| k)
        .ok_or(Error::NoConvergence("N"))?;

    Ok(ParameterChoice {
        d0_star,
        n_star,
        delta_depth_threshold: t.delta_depth,
        delta_n_threshold: t.delta_n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn rmse_examples() {
        assert_eq!(rmse(&[0.0; 5]).unwrap(), 0.0);
        assert_abs_diff_eq!(rmse(&[0.1; 1000]).unwrap(), 0.1, epsilon = 1e-12);
        assert_abs_diff_eq!(rmse(&[0.3, 0.4]).unwrap(), 0.125f64.sqrt(), epsilon = 1e-15);
        assert!(matches!(rmse(&[]), Err(Error::EmptyErrors)));
    }

    pub(crate) fn hand_grid() -> SweepGrid {
        let table = |n: usize, d0: usize| match (d0, n) {
            (1, 10) => 0.30,
            (1, 20) => 0.28,
            (2, 10) => 0.10,
            (2, 20) => 0.09,
            (3, 10) => 0.095,
            (3, 20) => 0.089,
            _ => unreachable!(),
        };
        SweepGrid::from_values(&[10, 20], &[1, 2, 3], table)
    }

    #[test]
    fn selection_on_hand_grid() {
        let c = select_parameters(&hand_grid(), &SelectionThresholds::default()).unwrap();
        assert_eq!((c.d0_star, c.n_star), (2, 20));
    }

    #[test]
    fn flat_grid_selects_minimums() {
        let g = SweepGrid::from_values(&[10, 20, 30], &[1, 2, 3], |_, _| 0.05);
        let c = select_parameters(&g, &SelectionThresholds::default()).unwrap();
        assert_eq!((c.d0_star, c.n_star), (1, 10));
    }

    #[test]
    fn steep_grid_does_not_converge() {
        let g = SweepGrid::from_values(&[10, 20], &[1, 2, 3], |_, d0| 1.0 - 0.3 * d0 as f64);
        let err = select_parameters(&g, &SelectionThresholds::default()).unwrap_err();
        assert_eq!(err.to_string(), "no convergence: d0");
    }

    #[test]
    fn n_rule_variants_differ() {
        // at N=10 the step 2->3 is flat, at N=20 it is not, at N=30 flat again
        let g = SweepGrid::from_values(&[10, 20, 30], &[1, 2, 3], |n, d0| match (d0, n) {
            (1, _) => 0.5,
            (2, 20) => 0.105,
            (2, _) => 0.1,
            (3, _) => 0.1,
            _ => unreachable!(),
        });
        let mut t = SelectionThresholds::default();
        let c = select_parameters(&g, &t).unwrap();
        assert_eq!((c.d0_star, c.n_star), (2, 10));
        t.n_rule = NRule::AllLarger;
        let c = select_parameters(&g, &t).unwrap();
        assert_eq!((c.d0_star, c.n_star), (2, 30));
    }

    #[test]
    fn incomplete_grid_is_rejected() {
        let mut g = hand_grid();
        g.cells.remove(&(20, 3));
        assert!(matches!(
            select_parameters(&g, &SelectionThresholds::default()),
            Err(Error::IncompleteGrid { n: 20, d0: 3 })
        ));
    }

    #[test]
    fn streams_differ_per_key() {
        let a = stream_seed(7, 10, 2, 0);
        assert_ne!(a, stream_seed(7, 10, 2, 1));
        assert_ne!(a, stream_seed(7, 10, 3, 0));
        assert_ne!(a, stream_seed(7, 20, 2, 0));
        assert_ne!(a, stream_seed(8, 10, 2, 0));
        assert_eq!(a, stream_seed(7, 10, 2, 0));
    }
}
