use std::ops::RangeInclusive;

use super::lambert::lambert_branch;
use crate::error::{Error, Result};
use crate::numeric::C64;

/// Zero `λ̃` of the comparison factor `g_j(λ) = −λ + a_j e^{−λ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Seed {
    pub lambda: C64,
    /// 1-based branch number.
    pub branch: usize,
    pub index: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedGrid {
    pub seeds: Vec<Seed>,
    /// One third of the minimum pairwise seed distance.
    pub r0: f64,
}

pub fn build_seeds(a_list: &[f64], k_range: RangeInclusive<i64>) -> Result<SeedGrid> {
    let mut seeds = Vec::new();
    for (j, &a) in a_list.iter().enumerate() {
        for k in k_range.clone() {
            seeds.push(Seed { lambda: lambert_branch(a, k)?, branch: j + 1, index: k });
        }
    }
    if seeds.len() < 2 {
        return Err(Error::TooFewSeeds);
    }
    let mut dmin = f64::INFINITY;
    for (i, s) in seeds.iter().enumerate() {
        for t in &seeds[i + 1..] {
            let d = (s.lambda - t.lambda).norm();
            if d < 1e-10 {
                return Err(Error::CollidingSeeds { first: s.lambda, second: t.lambda });
            }
            dmin = dmin.min(d);
        }
    }
    Ok(SeedGrid { seeds, r0: dmin / 3.0 })
}

impl SeedGrid {
    /// Seed whose `r0`-circle strictly contains `lambda`.
    pub fn locate(&self, lambda: C64) -> Option<&Seed> {
        self.seeds.iter().find(|s| (s.lambda - lambda).norm() < self.r0)
    }

    pub fn nearest(&self, lambda: C64) -> Option<(&Seed, f64)> {
        self.seeds.iter().map(|s| (s, (s.lambda - lambda).norm())).min_by(|a, b| a.1.total_cmp(&b.1))
    }
}
