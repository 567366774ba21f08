use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use super::GenError;

/// Discrete power law `P(x) ∝ x^-exponent` on `[lo, hi]`.
#[derive(Debug, Clone)]
pub struct TruncatedPowerLaw {
    lo: usize,
    index: WeightedIndex<f64>,
}

impl TruncatedPowerLaw {
    pub fn new(exponent: f64, lo: usize, hi: usize) -> Result<Self, GenError> {
        if lo > hi {
            return Err(GenError::InvalidParams(format!("power-law support [{lo}, {hi}] is empty")));
        }
        if lo == 0 {
            return Err(GenError::InvalidParams("power-law support must start above 0".into()));
        }
        let weights: Vec<f64> = (lo..=hi).map(|x| (x as f64).powf(-exponent)).collect();
        let index = WeightedIndex::new(weights)
            .map_err(|e| GenError::InvalidParams(format!("power-law weights: {e}")))?;
        Ok(Self { lo, index })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.lo + self.index.sample(rng)
    }
}

/// Draws `count` values from the truncated power law on `[lo, hi]`.
pub fn sample_truncated_power_law<R: Rng + ?Sized>(
    exponent: f64,
    lo: usize,
    hi: usize,
    count: usize,
    rng: &mut R,
) -> Result<Vec<usize>, GenError> {
    let dist = TruncatedPowerLaw::new(exponent, lo, hi)?;
    Ok((0..count).map(|_| dist.sample(rng)).collect())
}

/// Exact mean of the truncated power law on `[lo, hi]`.
pub fn truncated_mean(exponent: f64, lo: usize, hi: usize) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for x in lo..=hi {
        let p = (x as f64).powf(-exponent);
        num += x as f64 * p;
        den += p;
    }
    num / den
}

/// Lower degree cutoff whose truncated mean on `[k_min, k_max]` is closest to
/// `avg_k`. The mean is increasing in the cutoff, so a scan over `[2, k_max]`
/// finds the bracket.
pub fn solve_k_min(tau1: f64, avg_k: f64, k_max: usize) -> Result<usize, GenError> {
    if k_max < 2 {
        return Err(GenError::InvalidParams(format!("k_max = {k_max} leaves no degree range")));
    }
    let low = truncated_mean(tau1, 2, k_max);
    let high = k_max as f64;
    let unreachable = || GenError::InvalidParams(format!(
        "mean degree {avg_k} unreachable: achievable range is [{low:.3}, {high:.3}] for tau1 = {tau1}, k_max = {k_max}"
    ));
    if avg_k > high {
        return Err(unreachable());
    }
    let (best, gap) = (2..=k_max)
        .map(|lo| (lo, (truncated_mean(tau1, lo, k_max) - avg_k).abs()))
        .fold((2, f64::INFINITY), |acc, cur| if cur.1 < acc.1 { cur } else { acc });
    if gap > 1.0 {
        return Err(unreachable());
    }
    Ok(best)
}

/// Community sizes from the truncated power law on `[s_min, s_max]`, summing
/// to exactly `n`. Draws continue until the total reaches `n`; any excess is
/// taken from the last draw and, if that would push it below `s_min`, from
/// the slack of earlier communities. Draws that cannot be repaired are
/// discarded and resampled.
pub fn sample_community_sizes<R: Rng + ?Sized>(
    n: usize,
    tau2: f64,
    s_min: usize,
    s_max: usize,
    rng: &mut R,
) -> Result<Vec<usize>, GenError> {
    if s_min < 2 || s_max < s_min {
        return Err(GenError::InvalidParams(format!("community sizes [{s_min}, {s_max}] invalid")));
    }
    if n < s_min {
        return Err(GenError::InvalidParams(format!("{n} nodes cannot fill a community of {s_min}")));
    }
    let feasible = (1..=n / s_min).any(|c| c * s_min <= n && n <= c * s_max);
    if !feasible {
        return Err(GenError::InvalidParams(format!(
            "no community count splits {n} nodes into sizes within [{s_min}, {s_max}]"
        )));
    }
    let dist = TruncatedPowerLaw::new(tau2, s_min, s_max.min(n))?;
    for _ in 0..10_000 {
        let mut sizes = Vec::new();
        let mut total = 0;
        while total < n {
            let s = dist.sample(rng);
            sizes.push(s);
            total += s;
        }
        let mut excess = total - n;
        let last = sizes.len() - 1;
        let take = excess.min(sizes[last] - s_min);
        sizes[last] -= take;
        excess -= take;
        if excess > 0 {
            let slack: usize = sizes[..last].iter().map(|&s| s - s_min).sum();
            if slack < excess {
                continue;
            }
            while excess > 0 {
                let i = rng.gen_range(0..last);
                if sizes[i] > s_min {
                    sizes[i] -= 1;
                    excess -= 1;
                }
            }
        }
        return Ok(sizes);
    }
    Err(GenError::Stage { stage: "community sizes", detail: "resampling limit reached".into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn degenerate_support() {
        let mut rng = seed::rng(1);
        assert_eq!(sample_truncated_power_law(2.5, 25, 25, 100, &mut rng).unwrap(), vec![25; 100]);
        assert!(sample_truncated_power_law(2.0, 3, 5, 0, &mut rng).unwrap().is_empty());
        assert!(sample_truncated_power_law(2.0, 6, 5, 1, &mut rng).is_err());
    }

    #[test]
    fn empirical_mean_matches_direct_sum() {
        let oracle = {
            let xs = 2..=50u32;
            let num: f64 = xs.clone().map(|x| f64::from(x) * f64::from(x).powi(-2)).sum();
            let den: f64 = xs.map(|x| f64::from(x).powi(-2)).sum();
            num / den
        };
        let mut rng = seed::rng(7);
        let draws = sample_truncated_power_law(2.0, 2, 50, 1_000_000, &mut rng).unwrap();
        let mean = draws.iter().sum::<usize>() as f64 / draws.len() as f64;
        assert!(((mean - oracle) / oracle).abs() < 0.01, "mean {mean} vs {oracle}");
        assert!(draws.iter().all(|&x| (2..=50).contains(&x)));
    }

    #[test]
    fn k_min_examples() {
        assert_eq!(solve_k_min(2.0, 50.0, 50).unwrap(), 50);
        // closed-form oracle: scan every cutoff directly
        let oracle = (2..=50usize)
            .min_by(|&a, &b| {
                let ma = (truncated_mean(2.0, a, 50) - 25.0).abs();
                let mb = (truncated_mean(2.0, b, 50) - 25.0).abs();
                ma.partial_cmp(&mb).unwrap()
            })
            .unwrap();
        assert_eq!(oracle, 15);
        assert_eq!(solve_k_min(2.0, 25.0, 50).unwrap(), oracle);
        assert!(solve_k_min(2.0, 51.0, 50).is_err());
    }

    #[test]
    fn community_size_examples() {
        let mut rng = seed::rng(3);
        assert_eq!(sample_community_sizes(100, 1.0, 100, 100, &mut rng).unwrap(), vec![100]);
        for _ in 0..200 {
            let sizes = sample_community_sizes(100, 1.0, 10, 50, &mut rng).unwrap();
            assert_eq!(sizes.iter().sum::<usize>(), 100);
            assert!(sizes.iter().all(|&s| (10..=50).contains(&s)));
        }
        assert!(sample_community_sizes(5, 1.0, 10, 50, &mut rng).is_err());
    }
}
