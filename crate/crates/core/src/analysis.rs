//! Cross-seed variability of averaged explanation grids.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::FloatGrid;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("need at least 2 grids, got {0}")]
    TooFewGrids(usize),
    #[error("grid {index} is {got:?}, expected {expected:?}")]
    DimensionMismatch {
        index: usize,
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("{0} seed labels for {1} grids")]
    Labels(usize, usize),
    #[error("invalid threshold {0}")]
    Threshold(f64),
    #[error("thresholds must be ascending")]
    Unsorted,
}

/// S >= 2 same-shaped grids, one per seed.
#[derive(Debug, Clone)]
pub struct HeatMapStack {
    grids: Vec<FloatGrid>,
    seeds: Vec<u64>,
}

impl HeatMapStack {
    pub fn new(grids: Vec<FloatGrid>, seeds: Vec<u64>) -> Result<Self, AnalysisError> {
        if grids.len() < 2 {
            return Err(AnalysisError::TooFewGrids(grids.len()));
        }
        if seeds.len() != grids.len() {
            return Err(AnalysisError::Labels(seeds.len(), grids.len()));
        }
        let expected = (grids[0].width(), grids[0].height());
        for (index, g) in grids.iter().enumerate() {
            let got = (g.width(), g.height());
            if got != expected {
                return Err(AnalysisError::DimensionMismatch { index, expected, got });
            }
        }
        Ok(Self { grids, seeds })
    }

    /// Labels the grids 0, 1, 2, ...
    pub fn unlabeled(grids: Vec<FloatGrid>) -> Result<Self, AnalysisError> {
        let seeds = (0..grids.len() as u64).collect();
        Self::new(grids, seeds)
    }

    pub fn len(&self) -> usize {
        self.grids.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn grids(&self) -> &[FloatGrid] {
        &self.grids
    }

    pub fn seeds(&self) -> &[u64] {
        &self.seeds
    }

    fn shape(&self) -> (usize, usize) {
        (self.grids[0].width(), self.grids[0].height())
    }

    fn per_pixel(&self, f: impl Fn(&[f64]) -> f64) -> FloatGrid {
        let (w, h) = self.shape();
        let mut column = vec![0.0; self.len()];
        let values = (0..w * h)
            .map(|px| {
                for (c, g) in column.iter_mut().zip(&self.grids) {
                    *c = g.values()[px];
                }
                f(&column)
            })
            .collect();
        FloatGrid::new(w, h, values).expect("statistics of finite values are finite")
    }

    pub fn mean(&self) -> FloatGrid {
        self.per_pixel(mean)
    }
}

// shifted by the first value so an all-equal column has exactly that mean
fn mean(xs: &[f64]) -> f64 {
    let x0 = xs[0];
    x0 + xs.iter().map(|x| x - x0).sum::<f64>() / xs.len() as f64
}

fn population_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Per-pixel standard deviation, dividing by S.
pub fn pixel_sd(stack: &HeatMapStack) -> FloatGrid {
    stack.per_pixel(population_sd)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RSDReport {
    pub sd: FloatGrid,
    pub mean: FloatGrid,
    /// SD / |mean| on included pixels, 0 on excluded ones.
    pub rsd: FloatGrid,
    pub excluded: Vec<bool>,
    pub threshold: f64,
    pub max_rsd: f64,
    pub excluded_fraction: f64,
}

/// Scalar part of an [`RSDReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsdSummary {
    pub threshold: f64,
    pub max_rsd: f64,
    pub excluded_fraction: f64,
    pub excluded_pixels: usize,
    pub pixels: usize,
}

impl RSDReport {
    pub fn summary(&self) -> RsdSummary {
        RsdSummary {
            threshold: self.threshold,
            max_rsd: self.max_rsd,
            excluded_fraction: self.excluded_fraction,
            excluded_pixels: self.excluded.iter().filter(|&&e| e).count(),
            pixels: self.excluded.len(),
        }
    }
}

fn check_threshold(t: f64) -> Result<(), AnalysisError> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(AnalysisError::Threshold(t))
    }
}

/// Pixels with |mean| below `threshold` are excluded. A zero mean is always
/// excluded, since the ratio is undefined there.
pub fn pixel_rsd(stack: &HeatMapStack, threshold: f64) -> Result<RSDReport, AnalysisError> {
    check_threshold(threshold)?;
    let sd = pixel_sd(stack);
    let mean = stack.mean();
    let (w, h) = stack.shape();
    let mut excluded = Vec::with_capacity(w * h);
    let mut rsd = Vec::with_capacity(w * h);
    let mut max_rsd = 0.0f64;
    for (&s, &m) in sd.values().iter().zip(mean.values()) {
        let out = m.abs() < threshold || m == 0.0;
        excluded.push(out);
        if out {
            rsd.push(0.0);
        } else {
            let r = s / m.abs();
            max_rsd = max_rsd.max(r);
            rsd.push(r);
        }
    }
    let excluded_fraction = excluded.iter().filter(|&&e| e).count() as f64 / excluded.len() as f64;
    Ok(RSDReport {
        rsd: FloatGrid::new(w, h, rsd).expect("finite ratios"),
        sd,
        mean,
        excluded,
        threshold,
        max_rsd,
        excluded_fraction,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub max_rsd: f64,
    pub excluded_fraction: f64,
}

pub fn threshold_sweep(stack: &HeatMapStack, thresholds: &[f64]) -> Result<Vec<SweepPoint>, AnalysisError> {
    for t in thresholds {
        check_threshold(*t)?;
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(AnalysisError::Unsorted);
    }
    thresholds
        .iter()
        .map(|&t| {
            let r = pixel_rsd(stack, t)?;
            Ok(SweepPoint {
                threshold: t,
                max_rsd: r.max_rsd,
                excluded_fraction: r.excluded_fraction,
            })
        })
        .collect()
}

/// CSV with header `threshold,max_rsd,excluded_fraction`.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("threshold,max_rsd,excluded_fraction\n");
    for p in points {
        out.push_str(&format!("{},{},{}\n", p.threshold, p.max_rsd, p.excluded_fraction));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(values: Vec<f64>) -> FloatGrid {
        FloatGrid::new(values.len(), 1, values).unwrap()
    }

    // two-pass sample variance scaled back to population variance
    fn two_pass_sd(xs: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
        let corr: f64 = xs.iter().map(|x| x - m).sum();
        ((ss - corr * corr / n) / n).sqrt()
    }

    #[test]
    fn two_point_arithmetic() {
        let stack = HeatMapStack::unlabeled(vec![grid(vec![0.4]), grid(vec![0.6])]).unwrap();
        let sd = pixel_sd(&stack);
        assert!((sd.values()[0] - 0.1).abs() < 1e-15);
        let r = pixel_rsd(&stack, 0.5).unwrap();
        assert!((r.mean.values()[0] - 0.5).abs() < 1e-15);
        assert!(!r.excluded[0]);
        assert!((r.rsd.values()[0] - 0.2).abs() < 1e-15);
        assert!((r.max_rsd - 0.2).abs() < 1e-15);
    }

    #[test]
    fn identical_grids() {
        let g = grid(vec![0.5, 0.9, -0.7, 0.1]);
        let stack = HeatMapStack::unlabeled(vec![g.clone(), g.clone(), g]).unwrap();
        assert!(pixel_sd(&stack).values().iter().all(|&v| v == 0.0));
        let r = pixel_rsd(&stack, 0.5).unwrap();
        assert_eq!(r.excluded, vec![false, false, false, true]);
        assert_eq!(r.max_rsd, 0.0);
        assert_eq!(r.excluded_fraction, 0.25);
    }

    #[test]
    fn threshold_above_everything() {
        let stack = HeatMapStack::unlabeled(vec![grid(vec![0.1, -0.2]), grid(vec![0.3, 0.0])]).unwrap();
        let r = pixel_rsd(&stack, 5.0).unwrap();
        assert!(r.excluded.iter().all(|&e| e));
        assert_eq!(r.max_rsd, 0.0);
        assert_eq!(r.excluded_fraction, 1.0);
    }

    #[test]
    fn zero_threshold_drops_only_zero_means() {
        let stack = HeatMapStack::unlabeled(vec![grid(vec![0.1, -0.2, 0.0]), grid(vec![0.3, 0.2, 0.0])]).unwrap();
        let r = pixel_rsd(&stack, 0.0).unwrap();
        assert_eq!(r.excluded, vec![false, true, true]);
    }

    #[test]
    fn stack_validation() {
        assert_eq!(
            HeatMapStack::unlabeled(vec![grid(vec![1.0])]).unwrap_err(),
            AnalysisError::TooFewGrids(1)
        );
        let err = HeatMapStack::unlabeled(vec![grid(vec![1.0]), grid(vec![1.0, 2.0])]).unwrap_err();
        assert!(matches!(err, AnalysisError::DimensionMismatch { index: 1, .. }));
        assert!(HeatMapStack::new(vec![grid(vec![1.0]), grid(vec![1.0])], vec![1]).is_err());
        let stack = HeatMapStack::unlabeled(vec![grid(vec![1.0]), grid(vec![1.0])]).unwrap();
        assert!(pixel_rsd(&stack, -0.1).is_err());
        assert_eq!(threshold_sweep(&stack, &[0.5, 0.1]).unwrap_err(), AnalysisError::Unsorted);
    }

    #[test]
    fn csv_layout() {
        let pts = [SweepPoint { threshold: 0.5, max_rsd: 0.25, excluded_fraction: 0.5 }];
        assert_eq!(sweep_csv(&pts), "threshold,max_rsd,excluded_fraction\n0.5,0.25,0.5\n");
    }

    fn stacks() -> impl Strategy<Value = Vec<Vec<f64>>> {
        (2usize..6, 1usize..30).prop_flat_map(|(s, n)| {
            proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, n), s)
        })
    }

    proptest! {
        #[test]
        fn sd_matches_two_pass_oracle(rows in stacks()) {
            let stack = HeatMapStack::unlabeled(rows.iter().cloned().map(grid).collect()).unwrap();
            let sd = pixel_sd(&stack);
            for px in 0..rows[0].len() {
                let col: Vec<f64> = rows.iter().map(|r| r[px]).collect();
                prop_assert!((sd.values()[px] - two_pass_sd(&col)).abs() < 1e-12);
            }
        }

        #[test]
        fn sd_is_permutation_invariant(rows in stacks()) {
            let a = pixel_sd(&HeatMapStack::unlabeled(rows.iter().cloned().map(grid).collect()).unwrap());
            let mut rev = rows.clone();
            rev.reverse();
            let b = pixel_sd(&HeatMapStack::unlabeled(rev.into_iter().map(grid).collect()).unwrap());
            for (x, y) in a.values().iter().zip(b.values()) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn adding_the_mean_never_raises_sd(rows in stacks()) {
            let stack = HeatMapStack::unlabeled(rows.iter().cloned().map(grid).collect()).unwrap();
            let before = pixel_sd(&stack);
            let mut grids = stack.grids().to_vec();
            grids.push(stack.mean());
            let after = pixel_sd(&HeatMapStack::unlabeled(grids).unwrap());
            for (b, a) in before.values().iter().zip(after.values()) {
                prop_assert!(*a <= *b + 1e-12);
            }
        }

        #[test]
        fn sweep_maxima_non_increasing(rows in stacks(), mut ts in proptest::collection::vec(0.0f64..1.0, 1..6)) {
            ts.sort_by(f64::total_cmp);
            let stack = HeatMapStack::unlabeled(rows.into_iter().map(grid).collect()).unwrap();
            let pts = threshold_sweep(&stack, &ts).unwrap();
            for w in pts.windows(2) {
                prop_assert!(w[1].max_rsd <= w[0].max_rsd);
                prop_assert!(w[1].excluded_fraction >= w[0].excluded_fraction);
            }
        }
    }
}
