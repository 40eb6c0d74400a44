//! Three-objective hypervolume by dimension sweep.
//!
//! Points are visited in ascending third coordinate while a 2-D staircase of
//! the first two coordinates is maintained in an ordered map; the dominated
//! area of the staircase is updated incrementally on every insertion, and the
//! volume accumulates area times the gap to the next sweep height.
//! `O(n log n)` overall.

use std::collections::BTreeMap;

use super::MooError;
use crate::lime::GoalVector;

/// Order-preserving key for non-negative finite floats.
fn key(x: f64) -> u64 {
    // +0.0 and -0.0 must share a key
    (x + 0.0).to_bits()
}

struct Staircase {
    // x -> y, with y strictly decreasing as x increases
    steps: BTreeMap<u64, f64>,
    area: f64,
    ref_x: f64,
    ref_y: f64,
}

impl Staircase {
    fn insert(&mut self, x: f64, y: f64) {
        let xk = key(x);
        if let Some((_, &qy)) = self.steps.range(..=xk).next_back() {
            if qy <= y {
                return;
            }
        }
        let upper = self
            .steps
            .range(..xk)
            .next_back()
            .map_or(self.ref_y, |(_, &qy)| qy);
        let mut gain = 0.0;
        let mut cur_x = x;
        let mut level = upper;
        let mut end_x = self.ref_x;
        let mut removed = Vec::new();
        for (&sk, &sy) in self.steps.range(xk..) {
            let sx = f64::from_bits(sk);
            if sy >= y {
                gain += (sx - cur_x) * (level - y);
                cur_x = sx;
                level = sy;
                removed.push(sk);
            } else {
                end_x = sx;
                break;
            }
        }
        gain += (end_x - cur_x) * (level - y);
        for k in removed {
            self.steps.remove(&k);
        }
        self.steps.insert(xk, y);
        self.area += gain;
    }
}

/// Lebesgue measure of the union of boxes `[p, reference]`.
///
/// Every point must lie inside `[0, reference]`.
pub fn hypervolume3(points: &[GoalVector], reference: [f64; 3]) -> Result<f64, MooError> {
    for p in points {
        if (0..3).any(|i| !(0.0..=reference[i]).contains(&p[i])) {
            return Err(MooError::OutsideReference(p.0));
        }
    }
    let mut sorted: Vec<&GoalVector> = points.iter().collect();
    sorted.sort_by(|a, b| {
        a[2].total_cmp(&b[2])
            .then(a[0].total_cmp(&b[0]))
            .then(a[1].total_cmp(&b[1]))
    });
    let mut stairs = Staircase {
        steps: BTreeMap::new(),
        area: 0.0,
        ref_x: reference[0],
        ref_y: reference[1],
    };
    let mut volume = 0.0;
    let mut z = match sorted.first() {
        Some(p) => p[2],
        None => return Ok(0.0),
    };
    for p in sorted {
        volume += stairs.area * (p[2] - z);
        z = p[2];
        stairs.insert(p[0], p[1]);
    }
    volume += stairs.area * (reference[2] - z);
    Ok(volume)
}

/// Hypervolume against the unit-cube corner (1, 1, 1).
pub fn hypervolume_unit(points: &[GoalVector]) -> Result<f64, MooError> {
    hypervolume3(points, [1.0; 3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn g(a: f64, b: f64, c: f64) -> GoalVector {
        GoalVector([a, b, c])
    }

    /// Inclusion-exclusion over all nonempty subsets: the intersection of boxes
    /// `[p, 1]` is the box at their componentwise maximum.
    fn inclusion_exclusion(points: &[GoalVector]) -> f64 {
        let n = points.len();
        let mut total = 0.0;
        for mask in 1u32..(1 << n) {
            let mut corner = [0.0f64; 3];
            for (i, p) in points.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    for d in 0..3 {
                        corner[d] = corner[d].max(p[d]);
                    }
                }
            }
            let vol: f64 = corner.iter().map(|c| 1.0 - c).product();
            total += if mask.count_ones() % 2 == 1 { vol } else { -vol };
        }
        total
    }

    #[test]
    fn worked_examples() {
        assert_eq!(hypervolume_unit(&[g(0.0, 0.0, 0.0)]).unwrap(), 1.0);
        assert_eq!(hypervolume_unit(&[g(0.5, 0.5, 0.5)]).unwrap(), 0.125);
        let two = hypervolume_unit(&[g(0.2, 0.8, 0.5), g(0.8, 0.2, 0.5)]).unwrap();
        assert!((two - 0.14).abs() < 1e-15);
        assert_eq!(hypervolume_unit(&[]).unwrap(), 0.0);
    }

    #[test]
    fn dominated_points_add_nothing() {
        let base = hypervolume_unit(&[g(0.1, 0.2, 0.3)]).unwrap();
        let with = hypervolume_unit(&[g(0.1, 0.2, 0.3), g(0.5, 0.5, 0.5), g(0.1, 0.2, 0.3)]).unwrap();
        assert_eq!(base, with);
    }

    #[test]
    fn rejects_points_outside_box() {
        assert!(hypervolume_unit(&[g(1.1, 0.0, 0.0)]).is_err());
        assert!(hypervolume_unit(&[g(-0.1, 0.0, 0.0)]).is_err());
    }

    #[test]
    fn matches_inclusion_exclusion() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(1..=6);
            let pts: Vec<GoalVector> = (0..n).map(|_| g(rng.gen(), rng.gen(), rng.gen())).collect();
            let got = hypervolume_unit(&pts).unwrap();
            assert!((got - inclusion_exclusion(&pts)).abs() < 1e-12);
        }
    }

    #[test]
    fn ties_on_grid_match_inclusion_exclusion() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.gen_range(1..=6);
            let pts: Vec<GoalVector> = (0..n)
                .map(|_| g(rng.gen_range(0..4) as f64 / 4.0, rng.gen_range(0..4) as f64 / 4.0, rng.gen_range(0..4) as f64 / 4.0))
                .collect();
            let got = hypervolume_unit(&pts).unwrap();
            assert!((got - inclusion_exclusion(&pts)).abs() < 1e-12, "{pts:?}");
        }
    }

    #[test]
    fn order_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut pts: Vec<GoalVector> = (0..50).map(|_| g(rng.gen(), rng.gen(), rng.gen())).collect();
        let a = hypervolume_unit(&pts).unwrap();
        pts.reverse();
        assert!((a - hypervolume_unit(&pts).unwrap()).abs() < 1e-12);
    }
}
