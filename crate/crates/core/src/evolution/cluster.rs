//! Objective-space clustering of the population for mating restriction.

use alloc::vec;
use alloc::vec::Vec;

use crate::metrics::ObjectivePoint;
use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Members of every cluster, sorted; clusters may overlap.
    pub members: Vec<Vec<usize>>,
    /// The cluster each individual varies in.
    pub home: Vec<usize>,
}

/// Balanced k-leader clustering on range-normalized objectives. Leaders are
/// spread by farthest-point selection from a random start; each cluster holds
/// the `2n/k` individuals nearest its leader. An individual's home is the
/// nearest leader whose cluster holds it, or the nearest leader overall.
pub fn cluster_population(points: &[ObjectivePoint], k: usize, rng: &mut CounterRng) -> Clustering {
    let n = points.len();
    if k <= 1 || n <= k {
        return Clustering {
            members: vec![(0..n).collect()],
            home: vec![0; n],
        };
    }
    let norm = |f: &dyn Fn(&ObjectivePoint) -> f64| {
        let (lo, hi) = points
            .iter()
            .map(f)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        let span = if hi > lo { hi - lo } else { 1.0 };
        points
            .iter()
            .map(|p| (f(p) - lo) / span)
            .collect::<Vec<f64>>()
    };
    let x = norm(&|p| p.ibs);
    let y = norm(&|p| f64::from(p.complexity));
    let dist = |a: usize, b: usize| {
        let (dx, dy) = (x[a] - x[b], y[a] - y[b]);
        dx * dx + dy * dy
    };

    let mut leaders = vec![rng.below(n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| dist(i, leaders[0])).collect();
    while leaders.len() < k {
        let far = (0..n).fold(
            0,
            |best, i| if nearest[i] > nearest[best] { i } else { best },
        );
        leaders.push(far);
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(dist(i, far));
        }
    }

    let size = (2 * n / k).clamp(1, n);
    let members: Vec<Vec<usize>> = leaders
        .iter()
        .map(|&l| {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| dist(a, l).total_cmp(&dist(b, l)).then(a.cmp(&b)));
            order.truncate(size);
            order.sort_unstable();
            order
        })
        .collect();
    let home = (0..n)
        .map(|i| {
            let closest = |pool: &mut dyn Iterator<Item = usize>| {
                pool.min_by(|&a, &b| {
                    dist(i, leaders[a])
                        .total_cmp(&dist(i, leaders[b]))
                        .then(a.cmp(&b))
                })
            };
            let mut holding = (0..k).filter(|&c| members[c].binary_search(&i).is_ok());
            closest(&mut holding)
                .or_else(|| closest(&mut (0..k)))
                .expect("k >= 1")
        })
        .collect();
    Clustering { members, home }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_cluster_is_everyone() {
        let pts = vec![ObjectivePoint::new(0.2, 3); 5];
        let c = cluster_population(&pts, 1, &mut CounterRng::new(0));
        assert_eq!(c.members, vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(c.home, vec![0; 5]);
    }

    #[test]
    fn separated_groups_stay_apart() {
        let mut pts = vec![ObjectivePoint::new(0.1, 1); 6];
        pts.extend(vec![ObjectivePoint::new(0.9, 40); 6]);
        let c = cluster_population(&pts, 2, &mut CounterRng::new(3));
        assert_eq!(c.members.len(), 2);
        for (i, &h) in c.home.iter().enumerate() {
            assert!(c.members[h].binary_search(&i).is_ok());
        }
        assert!(c.home[..6].iter().all(|&h| h == c.home[0]));
        assert!(c.home[6..].iter().all(|&h| h != c.home[0]));
    }
}
