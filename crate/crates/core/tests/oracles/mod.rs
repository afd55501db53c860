//! Brute-force reference implementations used as test oracles. Nothing here
//! calls into the library's numeric code paths.
#![allow(dead_code)]

use fus_core::Point;

/// Normalized predictive entropy per pixel from `maps[k][pixel][class]`.
pub fn entropy(maps: &[Vec<Vec<f64>>]) -> Vec<f64> {
    let k = maps.len() as f64;
    let pixels = maps[0].len();
    let classes = maps[0][0].len();
    (0..pixels)
        .map(|px| {
            let mut h = 0.0;
            for c in 0..classes {
                let p: f64 = maps.iter().map(|m| m[px][c]).sum::<f64>() / k;
                if p > 0.0 {
                    h -= p * p.ln();
                }
            }
            h / (classes as f64).ln()
        })
        .collect()
}

pub fn softmax(v: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = v.iter().map(|x| x.exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

pub fn decay(d: f64, k: f64) -> f64 {
    0.5f64.powf(k * d)
}

pub fn dist(a: &Point, b: &Point) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2) + (a.z - b.z).powi(2)).sqrt()
}

/// Exhaustive nearest distance, summed in the same component order as the
/// library so results can be compared exactly.
pub fn nearest(p: &Point, set: &[Point]) -> f64 {
    set.iter()
        .map(|q| {
            let (dx, dy, dz) = (p.x - q.x, p.y - q.y, p.z - q.z);
            dx * dx + dy * dy + dz * dz
        })
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

pub fn chamfer(a: &[Point], b: &[Point]) -> f64 {
    let ab: f64 = a.iter().map(|p| nearest(p, b)).sum::<f64>() / a.len() as f64;
    let ba: f64 = b.iter().map(|p| nearest(p, a)).sum::<f64>() / b.len() as f64;
    ab + ba
}

pub fn coverage(sampled: &[Point], reference: &[Point], r: f64) -> f64 {
    let hit = reference
        .iter()
        .filter(|q| sampled.iter().any(|p| dist(p, q) <= r))
        .count();
    hit as f64 / reference.len() as f64
}

/// Exact inclusion probability of every candidate under `n` sequential draws
/// without replacement, each proportional to the remaining weights; enumerates
/// every ordered draw sequence.
pub fn inclusion_probabilities(weights: &[f64], n: usize) -> Vec<f64> {
    fn recurse(weights: &[f64], taken: &mut Vec<bool>, left: usize, prob: f64, out: &mut [f64]) {
        if left == 0 {
            for (i, t) in taken.iter().enumerate() {
                if *t {
                    out[i] += prob;
                }
            }
            return;
        }
        let total: f64 = weights
            .iter()
            .zip(taken.iter())
            .filter(|(_, t)| !**t)
            .map(|(w, _)| w)
            .sum();
        for i in 0..weights.len() {
            if taken[i] || weights[i] == 0.0 {
                continue;
            }
            taken[i] = true;
            recurse(weights, taken, left - 1, prob * weights[i] / total, out);
            taken[i] = false;
        }
    }
    let mut out = vec![0.0; weights.len()];
    recurse(weights, &mut vec![false; weights.len()], n, 1.0, &mut out);
    out
}

/// Three binomial standard errors for `p` estimated from `trials` draws.
pub fn three_sigma(p: f64, trials: usize) -> f64 {
    3.0 * (p * (1.0 - p) / trials as f64).sqrt()
}

/// Farthest point sampling by direct definition.
pub fn fps(points: &[Point], n: usize) -> Vec<usize> {
    let m = points.len() as f64;
    let c = Point::new(
        points.iter().map(|p| p.x).sum::<f64>() / m,
        points.iter().map(|p| p.y).sum::<f64>() / m,
        points.iter().map(|p| p.z).sum::<f64>() / m,
    );
    let mut picks = vec![0];
    for i in 1..points.len() {
        if dist(&points[i], &c) > dist(&points[picks[0]], &c) {
            picks[0] = i;
        }
    }
    while picks.len() < n.min(points.len()) {
        let score = |i: usize| {
            picks
                .iter()
                .map(|&j| dist(&points[i], &points[j]))
                .fold(f64::INFINITY, f64::min)
        };
        let best = (0..points.len())
            .filter(|i| !picks.contains(i))
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if score(b) >= score(i) => Some(b),
                _ => Some(i),
            })
            .unwrap();
        picks.push(best);
    }
    picks
}
