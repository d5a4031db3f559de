//! Brute-force reference implementations shared by the integration tests.
//! Nothing here calls into the library's algorithms; only plain data crosses
//! the boundary.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform-cost search over a row-major cost grid (255 = blocked).
///
/// Returns the cheapest start-to-goal cost in units of 2^-36, or `None` when
/// the goal is unreachable. Diagonals may not cut past a blocked axis cell.
pub fn ucs_cost(w: usize, h: usize, costs: &[u8], start: usize, goal: usize, factor: f64) -> Option<u64> {
    if costs[start] == 255 || costs[goal] == 255 {
        return None;
    }
    let blocked =
        |x: i64, y: i64| x < 0 || y < 0 || x >= w as i64 || y >= h as i64 || costs[(y * w as i64 + x) as usize] == 255;
    let scale = 2f64.powi(36);
    let weight = |step: f64, c: u8| (step * (1.0 + factor * c as f64 / 254.0) * scale).round() as u64;

    let mut best = vec![u64::MAX; w * h];
    let mut frontier = BTreeSet::new();
    best[start] = 0;
    frontier.insert((0u64, start));
    while let Some((d, u)) = frontier.pop_first() {
        if u == goal {
            return Some(d);
        }
        if d > best[u] {
            continue;
        }
        let (x, y) = ((u % w) as i64, (u / w) as i64);
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                if (dx, dy) == (0, 0) || blocked(x + dx, y + dy) {
                    continue;
                }
                let diagonal = dx != 0 && dy != 0;
                if diagonal && (blocked(x + dx, y) || blocked(x, y + dy)) {
                    continue;
                }
                let v = ((y + dy) * w as i64 + x + dx) as usize;
                let step = if diagonal { 2f64.sqrt() } else { 1.0 };
                let nd = d + weight(step, costs[v]);
                if nd < best[v] {
                    if best[v] != u64::MAX {
                        frontier.remove(&(best[v], v));
                    }
                    best[v] = nd;
                    frontier.insert((nd, v));
                }
            }
        }
    }
    None
}

/// Random cost grid: `obstacle_frac` of cells blocked, the rest uniformly
/// costed in 0..=254.
pub fn random_costs(r: &mut impl Rng, w: usize, h: usize, obstacle_frac: f64) -> Vec<u8> {
    (0..w * h)
        .map(|_| {
            if r.random_bool(obstacle_frac) {
                255
            } else {
                r.random_range(0..=254u8)
            }
        })
        .collect()
}

/// Expected inflated cost of every cell, by checking every occupied cell.
pub fn brute_inflation(
    w: usize,
    h: usize,
    res: f64,
    occupied: &[bool],
    footprint: f64,
    radius: f64,
    scaling: f64,
) -> Vec<u8> {
    let occ: Vec<(f64, f64)> = (0..w * h)
        .filter(|&i| occupied[i])
        .map(|i| ((i % w) as f64 * res, (i / w) as f64 * res))
        .collect();
    (0..w * h)
        .map(|i| {
            let (x, y) = ((i % w) as f64 * res, (i / w) as f64 * res);
            let d = occ
                .iter()
                .map(|&(ox, oy)| ((ox - x).powi(2) + (oy - y).powi(2)).sqrt())
                .fold(f64::INFINITY, f64::min);
            if d <= footprint + 1e-9 {
                255
            } else if d <= radius + 1e-9 {
                (254.0 * (-scaling * (d - footprint)).exp()).round() as u8
            } else {
                0
            }
        })
        .collect()
}

/// Scan filter reference: clip, then drop isolated returns judged on the
/// clipped scan, then keep every `decimation`-th ray. `None` is a no-return.
pub fn brute_filter(
    ranges: &[Option<f64>],
    min_range: f64,
    window: usize,
    jump: f64,
    decimation: usize,
) -> Vec<Option<f64>> {
    let clipped: Vec<Option<f64>> = ranges.iter().map(|r| r.filter(|&v| v >= min_range)).collect();
    let n = clipped.len();
    let mut out = Vec::new();
    for i in (0..n).step_by(decimation) {
        let Some(r) = clipped[i] else {
            out.push(None);
            continue;
        };
        let lo = i.saturating_sub(window);
        let hi = (i + window).min(n - 1);
        let left: Vec<f64> = (lo..i).filter_map(|j| clipped[j]).collect();
        let right: Vec<f64> = (i + 1..=hi).filter_map(|j| clipped[j]).collect();
        let far = |side: &[f64]| !side.is_empty() && side.iter().all(|&v| (v - r).abs() > jump);
        out.push(if far(&left) && far(&right) { None } else { Some(r) });
    }
    out
}

/// A random scan mixing walls, dust, gaps and isolated spikes.
pub fn random_scan(r: &mut impl Rng, n: usize, range_max: f64) -> Vec<Option<f64>> {
    let mut base = r.random_range(0.5..range_max * 0.8);
    (0..n)
        .map(|_| {
            if r.random_bool(0.05) {
                base = r.random_range(0.5..range_max * 0.8);
            }
            match r.random_range(0..100) {
                0..=7 => Some(r.random_range(0.0..0.15)),
                8..=15 => None,
                16..=23 => Some(r.random_range(0.2..range_max)),
                _ => Some((base + r.random_range(-0.05..0.05)).clamp(0.0, range_max)),
            }
        })
        .collect()
}

/// Oscillation amplitude of a signal around its mean, as the amplitude of a
/// sinusoid with the same RMS.
pub fn oscillation_amplitude(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let rms = (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64).sqrt();
    rms * 2f64.sqrt()
}

pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    ((p.0 - a.0 - t * dx).powi(2) + (p.1 - a.1 - t * dy).powi(2)).sqrt()
}
