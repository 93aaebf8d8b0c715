use rand::seq::SliceRandom;
use rand::Rng;

use super::candidates::{flat_index, multi_index};
use crate::error::{Error, Result};

const MAX_RESTARTS: usize = 200;

/// Discrete Latin hypercube design on a tensor grid of the given shape.
///
/// Returns `initial` followed by `n_p − 1` distinct flat indices. Each axis is
/// split into `n_p − 1` bins in grid coordinates, every bin receives one sample
/// at a uniform jitter, and the sample is snapped to the nearest free grid
/// point inside its bin. Conflicts are resolved by augmenting reassignment; a
/// design that cannot be completed is redrawn.
pub fn lhs_baseline<R: Rng + ?Sized>(shape: &[usize], n_p: usize, initial: usize, rng: &mut R) -> Result<Vec<usize>> {
    let total: usize = shape.iter().product();
    if shape.is_empty() || total == 0 {
        return Err(Error::InvalidArgument("LHS needs a nonempty grid".into()));
    }
    if n_p == 0 || n_p > total {
        return Err(Error::InvalidArgument(format!("cannot place {n_p} samples on a grid of {total} points")));
    }
    if initial >= total {
        return Err(Error::InvalidArgument(format!("initial index {initial} out of range")));
    }
    let m = n_p - 1;
    if m == 0 {
        return Ok(vec![initial]);
    }

    for _ in 0..MAX_RESTARTS {
        let perms: Vec<Vec<usize>> = shape
            .iter()
            .map(|_| {
                let mut p: Vec<usize> = (0..m).collect();
                p.shuffle(rng);
                p
            })
            .collect();
        let options: Vec<Vec<usize>> = (0..m)
            .map(|s| {
                let target: Vec<f64> = shape
                    .iter()
                    .enumerate()
                    .map(|(a, &n)| (perms[a][s] as f64 + rng.random::<f64>()) / m as f64 * (n - 1) as f64)
                    .collect();
                let per_axis: Vec<Vec<usize>> = shape
                    .iter()
                    .enumerate()
                    .map(|(a, &n)| admissible(perms[a][s], m, n, target[a]))
                    .collect();
                let mut pts: Vec<(f64, usize)> = cartesian(&per_axis)
                    .into_iter()
                    .map(|idx| {
                        let dist: f64 = idx.iter().zip(&target).map(|(&i, &x)| (i as f64 - x).powi(2)).sum();
                        (dist, flat_index(shape, &idx))
                    })
                    .filter(|&(_, f)| f != initial)
                    .collect();
                pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                pts.into_iter().map(|(_, f)| f).collect()
            })
            .collect();
        if let Some(assigned) = match_samples(&options, total) {
            let mut design = Vec::with_capacity(n_p);
            design.push(initial);
            design.extend(assigned);
            return Ok(design);
        }
    }
    Err(Error::InvalidArgument(format!(
        "no duplicate-free Latin hypercube design of {n_p} samples found on grid {shape:?}"
    )))
}

/// Grid indices inside bin `bin` of `m` on an axis of `n` points, or the two
/// neighbours of `x` when the bin is narrower than one grid step.
fn admissible(bin: usize, m: usize, n: usize, x: f64) -> Vec<usize> {
    if n == 1 {
        return vec![0];
    }
    let width = (n - 1) as f64 / m as f64;
    let lo = (bin as f64 * width).ceil() as usize;
    let hi = (((bin + 1) as f64 * width).floor() as usize).min(n - 1);
    if lo <= hi {
        (lo..=hi).collect()
    } else {
        let f = x.floor() as usize;
        vec![f.min(n - 1), (f + 1).min(n - 1)]
    }
}

fn cartesian(per_axis: &[Vec<usize>]) -> Vec<Vec<usize>> {
    per_axis.iter().fold(vec![vec![]], |acc, options| {
        acc.iter()
            .flat_map(|prefix| {
                options.iter().map(move |&o| {
                    let mut v = prefix.clone();
                    v.push(o);
                    v
                })
            })
            .collect()
    })
}

/// Assigns each sample a distinct point from its preference list, trying
/// preferences in order.
fn match_samples(options: &[Vec<usize>], total: usize) -> Option<Vec<usize>> {
    let mut owner: Vec<Option<usize>> = vec![None; total];
    for s in 0..options.len() {
        let mut visited = vec![false; total];
        if !augment(s, options, &mut owner, &mut visited) {
            return None;
        }
    }
    let mut assigned = vec![0; options.len()];
    for (point, o) in owner.iter().enumerate() {
        if let Some(s) = o {
            assigned[*s] = point;
        }
    }
    Some(assigned)
}

fn augment(s: usize, options: &[Vec<usize>], owner: &mut [Option<usize>], visited: &mut [bool]) -> bool {
    for &p in &options[s] {
        if visited[p] {
            continue;
        }
        visited[p] = true;
        if owner[p].is_none_or(|other| augment(other, options, owner, visited)) {
            owner[p] = Some(s);
            return true;
        }
    }
    false
}

/// Whether the samples (excluding the first) can be put one per bin on every
/// axis when each axis is split into `samples.len() − 1` bins.
pub fn occupies_distinct_strata(shape: &[usize], samples: &[usize]) -> bool {
    let added = &samples[1..];
    let m = added.len();
    if m == 0 {
        return true;
    }
    shape.iter().enumerate().all(|(a, &n)| {
        let width = (n - 1) as f64 / m as f64;
        let options: Vec<Vec<usize>> = added
            .iter()
            .map(|&f| {
                let x = multi_index(shape, f)[a] as f64;
                (0..m)
                    .filter(|&b| b as f64 * width <= x + 1e-12 && x <= (b + 1) as f64 * width + 1e-12)
                    .collect()
            })
            .collect();
        match_samples(&options, m).is_some()
    })
}
