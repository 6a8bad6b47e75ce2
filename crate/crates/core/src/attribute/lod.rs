//! Level-of-detail partition by distance-threshold subsampling.

use std::collections::HashMap;

use super::AttributeError;
use crate::cloud::dist2;

/// Points split into refinement levels `R_1..R_S`.
///
/// The initial point seeds the visited set and belongs to no `R_s`; it is
/// first in coding order and forms `LoD_0` on its own.
#[derive(Debug, Clone, PartialEq)]
pub struct LodPartition {
    pub thresholds: Vec<f64>,
    pub initial: usize,
    pub refinements: Vec<Vec<usize>>,
    /// Level of every point; 0 for the initial point.
    pub level: Vec<u32>,
}

impl LodPartition {
    pub fn levels(&self) -> usize {
        self.refinements.len()
    }

    /// Coding order: the initial point, then `R_1`, `R_2`, ...
    pub fn order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.level.len());
        if !self.level.is_empty() {
            out.push(self.initial);
        }
        for r in &self.refinements {
            out.extend_from_slice(r);
        }
        out
    }

    /// Number of points in `LoD_s` (`s = 0` is the initial point alone).
    pub fn lod_size(&self, s: usize) -> usize {
        1 + self.refinements[..s].iter().map(Vec::len).sum::<usize>()
    }
}

/// Checks that thresholds strictly decrease and end at zero.
pub fn validate_thresholds(thresholds: &[f64]) -> Result<(), AttributeError> {
    let bad = |m: &str| Err(AttributeError::InvalidThresholds(m.to_string()));
    match thresholds.last() {
        None => return bad("no thresholds"),
        Some(&l) if l != 0.0 => return bad("last threshold must be 0"),
        _ => {}
    }
    if thresholds.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return bad("thresholds must be finite and non-negative");
    }
    if thresholds.windows(2).any(|w| w[1] >= w[0]) {
        return bad("thresholds must strictly decrease");
    }
    Ok(())
}

/// `count` thresholds halving from `side / 8`, the last forced to zero.
pub fn default_thresholds(side: f64, count: usize) -> Vec<f64> {
    let count = count.max(1);
    let first = side / 8.0;
    let mut t: Vec<f64> = (0..count).map(|s| first / 2f64.powi(s as i32)).collect();
    t[count - 1] = 0.0;
    t
}

type Cell = [i64; 3];

fn cell(p: &[f64; 3], size: f64) -> Cell {
    p.map(|c| (c / size).floor() as i64)
}

/// Builds the refinement levels: in pass `s`, points are visited in index
/// order and a point joins `R_s` when its distance to every visited point is
/// at least `thresholds[s-1]`.
pub fn generate_lod(positions: &[[f64; 3]], thresholds: &[f64], initial: usize) -> Result<LodPartition, AttributeError> {
    validate_thresholds(thresholds)?;
    let n = positions.len();
    if n > 0 && initial >= n {
        return Err(AttributeError::InvalidThresholds(format!("initial index {initial} out of range")));
    }
    let mut visited = vec![false; n];
    let mut level = vec![0u32; n];
    let mut refinements = Vec::with_capacity(thresholds.len());
    let mut members: Vec<usize> = Vec::with_capacity(n);
    if n > 0 {
        visited[initial] = true;
        members.push(initial);
    }
    for (s, &dist) in thresholds.iter().enumerate() {
        let mut r = Vec::new();
        if dist == 0.0 {
            for i in 0..n {
                if !visited[i] {
                    visited[i] = true;
                    r.push(i);
                }
            }
        } else {
            let d2 = dist * dist;
            let mut grid: HashMap<Cell, Vec<usize>> = HashMap::new();
            for &m in &members {
                grid.entry(cell(&positions[m], dist)).or_default().push(m);
            }
            for i in 0..n {
                if visited[i] {
                    continue;
                }
                let c = cell(&positions[i], dist);
                let mut far = true;
                'search: for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            if let Some(list) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                                if list.iter().any(|&m| dist2(&positions[m], &positions[i]) < d2) {
                                    far = false;
                                    break 'search;
                                }
                            }
                        }
                    }
                }
                if far {
                    visited[i] = true;
                    grid.entry(c).or_default().push(i);
                    r.push(i);
                }
            }
        }
        for &i in &r {
            level[i] = s as u32 + 1;
        }
        members.extend_from_slice(&r);
        refinements.push(r);
    }
    Ok(LodPartition {
        thresholds: thresholds.to_vec(),
        initial,
        refinements,
        level,
    })
}
