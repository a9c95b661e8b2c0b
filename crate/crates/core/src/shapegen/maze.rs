use std::collections::BTreeSet;

use super::{Family, Result, ShapeError, ShapeGeometry};
use crate::geom::Segment;
use crate::rng::SplitMix64;

pub const MIN_MAZE_GRID: u32 = 2;

/// Perfect maze on a `grid_n x grid_n` grid by randomized depth-first
/// backtracking.
///
/// Cell `(r, c)` occupies `[c/n, (c+1)/n) x [r/n, (r+1)/n)`. The output holds
/// the four outer walls as full-length segments followed by one unit segment
/// per interior wall that was not carved.
pub fn generate_maze(seed: u64, grid_n: u32) -> Result<ShapeGeometry> {
    if grid_n < MIN_MAZE_GRID {
        return Err(ShapeError::InvalidParameter {
            name: "grid_n",
            value: grid_n as u64,
            min: MIN_MAZE_GRID as u64,
        });
    }
    let n = grid_n as usize;
    let mut rng = SplitMix64::new(seed);
    let mut visited = vec![false; n * n];
    let mut passages: BTreeSet<(usize, usize)> = BTreeSet::new();

    let start = rng.below((n * n) as u64) as usize;
    visited[start] = true;
    let mut stack = vec![start];
    while let Some(&cell) = stack.last() {
        let (r, c) = (cell / n, cell % n);
        // N, E, S, W
        let mut options = Vec::with_capacity(4);
        if r > 0 && !visited[cell - n] {
            options.push(cell - n);
        }
        if c + 1 < n && !visited[cell + 1] {
            options.push(cell + 1);
        }
        if r + 1 < n && !visited[cell + n] {
            options.push(cell + n);
        }
        if c > 0 && !visited[cell - 1] {
            options.push(cell - 1);
        }
        if options.is_empty() {
            stack.pop();
            continue;
        }
        let next = options[rng.below(options.len() as u64) as usize];
        visited[next] = true;
        passages.insert((cell.min(next), cell.max(next)));
        stack.push(next);
    }

    let unit = 1.0 / grid_n as f64;
    let at = |k: usize| k as f64 * unit;
    let mut walls: Vec<Segment> = vec![
        [[0.0, 0.0], [1.0, 0.0]],
        [[1.0, 0.0], [1.0, 1.0]],
        [[1.0, 1.0], [0.0, 1.0]],
        [[0.0, 1.0], [0.0, 0.0]],
    ];
    for r in 0..n {
        for c in 0..n {
            let cell = r * n + c;
            if c + 1 < n && !passages.contains(&(cell, cell + 1)) {
                walls.push([[at(c + 1), at(r)], [at(c + 1), at(r + 1)]]);
            }
            if r + 1 < n && !passages.contains(&(cell, cell + n)) {
                walls.push([[at(c), at(r + 1)], [at(c + 1), at(r + 1)]]);
            }
        }
    }

    Ok(ShapeGeometry {
        family: Family::Maze,
        canonical_name: None,
        seed,
        complexity_n: grid_n,
        outline: Vec::new(),
        closed: false,
        wall_segments: walls,
    })
}

/// Recovers the passage graph of a maze from its walls: every pair of
/// 4-adjacent cells with no interior wall between them. Cells are numbered
/// row-major.
pub fn maze_passages(geometry: &ShapeGeometry) -> Vec<(usize, usize)> {
    let n = geometry.complexity_n as usize;
    let scale = n as f64;
    let grid = |v: f64| (v * scale).round() as usize;
    // Interior walls keyed by the lower-index cell and orientation.
    let mut vertical = BTreeSet::new();
    let mut horizontal = BTreeSet::new();
    for [a, b] in &geometry.wall_segments {
        let (x0, y0, x1, y1) = (grid(a[0]), grid(a[1]), grid(b[0]), grid(b[1]));
        if x0 == x1 && y0.abs_diff(y1) == 1 && x0 > 0 && x0 < n {
            vertical.insert((y0.min(y1), x0 - 1));
        } else if y0 == y1 && x0.abs_diff(x1) == 1 && y0 > 0 && y0 < n {
            horizontal.insert((y0 - 1, x0.min(x1)));
        }
    }
    let mut out = Vec::new();
    for r in 0..n {
        for c in 0..n {
            let cell = r * n + c;
            if c + 1 < n && !vertical.contains(&(r, c)) {
                out.push((cell, cell + 1));
            }
            if r + 1 < n && !horizontal.contains(&(r, c)) {
                out.push((cell, cell + n));
            }
        }
    }
    out
}
