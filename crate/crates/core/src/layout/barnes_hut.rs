//! Quadtree approximation of the repulsion force for large graphs.

use crate::scalar::Scalar;

const MAX_DEPTH: usize = 24;

struct Cell<T> {
    /// Bounding square: lower-left corner and side length.
    x0: T,
    y0: T,
    size: T,
    mass: T,
    com: (T, T),
    /// Indices into the arena; empty for leaves.
    children: Vec<usize>,
    /// Bodies stored directly in a leaf.
    bodies: Vec<usize>,
}

pub(super) struct QuadTree<T> {
    cells: Vec<Cell<T>>,
}

impl<T: Scalar> QuadTree<T> {
    pub(super) fn build(pos: &[(T, T)], mass: &[T]) -> Self {
        let mut tree = Self { cells: Vec::new() };
        if pos.is_empty() {
            return tree;
        }
        let (mut xmin, mut ymin) = pos[0];
        let (mut xmax, mut ymax) = pos[0];
        for &(x, y) in pos {
            xmin = xmin.min(x);
            ymin = ymin.min(y);
            xmax = xmax.max(x);
            ymax = ymax.max(y);
        }
        let size = (xmax - xmin).max(ymax - ymin).max(T::lit(1e-9)) * T::lit(1.000001);
        let all: Vec<usize> = (0..pos.len()).collect();
        tree.insert(all, xmin, ymin, size, 0, pos, mass);
        tree
    }

    #[allow(clippy::too_many_arguments)]
    fn insert(&mut self, bodies: Vec<usize>, x0: T, y0: T, size: T, depth: usize, pos: &[(T, T)], mass: &[T]) -> usize {
        let total: T = bodies.iter().map(|&b| mass[b]).sum();
        let cx = bodies.iter().map(|&b| pos[b].0 * mass[b]).sum::<T>() / total;
        let cy = bodies.iter().map(|&b| pos[b].1 * mass[b]).sum::<T>() / total;
        let id = self.cells.len();
        self.cells.push(Cell {
            x0,
            y0,
            size,
            mass: total,
            com: (cx, cy),
            children: Vec::new(),
            bodies: Vec::new(),
        });
        if bodies.len() == 1 || depth >= MAX_DEPTH {
            self.cells[id].bodies = bodies;
            return id;
        }
        let half = size / T::lit(2.0);
        let (mx, my) = (x0 + half, y0 + half);
        let mut quads: [Vec<usize>; 4] = Default::default();
        for b in bodies {
            let (x, y) = pos[b];
            let q = usize::from(x >= mx) + 2 * usize::from(y >= my);
            quads[q].push(b);
        }
        let mut children = Vec::with_capacity(4);
        for (q, members) in quads.into_iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let qx = if q & 1 == 1 { mx } else { x0 };
            let qy = if q & 2 == 2 { my } else { y0 };
            children.push(self.insert(members, qx, qy, half, depth + 1, pos, mass));
        }
        self.cells[id].children = children;
        id
    }

    /// Repulsion on body `i`. Cells far enough away (`size / d < theta`)
    /// act as a single body at their centre of mass.
    pub(super) fn repulsion(&self, i: usize, pos: &[(T, T)], mass: &[T], scaling: T, theta: T) -> (T, T) {
        let mut f = (T::zero(), T::zero());
        if self.cells.is_empty() {
            return f;
        }
        let (xi, yi) = pos[i];
        let mut stack = vec![0usize];
        while let Some(c) = stack.pop() {
            let cell = &self.cells[c];
            if cell.children.is_empty() {
                for &j in &cell.bodies {
                    if j != i {
                        add(&mut f, xi - pos[j].0, yi - pos[j].1, scaling * mass[i] * mass[j]);
                    }
                }
                continue;
            }
            let (dx, dy) = (xi - cell.com.0, yi - cell.com.1);
            let d = (dx * dx + dy * dy).sqrt();
            let contains = xi >= cell.x0 && xi < cell.x0 + cell.size && yi >= cell.y0 && yi < cell.y0 + cell.size;
            if !contains && d > T::zero() && cell.size / d < theta {
                add(&mut f, dx, dy, scaling * mass[i] * cell.mass);
            } else {
                // Reverse so children are visited in insertion order.
                stack.extend(cell.children.iter().rev());
            }
        }
        f
    }
}

fn add<T: Scalar>(f: &mut (T, T), dx: T, dy: T, coefficient: T) {
    let d2 = dx * dx + dy * dy;
    if d2 > T::zero() {
        let factor = coefficient / d2;
        f.0 += dx * factor;
        f.1 += dy * factor;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn exact(i: usize, pos: &[(f64, f64)], mass: &[f64]) -> (f64, f64) {
        let mut f = (0.0, 0.0);
        for j in 0..pos.len() {
            if j != i {
                add(&mut f, pos[i].0 - pos[j].0, pos[i].1 - pos[j].1, mass[i] * mass[j]);
            }
        }
        f
    }

    #[test]
    fn tiny_theta_matches_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pos: Vec<(f64, f64)> = (0..200)
            .map(|_| (rng.random::<f64>() * 50.0, rng.random::<f64>() * 50.0))
            .collect();
        let mass: Vec<f64> = (0..200).map(|i| (i % 7 + 1) as f64).collect();
        let tree = QuadTree::build(&pos, &mass);
        for i in [0, 57, 199] {
            let (ex, ey) = exact(i, &pos, &mass);
            let (ax, ay) = tree.repulsion(i, &pos, &mass, 1.0, 1e-9);
            assert!((ex - ax).abs() < 1e-9 * ex.abs().max(1.0));
            assert!((ey - ay).abs() < 1e-9 * ey.abs().max(1.0));
        }
    }

    #[test]
    fn default_theta_is_close() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pos: Vec<(f64, f64)> = (0..500)
            .map(|_| (rng.random::<f64>() * 100.0, rng.random::<f64>() * 100.0))
            .collect();
        let mass = vec![1.0; 500];
        let tree = QuadTree::build(&pos, &mass);
        let (mut err, mut norm) = (0.0, 0.0);
        for i in 0..500 {
            let (ex, ey) = exact(i, &pos, &mass);
            let (ax, ay) = tree.repulsion(i, &pos, &mass, 1.0, 0.5);
            err += (ex - ax).hypot(ey - ay);
            norm += ex.hypot(ey);
        }
        assert!(err / norm < 0.05, "relative error {}", err / norm);
    }

    #[test]
    fn coincident_points_terminate() {
        let pos = vec![(1.0, 1.0); 10];
        let mass = vec![1.0; 10];
        let tree = QuadTree::build(&pos, &mass);
        assert_eq!(tree.repulsion(3, &pos, &mass, 1.0, 1.2), (0.0, 0.0));
    }
}
