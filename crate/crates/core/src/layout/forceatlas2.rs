//! ForceAtlas2: linear attraction along edges, repulsion proportional to
//! `(deg_a + 1)(deg_b + 1) / d`, gravity towards the centroid, and a global
//! speed adapted from how much nodes swing versus how much they travel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::barnes_hut::QuadTree;
use super::LayoutPositions;
use crate::coupling::CouplingGraph;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutParams<T> {
    /// Repulsion coefficient.
    pub scaling: T,
    /// Attraction coefficient.
    pub attraction: T,
    pub gravity: T,
    /// Gravity independent of distance.
    pub strong_gravity: bool,
    /// Logarithmic attraction.
    pub lin_log: bool,
    /// Exponent applied to edge weights in the attraction force.
    pub edge_weight_influence: T,
    pub jitter_tolerance: T,
    pub barnes_hut_theta: T,
    /// Barnes-Hut is used above this many nodes.
    pub barnes_hut_threshold: usize,
    /// Upper bound on a node's displacement in one iteration.
    pub max_displacement: T,
}

impl<T: Scalar> Default for LayoutParams<T> {
    fn default() -> Self {
        Self {
            scaling: T::lit(2.0),
            attraction: T::one(),
            gravity: T::one(),
            strong_gravity: false,
            lin_log: false,
            edge_weight_influence: T::one(),
            jitter_tolerance: T::one(),
            barnes_hut_theta: T::lit(1.2),
            barnes_hut_threshold: 1000,
            max_displacement: T::lit(10.0),
        }
    }
}

impl<T: Scalar> LayoutParams<T> {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("scaling", self.scaling),
            ("attraction", self.attraction),
            ("jitter_tolerance", self.jitter_tolerance),
            ("barnes_hut_theta", self.barnes_hut_theta),
            ("max_displacement", self.max_displacement),
        ];
        for (name, v) in positive {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("layout {name} must be positive")));
            }
        }
        let negative = |v: T| v.is_nan() || v < T::zero();
        if negative(self.gravity) || negative(self.edge_weight_influence) {
            return Err(Error::InvalidParameter(
                "layout gravity and edge weight influence must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

type Vec2<T> = (T, T);

fn finite_or_zero<T: Scalar>((x, y): Vec2<T>) -> Vec2<T> {
    if x.is_finite() && y.is_finite() {
        (x, y)
    } else {
        (T::zero(), T::zero())
    }
}

/// Uniform initial positions in the unit square.
pub(super) fn initial_positions<T: Scalar>(n: usize, seed: u64) -> Vec<Vec2<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let x: f64 = rng.random();
            let y: f64 = rng.random();
            (T::lit(x), T::lit(y))
        })
        .collect()
}

struct Speed<T> {
    speed: T,
    efficiency: T,
}

impl<T: Scalar> Speed<T> {
    /// Gephi's adaptive speed rule.
    fn adjust(&mut self, n: usize, swinging: T, traction: T, tolerance: T) {
        if swinging.is_nan() || traction.is_nan() || swinging <= T::zero() || traction <= T::zero() {
            return;
        }
        let n = T::from_count(n);
        let estimated_jitter = T::lit(0.05) * n.sqrt();
        let min_jitter = estimated_jitter.sqrt();
        let max_jitter = T::lit(10.0);
        let mut jitter = tolerance * min_jitter.max(max_jitter.min(estimated_jitter * traction / (n * n)));
        let min_efficiency = T::lit(0.05);
        if swinging / traction > T::lit(2.0) {
            if self.efficiency > min_efficiency {
                self.efficiency *= T::lit(0.5);
            }
            jitter = jitter.max(tolerance);
        }
        let target = jitter * self.efficiency * traction / swinging;
        if swinging > jitter * traction {
            if self.efficiency > min_efficiency {
                self.efficiency *= T::lit(0.7);
            }
        } else if self.speed < T::lit(1000.0) {
            self.efficiency *= T::lit(1.3);
        }
        let max_rise = T::lit(0.5);
        self.speed = self.speed + (target - self.speed).min(max_rise * self.speed);
    }
}

/// Runs `iterations` steps of ForceAtlas2 from seeded random positions.
pub fn forceatlas2<T: Scalar>(
    graph: &CouplingGraph,
    iterations: usize,
    params: &LayoutParams<T>,
    seed: u64,
) -> Result<LayoutPositions<T>> {
    if iterations == 0 {
        return Err(Error::InvalidParameter("iterations must be at least 1".into()));
    }
    if graph.is_empty() {
        return Err(Error::InvalidParameter("cannot lay out an empty graph".into()));
    }
    params.validate()?;
    let n = graph.n_nodes();
    let mass: Vec<T> = graph.nodes.iter().map(|v| T::from_count(v.degree + 1)).collect();
    let edges: Vec<(usize, usize, T)> = graph
        .edges
        .iter()
        .map(|&(a, b, w)| {
            let w = T::from_u32(w).expect("weight fits scalar");
            let factor = if params.edge_weight_influence == T::zero() {
                T::one()
            } else if params.edge_weight_influence == T::one() {
                w
            } else {
                w.powf(params.edge_weight_influence)
            };
            (a, b, factor)
        })
        .collect();
    let use_barnes_hut = n > params.barnes_hut_threshold;

    let mut pos = initial_positions::<T>(n, seed);
    let mut force = vec![(T::zero(), T::zero()); n];
    let mut old_force = vec![(T::zero(), T::zero()); n];
    let mut speed = Speed {
        speed: T::one(),
        efficiency: T::one(),
    };

    for _ in 0..iterations {
        std::mem::swap(&mut force, &mut old_force);

        // Repulsion; every node sums its contributions in node-index order.
        let repulsion: Vec<Vec2<T>> = if use_barnes_hut {
            let tree = QuadTree::build(&pos, &mass);
            (0..n)
                .into_par_iter()
                .map(|i| tree.repulsion(i, &pos, &mass, params.scaling, params.barnes_hut_theta))
                .collect()
        } else {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let (xi, yi) = pos[i];
                    let mut f = (T::zero(), T::zero());
                    for j in 0..n {
                        if j == i {
                            continue;
                        }
                        let (dx, dy) = (xi - pos[j].0, yi - pos[j].1);
                        let d2 = dx * dx + dy * dy;
                        if d2 > T::zero() {
                            let factor = params.scaling * mass[i] * mass[j] / d2;
                            f.0 += dx * factor;
                            f.1 += dy * factor;
                        }
                    }
                    f
                })
                .collect()
        };
        force.copy_from_slice(&repulsion);

        // Gravity towards the centroid.
        if params.gravity > T::zero() {
            let nn = T::from_count(n);
            let cx = pos.iter().map(|p| p.0).sum::<T>() / nn;
            let cy = pos.iter().map(|p| p.1).sum::<T>() / nn;
            for i in 0..n {
                let (dx, dy) = (pos[i].0 - cx, pos[i].1 - cy);
                let d = (dx * dx + dy * dy).sqrt();
                if d > T::zero() {
                    let factor = if params.strong_gravity {
                        params.gravity * mass[i]
                    } else {
                        params.gravity * mass[i] / d
                    };
                    force[i].0 -= dx * factor;
                    force[i].1 -= dy * factor;
                }
            }
        }

        // Attraction along edges.
        for &(a, b, w) in &edges {
            let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
            let factor = if params.lin_log {
                let d = (dx * dx + dy * dy).sqrt();
                if d > T::zero() {
                    -params.attraction * w * d.ln_1p() / d
                } else {
                    T::zero()
                }
            } else {
                -params.attraction * w
            };
            force[a].0 += dx * factor;
            force[a].1 += dy * factor;
            force[b].0 -= dx * factor;
            force[b].1 -= dy * factor;
        }

        for f in force.iter_mut() {
            *f = finite_or_zero(*f);
        }

        let mut swinging = T::zero();
        let mut traction = T::zero();
        for i in 0..n {
            let (fx, fy) = force[i];
            let (ox, oy) = old_force[i];
            swinging += mass[i] * ((ox - fx) * (ox - fx) + (oy - fy) * (oy - fy)).sqrt();
            traction += mass[i] * ((ox + fx) * (ox + fx) + (oy + fy) * (oy + fy)).sqrt() / T::lit(2.0);
        }
        speed.adjust(n, swinging, traction, params.jitter_tolerance);

        for i in 0..n {
            let (fx, fy) = force[i];
            let (ox, oy) = old_force[i];
            let node_swinging = mass[i] * ((ox - fx) * (ox - fx) + (oy - fy) * (oy - fy)).sqrt();
            let factor = speed.speed / (T::one() + (speed.speed * node_swinging).sqrt());
            let (mut dx, mut dy) = (fx * factor, fy * factor);
            let len = (dx * dx + dy * dy).sqrt();
            if len > params.max_displacement {
                let s = params.max_displacement / len;
                dx *= s;
                dy *= s;
            }
            let step = finite_or_zero((dx, dy));
            pos[i].0 += step.0;
            pos[i].1 += step.1;
        }
    }

    Ok(LayoutPositions {
        positions: pos,
        iterations_run: iterations,
        seed,
    })
}
