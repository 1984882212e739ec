//! Deterministic point sets on S^{n-1}: axis directions, Fibonacci nodes and
//! zonal quadrature for integrands depending only on one coordinate.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::vecgeom::Vector;

/// `count` nearly uniform points on S² (z-coordinates are the midpoints of
/// `count` equal slabs of [-1, 1]).
pub fn fibonacci_nodes(count: usize) -> Vec<Vector> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..count)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / count as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            Vector::new(vec![r * phi.cos(), r * phi.sin(), z])
        })
        .collect()
}

/// Direction sample on S^{n-1}: the 2n signed axes first, then Fibonacci
/// nodes (n = 3) or seeded Gaussian directions (n ≠ 3) up to `count`.
pub fn direction_sample(n: usize, count: usize, seed: u64) -> Vec<Vector> {
    let mut dirs = Vec::with_capacity(count.max(2 * n));
    for i in 0..n {
        dirs.push(Vector::basis(n, i));
        dirs.push(-&Vector::basis(n, i));
    }
    if count <= dirs.len() {
        return dirs;
    }
    let fill = count - dirs.len();
    if n == 3 {
        dirs.extend(fibonacci_nodes(fill));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        while dirs.len() < count {
            let g = Vector::new((0..n).map(|_| StandardNormal.sample(&mut rng)).collect());
            if let Some(d) = g.normalized() {
                dirs.push(d);
            }
        }
    }
    dirs
}

/// Mean of `f(ω₁)` over the uniform measure on S^{n-1}.
///
/// For n = 3 this is the Fibonacci-node average (midpoint rule in ω₁); for
/// other n the polar angle is integrated with a midpoint rule against the
/// sin^{n-2} weight.
pub fn zonal_mean(n: usize, nodes: usize, f: impl Fn(f64) -> f64) -> f64 {
    let nodes = nodes.max(1);
    if n == 3 {
        let sum: f64 = (0..nodes)
            .map(|i| f(1.0 - (2.0 * i as f64 + 1.0) / nodes as f64))
            .sum();
        return sum / nodes as f64;
    }
    let h = std::f64::consts::PI / nodes as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..nodes {
        let phi = (i as f64 + 0.5) * h;
        let w = phi.sin().powi(n as i32 - 2);
        num += w * f(phi.cos());
        den += w;
    }
    num / den
}
