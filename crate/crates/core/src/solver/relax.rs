//! Probability-only relaxation on a fixed amplitude grid.
//!
//! With the support frozen, `H` is concave in `p`, so the relaxed problem
//! has no spurious local optima. Its solution concentrates on a few
//! clusters of neighbouring grid points, which seed the Newton polish.

use super::rule::Rule;
use super::spg::{augmented_lagrangian, project_simplex, Problem};
use super::Context;
use crate::powermodel::PowerPolynomial;
use crate::specfun::kernel_raw;

/// Grid on `[0, peak]`: dense where a power-limited law puts its mass,
/// geometric beyond that.
pub(crate) fn relaxation_grid(p_a: f64, peak: f64, n: usize) -> Vec<f64> {
    let n = n.max(8);
    let core = (3.0 * p_a.sqrt() + 4.0).min(peak);
    if core >= peak {
        return (0..n).map(|i| peak * i as f64 / (n - 1) as f64).collect();
    }
    let n_core = (3 * n) / 4;
    let n_tail = n - n_core;
    let mut grid: Vec<f64> = (0..n_core)
        .map(|i| core * i as f64 / (n_core - 1) as f64)
        .collect();
    let ratio = (peak / core).powf(1.0 / n_tail as f64);
    for i in 1..=n_tail {
        grid.push(core * ratio.powi(i as i32));
    }
    *grid.last_mut().expect("grid is non-empty") = peak;
    grid
}

struct GridProblem<'a> {
    rule: &'a Rule,
    weights: Vec<f64>,
    ln_nodes: Vec<f64>,
    // Row j: kernel of grid point j on nodes `offset[j]..offset[j]+len`.
    kernel: Vec<Vec<f64>>,
    offset: Vec<usize>,
    r2: Vec<f64>,
    g: Vec<f64>,
    p_a: f64,
    p_d: f64,
}

impl<'a> GridProblem<'a> {
    fn new(rule: &'a Rule, grid: &[f64], g: &PowerPolynomial, p_a: f64, p_d: f64) -> Self {
        let nodes = rule.nodes();
        let mut kernel = Vec::with_capacity(grid.len());
        let mut offset = Vec::with_capacity(grid.len());
        for &r in grid {
            let lo = nodes.partition_point(|&x| x < r - 12.0);
            let hi = nodes.partition_point(|&x| x <= r + 12.0);
            offset.push(lo);
            kernel.push(nodes[lo..hi].iter().map(|&x| kernel_raw(x, r)).collect());
        }
        Self {
            rule,
            weights: rule.weights().to_vec(),
            ln_nodes: nodes.iter().map(|x| x.ln()).collect(),
            kernel,
            offset,
            r2: grid.iter().map(|r| r * r).collect(),
            g: grid.iter().map(|&r| g.eval(r)).collect(),
            p_a,
            p_d,
        }
    }

    fn entropy_and_gradient(&self, p: &[f64], grad: &mut [f64]) -> f64 {
        let n = self.rule.len();
        let mut f = vec![0.0; n];
        for (j, row) in self.kernel.iter().enumerate() {
            if p[j] == 0.0 {
                continue;
            }
            let o = self.offset[j];
            for (k, kv) in row.iter().enumerate() {
                f[o + k] += p[j] * kv;
            }
        }
        let mut wl1 = vec![0.0; n];
        let mut h = 0.0;
        for k in 0..n {
            if f[k] > 1e-300 {
                let l = f[k].ln() - self.ln_nodes[k];
                h -= self.weights[k] * f[k] * l;
                wl1[k] = self.weights[k] * (l + 1.0);
            }
        }
        for (j, row) in self.kernel.iter().enumerate() {
            let o = self.offset[j];
            grad[j] = -row.iter().enumerate().map(|(k, kv)| kv * wl1[o + k]).sum::<f64>();
        }
        h
    }
}

impl Problem for GridProblem<'_> {
    fn dim(&self) -> usize {
        self.kernel.len()
    }

    fn constraints(&self) -> usize {
        if self.p_d > 0.0 { 2 } else { 1 }
    }

    fn eval(&self, x: &[f64], grad: &mut [f64], c: &mut [f64], c_grad: &mut [f64]) -> f64 {
        let n = x.len();
        let h = self.entropy_and_gradient(x, grad);
        for v in grad.iter_mut() {
            *v = -*v;
        }
        c[0] = (x.iter().zip(&self.r2).map(|(p, u)| p * u).sum::<f64>() - self.p_a) / self.p_a;
        for i in 0..n {
            c_grad[i] = self.r2[i] / self.p_a;
        }
        if self.p_d > 0.0 {
            c[1] = (self.p_d - x.iter().zip(&self.g).map(|(p, g)| p * g).sum::<f64>()) / self.p_d;
            for i in 0..n {
                c_grad[n + i] = -self.g[i] / self.p_d;
            }
        }
        -h
    }

    fn project(&self, x: &mut [f64]) {
        project_simplex(x);
    }
}

/// Output of the relaxation: the clustered seed and multiplier estimates.
#[derive(Debug, Clone)]
pub(crate) struct RelaxedSeed {
    pub points: Vec<(f64, f64)>,
    pub lambda: f64,
    pub mu: f64,
}

/// Splits the grid mass into clusters separated by empty cells or by
/// local minima, and collapses each to its centre of mass. A cluster
/// dominated by an endpoint of the grid is pinned there.
pub(crate) fn cluster(grid: &[f64], p: &[f64], tiny: f64) -> Vec<(f64, f64)> {
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut current: Vec<usize> = Vec::new();
    let mut descending = false;
    for j in 0..grid.len() {
        if p[j] <= tiny {
            if !current.is_empty() {
                groups.push(std::mem::take(&mut current));
            }
            descending = false;
            continue;
        }
        if let Some(&last) = current.last() {
            if p[j] > p[last] * 1.001 && descending {
                groups.push(std::mem::take(&mut current));
                descending = false;
            } else if p[j] < p[last] {
                descending = true;
            }
        }
        current.push(j);
    }
    if !current.is_empty() {
        groups.push(current);
    }
    let last_index = grid.len() - 1;
    groups
        .into_iter()
        .map(|idx| {
            let mass: f64 = idx.iter().map(|&j| p[j]).sum();
            let heaviest = *idx
                .iter()
                .max_by(|&&a, &&b| p[a].total_cmp(&p[b]))
                .expect("clusters are non-empty");
            let pos = if heaviest == 0 {
                grid[0]
            } else if heaviest == last_index {
                grid[last_index]
            } else {
                idx.iter().map(|&j| p[j] * grid[j]).sum::<f64>() / mass
            };
            (pos, mass)
        })
        .collect()
}

/// Solves the relaxation on `grid` and clusters the result.
pub(crate) fn relax(ctx: &Context<'_>, grid: &[f64]) -> RelaxedSeed {
    let (p_a, p_d) = (ctx.spec.p_a, ctx.spec.p_d);
    let problem = GridProblem::new(&ctx.coarse, grid, &ctx.spec.g, p_a, p_d);
    let inner = ctx.inner_options();
    // Start from a uniform law on the points that respect the power bound.
    let mut x0: Vec<f64> = grid.iter().map(|&r| if r * r <= p_a { 1.0 } else { 0.0 }).collect();
    let total: f64 = x0.iter().sum();
    x0.iter_mut().for_each(|v| *v /= total);
    let out = augmented_lagrangian(&problem, x0, None, ctx.spec.knobs.max_outer, &inner, 1e-10);
    let lambda = out.multipliers[0] / p_a;
    let mu = if p_d > 0.0 { out.multipliers[1] / p_d } else { 0.0 };
    RelaxedSeed {
        points: cluster(grid, &out.x, 1e-6),
        lambda,
        mu,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_increasing_and_ends_at_peak() {
        for peak in [4.0, 50.0] {
            let g = relaxation_grid(5.0, peak, 160);
            assert_eq!(g.len(), 160);
            assert_eq!(g[0], 0.0);
            assert_eq!(*g.last().unwrap(), peak);
            assert!(g.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn clustering_splits_at_gaps_and_minima() {
        let grid: Vec<f64> = (0..10).map(f64::from).collect();
        let p = [0.3, 0.1, 0.0, 0.1, 0.2, 0.05, 0.15, 0.0, 0.0, 0.1];
        let c = cluster(&grid, &p, 1e-9);
        assert_eq!(c.len(), 4);
        assert_eq!(c[0], (0.0, 0.4));
        assert!((c[1].1 - 0.35).abs() < 1e-15);
        assert!((c[1].0 - (0.3 + 0.8 + 0.25) / 0.35).abs() < 1e-12);
        assert_eq!(c[3], (9.0, 0.1));
    }
}

