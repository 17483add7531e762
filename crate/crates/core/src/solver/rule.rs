//! Entropy functionals on a fixed quadrature rule.
//!
//! Everything the optimizer and the KKT check need (`H`, `h(r_j)`, their
//! derivatives and the Newton Jacobian blocks) is evaluated on one
//! composite Gauss-Legendre rule, so the computed quantities are smooth,
//! mutually consistent functions of the support and probabilities.

use crate::quadrature::FixedRule;
use crate::specfun::{kernel_derivs_raw, kernel_raw};

const DENSITY_FLOOR: f64 = 1e-300;
/// Kernel contributions with `|R - r|` above this are below `e^{-70}`.
const KERNEL_REACH: f64 = 12.0;

#[derive(Debug, Clone)]
pub(crate) struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    ln_nodes: Vec<f64>,
}

impl Rule {
    fn from_fixed(f: FixedRule) -> Self {
        let ln_nodes = f.nodes.iter().map(|x| x.ln()).collect();
        Self {
            nodes: f.nodes,
            weights: f.weights,
            ln_nodes,
        }
    }

    /// 16 nodes per half-unit panel on `[0, upper]`.
    pub fn fine(upper: f64) -> Self {
        Self::from_fixed(FixedRule::composite_gauss_legendre(0.0, upper, 0.5, 16))
    }

    /// 10 nodes per unit panel on `[0, upper]`.
    pub fn coarse(upper: f64) -> Self {
        Self::from_fixed(FixedRule::composite_gauss_legendre(0.0, upper, 1.0, 10))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Index range of nodes within `KERNEL_REACH` of `r`.
    fn window(&self, r: f64) -> std::ops::Range<usize> {
        let lo = self.nodes.partition_point(|&x| x < r - KERNEL_REACH);
        let hi = self.nodes.partition_point(|&x| x <= r + KERNEL_REACH);
        lo..hi
    }

    /// `L_k = ln f(R_k) - ln R_k` at every node for the density `f`, with
    /// the matching `1/f` (both zero where `f` underflows).
    pub fn log_terms(&self, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut l = vec![0.0; f.len()];
        let mut inv = vec![0.0; f.len()];
        for k in 0..f.len() {
            if f[k] > DENSITY_FLOOR {
                l[k] = f[k].ln() - self.ln_nodes[k];
                inv[k] = 1.0 / f[k];
            }
        }
        (l, inv)
    }

    /// `h(r) = -Σ_k w_k K(R_k, r) L_k` for precomputed log terms.
    pub fn h_at(&self, r: f64, l: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in self.window(r) {
            s += self.weights[k] * kernel_raw(self.nodes[k], r) * l[k];
        }
        -s
    }
}

/// Quantities at a fixed support `(r_j, p_j)`.
#[derive(Debug, Clone)]
pub(crate) struct SupportEval {
    pub m: usize,
    /// `H = Σ_j p_j h_j`.
    pub entropy: f64,
    pub h: Vec<f64>,
    /// `∂h(r)/∂r` at `r_j` with `F` held fixed.
    pub dh: Vec<f64>,
    pub d2h: Vec<f64>,
    /// Rule values of `∫ K_j` and `∫ ∂K_j/∂r` (one and zero up to rule error).
    pub int_k: Vec<f64>,
    pub int_dk: Vec<f64>,
    pub log_terms: Vec<f64>,
    // Node-major blocks, row j holds kernel values of point j.
    k: Vec<f64>,
    dk: Vec<f64>,
    inv_f: Vec<f64>,
    weights: Vec<f64>,
}

impl SupportEval {
    pub fn new(rule: &Rule, r: &[f64], p: &[f64], second: bool) -> Self {
        let m = r.len();
        let n = rule.len();
        let mut k = vec![0.0; m * n];
        let mut dk = vec![0.0; m * n];
        let mut d2k = if second { vec![0.0; m * n] } else { Vec::new() };
        let mut f = vec![0.0; n];
        for j in 0..m {
            for idx in rule.window(r[j]) {
                let (kv, d1, d2) = kernel_derivs_raw(rule.nodes[idx], r[j]);
                k[j * n + idx] = kv;
                dk[j * n + idx] = d1;
                if second {
                    d2k[j * n + idx] = d2;
                }
                f[idx] += p[j] * kv;
            }
        }
        let (l, inv_f) = rule.log_terms(&f);
        let w = &rule.weights;
        let mut h = vec![0.0; m];
        let mut dh = vec![0.0; m];
        let mut d2h = vec![0.0; m];
        let mut int_k = vec![0.0; m];
        let mut int_dk = vec![0.0; m];
        for j in 0..m {
            let row = j * n;
            for idx in rule.window(r[j]) {
                let wl = w[idx] * l[idx];
                h[j] -= k[row + idx] * wl;
                dh[j] -= dk[row + idx] * wl;
                if second {
                    d2h[j] -= d2k[row + idx] * wl;
                }
                int_k[j] += w[idx] * k[row + idx];
                int_dk[j] += w[idx] * dk[row + idx];
            }
        }
        let entropy = p.iter().zip(&h).map(|(pj, hj)| pj * hj).sum();
        Self {
            m,
            entropy,
            h,
            dh,
            d2h,
            int_k,
            int_dk,
            log_terms: l,
            k,
            dk,
            inv_f,
            weights: w.clone(),
        }
    }

    /// `∂H/∂p_j = h_j - ∫K_j` and `∂H/∂r_j = p_j (h'_j - ∫∂K_j/∂r)`.
    pub fn entropy_gradient(&self, p: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let gp = (0..self.m).map(|j| self.h[j] - self.int_k[j]).collect();
        let gr = (0..self.m)
            .map(|j| p[j] * (self.dh[j] - self.int_dk[j]))
            .collect();
        (gp, gr)
    }

    /// `-∫ a_j b_i / f` for rows `a`, `b` chosen from `K` and `∂K/∂r`.
    fn cross(&self, a_deriv: bool, b_deriv: bool) -> Vec<f64> {
        let n = self.weights.len();
        let m = self.m;
        let a = if a_deriv { &self.dk } else { &self.k };
        let b = if b_deriv { &self.dk } else { &self.k };
        let mut out = vec![0.0; m * m];
        for j in 0..m {
            for i in 0..m {
                let mut s = 0.0;
                for idx in 0..n {
                    let aj = a[j * n + idx];
                    if aj == 0.0 {
                        continue;
                    }
                    s += self.weights[idx] * aj * b[i * n + idx] * self.inv_f[idx];
                }
                out[j * m + i] = -s;
            }
        }
        out
    }

    /// Jacobian blocks, each `m × m` row-major:
    /// `∂h_j/∂p_i`, `∂h_j/∂r_i`, `∂h'_j/∂p_i`, `∂h'_j/∂r_i`.
    pub fn jacobian_blocks(&self, p: &[f64]) -> [Vec<f64>; 4] {
        let m = self.m;
        let kk = self.cross(false, false);
        let kd = self.cross(false, true);
        let dk = self.cross(true, false);
        let dd = self.cross(true, true);
        let mut h_r = vec![0.0; m * m];
        let mut dh_r = vec![0.0; m * m];
        for j in 0..m {
            for i in 0..m {
                h_r[j * m + i] = p[i] * kd[j * m + i];
                dh_r[j * m + i] = p[i] * dd[j * m + i];
            }
            h_r[j * m + j] += self.dh[j];
            dh_r[j * m + j] += self.d2h[j];
        }
        [kk, h_r, dk, dh_r]
    }
}
