//! Newton polish of a candidate support on the square KKT system.
//!
//! Unknowns are the probabilities, the interior positions, `K` and the
//! multipliers of the constraints assumed active. The equations are the
//! support equalities, interior stationarity, normalization and the
//! active constraints held with equality.

use nalgebra::{DMatrix, DVector};

use super::rule::SupportEval;
use super::Context;

/// Residual level at which the polish is considered converged.
const CONVERGED: f64 = 1e-11;
const MAX_ITER: usize = 80;
/// Points closer than this are merged.
const MERGE_GAP: f64 = 1e-3;
/// Free points this close to a bound are pinned to it.
const PIN_GAP: f64 = 0.05;
/// Iterations before a blocking point may be dropped.
const EAGER_DROP_AFTER: usize = 4;
/// Multiplier level past which the assumed active set is abandoned.
const NEGATIVE_MULTIPLIER: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ActiveSet {
    pub power: bool,
    pub delivered: bool,
}

impl ActiveSet {
    pub fn all(with_delivered: bool) -> Vec<ActiveSet> {
        let mut v = Vec::new();
        for power in [true, false] {
            for delivered in [true, false] {
                if delivered && !with_delivered {
                    continue;
                }
                v.push(ActiveSet { power, delivered });
            }
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pin {
    Free,
    Zero,
    Peak,
}

#[derive(Debug, Clone)]
struct Point {
    r: f64,
    p: f64,
    pin: Pin,
}

#[derive(Debug, Clone)]
pub(crate) struct Polished {
    pub points: Vec<(f64, f64)>,
    pub entropy: f64,
}

struct State<'c> {
    ctx: &'c Context<'c>,
    pts: Vec<Point>,
    k: f64,
    lambda: f64,
    mu: f64,
    active: ActiveSet,
}

impl<'c> State<'c> {
    fn r(&self) -> Vec<f64> {
        self.pts.iter().map(|q| q.r).collect()
    }

    fn p(&self) -> Vec<f64> {
        self.pts.iter().map(|q| q.p).collect()
    }

    fn free(&self) -> Vec<usize> {
        (0..self.pts.len()).filter(|&j| self.pts[j].pin == Pin::Free).collect()
    }

    fn eval(&self, second: bool) -> SupportEval {
        SupportEval::new(&self.ctx.fine, &self.r(), &self.p(), second)
    }

    fn residual(&self, e: &SupportEval) -> Vec<f64> {
        let g = &self.ctx.spec.g;
        let (p_a, p_d) = (self.ctx.spec.p_a, self.ctx.spec.p_d);
        let mut out = Vec::new();
        for (j, q) in self.pts.iter().enumerate() {
            out.push(e.h[j] - self.lambda * q.r * q.r + self.mu * g.eval(q.r) - self.k);
        }
        for j in self.free() {
            let r = self.pts[j].r;
            out.push(e.dh[j] - 2.0 * self.lambda * r + self.mu * g.derivative(r));
        }
        out.push(self.pts.iter().map(|q| q.p).sum::<f64>() - 1.0);
        if self.active.power {
            out.push((self.pts.iter().map(|q| q.p * q.r * q.r).sum::<f64>() - p_a) / p_a);
        }
        if self.active.delivered {
            out.push((self.pts.iter().map(|q| q.p * g.eval(q.r)).sum::<f64>() - p_d) / p_d);
        }
        out
    }

    fn jacobian(&self, e: &SupportEval) -> DMatrix<f64> {
        let g = &self.ctx.spec.g;
        let (p_a, p_d) = (self.ctx.spec.p_a, self.ctx.spec.p_d);
        let m = self.pts.len();
        let free = self.free();
        let nf = free.len();
        let n = m + nf + 1 + usize::from(self.active.power) + usize::from(self.active.delivered);
        let [hp, hr, dhp, dhr] = e.jacobian_blocks(&self.p());
        let mut jac = DMatrix::zeros(n, n);
        let col_k = m + nf;
        let col_l = col_k + 1;
        let col_m = col_l + usize::from(self.active.power);
        // Support equalities.
        for j in 0..m {
            let rj = self.pts[j].r;
            for i in 0..m {
                jac[(j, i)] = hp[j * m + i];
            }
            for (c, &i) in free.iter().enumerate() {
                let mut v = hr[j * m + i];
                if i == j {
                    v += -2.0 * self.lambda * rj + self.mu * g.derivative(rj);
                }
                jac[(j, m + c)] = v;
            }
            jac[(j, col_k)] = -1.0;
            if self.active.power {
                jac[(j, col_l)] = -rj * rj;
            }
            if self.active.delivered {
                jac[(j, col_m)] = g.eval(rj);
            }
        }
        // Interior stationarity.
        for (row, &j) in free.iter().enumerate() {
            let rj = self.pts[j].r;
            let eq = m + row;
            for i in 0..m {
                jac[(eq, i)] = dhp[j * m + i];
            }
            for (c, &i) in free.iter().enumerate() {
                let mut v = dhr[j * m + i];
                if i == j {
                    v += -2.0 * self.lambda + self.mu * g.second_derivative(rj);
                }
                jac[(eq, m + c)] = v;
            }
            if self.active.power {
                jac[(eq, col_l)] = -2.0 * rj;
            }
            if self.active.delivered {
                jac[(eq, col_m)] = g.derivative(rj);
            }
        }
        let mut eq = m + nf;
        for i in 0..m {
            jac[(eq, i)] = 1.0;
        }
        if self.active.power {
            eq += 1;
            for i in 0..m {
                let r = self.pts[i].r;
                jac[(eq, i)] = r * r / p_a;
            }
            for (c, &i) in free.iter().enumerate() {
                jac[(eq, m + c)] = 2.0 * self.pts[i].p * self.pts[i].r / p_a;
            }
        }
        if self.active.delivered {
            eq += 1;
            for i in 0..m {
                jac[(eq, i)] = g.eval(self.pts[i].r) / p_d;
            }
            for (c, &i) in free.iter().enumerate() {
                jac[(eq, m + c)] = self.pts[i].p * g.derivative(self.pts[i].r) / p_d;
            }
        }
        jac
    }

    /// State after moving along `dx` by `t`.
    fn stepped(&self, dx: &DVector<f64>, t: f64) -> Vec<Point> {
        let m = self.pts.len();
        let mut pts = self.pts.clone();
        for (j, q) in pts.iter_mut().enumerate() {
            q.p += t * dx[j];
        }
        for (c, j) in self.free().into_iter().enumerate() {
            pts[j].r += t * dx[m + c];
        }
        pts
    }

    fn apply(&mut self, dx: &DVector<f64>, t: f64) {
        let m = self.pts.len();
        let nf = self.free().len();
        self.pts = self.stepped(dx, t);
        self.k += t * dx[m + nf];
        let mut c = m + nf + 1;
        if self.active.power {
            self.lambda += t * dx[c];
            c += 1;
        }
        if self.active.delivered {
            self.mu += t * dx[c];
        }
    }

    fn trial_norm(&self, dx: &DVector<f64>, t: f64) -> f64 {
        let mut s = State {
            ctx: self.ctx,
            pts: self.pts.clone(),
            k: self.k,
            lambda: self.lambda,
            mu: self.mu,
            active: self.active,
        };
        s.apply(dx, t);
        let e = s.eval(false);
        max_abs(&s.residual(&e))
    }

    /// Adjusts the support structure. Returns true if anything changed.
    fn restructure(&mut self) -> bool {
        let peak = self.ctx.peak;
        let mut changed = false;
        let mut i = 0;
        while i + 1 < self.pts.len() {
            if self.pts[i + 1].r - self.pts[i].r < MERGE_GAP {
                let (a, b) = (self.pts[i].clone(), self.pts[i + 1].clone());
                let w = a.p + b.p;
                let (r, pin) = match (a.pin, b.pin) {
                    (Pin::Zero, _) => (0.0, Pin::Zero),
                    (_, Pin::Peak) => (peak, Pin::Peak),
                    _ => ((a.r * a.p + b.r * b.p) / w, Pin::Free),
                };
                self.pts[i] = Point { r, p: w, pin };
                self.pts.remove(i + 1);
                changed = true;
            } else {
                i += 1;
            }
        }
        changed
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn solve_linear(jac: DMatrix<f64>, rhs: DVector<f64>) -> Option<DVector<f64>> {
    if let Some(x) = jac.clone().lu().solve(&rhs) {
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    let svd = jac.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    svd.solve(&rhs, 1e-13 * smax).ok().filter(|x| x.iter().all(|v| v.is_finite()))
}

/// Runs the polish for one active set. Returns `None` when it fails to
/// converge or lands on an invalid point (negative multipliers, violated
/// inactive constraints).
pub(crate) fn polish(
    ctx: &Context<'_>,
    seed: &[(f64, f64)],
    active: ActiveSet,
    lambda0: f64,
    mu0: f64,
    patient: bool,
) -> Option<Polished> {
    let eager_after = if patient { usize::MAX } else { EAGER_DROP_AFTER };
    let peak = ctx.peak;
    let mut pts: Vec<Point> = seed
        .iter()
        .filter(|&&(_, p)| p > 0.0)
        .map(|&(r, p)| {
            let r = r.clamp(0.0, peak);
            let pin = if r <= 1e-9 {
                Pin::Zero
            } else if r >= peak - 1e-9 * peak {
                Pin::Peak
            } else {
                Pin::Free
            };
            let r = match pin {
                Pin::Zero => 0.0,
                Pin::Peak => peak,
                Pin::Free => r,
            };
            Point { r, p, pin }
        })
        .collect();
    if pts.is_empty() {
        return None;
    }
    pts.sort_by(|a, b| a.r.total_cmp(&b.r));
    let total: f64 = pts.iter().map(|q| q.p).sum();
    pts.iter_mut().for_each(|q| q.p /= total);
    let mut s = State {
        ctx,
        pts,
        k: 0.0,
        lambda: if active.power { lambda0.max(0.0) } else { 0.0 },
        mu: if active.delivered { mu0.max(0.0) } else { 0.0 },
        active,
    };
    s.restructure();
    {
        let e = s.eval(false);
        let g = &ctx.spec.g;
        s.k = s
            .pts
            .iter()
            .enumerate()
            .map(|(j, q)| q.p * (e.h[j] - s.lambda * q.r * q.r + s.mu * g.eval(q.r)))
            .sum();
    }
    let mut unpinned = 0;
    let mut norm = f64::INFINITY;
    let mut converged = false;
    let mut iter = 0;
    while iter < MAX_ITER {
        iter += 1;
        let e = s.eval(true);
        let res = s.residual(&e);
        norm = max_abs(&res);
        if norm < CONVERGED {
            // A point held at the peak must not prefer moving inward.
            let g = &ctx.spec.g;
            let inward = s.pts.iter().enumerate().position(|(j, q)| {
                q.pin == Pin::Peak && e.dh[j] - 2.0 * s.lambda * q.r + s.mu * g.derivative(q.r) < -1e-6
            });
            match inward {
                Some(j) if unpinned < 2 => {
                    unpinned += 1;
                    s.pts[j].pin = Pin::Free;
                    s.pts[j].r = peak - 2.0 * PIN_GAP;
                    continue;
                }
                _ => {
                    converged = true;
                    break;
                }
            }
        }
        log::trace!("newton {:?} it {iter} m {} free {} norm {norm:e} lam {} mu {} pts {:?}", active, s.pts.len(), s.free().len(), s.lambda, s.mu, s.pts.iter().map(|q| (q.r, q.p)).collect::<Vec<_>>());
        if iter > EAGER_DROP_AFTER && (s.lambda < -NEGATIVE_MULTIPLIER || s.mu < -NEGATIVE_MULTIPLIER) {
            break;
        }
        let jac = s.jacobian(&e);
        let rhs = DVector::from_iterator(res.len(), res.iter().map(|v| -v));
        let Some(dx) = solve_linear(jac, rhs) else {
            break;
        };
        let m = s.pts.len();
        let free = s.free();
        // Step limits from positivity and the box.
        let mut t_max: f64 = 1.0;
        let mut limiter = None;
        for j in 0..m {
            if s.pts[j].p + dx[j] <= 0.0 {
                let t = 0.9 * s.pts[j].p / -dx[j];
                if t < t_max {
                    t_max = t;
                    limiter = Some(j);
                }
            }
        }
        // A point the step wants to empty is dropped when it is light or
        // would block the step; the exchange step re-inserts it if needed.
        let mut structural = false;
        if let Some(j) = limiter {
            if s.pts[j].p < 1e-8 || (iter > eager_after && t_max < 0.1 && s.pts[j].p < 0.2) {
                s.pts.remove(j);
                let total: f64 = s.pts.iter().map(|q| q.p).sum();
                s.pts.iter_mut().for_each(|q| q.p /= total);
                structural = true;
            }
        }
        if !structural {
            // Free points heading out of the box: pin them to the bound when
            // close to it or when they would block the step.
            let mut r_limit: Option<(usize, f64, f64)> = None;
            for (c, &j) in free.iter().enumerate() {
                let (r, d) = (s.pts[j].r, dx[m + c]);
                let (bound, room) = if r + d <= 0.0 {
                    (0.0, r)
                } else if r + d >= peak {
                    (peak, peak - r)
                } else {
                    continue;
                };
                let t = 0.9 * room / d.abs();
                if room < PIN_GAP {
                    r_limit = Some((j, bound, 0.0));
                    break;
                }
                if t < t_max && r_limit.is_none_or(|(_, _, tr)| t < tr) {
                    r_limit = Some((j, bound, t));
                }
            }
            if let Some((j, bound, t)) = r_limit {
                if t == 0.0 || (iter > eager_after && t < 0.1) {
                    s.pts[j].r = bound;
                    s.pts[j].pin = if bound == 0.0 { Pin::Zero } else { Pin::Peak };
                    structural = true;
                } else {
                    t_max = t_max.min(t);
                }
            }
        }
        if structural {
            if s.pts.is_empty() {
                return None;
            }
            s.restructure();
            continue;
        }
        let mut t = t_max;
        let mut accepted = false;
        while t > 1e-6 {
            if s.trial_norm(&dx, t) <= (1.0 - 1e-4 * t) * norm {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            log::trace!("line search failed, t_max {t_max:e}");
            break;
        }
        s.apply(&dx, t);
        s.restructure();
    }
    if !converged {
        log::debug!("polish {:?} stopped at residual {norm:e}", active);
        return None;
    }
    let tol = 1e-9;
    if s.lambda < -tol || s.mu < -tol || s.pts.iter().any(|q| q.p <= 0.0) {
        return None;
    }
    let g = &ctx.spec.g;
    let power: f64 = s.pts.iter().map(|q| q.p * q.r * q.r).sum();
    let delivered: f64 = s.pts.iter().map(|q| q.p * g.eval(q.r)).sum();
    if power > ctx.spec.p_a * (1.0 + tol) || delivered < ctx.spec.p_d * (1.0 - tol) {
        return None;
    }
    let e = s.eval(false);
    Some(Polished {
        points: s.pts.iter().map(|q| (q.r, q.p)).collect(),
        entropy: e.entropy,
    })
}

/// Polishes under every active set and keeps the valid result with the
/// largest entropy. A patient polish never drops or pins a point just
/// because it blocks the step.
pub(crate) fn polish_best(
    ctx: &Context<'_>,
    seed: &[(f64, f64)],
    lambda0: f64,
    mu0: f64,
    patient: bool,
) -> Option<Polished> {
    let mut best: Option<Polished> = None;
    for active in ActiveSet::all(ctx.spec.p_d > 0.0) {
        if let Some(c) = polish(ctx, seed, active, lambda0, mu0, patient) {
            if best.as_ref().is_none_or(|b| c.entropy > b.entropy + 1e-12) {
                best = Some(c);
            }
        }
    }
    best
}
