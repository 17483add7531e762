//! Spectral projected gradient with a nonmonotone line search, wrapped in
//! an augmented Lagrangian for inequality constraints `c_k(x) <= 0`.

/// Euclidean projection of `v` onto the probability simplex.
pub(crate) fn project_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

/// A smooth objective to minimize over a convex set with an exact
/// projection, with inequality constraints `c_k(x) <= 0`.
pub(crate) trait Problem {
    fn dim(&self) -> usize;
    fn constraints(&self) -> usize;
    /// Objective value; fills its gradient, the constraint values and
    /// their gradients (`constraints() × dim()`, row-major).
    fn eval(&self, x: &[f64], grad: &mut [f64], c: &mut [f64], c_grad: &mut [f64]) -> f64;
    fn project(&self, x: &mut [f64]);
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SpgOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub memory: usize,
}

impl Default for SpgOptions {
    fn default() -> Self {
        Self {
            max_iter: 400,
            tol: 1e-8,
            memory: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AlOutcome {
    pub x: Vec<f64>,
    pub objective: f64,
    pub multipliers: Vec<f64>,
    pub violation: f64,
}

struct AlState<'a, P: Problem> {
    problem: &'a P,
    y: Vec<f64>,
    rho: f64,
}

impl<P: Problem> AlState<'_, P> {
    /// Augmented Lagrangian value and gradient; also returns the raw
    /// objective and the constraint values.
    fn eval(&self, x: &[f64], grad: &mut [f64]) -> (f64, f64, Vec<f64>) {
        let n = self.problem.dim();
        let nc = self.problem.constraints();
        let mut c = vec![0.0; nc];
        let mut cg = vec![0.0; nc * n];
        let f = self.problem.eval(x, grad, &mut c, &mut cg);
        let mut v = f;
        for k in 0..nc {
            let shifted = (self.y[k] + self.rho * c[k]).max(0.0);
            v += (shifted * shifted - self.y[k] * self.y[k]) / (2.0 * self.rho);
            if shifted > 0.0 {
                for i in 0..n {
                    grad[i] += shifted * cg[k * n + i];
                }
            }
        }
        (v, f, c)
    }
}

fn projected_step_norm<P: Problem>(p: &P, x: &[f64], g: &[f64]) -> f64 {
    let mut t: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - b).collect();
    p.project(&mut t);
    t.iter()
        .zip(x)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Inner SPG solve of the augmented Lagrangian. Returns the number of
/// evaluations used and the final projected-gradient norm.
fn spg<P: Problem>(al: &AlState<'_, P>, x: &mut Vec<f64>, opts: &SpgOptions) -> (usize, f64) {
    let n = x.len();
    let mut g = vec![0.0; n];
    let (mut fx, _, _) = al.eval(x, &mut g);
    let mut evals = 1;
    let mut history = vec![fx; opts.memory.max(1)];
    let mut alpha = {
        let gn = g.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if gn > 0.0 {
            (1.0 / gn).min(1.0)
        } else {
            1.0
        }
    };
    let mut pg = projected_step_norm(al.problem, x, &g);
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    for it in 0..opts.max_iter {
        if pg <= opts.tol {
            break;
        }
        let mut d: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - alpha * b).collect();
        al.problem.project(&mut d);
        for i in 0..n {
            d[i] -= x[i];
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            break;
        }
        let f_ref = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut t = 1.0;
        let mut fnew;
        loop {
            for i in 0..n {
                xn[i] = x[i] + t * d[i];
            }
            fnew = al.eval(&xn, &mut gn).0;
            evals += 1;
            if fnew <= f_ref + 1e-4 * t * slope || t < 1e-12 {
                break;
            }
            // Safeguarded quadratic interpolation.
            let denom = 2.0 * (fnew - fx - t * slope);
            let tq = if denom > 0.0 { -slope * t * t / denom } else { 0.5 * t };
            t = tq.clamp(0.1 * t, 0.5 * t);
        }
        let mut sy = 0.0;
        let mut ss = 0.0;
        for i in 0..n {
            let s = xn[i] - x[i];
            let y = gn[i] - g[i];
            sy += s * y;
            ss += s * s;
        }
        alpha = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { 1e4 };
        std::mem::swap(x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        fx = fnew;
        let slot = it % history.len();
        history[slot] = fx;
        pg = projected_step_norm(al.problem, x, &g);
    }
    (evals, pg)
}

/// Augmented Lagrangian outer loop around [`spg`].
pub(crate) fn augmented_lagrangian<P: Problem>(
    problem: &P,
    x0: Vec<f64>,
    y0: Option<Vec<f64>>,
    max_outer: usize,
    inner: &SpgOptions,
    feas_tol: f64,
) -> AlOutcome {
    let nc = problem.constraints();
    let mut al = AlState {
        problem,
        y: y0.unwrap_or_else(|| vec![0.0; nc]),
        rho: 10.0,
    };
    let mut x = x0;
    problem.project(&mut x);
    let mut evals = 0;
    let mut prev_violation = f64::INFINITY;
    let mut stationarity = f64::INFINITY;
    for _ in 0..max_outer.max(1) {
        let (e, pg) = spg(&al, &mut x, inner);
        evals += e;
        stationarity = pg;
        let mut g = vec![0.0; problem.dim()];
        let (_, _, c) = al.eval(&x, &mut g);
        let violation = c.iter().map(|v| v.max(0.0)).fold(0.0, f64::max);
        let compl = c
            .iter()
            .zip(&al.y)
            .map(|(ck, yk)| (yk * ck).abs())
            .fold(0.0, f64::max);
        for k in 0..nc {
            al.y[k] = (al.y[k] + al.rho * c[k]).max(0.0);
        }
        if violation <= feas_tol && compl <= feas_tol && pg <= inner.tol.max(1e-7) {
            break;
        }
        if violation > 0.25 * prev_violation {
            al.rho = (al.rho * 10.0).min(1e8);
        }
        prev_violation = violation;
    }
    let mut g = vec![0.0; problem.dim()];
    let mut c = vec![0.0; nc];
    let mut cg = vec![0.0; nc * problem.dim()];
    let objective = problem.eval(&x, &mut g, &mut c, &mut cg);
    log::trace!("augmented lagrangian: {evals} evaluations, stationarity {stationarity:e}");
    AlOutcome {
        violation: c.iter().map(|v| v.max(0.0)).fold(0.0, f64::max),
        x,
        objective,
        multipliers: al.y,
    }
}
