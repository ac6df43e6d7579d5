//! Derivative-free local search: adaptive Nelder–Mead followed by a
//! coordinate-descent polish.

/// Stopping rules shared by both searches.
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub max_iters: usize,
    /// Improvements of the best value below this count as stalled.
    pub tol: f64,
    /// Consecutive stalled iterations required to stop.
    pub patience: usize,
    pub initial_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { max_iters: 20_000, tol: 1e-10, patience: 50, initial_step: 0.5 }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// The stall criterion fired before `max_iters`.
    pub converged: bool,
    /// Best value after every iteration; non-increasing by construction.
    pub trace: Vec<f64>,
}

fn argsort(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    idx
}

/// Nelder–Mead with dimension-dependent coefficients (Gao & Han), starting
/// from an axis-aligned simplex around `x0`. Non-finite values are treated
/// as `+∞`, which keeps the search inside the objective's domain.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, x0: &[f64], opts: &SearchOptions) -> Minimum {
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let n = x0.len();
    let nf = n as f64;
    let (reflect, expand, contract, shrink) =
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf);

    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += opts.initial_step;
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| eval(p)).collect();
    let mut trace = Vec::new();
    let mut best = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let mut stalled = 0;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iters {
        iterations += 1;
        let order = argsort(&vals);
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();

        let mut centroid = vec![0.0; n];
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / nf;
            }
        }
        let toward = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect()
        };

        let xr = toward(reflect);
        let fr = eval(&xr);
        if fr < vals[0] {
            let xe = toward(reflect * expand);
            let fe = eval(&xe);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (xc, fc) = if fr < vals[n] {
                let xc = toward(reflect * contract);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = toward(-contract);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < fr.min(vals[n]) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let moved: Vec<f64> =
                        pts[0].iter().zip(&pts[i]).map(|(b, p)| b + shrink * (p - b)).collect();
                    vals[i] = eval(&moved);
                    pts[i] = moved;
                }
            }
        }

        let new_best = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if best - new_best < opts.tol {
            stalled += 1;
        } else {
            stalled = 0;
        }
        best = best.min(new_best);
        trace.push(best);

        let spread = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max) - best;
        if stalled >= opts.patience && spread < opts.tol {
            converged = true;
            break;
        }
    }

    let i = argsort(&vals)[0];
    Minimum { x: pts[i].clone(), value: vals[i], iterations, converged, trace }
}

/// Coordinate search with step halving. Each sweep tries `±step` along every
/// axis and keeps strict improvements; stops when the step falls below
/// `min_step` or a full sweep improves by less than `opts.tol`.
pub fn coordinate_descent<F: Fn(&[f64]) -> f64>(
    f: F,
    start: Minimum,
    min_step: f64,
    opts: &SearchOptions,
) -> Minimum {
    let Minimum { mut x, mut value, mut iterations, converged, mut trace } = start;
    let mut step = opts.initial_step * 0.1;
    let mut sweeps = 0;
    while step >= min_step && sweeps < opts.max_iters {
        sweeps += 1;
        let before = value;
        for i in 0..x.len() {
            for dir in [1.0, -1.0] {
                let old = x[i];
                x[i] = old + dir * step;
                let v = f(&x);
                if v.is_finite() && v < value {
                    value = v;
                    break;
                }
                x[i] = old;
            }
        }
        iterations += 1;
        trace.push(value);
        if before - value < opts.tol {
            step *= 0.5;
        }
    }
    Minimum { x, value, iterations, converged, trace }
}
