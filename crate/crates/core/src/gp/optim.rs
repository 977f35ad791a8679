//! Nelder–Mead simplex minimization inside a box.

/// Settings for [`nelder_mead`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Stop once `max f - min f` over the simplex falls below this.
    pub f_tol: f64,
    pub max_evals: usize,
    /// Offset of the initial vertices along each axis (a factor of e when
    /// the search runs on log parameters).
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { f_tol: 1e-6, max_evals: 1000, initial_step: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Minimize `f` over the box `[lo, hi]`. Every trial point is clamped into
/// the box before evaluation; non-finite values count as `+∞`. The standard
/// reflection, expansion, contraction and shrink coefficients are used
/// (1, 2, 1/2, 1/2).
pub fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &SimplexOptions,
) -> SimplexResult {
    let d = x0.len();
    let clamp = |x: &mut [f64]| {
        for k in 0..d {
            x[k] = x[k].clamp(lo[k], hi[k]);
        }
    };
    let mut evals = 0;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_nan() { f64::INFINITY } else { v }
    };

    let mut start = x0.to_vec();
    clamp(&mut start);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let f0 = eval(&start, &mut evals);
    simplex.push((start.clone(), f0));
    for k in 0..d {
        let mut v = start.clone();
        v[k] += opts.initial_step;
        clamp(&mut v);
        if v[k] == start[k] {
            v[k] -= opts.initial_step;
            clamp(&mut v);
        }
        let fv = eval(&v, &mut evals);
        simplex.push((v, fv));
    }

    let mut converged = false;
    // One iteration costs at most d + 2 evaluations; never run past the cap.
    while evals + d + 2 <= opts.max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[d].1);
        if (worst - best).abs() < opts.f_tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> =
            (0..d).map(|k| simplex[..d].iter().map(|v| v.0[k]).sum::<f64>() / d as f64).collect();
        let along = |t: f64| {
            let mut p: Vec<f64> =
                (0..d).map(|k| centroid[k] + t * (simplex[d].0[k] - centroid[k])).collect();
            clamp(&mut p);
            p
        };

        let xr = along(-1.0);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = eval(&xe, &mut evals);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
            continue;
        }
        // Outside contraction if the reflection improved on the worst,
        // inside otherwise.
        let (xc, fc) = if fr < worst {
            let xc = along(-0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(0.5);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(worst) {
            simplex[d] = (xc, fc);
            continue;
        }
        let best_x = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let mut p: Vec<f64> = (0..d).map(|k| best_x[k] + 0.5 * (v.0[k] - best_x[k])).collect();
            clamp(&mut p);
            let fp = eval(&p, &mut evals);
            *v = (p, fp);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, f) = simplex.swap_remove(0);
    SimplexResult { x, f, evals, converged }
}
