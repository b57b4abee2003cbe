//! Derivative-free simplex minimization with restarts.

/// Result of [`nelder_mead`].
#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    /// Best value after every iteration, across restarts.
    pub best_so_far: Vec<f64>,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Minimizes `f` from `x0` with an axis-aligned initial simplex of edge
/// lengths `scale`. Each run stops when the simplex diameter (largest
/// distance from the best vertex) falls below `tol`. After convergence the
/// search restarts from the best point with a fresh simplex, up to `restarts`
/// times, stopping early once a restart brings no improvement.
///
/// Non-finite objective values are treated as worse than every finite value.
pub fn nelder_mead(
    f: &dyn Fn(&[f64]) -> f64,
    x0: &[f64],
    scale: &[f64],
    tol: f64,
    max_iter: usize,
    restarts: usize,
) -> NelderMeadResult {
    let mut out = NelderMeadResult { x: x0.to_vec(), f: key(f(x0)), iterations: 0, best_so_far: Vec::new() };
    if x0.is_empty() {
        return out;
    }
    for round in 0..=restarts {
        let budget = max_iter.saturating_sub(out.iterations);
        if budget == 0 {
            break;
        }
        let before = out.f;
        run(f, &mut out, scale, tol, budget);
        if round > 0 && out.f >= before {
            break;
        }
    }
    out
}

fn key(v: f64) -> f64 {
    if v.is_nan() { f64::INFINITY } else { v }
}

fn run(f: &dyn Fn(&[f64]) -> f64, out: &mut NelderMeadResult, edge: &[f64], tol: f64, budget: usize) {
    let n = out.x.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    pts.push(out.x.clone());
    vals.push(out.f);
    for i in 0..n {
        let mut p = out.x.clone();
        p[i] += if edge[i] != 0.0 { edge[i] } else { 1e-3 };
        vals.push(key(f(&p)));
        pts.push(p);
    }
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];
    for _ in 0..budget {
        // order vertices: ascending value, ties by coordinates
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]).then_with(|| super::lex_cmp(&pts[a], &pts[b])));
        pts = idx.iter().map(|&i| pts[i].clone()).collect();
        vals = idx.iter().map(|&i| vals[i]).collect();

        out.iterations += 1;
        if vals[0] < out.f || (vals[0] == out.f && super::lex_less(&pts[0], &out.x)) {
            out.f = vals[0];
            out.x.clone_from(&pts[0]);
        }
        out.best_so_far.push(out.f);
        if diameter(&pts) < tol {
            return;
        }

        centroid.iter_mut().for_each(|c| *c = 0.0);
        for p in &pts[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v / n as f64;
            }
        }
        let worst = &pts[n];
        along(&centroid, worst, -REFLECT, &mut trial);
        let fr = key(f(&trial));
        if fr < vals[0] {
            along(&centroid, worst, -EXPAND, &mut trial2);
            let fe = key(f(&trial2));
            if fe < fr {
                pts[n].clone_from(&trial2);
                vals[n] = fe;
            } else {
                pts[n].clone_from(&trial);
                vals[n] = fr;
            }
            continue;
        }
        if fr < vals[n - 1] {
            pts[n].clone_from(&trial);
            vals[n] = fr;
            continue;
        }
        // contraction: outside if the reflection beat the worst vertex
        let (coef, ref_val) = if fr < vals[n] { (-CONTRACT, fr) } else { (CONTRACT, vals[n]) };
        along(&centroid, &pts[n], coef, &mut trial2);
        let fc = key(f(&trial2));
        if fc < ref_val || (coef < 0.0 && fc <= ref_val) {
            pts[n].clone_from(&trial2);
            vals[n] = fc;
            continue;
        }
        let best = pts[0].clone();
        for k in 1..=n {
            for (p, b) in pts[k].iter_mut().zip(&best) {
                *p = b + SHRINK * (*p - b);
            }
            vals[k] = key(f(&pts[k]));
        }
    }
}

/// `out = c + coef (w - c)`.
fn along(c: &[f64], w: &[f64], coef: f64, out: &mut [f64]) {
    for i in 0..c.len() {
        out[i] = c[i] + coef * (w[i] - c[i]);
    }
}

fn diameter(pts: &[Vec<f64>]) -> f64 {
    let best = &pts[0];
    pts[1..]
        .iter()
        .map(|p| p.iter().zip(best).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = nelder_mead(&f, &[-1.2, 1.0], &[0.5, 0.5], 1e-9, 20_000, 4);
        assert!((r.x[0] - 1.0).abs() < 1e-5 && (r.x[1] - 1.0).abs() < 1e-5, "{:?}", r.x);
        assert!(r.best_so_far.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn kink_on_linear_constraint() {
        // minimum sits on the kink of an exact penalty
        let f = |x: &[f64]| x[0] * x[0] + x[1] * x[1] + 1e3 * (1.0 - x[0] - x[1]).max(0.0);
        let r = nelder_mead(&f, &[3.0, -1.0], &[1.0, 1.0], 1e-10, 20_000, 8);
        assert!((r.x[0] - 0.5).abs() < 1e-6 && (r.x[1] - 0.5).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn infinite_region_is_avoided() {
        let f = |x: &[f64]| if x[0] < 0.0 { f64::INFINITY } else { (x[0] - 0.25).powi(2) };
        let r = nelder_mead(&f, &[2.0], &[1.0], 1e-10, 5000, 2);
        assert!((r.x[0] - 0.25).abs() < 1e-6);
    }
}
