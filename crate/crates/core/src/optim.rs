//! Derivative-free maximization: a rectangular grid seed followed by
//! Nelder-Mead refinement.

#[derive(Clone, Debug)]
pub struct NelderMeadOptions {
    pub max_iterations: usize,
    /// Stop once the largest vertex distance from the best vertex is below this.
    pub diameter_tol: f64,
    /// Edge length of the initial simplex along each axis.
    pub initial_step: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self { max_iterations: 500, diameter_tol: 1e-8, initial_step: 0.1 }
    }
}

#[derive(Clone, Debug)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Maximizes `f` starting from `x0`.
pub fn nelder_mead_max(mut f: impl FnMut(&[f64]) -> f64, x0: &[f64], opts: &NelderMeadOptions) -> OptimResult {
    let dim = x0.len();
    assert!(dim > 0, "empty parameter vector");
    let mut evaluations = 0usize;
    // Internally minimize the negated objective.
    let mut cost = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(x0.to_vec());
    for i in 0..dim {
        let mut v = x0.to_vec();
        v[i] += opts.initial_step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| cost(v)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iterations {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let best = &simplex[0];
        let diameter = simplex[1..]
            .iter()
            .map(|v| v.iter().zip(best).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let centroid: Vec<f64> =
            (0..dim).map(|k| simplex[..dim].iter().map(|v| v[k]).sum::<f64>() / dim as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&simplex[dim]).map(|(c, w)| c + t * (c - w)).collect()
        };

        let reflected = along(REFLECT);
        let fr = cost(&reflected);
        if fr < values[0] {
            let expanded = along(REFLECT * EXPAND);
            let fe = cost(&expanded);
            if fe < fr {
                simplex[dim] = expanded;
                values[dim] = fe;
            } else {
                simplex[dim] = reflected;
                values[dim] = fr;
            }
            continue;
        }
        if fr < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = fr;
            continue;
        }
        let (contracted, fc) = if fr < values[dim] {
            let p = along(REFLECT * CONTRACT);
            let v = cost(&p);
            (p, v)
        } else {
            let p = along(-CONTRACT);
            let v = cost(&p);
            (p, v)
        };
        if fc < values[dim].min(fr) {
            simplex[dim] = contracted;
            values[dim] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=dim {
            for (x, b) in simplex[i].iter_mut().zip(&best) {
                *x = b + SHRINK * (*x - b);
            }
            values[i] = cost(&simplex[i]);
        }
    }

    let (idx, _) = values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty simplex");
    OptimResult { x: simplex[idx].clone(), value: -values[idx], iterations, evaluations, converged }
}

/// Points of a rectangular grid. `ranges[k] = (lo, hi, include_hi)`.
pub fn grid_points(ranges: &[(f64, f64, bool)], resolution: usize) -> Vec<Vec<f64>> {
    assert!(resolution >= 1);
    let axes: Vec<Vec<f64>> = ranges
        .iter()
        .map(|&(lo, hi, closed)| {
            let steps = if closed && resolution > 1 { resolution - 1 } else { resolution };
            (0..resolution).map(|i| lo + (hi - lo) * i as f64 / steps as f64).collect()
        })
        .collect();
    let mut points = vec![Vec::new()];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    points
}

/// Best grid point, ties resolved towards the earliest point.
pub fn grid_max(mut f: impl FnMut(&[f64]) -> f64, points: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let mut best = (points[0].clone(), f64::NEG_INFINITY);
    for p in points {
        let v = f(p);
        if v > best.1 {
            best = (p.clone(), v);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_quadratic_maximum() {
        let r = nelder_mead_max(
            |x| -(x[0] - 1.0).powi(2) - 3.0 * (x[1] + 2.0).powi(2),
            &[0.0, 0.0],
            &NelderMeadOptions::default(),
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-7 && (r.x[1] + 2.0).abs() < 1e-7);
        assert!(r.value.abs() < 1e-14);
    }

    #[test]
    fn rosenbrock() {
        let opts = NelderMeadOptions { max_iterations: 5000, ..Default::default() };
        let r = nelder_mead_max(
            |x| -((1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)),
            &[-1.2, 1.0],
            &opts,
        );
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6, "{:?}", r.x);
    }

    #[test]
    fn respects_iteration_cap() {
        let opts = NelderMeadOptions { max_iterations: 3, ..Default::default() };
        let r = nelder_mead_max(|x| -x[0] * x[0], &[5.0], &opts);
        assert_eq!(r.iterations, 3);
        assert!(!r.converged);
    }

    #[test]
    fn grid_shapes() {
        let pts = grid_points(&[(0.0, 1.0, true), (0.0, 1.0, false)], 4);
        assert_eq!(pts.len(), 16);
        assert_eq!(pts[3], vec![0.0, 0.75]);
        assert_eq!(pts[15], vec![1.0, 0.75]);
        let (x, v) = grid_max(|p| -(p[0] - 0.3).abs() - (p[1] - 0.5).abs(), &pts);
        assert_eq!(x, vec![1.0 / 3.0, 0.5]);
        assert!(v < 0.0);
    }
}
