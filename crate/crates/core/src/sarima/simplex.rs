//! Nelder-Mead simplex minimizer used by the CSS estimator.

pub(crate) struct SimplexResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

/// Minimize `f` from `start`, building the initial simplex by stepping
/// each coordinate by `steps[i]`. `f` may return infinity to reject a
/// point (barrier constraints).
pub(crate) fn nelder_mead<F>(
    f: F,
    start: &[f64],
    steps: &[f64],
    max_iter: usize,
    tol: f64,
) -> SimplexResult
where
    F: Fn(&[f64]) -> f64,
{
    let dim = start.len();
    assert!(dim > 0 && steps.len() == dim);
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();

    let mut converged = false;
    for _ in 0..max_iter {
        // order ascending by value; ties keep insertion order
        let mut idx: Vec<usize> = (0..=dim).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
        let reorder = |xs: &mut Vec<Vec<f64>>, vs: &mut Vec<f64>, idx: &[usize]| {
            *xs = idx.iter().map(|&i| xs[i].clone()).collect();
            *vs = idx.iter().map(|&i| vs[i]).collect();
        };
        reorder(&mut simplex, &mut values, &idx);

        let best = values[0];
        let worst = values[dim];
        if worst.is_finite() && (worst - best).abs() <= tol * (1.0 + best.abs()) {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|p| p[j]).sum::<f64>() / dim as f64)
            .collect();

        let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
        };

        // reflection
        let reflected = lerp(&centroid, &simplex[dim], -alpha);
        let f_r = f(&reflected);
        if f_r < values[0] {
            // expansion
            let expanded = lerp(&centroid, &simplex[dim], -gamma);
            let f_e = f(&expanded);
            if f_e < f_r {
                simplex[dim] = expanded;
                values[dim] = f_e;
            } else {
                simplex[dim] = reflected;
                values[dim] = f_r;
            }
            continue;
        }
        if f_r < values[dim - 1] {
            simplex[dim] = reflected;
            values[dim] = f_r;
            continue;
        }
        // contraction (outside if the reflected point improved on the worst)
        let contracted = if f_r < values[dim] {
            lerp(&centroid, &reflected, rho)
        } else {
            lerp(&centroid, &simplex[dim], rho)
        };
        let f_c = f(&contracted);
        if f_c < values[dim].min(f_r) {
            simplex[dim] = contracted;
            values[dim] = f_c;
            continue;
        }
        // shrink toward the best vertex
        for i in 1..=dim {
            simplex[i] = lerp(&simplex[0], &simplex[i], sigma);
            values[i] = f(&simplex[i]);
        }
    }

    let mut best_i = 0;
    for i in 1..=dim {
        if values[i] < values[best_i] {
            best_i = i;
        }
    }
    SimplexResult {
        point: simplex[best_i].clone(),
        value: values[best_i],
        converged,
    }
}
