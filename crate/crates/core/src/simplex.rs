//! Nelder-Mead minimization for a handful of variables.

pub(crate) struct SimplexOptions {
    pub max_evaluations: usize,
    /// Stop when the spread of objective values falls below this.
    pub f_tolerance: f64,
    /// ... and every vertex is within this distance of the best one.
    pub x_tolerance: f64,
}

pub(crate) struct SimplexResult {
    pub x: Vec<f64>,
    pub f: f64,
}

/// Minimizes `f` from `x0` with initial edge lengths `scale`. Non-finite
/// objective values are treated as `+inf`.
pub(crate) fn minimize<F>(mut f: F, x0: &[f64], scale: &[f64], options: &SimplexOptions) -> SimplexResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64], evaluations: &mut usize| {
        *evaluations += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut vertices: Vec<Vec<f64>> = vec![x0.to_vec()];
    for k in 0..n {
        let mut x = x0.to_vec();
        x[k] += scale[k];
        vertices.push(x);
    }
    let mut values: Vec<f64> = vertices.iter().map(|x| eval(x, &mut evaluations)).collect();

    while evaluations < options.max_evaluations {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        vertices = order.iter().map(|&k| vertices[k].clone()).collect();
        values = order.iter().map(|&k| values[k]).collect();

        let (best, worst) = (values[0], values[n]);
        let size = vertices[1..]
            .iter()
            .map(|v| v.iter().zip(&vertices[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if best.is_finite()
            && (worst - best).abs() <= options.f_tolerance * (1.0 + best.abs())
            && size <= options.x_tolerance
        {
            break;
        }
        if size <= options.x_tolerance * 1e-3 {
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|d| vertices[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|d| centroid[d] + t * (vertices[n][d] - centroid[d])).collect() };

        let reflected = along(-1.0);
        let f_reflected = eval(&reflected, &mut evaluations);
        if f_reflected < values[0] {
            let expanded = along(-2.0);
            let f_expanded = eval(&expanded, &mut evaluations);
            if f_expanded < f_reflected {
                vertices[n] = expanded;
                values[n] = f_expanded;
            } else {
                vertices[n] = reflected;
                values[n] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[n - 1] {
            vertices[n] = reflected;
            values[n] = f_reflected;
            continue;
        }
        let (contracted, f_contracted) = if f_reflected < values[n] {
            let x = along(-0.5);
            let v = eval(&x, &mut evaluations);
            (x, v)
        } else {
            let x = along(0.5);
            let v = eval(&x, &mut evaluations);
            (x, v)
        };
        if f_contracted < values[n].min(f_reflected) {
            vertices[n] = contracted;
            values[n] = f_contracted;
            continue;
        }
        for k in 1..=n {
            let shrunk: Vec<f64> = (0..n).map(|d| vertices[0][d] + 0.5 * (vertices[k][d] - vertices[0][d])).collect();
            values[k] = eval(&shrunk, &mut evaluations);
            vertices[k] = shrunk;
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).expect("simplex has vertices");
    SimplexResult { x: vertices[best].clone(), f: values[best] }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn options() -> SimplexOptions {
        SimplexOptions { max_evaluations: 2000, f_tolerance: 1e-14, x_tolerance: 1e-8 }
    }

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let r = minimize(rosen, &[-1.2, 1.0], &[0.5, 0.5], &options());
        assert!((r.x[0] - 1.0).abs() < 1e-4 && (r.x[1] - 1.0).abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn respects_infinite_walls() {
        let f = |x: &[f64]| {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                (x[0] - 0.1).powi(2) + x[1] * x[1]
            }
        };
        let r = minimize(f, &[2.0, 1.0], &[1.0, 1.0], &options());
        assert!((r.x[0] - 0.1).abs() < 1e-4 && r.x[1].abs() < 1e-4, "{:?}", r.x);
    }

    #[test]
    fn stops_at_evaluation_cap() {
        let opts = SimplexOptions { max_evaluations: 20, ..options() };
        let mut calls = 0;
        minimize(
            |x| {
                calls += 1;
                x[0].powi(2)
            },
            &[5.0],
            &[1.0],
            &opts,
        );
        assert!(calls <= 22);
    }
}
