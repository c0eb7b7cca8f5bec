//! Two-sample tests used to compare error distributions across replicates.

use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use super::{PredictError, Result};

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v)
}

fn need_two(xs: &[f64], ys: &[f64]) -> Result<()> {
    let available = xs.len().min(ys.len());
    if available < 2 {
        return Err(PredictError::InsufficientSample { needed: 2, available });
    }
    Ok(())
}

/// Welch's unequal-variance t-test. Returns `(t, two-sided p)`.
pub fn welch_t_test(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    need_two(xs, ys)?;
    let (mx, vx) = mean_var(xs);
    let (my, vy) = mean_var(ys);
    let (nx, ny) = (xs.len() as f64, ys.len() as f64);
    let (ax, ay) = (vx / nx, vy / ny);
    let se2 = ax + ay;
    let diff = mx - my;
    if se2 == 0.0 {
        return Ok(if diff == 0.0 {
            (0.0, 1.0)
        } else {
            (diff.signum() * f64::INFINITY, 0.0)
        });
    }
    let t = diff / se2.sqrt();
    let dof = se2 * se2 / (ax * ax / (nx - 1.0) + ay * ay / (ny - 1.0));
    let dist =
        StudentsT::new(0.0, 1.0, dof).map_err(|e| PredictError::DegenerateData(format!("t distribution: {e}")))?;
    Ok((t, (2.0 * dist.sf(t.abs())).min(1.0)))
}

/// Two-sided F-test for equal variances, `F = var(xs) / var(ys)`.
pub fn f_variance_test(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    need_two(xs, ys)?;
    let (_, vx) = mean_var(xs);
    let (_, vy) = mean_var(ys);
    if vy == 0.0 {
        return Err(PredictError::DegenerateData("second sample has zero variance".into()));
    }
    let f = vx / vy;
    let dist = FisherSnedecor::new(xs.len() as f64 - 1.0, ys.len() as f64 - 1.0)
        .map_err(|e| PredictError::DegenerateData(format!("F distribution: {e}")))?;
    let p = 2.0 * dist.cdf(f).min(dist.sf(f));
    Ok((f, p.min(1.0)))
}
