//! Small dense least-squares fits used by the inference layer.
//!
//! Everything here operates on a handful of regressors over at most a few
//! thousand points, so plain normal equations (with centering and partial
//! pivoting where it matters) are accurate enough and keep the crate free of
//! a linear-algebra dependency.

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;

/// Ordinary least squares `y ~ a + b x`. Returns `(intercept, slope, r2)`.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64)> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "line fit needs at least 2 points, got {n}"
        )));
    }
    let mean_x = mean(xs);
    let mean_y = mean(ys);
    let mut sxx = CompensatedSum::new();
    let mut sxy = CompensatedSum::new();
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        sxx.add(dx * dx);
        sxy.add(dx * (y - mean_y));
    }
    let sxx = sxx.value();
    if sxx <= 0.0 {
        return Err(Error::DegenerateSample(
            "regressor is constant; slope is undefined".into(),
        ));
    }
    let slope = sxy.value() / sxx;
    let intercept = mean_y - slope * mean_x;
    let fitted: Vec<f64> = xs.iter().map(|&x| intercept + slope * x).collect();
    Ok((intercept, slope, r_squared(ys, &fitted)))
}

/// Least squares through the origin, `y ~ b x`: `b = sum(xy) / sum(x^2)`.
pub fn fit_through_origin(xs: &[f64], ys: &[f64]) -> Result<f64> {
    debug_assert_eq!(xs.len(), ys.len());
    if xs.is_empty() {
        return Err(Error::InsufficientData(
            "through-origin fit needs at least 1 point".into(),
        ));
    }
    let mut sxx = CompensatedSum::new();
    let mut sxy = CompensatedSum::new();
    for (&x, &y) in xs.iter().zip(ys) {
        sxx.add(x * x);
        sxy.add(x * y);
    }
    let sxx = sxx.value();
    if sxx <= 0.0 {
        return Err(Error::DegenerateSample(
            "through-origin regressor is identically zero".into(),
        ));
    }
    Ok(sxy.value() / sxx)
}

/// Two-regressor least squares through the origin, `y ~ b1 u + b2 v`, via the
/// 2x2 normal equations.
pub fn fit_through_origin2(us: &[f64], vs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    debug_assert_eq!(us.len(), ys.len());
    debug_assert_eq!(vs.len(), ys.len());
    if us.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "two-regressor fit needs at least 2 points, got {}",
            us.len()
        )));
    }
    let mut suu = CompensatedSum::new();
    let mut suv = CompensatedSum::new();
    let mut svv = CompensatedSum::new();
    let mut suy = CompensatedSum::new();
    let mut svy = CompensatedSum::new();
    for i in 0..us.len() {
        let (u, v, y) = (us[i], vs[i], ys[i]);
        suu.add(u * u);
        suv.add(u * v);
        svv.add(v * v);
        suy.add(u * y);
        svy.add(v * y);
    }
    let (suu, suv, svv) = (suu.value(), suv.value(), svv.value());
    let det = suu * svv - suv * suv;
    if det.abs() <= 1e-12 * suu.max(svv).max(1.0).powi(2) {
        return Err(Error::DegenerateSample(
            "two-regressor design is singular".into(),
        ));
    }
    let (suy, svy) = (suy.value(), svy.value());
    let b1 = (svv * suy - suv * svy) / det;
    let b2 = (suu * svy - suv * suy) / det;
    Ok((b1, b2))
}

/// Quadratic least squares `y ~ c0 + c1 x + c2 x^2`, fitted on centered
/// regressors for conditioning and mapped back. Returns `(c0, c1, c2, r2)`.
pub fn fit_quadratic(xs: &[f64], ys: &[f64]) -> Result<(f64, f64, f64, f64)> {
    debug_assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!(
            "quadratic fit needs at least 3 points, got {n}"
        )));
    }
    let mx = mean(xs);
    let zs: Vec<f64> = xs.iter().map(|&x| x - mx).collect();

    // Normal equations in the centered basis {1, z, z^2}.
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (&z, &y) in zs.iter().zip(ys) {
        let basis = [1.0, z, z * z];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += basis[i] * basis[j];
            }
            rhs[i] += basis[i] * y;
        }
    }
    let sol = solve3(m, rhs)?;

    // Expand a0 + a1 z + a2 z^2 back to powers of x.
    let (a0, a1, a2) = (sol[0], sol[1], sol[2]);
    let c2 = a2;
    let c1 = a1 - 2.0 * a2 * mx;
    let c0 = a0 - a1 * mx + a2 * mx * mx;

    let fitted: Vec<f64> = zs.iter().map(|&z| a0 + a1 * z + a2 * z * z).collect();
    Ok((c0, c1, c2, r_squared(ys, &fitted)))
}

/// Coefficient of determination of `fitted` against `ys`. A constant response
/// fitted exactly scores 1, otherwise 0.
pub fn r_squared(ys: &[f64], fitted: &[f64]) -> f64 {
    let my = mean(ys);
    let mut ss_tot = CompensatedSum::new();
    let mut ss_res = CompensatedSum::new();
    for (&y, &f) in ys.iter().zip(fitted) {
        let dy = y - my;
        ss_tot.add(dy * dy);
        let r = y - f;
        ss_res.add(r * r);
    }
    let tot = ss_tot.value();
    if tot <= 0.0 {
        return if ss_res.value() <= 0.0 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res.value() / tot
}

/// 3x3 linear solve with partial pivoting.
fn solve3(mut m: [[f64; 3]; 3], mut b: [f64; 3]) -> Result<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))
            .expect("non-empty range");
        if m[pivot][col].abs() <= f64::EPSILON * 1e3 {
            return Err(Error::DegenerateSample(
                "quadratic design matrix is singular".into(),
            ));
        }
        m.swap(col, pivot);
        b.swap(col, pivot);
        let lead = m[col];
        for row in (col + 1)..3 {
            let f = m[row][col] / lead[col];
            for (dst, src) in m[row].iter_mut().zip(lead.iter()).skip(col) {
                *dst -= f * src;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in (row + 1)..3 {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok(x)
}

fn mean(xs: &[f64]) -> f64 {
    let mut s = CompensatedSum::new();
    for &x in xs {
        s.add(x);
    }
    s.value() / xs.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line_is_recovered() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let (a, b, r2) = fit_line(&xs, &ys).unwrap();
        assert_relative_eq!(a, 2.0, epsilon = 1e-12);
        assert_relative_eq!(b, -0.5, epsilon = 1e-12);
        assert_relative_eq!(r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn line_fit_matches_hand_solution() {
        // Points (0,0), (1,1), (2,3): slope 1.5, intercept -1/6.
        let (a, b, _) = fit_line(&[0.0, 1.0, 2.0], &[0.0, 1.0, 3.0]).unwrap();
        assert_relative_eq!(b, 1.5, epsilon = 1e-12);
        assert_relative_eq!(a, -1.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn through_origin_matches_ratio_form() {
        // sum(xy)/sum(x^2) = (2 + 12)/(1 + 9) = 1.4
        let b = fit_through_origin(&[1.0, 3.0], &[2.0, 4.0]).unwrap();
        assert_relative_eq!(b, 1.4, epsilon = 1e-12);
        // A single point is a valid through-origin fit.
        let b = fit_through_origin(&[2.0], &[5.0]).unwrap();
        assert_relative_eq!(b, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn two_regressor_fit_recovers_exact_plane() {
        let us: Vec<f64> = (1..=20).map(|i| i as f64).collect();
        let vs: Vec<f64> = (1..=20).map(|i| ((i * i) % 7) as f64).collect();
        let ys: Vec<f64> = us
            .iter()
            .zip(&vs)
            .map(|(u, v)| 1.25 * u - 0.75 * v)
            .collect();
        let (b1, b2) = fit_through_origin2(&us, &vs, &ys).unwrap();
        assert_relative_eq!(b1, 1.25, epsilon = 1e-9);
        assert_relative_eq!(b2, -0.75, epsilon = 1e-9);
    }

    #[test]
    fn quadratic_fit_recovers_exact_polynomial() {
        let xs: Vec<f64> = (0..12).map(|i| 1.0 + 0.5 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 - 2.0 * x + 0.25 * x * x).collect();
        let (c0, c1, c2, r2) = fit_quadratic(&xs, &ys).unwrap();
        assert_relative_eq!(c0, 3.0, epsilon = 1e-9);
        assert_relative_eq!(c1, -2.0, epsilon = 1e-9);
        assert_relative_eq!(c2, 0.25, epsilon = 1e-9);
        assert_relative_eq!(r2, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_on_line_has_zero_curvature() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 4.0 + 3.0 * x).collect();
        let (_, c1, c2, _) = fit_quadratic(&xs, &ys).unwrap();
        assert_relative_eq!(c1, 3.0, epsilon = 1e-9);
        assert!(c2.abs() < 1e-9);
    }

    #[test]
    fn degenerate_designs_are_rejected() {
        assert!(fit_line(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_line(&[1.0], &[1.0]).is_err());
        assert!(fit_through_origin(&[0.0, 0.0], &[1.0, 2.0]).is_err());
        assert!(fit_through_origin2(&[1.0, 2.0], &[2.0, 4.0], &[1.0, 2.0]).is_err());
        assert!(fit_quadratic(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }
}
