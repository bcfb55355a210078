//! Ordinary least squares on a line, generic over the scalar type.

use crate::num::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit<T> {
    pub slope: T,
    pub intercept: T,
    pub r_squared: T,
}

/// Fits `y = intercept + slope·x` by least squares. Returns `None` when
/// fewer than two distinct x values are present. A zero-variance target is
/// fit exactly by the constant line, so its R² is 1.
pub fn ols_line<T: Scalar>(xs: &[T], ys: &[T]) -> Option<LineFit<T>> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = T::from_usize(xs.len())?;
    let mean = |vals: &[T]| vals.iter().fold(T::zero(), |a, &v| a + v) / n;
    let x_mean = mean(xs);
    let y_mean = mean(ys);

    // an exactly constant target is fit exactly by the constant line
    if ys.windows(2).all(|w| w[0] == w[1]) {
        if xs.windows(2).all(|w| w[0] == w[1]) {
            return None;
        }
        return Some(LineFit {
            slope: T::zero(),
            intercept: ys[0],
            r_squared: T::one(),
        });
    }

    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - x_mean;
        let dy = y - y_mean;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * dy;
        syy = syy + dy * dy;
    }
    if sxx == T::zero() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;

    let r_squared = if syy == T::zero() {
        T::one()
    } else {
        let mut ss_res = T::zero();
        for (&x, &y) in xs.iter().zip(ys) {
            let r = y - (intercept + slope * x);
            ss_res = ss_res + r * r;
        }
        T::one() - ss_res / syy
    };
    Some(LineFit {
        slope,
        intercept,
        r_squared,
    })
}

/// OLS of `ln y` on `ln x`; inputs must be positive.
pub fn log_log_fit<T: Scalar>(points: &[(T, T)]) -> Option<LineFit<T>> {
    let xs: Vec<T> = points.iter().map(|&(x, _)| x.ln()).collect();
    let ys: Vec<T> = points.iter().map(|&(_, y)| y.ln()).collect();
    ols_line(&xs, &ys)
}
