use statrs::distribution::{ContinuousCDF, StudentsT};

/// Sample mean and half width of the two-sided 95% Student-t interval.
/// The half width is NaN with fewer than two samples; both are NaN when
/// `xs` is empty.
pub fn mean_ci95(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("positive degrees of freedom").inverse_cdf(0.975);
    (mean, t * (var / n as f64).sqrt())
}
