//! Small numeric helpers: compensated summation, moment summaries and a
//! least-squares line fit. Reductions are plain left-to-right folds so that
//! results depend only on input order, never on scheduling.

/// Kahan–Babuška compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

/// Compensated sum of a slice.
pub fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Mean and sample standard deviation (n-1 denominator) of a slice.
/// Returns (mean, sd); sd is 0 for fewer than two samples.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = kahan_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = kahan_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n as f64 - 1.0)).sqrt())
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let (mean, sd) = mean_sd(values);
    (mean, sd / (values.len() as f64).sqrt())
}

/// Ordinary least-squares line fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Fit y = slope * x + intercept; `r_squared` is the coefficient of
/// determination. Requires at least two distinct x values.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = kahan_sum(xs.iter().copied()) / nf;
    let my = kahan_sum(ys.iter().copied()) / nf;
    let sxx = kahan_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = kahan_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let syy = kahan_sum(ys.iter().map(|y| (y - my) * (y - my)));
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LineFit { slope, intercept, r_squared, points: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_lost_digits() {
        // 1 + 1e-16 repeated: naive f64 summation loses every tiny term.
        let mut acc = KahanSum::default();
        acc.add(1.0);
        for _ in 0..1000 {
            acc.add(1e-16);
        }
        assert!((acc.value() - (1.0 + 1000.0 * 1e-16)).abs() < 1e-18);
    }

    #[test]
    fn mean_sd_matches_hand_values() {
        let (m, sd) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn exact_line_has_unit_r_squared() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [3.0, 5.0, 7.0, 9.0];
        let fit = fit_line(&xs, &ys).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.intercept - 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_fits_are_rejected() {
        assert!(fit_line(&[1.0], &[2.0]).is_none());
        assert!(fit_line(&[2.0, 2.0], &[1.0, 3.0]).is_none());
    }
}
