use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sample Pearson coefficient. Zero-variance inputs give `r = 0` with the
/// degenerate flag set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub degenerate: bool,
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<Correlation> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), actual: ys.len() });
    }
    if xs.len() < 2 {
        return Err(Error::Degenerate(format!("pearson needs at least 2 points, got {}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange("non-finite sample".into()));
    }
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(xs) || constant(ys) {
        return Ok(Correlation { r: 0.0, degenerate: true });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok(Correlation { r: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0), degenerate: false })
}

/// Least-squares polynomial, coefficients in ascending powers of x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyFit {
    pub coeffs: Vec<f64>,
    pub degenerate: bool,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Stationary point of a quadratic fit.
    pub fn vertex(&self) -> Option<f64> {
        match self.coeffs[..] {
            [_, b, a] if !self.degenerate && a != 0.0 => Some(-b / (2.0 * a)),
            _ => None,
        }
    }

    pub fn sse(&self, xs: &[f64], ys: &[f64]) -> f64 {
        xs.iter().zip(ys).map(|(&x, &y)| (y - self.eval(x)).powi(2)).sum()
    }
}

/// Solves the normal equations on x mapped affinely onto [-1, 1] with unit
/// norm columns, then expands back into powers of the original x.
pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolyFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch { expected: xs.len(), actual: ys.len() });
    }
    if !(1..=3).contains(&degree) {
        return Err(Error::OutOfRange(format!("polynomial degree {degree} not in 1..=3")));
    }
    if xs.len() <= degree {
        return Err(Error::Degenerate(format!("{} points cannot fit degree {degree}", xs.len())));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange("non-finite sample".into()));
    }
    let flat = || Ok(PolyFit { coeffs: vec![0.0; degree + 1], degenerate: true });
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        return flat();
    }
    let (mid, half) = ((hi + lo) / 2.0, (hi - lo) / 2.0);
    let m = degree + 1;
    let mut a = DMatrix::from_fn(xs.len(), m, |i, j| ((xs[i] - mid) / half).powi(j as i32));
    let norms: Vec<f64> = (0..m).map(|j| a.column(j).norm()).collect();
    for (j, n) in norms.iter().enumerate() {
        a.column_mut(j).unscale_mut(*n);
    }
    let y = DVector::from_column_slice(ys);
    let normal = a.transpose() * &a;
    let Some(chol) = normal.clone().cholesky() else {
        return flat();
    };
    let eig = normal.symmetric_eigenvalues();
    let (emin, emax) = (eig.min(), eig.max());
    if !(emin > emax * 1e-13) {
        return flat();
    }
    let scaled = chol.solve(&(a.transpose() * y));
    // t-basis coefficients, then substitute t = (x - mid) / half
    let t: Vec<f64> = (0..m).map(|j| scaled[j] / norms[j]).collect();
    let mut coeffs = vec![0.0; m];
    for (k, tk) in t.iter().enumerate() {
        // ((x - mid) / half)^k = sum_i C(k, i) x^i (-mid)^(k-i) / half^k
        let scale = tk / half.powi(k as i32);
        let mut binom = 1.0;
        for i in 0..=k {
            coeffs[i] += scale * binom * (-mid).powi((k - i) as i32);
            binom = binom * (k - i) as f64 / (i + 1) as f64;
        }
    }
    Ok(PolyFit { coeffs, degenerate: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn affine_extremes() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64 * 0.3 - 1.0).collect();
        let up: Vec<f64> = xs.iter().map(|x| 2.0 * x + 3.0).collect();
        let down: Vec<f64> = xs.iter().map(|x| -x).collect();
        assert!((pearson(&xs, &up).unwrap().r - 1.0).abs() < 1e-15);
        assert!((pearson(&xs, &down).unwrap().r + 1.0).abs() < 1e-15);
    }

    #[test]
    fn six_point_hand_computation() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let ys = [2.0, 1.0, 4.0, 3.0, 7.0, 5.0];
        // sxy = 16, sxx = 35/2, syy = 70/3
        let expected = 16.0 * 3.0f64.sqrt() / 35.0;
        assert!((pearson(&xs, &ys).unwrap().r - expected).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_bad_input() {
        let c = pearson(&[1.0, 2.0, 3.0], &[4.0; 3]).unwrap();
        assert_eq!(c, Correlation { r: 0.0, degenerate: true });
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, f64::NAN], &[1.0, 2.0]).is_err());
    }

    /// Sampling spread of r at n = 100 is about (1 - rho^2) / 10, so single
    /// seeds are held loosely and the 50-seed mean tightly.
    #[test]
    fn planted_correlation_recovered() {
        let rho = 0.6;
        let mut mean = 0.0;
        for seed in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let xs: Vec<f64> = (0..100).map(|_| -> f64 { StandardNormal.sample(&mut rng) }).collect();
            let noise: Vec<f64> = (0..100).map(|_| -> f64 { StandardNormal.sample(&mut rng) }).collect();
            let ys: Vec<f64> = xs.iter().zip(&noise).map(|(x, e)| rho * x + (1.0 - rho * rho).sqrt() * e).collect();
            let r = pearson(&xs, &ys).unwrap().r;
            assert!((r - rho).abs() < 0.3, "seed {seed}: {r}");
            mean += r / 50.0;
        }
        assert!((mean - rho).abs() < 0.05, "{mean}");
    }

    #[test]
    fn exact_parabola() {
        let xs: Vec<f64> = (0..11).map(|i| -1.0 + 0.2 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x * x).collect();
        let fit = polyfit(&xs, &ys, 2).unwrap();
        for (c, want) in fit.coeffs.iter().zip([0.0, 0.0, 1.0]) {
            assert!((c - want).abs() < 1e-8, "{:?}", fit.coeffs);
        }
    }

    #[test]
    fn affine_fit_exact_off_center() {
        let xs: Vec<f64> = (0..20).map(|i| 0.7 + 0.6 * i as f64 / 19.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 4.0 - 2.5 * x).collect();
        let fit = polyfit(&xs, &ys, 1).unwrap();
        assert!((fit.coeffs[0] - 4.0).abs() < 1e-10 && (fit.coeffs[1] + 2.5).abs() < 1e-10);
    }

    #[test]
    fn cubic_fit_is_locally_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..40).map(|i| 0.7 + 0.6 * i as f64 / 39.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x.sin() + 0.05 * rng.random::<f64>()).collect();
        let fit = polyfit(&xs, &ys, 3).unwrap();
        let base = fit.sse(&xs, &ys);
        for j in 0..4 {
            for h in [1e-6, -1e-6] {
                let mut p = fit.clone();
                p.coeffs[j] += h;
                assert!(p.sse(&xs, &ys) >= base, "coefficient {j} step {h}");
            }
        }
    }

    #[test]
    fn vertex_of_noisy_peak() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..100).map(|i| i as f64 / 99.0).collect();
        let ys: Vec<f64> =
            xs.iter().map(|x| 1.0 - 3.0 * (x - 0.4) * (x - 0.4) + 0.02 * rng.random_range(-1.0..1.0)).collect();
        let v = polyfit(&xs, &ys, 2).unwrap().vertex().unwrap();
        assert!((v - 0.4).abs() < 0.02, "{v}");
    }

    #[test]
    fn rank_deficiency_flagged() {
        let fit = polyfit(&[2.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0], 1).unwrap();
        assert!(fit.degenerate);
        // two distinct abscissae cannot pin a quadratic
        let fit = polyfit(&[0.0, 0.0, 1.0, 1.0], &[1.0, 1.0, 2.0, 2.0], 2).unwrap();
        assert!(fit.degenerate);
        assert!(polyfit(&[0.0, 1.0], &[0.0, 1.0], 2).is_err());
        assert!(polyfit(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0], 4).is_err());
    }
}
