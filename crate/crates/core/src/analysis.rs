//! One-dimensional transport distances, ensemble estimators and rate fits.

use crate::error::{Error, Result};

/// Allowed deviation of the total mass from 1.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// A probability measure on the line.
#[derive(Debug, Clone, PartialEq)]
pub enum Measure1D {
    /// Equal-weight atoms.
    Samples(Vec<f64>),
    /// Piecewise-constant density on cells `[lo + kΔu, lo + (k+1)Δu)`.
    Grid { lo: f64, du: f64, density: Vec<f64> },
    /// Weighted atoms.
    Particles { locations: Vec<f64>, weights: Vec<f64> },
}

impl Measure1D {
    pub fn total_mass(&self) -> f64 {
        match self {
            Measure1D::Samples(xs) => {
                if xs.is_empty() {
                    0.0
                } else {
                    1.0
                }
            }
            Measure1D::Grid { du, density, .. } => density.iter().sum::<f64>() * du,
            Measure1D::Particles { weights, .. } => weights.iter().sum(),
        }
    }

    fn check(&self) -> Result<()> {
        if let Measure1D::Particles { locations, weights } = self {
            if locations.len() != weights.len() {
                return Err(Error::LengthMismatch {
                    left: locations.len(),
                    right: weights.len(),
                });
            }
        }
        let mass = self.total_mass();
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization { mass });
        }
        Ok(())
    }

    fn cdf(&self) -> Cdf {
        match self {
            Measure1D::Samples(xs) => {
                let w = 1.0 / xs.len() as f64;
                Cdf::atoms(xs.iter().map(|&x| (x, w)).collect())
            }
            Measure1D::Particles { locations, weights } => Cdf::atoms(
                locations
                    .iter()
                    .copied()
                    .zip(weights.iter().copied())
                    .collect(),
            ),
            Measure1D::Grid { lo, du, density } => {
                let mut cum = Vec::with_capacity(density.len() + 1);
                let mut acc = 0.0;
                cum.push(0.0);
                for g in density {
                    acc += g * du;
                    cum.push(acc);
                }
                Cdf::Grid {
                    lo: *lo,
                    du: *du,
                    cum,
                }
            }
        }
    }
}

enum Cdf {
    Atoms { xs: Vec<f64>, cum: Vec<f64> },
    Grid { lo: f64, du: f64, cum: Vec<f64> },
}

impl Cdf {
    fn atoms(mut pts: Vec<(f64, f64)>) -> Self {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut xs = Vec::with_capacity(pts.len());
        let mut cum = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        for (x, w) in pts {
            acc += w;
            xs.push(x);
            cum.push(acc);
        }
        Cdf::Atoms { xs, cum }
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        match self {
            Cdf::Atoms { xs, .. } => out.extend_from_slice(xs),
            Cdf::Grid { lo, du, cum } => {
                out.extend((0..cum.len()).map(|k| lo + k as f64 * du));
            }
        }
    }

    /// F(x) when `left_limit` is false, F(x−) otherwise.
    fn eval(&self, x: f64, left_limit: bool) -> f64 {
        match self {
            Cdf::Atoms { xs, cum } => {
                let k = if left_limit {
                    xs.partition_point(|&p| p < x)
                } else {
                    xs.partition_point(|&p| p <= x)
                };
                if k == 0 {
                    0.0
                } else {
                    cum[k - 1]
                }
            }
            Cdf::Grid { lo, du, cum } => {
                let n = cum.len() - 1;
                let s = (x - lo) / du;
                if s <= 0.0 {
                    return 0.0;
                }
                if s >= n as f64 {
                    return cum[n];
                }
                let k = (s.floor() as usize).min(n - 1);
                let frac = s - k as f64;
                cum[k] + frac * (cum[k + 1] - cum[k])
            }
        }
    }
}

/// ∫ |l(t)| dt over a segment of length `h` where l is linear from `d0` to `d1`.
fn abs_linear_integral(d0: f64, d1: f64, h: f64) -> f64 {
    if (d0 >= 0.0) == (d1 >= 0.0) || d0 == 0.0 || d1 == 0.0 {
        0.5 * (d0.abs() + d1.abs()) * h
    } else {
        // crosses zero inside the segment
        0.5 * (d0 * d0 + d1 * d1) / (d0.abs() + d1.abs()) * h
    }
}

/// 1-Wasserstein distance ∫|F_a − F_b|, exact for all representations.
pub fn w1(a: &Measure1D, b: &Measure1D) -> Result<f64> {
    a.check()?;
    b.check()?;
    let (fa, fb) = (a.cdf(), b.cdf());
    let mut pts = Vec::new();
    fa.breakpoints(&mut pts);
    fb.breakpoints(&mut pts);
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut total = 0.0;
    for win in pts.windows(2) {
        let (x0, x1) = (win[0], win[1]);
        let d0 = fa.eval(x0, false) - fb.eval(x0, false);
        let d1 = fa.eval(x1, true) - fb.eval(x1, true);
        total += abs_linear_integral(d0, d1, x1 - x0);
    }
    Ok(total)
}

/// Mean squared difference of order statistics.
pub fn w2_sq_samples(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let s: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok(s / a.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    /// Sum of squared residuals in log space.
    pub residual: f64,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<LogLogFit> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: xs.len(),
        });
    }
    for (index, &value) in xs.iter().chain(ys).enumerate() {
        if !(value > 0.0) {
            return Err(Error::NonPositive {
                index: index % xs.len(),
                value,
            });
        }
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    Ok(LogLogFit {
        slope,
        intercept,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub mean: f64,
    /// Unbiased (divisor M − 1).
    pub variance: f64,
    pub std: f64,
}

pub fn ensemble_stats(values: &[f64]) -> Result<EnsembleStats> {
    if values.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: values.len(),
        });
    }
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let variance = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (m - 1.0);
    Ok(EnsembleStats {
        mean,
        variance,
        std: variance.sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn s(v: &[f64]) -> Measure1D {
        Measure1D::Samples(v.to_vec())
    }

    #[test]
    fn w1_examples() {
        assert_eq!(w1(&s(&[0.3, -0.2]), &s(&[0.3, -0.2])).unwrap(), 0.0);
        assert!((w1(&s(&[-0.4]), &s(&[0.7])).unwrap() - 1.1).abs() < 1e-15);
        // both matchings of {0,1} onto {0.5,0.5} cost 0.5
        assert!((w1(&s(&[0.0, 1.0]), &s(&[0.5, 0.5])).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn w1_uniform_vs_point_mass() {
        // uniform on [0,1] vs δ_0: ∫_0^1 (1 − u) du = 1/2
        let grid = Measure1D::Grid {
            lo: 0.0,
            du: 0.25,
            density: vec![1.0; 4],
        };
        assert!((w1(&grid, &s(&[0.0])).unwrap() - 0.5).abs() < 1e-15);
        // uniform vs δ_{1/2}: 1/4
        assert!((w1(&grid, &s(&[0.5])).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn w1_rejects_unnormalized() {
        let p = Measure1D::Particles {
            locations: vec![0.0, 0.1],
            weights: vec![0.5, 0.4],
        };
        assert!(matches!(w1(&p, &s(&[0.0])), Err(Error::Normalization { .. })));
    }

    #[test]
    fn w2_examples() {
        assert_eq!(w2_sq_samples(&[0.1, 0.5], &[0.5, 0.1]).unwrap(), 0.0);
        assert!((w2_sq_samples(&[0.0, 1.0], &[0.3, 1.3]).unwrap() - 0.09).abs() < 1e-15);
        assert_eq!(w2_sq_samples(&[0.0, 2.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(matches!(
            w2_sq_samples(&[0.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn loglog_examples() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let f = fit_loglog_slope(&xs, &xs.map(|x| 3.0 / x)).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12 && f.residual < 1e-24);
        let f = fit_loglog_slope(&xs, &[2.0; 4]).unwrap();
        assert!(f.slope.abs() < 1e-12);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let xs: Vec<f64> = (0..8).map(|k| 2f64.powi(k)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| {
                let z: f64 = StandardNormal.sample(&mut rng);
                x.powf(1.5) * (1.0 + 0.01 * z)
            })
            .collect();
        let f = fit_loglog_slope(&xs, &ys).unwrap();
        assert!((1.4..=1.6).contains(&f.slope), "{}", f.slope);
        assert!(matches!(
            fit_loglog_slope(&[1.0, 0.0, 2.0], &[1.0, 1.0, 1.0]),
            Err(Error::NonPositive { .. })
        ));
    }

    #[test]
    fn ensemble_examples() {
        let e = ensemble_stats(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!((e.mean, e.variance, e.std), (5.0, 0.0, 0.0));
        let e = ensemble_stats(&[4.0, 6.0]).unwrap();
        assert_eq!((e.mean, e.variance), (5.0, 2.0));
        assert!((e.std - 2f64.sqrt()).abs() < 1e-15);
        assert!(ensemble_stats(&[1.0]).is_err());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e = ensemble_stats(&draws).unwrap();
        assert!(e.mean.abs() < 0.05 && (0.9..=1.1).contains(&e.variance));
    }

    fn samples(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-1.0f64..1.0, n)
    }

    proptest! {
        #[test]
        fn w1_metric_axioms(a in samples(7), b in samples(5), c in samples(9)) {
            let (a, b, c) = (s(&a), s(&b), s(&c));
            let ab = w1(&a, &b).unwrap();
            prop_assert_eq!(ab, w1(&b, &a).unwrap());
            prop_assert!(ab <= w1(&a, &c).unwrap() + w1(&c, &b).unwrap() + 1e-12);
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn w2_dominates_w1_squared(a in samples(12), b in samples(12)) {
            let d1 = w1(&s(&a), &s(&b)).unwrap();
            prop_assert!(w2_sq_samples(&a, &b).unwrap() >= d1 * d1 - 1e-12);
        }

        #[test]
        fn grid_vs_cell_centre_particles(raw in prop::collection::vec(0.01f64..1.0, 20)) {
            let du = 2.0 / raw.len() as f64;
            let total: f64 = raw.iter().sum::<f64>() * du;
            let density: Vec<f64> = raw.iter().map(|g| g / total).collect();
            let weights: Vec<f64> = density.iter().map(|g| g * du).collect();
            let wsum: f64 = weights.iter().sum();
            let weights: Vec<f64> = weights.iter().map(|w| w / wsum).collect();
            let locations = (0..raw.len()).map(|k| -1.0 + (k as f64 + 0.5) * du).collect();
            let grid = Measure1D::Grid { lo: -1.0, du, density };
            let part = Measure1D::Particles { locations, weights };
            prop_assert!(w1(&grid, &part).unwrap() <= du / 2.0 + 1e-12);
        }
    }
}
