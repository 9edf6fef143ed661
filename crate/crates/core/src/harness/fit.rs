use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slope through the origin fitted on the small-abscissa half of the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// All `(√(characteristic - 1), excess)` pairs, sorted by abscissa.
    pub pairs: Vec<(f64, f64)>,
    pub fitted_c: f64,
    /// Largest `|y - c·x| / max(c·x, |y|)` over the pairs used.
    pub residual: f64,
    /// Number of leading pairs used by the fit.
    pub used: usize,
    /// `δ = x²` range of the pairs used.
    pub band: (f64, f64),
}

pub fn fit_constant(pairs: &[(f64, f64)]) -> Result<FitResult> {
    if pairs.len() < 4 {
        return Err(Error::InvalidParameter(format!("fit needs at least 4 pairs, got {}", pairs.len())));
    }
    if let Some(bad) = pairs.iter().find(|(x, y)| !(*x > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::InvalidParameter(format!("fit pair {bad:?} needs a positive finite abscissa")));
    }
    let mut sorted = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let used = sorted.len().div_ceil(2);
    let half = &sorted[..used];
    let sxy: f64 = half.iter().map(|(x, y)| x * y).sum();
    let sxx: f64 = half.iter().map(|(x, _)| x * x).sum();
    let fitted_c = (sxy / sxx).max(0.0);
    let residual = half
        .iter()
        .map(|&(x, y)| {
            let dev = (y - fitted_c * x).abs();
            if dev == 0.0 {
                0.0
            } else {
                dev / (fitted_c * x).max(y.abs())
            }
        })
        .fold(0.0, f64::max);
    Ok(FitResult {
        band: (half[0].0.powi(2), half[used - 1].0.powi(2)),
        pairs: sorted,
        fitted_c,
        residual,
        used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pairs: Vec<_> = (1..=6).map(|k| (k as f64 * 0.1, 3.0 * k as f64 * 0.1)).collect();
        let fit = fit_constant(&pairs).unwrap();
        assert!((fit.fitted_c - 3.0).abs() < 1e-14);
        assert!(fit.residual < 1e-14);
        assert_eq!(fit.used, 3);
    }

    #[test]
    fn zero_ordinates() {
        let pairs: Vec<_> = (1..=4).map(|k| (k as f64, 0.0)).collect();
        let fit = fit_constant(&pairs).unwrap();
        assert_eq!(fit.fitted_c, 0.0);
        assert_eq!(fit.residual, 0.0);
    }

    #[test]
    fn too_few_pairs() {
        assert!(fit_constant(&[(1.0, 1.0); 3]).is_err());
    }
}
