//! Structural diagnostics of a precoding matrix.

use num_complex::Complex64;

use crate::error::Result;
use crate::linalg::{svd, ComplexMatrix};

/// Rank and column-proportionality report for a precoder built for symbol
/// vector s.
#[derive(Debug, Clone, Copy)]
pub struct RankReport {
    /// sigma_2 / sigma_1 (0 when there is only one column).
    pub sigma_ratio: f64,
    /// max_i || p_i s_i - p_1 s_1 || / || p_1 s_1 ||.
    pub column_proportionality: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

pub fn verify_rank_structure(p: &ComplexMatrix, s: &[Complex64]) -> Result<RankReport> {
    let (_, sigma, _) = svd(p)?;
    let sigma_ratio = if sigma.len() > 1 && sigma[0] > 0.0 {
        sigma[1] / sigma[0]
    } else {
        0.0
    };

    let first: Vec<Complex64> = p.col(0).iter().map(|z| z * s[0]).collect();
    let base: f64 = first.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut dev = 0.0f64;
    for i in 1..p.cols() {
        let d: f64 = p
            .col(i)
            .iter()
            .zip(&first)
            .map(|(z, f)| (z * s[i] - f).norm_sqr())
            .sum::<f64>()
            .sqrt();
        dev = dev.max(d / base.max(1e-300));
    }
    Ok(RankReport {
        sigma_ratio,
        column_proportionality: dev,
        sigma_min: sigma.last().copied().unwrap_or(0.0),
        sigma_max: sigma.first().copied().unwrap_or(0.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_outer_product_scores_clean() {
        let x = vec![
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 1.0),
            Complex64::new(0.2, -0.2),
        ];
        let s = vec![Complex64::new(1.0, 1.0), Complex64::new(1.0, -1.0)];
        // columns x / s_i: p_i s_i = x for every i
        let p = ComplexMatrix::from_fn(3, 2, |r, c| x[r] / s[c]);
        let rep = verify_rank_structure(&p, &s).unwrap();
        assert!(rep.sigma_ratio < 1e-12);
        assert!(rep.column_proportionality < 1e-12);
    }

    #[test]
    fn full_rank_matrix_scores_dirty() {
        let p = ComplexMatrix::identity(3);
        let s = vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        let rep = verify_rank_structure(&p, &s).unwrap();
        assert!((rep.sigma_ratio - 1.0).abs() < 1e-12);
        assert!(rep.column_proportionality > 1.0);
    }
}
