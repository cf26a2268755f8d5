//! Array correlation and line-of-sight matrices for a half-wavelength uniform
//! linear array.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{repair_psd, CMatrix};

/// Default number of Simpson nodes for the angular integral.
pub const DEFAULT_QUADRATURE_POINTS: usize = 7201;

/// Smallest accepted number of Simpson nodes.
pub const MIN_QUADRATURE_POINTS: usize = 201;

/// Eigenvalues in `[-PSD_FLOOR, 0)` are quadrature noise and get clamped.
pub const PSD_FLOOR: f64 = 1e-10;

/// Half-width of the integration window in units of the angular spread. The
/// Gaussian weight beyond it is below `1e-31`.
const WINDOW_SPREADS: f64 = 12.0;

fn deg_to_rad(deg: f64) -> f64 {
    deg * PI / 180.0
}

/// Correlation matrix of a ULA seeing one cluster with Gaussian azimuth
/// profile of mean `theta_deg` and rms spread `delta` (degrees):
///
/// `M[m][n] = ∫_{-180}^{180} exp(jπ(m−n)·sin(πφ/180) − (φ−θ)²/(2δ²)) dφ / √(2πδ²)`
///
/// The integrand is negligible outside `θ ± 12δ`, so composite Simpson runs on
/// a uniform grid over that window clipped to `[-180, 180]`.
pub fn build_correlation_matrix(
    theta_deg: f64,
    delta: f64,
    size: usize,
    quadrature_points: usize,
) -> Result<CMatrix> {
    if size == 0 {
        return Err(Error::Config("correlation matrix size must be at least 1".into()));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Config(format!("angular spread must be positive, got {delta}")));
    }
    if !theta_deg.is_finite() {
        return Err(Error::Config(format!("mean angle must be finite, got {theta_deg}")));
    }
    if quadrature_points < MIN_QUADRATURE_POINTS || quadrature_points % 2 == 0 {
        return Err(Error::Config(format!(
            "quadrature_points must be odd and at least {MIN_QUADRATURE_POINTS}, got {quadrature_points}"
        )));
    }

    let lo = (theta_deg - WINDOW_SPREADS * delta).max(-180.0);
    let hi = (theta_deg + WINDOW_SPREADS * delta).min(180.0);
    let mut lags = vec![Complex64::new(0.0, 0.0); size];
    if hi > lo {
        let intervals = quadrature_points - 1;
        let h = (hi - lo) / intervals as f64;
        let norm = 1.0 / (2.0 * PI * delta * delta).sqrt();
        for i in 0..quadrature_points {
            let phi = lo + h * i as f64;
            let w = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let density = norm * (-(phi - theta_deg).powi(2) / (2.0 * delta * delta)).exp();
            let s = (deg_to_rad(phi)).sin();
            for (d, lag) in lags.iter_mut().enumerate() {
                *lag += Complex64::from_polar(w * density, PI * d as f64 * s);
            }
        }
        for lag in lags.iter_mut() {
            *lag *= h / 3.0;
        }
    }

    // M[m][n] depends on m − n only; negative lags are conjugates.
    let m = CMatrix::from_fn(size, size, |r, col| {
        if r >= col {
            lags[r - col]
        } else {
            lags[col - r].conj()
        }
    });
    repair_psd(&m, PSD_FLOOR)
}

/// Receive steering vector `[e^{jπ p sin θ}]` for `p = 0..len`.
pub fn steering_vector(theta_deg: f64, len: usize) -> Vec<Complex64> {
    let s = deg_to_rad(theta_deg).sin();
    (0..len).map(|p| Complex64::from_polar(1.0, PI * p as f64 * s)).collect()
}

/// Rank-one line-of-sight matrix `a_R(θ̄ᴿ)·a_T(θ̄ᵀ)ᴴ`, where the transmit
/// steering vector carries the negative phase progression.
pub fn build_los_matrix(theta_bar_r: f64, theta_bar_t: f64, n_rx: usize, n_tx: usize) -> CMatrix {
    let a_r = steering_vector(theta_bar_r, n_rx);
    // a_T = conj(steering_vector); its conjugate transpose is steering_vector itself.
    let a_t_conj = steering_vector(theta_bar_t, n_tx);
    CMatrix::from_fn(n_rx, n_tx, |p, q| a_r[p] * a_t_conj[q])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{frobenius, is_hermitian, HermitianEigen};

    /// Independent trapezoid evaluation over the full [-180, 180] range.
    fn trapezoid_entry(theta: f64, delta: f64, lag: i64, points: usize) -> Complex64 {
        let h = 360.0 / (points - 1) as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..points {
            let phi = -180.0 + h * i as f64;
            let w = if i == 0 || i == points - 1 { 0.5 } else { 1.0 };
            let g = (-(phi - theta).powi(2) / (2.0 * delta * delta)).exp() / (2.0 * PI * delta * delta).sqrt();
            acc += Complex64::from_polar(w * g, PI * lag as f64 * (phi * PI / 180.0).sin());
        }
        acc * h
    }

    #[test]
    fn scalar_case_is_unit_mass() {
        let m = build_correlation_matrix(10.0, 0.01, 1, DEFAULT_QUADRATURE_POINTS).unwrap();
        assert!((m[(0, 0)].re - 1.0).abs() < 1e-10);
        assert!(m[(0, 0)].im.abs() < 1e-10);
    }

    #[test]
    fn vanishing_spread_at_broadside_is_all_ones() {
        let m = build_correlation_matrix(0.0, 1e-4, 4, DEFAULT_QUADRATURE_POINTS).unwrap();
        for z in m.iter() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn off_diagonal_matches_trapezoid_oracle() {
        let m = build_correlation_matrix(30.0, 0.04, 2, DEFAULT_QUADRATURE_POINTS).unwrap();
        // (m, n) = (1, 2) in 1-based indexing is lag −1.
        let oracle = trapezoid_entry(30.0, 0.04, -1, 100_001);
        let got = m[(0, 1)];
        assert!((got - oracle).norm() < 1e-9, "got {got}, oracle {oracle}");
        assert!((got.norm() - 1.0).abs() < 1e-5);
        assert!((got.arg() + PI / 2.0).abs() < 1e-5);
    }

    #[test]
    fn wide_spread_matches_oracle() {
        let m = build_correlation_matrix(-20.0, 15.0, 3, DEFAULT_QUADRATURE_POINTS).unwrap();
        for lag in 0..3i64 {
            let oracle = trapezoid_entry(-20.0, 15.0, lag, 100_001);
            assert!((m[(lag as usize, 0)] - oracle).norm() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_quadrature() {
        assert!(matches!(build_correlation_matrix(0.0, 1.0, 2, 200), Err(Error::Config(_))));
        assert!(matches!(build_correlation_matrix(0.0, 1.0, 2, 199), Err(Error::Config(_))));
        assert!(matches!(build_correlation_matrix(0.0, 0.0, 2, 201), Err(Error::Config(_))));
    }

    #[test]
    fn correlation_is_hermitian_psd_with_unit_diagonal() {
        for &(theta, delta) in &[(10.0, 0.01), (45.0, 1.0), (-60.0, 5.0)] {
            let m = build_correlation_matrix(theta, delta, 6, DEFAULT_QUADRATURE_POINTS).unwrap();
            assert!(is_hermitian(&m, 1e-14));
            for i in 0..6 {
                assert!((m[(i, i)].re - 1.0).abs() < 1e-6);
            }
            assert!(HermitianEigen::new(&m).min() >= -1e-12);
        }
    }

    #[test]
    fn los_examples() {
        let h = build_los_matrix(0.0, 0.0, 2, 2);
        for z in h.iter() {
            assert!((z - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
        let h = build_los_matrix(30.0, 0.0, 2, 1);
        assert!((h[(0, 0)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((h[(1, 0)] - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn los_is_rank_one_with_full_norm() {
        let h = build_los_matrix(17.0, -41.0, 5, 3);
        assert!((frobenius(&h).powi(2) - 15.0).abs() < 1e-12);
        let gram = &h * h.adjoint();
        let e = HermitianEigen::new(&gram);
        assert!((e.values[0] - 15.0).abs() < 1e-10);
        assert!(e.values[1..].iter().all(|v| v.abs() < 1e-10));
    }
}
