//! Gaussian-state algebra over optical modes.
//!
//! States carry a mean quadrature vector and a covariance matrix in the
//! interleaved ordering `(x1, p1, x2, p2, ...)` with vacuum variance 1 per
//! quadrature. All operations are pure: they take `&self` and return a new
//! state.
//!
//! Phase rotation follows `a -> a e^{i phi}`, i.e. `x -> x cos(phi) - p
//! sin(phi)`, `p -> x sin(phi) + p cos(phi)`. Under this convention a phase
//! shift `phi` on a mode is equivalent to shifting that mode's homodyne angle
//! by `-phi`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::{Error, Result};

/// Symplectic form, block-diagonal `[[0, 1], [-1, 0]]` per mode.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

/// Linear phase-space transform: `mean -> S mean + d`, `cov -> S cov S^T`.
#[derive(Debug, Clone)]
pub struct SymplecticOp {
    pub matrix: DMatrix<f64>,
    pub displacement: DVector<f64>,
}

impl SymplecticOp {
    pub fn identity(n_modes: usize) -> Self {
        SymplecticOp {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
            displacement: DVector::zeros(2 * n_modes),
        }
    }

    /// Rotation of one mode's quadratures by `phi` (`a -> a e^{i phi}`).
    pub fn phase_rotation(n_modes: usize, mode: usize, phi: f64) -> Result<Self> {
        check_mode(mode, n_modes)?;
        let mut op = Self::identity(n_modes);
        let (c, s) = (phi.cos(), phi.sin());
        let i = 2 * mode;
        op.matrix[(i, i)] = c;
        op.matrix[(i, i + 1)] = -s;
        op.matrix[(i + 1, i)] = s;
        op.matrix[(i + 1, i + 1)] = c;
        Ok(op)
    }

    /// Two-mode squeezer with strength `r >= 0`.
    ///
    /// At `phase = 0` on vacuum this squeezes `(x_a - x_b)` and `(p_a + p_b)`
    /// to `e^{-2r}` and raises each single-mode variance to `cosh 2r`, with
    /// `Cov(x_a, x_b) = +sinh 2r` and `Cov(p_a, p_b) = -sinh 2r`. A nonzero
    /// `phase` rotates the squeezed joint quadratures by `phase / 2`.
    pub fn two_mode_squeezer(
        n_modes: usize,
        mode_a: usize,
        mode_b: usize,
        r: f64,
        phase: f64,
    ) -> Result<Self> {
        check_mode(mode_a, n_modes)?;
        check_mode(mode_b, n_modes)?;
        if mode_a == mode_b {
            return Err(Error::InvalidArgument(
                "two-mode squeezer requires distinct modes".into(),
            ));
        }
        if r < 0.0 {
            return Err(Error::InvalidArgument(
                "squeeze strength r must be >= 0 (fold sign into the phase)".into(),
            ));
        }
        let mut base = Self::identity(n_modes);
        let (ch, sh) = (r.cosh(), r.sinh());
        let (ia, ib) = (2 * mode_a, 2 * mode_b);
        // x_a' = ch x_a + sh x_b ; p_a' = ch p_a - sh p_b (and symmetrically).
        base.matrix[(ia, ia)] = ch;
        base.matrix[(ia, ib)] = sh;
        base.matrix[(ia + 1, ia + 1)] = ch;
        base.matrix[(ia + 1, ib + 1)] = -sh;
        base.matrix[(ib, ib)] = ch;
        base.matrix[(ib, ia)] = sh;
        base.matrix[(ib + 1, ib + 1)] = ch;
        base.matrix[(ib + 1, ia + 1)] = -sh;
        if phase == 0.0 {
            return Ok(base);
        }
        let pre_a = Self::phase_rotation(n_modes, mode_a, -phase / 2.0)?;
        let pre_b = Self::phase_rotation(n_modes, mode_b, -phase / 2.0)?;
        let post_a = Self::phase_rotation(n_modes, mode_a, phase / 2.0)?;
        let post_b = Self::phase_rotation(n_modes, mode_b, phase / 2.0)?;
        let matrix =
            &post_a.matrix * &post_b.matrix * &base.matrix * &pre_b.matrix * &pre_a.matrix;
        Ok(SymplecticOp {
            matrix,
            displacement: DVector::zeros(2 * n_modes),
        })
    }

    /// Beamsplitter of power transmissivity `t` between two modes.
    pub fn beamsplitter(
        n_modes: usize,
        mode_a: usize,
        mode_b: usize,
        transmissivity: f64,
    ) -> Result<Self> {
        check_mode(mode_a, n_modes)?;
        check_mode(mode_b, n_modes)?;
        if mode_a == mode_b {
            return Err(Error::InvalidArgument(
                "beamsplitter requires distinct modes".into(),
            ));
        }
        if !(0.0..=1.0).contains(&transmissivity) {
            return Err(Error::InvalidArgument(format!(
                "transmissivity must lie in [0, 1], got {transmissivity}"
            )));
        }
        let mut op = Self::identity(n_modes);
        let t = transmissivity.sqrt();
        let rr = (1.0 - transmissivity).sqrt();
        let (ia, ib) = (2 * mode_a, 2 * mode_b);
        for off in 0..2 {
            op.matrix[(ia + off, ia + off)] = t;
            op.matrix[(ia + off, ib + off)] = rr;
            op.matrix[(ib + off, ia + off)] = rr;
            op.matrix[(ib + off, ib + off)] = -t;
        }
        Ok(op)
    }

    /// Max-abs entry of `S^T Omega S - Omega`; zero for an exact symplectic.
    pub fn symplectic_defect(&self) -> f64 {
        let n_modes = self.matrix.nrows() / 2;
        let omega = symplectic_form(n_modes);
        let residual = self.matrix.transpose() * &omega * &self.matrix - omega;
        residual.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn apply(&self, state: &GaussianState) -> GaussianState {
        let mean = &self.matrix * &state.mean + &self.displacement;
        let cov = &self.matrix * &state.cov * self.matrix.transpose();
        let mut out = GaussianState { mean, cov };
        out.symmetrize();
        out
    }
}

/// Weighted multi-mode homodyne observable `M = sum_i w_i (x_i cos(theta_i) +
/// p_i sin(theta_i))`, one angle and weight per mode.
#[derive(Debug, Clone)]
pub struct MeasurementCombination {
    pub angles: Vec<f64>,
    pub weights: Vec<f64>,
}

impl MeasurementCombination {
    pub fn new(angles: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if angles.len() != weights.len() {
            return Err(Error::InvalidArgument(
                "measurement combination needs one angle per weight".into(),
            ));
        }
        if weights.iter().all(|w| *w == 0.0) {
            return Err(Error::InvalidArgument(
                "measurement combination needs at least one nonzero weight".into(),
            ));
        }
        Ok(MeasurementCombination { angles, weights })
    }

    /// Single-mode homodyne at angle `theta` in an `n_modes` scene.
    pub fn homodyne(n_modes: usize, mode: usize, theta: f64) -> Result<Self> {
        check_mode(mode, n_modes)?;
        let mut weights = vec![0.0; n_modes];
        weights[mode] = 1.0;
        let mut angles = vec![0.0; n_modes];
        angles[mode] = theta;
        Self::new(angles, weights)
    }

    /// Phase-space vector of the observable.
    pub fn observable(&self, n_modes: usize) -> Result<DVector<f64>> {
        if self.angles.len() != n_modes {
            return Err(Error::InvalidArgument(format!(
                "measurement combination covers {} modes, state has {}",
                self.angles.len(),
                n_modes
            )));
        }
        let mut v = DVector::zeros(2 * n_modes);
        for (i, (theta, w)) in self.angles.iter().zip(&self.weights).enumerate() {
            v[2 * i] = w * theta.cos();
            v[2 * i + 1] = w * theta.sin();
        }
        Ok(v)
    }
}

/// Gaussian state over `n` optical modes: mean quadrature vector of length
/// `2n` and symmetric `2n x 2n` covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    /// Vacuum: zero mean, identity covariance.
    pub fn vacuum(n_modes: usize) -> Result<Self> {
        if n_modes == 0 {
            return Err(Error::InvalidArgument("state needs at least one mode".into()));
        }
        Ok(GaussianState {
            mean: DVector::zeros(2 * n_modes),
            cov: DMatrix::identity(2 * n_modes, 2 * n_modes),
        })
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    fn symmetrize(&mut self) {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        self.cov = sym;
    }

    /// Coherent displacement by complex amplitude `alpha` on one mode:
    /// `(x, p) += (2 Re alpha, 2 Im alpha)`.
    pub fn displace(&self, mode: usize, alpha: Complex64) -> Result<Self> {
        check_mode(mode, self.n_modes())?;
        let mut out = self.clone();
        out.mean[2 * mode] += 2.0 * alpha.re;
        out.mean[2 * mode + 1] += 2.0 * alpha.im;
        Ok(out)
    }

    pub fn two_mode_squeeze(
        &self,
        mode_a: usize,
        mode_b: usize,
        r: f64,
        phase: f64,
    ) -> Result<Self> {
        let op = SymplecticOp::two_mode_squeezer(self.n_modes(), mode_a, mode_b, r, phase)?;
        Ok(op.apply(self))
    }

    pub fn phase_rotate(&self, mode: usize, phi: f64) -> Result<Self> {
        let op = SymplecticOp::phase_rotation(self.n_modes(), mode, phi)?;
        Ok(op.apply(self))
    }

    pub fn beamsplitter(&self, mode_a: usize, mode_b: usize, transmissivity: f64) -> Result<Self> {
        let op = SymplecticOp::beamsplitter(self.n_modes(), mode_a, mode_b, transmissivity)?;
        Ok(op.apply(self))
    }

    /// Pure loss on one mode: `X -> sqrt(eta) X + sqrt(1 - eta) X_vac`.
    /// Mean scales by `sqrt(eta)`, variances by `eta` toward vacuum.
    pub fn loss_channel(&self, mode: usize, eta: f64) -> Result<Self> {
        check_mode(mode, self.n_modes())?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidArgument(format!(
                "efficiency must lie in [0, 1], got {eta}"
            )));
        }
        let n = 2 * self.n_modes();
        let mut scale = DMatrix::identity(n, n);
        let se = eta.sqrt();
        scale[(2 * mode, 2 * mode)] = se;
        scale[(2 * mode + 1, 2 * mode + 1)] = se;
        let mean = &scale * &self.mean;
        let mut cov = &scale * &self.cov * scale.transpose();
        cov[(2 * mode, 2 * mode)] += 1.0 - eta;
        cov[(2 * mode + 1, 2 * mode + 1)] += 1.0 - eta;
        let mut out = GaussianState { mean, cov };
        out.symmetrize();
        Ok(out)
    }

    /// Exact first and second central moments of a homodyne combination.
    pub fn measure_stats(&self, comb: &MeasurementCombination) -> Result<(f64, f64)> {
        let v = comb.observable(self.n_modes())?;
        let mean = v.dot(&self.mean);
        let variance = v.dot(&(&self.cov * &v));
        Ok((mean, variance))
    }

    /// Variance of a single-mode homodyne at angle `theta`.
    pub fn homodyne_variance(&self, mode: usize, theta: f64) -> Result<f64> {
        let comb = MeasurementCombination::homodyne(self.n_modes(), mode, theta)?;
        Ok(self.measure_stats(&comb)?.1)
    }

    /// `det(cov)`; equals 1 for pure states in this normalization.
    pub fn purity_det(&self) -> f64 {
        self.cov.determinant()
    }

    /// Smallest symplectic eigenvalue of the covariance matrix; physical
    /// states satisfy `nu_min >= 1` in this normalization.
    pub fn min_symplectic_eigenvalue(&self) -> f64 {
        let omega = symplectic_form(self.n_modes());
        let m = &omega * &self.cov;
        m.complex_eigenvalues()
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Largest asymmetry `|cov - cov^T|` relative to the largest entry.
    pub fn symmetry_defect(&self) -> f64 {
        let asym = &self.cov - self.cov.transpose();
        let max_asym = asym.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let max_entry = self.cov.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if max_entry == 0.0 {
            max_asym
        } else {
            max_asym / max_entry
        }
    }
}

fn check_mode(mode: usize, n_modes: usize) -> Result<()> {
    if mode >= n_modes {
        return Err(Error::InvalidArgument(format!(
            "mode index {mode} out of range for {n_modes}-mode state"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn vacuum_is_identity_covariance() {
        let s = GaussianState::vacuum(1).unwrap();
        assert_eq!(s.mean.as_slice(), &[0.0, 0.0]);
        assert_eq!(s.cov, DMatrix::identity(2, 2));
        let s2 = GaussianState::vacuum(2).unwrap();
        assert_eq!(s2.mean.len(), 4);
        assert_eq!(s2.cov, DMatrix::identity(4, 4));
        assert!(GaussianState::vacuum(0).is_err());
    }

    #[test]
    fn vacuum_homodyne_is_phase_invariant() {
        let s = GaussianState::vacuum(1).unwrap();
        for theta in [0.0, 0.3, 1.2, 2.9, 5.5] {
            assert_relative_eq!(s.homodyne_variance(0, theta).unwrap(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn displacement_shifts_mean_only() {
        let s = GaussianState::vacuum(1).unwrap();
        let d0 = s.displace(0, Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(d0, s);
        let dx = s.displace(0, Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(dx.mean.as_slice(), &[2.0, 0.0]);
        assert_eq!(dx.cov, s.cov);
        let dp = s.displace(0, Complex64::new(0.0, 1.0)).unwrap();
        assert_eq!(dp.mean.as_slice(), &[0.0, 2.0]);
        assert!(s.displace(1, Complex64::new(1.0, 0.0)).is_err());
    }

    #[test]
    fn two_mode_squeeze_matches_closed_form() {
        // r chosen so that cosh(2r) = 2: amplifier gain cosh^2 r = 1.5.
        let r = 0.5 * 2.0_f64.acosh();
        let s = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, r, 0.0)
            .unwrap();
        assert_relative_eq!(s.cov[(0, 0)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(s.cov[(1, 1)], 2.0, epsilon = 1e-12);
        assert_relative_eq!(s.cov[(0, 2)], (2.0 * r).sinh(), epsilon = 1e-12);
        assert_relative_eq!(s.cov[(1, 3)], -(2.0 * r).sinh(), epsilon = 1e-12);
        // Joint quadrature (x_a - x_b)/sqrt(2) is squeezed to e^{-2r}.
        let inv = 1.0 / 2.0_f64.sqrt();
        let comb = MeasurementCombination::new(vec![0.0, 0.0], vec![inv, -inv]).unwrap();
        let (_, var) = s.measure_stats(&comb).unwrap();
        assert_relative_eq!(var, (-2.0 * r).exp(), epsilon = 1e-12);
    }

    #[test]
    fn squeeze_edge_cases() {
        let v = GaussianState::vacuum(2).unwrap();
        let id = v.two_mode_squeeze(0, 1, 0.0, 0.7).unwrap();
        assert_relative_eq!((&id.cov - &v.cov).norm(), 0.0, epsilon = 1e-14);
        assert!(v.two_mode_squeeze(0, 1, -0.1, 0.0).is_err());
        assert!(v.two_mode_squeeze(0, 0, 0.5, 0.0).is_err());
    }

    #[test]
    fn phase_rotation_shifts_homodyne_angle() {
        let r = 0.4;
        let s = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, r, 0.0)
            .unwrap();
        let phi = 0.83;
        let rotated = s.phase_rotate(0, phi).unwrap();
        for theta in [0.0, 0.9, 2.4] {
            let a = rotated.homodyne_variance(0, theta).unwrap();
            let b = s.homodyne_variance(0, theta - phi).unwrap();
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
        let full_turn = s.phase_rotate(0, 2.0 * std::f64::consts::PI).unwrap();
        assert!((&full_turn.cov - &s.cov).norm() < 1e-12);
    }

    #[test]
    fn loss_channel_limits() {
        let s = GaussianState::vacuum(2)
            .unwrap()
            .displace(0, Complex64::new(3.0, 0.0))
            .unwrap()
            .two_mode_squeeze(0, 1, 0.8, 0.0)
            .unwrap();
        let same = s.loss_channel(0, 1.0).unwrap();
        assert!((&same.cov - &s.cov).norm() < 1e-12);
        let gone = s.loss_channel(0, 0.0).unwrap();
        assert_relative_eq!(gone.cov[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(gone.cov[(1, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(gone.mean[0], 0.0, epsilon = 1e-12);
        assert!(s.loss_channel(0, 1.5).is_err());
        assert!(s.loss_channel(0, -0.1).is_err());
    }

    #[test]
    fn single_arm_loss_on_squeezed_pair_costs_about_a_fifth_db() {
        // 5 dB of joint squeezing, then 5% loss on one arm: the joint
        // squeezing degrades to roughly 4.77 dB.
        let ratio = 10.0_f64.powf(-0.5);
        let r = -(ratio.ln()) / 2.0;
        let s = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, r, 0.0)
            .unwrap()
            .loss_channel(0, 0.95)
            .unwrap();
        let inv = 1.0 / 2.0_f64.sqrt();
        let comb = MeasurementCombination::new(vec![0.0, 0.0], vec![inv, -inv]).unwrap();
        let (_, var) = s.measure_stats(&comb).unwrap();
        let db = -10.0 * var.log10();
        assert!((db - 4.77).abs() < 0.05, "got {db} dB");
    }

    #[test]
    fn beamsplitter_conserves_energy_and_vacuum() {
        let v = GaussianState::vacuum(2).unwrap();
        let id = v.beamsplitter(0, 1, 1.0).unwrap();
        assert!((&id.cov - &v.cov).norm() < 1e-14);
        let half = v.beamsplitter(0, 1, 0.5).unwrap();
        assert!((&half.cov - &v.cov).norm() < 1e-12);
        let bright = v.displace(0, Complex64::new(1.3, -0.4)).unwrap();
        let mixed = bright.beamsplitter(0, 1, 0.37).unwrap();
        assert_relative_eq!(
            mixed.mean.norm_squared(),
            bright.mean.norm_squared(),
            epsilon = 1e-12
        );
        assert!(v.beamsplitter(0, 1, 1.2).is_err());
    }

    #[test]
    fn beamsplitter_composition_matches_matrix_product() {
        let bs = SymplecticOp::beamsplitter(2, 0, 1, 0.5).unwrap();
        let flip = SymplecticOp::phase_rotation(2, 1, std::f64::consts::PI).unwrap();
        let composed = &bs.matrix * &flip.matrix * &bs.matrix;
        let v = GaussianState::vacuum(2)
            .unwrap()
            .displace(0, Complex64::new(1.0, 0.0))
            .unwrap();
        let stepped = v
            .beamsplitter(0, 1, 0.5)
            .unwrap()
            .phase_rotate(1, std::f64::consts::PI)
            .unwrap()
            .beamsplitter(0, 1, 0.5)
            .unwrap();
        let direct = &composed * &v.mean;
        assert!((direct - &stepped.mean).norm() < 1e-12);
    }

    #[test]
    fn measure_stats_checks_dimensions() {
        let s = GaussianState::vacuum(2).unwrap();
        let comb = MeasurementCombination::new(vec![0.0], vec![1.0]).unwrap();
        assert!(s.measure_stats(&comb).is_err());
        assert!(MeasurementCombination::new(vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn displaced_probe_small_phase_gives_linear_mean() {
        let alpha = 10.0;
        let s = GaussianState::vacuum(1)
            .unwrap()
            .displace(0, Complex64::new(alpha, 0.0))
            .unwrap();
        let phi = 1e-4;
        let rotated = s.phase_rotate(0, phi).unwrap();
        let comb =
            MeasurementCombination::homodyne(1, 0, std::f64::consts::FRAC_PI_2).unwrap();
        let (mean, _) = rotated.measure_stats(&comb).unwrap();
        assert_relative_eq!(mean, 2.0 * alpha * phi, max_relative = 1e-6);
        // Finite-difference slope at half the step agrees.
        let half = s.phase_rotate(0, phi / 2.0).unwrap();
        let (mean_half, _) = half.measure_stats(&comb).unwrap();
        assert_relative_eq!(mean_half * 2.0, mean, max_relative = 1e-6);
    }

    #[test]
    fn constructed_ops_are_symplectic() {
        let ops = [
            SymplecticOp::phase_rotation(3, 1, 0.73).unwrap(),
            SymplecticOp::two_mode_squeezer(3, 0, 2, 1.1, 0.4).unwrap(),
            SymplecticOp::beamsplitter(3, 0, 1, 0.3).unwrap(),
        ];
        for op in &ops {
            assert!(op.symplectic_defect() < 1e-10);
        }
    }

    #[test]
    fn pure_states_stay_physical() {
        let s = GaussianState::vacuum(2)
            .unwrap()
            .two_mode_squeeze(0, 1, 1.3, 0.2)
            .unwrap()
            .phase_rotate(0, 0.5)
            .unwrap()
            .beamsplitter(0, 1, 0.7)
            .unwrap();
        assert_relative_eq!(s.purity_det(), 1.0, max_relative = 1e-9);
        assert!(s.min_symplectic_eigenvalue() >= 1.0 - 1e-9);
        assert!(s.symmetry_defect() < 1e-12);
    }
}
