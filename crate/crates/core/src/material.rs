//! Material parameters, degradation profiles and the split elastic energy density
//!
//! ```text
//! W(z, E) = h(z) (μ |E_d|² + κ |E_v⁺|²) + κ |E_v⁻|²
//! ```

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::tensor::SymTensor2;

/// A scalar function of the phase field together with its first two derivatives.
///
/// `d2` may return any element of the generalized (Clarke) second derivative where
/// the profile is only C^{1,1}.
pub trait ScalarProfile: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn value(&self, z: f64) -> f64;
    fn d1(&self, z: f64) -> f64;
    fn d2(&self, z: f64) -> f64;
}

/// `h(z) = z² + η`.
#[derive(Debug, Clone, Copy)]
pub struct ShiftedQuadratic {
    pub eta: f64,
}

impl ScalarProfile for ShiftedQuadratic {
    fn name(&self) -> &str {
        "quadratic"
    }
    fn value(&self, z: f64) -> f64 {
        z * z + self.eta
    }
    fn d1(&self, z: f64) -> f64 {
        2.0 * z
    }
    fn d2(&self, _z: f64) -> f64 {
        2.0
    }
}

/// `h(z) = c`. Decouples the displacement and phase-field problems.
#[derive(Debug, Clone, Copy)]
pub struct ConstantProfile {
    pub value: f64,
}

impl ScalarProfile for ConstantProfile {
    fn name(&self) -> &str {
        "constant"
    }
    fn value(&self, _z: f64) -> f64 {
        self.value
    }
    fn d1(&self, _z: f64) -> f64 {
        0.0
    }
    fn d2(&self, _z: f64) -> f64 {
        0.0
    }
}

/// `f(z) = (z − 1)²`, strongly convex with modulus 2.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticWell;

impl ScalarProfile for QuadraticWell {
    fn name(&self) -> &str {
        "quadratic"
    }
    fn value(&self, z: f64) -> f64 {
        (z - 1.0) * (z - 1.0)
    }
    fn d1(&self, z: f64) -> f64 {
        2.0 * (z - 1.0)
    }
    fn d2(&self, _z: f64) -> f64 {
        2.0
    }
}

pub const DEFAULT_ETA: f64 = 1e-2;

/// Elastic moduli and degradation pair. `kappa = λ + μ`.
#[derive(Debug, Clone)]
pub struct MaterialModel {
    pub mu: f64,
    pub kappa: f64,
    pub h: Arc<dyn ScalarProfile>,
    pub f: Arc<dyn ScalarProfile>,
    /// Strong-convexity modulus of `f`.
    pub f_modulus: f64,
}

impl MaterialModel {
    pub fn new(
        mu: f64,
        kappa: f64,
        h: Arc<dyn ScalarProfile>,
        f: Arc<dyn ScalarProfile>,
        f_modulus: f64,
    ) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite()) || !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "moduli must be positive and finite (mu = {mu}, kappa = {kappa})"
            )));
        }
        if !(f_modulus > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "strong-convexity modulus of f must be positive, got {f_modulus}"
            )));
        }
        let m = MaterialModel { mu, kappa, h, f, f_modulus };
        m.validate_profiles()?;
        Ok(m)
    }

    /// `h(z) = z² + η`, `f(z) = (z − 1)²`.
    pub fn standard(mu: f64, kappa: f64, eta: f64) -> Result<Self> {
        Self::new(
            mu,
            kappa,
            Arc::new(ShiftedQuadratic { eta }),
            Arc::new(QuadraticWell),
            2.0,
        )
    }

    /// Constant degradation `h ≡ c` with the quadratic well for `f`.
    pub fn decoupled(mu: f64, kappa: f64, c: f64) -> Result<Self> {
        Self::new(
            mu,
            kappa,
            Arc::new(ConstantProfile { value: c }),
            Arc::new(QuadraticWell),
            2.0,
        )
    }

    /// Sampling check of the structural hypotheses on `h` and `f` over `[-1, 2]`.
    pub fn validate_profiles(&self) -> Result<()> {
        const N: usize = 301;
        let grid: Vec<f64> = (0..N).map(|i| -1.0 + 3.0 * i as f64 / (N - 1) as f64).collect();
        let h0 = self.h.value(0.0);
        if !(h0 > 0.0) {
            return Err(Error::InvalidArgument(format!("h(0) must be positive, got {h0}")));
        }
        let f1 = self.f.value(1.0);
        if f1 < 0.0 {
            return Err(Error::InvalidArgument(format!("f(1) must be nonnegative, got {f1}")));
        }
        for w in grid.windows(3) {
            let (a, b, c) = (w[0], w[1], w[2]);
            let hb = self.h.value(b);
            if hb < h0 - 1e-12 * (1.0 + h0.abs()) {
                return Err(Error::InvalidArgument(format!("h({b}) < h(0)")));
            }
            let second = self.h.value(a) - 2.0 * hb + self.h.value(c);
            if second < -1e-10 * (1.0 + hb.abs()) {
                return Err(Error::InvalidArgument(format!("h is not convex near {b}")));
            }
            if self.f.value(b) < f1 - 1e-12 * (1.0 + f1.abs()) {
                return Err(Error::InvalidArgument(format!("f({b}) < f(1)")));
            }
            let mono = (self.f.d1(c) - self.f.d1(a)) * (c - a);
            if mono < self.f_modulus * (c - a) * (c - a) * (1.0 - 1e-9) {
                return Err(Error::InvalidArgument(format!(
                    "f is not strongly convex with modulus {} near {b}",
                    self.f_modulus
                )));
            }
        }
        Ok(())
    }

    /// The degradable part `μ|E_d|² + κ|E_v⁺|²` and the undegraded part `κ|E_v⁻|²`.
    pub fn split_energies(&self, e: &SymTensor2) -> (f64, f64) {
        let degradable = self.mu * e.deviatoric().norm_sq() + self.kappa * e.vol_tensile().norm_sq();
        let compressive = self.kappa * e.vol_compressive().norm_sq();
        (degradable, compressive)
    }

    pub fn energy_density(&self, z: f64, e: &SymTensor2) -> f64 {
        let (q, c) = self.split_energies(e);
        self.h.value(z) * q + c
    }

    /// `∂_E W` with the degradation factor supplied directly.
    pub fn stress_with_factor(&self, hval: f64, e: &SymTensor2) -> SymTensor2 {
        let dev = e.deviatoric();
        let plus = e.vol_tensile();
        let minus = e.vol_compressive();
        (2.0 * hval) * (self.mu * dev + self.kappa * plus) - (2.0 * self.kappa) * minus
    }

    pub fn stress(&self, z: f64, e: &SymTensor2) -> SymTensor2 {
        self.stress_with_factor(self.h.value(z), e)
    }

    /// `∂_z W = h′(z) (μ|E_d|² + κ|E_v⁺|²)`.
    pub fn dw_dz(&self, z: f64, e: &SymTensor2) -> f64 {
        self.h.d1(z) * self.split_energies(e).0
    }

    /// Generalized second derivative of `W` in `E` at `e`, applied to `de`.
    ///
    /// At `tr e = 0` the tensile branch is used.
    pub fn tangent_with_factor(&self, hval: f64, e: &SymTensor2, de: &SymTensor2) -> SymTensor2 {
        let dev = de.deviatoric();
        let vol = de.volumetric();
        let vol_coef = if e.trace() >= 0.0 {
            2.0 * hval * self.kappa
        } else {
            2.0 * self.kappa
        };
        (2.0 * hval * self.mu) * dev + vol_coef * vol
    }
}

pub fn energy_density_w(z: f64, e: &SymTensor2, m: &MaterialModel) -> f64 {
    m.energy_density(z, e)
}

pub fn stress_dw(z: f64, e: &SymTensor2, m: &MaterialModel) -> SymTensor2 {
    m.stress(z, e)
}

pub fn dw_dz(z: f64, e: &SymTensor2, m: &MaterialModel) -> f64 {
    m.dw_dz(z, e)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_material() -> MaterialModel {
        MaterialModel::standard(1.0, 1.0, 0.1).unwrap()
    }

    #[test]
    fn energy_density_examples() {
        let m = example_material();
        let i = SymTensor2::IDENTITY;
        assert!((m.energy_density(1.0, &i) - 2.2).abs() < 1e-14);
        assert!((m.energy_density(0.0, &-i) - 2.0).abs() < 1e-14);
        assert!((m.energy_density(0.7, &-i) - 2.0).abs() < 1e-14);
        assert!((m.energy_density(0.0, &SymTensor2::diag(1.0, -1.0)) - 0.2).abs() < 1e-14);
    }

    #[test]
    fn stress_examples() {
        let m = example_material();
        let i = SymTensor2::IDENTITY;
        for z in [0.0, 0.3, 1.0] {
            let s = m.stress(z, &-i);
            assert!((s - (-2.0) * i).norm() < 1e-14);
        }
        assert!((m.stress(1.0, &i) - 2.2 * i).norm() < 1e-14);
    }

    #[test]
    fn dw_dz_examples() {
        let m = example_material();
        assert_eq!(m.dw_dz(0.4, &-SymTensor2::IDENTITY), 0.0);
        assert!((m.dw_dz(1.0, &SymTensor2::IDENTITY) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn stress_continuous_across_zero_trace() {
        let m = example_material();
        let e = SymTensor2::new(0.3, -0.3, 0.2);
        let eps = 1e-9;
        let a = m.stress(0.5, &(e + SymTensor2::diag(eps, eps)));
        let b = m.stress(0.5, &(e - SymTensor2::diag(eps, eps)));
        assert!((a - b).norm() < 1e-8);
    }

    #[test]
    fn rejects_bad_profiles() {
        assert!(MaterialModel::standard(-1.0, 1.0, 0.1).is_err());
        assert!(MaterialModel::standard(1.0, 1.0, 0.0).is_err());
        assert!(MaterialModel::new(
            1.0,
            1.0,
            Arc::new(ShiftedQuadratic { eta: 0.1 }),
            Arc::new(QuadraticWell),
            3.0
        )
        .is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn tensor() -> impl Strategy<Value = SymTensor2> {
            (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b, c)| SymTensor2::new(a, b, c))
        }

        fn material() -> impl Strategy<Value = MaterialModel> {
            (0.1..10.0f64, 0.1..10.0f64, 1e-3..0.5f64)
                .prop_map(|(mu, kappa, eta)| MaterialModel::standard(mu, kappa, eta).unwrap())
        }

        fn constants(m: &MaterialModel) -> (f64, f64) {
            let (h0, h1) = (m.h.value(0.0), m.h.value(1.0));
            let c = (2.0 * m.mu * h0).min(m.kappa * h0.min(1.0));
            let big = 2.0 * m.mu.max(m.kappa) * h1.max(1.0);
            (c, big)
        }

        proptest! {
            #[test]
            fn stress_is_strongly_monotone(m in material(), z in 0.0..=1.0f64, a in tensor(), b in tensor()) {
                let (c, _) = constants(&m);
                let d = a - b;
                let pairing = (m.stress(z, &a) - m.stress(z, &b)).ddot(&d);
                prop_assert!(pairing >= c * d.norm_sq() * (1.0 - 1e-12) - 1e-14);
            }

            #[test]
            fn stress_is_lipschitz_with_linear_growth(m in material(), z in 0.0..=1.0f64, a in tensor(), b in tensor()) {
                let (_, big) = constants(&m);
                let d = a - b;
                prop_assert!((m.stress(z, &a) - m.stress(z, &b)).norm() <= big * d.norm() * (1.0 + 1e-12) + 1e-14);
                prop_assert!(m.stress(z, &a).norm() <= big * a.norm() * (1.0 + 1e-12) + 1e-14);
            }

            #[test]
            fn density_is_two_homogeneous(m in material(), z in 0.0..=1.0f64, e in tensor()) {
                let w = m.energy_density(z, &e);
                prop_assert!(w >= 0.0);
                prop_assert!((m.stress(z, &e).ddot(&e) - 2.0 * w).abs() <= 1e-12 * (1.0 + w));
            }

            #[test]
            fn density_is_nondecreasing_in_z(m in material(), z in 0.0..=1.0f64, e in tensor()) {
                prop_assert!(m.dw_dz(z, &e) >= 0.0);
            }
        }
    }
}
