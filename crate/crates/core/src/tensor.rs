//! Symmetric 2×2 tensors and the volumetric/deviatoric and tensile/compressive splits.

use std::ops::{Add, Mul, Neg, Sub};

/// Symmetric 2×2 tensor stored as `(xx, yy, xy)`.
///
/// Inner products and norms count the off-diagonal entry twice, so every
/// Frobenius identity on the full matrix holds on this representation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 { xx: 0.0, yy: 0.0, xy: 0.0 };
    pub const IDENTITY: SymTensor2 = SymTensor2 { xx: 1.0, yy: 1.0, xy: 0.0 };

    pub const fn new(xx: f64, yy: f64, xy: f64) -> Self {
        SymTensor2 { xx, yy, xy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        SymTensor2 { xx: a, yy: b, xy: 0.0 }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Frobenius inner product `A : B`.
    pub fn ddot(&self, other: &SymTensor2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    pub fn norm_sq(&self) -> f64 {
        self.ddot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `½ (tr E) I`.
    pub fn volumetric(&self) -> SymTensor2 {
        let half_tr = 0.5 * self.trace();
        SymTensor2::diag(half_tr, half_tr)
    }

    /// `E − E_v`.
    pub fn deviatoric(&self) -> SymTensor2 {
        let half_tr = 0.5 * self.trace();
        SymTensor2::new(self.xx - half_tr, self.yy - half_tr, self.xy)
    }

    pub fn vol_dev_split(&self) -> (SymTensor2, SymTensor2) {
        (self.volumetric(), self.deviatoric())
    }

    /// `½ (tr E)₊ I`.
    pub fn vol_tensile(&self) -> SymTensor2 {
        let a = 0.5 * self.trace().max(0.0);
        SymTensor2::diag(a, a)
    }

    /// `½ (tr E)₋ I` with `(a)₋ = max(−a, 0)`, so the result is a nonnegative multiple of I.
    pub fn vol_compressive(&self) -> SymTensor2 {
        let a = 0.5 * (-self.trace()).max(0.0);
        SymTensor2::diag(a, a)
    }

    pub fn tensile_compressive(&self) -> (SymTensor2, SymTensor2) {
        (self.vol_tensile(), self.vol_compressive())
    }

    pub fn scale(&self, s: f64) -> SymTensor2 {
        SymTensor2::new(s * self.xx, s * self.yy, s * self.xy)
    }
}

impl Add for SymTensor2 {
    type Output = SymTensor2;
    fn add(self, rhs: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx + rhs.xx, self.yy + rhs.yy, self.xy + rhs.xy)
    }
}

impl Sub for SymTensor2 {
    type Output = SymTensor2;
    fn sub(self, rhs: SymTensor2) -> SymTensor2 {
        SymTensor2::new(self.xx - rhs.xx, self.yy - rhs.yy, self.xy - rhs.xy)
    }
}

impl Neg for SymTensor2 {
    type Output = SymTensor2;
    fn neg(self) -> SymTensor2 {
        self.scale(-1.0)
    }
}

impl Mul<SymTensor2> for f64 {
    type Output = SymTensor2;
    fn mul(self, rhs: SymTensor2) -> SymTensor2 {
        rhs.scale(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: SymTensor2, b: SymTensor2) -> bool {
        (a - b).norm() <= 1e-14
    }

    #[test]
    fn split_examples() {
        let (v, d) = SymTensor2::IDENTITY.vol_dev_split();
        assert!(close(v, SymTensor2::IDENTITY) && close(d, SymTensor2::ZERO));

        let e = SymTensor2::diag(1.0, -1.0);
        let (v, d) = e.vol_dev_split();
        assert!(close(v, SymTensor2::ZERO) && close(d, e));

        let e = SymTensor2::new(2.0, 0.0, 1.0);
        let (v, d) = e.vol_dev_split();
        assert!(close(v, SymTensor2::IDENTITY));
        assert!(close(d, SymTensor2::new(1.0, -1.0, 1.0)));
    }

    #[test]
    fn tensile_compressive_examples() {
        let (p, m) = SymTensor2::IDENTITY.tensile_compressive();
        assert!(close(p, SymTensor2::IDENTITY) && close(m, SymTensor2::ZERO));
        let (p, m) = (-SymTensor2::IDENTITY).tensile_compressive();
        assert!(close(p, SymTensor2::ZERO) && close(m, SymTensor2::IDENTITY));
        let (p, m) = SymTensor2::diag(1.0, -1.0).tensile_compressive();
        assert!(close(p, SymTensor2::ZERO) && close(m, SymTensor2::ZERO));
    }

    #[test]
    fn off_diagonal_counts_twice() {
        let e = SymTensor2::new(0.0, 0.0, 1.0);
        assert_eq!(e.norm_sq(), 2.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn tensor() -> impl Strategy<Value = SymTensor2> {
            (-10.0..10.0f64, -10.0..10.0f64, -10.0..10.0f64).prop_map(|(a, b, c)| SymTensor2::new(a, b, c))
        }

        proptest! {
            #[test]
            fn volumetric_and_deviatoric_parts_are_orthogonal(e in tensor()) {
                let (v, d) = e.vol_dev_split();
                prop_assert!(v.ddot(&d).abs() <= 1e-12);
                prop_assert!((e.norm_sq() - v.norm_sq() - d.norm_sq()).abs() <= 1e-12);
                prop_assert!((v + d - e).norm() <= 1e-12);
                prop_assert!(d.trace().abs() <= 1e-12);
            }

            #[test]
            fn tensile_and_compressive_parts_split_the_volumetric_part(e in tensor()) {
                let (p, m) = e.tensile_compressive();
                prop_assert!(p.ddot(&m).abs() <= 1e-12);
                prop_assert!((p - m - e.volumetric()).norm() <= 1e-12);
                prop_assert!((e.volumetric().norm_sq() - p.norm_sq() - m.norm_sq()).abs() <= 1e-12);
                prop_assert!(p.trace() >= 0.0 && m.trace() >= 0.0);
            }

            #[test]
            fn ddot_is_symmetric_and_bilinear(a in tensor(), b in tensor(), s in -3.0..3.0f64) {
                prop_assert!((a.ddot(&b) - b.ddot(&a)).abs() <= 1e-12);
                prop_assert!(((a.scale(s) + b).ddot(&b) - (s * a.ddot(&b) + b.norm_sq())).abs() <= 1e-10);
            }
        }
    }
}
