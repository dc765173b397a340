//! Veronda-Westmann and compressible Mooney-Rivlin hyperelastic models.
//!
//! Both energies are written in the isochoric invariants Ī₁ = J^{-2/3} I₁,
//! Ī₂ = J^{-4/3} I₂ plus the volumetric penalty (K/2)(ln J)². Stress and
//! tangent are assembled from the scalar derivatives of the isochoric part,
//! so the two families share one tensor code path.
//!
//! The uniaxial closed forms (`*_uniaxial_pk1`) are the incompressible
//! reductions with F = diag(λ, λ^{-1/2}, λ^{-1/2}). With J = 1 the reduced
//! energy is w(λ) = W̃(λ² + 2/λ, 2λ + 1/λ²) and the lateral traction-free
//! condition eliminates the pressure, so P(λ) = dw/dλ:
//!
//! ```text
//! VW: dw/dλ = A e^{B(I₁−3)} (2λ − 2/λ²) − (A/2)(2 − 2/λ³)
//! MR: dw/dλ = (μ/2)[υ(2λ − 2/λ²) + (1−υ)(2 − 2/λ³)]
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{cofactor3, det3, right_cauchy_green, Tensor2, Tensor4};

/// Veronda-Westmann parameters: initial shear modulus `a`, exponent `b`,
/// bulk modulus `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VwParams {
    pub a: f64,
    pub b: f64,
    pub k: f64,
}

/// Compressible Mooney-Rivlin parameters. `upsilon = 1` is neo-Hookean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrParams {
    pub mu: f64,
    pub upsilon: f64,
    pub k: f64,
}

impl VwParams {
    pub fn new(a: f64, b: f64, k: f64) -> Result<Self> {
        if !(a > 0.0 && b >= 0.0 && k > 0.0) || !(a.is_finite() && b.is_finite() && k.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "Veronda-Westmann parameters need A > 0, B >= 0, K > 0 (got A={a}, B={b}, K={k})"
            )));
        }
        Ok(Self { a, b, k })
    }
}

impl MrParams {
    pub fn new(mu: f64, upsilon: f64, k: f64) -> Result<Self> {
        if !(mu > 0.0 && (0.0..=1.0).contains(&upsilon) && k > 0.0) || !(mu.is_finite() && k.is_finite()) {
            return Err(Error::InvalidProblem(format!(
                "Mooney-Rivlin parameters need mu > 0, 0 <= upsilon <= 1, K > 0 (got mu={mu}, upsilon={upsilon}, K={k})"
            )));
        }
        Ok(Self { mu, upsilon, k })
    }

    pub fn neo_hookean(mu: f64, k: f64) -> Result<Self> {
        Self::new(mu, 1.0, k)
    }
}

/// Stress measure selector for the neo-Hookean uniaxial family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StressMeasure {
    Cauchy,
    FirstPiola,
    SecondPiola,
}

impl StressMeasure {
    pub fn order(self) -> i32 {
        match self {
            StressMeasure::Cauchy => 0,
            StressMeasure::FirstPiola => 1,
            StressMeasure::SecondPiola => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Material {
    VerondaWestmann(VwParams),
    MooneyRivlin(MrParams),
}

/// First and second derivatives of the isochoric energy with respect to
/// (Ī₁, Ī₂).
#[derive(Debug, Clone, Copy)]
struct IsoDerivatives {
    w1: f64,
    w2: f64,
    w11: f64,
    w12: f64,
    w22: f64,
}

fn check_positive_stretch(lambda: f64) -> Result<()> {
    if lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::NegativeStretch { stretch: lambda, element: None })
    }
}

/// (e^{bx} − 1)/b with the b → 0 limit x.
fn expm1_over(b: f64, x: f64) -> f64 {
    if b == 0.0 {
        x
    } else {
        (b * x).exp_m1() / b
    }
}

impl Material {
    pub fn bulk_modulus(&self) -> f64 {
        match self {
            Material::VerondaWestmann(p) => p.k,
            Material::MooneyRivlin(p) => p.k,
        }
    }

    /// Small-strain shear modulus: A for VW, μ for MR.
    pub fn shear_modulus(&self) -> f64 {
        match self {
            Material::VerondaWestmann(p) => p.a,
            Material::MooneyRivlin(p) => p.mu,
        }
    }

    fn iso_energy(&self, s1: f64, s2: f64) -> f64 {
        match *self {
            Material::VerondaWestmann(VwParams { a, b, .. }) => {
                a * expm1_over(b, s1 - 3.0) - 0.5 * a * (s2 - 3.0)
            }
            Material::MooneyRivlin(MrParams { mu, upsilon, .. }) => {
                0.5 * mu * (upsilon * (s1 - 3.0) + (1.0 - upsilon) * (s2 - 3.0))
            }
        }
    }

    fn iso_derivatives(&self, s1: f64) -> IsoDerivatives {
        match *self {
            Material::VerondaWestmann(VwParams { a, b, .. }) => {
                let e = (b * (s1 - 3.0)).exp();
                IsoDerivatives { w1: a * e, w2: -0.5 * a, w11: a * b * e, w12: 0.0, w22: 0.0 }
            }
            Material::MooneyRivlin(MrParams { mu, upsilon, .. }) => IsoDerivatives {
                w1: 0.5 * mu * upsilon,
                w2: 0.5 * mu * (1.0 - upsilon),
                w11: 0.0,
                w12: 0.0,
                w22: 0.0,
            },
        }
    }

    /// Strain energy density W(F).
    pub fn energy(&self, f: &Tensor2) -> Result<f64> {
        let j = det3(f);
        if !(j > 0.0) {
            return Err(Error::NonPositiveJacobian { det: j, element: None });
        }
        let c = right_cauchy_green(f);
        let i1 = c.trace();
        let i2 = 0.5 * (i1 * i1 - (c * c).trace());
        let j23 = j.powf(-2.0 / 3.0);
        let lnj = j.ln();
        Ok(self.iso_energy(j23 * i1, j23 * j23 * i2) + 0.5 * self.bulk_modulus() * lnj * lnj)
    }

    /// First Piola-Kirchhoff stress P = ∂W/∂F.
    pub fn pk1_stress(&self, f: &Tensor2) -> Result<Tensor2> {
        Ok(self.evaluate(f, false)?.0)
    }

    /// Consistent tangent ∂P/∂F.
    pub fn material_tangent(&self, f: &Tensor2) -> Result<Tensor4> {
        Ok(self.evaluate(f, true)?.1)
    }

    /// Stress and tangent in one pass.
    pub fn stress_and_tangent(&self, f: &Tensor2) -> Result<(Tensor2, Tensor4)> {
        self.evaluate(f, true)
    }

    fn evaluate(&self, f: &Tensor2, with_tangent: bool) -> Result<(Tensor2, Tensor4)> {
        let j = det3(f);
        if !(j > 0.0) {
            return Err(Error::NonPositiveJacobian { det: j, element: None });
        }
        let finv_t = cofactor3(f) / j;
        let c = right_cauchy_green(f);
        let b = f * f.transpose();
        let i1 = c.trace();
        let i2 = 0.5 * (i1 * i1 - (c * c).trace());
        let j23 = j.powf(-2.0 / 3.0);
        let j43 = j23 * j23;
        let lnj = j.ln();
        let kb = self.bulk_modulus();
        let d = self.iso_derivatives(j23 * i1);

        let fc = f * c;
        // ∂I₂/∂F
        let di2 = 2.0 * (i1 * f - fc);
        let g1 = j23 * (2.0 * f - (2.0 / 3.0) * i1 * finv_t);
        let g2 = j43 * (di2 - (4.0 / 3.0) * i2 * finv_t);
        let g3 = finv_t;

        let p = d.w1 * g1 + d.w2 * g2 + kb * lnj * g3;
        if !with_tangent {
            return Ok((p, Tensor4::zeros()));
        }

        let finv = finv_t.transpose();
        let mut a = Tensor4::zeros();
        for i in 0..3 {
            for jj in 0..3 {
                let r = 3 * i + jj;
                for k in 0..3 {
                    for l in 0..3 {
                        let s = 3 * k + l;
                        let dik = if i == k { 1.0 } else { 0.0 };
                        let djl = if jj == l { 1.0 } else { 0.0 };
                        let h3 = -finv[(jj, k)] * finv[(l, i)];
                        let h1 = -(2.0 / 3.0) * g1[(i, jj)] * finv_t[(k, l)]
                            + j23
                                * (2.0 * dik * djl
                                    - (4.0 / 3.0) * f[(k, l)] * finv_t[(i, jj)]
                                    - (2.0 / 3.0) * i1 * h3);
                        let ddi2 = 2.0
                            * (2.0 * f[(k, l)] * f[(i, jj)] + i1 * dik * djl
                                - dik * c[(l, jj)]
                                - f[(i, l)] * f[(k, jj)]
                                - b[(i, k)] * djl);
                        let h2 = -(4.0 / 3.0) * g2[(i, jj)] * finv_t[(k, l)]
                            + j43
                                * (ddi2
                                    - (4.0 / 3.0) * di2[(k, l)] * finv_t[(i, jj)]
                                    - (4.0 / 3.0) * i2 * h3);
                        a[(r, s)] = d.w11 * g1[(i, jj)] * g1[(k, l)]
                            + d.w12 * (g1[(i, jj)] * g2[(k, l)] + g2[(i, jj)] * g1[(k, l)])
                            + d.w22 * g2[(i, jj)] * g2[(k, l)]
                            + kb * g3[(i, jj)] * g3[(k, l)]
                            + d.w1 * h1
                            + d.w2 * h2
                            + kb * lnj * h3;
                    }
                }
            }
        }
        Ok((p, a))
    }

    /// Incompressible uniaxial first PK stress along the stretch direction.
    pub fn uniaxial_pk1(&self, lambda: f64) -> Result<f64> {
        match self {
            Material::VerondaWestmann(p) => vw_uniaxial_pk1(lambda, p),
            Material::MooneyRivlin(p) => mr_uniaxial_pk1(lambda, p),
        }
    }

    /// dP/dλ of [`Material::uniaxial_pk1`].
    pub fn uniaxial_pk1_slope(&self, lambda: f64) -> Result<f64> {
        check_positive_stretch(lambda)?;
        Ok(match *self {
            Material::VerondaWestmann(VwParams { a, b, .. }) => {
                let q = lambda - lambda.powi(-2);
                let dq = 1.0 + 2.0 * lambda.powi(-3);
                let e = (b * (lambda * lambda + 2.0 / lambda - 3.0)).exp();
                2.0 * a * e * (dq + 2.0 * b * q * q) - 3.0 * a * lambda.powi(-4)
            }
            Material::MooneyRivlin(MrParams { mu, upsilon, .. }) => {
                mu * (upsilon * (1.0 + 2.0 * lambda.powi(-3))
                    + (1.0 - upsilon) * 3.0 * lambda.powi(-4))
            }
        })
    }

    /// d²P/dλ² of [`Material::uniaxial_pk1`].
    pub fn uniaxial_pk1_curvature(&self, lambda: f64) -> Result<f64> {
        check_positive_stretch(lambda)?;
        Ok(match *self {
            Material::VerondaWestmann(VwParams { a, b, .. }) => {
                let q = lambda - lambda.powi(-2);
                let dq = 1.0 + 2.0 * lambda.powi(-3);
                let ddq = -6.0 * lambda.powi(-4);
                let e = (b * (lambda * lambda + 2.0 / lambda - 3.0)).exp();
                2.0 * a * e * (2.0 * b * q * (dq + 2.0 * b * q * q) + ddq + 4.0 * b * q * dq)
                    + 12.0 * a * lambda.powi(-5)
            }
            Material::MooneyRivlin(MrParams { mu, upsilon, .. }) => {
                mu * (-6.0 * upsilon * lambda.powi(-4) - 12.0 * (1.0 - upsilon) * lambda.powi(-5))
            }
        })
    }
}

pub fn vw_energy(f: &Tensor2, p: &VwParams) -> Result<f64> {
    Material::VerondaWestmann(*p).energy(f)
}

pub fn mr_energy(f: &Tensor2, p: &MrParams) -> Result<f64> {
    Material::MooneyRivlin(*p).energy(f)
}

/// P(λ) = 2A(λ − 1/λ²) e^{B(λ² + 2/λ − 3)} − A(1 − 1/λ³).
pub fn vw_uniaxial_pk1(lambda: f64, p: &VwParams) -> Result<f64> {
    check_positive_stretch(lambda)?;
    let e = (p.b * (lambda * lambda + 2.0 / lambda - 3.0)).exp();
    Ok(2.0 * p.a * (lambda - lambda.powi(-2)) * e - p.a * (1.0 - lambda.powi(-3)))
}

/// P(λ) = μ[υ(λ − 1/λ²) + (1 − υ)(1 − 1/λ³)].
pub fn mr_uniaxial_pk1(lambda: f64, p: &MrParams) -> Result<f64> {
    check_positive_stretch(lambda)?;
    Ok(p.mu
        * (p.upsilon * (lambda - lambda.powi(-2)) + (1.0 - p.upsilon) * (1.0 - lambda.powi(-3))))
}

/// σ⁽ⁿ⁾(λ) = λ^{-n}(λ² − 1/λ) for a unit-modulus neo-Hookean solid in
/// incompressible uniaxial loading.
pub fn neo_hookean_sigma_n(lambda: f64, measure: StressMeasure) -> Result<f64> {
    check_positive_stretch(lambda)?;
    let n = measure.order();
    Ok(lambda.powi(-n) * (lambda * lambda - 1.0 / lambda))
}

/// First and second λ-derivatives of [`neo_hookean_sigma_n`].
pub fn neo_hookean_sigma_n_derivatives(lambda: f64, measure: StressMeasure) -> Result<(f64, f64)> {
    check_positive_stretch(lambda)?;
    let n = measure.order() as f64;
    let d1 = (2.0 - n) * lambda.powf(1.0 - n) + (1.0 + n) * lambda.powf(-2.0 - n);
    let d2 = (2.0 - n) * (1.0 - n) * lambda.powf(-n) - (1.0 + n) * (2.0 + n) * lambda.powf(-3.0 - n);
    Ok((d1, d2))
}
