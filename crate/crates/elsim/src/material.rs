//! Leslie coefficient bookkeeping: derived constants, admissibility checks
//! and the dissipation quadratic form.

use thiserror::Error;

use crate::real::{r, Real};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaterialError {
    #[error("Parodi relation violated: alpha2+alpha3 = {lhs}, alpha6-alpha5 = {rhs}")]
    ParodiViolation { lhs: f64, rhs: f64 },
    #[error("gamma1 = alpha3-alpha2 = {0} must be positive (mu1 = 1/gamma1)")]
    NonPositiveGamma1(f64),
    #[error("dissipation condition violated: {relation} = {value} < 0")]
    DissipationViolation { relation: &'static str, value: f64 },
    #[error("{field} = {value} outside its admissible range {range}")]
    RangeError {
        field: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("material inputs contain a non-finite value")]
    NonFinite,
    #[error("strain input is not trace-free: tr D = {0}")]
    TraceNotZero(f64),
    #[error("director input is not unit length: |d| - 1 = {0}")]
    NotUnitVector(f64),
}

/// Leslie viscosities with every derived constant populated:
/// `gamma1 = a3-a2`, `gamma2 = a5-a6`, `mu1 = 1/gamma1`, `mu2 = gamma2/gamma1`,
/// `beta1 = a1 + gamma2^2/gamma1`, `beta2 = a4`,
/// `beta3 = a5 + a6 - gamma2^2/gamma1`.
///
/// The magnetic field is stored as the magnitude `H`; its direction is fixed
/// to `(1, 0)^T`. Immutable after construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams<R: Real> {
    pub alpha: [R; 6],
    pub gamma: R,
    pub reynolds: R,
    pub h_field: R,
    pub gamma1: R,
    pub gamma2: R,
    pub mu1: R,
    pub mu2: R,
    pub beta1: R,
    pub beta2: R,
    pub beta3: R,
}

impl<R: Real> MaterialParams<R> {
    /// `H^2`, the strength that gets compared against the principal
    /// eigenvalue in the Freedericksz threshold.
    #[inline]
    pub fn h_squared(&self) -> R {
        self.h_field * self.h_field
    }

    /// Kinematic viscosity coefficient `gamma / Re`.
    #[inline]
    pub fn viscosity(&self) -> R {
        self.gamma / self.reynolds
    }

    /// Director-coupling prefactor `(1 - gamma) / Re`.
    #[inline]
    pub fn coupling(&self) -> R {
        (R::one() - self.gamma) / self.reynolds
    }
}

/// One checked relation, as printed by the `validate` subcommand.
#[derive(Debug, Clone)]
pub struct RelationCheck {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

/// Populates derived constants without validating them (the `validate`
/// subcommand prints them even for inadmissible inputs).
pub fn derive_params_unchecked<R: Real>(
    alpha: [R; 6],
    gamma: R,
    reynolds: R,
    h_field: R,
) -> MaterialParams<R> {
    let gamma1 = alpha[2] - alpha[1];
    let gamma2 = alpha[4] - alpha[5];
    let mu1 = R::one() / gamma1;
    let mu2 = gamma2 / gamma1;
    let beta1 = alpha[0] + gamma2 * gamma2 / gamma1;
    let beta2 = alpha[3];
    let beta3 = alpha[4] + alpha[5] - gamma2 * gamma2 / gamma1;
    MaterialParams {
        alpha,
        gamma,
        reynolds,
        h_field,
        gamma1,
        gamma2,
        mu1,
        mu2,
        beta1,
        beta2,
        beta3,
    }
}

/// Admissibility checks, each naming the violated relation.
pub fn check_relations<R: Real>(p: &MaterialParams<R>) -> Vec<RelationCheck> {
    let tol = R::algebraic_tol();
    let parodi_lhs = p.alpha[1] + p.alpha[2];
    let parodi_rhs = p.alpha[5] - p.alpha[4];
    let d1 = p.beta1 + p.beta2 + p.beta2 + p.beta3;
    let d2 = p.beta2 + p.beta2 + p.beta3;
    vec![
        RelationCheck {
            name: "parodi",
            pass: (parodi_lhs - parodi_rhs).abs() < tol,
            detail: format!("alpha2+alpha3 = {parodi_lhs}, alpha6-alpha5 = {parodi_rhs}"),
        },
        RelationCheck {
            name: "gamma1_positive",
            pass: p.gamma1 > R::zero(),
            detail: format!("gamma1 = {}", p.gamma1),
        },
        RelationCheck {
            name: "dissipation_b1_2b2_b3",
            pass: d1 >= -tol,
            detail: format!("beta1+2*beta2+beta3 = {d1}"),
        },
        RelationCheck {
            name: "dissipation_2b2_b3",
            pass: d2 >= -tol,
            detail: format!("2*beta2+beta3 = {d2}"),
        },
        RelationCheck {
            name: "gamma_range",
            pass: p.gamma > R::zero() && p.gamma < R::one(),
            detail: format!("gamma = {}", p.gamma),
        },
        RelationCheck {
            name: "reynolds_range",
            pass: p.reynolds > R::zero(),
            detail: format!("Re = {}", p.reynolds),
        },
        RelationCheck {
            name: "h_range",
            pass: p.h_field >= R::zero(),
            detail: format!("H = {}", p.h_field),
        },
    ]
}

/// Builds [`MaterialParams`] and enforces every invariant: the Parodi
/// relation, `gamma1 > 0`, the two dissipation inequalities, and the
/// parameter ranges `gamma in (0,1)`, `Re > 0`, `H >= 0`.
pub fn derive_params<R: Real>(
    alpha: [R; 6],
    gamma: R,
    reynolds: R,
    h_field: R,
) -> Result<MaterialParams<R>, MaterialError> {
    let finite = alpha.iter().all(|a| a.is_finite())
        && gamma.is_finite()
        && reynolds.is_finite()
        && h_field.is_finite();
    if !finite {
        return Err(MaterialError::NonFinite);
    }
    let tol = R::algebraic_tol();
    let parodi_lhs = alpha[1] + alpha[2];
    let parodi_rhs = alpha[5] - alpha[4];
    if (parodi_lhs - parodi_rhs).abs() >= tol {
        return Err(MaterialError::ParodiViolation {
            lhs: parodi_lhs.to_f64().unwrap(),
            rhs: parodi_rhs.to_f64().unwrap(),
        });
    }
    let p = derive_params_unchecked(alpha, gamma, reynolds, h_field);
    if p.gamma1 <= R::zero() {
        return Err(MaterialError::NonPositiveGamma1(
            p.gamma1.to_f64().unwrap(),
        ));
    }
    let d1 = p.beta1 + p.beta2 + p.beta2 + p.beta3;
    if d1 < -tol {
        return Err(MaterialError::DissipationViolation {
            relation: "beta1+2*beta2+beta3",
            value: d1.to_f64().unwrap(),
        });
    }
    let d2 = p.beta2 + p.beta2 + p.beta3;
    if d2 < -tol {
        return Err(MaterialError::DissipationViolation {
            relation: "2*beta2+beta3",
            value: d2.to_f64().unwrap(),
        });
    }
    if !(p.gamma > R::zero() && p.gamma < R::one()) {
        return Err(MaterialError::RangeError {
            field: "gamma",
            value: p.gamma.to_f64().unwrap(),
            range: "(0, 1)",
        });
    }
    if p.reynolds <= R::zero() {
        return Err(MaterialError::RangeError {
            field: "reynolds",
            value: p.reynolds.to_f64().unwrap(),
            range: "(0, inf)",
        });
    }
    if p.h_field < R::zero() {
        return Err(MaterialError::RangeError {
            field: "h_field",
            value: p.h_field.to_f64().unwrap(),
            range: "[0, inf)",
        });
    }
    Ok(p)
}

/// Dissipation quadratic form of Lemma-2.5 type:
/// `beta1 (d x d : D)^2 + beta2 D:D + beta3 |D d|^2` for a symmetric
/// trace-free `D` and a unit director `d`. Nonnegative whenever the
/// admissibility inequalities hold.
pub fn dissipation_quadratic<R: Real>(
    d_tensor: [[R; 2]; 2],
    director: [R; 2],
    p: &MaterialParams<R>,
) -> Result<R, MaterialError> {
    let tol = R::algebraic_tol();
    let trace = d_tensor[0][0] + d_tensor[1][1];
    if trace.abs() >= tol {
        return Err(MaterialError::TraceNotZero(trace.to_f64().unwrap()));
    }
    let norm = (director[0] * director[0] + director[1] * director[1]).sqrt();
    if (norm - R::one()).abs() >= tol {
        return Err(MaterialError::NotUnitVector(
            (norm - R::one()).to_f64().unwrap(),
        ));
    }

    let (d1, d2) = (director[0], director[1]);
    // d x d : D
    let dd_colon = d_tensor[0][0] * d1 * d1
        + d_tensor[0][1] * d1 * d2
        + d_tensor[1][0] * d2 * d1
        + d_tensor[1][1] * d2 * d2;
    // D : D
    let dcolon = d_tensor[0][0] * d_tensor[0][0]
        + d_tensor[0][1] * d_tensor[0][1]
        + d_tensor[1][0] * d_tensor[1][0]
        + d_tensor[1][1] * d_tensor[1][1];
    // |D d|^2
    let dd1 = d_tensor[0][0] * d1 + d_tensor[0][1] * d2;
    let dd2 = d_tensor[1][0] * d1 + d_tensor[1][1] * d2;
    let ddsq = dd1 * dd1 + dd2 * dd2;

    Ok(p.beta1 * dd_colon * dd_colon + p.beta2 * dcolon + p.beta3 * ddsq)
}

/// Coefficient preset used throughout validation:
/// `alpha = (0, -1, 0, 1, 1, 0)`, which derives to
/// `gamma1 = gamma2 = mu1 = mu2 = 1`, `beta = (1, 1, 0)`.
pub fn preset_a<R: Real>(gamma: R, reynolds: R, h_field: R) -> MaterialParams<R> {
    derive_params(
        [
            R::zero(),
            -R::one(),
            R::zero(),
            R::one(),
            R::one(),
            R::zero(),
        ],
        gamma,
        reynolds,
        h_field,
    )
    .expect("preset coefficients are admissible")
}

/// Preset with `gamma2 = 0`: rotational coupling off at the stress level
/// (`mu2 = 0`, `beta1 = beta3 = 0`), `alpha = (0, -1/2, 1/2, 1, 0, 0)`.
pub fn preset_decoupled<R: Real>(gamma: R, reynolds: R, h_field: R) -> MaterialParams<R> {
    derive_params(
        [
            R::zero(),
            -r::<R>(0.5),
            r::<R>(0.5),
            R::one(),
            R::zero(),
            R::zero(),
        ],
        gamma,
        reynolds,
        h_field,
    )
    .expect("preset coefficients are admissible")
}
