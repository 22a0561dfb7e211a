//! Director field in angle form: quasi-periodic storage as a periodic
//! remainder plus an integer winding pair, angle/director conversion, winding
//! extraction, the molecular field and the pointwise rotation kernels.
//!
//! The full angle is `theta(x) = theta_tilde(x) + pi*(a1*x1 + a2*x2)`, so the
//! boundary jumps `theta(x+e_i) = theta(x) + a_i*pi` hold by construction and
//! the evolved unknown stays exactly periodic. Derivatives of `d` are never
//! taken by differentiating `theta` across the seam: periodic quantities are
//! differentiated directly, and `d`-derivatives go through a modulated
//! transform of `exp(i*theta)` that is exact for every integer winding.

use thiserror::Error;

use crate::material::MaterialParams;
use crate::real::{r, C, Real};
use crate::spectral::{apply_multiplier, fft2, Axis, Grid, ScalarField, VectorField2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DirectorError {
    #[error("director field is not resolved: neighbor jump exceeds pi/2 at ({i}, {j})")]
    UnresolvedField { i: usize, j: usize },
    #[error("director winding differs between grid lines; field is not resolved")]
    InconsistentWinding,
    #[error("director is not unit length: max | |d|-1 | = {0}")]
    NonUnitDirector(f64),
    #[error("winding numbers differ: ({0}, {1}) vs ({2}, {3})")]
    WindingMismatch(i32, i32, i32, i32),
}

/// Orientation angle stored as periodic remainder plus winding integers.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleField<R: Real> {
    remainder: ScalarField<R>,
    winding: (i32, i32),
}

impl<R: Real> AngleField<R> {
    pub fn new(remainder: ScalarField<R>, winding: (i32, i32)) -> Self {
        AngleField { remainder, winding }
    }

    pub fn constant(grid: Grid, value: R) -> Self {
        AngleField {
            remainder: ScalarField::constant(grid, value),
            winding: (0, 0),
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.remainder.grid()
    }

    #[inline]
    pub fn remainder(&self) -> &ScalarField<R> {
        &self.remainder
    }

    #[inline]
    pub fn winding(&self) -> (i32, i32) {
        self.winding
    }

    /// Background phase `pi*(a1*x1 + a2*x2)` sampled at grid points.
    pub fn background(&self) -> ScalarField<R> {
        let (a1, a2) = self.winding;
        ScalarField::from_fn(self.grid(), |x1, x2| {
            R::PI() * (r::<R>(a1 as f64) * x1 + r::<R>(a2 as f64) * x2)
        })
    }

    /// Full angle `theta = theta_tilde + background` at grid points.
    pub fn full_angle(&self) -> ScalarField<R> {
        self.remainder.add(&self.background())
    }

    /// `grad theta = grad theta_tilde + pi*(a1, a2)`; exactly periodic.
    pub fn gradient(&self) -> VectorField2<R> {
        let (a1, a2) = self.winding;
        VectorField2::new(
            self.remainder
                .derivative(Axis::X1, 1)
                .add_scalar(R::PI() * r(a1 as f64)),
            self.remainder
                .derivative(Axis::X2, 1)
                .add_scalar(R::PI() * r(a2 as f64)),
        )
    }

    /// `lap theta = lap theta_tilde` (the linear background is harmonic).
    pub fn laplacian(&self) -> ScalarField<R> {
        self.remainder.laplacian()
    }

    /// Pointwise `(sin theta, cos theta)`; periodic only for even winding,
    /// use [`AngleField::sin2_cos2`] or the modulated transforms otherwise.
    pub fn sin_cos(&self) -> (ScalarField<R>, ScalarField<R>) {
        let full = self.full_angle();
        (full.map(|t| t.sin()), full.map(|t| t.cos()))
    }

    /// Pointwise `(sin 2theta, cos 2theta)`; periodic for any winding.
    pub fn sin2_cos2(&self) -> (ScalarField<R>, ScalarField<R>) {
        let full = self.full_angle();
        (
            full.map(|t| (t + t).sin()),
            full.map(|t| (t + t).cos()),
        )
    }

    pub fn add_constant(&self, c: R) -> Self {
        AngleField {
            remainder: self.remainder.add_scalar(c),
            winding: self.winding,
        }
    }

    /// `d = (sin theta, cos theta)^T`; unit norm is structural.
    pub fn to_director(&self) -> DirectorField<R> {
        let (s, c) = self.sin_cos();
        DirectorField { d1: s, d2: c }
    }
}

/// Unit director samples `d = (sin theta, cos theta)^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectorField<R: Real> {
    d1: ScalarField<R>,
    d2: ScalarField<R>,
}

impl<R: Real> DirectorField<R> {
    /// Wraps raw components, checking `d1^2 + d2^2 = 1` at every point.
    pub fn from_components(
        d1: ScalarField<R>,
        d2: ScalarField<R>,
    ) -> Result<Self, DirectorError> {
        let max_dev = d1
            .values()
            .iter()
            .zip(d2.values().iter())
            .fold(R::zero(), |acc, (&a, &b)| {
                acc.max(((a * a + b * b).sqrt() - R::one()).abs())
            });
        if max_dev > r(1e-8) {
            return Err(DirectorError::NonUnitDirector(max_dev.to_f64().unwrap()));
        }
        Ok(DirectorField { d1, d2 })
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.d1.grid()
    }

    #[inline]
    pub fn d1(&self) -> &ScalarField<R> {
        &self.d1
    }

    #[inline]
    pub fn d2(&self) -> &ScalarField<R> {
        &self.d2
    }

    /// Continuous lift of the angle with remainder/winding split.
    ///
    /// Works on the doubled angle `u = 2*theta` through `(d2 + i*d1)^2`,
    /// which is exactly periodic for any integer winding; the lift is
    /// unwrapped along grid lines, halved, sign-matched against `d`, and
    /// shifted to the anchor (the value of `theta` at the origin, modulo
    /// `2*pi`).
    pub fn to_angle(&self, anchor: R) -> Result<AngleField<R>, DirectorError> {
        let grid = self.grid();
        let n = grid.n();
        self.check_resolved()?;
        let (a1, a2) = self.winding_numbers()?;

        let two_pi = R::PI() + R::PI();
        let mut u = vec![R::zero(); n * n];
        u[0] = self.arg_doubled(0, 0);
        for j in 1..n {
            let prev = u[j - 1];
            u[j] = prev + wrap_angle(self.arg_doubled(0, j) - prev);
        }
        for i in 1..n {
            for j in 0..n {
                let prev = u[(i - 1) * n + j];
                u[i * n + j] = prev + wrap_angle(self.arg_doubled(i, j) - prev);
            }
        }

        // halve, then fix the global pi-branch so the director matches
        let mut theta: Vec<R> = u.iter().map(|&v| v / (R::one() + R::one())).collect();
        let d1_rec = theta[0].sin();
        let d2_rec = theta[0].cos();
        let agree = d1_rec * self.d1.value(0, 0) + d2_rec * self.d2.value(0, 0);
        if agree < R::zero() {
            for t in theta.iter_mut() {
                *t = *t + R::PI();
            }
        }

        // shift the whole lift by 2k*pi so the origin lands nearest the anchor
        let k = ((anchor - theta[0]) / two_pi).round();
        if k != R::zero() {
            let shift = k * two_pi;
            for t in theta.iter_mut() {
                *t = *t + shift;
            }
        }

        // split off the linear background
        let h = grid.h::<R>();
        for i in 0..n {
            for j in 0..n {
                let bg = R::PI()
                    * (r::<R>(a1 as f64) * h * r(i as f64) + r::<R>(a2 as f64) * h * r(j as f64));
                theta[i * n + j] = theta[i * n + j] - bg;
            }
        }
        let remainder = ScalarField::from_values(grid, theta)
            .expect("lift produced non-finite angles");
        Ok(AngleField {
            remainder,
            winding: (a1, a2),
        })
    }

    /// Integer winding of the lifted angle along each axis loop, divided by
    /// `pi`. Exact integers for resolved fields.
    pub fn winding_numbers(&self) -> Result<(i32, i32), DirectorError> {
        self.check_resolved()?;
        let n = self.grid().n();
        let two_pi = R::PI() + R::PI();

        // degree of the doubled angle around each axis loop, one loop per
        // grid line; unanimity across lines is part of "resolved"
        let mut a1: Option<i32> = None;
        for j in 0..n {
            let mut total = R::zero();
            for i in 0..n {
                let next = (i + 1) % n;
                total = total + wrap_angle(self.arg_doubled(next, j) - self.arg_doubled(i, j));
            }
            let w = (total / two_pi).round().to_f64().unwrap() as i32;
            match a1 {
                None => a1 = Some(w),
                Some(prev) if prev != w => return Err(DirectorError::InconsistentWinding),
                _ => {}
            }
        }
        let mut a2: Option<i32> = None;
        for i in 0..n {
            let mut total = R::zero();
            for j in 0..n {
                let next = (j + 1) % n;
                total = total + wrap_angle(self.arg_doubled(i, next) - self.arg_doubled(i, j));
            }
            let w = (total / two_pi).round().to_f64().unwrap() as i32;
            match a2 {
                None => a2 = Some(w),
                Some(prev) if prev != w => return Err(DirectorError::InconsistentWinding),
                _ => {}
            }
        }
        Ok((a1.unwrap(), a2.unwrap()))
    }

    /// Principal argument of `(d2 + i*d1)^2 = exp(2i*theta)`, the doubled
    /// angle modulo `2*pi`; periodic for any integer winding.
    #[inline]
    fn arg_doubled(&self, i: usize, j: usize) -> R {
        let w = C::new(self.d2.value(i, j), self.d1.value(i, j));
        let w2 = w * w;
        w2.im.atan2(w2.re)
    }

    /// Rejects fields whose director turns by more than `pi/2` between
    /// interior neighbors (the seam pairs legitimately flip sign for odd
    /// winding and are excluded).
    fn check_resolved(&self) -> Result<(), DirectorError> {
        let n = self.grid().n();
        let dot = |ia: usize, ja: usize, ib: usize, jb: usize| -> R {
            self.d1.value(ia, ja) * self.d1.value(ib, jb)
                + self.d2.value(ia, ja) * self.d2.value(ib, jb)
        };
        for i in 0..n {
            for j in 0..n {
                if i + 1 < n && dot(i, j, i + 1, j) < R::zero() {
                    return Err(DirectorError::UnresolvedField { i, j });
                }
                if j + 1 < n && dot(i, j, i, j + 1) < R::zero() {
                    return Err(DirectorError::UnresolvedField { i, j });
                }
            }
        }
        Ok(())
    }
}

/// Principal value in `(-pi, pi]`.
fn wrap_angle<R: Real>(t: R) -> R {
    let two_pi = R::PI() + R::PI();
    let mut x = t;
    while x > R::PI() {
        x = x - two_pi;
    }
    while x <= -R::PI() {
        x = x + two_pi;
    }
    x
}

/// Difference of two angle fields after aligning by the nearest multiple of
/// `pi` in the mean (solutions are identified modulo `k*pi`). Requires equal
/// winding; the result is the periodic field `theta - theta_ref - k*pi`.
pub fn aligned_difference<R: Real>(
    theta: &AngleField<R>,
    reference: &AngleField<R>,
) -> Result<ScalarField<R>, DirectorError> {
    if theta.winding() != reference.winding() {
        let (a1, a2) = theta.winding();
        let (b1, b2) = reference.winding();
        return Err(DirectorError::WindingMismatch(a1, a2, b1, b2));
    }
    let diff = theta.remainder().sub(reference.remainder());
    let k = (diff.mean() / R::PI()).round();
    Ok(diff.add_scalar(-k * R::PI()))
}

/// Derivatives of the director computed spectrally through the complex
/// exponential: `E = exp(i theta) = exp(i theta_tilde) * exp(i pi a.x)`.
/// The periodic factor is transformed with the FFT and the linear background
/// enters as an exact shift `k -> k + pi a` of the multipliers, so the
/// result is exact for band-limited `exp(i theta_tilde)` at any winding.
/// For zero winding this is plain spectral differentiation of
/// `sin theta, cos theta`.
fn modulated_transform<R: Real>(
    theta: &AngleField<R>,
    multiplier: impl Fn(R, R) -> C<R>,
) -> (ScalarField<R>, ScalarField<R>) {
    let grid = theta.grid();
    let n = grid.n();
    let (a1, a2) = theta.winding();
    let two_pi = R::PI() + R::PI();
    let pa1 = R::PI() * r::<R>(a1 as f64);
    let pa2 = R::PI() * r::<R>(a2 as f64);

    let rem = theta.remainder();
    let mut buf: Vec<C<R>> = rem
        .values()
        .iter()
        .map(|&t| C::new(t.cos(), t.sin()))
        .collect();
    fft2(&mut buf, n, false);
    apply_multiplier(&mut buf, n, |m1, m2| {
        let k1 = two_pi * r::<R>(m1 as f64) + pa1;
        let k2 = two_pi * r::<R>(m2 as f64) + pa2;
        multiplier(k1, k2)
    });
    fft2(&mut buf, n, true);

    // undo the modulation pointwise: multiply by exp(i pi a . x)
    let h = grid.h::<R>();
    let mut d1 = Vec::with_capacity(n * n);
    let mut d2 = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let phase = pa1 * h * r::<R>(i as f64) + pa2 * h * r::<R>(j as f64);
            let m = C::new(phase.cos(), phase.sin());
            let e = buf[i * n + j] * m;
            d1.push(e.im);
            d2.push(e.re);
        }
    }
    (
        ScalarField::from_values(grid, d1).expect("modulated transform produced non-finite data"),
        ScalarField::from_values(grid, d2).expect("modulated transform produced non-finite data"),
    )
}

/// `lap d` as a two-component field, via the modulated transform.
pub fn director_laplacian<R: Real>(theta: &AngleField<R>) -> VectorField2<R> {
    let (l1, l2) = modulated_transform(theta, |k1, k2| {
        C::new(-(k1 * k1 + k2 * k2), R::zero())
    });
    VectorField2::new(l1, l2)
}

/// `(d_axis d1, d_axis d2)` via the modulated transform.
pub fn director_derivative<R: Real>(theta: &AngleField<R>, axis: Axis) -> VectorField2<R> {
    let (g1, g2) = modulated_transform(theta, |k1, k2| match axis {
        Axis::X1 => C::new(R::zero(), k1),
        Axis::X2 => C::new(R::zero(), k2),
    });
    VectorField2::new(g1, g2)
}

/// Molecular field `h = lap d + (H.d) H` with `H = H*(1,0)^T`, so the field
/// term is `H^2 sin(theta) e1`.
pub fn molecular_field<R: Real>(
    theta: &AngleField<R>,
    p: &MaterialParams<R>,
) -> VectorField2<R> {
    let lap = director_laplacian(theta);
    let hsq = p.h_squared();
    let (sin_t, _) = theta.sin_cos();
    VectorField2::new(lap.u1().add(&sin_t.scaled(hsq)), lap.u2().clone())
}

/// Pointwise rotation kernels `(Omega : dperp x d, D : dperp x d)` for the
/// angle transport equation, contracted from the full velocity-gradient
/// tensors (no trace-free shortcut).
pub fn rotation_kernels<R: Real>(
    theta: &AngleField<R>,
    v: &VectorField2<R>,
) -> (ScalarField<R>, ScalarField<R>) {
    assert_eq!(theta.grid(), v.grid(), "angle and velocity grids differ");
    let d1v1 = v.u1().derivative(Axis::X1, 1);
    let d2v1 = v.u1().derivative(Axis::X2, 1);
    let d1v2 = v.u2().derivative(Axis::X1, 1);
    let d2v2 = v.u2().derivative(Axis::X2, 1);

    let (sin_t, cos_t) = theta.sin_cos();
    let grid = theta.grid();
    let n = grid.n();
    let mut omega_k = Vec::with_capacity(n * n);
    let mut strain_k = Vec::with_capacity(n * n);
    let half = r::<R>(0.5);
    for idx in 0..n * n {
        let s = sin_t.values()[idx];
        let c = cos_t.values()[idx];
        // d = (s, c), dperp = (c, -s); (dperp x d)_{ij} = dperp_i d_j
        let t11 = c * s;
        let t12 = c * c;
        let t21 = -s * s;
        let t22 = -s * c;
        let o12 = half * (d2v1.values()[idx] - d1v2.values()[idx]);
        // Omega_{11} = Omega_{22} = 0, Omega_{21} = -Omega_{12}
        omega_k.push(o12 * (t12 - t21));
        let s11 = d1v1.values()[idx];
        let s22 = d2v2.values()[idx];
        let s12 = half * (d1v2.values()[idx] + d2v1.values()[idx]);
        strain_k.push(s11 * t11 + s12 * (t12 + t21) + s22 * t22);
    }
    (
        ScalarField::from_values(grid, omega_k).expect("kernel produced non-finite data"),
        ScalarField::from_values(grid, strain_k).expect("kernel produced non-finite data"),
    )
}
