//! Fourier pseudospectral infrastructure on the unit torus `Q = [0,1]^2`:
//! transforms, derivatives, inverse Laplacian, Leray projection, 2/3-rule
//! dealiasing and Sobolev norms.
//!
//! All fields are stored in physical space; transforms happen per operation.
//! Fields are immutable once constructed and every operation is a pure
//! function, so values can be shared freely across threads.

mod fft;

pub(crate) use fft::{apply_multiplier, fft2, mode};

use thiserror::Error;

use crate::real::{r, C, Real};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpectralError {
    #[error("grid size {0} is odd; the transform layer requires an even number of points")]
    OddGridSize(usize),
    #[error("grid size {0} is too small (need at least 4 points per axis)")]
    GridTooSmall(usize),
    #[error("unsupported Sobolev order {0} (supported: 0, 1, 2)")]
    UnsupportedOrder(usize),
    #[error("field values contain a non-finite entry")]
    NonFinite,
    #[error("value buffer has length {got}, expected {expected}")]
    BadLength { got: usize, expected: usize },
}

/// Uniform `n`-by-`n` periodic discretization of the unit square.
///
/// Wavenumbers are `k_j = 2*pi*m_j` with integer modes `m_j` in
/// `[-n/2, n/2)`; the zero mode appears exactly once per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    n: usize,
}

impl Grid {
    pub fn new(n: usize) -> Result<Self, SpectralError> {
        if n % 2 != 0 {
            return Err(SpectralError::OddGridSize(n));
        }
        if n < 4 {
            return Err(SpectralError::GridTooSmall(n));
        }
        Ok(Grid { n })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// Grid spacing `h = 1/n`.
    #[inline]
    pub fn h<R: Real>(&self) -> R {
        R::one() / r(self.n as f64)
    }

    /// Coordinate of sample `(i, j)`.
    #[inline]
    pub fn point<R: Real>(&self, i: usize, j: usize) -> (R, R) {
        let h = self.h::<R>();
        (h * r(i as f64), h * r(j as f64))
    }

    #[inline]
    pub(crate) fn len(&self) -> usize {
        self.n * self.n
    }

    /// Largest retained mode under the 2/3 rule.
    #[inline]
    pub fn dealias_cutoff(&self) -> i64 {
        (self.n / 3) as i64
    }
}

/// Axis selector for directional derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

/// Real samples on a [`Grid`], row-major with value `(i*h, j*h)` at `(i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<R: Real> {
    grid: Grid,
    values: Vec<R>,
}

#[inline]
fn assert_same_grid(a: Grid, b: Grid) {
    assert_eq!(
        a, b,
        "fields live on mismatched grids ({} vs {} points per axis)",
        a.n, b.n
    );
}

impl<R: Real> ScalarField<R> {
    pub fn zeros(grid: Grid) -> Self {
        ScalarField {
            grid,
            values: vec![R::zero(); grid.len()],
        }
    }

    pub fn constant(grid: Grid, value: R) -> Self {
        ScalarField {
            grid,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x1, x2)` at every grid point.
    pub fn from_fn(grid: Grid, f: impl Fn(R, R) -> R) -> Self {
        let n = grid.n;
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..n {
            for j in 0..n {
                let (x1, x2) = grid.point::<R>(i, j);
                values.push(f(x1, x2));
            }
        }
        ScalarField { grid, values }
    }

    pub fn from_values(grid: Grid, values: Vec<R>) -> Result<Self, SpectralError> {
        if values.len() != grid.len() {
            return Err(SpectralError::BadLength {
                got: values.len(),
                expected: grid.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite);
        }
        Ok(ScalarField { grid, values })
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[R] {
        &self.values
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> R {
        self.values[i * self.grid.n + j]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Self {
        ScalarField {
            grid: self.grid,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(R, R) -> R) -> Self {
        assert_same_grid(self.grid, other.grid);
        ScalarField {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(other.values.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a - b)
    }

    /// Pointwise product (no dealiasing; see [`ScalarField::dealias`]).
    pub fn mul(&self, other: &Self) -> Self {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn scaled(&self, s: R) -> Self {
        self.map(|v| v * s)
    }

    pub fn add_scalar(&self, s: R) -> Self {
        self.map(|v| v + s)
    }

    pub fn mean(&self) -> R {
        let sum = self.values.iter().fold(R::zero(), |acc, &v| acc + v);
        sum / r(self.grid.len() as f64)
    }

    pub fn max_abs(&self) -> R {
        self.values
            .iter()
            .fold(R::zero(), |acc, &v| acc.max(v.abs()))
    }

    /// Quadrature of `f^2`: `h^2 * sum f_ij^2` (spectrally accurate for
    /// periodic data).
    pub fn l2_norm_sq(&self) -> R {
        let h = self.grid.h::<R>();
        let sum = self.values.iter().fold(R::zero(), |acc, &v| acc + v * v);
        h * h * sum
    }

    pub fn l2_norm(&self) -> R {
        self.l2_norm_sq().sqrt()
    }

    /// Quadrature of `f^4` (for the `L^4` norm to the fourth power).
    pub fn l4_norm_pow4(&self) -> R {
        let h = self.grid.h::<R>();
        let sum = self
            .values
            .iter()
            .fold(R::zero(), |acc, &v| acc + v * v * v * v);
        h * h * sum
    }

    /// L2 inner product by quadrature.
    pub fn inner(&self, other: &Self) -> R {
        assert_same_grid(self.grid, other.grid);
        let h = self.grid.h::<R>();
        let sum = self
            .values
            .iter()
            .zip(other.values.iter())
            .fold(R::zero(), |acc, (&a, &b)| acc + a * b);
        h * h * sum
    }

    pub(crate) fn to_spectral(&self) -> Vec<C<R>> {
        let mut buf: Vec<C<R>> = self
            .values
            .iter()
            .map(|&v| C::new(v, R::zero()))
            .collect();
        fft2(&mut buf, self.grid.n, false);
        buf
    }

    pub(crate) fn from_spectral(grid: Grid, mut buf: Vec<C<R>>) -> Self {
        fft2(&mut buf, grid.n, true);
        ScalarField {
            grid,
            values: buf.into_iter().map(|c| c.re).collect(),
        }
    }

    /// Spectral derivative of the given order (1 or 2) along one axis.
    ///
    /// Exact for band-limited inputs. The Nyquist mode is zeroed for odd
    /// orders so the result stays real and symmetric.
    pub fn derivative(&self, axis: Axis, order: u32) -> Self {
        assert!(
            (1..=2).contains(&order),
            "derivative order {order} unsupported (1 or 2)"
        );
        let n = self.grid.n;
        let nyquist = -((n / 2) as i64);
        let two_pi = R::PI() + R::PI();
        let mut buf = self.to_spectral();
        apply_multiplier(&mut buf, n, |m1, m2| {
            let m = match axis {
                Axis::X1 => m1,
                Axis::X2 => m2,
            };
            let k = two_pi * r::<R>(m as f64);
            match order {
                1 => {
                    if m == nyquist {
                        C::new(R::zero(), R::zero())
                    } else {
                        C::new(R::zero(), k)
                    }
                }
                _ => C::new(-k * k, R::zero()),
            }
        });
        Self::from_spectral(self.grid, buf)
    }

    /// `d11 f + d22 f` via the diagonal multiplier `-|k|^2`.
    pub fn laplacian(&self) -> Self {
        let n = self.grid.n;
        let two_pi = R::PI() + R::PI();
        let mut buf = self.to_spectral();
        apply_multiplier(&mut buf, n, |m1, m2| {
            let k1 = two_pi * r::<R>(m1 as f64);
            let k2 = two_pi * r::<R>(m2 as f64);
            C::new(-(k1 * k1 + k2 * k2), R::zero())
        });
        Self::from_spectral(self.grid, buf)
    }

    /// Zero-mean solution `g` of `lap g = f - mean(f)`.
    pub fn inverse_laplacian_zero_mean(&self) -> Self {
        let n = self.grid.n;
        let two_pi = R::PI() + R::PI();
        let mut buf = self.to_spectral();
        apply_multiplier(&mut buf, n, |m1, m2| {
            if m1 == 0 && m2 == 0 {
                C::new(R::zero(), R::zero())
            } else {
                let k1 = two_pi * r::<R>(m1 as f64);
                let k2 = two_pi * r::<R>(m2 as f64);
                C::new(-R::one() / (k1 * k1 + k2 * k2), R::zero())
            }
        });
        Self::from_spectral(self.grid, buf)
    }

    /// 2/3-rule dealiasing: zeroes every mode with `|m_j| > n/3` on either
    /// axis. Applied to pointwise products before they are differentiated.
    pub fn dealias(&self) -> Self {
        let n = self.grid.n;
        let cut = self.grid.dealias_cutoff();
        let mut buf = self.to_spectral();
        apply_multiplier(&mut buf, n, |m1, m2| {
            if m1.abs() > cut || m2.abs() > cut {
                C::new(R::zero(), R::zero())
            } else {
                C::new(R::one(), R::zero())
            }
        });
        Self::from_spectral(self.grid, buf)
    }

    /// Sobolev norm of order 0, 1 or 2: `sqrt(sum_{|a|<=m} ||D^a f||^2)`.
    pub fn sobolev_norm(&self, order: usize) -> Result<R, SpectralError> {
        Ok(self.sobolev_norm_sq(order)?.sqrt())
    }

    pub(crate) fn sobolev_norm_sq(&self, order: usize) -> Result<R, SpectralError> {
        if order > 2 {
            return Err(SpectralError::UnsupportedOrder(order));
        }
        let mut total = self.l2_norm_sq();
        if order >= 1 {
            total = total
                + self.derivative(Axis::X1, 1).l2_norm_sq()
                + self.derivative(Axis::X2, 1).l2_norm_sq();
        }
        if order >= 2 {
            let d12 = self.derivative(Axis::X1, 1).derivative(Axis::X2, 1);
            total = total
                + self.derivative(Axis::X1, 2).l2_norm_sq()
                + d12.l2_norm_sq()
                + self.derivative(Axis::X2, 2).l2_norm_sq();
        }
        Ok(total)
    }

    /// Squared spectral magnitude sum with the `1/n^4` normalization that
    /// makes it equal the quadrature `h^2 * sum f^2` (Parseval).
    pub fn spectral_energy(&self) -> R {
        let n = self.grid.n;
        let buf = self.to_spectral();
        let sum = buf
            .iter()
            .fold(R::zero(), |acc, c| acc + c.norm_sqr());
        sum / r((n * n * n * n) as f64)
    }
}

/// Two scalar components on a shared grid; houses the velocity field.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField2<R: Real> {
    u1: ScalarField<R>,
    u2: ScalarField<R>,
}

impl<R: Real> VectorField2<R> {
    pub fn new(u1: ScalarField<R>, u2: ScalarField<R>) -> Self {
        assert_same_grid(u1.grid, u2.grid);
        VectorField2 { u1, u2 }
    }

    pub fn zeros(grid: Grid) -> Self {
        VectorField2 {
            u1: ScalarField::zeros(grid),
            u2: ScalarField::zeros(grid),
        }
    }

    pub fn from_fns(grid: Grid, f1: impl Fn(R, R) -> R, f2: impl Fn(R, R) -> R) -> Self {
        VectorField2 {
            u1: ScalarField::from_fn(grid, f1),
            u2: ScalarField::from_fn(grid, f2),
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.u1.grid
    }

    #[inline]
    pub fn u1(&self) -> &ScalarField<R> {
        &self.u1
    }

    #[inline]
    pub fn u2(&self) -> &ScalarField<R> {
        &self.u2
    }

    pub fn component(&self, axis: Axis) -> &ScalarField<R> {
        match axis {
            Axis::X1 => &self.u1,
            Axis::X2 => &self.u2,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.u1.is_finite() && self.u2.is_finite()
    }

    pub fn add(&self, other: &Self) -> Self {
        VectorField2 {
            u1: self.u1.add(&other.u1),
            u2: self.u2.add(&other.u2),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        VectorField2 {
            u1: self.u1.sub(&other.u1),
            u2: self.u2.sub(&other.u2),
        }
    }

    pub fn scaled(&self, s: R) -> Self {
        VectorField2 {
            u1: self.u1.scaled(s),
            u2: self.u2.scaled(s),
        }
    }

    pub fn max_abs(&self) -> R {
        self.u1.max_abs().max(self.u2.max_abs())
    }

    pub fn l2_norm_sq(&self) -> R {
        self.u1.l2_norm_sq() + self.u2.l2_norm_sq()
    }

    pub fn l2_norm(&self) -> R {
        self.l2_norm_sq().sqrt()
    }

    pub fn sobolev_norm(&self, order: usize) -> Result<R, SpectralError> {
        Ok((self.u1.sobolev_norm_sq(order)? + self.u2.sobolev_norm_sq(order)?).sqrt())
    }

    /// `d1 u1 + d2 u2`, spectrally.
    pub fn divergence(&self) -> ScalarField<R> {
        self.u1
            .derivative(Axis::X1, 1)
            .add(&self.u2.derivative(Axis::X2, 1))
    }

    /// Orthogonal projection onto divergence-free fields (pressure
    /// elimination): `u_hat -> u_hat - k (k . u_hat) / |k|^2`, zero mode
    /// untouched. Idempotent; annihilates gradients.
    pub fn leray_project(&self) -> Self {
        let n = self.grid().n;
        let two_pi = R::PI() + R::PI();
        let mut b1 = self.u1.to_spectral();
        let mut b2 = self.u2.to_spectral();
        for i in 0..n {
            let m1 = mode(i, n);
            let k1 = two_pi * r::<R>(m1 as f64);
            for j in 0..n {
                let m2 = mode(j, n);
                if m1 == 0 && m2 == 0 {
                    continue;
                }
                let k2 = two_pi * r::<R>(m2 as f64);
                let ksq = k1 * k1 + k2 * k2;
                let idx = i * n + j;
                let dot = b1[idx] * k1 + b2[idx] * k2;
                b1[idx] = b1[idx] - dot * (k1 / ksq);
                b2[idx] = b2[idx] - dot * (k2 / ksq);
            }
        }
        VectorField2 {
            u1: ScalarField::from_spectral(self.grid(), b1),
            u2: ScalarField::from_spectral(self.grid(), b2),
        }
    }
}

/// Gradient of a scalar field, `(d1 f, d2 f)`.
pub fn gradient<R: Real>(f: &ScalarField<R>) -> VectorField2<R> {
    VectorField2::new(f.derivative(Axis::X1, 1), f.derivative(Axis::X2, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{fd_laplacian, fd_partial, rand_band_limited, TWO_PI};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn grid(n: usize) -> Grid {
        Grid::new(n).unwrap()
    }

    #[test]
    fn grid_rejects_odd_and_tiny_sizes() {
        assert_eq!(Grid::new(17), Err(SpectralError::OddGridSize(17)));
        assert_eq!(Grid::new(2), Err(SpectralError::GridTooSmall(2)));
        assert!(Grid::new(16).is_ok());
    }

    #[test]
    fn derivative_of_single_mode_is_exact() {
        let g = grid(32);
        let f = ScalarField::from_fn(g, |x1: f64, _| (TWO_PI * x1).sin());
        let df = f.derivative(Axis::X1, 1);
        let exact = ScalarField::from_fn(g, |x1: f64, _| TWO_PI * (TWO_PI * x1).cos());
        let err = df.sub(&exact).max_abs();
        assert!(err < 1e-12 * TWO_PI, "max error {err}");
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = grid(16);
        let f = ScalarField::constant(g, 3.25);
        for axis in [Axis::X1, Axis::X2] {
            for order in [1, 2] {
                assert!(f.derivative(axis, order).max_abs() < 1e-13);
            }
        }
    }

    #[test]
    fn derivative_matches_fine_grid_finite_differences() {
        let g = grid(64);
        let func = |x1: f64, x2: f64| (TWO_PI * x1).sin().exp() * (TWO_PI * x2).cos();
        let f = ScalarField::from_fn(g, func);
        let df = f.derivative(Axis::X1, 1);
        let oracle = ScalarField::from_fn(g, |x1: f64, x2: f64| fd_partial(func, x1, x2, Axis::X1));
        let rel = df.sub(&oracle).l2_norm() / oracle.l2_norm();
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn laplacian_eigenfunction_and_constant() {
        let g = grid(32);
        let f = ScalarField::from_fn(g, |x1: f64, _| (TWO_PI * x1).sin());
        let lap = f.laplacian();
        let exact = f.scaled(-TWO_PI * TWO_PI);
        assert!(lap.sub(&exact).max_abs() < 1e-10);
        assert!(ScalarField::constant(g, 1.0).laplacian().max_abs() < 1e-12);
    }

    #[test]
    fn laplacian_matches_stencil_oracle() {
        let g = grid(64);
        // band-limited field with a known closure, so the oracle can sample it
        let func = |x1: f64, x2: f64| {
            (TWO_PI * x1).cos() * (2.0 * TWO_PI * x2).sin() + 0.5 * (3.0 * TWO_PI * x1).sin()
        };
        let fc = ScalarField::from_fn(g, func);
        let lap = fc.laplacian();
        let oracle = ScalarField::from_fn(g, |x1: f64, x2: f64| fd_laplacian(func, x1, x2));
        let rel = lap.sub(&oracle).l2_norm() / oracle.l2_norm();
        assert!(rel < 1e-6, "relative error {rel}");
    }

    #[test]
    fn inverse_laplacian_inverts_single_mode() {
        let g = grid(32);
        let f = ScalarField::from_fn(g, |x1: f64, _| -TWO_PI * TWO_PI * (TWO_PI * x1).sin());
        let sol = f.inverse_laplacian_zero_mean();
        let exact = ScalarField::from_fn(g, |x1: f64, _| (TWO_PI * x1).sin());
        assert!(sol.sub(&exact).max_abs() < 1e-12);
        assert!(ScalarField::constant(g, 2.0)
            .inverse_laplacian_zero_mean()
            .max_abs()
            < 1e-13);
    }

    #[test]
    fn inverse_laplacian_round_trip() {
        let g = grid(32);
        let f = rand_band_limited(g, 9, 8, 1.0);
        let back = f.inverse_laplacian_zero_mean().laplacian();
        let demeaned = f.add_scalar(-f.mean());
        assert!(back.sub(&demeaned).max_abs() < 1e-11);
    }

    #[test]
    fn leray_annihilates_gradients() {
        let g = grid(32);
        let phi = ScalarField::from_fn(g, |x1: f64, x2: f64| (TWO_PI * x1).sin() * (TWO_PI * x2).cos());
        let u = gradient(&phi);
        let proj = u.leray_project();
        assert!(proj.max_abs() < 1e-11);
    }

    #[test]
    fn leray_fixes_solenoidal_fields() {
        let g = grid(32);
        let psi = ScalarField::from_fn(g, |x1: f64, x2: f64| (TWO_PI * x1).sin() * (TWO_PI * x2).sin());
        let u = VectorField2::new(
            psi.derivative(Axis::X2, 1),
            psi.derivative(Axis::X1, 1).scaled(-1.0),
        );
        let proj = u.leray_project();
        assert!(proj.sub(&u).max_abs() < 1e-12);
    }

    #[test]
    fn leray_output_orthogonal_to_test_gradients() {
        let g = grid(32);
        let u = VectorField2::new(
            rand_band_limited(g, 3, 6, 1.0),
            rand_band_limited(g, 4, 6, 1.0),
        );
        let pu = u.leray_project();
        for (a, b) in [(1i64, 0i64), (0, 1), (1, 1), (2, -1), (-3, 2)] {
            let phi = ScalarField::from_fn(g, |x1: f64, x2: f64| {
                (TWO_PI * (a as f64 * x1 + b as f64 * x2)).sin()
            });
            let gphi = gradient(&phi);
            let ip = pu.u1().inner(gphi.u1()) + pu.u2().inner(gphi.u2());
            assert!(ip.abs() < 1e-10, "inner product {ip} for mode ({a},{b})");
        }
    }

    #[test]
    fn dealias_keeps_low_modes_and_kills_high_ones() {
        let g = grid(16); // cutoff n/3 = 5
        let low = ScalarField::from_fn(g, |x1: f64, x2: f64| {
            (TWO_PI * 5.0 * x1).cos() + (TWO_PI * 3.0 * x2).sin()
        });
        assert!(low.dealias().sub(&low).max_abs() < 1e-12);
        let high = ScalarField::from_fn(g, |x1: f64, _| (TWO_PI * 7.0 * x1).cos());
        assert!(high.dealias().max_abs() < 1e-12);
    }

    #[test]
    fn dealiased_product_matches_closed_form() {
        let g = grid(16);
        let s = ScalarField::from_fn(g, |x1: f64, _| (TWO_PI * x1).sin());
        let prod = s.mul(&s).dealias();
        let exact = ScalarField::from_fn(g, |x1: f64, _| 0.5 * (1.0 - (2.0 * TWO_PI * x1).cos()));
        assert!(prod.sub(&exact).max_abs() < 1e-12);
    }

    #[test]
    fn sobolev_norms_match_analytic_integrals() {
        let g = grid(32);
        let one = ScalarField::constant(g, 1.0);
        assert_abs_diff_eq!(one.sobolev_norm(0).unwrap(), 1.0, epsilon = 1e-13);

        let s = ScalarField::from_fn(g, |x1: f64, _| (TWO_PI * x1).sin());
        let k2 = TWO_PI * TWO_PI;
        let h1 = (0.5 + 0.5 * k2).sqrt();
        assert_abs_diff_eq!(s.sobolev_norm(1).unwrap(), h1, epsilon = 1e-10);

        // symbolic integral: 1/2 + k^2/2 + k^4/2 with k^2 = 4 pi^2
        let h2 = (0.5 + 0.5 * k2 + 0.5 * k2 * k2).sqrt();
        let got = s.sobolev_norm(2).unwrap();
        assert!(
            ((got - h2) / h2).abs() < 1e-10,
            "order-2 norm {got} vs {h2}"
        );

        assert_eq!(
            s.sobolev_norm(3),
            Err(SpectralError::UnsupportedOrder(3))
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn parseval_holds(seed in 0u64..5000) {
            let g = grid(32);
            let f = rand_band_limited(g, seed, 10, 1.0);
            let quad = f.l2_norm_sq();
            let spec = f.spectral_energy();
            prop_assert!((quad - spec).abs() <= 1e-12 * quad.max(1e-30));
        }

        #[test]
        fn spectral_derivatives_commute(seed in 0u64..5000) {
            let g = grid(32);
            let f = rand_band_limited(g, seed, 9, 1.0);
            let a = f.derivative(Axis::X1, 1).derivative(Axis::X2, 1);
            let b = f.derivative(Axis::X2, 1).derivative(Axis::X1, 1);
            prop_assert!(a.sub(&b).max_abs() < 1e-10 * f.max_abs().max(1.0));
        }

        #[test]
        fn leray_is_idempotent_and_divergence_free(seed in 0u64..5000) {
            let g = grid(32);
            let u = VectorField2::new(
                rand_band_limited(g, seed, 10, 1.0),
                rand_band_limited(g, seed.wrapping_add(17), 10, 1.0),
            );
            let p1 = u.leray_project();
            let p2 = p1.leray_project();
            prop_assert!(p2.sub(&p1).max_abs() < 1e-12 * u.max_abs().max(1.0));
            prop_assert!(p1.divergence().max_abs() < 1e-11 * u.max_abs().max(1.0));
        }
    }
}
