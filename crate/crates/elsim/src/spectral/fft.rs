//! Thin 2-D FFT layer over `rustfft` with a per-thread plan cache.
//!
//! Plans are cached (never field values), keyed by size, scalar type and
//! direction. The cache is thread-local, so concurrent callers never share
//! mutable state and output is bit-identical for a fixed grid.

use std::any::{Any, TypeId};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use rustfft::{Fft, FftDirection, FftPlanner};

use crate::real::{r, C, Real};

thread_local! {
    static PLAN_CACHE: RefCell<HashMap<(usize, TypeId, bool), Box<dyn Any>>> =
        RefCell::new(HashMap::new());
}

fn plan<R: Real>(n: usize, inverse: bool) -> Arc<dyn Fft<R>> {
    PLAN_CACHE.with(|cell| {
        let mut map = cell.borrow_mut();
        let key = (n, TypeId::of::<R>(), inverse);
        let entry = map.entry(key).or_insert_with(|| {
            let dir = if inverse {
                FftDirection::Inverse
            } else {
                FftDirection::Forward
            };
            let plan: Arc<dyn Fft<R>> = FftPlanner::<R>::new().plan_fft(n, dir);
            Box::new(plan) as Box<dyn Any>
        });
        entry
            .downcast_ref::<Arc<dyn Fft<R>>>()
            .expect("plan cache type mismatch")
            .clone()
    })
}

/// In-place 2-D FFT of an `n`-by-`n` row-major complex buffer.
///
/// Element `(i, j)` is the sample at `x = (i*h, j*h)`; after a forward
/// transform it holds the coefficient of mode `(m1(i), m2(j))`. The inverse
/// transform includes the `1/n^2` normalization.
pub(crate) fn fft2<R: Real>(buf: &mut [C<R>], n: usize, inverse: bool) {
    debug_assert_eq!(buf.len(), n * n);
    let fft = plan::<R>(n, inverse);
    let mut scratch = vec![C::<R>::new(R::zero(), R::zero()); fft.get_inplace_scratch_len()];

    // axis 2 (contiguous rows)
    for row in buf.chunks_exact_mut(n) {
        fft.process_with_scratch(row, &mut scratch);
    }
    // axis 1 (strided columns)
    let mut col = vec![C::<R>::new(R::zero(), R::zero()); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        fft.process_with_scratch(&mut col, &mut scratch);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }

    if inverse {
        let scale = R::one() / r::<R>((n * n) as f64);
        for v in buf.iter_mut() {
            *v = *v * scale;
        }
    }
}

/// Integer mode number for index `i` on an `n`-point axis:
/// `0, 1, .., n/2-1, -n/2, .., -1`.
#[inline]
pub(crate) fn mode(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Applies `f(m1, m2)` as a pointwise multiplier in spectral space.
pub(crate) fn apply_multiplier<R: Real>(
    buf: &mut [C<R>],
    n: usize,
    f: impl Fn(i64, i64) -> C<R>,
) {
    for i in 0..n {
        let m1 = mode(i, n);
        for j in 0..n {
            let m2 = mode(j, n);
            buf[i * n + j] = buf[i * n + j] * f(m1, m2);
        }
    }
}
