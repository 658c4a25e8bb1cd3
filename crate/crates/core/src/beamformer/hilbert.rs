//! Analytic signal via the one-sided spectrum.

use std::sync::Arc;

use num_traits::Zero;
use rustfft::{Fft, FftPlanner};

use crate::scalar::{Cplx, Real};

/// Reusable FFT plan for analytic signals of one trace length.
pub struct HilbertPlan<T: Real> {
    len: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> HilbertPlan<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { len, forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Writes `trace + i·H{trace}` into `out` (both of the plan length).
    pub fn analytic_into(&self, trace: &[T], out: &mut [Cplx<T>]) {
        let n = self.len;
        assert_eq!(trace.len(), n);
        assert_eq!(out.len(), n);
        if n < 2 {
            for (o, &x) in out.iter_mut().zip(trace) {
                *o = Cplx::new(x, T::zero());
            }
            return;
        }
        for (o, &x) in out.iter_mut().zip(trace) {
            *o = Cplx::new(x, T::zero());
        }
        self.forward.process(out);
        // keep DC (and Nyquist for even n), double positive bins, drop negative bins;
        // the 1/n of the inverse transform is folded in here
        let inv_n = T::one() / T::of_usize(n);
        let two = inv_n + inv_n;
        let positive_end = n.div_ceil(2);
        out[0] *= inv_n;
        for v in &mut out[1..positive_end] {
            *v *= two;
        }
        if n.is_multiple_of(2) {
            out[n / 2] *= inv_n;
        }
        let neg_start = n / 2 + 1;
        for v in &mut out[neg_start..] {
            *v = Cplx::zero();
        }
        self.inverse.process(out);
        // real part is the input by construction; restore it exactly
        for (o, &x) in out.iter_mut().zip(trace) {
            o.re = x;
        }
    }
}

/// Analytic signal of `trace`: the trace as real part and its discrete
/// Hilbert transform as imaginary part. Length-0/1 inputs come back with a
/// zero imaginary part.
pub fn analytic_signal<T: Real>(trace: &[T]) -> Vec<Cplx<T>> {
    let plan = HilbertPlan::new(trace.len());
    let mut out = vec![Cplx::zero(); trace.len()];
    plan.analytic_into(trace, &mut out);
    out
}
