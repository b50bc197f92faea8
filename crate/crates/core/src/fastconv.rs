//! Online evaluation of lag sums
//!
//! ```text
//! S_n = Σ_{j=0}^{n-1} w_{n-j} g_j ,   n = 1, 2, …
//! ```
//!
//! where `g_j` only becomes known one step at a time (an implicit time stepper
//! needs `S_n` before it can produce `g_n`). Work is split over a binary tree of
//! dyadic blocks: once the left half `[a, a+L)` of an aligned block of length
//! `2L` is complete, its contribution to every output in the right half
//! `[a+L, a+2L)` is computed with one FFT product of size `2L`. Pairs that fall
//! inside the same base block are summed directly. Total cost for N outputs is
//! O(N log² N).

use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

pub const DEFAULT_BASE_BLOCK: usize = 64;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanError {
    #[error("convolution kernel is empty")]
    EmptyKernel,
    #[error("base block {0} must be a power of two and at least 8")]
    BadBaseBlock(usize),
}

/// Immutable, shareable description of one convolution kernel.
///
/// `kernel[k - 1]` holds `w_k`; lags beyond the kernel length count as zero.
/// Kernel spectra for each dyadic level are computed on first use and cached.
pub struct ConvolutionPlan {
    kernel: Vec<f64>,
    base_block: usize,
    spectra: Vec<OnceLock<Arc<[Complex64]>>>,
}

impl std::fmt::Debug for ConvolutionPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvolutionPlan")
            .field("kernel_len", &self.kernel.len())
            .field("base_block", &self.base_block)
            .finish()
    }
}

impl ConvolutionPlan {
    pub fn new(kernel: Vec<f64>, base_block: usize) -> Result<Self, PlanError> {
        if kernel.is_empty() {
            return Err(PlanError::EmptyKernel);
        }
        if base_block < 8 || !base_block.is_power_of_two() {
            return Err(PlanError::BadBaseBlock(base_block));
        }
        // Level ℓ handles blocks of length base·2^ℓ and touches lags up to
        // base·2^{ℓ+1} − 1; levels whose blocks start past the kernel end are
        // still needed for long streams, so allow a generous number.
        let levels = usize::BITS as usize;
        Ok(ConvolutionPlan {
            kernel,
            base_block,
            spectra: (0..levels).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn with_default_block(kernel: Vec<f64>) -> Result<Self, PlanError> {
        Self::new(kernel, DEFAULT_BASE_BLOCK)
    }

    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    pub fn base_block(&self) -> usize {
        self.base_block
    }

    /// `w_lag`, zero outside `1..=kernel.len()`.
    #[inline]
    fn weight(&self, lag: usize) -> f64 {
        if lag == 0 {
            0.0
        } else {
            self.kernel.get(lag - 1).copied().unwrap_or(0.0)
        }
    }

    /// Starts a fresh history stream over this plan.
    pub fn stream(&self) -> HistoryStream<'_> {
        HistoryStream {
            plan: self,
            signal: Vec::new(),
            far: Vec::new(),
            planner: FftPlanner::new(),
            buffer: Vec::new(),
            scratch: Vec::new(),
        }
    }

    /// All of `S_1 ..= S_n` for a fully known signal of length n.
    pub fn apply(&self, signal: &[f64]) -> Vec<f64> {
        let mut stream = self.stream();
        signal.iter().map(|&g| stream.advance(g)).collect()
    }

    fn spectrum(
        &self,
        level: usize,
        half: usize,
        planner: &mut FftPlanner<f64>,
    ) -> Arc<[Complex64]> {
        self.spectra[level]
            .get_or_init(|| {
                let size = 2 * half;
                let mut buf: Vec<Complex64> = (0..size)
                    .map(|k| {
                        if k + 1 < size {
                            Complex64::new(self.weight(k + 1), 0.0)
                        } else {
                            Complex64::new(0.0, 0.0)
                        }
                    })
                    .collect();
                planner.plan_fft_forward(size).process(&mut buf);
                buf.into()
            })
            .clone()
    }
}

/// Per-stream state: the signal seen so far and the far-field contributions
/// already accumulated for future outputs. Not shareable across threads while
/// advancing; create one stream per solve.
pub struct HistoryStream<'p> {
    plan: &'p ConvolutionPlan,
    signal: Vec<f64>,
    /// `far[n]`: block contributions to `S_n` collected so far.
    far: Vec<f64>,
    planner: FftPlanner<f64>,
    buffer: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl HistoryStream<'_> {
    /// Appends `g_{n-1}` (the n-th call) and returns `S_n`.
    pub fn advance(&mut self, g: f64) -> f64 {
        self.signal.push(g);
        let count = self.signal.len();
        let base = self.plan.base_block;

        let mut half = base;
        let mut level = 0;
        while half <= count {
            if count % (2 * half) == half {
                self.add_block(level, half, count);
            }
            half *= 2;
            level += 1;
        }

        let start = (count / base) * base;
        let near: f64 = (start..count)
            .map(|j| self.plan.weight(count - j) * self.signal[j])
            .sum();
        self.far.get(count).copied().unwrap_or(0.0) + near
    }

    /// Number of signal values pushed so far.
    pub fn len(&self) -> usize {
        self.signal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signal.is_empty()
    }

    /// Contribution of `g[count-half .. count]` to `S_count .. S_{count+half-1}`.
    fn add_block(&mut self, level: usize, half: usize, count: usize) {
        let size = 2 * half;
        let spectrum = self.plan.spectrum(level, half, &mut self.planner);
        let forward = self.planner.plan_fft_forward(size);
        let inverse = self.planner.plan_fft_inverse(size);

        self.buffer.clear();
        self.buffer.extend(
            self.signal[count - half..count]
                .iter()
                .map(|&g| Complex64::new(g, 0.0)),
        );
        self.buffer.resize(size, Complex64::new(0.0, 0.0));
        run(&*forward, &mut self.buffer, &mut self.scratch);
        for (b, s) in self.buffer.iter_mut().zip(spectrum.iter()) {
            *b *= s;
        }
        run(&*inverse, &mut self.buffer, &mut self.scratch);

        if self.far.len() < count + half {
            self.far.resize(count + half, 0.0);
        }
        let scale = 1.0 / size as f64;
        for p in 0..half {
            self.far[count + p] += self.buffer[half - 1 + p].re * scale;
        }
    }
}

fn run(fft: &dyn Fft<f64>, buffer: &mut [Complex64], scratch: &mut Vec<Complex64>) {
    let need = fft.get_inplace_scratch_len();
    if scratch.len() < need {
        scratch.resize(need, Complex64::new(0.0, 0.0));
    }
    fft.process_with_scratch(buffer, &mut scratch[..need]);
}
