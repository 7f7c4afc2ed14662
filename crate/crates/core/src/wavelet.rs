//! Orthonormal discrete wavelet transform with periodic extension, plus
//! universal-threshold denoising of complex signals (real and imaginary
//! channels processed independently).

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::metrics::{quality_report, QualityReport};
use crate::ofdm::TimeSymbol;

/// Wavelet family. The filter set is extensible; Haar and Daubechies-4
/// (8 taps, four vanishing moments) are built in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveletFamily {
    Haar,
    Db4,
}

impl WaveletFamily {
    /// Low-pass (scaling) decomposition filter.
    pub fn scaling_filter(self) -> &'static [f64] {
        match self {
            WaveletFamily::Haar => &HAAR_LO,
            WaveletFamily::Db4 => &DB4_LO,
        }
    }

    /// High-pass filter from the alternating-flip (quadrature mirror)
    /// relation g[n] = (-1)^n h[L-1-n].
    pub fn wavelet_filter(self) -> Vec<f64> {
        let lo = self.scaling_filter();
        let l = lo.len();
        (0..l)
            .map(|n| {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sign * lo[l - 1 - n]
            })
            .collect()
    }
}

const HAAR_LO: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];

#[allow(clippy::excessive_precision)]
const DB4_LO: [f64; 8] = [
    -0.010597401784997278,
    0.032883011666982945,
    0.030841381835986965,
    -0.187034811718881060,
    -0.027983769416983849,
    0.630880767929590380,
    0.714846570552541600,
    0.230377813308855140,
];

/// Detail-coefficient thresholding rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdRule {
    /// sgn(x) * max(|x| - T, 0).
    Soft,
    /// Keep x when |x| > T, zero otherwise.
    Hard,
}

/// Multi-level DWT output. `details[0]` is the finest scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DwtCoefficients {
    pub approx: Vec<f64>,
    pub details: Vec<Vec<f64>>,
    pub levels: usize,
}

impl DwtCoefficients {
    /// Total coefficient count; equals the input length.
    pub fn len(&self) -> usize {
        self.approx.len() + self.details.iter().map(Vec::len).sum::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn check_dwt_input(len: usize, levels: usize) -> Result<()> {
    if len < 2 || !len.is_power_of_two() {
        return Err(invalid(format!(
            "DWT length must be a power of two >= 2, got {len}"
        )));
    }
    let max_levels = len.trailing_zeros() as usize;
    if levels == 0 || levels > max_levels {
        return Err(invalid(format!(
            "levels must be in 1..={max_levels} for length {len}, got {levels}"
        )));
    }
    Ok(())
}

/// One analysis step: periodic correlation with the filter pair, then
/// downsample by two. a[k] = sum_j h[j] x[(2k + j) mod N], so Haar pairs
/// samples as (x[0], x[1]), (x[2], x[3]), ...
fn analysis_step(signal: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = signal.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let mut a = 0.0;
        let mut d = 0.0;
        for j in 0..lo.len() {
            let idx = (2 * k + j) % n;
            a += lo[j] * signal[idx];
            d += hi[j] * signal[idx];
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

/// One synthesis step: the exact transpose of the analysis step.
fn synthesis_step(approx: &[f64], detail: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let half = approx.len();
    let n = half * 2;
    let mut out = vec![0.0; n];
    for k in 0..half {
        for j in 0..lo.len() {
            let idx = (2 * k + j) % n;
            out[idx] += lo[j] * approx[k] + hi[j] * detail[k];
        }
    }
    out
}

/// Multi-level forward DWT of a real signal.
pub fn dwt(signal: &[f64], family: WaveletFamily, levels: usize) -> Result<DwtCoefficients> {
    check_dwt_input(signal.len(), levels)?;
    let lo = family.scaling_filter();
    let hi = family.wavelet_filter();
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = analysis_step(&approx, lo, &hi);
        details.push(d);
        approx = a;
    }
    Ok(DwtCoefficients {
        approx,
        details,
        levels,
    })
}

/// Inverse multi-level DWT.
pub fn idwt(coeffs: &DwtCoefficients, family: WaveletFamily) -> Result<Vec<f64>> {
    if coeffs.details.len() != coeffs.levels || coeffs.levels == 0 {
        return Err(invalid("coefficient levels do not match the detail count"));
    }
    let lo = family.scaling_filter();
    let hi = family.wavelet_filter();
    let mut current = coeffs.approx.clone();
    for detail in coeffs.details.iter().rev() {
        if detail.len() != current.len() {
            return Err(invalid("detail band length does not match the cascade"));
        }
        current = synthesis_step(&current, detail, lo, &hi);
    }
    Ok(current)
}

fn median_of(mut values: Vec<f64>) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = values.len() / 2;
    if values.len().is_multiple_of(2) {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    }
}

/// Universal threshold sigma * sqrt(2 ln n) with the noise level estimated
/// from the finest detail band via the median absolute deviation.
fn universal_threshold(finest_detail: &[f64], n: usize) -> f64 {
    let sigma = median_of(finest_detail.iter().map(|x| x.abs()).collect()) / 0.6745;
    sigma * (2.0 * (n as f64).ln()).sqrt()
}

fn apply_rule(detail: &mut [f64], threshold: f64, rule: ThresholdRule) {
    for x in detail.iter_mut() {
        *x = match rule {
            ThresholdRule::Soft => {
                if x.abs() > threshold {
                    x.signum() * (x.abs() - threshold)
                } else {
                    0.0
                }
            }
            ThresholdRule::Hard => {
                if x.abs() > threshold {
                    *x
                } else {
                    0.0
                }
            }
        };
    }
}

/// Denoise one real channel in place of a new vector.
fn denoise_channel(
    signal: &[f64],
    family: WaveletFamily,
    levels: usize,
    rule: ThresholdRule,
) -> Result<Vec<f64>> {
    let mut coeffs = dwt(signal, family, levels)?;
    let threshold = universal_threshold(&coeffs.details[0], signal.len());
    for detail in &mut coeffs.details {
        apply_rule(detail, threshold, rule);
    }
    idwt(&coeffs, family)
}

/// Wavelet-threshold denoising of a complex symbol: the real and imaginary
/// parts are treated as independent channels, detail bands are thresholded
/// at the universal threshold and the approximation band is untouched.
///
/// The symbol must carry no cyclic prefix (denoise first, re-derive the
/// prefix afterwards).
pub fn denoise(
    noisy: &TimeSymbol,
    family: WaveletFamily,
    levels: usize,
    rule: ThresholdRule,
) -> Result<TimeSymbol> {
    if noisy.prefix_len() != 0 {
        return Err(invalid("denoise expects a symbol without cyclic prefix"));
    }
    let re: Vec<f64> = noisy.useful().iter().map(|s| s.re).collect();
    let im: Vec<f64> = noisy.useful().iter().map(|s| s.im).collect();
    let re_out = denoise_channel(&re, family, levels, rule)?;
    let im_out = denoise_channel(&im, family, levels, rule)?;
    Ok(TimeSymbol::new(
        re_out
            .into_iter()
            .zip(im_out)
            .map(|(r, i)| Complex64::new(r, i))
            .collect(),
    ))
}

/// Quality of the noisy and the denoised signal against the clean
/// reference: (before, after).
pub fn denoise_report(
    clean: &TimeSymbol,
    noisy: &TimeSymbol,
    denoised: &TimeSymbol,
) -> Result<(QualityReport, QualityReport)> {
    Ok((
        quality_report(clean, noisy)?,
        quality_report(clean, denoised)?,
    ))
}
