//! Adaptive peak averaging: detect anomalously large time-domain samples
//! by derivative-sign template matching, keep those above a statistics-
//! driven threshold and replace them with a local average.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::ofdm::TimeSymbol;

/// Envelope of a time symbol: non-negative sample magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSeries {
    values: Vec<f64>,
}

impl MagnitudeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("magnitudes must be finite and non-negative"));
        }
        Ok(Self { values })
    }

    pub fn from_symbol(symbol: &TimeSymbol) -> Self {
        Self {
            values: symbol.useful().iter().map(|s| s.norm()).collect(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// First-difference signs of a magnitude series: +1 increasing, -1
/// decreasing, 0 exactly equal. Length N-1.
#[derive(Debug, Clone, PartialEq)]
pub struct SignSeries {
    signs: Vec<i8>,
}

impl SignSeries {
    pub fn signs(&self) -> &[i8] {
        &self.signs
    }
}

/// Sign of the first difference of the envelope.
pub fn sign_diff(mag: &MagnitudeSeries) -> Result<SignSeries> {
    if mag.len() < 2 {
        return Err(invalid("sign series needs at least two samples"));
    }
    let signs = mag
        .values()
        .windows(2)
        .map(|w| {
            if w[1] > w[0] {
                1
            } else if w[1] < w[0] {
                -1
            } else {
                0
            }
        })
        .collect();
    Ok(SignSeries { signs })
}

/// Template-match the increase-then-decrease pattern.
///
/// The sign series is convolved with the [-1, 1] kernel; an output of
/// exactly 2 requires the pair (+1, -1), which marks a strict local
/// maximum of the envelope at that index.
pub fn detect_peaks(signs: &SignSeries) -> Vec<usize> {
    let s = signs.signs();
    // Full convolution with [-1, 1]: conv[m] = s[m-1] - s[m]. Positions
    // 1..len(s) compare adjacent signs; the ends touch only one sign and
    // can never reach 2 against this kernel.
    let mut peaks = Vec::new();
    for m in 1..s.len() {
        let conv = s[m - 1] as i32 - s[m] as i32;
        if conv == 2 {
            peaks.push(m);
        }
    }
    peaks
}

/// Statistics-driven detection threshold: (max + mean + population
/// standard deviation) / k. Larger k lowers the threshold.
pub fn adaptive_threshold(mag: &MagnitudeSeries, k: f64) -> Result<f64> {
    if mag.is_empty() {
        return Err(invalid("threshold of an empty series"));
    }
    if !k.is_finite() || k <= 0.0 {
        return Err(invalid(format!("adaptivity constant k must be > 0, got {k}")));
    }
    let n = mag.len() as f64;
    let max = mag.values().iter().fold(0.0f64, |a, &b| a.max(b));
    let mean = mag.values().iter().sum::<f64>() / n;
    let variance = mag.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok((max + mean + variance.sqrt()) / k)
}

/// Replacement filter applied at a detected peak.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AveragingFilter {
    /// (s[n-1] + s[n] + s[n+1]) / 3.
    #[default]
    Simple,
    /// alpha * s[n-1] + (1 - alpha) * s[n] with alpha = 0.5.
    Exponential,
    /// (s[n-1] + 2 s[n] + s[n+1]) / 4.
    Weighted,
}

/// Neighbor lookup at the series ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Indices wrap modulo N (the symbol is cyclically extended anyway).
    #[default]
    Cyclic,
    /// Indices clamp to the first/last sample.
    Clamp,
}

/// Peak replacement parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatConfig {
    /// Adaptivity constant of the detection threshold.
    pub k: f64,
    pub filter: AveragingFilter,
    pub boundary: Boundary,
    /// Detection/replacement passes; statistics are recomputed each pass.
    pub max_passes: usize,
}

impl Default for SatConfig {
    fn default() -> Self {
        Self {
            k: 2.5,
            filter: AveragingFilter::Simple,
            boundary: Boundary::Cyclic,
            max_passes: 1,
        }
    }
}

impl SatConfig {
    pub fn validated(self) -> Result<Self> {
        if !self.k.is_finite() || self.k <= 0.0 {
            return Err(invalid(format!("k must be > 0, got {}", self.k)));
        }
        if self.max_passes == 0 {
            return Err(invalid("max_passes must be >= 1"));
        }
        Ok(self)
    }
}

/// Peaks that survived the threshold in the final pass, and the threshold
/// they were compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakSet {
    pub indices: Vec<usize>,
    pub threshold: f64,
}

const EXPONENTIAL_ALPHA: f64 = 0.5;

fn neighbor(samples: &[Complex64], idx: isize, boundary: Boundary) -> Complex64 {
    let n = samples.len() as isize;
    let i = match boundary {
        Boundary::Cyclic => idx.rem_euclid(n),
        Boundary::Clamp => idx.clamp(0, n - 1),
    };
    samples[i as usize]
}

fn replacement(samples: &[Complex64], n: usize, cfg: &SatConfig) -> Complex64 {
    let i = n as isize;
    let prev = neighbor(samples, i - 1, cfg.boundary);
    let here = samples[n];
    let next = neighbor(samples, i + 1, cfg.boundary);
    match cfg.filter {
        AveragingFilter::Simple => (prev + here + next) / 3.0,
        AveragingFilter::Weighted => (prev + here * 2.0 + next) / 4.0,
        AveragingFilter::Exponential => {
            prev * EXPONENTIAL_ALPHA + here * (1.0 - EXPONENTIAL_ALPHA)
        }
    }
}

/// Detect and flatten anomalous envelope peaks.
///
/// Each pass recomputes the envelope and the adaptive threshold, keeps the
/// strict local maxima whose magnitude exceeds the threshold and replaces
/// every surviving peak simultaneously from the pass's original samples.
/// Passes stop when no peak survives or `max_passes` is reached. Returns
/// the processed symbol and the peak set of the last pass that ran.
pub fn sat_process(symbol: &TimeSymbol, cfg: &SatConfig) -> Result<(TimeSymbol, PeakSet)> {
    let cfg = cfg.validated()?;
    if symbol.prefix_len() != 0 {
        return Err(invalid(
            "sat_process expects the useful part only; re-derive the cyclic prefix afterwards",
        ));
    }
    if symbol.useful_len() < 2 {
        return Err(invalid("symbol too short for peak detection"));
    }

    let mut samples = symbol.useful().to_vec();
    let mut last = PeakSet {
        indices: Vec::new(),
        threshold: 0.0,
    };
    for _ in 0..cfg.max_passes {
        let mag = MagnitudeSeries::new(samples.iter().map(|s| s.norm()).collect())?;
        let threshold = adaptive_threshold(&mag, cfg.k)?;
        let surviving: Vec<usize> = detect_peaks(&sign_diff(&mag)?)
            .into_iter()
            .filter(|&i| mag.values()[i] > threshold)
            .collect();
        last = PeakSet {
            indices: surviving.clone(),
            threshold,
        };
        if surviving.is_empty() {
            break;
        }
        let originals = samples.clone();
        for &i in &surviving {
            samples[i] = replacement(&originals, i, &cfg);
        }
    }
    Ok((TimeSymbol::new(samples), last))
}
