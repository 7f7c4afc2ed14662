//! OFDM symbol generation and recovery: bit source, Gray-coded 64-QAM
//! mapping, unitary transforms and cyclic prefix handling.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::fft::{fft_unitary, ifft_unitary};

/// One complex baseband sample.
pub type ComplexSample = Complex64;

/// Normalization factor for unit average constellation power: 1/sqrt(42).
#[allow(clippy::excessive_precision)]
const QAM64_NORM: f64 = 0.15430334996209191;

/// Per-axis amplitude levels indexed 0..7 (before normalization).
const QAM64_LEVELS: [f64; 8] = [-7.0, -5.0, -3.0, -1.0, 1.0, 3.0, 5.0, 7.0];

/// System parameters of the OFDM link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OfdmConfig {
    /// Number of subcarriers N (power of two).
    pub n_subcarriers: usize,
    /// Guard interval as a fraction of the useful symbol (N * guard_fraction
    /// must be an integer).
    pub guard_fraction: f64,
    /// Constellation order M (square power of two; only 64 is implemented).
    pub modulation_order: u32,
    /// Time-domain oversampling factor (power of two, 1 = critically sampled).
    pub oversample: usize,
}

impl Default for OfdmConfig {
    fn default() -> Self {
        Self {
            n_subcarriers: 512,
            guard_fraction: 0.25,
            modulation_order: 64,
            oversample: 1,
        }
    }
}

impl OfdmConfig {
    /// Validate the invariants; returns the config for chaining.
    pub fn validated(self) -> Result<Self> {
        if !self.n_subcarriers.is_power_of_two() {
            return Err(invalid(format!(
                "n_subcarriers must be a power of two, got {}",
                self.n_subcarriers
            )));
        }
        let m = self.modulation_order;
        let bits = bits_per_symbol(m)?;
        if bits % 2 != 0 {
            return Err(invalid(format!("modulation order {m} is not square")));
        }
        if m != 64 {
            return Err(invalid(format!(
                "only 64-QAM is implemented, got modulation order {m}"
            )));
        }
        if !(0.0..1.0).contains(&self.guard_fraction) {
            return Err(invalid(format!(
                "guard_fraction must be in [0, 1), got {}",
                self.guard_fraction
            )));
        }
        let prefix = self.guard_fraction * self.n_subcarriers as f64;
        if (prefix - prefix.round()).abs() > 1e-9 {
            return Err(invalid(format!(
                "guard_fraction {} times N {} is not an integer",
                self.guard_fraction, self.n_subcarriers
            )));
        }
        if !self.oversample.is_power_of_two() {
            return Err(invalid(format!(
                "oversample must be a power of two, got {}",
                self.oversample
            )));
        }
        Ok(self)
    }

    /// Cyclic prefix length in samples (at critical sampling).
    pub fn prefix_len(&self) -> usize {
        (self.guard_fraction * self.n_subcarriers as f64).round() as usize
    }

    /// Bits carried by one fully loaded OFDM symbol.
    pub fn bits_per_ofdm_symbol(&self) -> usize {
        self.n_subcarriers * 6
    }
}

fn bits_per_symbol(m: u32) -> Result<u32> {
    if m < 4 || !m.is_power_of_two() {
        return Err(invalid(format!(
            "modulation order must be a power of two >= 4, got {m}"
        )));
    }
    Ok(m.trailing_zeros())
}

/// Frequency-domain symbol: one constellation point per subcarrier.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqSymbol {
    points: Vec<Complex64>,
}

impl FreqSymbol {
    pub fn new(points: Vec<Complex64>) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Complex64> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Time-domain symbol. `samples` holds `prefix_len` guard samples followed
/// by the useful part; `prefix_len == 0` when no cyclic prefix is attached.
///
/// The guard samples equal the tail of the useful part when the symbol is
/// built by [`add_cyclic_prefix`]; after a channel they are whatever the
/// channel produced and exist only to be discarded.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSymbol {
    samples: Vec<Complex64>,
    prefix_len: usize,
}

impl TimeSymbol {
    /// A symbol with no cyclic prefix.
    pub fn new(samples: Vec<Complex64>) -> Self {
        Self {
            samples,
            prefix_len: 0,
        }
    }

    pub(crate) fn from_raw_parts(samples: Vec<Complex64>, prefix_len: usize) -> Self {
        debug_assert!(prefix_len < samples.len().max(1));
        Self {
            samples,
            prefix_len,
        }
    }

    /// All samples, guard included.
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    /// The useful part (guard excluded).
    pub fn useful(&self) -> &[Complex64] {
        &self.samples[self.prefix_len..]
    }

    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn useful_len(&self) -> usize {
        self.samples.len() - self.prefix_len
    }
}

/// Draw `count` uniform bits (values 0/1), 64 per RNG word, LSB first.
pub fn random_bits<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Vec<u8> {
    let mut bits = Vec::with_capacity(count);
    while bits.len() < count {
        let mut word = rng.random::<u64>();
        let take = (count - bits.len()).min(64);
        for _ in 0..take {
            bits.push((word & 1) as u8);
            word >>= 1;
        }
    }
    bits
}

// Gray code per axis: bit triple -> level index. 000 -> -7 ... 100 -> +7.
fn gray3_to_index(gray: u8) -> usize {
    match gray & 0x07 {
        0b000 => 0,
        0b001 => 1,
        0b011 => 2,
        0b010 => 3,
        0b110 => 4,
        0b111 => 5,
        0b101 => 6,
        0b100 => 7,
        _ => unreachable!(),
    }
}

fn index_to_gray3(idx: usize) -> u8 {
    [0b000, 0b001, 0b011, 0b010, 0b110, 0b111, 0b101, 0b100][idx]
}

/// Nearest-level decision, boundaries at the even multiples of the spacing.
fn level_to_index(value: f64) -> usize {
    if value < -6.0 {
        0
    } else if value < -4.0 {
        1
    } else if value < -2.0 {
        2
    } else if value < 0.0 {
        3
    } else if value < 2.0 {
        4
    } else if value < 4.0 {
        5
    } else if value < 6.0 {
        6
    } else {
        7
    }
}

/// Map a bit stream to Gray-coded 64-QAM points with unit average energy.
///
/// Six bits per point: the first three select the real-axis level, the last
/// three the imaginary-axis level.
pub fn map_qam64(bits: &[u8]) -> Result<Vec<Complex64>> {
    if !bits.len().is_multiple_of(6) {
        return Err(invalid(format!(
            "bit count {} is not divisible by 6",
            bits.len()
        )));
    }
    if let Some(&b) = bits.iter().find(|&&b| b > 1) {
        return Err(invalid(format!("bit values must be 0 or 1, got {b}")));
    }
    Ok(bits
        .chunks_exact(6)
        .map(|chunk| {
            let re_gray = (chunk[0] << 2) | (chunk[1] << 1) | chunk[2];
            let im_gray = (chunk[3] << 2) | (chunk[4] << 1) | chunk[5];
            Complex64::new(
                QAM64_LEVELS[gray3_to_index(re_gray)] * QAM64_NORM,
                QAM64_LEVELS[gray3_to_index(im_gray)] * QAM64_NORM,
            )
        })
        .collect())
}

/// Hard minimum-distance 64-QAM decision; inverse of [`map_qam64`] on exact
/// constellation points.
pub fn demap_qam64(points: &[Complex64]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(points.len() * 6);
    for p in points {
        let re_gray = index_to_gray3(level_to_index(p.re / QAM64_NORM));
        let im_gray = index_to_gray3(level_to_index(p.im / QAM64_NORM));
        for shift in [2u8, 1, 0] {
            bits.push((re_gray >> shift) & 1);
        }
        for shift in [2u8, 1, 0] {
            bits.push((im_gray >> shift) & 1);
        }
    }
    bits
}

/// The 64 constellation points in bit order (index = 6-bit word).
pub fn qam64_constellation() -> Vec<Complex64> {
    (0..64u8)
        .map(|sym| {
            let bits = [
                (sym >> 5) & 1,
                (sym >> 4) & 1,
                (sym >> 3) & 1,
                (sym >> 2) & 1,
                (sym >> 1) & 1,
                sym & 1,
            ];
            map_qam64(&bits).expect("6 bits")[0]
        })
        .collect()
}

/// Synthesize the time-domain symbol (unitary IFFT of the subcarrier vector).
pub fn ifft_symbol(freq: &FreqSymbol) -> Result<TimeSymbol> {
    Ok(TimeSymbol::new(ifft_unitary(freq.points())?))
}

/// Recover the subcarrier vector from the useful part of a time symbol.
pub fn fft_symbol(time: &TimeSymbol) -> Result<FreqSymbol> {
    Ok(FreqSymbol::new(fft_unitary(time.useful())?))
}

/// Synthesize an oversampled time symbol by zero-padding the spectrum in
/// the middle before the unitary IFFT. `factor` must be a power of two;
/// 1 returns the critically sampled symbol.
pub fn ifft_symbol_oversampled(freq: &FreqSymbol, factor: usize) -> Result<TimeSymbol> {
    if factor == 0 || !factor.is_power_of_two() {
        return Err(invalid(format!(
            "oversampling factor must be a power of two, got {factor}"
        )));
    }
    if factor == 1 {
        return ifft_symbol(freq);
    }
    let n = freq.len();
    if !n.is_power_of_two() {
        return Err(invalid(format!("symbol length {n} is not a power of two")));
    }
    let total = n * factor;
    let mut padded = vec![Complex64::new(0.0, 0.0); total];
    let half = n / 2;
    padded[..half].copy_from_slice(&freq.points()[..half]);
    padded[total - half..].copy_from_slice(&freq.points()[half..]);
    Ok(TimeSymbol::new(ifft_unitary(&padded)?))
}

/// Prepend a cyclic prefix: the last `guard_fraction * N` useful samples
/// are copied to the front.
pub fn add_cyclic_prefix(time: &TimeSymbol, guard_fraction: f64) -> Result<TimeSymbol> {
    if time.prefix_len() != 0 {
        return Err(invalid("symbol already carries a cyclic prefix"));
    }
    if !(0.0..1.0).contains(&guard_fraction) {
        return Err(invalid(format!(
            "guard_fraction must be in [0, 1), got {guard_fraction}"
        )));
    }
    let n = time.useful_len();
    let exact = guard_fraction * n as f64;
    if (exact - exact.round()).abs() > 1e-9 {
        return Err(invalid(format!(
            "guard_fraction {guard_fraction} times N {n} is not an integer"
        )));
    }
    let prefix_len = exact.round() as usize;
    if prefix_len == 0 {
        return Ok(time.clone());
    }
    let mut samples = Vec::with_capacity(n + prefix_len);
    samples.extend_from_slice(&time.useful()[n - prefix_len..]);
    samples.extend_from_slice(time.useful());
    Ok(TimeSymbol::from_raw_parts(samples, prefix_len))
}

/// Drop the guard samples, restoring the useful part exactly.
pub fn remove_cyclic_prefix(time: &TimeSymbol) -> TimeSymbol {
    TimeSymbol::new(time.useful().to_vec())
}
