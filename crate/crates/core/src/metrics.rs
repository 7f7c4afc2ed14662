//! Link-quality metrics: PAPR, CCDF estimation, MSE/SNR/PSNR reports,
//! bit-error counting and the Chernoff union bound on QAM error rates.

use crate::error::{invalid, Result, SimError};
use crate::ofdm::TimeSymbol;

/// Peak-to-average power ratio of the useful part, in dB.
///
/// The cyclic prefix is excluded: it duplicates samples and would bias the
/// average power.
pub fn papr_db(time: &TimeSymbol) -> Result<f64> {
    let useful = time.useful();
    if useful.is_empty() {
        return Err(invalid("PAPR of an empty symbol"));
    }
    let mut peak = 0.0f64;
    let mut total = 0.0f64;
    for s in useful {
        let p = s.norm_sqr();
        peak = peak.max(p);
        total += p;
    }
    if total == 0.0 {
        return Err(SimError::ZeroSignal);
    }
    let mean = total / useful.len() as f64;
    Ok(10.0 * (peak / mean).log10())
}

/// One point of a complementary cumulative distribution curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CcdfPoint {
    pub threshold_db: f64,
    pub probability: f64,
}

/// Empirical CCDF: probability that a PAPR sample strictly exceeds each
/// threshold. Thresholds must be strictly increasing, which makes the
/// probabilities non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CcdfCurve {
    pub points: Vec<CcdfPoint>,
}

/// Estimate the CCDF of `papr_samples` (dB) over a threshold grid (dB).
pub fn ccdf_estimate(papr_samples: &[f64], thresholds_db: &[f64]) -> Result<CcdfCurve> {
    if papr_samples.is_empty() {
        return Err(invalid("CCDF of an empty sample set"));
    }
    if thresholds_db.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("CCDF thresholds must be strictly increasing"));
    }
    let n = papr_samples.len() as f64;
    let points = thresholds_db
        .iter()
        .map(|&gamma| CcdfPoint {
            threshold_db: gamma,
            probability: papr_samples.iter().filter(|&&p| p > gamma).count() as f64 / n,
        })
        .collect();
    Ok(CcdfCurve { points })
}

/// PAPR level (dB) whose exceedance probability is `prob`: the smallest
/// sample value gamma with #{x > gamma}/n <= prob.
pub fn papr_at_ccdf(papr_samples: &[f64], prob: f64) -> Result<f64> {
    if papr_samples.is_empty() {
        return Err(invalid("operating point of an empty sample set"));
    }
    if !(0.0..=1.0).contains(&prob) {
        return Err(invalid(format!("probability {prob} outside [0, 1]")));
    }
    let mut sorted = papr_samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite PAPR samples"));
    let n = sorted.len();
    // Smallest k such that (n - k) / n <= prob, 1-based; clamp to the range.
    let k = ((n as f64) * (1.0 - prob)).ceil() as usize;
    Ok(sorted[k.clamp(1, n) - 1])
}

/// MSE/SNR/PSNR comparison of a test signal against a reference.
///
/// `snr_db`/`psnr_db` are `None` when the error is exactly zero (the
/// "infinite SNR" flag value; file writers must emit a documented marker,
/// never a bare float infinity).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub mse: f64,
    pub snr_db: Option<f64>,
    pub psnr_db: Option<f64>,
}

/// Compare the useful parts of two symbols of equal length.
pub fn quality_report(reference: &TimeSymbol, test: &TimeSymbol) -> Result<QualityReport> {
    let r = reference.useful();
    let t = test.useful();
    if r.len() != t.len() {
        return Err(invalid(format!(
            "length mismatch: reference {} vs test {}",
            r.len(),
            t.len()
        )));
    }
    if r.is_empty() {
        return Err(invalid("quality report of empty signals"));
    }
    let n = r.len() as f64;
    let mut err_energy = 0.0f64;
    let mut ref_energy = 0.0f64;
    let mut ref_peak = 0.0f64;
    for (a, b) in r.iter().zip(t) {
        err_energy += (a - b).norm_sqr();
        let p = a.norm_sqr();
        ref_energy += p;
        ref_peak = ref_peak.max(p);
    }
    let mse = err_energy / n;
    if err_energy == 0.0 {
        return Ok(QualityReport {
            mse: 0.0,
            snr_db: None,
            psnr_db: None,
        });
    }
    Ok(QualityReport {
        mse,
        snr_db: Some(10.0 * (ref_energy / err_energy).log10()),
        psnr_db: Some(10.0 * (ref_peak / mse).log10()),
    })
}

/// One measured point of a BER curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BerPoint {
    pub snr_db: f64,
    pub ber: f64,
    pub bit_count: u64,
    pub error_count: u64,
}

impl BerPoint {
    pub fn new(snr_db: f64, bit_count: u64, error_count: u64) -> Self {
        assert!(bit_count > 0, "BER point requires at least one bit");
        Self {
            snr_db,
            ber: error_count as f64 / bit_count as f64,
            bit_count,
            error_count,
        }
    }
}

/// Measured SNR -> BER dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub points: Vec<BerPoint>,
}

/// Hamming distance between two equal-length bit streams, as
/// (bit_count, error_count).
pub fn ber_count(sent: &[u8], received: &[u8]) -> Result<(u64, u64)> {
    if sent.len() != received.len() {
        return Err(invalid(format!(
            "bit stream length mismatch: {} vs {}",
            sent.len(),
            received.len()
        )));
    }
    if sent.is_empty() {
        return Err(invalid("BER of empty bit streams"));
    }
    let errors = sent.iter().zip(received).filter(|(a, b)| a != b).count() as u64;
    Ok((sent.len() as u64, errors))
}

/// Chernoff union bound on the symbol error rate of square M-QAM at a given
/// symbol-energy-to-noise ratio, capped at 1.
pub fn chernoff_union_bound_ser(snr_db: f64, m: u32) -> Result<f64> {
    if m < 4 || !m.is_power_of_two() || !m.trailing_zeros().is_multiple_of(2) {
        return Err(invalid(format!(
            "modulation order must be a square power of two, got {m}"
        )));
    }
    let gamma = 10f64.powf(snr_db / 10.0);
    let sqrt_m = (m as f64).sqrt();
    let raw = 4.0 * (1.0 - 1.0 / sqrt_m) * 0.5 * (-1.5 * gamma / (m as f64 - 1.0)).exp();
    Ok(raw.min(1.0))
}

/// Chernoff-bound BER curve over an SNR grid: the SER bound divided by the
/// bits per symbol. Monotone non-increasing in SNR.
pub fn chernoff_union_bound_ber(snr_db_grid: &[f64], m: u32) -> Result<Vec<(f64, f64)>> {
    let bits = (m as f64).log2();
    snr_db_grid
        .iter()
        .map(|&snr| Ok((snr, chernoff_union_bound_ser(snr, m)? / bits)))
        .collect()
}
