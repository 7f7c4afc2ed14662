//! Channel models (AWGN, frequency-selective Rayleigh) and the end-to-end
//! bit-error-rate measurement loop.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use std::f64::consts::PI;

use crate::error::{invalid, Result, SimError};
use crate::metrics::{BerCurve, BerPoint};
use crate::ofdm::{
    add_cyclic_prefix, demap_qam64, fft_symbol, remove_cyclic_prefix, FreqSymbol, OfdmConfig,
    TimeSymbol,
};
use crate::parallel::parallel_map;
use crate::pipeline::{reduce_symbol, random_symbol, SideInfo, Technique, TechniqueParams};
use crate::rng::RngStream;

/// Channel model selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelKind {
    Awgn,
    RayleighMultipath,
}

/// Channel description for a measurement run. `snr_db` is the default
/// operating point; sweep functions override it per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelConfig {
    pub kind: ChannelKind,
    pub snr_db: f64,
    /// Multipath power-delay profile (linear, sums to one).
    pub tap_powers: Vec<f64>,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn awgn(snr_db: f64, seed: u64) -> Self {
        Self {
            kind: ChannelKind::Awgn,
            snr_db,
            tap_powers: vec![1.0],
            seed,
        }
    }

    /// Four taps decaying 3 dB per tap, normalized to unit total power.
    pub fn default_multipath_profile() -> Vec<f64> {
        let raw: Vec<f64> = (0..4).map(|l| 10f64.powf(-0.3 * l as f64)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|p| p / total).collect()
    }

    pub fn validated(self) -> Result<Self> {
        if self.tap_powers.is_empty() {
            return Err(invalid("tap_powers must be non-empty"));
        }
        if self.tap_powers.iter().any(|&p| !p.is_finite() || p < 0.0) {
            return Err(invalid("tap powers must be finite and non-negative"));
        }
        let total: f64 = self.tap_powers.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!(
                "tap powers must sum to 1, got {total}"
            )));
        }
        Ok(self)
    }
}

/// Add circular complex Gaussian noise at the requested SNR, measured
/// against the power of this signal. `snr_db = +inf` is the noiseless
/// sentinel and returns the input unchanged.
pub fn awgn<R: Rng + ?Sized>(signal: &TimeSymbol, snr_db: f64, rng: &mut R) -> Result<TimeSymbol> {
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(signal.clone());
    }
    let n = signal.samples().len();
    if n == 0 {
        return Err(invalid("AWGN over an empty signal"));
    }
    let power = signal.samples().iter().map(|s| s.norm_sqr()).sum::<f64>() / n as f64;
    if power == 0.0 {
        return Err(invalid("AWGN requires a non-zero-power signal"));
    }
    let variance = power / 10f64.powf(snr_db / 10.0);
    let per_axis = Normal::new(0.0, (variance / 2.0).sqrt())
        .map_err(|e| SimError::Numerical(format!("noise distribution: {e}")))?;
    let samples = signal
        .samples()
        .iter()
        .map(|&s| s + Complex64::new(per_axis.sample(rng), per_axis.sample(rng)))
        .collect();
    Ok(TimeSymbol::from_raw_parts(samples, signal.prefix_len()))
}

/// Draw one complex Gaussian tap realization scaled by the power profile.
pub fn rayleigh_taps<R: Rng + ?Sized>(tap_powers: &[f64], rng: &mut R) -> Vec<Complex64> {
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid sigma");
    tap_powers
        .iter()
        .map(|&p| Complex64::new(normal.sample(rng), normal.sample(rng)) * p.sqrt())
        .collect()
}

/// Push a cyclic-prefixed symbol through a multipath channel: draws an
/// i.i.d. tap realization and convolves. Returns the received symbol and
/// the realization for ideal per-subcarrier equalization.
///
/// The cyclic prefix must cover the channel memory (`prefix_len >= taps-1`)
/// so the useful part sees a clean circular convolution.
pub fn rayleigh_apply<R: Rng + ?Sized>(
    signal: &TimeSymbol,
    tap_powers: &[f64],
    rng: &mut R,
) -> Result<(TimeSymbol, Vec<Complex64>)> {
    if tap_powers.is_empty() {
        return Err(invalid("tap_powers must be non-empty"));
    }
    if signal.prefix_len() + 1 < tap_powers.len() {
        return Err(invalid(format!(
            "cyclic prefix {} shorter than channel memory {}",
            signal.prefix_len(),
            tap_powers.len() - 1
        )));
    }
    let taps = rayleigh_taps(tap_powers, rng);
    let x = signal.samples();
    let mut y = vec![Complex64::new(0.0, 0.0); x.len()];
    for (n, out) in y.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (l, &h) in taps.iter().enumerate() {
            if n >= l {
                acc += h * x[n - l];
            }
        }
        *out = acc;
    }
    Ok((
        TimeSymbol::from_raw_parts(y, signal.prefix_len()),
        taps,
    ))
}

/// Zero-forcing equalization with an ideal channel estimate: divide each
/// subcarrier by the channel frequency response of the taps.
pub fn zf_equalize(freq: &FreqSymbol, taps: &[Complex64]) -> Result<FreqSymbol> {
    let n = freq.len();
    let mut points = Vec::with_capacity(n);
    for k in 0..n {
        let mut h = Complex64::new(0.0, 0.0);
        for (l, &tap) in taps.iter().enumerate() {
            let angle = -2.0 * PI * (k * l) as f64 / n as f64;
            h += tap * Complex64::new(angle.cos(), angle.sin());
        }
        if h.norm() == 0.0 {
            return Err(SimError::Numerical(format!(
                "channel response is exactly zero at subcarrier {k}"
            )));
        }
        points.push(freq.points()[k] / h);
    }
    Ok(FreqSymbol::new(points))
}

/// Raw error counts of one measured SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkStats {
    pub bit_count: u64,
    pub bit_errors: u64,
    /// QAM constellation points carried.
    pub point_count: u64,
    /// QAM points whose 6-bit group decoded wrong (symbol errors).
    pub point_errors: u64,
}

impl LinkStats {
    pub fn ber(&self) -> f64 {
        self.bit_errors as f64 / self.bit_count as f64
    }

    pub fn ser(&self) -> f64 {
        self.point_errors as f64 / self.point_count as f64
    }
}

fn run_one_symbol(
    technique: Technique,
    params: &TechniqueParams,
    ofdm: &OfdmConfig,
    channel: &ChannelConfig,
    snr_db: f64,
    stream: RngStream,
) -> Result<LinkStats> {
    let mut rng = stream.rng();
    let bits = crate::ofdm::random_bits(&mut rng, ofdm.bits_per_ofdm_symbol());
    let freq = FreqSymbol::new(crate::ofdm::map_qam64(&bits)?);
    let (reduced, side) = reduce_symbol(&freq, technique, params)?;
    let tx = add_cyclic_prefix(&reduced, ofdm.guard_fraction)?;

    let (rx, taps) = match channel.kind {
        ChannelKind::Awgn => (tx, None),
        ChannelKind::RayleighMultipath => {
            let (faded, taps) = rayleigh_apply(&tx, &channel.tap_powers, &mut rng)?;
            (faded, Some(taps))
        }
    };
    let rx = awgn(&rx, snr_db, &mut rng)?;
    let mut rx_freq = fft_symbol(&remove_cyclic_prefix(&rx))?;
    if let Some(taps) = taps {
        rx_freq = zf_equalize(&rx_freq, &taps)?;
    }

    // Undo the transmitter's known phase rotation (ideal side information).
    match side {
        SideInfo::None => {}
        SideInfo::SlmIndex(index) => {
            let tables = crate::baselines::slm_phase_tables(&params.slm, rx_freq.len());
            let derotated: Vec<Complex64> = rx_freq
                .points()
                .iter()
                .zip(&tables[index])
                .map(|(&p, &w)| p * w.conj())
                .collect();
            rx_freq = FreqSymbol::new(derotated);
        }
        SideInfo::PtsPhases(phases) => {
            let block = rx_freq.len() / phases.len();
            let derotated: Vec<Complex64> = rx_freq
                .points()
                .iter()
                .enumerate()
                .map(|(k, &p)| p * phases[k / block].conj())
                .collect();
            rx_freq = FreqSymbol::new(derotated);
        }
    }

    let rx_bits = demap_qam64(rx_freq.points());
    let (bit_count, bit_errors) = crate::metrics::ber_count(&bits, &rx_bits)?;
    let mut point_errors = 0u64;
    for (sent, got) in bits.chunks_exact(6).zip(rx_bits.chunks_exact(6)) {
        if sent != got {
            point_errors += 1;
        }
    }
    Ok(LinkStats {
        bit_count,
        bit_errors,
        point_count: (bits.len() / 6) as u64,
        point_errors,
    })
}

/// Measure error rates over an SNR grid. Symbol i of grid point g draws
/// from stream `g * n_symbols + i` of `seed`, so the result is
/// bit-identical for any worker count.
#[allow(clippy::too_many_arguments)]
pub fn run_link(
    technique: Technique,
    params: &TechniqueParams,
    ofdm: &OfdmConfig,
    channel: &ChannelConfig,
    snr_grid_db: &[f64],
    n_symbols: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<(f64, LinkStats)>> {
    let ofdm = ofdm.validated()?;
    let channel = channel.clone().validated()?;
    if n_symbols == 0 {
        return Err(invalid("n_symbols must be >= 1"));
    }
    if ofdm.oversample != 1 {
        return Err(invalid(
            "the error-rate chain is defined at critical sampling; set oversample = 1",
        ));
    }
    let mut curve = Vec::with_capacity(snr_grid_db.len());
    for (g, &snr_db) in snr_grid_db.iter().enumerate() {
        let per_symbol = parallel_map(n_symbols, threads, |i| {
            run_one_symbol(
                technique,
                params,
                &ofdm,
                &channel,
                snr_db,
                RngStream::new(seed, (g * n_symbols + i) as u64),
            )
        });
        let mut total = LinkStats {
            bit_count: 0,
            bit_errors: 0,
            point_count: 0,
            point_errors: 0,
        };
        for stats in per_symbol {
            let stats = stats?;
            total.bit_count += stats.bit_count;
            total.bit_errors += stats.bit_errors;
            total.point_count += stats.point_count;
            total.point_errors += stats.point_errors;
        }
        curve.push((snr_db, total));
    }
    Ok(curve)
}

/// Measure a BER curve (see [`run_link`] for the determinism contract).
#[allow(clippy::too_many_arguments)]
pub fn run_ber(
    technique: Technique,
    params: &TechniqueParams,
    ofdm: &OfdmConfig,
    channel: &ChannelConfig,
    snr_grid_db: &[f64],
    n_symbols: usize,
    seed: u64,
    threads: usize,
) -> Result<BerCurve> {
    let stats = run_link(
        technique, params, ofdm, channel, snr_grid_db, n_symbols, seed, threads,
    )?;
    Ok(BerCurve {
        points: stats
            .into_iter()
            .map(|(snr_db, s)| BerPoint::new(snr_db, s.bit_count, s.bit_errors))
            .collect(),
    })
}

/// Validation helper used by sweeps that want PAPR samples and a BER in
/// one pass; re-exported for the harness.
pub fn random_reduced_symbol(
    ofdm: &OfdmConfig,
    technique: Technique,
    params: &TechniqueParams,
    seed: u64,
    stream: u64,
) -> Result<TimeSymbol> {
    let freq = random_symbol(ofdm, seed, stream)?;
    Ok(reduce_symbol(&freq, technique, params)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ofdm::{ifft_symbol, map_qam64, random_bits};

    fn ofdm64() -> OfdmConfig {
        OfdmConfig {
            n_subcarriers: 64,
            ..OfdmConfig::default()
        }
    }

    #[test]
    fn noiseless_sentinel_is_identity() {
        let symbol = TimeSymbol::new(vec![Complex64::new(1.0, -1.0); 32]);
        let mut rng = RngStream::new(1, 0).rng();
        let out = awgn(&symbol, f64::INFINITY, &mut rng).unwrap();
        assert_eq!(out, symbol);
    }

    #[test]
    fn awgn_rejects_zero_power() {
        let symbol = TimeSymbol::new(vec![Complex64::new(0.0, 0.0); 8]);
        let mut rng = RngStream::new(1, 0).rng();
        assert!(awgn(&symbol, 10.0, &mut rng).is_err());
    }

    #[test]
    fn awgn_hits_the_requested_snr() {
        let n = 1_000_000;
        let symbol = TimeSymbol::new(vec![Complex64::new(1.0, 0.0); n]);
        let mut rng = RngStream::new(42, 0).rng();
        let noisy = awgn(&symbol, 10.0, &mut rng).unwrap();
        let noise_power: f64 = noisy
            .samples()
            .iter()
            .zip(symbol.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / n as f64;
        let measured_snr_db = 10.0 * (1.0 / noise_power).log10();
        assert!(
            (measured_snr_db - 10.0).abs() < 0.1,
            "measured {measured_snr_db} dB"
        );
    }

    #[test]
    fn awgn_is_reproducible() {
        let symbol = TimeSymbol::new(vec![Complex64::new(1.0, 0.5); 64]);
        let a = awgn(&symbol, 6.0, &mut RngStream::new(9, 4).rng()).unwrap();
        let b = awgn(&symbol, 6.0, &mut RngStream::new(9, 4).rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_tap_channel_is_flat() {
        let mut rng = RngStream::new(3, 0).rng();
        let bits = random_bits(&mut rng, 6 * 64);
        let freq = FreqSymbol::new(map_qam64(&bits).unwrap());
        let time = ifft_symbol(&freq).unwrap();
        let tx = add_cyclic_prefix(&time, 0.25).unwrap();
        let (rx, taps) = rayleigh_apply(&tx, &[1.0], &mut rng).unwrap();
        assert_eq!(taps.len(), 1);
        let rx_freq = zf_equalize(&fft_symbol(&remove_cyclic_prefix(&rx)).unwrap(), &taps).unwrap();
        for (a, b) in rx_freq.points().iter().zip(freq.points()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn two_tap_noiseless_loopback_recovers_bits() {
        let mut rng = RngStream::new(8, 1).rng();
        let bits = random_bits(&mut rng, 6 * 64);
        let freq = FreqSymbol::new(map_qam64(&bits).unwrap());
        let tx = add_cyclic_prefix(&ifft_symbol(&freq).unwrap(), 0.25).unwrap();
        let (rx, taps) = rayleigh_apply(&tx, &[0.5, 0.5], &mut rng).unwrap();
        let rx_freq = zf_equalize(&fft_symbol(&remove_cyclic_prefix(&rx)).unwrap(), &taps).unwrap();
        assert_eq!(demap_qam64(rx_freq.points()), bits);
    }

    #[test]
    fn prefix_must_cover_channel_memory() {
        let symbol = TimeSymbol::new(vec![Complex64::new(1.0, 0.0); 64]);
        let mut rng = RngStream::new(1, 0).rng();
        assert!(rayleigh_apply(&symbol, &[0.5, 0.5], &mut rng).is_err());
    }

    #[test]
    fn tap_realizations_reproducible() {
        let powers = ChannelConfig::default_multipath_profile();
        let a = rayleigh_taps(&powers, &mut RngStream::new(5, 2).rng());
        let b = rayleigh_taps(&powers, &mut RngStream::new(5, 2).rng());
        assert_eq!(a, b);
        let total: f64 = powers.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_ber_is_zero() {
        let channel = ChannelConfig::awgn(f64::INFINITY, 7);
        let curve = run_ber(
            Technique::None,
            &TechniqueParams::default(),
            &ofdm64(),
            &channel,
            &[f64::INFINITY],
            20,
            7,
            2,
        )
        .unwrap();
        assert_eq!(curve.points[0].error_count, 0);
        assert_eq!(curve.points[0].ber, 0.0);
    }

    #[test]
    fn ber_identical_across_worker_counts() {
        let channel = ChannelConfig::awgn(12.0, 3);
        let args = (Technique::None, TechniqueParams::default(), ofdm64());
        let one = run_ber(args.0, &args.1, &args.2, &channel, &[10.0, 14.0], 60, 3, 1).unwrap();
        let eight = run_ber(args.0, &args.1, &args.2, &channel, &[10.0, 14.0], 60, 3, 8).unwrap();
        assert_eq!(one, eight);
    }

    #[test]
    fn ber_decreases_with_snr() {
        let channel = ChannelConfig::awgn(10.0, 9);
        let curve = run_ber(
            Technique::None,
            &TechniqueParams::default(),
            &ofdm64(),
            &channel,
            &[6.0, 10.0],
            400,
            9,
            4,
        )
        .unwrap();
        assert!(curve.points[1].ber < curve.points[0].ber);
    }

    #[test]
    fn uncompensated_peak_averaging_floors_at_high_snr() {
        // At 30 dB the clean link is error-free at this sample size while
        // the distorting technique shows its residual error floor.
        let channel = ChannelConfig::awgn(30.0, 2);
        let ofdm = OfdmConfig::default();
        let none = run_ber(
            Technique::None,
            &TechniqueParams::default(),
            &ofdm,
            &channel,
            &[30.0],
            100,
            2,
            4,
        )
        .unwrap();
        let sat = run_ber(
            Technique::Sat,
            &TechniqueParams::default(),
            &ofdm,
            &channel,
            &[30.0],
            100,
            2,
            4,
        )
        .unwrap();
        assert!(none.points[0].ber <= sat.points[0].ber);
        assert!(sat.points[0].error_count > 0, "distortion must be visible");
    }

    #[test]
    fn rayleigh_link_works_end_to_end() {
        let channel = ChannelConfig {
            kind: ChannelKind::RayleighMultipath,
            snr_db: 30.0,
            tap_powers: ChannelConfig::default_multipath_profile(),
            seed: 4,
        };
        let curve = run_ber(
            Technique::None,
            &TechniqueParams::default(),
            &ofdm64(),
            &channel,
            &[10.0, 25.0],
            200,
            4,
            4,
        )
        .unwrap();
        assert!(curve.points[1].ber < curve.points[0].ber);
    }
}
