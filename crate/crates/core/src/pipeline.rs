//! Per-symbol reduction pipeline shared by the Monte-Carlo sweeps: apply
//! one named technique to a freshly modulated symbol and collect PAPR
//! samples or training data, deterministically under any thread count.

use std::str::FromStr;

use num_complex::Complex64;

use crate::baselines::{clip, pts_reduce, slm_reduce, PtsConfig, SlmConfig};
use crate::error::{invalid, Result};
use crate::metrics::papr_db;
use crate::nn::{nn_reduce, train, Dataset, MlpModel, TrainConfig, TrainReport};
use crate::ofdm::{
    ifft_symbol, ifft_symbol_oversampled, map_qam64, random_bits, FreqSymbol, OfdmConfig,
    TimeSymbol,
};
use crate::parallel::parallel_map;
use crate::rng::RngStream;
use crate::sat::{sat_process, SatConfig};

/// Reserved stream id for model weight initialization, outside the range
/// used for data symbols.
const MODEL_INIT_STREAM: u64 = 1 << 62;

/// A PAPR reduction technique under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Technique {
    /// Unprocessed reference.
    None,
    /// Adaptive peak averaging.
    Sat,
    /// Magnitude clipping.
    Clip,
    /// Selected mapping.
    Slm,
    /// Partial transmit sequence.
    Pts,
    /// Trained envelope reducer.
    Nn,
}

impl Technique {
    pub fn name(&self) -> &'static str {
        match self {
            Technique::None => "none",
            Technique::Sat => "sat",
            Technique::Clip => "clip",
            Technique::Slm => "slm",
            Technique::Pts => "pts",
            Technique::Nn => "nn",
        }
    }

    /// All techniques in report order.
    pub fn all() -> [Technique; 6] {
        [
            Technique::None,
            Technique::Sat,
            Technique::Clip,
            Technique::Slm,
            Technique::Pts,
            Technique::Nn,
        ]
    }
}

impl FromStr for Technique {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Technique::None),
            "sat" => Ok(Technique::Sat),
            "clip" => Ok(Technique::Clip),
            "slm" => Ok(Technique::Slm),
            "pts" => Ok(Technique::Pts),
            "nn" => Ok(Technique::Nn),
            other => Err(format!(
                "unknown technique '{other}' (expected none|sat|clip|slm|pts|nn)"
            )),
        }
    }
}

/// Parameters of every technique; only the selected one is consulted.
#[derive(Debug, Clone)]
pub struct TechniqueParams {
    pub sat: SatConfig,
    /// Clipping level in dB above the rms amplitude.
    pub clip_ratio_db: f64,
    pub slm: SlmConfig,
    pub pts: PtsConfig,
    /// Trained model, required by [`Technique::Nn`].
    pub nn_model: Option<MlpModel>,
}

impl Default for TechniqueParams {
    fn default() -> Self {
        Self {
            sat: SatConfig::default(),
            clip_ratio_db: 3.0,
            slm: SlmConfig::default(),
            pts: PtsConfig::default(),
            nn_model: None,
        }
    }
}

/// Side information produced by a technique, needed to undo its rotation
/// at the receiver. Distorting techniques produce none.
#[derive(Debug, Clone, PartialEq)]
pub enum SideInfo {
    None,
    SlmIndex(usize),
    PtsPhases(Vec<Complex64>),
}

/// Apply `technique` to a frequency-domain symbol and return the
/// time-domain result (critically sampled) plus its side information.
pub fn reduce_symbol(
    freq: &FreqSymbol,
    technique: Technique,
    params: &TechniqueParams,
) -> Result<(TimeSymbol, SideInfo)> {
    match technique {
        Technique::None => Ok((ifft_symbol(freq)?, SideInfo::None)),
        Technique::Sat => {
            let (time, _) = sat_process(&ifft_symbol(freq)?, &params.sat)?;
            Ok((time, SideInfo::None))
        }
        Technique::Clip => Ok((clip(&ifft_symbol(freq)?, params.clip_ratio_db), SideInfo::None)),
        Technique::Slm => {
            let (time, index) = slm_reduce(freq, &params.slm)?;
            Ok((time, SideInfo::SlmIndex(index)))
        }
        Technique::Pts => {
            let (time, phases) = pts_reduce(freq, &params.pts)?;
            Ok((time, SideInfo::PtsPhases(phases)))
        }
        Technique::Nn => {
            let model = params
                .nn_model
                .as_ref()
                .ok_or_else(|| invalid("technique 'nn' requires a trained model"))?;
            Ok((nn_reduce(model, &ifft_symbol(freq)?)?, SideInfo::None))
        }
    }
}

/// Modulate the symbol with stream id `stream` and random payload bits.
pub fn random_symbol(ofdm: &OfdmConfig, seed: u64, stream: u64) -> Result<FreqSymbol> {
    let mut rng = RngStream::new(seed, stream).rng();
    let bits = random_bits(&mut rng, ofdm.bits_per_ofdm_symbol());
    Ok(FreqSymbol::new(map_qam64(&bits)?))
}

/// PAPR samples (dB) for `trials` independent symbols processed by one
/// technique. Bit-identical for any `threads` value: symbol i always draws
/// from stream i of `seed`.
///
/// Oversampled evaluation (`ofdm.oversample > 1`) is supported for the
/// time-domain techniques (none/sat/clip); the candidate-search and model
/// techniques are defined at critical sampling.
pub fn papr_samples(
    ofdm: &OfdmConfig,
    technique: Technique,
    params: &TechniqueParams,
    trials: usize,
    seed: u64,
    threads: usize,
) -> Result<Vec<f64>> {
    let ofdm = ofdm.validated()?;
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    if ofdm.oversample > 1
        && matches!(technique, Technique::Slm | Technique::Pts | Technique::Nn)
    {
        return Err(invalid(format!(
            "technique '{}' is defined at critical sampling; set oversample = 1",
            technique.name()
        )));
    }
    let results = parallel_map(trials, threads, |i| -> Result<f64> {
        let freq = random_symbol(&ofdm, seed, i as u64)?;
        let time = if ofdm.oversample > 1 {
            let raw = ifft_symbol_oversampled(&freq, ofdm.oversample)?;
            match technique {
                Technique::None => raw,
                Technique::Sat => sat_process(&raw, &params.sat)?.0,
                Technique::Clip => clip(&raw, params.clip_ratio_db),
                _ => unreachable!("rejected above"),
            }
        } else {
            reduce_symbol(&freq, technique, params)?.0
        };
        papr_db(&time)
    });
    results.into_iter().collect()
}

/// Mean first-pass detection threshold of the adaptive averaging stage
/// over `trials` symbols (a diagnostic for sweeping the adaptivity
/// constant).
pub fn mean_detection_threshold(
    ofdm: &OfdmConfig,
    sat: &SatConfig,
    trials: usize,
    seed: u64,
    threads: usize,
) -> Result<f64> {
    let ofdm = ofdm.validated()?;
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    let thresholds = parallel_map(trials, threads, |i| -> Result<f64> {
        let freq = random_symbol(&ofdm, seed, i as u64)?;
        let time = ifft_symbol(&freq)?;
        let mag = crate::sat::MagnitudeSeries::from_symbol(&time);
        crate::sat::adaptive_threshold(&mag, sat.k)
    });
    let values: Vec<f64> = thresholds.into_iter().collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Build the supervised envelope dataset: inputs are raw magnitude
/// envelopes, targets are the envelopes after adaptive peak averaging.
/// Both are normalized by the dataset rms, which is returned alongside.
pub fn envelope_imitation_dataset(
    ofdm: &OfdmConfig,
    sat: &SatConfig,
    count: usize,
    seed: u64,
) -> Result<(Dataset, f64)> {
    let ofdm = ofdm.validated()?;
    if count == 0 {
        return Err(invalid("dataset symbol count must be >= 1"));
    }
    let mut pairs = Vec::with_capacity(count);
    for i in 0..count {
        let freq = random_symbol(&ofdm, seed, i as u64)?;
        let time = ifft_symbol(&freq)?;
        let (processed, _) = sat_process(&time, sat)?;
        let input: Vec<f64> = time.useful().iter().map(|s| s.norm()).collect();
        let target: Vec<f64> = processed.useful().iter().map(|s| s.norm()).collect();
        pairs.push((input, target));
    }
    let mut dataset = Dataset::new(&pairs)?;
    let rms = dataset.input_rms();
    if !rms.is_finite() || rms <= 0.0 {
        return Err(invalid("dataset envelopes carry no energy"));
    }
    dataset.rescale(rms);
    Ok((dataset, rms))
}

/// Train a fresh envelope reducer on imitation data. The model's input
/// scale is set so [`nn_reduce`](crate::nn::nn_reduce) can be applied to
/// raw symbols directly.
pub fn train_envelope_reducer(
    ofdm: &OfdmConfig,
    sat: &SatConfig,
    hidden_dim: usize,
    count: usize,
    seed: u64,
    cfg: &TrainConfig,
) -> Result<(MlpModel, TrainReport)> {
    let (dataset, rms) = envelope_imitation_dataset(ofdm, sat, count, seed)?;
    let n = ofdm.n_subcarriers;
    let mut init_rng = RngStream::new(seed, MODEL_INIT_STREAM).rng();
    let mut model = MlpModel::new(n, hidden_dim, n, &mut init_rng);
    model.set_scale(rms);
    let report = train(&mut model, &dataset, cfg)?;
    Ok((model, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::papr_at_ccdf;

    fn small_ofdm() -> OfdmConfig {
        OfdmConfig {
            n_subcarriers: 64,
            ..OfdmConfig::default()
        }
    }

    #[test]
    fn papr_samples_deterministic_across_threads() {
        let params = TechniqueParams::default();
        for technique in [Technique::None, Technique::Sat, Technique::Clip, Technique::Slm] {
            let serial = papr_samples(&small_ofdm(), technique, &params, 64, 11, 1).unwrap();
            let parallel = papr_samples(&small_ofdm(), technique, &params, 64, 11, 8).unwrap();
            assert_eq!(serial, parallel, "{technique:?}");
        }
    }

    #[test]
    fn sat_lowers_the_operating_point() {
        let params = TechniqueParams::default();
        let none = papr_samples(&small_ofdm(), Technique::None, &params, 3000, 5, 4).unwrap();
        let sat = papr_samples(&small_ofdm(), Technique::Sat, &params, 3000, 5, 4).unwrap();
        let p_none = papr_at_ccdf(&none, 0.02).unwrap();
        let p_sat = papr_at_ccdf(&sat, 0.02).unwrap();
        assert!(
            p_sat < p_none,
            "adaptive averaging must lower the 2% point: {p_sat} vs {p_none}"
        );
    }

    #[test]
    fn nn_without_model_is_rejected() {
        let params = TechniqueParams::default();
        let err = papr_samples(&small_ofdm(), Technique::Nn, &params, 4, 1, 1);
        assert!(err.is_err());
    }

    #[test]
    fn technique_names_round_trip() {
        for t in Technique::all() {
            assert_eq!(t.name().parse::<Technique>().unwrap(), t);
        }
        assert!("qqq".parse::<Technique>().is_err());
    }

    #[test]
    fn oversampled_candidate_techniques_rejected() {
        let ofdm = OfdmConfig {
            oversample: 4,
            ..small_ofdm()
        };
        let params = TechniqueParams::default();
        assert!(papr_samples(&ofdm, Technique::Slm, &params, 4, 1, 1).is_err());
        assert!(papr_samples(&ofdm, Technique::None, &params, 4, 1, 1).is_ok());
    }

    #[test]
    fn imitation_dataset_is_normalized() {
        let (dataset, rms) =
            envelope_imitation_dataset(&small_ofdm(), &SatConfig::default(), 16, 3).unwrap();
        assert_eq!(dataset.len(), 16);
        assert!((dataset.input_rms() - 1.0).abs() < 1e-12);
        assert!(rms > 0.0);
    }

    #[test]
    fn trained_reducer_lowers_mean_papr_on_held_out_symbols() {
        let ofdm = small_ofdm();
        let (model, report) = train_envelope_reducer(
            &ofdm,
            &crate::sat::SatConfig::default(),
            16,
            30,
            21,
            &crate::nn::TrainConfig {
                max_epochs: 300,
                goal_mse: 1e-9,
                ..crate::nn::TrainConfig::default()
            },
        )
        .unwrap();
        assert!(report.final_mse < report.mse_history[0]);
        let params = TechniqueParams {
            nn_model: Some(model),
            ..TechniqueParams::default()
        };
        // Held-out seed: disjoint symbol streams from the training run.
        let raw = papr_samples(&ofdm, Technique::None, &params, 1000, 999, 4).unwrap();
        let reduced = papr_samples(&ofdm, Technique::Nn, &params, 1000, 999, 4).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        assert!(
            mean(&reduced) < mean(&raw),
            "reduced mean {:.3} dB vs raw mean {:.3} dB",
            mean(&reduced),
            mean(&raw)
        );
    }
}
