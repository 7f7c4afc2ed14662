//! The five experiment commands. Every command writes one UTF-8 CSV with a
//! fixed header and is byte-identical for a given (config, seed) at any
//! thread count.

use std::io::Write;
use std::path::{Path, PathBuf};

use papr_core::channel::{awgn, run_ber};
use papr_core::metrics::{
    ccdf_estimate, chernoff_union_bound_ber, papr_at_ccdf, QualityReport,
};
use papr_core::nn::MlpModel;
use papr_core::ofdm::ifft_symbol_oversampled;
use papr_core::pipeline::{
    papr_samples, random_symbol, train_envelope_reducer, Technique, TechniqueParams,
};
use papr_core::rng::RngStream;
use papr_core::wavelet::{denoise, denoise_report};

use crate::config::ExperimentConfig;
use crate::error::CliError;

/// Fixed-format dB / linear-quantity cells (locale-independent).
fn fmt_db(v: f64) -> String {
    if v.is_infinite() && v > 0.0 {
        "inf".to_string()
    } else {
        format!("{v:.4}")
    }
}

fn fmt_sci(v: f64) -> String {
    format!("{v:.6e}")
}

/// The documented marker for an exactly-zero-error comparison.
fn fmt_optional_db(v: Option<f64>) -> String {
    match v {
        Some(v) => fmt_db(v),
        None => "inf".to_string(),
    }
}

fn write_csv(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::runtime(format!("cannot write '{}': {e}", path.display())))
}

fn out_path(cfg: &ExperimentConfig, default_name: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(default_name))
}

fn technique_params(cfg: &ExperimentConfig) -> Result<TechniqueParams, CliError> {
    let mut params = TechniqueParams {
        sat: cfg.sat(),
        clip_ratio_db: cfg.clip_db,
        slm: cfg.slm(),
        pts: cfg.pts(),
        nn_model: None,
    };
    if cfg.techniques.contains(&Technique::Nn) {
        let model = MlpModel::load(&cfg.model).map_err(|e| {
            CliError::usage(format!(
                "technique 'nn' needs a trained model at '{}': {e}",
                cfg.model.display()
            ))
        })?;
        params.nn_model = Some(model);
    }
    Ok(params)
}

/// Collect per-technique PAPR samples at the configured trial count.
fn all_papr_samples(
    cfg: &ExperimentConfig,
    trials: usize,
) -> Result<Vec<(Technique, Vec<f64>)>, CliError> {
    let params = technique_params(cfg)?;
    let ofdm = cfg.ofdm();
    cfg.techniques
        .iter()
        .map(|&technique| {
            papr_samples(&ofdm, technique, &params, trials, cfg.seed, cfg.threads)
                .map(|samples| (technique, samples))
                .map_err(CliError::from)
        })
        .collect()
}

/// `ccdf`: empirical exceedance curves per technique, plus the 2% operating
/// point of each technique on stdout.
pub fn cmd_ccdf(cfg: &ExperimentConfig, stdout: &mut impl Write) -> Result<(), CliError> {
    let trials = cfg.trials.unwrap_or(100_000);
    let sample_sets = all_papr_samples(cfg, trials)?;
    let thresholds = cfg.ccdf_thresholds();

    let mut csv = String::from("threshold_db");
    for (technique, _) in &sample_sets {
        csv.push_str(&format!(",p_{}", technique.name()));
    }
    csv.push('\n');
    let curves: Vec<_> = sample_sets
        .iter()
        .map(|(_, samples)| ccdf_estimate(samples, &thresholds))
        .collect::<Result<_, _>>()?;
    for (i, &threshold) in thresholds.iter().enumerate() {
        csv.push_str(&fmt_db(threshold));
        for curve in &curves {
            csv.push(',');
            csv.push_str(&fmt_sci(curve.points[i].probability));
        }
        csv.push('\n');
    }
    write_csv(&out_path(cfg, "ccdf.csv"), &csv)?;

    for (technique, samples) in &sample_sets {
        let p2 = papr_at_ccdf(samples, 0.02)?;
        writeln!(stdout, "papr_db_at_2pct {} {}", technique.name(), fmt_db(p2))
            .map_err(|e| CliError::runtime(e.to_string()))?;
    }
    Ok(())
}

/// `ber`: measured BER per technique over the SNR grid, plus the
/// Chernoff-bound column for the configured constellation.
pub fn cmd_ber(cfg: &ExperimentConfig, _stdout: &mut impl Write) -> Result<(), CliError> {
    let trials = cfg.trials.unwrap_or(2_000);
    let params = technique_params(cfg)?;
    let ofdm = cfg.ofdm();
    let channel = cfg.channel_config();

    let mut columns = Vec::new();
    for &technique in &cfg.techniques {
        let curve = run_ber(
            technique,
            &params,
            &ofdm,
            &channel,
            &cfg.snr_grid_db,
            trials,
            cfg.seed,
            cfg.threads,
        )?;
        columns.push((technique, curve));
    }
    let bound = chernoff_union_bound_ber(&cfg.snr_grid_db, cfg.modulation_order)?;

    let mut csv = String::from("snr_db");
    for (technique, _) in &columns {
        csv.push_str(&format!(",ber_{}", technique.name()));
    }
    csv.push_str(",chernoff_bound_ber\n");
    for (i, &snr) in cfg.snr_grid_db.iter().enumerate() {
        csv.push_str(&fmt_db(snr));
        for (_, curve) in &columns {
            csv.push(',');
            csv.push_str(&fmt_sci(curve.points[i].ber));
        }
        csv.push(',');
        csv.push_str(&fmt_sci(bound[i].1));
        csv.push('\n');
    }
    write_csv(&out_path(cfg, "ber.csv"), &csv)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite aggregates"));
    let mid = values.len() / 2;
    if values.len().is_multiple_of(2) {
        (values[mid - 1] + values[mid]) / 2.0
    } else {
        values[mid]
    }
}

/// Median that respects the infinite-SNR flag: `None` sorts above every
/// finite value and an infinite median is reported as the flag.
fn median_optional(values: &[Option<f64>]) -> Option<f64> {
    let mut sorted: Vec<Option<f64>> = values.to_vec();
    sorted.sort_by(|a, b| match (a, b) {
        (None, None) => std::cmp::Ordering::Equal,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (Some(_), None) => std::cmp::Ordering::Less,
        (Some(x), Some(y)) => x.partial_cmp(y).expect("finite"),
    });
    let mid = sorted.len() / 2;
    if sorted.len().is_multiple_of(2) {
        match (sorted[mid - 1], sorted[mid]) {
            (Some(x), Some(y)) => Some((x + y) / 2.0),
            _ => None,
        }
    } else {
        sorted[mid]
    }
}

/// `denoise-eval`: per (family, levels, input-SNR), the median MSE/SNR/PSNR
/// of the noisy and the denoised signal against the clean one. Symbols are
/// synthesized at `denoise_oversample` so the clean signal is band-limited;
/// at critical sampling the symbol is spectrally white and wavelet
/// thresholding has nothing to separate.
pub fn cmd_denoise_eval(cfg: &ExperimentConfig, _stdout: &mut impl Write) -> Result<(), CliError> {
    let trials = cfg.trials.unwrap_or(100);
    let ofdm = cfg.ofdm();
    let mut csv = String::from(
        "family,levels,input_snr_db,mse_before,mse_after,snr_db_before,snr_db_after,\
         psnr_db_before,psnr_db_after\n",
    );
    for &family in &cfg.families {
        let family_name = match family {
            papr_core::wavelet::WaveletFamily::Haar => "haar",
            papr_core::wavelet::WaveletFamily::Db4 => "db4",
        };
        for &levels in &cfg.levels {
            for &input_snr in &cfg.input_snrs_db {
                let reports: Vec<(QualityReport, QualityReport)> =
                    papr_core::parallel::parallel_map(trials, cfg.threads, |i| {
                        let freq = random_symbol(&ofdm, cfg.seed, i as u64)?;
                        let clean = ifft_symbol_oversampled(&freq, cfg.denoise_oversample)?;
                        let mut rng = RngStream::new(cfg.seed.wrapping_add(1), i as u64).rng();
                        let noisy = awgn(&clean, input_snr, &mut rng)?;
                        let denoised = denoise(&noisy, family, levels, cfg.rule)?;
                        denoise_report(&clean, &noisy, &denoised)
                    })
                    .into_iter()
                    .collect::<Result<_, _>>()?;

                let mut mse_before: Vec<f64> = reports.iter().map(|(b, _)| b.mse).collect();
                let mut mse_after: Vec<f64> = reports.iter().map(|(_, a)| a.mse).collect();
                let snr_before: Vec<Option<f64>> =
                    reports.iter().map(|(b, _)| b.snr_db).collect();
                let snr_after: Vec<Option<f64>> = reports.iter().map(|(_, a)| a.snr_db).collect();
                let psnr_before: Vec<Option<f64>> =
                    reports.iter().map(|(b, _)| b.psnr_db).collect();
                let psnr_after: Vec<Option<f64>> =
                    reports.iter().map(|(_, a)| a.psnr_db).collect();

                csv.push_str(&format!(
                    "{family_name},{levels},{},{},{},{},{},{},{}\n",
                    fmt_db(input_snr),
                    fmt_sci(median(&mut mse_before)),
                    fmt_sci(median(&mut mse_after)),
                    fmt_optional_db(median_optional(&snr_before)),
                    fmt_optional_db(median_optional(&snr_after)),
                    fmt_optional_db(median_optional(&psnr_before)),
                    fmt_optional_db(median_optional(&psnr_after)),
                ));
            }
        }
    }
    write_csv(&out_path(cfg, "denoise_eval.csv"), &csv)
}

/// `train-nn`: train the envelope reducer on freshly generated imitation
/// pairs, write the model file and the loss history. A run that does not
/// reach the goal still writes both artifacts and exits with the
/// non-convergence code.
pub fn cmd_train_nn(cfg: &ExperimentConfig, stdout: &mut impl Write) -> Result<(), CliError> {
    let count = cfg.trials.unwrap_or(100);
    let train_cfg = cfg.train();
    let (model, report) = train_envelope_reducer(
        &cfg.ofdm(),
        &cfg.sat(),
        cfg.nn_hidden,
        count,
        cfg.seed,
        &train_cfg,
    )?;

    model
        .save(&cfg.model)
        .map_err(|e| CliError::runtime(format!("cannot write model: {e}")))?;
    let mut csv = String::from("epoch,mse\n");
    for (i, mse) in report.mse_history.iter().enumerate() {
        csv.push_str(&format!("{},{}\n", i + 1, fmt_sci(*mse)));
    }
    write_csv(&out_path(cfg, "train_history.csv"), &csv)?;

    writeln!(
        stdout,
        "trained on {count} symbols: final mse {} after {} epochs (goal {})",
        fmt_sci(report.final_mse),
        report.epochs_used,
        fmt_sci(train_cfg.goal_mse),
    )
    .map_err(|e| CliError::runtime(e.to_string()))?;

    if report.reached(train_cfg.goal_mse) {
        Ok(())
    } else {
        Err(CliError::non_convergence(format!(
            "training stopped at mse {} after {} epochs without reaching goal {} \
             (model and history files were written)",
            fmt_sci(report.final_mse),
            report.epochs_used,
            fmt_sci(train_cfg.goal_mse)
        )))
    }
}

/// `compare`: one row per technique with its PAPR at the 2% exceedance
/// probability and the relative reduction against the unprocessed
/// reference, computed as (conventional - technique) / conventional * 100.
pub fn cmd_compare(cfg: &ExperimentConfig, _stdout: &mut impl Write) -> Result<(), CliError> {
    let trials = cfg.trials.unwrap_or(100_000);
    let mut cfg = cfg.clone();
    if !cfg.techniques.contains(&Technique::None) {
        // The unprocessed reference anchors the reduction column.
        cfg.techniques.insert(0, Technique::None);
    }
    let sample_sets = all_papr_samples(&cfg, trials)?;
    let conventional = sample_sets
        .iter()
        .find(|(t, _)| *t == Technique::None)
        .map(|(_, samples)| papr_at_ccdf(samples, 0.02))
        .expect("reference inserted above")?;

    let mut csv = String::from("technique,data_source,papr_db_at_2pct,reduction_percent\n");
    for (technique, samples) in &sample_sets {
        let point = papr_at_ccdf(samples, 0.02)?;
        let reduction = (conventional - point) / conventional * 100.0;
        csv.push_str(&format!(
            "{},generated,{},{:.2}\n",
            technique.name(),
            fmt_db(point),
            reduction
        ));
    }
    write_csv(&out_path(&cfg, "compare.csv"), &csv)
}
