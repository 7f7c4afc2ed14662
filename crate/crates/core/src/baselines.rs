//! Literature baseline reducers for side-by-side comparison: magnitude
//! clipping, selected mapping (SLM) and partial transmit sequence (PTS).

use num_complex::Complex64;
use rand::Rng;

use crate::error::{invalid, Result};
use crate::ofdm::{ifft_symbol, FreqSymbol, TimeSymbol};
use crate::rng::RngStream;

/// Selected-mapping parameters. Candidate 0 is always the identity phase
/// sequence, so SLM can never pick something worse than the input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlmConfig {
    /// Number of candidate phase sequences (>= 1).
    pub u: usize,
    /// Seed of the fixed candidate phase tables, shared with the receiver.
    pub seed: u64,
}

impl Default for SlmConfig {
    fn default() -> Self {
        Self { u: 16, seed: 1 }
    }
}

/// Partial-transmit-sequence parameters: contiguous-block partition into
/// `v` sub-blocks, per-block phase factors searched exhaustively.
#[derive(Debug, Clone, PartialEq)]
pub struct PtsConfig {
    /// Number of contiguous sub-blocks (N must be divisible by v).
    pub v: usize,
    /// Allowed per-block phase factors; the identity vector is always in
    /// the search space because the first block is fixed to +1.
    pub phase_set: Vec<Complex64>,
}

impl Default for PtsConfig {
    fn default() -> Self {
        Self {
            v: 4,
            phase_set: quadrant_phases(),
        }
    }
}

/// The {+1, -1, +j, -j} phase alphabet.
pub fn quadrant_phases() -> Vec<Complex64> {
    vec![
        Complex64::new(1.0, 0.0),
        Complex64::new(-1.0, 0.0),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -1.0),
    ]
}

/// The {+1, -1} phase alphabet.
pub fn binary_phases() -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]
}

/// Clip every sample whose magnitude exceeds `rms * 10^(clip_ratio_db/20)`
/// down to that level, preserving phase. An infinite ratio is the "no
/// clipping" sentinel.
pub fn clip(symbol: &TimeSymbol, clip_ratio_db: f64) -> TimeSymbol {
    if clip_ratio_db.is_infinite() && clip_ratio_db > 0.0 {
        return symbol.clone();
    }
    let n = symbol.samples().len();
    if n == 0 {
        return symbol.clone();
    }
    let mean_power = symbol
        .useful()
        .iter()
        .map(|s| s.norm_sqr())
        .sum::<f64>()
        / symbol.useful_len() as f64;
    let level = mean_power.sqrt() * 10f64.powf(clip_ratio_db / 20.0);
    let samples = symbol
        .samples()
        .iter()
        .map(|&s| {
            let mag = s.norm();
            if mag > level && mag > 0.0 {
                s * (level / mag)
            } else {
                s
            }
        })
        .collect();
    TimeSymbol::from_raw_parts(samples, symbol.prefix_len())
}

/// The fixed SLM candidate phase tables for a given config and symbol
/// length. Table 0 is all-ones; tables 1..u are pseudo-random draws from
/// {+1, -1, +j, -j}, reproducible from the seed alone so transmitter and
/// receiver agree.
pub fn slm_phase_tables(cfg: &SlmConfig, n: usize) -> Vec<Vec<Complex64>> {
    let phases = quadrant_phases();
    let mut tables = Vec::with_capacity(cfg.u.max(1));
    tables.push(vec![Complex64::new(1.0, 0.0); n]);
    for candidate in 1..cfg.u.max(1) {
        let mut rng = RngStream::new(cfg.seed, candidate as u64).rng();
        tables.push(
            (0..n)
                .map(|_| phases[(rng.random::<u32>() % 4) as usize])
                .collect(),
        );
    }
    tables
}

/// Selected mapping: transform every phase-rotated candidate and keep the
/// one with the lowest PAPR. Returns the winning time symbol and the
/// candidate index (the side information).
pub fn slm_reduce(freq: &FreqSymbol, cfg: &SlmConfig) -> Result<(TimeSymbol, usize)> {
    if cfg.u == 0 {
        return Err(invalid("SLM candidate count must be >= 1"));
    }
    let tables = slm_phase_tables(cfg, freq.len());
    let mut best: Option<(f64, usize, TimeSymbol)> = None;
    for (index, table) in tables.iter().enumerate() {
        let rotated: Vec<Complex64> = freq
            .points()
            .iter()
            .zip(table)
            .map(|(&p, &w)| p * w)
            .collect();
        let time = ifft_symbol(&FreqSymbol::new(rotated))?;
        let papr = crate::metrics::papr_db(&time)?;
        // Strict comparison keeps the lowest index on ties.
        if best.as_ref().is_none_or(|(b, _, _)| papr < *b) {
            best = Some((papr, index, time));
        }
    }
    let (_, index, time) = best.expect("u >= 1 candidates");
    Ok((time, index))
}

/// Partial transmit sequence: split the subcarrier vector into `v`
/// contiguous blocks, search per-block phase factors exhaustively (first
/// block fixed to +1) and keep the minimum-PAPR combination. Returns the
/// winning time symbol and the phase vector (the side information).
pub fn pts_reduce(freq: &FreqSymbol, cfg: &PtsConfig) -> Result<(TimeSymbol, Vec<Complex64>)> {
    let n = freq.len();
    if cfg.v == 0 || !n.is_multiple_of(cfg.v) {
        return Err(invalid(format!(
            "subcarrier count {n} is not divisible into {} blocks",
            cfg.v
        )));
    }
    if cfg.phase_set.is_empty() {
        return Err(invalid("PTS phase set must be non-empty"));
    }
    let block = n / cfg.v;

    // Per-block time-domain components; any candidate is a phase-weighted
    // sum of these, so each IFFT is computed once.
    let mut components = Vec::with_capacity(cfg.v);
    for b in 0..cfg.v {
        let mut only_block = vec![Complex64::new(0.0, 0.0); n];
        only_block[b * block..(b + 1) * block]
            .copy_from_slice(&freq.points()[b * block..(b + 1) * block]);
        components.push(ifft_symbol(&FreqSymbol::new(only_block))?);
    }

    let w = cfg.phase_set.len();
    let combos = w.pow((cfg.v - 1) as u32);
    let mut best: Option<(f64, Vec<Complex64>, Vec<Complex64>)> = None;
    let mut candidate = vec![Complex64::new(0.0, 0.0); n];
    for combo in 0..combos {
        let mut phases = Vec::with_capacity(cfg.v);
        phases.push(Complex64::new(1.0, 0.0));
        let mut rest = combo;
        for _ in 1..cfg.v {
            phases.push(cfg.phase_set[rest % w]);
            rest /= w;
        }
        for x in &mut candidate {
            *x = Complex64::new(0.0, 0.0);
        }
        for (phase, component) in phases.iter().zip(&components) {
            for (acc, &c) in candidate.iter_mut().zip(component.useful()) {
                *acc += c * phase;
            }
        }
        let time = TimeSymbol::new(candidate.clone());
        let papr = crate::metrics::papr_db(&time)?;
        if best.as_ref().is_none_or(|(b, _, _)| papr < *b) {
            best = Some((papr, phases, candidate.clone()));
        }
    }
    let (_, phases, samples) = best.expect("at least one combination");
    Ok((TimeSymbol::new(samples), phases))
}
