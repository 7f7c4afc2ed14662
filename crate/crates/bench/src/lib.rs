//! Shared fixtures for the pipeline benchmarks.

use papr_core::ofdm::{ifft_symbol, map_qam64, random_bits, FreqSymbol, TimeSymbol};
use papr_core::rng::RngStream;

/// A freshly modulated 64-QAM subcarrier vector.
pub fn frequency_symbol(n: usize, seed: u64) -> FreqSymbol {
    let mut rng = RngStream::new(seed, 0).rng();
    FreqSymbol::new(map_qam64(&random_bits(&mut rng, 6 * n)).expect("valid bits"))
}

/// Its critically sampled time-domain form.
pub fn time_symbol(n: usize, seed: u64) -> TimeSymbol {
    ifft_symbol(&frequency_symbol(n, seed)).expect("power-of-two length")
}
