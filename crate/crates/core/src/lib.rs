//! Link-level OFDM simulation library built around peak-to-average power
//! ratio reduction.
//!
//! The crate models a 512-subcarrier, 64-QAM OFDM transmitter whose
//! time-domain symbols are post-processed by one of several reducers:
//!
//! * adaptive peak averaging ([`sat`]): derivative-sign template matching
//!   finds envelope peaks, a statistics-driven threshold keeps the
//!   anomalous ones and a moving-average filter flattens them;
//! * the literature baselines ([`baselines`]): magnitude clipping,
//!   selected mapping and partial transmit sequence;
//! * a trained envelope reducer ([`nn`]): a 512-30-512 perceptron that
//!   imitates the averaging stage.
//!
//! [`metrics`] provides PAPR/CCDF/BER/quality measures, [`wavelet`] the
//! optional denoising pre-filter, and [`channel`] the AWGN/Rayleigh link
//! loop. Everything that draws randomness takes a `(seed, stream)` pair
//! ([`rng::RngStream`]), which makes every sweep reproducible and
//! bit-identical under any worker count.

pub mod baselines;
pub mod channel;
pub mod error;
pub mod fft;
pub mod metrics;
pub mod nn;
pub mod ofdm;
pub mod parallel;
pub mod pipeline;
pub mod rng;
pub mod sat;
pub mod wavelet;

pub use error::{Result, SimError};
pub use ofdm::{ComplexSample, FreqSymbol, OfdmConfig, TimeSymbol};
pub use pipeline::{Technique, TechniqueParams};
