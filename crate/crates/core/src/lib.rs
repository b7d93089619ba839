//! Steganography with cross-coupled chaotic maps.
//!
//! Payload bits go into the least significant bits of image samples chosen
//! by two coupled chaotic maps seeded with secret keys and a public coupling
//! factor. A pair of side matrices marks the samples that actually changed.
//! The crate also measures stego quality (PSNR, entropy) and detectability
//! (chi-square pairs-of-values attack).

pub mod analysis;
pub mod chaos;
pub mod cli;
pub mod codec;
pub mod error;
pub mod imagery;
pub mod keymat;

pub use analysis::{
    capacity_report, chi_square_attack, entropy_report, gamma_q, histogram_entropy,
    neighbor_diff_entropy, psnr, AttackCurve, AttackPoint, CapacityReport, EntropyReport,
    QualityReport,
};
pub use chaos::{
    bifurcation_scan, coupled_step, lyapunov_estimate, map_step, sanitize, select_positions,
    to_pixel, ChaosState, CoupledGenerator, ImageDims, MapParameter, PixelPosition,
    PositionSelector, PositionStream,
};
pub use codec::{
    bit_error_rate, decode_message, embed, encode_bytes, encode_message, extract, extract_bits,
    Message, MessagePayload, Mode, SideMatrices, StegoBundle,
};
pub use error::{Result, StegoError};
pub use imagery::{
    flip_count, load_pbm, load_pnm, save_pbm, save_pnm, BitMatrix, Channels, FlipCount, RasterImage,
};
pub use keymat::{
    keygen, simulate_exchange, validate_coupling, validate_keys, ExchangeTranscript,
    PublicCoupling, PublicKeyFile, SecretKeySet, Violation,
};
