//! Stego quality and detectability metrics.

use std::fmt;

use crate::chaos::ImageDims;
use crate::error::{Result, StegoError};
use crate::imagery::{check_same_shape, flip_count, Channels, RasterImage};

/// Peak sample value of an 8-bit image.
pub const PEAK: f64 = 255.0;

/// Pairs of values with fewer than this many samples in total are left out
/// of the chi-square statistic.
pub const POV_MIN_COUNT: u64 = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct QualityReport {
    /// `f64::INFINITY` when the images are identical.
    pub psnr_db: f64,
    pub mse: f64,
    pub flips: usize,
    /// Embedded bits per pixel, when the payload size is known.
    pub hiding_capacity_bpp: Option<f64>,
}

impl QualityReport {
    pub fn with_payload_bits(mut self, payload_bits: usize, dims: ImageDims) -> Self {
        self.hiding_capacity_bpp = Some(payload_bits as f64 / dims.cells() as f64);
        self
    }
}

impl fmt::Display for QualityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.psnr_db.is_infinite() {
            writeln!(f, "psnr_db=inf")?;
        } else {
            writeln!(f, "psnr_db={}", self.psnr_db)?;
        }
        writeln!(f, "mse={}", self.mse)?;
        writeln!(f, "flips={}", self.flips)?;
        if let Some(bpp) = self.hiding_capacity_bpp {
            writeln!(f, "hiding_capacity_bpp={bpp}")?;
        }
        Ok(())
    }
}

pub fn psnr(cover: &RasterImage, stego: &RasterImage) -> Result<QualityReport> {
    check_same_shape(cover, stego)?;
    let squared: u64 = cover
        .samples()
        .iter()
        .zip(stego.samples())
        .map(|(&c, &s)| u64::from(c.abs_diff(s)).pow(2))
        .sum();
    let mse = squared as f64 / cover.samples().len() as f64;
    let psnr_db = if squared == 0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK * PEAK / mse).log10()
    };
    Ok(QualityReport {
        psnr_db,
        mse,
        flips: flip_count(cover, stego)?.flips,
        hiding_capacity_bpp: None,
    })
}

fn shannon_bits(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let total = total as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Shannon entropy (bits) of the 256-bin sample histogram.
pub fn histogram_entropy(image: &RasterImage) -> f64 {
    let mut counts = [0u64; 256];
    for &s in image.samples() {
        counts[s as usize] += 1;
    }
    shannon_bits(&counts)
}

/// Shannon entropy of horizontal neighbor differences, taken per channel
/// (511 bins over −255..=255).
pub fn neighbor_diff_entropy(image: &RasterImage) -> Result<f64> {
    let cols = image.dims().cols();
    if cols < 2 {
        return Err(StegoError::Domain(
            "neighbor differences need at least two columns".into(),
        ));
    }
    let ch = image.channels().count();
    let mut counts = [0u64; 511];
    for row in image.samples().chunks_exact(cols * ch) {
        for (left, right) in row.iter().zip(&row[ch..]) {
            counts[(i32::from(*right) - i32::from(*left) + 255) as usize] += 1;
        }
    }
    Ok(shannon_bits(&counts))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    pub histogram_entropy_bits: f64,
    pub diff_entropy_bits: f64,
}

pub fn entropy_report(image: &RasterImage) -> Result<EntropyReport> {
    Ok(EntropyReport {
        histogram_entropy_bits: histogram_entropy(image),
        diff_entropy_bits: neighbor_diff_entropy(image)?,
    })
}

impl fmt::Display for EntropyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "histogram_entropy_bits={}", self.histogram_entropy_bits)?;
        writeln!(f, "diff_entropy_bits={}", self.diff_entropy_bits)
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(a)` for `a > 0` (Lanczos, g = 7).
pub fn ln_gamma(a: f64) -> f64 {
    if a < 0.5 {
        // reflection: Γ(a)Γ(1−a) = π / sin(πa)
        let pi = std::f64::consts::PI;
        return (pi / (pi * a).sin()).ln() - ln_gamma(1.0 - a);
    }
    let a = a - 1.0;
    let t = a + LANCZOS_G + 0.5;
    let series = LANCZOS_COEFFS[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEFFS[0], |acc, (i, &c)| {
            acc + c / (a + (i + 1) as f64)
        });
    0.5 * (2.0 * std::f64::consts::PI).ln() + (a + 0.5) * t.ln() - t + series.ln()
}

const GAMMA_MAX_ITER: usize = 10_000;
const GAMMA_EPS: f64 = 1e-16;
const LENTZ_TINY: f64 = 1e-300;

/// Regularized upper incomplete gamma function `Q(a, x)`.
///
/// Series for `P` when `x < a + 1`, modified Lentz continued fraction for
/// `Q` otherwise.
pub fn gamma_q(a: f64, x: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) || x.is_nan() || x < 0.0 {
        return Err(StegoError::Domain(format!(
            "gamma_q needs a > 0 and x >= 0, got a = {a}, x = {x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let log_prefactor = a * x.ln() - x - ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut term = 1.0 / a;
        let mut sum = term;
        for _ in 0..GAMMA_MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * GAMMA_EPS {
                let p = (log_prefactor.exp() * sum).min(1.0);
                return Ok(1.0 - p);
            }
        }
    } else {
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / LENTZ_TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..GAMMA_MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < LENTZ_TINY {
                d = LENTZ_TINY;
            }
            c = b + an / c;
            if c.abs() < LENTZ_TINY {
                c = LENTZ_TINY;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < GAMMA_EPS {
                return Ok((log_prefactor.exp() * h).clamp(0.0, 1.0));
            }
        }
    }
    Err(StegoError::Domain(format!(
        "gamma_q did not converge for a = {a}, x = {x}"
    )))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttackPoint {
    /// Share of samples scanned, in (0, 1].
    pub fraction: f64,
    pub chi_square: f64,
    pub dof: usize,
    /// Probability that the scanned prefix carries embedded data.
    pub p_embedding: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttackCurve {
    pub points: Vec<AttackPoint>,
}

impl AttackCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fraction,chi_square,dof,p_embedding\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                p.fraction, p.chi_square, p.dof, p.p_embedding
            ));
        }
        out
    }
}

fn pov_statistic(hist: &[u64; 256]) -> Result<(f64, usize, f64)> {
    let mut chi_square = 0.0;
    let mut pairs = 0usize;
    for k in 0..128 {
        let (even, odd) = (hist[2 * k], hist[2 * k + 1]);
        if even + odd < POV_MIN_COUNT {
            continue;
        }
        let expected = (even + odd) as f64 / 2.0;
        let diff = even as f64 - expected;
        chi_square += diff * diff / expected;
        pairs += 1;
    }
    if pairs < 2 {
        return Ok((chi_square, 0, 0.0));
    }
    let dof = pairs - 1;
    let p = gamma_q(dof as f64 / 2.0, chi_square / 2.0)?;
    Ok((chi_square, dof, p))
}

/// Pairs-of-values chi-square attack over growing row-major prefixes of
/// the samples, at `step_percent`, `2·step_percent`, … up to 100 %.
///
/// A prefix with no usable pair reports `dof = 0` and `p_embedding = 0`.
pub fn chi_square_attack(image: &RasterImage, step_percent: u32) -> Result<AttackCurve> {
    if !(1..=100).contains(&step_percent) {
        return Err(StegoError::Domain(format!(
            "step must be between 1 and 100 percent, got {step_percent}"
        )));
    }
    let samples = image.samples();
    let total = samples.len();
    let mut percents: Vec<u32> = (1..)
        .map(|i| i * step_percent)
        .take_while(|&t| t <= 100)
        .collect();
    if percents.last() != Some(&100) {
        percents.push(100);
    }

    let mut hist = [0u64; 256];
    let mut scanned = 0usize;
    let mut points = Vec::with_capacity(percents.len());
    for t in percents {
        let end = (total * t as usize / 100).max(1);
        for &s in &samples[scanned..end] {
            hist[s as usize] += 1;
        }
        scanned = end;
        let (chi_square, dof, p_embedding) = pov_statistic(&hist)?;
        points.push(AttackPoint {
            fraction: f64::from(t) / 100.0,
            chi_square,
            dof,
            p_embedding,
        });
    }
    Ok(AttackCurve { points })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapacityReport {
    pub max_bits: usize,
    pub payload_bits: usize,
    pub hc_bpp: f64,
    pub expected_flip_fraction: f64,
}

/// Capacity figures for one LSB per sample: half the embedded bits are
/// expected to flip.
pub fn capacity_report(
    dims: ImageDims,
    channels: Channels,
    payload_bits: usize,
) -> Result<CapacityReport> {
    let max_bits = dims.cells() * channels.count();
    if payload_bits > max_bits {
        return Err(StegoError::Capacity(format!(
            "{payload_bits} bits exceed the {max_bits}-sample capacity"
        )));
    }
    Ok(CapacityReport {
        max_bits,
        payload_bits,
        hc_bpp: payload_bits as f64 / dims.cells() as f64,
        expected_flip_fraction: payload_bits as f64 / (2.0 * max_bits as f64),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gray(rows: usize, cols: usize, samples: Vec<u8>) -> RasterImage {
        RasterImage::new(ImageDims::new(rows, cols).unwrap(), Channels::Gray, samples).unwrap()
    }

    #[test]
    fn psnr_identical_is_infinite() {
        let a = gray(4, 4, (0..16).collect());
        let r = psnr(&a, &a).unwrap();
        assert!(r.psnr_db.is_infinite());
        assert_eq!(r.mse, 0.0);
        assert_eq!(r.flips, 0);
        assert!(r.to_string().starts_with("psnr_db=inf\n"));
    }

    #[test]
    fn psnr_black_vs_white_is_zero() {
        let a = gray(3, 3, vec![0; 9]);
        let b = gray(3, 3, vec![255; 9]);
        assert_eq!(psnr(&a, &b).unwrap().psnr_db, 0.0);
    }

    #[test]
    fn psnr_single_lsb_on_512() {
        let a = gray(512, 512, vec![100; 512 * 512]);
        let mut b = a.clone();
        b.samples_mut()[1234] = 101;
        let r = psnr(&a, &b).unwrap();
        // 10·log10(255²·262144)
        assert!((r.psnr_db - 102.3117).abs() < 0.01, "{}", r.psnr_db);
        assert_eq!(psnr(&b, &a).unwrap(), r);
    }

    #[test]
    fn psnr_rejects_mismatch() {
        let a = gray(2, 2, vec![0; 4]);
        let b = gray(2, 3, vec![0; 6]);
        assert!(psnr(&a, &b).is_err());
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(histogram_entropy(&gray(8, 8, vec![77; 64])), 0.0);
        let uniform = gray(16, 32, (0..512).map(|i| (i % 256) as u8).collect());
        assert_eq!(histogram_entropy(&uniform), 8.0);
    }

    #[test]
    fn diff_entropy_examples() {
        assert_eq!(
            neighbor_diff_entropy(&gray(4, 4, vec![9; 16])).unwrap(),
            0.0
        );
        let alternating = gray(
            3,
            5,
            (0..15)
                .map(|i| if i % 5 % 2 == 0 { 0 } else { 255 })
                .collect(),
        );
        assert_eq!(neighbor_diff_entropy(&alternating).unwrap(), 1.0);
        assert!(neighbor_diff_entropy(&gray(4, 1, vec![1; 4])).is_err());
    }

    #[test]
    fn diff_entropy_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let samples: Vec<u8> = (0..256 * 256).map(|_| rng.random()).collect();
        let img = gray(256, 256, samples.clone());

        let mut counts: HashMap<i32, u64> = HashMap::new();
        for r in 0..256 {
            for c in 0..255 {
                let d = samples[r * 256 + c + 1] as i32 - samples[r * 256 + c] as i32;
                *counts.entry(d).or_default() += 1;
            }
        }
        let n = (256 * 255) as f64;
        let oracle: f64 = counts
            .values()
            .map(|&k| -(k as f64 / n) * (k as f64 / n).log2())
            .sum();
        assert!((neighbor_diff_entropy(&img).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn diff_entropy_stays_within_channels() {
        // every channel is constant along a row, so all differences are 0
        let dims = ImageDims::new(2, 3).unwrap();
        let img = RasterImage::new(dims, Channels::Rgb, [10, 200, 30].repeat(6)).unwrap();
        assert_eq!(neighbor_diff_entropy(&img).unwrap(), 0.0);
    }

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(0.1) - 2.252_712_651_734_206).abs() < 1e-13);
    }

    #[test]
    fn gamma_q_examples() {
        for a in [0.1, 0.5, 1.0, 7.0, 60.0] {
            assert_eq!(gamma_q(a, 0.0).unwrap(), 1.0);
        }
        for x in [0.5, 1.0, 2.0, 5.0] {
            assert!((gamma_q(1.0, x).unwrap() - (-x).exp()).abs() < 1e-10);
        }
        assert!(gamma_q(0.5, 50.0).unwrap() < 1e-10);
        // Q(1/2, x) = erfc(√x); erfc(1) = 0.157299207050285...
        assert!((gamma_q(0.5, 1.0).unwrap() - 0.157_299_207_050_285_1).abs() < 1e-12);
        assert!(gamma_q(0.0, 1.0).is_err());
        assert!(gamma_q(1.0, -1.0).is_err());
        assert!(gamma_q(1.0, f64::NAN).is_err());
    }

    #[test]
    fn gamma_q_non_increasing_in_x() {
        for a in [0.5, 1.0, 3.5, 20.0, 63.5] {
            let mut prev = 1.0;
            for i in 1..200 {
                let x = i as f64 * (a + 10.0) / 100.0;
                let q = gamma_q(a, x).unwrap();
                assert!(q <= prev, "a {a} x {x}");
                if prev < 1.0 - 1e-9 && q > 1e-12 {
                    assert!(q < prev, "a {a} x {x}");
                }
                assert!((0.0..=1.0).contains(&q));
                prev = q;
            }
        }
    }

    #[test]
    fn attack_on_balanced_pairs() {
        let samples: Vec<u8> = (0..100 * 64).map(|i| (i % 64) as u8 + 40).collect();
        let img = gray(100, 64, samples);
        let curve = chi_square_attack(&img, 10).unwrap();
        assert_eq!(curve.points.len(), 10);
        for p in &curve.points {
            assert_eq!(p.chi_square, 0.0);
            assert_eq!(p.p_embedding, 1.0);
        }
    }

    #[test]
    fn attack_on_fully_randomized_lsbs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<u8> = (0..256 * 256)
            .map(|i: usize| ((i * 7 + i / 256) % 200) as u8 & 0xfe | u8::from(rng.random_bool(0.5)))
            .collect();
        let curve = chi_square_attack(&gray(256, 256, samples), 5).unwrap();
        for p in &curve.points {
            assert!(p.p_embedding > 0.9, "{p:?}");
        }
    }

    proptest! {
        #[test]
        fn psnr_is_symmetric(a in prop::collection::vec(any::<u8>(), 64), b in prop::collection::vec(any::<u8>(), 64)) {
            let (a, b) = (gray(8, 8, a), gray(8, 8, b));
            prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        }

        #[test]
        fn entropy_bounded_and_permutation_invariant(
            samples in prop::collection::vec(any::<u8>(), 1..400),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let n = samples.len();
            let h = histogram_entropy(&gray(1, n, samples.clone()));
            prop_assert!((0.0..=8.0).contains(&h));
            let mut shuffled = samples;
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let h2 = histogram_entropy(&gray(1, n, shuffled));
            prop_assert!((h - h2).abs() < 1e-12);
        }
    }

    #[test]
    fn attack_on_even_gradient() {
        // only even values: every pair maximally unbalanced
        let samples: Vec<u8> = (0..128 * 128).map(|i| ((i % 128) * 2) as u8).collect();
        let img = gray(128, 128, samples);
        let curve = chi_square_attack(&img, 25).unwrap();
        let last = curve.points.last().unwrap();
        assert_eq!(last.fraction, 1.0);
        assert!(last.p_embedding < 0.05);
        assert!(curve
            .points
            .windows(2)
            .all(|w| w[0].fraction < w[1].fraction));
    }

    #[test]
    fn attack_step_validation_and_tail() {
        let img = gray(10, 10, vec![3; 100]);
        assert!(chi_square_attack(&img, 0).is_err());
        assert!(chi_square_attack(&img, 101).is_err());
        let curve = chi_square_attack(&img, 30).unwrap();
        let fractions: Vec<f64> = curve.points.iter().map(|p| p.fraction).collect();
        assert_eq!(fractions, [0.3, 0.6, 0.9, 1.0]);
        // a single occupied pair leaves no degrees of freedom
        assert!(curve
            .points
            .iter()
            .all(|p| p.dof == 0 && p.p_embedding == 0.0));
        assert!(curve
            .to_csv()
            .starts_with("fraction,chi_square,dof,p_embedding\n0.3,"));
    }

    #[test]
    fn capacity_examples() {
        let d = ImageDims::new(512, 512).unwrap();
        let r = capacity_report(d, Channels::Gray, 131_072).unwrap();
        assert_eq!(r.hc_bpp, 0.5);
        assert_eq!(r.expected_flip_fraction, 0.25);
        let r = capacity_report(d, Channels::Gray, 0).unwrap();
        assert_eq!((r.hc_bpp, r.expected_flip_fraction), (0.0, 0.0));
        assert_eq!(
            capacity_report(d, Channels::Gray, 65_536).unwrap().hc_bpp,
            0.25
        );
        assert!(capacity_report(d, Channels::Gray, 262_145).is_err());
        assert_eq!(
            capacity_report(d, Channels::Rgb, 262_145).unwrap().max_bits,
            786_432
        );
    }
}
