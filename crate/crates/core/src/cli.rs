//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation or parse error,
//! 3 capacity or extraction error. Diagnostics go to stderr; reports and
//! CSV go to stdout or to the requested file. Secret key values are never
//! printed.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::analysis::{chi_square_attack, histogram_entropy, neighbor_diff_entropy, psnr};
use crate::chaos::{bifurcation_scan, ImageDims};
use crate::codec::{
    decode_message, embed, encode_bytes, encode_message, extract, Mode, SideMatrices, StegoBundle,
};
use crate::error::{Result, StegoError};
use crate::imagery::{load_pbm, load_pnm, save_pbm, save_pnm};
use crate::keymat::{
    keygen, regime_warnings, simulate_exchange, validate_coupling, validate_keys, PublicKeyFile,
    SecretKeySet, DEFAULT_AGREEMENT_PREFIX,
};

#[derive(Debug, Parser)]
#[command(
    name = "chaostego",
    version,
    about = "Chaotic-map LSB steganography toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a secret key file and a public key file.
    Keygen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "pub")]
        public: PathBuf,
        /// Seed for reproducible keys; random when omitted.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check key files against their invariants.
    Validate {
        #[arg(long)]
        secret: Option<PathBuf>,
        #[arg(long = "pub")]
        public: Option<PathBuf>,
    },
    /// Hide a message file in a cover image.
    Embed {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        msg: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long)]
        mode: Mode,
        /// Output base name; writes <out>.pgm|ppm, <out>.ones.pbm, <out>.zeros.pbm.
        #[arg(long)]
        out: PathBuf,
    },
    /// Recover a message from a stego bundle.
    Extract {
        #[arg(long)]
        stego: PathBuf,
        #[arg(long)]
        ones: PathBuf,
        #[arg(long)]
        zeros: PathBuf,
        #[arg(long)]
        secret: PathBuf,
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the mode recorded in the public key file.
        #[arg(long)]
        mode: Option<Mode>,
    },
    /// PSNR, flips and entropies of a cover/stego pair.
    Analyze {
        #[arg(long)]
        cover: PathBuf,
        #[arg(long)]
        stego: PathBuf,
        /// Embedded bit count, to report hiding capacity in bpp.
        #[arg(long)]
        payload_bits: Option<usize>,
        /// Also report neighbor-difference entropy.
        #[arg(long)]
        diff_entropy: bool,
    },
    /// Chi-square pairs-of-values attack, as CSV.
    Attack {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = 5)]
        step: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the key exchange between two parties.
    ExchangeSim {
        #[arg(long)]
        alice: PathBuf,
        /// Bob's secret key file; defaults to Alice's.
        #[arg(long)]
        bob: Option<PathBuf>,
        #[arg(long = "pub")]
        public: PathBuf,
        #[arg(long, default_value_t = 512)]
        rows: usize,
        #[arg(long, default_value_t = 512)]
        cols: usize,
        #[arg(long, default_value_t = DEFAULT_AGREEMENT_PREFIX)]
        k: usize,
    },
    /// Bifurcation samples of the single map, as CSV.
    Bifurcation {
        #[arg(long)]
        alpha_min: f64,
        #[arg(long)]
        alpha_max: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0.3)]
        x0: f64,
        #[arg(long, default_value_t = 1000)]
        transient: usize,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl clap::ValueEnum for Mode {
    fn value_variants<'a>() -> &'a [Self] {
        &[Mode::Ascii7, Mode::Utf16, Mode::Raw]
    }

    fn to_possible_value(&self) -> Option<clap::builder::PossibleValue> {
        Some(clap::builder::PossibleValue::new(match self {
            Mode::Ascii7 => "ascii7",
            Mode::Utf16 => "utf16",
            Mode::Raw => "raw",
        }))
    }
}

fn exit_code(e: &StegoError) -> i32 {
    match e {
        StegoError::Capacity(_)
        | StegoError::InsufficientCapacity { .. }
        | StegoError::Extract(_) => 3,
        _ => 2,
    }
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| StegoError::Parse(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String> {
    String::from_utf8(read(path)?)
        .map_err(|_| StegoError::Parse(format!("{}: not valid UTF-8", path.display())))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| StegoError::Parse(format!("{}: {e}", path.display())))
}

fn with_suffix(base: &Path, suffix: &str) -> PathBuf {
    let mut name = base.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

fn load_secret(path: &Path) -> Result<SecretKeySet> {
    SecretKeySet::from_key_file(&read_text(path)?)
}

fn load_public(path: &Path) -> Result<PublicKeyFile> {
    PublicKeyFile::from_text(&read_text(path)?)
}

/// Runs one invocation. `args` includes the program name.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{e}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{e}");
                    1
                }
            };
        }
    };
    match dispatch(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Keygen { out, public, seed } => {
            let (keys, coupling) = keygen(seed.unwrap_or_else(rand::random));
            write(&out, keys.to_key_file().as_bytes())?;
            let public_file = PublicKeyFile {
                coupling,
                mode: None,
            };
            write(&public, public_file.to_text().as_bytes())?;
            Ok(0)
        }
        Command::Validate { secret, public } => {
            if secret.is_none() && public.is_none() {
                writeln!(
                    stderr,
                    "error: nothing to validate; pass --secret and/or --pub"
                )?;
                return Ok(1);
            }
            let mut violations = Vec::new();
            if let Some(path) = secret {
                let keys = load_secret(&path)?;
                if let Err(v) = validate_keys(&keys) {
                    violations.extend(v);
                }
                for w in regime_warnings(&keys) {
                    writeln!(stderr, "warning: {w}")?;
                }
            }
            if let Some(path) = public {
                if let Err(v) = validate_coupling(load_public(&path)?.coupling) {
                    violations.extend(v);
                }
            }
            if violations.is_empty() {
                writeln!(stdout, "ok")?;
                Ok(0)
            } else {
                for v in &violations {
                    writeln!(stdout, "violation: {v}")?;
                }
                Ok(2)
            }
        }
        Command::Embed {
            cover,
            msg,
            secret,
            public,
            mode,
            out,
        } => {
            let cover = load_pnm(&read(&cover)?)?;
            let payload = match mode {
                Mode::Raw => encode_bytes(&read(&msg)?)?,
                text_mode => encode_message(&read_text(&msg)?, text_mode)?,
            };
            let keys = load_secret(&secret)?;
            let mut public_file = load_public(&public)?;
            let bundle = embed(&cover, &payload, &keys, public_file.coupling)?;

            write(
                &with_suffix(&out, &format!(".{}", bundle.stego.extension())),
                &save_pnm(&bundle.stego),
            )?;
            write(
                &with_suffix(&out, ".ones.pbm"),
                &save_pbm(&bundle.side.ones),
            )?;
            write(
                &with_suffix(&out, ".zeros.pbm"),
                &save_pbm(&bundle.side.zeros),
            )?;
            public_file.mode = Some(mode);
            write(&public, public_file.to_text().as_bytes())?;
            Ok(0)
        }
        Command::Extract {
            stego,
            ones,
            zeros,
            secret,
            public,
            out,
            mode,
        } => {
            let stego = load_pnm(&read(&stego)?)?;
            let side =
                SideMatrices::from_parts(load_pbm(&read(&ones)?)?, load_pbm(&read(&zeros)?)?)?;
            let public_file = load_public(&public)?;
            let mode = mode.or(public_file.mode).ok_or_else(|| {
                StegoError::Parse("no mode given and none recorded in the public key file".into())
            })?;
            let bundle = StegoBundle::new(stego, side, public_file.coupling, mode)?;
            let keys = load_secret(&secret)?;
            let payload = extract(&bundle, &keys)?;
            let message =
                decode_message(&payload).map_err(|e| StegoError::Extract(e.to_string()))?;
            write(&out, &message.into_bytes())?;
            Ok(0)
        }
        Command::Analyze {
            cover,
            stego,
            payload_bits,
            diff_entropy,
        } => {
            let cover = load_pnm(&read(&cover)?)?;
            let stego = load_pnm(&read(&stego)?)?;
            let mut report = psnr(&cover, &stego)?;
            if let Some(bits) = payload_bits {
                report = report.with_payload_bits(bits, cover.dims());
            }
            write!(stdout, "{report}")?;
            writeln!(
                stdout,
                "cover_histogram_entropy_bits={}",
                histogram_entropy(&cover)
            )?;
            writeln!(
                stdout,
                "stego_histogram_entropy_bits={}",
                histogram_entropy(&stego)
            )?;
            if diff_entropy {
                writeln!(
                    stdout,
                    "cover_diff_entropy_bits={}",
                    neighbor_diff_entropy(&cover)?
                )?;
                writeln!(
                    stdout,
                    "stego_diff_entropy_bits={}",
                    neighbor_diff_entropy(&stego)?
                )?;
            }
            Ok(0)
        }
        Command::Attack { image, step, out } => {
            let image = load_pnm(&read(&image)?)?;
            let csv = chi_square_attack(&image, step)?.to_csv();
            emit(out.as_deref(), csv.as_bytes(), stdout)?;
            Ok(0)
        }
        Command::ExchangeSim {
            alice,
            bob,
            public,
            rows,
            cols,
            k,
        } => {
            let alice_keys = load_secret(&alice)?;
            let bob_keys = match bob {
                Some(path) => load_secret(&path)?,
                None => alice_keys,
            };
            let coupling = load_public(&public)?.coupling;
            let dims = ImageDims::new(rows, cols)?;
            let transcript = simulate_exchange(&alice_keys, &bob_keys, coupling, dims, k)?;
            write!(stdout, "{}", transcript.to_text())?;
            Ok(0)
        }
        Command::Bifurcation {
            alpha_min,
            alpha_max,
            steps,
            x0,
            transient,
            samples,
            out,
        } => {
            let scan = bifurcation_scan(alpha_min, alpha_max, steps, x0, transient, samples)?;
            let mut csv = String::from("alpha,sample\n");
            for (alpha, orbit) in &scan {
                for v in orbit {
                    csv.push_str(&format!("{alpha},{v}\n"));
                }
            }
            emit(out.as_deref(), csv.as_bytes(), stdout)?;
            Ok(0)
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => write(path, bytes),
        None => Ok(stdout.write_all(bytes)?),
    }
}
