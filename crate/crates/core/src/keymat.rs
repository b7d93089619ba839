//! Key material: the four pre-shared secret reals, the public coupling
//! factor, their text file formats, and a structural simulation of the
//! two-party exchange.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::chaos::{select_positions, ImageDims, MapParameter, PositionStream};
use crate::codec::{Mode, SideMatrices};
use crate::error::{Result, StegoError};

/// Default length of the position prefix compared by [`simulate_exchange`].
pub const DEFAULT_AGREEMENT_PREFIX: usize = 500;

/// Map parameters above this value make `x = 1` an attracting fixed point
/// (multiplier `4/alpha²`), so the orbit stops being chaotic.
pub const CHAOTIC_ALPHA_LIMIT: f64 = 2.0;

/// The secret reals `(alpha1, alpha2, x0, y0)` seeding the coupled maps.
///
/// Fields are unchecked; [`validate_keys`] reports every violated bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecretKeySet {
    pub alpha1: f64,
    pub alpha2: f64,
    pub x0: f64,
    pub y0: f64,
}

/// The coupling factor `R`, exchanged in the clear.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PublicCoupling(f64);

/// One violated key invariant. Never carries the offending value, so it is
/// safe to print.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub field: &'static str,
    pub reason: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

pub fn validate_keys(keys: &SecretKeySet) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    for (field, alpha) in [("alpha1", keys.alpha1), ("alpha2", keys.alpha2)] {
        if !(alpha.is_finite() && alpha > 0.5) {
            violations.push(Violation {
                field,
                reason: "must be a finite value greater than 0.5",
            });
        }
    }
    for (field, seed) in [("x0", keys.x0), ("y0", keys.y0)] {
        if !(seed > 0.0 && seed < 1.0) {
            violations.push(Violation {
                field,
                reason: "must lie strictly between 0 and 1",
            });
        } else if seed == 0.5 {
            violations.push(Violation {
                field,
                reason: "must differ from 0.5",
            });
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

pub fn validate_coupling(coupling: PublicCoupling) -> std::result::Result<(), Vec<Violation>> {
    let r = coupling.value();
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(vec![Violation {
            field: "R",
            reason: "must satisfy 0 < R <= 1",
        }])
    }
}

/// Valid keys whose orbit is not guaranteed to be chaotic. Advisory only.
pub fn regime_warnings(keys: &SecretKeySet) -> Vec<Violation> {
    [("alpha1", keys.alpha1), ("alpha2", keys.alpha2)]
        .into_iter()
        .filter(|(_, a)| *a >= CHAOTIC_ALPHA_LIMIT)
        .map(|(field, _)| Violation {
            field,
            reason:
                "at or above 2 the map has an attracting fixed point; position streams may stall",
        })
        .collect()
}

fn violations_error(violations: Vec<Violation>) -> StegoError {
    let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
    StegoError::Domain(format!("invalid key material: {}", text.join("; ")))
}

impl SecretKeySet {
    /// Both map parameters, or a domain error listing every violation.
    pub fn map_parameters(&self) -> Result<(MapParameter, MapParameter)> {
        validate_keys(self).map_err(violations_error)?;
        Ok((
            MapParameter::new(self.alpha1)?,
            MapParameter::new(self.alpha2)?,
        ))
    }

    /// Serialized key file: one `name=value` line per secret, hex floats.
    pub fn to_key_file(&self) -> String {
        format!(
            "alpha1={}\nalpha2={}\nx0={}\ny0={}\n",
            format_hex_f64(self.alpha1),
            format_hex_f64(self.alpha2),
            format_hex_f64(self.x0),
            format_hex_f64(self.y0)
        )
    }

    pub fn from_key_file(text: &str) -> Result<Self> {
        let mut fields = [None; 4];
        for (name, value) in key_value_lines(text)? {
            let slot = match name {
                "alpha1" => 0,
                "alpha2" => 1,
                "x0" => 2,
                "y0" => 3,
                other => return Err(StegoError::Parse(format!("unknown key `{other}`"))),
            };
            if fields[slot].is_some() {
                return Err(StegoError::Parse(format!("duplicate key `{name}`")));
            }
            fields[slot] = Some(parse_hex_f64(name, value)?);
        }
        let take = |i: usize, name: &str| {
            fields[i].ok_or_else(|| StegoError::Parse(format!("missing key `{name}`")))
        };
        Ok(Self {
            alpha1: take(0, "alpha1")?,
            alpha2: take(1, "alpha2")?,
            x0: take(2, "x0")?,
            y0: take(3, "y0")?,
        })
    }
}

impl PublicCoupling {
    pub fn new(r: f64) -> Self {
        Self(r)
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn checked(self) -> Result<Self> {
        validate_coupling(self).map_err(violations_error)?;
        Ok(self)
    }
}

/// Contents of the public key file: `R` plus the optional mode tag written
/// when a stego bundle is produced.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PublicKeyFile {
    pub coupling: PublicCoupling,
    pub mode: Option<Mode>,
}

impl PublicKeyFile {
    pub fn to_text(&self) -> String {
        let mut text = format!("R={}\n", format_hex_f64(self.coupling.value()));
        if let Some(mode) = self.mode {
            text.push_str(&format!("mode={mode}\n"));
        }
        text
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut coupling = None;
        let mut mode = None;
        for (name, value) in key_value_lines(text)? {
            match name {
                "R" if coupling.is_none() => {
                    coupling = Some(PublicCoupling::new(parse_hex_f64(name, value)?))
                }
                "mode" if mode.is_none() => mode = Some(value.parse::<Mode>()?),
                "R" | "mode" => return Err(StegoError::Parse(format!("duplicate key `{name}`"))),
                other => return Err(StegoError::Parse(format!("unknown key `{other}`"))),
            }
        }
        Ok(Self {
            coupling: coupling.ok_or_else(|| StegoError::Parse("missing key `R`".into()))?,
            mode,
        })
    }
}

fn key_value_lines(text: &str) -> Result<Vec<(&str, &str)>> {
    // error messages name the line, never its content: it may hold a secret
    text.lines()
        .enumerate()
        .map(|(i, line)| {
            line.split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| StegoError::Parse(format!("line {}: expected `name=value`", i + 1)))
        })
        .collect()
}

fn parse_hex_f64(name: &str, value: &str) -> Result<f64> {
    hexf_parse::parse_hexf64(value, false).map_err(|e| {
        StegoError::Parse(format!(
            "`{name}` is not an exact hexadecimal float literal ({e})"
        ))
    })
}

/// Exact hexadecimal rendering of a binary64 value, e.g. `0x1.4p+1`.
pub fn format_hex_f64(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sign = if v.is_sign_negative() { "-" } else { "" };
    if v == 0.0 {
        return format!("{sign}0x0p+0");
    }
    let bits = v.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i32;
    let fraction = bits & ((1u64 << 52) - 1);
    let (lead, exponent) = if biased == 0 {
        (0, -1022)
    } else {
        (1, biased - 1023)
    };
    let digits = format!("{fraction:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{exponent:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{exponent:+}")
    }
}

/// Grid side and position count a generated key must fill before it is
/// accepted: half of a 64×64 grid.
pub const KEYGEN_PROBE_SIDE: usize = 64;
pub const KEYGEN_PROBE_COUNT: usize = 2048;

/// Seeded key generation inside the map's chaotic range.
///
/// `alpha` is drawn from (0.6, 1.9], the seeds from (0.01, 0.99) minus
/// [0.499, 0.501], and `R` from (0.99, 1]. A small share of such draws
/// lands on a periodic orbit of the coupled maps; candidates that cannot
/// supply [`KEYGEN_PROBE_COUNT`] distinct cells on the probe grid are
/// discarded and the next draw from the same stream is tried.
pub fn keygen(seed: u64) -> (SecretKeySet, PublicCoupling) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probe = ImageDims::new(KEYGEN_PROBE_SIDE, KEYGEN_PROBE_SIDE).expect("nonzero probe grid");
    loop {
        let (keys, coupling) = draw_candidate(&mut rng);
        if select_positions(&keys, coupling, probe, KEYGEN_PROBE_COUNT).is_ok() {
            return (keys, coupling);
        }
    }
}

fn draw_candidate(rng: &mut ChaCha8Rng) -> (SecretKeySet, PublicCoupling) {
    let mut open_lower = |lo: f64, hi: f64| loop {
        let v = rng.random_range(lo..=hi);
        if v > lo {
            break v;
        }
    };
    let alpha1 = open_lower(0.6, 1.9);
    let alpha2 = open_lower(0.6, 1.9);
    let mut seed_value = || loop {
        let v = open_lower(0.01, 0.99);
        if v < 0.99 && !(0.499..=0.501).contains(&v) {
            break v;
        }
    };
    let x0 = seed_value();
    let y0 = seed_value();
    let r = open_lower(0.99, 1.0);
    (
        SecretKeySet {
            alpha1,
            alpha2,
            x0,
            y0,
        },
        PublicCoupling::new(r),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MessageKind {
    PublicCoupling,
    SideMatrices,
}

/// A message observed on the insecure channel. Payloads are recorded only
/// as SHA-256 digests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChannelEvent {
    pub sender: Party,
    pub kind: MessageKind,
    pub payload_digest: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExchangeTranscript {
    pub events: Vec<ChannelEvent>,
    pub agreement: bool,
    /// First index where the two position prefixes differ.
    pub first_divergence: Option<usize>,
    /// Bob's positions that land on cells Alice marked in her matrices.
    pub receiver_hits: usize,
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        })
    }
}

impl fmt::Display for MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MessageKind::PublicCoupling => "public-coupling",
            MessageKind::SideMatrices => "side-matrices",
        })
    }
}

impl ExchangeTranscript {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&format!(
                "event={},{},{}\n",
                e.sender, e.kind, e.payload_digest
            ));
        }
        out.push_str(&format!("agreement={}\n", self.agreement));
        match self.first_divergence {
            Some(i) => out.push_str(&format!("first_divergence={i}\n")),
            None => out.push_str("first_divergence=none\n"),
        }
        out.push_str(&format!("receiver_hits={}\n", self.receiver_hits));
        out
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Runs the exchange between two parties holding (possibly different)
/// pre-shared secrets.
///
/// Bob publishes `R`; each side derives its own first-`k` positions on a
/// grid of `dims`; Alice sends probe side matrices marking her positions.
/// Agreement holds iff both prefixes are identical.
pub fn simulate_exchange(
    alice_keys: &SecretKeySet,
    bob_keys: &SecretKeySet,
    coupling: PublicCoupling,
    dims: ImageDims,
    k: usize,
) -> Result<ExchangeTranscript> {
    alice_keys.map_parameters()?;
    bob_keys.map_parameters()?;
    let coupling = coupling.checked()?;

    let mut events = vec![ChannelEvent {
        sender: Party::Bob,
        kind: MessageKind::PublicCoupling,
        payload_digest: sha256_hex(format_hex_f64(coupling.value()).as_bytes()),
    }];

    let (alice, bob) = std::thread::scope(|s| {
        let bob = s.spawn(|| select_positions(bob_keys, coupling, dims, k));
        let alice = select_positions(alice_keys, coupling, dims, k);
        (alice, bob.join().expect("receiver thread panicked"))
    });
    let (alice, bob): (PositionStream, PositionStream) = (alice?, bob?);

    let mut side = SideMatrices::new(dims);
    for (i, p) in alice.iter().enumerate() {
        side.mark(p.row - 1, p.col - 1, i % 2 == 0)?;
    }
    let mut payload = side.ones.to_pbm();
    payload.extend(side.zeros.to_pbm());
    events.push(ChannelEvent {
        sender: Party::Alice,
        kind: MessageKind::SideMatrices,
        payload_digest: sha256_hex(&payload),
    });

    let receiver_hits = bob
        .iter()
        .filter(|p| side.is_changed(p.row - 1, p.col - 1).unwrap_or(false))
        .count();
    let first_divergence = alice.iter().zip(bob.iter()).position(|(a, b)| a != b);

    Ok(ExchangeTranscript {
        events,
        agreement: first_divergence.is_none(),
        first_divergence,
        receiver_hits,
    })
}
