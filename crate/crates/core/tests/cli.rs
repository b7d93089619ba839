mod common;

use std::fs;
use std::path::{Path, PathBuf};

use chaostego::cli::run;
use chaostego::keymat::format_hex_f64;
use chaostego::{save_pnm, Channels, ImageDims, SecretKeySet};
use tempfile::TempDir;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn invoke(args: &[&str]) -> Outcome {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let argv = std::iter::once("chaostego").chain(args.iter().copied());
    let code = run(argv, &mut stdout, &mut stderr);
    Outcome {
        code,
        stdout: String::from_utf8(stdout).unwrap(),
        stderr: String::from_utf8(stderr).unwrap(),
    }
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn keygen(dir: &TempDir, seed: &str) -> (String, String) {
    let (secret, public) = (p(dir, "secret.key"), p(dir, "public.key"));
    let out = invoke(&["keygen", "--out", &secret, "--pub", &public, "--seed", seed]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    (secret, public)
}

fn write_cover(path: &Path, channels: Channels) {
    let dims = ImageDims::new(48, 40).unwrap();
    let cover = common::textured_cover(common::Texture::Waves, dims, channels, 4.0, 9);
    fs::write(path, save_pnm(&cover)).unwrap();
}

fn secret_fragments(secret_path: &str) -> Vec<String> {
    let keys = SecretKeySet::from_key_file(&fs::read_to_string(secret_path).unwrap()).unwrap();
    [keys.alpha1, keys.alpha2, keys.x0, keys.y0]
        .iter()
        .flat_map(|v| [format_hex_f64(*v), format!("{v}"), format!("{v:.6}")])
        .collect()
}

fn assert_no_secrets(outcome: &Outcome, fragments: &[String]) {
    for f in fragments {
        assert!(!outcome.stdout.contains(f.as_str()), "stdout leaks {f}");
        assert!(!outcome.stderr.contains(f.as_str()), "stderr leaks {f}");
    }
}

#[test]
fn keygen_is_seed_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let (sa, pa) = keygen(&a, "42");
    let (sb, pb) = keygen(&b, "42");
    assert_eq!(fs::read(&sa).unwrap(), fs::read(&sb).unwrap());
    assert_eq!(fs::read(&pa).unwrap(), fs::read(&pb).unwrap());
    let (sc, _) = keygen(&b, "43");
    assert_ne!(fs::read(&sa).unwrap(), fs::read(&sc).unwrap());
}

fn round_trip(mode: &str, message: &[u8], channels: Channels) {
    let dir = TempDir::new().unwrap();
    let (secret, public) = keygen(&dir, "7");
    let fragments = secret_fragments(&secret);
    let cover_name = if channels == Channels::Gray {
        "cover.pgm"
    } else {
        "cover.ppm"
    };
    let cover = p(&dir, cover_name);
    write_cover(Path::new(&cover), channels);
    let msg = p(&dir, "msg.bin");
    fs::write(&msg, message).unwrap();
    let base = p(&dir, "stego");

    let out = invoke(&[
        "embed", "--cover", &cover, "--msg", &msg, "--secret", &secret, "--pub", &public, "--mode",
        mode, "--out", &base,
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_no_secrets(&out, &fragments);
    let ext = if channels == Channels::Gray {
        "pgm"
    } else {
        "ppm"
    };
    let stego = format!("{base}.{ext}");
    let (ones, zeros) = (format!("{base}.ones.pbm"), format!("{base}.zeros.pbm"));
    for f in [&stego, &ones, &zeros] {
        assert!(PathBuf::from(f).exists(), "{f} missing");
    }

    let recovered = p(&dir, "recovered.bin");
    let out = invoke(&[
        "extract", "--stego", &stego, "--ones", &ones, "--zeros", &zeros, "--secret", &secret,
        "--pub", &public, "--out", &recovered,
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_no_secrets(&out, &fragments);
    assert_eq!(fs::read(&recovered).unwrap(), message);
}

#[test]
fn embed_extract_round_trip_ascii7() {
    round_trip(
        "ascii7",
        b"Meet at the north gate at dawn.\n",
        Channels::Gray,
    );
}

#[test]
fn embed_extract_round_trip_utf16() {
    round_trip("utf16", "Grüße, 世界 ✓\n".as_bytes(), Channels::Rgb);
}

#[test]
fn embed_extract_round_trip_raw() {
    round_trip("raw", &common::random_bytes(97, 3), Channels::Gray);
}

#[test]
fn embed_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let (secret, public) = keygen(&dir, "11");
    let cover = p(&dir, "cover.pgm");
    write_cover(Path::new(&cover), Channels::Gray);
    let msg = p(&dir, "msg.txt");
    fs::write(&msg, "same input, same output").unwrap();
    let mut outputs = Vec::new();
    for base in ["one", "two"] {
        let base = p(&dir, base);
        let out = invoke(&[
            "embed", "--cover", &cover, "--msg", &msg, "--secret", &secret, "--pub", &public,
            "--mode", "ascii7", "--out", &base,
        ]);
        assert_eq!(out.code, 0);
        outputs.push(
            ["pgm", "ones.pbm", "zeros.pbm"].map(|ext| fs::read(format!("{base}.{ext}")).unwrap()),
        );
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn help_and_version_exit_zero_on_stdout() {
    for flag in ["--help", "--version"] {
        let out = invoke(&[flag]);
        assert_eq!(out.code, 0);
        assert!(!out.stdout.is_empty());
        assert!(out.stderr.is_empty());
    }
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(invoke(&[]).code, 1);
    assert_eq!(invoke(&["frobnicate"]).code, 1);
    assert_eq!(invoke(&["keygen", "--out", "x"]).code, 1);
    let out = invoke(&["attack", "--image", "x.pgm", "--bogus"]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.is_empty());
    assert!(!out.stderr.is_empty());
}

#[test]
fn validation_and_parse_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let bad = p(&dir, "bad.key");
    fs::write(&bad, "alpha1=0x1p-2\nalpha2=0x1p+0\nx0=0x1p-1\ny0=0x1p-2\n").unwrap();
    let out = invoke(&["validate", "--secret", &bad]);
    assert_eq!(out.code, 2);
    assert!(out.stdout.contains("alpha1"));
    assert!(out.stdout.contains("x0"));
    assert!(!out.stdout.contains("0x1p-2"));

    let garbage = p(&dir, "garbage.pgm");
    fs::write(&garbage, b"P5\n4 4\n255\n\x00").unwrap();
    assert_eq!(invoke(&["attack", "--image", &garbage]).code, 2);
    assert_eq!(
        invoke(&["attack", "--image", &p(&dir, "missing.pgm")]).code,
        2
    );

    let out = invoke(&["bifurcation", "--alpha-min", "0.4", "--alpha-max", "1.0"]);
    assert_eq!(out.code, 2);
}

#[test]
fn validate_reports_ok_and_regime_warnings() {
    let dir = TempDir::new().unwrap();
    let (secret, public) = keygen(&dir, "5");
    let out = invoke(&["validate", "--secret", &secret, "--pub", &public]);
    assert_eq!(out.code, 0);
    assert_eq!(out.stdout, "ok\n");
    assert_no_secrets(&out, &secret_fragments(&secret));

    let strong = p(&dir, "strong.key");
    fs::write(
        &strong,
        "alpha1=0x1.8p+1\nalpha2=0x1p+0\nx0=0x1.3p-2\ny0=0x1.7p-1\n",
    )
    .unwrap();
    let out = invoke(&["validate", "--secret", &strong]);
    assert_eq!(out.code, 0);
    assert!(out.stderr.contains("warning: alpha1"));
}

#[test]
fn utf16_rejects_characters_outside_one_code_unit() {
    let dir = TempDir::new().unwrap();
    let (secret, public) = keygen(&dir, "9");
    let cover = p(&dir, "cover.pgm");
    write_cover(Path::new(&cover), Channels::Gray);
    let msg = p(&dir, "key.txt");
    fs::write(&msg, "\u{1F511}").unwrap();
    let out = invoke(&[
        "embed",
        "--cover",
        &cover,
        "--msg",
        &msg,
        "--secret",
        &secret,
        "--pub",
        &public,
        "--mode",
        "utf16",
        "--out",
        &p(&dir, "stego"),
    ]);
    assert_eq!(out.code, 2);
}

#[test]
fn oversized_message_exits_three() {
    let dir = TempDir::new().unwrap();
    let (secret, public) = keygen(&dir, "8");
    let cover = p(&dir, "cover.pgm");
    write_cover(Path::new(&cover), Channels::Gray);
    let msg = p(&dir, "big.bin");
    fs::write(&msg, common::random_bytes(48 * 40 / 8 + 1, 1)).unwrap();
    let out = invoke(&[
        "embed",
        "--cover",
        &cover,
        "--msg",
        &msg,
        "--secret",
        &secret,
        "--pub",
        &public,
        "--mode",
        "raw",
        "--out",
        &p(&dir, "stego"),
    ]);
    assert_eq!(out.code, 3);
    assert_no_secrets(&out, &secret_fragments(&secret));
}

#[test]
fn extract_with_wrong_keys_fails_or_differs() {
    let dir = TempDir::new().unwrap();
    let (secret, public) = keygen(&dir, "21");
    let cover = p(&dir, "cover.pgm");
    write_cover(Path::new(&cover), Channels::Gray);
    let msg = p(&dir, "msg.txt");
    fs::write(&msg, "attack at dawn").unwrap();
    let base = p(&dir, "stego");
    assert_eq!(
        invoke(&[
            "embed", "--cover", &cover, "--msg", &msg, "--secret", &secret, "--pub", &public,
            "--mode", "ascii7", "--out", &base,
        ])
        .code,
        0
    );
    let other = p(&dir, "other.key");
    invoke(&[
        "keygen",
        "--out",
        &other,
        "--pub",
        &p(&dir, "other.pub"),
        "--seed",
        "22",
    ]);
    let recovered = p(&dir, "recovered.txt");
    let out = invoke(&[
        "extract",
        "--stego",
        &format!("{base}.pgm"),
        "--ones",
        &format!("{base}.ones.pbm"),
        "--zeros",
        &format!("{base}.zeros.pbm"),
        "--secret",
        &other,
        "--pub",
        &public,
        "--out",
        &recovered,
    ]);
    if out.code == 0 {
        assert_ne!(fs::read(&recovered).unwrap(), b"attack at dawn");
    } else {
        assert_eq!(out.code, 3, "{}", out.stderr);
    }
    assert_no_secrets(&out, &secret_fragments(&other));
}

#[test]
fn analyze_attack_and_bifurcation_outputs() {
    let dir = TempDir::new().unwrap();
    let cover = p(&dir, "cover.pgm");
    write_cover(Path::new(&cover), Channels::Gray);
    let out = invoke(&[
        "analyze",
        "--cover",
        &cover,
        "--stego",
        &cover,
        "--diff-entropy",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("psnr_db=inf\n"));
    assert!(out.stdout.contains("flips=0\n"));
    assert!(out.stdout.contains("cover_diff_entropy_bits="));

    let out = invoke(&["attack", "--image", &cover, "--step", "25"]);
    assert_eq!(out.code, 0);
    let lines: Vec<_> = out.stdout.lines().collect();
    assert_eq!(lines[0], "fraction,chi_square,dof,p_embedding");
    assert_eq!(lines.len(), 5);

    let csv = p(&dir, "bif.csv");
    let out = invoke(&[
        "bifurcation",
        "--alpha-min",
        "0.8",
        "--alpha-max",
        "1.8",
        "--steps",
        "3",
        "--samples",
        "4",
        "--out",
        &csv,
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 4);
}

#[test]
fn exchange_sim_reports_agreement_without_secrets() {
    let dir = TempDir::new().unwrap();
    let (secret, public) = keygen(&dir, "31");
    let fragments = secret_fragments(&secret);
    let out = invoke(&[
        "exchange-sim",
        "--alice",
        &secret,
        "--pub",
        &public,
        "--rows",
        "64",
        "--cols",
        "64",
        "--k",
        "200",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("agreement=true\n"));
    assert!(out.stdout.contains("first_divergence=none\n"));
    assert_no_secrets(&out, &fragments);

    let other = p(&dir, "other.key");
    invoke(&[
        "keygen",
        "--out",
        &other,
        "--pub",
        &p(&dir, "other.pub"),
        "--seed",
        "32",
    ]);
    let out = invoke(&[
        "exchange-sim",
        "--alice",
        &secret,
        "--bob",
        &other,
        "--pub",
        &public,
        "--rows",
        "64",
        "--cols",
        "64",
        "--k",
        "200",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.contains("agreement=false\n"));
    assert_no_secrets(&out, &fragments);
    assert_no_secrets(&out, &secret_fragments(&other));
}
