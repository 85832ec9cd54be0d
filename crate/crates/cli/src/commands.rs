//! Subcommand implementations. Each computes its artifacts in memory, writes
//! them under the output directory and returns a short stdout summary.

use std::path::{Path, PathBuf};

use hdqkd::codebook::{codebook_state, CodebookLabel};
use hdqkd::hilbert::StateDumpEntry;
use hdqkd::protocol::{
    otp_encrypt, qber, run_bb84, sift, sift_stats, transcript_ndjson, Bb84Config, DetectorKind,
    ProtocolSymbol, SiftStats, SiftedKey,
};
use hdqkd::security::{
    build_report_with, codebook_overlap_matrix, estimate_crosstalk, exact_crosstalk,
    fidelity_from_matrix, fidelity_std_error, qber_bound, CrosstalkMatrix, Matrix8,
    SecurityReport, Verdict,
};
use serde::Serialize;

use crate::config::{OtpArgs, RunConfig};
use crate::error::{CliError, CliResult};
use crate::render;

/// Codebook dimension.
pub const DIMENSION: u32 = 4;

/// Jitter draws for the Born-rule expectation written next to estimates.
const EXPECTATION_SAMPLES: usize = 2000;

fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serialises");
    s.push('\n');
    s
}

fn write_json<T: Serialize>(dir: &Path, name: &str, v: &T) -> CliResult<PathBuf> {
    let p = dir.join(name);
    write_file(&p, to_json(v).as_bytes())?;
    Ok(p)
}

fn write_common(cfg: &RunConfig) -> CliResult<()> {
    ensure_dir(&cfg.output_dir)?;
    write_json(&cfg.output_dir, "run_config.json", cfg)?;
    if cfg.dump_state {
        write_json(&cfg.output_dir, "states.json", &state_dump(cfg.subspace_l))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct LabelledState {
    pub label: CodebookLabel,
    pub amplitudes: Vec<StateDumpEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StateDump {
    pub subspace_l: u32,
    pub states: Vec<LabelledState>,
}

pub fn state_dump(l: u32) -> StateDump {
    StateDump {
        subspace_l: l,
        states: CodebookLabel::ALL
            .iter()
            .map(|&label| LabelledState {
                label,
                amplitudes: codebook_state(label, l).dump(),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrosstalkSummary {
    pub preset: String,
    pub subspace_l: u32,
    pub trials_per_mode: u64,
    pub seed: u64,
    pub labels: Vec<CodebookLabel>,
    pub entries: Matrix8,
    pub std_errors: Matrix8,
    /// Born-rule expectation for the same imperfection model.
    pub expected: Matrix8,
    pub fidelity: f64,
    pub fidelity_std_error: f64,
    pub off_basis_mean: f64,
}

pub struct CrosstalkRun {
    pub matrix: CrosstalkMatrix,
    pub summary: CrosstalkSummary,
}

pub fn crosstalk(cfg: &RunConfig) -> CliResult<CrosstalkRun> {
    let model = &cfg.preset_data.imperfections;
    let l = cfg.subspace_l;
    let matrix = estimate_crosstalk(model, l, cfg.trials_per_mode, cfg.seed)?;
    let expected = if model.is_ideal() {
        codebook_overlap_matrix(l)?
    } else {
        exact_crosstalk(model, l, EXPECTATION_SAMPLES, cfg.seed)?
    };
    let summary = CrosstalkSummary {
        preset: cfg.preset.clone(),
        subspace_l: l,
        trials_per_mode: cfg.trials_per_mode,
        seed: cfg.seed,
        labels: CodebookLabel::ALL.to_vec(),
        entries: matrix.entries,
        std_errors: matrix.std_errors,
        expected: expected.entries,
        fidelity: fidelity_from_matrix(&matrix),
        fidelity_std_error: fidelity_std_error(&matrix),
        off_basis_mean: matrix.off_basis_mean(),
    };
    Ok(CrosstalkRun { matrix, summary })
}

pub fn cmd_crosstalk(cfg: &RunConfig) -> CliResult<String> {
    write_common(cfg)?;
    let run = crosstalk(cfg)?;
    let dir = &cfg.output_dir;
    write_file(&dir.join("crosstalk.csv"), run.matrix.to_csv().as_bytes())?;
    write_json(dir, "crosstalk.json", &run.summary)?;
    let text = render::heatmap(&run.matrix);
    write_file(&dir.join("heatmap.txt"), text.as_bytes())?;
    Ok(format!(
        "{text}mean same-basis fidelity {:.4} ± {:.4}, mean off-basis {:.4}\n",
        run.summary.fidelity, run.summary.fidelity_std_error, run.summary.off_basis_mean
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct SecuritySummary {
    pub config: RunConfig,
    pub experiment: SecurityReport,
    pub ideal: SecurityReport,
    pub crosstalk: CrosstalkSummary,
}

pub fn security(cfg: &RunConfig) -> CliResult<SecuritySummary> {
    let run = crosstalk(cfg)?;
    let experiment = build_report_with(&run.matrix, DIMENSION, cfg.mutual_info_variant)?;
    let ideal = build_report_with(
        &codebook_overlap_matrix(cfg.subspace_l)?,
        DIMENSION,
        cfg.mutual_info_variant,
    )?;
    Ok(SecuritySummary {
        config: cfg.clone(),
        experiment,
        ideal,
        crosstalk: run.summary,
    })
}

pub fn cmd_security(cfg: &RunConfig) -> CliResult<String> {
    write_common(cfg)?;
    let s = security(cfg)?;
    write_json(&cfg.output_dir, "security.json", &s)?;
    let table = render::security_table(&s.experiment, &s.ideal);
    write_file(&cfg.output_dir.join("security.txt"), table.as_bytes())?;
    Ok(table)
}

#[derive(Debug, Clone, Serialize)]
pub struct Bb84Summary {
    pub config: RunConfig,
    pub stats: SiftStats,
    pub key_bits: usize,
    /// Symbol error rate of the sifted keys; absent when nothing was retained.
    pub qber: Option<f64>,
    pub qber_bound: Option<f64>,
    pub verdict: Option<Verdict>,
}

pub struct Bb84Run {
    pub transcript: Vec<ProtocolSymbol>,
    pub alice: SiftedKey,
    pub bob: SiftedKey,
    pub summary: Bb84Summary,
}

fn bb84_config(cfg: &RunConfig, detector: DetectorKind) -> Bb84Config {
    Bb84Config {
        n_symbols: cfg.n_symbols,
        subspace_l: cfg.subspace_l,
        detector,
        eve: cfg.eve,
        imperfections: cfg.preset_data.imperfections,
        source: cfg.source,
        seed: cfg.seed,
    }
}

pub fn bb84(cfg: &RunConfig, detector: DetectorKind) -> CliResult<Bb84Run> {
    let transcript = run_bb84(&bb84_config(cfg, detector))?;
    let (alice, bob) = sift(&transcript);
    let q = if alice.is_empty() { None } else { Some(qber(&alice, &bob)?) };
    let bound = qber_bound(DIMENSION);
    let verdict = match (q, bound) {
        (Some(q), Some(b)) => Some(if q < b { Verdict::Secure } else { Verdict::Insecure }),
        _ => None,
    };
    let summary = Bb84Summary {
        config: RunConfig { detector, ..cfg.clone() },
        stats: sift_stats(&transcript),
        key_bits: alice.len(),
        qber: q,
        qber_bound: bound,
        verdict,
    };
    Ok(Bb84Run {
        transcript,
        alice,
        bob,
        summary,
    })
}

pub fn cmd_bb84(cfg: &RunConfig) -> CliResult<String> {
    write_common(cfg)?;
    let run = bb84(cfg, cfg.detector)?;
    let dir = &cfg.output_dir;
    write_file(&dir.join("transcript.ndjson"), transcript_ndjson(&run.transcript).as_bytes())?;
    for (name, key) in [("alice_key", &run.alice), ("bob_key", &run.bob)] {
        let bytes = key.to_bytes();
        write_file(&dir.join(format!("{name}.bin")), &bytes)?;
        write_file(&dir.join(format!("{name}.hex")), format!("{}\n", hex::encode(&bytes)).as_bytes())?;
    }
    write_json(dir, "bb84_summary.json", &run.summary)?;
    let s = &run.summary;
    Ok(format!(
        "{} symbols, {} retained ({:.4} per emitted photon), key {} bits, QBER {}\n",
        s.stats.n_symbols,
        s.stats.retained,
        s.stats.sift_fraction,
        s.key_bits,
        s.qber.map_or_else(|| "n/a".to_string(), |q| format!("{q:.4}")),
    ))
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub config: RunConfig,
    pub deterministic: SiftStats,
    pub filter: SiftStats,
    /// Deterministic over filter sift fraction.
    pub ratio: Option<f64>,
}

pub fn compare_detectors(cfg: &RunConfig) -> CliResult<CompareSummary> {
    let det = bb84(cfg, DetectorKind::Deterministic)?.summary.stats;
    let fil = bb84(cfg, DetectorKind::Filter)?.summary.stats;
    let ratio = (fil.sift_fraction > 0.0).then(|| det.sift_fraction / fil.sift_fraction);
    Ok(CompareSummary {
        config: cfg.clone(),
        deterministic: det,
        filter: fil,
        ratio,
    })
}

pub fn cmd_compare_detectors(cfg: &RunConfig) -> CliResult<String> {
    write_common(cfg)?;
    let c = compare_detectors(cfg)?;
    write_json(&cfg.output_dir, "compare.json", &c)?;
    Ok(format!(
        "deterministic sift fraction {:.4}\nfilter sift fraction        {:.4}\nratio                        {}\n",
        c.deterministic.sift_fraction,
        c.filter.sift_fraction,
        c.ratio.map_or_else(|| "n/a".to_string(), |r| format!("{r:.3}")),
    ))
}

/// Reads a key file: hex text when the name ends in `.hex`, raw bytes otherwise.
pub fn read_key(path: &Path) -> CliResult<SiftedKey> {
    let raw = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bytes = if path.extension().is_some_and(|e| e == "hex") {
        let text = String::from_utf8_lossy(&raw);
        hex::decode(text.trim())
            .map_err(|e| CliError::Config(format!("{}: invalid hex key: {e}", path.display())))?
    } else {
        raw
    };
    Ok(SiftedKey::from_bytes(&bytes))
}

pub fn cmd_otp(args: &OtpArgs) -> CliResult<String> {
    let data = std::fs::read(&args.input).map_err(|e| CliError::io(&args.input, e))?;
    let key = read_key(&args.key)?;
    let out = otp_encrypt(&data, &key)?;
    write_file(&args.output, &out.bytes)?;
    let mut msg = format!(
        "wrote {} bytes to {} with a {}-bit key\n",
        out.bytes.len(),
        args.output.display(),
        key.len()
    );
    if out.key_repeated {
        msg.push_str("warning: key shorter than data; key stream repeated\n");
    }
    Ok(msg)
}
