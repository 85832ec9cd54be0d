//! Prepare-and-measure BB84 over the vector/scalar codebook.
//!
//! Each symbol draws from its own stream `(seed, symbol index)`: Alice's
//! basis and bits, Bob's basis, Eve's basis, the emitted photon number, then the
//! channel and detector variates. Runs are therefore identical for any thread count.
//!
//! An intercept-resend Eve sits between Alice's generator and the channel
//! imperfections. She measures with an ideal deterministic analyser and resends
//! the exact codebook state of her outcome.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{emit, misdetect, perturb, prepare, ImperfectionModel, SourceModel};
use crate::codebook::{codebook_state, Basis, CodebookLabel, Symbol};
use crate::detection::{filter_tree_analyse, Analyser, MeasurementOutcome, PortMap};
use crate::error::{Error, Result};
use crate::optics::DEFAULT_DELTA;
use crate::rng::{stream, DOMAIN_BB84};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    /// Four-port analyser: every photon yields a port.
    #[default]
    Deterministic,
    /// Beam-splitter filter tree: half the photons are lost.
    Filter,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveKind {
    #[default]
    None,
    InterceptResend,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EveStrategy {
    pub kind: EveKind,
    /// Probability that Eve measures in the vector basis.
    pub basis_choice_bias: f64,
}

impl EveStrategy {
    pub fn none() -> Self {
        EveStrategy {
            kind: EveKind::None,
            basis_choice_bias: 0.5,
        }
    }

    pub fn intercept_resend() -> Self {
        EveStrategy {
            kind: EveKind::InterceptResend,
            basis_choice_bias: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if (0.0..=1.0).contains(&self.basis_choice_bias) {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "basis_choice_bias {} outside [0,1]",
                self.basis_choice_bias
            )))
        }
    }
}

impl Default for EveStrategy {
    fn default() -> Self {
        EveStrategy::none()
    }
}

/// One transcript record. `bob_bits` is present iff `clicked`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolSymbol {
    pub index: u64,
    pub alice_basis: Basis,
    pub alice_bits: Symbol,
    pub bob_basis: Basis,
    pub bob_bits: Option<Symbol>,
    pub clicked: bool,
    /// Photons emitted in this cycle.
    pub photons: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bb84Config {
    pub n_symbols: u64,
    pub subspace_l: u32,
    pub detector: DetectorKind,
    pub eve: EveStrategy,
    pub imperfections: ImperfectionModel,
    pub source: SourceModel,
    pub seed: u64,
}

impl Bb84Config {
    pub fn ideal(n_symbols: u64, subspace_l: u32, seed: u64) -> Self {
        Bb84Config {
            n_symbols,
            subspace_l,
            detector: DetectorKind::Deterministic,
            eve: EveStrategy::none(),
            imperfections: ImperfectionModel::ideal(),
            source: SourceModel::deterministic(),
            seed,
        }
    }
}

fn pick_basis<R: Rng + ?Sized>(rng: &mut R, p_vector: f64) -> Basis {
    if rng.random::<f64>() < p_vector {
        Basis::Vector
    } else {
        Basis::Scalar
    }
}

struct Station {
    analysers: [Analyser; 2],
    map: PortMap,
}

impl Station {
    fn new(l: u32) -> Result<Self> {
        Ok(Station {
            analysers: [Analyser::vector(l, DEFAULT_DELTA)?, Analyser::scalar(l)?],
            map: PortMap::default(),
        })
    }

    fn analyser(&self, b: Basis) -> &Analyser {
        &self.analysers[(b == Basis::Scalar) as usize]
    }
}

fn run_symbol(cfg: &Bb84Config, station: &Station, index: u64) -> Result<ProtocolSymbol> {
    let mut rng = stream(cfg.seed, DOMAIN_BB84, index);
    let alice_basis = pick_basis(&mut rng, 0.5);
    let alice_bits = Symbol::ALL[rng.random_range(0..4)];
    let bob_basis = pick_basis(&mut rng, 0.5);
    let eve_basis = pick_basis(&mut rng, cfg.eve.basis_choice_bias);
    let u_eve: f64 = rng.random();
    let u_bob: f64 = rng.random();
    let photons = emit(&cfg.source, &mut rng);

    let mut record = ProtocolSymbol {
        index,
        alice_basis,
        alice_bits,
        bob_basis,
        bob_bits: None,
        clicked: false,
        photons,
    };
    if photons == 0 {
        return Ok(record);
    }

    let l = cfg.subspace_l;
    let model = &cfg.imperfections;
    let mut s = prepare(CodebookLabel::new(alice_basis, alice_bits), l, model, &mut rng)?;
    if cfg.eve.kind == EveKind::InterceptResend {
        let seen = station.analyser(eve_basis).measure(&s, u_eve)?;
        let bits = seen.decoded_bits.expect("deterministic analysers always click");
        s = codebook_state(CodebookLabel::new(eve_basis, bits), l);
    }
    let s = perturb(&s, model, &mut rng)?;
    let outcome: MeasurementOutcome = match cfg.detector {
        DetectorKind::Deterministic => station.analyser(bob_basis).measure(&s, u_bob)?,
        DetectorKind::Filter => filter_tree_analyse(&s, bob_basis, u_bob)?,
    };
    let outcome = misdetect(outcome, &station.map, model, &mut rng);
    record.clicked = outcome.click;
    record.bob_bits = outcome.decoded_bits.filter(|_| outcome.click);
    Ok(record)
}

/// Runs the protocol and returns the transcript in symbol order.
pub fn run_bb84(cfg: &Bb84Config) -> Result<Vec<ProtocolSymbol>> {
    if cfg.n_symbols == 0 {
        return Err(Error::Domain("n_symbols must be ≥ 1".into()));
    }
    if cfg.subspace_l == 0 {
        return Err(Error::Domain("subspace_l must be ≥ 1".into()));
    }
    cfg.imperfections.validate()?;
    cfg.eve.validate()?;
    let station = Station::new(cfg.subspace_l)?;
    (0..cfg.n_symbols)
        .into_par_iter()
        .map(|i| run_symbol(cfg, &station, i))
        .collect()
}

/// Newline-delimited JSON, one record per line.
pub fn transcript_ndjson(transcript: &[ProtocolSymbol]) -> String {
    let mut out = String::new();
    for r in transcript {
        out.push_str(&serde_json::to_string(r).expect("transcript records serialise"));
        out.push('\n');
    }
    out
}

/// Key bits, two per retained symbol (high bit first).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiftedKey {
    pub bits: Vec<bool>,
    pub source_indices: Vec<u64>,
}

impl SiftedKey {
    pub fn from_symbols(symbols: &[(u64, Symbol)]) -> Self {
        let mut key = SiftedKey::default();
        for &(i, s) in symbols {
            let (hi, lo) = s.bits();
            key.bits.extend([hi, lo]);
            key.source_indices.push(i);
        }
        key
    }

    /// Key from raw bytes, every bit used, most significant bit first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        SiftedKey {
            bits: bytes
                .iter()
                .flat_map(|b| (0..8).rev().map(move |k| (b >> k) & 1 == 1))
                .collect(),
            source_indices: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Packs bits most-significant first; the last byte is zero padded.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.bits
            .chunks(8)
            .map(|c| {
                c.iter()
                    .enumerate()
                    .fold(0u8, |acc, (k, &b)| acc | ((b as u8) << (7 - k)))
            })
            .collect()
    }

    pub fn symbols(&self) -> Vec<Symbol> {
        self.bits
            .chunks(2)
            .map(|c| {
                let v = ((c[0] as u8) << 1) | c.get(1).copied().unwrap_or(false) as u8;
                Symbol::ALL[v as usize]
            })
            .collect()
    }
}

/// Keeps clicked symbols whose bases agree, aligned index for index.
pub fn sift(transcript: &[ProtocolSymbol]) -> (SiftedKey, SiftedKey) {
    let mut alice = Vec::new();
    let mut bob = Vec::new();
    for r in transcript {
        if let (true, true, Some(b)) = (r.clicked, r.alice_basis == r.bob_basis, r.bob_bits) {
            alice.push((r.index, r.alice_bits));
            bob.push((r.index, b));
        }
    }
    (SiftedKey::from_symbols(&alice), SiftedKey::from_symbols(&bob))
}

/// Fraction of mismatched two-bit symbols.
pub fn qber(alice: &SiftedKey, bob: &SiftedKey) -> Result<f64> {
    if alice.len() != bob.len() || alice.source_indices != bob.source_indices {
        return Err(Error::Alignment(format!(
            "keys differ in length or origin: {} vs {} bits",
            alice.len(),
            bob.len()
        )));
    }
    if alice.is_empty() || !alice.len().is_multiple_of(2) {
        return Err(Error::Alignment(format!(
            "need a positive even number of key bits, got {}",
            alice.len()
        )));
    }
    let errors = alice
        .bits
        .chunks(2)
        .zip(bob.bits.chunks(2))
        .filter(|(a, b)| a != b)
        .count();
    Ok(errors as f64 / (alice.len() / 2) as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiftStats {
    pub n_symbols: u64,
    /// Cycles with at least one photon.
    pub emitted: u64,
    pub clicked: u64,
    pub multi_photon: u64,
    pub retained: u64,
    /// Retained symbols per transmitted cycle, vacuum included.
    pub sift_fraction_raw: f64,
    /// Retained symbols per non-vacuum cycle.
    pub sift_fraction: f64,
}

pub fn sift_stats(transcript: &[ProtocolSymbol]) -> SiftStats {
    let n = transcript.len() as u64;
    let emitted = transcript.iter().filter(|r| r.photons > 0).count() as u64;
    let clicked = transcript.iter().filter(|r| r.clicked).count() as u64;
    let multi = transcript.iter().filter(|r| r.photons > 1).count() as u64;
    let retained = transcript
        .iter()
        .filter(|r| r.clicked && r.alice_basis == r.bob_basis)
        .count() as u64;
    let frac = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    SiftStats {
        n_symbols: n,
        emitted,
        clicked,
        multi_photon: multi,
        retained,
        sift_fraction_raw: frac(retained, n),
        sift_fraction: frac(retained, emitted),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OtpOutput {
    pub bytes: Vec<u8>,
    /// True when the key was shorter than the data and had to be reused.
    pub key_repeated: bool,
}

/// XORs `data` with the key bit stream, repeating the key cyclically.
pub fn otp_encrypt(data: &[u8], key: &SiftedKey) -> Result<OtpOutput> {
    if key.is_empty() {
        return Err(Error::EmptyKey);
    }
    let n = key.len();
    let bytes = data
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let mask = (0..8).fold(0u8, |acc, k| acc | ((key.bits[(8 * i + k) % n] as u8) << (7 - k)));
            b ^ mask
        })
        .collect();
    Ok(OtpOutput {
        bytes,
        key_repeated: data.len() * 8 > n,
    })
}

pub fn otp_decrypt(data: &[u8], key: &SiftedKey) -> Result<OtpOutput> {
    otp_encrypt(data, key)
}
