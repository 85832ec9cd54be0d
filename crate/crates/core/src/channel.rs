//! Photon source statistics and the imperfection model applied between
//! preparation and detection.
//!
//! Imperfections act in a fixed order, each drawing from the caller's stream:
//! 1. [`prepare`]: Gaussian fast-axis errors on every wave plate of the recipe.
//! 2. [`perturb`]: interferometer phase jitter (a relative phase on the `L`
//!    components, equivalent to jitter of δ on grating arm b), coherent grating
//!    leakage between `R` and `L`, then depolarisation to a Haar-random state.
//! 3. [`misdetect`]: a flat probability of the click landing on a uniformly
//!    random port.
//!
//! Only `depolarizing_p` is calibrated; the other knobs are fixed by hand.

use std::path::Path as FsPath;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::codebook::{Basis, CodebookLabel, Symbol};
use crate::detection::{Analyser, MeasurementOutcome, PortMap};
use crate::error::{Error, Result};
use crate::hilbert::{apply, HybridState, Space, C64};
use crate::optics::{generate_mode_with_errors, polarisation_operator, recipe_for, RECIPE_SLOTS};
use crate::rng::{stream, DOMAIN_CALIBRATION};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmissionMode {
    DeterministicSinglePhoton,
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    pub mean_photon_number: f64,
    pub mode: EmissionMode,
}

/// Mean photon number of the attenuated laser source.
pub const ATTENUATED_MU: f64 = 0.008;

impl SourceModel {
    pub fn new(mode: EmissionMode, mean_photon_number: f64) -> Result<Self> {
        let ok = match mode {
            EmissionMode::DeterministicSinglePhoton => mean_photon_number >= 0.0,
            EmissionMode::Poisson => mean_photon_number > 0.0,
        };
        if !ok || !mean_photon_number.is_finite() {
            return Err(Error::Domain(format!(
                "mean photon number {mean_photon_number} invalid for {mode:?}"
            )));
        }
        Ok(SourceModel {
            mean_photon_number,
            mode,
        })
    }

    pub fn deterministic() -> Self {
        SourceModel {
            mean_photon_number: 1.0,
            mode: EmissionMode::DeterministicSinglePhoton,
        }
    }

    pub fn attenuated_laser() -> Self {
        SourceModel {
            mean_photon_number: ATTENUATED_MU,
            mode: EmissionMode::Poisson,
        }
    }
}

impl Default for SourceModel {
    fn default() -> Self {
        SourceModel::deterministic()
    }
}

/// Photons emitted in one clock cycle.
pub fn emit<R: Rng + ?Sized>(source: &SourceModel, rng: &mut R) -> u32 {
    match source.mode {
        EmissionMode::DeterministicSinglePhoton => 1,
        EmissionMode::Poisson => {
            let d = Poisson::new(source.mean_photon_number).expect("validated mean");
            let k: f64 = d.sample(rng);
            k as u32
        }
    }
}

/// `P(k) = e^{−μ} μ^k / k!`.
pub fn poisson_pmf(mu: f64, k: u32) -> f64 {
    let mut p = (-mu).exp();
    for i in 1..=k {
        p *= mu / i as f64;
    }
    p
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImperfectionModel {
    /// Standard deviation of each wave plate's fast-axis angle, radians.
    pub waveplate_angle_sigma: f64,
    /// Standard deviation of the interferometer phase, radians.
    pub delta_phase_sigma: f64,
    /// Probability of the grating sending a photon to the wrong path.
    pub pg_leakage: f64,
    pub depolarizing_p: f64,
    pub misdetection_p: f64,
}

impl ImperfectionModel {
    pub fn ideal() -> Self {
        ImperfectionModel::default()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("waveplate_angle_sigma", self.waveplate_angle_sigma),
            ("delta_phase_sigma", self.delta_phase_sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be a finite sigma ≥ 0, got {v}")));
            }
        }
        for (name, v) in [
            ("pg_leakage", self.pg_leakage),
            ("depolarizing_p", self.depolarizing_p),
            ("misdetection_p", self.misdetection_p),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} must lie in [0,1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_ideal(&self) -> bool {
        *self == ImperfectionModel::ideal()
    }

    /// The same model with depolarisation and misdetection switched off.
    pub fn coherent_part(&self) -> Self {
        ImperfectionModel {
            depolarizing_p: 0.0,
            misdetection_p: 0.0,
            ..*self
        }
    }
}

/// Prepares `label` with the generation recipe, sampling wave-plate angle errors.
pub fn prepare<R: Rng + ?Sized>(
    label: CodebookLabel,
    l: u32,
    model: &ImperfectionModel,
    rng: &mut R,
) -> Result<HybridState> {
    let mut errors = [0.0; RECIPE_SLOTS];
    if model.waveplate_angle_sigma > 0.0 {
        let n = Normal::new(0.0, model.waveplate_angle_sigma)
            .map_err(|e| Error::Domain(e.to_string()))?;
        for e in errors.iter_mut() {
            *e = n.sample(rng);
        }
    } else {
        return Ok(crate::codebook::codebook_state(label, l));
    }
    generate_mode_with_errors(recipe_for(label), l, &errors)
}

/// Phase jitter and grating leakage only.
pub fn perturb_coherent<R: Rng + ?Sized>(
    s: &HybridState,
    model: &ImperfectionModel,
    rng: &mut R,
) -> Result<HybridState> {
    let mut out = s.clone();
    if model.delta_phase_sigma > 0.0 {
        let eta: f64 = rng.sample::<f64, _>(StandardNormal) * model.delta_phase_sigma;
        let zero = C64::new(0.0, 0.0);
        let m = [[C64::new(1.0, 0.0), zero], [zero, C64::from_polar(1.0, eta)]];
        out = apply(&polarisation_operator("delta jitter", m, out.space())?, &out)?;
    }
    if model.pg_leakage > 0.0 {
        let keep = C64::new((1.0 - model.pg_leakage).sqrt(), 0.0);
        let leak = C64::new(0.0, model.pg_leakage.sqrt());
        let m = [[keep, leak], [leak, keep]];
        out = apply(&polarisation_operator("PG leakage", m, out.space())?, &out)?;
    }
    Ok(out)
}

/// Haar-random state of the four-dimensional codebook space.
pub fn random_codebook_state<R: Rng + ?Sized>(l: u32, rng: &mut R) -> HybridState {
    let space = Space::codebook(l);
    loop {
        let amps: Vec<C64> = (0..space.dim())
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(s) = HybridState::normalized(space, amps) {
            return s;
        }
    }
}

/// Applies the channel imperfections to a prepared state. With the all-zero
/// model the state is returned unchanged and no randomness is consumed.
pub fn perturb<R: Rng + ?Sized>(
    s: &HybridState,
    model: &ImperfectionModel,
    rng: &mut R,
) -> Result<HybridState> {
    let out = perturb_coherent(s, model, rng)?;
    if model.depolarizing_p > 0.0 && rng.random::<f64>() < model.depolarizing_p {
        return Ok(random_codebook_state(s.space().subspace_l(), rng));
    }
    Ok(out)
}

/// With probability `misdetection_p` a click is reassigned to a uniformly random port.
pub fn misdetect<R: Rng + ?Sized>(
    outcome: MeasurementOutcome,
    map: &PortMap,
    model: &ImperfectionModel,
    rng: &mut R,
) -> MeasurementOutcome {
    if !outcome.click || model.misdetection_p <= 0.0 || rng.random::<f64>() >= model.misdetection_p {
        return outcome;
    }
    let sym = Symbol::ALL[rng.random_range(0..4)];
    MeasurementOutcome {
        port: outcome.port.map(|p| map.port_for(p.analyser, sym, p.oam_bin.unsigned_abs())),
        decoded_bits: Some(sym),
        click: true,
    }
}

/// Mean same-basis detection probability with only the coherent knobs
/// active, averaged over `samples` jitter draws of every codebook mode using
/// exact Born probabilities.
pub fn coherent_fidelity(
    model: &ImperfectionModel,
    l: u32,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let coherent = model.coherent_part();
    let analysers = [Analyser::for_basis(Basis::Vector, l)?, Analyser::for_basis(Basis::Scalar, l)?];
    let mut total = 0.0;
    for i in 0..samples.max(1) {
        let mut rng = stream(seed, DOMAIN_CALIBRATION, i as u64);
        for label in CodebookLabel::ALL {
            let s = prepare(label, l, &coherent, &mut rng)?;
            let s = perturb_coherent(&s, &coherent, &mut rng)?;
            let a = &analysers[(label.basis == Basis::Scalar) as usize];
            total += a.symbol_probabilities(&s)?[label.symbol.value() as usize];
        }
    }
    Ok(total / (8 * samples.max(1)) as f64)
}

/// Same-basis fidelity after mixing the coherent fidelity `f0` with
/// depolarisation and misdetection.
pub fn fidelity_with_noise(f0: f64, depolarizing_p: f64, misdetection_p: f64) -> f64 {
    let f1 = (1.0 - depolarizing_p) * f0 + depolarizing_p * 0.25;
    (1.0 - misdetection_p) * f1 + misdetection_p * 0.25
}

/// Returns `base` with `depolarizing_p` chosen so the expected same-basis
/// fidelity equals `target`.
pub fn calibrate(
    base: &ImperfectionModel,
    l: u32,
    target: f64,
    samples: usize,
    seed: u64,
) -> Result<ImperfectionModel> {
    base.validate()?;
    let m = base.misdetection_p;
    if m >= 1.0 {
        return Err(Error::Domain("misdetection_p = 1 leaves nothing to calibrate".into()));
    }
    let f0 = coherent_fidelity(base, l, samples, seed)?;
    let f1 = (target - m / 4.0) / (1.0 - m);
    if !(0.25..=f0).contains(&f1) || f0 <= 0.25 {
        return Err(Error::Domain(format!(
            "target fidelity {target} unreachable: coherent fidelity {f0:.6}, misdetection {m}"
        )));
    }
    Ok(ImperfectionModel {
        depolarizing_p: (f0 - f1) / (f0 - 0.25),
        ..*base
    })
}

/// A named imperfection model. Calibrated presets record how they were calibrated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub subspace_l: u32,
    #[serde(default)]
    pub target_fidelity: Option<f64>,
    #[serde(default)]
    pub calibration_samples: usize,
    #[serde(default)]
    pub calibration_seed: u64,
    pub imperfections: ImperfectionModel,
}

pub const PRESET_NAMES: [&str; 3] = ["ideal", "paper_l1", "paper_l10"];

impl Preset {
    pub fn parse(json: &str) -> Result<Self> {
        let p: Preset = serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        p.imperfections.validate()?;
        if p.subspace_l == 0 {
            return Err(Error::Config("preset subspace_l must be ≥ 1".into()));
        }
        Ok(p)
    }

    /// One of [`PRESET_NAMES`].
    pub fn builtin(name: &str) -> Result<Self> {
        let json = match name {
            "ideal" => include_str!("../data/presets/ideal.json"),
            "paper_l1" => include_str!("../data/presets/paper_l1.json"),
            "paper_l10" => include_str!("../data/presets/paper_l10.json"),
            other => {
                return Err(Error::Config(format!(
                    "unknown preset {other:?}; expected one of {PRESET_NAMES:?} or a file path"
                )))
            }
        };
        Preset::parse(json)
    }

    pub fn from_file(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read preset {}: {e}", path.display())))?;
        Preset::parse(&text)
    }

    /// A builtin name, or otherwise a path to a preset file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if PRESET_NAMES.contains(&name_or_path) {
            Preset::builtin(name_or_path)
        } else {
            Preset::from_file(FsPath::new(name_or_path))
        }
    }

    /// Recomputes `depolarizing_p` from the recorded target and calibration stream.
    pub fn recalibrated(&self) -> Result<Self> {
        match self.target_fidelity {
            None => Ok(self.clone()),
            Some(t) => Ok(Preset {
                imperfections: calibrate(
                    &self.imperfections,
                    self.subspace_l,
                    t,
                    self.calibration_samples,
                    self.calibration_seed,
                )?,
                ..self.clone()
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::codebook_state;
    use crate::rng::stream;

    fn rng(i: u64) -> rand_chacha::ChaCha8Rng {
        stream(99, 42, i)
    }

    #[test]
    fn deterministic_source_emits_one() {
        let mut r = rng(0);
        for _ in 0..100 {
            assert_eq!(emit(&SourceModel::deterministic(), &mut r), 1);
        }
        assert!(SourceModel::new(EmissionMode::Poisson, 0.0).is_err());
    }

    #[test]
    fn poisson_vacuum_and_multiphoton_fractions() {
        let mu = ATTENUATED_MU;
        assert!((poisson_pmf(mu, 0) - 0.99203).abs() < 5e-6);
        let p_ge1 = 1.0 - poisson_pmf(mu, 0);
        let p_ge2 = p_ge1 - poisson_pmf(mu, 1);
        assert!((p_ge2 / p_ge1 - 0.004).abs() < 5e-5);

        // sampled vacuum fraction agrees with the pmf
        let n = 200_000;
        let mut r = rng(1);
        let src = SourceModel::attenuated_laser();
        let vac = (0..n).filter(|_| emit(&src, &mut r) == 0).count() as f64 / n as f64;
        let p0 = poisson_pmf(mu, 0);
        let sigma = (p0 * (1.0 - p0) / n as f64).sqrt();
        assert!((vac - p0).abs() < 4.0 * sigma, "{vac} vs {p0}");
    }

    #[test]
    fn zero_model_leaves_state_unchanged() {
        let mut r = rng(2);
        let m = ImperfectionModel::ideal();
        for label in CodebookLabel::ALL {
            let s = prepare(label, 3, &m, &mut r).unwrap();
            let out = perturb(&s, &m, &mut r).unwrap();
            assert_eq!(out, codebook_state(label, 3));
        }
    }

    #[test]
    fn generation_with_tiny_sigma_stays_close() {
        let m = ImperfectionModel { waveplate_angle_sigma: 1e-6, ..Default::default() };
        let mut r = rng(3);
        for label in CodebookLabel::ALL {
            let s = prepare(label, 1, &m, &mut r).unwrap();
            assert!(s.fidelity(&codebook_state(label, 1)).unwrap() > 1.0 - 1e-9);
        }
    }

    #[test]
    fn full_depolarisation_gives_quarter_fidelity() {
        let m = ImperfectionModel { depolarizing_p: 1.0, ..Default::default() };
        let a = Analyser::vector(1, crate::optics::DEFAULT_DELTA).unwrap();
        let label: CodebookLabel = "V01".parse().unwrap();
        let n = 40_000;
        let mut r = rng(4);
        let mut hits = 0;
        for _ in 0..n {
            let s = perturb(&codebook_state(label, 1), &m, &mut r).unwrap();
            let out = a.measure(&s, r.random()).unwrap();
            hits += (out.decoded_bits == Some(label.symbol)) as usize;
        }
        let f = hits as f64 / n as f64;
        let sigma = (0.25 * 0.75 / n as f64).sqrt();
        assert!((f - 0.25).abs() < 3.0 * sigma, "{f}");
    }

    #[test]
    fn haar_states_have_uniform_mean_overlap() {
        // E|⟨m|ψ⟩|² = 1/4 for Haar-random ψ in four dimensions
        let mut r = rng(5);
        let target = codebook_state("S10".parse().unwrap(), 2);
        let n = 20_000;
        let mean: f64 = (0..n)
            .map(|_| random_codebook_state(2, &mut r).fidelity(&target).unwrap())
            .sum::<f64>()
            / n as f64;
        // variance of |⟨m|ψ⟩|² is 3/80 in d = 4
        assert!((mean - 0.25).abs() < 3.0 * (3.0 / 80.0 / n as f64).sqrt());
    }

    #[test]
    fn misdetection_reassigns_to_random_port() {
        let map = PortMap::default();
        let a = Analyser::scalar(1).unwrap();
        let s = codebook_state("S00".parse().unwrap(), 1);
        let m = ImperfectionModel { misdetection_p: 1.0, ..Default::default() };
        let mut r = rng(6);
        let mut counts = [0usize; 4];
        for _ in 0..8000 {
            let o = misdetect(a.measure(&s, 0.5).unwrap(), &map, &m, &mut r);
            let sym = o.decoded_bits.unwrap();
            assert_eq!(map.decode(&o.port.unwrap()), Some(sym));
            counts[sym.value() as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 - 2000.0).abs() < 4.0 * (8000.0f64 * 0.25 * 0.75).sqrt());
        }
        assert_eq!(misdetect(MeasurementOutcome::no_click(), &map, &m, &mut r), MeasurementOutcome::no_click());
    }

    #[test]
    fn validation_rejects_bad_knobs() {
        assert!(ImperfectionModel { pg_leakage: 1.5, ..Default::default() }.validate().is_err());
        assert!(ImperfectionModel { delta_phase_sigma: -0.1, ..Default::default() }.validate().is_err());
        assert!(ImperfectionModel::ideal().validate().is_ok());
    }

    #[test]
    fn coherent_fidelity_of_phase_jitter_matches_closed_form() {
        // a phase η on L gives fidelity cos²(η/2) in either basis; E = (1 + e^{−σ²/2})/2
        let sigma = 0.2;
        let m = ImperfectionModel { delta_phase_sigma: sigma, ..Default::default() };
        let f0 = coherent_fidelity(&m, 1, 4000, 11).unwrap();
        let expect = 0.5 * (1.0 + (-sigma * sigma / 2.0).exp());
        assert!((f0 - expect).abs() < 2e-3, "{f0} vs {expect}");
    }

    #[test]
    fn calibration_hits_target() {
        let base = ImperfectionModel {
            delta_phase_sigma: 0.05,
            misdetection_p: 0.01,
            ..Default::default()
        };
        let cal = calibrate(&base, 1, 0.9, 500, 5).unwrap();
        let f0 = coherent_fidelity(&base, 1, 500, 5).unwrap();
        let f = fidelity_with_noise(f0, cal.depolarizing_p, cal.misdetection_p);
        assert!((f - 0.9).abs() < 1e-12);
        assert!(calibrate(&base, 1, 0.9999, 500, 5).is_err());
        assert!(calibrate(&base, 1, 0.1, 500, 5).is_err());
    }

    #[test]
    fn builtin_presets_are_calibrated() {
        for name in PRESET_NAMES {
            let p = Preset::builtin(name).unwrap();
            let r = p.recalibrated().unwrap();
            assert!(
                (p.imperfections.depolarizing_p - r.imperfections.depolarizing_p).abs() < 1e-12,
                "{name}: shipped {} vs recomputed {}",
                p.imperfections.depolarizing_p,
                r.imperfections.depolarizing_p
            );
        }
        assert!(Preset::builtin("ideal").unwrap().imperfections.is_ideal());
        assert!(Preset::builtin("nope").is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn knobs() -> impl Strategy<Value = ImperfectionModel> {
            (0.0..0.3f64, 0.0..0.5f64, 0.0..1.0f64, 0.0..1.0f64, 0.0..1.0f64).prop_map(
                |(w, d, g, p, m)| ImperfectionModel {
                    waveplate_angle_sigma: w,
                    delta_phase_sigma: d,
                    pg_leakage: g,
                    depolarizing_p: p,
                    misdetection_p: m,
                },
            )
        }

        proptest! {
            #[test]
            fn perturb_preserves_normalisation(m in knobs(), idx in 0usize..8, l in 1u32..12, seed: u64) {
                let mut r = stream(seed, 7, 0);
                let label = CodebookLabel::from_index(idx).unwrap();
                let s = prepare(label, l, &m, &mut r).unwrap();
                prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-9);
                let out = perturb(&s, &m, &mut r).unwrap();
                prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-9);
            }

            #[test]
            fn noise_mixing_is_monotone(f0 in 0.25f64..1.0, p1 in 0.0f64..1.0, dp in 0.0f64..1.0, m in 0.0f64..1.0) {
                let p2 = (p1 + dp).min(1.0);
                prop_assert!(fidelity_with_noise(f0, p2, m) <= fidelity_with_noise(f0, p1, m) + 1e-15);
            }
        }
    }
}
