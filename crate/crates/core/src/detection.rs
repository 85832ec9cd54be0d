//! Bob's analysers: the deterministic vector and scalar analysers, the
//! probabilistic filter tree, and the mode-sorter geometry.
//!
//! The vector analyser is PG → BS(δ) → per-port OAM sort (ports on paths c, d);
//! the scalar analyser is λ/4 at 0 → PG → per-port OAM sort (paths a, b). The
//! mode sorter is treated as a perfect OAM-to-bin projector here; its physical
//! mapping is available through [`sorter_position`] and [`conformal_map`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::codebook::{Basis, CodebookLabel, Symbol};
use crate::error::{Error, Result};
use crate::hilbert::{
    apply, outcome_distribution, sample_index, ElementOperator, HybridState, Path, PortProjector,
    Space,
};
use crate::optics::{
    bs_operator, pg_split_operator_with_leakage, waveplate_operator, WavePlateSpec, DEFAULT_DELTA,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DetectorPort {
    pub analyser: Basis,
    pub path: Path,
    /// Signed OAM bin, `±ℓ`.
    pub oam_bin: i32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementOutcome {
    /// Detector port that fired. `None` for no click and for filter-tree detections.
    pub port: Option<DetectorPort>,
    pub decoded_bits: Option<Symbol>,
    pub click: bool,
}

impl MeasurementOutcome {
    pub fn no_click() -> Self {
        MeasurementOutcome {
            port: None,
            decoded_bits: None,
            click: false,
        }
    }
}

/// One row of the port-map file. `oam_bin` is the sign of the OAM bin (±1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortMapEntry {
    pub analyser: Basis,
    pub path: Path,
    pub oam_bin: i32,
    pub bits: Symbol,
}

/// Port → bit-pair decoding table.
#[derive(Clone, Debug, PartialEq)]
pub struct PortMap {
    entries: Vec<PortMapEntry>,
}

const DEFAULT_PORT_MAP: &str = include_str!("../data/port_map.json");

impl PortMap {
    pub fn new(entries: Vec<PortMapEntry>) -> Result<Self> {
        for basis in Basis::BOTH {
            let rows: Vec<_> = entries.iter().filter(|e| e.analyser == basis).collect();
            if rows.len() != 4 {
                return Err(Error::Config(format!(
                    "port map needs 4 {basis} ports, found {}",
                    rows.len()
                )));
            }
            let allowed = output_paths(basis);
            for (i, a) in rows.iter().enumerate() {
                if !allowed.contains(&a.path) || a.oam_bin.abs() != 1 {
                    return Err(Error::Config(format!("invalid {basis} port {a:?}")));
                }
                for b in &rows[i + 1..] {
                    if (a.path, a.oam_bin) == (b.path, b.oam_bin) || a.bits == b.bits {
                        return Err(Error::Config(format!(
                            "duplicate {basis} port or bit value: {a:?} / {b:?}"
                        )));
                    }
                }
            }
        }
        Ok(PortMap { entries })
    }

    pub fn parse(json: &str) -> Result<Self> {
        let entries: Vec<PortMapEntry> =
            serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
        PortMap::new(entries)
    }

    pub fn entries(&self) -> &[PortMapEntry] {
        &self.entries
    }

    /// The port that decodes to `bits` in the given analyser, in the `|ℓ|` subspace.
    pub fn port_for(&self, analyser: Basis, bits: Symbol, l: u32) -> DetectorPort {
        let e = self
            .entries
            .iter()
            .find(|e| e.analyser == analyser && e.bits == bits)
            .expect("validated map covers every symbol");
        DetectorPort {
            analyser,
            path: e.path,
            oam_bin: e.oam_bin * l as i32,
        }
    }

    pub fn decode(&self, port: &DetectorPort) -> Option<Symbol> {
        self.entries
            .iter()
            .find(|e| {
                e.analyser == port.analyser
                    && e.path == port.path
                    && e.oam_bin == port.oam_bin.signum()
            })
            .map(|e| e.bits)
    }
}

impl Default for PortMap {
    fn default() -> Self {
        PortMap::parse(DEFAULT_PORT_MAP).expect("shipped port map is valid")
    }
}

fn output_paths(basis: Basis) -> [Path; 2] {
    match basis {
        Basis::Vector => [Path::C, Path::D],
        Basis::Scalar => [Path::A, Path::B],
    }
}

/// A deterministic four-port analyser with a precomputed optical chain.
#[derive(Clone, Debug)]
pub struct Analyser {
    basis: Basis,
    chain: ElementOperator,
    ports: [DetectorPort; 4],
    projectors: Vec<PortProjector>,
    port_map: PortMap,
}

impl Analyser {
    /// PG → BS(δ) → OAM sort.
    pub fn vector(l: u32, delta: f64) -> Result<Self> {
        Analyser::vector_with(l, delta, 0.0, PortMap::default())
    }

    pub fn vector_with(l: u32, delta: f64, pg_leakage: f64, port_map: PortMap) -> Result<Self> {
        let chain = pg_split_operator_with_leakage(l, pg_leakage)?.then(&bs_operator(l, delta)?)?;
        Analyser::build(Basis::Vector, chain, port_map)
    }

    /// λ/4 at 0 → PG → OAM sort.
    pub fn scalar(l: u32) -> Result<Self> {
        Analyser::scalar_with(l, 0.0, PortMap::default())
    }

    pub fn scalar_with(l: u32, pg_leakage: f64, port_map: PortMap) -> Result<Self> {
        let qwp = waveplate_operator(WavePlateSpec::quarter(0.0), Space::codebook(l))?;
        let chain = qwp.then(&pg_split_operator_with_leakage(l, pg_leakage)?)?;
        Analyser::build(Basis::Scalar, chain, port_map)
    }

    pub fn for_basis(basis: Basis, l: u32) -> Result<Self> {
        match basis {
            Basis::Vector => Analyser::vector(l, DEFAULT_DELTA),
            Basis::Scalar => Analyser::scalar(l),
        }
    }

    fn build(basis: Basis, chain: ElementOperator, port_map: PortMap) -> Result<Self> {
        let out = chain.output();
        let l = out.subspace_l() as i32;
        let mut ports = Vec::with_capacity(4);
        let mut projectors = Vec::with_capacity(4);
        for path in output_paths(basis) {
            for oam in [l, -l] {
                let port = DetectorPort {
                    analyser: basis,
                    path,
                    oam_bin: oam,
                };
                let indices = out
                    .iter()
                    .enumerate()
                    .filter(|(_, b)| b.path == path && b.oam == oam)
                    .map(|(i, _)| i)
                    .collect();
                projectors.push(PortProjector {
                    label: format!("{basis}:{path}:{oam:+}"),
                    indices,
                });
                ports.push(port);
            }
        }
        Ok(Analyser {
            basis,
            chain,
            ports: ports.try_into().expect("four ports"),
            projectors,
            port_map,
        })
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    /// Ports in output order: first path (+ℓ, −ℓ), then second path.
    pub fn ports(&self) -> &[DetectorPort; 4] {
        &self.ports
    }

    pub fn port_map(&self) -> &PortMap {
        &self.port_map
    }

    /// Born probabilities over [`Analyser::ports`].
    pub fn port_probabilities(&self, s: &HybridState) -> Result<[f64; 4]> {
        let out = apply(&self.chain, s)?;
        let p = outcome_distribution(&out, &self.projectors)?;
        Ok([p[0], p[1], p[2], p[3]])
    }

    /// Probability of decoding each symbol, indexed by symbol value.
    pub fn symbol_probabilities(&self, s: &HybridState) -> Result<[f64; 4]> {
        let p = self.port_probabilities(s)?;
        let mut by_symbol = [0.0; 4];
        for (port, pr) in self.ports.iter().zip(p) {
            let sym = self.decode(port)?;
            by_symbol[sym.value() as usize] += pr;
        }
        Ok(by_symbol)
    }

    fn decode(&self, port: &DetectorPort) -> Result<Symbol> {
        self.port_map
            .decode(port)
            .ok_or_else(|| Error::Config(format!("port {port:?} missing from port map")))
    }

    /// Samples one port with the uniform variate `u ∈ [0, 1)`.
    pub fn measure(&self, s: &HybridState, u: f64) -> Result<MeasurementOutcome> {
        let p = self.port_probabilities(s)?;
        let port = self.ports[sample_index(&p, u)];
        Ok(MeasurementOutcome {
            port: Some(port),
            decoded_bits: Some(self.decode(&port)?),
            click: true,
        })
    }
}

pub fn vector_analyse(s: &HybridState, delta: f64, rng_sample: f64) -> Result<MeasurementOutcome> {
    Analyser::vector(s.space().subspace_l(), delta)?.measure(s, rng_sample)
}

pub fn scalar_analyse(s: &HybridState, rng_sample: f64) -> Result<MeasurementOutcome> {
    Analyser::scalar(s.space().subspace_l())?.measure(s, rng_sample)
}

/// Splitter loss of the filter-based detector.
pub const FILTER_SPLIT_LOSS: f64 = 0.5;

/// Click probability of the filter branch set to `target`: `|⟨target|s⟩|² / 2`.
pub fn filter_click_probability(s: &HybridState, target: &HybridState) -> Result<f64> {
    Ok(target.fidelity(s)? * FILTER_SPLIT_LOSS)
}

/// One filter branch of the beam-splitter filter tree, projecting onto `target`.
pub fn filter_analyse(
    s: &HybridState,
    target: CodebookLabel,
    rng_sample: f64,
) -> Result<MeasurementOutcome> {
    let t = crate::codebook::codebook_state(target, s.space().subspace_l());
    if rng_sample < filter_click_probability(s, &t)? {
        Ok(MeasurementOutcome {
            port: None,
            decoded_bits: Some(target.symbol),
            click: true,
        })
    } else {
        Ok(MeasurementOutcome::no_click())
    }
}

/// The full filter tree for one basis: each of the four modes is reported
/// with probability `|⟨mode|s⟩|² / 2`; the rest of the time nothing clicks.
pub fn filter_tree_probabilities(s: &HybridState, basis: Basis) -> Result<[f64; 4]> {
    let l = s.space().subspace_l();
    let mut p = [0.0; 4];
    for sym in Symbol::ALL {
        let t = crate::codebook::codebook_state(CodebookLabel::new(basis, sym), l);
        p[sym.value() as usize] = filter_click_probability(s, &t)?;
    }
    Ok(p)
}

pub fn filter_tree_analyse(
    s: &HybridState,
    basis: Basis,
    rng_sample: f64,
) -> Result<MeasurementOutcome> {
    let p = filter_tree_probabilities(s, basis)?;
    let mut acc = 0.0;
    for sym in Symbol::ALL {
        acc += p[sym.value() as usize];
        if rng_sample < acc {
            return Ok(MeasurementOutcome {
                port: None,
                decoded_bits: Some(sym),
                click: true,
            });
        }
    }
    Ok(MeasurementOutcome::no_click())
}

/// Mode-sorter optics: aperture `d`, Fourier lens focal length `f`,
/// wavelength `λ`, and the conformal-map scale `b`. All in metres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SorterGeometry {
    pub aperture_d: f64,
    pub focal_f: f64,
    pub wavelength: f64,
    pub scale_b: f64,
}

impl SorterGeometry {
    pub fn new(aperture_d: f64, focal_f: f64, wavelength: f64, scale_b: f64) -> Result<Self> {
        for (name, v) in [
            ("aperture_d", aperture_d),
            ("focal_f", focal_f),
            ("wavelength", wavelength),
            ("scale_b", scale_b),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(SorterGeometry {
            aperture_d,
            focal_f,
            wavelength,
            scale_b,
        })
    }
}

impl Default for SorterGeometry {
    fn default() -> Self {
        SorterGeometry {
            aperture_d: 8e-3,
            focal_f: 0.3,
            wavelength: 700e-9,
            scale_b: 1e-3,
        }
    }
}

/// Output position `X_ℓ = λ f ℓ / d`.
pub fn sorter_position(oam: i32, geom: &SorterGeometry) -> f64 {
    geom.wavelength * geom.focal_f * oam as f64 / geom.aperture_d
}

/// Log-polar map `(x, y) → (u, v)`, with `u = (d/2π)·atan2(y, x)` on (−π, π]
/// and `v = −(d/2π)·ln(√(x²+y²)/b)`.
pub fn conformal_map(x: f64, y: f64, geom: &SorterGeometry) -> Result<(f64, f64)> {
    if x == 0.0 && y == 0.0 {
        return Err(Error::Domain("conformal map is singular at the origin".into()));
    }
    let k = geom.aperture_d / (2.0 * PI);
    Ok((k * y.atan2(x), -k * (x.hypot(y) / geom.scale_b).ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::codebook_state;
    use crate::hilbert::{BasisIndex, Pol};

    fn label(s: &str) -> CodebookLabel {
        s.parse().unwrap()
    }

    #[test]
    fn vector_00_goes_to_d_minus_l() {
        for l in [1, 10] {
            let out = vector_analyse(&codebook_state(label("V00"), l), DEFAULT_DELTA, 0.999).unwrap();
            assert_eq!(
                out.port,
                Some(DetectorPort { analyser: Basis::Vector, path: Path::D, oam_bin: -(l as i32) })
            );
            assert_eq!(out.decoded_bits, Some("00".parse().unwrap()));
        }
    }

    #[test]
    fn vector_01_goes_to_c_plus_l() {
        let a = Analyser::vector(1, DEFAULT_DELTA).unwrap();
        let p = a.port_probabilities(&codebook_state(label("V01"), 1)).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-12, "{p:?}");
        assert_eq!(a.ports()[0], DetectorPort { analyser: Basis::Vector, path: Path::C, oam_bin: 1 });
    }

    #[test]
    fn scalar_state_uniform_on_vector_ports() {
        let a = Analyser::vector(1, DEFAULT_DELTA).unwrap();
        let p = a.port_probabilities(&crate::codebook::scalar_mode(1, 1, 0.0)).unwrap();
        for x in p {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn scalar_analyser_resolves_scalar_modes() {
        let a = Analyser::scalar(1).unwrap();
        for sym in Symbol::ALL {
            let s = codebook_state(CodebookLabel::new(Basis::Scalar, sym), 1);
            let probs = a.symbol_probabilities(&s).unwrap();
            assert!((probs[sym.value() as usize] - 1.0).abs() < 1e-12);
        }
        let out = scalar_analyse(&codebook_state(label("S00"), 1), 0.5).unwrap();
        assert_eq!(out.decoded_bits, Some("00".parse().unwrap()));
    }

    #[test]
    fn vector_state_uniform_on_scalar_ports() {
        let a = Analyser::scalar(1).unwrap();
        let p = a.port_probabilities(&crate::codebook::vector_mode(1, 1, 0.0)).unwrap();
        for x in p {
            assert!((x - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn antidiagonal_plus_l_lands_on_a_plus_l() {
        // A = (R + iL)/√2 becomes R after the λ/4, so path a.
        let out = scalar_analyse(&codebook_state(label("S11"), 1), 0.1).unwrap();
        assert_eq!(out.port, Some(DetectorPort { analyser: Basis::Scalar, path: Path::A, oam_bin: 1 }));
    }

    #[test]
    fn analysers_accept_product_basis_states() {
        let s = HybridState::basis_state(Space::codebook(2), BasisIndex::new(Pol::L, -2, Path::None)).unwrap();
        let p = Analyser::vector(2, DEFAULT_DELTA).unwrap().port_probabilities(&s).unwrap();
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn filter_branch_probabilities() {
        let s = codebook_state(label("V10"), 1);
        assert!((filter_click_probability(&s, &s).unwrap() - 0.5).abs() < 1e-12);
        let orth = codebook_state(label("V11"), 1);
        assert!(filter_click_probability(&s, &orth).unwrap().abs() < 1e-12);
        let comp = codebook_state(label("S01"), 1);
        assert!((filter_click_probability(&s, &comp).unwrap() - 0.125).abs() < 1e-12);

        assert!(filter_analyse(&s, label("V10"), 0.49).unwrap().click);
        assert!(!filter_analyse(&s, label("V10"), 0.51).unwrap().click);
        assert!(!filter_analyse(&s, label("V11"), 0.0).unwrap().click);
    }

    #[test]
    fn filter_tree_detects_half_of_same_basis_photons() {
        let s = codebook_state(label("S10"), 1);
        let p = filter_tree_probabilities(&s, Basis::Scalar).unwrap();
        assert!((p.iter().sum::<f64>() - 0.5).abs() < 1e-12);
        assert!((p[2] - 0.5).abs() < 1e-12);
        let q = filter_tree_probabilities(&s, Basis::Vector).unwrap();
        for x in q {
            assert!((x - 0.125).abs() < 1e-12);
        }
        assert_eq!(filter_tree_analyse(&s, Basis::Scalar, 0.3).unwrap().decoded_bits, Some("10".parse().unwrap()));
        assert!(!filter_tree_analyse(&s, Basis::Scalar, 0.7).unwrap().click);
    }

    #[test]
    fn default_port_map_matches_ideal_chain() {
        for l in [1, 4, 10] {
            for basis in Basis::BOTH {
                let a = Analyser::for_basis(basis, l).unwrap();
                for sym in Symbol::ALL {
                    let s = codebook_state(CodebookLabel::new(basis, sym), l);
                    let p = a.symbol_probabilities(&s).unwrap();
                    assert!((p[sym.value() as usize] - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn port_map_validation() {
        let mut e = PortMap::default().entries().to_vec();
        e[1].bits = e[0].bits;
        assert!(PortMap::new(e).is_err());
        let mut e = PortMap::default().entries().to_vec();
        e[4].path = Path::C;
        assert!(PortMap::new(e).is_err());
        assert!(PortMap::parse("[]").is_err());
    }

    #[test]
    fn sorter_positions() {
        let g = SorterGeometry::default();
        assert_eq!(sorter_position(0, &g), 0.0);
        assert!((sorter_position(10, &g) - 2.625e-4).abs() < 1e-15);
        assert_eq!(sorter_position(7, &g), -sorter_position(-7, &g));
        assert!(SorterGeometry::new(0.0, 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn conformal_map_points() {
        let g = SorterGeometry::default();
        let b = g.scale_b;
        let d = g.aperture_d;
        let (u, v) = conformal_map(b, 0.0, &g).unwrap();
        assert_eq!((u, v), (0.0, 0.0));
        let (u, v) = conformal_map(0.0, b, &g).unwrap();
        assert!((u - d / 4.0).abs() < 1e-15 && v.abs() < 1e-15);
        let (u, v) = conformal_map(2.0 * b, 0.0, &g).unwrap();
        assert!(u.abs() < 1e-15);
        assert!((v + d / (2.0 * PI) * 2f64.ln()).abs() < 1e-15);
        assert!(conformal_map(0.0, 0.0, &g).is_err());
        // branch cut: the negative x axis maps to u = +d/2
        let (u, _) = conformal_map(-b, 0.0, &g).unwrap();
        assert!((u - d / 2.0).abs() < 1e-15);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn conformal_map_injective_on_sector(
                r1 in 1e-4f64..1e-2, a1 in -3.1f64..3.1,
                r2 in 1e-4f64..1e-2, a2 in -3.1f64..3.1,
            ) {
                let g = SorterGeometry::default();
                let p = conformal_map(r1 * a1.cos(), r1 * a1.sin(), &g).unwrap();
                let q = conformal_map(r2 * a2.cos(), r2 * a2.sin(), &g).unwrap();
                let same_input = (r1 - r2).abs() < 1e-12 && (a1 - a2).abs() < 1e-12;
                let same_output = (p.0 - q.0).abs() < 1e-15 && (p.1 - q.1).abs() < 1e-15;
                prop_assert!(same_input || !same_output);
                // the map is invertible: recover the polar coordinates
                let k = g.aperture_d / (2.0 * PI);
                prop_assert!((p.0 / k - a1).abs() < 1e-9);
                prop_assert!(((-p.1 / k).exp() * g.scale_b - r1).abs() < 1e-12);
            }

            #[test]
            fn sorter_position_is_odd(l in -50i32..50, f in 0.01f64..2.0) {
                let g = SorterGeometry { focal_f: f, ..SorterGeometry::default() };
                prop_assert_eq!(sorter_position(l, &g), -sorter_position(-l, &g));
            }
        }
    }
}
