//! State vectors and operators over the polarisation ⊗ OAM (⊗ path) space.
//!
//! A [`Space`] fixes an ordered basis. The canonical order is path-major, then
//! polarisation (R before L), then OAM (+ℓ, −ℓ, and 0 when the Gaussian mode is
//! modelled). The four-dimensional codebook space is therefore ordered
//! `(R,+ℓ), (R,−ℓ), (L,+ℓ), (L,−ℓ)`, and split spaces repeat that block for
//! paths a, b (or c, d). Every matrix, dump and CSV in the crate uses this order.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance on the normalisation of a pure state.
pub const NORM_TOL: f64 = 1e-10;
/// Tolerance for the unitarity check `‖U†U − I‖∞`.
pub const UNITARITY_TOL: f64 = 1e-10;
/// Probability weight treated as zero when checking supports and domains.
pub const SUPPORT_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pol {
    R,
    L,
}

impl Pol {
    pub fn flipped(self) -> Pol {
        match self {
            Pol::R => Pol::L,
            Pol::L => Pol::R,
        }
    }

    fn index(self) -> usize {
        match self {
            Pol::R => 0,
            Pol::L => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    None,
    A,
    B,
    C,
    D,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Path::None => "none",
            Path::A => "a",
            Path::B => "b",
            Path::C => "c",
            Path::D => "d",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisIndex {
    pub pol: Pol,
    pub oam: i32,
    pub path: Path,
}

impl BasisIndex {
    pub fn new(pol: Pol, oam: i32, path: Path) -> Self {
        BasisIndex { pol, oam, path }
    }
}

/// Which OAM values a space carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OamSet {
    /// `{+ℓ, −ℓ}`
    Pair,
    /// `{+ℓ, −ℓ, 0}`: includes the Gaussian input used during generation.
    PairAndGaussian,
}

/// Which path labels a space carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PathSet {
    /// Single unlabelled path.
    Unsplit,
    /// Paths a, b after the polarisation grating.
    Split,
    /// Paths c, d after the beam splitter.
    Output,
}

impl PathSet {
    fn paths(self) -> &'static [Path] {
        match self {
            PathSet::Unsplit => &[Path::None],
            PathSet::Split => &[Path::A, Path::B],
            PathSet::Output => &[Path::C, Path::D],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    subspace_l: u32,
    oams: OamSet,
    paths: PathSet,
}

impl Space {
    pub fn new(subspace_l: u32, oams: OamSet, paths: PathSet) -> Result<Self> {
        if subspace_l == 0 || subspace_l > i32::MAX as u32 / 4 {
            return Err(Error::Domain(format!(
                "OAM subspace |l| must be a positive integer, got {subspace_l}"
            )));
        }
        Ok(Space {
            subspace_l,
            oams,
            paths,
        })
    }

    fn of(l: u32, oams: OamSet, paths: PathSet) -> Self {
        Space::new(l, oams, paths).expect("OAM subspace |l| must be >= 1")
    }

    /// The four-dimensional codebook space `{R,L} ⊗ {+ℓ,−ℓ}`.
    ///
    /// Panics if `l == 0`.
    pub fn codebook(l: u32) -> Self {
        Space::of(l, OamSet::Pair, PathSet::Unsplit)
    }

    /// Codebook space plus the Gaussian `ℓ = 0` mode, used while generating.
    pub fn source(l: u32) -> Self {
        Space::of(l, OamSet::PairAndGaussian, PathSet::Unsplit)
    }

    pub fn split(l: u32) -> Self {
        Space::of(l, OamSet::Pair, PathSet::Split)
    }

    pub fn output(l: u32) -> Self {
        Space::of(l, OamSet::Pair, PathSet::Output)
    }

    pub fn subspace_l(&self) -> u32 {
        self.subspace_l
    }

    pub fn oam_set(&self) -> OamSet {
        self.oams
    }

    pub fn path_set(&self) -> PathSet {
        self.paths
    }

    fn oam_values(&self) -> ([i32; 3], usize) {
        let l = self.subspace_l as i32;
        match self.oams {
            OamSet::Pair => ([l, -l, 0], 2),
            OamSet::PairAndGaussian => ([l, -l, 0], 3),
        }
    }

    pub fn dim(&self) -> usize {
        self.paths.paths().len() * 2 * self.oam_values().1
    }

    pub fn index_of(&self, b: &BasisIndex) -> Option<usize> {
        let (oams, n_oam) = self.oam_values();
        let oam_i = oams[..n_oam].iter().position(|&o| o == b.oam)?;
        let path_i = self.paths.paths().iter().position(|&p| p == b.path)?;
        Some(path_i * 2 * n_oam + b.pol.index() * n_oam + oam_i)
    }

    pub fn basis(&self, i: usize) -> BasisIndex {
        let (oams, n_oam) = self.oam_values();
        let block = 2 * n_oam;
        let path = self.paths.paths()[i / block];
        let pol = if (i % block) / n_oam == 0 { Pol::R } else { Pol::L };
        BasisIndex::new(pol, oams[i % n_oam], path)
    }

    pub fn iter(&self) -> impl Iterator<Item = BasisIndex> + '_ {
        (0..self.dim()).map(move |i| self.basis(i))
    }
}

/// One entry of the JSON state dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateDumpEntry {
    pub pol: Pol,
    pub oam: i32,
    pub path: Path,
    pub re: f64,
    pub im: f64,
}

/// A normalised pure state of one photon.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridState {
    space: Space,
    amps: Vec<C64>,
}

impl HybridState {
    /// Builds a state from amplitudes in canonical order; they must already be
    /// normalised.
    pub fn new(space: Space, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a {}-dimensional space",
                amps.len(),
                space.dim()
            )));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvariantViolation(format!(
                "state norm squared is {norm}, expected 1"
            )));
        }
        Ok(HybridState { space, amps })
    }

    /// Normalises `amps` before building the state.
    pub fn normalized(space: Space, mut amps: Vec<C64>) -> Result<Self> {
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-300 {
            return Err(Error::InvariantViolation("zero vector".into()));
        }
        amps.iter_mut().for_each(|a| *a /= norm);
        HybridState::new(space, amps)
    }

    pub fn basis_state(space: Space, index: BasisIndex) -> Result<Self> {
        let i = space.index_of(&index).ok_or_else(|| {
            Error::Domain(format!("{index:?} is not in the modelled basis"))
        })?;
        let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
        amps[i] = C64::new(1.0, 0.0);
        Ok(HybridState { space, amps })
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn amplitude(&self, index: &BasisIndex) -> C64 {
        self.space
            .index_of(index)
            .map_or(C64::new(0.0, 0.0), |i| self.amps[i])
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Re-expresses the state in another space with the same `|ℓ|`. Fails with a
    /// domain error if any weight would be lost.
    pub fn reexpress(&self, target: Space) -> Result<HybridState> {
        if target.subspace_l != self.space.subspace_l {
            return Err(Error::DimensionMismatch(format!(
                "|l| = {} vs {}",
                self.space.subspace_l, target.subspace_l
            )));
        }
        let mut out = vec![C64::new(0.0, 0.0); target.dim()];
        for (i, a) in self.amps.iter().enumerate() {
            match target.index_of(&self.space.basis(i)) {
                Some(j) => out[j] = *a,
                None if a.norm_sqr() > SUPPORT_TOL => {
                    return Err(Error::Domain(format!(
                        "state has weight {:.3e} on {:?}, outside the target space",
                        a.norm_sqr(),
                        self.space.basis(i)
                    )))
                }
                None => {}
            }
        }
        HybridState::normalized(target, out)
    }

    /// `|⟨self|other⟩|²`, i.e. the overlap up to global phase.
    pub fn fidelity(&self, other: &HybridState) -> Result<f64> {
        Ok(inner_product(self, other)?.norm_sqr())
    }

    pub fn dump(&self) -> Vec<StateDumpEntry> {
        self.space
            .iter()
            .zip(&self.amps)
            .map(|(b, a)| StateDumpEntry {
                pol: b.pol,
                oam: b.oam,
                path: b.path,
                re: a.re,
                im: a.im,
            })
            .collect()
    }

    pub fn dump_json(&self) -> String {
        serde_json::to_string_pretty(&self.dump()).expect("state dump serialises")
    }
}

fn check_same_space(a: Space, b: Space) -> Result<()> {
    if a.subspace_l != b.subspace_l || a.oams != b.oams {
        return Err(Error::DimensionMismatch(format!("{a:?} vs {b:?}")));
    }
    if a.paths != b.paths {
        return Err(Error::Domain(format!(
            "path labels differ: {:?} vs {:?}",
            a.paths, b.paths
        )));
    }
    Ok(())
}

/// `⟨a|b⟩`, conjugate-linear in `a`.
pub fn inner_product(a: &HybridState, b: &HybridState) -> Result<C64> {
    check_same_space(a.space, b.space)?;
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// A linear optical element as a dense matrix from an input space to an
/// output space.
///
/// The element is an isometry on its domain (`U†U = I` restricted to the
/// domain columns). Square elements with a full domain are unitary. Columns
/// outside the domain are basis states whose image leaves the modelled set
/// (for instance a q-plate raising OAM past ±ℓ); applying the element to a
/// state with weight there is a domain error.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementOperator {
    label: String,
    input: Space,
    output: Space,
    /// Row-major, `output.dim() × input.dim()`.
    matrix: Vec<C64>,
    domain: Vec<bool>,
}

impl ElementOperator {
    pub fn new(
        label: impl Into<String>,
        input: Space,
        output: Space,
        matrix: Vec<C64>,
    ) -> Result<Self> {
        let domain = vec![true; input.dim()];
        ElementOperator::partial(label, input, output, matrix, domain)
    }

    pub fn partial(
        label: impl Into<String>,
        input: Space,
        output: Space,
        matrix: Vec<C64>,
        domain: Vec<bool>,
    ) -> Result<Self> {
        let label = label.into();
        if matrix.len() != input.dim() * output.dim() || domain.len() != input.dim() {
            return Err(Error::DimensionMismatch(format!(
                "element {label}: matrix has {} entries, expected {}x{}",
                matrix.len(),
                output.dim(),
                input.dim()
            )));
        }
        let op = ElementOperator {
            label,
            input,
            output,
            matrix,
            domain,
        };
        let defect = op.unitarity_defect();
        if defect >= UNITARITY_TOL {
            return Err(Error::InvariantViolation(format!(
                "element {} is not unitary on its domain: ||U†U - I|| = {defect:.3e}",
                op.label
            )));
        }
        Ok(op)
    }

    pub fn identity(space: Space) -> Self {
        let n = space.dim();
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        for i in 0..n {
            m[i * n + i] = C64::new(1.0, 0.0);
        }
        ElementOperator::new("identity", space, space, m).expect("identity is unitary")
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn input(&self) -> Space {
        self.input
    }

    pub fn output(&self) -> Space {
        self.output
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.matrix[row * self.input.dim() + col]
    }

    pub fn domain(&self) -> &[bool] {
        &self.domain
    }

    pub fn is_full_domain(&self) -> bool {
        self.domain.iter().all(|&d| d)
    }

    /// Max row sum of `|U†U − I|` over the domain block.
    pub fn unitarity_defect(&self) -> f64 {
        let (rows, cols) = (self.output.dim(), self.input.dim());
        let dom: Vec<usize> = (0..cols).filter(|&c| self.domain[c]).collect();
        dom.iter()
            .map(|&i| {
                dom.iter()
                    .map(|&j| {
                        let g: C64 = (0..rows)
                            .map(|r| self.matrix[r * cols + i].conj() * self.matrix[r * cols + j])
                            .sum();
                        let target = if i == j { 1.0 } else { 0.0 };
                        (g - target).norm()
                    })
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// `U†`. Only defined for square elements with a full domain.
    pub fn adjoint(&self) -> Result<Self> {
        if self.input.dim() != self.output.dim() || !self.is_full_domain() {
            return Err(Error::Domain(format!(
                "adjoint of {} requires a square, fully defined element",
                self.label
            )));
        }
        let n = self.input.dim();
        let mut m = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in 0..n {
                m[c * n + r] = self.matrix[r * n + c].conj();
            }
        }
        ElementOperator::new(
            format!("{}^dagger", self.label),
            self.output,
            self.input,
            m,
        )
    }

    /// The composition `next ∘ self`.
    pub fn then(&self, next: &ElementOperator) -> Result<Self> {
        if self.output != next.input {
            return Err(Error::DimensionMismatch(format!(
                "cannot chain {} into {}",
                self.label, next.label
            )));
        }
        let (n_in, n_mid, n_out) = (self.input.dim(), self.output.dim(), next.output.dim());
        let mut m = vec![C64::new(0.0, 0.0); n_out * n_in];
        for r in 0..n_out {
            for c in 0..n_in {
                m[r * n_in + c] = (0..n_mid)
                    .map(|k| next.matrix[r * n_mid + k] * self.matrix[k * n_in + c])
                    .sum();
            }
        }
        // A column stays in the domain only if its image avoids next's undefined columns.
        let domain = (0..n_in)
            .map(|c| {
                self.domain[c]
                    && (0..n_mid).all(|k| {
                        next.domain[k] || self.matrix[k * n_in + c].norm_sqr() <= SUPPORT_TOL
                    })
            })
            .collect();
        ElementOperator::partial(
            format!("{} -> {}", self.label, next.label),
            self.input,
            next.output,
            m,
            domain,
        )
    }
}

/// `U|s⟩`.
pub fn apply(op: &ElementOperator, s: &HybridState) -> Result<HybridState> {
    check_same_space(op.input, s.space)?;
    let cols = op.input.dim();
    for (c, a) in s.amps.iter().enumerate() {
        if !op.domain[c] && a.norm_sqr() > SUPPORT_TOL {
            return Err(Error::Domain(format!(
                "{} is undefined on {:?} (weight {:.3e}): image leaves the modelled OAM set",
                op.label,
                op.input.basis(c),
                a.norm_sqr()
            )));
        }
    }
    let out = (0..op.output.dim())
        .map(|r| {
            op.matrix[r * cols..(r + 1) * cols]
                .iter()
                .zip(&s.amps)
                .filter(|(_, a)| a.re != 0.0 || a.im != 0.0)
                .map(|(m, a)| m * a)
                .sum()
        })
        .collect();
    // Out-of-domain weight below SUPPORT_TOL can shave the norm; renormalise.
    HybridState::normalized(op.output, out)
}

/// A diagonal projector onto a set of basis indices, e.g. one detector port.
#[derive(Clone, Debug, PartialEq)]
pub struct PortProjector {
    pub label: String,
    pub indices: Vec<usize>,
}

/// Born-rule probabilities `p_i = ⟨s|P_i|s⟩` for a set of disjoint port projectors
/// that together cover the support of `s`.
pub fn outcome_distribution(s: &HybridState, ports: &[PortProjector]) -> Result<Vec<f64>> {
    let n = s.space.dim();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (p, port) in ports.iter().enumerate() {
        for &i in &port.indices {
            if i >= n {
                return Err(Error::DimensionMismatch(format!(
                    "port {} references index {i} in a {n}-dimensional space",
                    port.label
                )));
            }
            if let Some(q) = owner[i] {
                return Err(Error::IncompleteProjectors(format!(
                    "ports {} and {} overlap",
                    ports[q].label, port.label
                )));
            }
            owner[i] = Some(p);
        }
    }
    let mut probs = vec![0.0; ports.len()];
    for (i, a) in s.amps.iter().enumerate() {
        let w = a.norm_sqr();
        match owner[i] {
            Some(p) => probs[p] += w,
            None if w > SUPPORT_TOL => {
                return Err(Error::IncompleteProjectors(format!(
                    "{:?} carries weight {w:.3e} but no port covers it",
                    s.space.basis(i)
                )))
            }
            None => {}
        }
    }
    Ok(probs)
}

/// Draws an outcome index from `probs` with one uniform variate.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}
