//! Optical elements and the wave-plate/q-plate recipes that generate the codebook.
//!
//! Conventions:
//! - Circular kets in Jones (H, V) coordinates: `R = (H − iV)/√2`, `L = (H + iV)/√2`.
//! - A retarder with fast axis at angle α and retardance Γ is
//!   `Rot(α) · diag(1, e^{iΓ}) · Rot(−α)`; quarter-wave Γ = π/2, half-wave Γ = π.
//!   Wave-plate angles are fast-axis angles.
//! - q-plate: `|m, L⟩ → |m + 2q, R⟩`, `|m, R⟩ → |m − 2q, L⟩`, no orientation phase.
//! - Beam splitter: symmetric 50:50, transmission `1/√2`, reflection `i/√2`.
//!   Reflection flips both OAM sign and circular handedness, which is why the
//!   two arms arrive at each output port with matching polarisation. The dynamic
//!   phase δ sits on arm b.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::angle::PiFraction;
use crate::codebook::CodebookLabel;
use crate::error::{Error, Result};
use crate::hilbert::{
    apply, BasisIndex, ElementOperator, HybridState, Path, PathSet, Pol, Space, C64,
};

/// Default interferometer phase between the grating paths.
pub const DEFAULT_DELTA: f64 = FRAC_PI_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavePlateKind {
    Quarter,
    Half,
}

impl WavePlateKind {
    pub fn retardance(self) -> f64 {
        match self {
            WavePlateKind::Quarter => FRAC_PI_2,
            WavePlateKind::Half => PI,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WavePlateSpec {
    pub kind: WavePlateKind,
    /// Fast-axis angle in radians.
    pub angle: f64,
}

impl WavePlateSpec {
    pub fn new(kind: WavePlateKind, angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(Error::Domain(format!("wave-plate angle {angle} is not finite")));
        }
        Ok(WavePlateSpec { kind, angle })
    }

    pub fn quarter(angle: f64) -> Self {
        WavePlateSpec::new(WavePlateKind::Quarter, angle).expect("finite angle")
    }

    pub fn half(angle: f64) -> Self {
        WavePlateSpec::new(WavePlateKind::Half, angle).expect("finite angle")
    }

    /// Jones matrix in the (H, V) basis, row-major.
    pub fn jones_linear(&self) -> [[C64; 2]; 2] {
        let (s, c) = self.angle.sin_cos();
        let e = C64::from_polar(1.0, self.kind.retardance());
        // Rot(α) diag(1, e) Rot(−α)
        [
            [c * c + e * s * s, (C64::new(1.0, 0.0) - e) * c * s],
            [(C64::new(1.0, 0.0) - e) * c * s, s * s + e * c * c],
        ]
    }

    /// Jones matrix in the (R, L) basis, row-major.
    pub fn jones_circular(&self) -> [[C64; 2]; 2] {
        linear_to_circular(self.jones_linear())
    }
}

/// Circular kets as columns in (H, V) coordinates.
fn circular_kets() -> [[C64; 2]; 2] {
    let h = FRAC_1_SQRT_2;
    // columns: R, L
    [
        [C64::new(h, 0.0), C64::new(h, 0.0)],
        [C64::new(0.0, -h), C64::new(0.0, h)],
    ]
}

fn linear_to_circular(j: [[C64; 2]; 2]) -> [[C64; 2]; 2] {
    let t = circular_kets();
    let mut out = [[C64::new(0.0, 0.0); 2]; 2];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            for a in 0..2 {
                for b in 0..2 {
                    *cell += t[a][r].conj() * j[a][b] * t[b][c];
                }
            }
        }
    }
    out
}

/// Polarisation state with Jones vector `(h, v)` expressed as `(R, L)` amplitudes.
pub fn jones_to_circular(h: C64, v: C64) -> [C64; 2] {
    let t = circular_kets();
    [
        t[0][0].conj() * h + t[1][0].conj() * v,
        t[0][1].conj() * h + t[1][1].conj() * v,
    ]
}

fn pol_row(p: Pol) -> usize {
    match p {
        Pol::R => 0,
        Pol::L => 1,
    }
}

/// Builds an operator that acts on polarisation only, identity on OAM and path.
pub fn polarisation_operator(
    label: impl Into<String>,
    m: [[C64; 2]; 2],
    space: Space,
) -> Result<ElementOperator> {
    let n = space.dim();
    let mut mat = vec![C64::new(0.0, 0.0); n * n];
    for (col, b) in space.iter().enumerate() {
        for p in [Pol::R, Pol::L] {
            let row = space
                .index_of(&BasisIndex::new(p, b.oam, b.path))
                .expect("pol partner in same space");
            mat[row * n + col] = m[pol_row(p)][pol_row(b.pol)];
        }
    }
    ElementOperator::new(label, space, space, mat)
}

pub fn waveplate_operator(spec: WavePlateSpec, space: Space) -> Result<ElementOperator> {
    let label = match spec.kind {
        WavePlateKind::Quarter => format!("QWP({:.4})", spec.angle),
        WavePlateKind::Half => format!("HWP({:.4})", spec.angle),
    };
    polarisation_operator(label, spec.jones_circular(), space)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QPlateSpec {
    twice_q: i32,
}

impl QPlateSpec {
    /// Topological charge `q`; `2q` must be an integer.
    pub fn new(q: f64) -> Result<Self> {
        let t = 2.0 * q;
        if !t.is_finite() || (t - t.round()).abs() > 1e-12 || t.abs() > i32::MAX as f64 {
            return Err(Error::Domain(format!("q = {q} is not a half-integer")));
        }
        Ok(QPlateSpec {
            twice_q: t.round() as i32,
        })
    }

    pub fn from_twice_q(twice_q: i32) -> Self {
        QPlateSpec { twice_q }
    }

    pub fn q(&self) -> f64 {
        self.twice_q as f64 / 2.0
    }

    pub fn twice_q(&self) -> i32 {
        self.twice_q
    }
}

/// q-plate on `space`. Basis states whose image falls outside the modelled OAM
/// set are left out of the operator's domain.
pub fn qplate_operator(spec: QPlateSpec, space: Space) -> Result<ElementOperator> {
    let n = space.dim();
    let mut mat = vec![C64::new(0.0, 0.0); n * n];
    let mut domain = vec![false; n];
    for (col, b) in space.iter().enumerate() {
        let image = match b.pol {
            Pol::L => BasisIndex::new(Pol::R, b.oam + spec.twice_q, b.path),
            Pol::R => BasisIndex::new(Pol::L, b.oam - spec.twice_q, b.path),
        };
        if let Some(row) = space.index_of(&image) {
            mat[row * n + col] = C64::new(1.0, 0.0);
            domain[col] = true;
        }
    }
    ElementOperator::partial(format!("q-plate(q={})", spec.q()), space, space, mat, domain)
}

/// Polarisation grating: routes R to path a and L to path b. `leakage` is the
/// probability of a photon going to the wrong path (coherent, amplitude `i√leakage`).
pub fn pg_split_operator_with_leakage(l: u32, leakage: f64) -> Result<ElementOperator> {
    if !(0.0..=1.0).contains(&leakage) {
        return Err(Error::Domain(format!("leakage {leakage} outside [0,1]")));
    }
    let input = Space::codebook(l);
    let output = Space::split(l);
    let (n_in, n_out) = (input.dim(), output.dim());
    let mut mat = vec![C64::new(0.0, 0.0); n_in * n_out];
    let keep = C64::new((1.0 - leakage).sqrt(), 0.0);
    let leak = C64::new(0.0, leakage.sqrt());
    for (col, b) in input.iter().enumerate() {
        let (own, other) = match b.pol {
            Pol::R => (Path::A, Path::B),
            Pol::L => (Path::B, Path::A),
        };
        let r_own = output.index_of(&BasisIndex::new(b.pol, b.oam, own)).unwrap();
        let r_other = output.index_of(&BasisIndex::new(b.pol, b.oam, other)).unwrap();
        mat[r_own * n_in + col] = keep;
        mat[r_other * n_in + col] = leak;
    }
    ElementOperator::new("PG", input, output, mat)
}

pub fn pg_split_operator(l: u32) -> Result<ElementOperator> {
    pg_split_operator_with_leakage(l, 0.0)
}

/// 50:50 beam splitter interfering paths a, b into output ports c, d, with
/// dynamic phase `delta` on path b.
pub fn bs_operator(l: u32, delta: f64) -> Result<ElementOperator> {
    let input = Space::split(l);
    let output = Space::output(l);
    let n = input.dim();
    let mut mat = vec![C64::new(0.0, 0.0); n * n];
    let t = C64::new(FRAC_1_SQRT_2, 0.0);
    let r = C64::new(0.0, FRAC_1_SQRT_2);
    let phase = C64::from_polar(1.0, delta);
    for (col, b) in input.iter().enumerate() {
        let (through, crossed, arm_phase) = match b.path {
            Path::A => (Path::C, Path::D, C64::new(1.0, 0.0)),
            Path::B => (Path::D, Path::C, phase),
            _ => unreachable!("split space carries paths a, b"),
        };
        let row_t = output
            .index_of(&BasisIndex::new(b.pol, b.oam, through))
            .unwrap();
        let row_r = output
            .index_of(&BasisIndex::new(b.pol.flipped(), -b.oam, crossed))
            .unwrap();
        mat[row_t * n + col] += arm_phase * t;
        mat[row_r * n + col] += arm_phase * r;
    }
    ElementOperator::new(format!("BS(delta={delta:.4})"), input, output, mat)
}

/// One column of the generation table. The q-plate charge is fixed by the
/// subspace (`2|q| = ℓ`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RecipeElement {
    QuarterWave { angle: PiFraction },
    HalfWave { angle: PiFraction },
    QPlate,
}

/// Number of element slots in a recipe: λ/4, λ/2, q-plate, λ/4, λ/2.
pub const RECIPE_SLOTS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecipe {
    /// Human-readable mode name, e.g. `psi(+l,0)`.
    pub mode: String,
    pub target: CodebookLabel,
    pub elements: Vec<RecipeElement>,
}

impl GenerationRecipe {
    /// Slot of each element in table-column order. Fails if the elements are
    /// not ordered as (λ/4)? (λ/2)? q-plate (λ/4)? (λ/2)?.
    pub fn slots(&self) -> Result<Vec<usize>> {
        let mut slots = Vec::with_capacity(self.elements.len());
        let mut next = 0usize;
        let mut seen_qplate = false;
        for e in &self.elements {
            let candidates: &[usize] = match e {
                RecipeElement::QuarterWave { .. } => &[0, 3],
                RecipeElement::HalfWave { .. } => &[1, 4],
                RecipeElement::QPlate => &[2],
            };
            let slot = candidates
                .iter()
                .copied()
                .find(|&s| s >= next)
                .ok_or_else(|| {
                    Error::Config(format!("recipe {}: elements out of table order", self.mode))
                })?;
            if matches!(e, RecipeElement::QPlate) {
                seen_qplate = true;
            }
            slots.push(slot);
            next = slot + 1;
        }
        if !seen_qplate {
            return Err(Error::Config(format!("recipe {} has no q-plate", self.mode)));
        }
        Ok(slots)
    }
}

const DEFAULT_RECIPES: &str = include_str!("../data/recipes.json");

pub fn parse_recipes(json: &str) -> Result<Vec<GenerationRecipe>> {
    let recipes: Vec<GenerationRecipe> =
        serde_json::from_str(json).map_err(|e| Error::Parse(e.to_string()))?;
    for r in &recipes {
        r.slots()?;
    }
    Ok(recipes)
}

/// The eight shipped generation recipes, in codebook order.
pub fn default_recipes() -> Vec<GenerationRecipe> {
    let mut r = parse_recipes(DEFAULT_RECIPES).expect("shipped recipes are valid");
    r.sort_by_key(|x| x.target.index());
    r
}

pub fn recipe_for(label: CodebookLabel) -> &'static GenerationRecipe {
    static RECIPES: OnceLock<Vec<GenerationRecipe>> = OnceLock::new();
    RECIPES
        .get_or_init(default_recipes)
        .iter()
        .find(|r| r.target == label)
        .expect("every codebook label has a recipe")
}

/// Horizontally polarised Gaussian input, `|H⟩|ℓ=0⟩`.
pub fn gaussian_input(l: u32) -> HybridState {
    let space = Space::source(l);
    let [r, lc] = jones_to_circular(C64::new(1.0, 0.0), C64::new(0.0, 0.0));
    let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
    amps[space.index_of(&BasisIndex::new(Pol::R, 0, Path::None)).unwrap()] = r;
    amps[space.index_of(&BasisIndex::new(Pol::L, 0, Path::None)).unwrap()] = lc;
    HybridState::normalized(space, amps).expect("nonzero input")
}

/// Runs the recipe on `|H⟩|0⟩` and returns the state in the codebook space.
pub fn generate_mode(recipe: &GenerationRecipe, l: u32) -> Result<HybridState> {
    generate_mode_with_errors(recipe, l, &[0.0; RECIPE_SLOTS])
}

/// As [`generate_mode`], with an additive fast-axis error (radians) per slot.
pub fn generate_mode_with_errors(
    recipe: &GenerationRecipe,
    l: u32,
    angle_errors: &[f64; RECIPE_SLOTS],
) -> Result<HybridState> {
    let space = Space::source(l);
    if space.path_set() != PathSet::Unsplit {
        unreachable!("source space is unsplit");
    }
    let slots = recipe.slots()?;
    let mut s = gaussian_input(l);
    for (e, slot) in recipe.elements.iter().zip(slots) {
        let op = match e {
            RecipeElement::QuarterWave { angle } => waveplate_operator(
                WavePlateSpec::new(WavePlateKind::Quarter, angle.radians() + angle_errors[slot])?,
                space,
            )?,
            RecipeElement::HalfWave { angle } => waveplate_operator(
                WavePlateSpec::new(WavePlateKind::Half, angle.radians() + angle_errors[slot])?,
                space,
            )?,
            RecipeElement::QPlate => qplate_operator(QPlateSpec::from_twice_q(l as i32), space)?,
        };
        s = apply(&op, &s)?;
    }
    s.reexpress(Space::codebook(l))
}
