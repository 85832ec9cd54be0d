//! The eight codebook states: four vector (non-separable) modes and their four
//! mutually unbiased scalar counterparts.
//!
//! Vector modes `ψ_{ℓ,θ} = (|R⟩|ℓ⟩ + e^{iθ}|L⟩|−ℓ⟩)/√2`; scalar modes
//! `φ_{ℓ,θ} = (|R⟩ + e^{i(θ−π/2)}|L⟩)|ℓ⟩/√2`. Bit values:
//!
//! | bits | vector                      | scalar   |
//! |------|-----------------------------|----------|
//! | 00   | (R,+ℓ) + (L,−ℓ)             | D ⊗ −ℓ   |
//! | 01   | (R,+ℓ) − (L,−ℓ)             | D ⊗ +ℓ   |
//! | 10   | (L,+ℓ) + (R,−ℓ)             | A ⊗ −ℓ   |
//! | 11   | (L,+ℓ) − (R,−ℓ)             | A ⊗ +ℓ   |
//!
//! with `D = (R − iL)/√2` and `A = (R + iL)/√2`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::hilbert::{BasisIndex, HybridState, Path, Pol, Space, C64};

/// Codebook family. Also names Bob's analysers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Vector,
    Scalar,
}

impl Basis {
    pub const BOTH: [Basis; 2] = [Basis::Vector, Basis::Scalar];

    pub fn complement(self) -> Basis {
        match self {
            Basis::Vector => Basis::Scalar,
            Basis::Scalar => Basis::Vector,
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Basis::Vector => "vector",
            Basis::Scalar => "scalar",
        })
    }
}

/// A 2-bit data value, serialised as `"00"`..`"11"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(u8);

impl Symbol {
    pub const ALL: [Symbol; 4] = [Symbol(0), Symbol(1), Symbol(2), Symbol(3)];

    pub fn new(value: u8) -> Result<Self, Error> {
        if value < 4 {
            Ok(Symbol(value))
        } else {
            Err(Error::Domain(format!("symbol {value} does not fit in 2 bits")))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// `(high, low)` bits.
    pub fn bits(self) -> (bool, bool) {
        (self.0 & 2 != 0, self.0 & 1 != 0)
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02b}", self.0)
    }
}

impl FromStr for Symbol {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "00" => Ok(Symbol(0)),
            "01" => Ok(Symbol(1)),
            "10" => Ok(Symbol(2)),
            "11" => Ok(Symbol(3)),
            _ => Err(Error::Parse(format!("not a 2-bit value: {s:?}"))),
        }
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

/// One of the eight codebook modes, named `V00`..`V11`, `S00`..`S11`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CodebookLabel {
    pub basis: Basis,
    pub symbol: Symbol,
}

impl CodebookLabel {
    /// Codebook order: the four vector modes, then the four scalar modes.
    pub const ALL: [CodebookLabel; 8] = [
        CodebookLabel::of(Basis::Vector, 0),
        CodebookLabel::of(Basis::Vector, 1),
        CodebookLabel::of(Basis::Vector, 2),
        CodebookLabel::of(Basis::Vector, 3),
        CodebookLabel::of(Basis::Scalar, 0),
        CodebookLabel::of(Basis::Scalar, 1),
        CodebookLabel::of(Basis::Scalar, 2),
        CodebookLabel::of(Basis::Scalar, 3),
    ];

    const fn of(basis: Basis, v: u8) -> Self {
        CodebookLabel {
            basis,
            symbol: Symbol(v),
        }
    }

    pub fn new(basis: Basis, symbol: Symbol) -> Self {
        CodebookLabel { basis, symbol }
    }

    /// Position in codebook order.
    pub fn index(self) -> usize {
        let base = match self.basis {
            Basis::Vector => 0,
            Basis::Scalar => 4,
        };
        base + self.symbol.value() as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        CodebookLabel::ALL.get(i).copied()
    }

    pub fn name(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for CodebookLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.basis {
            Basis::Vector => 'V',
            Basis::Scalar => 'S',
        };
        write!(f, "{p}{}", self.symbol)
    }
}

impl FromStr for CodebookLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let basis = match s.chars().next() {
            Some('V') => Basis::Vector,
            Some('S') => Basis::Scalar,
            _ => return Err(Error::Parse(format!("unknown codebook label {s:?}"))),
        };
        Ok(CodebookLabel::new(basis, s[1..].parse()?))
    }
}

impl Serialize for CodebookLabel {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CodebookLabel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

fn idx(pol: Pol, oam: i32) -> BasisIndex {
    BasisIndex::new(pol, oam, Path::None)
}

fn state_from(l: u32, terms: &[(Pol, i32, C64)]) -> HybridState {
    let space = Space::codebook(l);
    let mut amps = vec![C64::new(0.0, 0.0); space.dim()];
    for &(pol, oam, a) in terms {
        let i = space.index_of(&idx(pol, oam)).expect("codebook index");
        amps[i] += a;
    }
    HybridState::normalized(space, amps).expect("codebook states are nonzero")
}

/// `ψ_{m,θ} = (|R⟩|m⟩ + e^{iθ}|L⟩|−m⟩)/√2` for signed `m = ±ℓ`.
pub fn vector_mode(l: u32, sign: i32, theta: f64) -> HybridState {
    let m = sign.signum() * l as i32;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    state_from(
        l,
        &[(Pol::R, m, h), (Pol::L, -m, h * C64::from_polar(1.0, theta))],
    )
}

/// `φ_{m,θ} = (|R⟩ + e^{i(θ−π/2)}|L⟩)|m⟩/√2` for signed `m = ±ℓ`.
pub fn scalar_mode(l: u32, sign: i32, theta: f64) -> HybridState {
    let m = sign.signum() * l as i32;
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    state_from(
        l,
        &[
            (Pol::R, m, h),
            (Pol::L, m, h * C64::from_polar(1.0, theta - FRAC_PI_2)),
        ],
    )
}

/// The codebook state for `label` in the `|ℓ|` subspace.
pub fn codebook_state(label: CodebookLabel, l: u32) -> HybridState {
    let li = l as i32;
    let one = C64::new(1.0, 0.0);
    let minus_i = C64::new(0.0, -1.0);
    let plus_i = C64::new(0.0, 1.0);
    match (label.basis, label.symbol.value()) {
        (Basis::Vector, 0) => state_from(l, &[(Pol::R, li, one), (Pol::L, -li, one)]),
        (Basis::Vector, 1) => state_from(l, &[(Pol::R, li, one), (Pol::L, -li, -one)]),
        (Basis::Vector, 2) => state_from(l, &[(Pol::L, li, one), (Pol::R, -li, one)]),
        (Basis::Vector, 3) => state_from(l, &[(Pol::L, li, one), (Pol::R, -li, -one)]),
        // D = (R − iL)/√2, A = (R + iL)/√2
        (Basis::Scalar, 0) => state_from(l, &[(Pol::R, -li, one), (Pol::L, -li, minus_i)]),
        (Basis::Scalar, 1) => state_from(l, &[(Pol::R, li, one), (Pol::L, li, minus_i)]),
        (Basis::Scalar, 2) => state_from(l, &[(Pol::R, -li, one), (Pol::L, -li, plus_i)]),
        (Basis::Scalar, 3) => state_from(l, &[(Pol::R, li, one), (Pol::L, li, plus_i)]),
        _ => unreachable!("symbols are 2-bit"),
    }
}
