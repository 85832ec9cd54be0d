//! Crosstalk-matrix estimation and the information-theoretic security metrics.
//!
//! The matrix has one row per prepared codebook mode and one column per decoded
//! mode, both in codebook order. Every trial measures the same channel output in
//! both analysers, so each row holds two conditional distributions: the vector
//! quadrant and the scalar quadrant of a row each sum to one.
//!
//! The key rate is `R = I_AB − I_AE`. The `I_AB − I_BE` branch of the usual
//! maximum is not computable from the detection fidelity alone and is omitted.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{misdetect, perturb, perturb_coherent, prepare, ImperfectionModel};
use crate::codebook::{codebook_state, Basis, CodebookLabel};
use crate::detection::{Analyser, PortMap};
use crate::error::{Error, Result};
use crate::rng::{stream, DOMAIN_CALIBRATION, DOMAIN_CROSSTALK};

pub const MODES: usize = 8;

/// Trials handled by one parallel work item.
const BLOCK: u64 = 4096;

pub type Matrix8 = [[f64; MODES]; MODES];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrosstalkMatrix {
    pub subspace_l: u32,
    pub entries: Matrix8,
    /// Binomial standard error per entry; zero for exact matrices.
    pub std_errors: Matrix8,
    /// Trials per prepared mode; zero for exact matrices.
    pub trials_per_row: u64,
}

impl CrosstalkMatrix {
    pub fn exact(subspace_l: u32, entries: Matrix8) -> Result<Self> {
        let m = CrosstalkMatrix {
            subspace_l,
            entries,
            std_errors: [[0.0; MODES]; MODES],
            trials_per_row: 0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_counts(subspace_l: u32, counts: &[[u64; MODES]; MODES], trials: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::Domain("trials_per_mode must be ≥ 1".into()));
        }
        let n = trials as f64;
        let mut entries = [[0.0; MODES]; MODES];
        let mut std_errors = [[0.0; MODES]; MODES];
        for r in 0..MODES {
            for c in 0..MODES {
                let p = counts[r][c] as f64 / n;
                entries[r][c] = p;
                std_errors[r][c] = (p * (1.0 - p) / n).sqrt();
            }
        }
        let m = CrosstalkMatrix {
            subspace_l,
            entries,
            std_errors,
            trials_per_row: trials,
        };
        m.validate()?;
        Ok(m)
    }

    /// Entries in [0, 1] and every row quadrant summing to one within
    /// `3/√trials` (or 1e-9 for exact matrices).
    pub fn validate(&self) -> Result<()> {
        let tol = self.row_tolerance();
        for (r, row) in self.entries.iter().enumerate() {
            if row.iter().any(|p| !(-1e-12..=1.0 + 1e-12).contains(p)) {
                return Err(Error::InvariantViolation(format!("row {r} has an entry outside [0,1]")));
            }
            for q in [0, 4] {
                let s: f64 = row[q..q + 4].iter().sum();
                if (s - 1.0).abs() > tol {
                    return Err(Error::InvariantViolation(format!(
                        "row {r} quadrant at column {q} sums to {s}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn row_tolerance(&self) -> f64 {
        if self.trials_per_row == 0 {
            1e-9
        } else {
            3.0 / (self.trials_per_row as f64).sqrt()
        }
    }

    /// Sum of the four columns of `analyser` in row `row`.
    pub fn quadrant_row_sum(&self, row: usize, analyser: Basis) -> f64 {
        let q = quadrant_offset(analyser);
        self.entries[row][q..q + 4].iter().sum()
    }

    pub fn quadrant(&self, prepared: Basis, measured: Basis) -> [[f64; 4]; 4] {
        let (r0, c0) = (quadrant_offset(prepared), quadrant_offset(measured));
        let mut out = [[0.0; 4]; 4];
        for (i, row) in out.iter_mut().enumerate() {
            row.copy_from_slice(&self.entries[r0 + i][c0..c0 + 4]);
        }
        out
    }

    /// Mean over the 16 entries of each complementary-basis quadrant.
    pub fn off_basis_mean(&self) -> f64 {
        let mut s = 0.0;
        for (p, m) in [(Basis::Vector, Basis::Scalar), (Basis::Scalar, Basis::Vector)] {
            s += self.quadrant(p, m).iter().flatten().sum::<f64>();
        }
        s / 32.0
    }

    /// CSV with a header row and a leading label column, codebook order.
    pub fn to_csv(&self) -> String {
        let names: Vec<String> = CodebookLabel::ALL.iter().map(|l| l.name()).collect();
        let mut out = format!("prepared,{}\n", names.join(","));
        for (r, row) in self.entries.iter().enumerate() {
            out.push_str(&names[r]);
            for p in row {
                let _ = write!(out, ",{p:.6}");
            }
            out.push('\n');
        }
        out
    }
}

fn quadrant_offset(b: Basis) -> usize {
    match b {
        Basis::Vector => 0,
        Basis::Scalar => 4,
    }
}

/// Monte Carlo crosstalk estimate: each trial prepares the mode, passes it
/// through the channel and measures it in both analysers with independent
/// variates. Independent of the rayon pool size.
pub fn estimate_crosstalk(
    model: &ImperfectionModel,
    l: u32,
    trials_per_mode: u64,
    seed: u64,
) -> Result<CrosstalkMatrix> {
    if trials_per_mode == 0 {
        return Err(Error::Domain("trials_per_mode must be ≥ 1".into()));
    }
    model.validate()?;
    let analysers = [Analyser::for_basis(Basis::Vector, l)?, Analyser::for_basis(Basis::Scalar, l)?];
    let map = PortMap::default();
    let blocks = trials_per_mode.div_ceil(BLOCK);
    let work: Vec<(usize, u64)> = (0..MODES)
        .flat_map(|m| (0..blocks).map(move |b| (m, b)))
        .collect();
    let partial: Vec<Result<(usize, [u64; MODES])>> = work
        .par_iter()
        .map(|&(mode, block)| {
            let label = CodebookLabel::ALL[mode];
            let mut counts = [0u64; MODES];
            let end = ((block + 1) * BLOCK).min(trials_per_mode);
            for trial in block * BLOCK..end {
                let mut rng = stream(seed, DOMAIN_CROSSTALK, ((mode as u64) << 32) | trial);
                let s = prepare(label, l, model, &mut rng)?;
                let s = perturb(&s, model, &mut rng)?;
                for a in &analysers {
                    let u: f64 = rng.random();
                    let out = misdetect(a.measure(&s, u)?, &map, model, &mut rng);
                    let bits = out.decoded_bits.expect("deterministic analysers always click");
                    counts[CodebookLabel::new(a.basis(), bits).index()] += 1;
                }
            }
            Ok((mode, counts))
        })
        .collect();
    let mut counts = [[0u64; MODES]; MODES];
    for p in partial {
        let (mode, c) = p?;
        for (acc, x) in counts[mode].iter_mut().zip(c) {
            *acc += x;
        }
    }
    CrosstalkMatrix::from_counts(l, &counts, trials_per_mode)
}

/// Expected crosstalk matrix from Born probabilities. Coherent knobs are
/// averaged over `samples` jitter draws; depolarisation and misdetection are
/// mixed in analytically. With no coherent knobs one sample is exact.
pub fn exact_crosstalk(
    model: &ImperfectionModel,
    l: u32,
    samples: usize,
    seed: u64,
) -> Result<CrosstalkMatrix> {
    model.validate()?;
    let coherent = model.coherent_part();
    let samples = if coherent.is_ideal() { 1 } else { samples.max(1) };
    let analysers = [Analyser::for_basis(Basis::Vector, l)?, Analyser::for_basis(Basis::Scalar, l)?];
    let mut entries = [[0.0; MODES]; MODES];
    for i in 0..samples {
        let mut rng = stream(seed, DOMAIN_CALIBRATION, i as u64);
        for (r, label) in CodebookLabel::ALL.iter().enumerate() {
            let s = prepare(*label, l, &coherent, &mut rng)?;
            let s = perturb_coherent(&s, &coherent, &mut rng)?;
            for a in &analysers {
                let p = a.symbol_probabilities(&s)?;
                let q = quadrant_offset(a.basis());
                for k in 0..4 {
                    entries[r][q + k] += p[k];
                }
            }
        }
    }
    let (dp, mp) = (model.depolarizing_p, model.misdetection_p);
    for row in entries.iter_mut() {
        for e in row.iter_mut() {
            let p = *e / samples as f64;
            *e = (1.0 - mp) * ((1.0 - dp) * p + dp * 0.25) + mp * 0.25;
        }
    }
    CrosstalkMatrix::exact(l, entries)
}

/// `|⟨column|row⟩|²` straight from the codebook states, with no optics involved.
pub fn codebook_overlap_matrix(l: u32) -> Result<CrosstalkMatrix> {
    let mut entries = [[0.0; MODES]; MODES];
    for (r, a) in CodebookLabel::ALL.iter().enumerate() {
        for (c, b) in CodebookLabel::ALL.iter().enumerate() {
            entries[r][c] = codebook_state(*b, l).fidelity(&codebook_state(*a, l))?;
        }
    }
    CrosstalkMatrix::exact(l, entries)
}

/// Mean of the eight same-basis diagonal entries.
pub fn fidelity_from_matrix(m: &CrosstalkMatrix) -> f64 {
    (0..MODES).map(|i| m.entries[i][i]).sum::<f64>() / MODES as f64
}

/// Standard error of [`fidelity_from_matrix`].
pub fn fidelity_std_error(m: &CrosstalkMatrix) -> f64 {
    (0..MODES)
        .map(|i| m.std_errors[i][i].powi(2))
        .sum::<f64>()
        .sqrt()
        / MODES as f64
}

/// `x log2 y` with `0 · log 0 = 0`.
fn xlog2(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.log2()
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {v} outside [0,1]")))
    }
}

fn check_dim(d: u32) -> Result<()> {
    if d >= 2 {
        Ok(())
    } else {
        Err(Error::Domain(format!("dimension {d} must be ≥ 2")))
    }
}

/// Error-term denominator of the Alice–Bob mutual information.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutualInfoVariant {
    /// `(1−F) log2((1−F)/d)`.
    #[default]
    FullD,
    /// `(1−F) log2((1−F)/(d−1))`, errors spread over the `d−1` wrong outcomes.
    DMinusOne,
}

/// `I_AB = log2 d + F log2 F + (1−F) log2((1−F)/d)`.
pub fn mutual_info_ab(f: f64, d: u32) -> Result<f64> {
    mutual_info_ab_with(f, d, MutualInfoVariant::FullD)
}

pub fn mutual_info_ab_with(f: f64, d: u32, variant: MutualInfoVariant) -> Result<f64> {
    check_unit("F", f)?;
    check_dim(d)?;
    let denom = match variant {
        MutualInfoVariant::FullD => d as f64,
        MutualInfoVariant::DMinusOne => (d - 1) as f64,
    };
    Ok((d as f64).log2() + xlog2(f, f) + xlog2(1.0 - f, (1.0 - f) / denom))
}

/// `F_E = F/d + (d−1)(1−F)/d + 2√((d−1)F(1−F))/d`.
pub fn cloning_fidelity(f: f64, d: u32) -> Result<f64> {
    check_unit("F", f)?;
    check_dim(d)?;
    let d = d as f64;
    Ok(f / d + (d - 1.0) * (1.0 - f) / d + 2.0 * ((d - 1.0) * f * (1.0 - f)).sqrt() / d)
}

/// `I_AE = log2 d + (F+F_E−1) log2((F+F_E−1)/F) + (1−F_E) log2((1−F_E)/((d−1)F))`.
pub fn mutual_info_ae(f: f64, f_e: f64, d: u32) -> Result<f64> {
    check_unit("F", f)?;
    check_unit("F_E", f_e)?;
    check_dim(d)?;
    let a = f + f_e - 1.0;
    if a < 0.0 {
        return Err(Error::Domain(format!(
            "F + F_E − 1 = {a:.6} < 0 (F = {f}, F_E = {f_e}): logarithm argument negative"
        )));
    }
    if f == 0.0 && (a > 0.0 || f_e < 1.0) {
        return Err(Error::Domain("F = 0 makes the conditional terms undefined".into()));
    }
    let d = d as f64;
    Ok(d.log2() + xlog2(a, a / f) + xlog2(1.0 - f_e, (1.0 - f_e) / ((d - 1.0) * f)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyRate {
    pub value: f64,
    /// True when `I_AB − I_AE` was negative and the rate was clamped to zero.
    pub clamped: bool,
}

pub fn secret_key_rate(i_ab: f64, i_ae: f64) -> KeyRate {
    let r = i_ab - i_ae;
    KeyRate {
        value: r.max(0.0),
        clamped: r < 0.0,
    }
}

/// Largest tolerable symbol error rate for the given dimension, when known.
pub fn qber_bound(d: u32) -> Option<f64> {
    match d {
        2 => Some(0.11),
        4 => Some(0.18),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Secure,
    Insecure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecurityReport {
    pub dimension: u32,
    pub fidelity: f64,
    pub fidelity_std_error: f64,
    pub mutual_info_ab: f64,
    pub mutual_info_variant: MutualInfoVariant,
    pub cloning_fidelity: f64,
    pub mutual_info_ae: f64,
    pub qber: f64,
    pub qber_std_error: f64,
    pub key_rate: f64,
    pub key_rate_clamped: bool,
    pub capacity_per_dimension: f64,
    pub off_basis_mean: f64,
    pub qber_bound: Option<f64>,
    pub verdict: Verdict,
}

pub fn build_report(m: &CrosstalkMatrix, d: u32) -> Result<SecurityReport> {
    build_report_with(m, d, MutualInfoVariant::FullD)
}

pub fn build_report_with(
    m: &CrosstalkMatrix,
    d: u32,
    variant: MutualInfoVariant,
) -> Result<SecurityReport> {
    m.validate()?;
    let f = fidelity_from_matrix(m).clamp(0.0, 1.0);
    report_from_fidelity(f, fidelity_std_error(m), m.off_basis_mean(), d, variant)
}

/// The metric chain for a given fidelity.
pub fn report_from_fidelity(
    f: f64,
    f_std_error: f64,
    off_basis_mean: f64,
    d: u32,
    variant: MutualInfoVariant,
) -> Result<SecurityReport> {
    let i_ab = mutual_info_ab_with(f, d, variant)?;
    let f_e = cloning_fidelity(f, d)?;
    let i_ae = mutual_info_ae(f, f_e, d)?;
    let r = secret_key_rate(i_ab, i_ae);
    let q = 1.0 - f;
    let bound = qber_bound(d);
    let secure = !r.clamped && r.value > 0.0 && bound.is_none_or(|b| q < b);
    Ok(SecurityReport {
        dimension: d,
        fidelity: f,
        fidelity_std_error: f_std_error,
        mutual_info_ab: i_ab,
        mutual_info_variant: variant,
        cloning_fidelity: f_e,
        mutual_info_ae: i_ae,
        qber: q,
        qber_std_error: f_std_error,
        key_rate: r.value,
        key_rate_clamped: r.clamped,
        capacity_per_dimension: r.value / d as f64,
        off_basis_mean,
        qber_bound: bound,
        verdict: if secure { Verdict::Secure } else { Verdict::Insecure },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent evaluation of the metric formulas using natural logs.
    fn oracle(f: f64, d: f64) -> (f64, f64, f64, f64) {
        let ln2 = std::f64::consts::LN_2;
        let i_ab = (d.ln() + f * f.ln() + (1.0 - f) * ((1.0 - f) / d).ln()) / ln2;
        let f_e = (f + (d - 1.0) * (1.0 - f) + 2.0 * ((d - 1.0) * f * (1.0 - f)).sqrt()) / d;
        let a = f + f_e - 1.0;
        let i_ae = (d.ln() + a * (a / f).ln() + (1.0 - f_e) * ((1.0 - f_e) / ((d - 1.0) * f)).ln()) / ln2;
        (i_ab, f_e, i_ae, i_ab - i_ae)
    }

    #[test]
    fn ideal_column_is_exact() {
        assert_eq!(mutual_info_ab(1.0, 4).unwrap(), 2.0);
        assert_eq!(cloning_fidelity(1.0, 4).unwrap(), 0.25);
        assert_eq!(mutual_info_ae(1.0, 0.25, 4).unwrap(), 0.0);
        let r = secret_key_rate(2.0, 0.0);
        assert_eq!(r, KeyRate { value: 2.0, clamped: false });
    }

    #[test]
    fn metric_chain_matches_oracle() {
        for f in [0.9, 0.93, 0.96, 0.97, 0.99] {
            let (i_ab, f_e, i_ae, r) = oracle(f, 4.0);
            assert!((mutual_info_ab(f, 4).unwrap() - i_ab).abs() < 1e-12);
            assert!((cloning_fidelity(f, 4).unwrap() - f_e).abs() < 1e-12);
            assert!((mutual_info_ae(f, f_e, 4).unwrap() - i_ae).abs() < 1e-12);
            let rep = report_from_fidelity(f, 0.0, 0.25, 4, MutualInfoVariant::FullD).unwrap();
            assert!((rep.key_rate - r).abs() < 1e-12);
        }
    }

    #[test]
    fn table_values_within_tolerance() {
        // (F, I_AB, F_E, I_AE, R) from the published summary table
        for (f, i_ab, f_e, i_ae, r) in [(0.96, 1.69, 0.44, 0.17, 1.52), (0.97, 1.76, 0.41, 0.13, 1.63)] {
            let rep = report_from_fidelity(f, 0.0, 0.25, 4, MutualInfoVariant::FullD).unwrap();
            assert!((rep.mutual_info_ab - i_ab).abs() <= 0.03, "{rep:?}");
            assert!((rep.cloning_fidelity - f_e).abs() <= 0.01, "{rep:?}");
            assert!((rep.mutual_info_ae - i_ae).abs() <= 0.02, "{rep:?}");
            assert!((rep.key_rate - r).abs() <= 0.03, "{rep:?}");
            let alt = report_from_fidelity(f, 0.0, 0.25, 4, MutualInfoVariant::DMinusOne).unwrap();
            assert!((alt.mutual_info_ab - i_ab).abs() <= 0.03, "{alt:?}");
        }
    }

    #[test]
    fn reference_values_to_three_places() {
        assert!((mutual_info_ab(0.97, 4).unwrap() - 1.746).abs() < 5e-4);
        assert!((cloning_fidelity(0.96, 4).unwrap() - 0.4397).abs() < 5e-5);
        assert!((cloning_fidelity(0.97, 4).unwrap() - 0.4127).abs() < 5e-5);
        assert!((mutual_info_ae(0.96, 0.44, 4).unwrap() - 0.172).abs() < 5e-4);
        // with the rounded F_E = 0.41 the value is 0.128; the unrounded chain gives 0.130
        assert!((mutual_info_ae(0.97, 0.41, 4).unwrap() - 0.13).abs() < 5e-3);
        let fe = cloning_fidelity(0.97, 4).unwrap();
        assert!((mutual_info_ae(0.97, fe, 4).unwrap() - 0.130).abs() < 1e-3);
    }

    #[test]
    fn uniform_fidelity_anomaly() {
        // log2 4 + 0.25 log2 0.25 + 0.75 log2(0.75/4)
        let expect = 2.0 - 0.5 + 0.75 * (0.1875f64).log2();
        assert!((mutual_info_ab(0.25, 4).unwrap() - expect).abs() < 1e-12);
        assert!(expect < 0.0);
        assert!(mutual_info_ab_with(0.25, 4, MutualInfoVariant::DMinusOne).unwrap().abs() < 1e-12);
    }

    #[test]
    fn domain_errors() {
        assert!(mutual_info_ab(1.1, 4).is_err());
        assert!(cloning_fidelity(-0.1, 4).is_err());
        assert!(mutual_info_ab(0.5, 1).is_err());
        let err = mutual_info_ae(0.01, 0.5, 4).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(mutual_info_ae(0.0, 0.75, 4).is_err());
    }

    #[test]
    fn key_rate_clamps() {
        assert_eq!(secret_key_rate(0.5, 1.0), KeyRate { value: 0.0, clamped: true });
    }

    #[test]
    fn edge_f_one_for_several_dimensions() {
        for d in 2..12 {
            let ld = (d as f64).log2();
            assert!((mutual_info_ab(1.0, d).unwrap() - ld).abs() < 1e-15);
            assert!((cloning_fidelity(1.0, d).unwrap() - 1.0 / d as f64).abs() < 1e-15);
            assert!(mutual_info_ae(1.0, 1.0 / d as f64, d).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn monotone_on_high_fidelity_grid() {
        let grid: Vec<f64> = (0..=40).map(|i| 0.8 + 0.005 * i as f64).collect();
        for w in grid.windows(2) {
            let (a, b) = (w[0], w[1].min(1.0));
            assert!(mutual_info_ab(b, 4).unwrap() > mutual_info_ab(a, 4).unwrap());
            assert!(cloning_fidelity(b, 4).unwrap() < cloning_fidelity(a, 4).unwrap());
            let r = |f: f64| {
                report_from_fidelity(f, 0.0, 0.25, 4, MutualInfoVariant::FullD).unwrap().key_rate
            };
            assert!(r(b) > r(a), "R not increasing at {a}");
        }
    }

    #[test]
    fn ideal_exact_matrix_equals_codebook_overlaps() {
        for l in [1, 10] {
            let born = exact_crosstalk(&ImperfectionModel::ideal(), l, 1, 0).unwrap();
            let oracle = codebook_overlap_matrix(l).unwrap();
            for r in 0..MODES {
                for c in 0..MODES {
                    assert!((born.entries[r][c] - oracle.entries[r][c]).abs() < 1e-12);
                }
            }
            let rep = build_report(&born, 4).unwrap();
            assert_eq!(rep.fidelity, 1.0);
            assert_eq!(rep.key_rate, 2.0);
            assert_eq!(rep.verdict, Verdict::Secure);
            assert!((rep.off_basis_mean - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_matrix_is_insecure() {
        let m = CrosstalkMatrix::exact(1, [[0.25; MODES]; MODES]).unwrap();
        assert_eq!(fidelity_from_matrix(&m), 0.25);
        let rep = build_report(&m, 4).unwrap();
        assert_eq!(rep.verdict, Verdict::Insecure);
        assert_eq!(rep.key_rate, 0.0);
        assert!(rep.key_rate_clamped);
        assert!((rep.qber - 0.75).abs() < 1e-15);
    }

    #[test]
    fn estimated_matrix_is_stochastic_per_quadrant() {
        let model = ImperfectionModel { depolarizing_p: 0.2, delta_phase_sigma: 0.1, ..Default::default() };
        let m = estimate_crosstalk(&model, 2, 3000, 17).unwrap();
        for r in 0..MODES {
            for b in Basis::BOTH {
                assert!((m.quadrant_row_sum(r, b) - 1.0).abs() < 1e-12);
            }
        }
        assert!(m.validate().is_ok());
        assert!(estimate_crosstalk(&model, 2, 0, 17).is_err());
    }

    #[test]
    fn csv_layout() {
        let m = codebook_overlap_matrix(1).unwrap();
        let csv = m.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[0], "prepared,V00,V01,V10,V11,S00,S01,S10,S11");
        assert!(lines[1].starts_with("V00,1.000000,0.000000"));
        assert!(lines[5].starts_with("S00,0.250000"));
    }

    #[test]
    fn report_identities() {
        let rep = report_from_fidelity(0.93, 0.0, 0.25, 4, MutualInfoVariant::FullD).unwrap();
        assert_eq!(rep.qber + rep.fidelity, 1.0);
        assert!(rep.key_rate <= rep.mutual_info_ab && rep.mutual_info_ab <= 2.0);
        assert_eq!(rep.capacity_per_dimension, rep.key_rate / 4.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn report_invariants(f in 0.5f64..=1.0) {
                let rep = report_from_fidelity(f, 0.0, 0.25, 4, MutualInfoVariant::FullD).unwrap();
                prop_assert_eq!(rep.qber, 1.0 - rep.fidelity);
                prop_assert!(rep.key_rate <= rep.mutual_info_ab + 1e-12);
                prop_assert!(rep.mutual_info_ab <= 2.0 + 1e-12);
                prop_assert!((0.0..=1.0).contains(&rep.cloning_fidelity));
            }

            #[test]
            fn cloning_fidelity_in_unit_interval(f in 0.0f64..=1.0, d in 2u32..20) {
                let fe = cloning_fidelity(f, d).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&fe));
            }
        }
    }
}
