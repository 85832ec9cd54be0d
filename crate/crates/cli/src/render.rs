//! Plain-text renderings of matrices and reports.

use std::fmt::Write as _;

use hdqkd::codebook::CodebookLabel;
use hdqkd::security::{CrosstalkMatrix, SecurityReport, Verdict};

const SHADES: [char; 5] = [' ', '░', '▒', '▓', '█'];

fn shade(p: f64) -> char {
    let i = (p.clamp(0.0, 1.0) * (SHADES.len() - 1) as f64).round() as usize;
    SHADES[i]
}

/// One row per prepared mode; each cell is a shade glyph followed by the value.
pub fn heatmap(m: &CrosstalkMatrix) -> String {
    let names: Vec<String> = CodebookLabel::ALL.iter().map(|l| l.name()).collect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        "crosstalk |l| = {}, {} trials per mode (rows: prepared, columns: measured)",
        m.subspace_l, m.trials_per_row
    );
    out.push_str("     ");
    for (i, n) in names.iter().enumerate() {
        if i == 4 {
            out.push_str(" |");
        }
        let _ = write!(out, " {n:>7}");
    }
    out.push('\n');
    for (r, row) in m.entries.iter().enumerate() {
        if r == 4 {
            let _ = writeln!(out, "     {}", "-".repeat(66));
        }
        let _ = write!(out, "{:<5}", names[r]);
        for (c, p) in row.iter().enumerate() {
            if c == 4 {
                out.push_str(" |");
            }
            let _ = write!(out, " {}{:>6.3}", shade(*p), p);
        }
        out.push('\n');
    }
    out
}

/// Side-by-side table of an experiment report and the ideal report.
pub fn security_table(exp: &SecurityReport, ideal: &SecurityReport) -> String {
    let rows: [(&str, f64, f64); 8] = [
        ("F", exp.fidelity, ideal.fidelity),
        ("I_AB", exp.mutual_info_ab, ideal.mutual_info_ab),
        ("F_E", exp.cloning_fidelity, ideal.cloning_fidelity),
        ("I_AE", exp.mutual_info_ae, ideal.mutual_info_ae),
        ("Q", exp.qber, ideal.qber),
        ("R", exp.key_rate, ideal.key_rate),
        ("R/d", exp.capacity_per_dimension, ideal.capacity_per_dimension),
        ("off-basis", exp.off_basis_mean, ideal.off_basis_mean),
    ];
    let mut out = format!("{:<10} {:>12} {:>8}\n", "measure", "experiment", "ideal");
    for (name, e, i) in rows {
        let _ = writeln!(out, "{name:<10} {e:>12.4} {i:>8.4}");
    }
    let verdict = |v: Verdict| match v {
        Verdict::Secure => "secure",
        Verdict::Insecure => "insecure",
    };
    let bound = exp
        .qber_bound
        .map_or_else(|| "none".to_string(), |b| format!("{b:.2}"));
    let _ = writeln!(
        out,
        "{:<10} {:>12} {:>8}   (d = {}, Q bound {bound})",
        "verdict",
        verdict(exp.verdict),
        verdict(ideal.verdict),
        exp.dimension
    );
    if exp.key_rate_clamped {
        out.push_str("note: I_AB − I_AE was negative; R clamped to 0\n");
    }
    out
}
