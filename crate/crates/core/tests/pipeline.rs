//! End-to-end checks across generation, channel, detection and estimation.

use hdqkd::channel::{prepare, ImperfectionModel, Preset};
use hdqkd::codebook::{Basis, CodebookLabel};
use hdqkd::detection::Analyser;
use hdqkd::rng::stream;
use hdqkd::security::{
    codebook_overlap_matrix, estimate_crosstalk, exact_crosstalk, fidelity_from_matrix,
    fidelity_std_error, MODES,
};

#[test]
fn zero_model_pipeline_gives_permutation_blocks() {
    for l in [1, 10] {
        let model = ImperfectionModel::ideal();
        for basis in Basis::BOTH {
            let a = Analyser::for_basis(basis, l).unwrap();
            let mut rows = Vec::new();
            for label in CodebookLabel::ALL.iter().filter(|x| x.basis == basis) {
                let s = prepare(*label, l, &model, &mut stream(0, 0, 0)).unwrap();
                rows.push(a.symbol_probabilities(&s).unwrap());
            }
            for (i, row) in rows.iter().enumerate() {
                for (j, p) in row.iter().enumerate() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((p - expect).abs() < 1e-9, "l={l} {basis} [{i}][{j}] = {p}");
                }
            }
        }
    }
}

#[test]
fn generation_recipes_feed_analysers_exactly() {
    // the recipe path with vanishing angle errors reproduces the ideal blocks
    let model = ImperfectionModel { waveplate_angle_sigma: 1e-12, ..Default::default() };
    let a = [Analyser::for_basis(Basis::Vector, 3).unwrap(), Analyser::for_basis(Basis::Scalar, 3).unwrap()];
    for label in CodebookLabel::ALL {
        let s = prepare(label, 3, &model, &mut stream(1, 0, 0)).unwrap();
        let own = &a[(label.basis == Basis::Scalar) as usize];
        let other = &a[(label.basis == Basis::Vector) as usize];
        assert!((own.symbol_probabilities(&s).unwrap()[label.symbol.value() as usize] - 1.0).abs() < 1e-9);
        for p in other.symbol_probabilities(&s).unwrap() {
            assert!((p - 0.25).abs() < 1e-9);
        }
    }
}

#[test]
fn monte_carlo_matches_born_for_ideal_channel() {
    let trials = 20_000;
    let m = estimate_crosstalk(&ImperfectionModel::ideal(), 1, trials, 5).unwrap();
    let born = codebook_overlap_matrix(1).unwrap();
    for r in 0..MODES {
        for c in 0..MODES {
            let p = born.entries[r][c];
            let sigma = (p * (1.0 - p)).max(0.0).sqrt() / (trials as f64).sqrt();
            assert!((m.entries[r][c] - p).abs() <= 3.0 * sigma + 1e-15, "[{r}][{c}]");
        }
    }
}

#[test]
fn monte_carlo_matches_averaged_born_for_noisy_channel() {
    let p = Preset::builtin("paper_l1").unwrap();
    let trials = 20_000;
    let m = estimate_crosstalk(&p.imperfections, 1, trials, 6).unwrap();
    let e = exact_crosstalk(&p.imperfections, 1, 2000, 6).unwrap();
    for r in 0..MODES {
        for c in 0..MODES {
            let q = e.entries[r][c];
            let sigma = (q * (1.0 - q) / trials as f64).sqrt().max(1.0 / trials as f64);
            assert!((m.entries[r][c] - q).abs() <= 4.0 * sigma, "[{r}][{c}] {} vs {q}", m.entries[r][c]);
        }
    }
}

#[test]
fn crosstalk_is_independent_of_thread_count() {
    let model = Preset::builtin("paper_l10").unwrap().imperfections;
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = one.install(|| estimate_crosstalk(&model, 10, 9000, 8)).unwrap();
    let b = three.install(|| estimate_crosstalk(&model, 10, 9000, 8)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn fidelity_non_increasing_in_depolarisation() {
    // 1e5 trials per grid point
    let base = Preset::builtin("paper_l1").unwrap().imperfections;
    let mut prev: Option<(f64, f64)> = None;
    for p in [0.0, 0.05, 0.1, 0.2, 0.4, 0.8] {
        let model = ImperfectionModel { depolarizing_p: p, ..base };
        let m = estimate_crosstalk(&model, 1, 12_500, 9).unwrap();
        let (f, s) = (fidelity_from_matrix(&m), fidelity_std_error(&m));
        if let Some((f0, s0)) = prev {
            assert!(f <= f0 + 3.0 * (s * s + s0 * s0).sqrt(), "p={p}: {f} > {f0}");
        }
        prev = Some((f, s));
    }
}

#[test]
fn full_depolarisation_gives_uniform_matrix() {
    let model = ImperfectionModel { depolarizing_p: 1.0, ..Default::default() };
    let trials = 20_000;
    let m = estimate_crosstalk(&model, 1, trials, 10).unwrap();
    let sigma = (0.25 * 0.75 / trials as f64).sqrt();
    for row in m.entries {
        for p in row {
            assert!((p - 0.25).abs() < 4.0 * sigma, "{p}");
        }
    }
}
