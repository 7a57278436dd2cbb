//! Acceptance suite. Runs as a plain program so every criterion prints one PASS/FAIL line
//! under `cargo test`; exits non-zero if any criterion fails.

mod common;

use std::time::Instant;

use common::{
    chi_square_99, chi_square_uniform, naive_kf, null_pattern, permutations, random_pattern,
    toy_power_mc,
};
use marktest::deviation::DeviationKind;
use marktest::estimators::{estimate_kf, EdgeCorrection, MarkTestFunction, Transformation};
use marktest::harness::{
    estimate_power, evaluate_variants, replicate_pattern, replicate_seed, NamedInterval,
    ParameterSweep, StudyConfig, Variant,
};
use marktest::mctest::{run_test, T0Mode, TestConfig};
use marktest::models::{ModelFamily, Simulator};
use marktest::pattern::{RGrid, Window};
use marktest::residuals::ScalingKind;
use marktest::rng;
use marktest::toypower::{toy1_critical_value, toy2_critical_value, toy_power_curve, ToyCase, ToySpec1, ToySpec2};
use rayon::prelude::*;

const SEED: u64 = 20_261_019;
const ALPHA: f64 = 0.05;
/// 99% binomial band around 0.05 for 1000 tests.
const SIZE_BAND: (f64, f64) = (0.037, 0.064);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn study_grid() -> RGrid {
    RGrid::new(0.0, 25.0, 0.25).unwrap()
}

fn criterion_1() -> Outcome {
    let window = Window::square(100.0).unwrap();
    let grid = study_grid();
    let p_values: Vec<f64> = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let pattern = null_pattern(100, window, &mut rng::stream(SEED, &[rng::domain::ORACLE, 1, k]));
            let config = TestConfig {
                f: MarkTestFunction::M1,
                edge: EdgeCorrection::Translational,
                transformation: Transformation::SqrtOverPi,
                scaling: ScalingKind::Studentised,
                deviation: DeviationKind::Supremum,
                grid,
                interval: grid,
                s: 99,
                seed: rng::derive_seed(SEED, &[rng::domain::PERMUTATION, k]),
                t0_mode: T0Mode::Analytic,
            };
            run_test(&pattern, &config).unwrap().p_value
        })
        .collect();
    let rate = p_values.iter().filter(|&&p| p <= ALPHA).count() as f64 / 1000.0;
    let mut bins = [0usize; 10];
    for p in &p_values {
        // p takes values k/100; each bin holds ten of them
        bins[((p * 100.0).round() as usize - 1) / 10] += 1;
    }
    let chi = chi_square_uniform(&bins);
    let pass = rate >= SIZE_BAND.0 && rate <= SIZE_BAND.1 && chi < chi_square_99(9);
    outcome(pass, format!("rejection rate {rate:.3}, chi-square {chi:.2} (< {:.3})", chi_square_99(9)))
}

fn criterion_2() -> Outcome {
    let grid = RGrid::new(0.0, 3.0, 0.125).unwrap();
    let window = Window::square(5.0).unwrap();
    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let n = 4 + (k as usize % 3);
        let p = random_pattern(SEED + k, n, window);
        let base = estimate_kf(&p, MarkTestFunction::One, EdgeCorrection::Translational, &grid).unwrap();
        let perms = permutations(n);
        for f in [MarkTestFunction::M1, MarkTestFunction::M1M2, MarkTestFunction::Gamma] {
            let mut mean = vec![0.0; grid.len()];
            for perm in &perms {
                let q = p.with_marks(perm.iter().map(|&i| p.marks()[i]).collect()).unwrap();
                let kf = estimate_kf(&q, f, EdgeCorrection::Translational, &grid).unwrap();
                for (m, v) in mean.iter_mut().zip(kf.values()) {
                    *m += v;
                }
            }
            for (m, b) in mean.iter().zip(base.values()) {
                worst = worst.max((m / perms.len() as f64 - b).abs());
            }
        }
    }
    outcome(worst <= 1e-10, format!("max |mean over n! permutations − K̂| = {worst:.2e}"))
}

fn criterion_3() -> Outcome {
    let window = Window::new(0.0, 20.0, 0.0, 15.0).unwrap();
    let grid = RGrid::new(0.0, 6.0, 0.25).unwrap();
    let mut worst = 0.0f64;
    for k in 0..100u64 {
        let n = 2 + (k as usize % 29);
        let p = random_pattern(SEED ^ k, n, window);
        for f in [MarkTestFunction::One, MarkTestFunction::M1, MarkTestFunction::M1M2, MarkTestFunction::Gamma] {
            for edge in [EdgeCorrection::Translational, EdgeCorrection::None] {
                let fast = estimate_kf(&p, f, edge, &grid).unwrap();
                for (a, b) in fast.values().iter().zip(naive_kf(&p, f, edge, &grid)) {
                    worst = worst.max((a - b).abs() / b.abs().max(1.0));
                }
            }
        }
    }
    outcome(worst <= 1e-12, format!("max relative discrepancy {worst:.2e}"))
}

fn critical(case: ToyCase, scaled: bool) -> f64 {
    let zero = vec![0.0; 3];
    match case {
        ToyCase::Normal1a => toy1_critical_value(&ToySpec1::new(zero, vec![1.0, 1.0, 0.1], ALPHA).unwrap(), scaled),
        ToyCase::Normal1b => toy1_critical_value(&ToySpec1::new(zero, vec![0.1, 0.1, 1.0], ALPHA).unwrap(), scaled),
        ToyCase::Asymmetric2a => toy2_critical_value(&ToySpec2::new(zero, vec![0.1; 3], vec![0.13; 3], ALPHA).unwrap(), scaled),
        ToyCase::Asymmetric2b => toy2_critical_value(&ToySpec2::new(zero, vec![0.1; 3], vec![0.07; 3], ALPHA).unwrap(), scaled),
    }
    .unwrap()
}

/// Analytic power against a 10⁵-draw simulation, plus the ordering of the two tests:
/// `scaled_better` for case (a), reversed for case (b).
fn toy_criterion(cases: [ToyCase; 2], mu3: &[f64]) -> Outcome {
    let mut worst = 0.0f64;
    let mut ordering_ok = true;
    let mut compared = 0;
    for (ci, case) in cases.into_iter().enumerate() {
        let curve = toy_power_curve(case, mu3, ALPHA).unwrap();
        let c = [critical(case, false), critical(case, true)];
        let diffs: Vec<f64> = curve
            .par_iter()
            .enumerate()
            .flat_map_iter(|(k, pt)| {
                [(false, pt.power_unscaled), (true, pt.power_scaled)].map(|(scaled, exact)| {
                    let seed = rng::derive_seed(SEED, &[ci as u64, k as u64, scaled as u64]);
                    (exact - toy_power_mc(case, pt.mu3, scaled, c[scaled as usize], 100_000, seed)).abs()
                })
            })
            .collect();
        worst = diffs.iter().fold(worst, |a, &d| a.max(d));
        for pt in &curve {
            let gap = pt.power_scaled - pt.power_unscaled;
            if gap.abs() > 0.02 {
                compared += 1;
                let expected_scaled_better = ci == 0;
                ordering_ok &= (gap > 0.0) == expected_scaled_better;
            }
        }
    }
    outcome(
        worst <= 0.005 && ordering_ok && compared > 0,
        format!("max |analytic − simulated| = {worst:.4}; ordering holds at all {compared} separated points: {ordering_ok}"),
    )
}

fn criterion_4() -> Outcome {
    let mu3: Vec<f64> = (0..=12).map(|k| k as f64 * 0.25).collect();
    toy_criterion([ToyCase::Normal1a, ToyCase::Normal1b], &mu3)
}

fn criterion_5() -> Outcome {
    // the example's scale is σ ≈ 0.1, so add a fine grid near zero to the coarse one
    let mut mu3: Vec<f64> = (0..=12).map(|k| k as f64 * 0.25).collect();
    mu3.extend((1..=12).map(|k| k as f64 * 0.025));
    mu3.sort_by(f64::total_cmp);
    mu3.dedup();
    toy_criterion([ToyCase::Asymmetric2a, ToyCase::Asymmetric2b], &mu3)
}

/// Per-replicate decisions of every variant of a study at one parameter value.
struct PairedRuns {
    config: StudyConfig,
    variants: Vec<Variant>,
    decisions: Vec<Vec<Option<bool>>>,
}

impl PairedRuns {
    fn run(family: ModelFamily, parameter: &str, value: f64) -> PairedRuns {
        let mut config = StudyConfig::desk(family);
        config.sweep = ParameterSweep { parameter: parameter.into(), values: vec![value] };
        config.replicates = 1000;
        config.permutations = 199;
        config.mark_functions = vec![MarkTestFunction::M1];
        config.transformations = vec![Transformation::Identity, Transformation::SqrtOverPi];
        config.scalings = ScalingKind::ALL.to_vec();
        config.deviations = vec![DeviationKind::Supremum];
        config.intervals = vec![NamedInterval::new("I1", 4.0, 8.0), NamedInterval::new("I3", 0.0, 25.0)];
        config.seed = SEED;
        config.validate().unwrap();
        let variants = config.variants();
        let spec = config.model.with_parameter(parameter, value).unwrap();
        let sim = Simulator::new(spec).unwrap();
        let decisions = (0..config.replicates)
            .into_par_iter()
            .filter_map(|rep| {
                let seed = replicate_seed(SEED, 0, rep);
                let pattern = replicate_pattern(&sim, seed).ok()?;
                evaluate_variants(&pattern, &config, &variants, seed).ok()
            })
            .collect();
        PairedRuns { config, variants, decisions }
    }

    fn column(&self, h: Transformation, scaling: ScalingKind, interval: &str) -> Vec<Option<bool>> {
        let iv = self.config.intervals.iter().position(|i| i.name == interval).unwrap();
        let k = self
            .variants
            .iter()
            .position(|v| v.transformation == h && v.scaling == scaling && v.interval == iv)
            .unwrap();
        self.decisions.iter().map(|d| d[k]).collect()
    }

    fn power(&self, h: Transformation, scaling: ScalingKind, interval: &str) -> (f64, f64) {
        let col: Vec<bool> = self.column(h, scaling, interval).into_iter().flatten().collect();
        estimate_power(col.iter().filter(|&&r| r).count(), col.len()).unwrap()
    }
}

/// One-sided exact binomial (sign) test on discordant replicates: `P(X ≥ b)` with
/// `X ~ Bin(b + c, 1/2)`, where `b` counts replicates rejected only by the first variant.
fn paired_p_value(first: &[Option<bool>], second: &[Option<bool>]) -> (usize, usize, f64) {
    let (mut b, mut c) = (0usize, 0usize);
    for (x, y) in first.iter().zip(second) {
        match (x, y) {
            (Some(true), Some(false)) => b += 1,
            (Some(false), Some(true)) => c += 1,
            _ => {}
        }
    }
    let n = b + c;
    let mut tail = 0.0;
    for k in b..=n {
        let ln_choose = (1..=n).map(|v| (v as f64).ln()).sum::<f64>()
            - (1..=k).map(|v| (v as f64).ln()).sum::<f64>()
            - (1..=n - k).map(|v| (v as f64).ln()).sum::<f64>();
        tail += (ln_choose - n as f64 * std::f64::consts::LN_2).exp();
    }
    (b, c, tail.min(1.0))
}

fn criterion_6(runs: &[(&str, &PairedRuns)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in runs {
        let l = r.column(Transformation::SqrtOverPi, ScalingKind::Raw, "I3");
        let k = r.column(Transformation::Identity, ScalingKind::Raw, "I3");
        let (b, c, p) = paired_p_value(&l, &k);
        let (pl, _) = r.power(Transformation::SqrtOverPi, ScalingKind::Raw, "I3");
        let (pk, _) = r.power(Transformation::Identity, ScalingKind::Raw, "I3");
        pass &= pl > pk && p < 0.01;
        parts.push(format!("{name}: L {pl:.3} vs K {pk:.3}, discordant {b}/{c}, p = {p:.2e}"));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_7(runs: &[(&str, &PairedRuns)]) -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, r) in runs {
        let (raw, se_raw) = r.power(Transformation::Identity, ScalingKind::Raw, "I3");
        for scaling in [ScalingKind::Studentised, ScalingKind::Quantile] {
            let (p, se) = r.power(Transformation::Identity, scaling, "I3");
            let allowed = 2.0 * (se * se + se_raw * se_raw).sqrt();
            pass &= raw - p <= allowed;
            parts.push(format!("{name} {scaling} {p:.3} vs raw {raw:.3}"));
        }
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8(seq: &PairedRuns) -> Outcome {
    let (q1, _) = seq.power(Transformation::SqrtOverPi, ScalingKind::DirectionalQuantile, "I1");
    let (q3, _) = seq.power(Transformation::SqrtOverPi, ScalingKind::DirectionalQuantile, "I3");
    let (r1, _) = seq.power(Transformation::Identity, ScalingKind::Raw, "I1");
    let (r3, _) = seq.power(Transformation::Identity, ScalingKind::Raw, "I3");
    let pass = (q1 - q3).abs() <= 0.10 && r1 - r3 >= 0.10;
    outcome(pass, format!("qdir L̂: I1 {q1:.3}, I3 {q3:.3}; raw K̂: I1 {r1:.3}, I3 {r3:.3}"))
}

fn criterion_9() -> Outcome {
    // families whose null keeps non-constant marks; b = 0 makes the Gaussian-noise marks constant
    let nulls = [
        (ModelFamily::SeqNimpp, "theta", 0.0, None),
        (ModelFamily::ExpNimcp, "b", 0.0, Some(("a", 20.0))),
        (ModelFamily::ExpPimcp, "b", 0.0, Some(("a", 250.0))),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (family, parameter, value, extra) in nulls {
        let mut config = StudyConfig::desk(family);
        if let Some((name, v)) = extra {
            config.model = config.model.with_parameter(name, v).unwrap();
        }
        config.sweep = ParameterSweep { parameter: parameter.into(), values: vec![value] };
        config.replicates = 1000;
        config.permutations = 99;
        config.mark_functions = vec![MarkTestFunction::M1];
        config.transformations = vec![Transformation::SqrtOverPi];
        config.scalings = vec![ScalingKind::Studentised];
        config.deviations = vec![DeviationKind::Supremum];
        config.intervals = vec![NamedInterval::new("I3", 0.0, 25.0)];
        config.seed = SEED;
        let table = marktest::run_power_study(&config).unwrap();
        let row = &table.rows[0];
        let ok = row.n == 1000 && row.power >= SIZE_BAND.0 && row.power <= SIZE_BAND.1;
        pass &= ok;
        parts.push(format!("{family} {parameter}={value}: {:.3} (N={})", row.power, row.n));
    }
    outcome(pass, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for family in ModelFamily::ALL {
        let full = StudyConfig::desk(family).into_full();
        pass &= full.validate().is_ok() && full.replicates == 1000 && full.permutations == 999;
        parts.push(format!("{family} {} values", full.sweep.values.len()));
    }
    outcome(pass, format!("full-scale configs validate (not run at desk scale): {}", parts.join(", ")))
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut record = |id: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let o = f();
        println!(
            "criterion {id:>2} {} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        results.push((id, name, o));
    };
    record(1, "exact test size", &criterion_1);
    record(2, "permutation-mean identity", &criterion_2);
    record(3, "estimator oracle", &criterion_3);
    record(4, "toy example 1", &criterion_4);
    record(5, "toy example 2", &criterion_5);
    let seq = PairedRuns::run(ModelFamily::SeqNimpp, "theta", 0.16);
    let exp = PairedRuns::run(ModelFamily::ExpNimcp, "a", 200.0);
    let runs = [("SeqNIMPP θ=0.16", &seq), ("ExpNIMCP a=200", &exp)];
    record(6, "transformation gain", &|| criterion_6(&runs));
    record(7, "scaling gain", &|| criterion_7(&runs));
    record(8, "interval robustness", &|| criterion_8(&seq));
    record(9, "null power anchor", &criterion_9);
    record(10, "full-scale configuration", &criterion_10);
    let failed: Vec<usize> = results.iter().filter(|(_, _, o)| !o.pass).map(|(id, _, _)| *id).collect();
    println!(
        "acceptance: {}/{} criteria passed in {:.1}s",
        results.len() - failed.len(),
        results.len(),
        started.elapsed().as_secs_f64()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
