//! Helpers shared by integration test targets.
#![allow(dead_code)]

use marktest::estimators::{EdgeCorrection, MarkTestFunction};
use marktest::pattern::{MarkedPattern, RGrid, Window};
use marktest::rng::{self, StreamRng};
use marktest::toypower::ToyCase;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

/// CSR locations with i.i.d. unit-mean exponential marks.
pub fn null_pattern(n: usize, window: Window, rng: &mut StreamRng) -> MarkedPattern {
    let pts = (0..n)
        .map(|_| {
            [
                window.x_min + rng.random::<f64>() * window.width(),
                window.y_min + rng.random::<f64>() * window.height(),
            ]
        })
        .collect();
    let marks = (0..n).map(|_| Exp1.sample(rng)).collect();
    MarkedPattern::new(pts, marks, window).unwrap()
}

/// Pearson statistic of counts against equal expected frequencies.
pub fn chi_square_uniform(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum()
}

/// Upper 1% points of the chi-square distribution, indexed by degrees of freedom.
pub fn chi_square_99(df: usize) -> f64 {
    match df {
        9 => 21.665994333461924,
        24 => 42.97982013935165,
        99 => 134.64161685578915,
        _ => panic!("no tabulated quantile for df={df}"),
    }
}

/// Counts of points in a `k × k` quadrat grid.
pub fn quadrat_counts(points: &[[f64; 2]], window: &Window, k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k * k];
    for p in points {
        let ix = (((p[0] - window.x_min) / window.width()) * k as f64).floor().min(k as f64 - 1.0) as usize;
        let iy = (((p[1] - window.y_min) / window.height()) * k as f64).floor().min(k as f64 - 1.0) as usize;
        counts[iy * k + ix] += 1;
    }
    counts
}

fn toy_draw(case: ToyCase, mu3: f64, rng: &mut StreamRng) -> [f64; 3] {
    let mut x = [0.0; 3];
    let means = [0.0, 0.0, mu3];
    for i in 0..3 {
        let z: f64 = StandardNormal.sample(rng);
        x[i] = match case {
            ToyCase::Normal1a => means[i] + [1.0, 1.0, 0.1][i] * z,
            ToyCase::Normal1b => means[i] + [0.1, 0.1, 1.0][i] * z,
            ToyCase::Asymmetric2a | ToyCase::Asymmetric2b => {
                let lower = if case == ToyCase::Asymmetric2a { 0.13 } else { 0.07 };
                if rng.random::<bool>() {
                    means[i] + 0.1 * z.abs()
                } else {
                    means[i] - lower * z.abs()
                }
            }
        };
    }
    x
}

/// Statistic of the toy test: `max_i w_i |X_i|`, with direction-dependent weights in
/// example 2.
fn toy_statistic(case: ToyCase, x: &[f64; 3], scaled: bool) -> f64 {
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            if !scaled {
                return v.abs();
            }
            match case {
                ToyCase::Normal1a => v.abs() / [1.0, 1.0, 0.1][i],
                ToyCase::Normal1b => v.abs() / [0.1, 0.1, 1.0][i],
                ToyCase::Asymmetric2a | ToyCase::Asymmetric2b => {
                    let lower = if case == ToyCase::Asymmetric2a { 0.13 } else { 0.07 };
                    if v >= 0.0 { v / 0.1 } else { -v / lower }
                }
            }
        })
        .fold(0.0, f64::max)
}

/// Monte Carlo rejection rate of the toy test with critical value `c`.
pub fn toy_power_mc(case: ToyCase, mu3: f64, scaled: bool, c: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = rng::stream(seed, &[rng::domain::ORACLE]);
    let mut hits = 0usize;
    for _ in 0..draws {
        let x = toy_draw(case, mu3, &mut rng);
        if toy_statistic(case, &x, scaled) > c {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}

/// Empirical `1 − α` quantile of the null statistic.
pub fn toy_critical_value_mc(case: ToyCase, scaled: bool, alpha: f64, draws: usize, seed: u64) -> f64 {
    let mut rng = rng::stream(seed, &[rng::domain::ORACLE, 1]);
    let mut t: Vec<f64> = (0..draws).map(|_| toy_statistic(case, &toy_draw(case, 0.0, &mut rng), scaled)).collect();
    t.sort_by(f64::total_cmp);
    t[((1.0 - alpha) * draws as f64).ceil() as usize - 1]
}

pub fn random_pattern(seed: u64, n: usize, window: Window) -> MarkedPattern {
    let mut r = rng::stream(seed, &[rng::domain::ORACLE]);
    let pts = (0..n)
        .map(|_| {
            [
                window.x_min + r.random::<f64>() * window.width(),
                window.y_min + r.random::<f64>() * window.height(),
            ]
        })
        .collect();
    let marks = (0..n).map(|_| r.random_range(0.1..10.0)).collect();
    MarkedPattern::new(pts, marks, window).unwrap()
}

/// Double loop over ordered pairs, evaluated independently at each r.
pub fn naive_kf(p: &MarkedPattern, f: MarkTestFunction, edge: EdgeCorrection, grid: &RGrid) -> Vec<f64> {
    let n = p.len();
    let w = p.window();
    let area = w.area();
    let mut c = 0.0;
    for k in 0..n {
        for l in 0..n {
            if k != l {
                c += f.eval(p.marks()[k], p.marks()[l]);
            }
        }
    }
    c /= (n * (n - 1)) as f64;
    let lambda2 = (n * (n - 1)) as f64 / (area * area);
    grid.values()
        .iter()
        .map(|&r| {
            let mut s = 0.0;
            for k in 0..n {
                for l in 0..n {
                    if k == l {
                        continue;
                    }
                    let dx = p.points()[k][0] - p.points()[l][0];
                    let dy = p.points()[k][1] - p.points()[l][1];
                    if (dx * dx + dy * dy).sqrt() <= r {
                        let e = match edge {
                            EdgeCorrection::Translational => {
                                area / ((w.width() - dx.abs()) * (w.height() - dy.abs()))
                            }
                            EdgeCorrection::None => 1.0,
                        };
                        s += f.eval(p.marks()[k], p.marks()[l]) * e;
                    }
                }
            }
            s / (area * lambda2 * c)
        })
        .collect()
}

/// All orderings of `0..n`.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}
