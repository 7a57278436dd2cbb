//! Monte Carlo random labelling test.
//!
//! The data pattern's `K̂_f` is ranked among `K̂_f` of `s` patterns with permuted marks.
//! Under random labelling the expectation of `K̂_f` is `K̂` (`f ≡ 1`), because `ĉ_f` is
//! invariant under permutation; that is the analytic `T₀`.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::deviation::{measure_slice, DeviationKind};
use crate::error::{Error, Result};
use crate::estimators::{
    estimate_chat_f, estimate_kf, transform_values, EdgeCorrection, MarkTestFunction,
    PairGeometry, Transformation,
};
use crate::pattern::{FunctionEstimate, MarkedPattern, RGrid};
use crate::residuals::{null_from_rows, NullDistribution, NullSource, ScalingKind, ScalingWeights};
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum T0Mode {
    /// `T₀ = K̂` with the same edge correction.
    Analytic,
    /// Each function is compared with the mean of the other `s`.
    DiggleLeaveOneOut,
}

/// Everything that defines one random labelling test.
#[derive(Debug, Clone, PartialEq)]
pub struct TestConfig {
    pub f: MarkTestFunction,
    pub edge: EdgeCorrection,
    pub transformation: Transformation,
    pub scaling: ScalingKind,
    pub deviation: DeviationKind,
    /// Estimation grid; `interval` must be a sub-grid of it.
    pub grid: RGrid,
    pub interval: RGrid,
    /// Number of permutations.
    pub s: usize,
    pub seed: u64,
    pub t0_mode: T0Mode,
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s < 1 {
            return Err(Error::InvalidConfig("s must be at least 1".into()));
        }
        self.grid.index_range(&self.interval)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    /// Deviations; `u[0]` belongs to the data.
    pub u: Vec<f64>,
    /// Number of simulated deviations at least as large as the data's.
    pub rank: usize,
    pub p_value: f64,
    /// Transformed data function.
    pub t_data: FunctionEstimate,
    /// Transformed null expectation the data was compared with.
    pub t0: FunctionEstimate,
    pub null: NullDistribution,
    /// Scaled residual of the data.
    pub residual: FunctionEstimate,
    pub masked_points: Vec<usize>,
}

/// Same locations, marks in uniformly random order.
pub fn permute_marks(pattern: &MarkedPattern, rng: &mut StreamRng) -> Result<MarkedPattern> {
    if pattern.len() < 2 {
        return Err(Error::PatternTooSmall(pattern.len()));
    }
    let mut marks = pattern.marks().to_vec();
    marks.shuffle(rng);
    pattern.with_marks(marks)
}

/// The null expectation `T₀`.
#[derive(Debug, Clone, PartialEq)]
pub enum T0 {
    Analytic(FunctionEstimate),
    /// `T̄_i = Σ_{j≠i} T_j / s`, one per supplied function.
    LeaveOneOut(Vec<FunctionEstimate>),
}

pub fn compute_t0(
    pattern: &MarkedPattern,
    config: &TestConfig,
    permuted_estimates: Option<&[FunctionEstimate]>,
) -> Result<T0> {
    match config.t0_mode {
        T0Mode::Analytic => Ok(T0::Analytic(estimate_kf(
            pattern,
            MarkTestFunction::One,
            config.edge,
            &config.grid,
        )?)),
        T0Mode::DiggleLeaveOneOut => {
            let estimates = permuted_estimates.ok_or(Error::MissingEstimates)?;
            if estimates.len() < 2 {
                return Err(Error::MissingEstimates);
            }
            let grid = *estimates[0].grid();
            let rows: Vec<&[f64]> = estimates.iter().map(|e| e.values()).collect();
            leave_one_out_means(&rows)
                .into_iter()
                .map(|v| FunctionEstimate::new(grid, v))
                .collect::<Result<Vec<_>>>()
                .map(T0::LeaveOneOut)
        }
    }
}

fn leave_one_out_means(rows: &[&[f64]]) -> Vec<Vec<f64>> {
    let len = rows[0].len();
    let s = (rows.len() - 1) as f64;
    let mut total = vec![0.0; len];
    for row in rows {
        for (t, v) in total.iter_mut().zip(row.iter()) {
            *t += v;
        }
    }
    rows.iter()
        .map(|row| total.iter().zip(row.iter()).map(|(t, v)| (t - v) / s).collect())
        .collect()
}

/// Mark order for permutation `i` (`i = 0` is the data, left unpermuted).
pub fn permutation_indices(n: usize, seed: u64, i: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    if i > 0 {
        idx.shuffle(&mut rng::stream(seed, &[rng::domain::PERMUTATION, i as u64]));
    }
    idx
}

/// `K̂_f` of the data and of `s` mark permutations for several mark test functions,
/// sharing one pair geometry and one permutation set.
#[derive(Debug, Clone)]
pub struct PermutationEnsemble {
    grid: RGrid,
    fs: Vec<MarkTestFunction>,
    /// `functions[f][i]`: `K̂_f` on the grid for permutation `i` (0 = data).
    functions: Vec<Vec<Vec<f64>>>,
    /// `K̂` with the same edge correction.
    k_hat: Vec<f64>,
}

impl PermutationEnsemble {
    pub fn new(
        pattern: &MarkedPattern,
        fs: &[MarkTestFunction],
        edge: EdgeCorrection,
        grid: &RGrid,
        s: usize,
        seed: u64,
    ) -> Result<Self> {
        if s < 1 {
            return Err(Error::InvalidConfig("s must be at least 1".into()));
        }
        let geometry = PairGeometry::new(pattern, edge, grid)?;
        let chats = fs
            .iter()
            .map(|&f| {
                let c = estimate_chat_f(pattern, f)?;
                if c > 0.0 { Ok((f, c)) } else { Err(Error::DegenerateNormalizer) }
            })
            .collect::<Result<Vec<_>>>()?;
        let k_hat = geometry.kf_values(pattern.marks(), MarkTestFunction::One, 1.0)?;
        let marks = pattern.marks();
        let per_perm: Vec<Vec<Vec<f64>>> = (0..=s)
            .into_par_iter()
            .map(|i| {
                let order = permutation_indices(marks.len(), seed, i);
                let permuted: Vec<f64> = order.iter().map(|&k| marks[k]).collect();
                geometry.kf_values_many(&permuted, &chats)
            })
            .collect::<Result<_>>()?;
        let mut functions = vec![Vec::with_capacity(s + 1); fs.len()];
        for perm in per_perm {
            for (dst, v) in functions.iter_mut().zip(perm) {
                dst.push(v);
            }
        }
        Ok(PermutationEnsemble { grid: *grid, fs: fs.to_vec(), functions, k_hat })
    }

    pub fn grid(&self) -> &RGrid {
        &self.grid
    }

    pub fn s(&self) -> usize {
        self.functions.first().map_or(0, |f| f.len() - 1)
    }

    pub fn mark_functions(&self) -> &[MarkTestFunction] {
        &self.fs
    }

    pub fn k_hat(&self) -> &[f64] {
        &self.k_hat
    }

    /// Untransformed `K̂_f` for permutation `i`.
    pub fn function(&self, f: MarkTestFunction, i: usize) -> Option<&[f64]> {
        let k = self.fs.iter().position(|g| *g == f)?;
        self.functions[k].get(i).map(|v| v.as_slice())
    }

    /// Apply `h` and form `T₀` and the null distribution for one mark test function.
    pub fn prepare(
        &self,
        f: MarkTestFunction,
        h: Transformation,
        t0_mode: T0Mode,
    ) -> Result<PreparedFamily> {
        let k = self
            .fs
            .iter()
            .position(|g| *g == f)
            .ok_or_else(|| Error::InvalidConfig(format!("mark function {f} not in ensemble")))?;
        let functions = self.functions[k]
            .iter()
            .map(|v| transform_values(v, h, &self.grid))
            .collect::<Result<Vec<_>>>()?;
        let rows: Vec<&[f64]> = functions.iter().map(|v| v.as_slice()).collect();
        let (t0, null) = match t0_mode {
            T0Mode::Analytic => {
                let t0 = transform_values(&self.k_hat, h, &self.grid)?;
                let null = null_from_rows(&rows, &t0, self.grid, NullSource::AnalyticT0)?;
                (T0Rows::Shared(t0), null)
            }
            T0Mode::DiggleLeaveOneOut => {
                let own = leave_one_out_means(&rows);
                let n = rows.len() as f64;
                let mut mean = vec![0.0; self.grid.len()];
                for row in &rows {
                    for (m, v) in mean.iter_mut().zip(row.iter()) {
                        *m += v / n;
                    }
                }
                let null = null_from_rows(&rows, &mean, self.grid, NullSource::Simulated)?;
                (T0Rows::PerFunction(own), null)
            }
        };
        Ok(PreparedFamily { grid: self.grid, functions, t0, null })
    }
}

#[derive(Debug, Clone)]
enum T0Rows {
    Shared(Vec<f64>),
    PerFunction(Vec<Vec<f64>>),
}

/// Transformed functions of one mark test function, with their `T₀` and null distribution.
#[derive(Debug, Clone)]
pub struct PreparedFamily {
    grid: RGrid,
    functions: Vec<Vec<f64>>,
    t0: T0Rows,
    null: NullDistribution,
}

impl PreparedFamily {
    pub fn null(&self) -> &NullDistribution {
        &self.null
    }

    pub fn t0_for(&self, i: usize) -> &[f64] {
        match &self.t0 {
            T0Rows::Shared(v) => v,
            T0Rows::PerFunction(v) => &v[i],
        }
    }

    pub fn function(&self, i: usize) -> &[f64] {
        &self.functions[i]
    }

    /// Scaled residuals of every function.
    pub fn residuals(&self, scaling: ScalingKind) -> ScaledResiduals {
        let weights = ScalingWeights::new(&self.null, scaling);
        let rows = self
            .functions
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut d: Vec<f64> = t.iter().zip(self.t0_for(i)).map(|(a, b)| a - b).collect();
                weights.apply(&mut d);
                d
            })
            .collect();
        ScaledResiduals { grid: self.grid, rows, weights }
    }
}

/// Residual functions of the data (row 0) and the permutations under one scaling.
#[derive(Debug, Clone)]
pub struct ScaledResiduals {
    grid: RGrid,
    rows: Vec<Vec<f64>>,
    weights: ScalingWeights,
}

impl ScaledResiduals {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn mask(&self) -> &[bool] {
        self.weights.mask()
    }

    /// Deviations `u_1..u_{s+1}` on `interval`.
    pub fn deviations(&self, interval: &RGrid, kind: DeviationKind) -> Result<Vec<f64>> {
        let range = self.grid.index_range(interval)?;
        let mask = self.weights.mask();
        if mask[range.clone()].iter().all(|m| *m) {
            return Err(Error::DegenerateScaling);
        }
        Ok(self
            .rows
            .iter()
            .map(|d| {
                measure_slice(d, mask, range.clone(), self.grid.step(), kind)
                    .expect("interval has unmasked points")
            })
            .collect())
    }
}

/// Number of simulated deviations `u[1..]` with `u_i ≥ u[0]`, and the p-value
/// `(1 + rank) / (s + 1)`.
pub fn rank_and_p_value(u: &[f64]) -> (usize, f64) {
    let rank = u[1..].iter().filter(|&&v| v >= u[0]).count();
    (rank, (1 + rank) as f64 / u.len() as f64)
}

pub fn run_test(pattern: &MarkedPattern, config: &TestConfig) -> Result<TestResult> {
    config.validate()?;
    let ensemble =
        PermutationEnsemble::new(pattern, &[config.f], config.edge, &config.grid, config.s, config.seed)?;
    let family = ensemble.prepare(config.f, config.transformation, config.t0_mode)?;
    let residuals = family.residuals(config.scaling);
    let u = residuals.deviations(&config.interval, config.deviation)?;
    let (rank, p_value) = rank_and_p_value(&u);
    let grid = config.grid;
    Ok(TestResult {
        u,
        rank,
        p_value,
        t_data: FunctionEstimate::new(grid, family.function(0).to_vec())?,
        t0: FunctionEstimate::new(grid, family.t0_for(0).to_vec())?,
        residual: FunctionEstimate::new(grid, residuals.row(0).to_vec())?,
        masked_points: residuals.weights.masked_indices(),
        null: family.null,
    })
}
