//! Mark-weighted K-function estimation with translational or no edge correction.
//!
//! `K̂_f(r) = Σ_{k≠l} f(m_k, m_l) 1(‖x_k − x_l‖ ≤ r) e(x_k, x_l) / (|W| λ̂² ĉ_f)` with
//! `λ̂² = n(n−1)/|W|²` and `ĉ_f = Σ_{i≠j} f(m_i, m_j) / (n(n−1))`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pattern::{FunctionEstimate, MarkedPattern, RGrid, Window};

/// Mark test function `f(m₁, m₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum MarkTestFunction {
    /// `f ≡ 1`, giving the plain K-function.
    One,
    /// `f = m₁` (`K_m.`).
    M1,
    /// `f = m₁ m₂` (`K_mm`).
    M1M2,
    /// `f = ½(m₁ − m₂)²` (`K_γ`).
    Gamma,
}

impl MarkTestFunction {
    pub const TABLE: [MarkTestFunction; 3] =
        [MarkTestFunction::M1, MarkTestFunction::M1M2, MarkTestFunction::Gamma];

    #[inline]
    pub fn eval(self, m1: f64, m2: f64) -> f64 {
        match self {
            MarkTestFunction::One => 1.0,
            MarkTestFunction::M1 => m1,
            MarkTestFunction::M1M2 => m1 * m2,
            MarkTestFunction::Gamma => 0.5 * (m1 - m2) * (m1 - m2),
        }
    }

    /// `f(m₁, m₂) + f(m₂, m₁)`: the contribution of one unordered pair.
    #[inline]
    fn eval_both_orders(self, m1: f64, m2: f64) -> f64 {
        match self {
            MarkTestFunction::One => 2.0,
            MarkTestFunction::M1 => m1 + m2,
            MarkTestFunction::M1M2 => 2.0 * m1 * m2,
            MarkTestFunction::Gamma => (m1 - m2) * (m1 - m2),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MarkTestFunction::One => "one",
            MarkTestFunction::M1 => "m.",
            MarkTestFunction::M1M2 => "mm",
            MarkTestFunction::Gamma => "gamma",
        }
    }
}

impl fmt::Display for MarkTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MarkTestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "one" | "1" => Ok(MarkTestFunction::One),
            "m." | "m" | "m1" => Ok(MarkTestFunction::M1),
            "mm" | "m1m2" => Ok(MarkTestFunction::M1M2),
            "gamma" | "γ" => Ok(MarkTestFunction::Gamma),
            other => Err(Error::InvalidConfig(format!("unknown mark test function '{other}'"))),
        }
    }
}

impl TryFrom<String> for MarkTestFunction {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<MarkTestFunction> for String {
    fn from(f: MarkTestFunction) -> String {
        f.name().to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeCorrection {
    Translational,
    None,
}

impl FromStr for EdgeCorrection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translational" | "trans" => Ok(EdgeCorrection::Translational),
            "none" => Ok(EdgeCorrection::None),
            other => Err(Error::InvalidConfig(format!("unknown edge correction '{other}'"))),
        }
    }
}

/// Transformation applied to a summary function before residuals are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Transformation {
    Identity,
    /// `√(t/π)`; turns `K̂_f` into `L̂_f`.
    SqrtOverPi,
    /// `arcsin(√(1 − t))` for `t ∈ [0, 1]`.
    ArcsinSqrtComplement,
}

impl Transformation {
    pub fn name(self) -> &'static str {
        match self {
            Transformation::Identity => "K",
            Transformation::SqrtOverPi => "L",
            Transformation::ArcsinSqrtComplement => "arcsin",
        }
    }

    pub fn apply(self, t: f64) -> Option<f64> {
        match self {
            Transformation::Identity => Some(t),
            Transformation::SqrtOverPi => (t >= 0.0).then(|| (t / std::f64::consts::PI).sqrt()),
            Transformation::ArcsinSqrtComplement => {
                (0.0..=1.0).contains(&t).then(|| (1.0 - t).sqrt().asin())
            }
        }
    }
}

impl fmt::Display for Transformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Transformation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "K" | "identity" | "none" => Ok(Transformation::Identity),
            "L" | "sqrt" | "sqrt-over-pi" => Ok(Transformation::SqrtOverPi),
            "arcsin" | "arcsin-sqrt-complement" => Ok(Transformation::ArcsinSqrtComplement),
            other => Err(Error::InvalidConfig(format!("unknown transformation '{other}'"))),
        }
    }
}

impl TryFrom<String> for Transformation {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Transformation> for String {
    fn from(t: Transformation) -> String {
        t.name().to_string()
    }
}

/// Translational edge-correction factor `|W| / |W_{x_k} ∩ W_{x_l}|` for a rectangle.
pub fn translational_factor(window: &Window, dx: f64, dy: f64) -> Result<f64> {
    let ox = window.width() - dx.abs();
    let oy = window.height() - dy.abs();
    if ox <= 0.0 || oy <= 0.0 {
        return Err(Error::DegenerateOverlap { dx, dy });
    }
    Ok(window.area() / (ox * oy))
}

fn edge_factor(edge: EdgeCorrection, window: &Window, dx: f64, dy: f64) -> Result<f64> {
    match edge {
        EdgeCorrection::Translational => translational_factor(window, dx, dy),
        EdgeCorrection::None => Ok(1.0),
    }
}

/// `ĉ_f`, the mean of `f` over ordered pairs of distinct points. Zero is returned as is;
/// [`estimate_kf`] refuses to divide by it.
pub fn estimate_chat_f(pattern: &MarkedPattern, f: MarkTestFunction) -> Result<f64> {
    let n = pattern.len();
    if n < 2 {
        return Err(Error::PatternTooSmall(n));
    }
    if f == MarkTestFunction::One {
        return Ok(1.0);
    }
    let m = pattern.marks();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += f.eval_both_orders(m[i], m[j]);
        }
    }
    Ok(sum / (n as f64 * (n - 1) as f64))
}

#[derive(Debug, Clone, Copy)]
struct Pair {
    i: u32,
    j: u32,
    weight: f64,
}

/// Pairs of points closer than the largest grid distance, grouped by the first grid
/// index they are counted at, with their edge-correction weight.
///
/// Geometry is fixed under mark permutation, so one `PairGeometry` serves the data and
/// every permuted pattern.
#[derive(Debug, Clone)]
pub struct PairGeometry {
    grid: RGrid,
    n: usize,
    area: f64,
    pairs: Vec<Pair>,
    /// `bin_offsets[b]..bin_offsets[b + 1]` indexes the pairs first counted at grid index `b`.
    bin_offsets: Vec<usize>,
}

impl PairGeometry {
    pub fn new(pattern: &MarkedPattern, edge: EdgeCorrection, grid: &RGrid) -> Result<Self> {
        let n = pattern.len();
        if n < 2 {
            return Err(Error::PatternTooSmall(n));
        }
        let window = pattern.window();
        let pts = pattern.points();
        let mut binned: Vec<(usize, Pair)> = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                let dx = pts[i][0] - pts[j][0];
                let dy = pts[i][1] - pts[j][1];
                let d = dx.hypot(dy);
                if let Some(bin) = grid.first_index_covering(d) {
                    let weight = edge_factor(edge, window, dx, dy)?;
                    binned.push((bin, Pair { i: i as u32, j: j as u32, weight }));
                }
            }
        }
        binned.sort_by_key(|(bin, p)| (*bin, p.i, p.j));
        let mut bin_offsets = vec![0usize; grid.len() + 1];
        for (bin, _) in &binned {
            bin_offsets[bin + 1] += 1;
        }
        for b in 0..grid.len() {
            bin_offsets[b + 1] += bin_offsets[b];
        }
        Ok(PairGeometry {
            grid: *grid,
            n,
            area: window.area(),
            pairs: binned.into_iter().map(|(_, p)| p).collect(),
            bin_offsets,
        })
    }

    pub fn grid(&self) -> &RGrid {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of unordered pairs within `r_max`.
    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// `1 / (|W| λ̂² ĉ_f)`.
    fn normalizer(&self, chat: f64) -> Result<f64> {
        if !(chat > 0.0 && chat.is_finite()) {
            return Err(Error::DegenerateNormalizer);
        }
        let n = self.n as f64;
        let lambda2 = n * (n - 1.0) / (self.area * self.area);
        Ok(1.0 / (self.area * lambda2 * chat))
    }

    /// `K̂_f` values on the grid for the given mark vector (indexed like the pattern's points).
    pub fn kf_values(&self, marks: &[f64], f: MarkTestFunction, chat: f64) -> Result<Vec<f64>> {
        let norm = self.normalizer(chat)?;
        let mut out = Vec::with_capacity(self.grid.len());
        let mut acc = 0.0;
        for b in 0..self.grid.len() {
            for p in &self.pairs[self.bin_offsets[b]..self.bin_offsets[b + 1]] {
                acc += f.eval_both_orders(marks[p.i as usize], marks[p.j as usize]) * p.weight;
            }
            out.push(acc * norm);
        }
        Ok(out)
    }

    /// `K̂_f` for several mark test functions in one pass over the pairs.
    pub fn kf_values_many(
        &self,
        marks: &[f64],
        fs: &[(MarkTestFunction, f64)],
    ) -> Result<Vec<Vec<f64>>> {
        let norms = fs
            .iter()
            .map(|&(_, chat)| self.normalizer(chat))
            .collect::<Result<Vec<_>>>()?;
        let mut out = vec![Vec::with_capacity(self.grid.len()); fs.len()];
        let mut acc = vec![0.0; fs.len()];
        for b in 0..self.grid.len() {
            for p in &self.pairs[self.bin_offsets[b]..self.bin_offsets[b + 1]] {
                let (mi, mj) = (marks[p.i as usize], marks[p.j as usize]);
                for (a, (f, _)) in acc.iter_mut().zip(fs) {
                    *a += f.eval_both_orders(mi, mj) * p.weight;
                }
            }
            for ((o, a), norm) in out.iter_mut().zip(&acc).zip(&norms) {
                o.push(a * norm);
            }
        }
        Ok(out)
    }
}

/// Estimate `K̂_f` on `grid`.
pub fn estimate_kf(
    pattern: &MarkedPattern,
    f: MarkTestFunction,
    edge: EdgeCorrection,
    grid: &RGrid,
) -> Result<FunctionEstimate> {
    let chat = estimate_chat_f(pattern, f)?;
    if chat <= 0.0 {
        return Err(Error::DegenerateNormalizer);
    }
    let geometry = PairGeometry::new(pattern, edge, grid)?;
    FunctionEstimate::new(*grid, geometry.kf_values(pattern.marks(), f, chat)?)
}

/// Pointwise `h(T(r))`.
pub fn transform(estimate: &FunctionEstimate, h: Transformation) -> Result<FunctionEstimate> {
    let grid = *estimate.grid();
    let values = transform_values(estimate.values(), h, &grid)?;
    FunctionEstimate::new(grid, values)
}

pub(crate) fn transform_values(values: &[f64], h: Transformation, grid: &RGrid) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            h.apply(t)
                .ok_or(Error::TransformDomain { r: grid.value(j), value: t })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn three_points() -> MarkedPattern {
        MarkedPattern::new(
            vec![[1.0, 1.0], [2.0, 1.0], [8.0, 8.0]],
            vec![2.0, 4.0, 6.0],
            Window::square(10.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn translational_factor_cases() {
        let w = Window::square(10.0).unwrap();
        assert!(close(translational_factor(&w, 1.0, 0.0).unwrap(), 100.0 / 90.0, 1e-15));
        assert_eq!(translational_factor(&w, 0.0, 0.0).unwrap(), 1.0);
        assert!(matches!(
            translational_factor(&w, 10.0, 0.0),
            Err(Error::DegenerateOverlap { .. })
        ));
    }

    #[test]
    fn chat_values() {
        let p = three_points();
        assert!(close(estimate_chat_f(&p, MarkTestFunction::M1M2).unwrap(), 88.0 / 6.0, 1e-12));
        assert!(close(estimate_chat_f(&p, MarkTestFunction::Gamma).unwrap(), 4.0, 1e-12));
        assert_eq!(estimate_chat_f(&p, MarkTestFunction::One).unwrap(), 1.0);
        assert!(close(estimate_chat_f(&p, MarkTestFunction::M1).unwrap(), 4.0, 1e-12));
    }

    #[test]
    fn kf_worked_examples() {
        let p = three_points();
        let grid = RGrid::new(0.0, 2.0, 1.0).unwrap();
        let k = estimate_kf(&p, MarkTestFunction::One, EdgeCorrection::None, &grid).unwrap();
        assert!(close(k.values()[2], 2.0 / (100.0 * 6e-4), 1e-10));
        assert_eq!(k.values()[0], 0.0);
        let k = estimate_kf(&p, MarkTestFunction::M1M2, EdgeCorrection::None, &grid).unwrap();
        assert!(close(k.values()[2], 18.181818181818183, 1e-10));
        let k =
            estimate_kf(&p, MarkTestFunction::M1M2, EdgeCorrection::Translational, &grid).unwrap();
        assert!(close(k.values()[2], 20.202020202020204, 1e-10));
        // the pair at distance exactly 1 is counted at r = 1
        assert!(k.values()[1] > 0.0);
    }

    #[test]
    fn degenerate_normalizer() {
        let p = three_points().with_marks(vec![3.0; 3]).unwrap();
        let grid = RGrid::new(0.0, 2.0, 1.0).unwrap();
        assert!(matches!(
            estimate_kf(&p, MarkTestFunction::Gamma, EdgeCorrection::None, &grid),
            Err(Error::DegenerateNormalizer)
        ));
    }

    #[test]
    fn many_matches_single() {
        let p = three_points();
        let grid = RGrid::new(0.0, 12.0, 0.5).unwrap();
        let g = PairGeometry::new(&p, EdgeCorrection::Translational, &grid).unwrap();
        let fs: Vec<_> = MarkTestFunction::TABLE
            .iter()
            .map(|&f| (f, estimate_chat_f(&p, f).unwrap()))
            .collect();
        let many = g.kf_values_many(p.marks(), &fs).unwrap();
        for ((f, chat), vals) in fs.iter().zip(&many) {
            assert_eq!(&g.kf_values(p.marks(), *f, *chat).unwrap(), vals);
        }
    }

    #[test]
    fn transformations() {
        let grid = RGrid::new(0.0, 2.0, 1.0).unwrap();
        let e = FunctionEstimate::new(grid, vec![0.0, std::f64::consts::PI, 4.0]).unwrap();
        let l = transform(&e, Transformation::SqrtOverPi).unwrap();
        assert_eq!(l.values()[0], 0.0);
        assert!(close(l.values()[1], 1.0, 1e-15));
        let bad = FunctionEstimate::new(grid, vec![0.0, -0.1, 1.0]).unwrap();
        match transform(&bad, Transformation::SqrtOverPi) {
            Err(Error::TransformDomain { r, .. }) => assert_eq!(r, 1.0),
            other => panic!("{other:?}"),
        }
        assert!(transform(&e, Transformation::ArcsinSqrtComplement).is_err());
        let unit = FunctionEstimate::new(grid, vec![0.0, 0.5, 1.0]).unwrap();
        let a = transform(&unit, Transformation::ArcsinSqrtComplement).unwrap();
        assert!(close(a.values()[0], std::f64::consts::FRAC_PI_2, 1e-15));
        assert_eq!(a.values()[2], 0.0);
    }

    #[test]
    fn names_round_trip() {
        for f in [MarkTestFunction::One, MarkTestFunction::M1, MarkTestFunction::M1M2, MarkTestFunction::Gamma] {
            assert_eq!(f.name().parse::<MarkTestFunction>().unwrap(), f);
        }
        for t in [Transformation::Identity, Transformation::SqrtOverPi, Transformation::ArcsinSqrtComplement] {
            assert_eq!(t.name().parse::<Transformation>().unwrap(), t);
        }
    }
}
