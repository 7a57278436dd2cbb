//! Windows, marked point patterns, distance grids and tabulated functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const GRID_TOL: f64 = 1e-9;

/// Axis-aligned rectangular observation window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Window {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Result<Self> {
        let w = Window { x_min, x_max, y_min, y_max };
        w.validate()?;
        Ok(w)
    }

    /// The square `[0, side]²`.
    pub fn square(side: f64) -> Result<Self> {
        Self::new(0.0, side, 0.0, side)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_max <= self.x_min || self.y_max <= self.y_min {
            return Err(Error::InvalidWindow(format!(
                "[{}, {}] x [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed-boundary membership test.
    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max && y >= self.y_min && y <= self.y_max
    }

    /// Number of lattice cells along each axis for square cells of side `cell`.
    pub fn lattice_dims(&self, cell: f64) -> Result<(usize, usize)> {
        if !(cell > 0.0 && cell.is_finite()) {
            return Err(Error::CellIncompatible { cell });
        }
        let count = |len: f64| -> Option<usize> {
            let q = len / cell;
            let r = q.round();
            ((q - r).abs() <= GRID_TOL * q.max(1.0) && r >= 1.0).then_some(r as usize)
        };
        match (count(self.width()), count(self.height())) {
            (Some(nx), Some(ny)) => Ok((nx, ny)),
            _ => Err(Error::CellIncompatible { cell }),
        }
    }
}

/// Regular lattice of cell centers covering `window`, row-major (x varies fastest).
pub fn window_grid(window: &Window, cell: f64) -> Result<Vec<[f64; 2]>> {
    let (nx, ny) = window.lattice_dims(cell)?;
    let mut centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        let y = window.y_min + (j as f64 + 0.5) * cell;
        for i in 0..nx {
            centers.push([window.x_min + (i as f64 + 0.5) * cell, y]);
        }
    }
    Ok(centers)
}

/// Points with non-negative real marks observed in a rectangular window.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedPattern {
    points: Vec<[f64; 2]>,
    marks: Vec<f64>,
    window: Window,
    has_duplicates: bool,
}

impl MarkedPattern {
    pub fn new(points: Vec<[f64; 2]>, marks: Vec<f64>, window: Window) -> Result<Self> {
        window.validate()?;
        if points.len() != marks.len() {
            return Err(Error::InvalidPattern(format!(
                "{} points but {} marks",
                points.len(),
                marks.len()
            )));
        }
        for (i, (p, &m)) in points.iter().zip(&marks).enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) || !window.contains(p[0], p[1]) {
                return Err(Error::InvalidPattern(format!(
                    "point {i} at ({}, {}) outside window",
                    p[0], p[1]
                )));
            }
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::InvalidPattern(format!("point {i} has invalid mark {m}")));
            }
        }
        let has_duplicates = detect_duplicates(&points);
        if has_duplicates {
            log::warn!("pattern contains duplicate point locations");
        }
        Ok(MarkedPattern { points, marks, window, has_duplicates })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    /// Whether two or more points share a location.
    pub fn has_duplicates(&self) -> bool {
        self.has_duplicates
    }

    /// Same locations with a new mark vector. The marks must satisfy the pattern invariants.
    pub fn with_marks(&self, marks: Vec<f64>) -> Result<Self> {
        if marks.len() != self.points.len() {
            return Err(Error::InvalidPattern("mark count mismatch".into()));
        }
        if let Some(m) = marks.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
            return Err(Error::InvalidPattern(format!("invalid mark {m}")));
        }
        Ok(MarkedPattern {
            points: self.points.clone(),
            marks,
            window: self.window,
            has_duplicates: self.has_duplicates,
        })
    }
}

fn detect_duplicates(points: &[[f64; 2]]) -> bool {
    let mut sorted: Vec<[f64; 2]> = points.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    sorted.windows(2).any(|w| w[0] == w[1])
}

/// Dense symmetric matrix of Euclidean interpoint distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

pub fn pairwise_distances(pattern: &MarkedPattern) -> Result<DistanceMatrix> {
    let n = pattern.len();
    if n < 2 {
        return Err(Error::PatternTooSmall(n));
    }
    let pts = pattern.points();
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (pts[i][0] - pts[j][0]).hypot(pts[i][1] - pts[j][1]);
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

/// Empirical mean and unbiased variance of the marks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkSummary {
    pub mean: f64,
    pub variance: f64,
}

pub fn mark_summary(pattern: &MarkedPattern) -> Result<MarkSummary> {
    let n = pattern.len();
    if n < 2 {
        return Err(Error::PatternTooSmall(n));
    }
    let marks = pattern.marks();
    let mean = marks.iter().sum::<f64>() / n as f64;
    let ss: f64 = marks.iter().map(|m| (m - mean).powi(2)).sum();
    Ok(MarkSummary { mean, variance: ss / (n - 1) as f64 })
}

/// Arithmetic sequence of distances `r_min, r_min + step, ..., r_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RGrid {
    r_min: f64,
    r_max: f64,
    step: f64,
    len: usize,
}

impl RGrid {
    pub fn new(r_min: f64, r_max: f64, step: f64) -> Result<Self> {
        if !(r_min.is_finite() && r_max.is_finite() && step.is_finite()) {
            return Err(Error::InvalidGrid("non-finite bounds".into()));
        }
        if r_min < 0.0 {
            return Err(Error::InvalidGrid(format!("r_min = {r_min} < 0")));
        }
        if step <= 0.0 {
            return Err(Error::InvalidGrid(format!("step = {step} <= 0")));
        }
        if r_max < r_min {
            return Err(Error::InvalidGrid(format!("r_max = {r_max} < r_min = {r_min}")));
        }
        let q = (r_max - r_min) / step;
        if (q - q.round()).abs() > GRID_TOL {
            return Err(Error::InvalidGrid(format!(
                "({r_max} - {r_min}) / {step} is not an integer"
            )));
        }
        Ok(RGrid { r_min, r_max, step, len: q.round() as usize + 1 })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The j-th grid value. Every consumer uses this formula so that `d <= r_j` is
    /// decided identically everywhere.
    pub fn value(&self, j: usize) -> f64 {
        self.r_min + j as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len).map(|j| self.value(j)).collect()
    }

    /// Smallest grid index `j` with `d <= value(j)`, or `None` if `d > r_max`.
    pub fn first_index_covering(&self, d: f64) -> Option<usize> {
        if d > self.value(self.len - 1) {
            return None;
        }
        let guess = ((d - self.r_min) / self.step).ceil();
        let mut j = if guess <= 0.0 { 0 } else { (guess as usize).min(self.len - 1) };
        while j > 0 && d <= self.value(j - 1) {
            j -= 1;
        }
        while d > self.value(j) {
            j += 1;
        }
        Some(j)
    }

    /// Sub-grid `[a, b]` sharing this grid's step, aligned to its points.
    pub fn sub_interval(&self, a: f64, b: f64) -> Result<RGrid> {
        let sub = RGrid::new(a, b, self.step)?;
        self.index_range(&sub)?;
        Ok(sub)
    }

    /// Index range of `sub` inside this grid.
    pub fn index_range(&self, sub: &RGrid) -> Result<std::ops::Range<usize>> {
        let offset = (sub.r_min - self.r_min) / self.step;
        let aligned = (offset - offset.round()).abs() <= GRID_TOL;
        let same_step = (sub.step - self.step).abs() <= GRID_TOL * self.step;
        if !aligned || !same_step || offset.round() < 0.0 {
            return Err(Error::InvalidGrid(format!(
                "[{}, {}] is not a sub-grid of [{}, {}] step {}",
                sub.r_min, sub.r_max, self.r_min, self.r_max, self.step
            )));
        }
        let start = offset.round() as usize;
        let end = start + sub.len;
        if end > self.len {
            return Err(Error::InvalidGrid(format!(
                "[{}, {}] exceeds estimation grid [{}, {}]",
                sub.r_min, sub.r_max, self.r_min, self.r_max
            )));
        }
        Ok(start..end)
    }

    pub fn same_as(&self, other: &RGrid) -> bool {
        self.len == other.len
            && (self.r_min - other.r_min).abs() <= GRID_TOL
            && (self.step - other.step).abs() <= GRID_TOL * self.step
    }
}

/// A function tabulated on an [`RGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionEstimate {
    grid: RGrid,
    values: Vec<f64>,
}

impl FunctionEstimate {
    pub fn new(grid: RGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::IncompatibleGrids);
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite value at r = {}",
                grid.value(j)
            )));
        }
        Ok(FunctionEstimate { grid, values })
    }

    pub fn grid(&self) -> &RGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pat(points: Vec<[f64; 2]>, marks: Vec<f64>) -> MarkedPattern {
        MarkedPattern::new(points, marks, Window::square(10.0).unwrap()).unwrap()
    }

    #[test]
    fn distances() {
        let p = pat(vec![[1.0, 1.0], [2.0, 1.0]], vec![1.0, 1.0]);
        assert_eq!(pairwise_distances(&p).unwrap().get(0, 1), 1.0);
        let p = pat(vec![[0.0, 0.0], [3.0, 4.0]], vec![1.0, 1.0]);
        let d = pairwise_distances(&p).unwrap();
        assert_eq!(d.get(0, 1), 5.0);
        assert_eq!(d.get(1, 0), 5.0);
        assert_eq!(d.get(1, 1), 0.0);
        let p = pat(vec![[0.0, 0.0]], vec![1.0]);
        assert!(matches!(pairwise_distances(&p), Err(Error::PatternTooSmall(1))));
    }

    #[test]
    fn summaries() {
        let p = pat(vec![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]], vec![2.0, 4.0, 6.0]);
        let s = mark_summary(&p).unwrap();
        assert_eq!((s.mean, s.variance), (4.0, 4.0));
        let p = pat(vec![[1.0, 1.0], [2.0, 2.0], [3.0, 3.0]], vec![5.0; 3]);
        let s = mark_summary(&p).unwrap();
        assert_eq!((s.mean, s.variance), (5.0, 0.0));
        let p = pat(vec![[1.0, 1.0], [2.0, 2.0]], vec![0.0, 1.0]);
        let s = mark_summary(&p).unwrap();
        assert_eq!((s.mean, s.variance), (0.5, 0.5));
    }

    #[test]
    fn lattice() {
        let w = Window::square(10.0).unwrap();
        let c = window_grid(&w, 5.0).unwrap();
        assert_eq!(c, vec![[2.5, 2.5], [7.5, 2.5], [2.5, 7.5], [7.5, 7.5]]);
        let w100 = Window::square(100.0).unwrap();
        let c = window_grid(&w100, 0.5).unwrap();
        assert_eq!(c.len(), 40_000);
        assert!(c.iter().all(|p| p[0] > 0.0 && p[0] < 100.0 && p[1] > 0.0 && p[1] < 100.0));
        assert!(matches!(window_grid(&w, 3.0), Err(Error::CellIncompatible { .. })));
    }

    #[test]
    fn pattern_validation() {
        let w = Window::square(10.0).unwrap();
        assert!(MarkedPattern::new(vec![[10.0, 0.0]], vec![1.0], w).is_ok());
        assert!(MarkedPattern::new(vec![[10.1, 0.0]], vec![1.0], w).is_err());
        assert!(MarkedPattern::new(vec![[1.0, 0.0]], vec![-1.0], w).is_err());
        assert!(MarkedPattern::new(vec![[1.0, 0.0]], vec![], w).is_err());
        let p = MarkedPattern::new(vec![[1.0, 1.0], [1.0, 1.0]], vec![1.0, 2.0], w).unwrap();
        assert!(p.has_duplicates());
        assert!(Window::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn grid_counting_and_bins() {
        let g = RGrid::new(0.0, 25.0, 0.25).unwrap();
        assert_eq!(g.len(), 101);
        let i1 = g.sub_interval(4.0, 8.0).unwrap();
        assert_eq!(i1.len(), 17);
        assert_eq!(g.index_range(&i1).unwrap(), 16..33);
        assert!(g.sub_interval(4.1, 8.1).is_err());
        assert!(g.sub_interval(20.0, 30.0).is_err());
        assert!(RGrid::new(0.0, 1.0, 0.3).is_err());
        assert_eq!(g.first_index_covering(0.0), Some(0));
        assert_eq!(g.first_index_covering(0.25), Some(1));
        assert_eq!(g.first_index_covering(0.26), Some(2));
        assert_eq!(g.first_index_covering(25.0), Some(100));
        assert_eq!(g.first_index_covering(25.01), None);
    }
}
