//! Sequential neighbour-interaction marked point process.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::pattern::Window;

/// Proposals allowed for one point before giving up.
pub const MAX_PROPOSALS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeqNimppParams {
    pub mu: f64,
    pub sigma2: f64,
    pub theta: f64,
    pub radius: f64,
}

/// Influence of an earlier point `z` on a later point `y` at distance `d`.
pub fn influence(p: &SeqNimppParams, m_z: f64, m_y: f64, d: f64) -> f64 {
    if p.theta == 0.0 {
        return 0.0;
    }
    if d >= p.radius * m_z / p.mu {
        return 0.0;
    }
    let s = p.mu / p.radius;
    p.theta * m_z * m_y / (s * s * d)
}

/// Gaussian marks truncated below at zero, by rejection.
pub fn truncated_normal_marks<R: Rng + ?Sized>(
    n: usize,
    mu: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let normal = Normal::new(mu, sigma2.sqrt())
        .map_err(|e| Error::InvalidModel(format!("mark distribution: {e}")))?;
    let mut marks = Vec::with_capacity(n);
    while marks.len() < n {
        let mut tries = 0usize;
        loop {
            let m = normal.sample(rng);
            if m >= 0.0 {
                marks.push(m);
                break;
            }
            tries += 1;
            if tries >= MAX_PROPOSALS {
                return Err(Error::InvalidModel("truncated mark distribution has negligible mass".into()));
            }
        }
    }
    Ok(marks)
}

/// Locations placed one at a time; the k-th is accepted with probability `exp(−U_k)`.
/// Returns points and marks in placement order.
pub fn simulate_seqnimpp_raw<R: Rng + ?Sized>(
    p: &SeqNimppParams,
    n: usize,
    window: &Window,
    rng: &mut R,
) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    if p.theta < 0.0 {
        return Err(Error::UnsupportedAttraction(p.theta));
    }
    let marks = truncated_normal_marks(n, p.mu, p.sigma2, rng)?;
    let mut points: Vec<[f64; 2]> = Vec::with_capacity(n);
    for (k, &m_k) in marks.iter().enumerate() {
        let mut proposals = 0usize;
        let location = loop {
            if proposals == MAX_PROPOSALS {
                return Err(Error::PlacementFailure { k: k + 1, proposals });
            }
            proposals += 1;
            let x = window.x_min + rng.random::<f64>() * window.width();
            let y = window.y_min + rng.random::<f64>() * window.height();
            let mut u = 0.0;
            for (z, &m_z) in points.iter().zip(&marks) {
                let d = (z[0] - x).hypot(z[1] - y);
                if d == 0.0 && p.theta > 0.0 {
                    u = f64::INFINITY;
                    break;
                }
                u += influence(p, m_z, m_k, d);
            }
            if u == 0.0 || rng.random::<f64>() < (-u).exp() {
                break [x, y];
            }
        };
        points.push(location);
    }
    Ok((points, marks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    const P: SeqNimppParams = SeqNimppParams { mu: 24.0, sigma2: 9.0, theta: 0.2, radius: 6.0 };

    #[test]
    fn influence_support_and_scale() {
        // radius R·m_z/μ = 6 for m_z = μ
        assert_eq!(influence(&P, 24.0, 24.0, 6.0), 0.0);
        let v = influence(&P, 24.0, 24.0, 2.0);
        assert!((v - 0.2 * 576.0 / (16.0 * 2.0)).abs() < 1e-12);
        assert_eq!(influence(&SeqNimppParams { theta: 0.0, ..P }, 24.0, 24.0, 0.0), 0.0);
    }

    #[test]
    fn attraction_is_rejected() {
        let w = Window::square(10.0).unwrap();
        let p = SeqNimppParams { theta: -0.1, ..P };
        assert!(matches!(
            simulate_seqnimpp_raw(&p, 5, &w, &mut rng::stream(0, &[])),
            Err(Error::UnsupportedAttraction(_))
        ));
    }

    #[test]
    fn placement_failure_reports_index() {
        // a huge θ in a tiny window makes every second proposal essentially impossible
        let w = Window::square(1.0).unwrap();
        let p = SeqNimppParams { theta: 1e9, ..P };
        match simulate_seqnimpp_raw(&p, 3, &w, &mut rng::stream(0, &[])) {
            Err(Error::PlacementFailure { k, .. }) => assert_eq!(k, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn marks_are_nonnegative() {
        let m = truncated_normal_marks(2000, 0.5, 1.0, &mut rng::stream(2, &[])).unwrap();
        assert!(m.iter().all(|&v| v >= 0.0));
    }
}
