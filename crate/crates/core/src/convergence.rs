//! Where quantum and hidden-variable correlation curves coincide.
//!
//! Curves are plain `Fn(f64) -> f64` of an angle. [`find_convergence_points`]
//! brackets sign changes of `qm − hvt` on a grid and bisects them;
//! [`hup_vicinity`] widens a point by `Δθ = ħ/(2ΔJ)` with `ħ = 1`, and
//! [`overlap_regions`] reports the maximal stretches where the two curves stay
//! within `ε` of each other.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hvt::{angular_separation, lhv_correlation_analytic};
use crate::quantum::MeasurementSetting;

/// Step used for dense scans of the gap function.
pub const DEFAULT_SCAN_STEP: f64 = 1e-3;

/// Bisection iteration cap.
pub const MAX_BISECTIONS: usize = 50;

/// Quantum Bell-state correlation at separation `theta`.
pub fn qm_curve(theta: f64) -> f64 {
    theta.cos()
}

/// Sign-model correlation at separation `theta`.
pub fn hvt_curve(theta: f64) -> f64 {
    lhv_correlation_analytic(0.0, theta).value
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfigurationKind {
    Aligned,
    Orthogonal,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigurationClass {
    pub kind: ConfigurationKind,
    pub tolerance: f64,
}

/// Aligned when every pairwise separation is within `tolerance` of 0,
/// orthogonal when every one is within `tolerance` of π/2, random otherwise.
pub fn classify_configuration(settings: &[MeasurementSetting], tolerance: f64) -> Result<ConfigurationClass> {
    if settings.len() < 2 {
        return Err(Error::argument("classification needs at least two settings"));
    }
    if !(tolerance > 0.0) {
        return Err(Error::argument("tolerance must be positive"));
    }
    let mut aligned = true;
    let mut orthogonal = true;
    for (i, x) in settings.iter().enumerate() {
        for y in &settings[i + 1..] {
            let d = angular_separation(x.observable_angle(), y.observable_angle());
            aligned &= d <= tolerance;
            orthogonal &= (d - FRAC_PI_2).abs() <= tolerance;
        }
    }
    let kind = if aligned {
        ConfigurationKind::Aligned
    } else if orthogonal {
        ConfigurationKind::Orthogonal
    } else {
        ConfigurationKind::Random
    };
    Ok(ConfigurationClass { kind, tolerance })
}

/// Uncertainty in the conjugate variable, in units of ħ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VicinityParams {
    delta_j: f64,
    delta_theta: f64,
}

impl VicinityParams {
    pub fn new(delta_j: f64) -> Result<Self> {
        if !(delta_j > 0.0) || !delta_j.is_finite() {
            return Err(Error::argument(format!("delta_j must be positive and finite, got {delta_j}")));
        }
        Ok(VicinityParams { delta_j, delta_theta: 1.0 / (2.0 * delta_j) })
    }

    pub fn delta_j(&self) -> f64 {
        self.delta_j
    }

    /// Half-width `1/(2ΔJ)`.
    pub fn delta_theta(&self) -> f64 {
        self.delta_theta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub theta0: f64,
    pub qm_value: f64,
    pub hvt_value: f64,
    pub residual: f64,
}

impl ConvergencePoint {
    fn at<Q, H>(theta0: f64, qm: &Q, hvt: &H) -> Self
    where
        Q: Fn(f64) -> f64,
        H: Fn(f64) -> f64,
    {
        let (qm_value, hvt_value) = (qm(theta0), hvt(theta0));
        ConvergencePoint { theta0, qm_value, hvt_value, residual: (qm_value - hvt_value).abs() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RegionOrigin {
    HupVicinity { params: VicinityParams },
    ToleranceScan { epsilon: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRegion {
    pub lo: f64,
    pub hi: f64,
    /// Largest `|qm − hvt|` seen on the region's scan.
    pub max_gap: f64,
    pub origin: RegionOrigin,
}

impl ConvergenceRegion {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.lo <= theta && theta <= self.hi
    }
}

fn check_range(range: (f64, f64), step: f64) -> Result<()> {
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::argument(format!("empty range [{lo}, {hi}]")));
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::argument(format!("step must be positive, got {step}")));
    }
    Ok(())
}

/// `lo, lo + step, …` up to and including `hi`.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut points: Vec<f64> = (0..=n).map(|k| lo + k as f64 * step).collect();
    let last = *points.last().expect("n >= 0");
    if hi - last > step * 1e-9 {
        points.push(hi);
    } else {
        *points.last_mut().unwrap() = last.min(hi);
    }
    points
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut f_lo = f(lo);
    let mut best = if f_lo.abs() <= f(hi).abs() { lo } else { hi };
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() < f(best).abs() {
            best = mid;
        }
        if f_mid.abs() <= tol || f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    best
}

/// Golden-section minimiser of `|f|` on `[lo, hi]`.
fn minimize_abs<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1).abs(), f(x2).abs());
    for _ in 0..2 * MAX_BISECTIONS {
        if f1 <= f2 {
            hi = x2;
            (x2, f2) = (x1, f1);
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1).abs();
        } else {
            lo = x1;
            (x1, f1) = (x2, f2);
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2).abs();
        }
    }
    if f1 <= f2 {
        x1
    } else {
        x2
    }
}

/// Angles in `range` where `qm(θ) = hvt(θ)` to within `tol`.
///
/// Sign changes of `qm − hvt` between grid points are refined by bisection.
/// Grid points already within `tol` are kept as-is, and local minima of
/// `|qm − hvt|` without a sign change (tangencies, kinks) are refined by a
/// golden-section search over the neighbouring cells.
/// Points closer than half a grid step are merged, keeping the smaller
/// residual. Every returned point satisfies `residual <= tol`.
pub fn find_convergence_points<Q, H>(
    qm: Q,
    hvt: H,
    range: (f64, f64),
    grid_step: f64,
    tol: f64,
) -> Result<Vec<ConvergencePoint>>
where
    Q: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    check_range(range, grid_step)?;
    if !(tol >= 0.0) {
        return Err(Error::argument("tolerance must be non-negative"));
    }
    let gap = |t: f64| qm(t) - hvt(t);
    let thetas = grid(range.0, range.1, grid_step);
    let values: Vec<f64> = thetas.iter().map(|&t| gap(t)).collect();

    let mut found = Vec::new();
    for (i, (&t, &v)) in thetas.iter().zip(&values).enumerate() {
        if v.abs() <= tol {
            found.push(t);
        }
        if let (Some(&t1), Some(&v1)) = (thetas.get(i + 1), values.get(i + 1)) {
            if v.abs() > tol && v1.abs() > tol && (v < 0.0) != (v1 < 0.0) {
                found.push(bisect(&gap, t, t1, tol));
            }
        }
        if i > 0 && i + 1 < values.len() {
            let (v0, v1) = (values[i - 1], values[i + 1]);
            let touching = (v0 < 0.0) == (v < 0.0) && (v1 < 0.0) == (v < 0.0);
            if touching && v.abs() > tol && v.abs() <= v0.abs() && v.abs() <= v1.abs() {
                found.push(minimize_abs(&gap, thetas[i - 1], thetas[i + 1]));
            }
        }
    }

    let mut points: Vec<ConvergencePoint> =
        found.into_iter().map(|t| ConvergencePoint::at(t, &qm, &hvt)).filter(|p| p.residual <= tol).collect();
    points.sort_by(|a, b| a.theta0.total_cmp(&b.theta0));

    let mut merged: Vec<ConvergencePoint> = Vec::with_capacity(points.len());
    for p in points {
        match merged.last_mut() {
            Some(last) if p.theta0 - last.theta0 < 0.5 * grid_step => {
                if p.residual < last.residual {
                    *last = p;
                }
            }
            _ => merged.push(p),
        }
    }
    Ok(merged)
}

fn max_gap_on<Q, H>(qm: &Q, hvt: &H, lo: f64, hi: f64, step: f64) -> f64
where
    Q: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    if hi <= lo {
        return (qm(lo) - hvt(lo)).abs();
    }
    let n = ((hi - lo) / step).ceil().max(1.0) as usize;
    (0..=n)
        .map(|k| {
            let t = if k == n { hi } else { lo + (hi - lo) * k as f64 / n as f64 };
            (qm(t) - hvt(t)).abs()
        })
        .fold(0.0, f64::max)
}

/// The interval `[θ₀ − Δθ, θ₀ + Δθ]` around `point`, with the largest gap
/// between the curves found by a scan at [`DEFAULT_SCAN_STEP`] or finer.
pub fn hup_vicinity<Q, H>(point: &ConvergencePoint, params: VicinityParams, qm: Q, hvt: H) -> ConvergenceRegion
where
    Q: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    let lo = point.theta0 - params.delta_theta();
    let hi = point.theta0 + params.delta_theta();
    ConvergenceRegion {
        lo,
        hi,
        max_gap: max_gap_on(&qm, &hvt, lo, hi, DEFAULT_SCAN_STEP),
        origin: RegionOrigin::HupVicinity { params },
    }
}

/// Maximal grid stretches where `|qm − hvt| <= epsilon`.
///
/// Convergence points that fall between grid points are added as degenerate
/// regions, so every root is covered even when `epsilon` is tiny. Touching or
/// overlapping regions are merged; output is sorted and disjoint.
pub fn overlap_regions<Q, H>(
    qm: Q,
    hvt: H,
    range: (f64, f64),
    step: f64,
    epsilon: f64,
) -> Result<Vec<ConvergenceRegion>>
where
    Q: Fn(f64) -> f64,
    H: Fn(f64) -> f64,
{
    check_range(range, step)?;
    if !(epsilon > 0.0) {
        return Err(Error::argument(format!("epsilon must be positive, got {epsilon}")));
    }
    let origin = RegionOrigin::ToleranceScan { epsilon };
    let thetas = grid(range.0, range.1, step);

    let mut spans: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    for (i, &t) in thetas.iter().enumerate() {
        let inside = (qm(t) - hvt(t)).abs() <= epsilon;
        match (inside, open) {
            (true, None) => open = Some(t),
            (false, Some(start)) => {
                spans.push((start, thetas[i - 1]));
                open = None;
            }
            _ => {}
        }
    }
    if let Some(start) = open {
        spans.push((start, *thetas.last().unwrap()));
    }

    for p in find_convergence_points(&qm, &hvt, range, step, epsilon)? {
        if !spans.iter().any(|&(lo, hi)| lo <= p.theta0 && p.theta0 <= hi) {
            spans.push((p.theta0, p.theta0));
        }
    }
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(spans.len());
    for (lo, hi) in spans {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => last.1 = last.1.max(hi),
            _ => merged.push((lo, hi)),
        }
    }

    Ok(merged
        .into_iter()
        .map(|(lo, hi)| ConvergenceRegion {
            lo,
            hi,
            max_gap: max_gap_on(&qm, &hvt, lo, hi, step.min(DEFAULT_SCAN_STEP)),
            origin,
        })
        .collect())
}

/// Built-in curves over `[0, π]`.
pub const DEFAULT_RANGE: (f64, f64) = (0.0, PI);

#[cfg(test)]
mod tests {
    use super::*;

    fn lhv_line(t: f64) -> f64 {
        1.0 - 2.0 * t / PI
    }

    // Brute-force oracle: the largest |cos θ − (1 − 2θ/π)| on a fine grid.
    fn oracle_max_gap(lo: f64, hi: f64) -> f64 {
        let n = 2_000_000;
        (0..=n)
            .map(|k| {
                let t = lo + (hi - lo) * k as f64 / n as f64;
                (t.cos() - lhv_line(t)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn classification_examples() {
        let o = MeasurementSetting::observable;
        assert_eq!(classify_configuration(&[o(0.3), o(0.3), o(0.3)], 1e-6).unwrap().kind, ConfigurationKind::Aligned);
        assert_eq!(classify_configuration(&[o(0.0), o(FRAC_PI_2)], 1e-6).unwrap().kind, ConfigurationKind::Orthogonal);
        assert_eq!(classify_configuration(&[o(0.1), o(1.0), o(2.3)], 1e-3).unwrap().kind, ConfigurationKind::Random);
        assert!(classify_configuration(&[o(0.1)], 1e-3).is_err());
        assert!(classify_configuration(&[o(0.1), o(0.2)], 0.0).is_err());
        // Anti-parallel is not aligned.
        assert_eq!(classify_configuration(&[o(0.0), o(PI)], 1e-6).unwrap().kind, ConfigurationKind::Random);
    }

    #[test]
    fn grid_includes_both_ends() {
        let g = grid(0.0, PI, 0.01);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), PI);
        let g = grid(0.0, 1.0, 0.25);
        assert_eq!(g, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn builtin_curves_converge_at_three_points() {
        let pts = find_convergence_points(qm_curve, hvt_curve, (0.0, PI), 0.01, 1e-10).unwrap();
        let thetas: Vec<f64> = pts.iter().map(|p| p.theta0).collect();
        assert_eq!(thetas.len(), 3, "{thetas:?}");
        for (t, expect) in thetas.iter().zip([0.0, FRAC_PI_2, PI]) {
            assert!((t - expect).abs() < 1e-6);
        }
        assert!(pts.iter().all(|p| p.residual <= 1e-10));
    }

    #[test]
    fn convergence_values_match_configuration_table() {
        let pts = find_convergence_points(qm_curve, hvt_curve, (0.0, PI), 0.01, 1e-10).unwrap();
        assert!((pts[0].qm_value - 1.0).abs() < 1e-9 && (pts[0].hvt_value - 1.0).abs() < 1e-9);
        assert!(pts[1].qm_value.abs() < 1e-9 && pts[1].hvt_value.abs() < 1e-9);
        assert!((pts[2].qm_value + 1.0).abs() < 1e-9 && (pts[2].hvt_value + 1.0).abs() < 1e-9);
    }

    #[test]
    fn identical_curves_flag_every_grid_point() {
        let pts = find_convergence_points(qm_curve, qm_curve, (0.0, 1.0), 0.1, 1e-12).unwrap();
        assert_eq!(pts.len(), grid(0.0, 1.0, 0.1).len());
        let regions = overlap_regions(qm_curve, qm_curve, (0.0, 1.0), 0.1, 1e-12).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!((regions[0].lo, regions[0].hi), (0.0, 1.0));
    }

    #[test]
    fn kinked_touching_point_off_grid_is_found() {
        // The gap touches zero at θ = 0 without changing sign; 0 is not a grid point here.
        let pts = find_convergence_points(qm_curve, hvt_curve, (-0.1745, 2.0), 0.01, 1e-12).unwrap();
        let thetas: Vec<f64> = pts.iter().map(|p| p.theta0).collect();
        assert_eq!(thetas.len(), 2, "{thetas:?}");
        assert!(thetas[0].abs() < 1e-9 && (thetas[1] - FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn smooth_tangency_found() {
        let pts = find_convergence_points(|t: f64| (t - 0.333).powi(2), |_| 0.0, (0.0, 1.0), 0.01, 1e-12).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].theta0 - 0.333).abs() < 1e-5);
    }

    #[test]
    fn opposite_cosines_meet_at_right_angle() {
        let pts = find_convergence_points(|t: f64| t.cos(), |t: f64| -t.cos(), (0.0, PI), 0.01, 1e-10).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].theta0 - FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn empty_range_rejected() {
        assert!(find_convergence_points(qm_curve, hvt_curve, (1.0, 1.0), 0.01, 1e-10).is_err());
        assert!(find_convergence_points(qm_curve, hvt_curve, (0.0, 1.0), 0.0, 1e-10).is_err());
    }

    #[test]
    fn vicinity_arithmetic() {
        let p = ConvergencePoint::at(FRAC_PI_2, &qm_curve, &hvt_curve);
        let r = hup_vicinity(&p, VicinityParams::new(1.0).unwrap(), qm_curve, hvt_curve);
        assert_eq!((r.lo, r.hi), (FRAC_PI_2 - 0.5, FRAC_PI_2 + 0.5));
        let p0 = ConvergencePoint::at(0.0, &qm_curve, &hvt_curve);
        let r0 = hup_vicinity(&p0, VicinityParams::new(10.0).unwrap(), qm_curve, hvt_curve);
        assert!((r0.lo + 0.05).abs() < 1e-15 && (r0.hi - 0.05).abs() < 1e-15);
        assert!(VicinityParams::new(0.0).is_err());
        assert!(VicinityParams::new(-1.0).is_err());
    }

    #[test]
    fn vicinity_max_gap_matches_oracle() {
        let oracle = oracle_max_gap(FRAC_PI_2 - 0.5, FRAC_PI_2 + 0.5);
        assert!((oracle - 0.161_115_652).abs() < 1e-8);
        let p = ConvergencePoint::at(FRAC_PI_2, &qm_curve, &lhv_line);
        let r = hup_vicinity(&p, VicinityParams::new(1.0).unwrap(), qm_curve, lhv_line);
        assert!((r.max_gap - oracle).abs() < 1e-6, "{}", r.max_gap);
    }

    #[test]
    fn overlap_regions_builtin() {
        let regions = overlap_regions(qm_curve, hvt_curve, (0.0, PI), 1e-3, 0.05).unwrap();
        assert_eq!(regions.len(), 3);
        for (r, root) in regions.iter().zip([0.0, FRAC_PI_2, PI]) {
            assert!(r.contains(root), "{r:?}");
            assert!(r.max_gap <= 0.05);
        }
        for w in regions.windows(2) {
            assert!(w[0].hi < w[1].lo);
        }
    }

    #[test]
    fn overlap_whole_range_when_epsilon_dominates() {
        let regions = overlap_regions(qm_curve, hvt_curve, (0.0, PI), 1e-3, 0.5).unwrap();
        assert_eq!(regions.len(), 1);
        assert_eq!((regions[0].lo, regions[0].hi), (0.0, PI));
    }

    #[test]
    fn overlap_degenerates_at_tiny_epsilon() {
        let regions = overlap_regions(qm_curve, hvt_curve, (0.0, PI), 1e-3, 1e-12).unwrap();
        assert_eq!(regions.len(), 3);
        for (r, root) in regions.iter().zip([0.0, FRAC_PI_2, PI]) {
            assert!(r.width() < 1e-3, "{r:?}");
            assert!((r.lo - root).abs() < 1e-6);
        }
        assert!(overlap_regions(qm_curve, hvt_curve, (0.0, PI), 1e-3, 0.0).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn vicinity_width_is_inverse_delta_j(dj in 0.01f64..1000.0, t0 in -3.0f64..3.0) {
                let p = ConvergencePoint::at(t0, &qm_curve, &hvt_curve);
                let r = hup_vicinity(&p, VicinityParams::new(dj).unwrap(), qm_curve, hvt_curve);
                prop_assert!((r.width() - 1.0 / dj).abs() <= 1e-12 * (1.0 + 1.0 / dj));
                let wider = hup_vicinity(&p, VicinityParams::new(dj * 1.5).unwrap(), qm_curve, hvt_curve);
                prop_assert!(wider.width() < r.width());
            }

            #[test]
            fn overlap_regions_cover_points(eps in 1e-6f64..0.3) {
                let regions = overlap_regions(qm_curve, hvt_curve, (0.0, PI), 0.01, eps).unwrap();
                let pts = find_convergence_points(qm_curve, hvt_curve, (0.0, PI), 0.01, eps).unwrap();
                for p in pts {
                    prop_assert!(regions.iter().any(|r| r.contains(p.theta0)));
                }
                for w in regions.windows(2) {
                    prop_assert!(w[0].hi < w[1].lo);
                }
            }
        }
    }
}
