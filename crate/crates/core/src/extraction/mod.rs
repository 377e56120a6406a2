//! Fowler-Nordheim parameter extraction in voltage space.
//!
//! The aggregate law is `I = C·V²·exp(−B/V)`, linear on the F-N plot
//! `ln(I/V²)` against `1/V` with slope `−B`. From one curve only `C` and `B`
//! are identifiable; converting to `β` or `φ` needs the other one pinned.

mod refine;

pub use refine::{nonlinear_refine, residual_jacobian, RefineOptions, ResidualSpace};

use serde::Serialize;

use crate::device::{DeviceGeometry, IVCurve};
use crate::error::{Error, Result};
use crate::numeric::pairwise_sum_by;
use crate::physics::{fn_coefficients, Material};

/// Default current floor below which samples are treated as instrument
/// noise, A.
pub const DEFAULT_CURRENT_FLOOR: f64 = 1e-12;

/// A point on the F-N plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FNPlotPoint {
    /// 1/V, V⁻¹.
    pub x: f64,
    /// ln(I/V²) with I in A and V in V.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FnTransform {
    pub points: Vec<FNPlotPoint>,
    /// Samples rejected for `V <= 0`, `I <= 0` or `I` below the floor.
    pub dropped: usize,
}

/// Maps usable samples to F-N coordinates.
pub fn fn_transform(curve: &IVCurve, current_floor: f64) -> Result<FnTransform> {
    let mut dropped = 0;
    let points: Vec<FNPlotPoint> = curve
        .samples()
        .iter()
        .filter_map(|s| {
            if s.voltage > 0.0 && s.current > 0.0 && s.current >= current_floor {
                Some(FNPlotPoint {
                    x: 1.0 / s.voltage,
                    y: (s.current / (s.voltage * s.voltage)).ln(),
                })
            } else {
                dropped += 1;
                None
            }
        })
        .collect();
    if points.len() < 2 {
        return Err(Error::InsufficientData {
            usable: points.len(),
            dropped,
            required: 2,
        });
    }
    Ok(FnTransform { points, dropped })
}

/// Parameters of `I = C·V²·exp(−B/V)` with fit-quality statistics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    /// A/V².
    pub prefactor_c: f64,
    /// V.
    pub slope_b: f64,
    /// Covariance of `(C, B)`. `None` when there are no residual degrees
    /// of freedom.
    pub covariance: Option<[[f64; 2]; 2]>,
    pub r_squared: f64,
    /// Euclidean norm of the residual vector in the fit's residual space.
    pub residual_norm: f64,
    pub n_points: usize,
    pub iterations: usize,
    pub residual_space: ResidualSpace,
    /// m⁻¹, when a work function was pinned.
    pub extracted_beta: Option<f64>,
    /// eV, when β was pinned.
    pub extracted_phi: Option<f64>,
    /// Residual norm after each accepted iterate, starting with the
    /// initial guess.
    #[serde(skip)]
    pub residual_history: Vec<f64>,
}

impl FitResult {
    /// Model current at `voltage`.
    pub fn current_at(&self, voltage: f64) -> f64 {
        model_current(self.prefactor_c, self.slope_b, voltage)
    }
}

pub(crate) fn model_current(c: f64, b: f64, voltage: f64) -> f64 {
    if voltage <= 0.0 {
        return 0.0;
    }
    c * voltage * voltage * (-b / voltage).exp()
}

/// Ordinary least squares of `y = ln C − B·x`.
///
/// Points are sorted before summation, so the result does not depend on
/// input order. The covariance of `(ln C, −B)` from the OLS formulas is
/// mapped to `(C, B)` to first order.
pub fn fn_linear_fit(points: &[FNPlotPoint]) -> Result<FitResult> {
    let n = points.len();
    if n < 2 {
        return Err(Error::InsufficientData {
            usable: n,
            dropped: 0,
            required: 2,
        });
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::invalid("F-N points must be finite"));
    }
    if points.iter().all(|p| p.x == points[0].x) {
        return Err(Error::SingularFit("all 1/V values are identical".into()));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));

    let nf = n as f64;
    let x_mean = pairwise_sum_by(&pts, |p| p.x) / nf;
    let y_mean = pairwise_sum_by(&pts, |p| p.y) / nf;
    let sxx = pairwise_sum_by(&pts, |p| (p.x - x_mean).powi(2));
    let sxy = pairwise_sum_by(&pts, |p| (p.x - x_mean) * (p.y - y_mean));
    let syy = pairwise_sum_by(&pts, |p| (p.y - y_mean).powi(2));
    if !(sxx > 0.0) {
        return Err(Error::SingularFit("no spread in 1/V".into()));
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ssr = pairwise_sum_by(&pts, |p| (p.y - intercept - slope * p.x).powi(2));

    let prefactor_c = intercept.exp();
    let covariance = (n > 2).then(|| {
        let s2 = ssr / (nf - 2.0);
        let var_slope = s2 / sxx;
        let var_icpt = s2 * (1.0 / nf + x_mean * x_mean / sxx);
        let cov_icpt_slope = -x_mean * s2 / sxx;
        let cov_cb = -prefactor_c * cov_icpt_slope;
        [
            [prefactor_c * prefactor_c * var_icpt, cov_cb],
            [cov_cb, var_slope],
        ]
    });
    Ok(FitResult {
        prefactor_c,
        slope_b: -slope,
        covariance,
        r_squared: r_squared(ssr, syy),
        residual_norm: ssr.sqrt(),
        n_points: n,
        iterations: 0,
        residual_space: ResidualSpace::Log,
        extracted_beta: None,
        extracted_phi: None,
        residual_history: vec![ssr.sqrt()],
    })
}

pub(crate) fn r_squared(ssr: f64, sst: f64) -> f64 {
    if sst > 0.0 {
        (1.0 - ssr / sst).clamp(0.0, 1.0)
    } else if ssr == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Closed-form `(C, B)` through two `(V, I)` points.
pub fn two_point_solve(p1: (f64, f64), p2: (f64, f64)) -> Result<(f64, f64)> {
    let (v1, i1) = p1;
    let (v2, i2) = p2;
    for v in [v1, v2] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::invalid(format!("voltage must be > 0, got {v}")));
        }
    }
    for i in [i1, i2] {
        if !(i.is_finite() && i > 0.0) {
            return Err(Error::invalid(format!("current must be > 0, got {i}")));
        }
    }
    if v1 == v2 {
        return Err(Error::DegenerateInput(format!("both points at {v1} V")));
    }
    let y1 = (i1 / (v1 * v1)).ln();
    let y2 = (i2 / (v2 * v2)).ln();
    let b = (y1 - y2) / (1.0 / v2 - 1.0 / v1);
    let c = (y1 + b / v1).exp();
    Ok((c, b))
}

/// `β = b_fn(φ) / B`, in m⁻¹.
pub fn extract_beta(fit: &FitResult, material: &Material) -> Result<f64> {
    if !(fit.slope_b > 0.0) {
        return Err(Error::UnphysicalFit { slope: fit.slope_b });
    }
    Ok(fn_coefficients(material)?.b_fn / fit.slope_b)
}

/// `φ = (B·β / K2)^{2/3}`, in eV.
pub fn extract_work_function(fit: &FitResult, geometry: &DeviceGeometry) -> Result<f64> {
    if !(fit.slope_b > 0.0) {
        return Err(Error::UnphysicalFit { slope: fit.slope_b });
    }
    let k2 = crate::constants::CODATA_2018.fn_k2();
    Ok((fit.slope_b * geometry.field_conversion_beta / k2).powf(2.0 / 3.0))
}

/// Turn-on voltage read off measured data: the first crossing of
/// `threshold`, interpolated linearly in `ln I` between the bracketing
/// samples (linearly in `I` when the lower sample is zero).
pub fn turn_on_from_data(curve: &IVCurve, threshold: f64) -> Result<f64> {
    if !(threshold.is_finite() && threshold > 0.0) {
        return Err(Error::invalid(format!("threshold current must be > 0, got {threshold}")));
    }
    let samples = curve.samples();
    let Some(idx) = samples.iter().position(|s| s.current >= threshold) else {
        let last = samples.last().copied().unwrap_or(crate::device::Sample {
            voltage: 0.0,
            current: 0.0,
        });
        return Err(Error::NeverTurnsOn {
            threshold,
            v_upper: last.voltage,
            current_at_upper: last.current,
        });
    };
    if idx == 0 {
        return Ok(samples[0].voltage);
    }
    let (lo, hi) = (samples[idx - 1], samples[idx]);
    let t = if lo.current > 0.0 {
        (threshold.ln() - lo.current.ln()) / (hi.current.ln() - lo.current.ln())
    } else {
        threshold / hi.current
    };
    Ok(lo.voltage + t.clamp(0.0, 1.0) * (hi.voltage - lo.voltage))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_turn_on() {
        let c = IVCurve::from_pairs(&[(10.0, 0.0), (20.0, 1e-10), (30.0, 1e-8), (40.0, 1e-7)]).unwrap();
        assert!((turn_on_from_data(&c, 1e-9).unwrap() - 25.0).abs() < 1e-12);
        assert_eq!(turn_on_from_data(&c, 1e-10).unwrap(), 20.0);
        assert!((turn_on_from_data(&c, 5e-11).unwrap() - 15.0).abs() < 1e-12);
        assert!(matches!(turn_on_from_data(&c, 1e-6), Err(Error::NeverTurnsOn { .. })));
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    fn points_from(c: f64, b: f64, volts: &[f64]) -> Vec<FNPlotPoint> {
        volts
            .iter()
            .map(|&v| FNPlotPoint {
                x: 1.0 / v,
                y: c.ln() - b / v,
            })
            .collect()
    }

    #[test]
    fn transform_anchor_point() {
        let curve = IVCurve::from_pairs(&[(0.0, 0.0), (50.0, 0.0), (100.0, 3e-7), (120.0, 5e-7)]).unwrap();
        let t = fn_transform(&curve, DEFAULT_CURRENT_FLOOR).unwrap();
        assert_eq!(t.dropped, 2);
        assert_eq!(t.points[0].x, 0.01);
        assert!((t.points[0].y - (-24.229_823_734_266_39)).abs() < 1e-12);
    }

    #[test]
    fn transform_needs_two_points() {
        let curve = IVCurve::from_pairs(&[(10.0, 1e-9)]).unwrap();
        assert!(matches!(
            fn_transform(&curve, 0.0),
            Err(Error::InsufficientData { usable: 1, .. })
        ));
    }

    #[test]
    fn transform_applies_floor() {
        let curve = IVCurve::from_pairs(&[(10.0, 1e-13), (20.0, 1e-9), (30.0, 1e-8)]).unwrap();
        let t = fn_transform(&curve, 1e-12).unwrap();
        assert_eq!((t.points.len(), t.dropped), (2, 1));
    }

    #[test]
    fn linear_fit_exact_recovery() {
        let pts = points_from(1e-10, 100.0, &[20.0, 40.0, 60.0, 80.0, 100.0]);
        let f = fn_linear_fit(&pts).unwrap();
        assert!(rel(f.prefactor_c, 1e-10) < 1e-9);
        assert!(rel(f.slope_b, 100.0) < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-10);
        assert!(f.covariance.is_some());
    }

    #[test]
    fn linear_fit_two_points() {
        let pts = points_from(2e-9, 300.0, &[50.0, 150.0]);
        let f = fn_linear_fit(&pts).unwrap();
        assert_eq!(f.r_squared, 1.0);
        assert!(f.covariance.is_none());
        assert!(rel(f.slope_b, 300.0) < 1e-12);
    }

    #[test]
    fn linear_fit_singular() {
        let pts = vec![FNPlotPoint { x: 0.1, y: -20.0 }, FNPlotPoint { x: 0.1, y: -21.0 }];
        assert!(matches!(fn_linear_fit(&pts), Err(Error::SingularFit(_))));
    }

    #[test]
    fn two_point_fixtures() {
        // Closed-form solve at 40 digits: B = 97.70645841388066 V,
        // C = 7.969939268869583e-11 A/V².
        let (c, b) = two_point_solve((25.0, 1e-9), (100.0, 3e-7)).unwrap();
        assert!(rel(b, 97.706_458_413_880_66) < 1e-12);
        assert!(rel(c, 7.969_939_268_869_583e-11) < 1e-10);
        let (_, b_after) = two_point_solve((70.0, 1e-9), (100.0, 1.5e-7)).unwrap();
        assert!(rel(b_after, 1_002.699_928_117_717_9) < 1e-12);
        assert!(b_after > b);
    }

    #[test]
    fn two_point_exact_inverse() {
        let (c0, b0) = (3.3e-9, 420.0);
        let i = |v: f64| model_current(c0, b0, v);
        let (c, b) = two_point_solve((80.0, i(80.0)), (300.0, i(300.0))).unwrap();
        assert!(rel(c, c0) < 1e-12 && rel(b, b0) < 1e-12);
    }

    #[test]
    fn two_point_errors() {
        assert!(matches!(
            two_point_solve((50.0, 1e-9), (50.0, 2e-9)),
            Err(Error::DegenerateInput(_))
        ));
        assert!(matches!(
            two_point_solve((50.0, 0.0), (60.0, 2e-9)),
            Err(Error::InvalidInput(_))
        ));
    }

    fn fit_with_slope(b: f64) -> FitResult {
        let mut f = fn_linear_fit(&points_from(1e-10, 100.0, &[20.0, 40.0, 80.0])).unwrap();
        f.slope_b = b;
        f
    }

    #[test]
    fn beta_extraction() {
        let al = Material::aluminum();
        let b_fn = fn_coefficients(&al).unwrap().b_fn;
        assert!(rel(extract_beta(&fit_with_slope(b_fn), &al).unwrap(), 1.0) < 1e-15);
        let beta = extract_beta(&fit_with_slope(97.7), &al).unwrap();
        assert!((1e8..1e9).contains(&beta));
        // b_fn(4.28 eV) = 6.048433663045668e10 V/m at 40 digits.
        assert!(rel(beta, 6.048_433_663_045_668e10 / 97.7) < 1e-12);
        let half = extract_beta(&fit_with_slope(97.7 / 2.0), &al).unwrap();
        assert!(rel(half, 2.0 * beta) < 1e-15);
        assert!(matches!(
            extract_beta(&fit_with_slope(-1.0), &al),
            Err(Error::UnphysicalFit { .. })
        ));
    }

    #[test]
    fn work_function_extraction() {
        let k2 = crate::constants::CODATA_2018.fn_k2();
        let g = DeviceGeometry {
            field_conversion_beta: k2 / 50.0,
            ..DeviceGeometry::default()
        };
        assert!(rel(extract_work_function(&fit_with_slope(50.0), &g).unwrap(), 1.0) < 1e-12);

        let al = Material::aluminum();
        let fit = fit_with_slope(97.7);
        let beta = extract_beta(&fit, &al).unwrap();
        let g = DeviceGeometry {
            field_conversion_beta: beta,
            ..DeviceGeometry::default()
        };
        assert!(rel(extract_work_function(&fit, &g).unwrap(), 4.28) < 1e-10);
        assert!(extract_work_function(&fit_with_slope(0.0), &g).is_err());
    }

    #[test]
    fn conditioning_barrier_ratio() {
        let (_, before) = two_point_solve((25.0, 1e-9), (100.0, 3e-7)).unwrap();
        let (_, after) = two_point_solve((70.0, 1e-9), (100.0, 1.5e-7)).unwrap();
        let g = DeviceGeometry::default();
        let phi_b = extract_work_function(&fit_with_slope(before), &g).unwrap();
        let phi_a = extract_work_function(&fit_with_slope(after), &g).unwrap();
        // (1002.6999/97.706458)^(2/3) = 4.7224257844 at 40 digits.
        assert!(rel(phi_a / phi_b, 4.722_425_784_429_203) < 1e-10);
    }
}
