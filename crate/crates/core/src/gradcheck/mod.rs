//! Central finite-difference verification of hand-derived gradients.

mod suite;

pub use suite::{run_suite, SuiteEntry, SuiteOptions};

/// Outcome of one finite-difference comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    /// Largest `|a − f| / max(|a|, |f|, 1e-8)` over the checked coordinates.
    pub max_rel_error: f64,
    pub worst_index: Option<usize>,
    pub checked: usize,
    /// Some loss evaluation or analytic entry was NaN/Inf.
    pub non_finite: bool,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        !self.non_finite && self.max_rel_error < self.tolerance
    }
}

#[derive(Clone, Copy, Debug)]
pub struct FdOptions {
    pub step: f64,
    pub tolerance: f64,
}

impl Default for FdOptions {
    fn default() -> Self {
        Self { step: 1e-5, tolerance: 1e-4 }
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares `analytic` (∂loss/∂point) against central differences of `loss`
/// at `point`. With `coords = None` every coordinate is checked.
pub fn finite_difference_check(
    mut loss: impl FnMut(&[f64]) -> f64,
    point: &[f64],
    analytic: &[f64],
    opts: FdOptions,
    coords: Option<&[usize]>,
) -> GradCheckReport {
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_index: None,
        checked: 0,
        non_finite: analytic.len() != point.len(),
        tolerance: opts.tolerance,
    };
    if report.non_finite {
        report.max_rel_error = f64::INFINITY;
        return report;
    }
    let all: Vec<usize>;
    let coords = match coords {
        Some(c) => c,
        None => {
            all = (0..point.len()).collect();
            &all
        }
    };
    let mut x = point.to_vec();
    for &i in coords {
        let orig = x[i];
        x[i] = orig + opts.step;
        let plus = loss(&x);
        x[i] = orig - opts.step;
        let minus = loss(&x);
        x[i] = orig;
        let numeric = (plus - minus) / (2.0 * opts.step);
        report.checked += 1;
        if !numeric.is_finite() || !analytic[i].is_finite() {
            report.non_finite = true;
            report.max_rel_error = f64::INFINITY;
            report.worst_index = Some(i);
            continue;
        }
        let err = relative_error(analytic[i], numeric);
        if err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst_index = Some(i);
        }
    }
    report
}
