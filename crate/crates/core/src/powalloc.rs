//! Optimum power allocation by exhaustive search over the power simplex, and
//! quadratic fits of the optimum fractions against total power in dB.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocols::{PowerAllocation, Protocol};
use crate::snr::snr_closed_form;

/// Allowance for floating-point error when counting grid steps.
const STEP_TOL: f64 = 1e-9;

/// Search granularity as fractions of the total power: `delta` for `p1`,
/// `epsilon` for `p2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub delta: f64,
    pub epsilon: f64,
}

impl GridSpec {
    pub const FINE: GridSpec = GridSpec {
        delta: 0.001,
        epsilon: 0.001,
    };
    pub const COARSE: GridSpec = GridSpec {
        delta: 0.01,
        epsilon: 0.01,
    };

    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        for (name, v) in [("delta", delta), ("epsilon", epsilon)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "grid {name} must lie in (0, 1], got {v}"
                )));
            }
        }
        Ok(Self { delta, epsilon })
    }

    pub fn uniform(step: f64) -> Result<Self> {
        Self::new(step, step)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self::FINE
    }
}

/// Best grid point: `p1 = n delta P`, `p2 = m epsilon P`, `p3 = P - p1 - p2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridOptimum {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub snr: f64,
    pub n: usize,
    pub m: usize,
}

impl GridOptimum {
    pub fn total(&self) -> f64 {
        self.p1 + self.p2 + self.p3
    }

    pub fn fractions(&self) -> [f64; 3] {
        let total = self.total();
        [self.p1 / total, self.p2 / total, self.p3 / total]
    }

    pub fn allocation(&self, sigma2_sq: f64) -> Result<PowerAllocation> {
        PowerAllocation::new(self.p1, self.p2, self.p3, sigma2_sq)
    }
}

fn steps(span: f64, step: f64) -> usize {
    ((span / step) + STEP_TOL).floor().max(0.0) as usize
}

fn grid_point(total: f64, grid: &GridSpec, n: usize, m: usize) -> (f64, f64, f64) {
    let (f1, f2) = (n as f64 * grid.delta, m as f64 * grid.epsilon);
    // a remainder below one rounding error is an exhausted budget, not power
    let f3 = 1.0 - f1 - f2;
    let f3 = if f3 < STEP_TOL { 0.0 } else { f3 };
    (f1 * total, f2 * total, f3 * total)
}

/// Maximizes the closed-form SNR over the simplex grid.
///
/// Ties go to the first point in (n, m) lexicographic order. `relays` only
/// affects RMCKC.
pub fn grid_search(
    protocol: Protocol,
    total: f64,
    sigma2_sq: f64,
    relays: usize,
    grid: &GridSpec,
) -> Result<GridOptimum> {
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "total power must be positive, got {total}"
        )));
    }
    if !(0.0..=1.0).contains(&sigma2_sq) {
        return Err(Error::InvalidParameter(format!(
            "weak-link variance must lie in [0, 1], got {sigma2_sq}"
        )));
    }
    GridSpec::new(grid.delta, grid.epsilon)?;

    let rows = steps(1.0, grid.delta);
    let row_best: Vec<GridOptimum> = (0..=rows)
        .into_par_iter()
        .map(|n| {
            let cols = steps(1.0 - n as f64 * grid.delta, grid.epsilon);
            let mut best: Option<GridOptimum> = None;
            for m in 0..=cols {
                let (p1, p2, p3) = grid_point(total, grid, n, m);
                let snr = PowerAllocation::new(p1, p2, p3, sigma2_sq)
                    .map(|a| snr_closed_form(protocol, &a, relays))
                    .unwrap_or(0.0);
                let snr = if snr.is_nan() { f64::NEG_INFINITY } else { snr };
                if best.is_none_or(|b| snr > b.snr) {
                    best = Some(GridOptimum {
                        p1,
                        p2,
                        p3,
                        snr,
                        n,
                        m,
                    });
                }
            }
            best.expect("every row holds at least m = 0")
        })
        .collect();

    let mut best = row_best[0];
    for cand in &row_best[1..] {
        if cand.snr > best.snr {
            best = *cand;
        }
    }
    Ok(best)
}

/// `a + b x + c x^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl FitCoefficients {
    pub fn eval(&self, x: f64) -> f64 {
        self.a + self.b * x + self.c * x * x
    }
}

/// Least-squares quadratic through `(x, y)` points.
pub fn fit_quadratic(points: &[(f64, f64)]) -> Result<FitCoefficients> {
    if points.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::InvalidParameter("fit points must be finite".into()));
    }
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::DegenerateFit);
    }
    let design = DMatrix::from_fn(points.len(), 3, |r, c| points[r].0.powi(c as i32));
    let rhs = DVector::from_iterator(points.len(), points.iter().map(|p| p.1));
    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let (max, min) = (sv.max(), sv.min());
    if !(min > max * 1e-12) {
        return Err(Error::DegenerateFit);
    }
    let coef = svd.solve(&rhs, 0.0).map_err(|_| Error::DegenerateFit)?;
    let fit = FitCoefficients {
        a: coef[0],
        b: coef[1],
        c: coef[2],
    };
    if ![fit.a, fit.b, fit.c].iter().all(|v| v.is_finite()) {
        return Err(Error::DegenerateFit);
    }
    Ok(fit)
}

/// One line of an allocation table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AllocationRow {
    #[serde(rename = "P_dB")]
    pub p_db: f64,
    pub p1_frac: f64,
    pub p2_frac: f64,
    pub p3_frac: f64,
    pub snr: f64,
}

/// `10^(dB / 10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Grid-searched optimum at each total power in `p_db`.
pub fn allocation_table(
    protocol: Protocol,
    sigma2_sq: f64,
    relays: usize,
    p_db: &[f64],
    grid: &GridSpec,
) -> Result<Vec<AllocationRow>> {
    p_db.iter()
        .map(|&db| {
            let opt = grid_search(protocol, db_to_linear(db), sigma2_sq, relays, grid)?;
            let [p1_frac, p2_frac, p3_frac] = opt.fractions();
            Ok(AllocationRow {
                p_db: db,
                p1_frac,
                p2_frac,
                p3_frac,
                snr: opt.snr,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::snr::printed;

    #[test]
    fn ejhs_optimum_is_equal_split() {
        let total = 2.0;
        let opt = grid_search(Protocol::Ejhs, total, 0.1, 5, &GridSpec::FINE).unwrap();
        for f in opt.fractions() {
            assert!((f - 1.0 / 3.0).abs() <= 0.001 + 1e-12, "{:?}", opt);
        }
        // 1/3 is not a grid point; the best neighbour loses a few parts in 1e6
        let max = printed::ejhs_max(total);
        assert!(opt.snr <= max);
        assert!(max - opt.snr <= 1e-5 * max);
    }

    #[test]
    fn unit_grid_picks_best_vertex() {
        let grid = GridSpec::uniform(1.0).unwrap();
        for p in Protocol::ALL {
            let opt = grid_search(p, 10.0, 0.3, 5, &grid).unwrap();
            let vertices = [(10.0, 0.0, 0.0), (0.0, 10.0, 0.0), (0.0, 0.0, 10.0)];
            assert!(vertices.contains(&(opt.p1, opt.p2, opt.p3)));
            for (a, b, c) in vertices {
                let v = snr_closed_form(p, &PowerAllocation::new(a, b, c, 0.3).unwrap(), 5);
                assert!(opt.snr >= v);
            }
        }
    }

    #[test]
    fn optimum_is_a_grid_point_and_reevaluates() {
        let grid = GridSpec::COARSE;
        for p in Protocol::ALL {
            let opt = grid_search(p, 50.0, 0.15, 5, &grid).unwrap();
            assert!((opt.total() - 50.0).abs() <= 1e-9 * 50.0);
            let (p1, p2, p3) = grid_point(50.0, &grid, opt.n, opt.m);
            assert_eq!((p1, p2, p3), (opt.p1, opt.p2, opt.p3));
            let again = snr_closed_form(p, &opt.allocation(0.15).unwrap(), 5);
            assert_eq!(again, opt.snr);
        }
    }

    #[test]
    fn refining_never_hurts() {
        let coarse = GridSpec::uniform(0.02).unwrap();
        let fine = GridSpec::uniform(0.01).unwrap();
        for p in Protocol::ALL {
            for total in [3.0, 40.0, 250.0] {
                let a = grid_search(p, total, 0.1, 5, &coarse).unwrap();
                let b = grid_search(p, total, 0.1, 5, &fine).unwrap();
                assert!(b.snr >= a.snr, "{p} {total}");
            }
        }
    }

    #[test]
    fn exhausted_budget_leaves_exact_zero() {
        for (n, m) in [(7, 993), (410, 590), (1000, 0)] {
            assert_eq!(grid_point(4.2, &GridSpec::FINE, n, m).2, 0.0);
        }
    }

    #[test]
    fn rejects_non_positive_power() {
        assert!(grid_search(Protocol::Rmc, 0.0, 0.1, 5, &GridSpec::COARSE).is_err());
        assert!(GridSpec::new(0.0, 0.1).is_err());
        assert!(GridSpec::new(0.1, 1.5).is_err());
    }

    #[test]
    fn quadratic_recovery() {
        let truth = FitCoefficients {
            a: 0.39,
            b: -0.002,
            c: 4.7e-6,
        };
        let pts: Vec<(f64, f64)> = (0..=12)
            .map(|k| (2.0 * k as f64, truth.eval(2.0 * k as f64)))
            .collect();
        let fit = fit_quadratic(&pts).unwrap();
        assert!((fit.a - truth.a).abs() < 1e-9);
        assert!((fit.b - truth.b).abs() < 1e-9);
        assert!((fit.c - truth.c).abs() < 1e-9);

        let flat = fit_quadratic(&[(0.0, 0.5), (1.0, 0.5), (2.0, 0.5), (5.0, 0.5)]).unwrap();
        assert!((flat.a - 0.5).abs() < 1e-12 && flat.b.abs() < 1e-12 && flat.c.abs() < 1e-12);
    }

    #[test]
    fn degenerate_fits() {
        assert!(matches!(
            fit_quadratic(&[(1.0, 0.1), (1.0, 0.2), (2.0, 0.3)]),
            Err(Error::DegenerateFit)
        ));
        assert!(matches!(
            fit_quadratic(&[(1.0, 0.1)]),
            Err(Error::DegenerateFit)
        ));
    }

    #[test]
    fn table_reports_fractions() {
        let rows =
            allocation_table(Protocol::Ejhs, 0.1, 5, &[0.0, 10.0], &GridSpec::COARSE).unwrap();
        assert_eq!(rows.len(), 2);
        for r in rows {
            assert!((r.p1_frac + r.p2_frac + r.p3_frac - 1.0).abs() < 1e-12);
        }
    }
}
