//! The murmuration profile `f(x)`: exact prime sums, closed-form main
//! terms, and the location of the first two local maxima.
//!
//! For a conductor scale `n`, the profile is
//!
//! ```text
//! f(x) = (1/log(x n)) * sum_{p < x n} M(p/n) * log(p) / p
//! ```
//!
//! with `M` the smoothed main term from [`crate::density`]. Replacing the
//! prime sums by their Chebyshev asymptotics gives a closed-form main
//! term with one branch on each side of `x = 1/4` (where the `r`-sum in
//! `M` switches on):
//!
//! ```text
//! x <= 1/4:  (2 C1 sqrt(x) - C3 x - C1 sqrt(2)/sqrt(n)) / log(x n)
//! x >= 1/4:  add 2 C2 (sqrt(4x-1) - arctan(sqrt(4x-1))) to the numerator
//! ```
//!
//! The two branches agree at `x = 1/4` to the last bit (the extra terms
//! vanish there exactly). The first local maximum `x1` of the main term
//! lies below `(A/pi)^2` and converges to it as `n` grows; the second,
//! `x2`, lies below `(A^2 + 4B^2 + sqrt((A^2+4B^2)^2 - 2 pi^2 B^2))/pi^2`
//! and converges to the root `lambda >= 1/4` of
//!
//! ```text
//! A sqrt((4 lambda - 1) lambda) + 4 B lambda - pi lambda sqrt(4 lambda - 1) = B.
//! ```
//!
//! [`empirical_maxima`] locates the analogous humps in a measured
//! family-difference curve so the two can be compared side by side.

use crate::density::{density_m, MurmurationConstants};
use crate::error::{Error, Result};
use crate::nagao::FamilyCurve;
use crate::primes::PrimeTable;
use crate::sum::NeumaierSum;

/// Sample count of the coarse scan that brackets each maximum before the
/// golden-section refinement. The features are `O(0.1)` wide, so a few
/// thousand points over a unit interval over-resolves them comfortably.
const SCAN_POINTS: usize = 4096;

/// Iteration caps for golden-section search and bisection; both converge
/// geometrically, so these are only a guard against degenerate
/// tolerances far below `f64` resolution.
const MAX_REFINE_ITERS: usize = 200;

/// Closed-form main-term model of the profile at one conductor scale.
#[derive(Clone, Debug)]
pub struct MainTermModel {
    n: f64,
    consts: MurmurationConstants,
}

/// Scale-independent limits of the maxima locations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitConstants {
    /// `(A/pi)^2`: upper bound for the first maximum at every scale and
    /// its limit as the scale grows.
    pub first_max: f64,
    /// `lambda`: the limit of the second maximum's location.
    pub second_max: f64,
    /// Upper bound for the second maximum at every scale.
    pub second_max_bound: f64,
}

/// Locations and values of the first two main-term maxima at one scale,
/// together with their scale-independent limits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaximaReport {
    /// Conductor scale the model was evaluated at.
    pub n: f64,
    /// Location of the maximum on the branch below 1/4.
    pub x1: f64,
    /// Main-term value at `x1`.
    pub value1: f64,
    /// Location of the maximum on the branch above 1/4.
    pub x2: f64,
    /// Main-term value at `x2`.
    pub value2: f64,
    pub limits: LimitConstants,
    /// Requested location tolerance of the searches.
    pub tol: f64,
}

impl MainTermModel {
    /// A model needs a scale of at least 100 for `log(x n)` to be sane
    /// across the working range.
    pub fn new(n: f64, consts: MurmurationConstants) -> Result<Self> {
        if !n.is_finite() || n < 100.0 {
            return Err(Error::InvalidArgument(format!(
                "conductor scale must be a finite number >= 100, got {n}"
            )));
        }
        Ok(Self { n, consts })
    }

    pub fn scale(&self) -> f64 {
        self.n
    }

    pub fn constants(&self) -> &MurmurationConstants {
        &self.consts
    }

    /// Numerator shared by both branches.
    fn base_numerator(&self, x: f64) -> f64 {
        2.0 * self.consts.c1 * x.sqrt()
            - self.consts.c3 * x
            - self.consts.c1 * std::f64::consts::SQRT_2 / self.n.sqrt()
    }

    fn below_raw(&self, x: f64) -> f64 {
        self.base_numerator(x) / (x * self.n).ln()
    }

    fn above_raw(&self, x: f64) -> f64 {
        let s = (4.0 * x - 1.0).sqrt();
        (self.base_numerator(x) + 2.0 * self.consts.c2 * (s - s.atan())) / (x * self.n).ln()
    }

    /// Main-term branch valid for `0 < x <= 1/4` (and `x n > 1`, so the
    /// logarithm is positive).
    pub fn main_term_below(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || x <= 0.0 || x > 0.25 || x * self.n <= 1.0 {
            return Err(Error::OutOfRange(format!(
                "the lower main-term branch needs 1/n < x <= 1/4, got {x}"
            )));
        }
        Ok(self.below_raw(x))
    }

    /// Main-term branch valid for `1/4 <= x < 1`.
    pub fn main_term_above(&self, x: f64) -> Result<f64> {
        if !x.is_finite() || !(0.25..1.0).contains(&x) {
            return Err(Error::OutOfRange(format!(
                "the upper main-term branch needs 1/4 <= x < 1, got {x}"
            )));
        }
        Ok(self.above_raw(x))
    }

    /// The closed-form main term on `(1/n, 1)`, dispatching on the branch
    /// point `x = 1/4` (both branches give the same value there).
    pub fn main_term(&self, x: f64) -> Result<f64> {
        if x <= 0.25 {
            self.main_term_below(x)
        } else {
            self.main_term_above(x)
        }
    }

    /// The exact profile: the prime sum of `M(p/n) log(p)/p` over
    /// `p < x n`, normalized by `log(x n)`. Needs `3 <= x n` so the sum
    /// is non-empty, and `x n` within the sieve.
    pub fn f_exact(&self, x: f64, table: &PrimeTable) -> Result<f64> {
        let xn = x * self.n;
        if !xn.is_finite() || xn < 3.0 {
            return Err(Error::OutOfRange(format!(
                "the profile sum needs x*n >= 3, got x*n = {xn}"
            )));
        }
        if xn > table.limit() as f64 {
            return Err(Error::OutOfRange(format!(
                "x*n = {xn} exceeds the sieve limit {}",
                table.limit()
            )));
        }
        let mut sum = NeumaierSum::new();
        for &p in table.primes() {
            let pf = p as f64;
            if pf >= xn {
                break;
            }
            sum.add(density_m(pf / self.n, &self.consts)? * pf.ln() / pf);
        }
        Ok(sum.value() / xn.ln())
    }

    /// Locate the first two local maxima of the main term to within
    /// `tol`: a coarse scan brackets each hump, golden-section search
    /// refines it.
    ///
    /// Needs a scale of at least 1000: below that the `1/log(x n)` spike
    /// at `x = 1/n` is not yet separated from the first hump, and the
    /// main term has no stable interior maximum.
    pub fn local_maxima(&self, tol: f64) -> Result<MaximaReport> {
        if self.n < 1000.0 {
            return Err(Error::InvalidArgument(format!(
                "main-term maxima need a conductor scale >= 1000, got {}",
                self.n
            )));
        }
        check_tol(tol)?;
        // Left edge 0.01 keeps well clear of the logarithm's zero at
        // x = 1/n while staying far below the first hump.
        let x1 = refine_max(|x| self.below_raw(x), 0.01, 0.25, tol);
        let x2 = refine_max(|x| self.above_raw(x), 0.25, 1.0 - 1e-9, tol);
        Ok(MaximaReport {
            n: self.n,
            x1,
            value1: self.below_raw(x1),
            x2,
            value2: self.above_raw(x2),
            limits: limit_constants(&self.consts, tol)?,
            tol,
        })
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if !tol.is_finite() || tol <= 0.0 || tol > 0.01 {
        return Err(Error::InvalidArgument(format!(
            "tolerance must lie in (0, 0.01], got {tol}"
        )));
    }
    Ok(())
}

/// Coarse scan for the argmax, then golden-section refinement of the
/// two-sample bracket around it.
fn refine_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> f64 {
    let step = (hi - lo) / (SCAN_POINTS as f64 - 1.0);
    let mut best_i = 0usize;
    let mut best_v = f(lo);
    for i in 1..SCAN_POINTS {
        let v = f(lo + i as f64 * step);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let a = lo + best_i.saturating_sub(1) as f64 * step;
    let b = lo + best_i.min(SCAN_POINTS - 2).saturating_add(1) as f64 * step;
    golden_max(f, a, b, tol)
}

/// Golden-section search for the maximum of a unimodal function.
fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> f64 {
    const INVPHI: f64 = 0.618_033_988_749_894_9; // 1/phi
    const INVPHI2: f64 = 0.381_966_011_250_105_1; // 1/phi^2
    let mut h = b - a;
    let mut c = a + INVPHI2 * h;
    let mut d = a + INVPHI * h;
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iters = 0;
    while h > tol && iters < MAX_REFINE_ITERS {
        h *= INVPHI;
        if fc > fd {
            // Maximum is in [a, d]; the old c becomes the new d.
            b = d;
            d = c;
            fd = fc;
            c = a + INVPHI2 * h;
            fc = f(c);
        } else {
            // Maximum is in [c, b]; the old d becomes the new c.
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * h;
            fd = f(d);
        }
        iters += 1;
    }
    0.5 * (a + b)
}

/// Solve `A sqrt((4l-1) l) + 4 B l - pi l sqrt(4l-1) = B` for the root
/// `lambda` in `(1/2, 1)` by bisection. The equation also has a root
/// near 0.26 that is not the limit of the second maximum; the bracket
/// excludes it.
pub fn solve_lambda(consts: &MurmurationConstants, tol: f64) -> Result<f64> {
    check_tol(tol)?;
    let residual = |l: f64| {
        let s = (4.0 * l - 1.0).sqrt();
        consts.a * (l * (4.0 * l - 1.0)).sqrt() + 4.0 * consts.b * l
            - std::f64::consts::PI * l * s
            - consts.b
    };
    let mut a = 0.5;
    let mut b = 1.0 - 1e-9;
    if residual(a) <= 0.0 || residual(b) >= 0.0 {
        return Err(Error::NumericalFailure(
            "the limit equation does not change sign on (1/2, 1)".into(),
        ));
    }
    let mut iters = 0;
    while b - a > tol && iters < MAX_REFINE_ITERS {
        let mid = 0.5 * (a + b);
        if residual(mid) > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        iters += 1;
    }
    let lambda = 0.5 * (a + b);
    let res = residual(lambda).abs();
    // The residual scales like the derivative (order 1) times the
    // bracket width; a factor of 10 absorbs that without masking a
    // tolerance the arithmetic cannot actually deliver.
    if res > 10.0 * tol {
        return Err(Error::NumericalFailure(format!(
            "limit-equation residual {res:.3e} exceeds the requested tolerance {tol:.3e}"
        )));
    }
    Ok(lambda)
}

/// The scale-independent bounds and limits of the maxima locations.
pub fn limit_constants(consts: &MurmurationConstants, tol: f64) -> Result<LimitConstants> {
    let pi = std::f64::consts::PI;
    let q = consts.a * consts.a + 4.0 * consts.b * consts.b;
    let disc = q * q - 2.0 * pi * pi * consts.b * consts.b;
    if disc < 0.0 {
        return Err(Error::NumericalFailure(
            "second-maximum bound has a negative discriminant".into(),
        ));
    }
    Ok(LimitConstants {
        first_max: (consts.a / pi) * (consts.a / pi),
        second_max: solve_lambda(consts, tol)?,
        second_max_bound: (q + disc.sqrt()) / (pi * pi),
    })
}

/// Local maxima of a measured family-difference curve, reported in the
/// rescaled coordinate `x = B / n_ref`.
///
/// The means are smoothed with a centered moving average (`window`
/// points, shrinking symmetrically at the ends), then strict interior
/// maxima with `x` in `[0.01, 2]` are collected. The grid must cover
/// that whole range so both humps, near `0.08` and `0.65`, are interior.
pub fn empirical_maxima(
    diff: &FamilyCurve,
    n_ref: f64,
    window: usize,
) -> Result<Vec<(f64, f64)>> {
    if !n_ref.is_finite() || n_ref < 100.0 {
        return Err(Error::InvalidArgument(format!(
            "reference scale must be a finite number >= 100, got {n_ref}"
        )));
    }
    if window == 0 {
        return Err(Error::InvalidArgument(
            "smoothing window must have at least one point".into(),
        ));
    }
    let grid = diff.grid.values();
    if grid.len() < 5 {
        return Err(Error::InvalidArgument(format!(
            "maxima detection needs at least 5 grid points, got {}",
            grid.len()
        )));
    }
    if grid[0] > 0.01 * n_ref || diff.grid.last() < 2.0 * n_ref {
        return Err(Error::OutOfRange(format!(
            "grid [{}, {}] must cover [0.01, 2] x n_ref = [{}, {}]",
            grid[0],
            diff.grid.last(),
            0.01 * n_ref,
            2.0 * n_ref
        )));
    }

    let m = diff.mean.len();
    let half = window / 2;
    let smoothed: Vec<f64> = (0..m)
        .map(|i| {
            let h = half.min(i).min(m - 1 - i);
            let slice = &diff.mean[i - h..=i + h];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect();

    let mut maxima = Vec::new();
    for i in 1..m - 1 {
        let x = grid[i] / n_ref;
        if (0.01..=2.0).contains(&x)
            && smoothed[i] > smoothed[i - 1]
            && smoothed[i] > smoothed[i + 1]
        {
            maxima.push((x, smoothed[i]));
        }
    }
    Ok(maxima)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::euler_constants;
    use crate::nagao::BGrid;
    use crate::primes::sieve;

    fn consts() -> MurmurationConstants {
        euler_constants(&sieve(1_000_000).unwrap()).unwrap()
    }

    fn model(n: f64) -> MainTermModel {
        MainTermModel::new(n, consts()).unwrap()
    }

    #[test]
    fn branches_agree_exactly_at_one_quarter() {
        let m = model(1e5);
        let below = m.main_term_below(0.25).unwrap();
        let above = m.main_term_above(0.25).unwrap();
        assert_eq!(below, above);
        assert_eq!(m.main_term(0.25).unwrap(), below);
        // Just above the branch point the extra terms grow like the cube
        // of sqrt(4x - 1), so the profile is still flat to high order.
        let nudged = m.main_term(0.25 + 1e-12).unwrap();
        assert!((nudged - below).abs() < 1e-9);
    }

    #[test]
    fn domain_checks_reject_out_of_range_points() {
        let m = model(1e5);
        assert!(m.main_term(0.0).is_err());
        assert!(m.main_term(-0.1).is_err());
        assert!(m.main_term(1.0).is_err());
        assert!(m.main_term_below(0.3).is_err());
        assert!(m.main_term_above(0.2).is_err());
        // x*n <= 1 makes the logarithm vanish or flip sign.
        assert!(m.main_term(1e-6).is_err());
        assert!(MainTermModel::new(50.0, consts()).is_err());
        assert!(MainTermModel::new(f64::NAN, consts()).is_err());
    }

    #[test]
    fn lower_branch_numerator_vanishes_past_its_domain() {
        // The shared numerator has its positive root well above 1/4, so
        // it never vanishes inside the lower branch's domain.
        let m = model(1e5);
        let root = 0.5670639898792165;
        let at = |x: f64| {
            2.0 * m.constants().c1 * x.sqrt()
                - m.constants().c3 * x
                - m.constants().c1 * std::f64::consts::SQRT_2 / 1e5_f64.sqrt()
        };
        assert!(at(root).abs() < 1e-12);
        assert!(at(0.25) > 0.0);
        // On the upper branch the extra positive terms keep the profile
        // positive through that root.
        assert!(m.main_term_above(root).unwrap() > 0.0);
    }

    #[test]
    fn maxima_locations_across_five_decades_of_scale() {
        let expected = [
            (1e4, 0.10023327088899642, 0.6938070250298085),
            (1e5, 0.11076941396539261, 0.7050997932139984),
            (1e6, 0.11723749420637589, 0.712937816158467),
            (1e7, 0.12155794473873324, 0.7185622571842045),
            (1e8, 0.12462928962299266, 0.7227559214004466),
        ];
        let mut prev = (0.0, 0.0);
        for &(n, x1, x2) in &expected {
            let rep = model(n).local_maxima(1e-9).unwrap();
            assert!((rep.x1 - x1).abs() < 1e-6, "x1 at scale {n}: {}", rep.x1);
            assert!((rep.x2 - x2).abs() < 1e-6, "x2 at scale {n}: {}", rep.x2);
            // Both locations grow with the scale and respect the bounds.
            assert!(rep.x1 > prev.0 && rep.x2 > prev.1);
            assert!(rep.x1 < rep.limits.first_max);
            assert!(rep.x2 < rep.limits.second_max);
            assert!(rep.x2 < rep.limits.second_max_bound);
            assert!(rep.value1 > 0.0 && rep.value2 > rep.value1);
            prev = (rep.x1, rep.x2);
        }
    }

    #[test]
    fn maxima_need_a_scale_of_at_least_1000() {
        let m = model(500.0);
        assert!(matches!(
            m.local_maxima(1e-8),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn limit_constants_match_their_closed_forms() {
        let lims = limit_constants(&consts(), 1e-12).unwrap();
        assert!((lims.first_max - 0.14261168278839856).abs() < 1e-12);
        assert!((lims.second_max_bound - 0.7688076970563934).abs() < 1e-12);
        assert!((lims.second_max - 0.7508634404860552).abs() < 1e-10);
    }

    #[test]
    fn lambda_satisfies_the_limit_equation() {
        let c = consts();
        let l = solve_lambda(&c, 1e-12).unwrap();
        let s = (4.0 * l - 1.0).sqrt();
        let lhs = c.a * (l * (4.0 * l - 1.0)).sqrt() + 4.0 * c.b * l
            - std::f64::consts::PI * l * s;
        assert!((lhs - c.b).abs() < 1e-9);
    }

    #[test]
    fn unattainable_tolerance_is_a_numerical_failure() {
        let err = solve_lambda(&consts(), 1e-300).unwrap_err();
        assert!(err.is_numerical());
        let err = model(1e5).local_maxima(1e-300).unwrap_err();
        assert!(err.is_numerical());
        // A zero or negative tolerance is a usage error, not a failure.
        assert!(matches!(
            solve_lambda(&consts(), 0.0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn exact_profile_at_the_smallest_admissible_point() {
        let m = model(1e5);
        let table = sieve(1000).unwrap();
        // x*n = 3 sums the single prime 2.
        let x = 3.0 / 1e5;
        let expected =
            density_m(2.0 / 1e5, m.constants()).unwrap() * 2.0_f64.ln() / 2.0 / 3.0_f64.ln();
        assert_eq!(m.f_exact(x, &table).unwrap(), expected);
        assert!(m.f_exact(2.9 / 1e5, &table).is_err());
        assert!(m.f_exact(2000.0 / 1e5, &table).is_err());
    }

    #[test]
    fn exact_profile_humps_for_a_scale_of_1e5() {
        let m = model(1e5);
        let table = sieve(100_000).unwrap();
        let f = |x: f64| m.f_exact(x, &table).unwrap();
        let step = 0.995 / 1999.0;
        let hump1 = 0.11201600800400201;
        let hump2 = 0.706328164082041;
        assert!((f(hump1) - 0.24203972263231682).abs() < 1e-9);
        assert!((f(hump2) - 0.2592647941999066).abs() < 1e-9);
        // Each frozen point beats its scan neighbors five steps away.
        for (x, v) in [(hump1, f(hump1)), (hump2, f(hump2))] {
            assert!(f(x - 5.0 * step) < v);
            assert!(f(x + 5.0 * step) < v);
        }
    }

    #[test]
    fn main_term_tracks_the_exact_profile() {
        let m = model(1e5);
        let table = sieve(100_000).unwrap();
        for i in 1..19 {
            let x = i as f64 * 0.05;
            let exact = m.f_exact(x, &table).unwrap();
            let main = m.main_term(x).unwrap();
            assert!(
                (exact - main).abs() < 0.05,
                "x = {x}: exact {exact}, main {main}"
            );
        }
    }

    fn synthetic_curve(n_ref: f64, jitter: f64) -> FamilyCurve {
        let grid = BGrid::geometric(3.0, 1.05, 2.0 * n_ref).unwrap();
        let mean: Vec<f64> = grid
            .values()
            .iter()
            .enumerate()
            .map(|(i, &b)| {
                let u = (b / n_ref).ln();
                let hump1 = (-((u - 0.08f64.ln()) / 0.5).powi(2)).exp();
                let hump2 = 0.8 * (-((u - 0.65f64.ln()) / 0.35).powi(2)).exp();
                hump1 + hump2 + jitter * (7.0 * i as f64).sin()
            })
            .collect();
        let ci = vec![0.0; mean.len()];
        let n = 10;
        FamilyCurve { grid, mean, ci, n }
    }

    #[test]
    fn synthetic_double_hump_is_recovered() {
        let curve = synthetic_curve(1000.0, 0.0);
        let maxima = empirical_maxima(&curve, 1000.0, 1).unwrap();
        assert_eq!(maxima.len(), 2, "{maxima:?}");
        assert!((maxima[0].0 - 0.08).abs() < 0.01);
        assert!((maxima[1].0 - 0.65).abs() < 0.05);
        assert!(maxima[0].1 > maxima[1].1);
    }

    #[test]
    fn spurious_jitter_maxima_rank_below_the_true_humps() {
        let curve = synthetic_curve(1000.0, 0.012);
        let raw = empirical_maxima(&curve, 1000.0, 1).unwrap();
        // Jitter on the flat tails creates extra strict maxima...
        assert!(raw.len() > 2, "{raw:?}");
        // ...but after smoothing, the two largest by value are still the
        // planted humps.
        let mut top = empirical_maxima(&curve, 1000.0, 5).unwrap();
        top.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        top.truncate(2);
        top.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        assert!((top[0].0 - 0.08).abs() < 0.02, "{top:?}");
        assert!((top[1].0 - 0.65).abs() < 0.07, "{top:?}");
    }

    #[test]
    fn insufficient_grid_coverage_is_rejected() {
        let curve = synthetic_curve(1000.0, 0.0);
        // Asking about a larger reference scale than the grid covers.
        assert!(matches!(
            empirical_maxima(&curve, 2000.0, 5),
            Err(Error::OutOfRange(_))
        ));
        assert!(empirical_maxima(&curve, 1000.0, 0).is_err());
        assert!(empirical_maxima(&curve, f64::NAN, 5).is_err());
    }
}
