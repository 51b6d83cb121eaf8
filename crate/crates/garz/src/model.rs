//! Velocity pair and coupled flux family.
//!
//! The model couples a density `rho` in [0, 1] with an orderliness field `w`
//! in [0, 1] through the flux
//!
//! ```text
//! f(rho, w) = rho * ((1 - w) * V_min(rho) + w * V_max(rho)),
//! ```
//!
//! where `V_min`, `V_max` are non-increasing velocities that coincide below
//! the vacuum threshold `epsilon` and vanish at `rho = 1`. Every structural
//! assumption (velocity monotonicity and ordering, zero velocity at full
//! density, the vacuum plateau, strict concavity of `f` in `rho`) is checked
//! on a validation grid at construction time; downstream code may rely on
//! them without re-checking.

use std::fmt;
use std::sync::Arc;

use crate::error::{GarzError, Result};

/// Number of density samples used by the assumption validators.
pub const VALIDATION_GRID_RHO: usize = 4096;
/// Number of orderliness samples used by the assumption validators.
pub const VALIDATION_GRID_W: usize = 65;
/// Absolute tolerance for exact identities (e.g. `V(1) = 0`).
pub const EXACT_TOL: f64 = 1e-12;
/// Strict inequalities must hold with at least this margin.
pub const STRICT_MARGIN: f64 = 1e-10;
/// Safety inflation applied to grid estimates of suprema.
const SUP_INFLATION: f64 = 1.05;
/// Step for the finite-difference fallback of `dflux`.
const FD_STEP: f64 = 1e-6;
/// Bisection stops once the bracket is this tight.
pub(crate) const BISECT_TOL: f64 = 1e-12;
/// Bisection gives up after this many iterations.
pub(crate) const BISECT_MAX_ITER: usize = 200;

type VelocityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum VelocityKind {
    /// `V_max = v_f (1 - rho)`, `V_min = V_max (1 - beta q(rho))` with
    /// `q = 0` below `epsilon` and `q = ((rho - eps)/(1 - eps))^2` above.
    Builtin { v_f: f64, beta: f64 },
    /// User-supplied velocity pair; goes through the same validators.
    Custom { v_min: VelocityFn, v_max: VelocityFn },
}

/// The velocity pair `(V_min, V_max)` with its vacuum threshold.
#[derive(Clone)]
pub struct VelocityModel {
    kind: VelocityKind,
    epsilon: f64,
}

impl fmt::Debug for VelocityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            VelocityKind::Builtin { v_f, beta } => f
                .debug_struct("VelocityModel")
                .field("v_f", v_f)
                .field("beta", beta)
                .field("epsilon", &self.epsilon)
                .finish(),
            VelocityKind::Custom { .. } => f
                .debug_struct("VelocityModel")
                .field("kind", &"custom")
                .field("epsilon", &self.epsilon)
                .finish(),
        }
    }
}

impl VelocityModel {
    /// Builds the built-in velocity family and validates the velocity-level
    /// assumptions (monotonicity, ordering, zeros at 1, vacuum plateau).
    ///
    /// The induced flux is validated separately by [`FluxFamily::new`]; a
    /// `VelocityModel` alone does not certify concavity.
    pub fn builtin(v_f: f64, beta: f64, epsilon: f64) -> Result<Self> {
        if !v_f.is_finite() || v_f <= 0.0 {
            return Err(GarzError::DomainError {
                what: "v_f",
                value: v_f,
                lo: 0.0,
                hi: f64::INFINITY,
            });
        }
        if !(0.0..1.0).contains(&beta) {
            return Err(GarzError::DomainError {
                what: "beta",
                value: beta,
                lo: 0.0,
                hi: 1.0,
            });
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(GarzError::DomainError {
                what: "epsilon",
                value: epsilon,
                lo: 0.0,
                hi: 1.0,
            });
        }
        let model = Self {
            kind: VelocityKind::Builtin { v_f, beta },
            epsilon,
        };
        model.validate_velocities()?;
        Ok(model)
    }

    /// Wraps a user-supplied velocity pair. The pair must pass the same
    /// validation grid as the built-in family.
    pub fn from_functions(
        v_min: impl Fn(f64) -> f64 + Send + Sync + 'static,
        v_max: impl Fn(f64) -> f64 + Send + Sync + 'static,
        epsilon: f64,
    ) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(GarzError::DomainError {
                what: "epsilon",
                value: epsilon,
                lo: 0.0,
                hi: 1.0,
            });
        }
        let model = Self {
            kind: VelocityKind::Custom {
                v_min: Arc::new(v_min),
                v_max: Arc::new(v_max),
            },
            epsilon,
        };
        model.validate_velocities()?;
        Ok(model)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Disordered-regime velocity.
    pub fn v_min(&self, rho: f64) -> f64 {
        match &self.kind {
            VelocityKind::Builtin { v_f, beta } => {
                v_f * (1.0 - rho) * (1.0 - beta * self.q(rho))
            }
            VelocityKind::Custom { v_min, .. } => v_min(rho),
        }
    }

    /// Ordered-regime velocity.
    pub fn v_max(&self, rho: f64) -> f64 {
        match &self.kind {
            VelocityKind::Builtin { v_f, .. } => v_f * (1.0 - rho),
            VelocityKind::Custom { v_max, .. } => v_max(rho),
        }
    }

    /// Actual velocity: convex combination of the two regimes.
    pub fn velocity(&self, rho: f64, w: f64) -> f64 {
        let vmin = self.v_min(rho);
        let vmax = self.v_max(rho);
        // A convex combination of equal values is that value; taking the
        // shortcut keeps the vacuum plateau independent of w bit-exactly.
        if vmin == vmax {
            return vmin;
        }
        (1.0 - w) * vmin + w * vmax
    }

    /// Phase-transition profile of the built-in family.
    fn q(&self, rho: f64) -> f64 {
        if rho <= self.epsilon {
            0.0
        } else {
            let s = (rho - self.epsilon) / (1.0 - self.epsilon);
            s * s
        }
    }

    fn is_builtin(&self) -> bool {
        matches!(self.kind, VelocityKind::Builtin { .. })
    }

    /// Checks the velocity-level assumptions on the validation grid.
    fn validate_velocities(&self) -> Result<()> {
        let n = VALIDATION_GRID_RHO;
        let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        let vmin: Vec<f64> = grid.iter().map(|&r| self.v_min(r)).collect();
        let vmax: Vec<f64> = grid.iter().map(|&r| self.v_max(r)).collect();

        for i in 1..n {
            let dmin = vmin[i] - vmin[i - 1];
            if dmin > EXACT_TOL {
                return Err(GarzError::AssumptionViolation {
                    name: "v_min non-increasing",
                    worst_point: (grid[i], 0.0),
                    worst_value: dmin,
                });
            }
            let dmax = vmax[i] - vmax[i - 1];
            if dmax > EXACT_TOL {
                return Err(GarzError::AssumptionViolation {
                    name: "v_max non-increasing",
                    worst_point: (grid[i], 1.0),
                    worst_value: dmax,
                });
            }
        }
        for i in 0..n {
            let gap = vmin[i] - vmax[i];
            if gap > EXACT_TOL {
                return Err(GarzError::AssumptionViolation {
                    name: "v_min <= v_max",
                    worst_point: (grid[i], 0.0),
                    worst_value: gap,
                });
            }
        }
        if self.v_min(1.0).abs() > EXACT_TOL || self.v_max(1.0).abs() > EXACT_TOL {
            return Err(GarzError::AssumptionViolation {
                name: "V(1) = 0",
                worst_point: (1.0, 0.0),
                worst_value: self.v_min(1.0).abs().max(self.v_max(1.0).abs()),
            });
        }
        // Vacuum plateau: the two regimes coincide below epsilon. Bit-exact
        // for the built-in family, tolerance for custom pairs.
        for &r in grid.iter().filter(|&&r| r <= self.epsilon) {
            let diff = (self.v_min(r) - self.v_max(r)).abs();
            let ok = if self.is_builtin() { diff == 0.0 } else { diff <= EXACT_TOL };
            if !ok {
                return Err(GarzError::AssumptionViolation {
                    name: "vacuum plateau",
                    worst_point: (r, 0.0),
                    worst_value: diff,
                });
            }
        }
        Ok(())
    }
}

/// The coupled flux `f(rho, w) = rho * velocity(rho, w)` with its cached
/// Lipschitz constant, validated for strict concavity in `rho`.
#[derive(Clone, Debug)]
pub struct FluxFamily {
    model: VelocityModel,
    lipschitz_l: f64,
    sup_dflux_raw: f64,
    sup_flux_gap: f64,
    validation_grid_size: usize,
}

impl FluxFamily {
    /// Validates strict concavity of `f(., w)` on the grid and caches the
    /// Lipschitz bound. Fails with `AssumptionViolation("strict concavity")`
    /// when any second difference is not below `-STRICT_MARGIN`.
    pub fn new(model: VelocityModel) -> Result<Self> {
        let mut family = Self::new_unchecked(model);
        family.validate_concavity()?;
        let (raw, gap) = family.grid_suprema();
        family.sup_dflux_raw = raw;
        family.sup_flux_gap = gap;
        family.lipschitz_l = SUP_INFLATION * raw;
        Ok(family)
    }

    /// Built-in family in one call: velocity validation, then flux validation.
    pub fn builtin(v_f: f64, beta: f64, epsilon: f64) -> Result<Self> {
        Self::new(VelocityModel::builtin(v_f, beta, epsilon)?)
    }

    /// Skips validation; for in-crate tests of the error paths only.
    pub(crate) fn new_unchecked(model: VelocityModel) -> Self {
        Self {
            model,
            lipschitz_l: f64::NAN,
            sup_dflux_raw: f64::NAN,
            sup_flux_gap: f64::NAN,
            validation_grid_size: VALIDATION_GRID_RHO,
        }
    }

    pub fn model(&self) -> &VelocityModel {
        &self.model
    }

    pub fn epsilon(&self) -> f64 {
        self.model.epsilon
    }

    pub fn validation_grid_size(&self) -> usize {
        self.validation_grid_size
    }

    /// Grid estimate of `sup |d_rho f|` inflated by 5%; upper bound used by
    /// the CFL condition.
    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_l
    }

    /// Raw (uninflated) grid maximum of `|d_rho f|`.
    pub fn sup_dflux(&self) -> f64 {
        self.sup_dflux_raw
    }

    /// Grid maximum of `f_max(rho) - f_min(rho)`.
    pub fn sup_flux_gap(&self) -> f64 {
        self.sup_flux_gap
    }

    /// `f_min(rho) = rho V_min(rho)`, the `w = 0` slice.
    pub fn f_min(&self, rho: f64) -> f64 {
        rho * self.model.v_min(rho)
    }

    /// `f_max(rho) = rho V_max(rho)`, the `w = 1` slice.
    pub fn f_max(&self, rho: f64) -> f64 {
        rho * self.model.v_max(rho)
    }

    /// The coupled flux. Arguments may stray outside [0, 1] by at most
    /// `EXACT_TOL` (they are clamped); beyond that the call is a domain error.
    pub fn flux(&self, rho: f64, w: f64) -> Result<f64> {
        let rho = check_unit("rho", rho)?;
        let w = check_unit("w", w)?;
        Ok(self.f(rho, w))
    }

    /// Unchecked flux for hot paths; arguments must already lie in [0, 1].
    #[inline]
    pub(crate) fn f(&self, rho: f64, w: f64) -> f64 {
        rho * self.model.velocity(rho, w)
    }

    /// `d_rho f`: analytic for the built-in family, central finite
    /// difference (step clamped to [0, 1]) for custom velocity pairs.
    pub fn dflux(&self, rho: f64, w: f64) -> Result<f64> {
        let rho = check_unit("rho", rho)?;
        let w = check_unit("w", w)?;
        Ok(self.df(rho, w))
    }

    #[inline]
    pub(crate) fn df(&self, rho: f64, w: f64) -> f64 {
        match &self.model.kind {
            VelocityKind::Builtin { v_f, beta } => {
                let eps = self.model.epsilon;
                if rho <= eps {
                    v_f * (1.0 - 2.0 * rho)
                } else {
                    let c = (1.0 - w) * beta;
                    let s = 1.0 - eps;
                    let q = ((rho - eps) / s) * ((rho - eps) / s);
                    let dq = 2.0 * (rho - eps) / (s * s);
                    v_f * ((1.0 - 2.0 * rho) * (1.0 - c * q) - rho * (1.0 - rho) * c * dq)
                }
            }
            VelocityKind::Custom { .. } => {
                let lo = (rho - FD_STEP).max(0.0);
                let hi = (rho + FD_STEP).min(1.0);
                (self.f(hi, w) - self.f(lo, w)) / (hi - lo)
            }
        }
    }

    /// The unique `alpha(w)` in (0, 1) with `d_rho f(alpha, w) = 0`, found by
    /// bisection to absolute tolerance `1e-12`.
    pub fn critical_point(&self, w: f64) -> Result<f64> {
        let w = check_unit("w", w)?;
        let df0 = self.df(0.0, w);
        let df1 = self.df(1.0, w);
        if df0 <= 0.0 || df1 >= 0.0 {
            return Err(GarzError::RootNotBracketed { df0, df1 });
        }
        bisect(|r| self.df(r, w), 0.0, 1.0)
    }

    /// Largest ratio `dt/dx` the CFL condition admits for this family:
    /// `1 / (max{2, 1/epsilon} * L)`.
    pub fn max_stable_lambda(&self) -> f64 {
        1.0 / (2.0f64.max(1.0 / self.epsilon()) * self.lipschitz_l)
    }

    fn validate_concavity(&self) -> Result<()> {
        let n = VALIDATION_GRID_RHO;
        let h = 1.0 / (n - 1) as f64;
        // Endpoint values must vanish for every sampled w.
        for k in 0..VALIDATION_GRID_W {
            let w = k as f64 / (VALIDATION_GRID_W - 1) as f64;
            for r in [0.0, 1.0] {
                let v = self.f(r, w).abs();
                if v > EXACT_TOL {
                    return Err(GarzError::AssumptionViolation {
                        name: "f vanishes at endpoints",
                        worst_point: (r, w),
                        worst_value: v,
                    });
                }
            }
        }
        let mut worst = f64::NEG_INFINITY;
        let mut worst_pt = (0.0, 0.0);
        let mut f_row = vec![0.0; n];
        for k in 0..VALIDATION_GRID_W {
            let w = k as f64 / (VALIDATION_GRID_W - 1) as f64;
            for (i, v) in f_row.iter_mut().enumerate() {
                *v = self.f(i as f64 * h, w);
            }
            for i in 1..n - 1 {
                let d2 = f_row[i + 1] - 2.0 * f_row[i] + f_row[i - 1];
                if d2 > worst {
                    worst = d2;
                    worst_pt = (i as f64 * h, w);
                }
            }
        }
        if worst >= -STRICT_MARGIN {
            return Err(GarzError::AssumptionViolation {
                name: "strict concavity",
                worst_point: worst_pt,
                worst_value: worst,
            });
        }
        Ok(())
    }

    /// Grid maxima of `|d_rho f|` and of `f_max - f_min`.
    fn grid_suprema(&self) -> (f64, f64) {
        let n = VALIDATION_GRID_RHO;
        let h = 1.0 / (n - 1) as f64;
        let mut sup_df = 0.0f64;
        let mut sup_gap = 0.0f64;
        for i in 0..n {
            let r = i as f64 * h;
            sup_gap = sup_gap.max(self.f_max(r) - self.f_min(r));
            for k in 0..VALIDATION_GRID_W {
                let w = k as f64 / (VALIDATION_GRID_W - 1) as f64;
                sup_df = sup_df.max(self.df(r, w).abs());
            }
        }
        (sup_df, sup_gap)
    }
}

/// Clamp-or-reject for arguments expected in the unit interval.
fn check_unit(what: &'static str, x: f64) -> Result<f64> {
    if !(-EXACT_TOL..=1.0 + EXACT_TOL).contains(&x) {
        return Err(GarzError::DomainError {
            what,
            value: x,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(x.clamp(0.0, 1.0))
}

/// Bisection for a root of `g` on [lo, hi] assuming `g(lo) > 0 > g(hi)`.
pub(crate) fn bisect(g: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut iter = 0;
    while hi - lo > BISECT_TOL {
        if iter >= BISECT_MAX_ITER {
            return Err(GarzError::InvariantViolation {
                step: 0,
                cell: 0,
                detail: format!("bisection failed to converge on [{lo}, {hi}]"),
            });
        }
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iter += 1;
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
pub(crate) use tests::default_family;
