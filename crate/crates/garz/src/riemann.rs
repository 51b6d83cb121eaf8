//! Semi-analytic solver for two-state Riemann data of the coupled system.
//!
//! The solution is self-similar: a first-family wave (shock or rarefaction)
//! inside the left phase `w = w_l` connects `rho_l` to an intermediate
//! density `rho_mid`, followed by a contact discontinuity across which `w`
//! jumps from `w_l` to `w_r` while the velocity is continuous:
//!
//! ```text
//! velocity(rho_mid, w_l) = velocity(rho_r, w_r) = contact speed.
//! ```
//!
//! `rho_mid` is found by bisection on the non-increasing velocity slice
//! `velocity(., w_l)` over `[eps, 1]`. The construction is validated a
//! posteriori (velocity matching, wave ordering, Rankine-Hugoniot and Lax
//! conditions for the shock) and through weak-form residual checks in the
//! test suite; it serves as the oracle for the finite-volume scheme.

use crate::error::{GarzError, Result};
use crate::model::{bisect, FluxFamily, EXACT_TOL};

/// Two-state initial datum with both densities away from vacuum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiemannData {
    pub rho_l: f64,
    pub w_l: f64,
    pub rho_r: f64,
    pub w_r: f64,
}

impl RiemannData {
    pub fn new(family: &FluxFamily, rho_l: f64, w_l: f64, rho_r: f64, w_r: f64) -> Result<Self> {
        let eps = family.epsilon();
        for (what, v) in [("rho_l", rho_l), ("rho_r", rho_r)] {
            if !(eps..=1.0).contains(&v) {
                return Err(GarzError::DomainError {
                    what,
                    value: v,
                    lo: eps,
                    hi: 1.0,
                });
            }
        }
        for (what, v) in [("w_l", w_l), ("w_r", w_r)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(GarzError::DomainError {
                    what,
                    value: v,
                    lo: 0.0,
                    hi: 1.0,
                });
            }
        }
        Ok(Self {
            rho_l,
            w_l,
            rho_r,
            w_r,
        })
    }
}

/// The first-family wave of the solution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Wave1 {
    /// Left and intermediate states coincide.
    None,
    /// Entropic shock moving at the Rankine-Hugoniot speed.
    Shock { speed: f64 },
    /// Rarefaction fan spanning `[speed_lo, speed_hi]`.
    Rarefaction { speed_lo: f64, speed_hi: f64 },
}

/// Exact wave structure for one Riemann datum.
#[derive(Clone, Debug)]
pub struct RiemannSolution {
    family: FluxFamily,
    data: RiemannData,
    pub rho_mid: f64,
    pub wave1: Wave1,
    pub contact_speed: f64,
}

/// Solves the Riemann problem, classifying the first-family wave.
pub fn solve_riemann(family: &FluxFamily, data: RiemannData) -> Result<RiemannSolution> {
    let eps = family.epsilon();
    let target = family.model().velocity(data.rho_r, data.w_r);
    let v_hi = family.model().velocity(eps, data.w_l);
    let v_lo = family.model().velocity(1.0, data.w_l);
    if target > v_hi + EXACT_TOL || target < v_lo - EXACT_TOL {
        return Err(GarzError::NoIntermediateState {
            target,
            lo: v_lo,
            hi: v_hi,
        });
    }
    let t = target.clamp(v_lo, v_hi);
    // velocity(., w_l) is non-increasing, so g(eps) >= 0 >= g(1).
    let mut rho_mid = bisect(|r| family.model().velocity(r, data.w_l) - t, eps, 1.0)?;
    // Degenerate first wave: the intermediate state is the left state itself.
    if (rho_mid - data.rho_l).abs() <= 1e-10 {
        rho_mid = data.rho_l;
    }

    let wave1 = if rho_mid == data.rho_l {
        Wave1::None
    } else if rho_mid > data.rho_l {
        let speed = (family.f(rho_mid, data.w_l) - family.f(data.rho_l, data.w_l))
            / (rho_mid - data.rho_l);
        Wave1::Shock { speed }
    } else {
        Wave1::Rarefaction {
            speed_lo: family.df(data.rho_l, data.w_l),
            speed_hi: family.df(rho_mid, data.w_l),
        }
    };
    let sol = RiemannSolution {
        family: family.clone(),
        data,
        rho_mid,
        wave1,
        contact_speed: t,
    };
    sol.validate()?;
    Ok(sol)
}

impl RiemannSolution {
    pub fn data(&self) -> RiemannData {
        self.data
    }

    /// Velocity matching, wave ordering, and shock admissibility.
    fn validate(&self) -> Result<()> {
        let d = &self.data;
        let vm = (self.family.model().velocity(self.rho_mid, d.w_l)
            - self.family.model().velocity(d.rho_r, d.w_r))
        .abs();
        let mut checks: Vec<(&str, bool)> = vec![("velocity matching", vm <= 1e-10)];
        match self.wave1 {
            Wave1::None => {}
            Wave1::Shock { speed } => {
                let rh = (self.family.f(self.rho_mid, d.w_l) - self.family.f(d.rho_l, d.w_l)
                    - speed * (self.rho_mid - d.rho_l))
                    .abs();
                checks.push(("Rankine-Hugoniot", rh <= 1e-12));
                checks.push((
                    "Lax admissibility",
                    self.family.df(d.rho_l, d.w_l) >= speed - 1e-10
                        && speed >= self.family.df(self.rho_mid, d.w_l) - 1e-10,
                ));
                checks.push(("wave ordering", speed <= self.contact_speed + 1e-10));
            }
            Wave1::Rarefaction { speed_lo, speed_hi } => {
                checks.push(("fan ordering", speed_lo <= speed_hi + 1e-12));
                checks.push(("wave ordering", speed_hi <= self.contact_speed + 1e-10));
            }
        }
        for (name, ok) in checks {
            if !ok {
                return Err(GarzError::InvariantViolation {
                    step: 0,
                    cell: 0,
                    detail: format!("Riemann solution failed {name}"),
                });
            }
        }
        Ok(())
    }

    /// Self-similar state at `xi = x / t`: `(rho, w)`.
    pub fn evaluate(&self, xi: f64) -> (f64, f64) {
        let d = &self.data;
        if xi >= self.contact_speed {
            return (d.rho_r, d.w_r);
        }
        let rho = match self.wave1 {
            Wave1::None => self.rho_mid,
            Wave1::Shock { speed } => {
                if xi < speed {
                    d.rho_l
                } else {
                    self.rho_mid
                }
            }
            Wave1::Rarefaction { speed_lo, speed_hi } => {
                if xi < speed_lo {
                    d.rho_l
                } else if xi > speed_hi {
                    self.rho_mid
                } else {
                    // Invert d_rho f(., w_l) = xi on [rho_mid, rho_l], where the
                    // derivative is decreasing by strict concavity.
                    bisect(|r| self.family.df(r, d.w_l) - xi, self.rho_mid, d.rho_l)
                        .expect("fan inversion brackets by construction")
                }
            }
        };
        (rho, d.w_l)
    }

    /// State at position `x` and time `t` (step function of the datum at `t <= 0`).
    pub fn evaluate_xt(&self, x: f64, t: f64) -> (f64, f64) {
        if t <= 0.0 {
            return if x < 0.0 {
                (self.data.rho_l, self.data.w_l)
            } else {
                (self.data.rho_r, self.data.w_r)
            };
        }
        self.evaluate(x / t)
    }

    /// Ordered wave positions at time `t`, for quadrature splitting.
    pub fn wave_positions(&self, t: f64) -> Vec<f64> {
        let mut xs = match self.wave1 {
            Wave1::None => vec![],
            Wave1::Shock { speed } => vec![speed * t],
            Wave1::Rarefaction { speed_lo, speed_hi } => vec![speed_lo * t, speed_hi * t],
        };
        xs.push(self.contact_speed * t);
        xs
    }

    /// Exact-in-structure cell average of `(rho, w)` over `[a, b]` at time
    /// `t`: constants integrate exactly, the fan by composite midpoint.
    pub fn average(&self, t: f64, a: f64, b: f64) -> (f64, f64) {
        debug_assert!(b > a);
        let mut cuts = vec![a];
        for x in self.wave_positions(t) {
            if x > a && x < b {
                cuts.push(x);
            }
        }
        cuts.push(b);
        cuts.sort_by(|p, q| p.partial_cmp(q).unwrap());
        let mut rho_acc = 0.0;
        let mut w_acc = 0.0;
        for piece in cuts.windows(2) {
            let (lo, hi) = (piece[0], piece[1]);
            if hi <= lo {
                continue;
            }
            let len = hi - lo;
            let mid = 0.5 * (lo + hi);
            let (_, w_mid) = self.evaluate_xt(mid, t);
            w_acc += w_mid * len;
            if self.in_fan(mid, t) {
                // Smooth inside the fan: 16-point composite midpoint.
                let m = 16;
                let mut acc = 0.0;
                for i in 0..m {
                    let x = lo + (i as f64 + 0.5) * len / m as f64;
                    acc += self.evaluate_xt(x, t).0;
                }
                rho_acc += acc / m as f64 * len;
            } else {
                rho_acc += self.evaluate_xt(mid, t).0 * len;
            }
        }
        (rho_acc / (b - a), w_acc / (b - a))
    }

    fn in_fan(&self, x: f64, t: f64) -> bool {
        match self.wave1 {
            Wave1::Rarefaction { speed_lo, speed_hi } if t > 0.0 => {
                let xi = x / t;
                xi >= speed_lo && xi <= speed_hi
            }
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::default_family;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    #[test]
    fn constant_data_gives_constant_solution() {
        let fam = default_family();
        let data = RiemannData::new(&fam, 0.5, 0.7, 0.5, 0.7).unwrap();
        let sol = solve_riemann(&fam, data).unwrap();
        assert_eq!(sol.wave1, Wave1::None);
        assert_relative_eq!(sol.rho_mid, 0.5, epsilon = 1e-11);
        for xi in [-1.0, 0.0, 0.3, 2.0] {
            let (r, w) = sol.evaluate(xi);
            assert_relative_eq!(r, 0.5, epsilon = 1e-11);
            assert!(w == 0.7);
        }
    }

    #[test]
    fn equal_w_reduces_to_scalar_riemann() {
        let fam = default_family();
        for (rl, rr) in [(0.3, 0.8), (0.8, 0.3), (0.25, 0.95)] {
            let data = RiemannData::new(&fam, rl, 0.6, rr, 0.6).unwrap();
            let sol = solve_riemann(&fam, data).unwrap();
            // Velocity matching forces rho_mid = rho_r when w does not jump.
            assert_relative_eq!(sol.rho_mid, rr, epsilon = 1e-10);
            match sol.wave1 {
                Wave1::Shock { .. } => assert!(rr > rl),
                Wave1::Rarefaction { .. } => assert!(rr < rl),
                Wave1::None => panic!("distinct states must produce a wave"),
            }
        }
    }

    #[test]
    fn beta_zero_contact_carries_w_jump_only() {
        let fam = FluxFamily::builtin(1.0, 0.0, 0.2).unwrap();
        let data = RiemannData::new(&fam, 0.4, 0.9, 0.6, 0.2).unwrap();
        let sol = solve_riemann(&fam, data).unwrap();
        assert_relative_eq!(sol.rho_mid, 0.6, epsilon = 1e-10);
        assert_relative_eq!(sol.contact_speed, 0.4, epsilon = 1e-12);
        let (r, w) = sol.evaluate(sol.contact_speed - 1e-6);
        assert_relative_eq!(r, 0.6, epsilon = 1e-9);
        assert_eq!(w, 0.9);
        let (r, w) = sol.evaluate(sol.contact_speed + 1e-6);
        assert_eq!((r, w), (0.6, 0.2));
    }

    #[test]
    fn frozen_scenarios_classify_as_expected() {
        let fam = default_family();
        // RS1: shock of the first family followed by a contact.
        let rs1 = solve_riemann(&fam, RiemannData::new(&fam, 0.3, 1.0, 0.7, 0.2).unwrap()).unwrap();
        assert_relative_eq!(rs1.rho_mid, 0.7234375, epsilon = 1e-9);
        assert_relative_eq!(rs1.contact_speed, 0.2765625, epsilon = 1e-9);
        match rs1.wave1 {
            Wave1::Shock { speed } => assert_relative_eq!(speed, -0.0234375, epsilon = 1e-8),
            other => panic!("RS1 must be a shock, got {other:?}"),
        }

        // RS2: rarefaction of the first family followed by a contact.
        let rs2 = solve_riemann(&fam, RiemannData::new(&fam, 0.8, 1.0, 0.4, 0.2).unwrap()).unwrap();
        assert_relative_eq!(rs2.rho_mid, 0.4075, epsilon = 1e-9);
        assert_relative_eq!(rs2.contact_speed, 0.5925, epsilon = 1e-9);
        match rs2.wave1 {
            Wave1::Rarefaction { speed_lo, speed_hi } => {
                assert_relative_eq!(speed_lo, -0.6, epsilon = 1e-9);
                assert_relative_eq!(speed_hi, 0.185, epsilon = 1e-9);
            }
            other => panic!("RS2 must be a rarefaction, got {other:?}"),
        }
    }

    #[test]
    fn profile_extremes_and_fan_formula() {
        let fam = FluxFamily::builtin(1.0, 0.0, 0.2).unwrap();
        let data = RiemannData::new(&fam, 0.9, 0.5, 0.3, 0.5).unwrap();
        let sol = solve_riemann(&fam, data).unwrap();
        let (lo, hi) = match sol.wave1 {
            Wave1::Rarefaction { speed_lo, speed_hi } => (speed_lo, speed_hi),
            other => panic!("expected rarefaction, got {other:?}"),
        };
        assert_eq!(sol.evaluate(lo - 0.5), (0.9, 0.5));
        assert_eq!(sol.evaluate(sol.contact_speed + 0.5), (0.3, 0.5));
        // Inside the fan: rho(xi) = (1 - xi) / 2 for f = rho (1 - rho).
        for frac in [0.1, 0.5, 0.9] {
            let xi = lo + frac * (hi - lo);
            let (r, _) = sol.evaluate(xi);
            assert_relative_eq!(r, (1.0 - xi) / 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn random_data_invariants() {
        let fam = default_family();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20);
        let eps = fam.epsilon();
        let mut count = 0;
        for _ in 0..10_000 {
            let rho_l = eps + (1.0 - eps) * rng.gen::<f64>();
            let rho_r = eps + (1.0 - eps) * rng.gen::<f64>();
            let w_l: f64 = rng.gen();
            let w_r: f64 = rng.gen();
            let data = RiemannData::new(&fam, rho_l, w_l, rho_r, w_r).unwrap();
            // The vacuum plateau makes every datum admissible for the
            // built-in family; solve_riemann revalidates everything.
            let sol = solve_riemann(&fam, data).unwrap();
            count += 1;
            // Self-similar monotonicity of rho inside the fan, continuity of
            // the declared states at the wave edges.
            if let Wave1::Rarefaction { speed_lo, speed_hi } = sol.wave1 {
                let mut prev = f64::INFINITY;
                for i in 0..=20 {
                    let xi = speed_lo + (speed_hi - speed_lo) * i as f64 / 20.0;
                    let (r, _) = sol.evaluate(xi);
                    assert!(r <= prev + 1e-10);
                    prev = r;
                }
                assert!((sol.evaluate(speed_lo).0 - rho_l).abs() <= 1e-9);
                assert!((sol.evaluate(speed_hi).0 - sol.rho_mid).abs() <= 1e-9);
            }
        }
        assert_eq!(count, 10_000);
    }

    #[test]
    fn no_intermediate_state_error_path() {
        // Target velocity above the attainable range: only reachable with
        // arguments outside the admissible box, so probe the guard directly.
        let fam = default_family();
        let data = RiemannData { rho_l: 0.5, w_l: 0.0, rho_r: 0.05, w_r: 1.0 };
        assert!(matches!(
            solve_riemann(&fam, data),
            Err(GarzError::NoIntermediateState { .. })
        ));
    }

    /// Weak-form residual of the exact profile, integrated against smooth
    /// bumps with quadrature split at the known wave positions.
    #[test]
    fn oracle_satisfies_weak_form() {
        let fam = default_family();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let eps = fam.epsilon();
        for _ in 0..5 {
            let data = RiemannData::new(
                &fam,
                eps + (1.0 - eps) * rng.gen::<f64>(),
                rng.gen(),
                eps + (1.0 - eps) * rng.gen::<f64>(),
                rng.gen(),
            )
            .unwrap();
            let sol = solve_riemann(&fam, data).unwrap();

            // Bump parameters: support strictly inside (0, 1) x (-4, 4).
            let t0 = 0.35 + 0.3 * rng.gen::<f64>();
            let x0 = -1.0 + 2.0 * rng.gen::<f64>();
            let (rt, rx) = (0.3, 1.5);
            let bump = |s: f64| if s.abs() < 1.0 { (-1.0 / (1.0 - s * s)).exp() } else { 0.0 };
            let dbump = |s: f64| {
                if s.abs() < 1.0 {
                    let d = 1.0 - s * s;
                    (-1.0 / d).exp() * (-2.0 * s / (d * d))
                } else {
                    0.0
                }
            };
            let phi_t = |t: f64, x: f64| dbump((t - t0) / rt) / rt * bump((x - x0) / rx);
            let phi_x = |t: f64, x: f64| bump((t - t0) / rt) * dbump((x - x0) / rx) / rx;

            // For each of `nt` midpoint times, integrate in x exactly within
            // the smooth pieces (split at wave positions), 25 points each.
            let nt = 100;
            let mut residual = 0.0;
            for it in 0..nt {
                let t = (it as f64 + 0.5) / nt as f64;
                let mut cuts = vec![x0 - rx];
                for xw in sol.wave_positions(t) {
                    if xw > x0 - rx && xw < x0 + rx {
                        cuts.push(xw);
                    }
                }
                cuts.push(x0 + rx);
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let mut acc = 0.0;
                for piece in cuts.windows(2) {
                    let (lo, hi) = (piece[0], piece[1]);
                    let m = 25;
                    for i in 0..m {
                        let x = lo + (i as f64 + 0.5) * (hi - lo) / m as f64;
                        let (r, w) = sol.evaluate_xt(x, t);
                        let f = fam.flux(r, w).unwrap();
                        acc += (r * w * phi_t(t, x) + f * w * phi_x(t, x)) * (hi - lo) / m as f64;
                    }
                }
                residual += acc / nt as f64;
            }
            // Support avoids t = 0, so no initial term.
            assert!(
                residual.abs() <= 1e-3,
                "weak-form residual {residual} for {data:?}"
            );
        }
    }
}
