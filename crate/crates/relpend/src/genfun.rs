//! Generating functions of the twist factors, realized numerically.
//!
//! For a factor over [τ, τ+L] the generating function is the action integral
//!
//! ```text
//! h(θ, θ1) = ∫_τ^{τ+L} [ -(F² + P·F + 1)/sqrt(1 + (P+F)²) + G(Q) ] dt
//! ```
//!
//! along the unique trajectory of the forcing-shifted system joining Q(τ) = θ
//! to Q(τ+L) = θ1 (unique by the factor twist: the arrival position is
//! strictly monotone in the launch momentum). Its partial derivatives
//! reproduce the map implicitly: ∂1 h = -P0 and ∂2 h = P1, and the Legendre
//! condition ∂12 h < 0 is equivalent to positive twist through
//! ∂12 h = -1 / (∂Q1/∂P0).
//!
//! The boundary problem is solved by bracket expansion plus safeguarded
//! Newton with the variational derivative. Derivatives of h always come from
//! the shot momenta, never from numerical differentiation of h; the finite
//! difference route exists only as an independent cross-check.

use std::collections::HashMap;
use std::sync::RwLock;

use serde::Serialize;

use crate::flow::{dopri5, System, SystemId};
use crate::model::ModelSpec;
use crate::poincare::{Mat2, TwistFactor};
use crate::{Error, Result};

/// Search limit for the launch momentum during bracket expansion.
const P0_SEARCH_LIMIT: f64 = 1e9;

/// A solved boundary problem: everything the variational principle needs.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Shot {
    /// Launch momentum; -∂1 h.
    pub p0: f64,
    /// Arrival momentum; ∂2 h.
    pub p1: f64,
    /// Flow Jacobian ∂(Q1, P1)/∂(Q0, P0) along the shot.
    pub jacobian: Mat2,
    /// Action integral h(θ, θ1).
    pub action: f64,
    /// Arrival defect |Q1 - θ1| actually achieved.
    pub residual: f64,
}

impl Shot {
    /// ∂12 h = -1 / (∂Q1/∂P0).
    pub fn d12(&self) -> f64 {
        -1.0 / self.jacobian[0][1]
    }

    /// ∂11 h = J11 / J12.
    pub fn d11(&self) -> f64 {
        self.jacobian[0][0] / self.jacobian[0][1]
    }

    /// ∂22 h = J22 / J12.
    pub fn d22(&self) -> f64 {
        self.jacobian[1][1] / self.jacobian[0][1]
    }
}

/// One row of the exported h-surface.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SurfaceRow {
    pub theta: f64,
    pub theta1: f64,
    pub h: f64,
    pub d1h: f64,
    pub d2h: f64,
    pub d12h: f64,
}

/// Legendre-condition sweep over a grid inside the admissible band.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LegendreReport {
    pub nodes: usize,
    /// Most negative ∂12 h seen.
    pub d12_min: f64,
    /// Largest (closest to zero) ∂12 h seen; the condition requires this < 0.
    pub d12_max: f64,
    /// Twist margin β = 1 / max(-∂12 h).
    pub beta: f64,
    /// Worst relative disagreement between the finite-difference and
    /// Jacobian estimates of ∂12 h.
    pub max_rel_gap: f64,
}

/// The generating function of one twist factor.
pub struct GeneratingFunction<'a> {
    spec: &'a ModelSpec,
    factor: TwistFactor,
    /// Arrival tolerance |Q1 - θ1| for the boundary solve.
    pub shoot_tol: f64,
    /// Local error tolerance of the underlying integrations.
    pub integ_tol: f64,
    /// Margin ε_b shaved off each end of the open increment band (-L, L):
    /// near |Δθ| -> L the launch momentum diverges.
    band_margin: f64,
    lattice_step: f64,
    cache: RwLock<HashMap<(i64, i64), Shot>>,
}

impl<'a> GeneratingFunction<'a> {
    pub fn new(spec: &'a ModelSpec, factor: TwistFactor, shoot_tol: f64, integ_tol: f64) -> Self {
        let band_margin = 1e-3 * factor.len;
        GeneratingFunction {
            spec,
            factor,
            shoot_tol,
            integ_tol,
            band_margin,
            lattice_step: 1.0 / 128.0,
            cache: RwLock::new(HashMap::new()),
        }
    }

    /// Defaults tuned for the stationarity tolerances used downstream.
    pub fn with_defaults(spec: &'a ModelSpec, factor: TwistFactor) -> Self {
        GeneratingFunction::new(spec, factor, 1e-10, 1e-12)
    }

    pub fn factor(&self) -> &TwistFactor {
        &self.factor
    }

    /// Admissible increment band (-L + ε_b, L - ε_b).
    pub fn band(&self) -> (f64, f64) {
        (-self.factor.len + self.band_margin, self.factor.len - self.band_margin)
    }

    /// Widen the band margin (the default is 1e-3·L).
    pub fn set_band_margin(&mut self, margin: f64) {
        self.band_margin = margin;
    }

    fn check_band(&self, dtheta: f64) -> Result<()> {
        let (lo, hi) = self.band();
        if dtheta <= lo || dtheta >= hi {
            return Err(Error::Band { dtheta, lo, hi });
        }
        Ok(())
    }

    /// Integrate the augmented system [Q, P, J, A] from (θ, p0).
    fn trial(&self, theta: f64, p0: f64) -> Result<([f64; 2], Mat2, f64)> {
        let system = System::new(SystemId::Rpend4, self.spec)?;
        let spec = self.spec;
        let rhs = move |t: f64, y: &[f64; 7]| -> [f64; 7] {
            let z = [y[0], y[1]];
            let dz = system.rhs(t, &z);
            let a = system.jac(t, &z);
            let big_f = spec.forcing.primitive(t);
            let w = y[1] + big_f;
            let big_g = spec.potential.primitive(y[0]);
            let lagrangian = -(big_f * big_f + y[1] * big_f + 1.0) / (1.0 + w * w).sqrt() + big_g;
            [
                dz[0],
                dz[1],
                a[0][0] * y[2] + a[0][1] * y[3],
                a[1][0] * y[2] + a[1][1] * y[3],
                a[0][0] * y[4] + a[0][1] * y[5],
                a[1][0] * y[4] + a[1][1] * y[5],
                lagrangian,
            ]
        };
        let y0 = [theta, p0, 1.0, 0.0, 0.0, 1.0, 0.0];
        let run = dopri5(rhs, self.factor.tau, self.factor.tau + self.factor.len, y0, self.integ_tol, false)?;
        let y = run.y1;
        Ok(([y[0], y[1]], [[y[2], y[4]], [y[3], y[5]]], y[6]))
    }

    /// Solve the boundary problem Q(τ+L; τ, θ, P0) = θ1 for P0.
    pub fn shoot(&self, theta: f64, theta1: f64) -> Result<Shot> {
        self.shoot_with_guess(theta, theta1, None)
    }

    /// Boundary solve warm-started from a previous launch momentum.
    pub fn shoot_with_guess(&self, theta: f64, theta1: f64, guess: Option<f64>) -> Result<Shot> {
        let dtheta = theta1 - theta;
        self.check_band(dtheta)?;
        let len = self.factor.len;
        // Free-flight guess: Δθ = L·P/sqrt(1+P²).
        let free = dtheta / (len * len - dtheta * dtheta).sqrt();
        let mut x = guess.unwrap_or(free);
        if !x.is_finite() {
            x = free;
        }

        // Bracket state: the residual r(P0) = Q1 - θ1 is increasing by twist.
        let mut lo: Option<f64> = None; // largest x seen with r <= 0
        let mut hi: Option<f64> = None; // smallest x seen with r >= 0
        let mut best: Option<(f64, Shot)> = None;
        let mut eval = |x: f64, lo: &mut Option<f64>, hi: &mut Option<f64>| -> Result<(f64, f64)> {
            let (z1, jac, action) = self.trial(theta, x)?;
            let r = z1[0] - theta1;
            if r <= 0.0 {
                *lo = Some(lo.map_or(x, |v: f64| v.max(x)));
            }
            if r >= 0.0 {
                *hi = Some(hi.map_or(x, |v: f64| v.min(x)));
            }
            let shot = Shot { p0: x, p1: z1[1], jacobian: jac, action, residual: r.abs() };
            if best.as_ref().is_none_or(|(br, _)| r.abs() < *br) {
                best = Some((r.abs(), shot));
            }
            Ok((r, jac[0][1]))
        };

        let (mut r, mut slope) = eval(x, &mut lo, &mut hi)?;
        let mut step = 1.0_f64.max(0.5 * x.abs());
        for _ in 0..200 {
            if r.abs() <= self.shoot_tol {
                return Ok(best.expect("at least one trial").1);
            }
            let next = match (lo, hi) {
                (Some(lo_x), Some(hi_x)) => {
                    if (hi_x - lo_x).abs() <= f64::EPSILON * x.abs().max(1.0) {
                        // Bracket exhausted at roundoff; accept the best trial
                        // if it met a slightly relaxed target.
                        let (br, shot) = best.expect("at least one trial");
                        if br <= 10.0 * self.shoot_tol {
                            return Ok(shot);
                        }
                        return Err(Error::DiagnosticGap {
                            what: format!("shooting stalled at residual {br} for increment {dtheta}"),
                            gap: br,
                            limit: self.shoot_tol,
                        });
                    }
                    // Newton inside the bracket, bisection otherwise.
                    let newton = x - r / slope;
                    if slope > 0.0 && newton > lo_x && newton < hi_x {
                        newton
                    } else {
                        0.5 * (lo_x + hi_x)
                    }
                }
                // No bracket yet: march in the ascent direction with growing steps.
                (Some(_), None) => {
                    step *= 2.0;
                    let c = x + step;
                    if c > P0_SEARCH_LIMIT {
                        return Err(Error::Infeasible { dtheta, limit: P0_SEARCH_LIMIT });
                    }
                    c
                }
                (None, Some(_)) => {
                    step *= 2.0;
                    let c = x - step;
                    if c < -P0_SEARCH_LIMIT {
                        return Err(Error::Infeasible { dtheta, limit: P0_SEARCH_LIMIT });
                    }
                    c
                }
                (None, None) => unreachable!("every trial lands in one bracket side"),
            };
            x = next;
            let (r2, s2) = eval(x, &mut lo, &mut hi)?;
            r = r2;
            slope = s2;
        }
        let (br, shot) = best.expect("at least one trial");
        if br <= 10.0 * self.shoot_tol {
            return Ok(shot);
        }
        Err(Error::DiagnosticGap {
            what: format!("shooting did not converge for increment {dtheta}"),
            gap: br,
            limit: self.shoot_tol,
        })
    }

    /// Lattice-cached shot: hits the read-write cache only when (θ, θ1) lie on
    /// the diagnostic lattice; arbitrary queries shoot fresh.
    pub fn shoot_cached(&self, theta: f64, theta1: f64) -> Result<Shot> {
        let step = self.lattice_step;
        let quantize = |x: f64| -> Option<i64> {
            let idx = x / step;
            let rounded = idx.round();
            ((idx - rounded).abs() < 1e-9).then_some(rounded as i64)
        };
        let key = match (quantize(theta), quantize(theta1)) {
            (Some(a), Some(b)) => (a, b),
            _ => return self.shoot(theta, theta1),
        };
        if let Some(shot) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(*shot);
        }
        let shot = self.shoot(theta, theta1)?;
        self.cache.write().expect("cache lock").insert(key, shot);
        Ok(shot)
    }

    /// h(θ, θ1): the action integral along the shot trajectory.
    pub fn value(&self, theta: f64, theta1: f64) -> Result<f64> {
        Ok(self.shoot(theta, theta1)?.action)
    }

    /// (∂1 h, ∂2 h) = (-P0, P1), straight from the shot momenta.
    pub fn derivatives(&self, theta: f64, theta1: f64) -> Result<(f64, f64)> {
        let shot = self.shoot(theta, theta1)?;
        Ok((-shot.p0, shot.p1))
    }

    /// The two independent estimates of ∂12 h at one point:
    /// a centered difference of ∂1 h in θ1, and -1/(∂Q1/∂P0) from the flow
    /// Jacobian. Their agreement couples the shooting and variational paths.
    pub fn d12_estimates(&self, theta: f64, theta1: f64) -> Result<(f64, f64)> {
        let e = 1e-5;
        self.check_band(theta1 + e - theta)?;
        self.check_band(theta1 - e - theta)?;
        let plus = self.shoot(theta, theta1 + e)?;
        let minus = self.shoot(theta, theta1 - e)?;
        let fd = (-plus.p0 + minus.p0) / (2.0 * e);
        let center = self.shoot(theta, theta1)?;
        Ok((fd, center.d12()))
    }

    /// Sweep ∂12 h over an n_theta × n_inc grid covering `window` of the band
    /// (fraction of the half-width, symmetric). Fails if the two estimators
    /// disagree beyond 1e-3 relative anywhere.
    pub fn legendre_diagnostic(&self, n_theta: usize, n_inc: usize, window: f64) -> Result<LegendreReport> {
        let (lo, hi) = self.band();
        let half = window.clamp(0.05, 0.999) * 0.5 * (hi - lo);
        let mid = 0.5 * (lo + hi);
        let mut d12_min = f64::INFINITY;
        let mut d12_max = f64::NEG_INFINITY;
        let mut max_rel_gap = 0.0_f64;
        let n_theta = n_theta.max(2);
        let n_inc = n_inc.max(2);
        for it in 0..n_theta {
            let theta = it as f64 / n_theta as f64;
            for ii in 0..n_inc {
                let inc = mid - half + 2.0 * half * ii as f64 / (n_inc - 1) as f64;
                let (fd, jac) = self.d12_estimates(theta, theta + inc)?;
                let gap = (fd - jac).abs() / jac.abs().max(1e-12);
                if gap > 1e-3 {
                    return Err(Error::DiagnosticGap {
                        what: format!("d12 estimates at (theta={theta}, inc={inc}): fd={fd}, jacobian={jac}"),
                        gap,
                        limit: 1e-3,
                    });
                }
                max_rel_gap = max_rel_gap.max(gap);
                d12_min = d12_min.min(jac);
                d12_max = d12_max.max(jac);
            }
        }
        Ok(LegendreReport {
            nodes: n_theta * n_inc,
            d12_min,
            d12_max,
            beta: 1.0 / (-d12_min),
            max_rel_gap,
        })
    }

    /// Sample the h-surface for export: (θ, θ1, h, ∂1h, ∂2h, ∂12h).
    pub fn surface(&self, n_theta: usize, n_inc: usize, window: f64) -> Result<Vec<SurfaceRow>> {
        let (lo, hi) = self.band();
        let half = window.clamp(0.05, 0.999) * 0.5 * (hi - lo);
        let mid = 0.5 * (lo + hi);
        let n_theta = n_theta.max(2);
        let n_inc = n_inc.max(2);
        let mut rows = Vec::with_capacity(n_theta * n_inc);
        for it in 0..n_theta {
            let theta = it as f64 / n_theta as f64;
            for ii in 0..n_inc {
                let inc = mid - half + 2.0 * half * ii as f64 / (n_inc - 1) as f64;
                let shot = self.shoot_cached(theta, theta + inc)?;
                rows.push(SurfaceRow {
                    theta,
                    theta1: theta + inc,
                    h: shot.action,
                    d1h: -shot.p0,
                    d2h: shot.p1,
                    d12h: shot.d12(),
                });
            }
        }
        Ok(rows)
    }
}
