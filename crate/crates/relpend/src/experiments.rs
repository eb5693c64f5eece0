//! End-to-end demonstrations at desk scale.
//!
//! Three headline behaviors of the model, each consumed as an empirical
//! target rather than re-proved: bounded momentum under zero-mean forcing,
//! escape to infinite momentum under nonzero-mean forcing, and subharmonic /
//! quasi-periodic solutions built from minimal orbits of the factor
//! decomposition. The reports say what was measured and at what budget; the
//! sweep budgets are configurable and sized for minutes-scale runs.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::flow::{self, SystemId};
use crate::mather::{
    minimize, rotation_number_increments, FactorChain, MatherOrbit, MinimizeOptions,
    RotationEstimate,
};
use crate::model::{ModelSpec, PhasePoint};
use crate::poincare::{minimal_factor_count, CylinderMap, PoincareMap};
use crate::{Error, Result};

// ---------------------------------------------------------------------------
// Bounded momentum
// ---------------------------------------------------------------------------

/// One orbit of the sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepOrbit {
    pub p0: f64,
    /// sup_n |p_n| - |p_0| over the completed iterates.
    pub excursion: f64,
    pub sup_abs_p: f64,
    pub iterates_done: usize,
    /// Failure annotation when the integration gave up; the sweep continues.
    pub failure: Option<String>,
}

/// Result of iterating the period map from a grid of initial momenta.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub q0: f64,
    pub n_periods: usize,
    pub bound: f64,
    pub orbits: Vec<SweepOrbit>,
    pub max_excursion: f64,
    pub failures: usize,
    pub pass: bool,
    pub wall_seconds: f64,
    pub note: String,
}

/// Iterate the period map `n_periods` times from each initial momentum and
/// record the excursion sup |p_n| - |p_0|. Requires zero-mean forcing: with a
/// mean the momentum escapes and the sweep would measure nothing.
pub fn boundedness_sweep(
    spec: &ModelSpec,
    p_grid: &[f64],
    q0: f64,
    n_periods: usize,
    bound: f64,
    tol: f64,
) -> Result<SweepReport> {
    if !spec.forcing.zero_mean() {
        return Err(Error::invalid(
            "the boundedness sweep requires zero-mean forcing (nonzero mean escapes)",
        ));
    }
    let start = Instant::now();
    let map = PoincareMap::new(spec, tol);
    let orbits: Vec<SweepOrbit> = p_grid
        .par_iter()
        .map(|&p0| {
            let mut z = PhasePoint::new(q0, p0);
            let mut sup = p0.abs();
            let mut done = 0;
            let mut failure = None;
            for _ in 0..n_periods {
                match map.apply(z) {
                    Ok(next) => {
                        z = next;
                        sup = sup.max(z.p.abs());
                        done += 1;
                    }
                    Err(e) => {
                        failure = Some(e.to_string());
                        break;
                    }
                }
            }
            SweepOrbit { p0, excursion: sup - p0.abs(), sup_abs_p: sup, iterates_done: done, failure }
        })
        .collect();
    let max_excursion = orbits.iter().map(|o| o.excursion).fold(0.0, f64::max);
    let failures = orbits.iter().filter(|o| o.failure.is_some()).count();
    Ok(SweepReport {
        q0,
        n_periods,
        bound,
        max_excursion,
        failures,
        pass: max_excursion < bound && failures == 0,
        orbits,
        wall_seconds: start.elapsed().as_secs_f64(),
        note: "empirical evidence of bounded momentum at the stated budget; the bound is a test budget, not a theorem constant".into(),
    })
}

/// Uniform momentum grid helper for the sweep.
pub fn momentum_grid(p_min: f64, p_max: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![p_min];
    }
    (0..count).map(|i| p_min + (p_max - p_min) * i as f64 / (count - 1) as f64).collect()
}

// ---------------------------------------------------------------------------
// Escape under nonzero-mean forcing
// ---------------------------------------------------------------------------

/// One level of the threshold scan.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EscapeScanLevel {
    pub p0: f64,
    /// min of sign(fbar)·ΔV over the level's iterates.
    pub min_increment: f64,
    pub all_above_half: bool,
    /// Sign changes of the increments (expected only below the threshold).
    pub sign_changes: usize,
}

/// One recorded state of the main escape orbit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EscapeSample {
    pub n: usize,
    pub q: f64,
    pub p: f64,
    /// Drift witness V = p - G(q).
    pub v: f64,
}

/// Escape diagnostics for nonzero-mean forcing.
#[derive(Debug, Clone, Serialize)]
pub struct EscapeReport {
    /// T·fbar, the asymptotic momentum gain per period.
    pub t_fbar: f64,
    /// Least tested p0 from which every increment clears T·|fbar|/2, with all
    /// larger tested levels clearing too.
    pub threshold: Option<f64>,
    pub scan: Vec<EscapeScanLevel>,
    pub main_p0: f64,
    pub samples: Vec<EscapeSample>,
    /// sign(fbar)·ΔV_n along the main orbit.
    pub increments: Vec<f64>,
    pub min_increment: f64,
    /// Least-squares slope of p_n against n.
    pub slope: f64,
    pub note: String,
}

/// Iterate the period map from p0 and measure the drift of V(q, p) = p - G(q),
/// whose per-period increment approaches T·fbar at large momentum. Also scans
/// smaller launch momenta to locate the empirical escape threshold.
pub fn escape_demo(
    spec: &ModelSpec,
    p0: f64,
    n_iter: usize,
    scan_levels: usize,
    tol: f64,
) -> Result<EscapeReport> {
    let fbar = spec.forcing.mean();
    if fbar == 0.0 {
        return Err(Error::invalid("the escape demonstration requires nonzero-mean forcing"));
    }
    if n_iter < 2 {
        return Err(Error::invalid("need at least 2 iterates"));
    }
    let sign = fbar.signum();
    let t_fbar = spec.t_period() * fbar;
    let half = t_fbar.abs() / 2.0;
    let map = PoincareMap::new(spec, tol);

    let run_level = |p_start: f64, iters: usize| -> Result<(Vec<EscapeSample>, Vec<f64>)> {
        let mut z = PhasePoint::new(0.0, sign * p_start.abs());
        // Drift witness, mirrored with the escape direction: the position
        // advances by ±T per period at large ±p, so the potential term that
        // telescopes against it flips sign with the mean.
        let value = |z: PhasePoint| z.p - sign * spec.potential.primitive(z.q);
        let mut samples = vec![EscapeSample { n: 0, q: z.q, p: z.p, v: value(z) }];
        let mut increments = Vec::with_capacity(iters);
        for n in 1..=iters {
            let next = map.apply(z)?;
            increments.push(sign * (value(next) - value(z)));
            z = next;
            samples.push(EscapeSample { n, q: z.q, p: z.p, v: value(z) });
        }
        Ok((samples, increments))
    };

    // Threshold scan on shorter orbits, from 0 up to the requested p0.
    let scan_iters = n_iter.min(50);
    let levels = momentum_grid(0.0, p0.abs(), scan_levels.max(2));
    let scan: Vec<EscapeScanLevel> = levels
        .par_iter()
        .map(|&level| -> Result<EscapeScanLevel> {
            let (_, inc) = run_level(level, scan_iters)?;
            let min_increment = inc.iter().copied().fold(f64::INFINITY, f64::min);
            let sign_changes = inc.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
            Ok(EscapeScanLevel { p0: level, min_increment, all_above_half: min_increment > half, sign_changes })
        })
        .collect::<Result<Vec<_>>>()?;
    // Smallest level from which every level upward clears the half bound.
    let mut threshold = None;
    for lvl in scan.iter().rev() {
        if lvl.all_above_half {
            threshold = Some(lvl.p0);
        } else {
            break;
        }
    }

    let (samples, increments) = run_level(p0, n_iter)?;
    let min_increment = increments.iter().copied().fold(f64::INFINITY, f64::min);
    // Least-squares slope of p_n on n.
    let n = samples.len() as f64;
    let mean_n = (samples.len() - 1) as f64 / 2.0;
    let mean_p = samples.iter().map(|s| s.p).sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for s in &samples {
        let dn = s.n as f64 - mean_n;
        num += dn * (s.p - mean_p);
        den += dn * dn;
    }
    Ok(EscapeReport {
        t_fbar,
        threshold,
        scan,
        main_p0: p0,
        samples,
        increments,
        min_increment,
        slope: num / den,
        note: "drift witness V(q,p) = p - sign(fbar)·G(q): with this orientation of the arguments the per-period increment identity holds and the increment approaches T·fbar at large momentum".into(),
    })
}

// ---------------------------------------------------------------------------
// Subharmonic certificates
// ---------------------------------------------------------------------------

/// A computed subharmonic solution of the second kind: X(t + bT) = X(t) + (a, 0).
#[derive(Debug, Clone, Serialize)]
pub struct SubharmonicCertificate {
    pub winding: i64,
    pub periods: u32,
    pub n_factors: usize,
    pub orbit: MatherOrbit,
    /// |X(bT) - X(0) - (a, 0)| in the max norm, along the forcing-shifted flow.
    pub translation_defect: f64,
    /// max_j |X(jL) - (θ_j, r_j)|: the flow against the factor-level orbit.
    pub factor_match: f64,
    /// Rotation estimate from the periodically extended configuration.
    pub rotation: RotationEstimate,
    /// Dense flow samples over [0, bT] for export.
    pub flow_samples: Vec<(f64, PhasePoint)>,
}

fn gcd64(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Build the (a, b) minimal orbit, launch the forcing-shifted flow from its
/// initial point, and verify the translation identity over b periods.
pub fn subharmonic_demo(
    spec: &ModelSpec,
    winding: i64,
    periods: u32,
    n_factors: Option<usize>,
    opts: &MinimizeOptions,
    tol: f64,
) -> Result<SubharmonicCertificate> {
    if gcd64(winding, periods as i64) != 1 {
        return Err(Error::invalid(format!(
            "winding and period must be coprime, got ({winding}, {periods})"
        )));
    }
    let n = n_factors.unwrap_or_else(|| minimal_factor_count(spec));
    let chain = FactorChain::with_defaults(spec, n)?;
    let orbit = minimize(&chain, winding, periods, None, opts)?;

    let t_period = spec.t_period();
    let len = t_period / n as f64;
    let total = periods as f64 * t_period;
    let z0 = PhasePoint::new(orbit.config.sites[0], orbit.momenta[0]);
    let run = flow::integrate_sampled(SystemId::Rpend4, spec, 0.0, total, z0, tol, 200)?;
    let end = run.state;
    let translation_defect = (end.q - z0.q - winding as f64).abs().max((end.p - z0.p).abs());

    // March factor by factor and compare against the discrete orbit.
    let mut factor_match = 0.0_f64;
    let n_sites = orbit.config.n_sites();
    for j in 0..n_sites {
        let z = PhasePoint::new(orbit.config.site(j as i64), orbit.momenta[j]);
        let at = flow::integrate(SystemId::Rpend4, spec, j as f64 * len, (j + 1) as f64 * len, z, tol)?.state;
        let target_q = orbit.config.site(j as i64 + 1);
        let target_p = orbit.momenta[(j + 1) % n_sites];
        factor_match = factor_match.max((at.q - target_q).abs()).max((at.p - target_p).abs());
    }

    let increments: Vec<f64> = (0..32)
        .map(|j| orbit.config.site(((j + 1) * n) as i64) - orbit.config.site((j * n) as i64))
        .collect();
    let rotation = rotation_number_increments(&increments);

    Ok(SubharmonicCertificate {
        winding,
        periods,
        n_factors: n,
        orbit,
        translation_defect,
        factor_match,
        rotation,
        flow_samples: run.samples,
    })
}

// ---------------------------------------------------------------------------
// Quasi-periodic approximation by convergents
// ---------------------------------------------------------------------------

/// One continued-fraction convergent of the target rotation number.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergentReport {
    pub k: usize,
    pub winding: i64,
    pub periods: u32,
    pub action: f64,
    pub residual: f64,
    /// Time-average slope Q(bT)/(bT) of the certificate flow.
    pub slope: f64,
    /// |slope - ω/T|.
    pub gap: f64,
    /// Approximation-quality budget 10/b².
    pub bound: f64,
}

/// Convergent-by-convergent approach to an irrational rotation number.
#[derive(Debug, Clone, Serialize)]
pub struct QuasiperiodicReport {
    pub omega_target: f64,
    /// ω/T, the limit of the time-average slopes.
    pub slope_target: f64,
    pub convergents: Vec<ConvergentReport>,
    /// Whether the continued fraction had further terms beyond the cap.
    pub truncated: bool,
    pub note: String,
}

/// Continued-fraction convergents of x with denominators capped at `cap`.
/// The boolean is true when the expansion terminated exactly (rational x).
fn convergents(x: f64, cap: u32) -> (Vec<(i64, u32)>, bool) {
    let mut out = Vec::new();
    let (mut h0, mut h1) = (1i64, x.floor() as i64);
    let (mut k0, mut k1) = (0i64, 1i64);
    let mut frac = x - x.floor();
    if k1 as u32 <= cap {
        out.push((h1, k1 as u32));
    }
    for _ in 0..64 {
        if frac.abs() < 1e-13 {
            return (out, true);
        }
        let inv = 1.0 / frac;
        let a = inv.floor() as i64;
        frac = inv - inv.floor();
        let h2 = a * h1 + h0;
        let k2 = a * k1 + k0;
        if k2 > cap as i64 {
            return (out, false);
        }
        out.push((h2, k2 as u32));
        (h0, h1) = (h1, h2);
        (k0, k1) = (k1, k2);
    }
    (out, false)
}

/// Approximate the quasi-periodic solution with target rotation ω by the
/// minimal orbits of its continued-fraction convergents. The output is
/// convergent-approximation evidence; the irrational limit itself is not
/// constructed.
pub fn quasiperiodic_demo(
    spec: &ModelSpec,
    omega: f64,
    cap: u32,
    n_factors: Option<usize>,
    opts: &MinimizeOptions,
    tol: f64,
) -> Result<QuasiperiodicReport> {
    let t_period = spec.t_period();
    if omega.abs() >= t_period {
        return Err(Error::RotationRange { omega, t_period });
    }
    let (list, exact) = convergents(omega, cap);
    if exact {
        return Err(Error::invalid(format!(
            "rotation target {omega} is rational at the working precision; use the subharmonic construction instead"
        )));
    }
    let n = n_factors.unwrap_or_else(|| minimal_factor_count(spec));
    let chain = FactorChain::with_defaults(spec, n)?;
    let mut rows = Vec::new();
    for (k, &(a, b)) in list.iter().enumerate() {
        if (a as f64 / b as f64).abs() >= t_period || (a == 0 && k + 1 < list.len()) {
            continue; // inadmissible or degenerate early convergent
        }
        let orbit = minimize(&chain, a, b, None, opts)?;
        let z0 = PhasePoint::new(orbit.config.sites[0], orbit.momenta[0]);
        let total = b as f64 * t_period;
        let end = flow::integrate(SystemId::Rpend4, spec, 0.0, total, z0, tol)?.state;
        let slope = (end.q - z0.q) / total;
        rows.push(ConvergentReport {
            k,
            winding: a,
            periods: b,
            action: orbit.action,
            residual: orbit.residual,
            slope,
            gap: (slope - omega / t_period).abs(),
            bound: 10.0 / (b as f64 * b as f64),
        });
    }
    Ok(QuasiperiodicReport {
        omega_target: omega,
        slope_target: omega / t_period,
        convergents: rows,
        truncated: !exact,
        note: "convergent-approximation evidence only; the irrational-limit construction is out of scope".into(),
    })
}

// ---------------------------------------------------------------------------
// Confinement diagnostic
// ---------------------------------------------------------------------------

/// Whether an orbit visits the central momentum band (-r_star, r_star).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConfinementVerdict {
    pub r_star: f64,
    pub pass: bool,
    pub first_inside: Option<usize>,
    pub max_abs_momentum: f64,
}

/// Scan the orbit momenta for a visit to the band; an accepted minimal orbit
/// that never enters indicates a minimization failure and is flagged, never
/// dropped.
pub fn confinement_check(orbit: &MatherOrbit, r_star: f64) -> ConfinementVerdict {
    let first_inside = orbit.momenta.iter().position(|r| r.abs() < r_star);
    ConfinementVerdict {
        r_star,
        pass: first_inside.is_some(),
        first_inside,
        max_abs_momentum: orbit.momenta.iter().fold(0.0_f64, |m, r| m.max(r.abs())),
    }
}
