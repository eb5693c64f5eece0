//! Discrete minimal-orbit machinery over the factor decomposition.
//!
//! A configuration assigns a lifted position θ_i to every factor boundary,
//! with the periodic closure θ_{i+bN} = θ_i + a: winding a cylinder units over
//! b map periods of N factors each. The configuration is stationary when the
//! momenta match across every site,
//!
//! ```text
//! ∂2 h_{i-1}(θ_{i-1}, θ_i) + ∂1 h_i(θ_i, θ_{i+1}) = 0,
//! ```
//!
//! i.e. the arrival momentum of one segment equals the launch momentum of the
//! next; such configurations are genuine orbits of the composed factor maps.
//! Minimization runs Gauss–Seidel site sweeps, each site solved by
//! safeguarded Newton on the monotone site equation (monotone because
//! ∂12 h < 0 under the factor twist), with multistart over shifted uniform
//! initializations and least action as the tie-break.
//!
//! Keeping the sites at factor level rather than working with the composed
//! variational principle makes the stationarity equations directly solvable
//! and the resulting orbit directly checkable against the flow.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::genfun::GeneratingFunction;
use crate::model::{ModelSpec, PhasePoint};
use crate::poincare::{factor_family, CylinderMap, FactorMap, TwistFactor};
use crate::{Error, Result};

/// The factor maps of one period together with their generating functions.
pub struct FactorChain<'a> {
    spec: &'a ModelSpec,
    factors: Vec<TwistFactor>,
    gfs: Vec<GeneratingFunction<'a>>,
    flow_tol: f64,
}

impl<'a> FactorChain<'a> {
    pub fn new(spec: &'a ModelSpec, n: usize, shoot_tol: f64, integ_tol: f64) -> Result<Self> {
        let factors = factor_family(spec, n)?;
        let gfs = factors
            .iter()
            .map(|f| GeneratingFunction::new(spec, *f, shoot_tol, integ_tol))
            .collect();
        Ok(FactorChain { spec, factors, gfs, flow_tol: integ_tol })
    }

    pub fn with_defaults(spec: &'a ModelSpec, n: usize) -> Result<Self> {
        FactorChain::new(spec, n, 1e-12, 1e-12)
    }

    pub fn spec(&self) -> &ModelSpec {
        self.spec
    }

    /// Number of factors N.
    pub fn n_factors(&self) -> usize {
        self.factors.len()
    }

    pub fn t_period(&self) -> f64 {
        self.spec.t_period()
    }

    pub fn factor(&self, i: usize) -> &TwistFactor {
        &self.factors[i % self.factors.len()]
    }

    /// Generating function of segment i (factor index i mod N).
    pub fn gf(&self, i: usize) -> &GeneratingFunction<'a> {
        &self.gfs[i % self.gfs.len()]
    }

    pub fn factor_map(&self, i: usize) -> FactorMap<'a> {
        FactorMap::new(self.spec, *self.factor(i), self.flow_tol)
    }
}

/// Periodic configuration of factor-boundary positions.
#[derive(Debug, Clone, Serialize)]
pub struct PeriodicConfiguration {
    /// Winding a in cylinder units over the full closure.
    pub winding: i64,
    /// Period b in map periods.
    pub periods: u32,
    /// Sites θ_0 .. θ_{bN-1} on the lift.
    pub sites: Vec<f64>,
}

impl PeriodicConfiguration {
    pub fn uniform(n_factors: usize, winding: i64, periods: u32, theta0: f64) -> Self {
        let n = n_factors * periods as usize;
        let inc = winding as f64 / n as f64;
        PeriodicConfiguration {
            winding,
            periods,
            sites: (0..n).map(|i| theta0 + inc * i as f64).collect(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Rotation number per map period.
    pub fn rotation(&self) -> f64 {
        self.winding as f64 / self.periods as f64
    }

    /// Lifted site for any index, via the closure θ_{i+bN} = θ_i + a.
    pub fn site(&self, i: i64) -> f64 {
        let n = self.sites.len() as i64;
        let wrap = i.div_euclid(n);
        self.sites[i.rem_euclid(n) as usize] + (wrap * self.winding) as f64
    }

    /// The translate (p, q): sites θ_{i+qN} - p, with q in map periods.
    pub fn translated(&self, p: i64, q_map: i64, n_factors: usize) -> Self {
        let shift = q_map * n_factors as i64;
        PeriodicConfiguration {
            winding: self.winding,
            periods: self.periods,
            sites: (0..self.sites.len() as i64).map(|i| self.site(i + shift) - p as f64).collect(),
        }
    }

    /// Shift all sites by an integer so that θ_0 lands in [0, 1).
    fn normalized(mut self) -> Self {
        let shift = self.sites[0].floor();
        for s in &mut self.sites {
            *s -= shift;
        }
        self
    }
}

/// A stationary configuration together with its orbit data.
#[derive(Debug, Clone, Serialize)]
pub struct MatherOrbit {
    pub config: PeriodicConfiguration,
    /// Momenta r_i = -∂1 h_i(θ_i, θ_{i+1}): the launch momentum of segment i.
    pub momenta: Vec<f64>,
    /// Total action Σ h_i(θ_i, θ_{i+1}) over the closure.
    pub action: f64,
    /// max_i |∂2 h_{i-1} + ∂1 h_i| at the accepted configuration.
    pub residual: f64,
    /// Rotation number a/b per map period.
    pub rotation: f64,
    /// Band clamps performed during the sweeps.
    pub clamps: usize,
    /// Action spread max - min across the successful multistarts; large values
    /// flag competing stationary configurations (expected near resonance
    /// boundaries) and are reported, not interpreted.
    pub multistart_spread: f64,
}

impl MatherOrbit {
    /// Orbit points (θ_i, r_i) on the lift.
    pub fn points(&self) -> impl Iterator<Item = PhasePoint> + '_ {
        self.config.sites.iter().zip(&self.momenta).map(|(&q, &p)| PhasePoint::new(q, p))
    }
}

/// Options for the site-sweep minimization.
#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    /// Stationarity target for max_i |site residual|.
    pub residual_tol: f64,
    pub max_sweeps: usize,
    /// Number of shifted uniform initializations.
    pub multistart: usize,
    /// Seed for shuffling the multistart order.
    pub seed: u64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { residual_tol: 1e-9, max_sweeps: 3000, multistart: 4, seed: 0 }
    }
}

fn admissible_rotation(chain: &FactorChain, winding: i64, periods: u32) -> Result<()> {
    if periods == 0 {
        return Err(Error::invalid("period count b must be at least 1"));
    }
    let omega = winding as f64 / periods as f64;
    let t_period = chain.t_period();
    if omega.abs() >= t_period {
        return Err(Error::RotationRange { omega, t_period });
    }
    Ok(())
}

/// Total action of a configuration. Band violations name the offending segment.
pub fn action(chain: &FactorChain, config: &PeriodicConfiguration) -> Result<f64> {
    let n = config.n_sites();
    let mut total = 0.0;
    for i in 0..n {
        let theta = config.site(i as i64);
        let theta1 = config.site(i as i64 + 1);
        total += chain.gf(i).value(theta, theta1).map_err(|e| {
            Error::invalid(format!("segment {i} (factor {}): {e}", i % chain.n_factors()))
        })?;
    }
    Ok(total)
}

/// One stationarity pass: per-site residuals and both one-sided momenta.
/// Returns (max residual, launch momenta per segment, total action).
fn stationarity_pass(
    chain: &FactorChain,
    config: &PeriodicConfiguration,
    guesses: &mut [f64],
) -> Result<(f64, Vec<f64>, f64)> {
    let n = config.n_sites();
    let mut launch = vec![0.0; n];
    let mut arrive = vec![0.0; n];
    let mut total = 0.0;
    for i in 0..n {
        let theta = config.site(i as i64);
        let theta1 = config.site(i as i64 + 1);
        let shot = chain.gf(i).shoot_with_guess(theta, theta1, Some(guesses[i]))?;
        guesses[i] = shot.p0;
        launch[i] = shot.p0;
        arrive[i] = shot.p1;
        total += shot.action;
    }
    let mut residual = 0.0_f64;
    for (i, &p0) in launch.iter().enumerate() {
        let prev = (i + n - 1) % n;
        residual = residual.max((arrive[prev] - p0).abs());
    }
    Ok((residual, launch, total))
}

struct SiteSolver<'a, 'b> {
    chain: &'a FactorChain<'b>,
    config: PeriodicConfiguration,
    /// Launch-momentum warm starts per segment.
    guesses: Vec<f64>,
    clamps: usize,
}

impl<'a, 'b> SiteSolver<'a, 'b> {
    /// Site equation F(x) = ∂2 h_{i-1}(θ_{i-1}, x) + ∂1 h_i(x, θ_{i+1})
    /// and its derivative; F is increasing in x.
    fn site_eq(&mut self, i: usize, x: f64) -> Result<(f64, f64)> {
        let n = self.config.n_sites();
        let prev_idx = (i + n - 1) % n;
        let theta_prev = self.config.site(i as i64 - 1);
        let theta_next = self.config.site(i as i64 + 1);
        let seg_in = self.chain.gf(prev_idx).shoot_with_guess(theta_prev, x, Some(self.guesses[prev_idx]))?;
        self.guesses[prev_idx] = seg_in.p0;
        let seg_out = self.chain.gf(i).shoot_with_guess(x, theta_next, Some(self.guesses[i]))?;
        self.guesses[i] = seg_out.p0;
        Ok((seg_in.p1 - seg_out.p0, seg_in.d22() + seg_out.d11()))
    }

    /// Solve site i by safeguarded Newton on the bracket carved out of the
    /// two adjacent shooting bands; returns the pre-solve residual |F(x_old)|.
    /// Stops on the site tolerance, a collapsed bracket, or stall at the
    /// shooting noise floor.
    fn solve_site(&mut self, i: usize, site_tol: f64) -> Result<f64> {
        let theta_prev = self.config.site(i as i64 - 1);
        let theta_next = self.config.site(i as i64 + 1);
        let n = self.config.n_sites();
        let band_in = self.chain.gf((i + n - 1) % n).band();
        let band_out = self.chain.gf(i).band();
        let pad = 1e-9;
        let lo_edge = (theta_prev + band_in.0).max(theta_next - band_out.1) + pad;
        let hi_edge = (theta_prev + band_in.1).min(theta_next - band_out.0) - pad;
        if !(lo_edge < hi_edge) {
            return Err(Error::invalid(format!(
                "site {i}: neighbors {theta_prev} and {theta_next} leave no admissible position"
            )));
        }
        let mut x = self.config.sites[i];
        if x <= lo_edge || x >= hi_edge {
            x = 0.5 * (lo_edge + hi_edge);
            self.clamps += 1;
        }
        let (mut f, mut df) = self.site_eq(i, x)?;
        let first_residual = f.abs();
        let mut best = (f.abs(), x);
        // Monotone bracket.
        let mut lo = if f <= 0.0 { x } else { lo_edge };
        let mut hi = if f >= 0.0 { x } else { hi_edge };
        for _ in 0..16 {
            if f.abs() <= site_tol || (hi - lo).abs() < 1e-15 * (1.0 + x.abs()) {
                break;
            }
            let newton = x - f / df;
            let next = if df > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() < 1e-13 * (1.0 + x.abs()) {
                break;
            }
            x = next;
            let (f2, df2) = self.site_eq(i, x)?;
            let stalled = f2.abs() > 0.5 * f.abs();
            f = f2;
            df = df2;
            if f <= 0.0 {
                lo = lo.max(x);
            }
            if f >= 0.0 {
                hi = hi.min(x);
            }
            if f.abs() < best.0 {
                best = (f.abs(), x);
            }
            if stalled && f.abs() > site_tol {
                // Noise floor of the underlying shooting; keep the best trial.
                x = best.1;
                break;
            }
        }
        self.config.sites[i] = x;
        Ok(first_residual)
    }

    fn run(mut self, opts: &MinimizeOptions) -> Result<(PeriodicConfiguration, usize, usize)> {
        let n = self.config.n_sites();
        let site_tol = 0.2 * opts.residual_tol;
        let mut last_residual = f64::INFINITY;
        for sweep in 0..opts.max_sweeps {
            let mut pre_residual = 0.0_f64;
            for i in 0..n {
                pre_residual = pre_residual.max(self.solve_site(i, site_tol)?);
            }
            if pre_residual <= opts.residual_tol {
                // The pre-solve residual lags one sweep; confirm on the
                // configuration actually returned.
                let (true_residual, _, _) =
                    stationarity_pass(self.chain, &self.config, &mut self.guesses)?;
                last_residual = true_residual;
                if true_residual <= opts.residual_tol {
                    return Ok((self.config, sweep + 1, self.clamps));
                }
            }
        }
        if last_residual.is_finite() {
            // Sweeps exhausted at the noise floor of the site solves; accept
            // if within an order of magnitude of the target.
            if last_residual <= 10.0 * opts.residual_tol {
                return Ok((self.config, opts.max_sweeps, self.clamps));
            }
            return Err(Error::NonConvergence { sweeps: opts.max_sweeps, residual: last_residual });
        }
        let (residual, _, _) = stationarity_pass(self.chain, &self.config, &mut self.guesses)?;
        Err(Error::NonConvergence { sweeps: opts.max_sweeps, residual })
    }
}

/// Minimize the (a, b) action over the factor chain. `init` overrides the
/// multistart with a caller-supplied configuration (site count must be b·N).
pub fn minimize(
    chain: &FactorChain,
    winding: i64,
    periods: u32,
    init: Option<Vec<f64>>,
    opts: &MinimizeOptions,
) -> Result<MatherOrbit> {
    admissible_rotation(chain, winding, periods)?;
    let n_factors = chain.n_factors();
    let n_sites = n_factors * periods as usize;

    let starts: Vec<PeriodicConfiguration> = match init {
        Some(sites) => {
            if sites.len() != n_sites {
                return Err(Error::invalid(format!(
                    "initial configuration has {} sites, expected b·N = {n_sites}",
                    sites.len()
                )));
            }
            vec![PeriodicConfiguration { winding, periods, sites }]
        }
        None => {
            let mut offsets: Vec<f64> =
                (0..opts.multistart.max(1)).map(|j| j as f64 / opts.multistart.max(1) as f64).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            offsets.shuffle(&mut rng);
            offsets
                .into_iter()
                .map(|theta0| PeriodicConfiguration::uniform(n_factors, winding, periods, theta0))
                .collect()
        }
    };

    let runs: Vec<Result<MatherOrbit>> = starts
        .into_par_iter()
        .map(|config| {
            let inc = winding as f64 / n_sites as f64;
            let free_guess = {
                let len = chain.factor(0).len;
                inc / (len * len - inc * inc).max(1e-30).sqrt()
            };
            let solver = SiteSolver {
                chain,
                config,
                guesses: vec![free_guess; n_sites],
                clamps: 0,
            };
            let (config, _sweeps, clamps) = solver.run(opts)?;
            let mut guesses = vec![free_guess; n_sites];
            let (residual, momenta, total) = stationarity_pass(chain, &config, &mut guesses)?;
            Ok(MatherOrbit {
                rotation: config.rotation(),
                config: config.normalized(),
                momenta,
                action: total,
                residual,
                clamps,
                multistart_spread: 0.0,
            })
        })
        .collect();

    let mut best: Option<MatherOrbit> = None;
    let mut first_err: Option<Error> = None;
    let mut action_range: Option<(f64, f64)> = None;
    for run in runs {
        match run {
            Ok(orbit) => {
                action_range = Some(match action_range {
                    None => (orbit.action, orbit.action),
                    Some((lo, hi)) => (lo.min(orbit.action), hi.max(orbit.action)),
                });
                best = Some(match best.take() {
                    None => orbit,
                    Some(cur) => {
                        // Least action wins; ties go to the smaller θ_0.
                        if orbit.action < cur.action - 1e-12
                            || ((orbit.action - cur.action).abs() <= 1e-12
                                && orbit.config.sites[0] < cur.config.sites[0])
                        {
                            orbit
                        } else {
                            cur
                        }
                    }
                });
            }
            Err(e) => {
                if first_err.is_none() {
                    first_err = Some(e);
                }
            }
        }
    }
    best.map(|mut orbit| {
        if let Some((lo, hi)) = action_range {
            orbit.multistart_spread = hi - lo;
        }
        orbit
    })
    .ok_or_else(|| first_err.expect("no runs attempted"))
}

/// Flow-level verification of a stationary configuration.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReconstructionReport {
    /// max over sites of the max-norm mismatch between the factor-map image
    /// of (θ_i, r_i) and (θ_{i+1}, r_{i+1}).
    pub max_mismatch: f64,
    /// Lift advance defect over the full closure: |q(b periods) - θ_0 - a|.
    pub winding_defect: f64,
}

/// Push every orbit point through its factor map and measure the mismatch
/// with the next point; then push sequentially through all b·N factors and
/// measure the winding defect.
pub fn reconstruct_orbit(chain: &FactorChain, orbit: &MatherOrbit) -> Result<ReconstructionReport> {
    let n = orbit.config.n_sites();
    let mut max_mismatch = 0.0_f64;
    for i in 0..n {
        let z = PhasePoint::new(orbit.config.site(i as i64), orbit.momenta[i]);
        let image = chain.factor_map(i).apply(z)?;
        let target_q = orbit.config.site(i as i64 + 1);
        let target_p = orbit.momenta[(i + 1) % n];
        max_mismatch = max_mismatch.max((image.q - target_q).abs()).max((image.p - target_p).abs());
    }
    let mut z = PhasePoint::new(orbit.config.sites[0], orbit.momenta[0]);
    for i in 0..n {
        z = chain.factor_map(i).apply(z)?;
    }
    let winding_defect = (z.q - orbit.config.sites[0] - orbit.config.winding as f64).abs();
    Ok(ReconstructionReport { max_mismatch, winding_defect })
}

/// Site-wise order relation between a configuration and one of its translates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparability {
    /// Translate strictly below the original.
    Below,
    Equal,
    /// Translate strictly above the original.
    Above,
    /// Order violated; first crossing site.
    Crossing { site: usize },
}

/// Compare the translate (p, q·N) of the orbit configuration against the
/// original, site by site over one closure period.
pub fn comparability(
    config: &PeriodicConfiguration,
    p: i64,
    q_map: i64,
    n_factors: usize,
    tol: f64,
) -> Comparability {
    let translate = config.translated(p, q_map, n_factors);
    let mut first_sign = 0i8;
    for i in 0..config.n_sites() {
        let d = translate.sites[i] - config.sites[i];
        let sign = if d > tol {
            1i8
        } else if d < -tol {
            -1i8
        } else {
            0i8
        };
        if sign != 0 {
            if first_sign == 0 {
                first_sign = sign;
            } else if sign != first_sign {
                return Comparability::Crossing { site: i };
            }
        }
    }
    match first_sign {
        0 => Comparability::Equal,
        1 => Comparability::Above,
        _ => Comparability::Below,
    }
}

// ---------------------------------------------------------------------------
// Rotation numbers
// ---------------------------------------------------------------------------

/// Rotation-number estimate with a crude error bar.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RotationEstimate {
    /// Smooth-window weighted average of the lift increments.
    pub omega: f64,
    /// |full-window estimate - half-window estimate|.
    pub error_bar: f64,
    /// Plain (θ_n - θ_0)/n for cross-checking.
    pub naive: f64,
}

fn birkhoff_weight(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        0.0
    } else {
        (-1.0 / (s * (1.0 - s))).exp()
    }
}

/// Weighted Birkhoff average of a sequence of lift increments.
pub fn rotation_number_increments(increments: &[f64]) -> RotationEstimate {
    let weighted = |inc: &[f64]| -> f64 {
        let n = inc.len();
        let mut num = 0.0;
        let mut den = 0.0;
        for (k, &d) in inc.iter().enumerate() {
            let w = birkhoff_weight((k as f64 + 0.5) / n as f64);
            num += w * d;
            den += w;
        }
        num / den
    };
    let omega = weighted(increments);
    let half = weighted(&increments[..(increments.len() / 2).max(1)]);
    let naive = increments.iter().sum::<f64>() / increments.len() as f64;
    RotationEstimate { omega, error_bar: (omega - half).abs(), naive }
}

/// Iterate a cylinder map and estimate the rotation number of the orbit of z0.
pub fn rotation_number_map(map: &dyn CylinderMap, z0: PhasePoint, n_iter: usize) -> Result<RotationEstimate> {
    if n_iter < 1000 {
        return Err(Error::invalid(format!("rotation estimates need at least 1000 iterates, got {n_iter}")));
    }
    let mut increments = Vec::with_capacity(n_iter);
    let mut z = z0;
    for _ in 0..n_iter {
        let next = map.apply(z)?;
        increments.push(next.q - z.q);
        z = next;
    }
    Ok(rotation_number_increments(&increments))
}

// ---------------------------------------------------------------------------
// Hull functions
// ---------------------------------------------------------------------------

/// Sampled hull pair (φ, η) of a rational minimal orbit: φ conjugates the
/// orbit to the rigid rotation by ω = a/b on the lattice Σ = (1/b)·Z, extended
/// to a left-continuous staircase; η carries the matching momenta.
#[derive(Debug, Clone, Serialize)]
pub struct HullFunctions {
    pub winding: i64,
    pub periods: u32,
    /// Rotation number per map period.
    pub omega: f64,
    /// Sample abscissae on [0, 1).
    pub xi: Vec<f64>,
    pub phi: Vec<f64>,
    pub eta: Vec<f64>,
    /// Convexity surrogate α used in the Lipschitz-type check.
    pub alpha_surrogate: f64,
    /// Map-level orbit positions Θ_j = θ_{jN}, j = 0..b-1.
    map_sites: Vec<f64>,
    /// Map-level momenta R_j = r_{jN}.
    map_momenta: Vec<f64>,
}

/// Certificates extracted from a hull sample.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct HullCertificates {
    pub phi_monotone: bool,
    /// max |φ(ξ+1) - φ(ξ) - 1| over the grid.
    pub phi_shift_defect: f64,
    /// max |η(ξ+1) - η(ξ)| over the grid.
    pub eta_shift_defect: f64,
    /// Grid pairs s > t violating |η(s)-η(t)| <= α (φ(s)-φ(t)).
    pub lips_violations: usize,
    /// Total variation of η over one period.
    pub eta_total_variation: f64,
}

fn mod_inverse(a: i64, b: i64) -> i64 {
    // Extended Euclid on (a mod b, b); gcd must be 1.
    let (mut old_r, mut r) = (a.rem_euclid(b), b);
    let (mut old_s, mut s) = (1i64, 0i64);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "inverse requires gcd(a, b) = 1");
    old_s.rem_euclid(b)
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl HullFunctions {
    /// Evaluate (φ, η) at any real t via the lattice representation
    /// t -> d/b with d = ⌈bt⌉ and the closure arithmetic.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let b = self.periods as i64;
        let a = self.winding;
        let bt = t * b as f64;
        let rounded = bt.round();
        let d = if (bt - rounded).abs() < 1e-9 { rounded as i64 } else { bt.ceil() as i64 };
        let j = if b == 1 { 0 } else { (d.rem_euclid(b) * mod_inverse(a, b)).rem_euclid(b) };
        // k solves j·a - k·b = d exactly.
        let k = (j * a - d) / b;
        debug_assert_eq!(j * a - k * b, d);
        (self.map_sites[j as usize] - k as f64, self.map_momenta[j as usize])
    }

    pub fn certificates(&self) -> HullCertificates {
        let n = self.xi.len();
        let mut monotone = true;
        for w in self.phi.windows(2) {
            if w[1] < w[0] {
                monotone = false;
            }
        }
        // Wrap-around monotonicity through the shift identity.
        if self.phi[0] + 1.0 < self.phi[n - 1] {
            monotone = false;
        }
        let mut phi_shift_defect = 0.0_f64;
        let mut eta_shift_defect = 0.0_f64;
        for (i, &xi) in self.xi.iter().enumerate() {
            let (phi1, eta1) = self.eval(xi + 1.0);
            phi_shift_defect = phi_shift_defect.max((phi1 - self.phi[i] - 1.0).abs());
            eta_shift_defect = eta_shift_defect.max((eta1 - self.eta[i]).abs());
        }
        let slack = 1e-12 * (1.0 + self.alpha_surrogate);
        let mut lips_violations = 0;
        for s in 0..n {
            for t in 0..s {
                let dphi = self.phi[s] - self.phi[t];
                if (self.eta[s] - self.eta[t]).abs() > self.alpha_surrogate * dphi + slack {
                    lips_violations += 1;
                }
            }
        }
        let eta_total_variation = self.eta.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        HullCertificates {
            phi_monotone: monotone,
            phi_shift_defect,
            eta_shift_defect,
            lips_violations,
            eta_total_variation,
        }
    }
}

/// Convexity surrogate: the largest of sup ∂11 h and sup ∂22 h over every
/// factor, sampled on a window of increments around those the orbit uses.
pub fn alpha_surrogate(chain: &FactorChain, orbit: &MatherOrbit) -> Result<f64> {
    let n = orbit.config.n_sites();
    let mut inc_min = f64::INFINITY;
    let mut inc_max = f64::NEG_INFINITY;
    for i in 0..n {
        let inc = orbit.config.site(i as i64 + 1) - orbit.config.site(i as i64);
        inc_min = inc_min.min(inc);
        inc_max = inc_max.max(inc);
    }
    let mut alpha = 0.0_f64;
    for f in 0..chain.n_factors() {
        let gf = chain.gf(f);
        let (blo, bhi) = gf.band();
        let margin = 0.05 * (bhi - blo);
        let lo = (inc_min - margin).max(blo + margin);
        let hi = (inc_max + margin).min(bhi - margin);
        for it in 0..5 {
            let theta = it as f64 / 5.0;
            for ii in 0..7 {
                let inc = lo + (hi - lo) * ii as f64 / 6.0;
                let shot = gf.shoot(theta, theta + inc)?;
                alpha = alpha.max(shot.d11()).max(shot.d22());
            }
        }
    }
    Ok(alpha)
}

/// Build the hull functions of a rational minimal orbit on a uniform grid
/// over [0, 1). Requires gcd(a, b) = 1.
pub fn hull_functions(chain: &FactorChain, orbit: &MatherOrbit, grid_size: usize) -> Result<HullFunctions> {
    let a = orbit.config.winding;
    let b = orbit.config.periods as i64;
    if gcd(a, b) != 1 {
        return Err(Error::invalid(format!("hull construction needs gcd(a, b) = 1, got ({a}, {b})")));
    }
    if grid_size < 2 {
        return Err(Error::invalid("hull grid needs at least 2 samples"));
    }
    let n_factors = chain.n_factors();
    let map_sites: Vec<f64> = (0..b).map(|j| orbit.config.sites[j as usize * n_factors]).collect();
    let map_momenta: Vec<f64> = (0..b).map(|j| orbit.momenta[j as usize * n_factors]).collect();
    let alpha = alpha_surrogate(chain, orbit)?;
    let mut hull = HullFunctions {
        winding: a,
        periods: orbit.config.periods,
        omega: orbit.config.rotation(),
        xi: (0..grid_size).map(|m| m as f64 / grid_size as f64).collect(),
        phi: Vec::with_capacity(grid_size),
        eta: Vec::with_capacity(grid_size),
        alpha_surrogate: alpha,
        map_sites,
        map_momenta,
    };
    for m in 0..grid_size {
        let (phi, eta) = hull.eval(m as f64 / grid_size as f64);
        hull.phi.push(phi);
        hull.eta.push(eta);
    }
    Ok(hull)
}
