//! The period map, its small-time factors, and the map-level diagnostics.
//!
//! Everything here acts on lifts: a cylinder map is represented by a plane map
//! equivariant under q -> q + S. The full period map is generally *not* twist;
//! twist enters only through the small-time factors, whose duration satisfies
//! L < π / sqrt(sup |g'|). All twist-dependent machinery (generating
//! functions, minimal orbits) runs on factors, never on the full map.

use rayon::prelude::*;
use serde::Serialize;

use crate::flow::{self, FlowResult, GridField, RemainderNorms, SystemId};
use crate::model::{Chart, ModelSpec, PhasePoint};
use crate::{Error, Result};

pub type Mat2 = [[f64; 2]; 2];

pub fn det2(m: &Mat2) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// A diffeomorphism of the cylinder seen through its lift.
///
/// The family of map variants (period map, small-time factor, scaled map)
/// lives behind this trait so diagnostics can be written once and selected at
/// runtime.
pub trait CylinderMap: Sync {
    /// Lift period in the position coordinate (S, or 1 after rescaling).
    fn period(&self) -> f64;

    /// Human-readable description for reports.
    fn descriptor(&self) -> String;

    /// Image of a lifted point.
    fn apply(&self, z: PhasePoint) -> Result<PhasePoint>;

    /// Image together with the derivative of the lift.
    fn apply_with_jacobian(&self, z: PhasePoint) -> Result<(PhasePoint, Mat2)>;
}

/// Time-T map of the full system in (q, p).
pub struct PoincareMap<'a> {
    spec: &'a ModelSpec,
    pub tol: f64,
}

impl<'a> PoincareMap<'a> {
    pub fn new(spec: &'a ModelSpec, tol: f64) -> Self {
        PoincareMap { spec, tol }
    }
}

impl CylinderMap for PoincareMap<'_> {
    fn period(&self) -> f64 {
        self.spec.s_period()
    }

    fn descriptor(&self) -> String {
        format!("period map of the full system (T = {})", self.spec.t_period())
    }

    fn apply(&self, z: PhasePoint) -> Result<PhasePoint> {
        Ok(flow::integrate(SystemId::Rpend1, self.spec, 0.0, self.spec.t_period(), z, self.tol)?.state)
    }

    fn apply_with_jacobian(&self, z: PhasePoint) -> Result<(PhasePoint, Mat2)> {
        let run = flow::integrate_variational(SystemId::Rpend1, self.spec, 0.0, self.spec.t_period(), z, self.tol)?;
        let jac = run.jacobian.expect("variational integration carries the Jacobian");
        Ok((run.state, jac))
    }
}

/// Convenience wrapper for the period map with Jacobian.
pub fn poincare_map(spec: &ModelSpec, z0: PhasePoint, tol: f64) -> Result<(PhasePoint, Mat2)> {
    PoincareMap::new(spec, tol).apply_with_jacobian(z0)
}

/// One small-time factor of the forcing-shifted flow: start time τ, duration
/// L, together with the class diagnostics it is constructed to satisfy.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TwistFactor {
    pub tau: f64,
    pub len: f64,
    /// Limit of Q1 - Q0 as P0 -> +∞.
    pub rho_plus: f64,
    /// Limit of Q1 - Q0 as P0 -> -∞.
    pub rho_minus: f64,
    /// Uniform bound on |P1 - P0| (duration times sup |g|).
    pub momentum_bound: f64,
    /// Grid-estimated infimum of ∂Q1/∂P0 over a working window, when measured.
    pub twist_margin: Option<f64>,
}

impl TwistFactor {
    /// Build a factor, enforcing the twist condition L < π / sqrt(sup |g'|)
    /// with the coefficient-sum bound for sup |g'| (the safe side: a larger
    /// bound only shortens L). Requires a unit position period; rescale first.
    pub fn new(spec: &ModelSpec, tau: f64, len: f64) -> Result<Self> {
        if !spec.unit_period() {
            return Err(Error::invalid(
                "twist factors presume a unit position period; rescale the model first",
            ));
        }
        if !(len > 0.0) {
            return Err(Error::invalid(format!("factor duration must be positive, got {len}")));
        }
        let sup_dg = spec.potential.sup_dg();
        if sup_dg > 0.0 {
            let bound = std::f64::consts::PI / sup_dg.sqrt();
            if len >= bound {
                return Err(Error::TwistBound { len, bound });
            }
        }
        Ok(TwistFactor {
            tau,
            len,
            rho_plus: len,
            rho_minus: -len,
            momentum_bound: len * spec.potential.sup_g(),
            twist_margin: None,
        })
    }
}

impl TwistFactor {
    /// Attach a measured twist margin (grid infimum of ∂Q1/∂P0 over a window).
    pub fn with_twist_margin(mut self, beta: f64) -> Self {
        self.twist_margin = Some(beta);
        self
    }
}

/// The equal-length factor family covering [0, T]: τ_i = i·T/N, L = T/N.
pub fn factor_family(spec: &ModelSpec, n: usize) -> Result<Vec<TwistFactor>> {
    if n == 0 {
        return Err(Error::invalid("the factor count N must be at least 1"));
    }
    let len = spec.t_period() / n as f64;
    (0..n).map(|i| TwistFactor::new(spec, i as f64 * len, len)).collect()
}

/// Smallest factor count N for which L = T/N satisfies the twist condition,
/// with a 10% safety margin on the duration.
pub fn minimal_factor_count(spec: &ModelSpec) -> usize {
    let sup_dg = spec.potential.sup_dg();
    if sup_dg == 0.0 {
        return 1;
    }
    let bound = std::f64::consts::PI / sup_dg.sqrt();
    (spec.t_period() / (0.9 * bound)).ceil().max(1.0) as usize
}

/// The map Π_{L,τ}: the forcing-shifted flow from time τ over duration L.
pub struct FactorMap<'a> {
    spec: &'a ModelSpec,
    pub factor: TwistFactor,
    pub tol: f64,
}

impl<'a> FactorMap<'a> {
    pub fn new(spec: &'a ModelSpec, factor: TwistFactor, tol: f64) -> Self {
        FactorMap { spec, factor, tol }
    }

    pub fn flow(&self, z: PhasePoint) -> Result<FlowResult> {
        flow::integrate(SystemId::Rpend4, self.spec, self.factor.tau, self.factor.tau + self.factor.len, z, self.tol)
    }
}

impl CylinderMap for FactorMap<'_> {
    fn period(&self) -> f64 {
        self.spec.s_period()
    }

    fn descriptor(&self) -> String {
        format!("factor map over [{}, {}]", self.factor.tau, self.factor.tau + self.factor.len)
    }

    fn apply(&self, z: PhasePoint) -> Result<PhasePoint> {
        Ok(self.flow(z)?.state)
    }

    fn apply_with_jacobian(&self, z: PhasePoint) -> Result<(PhasePoint, Mat2)> {
        let run = flow::integrate_variational(
            SystemId::Rpend4,
            self.spec,
            self.factor.tau,
            self.factor.tau + self.factor.len,
            z,
            self.tol,
        )?;
        Ok((run.state, run.jacobian.expect("variational integration carries the Jacobian")))
    }
}

/// Apply one factor map (the forcing-shifted flow over [τ, τ+L]).
pub fn factor_map(spec: &ModelSpec, factor: &TwistFactor, z0: PhasePoint, tol: f64) -> Result<PhasePoint> {
    FactorMap::new(spec, *factor, tol).apply(z0)
}

/// Period map of the scaled (u, v) system for a fixed δ.
pub struct ScaledMap<'a> {
    spec: &'a ModelSpec,
    pub delta: f64,
    pub tol: f64,
}

impl<'a> ScaledMap<'a> {
    pub fn new(spec: &'a ModelSpec, delta: f64, tol: f64) -> Self {
        ScaledMap { spec, delta, tol }
    }
}

impl CylinderMap for ScaledMap<'_> {
    fn period(&self) -> f64 {
        1.0
    }

    fn descriptor(&self) -> String {
        format!("scaled period map at delta = {}", self.delta)
    }

    fn apply(&self, z: PhasePoint) -> Result<PhasePoint> {
        Ok(flow::integrate(SystemId::Rpend2 { delta: self.delta }, self.spec, 0.0, self.spec.t_period(), z, self.tol)?
            .state)
    }

    fn apply_with_jacobian(&self, z: PhasePoint) -> Result<(PhasePoint, Mat2)> {
        let run = flow::integrate_variational(
            SystemId::Rpend2 { delta: self.delta },
            self.spec,
            0.0,
            self.spec.t_period(),
            z,
            self.tol,
        )?;
        Ok((run.state, run.jacobian.expect("variational integration carries the Jacobian")))
    }
}

/// Defect of lift equivariance at one point:
/// max-norm of map(q + S, p) - map(q, p) - (S, 0).
pub fn lift_equivariance_defect(map: &dyn CylinderMap, z: PhasePoint) -> Result<f64> {
    let s = map.period();
    let base = map.apply(z)?;
    let shifted = map.apply(PhasePoint::new(z.q + s, z.p))?;
    Ok((shifted.q - base.q - s).abs().max((shifted.p - base.p).abs()))
}

/// The twist derivative ∂Θ/∂r of a map at a point: the (1,2) entry of the lift Jacobian.
pub fn twist_derivative(map: &dyn CylinderMap, z: PhasePoint) -> Result<f64> {
    Ok(map.apply_with_jacobian(z)?.1[0][1])
}

// ---------------------------------------------------------------------------
// Factorization
// ---------------------------------------------------------------------------

/// Discrepancy between the period map and the composition of its factors.
#[derive(Debug, Clone, Serialize)]
pub struct CompositionReport {
    pub n_factors: usize,
    pub factor_len: f64,
    /// max over the grid of the max-norm discrepancy, compared in the
    /// forcing-shifted chart.
    pub max_discrepancy: f64,
    pub nodes: usize,
}

/// Verify that the period map equals the ordered composition of the factor
/// maps on a grid of (Q0, P0) points; the full map is computed from the
/// original system and carried into the forcing-shifted chart.
pub fn compose_factors(
    spec: &ModelSpec,
    n: usize,
    p_range: (f64, f64),
    grid: (usize, usize),
    tol: f64,
) -> Result<CompositionReport> {
    let factors = factor_family(spec, n)?;
    let t_period = spec.t_period();
    let s = spec.s_period();
    let (nq, np) = (grid.0.max(2), grid.1.max(2));
    let nodes: Vec<PhasePoint> = (0..nq * np)
        .map(|idx| {
            let iq = idx / np;
            let ip = idx % np;
            PhasePoint::new(
                s * iq as f64 / nq as f64,
                p_range.0 + (p_range.1 - p_range.0) * ip as f64 / (np - 1) as f64,
            )
        })
        .collect();
    let max_discrepancy = nodes
        .par_iter()
        .map(|&z0| -> Result<f64> {
            // Composition route.
            let mut z = z0;
            for factor in &factors {
                z = factor_map(spec, factor, z, tol)?;
            }
            // Direct route: the original flow carried through the chart.
            let (q0, p0) = Chart::Factor.from_qp(spec, 0.0, z0.q, z0.p);
            let direct = flow::integrate(SystemId::Rpend1, spec, 0.0, t_period, PhasePoint::new(q0, p0), tol)?.state;
            let (q1, p1) = Chart::Factor.to_qp(spec, t_period, direct.q, direct.p);
            Ok((z.q - q1).abs().max((z.p - p1).abs()))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(CompositionReport { n_factors: n, factor_len: t_period / n as f64, max_discrepancy, nodes: nq * np })
}

// ---------------------------------------------------------------------------
// Exactness loop integrals
// ---------------------------------------------------------------------------

/// Loop integral ∮ (P1 dQ1 - P0 dQ0) over the non-contractible circle
/// {p = p_level}, by the trapezoid rule on n equispaced points (spectrally
/// accurate for this smooth periodic integrand). Zero iff the 1-form is exact
/// along the circle; for the maps here exactness holds exactly when the
/// forcing has zero mean.
pub fn loop_exactness(map: &dyn CylinderMap, p_level: f64, n_samples: usize) -> Result<f64> {
    if n_samples < 512 {
        return Err(Error::invalid(format!("loop integrals need at least 512 samples, got {n_samples}")));
    }
    let s = map.period();
    let h = s / n_samples as f64;
    let image_integral = (0..n_samples)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let q = i as f64 * h;
            let (z1, jac) = map.apply_with_jacobian(PhasePoint::new(q, p_level))?;
            // dQ1/dθ along the loop is J11 since only q varies.
            Ok(z1.p * jac[0][0])
        })
        .try_reduce(|| 0.0, |a, b| Ok(a + b))?
        * h;
    Ok(image_integral - p_level * s)
}

/// Loop integral ∮ (P1 dQ1 - P0 dQ0) over a contractible ellipse around
/// `center`. By area preservation this vanishes up to quadrature and
/// integration error regardless of exactness.
pub fn contractible_loop_integral(
    map: &dyn CylinderMap,
    center: PhasePoint,
    rq: f64,
    rp: f64,
    n_samples: usize,
) -> Result<f64> {
    if n_samples < 512 {
        return Err(Error::invalid(format!("loop integrals need at least 512 samples, got {n_samples}")));
    }
    let h = std::f64::consts::TAU / n_samples as f64;
    let total = (0..n_samples)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let ang = i as f64 * h;
            let (sin, cos) = ang.sin_cos();
            let z = PhasePoint::new(center.q + rq * cos, center.p + rp * sin);
            let tangent = [-rq * sin, rp * cos];
            let (z1, jac) = map.apply_with_jacobian(z)?;
            let dq1 = jac[0][0] * tangent[0] + jac[0][1] * tangent[1];
            Ok(z1.p * dq1 - z.p * tangent[0])
        })
        .try_reduce(|| 0.0, |a, b| Ok(a + b))?;
    Ok(total * h)
}

// ---------------------------------------------------------------------------
// Scaled-map residuals and small-twist hypothesis report
// ---------------------------------------------------------------------------

/// Residuals of the scaled period map against its rigid-plus-shear normal form:
/// R1 = (2/δ²)(u1 - u0 - T) + T v0², R2 = (2/δ²)(v1 - v0).
#[derive(Debug, Clone, Serialize)]
pub struct ScaledResiduals {
    pub delta: f64,
    /// values[node] = [R1, R2] on the [0,1] × [1,3] grid.
    pub residuals: GridField,
    pub r1_norms: RemainderNorms,
    pub r2_norms: RemainderNorms,
}

/// Sample the scaled-map residuals on an nu × nv grid over [0,1] × [1,3].
/// This is the map-level view of the flow expansion remainder evaluated at
/// the period, so the two share one implementation.
pub fn scaled_map_residuals(
    spec: &ModelSpec,
    delta: f64,
    nu: usize,
    nv: usize,
    tol: f64,
) -> Result<ScaledResiduals> {
    let report = flow::expansion_remainder(spec, delta, nu, nv, tol)?;
    let r1_norms = report.remainder.component_norms(0);
    let r2_norms = report.remainder.component_norms(1);
    Ok(ScaledResiduals { delta, residuals: report.remainder, r1_norms, r2_norms })
}

/// One δ row of the hypothesis report.
#[derive(Debug, Clone, Serialize)]
pub struct MoserRow {
    pub delta: f64,
    pub r1_norms: RemainderNorms,
    pub r2_norms: RemainderNorms,
}

/// Diagnostics for the hypotheses of the small-twist invariant-curve theorem
/// applied to the scaled period map.
#[derive(Debug, Clone, Serialize)]
pub struct MoserReport {
    pub t_period: f64,
    /// α(r) = -(T/2) r² at the window endpoints r = 1 and r = 3.
    pub alpha_endpoints: (f64, f64),
    /// Range of |α'(r)| = T·r over the window [1, 3].
    pub alpha_prime_abs_range: (f64, f64),
    /// Smallest constant c0 > 1 with c0⁻¹ <= |α'| <= c0 on the window.
    pub implied_c0: f64,
    pub rows: Vec<MoserRow>,
    pub notes: Vec<String>,
}

/// Report the twist-function data and the residual norms per δ. The
/// invariant-curve conclusion itself is the Moser/Herman small-twist theorem,
/// consumed as a black box; only its hypotheses are measured here.
pub fn moser_hypotheses_report(
    spec: &ModelSpec,
    deltas: &[f64],
    grid: (usize, usize),
    tol: f64,
) -> Result<MoserReport> {
    let t_period = spec.t_period();
    let rows = deltas
        .iter()
        .map(|&delta| {
            let res = scaled_map_residuals(spec, delta, grid.0, grid.1, tol)?;
            Ok(MoserRow { delta, r1_norms: res.r1_norms, r2_norms: res.r2_norms })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MoserReport {
        t_period,
        alpha_endpoints: (-t_period / 2.0, -4.5 * t_period),
        alpha_prime_abs_range: (t_period, 3.0 * t_period),
        implied_c0: (3.0 * t_period).max(1.0 / t_period),
        rows,
        notes: vec![
            "hypothesis diagnostics only: the invariant-curve conclusion is the Moser/Herman small-twist theorem and is not recomputed here".into(),
            "alpha'(r) = -T r is negative on [1,3] while the theorem is stated with positive alpha'; |alpha'| is reported and the orientation convention is recorded, not guessed".into(),
            "residual norms are C0/C1/C2 finite-difference proxies at grid scale; the theorem asks for C4 smallness of the residual pair".into(),
        ],
    })
}

// ---------------------------------------------------------------------------
// Factor class membership report
// ---------------------------------------------------------------------------

/// Grid evidence that a factor map lies in the intended class: positive twist,
/// uniformly bounded momentum increment, and the end limits Q1 - Q0 -> ±L.
#[derive(Debug, Clone, Serialize)]
pub struct FactorClassReport {
    pub tau: f64,
    pub len: f64,
    pub nodes: usize,
    /// min over the grid of ∂Q1/∂P0.
    pub twist_min: f64,
    /// max over the grid of |P1 - P0|.
    pub momentum_increment_max: f64,
    /// The class bound L · sup |g|.
    pub momentum_bound: f64,
    pub momentum_violations: usize,
    /// |Q1 - Q0 ∓ L| at P0 = ±p_inf.
    pub end_gap_plus: f64,
    pub end_gap_minus: f64,
}

pub fn factor_class_report(
    spec: &ModelSpec,
    factor: &TwistFactor,
    grid: (usize, usize),
    p_window: f64,
    p_inf: f64,
    tol: f64,
) -> Result<FactorClassReport> {
    let map = FactorMap::new(spec, *factor, tol);
    let (nq, np) = (grid.0.max(2), grid.1.max(2));
    let results: Vec<(f64, f64)> = (0..nq * np)
        .into_par_iter()
        .map(|idx| -> Result<(f64, f64)> {
            let iq = idx / np;
            let ip = idx % np;
            let z = PhasePoint::new(
                iq as f64 / nq as f64,
                -p_window + 2.0 * p_window * ip as f64 / (np - 1) as f64,
            );
            let (z1, jac) = map.apply_with_jacobian(z)?;
            Ok((jac[0][1], (z1.p - z.p).abs()))
        })
        .collect::<Result<Vec<_>>>()?;
    let twist_min = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let momentum_increment_max = results.iter().map(|r| r.1).fold(0.0, f64::max);
    let momentum_violations = results.iter().filter(|r| r.1 > factor.momentum_bound).count();
    let top = map.apply(PhasePoint::new(0.37, p_inf))?;
    let bottom = map.apply(PhasePoint::new(0.37, -p_inf))?;
    Ok(FactorClassReport {
        tau: factor.tau,
        len: factor.len,
        nodes: nq * np,
        twist_min,
        momentum_increment_max,
        momentum_bound: factor.momentum_bound,
        momentum_violations,
        end_gap_plus: (top.q - 0.37 - factor.len).abs(),
        end_gap_minus: (bottom.q - 0.37 + factor.len).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ForcingSpec, Harmonic, PotentialSpec};
    use std::f64::consts::TAU;

    fn free_model() -> ModelSpec {
        ModelSpec::new(PotentialSpec::zero(1.0), ForcingSpec::zero(1.0))
    }

    /// Unit-period pendulum normalized to sup |g'| = 1.
    fn unit_pendulum(forcing: ForcingSpec) -> ModelSpec {
        ModelSpec::new(PotentialSpec::sine(1.0, 1.0 / TAU), forcing)
    }

    #[test]
    fn free_period_map_closed_form() {
        let spec = free_model();
        let (z1, jac) = poincare_map(&spec, PhasePoint::new(0.0, 0.75), 1e-12).unwrap();
        assert!((z1.q - 0.6).abs() < 1e-12);
        assert!((z1.p - 0.75).abs() < 1e-13);
        assert!((det2(&jac) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn period_map_lift_equivariance() {
        let spec = ModelSpec::new(
            PotentialSpec::pendulum(1.0),
            ForcingSpec::new(1.0, 0.0, vec![Harmonic::new(1, 0.3, 0.0)]).unwrap(),
        );
        let map = PoincareMap::new(&spec, 1e-11);
        for i in 0..20 {
            let z = PhasePoint::new(0.37 * i as f64 - 3.0, 0.61 * i as f64 - 6.0);
            assert!(lift_equivariance_defect(&map, z).unwrap() < 1e-10);
        }
    }

    #[test]
    fn period_map_is_area_preserving() {
        let spec = ModelSpec::new(
            PotentialSpec::pendulum(1.0),
            ForcingSpec::new(1.0, 0.0, vec![Harmonic::new(1, 0.25, 0.0)]).unwrap(),
        );
        let (_, jac) = poincare_map(&spec, PhasePoint::new(0.8, -1.3), 1e-12).unwrap();
        assert!((det2(&jac) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn twist_condition_gates_factor_construction() {
        let spec = unit_pendulum(ForcingSpec::zero(10.0));
        // L = 2.5 < π passes, L = 5 >= π fails.
        assert!(factor_family(&spec, 4).is_ok());
        match factor_family(&spec, 2) {
            Err(Error::TwistBound { len, bound }) => {
                assert!((len - 5.0).abs() < 1e-12);
                assert!((bound - std::f64::consts::PI).abs() < 1e-12);
            }
            other => panic!("expected twist bound violation, got {other:?}"),
        }
    }

    #[test]
    fn factor_requires_unit_period() {
        let spec = ModelSpec::new(PotentialSpec::pendulum(1.0), ForcingSpec::zero(1.0));
        assert!(TwistFactor::new(&spec, 0.0, 0.1).is_err());
    }

    #[test]
    fn free_factor_closed_form() {
        let spec = free_model();
        let factor = TwistFactor::new(&spec, 0.0, 0.7).unwrap();
        let p0 = 1.4;
        let z1 = factor_map(&spec, &factor, PhasePoint::new(0.2, p0), 1e-12).unwrap();
        let expect_q = 0.2 + 0.7 * p0 / (1.0 + p0 * p0).sqrt();
        assert!((z1.q - expect_q).abs() < 1e-12);
        assert!((z1.p - p0).abs() < 1e-13);
    }

    #[test]
    fn free_factor_twist_derivative_closed_form() {
        let spec = free_model();
        let len = 0.9;
        let factor = TwistFactor::new(&spec, 0.0, len).unwrap();
        let map = FactorMap::new(&spec, factor, 1e-12);
        let at_rest = twist_derivative(&map, PhasePoint::new(0.0, 0.0)).unwrap();
        assert!((at_rest - len).abs() < 1e-12);
        let at_one = twist_derivative(&map, PhasePoint::new(0.0, 1.0)).unwrap();
        assert!((at_one - len / 2.0_f64.powf(1.5)).abs() < 1e-12);
    }

    #[test]
    fn factor_map_is_area_preserving() {
        let spec = unit_pendulum(ForcingSpec::new(1.0, 0.0, vec![Harmonic::new(1, 0.2, 0.1)]).unwrap());
        let factor = TwistFactor::new(&spec, 0.25, 0.25).unwrap();
        let map = FactorMap::new(&spec, factor, 1e-12);
        for p0 in [-3.0, -0.5, 0.0, 1.0, 4.0] {
            let (_, jac) = map.apply_with_jacobian(PhasePoint::new(0.3, p0)).unwrap();
            assert!((det2(&jac) - 1.0).abs() < 1e-8, "det defect at p0 = {p0}");
        }
    }

    #[test]
    fn factor_class_report_on_unit_pendulum() {
        let spec = unit_pendulum(ForcingSpec::zero(10.0));
        let factors = factor_family(&spec, 4).unwrap();
        let report = factor_class_report(&spec, &factors[1], (9, 9), 50.0, 1e6, 1e-11).unwrap();
        assert!(report.twist_min > 0.0, "twist_min = {}", report.twist_min);
        assert_eq!(report.momentum_violations, 0);
        assert!(report.momentum_increment_max <= report.momentum_bound);
        assert!(report.end_gap_plus < 1e-3 && report.end_gap_minus < 1e-3);
    }

    #[test]
    fn composition_matches_direct_map() {
        let spec = unit_pendulum(ForcingSpec::new(10.0, 0.0, vec![Harmonic::new(1, 0.05, 0.0)]).unwrap());
        let report = compose_factors(&spec, 4, (-2.0, 2.0), (4, 4), 1e-11).unwrap();
        assert!(report.max_discrepancy <= 10.0 * 1e-11, "discrepancy {}", report.max_discrepancy);
        // Single-factor decomposition is the same flow (needs T = 1 so L < π).
        let short = unit_pendulum(ForcingSpec::new(1.0, 0.0, vec![Harmonic::new(1, 0.05, 0.0)]).unwrap());
        let trivial = compose_factors(&short, 1, (-2.0, 2.0), (3, 3), 1e-11).unwrap();
        assert!(trivial.max_discrepancy < 1e-10);
    }

    #[test]
    fn exactness_zero_mean_vs_nonzero_mean() {
        let spec = ModelSpec::new(
            PotentialSpec::pendulum(1.0),
            ForcingSpec::new(1.0, 0.0, vec![Harmonic::new(1, 0.3, 0.0)]).unwrap(),
        );
        let map = PoincareMap::new(&spec, 1e-11);
        let value = loop_exactness(&map, 2.0, 512).unwrap();
        assert!(value.abs() < 1e-6, "loop integral {value}");

        let drift = ModelSpec::new(PotentialSpec::zero(1.0), ForcingSpec::constant(1.0, 0.5));
        let map = PoincareMap::new(&drift, 1e-11);
        let value = loop_exactness(&map, 2.0, 512).unwrap();
        assert!((value - 0.5).abs() < 1e-6, "expected T·fbar = 0.5, got {value}");
    }

    #[test]
    fn contractible_loops_see_zero_area_change() {
        let spec = ModelSpec::new(
            PotentialSpec::pendulum(1.0),
            ForcingSpec::new(1.0, 0.5, vec![Harmonic::new(1, 0.2, 0.0)]).unwrap(),
        );
        let map = PoincareMap::new(&spec, 1e-11);
        let value = contractible_loop_integral(&map, PhasePoint::new(0.4, 1.0), 0.8, 0.5, 512).unwrap();
        assert!(value.abs() < 1e-6, "contractible loop integral {value}");
    }

    #[test]
    fn moser_report_arithmetic() {
        let spec = unit_pendulum(ForcingSpec::zero(1.0));
        let report = moser_hypotheses_report(&spec, &[0.1], (33, 33), 1e-10).unwrap();
        assert_eq!(report.alpha_prime_abs_range, (1.0, 3.0));
        assert_eq!(report.implied_c0, 3.0);
        assert_eq!(report.alpha_endpoints, (-0.5, -4.5));
        assert_eq!(report.rows.len(), 1);
        assert!(!report.notes.is_empty());
    }

    #[test]
    fn scaled_residual_leading_term() {
        // u1 - u0 = T - (δ²/2) T v0² + O(δ³): at T=1, v0=2, δ=0.05 the shear
        // term is 0.005.
        let spec = unit_pendulum(ForcingSpec::zero(1.0));
        let delta = 0.05;
        let run = flow::integrate(
            SystemId::Rpend2 { delta },
            &spec,
            0.0,
            1.0,
            PhasePoint::new(0.0, 2.0),
            1e-12,
        )
        .unwrap();
        let advance = run.state.q;
        assert!((advance - 0.995).abs() < 2.0 * delta.powi(3), "u1 - u0 = {advance}");
    }

    #[test]
    fn scaled_residual_norms_shrink() {
        let spec = unit_pendulum(ForcingSpec::zero(1.0));
        let coarse = scaled_map_residuals(&spec, 0.1, 33, 33, 1e-11).unwrap();
        let fine = scaled_map_residuals(&spec, 0.05, 33, 33, 1e-11).unwrap();
        assert!(fine.r1_norms.sup < coarse.r1_norms.sup);
        assert!(fine.r2_norms.sup < coarse.r2_norms.sup);
    }
}
