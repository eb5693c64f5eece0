//! Adaptive integration of the three Hamiltonian systems with dense output
//! and first variational equations.
//!
//! The integrator is an embedded Dormand–Prince 5(4) pair with the standard
//! fourth-order continuous extension. Symplecticity of the flows is *checked*
//! by the tests (|det J - 1| on the variational Jacobian), never enforced; a
//! structure-preserving integrator would mask exactly the bugs that check is
//! meant to catch.
//!
//! Systems, in the state conventions of [`crate::model`]:
//!
//! * `Rpend1` — the full system: q' = p/sqrt(1+p²), p' = g(q) + f(t).
//! * `Rpend4` — after P = p - F(t): Q' = (P+F)/sqrt(1+(P+F)²), P' = g(Q).
//! * `Rpend2` — the scaled (u, v) system carrying the small parameter δ;
//!   defined for unit position period (rescale the model first).

use rayon::prelude::*;
use serde::Serialize;

use crate::model::{ModelSpec, PhasePoint};
use crate::{Error, Result};

/// Admissible range for the local error tolerance.
pub const TOL_RANGE: (f64, f64) = (1e-14, 1e-3);

/// Which system to integrate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemId {
    /// Full system in (q, p).
    Rpend1,
    /// Scaled system in (u, v) with parameter δ >= 0 (unit-period models only).
    Rpend2 { delta: f64 },
    /// Forcing-shifted system in (Q, P).
    Rpend4,
}

pub(crate) struct System<'a> {
    id: SystemId,
    spec: &'a ModelSpec,
}

impl<'a> System<'a> {
    pub(crate) fn new(id: SystemId, spec: &'a ModelSpec) -> Result<Self> {
        if let SystemId::Rpend2 { delta } = id {
            if !(delta >= 0.0) || !delta.is_finite() {
                return Err(Error::invalid(format!("delta must be a finite nonnegative number, got {delta}")));
            }
            if !spec.unit_period() {
                return Err(Error::invalid(
                    "the scaled system presumes a unit position period; rescale the model first",
                ));
            }
        }
        Ok(System { id, spec })
    }

    pub(crate) fn rhs(&self, t: f64, z: &[f64; 2]) -> [f64; 2] {
        match self.id {
            SystemId::Rpend1 => {
                let [q, p] = *z;
                [p / (1.0 + p * p).sqrt(), self.spec.potential.value(q) + self.spec.forcing.value(t)]
            }
            SystemId::Rpend4 => {
                let [q_cap, p_cap] = *z;
                let w = p_cap + self.spec.forcing.primitive(t);
                [w / (1.0 + w * w).sqrt(), self.spec.potential.value(q_cap)]
            }
            SystemId::Rpend2 { delta } => {
                let [u, v] = *z;
                let (big_g, g, _) = self.spec.potential.eval(u);
                let big_f = self.spec.forcing.primitive(t);
                let n = 1.0 + delta * v * (big_g + big_f);
                let d = (delta * delta * v * v + n * n).sqrt();
                let udot = n / d;
                [udot, -delta * v * v * g * (1.0 - udot)]
            }
        }
    }

    /// Jacobian of the right-hand side in the state variables.
    pub(crate) fn jac(&self, t: f64, z: &[f64; 2]) -> [[f64; 2]; 2] {
        match self.id {
            SystemId::Rpend1 => {
                let [q, p] = *z;
                let dg = self.spec.potential.derivative(q);
                [[0.0, (1.0 + p * p).powf(-1.5)], [dg, 0.0]]
            }
            SystemId::Rpend4 => {
                let [q_cap, p_cap] = *z;
                let w = p_cap + self.spec.forcing.primitive(t);
                let dg = self.spec.potential.derivative(q_cap);
                [[0.0, (1.0 + w * w).powf(-1.5)], [dg, 0.0]]
            }
            SystemId::Rpend2 { delta } => {
                let [u, v] = *z;
                let (big_g, g, dg) = self.spec.potential.eval(u);
                let big_f = self.spec.forcing.primitive(t);
                let b = big_g + big_f;
                let n = 1.0 + delta * v * b;
                let d2 = delta * delta * v * v + n * n;
                let d = d2.sqrt();
                let d3 = d2 * d;
                let udot = n / d;
                // du'/du and du'/dv; the latter collapses because δvB - n = -1.
                let du_du = delta.powi(3) * v.powi(3) * g / d3;
                let du_dv = -delta * delta * v / d3;
                let dv_du = -delta * v * v * (dg * (1.0 - udot) - g * du_du);
                let dv_dv = -2.0 * delta * v * g * (1.0 - udot) + delta * v * v * g * du_dv;
                [[du_du, du_dv], [dv_du, dv_dv]]
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4)
// ---------------------------------------------------------------------------

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const B: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// b(5th) - b(4th): error estimator weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Weights of the fourth-order continuous extension.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const MAX_STEPS: usize = 20_000_000;

/// Accept/reject bookkeeping for one integration.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct StepStats {
    pub steps: usize,
    pub rejects: usize,
    pub rhs_evals: usize,
}

struct DenseSegment<const N: usize> {
    t: f64,
    h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseSegment<N> {
    fn eval(&self, t: f64) -> [f64; N] {
        let s = (t - self.t) / self.h;
        let s1 = 1.0 - s;
        let mut y = [0.0; N];
        for i in 0..N {
            let c = &self.cont;
            y[i] = c[0][i] + s * (c[1][i] + s1 * (c[2][i] + s * (c[3][i] + s1 * c[4][i])));
        }
        y
    }
}

pub(crate) struct Integration<const N: usize> {
    pub t0: f64,
    pub t1: f64,
    pub y1: [f64; N],
    pub stats: StepStats,
    /// Accepted mesh points including both endpoints.
    pub points: Vec<(f64, [f64; N])>,
    segments: Vec<DenseSegment<N>>,
}

impl<const N: usize> Integration<N> {
    /// Continuous-extension sample; t must lie in the integration span.
    pub fn sample(&self, t: f64) -> [f64; N] {
        if self.segments.is_empty() {
            return self.y1;
        }
        let dir = (self.t1 - self.t0).signum();
        let idx = self
            .segments
            .partition_point(|seg| (seg.t + seg.h - t) * dir < 0.0)
            .min(self.segments.len() - 1);
        self.segments[idx].eval(t)
    }
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], tol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..N {
        let sc = tol + tol * y0[i].abs().max(y1[i].abs());
        let r = err[i] / sc;
        acc += r * r;
    }
    (acc / N as f64).sqrt()
}

fn initial_step<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    span: f64,
    y0: &[f64; N],
    k0: &[f64; N],
    tol: f64,
) -> f64 {
    let norm = |v: &[f64; N], w: &[f64; N]| {
        let mut acc = 0.0_f64;
        for i in 0..N {
            let sc = tol + tol * w[i].abs();
            acc += (v[i] / sc).powi(2);
        }
        (acc / N as f64).sqrt()
    };
    let d0 = norm(y0, y0);
    let d1 = norm(k0, y0);
    let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(span.abs()).copysign(span);
    let mut y1 = *y0;
    for i in 0..N {
        y1[i] += h0 * k0[i];
    }
    let k1 = f(t0 + h0, &y1);
    let mut diff = [0.0; N];
    for i in 0..N {
        diff[i] = k1[i] - k0[i];
    }
    let d2 = norm(&diff, y0) / h0.abs();
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0.abs() * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0.abs()).min(h1).min(span.abs()).copysign(span)
}

pub(crate) fn dopri5<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    t1: f64,
    y0: [f64; N],
    tol: f64,
    dense: bool,
) -> Result<Integration<N>> {
    if !(tol >= TOL_RANGE.0 && tol <= TOL_RANGE.1) {
        return Err(Error::invalid(format!(
            "tolerance {tol} outside the admissible range [{}, {}]",
            TOL_RANGE.0, TOL_RANGE.1
        )));
    }
    let mut stats = StepStats::default();
    let mut points = vec![(t0, y0)];
    let mut segments = Vec::new();
    if t0 == t1 {
        return Ok(Integration { t0, t1, y1: y0, stats, points, segments });
    }
    let span = t1 - t0;
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.rhs_evals += 2;
    let mut h = initial_step(&f, t0, span, &y, &k1, tol);
    let mut rejected = false;

    let mut k = [[0.0; N]; 7];
    while (t - t1) * dir < 0.0 {
        if stats.steps >= MAX_STEPS {
            return Err(Error::Integration { t_last: t, reason: format!("step budget {MAX_STEPS} exhausted") });
        }
        if h.abs() < 16.0 * f64::EPSILON * t.abs().max(1.0) {
            return Err(Error::Integration { t_last: t, reason: "step-size underflow".into() });
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        k[0] = k1;
        let stage = |k: &[[f64; N]; 7], coeffs: &[f64]| {
            let mut ys = y;
            for (j, &a) in coeffs.iter().enumerate() {
                if a != 0.0 {
                    for i in 0..N {
                        ys[i] += h * a * k[j][i];
                    }
                }
            }
            ys
        };
        k[1] = f(t + C[1] * h, &stage(&k, &A2));
        k[2] = f(t + C[2] * h, &stage(&k, &A3));
        k[3] = f(t + C[3] * h, &stage(&k, &A4));
        k[4] = f(t + C[4] * h, &stage(&k, &A5));
        k[5] = f(t + C[5] * h, &stage(&k, &A6));
        let y5 = stage(&k, &B);
        k[6] = f(t + h, &y5);
        stats.rhs_evals += 6;

        let mut err = [0.0; N];
        for i in 0..N {
            let mut e = 0.0;
            for j in 0..7 {
                e += E[j] * k[j][i];
            }
            err[i] = h * e;
        }
        let err_norm = error_norm(&err, &y, &y5, tol);
        if err_norm <= 1.0 {
            if dense {
                let mut cont = [[0.0; N]; 5];
                for i in 0..N {
                    let ydiff = y5[i] - y[i];
                    let bspl = h * k[0][i] - ydiff;
                    cont[0][i] = y[i];
                    cont[1][i] = ydiff;
                    cont[2][i] = bspl;
                    cont[3][i] = ydiff - h * k[6][i] - bspl;
                    let mut dsum = 0.0;
                    for j in 0..7 {
                        dsum += D[j] * k[j][i];
                    }
                    cont[4][i] = h * dsum;
                }
                segments.push(DenseSegment { t, h, cont });
            }
            t += h;
            y = y5;
            k1 = k[6];
            stats.steps += 1;
            points.push((t, y));
            let facmax = if rejected { 1.0 } else { 5.0 };
            rejected = false;
            let fac = if err_norm == 0.0 { facmax } else { (0.9 * err_norm.powf(-0.2)).clamp(0.2, facmax) };
            h *= fac;
        } else {
            stats.rejects += 1;
            rejected = true;
            h *= (0.9 * err_norm.powf(-0.2)).clamp(0.2, 1.0);
        }
    }
    Ok(Integration { t0, t1, y1: y, stats, points, segments })
}

// ---------------------------------------------------------------------------
// Flow-level API
// ---------------------------------------------------------------------------

/// Result of one flow integration.
#[derive(Debug, Clone, Serialize)]
pub struct FlowResult {
    /// State at the final time.
    pub state: PhasePoint,
    /// (time, state) samples along the trajectory.
    pub samples: Vec<(f64, PhasePoint)>,
    /// Fundamental matrix ∂z(t1)/∂z(t0) when requested.
    pub jacobian: Option<[[f64; 2]; 2]>,
    pub stats: StepStats,
}

impl FlowResult {
    /// det of the fundamental matrix, when present. Hamiltonian flows in the
    /// plane are area preserving, so this should sit at 1 up to the
    /// integration tolerance.
    pub fn jacobian_det(&self) -> Option<f64> {
        self.jacobian.map(|j| j[0][0] * j[1][1] - j[0][1] * j[1][0])
    }
}

/// Integrate the chosen system over [t0, t1]; samples are the accepted mesh points.
pub fn integrate(
    sys: SystemId,
    spec: &ModelSpec,
    t0: f64,
    t1: f64,
    z0: PhasePoint,
    tol: f64,
) -> Result<FlowResult> {
    let system = System::new(sys, spec)?;
    let run = dopri5(|t, z| system.rhs(t, z), t0, t1, z0.to_array(), tol, false)?;
    Ok(FlowResult {
        state: PhasePoint::from_array(run.y1),
        samples: run.points.iter().map(|&(t, z)| (t, PhasePoint::from_array(z))).collect(),
        jacobian: None,
        stats: run.stats,
    })
}

/// Integrate and resample the dense output at n_samples+1 equispaced times.
pub fn integrate_sampled(
    sys: SystemId,
    spec: &ModelSpec,
    t0: f64,
    t1: f64,
    z0: PhasePoint,
    tol: f64,
    n_samples: usize,
) -> Result<FlowResult> {
    let system = System::new(sys, spec)?;
    let run = dopri5(|t, z| system.rhs(t, z), t0, t1, z0.to_array(), tol, true)?;
    let n = n_samples.max(1);
    let samples = (0..=n)
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / n as f64;
            (t, PhasePoint::from_array(run.sample(t)))
        })
        .collect();
    Ok(FlowResult { state: PhasePoint::from_array(run.y1), samples, jacobian: None, stats: run.stats })
}

/// Integrate the state jointly with the first variational equations
/// J' = (∂Ψ/∂z) J, J(t0) = I, and return the fundamental matrix.
pub fn integrate_variational(
    sys: SystemId,
    spec: &ModelSpec,
    t0: f64,
    t1: f64,
    z0: PhasePoint,
    tol: f64,
) -> Result<FlowResult> {
    let system = System::new(sys, spec)?;
    // State layout: [q, p, J11, J21, J12, J22] (columns of J).
    let y0 = [z0.q, z0.p, 1.0, 0.0, 0.0, 1.0];
    let rhs = |t: f64, y: &[f64; 6]| -> [f64; 6] {
        let z = [y[0], y[1]];
        let dz = system.rhs(t, &z);
        let a = system.jac(t, &z);
        [
            dz[0],
            dz[1],
            a[0][0] * y[2] + a[0][1] * y[3],
            a[1][0] * y[2] + a[1][1] * y[3],
            a[0][0] * y[4] + a[0][1] * y[5],
            a[1][0] * y[4] + a[1][1] * y[5],
        ]
    };
    let run = dopri5(rhs, t0, t1, y0, tol, false)?;
    let y = run.y1;
    Ok(FlowResult {
        state: PhasePoint::new(y[0], y[1]),
        samples: run
            .points
            .iter()
            .map(|&(t, z)| (t, PhasePoint::new(z[0], z[1])))
            .collect(),
        jacobian: Some([[y[2], y[4]], [y[3], y[5]]]),
        stats: run.stats,
    })
}

/// Sample of a joint state-and-Jacobian trace: (t, state, fundamental matrix).
pub type VariationalSample = (f64, PhasePoint, [[f64; 2]; 2]);

/// Joint state-and-Jacobian trace sampled at n_samples+1 equispaced times.
pub fn variational_trace(
    sys: SystemId,
    spec: &ModelSpec,
    t0: f64,
    t1: f64,
    z0: PhasePoint,
    tol: f64,
    n_samples: usize,
) -> Result<(Vec<VariationalSample>, StepStats)> {
    let system = System::new(sys, spec)?;
    let y0 = [z0.q, z0.p, 1.0, 0.0, 0.0, 1.0];
    let rhs = |t: f64, y: &[f64; 6]| -> [f64; 6] {
        let z = [y[0], y[1]];
        let dz = system.rhs(t, &z);
        let a = system.jac(t, &z);
        [
            dz[0],
            dz[1],
            a[0][0] * y[2] + a[0][1] * y[3],
            a[1][0] * y[2] + a[1][1] * y[3],
            a[0][0] * y[4] + a[0][1] * y[5],
            a[1][0] * y[4] + a[1][1] * y[5],
        ]
    };
    let run = dopri5(rhs, t0, t1, y0, tol, true)?;
    let n = n_samples.max(1);
    let samples = (0..=n)
        .map(|i| {
            let t = t0 + (t1 - t0) * i as f64 / n as f64;
            let y = run.sample(t);
            (t, PhasePoint::new(y[0], y[1]), [[y[2], y[4]], [y[3], y[5]]])
        })
        .collect();
    Ok((samples, run.stats))
}

// ---------------------------------------------------------------------------
// δ-expansion of the scaled flow
// ---------------------------------------------------------------------------

/// The closed-form δ-derivatives of the scaled flow at δ = 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DeltaDerivatives {
    /// z(t; u0, v0, 0) = (u0 + t, v0).
    pub zeroth: [f64; 2],
    /// ∂z/∂δ at δ = 0 vanishes identically.
    pub first: [f64; 2],
    /// ∂²z/∂δ² at δ = 0 equals (-v0² t, 0).
    pub second: [f64; 2],
}

/// Analytic anchor of the expansion test: the flow of the scaled system at
/// δ = 0 together with its first two δ-derivatives.
pub fn delta_derivatives_at_zero(u0: f64, v0: f64, t: f64) -> DeltaDerivatives {
    DeltaDerivatives {
        zeroth: [u0 + t, v0],
        first: [0.0, 0.0],
        second: [-v0 * v0 * t, 0.0],
    }
}

/// Sup and finite-difference norms of a grid-sampled 2-vector field.
///
/// `diff1` and `diff2` are first and second centered-difference norms, desk
/// proxies for the C¹ and C² pieces of the smallness the small-twist theorem
/// asks for in higher norms; the gap to the full C⁵/C⁴ requirement is
/// documented in the report output.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RemainderNorms {
    pub sup: f64,
    pub diff1: f64,
    pub diff2: f64,
}

/// A field sampled on an nu × nv grid over [0,1] × [1,3].
#[derive(Debug, Clone, Serialize)]
pub struct GridField {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Row-major: values[iu * nv + iv].
    pub values: Vec<[f64; 2]>,
}

impl GridField {
    pub fn at(&self, iu: usize, iv: usize) -> [f64; 2] {
        self.values[iu * self.v.len() + iv]
    }

    /// Norms over both components.
    pub fn norms(&self) -> RemainderNorms {
        let a = self.component_norms(0);
        let b = self.component_norms(1);
        RemainderNorms { sup: a.sup.max(b.sup), diff1: a.diff1.max(b.diff1), diff2: a.diff2.max(b.diff2) }
    }

    /// Norms of one component of the field.
    pub fn component_norms(&self, comp: usize) -> RemainderNorms {
        let (nu, nv) = (self.u.len(), self.v.len());
        let du = self.u[1] - self.u[0];
        let dv = self.v[1] - self.v[0];
        let mut sup = 0.0_f64;
        for val in &self.values {
            sup = sup.max(val[comp].abs());
        }
        let mut d1 = 0.0_f64;
        let mut d2 = 0.0_f64;
        for iu in 1..nu - 1 {
            for iv in 1..nv - 1 {
                let c = self.at(iu, iv)[comp];
                let up = self.at(iu + 1, iv)[comp];
                let um = self.at(iu - 1, iv)[comp];
                let vp = self.at(iu, iv + 1)[comp];
                let vm = self.at(iu, iv - 1)[comp];
                let pp = self.at(iu + 1, iv + 1)[comp];
                let pm = self.at(iu + 1, iv - 1)[comp];
                let mp = self.at(iu - 1, iv + 1)[comp];
                let mm = self.at(iu - 1, iv - 1)[comp];
                d1 = d1.max(((up - um) / (2.0 * du)).abs()).max(((vp - vm) / (2.0 * dv)).abs());
                d2 = d2
                    .max(((up - 2.0 * c + um) / (du * du)).abs())
                    .max(((vp - 2.0 * c + vm) / (dv * dv)).abs())
                    .max(((pp - pm - mp + mm) / (4.0 * du * dv)).abs());
            }
        }
        RemainderNorms { sup, diff1: d1, diff2: d2 }
    }
}

/// Taylor remainder of the scaled flow at t = T over the grid:
/// R = (2/δ²)·[z(T; z0, δ) - z(T; z0, 0)] - (∂²z/∂δ²)(T; z0, 0).
#[derive(Debug, Clone, Serialize)]
pub struct ExpansionReport {
    pub delta: f64,
    pub remainder: GridField,
    pub norms: RemainderNorms,
}

/// Evaluate the expansion remainder on an `nu × nv` grid over [0,1] × [1,3].
/// Requires a unit-period model and grid resolution at least 32 × 32.
pub fn expansion_remainder(
    spec: &ModelSpec,
    delta: f64,
    nu: usize,
    nv: usize,
    tol: f64,
) -> Result<ExpansionReport> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("delta must be positive, got {delta}")));
    }
    if nu < 32 || nv < 32 {
        return Err(Error::invalid(format!("grid resolution must be at least 32x32, got {nu}x{nv}")));
    }
    System::new(SystemId::Rpend2 { delta }, spec)?;
    let t_period = spec.t_period();
    let u: Vec<f64> = (0..nu).map(|i| i as f64 / (nu - 1) as f64).collect();
    let v: Vec<f64> = (0..nv).map(|i| 1.0 + 2.0 * i as f64 / (nv - 1) as f64).collect();
    let values: Vec<[f64; 2]> = u
        .par_iter()
        .flat_map_iter(|&u0| v.iter().map(move |&v0| (u0, v0)))
        .map(|(u0, v0)| -> Result<[f64; 2]> {
            let run = integrate(SystemId::Rpend2 { delta }, spec, 0.0, t_period, PhasePoint::new(u0, v0), tol)?;
            let dd = delta_derivatives_at_zero(u0, v0, t_period);
            let scale = 2.0 / (delta * delta);
            Ok([
                scale * (run.state.q - dd.zeroth[0]) - dd.second[0],
                scale * (run.state.p - dd.zeroth[1]) - dd.second[1],
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let remainder = GridField { u, v, values };
    let norms = remainder.norms();
    Ok(ExpansionReport { delta, remainder, norms })
}

/// Largest δ <= 0.5 for which the scaled system integrates over [0, T] from
/// the whole strip [0,1] × [1/2, 7/2], found by bisection. Existence of a
/// positive bound follows from continuous dependence; the value is a runtime
/// property of the model.
pub fn admissible_delta_bound(spec: &ModelSpec, tol: f64) -> Result<f64> {
    System::new(SystemId::Rpend2 { delta: 0.0 }, spec)?;
    let t_period = spec.t_period();
    let probe = |delta: f64| -> bool {
        let n = 7;
        (0..n * n).into_par_iter().all(|idx| {
            let u0 = (idx / n) as f64 / (n - 1) as f64;
            let v0 = 0.5 + 3.0 * (idx % n) as f64 / (n - 1) as f64;
            integrate(SystemId::Rpend2 { delta }, spec, 0.0, t_period, PhasePoint::new(u0, v0), tol)
                .map(|r| r.state.q.is_finite() && r.state.p.is_finite())
                .unwrap_or(false)
        })
    };
    let mut hi = 0.5;
    if probe(hi) {
        return Ok(hi);
    }
    let mut lo = 0.0;
    for _ in 0..20 {
        let mid = 0.5 * (lo + hi);
        if probe(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
