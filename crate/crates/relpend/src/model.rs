//! Model data: forcing and potential as finite trigonometric series with
//! closed-form primitives, the Hamiltonian, and the coordinate charts.
//!
//! Keeping g and f as trigonometric polynomials gives exact periodic
//! primitives F and G, so no quadrature error enters the action integrals or
//! the Hamiltonian. The degenerate cases g = 0 and f = 0 are first-class;
//! they supply closed-form oracles for the tests.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One Fourier mode `cos_amp * cos(2πk u / period) + sin_amp * sin(2πk u / period)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub k: u32,
    pub cos_amp: f64,
    pub sin_amp: f64,
}

impl Harmonic {
    pub fn new(k: u32, cos_amp: f64, sin_amp: f64) -> Self {
        Harmonic { k, cos_amp, sin_amp }
    }
}

fn check_harmonics(harmonics: &[Harmonic]) -> Result<()> {
    for h in harmonics {
        if h.k == 0 {
            return Err(Error::invalid("harmonic index k must be >= 1 (the constant term is carried separately)"));
        }
        if !h.cos_amp.is_finite() || !h.sin_amp.is_finite() {
            return Err(Error::invalid("harmonic amplitudes must be finite"));
        }
    }
    Ok(())
}

/// T-periodic forcing `f(t) = mean + Σ_k [a_k cos(2πkt/T) + b_k sin(2πkt/T)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForcingSpec {
    period: f64,
    mean: f64,
    harmonics: Vec<Harmonic>,
}

impl ForcingSpec {
    pub fn new(period: f64, mean: f64, harmonics: Vec<Harmonic>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::invalid(format!("forcing period T must be positive, got {period}")));
        }
        if !mean.is_finite() {
            return Err(Error::invalid("forcing mean must be finite"));
        }
        check_harmonics(&harmonics)?;
        Ok(ForcingSpec { period, mean, harmonics })
    }

    /// f = 0 with the given period (the period still fixes the map return time).
    pub fn zero(period: f64) -> Self {
        ForcingSpec::new(period, 0.0, Vec::new()).expect("positive period")
    }

    /// Constant forcing f = mean.
    pub fn constant(period: f64, mean: f64) -> Self {
        ForcingSpec::new(period, mean, Vec::new()).expect("positive period")
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    /// Whether ∫₀ᵀ f = 0, i.e. the mean term vanishes.
    pub fn zero_mean(&self) -> bool {
        self.mean == 0.0
    }

    /// f(t).
    pub fn value(&self, t: f64) -> f64 {
        let w = TAU / self.period;
        let mut f = self.mean;
        for h in &self.harmonics {
            let (s, c) = (w * h.k as f64 * t).sin_cos();
            f += h.cos_amp * c + h.sin_amp * s;
        }
        f
    }

    /// The primitive F with F' = f, normalized so that the periodic part of F
    /// has zero mean over one period. When mean != 0 the linear part mean·t is
    /// included, so F is T-periodic exactly when f has zero mean.
    pub fn primitive(&self, t: f64) -> f64 {
        let w = TAU / self.period;
        let mut big_f = self.mean * t;
        for h in &self.harmonics {
            let wk = w * h.k as f64;
            let (s, c) = (wk * t).sin_cos();
            big_f += (h.cos_amp * s - h.sin_amp * c) / wk;
        }
        big_f
    }

    /// (f(t), F(t)) in one call.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        (self.value(t), self.primitive(t))
    }

    /// Upper bound on sup |F_periodic| from the coefficient sums (the linear
    /// part is excluded; it vanishes for zero-mean forcing).
    pub fn primitive_sup_bound(&self) -> f64 {
        let w = TAU / self.period;
        self.harmonics
            .iter()
            .map(|h| h.cos_amp.hypot(h.sin_amp) / (w * h.k as f64))
            .sum()
    }
}

/// S-periodic potential term `g(x) = Σ_k [c_k cos(2πkx/S) + d_k sin(2πkx/S)]`.
///
/// No constant term is allowed, so ∫₀^S g = 0 holds by construction and the
/// primitive G is itself S-periodic with zero mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    period: f64,
    harmonics: Vec<Harmonic>,
    /// Coefficient-sum upper bound for sup |g|.
    sup_g: f64,
    /// Coefficient-sum upper bound for sup |g'|.
    sup_dg: f64,
    /// Grid-refined estimate of sup |g| (a lower bound on the true sup).
    sup_g_grid: f64,
    /// Grid-refined estimate of sup |g'|.
    sup_dg_grid: f64,
}

impl PotentialSpec {
    pub fn new(period: f64, harmonics: Vec<Harmonic>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::invalid(format!("potential period S must be positive, got {period}")));
        }
        check_harmonics(&harmonics)?;
        let w = TAU / period;
        let mut sup_g = 0.0;
        let mut sup_dg = 0.0;
        for h in &harmonics {
            let amp = h.cos_amp.hypot(h.sin_amp);
            sup_g += amp;
            sup_dg += amp * w * h.k as f64;
        }
        let mut spec = PotentialSpec { period, harmonics, sup_g, sup_dg, sup_g_grid: 0.0, sup_dg_grid: 0.0 };
        let n = 512;
        let (mut mg, mut mdg) = (0.0_f64, 0.0_f64);
        for i in 0..n {
            let x = period * i as f64 / n as f64;
            let (_, g, dg) = spec.eval(x);
            mg = mg.max(g.abs());
            mdg = mdg.max(dg.abs());
        }
        spec.sup_g_grid = mg;
        spec.sup_dg_grid = mdg;
        Ok(spec)
    }

    /// g = 0 on a cylinder of the given circumference.
    pub fn zero(period: f64) -> Self {
        PotentialSpec::new(period, Vec::new()).expect("positive period")
    }

    /// The classical pendulum term g(x) = -a sin x on the 2π cylinder.
    pub fn pendulum(a: f64) -> Self {
        PotentialSpec::new(TAU, vec![Harmonic::new(1, 0.0, -a)]).expect("positive period")
    }

    /// Single-mode term g(x) = -amp · sin(2πx/period). With period 1 and
    /// amp = 1/(2π) this is the pendulum normalized to sup |g'| = 1.
    pub fn sine(period: f64, amp: f64) -> Self {
        PotentialSpec::new(period, vec![Harmonic::new(1, 0.0, -amp)]).expect("positive period")
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    /// Safe upper bound on sup |g| (coefficient sum).
    pub fn sup_g(&self) -> f64 {
        self.sup_g
    }

    /// Safe upper bound on sup |g'| (coefficient sum). This is the bound used
    /// in the small-time twist condition: a larger bound only shortens the
    /// admissible factor duration, keeping the twist guarantee on the safe side.
    pub fn sup_dg(&self) -> f64 {
        self.sup_dg
    }

    /// Grid-refined estimate of sup |g|.
    pub fn sup_g_grid(&self) -> f64 {
        self.sup_g_grid
    }

    /// Grid-refined estimate of sup |g'|.
    pub fn sup_dg_grid(&self) -> f64 {
        self.sup_dg_grid
    }

    /// (G(x), g(x), g'(x)) with G the zero-mean S-periodic primitive of g.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let w = TAU / self.period;
        let (mut big_g, mut g, mut dg) = (0.0, 0.0, 0.0);
        for h in &self.harmonics {
            let wk = w * h.k as f64;
            let (s, c) = (wk * x).sin_cos();
            big_g += (h.cos_amp * s - h.sin_amp * c) / wk;
            g += h.cos_amp * c + h.sin_amp * s;
            dg += wk * (h.sin_amp * c - h.cos_amp * s);
        }
        (big_g, g, dg)
    }

    /// G(x) alone.
    pub fn primitive(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    /// g(x) alone.
    pub fn value(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    /// g'(x) alone.
    pub fn derivative(&self, x: f64) -> f64 {
        self.eval(x).2
    }
}

/// The pair (g, f) defining the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub forcing: ForcingSpec,
    pub potential: PotentialSpec,
}

impl ModelSpec {
    pub fn new(potential: PotentialSpec, forcing: ForcingSpec) -> Self {
        ModelSpec { forcing, potential }
    }

    /// Circumference S of the position cylinder.
    pub fn s_period(&self) -> f64 {
        self.potential.period()
    }

    /// Forcing period T (the return time of the period map).
    pub fn t_period(&self) -> f64 {
        self.forcing.period()
    }

    /// H(t, q, p) = sqrt(1 + p²) - G(q) - f(t)·q. For f = 0 this is the
    /// conserved energy of the autonomous flow.
    pub fn hamiltonian(&self, t: f64, q: f64, p: f64) -> f64 {
        (1.0 + p * p).sqrt() - self.potential.primitive(q) - self.forcing.value(t) * q
    }

    /// Whether the position period is already 1 (within roundoff).
    pub fn unit_period(&self) -> bool {
        (self.s_period() - 1.0).abs() < 1e-12
    }

    /// The conjugated model with position period 1:
    /// ĝ(y) = S·g(Sy) (period 1) and f̂(s) = S·f(Ss) (period T/S).
    /// Solutions correspond via x(t) = S·y(t/S); velocities and momenta are
    /// preserved, positions and times scale by S.
    pub fn rescaled(&self) -> ModelSpec {
        let s = self.s_period();
        let gh = self
            .potential
            .harmonics()
            .iter()
            .map(|h| Harmonic::new(h.k, s * h.cos_amp, s * h.sin_amp))
            .collect();
        let fh = self
            .forcing
            .harmonics()
            .iter()
            .map(|h| Harmonic::new(h.k, s * h.cos_amp, s * h.sin_amp))
            .collect();
        ModelSpec {
            potential: PotentialSpec::new(1.0, gh).expect("unit period"),
            forcing: ForcingSpec::new(self.t_period() / s, s * self.forcing.mean(), fh)
                .expect("positive rescaled period"),
        }
    }
}

/// A point of the lifted phase plane: q covers the cylinder R/SZ, p is the
/// relativistic momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        PhasePoint { q, p }
    }

    pub(crate) fn from_array(z: [f64; 2]) -> Self {
        PhasePoint { q: z[0], p: z[1] }
    }

    pub(crate) fn to_array(self) -> [f64; 2] {
        [self.q, self.p]
    }
}

/// Forward Legendre transform p = v / sqrt(1 - v²); requires |v| < 1.
pub fn momentum_from_velocity(v: f64) -> Result<f64> {
    if v.abs() >= 1.0 {
        return Err(Error::Superluminal(v));
    }
    Ok(v / (1.0 - v * v).sqrt())
}

/// Inverse Legendre transform v = p / sqrt(1 + p²); defined for all p, with
/// |v| < 1 as an algebraic identity.
pub fn velocity_from_momentum(p: f64) -> f64 {
    p / (1.0 + p * p).sqrt()
}

/// The two momentum-shift charts (Q, P) used by the analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    /// P = p - G(q) - F(t): the chart feeding the scaled (u, v) variables.
    Expansion,
    /// P = p - F(t): the chart in which the flow factors into twist maps.
    Factor,
}

impl Chart {
    fn shift(self, spec: &ModelSpec, t: f64, q: f64) -> f64 {
        match self {
            Chart::Expansion => spec.potential.primitive(q) + spec.forcing.primitive(t),
            Chart::Factor => spec.forcing.primitive(t),
        }
    }

    /// (q, p) -> (Q, P) at time t.
    pub fn to_qp(self, spec: &ModelSpec, t: f64, q: f64, p: f64) -> (f64, f64) {
        (q, p - self.shift(spec, t, q))
    }

    /// (Q, P) -> (q, p) at time t; exact inverse of [`Chart::to_qp`].
    pub fn from_qp(self, spec: &ModelSpec, t: f64, q_cap: f64, p_cap: f64) -> (f64, f64) {
        (q_cap, p_cap + self.shift(spec, t, q_cap))
    }
}

/// Band of momenta P mapped by the scaling chart into v in [1/2, 7/2].
pub fn scaled_band(delta: f64) -> (f64, f64) {
    (2.0 / (7.0 * delta), 2.0 / delta)
}

/// Scaling chart (Q, P) -> (u, v) = (Q, 1/(δP)); requires v in [1/2, 7/2].
pub fn scaled_from_qp(delta: f64, q_cap: f64, p_cap: f64) -> Result<(f64, f64)> {
    if !(delta > 0.0) {
        return Err(Error::invalid(format!("scale delta must be positive, got {delta}")));
    }
    let (lo, hi) = scaled_band(delta);
    if !(p_cap >= lo && p_cap <= hi) {
        return Err(Error::ScaledBand { p: p_cap, lo, hi });
    }
    Ok((q_cap, 1.0 / (delta * p_cap)))
}

/// Inverse scaling chart (u, v) -> (Q, P) = (u, 1/(δv)).
pub fn scaled_to_qp(delta: f64, u: f64, v: f64) -> (f64, f64) {
    (u, 1.0 / (delta * v))
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------
//
// Line-oriented key = value text. Grammar:
//
//   file       := { line }
//   line       := blank | comment | assignment
//   comment    := '#' .*
//   assignment := key '=' value
//   key        := 'S' | 'T' | 'fbar' | 'g.harmonics' | 'f.harmonics'
//   value      := number                      (for S, T, fbar)
//              |  triple { ',' triple }       (for *.harmonics)
//   triple     := '(' int ',' number ',' number ')'    as (k, cos, sin)
//
// S and T are required; fbar defaults to 0 and the harmonic lists default to
// empty. Keys may appear at most once.

fn parse_triples(raw: &str, line_no: usize, key: &str, issues: &mut Vec<String>) -> Vec<Harmonic> {
    let mut out = Vec::new();
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return out;
    }
    let mut rest = trimmed;
    loop {
        let Some(open) = rest.find('(') else {
            issues.push(format!("line {line_no}: {key}: expected '(' in {rest:?}"));
            return out;
        };
        if !rest[..open].trim().is_empty() && rest[..open].trim() != "," {
            issues.push(format!("line {line_no}: {key}: unexpected text {:?}", &rest[..open]));
        }
        let Some(close) = rest[open..].find(')') else {
            issues.push(format!("line {line_no}: {key}: unbalanced '(' in {rest:?}"));
            return out;
        };
        let body = &rest[open + 1..open + close];
        let parts: Vec<&str> = body.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            issues.push(format!("line {line_no}: {key}: expected (k, cos, sin), got ({body})"));
        } else {
            let k = parts[0].parse::<u32>();
            let c = parts[1].parse::<f64>();
            let s = parts[2].parse::<f64>();
            match (k, c, s) {
                (Ok(k), Ok(c), Ok(s)) if k >= 1 => out.push(Harmonic::new(k, c, s)),
                (Ok(0), _, _) => issues.push(format!("line {line_no}: {key}: harmonic index must be >= 1")),
                _ => issues.push(format!("line {line_no}: {key}: malformed triple ({body})")),
            }
        }
        rest = rest[open + close + 1..].trim_start();
        if rest.is_empty() {
            return out;
        }
        rest = match rest.strip_prefix(',') {
            Some(r) => r.trim_start(),
            None => {
                issues.push(format!("line {line_no}: {key}: expected ',' between triples"));
                return out;
            }
        };
    }
}

/// Parse a model file; collects every violation rather than stopping at the first.
pub fn parse_model(text: &str) -> Result<ModelSpec> {
    let mut issues = Vec::new();
    let mut seen: Vec<(String, usize)> = Vec::new();
    let mut s_period = None;
    let mut t_period = None;
    let mut fbar = 0.0;
    let mut gh = Vec::new();
    let mut fh = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            issues.push(format!("line {line_no}: expected 'key = value', got {line:?}"));
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
            issues.push(format!("line {line_no}: duplicate key '{key}' (first set on line {first})"));
            continue;
        }
        seen.push((key.to_string(), line_no));
        match key {
            "S" | "T" | "fbar" => match value.parse::<f64>() {
                Ok(x) if x.is_finite() => match key {
                    "S" => s_period = Some(x),
                    "T" => t_period = Some(x),
                    _ => fbar = x,
                },
                _ => issues.push(format!("line {line_no}: {key}: expected a finite number, got {value:?}")),
            },
            "g.harmonics" => gh = parse_triples(value, line_no, key, &mut issues),
            "f.harmonics" => fh = parse_triples(value, line_no, key, &mut issues),
            _ => issues.push(format!("line {line_no}: unknown key '{key}'")),
        }
    }

    let s = match s_period {
        Some(s) if s > 0.0 => s,
        Some(s) => {
            issues.push(format!("S must be positive, got {s}"));
            1.0
        }
        None => {
            issues.push("missing required key 'S'".to_string());
            1.0
        }
    };
    let t = match t_period {
        Some(t) if t > 0.0 => t,
        Some(t) => {
            issues.push(format!("T must be positive, got {t}"));
            1.0
        }
        None => {
            issues.push("missing required key 'T'".to_string());
            1.0
        }
    };

    if !issues.is_empty() {
        return Err(Error::ModelParse { issues });
    }
    Ok(ModelSpec {
        potential: PotentialSpec::new(s, gh)?,
        forcing: ForcingSpec::new(t, fbar, fh)?,
    })
}

/// Render a model in the file grammar (floats in shortest round-trip form).
pub fn format_model(spec: &ModelSpec) -> String {
    let mut out = String::new();
    out.push_str(&format!("S = {}\n", spec.s_period()));
    out.push_str(&format!("T = {}\n", spec.t_period()));
    out.push_str(&format!("fbar = {}\n", spec.forcing.mean()));
    let fmt = |hs: &[Harmonic]| {
        hs.iter()
            .map(|h| format!("({}, {}, {})", h.k, h.cos_amp, h.sin_amp))
            .collect::<Vec<_>>()
            .join(", ")
    };
    if !spec.potential.harmonics().is_empty() {
        out.push_str(&format!("g.harmonics = {}\n", fmt(spec.potential.harmonics())));
    }
    if !spec.forcing.harmonics().is_empty() {
        out.push_str(&format!("f.harmonics = {}\n", fmt(spec.forcing.harmonics())));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pendulum_model(a: f64, forcing: ForcingSpec) -> ModelSpec {
        ModelSpec::new(PotentialSpec::pendulum(a), forcing)
    }

    #[test]
    fn forcing_single_harmonic_primitive() {
        let f = ForcingSpec::new(1.0, 0.0, vec![Harmonic::new(1, 1.0, 0.0)]).unwrap();
        let (v, prim) = f.eval(0.0);
        assert_eq!(v, 1.0);
        assert_eq!(prim, 0.0);
        // F(t) = sin(2πt)/(2π)
        let (_, prim) = f.eval(0.25);
        assert!((prim - 1.0 / TAU).abs() < 1e-15);
    }

    #[test]
    fn forcing_zero_everywhere() {
        let f = ForcingSpec::zero(2.0);
        for t in [-3.0, 0.0, 0.7, 10.0] {
            assert_eq!(f.eval(t), (0.0, 0.0));
        }
    }

    #[test]
    fn forcing_pure_mean() {
        let f = ForcingSpec::constant(1.0, 0.5);
        assert_eq!(f.eval(2.0), (0.5, 1.0));
        assert!(!f.zero_mean());
    }

    #[test]
    fn potential_pendulum_values() {
        let g = PotentialSpec::pendulum(1.0);
        // g(x) = -sin x, G(x) = cos x, g'(x) = -cos x
        let (big_g, gv, dg) = g.eval(0.0);
        assert!((big_g - 1.0).abs() < 1e-15);
        assert!(gv.abs() < 1e-15);
        assert!((dg + 1.0).abs() < 1e-15);
        let (big_g, gv, dg) = g.eval(std::f64::consts::PI);
        assert!((big_g + 1.0).abs() < 1e-12);
        assert!(gv.abs() < 1e-12);
        assert!((dg - 1.0).abs() < 1e-12);
    }

    #[test]
    fn potential_zero() {
        let g = PotentialSpec::zero(1.0);
        assert_eq!(g.eval(0.3), (0.0, 0.0, 0.0));
        assert_eq!(g.sup_g(), 0.0);
        assert_eq!(g.sup_dg(), 0.0);
    }

    #[test]
    fn potential_bounds_order() {
        let g = PotentialSpec::new(1.0, vec![Harmonic::new(1, 0.3, -0.4), Harmonic::new(3, 0.0, 0.2)]).unwrap();
        assert!(g.sup_g_grid() <= g.sup_g() + 1e-12);
        assert!(g.sup_dg_grid() <= g.sup_dg() + 1e-12);
        // The grid estimate must be a genuine estimate, not zero.
        assert!(g.sup_g_grid() > 0.5 * g.sup_g());
    }

    #[test]
    fn periodicity_spot_checks() {
        let spec = pendulum_model(
            1.3,
            ForcingSpec::new(0.7, 0.0, vec![Harmonic::new(1, 0.2, 0.1), Harmonic::new(4, -0.3, 0.0)]).unwrap(),
        );
        let mut x = 0.123_f64;
        for _ in 0..1000 {
            x = (x * 1103515245.0 + 12345.0) % 1.0; // cheap deterministic stream
            let t = 10.0 * x - 5.0;
            let (f0, _) = spec.forcing.eval(t);
            let (f1, _) = spec.forcing.eval(t + spec.t_period());
            assert!((f0 - f1).abs() < 1e-12 * (1.0 + f0.abs()));
            let q = 20.0 * x - 10.0;
            let g0 = spec.potential.value(q);
            let g1 = spec.potential.value(q + spec.s_period());
            assert!((g0 - g1).abs() < 1e-12 * (1.0 + g0.abs()));
        }
    }

    #[test]
    fn primitive_consistency_finite_differences() {
        let spec = ModelSpec::new(
            PotentialSpec::new(2.0, vec![Harmonic::new(1, 0.5, -0.2), Harmonic::new(2, 0.0, 0.3)]).unwrap(),
            ForcingSpec::new(1.5, 0.25, vec![Harmonic::new(2, 0.4, 0.6)]).unwrap(),
        );
        let h = 1e-6;
        for i in 0..40 {
            let t = -2.0 + 0.1 * i as f64;
            let df = (spec.forcing.primitive(t + h) - spec.forcing.primitive(t - h)) / (2.0 * h);
            let f = spec.forcing.value(t);
            assert!((df - f).abs() <= 1e-6 * (1.0 + f.abs()), "F' != f at t={t}: {df} vs {f}");
            let (_, g, dg) = spec.potential.eval(t);
            let dg_big = (spec.potential.primitive(t + h) - spec.potential.primitive(t - h)) / (2.0 * h);
            assert!((dg_big - g).abs() <= 1e-6 * (1.0 + g.abs()));
            let dg_fd = (spec.potential.value(t + h) - spec.potential.value(t - h)) / (2.0 * h);
            assert!((dg_fd - dg).abs() <= 1e-5 * (1.0 + dg.abs()));
        }
    }

    #[test]
    fn legendre_three_four_five() {
        assert!((momentum_from_velocity(0.6).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(velocity_from_momentum(0.0), 0.0);
        assert!(momentum_from_velocity(1.0).is_err());
        assert!(momentum_from_velocity(-1.2).is_err());
    }

    #[test]
    fn legendre_round_trip_near_light_speed() {
        let v = 0.999;
        let p = momentum_from_velocity(v).unwrap();
        assert!((velocity_from_momentum(p) - v).abs() < 1e-12);
    }

    #[test]
    fn hamiltonian_free_particle() {
        let spec = ModelSpec::new(PotentialSpec::zero(1.0), ForcingSpec::zero(1.0));
        assert!((spec.hamiltonian(0.0, 3.0, 0.75) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn hamiltonian_pendulum_rest() {
        let spec = pendulum_model(1.0, ForcingSpec::zero(1.0));
        assert!(spec.hamiltonian(0.0, 0.0, 0.0).abs() < 1e-15); // 1 - cos 0 - 0
    }

    #[test]
    fn hamiltonian_pure_mean_forcing() {
        let spec = pendulum_model(1.0, ForcingSpec::constant(1.0, 0.5));
        let expect = 1.0 - (2.0_f64).cos() - 0.5 * 2.0;
        assert!((spec.hamiltonian(7.7, 2.0, 0.0) - expect).abs() < 1e-15);
    }

    #[test]
    fn rescale_identity_when_unit() {
        let spec = ModelSpec::new(
            PotentialSpec::new(1.0, vec![Harmonic::new(1, 0.0, -0.5)]).unwrap(),
            ForcingSpec::new(2.0, 0.0, vec![Harmonic::new(1, 0.1, 0.0)]).unwrap(),
        );
        let r = spec.rescaled();
        assert_eq!(r, spec);
    }

    #[test]
    fn rescale_pendulum_coefficients() {
        let spec = pendulum_model(1.0, ForcingSpec::zero(1.0));
        let r = spec.rescaled();
        assert!((r.s_period() - 1.0).abs() < 1e-15);
        assert!((r.t_period() - 1.0 / TAU).abs() < 1e-15);
        // ĝ(y) = -2π sin(2πy)
        assert!((r.potential.value(0.25) + TAU).abs() < 1e-12);
        assert!((r.potential.sup_dg() - TAU * TAU).abs() < 1e-9);
    }

    #[test]
    fn charts_round_trip() {
        let spec = pendulum_model(0.7, ForcingSpec::new(1.0, 0.0, vec![Harmonic::new(1, 0.5, 0.0)]).unwrap());
        for chart in [Chart::Expansion, Chart::Factor] {
            for i in 0..50 {
                let t = 0.17 * i as f64;
                let q = (i as f64).sin() * 4.0;
                let p = (i as f64).cos() * 3.0;
                let (q_cap, p_cap) = chart.to_qp(&spec, t, q, p);
                let (q2, p2) = chart.from_qp(&spec, t, q_cap, p_cap);
                assert!((q2 - q).abs() < 1e-14 && (p2 - p).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn chart_values_from_definition() {
        let spec = pendulum_model(1.0, ForcingSpec::zero(1.0));
        // Factor chart with F = 0 is the identity.
        assert_eq!(Chart::Factor.to_qp(&spec, 0.3, 1.2, -0.4), (1.2, -0.4));
        // Expansion chart subtracts G(q) + F(t): q=0, p=2, G(0)=1, F=0.25.
        let spec2 = ModelSpec::new(
            PotentialSpec::pendulum(1.0),
            ForcingSpec::new(1.0, 0.25, vec![]).unwrap(),
        );
        let (_, p_cap) = Chart::Expansion.to_qp(&spec2, 1.0, 0.0, 2.0);
        assert!((p_cap - 0.75).abs() < 1e-15);
    }

    #[test]
    fn scaled_chart_band() {
        let (u, v) = scaled_from_qp(0.1, 0.3, 10.0).unwrap();
        assert_eq!((u, v), (0.3, 1.0));
        let (_, v) = scaled_from_qp(0.1, 0.0, 20.0 / 7.0).unwrap();
        assert!((v - 3.5).abs() < 1e-12);
        match scaled_from_qp(0.1, 0.0, 1.0) {
            Err(Error::ScaledBand { lo, hi, .. }) => {
                assert!((lo - 2.0 / 0.7).abs() < 1e-12);
                assert!((hi - 20.0).abs() < 1e-12);
            }
            other => panic!("expected band error, got {other:?}"),
        }
        let (q_cap, p_cap) = scaled_to_qp(0.1, 0.3, 1.0);
        assert_eq!((q_cap, p_cap), (0.3, 10.0));
    }

    #[test]
    fn model_file_round_trip() {
        let text = "# demo\nS = 6.283185307179586\nT = 1\nfbar = 0\n g.harmonics = (1, 0, -1)\nf.harmonics = (1, 0.3, 0), (2, 0, 0.1)\n";
        let spec = parse_model(text).unwrap();
        assert_eq!(spec.potential.harmonics().len(), 1);
        assert_eq!(spec.forcing.harmonics().len(), 2);
        let spec2 = parse_model(&format_model(&spec)).unwrap();
        assert_eq!(spec, spec2);
    }

    #[test]
    fn model_file_collects_all_issues() {
        let text = "S = -1\nbogus = 3\nT = 1\nT = 2\ng.harmonics = (0, 1, 1)\n";
        match parse_model(text) {
            Err(Error::ModelParse { issues }) => {
                assert!(issues.len() >= 3, "expected several issues, got {issues:?}");
                assert!(issues.iter().any(|m| m.contains("duplicate key 'T'")));
                assert!(issues.iter().any(|m| m.contains("unknown key 'bogus'")));
                assert!(issues.iter().any(|m| m.contains("S must be positive")));
            }
            other => panic!("expected parse issues, got {other:?}"),
        }
    }

    #[test]
    fn model_file_missing_required() {
        match parse_model("fbar = 0.5\n") {
            Err(Error::ModelParse { issues }) => {
                assert!(issues.iter().any(|m| m.contains("'S'")));
                assert!(issues.iter().any(|m| m.contains("'T'")));
            }
            other => panic!("expected parse issues, got {other:?}"),
        }
    }
}
