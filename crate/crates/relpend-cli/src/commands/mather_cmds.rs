//! Minimal-orbit computation and hull-function export.

use serde_json::json;

use relpend::experiments::confinement_check;
use relpend::mather::{
    comparability, hull_functions, minimize, reconstruct_orbit, Comparability, FactorChain,
    MatherOrbit, MinimizeOptions,
};
use relpend::model::ModelSpec;

use crate::artifacts::fmt;
use crate::commands::{resolve_factor_count, unit_period_model};
use crate::config::{tol_param, ParamKind, ParamSpec};
use crate::error::CliError;
use crate::registry::{Command, RunContext, Verdict};

static MATHER_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("winding", ParamKind::Int, "winding a in cylinder units").required(),
    ParamSpec::new("periods", ParamKind::UInt, "period b in map periods").required().range(1.0, 1e6),
    ParamSpec::new("n_factors", ParamKind::UInt, "factor count N (0 = smallest admissible)").default("0").range(0.0, 4096.0),
    ParamSpec::new("residual_tol", ParamKind::Float, "stationarity target").default("1e-9").range(1e-12, 1e-3),
    ParamSpec::new("max_sweeps", ParamKind::UInt, "site-sweep budget").default("3000").range(1.0, 1e6),
    ParamSpec::new("multistart", ParamKind::UInt, "shifted uniform initializations").default("4").range(1.0, 64.0),
    ParamSpec::new("r_cap", ParamKind::Float, "confinement band half-width for the diagnostic").default("5").range(1e-12, 1e9),
    tol_param("1e-12"),
];

fn options(ctx: &RunContext) -> MinimizeOptions {
    MinimizeOptions {
        residual_tol: ctx.cfg.f64("residual_tol"),
        max_sweeps: ctx.cfg.u64("max_sweeps") as usize,
        multistart: ctx.cfg.u64("multistart") as usize,
        seed: ctx.seed,
    }
}

struct OrbitRun<'a> {
    chain: FactorChain<'a>,
    orbit: MatherOrbit,
}

fn compute_orbit<'a>(spec: &'a ModelSpec, ctx: &RunContext) -> Result<OrbitRun<'a>, CliError> {
    let n = resolve_factor_count(spec, ctx.cfg.u64("n_factors"));
    let chain = FactorChain::new(spec, n, 1e-12, ctx.cfg.f64("tol"))?;
    let orbit = minimize(&chain, ctx.cfg.i64("winding"), ctx.cfg.u64("periods") as u32, None, &options(ctx))?;
    Ok(OrbitRun { chain, orbit })
}

pub struct Mather;

impl Command for Mather {
    fn name(&self) -> &'static str {
        "mather"
    }

    fn summary(&self) -> &'static str {
        "minimize the (a, b) action and verify the orbit against the flow"
    }

    fn params(&self) -> &'static [ParamSpec] {
        MATHER_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let (spec, rescaled) = unit_period_model(ctx.spec);
        let run = compute_orbit(&spec, ctx)?;
        let OrbitRun { chain, orbit } = &run;
        let n_factors = chain.n_factors();

        ctx.out.csv(
            "orbit.csv",
            "i,factor,theta,r",
            orbit
                .config
                .sites
                .iter()
                .zip(&orbit.momenta)
                .enumerate()
                .map(|(i, (theta, r))| format!("{},{},{},{}", i, i % n_factors, fmt(*theta), fmt(*r))),
        )?;

        let recon = reconstruct_orbit(chain, orbit)?;
        let translate_set: [(i64, i64); 5] = [(1, 0), (0, 0), (0, 1), (1, 1), (-1, 0)];
        let mut ordered = true;
        let comparisons: Vec<_> = translate_set
            .iter()
            .map(|&(p, q)| {
                let cmp = comparability(&orbit.config, p, q, n_factors, 1e-9);
                if let Comparability::Crossing { .. } = cmp {
                    ordered = false;
                }
                json!({ "p": p, "q": q, "relation": format!("{cmp:?}") })
            })
            .collect();
        let confinement = confinement_check(orbit, ctx.cfg.f64("r_cap"));

        let pass = orbit.residual < 1e-7 && recon.max_mismatch < 1e-6 && ordered && confinement.pass;
        ctx.out.json(
            "report.json",
            &json!({
                "rescaled_to_unit_period": rescaled,
                "winding": orbit.config.winding,
                "periods": orbit.config.periods,
                "n_factors": n_factors,
                "rotation": orbit.rotation,
                "action": orbit.action,
                "stationarity_residual": orbit.residual,
                "band_clamps": orbit.clamps,
                "multistart_action_spread": orbit.multistart_spread,
                "reconstruction": recon,
                "translates": comparisons,
                "translates_ordered": ordered,
                "confinement": confinement,
            }),
        )?;
        if pass {
            Ok(Verdict::Pass)
        } else {
            Ok(Verdict::Fail(format!(
                "residual {:.2e}, mismatch {:.2e}, ordered: {ordered}, confined: {}",
                orbit.residual, recon.max_mismatch, confinement.pass
            )))
        }
    }
}

pub struct Hull;

static HULL_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("winding", ParamKind::Int, "winding a in cylinder units").required(),
    ParamSpec::new("periods", ParamKind::UInt, "period b in map periods").required().range(1.0, 1e6),
    ParamSpec::new("n_factors", ParamKind::UInt, "factor count N (0 = smallest admissible)").default("0").range(0.0, 4096.0),
    ParamSpec::new("residual_tol", ParamKind::Float, "stationarity target").default("1e-9").range(1e-12, 1e-3),
    ParamSpec::new("max_sweeps", ParamKind::UInt, "site-sweep budget").default("3000").range(1.0, 1e6),
    ParamSpec::new("multistart", ParamKind::UInt, "shifted uniform initializations").default("4").range(1.0, 64.0),
    ParamSpec::new("grid", ParamKind::UInt, "hull sample count over one period").default("256").range(2.0, 1e6),
    tol_param("1e-12"),
];

impl Command for Hull {
    fn name(&self) -> &'static str {
        "hull"
    }

    fn summary(&self) -> &'static str {
        "hull functions of a rational minimal orbit with certificates"
    }

    fn params(&self) -> &'static [ParamSpec] {
        HULL_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let (spec, rescaled) = unit_period_model(ctx.spec);
        let run = compute_orbit(&spec, ctx)?;
        let hull = hull_functions(&run.chain, &run.orbit, ctx.cfg.u64("grid") as usize)?;
        ctx.out.csv(
            "hull.csv",
            "xi,phi,eta",
            hull.xi
                .iter()
                .zip(hull.phi.iter().zip(&hull.eta))
                .map(|(xi, (phi, eta))| format!("{},{},{}", fmt(*xi), fmt(*phi), fmt(*eta))),
        )?;
        let certs = hull.certificates();
        // "Exact" identities may round once in the unit shift.
        let pass = certs.phi_monotone
            && certs.phi_shift_defect <= 1e-15
            && certs.eta_shift_defect <= 1e-15
            && certs.lips_violations == 0;
        ctx.out.json(
            "report.json",
            &json!({
                "rescaled_to_unit_period": rescaled,
                "winding": hull.winding,
                "periods": hull.periods,
                "omega": hull.omega,
                "alpha_surrogate": hull.alpha_surrogate,
                "orbit_residual": run.orbit.residual,
                "certificates": certs,
            }),
        )?;
        if pass {
            Ok(Verdict::Pass)
        } else {
            Ok(Verdict::Fail(format!(
                "monotone: {}, shift defects ({:.1e}, {:.1e}), lips violations {}",
                certs.phi_monotone, certs.phi_shift_defect, certs.eta_shift_defect, certs.lips_violations
            )))
        }
    }
}
