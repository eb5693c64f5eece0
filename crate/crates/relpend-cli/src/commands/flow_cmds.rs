//! Trajectory and period-map commands.

use serde_json::json;

use relpend::flow::{self, SystemId};
use relpend::model::PhasePoint;
use relpend::poincare::{det2, lift_equivariance_defect, CylinderMap, PoincareMap};

use crate::artifacts::fmt;
use crate::config::{tol_param, ParamKind, ParamSpec};
use crate::error::CliError;
use crate::registry::{Command, RunContext, Verdict};

pub struct Simulate;

static SIMULATE_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("system", ParamKind::Str, "which system to integrate: rpend1, rpend2, or rpend4").default("rpend1"),
    ParamSpec::new("delta", ParamKind::Float, "scale parameter for rpend2").default("0.1").range(0.0, 0.5),
    ParamSpec::new("t0", ParamKind::Float, "start time").default("0"),
    ParamSpec::new("t1", ParamKind::Float, "end time").required(),
    ParamSpec::new("q0", ParamKind::Float, "initial position (lift)").default("0"),
    ParamSpec::new("p0", ParamKind::Float, "initial momentum").default("0"),
    ParamSpec::new("samples", ParamKind::UInt, "number of equispaced output samples").default("200").range(2.0, 1e6),
    ParamSpec::new("jacobian", ParamKind::UInt, "1 to add the variational Jacobian columns").default("0").range(0.0, 1.0),
    tol_param("1e-10"),
];

impl Command for Simulate {
    fn name(&self) -> &'static str {
        "simulate"
    }

    fn summary(&self) -> &'static str {
        "integrate one of the systems with dense output"
    }

    fn params(&self) -> &'static [ParamSpec] {
        SIMULATE_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let cfg = ctx.cfg;
        let sys = match cfg.str("system") {
            "rpend1" => SystemId::Rpend1,
            "rpend2" => SystemId::Rpend2 { delta: cfg.f64("delta") },
            "rpend4" => SystemId::Rpend4,
            other => {
                return Err(CliError::Config(vec![format!(
                    "system = {other:?} is not one of rpend1, rpend2, rpend4"
                )]))
            }
        };
        let (t0, t1) = (cfg.f64("t0"), cfg.f64("t1"));
        let z0 = PhasePoint::new(cfg.f64("q0"), cfg.f64("p0"));
        let tol = cfg.f64("tol");
        let n = cfg.u64("samples") as usize;

        let (stats, final_state) = if cfg.u64("jacobian") == 1 {
            let (samples, stats) = flow::variational_trace(sys, ctx.spec, t0, t1, z0, tol, n)?;
            let rows = samples.iter().map(|(t, z, j)| {
                format!(
                    "{},{},{},{},{},{},{}",
                    fmt(*t), fmt(z.q), fmt(z.p), fmt(j[0][0]), fmt(j[0][1]), fmt(j[1][0]), fmt(j[1][1])
                )
            });
            ctx.out.csv("trajectory.csv", "t,q,p,J11,J12,J21,J22", rows)?;
            (stats, samples.last().map(|(_, z, _)| *z).expect("at least one sample"))
        } else {
            let run = flow::integrate_sampled(sys, ctx.spec, t0, t1, z0, tol, n)?;
            let rows = run.samples.iter().map(|(t, z)| format!("{},{},{}", fmt(*t), fmt(z.q), fmt(z.p)));
            ctx.out.csv("trajectory.csv", "t,q,p", rows)?;
            (run.stats, run.state)
        };
        ctx.out.json(
            "summary.json",
            &json!({
                "system": cfg.str("system"),
                "t0": t0,
                "t1": t1,
                "initial": { "q": z0.q, "p": z0.p },
                "final": { "q": final_state.q, "p": final_state.p },
                "steps": stats.steps,
                "rejects": stats.rejects,
                "rhs_evals": stats.rhs_evals,
            }),
        )?;
        Ok(Verdict::Report)
    }
}

pub struct Poincare;

static POINCARE_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("q0", ParamKind::Float, "initial position (lift)").default("0"),
    ParamSpec::new("p0", ParamKind::Float, "initial momentum").default("0"),
    ParamSpec::new("iterates", ParamKind::UInt, "number of map iterates").default("1000").range(1.0, 1e8),
    tol_param("1e-10"),
];

impl Command for Poincare {
    fn name(&self) -> &'static str {
        "poincare"
    }

    fn summary(&self) -> &'static str {
        "iterate the period map and report area/lift diagnostics"
    }

    fn params(&self) -> &'static [ParamSpec] {
        POINCARE_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let cfg = ctx.cfg;
        let tol = cfg.f64("tol");
        let map = PoincareMap::new(ctx.spec, tol);
        let z0 = PhasePoint::new(cfg.f64("q0"), cfg.f64("p0"));
        let n = cfg.u64("iterates") as usize;

        let mut orbit = Vec::with_capacity(n + 1);
        orbit.push(z0);
        let mut z = z0;
        for _ in 0..n {
            z = map.apply(z)?;
            orbit.push(z);
        }
        ctx.out.csv(
            "orbit.csv",
            "n,q,p",
            orbit.iter().enumerate().map(|(i, z)| format!("{},{},{}", i, fmt(z.q), fmt(z.p))),
        )?;

        let (_, jac) = map.apply_with_jacobian(z0)?;
        let det_defect = (det2(&jac) - 1.0).abs();
        let lift_defect = lift_equivariance_defect(&map, z0)?;
        ctx.out.json(
            "report.json",
            &json!({
                "iterates": n,
                "initial": { "q": z0.q, "p": z0.p },
                "final": { "q": z.q, "p": z.p },
                "det_jacobian_defect": det_defect,
                "lift_equivariance_defect": lift_defect,
                "sup_abs_p": orbit.iter().map(|z| z.p.abs()).fold(0.0, f64::max),
            }),
        )?;
        if det_defect < 1e-8 && lift_defect < 1e-10 {
            Ok(Verdict::Pass)
        } else {
            Ok(Verdict::Fail(format!(
                "map diagnostics out of tolerance: |det-1| = {det_defect:.2e}, lift defect = {lift_defect:.2e}"
            )))
        }
    }
}
