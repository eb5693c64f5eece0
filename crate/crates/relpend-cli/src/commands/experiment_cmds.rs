//! The end-to-end demonstration commands.

use serde_json::json;

use relpend::experiments::{
    boundedness_sweep, escape_demo, momentum_grid, quasiperiodic_demo, subharmonic_demo,
};
use relpend::mather::MinimizeOptions;

use crate::artifacts::fmt;
use crate::commands::unit_period_model;
use crate::config::{tol_param, ParamKind, ParamSpec};
use crate::error::CliError;
use crate::registry::{Command, RunContext, Verdict};

pub struct Boundedness;

static BOUNDEDNESS_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("p_min", ParamKind::Float, "lowest initial momentum").default("-20"),
    ParamSpec::new("p_max", ParamKind::Float, "highest initial momentum").default("20"),
    ParamSpec::new("p_count", ParamKind::UInt, "grid size of initial momenta").default("41").range(1.0, 1e5),
    ParamSpec::new("q0", ParamKind::Float, "initial position of all orbits").default("0"),
    ParamSpec::new("iterates", ParamKind::UInt, "period-map iterates per orbit").default("10000").range(1.0, 1e8),
    ParamSpec::new("bound", ParamKind::Float, "excursion budget for the PASS verdict").default("5").range(0.0, 1e9),
    tol_param("1e-10"),
];

impl Command for Boundedness {
    fn name(&self) -> &'static str {
        "boundedness"
    }

    fn summary(&self) -> &'static str {
        "sweep initial momenta under zero-mean forcing and bound the excursions"
    }

    fn params(&self) -> &'static [ParamSpec] {
        BOUNDEDNESS_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let cfg = ctx.cfg;
        let grid = momentum_grid(cfg.f64("p_min"), cfg.f64("p_max"), cfg.u64("p_count") as usize);
        let report = boundedness_sweep(
            ctx.spec,
            &grid,
            cfg.f64("q0"),
            cfg.u64("iterates") as usize,
            cfg.f64("bound"),
            cfg.f64("tol"),
        )?;
        ctx.out.csv(
            "sweep.csv",
            "p0,excursion,sup_abs_p,iterates_done,failure",
            report.orbits.iter().map(|o| {
                format!(
                    "{},{},{},{},{}",
                    fmt(o.p0),
                    fmt(o.excursion),
                    fmt(o.sup_abs_p),
                    o.iterates_done,
                    o.failure.as_deref().unwrap_or("")
                )
            }),
        )?;
        let pass = report.pass;
        let max_excursion = report.max_excursion;
        let failures = report.failures;
        ctx.out.json("report.json", &serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?)?;
        if pass {
            Ok(Verdict::Pass)
        } else {
            Ok(Verdict::Fail(format!(
                "max excursion {max_excursion} vs bound {}, {failures} failures",
                cfg.f64("bound")
            )))
        }
    }
}

pub struct Escape;

static ESCAPE_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("p0", ParamKind::Float, "launch momentum of the main orbit").default("50"),
    ParamSpec::new("iterates", ParamKind::UInt, "period-map iterates of the main orbit").default("200").range(2.0, 1e7),
    ParamSpec::new("scan_levels", ParamKind::UInt, "momentum levels scanned for the threshold").default("6").range(2.0, 1e3),
    ParamSpec::new("slope_rel_tol", ParamKind::Float, "relative budget for the slope vs T·fbar").default("0.05").range(0.0, 1.0),
    tol_param("1e-10"),
];

impl Command for Escape {
    fn name(&self) -> &'static str {
        "escape"
    }

    fn summary(&self) -> &'static str {
        "demonstrate momentum escape under nonzero-mean forcing"
    }

    fn params(&self) -> &'static [ParamSpec] {
        ESCAPE_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let cfg = ctx.cfg;
        let report = escape_demo(
            ctx.spec,
            cfg.f64("p0"),
            cfg.u64("iterates") as usize,
            cfg.u64("scan_levels") as usize,
            cfg.f64("tol"),
        )?;
        ctx.out.csv(
            "escape.csv",
            "n,q,p,v",
            report.samples.iter().map(|s| format!("{},{},{},{}", s.n, fmt(s.q), fmt(s.p), fmt(s.v))),
        )?;
        let half = report.t_fbar.abs() / 2.0;
        let slope_gap = (report.slope - report.t_fbar).abs() / report.t_fbar.abs();
        let pass = report.min_increment > half && slope_gap <= cfg.f64("slope_rel_tol");
        ctx.out.json("report.json", &serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?)?;
        if pass {
            Ok(Verdict::Pass)
        } else {
            Ok(Verdict::Fail(format!(
                "min increment {} vs T·fbar/2 = {half}, slope {} vs {}",
                report.min_increment, report.slope, report.t_fbar
            )))
        }
    }
}

pub struct Subharmonic;

static SUBHARMONIC_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("winding", ParamKind::Int, "winding a in cylinder units").required(),
    ParamSpec::new("periods", ParamKind::UInt, "period b in forcing periods").required().range(1.0, 1e6),
    ParamSpec::new("n_factors", ParamKind::UInt, "factor count N (0 = smallest admissible)").default("0").range(0.0, 4096.0),
    ParamSpec::new("residual_tol", ParamKind::Float, "stationarity target").default("1e-9").range(1e-12, 1e-3),
    ParamSpec::new("max_sweeps", ParamKind::UInt, "site-sweep budget").default("3000").range(1.0, 1e6),
    ParamSpec::new("multistart", ParamKind::UInt, "shifted uniform initializations").default("4").range(1.0, 64.0),
    tol_param("1e-12"),
];

fn minimize_options(ctx: &RunContext) -> MinimizeOptions {
    MinimizeOptions {
        residual_tol: ctx.cfg.f64("residual_tol"),
        max_sweeps: ctx.cfg.u64("max_sweeps") as usize,
        multistart: ctx.cfg.u64("multistart") as usize,
        seed: ctx.seed,
    }
}

impl Command for Subharmonic {
    fn name(&self) -> &'static str {
        "subharmonic"
    }

    fn summary(&self) -> &'static str {
        "build an (a, b) subharmonic certificate and verify it through the flow"
    }

    fn params(&self) -> &'static [ParamSpec] {
        SUBHARMONIC_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let cfg = ctx.cfg;
        let (spec, rescaled) = unit_period_model(ctx.spec);
        let n_factors = cfg.u64("n_factors");
        let n = if n_factors == 0 { None } else { Some(n_factors as usize) };
        let cert = subharmonic_demo(
            &spec,
            cfg.i64("winding"),
            cfg.u64("periods") as u32,
            n,
            &minimize_options(ctx),
            cfg.f64("tol"),
        )?;
        ctx.out.csv(
            "solution.csv",
            "t,Q,P",
            cert.flow_samples.iter().map(|(t, z)| format!("{},{},{}", fmt(*t), fmt(z.q), fmt(z.p))),
        )?;
        let pass = cert.translation_defect < 1e-5 && cert.factor_match < 1e-6;
        ctx.out.json(
            "report.json",
            &json!({
                "rescaled_to_unit_period": rescaled,
                "winding": cert.winding,
                "periods": cert.periods,
                "n_factors": cert.n_factors,
                "translation_defect": cert.translation_defect,
                "factor_match": cert.factor_match,
                "rotation": cert.rotation,
                "action": cert.orbit.action,
                "stationarity_residual": cert.orbit.residual,
            }),
        )?;
        if pass {
            Ok(Verdict::Pass)
        } else {
            Ok(Verdict::Fail(format!(
                "translation defect {} (budget 1e-5), factor match {} (budget 1e-6)",
                cert.translation_defect, cert.factor_match
            )))
        }
    }
}

pub struct Quasiperiodic;

static QUASIPERIODIC_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("omega", ParamKind::Float, "target rotation number in (-T, T)").required(),
    ParamSpec::new("cap", ParamKind::UInt, "largest convergent denominator").default("200").range(1.0, 1e6),
    ParamSpec::new("n_factors", ParamKind::UInt, "factor count N (0 = smallest admissible)").default("0").range(0.0, 4096.0),
    ParamSpec::new("residual_tol", ParamKind::Float, "stationarity target").default("1e-9").range(1e-12, 1e-3),
    ParamSpec::new("max_sweeps", ParamKind::UInt, "site-sweep budget").default("3000").range(1.0, 1e6),
    ParamSpec::new("multistart", ParamKind::UInt, "shifted uniform initializations").default("2").range(1.0, 64.0),
    tol_param("1e-12"),
];

impl Command for Quasiperiodic {
    fn name(&self) -> &'static str {
        "quasiperiodic"
    }

    fn summary(&self) -> &'static str {
        "approach an irrational rotation number through convergent certificates"
    }

    fn params(&self) -> &'static [ParamSpec] {
        QUASIPERIODIC_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let cfg = ctx.cfg;
        let (spec, rescaled) = unit_period_model(ctx.spec);
        let n_factors = cfg.u64("n_factors");
        let n = if n_factors == 0 { None } else { Some(n_factors as usize) };
        let report = quasiperiodic_demo(
            &spec,
            cfg.f64("omega"),
            cfg.u64("cap") as u32,
            n,
            &minimize_options(ctx),
            cfg.f64("tol"),
        )?;
        ctx.out.csv(
            "convergents.csv",
            "k,winding,periods,action,residual,slope,gap,bound",
            report.convergents.iter().map(|c| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    c.k,
                    c.winding,
                    c.periods,
                    fmt(c.action),
                    fmt(c.residual),
                    fmt(c.slope),
                    fmt(c.gap),
                    fmt(c.bound)
                )
            }),
        )?;
        let pass = !report.convergents.is_empty() && report.convergents.iter().all(|c| c.gap <= c.bound);
        let mut value = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
        value["rescaled_to_unit_period"] = json!(rescaled);
        ctx.out.json("report.json", &value)?;
        if pass {
            Ok(Verdict::Pass)
        } else {
            Ok(Verdict::Fail("some convergent slope missed its approximation budget".into()))
        }
    }
}
