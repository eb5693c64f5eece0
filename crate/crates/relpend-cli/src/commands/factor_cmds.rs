//! Factor-map diagnostics and the generating-function surface export.

use serde_json::json;

use relpend::genfun::GeneratingFunction;
use relpend::poincare::{compose_factors, factor_class_report, factor_family};

use crate::artifacts::fmt;
use crate::commands::{resolve_factor_count, unit_period_model};
use crate::config::{tol_param, ParamKind, ParamSpec};
use crate::error::CliError;
use crate::registry::{Command, RunContext, Verdict};

pub struct FactorCheck;

static FACTOR_CHECK_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("n_factors", ParamKind::UInt, "factor count N (0 = smallest admissible)").default("0").range(0.0, 4096.0),
    ParamSpec::new("grid", ParamKind::UInt, "nodes per axis of the class grid").default("41").range(2.0, 1024.0),
    ParamSpec::new("p_window", ParamKind::Float, "momentum half-window of the class grid").default("1e3").range(1e-6, 1e9),
    ParamSpec::new("p_inf", ParamKind::Float, "momentum at which the end limits are probed").default("1e6").range(1.0, 1e9),
    ParamSpec::new("compose_grid", ParamKind::UInt, "nodes per axis of the composition check").default("4").range(2.0, 64.0),
    ParamSpec::new("compose_budget", ParamKind::Float, "composition discrepancy budget, in multiples of tol").default("10").range(1.0, 1e9),
    tol_param("1e-12"),
];

impl Command for FactorCheck {
    fn name(&self) -> &'static str {
        "factor-check"
    }

    fn summary(&self) -> &'static str {
        "verify class membership of the small-time factors and their composition"
    }

    fn params(&self) -> &'static [ParamSpec] {
        FACTOR_CHECK_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let cfg = ctx.cfg;
        let (spec, rescaled) = unit_period_model(ctx.spec);
        let n = resolve_factor_count(&spec, cfg.u64("n_factors"));
        let tol = cfg.f64("tol");
        let grid = cfg.u64("grid") as usize;
        let factors = factor_family(&spec, n)?;

        let mut rows = Vec::new();
        let mut reports = Vec::new();
        for factor in &factors {
            let report = factor_class_report(
                &spec,
                factor,
                (grid, grid),
                cfg.f64("p_window"),
                cfg.f64("p_inf"),
                tol,
            )?;
            rows.push(format!(
                "{},{},{},{},{},{},{},{}",
                fmt(report.tau),
                fmt(report.len),
                fmt(report.twist_min),
                fmt(report.momentum_increment_max),
                fmt(report.momentum_bound),
                report.momentum_violations,
                fmt(report.end_gap_plus),
                fmt(report.end_gap_minus),
            ));
            reports.push(report);
        }
        ctx.out.csv(
            "factors.csv",
            "tau,len,twist_min,momentum_increment_max,momentum_bound,momentum_violations,end_gap_plus,end_gap_minus",
            rows,
        )?;

        let measured: Vec<_> = factors
            .iter()
            .zip(&reports)
            .map(|(f, r)| f.with_twist_margin(r.twist_min))
            .collect();
        let compose_grid = cfg.u64("compose_grid") as usize;
        let composition = compose_factors(&spec, n, (-2.0, 2.0), (compose_grid, compose_grid), tol)?;
        let compose_budget = cfg.f64("compose_budget") * tol;

        let twist_ok = reports.iter().all(|r| r.twist_min > 0.0);
        let momentum_ok = reports.iter().all(|r| r.momentum_violations == 0);
        let ends_ok = reports.iter().all(|r| r.end_gap_plus < 1e-3 && r.end_gap_minus < 1e-3);
        let compose_ok = composition.max_discrepancy < compose_budget;
        ctx.out.json(
            "report.json",
            &json!({
                "rescaled_to_unit_period": rescaled,
                "n_factors": n,
                "factor_len": composition.factor_len,
                "twist_positive_everywhere": twist_ok,
                "momentum_bound_violations": reports.iter().map(|r| r.momentum_violations).sum::<usize>(),
                "end_limits_ok": ends_ok,
                "composition_discrepancy": composition.max_discrepancy,
                "composition_budget": compose_budget,
                "factors": reports,
                "measured_factors": measured,
            }),
        )?;
        if twist_ok && momentum_ok && ends_ok && compose_ok {
            Ok(Verdict::Pass)
        } else {
            Ok(Verdict::Fail(format!(
                "twist ok: {twist_ok}, momentum ok: {momentum_ok}, ends ok: {ends_ok}, composition ok: {compose_ok}"
            )))
        }
    }
}

pub struct GenfunSurface;

static GENFUN_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("n_factors", ParamKind::UInt, "factor count N (0 = smallest admissible)").default("0").range(0.0, 4096.0),
    ParamSpec::new("factor", ParamKind::UInt, "which factor's generating function to sample").default("0"),
    ParamSpec::new("grid_theta", ParamKind::UInt, "start-position nodes").default("17").range(2.0, 512.0),
    ParamSpec::new("grid_inc", ParamKind::UInt, "increment nodes").default("17").range(2.0, 512.0),
    ParamSpec::new("window", ParamKind::Float, "fraction of the admissible band to cover").default("0.9").range(0.05, 0.999),
    ParamSpec::new("shoot_tol", ParamKind::Float, "arrival tolerance of the boundary solves").default("1e-11").range(1e-14, 1e-6),
    tol_param("1e-12"),
];

impl Command for GenfunSurface {
    fn name(&self) -> &'static str {
        "genfun-surface"
    }

    fn summary(&self) -> &'static str {
        "sample a factor's generating function and its derivative identities"
    }

    fn params(&self) -> &'static [ParamSpec] {
        GENFUN_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let cfg = ctx.cfg;
        let (spec, rescaled) = unit_period_model(ctx.spec);
        let n = resolve_factor_count(&spec, cfg.u64("n_factors"));
        let factors = factor_family(&spec, n)?;
        let idx = cfg.u64("factor") as usize;
        if idx >= factors.len() {
            return Err(CliError::Config(vec![format!(
                "factor = {idx} out of range for N = {n} factors"
            )]));
        }
        let gf = GeneratingFunction::new(&spec, factors[idx], cfg.f64("shoot_tol"), cfg.f64("tol"));
        let window = cfg.f64("window");
        let surface = gf.surface(cfg.u64("grid_theta") as usize, cfg.u64("grid_inc") as usize, window)?;
        ctx.out.csv(
            "surface.csv",
            "theta,theta1,h,d1h,d2h,d12h",
            surface.iter().map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    fmt(r.theta), fmt(r.theta1), fmt(r.h), fmt(r.d1h), fmt(r.d2h), fmt(r.d12h)
                )
            }),
        )?;
        let legendre = gf.legendre_diagnostic(7, 9, window)?;
        ctx.out.json(
            "report.json",
            &json!({
                "rescaled_to_unit_period": rescaled,
                "n_factors": n,
                "factor": idx,
                "tau": factors[idx].tau,
                "len": factors[idx].len,
                "band": gf.band(),
                "legendre": legendre,
            }),
        )?;
        if legendre.d12_max < 0.0 {
            Ok(Verdict::Pass)
        } else {
            Ok(Verdict::Fail(format!("Legendre condition violated: max d12h = {}", legendre.d12_max)))
        }
    }
}
