//! Scaled-system diagnostics: expansion remainders and the small-twist
//! hypothesis report.

use serde_json::json;

use relpend::poincare::{moser_hypotheses_report, scaled_map_residuals};

use crate::artifacts::fmt;
use crate::commands::unit_period_model;
use crate::config::{tol_param, ParamKind, ParamSpec};
use crate::error::CliError;
use crate::registry::{Command, RunContext, Verdict};

static DELTA_PARAMS: &[ParamSpec] = &[
    ParamSpec::new("deltas", ParamKind::FloatList, "scale parameters, largest first").default("0.2,0.1,0.05,0.025").range(1e-6, 0.5),
    ParamSpec::new("grid", ParamKind::UInt, "nodes per axis over [0,1] x [1,3]").default("33").range(32.0, 1024.0),
    tol_param("1e-11"),
];

pub struct Expansion;

impl Command for Expansion {
    fn name(&self) -> &'static str {
        "expansion"
    }

    fn summary(&self) -> &'static str {
        "remainder norms of the scaled period map across a δ list"
    }

    fn params(&self) -> &'static [ParamSpec] {
        DELTA_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let cfg = ctx.cfg;
        let (spec, rescaled) = unit_period_model(ctx.spec);
        let grid = cfg.u64("grid") as usize;
        let tol = cfg.f64("tol");
        let mut rows = Vec::new();
        let mut norms = Vec::new();
        for &delta in cfg.f64_list("deltas") {
            let res = scaled_map_residuals(&spec, delta, grid, grid, tol)?;
            for (iu, &u0) in res.residuals.u.iter().enumerate() {
                for (iv, &v0) in res.residuals.v.iter().enumerate() {
                    let r = res.residuals.at(iu, iv);
                    rows.push(format!("{},{},{},{},{}", fmt(delta), fmt(u0), fmt(v0), fmt(r[0]), fmt(r[1])));
                }
            }
            norms.push((delta, res.r1_norms, res.r2_norms));
        }
        ctx.out.csv("residuals.csv", "delta,u0,v0,r1,r2", rows)?;

        let sups: Vec<f64> = norms.iter().map(|(_, r1, r2)| r1.sup.max(r2.sup)).collect();
        let decreasing = sups.windows(2).all(|w| w[1] < w[0]);
        let ratios: Vec<f64> = sups.windows(2).map(|w| w[1] / w[0]).collect();
        ctx.out.json(
            "report.json",
            &json!({
                "rescaled_to_unit_period": rescaled,
                "grid": grid,
                "norms": norms
                    .iter()
                    .map(|(delta, r1, r2)| json!({ "delta": delta, "r1": r1, "r2": r2 }))
                    .collect::<Vec<_>>(),
                "sup_norms": sups,
                "strictly_decreasing": decreasing,
                "successive_ratios": ratios,
            }),
        )?;
        if decreasing {
            Ok(Verdict::Pass)
        } else {
            Ok(Verdict::Fail(format!("sup norms not strictly decreasing: {sups:?}")))
        }
    }
}

pub struct MoserReport;

impl Command for MoserReport {
    fn name(&self) -> &'static str {
        "moser-report"
    }

    fn summary(&self) -> &'static str {
        "small-twist hypothesis diagnostics for the scaled period map"
    }

    fn params(&self) -> &'static [ParamSpec] {
        DELTA_PARAMS
    }

    fn run(&self, ctx: &mut RunContext) -> Result<Verdict, CliError> {
        let cfg = ctx.cfg;
        let (spec, rescaled) = unit_period_model(ctx.spec);
        let grid = cfg.u64("grid") as usize;
        let report = moser_hypotheses_report(&spec, cfg.f64_list("deltas"), (grid, grid), cfg.f64("tol"))?;
        ctx.out.csv(
            "residual_norms.csv",
            "delta,r1_sup,r1_diff1,r1_diff2,r2_sup,r2_diff1,r2_diff2",
            report.rows.iter().map(|row| {
                format!(
                    "{},{},{},{},{},{},{}",
                    fmt(row.delta),
                    fmt(row.r1_norms.sup),
                    fmt(row.r1_norms.diff1),
                    fmt(row.r1_norms.diff2),
                    fmt(row.r2_norms.sup),
                    fmt(row.r2_norms.diff1),
                    fmt(row.r2_norms.diff2)
                )
            }),
        )?;
        let mut value = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
        value["rescaled_to_unit_period"] = json!(rescaled);
        ctx.out.json("report.json", &value)?;
        Ok(Verdict::Report)
    }
}
