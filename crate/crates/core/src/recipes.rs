//! Canned experiments for each figure, with a machine-checkable trend.
//!
//! Trends are judged on per-point medians over trials with a 5% slack band.
//! A point whose trials mostly failed (disconnected networks) has no median
//! and is left out of the judgement.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::sweep::{emit_csv, emit_plot_data, median, run_sweep, Method, SweepAxis, SweepResult, SweepRow};

pub const FIGURE_IDS: [&str; 7] = ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9"];

/// Relative slack on trend comparisons.
pub const SLACK: f64 = 0.05;

const SOURCES: [(&str, &str); 7] = [
    ("fig3", include_str!("../configs/fig3.toml")),
    ("fig4", include_str!("../configs/fig4.toml")),
    ("fig5", include_str!("../configs/fig5.toml")),
    ("fig6", include_str!("../configs/fig6.toml")),
    ("fig7", include_str!("../configs/fig7.toml")),
    ("fig8", include_str!("../configs/fig8.toml")),
    ("fig9", include_str!("../configs/fig9.toml")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct FigureRecipe {
    pub id: &'static str,
    pub description: String,
    pub experiment: ExperimentConfig,
    /// Non-empty: the sweep is repeated once per total node count.
    pub series_n_nodes: Vec<usize>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RecipeMeta {
    description: String,
    #[serde(default)]
    series_n_nodes: Vec<usize>,
}

/// Shipped recipe `id`.
pub fn recipe(id: &str) -> Result<FigureRecipe> {
    let (id, text) = SOURCES
        .iter()
        .find(|(k, _)| *k == id)
        .ok_or_else(|| Error::UnknownRecipe(id.to_string()))?;
    let origin = Path::new("configs").join(format!("{id}.toml"));
    let perr = |message: String| Error::Parse {
        path: origin.clone(),
        message,
    };
    let mut table: toml::Table = toml::from_str(text).map_err(|e| perr(e.to_string()))?;
    let meta: RecipeMeta = table
        .remove("recipe")
        .ok_or_else(|| perr("missing [recipe] table".into()))?
        .try_into()
        .map_err(|e: toml::de::Error| perr(e.to_string()))?;
    let rest = toml::to_string(&table).map_err(|e| perr(e.to_string()))?;
    let experiment = ExperimentConfig::from_toml_str(&rest, &origin)?;
    Ok(FigureRecipe {
        id,
        description: meta.description,
        experiment,
        series_n_nodes: meta.series_n_nodes,
    })
}

impl FigureRecipe {
    /// The experiment behind each series, labelled.
    pub fn series(&self) -> Result<Vec<(String, ExperimentConfig)>> {
        if self.series_n_nodes.is_empty() {
            return Ok(vec![(self.id.to_string(), self.experiment.clone())]);
        }
        self.series_n_nodes
            .iter()
            .map(|&k| {
                let mut exp = self.experiment.clone();
                exp.scenario = SweepAxis::NNodes.apply(&exp.scenario, k as f64)?;
                Ok((format!("k{k}"), exp))
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct SeriesResult {
    pub label: String,
    pub result: SweepResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrendCheck {
    pub passed: bool,
    /// Measured values against the expected trend.
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct RecipeOutcome {
    pub id: &'static str,
    pub series: Vec<SeriesResult>,
    pub check: TrendCheck,
}

/// Runs shipped recipe `id`; with `out`, writes CSV and plot data under `out/<id>/`.
pub fn run_recipe(id: &str, out: Option<&Path>) -> Result<RecipeOutcome> {
    run_figure(&recipe(id)?, out)
}

pub fn run_figure(recipe: &FigureRecipe, out: Option<&Path>) -> Result<RecipeOutcome> {
    let mut series = Vec::new();
    for (label, exp) in recipe.series()? {
        let result = run_sweep(&exp.sweep_spec())?;
        if let Some(root) = out {
            let dir = if recipe.series_n_nodes.is_empty() {
                root.join(recipe.id)
            } else {
                root.join(recipe.id).join(&label)
            };
            fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
            emit_csv(&result, &dir.join("results.csv"))?;
            emit_plot_data(&result, &dir)?;
        }
        series.push(SeriesResult { label, result });
    }
    let check = check_trend(recipe.id, &series)?;
    if let Some(root) = out {
        let path = root.join(recipe.id).join("trend.txt");
        let text = format!(
            "{}: {}\n{}\n",
            recipe.id,
            if check.passed { "PASS" } else { "FAIL" },
            check.detail
        );
        fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(RecipeOutcome {
        id: recipe.id,
        series,
        check,
    })
}

/// Per axis value, the median of `f` over successful rows of `method`;
/// `None` when fewer than half the trials succeeded.
pub fn point_medians(rows: &[SweepRow], method: Method, f: fn(&SweepRow) -> f64) -> Vec<(f64, Option<f64>)> {
    let mut values: Vec<f64> = Vec::new();
    for r in rows.iter().filter(|r| r.method == method) {
        if !values.contains(&r.axis_value) {
            values.push(r.axis_value);
        }
    }
    values
        .into_iter()
        .map(|v| {
            let group: Vec<&SweepRow> = rows.iter().filter(|r| r.method == method && r.axis_value == v).collect();
            let ok: Vec<f64> = group.iter().filter(|r| r.status.is_ok()).map(|r| f(r)).collect();
            let m = if 2 * ok.len() >= group.len() && !ok.is_empty() {
                Some(median(&ok))
            } else {
                None
            };
            (v, m)
        })
        .collect()
}

fn fmt_points(points: &[(f64, Option<f64>)]) -> String {
    let mut s = String::new();
    for (v, m) in points {
        match m {
            Some(m) => {
                let _ = write!(s, " {v}:{m:.4}");
            }
            None => {
                let _ = write!(s, " {v}:n/a");
            }
        }
    }
    s
}

fn defined(points: &[(f64, Option<f64>)]) -> Vec<(f64, f64)> {
    points.iter().filter_map(|&(v, m)| m.map(|m| (v, m))).collect()
}

/// First index after which no later value improves on it by `SLACK` or more.
pub fn knee_index(medians: &[f64]) -> Option<usize> {
    (0..medians.len()).find(|&i| {
        let best_after = medians[i + 1..].iter().cloned().fold(f64::INFINITY, f64::min);
        !(medians[i] - best_after >= SLACK * medians[i])
    })
}

/// Index of the smallest value.
pub fn argmin(values: &[f64]) -> Option<usize> {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
}

fn verdict(passed: bool, detail: String) -> TrendCheck {
    TrendCheck { passed, detail }
}

/// Evaluates the trend expected for figure `id`.
pub fn check_trend(id: &str, series: &[SeriesResult]) -> Result<TrendCheck> {
    let first = series
        .first()
        .ok_or_else(|| Error::config("recipe produced no results"))?;
    let rows = &first.result.rows;
    let proposed = point_medians(rows, Method::Proposed, |r| r.rmse_m);
    let wcl = point_medians(rows, Method::Wcl, |r| r.rmse_m);
    let p = defined(&proposed);

    let dominance = || -> (bool, String) {
        let ok = !wcl.is_empty()
            && proposed
                .iter()
                .zip(&wcl)
                .all(|((_, a), (_, b))| matches!((a, b), (Some(a), Some(b)) if a <= b));
        (ok, format!("proposed ≤ wcl at every point; wcl medians{}", fmt_points(&wcl)))
    };

    Ok(match id {
        "fig3" | "fig4" => {
            let failed = rows.iter().filter(|r| !r.status.is_ok()).count();
            let (dom, dom_detail) = dominance();
            verdict(
                failed == 0 && dom,
                format!(
                    "expected every trial to localize and {dom_detail}; proposed medians{}, failed rows {failed}",
                    fmt_points(&proposed)
                ),
            )
        }
        "fig5" => {
            let increasing = p.len() == proposed.len() && p.windows(2).all(|w| w[1].1 > w[0].1);
            let low = p.iter().find(|(v, _)| (*v - 0.01).abs() < 1e-12).map(|&(_, m)| m);
            let sub_meter = low.is_some_and(|m| m < 1.0);
            let (dom, dom_detail) = dominance();
            verdict(
                increasing && sub_meter && dom,
                format!(
                    "expected strictly increasing medians, median < 1 m at 0.01 m^2 and {dom_detail}; proposed medians{}",
                    fmt_points(&proposed)
                ),
            )
        }
        "fig6" => {
            let ok = p.len() == proposed.len() && p.windows(2).all(|w| w[1].1 <= (1.0 + SLACK) * w[0].1);
            verdict(
                ok,
                format!("expected non-increasing medians (5% slack); proposed medians{}", fmt_points(&proposed)),
            )
        }
        "fig7" => {
            let at = |a: f64| p.iter().find(|(v, _)| *v == a).map(|&(_, m)| m);
            let (ok, gain) = match (at(15.0), at(20.0)) {
                (Some(m15), Some(m20)) => {
                    let gain = (m15 - m20) / m15;
                    (gain < SLACK, gain)
                }
                _ => (false, f64::NAN),
            };
            verdict(
                ok,
                format!(
                    "expected < 5% improvement from 15 to 20 anchors, measured {:.2}%; proposed medians{}",
                    100.0 * gain,
                    fmt_points(&proposed)
                ),
            )
        }
        "fig8" => {
            let meds: Vec<f64> = p.iter().map(|&(_, m)| m).collect();
            let knee = knee_index(&meds);
            let (ok, knee_r) = match knee {
                Some(k) => {
                    let falling = meds[..=k].windows(2).all(|w| w[1] <= (1.0 + SLACK) * w[0]);
                    let r = p[k].0;
                    (falling && (5.0..=9.0).contains(&r), r)
                }
                None => (false, f64::NAN),
            };
            verdict(
                ok,
                format!(
                    "expected falling medians that flatten (< 5% further gain) from a knee in 7 ± 2 m, knee at {knee_r} m; proposed medians{}",
                    fmt_points(&proposed)
                ),
            )
        }
        "fig9" => {
            let mut detail = String::from("expected argmin(200 nodes) < argmin(50 nodes) and interior minima;");
            let mut argmins = Vec::new();
            let mut interior = true;
            for s in series {
                let eep = defined(&point_medians(&s.result.rows, Method::Proposed, |r| r.energy_error_product));
                let vals: Vec<f64> = eep.iter().map(|&(_, m)| m).collect();
                let i = argmin(&vals);
                let r = i.map(|i| eep[i].0).unwrap_or(f64::NAN);
                interior &= i.is_some_and(|i| i > 0 && i + 1 < vals.len());
                let _ = write!(detail, " {} argmin {r} m;", s.label);
                argmins.push((s.label.clone(), r));
            }
            let find = |l: &str| argmins.iter().find(|(k, _)| k == l).map(|&(_, r)| r);
            let ordered = matches!((find("k200"), find("k50")), (Some(a), Some(b)) if a < b);
            verdict(ordered && interior, detail)
        }
        other => return Err(Error::UnknownRecipe(other.to_string())),
    })
}
