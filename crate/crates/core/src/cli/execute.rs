use serde::de::DeserializeOwned;
use serde_json::{json, Map, Value};

use super::output::load_params;
use super::{
    Cell, CliError, CommandRequest, RunReport, SubcommandKind, Table, DEFAULT_SEED, EXIT_NUMERICAL,
    EXIT_SUCCESS,
};
use crate::approx_family::{default_grid, map_by_name, reference_by_name, run_gallery, verify_mapping, EQUIVALENCE_TOLERANCE};
use crate::bivariate::{marginal_pdf_w, model_mean, model_var, sample_w, u_moments, BivariateParams};
use crate::compound::{
    geometric_exponential_moments, ks_critical_value, simulate_random_sum, DiscrepancyReport, RandomSumSpec,
    SupportConvention,
};
use crate::fit::{fit_mode_mean, fit_two_component, grid_oracle, FitConfig, ModeMeanTarget, MomentTarget};
use crate::rmm::{mode_density, rmm_pdf, Branch, Preset, RmmParams, RmmShape, Support};

const MARGINAL_TOLERANCE: f64 = 1e-12;
const DEFAULT_SAMPLE_SIZE: usize = 1000;
const DEFAULT_COMPOUND_SIZE: usize = 100_000;

fn missing(key: &str) -> CliError {
    CliError::usage(format!("missing field `{key}`"))
}

/// The merged parameter record.
struct Inputs {
    map: Map<String, Value>,
}

impl Inputs {
    fn from_request(request: &CommandRequest) -> Result<Self, CliError> {
        let mut map = match &request.params_path {
            Some(path) => load_params(path)?,
            None => Map::new(),
        };
        for (key, raw) in &request.overrides {
            let value = match raw.parse::<f64>() {
                Ok(x) if x.is_finite() => json!(x),
                _ => Value::String(raw.clone()),
            };
            map.insert(key.clone(), value);
        }
        Ok(Inputs { map })
    }

    fn has(&self, key: &str) -> bool {
        self.map.contains_key(key)
    }

    fn text(&self, key: &str) -> Option<String> {
        match self.map.get(key)? {
            Value::String(s) => Some(s.clone()),
            other => Some(other.to_string()),
        }
    }

    fn number(&self, key: &str) -> Result<Option<f64>, CliError> {
        match self.map.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => Ok(n.as_f64()),
            Some(Value::String(s)) => s
                .parse::<f64>()
                .map(Some)
                .map_err(|_| CliError::usage(format!("field `{key}` must be a number, got `{s}`"))),
            Some(other) => Err(CliError::usage(format!("field `{key}` must be a number, got {other}"))),
        }
    }

    fn require(&self, key: &str) -> Result<f64, CliError> {
        self.number(key)?.ok_or_else(|| missing(key))
    }

    fn count(&self, key: &str) -> Result<Option<usize>, CliError> {
        match self.number(key)? {
            None => Ok(None),
            Some(x) if x >= 0.0 && x.fract() == 0.0 && x <= usize::MAX as f64 => Ok(Some(x as usize)),
            Some(x) => Err(CliError::usage(format!("field `{key}` must be a non-negative integer, got {x}"))),
        }
    }

    /// A number, a JSON array, `a,b,c`, or an inclusive grid `lo:hi:n`.
    fn points(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let bad = |s: &str| CliError::usage(format!("field `{key}`: cannot read `{s}` as numbers"));
        match self.map.get(key).ok_or_else(|| missing(key))? {
            Value::Number(n) => Ok(vec![n.as_f64().unwrap_or(f64::NAN)]),
            Value::Array(items) => items
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| bad(&v.to_string())))
                .collect(),
            Value::String(s) if s.contains(':') => {
                let parts: Vec<&str> = s.split(':').collect();
                let [lo, hi, n] = parts[..] else { return Err(bad(s)) };
                let lo: f64 = lo.trim().parse().map_err(|_| bad(s))?;
                let hi: f64 = hi.trim().parse().map_err(|_| bad(s))?;
                let n: usize = n.trim().parse().map_err(|_| bad(s))?;
                Ok(crate::approx_family::linear_grid(lo, hi, n))
            }
            Value::String(s) => s
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad(s)))
                .collect(),
            other => Err(bad(&other.to_string())),
        }
    }

    fn record<T: DeserializeOwned>(&self, what: &str) -> Result<T, CliError> {
        serde_json::from_value(Value::Object(self.map.clone()))
            .map_err(|e| CliError::usage(format!("invalid {what} record: {e}")))
    }
}

enum Model {
    Rmm(RmmParams),
    Bivariate(BivariateParams),
}

fn rmm_from(inputs: &Inputs) -> Result<RmmParams, CliError> {
    if let Some(name) = inputs.text("preset") {
        return Ok(Preset::from_name(&name, inputs.number("alpha")?)?.params()?);
    }
    let branch = match inputs.text("branch").as_deref() {
        None | Some("reflected") => Branch::Reflected,
        Some("principal") => Branch::Principal,
        Some(other) => return Err(CliError::usage(format!("unknown branch `{other}`"))),
    };
    let shape = RmmShape::new(inputs.require("alpha")?, inputs.require("lambda")?, inputs.require("L")?)?;
    Ok(shape.with_branch(branch).params()?)
}

fn model_from(inputs: &Inputs) -> Result<Model, CliError> {
    let bivariate = match inputs.text("model").as_deref() {
        Some("rmm") => false,
        Some("bivariate") => true,
        Some(other) => return Err(CliError::usage(format!("unknown model `{other}`"))),
        None => !inputs.has("preset") && (inputs.has("M1") || inputs.has("sigma1") || inputs.has("sigma2")),
    };
    if bivariate {
        Ok(Model::Bivariate(inputs.record("bivariate")?))
    } else {
        Ok(Model::Rmm(rmm_from(inputs)?))
    }
}

fn success(payload: Value, table: Option<Table>, diagnostics: Vec<String>) -> RunReport {
    RunReport {
        exit_code: EXIT_SUCCESS,
        payload,
        table,
        diagnostics,
    }
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn pdf(inputs: &Inputs) -> Result<RunReport, CliError> {
    let (label, params, points) = match model_from(inputs)? {
        Model::Rmm(p) => {
            let zs = inputs.points("z")?;
            let values = zs
                .iter()
                .map(|&z| rmm_pdf(z, &p).map(|f| (z, f)))
                .collect::<crate::error::Result<Vec<_>>>()?;
            ("z", to_value(&p), values)
        }
        Model::Bivariate(p) => {
            let ws = inputs.points("w")?;
            let values = ws
                .iter()
                .map(|&w| marginal_pdf_w(w, &p, MARGINAL_TOLERANCE).map(|f| (w, f)))
                .collect::<crate::error::Result<Vec<_>>>()?;
            ("w", to_value(&p), values)
        }
    };
    let table = Table {
        columns: vec![label.into(), "pdf".into()],
        rows: points.iter().map(|&(x, f)| vec![Cell::Num(x), Cell::Num(f)]).collect(),
    };
    let payload = json!({
        "params": params,
        "points": points.iter().map(|&(x, f)| json!({ label: x, "pdf": f })).collect::<Vec<_>>(),
    });
    Ok(success(payload, Some(table), vec![]))
}

fn key_value_table(pairs: &[(&str, f64)]) -> Table {
    Table {
        columns: vec!["key".into(), "value".into()],
        rows: pairs
            .iter()
            .map(|&(k, v)| vec![Cell::Text(k.into()), Cell::Num(v)])
            .collect(),
    }
}

fn moments(inputs: &Inputs) -> Result<RunReport, CliError> {
    match model_from(inputs)? {
        Model::Rmm(p) => {
            let mut diagnostics = Vec::new();
            let mut raw = Vec::new();
            for k in 0..=4 {
                match p.raw_moment(k) {
                    Ok(m) => raw.push(m),
                    Err(crate::error::Error::Domain(msg)) if p.support == Support::ParetoTail => {
                        diagnostics.push(msg);
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            let mode = mode_density(&p)?;
            let mut pairs = vec![("kappa", p.kappa), ("mode_density", mode)];
            let names = ["m0", "m1", "m2", "m3", "m4"];
            pairs.extend(names.iter().copied().zip(raw.iter().copied()));
            let variance = (raw.len() > 2).then(|| raw[2] - raw[1] * raw[1]);
            if let Some(v) = variance {
                pairs.push(("mean", raw[1]));
                pairs.push(("variance", v));
            }
            let payload = json!({
                "params": p,
                "kappa": p.kappa,
                "mode_density": mode,
                "raw_moments": raw,
                "mean": raw.get(1),
                "variance": variance,
            });
            Ok(success(payload, Some(key_value_table(&pairs)), diagnostics))
        }
        Model::Bivariate(p) => {
            let (mean_u, var_u) = u_moments(&p)?;
            let (mean, var) = (model_mean(&p)?, model_var(&p)?);
            let payload = json!({
                "params": p,
                "mean_u": mean_u,
                "var_u": var_u,
                "mean": mean,
                "variance": var,
            });
            let table = key_value_table(&[("mean_u", mean_u), ("var_u", var_u), ("mean", mean), ("variance", var)]);
            Ok(success(payload, Some(table), vec![]))
        }
    }
}

fn fit(inputs: &Inputs) -> Result<RunReport, CliError> {
    if inputs.has("mode_density") || inputs.has("standardized_mean") {
        let target = ModeMeanTarget::new(inputs.require("mode_density")?, inputs.require("standardized_mean")?)?;
        let r = fit_mode_mean(&target)?;
        let table = key_value_table(&[
            ("alpha", r.alpha),
            ("lambda", r.lambda),
            ("kappa", r.kappa),
            ("L", r.l),
            ("residual", r.residual),
        ]);
        return Ok(success(json!({ "target": target, "fit": r }), Some(table), vec![]));
    }
    let target = MomentTarget::new(inputs.require("mean")?, inputs.require("var")?)?;
    let config = FitConfig::default();
    let r = fit_two_component(&target, &config)?;
    let mut diagnostics = vec![format!("status: {:?}, residual {:e}", r.status, r.residual)];
    let reproduced = BivariateParams::new(r.lambda, r.m1, r.sigma1, r.sigma2)
        .and_then(|p| Ok((model_mean(&p)?, model_var(&p)?)));
    let (rep_mean, rep_var) = match reproduced {
        Ok(v) => v,
        Err(e) => {
            diagnostics.push(format!("fitted point does not form a valid model: {e}"));
            (f64::NAN, f64::NAN)
        }
    };
    let mut payload = json!({
        "target": target,
        "fit": r,
        "reproduced": { "mean": rep_mean, "variance": rep_var },
    });
    let mut pairs = vec![
        ("lambda", r.lambda),
        ("M1", r.m1),
        ("sigma1", r.sigma1),
        ("sigma2", r.sigma2),
        ("residual", r.residual),
        ("reproduced_mean", rep_mean),
        ("reproduced_variance", rep_var),
    ];
    if let Some(n) = inputs.count("grid")? {
        let (candidate, value) = grid_oracle(&target, &config, n)?;
        payload["grid_oracle"] = json!({ "candidate": candidate, "residual": value });
        pairs.push(("grid_residual", value));
        diagnostics.push(format!("grid oracle ({n}^3 points): residual {value:e}"));
    }
    Ok(success(payload, Some(key_value_table(&pairs)), diagnostics))
}

fn sample(inputs: &Inputs, seed: u64) -> Result<RunReport, CliError> {
    let p: BivariateParams = inputs.record("bivariate")?;
    let n = inputs.count("n")?.unwrap_or(DEFAULT_SAMPLE_SIZE);
    let draws = sample_w(&p, n, seed)?;
    let table = Table {
        columns: vec!["index".into(), "w".into()],
        rows: draws
            .iter()
            .enumerate()
            .map(|(i, &w)| vec![Cell::Int(i as u64), Cell::Num(w)])
            .collect(),
    };
    let payload = json!({ "params": p, "seed": seed, "n": n, "samples": draws });
    Ok(success(payload, Some(table), vec![format!("seed = {seed}")]))
}

fn map(inputs: &Inputs) -> Result<RunReport, CliError> {
    let family = inputs.text("family").ok_or_else(|| missing("family"))?;
    let arg = |k: &str| inputs.number(k).ok().flatten();
    let mapped = map_by_name(&family, arg)?;
    let reference = reference_by_name(&family, arg)?;
    let grid = default_grid(&mapped);
    let deviation = verify_mapping(&mapped, &reference, &grid)?;
    let pass = deviation <= EQUIVALENCE_TOLERANCE;
    let p = mapped.params;
    let table = key_value_table(&[
        ("lambda1", p.lambda1),
        ("lambda2", p.lambda2),
        ("alpha1", p.alpha1),
        ("alpha2", p.alpha2),
        ("beta0", p.beta0),
        ("beta1", p.beta1),
        ("weight_sum", mapped.weight_sum()),
        ("deviation", deviation),
    ]);
    let payload = json!({
        "mapping": mapped,
        "weight_sum": mapped.weight_sum(),
        "deviation": deviation,
        "grid": { "lower": grid.first(), "upper": grid.last(), "points": grid.len() },
        "pass": pass,
    });
    let mut report = success(payload, Some(table), vec![format!(
        "{} {}: deviation {deviation:e}",
        if pass { "PASS" } else { "FAIL" },
        mapped.name
    )]);
    if !pass {
        report.exit_code = EXIT_NUMERICAL;
    }
    Ok(report)
}

fn compound(inputs: &Inputs, seed: u64) -> Result<RunReport, CliError> {
    let convention = match inputs.text("convention").as_deref() {
        None | Some("from_one") | Some("one") => SupportConvention::FromOne,
        Some("from_zero") | Some("zero") => SupportConvention::FromZero,
        Some(other) => return Err(CliError::usage(format!("unknown convention `{other}`"))),
    };
    let spec = RandomSumSpec::new(inputs.require("p")?, inputs.number("rate")?.unwrap_or(1.0), convention)?;
    let n = inputs.count("n")?.unwrap_or(DEFAULT_COMPOUND_SIZE);
    let (closed_mean, closed_var) = geometric_exponential_moments(&spec)?;
    let (sim, draws) = simulate_random_sum(&spec, n, seed)?;
    let critical_1 = ks_critical_value(0.01, n);
    let critical_5 = ks_critical_value(0.05, n);
    let discrepancy = DiscrepancyReport::new(spec.p, spec.rate)?;
    let mut diagnostics = vec![format!("seed = {seed}")];
    diagnostics.push(format!(
        "KS against the exponential with mean {closed_mean}: {} (1% critical value {critical_1})",
        sim.ks_stat
    ));
    diagnostics.extend(discrepancy.lines());
    let payload = json!({
        "spec": spec,
        "seed": seed,
        "closed_form": { "mean": closed_mean, "variance": closed_var },
        "simulation": sim,
        "ks_critical": { "level_0.01": critical_1, "level_0.05": critical_5 },
        "exponential_at_1pct": sim.ks_stat < critical_1,
        "discrepancy": discrepancy,
    });
    let table = Table {
        columns: vec!["index".into(), "s".into()],
        rows: draws
            .iter()
            .enumerate()
            .map(|(i, &s)| vec![Cell::Int(i as u64), Cell::Num(s)])
            .collect(),
    };
    Ok(success(payload, Some(table), diagnostics))
}

fn verify() -> Result<RunReport, CliError> {
    let rows = run_gallery()?;
    let mut diagnostics: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{:<4} {:<17} {:<44} deviation {:.3e}  weight sum {}",
                if r.pass { "PASS" } else { "FAIL" },
                r.family,
                r.name,
                r.deviation,
                r.weight_sum
            )
        })
        .collect();
    let mut families: Vec<&str> = Vec::new();
    for r in &rows {
        if !families.contains(&r.family.as_str()) {
            families.push(&r.family);
        }
    }
    let family_pass: Vec<(String, bool)> = families
        .iter()
        .map(|f| (f.to_string(), rows.iter().filter(|r| r.family == *f).all(|r| r.pass)))
        .collect();
    let all = family_pass.iter().all(|(_, p)| *p);
    diagnostics.push(format!(
        "{} of {} mappings pass",
        family_pass.iter().filter(|(_, p)| *p).count(),
        family_pass.len()
    ));
    let table = Table {
        columns: ["family", "name", "weight_sum", "deviation", "pass"].map(String::from).to_vec(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    Cell::Text(r.family.clone()),
                    Cell::Text(r.name.clone()),
                    Cell::Num(r.weight_sum),
                    Cell::Num(r.deviation),
                    Cell::Text(if r.pass { "PASS" } else { "FAIL" }.into()),
                ]
            })
            .collect(),
    };
    let payload = json!({
        "rows": rows,
        "families": family_pass.iter().map(|(f, p)| json!({ "family": f, "pass": p })).collect::<Vec<_>>(),
        "all_pass": all,
    });
    let mut report = success(payload, Some(table), diagnostics);
    if !all {
        report.exit_code = EXIT_NUMERICAL;
    }
    Ok(report)
}

/// Runs a parsed request. Failures become a report with a non-zero exit code
/// and a diagnostic.
pub fn execute(request: &CommandRequest) -> RunReport {
    let seed = request.seed.unwrap_or(DEFAULT_SEED);
    let result = Inputs::from_request(request).and_then(|inputs| match request.subcommand {
        SubcommandKind::Pdf => pdf(&inputs),
        SubcommandKind::Moments => moments(&inputs),
        SubcommandKind::Fit => fit(&inputs),
        SubcommandKind::Sample => sample(&inputs, seed),
        SubcommandKind::Map => map(&inputs),
        SubcommandKind::Compound => compound(&inputs, seed),
        SubcommandKind::Verify => verify(),
    });
    result.unwrap_or_else(|e| RunReport::failure(e.exit_code, e.message))
}
