//! Shipped JSON schemas and one example descriptor per kind.

use std::f64::consts::E;

use serde_json::{json, Value};

use crate::descriptor::Kind;
use crate::CliError;

pub fn schema(kind: Kind) -> &'static str {
    match kind {
        Kind::Dominance => include_str!("../schemas/dominance.schema.json"),
        Kind::Truncated => include_str!("../schemas/truncated.schema.json"),
        Kind::Collective => include_str!("../schemas/collective.schema.json"),
        Kind::Portfolio => include_str!("../schemas/portfolio.schema.json"),
        Kind::Superadd => include_str!("../schemas/superadd.schema.json"),
        Kind::EquilibriumInternal => include_str!("../schemas/equilibrium_internal.schema.json"),
        Kind::EquilibriumExternal => include_str!("../schemas/equilibrium_external.schema.json"),
        Kind::EquilibriumEs => include_str!("../schemas/equilibrium_es.schema.json"),
        Kind::Hill => include_str!("../schemas/hill.schema.json"),
        Kind::EmpiricalCompare => include_str!("../schemas/empirical_compare.schema.json"),
    }
}

/// Checks a raw descriptor against the schema of its `kind`.
pub fn validate(doc: &Value) -> Result<Kind, CliError> {
    let kind: Kind = doc
        .get("kind")
        .cloned()
        .ok_or_else(|| CliError::Validation("descriptor: missing `kind`".into()))
        .and_then(|k| {
            serde_json::from_value(k).map_err(|e| CliError::Validation(format!("descriptor: kind: {e}")))
        })?;
    let schema: Value = serde_json::from_str(schema(kind)).expect("shipped schema is JSON");
    let validator = jsonschema::validator_for(&schema).expect("shipped schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(doc)
        .map(|e| format!("{} at `{}`", e, e.instance_path()))
        .collect();
    if errors.is_empty() {
        Ok(kind)
    } else {
        Err(CliError::Validation(format!(
            "{} descriptor does not match its schema: {}",
            kind.as_str(),
            errors.join("; ")
        )))
    }
}

pub fn example(kind: Kind) -> Value {
    let pareto1 = json!({ "family": "pareto", "alpha": 1.0 });
    let parameters = match kind {
        Kind::Dominance => json!({
            "marginal": pareto1,
            "copula": { "type": "independence" },
            "theta": [0.5, 0.5],
            "grid": [1.25, 2.0, 5.0, 10.0, 100.0]
        }),
        Kind::Truncated => json!({
            "marginal": pareto1,
            "copula": { "type": "independence" },
            "theta": [0.5, 0.5],
            "caps": [10.0, 10.0],
            "grid": [1.5, 2.0, 3.0, 4.5],
            "var_levels": [0.5, 0.75]
        }),
        Kind::Collective => json!({
            "marginal": pareto1,
            "weight_law": { "law": "constant", "w": 1.0 },
            "count_law": { "law": "poisson", "lambda": 3.0 },
            "grid": [2.0, 5.0, 20.0]
        }),
        Kind::Portfolio => json!({
            "problem": {
                "marginal": { "family": "pareto", "alpha": 0.8 },
                "copula": { "type": "independence" },
                "n_assets": 3,
                "rho": { "measure": "var", "p": 0.95 },
                "constraint": { "type": "fixed_total", "w": 1.0 }
            },
            "evaluate": [0.3333333333333333, 0.3333333333333333, 0.3333333333333334]
        }),
        Kind::Superadd => {
            let gpd = |xi: f64, beta: f64| json!({ "family": "gpd", "xi": xi, "beta": beta });
            json!({
                "losses": [
                    gpd(1.19, 774.0), gpd(1.17, 254.0), gpd(1.01, 233.0),
                    gpd(1.39, 412.0), gpd(1.23, 107.0), gpd(1.22, 243.0)
                ],
                "p_grid": [0.95, 0.96, 0.97, 0.98, 0.99]
            })
        }
        Kind::EquilibriumInternal => {
            let rv = json!({ "rho": { "measure": "var", "p": 0.95 }, "loss": { "family": "pareto", "alpha": 0.8 } });
            let zero = json!({ "kind": "zero" });
            json!({
                "market": {
                    "exposures": [1.0, 1.0, 1.0],
                    "risk_values": [rv, rv, rv],
                    "costs": [zero, zero, zero]
                }
            })
        }
        Kind::EquilibriumExternal => json!({
            "market": {
                "n": 1,
                "k": 1,
                "a": 2.0,
                "rho_internal": 4.0,
                "rho_external": 2.0,
                "cost_internal": { "kind": "quadratic", "lambda": 1.0 },
                "cost_external": { "kind": "quadratic", "lambda": 1.0 }
            }
        }),
        Kind::EquilibriumEs => json!({
            "exposures": [1.0, 1.0],
            "marginal": { "family": "normal", "mu": 0.0, "sigma": 1.0 },
            "q": 0.9
        }),
        Kind::Hill => json!({
            "data": { "values": [1.0, E, E * E, E * E * E] },
            "k": 3
        }),
        Kind::EmpiricalCompare => json!({
            "first": { "values": [1.2, 3.4, 2.2, 15.0, 1.1, 7.5, 2.9, 40.0] },
            "second": { "values": [2.5, 1.3, 9.8, 1.7, 4.4, 120.0, 3.1, 1.05] },
            "n_out": 10000,
            "n_boot": 199
        }),
    };
    json!({
        "kind": kind.as_str(),
        "seed": 20240101u64,
        "n_mc": 100000,
        "parameters": parameters
    })
}
