//! Compact flag syntax for distributions, T samplers and window rules.

use ringage_core::{DistributionSpec, KRule, TSampler};

/// Parse `kind:p1[:p2]`, e.g. `exponential:1`, `gamma:2:0.5`,
/// `uniform:0.5:1.5`, `deterministic:1`, `lognormal:0:0.5`.
pub fn parse_dist(s: &str) -> Result<DistributionSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |ix: usize| -> Result<f64, String> {
        parts
            .get(ix)
            .ok_or_else(|| format!("`{s}`: missing parameter {ix}"))?
            .parse::<f64>()
            .map_err(|e| format!("`{s}`: {e}"))
    };
    let arity = |want: usize| -> Result<(), String> {
        if parts.len() == want + 1 {
            Ok(())
        } else {
            Err(format!("`{s}`: expected {want} parameter(s)"))
        }
    };
    let spec = match parts[0] {
        "exponential" | "exp" => {
            arity(1)?;
            DistributionSpec::exponential(num(1)?)
        }
        "gamma" => {
            arity(2)?;
            DistributionSpec::gamma(num(1)?, num(2)?)
        }
        "uniform" => {
            arity(2)?;
            DistributionSpec::uniform(num(1)?, num(2)?)
        }
        "deterministic" | "det" => {
            arity(1)?;
            DistributionSpec::deterministic(num(1)?)
        }
        "lognormal" => {
            arity(2)?;
            DistributionSpec::lognormal(num(1)?, num(2)?)
        }
        other => return Err(format!("unknown distribution kind `{other}`")),
    };
    spec.validate().map_err(|e| e.to_string())?;
    Ok(spec)
}

/// Parse a T sampler: `const:10`, `exp:10` (mean), or
/// `sum:<count>:<dist>`, e.g. `sum:100:exponential:1`.
pub fn parse_t_sampler(s: &str) -> Result<TSampler, String> {
    let (head, rest) = s.split_once(':').ok_or_else(|| format!("`{s}`: expected `kind:...`"))?;
    let sampler = match head {
        "const" | "constant" => {
            TSampler::Constant(rest.parse().map_err(|e| format!("`{s}`: {e}"))?)
        }
        "exp" | "exponential" => {
            TSampler::ExponentialMean(rest.parse().map_err(|e| format!("`{s}`: {e}"))?)
        }
        "sum" => {
            let (count, dist) = rest
                .split_once(':')
                .ok_or_else(|| format!("`{s}`: expected `sum:<count>:<dist>`"))?;
            TSampler::SumOfDraws {
                count: count.parse().map_err(|e| format!("`{s}`: {e}"))?,
                spec: parse_dist(dist)?,
            }
        }
        other => return Err(format!("unknown T sampler `{other}`")),
    };
    sampler.validate().map_err(|e| e.to_string())?;
    Ok(sampler)
}

/// Parse one window rule: `sqrt`, `2*sqrt`, `n^0.25`, or `1.5*n^0.75`.
pub fn parse_k_rule(s: &str) -> Result<KRule, String> {
    let s = s.trim();
    if let Some(prefix) = s.strip_suffix("sqrt") {
        let coeff = match prefix.trim_end_matches('*') {
            "" => 1.0,
            c => c.parse().map_err(|e| format!("`{s}`: {e}"))?,
        };
        return Ok(KRule::sqrt_scaled(coeff));
    }
    let (coeff, power) = match s.split_once('*') {
        Some((c, p)) => (c.parse().map_err(|e| format!("`{s}`: {e}"))?, p),
        None => (1.0, s),
    };
    let exponent = power
        .strip_prefix("n^")
        .ok_or_else(|| format!("`{s}`: expected `[c*]n^p` or `[c*]sqrt`"))?
        .parse()
        .map_err(|e| format!("`{s}`: {e}"))?;
    Ok(KRule::new(coeff, exponent))
}

pub fn parse_k_rules(s: &str) -> Result<Vec<KRule>, String> {
    s.split(',').map(parse_k_rule).collect()
}

/// Parse a comma-separated list of ring sizes.
pub fn parse_ns(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|tok| tok.trim().parse::<usize>().map_err(|e| format!("`{tok}`: {e}")))
        .collect()
}
