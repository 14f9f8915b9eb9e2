//! Per-stage checkpoints: the parameter vectors of a solve state serialized
//! as deterministic line-oriented text, so pipeline stages can be rerun
//! independently.

use std::io::Write;
use std::path::Path;

use crate::lattice::ParamVector;
use crate::mesh::FourierCircle;

use super::AssembleError;

/// Write the background scalars plus the `v` and `e` parameter vectors.
pub fn write_state(
    path: &Path,
    stage: &str,
    background: (f64, f64, f64, &FourierCircle),
    v: &ParamVector,
    e: &ParamVector,
) -> Result<(), AssembleError> {
    let mut out = String::new();
    out.push_str(&format!("stage = {stage}\n"));
    let (beta, offset, rho_y, f_h) = background;
    out.push_str(&format!("beta_tau = {beta:.17e}\n"));
    out.push_str(&format!("bg_offset = {offset:.17e}\n"));
    out.push_str(&format!("bg_rho_y = {rho_y:.17e}\n"));
    out.push_str(&format!(
        "bg_f_horizontal = {}\n",
        f_h.cos.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" ")
    ));
    for (name, map) in
        [("tau_v", &v.tau_v), ("phi_v", &v.phi_v), ("tau_h", &v.tau_h), ("phi_h", &v.phi_h)]
    {
        for (&(i, j), &val) in map {
            out.push_str(&format!("v.{name} {i} {j} = {val:.17e}\n"));
        }
    }
    for (name, map) in
        [("tau_v", &e.tau_v), ("phi_v", &e.phi_v), ("tau_h", &e.tau_h), ("phi_h", &e.phi_h)]
    {
        for (&(i, j), &val) in map {
            out.push_str(&format!("e.{name} {i} {j} = {val:.17e}\n"));
        }
    }
    for (&c, v3) in &e.rho {
        out.push_str(&format!("e.rho {c} = {:.17e} {:.17e} {:.17e}\n", v3.x, v3.y, v3.z));
    }
    for (&c, f) in &e.f.circles {
        let cos = f.cos.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" ");
        let sin = f.sin.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(" ");
        out.push_str(&format!("e.f {c} = {cos} | {sin}\n"));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

/// Read a checkpoint back: stage name, background scalars, `v` and `e`.
#[allow(clippy::type_complexity)]
pub fn read_state(
    path: &Path,
    modes: usize,
) -> Result<(String, (f64, f64, f64, FourierCircle), ParamVector, ParamVector), AssembleError> {
    let text = std::fs::read_to_string(path)?;
    let mut stage = String::new();
    let mut beta = 1.0;
    let mut offset = 0.0;
    let mut rho_y = 0.0;
    let mut f_h = FourierCircle::zero(modes);
    let mut v = ParamVector::zero();
    let mut e = ParamVector::zero();
    for line in text.lines() {
        let Some((key, value)) = line.split_once('=') else { continue };
        let key = key.trim();
        let value = value.trim();
        let parse_scalar = |value: &str| -> Result<f64, AssembleError> {
            value
                .parse()
                .map_err(|_| AssembleError::Invalid(format!("bad scalar `{value}`")))
        };
        match key {
            "stage" => stage = value.to_string(),
            "beta_tau" => beta = parse_scalar(value)?,
            "bg_offset" => offset = parse_scalar(value)?,
            "bg_rho_y" => rho_y = parse_scalar(value)?,
            "bg_f_horizontal" => {
                for (k, tok) in value.split_whitespace().enumerate() {
                    if k < modes {
                        f_h.cos[k] = parse_scalar(tok)?;
                    }
                }
            }
            _ => {
                let mut parts = key.split_whitespace();
                let tag = parts.next().unwrap_or("");
                let target = if tag.starts_with("v.") { &mut v } else { &mut e };
                match tag.trim_start_matches("v.").trim_start_matches("e.") {
                    name @ ("tau_v" | "phi_v" | "tau_h" | "phi_h") => {
                        let i: i64 = parts
                            .next()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| AssembleError::Invalid("bad index".into()))?;
                        let j: i64 = parts
                            .next()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| AssembleError::Invalid("bad index".into()))?;
                        let val = parse_scalar(value)?;
                        match name {
                            "tau_v" => target.tau_v.insert((i, j), val),
                            "phi_v" => target.phi_v.insert((i, j), val),
                            "tau_h" => target.tau_h.insert((i, j), val),
                            _ => target.phi_h.insert((i, j), val),
                        };
                    }
                    "rho" => {
                        let c: u32 = parts
                            .next()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| AssembleError::Invalid("bad circle".into()))?;
                        let comps: Vec<f64> = value
                            .split_whitespace()
                            .map(|s| s.parse::<f64>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| AssembleError::Invalid("bad rho".into()))?;
                        if comps.len() == 3 {
                            target
                                .rho
                                .insert(c, nalgebra::Vector3::new(comps[0], comps[1], comps[2]));
                        }
                    }
                    "f" => {
                        let c: u32 = parts
                            .next()
                            .and_then(|s| s.parse().ok())
                            .ok_or_else(|| AssembleError::Invalid("bad circle".into()))?;
                        let (cos_part, sin_part) =
                            value.split_once('|').unwrap_or((value, ""));
                        let mut f = FourierCircle::zero(modes);
                        for (k, tok) in cos_part.split_whitespace().enumerate() {
                            if k < modes {
                                f.cos[k] = parse_scalar(tok)?;
                            }
                        }
                        for (k, tok) in sin_part.split_whitespace().enumerate() {
                            if k < modes {
                                f.sin[k] = parse_scalar(tok)?;
                            }
                        }
                        target.f.set(c, f);
                    }
                    _ => {}
                }
            }
        }
    }
    Ok((stage, (beta, offset, rho_y, f_h), v, e))
}
