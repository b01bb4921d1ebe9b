//! Flat `key = value` run configuration with `#` comments.

use std::collections::BTreeMap;
use warpflow::Error;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub space: String,
    pub initial: String,
    pub mode: warpflow::FlowMode,
    pub grid: usize,
    pub t_end: f64,
    pub cadence: f64,
    pub out_dir: Option<String>,
    pub c_cfl: f64,
    pub dt_max: f64,
    pub h_floor: f64,
    pub v_max: f64,
    pub record_bhw: bool,
    pub profile_rows: usize,
    pub tol_monotone_g: Option<f64>,
    pub tol_limit_g: Option<f64>,
    pub tol_area_law: Option<f64>,
    /// Sorted echo of every key actually present in the file.
    pub echo: BTreeMap<String, String>,
}

pub fn parse_run_config(text: &str) -> Result<RunConfig, Error> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("config line {}: expected key = value", ln + 1)))?;
        let key = k.trim().to_string();
        if map.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::parse(format!("config line {}: duplicate key `{key}`", ln + 1)));
        }
    }
    let known = [
        "space", "initial", "mode", "grid", "t_end", "cadence", "out_dir", "c_cfl", "dt_max",
        "h_floor", "v_max", "record_bhw", "profile_rows", "tol_monotone_g", "tol_limit_g",
        "tol_area_law",
    ];
    for key in map.keys() {
        if !known.contains(&key.as_str()) {
            return Err(Error::parse(format!("unknown config key `{key}`")));
        }
    }
    let require = |key: &str| -> Result<String, Error> {
        map.get(key)
            .cloned()
            .ok_or_else(|| Error::parse(format!("config is missing `{key}`")))
    };
    let number = |key: &str, v: &str| -> Result<f64, Error> {
        v.parse()
            .map_err(|_| Error::parse(format!("config `{key}`: bad number `{v}`")))
    };
    let opt_number = |key: &str| -> Result<Option<f64>, Error> {
        map.get(key).map(|v| number(key, v)).transpose()
    };

    let grid_raw = number("grid", &require("grid")?)?;
    if grid_raw.fract() != 0.0 || grid_raw < 65.0 || grid_raw as u64 % 2 == 0 {
        return Err(Error::parse(format!(
            "grid must be an odd integer >= 65, got {grid_raw}"
        )));
    }
    let grid = grid_raw as usize;
    let t_end = number("t_end", &require("t_end")?)?;
    if !(t_end > 0.0) {
        return Err(Error::parse("t_end must be positive"));
    }
    let cadence = number("cadence", &require("cadence")?)?;
    if !(cadence > 0.0) || cadence > t_end {
        return Err(Error::parse("cadence must lie in (0, t_end]"));
    }
    let record_bhw = match map.get("record_bhw").map(|s| s.as_str()) {
        None => false,
        Some("true") => true,
        Some("false") => false,
        Some(other) => {
            return Err(Error::parse(format!("record_bhw must be true/false, got `{other}`")))
        }
    };
    let profile_rows = match opt_number("profile_rows")? {
        None => 1025,
        Some(v) if v.fract() == 0.0 && v >= 16.0 => v as usize,
        Some(v) => return Err(Error::parse(format!("profile_rows must be an integer >= 16, got {v}"))),
    };

    Ok(RunConfig {
        space: require("space")?,
        initial: require("initial")?,
        mode: warpflow::FlowMode::parse(&require("mode")?)?,
        grid,
        t_end,
        cadence,
        out_dir: map.get("out_dir").cloned(),
        c_cfl: opt_number("c_cfl")?.unwrap_or(0.2),
        dt_max: opt_number("dt_max")?.unwrap_or(0.02),
        h_floor: opt_number("h_floor")?.unwrap_or(1e-8),
        v_max: opt_number("v_max")?.unwrap_or(1e6),
        record_bhw,
        profile_rows,
        tol_monotone_g: opt_number("tol_monotone_g")?,
        tol_limit_g: opt_number("tol_limit_g")?,
        tol_area_law: opt_number("tol_area_law")?,
        echo: map,
    })
}
