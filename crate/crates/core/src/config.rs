//! Scenario configuration: defaults, presets, and a flat `key = value` text
//! format. Unknown keys are a hard error; omitted keys fall back to the
//! defaults. Axis keys accept comma-separated lists and define the sweep
//! grid as their Cartesian product.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key {key:?} has ill-typed value {value:?}")]
    BadValue { line: usize, key: String, value: String },
    #[error("key {key:?} must be a nonempty list")]
    EmptyAxis { key: String },
    #[error("realizations must be >= 1")]
    NoRealizations,
    #[error("unknown scenario {0:?} (expected i, ii, iii, iv, or custom)")]
    UnknownScenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioId {
    I,
    II,
    III,
    IV,
    Custom,
}

impl ScenarioId {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        match text.to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(Self::I),
            "ii" | "2" => Ok(Self::II),
            "iii" | "3" => Ok(Self::III),
            "iv" | "4" => Ok(Self::IV),
            "custom" => Ok(Self::Custom),
            other => Err(ConfigError::UnknownScenario(other.to_string())),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::I => "i",
            Self::II => "ii",
            Self::III => "iii",
            Self::IV => "iv",
            Self::Custom => "custom",
        }
    }
}

/// Full description of a sweep: physical constants, sweep axes, Monte Carlo
/// realization count and master seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario_id: ScenarioId,
    // physical scalars
    pub bandwidth_hz: f64,
    pub slot_duration_s: f64,
    pub n_tx: usize,
    pub n_rx: usize,
    pub carrier_ghz: f64,
    pub distance_m: f64,
    pub los_angle_deg: f64,
    pub k_factor: f64,
    pub noise_com_dbw: f64,
    pub noise_sen_dbw: f64,
    pub tx_power_w: f64,
    pub rx_power_w: f64,
    // sweep axes
    pub theta_deg: Vec<f64>,
    pub sinr_threshold: Vec<f64>,
    pub si_nominal: Vec<f64>,
    pub si_radius: Vec<f64>,
    pub min_sensing_slots: Vec<usize>,
    pub slots: Vec<usize>,
    pub reflection_coeff: Vec<f64>,
    pub array_separation_m: Vec<f64>,
    // Monte Carlo controls
    pub realizations: usize,
    pub seed: u64,
    /// Emit one row per realization in addition to the per-cell mean rows.
    pub per_realization: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario_id: ScenarioId::Custom,
            bandwidth_hz: 200e6,
            slot_duration_s: 1e-3,
            n_tx: 8,
            n_rx: 16,
            carrier_ghz: 41.0,
            distance_m: 60.0,
            los_angle_deg: 90.0,
            k_factor: 100.0,
            noise_com_dbw: -114.0,
            noise_sen_dbw: -74.0,
            tx_power_w: 1.0,
            rx_power_w: 0.25,
            theta_deg: vec![90.0],
            sinr_threshold: vec![3.0],
            si_nominal: vec![0.0],
            si_radius: vec![0.0],
            min_sensing_slots: vec![1],
            slots: vec![1],
            reflection_coeff: vec![6e-4],
            array_separation_m: vec![0.15],
            realizations: 50,
            seed: 1,
            per_realization: false,
        }
    }
}

/// 20-point grid over [0, 0.95] for the nominal residual-SI factor.
fn si_nominal_grid() -> Vec<f64> {
    (0..20).map(|i| 0.05 * i as f64).collect()
}

impl ScenarioConfig {
    /// Preset sweeps for the four bundled scenarios.
    pub fn scenario(id: ScenarioId) -> Self {
        let mut cfg = Self { scenario_id: id, ..Self::default() };
        match id {
            ScenarioId::I => {
                // single shared slot, target walks away from the user
                cfg.theta_deg = vec![90.0, 110.0, 130.0];
                cfg.sinr_threshold = vec![3.0, 4.0, 5.0];
                cfg.slots = vec![1];
                cfg.min_sensing_slots = vec![1];
                cfg.per_realization = true;
            }
            ScenarioId::II => {
                cfg.theta_deg = vec![100.0];
                cfg.sinr_threshold = vec![1.0, 2.0, 3.0];
                cfg.si_nominal = si_nominal_grid();
                cfg.si_radius = vec![0.05];
                cfg.min_sensing_slots = vec![4];
                cfg.slots = vec![8];
                cfg.reflection_coeff = vec![6e-4, 9e-4];
            }
            ScenarioId::III => {
                cfg.theta_deg = vec![100.0];
                cfg.sinr_threshold = vec![3.0];
                cfg.si_nominal = si_nominal_grid();
                cfg.si_radius = vec![0.05];
                cfg.min_sensing_slots = (1..=8).collect();
                cfg.slots = vec![8];
            }
            ScenarioId::IV => {
                // no active cancellation: the full self-interference channel
                // remains, mitigated only by physical array separation
                cfg.theta_deg = vec![100.0];
                cfg.sinr_threshold = vec![1.0, 2.0, 3.0, 4.0, 5.0];
                cfg.si_nominal = vec![1.0];
                cfg.si_radius = vec![0.0];
                cfg.min_sensing_slots = vec![4];
                cfg.slots = vec![8];
                cfg.array_separation_m = vec![0.05, 0.1, 0.15, 0.2, 0.3, 0.5, 1.0, 1000.0];
            }
            ScenarioId::Custom => {}
        }
        cfg
    }

    /// Number of sweep cells (Cartesian product of the axis lengths).
    pub fn cell_count(&self) -> usize {
        self.theta_deg.len()
            * self.sinr_threshold.len()
            * self.si_nominal.len()
            * self.si_radius.len()
            * self.min_sensing_slots.len()
            * self.slots.len()
            * self.reflection_coeff.len()
            * self.array_separation_m.len()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (key, len) in [
            ("theta_deg", self.theta_deg.len()),
            ("sinr_threshold", self.sinr_threshold.len()),
            ("si_nominal", self.si_nominal.len()),
            ("si_radius", self.si_radius.len()),
            ("min_sensing_slots", self.min_sensing_slots.len()),
            ("slots", self.slots.len()),
            ("reflection_coeff", self.reflection_coeff.len()),
            ("array_separation_m", self.array_separation_m.len()),
        ] {
            if len == 0 {
                return Err(ConfigError::EmptyAxis { key: key.to_string() });
            }
        }
        if self.realizations == 0 {
            return Err(ConfigError::NoRealizations);
        }
        Ok(())
    }

    /// Canonical flat-text form; `parse_config(emit) == self`.
    pub fn to_document(&self) -> String {
        let f = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        let u = |xs: &[usize]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        format!(
            "scenario = {}\n\
             bandwidth_hz = {}\n\
             slot_duration_s = {}\n\
             n_tx = {}\n\
             n_rx = {}\n\
             carrier_ghz = {}\n\
             distance_m = {}\n\
             los_angle_deg = {}\n\
             k_factor = {}\n\
             noise_com_dbw = {}\n\
             noise_sen_dbw = {}\n\
             tx_power_w = {}\n\
             rx_power_w = {}\n\
             theta_deg = {}\n\
             sinr_threshold = {}\n\
             si_nominal = {}\n\
             si_radius = {}\n\
             min_sensing_slots = {}\n\
             slots = {}\n\
             reflection_coeff = {}\n\
             array_separation_m = {}\n\
             realizations = {}\n\
             seed = {}\n\
             per_realization = {}\n",
            self.scenario_id.as_str(),
            self.bandwidth_hz,
            self.slot_duration_s,
            self.n_tx,
            self.n_rx,
            self.carrier_ghz,
            self.distance_m,
            self.los_angle_deg,
            self.k_factor,
            self.noise_com_dbw,
            self.noise_sen_dbw,
            self.tx_power_w,
            self.rx_power_w,
            f(&self.theta_deg),
            f(&self.sinr_threshold),
            f(&self.si_nominal),
            f(&self.si_radius),
            u(&self.min_sensing_slots),
            u(&self.slots),
            f(&self.reflection_coeff),
            f(&self.array_separation_m),
            self.realizations,
            self.seed,
            self.per_realization,
        )
    }
}

fn parse_f64(key: &str, value: &str, line: usize) -> Result<f64, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::BadValue { line, key: key.into(), value: value.into() })
}

fn parse_usize(key: &str, value: &str, line: usize) -> Result<usize, ConfigError> {
    value
        .parse()
        .map_err(|_| ConfigError::BadValue { line, key: key.into(), value: value.into() })
}

fn parse_f64_list(key: &str, value: &str, line: usize) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|v| parse_f64(key, v.trim(), line)).collect()
}

fn parse_usize_list(key: &str, value: &str, line: usize) -> Result<Vec<usize>, ConfigError> {
    value.split(',').map(|v| parse_usize(key, v.trim(), line)).collect()
}

/// Parse the flat `key = value` document. A `scenario` key selects the
/// preset the remaining keys override; `#` starts a comment.
pub fn parse_config(document: &str) -> Result<ScenarioConfig, ConfigError> {
    // two passes: the scenario preset must apply before any overrides,
    // wherever the key appears
    let mut entries: Vec<(usize, String, String)> = Vec::new();
    for (i, raw) in document.lines().enumerate() {
        let line = i + 1;
        let text = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        let text = text.trim();
        if text.is_empty() {
            continue;
        }
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, text: text.to_string() })?;
        entries.push((line, key.trim().to_string(), value.trim().to_string()));
    }

    let mut cfg = ScenarioConfig::default();
    for (line, key, value) in &entries {
        if key == "scenario" {
            cfg = ScenarioConfig::scenario(ScenarioId::parse(value)?);
            let _ = line;
        }
    }
    for (line, key, value) in entries {
        match key.as_str() {
            "scenario" => {}
            "bandwidth_hz" => cfg.bandwidth_hz = parse_f64(&key, &value, line)?,
            "slot_duration_s" => cfg.slot_duration_s = parse_f64(&key, &value, line)?,
            "n_tx" => cfg.n_tx = parse_usize(&key, &value, line)?,
            "n_rx" => cfg.n_rx = parse_usize(&key, &value, line)?,
            "carrier_ghz" => cfg.carrier_ghz = parse_f64(&key, &value, line)?,
            "distance_m" => cfg.distance_m = parse_f64(&key, &value, line)?,
            "los_angle_deg" => cfg.los_angle_deg = parse_f64(&key, &value, line)?,
            "k_factor" => cfg.k_factor = parse_f64(&key, &value, line)?,
            "noise_com_dbw" => cfg.noise_com_dbw = parse_f64(&key, &value, line)?,
            "noise_sen_dbw" => cfg.noise_sen_dbw = parse_f64(&key, &value, line)?,
            "tx_power_w" => cfg.tx_power_w = parse_f64(&key, &value, line)?,
            "rx_power_w" => cfg.rx_power_w = parse_f64(&key, &value, line)?,
            "theta_deg" => cfg.theta_deg = parse_f64_list(&key, &value, line)?,
            "sinr_threshold" => cfg.sinr_threshold = parse_f64_list(&key, &value, line)?,
            "si_nominal" => cfg.si_nominal = parse_f64_list(&key, &value, line)?,
            "si_radius" => cfg.si_radius = parse_f64_list(&key, &value, line)?,
            "min_sensing_slots" => cfg.min_sensing_slots = parse_usize_list(&key, &value, line)?,
            "slots" => cfg.slots = parse_usize_list(&key, &value, line)?,
            "reflection_coeff" => cfg.reflection_coeff = parse_f64_list(&key, &value, line)?,
            "array_separation_m" => cfg.array_separation_m = parse_f64_list(&key, &value, line)?,
            "realizations" => cfg.realizations = parse_usize(&key, &value, line)?,
            "seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| ConfigError::BadValue { line, key, value })?
            }
            "per_realization" => {
                cfg.per_realization = match value.as_str() {
                    "true" | "1" => true,
                    "false" | "0" => false,
                    _ => return Err(ConfigError::BadValue { line, key, value }),
                }
            }
            _ => return Err(ConfigError::UnknownKey { line, key }),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_yields_defaults() {
        assert_eq!(parse_config("").unwrap(), ScenarioConfig::default());
        assert_eq!(parse_config("# just a comment\n\n").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn parse_emit_round_trip_is_idempotent() {
        for id in [ScenarioId::I, ScenarioId::II, ScenarioId::III, ScenarioId::IV, ScenarioId::Custom] {
            let cfg = ScenarioConfig::scenario(id);
            let doc = cfg.to_document();
            let reparsed = parse_config(&doc).unwrap();
            assert_eq!(reparsed, cfg, "round trip failed for {id:?}");
            assert_eq!(reparsed.to_document(), doc);
        }
    }

    #[test]
    fn unknown_key_is_a_hard_error() {
        assert_eq!(
            parse_config("bandwith_hz = 1e6"),
            Err(ConfigError::UnknownKey { line: 1, key: "bandwith_hz".into() })
        );
    }

    #[test]
    fn ill_typed_value_is_rejected() {
        assert!(matches!(parse_config("n_tx = eight"), Err(ConfigError::BadValue { .. })));
        assert!(matches!(parse_config("theta_deg = 90,,110"), Err(ConfigError::BadValue { .. })));
    }

    #[test]
    fn scenario_key_applies_before_overrides() {
        let cfg = parse_config("sinr_threshold = 2\nscenario = iii\n").unwrap();
        assert_eq!(cfg.scenario_id, ScenarioId::III);
        assert_eq!(cfg.sinr_threshold, vec![2.0]); // override survives
        assert_eq!(cfg.min_sensing_slots, (1..=8).collect::<Vec<_>>());
    }

    #[test]
    fn lists_parse_with_whitespace() {
        let cfg = parse_config("theta_deg = 90 , 110 ,130\n").unwrap();
        assert_eq!(cfg.theta_deg, vec![90.0, 110.0, 130.0]);
    }

    #[test]
    fn scenario_presets_match_quoted_settings() {
        let ii = ScenarioConfig::scenario(ScenarioId::II);
        assert_eq!(ii.theta_deg, vec![100.0]);
        assert_eq!(ii.slots, vec![8]);
        assert_eq!(ii.min_sensing_slots, vec![4]);
        assert_eq!(ii.si_nominal.len(), 20);
        assert_eq!(ii.si_nominal[0], 0.0);
        assert!((ii.si_nominal[19] - 0.95).abs() < 1e-12);
        assert_eq!(ii.reflection_coeff, vec![6e-4, 9e-4]);
        let iii = ScenarioConfig::scenario(ScenarioId::III);
        assert_eq!(iii.cell_count(), 20 * 8);
        let iv = ScenarioConfig::scenario(ScenarioId::IV);
        assert_eq!(iv.si_nominal, vec![1.0]);
        assert_eq!(iv.si_radius, vec![0.0]);
        assert!(iv.array_separation_m.contains(&0.5) && iv.array_separation_m.contains(&1000.0));
    }

    #[test]
    fn empty_axis_is_rejected() {
        let mut cfg = ScenarioConfig::default();
        cfg.theta_deg.clear();
        assert_eq!(cfg.validate(), Err(ConfigError::EmptyAxis { key: "theta_deg".into() }));
        assert!(matches!(parse_config("realizations = 0"), Err(ConfigError::NoRealizations)));
    }
}
