//! Tool configuration: `[section]` headers followed by `key = value` lines.
//!
//! `#` starts a comment. Unknown sections and keys are rejected. Row keys in
//! `[design]` may repeat; every other key may appear once.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::ScannerParams;
use crate::optics::sweep::{ShapeKind, SimulationConfig};

/// Configuration-1 design row: one AOD A aperture ratio and partition grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C1Row {
    pub q_aod_a: f64,
    pub partitions: u32,
}

/// Configuration-2 design row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct C2Row {
    pub q_aod_a: f64,
    pub q_aod_c: f64,
    pub partitions: u32,
    pub sub_m: u32,
    pub sub_n: u32,
}

impl C1Row {
    pub fn apply(&self, base: &ScannerParams) -> ScannerParams {
        ScannerParams {
            q_aod_a: self.q_aod_a,
            partitions_x: self.partitions,
            partitions_y: self.partitions,
            ..base.clone()
        }
    }
}

impl C2Row {
    pub fn apply(&self, base: &ScannerParams) -> ScannerParams {
        ScannerParams {
            q_aod_a: self.q_aod_a,
            q_aod_c: Some(self.q_aod_c),
            partitions_x: self.partitions,
            partitions_y: self.partitions,
            ..base.clone()
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DesignConfig {
    pub c1_rows: Vec<C1Row>,
    pub c2_rows: Vec<C2Row>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSettings {
    /// Lens and ratios are filled in from `[scanner]`.
    pub config: SimulationConfig,
    pub shape: ShapeKind,
    pub pixels: Vec<u32>,
    pub targets: Vec<usize>,
}

impl Default for SimulationSettings {
    fn default() -> Self {
        SimulationSettings {
            config: SimulationConfig::desk(),
            shape: ShapeKind::Gaussian,
            pixels: crate::optics::sweep::SWEEP_PIXELS.to_vec(),
            targets: vec![1, 2, 3, 4],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleConfig {
    pub sub_m: u32,
    pub sub_n: u32,
    pub k_max: u32,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        ScheduleConfig {
            sub_m: 3,
            sub_n: 3,
            k_max: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PathsConfig {
    pub layers: Option<String>,
    pub output: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToolConfig {
    pub scanner: ScannerParams,
    pub design: DesignConfig,
    pub simulation: SimulationSettings,
    pub schedule: ScheduleConfig,
    pub paths: PathsConfig,
}

impl Default for ToolConfig {
    /// Reference scanner with the standard design rows.
    fn default() -> Self {
        let c1 = |q_aod_a, partitions| C1Row { q_aod_a, partitions };
        let c2 = |q_aod_a, q_aod_c, partitions, sub| C2Row {
            q_aod_a,
            q_aod_c,
            partitions,
            sub_m: sub,
            sub_n: sub,
        };
        ToolConfig {
            scanner: ScannerParams::default(),
            design: DesignConfig {
                c1_rows: vec![c1(52.0, 7), c1(70.0, 5), c1(180.0, 2)],
                c2_rows: vec![
                    c2(90.0, 30.0, 4, 3),
                    c2(45.0, 15.0, 8, 3),
                    c2(27.0, 9.0, 13, 3),
                    c2(72.0, 20.0, 5, 4),
                    c2(30.0, 8.0, 12, 4),
                    c2(30.0, 3.6, 12, 4),
                ],
            },
            simulation: SimulationSettings::default(),
            schedule: ScheduleConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

type Section = BTreeMap<String, Vec<(usize, String)>>;

const SCANNER_REQUIRED: [&str; 12] = [
    "q_slm",
    "q_a",
    "q_aod_a",
    "tbw",
    "t_aod",
    "r_slm",
    "wavelength",
    "focal_length",
    "slm_pixels_x",
    "slm_pixels_y",
    "partitions_x",
    "partitions_y",
];
const SCANNER_OPTIONAL: [&str; 4] = ["q_aod_c", "conservative_factor", "aod_center_frequency", "aod_order"];
const DESIGN_KEYS: [&str; 2] = ["c1_row", "c2_row"];
const SIMULATION_KEYS: [&str; 11] = [
    "grid_n",
    "sim_per_slm",
    "bits",
    "slm_pitch",
    "array_dim",
    "capture_radius_factor",
    "gs_iterations",
    "memory_budget",
    "shape",
    "pixels",
    "targets",
];
const SCHEDULE_KEYS: [&str; 3] = ["sub_m", "sub_n", "k_max"];
const PATHS_KEYS: [&str; 2] = ["layers", "output"];

fn section_keys(name: &str) -> Option<Vec<&'static str>> {
    Some(match name {
        "scanner" => SCANNER_REQUIRED.iter().chain(&SCANNER_OPTIONAL).copied().collect(),
        "design" => DESIGN_KEYS.to_vec(),
        "simulation" => SIMULATION_KEYS.to_vec(),
        "schedule" => SCHEDULE_KEYS.to_vec(),
        "paths" => PATHS_KEYS.to_vec(),
        _ => return None,
    })
}

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut out: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim().to_string();
            if section_keys(&name).is_none() {
                return Err(Error::Config(format!("line {ln}: unknown section [{name}]")));
            }
            if out.contains_key(&name) {
                return Err(Error::Config(format!("line {ln}: duplicate section [{name}]")));
            }
            out.insert(name.clone(), Section::new());
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {ln}: expected 'key = value'")))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = current
            .as_ref()
            .ok_or_else(|| Error::Config(format!("line {ln}: key '{key}' outside any section")))?;
        if !section_keys(sec).unwrap_or_default().contains(&key) {
            return Err(Error::Config(format!("line {ln}: unknown key: {sec}.{key}")));
        }
        let entry = out.get_mut(sec).unwrap().entry(key.to_string()).or_default();
        if !entry.is_empty() && sec != "design" {
            return Err(Error::Config(format!("line {ln}: duplicate key: {key}")));
        }
        entry.push((ln, value.to_string()));
    }
    Ok(out)
}

fn get<T: FromStr>(sec: &Section, key: &str) -> Result<Option<T>> {
    match sec.get(key).and_then(|v| v.first()) {
        None => Ok(None),
        Some((ln, v)) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::Config(format!("line {ln}: invalid value for {key}: '{v}'"))),
    }
}

fn require<T: FromStr>(sec: &Section, key: &str) -> Result<T> {
    get(sec, key)?.ok_or_else(|| Error::Config(format!("missing key: {key}")))
}

fn list<T: FromStr>(ln: usize, key: &str, v: &str) -> Result<Vec<T>> {
    v.split_whitespace()
        .map(|t| {
            t.parse()
                .map_err(|_| Error::Config(format!("line {ln}: invalid value for {key}: '{t}'")))
        })
        .collect()
}

impl ToolConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let sections = parse_sections(text)?;
        let empty = Section::new();
        let s = sections
            .get("scanner")
            .ok_or_else(|| Error::Config("missing section: [scanner]".into()))?;
        let d = ScannerParams::default();
        let scanner = ScannerParams {
            q_slm: require(s, "q_slm")?,
            q_a: require(s, "q_a")?,
            q_aod_a: require(s, "q_aod_a")?,
            q_aod_c: get(s, "q_aod_c")?,
            tbw: require(s, "tbw")?,
            t_aod: require(s, "t_aod")?,
            r_slm: require(s, "r_slm")?,
            wavelength: require(s, "wavelength")?,
            focal_length: require(s, "focal_length")?,
            slm_pixels_x: require(s, "slm_pixels_x")?,
            slm_pixels_y: require(s, "slm_pixels_y")?,
            partitions_x: require(s, "partitions_x")?,
            partitions_y: require(s, "partitions_y")?,
            conservative_factor: get(s, "conservative_factor")?.unwrap_or(d.conservative_factor),
            aod_center_frequency: get(s, "aod_center_frequency")?.unwrap_or(d.aod_center_frequency),
            aod_order: get(s, "aod_order")?.unwrap_or(d.aod_order),
        };
        scanner.validate().map_err(|e| Error::Config(e.to_string()))?;

        let ds = sections.get("design").unwrap_or(&empty);
        let mut design = DesignConfig::default();
        for (ln, v) in ds.get("c1_row").into_iter().flatten() {
            let f: Vec<f64> = list(*ln, "c1_row", v)?;
            if f.len() != 2 {
                return Err(Error::Config(format!(
                    "line {ln}: c1_row needs '<q_aod_a> <partitions>'"
                )));
            }
            design.c1_rows.push(C1Row {
                q_aod_a: f[0],
                partitions: whole(*ln, "c1_row", f[1])?,
            });
        }
        for (ln, v) in ds.get("c2_row").into_iter().flatten() {
            let f: Vec<f64> = list(*ln, "c2_row", v)?;
            if f.len() != 5 {
                return Err(Error::Config(format!(
                    "line {ln}: c2_row needs '<q_aod_a> <q_aod_c> <partitions> <sub_m> <sub_n>'"
                )));
            }
            design.c2_rows.push(C2Row {
                q_aod_a: f[0],
                q_aod_c: f[1],
                partitions: whole(*ln, "c2_row", f[2])?,
                sub_m: whole(*ln, "c2_row", f[3])?,
                sub_n: whole(*ln, "c2_row", f[4])?,
            });
        }

        let ss = sections.get("simulation").unwrap_or(&empty);
        let mut simulation = SimulationSettings::default();
        let c = &mut simulation.config;
        c.focal_length = scanner.focal_length;
        c.wavelength = scanner.wavelength;
        c.q_slm = scanner.q_slm;
        c.q_a = scanner.q_a;
        if let Some(v) = get(ss, "grid_n")? {
            c.grid_n = v;
        }
        if let Some(v) = get(ss, "sim_per_slm")? {
            c.sim_per_slm = v;
        }
        if let Some(v) = get::<String>(ss, "bits")? {
            c.bits = if v == "none" {
                None
            } else {
                Some(v.parse().map_err(|_| Error::Config(format!("invalid value for bits: '{v}'")))?)
            };
        }
        if let Some(v) = get(ss, "slm_pitch")? {
            c.slm_pitch = v;
        }
        if let Some(v) = get(ss, "array_dim")? {
            c.array_dim = v;
        }
        if let Some(v) = get(ss, "capture_radius_factor")? {
            c.capture_radius_factor = v;
        }
        if let Some(v) = get(ss, "gs_iterations")? {
            c.gs_iterations = v;
        }
        if let Some(v) = get(ss, "memory_budget")? {
            c.memory_budget = v;
        }
        c.validate()?;
        if let Some(v) = get::<String>(ss, "shape")? {
            simulation.shape = v.parse()?;
        }
        if let Some((ln, v)) = ss.get("pixels").and_then(|v| v.first()) {
            simulation.pixels = list(*ln, "pixels", v)?;
        }
        if let Some((ln, v)) = ss.get("targets").and_then(|v| v.first()) {
            simulation.targets = list(*ln, "targets", v)?;
        }
        if simulation.pixels.is_empty() || simulation.targets.is_empty() {
            return Err(Error::Config("pixels and targets must be non-empty".into()));
        }

        let sc = sections.get("schedule").unwrap_or(&empty);
        let dflt = ScheduleConfig::default();
        let schedule = ScheduleConfig {
            sub_m: get(sc, "sub_m")?.unwrap_or(dflt.sub_m),
            sub_n: get(sc, "sub_n")?.unwrap_or(dflt.sub_n),
            k_max: get(sc, "k_max")?.unwrap_or(dflt.k_max),
        };
        if schedule.sub_m == 0 || schedule.sub_n == 0 || schedule.k_max == 0 {
            return Err(Error::Config("schedule sub_m, sub_n and k_max must be >= 1".into()));
        }

        let ps = sections.get("paths").unwrap_or(&empty);
        let paths = PathsConfig {
            layers: get(ps, "layers")?,
            output: get(ps, "output")?,
        };

        Ok(ToolConfig {
            scanner,
            design,
            simulation,
            schedule,
            paths,
        })
    }

    pub fn serialize(&self) -> String {
        let p = &self.scanner;
        let mut s = String::from("[scanner]\n");
        let kv = |s: &mut String, k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv(&mut s, "q_slm", p.q_slm.to_string());
        kv(&mut s, "q_a", p.q_a.to_string());
        kv(&mut s, "q_aod_a", p.q_aod_a.to_string());
        if let Some(q) = p.q_aod_c {
            kv(&mut s, "q_aod_c", q.to_string());
        }
        kv(&mut s, "tbw", p.tbw.to_string());
        kv(&mut s, "t_aod", p.t_aod.to_string());
        kv(&mut s, "r_slm", p.r_slm.to_string());
        kv(&mut s, "wavelength", p.wavelength.to_string());
        kv(&mut s, "focal_length", p.focal_length.to_string());
        kv(&mut s, "slm_pixels_x", p.slm_pixels_x.to_string());
        kv(&mut s, "slm_pixels_y", p.slm_pixels_y.to_string());
        kv(&mut s, "partitions_x", p.partitions_x.to_string());
        kv(&mut s, "partitions_y", p.partitions_y.to_string());
        kv(&mut s, "conservative_factor", p.conservative_factor.to_string());
        kv(&mut s, "aod_center_frequency", p.aod_center_frequency.to_string());
        kv(&mut s, "aod_order", p.aod_order.to_string());

        s.push_str("\n[design]\n");
        for r in &self.design.c1_rows {
            kv(&mut s, "c1_row", format!("{} {}", r.q_aod_a, r.partitions));
        }
        for r in &self.design.c2_rows {
            kv(
                &mut s,
                "c2_row",
                format!("{} {} {} {} {}", r.q_aod_a, r.q_aod_c, r.partitions, r.sub_m, r.sub_n),
            );
        }

        let sim = &self.simulation;
        let c = &sim.config;
        s.push_str("\n[simulation]\n");
        kv(&mut s, "grid_n", c.grid_n.to_string());
        kv(&mut s, "sim_per_slm", c.sim_per_slm.to_string());
        kv(&mut s, "bits", c.bits.map_or("none".to_string(), |b| b.to_string()));
        kv(&mut s, "slm_pitch", c.slm_pitch.to_string());
        kv(&mut s, "array_dim", c.array_dim.to_string());
        kv(&mut s, "capture_radius_factor", c.capture_radius_factor.to_string());
        kv(&mut s, "gs_iterations", c.gs_iterations.to_string());
        kv(&mut s, "memory_budget", c.memory_budget.to_string());
        kv(&mut s, "shape", sim.shape.to_string());
        kv(&mut s, "pixels", join(&sim.pixels));
        kv(&mut s, "targets", join(&sim.targets));

        s.push_str("\n[schedule]\n");
        kv(&mut s, "sub_m", self.schedule.sub_m.to_string());
        kv(&mut s, "sub_n", self.schedule.sub_n.to_string());
        kv(&mut s, "k_max", self.schedule.k_max.to_string());

        s.push_str("\n[paths]\n");
        if let Some(l) = &self.paths.layers {
            kv(&mut s, "layers", l.clone());
        }
        if let Some(o) = &self.paths.output {
            kv(&mut s, "output", o.clone());
        }
        s
    }
}

fn whole(ln: usize, key: &str, v: f64) -> Result<u32> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(Error::Config(format!("line {ln}: {key} expects a whole number, got {v}")))
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(" ")
}
