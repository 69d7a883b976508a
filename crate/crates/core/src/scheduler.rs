//! Compiles gate layers into timed control schedules.

use std::fmt;

use crate::error::{Error, Result};
use crate::geometry::{self, ScannerParams};
use crate::optics::tones::{multi_tone_replicate, tone_comb, Replica};
use crate::partitions::{canonicalize, parse_sites, AddressPattern, PatchCatalog};

/// Multi-tone drive: `nx x ny` copies of the layer, spaced `pitch_x`
/// columns and `pitch_y` rows apart.
///
/// With equal pitches, replicas mirrored about the diagonal carry the same
/// net frequency shift; unequal pitches keep every shift distinct.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ToneReplication {
    pub nx: u32,
    pub ny: u32,
    pub pitch_x: u32,
    pub pitch_y: u32,
}

impl ToneReplication {
    pub fn square(nx: u32, ny: u32, pitch: u32) -> Self {
        ToneReplication {
            nx,
            ny,
            pitch_x: pitch,
            pitch_y: pitch,
        }
    }
}

/// One set of simultaneous gates on the full array.
#[derive(Clone, Debug, PartialEq)]
pub struct GateLayer {
    pub id: String,
    pub pattern: AddressPattern,
    /// Seconds; may be zero.
    pub gate_duration: f64,
    pub tones: Option<ToneReplication>,
}

impl GateLayer {
    pub fn new(id: impl Into<String>, pattern: AddressPattern, gate_duration: f64) -> Result<Self> {
        if !(gate_duration.is_finite() && gate_duration >= 0.0) {
            return Err(Error::domain(format!(
                "gate duration must be >= 0, got {gate_duration}"
            )));
        }
        Ok(GateLayer {
            id: id.into(),
            pattern,
            gate_duration,
            tones: None,
        })
    }

    pub fn with_tones(mut self, tones: ToneReplication) -> Self {
        self.tones = Some(tones);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EventKind {
    SlmFrameLoad,
    AodSettle,
    GateWindow,
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EventKind::SlmFrameLoad => "slm_frame_load",
            EventKind::AodSettle => "aod_settle",
            EventKind::GateWindow => "gate_window",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Payload {
    Frame { index: usize },
    Patch { index: usize, offset: (u32, u32), layer: String },
    Gate { layer: String, replica: usize, offset: (i64, i64) },
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Payload::Frame { index } => write!(f, "frame={index}"),
            Payload::Patch { index, offset, layer } => {
                write!(f, "patch={index} offset=({},{}) layer={layer}", offset.0, offset.1)
            }
            Payload::Gate { layer, replica, offset } => {
                write!(f, "layer={layer} replica={replica} shift=({},{})", offset.0, offset.1)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub start: f64,
    pub duration: f64,
    pub kind: EventKind,
    pub payload: Payload,
    /// Replica beams run on separate channels; everything else on channel 0.
    pub channel: usize,
    /// Net optical frequency offset of the beam during a gate window, hertz.
    pub beam_frequency: Option<f64>,
}

impl Event {
    pub fn end(&self) -> f64 {
        self.start + self.duration
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Timeline {
    pub events: Vec<Event>,
    pub total_time: f64,
    pub frame_count: usize,
    pub layer_count: usize,
}

impl Timeline {
    /// Layers per second over the whole schedule.
    pub fn average_rate(&self) -> f64 {
        if self.total_time > 0.0 {
            self.layer_count as f64 / self.total_time
        } else {
            f64::INFINITY
        }
    }

    pub fn count(&self, kind: EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("start_s,duration_s,kind,payload\n");
        for e in &self.events {
            s.push_str(&format!("{},{},{},{}", e.start, e.duration, e.kind, e.payload));
            if let Some(f) = e.beam_frequency {
                s.push_str(&format!(" freq_hz={f}"));
            }
            s.push('\n');
        }
        s.push_str(&format!("# total_time_s,{}\n", self.total_time));
        s.push_str(&format!("# average_rate_hz,{}\n", self.average_rate()));
        s.push_str(&format!("# frame_count,{}\n", self.frame_count));
        s
    }
}

/// Accumulates event starts as `frames / r + settles * t + gate_sum`, so the
/// schedule end matches the closed-form total exactly.
struct Clock {
    frames: usize,
    frame_time: f64,
    settles: usize,
    settle_time: f64,
    gate_sum: f64,
}

impl Clock {
    fn now(&self) -> f64 {
        self.frames as f64 * self.frame_time + self.settles as f64 * self.settle_time + self.gate_sum
    }
}

/// Configuration 1: each SLM patch is used once per frame, patches in arrival
/// order. Frame loads, deflector settles and gates run back to back.
pub fn compile_config1(layers: &[GateLayer], params: &ScannerParams) -> Result<Timeline> {
    if layers.is_empty() {
        return Err(Error::domain("schedule needs at least one layer"));
    }
    let report = geometry::config1_report(params)?;
    let per_frame = params.partitions_x as usize * params.partitions_y as usize;
    for l in layers {
        let far = l.pattern.sites().map(|s| s.row.max(s.col) + 1).max().unwrap_or(0);
        if far > report.n_q_max {
            return Err(Error::Capacity {
                what: "addressable sites per axis",
                required: far as u128,
                available: report.n_q_max as u128,
            });
        }
        if l.tones.is_some() {
            return Err(Error::domain(format!(
                "layer {}: tone replication needs configuration 2",
                l.id
            )));
        }
    }
    let mut clock = Clock {
        frames: 0,
        frame_time: 1.0 / params.r_slm,
        settles: 0,
        settle_time: report.burst_time,
        gate_sum: 0.0,
    };
    let mut events = Vec::with_capacity(layers.len() * 2 + layers.len() / per_frame + 1);
    for (i, l) in layers.iter().enumerate() {
        let patch = i % per_frame;
        if patch == 0 {
            events.push(Event {
                start: clock.now(),
                duration: clock.frame_time,
                kind: EventKind::SlmFrameLoad,
                payload: Payload::Frame { index: clock.frames },
                channel: 0,
                beam_frequency: None,
            });
            clock.frames += 1;
        }
        events.push(Event {
            start: clock.now(),
            duration: clock.settle_time,
            kind: EventKind::AodSettle,
            payload: Payload::Patch {
                index: patch,
                offset: (0, 0),
                layer: l.id.clone(),
            },
            channel: 0,
            beam_frequency: None,
        });
        clock.settles += 1;
        // AOD B undoes the shift of AOD A, so the beam leaves unshifted.
        events.push(Event {
            start: clock.now(),
            duration: l.gate_duration,
            kind: EventKind::GateWindow,
            payload: Payload::Gate {
                layer: l.id.clone(),
                replica: 0,
                offset: (0, 0),
            },
            channel: 0,
            beam_frequency: Some(0.0),
        });
        clock.gate_sum += l.gate_duration;
    }
    Ok(Timeline {
        total_time: clock.now(),
        events,
        frame_count: clock.frames,
        layer_count: layers.len(),
    })
}

/// Canonical pattern and the sub-array offset that places it.
pub fn decompose_layer(
    pattern: &AddressPattern,
    sub_m: u32,
    sub_n: u32,
) -> Result<(AddressPattern, (u32, u32))> {
    let (canonical, offset) = canonicalize(pattern)?;
    let (rows, cols) = canonical.extent();
    if rows > sub_m || cols > sub_n {
        return Err(Error::NotAddressable {
            sub_m,
            sub_n,
            rows,
            cols,
        });
    }
    Ok((canonical, offset))
}

/// AOD C drive frequencies that place the sub-array at `(row, col)`, with
/// the band centred on the addressable array.
fn aod_c_frequencies(params: &ScannerParams, n_q: u32, offset: (i64, i64)) -> Result<(f64, f64)> {
    let step = params.site_frequency_step()?;
    let mid = (n_q as f64 - 1.0) / 2.0;
    let f = |o: i64| params.aod_center_frequency + (o as f64 - mid) * step;
    Ok((f(offset.1), f(offset.0)))
}

/// Configuration 2: every layer is one patch of a fixed catalog, so the only
/// overhead is the deflector transition.
pub fn compile_config2(
    layers: &[GateLayer],
    catalog: &PatchCatalog,
    params: &ScannerParams,
    sub_m: u32,
    sub_n: u32,
) -> Result<Timeline> {
    if layers.is_empty() {
        return Err(Error::domain("schedule needs at least one layer"));
    }
    if catalog.sub_m() != sub_m || catalog.sub_n() != sub_n {
        return Err(Error::domain(format!(
            "catalog is for {}x{} sub-arrays, schedule asks for {sub_m}x{sub_n}",
            catalog.sub_m(),
            catalog.sub_n()
        )));
    }
    let report = geometry::config2_report(params, sub_m, sub_n)?;
    let order = params.aod_order as f64;
    let mut clock = Clock {
        frames: 0,
        frame_time: 0.0,
        settles: 0,
        settle_time: report.transition_time,
        gate_sum: 0.0,
    };
    let mut events = Vec::with_capacity(layers.len() * 2);
    for l in layers {
        let (canonical, offset) = decompose_layer(&l.pattern, sub_m, sub_n)?;
        let (patch, _) = catalog.lookup(&canonical)?;
        let origin = (offset.0 as i64, offset.1 as i64);
        let replicas: Vec<Replica> = match l.tones {
            None => {
                let (fx, fy) = aod_c_frequencies(params, report.n_q, origin)?;
                vec![Replica {
                    site_offset: (0, 0),
                    frequency_shift: fx + fy,
                    tones: (0, 0),
                }]
            }
            Some(t) => {
                if t.nx == 0 || t.ny == 0 {
                    return Err(Error::domain(format!("layer {}: zero tone count", l.id)));
                }
                let (fx, fy) = aod_c_frequencies(params, report.n_q, origin)?;
                let step = params.site_frequency_step()?;
                let xs = tone_comb(t.nx as usize, t.pitch_x as i64, fx, step);
                let ys = tone_comb(t.ny as usize, t.pitch_y as i64, fy, step);
                multi_tone_replicate(&xs, &ys, &canonical)?
            }
        };
        for r in &replicas {
            let placed = r.place(&l.pattern)?;
            let far = placed.sites().map(|s| s.row.max(s.col) + 1).max().unwrap_or(0);
            if far > report.n_q {
                return Err(Error::Capacity {
                    what: "addressable sites per axis",
                    required: far as u128,
                    available: report.n_q as u128,
                });
            }
        }
        events.push(Event {
            start: clock.now(),
            duration: clock.settle_time,
            kind: EventKind::AodSettle,
            payload: Payload::Patch {
                index: patch,
                offset,
                layer: l.id.clone(),
            },
            channel: 0,
            beam_frequency: None,
        });
        clock.settles += 1;
        let start = clock.now();
        for (i, r) in replicas.iter().enumerate() {
            events.push(Event {
                start,
                duration: l.gate_duration,
                kind: EventKind::GateWindow,
                payload: Payload::Gate {
                    layer: l.id.clone(),
                    replica: i,
                    offset: r.site_offset,
                },
                channel: i,
                beam_frequency: Some(order * r.frequency_shift),
            });
        }
        clock.gate_sum += l.gate_duration;
    }
    Ok(Timeline {
        total_time: clock.now(),
        events,
        frame_count: 0,
        layer_count: layers.len(),
    })
}

/// Frequency correction applied by an acousto-optic modulator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Compensation {
    /// Modulator drive frequency, hertz.
    pub drive: f64,
    /// 2 for a double-pass arrangement.
    pub passes: u32,
}

impl Compensation {
    pub fn shift(&self) -> f64 {
        self.drive * self.passes as f64
    }
}

/// Net beam offsets during one gate window (all replicas sharing a start).
#[derive(Clone, Debug, PartialEq)]
pub struct WindowBudget {
    pub start: f64,
    pub layer: String,
    pub net_offsets: Vec<f64>,
    pub max_abs: f64,
}

/// Net frequency of every beam after compensation, grouped by gate window.
pub fn frequency_budget(timeline: &Timeline, compensation: Compensation) -> Vec<WindowBudget> {
    let mut out: Vec<WindowBudget> = Vec::new();
    for e in timeline.events.iter().filter(|e| e.kind == EventKind::GateWindow) {
        let layer = match &e.payload {
            Payload::Gate { layer, .. } => layer.clone(),
            _ => String::new(),
        };
        let net = e.beam_frequency.unwrap_or(0.0) - compensation.shift();
        match out.last_mut() {
            Some(w) if w.start == e.start && w.layer == layer => {
                w.net_offsets.push(net);
                w.max_abs = w.max_abs.max(net.abs());
            }
            _ => out.push(WindowBudget {
                start: e.start,
                layer,
                net_offsets: vec![net],
                max_abs: net.abs(),
            }),
        }
    }
    out
}

/// Two-photon detuning of a pair of beams, one from each scanner.
pub fn two_photon_detuning(beam_a: f64, beam_b: f64) -> f64 {
    beam_a + beam_b
}

/// Parses a layer document: one layer per line,
/// `layer <id>; sites (r,c) ...; duration <s>; tones <nx>x<ny>@<pitch>`.
/// The tone pitch may be given per axis as `@<pitch_x>,<pitch_y>`.
/// Blank lines and lines starting with `#` are skipped.
pub fn parse_layers(text: &str) -> Result<Vec<GateLayer>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut id = None;
        let mut sites = None;
        let mut duration = None;
        let mut tones = None;
        for field in line.split(';').map(str::trim).filter(|f| !f.is_empty()) {
            let (key, value) = field.split_once(char::is_whitespace).unwrap_or((field, ""));
            let value = value.trim();
            match key {
                "layer" if !value.is_empty() => id = Some(value.to_string()),
                "sites" => {
                    let s = parse_sites(value).map_err(|m| Error::parse(ln, m))?;
                    sites = Some(AddressPattern::new(s).map_err(|e| Error::parse(ln, e.to_string()))?);
                }
                "duration" => {
                    let d: f64 = value
                        .parse()
                        .map_err(|_| Error::parse(ln, format!("bad duration '{value}'")))?;
                    duration = Some(d);
                }
                "tones" => tones = Some(parse_tones(value).ok_or_else(|| {
                    Error::parse(ln, format!("bad tones '{value}', expected <nx>x<ny>@<pitch>"))
                })?),
                _ => return Err(Error::parse(ln, format!("unknown field '{field}'"))),
            }
        }
        let id = id.ok_or_else(|| Error::parse(ln, "missing 'layer <id>'"))?;
        let sites = sites.ok_or_else(|| Error::parse(ln, "missing 'sites'"))?;
        let layer = GateLayer::new(id, sites, duration.unwrap_or(0.0))
            .map_err(|e| Error::parse(ln, e.to_string()))?;
        out.push(match tones {
            Some(t) => layer.with_tones(t),
            None => layer,
        });
    }
    Ok(out)
}

fn parse_tones(s: &str) -> Option<ToneReplication> {
    let (dims, pitch) = s.split_once('@')?;
    let (nx, ny) = dims.split_once('x')?;
    let (px, py) = pitch.split_once(',').unwrap_or((pitch, pitch));
    let t = ToneReplication {
        nx: nx.trim().parse().ok()?,
        ny: ny.trim().parse().ok()?,
        pitch_x: px.trim().parse().ok()?,
        pitch_y: py.trim().parse().ok()?,
    };
    (t.nx > 0 && t.ny > 0).then_some(t)
}
