use std::io::BufRead;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{ArrayGeometry, CarrierModel};
use crate::simulator::{circular_sequence, NoiseModel, PacketSamples, SamplingConfig};

use super::fmt_f64;

pub const DUMP_VERSION_TAG: &str = "# cte-dump v1";
const TAG_PREFIX: &str = "# cte-dump ";

/// Whether `text` looks like a packet dump of any version.
pub fn is_dump(text: &str) -> bool {
    text.starts_with(TAG_PREFIX)
}

/// Ordered `key=value` header of a packet dump.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    entries: Vec<(String, String)>,
}

impl Manifest {
    pub fn new() -> Self {
        Self::default()
    }

    /// Manifest describing packets generated with the given setup.
    pub fn from_setup(
        transmitter: &str,
        geom: &ArrayGeometry,
        carrier: &CarrierModel,
        cfg: &SamplingConfig,
        noise: &NoiseModel,
    ) -> Self {
        let mut m = Self::new();
        m.set("transmitter", transmitter);
        m.set("antenna_count", geom.antenna_count());
        m.set("radius_mm", fmt_f64(geom.radius_mm()));
        m.set(
            "orientation_offset_deg",
            fmt_f64(geom.orientation_offset_deg()),
        );
        m.set("carrier_hz", fmt_f64(carrier.frequency_hz()));
        m.set("propagation_mps", fmt_f64(carrier.propagation_speed_mps()));
        m.set("cte_length_us", fmt_f64(cfg.cte_length_us));
        m.set("guard_us", fmt_f64(cfg.guard_us));
        m.set("reference_us", fmt_f64(cfg.reference_us));
        m.set("slot_us", fmt_f64(cfg.slot_us));
        m.set("sample_period_ns", fmt_f64(cfg.sample_period_ns));
        m.set("tone_rate_deg_per_us", fmt_f64(cfg.tone_rate_deg_per_us));
        m.set("halfscale", cfg.fixed_point_halfscale);
        let retained: Vec<String> = cfg.retained_indices.iter().map(|i| i.to_string()).collect();
        m.set("retained_indices", retained.join(" "));
        m.set("rotations", cfg.rotations);
        m.set("reference_samples", cfg.reference_samples());
        m.set("slots", cfg.slot_count(geom.antenna_count()));
        m.set("samples_per_slot", cfg.samples_per_slot());
        m.set("sigma_deg", fmt_f64(noise.sigma_deg));
        m.set("transient_corruption", noise.transient_corruption);
        m.set("corruption_deg", fmt_f64(noise.corruption_deg));
        m.set("seed", noise.seed);
        m
    }

    /// Replaces the value of `key`, or appends it.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::Config(format!("manifest key {key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    fn require<T: FromStr>(&self, key: &str) -> Result<T> {
        self.parse(key)?
            .ok_or_else(|| Error::Config(format!("manifest is missing required key {key}")))
    }

    pub fn antenna_count(&self) -> Result<usize> {
        self.require("antenna_count")
    }

    pub fn halfscale(&self) -> Result<i16> {
        self.require("halfscale")
    }

    pub fn reference_samples(&self) -> Result<usize> {
        self.require("reference_samples")
    }

    pub fn slots(&self) -> Result<usize> {
        self.require("slots")
    }

    pub fn samples_per_slot(&self) -> Result<usize> {
        self.require("samples_per_slot")
    }

    pub fn transmitter(&self) -> Option<&str> {
        self.get("transmitter")
    }

    /// Samples per record, excluding the leading packet/transmitter/aoa fields.
    pub fn record_samples(&self) -> Result<usize> {
        Ok(self.reference_samples()? + self.slots()? * self.samples_per_slot()?)
    }

    /// Geometry from the manifest; absent keys take their defaults.
    pub fn geometry(&self) -> Result<ArrayGeometry> {
        let d = ArrayGeometry::default();
        ArrayGeometry::new(
            self.antenna_count()?,
            self.parse("radius_mm")?.unwrap_or(d.radius_mm()),
            self.parse("orientation_offset_deg")?
                .unwrap_or(d.orientation_offset_deg()),
        )
    }

    pub fn carrier(&self) -> Result<CarrierModel> {
        let d = CarrierModel::default();
        CarrierModel::new(
            self.parse("carrier_hz")?.unwrap_or(d.frequency_hz()),
            self.parse("propagation_mps")?
                .unwrap_or(d.propagation_speed_mps()),
        )
    }

    /// Sampling configuration from the manifest; absent keys take their
    /// defaults.
    pub fn sampling(&self) -> Result<SamplingConfig> {
        let d = SamplingConfig::default();
        let retained = match self.get("retained_indices") {
            Some(s) => s
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>().map_err(|_| {
                        Error::Config(format!("manifest key retained_indices: bad index {t:?}"))
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            None => d.retained_indices.clone(),
        };
        Ok(SamplingConfig {
            cte_length_us: self.parse("cte_length_us")?.unwrap_or(d.cte_length_us),
            guard_us: self.parse("guard_us")?.unwrap_or(d.guard_us),
            reference_us: self.parse("reference_us")?.unwrap_or(d.reference_us),
            slot_us: self.parse("slot_us")?.unwrap_or(d.slot_us),
            sample_period_ns: self
                .parse("sample_period_ns")?
                .unwrap_or(d.sample_period_ns),
            tone_rate_deg_per_us: self
                .parse("tone_rate_deg_per_us")?
                .unwrap_or(d.tone_rate_deg_per_us),
            fixed_point_halfscale: self.halfscale()?,
            retained_indices: retained,
            rotations: self.parse("rotations")?.unwrap_or(d.rotations),
        })
    }

    fn column_names(&self) -> Result<Vec<String>> {
        let mut cols = vec![
            "packet".to_string(),
            "transmitter".into(),
            "true_aoa".into(),
        ];
        cols.extend((0..self.reference_samples()?).map(|j| format!("ref{j}")));
        let sps = self.samples_per_slot()?;
        for i in 0..self.slots()? {
            cols.extend((0..sps).map(|j| format!("s{i}_{j}")));
        }
        Ok(cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strictness {
    /// The first malformed record aborts the read.
    #[default]
    Strict,
    /// Malformed records are skipped and reported.
    Lenient,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dump {
    pub manifest: Manifest,
    pub packets: Vec<PacketSamples>,
    /// Records skipped in lenient mode.
    pub diagnostics: Vec<Diagnostic>,
}

fn parse_record(
    line: &str,
    manifest: &Manifest,
    antennas: &[usize],
) -> std::result::Result<PacketSamples, String> {
    let fields: Vec<&str> = line.split(',').collect();
    let n_ref = manifest.reference_samples().map_err(|e| e.to_string())?;
    let sps = manifest.samples_per_slot().map_err(|e| e.to_string())?;
    let expected = manifest.record_samples().map_err(|e| e.to_string())?;
    let halfscale = manifest.halfscale().map_err(|e| e.to_string())?;
    let got = fields.len().saturating_sub(3);
    if fields.len() < 3 || got != expected {
        let name = fields.first().copied().unwrap_or("");
        return Err(format!(
            "record {name:?} has {got} samples, manifest declares {expected}"
        ));
    }
    let counter: u32 = fields[0]
        .parse()
        .map_err(|_| format!("bad packet counter {:?}", fields[0]))?;
    let transmitter = fields[1].to_string();
    let true_aoa = match fields[2] {
        "" => None,
        s => Some(
            s.parse::<f64>()
                .map_err(|_| format!("record {counter}: bad true_aoa {s:?}"))?,
        ),
    };
    let mut samples = Vec::with_capacity(expected);
    for (k, s) in fields[3..].iter().enumerate() {
        let v: i16 = s
            .parse()
            .map_err(|_| format!("record {counter}: sample {k} is not a 16-bit integer: {s:?}"))?;
        if v.unsigned_abs() > halfscale.unsigned_abs() {
            return Err(format!(
                "record {counter}: sample {k} = {v} exceeds +/-{halfscale}"
            ));
        }
        samples.push(v);
    }
    let reference = samples[..n_ref].to_vec();
    let slots = samples[n_ref..]
        .chunks(sps.max(1))
        .map(<[i16]>::to_vec)
        .collect();
    Ok(PacketSamples {
        transmitter,
        counter,
        true_aoa,
        reference,
        slots,
        antenna_sequence: antennas.to_vec(),
    })
}

/// Reads a packet dump. Header problems are always fatal; record problems
/// are fatal or skipped according to `strictness`.
pub fn read_dump<R: BufRead>(reader: R, strictness: Strictness) -> Result<Dump> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, tag) = lines
        .next()
        .ok_or_else(|| Error::format(1, "empty input; expected a version tag"))?;
    let tag = tag?;
    if !tag.starts_with(TAG_PREFIX) {
        return Err(Error::format(
            1,
            format!("missing version tag, found {tag:?}"),
        ));
    }
    if tag != DUMP_VERSION_TAG {
        return Err(Error::format(1, format!("unknown version tag {tag:?}")));
    }

    let mut manifest = Manifest::new();
    let header = loop {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::format(0, "missing column header"))?;
        let line = line?;
        match line.strip_prefix("# ") {
            Some(kv) => {
                let (k, v) = kv.split_once('=').ok_or_else(|| {
                    Error::format(n, format!("manifest line without '=': {line:?}"))
                })?;
                manifest.entries.push((k.to_string(), v.to_string()));
            }
            None => break (n, line),
        }
    };

    let columns = manifest
        .column_names()
        .map_err(|e| Error::format(header.0, e.to_string()))?;
    let found = header.1.split(',').count();
    if header.1 != columns.join(",") {
        return Err(Error::format(
            header.0,
            format!(
                "column header has {found} columns, manifest implies {}",
                columns.len()
            ),
        ));
    }

    let antennas = circular_sequence(
        manifest
            .antenna_count()
            .map_err(|e| Error::format(header.0, e.to_string()))?,
        manifest.slots()?,
    );
    let mut packets = Vec::new();
    let mut diagnostics = Vec::new();
    for (n, line) in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        match parse_record(&line, &manifest, &antennas) {
            Ok(p) => packets.push(p),
            Err(msg) => match strictness {
                Strictness::Strict => return Err(Error::format(n, msg)),
                Strictness::Lenient => {
                    log::warn!("line {n}: {msg}; record skipped");
                    diagnostics.push(Diagnostic {
                        line: n,
                        message: msg,
                    });
                }
            },
        }
    }
    Ok(Dump {
        manifest,
        packets,
        diagnostics,
    })
}

/// Renders a packet dump. Every packet must match the manifest's shape.
pub fn write_dump(manifest: &Manifest, packets: &[PacketSamples]) -> Result<String> {
    let n_ref = manifest.reference_samples()?;
    let slots = manifest.slots()?;
    let sps = manifest.samples_per_slot()?;
    let halfscale = manifest.halfscale()?;
    let mut out = String::new();
    out.push_str(DUMP_VERSION_TAG);
    out.push('\n');
    for (k, v) in &manifest.entries {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str(&manifest.column_names()?.join(","));
    out.push('\n');
    for p in packets {
        if p.reference.len() != n_ref
            || p.slots.len() != slots
            || p.slots.iter().any(|s| s.len() != sps)
        {
            return Err(Error::Input(format!(
                "packet {} does not match the manifest shape ({n_ref} reference, {slots} x {sps})",
                p.counter
            )));
        }
        if p.transmitter.contains(',') || p.transmitter.contains('\n') {
            return Err(Error::Input(format!(
                "transmitter id {:?} contains a separator",
                p.transmitter
            )));
        }
        let all = p.reference.iter().chain(p.slots.iter().flatten());
        if let Some(v) = all
            .clone()
            .find(|v| v.unsigned_abs() > halfscale.unsigned_abs())
        {
            return Err(Error::Input(format!(
                "packet {}: sample {v} exceeds +/-{halfscale}",
                p.counter
            )));
        }
        out.push_str(&p.counter.to_string());
        out.push(',');
        out.push_str(&p.transmitter);
        out.push(',');
        if let Some(a) = p.true_aoa {
            out.push_str(&fmt_f64(a));
        }
        for v in all {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    Ok(out)
}
