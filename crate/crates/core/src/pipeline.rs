//! Decode, unwrap, pairwise differences, rotation folding and averaging.

use crate::angle::{circular_mean, wrap180};
use crate::error::{Error, Result};
use crate::simulator::{to_degrees, PacketSamples, SamplingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    /// One entry per consecutive slot pair, pairs repeating every rotation.
    Raw,
    /// One entry per adjacent antenna pair.
    Folded,
}

/// How angles are averaged across rotations and packets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanMode {
    /// Direction of the summed unit vectors.
    #[default]
    Circular,
    /// Plain arithmetic mean folded back into `[-180, 180)`, as plotted by
    /// the original figures.
    Arithmetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffProfile {
    /// Phase differences in degrees, each in `[-180, 180)` (or `[-1, 1]`
    /// once normalized).
    pub values: Vec<f64>,
    pub kind: ProfileKind,
    /// Counters of the packets that contributed.
    pub provenance: Vec<u32>,
}

impl DiffProfile {
    pub fn new(values: Vec<f64>, kind: ProfileKind) -> Self {
        Self {
            values,
            kind,
            provenance: Vec::new(),
        }
    }

    pub fn with_provenance(mut self, provenance: Vec<u32>) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Retained samples in degrees, unwrapped within each slot.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSeries {
    pub slots: Vec<Vec<f64>>,
    pub antennas: Vec<usize>,
}

/// Converts the switched slots of `packet` to degrees, keeping only the
/// retained sample indices.
///
/// Uses the first `rotations * antenna_count` slots plus one more when the
/// packet has it, so the closing pair (AN, A1) of the last rotation is only
/// produced from a real successor slot.
pub fn decode(
    packet: &PacketSamples,
    cfg: &SamplingConfig,
    antenna_count: usize,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let wanted = cfg.slot_count(antenna_count) + 1;
    let used = packet.slots.len().min(wanted);
    if packet.antenna_sequence.len() < used {
        return Err(Error::Input(format!(
            "packet {} has {} slots but only {} antenna labels",
            packet.counter,
            packet.slots.len(),
            packet.antenna_sequence.len()
        )));
    }
    for (i, &a) in packet.antenna_sequence[..used].iter().enumerate() {
        if a != i % antenna_count + 1 {
            return Err(Error::Input(format!(
                "packet {}: slot {i} sampled antenna {a}, expected the circular pattern",
                packet.counter
            )));
        }
    }
    let mut out = Vec::with_capacity(used);
    for (i, slot) in packet.slots[..used].iter().enumerate() {
        let group = cfg
            .retained_indices
            .iter()
            .map(|&j| {
                let v = *slot.get(j).ok_or_else(|| {
                    Error::Input(format!(
                        "packet {}: slot {i} has {} samples, retained index {j} missing",
                        packet.counter,
                        slot.len()
                    ))
                })?;
                to_degrees(v, cfg.fixed_point_halfscale)
            })
            .collect::<Result<Vec<f64>>>()?;
        out.push(group);
    }
    Ok((out, packet.antenna_sequence[..used].to_vec()))
}

/// Removes wrap-around drops within each slot: whenever a sample falls more
/// than 180° below its predecessor, 360° is added to it and to every later
/// sample of the slot. Slots are independent.
pub fn unwrap(slots: Vec<Vec<f64>>, antennas: Vec<usize>) -> Result<PhaseSeries> {
    let mut slots = slots;
    for (i, slot) in slots.iter_mut().enumerate() {
        if slot.len() < 2 {
            return Err(Error::Input(format!(
                "slot {i} has {} retained samples; unwrapping needs at least 2",
                slot.len()
            )));
        }
        let mut offset = 0.0;
        for j in 1..slot.len() {
            slot[j] += offset;
            if slot[j] < slot[j - 1] - 180.0 {
                offset += 360.0;
                slot[j] += 360.0;
            }
        }
    }
    Ok(PhaseSeries { slots, antennas })
}

/// Difference between each slot and its predecessor: the mean over retained
/// samples of `previous - current`, folded into `[-180, 180)`.
///
/// Emits one entry per slot after the first.
pub fn phase_diffs(series: &PhaseSeries) -> Result<DiffProfile> {
    if series.slots.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 slots for a difference, got {}",
            series.slots.len()
        )));
    }
    let values = series
        .slots
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (prev, cur) = (&w[0], &w[1]);
            if prev.len() != cur.len() {
                return Err(Error::Input(format!(
                    "slots {i} and {} hold {} and {} samples",
                    i + 1,
                    prev.len(),
                    cur.len()
                )));
            }
            let sum: f64 = prev.iter().zip(cur).map(|(a, b)| a - b).sum();
            Ok(wrap180(sum / prev.len() as f64))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiffProfile::new(values, ProfileKind::Raw))
}

fn mean_of(values: &[f64], mode: MeanMode) -> Option<f64> {
    match mode {
        MeanMode::Circular => circular_mean(values.iter().copied()),
        MeanMode::Arithmetic if values.is_empty() => None,
        MeanMode::Arithmetic => Some(wrap180(values.iter().sum::<f64>() / values.len() as f64)),
    }
}

/// Collapses repeated sweeps of a raw profile to one entry per antenna
/// pair. Entry `p` averages raw entries `p, p + N, p + 2N, ..`; a trailing
/// partial rotation contributes to the pairs it covers.
pub fn fold_rotations(
    raw: &DiffProfile,
    antenna_count: usize,
    mode: MeanMode,
) -> Result<DiffProfile> {
    if raw.kind != ProfileKind::Raw {
        return Err(Error::Input("fold_rotations expects a raw profile".into()));
    }
    if raw.len() < antenna_count {
        return Err(Error::Input(format!(
            "raw profile of {} entries does not cover all {antenna_count} pairs",
            raw.len()
        )));
    }
    if !raw.len().is_multiple_of(antenna_count) {
        log::debug!(
            "raw profile length {} is not a multiple of {antenna_count}; pairs are weighted unevenly",
            raw.len()
        );
    }
    let values = (0..antenna_count)
        .map(|p| {
            let group: Vec<f64> = raw
                .values
                .iter()
                .skip(p)
                .step_by(antenna_count)
                .copied()
                .collect();
            mean_of(&group, mode)
                .ok_or_else(|| Error::Degenerate(format!("pair {p}: rotation vectors cancel")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiffProfile {
        values,
        kind: ProfileKind::Folded,
        provenance: raw.provenance.clone(),
    })
}

/// Per-index mean across packets.
pub fn average_profiles(profiles: &[DiffProfile], mode: MeanMode) -> Result<DiffProfile> {
    let first = profiles
        .first()
        .ok_or_else(|| Error::Input("cannot average an empty list of profiles".into()))?;
    if let Some(p) = profiles
        .iter()
        .find(|p| p.len() != first.len() || p.kind != first.kind)
    {
        return Err(Error::Input(format!(
            "profiles differ in shape: {} {:?} vs {} {:?}",
            first.len(),
            first.kind,
            p.len(),
            p.kind
        )));
    }
    if profiles.len() == 1 {
        return Ok(first.clone());
    }
    let mut column = Vec::with_capacity(profiles.len());
    let values = (0..first.len())
        .map(|i| {
            column.clear();
            column.extend(profiles.iter().map(|p| p.values[i]));
            mean_of(&column, mode)
                .ok_or_else(|| Error::Degenerate(format!("index {i}: profile vectors cancel")))
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = profiles
        .iter()
        .flat_map(|p| p.provenance.iter().copied())
        .collect();
    Ok(DiffProfile {
        values,
        kind: first.kind,
        provenance,
    })
}

/// Scales a profile so its largest magnitude is 1.
pub fn normalize_profile(p: &DiffProfile) -> Result<DiffProfile> {
    let max = p.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max <= 0.0 {
        return Err(Error::Input("cannot normalize an all-zero profile".into()));
    }
    Ok(DiffProfile {
        values: p.values.iter().map(|v| v / max).collect(),
        kind: p.kind,
        provenance: p.provenance.clone(),
    })
}

/// Raw and folded profiles of a single packet.
pub fn process_packet(
    packet: &PacketSamples,
    cfg: &SamplingConfig,
    antenna_count: usize,
    mode: MeanMode,
) -> Result<(DiffProfile, DiffProfile)> {
    let (slots, antennas) = decode(packet, cfg, antenna_count)?;
    let series = unwrap(slots, antennas)?;
    let raw = phase_diffs(&series)?.with_provenance(vec![packet.counter]);
    let folded = fold_rotations(&raw, antenna_count, mode)?;
    Ok((raw, folded))
}
