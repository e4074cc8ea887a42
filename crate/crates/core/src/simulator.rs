//! Synthetic constant-tone-extension phase samples.
//!
//! Time is measured from the first switched slot. The guard period carries
//! no samples; the reference period is sampled on antenna 1 at negative
//! times. Each sample is the wrapped tone phase plus the spatial phase of the
//! antenna in use, plus optional Gaussian noise, quantized to the radio's
//! fixed-point range.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::angle::wrap180;
use crate::error::{Error, Result};
use crate::geometry::{spatial_phase, ArrayGeometry, CarrierModel};

const STREAM_NOISE: u64 = 0;
const STREAM_CORRUPTION: u64 = 1;
const STREAM_INITIAL_PHASE: u64 = 2;
const STREAM_DERIVED: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SamplingConfig {
    pub cte_length_us: f64,
    pub guard_us: f64,
    pub reference_us: f64,
    pub slot_us: f64,
    pub sample_period_ns: f64,
    pub tone_rate_deg_per_us: f64,
    pub fixed_point_halfscale: i16,
    /// Per-slot sample indices used by the pipeline, ascending.
    pub retained_indices: Vec<usize>,
    /// Full sweeps of the array within one packet.
    pub rotations: usize,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            cte_length_us: 160.0,
            guard_us: 4.0,
            reference_us: 8.0,
            slot_us: 4.0,
            sample_period_ns: 500.0,
            tone_rate_deg_per_us: 90.0,
            fixed_point_halfscale: 201,
            retained_indices: vec![1, 2, 3],
            rotations: 4,
        }
    }
}

fn integer_ratio(num: f64, den: f64) -> Option<usize> {
    let r = num / den;
    let k = r.round();
    ((r - k).abs() < 1e-9 && k >= 0.0).then_some(k as usize)
}

impl SamplingConfig {
    pub fn samples_per_slot(&self) -> usize {
        integer_ratio(self.slot_us * 1000.0, self.sample_period_ns).unwrap_or(0)
    }

    pub fn reference_samples(&self) -> usize {
        integer_ratio(self.reference_us * 1000.0, self.sample_period_ns).unwrap_or(0)
    }

    pub fn sample_period_us(&self) -> f64 {
        self.sample_period_ns / 1000.0
    }

    /// Number of switched slots produced per packet.
    pub fn slot_count(&self, antenna_count: usize) -> usize {
        self.rotations * antenna_count
    }

    pub fn validate(&self, antenna_count: usize) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.sample_period_ns > 0.0) || !(self.slot_us > 0.0) {
            return bad("slot and sample period must be positive".into());
        }
        if self.guard_us < 0.0 || self.reference_us < 0.0 {
            return bad("guard and reference durations must be non-negative".into());
        }
        let sps = match integer_ratio(self.slot_us * 1000.0, self.sample_period_ns) {
            Some(n) if n > 0 => n,
            _ => {
                return bad(format!(
                    "slot of {} us is not an integer multiple of the {} ns sample period",
                    self.slot_us, self.sample_period_ns
                ))
            }
        };
        if integer_ratio(self.reference_us * 1000.0, self.sample_period_ns).is_none() {
            return bad(format!(
                "reference period of {} us is not an integer multiple of the sample period",
                self.reference_us
            ));
        }
        let per_slot = (self.tone_rate_deg_per_us * self.slot_us).rem_euclid(360.0);
        if per_slot > 1e-9 && (360.0 - per_slot) > 1e-9 {
            return bad(format!(
                "tone advances {} deg per slot; slot equivalence needs a multiple of 360",
                self.tone_rate_deg_per_us * self.slot_us
            ));
        }
        if self.fixed_point_halfscale <= 0 {
            return bad("fixed-point halfscale must be positive".into());
        }
        if self.retained_indices.is_empty() {
            return bad("retained_indices must not be empty".into());
        }
        if self.retained_indices.windows(2).any(|w| w[0] >= w[1]) {
            return bad("retained_indices must be strictly ascending".into());
        }
        if let Some(&i) = self.retained_indices.iter().find(|&&i| i >= sps) {
            return bad(format!(
                "retained index {i} outside [0, {sps}) samples per slot"
            ));
        }
        if self.rotations == 0 {
            return bad("rotations must be at least 1".into());
        }
        let needed = (self.rotations * antenna_count) as f64 * self.slot_us;
        let available = self.cte_length_us - self.guard_us - self.reference_us;
        if needed > available + 1e-9 {
            return bad(format!(
                "{} rotations x {antenna_count} slots need {needed} us but only {available} us of switched CTE exist",
                self.rotations
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation of the zero-mean Gaussian phase error, degrees.
    pub sigma_deg: f64,
    /// Perturb non-retained sample indices with a uniform phase error.
    pub transient_corruption: bool,
    /// Half-width of the uniform corruption, degrees.
    pub corruption_deg: f64,
    pub seed: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            sigma_deg: 0.0,
            transient_corruption: false,
            corruption_deg: 180.0,
            seed: 0,
        }
    }
}

impl NoiseModel {
    pub fn clean() -> Self {
        Self::default()
    }

    pub fn gaussian(sigma_deg: f64, seed: u64) -> Self {
        Self {
            sigma_deg,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_deg >= 0.0) || !self.sigma_deg.is_finite() {
            return Err(Error::Config(format!(
                "noise sigma must be finite and non-negative, got {}",
                self.sigma_deg
            )));
        }
        if self.transient_corruption && !(self.corruption_deg >= 0.0) {
            return Err(Error::Config(
                "corruption magnitude must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// One packet's raw phase samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketSamples {
    pub transmitter: String,
    pub counter: u32,
    /// Ground truth, only known for simulated packets.
    pub true_aoa: Option<f64>,
    /// Reference-period samples; not used by the pipeline.
    pub reference: Vec<i16>,
    /// Switched samples, one group per antenna dwell.
    pub slots: Vec<Vec<i16>>,
    /// Antenna (1-based) sampled in each slot.
    pub antenna_sequence: Vec<usize>,
}

impl PacketSamples {
    pub fn sample_count(&self) -> usize {
        self.reference.len() + self.slots.iter().map(Vec::len).sum::<usize>()
    }
}

/// Circular switching pattern 1, 2, .., N, 1, 2, ...
pub fn circular_sequence(antenna_count: usize, slots: usize) -> Vec<usize> {
    (0..slots).map(|i| i % antenna_count + 1).collect()
}

/// Maps `[-180, 180]` degrees linearly onto `[-halfscale, halfscale]`,
/// rounding half away from zero.
pub fn to_fixed_point(phase_deg: f64, halfscale: i16) -> Result<i16> {
    if !(-180.0..=180.0).contains(&phase_deg) {
        return Err(Error::Input(format!(
            "phase {phase_deg} outside [-180, 180]"
        )));
    }
    Ok((phase_deg * halfscale as f64 / 180.0).round() as i16)
}

pub fn to_degrees(value: i16, halfscale: i16) -> Result<f64> {
    if value.unsigned_abs() > halfscale.unsigned_abs() {
        return Err(Error::Input(format!(
            "fixed-point sample {value} exceeds +/-{halfscale}"
        )));
    }
    Ok(value as f64 * 180.0 / halfscale as f64)
}

/// Generates one packet. Deterministic in all arguments including
/// `noise.seed`; for a clean noise model the seed has no effect.
pub fn simulate_packet(
    geom: &ArrayGeometry,
    carrier: &CarrierModel,
    cfg: &SamplingConfig,
    aoa_deg: f64,
    noise: &NoiseModel,
    initial_phase_deg: f64,
) -> Result<PacketSamples> {
    let n_ant = geom.antenna_count();
    cfg.validate(n_ant)?;
    noise.validate()?;

    let mut noise_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    noise_rng.set_stream(STREAM_NOISE);
    let mut corrupt_rng = ChaCha8Rng::seed_from_u64(noise.seed);
    corrupt_rng.set_stream(STREAM_CORRUPTION);
    let gauss = Normal::new(0.0, noise.sigma_deg)
        .map_err(|e| Error::Config(format!("noise model: {e}")))?;

    let spatial: Vec<f64> = (1..=n_ant)
        .map(|k| spatial_phase(geom, carrier, aoa_deg, k))
        .collect();
    let period = cfg.sample_period_us();
    let halfscale = cfg.fixed_point_halfscale;

    let mut sample = |t_us: f64, antenna: usize| -> Result<i16> {
        let mut phase = initial_phase_deg + cfg.tone_rate_deg_per_us * t_us + spatial[antenna - 1];
        if noise.sigma_deg > 0.0 {
            phase += gauss.sample(&mut noise_rng);
        }
        to_fixed_point(wrap180(phase), halfscale)
    };

    let reference = (0..cfg.reference_samples())
        .map(|j| sample(-cfg.reference_us + j as f64 * period, 1))
        .collect::<Result<Vec<_>>>()?;

    let sps = cfg.samples_per_slot();
    let antenna_sequence = circular_sequence(n_ant, cfg.slot_count(n_ant));
    let mut slots = Vec::with_capacity(antenna_sequence.len());
    for (i, &antenna) in antenna_sequence.iter().enumerate() {
        let mut group = Vec::with_capacity(sps);
        for j in 0..sps {
            let t = i as f64 * cfg.slot_us + j as f64 * period;
            let mut v = sample(t, antenna)?;
            if noise.transient_corruption && !cfg.retained_indices.contains(&j) {
                let err = corrupt_rng.random_range(-1.0..1.0) * noise.corruption_deg;
                let decoded = to_degrees(v, halfscale)?;
                v = to_fixed_point(wrap180(decoded + err), halfscale)?;
            }
            group.push(v);
        }
        slots.push(group);
    }

    Ok(PacketSamples {
        transmitter: String::new(),
        counter: 0,
        true_aoa: Some(aoa_deg),
        reference,
        slots,
        antenna_sequence,
    })
}

/// Generates `count` packets with per-packet seeds derived from
/// `noise.seed` and a uniformly random initial tone phase per packet.
/// Packet `i` depends only on `(noise.seed, i)`, so batches may be split or
/// generated in parallel.
pub fn simulate_packets(
    geom: &ArrayGeometry,
    carrier: &CarrierModel,
    cfg: &SamplingConfig,
    aoa_deg: f64,
    noise: &NoiseModel,
    count: usize,
    transmitter: &str,
) -> Result<Vec<PacketSamples>> {
    (0..count)
        .map(|i| simulate_packet_at(geom, carrier, cfg, aoa_deg, noise, i as u32, transmitter))
        .collect()
}

/// Packet `counter` of the batch [`simulate_packets`] would generate.
pub fn simulate_packet_at(
    geom: &ArrayGeometry,
    carrier: &CarrierModel,
    cfg: &SamplingConfig,
    aoa_deg: f64,
    noise: &NoiseModel,
    counter: u32,
    transmitter: &str,
) -> Result<PacketSamples> {
    let (seed, initial_phase) = packet_seed(noise.seed, counter);
    let packet_noise = NoiseModel {
        seed,
        ..noise.clone()
    };
    let mut p = simulate_packet(geom, carrier, cfg, aoa_deg, &packet_noise, initial_phase)?;
    p.transmitter = transmitter.to_string();
    p.counter = counter;
    Ok(p)
}

/// Independent seed for sub-run `index` of a run seeded with `base_seed`.
pub fn derive_seed(base_seed: u64, index: u32) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(STREAM_DERIVED);
    rng.set_word_pos(index as u128 * 2);
    rng.next_u64()
}

/// Derived seed and initial tone phase for packet `counter` of a batch.
pub fn packet_seed(base_seed: u64, counter: u32) -> (u64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(STREAM_INITIAL_PHASE);
    rng.set_word_pos(counter as u128 * 16);
    let seed = rng.next_u64();
    let phase = rng.random_range(-180.0..180.0);
    (seed, phase)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> (ArrayGeometry, CarrierModel, SamplingConfig) {
        (
            ArrayGeometry::default(),
            CarrierModel::default(),
            SamplingConfig::default(),
        )
    }

    #[test]
    fn default_config_shape() {
        let cfg = SamplingConfig::default();
        cfg.validate(8).unwrap();
        assert_eq!(cfg.samples_per_slot(), 8);
        assert_eq!(cfg.reference_samples(), 16);
        assert_eq!(cfg.slot_count(8), 32);
    }

    #[test]
    fn config_violations_are_named() {
        let mut cfg = SamplingConfig {
            sample_period_ns: 300.0,
            ..Default::default()
        };
        let e = cfg.validate(8).unwrap_err().to_string();
        assert!(e.contains("integer multiple"), "{e}");

        cfg = SamplingConfig {
            tone_rate_deg_per_us: 80.0,
            ..Default::default()
        };
        assert!(cfg.validate(8).unwrap_err().to_string().contains("360"));

        cfg = SamplingConfig {
            retained_indices: vec![1, 8],
            ..Default::default()
        };
        assert!(cfg
            .validate(8)
            .unwrap_err()
            .to_string()
            .contains("retained"));

        cfg = SamplingConfig {
            rotations: 5,
            ..Default::default()
        };
        assert!(cfg
            .validate(8)
            .unwrap_err()
            .to_string()
            .contains("rotations"));
    }

    #[test]
    fn fixed_point_examples() {
        assert_eq!(to_fixed_point(0.0, 201).unwrap(), 0);
        assert_eq!(to_degrees(0, 201).unwrap(), 0.0);
        assert_eq!(to_fixed_point(180.0, 201).unwrap(), 201);
        assert_eq!(to_fixed_point(-180.0, 201).unwrap(), -201);
        // 90 * 201 / 180 = 100.5 rounds away from zero
        assert_eq!(to_fixed_point(90.0, 201).unwrap(), 101);
        let back = to_degrees(101, 201).unwrap();
        assert!((back - 90.44776119402985).abs() < 1e-12);
        assert!((back - 90.0).abs() < 0.45);
        assert_eq!(to_fixed_point(-90.0, 201).unwrap(), -101);
        assert!(to_degrees(202, 201).is_err());
        assert!(to_degrees(-202, 201).is_err());
        assert!(to_fixed_point(180.5, 201).is_err());
    }

    #[test]
    fn packet_shape() {
        let (g, c, cfg) = defaults();
        let p = simulate_packet(&g, &c, &cfg, 30.0, &NoiseModel::clean(), 10.0).unwrap();
        assert_eq!(p.reference.len(), 16);
        assert_eq!(p.slots.len(), 32);
        assert!(p.slots.iter().all(|s| s.len() == 8));
        assert_eq!(p.antenna_sequence, circular_sequence(8, 32));
        assert_eq!(&p.antenna_sequence[..9], &[1, 2, 3, 4, 5, 6, 7, 8, 1]);
        assert_eq!(p.sample_count(), 16 + 256);
    }

    #[test]
    fn tone_advances_45_degrees_per_sample() {
        let (g, c, cfg) = defaults();
        // spatial phase is constant within a slot
        let p = simulate_packet(&g, &c, &cfg, 0.0, &NoiseModel::clean(), 0.0).unwrap();
        for slot in &p.slots {
            for w in slot.windows(2) {
                let a = to_degrees(w[0], 201).unwrap();
                let b = to_degrees(w[1], 201).unwrap();
                let step = wrap180(b - a);
                assert!((step - 45.0).abs() <= 2.0 * 90.0 / 201.0 + 1e-9, "{step}");
            }
        }
    }

    #[test]
    fn point_array_has_identical_slots() {
        let g = ArrayGeometry::new(8, 1e-9, 0.0).unwrap();
        let (_, c, cfg) = defaults();
        let p = simulate_packet(&g, &c, &cfg, 77.0, &NoiseModel::clean(), 12.0).unwrap();
        for slot in &p.slots {
            assert_eq!(slot, &p.slots[0]);
        }
    }

    #[test]
    fn quantization_bound_holds() {
        let (g, c, cfg) = defaults();
        let aoa = 123.0;
        let init = 33.3;
        let p = simulate_packet(&g, &c, &cfg, aoa, &NoiseModel::clean(), init).unwrap();
        for (i, slot) in p.slots.iter().enumerate() {
            let k = p.antenna_sequence[i];
            for (j, v) in slot.iter().enumerate() {
                let t = i as f64 * 4.0 + j as f64 * 0.5;
                let exact = init + 90.0 * t + spatial_phase(&g, &c, aoa, k);
                let got = to_degrees(*v, 201).unwrap();
                assert!(wrap180(got - exact).abs() <= 90.0 / 201.0 + 1e-9);
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let (g, c, cfg) = defaults();
        let noise = NoiseModel::gaussian(30.0, 42);
        let a = simulate_packets(&g, &c, &cfg, 10.0, &noise, 5, "b1").unwrap();
        let b = simulate_packets(&g, &c, &cfg, 10.0, &noise, 5, "b1").unwrap();
        assert_eq!(a, b);
        let other =
            simulate_packets(&g, &c, &cfg, 10.0, &NoiseModel::gaussian(30.0, 43), 5, "b1").unwrap();
        assert_ne!(a, other);
        // packet i does not depend on the batch size
        let prefix = simulate_packets(&g, &c, &cfg, 10.0, &noise, 3, "b1").unwrap();
        assert_eq!(&a[..3], &prefix[..]);
    }

    #[test]
    fn clean_packet_ignores_seed() {
        let (g, c, cfg) = defaults();
        let a = simulate_packet(&g, &c, &cfg, 200.0, &NoiseModel::gaussian(0.0, 1), 5.0).unwrap();
        let b = simulate_packet(&g, &c, &cfg, 200.0, &NoiseModel::gaussian(0.0, 999), 5.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn corruption_touches_only_unretained_indices() {
        let (g, c, cfg) = defaults();
        let base = NoiseModel::gaussian(10.0, 7);
        let corrupt = NoiseModel {
            transient_corruption: true,
            ..base.clone()
        };
        let a = simulate_packet(&g, &c, &cfg, 45.0, &base, 0.0).unwrap();
        let b = simulate_packet(&g, &c, &cfg, 45.0, &corrupt, 0.0).unwrap();
        let mut changed = 0;
        for (sa, sb) in a.slots.iter().zip(&b.slots) {
            for j in 0..8 {
                if cfg.retained_indices.contains(&j) {
                    assert_eq!(sa[j], sb[j]);
                } else if sa[j] != sb[j] {
                    changed += 1;
                }
            }
        }
        assert!(changed > 100);
    }

    #[test]
    fn invalid_config_rejected_before_generation() {
        let (g, c, _) = defaults();
        let cfg = SamplingConfig {
            slot_us: 3.0,
            ..Default::default()
        };
        assert!(matches!(
            simulate_packet(&g, &c, &cfg, 0.0, &NoiseModel::clean(), 0.0),
            Err(Error::Config(_))
        ));
        let neg = NoiseModel::gaussian(-1.0, 0);
        assert!(simulate_packet(&g, &c, &SamplingConfig::default(), 0.0, &neg, 0.0).is_err());
    }
}
