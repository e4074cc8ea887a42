//! Subcommand implementations behind the `cte` binary. Each function takes
//! a resolved [`RunConfig`], writes its CSV outputs under `out` and returns
//! what it wrote so callers and tests can inspect it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::angle::{circular_diff, wrap360};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::estimator::{profile_deviation, AoAEstimate, Estimator};
use crate::io::{
    is_dump, read_dump, read_estimates, read_profile_table, write_dump, write_estimates,
    write_positions, Dump, EstimateRecord, Manifest, ProfileTable, Strictness,
};
use crate::locator::{bearing_from_aoa, locate, PositionEstimate};
use crate::pipeline::{
    average_profiles, normalize_profile, process_packet, DiffProfile, ProfileKind,
};
use crate::simulator::{derive_seed, simulate_packet_at, NoiseModel};

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    /// Reserved for command-line usage errors.
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const FORMAT: i32 = 4;
    pub const DEGENERATE: i32 = 5;
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => exit::CONFIG,
        Error::Format { .. } | Error::Input(_) => exit::FORMAT,
        Error::Degenerate(_) => exit::DEGENERATE,
        Error::Io(_) => exit::IO,
    }
}

fn write_file(path: PathBuf, contents: &str) -> Result<PathBuf> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(&path, contents)?;
    Ok(path)
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "input".into())
}

fn stamp(table: &mut ProfileTable, rc: &RunConfig) {
    table.comments.push(format!("config_hash={}", rc.hash));
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// Inclusive angle sweep `start, start + step, ..` up to `stop`.
pub fn sweep(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || stop < start {
        return Err(Error::Config(format!(
            "invalid sweep {start}:{stop}:{step}"
        )));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// One dump per (aoa, sigma) cell, `packets` packets each.
pub fn simulate(
    rc: &RunConfig,
    out: &Path,
    aoas: &[f64],
    sigmas: &[f64],
    packets: usize,
    transmitter: &str,
) -> Result<Vec<PathBuf>> {
    let cells: Vec<(f64, f64)> = aoas
        .iter()
        .flat_map(|a| sigmas.iter().map(move |s| (*a, *s)))
        .collect();
    let rendered = cells
        .par_iter()
        .enumerate()
        .map(|(k, &(aoa, sigma))| {
            let noise = NoiseModel {
                sigma_deg: sigma,
                seed: derive_seed(rc.noise.seed, k as u32),
                ..rc.noise.clone()
            };
            let pk = (0..packets)
                .map(|i| {
                    simulate_packet_at(
                        &rc.geometry,
                        &rc.carrier,
                        &rc.sampling,
                        aoa,
                        &noise,
                        i as u32,
                        transmitter,
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let mut m =
                Manifest::from_setup(transmitter, &rc.geometry, &rc.carrier, &rc.sampling, &noise);
            m.set("true_aoa_deg", fmt_num(aoa));
            m.set("config_hash", &rc.hash);
            let name = format!("dump_aoa{}_sigma{}.csv", fmt_num(aoa), fmt_num(sigma));
            Ok((name, write_dump(&m, &pk)?))
        })
        .collect::<Result<Vec<_>>>()?;
    rendered
        .into_iter()
        .map(|(name, text)| write_file(out.join(name), &text))
        .collect()
}

pub fn load_dump(path: &Path) -> Result<Dump> {
    let file = fs::File::open(path)?;
    read_dump(std::io::BufReader::new(file), Strictness::Strict)
}

fn estimator_for(rc: &RunConfig, manifest: Option<&Manifest>) -> Result<Estimator> {
    let (geom, carrier, sampling) = match manifest {
        Some(m) => (m.geometry()?, m.carrier()?, m.sampling()?),
        None => (rc.geometry, rc.carrier, rc.sampling.clone()),
    };
    let mut e = Estimator::new(geom, carrier, sampling)
        .with_method(rc.method)
        .with_grid_step(rc.grid_step_deg)
        .with_mean_mode(rc.mean_mode);
    e.min_amplitude_deg = rc.min_amplitude_deg;
    Ok(e)
}

/// Raw and folded profiles of every packet in `dump`, in packet order.
pub fn dump_profiles(rc: &RunConfig, dump: &Dump) -> Result<(Vec<DiffProfile>, Vec<DiffProfile>)> {
    let n = dump.manifest.antenna_count()?;
    let sampling = dump.manifest.sampling()?;
    let pairs = dump
        .packets
        .par_iter()
        .map(|p| process_packet(p, &sampling, n, rc.mean_mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs.into_iter().unzip())
}

fn profile_table(rc: &RunConfig, profiles: &[DiffProfile]) -> Result<ProfileTable> {
    let mut cols: Vec<(String, Vec<f64>)> = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| (format!("s{}", i + 1), p.values.clone()))
        .collect();
    if !profiles.is_empty() {
        cols.push((
            "mean".into(),
            average_profiles(profiles, rc.mean_mode)?.values,
        ));
    }
    let mut t = ProfileTable::from_columns(cols)?;
    stamp(&mut t, rc);
    Ok(t)
}

/// Writes `<stem>_raw.csv` and `<stem>_folded.csv`, plus
/// `<stem>_normalized.csv` holding the normalized folded mean when asked.
pub fn process(
    rc: &RunConfig,
    out: &Path,
    dump_path: &Path,
    normalize: bool,
) -> Result<Vec<PathBuf>> {
    let dump = load_dump(dump_path)?;
    let (raw, folded) = dump_profiles(rc, &dump)?;
    let name = stem(dump_path);
    let mut written = vec![
        write_file(
            out.join(format!("{name}_raw.csv")),
            &profile_table(rc, &raw)?.to_csv(),
        )?,
        write_file(
            out.join(format!("{name}_folded.csv")),
            &profile_table(rc, &folded)?.to_csv(),
        )?,
    ];
    if normalize && !folded.is_empty() {
        let mean = normalize_profile(&average_profiles(&folded, rc.mean_mode)?)?;
        let mut t = ProfileTable::from_columns(vec![("mean".into(), mean.values)])?;
        stamp(&mut t, rc);
        written.push(write_file(
            out.join(format!("{name}_normalized.csv")),
            &t.to_csv(),
        )?);
    }
    Ok(written)
}

/// Estimates one angle per input. Inputs are packet dumps or folded
/// profile tables (`s*` columns; `mean` is ignored).
pub fn estimate(
    rc: &RunConfig,
    out: &Path,
    inputs: &[PathBuf],
) -> Result<(PathBuf, Vec<EstimateRecord>)> {
    let mut records = Vec::new();
    for path in inputs {
        let text = fs::read_to_string(path)?;
        let (transmitter, est) = if is_dump(&text) {
            let dump = read_dump(text.as_bytes(), Strictness::Strict)?;
            let e = estimator_for(rc, Some(&dump.manifest))?;
            let tx = dump
                .manifest
                .transmitter()
                .map(str::to_string)
                .unwrap_or_else(|| stem(path));
            (tx, e.estimate_packets(&dump.packets, rc.strategy)?)
        } else {
            let table = read_profile_table(&text)?;
            let e = estimator_for(rc, None)?;
            let profiles: Vec<DiffProfile> = table
                .columns
                .iter()
                .zip(&table.data)
                .filter(|(name, _)| name.starts_with('s'))
                .enumerate()
                .map(|(i, (_, col))| {
                    DiffProfile::new(col.clone(), ProfileKind::Folded)
                        .with_provenance(vec![i as u32])
                })
                .collect();
            (stem(path), e.estimate_profiles(&profiles, rc.strategy)?)
        };
        records.push(EstimateRecord {
            transmitter,
            estimate: est,
        });
    }
    let path = write_file(out.join("estimates.csv"), &write_estimates(&records))?;
    Ok((path, records))
}

/// Self-position from AoA estimates whose transmitter ids name beacons.
pub fn locate_from_files(
    rc: &RunConfig,
    out: &Path,
    files: &[PathBuf],
    heading_deg: f64,
) -> Result<(PathBuf, PositionEstimate)> {
    let mut bearings = BTreeMap::new();
    for f in files {
        for r in read_estimates(&fs::read_to_string(f)?)? {
            if bearings
                .insert(
                    r.transmitter.clone(),
                    bearing_from_aoa(r.estimate.angle_deg),
                )
                .is_some()
            {
                return Err(Error::Input(format!(
                    "duplicate estimate for {}",
                    r.transmitter
                )));
            }
        }
    }
    let est = locate(&rc.beacons, &bearings, heading_deg, &rc.locate)?;
    let path = write_file(
        out.join("position.csv"),
        &write_positions(std::slice::from_ref(&est)),
    )?;
    Ok((path, est))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma_deg: f64,
    pub trials: usize,
    pub mean_deviation_deg: f64,
    pub std_deviation_deg: f64,
}

/// RMS deviation of single-packet folded profiles from the model, per
/// noise level. Packet `i` of level `k` is seeded from `(seed, k, i)`.
pub fn noise_sweep(
    rc: &RunConfig,
    sigmas: &[f64],
    trials: usize,
    aoa_deg: f64,
) -> Result<(Vec<SweepRow>, Vec<DiffProfile>)> {
    if trials == 0 {
        return Err(Error::Config("trials must be at least 1".into()));
    }
    let mut rows = Vec::new();
    let mut examples = Vec::new();
    for (k, &sigma) in sigmas.iter().enumerate() {
        let noise = NoiseModel {
            sigma_deg: sigma,
            seed: derive_seed(rc.noise.seed, k as u32),
            ..rc.noise.clone()
        };
        let profiles = (0..trials as u32)
            .into_par_iter()
            .map(|i| {
                let p = simulate_packet_at(
                    &rc.geometry,
                    &rc.carrier,
                    &rc.sampling,
                    aoa_deg,
                    &noise,
                    i,
                    "sweep",
                )?;
                process_packet(&p, &rc.sampling, rc.geometry.antenna_count(), rc.mean_mode)
                    .map(|(_, f)| f)
            })
            .collect::<Result<Vec<_>>>()?;
        let devs: Vec<f64> = profiles
            .iter()
            .map(|p| profile_deviation(p, &rc.geometry, &rc.carrier, aoa_deg))
            .collect();
        let mean = devs.iter().sum::<f64>() / devs.len() as f64;
        let var = devs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / devs.len() as f64;
        rows.push(SweepRow {
            sigma_deg: sigma,
            trials,
            mean_deviation_deg: mean,
            std_deviation_deg: var.sqrt(),
        });
        examples.push(profiles.into_iter().next().expect("trials >= 1"));
    }
    Ok((rows, examples))
}

/// Writes `noise_sweep.csv` and `effect_of_noise.csv` (one example folded
/// profile per noise level, columns `e<sigma>`).
pub fn sweep_noise(
    rc: &RunConfig,
    out: &Path,
    sigmas: &[f64],
    trials: usize,
    aoa_deg: f64,
) -> Result<(Vec<PathBuf>, Vec<SweepRow>)> {
    let (rows, examples) = noise_sweep(rc, sigmas, trials, aoa_deg)?;
    let mut text = format!(
        "# config_hash={}\nsigma,trials,mean_rms_deviation,std_rms_deviation\n",
        rc.hash
    );
    for r in &rows {
        text.push_str(&format!(
            "{:.6},{},{:.6},{:.6}\n",
            r.sigma_deg, r.trials, r.mean_deviation_deg, r.std_deviation_deg
        ));
    }
    let cols = sigmas
        .iter()
        .zip(examples)
        .map(|(s, p)| (format!("e{}", fmt_num(*s)), p.values))
        .collect();
    let mut table = ProfileTable::from_columns(cols)?;
    stamp(&mut table, rc);
    let files = vec![
        write_file(out.join("noise_sweep.csv"), &text)?,
        write_file(out.join("effect_of_noise.csv"), &table.to_csv())?,
    ];
    Ok((files, rows))
}

/// Circular error of an estimate against a known angle.
pub fn angle_error(est: &AoAEstimate, truth_deg: f64) -> f64 {
    circular_diff(est.angle_deg, wrap360(truth_deg)).abs()
}
