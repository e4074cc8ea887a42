//! Literal transcriptions of the published unwrap and phase-difference
//! loops, kept independent of the library so they can serve as oracles.

#![allow(dead_code, clippy::needless_range_loop)]

/// Floored modulus, as in MATLAB's `mod`.
pub fn floored_mod(x: f64, m: f64) -> f64 {
    x - (x / m).floor() * m
}

/// In-place unwrap: for every slot `i` and sample `j >= 1`, if
/// `sample[i][j] < sample[i][j-1] - 180` then add 360 to `sample[i][k]` for
/// all `k >= j`.
pub fn literal_unwrap(samples: &mut [Vec<f64>]) {
    let nr_sample_groups = samples.len();
    for i in 0..nr_sample_groups {
        let nr_samples = samples[i].len();
        for j in 1..nr_samples {
            if samples[i][j] < samples[i][j - 1] - 180.0 {
                let mut k = j;
                while k < nr_samples {
                    samples[i][k] += 360.0;
                    k += 1;
                }
            }
        }
    }
}

/// `diffs[i] = mod(mean(sample[i-1] - sample[i]) + 180, 360) - 180` for
/// `i = 1 .. nrSampleGroups - 1`; `diffs[0]` is left at zero.
pub fn literal_diffs(samples: &[Vec<f64>]) -> Vec<f64> {
    let nr_sample_groups = samples.len();
    let mut diffs = vec![0.0; nr_sample_groups];
    let mut i = 1;
    while i < nr_sample_groups {
        let nr_samples = samples[i].len();
        let mut d = vec![0.0; nr_samples];
        for j in 0..nr_samples {
            d[j] = samples[i - 1][j] - samples[i][j];
        }
        let mean = d.iter().sum::<f64>() / nr_samples as f64;
        diffs[i] = floored_mod(mean + 180.0, 360.0) - 180.0;
        i += 1;
    }
    diffs
}
