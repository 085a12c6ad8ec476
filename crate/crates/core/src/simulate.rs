//! Seeded simulation and parametric bootstrap ensembles.
//!
//! Every simulation consumes a ChaCha12 stream derived from a master seed
//! and a stream index (see [`crate::rng`]). Ensemble member `i` uses stream
//! `i`, so members are independent and the batch is reproducible no matter
//! how the work is scheduled. Within one series the chain is drawn first
//! (one uniform per step), then the emissions in time order (one uniform for
//! the component choice plus one for the amount on wet days).

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{EmissionMode, ModelFile, ModelMeta, ModelParams, SeasonTable, SeriesData};
use crate::rng::stream_rng;

/// A parametric-bootstrap ensemble.
#[derive(Debug, Clone)]
pub struct SimulationBatch {
    pub series: Vec<SeriesData>,
    pub seed: u64,
    pub params_used: ModelParams,
}

fn sample_categorical(weights: impl Iterator<Item = f64>, u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        acc += w;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Simulates a Markov chain of length `n` with initial distribution `pi`.
pub fn simulate_chain(
    q: &Array2<f64>,
    pi: &[f64],
    n: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    let k_n = q.nrows();
    if q.ncols() != k_n || pi.len() != k_n || k_n == 0 {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{}, pi has length {}",
            q.nrows(),
            q.ncols(),
            pi.len()
        )));
    }
    let pi_sum: f64 = pi.iter().sum();
    if (pi_sum - 1.0).abs() > 1e-8 || pi.iter().any(|&v| v < 0.0) {
        return Err(Error::InvalidInput("initial distribution is not a distribution".into()));
    }
    for k in 0..k_n {
        let row_sum: f64 = q.row(k).sum();
        if (row_sum - 1.0).abs() > 1e-8 || q.row(k).iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput(format!(
                "transition row {} is not a distribution",
                k + 1
            )));
        }
    }
    let mut path = Vec::with_capacity(n);
    if n == 0 {
        return Ok(path);
    }
    let mut state = sample_categorical(pi.iter().copied(), rng.gen::<f64>());
    path.push(state);
    for _ in 1..n {
        state = sample_categorical(q.row(state).iter().copied(), rng.gen::<f64>());
        path.push(state);
    }
    Ok(path)
}

fn draw_emission(
    params: &ModelParams,
    season: &SeasonTable,
    state: usize,
    day: usize,
    rng: &mut impl Rng,
) -> f64 {
    let m = sample_categorical(params.p.row(state).iter().copied(), rng.gen::<f64>());
    if m == 0 {
        return 0.0;
    }
    let s = season.scale(state, day);
    let rate = params.lambda[[state, m - 1]] / s;
    // u in (0, 1]; -ln(u)/rate is Exp(rate)
    let u = 1.0 - rng.gen::<f64>();
    let y = -u.ln() / rate;
    match params.hyper.mode {
        EmissionMode::Continuous => y,
        // floor of the log transform keeps the value exactly on the grid
        EmissionMode::Discretized { resolution } => (y / resolution).floor() * resolution,
    }
}

fn simulate_with_rng(
    params: &ModelParams,
    n: usize,
    rng: &mut impl Rng,
    station: String,
) -> Result<(SeriesData, Vec<usize>)> {
    let violations = crate::model::validate_params(params, None);
    if !violations.is_empty() {
        return Err(Error::InvalidParams(violations));
    }
    let pi = params.stationary()?;
    let states = simulate_chain(&params.q, &pi, n, rng)?;
    let season = SeasonTable::new(params);
    let period = params.hyper.t;
    let mut values = Vec::with_capacity(n);
    for (t, &state) in states.iter().enumerate() {
        let day = t % period + 1;
        values.push(draw_emission(params, &season, state, day, rng));
    }
    Ok((SeriesData::cyclic(values, period, station)?, states))
}

/// Simulates one series of length `n`; the day-of-year cycles `1..=T`
/// starting at day 1, and the chain starts from the stationary distribution
/// of the fitted transition matrix (recomputed, never stored).
pub fn simulate_series(params: &ModelParams, n: usize, seed: u64) -> Result<SeriesData> {
    simulate_series_with_states(params, n, seed).map(|(s, _)| s)
}

/// Like [`simulate_series`], also returning the hidden state path (0-based).
pub fn simulate_series_with_states(
    params: &ModelParams,
    n: usize,
    seed: u64,
) -> Result<(SeriesData, Vec<usize>)> {
    let mut rng = stream_rng(seed, 0);
    simulate_with_rng(params, n, &mut rng, "sim0000".into())
}

/// `count` independent series; member `i` is reproducible from
/// `(master_seed, i)` alone, so members may be generated concurrently.
pub fn bootstrap_ensemble(
    params: &ModelParams,
    n: usize,
    count: usize,
    master_seed: u64,
) -> Result<SimulationBatch> {
    if count == 0 {
        return Err(Error::InvalidInput("ensemble needs at least one member".into()));
    }
    let series: Result<Vec<SeriesData>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(master_seed, i as u64);
            simulate_with_rng(params, n, &mut rng, format!("sim{i:04}")).map(|(series, _)| series)
        })
        .collect();
    Ok(SimulationBatch { series: series?, seed: master_seed, params_used: params.clone() })
}

const BATCH_MAGIC: &[u8; 4] = b"SHMM";
const BATCH_VERSION: u32 = 1;

/// Writes an ensemble to the binary batch container (see FORMATS.md):
/// magic `SHMM`, version, count, series length, period, master seed, the
/// generating model as embedded JSON, then all values as little-endian f64,
/// member by member.
pub fn write_batch(path: &Path, batch: &SimulationBatch) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    let n = batch.series.first().map_or(0, |s| s.n());
    if batch.series.iter().any(|s| s.n() != n) {
        return Err(Error::InvalidInput("batch members have unequal lengths".into()));
    }
    w.write_all(BATCH_MAGIC)?;
    w.write_all(&BATCH_VERSION.to_le_bytes())?;
    w.write_all(&(batch.series.len() as u32).to_le_bytes())?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(batch.params_used.hyper.t as u32).to_le_bytes())?;
    w.write_all(&batch.seed.to_le_bytes())?;
    let model_json =
        serde_json::to_vec(&ModelFile::from_params(&batch.params_used, ModelMeta::default()))?;
    w.write_all(&(model_json.len() as u32).to_le_bytes())?;
    w.write_all(&model_json)?;
    for series in &batch.series {
        for &v in &series.values {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_batch(path: &Path) -> Result<SimulationBatch> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BATCH_MAGIC {
        return Err(Error::InvalidInput("not a batch file (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != BATCH_VERSION {
        return Err(Error::InvalidInput(format!("unsupported batch version {version}")));
    }
    let count = read_u32(&mut r)? as usize;
    let n = read_u64(&mut r)? as usize;
    let period = read_u32(&mut r)? as usize;
    let seed = read_u64(&mut r)?;
    let json_len = read_u32(&mut r)? as usize;
    let mut json = vec![0u8; json_len];
    r.read_exact(&mut json)?;
    let file: ModelFile = serde_json::from_slice(&json)?;
    let (params, _) = file.into_params()?;
    if params.hyper.t != period {
        return Err(Error::InvalidInput("batch period disagrees with embedded model".into()));
    }
    let mut series = Vec::with_capacity(count);
    let mut buf = vec![0u8; n * 8];
    for i in 0..count {
        r.read_exact(&mut buf)?;
        let values: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        series.push(SeriesData::cyclic(values, period, format!("sim{i:04}"))?);
    }
    Ok(SimulationBatch { series, seed, params_used: params })
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HyperParams;
    use crate::oracle;
    use ndarray::array;

    fn dry_state() -> ModelParams {
        let hyper = HyperParams::new(1, 2, 0, 365, EmissionMode::Continuous).unwrap();
        ModelParams::new(
            hyper,
            array![[1.0]],
            array![[1.0, 0.0]],
            array![[1.0]],
            Array2::zeros((1, 0)),
        )
        .unwrap()
    }

    #[test]
    fn identity_chain_never_leaves_initial_state() {
        let q = array![[1.0, 0.0], [0.0, 1.0]];
        let mut rng = stream_rng(1, 0);
        let path = simulate_chain(&q, &[1.0, 0.0], 50, &mut rng).unwrap();
        assert!(path.iter().all(|&s| s == 0));
    }

    #[test]
    fn chain_frequencies_approach_transition_probabilities() {
        let q = array![[0.5, 0.5], [0.5, 0.5]];
        let mut rng = stream_rng(2, 0);
        let path = simulate_chain(&q, &[0.5, 0.5], 1_000_000, &mut rng).unwrap();
        let mut counts = [[0usize; 2]; 2];
        for w in path.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        for i in 0..2 {
            let total = (counts[i][0] + counts[i][1]) as f64;
            for j in 0..2 {
                let freq = counts[i][j] as f64 / total;
                assert!((freq - 0.5).abs() < 0.005, "({i},{j}): {freq}");
            }
        }
    }

    #[test]
    fn chain_is_deterministic_given_seed() {
        let q = array![[0.7, 0.3], [0.2, 0.8]];
        let a = simulate_chain(&q, &[0.5, 0.5], 100, &mut stream_rng(3, 0)).unwrap();
        let b = simulate_chain(&q, &[0.5, 0.5], 100, &mut stream_rng(3, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chain_rejects_bad_distributions() {
        let q = array![[0.7, 0.2], [0.2, 0.8]];
        assert!(simulate_chain(&q, &[0.5, 0.5], 5, &mut stream_rng(0, 0)).is_err());
        let q = array![[0.7, 0.3], [0.2, 0.8]];
        assert!(simulate_chain(&q, &[0.5, 0.6], 5, &mut stream_rng(0, 0)).is_err());
    }

    #[test]
    fn pure_dry_state_gives_all_zero_series() {
        let series = simulate_series(&dry_state(), 200, 1).unwrap();
        assert!(series.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn exponential_sample_mean_approaches_one() {
        let hyper = HyperParams::new(1, 2, 0, 365, EmissionMode::Continuous).unwrap();
        let params = ModelParams::new(
            hyper,
            array![[1.0]],
            array![[0.0, 1.0]],
            array![[1.0]],
            Array2::zeros((1, 0)),
        )
        .unwrap();
        let series = simulate_series(&params, 1_000_000, 4).unwrap();
        let mean = series.values.iter().sum::<f64>() / series.n() as f64;
        assert!((mean - 1.0).abs() < 0.01, "mean = {mean}");
    }

    #[test]
    fn discretized_values_stay_on_grid() {
        let mut rng = stream_rng(5, 0);
        let params = oracle::random_params(
            &mut rng,
            2,
            2,
            1,
            12,
            EmissionMode::discretized_default(),
            false,
        );
        let series = simulate_series(&params, 5000, 6).unwrap();
        for &v in &series.values {
            let j = (v / 0.1).round();
            assert!((v - j * 0.1).abs() < 1e-9, "off-grid value {v}");
        }
    }

    #[test]
    fn ensemble_member_zero_equals_plain_simulation() {
        let mut rng = stream_rng(7, 0);
        let params = oracle::random_params(&mut rng, 2, 2, 1, 12, EmissionMode::Continuous, false);
        let batch = bootstrap_ensemble(&params, 100, 1, 42).unwrap();
        let single = simulate_series(&params, 100, 42).unwrap();
        assert_eq!(batch.series[0].values, single.values);
    }

    #[test]
    fn ensembles_are_bit_reproducible() {
        let mut rng = stream_rng(8, 0);
        let params = oracle::random_params(
            &mut rng,
            2,
            3,
            1,
            12,
            EmissionMode::discretized_default(),
            false,
        );
        let a = bootstrap_ensemble(&params, 50, 8, 9).unwrap();
        let b = bootstrap_ensemble(&params, 50, 8, 9).unwrap();
        for (x, y) in a.series.iter().zip(&b.series) {
            assert_eq!(x.values, y.values);
        }
    }

    #[test]
    fn simulated_transition_frequencies_match_q() {
        let hyper = HyperParams::new(2, 2, 0, 365, EmissionMode::Continuous).unwrap();
        let params = ModelParams::new(
            hyper,
            array![[0.8, 0.2], [0.35, 0.65]],
            array![[0.5, 0.5], [0.1, 0.9]],
            array![[1.0], [0.4]],
            Array2::zeros((2, 0)),
        )
        .unwrap();
        let (_, states) = simulate_series_with_states(&params, 1_000_000, 10).unwrap();
        let mut counts = [[0usize; 2]; 2];
        for w in states.windows(2) {
            counts[w[0]][w[1]] += 1;
        }
        for i in 0..2 {
            let total = (counts[i][0] + counts[i][1]) as f64;
            for j in 0..2 {
                let freq = counts[i][j] as f64 / total;
                assert!((freq - params.q[[i, j]]).abs() < 0.01, "({i},{j}): {freq}");
            }
        }
    }

    #[test]
    fn per_state_dry_frequency_matches_day_average() {
        let mut rng = stream_rng(9, 0);
        let params = oracle::random_params(
            &mut rng,
            2,
            2,
            1,
            365,
            EmissionMode::discretized_default(),
            true,
        );
        let (series, states) = simulate_series_with_states(&params, 1_000_000, 11).unwrap();
        let season = SeasonTable::new(&params);
        for k in 0..2 {
            // model day-averaged probability of a zero observation in state k
            let mut expect = 0.0;
            for day in 1..=365usize {
                let mut p0 = params.p[[k, 0]];
                let x = 0.1 * params.lambda[[k, 0]] / season.scale(k, day);
                p0 += params.p[[k, 1]] * (1.0 - (-x).exp());
                expect += p0 / 365.0;
            }
            let (mut dry, mut tot) = (0usize, 0usize);
            for (t, &s) in states.iter().enumerate() {
                if s == k {
                    tot += 1;
                    if series.values[t] == 0.0 {
                        dry += 1;
                    }
                }
            }
            let freq = dry as f64 / tot as f64;
            assert!((freq - expect).abs() < 0.01, "state {k}: {freq} vs {expect}");
        }
    }

    #[test]
    fn batch_file_round_trip() {
        let mut rng = stream_rng(10, 0);
        let params = oracle::random_params(
            &mut rng,
            2,
            2,
            1,
            12,
            EmissionMode::discretized_default(),
            false,
        );
        let batch = bootstrap_ensemble(&params, 30, 3, 77).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("batch.shmm");
        write_batch(&path, &batch).unwrap();
        let back = read_batch(&path).unwrap();
        assert_eq!(back.seed, 77);
        assert_eq!(back.series.len(), 3);
        for (a, b) in batch.series.iter().zip(&back.series) {
            assert_eq!(a.values, b.values);
            assert_eq!(a.day_of_year, b.day_of_year);
        }
        assert_eq!(back.params_used, batch.params_used);
    }
}
