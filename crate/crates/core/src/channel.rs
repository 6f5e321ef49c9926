//! Rayleigh block-fading MIMO channel and the Monte Carlo harness.
//!
//! `Y = H X + W` with `H` (`N x M`) and `W` (`N x T`) having i.i.d. `CN(0, 1)`
//! entries; `H` is constant over a codeword. Codewords are scaled so that
//! `E|X|_F^2 = T snr`. Trial `i` at SNR index `j` draws from a ChaCha stream
//! selected by `(j, i)`, so results do not depend on scheduling.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::cda::{gaplus_reference_beta, golden_generator, IdealSide};
use crate::error::{Error, Result};
use crate::lattice::{catalog, read_lattice, Lattice};
use crate::layout::{interleaved_channel, real_channel};
use crate::slast::{DitherPolicy, Message, SlastCode};
use crate::tcm::{build_partition_maxorder, build_partition_perfect, BranchMetric, CosetSelector, TcmScheme};

/// One `CN(0, 1)` sample.
pub fn complex_normal<R: Rng>(rng: &mut R) -> Complex64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// `N x M` complex channel.
    pub complex: DMatrix<Complex64>,
    /// Real `2NT x 2MT` channel acting on `[Re(vec X); Im(vec X)]`.
    pub real: DMatrix<f64>,
    pub t: usize,
}

impl ChannelRealization {
    pub fn from_complex(h: DMatrix<Complex64>, t: usize) -> Self {
        let real = real_channel(&h, t);
        ChannelRealization { complex: h, real, t }
    }

    /// The per-channel-use form `I_T (x) [[Re H, -Im H], [Im H, Re H]]`.
    pub fn interleaved(&self) -> DMatrix<f64> {
        interleaved_channel(&self.complex, self.t)
    }
}

/// Draws an `N x M` Rayleigh channel held for `t` channel uses.
pub fn realize_channel<R: Rng>(m: usize, n: usize, t: usize, rng: &mut R) -> ChannelRealization {
    let h = DMatrix::from_fn(n, m, |_, _| complex_normal(rng));
    ChannelRealization::from_complex(h, t)
}

/// Real noise for `N x T` observations: `2NT` entries of variance 1/2.
pub fn draw_noise<R: Rng>(n: usize, t: usize, rng: &mut R) -> DVector<f64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DVector::from_fn(2 * n * t, |_, _| rng.sample::<f64, _>(StandardNormal) * s)
}

/// `log2 det(I + (snr / M) H H^H)`.
pub fn mutual_information(h: &DMatrix<Complex64>, snr: f64) -> f64 {
    let (n, m) = h.shape();
    let a = DMatrix::identity(n, n) + h * h.adjoint() * Complex64::new(snr / m as f64, 0.0);
    a.determinant().re.log2()
}

/// Monte Carlo estimate of `P(log2 det(I + snr/M H H^H) < rate)` with its
/// standard error.
pub fn outage_probability<R: Rng>(m: usize, n: usize, rate: f64, snr: f64, trials: usize, rng: &mut R) -> Result<(f64, f64)> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let mut hits = 0usize;
    for _ in 0..trials {
        let h = DMatrix::from_fn(n, m, |_, _| complex_normal(rng));
        if mutual_information(&h, snr) < rate {
            hits += 1;
        }
    }
    let p = hits as f64 / trials as f64;
    Ok((p, binomial_stderr(p, trials)))
}

/// Outage over an SNR grid with common channel draws, so the estimate is
/// nonincreasing in SNR.
pub fn outage_curve(m: usize, n: usize, rate: f64, snrs: &[f64], trials: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if trials == 0 {
        return Err(Error::Config("trials must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0usize; snrs.len()];
    for _ in 0..trials {
        let h = DMatrix::from_fn(n, m, |_, _| complex_normal(&mut rng));
        for (k, &snr) in snrs.iter().enumerate() {
            if mutual_information(&h, snr) < rate {
                hits[k] += 1;
            }
        }
    }
    Ok(hits
        .into_iter()
        .map(|h| {
            let p = h as f64 / trials as f64;
            (p, binomial_stderr(p, trials))
        })
        .collect())
}

pub fn binomial_stderr(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// The RNG for one trial.
pub fn trial_rng(seed: u64, snr_index: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((snr_index as u64) << 40) | trial as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CodeKind {
    Slast,
    Tcm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decoder {
    /// Exhaustive ML (block codes) or exhaustive branch metrics (TCM).
    Ml,
    MmseGdfeLattice,
}

impl FromStr for Decoder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ml" | "exhaustive" => Ok(Decoder::Ml),
            "mmse-gdfe-lattice" | "lattice" | "mmse" => Ok(Decoder::MmseGdfeLattice),
            other => Err(Error::Config(format!("unknown decoder `{other}`"))),
        }
    }
}

/// Experiment description, read from `key = value` lines.
///
/// Keys: `code` (`slast` | `tcm`), `lattice` (catalog name or generator
/// file, block codes), `rotation` (`golden` | `identity`), `q`, `stack`,
/// `partition` (`perfect` | `maxorder`, TCM), `ideal_side` (`left` |
/// `right`), `trellis` (`default` or a label-table file), `terminate`,
/// `m`, `n`, `t`, `snr_db` (comma-separated), `trials`, `seed`, `decoder`
/// (`ml` | `mmse-gdfe-lattice`), `dither` (`on` | `off`), `moment_samples`,
/// `ml_cap`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub code: CodeKind,
    pub lattice: String,
    pub rotation: String,
    pub q: u32,
    pub stack: usize,
    pub partition: String,
    pub ideal_side: String,
    pub trellis: String,
    pub terminate: bool,
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub decoder: Decoder,
    pub dither: bool,
    pub moment_samples: usize,
    pub ml_cap: u128,
    /// Directory that relative file paths in the config resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            code: CodeKind::Slast,
            lattice: "Zn8".into(),
            rotation: "golden".into(),
            q: 2,
            stack: 1,
            partition: "perfect".into(),
            ideal_side: "left".into(),
            trellis: "default".into(),
            terminate: true,
            m: 2,
            n: 2,
            t: 2,
            snr_db: vec![8.0, 10.0, 12.0, 14.0],
            trials: 1000,
            seed: 1,
            decoder: Decoder::Ml,
            dither: true,
            moment_samples: crate::slast::DEFAULT_MOMENT_SAMPLES,
            ml_cap: 1 << 16,
            base_dir: None,
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("`{key}` expects on/off, got `{v}`"))),
    }
}

fn parse_num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("`{key}` expects a number, got `{v}`")))
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(Error::Parse {
                line: i + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            let key = key.trim().to_ascii_lowercase();
            let v = value.trim();
            if seen.insert(key.clone(), i + 1).is_some() {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            match key.as_str() {
                "code" => {
                    cfg.code = match v.to_ascii_lowercase().as_str() {
                        "slast" | "block" => CodeKind::Slast,
                        "tcm" => CodeKind::Tcm,
                        _ => return Err(Error::Config(format!("unknown code `{v}`"))),
                    }
                }
                "lattice" => cfg.lattice = v.to_string(),
                "rotation" => cfg.rotation = v.to_ascii_lowercase(),
                "q" => cfg.q = parse_num(&key, v)?,
                "stack" | "l" => cfg.stack = parse_num(&key, v)?,
                "partition" => cfg.partition = v.to_ascii_lowercase(),
                "ideal_side" => cfg.ideal_side = v.to_ascii_lowercase(),
                "trellis" => cfg.trellis = v.to_string(),
                "terminate" => cfg.terminate = parse_bool(&key, v)?,
                "m" => cfg.m = parse_num(&key, v)?,
                "n" => cfg.n = parse_num(&key, v)?,
                "t" => cfg.t = parse_num(&key, v)?,
                "snr_db" => {
                    cfg.snr_db = v
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| parse_num(&key, s))
                        .collect::<Result<_>>()?
                }
                "trials" => cfg.trials = parse_num(&key, v)?,
                "seed" => cfg.seed = parse_num(&key, v)?,
                "decoder" => cfg.decoder = v.parse()?,
                "dither" => cfg.dither = parse_bool(&key, v)?,
                "moment_samples" => cfg.moment_samples = parse_num(&key, v)?,
                "ml_cap" => cfg.ml_cap = parse_num(&key, v)?,
                _ => {
                    return Err(Error::Parse {
                        line: i + 1,
                        msg: format!("unknown key `{key}`"),
                    })
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::parse(&std::fs::read_to_string(path)?)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.snr_db.is_empty() {
            return Err(Error::Config("snr_db grid is empty".into()));
        }
        if self.snr_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("snr_db values must be finite".into()));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.q == 0 || self.m == 0 || self.n == 0 || self.t == 0 || self.stack == 0 {
            return Err(Error::Config("q, m, n, t and stack must be positive".into()));
        }
        if self.moment_samples == 0 {
            return Err(Error::Config("moment_samples must be positive".into()));
        }
        match self.code {
            CodeKind::Slast => {
                if self.t != self.m * self.stack {
                    return Err(Error::Config(format!(
                        "t = {} must equal m * stack = {}",
                        self.t,
                        self.m * self.stack
                    )));
                }
            }
            CodeKind::Tcm => {
                if self.m != 2 {
                    return Err(Error::Config("the TCM partitions are defined for m = 2".into()));
                }
                if !self.t.is_multiple_of(self.m) {
                    return Err(Error::Config("t must be a multiple of m".into()));
                }
            }
        }
        Ok(())
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let path = PathBuf::from(p);
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path,
        }
    }

    fn base_lattice(&self) -> Result<Lattice> {
        catalog(&self.lattice).or_else(|e| {
            let path = self.resolve(&self.lattice);
            if path.exists() {
                read_lattice(path)
            } else {
                Err(e)
            }
        })
    }

    fn rotation_matrix(&self) -> Result<DMatrix<f64>> {
        let d = 2 * self.m * self.m;
        match self.rotation.as_str() {
            "golden" if self.m == 2 => Ok(golden_generator()),
            "golden" => Err(Error::Config("the golden rotation needs m = 2".into())),
            "identity" | "none" => Ok(DMatrix::identity(d, d)),
            other => Err(Error::Config(format!("unknown rotation `{other}`"))),
        }
    }

    /// Builds the block code described by the configuration.
    pub fn build_slast(&self) -> Result<SlastCode> {
        let code = SlastCode::build(&self.rotation_matrix()?, &self.base_lattice()?, self.q, self.stack)?;
        Ok(code.with_moment_samples(self.moment_samples, self.seed ^ 0x5eed))
    }

    /// Builds the trellis scheme described by the configuration.
    pub fn build_tcm(&self) -> Result<TcmScheme> {
        let side = match self.ideal_side.as_str() {
            "left" => IdealSide::Left,
            "right" => IdealSide::Right,
            other => return Err(Error::Config(format!("unknown ideal side `{other}`"))),
        };
        let partition = match self.partition.as_str() {
            "perfect" | "golden-gosset" => build_partition_perfect(self.q)?,
            "maxorder" | "golden+" => build_partition_maxorder(&gaplus_reference_beta(), self.q, side)?,
            other => return Err(Error::Config(format!("unknown partition `{other}`"))),
        };
        let selector = match self.trellis.as_str() {
            "default" => CosetSelector::default_16state(&partition)?,
            path => CosetSelector::read_table(self.resolve(path))?,
        };
        let blocks = TcmScheme::blocks_for(&partition, self.t)?;
        Ok(TcmScheme::new(partition, selector, blocks, self.terminate)?.with_moment_samples(self.moment_samples))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPoint {
    pub snr_db: f64,
    pub block_errors: usize,
    pub symbol_errors: usize,
    pub symbols: usize,
    pub trials: usize,
}

impl SimPoint {
    pub fn bler(&self) -> f64 {
        self.block_errors as f64 / self.trials as f64
    }

    pub fn ser(&self) -> f64 {
        self.symbol_errors as f64 / self.symbols.max(1) as f64
    }

    pub fn stderr(&self) -> f64 {
        binomial_stderr(self.bler(), self.trials)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub config: SimConfig,
    pub points: Vec<SimPoint>,
    pub rate_bpcu: f64,
    pub wall_time_s: f64,
}

impl SimResult {
    /// CSV with header `snr_db, bler, ser, trials, stderr`. Depends only on
    /// the configuration and seed.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("snr_db, bler, ser, trials, stderr\n");
        for p in &self.points {
            let _ = writeln!(
                out,
                "{}, {:.6e}, {:.6e}, {}, {:.6e}",
                p.snr_db,
                p.bler(),
                p.ser(),
                p.trials,
                p.stderr()
            );
        }
        out
    }

    pub fn metadata_json(&self) -> String {
        let meta = serde_json::json!({
            "config": self.config,
            "seed": self.config.seed,
            "versions": {
                "stlattice": env!("CARGO_PKG_VERSION"),
            },
            "rate_bpcu": self.rate_bpcu,
            "wall_time_s": self.wall_time_s,
            "points": self.points,
        });
        serde_json::to_string_pretty(&meta).expect("serializable metadata")
    }

    /// Writes the CSV to `path` and the metadata to `path` with a `.json`
    /// extension.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<PathBuf> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv())?;
        let meta = path.with_extension("json");
        std::fs::write(&meta, self.metadata_json())?;
        Ok(meta)
    }
}

/// Outcome of one block-code transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct SlastTrial {
    pub sent: Message,
    pub ml: Option<Message>,
    pub lattice: Option<Message>,
}

/// Which decoders a trial runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decoders {
    pub ml: bool,
    pub lattice: bool,
}

/// One block-code trial: draws `H`, the message, the dither and the noise
/// (in that order) and decodes with the requested decoders.
pub fn slast_trial<R: Rng>(
    code: &SlastCode,
    n_rx: usize,
    snr: f64,
    dither: bool,
    decoders: Decoders,
    ml_cap: u128,
    rng: &mut R,
) -> Result<SlastTrial> {
    let alpha = code.power_scale(snr)?;
    let ch = realize_channel(code.m(), n_rx, code.t(), rng);
    let sent = Message::random(rng, code.dim(), code.q());
    let policy = if dither { DitherPolicy::Uniform } else { DitherPolicy::Zero };
    let u0 = code.draw_dither(&policy, rng)?;
    let x = code.encode(&sent, &u0)?;
    let h_eff = &ch.real * alpha;
    let y = &h_eff * x + draw_noise(n_rx, code.t(), rng);
    let ml = if decoders.ml {
        Some(code.decode_ml(&h_eff, &y, &u0, ml_cap)?.0)
    } else {
        None
    };
    let lattice = if decoders.lattice {
        Some(code.decode_lattice(&h_eff, &y, &u0)?)
    } else {
        None
    };
    Ok(SlastTrial { sent, ml, lattice })
}

/// Outcome of one trellis-coded packet.
#[derive(Debug, Clone, PartialEq)]
pub struct TcmTrial {
    pub sent: Vec<u8>,
    pub decoded: Vec<u8>,
}

impl TcmTrial {
    /// Information blocks with at least one bit error.
    pub fn block_errors(&self, bits_per_block: usize) -> usize {
        self.sent
            .chunks(bits_per_block)
            .zip(self.decoded.chunks(bits_per_block))
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// One packet: draws `H`, bits, dithers and per-block noise in that order.
pub fn tcm_trial<R: Rng>(
    scheme: &TcmScheme,
    n_rx: usize,
    snr: f64,
    dither: bool,
    metric: BranchMetric,
    rng: &mut R,
) -> Result<TcmTrial> {
    let m = scheme.partition().antennas();
    let alpha = scheme.power_scale(snr)?;
    let ch = realize_channel(m, n_rx, m, rng);
    let sent: Vec<u8> = (0..scheme.info_bits()).map(|_| rng.random_range(0..2u8)).collect();
    let dithers = scheme.draw_dithers(rng, dither);
    let (points, _) = scheme.encode(&sent, &dithers)?;
    let h_eff = &ch.real * alpha;
    let ys: Vec<DVector<f64>> = points.iter().map(|x| &h_eff * x + draw_noise(n_rx, m, rng)).collect();
    let decoded = scheme.decode(&h_eff, &ys, &dithers, metric)?.bits;
    Ok(TcmTrial { sent, decoded })
}

/// Runs the configured experiment. Trials run in parallel; counts are
/// reduced by integer sums, so the result is independent of scheduling.
pub fn run_montecarlo(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let start = std::time::Instant::now();
    let (points, rate) = match cfg.code {
        CodeKind::Slast => {
            let code = cfg.build_slast()?;
            if cfg.n == 0 {
                return Err(Error::Config("n must be positive".into()));
            }
            if cfg.decoder == Decoder::Ml {
                let size = code.codebook_size().unwrap_or(u128::MAX);
                if size > cfg.ml_cap {
                    return Err(Error::CodebookTooLarge { size, cap: cfg.ml_cap });
                }
            }
            let decoders = Decoders {
                ml: cfg.decoder == Decoder::Ml,
                lattice: cfg.decoder == Decoder::MmseGdfeLattice,
            };
            // force the lazily computed moment before going parallel
            code.second_moment();
            let pts = cfg
                .snr_db
                .iter()
                .enumerate()
                .map(|(j, &db)| {
                    let snr = db_to_linear(db);
                    let counts = (0..cfg.trials)
                        .into_par_iter()
                        .map(|i| {
                            let mut rng = trial_rng(cfg.seed, j, i);
                            let tr = slast_trial(&code, cfg.n, snr, cfg.dither, decoders, cfg.ml_cap, &mut rng)?;
                            let got = tr.ml.or(tr.lattice).expect("one decoder runs");
                            let se = got.symbol_errors(&tr.sent);
                            Ok::<_, Error>(((se > 0) as usize, se))
                        })
                        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
                    Ok(SimPoint {
                        snr_db: db,
                        block_errors: counts.0,
                        symbol_errors: counts.1,
                        symbols: cfg.trials * code.dim(),
                        trials: cfg.trials,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (pts, code.rate())
        }
        CodeKind::Tcm => {
            let scheme = cfg.build_tcm()?;
            scheme.second_moment();
            let metric = match cfg.decoder {
                Decoder::Ml => BranchMetric::Exhaustive,
                Decoder::MmseGdfeLattice => BranchMetric::Lattice,
            };
            let bpb = scheme.bits_per_block();
            let pts = cfg
                .snr_db
                .iter()
                .enumerate()
                .map(|(j, &db)| {
                    let snr = db_to_linear(db);
                    let counts = (0..cfg.trials)
                        .into_par_iter()
                        .map(|i| {
                            let mut rng = trial_rng(cfg.seed, j, i);
                            let tr = tcm_trial(&scheme, cfg.n, snr, cfg.dither, metric, &mut rng)?;
                            let be = tr.block_errors(bpb);
                            Ok::<_, Error>(((be > 0) as usize, be))
                        })
                        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
                    Ok(SimPoint {
                        snr_db: db,
                        block_errors: counts.0,
                        symbol_errors: counts.1,
                        symbols: cfg.trials * scheme.blocks(),
                        trials: cfg.trials,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            (pts, scheme.rate())
        }
    };
    Ok(SimResult {
        config: cfg.clone(),
        points,
        rate_bpcu: rate,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
