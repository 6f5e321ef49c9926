//! Nested-lattice space-time block codes with Voronoi shaping.
//!
//! The coding lattice is `Lambda_c = P (I_L (x) G_p) G_Lambda Z^n` where `P`
//! interleaves `L` square `M x M` blocks into one `M x LM` codeword, and the
//! shaping lattice is `Lambda_s = Q Lambda_c`. A message of `n = 2MT` digits
//! in `{0, ..., Q-1}` is sent as `x = (G_c d + u0) mod Lambda_s`.

use std::fmt::Write as _;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::layout::{block_diag, stack_permutation};
use crate::mmse::{filters_with_regularizer, modified_observation};

/// Monte Carlo draws used for the shaping-cell second moment.
pub const DEFAULT_MOMENT_SAMPLES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Message {
    pub digits: Vec<u32>,
}

impl Message {
    pub fn new(digits: Vec<u32>) -> Self {
        Message { digits }
    }

    pub fn zeros(n: usize) -> Self {
        Message { digits: vec![0; n] }
    }

    /// The `k`-th message in mixed radix `q`, first digit fastest.
    pub fn from_index(mut k: u128, n: usize, q: u32) -> Self {
        let digits = (0..n)
            .map(|_| {
                let d = (k % q as u128) as u32;
                k /= q as u128;
                d
            })
            .collect();
        Message { digits }
    }

    pub fn random<R: Rng>(rng: &mut R, n: usize, q: u32) -> Self {
        Message {
            digits: (0..n).map(|_| rng.random_range(0..q)).collect(),
        }
    }

    /// Number of positions where two messages differ.
    pub fn symbol_errors(&self, other: &Message) -> usize {
        self.digits
            .iter()
            .zip(&other.digits)
            .filter(|(a, b)| a != b)
            .count()
    }
}

/// How the encoder translate `u0` is chosen.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum DitherPolicy {
    #[default]
    Zero,
    Given(DVector<f64>),
    /// Uniform over `[0, S)^n` with `S = 100 Q max_j |g_j|`.
    Uniform,
}

#[derive(Debug, Clone)]
pub struct SlastCode {
    m: usize,
    t: usize,
    q: u32,
    coding: Lattice,
    shaping: Lattice,
    moment_samples: usize,
    moment_seed: u64,
    moment: OnceLock<(f64, f64)>,
}

impl SlastCode {
    /// Builds the code from a rotation `G_p` of size `2M^2`, a base lattice of
    /// dimension `2M^2 L`, the nesting ratio `Q` and the stacking depth `L`.
    pub fn build(gp: &DMatrix<f64>, base: &Lattice, q: u32, l: usize) -> Result<Self> {
        if q == 0 || l == 0 {
            return Err(Error::Config("Q and L must be positive".into()));
        }
        if !gp.is_square() {
            return Err(Error::DimensionMismatch {
                expected: gp.nrows(),
                got: gp.ncols(),
            });
        }
        let d = gp.nrows();
        let m = ((d / 2) as f64).sqrt().round() as usize;
        if m == 0 || 2 * m * m != d {
            return Err(Error::Config(format!("rotation size {d} is not 2 M^2")));
        }
        if base.dim() != d * l {
            return Err(Error::DimensionMismatch {
                expected: d * l,
                got: base.dim(),
            });
        }
        let gc = stack_permutation(m, l) * block_diag(gp, l) * base.generator();
        let coding = Lattice::new(gc)?;
        let shaping = coding.scale(q as f64)?;
        Ok(SlastCode {
            m,
            t: m * l,
            q,
            coding,
            shaping,
            moment_samples: DEFAULT_MOMENT_SAMPLES,
            moment_seed: 0x5eed,
            moment: OnceLock::new(),
        })
    }

    /// Overrides the Monte Carlo budget for the shaping second moment.
    pub fn with_moment_samples(mut self, samples: usize, seed: u64) -> Self {
        self.moment_samples = samples.max(1);
        self.moment_seed = seed;
        self.moment = OnceLock::new();
        self
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Real dimension `2MT`.
    pub fn dim(&self) -> usize {
        self.coding.dim()
    }

    pub fn coding_lattice(&self) -> &Lattice {
        &self.coding
    }

    pub fn shaping_lattice(&self) -> &Lattice {
        &self.shaping
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        self.coding.generator()
    }

    /// Bits per channel use: `2M log2 Q`.
    pub fn rate(&self) -> f64 {
        2.0 * self.m as f64 * (self.q as f64).log2()
    }

    /// `[Lambda_c : Lambda_s] = Q^n`, if it fits in `u128`.
    pub fn codebook_size(&self) -> Option<u128> {
        (self.q as u128).checked_pow(self.dim() as u32)
    }

    pub fn validate(&self, msg: &Message) -> Result<()> {
        if msg.digits.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                got: msg.digits.len(),
            });
        }
        if let Some(d) = msg.digits.iter().find(|&&d| d >= self.q) {
            return Err(Error::InvalidMessage(format!("digit {d} is not below Q = {}", self.q)));
        }
        Ok(())
    }

    /// Coset representative `G_c d`.
    pub fn lattice_point(&self, msg: &Message) -> DVector<f64> {
        let z: Vec<i64> = msg.digits.iter().map(|&d| d as i64).collect();
        self.coding.point(&z)
    }

    /// Unshaped origin-centred map `G_c (d - (Q-1)/2)`.
    pub fn linear_encode(&self, msg: &Message) -> Result<DVector<f64>> {
        self.validate(msg)?;
        let c = (self.q as f64 - 1.0) / 2.0;
        let d = DVector::from_iterator(self.dim(), msg.digits.iter().map(|&v| v as f64 - c));
        Ok(self.generator() * d)
    }

    /// `x = (G_c d + u0) mod Lambda_s`.
    pub fn encode(&self, msg: &Message, u0: &DVector<f64>) -> Result<DVector<f64>> {
        self.validate(msg)?;
        self.check_len(u0)?;
        Ok(self.shaping.mod_lattice(&(self.lattice_point(msg) + u0)))
    }

    fn check_len(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Side of the dither hypercube.
    pub fn dither_side(&self) -> f64 {
        let g = self.generator();
        let max_col = g.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
        100.0 * self.q as f64 * max_col
    }

    pub fn draw_dither<R: Rng>(&self, policy: &DitherPolicy, rng: &mut R) -> Result<DVector<f64>> {
        match policy {
            DitherPolicy::Zero => Ok(DVector::zeros(self.dim())),
            DitherPolicy::Given(u) => {
                self.check_len(u)?;
                Ok(u.clone())
            }
            DitherPolicy::Uniform => {
                let s = self.dither_side();
                Ok(DVector::from_fn(self.dim(), |_, _| rng.random::<f64>() * s))
            }
        }
    }

    /// `E|x|^2` for `x` uniform on the Voronoi cell of `Lambda_s`, with its
    /// Monte Carlo standard error.
    pub fn second_moment(&self) -> (f64, f64) {
        *self.moment.get_or_init(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(self.moment_seed);
            let (m, se) = self.coding.voronoi_second_moment(self.moment_samples, &mut rng);
            let q2 = (self.q as f64).powi(2);
            (m * q2, se * q2)
        })
    }

    /// Scale `alpha` with `E|alpha X|_F^2 = T snr`.
    pub fn power_scale(&self, snr: f64) -> Result<f64> {
        if !snr.is_finite() || snr <= 0.0 {
            return Err(Error::NonFinite("snr"));
        }
        Ok((self.t as f64 * snr / self.second_moment().0).sqrt())
    }

    /// MMSE regularizer for an effective channel that already includes
    /// `alpha`, with unit-variance complex noise.
    pub fn mmse_regularizer(&self) -> f64 {
        0.5 * self.dim() as f64 / self.second_moment().0
    }

    /// Residues mod `Q` of the integer coordinates of a `Lambda_c` point.
    pub fn digits_of(&self, z: &[i64]) -> Message {
        let q = self.q as i64;
        Message::new(z.iter().map(|&v| v.rem_euclid(q) as u32).collect())
    }

    /// MMSE-GDFE lattice decoding. `h_eff` is the real effective channel
    /// (power scale included) acting on the `2MT` layout.
    pub fn decode_lattice(&self, h_eff: &DMatrix<f64>, y: &DVector<f64>, u0: &DVector<f64>) -> Result<Message> {
        self.check_len(u0)?;
        if h_eff.ncols() != self.dim() || h_eff.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: h_eff.ncols(),
            });
        }
        let fp = filters_with_regularizer(h_eff, self.mmse_regularizer())?;
        let target = modified_observation(&fp, y, u0);
        let basis = &fp.backward * self.generator();
        let found = crate::clps::Searcher::new(&basis)?.closest_point(&target, None)?;
        Ok(self.digits_of(&found.z))
    }

    /// Exhaustive ML decoding over all `Q^n` codewords; returns the message
    /// and its metric `|y - H x|^2`.
    pub fn decode_ml(
        &self,
        h_eff: &DMatrix<f64>,
        y: &DVector<f64>,
        u0: &DVector<f64>,
        cap: u128,
    ) -> Result<(Message, f64)> {
        let book = self.codebook(u0, cap)?;
        self.decode_ml_with(&book, h_eff, y)
    }

    /// ML decoding against a precomputed codebook.
    pub fn decode_ml_with(
        &self,
        book: &[(Message, DVector<f64>)],
        h_eff: &DMatrix<f64>,
        y: &DVector<f64>,
    ) -> Result<(Message, f64)> {
        if h_eff.ncols() != self.dim() || h_eff.nrows() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: h_eff.ncols(),
            });
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, (_, x)) in book.iter().enumerate() {
            let d = (y - h_eff * x).norm_squared();
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((i, d));
            }
        }
        let (i, d) = best.ok_or(Error::EmptySample)?;
        Ok((book[i].0.clone(), d))
    }

    /// Every message with its transmitted point, in index order.
    pub fn codebook(&self, u0: &DVector<f64>, cap: u128) -> Result<Vec<(Message, DVector<f64>)>> {
        self.check_len(u0)?;
        let size = self.codebook_size().unwrap_or(u128::MAX);
        if size > cap {
            return Err(Error::CodebookTooLarge { size, cap });
        }
        (0..size)
            .map(|k| {
                let msg = Message::from_index(k, self.dim(), self.q);
                let x = self.encode(&msg, u0)?;
                Ok((msg, x))
            })
            .collect()
    }

    /// CSV dump with header `msg_digits, x_coords, energy`.
    pub fn codebook_csv(&self, u0: &DVector<f64>, cap: u128) -> Result<String> {
        let mut out = String::from("msg_digits, x_coords, energy\n");
        for (msg, x) in self.codebook(u0, cap)? {
            let d: Vec<String> = msg.digits.iter().map(u32::to_string).collect();
            let xs: Vec<String> = x.iter().map(|v| format!("{v:.12}")).collect();
            let _ = writeln!(out, "{}, {}, {:.12}", d.join(" "), xs.join(" "), x.norm_squared());
        }
        Ok(out)
    }
}
