//! Trellis coset coding over a lattice partition `Lambda_t / Lambda_m / Lambda_b`.
//!
//! Each block of `M` channel uses carries `k` selector bits, which drive a
//! finite-state machine whose transition label picks one of the
//! `[Lambda_t : Lambda_m]` cosets, and `log2 [Lambda_m : Lambda_b]` bits
//! that pick a point of `Lambda_m / Lambda_b`. The sum, dithered and reduced
//! into the Voronoi cell of `Lambda_b`, is transmitted. Decoding runs Viterbi
//! over the selector trellis, resolving parallel transitions inside each
//! branch metric.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cda::{
    gaplus_code_lattice, gaplus_ideal_generator, gaplus_order, golden_generator, AlgebraElement,
    IdealSide,
};
use crate::clps::Searcher;
use crate::error::{Error, Result};
use crate::intlin::{coset_representatives, determinant, hermite_basis};
use crate::lattice::{catalog, Lattice};
use crate::layout::to_complex;
use crate::mmse::{filters_with_regularizer, modified_observation};

/// `|det X|^2` of a `2M^2` real vector viewed as an `M x M` complex matrix.
pub fn det_sq(v: &DVector<f64>, m: usize) -> f64 {
    to_complex(v, m, m).determinant().norm_sqr()
}

/// A three-level partition `Lambda_t > Lambda_m > Lambda_b = Q Lambda_m`
/// with minimum-norm coset leaders of `Lambda_t / Lambda_m`.
#[derive(Debug, Clone)]
pub struct PartitionChain {
    top: Lattice,
    middle: Lattice,
    bottom: Lattice,
    q: u32,
    m: usize,
    coset_reps: Vec<DVector<f64>>,
}

impl PartitionChain {
    pub fn new(top: Lattice, middle: Lattice, q: u32) -> Result<Self> {
        if q == 0 {
            return Err(Error::Config("Q must be positive".into()));
        }
        let n = top.dim();
        if middle.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: middle.dim(),
            });
        }
        let m = ((n / 2) as f64).sqrt().round() as usize;
        if m == 0 || 2 * m * m != n {
            return Err(Error::Config(format!("dimension {n} is not 2 M^2")));
        }
        let k = middle.coordinates_in(&top).ok_or_else(|| {
            Error::InvalidLattice("middle lattice is not a sublattice of the top lattice".into())
        })?;
        let gens: Vec<Vec<i128>> = k.iter().map(|c| c.iter().map(|&v| v as i128).collect()).collect();
        let hnf = hermite_basis(&gens, n)
            .ok_or_else(|| Error::InvalidLattice("middle lattice is not full rank".into()))?;
        let coset_reps = coset_representatives(&hnf)
            .into_iter()
            .map(|r| {
                let z: Vec<i64> = r.iter().map(|&v| v as i64).collect();
                middle.mod_lattice(&top.point(&z))
            })
            .collect();
        let bottom = middle.scale(q as f64)?;
        Ok(PartitionChain {
            top,
            middle,
            bottom,
            q,
            m,
            coset_reps,
        })
    }

    pub fn top(&self) -> &Lattice {
        &self.top
    }

    pub fn middle(&self) -> &Lattice {
        &self.middle
    }

    pub fn bottom(&self) -> &Lattice {
        &self.bottom
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Number of transmit antennas `M`.
    pub fn antennas(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.top.dim()
    }

    /// Coset leaders `v_i`; `v_0 = 0`.
    pub fn coset_reps(&self) -> &[DVector<f64>] {
        &self.coset_reps
    }

    /// `[Lambda_t : Lambda_m]`.
    pub fn top_index(&self) -> usize {
        self.coset_reps.len()
    }

    /// `[Lambda_m : Lambda_b] = Q^n`.
    pub fn bottom_index(&self) -> u128 {
        (self.q as u128).pow(self.dim() as u32)
    }

    /// Exact `[Lambda_t : Lambda_m]` from the integer change of basis.
    pub fn exact_top_index(&self) -> u128 {
        let k = self.middle.coordinates_in(&self.top).expect("checked at construction");
        let n = self.dim();
        let rows: Vec<Vec<i128>> = (0..n).map(|i| (0..n).map(|j| k[j][i] as i128).collect()).collect();
        determinant(&rows).unsigned_abs()
    }

    /// Smallest `|det(v_i - v_j + lambda)|^2` over the points `lambda` of
    /// `Lambda_m` making the difference shorter than `radius`.
    pub fn coset_min_det(&self, i: usize, j: usize, radius: f64) -> Result<f64> {
        let t = &self.coset_reps[j] - &self.coset_reps[i];
        let pts = self.middle.searcher().enumerate_within(&t, radius, usize::MAX)?;
        Ok(pts
            .iter()
            .map(|(z, _)| self.middle.point(z) - &t)
            .filter(|v| v.norm_squared() > 1e-18)
            .map(|v| det_sq(&v, self.m))
            .fold(f64::INFINITY, f64::min))
    }
}

/// `Lambda_t = G_p Z^8`, `Lambda_m = G_p E8` (Construction A, index 16),
/// `Lambda_b = Q Lambda_m`.
pub fn build_partition_perfect(q: u32) -> Result<PartitionChain> {
    let gp = golden_generator();
    let top = Lattice::new(gp.clone())?;
    let middle = catalog("E8-constructionA")?.rotate(&gp)?;
    PartitionChain::new(top, middle, q)
}

/// Relative index required of the Golden+ partition.
pub const MAXORDER_INDEX: u128 = 16;

/// `Lambda_t` is the Golden+ code lattice `O M` (or `M O`); `Lambda_m` is
/// `beta^2 O M` (or `M O beta^2`); `Lambda_b = Q Lambda_m`.
pub fn build_partition_maxorder(beta: &AlgebraElement, q: u32, side: IdealSide) -> Result<PartitionChain> {
    let order = gaplus_order();
    let m = gaplus_ideal_generator(&order);
    let b2 = order.mul(beta, beta);
    let (top, middle) = match side {
        IdealSide::Left => (gaplus_code_lattice(), order.sandwich_lattice(&b2, &m)?),
        IdealSide::Right => (
            order.ideal_lattice(&m, IdealSide::Right)?,
            order.sandwich_lattice(&m, &b2)?,
        ),
    };
    let chain = PartitionChain::new(top, middle, q)?;
    let got = chain.exact_top_index();
    if got != MAXORDER_INDEX {
        return Err(Error::IndexMismatch {
            expected: MAXORDER_INDEX,
            got,
        });
    }
    Ok(chain)
}

/// A finite-state coset selector with `2^k` transitions per state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetSelector {
    states: usize,
    k: u32,
    next: Vec<usize>,
    label: Vec<usize>,
}

impl CosetSelector {
    /// `entries` are `(state, input, next_state, label)`; every
    /// `(state, input)` pair must appear exactly once.
    pub fn new(states: usize, k: u32, entries: &[(usize, usize, usize, usize)]) -> Result<Self> {
        if states == 0 || k > 16 {
            return Err(Error::InvalidTrellis("need at least one state and k <= 16".into()));
        }
        let width = 1usize << k;
        let mut next = vec![usize::MAX; states * width];
        let mut label = vec![0; states * width];
        for &(s, u, ns, l) in entries {
            if s >= states || u >= width || ns >= states {
                return Err(Error::InvalidTrellis(format!(
                    "entry ({s}, {u}, {ns}, {l}) is out of range"
                )));
            }
            let idx = s * width + u;
            if next[idx] != usize::MAX {
                return Err(Error::InvalidTrellis(format!("duplicate entry for state {s}, input {u}")));
            }
            next[idx] = ns;
            label[idx] = l;
        }
        if let Some(idx) = next.iter().position(|&v| v == usize::MAX) {
            return Err(Error::InvalidTrellis(format!(
                "missing entry for state {}, input {}",
                idx / width,
                idx % width
            )));
        }
        Ok(CosetSelector {
            states,
            k,
            next,
            label,
        })
    }

    /// The 16-state, 2-bit shift-register selector. The state is the last
    /// two inputs; from state `s` input `u` carries label
    /// `groups[s & 3][(u + (s >> 2)) % 4]`, so labels leaving and entering
    /// any state are the four distinct members of one group.
    pub fn shift_register(groups: [[usize; 4]; 4]) -> Self {
        let mut entries = Vec::with_capacity(64);
        for s in 0..16 {
            for u in 0..4 {
                let ns = ((s << 2) | u) & 15;
                entries.push((s, u, ns, groups[s & 3][(u + (s >> 2)) % 4]));
            }
        }
        CosetSelector::new(16, 2, &entries).expect("complete table")
    }

    /// Shift-register selector whose label groups are chosen greedily to
    /// maximize the smallest sampled `|det|` between cosets sharing a group.
    pub fn default_16state(partition: &PartitionChain) -> Result<Self> {
        if partition.top_index() != 16 {
            return Err(Error::InvalidTrellis(format!(
                "the 16-state selector needs 16 cosets, got {}",
                partition.top_index()
            )));
        }
        let radius = 1.25 * partition.middle().min_distance();
        let mut score = [[f64::INFINITY; 16]; 16];
        for i in 0..16 {
            for j in i + 1..16 {
                let d = partition.coset_min_det(i, j, radius)?;
                score[i][j] = d;
                score[j][i] = d;
            }
        }
        let mut assigned = [false; 16];
        let mut groups = [[0usize; 4]; 4];
        for group in groups.iter_mut() {
            let seed = (0..16).find(|&c| !assigned[c]).expect("16 cosets fill 4 groups");
            assigned[seed] = true;
            group[0] = seed;
            for slot in 1..4 {
                let mut best = None::<(usize, f64)>;
                for c in (0..16).filter(|&c| !assigned[c]) {
                    let s = group[..slot].iter().map(|&g| score[c][g]).fold(f64::INFINITY, f64::min);
                    if best.is_none_or(|(_, b)| s > b * (1.0 + 1e-9)) {
                        best = Some((c, s));
                    }
                }
                let (c, _) = best.expect("enough unassigned cosets");
                assigned[c] = true;
                group[slot] = c;
            }
        }
        Ok(CosetSelector::shift_register(groups))
    }

    /// One state; input `u` selects `labels[u]`.
    pub fn single_state(labels: &[usize]) -> Result<Self> {
        if !labels.len().is_power_of_two() {
            return Err(Error::InvalidTrellis("label count must be a power of two".into()));
        }
        let k = labels.len().trailing_zeros();
        let entries: Vec<_> = labels.iter().enumerate().map(|(u, &l)| (0, u, 0, l)).collect();
        CosetSelector::new(1, k, &entries)
    }

    pub fn num_states(&self) -> usize {
        self.states
    }

    /// Selector input bits per block.
    pub fn input_bits(&self) -> u32 {
        self.k
    }

    pub fn next_state(&self, state: usize, input: usize) -> usize {
        self.next[state * (1 << self.k) + input]
    }

    pub fn label(&self, state: usize, input: usize) -> usize {
        self.label[state * (1 << self.k) + input]
    }

    pub fn max_label(&self) -> usize {
        self.label.iter().copied().max().unwrap_or(0)
    }

    /// Whether the labels leaving each state, and those entering each
    /// state, are pairwise distinct.
    pub fn labels_distinct(&self) -> bool {
        let width = 1usize << self.k;
        let mut entering: Vec<Vec<usize>> = vec![Vec::new(); self.states];
        for s in 0..self.states {
            let mut out: Vec<usize> = (0..width).map(|u| self.label(s, u)).collect();
            out.sort_unstable();
            if out.windows(2).any(|w| w[0] == w[1]) {
                return false;
            }
            for u in 0..width {
                entering[self.next_state(s, u)].push(self.label(s, u));
            }
        }
        entering.iter_mut().all(|v| {
            v.sort_unstable();
            v.windows(2).all(|w| w[0] != w[1])
        })
    }

    /// For each `t`, the states from which state 0 is reachable in exactly `t` steps.
    fn reach_zero(&self, steps: usize) -> Vec<Vec<bool>> {
        let width = 1usize << self.k;
        let mut sets = vec![vec![false; self.states]];
        sets[0][0] = true;
        for t in 1..=steps {
            let prev = &sets[t - 1];
            let cur = (0..self.states)
                .map(|s| (0..width).any(|u| prev[self.next_state(s, u)]))
                .collect();
            sets.push(cur);
        }
        sets
    }

    /// Shortest tail length that returns every state to state 0.
    pub fn termination_length(&self) -> Result<usize> {
        let limit = 4 * self.states;
        let sets = self.reach_zero(limit);
        sets.iter()
            .position(|s| s.iter().all(|&b| b))
            .ok_or_else(|| Error::InvalidTrellis("selector cannot be driven back to state 0".into()))
    }

    /// Tail inputs driving `state` to 0 in `len` steps (smallest input first).
    pub fn termination_inputs(&self, mut state: usize, len: usize) -> Vec<usize> {
        let sets = self.reach_zero(len);
        (0..len)
            .map(|t| {
                let remaining = len - t - 1;
                let u = (0..1usize << self.k)
                    .find(|&u| sets[remaining][self.next_state(state, u)])
                    .expect("termination length guarantees a path");
                state = self.next_state(state, u);
                u
            })
            .collect()
    }

    /// Text table: one `state, input_bits, next_state, coset_index` line per
    /// transition, preceded by a comment header.
    pub fn to_table_string(&self) -> String {
        let width = 1usize << self.k;
        let mut out = format!("# states = {}, input bits = {}\n", self.states, self.k);
        out.push_str("# state, input_bits, next_state, coset_index\n");
        for s in 0..self.states {
            for u in 0..width {
                let bits = format!("{u:0w$b}", w = self.k.max(1) as usize);
                let _ = writeln!(out, "{s}, {bits}, {}, {}", self.next_state(s, u), self.label(s, u));
            }
        }
        out
    }

    /// Parses a label table. Input bits are written in binary, MSB first;
    /// the state count and `k` are inferred.
    pub fn parse_table(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut k: Option<u32> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(parse_err(format!("expected 4 fields, got {}", fields.len())));
            }
            let num = |s: &str| s.parse::<usize>().map_err(|_| parse_err(format!("bad integer `{s}`")));
            let bits = fields[1];
            if bits.is_empty() || !bits.chars().all(|c| c == '0' || c == '1') {
                return Err(parse_err(format!("bad input bits `{bits}`")));
            }
            let width = bits.len() as u32;
            match k {
                None => k = Some(width),
                Some(w) if w != width => {
                    return Err(parse_err("inconsistent input bit width".into()));
                }
                _ => {}
            }
            let u = usize::from_str_radix(bits, 2).map_err(|_| parse_err(format!("bad bits `{bits}`")))?;
            entries.push((num(fields[0])?, u, num(fields[2])?, num(fields[3])?));
        }
        let k = k.ok_or(Error::Parse {
            line: 0,
            msg: "empty trellis table".into(),
        })?;
        let states = entries.iter().map(|e| e.0.max(e.2)).max().unwrap_or(0) + 1;
        // a one-state table with a single 0-width input is written with one bit
        let k = if states == 1 && entries.len() == 1 { 0 } else { k };
        CosetSelector::new(states, k, &entries)
    }

    pub fn read_table(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_table(&std::fs::read_to_string(path)?)
    }

    pub fn write_table(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_table_string())?;
        Ok(())
    }
}

/// Branch metric used by the Viterbi decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BranchMetric {
    /// Minimum over every transmitted point of the coset.
    Exhaustive,
    /// MMSE-GDFE front end followed by a closest-point search in `Lambda_m`.
    #[default]
    Lattice,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcmDecision {
    /// Decoded information bits (tail excluded).
    pub bits: Vec<u8>,
    /// Coset label per block, tail included.
    pub labels: Vec<usize>,
    pub metric: f64,
}

/// Per-label best metric and the digits of the surviving parallel transition.
pub type BlockMetrics = Vec<(f64, Vec<u32>)>;

#[derive(Debug, Clone)]
pub struct TcmScheme {
    partition: PartitionChain,
    selector: CosetSelector,
    blocks: usize,
    terminate: bool,
    tail: usize,
    digit_bits: u32,
    moment_samples: usize,
    moment: OnceLock<(f64, f64)>,
    coset_points: OnceLock<Vec<DVector<f64>>>,
}

impl TcmScheme {
    /// `blocks` information-carrying blocks of `M` channel uses each. `Q`
    /// must be a power of two.
    pub fn new(partition: PartitionChain, selector: CosetSelector, blocks: usize, terminate: bool) -> Result<Self> {
        if blocks == 0 {
            return Err(Error::Config("a packet needs at least one block".into()));
        }
        let q = partition.q();
        if !q.is_power_of_two() {
            return Err(Error::Config(format!("Q = {q} is not a power of two")));
        }
        if selector.max_label() >= partition.top_index() {
            return Err(Error::InvalidTrellis(format!(
                "label {} exceeds the {} available cosets",
                selector.max_label(),
                partition.top_index()
            )));
        }
        let tail = if terminate { selector.termination_length()? } else { 0 };
        Ok(TcmScheme {
            digit_bits: q.trailing_zeros(),
            partition,
            selector,
            blocks,
            terminate,
            tail,
            moment_samples: crate::slast::DEFAULT_MOMENT_SAMPLES,
            moment: OnceLock::new(),
            coset_points: OnceLock::new(),
        })
    }

    /// Blocks needed for `t` channel uses.
    pub fn blocks_for(partition: &PartitionChain, t: usize) -> Result<usize> {
        let m = partition.antennas();
        if t == 0 || !t.is_multiple_of(m) {
            return Err(Error::Config(format!("T = {t} is not a positive multiple of M = {m}")));
        }
        Ok(t / m)
    }

    pub fn with_moment_samples(mut self, samples: usize) -> Self {
        self.moment_samples = samples.max(1);
        self.moment = OnceLock::new();
        self
    }

    pub fn partition(&self) -> &PartitionChain {
        &self.partition
    }

    pub fn selector(&self) -> &CosetSelector {
        &self.selector
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn is_terminated(&self) -> bool {
        self.terminate
    }

    pub fn tail_blocks(&self) -> usize {
        self.tail
    }

    pub fn total_blocks(&self) -> usize {
        self.blocks + self.tail
    }

    /// Bits choosing a point of `Lambda_m / Lambda_b`.
    pub fn coset_bits(&self) -> usize {
        self.partition.dim() * self.digit_bits as usize
    }

    pub fn bits_per_block(&self) -> usize {
        self.selector.input_bits() as usize + self.coset_bits()
    }

    pub fn info_bits(&self) -> usize {
        self.blocks * self.bits_per_block()
    }

    /// Information bits per channel use, excluding the tail.
    pub fn rate(&self) -> f64 {
        self.bits_per_block() as f64 / self.partition.antennas() as f64
    }

    /// Channel uses carrying information.
    pub fn channel_uses(&self) -> usize {
        self.blocks * self.partition.antennas()
    }

    /// Extra channel uses spent on the tail.
    pub fn tail_channel_uses(&self) -> usize {
        self.tail * self.partition.antennas()
    }

    fn coset_points(&self) -> &[DVector<f64>] {
        self.coset_points.get_or_init(|| {
            let n = self.partition.dim();
            let q = self.partition.q();
            (0..self.partition.bottom_index())
                .map(|k| {
                    let d = crate::slast::Message::from_index(k, n, q);
                    let z: Vec<i64> = d.digits.iter().map(|&v| v as i64).collect();
                    self.partition.middle().point(&z)
                })
                .collect()
        })
    }

    /// `x = (G_m d + v_i + u) mod Lambda_b`.
    pub fn block_point(&self, label: usize, digits: &[u32], dither: &DVector<f64>) -> DVector<f64> {
        let z: Vec<i64> = digits.iter().map(|&v| v as i64).collect();
        let c = self.partition.middle().point(&z);
        self.partition
            .bottom()
            .mod_lattice(&(c + &self.partition.coset_reps()[label] + dither))
    }

    fn digits_from_bits(&self, bits: &[u8]) -> Vec<u32> {
        bits.chunks(self.digit_bits.max(1) as usize)
            .take(self.partition.dim())
            .map(|c| c.iter().fold(0u32, |acc, &b| (acc << 1) | b as u32))
            .collect()
    }

    fn bits_from_digits(&self, digits: &[u32], out: &mut Vec<u8>) {
        let w = self.digit_bits;
        for &d in digits {
            for j in (0..w).rev() {
                out.push(((d >> j) & 1) as u8);
            }
        }
    }

    fn check_dithers(&self, dithers: &[DVector<f64>]) -> Result<()> {
        if dithers.len() != self.total_blocks() {
            return Err(Error::LengthMismatch {
                expected: self.total_blocks(),
                got: dithers.len(),
            });
        }
        if let Some(d) = dithers.iter().find(|d| d.len() != self.partition.dim()) {
            return Err(Error::DimensionMismatch {
                expected: self.partition.dim(),
                got: d.len(),
            });
        }
        Ok(())
    }

    /// Encodes a packet of [`Self::info_bits`] bits into one point per block
    /// (tail included). Returns the points and the coset label of each block.
    pub fn encode(&self, bits: &[u8], dithers: &[DVector<f64>]) -> Result<(Vec<DVector<f64>>, Vec<usize>)> {
        if bits.len() != self.info_bits() {
            return Err(Error::LengthMismatch {
                expected: self.info_bits(),
                got: bits.len(),
            });
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidMessage("bits must be 0 or 1".into()));
        }
        self.check_dithers(dithers)?;
        let k = self.selector.input_bits() as usize;
        let mut state = 0;
        let mut points = Vec::with_capacity(self.total_blocks());
        let mut labels = Vec::with_capacity(self.total_blocks());
        for (b, chunk) in bits.chunks(self.bits_per_block()).enumerate() {
            let u = chunk[..k].iter().fold(0usize, |acc, &v| (acc << 1) | v as usize);
            let digits = self.digits_from_bits(&chunk[k..]);
            let label = self.selector.label(state, u);
            state = self.selector.next_state(state, u);
            points.push(self.block_point(label, &digits, &dithers[b]));
            labels.push(label);
        }
        let zeros = vec![0u32; self.partition.dim()];
        for (t, u) in self.selector.termination_inputs(state, self.tail).into_iter().enumerate() {
            let label = self.selector.label(state, u);
            state = self.selector.next_state(state, u);
            points.push(self.block_point(label, &zeros, &dithers[self.blocks + t]));
            labels.push(label);
        }
        Ok((points, labels))
    }

    pub fn draw_dithers<R: Rng>(&self, rng: &mut R, uniform: bool) -> Vec<DVector<f64>> {
        let n = self.partition.dim();
        let side = 100.0
            * self.partition.q() as f64
            * self
                .partition
                .middle()
                .generator()
                .column_iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
        (0..self.total_blocks())
            .map(|_| {
                if uniform {
                    DVector::from_fn(n, |_, _| rng.random::<f64>() * side)
                } else {
                    DVector::zeros(n)
                }
            })
            .collect()
    }

    /// `E|x|^2` over the Voronoi cell of `Lambda_b`, with standard error.
    pub fn second_moment(&self) -> (f64, f64) {
        *self.moment.get_or_init(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(0x7c3);
            let (m, se) = self
                .partition
                .middle()
                .voronoi_second_moment(self.moment_samples, &mut rng);
            let q2 = (self.partition.q() as f64).powi(2);
            (m * q2, se * q2)
        })
    }

    /// Scale with `E|alpha X_k|_F^2 = M snr` per block.
    pub fn power_scale(&self, snr: f64) -> Result<f64> {
        if !snr.is_finite() || snr <= 0.0 {
            return Err(Error::NonFinite("snr"));
        }
        Ok((self.partition.antennas() as f64 * snr / self.second_moment().0).sqrt())
    }

    pub fn mmse_regularizer(&self) -> f64 {
        0.5 * self.partition.dim() as f64 / self.second_moment().0
    }

    /// Exhaustive branch metric for one label: the smallest
    /// `|y - H x|^2` over every point the encoder can send in that coset.
    pub fn branch_metric_exhaustive(
        &self,
        h_eff: &DMatrix<f64>,
        y: &DVector<f64>,
        label: usize,
        dither: &DVector<f64>,
        cap: u128,
    ) -> Result<(f64, Vec<u32>)> {
        let size = self.partition.bottom_index();
        if size > cap {
            return Err(Error::CodebookTooLarge { size, cap });
        }
        let shift = &self.partition.coset_reps()[label] + dither;
        let mut best = (f64::INFINITY, 0u128);
        for (k, c) in self.coset_points().iter().enumerate() {
            let x = self.partition.bottom().mod_lattice(&(c + &shift));
            let d = (y - h_eff * x).norm_squared();
            if d < best.0 {
                best = (d, k as u128);
            }
        }
        let digits = crate::slast::Message::from_index(best.1, self.partition.dim(), self.partition.q()).digits;
        Ok((best.0, digits))
    }

    /// Lattice branch metric `min_z |F y - B (v_i + u) - B G_m z|^2`, with the
    /// surviving parallel transition given as `z mod Q`.
    pub fn branch_metric_lattice(
        &self,
        fp: &crate::mmse::FilterPair,
        searcher: &Searcher,
        y: &DVector<f64>,
        label: usize,
        dither: &DVector<f64>,
    ) -> Result<(f64, Vec<u32>)> {
        let offset = &self.partition.coset_reps()[label] + dither;
        let target = modified_observation(fp, y, &offset);
        let found = searcher.closest_point(&target, None)?;
        let q = self.partition.q() as i64;
        Ok((found.metric, found.z.iter().map(|&v| v.rem_euclid(q) as u32).collect()))
    }

    /// Branch metrics of every label for every block.
    pub fn block_metrics(
        &self,
        h_eff: &DMatrix<f64>,
        ys: &[DVector<f64>],
        dithers: &[DVector<f64>],
        mode: BranchMetric,
    ) -> Result<Vec<BlockMetrics>> {
        self.check_dithers(dithers)?;
        if ys.len() != self.total_blocks() {
            return Err(Error::LengthMismatch {
                expected: self.total_blocks(),
                got: ys.len(),
            });
        }
        let labels = self.partition.top_index();
        match mode {
            BranchMetric::Exhaustive => ys
                .iter()
                .zip(dithers)
                .map(|(y, u)| {
                    (0..labels)
                        .map(|i| self.branch_metric_exhaustive(h_eff, y, i, u, 1 << 20))
                        .collect()
                })
                .collect(),
            BranchMetric::Lattice => {
                let fp = filters_with_regularizer(h_eff, self.mmse_regularizer())?;
                let searcher = Searcher::new(&(&fp.backward * self.partition.middle().generator()))?;
                ys.iter()
                    .zip(dithers)
                    .map(|(y, u)| {
                        (0..labels)
                            .map(|i| self.branch_metric_lattice(&fp, &searcher, y, i, u))
                            .collect()
                    })
                    .collect()
            }
        }
    }

    /// Viterbi decoding of one packet observed through a fixed effective
    /// channel `h_eff` (power scale included).
    pub fn decode(
        &self,
        h_eff: &DMatrix<f64>,
        ys: &[DVector<f64>],
        dithers: &[DVector<f64>],
        mode: BranchMetric,
    ) -> Result<TcmDecision> {
        let metrics = self.block_metrics(h_eff, ys, dithers, mode)?;
        Ok(self.viterbi(&metrics))
    }

    /// Viterbi recursion over precomputed branch metrics.
    pub fn viterbi(&self, metrics: &[BlockMetrics]) -> TcmDecision {
        let sel = &self.selector;
        let states = sel.num_states();
        let width = 1usize << sel.input_bits();
        let mut cost = vec![f64::INFINITY; states];
        cost[0] = 0.0;
        // survivor[t][state] = (previous state, input)
        let mut survivor = vec![vec![(usize::MAX, 0usize); states]; metrics.len()];
        for (t, bm) in metrics.iter().enumerate() {
            let mut next = vec![f64::INFINITY; states];
            for s in 0..states {
                if !cost[s].is_finite() {
                    continue;
                }
                for u in 0..width {
                    let ns = sel.next_state(s, u);
                    let c = cost[s] + bm[sel.label(s, u)].0;
                    // strict comparison keeps the smallest (state, input) on ties
                    if c < next[ns] {
                        next[ns] = c;
                        survivor[t][ns] = (s, u);
                    }
                }
            }
            cost = next;
        }
        let end = if self.terminate {
            0
        } else {
            (0..states)
                .min_by(|&a, &b| cost[a].total_cmp(&cost[b]).then(a.cmp(&b)))
                .expect("at least one state")
        };
        let metric = cost[end];
        let mut path = vec![(0usize, 0usize); metrics.len()];
        let mut s = end;
        for t in (0..metrics.len()).rev() {
            let (prev, u) = survivor[t][s];
            path[t] = (prev, u);
            s = prev;
        }
        let k = sel.input_bits();
        let mut bits = Vec::with_capacity(self.info_bits());
        let mut labels = Vec::with_capacity(metrics.len());
        for (t, &(prev, u)) in path.iter().enumerate() {
            let label = sel.label(prev, u);
            labels.push(label);
            if t < self.blocks {
                for j in (0..k).rev() {
                    bits.push(((u >> j) & 1) as u8);
                }
                self.bits_from_digits(&metrics[t][label].1, &mut bits);
            }
        }
        TcmDecision { bits, labels, metric }
    }
}

/// Writes bits packed MSB first, zero-padded to a whole byte.
pub fn write_bits(path: impl AsRef<Path>, bits: &[u8]) -> Result<()> {
    std::fs::write(path, pack_bits(bits))?;
    Ok(())
}

/// Reads `n` bits written by [`write_bits`].
pub fn read_bits(path: impl AsRef<Path>, n: usize) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path)?;
    if bytes.len() != n.div_ceil(8) {
        return Err(Error::LengthMismatch {
            expected: n.div_ceil(8),
            got: bytes.len(),
        });
    }
    Ok(unpack_bits(&bytes, n))
}

pub fn pack_bits(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b & 1) << (7 - i))))
        .collect()
}

pub fn unpack_bits(bytes: &[u8], n: usize) -> Vec<u8> {
    (0..n).map(|i| (bytes[i / 8] >> (7 - i % 8)) & 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cda::gaplus_reference_beta;
    use crate::layout::real_channel;
    use num_complex::Complex64;

    fn perfect_scheme(blocks: usize, terminate: bool) -> TcmScheme {
        let p = build_partition_perfect(2).unwrap();
        let sel = CosetSelector::default_16state(&p).unwrap();
        TcmScheme::new(p, sel, blocks, terminate).unwrap().with_moment_samples(5_000)
    }

    fn random_bits(rng: &mut ChaCha8Rng, n: usize) -> Vec<u8> {
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    #[test]
    fn perfect_partition_indices() {
        let p = build_partition_perfect(2).unwrap();
        assert_eq!(p.top_index(), 16);
        assert_eq!(p.exact_top_index(), 16);
        assert_eq!(p.bottom_index(), 256);
        assert!(p.middle().is_sublattice_of(p.top()));
        assert!(p.bottom().is_sublattice_of(p.middle()));
        let vt = p.top().fundamental_volume();
        let vm = p.middle().fundamental_volume();
        let vb = p.bottom().fundamental_volume();
        assert!((vm / vt - 16.0).abs() < 1e-6);
        assert!((vb / vm - 256.0).abs() < 1e-6);
        assert!(p.coset_reps()[0].amax() == 0.0);
        for i in 0..16 {
            for j in i + 1..16 {
                let d = &p.coset_reps()[i] - &p.coset_reps()[j];
                assert!(p.middle().coordinates(&d).is_none());
            }
        }
    }

    #[test]
    fn maxorder_partition() {
        let beta = gaplus_reference_beta();
        for side in [IdealSide::Left, IdealSide::Right] {
            let p = build_partition_maxorder(&beta, 2, side).unwrap();
            assert_eq!(p.exact_top_index(), 16);
            assert!(p.middle().is_sublattice_of(p.top()));
        }
        let one = gaplus_order().identity();
        assert_eq!(
            build_partition_maxorder(&one, 2, IdealSide::Left).unwrap_err(),
            Error::IndexMismatch { expected: 16, got: 1 }
        );
    }

    #[test]
    fn default_selector_shape() {
        let p = build_partition_perfect(2).unwrap();
        let sel = CosetSelector::default_16state(&p).unwrap();
        assert_eq!(sel.num_states(), 16);
        assert_eq!(sel.input_bits(), 2);
        assert!(sel.labels_distinct());
        assert_eq!(sel.label(0, 0), 0);
        assert_eq!(sel.termination_length().unwrap(), 2);
        let mut seen: Vec<usize> = (0..16).flat_map(|s| (0..4).map(move |u| (s, u))).map(|(s, u)| sel.label(s, u)).collect();
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn table_round_trip() {
        let p = build_partition_perfect(2).unwrap();
        let sel = CosetSelector::default_16state(&p).unwrap();
        let text = sel.to_table_string();
        assert!(text.lines().any(|l| l.starts_with("0, 00, 0, 0")));
        assert_eq!(CosetSelector::parse_table(&text).unwrap(), sel);
        let single = CosetSelector::single_state(&[0, 5, 9, 12]).unwrap();
        assert_eq!(CosetSelector::parse_table(&single.to_table_string()).unwrap(), single);
    }

    #[test]
    fn malformed_tables() {
        assert!(CosetSelector::parse_table("").is_err());
        assert!(CosetSelector::parse_table("0, 0, 0").is_err());
        assert!(CosetSelector::parse_table("0, 2, 0, 0").is_err());
        assert!(CosetSelector::parse_table("0, 0, 0, 0\n0, 0, 0, 1\n").is_err());
        assert!(CosetSelector::parse_table("0, 0, 1, 0\n0, 1, 0, 1\n").is_err());
        assert!(CosetSelector::parse_table("0, 0, 0, 0\n0, 10, 0, 1\n").is_err());
    }

    #[test]
    fn packet_accounting() {
        let p = build_partition_perfect(2).unwrap();
        let blocks = TcmScheme::blocks_for(&p, 260).unwrap();
        let sel = CosetSelector::default_16state(&p).unwrap();
        let s = TcmScheme::new(p, sel, blocks, true).unwrap();
        assert_eq!(s.rate(), 5.0);
        assert_eq!(s.info_bits(), 1300);
        assert_eq!(s.tail_blocks(), 2);
        assert_eq!(s.tail_channel_uses(), 4);
        assert!(TcmScheme::blocks_for(s.partition(), 259).is_err());
    }

    #[test]
    fn zero_packet_is_zero() {
        let s = perfect_scheme(5, true);
        let dithers = s.draw_dithers(&mut ChaCha8Rng::seed_from_u64(0), false);
        let (pts, labels) = s.encode(&vec![0; s.info_bits()], &dithers).unwrap();
        assert_eq!(pts.len(), 7);
        assert!(pts.iter().all(|x| x.amax() == 0.0));
        assert!(labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn encoder_inverse_map() {
        let s = perfect_scheme(6, true);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let dithers = s.draw_dithers(&mut rng, true);
        let bits = random_bits(&mut rng, s.info_bits());
        let (pts, labels) = s.encode(&bits, &dithers).unwrap();
        let p = s.partition();
        for (k, x) in pts.iter().enumerate() {
            let r = x - &dithers[k];
            // the coset of Lambda_m is recovered
            let found = (0..16)
                .filter(|&i| p.middle().coordinates(&(&r - &p.coset_reps()[i])).is_some())
                .collect::<Vec<_>>();
            assert_eq!(found, vec![labels[k]]);
        }
    }

    #[test]
    fn noiseless_loopback_both_metrics() {
        let s = perfect_scheme(4, true);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let alpha = s.power_scale(1e3).unwrap();
        let h = DMatrix::from_fn(2, 2, |i, j| Complex64::new(if i == j { 1.0 } else { 0.4 }, 0.1 * (i + j) as f64));
        let h_eff = real_channel(&h, 2) * alpha;
        for _ in 0..3 {
            let dithers = s.draw_dithers(&mut rng, true);
            let bits = random_bits(&mut rng, s.info_bits());
            let (pts, labels) = s.encode(&bits, &dithers).unwrap();
            let ys: Vec<_> = pts.iter().map(|x| &h_eff * x).collect();
            for mode in [BranchMetric::Lattice, BranchMetric::Exhaustive] {
                let d = s.decode(&h_eff, &ys, &dithers, mode).unwrap();
                assert_eq!(d.bits, bits);
                assert_eq!(d.labels, labels);
                if mode == BranchMetric::Exhaustive {
                    assert!(d.metric < 1e-6);
                }
            }
        }
    }

    #[test]
    fn single_state_equals_blockwise_decisions() {
        let p = build_partition_perfect(2).unwrap();
        let sel = CosetSelector::single_state(&[0, 1, 2, 3]).unwrap();
        let s = TcmScheme::new(p, sel, 3, true).unwrap().with_moment_samples(5_000);
        assert_eq!(s.tail_blocks(), 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let alpha = s.power_scale(10.0).unwrap();
        let h = DMatrix::from_fn(2, 2, |_, _| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        let h_eff = real_channel(&h, 2) * alpha;
        let dithers = s.draw_dithers(&mut rng, true);
        let bits = random_bits(&mut rng, s.info_bits());
        let (pts, _) = s.encode(&bits, &dithers).unwrap();
        let ys: Vec<_> = pts.iter().map(|x| &h_eff * x + DVector::from_fn(8, |_, _| rng.random_range(-0.5..0.5))).collect();
        let m = s.block_metrics(&h_eff, &ys, &dithers, BranchMetric::Lattice).unwrap();
        let d = s.viterbi(&m);
        for (k, bm) in m.iter().enumerate() {
            let best = (0..4).min_by(|&a, &b| bm[a].0.total_cmp(&bm[b].0)).unwrap();
            assert_eq!(d.labels[k], best);
        }
    }

    #[test]
    fn encode_validation() {
        let s = perfect_scheme(2, false);
        let d = s.draw_dithers(&mut ChaCha8Rng::seed_from_u64(0), false);
        assert!(s.encode(&[0; 3], &d).is_err());
        assert!(s.encode(&vec![2; s.info_bits()], &d).is_err());
        assert!(s.encode(&vec![0; s.info_bits()], &d[..1]).is_err());
    }

    #[test]
    fn bit_packing() {
        let bits = vec![1, 0, 1, 1, 0, 0, 0, 0, 1, 1];
        let packed = pack_bits(&bits);
        assert_eq!(packed, vec![0b1011_0000, 0b1100_0000]);
        assert_eq!(unpack_bits(&packed, 10), bits);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pkt.bin");
        write_bits(&path, &bits).unwrap();
        assert_eq!(read_bits(&path, 10).unwrap(), bits);
        assert!(read_bits(&path, 30).is_err());
    }
}
