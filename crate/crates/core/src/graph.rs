//! Longest path on the (K, C)-approximation graph.
//!
//! Partition `j` of the graph holds one node per history of the last
//! `min(j, K-1)` steps `lambda_{i+1} - lambda_i`, encoded in mixed radix with
//! the most recent step in the highest digit, so the predecessors of a node
//! are contiguous and neighbouring nodes share their recent history. The edge from partition `j-1`
//! into a node of partition `j` carries up to `K` steps and weighs
//! `sum_{g=1..} w_{j,j-g} <D_j, S_{lambda_j - lambda_{j-g}}(D_{j-g})>`.
//! Summed along a path this is half the off-diagonal part of `tau_K`.
//!
//! The graph is never materialized: nodes are relaxed partition by partition
//! and only the chosen predecessor digit is kept per node for backtracking.

use crate::error::{OrkaError, Result};
use crate::kernel::KernelWeights;
use crate::objective::CorrelationBand;
use crate::par::{self, Exec};
use crate::shift::{Shift, ShiftVector};

/// Enumeration order of the per-step moves; on exact ties the move that
/// comes first wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MoveOrder {
    /// `-C, -C+1, ..., C` per component (lexicographic in 2D).
    #[default]
    SmallestFirst,
    /// `0, -1, 1, -2, 2, ...` per component.
    ZeroFirst,
}

/// All steps with every component in `[-C, C]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MoveSet {
    dims: usize,
    lipschitz: u32,
    order: MoveOrder,
    moves: Vec<Shift>,
}

impl MoveSet {
    pub fn new(dims: usize, lipschitz: u32, order: MoveOrder) -> Result<Self> {
        if dims != 1 && dims != 2 {
            return Err(OrkaError::InvalidParameter(format!(
                "dims must be 1 or 2, got {dims}"
            )));
        }
        let c = i64::from(lipschitz);
        let axis: Vec<i64> = match order {
            MoveOrder::SmallestFirst => (-c..=c).collect(),
            MoveOrder::ZeroFirst => std::iter::once(0)
                .chain((1..=c).flat_map(|v| [-v, v]))
                .collect(),
        };
        let moves: Vec<Shift> = if dims == 1 {
            axis.iter().map(|&a| [a, 0]).collect()
        } else {
            axis.iter()
                .flat_map(|&a| axis.iter().map(move |&b| [a, b]))
                .collect()
        };
        if moves.len() > usize::from(u16::MAX) {
            return Err(OrkaError::InvalidParameter(format!(
                "{} moves per step exceed the supported maximum",
                moves.len()
            )));
        }
        Ok(MoveSet {
            dims,
            lipschitz,
            order,
            moves,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn lipschitz(&self) -> u32 {
        self.lipschitz
    }

    pub fn order(&self) -> MoveOrder {
        self.order
    }

    pub fn len(&self) -> usize {
        self.moves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moves.is_empty()
    }

    pub fn moves(&self) -> &[Shift] {
        &self.moves
    }
}

pub const DEFAULT_NODE_BUDGET: u64 = 1 << 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphConfig {
    /// Maximum number of nodes in one partition.
    pub node_budget: u64,
    pub exec: Exec,
}

impl Default for GraphConfig {
    fn default() -> Self {
        GraphConfig {
            node_budget: DEFAULT_NODE_BUDGET,
            exec: Exec::default(),
        }
    }
}

/// Result of a longest-path solve.
#[derive(Debug, Clone, PartialEq)]
pub struct LongestPath {
    pub shifts: ShiftVector,
    /// Weight of the best path, i.e. the off-diagonal half of `tau_K`.
    pub path_weight: f64,
    pub partition_sizes: Vec<usize>,
}

impl LongestPath {
    /// `tau_K` of the returned shifts: twice the path weight plus the
    /// shift-independent diagonal terms `sum_j w_jj ||D_j||^2`.
    pub fn tau(&self, band: &CorrelationBand, kernel: &KernelWeights) -> f64 {
        2.0 * self.path_weight + diagonal_constant(band, kernel)
    }
}

pub fn diagonal_constant(band: &CorrelationBand, kernel: &KernelWeights) -> f64 {
    band.diag()
        .iter()
        .enumerate()
        .map(|(j, d)| kernel.lower(j, 0) * d)
        .sum()
}

/// Node count of partition `j` (zero-based): `moves^(min(j, K-1))`.
pub fn partition_size(j: usize, k_band: usize, moves: usize) -> u128 {
    (moves as u128).pow(j.min(k_band.saturating_sub(1)) as u32)
}

fn check_inputs(
    band: &CorrelationBand,
    kernel: &KernelWeights,
    moves: &MoveSet,
    k_band: usize,
) -> Result<usize> {
    if band.n() != kernel.n() {
        return Err(OrkaError::shape(band.n(), kernel.n()));
    }
    if moves.dims() != band.dims() {
        return Err(OrkaError::InvalidParameter(format!(
            "move set is {}D but the band is {}D",
            moves.dims(),
            band.dims()
        )));
    }
    if moves.lipschitz() > band.lipschitz() {
        return Err(OrkaError::InvalidParameter(format!(
            "move set allows steps of {} but the band only stores lags for C={}",
            moves.lipschitz(),
            band.lipschitz()
        )));
    }
    let k = k_band.min(band.n().saturating_sub(1));
    if band.n() > 1 && k == 0 {
        return Err(OrkaError::InvalidParameter("K must be >= 1".into()));
    }
    if k > band.band_width() || k > kernel.band_width() {
        return Err(OrkaError::InvalidParameter(format!(
            "K={k} exceeds the precomputed band (correlations {}, kernel {})",
            band.band_width(),
            kernel.band_width()
        )));
    }
    Ok(k)
}

#[inline]
fn term(
    band: &CorrelationBand,
    kernel: &KernelWeights,
    j: usize,
    gap: usize,
    lag: Shift,
) -> Result<f64> {
    let corr = band.lookup(j, gap, lag).ok_or(OrkaError::LagOutOfBand {
        j,
        k: j - gap,
        lag,
        radius: band.radius(gap),
    })?;
    Ok(kernel.lower(j, gap) * corr)
}

/// Weight of the edge entering partition `j`, given the steps
/// `history[i] = lambda_{j-i} - lambda_{j-i-1}` (most recent first).
pub fn edge_weight(
    j: usize,
    history: &[Shift],
    band: &CorrelationBand,
    kernel: &KernelWeights,
) -> Result<f64> {
    if history.len() > j {
        return Err(OrkaError::InvalidParameter(format!(
            "partition {j} has at most {j} predecessors, got {} steps",
            history.len()
        )));
    }
    let mut lag = [0i64, 0];
    let mut acc = 0.0;
    for (i, step) in history.iter().enumerate() {
        lag = [lag[0] + step[0], lag[1] + step[1]];
        acc += term(band, kernel, j, i + 1, lag)?;
    }
    Ok(acc)
}

/// Anchored shift vector from steps `lambda_{j+1} - lambda_j`.
pub fn recover_lambda(steps: &[Shift], dims: usize, lipschitz: u32) -> Result<ShiftVector> {
    ShiftVector::from_steps(dims, steps, lipschitz)
}

const STATES_PER_TASK: usize = 4096;

/// Backpointer digits of every partition, packed at a fixed bit width.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Backpointers {
    bits: u32,
    per: usize,
    words: Vec<u64>,
    // first word of each partition
    starts: Vec<usize>,
}

impl Backpointers {
    fn new(base: usize, partitions: usize) -> Self {
        let bits = (usize::BITS - (base.max(2) - 1).leading_zeros()).max(1);
        let mut starts = Vec::with_capacity(partitions + 1);
        starts.push(0);
        Backpointers {
            bits,
            per: (64 / bits) as usize,
            words: Vec::new(),
            starts,
        }
    }

    fn reserve(&mut self, partitions: impl Iterator<Item = usize>) {
        let words = partitions.map(|d| d.div_ceil(self.per)).sum();
        self.words.reserve_exact(words);
    }

    fn push(&mut self, digits: &[u16]) {
        let bits = self.bits;
        self.words.extend(digits.chunks(self.per).map(|c| {
            c.iter()
                .rev()
                .fold(0u64, |w, &d| (w << bits) | u64::from(d))
        }));
        self.starts.push(self.words.len());
    }

    fn get(&self, partition: usize, i: usize) -> usize {
        let mask = (1u64 << self.bits) - 1;
        let word = self.words[self.starts[partition] + i / self.per];
        ((word >> ((i % self.per) as u32 * self.bits)) & mask) as usize
    }
}

/// Entries allowed in the per-partition lookup tables.
const TABLE_LIMIT: usize = 1 << 16;

/// Most oldest steps enumerated inside one block.
const MAX_DEPTH: usize = 4;

/// Partitions with at most this many edges are tabulated whole.
const WHOLE_LIMIT: usize = 1 << 8;

/// Longest history tabulated whole.
const WHOLE_DEPTH: usize = 12;

/// History lengths handled without heap scratch in the relaxation.
const SCRATCH: usize = 24;

/// Layout of the per-gap lag windows inside one partition's weight buffer.
struct LagGrid {
    radius: Vec<i64>,
    offsets: Vec<usize>,
    // flat index of lag zero, and the stride of the first lag component
    center: Vec<i64>,
    row: Vec<i64>,
}

impl LagGrid {
    fn new(band: &CorrelationBand, k: usize, dims: usize) -> Self {
        let radius: Vec<i64> = (1..=k).map(|g| band.radius(g)).collect();
        let mut offsets = vec![0usize];
        for g in 1..=k {
            offsets.push(offsets[g - 1] + band.window(g));
        }
        let row: Vec<i64> = radius
            .iter()
            .map(|&r| if dims == 1 { 1 } else { 2 * r + 1 })
            .collect();
        let center = (0..k)
            .map(|g| offsets[g] as i64 + radius[g] * row[g] + if dims == 1 { 0 } else { radius[g] })
            .collect();
        LagGrid {
            radius,
            offsets,
            center,
            row,
        }
    }
}

/// Per-partition constants of the relaxation.
struct Layer<'a> {
    h: usize,
    steady: bool,
    base: usize,
    top: usize,
    dims: usize,
    moves: &'a [Shift],
    // flat[grid.offsets[g - 1] + lag_index] = w_{j,j-g} <D_j, S_lag(D_{j-g})>
    flat: &'a [f64],
    grid: &'a LagGrid,
    // small partitions are relaxed in one pass without tables
    whole: bool,
    // number of oldest steps enumerated inside a block, and b^depth
    depth: usize,
    block: usize,
}

impl<'a> Layer<'a> {
    fn new(h: usize, steady: bool, moves: &'a MoveSet, flat: &'a [f64], grid: &'a LagGrid) -> Self {
        let b = moves.len();
        let window = |g: usize| {
            if g == 0 {
                1
            } else {
                grid.offsets[g] - grid.offsets[g - 1]
            }
        };
        // tables stay small next to the partition itself
        let limit = TABLE_LIMIT.min(b.pow(h as u32) / 4);
        // the most recent step picks the predecessor group, so it stays outside the block
        let whole = (1..=WHOLE_DEPTH).contains(&h)
            && b.checked_pow(h as u32 + 1)
                .is_some_and(|e| e <= WHOLE_LIMIT);
        let depth = if h <= 2 {
            h.min(1)
        } else {
            (2..=(h - 1).min(MAX_DEPTH))
                .take_while(|&d| window(h - d) * b.pow(d as u32 + 1) <= limit)
                .last()
                .unwrap_or(1)
        };
        Layer {
            h,
            steady,
            base: b,
            top: if h >= 1 { b.pow(h as u32 - 1) } else { 1 },
            dims: moves.dims(),
            moves: moves.moves(),
            flat,
            grid,
            whole,
            depth,
            block: b.pow(depth as u32),
        }
    }

    #[inline(always)]
    fn index(&self, gap: usize, lag: Shift) -> usize {
        let r = self.grid.radius[gap - 1];
        (if self.dims == 1 {
            lag[0] + r
        } else {
            (lag[0] + r) * (2 * r + 1) + lag[1] + r
        }) as usize
    }

    #[inline(always)]
    fn at(&self, gap: usize, lag: Shift) -> f64 {
        self.flat[(self.grid.center[gap - 1] + lag[0] * self.grid.row[gap - 1] + lag[1]) as usize]
    }

    /// Recomputes cumulative lags and partial sums of the most recent steps
    /// from age `from` on.
    fn refresh(&self, from: usize, digits: &[usize], lag: &mut [Shift], part: &mut [f64]) {
        for a in from..digits.len() {
            let m = self.moves[digits[a]];
            let (l, p) = if a == 0 {
                ([0, 0], 0.0)
            } else {
                (lag[a - 1], part[a - 1])
            };
            lag[a] = [l[0] + m[0], l[1] + m[1]];
            part[a] = p + self.at(a + 1, lag[a]);
        }
    }

    /// Table row of the lag accumulated by the steps outside a block.
    #[inline(always)]
    fn upper_index(&self, l: Shift) -> usize {
        let u = self.h - self.depth;
        if u >= 1 {
            self.index(u, l)
        } else {
            0
        }
    }

    /// Tables keyed by the upper lag `l`: `last[l][i]` sums the terms that
    /// close on the in-block steps `i`; `ext[l][i][x]` is the term of the
    /// dropped step `x`.
    fn tables(&self, last: &mut Vec<f64>, ext: &mut Vec<f64>) {
        let (h, b, nb, depth) = (self.h, self.base, self.block, self.depth);
        let u = h - depth;
        let r = if u >= 1 { self.grid.radius[u - 1] } else { 0 };
        let side = 2 * r + 1;
        let rows = if u == 0 {
            1
        } else if self.dims == 1 {
            side as usize
        } else {
            (side * side) as usize
        };
        last.clear();
        last.resize(rows * nb, 0.0);
        ext.clear();
        ext.resize(if self.steady { rows * nb * b } else { 0 }, 0.0);
        // in-block digits, most recent first; the oldest step is the lowest digit
        let mut digits = [0usize; WHOLE_DEPTH];
        let mut lag = [[0i64; 2]; WHOLE_DEPTH];
        let mut acc = [0.0; WHOLE_DEPTH];
        for li in 0..rows {
            let l = if u == 0 {
                [0, 0]
            } else if self.dims == 1 {
                [li as i64 - r, 0]
            } else {
                [li as i64 / side - r, li as i64 % side - r]
            };
            digits[..depth].fill(0);
            let mut from = 0;
            for i in 0..nb {
                for a in from..depth {
                    let m = self.moves[digits[a]];
                    let (pl, pa) = if a == 0 {
                        (l, 0.0)
                    } else {
                        (lag[a - 1], acc[a - 1])
                    };
                    lag[a] = [pl[0] + m[0], pl[1] + m[1]];
                    acc[a] = pa + self.at(u + a + 1, lag[a]);
                }
                let row = li * nb + i;
                last[row] = acc[depth - 1];
                if self.steady {
                    let lo = lag[depth - 1];
                    for (x, mx) in self.moves.iter().enumerate() {
                        ext[row * b + x] = self.at(h + 1, [lo[0] + mx[0], lo[1] + mx[1]]);
                    }
                }
                from = depth - 1;
                loop {
                    digits[from] += 1;
                    if digits[from] < b || from == 0 {
                        break;
                    }
                    digits[from] = 0;
                    from -= 1;
                }
            }
        }
    }

    /// Relaxes a whole partition directly, walking the histories in order
    /// and keeping partial sums of the unchanged recent steps.
    fn direct(&self, prev: &[f64], weights: &mut [f64], picks: &mut [u16]) {
        let (h, b, top) = (self.h, self.base, self.top);
        let mut digits = [0usize; WHOLE_DEPTH];
        let mut lag = [[0i64; 2]; WHOLE_DEPTH];
        let mut acc = [0.0; WHOLE_DEPTH];
        let (mut from, mut p) = (0, 0);
        for i in 0..weights.len() {
            for a in from..h {
                let m = self.moves[digits[a]];
                let (pl, pa) = if a == 0 {
                    ([0, 0], 0.0)
                } else {
                    (lag[a - 1], acc[a - 1])
                };
                lag[a] = [pl[0] + m[0], pl[1] + m[1]];
                acc[a] = pa + self.at(a + 1, lag[a]);
            }
            let (lo, t) = (lag[h - 1], acc[h - 1]);
            if self.steady {
                let pr = &prev[p * b..(p + 1) * b];
                let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
                for (x, (w, mx)) in pr.iter().zip(self.moves).enumerate() {
                    let v = w + self.at(h + 1, [lo[0] + mx[0], lo[1] + mx[1]]);
                    if v > best {
                        best = v;
                        arg = x;
                    }
                }
                weights[i] = t + best;
                picks[i] = arg as u16;
            } else {
                weights[i] = prev[p] + t;
            }
            p += 1;
            if p == top {
                p = 0;
            }
            from = h - 1;
            loop {
                digits[from] += 1;
                if digits[from] < b || from == 0 {
                    break;
                }
                digits[from] = 0;
                from -= 1;
            }
        }
    }

    /// Relaxes nodes `lo..lo + weights.len()` (whole blocks) into `weights`
    /// and, for steady partitions, `picks`.
    #[allow(clippy::too_many_arguments)]
    fn relax(
        &self,
        prev: &[f64],
        last: &[f64],
        ext: &[f64],
        lo: usize,
        weights: &mut [f64],
        picks: &mut [u16],
    ) {
        let (h, b, nb) = (self.h, self.base, self.block);
        if h == 0 {
            // K = 1: one node, reached from the single previous node by any move
            let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
            for (x, m) in self.moves.iter().enumerate() {
                let v = prev[0] + self.at(1, *m);
                if v > best {
                    best = v;
                    arg = x;
                }
            }
            weights[0] = best;
            picks[0] = arg as u16;
            return;
        }
        let upper = h - self.depth;
        let (mut digits_buf, mut lag_buf, mut part_buf) =
            ([0usize; SCRATCH], [[0i64; 2]; SCRATCH], [0.0; SCRATCH]);
        let (mut digits_heap, mut lag_heap, mut part_heap) = (Vec::new(), Vec::new(), Vec::new());
        let (digits, lag, part): (&mut [usize], &mut [Shift], &mut [f64]) = if upper <= SCRATCH {
            (
                &mut digits_buf[..upper],
                &mut lag_buf[..upper],
                &mut part_buf[..upper],
            )
        } else {
            digits_heap.resize(upper, 0);
            lag_heap.resize(upper, [0, 0]);
            part_heap.resize(upper, 0.0);
            (&mut digits_heap, &mut lag_heap, &mut part_heap)
        };
        let mut rem = lo / nb;
        for a in (0..upper).rev() {
            digits[a] = rem % b;
            rem /= b;
        }
        self.refresh(0, digits, lag, part);

        let blocks = weights.len() / nb;
        // blocks are aligned, so the predecessor group only wraps between blocks
        let mut p = lo % self.top;
        for blk in 0..blocks {
            let (l, pb) = if upper > 0 {
                (lag[upper - 1], part[upper - 1])
            } else {
                ([0, 0], 0.0)
            };
            let li = self.upper_index(l);
            let last = &last[li * nb..(li + 1) * nb];
            let out = &mut weights[blk * nb..(blk + 1) * nb];
            if self.steady {
                let ext = &ext[li * nb * b..(li + 1) * nb * b];
                let pk = &mut picks[blk * nb..(blk + 1) * nb];
                // with a single predecessor group (h = 1) all nodes share it
                let (preds, stride) = if self.top == 1 {
                    (&prev[..b], 0)
                } else {
                    (&prev[p * b..(p + nb) * b], b)
                };
                match b {
                    3 => steady_block(3, stride, preds, ext, last, pb, out, pk),
                    5 => steady_block(5, stride, preds, ext, last, pb, out, pk),
                    9 => steady_block(9, stride, preds, ext, last, pb, out, pk),
                    25 => steady_block(25, stride, preds, ext, last, pb, out, pk),
                    _ => steady_block(b, stride, preds, ext, last, pb, out, pk),
                }
            } else if self.top == 1 {
                for (o, t) in out.iter_mut().zip(last) {
                    *o = prev[0] + pb + t;
                }
            } else {
                for ((o, t), w) in out.iter_mut().zip(last).zip(&prev[p..p + nb]) {
                    *o = w + pb + t;
                }
            }
            if self.top > 1 {
                p += nb;
                if p == self.top {
                    p = 0;
                }
            }
            if upper > 0 && blk + 1 < blocks {
                let mut a = upper - 1;
                loop {
                    digits[a] += 1;
                    if digits[a] < b {
                        break;
                    }
                    digits[a] = 0;
                    a -= 1;
                }
                self.refresh(a, digits, lag, part);
            }
        }
    }
}

/// One block of nodes sharing their upper steps: node `i` is reached from
/// `preds[i*stride..][..b]` through `ext[i*b..][..b]`.
#[allow(clippy::too_many_arguments)]
#[inline(always)]
fn steady_block(
    b: usize,
    stride: usize,
    preds: &[f64],
    ext: &[f64],
    last: &[f64],
    pb: f64,
    out: &mut [f64],
    picks: &mut [u16],
) {
    for (i, ((o, t), pk)) in out.iter_mut().zip(last).zip(picks.iter_mut()).enumerate() {
        let pr = &preds[i * stride..i * stride + b];
        let ex = &ext[i * b..(i + 1) * b];
        let (mut best, mut arg) = (f64::NEG_INFINITY, 0);
        for x in 0..b {
            let v = pr[x] + ex[x];
            if v > best {
                best = v;
                arg = x;
            }
        }
        *o = pb + t + best;
        *pk = arg as u16;
    }
}

/// The shift vector maximizing `tau_K` over all `C`-Lipschitz paths with
/// `lambda_0 = 0`.
pub fn longest_path(
    band: &CorrelationBand,
    kernel: &KernelWeights,
    moves: &MoveSet,
    k_band: usize,
) -> Result<ShiftVector> {
    longest_path_with(band, kernel, moves, k_band, &GraphConfig::default()).map(|p| p.shifts)
}

pub fn longest_path_with(
    band: &CorrelationBand,
    kernel: &KernelWeights,
    moves: &MoveSet,
    k_band: usize,
    config: &GraphConfig,
) -> Result<LongestPath> {
    let k = check_inputs(band, kernel, moves, k_band)?;
    let n = band.n();
    let b = moves.len();
    let widest = partition_size(n.saturating_sub(1), k, b);
    if widest > u128::from(config.node_budget) {
        return Err(OrkaError::NodeBudgetExceeded {
            nodes: widest,
            budget: config.node_budget,
        });
    }
    let history = |j: usize| j.min(k.saturating_sub(1));
    let dims = moves.dims();
    let mut sizes = Vec::with_capacity(n.max(1));
    sizes.push(1usize);
    let mut prev = vec![0.0];
    let mut weights = Vec::new();
    let mut picks = Vec::new();
    // partition 0 has no incoming edges
    let mut backpointers = Backpointers::new(b, n);
    backpointers.reserve(
        (1..n)
            .filter(|&j| history(j) == history(j - 1))
            .map(|j| b.pow(history(j) as u32)),
    );
    backpointers.push(&[]);
    // window layout per gap is the same in every partition
    let grid = LagGrid::new(band, k, dims);
    let offsets = &grid.offsets;
    let mut flat = vec![0.0; offsets[k]];
    let (mut last, mut ext) = (Vec::new(), Vec::new());

    for j in 1..n {
        let h = history(j);
        let steady = h == history(j - 1);
        let states = b.pow(h as u32);
        let gaps = if steady { h + 1 } else { h };
        for g in 1..=gaps {
            let w = kernel.lower(j, g);
            for (dst, c) in flat[offsets[g - 1]..offsets[g]]
                .iter_mut()
                .zip(band.row(j, g))
            {
                *dst = w * c;
            }
        }
        let layer = Layer::new(h, steady, moves, &flat, &grid);
        weights.clear();
        weights.resize(states, 0.0);
        picks.clear();
        picks.resize(if steady { states } else { 0 }, 0u16);
        if layer.whole {
            layer.direct(&prev, &mut weights, &mut picks);
            backpointers.push(&picks);
            std::mem::swap(&mut prev, &mut weights);
            sizes.push(states);
            continue;
        }
        if h >= 1 {
            layer.tables(&mut last, &mut ext);
        }
        let per_task = STATES_PER_TASK.div_ceil(layer.block) * layer.block;
        let prev_w = &prev;
        if steady {
            par::for_each_chunk_pair(
                config.exec,
                &mut weights,
                &mut picks,
                per_task,
                |t, w, c| layer.relax(prev_w, &last, &ext, t * per_task, w, c),
            );
        } else {
            par::for_each_chunk(config.exec, &mut weights, per_task, |t, w| {
                layer.relax(prev_w, &last, &ext, t * per_task, w, &mut [])
            });
        }
        backpointers.push(&picks);
        std::mem::swap(&mut prev, &mut weights);
        sizes.push(states);
    }

    // implicit sink: argmax over the last partition, first index on ties
    let (mut s, path_weight) =
        prev.iter()
            .enumerate()
            .fold((0usize, f64::NEG_INFINITY), |acc, (i, &w)| {
                if w > acc.1 {
                    (i, w)
                } else {
                    acc
                }
            });

    let mut steps = vec![[0i64, 0]; n.saturating_sub(1)];
    for j in (1..n).rev() {
        let h = history(j);
        let steady = h == history(j - 1);
        if h == 0 {
            steps[j - 1] = moves.moves[backpointers.get(j, s)];
            s = 0;
            continue;
        }
        let top = b.pow(h as u32 - 1);
        steps[j - 1] = moves.moves[s / top];
        s = if steady {
            (s % top) * b + backpointers.get(j, s)
        } else {
            s % top
        };
    }
    Ok(LongestPath {
        shifts: recover_lambda(&steps, dims, moves.lipschitz())?,
        path_weight,
        partition_sizes: sizes,
    })
}
