//! Experience storage: a main buffer plus a high-quality and a low-quality
//! side buffer, split by a reward cutoff.
//!
//! Every transition goes into the main buffer. It is additionally filed as
//! high quality when its immediate reward is strictly greater than the
//! cutoff `R`, and as low quality otherwise. The side buffers only feed the
//! director; the critics and the actor learn from the main buffer.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::Tensor2;

pub const DEFAULT_MAIN_CAPACITY: usize = 1_000_000;
pub const DEFAULT_SIDE_CAPACITY: usize = 100_000;
pub const DEFAULT_RESERVOIR_CAPACITY: usize = 10_000;

/// One environment interaction `(s, a, r, s')`.
///
/// `terminal` marks a true absorbing state; `truncated` marks an episode cut
/// by the time limit, which is still bootstrapped through.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub truncated: bool,
    pub terminal: bool,
}

/// Fixed-capacity FIFO ring. Index 0 is the oldest element.
#[derive(Clone, Debug)]
pub struct RingBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    head: usize,
}

impl<T> RingBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "ring buffer capacity must be positive");
        Self {
            items: Vec::new(),
            capacity,
            head: 0,
        }
    }

    /// Appends `item`, returning the evicted oldest element when full.
    pub fn push(&mut self, item: T) -> Option<T> {
        if self.items.len() < self.capacity {
            self.items.push(item);
            None
        } else {
            let old = std::mem::replace(&mut self.items[self.head], item);
            self.head = (self.head + 1) % self.capacity;
            Some(old)
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, i: usize) -> Option<&T> {
        if i >= self.items.len() {
            return None;
        }
        Some(&self.items[(self.head + i) % self.items.len()])
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        (0..self.items.len()).map(move |i| self.get(i).expect("index in range"))
    }

    /// `n` uniform draws with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&T>> {
        if self.items.len() < n || self.items.is_empty() {
            return Err(Error::InsufficientSamples {
                available: self.items.len(),
                requested: n,
            });
        }
        Ok((0..n)
            .map(|_| self.get(rng.random_range(0..self.items.len())).expect("index in range"))
            .collect())
    }
}

/// A side-buffer entry together with the cutoff in force when it was filed.
#[derive(Clone, Debug, PartialEq)]
pub struct Classified {
    pub transition: Transition,
    pub cutoff_at_insertion: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quality {
    High,
    Low,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BufferKind {
    Main,
    High,
    Low,
}

/// Uniform reservoir sample (Algorithm R) of every reward seen.
#[derive(Clone, Debug)]
pub struct Reservoir {
    items: Vec<f64>,
    capacity: usize,
    seen: u64,
    rng: ChaCha8Rng,
}

impl Reservoir {
    pub fn new(capacity: usize, seed: u64) -> Self {
        Self {
            items: Vec::with_capacity(capacity.min(DEFAULT_RESERVOIR_CAPACITY)),
            capacity,
            seen: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn insert(&mut self, value: f64) {
        self.seen += 1;
        if self.items.len() < self.capacity {
            self.items.push(value);
        } else {
            let j = self.rng.random_range(0..self.seen);
            if (j as usize) < self.capacity {
                self.items[j as usize] = value;
            }
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn quantile(&self, q: f64) -> Option<f64> {
        nearest_rank_quantile(&self.items, q)
    }
}

/// Nearest-rank quantile: the `ceil(q n)`-th smallest value (1-based).
pub fn nearest_rank_quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    Some(sorted[rank - 1])
}

#[derive(Clone, Debug)]
enum CutoffMode {
    Fixed,
    Adaptive {
        quantile: f64,
        reservoir: Reservoir,
        pending: Vec<f64>,
    },
}

/// The main buffer `B` with the high-quality (`B1`) and low-quality (`B2`)
/// side buffers and the cutoff `R`.
#[derive(Clone, Debug)]
pub struct TripleReplay {
    main: RingBuffer<Transition>,
    high: RingBuffer<Classified>,
    low: RingBuffer<Classified>,
    cutoff: f64,
    mode: CutoffMode,
}

impl TripleReplay {
    pub fn new(cutoff: f64) -> Self {
        Self::with_capacities(cutoff, DEFAULT_MAIN_CAPACITY, DEFAULT_SIDE_CAPACITY)
    }

    pub fn with_capacities(cutoff: f64, main: usize, side: usize) -> Self {
        Self {
            main: RingBuffer::new(main),
            high: RingBuffer::new(side),
            low: RingBuffer::new(side),
            cutoff,
            mode: CutoffMode::Fixed,
        }
    }

    /// Switches to a cutoff tracking the `quantile` of observed rewards.
    /// The cutoff given at construction applies until the first
    /// [`update_cutoff`](Self::update_cutoff).
    pub fn adaptive(mut self, quantile: f64, reservoir_capacity: usize, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&quantile) {
            return Err(Error::config("cutoff_quantile", format!("{quantile} is outside [0, 1]")));
        }
        self.mode = CutoffMode::Adaptive {
            quantile,
            reservoir: Reservoir::new(reservoir_capacity, seed),
            pending: Vec::new(),
        };
        Ok(self)
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self.mode, CutoffMode::Adaptive { .. })
    }

    pub fn main(&self) -> &RingBuffer<Transition> {
        &self.main
    }

    pub fn high(&self) -> &RingBuffer<Classified> {
        &self.high
    }

    pub fn low(&self) -> &RingBuffer<Classified> {
        &self.low
    }

    pub fn len(&self, kind: BufferKind) -> usize {
        match kind {
            BufferKind::Main => self.main.len(),
            BufferKind::High => self.high.len(),
            BufferKind::Low => self.low.len(),
        }
    }

    /// Stores `t` in the main buffer and in exactly one side buffer.
    pub fn classify_and_store(&mut self, t: Transition) -> Quality {
        let quality = if t.reward > self.cutoff {
            Quality::High
        } else {
            Quality::Low
        };
        if let CutoffMode::Adaptive { pending, .. } = &mut self.mode {
            pending.push(t.reward);
        }
        let entry = Classified {
            transition: t.clone(),
            cutoff_at_insertion: self.cutoff,
        };
        match quality {
            Quality::High => self.high.push(entry),
            Quality::Low => self.low.push(entry),
        };
        self.main.push(t);
        quality
    }

    pub fn sample<R: Rng + ?Sized>(&self, kind: BufferKind, n: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        match kind {
            BufferKind::Main => self.main.sample(n, rng),
            BufferKind::High => Ok(self.high.sample(n, rng)?.into_iter().map(|c| &c.transition).collect()),
            BufferKind::Low => Ok(self.low.sample(n, rng)?.into_iter().map(|c| &c.transition).collect()),
        }
    }

    /// Feeds `recent_rewards` to the reservoir and moves `R` to the
    /// configured quantile. Stored entries keep their original placement.
    pub fn update_cutoff(&mut self, recent_rewards: &[f64]) -> Result<f64> {
        let CutoffMode::Adaptive { quantile, reservoir, .. } = &mut self.mode else {
            return Err(Error::config("cutoff_quantile", "adaptive cutoff mode is not enabled"));
        };
        for &r in recent_rewards {
            reservoir.insert(r);
        }
        if let Some(r) = reservoir.quantile(*quantile) {
            self.cutoff = r;
        }
        Ok(self.cutoff)
    }

    /// Runs [`update_cutoff`](Self::update_cutoff) on every reward stored
    /// since the previous refresh. A no-op in fixed mode.
    pub fn refresh_cutoff(&mut self) -> Result<f64> {
        let pending = match &mut self.mode {
            CutoffMode::Fixed => return Ok(self.cutoff),
            CutoffMode::Adaptive { pending, .. } => std::mem::take(pending),
        };
        self.update_cutoff(&pending)
    }

    /// Checks that every side-buffer entry satisfies its placement predicate
    /// against the cutoff recorded at insertion time.
    pub fn check_invariants(&self) -> bool {
        self.high
            .iter()
            .all(|c| c.transition.reward > c.cutoff_at_insertion)
            && self
                .low
                .iter()
                .all(|c| c.transition.reward <= c.cutoff_at_insertion)
    }
}

/// A minibatch laid out as matrices, one row per transition.
#[derive(Clone, Debug)]
pub struct Batch {
    pub states: Tensor2,
    pub actions: Tensor2,
    pub rewards: Vec<f64>,
    pub next_states: Tensor2,
    pub terminal: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(ts: &[&Transition]) -> Result<Self> {
        let states: Vec<&[f64]> = ts.iter().map(|t| t.state.as_slice()).collect();
        let actions: Vec<&[f64]> = ts.iter().map(|t| t.action.as_slice()).collect();
        let next: Vec<&[f64]> = ts.iter().map(|t| t.next_state.as_slice()).collect();
        Ok(Self {
            states: Tensor2::from_rows(&states)?,
            actions: Tensor2::from_rows(&actions)?,
            rewards: ts.iter().map(|t| t.reward).collect(),
            next_states: Tensor2::from_rows(&next)?,
            terminal: ts.iter().map(|t| t.terminal).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}
