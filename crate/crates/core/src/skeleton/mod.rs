//! The discrete-type skeleton of a `d`-dimensional Brownian motion: the
//! successive times at which some coordinate has moved by `±eps` since its
//! previous event, merged into a single increasing grid.

mod exit_time;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::io::{Read, Write};

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::{path_stream, PathRng, StreamKind};

pub use exit_time::{
    exit_cdf, exit_density, exit_survival, exit_time_quantile, sample_increment,
    sample_unit_exit_time, NEWTON_TOLERANCE, SERIES_SWITCH, TERM_TOLERANCE,
};

/// Level `eps`, Brownian dimension and horizon of one skeleton family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkeletonConfig {
    pub eps: f64,
    pub dim: usize,
    pub horizon: f64,
    pub seed: u64,
}

impl SkeletonConfig {
    pub fn new(eps: f64, dim: usize, horizon: f64, seed: u64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dim must be at least 1".into()));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        Ok(Self {
            eps,
            dim,
            horizon,
            seed,
        })
    }

    /// Number of stages `d * ceil(horizon / eps^2)` needed to cover the horizon.
    pub fn num_steps(&self) -> usize {
        num_steps(self.eps, self.horizon, self.dim)
    }

    /// Samples the skeleton of path `index` from its own random stream.
    pub fn sample(&self, steps: usize, index: u64) -> Result<Skeleton> {
        let mut rng = path_stream(self.seed, StreamKind::Training, index);
        build_skeleton(self, steps, &mut rng)
    }

    pub fn stream(&self, kind: StreamKind, index: u64) -> PathRng {
        path_stream(self.seed, kind, index)
    }
}

/// `d * ceil(eps^-2 * horizon)`.
///
/// A ratio within 1e-9 (relative) of an integer is snapped to it first, so
/// that e.g. `eps = 0.1` gives 100 steps rather than 101 from rounding noise.
pub fn num_steps(eps: f64, horizon: f64, dim: usize) -> usize {
    assert!(eps > 0.0 && horizon > 0.0 && dim >= 1, "num_steps: invalid arguments");
    let ratio = horizon / (eps * eps);
    let nearest = ratio.round();
    let per_coord = if (ratio - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        ratio.ceil()
    };
    dim * per_coord as usize
}

/// The sign vector `eta_n`: exactly one coordinate moved, by `+1` or `-1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Move {
    coord: u8,
    sign: i8,
}

impl Move {
    pub fn new(coord: usize, sign: i8) -> Result<Self> {
        if sign != 1 && sign != -1 {
            return Err(Error::InvalidParameter(format!("sign must be +-1, got {sign}")));
        }
        let coord = u8::try_from(coord)
            .map_err(|_| Error::InvalidParameter(format!("coordinate {coord} too large")))?;
        Ok(Self { coord, sign })
    }

    pub fn coord(self) -> usize {
        self.coord as usize
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// Dense `d`-vector form with a single nonzero entry.
    pub fn to_vector(self, dim: usize) -> Vec<i8> {
        let mut v = vec![0; dim];
        v[self.coord()] = self.sign;
        v
    }
}

/// Result of a grid lookup: `N^k(t)` and `T^k_{N^k(t)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub count: usize,
    pub last_time: f64,
}

/// Content hash used to tie derived paths back to their skeleton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SkeletonId(pub u64);

/// One realised skeleton.
///
/// Event `n` (1-based in the usual notation) is stored at index `n - 1`:
/// `times[n - 1] = T_n`, `deltas[n - 1] = T_n - T_{n-1}`. Walk levels are
/// stored for `n = 0..=len` with level 0 at time 0, and `A^{k,j}(T_n)` equals
/// `eps * levels[j][n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    eps: f64,
    dim: usize,
    times: Vec<f64>,
    deltas: Vec<f64>,
    moves: Vec<Move>,
    levels: Vec<Vec<i32>>,
    id: SkeletonId,
}

impl Skeleton {
    /// Builds a skeleton from its increments, validating every invariant.
    pub fn from_events(eps: f64, dim: usize, deltas: Vec<f64>, moves: Vec<Move>) -> Result<Self> {
        if !(eps > 0.0) || dim == 0 {
            return Err(Error::InvalidParameter("eps must be positive and dim >= 1".into()));
        }
        if deltas.len() != moves.len() {
            return Err(Error::InvalidParameter(format!(
                "{} deltas but {} moves",
                deltas.len(),
                moves.len()
            )));
        }
        let mut times = Vec::with_capacity(deltas.len());
        let mut levels = vec![Vec::with_capacity(deltas.len() + 1); dim];
        for l in levels.iter_mut() {
            l.push(0);
        }
        let mut now = 0.0;
        for (n, (&delta, mv)) in deltas.iter().zip(&moves).enumerate() {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "delta {n} must be positive, got {delta}"
                )));
            }
            if mv.coord() >= dim {
                return Err(Error::InvalidParameter(format!(
                    "move {n} touches coordinate {} of a {dim}-dimensional walk",
                    mv.coord()
                )));
            }
            now += delta;
            times.push(now);
            for (j, l) in levels.iter_mut().enumerate() {
                let last = *l.last().unwrap();
                l.push(if j == mv.coord() { last + mv.sign() as i32 } else { last });
            }
        }
        let id = SkeletonId(fingerprint(eps, &deltas, &moves));
        Ok(Self {
            eps,
            dim,
            times,
            deltas,
            moves,
            levels,
            id,
        })
    }

    /// One-dimensional skeleton with every waiting time frozen at `eps^2`.
    pub fn deterministic_clock(eps: f64, signs: &[i8]) -> Result<Self> {
        let moves = signs
            .iter()
            .map(|&s| Move::new(0, s))
            .collect::<Result<Vec<_>>>()?;
        Self::from_events(eps, 1, vec![eps * eps; signs.len()], moves)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self) -> SkeletonId {
        self.id
    }

    /// Number of events.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `T_1 < T_2 < ...`
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn deltas(&self) -> &[f64] {
        &self.deltas
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    /// `T_n` with `T_0 = 0`.
    pub fn time_at(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.times[n - 1]
        }
    }

    /// Walk level of coordinate `coord` after `n` events, in units of `eps`.
    pub fn walk_level(&self, coord: usize, n: usize) -> i32 {
        self.levels[coord][n]
    }

    /// `A^{k,coord}(T_n)`.
    pub fn walk_value(&self, coord: usize, n: usize) -> f64 {
        self.eps * self.levels[coord][n] as f64
    }

    /// Values of coordinate `coord` at `T_0, T_1, ..., T_len`.
    pub fn walk(&self, coord: usize) -> Vec<f64> {
        self.levels[coord]
            .iter()
            .map(|&l| self.eps * l as f64)
            .collect()
    }

    /// Signed increment `Delta A^{k,coord}(T_n)` for `n >= 1`.
    pub fn increment(&self, coord: usize, n: usize) -> f64 {
        let mv = self.moves[n - 1];
        if mv.coord() == coord {
            self.eps * mv.sign() as f64
        } else {
            0.0
        }
    }

    /// `N^k(t) = max { n : T_n <= t }` together with `T_{N^k(t)}`.
    pub fn grid_query(&self, t: f64) -> GridPoint {
        let count = self.times.partition_point(|&x| x <= t);
        GridPoint {
            count,
            last_time: if count == 0 { 0.0 } else { self.times[count - 1] },
        }
    }

    /// The history vector `(Delta T_1, eta_1, ..., Delta T_n, eta_n)`.
    pub fn history(&self, n: usize) -> HistoryVector {
        HistoryVector {
            entries: self.deltas[..n]
                .iter()
                .copied()
                .zip(self.moves[..n].iter().copied())
                .collect(),
        }
    }

    /// Little-endian dump: event count as `u64`, then per event the delta as
    /// `f64`, the coordinate as `u8` and the sign as `i8`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        for (delta, mv) in self.deltas.iter().zip(&self.moves) {
            out.write_all(&delta.to_le_bytes())?;
            out.write_all(&[mv.coord, mv.sign as u8])?;
        }
        Ok(())
    }

    /// Inverse of [`Skeleton::write_binary`]; `eps` and `dim` are not part of
    /// the record stream and must be supplied.
    pub fn read_binary<R: Read>(mut input: R, eps: f64, dim: usize) -> Result<Self> {
        let mut word = [0u8; 8];
        input.read_exact(&mut word)?;
        let count = u64::from_le_bytes(word) as usize;
        let mut deltas = Vec::with_capacity(count);
        let mut moves = Vec::with_capacity(count);
        let mut tag = [0u8; 2];
        for _ in 0..count {
            input.read_exact(&mut word)?;
            input.read_exact(&mut tag)?;
            deltas.push(f64::from_le_bytes(word));
            moves.push(Move::new(tag[0] as usize, tag[1] as i8)?);
        }
        Self::from_events(eps, dim, deltas, moves)
    }
}

fn fingerprint(eps: f64, deltas: &[f64], moves: &[Move]) -> u64 {
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut feed = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(PRIME);
        }
    };
    feed(eps.to_bits());
    for (d, m) in deltas.iter().zip(moves) {
        feed(d.to_bits());
        feed(((m.coord as u64) << 8) | (m.sign as u8 as u64));
    }
    h
}

/// The discrete state `(Delta T_1, eta_1, ..., Delta T_n, eta_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryVector {
    pub entries: Vec<(f64, Move)>,
}

impl HistoryVector {
    pub fn stage(&self) -> usize {
        self.entries.len()
    }

    /// Partial sums `t_j = Delta T_1 + ... + Delta T_j` for `j = 1..=n`.
    pub fn elapsed(&self) -> Vec<f64> {
        self.entries
            .iter()
            .scan(0.0, |acc, (d, _)| {
                *acc += d;
                Some(*acc)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    time: f64,
    coord: usize,
    sign: i8,
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // Reversed so that `BinaryHeap` pops the earliest event; among equal
    // times the lower coordinate comes first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.coord.cmp(&self.coord))
    }
}

/// Samples `steps` events of the merged skeleton.
///
/// Each coordinate runs its own renewal stream of `(delta, sign)` draws; the
/// streams are merged in increasing time order.
pub fn build_skeleton<R: Rng + ?Sized>(
    cfg: &SkeletonConfig,
    steps: usize,
    rng: &mut R,
) -> Result<Skeleton> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be at least 1".into()));
    }
    let mut deltas = Vec::with_capacity(steps);
    let mut moves = Vec::with_capacity(steps);
    if cfg.dim == 1 {
        for _ in 0..steps {
            let (delta, sign) = sample_increment(rng, cfg.eps)?;
            deltas.push(delta);
            moves.push(Move { coord: 0, sign });
        }
    } else {
        let mut queue = BinaryHeap::with_capacity(cfg.dim);
        for coord in 0..cfg.dim {
            let (delta, sign) = sample_increment(rng, cfg.eps)?;
            queue.push(Pending {
                time: delta,
                coord,
                sign,
            });
        }
        let mut now = 0.0;
        while deltas.len() < steps {
            let ev = queue.pop().expect("one pending event per coordinate");
            deltas.push(ev.time - now);
            moves.push(Move::new(ev.coord, ev.sign)?);
            now = ev.time;
            let (delta, sign) = sample_increment(rng, cfg.eps)?;
            queue.push(Pending {
                time: ev.time + delta,
                coord: ev.coord,
                sign,
            });
        }
    }
    Skeleton::from_events(cfg.eps, cfg.dim, deltas, moves)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_counts() {
        assert_eq!(num_steps(0.25, 1.0, 1), 16);
        assert_eq!(num_steps(2f64.powf(-1.88), 1.0, 1), 14);
        assert_eq!(num_steps(2f64.powf(-3.31), 1.0, 1), 99);
        assert_eq!(num_steps(0.1, 1.0, 1), 100);
        assert_eq!(num_steps(0.25, 1.0, 3), 48);
        assert_eq!(num_steps(0.5, 0.3, 1), 2);
    }

    #[test]
    fn config_validation() {
        assert!(SkeletonConfig::new(0.0, 1, 1.0, 0).is_err());
        assert!(SkeletonConfig::new(0.1, 0, 1.0, 0).is_err());
        assert!(SkeletonConfig::new(0.1, 1, -1.0, 0).is_err());
        assert!(build_skeleton(&SkeletonConfig::new(0.1, 1, 1.0, 0).unwrap(), 0, &mut rand::rng()).is_err());
    }

    #[test]
    fn multi_dimensional_signs_and_times() {
        let cfg = SkeletonConfig::new(0.3, 3, 1.0, 11).unwrap();
        let s = cfg.sample(200, 0).unwrap();
        assert_eq!(s.len(), 200);
        for n in 0..s.len() {
            let v = s.moves()[n].to_vector(3);
            assert_eq!(v.iter().map(|x| x.abs() as i32).sum::<i32>(), 1);
            if n > 0 {
                assert!(s.times()[n] > s.times()[n - 1]);
            }
        }
        // every walk moves by exactly one lattice step at its own events only
        for n in 1..=s.len() {
            let moved: Vec<i32> = (0..3)
                .map(|j| (s.walk_level(j, n) - s.walk_level(j, n - 1)).abs())
                .collect();
            assert_eq!(moved.iter().sum::<i32>(), 1);
            assert_eq!(moved[s.moves()[n - 1].coord()], 1);
        }
    }

    #[test]
    fn one_dimensional_walk_telescopes() {
        let cfg = SkeletonConfig::new(0.2, 1, 1.0, 5).unwrap();
        let s = cfg.sample(50, 9).unwrap();
        let mut plus = 0i32;
        let mut minus = 0i32;
        assert_eq!(s.walk_value(0, 0), 0.0);
        for n in 1..=50 {
            if s.moves()[n - 1].sign() > 0 {
                plus += 1
            } else {
                minus += 1
            }
            assert_eq!(s.walk_value(0, n), 0.2 * (plus - minus) as f64);
        }
    }

    #[test]
    fn grid_queries() {
        let s = Skeleton::from_events(
            0.5,
            1,
            vec![0.1, 0.2, 0.3, 0.4],
            [1, -1, 1, 1].iter().map(|&x| Move::new(0, x).unwrap()).collect(),
        )
        .unwrap();
        assert_eq!(s.grid_query(0.05), GridPoint { count: 0, last_time: 0.0 });
        let t2 = s.times()[2];
        assert_eq!(s.grid_query(t2), GridPoint { count: 3, last_time: t2 });
        assert_eq!(s.grid_query(5.0), GridPoint { count: 4, last_time: s.times()[3] });
        assert_eq!(s.history(2).elapsed().len(), 2);
    }

    #[test]
    fn rejects_broken_events() {
        let m = Move::new(0, 1).unwrap();
        assert!(Skeleton::from_events(0.1, 1, vec![0.0], vec![m]).is_err());
        assert!(Skeleton::from_events(0.1, 1, vec![0.1], vec![Move::new(1, 1).unwrap()]).is_err());
        assert!(Move::new(0, 0).is_err());
    }

    #[test]
    fn deterministic_replay() {
        let cfg = SkeletonConfig::new(0.125, 2, 1.0, 99).unwrap();
        let a = cfg.sample(64, 3).unwrap();
        let b = cfg.sample(64, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.id(), b.id());
        assert_ne!(a.id(), cfg.sample(64, 4).unwrap().id());
    }
}
