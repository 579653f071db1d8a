//! Hardcore point processes in a periodic box.
//!
//! Candidates form a Poisson process of unit intensity on `[0, L)^d × [0, ∞)`,
//! generated as a single stream ordered by arrival time (the mark). A
//! candidate is accepted iff no conflicting candidate with an earlier mark was
//! accepted, which is the graphical construction resolved in time order.
//! Truncating the stream at mark `λ` gives the hardcore Poisson process;
//! running it to saturation approximates random parking. Because all three
//! share one stream, sets drawn with the same seed are nested.

use std::cmp::Ordering;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lattice::periodic_distance2;
use crate::rng;

/// Space-time Poisson candidates with their arrival marks.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkedCandidates {
    pub dim: usize,
    pub box_side: f64,
    pub lambda: f64,
    pub seed: u64,
    coords: Vec<f64>,
    marks: Vec<f64>,
}

impl MarkedCandidates {
    /// Builds a candidate list from explicit data. Coordinates are wrapped
    /// into the box.
    pub fn from_parts(
        dim: usize,
        box_side: f64,
        lambda: f64,
        points: &[Vec<f64>],
        marks: &[f64],
    ) -> Result<Self> {
        check_box(dim, box_side)?;
        if points.len() != marks.len() {
            return Err(Error::ShapeMismatch { expected: points.len(), got: marks.len() });
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::ShapeMismatch { expected: dim, got: p.len() });
            }
            coords.extend(p.iter().map(|&x| wrap(x, box_side)));
        }
        if let Some(m) = marks.iter().find(|m| !(0.0..=lambda).contains(*m)) {
            return Err(invalid(format!("mark {m} outside [0, {lambda}]")));
        }
        Ok(Self { dim, box_side, lambda, seed: 0, coords, marks: marks.to_vec() })
    }

    pub fn len(&self) -> usize {
        self.marks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn mark(&self, i: usize) -> f64 {
        self.marks[i]
    }

    pub fn marks(&self) -> &[f64] {
        &self.marks
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ProcessKind {
    HardcorePoisson { lambda: f64 },
    RandomParking,
    /// A configuration given explicitly rather than sampled.
    Explicit,
}

/// A finite hardcore configuration on the periodic box `[0, L)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub dim: usize,
    pub box_side: f64,
    pub rho: f64,
    pub seed: u64,
    pub kind: ProcessKind,
    /// Largest candidate mark processed when the set was produced.
    pub achieved_horizon: f64,
    coords: Vec<f64>,
}

impl PointSet {
    /// An explicit configuration. Coordinates are wrapped into the box; the
    /// hardcore constraint is checked.
    pub fn from_points(dim: usize, box_side: f64, rho: f64, points: &[Vec<f64>]) -> Result<Self> {
        check_box(dim, box_side)?;
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.len() != dim {
                return Err(Error::ShapeMismatch { expected: dim, got: p.len() });
            }
            coords.extend(p.iter().map(|&x| wrap(x, box_side)));
        }
        let ps = Self {
            dim,
            box_side,
            rho,
            seed: 0,
            kind: ProcessKind::Explicit,
            achieved_horizon: 0.0,
            coords,
        };
        let dmin = min_pairwise_distance(&ps);
        if dmin < rho {
            return Err(invalid(format!("points violate hardcore distance: {dmin} < {rho}")));
        }
        Ok(ps)
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn volume(&self) -> f64 {
        self.box_side.powi(self.dim as i32)
    }

    /// Points per unit volume.
    pub fn intensity(&self) -> f64 {
        self.len() as f64 / self.volume()
    }

    pub fn lambda(&self) -> Option<f64> {
        match self.kind {
            ProcessKind::HardcorePoisson { lambda } => Some(lambda),
            _ => None,
        }
    }

    pub fn manifest(&self) -> PointSetManifest {
        PointSetManifest {
            kind: match self.kind {
                ProcessKind::HardcorePoisson { .. } => "hardcore_poisson",
                ProcessKind::RandomParking => "random_parking",
                ProcessKind::Explicit => "explicit",
            }
            .to_string(),
            d: self.dim,
            l: self.box_side,
            rho: self.rho,
            lambda: self.lambda(),
            seed: self.seed,
            count: self.len(),
            achieved_horizon: self.achieved_horizon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSetManifest {
    pub kind: String,
    pub d: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub rho: f64,
    pub lambda: Option<f64>,
    pub seed: u64,
    pub count: usize,
    pub achieved_horizon: f64,
}

/// Stopping rule for random parking.
///
/// The run stops once the candidate mark has passed `horizon` and the last
/// `streak` candidates were all rejected. More than `budget` candidates is an
/// error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaturationRule {
    pub horizon: f64,
    pub streak: u64,
    pub budget: u64,
}

impl SaturationRule {
    /// Horizon `100·ρ^{-d}` and a streak of `10·L^d` rejections.
    pub fn default_for(dim: usize, box_side: f64, rho: f64) -> Self {
        let vol = box_side.powi(dim as i32);
        Self {
            horizon: 100.0 * rho.powi(-(dim as i32)),
            streak: (10.0 * vol).ceil() as u64,
            budget: 2_000_000_000,
        }
    }
}

fn check_box(dim: usize, box_side: f64) -> Result<()> {
    if dim == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(box_side > 0.0 && box_side.is_finite()) {
        return Err(invalid(format!("box side must be positive, got {box_side}")));
    }
    Ok(())
}

fn wrap(x: f64, l: f64) -> f64 {
    let y = x.rem_euclid(l);
    if y >= l {
        0.0
    } else {
        y
    }
}

/// The time-ordered candidate stream of the space-time Poisson process.
struct CandidateStream {
    rng: ChaCha8Rng,
    dim: usize,
    box_side: f64,
    rate: f64,
    time: f64,
}

impl CandidateStream {
    fn new(dim: usize, box_side: f64, seed: u64) -> Self {
        Self {
            rng: rng::stream(seed),
            dim,
            box_side,
            rate: box_side.powi(dim as i32),
            time: 0.0,
        }
    }

    /// Writes the next candidate into `out` and returns its mark.
    fn next_into(&mut self, out: &mut [f64]) -> f64 {
        let u: f64 = self.rng.gen();
        self.time += -(1.0 - u).ln() / self.rate;
        for x in out.iter_mut().take(self.dim) {
            *x = wrap(self.rng.gen::<f64>() * self.box_side, self.box_side);
        }
        self.time
    }
}

/// Draws the candidates with mark below `lambda`.
///
/// The count is Poisson with mean `λ·L^d`; coordinates are uniform in the box
/// and marks uniform on `[0, λ)` given the count.
pub fn sample_poisson_marks(dim: usize, box_side: f64, lambda: f64, seed: u64) -> Result<MarkedCandidates> {
    check_box(dim, box_side)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("time horizon must be nonnegative, got {lambda}")));
    }
    let mut stream = CandidateStream::new(dim, box_side, seed);
    let mut coords = Vec::new();
    let mut marks = Vec::new();
    let mut buf = vec![0.0; dim];
    loop {
        let t = stream.next_into(&mut buf);
        if t >= lambda {
            break;
        }
        coords.extend_from_slice(&buf);
        marks.push(t);
    }
    Ok(MarkedCandidates { dim, box_side, lambda, seed, coords, marks })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Resolves the graphical construction on an explicit candidate list.
///
/// Candidates are processed by increasing mark, ties broken by lexicographic
/// coordinate order, so the result does not depend on the list order.
pub fn penrose_accept(candidates: &MarkedCandidates, rho: f64) -> Result<PointSet> {
    if !(rho > 0.0) {
        return Err(invalid(format!("rho must be positive, got {rho}")));
    }
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&i, &j| {
        candidates.marks[i]
            .total_cmp(&candidates.marks[j])
            .then_with(|| lex_cmp(candidates.point(i), candidates.point(j)))
    });
    let mut acc = Acceptor::new(candidates.dim, candidates.box_side, rho);
    for i in order {
        acc.offer(candidates.point(i));
    }
    Ok(acc.into_point_set(
        candidates.seed,
        ProcessKind::HardcorePoisson { lambda: candidates.lambda },
        candidates.lambda,
    ))
}

/// Hardcore Poisson process of parameters `(ρ, λ)`.
///
/// Equivalent to `penrose_accept(sample_poisson_marks(..))`, but candidates
/// are consumed as they are generated instead of being stored.
pub fn sample_hardcore_poisson(dim: usize, box_side: f64, rho: f64, lambda: f64, seed: u64) -> Result<PointSet> {
    check_box(dim, box_side)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(invalid(format!("time horizon must be nonnegative, got {lambda}")));
    }
    if !(rho > 0.0) {
        return Err(invalid(format!("rho must be positive, got {rho}")));
    }
    let mut acc = Acceptor::new(dim, box_side, rho);
    let mut driver = StreamDriver::new(dim, box_side, seed);
    while driver.step(&mut acc, lambda).is_some() {}
    Ok(acc.into_point_set(seed, ProcessKind::HardcorePoisson { lambda }, lambda))
}

/// Random parking, approximated by running the candidate stream until the
/// saturation rule triggers.
pub fn sample_random_parking(
    dim: usize,
    box_side: f64,
    rho: f64,
    seed: u64,
    stop: SaturationRule,
) -> Result<PointSet> {
    check_box(dim, box_side)?;
    if !(rho > 0.0) {
        return Err(invalid(format!("rho must be positive, got {rho}")));
    }
    if !(stop.horizon >= 0.0) {
        return Err(invalid("saturation horizon must be nonnegative"));
    }
    let mut acc = Acceptor::new(dim, box_side, rho);
    let mut driver = StreamDriver::new(dim, box_side, seed);
    let mut processed: u64 = 0;
    let mut streak: u64 = 0;
    let horizon = loop {
        let Some((mark, offered, accepted)) = driver.step(&mut acc, f64::INFINITY) else {
            unreachable!("unbounded stream ended");
        };
        processed += offered as u64;
        if accepted > 0 {
            streak = (offered - accepted) as u64;
        } else {
            streak += offered as u64;
        }
        if mark >= stop.horizon && streak >= stop.streak {
            break mark;
        }
        if processed >= stop.budget {
            let partial = acc.into_point_set(seed, ProcessKind::RandomParking, mark);
            return Err(Error::BudgetExceeded { budget: stop.budget, partial: Box::new(partial) });
        }
    };
    Ok(acc.into_point_set(seed, ProcessKind::RandomParking, horizon))
}

/// Estimated jamming constant `Ĵ = ρ^d · intensity` of a random-parking run.
pub fn estimate_jamming(dim: usize, box_side: f64, rho: f64, seed: u64, stop: SaturationRule) -> Result<f64> {
    let ps = sample_random_parking(dim, box_side, rho, seed, stop)?;
    Ok(ps.intensity() * rho.powi(dim as i32))
}

/// Minimum periodic distance over unordered pairs; `+∞` for fewer than two
/// points.
pub fn min_pairwise_distance(ps: &PointSet) -> f64 {
    let n = ps.len();
    if n < 2 {
        return f64::INFINITY;
    }
    let l = ps.box_side;
    if n <= 2048 {
        return brute_min(ps);
    }
    // Pairs closer than the bin width always sit in adjacent bins, so the
    // adjacent-bin minimum is exact once it drops below the width.
    let mut width = if ps.rho > 0.0 { 2.0 * ps.rho } else { l / 16.0 };
    loop {
        let nb = (l / width).floor() as usize;
        if nb < 3 {
            return brute_min(ps);
        }
        let grid = BinGrid::new(ps.dim, l, width);
        let mut heads = vec![u32::MAX; grid.total];
        let mut next = vec![u32::MAX; n];
        for (i, p) in ps.points().enumerate() {
            let b = grid.bin_of(p);
            next[i] = heads[b];
            heads[b] = i as u32;
        }
        let mut best2 = f64::INFINITY;
        let mut bins = Vec::new();
        for (i, p) in ps.points().enumerate() {
            grid.neighbor_bins(p, &mut bins);
            for &b in &bins {
                let mut j = heads[b];
                while j != u32::MAX {
                    if (j as usize) > i {
                        let d2 = periodic_distance2(p, ps.point(j as usize), l);
                        if d2 < best2 {
                            best2 = d2;
                        }
                    }
                    j = next[j as usize];
                }
            }
        }
        let best = best2.sqrt();
        if best <= width {
            return best;
        }
        width *= 2.0;
    }
}

fn brute_min(ps: &PointSet) -> f64 {
    let mut best2 = f64::INFINITY;
    for i in 0..ps.len() {
        for j in i + 1..ps.len() {
            best2 = best2.min(periodic_distance2(ps.point(i), ps.point(j), ps.box_side));
        }
    }
    best2.sqrt()
}

/// Uniform binning of the periodic box with bins at least `min_width` wide.
struct BinGrid {
    per_axis: usize,
    width: f64,
    total: usize,
    offsets: Vec<isize>,
    strides: Vec<usize>,
}

impl BinGrid {
    const MAX_BINS: usize = 1 << 24;

    fn new(dim: usize, box_side: f64, min_width: f64) -> Self {
        let mut per_axis = ((box_side / min_width).floor() as usize).max(1);
        let cap = (Self::MAX_BINS as f64).powf(1.0 / dim as f64).floor() as usize;
        per_axis = per_axis.min(cap.max(1));
        let total = per_axis.pow(dim as u32);
        // With fewer than three bins per axis every bin along that axis is a
        // neighbour; listing each offset once avoids double visits.
        let offsets: Vec<isize> = if per_axis >= 3 {
            // own bin first: it holds the likeliest conflict
            vec![0, -1, 1]
        } else {
            (0..per_axis as isize).collect()
        };
        let strides = (0..dim).map(|a| per_axis.pow((dim - 1 - a) as u32)).collect();
        Self { per_axis, width: box_side / per_axis as f64, total, offsets, strides }
    }

    fn bin_of(&self, x: &[f64]) -> usize {
        x.iter().fold(0usize, |acc, &xi| {
            acc * self.per_axis + ((xi / self.width) as usize).min(self.per_axis - 1)
        })
    }

    /// Fills `out` with the bins adjacent to the one holding `x`.
    fn neighbor_bins(&self, x: &[f64], out: &mut Vec<usize>) {
        out.clear();
        out.push(0);
        let nb = self.per_axis;
        let relative = nb >= 3;
        for (&xi, &stride) in x.iter().zip(&self.strides) {
            let c = ((xi / self.width) as usize).min(nb - 1);
            let len = out.len();
            for (k, &off) in self.offsets.iter().enumerate() {
                let w = if !relative {
                    off as usize
                } else if off < 0 && c == 0 {
                    nb - 1
                } else if off > 0 && c + 1 == nb {
                    0
                } else {
                    c.wrapping_add_signed(off)
                };
                let add = w * stride;
                if k + 1 == self.offsets.len() {
                    out[..len].iter_mut().for_each(|b| *b += add);
                } else {
                    for i in 0..len {
                        out.push(out[i] + add);
                    }
                }
            }
        }
    }
}

/// Sequential acceptance against the set of already accepted points.
struct Acceptor {
    dim: usize,
    box_side: f64,
    rho: f64,
    rho2: f64,
    grid: BinGrid,
    heads: Vec<u32>,
    next: Vec<u32>,
    coords: Vec<f64>,
    bins: Vec<usize>,
}

impl Acceptor {
    fn new(dim: usize, box_side: f64, rho: f64) -> Self {
        let grid = BinGrid::new(dim, box_side, rho);
        Self {
            dim,
            box_side,
            rho,
            rho2: rho * rho,
            heads: vec![u32::MAX; grid.total],
            grid,
            next: Vec::new(),
            coords: Vec::new(),
            bins: Vec::new(),
        }
    }

    fn conflicts(&mut self, x: &[f64]) -> bool {
        self.grid.neighbor_bins(x, &mut self.bins);
        let (dim, l) = (self.dim, self.box_side);
        for &b in &self.bins {
            let mut j = self.heads[b];
            while j != u32::MAX {
                let p = &self.coords[j as usize * dim..(j as usize + 1) * dim];
                if periodic_distance2(x, p, l) < self.rho2 {
                    return true;
                }
                j = self.next[j as usize];
            }
        }
        false
    }

    fn offer(&mut self, x: &[f64]) -> bool {
        if self.conflicts(x) {
            return false;
        }
        let id = self.next.len() as u32;
        let b = self.grid.bin_of(x);
        self.next.push(self.heads[b]);
        self.heads[b] = id;
        self.coords.extend_from_slice(x);
        true
    }

    fn into_point_set(self, seed: u64, kind: ProcessKind, horizon: f64) -> PointSet {
        PointSet {
            dim: self.dim,
            box_side: self.box_side,
            rho: self.rho,
            seed,
            kind,
            achieved_horizon: horizon,
            coords: self.coords,
        }
    }
}

/// Feeds the candidate stream to an acceptor one mark at a time. Candidates
/// sharing a mark are offered in lexicographic order.
struct StreamDriver {
    stream: CandidateStream,
    dim: usize,
    pending: Vec<f64>,
    pending_mark: f64,
    group: Vec<f64>,
}

impl StreamDriver {
    fn new(dim: usize, box_side: f64, seed: u64) -> Self {
        let mut stream = CandidateStream::new(dim, box_side, seed);
        let mut pending = vec![0.0; dim];
        let pending_mark = stream.next_into(&mut pending);
        Self { stream, dim, pending, pending_mark, group: Vec::new() }
    }

    /// Offers every candidate carrying the next mark, provided that mark is
    /// below `limit`. Returns `(mark, offered, accepted)`.
    fn step(&mut self, acc: &mut Acceptor, limit: f64) -> Option<(f64, usize, usize)> {
        let mark = self.pending_mark;
        if mark >= limit {
            return None;
        }
        self.group.clear();
        self.group.extend_from_slice(&self.pending);
        loop {
            self.pending_mark = self.stream.next_into(&mut self.pending);
            if self.pending_mark != mark {
                break;
            }
            self.group.extend_from_slice(&self.pending);
        }
        let dim = self.dim;
        let count = self.group.len() / dim;
        let mut accepted = 0;
        if count == 1 {
            accepted += acc.offer(&self.group) as usize;
        } else {
            let mut order: Vec<usize> = (0..count).collect();
            let g = &self.group;
            order.sort_by(|&a, &b| lex_cmp(&g[a * dim..(a + 1) * dim], &g[b * dim..(b + 1) * dim]));
            for i in order {
                accepted += acc.offer(&self.group[i * dim..(i + 1) * dim]) as usize;
            }
        }
        Some((mark, count, accepted))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_horizon_gives_no_candidates() {
        let c = sample_poisson_marks(3, 10.0, 0.0, 1).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn candidates_are_deterministic_and_in_range() {
        let a = sample_poisson_marks(2, 5.0, 3.0, 11).unwrap();
        let b = sample_poisson_marks(2, 5.0, 3.0, 11).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
        for i in 0..a.len() {
            assert!(a.point(i).iter().all(|&x| (0.0..5.0).contains(&x)));
            assert!((0.0..=3.0).contains(&a.mark(i)));
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(matches!(sample_poisson_marks(3, 0.0, 1.0, 1), Err(Error::InvalidParameter(_))));
        assert!(matches!(sample_poisson_marks(3, 1.0, -1.0, 1), Err(Error::InvalidParameter(_))));
        assert!(matches!(sample_hardcore_poisson(0, 1.0, 1.0, 1.0, 1), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn single_candidate_accepted() {
        let c = MarkedCandidates::from_parts(2, 10.0, 1.0, &[vec![1.0, 2.0]], &[0.9]).unwrap();
        let ps = penrose_accept(&c, 3.0).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps.point(0), &[1.0, 2.0]);
    }

    #[test]
    fn earlier_mark_wins_conflict() {
        // periodic distance 1.5 through the wrap
        let c = MarkedCandidates::from_parts(1, 10.0, 1.0, &[vec![9.5], vec![1.0]], &[0.7, 0.3]).unwrap();
        let ps = penrose_accept(&c, 2.0).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps.point(0), &[1.0]);
    }

    #[test]
    fn chain_of_three_keeps_both_ends() {
        // 1-2 and 2-3 conflict, 1-3 do not
        let pts = [vec![0.0], vec![1.5], vec![3.0]];
        let c = MarkedCandidates::from_parts(1, 20.0, 1.0, &pts, &[0.1, 0.2, 0.3]).unwrap();
        let ps = penrose_accept(&c, 2.0).unwrap();
        let got: Vec<f64> = ps.points().map(|p| p[0]).collect();
        assert_eq!(got, vec![0.0, 3.0]);
    }

    #[test]
    fn tie_broken_lexicographically() {
        let pts = [vec![4.0, 0.0], vec![3.0, 1.0]];
        let c = MarkedCandidates::from_parts(2, 10.0, 1.0, &pts, &[0.5, 0.5]).unwrap();
        let ps = penrose_accept(&c, 2.0).unwrap();
        assert_eq!(ps.len(), 1);
        assert_eq!(ps.point(0), &[3.0, 1.0]);
    }

    #[test]
    fn streamed_sampler_matches_list_construction() {
        for seed in 0..5 {
            let c = sample_poisson_marks(2, 12.0, 0.8, seed).unwrap();
            let a = penrose_accept(&c, 1.7).unwrap();
            let b = sample_hardcore_poisson(2, 12.0, 1.7, 0.8, seed).unwrap();
            assert_eq!(a.coords, b.coords);
        }
    }

    #[test]
    fn parking_on_short_circle_fits_one_point() {
        for seed in 0..20 {
            let rule = SaturationRule::default_for(1, 3.0, 2.0);
            let ps = sample_random_parking(1, 3.0, 2.0, seed, rule).unwrap();
            assert_eq!(ps.len(), 1);
            assert!(ps.achieved_horizon >= rule.horizon);
        }
    }

    #[test]
    fn parking_budget_error_carries_partial_set() {
        let rule = SaturationRule { horizon: 1e9, streak: 10, budget: 500 };
        match sample_random_parking(2, 20.0, 1.0, 3, rule) {
            Err(Error::BudgetExceeded { budget, partial }) => {
                assert_eq!(budget, 500);
                assert!(!partial.is_empty());
                assert!(min_pairwise_distance(&partial) >= 1.0);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn min_distance_examples() {
        let ps = PointSet::from_points(3, 10.0, 0.5, &[vec![0.0, 0.0, 0.0], vec![3.0, 0.0, 0.0]]).unwrap();
        assert_eq!(min_pairwise_distance(&ps), 3.0);
        let ps = PointSet::from_points(3, 10.0, 0.5, &[vec![0.0, 0.0, 0.0], vec![9.0, 0.0, 0.0]]).unwrap();
        assert!((min_pairwise_distance(&ps) - 1.0).abs() < 1e-12);
        let ps = PointSet::from_points(3, 10.0, 0.5, &[vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(min_pairwise_distance(&ps), f64::INFINITY);
    }

    #[test]
    fn binned_min_distance_matches_brute_force() {
        let ps = sample_hardcore_poisson(2, 200.0, 1.0, 0.2, 9).unwrap();
        assert!(ps.len() > 2048);
        assert_eq!(min_pairwise_distance(&ps), brute_min(&ps));
    }

    #[test]
    fn explicit_set_rejects_overlap() {
        assert!(PointSet::from_points(2, 10.0, 3.0, &[vec![0.0, 0.0], vec![1.0, 1.0]]).is_err());
    }
}
