//! Maximal monotone branches T_n(x), their image sizes r_n(x), symbol
//! sequences, the depth-n monotonicity partition and component censuses.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::dd::Dd;
use crate::error::{Error, Result};
use crate::maps::{IntervalDomain, IntervalMap, MapSequence};

/// Distance below which an orbit point counts as sitting on a cut point.
pub const HIT_TOL: f64 = 1e-12;
/// Guard band for threshold comparisons on r values.
pub const GUARD: f64 = 1e-9;
/// Census pieces shorter than this are treated as cut points and dropped.
const MIN_PIECE: f64 = 1e-13;
pub const DEFAULT_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationReason {
    HitCritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Termination {
    pub step: usize,
    pub reason: TerminationReason,
}

/// One level of the branch: the image interval of T at step j after
/// trimming at the cuts of f_j, the map f_j, and f^j(x).
#[derive(Debug, Clone, PartialEq)]
struct Level {
    lo: f64,
    hi: f64,
    anchor: f64,
    map: IntervalMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneBranch {
    pub x: f64,
    /// Depth actually reached (smaller than requested when terminated).
    pub n: usize,
    pub t_lo: f64,
    pub t_hi: f64,
    pub img_lo: f64,
    pub img_hi: f64,
    /// Image of the anchor, fⁿ(x).
    pub image: f64,
    /// +1 when fⁿ is increasing on the branch, -1 otherwise.
    pub orientation: i8,
    pub r_history: Vec<f64>,
    pub terminated: Option<Termination>,
    /// Step at which each side of T was last cut, with the cut value.
    pub lo_cut: Option<(usize, f64)>,
    pub hi_cut: Option<(usize, f64)>,
    #[serde(skip)]
    levels: Vec<Level>,
}

impl MonotoneBranch {
    pub fn r(&self, i: usize) -> Option<f64> {
        i.checked_sub(1).and_then(|k| self.r_history.get(k).copied())
    }

    /// Solves f^level(y) = value for y inside T through the chain of
    /// recorded monotone pieces, one inverse bisection per step. Values
    /// outside the image clamp to the corresponding endpoint.
    pub fn pull_back(&self, level: usize, value: f64) -> f64 {
        self.preimage_chain(level, value)[0]
    }

    /// The chain u_0, …, u_level with u_level = value and f_i(u_i) = u_{i+1}.
    pub fn preimage_chain(&self, level: usize, value: f64) -> Vec<f64> {
        assert!(level <= self.levels.len(), "level {level} beyond branch depth {}", self.levels.len());
        let mut chain = vec![0.0; level + 1];
        chain[level] = value;
        let mut target = value;
        for i in (0..level).rev() {
            target = self.levels[i].invert(target);
            chain[i] = target;
        }
        chain
    }

    /// Pieces on which f^i is monotone, for i < n: the trimmed intervals.
    pub fn level_interval(&self, i: usize) -> (f64, f64) {
        (self.levels[i].lo, self.levels[i].hi)
    }

    pub fn level_map(&self, i: usize) -> &IntervalMap {
        &self.levels[i].map
    }

    /// Endpoints of T refined to double-double precision: Newton steps on
    /// f^j(y) = c, with (j, c) the last cut on each side, evaluated along
    /// the recorded branch. Boundary endpoints are returned as they are.
    pub fn refined_endpoints(&self) -> (Dd, Dd) {
        let refine = |cut: Option<(usize, f64)>, start: f64| match cut {
            Some((j, c)) => self.newton_dd(j, c, start),
            None => Dd::new(start),
        };
        (refine(self.lo_cut, self.t_lo), refine(self.hi_cut, self.t_hi))
    }

    fn newton_dd(&self, level: usize, target: f64, start: f64) -> Dd {
        let mut y = Dd::new(start);
        for _ in 0..3 {
            let mut v = y;
            let mut slope = 1.0;
            for lvl in &self.levels[..level] {
                slope *= lvl.map.d1(v.to_f64());
                v = match lvl.map.family().eval_dd(v, lvl.anchor) {
                    Some(w) => w,
                    None => return Dd::new(start),
                };
            }
            if slope == 0.0 || !slope.is_finite() {
                break;
            }
            y = y - (v - target) / slope;
        }
        y
    }

    /// log|Dfⁿ| at the point of T whose n-th image is `value`.
    pub fn log_derivative_at_image(&self, value: f64) -> f64 {
        let chain = self.preimage_chain(self.n, value);
        (0..self.n).map(|i| self.levels[i].map.d1(chain[i]).abs().ln()).sum()
    }
}

impl Level {
    fn increasing(&self) -> bool {
        self.map.d1(self.anchor) > 0.0
    }

    /// Inverse of the map on [lo, hi] by bisection to machine precision.
    fn invert(&self, target: f64) -> f64 {
        let inc = self.increasing();
        let (mut a, mut b) = (self.lo, self.hi);
        loop {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            let v = self.map.eval_on_branch(m, self.anchor);
            if (v < target) == inc {
                a = m;
            } else {
                b = m;
            }
        }
        // Endpoint targets are returned exactly.
        let fa = self.map.eval_on_branch(self.lo, self.anchor);
        let fb = self.map.eval_on_branch(self.hi, self.anchor);
        if target == fa {
            return self.lo;
        }
        if target == fb {
            return self.hi;
        }
        0.5 * (a + b)
    }
}

/// Light-weight forward state: image interval and position only. Used by
/// Monte-Carlo loops that need r_j but never the endpoints of T.
#[derive(Debug, Clone, Copy)]
pub struct BranchState {
    pub pos: f64,
    pub lo: f64,
    pub hi: f64,
    pub step: usize,
}

/// Outcome of one step of [`BranchState::advance`].
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub r: f64,
    /// |f_j'(f^j(x))| at the step just taken.
    pub derivative: f64,
    pub cut_lo: Option<f64>,
    pub cut_hi: Option<f64>,
    /// The trimmed interval the map was applied to.
    pub piece: (f64, f64),
    pub increasing: bool,
}

impl BranchState {
    pub fn new(domain: IntervalDomain, x: f64) -> Self {
        Self { pos: x, lo: domain.lo, hi: domain.hi, step: 0 }
    }

    /// r_0: distance of x to the boundary of I₀.
    pub fn r(&self) -> f64 {
        (self.pos - self.lo).min(self.hi - self.pos).max(0.0)
    }

    /// Trims at the cuts of `map` nearest to the current position, then
    /// applies the map. Fails when the position sits on a cut point.
    #[inline]
    pub fn advance(&mut self, map: &IntervalMap) -> Result<StepInfo> {
        let pos = self.pos;
        let mut cut_lo = None;
        let mut cut_hi = None;
        for &c in map.cut_points() {
            if (pos - c).abs() <= HIT_TOL {
                return Err(Error::HitCritical { step: self.step });
            }
            if c < pos && c > self.lo && cut_lo.is_none_or(|l| c > l) {
                cut_lo = Some(c);
            }
            if c > pos && c < self.hi && cut_hi.is_none_or(|h| c < h) {
                cut_hi = Some(c);
            }
        }
        if let Some(c) = cut_lo {
            self.lo = c;
        }
        if let Some(c) = cut_hi {
            self.hi = c;
        }
        let piece = (self.lo, self.hi);
        let d = map.d1(pos);
        let increasing = d > 0.0;
        let a = map.eval_on_branch(self.lo, pos);
        let b = map.eval_on_branch(self.hi, pos);
        let p = map.eval(pos);
        if increasing {
            self.lo = a;
            self.hi = b;
        } else {
            self.lo = b;
            self.hi = a;
        }
        self.pos = p;
        self.step += 1;
        Ok(StepInfo { r: self.r(), derivative: d.abs(), cut_lo, cut_hi, piece, increasing })
    }
}

/// Tracks T_j(x) for j ≤ n, stopping early at a critical hit. The returned
/// branch records the termination instead of failing.
pub fn track_branch_partial(seq: &MapSequence, x: f64, n: usize) -> Result<MonotoneBranch> {
    let domain = seq.domain();
    if !(domain.lo < x && x < domain.hi) {
        return Err(Error::Precondition(format!("anchor {x} is not interior to [{}, {}]", domain.lo, domain.hi)));
    }
    let mut state = BranchState::new(domain, x);
    let mut orientation: i8 = 1;
    let mut lo_cut = None;
    let mut hi_cut = None;
    let mut r_history = Vec::with_capacity(n);
    let mut levels = Vec::with_capacity(n);
    let mut terminated = None;
    for map in seq.iter().take(n) {
        let j = state.step;
        let anchor = state.pos;
        let info = match state.advance(&map) {
            Ok(info) => info,
            Err(_) => {
                terminated = Some(Termination { step: j, reason: TerminationReason::HitCritical });
                break;
            }
        };
        // A cut of the image's lower end moves the left end of T when f^j
        // preserves orientation, the right end otherwise.
        if let Some(c) = info.cut_lo {
            if orientation > 0 {
                lo_cut = Some((j, c));
            } else {
                hi_cut = Some((j, c));
            }
        }
        if let Some(c) = info.cut_hi {
            if orientation > 0 {
                hi_cut = Some((j, c));
            } else {
                lo_cut = Some((j, c));
            }
        }
        levels.push(Level { lo: info.piece.0, hi: info.piece.1, anchor, map });
        if !info.increasing {
            orientation = -orientation;
        }
        r_history.push(info.r);
    }
    let mut branch = MonotoneBranch {
        x,
        n: levels.len(),
        t_lo: domain.lo,
        t_hi: domain.hi,
        img_lo: state.lo,
        img_hi: state.hi,
        image: state.pos,
        orientation,
        r_history,
        terminated,
        lo_cut,
        hi_cut,
        levels,
    };
    if let Some((j, c)) = branch.lo_cut {
        branch.t_lo = branch.pull_back(j, c);
    }
    if let Some((j, c)) = branch.hi_cut {
        branch.t_hi = branch.pull_back(j, c);
    }
    Ok(branch)
}

/// T_n(x) with its r-history; fails with `HitCritical` when the orbit lands
/// on a cut point within the first n steps.
pub fn track_branch(seq: &MapSequence, x: f64, n: usize) -> Result<MonotoneBranch> {
    let branch = track_branch_partial(seq, x, n)?;
    match branch.terminated {
        Some(t) => Err(Error::HitCritical { step: t.step }),
        None => Ok(branch),
    }
}

/// a_i = 1 if r_i ≥ δ, 0 otherwise, for i = 1..n.
pub fn symbol_sequence(branch: &MonotoneBranch, delta: f64) -> Result<Vec<u8>> {
    if let Some(t) = branch.terminated {
        return Err(Error::Terminated { step: t.step, depth: branch.n });
    }
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!("δ = {delta} must be positive")));
    }
    Ok(branch.r_history.iter().map(|&r| u8::from(r >= delta)).collect())
}

/// One cell of the monotonicity partition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub lo: f64,
    pub hi: f64,
    pub img_lo: f64,
    pub img_hi: f64,
    pub orientation: i8,
    /// Index of the enclosing cell one level up (0 at depth 0).
    pub parent: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchPartition {
    pub depth: usize,
    maps: Vec<IntervalMap>,
    /// levels[m] holds the depth-m cells; levels[0] is I₀ itself.
    levels: Vec<Vec<Cell>>,
}

impl BranchPartition {
    pub fn cells(&self) -> &[Cell] {
        &self.levels[self.depth]
    }

    pub fn cells_at(&self, depth: usize) -> &[Cell] {
        &self.levels[depth]
    }

    pub fn endpoints(&self) -> Vec<f64> {
        let cells = self.cells();
        let mut e: Vec<f64> = cells.iter().map(|c| c.lo).collect();
        e.push(cells.last().map(|c| c.hi).unwrap_or(0.0));
        e
    }

    /// Index of the cell containing x, if x is not an endpoint.
    pub fn locate(&self, x: f64) -> Option<usize> {
        let cells = self.cells();
        let i = cells.partition_point(|c| c.hi <= x);
        cells.get(i).filter(|c| c.lo < x && x < c.hi).map(|_| i)
    }

    /// Ancestor of a depth-`depth` cell at a shallower level.
    pub fn ancestor(&self, depth: usize, mut index: usize, level: usize) -> usize {
        for d in (level + 1..=depth).rev() {
            index = self.levels[d][index].parent;
        }
        index
    }

    pub fn longest_cell(&self) -> f64 {
        self.cells().iter().map(|c| c.hi - c.lo).fold(0.0, f64::max)
    }

    /// f^i(y) for y in the depth-`depth` cell `index`, evaluated on the
    /// branch of that cell.
    pub fn compose(&self, depth: usize, index: usize, i: usize, y: f64) -> f64 {
        let cell = self.levels[depth][index];
        let mid = 0.5 * (cell.lo + cell.hi);
        compose_on_branch(&self.maps[..i], y, mid)
    }
}

/// f_{k-1}∘…∘f_0(x), with every step evaluated on the branch of the
/// orbit of `anchor` (relevant only for discontinuous maps).
pub fn compose_on_branch(maps: &[IntervalMap], mut x: f64, mut anchor: f64) -> f64 {
    for m in maps {
        x = m.eval_on_branch(x, anchor);
        anchor = m.eval(anchor);
    }
    x
}

/// Solves f^i(y) = target on (lo, hi) where f^i is monotone with the given
/// orientation.
fn solve_on_cell(maps: &[IntervalMap], lo: f64, hi: f64, orientation: i8, target: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    let (mut a, mut b) = (lo, hi);
    loop {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let v = compose_on_branch(maps, m, mid);
        if (v < target) == (orientation > 0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Refines I₀ level by level at the pull-backs of the cut points.
pub fn monotonicity_partition(seq: &MapSequence, n: usize, cap: usize) -> Result<BranchPartition> {
    if n == 0 {
        return Err(Error::Precondition("partition depth must be at least 1".into()));
    }
    let domain = seq.domain();
    let maps = seq.maps(n);
    let mut levels = vec![vec![Cell {
        lo: domain.lo,
        hi: domain.hi,
        img_lo: domain.lo,
        img_hi: domain.hi,
        orientation: 1,
        parent: 0,
    }]];
    for (m, map) in maps.iter().enumerate() {
        let mut next = Vec::new();
        for (pi, cell) in levels[m].iter().enumerate() {
            let inner: Vec<f64> =
                map.cut_points().iter().copied().filter(|&c| cell.img_lo < c && c < cell.img_hi).collect();
            // Pieces in image coordinates, ordered along the domain.
            let mut img_bounds = vec![cell.img_lo];
            img_bounds.extend(inner.iter().copied());
            img_bounds.push(cell.img_hi);
            let mut dom_bounds: Vec<f64> = img_bounds
                .iter()
                .enumerate()
                .map(|(k, &v)| {
                    if k == 0 {
                        if cell.orientation > 0 {
                            cell.lo
                        } else {
                            cell.hi
                        }
                    } else if k + 1 == img_bounds.len() {
                        if cell.orientation > 0 {
                            cell.hi
                        } else {
                            cell.lo
                        }
                    } else {
                        solve_on_cell(&maps[..m], cell.lo, cell.hi, cell.orientation, v)
                    }
                })
                .collect();
            if cell.orientation < 0 {
                img_bounds.reverse();
                dom_bounds.reverse();
            }
            for k in 0..dom_bounds.len() - 1 {
                let (u, v) = (img_bounds[k], img_bounds[k + 1]);
                let anchor = 0.5 * (u + v);
                let fu = map.eval_on_branch(u, anchor);
                let fv = map.eval_on_branch(v, anchor);
                let inc = map.d1(anchor) > 0.0;
                let orientation = if inc { cell.orientation } else { -cell.orientation };
                next.push(Cell {
                    lo: dom_bounds[k],
                    hi: dom_bounds[k + 1],
                    img_lo: fu.min(fv),
                    img_hi: fu.max(fv),
                    orientation,
                    parent: pi,
                });
            }
            if next.len() > cap {
                return Err(Error::CapExceeded { cap });
            }
        }
        levels.push(next);
    }
    Ok(BranchPartition { depth: n, maps, levels })
}

/// Word pattern for census queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WordQuery {
    Exact(Vec<u8>),
    Any,
}

/// One connected component of some C_δ(a₁,…,aₙ).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub lo: f64,
    pub hi: f64,
    pub word: String,
    pub cell: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WordStat {
    pub component_count: usize,
    pub total_measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub depth: usize,
    pub delta: f64,
    pub components: Vec<Component>,
    pub words: BTreeMap<String, WordStat>,
}

impl Census {
    pub fn count(&self, word: &str) -> usize {
        self.words.get(word).map_or(0, |s| s.component_count)
    }

    pub fn total_measure(&self) -> f64 {
        self.words.values().map(|s| s.total_measure).sum()
    }

    /// CSV with columns word, component_count, total_measure.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(format!("csv: {e}"));
        w.write_record(["word", "component_count", "total_measure"]).map_err(io)?;
        for (word, s) in &self.words {
            w.write_record([word.clone(), s.component_count.to_string(), format!("{:.17e}", s.total_measure)])
                .map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(format!("csv: {e}")))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

fn word_string(bits: &[u8]) -> String {
    bits.iter().map(|&b| if b == 1 { '1' } else { '0' }).collect()
}

/// Full census of C_δ words at depth n: every depth-n cell is cut at the
/// points where some r_i crosses δ, and pieces with equal words merge.
pub fn census(partition: &BranchPartition, delta: f64) -> Result<Census> {
    if !(delta > 0.0) {
        return Err(Error::Precondition(format!("δ = {delta} must be positive")));
    }
    let n = partition.depth;
    let mut components = Vec::new();
    for (ci, cell) in partition.cells().iter().enumerate() {
        let mid = 0.5 * (cell.lo + cell.hi);
        // Ancestor images and orientations for i = 1..n.
        let ancestors: Vec<Cell> =
            (1..=n).map(|i| partition.levels[i][partition.ancestor(n, ci, i)]).collect();
        let mut breaks = vec![cell.lo, cell.hi];
        for i in 1..=n {
            let anc = ancestors[i - 1];
            let maps = &partition.maps[..i];
            let p = compose_on_branch(maps, cell.lo, mid);
            let q = compose_on_branch(maps, cell.hi, mid);
            let (lo_img, hi_img) = (p.min(q), p.max(q));
            for t in [anc.img_lo + delta, anc.img_hi - delta] {
                if lo_img < t && t < hi_img {
                    breaks.push(solve_on_cell(maps, cell.lo, cell.hi, anc.orientation, t));
                }
            }
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut current: Option<Component> = None;
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b - a < MIN_PIECE {
                continue;
            }
            let y = 0.5 * (a + b);
            let bits: Vec<u8> = (1..=n)
                .map(|i| {
                    let anc = ancestors[i - 1];
                    let v = compose_on_branch(&partition.maps[..i], y, mid);
                    let r = (v - anc.img_lo).min(anc.img_hi - v);
                    u8::from(r >= delta - GUARD)
                })
                .collect();
            let word = word_string(&bits);
            match current.as_mut() {
                Some(c) if c.word == word => c.hi = b,
                _ => {
                    if let Some(c) = current.take() {
                        components.push(c);
                    }
                    current = Some(Component { lo: a, hi: b, word, cell: ci });
                }
            }
        }
        if let Some(c) = current.take() {
            components.push(c);
        }
    }
    let mut words: BTreeMap<String, WordStat> = BTreeMap::new();
    for c in &components {
        let s = words.entry(c.word.clone()).or_default();
        s.component_count += 1;
        s.total_measure += c.hi - c.lo;
    }
    Ok(Census { depth: n, delta, components, words })
}

/// Component census for one word (or all words) at depth n.
pub fn component_census(seq: &MapSequence, n: usize, delta: f64, word: &WordQuery) -> Result<Census> {
    if let WordQuery::Exact(w) = word {
        if w.len() != n || w.iter().any(|&b| b > 1) {
            return Err(Error::Precondition(format!("word of length {} does not fit depth {n}", w.len())));
        }
    }
    let partition = monotonicity_partition(seq, n, DEFAULT_CAP)?;
    let mut c = census(&partition, delta)?;
    if let WordQuery::Exact(w) = word {
        let key = word_string(w);
        c.components.retain(|comp| comp.word == key);
        c.words.retain(|k, _| *k == key);
    }
    Ok(c)
}

/// One checked instance of a counting claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimInstance {
    pub prefix: String,
    pub lhs: usize,
    pub rhs: usize,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub delta: f64,
    pub max_depth: usize,
    /// #C(w0) + #C(w1) ≤ 3(p+1)·#C(w) for every realized prefix w.
    pub splitting: Vec<ClaimInstance>,
    /// For J a component of C(w0) with f^{s+i}(J) free of cut points,
    /// the number of components of C(w0^{i+1}) inside J is at most i+1.
    pub zero_runs: Vec<ClaimInstance>,
}

impl ClaimReport {
    pub fn all_hold(&self) -> bool {
        self.splitting.iter().chain(&self.zero_runs).all(|c| c.holds)
    }
}

/// Checks both counting claims on every realized instance up to depth
/// `max_depth`.
pub fn check_claims(seq: &MapSequence, max_depth: usize, delta: f64, cap: usize) -> Result<ClaimReport> {
    let partition = monotonicity_partition(seq, max_depth, cap)?;
    let p = seq.max_critical_count();
    let censuses: Vec<Census> = (1..=max_depth)
        .map(|d| {
            let sub = BranchPartition {
                depth: d,
                maps: partition.maps[..d].to_vec(),
                levels: partition.levels[..=d].to_vec(),
            };
            census(&sub, delta)
        })
        .collect::<Result<_>>()?;
    let count_at = |word: &str| -> usize {
        if word.is_empty() {
            1
        } else {
            censuses[word.len() - 1].count(word)
        }
    };

    let mut splitting = Vec::new();
    let mut prefixes = vec![String::new()];
    for s in 0..max_depth {
        if s > 0 {
            prefixes = censuses[s - 1].words.keys().cloned().collect();
        }
        for w in &prefixes {
            let lhs = count_at(&format!("{w}0")) + count_at(&format!("{w}1"));
            let rhs = 3 * (p + 1) * count_at(w);
            splitting.push(ClaimInstance { prefix: w.clone(), lhs, rhs, holds: lhs <= rhs });
        }
    }

    let mut zero_runs = Vec::new();
    for s1 in 1..max_depth {
        for j in censuses[s1 - 1].components.iter().filter(|c| c.word.ends_with('0')) {
            for i in 1..=max_depth - s1 {
                let depth = s1 + i;
                let has_cut = partition.levels[depth].iter().any(|c| j.lo < c.lo && c.lo < j.hi);
                if has_cut {
                    break;
                }
                let word = format!("{}{}", j.word, "0".repeat(i));
                let lhs = censuses[depth - 1]
                    .components
                    .iter()
                    .filter(|c| c.word == word && j.lo <= 0.5 * (c.lo + c.hi) && 0.5 * (c.lo + c.hi) <= j.hi)
                    .count();
                zero_runs.push(ClaimInstance { prefix: word, lhs, rhs: i + 1, holds: lhs <= i + 1 });
            }
        }
    }
    Ok(ClaimReport { delta, max_depth, splitting, zero_runs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{Family, IntervalMap};
    use approx::assert_abs_diff_eq;

    fn logistic() -> MapSequence {
        MapSequence::constant(IntervalMap::logistic())
    }

    #[test]
    fn logistic_quarter_depth_one() {
        let b = track_branch(&logistic(), 0.25, 1).unwrap();
        assert_abs_diff_eq!(b.t_lo, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.t_hi, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(b.img_lo, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.img_hi, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.r_history[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn logistic_quarter_depth_two() {
        let b = track_branch(&logistic(), 0.25, 2).unwrap();
        assert_abs_diff_eq!(b.t_lo, (2.0 - 2f64.sqrt()) / 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.t_hi, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(b.r_history[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(b.r_history[1], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn critical_free_sequence_never_cuts() {
        let f = IntervalMap::new(Family::Affine { slope: 0.5, intercept: 0.2 }, IntervalDomain::unit()).unwrap();
        let b = track_branch(&MapSequence::constant(f), 0.3, 5).unwrap();
        assert_eq!((b.t_lo, b.t_hi), (0.0, 1.0));
        let mut y: f64 = 0.3;
        let (mut lo, mut hi) = (0.0, 1.0);
        for r in &b.r_history {
            y = 0.5 * y + 0.2;
            lo = 0.5 * lo + 0.2;
            hi = 0.5 * hi + 0.2;
            assert_abs_diff_eq!(*r, (y - lo).min(hi - y), epsilon = 1e-15);
        }
    }

    #[test]
    fn anchor_on_critical_point() {
        assert_eq!(track_branch(&logistic(), 0.5, 1), Err(Error::HitCritical { step: 0 }));
        let partial = track_branch_partial(&logistic(), 0.5, 3).unwrap();
        assert_eq!(partial.terminated.map(|t| t.step), Some(0));
        assert!(partial.r_history.is_empty());
    }

    #[test]
    fn symbols_from_quarter_branch() {
        let b = track_branch(&logistic(), 0.25, 2).unwrap();
        assert_eq!(symbol_sequence(&b, 0.1).unwrap(), vec![1, 1]);
        assert_eq!(symbol_sequence(&b, 0.3).unwrap(), vec![0, 0]);
        assert_eq!(symbol_sequence(&b, 1.5).unwrap(), vec![0, 0]);
        let partial = track_branch_partial(&logistic(), 0.5, 2).unwrap();
        assert!(matches!(symbol_sequence(&partial, 0.1), Err(Error::Terminated { .. })));
    }

    #[test]
    fn partition_depths_one_and_two() {
        let p1 = monotonicity_partition(&logistic(), 1, DEFAULT_CAP).unwrap();
        assert_eq!(p1.endpoints(), vec![0.0, 0.5, 1.0]);
        let p2 = monotonicity_partition(&logistic(), 2, DEFAULT_CAP).unwrap();
        let e = p2.endpoints();
        let want = [0.0, (2.0 - 2f64.sqrt()) / 4.0, 0.5, (2.0 + 2f64.sqrt()) / 4.0, 1.0];
        assert_eq!(e.len(), 5);
        for (a, b) in e.iter().zip(want) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn critical_free_partition_is_one_cell() {
        let f = IntervalMap::new(Family::Affine { slope: 0.5, intercept: 0.2 }, IntervalDomain::unit()).unwrap();
        let p = monotonicity_partition(&MapSequence::constant(f), 5, DEFAULT_CAP).unwrap();
        assert_eq!(p.cells().len(), 1);
    }

    #[test]
    fn cap_is_enforced() {
        assert_eq!(monotonicity_partition(&logistic(), 6, 10), Err(Error::CapExceeded { cap: 10 }));
    }

    #[test]
    fn depth_one_census() {
        let c = component_census(&logistic(), 1, 0.1, &WordQuery::Exact(vec![1])).unwrap();
        assert_eq!(c.count("1"), 2);
        let all = component_census(&logistic(), 3, 0.1, &WordQuery::Any).unwrap();
        assert_abs_diff_eq!(all.total_measure(), 1.0, epsilon = 1e-12);
        assert!(component_census(&logistic(), 1, 0.1, &WordQuery::Exact(vec![1, 0])).is_err());
    }

    #[test]
    fn census_csv_has_header() {
        let c = component_census(&logistic(), 2, 0.1, &WordQuery::Any).unwrap();
        let csv = c.to_csv().unwrap();
        assert!(csv.starts_with("word,component_count,total_measure\n"));
        assert_eq!(csv.lines().count(), c.words.len() + 1);
    }
}
