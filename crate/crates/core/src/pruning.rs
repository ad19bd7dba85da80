//! Pruning a max-plus sum down to `k` forms.
//!
//! The loss of replacing the full sum `φ` by a single member `φ_j` at a
//! point is the normalized gap
//!
//! ```text
//! dist(x; j) = (φ(x) − φ_j(x)) / (1 + |x|²)
//! ```
//!
//! which is nonnegative, vanishes for the active form, and orders forms the
//! same way their values do. Keeping a subset `S` is then a facility
//! location problem: forms are facilities, points are clients. Four
//! strategies are provided:
//!
//! - `sort-upper`: keep the `k` largest SDP upper bounds `ν̄_j`;
//! - `sort-lower`: keep the `k` largest lower bounds `ν̲_j` obtained from the
//!   rounded witness pool `X′`;
//! - `jv`: Jain-Vazirani primal-dual facility location on `X′`, with the
//!   opening cost bisected to land on exactly `k` facilities;
//! - `greedy`: the greedy heuristic for discrete k-median on `X′`.
//!
//! `brute` enumerates every subset and serves as the exact reference.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use itertools::Itertools;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadform::{HomogenizedForm, MaxPlusApprox};
use crate::sdpsolve::{self, ImportanceSdp, SdpOptions, SdpSolution, SdpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrunerKind {
    SortUpper,
    SortLower,
    Jv,
    Greedy,
    Brute,
    None,
}

impl PrunerKind {
    pub const ALL: [PrunerKind; 6] = [
        PrunerKind::SortUpper,
        PrunerKind::SortLower,
        PrunerKind::Jv,
        PrunerKind::Greedy,
        PrunerKind::Brute,
        PrunerKind::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrunerKind::SortUpper => "sort-upper",
            PrunerKind::SortLower => "sort-lower",
            PrunerKind::Jv => "jv",
            PrunerKind::Greedy => "greedy",
            PrunerKind::Brute => "brute",
            PrunerKind::None => "none",
        }
    }

    /// Whether the method works on the rounded witness pool.
    pub fn needs_witnesses(self) -> bool {
        matches!(self, PrunerKind::Jv | PrunerKind::Greedy | PrunerKind::Brute)
    }
}

impl fmt::Display for PrunerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PrunerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PrunerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown pruner '{s}' (expected one of: {})",
                    PrunerKind::ALL.iter().map(|k| k.name()).join(", ")
                ))
            })
    }
}

/// Upper limit on subsets enumerated by the brute-force pruner.
pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone)]
pub struct PruneConfig {
    pub kind: PrunerKind,
    /// Gaussian draws per form when building the witness pool.
    pub samples: usize,
    pub sdp: SdpOptions,
    pub brute_limit: u128,
}

impl PruneConfig {
    pub fn new(kind: PrunerKind) -> Self {
        PruneConfig {
            kind,
            samples: 100,
            sdp: SdpOptions::default(),
            brute_limit: BRUTE_FORCE_LIMIT,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PruneInstance {
    pub forms: MaxPlusApprox,
    pub k: usize,
    pub witnesses: Vec<Vec<f64>>,
    pub seed: u64,
}

impl PruneInstance {
    pub fn new(forms: MaxPlusApprox, k: usize, witnesses: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        if k == 0 || k >= forms.len() {
            return Err(Error::InvalidArgument(format!(
                "budget k = {k} must satisfy 0 < k < {}",
                forms.len()
            )));
        }
        if let Some(w) = witnesses.iter().find(|w| w.len() != forms.dim()) {
            return Err(Error::dim("witness point", forms.dim(), w.len()));
        }
        Ok(PruneInstance {
            forms,
            k,
            witnesses,
            seed,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Score {
    /// Per-form bounds used for sorting (`+∞` marks an SDP failure).
    Bounds(Vec<f64>),
    /// Discrete k-median cost of the kept set on the witness pool.
    KMedian(f64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PruneDiagnostics {
    pub iterations: usize,
    /// `(opening cost, open facility count)` for each J-V evaluation.
    pub lambda_trace: Vec<(f64, usize)>,
    /// Forms whose SDP failed; these are never pruned by the sorting methods.
    pub sdp_failures: Vec<usize>,
    pub upper_bounds: Vec<f64>,
    pub lower_bounds: Vec<f64>,
    /// The witness pool `X′` when one was generated.
    pub witnesses: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneResult {
    /// Kept indices, ascending, exactly `k` of them.
    pub kept: Vec<usize>,
    pub method: PrunerKind,
    pub score: Score,
    pub diagnostics: PruneDiagnostics,
}

/// Normalized loss of approximating `v` by its `j`-th form at `x`.
pub fn loss_distance(v: &MaxPlusApprox, x: &[f64], j: usize) -> Result<f64> {
    if j >= v.len() {
        return Err(Error::IndexOutOfRange { index: j, len: v.len() });
    }
    let (max, _) = v.eval_max(x)?;
    Ok(loss_unchecked(v, max, x, j))
}

#[inline]
fn loss_unchecked(v: &MaxPlusApprox, max: f64, x: &[f64], j: usize) -> f64 {
    let norm2: f64 = x.iter().map(|t| t * t).sum();
    ((max - v.forms()[j].eval_unchecked(x)) / (1.0 + norm2)).max(0.0)
}

/// Loss matrix indexed `[client][facility]`.
pub fn distance_matrix(v: &MaxPlusApprox, witnesses: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    witnesses
        .iter()
        .map(|x| {
            let (max, _) = v.eval_max(x)?;
            Ok((0..v.len()).map(|j| loss_unchecked(v, max, x, j)).collect())
        })
        .collect()
}

fn subset_cost(dist: &[Vec<f64>], subset: &[usize]) -> f64 {
    dist.iter()
        .map(|row| subset.iter().map(|&j| row[j]).fold(f64::INFINITY, f64::min))
        .sum()
}

fn check_subset(v: &MaxPlusApprox, subset: &[usize]) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&j) = subset.iter().find(|&&j| j >= v.len()) {
        return Err(Error::IndexOutOfRange { index: j, len: v.len() });
    }
    Ok(())
}

/// `Σ_{x ∈ X′} min_{j ∈ S} dist(x; j)`.
pub fn kmedian_cost(v: &MaxPlusApprox, witnesses: &[Vec<f64>], subset: &[usize]) -> Result<f64> {
    check_subset(v, subset)?;
    Ok(subset_cost(&distance_matrix(v, witnesses)?, subset))
}

/// `max_{x ∈ X′} min_{j ∈ S} dist(x; j)`.
pub fn kcenter_cost(v: &MaxPlusApprox, witnesses: &[Vec<f64>], subset: &[usize]) -> Result<f64> {
    check_subset(v, subset)?;
    Ok(distance_matrix(v, witnesses)?
        .iter()
        .map(|row| subset.iter().map(|&j| row[j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max))
}

/// Indices of the `k` largest values, ties to the lower index, returned
/// ascending.
fn top_k(values: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut kept = order[..k].to_vec();
    kept.sort_unstable();
    kept
}

/// Per-form SDP solutions and, when requested, rounded witnesses.
struct Sweep {
    solutions: Vec<Option<SdpSolution>>,
    witnesses: Vec<Vec<Vec<f64>>>,
}

fn sdp_sweep(v: &MaxPlusApprox, samples: Option<usize>, opts: &SdpOptions, seed: u64) -> Sweep {
    let homog: Vec<HomogenizedForm> = v.forms().iter().map(|f| f.homogenize()).collect();
    let per_form: Vec<(Option<SdpSolution>, Vec<Vec<f64>>)> = (0..v.len())
        .into_par_iter()
        .map(|j| {
            let problem = ImportanceSdp::from_homogenized(&homog, j);
            let sol = sdpsolve::solve_importance_sdp(&problem, opts)
                .ok()
                .filter(|s| s.status != SdpStatus::Infeasible && s.nu_bar.is_finite());
            let points = match (&sol, samples) {
                (Some(s), Some(n)) => {
                    sdpsolve::sample_witnesses(&problem, s, n, crate::seed::derive(seed, &[j as u64])).points
                }
                _ => Vec::new(),
            };
            (sol, points)
        })
        .collect();
    let (solutions, witnesses) = per_form.into_iter().unzip();
    Sweep { solutions, witnesses }
}

fn upper_bounds(sweep: &Sweep) -> (Vec<f64>, Vec<usize>) {
    let mut failures = Vec::new();
    let bounds = sweep
        .solutions
        .iter()
        .enumerate()
        .map(|(j, s)| match s {
            Some(s) => s.nu_bar,
            None => {
                failures.push(j);
                f64::INFINITY
            }
        })
        .collect();
    (bounds, failures)
}

/// Keeps the `k` forms with the largest SDP upper bounds.
pub fn prune_sort_upper(inst: &PruneInstance, sdp: &SdpOptions) -> Result<PruneResult> {
    let sweep = sdp_sweep(&inst.forms, None, sdp, inst.seed);
    Ok(sort_upper_from(inst, &sweep))
}

fn sort_upper_from(inst: &PruneInstance, sweep: &Sweep) -> PruneResult {
    let (bounds, failures) = upper_bounds(sweep);
    PruneResult {
        kept: top_k(&bounds, inst.k),
        method: PrunerKind::SortUpper,
        score: Score::Bounds(bounds.clone()),
        diagnostics: PruneDiagnostics {
            iterations: sweep.solutions.iter().flatten().map(|s| s.iterations).sum(),
            sdp_failures: failures,
            upper_bounds: bounds,
            ..Default::default()
        },
    }
}

/// Keeps the `k` forms with the largest metric lower bounds on the pooled
/// witnesses `X′` (`samples` Gaussian draws per form). The pool is returned
/// in the diagnostics for reuse by the k-median methods.
pub fn prune_sort_lower(inst: &PruneInstance, samples: usize, sdp: &SdpOptions) -> Result<PruneResult> {
    if samples == 0 {
        return Err(Error::InvalidArgument("sort-lower needs at least one sample".into()));
    }
    let sweep = sdp_sweep(&inst.forms, Some(samples), sdp, inst.seed);
    Ok(sort_lower_from(inst, &sweep))
}

fn pooled(sweep: &Sweep) -> Vec<Vec<f64>> {
    sweep.witnesses.iter().flatten().cloned().collect()
}

fn sort_lower_from(inst: &PruneInstance, sweep: &Sweep) -> PruneResult {
    let pool = pooled(sweep);
    let homog: Vec<HomogenizedForm> = inst.forms.forms().iter().map(|f| f.homogenize()).collect();
    let (upper, failures) = upper_bounds(sweep);
    let lower: Vec<f64> = (0..inst.forms.len())
        .map(|j| {
            if failures.contains(&j) {
                return f64::INFINITY;
            }
            let problem = ImportanceSdp::from_homogenized(&homog, j);
            pool.iter()
                .map(|x| problem.margin_at(x))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    PruneResult {
        kept: top_k(&lower, inst.k),
        method: PrunerKind::SortLower,
        score: Score::Bounds(lower.clone()),
        diagnostics: PruneDiagnostics {
            iterations: sweep.solutions.iter().flatten().map(|s| s.iterations).sum(),
            sdp_failures: failures,
            upper_bounds: upper,
            lower_bounds: lower,
            witnesses: pool,
            ..Default::default()
        },
    }
}

fn witness_distances(inst: &PruneInstance) -> Result<Vec<Vec<f64>>> {
    if inst.witnesses.is_empty() {
        return Err(Error::EmptyWitnesses);
    }
    distance_matrix(&inst.forms, &inst.witnesses)
}

fn kmedian_result(method: PrunerKind, mut kept: Vec<usize>, dist: &[Vec<f64>], diagnostics: PruneDiagnostics) -> PruneResult {
    kept.sort_unstable();
    PruneResult {
        score: Score::KMedian(subset_cost(dist, &kept)),
        kept,
        method,
        diagnostics,
    }
}

/// Adds to `chosen` the facility minimizing the resulting cost, given the
/// current per-client best distance.
fn greedy_add(dist: &[Vec<f64>], best: &mut [f64], chosen: &mut Vec<usize>) {
    let nf = dist.first().map_or(0, Vec::len);
    let mut pick: Option<(f64, usize)> = None;
    for j in (0..nf).filter(|j| !chosen.contains(j)) {
        let cost: f64 = dist.iter().zip(best.iter()).map(|(row, &b)| b.min(row[j])).sum();
        if pick.is_none_or(|(c, _)| cost < c) {
            pick = Some((cost, j));
        }
    }
    if let Some((_, j)) = pick {
        for (row, b) in dist.iter().zip(best.iter_mut()) {
            *b = b.min(row[j]);
        }
        chosen.push(j);
    }
}

fn greedy_from(dist: &[Vec<f64>], k: usize, mut chosen: Vec<usize>) -> Vec<usize> {
    let mut best: Vec<f64> = dist
        .iter()
        .map(|row| chosen.iter().map(|&j| row[j]).fold(f64::INFINITY, f64::min))
        .collect();
    while chosen.len() < k {
        greedy_add(dist, &mut best, &mut chosen);
    }
    chosen
}

/// Greedy discrete k-median on the witness pool: `k` rounds, each adding the
/// form that lowers the total loss the most (ties to the lower index).
pub fn prune_greedy(inst: &PruneInstance) -> Result<PruneResult> {
    let dist = witness_distances(inst)?;
    let kept = greedy_from(&dist, inst.k, Vec::new());
    Ok(kmedian_result(
        PrunerKind::Greedy,
        kept,
        &dist,
        PruneDiagnostics {
            iterations: inst.k,
            ..Default::default()
        },
    ))
}

/// Number of `k`-subsets of `n` items, saturating.
fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Exact discrete k-median by enumeration; returns the lexicographically
/// smallest optimal subset.
pub fn prune_brute_force(inst: &PruneInstance, limit: u128) -> Result<PruneResult> {
    let n = inst.forms.len();
    let subsets = binomial(n, inst.k);
    if subsets > limit {
        return Err(Error::BudgetExceeded { subsets, limit });
    }
    let dist = witness_distances(inst)?;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for combo in (0..n).combinations(inst.k) {
        let cost = subset_cost(&dist, &combo);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, combo));
        }
    }
    let (_, kept) = best.expect("at least one subset");
    Ok(kmedian_result(
        PrunerKind::Brute,
        kept,
        &dist,
        PruneDiagnostics {
            iterations: subsets as usize,
            ..Default::default()
        },
    ))
}

/// Jain-Vazirani primal-dual facility location with uniform opening cost
/// `opening`. `dist` is indexed `[client][facility]`. Returns the opened
/// facilities, ascending.
pub fn jain_vazirani(dist: &[Vec<f64>], opening: f64) -> Vec<usize> {
    let nc = dist.len();
    let nf = dist.first().map_or(0, Vec::len);
    if nc == 0 || nf == 0 {
        return Vec::new();
    }
    let eps = 1e-12 * opening.abs().max(1.0);

    // Tightening events in time order; ties by facility then client.
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(nc * nf);
    for (c, row) in dist.iter().enumerate() {
        for (f, &d) in row.iter().enumerate() {
            pairs.push((d, f, c));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut frozen_at: Vec<Option<f64>> = vec![None; nc];
    let mut tight: Vec<Vec<usize>> = vec![Vec::new(); nf]; // unfrozen tight clients
    let mut rate = vec![0usize; nf];
    let mut cost_sum = vec![0.0; nf];
    let mut fixed = vec![0.0; nf];
    let mut touched = vec![false; nf];
    let mut opened_at: Vec<Option<f64>> = vec![None; nf];
    let mut next_pair = 0;
    let mut active = nc;
    let mut t = 0.0f64;

    let freeze = |c: usize,
                  t: f64,
                  frozen_at: &mut Vec<Option<f64>>,
                  tight: &mut Vec<Vec<usize>>,
                  rate: &mut Vec<usize>,
                  cost_sum: &mut Vec<f64>,
                  fixed: &mut Vec<f64>,
                  active: &mut usize| {
        if frozen_at[c].is_some() {
            return;
        }
        frozen_at[c] = Some(t);
        *active -= 1;
        for f in 0..nf {
            if let Some(pos) = tight[f].iter().position(|&x| x == c) {
                tight[f].swap_remove(pos);
                rate[f] -= 1;
                cost_sum[f] -= dist[c][f];
                fixed[f] += (t - dist[c][f]).max(0.0);
            }
        }
    };

    while active > 0 {
        // Tighten every edge reached by time t.
        while next_pair < pairs.len() && pairs[next_pair].0 <= t {
            let (_, f, c) = pairs[next_pair];
            next_pair += 1;
            if frozen_at[c].is_some() {
                continue;
            }
            if opened_at[f].is_some() {
                freeze(c, t, &mut frozen_at, &mut tight, &mut rate, &mut cost_sum, &mut fixed, &mut active);
            } else {
                tight[f].push(c);
                rate[f] += 1;
                cost_sum[f] += dist[c][f];
                touched[f] = true;
            }
        }
        // Open every facility that is fully paid, lowest index first.
        let mut opened_any = false;
        for f in 0..nf {
            if opened_at[f].is_some() || !touched[f] {
                continue;
            }
            let paid = fixed[f] + rate[f] as f64 * t - cost_sum[f];
            if paid >= opening - eps {
                opened_at[f] = Some(t);
                opened_any = true;
                for c in tight[f].clone() {
                    freeze(c, t, &mut frozen_at, &mut tight, &mut rate, &mut cost_sum, &mut fixed, &mut active);
                }
            }
        }
        if active == 0 {
            break;
        }
        if opened_any {
            continue;
        }
        // Advance to the next event.
        let mut next = f64::INFINITY;
        while next_pair < pairs.len() && frozen_at[pairs[next_pair].2].is_some() {
            next_pair += 1;
        }
        if next_pair < pairs.len() {
            next = pairs[next_pair].0;
        }
        for f in 0..nf {
            if opened_at[f].is_none() && rate[f] > 0 {
                let paid = fixed[f] + rate[f] as f64 * t - cost_sum[f];
                next = next.min(t + (opening - paid) / rate[f] as f64);
            }
        }
        if !next.is_finite() {
            break;
        }
        t = next.max(t);
    }

    // Phase 2: maximal independent set among temporarily open facilities,
    // in opening order; two conflict when some client paid both.
    let mut order: Vec<usize> = (0..nf).filter(|&f| opened_at[f].is_some()).collect();
    order.sort_by(|&a, &b| opened_at[a].unwrap().total_cmp(&opened_at[b].unwrap()).then(a.cmp(&b)));
    let contributes = |c: usize, f: usize| frozen_at[c].is_some_and(|alpha| alpha - dist[c][f] > eps);
    let mut chosen: Vec<usize> = Vec::new();
    for f in order {
        let conflict = chosen
            .iter()
            .any(|&g| (0..nc).any(|c| contributes(c, f) && contributes(c, g)));
        if !conflict {
            chosen.push(f);
        }
    }
    chosen.sort_unstable();
    chosen
}

/// Removes facilities one at a time, each time dropping the one whose
/// removal increases the cost least, until `k` remain.
fn greedy_trim(dist: &[Vec<f64>], mut set: Vec<usize>, k: usize) -> Vec<usize> {
    while set.len() > k {
        let (pos, _) = (0..set.len())
            .map(|p| {
                let rest: Vec<usize> = set.iter().enumerate().filter(|&(q, _)| q != p).map(|(_, &f)| f).collect();
                (p, subset_cost(dist, &rest))
            })
            .fold(None::<(usize, f64)>, |acc, (p, c)| match acc {
                Some((_, best)) if best <= c => acc,
                _ => Some((p, c)),
            })
            .expect("non-empty set");
        set.remove(pos);
    }
    set
}

/// J-V facility location turned into k-median by bisecting the uniform
/// opening cost (at most 60 evaluations). If no cost yields exactly `k`
/// facilities the closer bracketing solution is trimmed or padded greedily.
pub fn prune_jv(inst: &PruneInstance) -> Result<PruneResult> {
    let dist = witness_distances(inst)?;
    let k = inst.k;
    let mut trace = Vec::new();
    let eval = |lambda: f64, trace: &mut Vec<(f64, usize)>| {
        let open = jain_vazirani(&dist, lambda);
        trace.push((lambda, open.len()));
        open
    };

    let mut lo = (0.0, eval(0.0, &mut trace));
    let total: f64 = dist.iter().flatten().sum();
    let mut hi = (total + 1.0, eval(total + 1.0, &mut trace));
    let mut exact = None;
    if lo.1.len() == k {
        exact = Some(lo.1.clone());
    } else if hi.1.len() == k {
        exact = Some(hi.1.clone());
    } else if lo.1.len() > k && hi.1.len() < k {
        for _ in 0..58 {
            let mid = 0.5 * (lo.0 + hi.0);
            let open = eval(mid, &mut trace);
            match open.len().cmp(&k) {
                std::cmp::Ordering::Equal => {
                    exact = Some(open);
                    break;
                }
                std::cmp::Ordering::Greater => lo = (mid, open),
                std::cmp::Ordering::Less => hi = (mid, open),
            }
        }
    }

    let kept = match exact {
        Some(set) => set,
        None => {
            let over = lo.1.len().abs_diff(k);
            let under = hi.1.len().abs_diff(k);
            let start = if lo.1.len() >= k && over <= under { lo.1 } else { hi.1 };
            if start.len() > k {
                greedy_trim(&dist, start, k)
            } else {
                greedy_from(&dist, k, start)
            }
        }
    };
    Ok(kmedian_result(
        PrunerKind::Jv,
        kept,
        &dist,
        PruneDiagnostics {
            iterations: trace.len(),
            lambda_trace: trace,
            ..Default::default()
        },
    ))
}

/// Result of [`prune`] with the time split used in run reports.
#[derive(Debug, Clone)]
pub struct PruneOutcome {
    pub result: PruneResult,
    /// SDP solves and witness sampling.
    pub sdp_time: Duration,
    /// Everything else: sorting, distance evaluation, combinatorial search.
    pub combinatorial_time: Duration,
}

/// Reduces `v` to `k` forms with the configured strategy. The k-median
/// methods run on the witness pool built by SDP rounding.
pub fn prune(v: &MaxPlusApprox, k: usize, cfg: &PruneConfig, seed: u64) -> Result<PruneOutcome> {
    if cfg.kind == PrunerKind::None {
        return Err(Error::InvalidArgument("pruner 'none' cannot reduce a set".into()));
    }
    let mut inst = PruneInstance::new(v.clone(), k, Vec::new(), seed)?;
    let samples = (cfg.kind != PrunerKind::SortUpper).then_some(cfg.samples);
    if samples == Some(0) {
        return Err(Error::InvalidArgument(format!("pruner {} needs at least one sample", cfg.kind)));
    }
    let t0 = Instant::now();
    let sweep = sdp_sweep(v, samples, &cfg.sdp, seed);
    let sdp_time = t0.elapsed();

    let t1 = Instant::now();
    let result = match cfg.kind {
        PrunerKind::SortUpper => sort_upper_from(&inst, &sweep),
        PrunerKind::SortLower => sort_lower_from(&inst, &sweep),
        kind => {
            inst.witnesses = pooled(&sweep);
            let mut r = match kind {
                PrunerKind::Greedy => prune_greedy(&inst)?,
                PrunerKind::Jv => prune_jv(&inst)?,
                PrunerKind::Brute => prune_brute_force(&inst, cfg.brute_limit)?,
                _ => unreachable!(),
            };
            let (upper, failures) = upper_bounds(&sweep);
            r.diagnostics.upper_bounds = upper;
            r.diagnostics.sdp_failures = failures;
            r.diagnostics.witnesses = inst.witnesses;
            r
        }
    };
    Ok(PruneOutcome {
        result,
        sdp_time,
        combinatorial_time: t1.elapsed(),
    })
}
