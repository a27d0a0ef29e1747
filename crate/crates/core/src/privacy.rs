//! Audits of what a single server learns from its queries.
//!
//! Exact mode enumerates every permutation tuple of every PIR list and
//! compares the resulting fingerprint distributions across all demand
//! vectors with rational masses. Statistical mode samples bundles and runs
//! chi-square homogeneity tests on index histograms. Structural checks
//! verify the counting invariants on concrete plans.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::combinatorics::SubsetId;
use crate::error::{Error, Result};
use crate::pir::{PermutationSet, PirParams, PirQuery, QueryGenerator};
use crate::placement::{AccessStructure, SystemParams};
use crate::protocol::{
    generate_query_bundles_with, users_within, DemandVector, QueryPlan, ServerBundle,
};
use crate::{fmt_exact, Exact};

/// Bumped whenever the fingerprint encoding changes.
pub const FINGERPRINT_VERSION: u32 = 1;

/// Canonical text encoding of everything a server receives.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct QueryFingerprint(String);

fn encode_query(query: &PirQuery, out: &mut String) {
    for (b, block) in query.blocks().iter().enumerate() {
        if b > 0 {
            out.push('/');
        }
        for (i, sum) in block.iter().enumerate() {
            if i > 0 {
                out.push(';');
            }
            for (j, term) in sum.terms().iter().enumerate() {
                if j > 0 {
                    out.push('+');
                }
                let _ = write!(out, "{}.{}", term.message, term.index);
            }
        }
    }
}

impl QueryFingerprint {
    pub fn of(bundle: &ServerBundle) -> Self {
        let mut out = format!("v{FINGERPRINT_VERSION}|s{}", bundle.server);
        for tx in &bundle.transmissions {
            let _ = write!(out, "|{}", tx.subset);
            for list in &tx.lists {
                let _ = write!(out, "[{}:", list.user_caches);
                encode_query(&list.query, &mut out);
                out.push(']');
            }
        }
        Self(out)
    }

    fn of_query(query: &PirQuery) -> Self {
        let mut out = format!("v{FINGERPRINT_VERSION}|q");
        encode_query(query, &mut out);
        Self(out)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Limits of exhaustive enumeration.
#[derive(Debug, Clone, Copy)]
pub struct ExhaustiveCaps {
    pub max_permutation_tuples: u128,
    pub max_joint_support: u128,
    pub max_demand_vectors: u128,
}

impl Default for ExhaustiveCaps {
    fn default() -> Self {
        Self {
            max_permutation_tuples: 1_000_000,
            max_joint_support: 2_000_000,
            max_demand_vectors: 4_096,
        }
    }
}

/// Distribution summary for one demand vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandDistribution {
    pub demands: Vec<usize>,
    pub support: usize,
    pub min_mass: Exact,
    pub max_mass: Exact,
    /// Total variation distance to the first demand vector's distribution.
    pub tv_to_first: Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactAudit {
    pub server: usize,
    pub passed: bool,
    pub max_tv: Exact,
    pub distributions: Vec<DemandDistribution>,
}

impl ExactAudit {
    pub fn csv(&self) -> String {
        let mut out = String::from("demand,support,min_mass,max_mass,tv_to_first\n");
        for d in &self.distributions {
            let demand: Vec<String> = d.demands.iter().map(ToString::to_string).collect();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                demand.join(" "),
                d.support,
                fmt_exact(&d.min_mass),
                fmt_exact(&d.max_mass),
                fmt_exact(&d.tv_to_first)
            );
        }
        out
    }
}

fn factorial(n: usize) -> Option<u128> {
    (1..=n as u128).try_fold(1u128, |acc, x| acc.checked_mul(x))
}

fn too_large(what: &str, size: Option<u128>, cap: u128) -> Error {
    Error::TooLarge {
        what: format!("{what}; use the statistical audit instead"),
        size: size.unwrap_or(u128::MAX),
        cap,
    }
}

/// All permutations of `1..=n` in lexicographic order.
fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut current: Vec<usize> = (1..=n).collect();
    let mut out = vec![current.clone()];
    loop {
        let Some(i) = (1..current.len()).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..current.len()).rev().find(|&j| current[j] > current[i - 1]).unwrap();
        current.swap(i - 1, j);
        current[i..].reverse();
        out.push(current.clone());
    }
}

/// Exact distribution of server `server`'s query for each desired message,
/// over all permutation tuples. Keys are interned fingerprint ids.
fn per_message_distributions<G: QueryGenerator + ?Sized>(
    generator: &G,
    pir: &PirParams,
    server: usize,
    caps: &ExhaustiveCaps,
    intern: &mut HashMap<QueryFingerprint, u32>,
) -> Result<(Vec<BTreeMap<u32, u64>>, u64)> {
    let symbols = pir.symbols_per_message();
    let tuples = factorial(symbols).and_then(|f| f.checked_pow(pir.messages() as u32));
    match tuples {
        Some(n) if n <= caps.max_permutation_tuples => {}
        other => return Err(too_large("permutation tuples", other, caps.max_permutation_tuples)),
    }
    let perms = all_permutations(symbols);
    let total = (perms.len() as u64).pow(pir.messages() as u32);
    let mut dists = vec![BTreeMap::new(); pir.messages()];
    let mut choice = vec![0usize; pir.messages()];
    loop {
        let orders = choice.iter().map(|&c| perms[c].clone()).collect();
        let set = PermutationSet::from_orders(orders, pir)?;
        for (desired, dist) in dists.iter_mut().enumerate() {
            let queries = generator.build(desired + 1, pir, &set)?;
            let query = queries.get(server - 1).ok_or_else(|| {
                Error::Structural(format!("generator produced no query for server {server}"))
            })?;
            let next = intern.len() as u32;
            let id = *intern.entry(QueryFingerprint::of_query(query)).or_insert(next);
            *dist.entry(id).or_insert(0u64) += 1;
        }
        // Odometer over permutation indices.
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return Ok((dists, total));
            }
            choice[pos] += 1;
            if choice[pos] < perms.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

fn tv_distance(a: &HashMap<Vec<u32>, Exact>, b: &HashMap<Vec<u32>, Exact>) -> Exact {
    let zero = Exact::from_integer(BigInt::from(0));
    let keys: BTreeSet<&Vec<u32>> = a.keys().chain(b.keys()).collect();
    let sum = keys.into_iter().fold(zero.clone(), |acc, k| {
        let p = a.get(k).unwrap_or(&zero);
        let q = b.get(k).unwrap_or(&zero);
        let diff = if p > q { p - q } else { q - p };
        acc + diff
    });
    sum / Exact::from_integer(BigInt::from(2))
}

/// Exhaustive audit of server `server` under `generator`.
pub fn exhaustive_privacy_check<G: QueryGenerator + ?Sized>(
    generator: &G,
    params: &SystemParams,
    access: &AccessStructure,
    family: &[SubsetId],
    server: usize,
    caps: &ExhaustiveCaps,
) -> Result<ExactAudit> {
    if server == 0 || server > params.servers() {
        return Err(Error::InvalidParams(format!(
            "server {server} outside [1..{}]",
            params.servers()
        )));
    }
    let pir = params.pir_params();
    let files = params.files();
    let users = access.len();
    let vectors = (files as u128).checked_pow(users as u32);
    match vectors {
        Some(n) if n <= caps.max_demand_vectors => {}
        other => return Err(too_large("demand vectors", other, caps.max_demand_vectors)),
    }

    let mut intern = HashMap::new();
    let (dists, total) = per_message_distributions(generator, &pir, server, caps, &mut intern)?;
    let total = Exact::from_integer(BigInt::from(total));

    // Lists in canonical order; each one is an independent draw.
    let lists: Vec<usize> = family
        .iter()
        .flat_map(|s| users_within(s, access))
        .collect();
    let joint_support = lists.iter().try_fold(1u128, |acc, _| {
        let widest = dists.iter().map(BTreeMap::len).max().unwrap_or(1) as u128;
        acc.checked_mul(widest)
    });
    match joint_support {
        Some(n) if n <= caps.max_joint_support => {}
        other => return Err(too_large("joint fingerprint support", other, caps.max_joint_support)),
    }

    let mut all = Vec::new();
    let mut demand = vec![1usize; users];
    loop {
        let mut joint: HashMap<Vec<u32>, Exact> = HashMap::new();
        joint.insert(Vec::new(), Exact::from_integer(BigInt::from(1)));
        for &user in &lists {
            let dist = &dists[demand[user] - 1];
            let mut next = HashMap::with_capacity(joint.len() * dist.len());
            for (key, mass) in &joint {
                for (&id, &count) in dist {
                    let mut k = key.clone();
                    k.push(id);
                    next.insert(k, mass * Exact::from_integer(BigInt::from(count)) / &total);
                }
            }
            joint = next;
        }
        all.push((demand.clone(), joint));

        let mut pos = 0;
        loop {
            if pos == users {
                return Ok(summarize(server, all));
            }
            demand[pos] += 1;
            if demand[pos] <= files {
                break;
            }
            demand[pos] = 1;
            pos += 1;
        }
    }
}

fn summarize(server: usize, all: Vec<(Vec<usize>, HashMap<Vec<u32>, Exact>)>) -> ExactAudit {
    let first = &all[0].1;
    let mut max_tv = Exact::from_integer(BigInt::from(0));
    let mut distributions = Vec::with_capacity(all.len());
    for (demands, joint) in &all {
        let tv = tv_distance(first, joint);
        if tv > max_tv {
            max_tv = tv.clone();
        }
        let min_mass = joint.values().min().cloned().unwrap_or_default();
        let max_mass = joint.values().max().cloned().unwrap_or_default();
        distributions.push(DemandDistribution {
            demands: demands.clone(),
            support: joint.len(),
            min_mass,
            max_mass,
            tv_to_first: tv,
        });
    }
    // Identical to the first for every vector means pairwise identical.
    let passed = all.iter().all(|(_, joint)| joint == first);
    ExactAudit {
        server,
        passed,
        max_tv,
        distributions,
    }
}

/// Counting invariants of a generated plan.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StructuralReport {
    pub lists_checked: usize,
    pub violations: Vec<String>,
}

impl StructuralReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn merge(&mut self, other: StructuralReport) {
        self.lists_checked += other.lists_checked;
        self.violations.extend(other.violations);
    }
}

/// Every list shows `S^(N-1)` distinct indices per file at every server, and
/// the desired indices of a list never repeat across servers.
pub fn structural_check(
    plan: &QueryPlan,
    demands: &DemandVector,
    params: &SystemParams,
) -> StructuralReport {
    let files = params.files();
    let expected = params.pir_params().symbols_per_message() / params.servers();
    let mut report = StructuralReport::default();
    for tx in 0..plan.transmissions() {
        for (j, &user) in plan.list_users(tx).iter().enumerate() {
            report.lists_checked += 1;
            let desired = demands.get(user);
            let mut seen = BTreeSet::new();
            for bundle in plan.bundles() {
                let list = &bundle.transmissions[tx];
                let query = &list.lists[j].query;
                let counts = query.distinct_indices_per_message(files);
                if let Some((n, c)) = counts.iter().enumerate().find(|(_, &c)| c != expected) {
                    report.violations.push(format!(
                        "server {} subset {} list {}: file {} has {c} distinct indices, expected {expected}",
                        bundle.server,
                        list.subset,
                        list.lists[j].user_caches,
                        n + 1
                    ));
                }
                let mine = query.indices_of(desired);
                if !mine.is_disjoint(&seen) {
                    report.violations.push(format!(
                        "subset {} list {}: desired indices repeat at server {}",
                        list.subset,
                        list.lists[j].user_caches,
                        bundle.server
                    ));
                }
                seen.extend(mine);
            }
        }
    }
    report
}

/// One chi-square homogeneity test.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquareResult {
    pub feature: &'static str,
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticalAudit {
    pub server: usize,
    pub samples: usize,
    pub alpha: f64,
    pub tests: Vec<ChiSquareResult>,
    pub structural: StructuralReport,
    pub demands: Vec<Vec<usize>>,
    pub passed: bool,
}

impl StatisticalAudit {
    pub fn csv(&self) -> String {
        let mut out = String::from("feature,statistic,df,p_value,alpha,pass\n");
        let per_test = self.alpha / self.tests.len().max(1) as f64;
        for t in &self.tests {
            let _ = writeln!(
                out,
                "{},{:.6},{},{:.6},{:.6},{}",
                t.feature,
                t.statistic,
                t.degrees_of_freedom,
                t.p_value,
                per_test,
                t.p_value >= per_test
            );
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Feature {
    /// (file, distinct indices of that file in one list)
    UniqueCount(usize, usize),
    /// (file, index value), one count per occurrence in a list
    IndexValue(usize, usize),
}

type Histogram = BTreeMap<Feature, u64>;

fn features(bundle: &ServerBundle, files: usize, hist: &mut Histogram) {
    for tx in &bundle.transmissions {
        for list in &tx.lists {
            for (n, c) in list.query.distinct_indices_per_message(files).into_iter().enumerate() {
                *hist.entry(Feature::UniqueCount(n + 1, c)).or_insert(0) += 1;
            }
            for sum in list.query.sums() {
                for term in sum.terms() {
                    *hist.entry(Feature::IndexValue(term.message, term.index)).or_insert(0) += 1;
                }
            }
        }
    }
}

/// Chi-square homogeneity over columns (demand vectors) and the categories
/// selected by `keep`. Categories empty in every column are dropped; a table
/// with a single category is trivially homogeneous.
fn homogeneity(
    name: &'static str,
    columns: &[Histogram],
    keep: impl Fn(&Feature) -> bool,
) -> Result<ChiSquareResult> {
    let categories: BTreeSet<Feature> = columns
        .iter()
        .flat_map(|h| h.keys().copied())
        .filter(|f| keep(f))
        .collect();
    let col_totals: Vec<f64> = columns
        .iter()
        .map(|h| h.iter().filter(|(f, _)| keep(f)).map(|(_, &c)| c as f64).sum())
        .collect();
    let grand: f64 = col_totals.iter().sum();
    let df = (categories.len().saturating_sub(1)) * (columns.len() - 1);
    if df == 0 || grand == 0.0 {
        return Ok(ChiSquareResult {
            feature: name,
            statistic: 0.0,
            degrees_of_freedom: 0,
            p_value: 1.0,
        });
    }
    let mut statistic = 0.0;
    for f in &categories {
        let row: f64 = columns.iter().map(|h| *h.get(f).unwrap_or(&0) as f64).sum();
        for (h, total) in columns.iter().zip(&col_totals) {
            let expected = row * total / grand;
            let observed = *h.get(f).unwrap_or(&0) as f64;
            statistic += (observed - expected).powi(2) / expected;
        }
    }
    let dist = ChiSquared::new(df as f64)
        .map_err(|e| Error::Domain(format!("chi-square with {df} degrees of freedom: {e}")))?;
    Ok(ChiSquareResult {
        feature: name,
        statistic,
        degrees_of_freedom: df,
        p_value: dist.sf(statistic),
    })
}

/// Minimum samples per demand vector for the statistical audit.
pub const MIN_SAMPLES: usize = 10;

/// Sampled audit of server `server` across the given demand vectors.
///
/// Each demand vector gets its own worker and its own ChaCha8 stream of
/// per-sample seeds. Two chi-square tests (distinct-index profiles and
/// index values) share `alpha` by Bonferroni; the audit passes iff both
/// p-values reach `alpha / 2` and no structural invariant is violated.
#[allow(clippy::too_many_arguments)]
pub fn statistical_privacy_check<G: QueryGenerator + ?Sized>(
    generator: &G,
    params: &SystemParams,
    access: &AccessStructure,
    family: &[SubsetId],
    server: usize,
    demands: &[DemandVector],
    samples: usize,
    alpha: f64,
    seed: u64,
) -> Result<StatisticalAudit> {
    if server == 0 || server > params.servers() {
        return Err(Error::InvalidParams(format!(
            "server {server} outside [1..{}]",
            params.servers()
        )));
    }
    if demands.len() < 2 {
        return Err(Error::InsufficientSamples(format!(
            "need at least 2 demand vectors, got {}",
            demands.len()
        )));
    }
    if samples < MIN_SAMPLES {
        return Err(Error::InsufficientSamples(format!(
            "need at least {MIN_SAMPLES} samples per demand vector, got {samples}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParams(format!("alpha must lie in (0, 1), got {alpha}")));
    }

    let files = params.files();
    let results: Vec<Result<(Histogram, StructuralReport)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = demands
            .iter()
            .enumerate()
            .map(|(i, d)| {
                scope.spawn(move || {
                    let mut seeds = ChaCha8Rng::seed_from_u64(seed);
                    seeds.set_stream(i as u64);
                    let mut hist = Histogram::new();
                    let mut structural = StructuralReport::default();
                    for _ in 0..samples {
                        let plan = generate_query_bundles_with(
                            generator,
                            params,
                            access,
                            family,
                            d,
                            seeds.random(),
                        )?;
                        features(plan.bundle(server), files, &mut hist);
                        structural.merge(structural_check(&plan, d, params));
                    }
                    Ok((hist, structural))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("audit worker panicked"))
            .collect()
    });

    let mut columns = Vec::with_capacity(results.len());
    let mut structural = StructuralReport::default();
    for r in results {
        let (hist, report) = r?;
        columns.push(hist);
        structural.merge(report);
    }
    let tests = vec![
        homogeneity("distinct_index_profile", &columns, |f| {
            matches!(f, Feature::UniqueCount(..))
        })?,
        homogeneity("index_values", &columns, |f| matches!(f, Feature::IndexValue(..)))?,
    ];
    let per_test = alpha / tests.len() as f64;
    let passed = structural.passed() && tests.iter().all(|t| t.p_value >= per_test);
    Ok(StatisticalAudit {
        server,
        samples,
        alpha,
        tests,
        structural,
        demands: demands.iter().map(|d| d.as_slice().to_vec()).collect(),
        passed,
    })
}

/// Every uniform demand vector plus `extra` random ones, without repeats.
pub fn default_demand_vectors(
    access: &AccessStructure,
    files: usize,
    extra: usize,
    seed: u64,
) -> Result<Vec<DemandVector>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(crate::protocol::DEMAND_STREAM);
    let mut out: Vec<DemandVector> = (1..=files)
        .map(|n| DemandVector::uniform(access, n, files))
        .collect::<Result<_>>()?;
    for _ in 0..extra {
        let d = DemandVector::random(access, files, &mut rng);
        if !out.contains(&d) {
            out.push(d);
        }
    }
    Ok(out)
}
