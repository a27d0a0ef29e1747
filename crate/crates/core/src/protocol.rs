//! The multi-user scheme on top of the placement.
//!
//! For every transmission subset `S` (a `(t+L)`-subset of caches) and every
//! user `K` inside it, the coordinator draws an independent permutation set
//! and builds a single-user PIR query for demand `d_K` over the messages
//! `W([N], S \ K)`. Server `s` XORs the answers to all of its queries for
//! `S` into one coded symbol list. User `K` missing subfile `T` takes
//! `S = K ∪ T`, recomputes every other user's answer component from the
//! subfiles it caches, strips them off, and runs single-user PIR decoding
//! on what remains.
//!
//! Servers only ever receive a [`ServerBundle`], which carries cache sets
//! and sum lists but no demand.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{choose, enumerate_subsets, SubsetId};
use crate::error::{Error, Result};
use crate::pir::{
    decode_symbols, pir_answer, CapacityAchieving, PermutationSet, PirAnswer, PirQuery,
    QueryGenerator, XorSymbol,
};
use crate::placement::{
    fill_caches, make_library, AccessStructure, CacheContents, FileLibrary, LibrarySource,
    SystemParams,
};
use crate::Exact;

/// ChaCha8 stream used for sampled demands; query lists use `1..`.
pub const DEMAND_STREAM: u64 = u64::MAX;

/// Demand `d_K` of every user, aligned with [`AccessStructure::users`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DemandVector(Vec<usize>);

impl DemandVector {
    pub fn new(demands: Vec<usize>, access: &AccessStructure, files: usize) -> Result<Self> {
        if demands.len() != access.len() {
            return Err(Error::InvalidParams(format!(
                "{} demands for {} users",
                demands.len(),
                access.len()
            )));
        }
        if let Some((u, d)) = demands
            .iter()
            .enumerate()
            .find(|(_, &d)| d == 0 || d > files)
        {
            return Err(Error::InvalidParams(format!(
                "user {} demands file {d}, outside [1..{files}]",
                access.users()[u]
            )));
        }
        Ok(Self(demands))
    }

    pub fn uniform(access: &AccessStructure, file: usize, files: usize) -> Result<Self> {
        Self::new(vec![file; access.len()], access, files)
    }

    pub fn random<R: Rng + ?Sized>(access: &AccessStructure, files: usize, rng: &mut R) -> Self {
        Self((0..access.len()).map(|_| rng.random_range(1..=files)).collect())
    }

    /// Random demands from a stream reserved for demand sampling.
    pub fn from_seed(access: &AccessStructure, files: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(DEMAND_STREAM);
        Self::random(access, files, &mut rng)
    }

    pub fn get(&self, user: usize) -> usize {
        self.0[user]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// One PIR query of one user inside a transmission.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UserQuery {
    /// Caches of the user this list serves.
    pub user_caches: SubsetId,
    pub query: PirQuery,
}

/// Lists of one transmission subset, canonical user order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransmissionQuery {
    pub subset: SubsetId,
    pub lists: Vec<UserQuery>,
}

/// Everything server `server` receives.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ServerBundle {
    pub server: usize,
    pub transmissions: Vec<TransmissionQuery>,
}

/// The coordinator's output. Bundles go to servers; the full plan
/// (including permutations) is shared with the users.
#[derive(Debug, Clone)]
pub struct QueryPlan {
    bundles: Vec<ServerBundle>,
    /// `permutations[i][j]`: permutation set of list `j` of transmission `i`.
    permutations: Vec<Vec<PermutationSet>>,
    /// `users[i][j]`: user position served by list `j` of transmission `i`.
    users: Vec<Vec<usize>>,
    /// Random stream consumed by each list, in the same layout.
    streams: Vec<Vec<u64>>,
    lookup: HashMap<SubsetId, usize>,
}

impl QueryPlan {
    pub fn bundles(&self) -> &[ServerBundle] {
        &self.bundles
    }

    pub fn bundle(&self, server: usize) -> &ServerBundle {
        &self.bundles[server - 1]
    }

    pub fn transmissions(&self) -> usize {
        self.permutations.len()
    }

    pub fn subsets(&self) -> impl Iterator<Item = &SubsetId> {
        self.bundles[0].transmissions.iter().map(|t| &t.subset)
    }

    pub fn transmission_index(&self, subset: &SubsetId) -> Option<usize> {
        self.lookup.get(subset).copied()
    }

    pub fn permutations(&self, transmission: usize, list: usize) -> &PermutationSet {
        &self.permutations[transmission][list]
    }

    pub fn list_users(&self, transmission: usize) -> &[usize] {
        &self.users[transmission]
    }

    pub fn streams(&self) -> impl Iterator<Item = u64> + '_ {
        self.streams.iter().flatten().copied()
    }
}

/// Users of `access` contained in `subset`, as positions in canonical order.
pub fn users_within(subset: &SubsetId, access: &AccessStructure) -> Vec<usize> {
    subset
        .subsets_of_size(access.access_degree())
        .iter()
        .filter_map(|k| access.position(k))
        .collect()
}

/// All `(t+L)`-subsets of `[C]`: the transmission family of the full scheme.
pub fn full_family(params: &SystemParams) -> Vec<SubsetId> {
    if !params.needs_delivery() {
        return Vec::new();
    }
    enumerate_subsets(params.caches(), params.t() + params.access_degree())
}

/// Honest query generation.
pub fn generate_query_bundles(
    params: &SystemParams,
    access: &AccessStructure,
    family: &[SubsetId],
    demands: &DemandVector,
    seed: u64,
) -> Result<QueryPlan> {
    generate_query_bundles_with(&CapacityAchieving, params, access, family, demands, seed)
}

/// Query generation with any single-user generator.
///
/// List `j` of transmission `i` draws its permutations from ChaCha8 stream
/// `1 + ordinal(i, j)` of `seed`; stream 0 is left to the file library.
/// Subsets with no user of `access` inside are skipped.
pub fn generate_query_bundles_with<G: QueryGenerator + ?Sized>(
    generator: &G,
    params: &SystemParams,
    access: &AccessStructure,
    family: &[SubsetId],
    demands: &DemandVector,
    seed: u64,
) -> Result<QueryPlan> {
    if access.caches() != params.caches() || access.access_degree() != params.access_degree() {
        return Err(Error::InvalidParams(format!(
            "access structure (C = {}, L = {}) does not match parameters (C = {}, L = {})",
            access.caches(),
            access.access_degree(),
            params.caches(),
            params.access_degree()
        )));
    }
    if demands.as_slice().len() != access.len() {
        return Err(Error::InvalidParams("demand vector does not match users".into()));
    }
    let width = params.t() + params.access_degree();
    if let Some(bad) = family.iter().find(|s| s.len() != width) {
        return Err(Error::InvalidParams(format!(
            "transmission subset {bad} does not have t + L = {width} caches"
        )));
    }

    let pir = params.pir_params();
    let servers = params.servers();
    let mut bundles: Vec<ServerBundle> = (1..=servers)
        .map(|server| ServerBundle {
            server,
            transmissions: Vec::new(),
        })
        .collect();
    let mut permutations = Vec::new();
    let mut list_users = Vec::new();
    let mut streams = Vec::new();
    let mut lookup = HashMap::new();
    let mut next_stream = 1u64;

    for subset in family {
        let present = users_within(subset, access);
        if present.is_empty() {
            continue;
        }
        let mut per_server: Vec<Vec<UserQuery>> = vec![Vec::new(); servers];
        let mut perms_here = Vec::with_capacity(present.len());
        let mut streams_here = Vec::with_capacity(present.len());
        for &user in &present {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(next_stream);
            streams_here.push(next_stream);
            next_stream += 1;
            let perms = PermutationSet::draw(&pir, &mut rng);
            let queries = generator.build(demands.get(user), &pir, &perms)?;
            for (slot, query) in per_server.iter_mut().zip(queries) {
                slot.push(UserQuery {
                    user_caches: access.users()[user].clone(),
                    query,
                });
            }
            perms_here.push(perms);
        }
        lookup.insert(subset.clone(), permutations.len());
        for (bundle, lists) in bundles.iter_mut().zip(per_server) {
            bundle.transmissions.push(TransmissionQuery {
                subset: subset.clone(),
                lists,
            });
        }
        permutations.push(perms_here);
        list_users.push(present);
        streams.push(streams_here);
    }

    Ok(QueryPlan {
        bundles,
        permutations,
        users: list_users,
        streams,
        lookup,
    })
}

/// Coded symbols sent by one server for one transmission subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionAnswer {
    pub subset: SubsetId,
    pub symbols: Vec<Vec<u8>>,
}

/// Everything one server broadcasts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ServerAnswer {
    pub server: usize,
    pub transmissions: Vec<TransmissionAnswer>,
}

impl ServerAnswer {
    pub fn bytes(&self) -> usize {
        self.transmissions
            .iter()
            .flat_map(|t| &t.symbols)
            .map(Vec::len)
            .sum()
    }
}

fn xor_into(acc: &mut [Vec<u8>], other: &[Vec<u8>], context: &str) -> Result<()> {
    if acc.len() != other.len() {
        return Err(Error::Protocol(format!(
            "{context}: answer lengths {} and {} do not align",
            acc.len(),
            other.len()
        )));
    }
    for (a, b) in acc.iter_mut().zip(other) {
        a.xor_assign(b)
            .map_err(|e| Error::Protocol(format!("{context}: {e}")))?;
    }
    Ok(())
}

/// Server side: sees its bundle and the library, nothing else.
pub fn server_answer(bundle: &ServerBundle, library: &FileLibrary) -> Result<ServerAnswer> {
    let pir = library.params().pir_params();
    let transmissions = bundle
        .transmissions
        .iter()
        .map(|tx| {
            let mut acc: Option<Vec<Vec<u8>>> = None;
            for list in &tx.lists {
                let messages = library.subfile_messages(&tx.subset.difference(&list.user_caches))?;
                let answer = pir_answer(&list.query, &messages, &pir)?;
                match acc.as_mut() {
                    None => acc = Some(answer.symbols),
                    Some(acc) => xor_into(
                        acc,
                        &answer.symbols,
                        &format!("server {} subset {}", bundle.server, tx.subset),
                    )?,
                }
            }
            Ok(TransmissionAnswer {
                subset: tx.subset.clone(),
                symbols: acc.unwrap_or_default(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ServerAnswer {
        server: bundle.server,
        transmissions,
    })
}

/// A user's decoded file and the transmissions it cancelled interference on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserOutput {
    pub file: Vec<u8>,
    pub used_transmissions: Vec<usize>,
}

/// User side: reads its own caches, every broadcast and the public plan.
#[allow(clippy::too_many_arguments)]
pub fn user_decode(
    user: usize,
    access: &AccessStructure,
    params: &SystemParams,
    plan: &QueryPlan,
    answers: &[ServerAnswer],
    caches: &CacheContents,
    demand: usize,
    original_len: usize,
) -> Result<UserOutput> {
    let own = access.user(user)?;
    let view = caches.view(own)?;
    let pir = params.pir_params();
    let mut file = Vec::with_capacity(params.padded_file_bytes());
    let mut used = Vec::new();

    for index in enumerate_subsets(params.caches(), params.t()) {
        if !index.is_disjoint(own) {
            let data = view.get(demand, &index).ok_or_else(|| {
                Error::Decode(format!("user {own}: subfile {index} should be cached"))
            })?;
            file.extend_from_slice(data);
            continue;
        }
        let subset = own.union(&index);
        let tx = plan.transmission_index(&subset).ok_or_else(|| {
            Error::Decode(format!(
                "user {own}, subfile {index}: no transmission for {subset}"
            ))
        })?;
        let own_list = plan
            .list_users(tx)
            .iter()
            .position(|&u| u == user)
            .ok_or_else(|| {
                Error::Decode(format!("user {own} has no list in transmission {subset}"))
            })?;

        let mut residual_answers = Vec::with_capacity(params.servers());
        let mut own_queries = Vec::with_capacity(params.servers());
        for answer in answers {
            let bundle = plan.bundle(answer.server);
            let lists = &bundle.transmissions[tx].lists;
            let mut residual = answer.transmissions[tx].symbols.clone();
            for (j, list) in lists.iter().enumerate() {
                if j == own_list {
                    continue;
                }
                let other_index = subset.difference(&list.user_caches);
                let messages = (1..=params.files())
                    .map(|n| {
                        view.get(n, &other_index).map(<[u8]>::to_vec).ok_or_else(|| {
                            Error::Decode(format!(
                                "user {own}, subfile {index}: interference W({n}, {other_index}) \
                                 from user {} is not cached",
                                list.user_caches
                            ))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let component = pir_answer(&list.query, &messages, &pir)?;
                xor_into(
                    &mut residual,
                    &component.symbols,
                    &format!("user {own} subset {subset}"),
                )?;
            }
            residual_answers.push(PirAnswer {
                server: answer.server,
                symbols: residual,
            });
            own_queries.push(lists[own_list].query.clone());
        }
        let symbols = decode_symbols(
            &residual_answers,
            &own_queries,
            plan.permutations(tx, own_list),
            demand,
        )
        .map_err(|e| Error::Decode(format!("user {own}, subfile {index}: {e}")))?;
        for s in symbols {
            file.extend_from_slice(&s);
        }
        used.push(tx);
    }
    file.truncate(original_len);
    Ok(UserOutput {
        file,
        used_transmissions: used,
    })
}

/// Bytes on the air and the rate they amount to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionLog {
    pub bytes_per_server: Vec<usize>,
    /// Per transmission subset: bytes sent by each server.
    pub per_subset: Vec<(SubsetId, Vec<usize>)>,
    pub total_bytes: usize,
    pub padded_file_bytes: usize,
    /// `total_bytes / padded_file_bytes`.
    pub measured_rate: Exact,
    /// Coded symbols in each `(server, subset)` transmission.
    pub symbols_per_transmission: Vec<usize>,
    /// Users that cancelled interference on each transmission.
    pub users_per_transmission: Vec<usize>,
}

impl TransmissionLog {
    pub fn transmissions_per_server(&self) -> usize {
        self.per_subset.len()
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    pub log: TransmissionLog,
    pub decoded: Vec<bool>,
    pub outputs: Vec<Vec<u8>>,
    pub plan: QueryPlan,
}

impl SimulationOutcome {
    pub fn all_decoded(&self) -> bool {
        self.decoded.iter().all(|&ok| ok)
    }
}

/// Run the scheme end to end on pseudo-random files drawn from `seed`.
pub fn run_simulation(
    params: &SystemParams,
    access: &AccessStructure,
    family: &[SubsetId],
    demands: &DemandVector,
    seed: u64,
) -> Result<SimulationOutcome> {
    let library = make_library(params, LibrarySource::Seeded(seed))?;
    run_with_library(params, access, family, demands, &library, seed)
}

/// Run the scheme end to end on a given library.
pub fn run_with_library(
    params: &SystemParams,
    access: &AccessStructure,
    family: &[SubsetId],
    demands: &DemandVector,
    library: &FileLibrary,
    seed: u64,
) -> Result<SimulationOutcome> {
    let caches = fill_caches(library)?;
    let plan = generate_query_bundles(params, access, family, demands, seed)?;
    let answers = plan
        .bundles()
        .iter()
        .map(|b| server_answer(b, library))
        .collect::<Result<Vec<_>>>()?;

    let mut users_per_transmission = vec![0usize; plan.transmissions()];
    let mut outputs = Vec::with_capacity(access.len());
    let mut decoded = Vec::with_capacity(access.len());
    for user in 0..access.len() {
        let demand = demands.get(user);
        let out = user_decode(
            user,
            access,
            params,
            &plan,
            &answers,
            &caches,
            demand,
            library.original_lengths()[demand - 1],
        )?;
        for &tx in &out.used_transmissions {
            users_per_transmission[tx] += 1;
        }
        let ok = out.file == library.original(demand);
        if !ok {
            return Err(Error::Decode(format!(
                "user {} recovered wrong contents for file {demand}",
                access.users()[user]
            )));
        }
        decoded.push(ok);
        outputs.push(out.file);
    }

    let bytes_per_server: Vec<usize> = answers.iter().map(ServerAnswer::bytes).collect();
    let total_bytes: usize = bytes_per_server.iter().sum();
    let per_subset = plan
        .subsets()
        .enumerate()
        .map(|(i, s)| {
            let bytes = answers
                .iter()
                .map(|a| a.transmissions[i].symbols.iter().map(Vec::len).sum())
                .collect();
            (s.clone(), bytes)
        })
        .collect();
    let symbols_per_transmission = answers
        .iter()
        .flat_map(|a| a.transmissions.iter().map(|t| t.symbols.len()))
        .collect();
    let padded = params.padded_file_bytes();
    Ok(SimulationOutcome {
        log: TransmissionLog {
            bytes_per_server,
            per_subset,
            total_bytes,
            padded_file_bytes: padded,
            measured_rate: Exact::new(total_bytes.into(), padded.into()),
            symbols_per_transmission,
            users_per_transmission,
        },
        decoded,
        outputs,
        plan,
    })
}

/// Result of a memory-shared run: the two integer-`t` parts and the
/// combined rate.
#[derive(Debug, Clone)]
pub struct SharedOutcome {
    pub lower: SimulationOutcome,
    pub upper: Option<SimulationOutcome>,
    pub lower_bytes: usize,
    pub upper_bytes: usize,
    pub measured_rate: Exact,
}

/// Memory sharing between `floor(t)` and `ceil(t)` for a fractional `t`:
/// every file is cut into a `(1 - a)` part delivered at `floor(t)` and an
/// `a` part delivered at `floor(t) + 1`, `a = t - floor(t)`.
///
/// Only runs when both parts split exactly (no padding), so the measured
/// rate is the convex combination of the two integer-`t` rates.
#[allow(clippy::too_many_arguments)]
pub fn run_memory_sharing(
    servers: usize,
    files: usize,
    caches: usize,
    access: &AccessStructure,
    t: &Exact,
    file_bytes: usize,
    demands: &DemandVector,
    seed: u64,
) -> Result<SharedOutcome> {
    let access_degree = access.access_degree();
    if *t < Exact::from_integer(0.into()) {
        return Err(Error::InvalidParams("t must be non-negative".into()));
    }
    let lower_t = usize::try_from(t.floor().to_integer())
        .map_err(|_| Error::InvalidParams("t out of range".into()))?;
    let frac = t - t.floor();
    let upper_share = &frac * Exact::from_integer(file_bytes.into());
    if !upper_share.is_integer() {
        return Err(Error::InvalidParams(format!(
            "memory sharing at t = {} does not split {file_bytes} bytes exactly",
            crate::fmt_exact(t)
        )));
    }
    let upper_bytes = usize::try_from(upper_share.to_integer())
        .map_err(|_| Error::InvalidParams("byte split out of range".into()))?;
    let lower_bytes = file_bytes - upper_bytes;

    let full = make_library(
        &SystemParams::new(servers, files, caches, access_degree, lower_t, file_bytes)?,
        LibrarySource::Seeded(seed),
    )?;
    let family_for = |p: &SystemParams| match access.kind() {
        crate::placement::AccessKind::Full => full_family(p),
        crate::placement::AccessKind::Cyclic => {
            crate::cyclic::cyclic_subset_family(p.caches(), p.access_degree(), p.t())
        }
    };
    let run_part = |part_t: usize, range: std::ops::Range<usize>| -> Result<SimulationOutcome> {
        let params = SystemParams::new(servers, files, caches, access_degree, part_t, range.len())?;
        if params.padded_file_bytes() != range.len() {
            return Err(Error::InvalidParams(format!(
                "part of {} bytes at t = {part_t} is not a multiple of the subpacketization {}",
                range.len(),
                params.subpacketization()?
            )));
        }
        let library = make_library(
            &params,
            LibrarySource::Raw(full.files().iter().map(|f| f[range.clone()].to_vec()).collect()),
        )?;
        run_with_library(&params, access, &family_for(&params), demands, &library, seed)
    };

    let lower = run_part(lower_t, 0..lower_bytes)?;
    let upper = if upper_bytes > 0 {
        Some(run_part(lower_t + 1, lower_bytes..file_bytes)?)
    } else {
        None
    };
    let total = lower.log.total_bytes + upper.as_ref().map_or(0, |u| u.log.total_bytes);
    for user in 0..access.len() {
        let mut file = lower.outputs[user].clone();
        if let Some(u) = &upper {
            file.extend_from_slice(&u.outputs[user]);
        }
        if file != full.original(demands.get(user)) {
            return Err(Error::Decode(format!(
                "user {} reassembled a wrong file under memory sharing",
                access.users()[user]
            )));
        }
    }
    Ok(SharedOutcome {
        lower,
        upper,
        lower_bytes,
        upper_bytes,
        measured_rate: Exact::new(total.into(), file_bytes.into()),
    })
}

/// `binom(t + L, L)`: users served by each full-access transmission.
pub fn expected_coding_gain(params: &SystemParams) -> Result<u64> {
    choose(params.t() + params.access_degree(), params.access_degree())
}
