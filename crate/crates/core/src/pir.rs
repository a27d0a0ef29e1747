//! Capacity-achieving single-user PIR over `S` replicated servers.
//!
//! Each of the `N` messages is cut into `S^N` sub-symbols. A query to one
//! server is a list of blocks; block `k` holds XOR sums of `k` sub-symbols
//! taken from `k` distinct messages. Sub-symbol indices are drawn through
//! an independent uniform permutation per message, so every server sees,
//! for every message, `S^(N-1)` distinct uniformly placed indices no
//! matter which message is wanted.
//!
//! Construction (fresh = next unused position of that message's
//! permutation):
//! 1. block 1: every server asks for one fresh symbol of every message;
//! 2. block `k >= 2`: every undesired-only `(k-1)`-sum that another server
//!    received in block `k-1` is joined with one fresh desired symbol, and
//!    for each `k`-subset of undesired messages `(S-1)^(k-1)` sums of fresh
//!    undesired symbols are added.
//!
//! Inside a block, sums are listed by message subset (lexicographic) and
//! then in construction order. Every `k`-subset of messages appears
//! `(S-1)^(k-1)` times in block `k` whatever the desired message is, so
//! the layout of a query never depends on the demand and answers from
//! different queries with the same parameters line up position by position.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::combinatorics::{enumerate_subsets, SubsetId};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Parameters of one single-user PIR instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PirParams {
    servers: usize,
    messages: usize,
    symbols_per_message: usize,
}

impl PirParams {
    pub fn new(servers: usize, messages: usize) -> Result<Self> {
        if servers < 2 {
            return Err(Error::InvalidParams(format!(
                "PIR needs at least 2 servers, got {servers}"
            )));
        }
        if messages == 0 {
            return Err(Error::InvalidParams("PIR needs at least 1 message".into()));
        }
        let symbols_per_message = u32::try_from(messages)
            .ok()
            .and_then(|n| servers.checked_pow(n))
            .ok_or_else(|| Error::Overflow(format!("{servers}^{messages} sub-symbols")))?;
        Ok(Self {
            servers,
            messages,
            symbols_per_message,
        })
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn messages(&self) -> usize {
        self.messages
    }

    /// `S^N`, the number of sub-symbols each message is cut into.
    pub fn symbols_per_message(&self) -> usize {
        self.symbols_per_message
    }

    /// `S^(N-1) + ... + S + 1`, the number of sums sent by each server.
    pub fn sums_per_server(&self) -> usize {
        (self.symbols_per_message - 1) / (self.servers - 1)
    }

    /// Sums in block `k` (1-based) of any query: `binom(N,k) (S-1)^(k-1)`.
    pub fn sums_in_block(&self, k: usize) -> usize {
        let subsets = enumerate_subsets(self.messages, k).len();
        subsets * (self.servers - 1).pow(k as u32 - 1)
    }
}

/// One sub-symbol: message `message` (1-based), sub-symbol `index` in `[1..S^N]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolRef {
    pub message: usize,
    pub index: usize,
}

/// XOR of sub-symbols from distinct messages, sorted by message.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KSum(Vec<SymbolRef>);

impl KSum {
    pub fn new(mut terms: Vec<SymbolRef>) -> Result<Self> {
        terms.sort();
        if terms.is_empty() {
            return Err(Error::Structural("empty sum".into()));
        }
        if terms.windows(2).any(|w| w[0].message == w[1].message) {
            return Err(Error::Structural(format!(
                "sum repeats a message: {terms:?}"
            )));
        }
        Ok(Self(terms))
    }

    pub fn terms(&self) -> &[SymbolRef] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn messages(&self) -> Vec<usize> {
        self.0.iter().map(|s| s.message).collect()
    }

    pub fn involves(&self, message: usize) -> bool {
        self.0.iter().any(|s| s.message == message)
    }

    fn without(&self, message: usize) -> KSum {
        KSum(self.0.iter().copied().filter(|s| s.message != message).collect())
    }
}

/// The request sent to one server: blocks of sums, block `k` holding `k`-sums.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PirQuery {
    server: usize,
    blocks: Vec<Vec<KSum>>,
}

impl PirQuery {
    pub fn from_blocks(server: usize, blocks: Vec<Vec<KSum>>) -> Result<Self> {
        for (k, block) in blocks.iter().enumerate() {
            if let Some(bad) = block.iter().find(|sum| sum.len() != k + 1) {
                return Err(Error::Structural(format!(
                    "block {} holds a {}-sum",
                    k + 1,
                    bad.len()
                )));
            }
        }
        Ok(Self { server, blocks })
    }

    pub fn server(&self) -> usize {
        self.server
    }

    pub fn blocks(&self) -> &[Vec<KSum>] {
        &self.blocks
    }

    /// Every sum in transmission order.
    pub fn sums(&self) -> impl Iterator<Item = &KSum> {
        self.blocks.iter().flatten()
    }

    pub fn total_sums(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// Distinct sub-symbol indices requested from each message (1-based
    /// message order).
    pub fn distinct_indices_per_message(&self, messages: usize) -> Vec<usize> {
        let mut seen: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); messages];
        for term in self.sums().flat_map(|s| s.terms()) {
            if let Some(set) = seen.get_mut(term.message - 1) {
                set.insert(term.index);
            }
        }
        seen.iter().map(BTreeSet::len).collect()
    }

    /// Indices of `message` requested by this query.
    pub fn indices_of(&self, message: usize) -> BTreeSet<usize> {
        self.sums()
            .flat_map(|s| s.terms())
            .filter(|t| t.message == message)
            .map(|t| t.index)
            .collect()
    }
}

/// One uniform permutation of `[1..S^N]` per message.
///
/// `order(n)[i]` is the sub-symbol used the `(i+1)`-th time message `n`
/// needs a fresh symbol.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PermutationSet {
    perms: Vec<Vec<usize>>,
}

impl PermutationSet {
    pub fn draw<R: Rng + ?Sized>(params: &PirParams, rng: &mut R) -> Self {
        let perms = (0..params.messages())
            .map(|_| {
                let mut p: Vec<usize> = (1..=params.symbols_per_message()).collect();
                p.shuffle(rng);
                p
            })
            .collect();
        Self { perms }
    }

    pub fn identity(params: &PirParams) -> Self {
        Self {
            perms: vec![(1..=params.symbols_per_message()).collect(); params.messages()],
        }
    }

    pub fn from_orders(perms: Vec<Vec<usize>>, params: &PirParams) -> Result<Self> {
        if perms.len() != params.messages() {
            return Err(Error::Structural(format!(
                "expected {} permutations, got {}",
                params.messages(),
                perms.len()
            )));
        }
        let len = params.symbols_per_message();
        for p in &perms {
            let mut sorted = p.clone();
            sorted.sort_unstable();
            if sorted != (1..=len).collect::<Vec<_>>() {
                return Err(Error::Structural(format!(
                    "not a permutation of [1..{len}]: {p:?}"
                )));
            }
        }
        Ok(Self { perms })
    }

    pub fn order(&self, message: usize) -> &[usize] {
        &self.perms[message - 1]
    }

    /// 1-based position of `index` in message `message`'s order.
    pub fn position(&self, message: usize, index: usize) -> Option<usize> {
        self.perms
            .get(message - 1)?
            .iter()
            .position(|&x| x == index)
            .map(|p| p + 1)
    }
}

/// Builds the `S` queries for a desired message from a fixed permutation set.
///
/// The honest construction is [`CapacityAchieving`]; the trait exists so
/// audits can be pointed at alternative (for instance deliberately broken)
/// generators.
pub trait QueryGenerator: Sync {
    fn build(
        &self,
        desired: usize,
        params: &PirParams,
        perms: &PermutationSet,
    ) -> Result<Vec<PirQuery>>;
}

/// The optimal-rate construction described in the module docs.
#[derive(Debug, Clone, Copy, Default)]
pub struct CapacityAchieving;

struct Draft {
    subset: Vec<usize>,
    sum: KSum,
    undesired_only: bool,
}

struct FreshSymbols<'a> {
    perms: &'a PermutationSet,
    next: Vec<usize>,
}

impl FreshSymbols<'_> {
    fn take(&mut self, message: usize) -> Result<SymbolRef> {
        let order = self.perms.order(message);
        let slot = &mut self.next[message - 1];
        let index = *order.get(*slot).ok_or_else(|| {
            Error::Structural(format!("message {message} ran out of fresh symbols"))
        })?;
        *slot += 1;
        Ok(SymbolRef { message, index })
    }
}

impl QueryGenerator for CapacityAchieving {
    fn build(
        &self,
        desired: usize,
        params: &PirParams,
        perms: &PermutationSet,
    ) -> Result<Vec<PirQuery>> {
        let (servers, messages) = (params.servers(), params.messages());
        if desired == 0 || desired > messages {
            return Err(Error::Domain(format!(
                "desired message {desired} outside [1..{messages}]"
            )));
        }
        let undesired: Vec<usize> = (1..=messages).filter(|&n| n != desired).collect();
        let undesired_set = SubsetId::new(undesired.clone(), messages)?;
        let mut fresh = FreshSymbols {
            perms,
            next: vec![0; messages],
        };
        // drafts[s][k - 1]: sums for server s + 1, block k.
        let mut drafts: Vec<Vec<Vec<Draft>>> = (0..servers).map(|_| Vec::new()).collect();

        for server in drafts.iter_mut() {
            let mut block = Vec::with_capacity(messages);
            for n in 1..=messages {
                block.push(Draft {
                    subset: vec![n],
                    sum: KSum::new(vec![fresh.take(n)?])?,
                    undesired_only: n != desired,
                });
            }
            server.push(block);
        }

        for k in 2..=messages {
            let mut blocks: Vec<Vec<Draft>> = (0..servers).map(|_| Vec::new()).collect();
            for side_subset in undesired_set.subsets_of_size(k - 1) {
                for (s, block) in blocks.iter_mut().enumerate() {
                    for (other, other_drafts) in drafts.iter().enumerate() {
                        if other == s {
                            continue;
                        }
                        for side in other_drafts[k - 2].iter().filter(|d| {
                            d.undesired_only && d.subset == side_subset.members()
                        }) {
                            let mut terms = side.sum.terms().to_vec();
                            terms.push(fresh.take(desired)?);
                            let mut subset = side.subset.clone();
                            subset.push(desired);
                            subset.sort_unstable();
                            block.push(Draft {
                                subset,
                                sum: KSum::new(terms)?,
                                undesired_only: false,
                            });
                        }
                    }
                }
            }
            let repeats = (servers - 1).pow(k as u32 - 1);
            for subset in undesired_set.subsets_of_size(k) {
                for block in blocks.iter_mut() {
                    for _ in 0..repeats {
                        let terms = subset
                            .members()
                            .iter()
                            .map(|&n| fresh.take(n))
                            .collect::<Result<Vec<_>>>()?;
                        block.push(Draft {
                            subset: subset.members().to_vec(),
                            sum: KSum::new(terms)?,
                            undesired_only: true,
                        });
                    }
                }
            }
            for (server, block) in drafts.iter_mut().zip(blocks) {
                server.push(block);
            }
        }

        drafts
            .into_iter()
            .enumerate()
            .map(|(s, server)| {
                let blocks = server
                    .into_iter()
                    .map(|mut block| {
                        block.sort_by(|a, b| a.subset.cmp(&b.subset));
                        block.into_iter().map(|d| d.sum).collect()
                    })
                    .collect();
                PirQuery::from_blocks(s + 1, blocks)
            })
            .collect()
    }
}

/// Draw a permutation set and build the honest queries for `desired`.
pub fn generate_queries<R: Rng + ?Sized>(
    desired: usize,
    params: &PirParams,
    rng: &mut R,
) -> Result<(PermutationSet, Vec<PirQuery>)> {
    let perms = PermutationSet::draw(params, rng);
    let queries = CapacityAchieving.build(desired, params, &perms)?;
    Ok((perms, queries))
}

/// Payload type that can be XOR-accumulated.
pub trait XorSymbol: Clone {
    fn xor_assign(&mut self, other: &Self) -> Result<()>;
}

impl XorSymbol for Vec<u8> {
    fn xor_assign(&mut self, other: &Self) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::Structural(format!(
                "xor of symbols with lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        self.iter_mut().zip(other).for_each(|(a, b)| *a ^= b);
        Ok(())
    }
}

/// Placeholder payload: the set of sub-symbols XORed together. Lets the
/// structure of answers and decoding be checked without byte contents.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Tagged(pub BTreeSet<SymbolRef>);

impl Tagged {
    pub fn single(symbol: SymbolRef) -> Self {
        Self(BTreeSet::from([symbol]))
    }
}

impl XorSymbol for Tagged {
    fn xor_assign(&mut self, other: &Self) -> Result<()> {
        self.0 = self.0.symmetric_difference(&other.0).copied().collect();
        Ok(())
    }
}

/// A server's reply: one symbol per sum, in query order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PirAnswer<P = Vec<u8>> {
    pub server: usize,
    pub symbols: Vec<P>,
}

/// Answer `query`, reading sub-symbols through `fetch`.
pub fn answer_with<P, F>(query: &PirQuery, mut fetch: F) -> Result<PirAnswer<P>>
where
    P: XorSymbol,
    F: FnMut(SymbolRef) -> Result<P>,
{
    let symbols = query
        .sums()
        .map(|sum| {
            let mut terms = sum.terms().iter();
            let first = terms
                .next()
                .ok_or_else(|| Error::Structural("empty sum".into()))?;
            let mut acc = fetch(*first)?;
            for term in terms {
                acc.xor_assign(&fetch(*term)?)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PirAnswer {
        server: query.server(),
        symbols,
    })
}

/// Answer `query` over byte messages; each message is cut into `S^N`
/// equal sub-symbols.
pub fn pir_answer(query: &PirQuery, messages: &[Vec<u8>], params: &PirParams) -> Result<PirAnswer> {
    let symbol_len = sub_symbol_len(messages, params)?;
    answer_with(query, |s| {
        let msg = messages.get(s.message - 1).ok_or_else(|| {
            Error::Structural(format!("query references missing message {}", s.message))
        })?;
        let start = (s.index - 1) * symbol_len;
        Ok(msg[start..start + symbol_len].to_vec())
    })
}

fn sub_symbol_len(messages: &[Vec<u8>], params: &PirParams) -> Result<usize> {
    if messages.len() != params.messages() {
        return Err(Error::Structural(format!(
            "expected {} messages, got {}",
            params.messages(),
            messages.len()
        )));
    }
    let len = messages[0].len();
    if messages.iter().any(|m| m.len() != len) {
        return Err(Error::Structural("messages differ in length".into()));
    }
    if len % params.symbols_per_message() != 0 {
        return Err(Error::Structural(format!(
            "message length {len} is not a multiple of {} sub-symbols",
            params.symbols_per_message()
        )));
    }
    Ok(len / params.symbols_per_message())
}

/// Recover every sub-symbol of `desired`, returned in index order `1..=S^N`.
///
/// Desired-carrying sums are resolved by XORing off the matching
/// undesired-only sum, which some server returned on its own.
pub fn decode_symbols<P: XorSymbol>(
    answers: &[PirAnswer<P>],
    queries: &[PirQuery],
    perms: &PermutationSet,
    desired: usize,
) -> Result<Vec<P>> {
    if answers.len() != queries.len() {
        return Err(Error::Decode(format!(
            "{} answers for {} queries",
            answers.len(),
            queries.len()
        )));
    }
    let mut side: HashMap<&KSum, &P> = HashMap::new();
    for (query, answer) in queries.iter().zip(answers) {
        if query.total_sums() != answer.symbols.len() {
            return Err(Error::Decode(format!(
                "server {} returned {} symbols for {} sums",
                query.server(),
                answer.symbols.len(),
                query.total_sums()
            )));
        }
        for (sum, symbol) in query.sums().zip(&answer.symbols) {
            if !sum.involves(desired) {
                side.insert(sum, symbol);
            }
        }
    }

    let mut recovered: HashMap<usize, P> = HashMap::new();
    for (query, answer) in queries.iter().zip(answers) {
        for (sum, symbol) in query.sums().zip(&answer.symbols) {
            let Some(target) = sum.terms().iter().find(|t| t.message == desired) else {
                continue;
            };
            let rest = sum.without(desired);
            let mut value = symbol.clone();
            if !rest.is_empty() {
                let known = side.get(&rest).ok_or_else(|| {
                    Error::Decode(format!(
                        "sum {:?} at server {} has no matching side information",
                        sum.terms(),
                        query.server()
                    ))
                })?;
                value.xor_assign(known)?;
            }
            if recovered.insert(target.index, value).is_some() {
                return Err(Error::Decode(format!(
                    "desired sub-symbol {} requested twice",
                    target.index
                )));
            }
        }
    }

    let order = perms.order(desired);
    let mut out = Vec::with_capacity(order.len());
    for index in 1..=order.len() {
        out.push(recovered.remove(&index).ok_or_else(|| {
            Error::Decode(format!("desired sub-symbol {index} never requested"))
        })?);
    }
    Ok(out)
}

/// Decode the desired message as contiguous bytes.
pub fn pir_decode(
    answers: &[PirAnswer],
    queries: &[PirQuery],
    perms: &PermutationSet,
    desired: usize,
) -> Result<Vec<u8>> {
    Ok(decode_symbols(answers, queries, perms, desired)?.concat())
}

/// `1 + 1/S + ... + 1/S^(N-1)`.
pub fn pir_factor<T: Scalar>(servers: usize, messages: usize) -> T {
    let s = T::from_count(servers as u64);
    let mut term = T::one();
    let mut acc = T::zero();
    for _ in 0..messages {
        acc = acc + term.clone();
        term = term / s.clone();
    }
    acc
}

/// Download per desired-message size.
pub fn pir_rate<T: Scalar>(params: &PirParams) -> T {
    pir_factor(params.servers(), params.messages())
}

fn letter(message: usize) -> String {
    if message <= 26 {
        char::from(b'a' + (message - 1) as u8).to_string()
    } else {
        format!("m{message}_")
    }
}

fn label(perms: &PermutationSet, s: &SymbolRef) -> String {
    let pos = perms.position(s.message, s.index).unwrap_or(0);
    format!("{}{}", letter(s.message), pos)
}

/// Text rendering of the queries, one column per server, with symbols
/// named by their draw position (`a3` = third fresh symbol of message 1).
pub fn render_query_table(queries: &[PirQuery], perms: &PermutationSet) -> String {
    render_table(queries, |sum| {
        sum.terms()
            .iter()
            .map(|t| label(perms, t))
            .collect::<Vec<_>>()
            .join(",")
    })
}

/// Text rendering of the answers as XOR expressions over `W_n^{label}`.
pub fn render_answer_table(queries: &[PirQuery], perms: &PermutationSet) -> String {
    render_table(queries, |sum| {
        sum.terms()
            .iter()
            .map(|t| format!("W{}^{}", t.message, label(perms, t)))
            .collect::<Vec<_>>()
            .join("+")
    })
}

fn render_table(queries: &[PirQuery], cell: impl Fn(&KSum) -> String) -> String {
    let mut out = String::new();
    let header: Vec<String> = queries
        .iter()
        .map(|q| format!("server {}", q.server()))
        .collect();
    let _ = writeln!(out, "block | {}", header.join(" | "));
    let blocks = queries.iter().map(|q| q.blocks().len()).max().unwrap_or(0);
    for k in 0..blocks {
        let rows = queries.iter().map(|q| q.blocks()[k].len()).max().unwrap_or(0);
        for row in 0..rows {
            let cells: Vec<String> = queries
                .iter()
                .map(|q| q.blocks()[k].get(row).map(&cell).unwrap_or_default())
                .collect();
            let _ = writeln!(out, "{:>5} | {}", k + 1, cells.join(" | "));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Exact;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn labels(q: &PirQuery, perms: &PermutationSet) -> Vec<Vec<String>> {
        q.blocks()
            .iter()
            .map(|block| {
                block
                    .iter()
                    .map(|s| {
                        s.terms()
                            .iter()
                            .map(|t| label(perms, t))
                            .collect::<Vec<_>>()
                            .join("+")
                    })
                    .collect()
            })
            .collect()
    }

    fn random_messages(params: &PirParams, symbol_len: usize, seed: u64) -> Vec<Vec<u8>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..params.messages())
            .map(|_| {
                (0..symbol_len * params.symbols_per_message())
                    .map(|_| rand::Rng::random::<u8>(&mut rng))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn table_one_layout() {
        let params = PirParams::new(2, 3).unwrap();
        let perms = PermutationSet::identity(&params);
        let queries = CapacityAchieving.build(1, &params, &perms).unwrap();
        let s1 = labels(&queries[0], &perms);
        let s2 = labels(&queries[1], &perms);
        assert_eq!(s1[0], ["a1", "b1", "c1"]);
        assert_eq!(s2[0], ["a2", "b2", "c2"]);
        assert_eq!(s1[1], ["a3+b2", "a5+c2", "b3+c3"]);
        assert_eq!(s2[1], ["a4+b1", "a6+c1", "b4+c4"]);
        assert_eq!(s1[2], ["a7+b4+c4"]);
        assert_eq!(s2[2], ["a8+b3+c3"]);
    }

    #[test]
    fn block_counts() {
        let params = PirParams::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, queries) = generate_queries(1, &params, &mut rng).unwrap();
        for q in &queries {
            let sizes: Vec<usize> = q.blocks().iter().map(Vec::len).collect();
            assert_eq!(sizes, [3, 3, 1]);
            assert_eq!(q.total_sums(), 7);
        }

        let params = PirParams::new(3, 2).unwrap();
        let (_, queries) = generate_queries(2, &params, &mut rng).unwrap();
        for q in &queries {
            let sizes: Vec<usize> = q.blocks().iter().map(Vec::len).collect();
            assert_eq!(sizes, [2, 2]);
            assert_eq!(q.total_sums(), params.sums_per_server());
        }
    }

    #[test]
    fn single_message_is_one_singleton_per_server() {
        let params = PirParams::new(2, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (perms, queries) = generate_queries(1, &params, &mut rng).unwrap();
        assert_eq!(queries.len(), 2);
        for q in &queries {
            assert_eq!(q.blocks().len(), 1);
            assert_eq!(q.blocks()[0].len(), 1);
        }
        let messages = random_messages(&params, 3, 4);
        let answers: Vec<_> = queries
            .iter()
            .map(|q| pir_answer(q, &messages, &params).unwrap())
            .collect();
        assert_eq!(pir_decode(&answers, &queries, &perms, 1).unwrap(), messages[0]);
    }

    #[test]
    fn answer_singleton_and_pair() {
        let params = PirParams::new(2, 3).unwrap();
        let messages = random_messages(&params, 2, 9);
        let single = PirQuery::from_blocks(
            1,
            vec![vec![KSum::new(vec![SymbolRef { message: 1, index: 3 }]).unwrap()]],
        )
        .unwrap();
        let a = pir_answer(&single, &messages, &params).unwrap();
        assert_eq!(a.symbols[0], messages[0][4..6]);

        let pair = PirQuery::from_blocks(
            1,
            vec![
                vec![],
                vec![KSum::new(vec![
                    SymbolRef { message: 1, index: 3 },
                    SymbolRef { message: 2, index: 2 },
                ])
                .unwrap()],
            ],
        )
        .unwrap();
        let a = pir_answer(&pair, &messages, &params).unwrap();
        let expected: Vec<u8> = messages[0][4..6]
            .iter()
            .zip(&messages[1][2..4])
            .map(|(x, y)| x ^ y)
            .collect();
        assert_eq!(a.symbols[0], expected);
    }

    #[test]
    fn zero_messages_give_zero_answers() {
        let params = PirParams::new(3, 2).unwrap();
        let messages = vec![vec![0u8; 18]; 2];
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, queries) = generate_queries(1, &params, &mut rng).unwrap();
        for q in &queries {
            let a = pir_answer(q, &messages, &params).unwrap();
            assert!(a.symbols.iter().all(|s| s == &vec![0u8, 0]));
        }
    }

    #[test]
    fn mismatched_message_lengths_rejected() {
        let params = PirParams::new(2, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (_, queries) = generate_queries(1, &params, &mut rng).unwrap();
        let messages = vec![vec![0u8; 8], vec![0u8; 4]];
        assert!(matches!(
            pir_answer(&queries[0], &messages, &params),
            Err(Error::Structural(_))
        ));
        let messages = vec![vec![0u8; 6], vec![0u8; 6]];
        assert!(pir_answer(&queries[0], &messages, &params).is_err());
    }

    #[test]
    fn tagged_decode_recovers_every_desired_symbol() {
        let params = PirParams::new(2, 3).unwrap();
        let perms = PermutationSet::identity(&params);
        let queries = CapacityAchieving.build(1, &params, &perms).unwrap();
        let answers: Vec<PirAnswer<Tagged>> = queries
            .iter()
            .map(|q| answer_with(q, |s| Ok(Tagged::single(s))).unwrap())
            .collect();
        let out = decode_symbols(&answers, &queries, &perms, 1).unwrap();
        for (i, sym) in out.iter().enumerate() {
            assert_eq!(sym, &Tagged::single(SymbolRef { message: 1, index: i + 1 }));
        }
    }

    #[test]
    fn decode_reports_unresolvable_sum() {
        let params = PirParams::new(2, 2).unwrap();
        let perms = PermutationSet::identity(&params);
        let mut queries = CapacityAchieving.build(1, &params, &perms).unwrap();
        // Drop server 2's undesired singleton so server 1's pair has no side info.
        let mut blocks = queries[1].blocks().to_vec();
        blocks[0].retain(|s| s.involves(1));
        queries[1] = PirQuery::from_blocks(2, blocks).unwrap();
        let answers: Vec<PirAnswer<Tagged>> = queries
            .iter()
            .map(|q| answer_with(q, |s| Ok(Tagged::single(s))).unwrap())
            .collect();
        let err = decode_symbols(&answers, &queries, &perms, 1).unwrap_err();
        assert!(matches!(err, Error::Decode(msg) if msg.contains("side information")));
    }

    #[test]
    fn rate_values() {
        let r: Exact = pir_rate(&PirParams::new(2, 3).unwrap());
        assert_eq!(r, Exact::new(7.into(), 4.into()));
        let r: Exact = pir_rate(&PirParams::new(2, 1).unwrap());
        assert_eq!(r, Exact::from_integer(1.into()));
        let r: Exact = pir_rate(&PirParams::new(3, 2).unwrap());
        assert_eq!(r, Exact::new(4.into(), 3.into()));
        let f: f64 = pir_rate(&PirParams::new(2, 3).unwrap());
        assert!((f - 1.75).abs() < 1e-12);
    }

    #[test]
    fn invalid_params() {
        assert!(PirParams::new(1, 3).is_err());
        assert!(PirParams::new(2, 0).is_err());
        let params = PirParams::new(2, 2).unwrap();
        let perms = PermutationSet::identity(&params);
        assert!(CapacityAchieving.build(3, &params, &perms).is_err());
        assert!(PermutationSet::from_orders(vec![vec![1, 1, 2, 3], vec![1, 2, 3, 4]], &params).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_and_accounting(
            servers in 2usize..=3,
            messages in 1usize..=3,
            desired_pick in 0usize..3,
            seed in any::<u64>(),
        ) {
            let params = PirParams::new(servers, messages).unwrap();
            let desired = desired_pick % messages + 1;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (perms, queries) = generate_queries(desired, &params, &mut rng).unwrap();
            let data = random_messages(&params, 2, seed ^ 0x55);
            let answers: Vec<_> = queries
                .iter()
                .map(|q| pir_answer(q, &data, &params).unwrap())
                .collect();
            prop_assert_eq!(&pir_decode(&answers, &queries, &perms, desired).unwrap(), &data[desired - 1]);

            let downloaded: usize = answers.iter().flat_map(|a| &a.symbols).map(Vec::len).sum();
            let measured = Exact::new(downloaded.into(), data[0].len().into());
            prop_assert_eq!(measured, pir_rate::<Exact>(&params));

            let mut desired_seen = BTreeSet::new();
            for q in &queries {
                prop_assert_eq!(q.total_sums(), params.sums_per_server());
                for (k, block) in q.blocks().iter().enumerate() {
                    prop_assert_eq!(block.len(), params.sums_in_block(k + 1));
                }
                let per_message = q.distinct_indices_per_message(messages);
                prop_assert!(per_message.iter().all(|&c| c == params.symbols_per_message() / servers));
                let mine = q.indices_of(desired);
                prop_assert!(desired_seen.is_disjoint(&mine));
                desired_seen.extend(mine);
                let terms: Vec<_> = q.sums().flat_map(|s| s.terms()).collect();
                let unique: BTreeSet<_> = terms.iter().collect();
                prop_assert_eq!(terms.len(), unique.len());
            }
        }
    }
}
