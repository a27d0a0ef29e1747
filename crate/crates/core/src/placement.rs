//! Uncoded placement: files split into subfiles `W(n, T)` indexed by
//! `t`-subsets `T` of the caches, cache `c` storing every subfile whose
//! index contains `c`, and the maps telling which caches each user reads.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::combinatorics::{choose, enumerate_subsets, SubsetId};
use crate::error::{Error, Result};
use crate::pir::PirParams;
use crate::Exact;

/// Every parameter of one system instance.
///
/// `t = C M / N` is the number of caches holding each subfile; the cache
/// fraction `M / N` is `t / C`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemParams {
    servers: usize,
    files: usize,
    caches: usize,
    access_degree: usize,
    t: usize,
    file_bytes: usize,
}

impl SystemParams {
    pub fn new(
        servers: usize,
        files: usize,
        caches: usize,
        access_degree: usize,
        t: usize,
        file_bytes: usize,
    ) -> Result<Self> {
        if servers < 2 {
            return Err(Error::InvalidParams(format!(
                "need S >= 2 servers, got {servers}"
            )));
        }
        if files == 0 {
            return Err(Error::InvalidParams("need N >= 1 files".into()));
        }
        if access_degree == 0 || access_degree >= caches {
            return Err(Error::InvalidParams(format!(
                "need 1 <= L < C, got L = {access_degree}, C = {caches}"
            )));
        }
        if t > caches {
            return Err(Error::InvalidParams(format!(
                "need 0 <= t <= C, got t = {t}, C = {caches}"
            )));
        }
        if file_bytes == 0 {
            return Err(Error::InvalidParams("file size must be positive".into()));
        }
        let params = Self {
            servers,
            files,
            caches,
            access_degree,
            t,
            file_bytes,
        };
        params.subpacketization()?;
        Ok(params)
    }

    /// Derive `t = C M / N` from a cache size `M` (in files), rejecting
    /// sizes where it is not an integer.
    pub fn from_cache_size(
        servers: usize,
        files: usize,
        caches: usize,
        access_degree: usize,
        cache_size: &Exact,
        file_bytes: usize,
    ) -> Result<Self> {
        let t = cache_size * Exact::from_integer(caches.into()) / Exact::from_integer(files.into());
        if !t.is_integer() {
            return Err(Error::InvalidParams(format!(
                "t = CM/N must be an integer; got {}",
                crate::fmt_exact(&t)
            )));
        }
        let t = usize::try_from(t.to_integer())
            .map_err(|_| Error::InvalidParams("t = CM/N must be non-negative".into()))?;
        Self::new(servers, files, caches, access_degree, t, file_bytes)
    }

    pub fn servers(&self) -> usize {
        self.servers
    }

    pub fn files(&self) -> usize {
        self.files
    }

    pub fn caches(&self) -> usize {
        self.caches
    }

    pub fn access_degree(&self) -> usize {
        self.access_degree
    }

    pub fn t(&self) -> usize {
        self.t
    }

    /// Requested (unpadded) file size.
    pub fn file_bytes(&self) -> usize {
        self.file_bytes
    }

    pub fn with_access_degree(&self, access_degree: usize) -> Result<Self> {
        Self::new(
            self.servers,
            self.files,
            self.caches,
            access_degree,
            self.t,
            self.file_bytes,
        )
    }

    pub fn pir_params(&self) -> PirParams {
        PirParams::new(self.servers, self.files).expect("validated at construction")
    }

    /// `binom(C, t)`.
    pub fn subfiles_per_file(&self) -> usize {
        choose(self.caches, self.t).expect("validated at construction") as usize
    }

    /// `binom(C, t) * S^N`, the number of pieces each file is cut into.
    pub fn subpacketization(&self) -> Result<usize> {
        let subfiles = choose(self.caches, self.t)?;
        let pir = PirParams::new(self.servers, self.files)?;
        usize::try_from(subfiles)
            .ok()
            .and_then(|s| s.checked_mul(pir.symbols_per_message()))
            .ok_or_else(|| Error::Overflow("subpacketization".into()))
    }

    /// File size after zero padding to a multiple of the subpacketization.
    pub fn padded_file_bytes(&self) -> usize {
        let unit = self.subpacketization().expect("validated at construction");
        self.file_bytes.div_ceil(unit) * unit
    }

    pub fn subfile_bytes(&self) -> usize {
        self.padded_file_bytes() / self.subfiles_per_file()
    }

    pub fn sub_subfile_bytes(&self) -> usize {
        self.padded_file_bytes() / self.subpacketization().expect("validated at construction")
    }

    /// `M / N = t / C`.
    pub fn cache_fraction(&self) -> Exact {
        Exact::new(self.t.into(), self.caches.into())
    }

    /// Whether any user misses a subfile, i.e. `t + L <= C`.
    pub fn needs_delivery(&self) -> bool {
        self.t + self.access_degree <= self.caches
    }
}

/// Where file contents come from.
#[derive(Debug, Clone)]
pub enum LibrarySource {
    /// `N` files of `file_bytes` pseudo-random bytes from this seed.
    Seeded(u64),
    /// Caller-supplied files, each at most `file_bytes` long.
    Raw(Vec<Vec<u8>>),
}

/// The `N` padded files and their subfile partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileLibrary {
    params: SystemParams,
    files: Vec<Vec<u8>>,
    original_lengths: Vec<usize>,
    subfile_index: Vec<SubsetId>,
    positions: HashMap<SubsetId, usize>,
}

impl FileLibrary {
    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn files(&self) -> &[Vec<u8>] {
        &self.files
    }

    pub fn original_lengths(&self) -> &[usize] {
        &self.original_lengths
    }

    /// The file as supplied, without padding.
    pub fn original(&self, file: usize) -> &[u8] {
        &self.files[file - 1][..self.original_lengths[file - 1]]
    }

    /// Subfile indices in canonical order.
    pub fn subfile_index(&self) -> &[SubsetId] {
        &self.subfile_index
    }

    pub fn subfile(&self, file: usize, index: &SubsetId) -> Result<&[u8]> {
        let pos = *self.positions.get(index).ok_or_else(|| {
            Error::Structural(format!("{index} is not a subfile index"))
        })?;
        let data = self
            .files
            .get(file.wrapping_sub(1))
            .ok_or_else(|| Error::Structural(format!("no file {file}")))?;
        let len = self.params.subfile_bytes();
        Ok(&data[pos * len..(pos + 1) * len])
    }

    /// `W([N], T)`: the `N` subfiles sharing one index, as PIR messages.
    pub fn subfile_messages(&self, index: &SubsetId) -> Result<Vec<Vec<u8>>> {
        (1..=self.params.files())
            .map(|n| self.subfile(n, index).map(<[u8]>::to_vec))
            .collect()
    }
}

pub fn make_library(params: &SystemParams, source: LibrarySource) -> Result<FileLibrary> {
    let padded = params.padded_file_bytes();
    let raw = match source {
        LibrarySource::Seeded(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..params.files())
                .map(|_| {
                    let mut f = vec![0u8; params.file_bytes()];
                    rng.fill_bytes(&mut f);
                    f
                })
                .collect()
        }
        LibrarySource::Raw(files) => files,
    };
    if raw.is_empty() {
        return Err(Error::InvalidParams("empty file set".into()));
    }
    if raw.len() != params.files() {
        return Err(Error::InvalidParams(format!(
            "expected {} files, got {}",
            params.files(),
            raw.len()
        )));
    }
    if let Some(i) = raw.iter().position(Vec::is_empty) {
        return Err(Error::InvalidParams(format!("file {} is empty", i + 1)));
    }
    if let Some(i) = raw.iter().position(|f| f.len() > params.file_bytes()) {
        return Err(Error::InvalidParams(format!(
            "file {} has {} bytes, above the configured {}",
            i + 1,
            raw[i].len(),
            params.file_bytes()
        )));
    }
    let original_lengths = raw.iter().map(Vec::len).collect();
    let files = raw
        .into_iter()
        .map(|mut f| {
            f.resize(padded, 0);
            f
        })
        .collect();
    let subfile_index = enumerate_subsets(params.caches(), params.t());
    let positions = subfile_index
        .iter()
        .enumerate()
        .map(|(i, s)| (s.clone(), i))
        .collect();
    Ok(FileLibrary {
        params: *params,
        files,
        original_lengths,
        subfile_index,
        positions,
    })
}

/// Contents of one cache node, keyed by `(file, subfile index)` in
/// canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheNode {
    pub index: usize,
    pub entries: BTreeMap<(usize, SubsetId), Vec<u8>>,
}

impl CacheNode {
    pub fn bytes(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn subfile_indices(&self) -> Vec<&SubsetId> {
        let mut out: Vec<&SubsetId> = self.entries.keys().map(|(_, t)| t).collect();
        out.sort();
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheContents {
    nodes: Vec<CacheNode>,
}

impl CacheContents {
    pub fn nodes(&self) -> &[CacheNode] {
        &self.nodes
    }

    pub fn node(&self, index: usize) -> Option<&CacheNode> {
        self.nodes.get(index.wrapping_sub(1))
    }

    /// The read-only view of a user attached to `caches`.
    pub fn view(&self, caches: &SubsetId) -> Result<CacheView<'_>> {
        let nodes = caches
            .members()
            .iter()
            .map(|&c| {
                self.node(c)
                    .ok_or_else(|| Error::Structural(format!("no cache node {c}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CacheView { nodes })
    }
}

/// What one user can read: the union of its caches.
#[derive(Debug, Clone)]
pub struct CacheView<'a> {
    nodes: Vec<&'a CacheNode>,
}

impl CacheView<'_> {
    pub fn get(&self, file: usize, index: &SubsetId) -> Option<&[u8]> {
        let key = (file, index.clone());
        self.nodes
            .iter()
            .find_map(|n| n.entries.get(&key).map(Vec::as_slice))
    }
}

/// Cache `c` receives `W(n, T)` for every file `n` and every `T` with `c in T`.
pub fn fill_caches(library: &FileLibrary) -> Result<CacheContents> {
    let params = library.params();
    let nodes = (1..=params.caches())
        .map(|c| {
            let mut entries = BTreeMap::new();
            for index in library.subfile_index().iter().filter(|t| t.contains(c)) {
                for n in 1..=params.files() {
                    entries.insert((n, index.clone()), library.subfile(n, index)?.to_vec());
                }
            }
            Ok(CacheNode { index: c, entries })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CacheContents { nodes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    /// One user per `L`-subset of caches.
    Full,
    /// `C` users, user `k` reading caches `k, k+1, ..., k+L-1` around the ring.
    Cyclic,
}

/// Which caches each user reads. Users are addressed by their position in
/// [`AccessStructure::users`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessStructure {
    kind: AccessKind,
    caches: usize,
    access_degree: usize,
    users: Vec<SubsetId>,
}

impl AccessStructure {
    pub fn full(caches: usize, access_degree: usize) -> Result<Self> {
        Self::check(caches, access_degree)?;
        Ok(Self {
            kind: AccessKind::Full,
            caches,
            access_degree,
            users: enumerate_subsets(caches, access_degree),
        })
    }

    pub fn cyclic(caches: usize, access_degree: usize) -> Result<Self> {
        Self::check(caches, access_degree)?;
        let users = (1..=caches)
            .map(|k| SubsetId::from_unsorted(cyclic_window(k, access_degree, caches), caches))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            kind: AccessKind::Cyclic,
            caches,
            access_degree,
            users,
        })
    }

    fn check(caches: usize, access_degree: usize) -> Result<()> {
        if access_degree == 0 || access_degree >= caches {
            return Err(Error::InvalidParams(format!(
                "need 1 <= L < C, got L = {access_degree}, C = {caches}"
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> AccessKind {
        self.kind
    }

    pub fn caches(&self) -> usize {
        self.caches
    }

    pub fn access_degree(&self) -> usize {
        self.access_degree
    }

    pub fn users(&self) -> &[SubsetId] {
        &self.users
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn user(&self, user: usize) -> Result<&SubsetId> {
        self.users
            .get(user)
            .ok_or_else(|| Error::UnknownUser(format!("#{user}")))
    }

    pub fn position(&self, caches: &SubsetId) -> Option<usize> {
        self.users.iter().position(|u| u == caches)
    }
}

/// `{k, k+1, ..., k+L-1}` with residues taken in `[1..C]`.
pub fn cyclic_window(k: usize, len: usize, caches: usize) -> Vec<usize> {
    (0..len).map(|l| (k - 1 + l) % caches + 1).collect()
}

/// Subfile indices `T` with `T` meeting the user's caches.
pub fn user_visible_subfiles(
    access: &AccessStructure,
    user: usize,
    params: &SystemParams,
) -> Result<Vec<SubsetId>> {
    let caches = access.user(user)?;
    Ok(enumerate_subsets(params.caches(), params.t())
        .into_iter()
        .filter(|t| !t.is_disjoint(caches))
        .collect())
}

/// Subfile indices the user has to obtain from the servers.
pub fn user_missing_subfiles(
    access: &AccessStructure,
    user: usize,
    params: &SystemParams,
) -> Result<Vec<SubsetId>> {
    let caches = access.user(user)?;
    Ok(enumerate_subsets(params.caches(), params.t())
        .into_iter()
        .filter(|t| t.is_disjoint(caches))
        .collect())
}

const DUMP_MAGIC: &[u8; 8] = b"MUPIRCD1";
/// Bumped whenever the body layout (canonical order) changes.
pub const DUMP_FORMAT_VERSION: u32 = 1;

/// Header of a cache dump file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DumpHeader {
    pub version: u32,
    pub servers: u64,
    pub files: u64,
    pub caches: u64,
    pub access_degree: u64,
    pub t: u64,
    pub padded_file_bytes: u64,
    pub cache_index: u64,
    pub entries: u64,
    pub body_bytes: u64,
}

/// Write `cache_<c>.bin` for every cache into `dir`.
///
/// Layout (little endian): magic `MUPIRCD1`, `u32` format version, then
/// `u64` S, N, C, L, t, padded file bytes, cache index, entry count and
/// body length, then the body: the cached subfiles concatenated by file
/// (ascending) and subfile index (lexicographic).
pub fn write_cache_dumps(
    caches: &CacheContents,
    params: &SystemParams,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    caches
        .nodes()
        .iter()
        .map(|node| {
            let mut buf = Vec::with_capacity(node.bytes() + 84);
            buf.extend_from_slice(DUMP_MAGIC);
            buf.extend_from_slice(&DUMP_FORMAT_VERSION.to_le_bytes());
            for v in [
                params.servers(),
                params.files(),
                params.caches(),
                params.access_degree(),
                params.t(),
                params.padded_file_bytes(),
                node.index,
                node.entries.len(),
                node.bytes(),
            ] {
                buf.extend_from_slice(&(v as u64).to_le_bytes());
            }
            for data in node.entries.values() {
                buf.extend_from_slice(data);
            }
            let path = dir.join(format!("cache_{}.bin", node.index));
            fs::write(&path, &buf)?;
            Ok(path)
        })
        .collect()
}

/// Read a dump written by [`write_cache_dumps`].
pub fn read_cache_dump(path: &Path) -> Result<(DumpHeader, Vec<u8>)> {
    let mut file = fs::File::open(path)?;
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::Structural(format!("{} is not a cache dump", path.display())));
    }
    let mut v = [0u8; 4];
    file.read_exact(&mut v)?;
    let version = u32::from_le_bytes(v);
    let mut fields = [0u64; 9];
    for f in fields.iter_mut() {
        let mut b = [0u8; 8];
        file.read_exact(&mut b)?;
        *f = u64::from_le_bytes(b);
    }
    let header = DumpHeader {
        version,
        servers: fields[0],
        files: fields[1],
        caches: fields[2],
        access_degree: fields[3],
        t: fields[4],
        padded_file_bytes: fields[5],
        cache_index: fields[6],
        entries: fields[7],
        body_bytes: fields[8],
    };
    let mut body = Vec::new();
    file.read_to_end(&mut body)?;
    if body.len() as u64 != header.body_bytes {
        return Err(Error::Structural(format!(
            "dump body has {} bytes, header says {}",
            body.len(),
            header.body_bytes
        )));
    }
    Ok((header, body))
}
