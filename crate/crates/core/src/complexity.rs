//! Patch enumeration and complexity tables.
//!
//! A patch of depth `n` is the first `n` lines of some subtree of the fixed
//! point. `K_n` is the set of such patches and `kappa_n = |K_n|`.
//!
//! [`Census`] computes `K_n` by scanning the depth-`n` windows of a generated
//! prefix at increasing generation depths until the scanned set is certified
//! complete. [`closure_patch_sets`] computes the same sets by an exact
//! recursion on patches alone, and [`image_count`] counts the even-level
//! patches through the substitution map; both serve as cross-checks.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{Read, Write};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use rayon::ThreadPool;
use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::error::{Error, Result};
use crate::shared::{NodeId, SubtreeStore};
use crate::structure::type_of_address;
use crate::tree::{Substreetution, TreePrefix, MAX_DEPTH};

/// A depth-`n` window, compared and hashed by its `(depth, level-order bits)` encoding.
pub type Patch = TreePrefix;

/// Smallest witnessing address per parity class, plus whether the root window is one.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witnesses {
    pub odd: Option<Address>,
    pub even: Option<Address>,
    pub root: bool,
}

impl Witnesses {
    pub(crate) fn note(&mut self, address: Address) {
        if address.is_empty() {
            self.root = true;
            return;
        }
        let slot = match type_of_address(&address) {
            Ok(tag) if tag.is_odd() => &mut self.odd,
            _ => &mut self.even,
        };
        if slot.as_ref().is_none_or(|w| address < *w) {
            *slot = Some(address);
        }
    }

    fn merge(&mut self, other: Witnesses) {
        self.root |= other.root;
        for (mine, theirs) in [(&mut self.odd, other.odd), (&mut self.even, other.even)] {
            if let Some(w) = theirs {
                if mine.as_ref().is_none_or(|m| w < *m) {
                    *mine = Some(w);
                }
            }
        }
    }

    pub fn has_odd(&self) -> bool {
        self.odd.is_some()
    }

    /// The root of the fixed point is itself a substitution image, so the
    /// root window counts as an even witness.
    pub fn has_even(&self) -> bool {
        self.even.is_some() || self.root
    }
}

/// The distinct depth-`n` windows found in a prefix, with witnesses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchSet {
    n: u32,
    generation_depth: u32,
    patches: BTreeMap<Patch, Witnesses>,
}

impl PatchSet {
    pub fn n(&self) -> u32 {
        self.n
    }

    /// Depth of the prefix that was scanned.
    pub fn generation_depth(&self) -> u32 {
        self.generation_depth
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn contains(&self, p: &Patch) -> bool {
        self.patches.contains_key(p)
    }

    pub fn witnesses(&self, p: &Patch) -> Option<&Witnesses> {
        self.patches.get(p)
    }

    /// Patches in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (&Patch, &Witnesses)> {
        self.patches.iter()
    }

    pub fn patches(&self) -> impl Iterator<Item = &Patch> {
        self.patches.keys()
    }

    pub fn to_set(&self) -> BTreeSet<Patch> {
        self.patches.keys().cloned().collect()
    }

    pub fn odd_count(&self) -> usize {
        self.patches.values().filter(|w| w.has_odd()).count()
    }

    pub fn even_count(&self) -> usize {
        self.patches.values().filter(|w| w.has_even()).count()
    }
}

fn build_pool(workers: usize) -> Result<ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameters(format!("thread pool: {e}")))
}

/// All depth-`n` windows of `tree` rooted at addresses with `|w| <= tree.depth() - n`.
pub fn enumerate_patches(tree: &TreePrefix, n: u32, workers: usize) -> Result<PatchSet> {
    let pool = build_pool(workers)?;
    enumerate_in(&pool, workers.max(1), tree, n, tree.depth())
}

/// Windows of the first `generation_depth` lines of `tree`.
fn enumerate_in(
    pool: &ThreadPool,
    workers: usize,
    tree: &TreePrefix,
    n: u32,
    generation_depth: u32,
) -> Result<PatchSet> {
    if n == 0 || n > generation_depth || generation_depth > tree.depth() {
        return Err(Error::PatchDepth {
            n,
            depth: generation_depth.min(tree.depth()),
        });
    }
    let max_level = generation_depth - n;
    // tasks: one for the levels above the split, one per split prefix
    let split = (usize::BITS - (workers - 1).leading_zeros()).min(max_level + 1);
    let mut tasks: Vec<(u32, u64)> = vec![(u32::MAX, 0)];
    tasks.extend((0..1u64 << split).map(|prefix| (split, prefix)));

    let scan = |&(split_len, prefix): &(u32, u64)| -> HashMap<Patch, Witnesses> {
        let mut local: HashMap<Patch, Witnesses> = HashMap::new();
        let mut visit = |level: u32, pos: u64| {
            let p = tree.window_at(level, pos as usize, n);
            local
                .entry(p)
                .or_default()
                .note(Address::from_position(level as usize, pos));
        };
        if split_len == u32::MAX {
            for level in 0..split {
                for pos in 0..1u64 << level {
                    visit(level, pos);
                }
            }
        } else {
            for level in split_len..=max_level {
                let width = 1u64 << (level - split_len);
                for pos in prefix * width..(prefix + 1) * width {
                    visit(level, pos);
                }
            }
        }
        local
    };

    let parts: Vec<HashMap<Patch, Witnesses>> =
        pool.install(|| tasks.par_iter().map(scan).collect());
    let mut patches: BTreeMap<Patch, Witnesses> = BTreeMap::new();
    for part in parts {
        for (p, w) in part {
            patches.entry(p).or_default().merge(w);
        }
    }
    Ok(PatchSet {
        n,
        generation_depth,
        patches,
    })
}

/// How the fixed point is held while its windows are scanned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// One bit per site, scanned in parallel. Memory is `2^cap` bits.
    Packed,
    /// Hash-consed subtrees ([`SubtreeStore`]). Memory grows with the number
    /// of distinct subtrees, so generation depths in the hundreds are cheap.
    #[default]
    Shared,
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "packed" => Ok(Backend::Packed),
            "shared" => Ok(Backend::Shared),
            _ => Err(Error::Parse(format!("unknown backend {s:?}"))),
        }
    }
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Packed => "packed",
            Backend::Shared => "shared",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusConfig {
    pub backend: Backend,
    /// Largest generation depth.
    pub cap: u32,
    /// Threads for the packed scan.
    pub workers: usize,
    /// First generation depth tried is `n + first_margin`.
    pub first_margin: u32,
    pub step: u32,
}

impl Default for CensusConfig {
    fn default() -> Self {
        CensusConfig {
            backend: Backend::Shared,
            cap: 96,
            workers: 1,
            first_margin: 8,
            step: 2,
        }
    }
}

impl CensusConfig {
    /// Packed backend with the given cap.
    pub fn packed(cap: u32) -> Self {
        CensusConfig {
            backend: Backend::Packed,
            cap,
            ..Default::default()
        }
    }

    /// Generation depths tried for patch depth `n`: `n + margin, n + margin + step, ...`
    /// up to the cap. When fewer than two of those fit, the schedule is the
    /// two deepest depths `cap - step, cap` (or just `cap` if `n > cap - step`).
    pub fn schedule(&self, n: u32) -> Vec<u32> {
        let step = self.step.max(1);
        let start = if n + self.first_margin + step <= self.cap {
            n + self.first_margin
        } else if n + step <= self.cap {
            self.cap - step
        } else {
            self.cap
        };
        (start..=self.cap).step_by(step as usize).filter(|&d| d >= n).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.cap == 0 {
            return Err(Error::ZeroDepth);
        }
        if self.backend == Backend::Packed && self.cap > MAX_DEPTH {
            return Err(Error::DepthTooLarge {
                depth: self.cap,
                max: MAX_DEPTH,
            });
        }
        Ok(())
    }
}

/// `K_n` with the generation depths that were tried.
///
/// `stabilized` means the scanned set is closed under the two ways windows
/// arise from smaller ones: even-level windows are substitution images of
/// windows of half the depth, odd-level windows are children of even-level
/// windows one line deeper. A family of scanned sets that contains the root
/// windows and is closed under both is all of `K_1 .. K_n`, by induction on
/// the address length. Agreement of two successive generation depths is not
/// enough: some patches first occur at levels that roughly double with `n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchCensus {
    pub patches: PatchSet,
    pub stabilized: bool,
    /// `(generation depth, count)` per run, in order.
    pub attempts: Vec<(u32, usize)>,
}

impl PatchCensus {
    pub fn n(&self) -> u32 {
        self.patches.n
    }

    pub fn kappa(&self) -> usize {
        self.patches.len()
    }

    pub fn generation_depth(&self) -> u32 {
        self.patches.generation_depth
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaValue {
    pub kappa: usize,
    pub stabilized: bool,
    pub generation_depth: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaSplit {
    pub odd: usize,
    pub even: usize,
    pub stabilized: bool,
}

struct State {
    store: SubtreeStore,
    /// Shared-backend fixed point per generation depth.
    roots: BTreeMap<u32, NodeId>,
    /// `K_n` as store ids, for every census computed so far.
    ids: BTreeMap<u32, BTreeSet<NodeId>>,
    memo: BTreeMap<u32, Arc<PatchCensus>>,
}

/// Patch censuses of one fixed point, memoized per depth.
pub struct Census {
    substitution: Substreetution,
    root: u8,
    config: CensusConfig,
    packed: Option<TreePrefix>,
    pool: ThreadPool,
    state: Mutex<State>,
}

impl Census {
    /// For the packed backend this generates the fixed point to `config.cap` lines.
    pub fn new(substitution: Substreetution, root: u8, config: CensusConfig) -> Result<Self> {
        config.validate()?;
        let packed = match config.backend {
            Backend::Packed => Some(substitution.fixed_point(root, config.cap)?),
            Backend::Shared => {
                if !substitution.fixes(root) {
                    return Err(Error::NonFixedRoot { color: root });
                }
                None
            }
        };
        Census::build(substitution, root, config, packed)
    }

    pub fn jacaranda(config: CensusConfig) -> Result<Self> {
        Census::new(Substreetution::jacaranda(), 0, config)
    }

    /// Packed backend over an already generated prefix (e.g. loaded from a cache file).
    pub fn with_tree(
        substitution: Substreetution,
        tree: TreePrefix,
        config: CensusConfig,
    ) -> Result<Self> {
        let config = CensusConfig {
            backend: Backend::Packed,
            ..config
        };
        config.validate()?;
        if tree.depth() < config.cap {
            return Err(Error::DepthMismatch {
                left: tree.depth(),
                right: config.cap,
            });
        }
        let tree = tree.truncate(config.cap)?;
        let expected = substitution.apply_truncated(&tree.truncate(config.cap.div_ceil(2))?, config.cap);
        if expected != tree || !substitution.fixes(tree.root()) {
            return Err(Error::InvalidParameters(
                "tree prefix is not a fixed point of the substitution".into(),
            ));
        }
        let root = tree.root();
        Census::build(substitution, root, config, Some(tree))
    }

    fn build(
        substitution: Substreetution,
        root: u8,
        config: CensusConfig,
        packed: Option<TreePrefix>,
    ) -> Result<Self> {
        let pool = build_pool(config.workers)?;
        Ok(Census {
            state: Mutex::new(State {
                store: SubtreeStore::new(substitution.clone()),
                roots: BTreeMap::new(),
                ids: BTreeMap::new(),
                memo: BTreeMap::new(),
            }),
            substitution,
            root,
            config,
            packed,
            pool,
        })
    }

    pub fn substitution(&self) -> &Substreetution {
        &self.substitution
    }

    pub fn root(&self) -> u8 {
        self.root
    }

    pub fn config(&self) -> &CensusConfig {
        &self.config
    }

    /// The generated prefix, for the packed backend.
    pub fn packed_tree(&self) -> Option<&TreePrefix> {
        self.packed.as_ref()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, State> {
        self.state.lock().expect("census state lock")
    }

    /// Windows of the generation-depth prefix, keyed by store id.
    fn scan(&self, n: u32, depth: u32) -> Result<BTreeMap<NodeId, Witnesses>> {
        match &self.packed {
            Some(tree) => {
                let set = enumerate_in(&self.pool, self.config.workers.max(1), tree, n, depth)?;
                let mut st = self.lock();
                Ok(set
                    .patches
                    .into_iter()
                    .map(|(p, w)| (st.store.from_prefix(&p), w))
                    .collect())
            }
            None => {
                let mut guard = self.lock();
                let st = &mut *guard;
                let tree = match st.roots.get(&depth) {
                    Some(&t) => t,
                    None => {
                        let t = st.store.fixed_point(self.root, depth)?;
                        st.roots.insert(depth, t);
                        t
                    }
                };
                st.store.windows(tree, n)
            }
        }
    }

    /// Whether `found` (a scan for depth `n`) is closed under images and
    /// children, given the already computed smaller censuses.
    fn closed(&self, n: u32, found: &BTreeMap<NodeId, Witnesses>) -> bool {
        let mut guard = self.lock();
        let st = &mut *guard;
        let source = |m: u32| -> Vec<NodeId> {
            if m == n {
                found.keys().copied().collect()
            } else {
                st.ids[&m].iter().copied().collect()
            }
        };
        let evens = source(n.div_ceil(2));
        let odds = source((n + 1).div_ceil(2));
        for p in evens {
            let e = st.store.apply_truncated(p, n);
            if !found.contains_key(&e) {
                return false;
            }
        }
        for p in odds {
            let q = st.store.apply_truncated(p, n + 1);
            let (a, b) = st.store.children(q).expect("depth n + 1 >= 2");
            if !found.contains_key(&a) || !found.contains_key(&b) {
                return false;
            }
        }
        true
    }

    /// `K_n`, scanned at the schedule's generation depths until the scanned
    /// set is certified complete (see [`PatchCensus`]) or the cap is reached.
    pub fn patches(&self, n: u32) -> Result<Arc<PatchCensus>> {
        if n == 0 || n > self.config.cap {
            return Err(Error::PatchDepth {
                n,
                depth: self.config.cap,
            });
        }
        if let Some(c) = self.lock().memo.get(&n) {
            return Ok(Arc::clone(c));
        }
        let mut deps_stable = true;
        for m in [n.div_ceil(2), (n + 1).div_ceil(2)] {
            if m < n {
                deps_stable &= self.patches(m)?.stabilized;
            }
        }
        let mut attempts = Vec::new();
        let mut last = None;
        let mut stabilized = false;
        for depth in self.config.schedule(n) {
            let found = self.scan(n, depth)?;
            attempts.push((depth, found.len()));
            stabilized = deps_stable && self.closed(n, &found);
            last = Some((depth, found));
            if stabilized {
                break;
            }
        }
        let (depth, found) = last.expect("schedule is never empty");
        let mut st = self.lock();
        let patches = found
            .iter()
            .map(|(&id, w)| (st.store.to_prefix(id), w.clone()))
            .collect();
        st.ids.insert(n, found.into_keys().collect());
        let census = Arc::new(PatchCensus {
            patches: PatchSet {
                n,
                generation_depth: depth,
                patches,
            },
            stabilized,
            attempts,
        });
        st.memo.insert(n, Arc::clone(&census));
        Ok(census)
    }

    /// A census that must be stabilized.
    pub fn stable_patches(&self, n: u32) -> Result<Arc<PatchCensus>> {
        let c = self.patches(n)?;
        if !c.stabilized {
            return Err(Error::NotStabilized { n });
        }
        Ok(c)
    }

    pub fn kappa(&self, n: u32) -> Result<KappaValue> {
        let c = self.patches(n)?;
        Ok(KappaValue {
            kappa: c.kappa(),
            stabilized: c.stabilized,
            generation_depth: c.generation_depth(),
        })
    }

    /// `(kappa_{n,o}, kappa_{n,e})`: patches with an odd / even witness. A
    /// patch may count in both.
    pub fn kappa_split(&self, n: u32) -> Result<KappaSplit> {
        let c = self.patches(n)?;
        Ok(KappaSplit {
            odd: c.patches.odd_count(),
            even: c.patches.even_count(),
            stabilized: c.stabilized,
        })
    }

    /// `|{H(P) : P in K_n}|`, the count of even-level patches of depth `2n`,
    /// computed on the stabilized `K_n` without scanning depth `2n`.
    pub fn kappa_even_via_bijection(&self, n: u32) -> Result<ImageCount> {
        self.stable_patches(n)?;
        let mut guard = self.lock();
        let st = &mut *guard;
        let sources: Vec<NodeId> = st.ids[&n].iter().copied().collect();
        let images: BTreeSet<NodeId> = sources.iter().map(|&p| st.store.apply(p)).collect();
        Ok(ImageCount {
            sources: sources.len(),
            images: images.len(),
        })
    }

    pub fn table(&self, n_max: u32) -> Result<KappaTable> {
        let mut rows = Vec::with_capacity(n_max as usize);
        for n in 1..=n_max {
            let c = self.patches(n)?;
            rows.push(KappaRow {
                n,
                kappa: c.kappa(),
                kappa_odd: c.patches.odd_count(),
                kappa_even: c.patches.even_count(),
                n_used: c.generation_depth(),
                stabilized: c.stabilized,
            });
        }
        Ok(KappaTable { rows })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageCount {
    pub sources: usize,
    pub images: usize,
}

impl ImageCount {
    pub fn injective(&self) -> bool {
        self.sources == self.images
    }
}

/// Counts the distinct substitution images of the given patches.
pub fn image_count<'a, I: IntoIterator<Item = &'a Patch>>(
    s: &Substreetution,
    patches: I,
) -> Result<ImageCount> {
    let mut sources = 0;
    let images: BTreeSet<Patch> = patches
        .into_iter()
        .inspect(|_| sources += 1)
        .map(|p| s.apply(p))
        .collect::<Result<_>>()?;
    Ok(ImageCount {
        sources,
        images: images.len(),
    })
}

/// Exact `K_1 .. K_{n_max}` of the fixed point with the given root, by the
/// recursion
///
/// `K_n = trunc_n H(K_{ceil(n/2)})  ∪  { T_a P, T_b P : P in trunc_{n+1} H(K_{ceil((n+1)/2)}) }`.
///
/// Windows at even levels (including the root) are images of windows of half
/// the depth; windows at odd levels are children of even-level windows. For
/// `n <= 2` the recursion refers to `K_n` itself and is iterated to its least
/// fixed point from the root window. Index `i` of the result holds `K_{i+1}`.
pub fn closure_patch_sets(
    s: &Substreetution,
    root: u8,
    n_max: u32,
) -> Result<Vec<BTreeSet<Patch>>> {
    let seed = s.fixed_point(root, n_max.max(1))?;
    let mut sets: Vec<BTreeSet<Patch>> = Vec::with_capacity(n_max as usize);
    let a: Address = "a".parse()?;
    let b: Address = "b".parse()?;
    for n in 1..=n_max {
        let mut current: BTreeSet<Patch> = BTreeSet::from([seed.truncate(n)?]);
        loop {
            let lookup = |m: u32| -> &BTreeSet<Patch> {
                if m == n {
                    &current
                } else {
                    &sets[m as usize - 1]
                }
            };
            let mut next = current.clone();
            for p in lookup(n.div_ceil(2)) {
                next.insert(s.apply_truncated(p, n));
            }
            for p in lookup((n + 1).div_ceil(2)) {
                let q = s.apply_truncated(p, n + 1);
                next.insert(q.shift(&a)?);
                next.insert(q.shift(&b)?);
            }
            if next == current {
                break;
            }
            current = next;
        }
        sets.push(current);
    }
    Ok(sets)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaRow {
    pub n: u32,
    pub kappa: usize,
    pub kappa_odd: usize,
    pub kappa_even: usize,
    #[serde(rename = "N_used")]
    pub n_used: u32,
    pub stabilized: bool,
}

/// Rows for `n = 1 ..= n_max`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KappaTable {
    pub rows: Vec<KappaRow>,
}

impl KappaTable {
    pub fn n_max(&self) -> u32 {
        self.rows.len() as u32
    }

    pub fn row(&self, n: u32) -> Option<&KappaRow> {
        n.checked_sub(1).and_then(|i| self.rows.get(i as usize))
    }

    pub fn kappa(&self, n: u32) -> Option<usize> {
        self.row(n).map(|r| r.kappa)
    }

    /// Largest `m` such that rows `1..=m` are all stabilized.
    pub fn stabilized_up_to(&self) -> u32 {
        self.rows.iter().take_while(|r| r.stabilized).count() as u32
    }

    pub fn all_stabilized(&self) -> bool {
        self.rows.iter().all(|r| r.stabilized)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.rows {
            wr.serialize(row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
        let rows = rd.deserialize().collect::<std::result::Result<Vec<KappaRow>, _>>()?;
        for (i, row) in rows.iter().enumerate() {
            if row.n as usize != i + 1 {
                return Err(Error::Parse(format!("row {i} has n = {}", row.n)));
            }
        }
        Ok(KappaTable { rows })
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// One instance of a checked relation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub rule: String,
    pub n: u32,
    pub lhs: i64,
    pub relation: String,
    pub rhs: i64,
    pub passed: bool,
}

impl Check {
    fn new(rule: &str, n: u32, lhs: i64, relation: &str, rhs: i64) -> Self {
        let passed = match relation {
            "<" => lhs < rhs,
            "<=" => lhs <= rhs,
            ">" => lhs > rhs,
            ">=" => lhs >= rhs,
            "==" => lhs == rhs,
            "in" => unreachable!("set membership is built by Check::member"),
            _ => unreachable!("unknown relation {relation}"),
        };
        Check {
            rule: rule.to_string(),
            n,
            lhs,
            relation: relation.to_string(),
            rhs,
            passed,
        }
    }

    fn member(rule: &str, n: u32, lhs: i64, options: [i64; 2]) -> Self {
        Check {
            rule: rule.to_string(),
            n,
            lhs,
            relation: format!("in {{{}, {}}}", options[0], options[1]),
            rhs: options[0],
            passed: options.contains(&lhs),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckReport {
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn rule(&self, rule: &str) -> impl Iterator<Item = &Check> {
        let rule = rule.to_string();
        self.checks.iter().filter(move |c| c.rule == rule)
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }
}

/// Verifies the growth relations on the stabilized rows of `t`:
///
/// - `kappa_{n+1} > kappa_n` (`n >= 1`);
/// - `kappa_n >= n + 2` (`n >= 2`; `kappa_1 = 2` is reported as a note);
/// - `kappa_{2n} <= kappa_n + kappa_{n+1}` (`n >= 2`);
/// - `kappa_{2n} <= (beta+3)(n-1) + 4` and `kappa_{2n+1} <= (beta+3)n + 3` with `beta = kappa_3` (`n >= 2`);
/// - `kappa_n <= v_n` for the comparison sequence with `(alpha, beta) = (4, kappa_3)`;
/// - `kappa_{2n,e} = kappa_n` and `kappa_{2n,o} <= kappa_{n+1}`;
/// - `kappa_n <= kappa_{n,o} + kappa_{n,e}`;
/// - no plateau `kappa_{n+1} = kappa_n` is followed by growth.
pub fn check_inequalities(t: &KappaTable) -> CheckReport {
    let mut r = CheckReport::default();
    let m = t.stabilized_up_to();
    if m < t.n_max() {
        r.notes.push(format!(
            "rows beyond n = {m} are not stabilized and were not checked"
        ));
    }
    let k = |n: u32| t.kappa(n).expect("row exists") as i64;
    for n in 1..m {
        r.push(Check::new("strictly_increasing", n, k(n + 1), ">", k(n)));
    }
    if m >= 1 {
        r.notes.push(format!(
            "n = 1: kappa_1 = {} is exempt from kappa_n >= n + 2",
            k(1)
        ));
    }
    for n in 2..=m {
        r.push(Check::new("lower_bound", n, k(n), ">=", n as i64 + 2));
    }
    for n in 2..=m / 2 {
        if n < m {
            r.push(Check::new("doubling", n, k(2 * n), "<=", k(n) + k(n + 1)));
        }
    }
    if m >= 3 {
        let beta = k(3);
        for n in 2..=m / 2 {
            r.push(Check::new(
                "linear_even",
                n,
                k(2 * n),
                "<=",
                (beta + 3) * (n as i64 - 1) + 4,
            ));
        }
        for n in 2..=(m.saturating_sub(1)) / 2 {
            r.push(Check::new(
                "linear_odd",
                n,
                k(2 * n + 1),
                "<=",
                (beta + 3) * n as i64 + 3,
            ));
        }
        if m >= 4 && beta >= 5 {
            match v_sequence(4, beta as u64, m) {
                Ok(v) => {
                    for n in 2..=m {
                        r.push(Check::new("dominated_by_v", n, k(n), "<=", v.get(n) as i64));
                    }
                }
                Err(e) => r.notes.push(format!("comparison sequence unavailable: {e}")),
            }
        }
    }
    for n in 1..=m / 2 {
        let even = t.row(2 * n).expect("row").kappa_even as i64;
        r.push(Check::new("even_count", n, even, "==", k(n)));
    }
    for n in 2..=m / 2 {
        if n < m {
            let odd = t.row(2 * n).expect("row").kappa_odd as i64;
            r.push(Check::new("odd_count", n, odd, "<=", k(n + 1)));
        }
    }
    for n in 1..=m {
        let row = t.row(n).expect("row");
        r.push(Check::new(
            "parity_cover",
            n,
            row.kappa as i64,
            "<=",
            (row.kappa_odd + row.kappa_even) as i64,
        ));
    }
    for n in 1..m.saturating_sub(1) {
        if k(n + 1) == k(n) {
            r.push(Check::new("stationary", n, k(n + 2), "==", k(n + 1)));
        }
    }
    r
}

/// The comparison sequence `v_2 = alpha`, `v_3 = beta`,
/// `v_{2n} = v_n + v_{n+1}`, `v_{2n+1} = v_{2n+2} - 1` (`n >= 2`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VSequence {
    pub alpha: u64,
    pub beta: u64,
    /// `values[n] = v_n`; indices 0 and 1 are unused.
    values: Vec<u64>,
}

pub fn v_sequence(alpha: u64, beta: u64, n_max: u32) -> Result<VSequence> {
    if alpha < 1 || beta < alpha + 1 || n_max < 4 {
        return Err(Error::InvalidParameters(format!(
            "need alpha >= 1, beta >= alpha + 1, n_max >= 4 (got {alpha}, {beta}, {n_max})"
        )));
    }
    let n_max = n_max as usize;
    let mut v = vec![0u64; n_max + 1];
    v[2] = alpha;
    v[3] = beta;
    for m in 4..=n_max {
        v[m] = if m % 2 == 0 {
            v[m / 2] + v[m / 2 + 1]
        } else {
            let n = (m - 1) / 2;
            // v_{2n+2} = v_{n+1} + v_{n+2}, both below m for n >= 2
            v[n + 1] + v[n + 2] - 1
        };
    }
    Ok(VSequence {
        alpha,
        beta,
        values: v,
    })
}

impl VSequence {
    pub fn n_max(&self) -> u32 {
        (self.values.len() - 1) as u32
    }

    pub fn get(&self, n: u32) -> u64 {
        assert!(n >= 2 && n <= self.n_max(), "v_{n} out of range");
        self.values[n as usize]
    }

    /// Checks the identities `v_{4n} = v_{2n} + v_{2n+2} - 1`, `v_{4n+2} = 2 v_{2n+2} - 1`,
    /// the step property `v_{2n+2} - v_{2n} in {beta, beta + alpha - 1}`, the bound
    /// `v_{2n} <= (beta + alpha - 1)(n - 1) + alpha`, and strict monotonicity, for every
    /// index within range.
    pub fn check(&self) -> CheckReport {
        let mut r = CheckReport::default();
        let m = self.n_max();
        let v = |n: u32| self.get(n) as i64;
        let (a, b) = (self.alpha as i64, self.beta as i64);
        for n in 2..=m {
            if 4 * n <= m {
                r.push(Check::new("v4n_identity", n, v(4 * n), "==", v(2 * n) + v(2 * n + 2) - 1));
            }
            if 4 * n + 2 <= m {
                r.push(Check::new("v4n2_identity", n, v(4 * n + 2), "==", 2 * v(2 * n + 2) - 1));
            }
        }
        for n in 1..=m.saturating_sub(2) / 2 {
            r.push(Check::member("step", n, v(2 * n + 2) - v(2 * n), [b, b + a - 1]));
        }
        for n in 1..=m / 2 {
            r.push(Check::new("linear_bound", n, v(2 * n), "<=", (b + a - 1) * (n as i64 - 1) + a));
        }
        for n in 2..m {
            r.push(Check::new("increasing", n, v(n + 1), ">", v(n)));
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT: [usize; 18] = [2, 4, 7, 10, 13, 18, 21, 25, 28, 34, 39, 45, 48, 54, 58, 62, 65, 71];

    fn census() -> Census {
        Census::jacaranda(CensusConfig::default()).unwrap()
    }

    #[test]
    fn depth_one_and_two_patches() {
        let c = census();
        assert_eq!(c.kappa(1).unwrap().kappa, 2);
        let k2 = c.stable_patches(2).unwrap();
        let got: Vec<String> = k2.patches.patches().map(|p| p.render()).collect();
        assert_eq!(got, ["0/00", "0/10", "1/00", "1/10"]);
        let split = c.kappa_split(2).unwrap();
        assert_eq!(split.even, 2);
    }

    #[test]
    fn kappa_three_is_schedule_independent() {
        let j = Substreetution::jacaranda().fixed_point(0, 22).unwrap();
        let a = enumerate_patches(&j.truncate(14).unwrap(), 3, 1).unwrap();
        let b = enumerate_patches(&j, 3, 3).unwrap();
        assert_eq!(a.to_set(), b.to_set());
    }

    #[test]
    fn enumerate_rejects_deep_patches() {
        let j = Substreetution::jacaranda().fixed_point(0, 5).unwrap();
        assert!(matches!(
            enumerate_patches(&j, 6, 1),
            Err(Error::PatchDepth { .. })
        ));
        assert!(enumerate_patches(&j, 5, 1).unwrap().len() == 1);
    }

    #[test]
    fn witnesses_are_minimal_addresses() {
        let j = Substreetution::jacaranda().fixed_point(0, 10).unwrap();
        let set = enumerate_patches(&j, 2, 1).unwrap();
        let root = j.truncate(2).unwrap();
        let w = set.witnesses(&root).unwrap();
        assert!(w.root);
        assert_eq!(w.odd.as_ref().unwrap().to_string(), "b");
        assert_eq!(w.even.as_ref().unwrap().to_string(), "aa");
        for (p, w) in set.iter() {
            for addr in w.odd.iter().chain(w.even.iter()) {
                assert_eq!(&j.window(addr, 2).unwrap(), p);
            }
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let j = Substreetution::jacaranda().fixed_point(0, 16).unwrap();
        for n in [1, 3, 6] {
            let one = enumerate_patches(&j, n, 1).unwrap();
            for workers in [2, 5, 8] {
                assert_eq!(enumerate_patches(&j, n, workers).unwrap(), one);
            }
        }
    }

    #[test]
    fn shared_scan_equals_packed_scan() {
        let s = Substreetution::jacaranda();
        let mut st = SubtreeStore::new(s.clone());
        for root in [0, 1] {
            let j = s.fixed_point(root, 18).unwrap();
            let id = st.from_prefix(&j);
            for n in [1, 2, 5, 9] {
                let packed = enumerate_patches(&j, n, 2).unwrap();
                let shared: BTreeMap<Patch, Witnesses> = st
                    .windows(id, n)
                    .unwrap()
                    .into_iter()
                    .map(|(p, w)| (st.to_prefix(p), w))
                    .collect();
                assert_eq!(shared, packed.patches, "root {root}, n = {n}");
            }
        }
    }

    #[test]
    fn schedule_shapes() {
        let cfg = CensusConfig::packed(26);
        assert_eq!(cfg.schedule(2), vec![10, 12, 14, 16, 18, 20, 22, 24, 26]);
        assert_eq!(cfg.schedule(16), vec![24, 26]);
        assert_eq!(cfg.schedule(17), vec![24, 26]);
        assert_eq!(cfg.schedule(18), vec![24, 26]);
        assert_eq!(cfg.schedule(25), vec![26]);
        assert!(Census::jacaranda(CensusConfig::packed(40)).is_err());
    }

    #[test]
    fn unstabilized_census_is_flagged() {
        let c = Census::jacaranda(CensusConfig::packed(8)).unwrap();
        let k = c.kappa(8).unwrap();
        assert!(!k.stabilized);
        assert!(matches!(
            c.stable_patches(8),
            Err(Error::NotStabilized { n: 8 })
        ));
    }

    #[test]
    fn agreeing_depths_are_not_enough() {
        // depths 13 and 15 both see 12 patches of depth 5; one more first
        // occurs at level 12
        let j = Substreetution::jacaranda().fixed_point(0, 17).unwrap();
        let at = |d: u32| enumerate_patches(&j.truncate(d).unwrap(), 5, 1).unwrap().len();
        assert_eq!(at(13), at(15));
        assert_eq!(at(17), 13);
        let c = census();
        let k5 = c.patches(5).unwrap();
        assert!(k5.stabilized);
        assert_eq!(k5.kappa(), 13);
        assert_eq!(k5.generation_depth(), 17);
    }

    #[test]
    fn packed_census_certifies_up_to_eight_at_cap_26() {
        let c = Census::jacaranda(CensusConfig {
            workers: 4,
            ..CensusConfig::packed(26)
        })
        .unwrap();
        let t = c.table(9).unwrap();
        for n in 1..=8 {
            assert!(t.row(n).unwrap().stabilized, "n = {n}");
            assert_eq!(t.kappa(n).unwrap(), EXACT[n as usize - 1]);
        }
        // depth 9 needs a generation depth of 33
        assert!(!t.row(9).unwrap().stabilized);
        assert!(t.kappa(9).unwrap() < EXACT[8]);
    }

    #[test]
    fn closure_matches_census() {
        let sets = closure_patch_sets(&Substreetution::jacaranda(), 0, 18).unwrap();
        let c = census();
        for n in 1..=18 {
            let k = c.stable_patches(n).unwrap();
            assert_eq!(k.patches.to_set(), sets[n as usize - 1], "n = {n}");
            assert_eq!(k.kappa(), EXACT[n as usize - 1]);
        }
    }

    #[test]
    fn census_witnesses_occur() {
        let c = census();
        let k = c.stable_patches(7).unwrap();
        let mut st = SubtreeStore::new(Substreetution::jacaranda());
        let j = st.fixed_point(0, 40).unwrap();
        for (p, w) in k.patches.iter() {
            for addr in w.odd.iter().chain(w.even.iter()) {
                let mut id = j;
                for &l in addr.letters() {
                    id = st.child(id, l).unwrap();
                }
                let t = st.truncate(id, 7);
                assert_eq!(&st.to_prefix(t), p, "{addr}");
            }
        }
    }

    #[test]
    fn image_count_of_small_censuses() {
        let c = census();
        let ic = c.kappa_even_via_bijection(2).unwrap();
        assert_eq!(ic, ImageCount { sources: 4, images: 4 });
        assert_eq!(c.kappa_split(4).unwrap().even, 4);
        for n in 2..=8 {
            let ic = c.kappa_even_via_bijection(n).unwrap();
            assert!(ic.injective());
            assert_eq!(ic.images, c.kappa_split(2 * n).unwrap().even);
            let free = image_count(c.substitution(), c.patches(n).unwrap().patches.patches()).unwrap();
            assert_eq!(free, ic);
        }
    }

    #[test]
    fn v_sequence_examples() {
        let v = v_sequence(4, 10, 8).unwrap();
        assert_eq!(v.get(4), 14);
        assert_eq!(v.get(6), 24);
        assert_eq!(v.get(5), 23);
        assert!(v_sequence(4, 4, 8).is_err());
        assert!(v_sequence(0, 4, 8).is_err());
        assert!(v_sequence(4, 10, 3).is_err());
    }

    #[test]
    fn table_csv_round_trip() {
        let t = census().table(6).unwrap();
        let csv = t.to_csv_string();
        assert!(csv.starts_with("n,kappa,kappa_odd,kappa_even,N_used,stabilized\n"));
        assert_eq!(KappaTable::read_csv(csv.as_bytes()).unwrap(), t);
    }

    #[test]
    fn exact_table_breaks_doubling_at_three() {
        let t = census().table(6).unwrap();
        let r = check_inequalities(&t);
        let failed: Vec<(&str, u32)> = r.failures().map(|c| (c.rule.as_str(), c.n)).collect();
        // kappa_6 = 18 > kappa_3 + kappa_4 = 17; 11 odd-level patches against kappa_4 = 10
        assert_eq!(failed, [("doubling", 3), ("odd_count", 3)]);
    }

    #[test]
    fn inequality_report_flags_violations() {
        let rows = [2usize, 4, 4, 4, 9]
            .iter()
            .enumerate()
            .map(|(i, &k)| KappaRow {
                n: i as u32 + 1,
                kappa: k,
                kappa_odd: k,
                kappa_even: k,
                n_used: 10,
                stabilized: true,
            })
            .collect();
        let r = check_inequalities(&KappaTable { rows });
        assert!(!r.passed());
        assert!(r.rule("strictly_increasing").any(|c| c.n == 2 && !c.passed));
        assert!(r.rule("stationary").any(|c| !c.passed));
    }
}
