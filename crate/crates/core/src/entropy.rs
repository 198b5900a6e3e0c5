//! Entropy estimators from complexity tables, the dynamical distance of the
//! skew product and its separated-set counts.
//!
//! All logarithms are natural.

use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::address::{Address, Letter};
use crate::complexity::{Census, KappaTable, Patch, PatchCensus};
use crate::error::{Error, Result};
use crate::tree::{Dyadic, TreePrefix};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub n: u32,
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub points: Vec<Point>,
}

impl Series {
    pub fn get(&self, n: u32) -> Option<f64> {
        self.points.iter().find(|p| p.n == n).map(|p| p.value)
    }

    /// `max_{m >= n0} value_m` over the computed range.
    pub fn tail_max(&self, n0: u32) -> Option<f64> {
        self.points
            .iter()
            .filter(|p| p.n >= n0)
            .map(|p| p.value)
            .reduce(f64::max)
    }

    /// Smallest `n0` from which the values strictly decrease to the end of the range.
    pub fn decreasing_from(&self) -> Option<u32> {
        let pts = &self.points;
        let last = pts.last()?;
        let mut start = last.n;
        for w in pts.windows(2).rev() {
            if w[1].value < w[0].value {
                start = w[0].n;
            } else {
                break;
            }
        }
        Some(start)
    }
}

fn stabilized_kappas(t: &KappaTable) -> Result<Vec<(u32, usize)>> {
    t.rows
        .iter()
        .map(|r| {
            if r.stabilized {
                Ok((r.n, r.kappa))
            } else {
                Err(Error::NotStabilized { n: r.n })
            }
        })
        .collect()
}

/// `(1/2^n) log kappa_n` for every row.
pub fn h_ps_sequence(t: &KappaTable) -> Result<Series> {
    let points = stabilized_kappas(t)?
        .into_iter()
        .map(|(n, k)| Point {
            n,
            value: (k as f64).ln() / 2f64.powi(n as i32),
        })
        .collect();
    Ok(Series { points })
}

/// `(1/n) log log kappa_n` for rows with `n >= 2`.
pub fn h_bc_sequence(t: &KappaTable) -> Result<Series> {
    let mut points = Vec::new();
    for (n, k) in stabilized_kappas(t)? {
        if n < 2 {
            continue;
        }
        if k < 2 {
            return Err(Error::InvalidParameters(format!(
                "log log kappa_{n} is undefined for kappa_{n} = {k}"
            )));
        }
        points.push(Point {
            n,
            value: (k as f64).ln().ln() / n as f64,
        });
    }
    Ok(Series { points })
}

/// Which sub-words of `w` index the terms of the dynamical distance.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reading {
    /// `e, w_0, w_0 w_1, ..., w`: the trees visited along the path.
    #[default]
    Prefix,
    /// `w, w_1 ... w_n, ..., e`: the words `v` with `w = u v`.
    Suffix,
}

impl std::str::FromStr for Reading {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prefix" => Ok(Reading::Prefix),
            "suffix" => Ok(Reading::Suffix),
            _ => Err(Error::Parse(format!("unknown reading {s:?}"))),
        }
    }
}

pub fn sub_words(omega: &Address, reading: Reading) -> Vec<Address> {
    (0..=omega.len())
        .map(|k| match reading {
            Reading::Prefix => omega.prefix(k),
            Reading::Suffix => omega.suffix(k),
        })
        .collect()
}

/// `max_v d(T_v A, T_v B)` over the sub-words of `w` in the given reading.
pub fn d_omega(a: &TreePrefix, b: &TreePrefix, omega: &Address, reading: Reading) -> Result<Dyadic> {
    if a.depth() != b.depth() {
        return Err(Error::DepthMismatch {
            left: a.depth(),
            right: b.depth(),
        });
    }
    if (a.depth() as usize) <= omega.len() {
        return Err(Error::AddressTooDeep {
            address: omega.clone(),
            depth: a.depth(),
        });
    }
    let mut worst = Dyadic::Agree;
    for v in sub_words(omega, reading) {
        worst = worst.max(a.shift(&v)?.distance(&b.shift(&v)?)?);
    }
    Ok(worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCount {
    pub n: u32,
    pub p: u32,
    pub reading: Reading,
    /// Distinct profiles per word, in word order.
    pub per_word: Vec<usize>,
    pub average: f64,
    pub max: usize,
    /// `kappa_{n+p+1}`, an upper bound for every word.
    pub bound: usize,
}

impl ProfileCount {
    /// `(1/n) log` of the average.
    pub fn h_b_estimate(&self) -> f64 {
        self.average.ln() / self.n as f64
    }

    /// `(1/n) log kappa_{n+p+1}`.
    pub fn h_b_upper(&self) -> f64 {
        (self.bound as f64).ln() / self.n as f64
    }
}

/// Number of `(w, 2^-p)`-separated classes among the patches, averaged over `|w| = n`.
///
/// Under `d_w`, two trees are closer than `2^-p` iff their depth-`(p+1)`
/// windows agree at every sub-word of `w`. Being an ultrametric, the relation
/// is an equivalence, and a maximal separated set has one point per class,
/// so the count is the number of distinct window tuples ("profiles").
pub fn bufetov_profile_count(
    n: u32,
    p: u32,
    k: &PatchCensus,
    reading: Reading,
    workers: usize,
) -> Result<ProfileCount> {
    if n == 0 {
        return Err(Error::InvalidParameters("profile words need n >= 1".into()));
    }
    if !k.stabilized {
        return Err(Error::NotStabilized { n: k.n() });
    }
    if k.n() != n + p + 1 {
        return Err(Error::DepthMismatch {
            left: k.n(),
            right: n + p + 1,
        });
    }
    let patches: Vec<&Patch> = k.patches.patches().collect();
    let words: Vec<Address> = Address::all_of_length(n as usize).collect();
    let count = |w: &Address| -> Result<usize> {
        let subs = sub_words(w, reading);
        let mut seen: HashSet<Vec<Patch>> = HashSet::new();
        for &pt in &patches {
            let profile = subs
                .iter()
                .map(|v| pt.window(v, p + 1))
                .collect::<Result<Vec<_>>>()?;
            seen.insert(profile);
        }
        Ok(seen.len())
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameters(format!("thread pool: {e}")))?;
    let per_word: Vec<usize> = pool.install(|| words.par_iter().map(count).collect::<Result<_>>())?;
    let total: usize = per_word.iter().sum();
    Ok(ProfileCount {
        n,
        p,
        reading,
        average: total as f64 / per_word.len() as f64,
        max: per_word.iter().copied().max().unwrap_or(0),
        bound: patches.len(),
        per_word,
    })
}

/// Bounds on `(1/n) log r(n, 2^-p)` for the skew product:
/// `2^{n+p} <= r <= 2^{n+p} kappa_{n+p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sandwich {
    pub n: u32,
    pub p: u32,
    pub kappa: usize,
    pub lower: f64,
    pub upper: f64,
}

impl Sandwich {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    /// The lower bound with its `(p/n) log 2` resolution term removed; equals `log 2`.
    pub fn lower_core(&self) -> f64 {
        self.lower - self.p as f64 * std::f64::consts::LN_2 / self.n as f64
    }

    /// `lower - (p/n) log 2 <= log 2 <= upper` and `lower <= log 2 + gap`.
    pub fn brackets_log2(&self) -> bool {
        let ln2 = std::f64::consts::LN_2;
        let eps = 1e-12;
        self.lower_core() <= ln2 + eps && ln2 <= self.upper + eps && self.lower <= ln2 + self.gap() + eps
    }
}

pub fn htop_sandwich(n: u32, p: u32, t: &KappaTable) -> Result<Sandwich> {
    if n == 0 {
        return Err(Error::InvalidParameters("sandwich needs n >= 1".into()));
    }
    let row = t.row(n + p).ok_or(Error::PatchDepth {
        n: n + p,
        depth: t.n_max(),
    })?;
    if !row.stabilized {
        return Err(Error::NotStabilized { n: n + p });
    }
    let lower = (n + p) as f64 * std::f64::consts::LN_2 / n as f64;
    Ok(Sandwich {
        n,
        p,
        kappa: row.kappa,
        lower,
        upper: lower + (row.kappa as f64).ln() / n as f64,
    })
}

/// A point of the skew product: the unread part of the path and the current tree.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkewPoint {
    pub path: Address,
    pub tree: TreePrefix,
}

impl SkewPoint {
    /// `(sigma(w), T_{w_0}(x))`.
    pub fn step(&self) -> Result<SkewPoint> {
        let first = *self
            .path
            .letters()
            .first()
            .ok_or_else(|| Error::InvalidParameters("path is exhausted".into()))?;
        if self.tree.depth() < 2 {
            return Err(Error::InvalidParameters("tree depth is exhausted".into()));
        }
        Ok(SkewPoint {
            path: self.path.suffix(self.path.len() - 1),
            tree: self.tree.shift(&Address::new(vec![first]))?,
        })
    }
}

/// The starting point and `k` iterates.
pub fn skew_orbit(x: &SkewPoint, k: usize) -> Result<Vec<SkewPoint>> {
    if x.path.len() < k || x.tree.depth() as usize <= k {
        return Err(Error::InvalidParameters(format!(
            "{k} steps need a path of length >= {k} and a tree deeper than {k}"
        )));
    }
    let mut out = Vec::with_capacity(k + 1);
    out.push(x.clone());
    for _ in 0..k {
        let next = out.last().expect("nonempty").step()?;
        out.push(next);
    }
    Ok(out)
}

/// Path consisting of `k` copies of `letter`.
pub fn constant_path(letter: Letter, k: usize) -> Address {
    Address::new(vec![letter; k])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BufetovRow {
    pub n: u32,
    pub p: u32,
    pub prefix: ProfileSummary,
    pub suffix: ProfileSummary,
    /// Whether the two readings give different counts for some word.
    pub readings_differ: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub average: f64,
    pub max: usize,
    pub bound: usize,
    pub h_b_estimate: f64,
    pub h_b_upper: f64,
}

impl From<&ProfileCount> for ProfileSummary {
    fn from(c: &ProfileCount) -> Self {
        ProfileSummary {
            average: c.average,
            max: c.max,
            bound: c.bound,
            h_b_estimate: c.h_b_estimate(),
            h_b_upper: c.h_b_upper(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub kappa: KappaTable,
    pub h_ps: Series,
    pub h_bc: Series,
    pub bufetov: Vec<BufetovRow>,
    pub sandwich: Vec<Sandwich>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntropyParams {
    pub n_max: u32,
    pub p: u32,
    /// Largest word length for profile counting (`2^n` words each).
    pub bufetov_n_max: u32,
    pub workers: usize,
}

impl EntropyReport {
    /// Needs `kappa_1 .. kappa_{n_max + p}` and `K_{n+p+1}` for the profile rows.
    pub fn compute(census: &Census, params: EntropyParams) -> Result<Self> {
        let EntropyParams {
            n_max,
            p,
            bufetov_n_max,
            workers,
        } = params;
        if n_max < 2 {
            return Err(Error::InvalidParameters("entropy report needs n_max >= 2".into()));
        }
        let kappa = census.table(n_max + p)?;
        if let Some(r) = kappa.rows.iter().find(|r| !r.stabilized) {
            return Err(Error::NotStabilized { n: r.n });
        }
        let head = KappaTable {
            rows: kappa.rows[..n_max as usize].to_vec(),
        };
        let h_ps = h_ps_sequence(&head)?;
        let h_bc = h_bc_sequence(&head)?;
        let mut bufetov = Vec::new();
        for n in 1..=bufetov_n_max.min(n_max) {
            let k = census.stable_patches(n + p + 1)?;
            let pre = bufetov_profile_count(n, p, &k, Reading::Prefix, workers)?;
            let suf = bufetov_profile_count(n, p, &k, Reading::Suffix, workers)?;
            bufetov.push(BufetovRow {
                n,
                p,
                readings_differ: pre.per_word != suf.per_word,
                prefix: (&pre).into(),
                suffix: (&suf).into(),
            });
        }
        let sandwich = (1..=n_max)
            .map(|n| htop_sandwich(n, p, &kappa))
            .collect::<Result<_>>()?;
        Ok(EntropyReport {
            kappa,
            h_ps,
            h_bc,
            bufetov,
            sandwich,
        })
    }

    /// One row per `n`; empty cells where a quantity was not computed.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Row {
            n: u32,
            kappa: usize,
            h_ps: f64,
            h_bc: Option<f64>,
            profile_avg_prefix: Option<f64>,
            profile_avg_suffix: Option<f64>,
            h_b_estimate: Option<f64>,
            h_b_upper: Option<f64>,
            htop_lower: f64,
            htop_upper: f64,
            htop_gap: f64,
        }
        let mut wr = csv::Writer::from_writer(w);
        for s in &self.sandwich {
            let n = s.n;
            let b = self.bufetov.iter().find(|b| b.n == n);
            wr.serialize(Row {
                n,
                kappa: self.kappa.kappa(n).unwrap_or(0),
                h_ps: self.h_ps.get(n).unwrap_or(f64::NAN),
                h_bc: self.h_bc.get(n),
                profile_avg_prefix: b.map(|b| b.prefix.average),
                profile_avg_suffix: b.map(|b| b.suffix.average),
                h_b_estimate: b.map(|b| b.prefix.h_b_estimate),
                h_b_upper: b.map(|b| b.prefix.h_b_upper),
                htop_lower: s.lower,
                htop_upper: s.upper,
                htop_gap: s.gap(),
            })?;
        }
        wr.flush()?;
        Ok(())
    }
}
