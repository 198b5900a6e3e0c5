//! Finite-depth refutation of stabilizers.
//!
//! If `T_w(A) = A` for some tree `A` of the orbit closure, every depth-`D`
//! prefix of `A` overlaps itself at `w`: its window at `w` equals its own
//! first `D - |w|` lines. A depth at which no patch does so refutes `w`.
//! Words that survive are cut in half: an even `A` is an H-image and `w`
//! passes to `s~(w)`; an odd `A` is first moved to its child `T_{w_0}(A)`,
//! which is even and stabilized by the rotation of `w`.

use std::collections::BTreeMap;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::address::Address;
use crate::complexity::{Census, Patch, PatchCensus};
use crate::error::{Error, Result};
use crate::structure::{parity_from_patch, source_word, TypeTag};
use crate::tree::{Substreetution, TreePrefix};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerQuery {
    omega: Address,
    depth: u32,
}

impl StabilizerQuery {
    pub fn new(omega: Address, depth: u32) -> Result<Self> {
        if omega.is_empty() {
            return Err(Error::EmptyAddress);
        }
        if depth as usize <= omega.len() {
            return Err(Error::InvalidParameters(format!(
                "probe depth {depth} must exceed |{omega}| = {}",
                omega.len()
            )));
        }
        Ok(StabilizerQuery { omega, depth })
    }

    pub fn omega(&self) -> &Address {
        &self.omega
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ParityObstruction,
    Refuted,
    Reduced,
    CandidatesRemain,
}

impl Outcome {
    pub fn is_certified(self) -> bool {
        self != Outcome::CandidatesRemain
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefutationCertificate {
    pub omega: Address,
    pub outcome: Outcome,
    /// Refuting depth, or the deepest depth probed when candidates remained.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    /// Canonical encodings of the self-overlapping patches at `depth`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates: Option<Vec<String>>,
    /// `[s~(w), rotation of w, s~(rotation)]` for a reduction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reduction_chain: Option<Vec<Address>>,
}

impl RefutationCertificate {
    fn parity(omega: &Address) -> Self {
        RefutationCertificate {
            omega: omega.clone(),
            outcome: Outcome::ParityObstruction,
            depth: None,
            candidates: None,
            reduction_chain: None,
        }
    }
}

/// `Some(ParityObstruction)` for odd `|w|`: a shift by an odd number of
/// letters changes the parity of a tree. `None` is inconclusive.
pub fn parity_obstruction(omega: &Address) -> Result<Option<Outcome>> {
    if omega.is_empty() {
        return Err(Error::EmptyAddress);
    }
    Ok((omega.len() % 2 == 1).then_some(Outcome::ParityObstruction))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParityCase {
    Odd,
    Even,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Halving {
    /// `s~(w)`, of half the length.
    Halved(Address),
    /// `w_1 ... w_{n} w_0`; halve it next, in the even case.
    Rotated(Address),
}

impl Halving {
    pub fn word(&self) -> &Address {
        match self {
            Halving::Halved(w) | Halving::Rotated(w) => w,
        }
    }
}

pub fn halve_candidate(omega: &Address, case: ParityCase, s: &Substreetution) -> Result<Halving> {
    if omega.is_empty() || !omega.len().is_multiple_of(2) {
        return Err(Error::OddLength(omega.clone()));
    }
    Ok(match case {
        ParityCase::Even => Halving::Halved(source_word(omega, s)?),
        ParityCase::Odd => Halving::Rotated(omega.rotate_left()),
    })
}

/// Both branch targets of the reduction: `(s~(w), rotation, s~(rotation))`.
pub fn reduction_targets(omega: &Address, s: &Substreetution) -> Result<(Address, Address, Address)> {
    let even = halve_candidate(omega, ParityCase::Even, s)?.word().clone();
    let rotated = halve_candidate(omega, ParityCase::Odd, s)?.word().clone();
    let odd = halve_candidate(&rotated, ParityCase::Even, s)?.word().clone();
    Ok((even, rotated, odd))
}

/// Patches of depth `D` whose window at `w` equals their first `D - |w|` lines.
pub fn self_overlapping<'a>(
    omega: &Address,
    patches: impl IntoIterator<Item = &'a Patch>,
) -> Result<Vec<Patch>> {
    let mut out = Vec::new();
    for p in patches {
        let rest = p.depth() - omega.len() as u32;
        if p.shift(omega)? == p.truncate(rest)? {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Checks the query against `K_D`. Odd words short-circuit to the parity obstruction.
pub fn refute_at_depth(q: &StabilizerQuery, k: &PatchCensus) -> Result<RefutationCertificate> {
    if parity_obstruction(&q.omega)?.is_some() {
        return Ok(RefutationCertificate::parity(&q.omega));
    }
    if !k.stabilized {
        return Err(Error::NotStabilized { n: k.n() });
    }
    if k.n() != q.depth {
        return Err(Error::DepthMismatch {
            left: k.n(),
            right: q.depth,
        });
    }
    let candidates = self_overlapping(&q.omega, k.patches.patches())?;
    Ok(RefutationCertificate {
        omega: q.omega.clone(),
        outcome: if candidates.is_empty() {
            Outcome::Refuted
        } else {
            Outcome::CandidatesRemain
        },
        depth: Some(q.depth),
        candidates: (!candidates.is_empty())
            .then(|| candidates.iter().map(TreePrefix::encode).collect()),
        reduction_chain: None,
    })
}

/// Probe depths for `w`: `|w| + 4, |w| + 6, ..., <= d_max`.
pub fn probe_depths(omega: &Address, d_max: u32) -> Vec<u32> {
    ((omega.len() as u32 + 4)..=d_max).step_by(2).collect()
}

/// Direct refutation over the probe depths, checking that candidates shrink
/// under truncation from one depth to the next.
fn refute_directly(
    omega: &Address,
    depths: &[u32],
    sets: &BTreeMap<u32, Arc<PatchCensus>>,
) -> Result<RefutationCertificate> {
    let mut last = RefutationCertificate::parity(omega);
    let mut previous: Option<(u32, Vec<Patch>)> = None;
    for &d in depths {
        let q = StabilizerQuery::new(omega.clone(), d)?;
        let cert = refute_at_depth(&q, &sets[&d])?;
        let current: Vec<Patch> = cert
            .candidates
            .iter()
            .flatten()
            .map(|e| TreePrefix::decode(e))
            .collect::<Result<_>>()?;
        if let Some((pd, prev)) = &previous {
            for c in &current {
                if !prev.contains(&c.truncate(*pd)?) {
                    return Err(Error::Inconsistent(format!(
                        "candidate {} for {omega} at depth {d} truncates outside the depth-{pd} candidates",
                        c.encode()
                    )));
                }
            }
        }
        let refuted = cert.outcome == Outcome::Refuted;
        last = cert;
        if refuted {
            break;
        }
        previous = Some((d, current));
    }
    Ok(last)
}

/// Certificates for every word of length `1..=max_len`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepReport {
    pub max_len: u32,
    pub d_max: u32,
    /// In address order (by length, then lexicographically).
    pub certificates: Vec<RefutationCertificate>,
    pub unresolved: Vec<Address>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.unresolved.is_empty()
    }

    pub fn get(&self, omega: &Address) -> Option<&RefutationCertificate> {
        self.certificates
            .binary_search_by(|c| c.omega.cmp(omega))
            .ok()
            .map(|i| &self.certificates[i])
    }

    pub fn count(&self, outcome: Outcome) -> usize {
        self.certificates.iter().filter(|c| c.outcome == outcome).count()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn probe_sets(census: &Census, d_max: u32, min_len: usize) -> Result<BTreeMap<u32, Arc<PatchCensus>>> {
    let mut sets = BTreeMap::new();
    for d in ((min_len as u32 + 4)..=d_max).step_by(2) {
        sets.insert(d, census.stable_patches(d)?);
    }
    Ok(sets)
}

/// Runs the parity test, direct refutation and reduction for every word of
/// length `1..=max_len`. A reduction certifies `w` when both halving branches
/// land on certified words; targets are shorter, so they are settled first.
pub fn sweep(census: &Census, max_len: u32, d_max: u32, workers: usize) -> Result<SweepReport> {
    if max_len == 0 || d_max <= max_len {
        return Err(Error::InvalidParameters(format!(
            "need L >= 1 and D_max > L (got {max_len}, {d_max})"
        )));
    }
    let s = census.substitution().clone();
    // even lengths start at 2, so depths from 6 may be probed
    let sets = probe_sets(census, d_max, 2)?;
    let words: Vec<Address> = Address::all_up_to(max_len as usize).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidParameters(format!("thread pool: {e}")))?;
    let direct: Vec<RefutationCertificate> = pool.install(|| {
        words
            .par_iter()
            .map(|w| {
                if parity_obstruction(w)?.is_some() {
                    return Ok(RefutationCertificate::parity(w));
                }
                refute_directly(w, &probe_depths(w, d_max), &sets)
            })
            .collect::<Result<_>>()
    })?;

    let mut settled: BTreeMap<Address, RefutationCertificate> = BTreeMap::new();
    for mut cert in direct {
        if cert.outcome == Outcome::CandidatesRemain {
            let (even, rotated, odd) = reduction_targets(&cert.omega, &s)?;
            let ok = |w: &Address| {
                w.len() % 2 == 1
                    || settled.get(w).is_some_and(|c| c.outcome.is_certified())
            };
            if ok(&even) && ok(&odd) {
                cert.outcome = Outcome::Reduced;
                cert.reduction_chain = Some(vec![even, rotated, odd]);
            }
        }
        settled.insert(cert.omega.clone(), cert);
    }
    let certificates: Vec<RefutationCertificate> = settled.into_values().collect();
    let unresolved = certificates
        .iter()
        .filter(|c| !c.outcome.is_certified())
        .map(|c| c.omega.clone())
        .collect();
    Ok(SweepReport {
        max_len,
        d_max,
        certificates,
        unresolved,
    })
}

/// Re-derives every certificate of `report` from the census and returns the
/// words whose recorded outcome is not reproduced.
pub fn replay(report: &SweepReport, census: &Census) -> Result<Vec<Address>> {
    let s = census.substitution();
    let mut bad = Vec::new();
    for cert in &report.certificates {
        let ok = match cert.outcome {
            Outcome::ParityObstruction => parity_obstruction(&cert.omega)?.is_some(),
            Outcome::Refuted | Outcome::CandidatesRemain => match cert.depth {
                Some(d) => {
                    let q = StabilizerQuery::new(cert.omega.clone(), d)?;
                    refute_at_depth(&q, census.stable_patches(d)?.as_ref())? == *cert
                }
                None => false,
            },
            Outcome::Reduced => {
                let (even, rotated, odd) = reduction_targets(&cert.omega, s)?;
                let certified = |w: &Address| {
                    w.len() % 2 == 1
                        || report.get(w).is_some_and(|c| {
                            c.outcome.is_certified() && c.omega.len() < cert.omega.len()
                        })
                };
                cert.reduction_chain.as_deref() == Some(&[even.clone(), rotated, odd.clone()][..])
                    && certified(&even)
                    && certified(&odd)
            }
        };
        if !ok {
            bad.push(cert.omega.clone());
        }
    }
    Ok(bad)
}

/// Parities of the candidate patches in a certificate, for reporting which
/// branch of the halving a surviving stabilizer would have to take.
pub fn candidate_parities(cert: &RefutationCertificate) -> Result<Vec<TypeTag>> {
    cert.candidates
        .iter()
        .flatten()
        .map(|e| parity_from_patch(&TreePrefix::decode(e)?))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexity::CensusConfig;

    fn w(s: &str) -> Address {
        s.parse().unwrap()
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity_obstruction(&w("a")).unwrap(), Some(Outcome::ParityObstruction));
        assert_eq!(parity_obstruction(&w("ab")).unwrap(), None);
        assert_eq!(parity_obstruction(&w("babab")).unwrap(), Some(Outcome::ParityObstruction));
        assert!(matches!(parity_obstruction(&Address::empty()), Err(Error::EmptyAddress)));
    }

    #[test]
    fn halving_examples() {
        let s = Substreetution::jacaranda();
        assert_eq!(halve_candidate(&w("ba"), ParityCase::Even, &s).unwrap(), Halving::Halved(w("a")));
        assert_eq!(halve_candidate(&w("abba"), ParityCase::Even, &s).unwrap(), Halving::Halved(w("ba")));
        assert_eq!(
            halve_candidate(&w("abba"), ParityCase::Odd, &s).unwrap(),
            Halving::Rotated(w("bbaa"))
        );
        assert!(halve_candidate(&w("aba"), ParityCase::Even, &s).is_err());
    }

    #[test]
    fn query_validation() {
        assert!(StabilizerQuery::new(w("ab"), 2).is_err());
        assert!(StabilizerQuery::new(Address::empty(), 5).is_err());
        assert!(StabilizerQuery::new(w("ab"), 3).is_ok());
    }

    #[test]
    fn refusal_without_stabilization() {
        let c = Census::jacaranda(CensusConfig::packed(12)).unwrap();
        let k = c.patches(10).unwrap();
        assert!(!k.stabilized);
        let q = StabilizerQuery::new(w("ab"), 10).unwrap();
        assert!(matches!(refute_at_depth(&q, &k), Err(Error::NotStabilized { n: 10 })));
    }

    #[test]
    fn odd_word_short_circuits() {
        let c = Census::jacaranda(CensusConfig::default()).unwrap();
        let q = StabilizerQuery::new(w("a"), 5).unwrap();
        let cert = refute_at_depth(&q, &c.stable_patches(5).unwrap()).unwrap();
        assert_eq!(cert.outcome, Outcome::ParityObstruction);
    }
}
