//! Index and dimension arithmetic for moduli of branched covers of an orbit
//! cylinder with fixed asymptotic multiplicities.
//!
//! Dimensions are reported for the moduli space after quotienting the
//! ℝ-translation; the non-quotiented space adds one.  The two-puncture case
//! is special: a unique trivial cylinder carrying `m²` marker choices.

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::catalog::{IteratedOrbit, OrbitCatalog};
use crate::rat::Rat;
use crate::{Error, Result};

/// Asymptotic multiplicities `(m⁺₁,…,m⁺_{n⁺}; m⁻₁,…,m⁻_{n⁻})` of a branched
/// cover over a single simple orbit.  Canonicalized with both sides sorted
/// descending.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MultiplicityProfile {
    positives: Vec<u32>,
    negatives: Vec<u32>,
}

impl MultiplicityProfile {
    pub fn new(positives: Vec<u32>, negatives: Vec<u32>) -> Result<Self> {
        if positives.is_empty() || negatives.is_empty() {
            return Err(Error::Validation(
                "a profile needs at least one puncture on each side".into(),
            ));
        }
        if positives.iter().chain(&negatives).any(|&m| m == 0) {
            return Err(Error::Validation("multiplicities must be positive".into()));
        }
        let mut positives = positives;
        let mut negatives = negatives;
        positives.sort_unstable_by(|a, b| b.cmp(a));
        negatives.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self { positives, negatives })
    }

    /// Parses the CLI syntax `"m⁺₁,…;m⁻₁,…"`, e.g. `"2;1,1"`.
    pub fn parse(s: &str) -> Result<Self> {
        let (pos, neg) = s
            .split_once(';')
            .ok_or_else(|| Error::Parse(format!("profile {s:?} must contain ';'")))?;
        let side = |part: &str| -> Result<Vec<u32>> {
            part.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<u32>()
                        .map_err(|_| Error::Parse(format!("bad multiplicity {x:?} in {s:?}")))
                })
                .collect()
        };
        Self::new(side(pos)?, side(neg)?)
    }

    pub fn positives(&self) -> &[u32] {
        &self.positives
    }

    pub fn negatives(&self) -> &[u32] {
        &self.negatives
    }

    /// Total number of punctures `n = n⁺ + n⁻`.
    pub fn punctures(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    /// Total covering degree on the positive side.
    pub fn degree_positive(&self) -> u64 {
        self.positives.iter().map(|&m| u64::from(m)).sum()
    }

    pub fn degree_negative(&self) -> u64 {
        self.negatives.iter().map(|&m| u64::from(m)).sum()
    }

    /// A profile bounds a nonempty moduli space only when the positive and
    /// negative covering degrees agree.
    pub fn balanced(&self) -> bool {
        self.degree_positive() == self.degree_negative()
    }

    /// The unbranched cylinder `(m; m)`.
    pub fn is_trivial_cylinder(&self) -> bool {
        self.punctures() == 2 && self.balanced()
    }

    /// Marker choices `(Πm⁺ₖ, Πm⁻ₖ)`.
    pub fn marker_count(&self) -> (u64, u64) {
        let prod = |s: &[u32]| s.iter().map(|&m| u64::from(m)).product();
        (prod(&self.positives), prod(&self.negatives))
    }

    pub fn to_cli_string(&self) -> String {
        let join = |s: &[u32]| {
            s.iter()
                .map(|m| m.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        format!("{};{}", join(&self.positives), join(&self.negatives))
    }

    fn require_balanced(&self) -> Result<()> {
        if !self.balanced() {
            return Err(Error::Validation(format!(
                "profile {} is not balanced ({} vs {})",
                self.to_cli_string(),
                self.degree_positive(),
                self.degree_negative()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for MultiplicityProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({})", self.to_cli_string().replace(';', "; "))
    }
}

/// Fredholm index of the linearized operator for a balanced profile over the
/// given orbit: `Σμ(γ^{m⁺ₖ}) − Σμ(γ^{m⁻ₗ}) + (m−3)(2−n)`.
///
/// The virtual dimension of the ℝ-quotient moduli space is `index − 1`.
pub fn fredholm_index(
    profile: &MultiplicityProfile,
    catalog: &OrbitCatalog,
    orbit: usize,
) -> Result<i64> {
    profile.require_balanced()?;
    let m = i64::from(catalog.half_dim());
    let n = profile.punctures() as i64;
    let mut total = 0i64;
    for &k in profile.positives() {
        total += catalog.cz_iterate(IteratedOrbit { orbit, multiplicity: k })?;
    }
    for &k in profile.negatives() {
        total -= catalog.cz_iterate(IteratedOrbit { orbit, multiplicity: k })?;
    }
    Ok(total + (m - 3) * (2 - n))
}

/// Range `[(2−n)(2m−4), 2n−4]` the Fredholm index of an orbit curve can
/// attain for `n ≥ 3` punctures in half dimension `m`.
pub fn index_range(n: usize, half_dim: u32) -> Result<(i64, i64)> {
    if n < 3 {
        return Err(Error::Validation(format!(
            "index range needs n >= 3 punctures, got {n}"
        )));
    }
    let n = n as i64;
    let m = i64::from(half_dim);
    Ok(((2 - n) * (2 * m - 4), 2 * n - 4))
}

/// Actual dimension of the ℝ-quotient moduli space: `1 + 2(n−3)` for
/// `n ≥ 3`, `0` for the two-puncture cylinder.
pub fn moduli_dimension(profile: &MultiplicityProfile) -> Result<i64> {
    profile.require_balanced()?;
    let n = profile.punctures() as i64;
    match n {
        0 | 1 => Err(Error::Validation(format!(
            "no moduli for n = {n} punctures"
        ))),
        2 => Ok(0),
        _ => Ok(1 + 2 * (n - 3)),
    }
}

/// Number of elements of the zero-dimensional cylinder moduli `(m; m)`:
/// the unique trivial cylinder with `m²` asymptotic-marker choices.
/// `None` for profiles with three or more punctures.
pub fn cylinder_point_count(profile: &MultiplicityProfile) -> Option<u64> {
    if profile.is_trivial_cylinder() {
        let m = u64::from(profile.positives()[0]);
        Some(m * m)
    } else {
        None
    }
}

/// Kernel dimension of the linearization for `n ≥ 3`: the tangent space of
/// `ℝ × 𝓜`, of dimension `2 + 2(n−3)`.
pub fn kernel_dimension(n: usize) -> i64 {
    2 + 2 * (n as i64 - 3)
}

/// Rank of the obstruction (cokernel) bundle, `(2 + 2(n−3)) − index`.
/// At index one this is `2(n−3) + 1`, always odd.
pub fn cokernel_rank(
    profile: &MultiplicityProfile,
    catalog: &OrbitCatalog,
    orbit: usize,
) -> Result<i64> {
    profile.require_balanced()?;
    let n = profile.punctures();
    if n < 3 {
        return Err(Error::Validation(format!(
            "cokernel rank needs n >= 3 punctures, got {n}"
        )));
    }
    let rank = kernel_dimension(n) - fredholm_index(profile, catalog, orbit)?;
    if rank < 0 {
        return Err(Error::Validation(format!(
            "negative cokernel rank {rank} for {profile}: inconsistent CZ data"
        )));
    }
    Ok(rank)
}

/// True when the kernel is strictly larger than the index, which forces a
/// nonzero cokernel: the moduli space cannot be regular.  The two-puncture
/// cylinder is regular.
pub fn nonregularity_check(
    profile: &MultiplicityProfile,
    catalog: &OrbitCatalog,
    orbit: usize,
) -> Result<bool> {
    profile.require_balanced()?;
    if profile.punctures() < 3 {
        return Ok(false);
    }
    let index = fredholm_index(profile, catalog, orbit)?;
    Ok(index < kernel_dimension(profile.punctures()))
}

/// `ω`-energy `ΣS(γ^{m⁺ₖ}) − ΣS(γ^{m⁻ₗ}) + ω(A)`; zero exactly for balanced
/// single-orbit profiles with trivial homology class.
pub fn omega_energy(
    profile: &MultiplicityProfile,
    catalog: &OrbitCatalog,
    orbit: usize,
    class: &[i64],
) -> Result<Rat> {
    let simple = catalog.orbit(orbit)?;
    let mut total = Rat::zero();
    for &k in profile.positives() {
        total += simple.action_of(k);
    }
    for &k in profile.negatives() {
        total -= simple.action_of(k);
    }
    total += catalog.omega_of(class)?;
    Ok(total)
}

/// Summary record bundling the index and dimension data of one profile.
#[derive(Debug, Clone, Serialize)]
pub struct ModuliSummary {
    pub profile: MultiplicityProfile,
    pub punctures: usize,
    pub fredholm_index: i64,
    pub actual_dim_quotient: i64,
    /// `None` for the two-puncture cylinder, where the notion degenerates.
    pub cokernel_rank: Option<i64>,
    pub marker_counts: (u64, u64),
    pub regular: bool,
}

impl ModuliSummary {
    pub fn compute(
        profile: &MultiplicityProfile,
        catalog: &OrbitCatalog,
        orbit: usize,
    ) -> Result<Self> {
        profile.require_balanced()?;
        let n = profile.punctures();
        let index = fredholm_index(profile, catalog, orbit)?;
        let rank = if n >= 3 {
            Some(cokernel_rank(profile, catalog, orbit)?)
        } else {
            None
        };
        Ok(ModuliSummary {
            profile: profile.clone(),
            punctures: n,
            fredholm_index: index,
            actual_dim_quotient: moduli_dimension(profile)?,
            cokernel_rank: rank,
            marker_counts: profile.marker_count(),
            regular: !nonregularity_check(profile, catalog, orbit)?,
        })
    }
}

/// All balanced profiles with `n ≤ max_punctures` and every multiplicity
/// `≤ max_multiplicity`, in canonical order.  Both sides are nonempty.
pub fn balanced_profiles(max_punctures: usize, max_multiplicity: u32) -> Vec<MultiplicityProfile> {
    let mut sides: Vec<Vec<u32>> = Vec::new();
    let mut current = Vec::new();
    // descending multisets of size 1..=max_punctures-1
    fn rec(sides: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, max_len: usize, max_val: u32) {
        if !current.is_empty() {
            sides.push(current.clone());
        }
        if current.len() == max_len {
            return;
        }
        let start = current.last().copied().unwrap_or(max_val);
        for v in (1..=start).rev() {
            current.push(v);
            rec(sides, current, max_len, max_val);
            current.pop();
        }
    }
    rec(&mut sides, &mut current, max_punctures - 1, max_multiplicity);
    let mut out = Vec::new();
    for pos in &sides {
        let sum: u64 = pos.iter().map(|&m| u64::from(m)).sum();
        for neg in &sides {
            if pos.len() + neg.len() > max_punctures {
                continue;
            }
            let nsum: u64 = neg.iter().map(|&m| u64::from(m)).sum();
            if sum == nsum {
                out.push(MultiplicityProfile {
                    positives: pos.clone(),
                    negatives: neg.clone(),
                });
            }
        }
    }
    out.sort();
    out.dedup();
    out
}
