//! Machine-checkable certificates that the Euler number of the obstruction
//! bundle over an index-one profile vanishes.
//!
//! The analytic content is replaced by its arithmetic skeleton: the rank of
//! the cokernel bundle equals `2(n−3)+1` and is odd, so the count of zeros
//! of a section equals minus itself; each codimension-one boundary stratum
//! contributes nothing, either because no factor moduli can carry the
//! forced virtual dimension zero (an index mismatch) or because some factor
//! is itself an index-one profile with fewer punctures whose count vanishes
//! by induction.
//!
//! Factor indices over a stratum always sum to the profile's index: the
//! connecting orbits cancel in pairs and the Euler characteristics of the
//! component domains add up.

use std::collections::BTreeMap;

use num::Zero;
use serde::{Deserialize, Serialize};

use crate::catalog::OrbitCatalog;
use crate::moduli::{cokernel_rank, fredholm_index, MultiplicityProfile};
use crate::rat::Rat;
use crate::strata::{enumerate_codim1, StratumSummary};
use crate::{Error, Result};

/// Why one boundary stratum contributes zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Disposition {
    /// Factor `factor` of the stratum has Fredholm index `index ≠ 1`, so the
    /// dimension-equality argument leaves no room for zeros of a transversal
    /// section over this stratum.
    DimMismatch { factor: usize, index: i64 },
    /// Factor `factor` is an index-one profile with strictly fewer
    /// punctures; its certificate makes the fibre-product count a multiple
    /// of zero.
    Induction {
        factor: usize,
        sub_profile: MultiplicityProfile,
        certificate: String,
    },
}

/// One boundary stratum together with the reason it contributes nothing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryCase {
    pub stratum: StratumSummary,
    pub disposition: Disposition,
}

/// Certificate node for a single profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EulerCertificate {
    pub orbit: String,
    pub profile: MultiplicityProfile,
    pub fredholm_index: i64,
    pub rank: i64,
    pub parity_odd: bool,
    pub boundary: Vec<BoundaryCase>,
    pub conclusion: i64,
}

/// A root certificate with all recursively referenced nodes, keyed by
/// canonical profile strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateSet {
    pub root: String,
    pub nodes: BTreeMap<String, EulerCertificate>,
}

/// Canonical key of a profile over an orbit.
pub fn certificate_key(orbit: &str, profile: &MultiplicityProfile) -> String {
    format!("{orbit}|{}", profile.to_cli_string())
}

/// Euler number of the obstruction bundle over an index-one profile: always
/// zero, returned together with a machine-checkable certificate.
pub fn euler_number(
    catalog: &OrbitCatalog,
    orbit: usize,
    profile: &MultiplicityProfile,
) -> Result<(i64, CertificateSet)> {
    let orbit_name = catalog.orbit(orbit)?.name.clone();
    let mut nodes = BTreeMap::new();
    let root = build_certificate(catalog, orbit, &orbit_name, profile, &mut nodes)?;
    Ok((0, CertificateSet { root, nodes }))
}

fn build_certificate(
    catalog: &OrbitCatalog,
    orbit: usize,
    orbit_name: &str,
    profile: &MultiplicityProfile,
    nodes: &mut BTreeMap<String, EulerCertificate>,
) -> Result<String> {
    let key = certificate_key(orbit_name, profile);
    if nodes.contains_key(&key) {
        return Ok(key);
    }
    let index = fredholm_index(profile, catalog, orbit)?;
    if index != 1 {
        return Err(Error::Validation(format!(
            "Euler certificates require Fredholm index 1, {profile} has index {index}"
        )));
    }
    let rank = cokernel_rank(profile, catalog, orbit)?;
    if rank % 2 != 1 {
        return Err(Error::Invariant(format!(
            "even cokernel rank {rank} for {profile}: inconsistent CZ data"
        )));
    }
    // reserve the key before recursing so cycles would be caught by the
    // strict puncture decrease rather than looping
    let mut boundary = Vec::new();
    for stratum in enumerate_codim1(profile)? {
        let disposition = dispose_stratum(catalog, orbit, orbit_name, &stratum, nodes, profile)?;
        boundary.push(BoundaryCase { stratum, disposition });
    }
    let cert = EulerCertificate {
        orbit: orbit_name.to_string(),
        profile: profile.clone(),
        fredholm_index: index,
        rank,
        parity_odd: true,
        boundary,
        conclusion: 0,
    };
    nodes.insert(key.clone(), cert);
    Ok(key)
}

fn dispose_stratum(
    catalog: &OrbitCatalog,
    orbit: usize,
    orbit_name: &str,
    stratum: &StratumSummary,
    nodes: &mut BTreeMap<String, EulerCertificate>,
    parent: &MultiplicityProfile,
) -> Result<Disposition> {
    let mut indices = Vec::with_capacity(stratum.component_profiles.len());
    for factor in &stratum.component_profiles {
        indices.push(fredholm_index(factor, catalog, orbit)?);
    }
    debug_assert_eq!(
        indices.iter().sum::<i64>(),
        fredholm_index(parent, catalog, orbit)?,
        "factor indices must sum to the profile index"
    );

    // prefer induction through an index-one noncylindrical factor
    for (i, factor) in stratum.component_profiles.iter().enumerate() {
        if factor.punctures() >= 3 && indices[i] == 1 {
            debug_assert!(factor.punctures() < parent.punctures());
            let sub_key = build_certificate(catalog, orbit, orbit_name, factor, nodes)?;
            return Ok(Disposition::Induction {
                factor: i,
                sub_profile: factor.clone(),
                certificate: sub_key,
            });
        }
    }
    for (i, factor) in stratum.component_profiles.iter().enumerate() {
        if factor.punctures() >= 3 && indices[i] != 1 {
            return Ok(Disposition::DimMismatch {
                factor: i,
                index: indices[i],
            });
        }
    }
    Err(Error::Invariant(format!(
        "stratum {} has no noncylindrical factor",
        stratum.encoding
    )))
}

/// The contribution of a branched-cover profile to the differential of the
/// ambient theory: zero for every orbit-curve moduli space.  Trivial
/// cylinders are excluded from the count by convention and contribute zero
/// as well.
pub fn contribution(_catalog: &OrbitCatalog, _orbit: usize, _profile: &MultiplicityProfile) -> Rat {
    Rat::zero()
}

/// Result of re-checking a certificate.
#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub ok: bool,
    /// Failure descriptions naming the offending node.
    pub failures: Vec<String>,
}

/// Independently re-checks every arithmetic claim of a certificate set
/// without re-running the generator: rank and parity per node, stratum
/// validity and factor indices per boundary case, and the recursive closure
/// of induction references.
pub fn verify_certificate(set: &CertificateSet, catalog: &OrbitCatalog) -> VerifyOutcome {
    let mut failures = Vec::new();
    if !set.nodes.contains_key(&set.root) {
        failures.push(format!("root {:?} missing from the node table", set.root));
    }
    for (key, node) in &set.nodes {
        verify_node(key, node, set, catalog, &mut failures);
    }
    VerifyOutcome {
        ok: failures.is_empty(),
        failures,
    }
}

fn verify_node(
    key: &str,
    node: &EulerCertificate,
    set: &CertificateSet,
    catalog: &OrbitCatalog,
    failures: &mut Vec<String>,
) {
    let mut fail = |msg: String| failures.push(format!("node {key}: {msg}"));

    if key != certificate_key(&node.orbit, &node.profile) {
        fail("key does not match orbit and profile".into());
        return;
    }
    let orbit = match catalog.orbit_by_name(&node.orbit) {
        Ok((idx, _)) => idx,
        Err(e) => {
            fail(e.to_string());
            return;
        }
    };
    let index = match fredholm_index(&node.profile, catalog, orbit) {
        Ok(i) => i,
        Err(e) => {
            fail(e.to_string());
            return;
        }
    };
    if index != 1 || node.fredholm_index != 1 {
        fail(format!("Fredholm index is {index}, certificate needs 1"));
    }
    match cokernel_rank(&node.profile, catalog, orbit) {
        Ok(rank) => {
            if rank != node.rank {
                fail(format!("stored rank {} but recomputed {rank}", node.rank));
            }
            if rank % 2 != 1 || !node.parity_odd {
                fail(format!("rank {rank} must be odd"));
            }
        }
        Err(e) => fail(e.to_string()),
    }
    if node.conclusion != 0 {
        fail(format!("conclusion must be 0, found {}", node.conclusion));
    }

    for (b, case) in node.boundary.iter().enumerate() {
        let mut fail = |msg: String| failures.push(format!("node {key}, boundary {b}: {msg}"));
        // rebuild the stratum summary from its tree; this re-runs validity,
        // codimension, component profiles and the canonical encoding
        match StratumSummary::build(&case.stratum.tree, &node.profile) {
            Ok(rebuilt) => {
                if rebuilt != case.stratum {
                    fail("stored stratum disagrees with its tree".into());
                    continue;
                }
                if rebuilt.codim != 1 {
                    fail(format!("codimension {} is not 1", rebuilt.codim));
                }
            }
            Err(e) => {
                fail(format!("stratum invalid: {e}"));
                continue;
            }
        }
        match &case.disposition {
            Disposition::DimMismatch { factor, index } => {
                match case.stratum.component_profiles.get(*factor) {
                    None => fail(format!("factor {factor} out of range")),
                    Some(fp) => {
                        if fp.punctures() < 3 {
                            fail(format!("factor {factor} is a cylinder"));
                        }
                        match fredholm_index(fp, catalog, orbit) {
                            Ok(actual) => {
                                if actual != *index {
                                    fail(format!(
                                        "claimed index {index} but recomputed {actual}"
                                    ));
                                } else if actual == 1 {
                                    fail("mismatch disposition with index 1".into());
                                }
                            }
                            Err(e) => fail(e.to_string()),
                        }
                    }
                }
            }
            Disposition::Induction {
                factor,
                sub_profile,
                certificate,
            } => match case.stratum.component_profiles.get(*factor) {
                None => fail(format!("factor {factor} out of range")),
                Some(fp) => {
                    if fp != sub_profile {
                        fail("cited sub-profile is not the stratum factor".into());
                    }
                    if sub_profile.punctures() >= node.profile.punctures() {
                        fail("induction must strictly decrease the puncture count".into());
                    }
                    match fredholm_index(sub_profile, catalog, orbit) {
                        Ok(1) => {}
                        Ok(other) => fail(format!("induction factor has index {other}, not 1")),
                        Err(e) => fail(e.to_string()),
                    }
                    match set.nodes.get(certificate) {
                        None => fail(format!("dangling certificate reference {certificate:?}")),
                        Some(sub) => {
                            if certificate_key(&sub.orbit, &sub.profile) != *certificate
                                || &sub.profile != sub_profile
                            {
                                fail("referenced certificate is for a different profile".into());
                            }
                        }
                    }
                }
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{CzModel, SimpleOrbit};
    use crate::rat::rat_int;

    fn catalog(model: CzModel, cz_index: i64) -> OrbitCatalog {
        let catalog = OrbitCatalog {
            dim_v: 3,
            h2_rank: 0,
            omega_pairing: vec![],
            orbits: vec![SimpleOrbit {
                name: "g".into(),
                cz_index,
                period: rat_int(1),
                action: rat_int(1),
                h1_class: vec![],
                cz_model: model,
            }],
            forms: vec![],
        };
        catalog.validate().unwrap();
        catalog
    }

    fn profile(s: &str) -> MultiplicityProfile {
        MultiplicityProfile::parse(s).unwrap()
    }

    #[test]
    fn pair_of_pants_certificate_closes_by_parity() {
        let cat = catalog(CzModel::Hyperbolic, 1);
        let p = profile("2;1,1");
        let (value, set) = euler_number(&cat, 0, &p).unwrap();
        assert_eq!(value, 0);
        let root = &set.nodes[&set.root];
        assert_eq!(root.rank, 1);
        assert!(root.parity_odd);
        assert!(root.boundary.is_empty());
        assert!(verify_certificate(&set, &cat).ok);
    }

    #[test]
    fn index_precondition_is_enforced() {
        let cat = catalog(CzModel::Hyperbolic, 1);
        // the trivial cylinder has index zero
        assert!(euler_number(&cat, 0, &profile("2;2")).is_err());
        // four punctures with the linear model have index two
        assert!(euler_number(&cat, 0, &profile("3;1,1,1")).is_err());
    }

    #[test]
    fn four_puncture_certificate_uses_induction() {
        // table [1,1,2]: (3;1,1,1) has index 2-3+2 = 1; its strata contain
        // the factor (2;1,1) of index 0 and (3;1,2) of index 1
        let cat = catalog(CzModel::Table { values: vec![1, 1, 2] }, 1);
        let p = profile("3;1,1,1");
        let (value, set) = euler_number(&cat, 0, &p).unwrap();
        assert_eq!(value, 0);
        let root = &set.nodes[&set.root];
        assert!(!root.boundary.is_empty(), "expected codim-1 strata");
        let inductions: Vec<_> = root
            .boundary
            .iter()
            .filter(|b| matches!(b.disposition, Disposition::Induction { .. }))
            .collect();
        assert!(
            !inductions.is_empty(),
            "expected at least one induction case"
        );
        // cited sub-certificates exist and close by parity
        assert!(set.nodes.len() >= 2);
        assert!(verify_certificate(&set, &cat).ok);
    }

    #[test]
    fn tampered_rank_is_rejected() {
        let cat = catalog(CzModel::Hyperbolic, 1);
        let (_, mut set) = euler_number(&cat, 0, &profile("2;1,1")).unwrap();
        let root_key = set.root.clone();
        set.nodes.get_mut(&root_key).unwrap().rank = 2;
        let outcome = verify_certificate(&set, &cat);
        assert!(!outcome.ok);
        assert!(outcome
            .failures
            .iter()
            .any(|f| f.contains("rank") && f.contains(&root_key)));
    }

    #[test]
    fn dangling_reference_is_rejected() {
        let cat = catalog(CzModel::Table { values: vec![1, 1, 2] }, 1);
        let (_, mut set) = euler_number(&cat, 0, &profile("3;1,1,1")).unwrap();
        // drop every non-root node to create dangling references
        let root_key = set.root.clone();
        set.nodes.retain(|k, _| k == &root_key);
        let outcome = verify_certificate(&set, &cat);
        assert!(!outcome.ok);
        assert!(outcome
            .failures
            .iter()
            .any(|f| f.contains("dangling certificate reference")));
    }

    #[test]
    fn contribution_is_zero() {
        let cat = catalog(CzModel::Hyperbolic, 1);
        for s in ["2;1,1", "1;1", "2,2;1,3"] {
            assert_eq!(contribution(&cat, 0, &profile(s)), Rat::zero());
        }
    }

    #[test]
    fn certificates_verify_for_small_sweep() {
        // sweep small balanced profiles over two catalogs and certify every
        // index-one case
        let catalogs = [
            catalog(CzModel::Hyperbolic, 1),
            catalog(CzModel::Table { values: vec![1, 1, 2, 3, 3] }, 1),
            catalog(CzModel::Table { values: vec![1, 2, 3, 4, 5] }, 1),
        ];
        for cat in &catalogs {
            for p in crate::moduli::balanced_profiles(5, 4) {
                if p.punctures() < 3 {
                    continue;
                }
                if fredholm_index(&p, cat, 0).unwrap() != 1 {
                    continue;
                }
                let (value, set) = euler_number(cat, 0, &p).unwrap();
                assert_eq!(value, 0);
                let outcome = verify_certificate(&set, cat);
                assert!(outcome.ok, "{p}: {:?}", outcome.failures);
                // every node has odd rank
                for node in set.nodes.values() {
                    assert_eq!(node.rank % 2, 1);
                }
            }
        }
    }

    #[test]
    fn certificate_roundtrips_through_json() {
        let cat = catalog(CzModel::Table { values: vec![1, 1, 2] }, 1);
        let (_, set) = euler_number(&cat, 0, &profile("3;1,1,1")).unwrap();
        let json = serde_json::to_string_pretty(&set).unwrap();
        let back: CertificateSet = serde_json::from_str(&json).unwrap();
        assert_eq!(set, back);
        assert!(verify_certificate(&back, &cat).ok);
    }
}
