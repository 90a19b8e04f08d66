//! Geometric input data: simple Reeb orbits, Conley-Zehnder iteration models,
//! actions, homology classes and a string of closed differential forms.
//!
//! Conley-Zehnder indices are input data, not computed from geometry.  Three
//! iteration models cover the standard nondegenerate cases:
//!
//! * `Hyperbolic` — linear growth, `μ(γ^k) = k·μ(γ)`;
//! * `Elliptic { rotation }` — rotation-number formula `μ(γ^k) = 2⌊kρ⌋ + 1`
//!   for `ρ ∈ (0,1)`, which forces `μ(γ) = 1`;
//! * `Table { values }` — explicit values, validated at load time against the
//!   iteration bounds `k(μ−(m−1))+(m−1) ≤ μ(γ^k) ≤ k(μ+(m−1))−(m−1)`.

use std::collections::BTreeMap;

use num::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rat::{rat_int, serde_rat, serde_rat_vec, Rat};
use crate::{Error, Result};

/// Conley-Zehnder iteration model of a simple orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CzModel {
    Hyperbolic,
    Elliptic {
        #[serde(with = "serde_rat")]
        rotation: Rat,
    },
    Table {
        values: Vec<i64>,
    },
}

/// A simple (non-iterated) closed Reeb orbit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimpleOrbit {
    pub name: String,
    pub cz_index: i64,
    #[serde(with = "serde_rat")]
    pub period: Rat,
    #[serde(with = "serde_rat")]
    pub action: Rat,
    pub h1_class: Vec<i64>,
    pub cz_model: CzModel,
}

/// An iterate `γ^k` of a simple orbit; `multiplicity` is the cover
/// multiplicity `κ_γ` of the iterated orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct IteratedOrbit {
    pub orbit: usize,
    pub multiplicity: u32,
}

/// A closed differential form; `integrals` maps simple-orbit names to
/// `∫_γ θ` and is meaningful only in degree one.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClosedForm {
    pub name: String,
    pub degree: u32,
    #[serde(default)]
    pub integrals: BTreeMap<String, RatEntry>,
}

/// Wrapper so form integrals serialize as `"p/q"` strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatEntry(#[serde(with = "serde_rat")] pub Rat);

/// The full geometric input: ambient odd dimension `2m−1`, orbits, forms and
/// the `ω`-pairing on a torsion-free `H₂` of rank `h2_rank`.
///
/// Immutable after load; safe for concurrent read access.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OrbitCatalog {
    pub dim_v: u32,
    pub h2_rank: usize,
    #[serde(with = "serde_rat_vec")]
    pub omega_pairing: Vec<Rat>,
    pub orbits: Vec<SimpleOrbit>,
    pub forms: Vec<ClosedForm>,
}

/// Checks the iteration bounds for one value: with `μ = μ(γ)` and half
/// dimension `m`, `k(μ−(m−1))+(m−1) ≤ μ(γ^k) ≤ k(μ+(m−1))−(m−1)`.
pub fn cz_bounds(mu: i64, k: u32, half_dim: u32) -> (i64, i64) {
    let k = i64::from(k);
    let c = i64::from(half_dim) - 1;
    (k * (mu - c) + c, k * (mu + c) - c)
}

impl SimpleOrbit {
    /// Conley-Zehnder index of the `k`-th iterate under this orbit's model.
    pub fn cz_iterate(&self, k: u32, half_dim: u32) -> Result<i64> {
        if k == 0 {
            return Err(Error::Validation(format!(
                "orbit {:?}: iterate multiplicity must be >= 1",
                self.name
            )));
        }
        let value: i64 = match &self.cz_model {
            CzModel::Hyperbolic => i64::from(k) * self.cz_index,
            CzModel::Elliptic { rotation } => {
                if !(rotation.is_positive() && *rotation < rat_int(1)) {
                    return Err(Error::Validation(format!(
                        "orbit {:?}: elliptic rotation must lie in (0,1)",
                        self.name
                    )));
                }
                let scaled = rotation * rat_int(i64::from(k));
                let floor = scaled.floor().to_integer();
                let floor: i64 = i64::try_from(&floor).map_err(|_| {
                    Error::Numeric(format!("orbit {:?}: rotation overflow", self.name))
                })?;
                2 * floor + 1
            }
            CzModel::Table { values } => {
                let idx = k as usize;
                if idx > values.len() {
                    return Err(Error::Validation(format!(
                        "orbit {:?}: iterate {} beyond table length {}",
                        self.name,
                        k,
                        values.len()
                    )));
                }
                values[idx - 1]
            }
        };
        debug_assert!(
            {
                let (lo, hi) = cz_bounds(self.cz_iterate_first(), k, half_dim);
                lo <= value && value <= hi
            },
            "iteration bounds violated for {:?} at k={k}",
            self.name
        );
        Ok(value)
    }

    fn cz_iterate_first(&self) -> i64 {
        match &self.cz_model {
            CzModel::Hyperbolic => self.cz_index,
            CzModel::Elliptic { .. } => 1,
            CzModel::Table { values } => values[0],
        }
    }

    /// Action of the `k`-th iterate, `S(γ^k) = k·S(γ)`.
    pub fn action_of(&self, k: u32) -> Rat {
        &self.action * rat_int(i64::from(k))
    }

    /// Bad orbits are the even iterates whose Conley-Zehnder parity flips
    /// relative to the underlying simple orbit.
    pub fn is_bad(&self, k: u32, half_dim: u32) -> Result<bool> {
        if k % 2 != 0 {
            return Ok(false);
        }
        let mu_k = self.cz_iterate(k, half_dim)?;
        let mu_1 = self.cz_iterate(1, half_dim)?;
        Ok((mu_k - mu_1) % 2 != 0)
    }
}

impl OrbitCatalog {
    /// Half dimension `m` with `dim V = 2m − 1`.
    pub fn half_dim(&self) -> u32 {
        (self.dim_v + 1) / 2
    }

    pub fn orbit(&self, idx: usize) -> Result<&SimpleOrbit> {
        self.orbits
            .get(idx)
            .ok_or_else(|| Error::Validation(format!("orbit index {idx} out of range")))
    }

    pub fn orbit_by_name(&self, name: &str) -> Result<(usize, &SimpleOrbit)> {
        self.orbits
            .iter()
            .enumerate()
            .find(|(_, o)| o.name == name)
            .ok_or_else(|| Error::Validation(format!("no orbit named {name:?}")))
    }

    pub fn cz_iterate(&self, it: IteratedOrbit) -> Result<i64> {
        self.orbit(it.orbit)?.cz_iterate(it.multiplicity, self.half_dim())
    }

    pub fn action_of(&self, it: IteratedOrbit) -> Result<Rat> {
        Ok(self.orbit(it.orbit)?.action_of(it.multiplicity))
    }

    pub fn is_bad(&self, it: IteratedOrbit) -> Result<bool> {
        self.orbit(it.orbit)?.is_bad(it.multiplicity, self.half_dim())
    }

    /// Integral of a closed form over the iterated orbit, `k·∫_γ θ`.
    /// Zero for forms of degree other than one.
    pub fn form_integral(&self, it: IteratedOrbit, form: &ClosedForm) -> Result<Rat> {
        if form.degree != 1 {
            return Ok(Rat::zero());
        }
        let orbit = self.orbit(it.orbit)?;
        let entry = form.integrals.get(&orbit.name).ok_or_else(|| {
            Error::Validation(format!(
                "form {:?} has no integral entry for orbit {:?}",
                form.name, orbit.name
            ))
        })?;
        Ok(&entry.0 * rat_int(i64::from(it.multiplicity)))
    }

    /// `ω(A)` for an integer homology class in the chosen `H₂` basis.
    pub fn omega_of(&self, class: &[i64]) -> Result<Rat> {
        if class.len() != self.h2_rank {
            return Err(Error::Validation(format!(
                "homology class has length {}, expected h2_rank {}",
                class.len(),
                self.h2_rank
            )));
        }
        let mut total = Rat::zero();
        for (a, w) in class.iter().zip(&self.omega_pairing) {
            total += w * rat_int(*a);
        }
        Ok(total)
    }

    /// Runs every load-time validation rule. Called by the loader; kept
    /// public so hand-built catalogs can be checked too.
    pub fn validate(&self) -> Result<()> {
        if self.dim_v < 3 || self.dim_v % 2 == 0 {
            return Err(Error::Validation(format!(
                "dim_v must be odd and >= 3, got {}",
                self.dim_v
            )));
        }
        if self.omega_pairing.len() != self.h2_rank {
            return Err(Error::Validation(format!(
                "omega_pairing has length {}, expected h2_rank {}",
                self.omega_pairing.len(),
                self.h2_rank
            )));
        }
        let mut names = std::collections::BTreeSet::new();
        for orbit in &self.orbits {
            if !names.insert(orbit.name.clone()) {
                return Err(Error::Validation(format!(
                    "duplicate orbit name {:?}",
                    orbit.name
                )));
            }
            self.validate_orbit(orbit)?;
        }
        let h1_len = self.orbits.first().map(|o| o.h1_class.len());
        if let Some(len) = h1_len {
            if let Some(bad) = self.orbits.iter().find(|o| o.h1_class.len() != len) {
                return Err(Error::Validation(format!(
                    "orbit {:?} has h1_class length {}, others have {}",
                    bad.name,
                    bad.h1_class.len(),
                    len
                )));
            }
        }
        let mut form_names = std::collections::BTreeSet::new();
        for form in &self.forms {
            if !form_names.insert(form.name.clone()) {
                return Err(Error::Validation(format!(
                    "duplicate form name {:?}",
                    form.name
                )));
            }
            self.validate_form(form)?;
        }
        Ok(())
    }

    fn validate_orbit(&self, orbit: &SimpleOrbit) -> Result<()> {
        if !orbit.period.is_positive() {
            return Err(Error::Validation(format!(
                "orbit {:?}: period must be positive",
                orbit.name
            )));
        }
        let m = self.half_dim();
        match &orbit.cz_model {
            CzModel::Hyperbolic => {}
            CzModel::Elliptic { rotation } => {
                if !(rotation.is_positive() && *rotation < rat_int(1)) {
                    return Err(Error::Validation(format!(
                        "orbit {:?}: elliptic rotation must lie in (0,1)",
                        orbit.name
                    )));
                }
                if orbit.cz_index != 1 {
                    return Err(Error::Validation(format!(
                        "orbit {:?}: elliptic model forces cz_index 1, got {}",
                        orbit.name, orbit.cz_index
                    )));
                }
            }
            CzModel::Table { values } => {
                if values.is_empty() {
                    return Err(Error::Validation(format!(
                        "orbit {:?}: empty CZ table",
                        orbit.name
                    )));
                }
                if values[0] != orbit.cz_index {
                    return Err(Error::Validation(format!(
                        "orbit {:?}: table value {} at k=1 disagrees with cz_index {}",
                        orbit.name, values[0], orbit.cz_index
                    )));
                }
                for (i, &v) in values.iter().enumerate() {
                    let k = (i + 1) as u32;
                    let (lo, hi) = cz_bounds(orbit.cz_index, k, m);
                    if v < lo || v > hi {
                        return Err(Error::Validation(format!(
                            "orbit {:?}: table value {} at k={} violates iteration bounds [{}, {}]",
                            orbit.name, v, k, lo, hi
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    fn validate_form(&self, form: &ClosedForm) -> Result<()> {
        for key in form.integrals.keys() {
            if !self.orbits.iter().any(|o| &o.name == key) {
                return Err(Error::Validation(format!(
                    "form {:?} refers to unknown orbit {:?}",
                    form.name, key
                )));
            }
        }
        if form.degree == 1 {
            for orbit in &self.orbits {
                if !form.integrals.contains_key(&orbit.name) {
                    return Err(Error::Validation(format!(
                        "degree-1 form {:?} is missing the integral for orbit {:?}",
                        form.name, orbit.name
                    )));
                }
            }
        } else if form.integrals.values().any(|v| !v.0.is_zero()) {
            return Err(Error::Validation(format!(
                "form {:?} has degree {} but nonzero orbit integrals",
                form.name, form.degree
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::rat_frac;

    fn hyperbolic(name: &str, mu: i64) -> SimpleOrbit {
        SimpleOrbit {
            name: name.into(),
            cz_index: mu,
            period: rat_int(1),
            action: rat_int(1),
            h1_class: vec![],
            cz_model: CzModel::Hyperbolic,
        }
    }

    fn elliptic(name: &str, num: i64, den: i64) -> SimpleOrbit {
        SimpleOrbit {
            name: name.into(),
            cz_index: 1,
            period: rat_int(1),
            action: rat_int(1),
            h1_class: vec![],
            cz_model: CzModel::Elliptic {
                rotation: rat_frac(num, den),
            },
        }
    }

    #[test]
    fn hyperbolic_iterates_linearly() {
        let orbit = hyperbolic("g", 1);
        assert_eq!(orbit.cz_iterate(2, 2).unwrap(), 2);
        assert_eq!(orbit.cz_iterate(1, 2).unwrap(), 1);
    }

    #[test]
    fn elliptic_uses_floor_formula() {
        // 2*floor(4 * 3/10) + 1 = 3, evaluated independently of the impl path
        let orbit = elliptic("e", 3, 10);
        let rho = 0.3_f64;
        let oracle = 2 * ((4.0 * rho).floor() as i64) + 1;
        assert_eq!(oracle, 3);
        assert_eq!(orbit.cz_iterate(4, 2).unwrap(), 3);
    }

    #[test]
    fn hyperbolic_iterate_respects_bounds() {
        // mu=2, m=2, k=3: 3*1+1 = 4 <= 6 <= 3*3-1 = 8
        let orbit = hyperbolic("g", 2);
        let v = orbit.cz_iterate(3, 2).unwrap();
        let (lo, hi) = cz_bounds(2, 3, 2);
        assert_eq!((lo, hi), (4, 8));
        assert!(lo <= v && v <= hi);
        assert_eq!(v, 6);
    }

    #[test]
    fn iteration_bounds_hold_for_all_models() {
        let orbits = vec![
            hyperbolic("h1", 1),
            hyperbolic("h2", 2),
            hyperbolic("h3", -1),
            elliptic("e1", 3, 10),
            elliptic("e2", 1, 7),
            elliptic("e3", 9, 10),
        ];
        for m in [2u32, 3, 4] {
            for orbit in &orbits {
                let mu = orbit.cz_iterate(1, m).unwrap();
                for k in 1..=20u32 {
                    let v = orbit.cz_iterate(k, m).unwrap();
                    let (lo, hi) = cz_bounds(mu, k, m);
                    assert!(
                        lo <= v && v <= hi,
                        "bounds violated for {} at k={k}, m={m}: {lo} <= {v} <= {hi}",
                        orbit.name
                    );
                }
            }
        }
    }

    #[test]
    fn action_is_linear_in_multiplicity() {
        let orbit = SimpleOrbit {
            action: rat_frac(2, 3),
            ..hyperbolic("g", 1)
        };
        assert_eq!(orbit.action_of(6), rat_int(4));
        assert_eq!(orbit.action_of(1), rat_frac(2, 3));
        let a = orbit.action_of(3);
        let b = orbit.action_of(4);
        assert_eq!(orbit.action_of(7), a + b);
    }

    #[test]
    fn bad_orbit_parity_rule() {
        // hyperbolic mu=1: mu(g^2) = 2, parity flips -> bad
        let odd_hyp = hyperbolic("g", 1);
        assert!(odd_hyp.is_bad(2, 2).unwrap());
        assert!(!odd_hyp.is_bad(1, 2).unwrap());
        assert!(!odd_hyp.is_bad(3, 2).unwrap());
        // elliptic rho=3/10: mu(g^2) = 2*floor(0.6)+1 = 1 = mu(g) -> good
        let ell = elliptic("e", 3, 10);
        assert!(!ell.is_bad(2, 2).unwrap());
        // odd iterates are never bad
        for k in [1u32, 3, 5, 7, 9] {
            assert!(!odd_hyp.is_bad(k, 2).unwrap());
            assert!(!ell.is_bad(k, 2).unwrap());
        }
    }

    #[test]
    fn form_integrals_scale_and_vanish() {
        let catalog = OrbitCatalog {
            dim_v: 3,
            h2_rank: 0,
            omega_pairing: vec![],
            orbits: vec![hyperbolic("g", 1)],
            forms: vec![
                ClosedForm {
                    name: "theta".into(),
                    degree: 1,
                    integrals: [("g".to_string(), RatEntry(rat_int(1)))].into(),
                },
                ClosedForm {
                    name: "omega2".into(),
                    degree: 2,
                    integrals: BTreeMap::new(),
                },
                ClosedForm {
                    name: "zero".into(),
                    degree: 1,
                    integrals: [("g".to_string(), RatEntry(rat_int(0)))].into(),
                },
            ],
        };
        catalog.validate().unwrap();
        let it = IteratedOrbit { orbit: 0, multiplicity: 3 };
        assert_eq!(catalog.form_integral(it, &catalog.forms[0]).unwrap(), rat_int(3));
        assert_eq!(catalog.form_integral(it, &catalog.forms[1]).unwrap(), rat_int(0));
        let it5 = IteratedOrbit { orbit: 0, multiplicity: 5 };
        assert_eq!(catalog.form_integral(it5, &catalog.forms[2]).unwrap(), rat_int(0));
        // linearity in multiplicity
        let i2 = catalog
            .form_integral(IteratedOrbit { orbit: 0, multiplicity: 2 }, &catalog.forms[0])
            .unwrap();
        let i7 = catalog
            .form_integral(IteratedOrbit { orbit: 0, multiplicity: 7 }, &catalog.forms[0])
            .unwrap();
        let i9 = catalog
            .form_integral(IteratedOrbit { orbit: 0, multiplicity: 9 }, &catalog.forms[0])
            .unwrap();
        assert_eq!(i9, i2 + i7);
    }

    #[test]
    fn table_validation_enforces_bounds() {
        let catalog = OrbitCatalog {
            dim_v: 3,
            h2_rank: 0,
            omega_pairing: vec![],
            orbits: vec![SimpleOrbit {
                cz_model: CzModel::Table { values: vec![1, 9] },
                ..hyperbolic("t", 1)
            }],
            forms: vec![],
        };
        let err = catalog.validate().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("violates iteration bounds"), "{msg}");
        // the bound values appear in the message
        assert!(msg.contains("[1, 3]"), "{msg}");
    }

    #[test]
    fn table_iterate_beyond_length_errors() {
        let orbit = SimpleOrbit {
            cz_model: CzModel::Table { values: vec![1, 2, 3] },
            ..hyperbolic("t", 1)
        };
        assert_eq!(orbit.cz_iterate(3, 2).unwrap(), 3);
        assert!(orbit.cz_iterate(4, 2).is_err());
    }

    #[test]
    fn even_dimension_rejected() {
        let catalog = OrbitCatalog {
            dim_v: 4,
            h2_rank: 0,
            omega_pairing: vec![],
            orbits: vec![],
            forms: vec![],
        };
        assert!(catalog.validate().is_err());
    }
}
