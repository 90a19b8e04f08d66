//! The graded commutative algebra of formal variables `q_γ`, `p_γ`, `tᵢ`
//! and `e^A` over exact rationals, with Koszul signs, a pluggable grading
//! convention and the Poisson bracket weighted by the cover multiplicity.
//!
//! Generators `q`/`p` exist only for good orbits.  Odd generators square to
//! zero.  The bracket pairs `p_{γ^k}` with `q_{γ^k}` with weight `κ = k`;
//! its Koszul signs are fixed once here and all asserted identities
//! (antisymmetry, Leibniz, Jacobi) are insensitive to the choice of a
//! consistent convention.  Truncation (maximal generator action, word
//! length and t-degree) is an algebra-wide parameter; every operation
//! closes within it because word length and t-degree only grow under
//! multiplication.

use std::collections::{BTreeMap, BTreeSet};

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::catalog::{IteratedOrbit, OrbitCatalog};
use crate::rat::{rat_int, Rat};
use crate::{Error, Result};

/// Grading convention; only the parity of degrees enters sign rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradingConvention {
    /// `deg q_γ = μ(γ) + (m−3)`, `deg p_γ = −μ(γ) + (m−3)`,
    /// `deg tᵢ = deg θᵢ − 2`.
    #[default]
    EghStyle,
}

impl GradingConvention {
    pub fn q_degree(&self, cz: i64, half_dim: u32) -> i64 {
        cz + i64::from(half_dim) - 3
    }

    pub fn p_degree(&self, cz: i64, half_dim: u32) -> i64 {
        -cz + i64::from(half_dim) - 3
    }

    pub fn t_degree(&self, form_degree: u32) -> i64 {
        i64::from(form_degree) - 2
    }
}

/// What a generator is; the orbit and form references are indices into the
/// catalog the algebra was built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GenKind {
    Q { orbit: usize, mult: u32 },
    P { orbit: usize, mult: u32 },
    T { form: usize },
}

/// A formal variable with its degree under the algebra's convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Generator {
    pub kind: GenKind,
    pub degree: i64,
}

impl Generator {
    pub fn parity(&self) -> u8 {
        (self.degree.rem_euclid(2)) as u8
    }
}

/// A sorted power product of generators together with an `e^A` exponent.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Monomial {
    factors: Vec<(Generator, u32)>,
    homology: Vec<i64>,
}

impl Monomial {
    pub fn unit(h2_rank: usize) -> Self {
        Monomial {
            factors: Vec::new(),
            homology: vec![0; h2_rank],
        }
    }

    /// Builds a monomial from unsorted parts; exponents of zero are dropped
    /// and factors sorted into canonical order.
    pub fn from_parts(factors: Vec<(Generator, u32)>, homology: Vec<i64>) -> Self {
        let mut factors = factors;
        factors.retain(|(_, e)| *e > 0);
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        debug_assert!(factors.windows(2).all(|w| w[0].0 != w[1].0));
        Monomial { factors, homology }
    }

    pub fn factors(&self) -> &[(Generator, u32)] {
        &self.factors
    }

    pub fn homology(&self) -> &[i64] {
        &self.homology
    }

    pub fn parity(&self) -> u8 {
        let sum: u32 = self
            .factors
            .iter()
            .map(|(g, e)| u32::from(g.parity()) * e)
            .sum();
        (sum % 2) as u8
    }

    pub fn degree(&self) -> i64 {
        self.factors
            .iter()
            .map(|(g, e)| g.degree * i64::from(*e))
            .sum()
    }

    /// Number of `q`/`p` letters counted with exponents.
    pub fn word_length(&self) -> u32 {
        self.factors
            .iter()
            .filter(|(g, _)| !matches!(g.kind, GenKind::T { .. }))
            .map(|(_, e)| *e)
            .sum()
    }

    /// Number of `t` letters counted with exponents.
    pub fn t_degree(&self) -> u32 {
        self.factors
            .iter()
            .filter(|(g, _)| matches!(g.kind, GenKind::T { .. }))
            .map(|(_, e)| *e)
            .sum()
    }

    /// Koszul product of two monomials: `None` when an odd generator
    /// squares to zero, otherwise the sorted product and its sign.
    fn mul(&self, other: &Monomial) -> Option<(Monomial, i8)> {
        debug_assert_eq!(self.homology.len(), other.homology.len());
        let mut factors = Vec::with_capacity(self.factors.len() + other.factors.len());
        let mut sign = 1i8;
        // odd letters of self still to the right of the merge point
        let mut odd_left: u32 = self
            .factors
            .iter()
            .map(|(g, e)| u32::from(g.parity()) * e)
            .sum();
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() || j < other.factors.len() {
            let take_left = match (self.factors.get(i), other.factors.get(j)) {
                (Some((a, _)), Some((b, _))) => a <= b,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_left {
                let (a, ea) = self.factors[i];
                odd_left -= u32::from(a.parity()) * ea;
                if let Some((b, eb)) = other.factors.get(j).copied() {
                    if a == b {
                        if a.parity() == 1 {
                            return None; // odd square
                        }
                        factors.push((a, ea + eb));
                        i += 1;
                        j += 1;
                        continue;
                    }
                }
                factors.push((a, ea));
                i += 1;
            } else {
                let (b, eb) = other.factors[j];
                if b.parity() == 1 && odd_left % 2 == 1 {
                    sign = -sign;
                }
                factors.push((b, eb));
                j += 1;
            }
        }
        let homology = self
            .homology
            .iter()
            .zip(&other.homology)
            .map(|(a, b)| a + b)
            .collect();
        Some((Monomial { factors, homology }, sign))
    }

    /// Left derivative by `g`: sign, lowered monomial and the exponent that
    /// came down.  `None` when `g` does not divide the monomial.
    fn left_derivative(&self, g: &Generator) -> Option<(i8, u32, Monomial)> {
        let pos = self.factors.iter().position(|(h, _)| h == g)?;
        let crossings: u32 = self.factors[..pos]
            .iter()
            .map(|(h, e)| u32::from(h.parity()) * e)
            .sum();
        let sign = if g.parity() == 1 && crossings % 2 == 1 {
            -1
        } else {
            1
        };
        let mut factors = self.factors.clone();
        let e = factors[pos].1;
        if e == 1 {
            factors.remove(pos);
        } else {
            factors[pos].1 = e - 1;
        }
        Some((
            sign,
            e,
            Monomial {
                factors,
                homology: self.homology.clone(),
            },
        ))
    }
}

/// Truncation parameters: maximal generator action `T`, word length `W`
/// and t-degree `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub max_action: Rat,
    pub max_word_len: u32,
    pub max_t_degree: u32,
}

impl Truncation {
    pub fn new(max_action: Rat, max_word_len: u32, max_t_degree: u32) -> Self {
        Truncation {
            max_action,
            max_word_len,
            max_t_degree,
        }
    }
}

/// A finite sum of monomials with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GradedElement {
    terms: BTreeMap<Monomial, Rat>,
}

impl GradedElement {
    pub fn zero() -> Self {
        GradedElement::default()
    }

    /// A single-term element; zero coefficients give the zero element.
    pub fn singleton(m: Monomial, c: Rat) -> Self {
        let mut out = GradedElement::zero();
        out.insert(m, c);
        out
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    fn insert(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            let key = self
                .terms
                .iter()
                .find(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone());
            if let Some(key) = key {
                self.terms.remove(&key);
            }
        }
    }

    pub fn add(&self, other: &GradedElement) -> GradedElement {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &GradedElement) -> GradedElement {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert(m.clone(), -c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> GradedElement {
        if c.is_zero() {
            return GradedElement::zero();
        }
        GradedElement {
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v * c))
                .collect(),
        }
    }

    /// Splits into parity-homogeneous parts (even, odd).
    pub fn parity_parts(&self) -> (GradedElement, GradedElement) {
        let mut even = GradedElement::zero();
        let mut odd = GradedElement::zero();
        for (m, c) in &self.terms {
            if m.parity() == 0 {
                even.insert(m.clone(), c.clone());
            } else {
                odd.insert(m.clone(), c.clone());
            }
        }
        (even, odd)
    }
}

/// The algebra context: catalog, grading convention and truncation.
pub struct Algebra<'c> {
    pub catalog: &'c OrbitCatalog,
    pub grading: GradingConvention,
    pub truncation: Truncation,
}

impl<'c> Algebra<'c> {
    pub fn new(catalog: &'c OrbitCatalog, truncation: Truncation) -> Self {
        Algebra {
            catalog,
            grading: GradingConvention::default(),
            truncation,
        }
    }

    pub fn one(&self) -> GradedElement {
        self.scalar(Rat::one())
    }

    pub fn scalar(&self, c: Rat) -> GradedElement {
        let mut out = GradedElement::zero();
        out.insert(Monomial::unit(self.catalog.h2_rank), c);
        out
    }

    fn q_generator(&self, orbit: usize, mult: u32) -> Result<Generator> {
        let cz = self
            .catalog
            .cz_iterate(IteratedOrbit { orbit, multiplicity: mult })?;
        Ok(Generator {
            kind: GenKind::Q { orbit, mult },
            degree: self.grading.q_degree(cz, self.catalog.half_dim()),
        })
    }

    fn p_generator(&self, orbit: usize, mult: u32) -> Result<Generator> {
        let cz = self
            .catalog
            .cz_iterate(IteratedOrbit { orbit, multiplicity: mult })?;
        Ok(Generator {
            kind: GenKind::P { orbit, mult },
            degree: self.grading.p_degree(cz, self.catalog.half_dim()),
        })
    }

    fn t_generator(&self, form: usize) -> Result<Generator> {
        let f = self
            .catalog
            .forms
            .get(form)
            .ok_or_else(|| Error::Validation(format!("form index {form} out of range")))?;
        Ok(Generator {
            kind: GenKind::T { form },
            degree: self.grading.t_degree(f.degree),
        })
    }

    fn check_orbit_generator(&self, orbit: usize, mult: u32) -> Result<()> {
        let it = IteratedOrbit { orbit, multiplicity: mult };
        if self.catalog.is_bad(it)? {
            let name = &self.catalog.orbit(orbit)?.name;
            return Err(Error::Validation(format!(
                "no generators for the bad orbit {name}^{mult}"
            )));
        }
        let action = self.catalog.action_of(it)?;
        if action > self.truncation.max_action {
            return Err(Error::Validation(format!(
                "generator action exceeds the truncation bound"
            )));
        }
        Ok(())
    }

    fn from_generator(&self, g: Generator) -> GradedElement {
        let mut out = GradedElement::zero();
        out.insert(
            Monomial {
                factors: vec![(g, 1)],
                homology: vec![0; self.catalog.h2_rank],
            },
            Rat::one(),
        );
        out
    }

    /// The variable `q_{γ^k}`; exists for good iterates within the action
    /// truncation.
    pub fn q(&self, orbit: usize, mult: u32) -> Result<GradedElement> {
        self.check_orbit_generator(orbit, mult)?;
        Ok(self.from_generator(self.q_generator(orbit, mult)?))
    }

    /// The variable `p_{γ^k}`.
    pub fn p(&self, orbit: usize, mult: u32) -> Result<GradedElement> {
        self.check_orbit_generator(orbit, mult)?;
        Ok(self.from_generator(self.p_generator(orbit, mult)?))
    }

    /// The variable `tᵢ` attached to the `i`-th closed form.
    pub fn t(&self, form: usize) -> Result<GradedElement> {
        Ok(self.from_generator(self.t_generator(form)?))
    }

    /// The group-ring element `e^A`.
    pub fn exp_class(&self, class: &[i64]) -> Result<GradedElement> {
        if class.len() != self.catalog.h2_rank {
            return Err(Error::Validation(format!(
                "homology class has length {}, expected {}",
                class.len(),
                self.catalog.h2_rank
            )));
        }
        let mut out = GradedElement::zero();
        out.insert(
            Monomial {
                factors: Vec::new(),
                homology: class.to_vec(),
            },
            Rat::one(),
        );
        Ok(out)
    }

    fn admissible(&self, m: &Monomial) -> bool {
        m.word_length() <= self.truncation.max_word_len
            && m.t_degree() <= self.truncation.max_t_degree
    }

    /// Graded-commutative product with Koszul signs; terms leaving the
    /// truncation window are dropped.
    pub fn multiply(&self, f: &GradedElement, g: &GradedElement) -> GradedElement {
        let mut out = GradedElement::zero();
        for (mf, cf) in &f.terms {
            for (mg, cg) in &g.terms {
                if let Some((m, sign)) = mf.mul(mg) {
                    if self.admissible(&m) {
                        out.insert(m, cf * cg * rat_int(i64::from(sign)));
                    }
                }
            }
        }
        out
    }

    /// Poisson bracket pairing `p_{γ^k}` with `q_{γ^k}` with weight `κ = k`.
    ///
    /// With all-left derivatives and `ε_x` the common parity of a conjugate
    /// pair, the bracket of parity-homogeneous monomials is
    /// `Σ_x κ_x (−1)^{ε_x(ε_f+1)} [(∂f/∂p_x)(∂g/∂q_x)
    ///   − (−1)^{ε_x} (∂f/∂q_x)(∂g/∂p_x)]`.
    pub fn poisson_bracket(
        &self,
        f: &GradedElement,
        g: &GradedElement,
    ) -> Result<GradedElement> {
        let mut out = GradedElement::zero();
        for (mf, cf) in &f.terms {
            for (mg, cg) in &g.terms {
                self.bracket_monomials(mf, cf, mg, cg, &mut out)?;
            }
        }
        Ok(out)
    }

    fn bracket_monomials(
        &self,
        mf: &Monomial,
        cf: &Rat,
        mg: &Monomial,
        cg: &Rat,
        out: &mut GradedElement,
    ) -> Result<()> {
        // conjugate pairs appearing on both sides
        let mut keys: BTreeSet<(usize, u32)> = BTreeSet::new();
        for (gen, _) in mf.factors() {
            if let GenKind::Q { orbit, mult } | GenKind::P { orbit, mult } = gen.kind {
                if orbit >= self.catalog.orbits.len() {
                    return Err(Error::Validation(format!(
                        "generator refers to orbit {orbit} outside this catalog"
                    )));
                }
                keys.insert((orbit, mult));
            }
        }
        let mut shared = Vec::new();
        for (gen, _) in mg.factors() {
            if let GenKind::Q { orbit, mult } | GenKind::P { orbit, mult } = gen.kind {
                if orbit >= self.catalog.orbits.len() {
                    return Err(Error::Validation(format!(
                        "generator refers to orbit {orbit} outside this catalog"
                    )));
                }
                if keys.contains(&(orbit, mult)) {
                    shared.push((orbit, mult));
                }
            }
        }
        shared.sort_unstable();
        shared.dedup();

        let eps_f = mf.parity();
        let coeff = cf * cg;
        for (orbit, mult) in shared {
            let qg = self.q_generator(orbit, mult)?;
            let pg = self.p_generator(orbit, mult)?;
            let eps_x = pg.parity();
            debug_assert_eq!(eps_x, qg.parity());
            let kappa = rat_int(i64::from(mult));
            let outer = if eps_x == 1 && (eps_f + 1) % 2 == 1 {
                -Rat::one()
            } else {
                Rat::one()
            };

            // (d f / d p)(d g / d q)
            if let (Some((s1, e1, m1)), Some((s2, e2, m2))) =
                (mf.left_derivative(&pg), mg.left_derivative(&qg))
            {
                if let Some((m, s3)) = m1.mul(&m2) {
                    if self.admissible(&m) {
                        let c = &coeff
                            * &kappa
                            * &outer
                            * rat_int(i64::from(s1) * i64::from(s2) * i64::from(s3))
                            * rat_int(i64::from(e1) * i64::from(e2));
                        out.insert(m, c);
                    }
                }
            }
            // -(−1)^{ε_x} (d f / d q)(d g / d p)
            if let (Some((s1, e1, m1)), Some((s2, e2, m2))) =
                (mf.left_derivative(&qg), mg.left_derivative(&pg))
            {
                if let Some((m, s3)) = m1.mul(&m2) {
                    if self.admissible(&m) {
                        let inner = if eps_x == 1 { Rat::one() } else { -Rat::one() };
                        let c = &coeff
                            * &kappa
                            * &outer
                            * &inner
                            * rat_int(i64::from(s1) * i64::from(s2) * i64::from(s3))
                            * rat_int(i64::from(e1) * i64::from(e2));
                        out.insert(m, c);
                    }
                }
            }
        }
        Ok(())
    }

    /// The differential `d f = {h, f}` induced by a Hamiltonian element.
    pub fn differential(&self, h: &GradedElement, f: &GradedElement) -> Result<GradedElement> {
        self.poisson_bracket(h, f)
    }

    /// Degree of a monomial under the algebra's grading convention.
    pub fn grade(&self, m: &Monomial) -> i64 {
        m.degree()
    }

    /// Action filtration `𝓕 = Σ S(q-letters) − Σ S(p-letters) + ω(A)`;
    /// `𝓕(tᵢ) = 0`.
    pub fn action_filtration(&self, m: &Monomial) -> Result<Rat> {
        let mut total = self.catalog.omega_of(m.homology())?;
        for (gen, e) in m.factors() {
            match gen.kind {
                GenKind::Q { orbit, mult } => {
                    let s = self.catalog.action_of(IteratedOrbit { orbit, multiplicity: mult })?;
                    total += s * rat_int(i64::from(*e));
                }
                GenKind::P { orbit, mult } => {
                    let s = self.catalog.action_of(IteratedOrbit { orbit, multiplicity: mult })?;
                    total -= s * rat_int(i64::from(*e));
                }
                GenKind::T { .. } => {}
            }
        }
        Ok(total)
    }

    /// Renders a monomial like `q[g^2]·t[theta]·e[0,1]`.
    pub fn render_monomial(&self, m: &Monomial) -> String {
        let mut parts = Vec::new();
        for (gen, e) in m.factors() {
            let body = match gen.kind {
                GenKind::Q { orbit, mult } => {
                    let name = &self.catalog.orbits[orbit].name;
                    if mult == 1 {
                        format!("q[{name}]")
                    } else {
                        format!("q[{name}^{mult}]")
                    }
                }
                GenKind::P { orbit, mult } => {
                    let name = &self.catalog.orbits[orbit].name;
                    if mult == 1 {
                        format!("p[{name}]")
                    } else {
                        format!("p[{name}^{mult}]")
                    }
                }
                GenKind::T { form } => format!("t[{}]", self.catalog.forms[form].name),
            };
            if *e == 1 {
                parts.push(body);
            } else {
                parts.push(format!("{body}^{e}"));
            }
        }
        if m.homology().iter().any(|&a| a != 0) {
            let class = m
                .homology()
                .iter()
                .map(|a| a.to_string())
                .collect::<Vec<_>>()
                .join(",");
            parts.push(format!("e[{class}]"));
        }
        if parts.is_empty() {
            "1".to_string()
        } else {
            parts.join("·")
        }
    }

    /// Renders an element with stable term ordering, e.g.
    /// `3/2·q[g^2]·t[theta] + 2·q[g]`.
    pub fn render(&self, f: &GradedElement) -> String {
        if f.is_zero() {
            return "0".to_string();
        }
        f.terms
            .iter()
            .map(|(m, c)| {
                let coeff = crate::rat::rat_to_string(c);
                let mono = self.render_monomial(m);
                if mono == "1" {
                    coeff
                } else if coeff == "1" {
                    mono
                } else if coeff == "-1" {
                    format!("-{mono}")
                } else {
                    format!("{coeff}·{mono}")
                }
            })
            .collect::<Vec<_>>()
            .join(" + ")
    }
}
