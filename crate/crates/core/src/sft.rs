//! The zero-energy sector of the field theory: the Hamiltonian counting
//! cylinders with one marked point, the contact-homology differential it
//! induces, and the action filtration.
//!
//! Every true branched cover contributes zero; the only surviving terms are
//! `m·∫_γ θᵢ · p_{γ^m} q_{γ^m} tᵢ` over degree-one forms.  The differential
//! on the `q`-algebra is obtained from the bracket against the Hamiltonian,
//! normalized per generator by the cover multiplicity `κ`, which matches
//! coefficient extraction at one positive puncture.  The sum over iterates
//! is truncated by the action bound; contributions beyond it are outside
//! the window by construction.

use std::collections::BTreeMap;

use num::Zero;
use serde::Serialize;

use crate::algebra::{Algebra, GenKind, Generator, GradedElement, Monomial};
use crate::catalog::IteratedOrbit;
use crate::rat::{rat_int, Rat};
use crate::Result;

/// Where a Hamiltonian monomial comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TermSource {
    /// Trivial cylinder with one marked point paired with a degree-one form.
    CylinderMarkedPoint,
    /// A true branched-cover profile; its count vanishes, so the monomial
    /// never acquires a coefficient.
    VanishingBranchedCover,
}

/// The zero-energy Hamiltonian with provenance for every candidate monomial.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    pub element: GradedElement,
    pub provenance: BTreeMap<Monomial, TermSource>,
}

/// Assembles `h₀ = Σ_γ Σ_{deg θᵢ = 1} Σ_m m·∫_γθᵢ · p_{γ^m} q_{γ^m} tᵢ`
/// over good iterates within the action truncation.
pub fn hamiltonian_h0(alg: &Algebra<'_>) -> Result<Hamiltonian> {
    let catalog = alg.catalog;
    let mut element = GradedElement::zero();
    let mut provenance = BTreeMap::new();

    let one_forms: Vec<usize> = (0..catalog.forms.len())
        .filter(|&i| catalog.forms[i].degree == 1)
        .collect();

    for orbit in 0..catalog.orbits.len() {
        for mult in good_iterates_within(alg, orbit)? {
            let it = IteratedOrbit { orbit, multiplicity: mult };
            // terms are ordered q p t; this fixes the sign convention so
            // that every generator has differential eigenvalue +m∫ in the
            // t-first normal form, uniformly across parities
            let pq = alg.multiply(&alg.q(orbit, mult)?, &alg.p(orbit, mult)?);
            for &form in &one_forms {
                let integral = catalog.form_integral(it, &catalog.forms[form])?;
                if integral.is_zero() {
                    continue;
                }
                let term = alg.multiply(&pq, &alg.t(form)?).scale(&integral);
                for (m, _) in term.terms() {
                    provenance.insert(m.clone(), TermSource::CylinderMarkedPoint);
                }
                element = element.add(&term);
            }
        }
    }

    // record the vanishing branched-cover monomials within the window
    for orbit in 0..catalog.orbits.len() {
        let iterates = good_iterates_within(alg, orbit)?;
        let max_mult = iterates.iter().copied().max().unwrap_or(0);
        if max_mult == 0 {
            continue;
        }
        let window = alg.truncation.max_word_len as usize;
        for profile in crate::moduli::balanced_profiles(window, max_mult) {
            if profile.punctures() < 3 {
                continue;
            }
            if let Some(monomial) = profile_monomial(alg, orbit, &profile, &iterates)? {
                provenance
                    .entry(monomial)
                    .or_insert(TermSource::VanishingBranchedCover);
            }
        }
    }

    Ok(Hamiltonian { element, provenance })
}

/// Good iterates of one orbit with action within the truncation bound.
fn good_iterates_within(alg: &Algebra<'_>, orbit: usize) -> Result<Vec<u32>> {
    let catalog = alg.catalog;
    let mut out = Vec::new();
    let mut mult = 1u32;
    loop {
        let it = IteratedOrbit { orbit, multiplicity: mult };
        if catalog.action_of(it)? > alg.truncation.max_action {
            break;
        }
        if !catalog.is_bad(it)? {
            out.push(mult);
        }
        mult += 1;
    }
    Ok(out)
}

/// The monomial `p^{Γ⁺} q^{Γ⁻}` of a branched-cover profile, if all its
/// iterates are good generators and no odd generator repeats.
fn profile_monomial(
    alg: &Algebra<'_>,
    orbit: usize,
    profile: &crate::moduli::MultiplicityProfile,
    good: &[u32],
) -> Result<Option<Monomial>> {
    if profile
        .positives()
        .iter()
        .chain(profile.negatives())
        .any(|m| !good.contains(m))
    {
        return Ok(None);
    }
    let mut acc = alg.one();
    for &m in profile.positives() {
        acc = alg.multiply(&acc, &alg.p(orbit, m)?);
    }
    for &m in profile.negatives() {
        acc = alg.multiply(&acc, &alg.q(orbit, m)?);
    }
    let monomial = acc.terms().next().map(|(m, _)| m.clone());
    Ok(monomial)
}

/// The action-filtered contact-homology complex: a monomial basis in the
/// good `q`-variables tensored with the `t`-polynomial ground ring, the
/// differential on it, and the discrete set of filtration levels.
#[derive(Debug, Clone)]
pub struct FilteredComplex {
    pub basis: Vec<Monomial>,
    pub differential: BTreeMap<Monomial, GradedElement>,
    pub filtration_levels: Vec<Rat>,
    pub filtration_of: BTreeMap<Monomial, Rat>,
    /// The `q`-generators of the algebra within the truncation.
    pub generators: Vec<(usize, u32)>,
}

/// How the differential moves one basis monomial along the filtration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FiltrationClass {
    /// Every target term has strictly smaller filtration (vacuously true
    /// for monomials the differential kills).
    StrictlyDecreasing,
    /// Every target term has equal or smaller filtration, some equal.
    Preserving,
    /// Some target term raises the filtration: an implementation bug.
    Violating,
}

/// Differential on a single `q`-generator: the κ-normalized bracket of the
/// generator's Hamiltonian terms, `∂₀ q_{γ^m} = ± Σᵢ m·∫_γθᵢ · tᵢ q_{γ^m}`.
fn generator_differential(
    alg: &Algebra<'_>,
    h0: &Hamiltonian,
    orbit: usize,
    mult: u32,
) -> Result<GradedElement> {
    // h₀ terms carrying exactly this generator pair
    let mut h_part = GradedElement::zero();
    for (m, c) in h0.element.terms() {
        let has_pair = m.factors().iter().any(|(g, _)| {
            matches!(g.kind, GenKind::P { orbit: o, mult: k } if o == orbit && k == mult)
        });
        if has_pair {
            h_part = h_part.add(&GradedElement::singleton(m.clone(), c.clone()));
        }
    }
    if h_part.is_zero() {
        return Ok(GradedElement::zero());
    }
    let q = alg.q(orbit, mult)?;
    let bracket = alg.poisson_bracket(&h_part, &q)?;
    Ok(bracket.scale(&Rat::new(1.into(), i64::from(mult).into())))
}

/// Extends the generator differential to monomials by the odd Leibniz rule
/// `∂(xy) = (∂x)y + (−1)^{|x|} x(∂y)`.
pub fn apply_differential(
    alg: &Algebra<'_>,
    gen_diff: &BTreeMap<(usize, u32), GradedElement>,
    f: &GradedElement,
) -> GradedElement {
    let mut out = GradedElement::zero();
    for (m, c) in f.terms() {
        out = out.add(&diff_monomial(alg, gen_diff, m).scale(c));
    }
    out
}

fn diff_monomial(
    alg: &Algebra<'_>,
    gen_diff: &BTreeMap<(usize, u32), GradedElement>,
    m: &Monomial,
) -> GradedElement {
    let factors = m.factors();
    if factors.is_empty() {
        return GradedElement::zero();
    }
    // split off the first power g^e and recurse on the rest
    let (g, e) = factors[0];
    let rest = Monomial::from_parts(factors[1..].to_vec(), m.homology().to_vec());
    let head = Monomial::from_parts(vec![(g, e)], vec![0; m.homology().len()]);

    let d_head = match g.kind {
        GenKind::Q { orbit, mult } => {
            let dq = gen_diff
                .get(&(orbit, mult))
                .cloned()
                .unwrap_or_else(GradedElement::zero);
            // d(g^e) = e g^{e-1} dg
            let lowered = Monomial::from_parts(
                if e > 1 { vec![(g, e - 1)] } else { vec![] },
                vec![0; m.homology().len()],
            );
            alg.multiply(
                &GradedElement::singleton(lowered, rat_int(i64::from(e))),
                &dq,
            )
        }
        _ => GradedElement::zero(),
    };

    let rest_elem = GradedElement::singleton(rest.clone(), Rat::from_integer(1.into()));
    let mut out = alg.multiply(&d_head, &rest_elem);
    // (−1)^{|g^e|} g^e d(rest)
    let d_rest = diff_monomial(alg, gen_diff, &rest);
    if !d_rest.is_zero() {
        let head_elem = GradedElement::singleton(head.clone(), Rat::from_integer(1.into()));
        let sign = if (u32::from(g.parity()) * e) % 2 == 1 {
            -Rat::from_integer(1.into())
        } else {
            Rat::from_integer(1.into())
        };
        out = out.add(&alg.multiply(&head_elem, &d_rest).scale(&sign));
    }
    out
}

/// Assembles the filtered complex: basis, differential and filtration data.
pub fn ch_differential(alg: &Algebra<'_>) -> Result<FilteredComplex> {
    let h0 = hamiltonian_h0(alg)?;

    let mut generators: Vec<(usize, u32)> = Vec::new();
    for orbit in 0..alg.catalog.orbits.len() {
        for mult in good_iterates_within(alg, orbit)? {
            generators.push((orbit, mult));
        }
    }

    let mut gen_diff: BTreeMap<(usize, u32), GradedElement> = BTreeMap::new();
    for &(orbit, mult) in &generators {
        gen_diff.insert(
            (orbit, mult),
            generator_differential(alg, &h0, orbit, mult)?,
        );
    }

    let basis = monomial_basis(alg, &generators)?;
    let mut differential = BTreeMap::new();
    let mut filtration_of = BTreeMap::new();
    let mut levels: Vec<Rat> = Vec::new();
    for m in &basis {
        let d = diff_monomial(alg, &gen_diff, m);
        let f = alg.action_filtration(m)?;
        if !levels.contains(&f) {
            levels.push(f.clone());
        }
        filtration_of.insert(m.clone(), f);
        differential.insert(m.clone(), d);
    }
    levels.sort();

    Ok(FilteredComplex {
        basis,
        differential,
        filtration_levels: levels,
        filtration_of,
        generators,
    })
}

/// All monomials in the `q`-generators and `t`-variables within the
/// truncation, in canonical order.
fn monomial_basis(alg: &Algebra<'_>, generators: &[(usize, u32)]) -> Result<Vec<Monomial>> {
    let mut q_gens = Vec::new();
    for &(orbit, mult) in generators {
        let q = alg.q(orbit, mult)?;
        let (m, _) = q.terms().next().expect("generator element is a monomial");
        q_gens.push(m.factors()[0].0);
    }
    let mut t_gens = Vec::new();
    for form in 0..alg.catalog.forms.len() {
        let t = alg.t(form)?;
        let (m, _) = t.terms().next().expect("generator element is a monomial");
        t_gens.push(m.factors()[0].0);
    }

    let h2 = alg.catalog.h2_rank;
    let mut words: Vec<Vec<(Generator, u32)>> = vec![Vec::new()];
    extend_powers(
        &q_gens,
        alg.truncation.max_word_len,
        &mut words,
    );
    let mut out = Vec::new();
    let mut t_words: Vec<Vec<(Generator, u32)>> = vec![Vec::new()];
    extend_powers(&t_gens, alg.truncation.max_t_degree, &mut t_words);
    for qw in &words {
        for tw in &t_words {
            let mut factors = qw.clone();
            factors.extend(tw.iter().cloned());
            factors.sort_by(|a, b| a.0.cmp(&b.0));
            out.push(Monomial::from_parts(factors, vec![0; h2]));
        }
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// Expands a generator list into all power products of total exponent at
/// most `budget`, respecting odd-square vanishing.
fn extend_powers(gens: &[Generator], budget: u32, acc: &mut Vec<Vec<(Generator, u32)>>) {
    for &g in gens {
        let mut new_words = Vec::new();
        for word in acc.iter() {
            let used: u32 = word.iter().map(|(_, e)| e).sum();
            let cap = if g.parity() == 1 { 1 } else { budget - used.min(budget) };
            let mut e = 1u32;
            while e <= cap && used + e <= budget {
                let mut next = word.clone();
                next.push((g, e));
                new_words.push(next);
                e += 1;
            }
        }
        acc.extend(new_words);
    }
}

/// Classifies each basis monomial by how the differential moves it along
/// the filtration.
pub fn filtration_behavior(
    alg: &Algebra<'_>,
    complex: &FilteredComplex,
) -> Result<BTreeMap<Monomial, FiltrationClass>> {
    let mut out = BTreeMap::new();
    for m in &complex.basis {
        let level = &complex.filtration_of[m];
        let image = &complex.differential[m];
        let mut class = FiltrationClass::StrictlyDecreasing;
        for (target, _) in image.terms() {
            let target_level = alg.action_filtration(target)?;
            if &target_level > level {
                class = FiltrationClass::Violating;
                break;
            }
            if &target_level == level {
                class = FiltrationClass::Preserving;
            }
        }
        out.insert(m.clone(), class);
    }
    Ok(out)
}
