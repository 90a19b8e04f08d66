//! Spectral sequence of the action-filtered contact-homology complex.
//!
//! Only the first two pages carry content here: the differential counts
//! zero-energy curves only, so everything at or beyond the second page
//! degenerates.  E¹ is the associated graded of the monomial basis by
//! filtration level with `d¹` the level-preserving differential; E² is its
//! homology, computed blockwise by exact rational elimination and checked
//! degree-by-degree against the free algebra on the `q`-generators killed
//! by no chosen one-form.

use std::collections::BTreeMap;

use num::Zero;

use crate::algebra::{Algebra, GradedElement, Monomial};
use crate::rat::Rat;
use crate::sft::FilteredComplex;
use crate::{Error, Result};

/// One (filtration level, degree) block of a page.
#[derive(Debug, Clone)]
pub struct PageBlock {
    pub level_index: usize,
    pub degree: i64,
    pub dimension: usize,
    /// Representative combinations spanning the block.
    pub basis: Vec<GradedElement>,
    /// `d¹` of each basis element; zero on the second page.
    pub differential: Vec<GradedElement>,
}

/// A page of the spectral sequence, indexed by filtration level and degree.
#[derive(Debug, Clone)]
pub struct SpectralPage {
    pub page_index: u8,
    pub blocks: BTreeMap<(usize, i64), PageBlock>,
}

impl SpectralPage {
    pub fn dimension(&self, level_index: usize, degree: i64) -> usize {
        self.blocks
            .get(&(level_index, degree))
            .map(|b| b.dimension)
            .unwrap_or(0)
    }

    pub fn total_dimension(&self) -> usize {
        self.blocks.values().map(|b| b.dimension).sum()
    }
}

fn level_index(complex: &FilteredComplex, value: &Rat) -> Result<usize> {
    complex
        .filtration_levels
        .binary_search(value)
        .map_err(|_| Error::Invariant(format!("filtration value {value} missing from the level set")))
}

/// Groups the monomial basis into (level, degree) blocks.
fn block_basis(
    alg: &Algebra<'_>,
    complex: &FilteredComplex,
) -> Result<BTreeMap<(usize, i64), Vec<Monomial>>> {
    let mut blocks: BTreeMap<(usize, i64), Vec<Monomial>> = BTreeMap::new();
    for m in &complex.basis {
        let level = level_index(complex, &complex.filtration_of[m])?;
        let degree = alg.grade(m);
        blocks.entry((level, degree)).or_default().push(m.clone());
    }
    Ok(blocks)
}

/// E¹: the associated graded monomial basis with the level-preserving
/// differential `d¹ : (k, ℓ) → (k, ℓ−1)`.
pub fn e1_page(alg: &Algebra<'_>, complex: &FilteredComplex) -> Result<SpectralPage> {
    let blocks = block_basis(alg, complex)?;
    let mut out = BTreeMap::new();
    for ((level, degree), monomials) in blocks {
        let mut basis = Vec::new();
        let mut differential = Vec::new();
        for m in &monomials {
            let image = &complex.differential[m];
            for (target, _) in image.terms() {
                let target_level = level_index(complex, &alg.action_filtration(target)?)?;
                if target_level != level || alg.grade(target) != degree - 1 {
                    return Err(Error::Invariant(format!(
                        "differential does not preserve the level of {}",
                        alg.render_monomial(m)
                    )));
                }
            }
            basis.push(GradedElement::singleton(m.clone(), num::One::one()));
            differential.push(image.clone());
        }
        out.insert(
            (level, degree),
            PageBlock {
                level_index: level,
                degree,
                dimension: monomials.len(),
                basis,
                differential,
            },
        );
    }
    Ok(SpectralPage {
        page_index: 1,
        blocks: out,
    })
}

/// Coordinates of an element in a monomial basis; errors if a term falls
/// outside the basis.
fn coordinates(f: &GradedElement, basis: &[Monomial]) -> Result<Vec<Rat>> {
    let mut coords = vec![Rat::zero(); basis.len()];
    for (m, c) in f.terms() {
        let idx = basis
            .binary_search(m)
            .map_err(|_| Error::Invariant("differential image leaves the block basis".into()))?;
        coords[idx] = c.clone();
    }
    Ok(coords)
}

/// In-place Gauss-Jordan elimination over the rationals; returns the rank.
/// Deterministic: first nonzero pivot in column order.
fn row_reduce(rows: &mut Vec<Vec<Rat>>) -> usize {
    let cols = rows.first().map(Vec::len).unwrap_or(0);
    let mut rank = 0;
    for col in 0..cols {
        let pivot = (rank..rows.len()).find(|&r| !rows[r][col].is_zero());
        let Some(pivot) = pivot else { continue };
        rows.swap(rank, pivot);
        let inv = rows[rank][col].clone();
        for x in rows[rank].iter_mut() {
            *x /= inv.clone();
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in 0..cols {
                    let delta = &rows[rank][c] * &factor;
                    rows[r][c] -= delta;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.retain(|r| r.iter().any(|x| !x.is_zero()));
    rank
}

/// Reduces `v` against reduced rows, returning the residue.
fn reduce_against(v: &mut Vec<Rat>, reduced: &[Vec<Rat>]) {
    for row in reduced {
        let Some(pivot_col) = row.iter().position(|x| !x.is_zero()) else {
            continue;
        };
        if !v[pivot_col].is_zero() {
            let factor = v[pivot_col].clone();
            for (x, r) in v.iter_mut().zip(row) {
                *x -= r * &factor;
            }
        }
    }
}

/// Kernel basis of the linear map with the given columns (images of the
/// source basis vectors), as coordinate vectors in the source.
fn kernel_basis(columns: &[Vec<Rat>], target_dim: usize) -> Vec<Vec<Rat>> {
    let source_dim = columns.len();
    // augmented transpose: rows are [column | identity]
    let mut rows: Vec<Vec<Rat>> = (0..source_dim)
        .map(|j| {
            let mut row = Vec::with_capacity(target_dim + source_dim);
            row.extend(columns[j].iter().cloned());
            for k in 0..source_dim {
                row.push(if k == j { num::One::one() } else { Rat::zero() });
            }
            row
        })
        .collect();
    // eliminate on the first target_dim columns only
    let mut rank = 0;
    for col in 0..target_dim {
        let pivot = (rank..rows.len()).find(|&r| !rows[r][col].is_zero());
        let Some(pivot) = pivot else { continue };
        rows.swap(rank, pivot);
        let inv = rows[rank][col].clone();
        for x in rows[rank].iter_mut() {
            *x /= inv.clone();
        }
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                let pivot_row = rows[rank].clone();
                for (x, p) in rows[r].iter_mut().zip(&pivot_row) {
                    *x -= p * &factor;
                }
            }
        }
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows[rank..]
        .iter()
        .map(|row| row[target_dim..].to_vec())
        .collect()
}

/// E²: homology of (E¹, d¹), computed per block and cross-checked against
/// the free algebra on the `q`-generators with all one-form integrals zero.
pub fn e2_page(alg: &Algebra<'_>, complex: &FilteredComplex) -> Result<SpectralPage> {
    let blocks = block_basis(alg, complex)?;
    let mut out = BTreeMap::new();

    for ((level, degree), monomials) in &blocks {
        let empty = Vec::new();
        let above = blocks.get(&(*level, degree + 1)).unwrap_or(&empty);
        let below = blocks.get(&(*level, degree - 1)).unwrap_or(&empty);

        // outgoing map d1 : block -> below
        let mut out_columns = Vec::with_capacity(monomials.len());
        for m in monomials {
            out_columns.push(coordinates(&complex.differential[m], below)?);
        }
        let kernel = kernel_basis(&out_columns, below.len());

        // incoming image: d1 of the block above, in block coordinates
        let mut image_rows = Vec::new();
        for m in above {
            let coords = coordinates(&complex.differential[m], monomials)?;
            if coords.iter().any(|c| !c.is_zero()) {
                image_rows.push(coords);
            }
        }
        let image_rank = row_reduce(&mut image_rows);

        // representatives: kernel vectors reduced modulo the image
        let mut reps_coords: Vec<Vec<Rat>> = Vec::new();
        let mut span = image_rows.clone();
        for k in &kernel {
            let mut v = k.clone();
            reduce_against(&mut v, &span);
            if v.iter().any(|c| !c.is_zero()) {
                reps_coords.push(v.clone());
                span.push(v);
                row_reduce(&mut span);
            }
        }
        let dimension = kernel.len() - image_rank;
        if reps_coords.len() != dimension {
            return Err(Error::Invariant(format!(
                "homology dimension mismatch in block ({level}, {degree}): {} representatives for dimension {dimension}",
                reps_coords.len()
            )));
        }

        let basis: Vec<GradedElement> = reps_coords
            .iter()
            .map(|v| {
                let mut f = GradedElement::zero();
                for (c, m) in v.iter().zip(monomials) {
                    if !c.is_zero() {
                        f = f.add(&GradedElement::singleton(m.clone(), c.clone()));
                    }
                }
                f
            })
            .collect();
        let differential = vec![GradedElement::zero(); basis.len()];
        out.insert(
            (*level, *degree),
            PageBlock {
                level_index: *level,
                degree: *degree,
                dimension,
                basis,
                differential,
            },
        );
    }

    let page = SpectralPage {
        page_index: 2,
        blocks: out,
    };
    check_against_survivor_algebra(alg, complex, &page)?;
    Ok(page)
}

/// `q`-generators annihilated by every chosen one-form: integrals of the
/// underlying simple orbit against every degree-one form vanish.
pub fn surviving_generators(alg: &Algebra<'_>) -> Result<Vec<(usize, u32)>> {
    let catalog = alg.catalog;
    let mut survivors = Vec::new();
    for orbit in 0..catalog.orbits.len() {
        let mut mult = 1u32;
        loop {
            let it = crate::catalog::IteratedOrbit { orbit, multiplicity: mult };
            if catalog.action_of(it)? > alg.truncation.max_action {
                break;
            }
            if !catalog.is_bad(it)? {
                let mut killed = false;
                for form in &catalog.forms {
                    if form.degree == 1 && !catalog.form_integral(it, form)?.is_zero() {
                        killed = true;
                        break;
                    }
                }
                if !killed {
                    survivors.push((orbit, mult));
                }
            }
            mult += 1;
        }
    }
    Ok(survivors)
}

/// The predicted second page: the free graded-commutative algebra on the
/// surviving generators over the `t`-polynomial ground ring, compared
/// block-by-block as exact dimensions.
fn check_against_survivor_algebra(
    alg: &Algebra<'_>,
    complex: &FilteredComplex,
    page: &SpectralPage,
) -> Result<()> {
    let survivors = surviving_generators(alg)?;
    let survivor_set: std::collections::BTreeSet<(usize, u32)> = survivors.into_iter().collect();

    // predicted block dimensions: basis monomials built only from survivors
    let mut predicted: BTreeMap<(usize, i64), usize> = BTreeMap::new();
    for m in &complex.basis {
        let all_survive = m.factors().iter().all(|(g, _)| match g.kind {
            crate::algebra::GenKind::Q { orbit, mult } => survivor_set.contains(&(orbit, mult)),
            crate::algebra::GenKind::T { .. } => true,
            crate::algebra::GenKind::P { .. } => false,
        });
        if all_survive {
            let level = level_index(complex, &complex.filtration_of[m])?;
            *predicted.entry((level, alg.grade(m))).or_insert(0) += 1;
        }
    }

    for (key, block) in &page.blocks {
        let expected = predicted.get(key).copied().unwrap_or(0);
        if block.dimension != expected {
            return Err(Error::Invariant(format!(
                "block ({}, {}) has homology dimension {}, predicted free-algebra dimension {}",
                key.0, key.1, block.dimension, expected
            )));
        }
    }
    for (key, expected) in &predicted {
        if *expected > 0 && !page.blocks.contains_key(key) {
            return Err(Error::Invariant(format!(
                "predicted block ({}, {}) of dimension {expected} missing from the page",
                key.0, key.1
            )));
        }
    }
    Ok(())
}

/// True when no `q`-generator in the truncation window survives every
/// one-form, so the second page is the ground ring alone.
pub fn vanishing_check(alg: &Algebra<'_>) -> Result<bool> {
    Ok(surviving_generators(alg)?.is_empty())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Truncation;
    use crate::catalog::{ClosedForm, CzModel, OrbitCatalog, RatEntry, SimpleOrbit};
    use crate::rat::{rat_frac, rat_int};
    use crate::sft::ch_differential;

    fn two_orbit_catalog() -> OrbitCatalog {
        // g is killed by the form, d survives; both all-good
        let catalog = OrbitCatalog {
            dim_v: 3,
            h2_rank: 0,
            omega_pairing: vec![],
            orbits: vec![
                SimpleOrbit {
                    name: "g".into(),
                    cz_index: 2,
                    period: rat_int(1),
                    action: rat_int(1),
                    h1_class: vec![],
                    cz_model: CzModel::Hyperbolic,
                },
                SimpleOrbit {
                    name: "d".into(),
                    cz_index: 1,
                    period: rat_int(1),
                    action: rat_int(1),
                    h1_class: vec![],
                    cz_model: CzModel::Elliptic { rotation: rat_frac(3, 10) },
                },
            ],
            forms: vec![ClosedForm {
                name: "th".into(),
                degree: 1,
                integrals: [
                    ("g".to_string(), RatEntry(rat_int(1))),
                    ("d".to_string(), RatEntry(rat_int(0))),
                ]
                .into(),
            }],
        };
        catalog.validate().unwrap();
        catalog
    }

    #[test]
    fn e1_equals_full_basis_with_zero_differential_for_no_forms() {
        let mut catalog = two_orbit_catalog();
        catalog.forms.clear();
        let alg = Algebra::new(&catalog, Truncation::new(rat_int(2), 2, 1));
        let complex = ch_differential(&alg).unwrap();
        let e1 = e1_page(&alg, &complex).unwrap();
        assert_eq!(e1.total_dimension(), complex.basis.len());
        for block in e1.blocks.values() {
            for d in &block.differential {
                assert!(d.is_zero());
            }
        }
        // and E2 = E1 dimension-wise
        let e2 = e2_page(&alg, &complex).unwrap();
        assert_eq!(e2.total_dimension(), e1.total_dimension());
    }

    #[test]
    fn e1_differential_is_nonzero_with_a_form() {
        let catalog = two_orbit_catalog();
        let alg = Algebra::new(&catalog, Truncation::new(rat_int(3), 3, 2));
        let complex = ch_differential(&alg).unwrap();
        let e1 = e1_page(&alg, &complex).unwrap();
        let nonzero = e1
            .blocks
            .values()
            .flat_map(|b| b.differential.iter())
            .filter(|d| !d.is_zero())
            .count();
        assert!(nonzero > 0);
    }

    #[test]
    fn e2_survivors_are_the_killed_free_algebra() {
        let catalog = two_orbit_catalog();
        let alg = Algebra::new(&catalog, Truncation::new(rat_int(3), 3, 2));
        let survivors = surviving_generators(&alg).unwrap();
        // only d-iterates survive: (1,1), (1,2), (1,3)
        assert_eq!(survivors, vec![(1, 1), (1, 2), (1, 3)]);
        let complex = ch_differential(&alg).unwrap();
        let e2 = e2_page(&alg, &complex).unwrap();
        assert!(e2.total_dimension() > 0);
        // ground ring survives: the empty monomial block
        let empty_level = complex
            .filtration_levels
            .binary_search(&rat_int(0))
            .unwrap();
        assert!(e2.dimension(empty_level, 0) >= 1);
    }

    #[test]
    fn e2_is_idempotent_under_recomputation() {
        let catalog = two_orbit_catalog();
        let alg = Algebra::new(&catalog, Truncation::new(rat_int(3), 3, 2));
        let complex = ch_differential(&alg).unwrap();
        let a = e2_page(&alg, &complex).unwrap();
        let b = e2_page(&alg, &complex).unwrap();
        let dims_a: Vec<_> = a.blocks.iter().map(|(k, v)| (*k, v.dimension)).collect();
        let dims_b: Vec<_> = b.blocks.iter().map(|(k, v)| (*k, v.dimension)).collect();
        assert_eq!(dims_a, dims_b);
        for (ka, kb) in a.blocks.iter().zip(b.blocks.iter()) {
            assert_eq!(ka.1.basis.len(), kb.1.basis.len());
            for (ba, bb) in ka.1.basis.iter().zip(&kb.1.basis) {
                assert_eq!(ba, bb);
            }
        }
    }

    #[test]
    fn mapping_torus_catalog_vanishes() {
        // every orbit pairs nontrivially with the length form
        let catalog = OrbitCatalog {
            dim_v: 3,
            h2_rank: 0,
            omega_pairing: vec![],
            orbits: vec![
                SimpleOrbit {
                    name: "a".into(),
                    cz_index: 2,
                    period: rat_int(1),
                    action: rat_int(1),
                    h1_class: vec![],
                    cz_model: CzModel::Hyperbolic,
                },
                SimpleOrbit {
                    name: "b".into(),
                    cz_index: 1,
                    period: rat_int(2),
                    action: rat_int(2),
                    h1_class: vec![],
                    cz_model: CzModel::Elliptic { rotation: rat_frac(1, 5) },
                },
            ],
            forms: vec![ClosedForm {
                name: "dt".into(),
                degree: 1,
                integrals: [
                    ("a".to_string(), RatEntry(rat_int(1))),
                    ("b".to_string(), RatEntry(rat_int(2))),
                ]
                .into(),
            }],
        };
        catalog.validate().unwrap();
        let alg = Algebra::new(&catalog, Truncation::new(rat_int(4), 3, 2));
        assert!(vanishing_check(&alg).unwrap());
        // E2 = ground ring: every block consists of t-monomials only
        let complex = ch_differential(&alg).unwrap();
        let e2 = e2_page(&alg, &complex).unwrap();
        for block in e2.blocks.values() {
            for rep in &block.basis {
                for (m, _) in rep.terms() {
                    assert_eq!(m.word_length(), 0, "a q-generator survived");
                }
            }
        }
    }

    #[test]
    fn null_homologous_orbit_blocks_vanishing() {
        let catalog = two_orbit_catalog();
        let alg = Algebra::new(&catalog, Truncation::new(rat_int(3), 3, 2));
        assert!(!vanishing_check(&alg).unwrap());

        let mut bare = two_orbit_catalog();
        bare.forms.clear();
        let alg = Algebra::new(&bare, Truncation::new(rat_int(3), 3, 2));
        assert!(!vanishing_check(&alg).unwrap());
    }

    #[test]
    fn row_reduce_and_kernel_are_exact() {
        // kernel of [1 2 3; 2 4 6] is two-dimensional
        let columns = vec![
            vec![rat_int(1), rat_int(2)],
            vec![rat_int(2), rat_int(4)],
            vec![rat_int(3), rat_int(6)],
        ];
        let kernel = kernel_basis(&columns, 2);
        assert_eq!(kernel.len(), 2);
        // each kernel vector maps to zero
        for v in &kernel {
            for row in 0..2 {
                let mut acc = Rat::zero();
                for (j, c) in v.iter().enumerate() {
                    acc += &columns[j][row] * c;
                }
                assert!(acc.is_zero());
            }
        }
        let mut rows = vec![
            vec![rat_int(1), rat_int(2), rat_int(3)],
            vec![rat_int(2), rat_int(4), rat_int(6)],
            vec![rat_int(0), rat_int(1), rat_int(1)],
        ];
        assert_eq!(row_reduce(&mut rows), 2);
    }
}
