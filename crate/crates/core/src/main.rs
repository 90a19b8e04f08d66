//! Command-line interface: index arithmetic, stratum listings, Euler
//! certificates, the Hamiltonian, the second page and numeric cover checks.
//!
//! Exit codes: 0 success, 1 validation failure, 2 invariant violation,
//! 64 usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num::complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use orbitcover::algebra::{Algebra, Truncation};
use orbitcover::catalog::OrbitCatalog;
use orbitcover::covers::{neck_shift_check, random_balanced_cover};
use orbitcover::euler::{euler_number, verify_certificate};
use orbitcover::io::{load_catalog, truncation_from_env};
use orbitcover::moduli::{cylinder_point_count, ModuliSummary, MultiplicityProfile};
use orbitcover::rat::{parse_rat, rat_to_string};
use orbitcover::sft::{ch_differential, filtration_behavior, hamiltonian_h0, FiltrationClass};
use orbitcover::spectral::{e2_page, surviving_generators, vanishing_check};
use orbitcover::strata::enumerate_codim1;
use orbitcover::{Error, Result};

#[derive(Parser)]
#[command(name = "orbitcover", version, about = "Branched covers of orbit cylinders: index arithmetic, strata, Euler certificates and the filtered contact-homology complex")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CatalogArg {
    /// Path to the catalog JSON file
    #[arg(long)]
    catalog: PathBuf,
}

#[derive(Args)]
struct ProfileArgs {
    /// Multiplicity profile, e.g. "2;1,1"
    #[arg(long)]
    profile: String,
    /// Simple orbit name; defaults to the first orbit of the catalog
    #[arg(long)]
    orbit: Option<String>,
}

#[derive(Args)]
struct TruncationArgs {
    /// Action bound T; overrides SFT_TRUNCATION_DEFAULTS
    #[arg(long)]
    max_period: Option<String>,
    /// Word-length bound W
    #[arg(long)]
    max_word_len: Option<u32>,
    /// t-degree bound K
    #[arg(long)]
    max_t_degree: Option<u32>,
}

impl TruncationArgs {
    fn resolve(&self) -> Result<Truncation> {
        let mut truncation = truncation_from_env()?;
        if let Some(t) = &self.max_period {
            truncation.max_action = parse_rat(t)?;
        }
        if let Some(w) = self.max_word_len {
            truncation.max_word_len = w;
        }
        if let Some(k) = self.max_t_degree {
            truncation.max_t_degree = k;
        }
        Ok(truncation)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fredholm index, dimension, cokernel rank and regularity of a profile
    Index {
        #[command(flatten)]
        catalog: CatalogArg,
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Enumerate the codimension-one boundary strata of a profile
    Strata {
        #[command(flatten)]
        catalog: CatalogArg,
        #[command(flatten)]
        profile: ProfileArgs,
    },
    /// Euler number of the obstruction bundle with a verifiable certificate
    Euler {
        #[command(flatten)]
        catalog: CatalogArg,
        #[command(flatten)]
        profile: ProfileArgs,
        /// Certificate output path; derived from the profile when absent
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the zero-energy Hamiltonian
    Hamiltonian {
        #[command(flatten)]
        catalog: CatalogArg,
        #[command(flatten)]
        truncation: TruncationArgs,
    },
    /// Second page of the filtered complex: survivors and block dimensions
    E2 {
        #[command(flatten)]
        catalog: CatalogArg,
        #[command(flatten)]
        truncation: TruncationArgs,
    },
    /// Check random rational covers by the argument principle and the neck
    /// shift identity
    VerifyCovers {
        /// Number of random covers
        #[arg(long, default_value_t = 50)]
        count: u32,
        /// Maximal covering degree per side
        #[arg(long, default_value_t = 8)]
        max_degree: u32,
        /// RNG seed
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Samples per winding circle
        #[arg(long, default_value_t = 512)]
        samples: usize,
    },
    /// Run the algebraic invariant suite on a catalog
    Check {
        #[command(flatten)]
        catalog: CatalogArg,
        #[command(flatten)]
        truncation: TruncationArgs,
    },
}

fn resolve_orbit(catalog: &OrbitCatalog, name: &Option<String>) -> Result<usize> {
    match name {
        Some(name) => Ok(catalog.orbit_by_name(name)?.0),
        None => {
            if catalog.orbits.is_empty() {
                Err(Error::Validation("catalog has no orbits".into()))
            } else {
                Ok(0)
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index { catalog, profile } => {
            let cat = load_catalog(&catalog.catalog)?;
            let orbit = resolve_orbit(&cat, &profile.orbit)?;
            let prof = MultiplicityProfile::parse(&profile.profile)?;
            let summary = ModuliSummary::compute(&prof, &cat, orbit)?;
            let rank = summary
                .cokernel_rank
                .map(|r| r.to_string())
                .unwrap_or_else(|| "-".to_string());
            println!(
                "{}\t{}\t{}\t{}",
                summary.fredholm_index, summary.actual_dim_quotient, rank, summary.regular
            );
            if let Some(points) = cylinder_point_count(&prof) {
                println!("cylinder-points\t{points}");
            }
        }
        Command::Strata { catalog, profile } => {
            let cat = load_catalog(&catalog.catalog)?;
            resolve_orbit(&cat, &profile.orbit)?;
            let prof = MultiplicityProfile::parse(&profile.profile)?;
            for stratum in enumerate_codim1(&prof)? {
                println!(
                    "{}\t{}\t{}",
                    stratum.encoding, stratum.codim, stratum.fiber_group_order
                );
            }
        }
        Command::Euler { catalog, profile, out } => {
            let cat = load_catalog(&catalog.catalog)?;
            let orbit = resolve_orbit(&cat, &profile.orbit)?;
            let prof = MultiplicityProfile::parse(&profile.profile)?;
            let (value, set) = euler_number(&cat, orbit, &prof)?;
            let outcome = verify_certificate(&set, &cat);
            if !outcome.ok {
                return Err(Error::Invariant(format!(
                    "generated certificate failed verification: {}",
                    outcome.failures.join("; ")
                )));
            }
            let path = out.unwrap_or_else(|| {
                let orbit_name = &cat.orbits[orbit].name;
                let slug = prof.to_cli_string().replace(';', "-").replace(',', "_");
                PathBuf::from(format!("euler-{orbit_name}-{slug}.json"))
            });
            std::fs::write(&path, serde_json::to_string_pretty(&set).expect("serialize"))?;
            println!("{value}");
            println!("{}", path.display());
        }
        Command::Hamiltonian { catalog, truncation } => {
            let cat = load_catalog(&catalog.catalog)?;
            let alg = Algebra::new(&cat, truncation.resolve()?);
            let h0 = hamiltonian_h0(&alg)?;
            println!("{}", alg.render(&h0.element));
        }
        Command::E2 { catalog, truncation } => {
            let cat = load_catalog(&catalog.catalog)?;
            let alg = Algebra::new(&cat, truncation.resolve()?);
            for (orbit, mult) in surviving_generators(&alg)? {
                let name = &cat.orbits[orbit].name;
                if mult == 1 {
                    println!("generator\tq[{name}]");
                } else {
                    println!("generator\tq[{name}^{mult}]");
                }
            }
            let complex = ch_differential(&alg)?;
            let page = e2_page(&alg, &complex)?;
            for ((level, degree), block) in &page.blocks {
                if block.dimension == 0 {
                    continue;
                }
                let value = rat_to_string(&complex.filtration_levels[*level]);
                println!("block\t{value}\t{degree}\t{}", block.dimension);
            }
            println!("vanishes\t{}", vanishing_check(&alg)?);
        }
        Command::VerifyCovers {
            count,
            max_degree,
            seed,
            samples,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            println!("cover\tpuncture\texpected\tmeasured\tresidue");
            for i in 0..count {
                let cover = random_balanced_cover(&mut rng, max_degree);
                let punctures: Vec<(Complex64, i64)> = cover
                    .zeros()
                    .iter()
                    .map(|&(z, m)| (z, i64::from(m)))
                    .chain(cover.poles().iter().map(|&(z, m)| (z, -i64::from(m))))
                    .collect();
                for (z, expected) in punctures {
                    let (measured, residue) = cover.winding_measurement(z, 0.35, samples)?;
                    if measured != expected {
                        return Err(Error::Invariant(format!(
                            "winding mismatch at {z}: expected {expected}, measured {measured}"
                        )));
                    }
                    println!("{i}\t{z}\t{expected}\t{measured}\t{residue:.3e}");
                }
            }
            for m in (-5..=5i64).filter(|&m| m != 0) {
                for r in [0.25, 1.0, 4.0] {
                    let (measured, expected) = neck_shift_check(m, r, 1 << 10)?;
                    if (measured - expected).abs() >= 1e-6 {
                        return Err(Error::Invariant(format!(
                            "neck shift m={m}, r={r}: measured {measured}, expected {expected}"
                        )));
                    }
                    println!("neck\tm={m},r={r}\t{expected}\t{measured}\t{:.3e}", (measured - expected).abs());
                }
            }
        }
        Command::Check { catalog, truncation } => {
            let cat = load_catalog(&catalog.catalog)?;
            let alg = Algebra::new(&cat, truncation.resolve()?);
            let h0 = hamiltonian_h0(&alg)?;
            let self_bracket = alg.poisson_bracket(&h0.element, &h0.element)?;
            report("{h0,h0} = 0", self_bracket.is_zero())?;

            let complex = ch_differential(&alg)?;
            let mut square_zero = true;
            'outer: for m in &complex.basis {
                let mut dd = orbitcover::algebra::GradedElement::zero();
                for (target, c) in complex.differential[m].terms() {
                    match complex.differential.get(target) {
                        Some(next) => dd = dd.add(&next.scale(c)),
                        None => {
                            square_zero = false;
                            break 'outer;
                        }
                    }
                }
                if !dd.is_zero() {
                    square_zero = false;
                    break;
                }
            }
            report("d0^2 = 0 on the monomial basis", square_zero)?;

            let classes = filtration_behavior(&alg, &complex)?;
            let violating = classes
                .values()
                .filter(|c| matches!(c, FiltrationClass::Violating))
                .count();
            report("differential never raises the filtration", violating == 0)?;

            let preserving = classes
                .values()
                .filter(|c| matches!(c, FiltrationClass::Preserving))
                .count();
            println!(
                "info: basis {} / preserving {} / levels {}",
                complex.basis.len(),
                preserving,
                complex.filtration_levels.len()
            );

            let page = e2_page(&alg, &complex)?;
            report("E2 matches the survivor algebra", page.page_index == 2)?;
        }
    }
    Ok(())
}

fn report(name: &str, ok: bool) -> Result<()> {
    if ok {
        println!("PASS\t{name}");
        Ok(())
    } else {
        println!("FAIL\t{name}");
        Err(Error::Invariant(format!("check failed: {name}")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders its own help/usage text
            let _ = e.print();
            return ExitCode::from(64);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
