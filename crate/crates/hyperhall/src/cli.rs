//! Deterministic command-line front end: every capability of the library
//! behind one subcommand each, with dataset export to JSON or CSV.
//!
//! Contract: exit 0 on success, 2 on validation errors, 3 on numerical
//! failures, 64 on usage errors (unknown flags/subcommands). Outputs are
//! byte-identical across runs given the same configuration and seed. Exact
//! quantities are serialized as `"p/q"` rational strings; floats appear only
//! for spectral/cocycle data, alongside a declared `float_tolerance` field.
//! A TOML config file (`--config`) mirrors every flag; explicit flags win.

use std::ffi::OsString;
use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::algebra::{harper_spectrum, stable_gaps};
use crate::cocycles::{evaluate_pair, flux_theta, kubo_weight, solve_coboundary_defect};
use crate::conductance::{hall_conductance, plateau_scan, ProjectionOptions};
use crate::error::{Error, Result};
use crate::groups::{cayley_ball, signature_group_realization, CayleyBall, LatticeModel};
use crate::signatures::{
    classification_equivalent, covering_genus, k_theory_ranks, kadison_bound,
    orbifold_euler_characteristic, parse_rational, phi, rational_string,
    smallest_smooth_cover_order, ChernComponent, GeometryClass, SeifertData, Signature,
    ThetaValue,
};

/// Tolerance declared next to every float emitted by the CLI: the worst
/// residual bound the library's own verification enforces.
const FLOAT_TOLERANCE: f64 = 1e-9;

#[derive(Parser, Debug)]
#[command(
    name = "hyperhall",
    version,
    about = "Magnetic tight-binding models on hyperbolic lattices: exact orbifold \
             invariants, Fuchsian group realizations, Harper spectra, and quantized \
             Hall conductance pairings",
    after_help = "Exit codes: 0 success, 2 validation error, 3 numerical failure, 64 usage."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML file whose keys mirror the long flags; explicit flags override it
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory to write the output artifact into (default: stdout)
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,

    /// Output format (each subcommand documents its default)
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,

    /// Seed for the realization solver's deterministic restarts
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args, Debug, Default)]
struct SignatureArg {
    /// Orbifold signature "g;v1,v2,..." (cone order list may be empty: "2;")
    #[arg(long, value_name = "SIG")]
    signature: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact rational invariants of a signature: Euler characteristic, phi,
    /// K-theory ranks, trace lattice, Kadison bound, smooth covers
    Invariants {
        #[command(flatten)]
        sig: SignatureArg,
        /// Rational flux "p/q" in (0,1]; omitted = symbolic irrational theta
        #[arg(long, value_name = "P/Q")]
        theta: Option<String>,
        /// Also report the covering genus for this specific cover order
        #[arg(long, value_name = "M")]
        cover_order: Option<i64>,
    },
    /// Explicit matrix realization of the signature group with residuals
    Realize {
        #[command(flatten)]
        sig: SignatureArg,
    },
    /// Breadth-first Cayley ball: one row per element
    /// (CSV columns: id, word, length, orbit_x, orbit_y, abelianization)
    Ball {
        #[command(flatten)]
        sig: SignatureArg,
        #[arg(long, value_name = "R")]
        radius: Option<u32>,
    },
    /// Eigenvalues of the Harper operator at one flux
    /// (CSV columns: theta_tilde, theta, index, eigenvalue)
    Spectrum {
        #[command(flatten)]
        sig: SignatureArg,
        #[arg(long, value_name = "R")]
        radius: Option<u32>,
        /// Flux density multiplying the area cocycle
        #[arg(long, value_name = "T")]
        theta_tilde: Option<f64>,
    },
    /// Spectra swept over a flux grid
    /// (CSV columns: theta_tilde, theta, index, eigenvalue)
    Butterfly {
        #[command(flatten)]
        sig: SignatureArg,
        #[arg(long, value_name = "R")]
        radius: Option<u32>,
        /// Flux grid "start:end:count" (inclusive endpoints)
        #[arg(long, value_name = "A:B:N", allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Spectral gaps at one flux, kept only if present at radius R and R-1
    Gaps {
        #[command(flatten)]
        sig: SignatureArg,
        #[arg(long, value_name = "R")]
        radius: Option<u32>,
        #[arg(long, value_name = "T")]
        theta_tilde: Option<f64>,
        /// Minimum gap width to report
        #[arg(long, value_name = "W")]
        min_width: Option<f64>,
    },
    /// Spectral projection at a Fermi energy and its two cyclic cocycle
    /// pairings (area and Connes-Kubo), with quantization diagnostics
    Conductance {
        #[command(flatten)]
        sig: SignatureArg,
        #[arg(long, value_name = "R")]
        radius: Option<u32>,
        #[arg(long, value_name = "T")]
        theta_tilde: Option<f64>,
        /// Fermi energy (must lie in a spectral gap)
        #[arg(long, value_name = "E", allow_hyphen_values = true)]
        energy: Option<f64>,
        /// Pairing truncation radius (default: radius - 2)
        #[arg(long, value_name = "RIN")]
        inner_radius: Option<u32>,
        /// Filter at the raw energy instead of snapping to the gap midpoint
        #[arg(long)]
        no_snap: bool,
        /// Chebyshev filter degree for balls above the dense cutoff
        #[arg(long, value_name = "D")]
        chebyshev_degree: Option<usize>,
        /// Ball size up to which dense diagonalization is used
        #[arg(long, value_name = "N")]
        dense_cutoff: Option<usize>,
    },
    /// Hall data swept over a Fermi-energy grid
    /// (CSV columns: E, trace, trc, trK, nearest_k, deviation)
    PlateauScan {
        #[command(flatten)]
        sig: SignatureArg,
        #[arg(long, value_name = "R")]
        radius: Option<u32>,
        #[arg(long, value_name = "T")]
        theta_tilde: Option<f64>,
        /// Energy grid "start:end:count" (inclusive endpoints)
        #[arg(long, value_name = "A:B:N", allow_hyphen_values = true)]
        grid: Option<String>,
        #[arg(long, value_name = "RIN")]
        inner_radius: Option<u32>,
        #[arg(long, value_name = "D")]
        chebyshev_degree: Option<usize>,
        #[arg(long, value_name = "N")]
        dense_cutoff: Option<usize>,
    },
    /// Decide isomorphism of the twisted algebras at two rational flux values
    ClassifyTheta {
        #[command(flatten)]
        sig: SignatureArg,
        #[arg(long, value_name = "P/Q")]
        theta: Option<String>,
        #[arg(long, value_name = "P/Q")]
        theta_prime: Option<String>,
    },
    /// Orbifold line-bundle bookkeeping: Euler number, Chern character
    /// components, equivariant Euler pairing
    Seifert {
        /// Background Chern number
        #[arg(long, value_name = "C1", allow_hyphen_values = true)]
        c1: Option<i64>,
        /// Local invariants "b1/v1,b2/v2,..." with 0 < b < v
        #[arg(long, value_name = "LIST")]
        pairs: Option<String>,
    },
    /// Area/symplectic cocycle values on a pair of words, or the
    /// coboundary-defect least-squares solve over an inner ball
    Cocycle {
        #[command(flatten)]
        sig: SignatureArg,
        #[arg(long, value_name = "R")]
        radius: Option<u32>,
        #[arg(long, value_name = "T")]
        theta_tilde: Option<f64>,
        /// First word, e.g. "a1 b1^-1" (spot-evaluation mode)
        #[arg(long, value_name = "WORD")]
        x: Option<String>,
        /// Second word (spot-evaluation mode)
        #[arg(long, value_name = "WORD")]
        y: Option<String>,
        /// Solve k(x)+k(y)-k(xy) = defect over this sub-ball (solver mode)
        #[arg(long, value_name = "RIN")]
        inner_radius: Option<u32>,
    },
}

/// TOML mirror of the flags. Unknown keys are rejected.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    signature: Option<String>,
    theta: Option<String>,
    theta_prime: Option<String>,
    theta_tilde: Option<f64>,
    radius: Option<u32>,
    inner_radius: Option<u32>,
    energy: Option<f64>,
    grid: Option<String>,
    min_width: Option<f64>,
    cover_order: Option<i64>,
    c1: Option<i64>,
    pairs: Option<String>,
    x: Option<String>,
    y: Option<String>,
    no_snap: Option<bool>,
    chebyshev_degree: Option<usize>,
    dense_cutoff: Option<usize>,
    seed: Option<u64>,
    format: Option<String>,
    output: Option<String>,
}

/// Entry point used by the binary; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    print!("{e}");
                    0
                }
                _ => {
                    eprint!("{e}");
                    64
                }
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let file: FileConfig = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            toml::from_str(&text)
                .map_err(|e| Error::validation(format!("config {}: {e}", path.display())))?
        }
        None => FileConfig::default(),
    };
    let format = cli.format.or(match file.format.as_deref() {
        Some("json") => Some(OutputFormat::Json),
        Some("csv") => Some(OutputFormat::Csv),
        Some(other) => {
            return Err(Error::validation(format!(
                "config format '{other}' is not 'json' or 'csv'"
            )))
        }
        None => None,
    });
    let output = cli
        .output
        .clone()
        .or_else(|| file.output.as_ref().map(PathBuf::from));
    let seed = cli.seed.or(file.seed).unwrap_or(0);

    let (name, artifact) = match cli.command {
        Command::Invariants {
            sig,
            theta,
            cover_order,
        } => (
            "invariants",
            cmd_invariants(
                &resolve_signature(&sig, &file)?,
                theta.or(file.theta.clone()),
                cover_order.or(file.cover_order),
                pick(format, &[OutputFormat::Json])?,
            )?,
        ),
        Command::Realize { sig } => (
            "realize",
            cmd_realize(
                &resolve_signature(&sig, &file)?,
                seed,
                pick(format, &[OutputFormat::Json])?,
            )?,
        ),
        Command::Ball { sig, radius } => (
            "ball",
            cmd_ball(
                &resolve_signature(&sig, &file)?,
                need(radius.or(file.radius), "radius")?,
                seed,
                pick(format, &[OutputFormat::Csv, OutputFormat::Json])?,
            )?,
        ),
        Command::Spectrum {
            sig,
            radius,
            theta_tilde,
        } => (
            "spectrum",
            cmd_spectrum(
                &resolve_signature(&sig, &file)?,
                need(radius.or(file.radius), "radius")?,
                need(theta_tilde.or(file.theta_tilde), "theta-tilde")?,
                seed,
                pick(format, &[OutputFormat::Csv, OutputFormat::Json])?,
            )?,
        ),
        Command::Butterfly { sig, radius, grid } => (
            "butterfly",
            cmd_butterfly(
                &resolve_signature(&sig, &file)?,
                need(radius.or(file.radius), "radius")?,
                &need(grid.or(file.grid.clone()), "grid")?,
                seed,
                pick(format, &[OutputFormat::Csv, OutputFormat::Json])?,
            )?,
        ),
        Command::Gaps {
            sig,
            radius,
            theta_tilde,
            min_width,
        } => (
            "gaps",
            cmd_gaps(
                &resolve_signature(&sig, &file)?,
                need(radius.or(file.radius), "radius")?,
                need(theta_tilde.or(file.theta_tilde), "theta-tilde")?,
                min_width.or(file.min_width).unwrap_or(0.05),
                seed,
                pick(format, &[OutputFormat::Json, OutputFormat::Csv])?,
            )?,
        ),
        Command::Conductance {
            sig,
            radius,
            theta_tilde,
            energy,
            inner_radius,
            no_snap,
            chebyshev_degree,
            dense_cutoff,
        } => {
            let radius = need(radius.or(file.radius), "radius")?;
            let opts = projection_options(
                no_snap || file.no_snap.unwrap_or(false),
                chebyshev_degree.or(file.chebyshev_degree),
                dense_cutoff.or(file.dense_cutoff),
            );
            (
                "conductance",
                cmd_conductance(
                    &resolve_signature(&sig, &file)?,
                    radius,
                    need(theta_tilde.or(file.theta_tilde), "theta-tilde")?,
                    need(energy.or(file.energy), "energy")?,
                    inner_radius.or(file.inner_radius).unwrap_or(radius.saturating_sub(2)),
                    &opts,
                    seed,
                    pick(format, &[OutputFormat::Json])?,
                )?,
            )
        }
        Command::PlateauScan {
            sig,
            radius,
            theta_tilde,
            grid,
            inner_radius,
            chebyshev_degree,
            dense_cutoff,
        } => {
            let radius = need(radius.or(file.radius), "radius")?;
            let opts = projection_options(
                file.no_snap.unwrap_or(false),
                chebyshev_degree.or(file.chebyshev_degree),
                dense_cutoff.or(file.dense_cutoff),
            );
            (
                "plateau-scan",
                cmd_plateau_scan(
                    &resolve_signature(&sig, &file)?,
                    radius,
                    need(theta_tilde.or(file.theta_tilde), "theta-tilde")?,
                    &need(grid.or(file.grid.clone()), "grid")?,
                    inner_radius.or(file.inner_radius).unwrap_or(radius.saturating_sub(2)),
                    &opts,
                    seed,
                    pick(format, &[OutputFormat::Csv, OutputFormat::Json])?,
                )?,
            )
        }
        Command::ClassifyTheta {
            sig,
            theta,
            theta_prime,
        } => (
            "classify-theta",
            cmd_classify_theta(
                &resolve_signature(&sig, &file)?,
                &need(theta.or(file.theta.clone()), "theta")?,
                &need(theta_prime.or(file.theta_prime.clone()), "theta-prime")?,
                pick(format, &[OutputFormat::Json])?,
            )?,
        ),
        Command::Seifert { c1, pairs } => (
            "seifert",
            cmd_seifert(
                need(c1.or(file.c1), "c1")?,
                &need(pairs.or(file.pairs.clone()), "pairs")?,
                pick(format, &[OutputFormat::Json])?,
            )?,
        ),
        Command::Cocycle {
            sig,
            radius,
            theta_tilde,
            x,
            y,
            inner_radius,
        } => (
            "cocycle",
            cmd_cocycle(
                &resolve_signature(&sig, &file)?,
                need(radius.or(file.radius), "radius")?,
                theta_tilde.or(file.theta_tilde).unwrap_or(0.0),
                x.or(file.x.clone()),
                y.or(file.y.clone()),
                inner_radius.or(file.inner_radius),
                seed,
                pick(format, &[OutputFormat::Json])?,
            )?,
        ),
    };
    emit(&output, name, artifact)
}

/// A rendered artifact ready to write.
enum Artifact {
    Json(Value),
    Csv(Vec<u8>),
}

fn emit(output: &Option<PathBuf>, name: &str, artifact: Artifact) -> Result<()> {
    let (bytes, ext) = match artifact {
        Artifact::Json(v) => {
            let mut b = serde_json::to_vec_pretty(&v)
                .map_err(|e| Error::numerical(format!("json serialization: {e}")))?;
            b.push(b'\n');
            (b, "json")
        }
        Artifact::Csv(b) => (b, "csv"),
    };
    match output {
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(format!("{name}.{ext}"));
            std::fs::write(&path, &bytes)?;
            println!("{}", path.display());
            Ok(())
        }
    }
}

fn need<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| {
        Error::validation(format!("missing --{flag} (set the flag or the config key)"))
    })
}

fn resolve_signature(arg: &SignatureArg, file: &FileConfig) -> Result<Signature> {
    let s = arg
        .signature
        .clone()
        .or_else(|| file.signature.clone())
        .ok_or_else(|| {
            Error::validation("missing --signature (set the flag or the config key)")
        })?;
    Signature::parse(&s)
}

/// First allowed format is the subcommand default; a requested format not in
/// the allowed set is a validation error.
fn pick(requested: Option<OutputFormat>, allowed: &[OutputFormat]) -> Result<OutputFormat> {
    match requested {
        None => Ok(allowed[0]),
        Some(f) if allowed.contains(&f) => Ok(f),
        Some(f) => Err(Error::validation(format!(
            "format {f:?} not supported by this subcommand"
        ))),
    }
}

fn projection_options(
    no_snap: bool,
    degree: Option<usize>,
    dense_cutoff: Option<usize>,
) -> ProjectionOptions {
    let mut opts = ProjectionOptions::default();
    opts.snap_to_gap = !no_snap;
    if let Some(d) = degree {
        opts.chebyshev_degree = d;
    }
    if let Some(n) = dense_cutoff {
        opts.dense_cutoff = n;
    }
    opts
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::validation(format!(
            "grid '{text}' is not 'start:end:count'"
        )));
    }
    let a: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| Error::validation(format!("grid start '{}' is not a number", parts[0])))?;
    let b: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| Error::validation(format!("grid end '{}' is not a number", parts[1])))?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|_| Error::validation(format!("grid count '{}' is not an integer", parts[2])))?;
    if n == 0 {
        return Err(Error::validation("grid count must be at least 1"));
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

fn geometry_class_str(sig: &Signature) -> &'static str {
    match sig.geometry_class() {
        GeometryClass::Hyperbolic => "hyperbolic",
        GeometryClass::Euclidean => "euclidean",
        GeometryClass::Spherical => "spherical",
    }
}

fn complex_json(z: Complex64) -> Value {
    json!({ "re": z.re, "im": z.im })
}

fn build_ball(sig: &Signature, radius: u32, seed: u64) -> Result<CayleyBall> {
    let real = signature_group_realization(sig, seed)?;
    cayley_ball(&real, radius)
}

fn cmd_invariants(
    sig: &Signature,
    theta: Option<String>,
    cover_order: Option<i64>,
    _format: OutputFormat,
) -> Result<Artifact> {
    let chi = orbifold_euler_characteristic(sig);
    let (k0, k1) = k_theory_ranks(sig);
    let theta_value = match &theta {
        Some(t) => ThetaValue::Rational(parse_rational(t)?),
        None => ThetaValue::Irrational("theta".to_string()),
    };
    let lattice = crate::signatures::trace_range(sig, &theta_value)?;
    let mut doc = json!({
        "signature": sig.canonical_string(),
        "geometry_class": geometry_class_str(sig),
        "genus": sig.genus,
        "cone_orders": sig.cone_orders,
        "orbifold_euler_characteristic": rational_string(&chi),
        "phi": rational_string(&phi(sig)),
        "k_theory_ranks": { "k0": k0, "k1": k1 },
        "trace_lattice": {
            "rational_generators": lattice
                .rational_generators
                .iter()
                .map(rational_string)
                .collect::<Vec<_>>(),
            "irrational_generator": lattice.irrational_generator,
        },
    });
    if let Some(min) = lattice.minimal_positive() {
        doc["trace_lattice"]["minimal_positive"] = json!(rational_string(&min));
        doc["kadison_bound"] = json!(rational_string(&kadison_bound(sig, &theta_value)?));
        if let Some(points) = lattice.points_in_unit_interval() {
            if points.len() <= 401 {
                doc["gap_labels_unit_interval"] =
                    json!(points.iter().map(rational_string).collect::<Vec<_>>());
            } else {
                doc["gap_label_count_unit_interval"] = json!(points.len());
            }
        }
    }
    if sig.geometry_class() != GeometryClass::Spherical {
        let m = smallest_smooth_cover_order(sig)?;
        doc["smooth_cover"] = json!({
            "smallest_order": m,
            "covering_genus": covering_genus(sig, m)?,
        });
        if let Some(m_req) = cover_order {
            doc["requested_cover"] = json!({
                "order": m_req,
                "covering_genus": covering_genus(sig, m_req)?,
            });
        }
    }
    Ok(Artifact::Json(doc))
}

fn cmd_realize(sig: &Signature, seed: u64, _format: OutputFormat) -> Result<Artifact> {
    let real = signature_group_realization(sig, seed)?;
    let residual = real.verify();
    let generators: Vec<Value> = real
        .generators
        .iter()
        .map(|g| {
            json!({
                "name": g.name,
                "matrix": g.iso.entries(),
                "order": g.order,
                "abelianization": g.ab,
            })
        })
        .collect();
    Ok(Artifact::Json(json!({
        "signature": sig.canonical_string(),
        "model": match real.model {
            LatticeModel::Hyperbolic => "hyperbolic",
            LatticeModel::EuclideanTorus => "euclidean_torus",
        },
        "generators": generators,
        "relator_residual": residual,
        "float_tolerance": FLOAT_TOLERANCE,
        "seed": seed,
    })))
}

fn cmd_ball(
    sig: &Signature,
    radius: u32,
    seed: u64,
    format: OutputFormat,
) -> Result<Artifact> {
    let ball = build_ball(sig, radius, seed)?;
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["id", "word", "length", "orbit_x", "orbit_y", "abelianization"])
                .map_err(csv_err)?;
            for id in 0..ball.len() as u32 {
                let z = ball.orbit_point(id);
                let ab = ball
                    .abelianization(id)
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                w.write_record([
                    id.to_string(),
                    ball.word_string(ball.word(id)),
                    ball.word_length(id).to_string(),
                    format!("{:.12e}", z.re),
                    format!("{:.12e}", z.im),
                    ab,
                ])
                .map_err(csv_err)?;
            }
            Ok(Artifact::Csv(finish_csv(w)?))
        }
        OutputFormat::Json => {
            let rows: Vec<Value> = (0..ball.len() as u32)
                .map(|id| {
                    let z = ball.orbit_point(id);
                    json!({
                        "id": id,
                        "word": ball.word_string(ball.word(id)),
                        "length": ball.word_length(id),
                        "orbit": [z.re, z.im],
                        "abelianization": ball.abelianization(id),
                    })
                })
                .collect();
            Ok(Artifact::Json(json!({
                "signature": sig.canonical_string(),
                "radius": radius,
                "size": ball.len(),
                "sphere_sizes": ball.sphere_sizes(),
                "float_tolerance": FLOAT_TOLERANCE,
                "elements": rows,
            })))
        }
    }
}

fn spectrum_rows(
    w: &mut csv::Writer<Vec<u8>>,
    theta_tilde: f64,
    theta: f64,
    eigenvalues: &[f64],
) -> Result<()> {
    for (index, e) in eigenvalues.iter().enumerate() {
        w.write_record([
            format!("{theta_tilde:.12e}"),
            format!("{theta:.12e}"),
            index.to_string(),
            format!("{e:.12e}"),
        ])
        .map_err(csv_err)?;
    }
    Ok(())
}

fn cmd_spectrum(
    sig: &Signature,
    radius: u32,
    theta_tilde: f64,
    seed: u64,
    format: OutputFormat,
) -> Result<Artifact> {
    let ball = build_ball(sig, radius, seed)?;
    let eigenvalues = harper_spectrum(&ball, theta_tilde)?;
    let theta = flux_theta(sig, theta_tilde);
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["theta_tilde", "theta", "index", "eigenvalue"])
                .map_err(csv_err)?;
            spectrum_rows(&mut w, theta_tilde, theta, &eigenvalues)?;
            Ok(Artifact::Csv(finish_csv(w)?))
        }
        OutputFormat::Json => Ok(Artifact::Json(json!({
            "signature": sig.canonical_string(),
            "radius": radius,
            "theta_tilde": theta_tilde,
            "theta": theta,
            "float_tolerance": FLOAT_TOLERANCE,
            "eigenvalues": eigenvalues,
        }))),
    }
}

fn cmd_butterfly(
    sig: &Signature,
    radius: u32,
    grid: &str,
    seed: u64,
    format: OutputFormat,
) -> Result<Artifact> {
    use rayon::prelude::*;
    let flux_values = parse_grid(grid)?;
    let ball = build_ball(sig, radius, seed)?;
    let rows: Vec<(f64, f64, Vec<f64>)> = flux_values
        .par_iter()
        .map(|&tt| harper_spectrum(&ball, tt).map(|e| (tt, flux_theta(sig, tt), e)))
        .collect::<Result<Vec<_>>>()?;
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["theta_tilde", "theta", "index", "eigenvalue"])
                .map_err(csv_err)?;
            for (tt, theta, eigenvalues) in &rows {
                spectrum_rows(&mut w, *tt, *theta, eigenvalues)?;
            }
            Ok(Artifact::Csv(finish_csv(w)?))
        }
        OutputFormat::Json => Ok(Artifact::Json(json!({
            "signature": sig.canonical_string(),
            "radius": radius,
            "float_tolerance": FLOAT_TOLERANCE,
            "sweep": rows
                .iter()
                .map(|(tt, theta, eigenvalues)| json!({
                    "theta_tilde": tt,
                    "theta": theta,
                    "eigenvalues": eigenvalues,
                }))
                .collect::<Vec<_>>(),
        }))),
    }
}

fn cmd_gaps(
    sig: &Signature,
    radius: u32,
    theta_tilde: f64,
    min_width: f64,
    seed: u64,
    format: OutputFormat,
) -> Result<Artifact> {
    let real = signature_group_realization(sig, seed)?;
    let gaps = stable_gaps(&real, radius, theta_tilde, min_width)?;
    match format {
        OutputFormat::Json => Ok(Artifact::Json(json!({
            "theta_tilde": theta_tilde,
            "gaps": gaps.iter().map(|&(lo, hi)| vec![lo, hi]).collect::<Vec<_>>(),
            "signature": sig.canonical_string(),
            "radius": radius,
            "min_width": min_width,
            "float_tolerance": FLOAT_TOLERANCE,
        }))),
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["theta_tilde", "gap_lo", "gap_hi"]).map_err(csv_err)?;
            for (lo, hi) in &gaps {
                w.write_record([
                    format!("{theta_tilde:.12e}"),
                    format!("{lo:.12e}"),
                    format!("{hi:.12e}"),
                ])
                .map_err(csv_err)?;
            }
            Ok(Artifact::Csv(finish_csv(w)?))
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_conductance(
    sig: &Signature,
    radius: u32,
    theta_tilde: f64,
    energy: f64,
    inner_radius: u32,
    opts: &ProjectionOptions,
    seed: u64,
    _format: OutputFormat,
) -> Result<Artifact> {
    let ball = build_ball(sig, radius, seed)?;
    let report = hall_conductance(&ball, theta_tilde, energy, inner_radius, opts)?;
    Ok(Artifact::Json(json!({
        "signature": sig.canonical_string(),
        "radius": radius,
        "inner_radius": inner_radius,
        "theta_tilde": theta_tilde,
        "theta": flux_theta(sig, theta_tilde),
        "phi": rational_string(&phi(sig)),
        "energy_input": report.energy_input,
        "energy_used": report.energy_used,
        "gap": report.gap.map(|(lo, hi)| vec![lo, hi]),
        "trace_fraction": report.trace_fraction,
        "boundary_leak": report.boundary_leak,
        "area_pairing": complex_json(report.area_pairing),
        "kubo_pairing": complex_json(report.kubo_pairing),
        "nearest_k": report.nearest_k,
        "deviation": report.deviation,
        "float_tolerance": FLOAT_TOLERANCE,
    })))
}

#[allow(clippy::too_many_arguments)]
fn cmd_plateau_scan(
    sig: &Signature,
    radius: u32,
    theta_tilde: f64,
    grid: &str,
    inner_radius: u32,
    opts: &ProjectionOptions,
    seed: u64,
    format: OutputFormat,
) -> Result<Artifact> {
    let energies = parse_grid(grid)?;
    let ball = build_ball(sig, radius, seed)?;
    let reports = plateau_scan(&ball, theta_tilde, &energies, inner_radius, opts)?;
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["E", "trace", "trc", "trK", "nearest_k", "deviation"])
                .map_err(csv_err)?;
            for r in &reports {
                w.write_record([
                    format!("{:.12e}", r.energy_input),
                    format!("{:.12e}", r.trace_fraction),
                    format!("{:.12e}", r.area_pairing.re),
                    format!("{:.12e}", r.kubo_pairing.re),
                    r.nearest_k.to_string(),
                    format!("{:.12e}", r.deviation),
                ])
                .map_err(csv_err)?;
            }
            Ok(Artifact::Csv(finish_csv(w)?))
        }
        OutputFormat::Json => Ok(Artifact::Json(json!({
            "signature": sig.canonical_string(),
            "radius": radius,
            "inner_radius": inner_radius,
            "theta_tilde": theta_tilde,
            "phi": rational_string(&phi(sig)),
            "float_tolerance": FLOAT_TOLERANCE,
            "rows": reports
                .iter()
                .map(|r| json!({
                    "E": r.energy_input,
                    "energy_used": r.energy_used,
                    "gap": r.gap.map(|(lo, hi)| vec![lo, hi]),
                    "trace": r.trace_fraction,
                    "trc": r.area_pairing.re,
                    "trK": r.kubo_pairing.re,
                    "nearest_k": r.nearest_k,
                    "deviation": r.deviation,
                }))
                .collect::<Vec<_>>(),
        }))),
    }
}

fn cmd_classify_theta(
    sig: &Signature,
    theta: &str,
    theta_prime: &str,
    _format: OutputFormat,
) -> Result<Artifact> {
    let t = parse_rational(theta)?;
    let tp = parse_rational(theta_prime)?;
    let equivalent = classification_equivalent(sig, &t, &tp)?;
    Ok(Artifact::Json(json!({
        "signature": sig.canonical_string(),
        "theta": rational_string(&t),
        "theta_prime": rational_string(&tp),
        "equivalent": equivalent,
    })))
}

fn cmd_seifert(c1: i64, pairs_text: &str, _format: OutputFormat) -> Result<Artifact> {
    let mut pairs = Vec::new();
    for part in pairs_text.split(',').filter(|p| !p.trim().is_empty()) {
        let r = parse_rational(part.trim())?;
        pairs.push((*r.numer(), *r.denom()));
    }
    let data = SeifertData::new(c1, pairs)?;
    let chern: Vec<Value> = crate::signatures::chern_character(&data)
        .iter()
        .map(|c| match c {
            ChernComponent::Rank(r) => json!({ "rank": r }),
            ChernComponent::C1(c) => json!({ "c1": c }),
            ChernComponent::Phase(frac) => json!({ "phase": rational_string(frac) }),
        })
        .collect();
    let pairing = crate::signatures::equivariant_euler_pairing(&data);
    let exact = data.c1 - data.pairs.len() as i64;
    Ok(Artifact::Json(json!({
        "c1": data.c1,
        "pairs": data.pairs.iter().map(|&(b, v)| vec![b, v]).collect::<Vec<_>>(),
        "orbifold_euler_number": rational_string(&crate::signatures::orbifold_euler_number(&data)),
        "chern_character": chern,
        "equivariant_euler_pairing": complex_json(pairing),
        "equivariant_euler_pairing_exact": exact,
        "float_tolerance": FLOAT_TOLERANCE,
    })))
}

#[allow(clippy::too_many_arguments)]
fn cmd_cocycle(
    sig: &Signature,
    radius: u32,
    theta_tilde: f64,
    x: Option<String>,
    y: Option<String>,
    inner_radius: Option<u32>,
    seed: u64,
    _format: OutputFormat,
) -> Result<Artifact> {
    let ball = build_ball(sig, radius, seed)?;
    match (&x, &y, inner_radius) {
        (Some(xw), Some(yw), None) => {
            let v = evaluate_pair(&ball, theta_tilde, xw, yw)?;
            Ok(Artifact::Json(json!({
                "signature": sig.canonical_string(),
                "x": xw,
                "y": yw,
                "theta_tilde": theta_tilde,
                "area": v.area,
                "symplectic": v.symplectic,
                "kubo": v.kubo,
                "kubo_weight": kubo_weight(&ball.realization),
                "multiplier": complex_json(v.multiplier),
                "float_tolerance": FLOAT_TOLERANCE,
            })))
        }
        (None, None, Some(rin)) => {
            let sol = solve_coboundary_defect(&ball, rin)?;
            let max_abs = sol.k.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
            Ok(Artifact::Json(json!({
                "signature": sig.canonical_string(),
                "radius": radius,
                "inner_radius": rin,
                "equations": sol.equations,
                "rms_residual": sol.rms,
                "max_abs_k": max_abs,
                "float_tolerance": FLOAT_TOLERANCE,
            })))
        }
        _ => Err(Error::validation(
            "use either --x and --y (spot evaluation) or --inner-radius (defect solve)",
        )),
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::numerical(format!("csv serialization: {e}"))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| Error::numerical(format!("csv flush: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing_handles_endpoints_and_counts() {
        assert_eq!(parse_grid("0:1:2").unwrap(), vec![0.0, 1.0]);
        assert_eq!(parse_grid("0.5:0.5:1").unwrap(), vec![0.5]);
        let g = parse_grid("0:1:5").unwrap();
        assert_eq!(g.len(), 5);
        assert!((g[2] - 0.5).abs() < 1e-15);
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("a:1:3").is_err());
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(run(["hyperhall", "--definitely-not-a-flag"]), 64);
        assert_eq!(run(["hyperhall", "no-such-subcommand"]), 64);
        assert_eq!(
            run(["hyperhall", "invariants", "--signature", "2;", "--bogus"]),
            64
        );
    }

    #[test]
    fn validation_errors_exit_2() {
        // spherical signature rejected by realization ops
        assert_eq!(
            run(["hyperhall", "ball", "--signature", "0;2,3,5", "--radius", "2"]),
            2
        );
        // missing required parameter
        assert_eq!(run(["hyperhall", "spectrum", "--signature", "2;"]), 2);
        // malformed signature
        assert_eq!(run(["hyperhall", "invariants", "--signature", "nope"]), 2);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["hyperhall", "--help"]), 0);
        assert_eq!(run(["hyperhall", "invariants", "--help"]), 0);
    }
}
