//! Command implementations for the `oqc` binary: every subcommand ingests
//! JSON inputs, runs the corresponding library computation, and emits a
//! deterministic JSON report (or an aligned text table with `--table`).
//!
//! Exit-code contract: 0 when every check passes, 1 on numerical check
//! failures or computation errors, 2 on schema violations.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use oqc_core::charges::{
    central_charge, charge_c2, charge_c3, integral_period, potential_input, ChargeFunction,
    ChargeVars,
};
use oqc_core::crepant::{crossref_central_charges, fm_assignment, predict_coordinate_change};
use oqc_core::error::{Error, Result};
use oqc_core::galois::{
    galois_on_sol, sol_pairing_matrix, validate_transform, z_monodromy, ExternalTransform,
};
use oqc_core::gamma_frame::{
    gamma_class, kawasaki_chi, mukai_pairing_check, psi_map, todd_class,
};
use oqc_core::graded::{CohElement, Support};
use oqc_core::io::{self, OrbifoldInput};
use oqc_core::kclass::KClass;
use oqc_core::lefschetz::{
    gen_hl_coarse_check, graded_iso_witness, hl_coarse_check, is_bicentric_hl, jordan_type,
    weight_filtration, GradedNilpotentPair, WitnessOutcome,
};
use oqc_core::linalg::Mat;
use oqc_core::orbifold::condition_checks;
use oqc_core::qdm::{
    connection, connection_flatness, fundamental_solution, j_function, opposite_project,
    quantum_product, residue_product, unitarity_residual, wdvv_check, Connection,
    CorrelatorTable, FundamentalSolution, QuantumProduct,
};
use oqc_core::scalar::{Scalar, EFFECTIVE_DIGITS};
use oqc_core::series::Coeff;

#[derive(Parser, Debug)]
#[command(
    name = "oqc",
    version,
    about = "Integral structures on orbifold quantum cohomology: inertia data, \
             Gamma-class framings, Kawasaki-Riemann-Roch, quantum D-modules, \
             Hard Lefschetz diagnostics and crepant-resolution predictions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Option<Command>,

    /// Working precision in decimal digits (clamped to the double-precision
    /// backend; values above the effective limit are recorded as requested).
    #[arg(long, global = true, default_value_t = 64)]
    pub precision: u32,

    /// Truncation order for series computations.
    #[arg(long, global = true, default_value_t = 12)]
    pub order: u32,

    /// Numeric tolerance for checks.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tolerance: f64,

    /// Write the report to a file instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Render an aligned text table instead of JSON.
    #[arg(long, global = true, default_value_t = false)]
    pub table: bool,

    /// Include wall-clock timing in the report (off by default so that
    /// reports are byte-identical across runs).
    #[arg(long, global = true, default_value_t = false)]
    pub timing: bool,

    /// Print the named input schema and exit (orbifold, correlators,
    /// potentials, fm, transform, hlpair).
    #[arg(long)]
    pub schema: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct SpecArg {
    /// Orbifold spec JSON.
    #[arg(long)]
    pub spec: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct TableArg {
    /// Correlator table JSON.
    #[arg(long)]
    pub correlators: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Inertia components, ages and the cusp uniqueness conditions.
    Inertia(SpecArg),
    /// Orbifold Poincare pairing matrix (optionally one pairing value).
    Pairing {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        lhs: Option<String>,
        #[arg(long)]
        rhs: Option<String>,
    },
    /// Gamma-class of a K-class (default: the tangent bundle).
    Gamma {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value = "TX")]
        class: String,
    },
    /// Orbifold Chern character.
    Chern {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        class: String,
    },
    /// Orbifold Todd class (default: the tangent bundle).
    Todd {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long, default_value = "TX")]
        class: String,
    },
    /// Kawasaki-Riemann-Roch Euler characteristic.
    Chi {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        class: String,
    },
    /// K-group framing Psi of a class.
    Psi {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        class: String,
    },
    /// Mukai pairing identity for a pair of classes.
    MukaiCheck {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        v1: String,
        #[arg(long)]
        v2: String,
    },
    /// Galois action matrix of a line bundle on flat sections.
    Galois {
        #[command(flatten)]
        spec: SpecArg,
        #[arg(long)]
        xi: String,
    },
    /// z-monodromy matrix.
    Monodromy(SpecArg),
    /// Hard Lefschetz checks for the coarse map.
    HlCheck(SpecArg),
    /// Jordan type of a graded nilpotent pair (optionally a witness to a second).
    Jordan {
        /// Graded pair JSON (degrees + matrix).
        #[arg(long)]
        pair: PathBuf,
        #[arg(long)]
        pair2: Option<PathBuf>,
    },
    /// Quantum product structure constants.
    Qprod {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        i: Option<String>,
        #[arg(long)]
        j: Option<String>,
    },
    /// WDVV associativity residual.
    Wdvv {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        table: TableArg,
    },
    /// Dubrovin connection flatness residuals.
    Flatness {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        table: TableArg,
    },
    /// Fundamental solution L(tau, z) summary with unitarity check.
    Lfun {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        table: TableArg,
    },
    /// J-function J(tau, -z).
    Jfun {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        table: TableArg,
    },
    /// Flat coordinates from the opposite-subspace projection.
    Flatcoord {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        table: TableArg,
    },
    /// Central charge of a K-class through the generic pipeline.
    Charge {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        class: String,
        #[arg(long)]
        pots: Option<PathBuf>,
    },
    /// Integral period of the framed section of a K-class.
    Period {
        #[command(flatten)]
        spec: SpecArg,
        #[command(flatten)]
        table: TableArg,
        #[arg(long)]
        class: String,
    },
    /// Crepant-resolution coordinate-change prediction.
    Predict {
        #[command(flatten)]
        spec: SpecArg,
        /// Fourier-Mukai assignment JSON.
        #[arg(long)]
        fm: PathBuf,
        #[arg(long)]
        pots: Option<PathBuf>,
        /// Also cross-check the resolution-side curve charges.
        #[arg(long, default_value_t = false)]
        crossref: bool,
    },
    /// Validate an external symplectic transform between two spaces.
    ValidateU {
        #[arg(long)]
        u: PathBuf,
        #[arg(long)]
        spec1: PathBuf,
        #[arg(long)]
        spec2: PathBuf,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Inertia(_) => "inertia",
            Command::Pairing { .. } => "pairing",
            Command::Gamma { .. } => "gamma",
            Command::Chern { .. } => "chern",
            Command::Todd { .. } => "todd",
            Command::Chi { .. } => "chi",
            Command::Psi { .. } => "psi",
            Command::MukaiCheck { .. } => "mukai-check",
            Command::Galois { .. } => "galois",
            Command::Monodromy(_) => "monodromy",
            Command::HlCheck(_) => "hl-check",
            Command::Jordan { .. } => "jordan",
            Command::Qprod { .. } => "qprod",
            Command::Wdvv { .. } => "wdvv",
            Command::Flatness { .. } => "flatness",
            Command::Lfun { .. } => "lfun",
            Command::Jfun { .. } => "jfun",
            Command::Flatcoord { .. } => "flatcoord",
            Command::Charge { .. } => "charge",
            Command::Period { .. } => "period",
            Command::Predict { .. } => "predict",
            Command::ValidateU { .. } => "validate-u",
        }
    }
}

#[derive(Serialize, Debug)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub residual: f64,
}

#[derive(Serialize, Debug)]
pub struct Report {
    pub command: String,
    pub parameters: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub results: Value,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl Report {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

// ---------------------------------------------------------------------------
// rendering helpers
// ---------------------------------------------------------------------------

fn scalar_json(s: &Scalar) -> Value {
    if let Some(r) = s.as_rational() {
        return Value::String(format!("{}", r));
    }
    let (re, im) = s.to_decimal_pair();
    json!([re, im])
}

fn matrix_json(m: &Mat) -> Value {
    let rows: Vec<Value> = (0..m.rows)
        .map(|i| Value::Array((0..m.cols).map(|j| scalar_json(&m[(i, j)])).collect()))
        .collect();
    Value::Array(rows)
}

fn element_json(e: &CohElement) -> Value {
    let mut map = serde_json::Map::new();
    for (i, c) in e.coeffs.iter().enumerate() {
        if !c.is_zero() {
            map.insert(e.space.classes[i].name.clone(), scalar_json(c));
        }
    }
    Value::Object(map)
}

fn mono_string(vars: &oqc_core::series::VarSet, m: &oqc_core::series::Mono) -> String {
    let mut parts = Vec::new();
    for (i, e) in m.exps.iter().enumerate() {
        if *e == 1 {
            parts.push(vars.names[i].clone());
        } else if *e > 1 {
            parts.push(format!("{}^{}", vars.names[i], e));
        }
    }
    if m.zh != 0 {
        if m.zh % 2 == 0 {
            parts.push(format!("z^{}", m.zh / 2));
        } else {
            parts.push(format!("z^{}/2", m.zh));
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

fn sseries_json(s: &oqc_core::series::SSeries) -> Value {
    let terms: Vec<Value> = s
        .terms
        .iter()
        .map(|(m, c)| json!({ "monomial": mono_string(&s.vars, m), "value": scalar_json(c) }))
        .collect();
    Value::Array(terms)
}

fn vseries_json(s: &oqc_core::series::VSeries, space: &oqc_core::graded::GradedSpace) -> Value {
    let terms: Vec<Value> = s
        .terms
        .iter()
        .map(|(m, c)| {
            let mut comp = serde_json::Map::new();
            for (i, x) in c.iter().enumerate() {
                if !x.is_zero() {
                    comp.insert(space.classes[i].name.clone(), scalar_json(x));
                }
            }
            json!({ "monomial": mono_string(&s.vars, m), "components": Value::Object(comp) })
        })
        .collect();
    Value::Array(terms)
}

fn charge_json(cf: &ChargeFunction) -> Value {
    json!({
        "label": cf.label,
        "provenance": match cf.provenance {
            oqc_core::charges::Provenance::GenericPipeline => "pipeline",
            oqc_core::charges::Provenance::ClosedForm => "closed-form",
        },
        "series": sseries_json(&cf.series),
    })
}

// ---------------------------------------------------------------------------
// input loading
// ---------------------------------------------------------------------------

struct Loader {
    inputs: BTreeMap<String, String>,
}

impl Loader {
    fn new() -> Self {
        Loader {
            inputs: BTreeMap::new(),
        }
    }

    fn read(&mut self, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::schema(path.display().to_string(), format!("cannot read file: {}", e))
        })?;
        let digest = Sha256::digest(text.as_bytes());
        let hex: String = digest.iter().map(|b| format!("{:02x}", b)).collect();
        self.inputs.insert(path.display().to_string(), hex);
        Ok(text)
    }

    fn orbifold(&mut self, path: &Path) -> Result<OrbifoldInput> {
        io::parse_orbifold(&self.read(path)?)
    }

    fn correlators(
        &mut self,
        path: &Path,
        datum: &oqc_core::orbifold::OrbifoldDatum,
    ) -> Result<CorrelatorTable> {
        let json = io::parse_correlators(&self.read(path)?)?;
        CorrelatorTable::from_json(&json, datum)
    }
}

fn build_qdm<'d>(
    datum: &'d oqc_core::orbifold::OrbifoldDatum,
    table: &CorrelatorTable,
    order: u32,
    tol: f64,
) -> Result<(QuantumProduct, Connection<'d>, FundamentalSolution)> {
    let qp = quantum_product(table, datum, order)?;
    let conn = connection(datum, qp.clone())?;
    let fund = fundamental_solution(&conn, tol)?;
    Ok((qp, conn, fund))
}

fn resolve_class(input: &OrbifoldInput, name: &str) -> Result<KClass> {
    if name == "TX" {
        return Ok(input.datum.tangent.clone());
    }
    io::resolve_kclass(&input.datum, &input.named_kclasses, name)
}

fn resolve_element(input: &OrbifoldInput, name: &str) -> Result<CohElement> {
    let d = &input.datum;
    if let Some(i) = d.ordinary.index_of(name) {
        return Ok(CohElement::basis(d.ordinary.clone(), i));
    }
    if let Some(i) = d.csupp.index_of(name) {
        return Ok(CohElement::basis(d.csupp.clone(), i));
    }
    Err(Error::Lookup(format!("unknown cohomology class {:?}", name)))
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

pub fn execute(cli: &Cli) -> Result<Report> {
    let start = std::time::Instant::now();
    let order = cli.order;
    let tol = cli.tolerance;
    let mut loader = Loader::new();
    let mut checks: Vec<Check> = Vec::new();
    let command = cli
        .command
        .as_ref()
        .ok_or_else(|| Error::schema("$", "no subcommand given (see --help)"))?;

    let results: Value = match command {
        Command::Inertia(spec) => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let sectors: Vec<Value> = d
                .sectors
                .iter()
                .map(|s| {
                    json!({
                        "label": s.label,
                        "age": format!("{}", s.age),
                        "dim": s.dim_v,
                        "centralizer": s.centralizer,
                        "inv": d.sectors[s.inv_partner].label,
                    })
                })
                .collect();
            let cond = condition_checks(d);
            checks.push(Check {
                name: "uniqueness_opposite".into(),
                pass: cond.uniqueness_opposite,
                residual: 0.0,
            });
            checks.push(Check {
                name: "uniqueness_dilaton".into(),
                pass: cond.uniqueness_dilaton,
                residual: 0.0,
            });
            let groups: Vec<Value> = cond
                .groups
                .iter()
                .map(|g| {
                    json!({
                        "sectors": g.sectors.iter().map(|&v| d.sectors[v].label.clone()).collect::<Vec<_>>(),
                        "n_alpha": g.n_alpha.as_ref().map(|x| format!("{}", x)),
                        "pass": g.pass,
                    })
                })
                .collect();
            json!({ "name": d.name, "dimension": d.dim, "compact": d.compact,
                    "sectors": sectors, "condition_groups": groups })
        }

        Command::Pairing { spec, lhs, rhs } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let mut out = serde_json::Map::new();
            out.insert("matrix".into(), matrix_json(&d.pairing));
            if let (Some(a), Some(b)) = (lhs, rhs) {
                let ea = resolve_element(&input, a)?;
                let eb = resolve_element(&input, b)?;
                let v = d.chen_ruan_pairing(&ea, &eb)?;
                out.insert("value".into(), scalar_json(&v));
            }
            Value::Object(out)
        }

        Command::Gamma { spec, class } => {
            let input = loader.orbifold(&spec.spec)?;
            let k = resolve_class(&input, class)?;
            let g = gamma_class(&k, &input.datum)?;
            json!({ "class": k.label, "gamma": element_json(&g) })
        }

        Command::Chern { spec, class } => {
            let input = loader.orbifold(&spec.spec)?;
            let k = resolve_class(&input, class)?;
            let t = k.tch(&input.datum)?;
            json!({ "class": k.label, "tch": element_json(&t) })
        }

        Command::Todd { spec, class } => {
            let input = loader.orbifold(&spec.spec)?;
            let k = resolve_class(&input, class)?;
            let t = todd_class(&k, &input.datum)?;
            json!({ "class": k.label, "todd": element_json(&t) })
        }

        Command::Chi { spec, class } => {
            let input = loader.orbifold(&spec.spec)?;
            let k = resolve_class(&input, class)?;
            let (chi, dist) = kawasaki_chi(&k, &input.datum, tol)?;
            checks.push(Check {
                name: "integrality".into(),
                pass: dist <= tol,
                residual: dist,
            });
            json!({ "class": k.label, "chi": chi.to_string() })
        }

        Command::Psi { spec, class } => {
            let input = loader.orbifold(&spec.spec)?;
            let k = resolve_class(&input, class)?;
            let f = psi_map(&k, &input.datum)?;
            json!({ "class": k.label, "psi": element_json(&f.psi) })
        }

        Command::MukaiCheck { spec, v1, v2 } => {
            let input = loader.orbifold(&spec.spec)?;
            let a = resolve_class(&input, v1)?;
            let b = resolve_class(&input, v2)?;
            let rep = mukai_pairing_check(&a, &b, &input.datum, tol)?;
            checks.push(Check {
                name: "mukai_identity".into(),
                pass: rep.pass,
                residual: rep.residual,
            });
            json!({ "lhs": scalar_json(&rep.lhs), "rhs": scalar_json(&rep.rhs) })
        }

        Command::Galois { spec, xi } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let g = galois_on_sol(d, xi)?;
            let s = sol_pairing_matrix(d);
            let lhs = {
                let gc = oqc_core::galois::galois_on_sol_of(
                    d,
                    d.line_bundle(xi)?,
                    Support::Compact,
                );
                gc.transpose().matmul(&s).matmul(&g)
            };
            let res = lhs.sub(&s).max_abs();
            checks.push(Check {
                name: "sol_pairing_invariance".into(),
                pass: res <= tol,
                residual: res,
            });
            json!({ "xi": xi, "matrix": matrix_json(&g), "sol_pairing": matrix_json(&s) })
        }

        Command::Monodromy(spec) => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let m = z_monodromy(d);
            let mut worst: f64 = 0.0;
            for lb in &d.line_bundles {
                let g = oqc_core::galois::galois_on_sol_of(d, lb, Support::Ordinary);
                worst = worst.max(m.matmul(&g).sub(&g.matmul(&m)).max_abs());
            }
            checks.push(Check {
                name: "commutes_with_galois".into(),
                pass: worst <= tol,
                residual: worst,
            });
            json!({ "matrix": matrix_json(&m) })
        }

        Command::HlCheck(spec) => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let coarse = hl_coarse_check(d);
            let groups = gen_hl_coarse_check(d);
            checks.push(Check {
                name: "hl_coarse".into(),
                pass: coarse,
                residual: 0.0,
            });
            let gen_pass = groups.iter().all(|g| g.pass);
            checks.push(Check {
                name: "generalized_hl_coarse".into(),
                pass: gen_pass,
                residual: 0.0,
            });
            let gj: Vec<Value> = groups
                .iter()
                .map(|g| {
                    json!({
                        "fractional_age": format!("{}", g.fractional_age),
                        "sectors": g.sectors.iter().map(|&v| d.sectors[v].label.clone()).collect::<Vec<_>>(),
                        "n_f": g.n_f.as_ref().map(|x| format!("{}", x)),
                        "pass": g.pass,
                    })
                })
                .collect();
            json!({ "hl_coarse": coarse, "groups": gj })
        }

        Command::Jordan { pair, pair2 } => {
            let p = load_pair(&mut loader, pair)?;
            let t = jordan_type(&p, tol)?;
            let bic = is_bicentric_hl(&p, tol)?;
            let w = weight_filtration(&p, tol)?;
            w.verify(&p, tol)?;
            checks.push(Check {
                name: "weight_filtration_axioms".into(),
                pass: true,
                residual: 0.0,
            });
            let mut out = serde_json::Map::new();
            out.insert(
                "jordan_type".into(),
                Value::Array(
                    t.0.iter()
                        .map(|(a, l)| json!([a, format!("{}", l)]))
                        .collect(),
                ),
            );
            out.insert(
                "bicentric".into(),
                match &bic {
                    Some(b) => json!({ "n": format!("{}", b.n),
                                        "dim_v0": b.v0.iter().map(|s| s.length as usize + 1).sum::<usize>(),
                                        "dim_v1": b.v1.iter().map(|s| s.length as usize + 1).sum::<usize>() }),
                    None => Value::Null,
                },
            );
            out.insert(
                "weight_filtration_dims".into(),
                Value::Array(
                    w.steps
                        .iter()
                        .map(|(k, b)| json!([k, b.len()]))
                        .collect(),
                ),
            );
            if let Some(p2path) = pair2 {
                let p2 = load_pair(&mut loader, p2path)?;
                match graded_iso_witness(&p, &p2, tol)? {
                    WitnessOutcome::Found(phi) => {
                        checks.push(Check {
                            name: "graded_witness".into(),
                            pass: true,
                            residual: 0.0,
                        });
                        out.insert("witness".into(), matrix_json(&phi));
                    }
                    WitnessOutcome::None { reason } => {
                        checks.push(Check {
                            name: "graded_witness".into(),
                            pass: false,
                            residual: f64::INFINITY,
                        });
                        out.insert("witness_failure".into(), Value::String(reason));
                    }
                }
            }
            Value::Object(out)
        }

        Command::Qprod {
            spec,
            table,
            i,
            j,
        } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let t = loader.correlators(&table.correlators, d)?;
            let qp = quantum_product(&t, d, order)?;
            let mut out = serde_json::Map::new();
            match (i, j) {
                (Some(a), Some(b)) => {
                    let ea = resolve_element(&input, a)?;
                    let eb = resolve_element(&input, b)?;
                    let prod = oqc_core::qdm::product_of(&qp, &ea, &eb);
                    out.insert("product".into(), vseries_json(&prod, &d.ordinary));
                }
                _ => {
                    for (idx, m) in qp.mats.iter().enumerate() {
                        let name = &d.ordinary.classes[idx].name;
                        let terms: usize = m.terms.len();
                        out.insert(format!("A[{}]", name), json!({ "terms": terms }));
                    }
                }
            }
            Value::Object(out)
        }

        Command::Wdvv { spec, table } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let t = loader.correlators(&table.correlators, d)?;
            let qp = quantum_product(&t, d, order)?;
            let rep = wdvv_check(&qp, tol);
            checks.push(Check {
                name: "wdvv".into(),
                pass: rep.pass,
                residual: rep.max_residual,
            });
            json!({ "max_residual": rep.max_residual })
        }

        Command::Flatness { spec, table } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let t = loader.correlators(&table.correlators, d)?;
            let qp = quantum_product(&t, d, order)?;
            let conn = connection(d, qp)?;
            let rep = connection_flatness(&conn, tol);
            checks.push(Check {
                name: "flatness".into(),
                pass: rep.pass,
                residual: rep
                    .curl
                    .max(rep.commutators)
                    .max(rep.z_order1)
                    .max(rep.z_order2),
            });
            let rr = residue_product(&conn, tol)?;
            checks.push(Check {
                name: "euler_axiom".into(),
                pass: rr.euler_axiom_residual <= tol,
                residual: rr.euler_axiom_residual,
            });
            checks.push(Check {
                name: "miniversality".into(),
                pass: rr.miniversal,
                residual: 0.0,
            });
            json!({
                "curl": rep.curl,
                "commutators": rep.commutators,
                "z_order1": rep.z_order1,
                "z_order2": rep.z_order2,
                "euler_axiom": rr.euler_axiom_residual,
            })
        }

        Command::Lfun { spec, table } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let t = loader.correlators(&table.correlators, d)?;
            let (_, conn, fund) = build_qdm(d, &t, order, tol)?;
            let ur = unitarity_residual(&fund, d);
            checks.push(Check {
                name: "unitarity".into(),
                pass: ur <= tol,
                residual: ur,
            });
            let _ = &conn;
            json!({
                "terms": fund.l.terms.len(),
                "dual_terms": fund.l_dual.terms.len(),
                "note": "L = series * exp(-(t0 + tau_{0,2})/z); reduced series reported",
            })
        }

        Command::Jfun { spec, table } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let t = loader.correlators(&table.correlators, d)?;
            let (_, _conn, fund) = build_qdm(d, &t, order, tol)?;
            let j = j_function(&fund, d)?;
            json!({ "j": vseries_json(&j, &d.ordinary),
                    "note": "J(tau,-z) reduced: multiply by exp(-(t0 + tau_{0,2})/z)" })
        }

        Command::Flatcoord { spec, table } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let t = loader.correlators(&table.correlators, d)?;
            let (_, _conn, fund) = build_qdm(d, &t, order, tol)?;
            let j = j_function(&fund, d)?;
            let psi = opposite_project(&j, d, tol)?;
            checks.push(Check {
                name: "big_cell".into(),
                pass: true,
                residual: 0.0,
            });
            let flat = psi.map(|c| c.cneg());
            json!({ "psi_z1": vseries_json(&psi, &d.ordinary),
                    "flat_coordinates": vseries_json(&flat, &d.ordinary) })
        }

        Command::Charge {
            spec,
            table,
            class,
            pots,
        } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let t = loader.correlators(&table.correlators, d)?;
            let (_, conn, fund) = build_qdm(d, &t, order, tol)?;
            let k = resolve_class(&input, class)?;
            let cf = central_charge(&k, &conn, &fund, order)?;
            let mut out = serde_json::Map::new();
            out.insert("charge".into(), charge_json(&cf));
            // closed-form comparison on compact CY3 data: infer the sheaf
            // kind from the Chern character and run the displayed formulas
            if d.compact && d.dim == 3 && d.c1.iter().all(|c| c.is_zero()) {
                if let Ok(kind) = oqc_core::charges::infer_cy3_kind(&k, d) {
                    let layout = ChargeVars::new(d, order);
                    let p = match pots {
                        Some(path) => {
                            let js = io::parse_potentials(&loader.read(path)?)?;
                            Some(potential_input(&js, d, &layout)?)
                        }
                        None => None,
                    };
                    let needs_pots = matches!(
                        kind,
                        oqc_core::charges::Cy3Sheaf::Surface { .. }
                            | oqc_core::charges::Cy3Sheaf::Structure
                    );
                    if !needs_pots || p.is_some() {
                        let closed = oqc_core::charges::cy3_sheaf_charges(
                            d,
                            &kind,
                            p.as_ref(),
                            order,
                        )?;
                        let lhs = closed.layout.restrict_h2(d, &cf.series);
                        let res =
                            oqc_core::charges::scaled_series_distance(&lhs, &closed.series);
                        checks.push(Check {
                            name: "closed_form_agreement".into(),
                            pass: res <= tol,
                            residual: res,
                        });
                        out.insert("closed_form".into(), charge_json(&closed));
                    }
                }
            }
            // closed-form comparison for quotient data when a potential or
            // closed form applies
            if let Some(q) = &d.quotient {
                if let Some(charspec) = class.strip_prefix("sky:") {
                    let coeffs = io::parse_virtual_character(d, charspec)?;
                    let closed = match q.spec.dim {
                        2 => Some(charge_c2(d, &coeffs, order)?),
                        3 => {
                            let layout = ChargeVars::new(d, order);
                            let p = match pots {
                                Some(path) => {
                                    let js = io::parse_potentials(&loader.read(path)?)?;
                                    Some(potential_input(&js, d, &layout)?)
                                }
                                None => None,
                            };
                            Some(charge_c3(d, &coeffs, p.as_ref(), order)?)
                        }
                        _ => None,
                    };
                    if let Some(closed) = closed {
                        let lhs = if q.spec.dim == 3 {
                            closed.layout.restrict_h2(d, &cf.series)
                        } else {
                            cf.series.clone()
                        };
                        let res =
                            oqc_core::charges::scaled_series_distance(&lhs, &closed.series);
                        checks.push(Check {
                            name: "closed_form_agreement".into(),
                            pass: res <= tol,
                            residual: res,
                        });
                        out.insert("closed_form".into(), charge_json(&closed));
                    }
                }
            }
            Value::Object(out)
        }

        Command::Period { spec, table, class } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let t = loader.correlators(&table.correlators, d)?;
            let (_, conn, fund) = build_qdm(d, &t, order, tol)?;
            let k = resolve_class(&input, class)?;
            let framed = psi_map(&k, d)?;
            let p = integral_period(&framed, &conn, &fund, order)?;
            // Pi must agree with the central charge on the restricted locus
            let cf = central_charge(&k, &conn, &fund, order)?;
            let z_h2 = cf.layout.restrict_h2(d, &cf.series);
            let res = oqc_core::charges::scaled_series_distance(&p.series, &z_h2);
            checks.push(Check {
                name: "period_equals_charge".into(),
                pass: res <= tol,
                residual: res,
            });
            json!({ "period": charge_json(&p) })
        }

        Command::Predict {
            spec,
            fm,
            pots,
            crossref,
        } => {
            let input = loader.orbifold(&spec.spec)?;
            let d = &input.datum;
            let fmjson = io::parse_fm(&loader.read(fm)?)?;
            let assign = fm_assignment(&fmjson, d)?;
            let layout = ChargeVars::new(d, order);
            let p = match pots {
                Some(path) => {
                    let js = io::parse_potentials(&loader.read(path)?)?;
                    Some(potential_input(&js, d, &layout)?)
                }
                None => None,
            };
            let cc = predict_coordinate_change(&assign, d, p.as_ref(), order)?;
            let curves: Vec<Value> = cc
                .curves
                .iter()
                .map(|c| {
                    json!({
                        "label": c.label,
                        "dim": c.dim,
                        "tau": sseries_json(&c.tau),
                        "q": scalar_json(&c.q_value),
                    })
                })
                .collect();
            for c in &cc.curves {
                checks.push(Check {
                    name: format!("q_specialization[{}]", c.label),
                    pass: c.q_residual <= tol,
                    residual: c.q_residual,
                });
            }
            if *crossref {
                let y: Vec<(String, oqc_core::crepant::YSideCharge)> = assign
                    .curves
                    .iter()
                    .map(|c| (c.label.clone(), oqc_core::crepant::YSideCharge::CurveOMinusOne))
                    .collect();
                let rep = crossref_central_charges(
                    &y, &assign, &assign, d, p.as_ref(), order, tol,
                )?;
                for c in &rep.curves {
                    checks.push(Check {
                        name: format!("crossref[{}]", c.label),
                        pass: c.sign.is_some(),
                        residual: c.residual,
                    });
                }
            }
            json!({ "curves": curves })
        }

        Command::ValidateU { u, spec1, spec2 } => {
            let i1 = loader.orbifold(spec1)?;
            let i2 = loader.orbifold(spec2)?;
            let ujson = io::parse_transform(&loader.read(u)?)?;
            let transform = ExternalTransform::from_json(&ujson)?;
            let rep = validate_transform(&transform, &i1.datum, &i2.datum, &[], tol)?;
            for c in &rep.checks {
                checks.push(Check {
                    name: c.name.clone(),
                    pass: c.pass,
                    residual: c.residual,
                });
            }
            json!({ "pass": rep.pass })
        }
    };

    let mut parameters = BTreeMap::new();
    parameters.insert("order".into(), order.to_string());
    parameters.insert("tolerance".into(), format!("{:e}", tol));
    parameters.insert("precision_requested".into(), cli.precision.to_string());
    parameters.insert(
        "precision_effective".into(),
        EFFECTIVE_DIGITS.min(cli.precision).to_string(),
    );

    Ok(Report {
        command: command.name().to_string(),
        parameters,
        inputs: loader.inputs,
        results,
        checks,
        timing_ms: if cli.timing {
            Some(start.elapsed().as_millis())
        } else {
            None
        },
    })
}

fn load_pair(loader: &mut Loader, path: &Path) -> Result<GradedNilpotentPair> {
    let json = io::parse_hlpair(&loader.read(path)?)?;
    let degrees = json
        .degrees
        .iter()
        .map(|s| {
            oqc_core::scalar::parse_rat(s)
                .ok_or_else(|| Error::schema("$.degrees", "expected rationals"))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = degrees.len();
    if json.omega.len() != n || json.omega.iter().any(|r| r.len() != n) {
        return Err(Error::schema("$.omega", "matrix shape mismatch"));
    }
    let mut m = Mat::zeros(n, n);
    for (i, row) in json.omega.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = e.to_scalar(&format!("$.omega[{}][{}]", i, j))?;
        }
    }
    GradedNilpotentPair::new(degrees, m)
}

// ---------------------------------------------------------------------------
// output
// ---------------------------------------------------------------------------

pub fn render_report(report: &Report, as_table: bool) -> String {
    if !as_table {
        return serde_json::to_string_pretty(report).expect("report serialization");
    }
    let mut out = String::new();
    out.push_str(&format!("command: {}\n", report.command));
    for (k, v) in &report.parameters {
        out.push_str(&format!("  {:<22} {}\n", k, v));
    }
    out.push_str("results:\n");
    render_value(&report.results, 1, &mut out);
    if !report.checks.is_empty() {
        out.push_str("checks:\n");
        for c in &report.checks {
            out.push_str(&format!(
                "  {:<32} {:<5} residual {:.3e}\n",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.residual
            ));
        }
    }
    out
}

fn render_value(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, val) in map {
                match val {
                    Value::Object(_) | Value::Array(_) => {
                        out.push_str(&format!("{}{}:\n", pad, k));
                        render_value(val, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{}{:<24} {}\n", pad, k, val)),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        render_value(item, indent + 1, out);
                    }
                    _ => out.push_str(&format!("{}- {}\n", pad, item)),
                }
            }
        }
        _ => out.push_str(&format!("{}{}\n", pad, v)),
    }
}

/// Schema documentation served by `--schema`.
pub fn schema_text(name: &str) -> Option<&'static str> {
    match name {
        "orbifold" => Some(include_str!("schemas/orbifold.txt")),
        "correlators" => Some(include_str!("schemas/correlators.txt")),
        "potentials" => Some(include_str!("schemas/potentials.txt")),
        "fm" => Some(include_str!("schemas/fm.txt")),
        "transform" => Some(include_str!("schemas/transform.txt")),
        "hlpair" => Some(include_str!("schemas/hlpair.txt")),
        _ => None,
    }
}

/// Exit code for an error per the CLI contract.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::Schema { .. } => 2,
        _ => 1,
    }
}
