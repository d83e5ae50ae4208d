//! `bordertn`: JSON in, JSON out front-end for the library.

use bordertn::boundary::{
    contract_sandwich, cost_exact_rvb, cost_kagome, cost_square, random_kagome_network, random_square_network,
    ContractOptions, CostModel, KagomeDims, PepsNetwork,
};
use bordertn::conversions::{
    analyze_degeneration, apply_restriction, lift_to_lattice, DegenerationCertificate, LocalMapFamily, SYMBOLIC_BUDGET,
};
use bordertn::interpolation::{
    expectation_complex, expectation_degree, expectation_real, reconstruct_state, InterpolationPlan, SampleMode,
    DEFAULT_RADIUS,
};
use bordertn::json::complex_to_pair;
use bordertn::observable::Observable;
use bordertn::structures::{
    cycle_structure, kagome_lambda_structure, kagome_mamu_structure, make_plaquette, path_structure,
    single_edge_structure, square_bond_structure, square_ghz_structure, w_state, EntanglementStructure, Plaquette,
};
use bordertn::tensor::{poly_apply, DenseTensor, MatrixPoly};
use bordertn::zoo::{
    catalogue, check_w_traces, diag_mamu_to_ghz, lambda_degeneration_222, lambda_restriction_223,
    lambda_restriction_333, mamu4_to_ghz, optimal_g_mamu, w_border_mps, w_product_sample, DiagonalDegeneration,
    RvbPatch,
};
use bordertn::{Error, Result, C64};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "bordertn", version, about = "Entanglement structures, degenerations and boundary-MPS contraction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative tolerance for certificates and checks.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Build an entanglement structure, or validate one from a file.
    Build(BuildArgs),
    /// List the explicit constructions, or emit one with its certificate.
    Zoo(ZooArgs),
    /// Certify a degeneration or restriction.
    Verify(VerifyArgs),
    /// Recover `T(0)` from samples of `T(ε)`.
    Reconstruct(InterpArgs),
    /// Interpolated `⟨T|O|T⟩`.
    Expect(ExpectArgs),
    /// Boundary-MPS contraction of `⟨T|O|T⟩`.
    Contract(ContractArgs),
    /// Evaluate the contraction cost models.
    Cost(CostArgs),
    /// Border representation of the kagome RVB state, end to end.
    DemoRvb(DemoRvbArgs),
    /// W state from its border representations.
    DemoW(DemoWArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum LatticeKind {
    Cycle,
    Path,
    Square,
    SquareGhz,
    KagomeLambda,
    KagomeMamu,
}

#[derive(Args, Clone, Debug)]
struct LatticeArgs {
    #[arg(long, value_enum)]
    lattice: Option<LatticeKind>,
    #[arg(long, default_value_t = 4)]
    len: usize,
    /// Bond dimension of cycles and paths.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 2)]
    lx: usize,
    #[arg(long, default_value_t = 2)]
    ly: usize,
    #[arg(long = "D1", default_value_t = 2)]
    d1: usize,
    #[arg(long = "D2", default_value_t = 2)]
    d2: usize,
    /// GHZ level of square faces.
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    rows: usize,
    #[arg(long, default_value_t = 2)]
    cols: usize,
    /// Bonds of up triangles.
    #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
    up: Vec<usize>,
    /// Bonds of down triangles.
    #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
    down: Vec<usize>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    lattice: LatticeArgs,
    #[arg(long)]
    structure: Option<PathBuf>,
}

#[derive(Args)]
struct ZooArgs {
    /// Construction name; omit to list them.
    name: Option<String>,
    #[command(flatten)]
    params: ZooParams,
}

#[derive(Args, Clone, Debug)]
struct ZooParams {
    /// Length of the W cycle.
    #[arg(long = "L", default_value_t = 4)]
    l: usize,
    /// Bond dimensions of a MaMu plaquette.
    #[arg(long, value_delimiter = ',', default_value = "2,2,3")]
    dims: Vec<usize>,
    /// Inhomogeneity (1-based); defaults to the best one.
    #[arg(long, allow_hyphen_values = true)]
    g: Option<i64>,
    /// Local dimension of MaMu[4](k).
    #[arg(long = "kdim", default_value_t = 3)]
    kdim: usize,
    #[arg(long, default_value_t = 1)]
    rows: usize,
    #[arg(long, default_value_t = 2)]
    cols: usize,
}

#[derive(Args)]
struct VerifyArgs {
    /// Built-in name or a family file.
    #[arg(long)]
    family: String,
    #[arg(long)]
    structure: Option<PathBuf>,
    /// Target tensor, or a structure whose tensor is the target.
    #[arg(long)]
    target: Option<PathBuf>,
    #[command(flatten)]
    params: ZooParams,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Real,
    Complex,
}

impl From<Mode> for SampleMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Real => SampleMode::Real,
            Mode::Complex => SampleMode::Complex,
        }
    }
}

#[derive(Args)]
struct InterpArgs {
    /// Built-in name or a family file.
    #[arg(long)]
    family: String,
    #[arg(long)]
    structure: Option<PathBuf>,
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Complex)]
    mode: Mode,
    /// Number of sample points; more than degree + 1 fits by least squares.
    #[arg(long)]
    points: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: f64,
    /// Lowest power of ε in the family's state; computed if omitted.
    #[arg(long)]
    shift: Option<u32>,
    /// Degree of `T(ε)`; computed if omitted.
    #[arg(long)]
    degree: Option<usize>,
    #[command(flatten)]
    params: ZooParams,
}

#[derive(Args)]
struct ExpectArgs {
    #[command(flatten)]
    interp: InterpArgs,
    /// Observable file, or `identity`.
    #[arg(long, default_value = "identity")]
    observable: String,
    /// Boundary bond dimension; exact when omitted.
    #[arg(long)]
    chi: Option<usize>,
}

#[derive(Args)]
struct ContractArgs {
    #[arg(long)]
    structure: Option<PathBuf>,
    /// Family file evaluated at `--eps`; identity maps when omitted.
    #[arg(long)]
    family: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "1,0")]
    eps: Vec<f64>,
    #[arg(long, default_value = "identity")]
    observable: String,
    #[arg(long, conflicts_with = "exact")]
    chi: Option<usize>,
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    one_sided: bool,
    /// Random network on a square or kagome-mamu lattice instead of a structure.
    #[command(flatten)]
    lattice: LatticeArgs,
    /// Physical dimension of random networks.
    #[arg(long, default_value_t = 2)]
    d: usize,
}

#[derive(Args)]
struct CostArgs {
    #[arg(long, group = "model")]
    square: bool,
    #[arg(long, group = "model")]
    kagome: bool,
    #[arg(long = "exact-rvb", group = "model")]
    exact_rvb: bool,
    #[arg(long, default_value_t = 4.0)]
    chi: f64,
    #[arg(long = "D1", default_value_t = 2.0)]
    d1: f64,
    #[arg(long = "D2", default_value_t = 2.0)]
    d2: f64,
    #[arg(long, default_value_t = 2.0)]
    d: f64,
    #[arg(long = "Cmm", default_value_t = 1.0)]
    c_mm: f64,
    #[arg(long = "Csvd", default_value_t = 1.0)]
    c_svd: f64,
    /// Ket up / bra up / ket down / bra down triangle bonds (`K↑ K↓ D↑ D↓`).
    #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
    k_up: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    k_down: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
    d_up: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    d_down: Option<Vec<f64>>,
    #[arg(long = "L", default_value_t = 2)]
    l: u32,
    /// Bond dimension for the exact RVB estimate.
    #[arg(long = "D", default_value_t = 3.0)]
    bond: f64,
    /// Error degree per plaquette.
    #[arg(long, default_value_t = 2)]
    e: u32,
}

#[derive(Args)]
struct DemoRvbArgs {
    #[arg(long, default_value_t = 1)]
    rows: usize,
    #[arg(long, default_value_t = 2)]
    cols: usize,
    #[arg(long)]
    chi: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Complex)]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: f64,
}

#[derive(Args)]
struct DemoWArgs {
    #[arg(long = "L", default_value_t = 4)]
    l: usize,
    #[arg(long, default_value_t = DEFAULT_RADIUS)]
    radius: f64,
}

fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// A value stored either bare or under `key` (as the `zoo` reports do).
fn field(v: &Value, key: &str) -> Value {
    v.get(key).cloned().unwrap_or_else(|| v.clone())
}

fn load_structure(path: &Path) -> Result<EntanglementStructure> {
    Ok(serde_json::from_value(field(&read_json(path)?, "structure"))?)
}

fn load_observable(arg: &str) -> Result<Observable> {
    if arg == "identity" {
        return Ok(Observable::Identity);
    }
    Ok(serde_json::from_value(field(&read_json(Path::new(arg))?, "observable"))?)
}

fn to_array<const N: usize, T: Copy>(v: &[T], what: &str) -> Result<[T; N]> {
    v.try_into().map_err(|_| Error::InvalidArgument(format!("{what} needs {N} values, got {}", v.len())))
}

fn build_lattice(a: &LatticeArgs) -> Result<EntanglementStructure> {
    let kind = a.lattice.ok_or_else(|| Error::InvalidArgument("pass --lattice or --structure".into()))?;
    match kind {
        LatticeKind::Cycle => cycle_structure(a.len, a.dim),
        LatticeKind::Path => path_structure(a.len, a.dim),
        LatticeKind::Square => square_bond_structure(a.lx, a.ly, a.d1, a.d2),
        LatticeKind::SquareGhz => square_ghz_structure(a.lx, a.k),
        LatticeKind::KagomeLambda => kagome_lambda_structure(a.rows, a.cols),
        LatticeKind::KagomeMamu => {
            kagome_mamu_structure(a.rows, a.cols, to_array(&a.up, "--up")?, to_array(&a.down, "--down")?)
        }
    }
}

fn structure_summary(s: &EntanglementStructure) -> Value {
    json!({
        "vertices": s.vertices().len(),
        "edges": s.hypergraph().edges().len(),
        "bond_dimension": s.bond_dimension(),
        "dense_size": s.dense_size(),
    })
}

fn cmd_build(a: &BuildArgs) -> Result<Value> {
    let s = match &a.structure {
        Some(p) => load_structure(p)?,
        None => build_lattice(&a.lattice)?,
    };
    Ok(json!({ "summary": structure_summary(&s), "structure": s }))
}

/// A family acting on a structure, with the shift and degree of `ε^{-shift}·state`.
struct Family {
    name: String,
    structure: EntanglementStructure,
    family: LocalMapFamily,
    shift: u32,
    degree: usize,
    target: Option<(String, DenseTensor)>,
    extra: Value,
}

fn lambda_on(legs: &str) -> Result<DenseTensor> {
    let t = make_plaquette(&Plaquette::Lambda, "t")?;
    let names = legs.to_string();
    t.relabel_with(|id| format!("{names}{}", &id[2..]))
}

fn ghz_report(deg: &DiagonalDegeneration, tol: f64) -> Result<Value> {
    let check = deg.ghz_check(tol)?;
    if !check.ok {
        return Err(Error::Certificate(check.diagnostic.unwrap_or_else(|| "not a GHZ state".into())));
    }
    Ok(json!({
        "dims": deg.dims,
        "g": deg.g,
        "solutions": deg.solutions.solutions,
        "level": deg.solutions.solutions.len(),
        "d": deg.d,
        "e": deg.e,
        "ranks": check.ranks,
    }))
}

fn builtin(name: &str, p: &ZooParams, tol: f64) -> Result<Family> {
    let key = name.replace('_', "-");
    let key = key.trim_end_matches("-222");
    let fam = |name: &str, structure, family, shift, degree, target| Family {
        name: name.into(),
        structure,
        family,
        shift,
        degree,
        target,
        extra: Value::Null,
    };
    Ok(match key {
        "w" => {
            let (s, f) = w_border_mps(p.l)?;
            check_w_traces(p.l, tol)?;
            let target = w_state(p.l)?;
            fam("w", s, f, 1, p.l - 1, Some(("w".into(), target)))
        }
        "lambda-restriction-223" | "lambda-restriction-333" => {
            let triple = if key.ends_with("223") { lambda_restriction_223() } else { lambda_restriction_333() };
            let (s, f) = triple.restriction_family()?;
            fam(key, s, f, 0, 0, Some(("lambda".into(), lambda_on("p")?)))
        }
        "lambda-degeneration" => {
            let s = single_edge_structure(Plaquette::Mamu { dims: vec![2, 2, 2] })?;
            let lifted = lift_to_lattice(&lambda_degeneration_222()?, &s)?;
            fam(key, s, lifted.family, lifted.d_total, lifted.e_total as usize, Some(("lambda".into(), lambda_on("p")?)))
        }
        "rvb" => {
            let patch = RvbPatch::new(p.rows, p.cols)?;
            let target = patch.target()?;
            let (shift, degree) = (patch.shift(), patch.degree());
            fam("rvb", patch.resource, patch.lifted.family, shift, degree, Some(("lambda".into(), target)))
        }
        "mamu3-ghz" => {
            let dims: [usize; 3] = to_array(&p.dims, "--dims")?;
            let g = p.g.unwrap_or_else(|| optimal_g_mamu(dims).0);
            let deg = diag_mamu_to_ghz(dims, g)?;
            let mut f = fam(key, deg.structure()?, deg.family()?, deg.d, deg.e as usize, None);
            f.extra = ghz_report(&deg, tol)?;
            f
        }
        "mamu4-ghz" => {
            let deg = mamu4_to_ghz(p.kdim)?;
            let mut f = fam(key, deg.structure()?, deg.family()?, deg.d, deg.e as usize, None);
            f.extra = ghz_report(&deg, tol)?;
            f
        }
        _ => return Err(Error::InvalidArgument(format!("unknown construction `{name}`"))),
    })
}

/// Lowest and highest significant power of ε in `(⊗ A_v(ε)) Ψ`.
fn exponent_range(s: &EntanglementStructure, f: &LocalMapFamily, tol: f64) -> Result<(u32, usize)> {
    let terms: usize = f.maps().values().map(|m| m.degree() as usize).sum::<usize>() + 1;
    let estimate = s.dense_size().saturating_mul(terms);
    if estimate > SYMBOLIC_BUDGET * 8 {
        return Err(Error::BudgetExceeded(format!(
            "degree detection needs about {estimate} entries; pass --shift and --degree"
        )));
    }
    let pairs: Vec<(&str, &MatrixPoly)> = f.maps().iter().map(|(v, m)| (v.as_str(), m)).collect();
    let poly = poly_apply(&s.tensor()?, &pairs)?;
    let exps = poly.significant_exponents(tol);
    match (exps.first(), exps.last()) {
        (Some(&lo), Some(&hi)) => Ok((lo, (hi - lo) as usize)),
        _ => Err(Error::ZeroPolynomial),
    }
}

fn load_family(arg: &str, structure: Option<&Path>, target: Option<&Path>, p: &ZooParams, tol: f64) -> Result<Family> {
    let path = Path::new(arg);
    if !path.exists() {
        let mut f = builtin(arg, p, tol)?;
        if let Some(t) = target {
            f.target = Some(("file".into(), load_target(t)?));
        }
        return Ok(f);
    }
    let v = read_json(path)?;
    let family: LocalMapFamily = serde_json::from_value(field(&v, "family"))?;
    let s = match (structure, v.get("structure")) {
        (Some(p), _) => load_structure(p)?,
        (None, Some(s)) => serde_json::from_value(s.clone())?,
        (None, None) => return Err(Error::InvalidArgument("family file has no structure; pass --structure".into())),
    };
    family.check_against(&s)?;
    let stored = (v.get("shift").and_then(Value::as_u64), v.get("degree").and_then(Value::as_u64));
    let (shift, degree) = match stored {
        (Some(a), Some(b)) => (a as u32, b as usize),
        _ => exponent_range(&s, &family, tol)?,
    };
    let target = target.map(|t| Ok::<_, Error>(("file".into(), load_target(t)?))).transpose()?;
    Ok(Family { name: arg.into(), structure: s, family, shift, degree, target, extra: Value::Null })
}

fn load_target(path: &Path) -> Result<DenseTensor> {
    let v = read_json(path)?;
    if v.get("structure").is_some() || v.get("plaquettes").is_some() {
        let s: EntanglementStructure = serde_json::from_value(field(&v, "structure"))?;
        return s.tensor();
    }
    Ok(serde_json::from_value(field(&v, "tensor"))?)
}

fn certificate_json(cert: &DegenerationCertificate) -> Value {
    let mut v = serde_json::to_value(cert.report()).expect("report serializes");
    v["proportionality"] = json!(cert.proportionality.re);
    v["proportionality_im"] = json!(cert.proportionality.im);
    v
}

/// Certificate of `f` against its target, re-verified before it is returned.
fn certify(f: &Family, tol: f64) -> Result<Option<(String, DegenerationCertificate)>> {
    let Some((label, target)) = &f.target else { return Ok(None) };
    let psi = f.structure.tensor()?;
    let cert = analyze_degeneration(&psi, &f.family, target, tol)?;
    cert.verify(target, tol)?;
    Ok(Some((label.clone(), cert)))
}

fn cmd_zoo(a: &ZooArgs, tol: f64) -> Result<Value> {
    let Some(name) = &a.name else {
        let mut list = serde_json::to_value(catalogue())?;
        list["rvb"] = json!("kagome RVB patch from MaMu(2,2,2) on every triangle (--rows, --cols)");
        return Ok(json!({ "constructions": list }));
    };
    let f = builtin(name, &a.params, tol)?;
    let cert = if f.structure.dense_size() <= SYMBOLIC_BUDGET { certify(&f, tol)? } else { None };
    let mut out = json!({
        "name": f.name,
        "structure": f.structure,
        "family": f.family,
        "shift": f.shift,
        "degree": f.degree,
    });
    if let Some((label, c)) = cert {
        out["certificate"] = certificate_json(&c);
        out["certificate"]["leading"] = json!(label);
    }
    if !f.extra.is_null() {
        out["ghz"] = f.extra;
    }
    Ok(out)
}

fn cmd_verify(a: &VerifyArgs, tol: f64) -> Result<Value> {
    let f = load_family(&a.family, a.structure.as_deref(), a.target.as_deref(), &a.params, tol)?;
    if !f.extra.is_null() {
        return Ok(json!({ "family": f.name, "ghz": f.extra, "verified": true }));
    }
    let (label, cert) =
        certify(&f, tol)?.ok_or_else(|| Error::InvalidArgument("no target to verify against; pass --target".into()))?;
    let mut out = certificate_json(&cert);
    out["leading"] = json!(label);
    out["family"] = json!(f.name);
    out["verified"] = json!(true);
    Ok(out)
}

fn plan_for(mode: Mode, degree: usize, points: Option<usize>, radius: f64) -> Result<InterpolationPlan> {
    InterpolationPlan::with_count(mode.into(), degree, points.unwrap_or(degree + 1), radius)
}

fn shifted(eps: C64, shift: u32) -> C64 {
    eps.powi(-(shift as i32))
}

fn cmd_reconstruct(a: &InterpArgs, tol: f64) -> Result<Value> {
    let f = load_family(&a.family, a.structure.as_deref(), a.target.as_deref(), &a.params, tol)?;
    let plan = plan_for(a.mode, f.degree, a.points, a.radius)?;
    let psi = f.structure.tensor()?;
    let rec = reconstruct_state(&plan, |x| Ok(apply_restriction(&psi, &f.family.evaluate(x))?.scaled(shifted(x, f.shift))))?;
    let mut out = json!({
        "family": f.name,
        "shift": f.shift,
        "degree": f.degree,
        "plan": rec.plan,
        "condition": rec.plan.condition(),
        "holdout_error": rec.holdout_error,
        "warnings": rec.plan.warnings(),
        "state": rec.state,
    });
    if let Some((label, target)) = &f.target {
        let got = rec.state.permuted(&target.leg_ids())?;
        out["target"] = json!(label);
        out["relative_error"] = json!(got.sub(target)?.norm() / target.norm());
    }
    Ok(out)
}

fn cmd_expect(a: &ExpectArgs, tol: f64) -> Result<Value> {
    let i = &a.interp;
    let f = load_family(&i.family, i.structure.as_deref(), i.target.as_deref(), &i.params, tol)?;
    let obs = load_observable(&a.observable)?;
    let plan = plan_for(i.mode, expectation_degree(f.degree), i.points, i.radius)?;
    let ops = obs.site_operators();
    let psi = if ops.is_none() { Some(f.structure.tensor()?) } else { None };
    let value = |b: C64, k: C64| -> Result<C64> {
        let scale = shifted(b, f.shift).conj() * shifted(k, f.shift);
        match (&ops, &psi) {
            (Some(ops), _) => {
                let ket = PepsNetwork::from_structure(&f.structure, &f.family.evaluate(k))?;
                let bra = PepsNetwork::from_structure(&f.structure, &f.family.evaluate(b))?;
                let opts = ContractOptions { chi: a.chi, two_sided: true, operators: ops.clone() };
                Ok(contract_sandwich(&ket, &bra, &opts)?.value * scale)
            }
            (None, Some(psi)) => {
                let ket = apply_restriction(psi, &f.family.evaluate(k))?;
                let bra = apply_restriction(psi, &f.family.evaluate(b))?;
                Ok(obs.expectation(&bra, &ket)? * scale)
            }
            (None, None) => unreachable!("dense state is built for dense observables"),
        }
    };
    let res = match i.mode {
        Mode::Real => expectation_real(&plan, value)?,
        Mode::Complex => expectation_complex(&plan, value)?,
    };
    Ok(json!({
        "family": f.name,
        "value": complex_to_pair(res.value),
        "points": res.plan.points.iter().map(|p| complex_to_pair(*p)).collect::<Vec<_>>(),
        "weights": res.plan.weights.iter().map(|p| complex_to_pair(*p)).collect::<Vec<_>>(),
        "per_point": res.per_point.iter().map(|p| complex_to_pair(*p)).collect::<Vec<_>>(),
        "condition": res.condition,
        "max_weight": res.max_weight,
        "holdout_error": res.holdout_error,
        "warnings": res.warnings,
    }))
}

fn identity_maps(s: &EntanglementStructure) -> Result<BTreeMap<String, DMatrix<C64>>> {
    s.vertices().iter().map(|v| Ok((v.clone(), DMatrix::identity(s.vertex_dim(v)?, s.vertex_dim(v)?)))).collect()
}

fn cmd_contract(a: &ContractArgs, seed: u64) -> Result<Value> {
    if a.chi == Some(0) {
        return Err(Error::InvalidArgument("chi must be at least 1".into()));
    }
    let obs = load_observable(&a.observable)?;
    let operators = obs
        .site_operators()
        .ok_or_else(|| Error::InvalidArgument("contract supports product observables only".into()))?;
    let (ket, bra) = match (&a.structure, a.lattice.lattice) {
        (Some(path), _) => {
            let s = load_structure(path)?;
            let maps = match &a.family {
                Some(fp) => {
                    let fam: LocalMapFamily = serde_json::from_value(field(&read_json(fp)?, "family"))?;
                    let [re, im]: [f64; 2] = to_array(&a.eps, "--eps")?;
                    fam.evaluate(C64::new(re, im))
                }
                None => identity_maps(&s)?,
            };
            let net = PepsNetwork::from_structure(&s, &maps)?;
            (net.clone(), net)
        }
        (None, Some(LatticeKind::Square)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = &a.lattice;
            let ket = random_square_network(l.lx, l.ly, l.d1, l.d2, a.d, &mut rng)?;
            (ket.clone(), ket)
        }
        (None, Some(LatticeKind::KagomeMamu)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let l = &a.lattice;
            let ket = random_kagome_network(l.rows, l.cols, to_array(&l.up, "--up")?, to_array(&l.down, "--down")?, a.d, &mut rng)?;
            (ket.clone(), ket)
        }
        _ => return Err(Error::InvalidArgument("pass --structure, or --lattice square|kagome-mamu".into())),
    };
    let opts = ContractOptions { chi: a.chi, two_sided: !a.one_sided, operators };
    Ok(serde_json::to_value(contract_sandwich(&ket, &bra, &opts)?)?)
}

fn cmd_cost(a: &CostArgs) -> Result<Value> {
    let m = CostModel { c_mm: a.c_mm, c_svd: a.c_svd, chi: a.chi, d: a.d };
    if a.exact_rvb {
        let c = cost_exact_rvb(a.l, a.bond, a.d, a.e);
        return Ok(json!({ "model": "exact_rvb", "L": a.l, "D": a.bond, "exact": c.exact, "degeneration": c.degeneration }));
    }
    if a.kagome {
        let k_up: [f64; 3] = to_array(&a.k_up, "--k-up")?;
        let d_up: [f64; 3] = to_array(&a.d_up, "--d-up")?;
        let k_down = a.k_down.as_deref().map(|v| to_array(v, "--k-down")).transpose()?.unwrap_or(k_up);
        let d_down = a.d_down.as_deref().map(|v| to_array(v, "--d-down")).transpose()?.unwrap_or(d_up);
        let dims = KagomeDims { k_up, k_down, d_up, d_down };
        return Ok(json!({ "model": "kagome", "cost": cost_kagome(&m, &dims), "chi": a.chi }));
    }
    if !a.square {
        return Err(Error::InvalidArgument("pass --square, --kagome or --exact-rvb".into()));
    }
    Ok(json!({ "model": "square", "cost": cost_square(&m, a.d1, a.d2), "chi": a.chi }))
}

fn cmd_demo_rvb(a: &DemoRvbArgs, tol: f64) -> Result<Value> {
    let patch = RvbPatch::new(a.rows, a.cols)?;
    let deg = expectation_degree(patch.degree());
    let plan = InterpolationPlan::new(a.mode.into(), deg, a.radius)?;
    let ops = BTreeMap::new();
    let value = |b: C64, k: C64| patch.sandwich(b, k, &ops, a.chi);
    let res = match a.mode {
        Mode::Real => expectation_real(&plan, value)?,
        Mode::Complex => expectation_complex(&plan, value)?,
    };
    let mut out = json!({
        "rows": a.rows,
        "cols": a.cols,
        "triangles": a.rows * a.cols,
        "shift": patch.shift(),
        "state_degree": patch.degree(),
        "norm_sq": complex_to_pair(res.value),
        "samples": res.plan.points.len(),
        "condition": res.condition,
        "holdout_error": res.holdout_error,
    });
    if patch.resource.dense_size() <= SYMBOLIC_BUDGET {
        let target = patch.target()?;
        let want = target.norm_sqr();
        let rel = (res.value - want).norm() / want;
        if rel > tol.max(1e-8) {
            return Err(Error::Certificate(format!("interpolated norm misses the dense value by {rel:.3e}")));
        }
        out["dense_norm_sq"] = json!(want);
        out["relative_error"] = json!(rel);
    }
    Ok(out)
}

fn cmd_demo_w(a: &DemoWArgs, tol: f64) -> Result<Value> {
    check_w_traces(a.l, tol)?;
    let w = w_state(a.l)?;
    let plan = InterpolationPlan::new(SampleMode::Complex, a.l - 1, a.radius)?;
    let product = reconstruct_state(&plan, |x| w_product_sample(a.l, x))?;
    let (s, fam) = w_border_mps(a.l)?;
    let psi = s.tensor()?;
    let mps = reconstruct_state(&plan, |x| Ok(apply_restriction(&psi, &fam.evaluate(x))?.scaled(x.inv())))?;
    let err = |t: &DenseTensor| -> Result<f64> { t.permuted(&w.leg_ids())?.max_abs_diff(&w) };
    let (e1, e2) = (err(&product.state)?, err(&mps.state)?);
    if e1.max(e2) > tol.max(1e-10) {
        return Err(Error::Certificate(format!("W reconstruction error {:.3e}", e1.max(e2))));
    }
    Ok(json!({
        "L": a.l,
        "samples": plan.points.len(),
        "product_family_error": e1,
        "border_mps_error": e2,
        "traces": "tr(M0^L) = 0, tr(M0^n M1^m) = eps^m",
    }))
}

fn run(cli: &Cli) -> Result<Value> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", cli.tol)));
    }
    match &cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Zoo(a) => cmd_zoo(a, cli.tol),
        Command::Verify(a) => cmd_verify(a, cli.tol),
        Command::Reconstruct(a) => cmd_reconstruct(a, cli.tol),
        Command::Expect(a) => cmd_expect(a, cli.tol),
        Command::Contract(a) => cmd_contract(a, cli.seed),
        Command::Cost(a) => cmd_cost(a),
        Command::DemoRvb(a) => cmd_demo_rvb(a, cli.tol),
        Command::DemoW(a) => cmd_demo_w(a, cli.tol),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let message = e.render().to_string();
            let message = message.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", json!({ "error": { "kind": "usage", "message": message } }));
            return ExitCode::from(2);
        }
    };
    let result = run(&cli).and_then(|v| {
        let text = serde_json::to_string_pretty(&v)?;
        match &cli.out {
            Some(p) => std::fs::write(p, text + "\n")?,
            None => println!("{text}"),
        }
        Ok(())
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let report = json!({ "error": { "kind": e.kind(), "message": e.to_string() } });
            eprintln!("{report}");
            ExitCode::from(2)
        }
    }
}
