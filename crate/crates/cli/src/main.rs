use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use dfsctl_core::codes::{self, CodeDescriptor, SearchSpec, SubsystemCode};
use dfsctl_core::commutant::{commutant_structure, interaction_algebra, CommutantStructure};
use dfsctl_core::liealg::{self, analyze_scheme, Standard};
use dfsctl_core::linalg::{self, CMat, RMat};
use dfsctl_core::pstatic::{compute_difs, restrict_controls, PStaticScheme};
use dfsctl_core::sim::{self, ControlField, Diagnostics, SimOptions};
use dfsctl_core::{Error, GModel, IonParams, LindbladModel, Result, Tolerances};

#[derive(Parser)]
#[command(name = "dfsctl", version, about = "Noiseless subsystem codes and their controllability under P-static control")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Tolerance override, e.g. `--tol rank=1e-10`. Repeatable.
    #[arg(long = "tol", global = true, value_name = "NAME=VALUE")]
    tol: Vec<String>,
    /// Output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the trapped-ion example model.
    IonModel {
        #[arg(long, default_value_t = 5)]
        ions: usize,
    },
    /// Convert a model to its coherence-vector form (sparse triplets).
    Convert {
        #[arg(long)]
        model: PathBuf,
        /// Entries with magnitude at or below this are dropped.
        #[arg(long, default_value_t = 1e-14)]
        threshold: f64,
    },
    /// Sector structure of the noise commutant.
    Commutant {
        #[arg(long)]
        model: PathBuf,
    },
    /// Derive a subsystem code, or search for controllable ones.
    Codes(CodesArgs),
    /// Drift-invariant field space of a protected projection.
    Difs {
        #[command(flatten)]
        scheme: SchemeArgs,
    },
    /// Controllability test (L-OC / L-ESC for codes, OC / ESC for closed models).
    Test(TestArgs),
    /// Propagate a code state and write a CSV trajectory.
    Simulate(SimArgs),
}

#[derive(Args, Clone)]
struct SchemeArgs {
    #[arg(long)]
    model: PathBuf,
    /// Host sector (1-based); its core is the protected projection.
    #[arg(long)]
    sector: Option<usize>,
    /// Explicit protected projection (JSON array of column vectors);
    /// overrides the sector core.
    #[arg(long)]
    projection: Option<PathBuf>,
    /// Control channels to use (1-based, comma separated); all by default.
    #[arg(long, value_delimiter = ',')]
    controls: Vec<usize>,
}

#[derive(Args, Clone)]
struct CodeArgs {
    /// Code order; defaults to the host sector order.
    #[arg(long)]
    code_order: Option<usize>,
    /// PATH to a dense unitary (rows of [re, im]) or code descriptor,
    /// `random`, or `identity`.
    #[arg(long, default_value = "identity")]
    u_star: String,
    #[arg(long, default_value_t = 1)]
    multiplicity_index: usize,
}

#[derive(Args, Clone)]
struct SearchArgs {
    /// Search candidate codes instead of deriving one; `--code-order`
    /// fixes the order unless a range is given.
    #[arg(long)]
    search: bool,
    #[arg(long, default_value_t = 200)]
    budget: usize,
    #[arg(long)]
    min_order: Option<usize>,
    #[arg(long)]
    max_order: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StandardArg {
    Loc,
    Lesc,
    Oc,
    Esc,
}

impl From<StandardArg> for Standard {
    fn from(s: StandardArg) -> Self {
        match s {
            StandardArg::Loc => Standard::Loc,
            StandardArg::Lesc => Standard::Lesc,
            StandardArg::Oc => Standard::Oc,
            StandardArg::Esc => Standard::Esc,
        }
    }
}

#[derive(Args)]
struct CodesArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, value_enum, default_value = "loc")]
    standard: StandardArg,
}

#[derive(Args)]
struct TestArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    code: CodeArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[arg(long, value_enum, default_value = "loc")]
    standard: StandardArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    /// Random piecewise-constant input inside the DIFS.
    Effective,
    Zero,
    /// Constant input given by `--u`.
    Constant,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    code: CodeArgs,
    #[arg(long, value_enum, default_value = "effective")]
    field: FieldArg,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    u: Vec<f64>,
    /// Horizon; defaults to 3 / (largest noise rate), or 1 without noise.
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, default_value_t = 10)]
    intervals: usize,
    #[arg(long, default_value_t = 5.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Coherence-vector coordinates written to the CSV; all when omitted.
    #[arg(long, value_delimiter = ',')]
    columns: Vec<usize>,
    /// Where to write the JSON summary; stderr when omitted.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut tol = Tolerances::default();
    for a in &cli.tol {
        tol.apply_assignment(a)?;
    }
    let ctx = Ctx { seed: cli.seed, tol };
    match &cli.cmd {
        Cmd::IonModel { ions } => {
            // The published control set is defined for five ions only.
            let mut p = IonParams { ions: *ions, ..IonParams::default() };
            if *ions != 5 {
                p.controls.clear();
            }
            p.validate()?;
            write_out(cli.out.as_deref(), &to_json(&p.document())?)
        }
        Cmd::Convert { model, threshold } => {
            let g = GModel::from_model(&load_model(model)?)?;
            ctx.emit(cli, "convert", &g.export(*threshold))
        }
        Cmd::Commutant { model } => {
            let m = load_model(model)?;
            let (_, s) = ctx.structure(&m)?;
            ctx.emit(cli, "commutant", &s.report())
        }
        Cmd::Codes(a) => ctx.codes(cli, a),
        Cmd::Difs { scheme } => {
            let m = load_model(&scheme.model)?;
            let (p, g, _) = ctx.projection(scheme, &m)?;
            let controls = control_list(&scheme.controls, g.n_controls())?;
            let g = restrict_controls(&g, &controls)?;
            let difs = compute_difs(&g, &p, &ctx.tol)?;
            ctx.emit(cli, "difs", &difs.report())
        }
        Cmd::Test(a) => ctx.test(cli, a),
        Cmd::Simulate(a) => ctx.simulate(cli, a),
    }
}

struct Ctx {
    seed: u64,
    tol: Tolerances,
}

impl Ctx {
    fn emit<T: Serialize>(&self, cli: &Cli, command: &str, result: &T) -> Result<()> {
        let doc = json!({
            "command": command,
            "seed": self.seed,
            "tolerances": self.tol,
            "result": result,
        });
        write_out(cli.out.as_deref(), &to_json(&doc)?)
    }

    fn structure(&self, m: &LindbladModel) -> Result<(GModel, CommutantStructure)> {
        let g = GModel::from_model(m)?;
        let alg = interaction_algebra(m);
        let s = commutant_structure(&alg, &g.basis, self.seed, &self.tol)?;
        Ok((g, s))
    }

    /// Protected projection, from the sector core or an explicit file.
    fn projection(&self, a: &SchemeArgs, m: &LindbladModel) -> Result<(RMat, GModel, CommutantStructure)> {
        let (g, s) = self.structure(m)?;
        match (&a.sector, &a.projection) {
            (Some(k), None) => Ok((s.sector(*k)?.core.clone(), g, s)),
            (_, Some(path)) => {
                let cols: Vec<Vec<f64>> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                let n = m.dim * m.dim;
                if cols.is_empty() || cols.iter().any(|c| c.len() != n) {
                    return Err(Error::validation("projection", format!("expected columns of length {n}")));
                }
                let raw = RMat::from_fn(n, cols.len(), |i, j| cols[j][i]);
                Ok((linalg::orthonormalize_columns(&raw), g, s))
            }
            (None, None) => Err(Error::InvalidParameter("one of --sector or --projection is required".into())),
        }
    }

    fn u_star(&self, spec: &str, order: usize) -> Result<CMat> {
        match spec {
            "identity" => Ok(CMat::identity(order, order)),
            "random" => Ok(linalg::haar_unitary(order, &mut linalg::rng(self.seed))),
            path => {
                // Either bare rows or a code descriptor written by `codes`.
                let v: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
                let v = v.get("result").cloned().unwrap_or(v);
                let rows: Vec<Vec<[f64; 2]>> = match serde_json::from_value::<CodeDescriptor>(v.clone()) {
                    Ok(d) => d.u_star,
                    Err(_) => serde_json::from_value(v)?,
                };
                codes::from_dense_rows(&rows)
            }
        }
    }

    fn code(&self, s: &CommutantStructure, g: &GModel, k: usize, a: &CodeArgs) -> Result<SubsystemCode> {
        let host = s.sector(k)?.order;
        let u = self.u_star(&a.u_star, host)?;
        codes::derive_code(s, &g.basis, k, a.code_order.unwrap_or(host), &u, a.multiplicity_index)
    }

    #[allow(clippy::too_many_arguments)]
    fn search(
        &self,
        m: &LindbladModel,
        g: &GModel,
        s: &CommutantStructure,
        analysis: &liealg::SchemeAnalysis,
        k: usize,
        controls: &[usize],
        a: &SearchArgs,
        code_order: Option<usize>,
        standard: Standard,
    ) -> Result<Vec<codes::SearchHit>> {
        let host = s.sector(k)?.order;
        let spec = SearchSpec {
            sector: k,
            min_order: a.min_order.or(code_order).unwrap_or(2),
            max_order: a.max_order.or(code_order).unwrap_or(host),
            budget: a.budget,
            seed: self.seed,
            probes: liealg::search_probes(m, analysis, controls),
        };
        liealg::search_with_standard(s, &g.basis, analysis, &spec, standard, &self.tol)
    }

    fn codes(&self, cli: &Cli, a: &CodesArgs) -> Result<()> {
        let k = a.scheme.sector.ok_or_else(|| Error::InvalidParameter("--sector is required".into()))?;
        let m = load_model(&a.scheme.model)?;
        let (g, s) = self.structure(&m)?;
        if !a.search.search {
            let code = self.code(&s, &g, k, &a.code)?;
            return self.emit(cli, "codes", &code.descriptor(Some(self.seed)));
        }
        let controls = control_list(&a.scheme.controls, g.n_controls())?;
        let gr = restrict_controls(&g, &controls)?;
        let analysis = analyze_scheme(&gr, &s.sector(k)?.core, &self.tol)?;
        let hits = self.search(&m, &g, &s, &analysis, k, &controls, &a.search, a.code.code_order, a.standard.into())?;
        let out: Vec<Value> = hits
            .iter()
            .map(|h| {
                json!({
                    "sample": h.sample,
                    "kind": h.kind,
                    "code": h.code.descriptor(Some(self.seed)),
                })
            })
            .collect();
        self.emit(cli, "codes", &json!({ "budget": a.search.budget, "hits": out }))
    }

    fn test(&self, cli: &Cli, a: &TestArgs) -> Result<()> {
        let m = load_model(&a.scheme.model)?;
        let standard: Standard = a.standard.into();
        if matches!(standard, Standard::Oc | Standard::Esc) {
            let r = if standard == Standard::Oc { liealg::test_oc(&m, &self.tol)? } else { liealg::test_esc(&m, &self.tol)? };
            return self.emit(cli, "test", &r);
        }
        let k = a.scheme.sector.ok_or_else(|| Error::InvalidParameter("--sector is required for L-OC/L-ESC".into()))?;
        let (p, g, s) = self.projection(&a.scheme, &m)?;
        let controls = control_list(&a.scheme.controls, g.n_controls())?;
        let gr = restrict_controls(&g, &controls)?;
        let analysis = analyze_scheme(&gr, &p, &self.tol)?;
        let code = if a.search.search {
            let hits = self.search(&m, &g, &s, &analysis, k, &controls, &a.search, a.code.code_order, standard)?;
            match hits.into_iter().next() {
                Some(h) => h.code,
                None => {
                    return self.emit(
                        cli,
                        "test",
                        &json!({ "standard": standard, "verdict": false, "budget": a.search.budget, "hits": 0 }),
                    )
                }
            }
        } else {
            self.code(&s, &g, k, &a.code)?
        };
        let scheme = PStaticScheme::new(code, p, controls, &s)?;
        let r = liealg::run_test(standard, &analysis, &scheme.code, &self.tol)?;
        let difs = analysis.difs.report();
        self.emit(
            cli,
            "test",
            &json!({
                "report": r,
                "code": scheme.code.descriptor(Some(self.seed)),
                "n_eff": difs.n_eff,
                "rank_Z": difs.rank_z,
                "p_dim": analysis.p.ncols(),
            }),
        )
    }

    fn simulate(&self, cli: &Cli, a: &SimArgs) -> Result<()> {
        let k = a.scheme.sector.ok_or_else(|| Error::InvalidParameter("--sector is required".into()))?;
        let m = load_model(&a.scheme.model)?;
        let (p, g, s) = self.projection(&a.scheme, &m)?;
        let controls = control_list(&a.scheme.controls, g.n_controls())?;
        let gr = restrict_controls(&g, &controls)?;
        let horizon = a.horizon.unwrap_or_else(|| {
            let rate = m.noise.iter().map(|c| c.rate).fold(0.0, f64::max);
            if rate > 0.0 { 3.0 / rate } else { 1.0 }
        });
        let field = match a.field {
            FieldArg::Effective => {
                let difs = compute_difs(&gr, &p, &self.tol)?;
                ControlField::random_effective(&difs, a.intervals.max(1), a.amplitude, horizon, self.seed)?
            }
            FieldArg::Zero => ControlField::zero(gr.n_controls(), horizon),
            FieldArg::Constant => {
                if a.u.len() != gr.n_controls() {
                    return Err(Error::InvalidParameter(format!("--u needs {} values", gr.n_controls())));
                }
                ControlField::constant(a.u.clone(), horizon)
            }
        };
        let code = self.code(&s, &g, k, &a.code)?;
        let sigma = {
            let x = linalg::ginibre(code.order, &mut linalg::sub_rng(self.seed, 11));
            let r = &x * x.adjoint();
            let t = r.trace();
            r / t
        };
        let v0 = g.basis.rho_to_v(&(code.phi_inverse(&sigma) / linalg::c(s.sector(k)?.multiplicity as f64, 0.0)))?;
        let diag = Diagnostics { p: Some(p), nc: Some(s.nc.clone()) };
        let tr = sim::propagate(&gr, &field, &v0, &diag, &SimOptions { samples: a.samples, ..SimOptions::from_tolerances(&self.tol) })?;
        let cols: Vec<usize> = if a.columns.is_empty() { (0..g.bdim()).collect() } else { a.columns.clone() };
        if let Some(&bad) = cols.iter().find(|&&c| c >= g.bdim()) {
            return Err(Error::InvalidParameter(format!("column {bad} out of range")));
        }
        write_out(cli.out.as_deref(), &tr.to_csv(&cols))?;
        let summary = to_json(&json!({
            "command": "simulate",
            "seed": self.seed,
            "tolerances": self.tol,
            "field": field.kind,
            "result": tr.summary(),
        }))?;
        match &a.summary {
            Some(path) => std::fs::write(path, summary)?,
            None => eprint!("{summary}"),
        }
        Ok(())
    }
}

fn control_list(one_based: &[usize], n: usize) -> Result<Vec<usize>> {
    if one_based.is_empty() {
        return Ok((0..n).collect());
    }
    one_based
        .iter()
        .map(|&k| {
            if k == 0 || k > n {
                Err(Error::InvalidParameter(format!("control {k} outside 1..={n}")))
            } else {
                Ok(k - 1)
            }
        })
        .collect()
}

fn load_model(path: &Path) -> Result<LindbladModel> {
    let text = std::fs::read_to_string(path)?;
    let m = LindbladModel::from_json_str(&text)?;
    m.validate(&Tolerances::default())?;
    Ok(m)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}
