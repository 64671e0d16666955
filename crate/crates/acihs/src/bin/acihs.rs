//! Experiment front door: each subcommand wires one library operation to
//! line-delimited JSON (or CSV) reports with reproducible seeds.
//!
//! Records stream one per line; the last line is always an object with the
//! single key "summary". Exit codes: 0 success, 2 configuration error,
//! 3 numerical failure (the originating error name appears in the summary).

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::fs::File;
use std::io::{BufWriter, Write as _};
use std::process::ExitCode;

use acihs::confocal::{
    dirac_flow, geodesic_flow, random_ts_point, tangency_values, ConfocalFamily, Hamiltonian,
    PhasePoint,
};
use acihs::cubic::{cubic_defect, period_tensor, polynomial_hessian_sampler, siegel_check,
    MultivariatePolynomial};
use acihs::mumford::{
    divisor_from_triple, triple_from_divisor, triple_from_phase, verify_pell,
    HyperellipticModel, MumfordTriple,
};
use acihs::poly::ComplexPolynomial;
use acihs::polymat::{
    branch_residue_hamiltonians, char_poly, direct_image_splitting, kk_flow, normal_form,
    residue_embed, spectral_genus, spectral_smooth_affine, DivisorMode, PolyMatrix,
    SpectralFunctional,
};
use acihs::selftest;

#[derive(Parser)]
#[command(name = "acihs", version, about = "Integrable-systems toolbox: confocal flows, Mumford coordinates, polynomial-matrix spectral curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Clone)]
struct Common {
    /// PRNG seed; fully determines all random draws.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Integration step size.
    #[arg(long, global = true, default_value_t = 1e-3)]
    dt: f64,
    /// Number of integration steps.
    #[arg(long, global = true, default_value_t = 1000)]
    steps: usize,
    /// Pass/fail tolerance for drift and residual checks.
    #[arg(long, global = true, default_value_t = 1e-6)]
    tol: f64,
    /// Finite-difference step.
    #[arg(long, global = true, default_value_t = 1e-4)]
    h: f64,
    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Json)]
    report: ReportFormat,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<String>,
    /// Run independent trials on N threads; output order stays deterministic.
    #[arg(long, global = true, default_value_t = 1)]
    parallel: usize,
}

#[derive(Copy, Clone, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Geodesic flow on the ellipsoid with tangency-spectrum drift checks.
    Geodesic {
        /// Semiaxes, comma separated.
        #[arg(long, default_value = "1,2,4")]
        axes: String,
        /// Number of random starts.
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Neumann flow on TS with energy and constraint drift checks.
    Neumann {
        #[arg(long, default_value = "1,2,4")]
        axes: String,
        #[arg(long, default_value_t = 20)]
        trials: usize,
    },
    /// Mumford-coordinate operations on hyperelliptic curves.
    Mumford {
        #[command(subcommand)]
        cmd: MumfordCmd,
    },
    /// Polynomial-matrix spectral-curve operations.
    Polymat {
        #[command(subcommand)]
        cmd: PolymatCmd,
    },
    /// Cubic condition and Siegel domain checks for period matrices.
    Cubic {
        #[command(subcommand)]
        cmd: CubicCmd,
    },
    /// Run the full acceptance suite.
    Selftest,
}

#[derive(Subcommand)]
enum MumfordCmd {
    /// Build the (U, V, W) triple of a divisor on y^2 = f(t).
    FromDivisor {
        /// Coefficients of f, ascending, each entry [re,im] (JSON).
        #[arg(long)]
        f: String,
        /// Divisor support, JSON list of [[tre,tim],[sre,sim]] pairs.
        #[arg(long)]
        points: String,
    },
    /// Build the triple attached to a TS phase point.
    FromPhase {
        #[arg(long, default_value = "1,2,4")]
        axes: String,
        /// x coordinates, comma separated.
        #[arg(long)]
        x: String,
        /// y coordinates, comma separated.
        #[arg(long)]
        y: String,
    },
    /// Check V^2 + UW = f for an explicit triple.
    Verify {
        #[arg(long)]
        f: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
        #[arg(long)]
        w: String,
    },
}

#[derive(Subcommand)]
enum PolymatCmd {
    /// Characteristic polynomial of a polynomial matrix.
    Charpoly {
        /// Row-major nested arrays of polynomial coefficient lists (JSON).
        #[arg(long)]
        matrix: String,
    },
    /// Smoothness of the affine spectral curve.
    Smooth {
        #[arg(long)]
        matrix: String,
    },
    /// Spectral genus and direct-image splitting type.
    Genus {
        #[arg(long)]
        r: i64,
        #[arg(long)]
        d: i64,
        #[arg(long, default_value_t = 0)]
        g: i64,
    },
    /// Embed a polynomial matrix as a residue tuple over a divisor.
    Embed {
        #[arg(long)]
        matrix: String,
        /// Divisor points, comma-separated reals or JSON complex list.
        #[arg(long)]
        divisor: String,
        /// Put the last residue at infinity instead of a finite point.
        #[arg(long, default_value_t = false)]
        infinity: bool,
    },
    /// Isospectral flow of a random residue tuple under a spectral Hamiltonian.
    Flow {
        #[arg(long, default_value_t = 2)]
        r: usize,
        #[arg(long, default_value_t = 3)]
        d: usize,
        /// Hamiltonian index pair i,j.
        #[arg(long, default_value = "2,1")]
        hamiltonian: String,
        /// Amplitude of the random matrix before embedding.
        #[arg(long, default_value_t = 0.1)]
        amplitude: f64,
    },
    /// Orbit normal form of a polynomial matrix.
    NormalForm {
        #[arg(long)]
        matrix: String,
    },
    /// Branch-series residue Hamiltonians of an r=2 curve y^2 = f(x).
    Phi {
        #[arg(long)]
        f: String,
        /// Base point, "re" or "re,im".
        #[arg(long)]
        x0: String,
        /// Highest Hamiltonian index.
        #[arg(long, default_value_t = 4)]
        j: usize,
    },
}

#[derive(Subcommand)]
enum CubicCmd {
    /// Cubic condition for the Hessian periods of a polynomial prepotential.
    Check {
        /// "poly:" followed by {"g":…, "terms":[[[re,im],[e1,…,eg]],…]} (JSON).
        #[arg(long)]
        prepotential: String,
        /// Base point, comma-separated reals.
        #[arg(long)]
        b0: String,
    },
    /// Siegel upper-half-space membership of a constant complex matrix.
    Siegel {
        /// Row-major nested arrays of [re,im] entries (JSON).
        #[arg(long)]
        matrix: String,
    },
}

/// One configuration problem; maps to exit code 2.
struct ConfigError(String);
/// One numerical failure; maps to exit code 3.
struct NumError(&'static str, String);

type RunResult = Result<(Vec<Value>, Value), NumError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut common = cli.common.clone();
    if let Ok(over) = std::env::var("ACIHS_TOL_OVERRIDE") {
        match over.parse::<f64>() {
            Ok(t) if t > 0.0 => common.tol = t,
            _ => {
                eprintln!("error: ACIHS_TOL_OVERRIDE must be a positive number");
                return ExitCode::from(2);
            }
        }
    }
    if common.dt <= 0.0 || common.h <= 0.0 || common.parallel == 0 {
        eprintln!("error: dt and h must be positive, parallel must be at least 1");
        return ExitCode::from(2);
    }

    let run = dispatch(&cli.command, &common);
    let (records, summary, code) = match run {
        Ok(Ok((records, summary))) => (records, summary, 0u8),
        Ok(Err(NumError(name, detail))) => (
            Vec::new(),
            json!({"pass": false, "error": name, "detail": detail}),
            3u8,
        ),
        Err(ConfigError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    let pass = summary.get("pass").and_then(Value::as_bool).unwrap_or(true);
    if let Err(e) = write_report(&common, &records, &summary) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    if !pass && code == 0 {
        return ExitCode::from(3);
    }
    ExitCode::from(code)
}

fn dispatch(cmd: &Command, common: &Common) -> Result<RunResult, ConfigError> {
    Ok(match cmd {
        Command::Geodesic { axes, trials } => run_geodesic(common, axes, *trials)?,
        Command::Neumann { axes, trials } => run_neumann(common, axes, *trials)?,
        Command::Mumford { cmd } => run_mumford(common, cmd)?,
        Command::Polymat { cmd } => run_polymat(common, cmd)?,
        Command::Cubic { cmd } => run_cubic(common, cmd)?,
        Command::Selftest => run_selftest(common),
    })
}

// ---------------------------------------------------------------------------
// report plumbing

fn write_report(common: &Common, records: &[Value], summary: &Value) -> std::io::Result<()> {
    let mut sink: Box<dyn std::io::Write> = match &common.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    match common.report {
        ReportFormat::Json => {
            for r in records {
                writeln!(sink, "{r}")?;
            }
            writeln!(sink, "{}", json!({ "summary": summary }))?;
        }
        ReportFormat::Csv => {
            // Flat key,value rows; a blank line separates records from summary.
            for r in records {
                writeln!(sink, "{}", csv_row(r))?;
            }
            writeln!(sink)?;
            writeln!(sink, "{}", csv_row(summary))?;
        }
    }
    sink.flush()
}

fn csv_row(v: &Value) -> String {
    match v.as_object() {
        Some(map) => map
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(","),
        None => v.to_string(),
    }
}

/// Deterministic per-trial substream of the run seed.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial + 1);
    rng
}

/// Run `trials` independent closures, possibly on several threads, keeping
/// output order by trial index.
fn run_trials<F>(trials: usize, parallel: usize, f: F) -> Vec<Result<Value, NumError>>
where
    F: Fn(usize) -> Result<Value, NumError> + Sync,
{
    if parallel <= 1 || trials <= 1 {
        return (0..trials).map(&f).collect();
    }
    let mut out: Vec<Option<Result<Value, NumError>>> = (0..trials).map(|_| None).collect();
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut out);
    std::thread::scope(|scope| {
        for _ in 0..parallel.min(trials) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= trials {
                    break;
                }
                let r = f(i);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    out.into_iter().map(Option::unwrap).collect()
}

fn collect_trials(
    results: Vec<Result<Value, NumError>>,
) -> Result<Vec<Value>, NumError> {
    results.into_iter().collect()
}

// ---------------------------------------------------------------------------
// argument parsing helpers

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, ConfigError> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| ConfigError(format!("bad {what} {s:?}: {e}")))
}

fn parse_complex(v: &Value, what: &str) -> Result<Complex64, ConfigError> {
    let err = || ConfigError(format!("bad {what}: expected [re,im] or number, got {v}"));
    if let Some(x) = v.as_f64() {
        return Ok(Complex64::new(x, 0.0));
    }
    let arr = v.as_array().ok_or_else(err)?;
    if arr.len() != 2 {
        return Err(err());
    }
    let re = arr[0].as_f64().ok_or_else(err)?;
    let im = arr[1].as_f64().ok_or_else(err)?;
    Ok(Complex64::new(re, im))
}

fn parse_poly(s: &str, what: &str) -> Result<ComplexPolynomial, ConfigError> {
    let v: Value =
        serde_json::from_str(s).map_err(|e| ConfigError(format!("bad {what} JSON: {e}")))?;
    let arr = v
        .as_array()
        .ok_or_else(|| ConfigError(format!("bad {what}: expected a coefficient list")))?;
    let coeffs = arr
        .iter()
        .map(|c| parse_complex(c, what))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ComplexPolynomial::new(coeffs))
}

fn parse_poly_matrix(s: &str) -> Result<PolyMatrix, ConfigError> {
    let v: Value = serde_json::from_str(s).map_err(|e| ConfigError(format!("bad matrix JSON: {e}")))?;
    let rows = v
        .as_array()
        .ok_or_else(|| ConfigError("matrix must be a nested array of rows".into()))?;
    let r = rows.len();
    let mut out = Vec::with_capacity(r);
    for row in rows {
        let entries = row
            .as_array()
            .ok_or_else(|| ConfigError("matrix rows must be arrays".into()))?;
        if entries.len() != r {
            return Err(ConfigError(format!(
                "matrix must be square, got a row of length {} in a {r}-row matrix",
                entries.len()
            )));
        }
        let mut prow = Vec::with_capacity(r);
        for e in entries {
            let coeffs = e
                .as_array()
                .ok_or_else(|| ConfigError("matrix entries must be coefficient lists".into()))?
                .iter()
                .map(|c| parse_complex(c, "matrix coefficient"))
                .collect::<Result<Vec<_>, _>>()?;
            prow.push(ComplexPolynomial::new(coeffs));
        }
        out.push(prow);
    }
    if r == 0 {
        return Err(ConfigError("matrix must be nonempty".into()));
    }
    Ok(PolyMatrix::new(out))
}

fn parse_complex_scalar(s: &str, what: &str) -> Result<Complex64, ConfigError> {
    let parts = parse_f64_list(s, what)?;
    match parts.as_slice() {
        [re] => Ok(Complex64::new(*re, 0.0)),
        [re, im] => Ok(Complex64::new(*re, *im)),
        _ => Err(ConfigError(format!("bad {what}: expected re or re,im"))),
    }
}

fn complex_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn poly_json(p: &ComplexPolynomial) -> Value {
    Value::Array(p.coeffs().iter().map(|&z| complex_json(z)).collect())
}

fn matrix_json(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_json(m[(i, j)])).collect()))
            .collect(),
    )
}

fn poly_matrix_json(m: &PolyMatrix) -> Value {
    Value::Array(
        (0..m.size())
            .map(|i| {
                Value::Array((0..m.size()).map(|j| poly_json(m.entry(i, j))).collect())
            })
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// subcommand bodies

fn run_geodesic(common: &Common, axes: &str, trials: usize) -> Result<RunResult, ConfigError> {
    let axes = parse_f64_list(axes, "axes")?;
    let fam = ConfocalFamily::new(axes).map_err(|e| ConfigError(e.to_string()))?;
    let (dt, steps, tol, seed) = (common.dt, common.steps, common.tol, common.seed);
    let results = run_trials(trials, common.parallel, |trial| {
        let mut rng = trial_rng(seed, trial as u64);
        let n = fam.dim();
        let a = fam.axes();
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let t = 1.0 / u.iter().zip(a).map(|(u, a)| u * u / a).sum::<f64>().sqrt();
        let x0: Vec<f64> = u.iter().map(|u| u * t).collect();
        let grad: Vec<f64> = x0.iter().zip(a).map(|(x, a)| 2.0 * x / a).collect();
        let gg: f64 = grad.iter().map(|g| g * g).sum();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let gw: f64 = grad.iter().zip(&w).map(|(g, w)| g * w).sum();
        let v: Vec<f64> = w.iter().zip(&grad).map(|(w, g)| w - gw / gg * g).collect();
        let speed = v.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-9);
        let v0: Vec<f64> = v.iter().map(|v| v / speed).collect();
        let traj = geodesic_flow(&x0, &v0, &fam, dt, steps)
            .map_err(|e| NumError("GeodesicError", e.to_string()))?;
        let base = tangency_values(&traj[0].line(), &fam)
            .map_err(|e| NumError("ConfocalError", e.to_string()))?
            .values;
        let scale = base.iter().map(|v| v.norm()).fold(1.0_f64, f64::max);
        let mut chasles_drift = 0.0_f64;
        let mut constraint_drift = 0.0_f64;
        for step in traj.iter().skip(1).step_by(100).chain(traj.last()) {
            let vals = tangency_values(&step.line(), &fam)
                .map_err(|e| NumError("ConfocalError", e.to_string()))?
                .values;
            chasles_drift =
                chasles_drift.max(acihs::poly::multiset_distance(&vals, &base) / scale);
            constraint_drift = constraint_drift.max(step.drift);
        }
        Ok(json!({
            "trial": trial,
            "chasles_drift": chasles_drift,
            "constraint_drift": constraint_drift,
            "pass": chasles_drift < tol,
        }))
    });
    Ok(summarize_drift_trials(results, "chasles_drift"))
}

fn run_neumann(common: &Common, axes: &str, trials: usize) -> Result<RunResult, ConfigError> {
    let axes = parse_f64_list(axes, "axes")?;
    let fam = ConfocalFamily::new(axes).map_err(|e| ConfigError(e.to_string()))?;
    let (dt, steps, tol, seed) = (common.dt, common.steps, common.tol, common.seed);
    let results = run_trials(trials, common.parallel, |trial| {
        let mut rng = trial_rng(seed, trial as u64);
        let p0 = random_ts_point(&mut rng, fam.dim());
        let traj = dirac_flow(&Hamiltonian::Neumann, &p0, dt, steps, &fam)
            .map_err(|e| NumError("ConfocalError", e.to_string()))?;
        let e0 = Hamiltonian::Neumann.eval(&p0, &fam);
        let mut energy_drift = 0.0_f64;
        let mut constraint_drift = 0.0_f64;
        for step in &traj {
            let e = Hamiltonian::Neumann.eval(&step.point, &fam);
            energy_drift = energy_drift.max((e - e0).abs() / e0.abs().max(1.0));
            constraint_drift = constraint_drift.max(step.drift);
        }
        Ok(json!({
            "trial": trial,
            "energy_drift": energy_drift,
            "constraint_drift": constraint_drift,
            "pass": energy_drift < tol && constraint_drift < tol,
        }))
    });
    Ok(summarize_drift_trials(results, "energy_drift"))
}

fn summarize_drift_trials(results: Vec<Result<Value, NumError>>, key: &str) -> RunResult {
    let records = collect_trials(results)?;
    let max = records
        .iter()
        .filter_map(|r| r.get(key).and_then(Value::as_f64))
        .fold(0.0_f64, f64::max);
    let pass = records
        .iter()
        .all(|r| r.get("pass").and_then(Value::as_bool).unwrap_or(false));
    let trials = records.len();
    Ok((
        records,
        json!({ format!("max_{key}"): max, "trials": trials, "pass": pass }),
    ))
}

fn run_mumford(common: &Common, cmd: &MumfordCmd) -> Result<RunResult, ConfigError> {
    match cmd {
        MumfordCmd::FromDivisor { f, points } => {
            let f = parse_poly(f, "f")?;
            let v: Value = serde_json::from_str(points)
                .map_err(|e| ConfigError(format!("bad points JSON: {e}")))?;
            let pts = v
                .as_array()
                .ok_or_else(|| ConfigError("points must be a list of [t, s] pairs".into()))?
                .iter()
                .map(|p| {
                    let pair = p
                        .as_array()
                        .filter(|a| a.len() == 2)
                        .ok_or_else(|| ConfigError("each point must be a [t, s] pair".into()))?;
                    Ok((parse_complex(&pair[0], "t")?, parse_complex(&pair[1], "s")?))
                })
                .collect::<Result<Vec<_>, ConfigError>>()?;
            let model = HyperellipticModel::new(f);
            Ok((|| {
                let m = triple_from_divisor(&pts, &model)
                    .map_err(|e| NumError("MumfordError", e.to_string()))?;
                let residual = verify_pell(&m, &model);
                Ok((
                    vec![triple_record(&m)],
                    json!({"residual": residual, "pass": residual < common.tol}),
                ))
            })())
        }
        MumfordCmd::FromPhase { axes, x, y } => {
            let fam = ConfocalFamily::new(parse_f64_list(axes, "axes")?)
                .map_err(|e| ConfigError(e.to_string()))?;
            let x = parse_f64_list(x, "x")?;
            let y = parse_f64_list(y, "y")?;
            if x.len() != fam.dim() || y.len() != fam.dim() {
                return Err(ConfigError("x and y must match the number of axes".into()));
            }
            let p = PhasePoint::constrained(x, y).map_err(|e| ConfigError(e.to_string()))?;
            let (m, model) = triple_from_phase(&p, &fam);
            let residual = verify_pell(&m, &model);
            let spectrum = tangency_values(&p, &fam).map(|s| s.values).unwrap_or_default();
            Ok(Ok((
                vec![
                    triple_record(&m),
                    json!({
                        "f": poly_json(&model.f),
                        "f2": model.f2.as_ref().map(poly_json),
                        "tangency_values": spectrum.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
                    }),
                ],
                json!({"residual": residual, "pass": residual < common.tol}),
            )))
        }
        MumfordCmd::Verify { f, u, v, w } => {
            let model = HyperellipticModel::new(parse_poly(f, "f")?);
            let m = MumfordTriple {
                u: parse_poly(u, "u")?,
                v: parse_poly(v, "v")?,
                w: parse_poly(w, "w")?,
            };
            let residual = verify_pell(&m, &model);
            let divisor = divisor_from_triple(&m)
                .map(|d| d.iter().map(|(t, s)| json!([complex_json(*t), complex_json(*s)])).collect::<Vec<_>>());
            Ok(Ok((
                vec![json!({"divisor": divisor.unwrap_or_default()})],
                json!({"residual": residual, "pass": residual < common.tol}),
            )))
        }
    }
}

fn triple_record(m: &MumfordTriple) -> Value {
    json!({"u": poly_json(&m.u), "v": poly_json(&m.v), "w": poly_json(&m.w)})
}

fn run_polymat(common: &Common, cmd: &PolymatCmd) -> Result<RunResult, ConfigError> {
    match cmd {
        PolymatCmd::Charpoly { matrix } => {
            let a = parse_poly_matrix(matrix)?;
            let cp = char_poly(&a);
            Ok(Ok((
                vec![json!({
                    "r": cp.r,
                    "d": cp.d,
                    "b": cp.b.iter().map(poly_json).collect::<Vec<_>>(),
                })],
                json!({"pass": true}),
            )))
        }
        PolymatCmd::Smooth { matrix } => {
            let a = parse_poly_matrix(matrix)?;
            let cp = char_poly(&a);
            Ok((|| {
                let report = spectral_smooth_affine(&cp)
                    .map_err(|e| NumError("PolymatError", e.to_string()))?;
                Ok((
                    vec![json!({
                        "smooth": report.smooth,
                        "witness": report.witness.map(|(x, y)| json!([complex_json(x), complex_json(y)])),
                    })],
                    json!({"smooth": report.smooth, "pass": true}),
                ))
            })())
        }
        PolymatCmd::Genus { r, d, g } => {
            if *r < 1 || *d < 0 || *g < 0 {
                return Err(ConfigError("need r >= 1, d >= 0, g >= 0".into()));
            }
            let genus = spectral_genus(*r, *d, *g);
            let splitting = direct_image_splitting(*r, *d);
            Ok(Ok((
                vec![json!({"genus": genus, "splitting": splitting})],
                json!({"pass": true}),
            )))
        }
        PolymatCmd::Embed { matrix, divisor, infinity } => {
            let a = parse_poly_matrix(matrix)?;
            let divisor = parse_divisor(divisor)?;
            let mode = if *infinity {
                DivisorMode::LastAtInfinity
            } else {
                DivisorMode::AllFinite
            };
            Ok((|| {
                let t = residue_embed(&a, &divisor, mode)
                    .map_err(|e| NumError("PolymatError", e.to_string()))?;
                let mut records: Vec<Value> = t
                    .points
                    .iter()
                    .zip(&t.matrices)
                    .map(|(&p, m)| json!({"point": complex_json(p), "residue": matrix_json(m)}))
                    .collect();
                let mut total = t.sum();
                if t.matrices.len() > t.points.len() {
                    let infty = t.matrices.last().unwrap();
                    records.push(json!({"point": "infinity", "residue": matrix_json(infty)}));
                    total += infty;
                }
                let sum = total.iter().map(|v| v.norm()).fold(0.0, f64::max);
                Ok((records, json!({"residue_sum": sum, "pass": sum < common.tol})))
            })())
        }
        PolymatCmd::Flow { r, d, hamiltonian, amplitude } => {
            let hij = parse_f64_list(hamiltonian, "hamiltonian")?;
            let [i, j] = hij.as_slice() else {
                return Err(ConfigError("hamiltonian must be i,j".into()));
            };
            if *r < 2 || *d < 1 || *amplitude <= 0.0 {
                return Err(ConfigError("need r >= 2, d >= 1, positive amplitude".into()));
            }
            let (i, j) = (*i as usize, *j as usize);
            if i < 1 || i > *r || j > i * *d {
                return Err(ConfigError(format!("hamiltonian indices out of range for r={r}, d={d}")));
            }
            let mut rng = trial_rng(common.seed, 0);
            let a = random_poly_matrix(&mut rng, *r, *d).scale(Complex64::new(*amplitude, 0.0));
            let divisor: Vec<Complex64> =
                (0..d + 2).map(|k| Complex64::new(k as f64, 0.0)).collect();
            Ok((|| {
                let t0 = residue_embed(&a, &divisor, DivisorMode::AllFinite)
                    .map_err(|e| NumError("PolymatError", e.to_string()))?;
                let h = SpectralFunctional::new(i, j);
                let traj = kk_flow(&h, &t0, common.dt, common.steps)
                    .map_err(|e| NumError("PolymatError", e.to_string()))?;
                let records = traj
                    .iter()
                    .step_by((common.steps / 20).max(1))
                    .map(|s| {
                        json!({
                            "step": s.step,
                            "charpoly_drift": s.charpoly_drift,
                            "leaf_drift": s.leaf_drift,
                        })
                    })
                    .collect();
                let cp = traj.iter().map(|s| s.charpoly_drift).fold(0.0, f64::max);
                let leaf = traj.iter().map(|s| s.leaf_drift).fold(0.0, f64::max);
                Ok((
                    records,
                    json!({
                        "charpoly_drift": cp,
                        "leaf_drift": leaf,
                        "pass": cp < common.tol && leaf < common.tol,
                    }),
                ))
            })())
        }
        PolymatCmd::NormalForm { matrix } => {
            let a = parse_poly_matrix(matrix)?;
            let Some(d) = a.degree().filter(|&d| d >= 1) else {
                return Err(ConfigError("normal form needs degree >= 1".into()));
            };
            if a.size() < 2 {
                return Err(ConfigError("normal form needs size >= 2".into()));
            }
            Ok((|| {
                let (nf, g) = normal_form(&a).map_err(|e| NumError("PolymatError", e.to_string()))?;
                let beta = nf.coefficient_matrix(d - 1)[(0, a.size() - 1)];
                Ok((
                    vec![json!({
                        "normal_form": poly_matrix_json(&nf),
                        "gauge": matrix_json(&g),
                        "beta": complex_json(beta),
                    })],
                    json!({"pass": true}),
                ))
            })())
        }
        PolymatCmd::Phi { f, x0, j } => {
            let f = parse_poly(f, "f")?;
            let x0 = parse_complex_scalar(x0, "x0")?;
            let Some(deg) = f.degree().filter(|&d| d >= 1) else {
                return Err(ConfigError("f must be nonconstant".into()));
            };
            if *j < 1 {
                return Err(ConfigError("j must be at least 1".into()));
            }
            let b = acihs::polymat::CharPoly {
                r: 2,
                d: (deg + 1) / 2,
                b: vec![ComplexPolynomial::zero(), f.neg()],
            };
            Ok((|| {
                let mut records = Vec::new();
                for jj in 1..=*j {
                    let phi = branch_residue_hamiltonians(&b, x0, jj)
                        .map_err(|e| NumError("PolymatError", e.to_string()))?;
                    records.push(json!({
                        "j": jj,
                        "phi": phi.iter().map(|&z| complex_json(z)).collect::<Vec<_>>(),
                    }));
                }
                Ok((records, json!({"pass": true})))
            })())
        }
    }
}

fn parse_divisor(s: &str) -> Result<Vec<Complex64>, ConfigError> {
    if s.trim_start().starts_with('[') {
        let v: Value =
            serde_json::from_str(s).map_err(|e| ConfigError(format!("bad divisor JSON: {e}")))?;
        v.as_array()
            .ok_or_else(|| ConfigError("divisor must be a list".into()))?
            .iter()
            .map(|z| parse_complex(z, "divisor point"))
            .collect()
    } else {
        Ok(parse_f64_list(s, "divisor")?
            .into_iter()
            .map(|x| Complex64::new(x, 0.0))
            .collect())
    }
}

fn random_poly_matrix<R: Rng>(rng: &mut R, r: usize, d: usize) -> PolyMatrix {
    PolyMatrix::new(
        (0..r)
            .map(|_| {
                (0..r)
                    .map(|_| {
                        ComplexPolynomial::new(
                            (0..=d)
                                .map(|_| {
                                    Complex64::new(
                                        rng.gen_range(-1.0..1.0),
                                        rng.gen_range(-1.0..1.0),
                                    )
                                })
                                .collect(),
                        )
                    })
                    .collect()
            })
            .collect(),
    )
}

fn run_cubic(common: &Common, cmd: &CubicCmd) -> Result<RunResult, ConfigError> {
    match cmd {
        CubicCmd::Check { prepotential, b0 } => {
            let body = prepotential
                .strip_prefix("poly:")
                .ok_or_else(|| ConfigError("prepotential must start with \"poly:\"".into()))?;
            let p = parse_prepotential(body)?;
            let b0: Vec<Complex64> = parse_f64_list(b0, "b0")?
                .into_iter()
                .map(|x| Complex64::new(x, 0.0))
                .collect();
            if b0.len() != p.g {
                return Err(ConfigError(format!(
                    "b0 has {} entries but the prepotential has {} variables",
                    b0.len(),
                    p.g
                )));
            }
            let sampler = polynomial_hessian_sampler(&p, common.h);
            Ok((|| {
                let t = period_tensor(&sampler, &b0, common.h)
                    .map_err(|e| NumError("CubicError", e.to_string()))?;
                let defect = cubic_defect(&t);
                let pass = defect < common.tol * t.scale().max(1.0);
                Ok((Vec::new(), json!({"defect": defect, "h": common.h, "pass": pass})))
            })())
        }
        CubicCmd::Siegel { matrix } => {
            let v: Value = serde_json::from_str(matrix)
                .map_err(|e| ConfigError(format!("bad matrix JSON: {e}")))?;
            let rows = v
                .as_array()
                .ok_or_else(|| ConfigError("matrix must be a nested array".into()))?;
            let n = rows.len();
            let mut m = DMatrix::<Complex64>::zeros(n, n);
            for (i, row) in rows.iter().enumerate() {
                let entries = row
                    .as_array()
                    .filter(|r| r.len() == n)
                    .ok_or_else(|| ConfigError("matrix must be square".into()))?;
                for (j, e) in entries.iter().enumerate() {
                    m[(i, j)] = parse_complex(e, "matrix entry")?;
                }
            }
            let inside = siegel_check(&m);
            Ok(Ok((Vec::new(), json!({"siegel": inside, "pass": true}))))
        }
    }
}

fn parse_prepotential(s: &str) -> Result<MultivariatePolynomial, ConfigError> {
    let v: Value =
        serde_json::from_str(s).map_err(|e| ConfigError(format!("bad prepotential JSON: {e}")))?;
    let g = v
        .get("g")
        .and_then(Value::as_u64)
        .ok_or_else(|| ConfigError("prepotential needs an integer field \"g\"".into()))?
        as usize;
    let terms = v
        .get("terms")
        .and_then(Value::as_array)
        .ok_or_else(|| ConfigError("prepotential needs a \"terms\" list".into()))?
        .iter()
        .map(|t| {
            let pair = t
                .as_array()
                .filter(|a| a.len() == 2)
                .ok_or_else(|| ConfigError("each term must be [coefficient, exponents]".into()))?;
            let coeff = parse_complex(&pair[0], "term coefficient")?;
            let exps = pair[1]
                .as_array()
                .filter(|e| e.len() == g)
                .ok_or_else(|| ConfigError(format!("each exponent list must have {g} entries")))?
                .iter()
                .map(|e| {
                    e.as_u64()
                        .map(|x| x as u32)
                        .ok_or_else(|| ConfigError("exponents must be nonnegative integers".into()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((coeff, exps))
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    Ok(MultivariatePolynomial::new(g, terms))
}

fn run_selftest(common: &Common) -> RunResult {
    let results = selftest::run_all(common.seed);
    let all_pass = results.iter().all(|r| r.pass);
    let records = results
        .iter()
        .map(|r| serde_json::to_value(r).expect("criterion results serialize"))
        .collect();
    Ok((records, json!({"criteria": results.len(), "pass": all_pass})))
}
