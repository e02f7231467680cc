// `!(x > 0)` rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;

use std::fmt::Display;
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use ctqw_hitting::graph::parse_edge_list;
use ctqw_hitting::hitting::{
    dark_subspace, fit_asymptotics, hitting_matrices, hitting_time, lambda_sweep, pure_density, vertex_state,
};
use ctqw_hitting::trajectory::mc_estimate;
use ctqw_hitting::{
    CMatrix64, CVector64, Complex64, Error, Graph, HittingReport64, HittingTime, MeasurementSetup64, Spectrum64,
};
use serde_json::{json, Value};

use args::{Cli, Command, Format, Init, Output, Target};

/// Exit status and one-line diagnostic.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 1, message: message.into() }
    }

    fn core(context: impl Display, err: Error) -> Self {
        Failure { code: if err.is_numerical() { 2 } else { 1 }, message: format!("{context}: {err}") }
    }
}

type Outcome<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("ctqw: {}", line.strip_prefix("error: ").unwrap_or(line));
            return ExitCode::from(1);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ctqw: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome<()> {
    match command {
        Command::Hit { target, lambda, init, out } => {
            let (graph, setup) = load(&target, lambda.single().map_err(Failure::usage)?)?;
            let psi = initial_state(&init, graph.n())?;
            let report = hitting_time(&graph.hamiltonian(), &setup, &pure_density(&psi))
                .map_err(|e| Failure::core("hit", e))?;
            match out.format.unwrap_or(Format::Json) {
                Format::Json => emit_json(&out, &hit_json(&report, target.final_vertex)),
                Format::Csv => emit_csv(
                    &out,
                    &["lambda", "tau_h", "p_h", "infinite", "dark_dim"],
                    [vec![
                        num(report.lambda),
                        tau_text(&report.tau_h),
                        num(report.p_h),
                        report.tau_h.is_infinite().to_string(),
                        report.dark_dim.to_string(),
                    ]],
                    &[],
                ),
            }
        }
        Command::Matrices { target, lambda, out } => {
            let (graph, setup) = load(&target, lambda.single().map_err(Failure::usage)?)?;
            let m = hitting_matrices(&graph.hamiltonian(), &setup).map_err(|e| Failure::core("matrices", e))?;
            match out.format.unwrap_or(Format::Json) {
                Format::Json => emit_json(
                    &out,
                    &json!({
                        "lambda": setup.rate(),
                        "final": target.final_vertex,
                        "pencil_singular": m.pencil_singular,
                        "probability": matrix_json(&m.probability),
                        "time": matrix_json(&m.time),
                    }),
                ),
                Format::Csv => {
                    let mut rows = Vec::new();
                    for (name, mat) in [("probability", &m.probability), ("time", &m.time)] {
                        for r in 0..mat.nrows() {
                            for c in 0..mat.ncols() {
                                let z = mat[(r, c)];
                                rows.push(vec![name.to_string(), r.to_string(), c.to_string(), num(z.re), num(z.im)]);
                            }
                        }
                    }
                    emit_csv(&out, &["matrix", "row", "col", "re", "im"], rows, &[])
                }
            }
        }
        Command::Dark { target, out } => {
            let graph = read_graph(&target.graph)?;
            check_vertex("--final", target.final_vertex, graph.n())?;
            let spectrum = Spectrum64::of(&graph.hamiltonian()).map_err(|e| Failure::core("spectrum", e))?;
            let dark = dark_subspace(&spectrum, target.final_vertex).map_err(|e| Failure::core("dark", e))?;
            let basis: Vec<CVector64> = dark.basis.iter().map(canonical_phase).collect();
            match out.format.unwrap_or(Format::Json) {
                Format::Json => emit_json(
                    &out,
                    &json!({
                        "final": target.final_vertex,
                        "dim": dark.dim(),
                        "basis": basis.iter().zip(&dark.energies).map(|(b, &e)| json!({
                            "energy": e,
                            "vector": vector_json(b),
                        })).collect::<Vec<_>>(),
                        "per_eigenvalue": dark.per_eigenvalue_dims.iter().map(|&(e, d)| json!({
                            "energy": e,
                            "dim": d,
                        })).collect::<Vec<_>>(),
                    }),
                ),
                Format::Csv => {
                    let rows = basis.iter().zip(&dark.energies).enumerate().flat_map(|(k, (b, &e))| {
                        b.iter()
                            .enumerate()
                            .map(move |(v, z)| vec![k.to_string(), num(e), v.to_string(), num(z.re), num(z.im)])
                    });
                    emit_csv(&out, &["basis", "energy", "vertex", "re", "im"], rows, &[])
                }
            }
        }
        Command::Sweep { target, lambda, init, fit, out } => {
            let graph = read_graph(&target.graph)?;
            check_vertex("--final", target.final_vertex, graph.n())?;
            let rho = pure_density(&initial_state(&init, graph.n())?);
            let points = lambda_sweep(&graph.hamiltonian(), target.final_vertex, &rho, &lambda.rates())
                .map_err(|e| Failure::core("sweep", e))?;
            let fitted = if fit {
                Some(fit_asymptotics(&points).map_err(|e| Failure::core("--fit", e))?)
            } else {
                None
            };
            match out.format.unwrap_or(Format::Csv) {
                Format::Csv => {
                    let rows = points.iter().map(|p| vec![num(p.lambda), tau_text(&p.report.tau_h), num(p.report.p_h)]);
                    let footer: Vec<String> = fitted
                        .iter()
                        .flat_map(|a| [format!("# tau_1,{}", num(a.tau_1)), format!("# tau_minus_1,{}", num(a.tau_minus_1))])
                        .collect();
                    emit_csv(&out, &["lambda", "tau_h", "p_h"], rows, &footer)
                }
                Format::Json => {
                    let mut doc = json!({
                        "final": target.final_vertex,
                        "points": points.iter().map(|p| hit_json(&p.report, target.final_vertex)).collect::<Vec<_>>(),
                    });
                    if let Some(a) = fitted {
                        doc["fit"] = json!({ "tau_1": a.tau_1, "tau_minus_1": a.tau_minus_1 });
                    }
                    emit_json(&out, &doc)
                }
            }
        }
        Command::Simulate { target, lambda, init, seed, n_traj, max_meas, out } => {
            let (graph, setup) = load(&target, lambda.single().map_err(Failure::usage)?)?;
            let psi = initial_state(&init, graph.n())?;
            let spectrum = Spectrum64::of(&graph.hamiltonian()).map_err(|e| Failure::core("spectrum", e))?;
            let stats = mc_estimate(&spectrum, &setup, &psi, n_traj as usize, max_meas as usize, seed)
                .map_err(|e| Failure::core("simulate", e))?;
            let fields: [(&str, String); 9] = [
                ("lambda", num(setup.rate())),
                ("final", target.final_vertex.to_string()),
                ("p_h_hat", num(stats.p_h_hat)),
                ("p_h_stderr", num(stats.p_h_stderr)),
                ("tau_h_hat", num(stats.tau_h_hat)),
                ("tau_h_stderr", num(stats.tau_h_stderr)),
                ("n_traj", stats.n_traj.to_string()),
                ("truncated_fraction", num(stats.truncated_fraction)),
                ("seed", stats.seed.to_string()),
            ];
            match out.format.unwrap_or(Format::Json) {
                Format::Json => emit_json(
                    &out,
                    &json!({
                        "lambda": setup.rate(),
                        "final": target.final_vertex,
                        "max_meas": max_meas,
                        "p_h_hat": stats.p_h_hat,
                        "p_h_stderr": stats.p_h_stderr,
                        "tau_h_hat": stats.tau_h_hat,
                        "tau_h_stderr": stats.tau_h_stderr,
                        "n_traj": stats.n_traj,
                        "truncated_fraction": stats.truncated_fraction,
                        "seed": stats.seed,
                    }),
                ),
                Format::Csv => {
                    let header: Vec<&str> = fields.iter().map(|f| f.0).collect();
                    emit_csv(&out, &header, [fields.iter().map(|f| f.1.clone()).collect()], &[])
                }
            }
        }
        Command::ComplementCheck { target, out } => {
            let graph = read_graph(&target.graph)?;
            check_vertex("--final", target.final_vertex, graph.n())?;
            let witness = graph
                .complement_witness::<f64>(target.final_vertex)
                .map_err(|e| Failure::core(format!("graph file `{}`", target.graph.display()), e))?;
            match out.format.unwrap_or(Format::Json) {
                Format::Json => emit_json(
                    &out,
                    &json!({
                        "final": target.final_vertex,
                        "witness": witness.as_ref().map_or(json!("none"), vector_json),
                    }),
                ),
                Format::Csv => match witness {
                    None => write_out(&out, "none\n".into()),
                    Some(w) => emit_csv(
                        &out,
                        &["vertex", "re", "im"],
                        w.iter().enumerate().map(|(v, z)| vec![v.to_string(), num(z.re), num(z.im)]),
                        &[],
                    ),
                },
            }
        }
    }
}

fn read_graph(path: &Path) -> Outcome<Graph> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read graph file `{}`: {e}", path.display())))?;
    parse_edge_list(&text).map_err(|e| Failure::core(format!("graph file `{}`", path.display()), e))
}

fn check_vertex(flag: &str, v: usize, n: usize) -> Outcome<()> {
    if v < n {
        Ok(())
    } else {
        Err(Failure::usage(format!("{flag}: vertex {v} out of range for a graph with {n} vertices")))
    }
}

fn load(target: &Target, lambda: f64) -> Outcome<(Graph, MeasurementSetup64)> {
    let graph = read_graph(&target.graph)?;
    check_vertex("--final", target.final_vertex, graph.n())?;
    let setup = MeasurementSetup64::new(target.final_vertex, lambda).map_err(|e| Failure::core("--lambda", e))?;
    Ok((graph, setup))
}

fn initial_state(init: &Init, n: usize) -> Outcome<CVector64> {
    match init {
        Init::Vertex(v) => {
            check_vertex("--init", *v, n)?;
            vertex_state(n, *v).map_err(|e| Failure::core("--init", e))
        }
        Init::Uniform => Ok(CVector64::from_element(n, Complex64::new((n as f64).recip().sqrt(), 0.0))),
        Init::Amplitudes(a) if a.len() == n => Ok(CVector64::from_column_slice(a)),
        Init::Amplitudes(a) => Err(Failure::usage(format!("--init: {} amplitudes for a graph with {n} vertices", a.len()))),
    }
}

/// Global phase fixed so the first entry of largest modulus is real positive.
fn canonical_phase(v: &CVector64) -> CVector64 {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    match v.iter().find(|z| z.norm() >= max - 1e-9) {
        Some(&z) if max > 0.0 => v * (z.conj() / z.norm()),
        _ => v.clone(),
    }
}

/// Shortest representation that round-trips, never locale-dependent.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn tau_text(t: &HittingTime<f64>) -> String {
    t.finite().map_or_else(|| "inf".into(), num)
}

fn complex_json(z: Complex64) -> Value {
    // adding 0.0 turns -0.0 into 0.0
    json!([z.re + 0.0, z.im + 0.0])
}

fn vector_json(v: &CVector64) -> Value {
    Value::Array(v.iter().copied().map(complex_json).collect())
}

fn matrix_json(m: &CMatrix64) -> Value {
    Value::Array((0..m.nrows()).map(|r| Value::Array((0..m.ncols()).map(|c| complex_json(m[(r, c)])).collect())).collect())
}

fn hit_json(report: &HittingReport64, final_vertex: usize) -> Value {
    let mut doc = json!({
        "lambda": report.lambda,
        "final": final_vertex,
        "tau_h": report.tau_h.finite().map_or(json!("inf"), |t| json!(t)),
        "infinite": report.tau_h.is_infinite(),
        "p_h": report.p_h,
        "dark_dim": report.dark_dim,
        "pencil_singular": report.pencil_singular,
        "pencil_sigma_min": report.pencil_sigma_min,
    });
    if let HittingTime::Infinite { pseudoinverse_value } = report.tau_h {
        doc["tau_h_pseudoinverse"] = json!(pseudoinverse_value);
    }
    doc
}

fn emit_json(out: &Output, doc: &Value) -> Outcome<()> {
    let mut text = serde_json::to_string_pretty(doc).expect("JSON values always serialize");
    text.push('\n');
    write_out(out, text)
}

fn emit_csv<I>(out: &Output, header: &[&str], rows: I, footer: &[String]) -> Outcome<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| Failure::usage(format!("csv output: {e}"));
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    let mut text = String::from_utf8(w.into_inner().map_err(|e| Failure::usage(format!("csv output: {e}")))?)
        .expect("csv writer emits UTF-8 for UTF-8 input");
    for line in footer {
        text.push_str(line);
        text.push('\n');
    }
    write_out(out, text)
}

fn write_out(out: &Output, text: String) -> Outcome<()> {
    match &out.output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::usage(format!("cannot write --output `{}`: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
