use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use linfinity::continuation::{ContinuationBranch, EventKind};
use linfinity::eigenstructure::{case_c_condition, saddle_at_origin};
use linfinity::fields::original_jacobian;
use linfinity::infinity::{separatrix_bisect, separatrix_probe};
use linfinity::lins::{
    close_gap, connect_periodic, continue_het, seed_lin_problem, FiniteTarget, GapOptions, HetOptions, LinProblem, LinSetup,
    PeriodicConnectOptions,
};
use linfinity::numerics::eig::eig3;
use linfinity::output::{
    events_json, flux_table, lin_rows, mesh_rows, read_loop_csv, write_branch_csv, write_events_json, write_flux_csv,
    write_loop_csv, write_orbit_csv, write_projection_csv,
};
use linfinity::periodic::{correct_periodic, floquet, seed_loop, PeriodicOrbit};

use crate::scenario::{parse_range, HetDirection, Scenario};
use crate::CliError;

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Output directory plus the list of files written to it.
struct Out {
    dir: PathBuf,
    files: Vec<String>,
}

impl Out {
    fn new(dir: PathBuf) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        Ok(Self { dir, files: Vec::new() })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| io(&path, e))?;
        self.files.push(name.to_string());
        Ok(BufWriter::new(f))
    }

    fn json(&mut self, name: &str, v: &impl serde::Serialize) -> Result<(), CliError> {
        let w = self.create(name)?;
        serde_json::to_writer_pretty(w, v).map_err(|e| io(&self.dir.join(name), e))
    }
}

fn notes() -> Value {
    json!({
        "charts": {
            "original": "(x, y, z)",
            "compactified": "(xc, zc, wc) = (x w^3, z w, w) with w = y^(-1/4), y > 0; time rescaled by wc^2",
            "blownup": "(xb, zb, wb) = (xc / wc, zc / wc, wc)",
            "glue": "(xb, zb, wb) -> (x, y, z) = (xb / wb^2, 1 / wb^4, zb)",
        },
        "orientation": {
            "u_B": "runs forward in time from the critical cylinder (r*, theta_B, delta_B) in the blown-up chart",
            "u": "runs forward in time from the section x = 0 to the finite target",
            "psi": "unit vector from u(0) to glue(u_B(1)) at seeding; eta > 0 initially",
            "delta_0": "signed distance along the target direction; negative selects the stable-manifold branch entering y > 0",
            "stable_floquet_vector": "sign chosen so that its x component is nonnegative",
        },
        "projection": "p / (1 + |p|) of original coordinates, mapping R^3 into the open unit ball",
        "csv": "17 significant digits; the chart column names the coordinate block of each row",
    })
}

fn lin_setup(s: &Scenario) -> Result<LinSetup, CliError> {
    let params = s.params();
    Ok(LinSetup {
        params,
        target: FiniteTarget::saddle(&params)?,
        delta_0: s.lin.delta_0,
        delta_b: s.lin.delta_b,
        theta_b: s.lin.theta_b,
        crossing_index: s.lin.crossing_index,
        crossing_index_b: s.lin.crossing_index_b,
        ntst: s.numerics.ntst,
        ntst_b: None,
        ncol: s.numerics.ncol,
    })
}

fn lin_summary(p: &LinProblem) -> Value {
    json!({
        "alpha": p.params.alpha, "beta": p.params.beta, "gamma": p.params.gamma,
        "eta": p.eta, "theta_B": p.theta_b, "T0": p.t0, "TB": p.t_b, "delta_0": p.delta_0,
        "crossing_index": p.crossing_index, "crossing_index_B": p.crossing_index_b,
        "gap": p.lin_residual(),
    })
}

fn write_lin(out: &mut Out, stem: &str, p: &LinProblem, min_w: f64) -> Result<(), CliError> {
    out.json(&format!("{stem}.json"), p)?;
    write_orbit_csv(out.create(&format!("{stem}.orbit.csv"))?, &lin_rows(p))?;
    write_projection_csv(out.create(&format!("{stem}.projection.csv"))?, p, min_w)?;
    Ok(())
}

fn write_branch(out: &mut Out, stem: &str, b: &ContinuationBranch) -> Result<(), CliError> {
    write_branch_csv(out.create(&format!("{stem}.branch.csv"))?, b)?;
    write_events_json(out.create(&format!("{stem}.events.json"))?, b)?;
    Ok(())
}

fn read_lin(path: &Path) -> Result<LinProblem, CliError> {
    let f = File::open(path).map_err(|e| io(path, e))?;
    serde_json::from_reader(std::io::BufReader::new(f)).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn periodic_orbit(s: &Scenario) -> Result<PeriodicOrbit, CliError> {
    let params = s.params();
    let pc = &s.periodic;
    let samples = match &pc.loop_file {
        Some(p) => read_loop_csv(File::open(p).map_err(|e| io(p, e))?)?,
        None => seed_loop(&params, pc.seed[0], pc.seed[1], pc.returns, pc.samples)?.0,
    };
    Ok(correct_periodic(&samples, None, &params, s.numerics.ntst, s.numerics.ncol)?)
}

fn equilibria(s: &Scenario, _out: &mut Out) -> Result<Value, CliError> {
    let p = s.params();
    let e = eig3(&original_jacobian(&[0.0; 3], &p))?;
    println!("eigenvalues at the origin: {:.10} {:.10} {:.10}", e.values[0], e.values[1], e.values[2]);
    for (l, v) in e.values.iter().zip(&e.vectors) {
        println!("  {l:+.6}: ({:+.6}, {:+.6}, {:+.6})", v[0], v[1], v[2]);
    }
    let margin = match saddle_at_origin(&p) {
        Ok(sd) => {
            let m = case_c_condition(&sd);
            println!("case-C margin: {m:.10}");
            Some(m)
        }
        Err(err) => {
            println!("not a saddle of the expected type: {err}");
            None
        }
    };
    Ok(json!({ "eigenvalues": e.values, "eigenvectors": e.vectors, "case_c_margin": margin }))
}

fn flux(s: &Scenario, out: &mut Out) -> Result<Value, CliError> {
    let (a, h, b) = parse_range(&s.flux.table)?;
    let rows = flux_table(a, h, b, s.flux.w_b, &s.params())?;
    write_flux_csv(out.create("flux.csv")?, &rows)?;
    let zeros: Vec<f64> = rows.iter().filter(|r| r[1].abs() < 1e-12).map(|r| r[0]).collect();
    println!("{} rows; zero flux at r = {:?}", rows.len(), zeros);
    Ok(json!({ "rows": rows.len(), "zeros": zeros }))
}

fn probe(s: &Scenario, _out: &mut Out) -> Result<Value, CliError> {
    let p = s.params();
    let mut outcomes = Vec::new();
    for &x0 in &s.probe.x0 {
        let o = separatrix_probe(&p, x0, s.probe.delta)?;
        println!("x0 = {x0}: {o:?}");
        outcomes.push(json!({ "x0": x0, "outcome": o }));
    }
    let critical = match s.probe.bisect {
        Some([lo, hi]) => {
            let x = separatrix_bisect(&p, s.probe.delta, lo, hi, s.probe.tol)?;
            println!("capture boundary at x_B = {x:.8}");
            Some(x)
        }
        None => None,
    };
    Ok(json!({ "probes": outcomes, "critical_x": critical }))
}

fn seed(s: &Scenario, out: &mut Out) -> Result<Value, CliError> {
    let lp = seed_lin_problem(&lin_setup(s)?)?;
    println!("seeded: eta = {:.10}, T0 = {:.6}, TB = {:.6}, theta_B = {:.6}", lp.eta, lp.t0, lp.t_b, lp.theta_b);
    write_lin(out, "seed", &lp, s.paths.min_w)?;
    Ok(lin_summary(&lp))
}

fn close_gap_cmd(s: &Scenario, out: &mut Out) -> Result<Value, CliError> {
    let lp = seed_lin_problem(&lin_setup(s)?)?;
    let base = GapOptions::default();
    let opts = GapOptions { free: s.lin.free, range: (s.lin.range[0], s.lin.range[1]), continuation: s.continuation(base.continuation) };
    let closed = close_gap(&lp, &opts)?;
    let name = s.lin.free.name();
    let value = closed.params.get(s.lin.free);
    println!("gap closed at {name} = {value:.10} ({} branch points)", closed.branch.points.len());
    write_branch(out, "close-gap", &closed.branch)?;
    write_lin(out, "connecting", &closed.connecting, s.paths.min_w)?;
    Ok(json!({ "free": name, "value": value, "connecting": lin_summary(&closed.connecting), "events": events_json(&closed.branch) }))
}

fn continue_het_cmd(s: &Scenario, out: &mut Out) -> Result<Value, CliError> {
    let input = s.paths.input.clone().unwrap_or_else(|| out.dir.join("connecting.json"));
    let connecting = read_lin(&input)?;
    let signs: &[(f64, &str)] = match s.het.direction {
        HetDirection::Up => &[(1.0, "up")],
        HetDirection::Down => &[(-1.0, "down")],
        HetDirection::Both => &[(1.0, "up"), (-1.0, "down")],
    };
    let mut results = Vec::new();
    for &(sign, tag) in signs {
        let base = HetOptions::default();
        let opts = HetOptions {
            alpha_range: (s.het.alpha_range[0], s.het.alpha_range[1]),
            beta_range: (s.het.beta_range[0], s.het.beta_range[1]),
            alpha_sign: sign,
            continuation: s.continuation(base.continuation),
        };
        let b = continue_het(&connecting, &opts)?;
        let ai = b.column("alpha").expect("alpha summary");
        let bi = b.column("beta").expect("beta summary");
        let folds: Vec<[f64; 2]> = b.events_of(EventKind::Fold).map(|e| [e.data[ai], e.data[bi]]).collect();
        let end = b.last();
        println!("{tag}: {} points, ends at alpha = {:.6}, beta = {:.6} ({:?}); alpha folds at {:?}", b.points.len(), end.data[ai], end.data[bi], b.end, folds);
        write_branch(out, &format!("het-{tag}"), &b)?;
        results.push(json!({ "direction": tag, "points": b.points.len(), "end": b.end, "folds": folds }));
    }
    Ok(json!({ "input": input, "branches": results }))
}

fn periodic_cmd(s: &Scenario, out: &mut Out) -> Result<Value, CliError> {
    let o = periodic_orbit(s)?;
    let b = o.base_point();
    let defect = o.closure_defect()?;
    println!("period {:.12}, base point ({:.10}, {:.10}, {:.10}), closure defect {defect:.2e}", o.period, b[0], b[1], b[2]);
    write_loop_csv(out.create("periodic.loop.csv")?, &o.samples())?;
    out.json("periodic.json", &o)?;
    Ok(json!({ "period": o.period, "base_point": b, "amplitude": o.amplitude(), "closure_defect": defect }))
}

fn floquet_cmd(s: &Scenario, out: &mut Out) -> Result<Value, CliError> {
    let o = periodic_orbit(s)?;
    let f = floquet(&o)?;
    for (k, m) in f.multipliers.iter().enumerate() {
        println!("multiplier {k}: {:.12e} {:+.3e}i{}", m.re, m.im, if k == f.trivial { " (trivial)" } else { "" });
    }
    println!("stable vector ({:.10}, {:.10}, {:.10}); Liouville defect {:.2e}", f.stable_vector[0], f.stable_vector[1], f.stable_vector[2], f.liouville_defect);
    write_orbit_csv(out.create("floquet.eigenfunction.csv")?, &mesh_rows("v", &f.eigenfunction))?;
    let summary = json!({
        "period": o.period,
        "multipliers": f.multipliers,
        "trivial": f.trivial,
        "stable_multiplier": f.stable_multiplier,
        "stable_vector": f.stable_vector,
        "bundle_residual": f.bundle_residual,
        "liouville_defect": f.liouville_defect,
    });
    out.json("floquet.json", &summary)?;
    Ok(summary)
}

fn connect_periodic_cmd(s: &Scenario, out: &mut Out) -> Result<Value, CliError> {
    let params = s.params();
    let o = periodic_orbit(s)?;
    let f = floquet(&o)?;
    let mut dir = f.stable_vector;
    if dir[0] < 0.0 {
        dir = dir.map(|v| -v);
    }
    let pc = &s.periodic;
    let opts = PeriodicConnectOptions {
        delta_0: pc.delta_0,
        crossing_index: pc.crossing_index,
        theta_b: pc.theta_b,
        delta_b: s.lin.delta_b,
        delta_range: (pc.delta_range[0], pc.delta_range[1]),
        continuation: s.continuation(PeriodicConnectOptions::default().continuation),
    };
    let (lp, branch) = connect_periodic(&params, o.base_point(), dir, &opts)?;
    println!("connection: delta_0 = {:.10}, theta_B = {:.10}, eta = {:.1e}, gap {:.1e}", lp.delta_0, lp.theta_b, lp.eta, lp.lin_residual());
    write_branch(out, "periodic-connection", &branch)?;
    write_lin(out, "periodic-connection", &lp, s.paths.min_w)?;
    Ok(json!({ "period": o.period, "stable_vector": dir, "connection": lin_summary(&lp) }))
}

fn export(s: &Scenario, out: &mut Out) -> Result<Value, CliError> {
    let input = s.paths.input.clone().ok_or_else(|| CliError::Config("export needs --input".into()))?;
    let lp = read_lin(&input)?;
    let stem = input.file_stem().and_then(|x| x.to_str()).unwrap_or("export").to_string();
    write_orbit_csv(out.create(&format!("{stem}.orbit.csv"))?, &lin_rows(&lp))?;
    write_projection_csv(out.create(&format!("{stem}.projection.csv"))?, &lp, s.paths.min_w)?;
    println!("wrote {}", out.files.join(", "));
    Ok(lin_summary(&lp))
}

/// Runs one command and writes `<command>.metadata.json` next to its results.
pub fn run(command: &str, s: &Scenario) -> Result<(), CliError> {
    let mut out = Out::new(s.out_dir())?;
    let results = match command {
        "equilibria" => equilibria(s, &mut out),
        "flux" => flux(s, &mut out),
        "probe" => probe(s, &mut out),
        "seed" => seed(s, &mut out),
        "close-gap" => close_gap_cmd(s, &mut out),
        "continue-het" => continue_het_cmd(s, &mut out),
        "periodic" => periodic_cmd(s, &mut out),
        "floquet" => floquet_cmd(s, &mut out),
        "connect-periodic" => connect_periodic_cmd(s, &mut out),
        "export" => export(s, &mut out),
        other => Err(CliError::Config(format!("unknown command '{other}'"))),
    }?;
    let meta = json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "scenario": s,
        "resolved": {
            "out_dir": out.dir,
            "newton": s.newton(),
            "gap_continuation": s.continuation(GapOptions::default().continuation),
            "het_continuation": s.continuation(HetOptions::default().continuation),
            "periodic_continuation": s.continuation(PeriodicConnectOptions::default().continuation),
        },
        "notes": notes(),
        "artifacts": out.files,
        "results": results,
    });
    out.json(&format!("{command}.metadata.json"), &meta)
}
