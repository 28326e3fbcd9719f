use std::io::Write;

use serde::Serialize;
use telegraph_core::law::{Atoms, DensityPoint, ProcessLaw};
use telegraph_core::monte_carlo::{
    binomial_se, estimate_law, estimate_mean_velocity, simulate_path, EmpiricalLaw, SamplePath,
};
use telegraph_core::registry::Registry;
use telegraph_core::rng::path_rng;
use telegraph_core::validation::{
    check_empirical_vs_analytic, check_enumeration, check_normalization, mismatched_scheme, Check, Provenance,
    ValidationReport,
};
use telegraph_core::{Model, VelocitySign};

use crate::{open_output, Failure, FiguresArgs, Format, LawArgs, MeanvelArgs, ModelArgs, SimulateArgs, ValidateArgs};

const SIGNS: [VelocitySign; 2] = [VelocitySign::Forward, VelocitySign::Backward];

fn build_model(registry: &Registry, m: &ModelArgs) -> Result<Model, Failure> {
    if !(m.t > 0.0 && m.t.is_finite()) {
        return Err(Failure::Usage(format!("--t {} must be a positive number", m.t)));
    }
    Ok(registry.model(&m.scheme, &m.intertimes, m.c, m.v)?)
}

/// Canonical model flags; f64 `Display` round-trips exactly.
fn model_flags(model: &Model, t: f64) -> String {
    format!(
        "--scheme {} --intertimes {} --c {} --v {} --t {}",
        model.scheme,
        model.intertimes.spec(),
        model.motion.c,
        model.motion.v,
        t
    )
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Interior grid: midpoints of `n` equal cells of the support.
fn x_grid(law: &ProcessLaw, n: u64) -> Vec<f64> {
    let (lo, hi) = law.support();
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

#[derive(Serialize)]
struct LawJson<'a> {
    config: &'a str,
    t: f64,
    support: (f64, f64),
    atoms: Atoms,
    points: Vec<PointJson>,
}

#[derive(Serialize)]
struct PointJson {
    x: f64,
    p: f64,
    p_given_c: f64,
    p_given_minus_v: f64,
}

fn write_law(out: &mut dyn Write, echo: &str, law: &ProcessLaw, points: &[DensityPoint], format: Format) -> Result<(), Failure> {
    let a = law.atoms;
    let (lo, hi) = law.support();
    match format {
        Format::Csv => {
            writeln!(out, "# {echo}")?;
            writeln!(out, "kind,x,p,p_given_c,p_given_minus_v")?;
            for d in points {
                writeln!(out, "density,{},{},{},{}", num(d.x), num(d.total), num(d.given_forward), num(d.given_backward))?;
            }
            writeln!(out, "atom,{},{},{},{}", num(lo), num(a.minus), num(0.0), num(a.minus_given_backward))?;
            writeln!(out, "atom,{},{},{},{}", num(hi), num(a.plus), num(a.plus_given_forward), num(0.0))?;
        }
        Format::Json => {
            let doc = LawJson {
                config: echo,
                t: law.t,
                support: (lo, hi),
                atoms: a,
                points: points
                    .iter()
                    .map(|d| PointJson {
                        x: d.x,
                        p: d.total,
                        p_given_c: d.given_forward,
                        p_given_minus_v: d.given_backward,
                    })
                    .collect(),
            };
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn evaluate_law(registry: &Registry, model: Model, t: f64, evaluator: &str, grid: u64) -> Result<(ProcessLaw, Vec<DensityPoint>), Failure> {
    let law = ProcessLaw::new(model, t, registry.law(evaluator)?)?;
    let points = x_grid(&law, grid)
        .into_iter()
        .map(|x| law.density(x))
        .collect::<telegraph_core::Result<Vec<_>>>()?;
    Ok((law, points))
}

pub fn law(a: &LawArgs) -> Result<(), Failure> {
    let registry = Registry::builtin();
    let model = build_model(&registry, &a.model)?;
    let echo = format!(
        "telegraph law {} --grid {} --evaluator {} --format {}",
        model_flags(&model, a.model.t),
        a.grid,
        a.evaluator,
        a.out.format.as_str()
    );
    let (law, points) = evaluate_law(&registry, model, a.model.t, &a.evaluator, a.grid)?;
    let mut out = open_output(a.out.output.as_ref())?;
    write_law(&mut out, &echo, &law, &points, a.out.format)
}

#[derive(Serialize)]
struct BinJson {
    lo: f64,
    hi: f64,
    count: u64,
    density: f64,
    std_err: f64,
}

#[derive(Serialize)]
struct SimulateJson<'a> {
    config: &'a str,
    t: f64,
    n_paths: u64,
    seed: u64,
    atom_minus: AtomJson,
    atom_plus: AtomJson,
    bins: Vec<BinJson>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    traces: Vec<SamplePath>,
}

#[derive(Serialize)]
struct AtomJson {
    x: f64,
    count: u64,
    frequency: f64,
    std_err: f64,
}

fn atom_json(x: f64, count: u64, n: u64) -> AtomJson {
    let f = count as f64 / n as f64;
    AtomJson {
        x,
        count,
        frequency: f,
        std_err: binomial_se(f, n),
    }
}

fn write_trace_csv(out: &mut dyn Write, traces: &[SamplePath]) -> Result<(), Failure> {
    writeln!(out, "path,k,epoch,velocity,position")?;
    for (i, p) in traces.iter().enumerate() {
        for k in 0..p.epochs.len() {
            writeln!(out, "{i},{k},{},{},{}", num(p.epochs[k]), num(p.velocities[k]), num(p.positions[k]))?;
        }
        let last = *p.velocities.last().unwrap_or(&0.0);
        writeln!(out, "{i},{},{},{},{}", p.epochs.len(), num(p.t), num(last), num(p.final_position))?;
    }
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<(), Failure> {
    let registry = Registry::builtin();
    let model = build_model(&registry, &a.model)?;
    let t = a.model.t;
    let echo = format!(
        "telegraph simulate {} --paths {} --bins {} --trace {} --seed {} --format {}",
        model_flags(&model, t),
        a.paths,
        a.bins,
        a.trace,
        a.seed,
        a.out.format.as_str()
    );
    let emp = estimate_law(&model, t, a.paths, a.bins as usize, a.seed)?;
    // traces replay the first paths of the run
    let traces = (0..a.trace)
        .map(|i| simulate_path(&model, t, &mut path_rng(a.seed, i), None, true))
        .collect::<telegraph_core::Result<Vec<_>>>()?;
    let mut out = open_output(a.out.output.as_ref())?;
    let (lo, hi) = model.motion.support(t);
    match a.out.format {
        Format::Csv => {
            writeln!(out, "# {echo}")?;
            writeln!(out, "kind,lo,hi,count,frequency,density,std_err")?;
            for i in 0..emp.counts.len() {
                writeln!(
                    out,
                    "bin,{},{},{},{},{},{}",
                    num(emp.edges[i]),
                    num(emp.edges[i + 1]),
                    emp.counts[i],
                    num(emp.bin_freq(i)),
                    num(emp.density(i)),
                    num(emp.density_std_err(i))
                )?;
            }
            for (x, count) in [(lo, emp.atom_minus), (hi, emp.atom_plus)] {
                let f = count as f64 / emp.n_paths as f64;
                writeln!(out, "atom,{},{},{count},{},,{}", num(x), num(x), num(f), num(binomial_se(f, emp.n_paths)))?;
            }
            if !traces.is_empty() {
                writeln!(out)?;
                write_trace_csv(&mut out, &traces)?;
            }
        }
        Format::Json => {
            let doc = SimulateJson {
                config: &echo,
                t,
                n_paths: emp.n_paths,
                seed: emp.seed,
                atom_minus: atom_json(lo, emp.atom_minus, emp.n_paths),
                atom_plus: atom_json(hi, emp.atom_plus, emp.n_paths),
                bins: bins_json(&emp),
                traces,
            };
            serde_json::to_writer_pretty(&mut out, &doc)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn bins_json(emp: &EmpiricalLaw) -> Vec<BinJson> {
    (0..emp.counts.len())
        .map(|i| BinJson {
            lo: emp.edges[i],
            hi: emp.edges[i + 1],
            count: emp.counts[i],
            density: emp.density(i),
            std_err: emp.density_std_err(i),
        })
        .collect()
}

pub fn validate(a: &ValidateArgs) -> Result<(), Failure> {
    let registry = Registry::builtin();
    let model = build_model(&registry, &a.model)?;
    let t = a.model.t;
    let evaluator = registry.law(&a.evaluator)?;
    let method = registry.mean_velocity(&a.method)?;
    let echo = format!(
        "telegraph validate {} --paths {} --bins {} --k-max {} --evaluator {} --method {} --seed {}{}",
        model_flags(&model, t),
        a.paths,
        a.bins,
        a.k_max,
        a.evaluator,
        a.method,
        a.seed,
        if a.negative_control { " --negative-control" } else { "" }
    );
    // the sample comes from a different scheme under the negative control
    let simulated = if a.negative_control {
        let wrong = mismatched_scheme(&model.scheme)?;
        registry.model(&wrong.to_string(), &model.intertimes.spec(), model.motion.c, model.motion.v)?
    } else {
        model.clone()
    };

    let mut report = ValidationReport::new(echo);
    let law = ProcessLaw::new(model.clone(), t, evaluator)?;
    for given in [None, Some(VelocitySign::Forward), Some(VelocitySign::Backward)] {
        report.push(check_normalization(&law, given));
    }
    report.extend(check_enumeration(&model.scheme, a.k_max));
    let emp = estimate_law(&simulated, t, a.paths, a.bins as usize, a.seed)?;
    report.extend(check_empirical_vs_analytic(&emp, &law));
    for (i, s) in SIGNS.into_iter().enumerate() {
        let name = format!("mean velocity | V0={s} at t={t} [{}]", method.name());
        let check = method.mean_velocity(&model, t, s).and_then(|mv| {
            let mc = estimate_mean_velocity(&simulated, t, a.paths, s, a.seed.wrapping_add(1 + i as u64))?;
            Ok(Check::within(
                name.clone(),
                mv.value,
                mc.mean,
                3.0 * mc.std_err,
                Provenance::Simulation,
                "3 standard errors of the conditioned sample mean",
            ))
        });
        report.push(check.unwrap_or_else(|e| Check::errored(name, Provenance::Simulation, &e)));
    }

    let mut out = open_output(a.output.as_ref())?;
    serde_json::to_writer_pretty(&mut out, &report)?;
    writeln!(out)?;
    out.flush()?;
    for c in &report.checks {
        eprintln!("{} {}", if c.passed { "pass" } else { "FAIL" }, c.name);
    }
    eprintln!("{} passed, {} failed", report.passed, report.failed);
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

#[derive(Serialize)]
struct MeanvelRow {
    t: f64,
    given_c: f64,
    given_minus_v: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_given_c: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc_given_minus_v: Option<(f64, f64)>,
}

pub fn meanvel(a: &MeanvelArgs) -> Result<(), Failure> {
    let registry = Registry::builtin();
    let model = build_model(&registry, &a.model)?;
    let method = registry.mean_velocity(&a.method)?;
    let echo = format!(
        "telegraph meanvel {} --steps {} --method {} --mc-paths {} --seed {} --format {}",
        model_flags(&model, a.model.t),
        a.steps,
        a.method,
        a.mc_paths,
        a.seed,
        a.out.format.as_str()
    );
    let mut rows = Vec::new();
    for i in 1..=a.steps {
        let t = a.model.t * i as f64 / a.steps as f64;
        let f = method.mean_velocity(&model, t, VelocitySign::Forward)?.value;
        let b = method.mean_velocity(&model, t, VelocitySign::Backward)?.value;
        let mc = |s: VelocitySign, k: u64| -> Result<Option<(f64, f64)>, Failure> {
            if a.mc_paths == 0 {
                return Ok(None);
            }
            let seed = a.seed.wrapping_add(2 * i + k);
            let e = estimate_mean_velocity(&model, t, a.mc_paths, s, seed)?;
            Ok(Some((e.mean, e.std_err)))
        };
        rows.push(MeanvelRow {
            t,
            given_c: f,
            given_minus_v: b,
            mc_given_c: mc(VelocitySign::Forward, 0)?,
            mc_given_minus_v: mc(VelocitySign::Backward, 1)?,
        });
    }
    let mut out = open_output(a.out.output.as_ref())?;
    match a.out.format {
        Format::Csv => {
            writeln!(out, "# {echo}")?;
            if a.mc_paths > 0 {
                writeln!(out, "t,given_c,given_minus_v,mc_given_c,se_given_c,mc_given_minus_v,se_given_minus_v")?;
            } else {
                writeln!(out, "t,given_c,given_minus_v")?;
            }
            for r in &rows {
                write!(out, "{},{},{}", num(r.t), num(r.given_c), num(r.given_minus_v))?;
                if let (Some((fm, fs)), Some((bm, bs))) = (r.mc_given_c, r.mc_given_minus_v) {
                    write!(out, ",{},{},{},{}", num(fm), num(fs), num(bm), num(bs))?;
                }
                writeln!(out)?;
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                config: &'a str,
                rows: &'a [MeanvelRow],
            }
            serde_json::to_writer_pretty(&mut out, &Doc { config: &echo, rows: &rows })?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// One curve of a figure: file stem, scheme, intertimes and `t`.
struct Curve {
    stem: String,
    scheme: String,
    intertimes: String,
    t: f64,
}

fn figure_curves(fig: u8) -> Vec<Curve> {
    let damped = |stem: String, p: f64, mu: f64, t: f64| Curve {
        stem,
        scheme: format!("bernoulli:p={p}"),
        intertimes: format!("linexp:lambda=1,mu={mu}"),
        t,
    };
    let polya = |stem: String, b: f64, r: f64, a: f64, t: f64| Curve {
        stem,
        scheme: format!("polya:b={b},r={r},A={a}"),
        intertimes: "gammaexp:lambda=1,mu=1".into(),
        t,
    };
    let mut out = Vec::new();
    match fig {
        3 | 4 => {
            let (t, ps): (f64, &[f64]) = if fig == 3 {
                (1.0, &[0.1, 0.2, 0.3, 0.4, 0.5])
            } else {
                (10.0, &[0.1, 0.3, 0.5, 0.7, 0.9])
            };
            for mu in [1.0, 2.0] {
                for &p in ps {
                    out.push(damped(format!("fig{fig}_mu{mu}_p{p}"), p, mu, t));
                }
            }
        }
        5 => {
            for p in [0.1, 0.5] {
                for mu in [1.0, 2.0, 3.0, 4.0] {
                    out.push(damped(format!("fig5_p{p}_mu{mu}"), p, mu, 10.0));
                }
            }
        }
        6 | 8 => {
            let t = if fig == 6 { 1.0 } else { 10.0 };
            for b in [1.0, 2.0] {
                for r in [1.0, 2.0, 3.0, 4.0] {
                    out.push(polya(format!("fig{fig}_b{b}_r{r}"), b, r, 2.0, t));
                }
            }
        }
        7 => {
            for b in [1.0, 2.0] {
                for a in [0.4, 0.6, 0.8, 1.0] {
                    out.push(polya(format!("fig7_b{b}_A{a}"), b, 1.0, a, 1.0));
                }
            }
        }
        _ => {}
    }
    out
}

pub fn figures(a: &FiguresArgs) -> Result<(), Failure> {
    if let Some(bad) = a.only.iter().find(|f| !(3..=8).contains(*f)) {
        return Err(Failure::Usage(format!("no figure {bad}; choose from 3 to 8")));
    }
    std::fs::create_dir_all(&a.out_dir)
        .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", a.out_dir.display())))?;
    let registry = Registry::builtin();
    for &fig in &a.only {
        for curve in figure_curves(fig) {
            let model = registry.model(&curve.scheme, &curve.intertimes, 1.0, 1.0)?;
            let echo = format!(
                "telegraph law {} --grid {} --evaluator closed-form --format csv",
                model_flags(&model, curve.t),
                a.grid
            );
            let (law, points) = evaluate_law(&registry, model, curve.t, "closed-form", a.grid)?;
            let path = a.out_dir.join(format!("{}.csv", curve.stem));
            let mut out = open_output(Some(&path))?;
            write_law(&mut out, &echo, &law, &points, Format::Csv)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}
