//! Subcommand implementations. Each writes its artifacts into the output
//! directory and returns the process exit status.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use floquet::bloch::{
    asymptotic_residuals, disk_census, solve_bloch, track_bands, BandTable, CensusFamily, ResidualOptions, TrackOptions,
};
use floquet::expansion::{approximation_check_from, plan_expansion, reconstruct, ExpansionOptions, QuadratureRule};
use floquet::fixtures;
use floquet::gelfand::CellFunction;
use floquet::io;
use floquet::operator::{minimal_census_n0, validate_spec, OperatorSpec, DEFAULT_GAP_TOL};
use floquet::singularity::{probe_ess_at_infinity, scan, ProbeOptions, RefineOptions, ScanOptions, ScanResult};
use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::json;

use crate::config::{Family, Format, Settings};
use crate::CliError;

pub fn builtin_operator(name: &str) -> Result<OperatorSpec, CliError> {
    Ok(match name {
        "free" => fixtures::free(2, 1),
        "free3" => fixtures::free(3, 1),
        "constant" => fixtures::constant(2, &[0.0, 1.0]),
        "constant3" => fixtures::constant(3, &[0.0, 1.0]),
        "perturbed" => fixtures::perturbed(2, &[0.0, 1.0], 1e-2),
        "perturbed3" => fixtures::perturbed(3, &[0.0, 1.0], 1e-2),
        "one-sided" => fixtures::one_sided_coupling(1e-3),
        "antisymmetric" => fixtures::antisymmetric_coupling(1e-3),
        "growing" => fixtures::growing_coupling(0.002, 8),
        other => return Err(CliError::Config(format!("unknown fixture '{other}'; expected one of {}", FIXTURES.join(", ")))),
    })
}

pub const FIXTURES: [&str; 9] = ["free", "free3", "constant", "constant3", "perturbed", "perturbed3", "one-sided", "antisymmetric", "growing"];

fn operator(s: &Settings) -> Result<OperatorSpec, CliError> {
    match (&s.raw.operator, &s.raw.fixture) {
        (Some(p), None) => Ok(io::read_operator(&read(p)?)?),
        (None, Some(name)) => builtin_operator(name),
        (Some(_), Some(_)) => Err(CliError::Config("give either --operator or --fixture, not both".into())),
        (None, None) => Err(CliError::Config("an operator is required: --operator FILE or --fixture NAME".into())),
    }
}

fn function(s: &Settings, m: usize) -> Result<CellFunction, CliError> {
    let f = match (&s.raw.function, s.raw.function_fixture.as_deref()) {
        (Some(p), None) => io::read_function(&read(p)?)?,
        (None, Some("step")) => fixtures::step(m),
        (None, Some("bump")) => fixtures::smooth_bump(m),
        (None, Some(other)) => return Err(CliError::Config(format!("unknown function fixture '{other}'; expected step or bump"))),
        (Some(_), Some(_)) => return Err(CliError::Config("give either --function or --function-fixture, not both".into())),
        (None, None) => return Err(CliError::Config("a function is required: --function FILE or --function-fixture NAME".into())),
    };
    if f.m != m {
        return Err(CliError::Config(format!("function has {} components but the operator has {m}", f.m)));
    }
    Ok(f)
}

fn read(p: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))
}

fn write(s: &Settings, name: &str, body: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(&s.out).map_err(|e| CliError::Config(format!("cannot create {}: {e}", s.out.display())))?;
    let path = s.out.join(name);
    std::fs::write(&path, body).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn table(s: &Settings, spec: &OperatorSpec, default: (f64, f64)) -> Result<BandTable, CliError> {
    match &s.raw.bands {
        Some(p) => {
            let t = io::read_bands_json(&read(p)?)?;
            if t.k_trunc != s.k {
                return Err(CliError::Config(format!("band file was computed with K = {}, run uses K = {}", t.k_trunc, s.k)));
            }
            Ok(t)
        }
        None => Ok(track_bands(spec, &s.grid(default), s.k, &TrackOptions::default())?),
    }
}

#[derive(Serialize)]
struct PairOut {
    label: String,
    mode: (i64, usize),
    lambda: C64,
    alpha: C64,
    defective: bool,
}

pub fn spectrum(s: &Settings) -> Result<i32, CliError> {
    let spec = operator(s)?;
    let t = s.t.unwrap_or(0.0);
    let sp = solve_bloch(&spec, C64::new(t, 0.0), s.k)?;
    match s.format {
        Format::Tabular => write(s, "spectrum.csv", &io::write_spectrum_csv(&sp))?,
        Format::Structured => {
            let (off, diag) = sp.biorthogonality_defect();
            let pairs: Vec<PairOut> =
                sp.pairs.iter().map(|p| PairOut { label: p.label.to_string(), mode: p.mode, lambda: p.lambda, alpha: p.alpha, defective: p.defective }).collect();
            let body = json!({"t": t, "n": sp.n, "m": sp.m, "K": sp.k_trunc, "biorthogonality": {"off_diagonal": off, "diagonal": diag}, "pairs": pairs});
            write(s, "spectrum.json", &io::envelope("floquet-spectrum", &body))?
        }
    }
    Ok(0)
}

pub fn bands(s: &Settings) -> Result<i32, CliError> {
    let spec = operator(s)?;
    let tab = table(s, &spec, (0.0, 2.0 * PI))?;
    match s.format {
        Format::Tabular => write(s, "bands.csv", &io::write_bands_csv(&tab))?,
        Format::Structured => write(s, "bands.json", &io::write_bands_json(&tab))?,
    }
    let asym = match validate_spec(&spec, DEFAULT_GAP_TOL) {
        Ok(sys) => serde_json::to_value(asymptotic_residuals(&tab, &sys, &ResidualOptions::default())).map_err(floquet::Error::from)?,
        Err(e) => json!({ "skipped": e.to_string() }),
    };
    write(s, "asymptotics.json", &io::envelope("floquet-asymptotics", &asym))?;
    Ok(0)
}

fn scan_options(s: &Settings) -> ScanOptions {
    ScanOptions { gap_tol: s.gap_tol, window: s.window, refine: RefineOptions { k_trunc: s.k, ..Default::default() }, ..Default::default() }
}

fn scan_status(r: &ScanResult) -> i32 {
    if r.failures.iter().any(|f| f.numerical) {
        2
    } else {
        0
    }
}

pub fn singularities(s: &Settings) -> Result<i32, CliError> {
    let spec = operator(s)?;
    let tab = table(s, &spec, (0.0, 2.0 * PI))?;
    let res = scan(&spec, &tab, &scan_options(s));
    let probe = probe_ess_at_infinity(&tab, &ProbeOptions { k_max: s.k_max, ..Default::default() });
    match s.format {
        Format::Tabular => {
            write(s, "singularities.csv", &io::write_reports_csv(&res.reports))?;
            let mut out = io::csv_header("floquet-infinity-probe");
            out.push_str("k,j,integral,nodes_used\n");
            for e in &probe.entries {
                let _ = writeln!(out, "{},{},{},{}", e.k, e.j, io::num(e.integral), e.nodes_used);
            }
            write(s, "infinity_probe.csv", &out)?;
        }
        Format::Structured => {
            write(s, "singularities.json", &io::write_reports_json(&res.reports))?;
            let body = json!({"candidates": res.candidates, "refined": res.refined, "failures": res.failures, "infinity_probe": probe});
            write(s, "scan.json", &io::envelope("floquet-scan", &body))?;
        }
    }
    Ok(scan_status(&res))
}

pub fn census(s: &Settings) -> Result<i32, CliError> {
    let spec = operator(s)?;
    let sys = validate_spec(&spec, DEFAULT_GAP_TOL)?;
    let (family, center) = match s.family {
        Family::Zero => (CensusFamily::Zero, 0.0),
        Family::Pi => (CensusFamily::Pi, PI),
    };
    let n0 = match s.raw.n0 {
        Some(n0) => n0,
        None => minimal_census_n0(&sys, spec.order(), s.h).ok_or_else(|| {
            CliError::Config(format!("no disk census threshold N0 exists for order {} at h = {}; lower --h or pass --n0", spec.order(), s.h))
        })?,
    };
    let t = s.t.unwrap_or(center);
    if (t - center).abs() > s.h {
        return Err(CliError::Config(format!("census needs |t − {center:.6}| ≤ h = {}, got t = {t}", s.h)));
    }
    let rep = disk_census(&spec, t, s.k, n0, family)?;
    match s.format {
        Format::Tabular => {
            let mut out = io::csv_header("floquet-census");
            out.push_str("k,sign,re_center,im_center,radius,count,expected\n");
            for d in &rep.disks {
                let _ = writeln!(out, "{},{},{},{},{},{},{}", d.k, d.sign, io::num(d.center.re), io::num(d.center.im), io::num(d.radius), d.count, d.expected);
            }
            write(s, "census.csv", &out)?;
        }
        Format::Structured => write(s, "census.json", &io::envelope("floquet-census", &json!({"report": rep, "all_exact": rep.all_exact()})))?,
    }
    Ok(if rep.all_exact() { 0 } else { 2 })
}

pub fn expand(s: &Settings) -> Result<i32, CliError> {
    let spec = operator(s)?;
    let f = function(s, spec.dim())?;
    let tab = table(s, &spec, (-s.h, 2.0 * PI - s.h))?;
    let res = scan(&spec, &tab, &ScanOptions { skip_windows: Some(s.h), ..scan_options(s) });
    let quad = match s.quad_nodes {
        Some(n) => QuadratureRule::with_period_nodes(n, 16),
        None => QuadratureRule::default(),
    };
    let plan = plan_expansion(&res.reports, s.h, s.epsilon, quad)?;
    let opts = ExpansionOptions { k_trunc: s.k, ..Default::default() };
    let rec = reconstruct(&spec, &f, &plan, s.p, &opts)?;
    let check = approximation_check_from(&rec, &f, &plan);
    let contributions: Vec<_> = rec.contributions.iter().map(|c| json!({"name": c.name, "l2_norm": c.l2_norm})).collect();
    let body = json!({
        "plan": plan,
        "contributions": contributions,
        "norm_f": rec.norm_f,
        "error_l2": rec.error_l2,
        "relative_error": rec.relative_error,
        "truncation": rec.truncation,
        "approximation_check": check,
        "scan_failures": res.failures,
    });
    let m = rec.m;
    match s.format {
        Format::Structured => {
            let samples = json!({"x": rec.x, "f": rec.f, "f_hat": rec.f_hat});
            let mut full = body;
            full["samples"] = samples;
            write(s, "expansion.json", &io::envelope("floquet-expansion", &full))?;
        }
        Format::Tabular => {
            write(s, "expansion.json", &io::envelope("floquet-expansion", &body))?;
            let mut out = io::csv_header("floquet-expansion-samples");
            out.push_str("x");
            for c in 0..m {
                let _ = write!(out, ",re_f{c},im_f{c},re_fhat{c},im_fhat{c}");
            }
            out.push('\n');
            for (i, x) in rec.x.iter().enumerate() {
                out.push_str(&io::num(*x));
                for c in 0..m {
                    let (a, b) = (rec.f[i * m + c], rec.f_hat[i * m + c]);
                    let _ = write!(out, ",{},{},{},{}", io::num(a.re), io::num(a.im), io::num(b.re), io::num(b.im));
                }
                out.push('\n');
            }
            write(s, "expansion_samples.csv", &out)?;
        }
    }
    Ok(scan_status(&res))
}
