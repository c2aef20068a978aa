//! File formats: operator and cell-function inputs, band tables and
//! degeneracy reports. Complex numbers are written as `[re, im]`. Every
//! output carries a format name and the crate version.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::bloch::{BandTable, BlochPair, BlochSpectrum, Label};
use crate::error::{Error, Result};
use crate::gelfand::{CellData, CellFunction};
use crate::linalg::CMat;
use crate::operator::{FourierMatrixSeries, OperatorSpec};
use crate::singularity::DegeneracyReport;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

type Pair = [f64; 2];

fn wire(z: C64) -> Pair {
    [z.re, z.im]
}

fn unwire(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn wire_vec(v: &[C64]) -> Vec<Pair> {
    v.iter().map(|z| wire(*z)).collect()
}

fn unwire_vec(v: &[Pair]) -> Vec<C64> {
    v.iter().map(|p| unwire(*p)).collect()
}

/// `# <format> <version>`, the first line of every CSV output.
pub fn csv_header(format: &str) -> String {
    format!("# {format} {VERSION}\n")
}

/// Shortest round-trip text for a CSV cell, in exponent form when the
/// magnitude is outside `[1e-4, 1e15)`.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModeEntry {
    pub q: i64,
    /// Row-major `m × m`.
    pub matrix: Vec<Vec<Pair>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoefficientEntry {
    pub nu: usize,
    pub modes: Vec<ModeEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OperatorFile {
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub coefficients: Vec<CoefficientEntry>,
}

impl OperatorFile {
    pub fn from_spec(spec: &OperatorSpec) -> Self {
        let m = spec.dim();
        let coefficients = spec
            .coeffs()
            .iter()
            .map(|(&nu, s)| CoefficientEntry {
                nu,
                modes: s.nonzero_modes().map(|(q, c)| ModeEntry { q, matrix: (0..m).map(|i| (0..m).map(|j| wire(c[(i, j)])).collect()).collect() }).collect(),
            })
            .collect();
        Self { n: spec.order(), m, coefficients }
    }

    pub fn to_spec(&self) -> Result<OperatorSpec> {
        let m = self.m;
        let mut coeffs = BTreeMap::new();
        for e in &self.coefficients {
            if coeffs.contains_key(&e.nu) {
                return Err(Error::MalformedSpec(format!("coefficient P_{} listed twice", e.nu)));
            }
            let mut modes = Vec::with_capacity(e.modes.len());
            for md in &e.modes {
                if md.matrix.len() != m || md.matrix.iter().any(|r| r.len() != m) {
                    return Err(Error::MalformedSpec(format!("mode q = {} of P_{} is not {m}×{m}", md.q, e.nu)));
                }
                modes.push((md.q, CMat::from_fn(m, m, |i, j| unwire(md.matrix[i][j]))));
            }
            coeffs.insert(e.nu, FourierMatrixSeries::from_modes(m, modes)?);
        }
        OperatorSpec::new(self.n, m, coeffs)
    }
}

pub fn read_operator(text: &str) -> Result<OperatorSpec> {
    let f: OperatorFile = serde_json::from_str(text).map_err(|e| Error::MalformedSpec(format!("operator file: {e}")))?;
    f.to_spec()
}

pub fn write_operator(spec: &OperatorSpec) -> String {
    serde_json::to_string_pretty(&OperatorFile::from_spec(spec)).expect("serializable")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FourierEntry {
    pub q: i64,
    pub value: Vec<Pair>,
}

/// Cells `range[0] ..= range[1]` share the data; exactly one of `samples`
/// and `fourier` is present.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellEntry {
    pub range: [i64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<Vec<Pair>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fourier: Option<Vec<FourierEntry>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FunctionFile {
    pub m: usize,
    pub cells: Vec<CellEntry>,
}

impl FunctionFile {
    pub fn from_function(f: &CellFunction) -> Self {
        let cells = f
            .cells
            .iter()
            .map(|(&c, d)| match d {
                CellData::Samples(v) => CellEntry { range: [c, c], samples: Some(v.iter().map(|x| wire_vec(x)).collect()), fourier: None },
                CellData::Fourier(md) => CellEntry {
                    range: [c, c],
                    samples: None,
                    fourier: Some(md.iter().map(|(q, d)| FourierEntry { q: *q, value: wire_vec(d) }).collect()),
                },
            })
            .collect();
        Self { m: f.m, cells }
    }

    pub fn to_function(&self) -> Result<CellFunction> {
        let mut cells = Vec::new();
        for e in &self.cells {
            let data = match (&e.samples, &e.fourier) {
                (Some(s), None) => CellData::Samples(s.iter().map(|x| unwire_vec(x)).collect()),
                (None, Some(f)) => CellData::Fourier(f.iter().map(|x| (x.q, unwire_vec(&x.value))).collect()),
                _ => return Err(Error::InvalidInput(format!("cells {:?}: give exactly one of samples, fourier", e.range))),
            };
            if e.range[0] > e.range[1] {
                return Err(Error::InvalidInput(format!("empty cell range {:?}", e.range)));
            }
            for c in e.range[0]..=e.range[1] {
                cells.push((c, data.clone()));
            }
        }
        CellFunction::new(self.m, cells)
    }
}

pub fn read_function(text: &str) -> Result<CellFunction> {
    let f: FunctionFile = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("function file: {e}")))?;
    f.to_function()
}

pub fn write_function(f: &CellFunction) -> String {
    serde_json::to_string_pretty(&FunctionFile::from_function(f)).expect("serializable")
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairEntry {
    pub label: Label,
    pub mode: (i64, usize),
    pub lambda: Pair,
    pub alpha: Pair,
    pub defective: bool,
    pub psi: Vec<Pair>,
    pub x_left: Vec<Pair>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeEntry {
    pub t: Pair,
    pub pairs: Vec<PairEntry>,
}

/// Complete band table: spectra with vectors and the node-to-node links.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BandFile {
    pub format: String,
    pub version: String,
    pub n: usize,
    pub m: usize,
    pub k_trunc: usize,
    pub grid: Vec<f64>,
    pub nodes: Vec<NodeEntry>,
    pub links: Vec<Vec<usize>>,
}

pub const BAND_FORMAT: &str = "floquet-bands";

pub fn write_bands_json(table: &BandTable) -> String {
    let first = table.spectra.first();
    let file = BandFile {
        format: BAND_FORMAT.into(),
        version: VERSION.into(),
        n: first.map_or(0, |s| s.n),
        m: first.map_or(0, |s| s.m),
        k_trunc: table.k_trunc,
        grid: table.grid.clone(),
        nodes: table
            .spectra
            .iter()
            .map(|s| NodeEntry {
                t: wire(s.t),
                pairs: s
                    .pairs
                    .iter()
                    .map(|p| PairEntry {
                        label: p.label,
                        mode: p.mode,
                        lambda: wire(p.lambda),
                        alpha: wire(p.alpha),
                        defective: p.defective,
                        psi: wire_vec(&p.psi),
                        x_left: wire_vec(&p.x_left),
                    })
                    .collect(),
            })
            .collect(),
        links: table.links.clone(),
    };
    serde_json::to_string(&file).expect("serializable")
}

pub fn read_bands_json(text: &str) -> Result<BandTable> {
    let f: BandFile = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("band file: {e}")))?;
    if f.format != BAND_FORMAT {
        return Err(Error::InvalidInput(format!("expected format {BAND_FORMAT}, found {}", f.format)));
    }
    let spectra = f
        .nodes
        .iter()
        .map(|nd| BlochSpectrum {
            t: unwire(nd.t),
            n: f.n,
            k_trunc: f.k_trunc,
            m: f.m,
            pairs: nd
                .pairs
                .iter()
                .map(|p| BlochPair {
                    label: p.label,
                    mode: p.mode,
                    lambda: unwire(p.lambda),
                    psi: unwire_vec(&p.psi),
                    x_left: unwire_vec(&p.x_left),
                    alpha: unwire(p.alpha),
                    defective: p.defective,
                })
                .collect(),
        })
        .collect();
    BandTable::from_parts(f.k_trunc, f.grid, spectra, f.links)
}

/// One row per `(node, band)`:
/// `node,t,band,label,k,j,re_lambda,im_lambda,re_alpha,im_alpha,defective`.
pub fn write_bands_csv(table: &BandTable) -> String {
    let mut out = csv_header(BAND_FORMAT);
    out.push_str("node,t,band,label,k,j,re_lambda,im_lambda,re_alpha,im_alpha,defective\n");
    for i in 0..table.grid.len() {
        for b in 0..table.band_count() {
            let p = table.pair(b, i);
            let _ = writeln!(
                out,
                "{i},{},{b},{},{},{},{},{},{},{},{}",
                num(table.grid[i]),
                p.label,
                p.mode.0,
                p.mode.1,
                num(p.lambda.re),
                num(p.lambda.im),
                num(p.alpha.re),
                num(p.alpha.im),
                p.defective as u8
            );
        }
    }
    out
}

/// One row per `(t, label)`: `t,label,k,j,re_lambda,im_lambda,re_alpha,im_alpha,defective`.
pub fn write_spectrum_csv(s: &BlochSpectrum) -> String {
    let mut out = csv_header("floquet-spectrum");
    out.push_str("t,label,k,j,re_lambda,im_lambda,re_alpha,im_alpha,defective\n");
    for p in &s.pairs {
        let _ = writeln!(out, "{},{},{},{},{},{},{},{},{}", num(s.t.re), p.label, p.mode.0, p.mode.1, num(p.lambda.re), num(p.lambda.im), num(p.alpha.re), num(p.alpha.im), p.defective as u8);
    }
    out
}

pub const REPORT_FORMAT: &str = "floquet-degeneracies";

/// One row per report; label lists are `;`-separated.
/// `t_j,re_lambda,im_lambda,multiplicity,labels,gammas,b,s,indeterminate,verdict`.
pub fn write_reports_csv(reports: &[DegeneracyReport]) -> String {
    let join = |v: &[Label]| v.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(";");
    let mut out = csv_header(REPORT_FORMAT);
    out.push_str("t_j,re_lambda,im_lambda,multiplicity,labels,gammas,b,s,indeterminate,verdict\n");
    for r in reports {
        let gammas = r.fits.iter().map(|f| num(f.gamma)).collect::<Vec<_>>().join(";");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:?}",
            num(r.t_j),
            num(r.lambda.re),
            num(r.lambda.im),
            r.multiplicity,
            join(&r.t_set),
            gammas,
            join(&r.b),
            join(&r.s),
            join(&r.indeterminate),
            r.ess
        );
    }
    out
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportFile {
    pub format: String,
    pub version: String,
    pub reports: Vec<DegeneracyReport>,
}

pub fn write_reports_json(reports: &[DegeneracyReport]) -> String {
    serde_json::to_string_pretty(&ReportFile { format: REPORT_FORMAT.into(), version: VERSION.into(), reports: reports.to_vec() }).expect("serializable")
}

pub fn read_reports_json(text: &str) -> Result<Vec<DegeneracyReport>> {
    let f: ReportFile = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("report file: {e}")))?;
    if f.format != REPORT_FORMAT {
        return Err(Error::InvalidInput(format!("expected format {REPORT_FORMAT}, found {}", f.format)));
    }
    Ok(f.reports)
}

/// `{"format", "version", "data"}` wrapper for other structured outputs.
pub fn envelope<T: Serialize>(format: &str, data: &T) -> String {
    #[derive(Serialize)]
    struct Env<'a, T> {
        format: &'a str,
        version: &'a str,
        data: &'a T,
    }
    serde_json::to_string_pretty(&Env { format, version: VERSION, data }).expect("serializable")
}
