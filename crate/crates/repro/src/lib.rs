//! Reproduction harness for the reference tables.
//!
//! Every table is a batch of independent solver runs ("cells"). Cells run in
//! parallel and are assembled by index, so the numeric columns do not depend
//! on the schedule. Only the timing columns vary between runs.
use std::io::Write;
use std::time::Instant;

use cnopt::problems::{default_config, ex45_direct, make_problem, ProblemSpec};
use cnopt::solver::{solve, SolveStatus};
use cnopt::CnError;
use rayon::prelude::*;
use thiserror::Error;

/// Magnitude above which a coordinate counts as nonzero.
pub const ZERO_TOL: f64 = 1e-4;
/// Largest dimension run at desk scale.
pub const DESK_MAX_N: usize = 100;
/// Largest block count run at desk scale.
pub const DESK_MAX_P: usize = 20;

#[derive(Debug, Error)]
pub enum ReproError {
    #[error("no table {0}; tables are numbered 1 to 8")]
    UnknownTable(u32),
    #[error("paper scale takes hours and must be requested explicitly")]
    LongRunRefused,
    #[error("unknown scale {0:?}; expected desk or paper")]
    UnknownScale(String),
    #[error(transparent)]
    Solver(#[from] CnError),
    #[error("writing CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, ReproError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// Rows with `n <= 100` and `p <= 20` only.
    Desk,
    Paper,
}

impl Scale {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "desk" => Ok(Self::Desk),
            "paper" => Ok(Self::Paper),
            _ => Err(ReproError::UnknownScale(s.to_string())),
        }
    }

    pub fn admits(self, n: usize, p: usize) -> bool {
        self == Self::Paper || (n <= DESK_MAX_N && p <= DESK_MAX_P)
    }
}

/// Outcome of one solver run with the reference parameters.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub spec: ProblemSpec,
    pub status: SolveStatus,
    pub iterations: usize,
    pub x: Vec<f64>,
    pub f: f64,
    pub residual: f64,
    pub seconds: f64,
}

impl CellResult {
    pub fn nnz(&self) -> usize {
        nnz(&self.x)
    }
}

pub fn nnz(x: &[f64]) -> usize {
    x.iter().filter(|v| v.abs() > ZERO_TOL).count()
}

/// Solves `spec` with the parameters of the reference runs.
pub fn run_cell(spec: &ProblemSpec) -> Result<CellResult> {
    let (form, part) = make_problem(spec)?;
    let cfg = default_config(spec)?;
    let t = Instant::now();
    let r = solve(&form, &part, &cfg)?;
    let seconds = t.elapsed().as_secs_f64();
    let f = form.f_direct(&r.state.x).unwrap_or(r.state.g_value);
    Ok(CellResult {
        spec: spec.clone(),
        status: r.status,
        iterations: r.iterations(),
        x: r.state.x,
        f,
        residual: r.state.residual,
        seconds,
    })
}

/// Runs the cells in parallel; the output order matches `specs`.
pub fn run_cells(specs: &[ProblemSpec]) -> Result<Vec<CellResult>> {
    specs.par_iter().map(run_cell).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub id: u32,
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Rows or cells left out at the chosen scale.
    pub skipped: Vec<String>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for row in &self.rows {
            out.write_record(row)?;
        }
        out.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

const T1_N: [usize; 7] = [5, 10, 30, 50, 100, 500, 1000];
const T1_LAMBDA: [f64; 5] = [1.0, 10.0, 100.0, 500.0, 1000.0];
const T2_N: usize = 100;
const T2_LAMBDA: [f64; 11] = [10.0, 100.0, 1000.0, 2000.0, 3000.0, 5000.0, 8000.0, 10000.0, 15000.0, 20000.0, 21000.0];
const T3_N: [usize; 6] = [5, 10, 50, 250, 500, 1000];
const T4_N: [usize; 6] = [6, 30, 90, 300, 600, 1500];
const T5_E: [usize; 5] = [50, 25, 10, 5, 2];
const T6_E: [usize; 5] = [20, 10, 5, 4, 2];
const T7_E: [usize; 4] = [10, 5, 4, 2];
const T8_P5: [usize; 5] = [10, 40, 200, 1000, 2000];
const T8_P2: [usize; 5] = [25, 100, 500, 2500, 5000];

/// Builds table `id`. Paper scale is refused unless `allow_long` is set.
pub fn build(id: u32, scale: Scale, allow_long: bool) -> Result<Table> {
    if !(1..=8).contains(&id) {
        return Err(ReproError::UnknownTable(id));
    }
    if scale == Scale::Paper && !allow_long {
        return Err(ReproError::LongRunRefused);
    }
    match id {
        1 => table1(scale),
        2 => table2(scale),
        3 => table_equal(3, 5, &T3_N, scale),
        4 => table_equal(4, 3, &T4_N, scale),
        5 => table_chained(5, 50, &T5_E, scale),
        6 => table_chained(6, 200, &T6_E, scale),
        7 => table_chained(7, 1000, &T7_E, scale),
        _ => table8(scale),
    }
}

fn fmt_lambda(l: f64) -> String {
    format!("{l}")
}

fn table1(scale: Scale) -> Result<Table> {
    let mut skipped = Vec::new();
    let ns: Vec<usize> = T1_N
        .iter()
        .copied()
        .filter(|&n| {
            let ok = scale.admits(n, n / 5);
            if !ok {
                skipped.push(format!("n = {n}"));
            }
            ok
        })
        .collect();
    let specs: Vec<ProblemSpec> =
        ns.iter().flat_map(|&n| T1_LAMBDA.iter().map(move |&l| ProblemSpec::ex43(n, 5, l))).collect();
    let cells = run_cells(&specs)?;
    let mut header = vec!["n=5p".to_string()];
    header.extend(T1_LAMBDA.iter().map(|l| format!("lambda={}", fmt_lambda(*l))));
    let rows = ns
        .iter()
        .zip(cells.chunks(T1_LAMBDA.len()))
        .map(|(n, row)| std::iter::once(n.to_string()).chain(row.iter().map(|c| c.nnz().to_string())).collect())
        .collect();
    Ok(Table { id: 1, title: "Value of ||x^k||_0 when e = 5".into(), header, rows, skipped })
}

fn table2(scale: Scale) -> Result<Table> {
    // n = 5 x 20 = 100 sits exactly on the desk limits, so both scales agree.
    debug_assert!(scale.admits(T2_N, T2_N / 5));
    let specs: Vec<ProblemSpec> = T2_LAMBDA.iter().map(|&l| ProblemSpec::ex43(T2_N, 5, l)).collect();
    let cells = run_cells(&specs)?;
    let mut header = vec!["lambda".to_string()];
    header.extend(T2_LAMBDA.iter().map(|l| fmt_lambda(*l)));
    let mut row = vec!["||x^k||_0".to_string()];
    row.extend(cells.iter().map(|c| c.nnz().to_string()));
    Ok(Table {
        id: 2,
        title: format!("Results when e = 5 and n = {T2_N}"),
        header,
        rows: vec![row],
        skipped: Vec::new(),
    })
}

/// Short rendering of a point: all of it up to five entries, else the ends.
pub fn abbreviate(x: &[f64]) -> String {
    let f = |v: &f64| format!("{v:.4}");
    let body = if x.len() <= 5 {
        x.iter().map(f).collect::<Vec<_>>().join(",")
    } else {
        format!("{},{},{},...,{}", f(&x[0]), f(&x[1]), f(&x[2]), f(&x[x.len() - 1]))
    };
    format!("({body})")
}

fn table_equal(id: u32, e: usize, ns: &[usize], scale: Scale) -> Result<Table> {
    let mut skipped = Vec::new();
    let ns: Vec<usize> = ns
        .iter()
        .copied()
        .filter(|&n| {
            let ok = scale.admits(n, n / e);
            if !ok {
                skipped.push(format!("n = {n}"));
            }
            ok
        })
        .collect();
    let specs: Vec<ProblemSpec> = ns.iter().map(|&n| ProblemSpec::ex44(n, e)).collect();
    let cells = run_cells(&specs)?;
    let header = ["n", "k", "x^k", "running_time_s", "f(x^k)", "residual"].map(String::from).to_vec();
    let rows = cells
        .iter()
        .map(|c| {
            vec![
                c.spec.n.to_string(),
                c.iterations.to_string(),
                abbreviate(&c.x),
                format!("{:.4}", c.seconds),
                format!("{:.3e}", c.f),
                format!("{:.3e}", c.residual),
            ]
        })
        .collect();
    Ok(Table { id, title: format!("Results when e = {e}"), header, rows, skipped })
}

fn table_chained(id: u32, n: usize, es: &[usize], scale: Scale) -> Result<Table> {
    let mut skipped = Vec::new();
    let es: Vec<usize> = es
        .iter()
        .copied()
        .filter(|&e| {
            let ok = scale.admits(n, n / e);
            if !ok {
                skipped.push(format!("e = {e}, p = {}", n / e));
            }
            ok
        })
        .collect();
    let specs: Vec<ProblemSpec> = es.iter().map(|&e| ProblemSpec::ex45(n, e)).collect();
    let cells = run_cells(&specs)?;
    let header = ["e", "p", "f_n(x^k)", "||g(x^k;y^k)||", "running_time_s"].map(String::from).to_vec();
    let rows = cells
        .iter()
        .map(|c| {
            vec![
                c.spec.e.to_string(),
                (n / c.spec.e).to_string(),
                format!("{:.4}", c.f),
                format!("{:.5}", c.residual),
                format!("{:.4}", c.seconds),
            ]
        })
        .collect();
    Ok(Table { id, title: format!("Results when n = {n}"), header, rows, skipped })
}

fn repeat(x: &[f64], times: usize) -> Vec<f64> {
    x.iter().copied().cycle().take(x.len() * times).collect()
}

fn table8(scale: Scale) -> Result<Table> {
    // The first six columns tile small single-block solutions; the last six
    // solve the full problem.
    let base = run_cells(&[ProblemSpec::ex45(5, 5), ProblemSpec::ex45(2, 2)])?;
    let (tilde, hat) = (&base[0].x, &base[1].x);

    let mut skipped = Vec::new();
    let mut specs = Vec::new();
    let mut slots = Vec::new();
    for (&p5, &p2) in T8_P5.iter().zip(&T8_P2) {
        let mut slot = [None, None];
        for (k, (e, p)) in [(5, p5), (2, p2)].into_iter().enumerate() {
            if scale.admits(e * p, p) {
                slot[k] = Some(specs.len());
                specs.push(ProblemSpec::ex45(e * p, e));
            } else {
                skipped.push(format!("Algorithm 1 at e = {e}, p = {p}"));
            }
        }
        slots.push(slot);
    }
    let cells = run_cells(&specs)?;

    let mut header = Vec::new();
    for _ in 0..4 {
        header.extend(["e", "p", "f_n(x^k)"].map(String::from));
    }
    let rows = T8_P5
        .iter()
        .zip(&T8_P2)
        .zip(&slots)
        .map(|((&p5, &p2), slot)| {
            let mut row = vec![
                "5".into(),
                p5.to_string(),
                format!("{:.4}", ex45_direct(&repeat(tilde, p5))),
                "2".into(),
                p2.to_string(),
                format!("{:.4}", ex45_direct(&repeat(hat, p2))),
            ];
            for (k, (e, p)) in [(5, p5), (2, p2)].into_iter().enumerate() {
                row.push(e.to_string());
                row.push(p.to_string());
                row.push(slot[k].map(|i| format!("{:.4}", cells[i].f)).unwrap_or_default());
            }
            row
        })
        .collect();
    Ok(Table { id: 8, title: "Tiled versus direct solutions".into(), header, rows, skipped })
}
