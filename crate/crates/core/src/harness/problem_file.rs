//! Line-oriented problem files.
//!
//! ```text
//! # comment
//! name    bessel
//! dim     2
//! interval 0 600
//! p       0, -1             (one line per row, comma-separated expressions)
//! p       (x^2-10000)/x^2, 1/x
//! f       0, 0
//! A       1 0               (one line per row)
//! A       0 0
//! C       0 0
//! C       1 0
//! gamma   0 1
//! exact   sin(x), cos(x)    (optional)
//! grid    uniform:200       (optional)
//! order   16                (optional)
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::exprparse::Expr;
use crate::harness::problems::{ExactSolution, GridHint, ProblemSpec};
use crate::linalg::DenseMatrix;
use crate::system::Interval;

fn perr(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn numbers(line: usize, rest: &str) -> Result<Vec<f64>> {
    rest.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| perr(line, format!("`{t}` is not a number"))))
        .collect()
}

fn exprs(line: usize, rest: &str) -> Result<Vec<Expr>> {
    rest.split(',')
        .map(|t| Expr::parse(t).map_err(|e| perr(line, format!("`{}`: {e}", t.trim()))))
        .collect()
}

#[derive(Default)]
struct Draft {
    name: Option<String>,
    dim: Option<usize>,
    interval: Option<Interval>,
    p: Vec<Vec<Expr>>,
    f: Option<Vec<Expr>>,
    a: Vec<Vec<f64>>,
    c: Vec<Vec<f64>>,
    gamma: Option<Vec<f64>>,
    exact: Option<Vec<Expr>>,
    grid: Option<GridHint>,
    order: Option<usize>,
}

pub fn parse_problem(text: &str) -> Result<ProblemSpec> {
    let mut d = Draft::default();
    let mut last_line = 0;
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        last_line = ln;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let need_dim = || d.dim.ok_or_else(|| perr(ln, format!("`{key}` before `dim`")));
        match key {
            "name" => d.name = Some(rest.to_string()),
            "dim" => {
                let n: usize = rest.parse().map_err(|_| perr(ln, "dim must be a positive integer"))?;
                if n == 0 {
                    return Err(perr(ln, "dim must be a positive integer"));
                }
                d.dim = Some(n);
            }
            "interval" => {
                let v = numbers(ln, rest)?;
                if v.len() != 2 {
                    return Err(perr(ln, "interval needs two numbers"));
                }
                d.interval = Some(Interval::new(v[0], v[1]).map_err(|e| perr(ln, e.to_string()))?);
            }
            "p" => {
                let n = need_dim()?;
                let row = exprs(ln, rest)?;
                if row.len() != n {
                    return Err(perr(ln, format!("p row has {} entries, expected {n}", row.len())));
                }
                if d.p.len() == n {
                    return Err(perr(ln, "too many p rows"));
                }
                d.p.push(row);
            }
            "f" | "exact" => {
                let n = need_dim()?;
                let v = exprs(ln, rest)?;
                if v.len() != n {
                    return Err(perr(ln, format!("{key} has {} entries, expected {n}", v.len())));
                }
                if key == "f" {
                    d.f = Some(v);
                } else {
                    d.exact = Some(v);
                }
            }
            "A" | "C" | "gamma" => {
                let n = need_dim()?;
                let v = numbers(ln, rest)?;
                if v.len() != n {
                    return Err(perr(ln, format!("{key} row has {} entries, expected {n}", v.len())));
                }
                match key {
                    "gamma" => d.gamma = Some(v),
                    _ => {
                        let rows = if key == "A" { &mut d.a } else { &mut d.c };
                        if rows.len() == n {
                            return Err(perr(ln, format!("too many {key} rows")));
                        }
                        rows.push(v);
                    }
                }
            }
            "grid" => d.grid = Some(GridHint::parse(rest).map_err(|e| perr(ln, e.to_string()))?),
            "order" => d.order = Some(rest.parse().map_err(|_| perr(ln, "order must be an integer"))?),
            other => return Err(perr(ln, format!("unknown key `{other}`"))),
        }
    }
    let end = last_line.max(1);
    let n = d.dim.ok_or_else(|| perr(end, "missing `dim`"))?;
    let interval = d.interval.ok_or_else(|| perr(end, "missing `interval`"))?;
    let rows_ok = |rows: &Vec<Vec<f64>>, key: &str| {
        if rows.len() == n {
            Ok(DenseMatrix::from_rows(rows))
        } else {
            Err(perr(end, format!("{key} has {} rows, expected {n}", rows.len())))
        }
    };
    if d.p.len() != n {
        return Err(perr(end, format!("p has {} rows, expected {n}", d.p.len())));
    }
    let spec = ProblemSpec {
        name: d.name.unwrap_or_else(|| "problem".into()),
        n,
        interval,
        p: d.p.into_iter().flatten().collect(),
        f: d.f.ok_or_else(|| perr(end, "missing `f`"))?,
        a: rows_ok(&d.a, "A")?,
        c: rows_ok(&d.c, "C")?,
        gamma: d.gamma.ok_or_else(|| perr(end, "missing `gamma`"))?,
        exact: d.exact.map(ExactSolution::Exprs),
        grid: d.grid,
        order: d.order,
    };
    Ok(spec)
}

pub fn load_problem_file(path: &Path) -> Result<ProblemSpec> {
    parse_problem(&std::fs::read_to_string(path)?)
}

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn num_row(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
}

/// Renders `spec` in the problem-file format. A Bessel exact solution has no
/// expression form and is written as a comment.
pub fn write_problem(spec: &ProblemSpec) -> String {
    let n = spec.n;
    let mut out = String::new();
    let mut put = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    put(format!("name {}", spec.name));
    put(format!("dim {n}"));
    put(format!("interval {:?} {:?}", spec.interval.a, spec.interval.c));
    for row in spec.p.chunks(n) {
        put(format!("p {}", join(row, ", ")));
    }
    put(format!("f {}", join(&spec.f, ", ")));
    for i in 0..n {
        put(format!("A {}", num_row(spec.a.row(i))));
    }
    for i in 0..n {
        put(format!("C {}", num_row(spec.c.row(i))));
    }
    put(format!("gamma {}", num_row(&spec.gamma)));
    match &spec.exact {
        Some(ExactSolution::Exprs(es)) => put(format!("exact {}", join(es, ", "))),
        Some(ExactSolution::Bessel { nu, x_end }) => {
            put(format!("# exact: (J_{nu}(x), J_{nu}'(x)) / J_{nu}({x_end:?})"))
        }
        None => {}
    }
    if let Some(g) = spec.grid {
        put(format!("grid {g}"));
    }
    if let Some(o) = spec.order {
        put(format!("order {o}"));
    }
    out
}

pub fn write_problem_file(spec: &ProblemSpec, path: &Path) -> Result<()> {
    std::fs::write(path, write_problem(spec))?;
    Ok(())
}
