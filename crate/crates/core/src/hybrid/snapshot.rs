//! Plain-text snapshot of a hybrid state.
//!
//! ```text
//! hybridyn-snapshot 1
//! dim <N>
//! representation <grid|points>
//! grid <q_min> <q_max> <p_min> <p_max> <n_q> <n_p>
//! hbar <ħ>
//! t <time>
//! ```
//!
//! followed, for point states, by `records <count>` and one line per entry
//! `i j q_ket p_ket q_bra p_bra re im` (0-based quantum indices), and for grid
//! states by `block i j` headers each followed by `n_q` lines holding the
//! `n_p` values of that position row as interleaved `re im` pairs. For point
//! states the grid line holds the assembly bins. Reals are written with 17
//! significant digits, which makes the round trip lossless.

use super::state::HybridState;
use crate::error::{Error, Result};
use crate::phase_space::{ClassicalKernel, CrossDyad, KernelKind, PhasePoint, PhaseSpaceGrid};
use num_complex::Complex64;
use std::fmt::Write as _;

const MAGIC: &str = "hybridyn-snapshot 1";

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub state: HybridState,
    /// Kernel grid for grid states, assembly bins for point states.
    pub grid: PhaseSpaceGrid,
    pub hbar: f64,
    pub t: f64,
}

/// Formats a real with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

impl Snapshot {
    pub fn to_text(&self) -> String {
        let s = &self.state;
        let g = &self.grid;
        let mut out = String::new();
        let _ = writeln!(out, "{MAGIC}");
        let _ = writeln!(out, "dim {}", s.dim());
        let _ = writeln!(out, "representation {}", s.representation().as_str());
        let _ = writeln!(
            out,
            "grid {} {} {} {} {} {}",
            fmt_real(g.q_min()),
            fmt_real(g.q_max()),
            fmt_real(g.p_min()),
            fmt_real(g.p_max()),
            g.n_q(),
            g.n_p()
        );
        let _ = writeln!(out, "hbar {}", fmt_real(self.hbar));
        let _ = writeln!(out, "t {}", fmt_real(self.t));
        let n = s.dim();
        if let Some(blocks) = s.entry_blocks() {
            let count: usize = blocks.iter().map(Vec::len).sum();
            let _ = writeln!(out, "records {count}");
            for i in 0..n {
                for j in 0..n {
                    for e in &blocks[i * n + j] {
                        let (k, b, w) = (e.ket(), e.bra(), e.amplitude());
                        let _ = writeln!(
                            out,
                            "{i} {j} {} {} {} {} {} {}",
                            fmt_real(k.q),
                            fmt_real(k.p),
                            fmt_real(b.q),
                            fmt_real(b.p),
                            fmt_real(w.re),
                            fmt_real(w.im)
                        );
                    }
                }
            }
        } else if let Some(kernels) = s.kernels() {
            for i in 0..n {
                for j in 0..n {
                    let _ = writeln!(out, "block {i} {j}");
                    let k = &kernels[i * n + j];
                    for kq in 0..g.n_q() {
                        let row: Vec<String> = (0..g.n_p())
                            .map(|kp| {
                                let v = k.at(kq, kp);
                                format!("{} {}", fmt_real(v.re), fmt_real(v.im))
                            })
                            .collect();
                        let _ = writeln!(out, "{}", row.join(" "));
                    }
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let mut next = |what: &str| -> Result<(usize, Vec<&str>)> {
            let (no, l) = lines.next().ok_or(Error::Snapshot { line: 0, msg: format!("missing {what}") })?;
            Ok((no + 1, l.split_whitespace().collect()))
        };
        let (no, magic) = next("header")?;
        if magic.join(" ") != MAGIC {
            return Err(Error::Snapshot { line: no, msg: "not a hybridyn snapshot".into() });
        }
        let dim: usize = keyed(next("dim")?, "dim", 1)?[0];
        let (no, rep) = next("representation")?;
        if rep.len() != 2 || rep[0] != "representation" {
            return Err(Error::Snapshot { line: no, msg: "expected 'representation <kind>'".into() });
        }
        let is_grid = match rep[1] {
            "grid" => true,
            "points" => false,
            other => return Err(Error::Snapshot { line: no, msg: format!("unknown representation '{other}'") }),
        };
        let (no, gl) = next("grid")?;
        let gv: Vec<f64> = keyed((no, gl), "grid", 6)?;
        let grid = PhaseSpaceGrid::new(gv[0], gv[1], gv[2], gv[3], gv[4] as usize, gv[5] as usize)
            .map_err(|e| Error::Snapshot { line: no, msg: e.to_string() })?;
        let hbar: f64 = keyed(next("hbar")?, "hbar", 1)?[0];
        let t: f64 = keyed(next("t")?, "t", 1)?[0];

        let state = if is_grid {
            let mut kernels = Vec::with_capacity(dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    let (no, h) = next("block header")?;
                    if h != ["block", &i.to_string(), &j.to_string()] {
                        return Err(Error::Snapshot { line: no, msg: format!("expected 'block {i} {j}'") });
                    }
                    let mut values = Vec::with_capacity(grid.len());
                    for _ in 0..grid.n_q() {
                        let (no, row) = next("block row")?;
                        if row.len() != 2 * grid.n_p() {
                            return Err(Error::Snapshot { line: no, msg: format!("expected {} numbers", 2 * grid.n_p()) });
                        }
                        let nums = parse_all(no, &row)?;
                        values.extend(nums.chunks(2).map(|c| Complex64::new(c[0], c[1])));
                    }
                    let kind = if i == j { KernelKind::State } else { KernelKind::Coherence };
                    kernels.push(ClassicalKernel::from_values(grid, kind, values)?);
                }
            }
            HybridState::from_kernels(dim, kernels)?
        } else {
            let count: usize = keyed(next("records")?, "records", 1)?[0];
            let mut blocks = vec![Vec::new(); dim * dim];
            for _ in 0..count {
                let (no, rec) = next("record")?;
                if rec.len() != 8 {
                    return Err(Error::Snapshot { line: no, msg: "expected 'i j q_ket p_ket q_bra p_bra re im'".into() });
                }
                let i: usize = parse_one(no, rec[0])?;
                let j: usize = parse_one(no, rec[1])?;
                if i >= dim || j >= dim {
                    return Err(Error::Snapshot { line: no, msg: format!("block ({i}, {j}) out of range") });
                }
                let v = parse_all(no, &rec[2..])?;
                let entry = CrossDyad::new(PhasePoint::new(v[0], v[1]), PhasePoint::new(v[2], v[3]), Complex64::new(v[4], v[5]));
                blocks[i * dim + j].push(entry);
            }
            HybridState::from_entries(dim, blocks)?
        };
        Ok(Snapshot { state, grid, hbar, t })
    }

    pub fn write(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn parse_one<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Snapshot { line, msg: format!("cannot parse '{s}'") })
}

fn parse_all(line: usize, xs: &[&str]) -> Result<Vec<f64>> {
    xs.iter().map(|s| parse_one(line, s)).collect()
}

fn keyed<T: std::str::FromStr>((line, toks): (usize, Vec<&str>), key: &str, n: usize) -> Result<Vec<T>> {
    if toks.len() != n + 1 || toks[0] != key {
        return Err(Error::Snapshot { line, msg: format!("expected '{key}' with {n} value(s)") });
    }
    toks[1..].iter().map(|s| parse_one(line, s)).collect()
}
