//! Explicit finite chains: transition matrix, stationary distribution, labels.

use std::path::Path;

use rand::Rng;
use serde::Serialize;

use super::Chain;
use crate::error::{invalid, Error, Result};

/// Row sums must equal 1 within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// `πP = π` must hold within this tolerance (max-norm).
pub const STATIONARY_TOL: f64 = 1e-10;
/// Largest chain solved directly; larger chains use power iteration.
pub const DIRECT_SOLVE_LIMIT: usize = 2000;

/// Row-stochastic square matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionMatrix {
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    /// Builds a matrix from rows, checking shape, nonnegativity and row sums.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Chain("transition matrix has no states".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Chain(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            data.extend(row);
        }
        let m = Self { n, data };
        m.check_stochastic()?;
        Ok(m)
    }

    fn check_stochastic(&self) -> Result<()> {
        for i in 0..self.n {
            let row = self.row(i);
            if let Some(j) = row.iter().position(|&p| !(p >= 0.0 && p.is_finite())) {
                return Err(Error::Chain(format!("entry ({i}, {j}) is not a finite nonnegative number")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Chain(format!("row {i} sums to {sum}, not 1")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `max_ij |P_ij − P_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// `max_j |(πP)_j − π_j|`.
    pub fn stationarity_defect(&self, pi: &[f64]) -> f64 {
        (0..self.n)
            .map(|j| {
                let flow: f64 = (0..self.n).map(|i| pi[i] * self.get(i, j)).sum();
                (flow - pi[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `max_ij |π_i P_ij − π_j P_ji|`.
    pub fn detailed_balance_defect(&self, pi: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                worst = worst.max((pi[i] * self.get(i, j) - pi[j] * self.get(j, i)).abs());
            }
        }
        worst
    }

    /// True when every state reaches every other through positive entries.
    pub fn is_irreducible(&self) -> bool {
        let reach = |forward: bool| {
            let mut seen = vec![false; self.n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..self.n {
                    let p = if forward { self.get(i, j) } else { self.get(j, i) };
                    if p > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }
}

/// A stationary vector for `p`.
///
/// Irreducible chains get their unique stationary distribution. For reducible
/// chains some stationary vector is returned; callers that care should check
/// [`TransitionMatrix::is_irreducible`].
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<Vec<f64>> {
    p.check_stochastic()?;
    let pi = if p.n <= DIRECT_SOLVE_LIMIT {
        direct_stationary(p).unwrap_or_else(|| power_stationary(p))
    } else {
        power_stationary(p)
    };
    if p.stationarity_defect(&pi) > STATIONARY_TOL {
        return Err(Error::Chain(format!(
            "stationary solve did not converge (defect {:e})",
            p.stationarity_defect(&pi)
        )));
    }
    Ok(pi)
}

/// Solves `(Pᵀ − I)π = 0` with the last equation replaced by `Σπ = 1`.
/// Returns `None` when the system is singular (reducible chain).
fn direct_stationary(p: &TransitionMatrix) -> Option<Vec<f64>> {
    let n = p.n;
    let w = n + 1;
    let mut a = vec![0.0; n * w];
    for r in 0..n {
        for c in 0..n {
            a[r * w + c] = p.get(c, r) - if r == c { 1.0 } else { 0.0 };
        }
    }
    for c in 0..n {
        a[(n - 1) * w + c] = 1.0;
    }
    a[(n - 1) * w + n] = 1.0;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * w + col].abs().total_cmp(&a[y * w + col].abs()))
            .unwrap();
        if a[pivot * w + col].abs() < 1e-14 {
            return None;
        }
        if pivot != col {
            for c in 0..w {
                a.swap(pivot * w + c, col * w + c);
            }
        }
        let d = a[col * w + col];
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * w + col] / d;
            if f != 0.0 {
                for c in col..w {
                    a[r * w + c] -= f * a[col * w + c];
                }
            }
        }
    }
    let mut pi: Vec<f64> = (0..n).map(|r| (a[r * w + n] / a[r * w + r]).max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    pi.iter_mut().for_each(|x| *x /= total);
    Some(pi)
}

/// Power iteration on the lazy chain `(P + I)/2`, which has the same
/// stationary vectors and no periodicity.
fn power_stationary(p: &TransitionMatrix) -> Vec<f64> {
    let n = p.n;
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..1_000_000 {
        next.iter_mut().zip(&pi).for_each(|(x, &y)| *x = 0.5 * y);
        for i in 0..n {
            let w = 0.5 * pi[i];
            if w == 0.0 {
                continue;
            }
            for (j, x) in next.iter_mut().enumerate() {
                *x += w * p.get(i, j);
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let delta = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if delta < 1e-15 {
            break;
        }
    }
    pi
}

/// A finite chain with an explicit stationary distribution and state labels.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteChain {
    transition: TransitionMatrix,
    pi: Vec<f64>,
    labels: Vec<f64>,
}

impl FiniteChain {
    /// Builds a chain; `pi` is computed when absent and checked when given.
    pub fn new(transition: TransitionMatrix, pi: Option<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        let n = transition.n();
        if labels.len() != n {
            return Err(Error::Chain(format!("{} labels for {n} states", labels.len())));
        }
        if labels.iter().any(|x| !x.is_finite()) {
            return Err(Error::Chain("labels must be finite".into()));
        }
        let pi = match pi {
            Some(pi) => {
                if pi.len() != n {
                    return Err(Error::Chain(format!("pi has {} entries for {n} states", pi.len())));
                }
                if pi.iter().any(|&x| !(x >= 0.0)) || (pi.iter().sum::<f64>() - 1.0).abs() > STATIONARY_TOL {
                    return Err(Error::Chain("pi is not a probability vector".into()));
                }
                let defect = transition.stationarity_defect(&pi);
                if defect > STATIONARY_TOL {
                    return Err(Error::Chain(format!("pi is not stationary (defect {defect:e})")));
                }
                pi
            }
            None => stationary_distribution(&transition)?,
        };
        Ok(Self { transition, pi, labels })
    }

    /// Reversible chain from a symmetric nonnegative weight matrix:
    /// `P_ij = W_ij / Σ_j W_ij`, with `π_i ∝ Σ_j W_ij`.
    pub fn from_symmetric_weights(weights: &[Vec<f64>], labels: Vec<f64>) -> Result<Self> {
        let n = weights.len();
        for (i, row) in weights.iter().enumerate() {
            if row.len() != n {
                return Err(invalid(format!("weight row {i} has wrong length")));
            }
            for j in 0..n {
                if row[j] != weights[j][i] || !(row[j] >= 0.0) {
                    return Err(invalid(format!("weights not symmetric nonnegative at ({i}, {j})")));
                }
            }
        }
        let degree: Vec<f64> = weights.iter().map(|r| r.iter().sum()).collect();
        if degree.iter().any(|&d| !(d > 0.0)) {
            return Err(invalid("every state needs positive total weight"));
        }
        let total: f64 = degree.iter().sum();
        let rows = weights
            .iter()
            .zip(&degree)
            .map(|(r, &d)| {
                let mut row: Vec<f64> = r.iter().map(|w| w / d).collect();
                // Fold rounding drift into the diagonal so rows sum to 1.
                let drift = 1.0 - row.iter().sum::<f64>();
                let i = row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
                row[i] += drift;
                row
            })
            .collect();
        let pi = degree.iter().map(|d| d / total).collect();
        Self::new(TransitionMatrix::from_rows(rows)?, Some(pi), labels)
    }

    pub fn n_states(&self) -> usize {
        self.transition.n()
    }

    pub fn transition(&self) -> &TransitionMatrix {
        &self.transition
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Parses the plain-text matrix format: first line `n`; then `n` rows of
    /// the transition matrix; then an optional row holding `π`; then the
    /// labels row. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let parse_err = |line: usize, message: String| Error::Parse {
            what: "chain file",
            line,
            message,
        };
        let (first_line, header) = *lines.first().ok_or_else(|| parse_err(1, "empty file".into()))?;
        let n: usize = header
            .parse()
            .map_err(|_| parse_err(first_line, format!("expected state count, found {header:?}")))?;
        if n == 0 {
            return Err(parse_err(first_line, "state count must be positive".into()));
        }
        let rows: Vec<(usize, Vec<f64>)> = lines[1..]
            .iter()
            .map(|&(ln, l)| {
                l.split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>()
                            .map_err(|_| parse_err(ln, format!("not a number: {tok:?}")))
                    })
                    .collect::<Result<Vec<f64>>>()
                    .map(|v| (ln, v))
            })
            .collect::<Result<_>>()?;
        for (ln, r) in &rows {
            if r.len() != n {
                return Err(parse_err(*ln, format!("expected {n} values, found {}", r.len())));
            }
        }
        let (pi, labels) = match rows.len().checked_sub(n) {
            Some(1) => (None, rows[n].1.clone()),
            Some(2) => (Some(rows[n].1.clone()), rows[n + 1].1.clone()),
            _ => {
                let ln = rows.last().map(|r| r.0).unwrap_or(first_line);
                return Err(parse_err(
                    ln,
                    format!("expected {n} matrix rows, an optional pi row and a labels row; found {} rows", rows.len()),
                ));
            }
        };
        let matrix = TransitionMatrix::from_rows(rows.into_iter().take(n).map(|r| r.1).collect())?;
        Self::new(matrix, pi, labels)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Writes the chain in the format read by [`FiniteChain::parse`], `π` row included.
    pub fn to_text(&self) -> String {
        let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
        let mut out = format!("{}\n", self.n_states());
        for i in 0..self.n_states() {
            out += &join(self.transition.row(i));
            out.push('\n');
        }
        out += &join(&self.pi);
        out.push('\n');
        out += &join(&self.labels);
        out.push('\n');
        out
    }
}

/// True iff `max_ij |π_i P_ij − π_j P_ji| ≤ tol`.
pub fn verify_reversibility(chain: &FiniteChain, tol: f64) -> bool {
    chain.transition.detailed_balance_defect(&chain.pi) <= tol
}

impl Chain for FiniteChain {
    type State = usize;

    fn validate_state(&self, state: &usize) -> Result<()> {
        if *state < self.n_states() {
            Ok(())
        } else {
            Err(invalid(format!("state {state} out of range for {} states", self.n_states())))
        }
    }

    fn step<R: Rng + ?Sized>(&self, state: &mut usize, rng: &mut R) {
        let u: f64 = rng.random();
        let row = self.transition.row(*state);
        let mut acc = 0.0;
        let mut last_positive = *state;
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_positive = j;
                if u < acc {
                    *state = j;
                    return;
                }
            }
        }
        *state = last_positive;
    }
}
