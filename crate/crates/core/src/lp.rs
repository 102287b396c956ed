//! Restricted master LP over priced vertex columns.
//!
//! The LP always has the fixed shape
//!
//! ```text
//! max  sum_j c_j lambda_j
//! s.t. sum_j v_j lambda_j        = 1_M   (task rows)
//!      sum_{j owned by i} lambda_j = 1   (one convexity row per agent)
//!      lambda >= 0
//! ```
//!
//! and every constraint column is a 0/1 vector. The simplex below is
//! lexicographic in both directions: the right-hand side is perturbed by
//! `delta^k` on row `k` (lexicographic ratio test) and the cost of the column
//! with rank `k` in [`ColumnId`] order is lowered by `eps^k`. The perturbed LP
//! is primal and dual nondegenerate, so its optimal basis is unique, and any
//! column set that contains that basis resolves to it. That is what lets
//! agents holding different column sets agree on bit-identical bases.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Primal feasibility tolerance.
pub const EPS_FEAS: f64 = 1e-9;
/// Reduced-cost tolerance.
pub const EPS_RC: f64 = 1e-9;
const EPS_PIVOT: f64 = 1e-9;

/// Total order over every column that can ever exist. Artificial columns
/// sort first (by row), then vertex columns by owner and vertex bits.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ColumnId {
    Artificial { row: usize },
    Vertex { owner: usize, vertex: Vec<bool> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    id: ColumnId,
    cost: f64,
}

impl Column {
    /// The column `[c_i^T v; v; e_owner]` for vertex `v` of agent `owner`.
    pub fn vertex(owner: usize, vertex: Vec<bool>, profits: &[f64]) -> Self {
        let cost = vertex.iter().zip(profits).filter(|(&x, _)| x).map(|(_, &p)| p).sum();
        Self {
            id: ColumnId::Vertex { owner, vertex },
            cost,
        }
    }

    /// Builds a vertex column with an explicitly given cost.
    pub fn with_cost(owner: usize, vertex: Vec<bool>, cost: f64) -> Self {
        Self {
            id: ColumnId::Vertex { owner, vertex },
            cost,
        }
    }

    pub fn artificial(row: usize, big_m: f64) -> Self {
        Self {
            id: ColumnId::Artificial { row },
            cost: -big_m,
        }
    }

    pub fn id(&self) -> &ColumnId {
        &self.id
    }

    pub fn cost(&self) -> f64 {
        self.cost
    }

    pub fn is_artificial(&self) -> bool {
        matches!(self.id, ColumnId::Artificial { .. })
    }

    pub fn owner(&self) -> Option<usize> {
        match &self.id {
            ColumnId::Vertex { owner, .. } => Some(*owner),
            ColumnId::Artificial { .. } => None,
        }
    }

    pub fn vertex_bits(&self) -> Option<&[bool]> {
        match &self.id {
            ColumnId::Vertex { vertex, .. } => Some(vertex),
            ColumnId::Artificial { .. } => None,
        }
    }

    /// Rows holding a 1 in the constraint column.
    fn support(&self, n_tasks: usize) -> Vec<usize> {
        match &self.id {
            ColumnId::Artificial { row } => vec![*row],
            ColumnId::Vertex { owner, vertex } => vertex
                .iter()
                .enumerate()
                .filter_map(|(m, &x)| x.then_some(m))
                .chain(std::iter::once(n_tasks + owner))
                .collect(),
        }
    }

    fn canonical(&self, shape: &LpShape) -> String {
        match &self.id {
            ColumnId::Vertex { owner, vertex } => {
                format!("{}|{}|{}|0", owner, self.cost, bits(vertex.iter().copied()))
            }
            ColumnId::Artificial { row } => {
                let unit = (0..shape.rows()).map(|k| k == *row);
                format!("{}|{}|{}|1", row, self.cost, bits(unit))
            }
        }
    }
}

fn bits(it: impl Iterator<Item = bool>) -> String {
    it.map(|b| if b { '1' } else { '0' }).collect()
}

/// Dimensions of the master LP and the Big-M penalty of its artificials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpShape {
    pub n_agents: usize,
    pub n_tasks: usize,
    pub big_m: f64,
}

impl LpShape {
    pub fn new(n_agents: usize, n_tasks: usize, big_m: f64) -> Self {
        Self {
            n_agents,
            n_tasks,
            big_m,
        }
    }

    /// Shape for an instance, with `big_m = 1 + sum |p_im|`.
    pub fn for_instance(instance: &crate::model::GapInstance) -> Self {
        Self::new(instance.n_agents(), instance.n_tasks(), 1.0 + instance.abs_profit_sum())
    }

    pub fn rows(&self) -> usize {
        self.n_tasks + self.n_agents
    }

    pub fn artificials(&self) -> impl Iterator<Item = Column> + '_ {
        (0..self.rows()).map(|r| Column::artificial(r, self.big_m))
    }
}

/// `M + N` linearly independent columns, kept sorted by [`ColumnId`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    columns: Vec<Column>,
}

impl Basis {
    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn contains(&self, id: &ColumnId) -> bool {
        self.columns.binary_search_by(|c| c.id.cmp(id)).is_ok()
    }

    /// Columns that may leave the agent: everything except artificials.
    pub fn real_columns(&self) -> impl Iterator<Item = &Column> {
        self.columns.iter().filter(|c| !c.is_artificial())
    }

    /// `owner|cost|vertex-bits|artificial-flag` per column, `;`-separated,
    /// in [`ColumnId`] order. Two bases are equal iff these strings are.
    pub fn canonical(&self, shape: &LpShape) -> String {
        self.columns
            .iter()
            .map(|c| c.canonical(shape))
            .collect::<Vec<_>>()
            .join(";")
    }

    /// FNV-1a over the column ids; stable across runs and platforms.
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut feed = |x: u64| {
            for b in x.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        };
        for c in &self.columns {
            match &c.id {
                ColumnId::Artificial { row } => {
                    feed(0);
                    feed(*row as u64);
                }
                ColumnId::Vertex { owner, vertex } => {
                    feed(1);
                    feed(*owner as u64);
                    for chunk in vertex.chunks(64) {
                        feed(chunk.iter().enumerate().fold(0u64, |acc, (k, &b)| acc | ((b as u64) << k)));
                    }
                    feed(vertex.len() as u64);
                }
            }
        }
        h
    }

    pub fn ids(&self) -> impl Iterator<Item = &ColumnId> {
        self.columns.iter().map(|c| &c.id)
    }
}

/// The all-artificial starting basis obtained from the Big-M method.
pub fn big_m_basis(n_agents: usize, n_tasks: usize, big_m: f64) -> Basis {
    let shape = LpShape::new(n_agents, n_tasks, big_m);
    Basis {
        columns: shape.artificials().collect(),
    }
}

/// An optimal basic solution with its duals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub basis: Basis,
    /// Value of each basis column, aligned with `basis.columns()`.
    pub primal: Vec<f64>,
    /// Duals of the task rows.
    pub pi: Vec<f64>,
    /// Duals of the convexity rows.
    pub mu: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    /// The trivial solution of the all-artificial basis.
    pub fn big_m(shape: &LpShape) -> Self {
        let basis = big_m_basis(shape.n_agents, shape.n_tasks, shape.big_m);
        let rows = shape.rows();
        LpSolution {
            basis,
            primal: vec![1.0; rows],
            pi: vec![-shape.big_m; shape.n_tasks],
            mu: vec![-shape.big_m; shape.n_agents],
            objective: -shape.big_m * rows as f64,
        }
    }

    /// `c_j - pi^T v - mu_owner` (or `c_j - y_row` for an artificial).
    pub fn reduced_cost(&self, column: &Column) -> f64 {
        match &column.id {
            ColumnId::Artificial { row } => {
                let y = if *row < self.pi.len() {
                    self.pi[*row]
                } else {
                    self.mu[*row - self.pi.len()]
                };
                column.cost - y
            }
            ColumnId::Vertex { owner, vertex } => {
                let pv: f64 = vertex.iter().zip(&self.pi).filter(|(&x, _)| x).map(|(_, &p)| p).sum();
                column.cost - pv - self.mu[*owner]
            }
        }
    }

    /// `max |A_B lambda_B - 1|` over all rows.
    pub fn primal_residual(&self, shape: &LpShape) -> f64 {
        let mut lhs = vec![0.0; shape.rows()];
        for (c, &v) in self.basis.columns.iter().zip(&self.primal) {
            for r in c.support(shape.n_tasks) {
                lhs[r] += v;
            }
        }
        lhs.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max)
    }

    pub fn value_of(&self, id: &ColumnId) -> f64 {
        self.basis
            .columns
            .binary_search_by(|c| c.id.cmp(id))
            .map_or(0.0, |k| self.primal[k])
    }
}

/// Solves the restricted master LP over `columns` plus the Big-M
/// artificials of `shape`, returning the unique lexicographically optimal
/// basis. Duplicate ids are merged, so the result depends only on the set of
/// ids supplied, never on their order.
pub fn solve_rmp<'a, I>(columns: I, shape: &LpShape) -> Result<LpSolution>
where
    I: IntoIterator<Item = &'a Column>,
{
    let mut pool: BTreeMap<&ColumnId, f64> = BTreeMap::new();
    for c in columns {
        if let ColumnId::Vertex { owner, vertex } = &c.id {
            if *owner >= shape.n_agents || vertex.len() != shape.n_tasks {
                return Err(Error::Dimension(format!(
                    "column of agent {owner} with {} tasks does not fit a {}x{} master",
                    vertex.len(),
                    shape.n_agents,
                    shape.n_tasks
                )));
            }
        }
        pool.insert(&c.id, c.cost);
    }
    let artificials: Vec<Column> = shape.artificials().collect();
    for a in &artificials {
        pool.insert(&a.id, a.cost);
    }
    let cols: Vec<Column> = pool
        .into_iter()
        .map(|(id, cost)| Column { id: id.clone(), cost })
        .collect();
    Simplex::new(&cols, shape).run()
}

/// Re-solves over `current ∪ {candidate}` when the candidate has reduced
/// cost above [`EPS_RC`]; otherwise returns `current` unchanged.
pub fn pivot(current: &LpSolution, candidate: &Column, reduced_cost: f64, shape: &LpShape) -> Result<LpSolution> {
    if reduced_cost <= EPS_RC || current.basis.contains(&candidate.id) {
        return Ok(current.clone());
    }
    solve_rmp(current.basis.columns.iter().chain(std::iter::once(candidate)), shape)
}

/// `z` reconstructed from a basic solution, its cost net of artificials,
/// and whether any artificial is still positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Extracted {
    pub z: Vec<Vec<f64>>,
    pub cost: f64,
    pub contains_artificial: bool,
}

/// `z_i = sum_q lambda_i^q v_i^q`, grouped by owner. Values within
/// [`EPS_FEAS`] of an integer are snapped so integral solutions carry exact
/// costs.
pub fn extract_solution(solution: &LpSolution, n_agents: usize, n_tasks: usize) -> Extracted {
    let mut z = vec![vec![0.0; n_tasks]; n_agents];
    let mut cost = 0.0;
    let mut contains_artificial = false;
    for (c, &raw) in solution.basis.columns.iter().zip(&solution.primal) {
        let lambda = snap(raw);
        match &c.id {
            ColumnId::Artificial { .. } => contains_artificial |= lambda > EPS_FEAS,
            ColumnId::Vertex { owner, vertex } => {
                if lambda == 0.0 {
                    continue;
                }
                cost += c.cost * lambda;
                for (m, &x) in vertex.iter().enumerate() {
                    if x {
                        z[*owner][m] += lambda;
                    }
                }
            }
        }
    }
    Extracted {
        z,
        cost,
        contains_artificial,
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= EPS_FEAS {
        r
    } else {
        x
    }
}

/// Pivots between refactorizations of the basis inverse.
const REFACTOR_EVERY: usize = 32;

/// Dense revised simplex with an explicit basis inverse. Sizes are tiny
/// (`M + N` rows), so clarity wins over sparse factorizations.
struct Simplex<'a> {
    cols: &'a [Column],
    supports: Vec<Vec<usize>>,
    shape: &'a LpShape,
    rows: usize,
    /// Column index basic in each row position.
    basic: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<Vec<f64>>,
    x: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(cols: &'a [Column], shape: &'a LpShape) -> Self {
        let rows = shape.rows();
        let supports: Vec<Vec<usize>> = cols.iter().map(|c| c.support(shape.n_tasks)).collect();
        // Artificials sort first and are ordered by row, so column k is the
        // artificial for row k.
        let basic: Vec<usize> = (0..rows).collect();
        let mut is_basic = vec![false; cols.len()];
        for &j in &basic {
            is_basic[j] = true;
        }
        let binv = (0..rows)
            .map(|i| (0..rows).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            cols,
            supports,
            shape,
            rows,
            basic,
            is_basic,
            binv,
            x: vec![1.0; rows],
        }
    }

    fn duals(&self) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for (i, &j) in self.basic.iter().enumerate() {
            let c = self.cols[j].cost;
            if c == 0.0 {
                continue;
            }
            for (yk, b) in y.iter_mut().zip(&self.binv[i]) {
                *yk += c * b;
            }
        }
        y
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let mut alpha = vec![0.0; self.rows];
        for &k in &self.supports[j] {
            for (i, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[i][k];
            }
        }
        alpha
    }

    /// Sign of the `eps`-part of the perturbed reduced cost of a nonbasic
    /// column whose plain reduced cost is zero. The term of lowest rank
    /// dominates: `-1` at the column's own rank, `+alpha_i` at the rank of the
    /// column basic in row `i`.
    fn lex_improving(&self, j: usize, alpha: &[f64]) -> bool {
        let leading = alpha
            .iter()
            .enumerate()
            .filter(|(_, a)| a.abs() > EPS_PIVOT)
            .map(|(i, &a)| (self.basic[i], a))
            .min_by_key(|&(rank, _)| rank);
        match leading {
            Some((rank, a)) if rank < j => a > 0.0,
            _ => false,
        }
    }

    fn choose_entering(&self, y: &[f64]) -> Option<(usize, Vec<f64>)> {
        let mut best: Option<(usize, f64)> = None;
        let mut ties: Vec<usize> = Vec::new();
        for (j, col) in self.cols.iter().enumerate() {
            if self.is_basic[j] {
                continue;
            }
            let d = col.cost - self.supports[j].iter().map(|&k| y[k]).sum::<f64>();
            if d > EPS_RC {
                if best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((j, d));
                }
            } else if d >= -EPS_RC {
                ties.push(j);
            }
        }
        if let Some((j, _)) = best {
            return Some((j, self.ftran(j)));
        }
        ties.into_iter().find_map(|j| {
            let alpha = self.ftran(j);
            self.lex_improving(j, &alpha).then_some((j, alpha))
        })
    }

    /// Lexicographic minimum of `[x_i, binv_i] / alpha_i` over rows with
    /// positive `alpha_i`.
    fn choose_leaving(&self, alpha: &[f64]) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &a) in alpha.iter().enumerate() {
            if a <= EPS_PIVOT {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => match self.lex_cmp(i, a, b, alpha[b]) {
                    Ordering::Less => Some(i),
                    _ => Some(b),
                },
            };
        }
        best
    }

    fn lex_cmp(&self, i: usize, ai: f64, k: usize, ak: f64) -> Ordering {
        let entries = |r: usize, a: f64| std::iter::once(self.x[r] / a).chain(self.binv[r].iter().map(move |v| v / a));
        for (u, v) in entries(i, ai).zip(entries(k, ak)) {
            if (u - v).abs() > EPS_PIVOT {
                return u.partial_cmp(&v).unwrap_or(Ordering::Equal);
            }
        }
        Ordering::Equal
    }

    fn pivot_on(&mut self, row: usize, entering: usize, alpha: &[f64]) {
        let a = alpha[row];
        let prow: Vec<f64> = self.binv[row].iter().map(|v| v / a).collect();
        let px = self.x[row] / a;
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let f = alpha[i];
            if f == 0.0 {
                continue;
            }
            for (v, p) in self.binv[i].iter_mut().zip(&prow) {
                *v -= f * p;
            }
            self.x[i] -= f * px;
        }
        self.binv[row] = prow;
        self.x[row] = px;
        self.is_basic[self.basic[row]] = false;
        self.is_basic[entering] = true;
        self.basic[row] = entering;
    }

    fn refactor(&mut self) -> Result<()> {
        let n = self.rows;
        let mut a = vec![vec![0.0_f64; 2 * n]; n];
        for (pos, &j) in self.basic.iter().enumerate() {
            for &r in &self.supports[j] {
                a[r][pos] = 1.0;
            }
        }
        for (r, row) in a.iter_mut().enumerate() {
            row[n + r] = 1.0;
        }
        for col in 0..n {
            let p = (col..n)
                .max_by(|&u, &v| a[u][col].abs().total_cmp(&a[v][col].abs()))
                .expect("nonempty range");
            if a[p][col].abs() < 1e-12 {
                return Err(Error::Numerical("singular basis".into()));
            }
            a.swap(p, col);
            let d = a[col][col];
            for v in a[col].iter_mut() {
                *v /= d;
            }
            let prow = a[col].clone();
            for (r, row) in a.iter_mut().enumerate() {
                if r == col || row[col] == 0.0 {
                    continue;
                }
                let f = row[col];
                for (v, p) in row.iter_mut().zip(&prow) {
                    *v -= f * p;
                }
            }
        }
        // Row `pos` of B^{-1} belongs to the column basic in position `pos`.
        self.binv = a.into_iter().map(|row| row[n..].to_vec()).collect();
        self.x = self.binv.iter().map(|row| row.iter().sum()).collect();
        Ok(())
    }

    fn run(mut self) -> Result<LpSolution> {
        let cap = 50 * (self.rows + self.cols.len()) + 1000;
        let mut iterations = 0;
        loop {
            let y = self.duals();
            let Some((entering, alpha)) = self.choose_entering(&y) else {
                break;
            };
            let Some(row) = self.choose_leaving(&alpha) else {
                return Err(Error::Numerical("unbounded ray in a bounded master".into()));
            };
            self.pivot_on(row, entering, &alpha);
            iterations += 1;
            if iterations % REFACTOR_EVERY == 0 {
                self.refactor()?;
            }
            if iterations > cap {
                return Err(Error::Numerical(format!("no convergence after {cap} pivots")));
            }
        }
        self.refactor()?;
        if let Some(bad) = self.x.iter().find(|&&v| v < -1e-7) {
            return Err(Error::Numerical(format!("basic value {bad} is negative after refactor")));
        }
        let y = self.duals();
        let mut order: Vec<usize> = (0..self.rows).collect();
        order.sort_by_key(|&i| self.basic[i]);
        let columns: Vec<Column> = order.iter().map(|&i| self.cols[self.basic[i]].clone()).collect();
        let primal: Vec<f64> = order.iter().map(|&i| self.x[i].max(0.0)).collect();
        let objective = columns.iter().zip(&primal).map(|(c, v)| c.cost * v).sum();
        let n_tasks = self.shape.n_tasks;
        Ok(LpSolution {
            basis: Basis { columns },
            primal,
            pi: y[..n_tasks].to_vec(),
            mu: y[n_tasks..].to_vec(),
            objective,
        })
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.columns {
            match &c.id {
                ColumnId::Artificial { row } => write!(f, "[a{row}]")?,
                ColumnId::Vertex { owner, vertex } => write!(f, "[{}:{}]", owner, bits(vertex.iter().copied()))?,
            }
        }
        Ok(())
    }
}
