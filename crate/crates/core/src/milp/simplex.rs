//! Dense bounded-variable simplex.
//!
//! Every row `i` gets a logical column `s_i` with `s_i = A_i x`, so the
//! constraint system is `[-A | I] [x; s] = 0` and the row sense lives entirely
//! in the bounds of `s_i`. Basic values therefore satisfy
//! `x_B = -Σ_{j nonbasic} α_j x_j`, which lets us recompute them exactly from
//! the tableau at any time.

use alloc::vec;
use alloc::vec::Vec;

use super::{Model, Sense, VarKind};

pub(crate) const FEAS_TOL: f64 = 1e-7;
const OPT_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
const DEGENERATE_STREAK: u32 = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
    /// Nonbasic free variable parked at zero.
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct IterationLimit;

#[derive(Clone, Debug)]
pub(crate) struct Tableau {
    m: usize,
    ncols: usize,
    /// Structural column count; logicals follow, then any artificials.
    n: usize,
    mat: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    x: Vec<f64>,
    pub(crate) iterations: u64,
    scratch: Vec<(usize, f64)>,
}

impl Tableau {
    /// Builds the phase-1 tableau. Minimises `sign * objective`; binaries are
    /// relaxed to their bounds.
    pub(crate) fn from_model(model: &Model, sign: f64) -> Self {
        let n = model.variables.len();
        let m = model.constraints.len();

        let mut lo = Vec::with_capacity(n + m);
        let mut up = Vec::with_capacity(n + m);
        for v in &model.variables {
            let (l, u) = match v.kind {
                VarKind::Binary => (v.lower.max(0.0), v.upper.min(1.0)),
                VarKind::Continuous => (v.lower, v.upper),
            };
            lo.push(l);
            up.push(u);
        }
        let mut x: Vec<f64> = (0..n).map(|j| initial_value(lo[j], up[j])).collect();

        // logical bounds and activities
        let mut activity = vec![0.0; m];
        for (i, c) in model.constraints.iter().enumerate() {
            let (l, u) = match c.sense {
                Sense::Le => (f64::NEG_INFINITY, c.rhs),
                Sense::Ge => (c.rhs, f64::INFINITY),
                Sense::Eq => (c.rhs, c.rhs),
            };
            lo.push(l);
            up.push(u);
            activity[i] = c.terms.iter().map(|&(v, a)| a * x[v.index()]).sum();
        }

        // rows whose logical cannot start basic get an artificial
        let mut artificial_rows = Vec::new();
        let mut logical_value = vec![0.0; m];
        for i in 0..m {
            let (l, u) = (lo[n + i], up[n + i]);
            let a = activity[i];
            if a < l - FEAS_TOL {
                logical_value[i] = l;
                artificial_rows.push(i);
            } else if a > u + FEAS_TOL {
                logical_value[i] = u;
                artificial_rows.push(i);
            } else {
                logical_value[i] = a;
            }
        }
        let n_art = artificial_rows.len();
        let ncols = n + m + n_art;
        let mut mat = vec![0.0; m * ncols];
        let mut basis = vec![0; m];
        let mut state = vec![State::Lower; ncols];
        for j in 0..n {
            state[j] = nonbasic_state(lo[j], up[j], x[j]);
        }
        for i in 0..m {
            x.push(logical_value[i]);
        }
        for (i, c) in model.constraints.iter().enumerate() {
            let row = &mut mat[i * ncols..(i + 1) * ncols];
            for &(v, a) in &c.terms {
                row[v.index()] -= a;
            }
            row[n + i] = 1.0;
            basis[i] = n + i;
            state[n + i] = State::Basic;
        }
        for (k, &i) in artificial_rows.iter().enumerate() {
            let col = n + m + k;
            let residual = activity[i] - logical_value[i];
            let sigma = if residual >= 0.0 { 1.0 } else { -1.0 };
            let row = &mut mat[i * ncols..(i + 1) * ncols];
            // s_i - A_i x + sigma a = 0, scaled so `a` has coefficient 1
            for v in row.iter_mut() {
                *v *= sigma;
            }
            row[col] = 1.0;
            state[n + i] = nonbasic_state(lo[n + i], up[n + i], logical_value[i]);
            basis[i] = col;
            state[col] = State::Basic;
            lo.push(0.0);
            up.push(f64::INFINITY);
            x.push(residual.abs());
        }

        let sign_cost: Vec<f64> = {
            let mut c = vec![0.0; ncols];
            for &(v, a) in &model.objective.terms {
                c[v.index()] += sign * a;
            }
            c
        };

        let mut t = Tableau {
            m,
            ncols,
            n,
            mat,
            lo,
            up,
            cost: sign_cost,
            d: vec![0.0; ncols],
            basis,
            state,
            x,
            iterations: 0,
            scratch: Vec::new(),
        };
        t.refresh_basic_values();
        t
    }

    fn first_artificial(&self) -> usize {
        self.n + self.m
    }

    pub(crate) fn structural_values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    /// Objective in minimisation form (without constant).
    pub(crate) fn objective(&self) -> f64 {
        self.cost[..self.n].iter().zip(&self.x[..self.n]).map(|(c, x)| c * x).sum()
    }

    fn compute_reduced_costs(&mut self, cost: &[f64]) {
        let nc = self.ncols;
        self.d.copy_from_slice(cost);
        for r in 0..self.m {
            let cb = cost[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.mat[r * nc..(r + 1) * nc];
            for (dj, a) in self.d.iter_mut().zip(row) {
                if *a != 0.0 {
                    *dj -= cb * a;
                }
            }
        }
        for r in 0..self.m {
            self.d[self.basis[r]] = 0.0;
        }
    }

    fn refresh_basic_values(&mut self) {
        let nc = self.ncols;
        for r in 0..self.m {
            let row = &self.mat[r * nc..(r + 1) * nc];
            let mut v = 0.0;
            for (j, a) in row.iter().enumerate() {
                if *a != 0.0 && self.state[j] != State::Basic {
                    v -= a * self.x[j];
                }
            }
            self.x[self.basis[r]] = v;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.ncols;
        let p = self.mat[r * nc + j];
        let inv = 1.0 / p;
        self.scratch.clear();
        {
            let row = &mut self.mat[r * nc..(r + 1) * nc];
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    } else {
                        self.scratch.push((k, *v));
                    }
                }
            }
            row[j] = 1.0;
        }
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.mat[i * nc + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.mat[i * nc..(i + 1) * nc];
            for &(k, v) in &self.scratch {
                let nv = row[k] - f * v;
                row[k] = if nv.abs() < DROP_TOL { 0.0 } else { nv };
            }
            row[j] = 0.0;
        }
        let f = self.d[j];
        if f != 0.0 {
            for &(k, v) in &self.scratch {
                self.d[k] -= f * v;
            }
            self.d[j] = 0.0;
        }
        let leaving = self.basis[r];
        self.basis[r] = j;
        self.state[j] = State::Basic;
        // caller sets the leaving state
        self.state[leaving] = State::Lower;
        self.iterations += 1;
    }

    fn entering_direction(&self, j: usize) -> Option<f64> {
        if self.lo[j] == self.up[j] {
            return None;
        }
        let d = self.d[j];
        match self.state[j] {
            State::Lower if d < -OPT_TOL => Some(1.0),
            State::Upper if d > OPT_TOL => Some(-1.0),
            State::Free if d.abs() > OPT_TOL => Some(if d < 0.0 { 1.0 } else { -1.0 }),
            _ => None,
        }
    }

    /// Primal simplex on the current cost vector. Requires a primal feasible
    /// basis.
    fn primal(&mut self, limit: u64) -> Result<LpStatus, IterationLimit> {
        let nc = self.ncols;
        let mut streak = 0u32;
        let start = self.iterations;
        loop {
            if self.iterations - start > limit {
                return Err(IterationLimit);
            }
            let bland = streak > DEGENERATE_STREAK;
            let mut entering = None;
            let mut best = 0.0;
            for j in 0..nc {
                if self.state[j] == State::Basic {
                    continue;
                }
                if let Some(dir) = self.entering_direction(j) {
                    if bland {
                        entering = Some((j, dir));
                        break;
                    }
                    let score = self.d[j].abs();
                    if score > best {
                        best = score;
                        entering = Some((j, dir));
                    }
                }
            }
            let Some((j, dir)) = entering else {
                return Ok(LpStatus::Optimal);
            };

            // ratio test
            let mut step = self.up[j] - self.lo[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_alpha = 0.0;
            for r in 0..self.m {
                let a = self.mat[r * nc + j];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[r];
                // x_b changes by -dir * a * t
                let rate = -dir * a;
                let (limit_r, to_upper) = if rate < 0.0 {
                    if self.lo[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    (((self.x[b] - self.lo[b]) / -rate).max(0.0), false)
                } else {
                    if self.up[b] == f64::INFINITY {
                        continue;
                    }
                    (((self.up[b] - self.x[b]) / rate).max(0.0), true)
                };
                let better = match leave {
                    None => limit_r < step,
                    Some((lr, _)) => {
                        if bland {
                            limit_r < step - 1e-12 || (limit_r <= step + 1e-12 && b < self.basis[lr])
                        } else {
                            limit_r < step - 1e-12 || (limit_r <= step + 1e-12 && a.abs() > leave_alpha)
                        }
                    }
                };
                if better {
                    step = limit_r;
                    leave = Some((r, to_upper));
                    leave_alpha = a.abs();
                }
            }
            if step == f64::INFINITY {
                return Ok(LpStatus::Unbounded);
            }
            streak = if step <= 1e-12 { streak + 1 } else { 0 };

            // move values
            if step != 0.0 {
                for r in 0..self.m {
                    let a = self.mat[r * nc + j];
                    if a != 0.0 {
                        self.x[self.basis[r]] -= dir * a * step;
                    }
                }
                self.x[j] += dir * step;
            }
            match leave {
                None => {
                    // bound flip
                    self.state[j] = if dir > 0.0 { State::Upper } else { State::Lower };
                    self.x[j] = if dir > 0.0 { self.up[j] } else { self.lo[j] };
                    self.iterations += 1;
                }
                Some((r, to_upper)) => {
                    let b = self.basis[r];
                    self.pivot(r, j);
                    if to_upper {
                        self.state[b] = State::Upper;
                        self.x[b] = self.up[b];
                    } else {
                        self.state[b] = State::Lower;
                        self.x[b] = self.lo[b];
                    }
                }
            }
        }
    }

    /// Dual simplex. Requires a dual feasible basis; restores primal
    /// feasibility or proves infeasibility.
    pub(crate) fn dual(&mut self, limit: u64) -> Result<LpStatus, IterationLimit> {
        let nc = self.ncols;
        let start = self.iterations;
        let mut streak = 0u32;
        loop {
            if self.iterations - start > limit {
                return Err(IterationLimit);
            }
            let bland = streak > DEGENERATE_STREAK;
            // leaving row: most infeasible basic variable
            let mut leave = None;
            let mut worst = FEAS_TOL;
            for r in 0..self.m {
                let b = self.basis[r];
                let viol = if self.x[b] < self.lo[b] {
                    self.lo[b] - self.x[b]
                } else if self.x[b] > self.up[b] {
                    self.x[b] - self.up[b]
                } else {
                    0.0
                };
                if viol > worst {
                    if bland {
                        if leave.is_none_or(|lr: usize| b < self.basis[lr]) {
                            leave = Some(r);
                        }
                    } else {
                        worst = viol;
                        leave = Some(r);
                    }
                }
            }
            let Some(r) = leave else {
                return Ok(LpStatus::Optimal);
            };
            let b = self.basis[r];
            let below = self.x[b] < self.lo[b];
            let target = if below { self.lo[b] } else { self.up[b] };

            // entering: keep reduced costs dual feasible
            let mut entering = None;
            let mut best_ratio = f64::INFINITY;
            let mut best_alpha = 0.0;
            for j in 0..nc {
                let st = self.state[j];
                if st == State::Basic || self.lo[j] == self.up[j] {
                    continue;
                }
                let a = self.mat[r * nc + j];
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                // x_b moves by -a * dx_j; need x_b up if below, down if above
                let eligible = match st {
                    State::Lower => (below && a < 0.0) || (!below && a > 0.0),
                    State::Upper => (below && a > 0.0) || (!below && a < 0.0),
                    State::Free => true,
                    State::Basic => false,
                };
                if !eligible {
                    continue;
                }
                let ratio = (self.d[j] / a).abs();
                let better = if bland {
                    ratio < best_ratio - 1e-12
                } else {
                    ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && a.abs() > best_alpha)
                };
                if better {
                    best_ratio = ratio;
                    best_alpha = a.abs();
                    entering = Some(j);
                }
            }
            let Some(j) = entering else {
                return Ok(LpStatus::Infeasible);
            };
            streak = if best_ratio <= 1e-12 { streak + 1 } else { 0 };

            let a_rj = self.mat[r * nc + j];
            let dx = -(target - self.x[b]) / a_rj;
            for i in 0..self.m {
                let a = self.mat[i * nc + j];
                if a != 0.0 {
                    self.x[self.basis[i]] -= a * dx;
                }
            }
            self.x[j] += dx;
            self.pivot(r, j);
            self.x[b] = target;
            self.state[b] = if below { State::Lower } else { State::Upper };
            if self.lo[b] == self.up[b] {
                self.state[b] = State::Lower;
            }
        }
    }

    /// Two-phase primal simplex from the initial basis.
    pub(crate) fn solve(&mut self, limit: u64) -> Result<LpStatus, IterationLimit> {
        let first_art = self.first_artificial();
        if first_art < self.ncols {
            let mut phase1 = vec![0.0; self.ncols];
            for c in phase1.iter_mut().skip(first_art) {
                *c = 1.0;
            }
            self.compute_reduced_costs(&phase1);
            self.primal(limit)?;
            let infeasibility: f64 = self.x[first_art..].iter().sum();
            if infeasibility > FEAS_TOL {
                return Ok(LpStatus::Infeasible);
            }
            self.retire_artificials();
        }
        let cost = core::mem::take(&mut self.cost);
        self.compute_reduced_costs(&cost);
        self.cost = cost;
        let status = self.primal(limit)?;
        self.refresh_basic_values();
        Ok(status)
    }

    /// Fixes artificials at zero, pivots them out where possible and drops
    /// the nonbasic ones from the tableau.
    fn retire_artificials(&mut self) {
        let nc = self.ncols;
        let first_art = self.first_artificial();
        for r in 0..self.m {
            if self.basis[r] < first_art {
                continue;
            }
            let mut best = None;
            let mut best_abs = 1e-7;
            for j in 0..first_art {
                if self.state[j] == State::Basic {
                    continue;
                }
                let a = self.mat[r * nc + j].abs();
                if a > best_abs {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                let b = self.basis[r];
                self.pivot(r, j);
                self.x[b] = 0.0;
            }
        }
        for j in first_art..nc {
            self.lo[j] = 0.0;
            self.up[j] = 0.0;
            if self.state[j] != State::Basic {
                self.x[j] = 0.0;
                self.state[j] = State::Lower;
            }
        }
        let keep: Vec<usize> = (0..nc).filter(|&j| j < first_art || self.state[j] == State::Basic).collect();
        if keep.len() == nc {
            return;
        }
        let new_nc = keep.len();
        let mut remap = vec![usize::MAX; nc];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let mut mat = vec![0.0; self.m * new_nc];
        for r in 0..self.m {
            for (new, &old) in keep.iter().enumerate() {
                mat[r * new_nc + new] = self.mat[r * nc + old];
            }
        }
        self.mat = mat;
        self.lo = keep.iter().map(|&j| self.lo[j]).collect();
        self.up = keep.iter().map(|&j| self.up[j]).collect();
        self.x = keep.iter().map(|&j| self.x[j]).collect();
        self.state = keep.iter().map(|&j| self.state[j]).collect();
        self.cost = keep.iter().map(|&j| self.cost.get(j).copied().unwrap_or(0.0)).collect();
        self.d = vec![0.0; new_nc];
        for b in self.basis.iter_mut() {
            *b = remap[*b];
        }
        self.ncols = new_nc;
    }

    /// Fixes a column to `value`, keeping the basis. Basic values are updated
    /// so a following [`Tableau::dual`] call can restore feasibility.
    pub(crate) fn fix(&mut self, j: usize, value: f64) {
        self.lo[j] = value;
        self.up[j] = value;
        if self.state[j] != State::Basic {
            let delta = value - self.x[j];
            if delta != 0.0 {
                let nc = self.ncols;
                for r in 0..self.m {
                    let a = self.mat[r * nc + j];
                    if a != 0.0 {
                        self.x[self.basis[r]] -= a * delta;
                    }
                }
            }
            self.x[j] = value;
            self.state[j] = State::Lower;
        }
    }

    /// Re-optimises after bound changes: dual simplex, then a primal pass to
    /// mop up any drift in the reduced costs.
    pub(crate) fn reoptimize(&mut self, limit: u64) -> Result<LpStatus, IterationLimit> {
        match self.dual(limit)? {
            LpStatus::Optimal => {}
            other => return Ok(other),
        }
        self.refresh_basic_values();
        if self.primal_infeasibility() > FEAS_TOL {
            match self.dual(limit)? {
                LpStatus::Optimal => {}
                other => return Ok(other),
            }
        }
        let status = self.primal(limit)?;
        self.refresh_basic_values();
        Ok(status)
    }

    pub(crate) fn primal_infeasibility(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.m {
            let b = self.basis[r];
            worst = worst.max(self.lo[b] - self.x[b]).max(self.x[b] - self.up[b]);
        }
        worst
    }

    pub(crate) fn size(&self) -> (usize, usize) {
        (self.m, self.ncols)
    }
}

fn initial_value(lo: f64, up: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if up.is_finite() {
        up
    } else {
        0.0
    }
}

fn nonbasic_state(lo: f64, up: f64, value: f64) -> State {
    if lo.is_finite() && value == lo {
        State::Lower
    } else if up.is_finite() && value == up {
        State::Upper
    } else {
        State::Free
    }
}
