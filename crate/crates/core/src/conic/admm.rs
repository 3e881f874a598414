//! Operator-splitting solver for
//!
//! ```text
//! minimize    ½ xᵀ P x + qᵀ x
//! subject to  A x ∈ C = C₁ × … × Cₖ
//! ```
//!
//! where each `Cᵢ` is a [`Cone`]. The iteration is the OSQP splitting with
//! the box projection replaced by a general Euclidean projection. The
//! quasi-definite KKT matrix `[[P + σI, Aᵀ], [A, −diag(ρ)⁻¹]]` is factored
//! once and reused for every iteration. Data is equilibrated with a modified
//! Ruiz scaling that keeps a single row scale on each ball and second-order
//! segment.

use super::cones::{project_all, Cone};
use super::ldl::{permute_sym_upper, reverse_cuthill_mckee, LdlError, LdlFactor, Permutation};
use super::sparse::{CscMatrix, TripletBuilder};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("P must be stored as an upper triangle")]
    PNotUpper,
    #[error("ill-formed cone segment at index {0}")]
    BadCone(usize),
    #[error("invalid settings: {0}")]
    Settings(&'static str),
    #[error("KKT factorization failed: {0}")]
    Factorization(#[from] LdlError),
    #[error("non-finite iterate at iteration {0}")]
    NotFinite(usize),
}

/// A conic program with `P` stored as its upper triangle.
#[derive(Debug, Clone)]
pub struct ConicProgram {
    p: CscMatrix,
    q: Vec<f64>,
    a: CscMatrix,
    cones: Vec<Cone>,
}

impl ConicProgram {
    pub fn new(p: CscMatrix, q: Vec<f64>, a: CscMatrix, cones: Vec<Cone>) -> Result<Self, SolverError> {
        let n = q.len();
        if p.nrows() != n || p.ncols() != n {
            return Err(SolverError::Dimension(format!(
                "P is {}x{}, q has {n} entries",
                p.nrows(),
                p.ncols()
            )));
        }
        if !p.is_upper_triangular() {
            return Err(SolverError::PNotUpper);
        }
        if a.ncols() != n {
            return Err(SolverError::Dimension(format!(
                "A has {} columns, expected {n}",
                a.ncols()
            )));
        }
        let rows: usize = cones.iter().map(Cone::dim).sum();
        if rows != a.nrows() {
            return Err(SolverError::Dimension(format!(
                "cone segments cover {rows} rows, A has {}",
                a.nrows()
            )));
        }
        if let Some(k) = cones.iter().position(|c| !c.is_well_formed()) {
            return Err(SolverError::BadCone(k));
        }
        if q.iter().any(|v| !v.is_finite())
            || p.values().iter().any(|v| !v.is_finite())
            || a.values().iter().any(|v| !v.is_finite())
        {
            return Err(SolverError::Dimension("non-finite problem data".into()));
        }
        Ok(Self { p, q, a, cones })
    }

    pub fn num_vars(&self) -> usize {
        self.q.len()
    }

    pub fn num_rows(&self) -> usize {
        self.a.nrows()
    }

    pub fn p(&self) -> &CscMatrix {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn a(&self) -> &CscMatrix {
        &self.a
    }

    pub fn cones(&self) -> &[Cone] {
        &self.cones
    }

    /// `½ xᵀ P x + qᵀ x`
    pub fn objective(&self, x: &[f64]) -> f64 {
        let mut px = vec![0.0; x.len()];
        self.p.sym_upper_mul_vec(x, &mut px);
        0.5 * dot(x, &px) + dot(&self.q, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Settings {
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub max_iter: usize,
    pub rho: f64,
    pub sigma: f64,
    pub alpha_relax: f64,
    /// Multiplier on `rho` for equality rows.
    pub eq_rho_scale: f64,
    pub scaling_iters: usize,
    /// Rebalance `rho` from the residual ratio every `adaptive_rho_interval`
    /// iterations, refactoring the KKT matrix when it moves by more than a
    /// factor of `adaptive_rho_tolerance`. Zero disables adaptation.
    pub adaptive_rho_interval: usize,
    pub adaptive_rho_tolerance: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            eps_abs: 1e-6,
            eps_rel: 1e-6,
            max_iter: 20_000,
            rho: 0.1,
            sigma: 1e-6,
            alpha_relax: 1.6,
            eq_rho_scale: 1e3,
            scaling_iters: 10,
            adaptive_rho_interval: 25,
            adaptive_rho_tolerance: 5.0,
        }
    }
}

impl Settings {
    pub fn with_tolerance(mut self, eps: f64) -> Self {
        self.eps_abs = eps;
        self.eps_rel = eps;
        self
    }

    fn validate(&self) -> Result<(), SolverError> {
        if !(self.eps_abs >= 0.0 && self.eps_rel >= 0.0 && self.eps_abs + self.eps_rel > 0.0) {
            return Err(SolverError::Settings("tolerances must be nonnegative and not both zero"));
        }
        if !(self.rho > 0.0 && self.sigma > 0.0 && self.eq_rho_scale > 0.0) {
            return Err(SolverError::Settings("rho, sigma and eq_rho_scale must be positive"));
        }
        if !(self.alpha_relax > 0.0 && self.alpha_relax < 2.0) {
            return Err(SolverError::Settings("alpha_relax must lie in (0, 2)"));
        }
        if self.max_iter == 0 {
            return Err(SolverError::Settings("max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    MaxIter,
    /// Iteration limit reached with a converged dual residual while the
    /// primal residual stalled; a heuristic, not a certificate.
    PrimalInfeasibleGuess,
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub prim_res: f64,
    pub dual_res: f64,
}

/// Primal/dual starting point in unscaled coordinates.
#[derive(Debug, Clone, Copy)]
pub struct WarmStart<'a> {
    pub x: &'a [f64],
    pub y: Option<&'a [f64]>,
}

/// Solves `prog` from scratch or from a warm start.
pub fn solve(
    prog: &ConicProgram,
    settings: &Settings,
    warm: Option<WarmStart<'_>>,
) -> Result<SolverResult, SolverError> {
    Workspace::new(prog, *settings)?.solve(warm)
}

/// Scaled data, factorization and iterates for one program.
pub struct Workspace {
    settings: Settings,
    n: usize,
    m: usize,
    p: CscMatrix,
    q: Vec<f64>,
    a: CscMatrix,
    cones: Vec<Cone>,
    d: Vec<f64>,
    e: Vec<f64>,
    c: f64,
    rho_base: f64,
    eq_rows: Vec<bool>,
    perm: Permutation,
    kkt: CscMatrix,
    rho_slots: Vec<usize>,
    factor: LdlFactor,
}

const MIN_SCALE: f64 = 1e-4;
const MAX_SCALE: f64 = 1e4;

impl Workspace {
    pub fn new(prog: &ConicProgram, settings: Settings) -> Result<Self, SolverError> {
        settings.validate()?;
        let n = prog.num_vars();
        let m = prog.num_rows();
        let mut p = prog.p.clone();
        let mut a = prog.a.clone();
        let mut q = prog.q.clone();
        let mut d = vec![1.0; n];
        let mut e = vec![1.0; m];
        let mut c = 1.0;

        let clamp = |v: f64| {
            if v < MIN_SCALE {
                1.0
            } else {
                v.min(MAX_SCALE)
            }
        };
        for _ in 0..settings.scaling_iters {
            let pn = p.sym_upper_col_inf_norms();
            let an = a.col_inf_norms();
            let dd: Vec<f64> = (0..n).map(|j| 1.0 / clamp(pn[j].max(an[j])).sqrt()).collect();
            let rn = a.row_inf_norms();
            let mut de: Vec<f64> = rn.iter().map(|&r| 1.0 / clamp(r).sqrt()).collect();
            let mut off = 0;
            for cone in &prog.cones {
                let k = cone.dim();
                if cone.needs_uniform_scaling() {
                    let mx = rn[off..off + k].iter().fold(0.0f64, |a, &b| a.max(b));
                    let s = 1.0 / clamp(mx).sqrt();
                    de[off..off + k].iter_mut().for_each(|v| *v = s);
                }
                off += k;
            }
            p.scale(&dd, &dd);
            a.scale(&de, &dd);
            q.iter_mut().zip(&dd).for_each(|(qi, s)| *qi *= s);
            d.iter_mut().zip(&dd).for_each(|(v, s)| *v *= s);
            e.iter_mut().zip(&de).for_each(|(v, s)| *v *= s);

            let pn = p.sym_upper_col_inf_norms();
            let mean = if n > 0 { pn.iter().sum::<f64>() / n as f64 } else { 0.0 };
            let qn = q.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
            let gamma = 1.0 / clamp(mean.max(qn));
            p.values_mut().iter_mut().for_each(|v| *v *= gamma);
            q.iter_mut().for_each(|v| *v *= gamma);
            c *= gamma;
        }

        let mut cones = Vec::with_capacity(prog.cones.len());
        let mut eq_rows = vec![false; m];
        let mut off = 0;
        for cone in &prog.cones {
            let k = cone.dim();
            cones.push(cone.scaled(&e[off..off + k]));
            for r in 0..k {
                eq_rows[off + r] = cone.is_equality_row(r);
            }
            off += k;
        }
        let rho = rho_vector(settings.rho, settings.eq_rho_scale, &eq_rows);

        let kkt = assemble_kkt(&p, &a, settings.sigma, &rho);
        let perm = kkt_ordering(&p, &a);
        let (kkt, _) = permute_sym_upper(&kkt, &perm);
        let rho_slots = (0..m)
            .map(|i| {
                let c = perm.iperm[n + i];
                let range = kkt.colptr()[c]..kkt.colptr()[c + 1];
                range.start
                    + kkt.rowind()[range]
                        .binary_search(&c)
                        .expect("diagonal entry present")
            })
            .collect();
        let factor = LdlFactor::new(&kkt)?;

        Ok(Self {
            settings,
            n,
            m,
            p,
            q,
            a,
            cones,
            d,
            e,
            c,
            rho_base: settings.rho,
            eq_rows,
            perm,
            kkt,
            rho_slots,
            factor,
        })
    }

    pub fn factor_nnz(&self) -> usize {
        self.factor.nnz()
    }

    pub fn solve(&mut self, warm: Option<WarmStart<'_>>) -> Result<SolverResult, SolverError> {
        let (n, m) = (self.n, self.m);
        let s = self.settings;
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; m];
        let mut z = vec![0.0; m];
        if let Some(w) = warm {
            if w.x.len() != n {
                return Err(SolverError::Dimension("warm-start x length".into()));
            }
            for j in 0..n {
                x[j] = w.x[j] / self.d[j];
            }
            if let Some(wy) = w.y {
                if wy.len() != m {
                    return Err(SolverError::Dimension("warm-start y length".into()));
                }
                for i in 0..m {
                    y[i] = wy[i] * self.c / self.e[i];
                }
            }
            self.a.mul_vec(&x, &mut z);
            project_all(&self.cones, &mut z);
        } else {
            project_all(&self.cones, &mut z);
        }

        let nk = n + m;
        let mut rhs = vec![0.0; nk];
        let mut xt = vec![0.0; n];
        let mut zt = vec![0.0; m];
        let mut z_prev = vec![0.0; m];
        let mut ax = vec![0.0; m];
        let mut px = vec![0.0; n];
        let mut aty = vec![0.0; n];
        // without constraints the splitting degenerates to a proximal-point
        // iteration, where over-relaxation only adds oscillation
        let alpha = if m == 0 { 1.0 } else { s.alpha_relax };
        let mut rho = rho_vector(self.rho_base, s.eq_rho_scale, &self.eq_rows);

        let mut best: Option<(f64, Vec<f64>, Vec<f64>, Vec<f64>, f64, f64)> = None;
        let mut first_prim = f64::NAN;

        let mut iter = 0;
        loop {
            // convergence check on the current iterate
            let (prim, dual, eps_p, eps_d) = self.residuals(&x, &y, &z, &mut ax, &mut px, &mut aty);
            if !(prim.is_finite() && dual.is_finite()) {
                return Err(SolverError::NotFinite(iter));
            }
            if iter == 1 {
                first_prim = prim / eps_p;
            }
            // a supplied dual need not lie in the normal cone at z until one
            // projection step has run, so the residuals certify nothing yet
            if iter > 0 && prim <= eps_p && dual <= eps_d {
                return Ok(self.finish(x, y, z, SolveStatus::Solved, iter, prim, dual));
            }
            let merit = (prim / eps_p).max(dual / eps_d);
            if best.as_ref().is_none_or(|b| merit < b.0) {
                best = Some((merit, x.clone(), y.clone(), z.clone(), prim, dual));
            }
            if iter == s.max_iter {
                break;
            }
            if s.adaptive_rho_interval > 0 && iter > 0 && iter % s.adaptive_rho_interval == 0 {
                self.adapt_rho(&x, &y, &z, &mut rho, &mut ax, &mut px, &mut aty)?;
            }
            iter += 1;

            // KKT solve in permuted coordinates
            for j in 0..n {
                rhs[self.perm.iperm[j]] = s.sigma * x[j] - self.q[j];
            }
            for i in 0..m {
                rhs[self.perm.iperm[n + i]] = z[i] - y[i] / rho[i];
            }
            self.factor.solve_in_place(&mut rhs);
            for j in 0..n {
                xt[j] = rhs[self.perm.iperm[j]];
            }
            for i in 0..m {
                let nu = rhs[self.perm.iperm[n + i]];
                zt[i] = z[i] + (nu - y[i]) / rho[i];
            }
            for j in 0..n {
                x[j] = alpha * xt[j] + (1.0 - alpha) * x[j];
            }
            z_prev.copy_from_slice(&z);
            for i in 0..m {
                z[i] = alpha * zt[i] + (1.0 - alpha) * z_prev[i] + y[i] / rho[i];
            }
            project_all(&self.cones, &mut z);
            for i in 0..m {
                let zr = alpha * zt[i] + (1.0 - alpha) * z_prev[i];
                y[i] += rho[i] * (zr - z[i]);
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::NotFinite(iter));
            }
        }

        let (_, bx, by, bz, prim, dual) = best.expect("at least one residual evaluation");
        let (_, _, eps_p, eps_d) = self.residuals(&bx, &by, &bz, &mut ax, &mut px, &mut aty);
        let status = if dual <= eps_d && prim / eps_p >= 0.5 * first_prim {
            SolveStatus::PrimalInfeasibleGuess
        } else {
            SolveStatus::MaxIter
        };
        Ok(self.finish(bx, by, bz, status, iter, prim, dual))
    }

    /// Residual-balancing update of the scalar `rho`, computed in scaled
    /// coordinates.
    #[allow(clippy::too_many_arguments)]
    fn adapt_rho(
        &mut self,
        x: &[f64],
        y: &[f64],
        z: &[f64],
        rho: &mut Vec<f64>,
        ax: &mut [f64],
        px: &mut [f64],
        aty: &mut [f64],
    ) -> Result<(), SolverError> {
        if self.m == 0 {
            return Ok(());
        }
        self.a.mul_vec(x, ax);
        self.p.sym_upper_mul_vec(x, px);
        self.a.tr_mul_vec(y, aty);
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let prim = ax.iter().zip(z).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        let dual = (0..self.n).fold(0.0f64, |a, j| a.max((px[j] + self.q[j] + aty[j]).abs()));
        let prim_norm = inf(ax).max(inf(z)).max(1e-12);
        let dual_norm = inf(px).max(inf(aty)).max(inf(&self.q)).max(1e-12);
        let ratio = (prim / prim_norm) / (dual / dual_norm + 1e-30);
        let new_rho = (self.rho_base * ratio.sqrt()).clamp(1e-6, 1e6);
        let tol = self.settings.adaptive_rho_tolerance;
        if !(new_rho > self.rho_base * tol || new_rho < self.rho_base / tol) {
            return Ok(());
        }
        self.rho_base = new_rho;
        *rho = rho_vector(new_rho, self.settings.eq_rho_scale, &self.eq_rows);
        for (i, &slot) in self.rho_slots.iter().enumerate() {
            self.kkt.values_mut()[slot] = -1.0 / rho[i];
        }
        self.factor.refactor(&self.kkt)?;
        Ok(())
    }

    /// Unscaled primal and dual residuals with their tolerances.
    fn residuals(
        &self,
        x: &[f64],
        y: &[f64],
        z: &[f64],
        ax: &mut [f64],
        px: &mut [f64],
        aty: &mut [f64],
    ) -> (f64, f64, f64, f64) {
        let s = &self.settings;
        self.a.mul_vec(x, ax);
        let mut prim = 0.0f64;
        let mut ax_n = 0.0f64;
        let mut z_n = 0.0f64;
        for i in 0..self.m {
            let inv = 1.0 / self.e[i];
            prim = prim.max(((ax[i] - z[i]) * inv).abs());
            ax_n = ax_n.max((ax[i] * inv).abs());
            z_n = z_n.max((z[i] * inv).abs());
        }
        self.p.sym_upper_mul_vec(x, px);
        self.a.tr_mul_vec(y, aty);
        let cinv = 1.0 / self.c;
        let mut dual = 0.0f64;
        let (mut px_n, mut aty_n, mut q_n) = (0.0f64, 0.0f64, 0.0f64);
        for j in 0..self.n {
            let inv = cinv / self.d[j];
            dual = dual.max(((px[j] + self.q[j] + aty[j]) * inv).abs());
            px_n = px_n.max((px[j] * inv).abs());
            aty_n = aty_n.max((aty[j] * inv).abs());
            q_n = q_n.max((self.q[j] * inv).abs());
        }
        let eps_p = s.eps_abs + s.eps_rel * ax_n.max(z_n);
        let eps_d = s.eps_abs + s.eps_rel * px_n.max(aty_n).max(q_n);
        (prim, dual, eps_p, eps_d)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        &self,
        mut x: Vec<f64>,
        mut y: Vec<f64>,
        mut z: Vec<f64>,
        status: SolveStatus,
        iterations: usize,
        prim_res: f64,
        dual_res: f64,
    ) -> SolverResult {
        let mut px = vec![0.0; self.n];
        self.p.sym_upper_mul_vec(&x, &mut px);
        let objective = (0.5 * dot(&x, &px) + dot(&self.q, &x)) / self.c;
        for j in 0..self.n {
            x[j] *= self.d[j];
        }
        for i in 0..self.m {
            y[i] *= self.e[i] / self.c;
            z[i] /= self.e[i];
        }
        SolverResult {
            x,
            y,
            z,
            objective,
            status,
            iterations,
            prim_res,
            dual_res,
        }
    }
}

fn rho_vector(rho: f64, eq_scale: f64, eq_rows: &[bool]) -> Vec<f64> {
    eq_rows
        .iter()
        .map(|&eq| if eq { rho * eq_scale } else { rho })
        .collect()
}

fn assemble_kkt(p: &CscMatrix, a: &CscMatrix, sigma: f64, rho: &[f64]) -> CscMatrix {
    let n = p.ncols();
    let m = a.nrows();
    let mut b = TripletBuilder::with_capacity(n + m, n + m, p.nnz() + a.nnz() + n + m);
    for (i, j, v) in p.iter() {
        b.push(i, j, v);
    }
    for j in 0..n {
        b.push(j, j, sigma);
    }
    for (i, j, v) in a.iter() {
        b.push(j, n + i, v);
    }
    for i in 0..m {
        b.push(n + i, n + i, -1.0 / rho[i]);
    }
    b.build()
}

/// Constraint rows first, then the variables in reverse Cuthill–McKee order
/// of the pattern of `P + AᵀA`.
fn kkt_ordering(p: &CscMatrix, a: &CscMatrix) -> Permutation {
    let n = p.ncols();
    let m = a.nrows();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, _) in p.iter() {
        if i != j {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    let at = a.transpose();
    for r in 0..m {
        let cols = &at.rowind()[at.colptr()[r]..at.colptr()[r + 1]];
        for (k, &u) in cols.iter().enumerate() {
            for &v in &cols[k + 1..] {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
    }
    for l in adj.iter_mut() {
        l.sort_unstable();
        l.dedup();
    }
    let var_order = reverse_cuthill_mckee(&adj);
    let mut order: Vec<usize> = (n..n + m).collect();
    order.extend(var_order);
    Permutation::from_order(order)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
