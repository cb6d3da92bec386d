//! Discrete gradient and divergence rows shared by the implicit viscous solve
//! and the dissipation ledger.
//!
//! The viscous operator is assembled as `Σ_r w_r (μ |G_r u|² + (λ+μ) |D_r u|²)`
//! over gradient rows `G_r` (one per cell face) and divergence rows `D_r` (one
//! per cell vertex; faces in 1D). Using the same rows for the energy ledger makes
//! the discrete dissipation identity exact.

use std::sync::Arc;

use crate::error::Result;
use crate::fields::{DomainKind, Grid};
use crate::linalg::Csr;
use crate::scalar::Real;

type Entry<T> = (usize, T);
type VecEntry<T> = (usize, usize, T);

/// Face-difference and vertex-divergence stencils for one grid.
#[derive(Clone, Debug)]
pub struct ViscousOperator<T> {
    grid: Arc<Grid<T>>,
    dirichlet: bool,
    grad: Vec<Vec<Entry<T>>>,
    div: Vec<Vec<VecEntry<T>>>,
    weight: T,
    unknown: Vec<Option<usize>>,
    n_active: usize,
}

impl<T: Real> ViscousOperator<T> {
    /// In ball mode velocities vanish outside the active cells. In box mode the
    /// truncation faces are stress free.
    pub fn new(grid: &Arc<Grid<T>>) -> Self {
        let dirichlet = matches!(grid.kind(), DomainKind::Ball { .. });
        let dim = grid.dim();
        let mut grad = Vec::new();
        for axis in 0..dim {
            let inv_h = grid.h(axis).recip();
            for &(c, n) in grid.open_faces(axis) {
                grad.push(vec![(n, inv_h), (c, -inv_h)]);
            }
            if dirichlet {
                for c in (0..grid.len()).filter(|&c| grid.is_active(c)) {
                    for side in [-1, 1] {
                        let open = grid
                            .neighbor(c, axis, side)
                            .is_some_and(|nb| grid.is_active(nb));
                        if !open {
                            let sign = if side > 0 { -inv_h } else { inv_h };
                            grad.push(vec![(c, sign)]);
                        }
                    }
                }
            }
        }

        let mut div = Vec::new();
        let n0 = grid.n(0);
        let n1 = if dim == 2 { grid.n(1) } else { 1 };
        let vi_max = if dim == 2 { n1 } else { 0 };
        let inv2h: Vec<T> = (0..dim)
            .map(|a| {
                let corners = if dim == 2 { T::lit(2.0) } else { T::one() };
                (corners * grid.h(a)).recip()
            })
            .collect();
        for vi in 0..=n0 {
            for vj in 0..=vi_max {
                // Cells touching the vertex, with their side relative to it.
                let mut cells = Vec::new();
                let rows: &[(usize, bool)] = &[(vi.wrapping_sub(1), false), (vi, true)];
                let cols: Vec<(usize, bool)> = if dim == 2 {
                    vec![(vj.wrapping_sub(1), false), (vj, true)]
                } else {
                    vec![(0, true)]
                };
                let mut complete = true;
                for &(i, hi_i) in rows {
                    for &(j, hi_j) in &cols {
                        if i < n0 && j < n1 {
                            cells.push((grid.index([i, j]), hi_i, hi_j));
                        } else {
                            complete = false;
                        }
                    }
                }
                let any_active = cells.iter().any(|&(c, _, _)| grid.is_active(c));
                let all_active = complete && cells.iter().all(|&(c, _, _)| grid.is_active(c));
                let keep = if dirichlet { any_active } else { all_active };
                if !keep {
                    continue;
                }
                let mut row = Vec::new();
                for &(c, hi_i, hi_j) in cells.iter().filter(|e| grid.is_active(e.0)) {
                    row.push((c, 0, if hi_i { inv2h[0] } else { -inv2h[0] }));
                    if dim == 2 {
                        row.push((c, 1, if hi_j { inv2h[1] } else { -inv2h[1] }));
                    }
                }
                div.push(row);
            }
        }

        let mut unknown = vec![None; grid.len()];
        let mut n_active = 0;
        for (c, slot) in unknown.iter_mut().enumerate() {
            if grid.is_active(c) {
                *slot = Some(n_active);
                n_active += 1;
            }
        }
        ViscousOperator {
            grid: Arc::clone(grid),
            dirichlet,
            grad,
            div,
            weight: grid.cell_volume(),
            unknown,
            n_active,
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn is_dirichlet(&self) -> bool {
        self.dirichlet
    }

    /// `‖∇_h u‖²_{L²}` summed over components.
    pub fn grad_norm_sq(&self, u: &[[T; 2]]) -> T {
        let dim = self.grid.dim();
        let mut acc = T::zero();
        for row in &self.grad {
            for k in 0..dim {
                let g: T = row.iter().map(|&(c, w)| w * u[c][k]).sum();
                acc = acc + g * g;
            }
        }
        acc * self.weight
    }

    /// `‖div_h u‖²_{L²}`.
    pub fn div_norm_sq(&self, u: &[[T; 2]]) -> T {
        let mut acc = T::zero();
        for row in &self.div {
            let d: T = row.iter().map(|&(c, k, w)| w * u[c][k]).sum();
            acc = acc + d * d;
        }
        acc * self.weight
    }

    /// `μ‖∇_h u‖² + (λ+μ)‖div_h u‖²`.
    pub fn dissipation(&self, u: &[[T; 2]], mu: T, lambda: T) -> T {
        mu * self.grad_norm_sq(u) + (lambda + mu) * self.div_norm_sq(u)
    }

    fn idx(&self, cell: usize, k: usize) -> Option<usize> {
        self.unknown[cell].map(|p| p * self.grid.dim() + k)
    }

    /// Triplets of `Σ_r (μ G_rᵀG_r + (λ+μ) D_rᵀD_r)` over velocity unknowns.
    /// The row weight `h^d` cancels against the per-volume scaling of the
    /// momentum equation.
    fn stiffness(&self, mu: T, lambda: T, scale: T) -> Vec<(usize, usize, T)> {
        let dim = self.grid.dim();
        let mut t = Vec::new();
        for row in &self.grad {
            for k in 0..dim {
                for &(a, wa) in row {
                    for &(b, wb) in row {
                        if let (Some(i), Some(j)) = (self.idx(a, k), self.idx(b, k)) {
                            t.push((i, j, scale * mu * wa * wb));
                        }
                    }
                }
            }
        }
        let lm = lambda + mu;
        if lm != T::zero() {
            for row in &self.div {
                for &(a, ka, wa) in row {
                    for &(b, kb, wb) in row {
                        if let (Some(i), Some(j)) = (self.idx(a, ka), self.idx(b, kb)) {
                            t.push((i, j, scale * lm * wa * wb));
                        }
                    }
                }
            }
        }
        t
    }

    fn max_iter(&self) -> usize {
        20 * self.n_active * self.grid.dim() + 100
    }

    /// Solves `(rho (1 + γ dt) - dt (μΔ_h + (λ+μ)∇_h div_h)) u = rhs` for the
    /// velocity. Inactive cells get `u = 0`.
    pub fn solve_velocity(
        &self,
        rho: &[T],
        rhs: &[[T; 2]],
        dt: T,
        mu: T,
        lambda: T,
        gamma: T,
    ) -> Result<Vec<[T; 2]>> {
        let dim = self.grid.dim();
        let len = self.grid.len();
        let mut u = vec![[T::zero(); 2]; len];
        if rhs.iter().all(|r| r[0] == T::zero() && r[1] == T::zero()) {
            return Ok(u);
        }
        let size = self.n_active * dim;
        let mut t = self.stiffness(mu, lambda, dt);
        let mut b = vec![T::zero(); size];
        for c in 0..len {
            for k in 0..dim {
                if let Some(i) = self.idx(c, k) {
                    t.push((i, i, rho[c] * (T::one() + gamma * dt)));
                    b[i] = rhs[c][k];
                }
            }
        }
        let a = Csr::from_triplets(size, t);
        let x = a.solve(&b, T::epsilon() * T::lit(16.0), self.max_iter())?;
        for c in 0..len {
            for k in 0..dim {
                if let Some(i) = self.idx(c, k) {
                    u[c][k] = x[i];
                }
            }
        }
        Ok(u)
    }

    /// Keeps `u` on cells flagged in `fixed` and replaces it elsewhere by the
    /// discrete viscous-harmonic extension (the velocity an infinitely light fluid
    /// would carry).
    pub fn extend(&self, u: &[[T; 2]], fixed: &[bool], mu: T, lambda: T) -> Result<Vec<[T; 2]>> {
        let dim = self.grid.dim();
        let len = self.grid.len();
        let mut out: Vec<[T; 2]> = (0..len)
            .map(|c| if fixed[c] && self.grid.is_active(c) { u[c] } else { [T::zero(); 2] })
            .collect();
        if !(0..len).any(|c| fixed[c] && self.grid.is_active(c)) {
            return Ok(out);
        }
        // Map free unknowns to a compact numbering.
        let size = self.n_active * dim;
        let mut free = vec![None; size];
        let mut known = vec![T::zero(); size];
        let mut n_free = 0;
        for c in 0..len {
            for k in 0..dim {
                if let Some(i) = self.idx(c, k) {
                    if fixed[c] {
                        known[i] = u[c][k];
                    } else {
                        free[i] = Some(n_free);
                        n_free += 1;
                    }
                }
            }
        }
        if n_free == 0 {
            return Ok(out);
        }
        let mut t = Vec::new();
        let mut b = vec![T::zero(); n_free];
        for (i, j, v) in self.stiffness(mu, lambda, T::one()) {
            match (free[i], free[j]) {
                (Some(fi), Some(fj)) => t.push((fi, fj, v)),
                (Some(fi), None) => b[fi] = b[fi] - v * known[j],
                _ => {}
            }
        }
        let a = Csr::from_triplets(n_free, t);
        let x = a.solve(&b, T::epsilon() * T::lit(16.0), self.max_iter())?;
        for c in 0..len {
            for k in 0..dim {
                if let Some(fi) = self.idx(c, k).and_then(|i| free[i]) {
                    out[c][k] = x[fi];
                }
            }
        }
        Ok(out)
    }

    /// Solves `(1 - dt eps Δ_h) rho = rhs` with zero normal flux on every closed face.
    pub fn solve_density_diffusion(&self, rhs: &[T], dt: T, eps: T) -> Result<Vec<T>> {
        let grid = &self.grid;
        let mut t = Vec::new();
        for c in 0..grid.len() {
            if let Some(i) = self.unknown[c] {
                t.push((i, i, T::one()));
            }
        }
        for axis in 0..grid.dim() {
            let w = dt * eps / (grid.h(axis) * grid.h(axis));
            for &(c, n) in grid.open_faces(axis) {
                let (i, j) = (self.unknown[c].unwrap(), self.unknown[n].unwrap());
                t.push((i, i, w));
                t.push((j, j, w));
                t.push((i, j, -w));
                t.push((j, i, -w));
            }
        }
        let b: Vec<T> = (0..grid.len())
            .filter(|&c| self.unknown[c].is_some())
            .map(|c| rhs[c])
            .collect();
        let a = Csr::from_triplets(self.n_active, t);
        let x = a.solve(&b, T::epsilon() * T::lit(16.0), self.max_iter())?;
        Ok((0..grid.len())
            .map(|c| self.unknown[c].map_or(T::zero(), |i| x[i]))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_velocity_has_no_interior_gradient() {
        let g = Grid::<f64>::line(32, 1.0).unwrap();
        let op = ViscousOperator::new(&g);
        let u = vec![[0.3, 0.0]; 32];
        assert!(op.dissipation(&u, 1.0, 0.0).abs() < 1e-24);

        let ball = Grid::<f64>::new(1, 32, 1.0, DomainKind::Ball { radius: 0.9 }).unwrap();
        let op = ViscousOperator::new(&ball);
        let u: Vec<[f64; 2]> = (0..32)
            .map(|c| if ball.is_active(c) { [0.3, 0.0] } else { [0.0; 2] })
            .collect();
        // Two boundary faces, each (0.3/h)^2 h.
        let h = ball.h(0);
        let expect = 2.0 * 0.09 / h;
        assert!((op.grad_norm_sq(&u) - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn divergence_of_linear_field_2d() {
        let g = Grid::<f64>::square(8, 1.0).unwrap();
        let op = ViscousOperator::new(&g);
        let u: Vec<[f64; 2]> = (0..g.len())
            .map(|c| {
                let x = g.center(c);
                [x[0], 2.0 * x[1]]
            })
            .collect();
        // div u = 3 at each of the 7x7 interior vertices, dual area h^2.
        let h = g.h(0);
        let expect = 9.0 * 49.0 * h * h;
        assert!((op.div_norm_sq(&u) - expect).abs() < 1e-10);
    }

    #[test]
    fn solve_matches_operator() {
        let g = Grid::<f64>::square(6, 1.0).unwrap();
        let op = ViscousOperator::new(&g);
        let rho: Vec<f64> = (0..g.len()).map(|c| 1.0 + 0.1 * c as f64).collect();
        let rhs: Vec<[f64; 2]> = (0..g.len()).map(|c| [(c as f64).sin(), (c as f64).cos()]).collect();
        let (dt, mu, lambda) = (0.1, 1.0, 0.5);
        let u = op.solve_velocity(&rho, &rhs, dt, mu, lambda, 1.0).unwrap();
        // Energy identity: <u, A u> = <u, rhs>.
        let lhs = (0..g.len())
            .map(|c| rho[c] * (1.0 + dt) * (u[c][0] * u[c][0] + u[c][1] * u[c][1]))
            .sum::<f64>()
            + dt * op.dissipation(&u, mu, lambda) / g.cell_volume();
        let rhs_dot: f64 = (0..g.len()).map(|c| u[c][0] * rhs[c][0] + u[c][1] * rhs[c][1]).sum();
        assert!((lhs - rhs_dot).abs() < 1e-10 * rhs_dot.abs());
    }

    #[test]
    fn density_diffusion_conserves_mass() {
        let g = Grid::<f64>::new(1, 40, 2.0, DomainKind::Ball { radius: 1.5 }).unwrap();
        let op = ViscousOperator::new(&g);
        let rhs: Vec<f64> = (0..40)
            .map(|c| if g.is_active(c) { (c as f64 * 0.7).sin().abs() } else { 0.0 })
            .collect();
        let out = op.solve_density_diffusion(&rhs, 0.5, 0.1).unwrap();
        let before: f64 = rhs.iter().sum();
        let after: f64 = out.iter().sum();
        assert!((before - after).abs() < 1e-13 * before);
    }
}
