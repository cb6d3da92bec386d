//! Cell-centred grids, density and momentum fields, and their integral functionals.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Geometry of the computational domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DomainKind<T> {
    /// Truncation of the whole space to the box `[-L, L]^d`. Mass cannot cross the box faces.
    Box,
    /// Bounded domain: the cells whose centres lie in `|x| < radius`.
    Ball { radius: T },
}

/// Uniform Cartesian mesh in one or two dimensions.
///
/// Cells are indexed row-major with the last axis fastest, so in 2D cell
/// `(i, j)` has index `i * n[1] + j`. In 1D the second axis is degenerate
/// (`n[1] == 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<T> {
    dim: usize,
    n: [usize; 2],
    half_width: [T; 2],
    kind: DomainKind<T>,
    active: Vec<bool>,
    open_faces: [Vec<(usize, usize)>; 2],
}

impl<T: Real> Grid<T> {
    /// Same resolution and extent on every axis.
    pub fn new(dim: usize, n: usize, half_width: T, kind: DomainKind<T>) -> Result<Arc<Self>> {
        Self::with_axes(dim, [n, n], [half_width, half_width], kind)
    }

    pub fn line(n: usize, half_width: T) -> Result<Arc<Self>> {
        Self::new(1, n, half_width, DomainKind::Box)
    }

    pub fn square(n: usize, half_width: T) -> Result<Arc<Self>> {
        Self::new(2, n, half_width, DomainKind::Box)
    }

    pub fn with_axes(
        dim: usize,
        n: [usize; 2],
        half_width: [T; 2],
        kind: DomainKind<T>,
    ) -> Result<Arc<Self>> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        let mut n = n;
        let mut half_width = half_width;
        if dim == 1 {
            n[1] = 1;
            half_width[1] = T::zero();
        }
        for axis in 0..dim {
            if n[axis] < 4 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} has {} cells, need at least 4",
                    n[axis]
                )));
            }
            if !(half_width[axis] > T::zero()) || !half_width[axis].is_finite() {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis} half width {} must be positive",
                    half_width[axis]
                )));
            }
        }
        if let DomainKind::Ball { radius } = kind {
            let lmin = (0..dim).map(|a| half_width[a]).fold(T::infinity(), T::min);
            if !(radius > T::zero()) || radius > lmin {
                return Err(Error::InvalidGrid(format!(
                    "ball radius {radius} must lie in (0, {lmin}]"
                )));
            }
        }
        let mut grid = Grid {
            dim,
            n,
            half_width,
            kind,
            active: Vec::new(),
            open_faces: [Vec::new(), Vec::new()],
        };
        grid.active = (0..grid.len())
            .map(|c| match kind {
                DomainKind::Box => true,
                DomainKind::Ball { radius } => grid.radius_of(c) < radius,
            })
            .collect();
        if !grid.active.iter().any(|&a| a) {
            return Err(Error::InvalidGrid("ball contains no cell centre".into()));
        }
        for axis in 0..dim {
            let faces = (0..grid.len())
                .filter_map(|c| {
                    let nb = grid.neighbor(c, axis, 1)?;
                    (grid.active[c] && grid.active[nb]).then_some((c, nb))
                })
                .collect();
            grid.open_faces[axis] = faces;
        }
        Ok(Arc::new(grid))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self, axis: usize) -> usize {
        self.n[axis]
    }

    pub fn half_width(&self, axis: usize) -> T {
        self.half_width[axis]
    }

    pub fn kind(&self) -> DomainKind<T> {
        self.kind
    }

    /// Cell width along `axis`.
    pub fn h(&self, axis: usize) -> T {
        T::lit(2.0) * self.half_width[axis] / T::from_usize_lossy(self.n[axis])
    }

    pub fn len(&self) -> usize {
        self.n[0] * self.n[1]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> T {
        (0..self.dim).map(|a| self.h(a)).fold(T::one(), |acc, h| acc * h)
    }

    /// Volume of the bounding box `[-L, L]^d`.
    pub fn box_volume(&self) -> T {
        (0..self.dim)
            .map(|a| T::lit(2.0) * self.half_width[a])
            .fold(T::one(), |acc, w| acc * w)
    }

    pub fn coords(&self, cell: usize) -> [usize; 2] {
        [cell / self.n[1], cell % self.n[1]]
    }

    pub fn index(&self, coords: [usize; 2]) -> usize {
        coords[0] * self.n[1] + coords[1]
    }

    pub fn center(&self, cell: usize) -> [T; 2] {
        let ij = self.coords(cell);
        let mut x = [T::zero(); 2];
        for (axis, xa) in x.iter_mut().enumerate().take(self.dim) {
            let h = self.h(axis);
            *xa = -self.half_width[axis] + (T::from_usize_lossy(ij[axis]) + T::lit(0.5)) * h;
        }
        x
    }

    pub fn radius_of(&self, cell: usize) -> T {
        let x = self.center(cell);
        (x[0] * x[0] + x[1] * x[1]).sqrt()
    }

    pub fn is_active(&self, cell: usize) -> bool {
        self.active[cell]
    }

    pub fn active_mask(&self) -> &[bool] {
        &self.active
    }

    /// Neighbour inside the bounding box, ignoring the ball mask. `side` is `+1` or `-1`.
    pub fn neighbor(&self, cell: usize, axis: usize, side: i32) -> Option<usize> {
        if axis >= self.dim {
            return None;
        }
        let mut ij = self.coords(cell);
        if side > 0 {
            if ij[axis] + 1 >= self.n[axis] {
                return None;
            }
            ij[axis] += 1;
        } else {
            if ij[axis] == 0 {
                return None;
            }
            ij[axis] -= 1;
        }
        Some(self.index(ij))
    }

    /// Faces `(low, high)` along `axis` whose two cells are both active. Mass and
    /// momentum only cross these faces.
    pub fn open_faces(&self, axis: usize) -> &[(usize, usize)] {
        &self.open_faces[axis]
    }

    /// Same geometry (cheap pointer check first).
    pub fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || **self == **other
    }
}

/// One value per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField<T> {
    grid: Arc<Grid<T>>,
    values: Vec<T>,
}

impl<T: Real> ScalarField<T> {
    pub fn new(grid: &Arc<Grid<T>>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(c) = values.iter().position(|v| !v.is_finite()) {
            return Err(invalid("values", format!("non-finite value in cell {c}")));
        }
        Ok(ScalarField {
            grid: Arc::clone(grid),
            values,
        })
    }

    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        ScalarField {
            grid: Arc::clone(grid),
            values: vec![T::zero(); grid.len()],
        }
    }

    /// Samples `f` at the centres of active cells; inactive cells get zero.
    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn([T; 2]) -> T) -> Self {
        let values = (0..grid.len())
            .map(|c| {
                if grid.is_active(c) {
                    f(grid.center(c))
                } else {
                    T::zero()
                }
            })
            .collect();
        ScalarField {
            grid: Arc::clone(grid),
            values,
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        ScalarField {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// `Σ f h^d`.
    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.cell_volume()
    }

    /// Discrete `L¹` distance `Σ |f - g| h^d`.
    pub fn l1_distance(&self, other: &Self) -> Result<T> {
        self.check_grid(other.grid())?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .sum::<T>()
            * self.grid.cell_volume())
    }

    pub fn max(&self) -> T {
        self.values.iter().copied().fold(T::neg_infinity(), T::max)
    }

    pub fn min(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    /// Whole-cell translation by `shift` cells per axis, filling with zeros. Returns
    /// the shifted field and the mass that left the box.
    pub fn shifted(&self, shift: [isize; 2]) -> (Self, T) {
        let g = &self.grid;
        let mut out = vec![T::zero(); g.len()];
        let mut lost = T::zero();
        for c in 0..g.len() {
            let v = self.values[c];
            if v == T::zero() {
                continue;
            }
            let ij = g.coords(c);
            let mut target = [0usize; 2];
            let mut inside = true;
            for axis in 0..2 {
                let s = if axis < g.dim() { shift[axis] } else { 0 };
                let k = ij[axis] as isize + s;
                if k < 0 || k >= g.n(axis) as isize {
                    inside = false;
                } else {
                    target[axis] = k as usize;
                }
            }
            if inside && g.is_active(g.index(target)) {
                out[g.index(target)] = v;
            } else {
                lost = lost + v;
            }
        }
        (
            ScalarField {
                grid: Arc::clone(g),
                values: out,
            },
            lost * g.cell_volume(),
        )
    }

    pub(crate) fn check_grid(&self, grid: &Arc<Grid<T>>) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// `d` values per cell, stored as `[T; 2]` with the unused component zero in 1D.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField<T> {
    grid: Arc<Grid<T>>,
    values: Vec<[T; 2]>,
}

impl<T: Real> VectorField<T> {
    pub fn new(grid: &Arc<Grid<T>>, values: Vec<[T; 2]>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(c) = values
            .iter()
            .position(|v| !v[0].is_finite() || !v[1].is_finite())
        {
            return Err(invalid("values", format!("non-finite vector in cell {c}")));
        }
        let mut field = VectorField {
            grid: Arc::clone(grid),
            values,
        };
        field.clear_unused();
        Ok(field)
    }

    pub fn zeros(grid: &Arc<Grid<T>>) -> Self {
        VectorField {
            grid: Arc::clone(grid),
            values: vec![[T::zero(); 2]; grid.len()],
        }
    }

    /// Samples `f` at active cell centres; inactive cells carry zero.
    pub fn from_fn(grid: &Arc<Grid<T>>, f: impl Fn([T; 2]) -> [T; 2]) -> Self {
        let values = (0..grid.len())
            .map(|c| {
                if grid.is_active(c) {
                    f(grid.center(c))
                } else {
                    [T::zero(); 2]
                }
            })
            .collect();
        let mut field = VectorField {
            grid: Arc::clone(grid),
            values,
        };
        field.clear_unused();
        field
    }

    fn clear_unused(&mut self) {
        if self.grid.dim() == 1 {
            for v in &mut self.values {
                v[1] = T::zero();
            }
        }
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn values(&self) -> &[[T; 2]] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [[T; 2]] {
        &mut self.values
    }

    /// `Σ v h^d` per component.
    pub fn integral(&self) -> [T; 2] {
        let vol = self.grid.cell_volume();
        let mut acc = [T::zero(); 2];
        for v in &self.values {
            acc[0] = acc[0] + v[0];
            acc[1] = acc[1] + v[1];
        }
        [acc[0] * vol, acc[1] * vol]
    }

    pub fn max_abs(&self) -> T {
        self.values
            .iter()
            .fold(T::zero(), |m, v| m.max(v[0].abs()).max(v[1].abs()))
    }

    /// Whole-cell translation, zero fill.
    pub fn shifted(&self, shift: [isize; 2]) -> Self {
        let g = &self.grid;
        let mut out = vec![[T::zero(); 2]; g.len()];
        for c in 0..g.len() {
            let ij = g.coords(c);
            let mut target = [0usize; 2];
            let mut inside = true;
            for axis in 0..2 {
                let s = if axis < g.dim() { shift[axis] } else { 0 };
                let k = ij[axis] as isize + s;
                if k < 0 || k >= g.n(axis) as isize {
                    inside = false;
                } else {
                    target[axis] = k as usize;
                }
            }
            if inside && g.is_active(g.index(target)) {
                out[g.index(target)] = self.values[c];
            }
        }
        VectorField {
            grid: Arc::clone(g),
            values: out,
        }
    }
}

/// Density and momentum at one time instant.
#[derive(Clone, Debug, PartialEq)]
pub struct State<T> {
    pub time: T,
    pub rho: ScalarField<T>,
    pub mom: VectorField<T>,
}

impl<T: Real> State<T> {
    /// Checks `rho >= 0`, shared grid, and zero momentum wherever the density vanishes.
    pub fn new(time: T, rho: ScalarField<T>, mom: VectorField<T>) -> Result<Self> {
        mom.check_grid(rho.grid())?;
        for (c, (&r, m)) in rho.values().iter().zip(mom.values()).enumerate() {
            if r < T::zero() {
                return Err(invalid("rho", format!("negative density {r} in cell {c}")));
            }
            if r == T::zero() && (m[0] != T::zero() || m[1] != T::zero()) {
                return Err(invalid(
                    "mom",
                    format!("nonzero momentum on vacuum cell {c}"),
                ));
            }
        }
        Ok(State { time, rho, mom })
    }

    pub fn at_rest(time: T, rho: ScalarField<T>) -> Result<Self> {
        let mom = VectorField::zeros(rho.grid());
        Self::new(time, rho, mom)
    }

    /// Momentum `rho * u(x)` from a prescribed velocity profile.
    pub fn with_velocity(
        time: T,
        rho: ScalarField<T>,
        velocity: impl Fn([T; 2]) -> [T; 2],
    ) -> Result<Self> {
        let grid = Arc::clone(rho.grid());
        let values = (0..grid.len())
            .map(|c| {
                let r = rho.values()[c];
                if grid.is_active(c) && r > T::zero() {
                    let u = velocity(grid.center(c));
                    [r * u[0], r * u[1]]
                } else {
                    [T::zero(); 2]
                }
            })
            .collect();
        let mom = VectorField::new(&grid, values)?;
        Self::new(time, rho, mom)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        self.rho.grid()
    }

    /// `u = m / rho`, set to zero where `rho < floor`.
    pub fn velocity(&self, floor: T) -> VectorField<T> {
        let values = self
            .rho
            .values()
            .iter()
            .zip(self.mom.values())
            .map(|(&r, m)| {
                if r > floor && r > T::zero() {
                    [m[0] / r, m[1] / r]
                } else {
                    [T::zero(); 2]
                }
            })
            .collect();
        VectorField {
            grid: Arc::clone(self.grid()),
            values,
        }
    }
}

impl<T: Real> VectorField<T> {
    pub(crate) fn check_grid(&self, grid: &Arc<Grid<T>>) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// `Σ rho h^d`.
pub fn total_mass<T: Real>(s: &State<T>) -> T {
    s.rho.integral()
}

/// `Σ x rho h^d`: centre of mass times mass.
pub fn first_moment<T: Real>(s: &State<T>) -> [T; 2] {
    moment_of(&s.rho)
}

pub(crate) fn moment_of<T: Real>(rho: &ScalarField<T>) -> [T; 2] {
    let g = rho.grid();
    let mut acc = [T::zero(); 2];
    for (c, &r) in rho.values().iter().enumerate() {
        if r == T::zero() {
            continue;
        }
        let x = g.center(c);
        acc[0] = acc[0] + x[0] * r;
        acc[1] = acc[1] + x[1] * r;
    }
    let vol = g.cell_volume();
    [acc[0] * vol, acc[1] * vol]
}

/// Total momentum `Σ m h^d`.
pub fn total_momentum<T: Real>(s: &State<T>) -> [T; 2] {
    s.mom.integral()
}

/// Discrete `L^p` norm `(Σ |f|^p h^d)^{1/p}`.
pub fn lp_norm<T: Real>(f: &ScalarField<T>, p: T) -> Result<T> {
    if !(p >= T::one()) || !p.is_finite() {
        return Err(invalid("p", format!("exponent {p} must be finite and >= 1")));
    }
    let vol = f.grid().cell_volume();
    let sum = if p == T::one() {
        f.values().iter().map(|v| v.abs()).sum::<T>()
    } else if p == T::lit(2.0) {
        f.values().iter().map(|&v| v * v).sum::<T>()
    } else {
        f.values().iter().map(|v| v.abs().powf(p)).sum::<T>()
    };
    Ok((sum * vol).powf(p.recip()))
}

/// `L^p` distance between two fields on the same grid.
pub fn lp_distance<T: Real>(f: &ScalarField<T>, g: &ScalarField<T>, p: T) -> Result<T> {
    f.check_grid(g.grid())?;
    let diff = ScalarField {
        grid: Arc::clone(f.grid()),
        values: f
            .values()
            .iter()
            .zip(g.values())
            .map(|(&a, &b)| a - b)
            .collect(),
    };
    lp_norm(&diff, p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn uniform_density_mass_is_exact() {
        let g = Grid::<f64>::line(8, 1.0).unwrap();
        let s = State::at_rest(0.0, ScalarField::from_fn(&g, |_| 1.0)).unwrap();
        assert_eq!(total_mass(&s), 2.0);
        let z = State::at_rest(0.0, ScalarField::zeros(&g)).unwrap();
        assert_eq!(total_mass(&z), 0.0);
    }

    #[test]
    fn indicator_first_moment() {
        let g = Grid::<f64>::line(1000, 2.0).unwrap();
        let h = g.h(0);
        let rho = ScalarField::from_fn(&g, |x| if x[0] > 0.0 && x[0] < 1.0 { 1.0 } else { 0.0 });
        let s = State::at_rest(0.0, rho).unwrap();
        assert!((first_moment(&s)[0] - 0.5).abs() <= h);
    }

    #[test]
    fn symmetric_density_has_zero_moment() {
        let g = Grid::<f64>::square(16, 2.0).unwrap();
        let s = State::at_rest(0.0, ScalarField::from_fn(&g, |x| (-(x[0] * x[0] + 2.0 * x[1] * x[1])).exp()))
            .unwrap();
        let m = first_moment(&s);
        assert_abs_diff_eq!(m[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m[1], 0.0, epsilon = 1e-14);
    }

    #[test]
    fn lp_norm_examples() {
        let g = Grid::<f64>::line(8, 1.0).unwrap();
        let one = ScalarField::from_fn(&g, |_| 1.0);
        assert_abs_diff_eq!(lp_norm(&one, 2.0).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(lp_norm(&ScalarField::zeros(&g), 1.5).unwrap(), 0.0);
        assert!(matches!(lp_norm(&one, 0.5), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn grid_invariants_are_enforced() {
        assert!(Grid::<f64>::line(3, 1.0).is_err());
        assert!(Grid::<f64>::line(8, 0.0).is_err());
        assert!(Grid::<f64>::new(3, 8, 1.0, DomainKind::Box).is_err());
        assert!(Grid::<f64>::new(1, 8, 1.0, DomainKind::Ball { radius: 2.0 }).is_err());
        let ball = Grid::<f64>::new(1, 8, 1.0, DomainKind::Ball { radius: 0.6 }).unwrap();
        let active: Vec<bool> = ball.active_mask().to_vec();
        assert_eq!(active, vec![false, false, true, true, true, true, false, false]);
        assert_eq!(ball.open_faces(0).len(), 3);
    }

    #[test]
    fn state_rejects_momentum_in_vacuum() {
        let g = Grid::<f64>::line(4, 1.0).unwrap();
        let rho = ScalarField::new(&g, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let mom = VectorField::new(&g, vec![[1.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(State::new(0.0, rho, mom).is_err());
    }

    #[test]
    fn shifting_conserves_mass_away_from_walls() {
        let g = Grid::<f64>::line(32, 4.0).unwrap();
        let rho = ScalarField::from_fn(&g, |x| (1.0 - x[0] * x[0]).max(0.0));
        let (moved, lost) = rho.shifted([3, 0]);
        assert_eq!(lost, 0.0);
        assert_abs_diff_eq!(moved.integral(), rho.integral(), epsilon = 1e-15);
    }
}
