//! Discrete convolutions `(k * f)(x_i) = Σ_j k(x_i - x_j) f(x_j) h^d`.
//!
//! Densities are extended by zero outside the grid: kernel samples cover every
//! displacement between two cells and are laid out circularly on a grid of twice
//! the size per axis, so FFT products never wrap around.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fields::{Grid, ScalarField, State, VectorField};
use crate::potentials::{AlignmentKernel, KernelKind, KernelSpec, Potential};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvolutionMethod {
    /// Zero-padded FFT product, `O(N^d log N)`.
    Spectral,
    /// Explicit double sum, `O(N^{2d})`. Reference implementation.
    Direct,
}

/// Which kernel a scalar convolution uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channel {
    /// Interaction potential `K`.
    Interaction,
    /// Alignment weight `ψ`.
    Alignment,
}

struct Samples<T> {
    real: Vec<T>,
    spectrum: Option<Vec<Complex<T>>>,
    zero: bool,
}

struct Transforms<T: Real> {
    forward: [Arc<dyn Fft<T>>; 2],
    inverse: [Arc<dyn Fft<T>>; 2],
}

/// Precomputed kernel samples for one grid. Immutable after construction.
pub struct ConvolutionPlan<T: Real> {
    grid: Arc<Grid<T>>,
    method: ConvolutionMethod,
    padded: [usize; 2],
    kernel: KernelSpec<T>,
    psi: AlignmentKernel<T>,
    potential: Samples<T>,
    gradient: [Samples<T>; 2],
    alignment: Samples<T>,
    transforms: Option<Transforms<T>>,
}

impl<T: Real> ConvolutionPlan<T> {
    /// Power-law kernels without a core are capped at half a cell width first.
    pub fn new(
        grid: &Arc<Grid<T>>,
        kernel: &KernelSpec<T>,
        psi: &AlignmentKernel<T>,
        method: ConvolutionMethod,
    ) -> Result<Self> {
        kernel.validate()?;
        psi.validate()?;
        let mut kernel = *kernel;
        if let KernelKind::PowerLaw { core_radius, .. } = kernel.kind {
            if core_radius == T::zero() {
                kernel = kernel.mollified_for(grid);
            }
        }
        let dim = grid.dim();
        let padded = [
            2 * grid.n(0),
            if dim == 2 { 2 * grid.n(1) } else { 1 },
        ];
        let total = padded[0] * padded[1];
        let h = [grid.h(0), if dim == 2 { grid.h(1) } else { T::zero() }];

        let mut pot = vec![T::zero(); total];
        let mut grad = [vec![T::zero(); total], vec![T::zero(); total]];
        let mut ali = vec![T::zero(); total];
        let offsets = |axis: usize| -> Vec<isize> {
            let n = grid.n(axis) as isize;
            if axis < dim {
                (-(n - 1)..n).collect()
            } else {
                vec![0]
            }
        };
        let kernel_zero = kernel.is_zero();
        let psi_zero = matches!(psi, AlignmentKernel::Zero) || psi.sup() == T::zero();
        for di in offsets(0) {
            for dj in offsets(1) {
                let x = [
                    T::lit(di as f64) * h[0],
                    T::lit(dj as f64) * h[1],
                ];
                let idx = wrap(di, padded[0]) * padded[1] + wrap(dj, padded[1]);
                if !kernel_zero {
                    pot[idx] = kernel.value(x)?;
                    let g = kernel.gradient(x)?;
                    grad[0][idx] = g[0];
                    grad[1][idx] = g[1];
                }
                if !psi_zero {
                    ali[idx] = psi.eval(x);
                }
            }
        }

        let transforms = match method {
            ConvolutionMethod::Direct => None,
            ConvolutionMethod::Spectral => {
                let mut planner = FftPlanner::new();
                Some(Transforms {
                    forward: [
                        planner.plan_fft_forward(padded[0]),
                        planner.plan_fft_forward(padded[1]),
                    ],
                    inverse: [
                        planner.plan_fft_inverse(padded[0]),
                        planner.plan_fft_inverse(padded[1]),
                    ],
                })
            }
        };

        let [gx, gy] = grad;
        let mut plan = ConvolutionPlan {
            grid: Arc::clone(grid),
            method,
            padded,
            kernel,
            psi: *psi,
            potential: Samples {
                real: pot,
                spectrum: None,
                zero: kernel_zero,
            },
            gradient: [
                Samples {
                    real: gx,
                    spectrum: None,
                    zero: kernel_zero,
                },
                Samples {
                    real: gy,
                    spectrum: None,
                    zero: kernel_zero || dim == 1,
                },
            ],
            alignment: Samples {
                real: ali,
                spectrum: None,
                zero: psi_zero,
            },
            transforms,
        };
        if plan.transforms.is_some() {
            let spectrum = |plan: &Self, s: &Samples<T>| -> Option<Vec<Complex<T>>> {
                (!s.zero).then(|| {
                    let mut buf: Vec<Complex<T>> =
                        s.real.iter().map(|&v| Complex::new(v, T::zero())).collect();
                    plan.fft2(&mut buf, true);
                    buf
                })
            };
            plan.potential.spectrum = spectrum(&plan, &plan.potential);
            plan.gradient[0].spectrum = spectrum(&plan, &plan.gradient[0]);
            plan.gradient[1].spectrum = spectrum(&plan, &plan.gradient[1]);
            plan.alignment.spectrum = spectrum(&plan, &plan.alignment);
        }
        Ok(plan)
    }

    pub fn grid(&self) -> &Arc<Grid<T>> {
        &self.grid
    }

    pub fn method(&self) -> ConvolutionMethod {
        self.method
    }

    /// Kernel actually sampled (after mollification).
    pub fn kernel(&self) -> &KernelSpec<T> {
        &self.kernel
    }

    pub fn alignment_kernel(&self) -> &AlignmentKernel<T> {
        &self.psi
    }

    pub fn has_alignment(&self) -> bool {
        !self.alignment.zero
    }

    fn fft2(&self, buf: &mut [Complex<T>], forward: bool) {
        let tr = self.transforms.as_ref().expect("spectral plan");
        let [p0, p1] = self.padded;
        let plans = if forward { &tr.forward } else { &tr.inverse };
        if p1 > 1 {
            // rows are contiguous
            plans[1].process(buf);
        }
        let mut column = vec![Complex::new(T::zero(), T::zero()); p0];
        for j in 0..p1 {
            for i in 0..p0 {
                column[i] = buf[i * p1 + j];
            }
            plans[0].process(&mut column);
            for i in 0..p0 {
                buf[i * p1 + j] = column[i];
            }
        }
    }

    fn apply(&self, samples: &Samples<T>, f: &[T]) -> Vec<T> {
        let grid = &self.grid;
        let n = grid.len();
        if samples.zero {
            return vec![T::zero(); n];
        }
        let vol = grid.cell_volume();
        let [p0, p1] = self.padded;
        match self.method {
            ConvolutionMethod::Direct => {
                let mut out = vec![T::zero(); n];
                for (i, o) in out.iter_mut().enumerate() {
                    let [ia, ib] = grid.coords(i);
                    let mut acc = T::zero();
                    for (j, &fj) in f.iter().enumerate() {
                        if fj == T::zero() {
                            continue;
                        }
                        let [ja, jb] = grid.coords(j);
                        let idx = wrap(ia as isize - ja as isize, p0) * p1
                            + wrap(ib as isize - jb as isize, p1);
                        acc = acc + samples.real[idx] * fj;
                    }
                    *o = acc * vol;
                }
                out
            }
            ConvolutionMethod::Spectral => {
                let spectrum = samples.spectrum.as_ref().expect("spectrum computed");
                let mut buf = vec![Complex::new(T::zero(), T::zero()); p0 * p1];
                for (c, &v) in f.iter().enumerate() {
                    let [a, b] = grid.coords(c);
                    buf[a * p1 + b] = Complex::new(v, T::zero());
                }
                self.fft2(&mut buf, true);
                for (b, s) in buf.iter_mut().zip(spectrum) {
                    *b = *b * *s;
                }
                self.fft2(&mut buf, false);
                let scale = vol / T::from_usize_lossy(p0 * p1);
                (0..n)
                    .map(|c| {
                        let [a, b] = grid.coords(c);
                        buf[a * p1 + b].re * scale
                    })
                    .collect()
            }
        }
    }

    fn check(&self, grid: &Arc<Grid<T>>) -> Result<()> {
        if self.grid.same_as(grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `kernel * f` evaluated at cell centres.
    pub fn conv_scalar(&self, f: &ScalarField<T>, channel: Channel) -> Result<ScalarField<T>> {
        self.check(f.grid())?;
        let samples = match channel {
            Channel::Interaction => &self.potential,
            Channel::Alignment => &self.alignment,
        };
        ScalarField::new(&self.grid, self.apply(samples, f.values()))
    }

    /// `∇K * rho` per component, from analytic gradient samples.
    pub fn conv_force(&self, rho: &ScalarField<T>) -> Result<VectorField<T>> {
        self.check(rho.grid())?;
        let gx = self.apply(&self.gradient[0], rho.values());
        let gy = self.apply(&self.gradient[1], rho.values());
        VectorField::new(
            &self.grid,
            gx.into_iter().zip(gy).map(|(a, b)| [a, b]).collect(),
        )
    }

    /// Alignment force `rho (ψ * (rho u)) - rho u (ψ * rho)`.
    pub fn conv_alignment(&self, s: &State<T>) -> Result<VectorField<T>> {
        self.check(s.grid())?;
        if self.alignment.zero {
            return Ok(VectorField::zeros(&self.grid));
        }
        let rho = s.rho.values();
        let dim = self.grid.dim();
        let psi_rho = self.apply(&self.alignment, rho);
        let mut out = vec![[T::zero(); 2]; self.grid.len()];
        for k in 0..dim {
            let mk: Vec<T> = s.mom.values().iter().map(|m| m[k]).collect();
            let psi_m = self.apply(&self.alignment, &mk);
            for c in 0..out.len() {
                out[c][k] = rho[c] * psi_m[c] - mk[c] * psi_rho[c];
            }
        }
        VectorField::new(&self.grid, out)
    }
}

fn wrap(offset: isize, period: usize) -> usize {
    offset.rem_euclid(period as isize) as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::State;

    fn plan(grid: &Arc<Grid<f64>>, k: KernelSpec<f64>, method: ConvolutionMethod) -> ConvolutionPlan<f64> {
        ConvolutionPlan::new(
            grid,
            &k,
            &AlignmentKernel::Gaussian {
                strength: 1.0,
                length: 1.0,
            },
            method,
        )
        .unwrap()
    }

    #[test]
    fn delta_reproduces_kernel() {
        let g = Grid::<f64>::line(16, 2.0).unwrap();
        let k = KernelSpec::gaussian_attractive(1.0);
        let p = plan(&g, k, ConvolutionMethod::Spectral);
        let mut f = ScalarField::zeros(&g);
        let c = 8;
        f.values_mut()[c] = 1.0 / g.cell_volume();
        let out = p.conv_scalar(&f, Channel::Interaction).unwrap();
        for i in 0..g.len() {
            let dx = g.center(i)[0] - g.center(c)[0];
            assert!((out.values()[i] - k.value([dx, 0.0]).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_input_gives_symmetric_output() {
        let g = Grid::<f64>::line(32, 3.0).unwrap();
        let p = plan(&g, KernelSpec::gaussian_kai(1.0), ConvolutionMethod::Spectral);
        let f = ScalarField::from_fn(&g, |x| (1.0 - x[0] * x[0]).max(0.0));
        let out = p.conv_scalar(&f, Channel::Interaction).unwrap();
        let v = out.values();
        for i in 0..32 {
            assert!((v[i] - v[31 - i]).abs() < 1e-13);
        }
    }

    #[test]
    fn two_point_masses_attract() {
        let g = Grid::<f64>::line(32, 4.0).unwrap();
        let p = plan(&g, KernelSpec::gaussian_attractive(1.0), ConvolutionMethod::Direct);
        let mut rho = ScalarField::zeros(&g);
        rho.values_mut()[12] = 1.0;
        rho.values_mut()[19] = 1.0;
        let f = p.conv_force(&rho).unwrap();
        // momentum equation force is -(∇K * rho) rho
        assert!(-f.values()[12][0] > 0.0);
        assert!(-f.values()[19][0] < 0.0);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let g = Grid::<f64>::line(16, 2.0).unwrap();
        let other = Grid::<f64>::line(16, 3.0).unwrap();
        let p = plan(&g, KernelSpec::gaussian_attractive(1.0), ConvolutionMethod::Direct);
        assert!(matches!(
            p.conv_scalar(&ScalarField::zeros(&other), Channel::Interaction),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn constant_velocity_has_no_alignment_force() {
        let g = Grid::<f64>::square(12, 2.0).unwrap();
        let p = plan(&g, KernelSpec::zero(), ConvolutionMethod::Spectral);
        let rho = ScalarField::from_fn(&g, |x| (-(x[0] * x[0] + x[1] * x[1])).exp());
        let s = State::with_velocity(0.0, rho, |_| [0.3, -0.2]).unwrap();
        let a = p.conv_alignment(&s).unwrap();
        assert!(a.max_abs() < 1e-14);
    }

    #[test]
    fn zero_weight_gives_zero_alignment() {
        let g = Grid::<f64>::line(16, 2.0).unwrap();
        let p = ConvolutionPlan::new(
            &g,
            &KernelSpec::zero(),
            &AlignmentKernel::Zero,
            ConvolutionMethod::Spectral,
        )
        .unwrap();
        let rho = ScalarField::from_fn(&g, |x| 1.0 + x[0] * x[0]);
        let s = State::with_velocity(0.0, rho, |x| [x[0], 0.0]).unwrap();
        assert_eq!(p.conv_alignment(&s).unwrap().max_abs(), 0.0);
    }
}
