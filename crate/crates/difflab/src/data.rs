//! Initial conditions and reference trajectories.

use std::f64::consts::PI;

use anyhow::{ensure, Context, Result};
use difflab_core::linalg::{DenseMatrix, LuFactorization};
use difflab_core::operators::{stencil, Grid, Physics};
use difflab_core::scalar::convert;
use difflab_core::solvers::{solve, SolveConfig, SolverKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Number of amplitudes a Fourier initial condition with `n_modes` modes uses.
pub fn fourier_amplitude_count(dim: usize, n_modes: usize) -> usize {
    n_modes << dim
}

/// `Σ_n Σ_{s ∈ {sin,cos}^dim} a · Π_axis s(2nπ x_axis)` at the grid nodes.
///
/// Amplitudes are ordered by mode, then by the sin/cos pattern with bit `a`
/// set meaning cosine along axis `a`. In 1D that is `[a₁ (sin), b₁ (cos), a₂, …]`.
pub fn fourier_field(grid: &Grid, n_modes: usize, amplitudes: &[f64]) -> Vec<f64> {
    let dim = grid.dim();
    let combos = 1usize << dim;
    assert_eq!(amplitudes.len(), n_modes * combos);
    let n = grid.n();
    let mut out = vec![0.0; grid.points()];
    // tables[mode][axis-node] = (sin, cos)
    let tables: Vec<Vec<(f64, f64)>> = (1..=n_modes)
        .map(|m| (0..n).map(|j| (2.0 * m as f64 * PI * grid.node(j)).sin_cos()).collect())
        .collect();
    for (p, o) in out.iter_mut().enumerate() {
        let mut coord = [0usize; 3];
        let mut rem = p;
        for a in (0..dim).rev() {
            coord[a] = rem % n;
            rem /= n;
        }
        let mut v = 0.0;
        for (m, table) in tables.iter().enumerate() {
            for c in 0..combos {
                let mut term = amplitudes[m * combos + c];
                for (a, &j) in coord.iter().enumerate().take(dim) {
                    let (s, co) = table[j];
                    term *= if c >> a & 1 == 1 { co } else { s };
                }
                v += term;
            }
        }
        *o = v;
    }
    out
}

/// Fourier initial condition with amplitudes drawn from `U(-1, 1)`.
pub fn generate_fourier_ic(grid: &Grid, n_modes: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amps: Vec<f64> = (0..fourier_amplitude_count(grid.dim(), n_modes)).map(|_| rng.random_range(-1.0..1.0)).collect();
    fourier_field(grid, n_modes, &amps)
}

/// Zeroes every Fourier mode of a periodic 2D field with radial wavenumber
/// above `cutoff`.
pub fn low_pass_2d(n: usize, field: &mut [f64], cutoff: f64) {
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf: Vec<Complex<f64>> = field.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft_2d(n, &mut buf, &*fwd);
    for i in 0..n {
        for j in 0..n {
            let k = |q: usize| if q <= n / 2 { q as f64 } else { q as f64 - n as f64 };
            if (k(i).powi(2) + k(j).powi(2)).sqrt() > cutoff {
                buf[i * n + j] = Complex::new(0.0, 0.0);
            }
        }
    }
    fft_2d(n, &mut buf, &*inv);
    let norm = (n * n) as f64;
    for (f, c) in field.iter_mut().zip(&buf) {
        *f = c.re / norm;
    }
}

fn fft_2d(n: usize, buf: &mut [Complex<f64>], fft: &dyn rustfft::Fft<f64>) {
    for row in buf.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for j in 0..n {
        for i in 0..n {
            col[i] = buf[i * n + j];
        }
        fft.process(&mut col);
        for i in 0..n {
            buf[i * n + j] = col[i];
        }
    }
}

/// Shifts and scales to zero mean and unit (population) standard deviation.
pub fn normalize(field: &mut [f64]) {
    let n = field.len() as f64;
    let mean = field.iter().sum::<f64>() / n;
    let var = field.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    for v in field.iter_mut() {
        *v = (*v - mean) / if sd > 0.0 { sd } else { 1.0 };
    }
}

/// Discrete divergence `F₁u₁ + F₂u₂` at cell centers.
pub fn divergence(grid: &Grid, u1: &[f64], u2: &[f64]) -> Vec<f64> {
    let m = grid.points();
    let mut d = vec![0.0; m];
    let mut t = vec![0.0; m];
    stencil::forward_diff(grid, 0, u1, &mut d);
    stencil::forward_diff(grid, 1, u2, &mut t);
    for (a, b) in d.iter_mut().zip(&t) {
        *a += b;
    }
    d
}

/// Removes the gradient part of staggered velocities: solves
/// `(F₁B₁ + F₂B₂) φ = div u` with `Σφ = 0` and subtracts `Bφ`.
#[derive(Debug)]
pub struct Projector {
    grid: Grid,
    lu: LuFactorization,
}

impl Projector {
    pub fn new(grid: &Grid) -> Result<Self> {
        ensure!(grid.is_staggered(), "projection needs a staggered grid");
        let m = grid.points();
        let mut a = DenseMatrix::<f64>::from_operator(m, |phi, out| {
            let mut g1 = vec![0.0; m];
            let mut g2 = vec![0.0; m];
            stencil::backward_diff(grid, 0, phi, &mut g1);
            stencil::backward_diff(grid, 1, phi, &mut g2);
            out.copy_from_slice(&divergence(grid, &g1, &g2));
        });
        let mut rows: Vec<Vec<f64>> = (0..m).map(|i| a.row(i).to_vec()).collect();
        rows[m - 1] = vec![1.0; m];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        a = DenseMatrix::from_rows(&refs);
        let lu = LuFactorization::new(&a).context("pressure Poisson factorization")?;
        Ok(Self { grid: *grid, lu })
    }

    pub fn project(&self, u1: &mut [f64], u2: &mut [f64]) {
        let m = self.grid.points();
        let mut rhs = divergence(&self.grid, u1, u2);
        rhs[m - 1] = 0.0;
        let phi = self.lu.solve_f64(&rhs);
        let mut g = vec![0.0; m];
        stencil::backward_diff(&self.grid, 0, &phi, &mut g);
        u1.iter_mut().zip(&g).for_each(|(u, g)| *u -= g);
        stencil::backward_diff(&self.grid, 1, &phi, &mut g);
        u2.iter_mut().zip(&g).for_each(|(u, g)| *u -= g);
    }
}

/// Divergence-free random velocity state `(u₁, u₂, p = 0)` on a staggered grid:
/// standard normal noise, radial low-pass at a quarter of the Nyquist
/// wavenumber, per-component normalization, projection.
pub fn generate_ns_ic(grid: &Grid, projector: &Projector, seed: u64) -> Vec<f64> {
    let n = grid.n();
    let m = grid.points();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = vec![0.0; 3 * m];
    for c in 0..2 {
        let f = &mut state[c * m..(c + 1) * m];
        f.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        low_pass_2d(n, f, n as f64 / 8.0);
        normalize(f);
    }
    let (u1, rest) = state.split_at_mut(m);
    projector.project(u1, &mut rest[..m]);
    state
}

/// Face-average restriction of a staggered state onto the grid with half
/// the resolution. Preserves discrete divergence-freedom.
pub fn restrict_staggered(fine: &Grid, state: &[f64]) -> Vec<f64> {
    let nf = fine.n();
    let nc = nf / 2;
    let (mf, mc) = (nf * nf, nc * nc);
    let at = |c: usize, i: usize, j: usize| state[c * mf + (i % nf) * nf + (j % nf)];
    let mut out = vec![0.0; 3 * mc];
    for i in 0..nc {
        for j in 0..nc {
            let k = i * nc + j;
            out[k] = 0.5 * (at(0, 2 * i, 2 * j) + at(0, 2 * i, 2 * j + 1));
            out[mc + k] = 0.5 * (at(1, 2 * i, 2 * j) + at(1, 2 * i + 1, 2 * j));
            out[2 * mc + k] =
                0.25 * (at(2, 2 * i, 2 * j) + at(2, 2 * i + 1, 2 * j) + at(2, 2 * i, 2 * j + 1) + at(2, 2 * i + 1, 2 * j + 1));
        }
    }
    out
}

/// Piecewise-constant prolongation, the counterpart of [`restrict_staggered`].
pub fn prolong_staggered(coarse: &Grid, state: &[f64]) -> Vec<f64> {
    let nc = coarse.n();
    let nf = 2 * nc;
    let (mf, mc) = (nf * nf, nc * nc);
    let mut out = vec![0.0; 3 * mf];
    for c in 0..3 {
        for i in 0..nf {
            for j in 0..nf {
                out[c * mf + i * nf + j] = state[c * mc + (i / 2) * nc + j / 2];
            }
        }
    }
    out
}

/// How reference steps are computed.
#[derive(Debug)]
pub enum ReferenceStepper {
    /// LU factorization reused across steps (state-independent matrix).
    Factored(LuFactorization),
    /// Fresh dense factorization per step.
    Direct,
    /// Restarted GMRES to a tight tolerance.
    Krylov { tolerance: f64, restart: usize },
}

impl ReferenceStepper {
    /// Picks a stepper for `physics`: a shared factorization for heat, a
    /// direct solve per step for Burgers and GMRES for Navier-Stokes.
    pub fn for_physics(physics: &Physics, krylov_restart: usize) -> Result<Self> {
        Ok(match physics {
            Physics::Heat { grid, .. } => {
                let p = physics.assemble::<f64>(&vec![0.0; grid.dofs()])?;
                Self::Factored(LuFactorization::new(&p.to_dense())?)
            }
            Physics::Burgers { .. } => Self::Direct,
            Physics::NavierStokes { .. } => Self::Krylov { tolerance: 1e-10, restart: krylov_restart },
        })
    }

    pub fn step(&self, physics: &Physics, state: &[f64]) -> Result<Vec<f64>> {
        let p = physics.assemble::<f64>(state)?;
        Ok(match self {
            Self::Factored(lu) => lu.solve_f64(&p.rhs()),
            Self::Direct => difflab_core::solvers::direct_solve(&p)?,
            Self::Krylov { tolerance, restart } => {
                let cfg = SolveConfig { max_iterations: 100_000, tolerance: *tolerance, gmres_restart: *restart, store_iterates: false };
                let r = solve(SolverKind::Gmres, &p, &cfg)?;
                ensure!(r.converged, "reference GMRES did not converge");
                r.solution
            }
        })
    }

    pub fn trajectory(&self, physics: &Physics, u0: Vec<f64>, steps: usize) -> Result<Vec<Vec<f64>>> {
        let mut traj = Vec::with_capacity(steps + 1);
        traj.push(u0);
        for _ in 0..steps {
            let next = self.step(physics, traj.last().unwrap())?;
            traj.push(next);
        }
        Ok(traj)
    }
}

/// Trajectories `[sample][time][dof]` with a train/validation split.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Dataset<T> {
    pub trajectories: Vec<Vec<Vec<T>>>,
    pub train: usize,
    pub seed: u64,
}

impl<T: Copy> Dataset<T> {
    pub fn train_set(&self) -> &[Vec<Vec<T>>] {
        &self.trajectories[..self.train]
    }

    pub fn val_set(&self) -> &[Vec<Vec<T>>] {
        &self.trajectories[self.train..]
    }
}

impl Dataset<f64> {
    pub fn convert<U: difflab_core::Real>(&self) -> Dataset<U> {
        Dataset {
            trajectories: self.trajectories.iter().map(|t| t.iter().map(|s| convert(s)).collect()).collect(),
            train: self.train,
            seed: self.seed,
        }
    }
}

/// Per-sample seed derived from the dataset seed.
pub fn sample_seed(seed: u64, index: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_amplitudes_give_zero_field() {
        let g = Grid::dirichlet(2, 6).unwrap();
        assert!(fourier_field(&g, 3, &[0.0; 12]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_sine_mode() {
        let g = Grid::dirichlet(1, 30).unwrap();
        let mut a = vec![0.0; 10];
        a[0] = 1.0;
        let f = fourier_field(&g, 5, &a);
        for (j, v) in f.iter().enumerate() {
            assert_abs_diff_eq!(*v, (2.0 * PI * (j + 1) as f64 / 31.0).sin(), epsilon = 1e-14);
        }
    }

    #[test]
    fn product_form_in_2d() {
        let g = Grid::dirichlet(2, 5).unwrap();
        // cos along axis 0, sin along axis 1
        let f = fourier_field(&g, 1, &[0.0, 1.0, 0.0, 0.0]);
        let (x, y) = (g.node(2), g.node(3));
        assert_abs_diff_eq!(f[2 * 5 + 3], (2.0 * PI * x).cos() * (2.0 * PI * y).sin(), epsilon = 1e-14);
    }

    #[test]
    fn ic_is_seeded() {
        let g = Grid::periodic(1, 16).unwrap();
        assert_eq!(generate_fourier_ic(&g, 20, 4), generate_fourier_ic(&g, 20, 4));
        assert_ne!(generate_fourier_ic(&g, 20, 4), generate_fourier_ic(&g, 20, 5));
    }

    #[test]
    fn low_pass_keeps_smooth_modes() {
        let n = 16;
        let smooth: Vec<f64> = (0..n * n).map(|p| (2.0 * PI * (p / n) as f64 / n as f64).cos()).collect();
        let mut f = smooth.clone();
        low_pass_2d(n, &mut f, 2.0);
        for (a, b) in f.iter().zip(&smooth) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        let mut rough: Vec<f64> = (0..n * n).map(|p| if (p / n + p % n) % 2 == 0 { 1.0 } else { -1.0 }).collect();
        low_pass_2d(n, &mut rough, 2.0);
        assert!(rough.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn ns_ic_is_divergence_free() {
        let g = Grid::staggered(16).unwrap();
        let proj = Projector::new(&g).unwrap();
        let s = generate_ns_ic(&g, &proj, 7);
        let m = g.points();
        let d = divergence(&g, &s[..m], &s[m..2 * m]);
        assert!(d.iter().all(|v| v.abs() < 1e-10));
        let c = restrict_staggered(&g, &s);
        let gc = Grid::staggered(8).unwrap();
        let dc = divergence(&gc, &c[..16 * 4], &c[64..128]);
        assert!(dc.iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn projection_is_idempotent() {
        let g = Grid::staggered(8).unwrap();
        let proj = Projector::new(&g).unwrap();
        let s = generate_ns_ic(&g, &proj, 1);
        let (mut u1, mut u2) = (s[..64].to_vec(), s[64..128].to_vec());
        proj.project(&mut u1, &mut u2);
        for (a, b) in u1.iter().chain(&u2).zip(&s[..128]) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalization() {
        let mut f = vec![1.0, 2.0, 3.0, 6.0];
        normalize(&mut f);
        assert_abs_diff_eq!(f.iter().sum::<f64>(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.iter().map(|v| v * v).sum::<f64>() / 4.0, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn restriction_round_trip_on_coarse_fields() {
        let gc = Grid::staggered(4).unwrap();
        let s: Vec<f64> = (0..48).map(|i| i as f64).collect();
        let up = prolong_staggered(&gc, &s);
        assert_eq!(restrict_staggered(&Grid::staggered(8).unwrap(), &up), s);
    }

    #[test]
    fn heat_reference_satisfies_system() {
        let grid = Grid::dirichlet(1, 12).unwrap();
        let physics = Physics::Heat { grid, nu: 0.001, dt: 1.0 };
        let st = ReferenceStepper::for_physics(&physics, 8).unwrap();
        let u0 = generate_fourier_ic(&grid, 5, 0);
        let u1 = st.step(&physics, &u0).unwrap();
        let p = physics.assemble::<f64>(&u0).unwrap();
        assert!(difflab_core::solvers::relative_residual(&p, &u1).unwrap() < 1e-12);
    }
}
