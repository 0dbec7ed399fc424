//! The linear stochastic heat equation on a square with homogeneous
//! Dirichlet conditions.
//!
//! The scheme is
//! `(M/Δt + A) u_{n+1} = M u_n / Δt + (σ/Δt) (ΔW_n, ψ)`,
//! solved with one Cholesky factorization reused every step. The exact
//! variance `Γ_t = E‖u_t‖²` is available as a modal series, which the Monte
//! Carlo estimator is compared against.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{DofKind, DofLayout, FemOperators};
use crate::linalg::EnvelopeCholesky;
use crate::mesh::{generate_square_grid, Mesh};
use crate::noise::{
    loglog_slope, mean_and_stderr, project_noise, separable_profile, Discretization, FeField, Kernel, NoiseFactor,
    NoiseSites,
};
use crate::quadrature::{composite_interval, TriangleRule};
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSchemeConfig {
    pub sigma: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub kernel: Kernel,
    pub discretization: Discretization,
    pub seed: u64,
}

impl LinearSchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        self.kernel.validate()
    }
}

/// Factorized `M/Δt + A` for a Dirichlet layout.
#[derive(Debug, Clone)]
pub struct LinearStepper {
    pub ops: FemOperators,
    pub dt: f64,
    pub sigma: f64,
    solver: EnvelopeCholesky,
}

impl LinearStepper {
    pub fn new(ops: FemOperators, dt: f64, sigma: f64) -> Result<Self> {
        if ops.layout.kind != DofKind::Dirichlet {
            return Err(Error::InvalidParameter("the heat scheme needs a Dirichlet layout".into()));
        }
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        let system = ops.mass.linear_combination(1.0 / dt, &ops.stiffness, 1.0);
        let solver = EnvelopeCholesky::factor(&system)?;
        Ok(LinearStepper { ops, dt, sigma, solver })
    }

    /// One step driven by the noise increment `ΔW` over `[t_n, t_{n+1}]`.
    pub fn step(&self, u: &[f64], increment: &FeField) -> Result<Vec<f64>> {
        let load = increment.load(&self.ops)?;
        self.step_with_load(u, &load)
    }

    /// One step given the load vector `(ΔW, ψ)` directly.
    pub fn step_with_load(&self, u: &[f64], load: &[f64]) -> Result<Vec<f64>> {
        let n = self.ops.num_dofs();
        if u.len() != n {
            return Err(Error::Dimension { expected: n, got: u.len() });
        }
        if load.len() != n {
            return Err(Error::Dimension { expected: n, got: load.len() });
        }
        let mut rhs = self.ops.mass.mul_vec(u);
        let (a, b) = (1.0 / self.dt, self.sigma / self.dt);
        for (r, l) in rhs.iter_mut().zip(load) {
            *r = a * *r + b * l;
        }
        Ok(self.solver.solve(&rhs))
    }
}

/// Convenience form of [`LinearStepper::step`].
pub fn step_linear(u: &[f64], increment: &FeField, stepper: &LinearStepper) -> Result<Vec<f64>> {
    stepper.step(u, increment)
}

/// Default number of modes per axis in the variance series.
pub const DEFAULT_K_MAX: usize = 64;

/// `Γ_t = σ² Σ_{k,p} (1 - e^{-2 λ_kp t}) / (2 λ_kp) (Q e_kp, e_kp)` on `(0, l)²`
/// with `e_kp = (2/l) sin(kπx/l) sin(pπy/l)` and `λ_kp = π²(k² + p²)/l²`.
#[derive(Debug, Clone)]
pub struct GammaSeries {
    pub l: f64,
    pub sigma: f64,
    pub kernel: Kernel,
    pub k_max: usize,
    /// `(λ_kp, (Q e_kp, e_kp))`, zero weights dropped
    modes: Vec<(f64, f64)>,
}

impl GammaSeries {
    pub fn new(l: f64, sigma: f64, kernel: Kernel, k_max: usize) -> Result<Self> {
        if !(l > 0.0) || k_max == 0 {
            return Err(Error::InvalidParameter("need l > 0 and k_max >= 1".into()));
        }
        kernel.validate()?;
        let mut modes = Vec::new();
        match kernel {
            Kernel::Gaussian { .. } | Kernel::ScaledGaussian { .. } => {
                let one_d: Vec<f64> = (1..=k_max).map(|k| gaussian_axis_integral(&kernel, k, l)).collect();
                let scale = gaussian_amplitude(&kernel) * 4.0 / (l * l);
                for k in 1..=k_max {
                    for p in 1..=k_max {
                        let w = scale * one_d[k - 1] * one_d[p - 1];
                        modes.push((eigenvalue(k, p, l), w));
                    }
                }
            }
            Kernel::Separable { .. } => {
                for k in 1..=k_max {
                    for p in 1..=k_max {
                        let w = modal_weight(&kernel, k, p, l)?;
                        if w != 0.0 {
                            modes.push((eigenvalue(k, p, l), w));
                        }
                    }
                }
            }
        }
        Ok(GammaSeries { l, sigma, kernel, k_max, modes })
    }

    pub fn gamma(&self, t: f64) -> f64 {
        gamma_analytic(self, t)
    }
}

/// `λ_kp = π² (k² + p²) / l²`
pub fn eigenvalue(k: usize, p: usize, l: f64) -> f64 {
    PI * PI * ((k * k + p * p) as f64) / (l * l)
}

pub fn gamma_analytic(series: &GammaSeries, t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let s: f64 = series.modes.iter().map(|&(lam, w)| -(-2.0 * lam * t).exp_m1() / (2.0 * lam) * w).sum();
    series.sigma * series.sigma * s
}

fn gaussian_amplitude(kernel: &Kernel) -> f64 {
    match *kernel {
        Kernel::Gaussian { xi } => 1.0 / (4.0 * xi * xi),
        Kernel::ScaledGaussian { a, xi, .. } => a / (xi * xi),
        Kernel::Separable { .. } => unreachable!(),
    }
}

fn gaussian_rate(kernel: &Kernel) -> f64 {
    match *kernel {
        Kernel::Gaussian { xi } => PI / (4.0 * xi * xi),
        Kernel::ScaledGaussian { b, xi, .. } => b / (xi * xi),
        Kernel::Separable { .. } => unreachable!(),
    }
}

/// `∫₀ˡ∫₀ˡ exp(-c (s-t)²) sin(ωs) sin(ωt) ds dt` with `ω = kπ/l`, reduced to
/// `∫₀ˡ exp(-c r²) ((l - r) cos(ωr) + sin(ωr)/ω) dr` and evaluated by
/// composite Gauss-Legendre on a doubling panel grid until successive values
/// agree to `1e-10` relative (or to an absolute floor far below the leading modes).
fn gaussian_axis_integral(kernel: &Kernel, k: usize, l: f64) -> f64 {
    let c = gaussian_rate(kernel);
    let omega = k as f64 * PI / l;
    let floor = 1e-16 * l * l;
    let eval = |panels: usize| {
        let (r, w) = composite_interval(0.0, l, panels, 8);
        r.iter()
            .zip(&w)
            .map(|(&r, &w)| w * (-c * r * r).exp() * ((l - r) * (omega * r).cos() + (omega * r).sin() / omega))
            .sum::<f64>()
    };
    let mut panels = (2.0 * k as f64).max(l * c.sqrt()).ceil() as usize + 2;
    let mut prev = eval(panels);
    loop {
        panels *= 2;
        let cur = eval(panels);
        if (cur - prev).abs() <= 1e-10 * cur.abs() + floor || panels > 1 << 16 {
            return cur;
        }
        prev = cur;
    }
}

/// `(Q e_kp, e_kp)` for the Dirichlet eigenfunctions of `(0, l)²`.
pub fn modal_weight(kernel: &Kernel, k: usize, p: usize, l: f64) -> Result<f64> {
    if k == 0 || p == 0 {
        return Err(Error::InvalidParameter("mode indices start at 1".into()));
    }
    kernel.validate()?;
    Ok(match *kernel {
        Kernel::Gaussian { .. } | Kernel::ScaledGaussian { .. } => {
            gaussian_amplitude(kernel) * 4.0 / (l * l)
                * gaussian_axis_integral(kernel, k, l)
                * gaussian_axis_integral(kernel, p, l)
        }
        Kernel::Separable { k0, p0, l: lk } => {
            if (lk - l).abs() > 1e-12 * l {
                return Err(Error::InvalidParameter("separable kernel side differs from the domain side".into()));
            }
            // ∫ f e_kp = 2 (2/l) (l/2)² δ
            if k == k0 as usize && p == p0 as usize {
                l * l
            } else {
                0.0
            }
        }
    })
}

/// Monte Carlo estimate `Γ^(P)_{nΔt} = (1/P) Σ_p ‖u_n^{h,p}‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaTable {
    pub times: Vec<f64>,
    pub gamma_mc: Vec<f64>,
    pub stderr: Vec<f64>,
}

impl GammaTable {
    pub fn to_csv(&self, series: &GammaSeries) -> String {
        let mut s = String::from("t,gamma_analytic,gamma_mc,stderr\n");
        for ((t, g), e) in self.times.iter().zip(&self.gamma_mc).zip(&self.stderr) {
            s.push_str(&format!("{t:.6},{:.10e},{g:.10e},{e:.10e}\n", series.gamma(*t)));
        }
        s
    }

    /// Fraction of time points where `|Γ^(P) - Γ| <= band`.
    pub fn fraction_within(&self, series: &GammaSeries, band: f64) -> f64 {
        let inside =
            self.times.iter().zip(&self.gamma_mc).filter(|(t, g)| (*g - series.gamma(**t)).abs() <= band).count();
        inside as f64 / self.times.len() as f64
    }
}

/// Runs `replicas` independent trajectories from `u_0 = 0`. Replica `p`
/// draws from stream `p` of `cfg.seed`, so the result does not depend on how
/// rayon schedules them.
pub fn monte_carlo_gamma(cfg: &LinearSchemeConfig, mesh: &Mesh, replicas: usize) -> Result<GammaTable> {
    cfg.validate()?;
    if replicas == 0 {
        return Err(Error::InvalidParameter("need at least one replica".into()));
    }
    let layout = DofLayout::dirichlet(mesh);
    let sites = NoiseSites::for_layout(cfg.discretization, &layout);
    let stepper = LinearStepper::new(FemOperators::new(mesh, layout), cfg.dt, cfg.sigma)?;
    let factor = NoiseFactor::new(&cfg.kernel, mesh, sites)?;

    let runs: Vec<Vec<f64>> = (0..replicas)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let mut sampler = factor.sampler(stream(cfg.seed, p as u64));
            let mut u = vec![0.0; stepper.ops.num_dofs()];
            let mut norms = Vec::with_capacity(cfg.n_steps + 1);
            norms.push(0.0);
            for _ in 0..cfg.n_steps {
                let inc = sampler.sample_increment(cfg.dt);
                let field = project_noise(&inc, &factor.sites, mesh)?;
                u = stepper.step(&u, &field)?;
                norms.push(stepper.ops.mass.bilinear(&u, &u));
            }
            Ok(norms)
        })
        .collect::<Result<_>>()?;

    let mut gamma_mc = Vec::with_capacity(cfg.n_steps + 1);
    let mut stderr = Vec::with_capacity(cfg.n_steps + 1);
    for n in 0..=cfg.n_steps {
        let col: Vec<f64> = runs.iter().map(|r| r[n]).collect();
        let (m, e) = mean_and_stderr(&col);
        gamma_mc.push(m);
        stderr.push(e);
    }
    let times = (0..=cfg.n_steps).map(|n| n as f64 * cfg.dt).collect();
    Ok(GammaTable { times, gamma_mc, stderr })
}

/// One row of the strong-error table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRow {
    pub h: f64,
    pub dt: f64,
    /// `sqrt(E ‖u^h_n - u(t_n)‖²)` at the final time
    pub err: f64,
    pub stderr: f64,
}

/// Errors from the spatial, temporal and joint refinement sequences, with
/// the fitted log-log rates of the first two.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongErrorTable {
    pub spatial: Vec<ErrorRow>,
    pub temporal: Vec<ErrorRow>,
    pub joint: Vec<ErrorRow>,
    pub spatial_rate: f64,
    pub temporal_rate: f64,
}

impl StrongErrorTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("h,dt,err,stderr,slope_summary\n");
        for (name, rows) in [("spatial", &self.spatial), ("temporal", &self.temporal), ("joint", &self.joint)] {
            for r in rows.iter() {
                s.push_str(&format!("{:.10e},{:.10e},{:.10e},{:.10e},{name}\n", r.h, r.dt, r.err, r.stderr));
            }
        }
        s.push_str(&format!(",,,,spatial_rate={:.6}\n", self.spatial_rate));
        s.push_str(&format!(",,,,temporal_rate={:.6}\n", self.temporal_rate));
        s
    }

    /// Ratios `err_i / err_{i+1}` along the joint sequence.
    pub fn joint_ratios(&self) -> Vec<f64> {
        self.joint.windows(2).map(|w| w[0].err / w[1].err).collect()
    }
}

/// Settings of the coupled strong-error study on the unit square with the
/// separable kernel `f_{k0 p0}`, whose exact solution is `σ X_t f` with
/// `dX = -λ X dt + dβ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StrongErrorConfig {
    pub sigma: f64,
    pub t_end: f64,
    pub k0: u32,
    pub p0: u32,
    /// spatial sequence: grid sizes, all run at `spatial_dt`
    pub spatial_n: Vec<usize>,
    pub spatial_dt: f64,
    /// temporal sequence: step sizes, all run on `temporal_n`
    pub temporal_dt: Vec<f64>,
    pub temporal_n: usize,
    /// joint sequence: `(N, dt)` pairs
    pub joint: Vec<(usize, f64)>,
    pub discretization: Discretization,
    pub replicas: usize,
    pub seed: u64,
}

impl Default for StrongErrorConfig {
    fn default() -> Self {
        StrongErrorConfig {
            sigma: 1.0,
            t_end: 1.0,
            k0: 1,
            p0: 1,
            spatial_n: vec![4, 8, 16],
            spatial_dt: 1.0 / 1280.0,
            temporal_dt: vec![1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0],
            temporal_n: 64,
            joint: vec![(4, 1.0 / 20.0), (8, 1.0 / 40.0), (16, 1.0 / 80.0), (32, 1.0 / 160.0)],
            discretization: Discretization::P1,
            replicas: 100,
            seed: 0,
        }
    }
}

/// Pathwise error of the scheme on one `(N, dt)` level, for every replica.
/// The Brownian motion `β` of replica `r` is drawn on the finest step
/// `dt_min` from stream `r` and summed into coarser increments, so all
/// levels see the same path.
fn strong_errors_at(cfg: &StrongErrorConfig, n: usize, dt: f64, dt_min: f64) -> Result<Vec<f64>> {
    let steps = (cfg.t_end / dt).round() as usize;
    let fine_per_step = (dt / dt_min).round() as usize;
    if steps == 0
        || (steps as f64 * dt - cfg.t_end).abs() > 1e-9 * cfg.t_end
        || (fine_per_step as f64 * dt_min - dt).abs() > 1e-9 * dt
    {
        return Err(Error::InvalidParameter(format!("dt = {dt} must divide t_end and be a multiple of {dt_min}")));
    }
    let l = 1.0;
    let mesh = generate_square_grid(l, n)?;
    let layout = DofLayout::dirichlet(&mesh);
    let stepper = LinearStepper::new(FemOperators::new(&mesh, layout), dt, cfg.sigma)?;
    let (k0, p0) = (cfg.k0, cfg.p0);
    let f = |x| separable_profile(k0, p0, l, x);
    let lambda = eigenvalue(k0 as usize, p0 as usize, l);

    // load of the unit-amplitude discrete noise field, so ΔW gives Δβ times it
    let sites = NoiseSites::for_layout(cfg.discretization, &stepper.ops.layout);
    let site_values: Vec<f64> = match cfg.discretization {
        Discretization::P1 => mesh.nodes.iter().map(|&x| f(x)).collect(),
        Discretization::P0 => crate::mesh::barycenters(&mesh).into_iter().map(f).collect(),
        Discretization::P0a => {
            let rule = TriangleRule::collapsed(6);
            (0..mesh.num_triangles())
                .map(|t| rule.integrate(mesh.vertices(t), mesh.area(t), f) / mesh.area(t))
                .collect()
        }
    };
    let unit_load = project_noise(&site_values, &sites, &mesh)?.load(&stepper.ops)?;

    // (ψ_i, f) over the unknowns and ‖f‖², for the error norm
    let rule = TriangleRule::collapsed(6);
    let mut psi_f_full = vec![0.0; mesh.num_nodes()];
    let mut f_norm2 = 0.0;
    for t in 0..mesh.num_triangles() {
        let v = mesh.vertices(t);
        let area = mesh.area(t);
        let tri = mesh.triangles[t];
        for (pt, w) in rule.map(v).into_iter().zip(&rule.weights) {
            let l1 = crate::mesh::signed_area(v[0], pt, v[2]) / area;
            let l2 = crate::mesh::signed_area(v[0], v[1], pt) / area;
            let lam = [1.0 - l1 - l2, l1, l2];
            let fv = f(pt);
            f_norm2 += w * area * fv * fv;
            for m in 0..3 {
                psi_f_full[tri[m]] += w * area * fv * lam[m];
            }
        }
    }
    let psi_f = stepper.ops.layout.reduce_sum(&psi_f_full);

    let decay = (-lambda * dt).exp();
    let ou_scale = (-(-2.0 * lambda * dt).exp_m1() / (2.0 * lambda)).sqrt();
    (0..cfg.replicas)
        .into_par_iter()
        .map(|r| -> Result<f64> {
            let mut rng = stream(cfg.seed, r as u64);
            let mut u = vec![0.0; stepper.ops.num_dofs()];
            let mut load = vec![0.0; u.len()];
            let mut x = 0.0;
            for _ in 0..steps {
                let mut db = 0.0;
                for _ in 0..fine_per_step {
                    let g: f64 = rng.sample(StandardNormal);
                    db += dt_min.sqrt() * g;
                }
                for (a, b) in load.iter_mut().zip(&unit_load) {
                    *a = db * b;
                }
                u = stepper.step_with_load(&u, &load)?;
                x = decay * x + ou_scale * db / dt.sqrt();
            }
            let exact = cfg.sigma * x;
            let uu = stepper.ops.mass.bilinear(&u, &u);
            let uf: f64 = u.iter().zip(&psi_f).map(|(a, b)| a * b).sum();
            Ok((uu - 2.0 * exact * uf + exact * exact * f_norm2).max(0.0))
        })
        .collect()
}

fn error_row(cfg: &StrongErrorConfig, n: usize, dt: f64, dt_min: f64) -> Result<ErrorRow> {
    let errs = strong_errors_at(cfg, n, dt, dt_min)?;
    let (m, e) = mean_and_stderr(&errs);
    let err = m.sqrt();
    let stderr = if err > 0.0 { e / (2.0 * err) } else { 0.0 };
    Ok(ErrorRow { h: std::f64::consts::SQRT_2 / n as f64, dt, err, stderr })
}

/// Coupled pathwise error study against the exact Ornstein-Uhlenbeck
/// solution of the separable-kernel problem.
pub fn strong_error_study(cfg: &StrongErrorConfig) -> Result<StrongErrorTable> {
    if cfg.replicas == 0 || cfg.spatial_n.len() < 2 || cfg.temporal_dt.len() < 2 {
        return Err(Error::InvalidParameter("need replicas and at least two levels per sequence".into()));
    }
    let dt_min = cfg
        .temporal_dt
        .iter()
        .chain(cfg.joint.iter().map(|(_, dt)| dt))
        .chain(std::iter::once(&cfg.spatial_dt))
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let spatial =
        cfg.spatial_n.iter().map(|&n| error_row(cfg, n, cfg.spatial_dt, dt_min)).collect::<Result<Vec<_>>>()?;
    let temporal =
        cfg.temporal_dt.iter().map(|&dt| error_row(cfg, cfg.temporal_n, dt, dt_min)).collect::<Result<Vec<_>>>()?;
    let joint = cfg.joint.iter().map(|&(n, dt)| error_row(cfg, n, dt, dt_min)).collect::<Result<Vec<_>>>()?;
    let fit = |rows: &[ErrorRow], x: fn(&ErrorRow) -> f64| {
        loglog_slope(&rows.iter().map(x).collect::<Vec<_>>(), &rows.iter().map(|r| r.err).collect::<Vec<_>>())
    };
    Ok(StrongErrorTable {
        spatial_rate: fit(&spatial, |r| r.h),
        temporal_rate: fit(&temporal, |r| r.dt),
        spatial,
        temporal,
        joint,
    })
}
