//! Colored Q-Wiener noise and its finite-element approximations.
//!
//! A [`Kernel`] defines the spatial covariance `q(x, y)`. Three discrete
//! versions of the noise are supported:
//!
//! * `P1`: the field is sampled at mesh nodes and interpolated by hat functions;
//! * `P0`: sampled at triangle barycenters, constant per triangle;
//! * `P0a`: the L2 projection onto piecewise constants, whose per-triangle
//!   averages have covariance `(Q 1_T, 1_S) / (|T| |S|)`.
//!
//! In every case the site values form a Gaussian vector with covariance
//! matrix `K`, sampled as `L g` where `L L^T = K + δ I` (see
//! [`cholesky_psd`]).

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fem::{DofKind, DofLayout, FemOperators};
use crate::linalg::{dense_cholesky_shifted, DenseLower};
use crate::mesh::{barycenters, generate_square_grid, Mesh, Point};
use crate::quadrature::TriangleRule;
use crate::rng::{stream, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `q(x, y) = exp(-π |x - y|² / (4 ξ²)) / (4 ξ²)`
    Gaussian { xi: f64 },
    /// `q(x, y) = f(x) f(y)` with `f(x) = 2 sin(k0 π x1 / l) sin(p0 π x2 / l)`
    Separable { k0: u32, p0: u32, l: f64 },
    /// `q(x, y) = (a / ξ²) exp(-(b / ξ²) |x - y|²)`
    ScaledGaussian { a: f64, b: f64, xi: f64 },
}

impl Kernel {
    pub fn eval(&self, x: Point, y: Point) -> f64 {
        match *self {
            Kernel::Gaussian { xi } => {
                let s = 4.0 * xi * xi;
                (-PI / s * dist2(x, y)).exp() / s
            }
            Kernel::Separable { k0, p0, l } => separable_profile(k0, p0, l, x) * separable_profile(k0, p0, l, y),
            Kernel::ScaledGaussian { a, b, xi } => {
                let s = xi * xi;
                a / s * (-b / s * dist2(x, y)).exp()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Kernel::Gaussian { xi } => xi > 0.0 && xi.is_finite(),
            Kernel::Separable { k0, p0, l } => k0 >= 1 && p0 >= 1 && l > 0.0,
            Kernel::ScaledGaussian { a, b, xi } => a > 0.0 && b > 0.0 && xi > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("invalid kernel {self:?}")))
        }
    }
}

fn dist2(x: Point, y: Point) -> f64 {
    let (dx, dy) = (x[0] - y[0], x[1] - y[1]);
    dx * dx + dy * dy
}

/// `2 sin(k0 π x1 / l) sin(p0 π x2 / l)`, unit-norm on `(0, l)²` when `l = 1`.
pub fn separable_profile(k0: u32, p0: u32, l: f64, x: Point) -> f64 {
    2.0 * (k0 as f64 * PI * x[0] / l).sin() * (p0 as f64 * PI * x[1] / l).sin()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Discretization {
    P0,
    P0a,
    P1,
}

/// Where the sampled Gaussian vector lives.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSites {
    /// One value per mesh node.
    Nodes,
    /// One value per unknown of a periodic layout (master nodes).
    Masters(DofLayout),
    /// One value per triangle, taken at the barycenter.
    Barycenters,
    /// One value per triangle, the triangle average.
    TriangleAverages,
}

impl NoiseSites {
    pub fn for_layout(discretization: Discretization, layout: &DofLayout) -> Self {
        match discretization {
            Discretization::P1 if layout.kind == DofKind::Periodic => NoiseSites::Masters(layout.clone()),
            Discretization::P1 => NoiseSites::Nodes,
            Discretization::P0 => NoiseSites::Barycenters,
            Discretization::P0a => NoiseSites::TriangleAverages,
        }
    }

    pub fn count(&self, mesh: &Mesh) -> usize {
        match self {
            NoiseSites::Nodes => mesh.num_nodes(),
            NoiseSites::Masters(layout) => layout.num_dofs(),
            NoiseSites::Barycenters | NoiseSites::TriangleAverages => mesh.num_triangles(),
        }
    }

    pub fn discretization(&self) -> Discretization {
        match self {
            NoiseSites::Nodes | NoiseSites::Masters(_) => Discretization::P1,
            NoiseSites::Barycenters => Discretization::P0,
            NoiseSites::TriangleAverages => Discretization::P0a,
        }
    }
}

/// `K_ij = q(p_i, p_j)`.
pub fn covariance_matrix(kernel: &Kernel, points: &[Point]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(points[i], points[j]);
            k[i][j] = v;
            k[j][i] = v;
        }
    }
    k
}

/// Covariance of triangle averages, `(Q 1_T, 1_S) / (|T| |S|)`, by the
/// three-point rule on each triangle.
pub fn triangle_average_covariance(kernel: &Kernel, mesh: &Mesh) -> Vec<Vec<f64>> {
    let rule = TriangleRule::three_point();
    let pts: Vec<Vec<Point>> = (0..mesh.num_triangles()).map(|t| rule.map(mesh.vertices(t))).collect();
    let n = pts.len();
    let mut k = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = 0.0;
            for (a, wa) in pts[i].iter().zip(&rule.weights) {
                for (b, wb) in pts[j].iter().zip(&rule.weights) {
                    s += wa * wb * kernel.eval(*a, *b);
                }
            }
            k[i][j] = s;
            k[j][i] = s;
        }
    }
    k
}

/// Relative jitter levels tried in order, as multiples of `max diag K`.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

/// Cholesky factor of `K + δ I`, escalating `δ` through [`JITTER_LADDER`].
/// Returns the factor and the absolute jitter used.
pub fn cholesky_psd(k: &[Vec<f64>]) -> Result<(DenseLower, f64)> {
    if let Some(i) = (0..k.len()).find(|&i| k[i].len() != k.len()) {
        return Err(Error::Dimension { expected: k.len(), got: k[i].len() });
    }
    let scale = (0..k.len()).map(|i| k[i][i]).fold(0.0, f64::max);
    let mut last = 0.0;
    for rel in JITTER_LADDER {
        last = rel * scale;
        if let Some(l) = dense_cholesky_shifted(k, last) {
            return Ok((l, last));
        }
    }
    Err(Error::NotPsd { jitter: last })
}

/// Factorized covariance of the noise at its sites; immutable and shared by
/// every replica of a run.
#[derive(Debug, Clone)]
pub struct NoiseFactor {
    pub sites: NoiseSites,
    pub lower: DenseLower,
    pub jitter: f64,
}

impl NoiseFactor {
    pub fn new(kernel: &Kernel, mesh: &Mesh, sites: NoiseSites) -> Result<Self> {
        kernel.validate()?;
        let k = match &sites {
            NoiseSites::Nodes => covariance_matrix(kernel, &mesh.nodes),
            NoiseSites::Masters(layout) => {
                let pts: Vec<Point> = layout.representatives().iter().map(|&i| mesh.nodes[i]).collect();
                covariance_matrix(kernel, &pts)
            }
            NoiseSites::Barycenters => covariance_matrix(kernel, &barycenters(mesh)),
            NoiseSites::TriangleAverages => triangle_average_covariance(kernel, mesh),
        };
        let (lower, jitter) = cholesky_psd(&k)?;
        Ok(NoiseFactor { sites, lower, jitter })
    }

    pub fn dim(&self) -> usize {
        self.lower.dim()
    }

    pub fn sampler(&self, rng: Stream) -> NoiseSampler<'_> {
        NoiseSampler { factor: self, rng, normals: vec![0.0; self.dim()] }
    }
}

/// Draws Wiener increments at the sites of a [`NoiseFactor`] from a private
/// random stream.
#[derive(Debug, Clone)]
pub struct NoiseSampler<'a> {
    factor: &'a NoiseFactor,
    rng: Stream,
    normals: Vec<f64>,
}

impl NoiseSampler<'_> {
    pub fn factor(&self) -> &NoiseFactor {
        self.factor
    }

    /// `sqrt(dt) L g` with `g` i.i.d. standard normal.
    pub fn sample_increment(&mut self, dt: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.factor.dim()];
        self.sample_increment_into(dt, &mut out);
        out
    }

    pub fn sample_increment_into(&mut self, dt: f64, out: &mut [f64]) {
        assert!(dt >= 0.0, "negative time step");
        for g in self.normals.iter_mut() {
            *g = self.rng.sample(StandardNormal);
        }
        if dt == 0.0 {
            out.fill(0.0);
            return;
        }
        self.factor.lower.mul_vec_into(&self.normals, out);
        let s = dt.sqrt();
        for v in out.iter_mut() {
            *v *= s;
        }
    }

    /// The standard normals behind the last increment.
    pub fn last_normals(&self) -> &[f64] {
        &self.normals
    }
}

/// A noise realization as a finite-element function.
#[derive(Debug, Clone, PartialEq)]
pub enum FeField {
    /// Values at every mesh node, P1 interpolation.
    Nodal(Vec<f64>),
    /// One constant per triangle.
    Piecewise(Vec<f64>),
}

impl FeField {
    /// Value at `x`, assumed to lie in triangle `t`.
    pub fn eval_in(&self, mesh: &Mesh, t: usize, x: Point) -> f64 {
        match self {
            FeField::Piecewise(c) => c[t],
            FeField::Nodal(w) => {
                let tri = mesh.triangles[t];
                let [a, b, c] = mesh.vertices(t);
                let area = mesh.area(t);
                let l1 = crate::mesh::signed_area(a, x, c) / area;
                let l2 = crate::mesh::signed_area(a, b, x) / area;
                let l0 = 1.0 - l1 - l2;
                l0 * w[tri[0]] + l1 * w[tri[1]] + l2 * w[tri[2]]
            }
        }
    }

    /// Load vector `(field, ψ_i)` over the unknowns of `ops`.
    pub fn load(&self, ops: &FemOperators) -> Result<Vec<f64>> {
        match self {
            FeField::Nodal(w) => ops.load_p1(w),
            FeField::Piecewise(c) => ops.load_p0(c),
        }
    }
}

/// Turns site values into the coefficients of the discrete noise field.
pub fn project_noise(values: &[f64], sites: &NoiseSites, mesh: &Mesh) -> Result<FeField> {
    let expected = sites.count(mesh);
    if values.len() != expected {
        return Err(Error::SiteMismatch(format!(
            "{:?} noise expects {expected} site values, got {}",
            sites.discretization(),
            values.len()
        )));
    }
    Ok(match sites {
        NoiseSites::Nodes => FeField::Nodal(values.to_vec()),
        NoiseSites::Masters(layout) => {
            if layout.num_nodes() != mesh.num_nodes() {
                return Err(Error::SiteMismatch("periodic layout belongs to another mesh".into()));
            }
            FeField::Nodal(layout.expand(values))
        }
        NoiseSites::Barycenters | NoiseSites::TriangleAverages => FeField::Piecewise(values.to_vec()),
    })
}

/// `β_t f(x)`: the exact Q-Wiener process of a separable kernel at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableSnapshot {
    pub t: f64,
    pub beta: f64,
    pub k0: u32,
    pub p0: u32,
    pub l: f64,
}

impl SeparableSnapshot {
    pub fn eval(&self, x: Point) -> f64 {
        self.beta * separable_profile(self.k0, self.p0, self.l, x)
    }
}

/// Exact path `W_t = β_t f` of the separable-kernel process on `times`,
/// which must start at 0 and increase.
pub fn exact_separable_path(k0: u32, p0: u32, l: f64, times: &[f64], seed: u64) -> Result<Vec<SeparableSnapshot>> {
    let mut rng = stream(seed, 0);
    separable_path_from(&mut rng, k0, p0, l, times)
}

pub fn separable_path_from(
    rng: &mut Stream,
    k0: u32,
    p0: u32,
    l: f64,
    times: &[f64],
) -> Result<Vec<SeparableSnapshot>> {
    if times.first() != Some(&0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("path times must start at 0 and increase".into()));
    }
    let mut beta = 0.0;
    let mut prev = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        if t > prev {
            let g: f64 = rng.sample(StandardNormal);
            beta += (t - prev).sqrt() * g;
        }
        prev = t;
        out.push(SeparableSnapshot { t, beta, k0, p0, l });
    }
    Ok(out)
}

/// Result of the P0 projection error experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct MuTable {
    /// `(N, mean, standard error)`
    pub rows: Vec<(usize, f64, f64)>,
    pub slope: f64,
}

impl MuTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("N,mu_hat,stderr\n");
        for (n, m, e) in &self.rows {
            s.push_str(&format!("{n},{m:.10e},{e:.10e}\n"));
        }
        s
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// `‖W - W_h‖²` for an exact field and its discrete approximation, by
/// collapsed Gauss-Legendre quadrature on every triangle.
pub fn squared_l2_error<F: Fn(Point) -> f64>(mesh: &Mesh, exact: F, field: &FeField, rule: &TriangleRule) -> f64 {
    (0..mesh.num_triangles())
        .map(|t| {
            rule.integrate(mesh.vertices(t), mesh.area(t), |x| {
                let d = exact(x) - field.eval_in(mesh, t, x);
                d * d
            })
        })
        .sum()
}

/// Monte Carlo estimate of `μ_N = E ‖W_1 - W^{N,0}_1‖²` for the separable
/// kernel on the unit square covered by `2 N²` triangles. Sample `s` uses
/// stream `s` of `seed` and is shared across all `N`.
pub fn mu_n_experiment(k0: u32, p0: u32, n_list: &[usize], samples: usize, seed: u64) -> Result<MuTable> {
    if n_list.is_empty() || samples == 0 {
        return Err(Error::InvalidParameter("need at least one N and one sample".into()));
    }
    let l = 1.0;
    let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let betas: Vec<f64> = (0..samples)
        .map(|s| {
            let mut rng = stream(seed, s as u64);
            separable_path_from(&mut rng, k0, p0, l, &times).map(|p| p[p.len() - 1].beta)
        })
        .collect::<Result<_>>()?;

    let rule = TriangleRule::collapsed(6);
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mesh = generate_square_grid(l, n)?;
        let sites = NoiseSites::Barycenters;
        let bary = barycenters(&mesh);
        let errs: Vec<f64> = betas
            .iter()
            .map(|&beta| {
                let w1 = SeparableSnapshot { t: 1.0, beta, k0, p0, l };
                let values: Vec<f64> = bary.iter().map(|&g| w1.eval(g)).collect();
                let field = project_noise(&values, &sites, &mesh).expect("site count matches");
                squared_l2_error(&mesh, |x| w1.eval(x), &field, &rule)
            })
            .collect();
        let (m, e) = mean_and_stderr(&errs);
        rows.push((n, m, e));
    }
    let slope = loglog_slope(
        &rows.iter().map(|r| r.0 as f64).collect::<Vec<_>>(),
        &rows.iter().map(|r| r.1).collect::<Vec<_>>(),
    );
    Ok(MuTable { rows, slope })
}

/// Estimates `E sup_{t ≤ t_end} ‖W^{h_ref} - W^{h}‖²` where `W^{h_ref}` is the
/// P1 noise on the nested `refine N` unit-square grid and `W^h` the P1 noise
/// on the `N x N` grid built from the same path (nodal values are shared at
/// coarse nodes). One `(N, mean, stderr)` row per `N`.
#[allow(clippy::too_many_arguments)]
pub fn p1_error_vs_reference(
    kernel: &Kernel,
    n_list: &[usize],
    refine: usize,
    steps: usize,
    t_end: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<(usize, f64, f64)>> {
    if refine < 1 || steps == 0 || samples == 0 || !(t_end > 0.0) {
        return Err(Error::InvalidParameter("refine, steps, samples and t_end must be positive".into()));
    }
    let mut rows = Vec::new();
    for &n in n_list {
        let nf = refine * n;
        let fine = generate_square_grid(1.0, nf)?;
        let coarse = generate_square_grid(1.0, n)?;
        let fine_ops = FemOperators::new(&fine, DofLayout::free(&fine));
        let factor = NoiseFactor::new(kernel, &fine, NoiseSites::Nodes)?;
        let coarse_to_fine: Vec<usize> =
            (0..=n).flat_map(|j| (0..=n).map(move |i| refine * j * (nf + 1) + refine * i)).collect();
        // coarse triangle holding each fine node, with its barycentric weights
        let interp: Vec<([usize; 3], [f64; 3])> = fine
            .nodes
            .iter()
            .map(|&x| {
                let t = locate_on_grid(&coarse, n, x);
                let [a, b, c] = coarse.vertices(t);
                let area = coarse.area(t);
                let l1 = crate::mesh::signed_area(a, x, c) / area;
                let l2 = crate::mesh::signed_area(a, b, x) / area;
                (coarse.triangles[t], [1.0 - l1 - l2, l1, l2])
            })
            .collect();
        let dt = t_end / steps as f64;
        let errs: Vec<f64> = (0..samples)
            .map(|s| {
                let mut sampler = factor.sampler(stream(seed, s as u64));
                let mut w = vec![0.0; fine.num_nodes()];
                let mut inc = vec![0.0; fine.num_nodes()];
                let mut diff = vec![0.0; fine.num_nodes()];
                let mut worst: f64 = 0.0;
                for _ in 0..steps {
                    sampler.sample_increment_into(dt, &mut inc);
                    for (a, b) in w.iter_mut().zip(&inc) {
                        *a += b;
                    }
                    for (k, (tri, lam)) in interp.iter().enumerate() {
                        let c: f64 = (0..3).map(|m| lam[m] * w[coarse_to_fine[tri[m]]]).sum();
                        diff[k] = w[k] - c;
                    }
                    worst = worst.max(fine_ops.mass.bilinear(&diff, &diff));
                }
                worst
            })
            .collect();
        let (m, e) = mean_and_stderr(&errs);
        rows.push((n, m, e));
    }
    Ok(rows)
}

/// Triangle of the structured unit-square grid containing `x`.
fn locate_on_grid(mesh: &Mesh, n: usize, x: Point) -> usize {
    let (lo, hi) = mesh.bounding_box();
    let s = (hi[0] - lo[0]) / n as f64;
    let i = (((x[0] - lo[0]) / s).floor() as usize).min(n - 1);
    let j = (((x[1] - lo[1]) / s).floor() as usize).min(n - 1);
    let fx = (x[0] - lo[0]) / s - i as f64;
    let fy = (x[1] - lo[1]) / s - j as f64;
    let cell = j * n + i;
    if fy <= fx {
        2 * cell
    } else {
        2 * cell + 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_single_point() {
        let k = covariance_matrix(&Kernel::Gaussian { xi: 2.0 }, &[[0.3, 0.4]]);
        assert_eq!(k, vec![vec![1.0 / 16.0]]);
    }

    #[test]
    fn gaussian_long_correlation() {
        let pts = [[0.0, 0.0], [1.0, 1.0], [0.5, 0.2]];
        let k = covariance_matrix(&Kernel::Gaussian { xi: 1e6 }, &pts);
        for i in 0..3 {
            for j in 0..3 {
                assert!(k[i][j] / k[i][i] >= 1.0 - 1e-9);
            }
        }
    }

    #[test]
    fn separable_is_rank_one() {
        let mesh = generate_square_grid(1.0, 2).unwrap();
        let kernel = Kernel::Separable { k0: 1, p0: 1, l: 1.0 };
        let k = covariance_matrix(&kernel, &mesh.nodes);
        let f: Vec<f64> = mesh.nodes.iter().map(|&p| separable_profile(1, 1, 1.0, p)).collect();
        for i in 0..9 {
            for j in 0..9 {
                assert_eq!(k[i][j], f[i] * f[j]);
            }
        }
    }

    #[test]
    fn cholesky_ladder() {
        let id = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let (l, jitter) = cholesky_psd(&id).unwrap();
        assert_eq!(jitter, 0.0);
        assert_eq!((l.get(0, 0), l.get(1, 0), l.get(1, 1)), (1.0, 0.0, 1.0));

        let bad = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert!(matches!(cholesky_psd(&bad), Err(Error::NotPsd { .. })));

        let mesh = generate_square_grid(1.0, 4).unwrap();
        let k = covariance_matrix(&Kernel::Separable { k0: 1, p0: 2, l: 1.0 }, &mesh.nodes);
        let (l, jitter) = cholesky_psd(&k).unwrap();
        assert!(jitter > 0.0);
        let norm = k.iter().flatten().fold(0.0f64, |a, b| a.max(b.abs()));
        let r = l.reconstruct();
        for i in 0..k.len() {
            for j in 0..k.len() {
                assert!((r[i][j] - k[i][j]).abs() <= 1e-8 * norm, "{i},{j}");
            }
        }
    }

    #[test]
    fn zero_step_gives_zero_increment() {
        let mesh = generate_square_grid(1.0, 2).unwrap();
        let f = NoiseFactor::new(&Kernel::Gaussian { xi: 0.5 }, &mesh, NoiseSites::Nodes).unwrap();
        let mut s = f.sampler(stream(3, 0));
        assert!(s.sample_increment(0.0).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn projection_of_constants() {
        let mesh = generate_square_grid(1.0, 3).unwrap();
        let ops = FemOperators::new(&mesh, DofLayout::free(&mesh));
        let c = 0.7;
        for sites in [NoiseSites::Nodes, NoiseSites::Barycenters, NoiseSites::TriangleAverages] {
            let vals = vec![c; sites.count(&mesh)];
            let field = project_noise(&vals, &sites, &mesh).unwrap();
            for t in 0..mesh.num_triangles() {
                let g = mesh.barycenter(t);
                assert!((field.eval_in(&mesh, t, g) - c).abs() < 1e-15);
            }
            let load = field.load(&ops).unwrap();
            for (a, b) in load.iter().zip(ops.mass.row_sums()) {
                assert!((a - c * b).abs() < 1e-14);
            }
        }
        assert!(matches!(project_noise(&[1.0; 3], &NoiseSites::Nodes, &mesh), Err(Error::SiteMismatch(_))));
    }

    #[test]
    fn p1_projection_norm() {
        let mesh = generate_square_grid(1.0, 1).unwrap();
        let ops = FemOperators::new(&mesh, DofLayout::free(&mesh));
        let vals = [0.0, 1.0, 0.0, 1.0];
        let field = project_noise(&vals, &NoiseSites::Nodes, &mesh).unwrap();
        let via_quadrature = squared_l2_error(&mesh, |_| 0.0, &field, &TriangleRule::collapsed(3));
        let direct = ops.mass.bilinear(&vals, &vals);
        assert!((via_quadrature - direct).abs() < 1e-14);
    }

    #[test]
    fn separable_p0_coefficients() {
        let mesh = generate_square_grid(1.0, 4).unwrap();
        let w1 = SeparableSnapshot { t: 1.0, beta: 1.0, k0: 1, p0: 1, l: 1.0 };
        let vals: Vec<f64> = barycenters(&mesh).iter().map(|&g| w1.eval(g)).collect();
        match project_noise(&vals, &NoiseSites::Barycenters, &mesh).unwrap() {
            FeField::Piecewise(c) => {
                for (t, ct) in c.iter().enumerate() {
                    assert_eq!(*ct, separable_profile(1, 1, 1.0, mesh.barycenter(t)));
                }
            }
            other => panic!("expected P0 field, got {other:?}"),
        }
    }

    #[test]
    fn path_starts_at_zero() {
        let p = exact_separable_path(1, 1, 1.0, &[0.0, 0.5, 1.0], 9).unwrap();
        assert_eq!(p[0].beta, 0.0);
        assert_eq!(p[0].eval([0.5, 0.5]), 0.0);
        assert!(exact_separable_path(1, 1, 1.0, &[0.1, 0.5], 9).is_err());
        assert!(exact_separable_path(1, 1, 1.0, &[0.0, 0.5, 0.5], 9).is_err());
    }

    #[test]
    fn grid_location() {
        let mesh = generate_square_grid(1.0, 3).unwrap();
        for t in 0..mesh.num_triangles() {
            assert_eq!(locate_on_grid(&mesh, 3, mesh.barycenter(t)), t);
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [5.0, 10.0, 20.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.0)).collect();
        assert!((loglog_slope(&x, &y) + 2.0).abs() < 1e-12);
    }
}
