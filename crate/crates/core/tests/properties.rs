use excitable_fem::fem::{assemble_mass, assemble_stiffness, DofLayout, FemOperators};
use excitable_fem::heat::{gamma_analytic, GammaSeries, LinearStepper};
use excitable_fem::mesh::{generate_square_grid, periodic_node_map, Mesh};
use excitable_fem::models::{Model, ModelState, MsParams, Stepper};
use excitable_fem::noise::{project_noise, FeField, Kernel, NoiseFactor, NoiseSites};
use excitable_fem::rng::stream;
use proptest::prelude::*;
use rand::Rng;

/// Square grid with interior nodes jittered by up to `jitter` times the
/// grid spacing in each coordinate.
fn jittered_grid(l: f64, n: usize, jitter: f64, seed: u64) -> Mesh {
    let base = generate_square_grid(l, n).unwrap();
    let on_boundary = base.boundary_nodes();
    let s = l / n as f64;
    let mut rng = stream(seed, 0);
    let nodes = base
        .nodes
        .iter()
        .zip(&on_boundary)
        .map(|(&p, &b)| {
            if b {
                p
            } else {
                [p[0] + jitter * s * rng.random_range(-1.0..1.0), p[1] + jitter * s * rng.random_range(-1.0..1.0)]
            }
        })
        .collect();
    Mesh::new(nodes, base.node_labels, base.triangles, base.regions, base.boundary_edges).unwrap()
}

fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = stream(seed, 1);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gaussian_kernel_is_symmetric(xi in 0.1f64..5.0, x in prop::array::uniform2(-50.0f64..50.0), y in prop::array::uniform2(-50.0f64..50.0)) {
        let k = Kernel::Gaussian { xi };
        prop_assert_eq!(k.eval(x, y), k.eval(y, x));
    }

    #[test]
    fn triangle_areas_sum_to_domain_area(l in 0.5f64..100.0, n in 1usize..30, seed in any::<u64>()) {
        let mesh = jittered_grid(l, n, 0.2, seed);
        let total: f64 = (0..mesh.num_triangles()).map(|t| mesh.area(t)).sum();
        prop_assert!((total - l * l).abs() <= 1e-10 * l * l);
    }

    #[test]
    fn grid_counts(n in 1usize..=64) {
        let mesh = generate_square_grid(1.0, n).unwrap();
        prop_assert_eq!(mesh.num_nodes(), (n + 1) * (n + 1));
        prop_assert_eq!(mesh.num_triangles(), 2 * n * n);
    }

    #[test]
    fn mass_matrix_is_positive_definite(n in 1usize..12, seed in any::<u64>()) {
        let mesh = jittered_grid(3.0, n, 0.2, seed);
        let m = assemble_mass(&mesh, &DofLayout::free(&mesh));
        for k in 0..100u64 {
            let v = random_vector(m.dim(), seed ^ k);
            prop_assert!(m.bilinear(&v, &v) > 0.0);
        }
    }

    #[test]
    fn stiffness_is_semidefinite_and_dirichlet_definite(n in 2usize..12, seed in any::<u64>()) {
        let mesh = jittered_grid(2.0, n, 0.2, seed);
        let a = assemble_stiffness(&mesh, &DofLayout::free(&mesh));
        let ad = assemble_stiffness(&mesh, &DofLayout::dirichlet(&mesh));
        for k in 0..20u64 {
            let v = random_vector(a.dim(), seed ^ k);
            prop_assert!(a.bilinear(&v, &v) >= -1e-12);
            let w = random_vector(ad.dim(), seed ^ k);
            prop_assert!(ad.bilinear(&w, &w) > 0.0);
        }
        prop_assert!(a.is_symmetric() && ad.is_symmetric());
    }

    #[test]
    fn galerkin_consistency_for_affine_functions(l in 0.5f64..20.0, n in 1usize..16, seed in any::<u64>()) {
        let mesh = jittered_grid(l, n, 0.2, seed);
        let layout = DofLayout::free(&mesh);
        let a = assemble_stiffness(&mesh, &layout);
        let u = layout.interpolate(&mesh, |p| p[0]);
        let v = layout.interpolate(&mesh, |p| p[1]);
        let area = l * l;
        prop_assert!(a.bilinear(&u, &v).abs() <= 1e-10 * area);
        prop_assert!((a.bilinear(&u, &u) - area).abs() <= 1e-10 * area);
    }

    #[test]
    fn assembly_ignores_triangle_order(n in 1usize..10, seed in any::<u64>()) {
        let mesh = jittered_grid(1.0, n, 0.2, seed);
        let mut order: Vec<usize> = (0..mesh.num_triangles()).collect();
        let mut rng = stream(seed, 2);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let permuted = Mesh::new(
            mesh.nodes.clone(),
            mesh.node_labels.clone(),
            order.iter().map(|&t| mesh.triangles[t]).collect(),
            order.iter().map(|&t| mesh.regions[t]).collect(),
            mesh.boundary_edges.clone(),
        ).unwrap();
        let layout = DofLayout::free(&mesh);
        for (x, y) in [
            (assemble_mass(&mesh, &layout), assemble_mass(&permuted, &layout)),
            (assemble_stiffness(&mesh, &layout), assemble_stiffness(&permuted, &layout)),
        ] {
            for (rx, ry) in x.to_dense().iter().zip(y.to_dense()) {
                for (a, b) in rx.iter().zip(ry) {
                    prop_assert!((a - b).abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn periodic_master_lookup_is_idempotent(l in 0.5f64..50.0, n in 1usize..20) {
        let mesh = generate_square_grid(l, n).unwrap();
        let pmap = periodic_node_map(&mesh, l).unwrap();
        prop_assert_eq!(pmap.reduced_dof_count, n * n);
        for node in 0..mesh.num_nodes() {
            prop_assert_eq!(pmap.master(pmap.master(node)), pmap.master(node));
        }
    }

    #[test]
    fn linear_scheme_is_linear(alpha in -10.0f64..10.0, seed in any::<u64>()) {
        let mesh = generate_square_grid(4.0, 6).unwrap();
        let layout = DofLayout::dirichlet(&mesh);
        let stepper = LinearStepper::new(FemOperators::new(&mesh, layout), 0.05, 0.3).unwrap();
        let n = stepper.ops.num_dofs();
        let u = random_vector(n, seed);
        let w = random_vector(mesh.num_nodes(), seed.wrapping_add(1));
        let field = FeField::Nodal(w.clone());
        let scaled = FeField::Nodal(w.iter().map(|x| alpha * x).collect());
        let au: Vec<f64> = u.iter().map(|x| alpha * x).collect();
        let lhs = stepper.step(&au, &scaled).unwrap();
        let rhs = stepper.step(&u, &field).unwrap();
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - alpha * b).abs() <= 1e-12 * (1.0 + (alpha * b).abs()));
        }
    }

    #[test]
    fn gamma_is_nondecreasing(xi in 1.0f64..4.0, l in 5.0f64..40.0) {
        let series = GammaSeries::new(l, 0.15, Kernel::Gaussian { xi }, 24).unwrap();
        let mut prev = 0.0;
        for i in 0..=50 {
            let g = gamma_analytic(&series, 0.2 * i as f64);
            prop_assert!(g >= prev);
            prev = g;
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn ms_gate_stays_in_unit_box(tau_close in 0.5f64..6.0, sigma in 0.0f64..0.4, dt in 0.01f64..0.4, seed in 0u64..1000) {
        let mesh = generate_square_grid(5.0, 8).unwrap();
        let pmap = periodic_node_map(&mesh, 5.0).unwrap();
        let layout = DofLayout::periodic(&mesh, &pmap);
        let model = Model::Ms(MsParams { nu: 0.03, tau_in: 0.07, tau_out: 0.7, tau_open: 8.0, tau_close, u_gate: 0.13, sigma });
        let stepper = Stepper::new(model, FemOperators::new(&mesh, layout.clone()), dt).unwrap();
        let factor = NoiseFactor::new(&Kernel::Gaussian { xi: 2.0 }, &mesh, NoiseSites::Masters(layout)).unwrap();
        let mut sampler = factor.sampler(stream(seed, 0));
        let mut rng = stream(seed, 1);
        let n = stepper.num_dofs();
        let mut state = ModelState {
            u: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
            v: (0..n).map(|_| rng.random_range(0.0..1.0)).collect(),
            t: 0.0,
        };
        for _ in 0..200 {
            let w = sampler.sample_increment(1.0);
            let field = project_noise(&w, &factor.sites, &mesh).unwrap();
            state = stepper.step(&state, Some(&field)).unwrap();
            prop_assert!(state.v.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
