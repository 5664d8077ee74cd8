mod common;

use common::load_mesh;
use petviashvili::iteration::{iterate, ProblemSpec, StopRule};
use petviashvili::mesh::PointLocator;
use petviashvili::{Field, InitialGuess, MassKind};

#[test]
fn shipped_meshes_are_consistent() {
    for stem in ["right_triangle_coarse", "right_triangle_fine"] {
        let mesh = load_mesh(stem);
        assert!(mesh.n_elements() >= 2000);
        assert!((mesh.total_measure() - 0.5).abs() < 1e-12);
        let masked = mesh.boundary_mask().iter().filter(|&&b| b).count();
        assert_eq!(mesh.n_interior(), mesh.n_nodes() - masked);
        assert!(mesh.marker_mismatches().is_empty());
    }
}

#[test]
fn gaussian_start_converges_to_a_positive_state() {
    let solve = |stem: &str| {
        let spec = ProblemSpec::with_gamma_star(load_mesh(stem), 3.0, MassKind::Lumped).unwrap();
        let u0 = InitialGuess::default_gaussian()
            .evaluate(spec.mesh())
            .unwrap();
        let stop = StopRule {
            max_steps: 300,
            m_tol: None,
            diff_tol: Some(1e-10),
        };
        let out = iterate(&u0, &spec, &stop).unwrap();
        assert!((out.final_m() - 1.0).abs() < 1e-8);
        assert!(out.field.iter().all(|&v| v > 0.0));
        (spec, out.field)
    };
    let (coarse_spec, coarse) = solve("right_triangle_coarse");
    let (fine_spec, fine) = solve("right_triangle_fine");

    let (nc, nf) = (coarse_spec.h1_norm(&coarse), fine_spec.h1_norm(&fine));
    assert!((nc - nf).abs() / nf < 1e-2);

    // Pointwise comparison on the fine mesh: the gap is the O(h) P1 error.
    let locator = PointLocator::new(coarse_spec.mesh());
    let nodal = coarse_spec.mesh().expand(&coarse);
    let mesh = fine_spec.mesh();
    let interp = Field::new(
        mesh.interior_nodes()
            .iter()
            .map(|&i| locator.evaluate(&nodal, mesh.node(i)).unwrap())
            .collect(),
    );
    let gap = fine_spec.h1_norm(&interp.sub(&fine)) / nf;
    assert!(gap < 0.05, "{gap}");

    // The peak lies inside, away from the edges.
    let (imax, _) = fine
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
    let p = mesh.node(mesh.interior_node(imax));
    assert!(p[0] > 0.1 && p[1] > 0.1 && p[0] + p[1] < 0.9);
}
