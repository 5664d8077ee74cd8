mod common;

use common::dense_generalized_eigenvalues;
use petviashvili::assemble::{assemble_l, assemble_weighted_mass};
use petviashvili::iteration::{iterate, linearized_spectrum, ProblemSpec, StopRule};
use petviashvili::linalg::{
    top_generalized_eigenpairs, top_generalized_eigenpairs_with, EigenConfig,
};
use petviashvili::{InitialGuess, MassKind, Mesh};

fn converged_1d(n: usize) -> (ProblemSpec, petviashvili::Field) {
    let spec = ProblemSpec::new(
        Mesh::interval(-2.0, 2.0, n).unwrap(),
        3.0,
        1.5,
        MassKind::Lumped,
    )
    .unwrap();
    let u0 = InitialGuess::Parabola.evaluate(spec.mesh()).unwrap();
    let stop = StopRule {
        max_steps: 300,
        m_tol: None,
        diff_tol: Some(1e-12),
    };
    let phi = iterate(&u0, &spec, &stop).unwrap().field;
    (spec, phi)
}

#[test]
fn matches_dense_oracle_at_n32() {
    let mesh = Mesh::interval(-2.0, 2.0, 33).unwrap();
    let l = assemble_l(&mesh);
    // Smooth, nonconstant weights with both quadratures.
    let w: Vec<f64> = (0..mesh.n_nodes())
        .map(|i| {
            let x = mesh.node(i)[0];
            3.0 * (2.0 - x.abs()).powi(2) + 0.5 * x.sin()
        })
        .map(f64::abs)
        .collect();
    for kind in [MassKind::Lumped, MassKind::Consistent] {
        let b = assemble_weighted_mass(&mesh, &w, kind).unwrap();
        assert_eq!(l.dim(), 32);
        let oracle = dense_generalized_eigenvalues(&b.to_dense(), &l.to_dense());
        let got = top_generalized_eigenpairs(&b, &l, 5, 1e-12).unwrap();
        for (g, o) in got.eigenvalues.iter().zip(&oracle) {
            assert!((g - o).abs() <= 1e-8, "{kind:?}: {g} vs {o}");
        }
    }
}

#[test]
fn one_dimensional_ground_state_spectrum() {
    let (spec, phi) = converged_1d(400);
    let sp = linearized_spectrum(&phi, &spec, 3, &EigenConfig::default()).unwrap();
    let nu = &sp.eigenvalues;
    assert!((nu[0] - 3.0).abs() < 0.05, "{nu:?}");
    assert!((nu[1] - 0.84).abs() < 0.02, "{nu:?}");
    assert!((nu[2] - 0.38).abs() < 0.03, "{nu:?}");
    assert!(sp.residuals.iter().all(|&r| r < 1e-8));

    // ℒ-orthonormality.
    for i in 0..3 {
        for j in 0..3 {
            let ip = spec.l().bilinear(&sp.eigenvectors[i], &sp.eigenvectors[j]);
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((ip - expect).abs() < 1e-8);
        }
    }

    // ψ₁ is parallel to φ in the ℒ geometry.
    let psi = &sp.eigenvectors[0];
    let cos = spec.l().bilinear(psi, &phi).abs() / spec.h1_norm(&phi);
    assert!(cos.min(1.0).acos() < 1e-4);
}

#[test]
fn deflation_reproduces_leading_pairs() {
    let (spec, phi) = converged_1d(200);
    let cfg = EigenConfig::default();
    let many = linearized_spectrum(&phi, &spec, 6, &cfg).unwrap();
    let few = linearized_spectrum(&phi, &spec, 3, &cfg).unwrap();
    for i in 0..3 {
        assert!((many.eigenvalues[i] - few.eigenvalues[i]).abs() < 1e-8);
    }
    assert!(many.eigenvalues.iter().all(|&v| v >= -1e-10));
    assert!(many.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
}

#[test]
fn identical_pencil_gives_unit_spectrum() {
    let mesh = Mesh::interval(0.0, 1.0, 40).unwrap();
    let l = assemble_l(&mesh);
    let cfg = EigenConfig {
        tol: 1e-10,
        ..Default::default()
    };
    let sp = top_generalized_eigenpairs_with(&l, &l, 4, &cfg).unwrap();
    assert!(sp.eigenvalues.iter().all(|v| (v - 1.0).abs() < 1e-10));
    assert_eq!(sp.seed, cfg.seed);
}
