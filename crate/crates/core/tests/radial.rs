use petviashvili::iteration::{
    compute_m, energy, iterate, linearized_spectrum, petviashvili_step, ProblemSpec, StopRule,
};
use petviashvili::linalg::EigenConfig;
use petviashvili::shooting::{
    find_excited_state, first_bracket, ground_state, scan, sign_changes, slope_mismatch,
    MismatchConvention, RadialProblem,
};
use petviashvili::{Field, InitialGuess, MassKind, Mesh};

#[test]
fn radial_ground_state() {
    let spec =
        ProblemSpec::with_gamma_star(Mesh::radial(25.0, 500).unwrap(), 3.0, MassKind::Lumped)
            .unwrap();
    let u0 = InitialGuess::RadialParabola.evaluate(spec.mesh()).unwrap();
    let out = iterate(&u0, &spec, &StopRule::default()).unwrap();
    assert!((out.final_m() - 1.0).abs() < 1e-8);
    let phi = &out.field;
    assert!(phi.iter().all(|&v| v > 0.0));
    assert!((phi[0] - 2.21).abs() < 0.01, "{}", phi[0]);
    let sp = linearized_spectrum(phi, &spec, 4, &EigenConfig::default()).unwrap();
    assert_eq!(sp.eigenvalues.iter().filter(|&&v| v > 1.0).count(), 1);
    assert!((sp.eigenvalues[0] - 3.0).abs() < 1e-3);
}

#[test]
fn excited_state_by_shooting() {
    let problem = RadialProblem::new(25.0, 3.0);
    let table = scan(&problem, &problem.default_scan_grid()).unwrap();
    assert!(table.iter().all(|(_, f)| f.is_finite() && f.abs() < 100.0));
    let bracket = first_bracket(&table).unwrap();
    let glued = find_excited_state(&problem, bracket, 1e-6).unwrap();
    assert!(glued.mismatch.abs() <= 1e-6);
    assert_eq!(glued.sign_changes(), 1);
    assert!(glued.inner.field.iter().all(|&v| v > 0.0));
    assert!(glued.outer.field.iter().all(|&v| v > 0.0));
    assert_eq!(*glued.inner.nodal.last().unwrap(), 0.0);

    let full = glued.full_spec(&problem).unwrap();
    assert!((compute_m(&glued.glued, &full).unwrap() - 1.0).abs() < 1e-3);
    let sp = linearized_spectrum(&glued.glued, &full, 4, &EigenConfig::default()).unwrap();
    assert!(
        sp.eigenvalues.iter().filter(|&&v| v > 1.0).count() >= 2,
        "{:?}",
        sp.eigenvalues
    );

    let ground = ground_state(&problem, 500).unwrap();
    let gspec = ProblemSpec::with_gamma_star(ground.mesh.clone(), 3.0, MassKind::Lumped).unwrap();
    assert!(energy(&glued.glued, &full).unwrap() > energy(&ground.field, &gspec).unwrap());
}

#[test]
fn glued_state_residual_refines() {
    let mut problem = RadialProblem::new(25.0, 3.0);
    problem.n_cells_per_side = 500;
    let glued = find_excited_state(&problem, (1.0, 1.5), 1e-6).unwrap();
    let full = glued.full_spec(&problem).unwrap();
    let step = petviashvili_step(&glued.glued, &full).unwrap();
    let residual = full.h1_norm(&step.sub(&glued.glued)) / full.h1_norm(&glued.glued);
    assert!(residual < 1e-3, "{residual}");
}

#[test]
fn literal_convention_differs_by_sign_of_outer_slope() {
    let problem = RadialProblem::new(25.0, 3.0);
    let mut literal = problem.clone();
    literal.convention = MismatchConvention::Literal;
    let r0 = 3.0;
    let glued = slope_mismatch(r0, &problem).unwrap();
    let lit = slope_mismatch(r0, &literal).unwrap();
    // inner' < 0 and outer' > 0 at r0, so the literal form is the more negative one.
    assert!(lit < glued);
}

#[test]
fn full_domain_iteration_falls_to_the_ground_state() {
    let spec =
        ProblemSpec::with_gamma_star(Mesh::radial(25.0, 500).unwrap(), 3.0, MassKind::Lumped)
            .unwrap();
    // Sign-changing start with one node near r = 1.25.
    let u0 = Field::from_fn(spec.mesh(), |x| {
        (1.25 - x[0]) * (25.0 - x[0]) * (-0.2 * x[0]).exp()
    });
    assert_eq!(sign_changes(&u0), 1);
    let out = iterate(
        &u0,
        &spec,
        &StopRule {
            max_steps: 500,
            ..Default::default()
        },
    )
    .unwrap();
    let phi = &out.field;
    assert!((out.final_m() - 1.0).abs() < 1e-8);
    let sign = phi[0].signum();
    assert!(
        phi.iter().all(|&v| v * sign >= 0.0),
        "converged state changes sign"
    );
    let ground = ground_state(&RadialProblem::new(25.0, 3.0), 500).unwrap();
    let gap = spec.h1_norm(&phi.scaled(sign).sub(&ground.field)) / spec.h1_norm(&ground.field);
    assert!(gap < 1e-4, "{gap}");
}
