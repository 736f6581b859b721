use std::f64::consts::PI;

use fracpq::inverse::*;
use fracpq::synthdata::*;
use fracpq::*;

fn grid(n: usize) -> SpatialGrid {
    SpatialGrid::unit(n).unwrap()
}

fn dirichlet_run(source: Source) -> RunSetup {
    let mut run = RunSetup::with_source(source);
    run.u0 = Profile::constant(2.0);
    run.bc_left = BoundaryCondition::dirichlet(2.0);
    run.bc_right = BoundaryCondition::dirichlet(2.0);
    run
}

fn neumann_run(source: Source) -> RunSetup {
    let mut run = RunSetup::with_source(source);
    run.u0 = Profile::constant(1.0);
    run
}

fn template(n_cells: usize, n_steps: usize) -> ProblemTemplate {
    ProblemTemplate::new(
        0.8,
        Nonlinearity::builtin("f4").unwrap(),
        grid(n_cells),
        TimeGrid::new(n_steps, 0.3).unwrap(),
    )
}

fn two_run(mk: fn(Source) -> RunSetup) -> ObservationDesign {
    ObservationDesign::TwoRun([mk(Source::constant(5.0)), mk(Source::affine_in_x(5.0, 5.0))])
}

fn observe(tpl: &ProblemTemplate, design: ObservationDesign, crime: CrimeMode) -> ObservationSet {
    generate_observations(&phantom_p(), &phantom_q(), tpl, design, crime, &SolverOptions::default()).unwrap()
}

#[test]
fn determinant_examples() {
    let g = grid(4);
    let (one, two) = (Field::constant(g, 1.0), Field::constant(g, 2.0));
    let d2 = determinant_field(&one, &two, &Nonlinearity::builtin("f1").unwrap()).unwrap();
    assert!(d2.values().iter().all(|&v| (v + 2.0).abs() < 1e-15));
    let d4 = determinant_field(&one, &two, &Nonlinearity::builtin("f4").unwrap()).unwrap();
    assert!(d4.values().iter().all(|&v| (v + 6.0).abs() < 1e-15));
    let same = Field::from_fn(g, |x| 1.0 + x);
    let d0 = determinant_field(&same, &same, &Nonlinearity::builtin("f2").unwrap()).unwrap();
    assert_eq!(d0.max_abs(), 0.0);
}

#[test]
fn safe_reciprocal_examples() {
    let g = grid(9);
    let (r, mask) = safe_reciprocal(&Field::constant(g, -2.0), 1e-8).unwrap();
    assert!(r.values().iter().all(|&v| v == -0.5));
    assert!(mask.iter().all(|&m| !m));

    let mut det = Field::constant(g, 3.0);
    det.values_mut()[4] = 0.0;
    let (r, mask) = safe_reciprocal(&det, 1e-8).unwrap();
    assert_eq!(r.values()[4], 1e8);
    assert_eq!(mask.iter().filter(|&&m| m).count(), 1);
    assert!(mask[4]);

    assert!(matches!(
        safe_reciprocal(&Field::zeros(g), 1e-8),
        Err(Error::DegenerateObservations { clamped: 10, total: 10 })
    ));
    assert!(safe_reciprocal(&det, 0.0).is_err());
}

#[test]
fn fixed_point_map_hand_example() {
    let g = grid(3);
    let f = Nonlinearity::builtin("f1").unwrap();
    let (g1, g2) = (Field::constant(g, 1.0), Field::constant(g, 2.0));
    let (p, q) = fixed_point_map(&Field::constant(g, 1.0), &Field::constant(g, 4.0), &g1, &g2, &f, 1e-8).unwrap();
    assert!(p.values().iter().all(|&v| (v + 1.0).abs() < 1e-15));
    assert!(q.values().iter().all(|&v| v.abs() < 1e-15));

    let (p, q) = fixed_point_map(&Field::zeros(g), &Field::zeros(g), &g1, &g2, &f, 1e-8).unwrap();
    assert_eq!(p.max_abs(), 0.0);
    assert_eq!(q.max_abs(), 0.0);
}

#[test]
fn fixed_point_map_inverts_the_pointwise_system() {
    let g = grid(50);
    let f = Nonlinearity::builtin("f4").unwrap();
    let g1 = Field::from_fn(g, |x| 1.0 + 0.5 * (3.0 * x).sin());
    let g2 = Field::from_fn(g, |x| 2.5 + x * x);
    let p_star = Field::from_fn(g, |x| 0.2 + (PI * x).cos().powi(2));
    let q_star = Field::from_fn(g, |x| -1.0 + 4.0 * x);
    let res = |gi: &Field| {
        Field::from_fn(g, |x| {
            let j = (x * 50.0).round() as usize;
            let v = gi.values()[j];
            q_star.values()[j] * v - p_star.values()[j] * f.value(v)
        })
    };
    let (r1, r2) = (res(&g1), res(&g2));
    let (p, q) = fixed_point_map(&r1, &r2, &g1, &g2, &f, 1e-8).unwrap();
    for j in 0..=50 {
        assert!((p.values()[j] - p_star.values()[j]).abs() < 1e-12);
        assert!((q.values()[j] - q_star.values()[j]).abs() < 1e-12);
        // Substituting back reproduces both residuals.
        for (gi, ri) in [(&g1, &r1), (&g2, &r2)] {
            let v = gi.values()[j];
            let back = q.values()[j] * v - p.values()[j] * f.value(v);
            assert!((back - ri.values()[j]).abs() < 1e-12);
        }
    }
    // Swapping the two observations leaves the solution unchanged.
    let (ps, qs) = fixed_point_map(&r2, &r1, &g2, &g1, &f, 1e-8).unwrap();
    assert!(ps.sub(&p).unwrap().max_abs() < 1e-12);
    assert!(qs.sub(&q).unwrap().max_abs() < 1e-12);
}

#[test]
fn step_size_cases() {
    let g = grid(4);
    let (p, q) = (Field::zeros(g), Field::zeros(g));
    let (dp, dq) = (Field::constant(g, 1.0), Field::zeros(g));
    // misfit(mu) = |mu - 0.2|, baseline 0.2: mu = 1 fails, 0.5 fails (0.3), 0.25 passes (0.05).
    let misfit = |p: &Field, _: &Field| Ok((p.values()[0] - 0.2).abs());
    assert_eq!(step_size(misfit, (&p, &q), (&dp, &dq), 0.2, 0.5, 6).unwrap(), 0.25);
    assert_eq!(step_size(|_: &Field, _: &Field| Ok(0.0), (&p, &q), (&dp, &dq), 1.0, 0.5, 6).unwrap(), 1.0);
    let mut calls = 0;
    let err = step_size(
        |_: &Field, _: &Field| {
            calls += 1;
            Ok(2.0)
        },
        (&p, &q),
        (&dp, &dq),
        1.0,
        0.5,
        6,
    )
    .unwrap_err();
    assert!(matches!(err, Error::StepsizeFailure { ell_max: 6 }));
    assert_eq!(calls, 7);
    assert!(step_size(misfit, (&p, &q), (&dp, &dq), 0.2, 1.0, 6).is_err());
}

#[test]
fn residual_vanishes_for_trivial_problem() {
    let g = grid(10);
    let tg = TimeGrid::new(10, 0.3).unwrap();
    let spec = ProblemSpec::homogeneous(g, tg, 0.5, Nonlinearity::builtin("f1").unwrap());
    let traj = solve_ibvp(&spec).unwrap();
    let op = assemble(&spec.diffusivity, &spec.potential, &spec.bc_left, &spec.bc_right).unwrap();
    let res = residual_two_run(&traj, &Source::zero(), &Field::zeros(g), &op).unwrap();
    assert_eq!(res.max_abs(), 0.0);
    let res = residual_two_time(&traj, &Source::zero(), &Field::zeros(g), 0.1, &op).unwrap();
    assert_eq!(res.max_abs(), 0.0);
}

fn residual_identity_error(design: ObservationDesign) -> f64 {
    let tpl = template(60, 120);
    let (pa, qa) = make_phantoms(&tpl.space_grid);
    let f = tpl.nonlinearity.clone();
    let (runs, times): (Vec<RunSetup>, Vec<f64>) = match &design {
        ObservationDesign::TwoRun(r) => (r.to_vec(), vec![0.3, 0.3]),
        ObservationDesign::TwoTime { run, t1, t2 } => (vec![run.clone(), run.clone()], vec![*t1, *t2]),
    };
    let mut worst = 0.0f64;
    for (run, t) in runs.iter().zip(times) {
        let spec = tpl.instantiate(run, pa.clone(), qa.clone());
        let traj = solve_ibvp(&spec).unwrap();
        let op = assemble(&spec.diffusivity, &spec.potential, &spec.bc_left, &spec.bc_right).unwrap();
        let (m, _) = spec.time_grid.nearest_level(t);
        let g = traj.state(m).clone();
        let res = residual_two_time(&traj, &run.source, &g, t, &op).unwrap();
        for j in 1..60 {
            let v = g.values()[j];
            let expected = qa.values()[j] * v - pa.values()[j] * f.value(v);
            worst = worst.max((res.values()[j] - expected).abs() / (1.0 + expected.abs()));
        }
    }
    worst
}

#[test]
fn residual_equals_reaction_term_at_actual_coefficients() {
    assert!(residual_identity_error(two_run(dirichlet_run)) < 1e-9);
    let design = ObservationDesign::TwoTime {
        run: dirichlet_run(Source::constant(5.0)),
        t1: 0.05,
        t2: 0.3,
    };
    assert!(residual_identity_error(design) < 1e-9);
}

#[test]
fn residual_of_manufactured_solution() {
    // u* = (1 + t^2) sin(pi x), alpha = 0.5, f = u^2, p = q = 1.
    let alpha = 0.5;
    let err = |n: usize| {
        let g = grid(n);
        let tg = TimeGrid::new(n, 1.0).unwrap();
        let mut spec = ProblemSpec::homogeneous(g, tg, alpha, Nonlinearity::builtin("f1").unwrap());
        spec.bc_left = BoundaryCondition::dirichlet(0.0);
        spec.bc_right = BoundaryCondition::dirichlet(0.0);
        spec.p = Field::constant(g, 1.0);
        spec.q = Field::constant(g, 1.0);
        spec.u0 = Field::from_fn(g, |x| (PI * x).sin());
        let c = 2.0 / libm::tgamma(3.0 - alpha);
        let source = Source::new(move |t, x| {
            let s = (PI * x).sin();
            let a = 1.0 + t * t;
            c * t.powf(2.0 - alpha) * s + PI * PI * a * s - a * s + a * a * s * s
        });
        spec.source = source.clone();
        let traj = solve_ibvp(&spec).unwrap();
        let op = assemble(&spec.diffusivity, &spec.potential, &spec.bc_left, &spec.bc_right).unwrap();
        let u_star = Field::from_fn(g, |x| 2.0 * (PI * x).sin());
        let res = residual_two_run(&traj, &source, &u_star, &op).unwrap();
        (1..n)
            .map(|j| {
                let v = u_star.values()[j];
                (res.values()[j] - (v - v * v)).abs()
            })
            .fold(0.0f64, f64::max)
    };
    let (e1, e2, e3) = (err(16), err(32), err(64));
    assert!(e1 > e2 && e2 > e3, "{e1} {e2} {e3}");
    assert!(e3 < 0.05, "{e3}");
}

#[test]
fn fixed_point_consistency_on_the_inversion_grid() {
    let tpl = template(100, 300);
    let obs = observe(&tpl, two_run(dirichlet_run), CrimeMode::SameGrid);
    let eng = Reconstructor::new(&obs, &tpl, ReconstructionOptions::default()).unwrap();
    let (pa, qa) = make_phantoms(&tpl.space_grid);
    let (tp, tq) = eng.apply_map(&pa, &qa).unwrap();
    let dist = eng.interior_norm(&tp.sub(&pa).unwrap(), &tq.sub(&qa).unwrap());
    assert!(dist <= 1e-7, "{dist}");
}

#[test]
fn starting_at_the_truth_stops_immediately() {
    let tpl = template(60, 120);
    let obs = observe(&tpl, two_run(neumann_run), CrimeMode::SameGrid);
    let (pa, qa) = make_phantoms(&tpl.space_grid);
    let rec = reconstruct(&obs, &tpl, (pa.clone(), qa.clone()), ReconstructionOptions::default(), Some((&pa, &qa))).unwrap();
    assert_eq!(rec.records.len(), 1);
    assert_eq!(rec.stop, StopReason::Converged);
    let first = &rec.records[0];
    assert!(first.increment_norm <= 1e-7, "{}", first.increment_norm);
    assert!(first.rel_err_p.unwrap() < 1e-7);
}

#[test]
fn large_tolerance_gives_a_single_record() {
    let tpl = template(50, 100);
    let obs = observe(&tpl, two_run(dirichlet_run), CrimeMode::Refined2x);
    let g = tpl.space_grid;
    let opts = ReconstructionOptions {
        tol: 1e6,
        ..ReconstructionOptions::default()
    };
    let rec = reconstruct(&obs, &tpl, (Field::zeros(g), Field::zeros(g)), opts, None).unwrap();
    assert_eq!(rec.records.len(), 1);
    assert_eq!(rec.stop, StopReason::Converged);
    assert!(rec.records[0].rel_err_p.is_none());
}

#[test]
fn reconstruction_decreases_misfit_and_error() {
    let tpl = template(100, 300);
    let obs = observe(&tpl, two_run(dirichlet_run), CrimeMode::Refined2x);
    let g = tpl.space_grid;
    let (pa, qa) = make_phantoms(&g);
    let opts = ReconstructionOptions {
        k_max: 6,
        tol: 0.0,
        ..ReconstructionOptions::default()
    };
    let rec = reconstruct(&obs, &tpl, (Field::zeros(g), Field::zeros(g)), opts, Some((&pa, &qa))).unwrap();
    assert_eq!(rec.records.len(), 6);
    let mut last = rec.initial_misfit;
    for r in &rec.records {
        assert!(r.misfit <= last);
        assert!(r.mu > 0.0 && r.mu <= 1.0);
        last = r.misfit;
    }
    let (first, sixth) = (&rec.records[0], &rec.records[5]);
    assert!(first.rel_err_p.unwrap() >= 10.0 * sixth.rel_err_p.unwrap());
    assert!(first.rel_err_q.unwrap() >= 10.0 * sixth.rel_err_q.unwrap());
}

#[test]
fn swapping_runs_gives_the_same_iterates() {
    let tpl = template(50, 100);
    let g = tpl.space_grid;
    let a = observe(&tpl, two_run(dirichlet_run), CrimeMode::SameGrid);
    let ObservationDesign::TwoRun([r1, r2]) = a.design.clone() else {
        unreachable!()
    };
    let b = ObservationSet::new(ObservationDesign::TwoRun([r2, r1]), a.g2.clone(), a.g1.clone(), &tpl).unwrap();
    let opts = ReconstructionOptions {
        k_max: 3,
        tol: 0.0,
        ..ReconstructionOptions::default()
    };
    let init = (Field::zeros(g), Field::zeros(g));
    let ra = reconstruct(&a, &tpl, init.clone(), opts.clone(), None).unwrap();
    let rb = reconstruct(&b, &tpl, init, opts, None).unwrap();
    for (x, y) in ra.records.iter().zip(&rb.records) {
        assert!(x.p.sub(&y.p).unwrap().max_abs() < 1e-9);
        assert!(x.q.sub(&y.q).unwrap().max_abs() < 1e-9);
    }
}

#[test]
fn identical_observations_are_degenerate() {
    let tpl = template(20, 20);
    let g = Field::constant(tpl.space_grid, 1.5);
    let obs = ObservationSet::new(two_run(dirichlet_run), g.clone(), g, &tpl).unwrap();
    assert!(matches!(
        Reconstructor::new(&obs, &tpl, ReconstructionOptions::default()),
        Err(Error::DegenerateObservations { .. })
    ));
}

#[test]
fn two_time_design_requires_ordered_times() {
    let tpl = template(20, 20);
    let g = Field::constant(tpl.space_grid, 1.5);
    let design = ObservationDesign::TwoTime {
        run: dirichlet_run(Source::constant(5.0)),
        t1: 0.3,
        t2: 0.1,
    };
    assert!(ObservationSet::new(design, g.clone(), g, &tpl).is_err());
}

#[test]
fn contraction_probe_reports_ratios() {
    let tpl = template(50, 100);
    let obs = observe(&tpl, two_run(dirichlet_run), CrimeMode::SameGrid);
    let (pa, qa) = make_phantoms(&tpl.space_grid);
    let report = contraction_probe(&obs, &tpl, (&pa, &qa), 0.1, 4, 3, ReconstructionOptions::default()).unwrap();
    assert_eq!(report.ratios.len() + report.failures, 4);
    assert!(report.worst().unwrap() < 1.0);
    assert!(report.median().unwrap() <= report.worst().unwrap());
    assert!(contraction_probe(&obs, &tpl, (&pa, &qa), 0.0, 4, 3, ReconstructionOptions::default()).is_err());
}

#[test]
fn refined_data_differs_from_same_grid_data_at_discretization_level() {
    let diff = |n: usize, m: usize| {
        let tpl = template(n, m);
        let a = observe(&tpl, two_run(dirichlet_run), CrimeMode::SameGrid);
        let b = observe(&tpl, two_run(dirichlet_run), CrimeMode::Refined2x);
        b.g1.sub(&a.g1).unwrap().max_abs()
    };
    let (coarse, fine) = (diff(25, 75), diff(50, 150));
    assert!(coarse > 0.0 && fine > 0.0);
    assert!(fine < coarse, "{coarse} {fine}");
    assert!(coarse < 1e-2, "{coarse}");
}

#[test]
fn discrepancy_form_agrees_with_fixed_point_form() {
    let tpl = template(50, 100);
    let g = tpl.space_grid;
    let obs = observe(&tpl, two_run(dirichlet_run), CrimeMode::Refined2x);
    let run = |update| {
        let opts = ReconstructionOptions {
            k_max: 3,
            tol: 0.0,
            update,
            ..ReconstructionOptions::default()
        };
        reconstruct(&obs, &tpl, (Field::zeros(g), Field::zeros(g)), opts, None).unwrap()
    };
    let (a, b) = (run(UpdateForm::FixedPoint), run(UpdateForm::Discrepancy));
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!(x.p.sub(&y.p).unwrap().max_abs() < 1e-6 * (1.0 + x.p.max_abs()));
        assert!(x.q.sub(&y.q).unwrap().max_abs() < 1e-6 * (1.0 + x.q.max_abs()));
    }
}
