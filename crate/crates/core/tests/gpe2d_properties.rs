use ringsense::gpe2d::{
    solve_radial_eigenstate, ComplexField2D, Grid2D, PropagationConfig, Propagator, RadialGrid, RingSystem,
    RotationOperator, Scheme,
};
use ringsense::modes::{mode_field, prepare_superposition, ModeBasis, RadialProfile};

const R: f64 = 5.0;

fn profile(g: f64) -> RadialProfile {
    solve_radial_eigenstate(1, R, g, RadialGrid::covering(R, 10.0, 0.02).unwrap(), &Default::default()).unwrap()
}

fn propagator(sys: &RingSystem, dt: f64, scheme: Scheme) -> Propagator {
    let cfg = PropagationConfig { dt, scheme, ..Default::default() };
    Propagator::new(sys.grid, &sys.potential, sys.g2d, &cfg).unwrap()
}

fn max_density_difference(a: &ComplexField2D, b: &ComplexField2D) -> f64 {
    a.values.iter().zip(&b.values).map(|(x, y)| (x.norm_sqr() - y.norm_sqr()).abs()).fold(0.0, f64::max)
}

#[test]
fn norm_is_conserved_per_step_and_over_a_million_steps() {
    let grid = Grid2D::square(32, 24.0).unwrap();
    let sys = RingSystem::new(grid, R, 4.0).unwrap();
    let mut psi = prepare_superposition(0.7, 0.3, &profile(4.0), grid, 0.0).unwrap();
    let mut prop = propagator(&sys, 1e-3, Scheme::RealTime);
    let n0 = psi.norm_sqr();
    let mut prev = n0;
    let mut worst_step = 0.0f64;
    for _ in 0..1_000_000 {
        prop.step(&mut psi).unwrap();
        let n = psi.norm_sqr();
        worst_step = worst_step.max((n - prev).abs());
        prev = n;
    }
    assert!(worst_step <= 1e-10, "per-step norm change {worst_step:e}");
    assert!((prev - n0).abs() <= 1e-4, "cumulative norm change {:e}", prev - n0);
}

#[test]
fn energy_drift_over_1e5_steps() {
    let grid = Grid2D::square(48, 24.0).unwrap();
    let sys = RingSystem::new(grid, R, 1.0).unwrap();
    let mut psi = prepare_superposition(0.7, 0.3, &profile(1.0), grid, 0.0).unwrap();
    let mut prop = propagator(&sys, 1e-3, Scheme::RealTime);
    let e0 = sys.energy(&psi);
    let mut worst = 0.0f64;
    for k in 1..=100_000 {
        prop.step(&mut psi).unwrap();
        if k % 500 == 0 {
            worst = worst.max(((sys.energy(&psi) - e0) / e0).abs());
        }
    }
    assert!(worst <= 1e-6, "relative energy drift {worst:e}");
}

#[test]
fn relaxed_eigenstate_is_stationary_for_t_100() {
    let grid = Grid2D::square(48, 24.0).unwrap();
    let sys = RingSystem::new(grid, R, 1.0).unwrap();
    let mut psi = mode_field(&profile(1.0), 1, grid).unwrap();
    let mut coarse = propagator(&sys, 2e-2, Scheme::ImaginaryTime);
    for _ in 0..10_000 {
        coarse.step(&mut psi).unwrap();
    }
    let mut fine = propagator(&sys, 1e-3, Scheme::ImaginaryTime);
    for _ in 0..20_000 {
        fine.step(&mut psi).unwrap();
    }
    psi.time = 0.0;
    let start = psi.clone();
    let mut prop = propagator(&sys, 1e-3, Scheme::RealTime);
    for _ in 0..100_000 {
        prop.step(&mut psi).unwrap();
    }
    let diff = max_density_difference(&start, &psi);
    assert!(diff <= 1e-6, "L∞ density change {diff:e}");
}

#[test]
fn halving_dt_quarters_the_error() {
    let grid = Grid2D::square(48, 24.0).unwrap();
    let sys = RingSystem::new(grid, R, 4.0).unwrap();
    let psi0 = prepare_superposition(0.7, 0.3, &profile(4.0), grid, 0.3).unwrap();
    let run = |dt: f64| {
        let mut psi = psi0.clone();
        let mut prop = propagator(&sys, dt, Scheme::RealTime);
        for _ in 0..(1.0 / dt).round() as usize {
            prop.step(&mut psi).unwrap();
        }
        psi
    };
    let dt = 0.02;
    let reference = run(dt / 8.0);
    let e1 = run(dt).l2_distance(&reference).unwrap();
    let e2 = run(dt / 2.0).l2_distance(&reference).unwrap();
    let ratio = e1 / e2;
    // 4.2 once the reference's own error is accounted for
    assert!((3.5..4.7).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn rotation_is_unitary() {
    let grid = Grid2D::square(64, 24.0).unwrap();
    let mut psi = prepare_superposition(0.6, 0.4, &profile(0.0), grid, 0.0).unwrap();
    let mut rot = RotationOperator::new(grid);
    let mut prev = psi.norm_sqr();
    for k in 0..200 {
        rot.rotate(&mut psi.values, 0.013 * (k as f64 - 100.0));
        let n = psi.norm_sqr();
        assert!((n - prev).abs() <= 1e-8);
        prev = n;
    }
}

#[test]
fn parity_selection_and_truncation_completeness() {
    let g = 4.0;
    let grid = Grid2D::square(96, 24.0).unwrap();
    let sys = RingSystem::new(grid, R, g).unwrap();
    let f = profile(g);
    let mut psi = prepare_superposition(0.7, 0.3, &f, grid, 0.4).unwrap();
    let even = ModeBasis::new(&f, grid, &[0, 2, -2, 4, -4]).unwrap();
    let odd = ModeBasis::four_state(&f, grid).unwrap();
    let mut prop = propagator(&sys, 2e-3, Scheme::RealTime);
    let mut worst_even = 0.0f64;
    let mut worst_missing = 0.0f64;
    for k in 0..=20_000 {
        if k > 0 {
            prop.step(&mut psi).unwrap();
        }
        if k % 1000 == 0 {
            let e = even.project(&psi).unwrap();
            worst_even = [0, 2, -2, 4, -4].iter().map(|&l| e.population(l)).fold(worst_even, f64::max);
            worst_missing = worst_missing.max(1.0 - odd.project(&psi).unwrap().total_population());
        }
    }
    assert!(worst_even <= 1e-10, "even-l population {worst_even:e}");
    assert!(worst_missing <= 1e-3, "population outside ±1, ±3: {worst_missing:e}");
}
