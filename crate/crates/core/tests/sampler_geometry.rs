use lego::samplers::{draw, SamplerKind};
use lego::worlds::{wall_layout, Config, GapClass, PlanningProblem, World};

fn corner_problem(w: &World) -> PlanningProblem<'_> {
    let free = |x: f64| {
        (0..100)
            .map(|j| Config::new(vec![x, j as f64 / 100.0]).unwrap())
            .find(|q| w.config_free_raw(q.coords()))
            .unwrap()
    };
    PlanningProblem::new(free(0.01), free(0.99), w).unwrap()
}

/// Bridge midpoints sit in a gap or squeezed between two wall pieces.
#[test]
fn bridge_samples_concentrate_in_narrow_regions() {
    let (mut near, mut total) = (0, 0);
    for seed in 0..10 {
        let layout = wall_layout(seed, GapClass::Small, 4).unwrap();
        let w = World::new(lego::worlds::Kinematics::PointRobot2D, layout.obstacles(), seed).unwrap();
        let prob = corner_problem(&w);
        let d = draw(&SamplerKind::Bridge { sigma: 0.05 }, &w, &prob, 100, 5000, seed).unwrap();
        let gaps: Vec<_> = layout.walls.iter().map(|wall| wall.gap_rect()).collect();
        for q in &d.samples {
            let p = [q.coords()[0], q.coords()[1]];
            let in_gap = gaps.iter().any(|g| g.distance_to(p) <= 0.05);
            let squeezed = w.obstacles().iter().filter(|r| r.distance_to(p) <= 0.05).count() >= 2;
            near += usize::from(in_gap || squeezed);
            total += 1;
        }
    }
    assert!(total > 0);
    assert!(near as f64 >= 0.8 * total as f64, "{near} of {total}");
}

#[test]
fn heuristic_draws_are_deterministic() {
    let layout = wall_layout(4, GapClass::Medium, 3).unwrap();
    let w = World::new(lego::worlds::Kinematics::PointRobot2D, layout.obstacles(), 4).unwrap();
    let prob = corner_problem(&w);
    for kind in [SamplerKind::GaussianNearObstacle { sigma: 0.05 }, SamplerKind::Bridge { sigma: 0.05 }] {
        let a = draw(&kind, &w, &prob, 40, 5000, 9).unwrap();
        let b = draw(&kind, &w, &prob, 40, 5000, 9).unwrap();
        assert_eq!(a.samples, b.samples);
    }
}
