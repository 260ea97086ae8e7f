use freebound::grid::{Grid2D, ScalarField};
use freebound::obstacle::*;
use freebound::Vec2;
use std::time::Instant;

fn main() {
    for spacing in [1.0 / 128.0, 1.0 / 256.0] {
        let g = Grid2D::centered(1.0, spacing).unwrap();
        let problem = ObstacleProblem {
            flavor: Flavor::PlanarLog,
            h: ScalarField::from_fn(g, |p: Vec2| -0.5 * p.norm2()),
            far_field: FarField::Mass(1.0),
            rho: 1.0,
            params: SolverParams::default(),
        };
        let t0 = Instant::now();
        let sol = solve_obstacle(&problem).unwrap();
        let cold = t0.elapsed().as_secs_f64();
        let mut p2 = problem.clone();
        p2.h = ScalarField::from_fn(problem.h.grid.clone(), |p: Vec2| -0.5 * p.norm2() * 1.02);
        let t1 = Instant::now();
        let _s2 = solve_obstacle_warm(&p2, Some(&sol)).unwrap();
        let warm = t1.elapsed().as_secs_f64();
        println!(
            "spacing 1/{:.0}: cold {:.2}s ({} sweeps, {} outer) warm {:.2}s   mass {:.8} residual {:.2e}",
            1.0 / spacing, cold, sol.sweeps, sol.outer_iters, warm, sol.mass, sol.residual
        );
    }
}
