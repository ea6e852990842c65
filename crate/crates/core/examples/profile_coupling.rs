//! Timing probe for the metric march at the ensemble resolutions, with an
//! oracle check that the lean domain stays clean over the corrector window.

use hjfront_core::fields::*;
use hjfront_core::metric::*;
use hjfront_core::noise::*;
use std::time::Instant;

fn main() {
    for &eps in &[0.2f64, 0.1, 0.05] {
        let t0 = Instant::now();
        let hy = (eps / 12.0f64).min(0.01);
        let window = eps.powf(-2.0 / 3.0);
        let y_max = 1.1 * window + 1.0;
        let spec = NoiseSpec::new(7, StepLaw::UnitGaussian);
        let noise = sample_noise_with_resolution(&spec, (-2.0, y_max + 2.0), hy).unwrap();
        let params = SimParams::g_equation(eps);
        let adv = AdvectionSpec::pure_shear(1.0);
        let grid = metric_grid((0.0, std::f64::consts::TAU), 1, y_max, hy, false).unwrap();
        let sol = solve_rho(&params, &adv, Some(&noise), grid, 1e-6).unwrap();
        let mut err_window = 0.0f64;
        for j in 0..grid.ny {
            let y = grid.y_at(j);
            if y > window {
                break;
            }
            let oracle = shear_oracle(&noise, eps, 1.0, y).unwrap();
            err_window = err_window.max((sol.rho.get(0, j) - oracle).abs());
        }
        println!(
            "eps={eps}: y_max={y_max:.1} ny={} iters={} time={:.3}s window-err={:.2e} ({:.2} hy)",
            grid.ny,
            sol.iterations,
            t0.elapsed().as_secs_f64(),
            err_window,
            err_window / hy,
        );
    }
}
