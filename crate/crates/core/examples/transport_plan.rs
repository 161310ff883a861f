// Solve a small transport problem on a 3x3 grid and inspect the plan, its
// dual certificate and the per-route work.
//
//     cargo run --example transport_plan

use std::path::Path;

use wlia::ot::work_matrix;
use wlia::{build_grid_cost, solve_transport, DensityVector};

pub fn run(_out: &Path) -> wlia::Result<()> {
    let cost = build_grid_cost(3)?;
    // All mass in the top-left corner, spread to a uniform grid.
    let source = DensityVector::new(vec![9.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])?;
    let target = DensityVector::uniform(9, 1.0)?;
    let plan = solve_transport(&source, &target, &cost)?;

    println!("W1 = {:.6} after {} pivots", plan.objective(), plan.pivots());
    println!("positive cells: {} (at most {})", plan.basis_size(), 2 * 9 - 1);
    for i in 0..9 {
        for j in 0..9 {
            if plan.get(i, j) > 0.0 {
                println!("  {i} -> {j}: mass {:.3}, distance {:.3}", plan.get(i, j), cost.get(i, j));
            }
        }
    }

    let (phi, psi) = plan.duals();
    let dual: f64 = phi.iter().zip(source.masses()).map(|(p, m)| p * m).sum::<f64>()
        + psi.iter().zip(target.masses()).map(|(p, m)| p * m).sum::<f64>();
    println!("dual objective = {dual:.6}");

    let work = work_matrix(&plan, &cost)?;
    println!("work total = {:.6}", work.total());
    Ok(())
}

#[allow(dead_code)]
fn main() -> wlia::Result<()> {
    run(Path::new("."))
}
