//! Branches of the reactive cubic `y = y0 + a/(1 + 4y²)` and where up and
//! down sweeps jump.

use tlsheat::perturbative::{critical_nonlinearity, jump_asymptotics, swenson_branch, swenson_folds};
use tlsheat::steady_solver::Direction;

fn main() -> tlsheat::Result<()> {
    println!("bistability needs |a| > {:.6}", critical_nonlinearity());
    let grid: Vec<f64> = (0..=900).map(|i| -3.0 + 0.01 * i as f64).collect();
    let back: Vec<f64> = grid.iter().rev().copied().collect();
    for a in [-0.5, -1.0, -2.0, -5.0] {
        let up = swenson_branch(&grid, a, Direction::Up)?;
        let down = swenson_branch(&back, a, Direction::Down)?;
        let at = |b: &[f64], idx: &[usize]| idx.iter().map(|&i| b[i]).collect::<Vec<_>>();
        println!(
            "a = {a:>5}: folds {:?}, up jumps at y0 {:?}, down jumps at y0 {:?}",
            swenson_folds(a),
            at(&grid, &up.jumps),
            at(&back, &down.jumps)
        );
    }
    for a in [-2.0, -5.0, -20.0] {
        println!("a = {a}: {:?}", jump_asymptotics(a)?);
    }
    Ok(())
}
