//! Initial parameter guess from hull dimensions.

use shipid::estimation::{hydrodynamic_derivatives, init_params_empirical, HullSpecs};

fn main() -> shipid::Result<()> {
    let specs = HullSpecs::qiuxin_no5();
    let h = hydrodynamic_derivatives(&specs)?;
    let p = init_params_empirical(&specs)?;
    println!("X_udot = {:.4}", h.x_udot);
    println!("Y_vdot = {:.4}", h.y_vdot);
    println!("N_rdot = {:.4}", h.n_rdot);
    println!("I_z    = {:.4}", h.i_z);
    println!("M =\n{:.4}", p.mass_matrix());
    Ok(())
}
