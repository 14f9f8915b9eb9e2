use cmc_gluing::assembler::*;
use cmc_gluing::defect::LatticeSolver;
use cmc_gluing::lattice::{build_configuration, ParamVector, Resolution};
use std::collections::BTreeMap;
use std::time::Instant;

fn main() {
    let mut f = BTreeMap::new();
    f.insert(1, vec![0]);
    let res = Resolution { n_around: 48, sphere_rows: 40, neck_inner: 16, modes: 6 };
    let config = build_configuration(1, 2, &f, 0.15, 0.02, 0.5, res).unwrap();
    let mut solver = LatticeSolver::new(config);
    let t0 = Instant::now();
    solve_background(&mut solver, 1e-10).unwrap();
    println!("background {:?}: beta {:.5}, c {:.4e}, rho_y {:.3e}", t0.elapsed(), solver.beta_tau, solver.bg_offset, solver.bg_rho_y);
    let opts = BreakOptions::default();
    let t0 = Instant::now();
    let st0 = solve_symmetry_breaking(&solver, &ParamVector::zero(), &opts).unwrap();
    println!("v=0 in {:?}: e sup {:.2e} hist {:?}", t0.elapsed(), st0.e.sup_norm(), st0.residual_history.iter().map(|v| format!("{:.1e}", v)).collect::<Vec<_>>());
    let mut v = ParamVector::zero();
    v.tau_h.insert((0, 0), 0.01);
    let t0 = Instant::now();
    match solve_symmetry_breaking(&solver, &v, &opts) {
        Ok(st) => {
            println!("v!=0 in {:?}: hist {:?}", t0.elapsed(), st.residual_history.iter().map(|x| format!("{:.2e}", x)).collect::<Vec<_>>());
            println!("  phi_v (i=0): {:?}", st.e.phi_v.iter().filter(|((i,_),_)| *i==0).map(|((_,j),v)| format!("j{j}:{:.2e}", v)).collect::<Vec<_>>());
            println!("  tau_v (i=0): {:?}", st.e.tau_v.iter().filter(|((i,_),_)| *i==0).map(|((_,j),v)| format!("j{j}:{:.2e}", v)).collect::<Vec<_>>());
            let err = translational_error(&solver, &st.solves, &BranchMotion::zero(1)).unwrap();
            println!("  E = {:?}", err.per_neck);
            // Where does the residual stall?
            let basis = SymmetricBasis::build(&solver);
            let bg = solver.eval_lambda(&ParamVector::zero()).unwrap();
            let r0 = basis.readout(&solver, &bg.capital);
            let xi = st.v.add_scaled(&st.e, 1.0);
            let val = solver.eval_lambda(&xi).unwrap();
            let r = basis.readout(&solver, &val.capital);
            let mut rows: Vec<(f64, usize)> = r.iter().zip(&r0).enumerate().map(|(k, (a, b))| ((a - b).abs(), k)).collect();
            rows.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            for (v, k) in rows.iter().take(6) {
                println!("  stall row {:?} = {:.3e}", basis.rows[*k], v);
            }
        }
        Err(e) => println!("v!=0 ERR: {e}"),
    }
}
