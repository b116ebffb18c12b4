use bregpep::sdp::*;
use nalgebra::{DMatrix, DVector};

fn main() {
    let x: f64 = 0.48221390717622237;
    let s = serde_json::to_string(&x).unwrap();
    let y: f64 = serde_json::from_str(&s).unwrap();
    println!("json: {x} -> {s} -> {y} equal={}", x == y);
    let mut c = DMatrix::zeros(2, 2);
    c[(0, 0)] = 1.0;
    let p = ConicProgram {
        psd_dim: 2,
        n_free: 0,
        obj_mat: c,
        obj_free: DVector::zeros(0),
        eq_constraints: vec![ConicConstraint {
            mat: DMatrix::identity(2, 2),
            free: DVector::zeros(0),
            rhs: 1.0,
        }],
        ineq_constraints: vec![],
    };
    for max_iter in [100, 1000, 10000, 100000] {
        let s = SolverSettings { max_iter, ..Default::default() };
        let r = solve(&p, &s).unwrap();
        println!(
            "iters {:6} status {:?} value {:.10} viol {:.3e} cons {:.3e} gap {:.3e} dual_eq {:?}",
            max_iter, r.status, r.value, r.residuals.max_violation, r.residuals.consensus,
            r.residuals.gap, r.dual_eq,
        );
    }
}
