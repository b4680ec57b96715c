use qets_core::mps::{run_mps, mps_fidelity};
use qets_core::qsim::{run_statevector, Circuit, Gate};

fn base_gates() -> Vec<Gate> {
    let mut g: Vec<Gate> = (0..4).map(|q| Gate::rot_y(q, 0.4 + 0.3 * q as f64)).collect();
    g.push(Gate::cnot(0, 1));
    g.push(Gate::cnot(2, 3));
    g.extend((0..4).map(|q| Gate::rot_y(q, 0.9 + 0.3 * q as f64)));
    g
}

#[test]
fn internal_swap_vs_explicit() {
    let swap12 = [Gate::cnot(1, 2), Gate::cnot(2, 1), Gate::cnot(1, 2)];

    // internal path
    let mut g1 = base_gates();
    g1.push(Gate::cnot(0, 2));
    let mps1 = run_mps(&Circuit::new(4, g1.clone()).unwrap(), 64).unwrap();

    // explicit path: swap, adjacent cnot, swap
    let mut g2 = base_gates();
    g2.extend(swap12);
    g2.push(Gate::cnot(0, 1));
    g2.extend(swap12);
    let mps2 = run_mps(&Circuit::new(4, g2).unwrap(), 64).unwrap();

    let sv = run_statevector(&Circuit::new(4, g1).unwrap()).unwrap();
    println!("internal vs reference: {}", mps_fidelity(&mps1, &sv).unwrap());
    println!("explicit vs reference: {}", mps_fidelity(&mps2, &sv).unwrap());
    let e1 = mps1.to_statevector().unwrap();
    let e2 = mps2.to_statevector().unwrap();
    let diff = e1.amplitudes().iter().zip(e2.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0f64, f64::max);
    println!("internal vs explicit max amp diff: {diff}");
    println!("internal bonds: {:?}, explicit bonds: {:?}", mps1.bond_dims(), mps2.bond_dims());
}
