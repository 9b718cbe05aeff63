//! Browser bindings for the energy-limited phase estimation demo.
//!
//! Curves come back as flat `Float64Array`s of fixed-width rows so the page
//! can plot them without any serialization layer.

use wasm_bindgen::prelude::*;

use comb_energy::comb::{Battery, Comb};
use comb_energy::ico::battery_separation_examples;
use comb_energy::metrology::SeesawOptions;
use comb_energy::phase::{lower_bound, matched_sine_cost, optimized_cost, qubit_cost_closed_form};
use comb_energy::tensor::{choi_of_unitary, hadamard, pauli_rotation, pauli_x, pauli_y, pauli_z, SpaceLabel};

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn grid(e_max: f64, points: usize) -> Vec<f64> {
    let n = points.max(2) - 1;
    (0..=n).map(|k| e_max * k as f64 / n as f64).collect()
}

/// Rows `[E, closed form, see-saw]` for the qubit phase channel; the see-saw
/// column is `NaN` when `optimize` is false.
#[wasm_bindgen]
pub fn qubit_cost_curve(e_max: f64, points: usize, optimize: bool) -> Result<Vec<f64>, JsError> {
    let opts = SeesawOptions { restarts: 1, ..Default::default() };
    let mut out = Vec::with_capacity(3 * points);
    for e in grid(e_max, points) {
        let sdp = if optimize { optimized_cost(e, 2, Battery::Global, &opts).map_err(js_err)?.cost } else { f64::NAN };
        out.extend([e, qubit_cost_closed_form(e), sdp]);
    }
    Ok(out)
}

/// Rows `[E, lower bound, best sine strategy within E]` for dimension `d`.
#[wasm_bindgen]
pub fn bound_vs_sine(d: usize, e_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    let mut out = Vec::with_capacity(3 * points);
    for e in grid(e_max, points) {
        out.extend([e, lower_bound(e, d).map_err(js_err)?, matched_sine_cost(e, d).map_err(js_err)?]);
    }
    Ok(out)
}

/// Global energy of the single-qubit gate `exp(−i a σ/2)`, `axis` one of
/// `x`, `y`, `z`, or `h` for the Hadamard gate (angle ignored).
#[wasm_bindgen]
pub fn gate_energy(axis: &str, angle: f64) -> Result<f64, JsError> {
    let u = match axis {
        "x" => pauli_rotation(&pauli_x(), angle),
        "y" => pauli_rotation(&pauli_y(), angle),
        "z" => pauli_rotation(&pauli_z(), angle),
        "h" => hadamard(),
        _ => return Err(JsError::new("axis must be x, y, z or h")),
    };
    let (a, b) = (SpaceLabel::qubit("in"), SpaceLabel::qubit("out"));
    let comb = Comb::channel(choi_of_unitary(&u, &a, &b).map_err(js_err)?, "in", "out").map_err(js_err)?;
    comb.energy_global().map_err(js_err)
}

/// `[Hadamard E, C₁ E_loc, C₁ E_gl, C₂ E_ind, C₂ E_sh]`.
#[wasm_bindgen]
pub fn hadamard_battery_constants() -> Result<Vec<f64>, JsError> {
    let s = battery_separation_examples().map_err(js_err)?;
    Ok(vec![s.gate_energy, s.c1_local, s.c1_global, s.c2_individual, s.c2_shared])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_have_expected_shape() {
        let q = qubit_cost_curve(1.5, 4, true).unwrap();
        assert_eq!(q.len(), 12);
        for row in q.chunks(3) {
            assert!((row[1] - row[2]).abs() < 1e-5);
        }
        let b = bound_vs_sine(3, 1.0, 3).unwrap();
        for row in b.chunks(3) {
            assert!(row[1] <= row[2] + 1e-9);
        }
    }

    #[test]
    fn hadamard_energy() {
        let e = gate_energy("h", 0.0).unwrap();
        assert!((e - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-9);
        assert!(gate_energy("z", 1.0).unwrap().abs() < 1e-9);
        assert_eq!(hadamard_battery_constants().unwrap().len(), 5);
    }
}
