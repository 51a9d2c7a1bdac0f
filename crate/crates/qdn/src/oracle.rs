//! Dense reference evolution for cross-checking the sparse engine.
//!
//! Works on full 2^r amplitude vectors and applies each stage by expanding
//! generator images with explicit dense creation operators, so it shares no
//! bookkeeping with the sparse path. Intended for small registers only.

use num_complex::Complex64;

use crate::error::QdnError;
use crate::stage::{NetworkProgram, StageMap};

/// Largest register rank the dense oracle will touch (2^20 amplitudes).
pub const MAX_DENSE_RANK: u32 = 20;

/// Evolves one stage densely: out[b'] accumulates the dense image of every
/// populated input basis state b.
pub fn dense_stage(stage: &StageMap, input: &[Complex64]) -> Result<Vec<Complex64>, QdnError> {
    if stage.input_rank() > MAX_DENSE_RANK {
        return Err(QdnError::TooLargeForDense(stage.input_rank()));
    }
    if stage.output_rank() > MAX_DENSE_RANK {
        return Err(QdnError::TooLargeForDense(stage.output_rank()));
    }
    let dim_in = 1usize << stage.input_rank();
    let dim_out = 1usize << stage.output_rank();
    assert_eq!(input.len(), dim_in, "input vector length must be 2^r_in");
    let mut output = vec![Complex64::new(0.0, 0.0); dim_out];
    for (basis, &amp) in input.iter().enumerate() {
        if amp.re == 0.0 && amp.im == 0.0 {
            continue;
        }
        if basis == 0 {
            output[0] += amp; // void stays void
            continue;
        }
        let image = dense_monomial_image(stage, basis as u64, dim_out)?;
        for (slot, value) in output.iter_mut().zip(image.iter()) {
            *slot += amp * value;
        }
    }
    Ok(output)
}

/// Dense image of one basis monomial: applies each fired generator's image
/// as a dense operator sum_t c_t A+(t), in ascending generator order.
fn dense_monomial_image(
    stage: &StageMap,
    basis: u64,
    dim_out: usize,
) -> Result<Vec<Complex64>, QdnError> {
    let mut current = vec![Complex64::new(0.0, 0.0); dim_out];
    current[0] = Complex64::new(1.0, 0.0);
    for k in 0..stage.input_rank() {
        if basis & (1u64 << k) == 0 {
            continue;
        }
        let image = stage.generator_image(k)?;
        let mut next = vec![Complex64::new(0.0, 0.0); dim_out];
        for (j, &value) in current.iter().enumerate() {
            if value.re == 0.0 && value.im == 0.0 {
                continue;
            }
            for (coeff, target) in &image {
                let mask = target.mask();
                if (j as u64) & mask != 0 {
                    continue; // nilpotency
                }
                next[j | mask as usize] += coeff * value;
            }
        }
        current = next;
    }
    Ok(current)
}

/// Dense final amplitude vector of a whole program, starting from the
/// prepared basis state.
pub fn dense_final_state(program: &NetworkProgram) -> Result<Vec<Complex64>, QdnError> {
    if program.initial_rank() > MAX_DENSE_RANK {
        return Err(QdnError::TooLargeForDense(program.initial_rank()));
    }
    let mut state = vec![Complex64::new(0.0, 0.0); 1usize << program.initial_rank()];
    state[program.initial().mask() as usize] = Complex64::new(1.0, 0.0);
    for stage in program.stages() {
        state = dense_stage(stage, &state)?;
    }
    Ok(state)
}

/// Max entrywise deviation between a sparse labstate and a dense vector.
pub fn max_deviation(sparse: &crate::register::Labstate, dense: &[Complex64]) -> f64 {
    let mut worst = 0.0f64;
    for (i, &value) in dense.iter().enumerate() {
        let monomial = crate::register::SignalMonomial::from_mask(i as u64);
        let amp = sparse
            .amplitude(&monomial)
            .expect("dense index within register");
        worst = worst.max((amp - value).norm());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::register::SignalMonomial;
    use crate::stage::{Passthrough, RewriteRule};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn dense_agrees_with_sparse_on_entangling_stage() {
        let inv = 1.0 / 2.0f64.sqrt();
        let rule = RewriteRule::for_generator(
            0,
            vec![
                (c(inv, 0.0), SignalMonomial::from_indices(&[1, 3]).unwrap()),
                (c(0.0, inv), SignalMonomial::from_indices(&[2, 4]).unwrap()),
            ],
        )
        .unwrap();
        let stage = crate::stage::StageMap::new(5, 5, vec![rule], Passthrough::Strict).unwrap();
        let program = NetworkProgram::new(
            SignalMonomial::from_indices(&[0]).unwrap(),
            5,
            vec![stage],
        )
        .unwrap();
        let dense = dense_final_state(&program).unwrap();
        let sparse = program.evolve_prepared().unwrap();
        assert!(max_deviation(&sparse, &dense) < 1e-15);
    }

    #[test]
    fn dense_keeps_void_component() {
        let stage = crate::stage::StageMap::random_semi_unitary(3, 3, 77).unwrap();
        let mut state = vec![c(0.0, 0.0); 8];
        state[0] = c(0.5, 0.0);
        state[1] = c(0.5, 0.5);
        let out = dense_stage(&stage, &state).unwrap();
        assert_eq!(out[0], c(0.5, 0.0));
    }

    #[test]
    fn dense_rejects_large_registers() {
        let program = NetworkProgram::new(
            SignalMonomial::from_indices(&[0]).unwrap(),
            24,
            Vec::new(),
        )
        .unwrap();
        assert!(matches!(
            dense_final_state(&program),
            Err(QdnError::TooLargeForDense(24))
        ));
    }
}
