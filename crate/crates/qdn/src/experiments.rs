//! Preset network builders for the worked experiments: Stern-Gerlach,
//! general von Neumann (PVM) tests, slit interference, EPR pairs, two-photon
//! interferometry, and products of independent experiments.
//!
//! Slit and detector sites live on a cyclic index set of size M instead of
//! the idealized doubly infinite line; the homogeneous kernel acts by cyclic
//! convolution and must satisfy sum_k V*_k V_{(k+d) mod M} = delta_{0,d}, the
//! cyclic form of the kernel rule. Any inverse DFT of a unit-modulus spectrum
//! satisfies it exactly.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::QdnError;
use crate::stage::{NetworkProgram, Passthrough, RewriteRule, StageMap};
use crate::register::SignalMonomial;

/// Tolerance for the cyclic kernel orthonormality rule.
pub const KERNEL_TOLERANCE: f64 = 1e-9;

/// Tolerance for amplitude normalization checks on preset parameters.
pub const SPLIT_TOLERANCE: f64 = 1e-12;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check_normalized(amps: &[Complex64], what: &str) -> Result<(), QdnError> {
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if (total - 1.0).abs() > SPLIT_TOLERANCE {
        return Err(QdnError::invalid(format!(
            "{what} must have unit total probability (got {total})"
        )));
    }
    Ok(())
}

/// Slit/detector geometry on a cyclic index set of M sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SlitGeometry {
    sites: u32,
    open_slits: Vec<u32>,
    kernel: Vec<Complex64>,
}

impl SlitGeometry {
    pub fn new(sites: u32, open_slits: &[u32], kernel: Vec<Complex64>) -> Result<Self, QdnError> {
        if sites == 0 || sites > 64 {
            return Err(QdnError::InvalidRank(sites));
        }
        if kernel.len() != sites as usize {
            return Err(QdnError::invalid(format!(
                "kernel must have {sites} entries, got {}",
                kernel.len()
            )));
        }
        if open_slits.is_empty() {
            return Err(QdnError::invalid("open slit set must be nonempty"));
        }
        let mut sorted = open_slits.to_vec();
        sorted.sort_unstable();
        for pair in sorted.windows(2) {
            if pair[0] == pair[1] {
                return Err(QdnError::invalid(format!("duplicate open slit {}", pair[0])));
            }
        }
        if let Some(&worst) = sorted.last() {
            if worst >= sites {
                return Err(QdnError::IndexOutOfRange {
                    index: worst,
                    rank: sites,
                });
            }
        }
        let deviation = cyclic_orthonormality_deviation(&kernel);
        if deviation > KERNEL_TOLERANCE {
            return Err(QdnError::KernelNotOrthonormal { deviation });
        }
        Ok(SlitGeometry {
            sites,
            open_slits: sorted,
            kernel,
        })
    }

    pub fn sites(&self) -> u32 {
        self.sites
    }

    /// Open slit indices, ascending.
    pub fn open_slits(&self) -> &[u32] {
        &self.open_slits
    }

    pub fn kernel(&self) -> &[Complex64] {
        &self.kernel
    }

    /// V_{d mod M} for a possibly negative difference d.
    pub fn kernel_at(&self, d: i64) -> Complex64 {
        let m = self.sites as i64;
        self.kernel[d.rem_euclid(m) as usize]
    }
}

/// Max |sum_k V*_k V_{(k+d) mod M} - delta_{0,d}| over all offsets d.
pub fn cyclic_orthonormality_deviation(kernel: &[Complex64]) -> f64 {
    let m = kernel.len();
    let mut worst = 0.0f64;
    for d in 0..m {
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..m {
            sum += kernel[k].conj() * kernel[(k + d) % m];
        }
        let expected = if d == 0 { 1.0 } else { 0.0 };
        worst = worst.max((sum - c(expected, 0.0)).norm());
    }
    worst
}

fn inverse_dft(spectrum: &[Complex64]) -> Vec<Complex64> {
    let m = spectrum.len();
    (0..m)
        .map(|k| {
            let mut sum = Complex64::new(0.0, 0.0);
            for (q, s) in spectrum.iter().enumerate() {
                let phase = 2.0 * PI * (q as f64) * (k as f64) / m as f64;
                sum += s * Complex64::from_polar(1.0, phase);
            }
            sum / m as f64
        })
        .collect()
}

/// Discrete Fresnel propagator: the inverse DFT of the unit-modulus
/// quadratic-phase spectrum exp(i pi q^2 / M). Valid for every M.
pub fn fresnel_kernel(sites: u32) -> Vec<Complex64> {
    let m = sites as usize;
    let spectrum: Vec<Complex64> = (0..m)
        .map(|q| Complex64::from_polar(1.0, PI * (q * q) as f64 / m as f64))
        .collect();
    inverse_dft(&spectrum)
}

/// Kernel whose spectrum is a row of the unitary DFT matrix (a pure linear
/// phase). Its inverse DFT is exactly a one-site cyclic shift.
pub fn dft_row_kernel(sites: u32) -> Vec<Complex64> {
    let m = sites as usize;
    let mut kernel = vec![c(0.0, 0.0); m];
    kernel[m - 1] = c(1.0, 0.0);
    kernel
}

/// Bob's analyzer direction (sin t cos p, sin t sin p, cos t) for the EPR pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EprSettings {
    theta: f64,
    phi: f64,
}

impl EprSettings {
    pub fn new(theta: f64, phi: f64) -> Result<Self, QdnError> {
        if !theta.is_finite() || !(0.0..=PI).contains(&theta) {
            return Err(QdnError::invalid(format!(
                "theta must lie in [0, pi], got {theta}"
            )));
        }
        if !phi.is_finite() || !(0.0..2.0 * PI).contains(&phi) {
            return Err(QdnError::invalid(format!(
                "phi must lie in [0, 2*pi), got {phi}"
            )));
        }
        Ok(EprSettings { theta, phi })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }
}

fn mono(indices: &[u32]) -> SignalMonomial {
    SignalMonomial::from_indices(indices).expect("preset indices are in range")
}

/// Stern-Gerlach network: rank 3, preparation switch 0, outcome qubits 1
/// (up) and 2 (down); the single stage rewrites A+_0 -> alpha A+_1 + beta A+_2.
pub fn stern_gerlach(alpha: Complex64, beta: Complex64) -> Result<NetworkProgram, QdnError> {
    check_normalized(&[alpha, beta], "(alpha, beta)")?;
    let rule = RewriteRule::for_generator(0, vec![(alpha, mono(&[1])), (beta, mono(&[2]))])?;
    let stage = StageMap::new(3, 3, vec![rule], Passthrough::Strict)?;
    NetworkProgram::new(mono(&[0]), 3, vec![stage])
}

/// von Neumann test with d orthogonal outcomes: a rank-(1+d) register with
/// A+_0 -> sum_i psi[i] A+_{i+1}, so outcome i has Born probability |psi[i]|^2.
pub fn pvm_network(psi: &[Complex64]) -> Result<NetworkProgram, QdnError> {
    if psi.is_empty() {
        return Err(QdnError::invalid("psi must have at least one amplitude"));
    }
    if psi.len() > 63 {
        return Err(QdnError::invalid(format!(
            "at most 63 outcomes fit a 64-qubit register, got {}",
            psi.len()
        )));
    }
    check_normalized(psi, "psi")?;
    let rank = 1 + psi.len() as u32;
    let targets: Vec<(Complex64, SignalMonomial)> = psi
        .iter()
        .enumerate()
        .map(|(i, &amp)| (amp, mono(&[i as u32 + 1])))
        .collect();
    let rule = RewriteRule::for_generator(0, targets)?;
    let stage = StageMap::new(rank, rank, vec![rule], Passthrough::Strict)?;
    NetworkProgram::new(mono(&[0]), rank, vec![stage])
}

/// Two-stage slit network over registers of ranks [1, M, M]: splitting sends
/// the source to the open slit qubits with the given amplitudes, and the
/// homogeneous superposition stage sends slit a to detector j with
/// coefficient V_{(a-j) mod M}, so detector j fires with probability
/// |sum_a psi^a V_{(a-j) mod M}|^2.
pub fn slit_network(
    geometry: &SlitGeometry,
    split: &[Complex64],
) -> Result<NetworkProgram, QdnError> {
    if split.len() != geometry.open_slits.len() {
        return Err(QdnError::invalid(format!(
            "split must have one amplitude per open slit ({} != {})",
            split.len(),
            geometry.open_slits.len()
        )));
    }
    check_normalized(split, "split amplitudes")?;
    let m = geometry.sites;
    let splitting_targets: Vec<(Complex64, SignalMonomial)> = geometry
        .open_slits
        .iter()
        .zip(split.iter())
        .map(|(&a, &amp)| (amp, mono(&[a])))
        .collect();
    let splitting = StageMap::new(
        1,
        m,
        vec![RewriteRule::for_generator(0, splitting_targets)?],
        Passthrough::Strict,
    )?;
    let mut rules = Vec::with_capacity(geometry.open_slits.len());
    for &a in &geometry.open_slits {
        let targets: Vec<(Complex64, SignalMonomial)> = (0..m)
            .map(|j| (geometry.kernel_at(a as i64 - j as i64), mono(&[j])))
            .collect();
        rules.push(RewriteRule::for_generator(a, targets)?);
    }
    let superposition = StageMap::new(m, m, rules, Passthrough::Strict)?;
    NetworkProgram::new(mono(&[0]), 1, vec![splitting, superposition])
}

/// The double-slit probability distribution evaluated directly from the
/// four-term interference formula, without building a program:
/// P_j = |psi_s|^2 |V_{s-j}|^2 + |psi_ms|^2 |V_{-s-j}|^2
///     + psi_ms conj(psi_s) V_{-s-j} conj(V_{s-j})
///     + conj(psi_ms) psi_s conj(V_{-s-j}) V_{s-j}.
/// The geometry must open exactly slits s and (M-s) mod M.
pub fn double_slit_closed_form(
    geometry: &SlitGeometry,
    s: u32,
    psi_s: Complex64,
    psi_ms: Complex64,
) -> Result<Vec<f64>, QdnError> {
    let m = geometry.sites;
    if s >= m {
        return Err(QdnError::IndexOutOfRange { index: s, rank: m });
    }
    let ms = (m - s) % m;
    if ms == s {
        return Err(QdnError::invalid(format!(
            "slits s={s} and M-s={ms} coincide; the pair must be two distinct slits"
        )));
    }
    let mut pair = [s, ms];
    pair.sort_unstable();
    if geometry.open_slits != pair {
        return Err(QdnError::invalid(format!(
            "geometry must open exactly slits {} and {}",
            pair[0], pair[1]
        )));
    }
    check_normalized(&[psi_s, psi_ms], "(psi_s, psi_ms)")?;
    let mut probabilities = Vec::with_capacity(m as usize);
    for j in 0..m {
        let v_s = geometry.kernel_at(s as i64 - j as i64);
        let v_ms = geometry.kernel_at(ms as i64 - j as i64);
        let direct_s = c(psi_s.norm_sqr() * v_s.norm_sqr(), 0.0);
        let direct_ms = c(psi_ms.norm_sqr() * v_ms.norm_sqr(), 0.0);
        let cross = psi_ms * psi_s.conj() * v_ms * v_s.conj();
        let total = direct_s + direct_ms + cross + cross.conj();
        probabilities.push(total.re);
    }
    Ok(probabilities)
}

/// EPR network: rank 5, switch 0, Alice's outcomes on qubits 1/2 and Bob's
/// on 3/4. The stage implements
/// A+_0 -> sin(t/2)/sqrt2 (e^{-i phi} A+_1 A+_3 + A+_2 A+_4)
///       + cos(t/2)/sqrt2 (e^{-i phi} A+_1 A+_4 - A+_2 A+_3),
/// giving coincidence probabilities sin^2(t/2)/2 on {1,3}/{2,4} and
/// cos^2(t/2)/2 on {1,4}/{2,3}, independent of phi.
pub fn epr_network(settings: EprSettings) -> Result<NetworkProgram, QdnError> {
    let half = settings.theta / 2.0;
    let inv = 1.0 / 2.0f64.sqrt();
    let sin = c(half.sin() * inv, 0.0);
    let cos = c(half.cos() * inv, 0.0);
    let phase = Complex64::from_polar(1.0, -settings.phi);
    let rule = RewriteRule::for_generator(
        0,
        vec![
            (sin * phase, mono(&[1, 3])),
            (sin, mono(&[2, 4])),
            (cos * phase, mono(&[1, 4])),
            (-cos, mono(&[2, 3])),
        ],
    )?;
    let stage = StageMap::new(5, 5, vec![rule], Passthrough::Strict)?;
    NetworkProgram::new(mono(&[0]), 5, vec![stage])
}

/// Two-photon interferometry source: rank 5 with
/// A+_0 -> (A+_1 A+_3 + e^{i theta} A+_2 A+_4)/sqrt2, followed by optional
/// downstream optics stages, which must stay semi-unitary on the reachable
/// rank-2 support.
pub fn hsz_network(theta: f64, downstream: &[StageMap]) -> Result<NetworkProgram, QdnError> {
    if !theta.is_finite() {
        return Err(QdnError::invalid(format!("theta must be finite, got {theta}")));
    }
    let inv = 1.0 / 2.0f64.sqrt();
    let rule = RewriteRule::for_generator(
        0,
        vec![
            (c(inv, 0.0), mono(&[1, 3])),
            (Complex64::from_polar(inv, theta), mono(&[2, 4])),
        ],
    )?;
    let mut stages = vec![StageMap::new(5, 5, vec![rule], Passthrough::Strict)?];
    stages.extend_from_slice(downstream);
    let program = NetworkProgram::new(mono(&[0]), 5, stages)?;
    let report = program.validate(crate::stage::VALIDATION_TOLERANCE)?;
    if !report.passed {
        return Err(QdnError::ValidationFailed {
            stage: report.failing_stage.unwrap_or(0),
            deviation: report.max_gram_deviation,
        });
    }
    Ok(program)
}

/// Balanced beamsplitter stage for the two-photon network: mixes qubits
/// {1,2} and {3,4} through the symmetric matrix (1/sqrt2) [[1, i], [i, 1]].
pub fn hsz_beamsplitter() -> StageMap {
    let inv = 1.0 / 2.0f64.sqrt();
    let one = c(inv, 0.0);
    let imag = c(0.0, inv);
    let rules = vec![
        RewriteRule::for_generator(1, vec![(one, mono(&[1])), (imag, mono(&[2]))]),
        RewriteRule::for_generator(2, vec![(imag, mono(&[1])), (one, mono(&[2]))]),
        RewriteRule::for_generator(3, vec![(one, mono(&[3])), (imag, mono(&[4]))]),
        RewriteRule::for_generator(4, vec![(imag, mono(&[3])), (one, mono(&[4]))]),
    ]
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .expect("beamsplitter rules are well-formed");
    StageMap::new(5, 5, rules, Passthrough::Strict).expect("beamsplitter stage is well-formed")
}

/// Runs two experiments side by side on one network: register ranks add,
/// with b's qubits offset past a's at every stage, initial monomials union,
/// and rules disjoint-union. Shorter programs are padded with identity
/// stages. Joint probabilities factorize when the factors are independent.
pub fn product_network(
    a: &NetworkProgram,
    b: &NetworkProgram,
) -> Result<NetworkProgram, QdnError> {
    let stage_count = a.stage_count().max(b.stage_count());
    let a_parts = padded_stages(a, stage_count)?;
    let b_parts = padded_stages(b, stage_count)?;
    let a_ranks = padded_ranks(a, stage_count);
    let b_ranks = padded_ranks(b, stage_count);

    let initial_rank = a_ranks[0] + b_ranks[0];
    crate::register::RegisterSpec::new(initial_rank)?;
    let initial_mask = a.initial().mask() | (b.initial().mask() << a_ranks[0]);
    let initial = SignalMonomial::from_mask(initial_mask);
    debug_assert!(a.initial().mask() & (b.initial().mask() << a_ranks[0]) == 0);

    let mut stages = Vec::with_capacity(stage_count);
    for n in 0..stage_count {
        let mut rules = materialized_rules(&a_parts[n]);
        for rule in materialized_rules(&b_parts[n]) {
            rules.push(offset_rule(&rule, a_ranks[n], a_ranks[n + 1])?);
        }
        stages.push(StageMap::new(
            a_ranks[n] + b_ranks[n],
            a_ranks[n + 1] + b_ranks[n + 1],
            rules,
            Passthrough::Strict,
        )?);
    }
    NetworkProgram::new(initial, initial_rank, stages)
}

fn padded_stages(program: &NetworkProgram, count: usize) -> Result<Vec<StageMap>, QdnError> {
    let mut stages: Vec<StageMap> = program.stages().to_vec();
    while stages.len() < count {
        stages.push(StageMap::identity(program.final_rank())?);
    }
    Ok(stages)
}

fn padded_ranks(program: &NetworkProgram, count: usize) -> Vec<u32> {
    let mut ranks = program.ranks().to_vec();
    while ranks.len() < count + 1 {
        ranks.push(program.final_rank());
    }
    ranks
}

/// Explicit rule list with identity passthrough materialized where possible.
fn materialized_rules(stage: &StageMap) -> Vec<RewriteRule> {
    let mut rules: Vec<RewriteRule> = stage.rules().map(|(_, r)| r.clone()).collect();
    if stage.passthrough() == Passthrough::Identity {
        for k in 0..stage.input_rank().min(stage.output_rank()) {
            if stage.rule(k).is_none() {
                rules.push(
                    RewriteRule::for_generator(k, vec![(c(1.0, 0.0), mono(&[k]))])
                        .expect("identity rule is well-formed"),
                );
            }
        }
    }
    rules
}

fn offset_rule(rule: &RewriteRule, in_offset: u32, out_offset: u32) -> Result<RewriteRule, QdnError> {
    let source = rule.source().indices()[0] + in_offset;
    let targets = rule
        .targets()
        .iter()
        .map(|(coeff, monomial)| {
            let shifted = monomial.mask() << out_offset;
            (*coeff, SignalMonomial::from_mask(shifted))
        })
        .collect();
    RewriteRule::for_generator(source, targets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_phase_pair(rng: &mut ChaCha8Rng) -> (Complex64, Complex64) {
        let weight: f64 = rng.random();
        let (p1, p2): (f64, f64) = (
            rng.random::<f64>() * 2.0 * PI,
            rng.random::<f64>() * 2.0 * PI,
        );
        (
            Complex64::from_polar(weight.sqrt(), p1),
            Complex64::from_polar((1.0 - weight).sqrt(), p2),
        )
    }

    #[test]
    fn stern_gerlach_reproduces_born_weights() {
        let table = stern_gerlach(c(1.0, 0.0), c(0.0, 0.0))
            .unwrap()
            .run()
            .unwrap()
            .table;
        assert_eq!(table.probability(&mono(&[1])), 1.0);
        assert_eq!(table.probability(&mono(&[2])), 0.0);

        let inv = 1.0 / 2.0f64.sqrt();
        let table = stern_gerlach(c(inv, 0.0), c(inv, 0.0))
            .unwrap()
            .run()
            .unwrap()
            .table;
        assert!((table.probability(&mono(&[1])) - 0.5).abs() < 1e-15);
        assert!((table.probability(&mono(&[2])) - 0.5).abs() < 1e-15);

        let table = stern_gerlach(c(0.6, 0.0), c(0.0, 0.8))
            .unwrap()
            .run()
            .unwrap()
            .table;
        assert!((table.probability(&mono(&[1])) - 0.36).abs() < 1e-15);
        assert!((table.probability(&mono(&[2])) - 0.64).abs() < 1e-15);
    }

    #[test]
    fn stern_gerlach_rejects_unnormalized_pairs() {
        assert!(stern_gerlach(c(1.0, 0.0), c(0.5, 0.0)).is_err());
    }

    #[test]
    fn pvm_with_two_outcomes_is_stern_gerlach() {
        let alpha = c(0.6, 0.0);
        let beta = c(0.0, 0.8);
        assert_eq!(
            pvm_network(&[alpha, beta]).unwrap(),
            stern_gerlach(alpha, beta).unwrap()
        );
    }

    #[test]
    fn pvm_reports_squared_moduli() {
        let inv = 1.0 / 3.0f64.sqrt();
        let psi = [c(inv, 0.0), c(inv, 0.0), c(inv, 0.0)];
        let table = pvm_network(&psi).unwrap().run().unwrap().table;
        for i in 1..=3u32 {
            assert!((table.probability(&mono(&[i])) - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pvm_zero_entry_has_exactly_zero_probability() {
        let psi = [c(1.0, 0.0), c(0.0, 0.0)];
        let table = pvm_network(&psi).unwrap().run().unwrap().table;
        assert_eq!(table.probability(&mono(&[2])), 0.0);
    }

    #[test]
    fn fresnel_kernel_is_cyclically_orthonormal() {
        for m in [1u32, 2, 3, 4, 5, 7, 8, 12, 16, 31, 32] {
            let deviation = cyclic_orthonormality_deviation(&fresnel_kernel(m));
            assert!(deviation < 1e-12, "M={m} deviation {deviation}");
        }
    }

    #[test]
    fn dft_row_kernel_is_exact() {
        for m in [1u32, 4, 9] {
            assert_eq!(cyclic_orthonormality_deviation(&dft_row_kernel(m)), 0.0);
        }
    }

    #[test]
    fn literal_dft_matrix_row_fails_the_kernel_rule() {
        // a pure linear-phase kernel has |autocorrelation| = 1 at every
        // offset, so it cannot back a slit geometry
        let m = 4usize;
        let kernel: Vec<Complex64> = (0..m)
            .map(|k| Complex64::from_polar(0.5, 2.0 * PI * k as f64 / m as f64))
            .collect();
        assert!(cyclic_orthonormality_deviation(&kernel) > 0.9);
        assert!(matches!(
            SlitGeometry::new(4, &[1, 3], kernel),
            Err(QdnError::KernelNotOrthonormal { .. })
        ));
    }

    #[test]
    fn single_slit_has_no_interference() {
        let geometry = SlitGeometry::new(8, &[2], fresnel_kernel(8)).unwrap();
        let program = slit_network(&geometry, &[c(1.0, 0.0)]).unwrap();
        let table = program.run().unwrap().table;
        for j in 0..8u32 {
            let expected = geometry.kernel_at(2 - j as i64).norm_sqr();
            assert!((table.probability(&mono(&[j])) - expected).abs() < 1e-12);
        }
        assert!((table.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_slit_pattern_matches_brute_force_formula() {
        // brute force evaluated right here: P_j = |sum_a psi^a V_{(a-j) mod M}|^2
        for kernel in [fresnel_kernel(4), dft_row_kernel(4)] {
            let geometry = SlitGeometry::new(4, &[1, 3], kernel).unwrap();
            let inv = 1.0 / 2.0f64.sqrt();
            let split = [c(inv, 0.0), c(inv, 0.0)];
            let table = slit_network(&geometry, &split).unwrap().run().unwrap().table;
            for j in 0..4u32 {
                let amp = split[0] * geometry.kernel_at(1 - j as i64)
                    + split[1] * geometry.kernel_at(3 - j as i64);
                assert!(
                    (table.probability(&mono(&[j])) - amp.norm_sqr()).abs() < 1e-12,
                    "detector {j}"
                );
            }
            assert!((table.total() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_matches_the_simulator() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let m = 8u32;
            let s = 3u32;
            let geometry = SlitGeometry::new(m, &[s, m - s], fresnel_kernel(m)).unwrap();
            let (psi_s, psi_ms) = random_phase_pair(&mut rng);
            let formula = double_slit_closed_form(&geometry, s, psi_s, psi_ms).unwrap();
            // open slits ascend: slit 3 first, slit 5 second
            let table = slit_network(&geometry, &[psi_s, psi_ms])
                .unwrap()
                .run()
                .unwrap()
                .table;
            for j in 0..m {
                assert!((formula[j as usize] - table.probability(&mono(&[j]))).abs() < 1e-12);
            }
            let total: f64 = formula.iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_without_second_slit_is_a_pure_profile() {
        let m = 8u32;
        let geometry = SlitGeometry::new(m, &[3, 5], fresnel_kernel(m)).unwrap();
        let formula = double_slit_closed_form(&geometry, 3, c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        for j in 0..m {
            let expected = geometry.kernel_at(3 - j as i64).norm_sqr();
            assert!((formula[j as usize] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_rejects_degenerate_pairs() {
        let geometry = SlitGeometry::new(8, &[3, 5], fresnel_kernel(8)).unwrap();
        assert!(double_slit_closed_form(&geometry, 0, c(1.0, 0.0), c(0.0, 0.0)).is_err());
        // s = M/2 collides with M-s for even M
        let geometry2 = SlitGeometry::new(8, &[4], fresnel_kernel(8));
        assert!(geometry2.is_ok());
        assert!(double_slit_closed_form(&geometry2.unwrap(), 4, c(1.0, 0.0), c(0.0, 0.0)).is_err());
    }

    #[test]
    fn epr_anticorrelates_on_a_shared_axis() {
        let table = epr_network(EprSettings::new(0.0, 0.0).unwrap())
            .unwrap()
            .run()
            .unwrap()
            .table;
        assert!((table.probability(&mono(&[1, 4])) - 0.5).abs() < 1e-15);
        assert!((table.probability(&mono(&[2, 3])) - 0.5).abs() < 1e-15);
        assert_eq!(table.probability(&mono(&[1, 3])), 0.0);
        assert_eq!(table.probability(&mono(&[2, 4])), 0.0);
    }

    #[test]
    fn epr_stage_produces_the_four_term_state() {
        let theta = 0.9f64;
        let phi = 2.3f64;
        let program = epr_network(EprSettings::new(theta, phi).unwrap()).unwrap();
        let state = program.stages()[0].evolve(&program.prepared_state()).unwrap();
        let inv = 1.0 / 2.0f64.sqrt();
        let phase = Complex64::from_polar(1.0, -phi);
        let cases = [
            (vec![1u32, 3], c((theta / 2.0).sin() * inv, 0.0) * phase),
            (vec![2, 4], c((theta / 2.0).sin() * inv, 0.0)),
            (vec![1, 4], c((theta / 2.0).cos() * inv, 0.0) * phase),
            (vec![2, 3], -c((theta / 2.0).cos() * inv, 0.0)),
        ];
        assert_eq!(state.support_size(), 4);
        for (indices, expected) in cases {
            let amp = state.amplitude(&mono(&indices)).unwrap();
            assert!((amp - expected).norm() < 1e-15, "monomial {indices:?}");
        }
    }

    #[test]
    fn epr_at_right_angles_is_uniform() {
        let table = epr_network(EprSettings::new(PI / 2.0, 1.25).unwrap())
            .unwrap()
            .run()
            .unwrap()
            .table;
        for outcome in [[1u32, 3], [2, 4], [1, 4], [2, 3]] {
            assert!((table.probability(&mono(&outcome)) - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn epr_probabilities_ignore_phi() {
        let theta = 1.1;
        let reference = epr_network(EprSettings::new(theta, 0.0).unwrap())
            .unwrap()
            .run()
            .unwrap()
            .table;
        for step in 1..8 {
            let phi = step as f64 * 2.0 * PI / 8.0;
            let table = epr_network(EprSettings::new(theta, phi).unwrap())
                .unwrap()
                .run()
                .unwrap()
                .table;
            for (a, b) in reference.rows.iter().zip(table.rows.iter()) {
                assert_eq!(a.basis_index, b.basis_index);
                assert!((a.probability - b.probability).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn epr_settings_ranges() {
        assert!(EprSettings::new(-0.1, 0.0).is_err());
        assert!(EprSettings::new(PI + 0.1, 0.0).is_err());
        assert!(EprSettings::new(1.0, 2.0 * PI).is_err());
        assert!(EprSettings::new(PI, 0.0).is_ok());
    }

    #[test]
    fn hsz_without_optics_splits_evenly() {
        let table = hsz_network(0.7, &[]).unwrap().run().unwrap().table;
        assert!((table.probability(&mono(&[1, 3])) - 0.5).abs() < 1e-15);
        assert!((table.probability(&mono(&[2, 4])) - 0.5).abs() < 1e-15);
        assert_eq!(table.probability(&mono(&[1, 4])), 0.0);
        assert_eq!(table.probability(&mono(&[2, 3])), 0.0);
    }

    #[test]
    fn hsz_beamsplitter_coincidences_at_zero_phase() {
        let table = hsz_network(0.0, &[hsz_beamsplitter()])
            .unwrap()
            .run()
            .unwrap()
            .table;
        assert!(table.probability(&mono(&[1, 3])).abs() < 1e-15);
        assert!(table.probability(&mono(&[2, 4])).abs() < 1e-15);
        assert!((table.probability(&mono(&[1, 4])) - 0.5).abs() < 1e-15);
        assert!((table.probability(&mono(&[2, 3])) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn hsz_tables_are_periodic_in_theta() {
        let theta = 0.9;
        let reference = hsz_network(theta, &[hsz_beamsplitter()])
            .unwrap()
            .run()
            .unwrap()
            .table;
        let shifted = hsz_network(theta + 2.0 * PI, &[hsz_beamsplitter()])
            .unwrap()
            .run()
            .unwrap()
            .table;
        for (a, b) in reference.rows.iter().zip(shifted.rows.iter()) {
            assert_eq!(a.basis_index, b.basis_index);
            assert!((a.probability - b.probability).abs() < 1e-12);
        }
    }

    #[test]
    fn hsz_rejects_invalid_downstream_stages() {
        let bad_rule = RewriteRule::for_generator(
            1,
            vec![(c(1.0, 0.0), mono(&[1])), (c(1.0, 0.0), mono(&[2]))],
        )
        .unwrap();
        let bad = StageMap::new(5, 5, vec![bad_rule], Passthrough::Identity).unwrap();
        assert!(matches!(
            hsz_network(0.0, &[bad]),
            Err(QdnError::ValidationFailed { stage: 1, .. })
        ));
    }

    #[test]
    fn product_of_stern_gerlach_pairs() {
        let a = stern_gerlach(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let b = stern_gerlach(c(0.28, 0.0), c(0.96, 0.0)).unwrap();
        let product = product_network(&a, &b).unwrap();
        assert_eq!(product.initial_rank(), 6);
        assert_eq!(product.initial().mask(), 9); // |100100) = |9)
        let table = product.run().unwrap().table;
        assert!((table.probability(&mono(&[1, 4])) - 0.36 * 0.0784).abs() < 1e-12);
        assert!((table.probability(&mono(&[1, 5])) - 0.36 * 0.9216).abs() < 1e-12);
        assert!((table.probability(&mono(&[2, 4])) - 0.64 * 0.0784).abs() < 1e-12);
        assert!((table.probability(&mono(&[2, 5])) - 0.64 * 0.9216).abs() < 1e-12);
    }

    #[test]
    fn product_with_empty_program_adds_spectators() {
        let a = stern_gerlach(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
        let spectator = NetworkProgram::new(mono(&[0]), 1, Vec::new()).unwrap();
        let product = product_network(&a, &spectator).unwrap();
        let table = product.run().unwrap().table;
        // outcomes carry the fired spectator qubit 3 alongside a's outcomes
        assert!((table.probability(&mono(&[1, 3])) - 0.36).abs() < 1e-12);
        assert!((table.probability(&mono(&[2, 3])) - 0.64).abs() < 1e-12);
    }
}
