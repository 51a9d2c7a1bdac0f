//! Stage maps as creation-operator rewrite rules, semi-unitarity validation,
//! labstate propagation, path-integral amplitudes and effective POVMs.
//!
//! One stage of evolution takes the register of rank r_in to a register of
//! rank r_out by rewriting each creation operator A+_k into a linear
//! combination of signal monomials over the output register. The image of a
//! multi-generator monomial is the distributive expansion of its generators'
//! images, with colliding indices annihilated by nilpotency; the void
//! component is left untouched. Probability conservation is the row
//! orthonormality (semi-unitarity) of the rewrite coefficients on whatever
//! monomial support a stage actually receives, which `validate` checks
//! through an explicit Gram matrix.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::QdnError;
use crate::register::{Labstate, ProbabilityTable, RegisterSpec, SignalMonomial};

/// Default tolerance for semi-unitarity (Gram) validation.
pub const VALIDATION_TOLERANCE: f64 = 1e-9;

/// Default tolerance for probability identities.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Default cap on explicitly enumerated paths.
pub const DEFAULT_PATH_CAP: u128 = 10_000_000;

/// Treatment of generators that have no rewrite rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Passthrough {
    /// Evolving a monomial containing an unruled generator is an error.
    Strict,
    /// An unruled generator k maps to A+_k (requires k < output rank).
    Identity,
}

/// The image of one source generator: a nonempty combination of pairwise
/// distinct signal monomials over the output register.
#[derive(Debug, Clone, PartialEq)]
pub struct RewriteRule {
    source: SignalMonomial,
    targets: Vec<(Complex64, SignalMonomial)>,
}

impl RewriteRule {
    pub fn new(
        source: SignalMonomial,
        targets: Vec<(Complex64, SignalMonomial)>,
    ) -> Result<Self, QdnError> {
        if targets.is_empty() {
            return Err(QdnError::EmptyRule);
        }
        let mut seen = BTreeSet::new();
        for (_, monomial) in &targets {
            if !seen.insert(monomial.mask()) {
                return Err(QdnError::DuplicateTarget);
            }
        }
        Ok(RewriteRule { source, targets })
    }

    /// Convenience constructor for a single-generator source.
    pub fn for_generator(
        k: u32,
        targets: Vec<(Complex64, SignalMonomial)>,
    ) -> Result<Self, QdnError> {
        RewriteRule::new(SignalMonomial::generator(k)?, targets)
    }

    pub fn source(&self) -> SignalMonomial {
        self.source
    }

    pub fn targets(&self) -> &[(Complex64, SignalMonomial)] {
        &self.targets
    }
}

/// One discrete evolution step between registers of rank r_in and r_out.
#[derive(Debug, Clone, PartialEq)]
pub struct StageMap {
    input: RegisterSpec,
    output: RegisterSpec,
    rules: BTreeMap<u32, RewriteRule>,
    passthrough: Passthrough,
}

impl StageMap {
    pub fn new(
        input_rank: u32,
        output_rank: u32,
        rules: Vec<RewriteRule>,
        passthrough: Passthrough,
    ) -> Result<Self, QdnError> {
        let input = RegisterSpec::new(input_rank)?;
        let output = RegisterSpec::new(output_rank)?;
        let mut map = BTreeMap::new();
        for rule in rules {
            if rule.source.degree() != 1 {
                return Err(QdnError::SourceNotSingleGenerator);
            }
            let k = rule.source.indices()[0];
            if k >= input_rank {
                return Err(QdnError::IndexOutOfRange {
                    index: k,
                    rank: input_rank,
                });
            }
            for (_, monomial) in &rule.targets {
                monomial.encode(output)?;
            }
            if map.insert(k, rule).is_some() {
                return Err(QdnError::DuplicateRule(k));
            }
        }
        Ok(StageMap {
            input,
            output,
            rules: map,
            passthrough,
        })
    }

    /// A rule-less identity stage over one register.
    pub fn identity(rank: u32) -> Result<Self, QdnError> {
        StageMap::new(rank, rank, Vec::new(), Passthrough::Identity)
    }

    pub fn input_rank(&self) -> u32 {
        self.input.rank()
    }

    pub fn output_rank(&self) -> u32 {
        self.output.rank()
    }

    pub fn passthrough(&self) -> Passthrough {
        self.passthrough
    }

    /// Rules in ascending source-generator order.
    pub fn rules(&self) -> impl Iterator<Item = (u32, &RewriteRule)> {
        self.rules.iter().map(|(&k, r)| (k, r))
    }

    pub fn rule(&self, generator: u32) -> Option<&RewriteRule> {
        self.rules.get(&generator)
    }

    /// The image of generator k under this stage, honoring passthrough.
    pub(crate) fn generator_image(
        &self,
        k: u32,
    ) -> Result<Vec<(Complex64, SignalMonomial)>, QdnError> {
        if let Some(rule) = self.rules.get(&k) {
            return Ok(rule.targets.clone());
        }
        match self.passthrough {
            Passthrough::Strict => Err(QdnError::MissingRule(k)),
            Passthrough::Identity => {
                if k >= self.output.rank() {
                    Err(QdnError::PassthroughOutOfRange {
                        generator: k,
                        output_rank: self.output.rank(),
                    })
                } else {
                    Ok(vec![(Complex64::new(1.0, 0.0), SignalMonomial::generator(k)?)])
                }
            }
        }
    }

    /// Evolves a labstate through this stage. Each fired generator is
    /// rewritten and the images multiply out distributively; index
    /// collisions annihilate. The void component passes through unchanged.
    pub fn evolve(&self, state: &Labstate) -> Result<Labstate, QdnError> {
        if state.register().rank() != self.input.rank() {
            return Err(QdnError::RegisterMismatch {
                expected: self.input.rank(),
                found: state.register().rank(),
            });
        }
        let mut out = Labstate::zero(self.output);
        for (index, amp) in state.terms() {
            if index.value() == 0 {
                out.add_amplitude(0, amp);
                continue;
            }
            let mut terms: Vec<(Complex64, u64)> = vec![(amp, 0u64)];
            for k in index.monomial().indices() {
                let image = self.generator_image(k)?;
                let mut next = Vec::with_capacity(terms.len() * image.len());
                for &(coeff, mask) in &terms {
                    for (target_coeff, target) in &image {
                        if mask & target.mask() != 0 {
                            continue; // nilpotent: repeated index annihilates
                        }
                        next.push((coeff * target_coeff, mask | target.mask()));
                    }
                }
                terms = next;
            }
            for (coeff, mask) in terms {
                out.add_amplitude(mask, coeff);
            }
        }
        out.prune_zeros();
        Ok(out)
    }

    /// Single-generator monomials that have rules, in ascending order.
    pub fn default_domain(&self) -> Vec<SignalMonomial> {
        self.rules
            .keys()
            .map(|&k| SignalMonomial::generator(k).expect("rule keys are in range"))
            .collect()
    }

    /// Checks semi-unitarity over a monomial domain: the Gram matrix of the
    /// domain's images must match the identity to within `tolerance`.
    pub fn validate(
        &self,
        domain: &[SignalMonomial],
        tolerance: f64,
    ) -> Result<ValidationReport, QdnError> {
        let (deviation, _) = self.gram_deviation(domain)?;
        Ok(ValidationReport {
            passed: deviation <= tolerance,
            max_gram_deviation: deviation,
            checked_domain: domain.to_vec(),
            failing_stage: None,
            tolerance,
        })
    }

    /// Max |G_ab - delta_ab| over the domain, plus the images for reuse.
    fn gram_deviation(
        &self,
        domain: &[SignalMonomial],
    ) -> Result<(f64, Vec<Labstate>), QdnError> {
        if domain.is_empty() {
            return Err(QdnError::EmptyDomain);
        }
        let images: Vec<Labstate> = domain
            .iter()
            .map(|m| {
                Labstate::basis_state(self.input, m).and_then(|state| self.evolve(&state))
            })
            .collect::<Result<_, _>>()?;
        let mut deviation = 0.0f64;
        for (a, left) in images.iter().enumerate() {
            for (b, right) in images.iter().enumerate() {
                let gram = left.inner_product(right)?;
                let expected = if a == b { 1.0 } else { 0.0 };
                let diff = (gram - Complex64::new(expected, 0.0)).norm();
                deviation = deviation.max(diff);
            }
        }
        Ok((deviation, images))
    }

    /// Views a rank-1 stage as its r_in x r_out coefficient matrix.
    /// Requires every generator to have a single-generator image (a rule with
    /// degree-1 targets, or identity passthrough in range).
    pub fn as_matrix(&self) -> Result<DMatrix<Complex64>, QdnError> {
        let r_in = self.input.rank() as usize;
        let r_out = self.output.rank() as usize;
        let mut matrix = DMatrix::from_element(r_in, r_out, Complex64::new(0.0, 0.0));
        for k in 0..self.input.rank() {
            let image = self.generator_image(k)?;
            for (coeff, monomial) in image {
                if monomial.degree() != 1 {
                    return Err(QdnError::NotRankOne {
                        stage: 0,
                        reason: format!(
                            "generator {k} maps to a degree-{} monomial",
                            monomial.degree()
                        ),
                    });
                }
                let j = monomial.indices()[0] as usize;
                matrix[(k as usize, j)] = coeff;
            }
        }
        Ok(matrix)
    }

    /// A seeded rank-1 stage whose coefficient matrix has orthonormal rows,
    /// built by QR-orthonormalizing a complex Gaussian matrix.
    pub fn random_semi_unitary(
        input_rank: u32,
        output_rank: u32,
        seed: u64,
    ) -> Result<StageMap, QdnError> {
        if output_rank < input_rank {
            return Err(QdnError::InfeasibleSemiUnitary {
                rows: input_rank,
                cols: output_rank,
            });
        }
        RegisterSpec::new(input_rank)?;
        RegisterSpec::new(output_rank)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gaussian = DMatrix::from_fn(input_rank as usize, output_rank as usize, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(re, im)
        });
        // rows of Q^H are orthonormal when Q comes from QR of the adjoint
        let qr = gaussian.adjoint().qr();
        let semi_unitary = qr.q().adjoint();
        let mut rules = Vec::with_capacity(input_rank as usize);
        for i in 0..input_rank {
            let targets: Vec<(Complex64, SignalMonomial)> = (0..output_rank)
                .map(|j| {
                    (
                        semi_unitary[(i as usize, j as usize)],
                        SignalMonomial::generator(j).expect("j < 64"),
                    )
                })
                .collect();
            rules.push(RewriteRule::for_generator(i, targets)?);
        }
        StageMap::new(input_rank, output_rank, rules, Passthrough::Strict)
    }
}

/// Outcome of a semi-unitarity check.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    /// True iff `max_gram_deviation <= tolerance`.
    pub passed: bool,
    /// Largest |G_ab - delta_ab| over the checked Gram matrix.
    pub max_gram_deviation: f64,
    /// Monomials whose images were tested.
    pub checked_domain: Vec<SignalMonomial>,
    /// First stage exceeding the tolerance, for program-level checks.
    pub failing_stage: Option<usize>,
    /// The tolerance the check ran at.
    pub tolerance: f64,
}

/// The executable form of one experiment: an initial signal monomial and a
/// chain of stage maps over registers of ranks r_0..r_N.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkProgram {
    initial: SignalMonomial,
    ranks: Vec<u32>,
    stages: Vec<StageMap>,
}

/// Final labstate and its Born probability table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub final_state: Labstate,
    pub table: ProbabilityTable,
}

/// One effect of the effective POVM over a set of source generators.
#[derive(Debug, Clone, PartialEq)]
pub struct PovmEffect {
    pub outcome: SignalMonomial,
    /// Positive semidefinite m x m matrix over the sources.
    pub matrix: DMatrix<Complex64>,
}

impl NetworkProgram {
    /// Chains `stages` after an initial monomial over a rank-`initial_rank`
    /// register; adjacent stage ranks must agree. Empty programs are allowed.
    pub fn new(
        initial: SignalMonomial,
        initial_rank: u32,
        stages: Vec<StageMap>,
    ) -> Result<Self, QdnError> {
        let first = RegisterSpec::new(initial_rank)?;
        initial.encode(first)?;
        let mut ranks = vec![initial_rank];
        for (n, stage) in stages.iter().enumerate() {
            let expected = *ranks.last().expect("nonempty");
            if stage.input_rank() != expected {
                return Err(QdnError::RankChainMismatch {
                    stage: n,
                    expected: stage.input_rank(),
                    found: expected,
                });
            }
            ranks.push(stage.output_rank());
        }
        Ok(NetworkProgram {
            initial,
            ranks,
            stages,
        })
    }

    pub fn initial(&self) -> SignalMonomial {
        self.initial
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn stages(&self) -> &[StageMap] {
        &self.stages
    }

    /// Register ranks r_0..r_N (stage_count() + 1 entries).
    pub fn ranks(&self) -> &[u32] {
        &self.ranks
    }

    pub fn initial_rank(&self) -> u32 {
        self.ranks[0]
    }

    pub fn final_rank(&self) -> u32 {
        *self.ranks.last().expect("nonempty")
    }

    /// The labstate right after the preparation switch is thrown: the
    /// initial monomial applied to the void.
    pub fn prepared_state(&self) -> Labstate {
        let register = RegisterSpec::new(self.ranks[0]).expect("validated at construction");
        Labstate::basis_state(register, &self.initial).expect("validated at construction")
    }

    /// Validates every stage on the monomial support it actually receives,
    /// propagating the reachable support from the initial monomial.
    pub fn validate(&self, tolerance: f64) -> Result<ValidationReport, QdnError> {
        self.validate_from(&[self.initial], tolerance)
    }

    /// Reachable-support validation from an explicit set of root monomials.
    pub fn validate_from(
        &self,
        roots: &[SignalMonomial],
        tolerance: f64,
    ) -> Result<ValidationReport, QdnError> {
        if roots.is_empty() {
            return Err(QdnError::EmptyDomain);
        }
        let mut support: Vec<SignalMonomial> = {
            let set: BTreeSet<SignalMonomial> = roots.iter().copied().collect();
            set.into_iter().collect()
        };
        let mut checked: BTreeSet<SignalMonomial> = support.iter().copied().collect();
        let mut deviation = 0.0f64;
        let mut failing_stage = None;
        for (n, stage) in self.stages.iter().enumerate() {
            let (stage_deviation, images) = stage.gram_deviation(&support)?;
            if stage_deviation > tolerance && failing_stage.is_none() {
                failing_stage = Some(n);
            }
            deviation = deviation.max(stage_deviation);
            let mut next: BTreeSet<SignalMonomial> = BTreeSet::new();
            for image in &images {
                for (index, _) in image.terms() {
                    next.insert(index.monomial());
                }
            }
            support = next.into_iter().collect();
            checked.extend(support.iter().copied());
        }
        Ok(ValidationReport {
            passed: failing_stage.is_none(),
            max_gram_deviation: deviation,
            checked_domain: checked.into_iter().collect(),
            failing_stage,
            tolerance,
        })
    }

    /// Validates at the default tolerance, then evolves the prepared state
    /// through every stage and tabulates Born probabilities.
    pub fn run(&self) -> Result<RunOutput, QdnError> {
        self.run_with_tolerance(VALIDATION_TOLERANCE)
    }

    pub fn run_with_tolerance(&self, tolerance: f64) -> Result<RunOutput, QdnError> {
        let report = self.validate(tolerance)?;
        if !report.passed {
            return Err(QdnError::ValidationFailed {
                stage: report.failing_stage.unwrap_or(0),
                deviation: report.max_gram_deviation,
            });
        }
        let final_state = self.evolve_prepared()?;
        let table = final_state.probability_table();
        Ok(RunOutput { final_state, table })
    }

    /// Evolves the prepared state through all stages without validating.
    pub fn evolve_prepared(&self) -> Result<Labstate, QdnError> {
        let mut state = self.prepared_state();
        for stage in &self.stages {
            state = stage.evolve(&state)?;
        }
        Ok(state)
    }

    fn rank_one_matrices(&self) -> Result<Vec<DMatrix<Complex64>>, QdnError> {
        self.stages
            .iter()
            .enumerate()
            .map(|(n, stage)| {
                stage.as_matrix().map_err(|e| match e {
                    QdnError::NotRankOne { reason, .. } => QdnError::NotRankOne { stage: n, reason },
                    other => other,
                })
            })
            .collect()
    }

    /// Path-integral amplitude from a source generator of the first register
    /// to a target generator of the last, by sequential vector-matrix
    /// propagation. All stages must be total rank-1 maps.
    pub fn path_amplitude(&self, source: u32, target: u32) -> Result<Complex64, QdnError> {
        self.check_path_endpoints(source, target)?;
        let matrices = self.rank_one_matrices()?;
        let mut vector = vec![Complex64::new(0.0, 0.0); self.ranks[0] as usize];
        vector[source as usize] = Complex64::new(1.0, 0.0);
        for matrix in &matrices {
            let mut next = vec![Complex64::new(0.0, 0.0); matrix.ncols()];
            for (i, amp) in vector.iter().enumerate() {
                if amp.re == 0.0 && amp.im == 0.0 {
                    continue;
                }
                for (j, slot) in next.iter_mut().enumerate() {
                    *slot += amp * matrix[(i, j)];
                }
            }
            vector = next;
        }
        Ok(vector[target as usize])
    }

    /// Brute-force path integral: explicitly sums coefficient products over
    /// every intermediate index tuple. Serves as the oracle for
    /// [`path_amplitude`](Self::path_amplitude).
    pub fn path_amplitude_enumerate(&self, source: u32, target: u32) -> Result<Complex64, QdnError> {
        self.path_amplitude_enumerate_capped(source, target, DEFAULT_PATH_CAP)
    }

    pub fn path_amplitude_enumerate_capped(
        &self,
        source: u32,
        target: u32,
        cap: u128,
    ) -> Result<Complex64, QdnError> {
        self.check_path_endpoints(source, target)?;
        let count = self.path_count();
        if count > cap {
            return Err(QdnError::PathCountExceeded { count, cap });
        }
        // rows are read straight from the rules, independent of as_matrix
        let mut rows: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(self.stages.len());
        for (n, stage) in self.stages.iter().enumerate() {
            let r_out = stage.output_rank() as usize;
            let mut stage_rows = Vec::with_capacity(stage.input_rank() as usize);
            for k in 0..stage.input_rank() {
                let mut row = vec![Complex64::new(0.0, 0.0); r_out];
                for (coeff, monomial) in stage.generator_image(k)? {
                    if monomial.degree() != 1 {
                        return Err(QdnError::NotRankOne {
                            stage: n,
                            reason: format!(
                                "generator {k} maps to a degree-{} monomial",
                                monomial.degree()
                            ),
                        });
                    }
                    row[monomial.indices()[0] as usize] += coeff;
                }
                stage_rows.push(row);
            }
            rows.push(stage_rows);
        }
        Ok(enumerate_paths(&rows, 0, source as usize, target as usize))
    }

    /// Count of intermediate index tuples in the path sum.
    pub fn path_count(&self) -> u128 {
        if self.stages.is_empty() {
            return 1;
        }
        self.ranks[1..self.ranks.len() - 1]
            .iter()
            .fold(1u128, |acc, &r| acc.saturating_mul(r as u128))
    }

    fn check_path_endpoints(&self, source: u32, target: u32) -> Result<(), QdnError> {
        if source >= self.ranks[0] {
            return Err(QdnError::IndexOutOfRange {
                index: source,
                rank: self.ranks[0],
            });
        }
        let last = self.final_rank();
        if target >= last {
            return Err(QdnError::IndexOutOfRange {
                index: target,
                rank: last,
            });
        }
        Ok(())
    }

    /// Effective POVM over a set of prepared source generators: for each
    /// outcome monomial o, E_o[s][t] = conj(A(s->o)) * A(t->o). The effects
    /// sum to the identity when the program is semi-unitary on the sources'
    /// reachable support, and c^H E_o c is the Born probability of o for a
    /// prepared superposition sum_s c_s A+_s |0).
    pub fn effective_povm(&self, sources: &[u32]) -> Result<Vec<PovmEffect>, QdnError> {
        if sources.is_empty() {
            return Err(QdnError::EmptyDomain);
        }
        let mut seen = BTreeSet::new();
        let mut roots = Vec::with_capacity(sources.len());
        for &s in sources {
            if s >= self.ranks[0] {
                return Err(QdnError::IndexOutOfRange {
                    index: s,
                    rank: self.ranks[0],
                });
            }
            if !seen.insert(s) {
                return Err(QdnError::invalid(format!("duplicate source generator {s}")));
            }
            roots.push(SignalMonomial::generator(s)?);
        }
        let report = self.validate_from(&roots, VALIDATION_TOLERANCE)?;
        if !report.passed {
            return Err(QdnError::ValidationFailed {
                stage: report.failing_stage.unwrap_or(0),
                deviation: report.max_gram_deviation,
            });
        }
        let register = RegisterSpec::new(self.ranks[0])?;
        let mut finals = Vec::with_capacity(sources.len());
        for root in &roots {
            let mut state = Labstate::basis_state(register, root)?;
            for stage in &self.stages {
                state = stage.evolve(&state)?;
            }
            finals.push(state);
        }
        let mut outcomes: BTreeSet<SignalMonomial> = BTreeSet::new();
        for state in &finals {
            for (index, _) in state.terms() {
                outcomes.insert(index.monomial());
            }
        }
        let m = sources.len();
        let mut effects = Vec::with_capacity(outcomes.len());
        for outcome in outcomes {
            let amps: Vec<Complex64> = finals
                .iter()
                .map(|state| state.amplitude(&outcome))
                .collect::<Result<_, _>>()?;
            let matrix =
                DMatrix::from_fn(m, m, |s, t| amps[s].conj() * amps[t]);
            effects.push(PovmEffect { outcome, matrix });
        }
        Ok(effects)
    }
}

fn enumerate_paths(
    rows: &[Vec<Vec<Complex64>>],
    stage: usize,
    current: usize,
    target: usize,
) -> Complex64 {
    if stage == rows.len() {
        return if current == target {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
    }
    let row = &rows[stage][current];
    let mut sum = Complex64::new(0.0, 0.0);
    for (next, coeff) in row.iter().enumerate() {
        sum += coeff * enumerate_paths(rows, stage + 1, next, target);
    }
    sum
}
