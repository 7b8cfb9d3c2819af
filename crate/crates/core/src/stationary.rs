//! Frequency-support calculus for stationary space-times.
//!
//! Energies are handled as exact integer multiples of the gap epsilon, so
//! every step of a certificate is an integer inequality.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixtures::{Estimate, OutFixture};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralKernel {
    Dplus,
    Dminus,
    Gret,
    Dcomm,
}

impl SpectralKernel {
    /// Support in units of epsilon. D supports both half-lines; its convex
    /// hull is used, i.e. it is treated like G_r.
    pub fn support(self) -> Interval {
        match self {
            SpectralKernel::Dplus => Interval { lo: Bound::Mul(1), hi: Bound::PosInf },
            SpectralKernel::Dminus => Interval { lo: Bound::NegInf, hi: Bound::Mul(-1) },
            SpectralKernel::Gret | SpectralKernel::Dcomm => Interval { lo: Bound::NegInf, hi: Bound::PosInf },
        }
    }

    pub fn mirrored(self) -> Self {
        match self {
            SpectralKernel::Dplus => SpectralKernel::Dminus,
            SpectralKernel::Dminus => SpectralKernel::Dplus,
            k => k,
        }
    }
}

/// Extended integer in units of epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    NegInf,
    Mul(i64),
    PosInf,
}

impl Bound {
    fn add(self, o: Bound) -> Bound {
        match (self, o) {
            (Bound::Mul(a), Bound::Mul(b)) => Bound::Mul(a + b),
            (Bound::NegInf, Bound::PosInf) | (Bound::PosInf, Bound::NegInf) => unreachable!("inf - inf"),
            (Bound::NegInf, _) | (_, Bound::NegInf) => Bound::NegInf,
            _ => Bound::PosInf,
        }
    }

    fn neg(self) -> Bound {
        match self {
            Bound::NegInf => Bound::PosInf,
            Bound::PosInf => Bound::NegInf,
            Bound::Mul(a) => Bound::Mul(-a),
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::NegInf => write!(f, "-inf"),
            Bound::PosInf => write!(f, "+inf"),
            Bound::Mul(a) => write!(f, "{a}eps"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: Bound,
    pub hi: Bound,
}

impl Interval {
    fn sum(items: impl Iterator<Item = Interval>) -> Interval {
        items.fold(Interval { lo: Bound::Mul(0), hi: Bound::Mul(0) }, |a, b| Interval { lo: a.lo.add(b.lo), hi: a.hi.add(b.hi) })
    }

    fn neg(self) -> Interval {
        Interval { lo: self.hi.neg(), hi: self.lo.neg() }
    }

    fn meet(self, o: Interval) -> Interval {
        Interval { lo: self.lo.max(o.lo), hi: self.hi.min(o.hi) }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermPattern {
    pub kernels: Vec<SpectralKernel>,
    /// Position of the distinguished slot, counted from 1.
    pub k: usize,
}

impl TermPattern {
    /// D- for l < k, G_r at k, D+ for l > k.
    pub fn replacement(n: usize, k: usize) -> Result<Self> {
        Self::with_distinguished(n, k, SpectralKernel::Gret)
    }

    pub fn with_distinguished(n: usize, k: usize, kernel: SpectralKernel) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Precondition(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
        }
        let kernels = (1..=n)
            .map(|l| if l < k { SpectralKernel::Dminus } else if l == k { kernel } else { SpectralKernel::Dplus })
            .collect();
        Ok(TermPattern { kernels, k })
    }

    pub fn n(&self) -> usize {
        self.kernels.len()
    }

    /// Reverse the slots and swap D+ and D-.
    pub fn mirrored(&self) -> Self {
        TermPattern { kernels: self.kernels.iter().rev().map(|k| k.mirrored()).collect(), k: self.n() + 1 - self.k }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepVerdict {
    /// Lower end of the feasible partial-sum interval is at least 1 eps.
    Positive,
    /// The hyperplane misses the support.
    EmptySupport,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportStep {
    pub r: usize,
    /// Range of sum_{l<r} E_l.
    pub head: Interval,
    /// Range of sum_{l>=r} E_l before the hyperplane constraint.
    pub tail: Interval,
    /// tail meet (-head): range of sum_{l>=r} E_l on sum E = 0.
    pub feasible: Interval,
    pub verdict: StepVerdict,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCertificate {
    pub pattern: TermPattern,
    pub epsilon: f64,
    pub holds: bool,
    pub steps: Vec<SupportStep>,
    /// Energies on sum E = 0 with some partial sum <= 0, if the property fails.
    pub counterexample: Option<Vec<f64>>,
}

pub fn verify_spectral_support(pattern: &TermPattern, epsilon: f64) -> Result<SupportCertificate> {
    if !(epsilon > 0.0) {
        return Err(Error::Precondition(format!("spectral gap must be positive, got {epsilon}")));
    }
    let n = pattern.n();
    if pattern.k == 0 || pattern.k > n {
        return Err(Error::Precondition("distinguished slot out of range".into()));
    }
    let sup: Vec<Interval> = pattern.kernels.iter().map(|k| k.support()).collect();
    let mut steps = Vec::new();
    let mut counterexample = None;
    for r in 2..=n {
        let head = Interval::sum(sup[..r - 1].iter().copied());
        let tail = Interval::sum(sup[r - 1..].iter().copied());
        let feasible = tail.meet(head.neg());
        let verdict = if feasible.is_empty() {
            StepVerdict::EmptySupport
        } else if feasible.lo >= Bound::Mul(1) {
            StepVerdict::Positive
        } else {
            StepVerdict::Violated
        };
        let text = format!(
            "r={r}: sum_(l<{r}) E_l in {head}; sum_(l>={r}) E_l in {tail}; on sum E = 0: sum_(l>={r}) E_l in {feasible} => {}",
            match verdict {
                StepVerdict::Positive => format!("sum_(l>={r}) E_l >= {} > 0", feasible.lo),
                StepVerdict::EmptySupport => "support misses sum E = 0".to_string(),
                StepVerdict::Violated => "partial sum can be <= 0".to_string(),
            }
        );
        if verdict == StepVerdict::Violated && counterexample.is_none() {
            counterexample = Some(witness(&sup, r, feasible).into_iter().map(|m| m as f64 * epsilon).collect());
        }
        steps.push(SupportStep { r, head, tail, feasible, verdict, text });
    }
    let holds = steps.iter().all(|s| s.verdict != StepVerdict::Violated);
    Ok(SupportCertificate { pattern: pattern.clone(), epsilon, holds, steps, counterexample })
}

/// Slot energies (multiples of eps) in their supports with sum 0 and
/// sum_{l>=r} E_l = x <= 0.
fn witness(sup: &[Interval], r: usize, feasible: Interval) -> Vec<i64> {
    let x = match feasible.hi {
        Bound::Mul(h) => h.min(0),
        _ => 0,
    };
    let mut e = vec![0i64; sup.len()];
    fill(&mut e[..r - 1], &sup[..r - 1], -x);
    fill(&mut e[r - 1..], &sup[r - 1..], x);
    e
}

fn fill(e: &mut [i64], sup: &[Interval], target: i64) {
    for (v, s) in e.iter_mut().zip(sup) {
        *v = match (s.lo, s.hi) {
            (Bound::Mul(a), _) if a > 0 => a,
            (_, Bound::Mul(b)) if b < 0 => b,
            _ => 0,
        };
    }
    let delta = target - e.iter().sum::<i64>();
    if delta == 0 {
        return;
    }
    let open = sup.iter().position(|s| if delta > 0 { s.hi == Bound::PosInf } else { s.lo == Bound::NegInf });
    if let Some(i) = open {
        e[i] += delta;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquivalenceStatus {
    ExactZero,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceCertificate {
    pub id: String,
    pub n: usize,
    pub epsilon: f64,
    pub status: EquivalenceStatus,
    /// Upper bound of sum E on the support of prod D-^.
    pub bound: f64,
    pub chain: Vec<String>,
}

/// prod_l D-^(E_l) lives on sum E <= -n eps, disjoint from sum E = 0, so
/// the out-n-point bracket vanishes.
pub fn verify_out_in_equivalence(n: usize, epsilon: f64) -> Result<EquivalenceCertificate> {
    if n < 3 {
        return Err(Error::Precondition(format!("need n >= 3, got {n}")));
    }
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Error::Precondition(format!("invalid spectral gap {epsilon}")));
    }
    let sup = SpectralKernel::Dminus.support();
    let total = Interval::sum(std::iter::repeat_n(sup, n));
    let mut chain: Vec<String> = (1..=n).map(|l| format!("E_{l} in {sup} (supp D-^)")).collect();
    chain.push(format!("sum_(l=1..{n}) E_l in {total}"));
    let bound = -(n as f64) * epsilon;
    let status = if epsilon > 0.0 {
        chain.push(format!("sum E <= {} < 0: disjoint from sum E = 0, bracket vanishes", total.hi));
        EquivalenceStatus::ExactZero
    } else {
        chain.push("epsilon = 0: support touches sum E = 0, no conclusion".into());
        EquivalenceStatus::Inconclusive
    };
    Ok(EquivalenceCertificate { id: format!("equiv-n{n}-eps{epsilon:e}"), n, epsilon, status, bound, chain })
}

/// Recompute a stored certificate and compare the JSON bytes.
pub fn replay_support(json: &str) -> Result<bool> {
    let c: SupportCertificate = serde_json::from_str(json)?;
    let again = serde_json::to_string(&verify_spectral_support(&c.pattern, c.epsilon)?)?;
    Ok(again == json)
}

pub fn replay_equivalence(json: &str) -> Result<bool> {
    let c: EquivalenceCertificate = serde_json::from_str(json)?;
    let again = serde_json::to_string(&verify_out_in_equivalence(c.n, c.epsilon)?)?;
    Ok(again == json)
}

/// Stationary certificate next to the frozen de Sitter value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContrastReport {
    pub stationary: EquivalenceCertificate,
    pub fixture: String,
    pub desitter_out: Estimate,
    /// |value| / error of the de Sitter out n-point.
    pub ratio: f64,
    pub nonzero_beyond_5x: bool,
    /// Mixed in/out S-matrix element of the same functions.
    pub desitter_smatrix_k1: Estimate,
    pub smatrix_k1_ratio: f64,
}

pub fn contrast_report(fixture: Option<&OutFixture>, epsilon: f64) -> Result<ContrastReport> {
    let fx = fixture.ok_or_else(|| Error::MissingFixture("no frozen out n-point fixture supplied".into()))?;
    let n = fx.functions.len();
    let stationary = verify_out_in_equivalence(n, epsilon)?;
    let ratio = fx.out.value.norm() / fx.out.error.max(f64::MIN_POSITIVE);
    Ok(ContrastReport {
        stationary,
        fixture: fx.name.clone(),
        desitter_out: fx.out,
        ratio,
        nonzero_beyond_5x: ratio > 5.0,
        desitter_smatrix_k1: fx.smatrix_k1,
        smatrix_k1_ratio: fx.smatrix_k1.value.norm() / fx.smatrix_k1.error.max(f64::MIN_POSITIVE),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_slot_distinguished() {
        let c = verify_spectral_support(&TermPattern::replacement(3, 1).unwrap(), 0.1).unwrap();
        assert!(c.holds);
        assert_eq!(c.steps[0].feasible.lo, Bound::Mul(2));
        assert_eq!(c.steps[1].feasible.lo, Bound::Mul(1));
    }

    #[test]
    fn last_slot_distinguished() {
        let c = verify_spectral_support(&TermPattern::replacement(3, 3).unwrap(), 0.1).unwrap();
        assert!(c.holds);
        assert_eq!(c.steps[0].head, Interval { lo: Bound::NegInf, hi: Bound::Mul(-1) });
        assert_eq!(c.steps[1].feasible.lo, Bound::Mul(2));
    }

    #[test]
    fn two_point_pattern() {
        let p = TermPattern { kernels: vec![SpectralKernel::Dminus, SpectralKernel::Dplus], k: 2 };
        let c = verify_spectral_support(&p, 1.0).unwrap();
        assert!(c.holds);
        assert_eq!(c.steps[0].feasible, Interval { lo: Bound::Mul(1), hi: Bound::PosInf });
    }

    #[test]
    fn wrong_order_gives_counterexample() {
        let p = TermPattern { kernels: vec![SpectralKernel::Dplus, SpectralKernel::Gret, SpectralKernel::Dminus], k: 2 };
        let c = verify_spectral_support(&p, 0.5).unwrap();
        assert!(!c.holds);
        let e = c.counterexample.unwrap();
        assert_eq!(e.iter().sum::<f64>(), 0.0);
        assert!(e[0] >= 0.5 && e[2] <= -0.5);
        assert!(e[1..].iter().sum::<f64>() <= 0.0);
    }

    #[test]
    fn equivalence_bounds() {
        let c = verify_out_in_equivalence(3, 0.1).unwrap();
        assert_eq!(c.status, EquivalenceStatus::ExactZero);
        assert!((c.bound + 0.3).abs() < 1e-15);
        assert_eq!(verify_out_in_equivalence(8, 1.0).unwrap().bound, -8.0);
        assert_eq!(verify_out_in_equivalence(4, 0.0).unwrap().status, EquivalenceStatus::Inconclusive);
        assert!(verify_spectral_support(&TermPattern::replacement(3, 1).unwrap(), 0.0).is_err());
    }

    #[test]
    fn mirror_reproduces_feasible_ranges() {
        for n in 2..=8 {
            for k in 1..=n {
                let p = TermPattern::replacement(n, k).unwrap();
                let a = verify_spectral_support(&p, 1.0).unwrap();
                let b = verify_spectral_support(&p.mirrored(), 1.0).unwrap();
                for s in &a.steps {
                    let m = &b.steps[n + 2 - s.r - 2];
                    assert_eq!(m.r, n + 2 - s.r);
                    assert_eq!(m.feasible, s.feasible);
                    assert_eq!(m.head, s.tail.neg());
                }
            }
        }
    }

    #[test]
    fn contrast_without_fixture_fails() {
        assert!(matches!(contrast_report(None, 0.1), Err(Error::MissingFixture(_))));
    }

    #[test]
    fn replay_is_byte_identical() {
        let c = verify_spectral_support(&TermPattern::replacement(5, 2).unwrap(), 0.1).unwrap();
        assert!(replay_support(&serde_json::to_string(&c).unwrap()).unwrap());
        let e = verify_out_in_equivalence(6, 1.0).unwrap();
        assert!(replay_equivalence(&serde_json::to_string(&e).unwrap()).unwrap());
    }
}
