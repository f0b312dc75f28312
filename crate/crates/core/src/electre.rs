//! ELECTRE III outranking: pseudo-criterion thresholds, concordance,
//! discordance, credibility and a qualification-based distillation into
//! ranked tiers.
//!
//! Performance values are held in the *maximize* convention: a larger
//! `g_i(a)` means `a` is better on criterion `i`. Callers with costs to
//! minimize go through [`select`], which negates them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topology::NodeId;

/// Margin subtracted from the largest remaining credibility to obtain the
/// cut level of each distillation step.
pub const DISCRIMINATION: f64 = 0.15;

const WEIGHT_TOLERANCE: f64 = 1e-9;

/// Alternatives × criteria performance table with criterion weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionMatrix {
    alternatives: Vec<NodeId>,
    /// `values[i][j]` is criterion `i` of alternative `j`.
    values: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl DecisionMatrix {
    pub fn new(alternatives: Vec<NodeId>, values: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights)?;
        if values.len() != weights.len() {
            return Err(Error::InvalidMatrix(format!(
                "{} criteria rows but {} weights",
                values.len(),
                weights.len()
            )));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != alternatives.len() {
                return Err(Error::InvalidMatrix(format!(
                    "criterion {i} has {} values for {} alternatives",
                    row.len(),
                    alternatives.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMatrix(format!("criterion {i} has a non-finite value")));
            }
        }
        Ok(DecisionMatrix {
            alternatives,
            values,
            weights,
        })
    }

    pub fn alternatives(&self) -> &[NodeId] {
        &self.alternatives
    }

    pub fn criteria_count(&self) -> usize {
        self.values.len()
    }

    pub fn len(&self) -> usize {
        self.alternatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alternatives.is_empty()
    }

    pub fn value(&self, criterion: usize, alternative: usize) -> f64 {
        self.values[criterion][alternative]
    }

    pub fn row(&self, criterion: usize) -> &[f64] {
        &self.values[criterion]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

pub fn validate_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidMatrix("no criteria".into()));
    }
    if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
        return Err(Error::InvalidMatrix("weights must be positive".into()));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOLERANCE {
        return Err(Error::InvalidMatrix(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Per-criterion indifference (`q`), preference (`p`) and veto (`v`) thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub v: Vec<f64>,
}

impl Thresholds {
    /// Same thresholds on every criterion.
    pub fn uniform(criteria: usize, q: f64, p: f64, v: f64) -> Self {
        Thresholds {
            q: vec![q; criteria],
            p: vec![p; criteria],
            v: vec![v; criteria],
        }
    }

    pub fn validate(&self, criteria: usize) -> Result<()> {
        if self.q.len() != criteria || self.p.len() != criteria || self.v.len() != criteria {
            return Err(Error::InvalidMatrix("threshold count mismatch".into()));
        }
        for i in 0..criteria {
            let (q, p, v) = (self.q[i], self.p[i], self.v[i]);
            if !(q >= 0.0 && p >= q && v >= p) {
                return Err(Error::InvalidMatrix(format!(
                    "criterion {i}: need 0 <= q <= p <= v, got q={q} p={p} v={v}"
                )));
            }
        }
        Ok(())
    }
}

/// Percentile levels used to derive thresholds from the candidates at hand.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThresholdRule {
    pub indifference_percentile: f64,
    /// The indifference threshold is the percentile value divided by this.
    pub indifference_divisor: f64,
    pub preference_percentile: f64,
    pub veto_percentile: f64,
}

impl Default for ThresholdRule {
    fn default() -> Self {
        ThresholdRule {
            indifference_percentile: 10.0,
            indifference_divisor: 3.0,
            preference_percentile: 20.0,
            veto_percentile: 100.0,
        }
    }
}

/// Linear-interpolation percentile of ascending `sorted` values: rank
/// `pct/100 * (n-1)`, interpolated between its floor and ceiling entries.
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty());
    let rank = (pct / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

pub fn compute_thresholds(matrix: &DecisionMatrix) -> Result<Thresholds> {
    compute_thresholds_with(matrix, &ThresholdRule::default())
}

/// Thresholds from percentiles of each criterion's magnitudes across the
/// current alternatives. `p` is raised to `q` and `v` to `p` when needed.
pub fn compute_thresholds_with(matrix: &DecisionMatrix, rule: &ThresholdRule) -> Result<Thresholds> {
    if matrix.len() < 2 {
        return Err(Error::TooFewAlternatives {
            needed: 2,
            got: matrix.len(),
        });
    }
    let k = matrix.criteria_count();
    let mut t = Thresholds {
        q: Vec::with_capacity(k),
        p: Vec::with_capacity(k),
        v: Vec::with_capacity(k),
    };
    let mut sorted = Vec::with_capacity(matrix.len());
    for i in 0..k {
        sorted.clear();
        sorted.extend(matrix.row(i).iter().map(|x| x.abs()));
        sorted.sort_by(f64::total_cmp);
        let q = percentile(&sorted, rule.indifference_percentile) / rule.indifference_divisor;
        let p = percentile(&sorted, rule.preference_percentile).max(q);
        let v = percentile(&sorted, rule.veto_percentile).max(p);
        t.q.push(q);
        t.p.push(p);
        t.v.push(v);
    }
    Ok(t)
}

/// Partial concordance `c_i(aSb)`: how far criterion `i` supports "a is at
/// least as good as b".
pub fn concordance_index(g_a: f64, g_b: f64, q: f64, p: f64) -> f64 {
    if g_b <= g_a + q {
        1.0
    } else if g_b >= g_a + p {
        0.0
    } else {
        (g_a - g_b + p) / (p - q)
    }
}

/// Partial discordance `d_i(aSb)`: how strongly criterion `i` opposes
/// "a is at least as good as b".
pub fn discordance_index(g_a: f64, g_b: f64, p: f64, v: f64) -> f64 {
    if g_b > g_a + v {
        1.0
    } else if g_b <= g_a + p {
        0.0
    } else {
        (g_b - g_a - p) / (v - p)
    }
}

/// Square matrix over alternatives, row-major: `get(a, b)` is the value for
/// the ordered pair `(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CredibilityMatrix {
    alternatives: Vec<NodeId>,
    values: Vec<f64>,
}

impl CredibilityMatrix {
    /// Wraps a row-major `n×n` matrix; entries must lie in `[0, 1]`.
    pub fn new(alternatives: Vec<NodeId>, values: Vec<f64>) -> Result<Self> {
        let n = alternatives.len();
        if values.len() != n * n {
            return Err(Error::InvalidMatrix(format!(
                "credibility matrix needs {} entries, got {}",
                n * n,
                values.len()
            )));
        }
        if values.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err(Error::InvalidMatrix("credibility outside [0, 1]".into()));
        }
        Ok(CredibilityMatrix {
            alternatives,
            values,
        })
    }

    pub fn alternatives(&self) -> &[NodeId] {
        &self.alternatives
    }

    pub fn len(&self) -> usize {
        self.alternatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alternatives.is_empty()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.alternatives.len() + b]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Global concordance `c(aSb) = Σ w_i c_i(aSb)` for every ordered pair.
pub fn concordance_matrix(matrix: &DecisionMatrix, t: &Thresholds) -> Vec<f64> {
    let n = matrix.len();
    let mut out = vec![1.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            out[a * n + b] = (0..matrix.criteria_count())
                .map(|i| {
                    matrix.weights[i]
                        * concordance_index(matrix.value(i, a), matrix.value(i, b), t.q[i], t.p[i])
                })
                .sum();
        }
    }
    out
}

/// Credibility of the ordered pair `(a, b)` given its global concordance.
fn pair_credibility(matrix: &DecisionMatrix, t: &Thresholds, a: usize, b: usize, c: f64) -> f64 {
    let c = c.clamp(0.0, 1.0);
    if c >= 1.0 {
        return 1.0;
    }
    let mut sigma = c;
    for i in 0..matrix.criteria_count() {
        let d = discordance_index(matrix.value(i, a), matrix.value(i, b), t.p[i], t.v[i]);
        if d > c {
            sigma *= (1.0 - d) / (1.0 - c);
        }
    }
    sigma.clamp(0.0, 1.0)
}

/// `σ(aSb) = c(aSb) · Π_{i: d_i > c} (1 - d_i)/(1 - c)`, diagonal fixed at 1.
pub fn credibility(matrix: &DecisionMatrix, thresholds: &Thresholds) -> Result<CredibilityMatrix> {
    thresholds.validate(matrix.criteria_count())?;
    let concordance = concordance_matrix(matrix, thresholds);
    Ok(credibility_from_concordance(matrix, thresholds, &concordance))
}

fn credibility_from_concordance(
    matrix: &DecisionMatrix,
    thresholds: &Thresholds,
    concordance: &[f64],
) -> CredibilityMatrix {
    let n = matrix.len();
    let mut values = vec![1.0; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                values[a * n + b] = pair_credibility(matrix, thresholds, a, b, concordance[a * n + b]);
            }
        }
    }
    CredibilityMatrix {
        alternatives: matrix.alternatives.clone(),
        values,
    }
}

/// Ordered partition of the alternatives, best tier first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    pub tiers: Vec<Vec<NodeId>>,
}

impl Ranking {
    pub fn top(&self) -> &[NodeId] {
        self.tiers.first().map(Vec::as_slice).unwrap_or(&[])
    }
}

pub fn rank(credibility: &CredibilityMatrix) -> Ranking {
    rank_with(credibility, DISCRIMINATION)
}

/// Qualification distillation. Each step cuts the remaining credibilities at
/// `λ = max σ - discrimination`, counts strict outrankings (`σ(aSb) >= λ`
/// and `σ(bSa) < λ`), and peels off the alternatives with the highest
/// (wins - losses) as the next tier.
pub fn rank_with(credibility: &CredibilityMatrix, discrimination: f64) -> Ranking {
    let n = credibility.len();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut tiers = Vec::new();
    while !remaining.is_empty() {
        if remaining.len() == 1 {
            tiers.push(vec![credibility.alternatives[remaining[0]]]);
            break;
        }
        let max_sigma = remaining
            .iter()
            .flat_map(|&a| remaining.iter().filter(move |&&b| b != a).map(move |&b| (a, b)))
            .map(|(a, b)| credibility.get(a, b))
            .fold(f64::NEG_INFINITY, f64::max);
        let cut = max_sigma - discrimination;
        let qualification: Vec<i64> = remaining
            .iter()
            .map(|&a| {
                remaining
                    .iter()
                    .filter(|&&b| b != a)
                    .map(|&b| {
                        let ab = credibility.get(a, b);
                        let ba = credibility.get(b, a);
                        let wins = ab >= cut && ba < cut;
                        let loses = ba >= cut && ab < cut;
                        wins as i64 - loses as i64
                    })
                    .sum()
            })
            .collect();
        let best = *qualification.iter().max().expect("non-empty");
        let (top, rest): (Vec<(usize, i64)>, Vec<(usize, i64)>) = remaining
            .iter()
            .copied()
            .zip(qualification)
            .partition(|&(_, q)| q == best);
        tiers.push(top.iter().map(|&(a, _)| credibility.alternatives[a]).collect());
        remaining = rest.into_iter().map(|(a, _)| a).collect();
    }
    Ranking { tiers }
}

/// Distance of a candidate from the workload source, used to break ties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Proximity {
    pub hops: usize,
    pub propagation: f64,
}

/// Index of the nearest entry of `ids`: fewest hops, then least propagation,
/// then smallest id.
pub fn nearest_index(ids: &[NodeId], proximity: &[Proximity]) -> Option<usize> {
    (0..ids.len()).min_by(|&x, &y| {
        proximity[x]
            .hops
            .cmp(&proximity[y].hops)
            .then(proximity[x].propagation.total_cmp(&proximity[y].propagation))
            .then(ids[x].cmp(&ids[y]))
    })
}

/// Full trace of one selection, suitable for the decision dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub candidates: Vec<NodeId>,
    /// Raw criteria in the minimize convention, one row per criterion.
    pub criteria: Vec<Vec<f64>>,
    pub thresholds: Option<Thresholds>,
    pub concordance: Option<Vec<f64>>,
    pub credibility: Option<Vec<f64>>,
    pub ranking: Ranking,
    pub chosen: NodeId,
}

impl Decision {
    /// More than one alternative shares the top tier.
    pub fn is_tie(&self) -> bool {
        self.ranking.top().len() > 1
    }
}

/// Thresholds either recomputed per decision from percentiles or fixed.
#[derive(Clone, Debug, PartialEq)]
pub enum ThresholdMode {
    Percentile(ThresholdRule),
    Fixed(Thresholds),
}

/// ELECTRE-based selector over costs to minimize.
#[derive(Clone, Debug, PartialEq)]
pub struct Electre {
    pub weights: Vec<f64>,
    pub thresholds: ThresholdMode,
    pub discrimination: f64,
}

impl Electre {
    pub fn new(weights: Vec<f64>, rule: ThresholdRule) -> Result<Self> {
        validate_weights(&weights)?;
        Ok(Electre {
            weights,
            thresholds: ThresholdMode::Percentile(rule),
            discrimination: DISCRIMINATION,
        })
    }

    /// Equal weights over `criteria` and the default percentile rule.
    pub fn equal_weights(criteria: usize) -> Self {
        Electre {
            weights: vec![1.0 / criteria as f64; criteria],
            thresholds: ThresholdMode::Percentile(ThresholdRule::default()),
            discrimination: DISCRIMINATION,
        }
    }

    /// Ranks `candidates` by `costs` (`costs[i][j]`: criterion `i` of
    /// candidate `j`, smaller is better) and returns the nearest member of
    /// the top tier.
    pub fn decide(&self, candidates: &[NodeId], costs: &[Vec<f64>], proximity: &[Proximity]) -> Result<Decision> {
        if candidates.is_empty() {
            return Err(Error::NoCandidates);
        }
        if proximity.len() != candidates.len() {
            return Err(Error::InvalidMatrix("proximity length mismatch".into()));
        }
        if candidates.len() == 1 {
            return Ok(Decision {
                candidates: candidates.to_vec(),
                criteria: costs.to_vec(),
                thresholds: None,
                concordance: None,
                credibility: None,
                ranking: Ranking {
                    tiers: vec![candidates.to_vec()],
                },
                chosen: candidates[0],
            });
        }
        let gains = costs.iter().map(|row| row.iter().map(|&x| -x).collect()).collect();
        let matrix = DecisionMatrix::new(candidates.to_vec(), gains, self.weights.clone())?;
        let thresholds = match &self.thresholds {
            ThresholdMode::Percentile(rule) => compute_thresholds_with(&matrix, rule)?,
            ThresholdMode::Fixed(t) => t.clone(),
        };
        thresholds.validate(matrix.criteria_count())?;
        let concordance = concordance_matrix(&matrix, &thresholds);
        let sigma = credibility_from_concordance(&matrix, &thresholds, &concordance);
        let ranking = rank_with(&sigma, self.discrimination);

        let top = ranking.top();
        let top_prox: Vec<Proximity> = top
            .iter()
            .map(|id| proximity[candidates.iter().position(|c| c == id).expect("top tier is a subset")])
            .collect();
        let chosen = top[nearest_index(top, &top_prox).expect("top tier is non-empty")];
        Ok(Decision {
            candidates: candidates.to_vec(),
            criteria: costs.to_vec(),
            thresholds: Some(thresholds),
            concordance: Some(concordance),
            credibility: Some(sigma.values),
            ranking,
            chosen,
        })
    }
}

/// One-shot selection with percentile thresholds recomputed from the
/// candidates. `costs` rows are criteria to minimize.
pub fn select(
    candidates: &[NodeId],
    costs: &[Vec<f64>],
    weights: &[f64],
    proximity: &[Proximity],
) -> Result<NodeId> {
    let electre = Electre::new(weights.to_vec(), ThresholdRule::default())?;
    Ok(electre.decide(candidates, costs, proximity)?.chosen)
}

/// Selection with caller-supplied thresholds (on magnitudes, so valid for
/// the negated gains as well).
pub fn select_with_thresholds(
    candidates: &[NodeId],
    costs: &[Vec<f64>],
    weights: &[f64],
    thresholds: Thresholds,
    proximity: &[Proximity],
) -> Result<NodeId> {
    validate_weights(weights)?;
    let electre = Electre {
        weights: weights.to_vec(),
        thresholds: ThresholdMode::Fixed(thresholds),
        discrimination: DISCRIMINATION,
    };
    Ok(electre.decide(candidates, costs, proximity)?.chosen)
}
