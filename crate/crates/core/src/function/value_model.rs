//! Fitting and merging value models of configuration keys and properties.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::model::{DiscreteLevel, GpKernel, GpSummary, Interval, Magnitude, Quantity, ValueKind, ValueModel};

/// At most this many distinct values keeps a key discrete.
pub const MAX_DISCRETE_LEVELS: usize = 10;
/// Minimum number of repeated levels for a mixed key.
pub const MIN_MIXED_LEVELS: usize = 3;
/// Within-level spread, relative to level spacing, above which a key with
/// repeated levels is mixed.
pub const MIXED_SPREAD_RATIO: f64 = 0.05;
/// Gaps wider than this fraction of the value range separate levels.
pub const LEVEL_GAP_RATIO: f64 = 0.1;

/// Orders levels: numbers ascending, then text.
pub(crate) fn level_order(a: &Quantity, b: &Quantity) -> Ordering {
    match (a.numeric(), b.numeric()) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.unit().cmp(b.unit())).then_with(|| a.to_string().cmp(&b.to_string())),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.to_string().cmp(&b.to_string()),
    }
}

fn count_levels<'a>(values: impl IntoIterator<Item = &'a Quantity>) -> Vec<DiscreteLevel> {
    let mut by_text: BTreeMap<String, DiscreteLevel> = BTreeMap::new();
    for v in values {
        by_text.entry(v.to_string()).or_insert_with(|| DiscreteLevel { value: v.clone(), count: 0 }).count += 1;
    }
    let mut levels: Vec<DiscreteLevel> = by_text.into_values().collect();
    levels.sort_by(|a, b| level_order(&a.value, &b.value));
    levels
}

/// Groups sorted values into levels, splitting where the gap to the next
/// value exceeds [`LEVEL_GAP_RATIO`] of the total range.
pub(crate) fn split_levels(sorted: &[f64]) -> Vec<&[f64]> {
    if sorted.is_empty() {
        return Vec::new();
    }
    let range = sorted[sorted.len() - 1] - sorted[0];
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..sorted.len() {
        if sorted[i] - sorted[i - 1] > LEVEL_GAP_RATIO * range {
            out.push(&sorted[start..i]);
            start = i;
        }
    }
    out.push(&sorted[start..]);
    out
}

/// Whether the values look like repeated settings with perturbation.
fn is_mixed(sorted: &[f64]) -> bool {
    let levels: Vec<&[f64]> = split_levels(sorted).into_iter().filter(|l| l.len() >= 2).collect();
    if levels.len() < MIN_MIXED_LEVELS {
        return false;
    }
    let centers: Vec<f64> = levels.iter().map(|l| l.iter().sum::<f64>() / l.len() as f64).collect();
    let spacing = centers.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let spread = levels.iter().map(|l| l[l.len() - 1] - l[0]).fold(0.0, f64::max);
    spacing.is_finite() && spacing > 0.0 && spread > MIXED_SPREAD_RATIO * spacing
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Fits a value model to observed values of one key. Returns `None` for an
/// empty input.
///
/// Numeric values in the most common unit decide the kind; values in other
/// units and text tokens are kept as discrete levels.
pub fn fit_value_model(values: &[Quantity], gp_mean: Option<f64>, kernel: &GpKernel) -> Option<ValueModel> {
    if values.is_empty() {
        return None;
    }
    let mut unit_counts: BTreeMap<&str, usize> = BTreeMap::new();
    for v in values.iter().filter(|v| v.numeric().is_some()) {
        *unit_counts.entry(v.unit()).or_insert(0) += 1;
    }
    let unit = unit_counts.iter().max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0))).map(|(u, _)| u.to_string());
    let Some(unit) = unit else {
        return Some(ValueModel { kind: ValueKind::Discrete, discrete: count_levels(values), interval: None, gp: None });
    };
    let mut nums: Vec<f64> = values.iter().filter(|v| v.unit() == unit).filter_map(Quantity::numeric).collect();
    nums.sort_by(f64::total_cmp);
    let others: Vec<&Quantity> = values.iter().filter(|v| v.numeric().is_none() || v.unit() != unit).collect();

    let interval = Interval {
        min: values
            .iter()
            .filter(|v| v.unit() == unit)
            .filter_map(|v| match v.magnitude() {
                Magnitude::Scalar(x) => Some(*x),
                Magnitude::Range { min, .. } => Some(*min),
                Magnitude::Token(_) => None,
            })
            .fold(f64::INFINITY, f64::min),
        max: values
            .iter()
            .filter(|v| v.unit() == unit)
            .filter_map(|v| match v.magnitude() {
                Magnitude::Scalar(x) => Some(*x),
                Magnitude::Range { max, .. } => Some(*max),
                Magnitude::Token(_) => None,
            })
            .fold(f64::NEG_INFINITY, f64::max),
        unit: unit.clone(),
    };
    let (mean, std) = mean_std(&nums);
    let gp = GpSummary {
        mean: gp_mean.unwrap_or(mean),
        variance: kernel.variance,
        lengthscale: kernel.lengthscale.unwrap_or(std),
        n: nums.len(),
    };

    let mut distinct = nums.clone();
    distinct.dedup();
    if is_mixed(&nums) {
        // each level is represented by its most frequent value
        let mut discrete = Vec::new();
        for level in split_levels(&nums) {
            let in_level: Vec<&Quantity> = values
                .iter()
                .filter(|v| v.unit() == unit && v.numeric().is_some_and(|x| x >= level[0] && x <= level[level.len() - 1]))
                .collect();
            let counted = count_levels(in_level.iter().copied());
            let rep = counted.iter().max_by(|a, b| a.count.cmp(&b.count).then_with(|| level_order(&b.value, &a.value)));
            if let Some(rep) = rep {
                discrete.push(DiscreteLevel { value: rep.value.clone(), count: level.len() });
            }
        }
        discrete.extend(count_levels(others.iter().copied()));
        discrete.sort_by(|a, b| level_order(&a.value, &b.value));
        Some(ValueModel { kind: ValueKind::Mixed, discrete, interval: Some(interval), gp: Some(gp) })
    } else if distinct.len() <= MAX_DISCRETE_LEVELS {
        Some(ValueModel { kind: ValueKind::Discrete, discrete: count_levels(values), interval: None, gp: None })
    } else {
        let discrete = count_levels(others.iter().copied());
        let kind = if discrete.is_empty() { ValueKind::Continuous } else { ValueKind::Mixed };
        Some(ValueModel { kind, discrete, interval: Some(interval), gp: Some(gp) })
    }
}

fn merge_gp(a: &GpSummary, b: &GpSummary) -> GpSummary {
    let n = a.n + b.n;
    let w = |x: f64, y: f64| if n == 0 { 0.5 * (x + y) } else { (x * a.n as f64 + y * b.n as f64) / n as f64 };
    GpSummary { mean: w(a.mean, b.mean), variance: w(a.variance, b.variance), lengthscale: w(a.lengthscale, b.lengthscale), n }
}

/// Pools two value models of the same key: discrete counts summed,
/// intervals hulled, kinds combined (different kinds give Mixed).
pub fn merge_value_models(a: &ValueModel, b: &ValueModel) -> ValueModel {
    let mut levels: BTreeMap<String, DiscreteLevel> = BTreeMap::new();
    for l in a.discrete.iter().chain(&b.discrete) {
        levels.entry(l.value.to_string()).or_insert_with(|| DiscreteLevel { value: l.value.clone(), count: 0 }).count += l.count;
    }
    let mut discrete: Vec<DiscreteLevel> = levels.into_values().collect();
    discrete.sort_by(|x, y| level_order(&x.value, &y.value));
    let interval = match (&a.interval, &b.interval) {
        (Some(x), Some(y)) => Some(Interval { min: x.min.min(y.min), max: x.max.max(y.max), unit: x.unit.clone() }),
        (x, y) => x.clone().or_else(|| y.clone()),
    };
    let gp = match (&a.gp, &b.gp) {
        (Some(x), Some(y)) => Some(merge_gp(x, y)),
        (x, y) => x.clone().or_else(|| y.clone()),
    };
    let kind = if a.kind == b.kind { a.kind } else { ValueKind::Mixed };
    let kind = match kind {
        ValueKind::Mixed if discrete.is_empty() => ValueKind::Continuous,
        ValueKind::Mixed if interval.is_none() => ValueKind::Discrete,
        k => k,
    };
    ValueModel { kind, discrete, interval, gp }
}
