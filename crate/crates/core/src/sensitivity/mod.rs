//! One-at-a-time parameter sweeps: each spec varies a single surrogate or
//! generator parameter over a uniform grid with everything else at baseline,
//! then correlates the scores with the parameter and fits a polynomial.

mod stats;

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::FingertipType;
use crate::error::{Error, Result};
use crate::eval::{evaluator, Evaluator, SurrogateParams};
use crate::grammar::{generate_hand, GenParams};

pub use stats::{pearson, polyfit, Correlation, PolyFit};

pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Physics,
    Actuator,
    Morphology,
}

/// Parameter a spec writes into the surrogate or generator configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    LinkLengthScale,
    PalmRadius,
    Friction,
    TorqueLimit,
    PalmPenalty,
    /// Object size factor `s` with mass scaled by `s^3`.
    ObjectScale,
    FingerCount,
    JointCount,
    FingertipIndex,
    GripHalfSize,
    MinSeparation,
    ObjectHeight,
}

fn as_count(v: f64) -> Result<usize> {
    if v.is_finite() && v >= 0.0 {
        Ok(v.round() as usize)
    } else {
        Err(Error::OutOfRange(format!("{v} is not a count")))
    }
}

impl Knob {
    pub fn apply(self, value: f64, gen: &mut GenParams, params: &mut SurrogateParams) -> Result<()> {
        match self {
            Knob::LinkLengthScale => params.link_length_scale = value,
            Knob::PalmRadius => gen.radius_range_m = [value, value],
            Knob::Friction => params.friction = value,
            Knob::TorqueLimit => params.torque_limit_nm = value,
            Knob::PalmPenalty => params.palm_penalty = value,
            Knob::ObjectScale => {
                params.size_scale = [value, value];
                params.mass_scale = [value.powi(3), value.powi(3)];
            }
            Knob::FingerCount => gen.finger_counts = vec![as_count(value)?],
            Knob::JointCount => gen.joint_counts = vec![u8::try_from(as_count(value)?).unwrap_or(u8::MAX)],
            Knob::FingertipIndex => {
                let i = as_count(value)?;
                let tip = FingertipType::from_index(i)
                    .ok_or_else(|| Error::OutOfRange(format!("fingertip index {i}")))?;
                gen.fingertips = vec![tip];
            }
            Knob::GripHalfSize => gen.grip_half_size_m = value,
            Knob::MinSeparation => gen.min_sep_rad = value,
            Knob::ObjectHeight => params.object_height_m = value,
        }
        gen.check()?;
        params.check()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamSpec {
    pub name: String,
    pub category: Category,
    pub range: [f64; 2],
    #[serde(default = "default_samples")]
    pub samples: usize,
    pub knob: Knob,
}

fn default_samples() -> usize {
    DEFAULT_SAMPLES
}

impl ParamSpec {
    pub fn new(name: &str, category: Category, range: [f64; 2], knob: Knob) -> Self {
        ParamSpec { name: name.into(), category, range, samples: DEFAULT_SAMPLES, knob }
    }

    pub fn check(&self) -> Result<()> {
        let [lo, hi] = self.range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("{}: range must satisfy lo < hi", self.name)));
        }
        if self.samples < 2 {
            return Err(Error::Config(format!("{}: at least 2 samples required", self.name)));
        }
        Ok(())
    }
}

/// `n` equally spaced values from `lo` to `hi`, both included exactly.
pub fn grid_sample(spec: &ParamSpec) -> Result<Vec<f64>> {
    spec.check()?;
    let [lo, hi] = spec.range;
    let n = spec.samples;
    let step = (hi - lo) / (n - 1) as f64;
    Ok((0..n).map(|i| if i == n - 1 { hi } else { lo + step * i as f64 }).collect())
}

/// The twelve default sweeps over surrogate and generator parameters.
pub fn default_specs() -> Vec<ParamSpec> {
    use Category::*;
    vec![
        ParamSpec::new("link_length_scale", Morphology, [0.5, 2.0], Knob::LinkLengthScale),
        ParamSpec::new("palm_radius", Morphology, [0.04, 0.08], Knob::PalmRadius),
        ParamSpec::new("friction", Physics, [0.3, 1.2], Knob::Friction),
        ParamSpec::new("torque_limit", Actuator, [0.1, 0.6], Knob::TorqueLimit),
        ParamSpec::new("palm_penalty", Actuator, [0.0, 1.0], Knob::PalmPenalty),
        ParamSpec::new("object_scale", Physics, [0.7, 1.3], Knob::ObjectScale),
        ParamSpec::new("finger_count", Morphology, [3.0, 5.0], Knob::FingerCount),
        ParamSpec::new("joint_count", Morphology, [2.0, 3.0], Knob::JointCount),
        ParamSpec::new("fingertip_index", Morphology, [0.0, 3.0], Knob::FingertipIndex),
        ParamSpec::new("grip_half_size", Morphology, [0.003, 0.012], Knob::GripHalfSize),
        ParamSpec::new("min_separation", Morphology, [0.2, 0.6], Knob::MinSeparation),
        ParamSpec::new("object_height", Physics, [0.03, 0.1], Knob::ObjectHeight),
    ]
}

/// Baseline configuration a sweep perturbs. Each sample scores the mean over
/// `population` hands drawn from the perturbed generator with the same seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepBase {
    pub gen: GenParams,
    pub surrogate: SurrogateParams,
    pub evaluator: String,
    pub population: usize,
    pub seed: u64,
    pub degree: usize,
}

impl Default for SweepBase {
    fn default() -> Self {
        SweepBase {
            gen: GenParams::default(),
            surrogate: SurrogateParams::default(),
            evaluator: "rotation".into(),
            population: 8,
            seed: 0,
            degree: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub parameter: usize,
    pub name: String,
    pub value: f64,
    /// Missing when the perturbed configuration was invalid.
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub category: Category,
    pub r: f64,
    pub fit: PolyFit,
    /// Zero score or parameter variance, or fewer than two usable samples.
    pub degenerate: bool,
    pub missing: usize,
    /// 1-based position by decreasing |r|, degenerate entries last.
    pub rank: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub samples: Vec<SampleRow>,
    pub params: Vec<ParamSummary>,
}

pub type EvaluatorFactory<'a> = dyn Fn(&SurrogateParams) -> Result<Box<dyn Evaluator>> + Sync + 'a;

pub fn run_sweep(specs: &[ParamSpec], base: &SweepBase, parallelism: usize) -> Result<SweepResult> {
    evaluator(&base.evaluator, &base.surrogate)?;
    run_sweep_with(specs, base, &|p| evaluator(&base.evaluator, p), parallelism)
}

fn sample_score(
    knob: Knob,
    value: f64,
    base: &SweepBase,
    make: &EvaluatorFactory,
) -> Result<f64> {
    let mut gen = base.gen.clone();
    let mut params = base.surrogate.clone();
    knob.apply(value, &mut gen, &mut params)?;
    let ev = make(&params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(base.seed);
    let mut total = 0.0;
    for _ in 0..base.population {
        total += ev.score(&generate_hand(&gen, &mut rng)?)?;
    }
    Ok(total / base.population as f64)
}

/// Like [`run_sweep`] with a caller-supplied evaluator constructor.
pub fn run_sweep_with(
    specs: &[ParamSpec],
    base: &SweepBase,
    make: &EvaluatorFactory,
    parallelism: usize,
) -> Result<SweepResult> {
    if base.population == 0 {
        return Err(Error::Config("sweep population must be positive".into()));
    }
    let mut jobs = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        for v in grid_sample(spec)? {
            jobs.push((i, v));
        }
    }
    let run = |&(i, v): &(usize, f64)| {
        let score = match sample_score(specs[i].knob, v, base, make) {
            Ok(s) => Some(s),
            Err(e) => {
                log::debug!("{} = {v}: sample skipped: {e}", specs[i].name);
                None
            }
        };
        SampleRow { parameter: i, name: specs[i].name.clone(), value: v, score }
    };
    let samples: Vec<SampleRow> = if parallelism <= 1 {
        jobs.iter().map(run).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(parallelism)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        pool.install(|| jobs.par_iter().map(run).collect())
    };
    let mut params = Vec::with_capacity(specs.len());
    for (i, spec) in specs.iter().enumerate() {
        let (xs, ys): (Vec<f64>, Vec<f64>) =
            samples.iter().filter(|s| s.parameter == i).filter_map(|s| s.score.map(|y| (s.value, y))).unzip();
        let missing = spec.samples - xs.len();
        let (corr, fit) = if xs.len() > base.degree {
            (pearson(&xs, &ys)?, polyfit(&xs, &ys, base.degree)?)
        } else {
            let flat = PolyFit { coeffs: vec![0.0; base.degree + 1], degenerate: true };
            (Correlation { r: 0.0, degenerate: true }, flat)
        };
        params.push(ParamSummary {
            name: spec.name.clone(),
            category: spec.category,
            r: corr.r,
            fit,
            degenerate: corr.degenerate,
            missing,
            rank: 0,
        });
    }
    assign_ranks(&mut params);
    Ok(SweepResult { samples, params })
}

fn ranking(params: &[ParamSummary]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..params.len()).collect();
    order.sort_by(|&a, &b| {
        let (pa, pb) = (&params[a], &params[b]);
        pa.degenerate.cmp(&pb.degenerate).then(pb.r.abs().total_cmp(&pa.r.abs())).then(a.cmp(&b))
    });
    order
}

fn assign_ranks(params: &mut [ParamSummary]) {
    for (pos, i) in ranking(params).into_iter().enumerate() {
        params[i].rank = pos + 1;
    }
}

/// Parameter summaries in rank order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<ParamSummary>,
}

pub fn report(result: &SweepResult) -> Report {
    Report { rows: ranking(&result.params).into_iter().map(|i| result.params[i].clone()).collect() }
}

fn csv_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io("<csv>", io),
        other => Error::Parse { path: "csv".into(), message: format!("{other:?}") },
    }
}

impl Report {
    /// `parameter,r,rank,poly_c0..poly_c3,degenerate`; unused coefficients are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["parameter", "r", "rank", "poly_c0", "poly_c1", "poly_c2", "poly_c3", "degenerate"])
            .map_err(csv_error)?;
        for row in &self.rows {
            let mut rec = vec![row.name.clone(), row.r.to_string(), row.rank.to_string()];
            for k in 0..4 {
                rec.push(row.fit.coeffs.get(k).map_or(String::new(), |c| c.to_string()));
            }
            rec.push(row.degenerate.to_string());
            out.write_record(&rec).map_err(csv_error)?;
        }
        out.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{:<4} {:<20} {:<10} {:>8}  note\n", "rank", "parameter", "category", "r");
        for row in &self.rows {
            let mut note = String::new();
            if row.degenerate {
                note.push_str("degenerate");
            } else if let Some(v) = row.fit.vertex() {
                let kind = if row.fit.coeffs[2] < 0.0 { "peak" } else { "trough" };
                note = format!("{kind} at {v:.4}");
            }
            if row.missing > 0 {
                note.push_str(&format!(" ({} missing)", row.missing));
            }
            let cat = format!("{:?}", row.category).to_lowercase();
            s.push_str(&format!("{:<4} {:<20} {:<10} {:>8.4}  {}\n", row.rank, row.name, cat, row.r, note.trim()));
        }
        s
    }
}

/// `parameter,name,value,score`; missing scores are empty.
pub fn write_samples_csv<W: Write>(result: &SweepResult, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["parameter", "name", "value", "score"]).map_err(csv_error)?;
    for s in &result.samples {
        let score = s.score.map_or(String::new(), |v| v.to_string());
        out.write_record([s.parameter.to_string(), s.name.clone(), s.value.to_string(), score]).map_err(csv_error)?;
    }
    out.flush().map_err(|e| Error::io("<csv>", e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::DesignGraph;

    /// Scores every design by the friction coefficient it was built with.
    struct FrictionEcho(f64);

    impl Evaluator for FrictionEcho {
        fn id(&self) -> &str {
            "echo"
        }
        fn trials(&self) -> usize {
            1
        }
        fn seed(&self) -> u64 {
            0
        }
        fn trial_score(&self, _: &DesignGraph, _: usize) -> f64 {
            self.0
        }
    }

    fn small(name: &str, range: [f64; 2], n: usize, knob: Knob) -> ParamSpec {
        ParamSpec { samples: n, ..ParamSpec::new(name, Category::Physics, range, knob) }
    }

    #[test]
    fn grids() {
        assert_eq!(grid_sample(&small("a", [0.0, 1.0], 3, Knob::Friction)).unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(grid_sample(&small("a", [0.2, 0.9], 2, Knob::Friction)).unwrap(), vec![0.2, 0.9]);
        let g = grid_sample(&small("a", [0.7, 1.3], 100, Knob::ObjectScale)).unwrap();
        assert_eq!((g.len(), g[0], g[99]), (100, 0.7, 1.3));
        for w in g.windows(2) {
            assert!((w[1] - w[0] - 0.6 / 99.0).abs() < 1e-12);
        }
        assert!(grid_sample(&small("a", [1.0, 1.0], 3, Knob::Friction)).is_err());
        assert!(grid_sample(&small("a", [0.0, 1.0], 1, Knob::Friction)).is_err());
    }

    #[test]
    fn linear_echo_has_unit_correlation() {
        let base = SweepBase { population: 2, ..SweepBase::default() };
        let specs = [small("friction", [0.3, 1.2], 20, Knob::Friction)];
        let res = run_sweep_with(&specs, &base, &|p| Ok(Box::new(FrictionEcho(p.friction))), 1).unwrap();
        assert_eq!(res.samples.len(), 20);
        assert!((res.params[0].r - 1.0).abs() < 1e-12);
        assert!(!res.params[0].degenerate);
    }

    #[test]
    fn constant_scores_are_degenerate() {
        // the oracle ignores friction entirely
        let base = SweepBase { evaluator: "oracle".into(), population: 2, ..SweepBase::default() };
        let res = run_sweep(&[small("friction", [0.3, 1.2], 10, Knob::Friction)], &base, 1).unwrap();
        assert_eq!(res.params[0].r, 0.0);
        assert!(res.params[0].degenerate);
    }

    #[test]
    fn invalid_samples_are_missing() {
        // indices above 3 name no fingertip
        let base = SweepBase { population: 1, surrogate: SurrogateParams { trials: 2, ..Default::default() }, ..SweepBase::default() };
        let res = run_sweep(&[small("tip", [0.0, 5.0], 6, Knob::FingertipIndex)], &base, 1).unwrap();
        let missing: Vec<f64> = res.samples.iter().filter(|s| s.score.is_none()).map(|s| s.value).collect();
        assert_eq!(missing, vec![4.0, 5.0]);
        assert_eq!(res.params[0].missing, 2);
    }

    #[test]
    fn default_set_counts() {
        let specs = default_specs();
        assert_eq!(specs.len(), 12);
        assert_eq!(specs.iter().map(|s| s.samples).sum::<usize>(), 1200);
        assert!(specs.iter().all(|s| s.check().is_ok()));
        let names: std::collections::BTreeSet<_> = specs.iter().map(|s| &s.name).collect();
        assert_eq!(names.len(), 12);
    }

    #[test]
    fn ranking_by_magnitude_with_degenerate_last() {
        let row = |name: &str, r: f64, degenerate: bool| ParamSummary {
            name: name.into(),
            category: Category::Physics,
            r,
            fit: PolyFit { coeffs: vec![0.0; 3], degenerate },
            degenerate,
            missing: 0,
            rank: 0,
        };
        let mut params = vec![row("c", 0.1, false), row("z", 0.0, true), row("a", 0.9, false), row("b", -0.5, false)];
        assign_ranks(&mut params);
        let rep = report(&SweepResult { samples: vec![], params });
        let names: Vec<_> = rep.rows.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(names, ["a", "b", "c", "z"]);
        assert_eq!(rep.rows.iter().map(|r| r.rank).collect::<Vec<_>>(), [1, 2, 3, 4]);
        assert!(report(&SweepResult::default()).rows.is_empty());
    }

    #[test]
    fn palm_radius_correlates_negatively_with_rotation() {
        let base = SweepBase { surrogate: SurrogateParams { trials: 16, ..Default::default() }, ..SweepBase::default() };
        let spec = small("palm_radius", [0.04, 0.08], 25, Knob::PalmRadius);
        let res = run_sweep(&[spec], &base, 1).unwrap();
        assert!(res.params[0].r < 0.0, "{}", res.params[0].r);
    }

    #[test]
    fn csv_shapes() {
        let base = SweepBase { population: 1, surrogate: SurrogateParams { trials: 2, ..Default::default() }, ..SweepBase::default() };
        let res = run_sweep(&[small("tip", [0.0, 5.0], 6, Knob::FingertipIndex)], &base, 1).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&res, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 7);
        assert!(text.lines().last().unwrap().ends_with(','));
        let mut buf = Vec::new();
        report(&res).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "parameter,r,rank,poly_c0,poly_c1,poly_c2,poly_c3,degenerate");
        assert!(report(&res).summary().contains("2 missing"));
    }

    #[test]
    fn deterministic_across_parallelism() {
        let base = SweepBase { surrogate: SurrogateParams { trials: 4, ..Default::default() }, ..SweepBase::default() };
        let specs: Vec<_> = default_specs().into_iter().map(|s| ParamSpec { samples: 4, ..s }).collect();
        let a = run_sweep(&specs, &base, 1).unwrap();
        let b = run_sweep(&specs, &base, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 48);
    }
}
