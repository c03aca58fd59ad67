//! Ordering benchmark: fill counts and median solve times per robot, problem
//! class and ordering.

use std::fmt::Write as _;
use std::time::Instant;

use dynfg::dynamics::DynamicsProblem;
use dynfg::{DynError, ElimError, JointState, OrderingChoice, OrderingTag, RobotModel};

use crate::input::StateSampler;
use crate::{CliError, ProblemClass};

pub const MIN_REPETITIONS: usize = 30;

pub const CSV_HEADER: &str = "robot,problem,ordering_tag,n_joints,fill_edges,max_frontal,wall_ns";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchRow {
    pub robot: String,
    pub problem: ProblemClass,
    pub ordering: OrderingTag,
    pub n_joints: usize,
    pub fill_edges: usize,
    pub max_frontal: usize,
    /// Median over the repetitions.
    pub wall_ns: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trend {
    pub robot: String,
    pub claim: String,
    pub holds: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
}

pub struct BenchSpec {
    pub robots: Vec<(String, RobotModel)>,
    pub problems: Vec<ProblemClass>,
    /// Empty means every ordering that applies to the problem class.
    pub orderings: Vec<OrderingChoice>,
    pub repetitions: usize,
    pub seed: u64,
}

/// Orderings tried when none are requested.
pub fn default_orderings(problem: ProblemClass) -> Vec<OrderingChoice> {
    let mut v = match problem {
        ProblemClass::Inverse => vec![OrderingChoice::Rnea],
        ProblemClass::Forward => vec![OrderingChoice::Crba, OrderingChoice::Aba],
        ProblemClass::Hybrid => vec![],
    };
    v.extend([
        OrderingChoice::MinDegree,
        OrderingChoice::ColamdLike,
        OrderingChoice::NestedDissection,
        OrderingChoice::ReverseIndex,
    ]);
    v
}

/// Joint 1 has its acceleration given, the rest their torques.
pub fn bench_state(problem: ProblemClass, n: usize, sampler: &mut StateSampler) -> JointState {
    let q = sampler.angles(n);
    let qd = sampler.unit(n);
    let x = sampler.unit(n);
    match problem {
        ProblemClass::Inverse => JointState::inverse(q, qd, x),
        ProblemClass::Forward => JointState::forward(q, qd, x),
        ProblemClass::Hybrid => {
            let flags: Vec<bool> = (0..n).map(|i| i == 0).collect();
            JointState::hybrid(q, qd, x.clone(), x, &flags)
        }
    }
}

fn median(mut v: Vec<u64>) -> u64 {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2
    }
}

pub fn run_bench(spec: &BenchSpec) -> Result<BenchReport, CliError> {
    if spec.repetitions < MIN_REPETITIONS {
        return Err(CliError::Input(format!(
            "at least {MIN_REPETITIONS} repetitions are needed, got {}",
            spec.repetitions
        )));
    }
    let mut report = BenchReport::default();
    for (name, model) in &spec.robots {
        for &problem in &spec.problems {
            let mut sampler = StateSampler::new(spec.seed);
            let state = bench_state(problem, model.dof(), &mut sampler);
            let dp = DynamicsProblem::new(model, state)?;
            let explicit = !spec.orderings.is_empty();
            let orderings = if explicit {
                spec.orderings.clone()
            } else {
                default_orderings(problem)
            };
            for choice in &orderings {
                let dag = match dp.symbolic(choice) {
                    Ok(d) => d,
                    Err(DynError::Elim(ElimError::WrongProblemClass { .. })) if !explicit => continue,
                    Err(e) => return Err(e.into()),
                };
                let mut times = Vec::with_capacity(spec.repetitions);
                for _ in 0..spec.repetitions {
                    let t0 = Instant::now();
                    let r = dp.solve(choice)?;
                    times.push(t0.elapsed().as_nanos() as u64);
                    std::hint::black_box(r);
                }
                report.rows.push(BenchRow {
                    robot: name.clone(),
                    problem,
                    ordering: choice.tag(),
                    n_joints: model.dof(),
                    fill_edges: dag.stats.fill_edges,
                    max_frontal: dag.stats.max_frontal,
                    wall_ns: median(times),
                });
            }
        }
    }
    Ok(report)
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        self.csv(true)
    }

    /// Same as [`to_csv`](Self::to_csv) without the timing column, which is
    /// the only part that varies between identical runs.
    pub fn to_csv_without_timing(&self) -> String {
        self.csv(false)
    }

    fn csv(&self, timing: bool) -> String {
        let mut s = String::new();
        if timing {
            s.push_str(CSV_HEADER);
        } else {
            s.push_str(CSV_HEADER.trim_end_matches(",wall_ns"));
        }
        s.push('\n');
        for r in &self.rows {
            let _ = write!(
                s,
                "{},{},{},{},{},{}",
                r.robot,
                r.problem.name(),
                r.ordering,
                r.n_joints,
                r.fill_edges,
                r.max_frontal
            );
            if timing {
                let _ = write!(s, ",{}", r.wall_ns);
            }
            s.push('\n');
        }
        s
    }

    pub fn fill(&self, robot: &str, problem: ProblemClass, ordering: OrderingTag) -> Option<usize> {
        self.rows
            .iter()
            .find(|r| r.robot == robot && r.problem == problem && r.ordering == ordering)
            .map(|r| r.fill_edges)
    }

    pub fn min_fill(&self, robot: &str, problem: ProblemClass) -> Option<usize> {
        self.rows
            .iter()
            .filter(|r| r.robot == robot && r.problem == problem)
            .map(|r| r.fill_edges)
            .min()
    }

    /// Fill-count comparisons between the classical and the fill-reducing
    /// orderings, for every robot where both sides were measured.
    pub fn trends(&self) -> Vec<Trend> {
        use OrderingTag::*;
        use ProblemClass::*;
        let checks: [(ProblemClass, OrderingTag, OrderingTag, bool); 4] = [
            (Forward, Aba, Crba, true),
            (Forward, ColamdLike, Aba, false),
            (Forward, NestedDissection, Crba, false),
            (Inverse, ColamdLike, Rnea, false),
        ];
        let mut robots: Vec<&str> = self.rows.iter().map(|r| r.robot.as_str()).collect();
        robots.dedup();
        let mut out = Vec::new();
        for robot in robots {
            for (problem, a, b, strict) in checks {
                if let (Some(fa), Some(fb)) = (self.fill(robot, problem, a), self.fill(robot, problem, b)) {
                    let op = if strict { "<" } else { "<=" };
                    out.push(Trend {
                        robot: robot.to_string(),
                        claim: format!("{} fill({a}) {op} fill({b}): {fa} {op} {fb}", problem.name()),
                        holds: if strict { fa < fb } else { fa <= fb },
                    });
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn medians() {
        assert_eq!(median(vec![3, 1, 2]), 2);
        assert_eq!(median(vec![4, 1, 2, 3]), 2);
    }

    #[test]
    fn too_few_repetitions() {
        let spec = BenchSpec {
            robots: vec![],
            problems: vec![],
            orderings: vec![],
            repetitions: 5,
            seed: 0,
        };
        assert!(matches!(run_bench(&spec), Err(CliError::Input(_))));
    }
}
