//! Delivery for cyclic wraparound access.
//!
//! With only `C` users (user `k` reads caches `k, k+1, ..., k+L-1` mod `C`)
//! most `(t+L)`-subsets serve nobody, so only subsets containing a cyclic
//! window are transmitted. When even that costs more than treating user `k`
//! as the owner of cache `k` alone, the dedicated-cache delivery is used
//! instead and the other `L - 1` caches go unused.

use crate::combinatorics::{enumerate_subsets, SubsetId};
use crate::error::Result;
use crate::placement::{cyclic_window, AccessStructure, SystemParams};
use crate::protocol::{run_with_library, DemandVector, SimulationOutcome};
use crate::placement::{make_library, LibrarySource};
use crate::rates::{cyclic_branch, CyclicBranch};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlanMode {
    MultiaccessCyclic,
    DedicatedFallback,
}

impl PlanMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::MultiaccessCyclic => "multiaccess-cyclic",
            Self::DedicatedFallback => "dedicated-fallback",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransmissionPlan {
    pub mode: PlanMode,
    pub family: Vec<SubsetId>,
}

impl TransmissionPlan {
    pub fn expected_transmissions(&self) -> usize {
        self.family.len()
    }
}

/// `(t+L)`-subsets of `[C]` containing at least one cyclic window of length `L`.
pub fn cyclic_subset_family(caches: usize, access_degree: usize, t: usize) -> Vec<SubsetId> {
    let width = t + access_degree;
    if access_degree == 0 || width > caches {
        return Vec::new();
    }
    let windows: Vec<Vec<usize>> = (1..=caches)
        .map(|k| cyclic_window(k, access_degree, caches))
        .collect();
    enumerate_subsets(caches, width)
        .into_iter()
        .filter(|s| windows.iter().any(|w| w.iter().all(|&x| s.contains(x))))
        .collect()
}

/// The cheaper of the two deliveries; ties go to multi-access.
pub fn choose_plan(caches: usize, access_degree: usize, t: usize) -> Result<TransmissionPlan> {
    if t + access_degree > caches {
        return Ok(TransmissionPlan {
            mode: PlanMode::MultiaccessCyclic,
            family: Vec::new(),
        });
    }
    Ok(match cyclic_branch(caches, access_degree, t)? {
        CyclicBranch::MultiAccess => TransmissionPlan {
            mode: PlanMode::MultiaccessCyclic,
            family: cyclic_subset_family(caches, access_degree, t),
        },
        CyclicBranch::Dedicated => TransmissionPlan {
            mode: PlanMode::DedicatedFallback,
            family: enumerate_subsets(caches, t + 1),
        },
    })
}

/// Parameters and access structure a plan actually runs on.
pub fn delivery_setup(
    params: &SystemParams,
    plan: &TransmissionPlan,
) -> Result<(SystemParams, AccessStructure)> {
    match plan.mode {
        PlanMode::MultiaccessCyclic => Ok((
            params.clone(),
            AccessStructure::cyclic(params.caches(), params.access_degree())?,
        )),
        PlanMode::DedicatedFallback => dedicated_fallback(params),
    }
}

/// The `L = 1`, `K = C` instance: user `k` keeps only cache `k`.
pub fn dedicated_fallback(params: &SystemParams) -> Result<(SystemParams, AccessStructure)> {
    Ok((
        params.with_access_degree(1)?,
        AccessStructure::full(params.caches(), 1)?,
    ))
}

#[derive(Debug, Clone)]
pub struct CyclicOutcome {
    pub plan: TransmissionPlan,
    pub outcome: SimulationOutcome,
}

/// Simulate cyclic access under a given plan. Demands are indexed by `k`.
pub fn run_cyclic_plan(
    params: &SystemParams,
    plan: &TransmissionPlan,
    demands: &[usize],
    seed: u64,
) -> Result<CyclicOutcome> {
    let (run_params, access) = delivery_setup(params, plan)?;
    let demands = DemandVector::new(demands.to_vec(), &access, params.files())?;
    let library = make_library(&run_params, LibrarySource::Seeded(seed))?;
    let outcome = run_with_library(&run_params, &access, &plan.family, &demands, &library, seed)?;
    Ok(CyclicOutcome {
        plan: plan.clone(),
        outcome,
    })
}

/// Simulate cyclic access with the plan picked by [`choose_plan`].
pub fn run_cyclic(params: &SystemParams, demands: &[usize], seed: u64) -> Result<CyclicOutcome> {
    let plan = choose_plan(params.caches(), params.access_degree(), params.t())?;
    run_cyclic_plan(params, &plan, demands, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::cyc_closed_form;
    use crate::rates::rate_theorem3;
    use crate::Exact;

    #[test]
    fn family_sizes() {
        assert_eq!(cyclic_subset_family(8, 2, 2).len(), 68);
        assert_eq!(cyclic_subset_family(8, 2, 3).len(), 56);
        let pairs: Vec<String> = cyclic_subset_family(4, 2, 0)
            .iter()
            .map(ToString::to_string)
            .collect();
        assert_eq!(pairs, ["{1,2}", "{1,4}", "{2,3}", "{3,4}"]);
        for c in 2..=12 {
            for l in 1..c {
                for t in 0..=c - l {
                    let n = cyclic_subset_family(c, l, t).len() as u64;
                    assert_eq!(n, cyc_closed_form(c, t + l, l).unwrap().total);
                }
            }
        }
    }

    #[test]
    fn family_covers_every_missing_subfile() {
        for c in 3..=8 {
            for l in 1..c {
                for t in 0..=c - l {
                    let family = cyclic_subset_family(c, l, t);
                    let access = AccessStructure::cyclic(c, l).unwrap();
                    for user in access.users() {
                        for idx in enumerate_subsets(c, t) {
                            if idx.is_disjoint(user) {
                                assert!(family.contains(&user.union(&idx)));
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn plan_choices() {
        let plan = choose_plan(8, 2, 2).unwrap();
        assert_eq!(plan.mode, PlanMode::DedicatedFallback);
        assert_eq!(plan.expected_transmissions(), 56);
        let plan = choose_plan(8, 2, 3).unwrap();
        assert_eq!(plan.mode, PlanMode::MultiaccessCyclic);
        assert_eq!(plan.expected_transmissions(), 56);
        let plan = choose_plan(6, 2, 4).unwrap();
        assert_eq!(plan.mode, PlanMode::MultiaccessCyclic);
        assert_eq!(plan.family.len(), 1);
    }

    #[test]
    fn single_window_plans_coincide() {
        for t in 0..=4 {
            let plan = choose_plan(5, 1, t).unwrap();
            assert_eq!(plan.mode, PlanMode::MultiaccessCyclic);
            assert_eq!(plan.family, enumerate_subsets(5, t + 1));
        }
    }

    #[test]
    fn both_modes_decode_the_same_files() {
        let params = SystemParams::new(2, 2, 4, 2, 1, 64).unwrap();
        let demands = [1, 2, 2, 1];
        let multi = TransmissionPlan {
            mode: PlanMode::MultiaccessCyclic,
            family: cyclic_subset_family(4, 2, 1),
        };
        let dedicated = TransmissionPlan {
            mode: PlanMode::DedicatedFallback,
            family: enumerate_subsets(4, 2),
        };
        let a = run_cyclic_plan(&params, &multi, &demands, 4).unwrap();
        let b = run_cyclic_plan(&params, &dedicated, &demands, 4).unwrap();
        assert!(a.outcome.all_decoded() && b.outcome.all_decoded());
        assert_eq!(a.outcome.outputs, b.outcome.outputs);
    }

    #[test]
    fn measured_rate_matches_closed_form() {
        for c in 3..=6 {
            for l in 1..c {
                for t in 0..=c - l {
                    let params = SystemParams::new(2, 2, c, l, t, 1).unwrap();
                    let demands: Vec<usize> = (0..c).map(|k| k % 2 + 1).collect();
                    let out = run_cyclic(&params, &demands, 1).unwrap();
                    let expected: Exact = rate_theorem3(c, l, t, 2, 2).unwrap();
                    assert_eq!(out.outcome.log.measured_rate, expected, "C={c} L={l} t={t}");
                }
            }
        }
    }
}
