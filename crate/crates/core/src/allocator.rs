//! Influence-guided training budget allocation.
//!
//! Every scenario starts at the middle tier (population of 3). Scenarios
//! whose influence score sits more than one population standard deviation
//! below the mean drop to self-play, scenarios more than one above rise to
//! a population of 5. Each drop frees exactly what one rise costs, so a
//! credit counter settles the difference afterwards: leftover credit
//! upgrades the strongest remaining middle-tier scenario, deficits
//! downgrade the weakest, ties go to the scenario declared last. The total
//! always equals three base units per scenario.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

#[allow(unused_imports)]
use num_traits::Float;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sp,
    Pp3,
    Pp5,
}

impl Method {
    /// Population members trained, which is also the budget in base units.
    pub fn units(self) -> u64 {
        match self {
            Method::Sp => 1,
            Method::Pp3 => 3,
            Method::Pp5 => 5,
        }
    }

    pub fn population_size(self) -> usize {
        self.units() as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Sp => "sp",
            Method::Pp3 => "pp3",
            Method::Pp5 => "pp5",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub scenario: String,
    pub loi: f64,
    pub method: Method,
    pub steps: u64,
}

/// A post-sweep rebalancing step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adjustment {
    pub scenario: String,
    pub from: Method,
    pub to: Method,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub assignments: Vec<Assignment>,
    pub total_steps: u64,
    pub mean_loi: f64,
    pub std_loi: f64,
    pub lower_threshold: f64,
    pub upper_threshold: f64,
    pub adjustments: Vec<Adjustment>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AllocError {
    NoScenarios,
    DuplicateScenario(String),
    NonFinite(String),
    ZeroBaseUnit,
    /// The rebalancing loop ran out of middle-tier scenarios. The score
    /// geometry makes this unreachable for real inputs; kept as a guard.
    Unbalanced(i64),
}

impl fmt::Display for AllocError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AllocError::NoScenarios => write!(f, "no scenarios to allocate"),
            AllocError::DuplicateScenario(s) => write!(f, "scenario {s} listed twice"),
            AllocError::NonFinite(s) => write!(f, "scenario {s} has a non-finite score"),
            AllocError::ZeroBaseUnit => write!(f, "base unit must be positive"),
            AllocError::Unbalanced(c) => {
                write!(f, "could not settle a budget credit of {c}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for AllocError {}

/// Allocates `3 * base_unit * scores.len()` training steps across the
/// scenarios according to their influence scores.
pub fn allocate(scores: &[(String, f64)], base_unit: u64) -> Result<AllocationPlan, AllocError> {
    if scores.is_empty() {
        return Err(AllocError::NoScenarios);
    }
    if base_unit == 0 {
        return Err(AllocError::ZeroBaseUnit);
    }
    for (i, (name, loi)) in scores.iter().enumerate() {
        if !loi.is_finite() {
            return Err(AllocError::NonFinite(name.clone()));
        }
        if scores[..i].iter().any(|(other, _)| other == name) {
            return Err(AllocError::DuplicateScenario(name.clone()));
        }
    }

    let n = scores.len() as f64;
    let mean = scores.iter().map(|(_, v)| v).sum::<f64>() / n;
    let var = scores.iter().map(|(_, v)| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    let lower = mean - std;
    let upper = mean + std;

    let mut methods: Vec<Method> = Vec::with_capacity(scores.len());
    let mut credit: i64 = 0;
    for (_, loi) in scores {
        let method = if *loi < lower {
            credit += 1;
            Method::Sp
        } else if *loi > upper {
            credit -= 1;
            Method::Pp5
        } else {
            Method::Pp3
        };
        methods.push(method);
    }

    let mut adjustments = Vec::new();
    while credit != 0 {
        // Scan keeps the last qualifying index, so ties resolve to the
        // scenario declared last.
        let mut pick: Option<(usize, f64)> = None;
        for (idx, (method, (_, loi))) in methods.iter().zip(scores).enumerate() {
            if *method != Method::Pp3 {
                continue;
            }
            let better = match pick {
                None => true,
                Some((_, best)) => {
                    if credit > 0 {
                        *loi >= best
                    } else {
                        *loi <= best
                    }
                }
            };
            if better {
                pick = Some((idx, *loi));
            }
        }
        let Some((idx, _)) = pick else {
            return Err(AllocError::Unbalanced(credit));
        };
        let to = if credit > 0 {
            credit -= 1;
            Method::Pp5
        } else {
            credit += 1;
            Method::Sp
        };
        adjustments.push(Adjustment {
            scenario: scores[idx].0.clone(),
            from: Method::Pp3,
            to,
        });
        methods[idx] = to;
    }

    let assignments: Vec<Assignment> = scores
        .iter()
        .zip(&methods)
        .map(|((name, loi), method)| Assignment {
            scenario: name.clone(),
            loi: *loi,
            method: *method,
            steps: method.units() * base_unit,
        })
        .collect();
    let total_steps: u64 = assignments.iter().map(|a| a.steps).sum();
    debug_assert_eq!(total_steps, 3 * base_unit * scores.len() as u64);

    Ok(AllocationPlan {
        assignments,
        total_steps,
        mean_loi: mean,
        std_loi: std,
        lower_threshold: lower,
        upper_threshold: upper,
        adjustments,
    })
}
