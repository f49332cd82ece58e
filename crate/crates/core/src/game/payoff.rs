//! Matrix-game payoff resolution.
//!
//! Only the row player's matrix is stored; the column player's matrix is
//! always its transpose, so both agents face the same symmetric game.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::game::Inventory;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PayoffMatrix {
    pub name: String,
    pub k: usize,
    pub row_payoff: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PayoffError {
    TooFewTypes { k: usize },
    NotSquare { rows: usize, row: usize, len: usize },
    NonFinite { row: usize, col: usize },
}

impl fmt::Display for PayoffError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PayoffError::TooFewTypes { k } => {
                write!(f, "payoff matrix needs at least 2 resource types, got {k}")
            }
            PayoffError::NotSquare { rows, row, len } => {
                write!(f, "payoff row {row} has {len} entries, expected {rows}")
            }
            PayoffError::NonFinite { row, col } => {
                write!(f, "payoff entry ({row},{col}) is not finite")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PayoffError {}

impl PayoffMatrix {
    pub fn new(name: &str, row_payoff: Vec<Vec<f64>>) -> Result<PayoffMatrix, PayoffError> {
        let k = row_payoff.len();
        if k < 2 {
            return Err(PayoffError::TooFewTypes { k });
        }
        for (r, row) in row_payoff.iter().enumerate() {
            if row.len() != k {
                return Err(PayoffError::NotSquare {
                    rows: k,
                    row: r,
                    len: row.len(),
                });
            }
            for (c, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(PayoffError::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(PayoffMatrix {
            name: String::from(name),
            k,
            row_payoff,
        })
    }
}

/// How beam contact turns inventories into rewards: `Mixed` evaluates the
/// bilinear expected payoff over both mixed strategies; `Sampled` draws one
/// pure strategy per agent from its mixed weights and pays the matrix entry.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PayoffMode {
    #[default]
    Mixed,
    Sampled,
}

/// Expected payoffs for mixed strategies: the row player receives
/// nu_row' A nu_col and the column player nu_row' A' nu_col.
pub fn bilinear_payoff(nu_row: &[f64], nu_col: &[f64], payoff: &PayoffMatrix) -> (f64, f64) {
    let mut r_row = 0.0;
    let mut r_col = 0.0;
    for (i, wr) in nu_row.iter().enumerate() {
        for (j, wc) in nu_col.iter().enumerate() {
            let w = wr * wc;
            r_row += w * payoff.row_payoff[i][j];
            r_col += w * payoff.row_payoff[j][i];
        }
    }
    (r_row, r_col)
}

/// Resolves a beam contact. Returns `None` when either inventory is empty:
/// such a hit is inert (no payoff, no respawn).
pub fn resolve_interaction(
    inv_row: &Inventory,
    inv_col: &Inventory,
    payoff: &PayoffMatrix,
) -> Option<(f64, f64)> {
    let nu_row = inv_row.mixed_weights()?;
    let nu_col = inv_col.mixed_weights()?;
    Some(bilinear_payoff(&nu_row, &nu_col, payoff))
}
