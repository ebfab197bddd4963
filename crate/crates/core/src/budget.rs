//! Process-wide resource limits.
//!
//! Brute-force kernels refuse instances whose multiply-add count exceeds the
//! work budget, and grid constructors refuse allocations above the cell
//! budget. Both are plain atomics so the CLI can set them once at startup.

use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use crate::error::{GhkError, Result};

pub const DEFAULT_WORK_BUDGET: u64 = 1_000_000_000;
pub const DEFAULT_CELL_BUDGET: usize = 1 << 26;

static WORK_BUDGET: AtomicU64 = AtomicU64::new(DEFAULT_WORK_BUDGET);
static CELL_BUDGET: AtomicUsize = AtomicUsize::new(DEFAULT_CELL_BUDGET);

pub fn work_budget() -> u64 {
    WORK_BUDGET.load(Ordering::Relaxed)
}

pub fn set_work_budget(ops: u64) {
    WORK_BUDGET.store(ops, Ordering::Relaxed);
}

pub fn cell_budget() -> usize {
    CELL_BUDGET.load(Ordering::Relaxed)
}

pub fn set_cell_budget(cells: usize) {
    CELL_BUDGET.store(cells, Ordering::Relaxed);
}

pub(crate) fn check_work(op: &'static str, work: u128) -> Result<()> {
    let budget = work_budget();
    if work > budget as u128 {
        return Err(GhkError::BudgetExceeded { op, work, budget });
    }
    Ok(())
}

pub(crate) fn check_cells(op: &'static str, cells: u128) -> Result<()> {
    let budget = cell_budget();
    if cells > budget as u128 {
        return Err(GhkError::MemoryBudget { op, cells, budget });
    }
    Ok(())
}
