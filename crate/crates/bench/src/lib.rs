//! Fixtures shared by the benchmarks.

use har_core::{EventStream, RoutineSpec};

const ROUTINE: &str = include_str!("../../../data/routine_30d.json");

/// The 30-day example routine, truncated or extended to `days`.
pub fn routine(days: u32) -> EventStream {
    let mut spec = RoutineSpec::from_json(ROUTINE).expect("valid routine");
    spec.days = days;
    har_core::generate(&spec).expect("valid routine")
}
