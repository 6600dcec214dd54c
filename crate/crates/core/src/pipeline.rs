//! Dummy-extended oracles sharing one query ledger, plus per-phase accounting.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::extension::{ExtensionEvaluator, DEFAULT_FF_CAP};
use crate::ground::SubsetMask;
use crate::matroids::{dummy_block, extend_with_dummies, rank, DummyExtended, IndependenceOracle};
use crate::oracles::{counted, Counted, LedgerCounts, QueryLedger, ValueOracle, WithDummies};

pub type ExtendedObjective<'a> = Counted<WithDummies<&'a dyn ValueOracle>>;
pub type ExtendedMatroid<'a> = Counted<DummyExtended<&'a dyn IndependenceOracle>>;

/// `f` and `M` augmented with `r` dummy elements directly above the ground set. Both count
/// into the same ledger; building them issues no counted queries.
pub struct Extended<'a> {
    pub dummies: SubsetMask,
    pub rank: usize,
    pub ledger: Arc<QueryLedger>,
    pub f: ExtendedObjective<'a>,
    pub m: ExtendedMatroid<'a>,
}

impl<'a> Extended<'a> {
    pub fn new(f: &'a dyn ValueOracle, m: &'a dyn IndependenceOracle) -> Result<Self> {
        let r = rank(m, m.ground());
        let dummies = dummy_block(m.ground() | f.ground(), r);
        let ledger = QueryLedger::new();
        let m = counted(extend_with_dummies(m, dummies)?, ledger.clone());
        let f = counted(WithDummies::new(f, dummies), ledger.clone());
        Ok(Extended {
            dummies,
            rank: r,
            ledger,
            f,
            m,
        })
    }

    pub fn evaluator(&self) -> ExtensionEvaluator<&ExtendedObjective<'a>> {
        self.evaluator_with_cap(DEFAULT_FF_CAP)
    }

    pub fn evaluator_with_cap(&self, ff_cap: usize) -> ExtensionEvaluator<&ExtendedObjective<'a>> {
        ExtensionEvaluator::new(&self.f).with_ff_cap(ff_cap)
    }

    pub fn counts(&self) -> LedgerCounts {
        self.ledger.counts()
    }
}

/// Queries issued during one named phase of a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseCounts {
    pub phase: String,
    pub value_queries: u64,
    pub independence_queries: u64,
}

/// Runs `body` and appends the queries it issued on `ledger` under `name`.
pub fn phase<T>(
    ledger: &QueryLedger,
    name: &str,
    phases: &mut Vec<PhaseCounts>,
    body: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let before = ledger.counts();
    let out = body();
    let d = ledger.counts() - before;
    phases.push(PhaseCounts {
        phase: name.to_string(),
        value_queries: d.value_queries,
        independence_queries: d.independence_queries,
    });
    out
}

/// Sum of all phases, labelled `total`.
pub fn total(phases: &[PhaseCounts]) -> PhaseCounts {
    PhaseCounts {
        phase: "total".into(),
        value_queries: phases.iter().map(|p| p.value_queries).sum(),
        independence_queries: phases.iter().map(|p| p.independence_queries).sum(),
    }
}
