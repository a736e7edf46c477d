//! Simulated liability lifecycle: a customer orders, a provider submits a
//! result log, a validator confirms or rejects it by model checking.

mod ledger;
mod store;

use std::sync::atomic::{AtomicBool, Ordering};
use std::thread;
use std::time::Duration;

pub use ledger::{
    EventKind, Ledger, LedgerError, LedgerEvent, Liability, LiabilityId, Status, VerdictKind,
};
pub use store::{ContentHash, ContentStore, StoreError};

use crate::conformance::{check_texts, CheckOptions, RejectReason, Rejection};

pub const POLL_INTERVAL: Duration = Duration::from_millis(500);

/// Outcome of validating one liability.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Processed {
    pub id: LiabilityId,
    pub verdict: VerdictKind,
    pub rejection: Option<Rejection>,
}

/// Checks the stored result of `id` against its stored model and records
/// the verdict. Anything wrong with the artifacts is a rejection; only an
/// unknown id, a wrong status or ledger I/O is an error.
pub fn validate(
    ledger: &mut Ledger,
    store: &ContentStore,
    id: LiabilityId,
    opts: CheckOptions,
) -> Result<Processed, LedgerError> {
    let liability = ledger.liability(id).ok_or(LedgerError::UnknownLiability(id))?;
    if liability.status != Status::ResultSubmitted {
        return Err(LedgerError::WrongStatus {
            id,
            status: liability.status,
            event: "Verdict",
        });
    }
    let outcome = derive_verdict(store, liability, opts);
    let (verdict, reason, detail) = match &outcome {
        Ok(()) => (VerdictKind::Confirmed, None, None),
        Err(r) => (
            VerdictKind::Rejected,
            Some(r.reason.code().to_string()),
            Some(r.detail.clone()),
        ),
    };
    ledger.record_verdict(id, verdict, reason, detail)?;
    Ok(Processed {
        id,
        verdict,
        rejection: outcome.err(),
    })
}

/// Pure re-derivation of a verdict from stored artifacts.
pub fn derive_verdict(
    store: &ContentStore,
    liability: &Liability,
    opts: CheckOptions,
) -> Result<(), Rejection> {
    let fetch = |hash: &ContentHash, what: &str, reason: RejectReason| {
        let bytes = store
            .get(hash)
            .map_err(|e| Rejection::new(RejectReason::MissingArtifact, format!("{what}: {e}")))?;
        String::from_utf8(bytes)
            .map_err(|_| Rejection::new(reason, format!("{what} is not valid UTF-8")))
    };
    let model = fetch(&liability.model_hash, "model", RejectReason::ModelParse)?;
    let result_hash = liability
        .result_hash
        .as_ref()
        .ok_or_else(|| Rejection::new(RejectReason::MissingArtifact, "no result submitted"))?;
    let log = fetch(result_hash, "result", RejectReason::LogParse)?;
    check_texts(&model, &log, opts)
}

/// Validates every pending liability in submission order. With `watch`,
/// keeps polling the ledger file every [`POLL_INTERVAL`] until `stop` is set.
pub fn run_validator(
    ledger: &mut Ledger,
    store: &ContentStore,
    opts: CheckOptions,
    watch: Option<&AtomicBool>,
    on_verdict: &mut dyn FnMut(&Processed),
) -> Result<Vec<Processed>, LedgerError> {
    let mut processed = Vec::new();
    loop {
        for id in ledger.pending() {
            let p = validate(ledger, store, id, opts)?;
            on_verdict(&p);
            processed.push(p);
        }
        let Some(stop) = watch else { break };
        if stop.load(Ordering::Relaxed) {
            break;
        }
        thread::sleep(POLL_INTERVAL);
        ledger.reload()?;
    }
    Ok(processed)
}
