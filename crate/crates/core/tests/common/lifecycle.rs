//! Randomized ledger operation sequences checked against a reference
//! status machine.

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use tracecheck::lifecycle::{
    ContentHash, ContentStore, EventKind, Ledger, LiabilityId, Status, VerdictKind,
};

fn legal(from: Option<Status>, event: &EventKind) -> Option<Status> {
    match (from, event) {
        (None, EventKind::LiabilityCreated { .. }) => Some(Status::Created),
        (Some(Status::Created), EventKind::ResultSubmitted { .. }) => Some(Status::ResultSubmitted),
        (Some(Status::ResultSubmitted), EventKind::Verdict { verdict, .. }) => Some(match verdict {
            VerdictKind::Confirmed => Status::Confirmed,
            VerdictKind::Rejected => Status::Rejected,
        }),
        _ => None,
    }
}

/// Runs `ops` random operations against a file-backed ledger and checks
/// every outcome against the reference machine, then audits the persisted
/// history. Returns a description of the first discrepancy.
pub fn run_sequence(seed: u64, ops: usize) -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(seed);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let store = ContentStore::open(dir.path().join("store")).map_err(|e| e.to_string())?;
    let path = dir.path().join("ledger.jsonl");
    let stored = store.put(b"artifact").map_err(|e| e.to_string())?;
    let unstored = ContentHash::of(b"never stored");
    let mut ledger = Ledger::open(&path).map_err(|e| e.to_string())?;
    let mut reference: BTreeMap<LiabilityId, Status> = BTreeMap::new();

    for step in 0..ops {
        let max_id = reference.len() as u64 + 2;
        let id = rng.gen_range(1..=max_id);
        let hash = if rng.gen_bool(0.9) { stored.clone() } else { unstored.clone() };
        let verdict = if rng.gen_bool(0.5) { VerdictKind::Confirmed } else { VerdictKind::Rejected };
        let (event, result) = match rng.gen_range(0..6) {
            0 => {
                let next = reference.keys().next_back().map_or(1, |m| m + 1);
                let r = ledger.create_liability(&store, "a", "b", hash.clone(), stored.clone());
                let event = EventKind::LiabilityCreated {
                    id: next,
                    promisor: "a".into(),
                    promisee: "b".into(),
                    model_hash: hash.clone(),
                    objective_hash: stored.clone(),
                };
                (event, r.map(|_| ()))
            }
            1 => (
                EventKind::ResultSubmitted { id, result_hash: hash.clone() },
                ledger.submit_result(&store, id, hash.clone()),
            ),
            2 | 3 => (
                EventKind::Verdict { id, verdict, reason: None, detail: None },
                ledger.record_verdict(id, verdict, None, None).map(|_| ()),
            ),
            4 => {
                // raw append bypassing the convenience methods
                let event = match rng.gen_range(0..3) {
                    0 => EventKind::LiabilityCreated {
                        id,
                        promisor: "x".into(),
                        promisee: "y".into(),
                        model_hash: stored.clone(),
                        objective_hash: stored.clone(),
                    },
                    1 => EventKind::ResultSubmitted { id, result_hash: stored.clone() },
                    _ => EventKind::Verdict { id, verdict, reason: Some("r".into()), detail: None },
                };
                let r = ledger.append(event.clone()).map(|_| ());
                (event, r)
            }
            _ => {
                ledger.reload().map_err(|e| format!("step {step}: reload failed: {e}"))?;
                continue;
            }
        };
        let from = reference.get(&event.id()).copied();
        let mut expected = legal(from, &event);
        let dangling = match &event {
            EventKind::LiabilityCreated { model_hash, .. } => *model_hash == unstored,
            EventKind::ResultSubmitted { result_hash, .. } => *result_hash == unstored,
            EventKind::Verdict { .. } => false,
        };
        // the convenience constructors check the store; raw appends do not
        if dangling {
            expected = None;
        }
        match (expected, &result) {
            (Some(to), Ok(())) => {
                reference.insert(event.id(), to);
            }
            (None, Err(_)) => {}
            (Some(_), Err(e)) => return Err(format!("step {step}: legal {event:?} refused: {e}")),
            (None, Ok(())) => return Err(format!("step {step}: illegal {event:?} accepted")),
        }
        for (id, status) in &reference {
            let actual = ledger.liability(*id).map(|l| l.status);
            if actual != Some(*status) {
                return Err(format!("step {step}: liability {id} is {actual:?}, expected {status}"));
            }
        }
    }

    // audit the persisted history from scratch
    let reopened = Ledger::open(&path).map_err(|e| format!("reopen: {e}"))?;
    let mut replayed: BTreeMap<LiabilityId, Status> = BTreeMap::new();
    let mut verdicts: BTreeMap<LiabilityId, usize> = BTreeMap::new();
    for (i, e) in reopened.events().iter().enumerate() {
        if e.seq != i as u64 + 1 {
            return Err(format!("seq gap at event {}", i + 1));
        }
        let to = legal(replayed.get(&e.kind.id()).copied(), &e.kind)
            .ok_or_else(|| format!("illegal transition persisted: {:?}", e.kind))?;
        replayed.insert(e.kind.id(), to);
        if let EventKind::Verdict { id, .. } = e.kind {
            *verdicts.entry(id).or_default() += 1;
        }
    }
    if let Some((id, n)) = verdicts.iter().find(|(_, &n)| n > 1) {
        return Err(format!("liability {id} has {n} verdicts"));
    }
    if replayed != reference {
        return Err("persisted history disagrees with the reference machine".into());
    }
    Ok(())
}
