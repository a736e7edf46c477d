use std::collections::BTreeMap;
use std::fmt;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::store::{ContentHash, ContentStore};

pub type LiabilityId = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictKind {
    Confirmed,
    Rejected,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Confirmed => "Confirmed",
            VerdictKind::Rejected => "Rejected",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum EventKind {
    LiabilityCreated {
        id: LiabilityId,
        promisor: String,
        promisee: String,
        model_hash: ContentHash,
        objective_hash: ContentHash,
    },
    ResultSubmitted {
        id: LiabilityId,
        result_hash: ContentHash,
    },
    Verdict {
        id: LiabilityId,
        verdict: VerdictKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        detail: Option<String>,
    },
}

impl EventKind {
    pub fn id(&self) -> LiabilityId {
        match self {
            EventKind::LiabilityCreated { id, .. }
            | EventKind::ResultSubmitted { id, .. }
            | EventKind::Verdict { id, .. } => *id,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            EventKind::LiabilityCreated { .. } => "LiabilityCreated",
            EventKind::ResultSubmitted { .. } => "ResultSubmitted",
            EventKind::Verdict { .. } => "Verdict",
        }
    }
}

/// One line of `ledger.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Created,
    ResultSubmitted,
    Confirmed,
    Rejected,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Liability {
    pub id: LiabilityId,
    pub promisor: String,
    pub promisee: String,
    pub model_hash: ContentHash,
    pub objective_hash: ContentHash,
    pub result_hash: Option<ContentHash>,
    pub status: Status,
    pub reason: Option<String>,
    /// Sequence number of the `ResultSubmitted` event, once there is one.
    pub submitted_seq: Option<u64>,
}

#[derive(Debug, Error)]
pub enum LedgerError {
    #[error("unknown liability {0}")]
    UnknownLiability(LiabilityId),
    #[error("liability {0} already exists")]
    DuplicateLiability(LiabilityId),
    #[error("wrong status: liability {id} is {status}, cannot apply {event}")]
    WrongStatus {
        id: LiabilityId,
        status: Status,
        event: &'static str,
    },
    #[error("hash {0} is not in the content store")]
    Dangling(ContentHash),
    #[error("ledger line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error("ledger I/O on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Append-only event log folded into liability states. Every appended
/// event passes the status state machine first.
#[derive(Debug, Default)]
pub struct Ledger {
    path: Option<PathBuf>,
    events: Vec<LedgerEvent>,
    liabilities: BTreeMap<LiabilityId, Liability>,
}

impl Ledger {
    pub fn in_memory() -> Ledger {
        Ledger::default()
    }

    /// Loads a JSON-lines ledger, treating a missing file as empty.
    pub fn open(path: impl Into<PathBuf>) -> Result<Ledger, LedgerError> {
        let mut ledger = Ledger {
            path: Some(path.into()),
            ..Ledger::default()
        };
        ledger.reload()?;
        Ok(ledger)
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Re-reads the backing file from scratch.
    pub fn reload(&mut self) -> Result<(), LedgerError> {
        let Some(path) = self.path.clone() else {
            return Ok(());
        };
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => String::new(),
            Err(source) => return Err(LedgerError::Io { path, source }),
        };
        self.events.clear();
        self.liabilities.clear();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let corrupt = |message: String| LedgerError::Corrupt {
                line: i + 1,
                message,
            };
            let event: LedgerEvent =
                serde_json::from_str(line).map_err(|e| corrupt(e.to_string()))?;
            let expected = self.next_seq();
            if event.seq != expected {
                return Err(corrupt(format!("seq {} where {expected} expected", event.seq)));
            }
            self.fold(&event).map_err(|e| corrupt(e.to_string()))?;
            self.events.push(event);
        }
        Ok(())
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    pub fn liability(&self, id: LiabilityId) -> Option<&Liability> {
        self.liabilities.get(&id)
    }

    pub fn liabilities(&self) -> impl Iterator<Item = &Liability> {
        self.liabilities.values()
    }

    fn next_seq(&self) -> u64 {
        self.events.last().map_or(1, |e| e.seq + 1)
    }

    fn next_id(&self) -> LiabilityId {
        self.liabilities.keys().next_back().map_or(1, |id| id + 1)
    }

    /// Liabilities with a submitted result and no verdict, in order of
    /// their submission events.
    pub fn pending(&self) -> Vec<LiabilityId> {
        let mut out: Vec<(u64, LiabilityId)> = self
            .liabilities
            .values()
            .filter(|l| l.status == Status::ResultSubmitted)
            .map(|l| (l.submitted_seq.unwrap_or(0), l.id))
            .collect();
        out.sort_unstable();
        out.into_iter().map(|(_, id)| id).collect()
    }

    /// Applies the state machine for `event` without recording it.
    fn fold(&mut self, event: &LedgerEvent) -> Result<(), LedgerError> {
        let wrong = |l: &Liability, kind: &EventKind| LedgerError::WrongStatus {
            id: l.id,
            status: l.status,
            event: kind.name(),
        };
        match &event.kind {
            EventKind::LiabilityCreated {
                id,
                promisor,
                promisee,
                model_hash,
                objective_hash,
            } => {
                if self.liabilities.contains_key(id) {
                    return Err(LedgerError::DuplicateLiability(*id));
                }
                self.liabilities.insert(
                    *id,
                    Liability {
                        id: *id,
                        promisor: promisor.clone(),
                        promisee: promisee.clone(),
                        model_hash: model_hash.clone(),
                        objective_hash: objective_hash.clone(),
                        result_hash: None,
                        status: Status::Created,
                        reason: None,
                        submitted_seq: None,
                    },
                );
            }
            EventKind::ResultSubmitted { id, result_hash } => {
                let l = self
                    .liabilities
                    .get_mut(id)
                    .ok_or(LedgerError::UnknownLiability(*id))?;
                if l.status != Status::Created {
                    return Err(wrong(l, &event.kind));
                }
                l.status = Status::ResultSubmitted;
                l.result_hash = Some(result_hash.clone());
                l.submitted_seq = Some(event.seq);
            }
            EventKind::Verdict {
                id,
                verdict,
                reason,
                ..
            } => {
                let l = self
                    .liabilities
                    .get_mut(id)
                    .ok_or(LedgerError::UnknownLiability(*id))?;
                if l.status != Status::ResultSubmitted {
                    return Err(wrong(l, &event.kind));
                }
                l.status = match verdict {
                    VerdictKind::Confirmed => Status::Confirmed,
                    VerdictKind::Rejected => Status::Rejected,
                };
                l.reason = reason.clone();
            }
        }
        Ok(())
    }

    /// Validates, persists and records one event; returns its sequence number.
    pub fn append(&mut self, kind: EventKind) -> Result<u64, LedgerError> {
        let event = LedgerEvent {
            seq: self.next_seq(),
            kind,
        };
        // a failed write must leave the in-memory state untouched
        let id = event.kind.id();
        let before = self.liabilities.get(&id).cloned();
        self.fold(&event)?;
        if let Err(e) = self.persist(&event) {
            match before {
                Some(l) => {
                    self.liabilities.insert(id, l);
                }
                None => {
                    self.liabilities.remove(&id);
                }
            }
            return Err(e);
        }
        let seq = event.seq;
        self.events.push(event);
        Ok(seq)
    }

    fn persist(&self, event: &LedgerEvent) -> Result<(), LedgerError> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let io_err = |source| LedgerError::Io {
            path: path.clone(),
            source,
        };
        let mut line = serde_json::to_string(event).expect("ledger events serialize");
        line.push('\n');
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        file.write_all(line.as_bytes()).map_err(io_err)?;
        file.flush().map_err(io_err)
    }

    /// Records a new liability; both artifacts must already be stored.
    pub fn create_liability(
        &mut self,
        store: &ContentStore,
        promisor: &str,
        promisee: &str,
        model_hash: ContentHash,
        objective_hash: ContentHash,
    ) -> Result<LiabilityId, LedgerError> {
        for h in [&model_hash, &objective_hash] {
            if !store.contains(h) {
                return Err(LedgerError::Dangling(h.clone()));
            }
        }
        let id = self.next_id();
        self.append(EventKind::LiabilityCreated {
            id,
            promisor: promisor.to_string(),
            promisee: promisee.to_string(),
            model_hash,
            objective_hash,
        })?;
        Ok(id)
    }

    pub fn submit_result(
        &mut self,
        store: &ContentStore,
        id: LiabilityId,
        result_hash: ContentHash,
    ) -> Result<(), LedgerError> {
        let l = self.liability(id).ok_or(LedgerError::UnknownLiability(id))?;
        if l.status != Status::Created {
            return Err(LedgerError::WrongStatus {
                id,
                status: l.status,
                event: "ResultSubmitted",
            });
        }
        if !store.contains(&result_hash) {
            return Err(LedgerError::Dangling(result_hash));
        }
        self.append(EventKind::ResultSubmitted { id, result_hash })?;
        Ok(())
    }

    pub fn record_verdict(
        &mut self,
        id: LiabilityId,
        verdict: VerdictKind,
        reason: Option<String>,
        detail: Option<String>,
    ) -> Result<u64, LedgerError> {
        self.append(EventKind::Verdict {
            id,
            verdict,
            reason,
            detail,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixture {
        _dir: tempfile::TempDir,
        store: ContentStore,
        model: ContentHash,
        objective: ContentHash,
        path: PathBuf,
    }

    fn fixture() -> Fixture {
        let dir = tempfile::tempdir().unwrap();
        let store = ContentStore::open(dir.path().join("store")).unwrap();
        let model = store.put(b"var x : 0..1 init 0;").unwrap();
        let objective = store.put(b"{}").unwrap();
        let path = dir.path().join("ledger.jsonl");
        Fixture {
            _dir: dir,
            store,
            model,
            objective,
            path,
        }
    }

    #[test]
    fn ids_are_monotone() {
        let f = fixture();
        let mut ledger = Ledger::open(&f.path).unwrap();
        let a = ledger
            .create_liability(&f.store, "0xa", "0xb", f.model.clone(), f.objective.clone())
            .unwrap();
        let b = ledger
            .create_liability(&f.store, "0xa", "0xb", f.model.clone(), f.objective.clone())
            .unwrap();
        assert_eq!((a, b), (1, 2));
        assert_eq!(ledger.liability(1).unwrap().status, Status::Created);
    }

    #[test]
    fn dangling_hash_rejected() {
        let f = fixture();
        let mut ledger = Ledger::in_memory();
        let err = ledger
            .create_liability(&f.store, "0xa", "0xb", ContentHash::of(b"x"), f.objective)
            .unwrap_err();
        assert!(matches!(err, LedgerError::Dangling(_)));
        assert!(ledger.events().is_empty());
    }

    #[test]
    fn submit_status_rules() {
        let f = fixture();
        let mut ledger = Ledger::in_memory();
        let id = ledger
            .create_liability(&f.store, "0xa", "0xb", f.model.clone(), f.objective)
            .unwrap();
        ledger.submit_result(&f.store, id, f.model.clone()).unwrap();
        assert_eq!(ledger.liability(id).unwrap().status, Status::ResultSubmitted);
        let again = ledger.submit_result(&f.store, id, f.model.clone()).unwrap_err();
        assert!(again.to_string().contains("wrong status"), "{again}");
        ledger
            .record_verdict(id, VerdictKind::Confirmed, None, None)
            .unwrap();
        assert!(ledger.submit_result(&f.store, id, f.model.clone()).is_err());
        assert!(ledger
            .record_verdict(id, VerdictKind::Rejected, None, None)
            .is_err());
        assert!(matches!(
            ledger.submit_result(&f.store, 9, f.model),
            Err(LedgerError::UnknownLiability(9))
        ));
    }

    #[test]
    fn file_round_trip_and_format() {
        let f = fixture();
        let mut ledger = Ledger::open(&f.path).unwrap();
        let id = ledger
            .create_liability(&f.store, "0x01", "0x02", f.model.clone(), f.objective.clone())
            .unwrap();
        ledger.submit_result(&f.store, id, f.objective.clone()).unwrap();
        ledger
            .record_verdict(
                id,
                VerdictKind::Rejected,
                Some("property-fails".into()),
                None,
            )
            .unwrap();
        let text = fs::read_to_string(&f.path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with(r#"{"seq":1,"kind":"LiabilityCreated","id":1,"promisor":"0x01""#));
        assert_eq!(
            lines[2],
            r#"{"seq":3,"kind":"Verdict","id":1,"verdict":"Rejected","reason":"property-fails"}"#
        );
        let reopened = Ledger::open(&f.path).unwrap();
        assert_eq!(reopened.events(), ledger.events());
        assert_eq!(reopened.liability(1).unwrap().status, Status::Rejected);
    }

    #[test]
    fn replay_rejects_illegal_history() {
        let f = fixture();
        let line = format!(
            "{{\"seq\":1,\"kind\":\"ResultSubmitted\",\"id\":1,\"result_hash\":\"{}\"}}\n",
            f.model
        );
        fs::write(&f.path, line).unwrap();
        assert!(matches!(
            Ledger::open(&f.path),
            Err(LedgerError::Corrupt { line: 1, .. })
        ));
        fs::write(&f.path, "not json\n").unwrap();
        assert!(Ledger::open(&f.path).is_err());
    }
}
