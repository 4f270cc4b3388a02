use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use tokio::sync::watch;

use tma_core::document::CellId;
use tma_core::i18n::Catalogs;
use tma_core::presenter::{summarize, write_back, ProofResultRecord};
use tma_core::prover::{
    prove, Limits, ProofEvent, ProofTree, ProveConfiguration, ProverError, SettingsSnapshot,
};
use tma_core::session::{FormulaEntry, FormulaKey, SelectionContext, Session, SessionError};

/// The single workspace a server instance operates on.
pub struct Workspace {
    pub session: Session,
    pub candidate: Option<FormulaKey>,
    pub confirmed: Option<FormulaKey>,
    /// Rule states, strategy and limits. Goal, knowledge and built-ins
    /// live in the fields and selections above.
    pub config: ProveConfiguration,
    pub language: String,
}

impl Workspace {
    pub fn new(language: String) -> Self {
        Workspace {
            session: Session::new(),
            candidate: None,
            confirmed: None,
            config: ProveConfiguration::default(),
            language,
        }
    }

    pub fn snapshot(&self) -> Result<SettingsSnapshot, ProverError> {
        let mut config = self.config.clone();
        config.goal = self.confirmed.clone();
        config.knowledge = self.session.selection(SelectionContext::Prove).clone();
        config.builtins = self
            .session
            .builtin_selection(SelectionContext::Prove)
            .clone();
        config.language = self.language.clone();
        config.snapshot()
    }

    /// Overwrites the prove settings, goal included, from a snapshot.
    pub fn restore(&mut self, snapshot: &SettingsSnapshot) -> Result<(), ProverError> {
        let config = snapshot.restore()?;
        self.confirmed = config.goal.clone();
        self.candidate = config.goal.clone();
        // Formulas that have left the session since are skipped.
        let live = config
            .knowledge
            .iter()
            .filter(|k| self.session.entry(k).is_some())
            .cloned()
            .collect();
        self.session
            .replace_selection(SelectionContext::Prove, live)
            .expect("only live keys are selected");
        self.session
            .set_builtin_selection(SelectionContext::Prove, config.builtins.clone());
        self.config = ProveConfiguration {
            goal: None,
            knowledge: Default::default(),
            builtins: Default::default(),
            ..config
        };
        Ok(())
    }

    pub fn limits(&self) -> &Limits {
        &self.config.limits
    }
}

pub struct ProofJob {
    pub id: String,
    pub snapshot: SettingsSnapshot,
    events: Mutex<Vec<ProofEvent>>,
    tree: Mutex<ProofTree>,
    progress: watch::Sender<usize>,
    finished: AtomicBool,
    pub cancel: AtomicBool,
    written_to: Mutex<Option<CellId>>,
}

impl ProofJob {
    fn new(id: String, snapshot: SettingsSnapshot) -> Self {
        ProofJob {
            id,
            snapshot,
            events: Mutex::new(Vec::new()),
            tree: Mutex::new(ProofTree::new()),
            progress: watch::channel(0).0,
            finished: AtomicBool::new(false),
            cancel: AtomicBool::new(false),
            written_to: Mutex::new(None),
        }
    }

    fn record(&self, e: &ProofEvent) {
        let mut events = self.events.lock().unwrap();
        self.tree
            .lock()
            .unwrap()
            .apply(e)
            .expect("the prover emits a consistent stream");
        events.push(e.clone());
        self.progress.send_replace(events.len());
    }

    pub fn tree(&self) -> ProofTree {
        self.tree.lock().unwrap().clone()
    }

    pub fn events_from(&self, index: usize) -> Vec<ProofEvent> {
        self.events
            .lock()
            .unwrap()
            .get(index..)
            .map(<[_]>::to_vec)
            .unwrap_or_default()
    }

    pub fn is_finished(&self) -> bool {
        self.finished.load(Ordering::Acquire)
    }

    pub fn subscribe(&self) -> watch::Receiver<usize> {
        self.progress.subscribe()
    }

    pub fn written_to(&self) -> Option<CellId> {
        *self.written_to.lock().unwrap()
    }
}

pub struct Shared {
    pub workspace: RwLock<Workspace>,
    pub catalogs: RwLock<Catalogs>,
    pub jobs: RwLock<BTreeMap<String, Arc<ProofJob>>>,
    next_proof: AtomicU64,
}

#[derive(Clone)]
pub struct AppState(pub Arc<Shared>);

impl std::ops::Deref for AppState {
    type Target = Shared;
    fn deref(&self) -> &Shared {
        &self.0
    }
}

impl AppState {
    pub fn new(catalogs: Catalogs, language: String) -> Self {
        AppState(Arc::new(Shared {
            workspace: RwLock::new(Workspace::new(language)),
            catalogs: RwLock::new(catalogs),
            jobs: RwLock::new(BTreeMap::new()),
            next_proof: AtomicU64::new(1),
        }))
    }

    pub fn language(&self) -> String {
        self.workspace.read().unwrap().language.clone()
    }

    pub fn job(&self, id: &str) -> Option<Arc<ProofJob>> {
        self.jobs.read().unwrap().get(id).cloned()
    }

    /// Registers a job and runs the prover on a blocking thread. The
    /// record is written back next to the goal cell once it finishes.
    pub fn start_proof(
        &self,
        snapshot: SettingsSnapshot,
        goal: FormulaEntry,
        knowledge: Vec<FormulaEntry>,
    ) -> Arc<ProofJob> {
        let n = self.next_proof.fetch_add(1, Ordering::Relaxed);
        let job = Arc::new(ProofJob::new(format!("p{n}"), snapshot));
        self.jobs
            .write()
            .unwrap()
            .insert(job.id.clone(), job.clone());
        let state = self.clone();
        let worker = job.clone();
        tokio::task::spawn_blocking(move || {
            let tree = prove(
                &goal,
                &knowledge,
                &worker.snapshot,
                &mut |e| worker.record(e),
                Some(&worker.cancel),
            )
            .expect("snapshot was validated before the job started");
            state.finish(&worker, &tree);
        });
        job
    }

    fn finish(&self, job: &ProofJob, tree: &ProofTree) {
        let summary = summarize(tree, &job.snapshot, &self.catalogs.read().unwrap());
        let record = ProofResultRecord {
            proof_id: job.id.clone(),
            success: tree.proved(),
            snapshot: job.snapshot.clone(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            summary,
        };
        let key = &job.snapshot.goal_key;
        let mut ws = self.workspace.write().unwrap();
        if let Ok(doc) = ws.session.document_mut(&key.doc_path) {
            *job.written_to.lock().unwrap() = write_back(doc, key.cell_id, record).ok();
        }
        drop(ws);
        job.finished.store(true, Ordering::Release);
        // Wake subscribers waiting on the finished flag.
        job.progress.send_modify(|_| {});
    }
}

pub fn goal_and_knowledge(
    session: &Session,
    snapshot: &SettingsSnapshot,
) -> Result<(FormulaEntry, Vec<FormulaEntry>), SessionError> {
    let goal = session
        .entries_for([&snapshot.goal_key])?
        .pop()
        .expect("one key gives one entry");
    let knowledge = session.entries_for(&snapshot.knowledge)?;
    Ok((goal, knowledge))
}
