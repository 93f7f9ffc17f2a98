//! Ranking-session service: serves stimuli to raters in a per-rater order,
//! collects their rankings into an append-only journal, and reports
//! agreement with the reference ranking.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use advkit::metrics::{panel_agreement, spearman_src, Ranking};
use advkit::Axis;
use anyhow::{bail, Context};
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stimulus {
    pub id: String,
    /// Where the client fetches the audio, e.g. `/media/clip_03.wav`.
    pub locator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub session_id: String,
    pub axis: Axis,
    pub stimuli: Vec<Stimulus>,
    /// Reference rank of each stimulus, in `stimuli` order.
    pub ground_truth: Ranking,
    /// Token triple used to synthesize each stimulus; informational only.
    #[serde(default)]
    pub adv_settings: Vec<[u32; 3]>,
    /// Allowed rater tokens; empty admits any non-empty token.
    #[serde(default)]
    pub raters: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionsFile {
    /// Seeds the per-rater presentation order.
    #[serde(default)]
    pub seed: u64,
    pub sessions: Vec<SessionSpec>,
}

impl SessionsFile {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Self = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        file.validate()?;
        Ok(file)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        let mut ids = BTreeSet::new();
        for s in &self.sessions {
            if !ids.insert(&s.session_id) {
                bail!("duplicate session id {:?}", s.session_id);
            }
            let n = s.stimuli.len();
            if n < 2 {
                bail!("session {:?}: need at least 2 stimuli", s.session_id);
            }
            if s.ground_truth.len() != n {
                bail!("session {:?}: ground truth has {} ranks for {n} stimuli", s.session_id, s.ground_truth.len());
            }
            if !s.adv_settings.is_empty() && s.adv_settings.len() != n {
                bail!("session {:?}: adv_settings length differs from stimuli", s.session_id);
            }
            if s.stimuli.iter().map(|x| &x.id).collect::<BTreeSet<_>>().len() != n {
                bail!("session {:?}: duplicate stimulus id", s.session_id);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServiceError {
    UnknownSession(String),
    Forbidden(String),
    Invalid(String),
    Duplicate { session_id: String, rater: String },
    Storage(String),
}

impl ServiceError {
    pub fn status(&self) -> StatusCode {
        match self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::Forbidden(_) => StatusCode::FORBIDDEN,
            ServiceError::Invalid(_) => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Duplicate { .. } => StatusCode::CONFLICT,
            ServiceError::Storage(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }
}

impl std::fmt::Display for ServiceError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServiceError::UnknownSession(id) => write!(f, "unknown session {id:?}"),
            ServiceError::Forbidden(rater) => write!(f, "rater {rater:?} is not enrolled in this session"),
            ServiceError::Invalid(msg) => f.write_str(msg),
            ServiceError::Duplicate { session_id, rater } => {
                write!(f, "rater {rater:?} already submitted a ranking for {session_id:?}")
            }
            ServiceError::Storage(msg) => write!(f, "journal write failed: {msg}"),
        }
    }
}

impl std::error::Error for ServiceError {}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        (self.status(), Json(serde_json::json!({ "error": self.to_string() }))).into_response()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresentedStimulus {
    pub position: usize,
    /// Index into the session's canonical stimulus order; rankings are submitted in that order.
    pub index: usize,
    pub id: String,
    pub locator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Presentation {
    pub session_id: String,
    pub axis: Axis,
    pub rater: String,
    pub stimuli: Vec<PresentedStimulus>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub rater: String,
    /// Rank of each stimulus in canonical order.
    pub ranks: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Receipt {
    pub session_id: String,
    pub rater: String,
    pub src: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaterResult {
    pub rater: String,
    pub src: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResults {
    pub session_id: String,
    pub axis: Axis,
    pub submissions: usize,
    pub raters: Vec<RaterResult>,
    pub mean_src: Option<f64>,
    pub kendalls_w: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct JournalEntry {
    session_id: String,
    rater: String,
    ranks: Vec<u32>,
}

/// FNV-1a over the seed and the strings, with separators so that
/// ("ab", "c") and ("a", "bc") differ.
fn order_seed(seed: u64, session_id: &str, rater: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let bytes = seed.to_le_bytes().into_iter().chain(session_id.bytes()).chain([0xff]).chain(rater.bytes());
    for b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Sessions plus the rankings collected so far.
pub struct SessionStore {
    seed: u64,
    sessions: BTreeMap<String, SessionSpec>,
    // session -> rater -> ranking, in canonical stimulus order
    submissions: BTreeMap<String, BTreeMap<String, Ranking>>,
    journal: Option<File>,
}

impl SessionStore {
    /// A store without persistence.
    pub fn in_memory(file: SessionsFile) -> anyhow::Result<Self> {
        file.validate()?;
        let submissions = file.sessions.iter().map(|s| (s.session_id.clone(), BTreeMap::new())).collect();
        let sessions = file.sessions.into_iter().map(|s| (s.session_id.clone(), s)).collect();
        Ok(Self { seed: file.seed, sessions, submissions, journal: None })
    }

    /// Replays `journal` (if it exists) and appends new submissions to it.
    pub fn with_journal(file: SessionsFile, journal: &Path) -> anyhow::Result<Self> {
        let mut store = Self::in_memory(file)?;
        let mut torn_tail = false;
        if journal.exists() {
            let text = std::fs::read_to_string(journal).with_context(|| format!("reading {}", journal.display()))?;
            torn_tail = !text.is_empty() && !text.ends_with('\n');
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let entry: JournalEntry = match serde_json::from_str(line) {
                    Ok(e) => e,
                    Err(e) => {
                        log::warn!("{}:{}: skipping unreadable entry: {e}", journal.display(), i + 1);
                        continue;
                    }
                };
                if let Err(e) = store.record(&entry.session_id, &entry.rater, entry.ranks) {
                    log::warn!("{}:{}: skipping entry: {e}", journal.display(), i + 1);
                }
            }
        }
        let mut handle = OpenOptions::new()
            .create(true)
            .append(true)
            .open(journal)
            .with_context(|| format!("opening journal {}", journal.display()))?;
        if torn_tail {
            // Terminate a partial line left by a crash so the next entry starts clean.
            handle.write_all(b"\n")?;
        }
        store.journal = Some(handle);
        Ok(store)
    }

    fn session(&self, session_id: &str) -> Result<&SessionSpec, ServiceError> {
        self.sessions.get(session_id).ok_or_else(|| ServiceError::UnknownSession(session_id.to_string()))
    }

    fn check_rater(spec: &SessionSpec, rater: &str) -> Result<(), ServiceError> {
        if rater.trim().is_empty() {
            return Err(ServiceError::Invalid("rater token is required".into()));
        }
        if !spec.raters.is_empty() && !spec.raters.iter().any(|r| r == rater) {
            return Err(ServiceError::Forbidden(rater.to_string()));
        }
        Ok(())
    }

    pub fn session_ids(&self) -> Vec<&str> {
        self.sessions.keys().map(String::as_str).collect()
    }

    /// Stimuli in this rater's presentation order. The order is a pure
    /// function of (seed, session, rater), so reloading shows the same order.
    pub fn presentation(&self, session_id: &str, rater: &str) -> Result<Presentation, ServiceError> {
        let spec = self.session(session_id)?;
        Self::check_rater(spec, rater)?;
        let mut order: Vec<usize> = (0..spec.stimuli.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(order_seed(self.seed, session_id, rater)));
        let stimuli = order
            .into_iter()
            .enumerate()
            .map(|(position, index)| PresentedStimulus {
                position,
                index,
                id: spec.stimuli[index].id.clone(),
                locator: spec.stimuli[index].locator.clone(),
            })
            .collect();
        Ok(Presentation { session_id: session_id.to_string(), axis: spec.axis, rater: rater.to_string(), stimuli })
    }

    /// Everything short of storing: session, rater, shape, permutation, duplicate.
    fn check(&self, session_id: &str, rater: &str, ranks: Vec<u32>) -> Result<(Ranking, f64), ServiceError> {
        let spec = self.session(session_id)?;
        Self::check_rater(spec, rater)?;
        let n = spec.stimuli.len();
        if ranks.len() != n {
            return Err(ServiceError::Invalid(format!("expected {n} ranks, got {}", ranks.len())));
        }
        let ranking =
            Ranking::new(ranks).map_err(|_| ServiceError::Invalid(format!("ranks must be a permutation of 1..={n}")))?;
        if self.submissions[session_id].contains_key(rater) {
            return Err(ServiceError::Duplicate { session_id: session_id.to_string(), rater: rater.to_string() });
        }
        let src = spearman_src(&spec.ground_truth, &ranking).map_err(|e| ServiceError::Invalid(e.to_string()))?;
        Ok((ranking, src))
    }

    fn record(&mut self, session_id: &str, rater: &str, ranks: Vec<u32>) -> Result<f64, ServiceError> {
        let (ranking, src) = self.check(session_id, rater, ranks)?;
        self.submissions.get_mut(session_id).expect("checked above").insert(rater.to_string(), ranking);
        Ok(src)
    }

    /// Journals the ranking (fsync'd) before it becomes visible.
    pub fn submit(&mut self, session_id: &str, submission: Submission) -> Result<Receipt, ServiceError> {
        let Submission { rater, ranks } = submission;
        let (ranking, src) = self.check(session_id, &rater, ranks)?;
        if let Some(journal) = self.journal.as_mut() {
            let entry =
                JournalEntry { session_id: session_id.to_string(), rater: rater.clone(), ranks: ranking.ranks().to_vec() };
            let mut line = serde_json::to_string(&entry).map_err(|e| ServiceError::Storage(e.to_string()))?;
            line.push('\n');
            journal
                .write_all(line.as_bytes())
                .and_then(|_| journal.sync_data())
                .map_err(|e| ServiceError::Storage(e.to_string()))?;
        }
        self.submissions.get_mut(session_id).expect("checked above").insert(rater.clone(), ranking);
        Ok(Receipt { session_id: session_id.to_string(), rater, src })
    }

    pub fn results(&self, session_id: &str) -> Result<SessionResults, ServiceError> {
        let spec = self.session(session_id)?;
        let submitted = &self.submissions[session_id];
        let rankings: Vec<Ranking> = submitted.values().cloned().collect();
        let panel = panel_agreement(&spec.ground_truth, &rankings).map_err(|e| ServiceError::Invalid(e.to_string()))?;
        let raters = submitted
            .keys()
            .zip(&panel.per_rater_src)
            .map(|(rater, &src)| RaterResult { rater: rater.clone(), src })
            .collect();
        Ok(SessionResults {
            session_id: session_id.to_string(),
            axis: spec.axis,
            submissions: rankings.len(),
            raters,
            mean_src: panel.mean_src,
            kendalls_w: panel.kendalls_w,
        })
    }
}

pub type SharedStore = Arc<Mutex<SessionStore>>;

#[derive(Deserialize)]
struct RaterQuery {
    rater: String,
}

fn lock(store: &SharedStore) -> std::sync::MutexGuard<'_, SessionStore> {
    // A panic while holding the lock cannot leave the maps half-updated, so recover.
    store.lock().unwrap_or_else(|poisoned| poisoned.into_inner())
}

async fn get_session(
    State(store): State<SharedStore>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<RaterQuery>,
) -> Result<Json<Presentation>, ServiceError> {
    lock(&store).presentation(&id, &q.rater).map(Json)
}

async fn post_ranking(
    State(store): State<SharedStore>,
    UrlPath(id): UrlPath<String>,
    Json(submission): Json<Submission>,
) -> Result<(StatusCode, Json<Receipt>), ServiceError> {
    lock(&store).submit(&id, submission).map(|r| (StatusCode::CREATED, Json(r)))
}

async fn get_results(
    State(store): State<SharedStore>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<SessionResults>, ServiceError> {
    lock(&store).results(&id).map(Json)
}

async fn list_sessions(State(store): State<SharedStore>) -> Json<Vec<String>> {
    Json(lock(&store).session_ids().into_iter().map(str::to_string).collect())
}

async fn healthz() -> &'static str {
    "ok"
}

/// Static directories served next to the API.
#[derive(Debug, Clone, Default)]
pub struct StaticDirs {
    /// Served under `/media`.
    pub media: Option<PathBuf>,
    /// Served at the root as a fallback, for the rating UI bundle.
    pub ui: Option<PathBuf>,
}

pub fn router(store: SharedStore, dirs: &StaticDirs) -> Router {
    let mut app = Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", get(list_sessions))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/rankings", post(post_ranking))
        .route("/sessions/{id}/results", get(get_results))
        .with_state(store);
    if let Some(media) = &dirs.media {
        app = app.nest_service("/media", ServeDir::new(media));
    }
    if let Some(ui) = &dirs.ui {
        app = app.fallback_service(ServeDir::new(ui));
    }
    app
}
