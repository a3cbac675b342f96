//! JSON API over clustering sessions.
//!
//! Each session has a writer lock held for the duration of a step and a
//! snapshot of its reports that reads copy from, so `GET`s never wait on a
//! running eigensolve. A second step or accept on a busy session gets `409`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use specinc_core::ingest::{load_graph, parse_graph, Format, KnnSpec};
use specinc_core::{ClusterReport, Session, SessionConfig, SessionError, SessionInfo, Variant, WeightedGraph};
use tokio::sync::Mutex;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn not_found(id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown session {id}"))
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let status = match &e {
            SessionError::UnknownK { .. } => StatusCode::NOT_FOUND,
            SessionError::SessionClosed { .. } | SessionError::BasisFull { .. } => StatusCode::CONFLICT,
            SessionError::Graph(_) | SessionError::Disconnected { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

struct Entry {
    session: Arc<Mutex<Session>>,
    view: RwLock<View>,
}

#[derive(Clone)]
struct View {
    info: SessionInfo,
    history: Vec<ClusterReport>,
}

impl View {
    fn of(s: &Session) -> Self {
        Self {
            info: s.info(),
            history: s.history().to_vec(),
        }
    }
}

#[derive(Default)]
pub struct AppState {
    sessions: RwLock<HashMap<String, Arc<Entry>>>,
    state_dir: Option<PathBuf>,
}

impl AppState {
    /// Sessions persist to `<dir>/<id>.json` after every change; existing
    /// files are loaded back.
    pub fn with_state_dir(dir: impl Into<PathBuf>) -> anyhow::Result<Self> {
        let dir = dir.into();
        std::fs::create_dir_all(&dir)?;
        let state = Self {
            sessions: RwLock::default(),
            state_dir: Some(dir.clone()),
        };
        for entry in std::fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) == Some("json") {
                let session = Session::load(&path)?;
                state.insert(session);
            }
        }
        Ok(state)
    }

    fn insert(&self, session: Session) -> String {
        let id = session.id().to_string();
        let entry = Arc::new(Entry {
            view: RwLock::new(View::of(&session)),
            session: Arc::new(Mutex::new(session)),
        });
        self.sessions.write().unwrap().insert(id.clone(), entry);
        id
    }

    fn get(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found(id))
    }

    fn persist(&self, session: &Session) -> Result<(), ApiError> {
        if let Some(dir) = &self.state_dir {
            let path = dir.join(format!("{}.json", session.id()));
            session.save(path).map_err(ApiError::from)?;
        }
        Ok(())
    }
}

/// Body of `POST /sessions`. Exactly one of `graph`, `text` or `path` is given.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CreateRequest {
    pub graph: Option<WeightedGraph>,
    pub text: Option<String>,
    pub path: Option<String>,
    pub format: Option<Format>,
    pub knn: Option<KnnSpec>,
    pub variant: Option<Variant>,
    pub config: SessionConfig,
}

impl CreateRequest {
    fn into_graph(self) -> Result<(WeightedGraph, Variant, SessionConfig), ApiError> {
        let bad = |m: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, m);
        let variant = self.variant.unwrap_or(Variant::Unnormalized);
        let given = [self.graph.is_some(), self.text.is_some(), self.path.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "give exactly one of `graph`, `text` or `path`",
            ));
        }
        let graph = if let Some(g) = self.graph {
            g
        } else if let Some(text) = self.text {
            parse_graph(&text, self.format.unwrap_or(Format::EdgeList), self.knn).map_err(|e| bad(e.to_string()))?
        } else {
            let path = PathBuf::from(self.path.unwrap());
            let format = self.format.unwrap_or_else(|| Format::from_path(&path));
            load_graph(&path, format, self.knn).map_err(|e| bad(e.to_string()))?
        };
        Ok((graph, variant, self.config))
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Created {
    pub id: String,
    pub info: SessionInfo,
}

#[derive(Debug, Deserialize)]
pub struct AcceptRequest {
    #[serde(rename = "K", alias = "k")]
    pub k: usize,
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(info))
        .route("/sessions/{id}/step", post(step))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/sessions/{id}/clusters/{k}", get(clusters))
        .route("/sessions/{id}/accept", post(accept))
        .with_state(state)
}

async fn create(State(app): State<Arc<AppState>>, Json(req): Json<CreateRequest>) -> Result<impl IntoResponse, ApiError> {
    let (graph, variant, config) = req.into_graph()?;
    let session = tokio::task::spawn_blocking(move || Session::create(graph, variant, config))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    app.persist(&session)?;
    let info = session.info();
    let id = app.insert(session);
    Ok((StatusCode::CREATED, Json(Created { id, info })))
}

async fn info(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<SessionInfo>, ApiError> {
    let entry = app.get(&id)?;
    let info = entry.view.read().unwrap().info.clone();
    Ok(Json(info))
}

fn busy() -> ApiError {
    ApiError::new(StatusCode::CONFLICT, "another request is running on this session")
}

/// Runs `f` on the session on a blocking thread, then refreshes the snapshot and state file.
async fn write_op<T, F>(app: Arc<AppState>, id: &str, f: F) -> Result<T, ApiError>
where
    T: Send + 'static,
    F: FnOnce(&mut Session) -> Result<T, SessionError> + Send + 'static,
{
    let entry = app.get(id)?;
    let mut guard = entry.session.clone().try_lock_owned().map_err(|_| busy())?;
    let (out, view, guard) = tokio::task::spawn_blocking(move || {
        let out = f(&mut guard);
        let view = View::of(&guard);
        (out, view, guard)
    })
    .await
    .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
    *entry.view.write().unwrap() = view;
    app.persist(&guard)?;
    Ok(out?)
}

async fn step(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<ClusterReport>, ApiError> {
    write_op(app, &id, |s| s.step()).await.map(Json)
}

async fn accept(
    State(app): State<Arc<AppState>>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<AcceptRequest>,
) -> Result<Json<ClusterReport>, ApiError> {
    write_op(app, &id, move |s| s.accept(req.k)).await.map(Json)
}

async fn metrics(State(app): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Result<Json<Vec<ClusterReport>>, ApiError> {
    let entry = app.get(&id)?;
    let history = entry.view.read().unwrap().history.clone();
    Ok(Json(history))
}

async fn clusters(
    State(app): State<Arc<AppState>>,
    UrlPath((id, k)): UrlPath<(String, usize)>,
) -> Result<Json<Vec<usize>>, ApiError> {
    let entry = app.get(&id)?;
    let view = entry.view.read().unwrap();
    view.history
        .iter()
        .find(|r| r.k == k)
        .map(|r| Json(r.labels.clone()))
        .ok_or_else(|| SessionError::UnknownK { k }.into())
}

pub async fn serve(addr: &str, state_dir: Option<&Path>) -> anyhow::Result<()> {
    let state = match state_dir {
        Some(dir) => AppState::with_state_dir(dir)?,
        None => AppState::default(),
    };
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(Arc::new(state))).await?;
    Ok(())
}
