//! HTTP front end for [`SessionStore`].
//!
//! | method | path                         | body                                   |
//! |--------|------------------------------|----------------------------------------|
//! | POST   | `/sessions`                  | `{world, claim, model?, max_rounds?}`  |
//! | GET    | `/sessions/{id}`             |                                        |
//! | POST   | `/sessions/{id}/feedback`    | `{round, bits}`                        |
//! | GET    | `/sessions/{id}/transcript`  |                                        |

use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::{HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};
use tower_http::cors::{Any, CorsLayer};

use xconv_core::document::{FeedbackDoc, ModelDocument, TranscriptDoc};
use xconv_core::*;

pub struct Config {
    /// Used when a request does not carry a model.
    pub default_model: Option<Model>,
    pub bounds: SearchBounds,
    pub cors_origin: Option<String>,
    pub persist_dir: Option<PathBuf>,
}

struct AppState {
    store: SessionStore,
    default_model: Option<Model>,
    bounds: SearchBounds,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateRequest {
    world: String,
    claim: String,
    model: Option<Value>,
    max_rounds: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FeedbackRequest {
    round: usize,
    bits: FeedbackDoc,
}

struct ApiError(StatusCode, Value);

impl ApiError {
    fn new(status: StatusCode, message: impl ToString) -> Self {
        ApiError(status, json!({ "error": message.to_string() }))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(self.1)).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        match &e {
            Error::MalformedFeedback { path, reason } => ApiError(
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({ "error": format!("malformed feedback: {reason}"), "path": path }),
            ),
            Error::InvalidModel(vs) => ApiError(
                StatusCode::UNPROCESSABLE_ENTITY,
                json!({
                    "error": "invalid model",
                    "violations": vs.iter().map(ToString::to_string).collect::<Vec<_>>(),
                }),
            ),
            _ => ApiError::new(StatusCode::BAD_REQUEST, e),
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        match e {
            SessionError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, e),
            SessionError::StaleRound { .. } | SessionError::Finished(_) => ApiError::new(StatusCode::CONFLICT, e),
            SessionError::Rejected(inner) | SessionError::Malformed(inner) => inner.into(),
            SessionError::Persist(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e),
        }
    }
}

fn parse_body<T: DeserializeOwned>(body: &str) -> Result<T, ApiError> {
    serde_json::from_str(body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, e))
}

pub fn router(config: Config) -> Router {
    let store = match config.persist_dir {
        Some(dir) => SessionStore::with_persistence(dir),
        None => SessionStore::new(),
    };
    let state = Arc::new(AppState {
        store,
        default_model: config.default_model,
        bounds: config.bounds,
    });
    let app = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(show))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/transcript", get(transcript))
        .with_state(state);
    match config.cors_origin {
        Some(origin) => {
            let cors = CorsLayer::new().allow_methods(Any).allow_headers(Any);
            let cors = if origin == "*" {
                cors.allow_origin(Any)
            } else {
                match HeaderValue::from_str(&origin) {
                    Ok(v) => cors.allow_origin(v),
                    Err(_) => cors,
                }
            };
            app.layer(cors)
        }
        None => app,
    }
}

async fn create(State(app): State<Arc<AppState>>, body: String) -> Result<Response, ApiError> {
    let req: CreateRequest = parse_body(&body)?;
    let owned;
    let m = match &req.model {
        Some(v) => {
            let doc: ModelDocument =
                serde_json::from_value(v.clone()).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, format!("model: {e}")))?;
            owned = doc.to_model(Default::default())?;
            &owned
        }
        None => app
            .default_model
            .as_ref()
            .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, "no model given and the server has none"))?,
    };
    let world = WorldId::new(&req.world);
    let claim = parse_prop(&req.claim)?;
    if !m.contains_world(&world) {
        return Err(Error::UnknownWorld(world).into());
    }
    let max_rounds = req
        .max_rounds
        .unwrap_or_else(|| default_round_limit(m, &world, &claim, app.bounds));
    let id = app.store.create(m, &world, &claim, app.bounds, max_rounds)?;
    let state = app.store.get_state(&id)?;
    Ok((StatusCode::CREATED, Json(state)).into_response())
}

async fn show(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(app.store.get_state(&id)?).into_response())
}

async fn feedback(State(app): State<Arc<AppState>>, Path(id): Path<String>, body: String) -> Result<Response, ApiError> {
    // Look the session up first so an unknown id is a 404 whatever the body.
    app.store.get_state(&id)?;
    let req: FeedbackRequest = parse_body(&body)?;
    let bits = req.bits.to_tree()?;
    Ok(Json(app.store.post_feedback(&id, req.round, bits)?).into_response())
}

async fn transcript(State(app): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let t = app.store.transcript(&id)?;
    Ok(Json(TranscriptDoc::from_transcript(&t)).into_response())
}

/// Serves until interrupted.
pub fn serve(host: &str, port: u16, config: Config) -> std::io::Result<()> {
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((host, port)).await?;
        eprintln!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(config))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await
    })
}
