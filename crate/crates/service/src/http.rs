use std::future::Future;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{DefaultBodyLimit, Multipart, Path, Request, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use refaas_core::{parse_test_archive, parse_test_suite};
use serde_json::json;

use crate::hook::BuildEvent;
use crate::records::JobOptions;
use crate::{Service, ServiceError};

pub const TOKEN_HEADER: &str = "x-refaas-token";

/// Largest accepted request body.
pub const BODY_LIMIT: usize = 64 << 20;

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            Self::Package(_) | Self::Suite(_) | Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::QueueFull(_) => StatusCode::TOO_MANY_REQUESTS,
            Self::ShuttingDown => StatusCode::SERVICE_UNAVAILABLE,
            Self::NotFound(_) => StatusCode::NOT_FOUND,
            Self::NotTerminal(_) => StatusCode::CONFLICT,
            Self::Unauthorized => StatusCode::UNAUTHORIZED,
            Self::Config(_) | Self::Store(_) | Self::Pipeline(_) | Self::Io(_) => {
                StatusCode::INTERNAL_SERVER_ERROR
            }
        };
        let body = json!({ "error": self.to_string(), "code": self.code() });
        (status, Json(body)).into_response()
    }
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/v1/jobs", post(submit))
        .route("/v1/jobs/{id}", get(status))
        .route("/v1/jobs/{id}/artifact", get(artifact))
        .route("/v1/metrics", get(metrics))
        .route("/v1/platform/fission/build-hook", post(build_hook))
        .layer(middleware::from_fn_with_state(service.clone(), authorize))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(service)
}

async fn authorize(State(svc): State<Arc<Service>>, req: Request, next: Next) -> Response {
    if let Some(token) = &svc.config().token {
        let given = req
            .headers()
            .get(TOKEN_HEADER)
            .and_then(|v| v.to_str().ok());
        if given != Some(token.as_str()) {
            return ServiceError::Unauthorized.into_response();
        }
    }
    next.run(req).await
}

async fn blocking<T: Send + 'static>(
    f: impl FnOnce() -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ServiceError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Store(format!("handler task failed: {e}")))?
}

/// `POST /v1/jobs`, multipart with parts `package` (zip), `options` (JSON,
/// optional) and either `tests` (zip) or one `test` part per test file.
async fn submit(
    State(svc): State<Arc<Service>>,
    mut form: Multipart,
) -> Result<Response, ServiceError> {
    let bad = |e: axum::extract::multipart::MultipartError| ServiceError::BadRequest(e.body_text());
    let mut package = None;
    let mut tests_zip = None;
    let mut test_files = Vec::new();
    let mut options = JobOptions::default();
    while let Some(field) = form.next_field().await.map_err(bad)? {
        let name = field.name().unwrap_or_default().to_string();
        let file_name = field.file_name().map(str::to_string);
        let bytes = field.bytes().await.map_err(bad)?;
        match name.as_str() {
            "package" => package = Some(bytes.to_vec()),
            "tests" => tests_zip = Some(bytes.to_vec()),
            "test" => {
                let file_name =
                    file_name.unwrap_or_else(|| format!("test{}.json", test_files.len() + 1));
                test_files.push((file_name, bytes.to_vec()));
            }
            "options" => {
                options = serde_json::from_slice(&bytes)
                    .map_err(|e| ServiceError::BadRequest(format!("options: {e}")))?;
            }
            other => {
                return Err(ServiceError::BadRequest(format!(
                    "unexpected part `{other}`"
                )))
            }
        }
    }
    let package =
        package.ok_or_else(|| ServiceError::BadRequest("missing `package` part".into()))?;
    let suite = match (tests_zip, test_files.is_empty()) {
        (Some(_), false) => {
            return Err(ServiceError::BadRequest(
                "send either a `tests` archive or `test` files".into(),
            ));
        }
        (Some(zip), true) => parse_test_archive(&zip)?,
        (None, false) => parse_test_suite(test_files)?,
        (None, true) => return Err(ServiceError::BadRequest("missing `tests` part".into())),
    };
    let id = blocking(move || svc.submit(package, suite, options)).await?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "job_id": id }))).into_response())
}

async fn status(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    Ok(Json(svc.status(&id)?).into_response())
}

async fn artifact(
    State(svc): State<Arc<Service>>,
    Path(id): Path<String>,
) -> Result<Response, ServiceError> {
    let record = blocking(move || svc.artifact(&id)).await?;
    let kind = match record.kind {
        crate::ArtifactKind::Translated => "translated",
        _ => "original",
    };
    let headers = [
        (
            header::CONTENT_TYPE,
            HeaderValue::from_static("application/zip"),
        ),
        (
            header::CONTENT_DISPOSITION,
            HeaderValue::from_str(&format!(
                "attachment; filename=\"{}-{kind}.zip\"",
                record.job_id
            ))
            .unwrap_or(HeaderValue::from_static("attachment")),
        ),
        (
            header::HeaderName::from_static("x-refaas-artifact-kind"),
            HeaderValue::from_static(kind),
        ),
        (
            header::HeaderName::from_static("x-refaas-digest"),
            HeaderValue::from_str(&record.content_digest).expect("hex digest"),
        ),
    ];
    Ok((headers, record.archive).into_response())
}

async fn metrics(State(svc): State<Arc<Service>>) -> Response {
    (
        [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
        svc.metrics_text(),
    )
        .into_response()
}

async fn build_hook(
    State(svc): State<Arc<Service>>,
    body: Bytes,
) -> Result<Response, ServiceError> {
    let event: BuildEvent = serde_json::from_slice(&body)
        .map_err(|e| ServiceError::BadRequest(format!("build event: {e}")))?;
    let response = blocking(move || svc.build_hook(event)).await?;
    Ok((StatusCode::ACCEPTED, Json(response)).into_response())
}

/// Serves `service` on `listener` until `shutdown` resolves, then drains the
/// worker pool.
pub async fn serve(
    service: Arc<Service>,
    listener: tokio::net::TcpListener,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(addr = %listener.local_addr()?, "listening");
    axum::serve(listener, router(service.clone()))
        .with_graceful_shutdown(shutdown)
        .await?;
    tokio::task::spawn_blocking(move || service.shutdown())
        .await
        .ok();
    Ok(())
}
