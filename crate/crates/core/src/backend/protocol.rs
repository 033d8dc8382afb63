//! Newline-delimited JSON protocol between the toolkit and a backend
//! process.
//!
//! Every request is one line `{"id":N,"op":"...","params":{...}}` and is
//! answered by exactly one line, either `{"id":N,"ok":true,"result":...}`
//! (`result` omitted for acknowledgements) or
//! `{"id":N,"ok":false,"error":{"code":"...","message":"..."}}`.
//!
//! Lines are produced field by field in a fixed order so that transcripts
//! are byte-stable.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Backend, BackendError, Direction, Point, PromptObject};

pub const OP_OPEN_VIDEO: &str = "open_video";
pub const OP_ADD_OBJECTS: &str = "add_objects";
pub const OP_PROPAGATE: &str = "propagate";
pub const OP_SEGMENT_POINTS: &str = "segment_points";
pub const OP_AUTO_MASKS: &str = "auto_masks";
pub const OP_CLOSE: &str = "close";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpenVideoParams {
    pub frames: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AddObjectsParams {
    pub session_id: String,
    #[serde(default)]
    pub frame_index: u32,
    pub objects: Vec<PromptObject>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagateParams {
    pub session_id: String,
    pub direction: Direction,
    pub horizon: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentPointsParams {
    pub image: String,
    pub points: Vec<Point>,
    #[serde(default)]
    pub refine_iters: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AutoMasksParams {
    pub image: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CloseParams {
    pub session_id: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Call {
    OpenVideo(OpenVideoParams),
    AddObjects(AddObjectsParams),
    Propagate(PropagateParams),
    SegmentPoints(SegmentPointsParams),
    AutoMasks(AutoMasksParams),
    /// `None` ends the connection; `Some` closes one session.
    Close(Option<CloseParams>),
}

impl Call {
    pub fn op(&self) -> &'static str {
        match self {
            Call::OpenVideo(_) => OP_OPEN_VIDEO,
            Call::AddObjects(_) => OP_ADD_OBJECTS,
            Call::Propagate(_) => OP_PROPAGATE,
            Call::SegmentPoints(_) => OP_SEGMENT_POINTS,
            Call::AutoMasks(_) => OP_AUTO_MASKS,
            Call::Close(_) => OP_CLOSE,
        }
    }

    fn params_json(&self) -> Option<String> {
        let s = match self {
            Call::OpenVideo(p) => serde_json::to_string(p),
            Call::AddObjects(p) => serde_json::to_string(p),
            Call::Propagate(p) => serde_json::to_string(p),
            Call::SegmentPoints(p) => serde_json::to_string(p),
            Call::AutoMasks(p) => serde_json::to_string(p),
            Call::Close(Some(p)) => serde_json::to_string(p),
            Call::Close(None) => return None,
        };
        Some(s.expect("params serialize"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Request {
    pub id: u64,
    pub call: Call,
}

impl Request {
    pub fn to_line(&self) -> String {
        match self.call.params_json() {
            Some(p) => format!(
                r#"{{"id":{},"op":"{}","params":{p}}}"#,
                self.id,
                self.call.op()
            ),
            None => format!(r#"{{"id":{},"op":"{}"}}"#, self.id, self.call.op()),
        }
    }

    /// Parses one request line. On failure returns the request id when it
    /// could be recovered (JSON `null` otherwise) together with the error.
    pub fn parse(line: &str) -> Result<Request, (Value, BackendError)> {
        let value: Value = serde_json::from_str(line).map_err(|e| {
            (
                Value::Null,
                BackendError::BadRequest(format!("malformed JSON: {e}")),
            )
        })?;
        let obj = value.as_object().ok_or_else(|| {
            (
                Value::Null,
                BackendError::BadRequest("request is not an object".into()),
            )
        })?;
        let raw_id = obj.get("id").cloned().unwrap_or(Value::Null);
        let id = raw_id.as_u64().ok_or_else(|| {
            (
                raw_id.clone(),
                BackendError::BadRequest("missing or invalid id".into()),
            )
        })?;
        let fail = |msg: String| (raw_id.clone(), BackendError::BadRequest(msg));
        let op = obj
            .get("op")
            .and_then(Value::as_str)
            .ok_or_else(|| fail("missing op".into()))?;
        let params = obj.get("params").cloned().unwrap_or(Value::Null);

        fn typed<T: serde::de::DeserializeOwned>(op: &str, params: Value) -> Result<T, String> {
            serde_json::from_value(params).map_err(|e| format!("invalid params for {op}: {e}"))
        }

        let call = match op {
            OP_OPEN_VIDEO => Call::OpenVideo(typed(op, params).map_err(fail)?),
            OP_ADD_OBJECTS => Call::AddObjects(typed(op, params).map_err(fail)?),
            OP_PROPAGATE => Call::Propagate(typed(op, params).map_err(fail)?),
            OP_SEGMENT_POINTS => Call::SegmentPoints(typed(op, params).map_err(fail)?),
            OP_AUTO_MASKS => Call::AutoMasks(typed(op, params).map_err(fail)?),
            OP_CLOSE if params.is_null() => Call::Close(None),
            OP_CLOSE => Call::Close(Some(typed(op, params).map_err(fail)?)),
            other => return Err(fail(format!("unknown op {other:?}"))),
        };
        Ok(Request { id, call })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorObject {
    pub code: String,
    pub message: String,
}

impl From<&BackendError> for ErrorObject {
    fn from(e: &BackendError) -> Self {
        ErrorObject {
            code: e.code().to_string(),
            message: e.message(),
        }
    }
}

/// Formats a success line. `result` is pre-serialized JSON.
pub fn ok_line(id: &Value, result: Option<&str>) -> String {
    match result {
        Some(r) => format!(r#"{{"id":{id},"ok":true,"result":{r}}}"#),
        None => format!(r#"{{"id":{id},"ok":true}}"#),
    }
}

pub fn error_line(id: &Value, error: &BackendError) -> String {
    let err = serde_json::to_string(&ErrorObject::from(error)).expect("error serializes");
    format!(r#"{{"id":{id},"ok":false,"error":{err}}}"#)
}

/// A decoded response line.
#[derive(Clone, Debug, PartialEq)]
pub struct Response {
    pub id: Value,
    pub outcome: Result<Option<Value>, BackendError>,
}

impl Response {
    pub fn parse(line: &str) -> Result<Response, BackendError> {
        let value: Value = serde_json::from_str(line)
            .map_err(|e| BackendError::Protocol(format!("malformed response: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| BackendError::Protocol("response is not an object".into()))?;
        let id = obj.get("id").cloned().unwrap_or(Value::Null);
        let ok = obj
            .get("ok")
            .and_then(Value::as_bool)
            .ok_or_else(|| BackendError::Protocol("response lacks ok flag".into()))?;
        let outcome = if ok {
            Ok(obj.get("result").cloned())
        } else {
            let err: ErrorObject = obj
                .get("error")
                .cloned()
                .ok_or_else(|| BackendError::Protocol("error response lacks error".into()))
                .and_then(|v| {
                    serde_json::from_value(v)
                        .map_err(|e| BackendError::Protocol(format!("invalid error object: {e}")))
                })?;
            Err(BackendError::from_wire(&err.code, &err.message))
        };
        Ok(Response { id, outcome })
    }
}

/// Result of handling one request line on the server side.
pub struct Handled {
    pub line: String,
    pub close_connection: bool,
}

/// Executes one request line against `backend`.
pub fn handle_line<B: Backend + ?Sized>(backend: &mut B, line: &str) -> Handled {
    let req = match Request::parse(line) {
        Ok(r) => r,
        Err((id, e)) => {
            return Handled {
                line: error_line(&id, &e),
                close_connection: false,
            }
        }
    };
    let id = Value::from(req.id);
    let mut close_connection = false;
    let outcome: Result<Option<String>, BackendError> = match &req.call {
        Call::OpenVideo(p) => backend.open_video(&p.frames).map(|s| Some(to_json(&s))),
        Call::AddObjects(p) => backend
            .add_objects(&p.session_id, p.frame_index, &p.objects)
            .map(|_| None),
        Call::Propagate(p) => backend
            .propagate(&p.session_id, p.direction, p.horizon)
            .map(|r| Some(to_json(&r))),
        Call::SegmentPoints(p) => backend
            .segment_points(&p.image, &p.points, p.refine_iters)
            .map(|r| Some(to_json(&r))),
        Call::AutoMasks(p) => backend.auto_masks(&p.image).map(|r| Some(to_json(&r))),
        Call::Close(Some(p)) => backend.close_session(&p.session_id).map(|_| None),
        Call::Close(None) => {
            close_connection = true;
            Ok(None)
        }
    };
    let line = match outcome {
        Ok(result) => ok_line(&id, result.as_deref()),
        Err(e) => error_line(&id, &e),
    };
    Handled {
        line,
        close_connection,
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("result serializes")
}

/// Serves requests from `reader` until EOF or a connection-level `close`.
/// Blank lines are skipped; every other line gets exactly one response.
pub fn serve<B, R, W>(backend: &mut B, reader: R, mut writer: W) -> io::Result<()>
where
    B: Backend + ?Sized,
    R: BufRead,
    W: Write,
{
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let handled = handle_line(backend, &line);
        writer.write_all(handled.line.as_bytes())?;
        writer.write_all(b"\n")?;
        writer.flush()?;
        if handled.close_connection {
            break;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::MaskResult;
    use crate::raster::RleMask;

    #[test]
    fn close_without_params_roundtrips() {
        let r = Request {
            id: 1,
            call: Call::Close(None),
        };
        assert_eq!(r.to_line(), r#"{"id":1,"op":"close"}"#);
        assert_eq!(Request::parse(&r.to_line()).unwrap(), r);
    }

    #[test]
    fn request_lines_roundtrip() {
        let rle = RleMask {
            width: 2,
            height: 1,
            counts: vec![1, 1],
        };
        let calls = vec![
            Call::OpenVideo(OpenVideoParams {
                frames: vec!["a".into(), "b".into()],
            }),
            Call::AddObjects(AddObjectsParams {
                session_id: "s1".into(),
                frame_index: 0,
                objects: vec![PromptObject {
                    object_id: 3,
                    init_mask: rle,
                }],
            }),
            Call::Propagate(PropagateParams {
                session_id: "s1".into(),
                direction: Direction::Backward,
                horizon: 4,
            }),
            Call::SegmentPoints(SegmentPointsParams {
                image: "img".into(),
                points: vec![(1, 2), (3, 4)],
                refine_iters: 2,
            }),
            Call::AutoMasks(AutoMasksParams {
                image: "img".into(),
            }),
            Call::Close(Some(CloseParams {
                session_id: "s1".into(),
            })),
        ];
        for (i, call) in calls.into_iter().enumerate() {
            let r = Request { id: i as u64, call };
            let line = r.to_line();
            assert!(!line.contains('\n'));
            assert_eq!(Request::parse(&line).unwrap(), r);
        }
    }

    #[test]
    fn segment_points_wire_format() {
        let r = Request {
            id: 7,
            call: Call::SegmentPoints(SegmentPointsParams {
                image: "synth:a:0".into(),
                points: vec![(1, 2)],
                refine_iters: 2,
            }),
        };
        assert_eq!(
            r.to_line(),
            r#"{"id":7,"op":"segment_points","params":{"image":"synth:a:0","points":[[1,2]],"refine_iters":2}}"#
        );
    }

    #[test]
    fn malformed_requests() {
        let (id, e) = Request::parse("{not json").unwrap_err();
        assert_eq!(id, Value::Null);
        assert_eq!(e.code(), "bad_request");
        let (id, e) = Request::parse(r#"{"id":4,"op":"fly"}"#).unwrap_err();
        assert_eq!(id, Value::from(4));
        assert_eq!(e.code(), "bad_request");
        let (_, e) = Request::parse(r#"{"id":5,"op":"propagate","params":{}}"#).unwrap_err();
        assert_eq!(e.code(), "bad_request");
    }

    #[test]
    fn error_response_roundtrip() {
        let e = BackendError::PointOutOfBounds(9, 3);
        let line = error_line(&Value::from(2), &e);
        assert_eq!(
            line,
            r#"{"id":2,"ok":false,"error":{"code":"point_out_of_bounds","message":"9,3"}}"#
        );
        let resp = Response::parse(&line).unwrap();
        assert_eq!(resp.outcome, Err(e));
        for e in [
            BackendError::Unavailable("x".into()),
            BackendError::SessionNotFound("s9".into()),
            BackendError::DuplicateObjectId(4),
            BackendError::ShapeMismatch("m".into()),
            BackendError::BadRequest("b".into()),
        ] {
            assert_eq!(BackendError::from_wire(e.code(), &e.message()), e);
        }
    }

    #[test]
    fn mask_result_score_defaults_to_one() {
        let r: MaskResult = serde_json::from_str(
            r#"{"object_id":1,"frame_offset":-2,"mask":{"width":1,"height":1,"counts":[1]}}"#,
        )
        .unwrap();
        assert_eq!(r.score, 1.0);
    }
}
