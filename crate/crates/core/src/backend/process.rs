use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use serde::de::DeserializeOwned;
use serde_json::Value;

use super::protocol::{
    AddObjectsParams, AutoMasksParams, Call, CloseParams, OpenVideoParams, PropagateParams,
    Request, Response, SegmentPointsParams,
};
use super::{Backend, BackendError, BackendSession, Direction, MaskResult, Point, PromptObject};

/// Environment variable holding the backend command line.
pub const BACKEND_CMD_ENV: &str = "ANNOB_BACKEND_CMD";

/// Backend running in a child process, spoken to over stdio.
///
/// One request is in flight at a time. The handle may move between threads
/// but is not shared.
pub struct ProcessBackend {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    next_id: u64,
}

impl ProcessBackend {
    /// Spawns `command` (split on whitespace) with piped stdin/stdout.
    pub fn spawn(command: &str) -> Result<Self, BackendError> {
        let mut parts = command.split_whitespace();
        let program = parts
            .next()
            .ok_or_else(|| BackendError::Unavailable("empty backend command".into()))?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BackendError::Unavailable(format!("cannot start {program:?}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = BufReader::new(child.stdout.take().expect("stdout is piped"));
        Ok(Self {
            child,
            stdin,
            stdout,
            next_id: 1,
        })
    }

    /// Spawns the command named by `ANNOB_BACKEND_CMD`.
    pub fn from_env() -> Result<Self, BackendError> {
        let cmd = std::env::var(BACKEND_CMD_ENV)
            .map_err(|_| BackendError::Unavailable(format!("{BACKEND_CMD_ENV} is not set")))?;
        Self::spawn(&cmd)
    }

    fn call(&mut self, call: Call) -> Result<Option<Value>, BackendError> {
        let id = self.next_id;
        self.next_id += 1;
        let line = Request { id, call }.to_line();
        let io_err = |e: std::io::Error| BackendError::Unavailable(format!("backend pipe: {e}"));
        self.stdin.write_all(line.as_bytes()).map_err(io_err)?;
        self.stdin.write_all(b"\n").map_err(io_err)?;
        self.stdin.flush().map_err(io_err)?;

        let mut buf = String::new();
        let n = self.stdout.read_line(&mut buf).map_err(io_err)?;
        if n == 0 {
            return Err(BackendError::Unavailable(
                "backend closed its output".into(),
            ));
        }
        let resp = Response::parse(buf.trim_end())?;
        if resp.id != id {
            return Err(BackendError::Protocol(format!(
                "response id {} does not match request id {id}",
                resp.id
            )));
        }
        resp.outcome
    }

    fn call_typed<T: DeserializeOwned>(&mut self, call: Call) -> Result<T, BackendError> {
        let result = self
            .call(call)?
            .ok_or_else(|| BackendError::Protocol("response lacks result".into()))?;
        serde_json::from_value(result)
            .map_err(|e| BackendError::Protocol(format!("bad result: {e}")))
    }
}

impl Backend for ProcessBackend {
    fn open_video(&mut self, frames: &[String]) -> Result<BackendSession, BackendError> {
        self.call_typed(Call::OpenVideo(OpenVideoParams {
            frames: frames.to_vec(),
        }))
    }

    fn add_objects(
        &mut self,
        session_id: &str,
        frame_index: u32,
        objects: &[PromptObject],
    ) -> Result<(), BackendError> {
        self.call(Call::AddObjects(AddObjectsParams {
            session_id: session_id.to_string(),
            frame_index,
            objects: objects.to_vec(),
        }))
        .map(|_| ())
    }

    fn propagate(
        &mut self,
        session_id: &str,
        direction: Direction,
        horizon: u32,
    ) -> Result<Vec<MaskResult>, BackendError> {
        self.call_typed(Call::Propagate(PropagateParams {
            session_id: session_id.to_string(),
            direction,
            horizon,
        }))
    }

    fn segment_points(
        &mut self,
        image: &str,
        points: &[Point],
        refine_iters: u32,
    ) -> Result<MaskResult, BackendError> {
        self.call_typed(Call::SegmentPoints(SegmentPointsParams {
            image: image.to_string(),
            points: points.to_vec(),
            refine_iters,
        }))
    }

    fn auto_masks(&mut self, image: &str) -> Result<Vec<MaskResult>, BackendError> {
        self.call_typed(Call::AutoMasks(AutoMasksParams {
            image: image.to_string(),
        }))
    }

    fn close_session(&mut self, session_id: &str) -> Result<(), BackendError> {
        self.call(Call::Close(Some(CloseParams {
            session_id: session_id.to_string(),
        })))
        .map(|_| ())
    }
}

impl Drop for ProcessBackend {
    fn drop(&mut self) {
        let _ = self.call(Call::Close(None));
        let _ = self.child.wait();
    }
}
