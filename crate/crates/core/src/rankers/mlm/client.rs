use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{BackendError, BackendInfo, MaskQuery, MlmBackend, PieceProbs};

/// Client for a backend speaking line-delimited JSON.
///
/// The server first writes `{"hello": {"layers", "dim", "mask",
/// "cont_marker"}}` (or `{"error": msg}`). Each request is one line,
/// `{"id", "op", "tokens", "topk"?, "candidates"?}` with `op` one of
/// `tokenize`, `mask_topk`, `encode_layers`; the reply echoes `id` and
/// carries `pieces`, `masks` (per mask, `[piece, prob]` pairs) or `layers`,
/// or an `error` message. Requests are serialized through a lock, so one
/// client can be shared between threads.
pub struct JsonlClient {
    info: BackendInfo,
    conn: Mutex<Conn>,
    next_id: AtomicU64,
    child: Option<Child>,
}

struct Conn {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
}

#[derive(Serialize)]
struct Request<'a> {
    id: String,
    op: &'a str,
    tokens: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    topk: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    candidates: Option<&'a [String]>,
}

#[derive(Deserialize)]
struct Response {
    id: Option<String>,
    #[serde(default)]
    error: Option<String>,
    #[serde(default)]
    pieces: Option<Vec<Vec<String>>>,
    #[serde(default)]
    masks: Option<Vec<Vec<(String, f64)>>>,
    #[serde(default)]
    layers: Option<Vec<Vec<Vec<f32>>>>,
}

#[derive(Deserialize)]
struct Hello {
    #[serde(default)]
    hello: Option<BackendInfo>,
    #[serde(default)]
    error: Option<String>,
}

fn read_line(reader: &mut dyn BufRead) -> Result<String, BackendError> {
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Err(BackendError::Protocol("backend closed the connection".into()));
    }
    Ok(line)
}

impl JsonlClient {
    /// Reads the handshake from `reader`; requests go to `writer`.
    pub fn from_streams<R, W>(reader: R, writer: W) -> Result<Self, BackendError>
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        let mut reader: Box<dyn BufRead + Send> = Box::new(reader);
        let line = read_line(&mut reader).map_err(|e| BackendError::Handshake(e.to_string()))?;
        let hello: Hello = serde_json::from_str(&line).map_err(|e| BackendError::Handshake(e.to_string()))?;
        let info = match (hello.hello, hello.error) {
            (_, Some(e)) => return Err(BackendError::Handshake(e)),
            (Some(info), None) => info,
            (None, None) => return Err(BackendError::Handshake("first line has no hello".into())),
        };
        Ok(JsonlClient {
            info,
            conn: Mutex::new(Conn {
                reader,
                writer: Box::new(writer),
            }),
            next_id: AtomicU64::new(1),
            child: None,
        })
    }

    /// Starts `program` and talks to it over stdin and stdout.
    pub fn spawn(program: &str, args: &[&str]) -> Result<Self, BackendError> {
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        match JsonlClient::from_streams(BufReader::new(stdout), stdin) {
            Ok(mut c) => {
                c.child = Some(child);
                Ok(c)
            }
            Err(e) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(e)
            }
        }
    }

    #[cfg(unix)]
    pub fn connect_unix(path: impl AsRef<std::path::Path>) -> Result<Self, BackendError> {
        let stream = std::os::unix::net::UnixStream::connect(path)?;
        let reader = BufReader::new(stream.try_clone()?);
        JsonlClient::from_streams(reader, stream)
    }

    fn call(
        &self,
        op: &str,
        tokens: &[String],
        topk: Option<usize>,
        candidates: Option<&[String]>,
    ) -> Result<Response, BackendError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed).to_string();
        let req = Request {
            id: id.clone(),
            op,
            tokens,
            topk,
            candidates,
        };
        let mut line = serde_json::to_string(&req).map_err(|e| BackendError::Protocol(e.to_string()))?;
        line.push('\n');
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        conn.writer.write_all(line.as_bytes())?;
        conn.writer.flush()?;
        let reply = read_line(&mut conn.reader)?;
        drop(conn);
        let resp: Response = serde_json::from_str(&reply).map_err(|e| BackendError::Protocol(e.to_string()))?;
        if resp.id.as_deref() != Some(id.as_str()) {
            return Err(BackendError::Protocol(format!(
                "expected reply to request {id}, got {:?}",
                resp.id
            )));
        }
        if let Some(e) = resp.error {
            return Err(BackendError::Remote(e));
        }
        Ok(resp)
    }
}

fn missing(field: &str) -> BackendError {
    BackendError::Protocol(format!("reply lacks {field:?}"))
}

impl MlmBackend for JsonlClient {
    fn info(&self) -> &BackendInfo {
        &self.info
    }

    fn tokenize(&self, words: &[String]) -> Result<Vec<Vec<String>>, BackendError> {
        let pieces = self
            .call("tokenize", words, None, None)?
            .pieces
            .ok_or_else(|| missing("pieces"))?;
        if pieces.len() != words.len() {
            return Err(BackendError::Protocol(format!(
                "{} words sent, {} tokenized",
                words.len(),
                pieces.len()
            )));
        }
        Ok(pieces)
    }

    fn mask_probs(&self, tokens: &[String], query: &MaskQuery) -> Result<Vec<PieceProbs>, BackendError> {
        let resp = match query {
            MaskQuery::TopK(k) => self.call("mask_topk", tokens, Some(*k), None)?,
            MaskQuery::Pieces(p) => self.call("mask_topk", tokens, None, Some(p))?,
        };
        let masks = resp.masks.ok_or_else(|| missing("masks"))?;
        let expected = tokens.iter().filter(|t| **t == self.info.mask).count();
        if masks.len() != expected {
            return Err(BackendError::Protocol(format!(
                "{expected} masks sent, {} distributions returned",
                masks.len()
            )));
        }
        masks
            .into_iter()
            .map(|m| {
                if m.iter().any(|(_, p)| !(0.0..=1.0).contains(p)) {
                    return Err(BackendError::Protocol("probability outside [0, 1]".into()));
                }
                Ok(m.into_iter().collect())
            })
            .collect()
    }

    fn encode_layers(&self, tokens: &[String]) -> Result<Vec<Vec<Vec<f32>>>, BackendError> {
        let layers = self
            .call("encode_layers", tokens, None, None)?
            .layers
            .ok_or_else(|| missing("layers"))?;
        let shape_ok = layers.len() == self.info.layers
            && layers
                .iter()
                .all(|l| l.len() == tokens.len() && l.iter().all(|v| v.len() == self.info.dim));
        if !shape_ok {
            return Err(BackendError::Protocol(format!(
                "expected {} layers of {} vectors of width {}",
                self.info.layers,
                tokens.len(),
                self.info.dim
            )));
        }
        Ok(layers)
    }
}

impl Drop for JsonlClient {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.take() {
            // Closing stdin ends the server's input loop.
            if let Ok(conn) = self.conn.get_mut() {
                conn.writer = Box::new(std::io::sink());
            }
            let _ = child.wait();
        }
    }
}
