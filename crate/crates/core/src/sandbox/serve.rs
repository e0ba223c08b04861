//! Executor side of the line protocol, for the reference executor process.

use std::io::{self, BufRead, Write};

use super::executor::{Executor, Fatal};
use super::protocol::{decode, encode, Handshake, RequestKind, SandboxRequest};

/// Why the serve loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServeEnd {
    Shutdown,
    /// The host closed our input.
    Eof,
    /// A candidate asked for the process to die or stop answering.
    Fatal(Fatal),
}

/// Announces the protocol, then answers requests until shutdown, end of
/// input, or a fatal fixture.
pub fn serve(executor: &mut Executor, input: impl BufRead, mut output: impl Write) -> io::Result<ServeEnd> {
    writeln!(output, "{}", encode(&Handshake::current()))?;
    output.flush()?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req = match decode::<SandboxRequest>(&line) {
            Ok(req) => req,
            Err(e) => {
                // Without an id there is nothing to answer; the host will
                // hit its deadline.
                tracing::error!(error = %e, "unreadable request");
                continue;
            }
        };
        let resp = match executor.handle(&req) {
            Ok(resp) => resp,
            Err(f) => return Ok(ServeEnd::Fatal(f)),
        };
        writeln!(output, "{}", encode(&resp))?;
        output.flush()?;
        if matches!(req.kind, RequestKind::Shutdown) {
            return Ok(ServeEnd::Shutdown);
        }
    }
    Ok(ServeEnd::Eof)
}
