//! Line-oriented dialog loop. Each turn prints the decoded segments, the
//! sentence template, the merged context and the outcome.

use std::io::{BufRead, Write};

use anyhow::Result;

use chronus_core::dialog::DialogState;
use chronus_core::pipeline::Pipeline;

use crate::write_outcome;

pub fn run(pipeline: &Pipeline, input: impl BufRead, mut out: impl Write, interactive: bool) -> Result<()> {
    let mut state = DialogState::new();
    if interactive {
        write!(out, "> ")?;
        out.flush()?;
    }
    for line in input.lines() {
        let line = line?;
        let text = line.trim();
        if !interactive && !text.is_empty() && !text.starts_with('#') {
            writeln!(out, "> {text}")?;
        }
        match text {
            "" => {}
            ":quit" => break,
            ":reset" => {
                state.reset();
                writeln!(out, "context cleared")?;
            }
            _ if text.starts_with('#') => {}
            _ => match pipeline.respond(&state, text) {
                Ok((next, turn)) => {
                    writeln!(out, "segments\t{}", turn.understanding.decode.segmentation)?;
                    writeln!(out, "template\t{}", turn.understanding.template)?;
                    writeln!(out, "context\t{}", turn.merged)?;
                    write_outcome(&mut out, &turn, true, false)?;
                    state = next;
                }
                // A sentence the lexer cannot read leaves the context alone.
                Err(e) => writeln!(out, "error\t{e}")?,
            },
        }
        if interactive {
            write!(out, "> ")?;
            out.flush()?;
        }
    }
    if interactive {
        writeln!(out)?;
    }
    Ok(())
}
