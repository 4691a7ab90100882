use std::io::Write;
use std::process::ExitCode;

use anyhow::Context;

fn main() -> anyhow::Result<ExitCode> {
    let ex = match dioph_cli::run(std::env::args_os()) {
        Ok(ex) => ex,
        Err(e) => {
            let code = e.exit_code();
            e.print().context("printing usage")?;
            return Ok(ExitCode::from(code as u8));
        }
    };
    match &ex.out {
        Some(path) => std::fs::write(path, &ex.rendered).with_context(|| format!("writing {}", path.display()))?,
        None => match std::io::stdout().lock().write_all(ex.rendered.as_bytes()) {
            // reader went away, e.g. `| head`
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
            r => r.context("writing stdout")?,
        },
    }
    eprintln!(
        "{} record(s), exit {}, {} ms",
        ex.records.len(),
        ex.exit_code,
        ex.records.first().map(|r| r.elapsed_ms).unwrap_or(0)
    );
    Ok(ExitCode::from(ex.exit_code as u8))
}
