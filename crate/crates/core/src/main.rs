use std::io::IsTerminal;
use std::process::ExitCode;

fn main() -> ExitCode {
    let color = std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal();
    let code = nu_ring::cli::run(std::env::args_os(), &mut std::io::stdout().lock(), &mut std::io::stderr().lock(), color);
    ExitCode::from(code)
}
