use std::io::IsTerminal;

fn main() {
    let stdout = std::io::stdout();
    let is_tty = stdout.is_terminal();
    let status = hhlab_cli::main_with(std::env::args_os(), &mut stdout.lock(), &mut std::io::stderr(), is_tty);
    std::process::exit(status);
}
