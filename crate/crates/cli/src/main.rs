use clap::Parser;

fn main() -> anyhow::Result<()> {
    let cli = haas_cli::Cli::parse();
    let stdout = std::io::stdout();
    match haas_cli::dispatch(cli, &mut stdout.lock()) {
        Err(e) if is_broken_pipe(&e) => Ok(()),
        r => r,
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}
