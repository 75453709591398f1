use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::process::ExitCode;

use clap::Parser;

use riskctl::cli::{run, Cli, Command};
use riskctl::service::{serve, AppState};
use riskctl::AppError;

fn serve_blocking(cli: &Cli, host: &str, port: u16) -> Result<(), AppError> {
    let ip: IpAddr = host
        .parse()
        .map_err(|e| AppError::invalid("usage", format!("host `{host}`: {e}")))?;
    let state = AppState::open(cli.kb.as_deref(), &cli.data_dir)?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::io("tokio runtime", e))?;
    runtime.block_on(serve(state, SocketAddr::new(ip, port)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Serve { port, host } => serve_blocking(&cli, host, *port).map(|()| String::new()),
        _ => run(&cli),
    };
    match result {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout
                .write_all(out.as_bytes())
                .and_then(|()| stdout.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            for line in err.to_string().lines() {
                eprintln!("error: {line}");
            }
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
