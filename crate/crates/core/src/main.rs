use std::process::ExitCode;

#[tokio::main]
async fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let config = match anchorgraph::server::cli_entry(std::env::args_os()) {
        Ok(config) => config,
        Err(e) => e.exit(),
    };
    match anchorgraph::server::run(config).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("anchorgraph: {e}");
            ExitCode::FAILURE
        }
    }
}
