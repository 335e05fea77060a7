use multigo_cli::CliError;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let result = multigo_cli::init_threads().and_then(|()| multigo_cli::run(std::env::args_os()));
    if let Err(e) = result {
        match &e {
            CliError::Clap(text) => eprint!("{text}"),
            other => eprintln!("error: {other}"),
        }
        std::process::exit(e.exit_code());
    }
}
