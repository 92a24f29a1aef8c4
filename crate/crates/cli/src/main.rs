use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = rydquench_cli::Cli::parse();
    if let Err(e) = rydquench_cli::run(cli) {
        eprintln!("rydquench: {e}");
        std::process::exit(e.exit_code());
    }
}
