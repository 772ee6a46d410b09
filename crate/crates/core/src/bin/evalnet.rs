use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = evalnet::cli::Cli::parse();
    let code = evalnet::cli::run_cli(cli, &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
