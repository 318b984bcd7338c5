use env_logger::Env;

fn main() {
    env_logger::Builder::from_env(Env::new().filter_or("CYLDRIFT_LOG", "warn").write_style("CYLDRIFT_LOG_STYLE"))
        .init();
    std::process::exit(cyldrift_cli::run_command(std::env::args_os()));
}
