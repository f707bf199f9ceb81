fn main() {
    std::process::exit(forge_gateway::cli::run(std::env::args_os()));
}
