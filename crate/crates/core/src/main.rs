fn main() {
    let code = cluster_mass::cli::run(std::env::args_os());
    std::process::exit(code);
}
