fn main() {
    std::process::exit(spa_core::cli::run(std::env::args_os()));
}
