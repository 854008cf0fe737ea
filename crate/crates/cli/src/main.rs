fn main() {
    std::process::exit(kgrl_cli::run(std::env::args_os()));
}
