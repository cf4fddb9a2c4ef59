fn main() {
    std::process::exit(chai::io::cli::run_command(std::env::args_os()));
}
