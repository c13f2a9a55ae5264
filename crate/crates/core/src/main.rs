fn main() {
    std::process::exit(essential_absorption::cli::run(std::env::args_os()));
}
