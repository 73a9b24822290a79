fn main() {
    std::process::exit(filippov::cli::run(std::env::args_os()));
}
