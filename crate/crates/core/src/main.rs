fn main() {
    std::process::exit(tailsum::cli::run(std::env::args_os()));
}
