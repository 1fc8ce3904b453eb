fn main() {
    std::process::exit(wed_cli::run(std::env::args_os()));
}
