fn main() {
    std::process::exit(wqed::cli::run(std::env::args_os()));
}
