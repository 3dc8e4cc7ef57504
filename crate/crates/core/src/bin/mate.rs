fn main() {
    std::process::exit(mate::cli::run(std::env::args_os()));
}
