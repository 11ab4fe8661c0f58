fn main() {
    std::process::exit(acasec::cli::run(std::env::args_os()));
}
