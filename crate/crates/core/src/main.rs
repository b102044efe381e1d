fn main() {
    std::process::exit(tworv::cli::run(std::env::args_os()));
}
