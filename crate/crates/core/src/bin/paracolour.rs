fn main() {
    std::process::exit(paracolour::cli::run(std::env::args_os()));
}
