fn main() {
    std::process::exit(orsched::cli::run(std::env::args_os()));
}
