fn main() {
    std::process::exit(muskat_selfsim::cli::run(std::env::args_os()));
}
