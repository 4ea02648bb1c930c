fn main() {
    std::process::exit(stabletail::cli::run());
}
