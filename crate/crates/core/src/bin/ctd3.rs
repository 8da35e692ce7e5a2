fn main() {
    std::process::exit(ctd3::cli::run());
}
