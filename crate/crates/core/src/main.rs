fn main() {
    std::process::exit(badcavity::cli::run(std::env::args_os()));
}
