fn main() {
    std::process::exit(hyperhall::cli::run(std::env::args_os()));
}
