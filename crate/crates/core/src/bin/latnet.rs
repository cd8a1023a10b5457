fn main() {
    std::process::exit(latnet::cli::run(std::env::args_os()));
}
