fn main() {
    std::process::exit(tempnet::cli::run(std::env::args_os()));
}
