fn main() {
    std::process::exit(currikit_cli::run(std::env::args_os()));
}
