fn main() {
    std::process::exit(tritail_cli::run(std::env::args_os()));
}
