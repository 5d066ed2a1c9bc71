fn main() {
    std::process::exit(fragshap_cli::run(std::env::args_os()));
}
