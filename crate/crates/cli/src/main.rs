fn main() {
    std::process::exit(aloha_cli::run(std::env::args_os()));
}
