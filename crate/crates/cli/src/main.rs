fn main() {
    std::process::exit(oamring_cli::run(std::env::args_os()));
}
