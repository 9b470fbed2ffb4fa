fn main() {
    std::process::exit(oamlab_cli::run(std::env::args_os()));
}
