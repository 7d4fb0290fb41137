fn main() {
    std::process::exit(fracmeasure_cli::run(std::env::args_os()));
}
