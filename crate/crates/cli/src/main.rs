fn main() {
    std::process::exit(hermite_frac_cli::run(std::env::args_os()));
}
