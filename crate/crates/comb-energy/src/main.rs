fn main() {
    std::process::exit(comb_energy::cli::run(std::env::args_os()));
}
