fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(effdim::cli::run(&argv));
}
