fn main() { std::process::exit(bpat_cli::run(std::env::args().collect())); }
