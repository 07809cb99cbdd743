fn main() {
    std::process::exit(mmr_cluster::cli::run(std::env::args_os()));
}
