fn main() {
    std::process::exit(tokenmap_sd::cli::main());
}
