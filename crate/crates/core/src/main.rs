fn main() {
    std::process::exit(twistor_lab::cli::main());
}
