fn main() {
    std::process::exit(convexlift::cli::main());
}
