fn main() {
    let argv: Vec<String> = std::env::args().collect();
    std::process::exit(stepfi_cli::main_with(&argv));
}
