fn main() -> std::process::ExitCode {
    lexcheck::cli::main()
}
