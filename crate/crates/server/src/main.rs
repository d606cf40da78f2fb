fn main() -> std::process::ExitCode {
    fairdeal::cli::main()
}
