fn main() -> std::process::ExitCode {
    streamwave::cli::main()
}
