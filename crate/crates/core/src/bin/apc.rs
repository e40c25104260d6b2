fn main() -> std::process::ExitCode {
    apc::cli::run()
}
