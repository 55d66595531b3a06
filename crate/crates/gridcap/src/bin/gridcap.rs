fn main() -> std::process::ExitCode {
    gridcap::cli::run_from_env()
}
