fn main() -> std::process::ExitCode {
    admm_spectra_cli::app::run()
}
