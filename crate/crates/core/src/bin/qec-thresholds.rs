use std::process::ExitCode;

fn main() -> ExitCode {
    match qec_thresholds::cli::run(std::env::args_os()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("{}", qec_thresholds::cli::error_record(&e));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
