use std::process::ExitCode;

fn main() -> ExitCode {
    match modnet::cli::run(std::env::args_os()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let Some(usage) = e.downcast_ref::<clap::Error>() {
                usage.exit();
            }
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
