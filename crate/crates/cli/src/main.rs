use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

fn main() {
    let flag = Arc::new(AtomicBool::new(false));
    let handler_flag = Arc::clone(&flag);
    // Without a handler Ctrl-C simply kills the process, which is fine.
    let _ = ctrlc::set_handler(move || handler_flag.store(true, Ordering::Relaxed));
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    let code = seqsat_cli::run_with_interrupt(std::env::args_os(), &mut out, &mut err, Some(&flag));
    std::process::exit(code);
}
