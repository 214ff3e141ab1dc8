//! Shared helpers for the acceptance suite.

/// Prints one line to the real stderr even under the test harness's output
/// capture (capture is thread-local, so a helper thread writes through).
pub fn announce(line: String) {
    std::thread::spawn(move || eprintln!("{line}")).join().unwrap();
}
