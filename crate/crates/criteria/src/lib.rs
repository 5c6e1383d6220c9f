//! Verdict bookkeeping for the acceptance runner.

use std::fmt;
use std::time::{Duration, Instant};

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u32,
    pub pass: bool,
    pub elapsed: Duration,
    pub budget: Option<Duration>,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "criterion {:>2}: {status} [{:.1}s",
            self.id,
            self.elapsed.as_secs_f64()
        )?;
        if let Some(b) = self.budget {
            write!(f, " / budget {}s", b.as_secs())?;
        }
        write!(f, "] {}", self.detail)
    }
}

/// Runs `check`, which returns `(pass, detail)`, and folds the runtime
/// budget into the verdict. A panic counts as a failure.
pub fn judge<F>(id: u32, budget_secs: Option<u64>, check: F) -> Verdict
where
    F: FnOnce() -> (bool, String) + std::panic::UnwindSafe,
{
    let start = Instant::now();
    let outcome = std::panic::catch_unwind(check);
    let elapsed = start.elapsed();
    let budget = budget_secs.map(Duration::from_secs);
    let (mut pass, mut detail) = match outcome {
        Ok(v) => v,
        Err(e) => {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            (false, format!("panicked: {msg}"))
        }
    };
    if let Some(b) = budget {
        if elapsed > b {
            pass = false;
            detail.push_str("; over runtime budget");
        }
    }
    Verdict {
        id,
        pass,
        elapsed,
        budget,
        detail,
    }
}
