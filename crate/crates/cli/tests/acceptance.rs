//! Acceptance criteria 1-10, one PASS/FAIL line each. Exits nonzero when
//! any criterion fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use bmopt_cli::config::ExperimentConfig;
use bmopt_cli::experiment::{loglog_slope, run_experiment};
use bmopt_lab::{run_lemma_suite, Check, CheckRow, SuiteConfig};

struct Outcome {
    pass: bool,
    detail: String,
}

fn rows_outcome(rows: &[CheckRow]) -> Outcome {
    let detail = rows
        .iter()
        .map(|r| {
            format!(
                "{} est={:.6} bound={:.6} se={:.6} margin={:.6}{}",
                r.name,
                r.estimate,
                r.bound,
                r.se,
                r.margin,
                if r.pass { "" } else { " FAILED" }
            )
        })
        .collect::<Vec<_>>()
        .join("\n    ");
    Outcome {
        pass: !rows.is_empty() && rows.iter().all(|r| r.pass),
        detail,
    }
}

fn suite(checks: &[Check]) -> Outcome {
    let cfg = SuiteConfig {
        checks: checks.to_vec(),
        ..SuiteConfig::default()
    };
    match run_lemma_suite(&cfg) {
        Ok(rows) => rows_outcome(&rows),
        Err(e) => Outcome {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

/// Criteria 1 and 2 share one desk-scale experiment.
fn scaling() -> (Outcome, Outcome) {
    let cfg = ExperimentConfig {
        parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        ..ExperimentConfig::default()
    };
    let out = match run_experiment(&cfg, 0, false) {
        Ok(o) => o,
        Err(e) => {
            let fail = || Outcome {
                pass: false,
                detail: format!("error: {e}"),
            };
            return (fail(), fail());
        }
    };
    let agg = &out.aggregates;
    let ts: Vec<f64> = agg.iter().map(|a| a.t as f64).collect();
    let means: Vec<f64> = agg.iter().map(|a| a.mean_cumulative).collect();
    let slope = loglog_slope(&ts, &means);
    let (first, last) = (&agg[0], &agg[agg.len() - 1]);
    let ratio = last.mean_normalized / first.mean_normalized;
    let table = agg
        .iter()
        .map(|a| {
            format!(
                "T={:>6} mean R_T/sqrtT={:8.3} (sd {:7.3})  mean r_T*sqrtT={:8.3}",
                a.t, a.mean_normalized, a.std_normalized, a.mean_simple_times_sqrt_t
            )
        })
        .collect::<Vec<_>>()
        .join("\n    ");
    let c1 = Outcome {
        pass: (0.40..=0.65).contains(&slope) && ratio <= 1.6,
        detail: format!(
            "log-log slope {slope:.4} (need [0.40, 0.65]); R_T/sqrtT ratio {ratio:.3} (need <= 1.6)\n    {table}"
        ),
    };
    let simple_ratio = last.mean_simple_times_sqrt_t / first.mean_simple_times_sqrt_t;
    let c2 = Outcome {
        pass: simple_ratio <= 3.0,
        detail: format!("r_T*sqrtT ratio {simple_ratio:.3} (need <= 3)"),
    };
    (c1, c2)
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_bmopt"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?} exited with {:?}", out.status.code()))
    }
}

fn determinism() -> Outcome {
    let check = || -> Result<Vec<String>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        std::fs::write(
            dir.path().join("c.json"),
            r#"{"T_grid": [1000, 4000], "path_seeds": 4, "noise_seeds_per_path": 3, "truth_depth": 16}"#,
        )
        .map_err(|e| e.to_string())?;
        let runs: [(&str, &[&str]); 4] = [
            ("a", &["experiment", "--config", "c.json", "--jobs", "1"]),
            ("b", &["experiment", "--config", "c.json", "--jobs", "4"]),
            ("a", &["lowerbound", "--seeds", "60", "--budgets", "500,1000"]),
            ("b", &["lowerbound", "--seeds", "60", "--budgets", "500,1000"]),
        ];
        for (out, args) in runs {
            let mut a: Vec<&str> = args.to_vec();
            a.extend(["--out", out]);
            run_cli(dir.path(), &a)?;
        }
        let mut compared = Vec::new();
        for f in ["runs.csv", "aggregates.csv", "regret.svg", "lowerbound.csv"] {
            let a = std::fs::read(dir.path().join("a").join(f)).map_err(|e| e.to_string())?;
            let b = std::fs::read(dir.path().join("b").join(f)).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("{f} differs between reruns"));
            }
            compared.push(format!("{f} ({} bytes)", a.len()));
        }
        Ok(compared)
    };
    match check() {
        Ok(files) => Outcome {
            pass: true,
            detail: format!("identical: {}", files.join(", ")),
        },
        Err(e) => Outcome {
            pass: false,
            detail: e,
        },
    }
}

fn main() -> ExitCode {
    // Accept and ignore the libtest flags cargo passes through.
    let mut all = true;
    let mut report = |n: u32, name: &str, f: &dyn Fn() -> Outcome| {
        let start = Instant::now();
        let o = f();
        all &= o.pass;
        println!(
            "criterion {n:>2} {}: {name} [{:.1}s]\n    {}",
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    };

    let start = Instant::now();
    let (c1, c2) = scaling();
    let took = start.elapsed().as_secs_f64();
    report(1, &format!("regret scaling (experiment took {took:.1}s)"), &|| Outcome {
        pass: c1.pass,
        detail: c1.detail.clone(),
    });
    report(2, "simple regret scaling", &|| Outcome {
        pass: c2.pass,
        detail: c2.detail.clone(),
    });
    report(3, "event M frequency", &|| suite(&[Check::EventM]));
    report(4, "near-optimal counting", &|| suite(&[Check::NearOptimal]));
    report(5, "distributional oracles", &|| suite(&[Check::RunningMax, Check::BridgeMax]));
    report(6, "meander bounds", &|| suite(&[Check::Meander]));
    report(7, "event T certification", &|| suite(&[Check::EventT]));
    report(8, "Fano consistency", &|| suite(&[Check::Fano]));
    report(9, "algorithm conformance", &|| suite(&[Check::Conformance]));
    report(10, "determinism", &determinism);

    if all {
        println!("acceptance: all criteria PASS");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria FAIL");
        ExitCode::FAILURE
    }
}
