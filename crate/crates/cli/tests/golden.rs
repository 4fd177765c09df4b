//! Golden-report tests: every fixture is exercised by at least one command,
//! reports are byte-identical across repeated runs, and the serialized output
//! matches the committed golden files.
//!
//! Regenerate the goldens with `OQC_BLESS=1 cargo test -p oqc-cli`.

use clap::Parser;
use oqc_cli::{execute, render_report, Cli};

fn fixture(name: &str) -> String {
    format!("{}/../../fixtures/{}", env!("CARGO_MANIFEST_DIR"), name)
}

fn golden_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{}.json", name))
}

fn run_case(name: &str, args: &[String]) {
    let mut full = vec!["oqc".to_string()];
    full.extend(args.iter().cloned());
    let cli = Cli::parse_from(&full);
    let report = execute(&cli).unwrap_or_else(|e| panic!("{}: {}", name, e));
    let text = render_report(&report, false);
    // byte-identical across repeated runs
    let cli2 = Cli::parse_from(&full);
    let report2 = execute(&cli2).unwrap();
    let text2 = render_report(&report2, false);
    assert_eq!(text, text2, "{}: report not deterministic", name);

    // strip the workspace location: inputs are keyed by fixture paths that
    // embed the manifest directory
    let norm = |s: &str| s.replace(env!("CARGO_MANIFEST_DIR"), "<cli>");
    let text = norm(&text);
    let path = golden_path(name);
    if std::env::var("OQC_BLESS").is_ok() {
        std::fs::write(&path, &text).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("{}: golden file missing; run with OQC_BLESS=1", name));
    assert_eq!(expected, text, "{}: golden mismatch", name);
}

macro_rules! case {
    ($testname:ident, $($arg:expr),+ $(,)?) => {
        #[test]
        fn $testname() {
            let args: Vec<String> = vec![$($arg.to_string()),+];
            run_case(stringify!($testname), &args);
        }
    };
}

case!(gamma_p1, "gamma", "--spec", fixture("p1.json"));
case!(
    jfun_p1,
    "jfun",
    "--spec",
    fixture("p1.json"),
    "--correlators",
    fixture("p1_correlators.json"),
    "--order",
    "3"
);
case!(
    charge_c2z2,
    "charge",
    "--spec",
    fixture("c2z2.json"),
    "--correlators",
    fixture("c2z2_correlators.json"),
    "--class",
    "sky:rho1",
    "--order",
    "3"
);
case!(
    charge_c2z3,
    "charge",
    "--spec",
    fixture("c2z3.json"),
    "--correlators",
    fixture("c2z3_correlators.json"),
    "--class",
    "sky:rho2",
    "--order",
    "3"
);
case!(
    charge_c2z4,
    "charge",
    "--spec",
    fixture("c2z4.json"),
    "--correlators",
    fixture("c2z4_correlators.json"),
    "--class",
    "sky:rho1",
    "--order",
    "3"
);
case!(
    predict_localp2,
    "predict",
    "--spec",
    fixture("c3z3.json"),
    "--fm",
    fixture("fm_localp2.json"),
    "--pots",
    fixture("c3z3_potentials.json"),
    "--order",
    "9",
    "--crossref"
);
case!(
    predict_a1,
    "predict",
    "--spec",
    fixture("c2z2.json"),
    "--fm",
    fixture("fm_a1.json"),
    "--order",
    "3",
    "--crossref"
);
case!(
    charge_quintic_surface,
    "charge",
    "--spec",
    fixture("cy3_quintic.json"),
    "--correlators",
    fixture("cy3_quintic_correlators.json"),
    "--class",
    "O_S",
    "--pots",
    fixture("cy3_quintic_potentials.json"),
    "--order",
    "2"
);
case!(monodromy_k3, "monodromy", "--spec", fixture("k3.json"));
case!(
    wdvv_p2,
    "wdvv",
    "--spec",
    fixture("p2.json"),
    "--correlators",
    fixture("p2_correlators.json"),
    "--order",
    "4"
);
case!(
    validate_u_identity,
    "validate-u",
    "--u",
    fixture("u_identity_p1.json"),
    "--spec1",
    fixture("p1.json"),
    "--spec2",
    fixture("p1.json")
);
case!(jordan_p2, "jordan", "--pair", fixture("hlpair_p2.json"));
case!(
    period_c3z3,
    "period",
    "--spec",
    fixture("c3z3.json"),
    "--correlators",
    fixture("c3z3_correlators.json"),
    "--class",
    "sky:reg",
    "--order",
    "6"
);
case!(inertia_c3z3, "inertia", "--spec", fixture("c3z3.json"));

#[test]
fn exit_contract_schema_error() {
    // schema violations map to exit code 2
    let bad = golden_path("..").join("does_not_exist.json");
    let cli = Cli::parse_from([
        "oqc",
        "inertia",
        "--spec",
        bad.to_str().unwrap(),
    ]);
    match execute(&cli) {
        Err(e) => assert_eq!(oqc_cli::error_exit_code(&e), 2),
        Ok(_) => panic!("expected schema error"),
    }
}

#[test]
fn numerical_failure_reported_not_crashed() {
    // hl-check on [C3/Z3] fails its checks but produces a report
    let cli = Cli::parse_from(["oqc", "hl-check", "--spec", &fixture("c3z3.json")]);
    let report = execute(&cli).unwrap();
    assert!(!report.all_pass());
}
