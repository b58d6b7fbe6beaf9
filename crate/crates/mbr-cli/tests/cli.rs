//! End-to-end runs of the `mbr` binary.

use std::io::Write;
use std::process::{Command, Output};

use tempfile::NamedTempFile;

fn mbr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

fn write_temp(contents: &str) -> NamedTempFile {
    let mut file = NamedTempFile::new().unwrap();
    file.write_all(contents.as_bytes()).unwrap();
    file.flush().unwrap();
    file
}

/// Table-2 shaped sample file: three texts with counts 2/2/1 and model
/// probabilities 0.3/0.1/0.1.
fn table2_file() -> NamedTempFile {
    write_temp(
        r#"{"format_version":1}
{"id":"s1","text":"But telling the truth is not a crime.","logprob":-1.2039728043259361,"count":2}
{"id":"s1","text":"However, telling the truth is not a crime.","logprob":-2.3025850929940455,"count":2}
{"id":"s1","text":"But to tell the truth is not a crime.","logprob":-2.3025850929940455}
"#,
    )
}

fn toy_lm_file() -> NamedTempFile {
    write_temp(
        r#"
format_version = 1
symbols = ["a", "b"]
order = 1
max_length = 3

[conditionals."<bos>"]
a = 0.5
b = 0.3
"<eos>" = 0.2

[conditionals.a]
a = 0.1
b = 0.1
"<eos>" = 0.8

[conditionals.b]
b = 0.5
"<eos>" = 0.5
"#,
    )
}

#[test]
fn select_reports_all_rules_per_pool() {
    let input = table2_file();
    let output = mbr(&[
        "select",
        "--input",
        input.path().to_str().unwrap(),
        "--utility",
        "f1",
    ]);
    assert!(output.status.success(), "{output:?}");
    let text = stdout(&output);
    let lines: Vec<&str> = text.trim().lines().collect();
    // Header plus one row per rule.
    assert_eq!(lines.len(), 4, "{text}");
    assert_eq!(
        lines[0],
        "format_version,id,rule,chosen_index,chosen_text,objective,tie_broken,relative_length"
    );
    for rule in ["mbr", "mbmbr", "mbmbr-l"] {
        assert!(
            lines.iter().any(|l| l.contains(&format!(",{rule},"))),
            "missing rule {rule} in {text}"
        );
    }

    // Hand-computed winner under token F1 with empirical weights: the
    // highest-count text dominates, objective 0.4 + 0.4 * 0.875 + 0.2 * 14/17.
    let mbr_line = lines.iter().find(|l| l.contains(",mbr,")).unwrap();
    assert!(mbr_line.contains("But telling the truth is not a crime."));
    let objective: f64 = mbr_line.split(',').nth(5).unwrap().parse().unwrap();
    let expected = 0.4 + 0.4 * 0.875 + 0.2 * (14.0 / 17.0);
    assert!((objective - expected).abs() < 1e-9, "{objective} vs {expected}");
}

#[test]
fn select_supports_external_matrices() {
    let input = table2_file();
    // Identity-ish external matrix aligned with the pool order.
    let matrix = write_temp(
        r#"{"format_version":1}
{"id":"s1","candidates":["But telling the truth is not a crime.","However, telling the truth is not a crime.","But to tell the truth is not a crime."],"references":["But telling the truth is not a crime.","However, telling the truth is not a crime.","But to tell the truth is not a crime."],"values":[[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]}
"#,
    );
    let output = mbr(&[
        "select",
        "--input",
        input.path().to_str().unwrap(),
        "--rules",
        "mbr",
        "--utility",
        "external",
        "--external-matrix",
        matrix.path().to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    // Under the identity utility the empirical argmax is the weight argmax.
    let text = stdout(&output);
    assert!(text.contains("But telling the truth is not a crime."), "{text}");
    assert!(text.contains("0.4"), "{text}");
}

#[test]
fn misaligned_external_matrix_is_an_input_error() {
    let input = table2_file();
    let matrix = write_temp(
        r#"{"format_version":1}
{"id":"s1","candidates":["wrong text","However, telling the truth is not a crime.","But to tell the truth is not a crime."],"references":["wrong text","However, telling the truth is not a crime.","But to tell the truth is not a crime."],"values":[[1.0,0.0,0.0],[0.0,1.0,0.0],[0.0,0.0,1.0]]}
"#,
    );
    let output = mbr(&[
        "select",
        "--input",
        input.path().to_str().unwrap(),
        "--utility",
        "external",
        "--external-matrix",
        matrix.path().to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr).to_string();
    assert!(err.contains("wrong text"), "{err}");
}

#[test]
fn select_reports_relative_length_with_references() {
    let input = table2_file();
    let refs = write_temp(r#"{"id":"s1","text":"telling the truth is not a crime."}"#);
    let output = mbr(&[
        "select",
        "--input",
        input.path().to_str().unwrap(),
        "--rules",
        "mbr",
        "--utility",
        "f1",
        "--reference",
        refs.path().to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");
    // Chosen text has 8 tokens, reference 7.
    let text = stdout(&output);
    let row = text.trim().lines().last().unwrap();
    let relative: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
    assert!((relative - 8.0 / 7.0).abs() < 1e-12, "{row}");
}

#[test]
fn divergence_reports_match_the_published_example() {
    let input = table2_file();
    let output = mbr(&[
        "divergence",
        "--input",
        input.path().to_str().unwrap(),
        "--tail-mass",
        "0.5",
    ]);
    assert!(output.status.success(), "{output:?}");
    let text = stdout(&output);
    let row = text.trim().lines().last().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    let kl_mc: f64 = fields[2].parse().unwrap();
    let kl_mb: f64 = fields[3].parse().unwrap();
    let kl_closed: f64 = fields[4].parse().unwrap();
    assert!((kl_mc - 0.808).abs() < 0.001, "{row}");
    assert!((kl_mb - 0.693).abs() < 0.001, "{row}");
    assert!((kl_closed - kl_mb).abs() < 1e-12, "{row}");
}

#[test]
fn divergence_requires_a_tail_decision() {
    let input = table2_file();
    let output = mbr(&["divergence", "--input", input.path().to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn malformed_input_line_exits_one_with_line_number() {
    let input = write_temp("{\"id\":\"a\",\"text\":\"x\",\"logprob\":-1.0}\nbroken\n");
    let output = mbr(&[
        "select",
        "--input",
        input.path().to_str().unwrap(),
        "--utility",
        "f1",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("line 2"), "{err}");
}

#[test]
fn empty_input_warns_and_exits_zero() {
    let input = write_temp("");
    let output = mbr(&[
        "select",
        "--input",
        input.path().to_str().unwrap(),
        "--utility",
        "f1",
    ]);
    assert_eq!(output.status.code(), Some(0));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("no records"), "{err}");
}

#[test]
fn zipf_runs_are_reproducible_from_the_cli() {
    let args = [
        "simulate-zipf",
        "--samples-per-run",
        "50",
        "--runs",
        "20",
        "--seed",
        "11",
    ];
    let a = mbr(&args);
    let b = mbr(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).contains("mean_kl_mc"));
}

#[test]
fn sweep_emits_one_row_per_size() {
    let output = mbr(&[
        "sweep", "--inputs", "5", "--sizes", "4,8", "--seed", "3", "--lm-symbols", "3",
        "--lm-max-length", "4",
    ]);
    assert!(output.status.success(), "{output:?}");
    let text = stdout(&output);
    assert_eq!(text.trim().lines().count(), 3, "{text}");
}

#[test]
fn toylm_logprob_matches_the_chain_rule() {
    let lm = toy_lm_file();
    let output = mbr(&[
        "toylm",
        "logprob",
        "--lm",
        lm.path().to_str().unwrap(),
        "--text",
        "a b",
    ]);
    assert!(output.status.success(), "{output:?}");
    let value: f64 = stdout(&output).trim().parse().unwrap();
    // P(a|bos) * P(b|a) * 1.0 at the cap: 0.5 * 0.1.
    assert!((value - (0.5f64 * 0.1).ln()).abs() < 1e-12);
}

#[test]
fn toylm_enumerate_lists_the_full_support_with_unit_mass() {
    let lm = toy_lm_file();
    let output = mbr(&["toylm", "enumerate", "--lm", lm.path().to_str().unwrap()]);
    assert!(output.status.success());
    let text = stdout(&output);
    let mut mass = 0.0f64;
    for line in text.lines() {
        let logprob: f64 = line.split('\t').next().unwrap().parse().unwrap();
        mass += logprob.exp();
    }
    assert!((mass - 1.0).abs() < 1e-9, "mass {mass}");
}

#[test]
fn toylm_sample_is_seed_deterministic() {
    let lm = toy_lm_file();
    let args = [
        "toylm",
        "sample",
        "--lm",
        lm.path().to_str().unwrap(),
        "-n",
        "25",
        "--algorithm",
        "epsilon",
        "--epsilon",
        "0.05",
        "--seed",
        "21",
    ];
    let a = mbr(&args);
    let b = mbr(&args);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(stdout(&a).lines().count(), 25);
}
