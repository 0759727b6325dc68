//! End-to-end command tests: exit-code classes, output determinism,
//! file formats, and flag validation.

use coxprior::priors;
use coxprior::sensitivity;
use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_coxprior"))
}

fn workdir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("coxprior-cli-{}-{name}", std::process::id()));
    fs::create_dir_all(&dir).expect("create test dir");
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn coxprior")
}

fn stdout_text(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf8 stdout")
}

fn stderr_text(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf8 stderr")
}

fn simulate_into(path: &PathBuf, extra: &[&str]) {
    let path_str = path.to_str().unwrap().to_string();
    let mut args = vec!["simulate", "--out", &path_str];
    args.extend_from_slice(extra);
    let output = run(&args);
    assert!(output.status.success(), "{}", stderr_text(&output));
}

#[test]
fn help_lists_flags_with_defaults() {
    let top = run(&["--help"]);
    assert!(top.status.success());
    let text = stdout_text(&top);
    for sub in ["fit", "sensitivity", "priors", "elicit", "simulate", "plot-priors"] {
        assert!(text.contains(sub), "top-level help missing {sub}");
    }
    let fit = stdout_text(&run(&["fit", "--help"]));
    for flag in ["--data", "--prior", "--method", "--ties", "--chains", "--iters", "--warmup", "--seed", "--out"] {
        assert!(fit.contains(flag), "fit help missing {flag}");
    }
    assert!(fit.contains("[default: quadrature]"));
    assert!(fit.contains("[default: breslow]"));
    assert!(fit.contains("[default: 42]"));
    let simulate = stdout_text(&run(&["simulate", "--help"]));
    assert!(simulate.contains("[default: 8]"));
    assert!(simulate.contains("[default: 20]"));
    let sensitivity_help = stdout_text(&run(&["sensitivity", "--help"]));
    assert!(sensitivity_help.contains("[default: 0.95]"));
}

#[test]
fn simulate_is_deterministic_with_pinned_arm_sizes() {
    let first = run(&["simulate", "--seed", "11", "--log-hr", "0.3"]);
    let second = run(&["simulate", "--seed", "11", "--log-hr", "0.3"]);
    assert!(first.status.success());
    assert_eq!(first.stdout, second.stdout, "same flags must give identical bytes");
    let text = stdout_text(&first);
    let crt = text.lines().filter(|l| l.starts_with("CRT,")).count();
    let hfrt = text.lines().filter(|l| l.starts_with("HFRT,")).count();
    assert_eq!((crt, hfrt), (8, 20));
    assert_eq!(text.lines().next(), Some("group,time_os_months,event"));

    let different_seed = run(&["simulate", "--seed", "12", "--log-hr", "0.3"]);
    assert_ne!(first.stdout, different_seed.stdout);
}

#[test]
fn simulate_rejects_bad_censor_rate() {
    let output = run(&["simulate", "--censor-rate", "1.0"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("censor_rate"));
}

#[test]
fn fit_quadrature_writes_a_summary_record() {
    let dir = workdir("fit-quad");
    let data = dir.join("sim.csv");
    simulate_into(&data, &["--seed", "5"]);
    let output = run(&["fit", "--data", data.to_str().unwrap(), "--prior", "chatgpt-informative"]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_text(&output));
    let record: serde_json::Value = serde_json::from_str(&stdout_text(&output)).expect("stdout is JSON");
    assert_eq!(record["prior_label"], "chatgpt-informative");
    assert_eq!(record["method"], "quadrature");
    assert!(record["rhat"].is_null());
    assert!(record["pr_hr_gt_1"].as_f64().unwrap() > 0.0);
    assert!(stderr_text(&output).contains("Pr(HR > 1)"));
}

#[test]
fn fit_out_flag_redirects_structured_output() {
    let dir = workdir("fit-out");
    let data = dir.join("sim.csv");
    let summary = dir.join("summary.json");
    simulate_into(&data, &[]);
    let output = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--prior",
        "grok-informative",
        "--out",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert!(output.stdout.is_empty(), "structured output must move to the file");
    let record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(record["prior_label"], "grok-informative");
}

#[test]
fn fit_rejects_nonpositive_sigma_with_exit_2() {
    let output = run(&["fit", "--data", "whatever.csv", "--prior", "lognormal:0,-1"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("sigma must be positive"));
}

#[test]
fn fit_rejects_unknown_prior_with_exit_2() {
    let output = run(&["fit", "--data", "whatever.csv", "--prior", "jeffreys"]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("unknown prior"));
}

#[test]
fn fit_maps_data_problems_to_exit_3() {
    let missing = run(&["fit", "--data", "/nonexistent/sim.csv", "--prior", "gemini-informative"]);
    assert_eq!(missing.status.code(), Some(3));

    let dir = workdir("fit-bad-data");
    let bad = dir.join("bad.csv");
    fs::write(&bad, "group,time_os_months,event\nCRT,-3,1\n").unwrap();
    let malformed = run(&["fit", "--data", bad.to_str().unwrap(), "--prior", "gemini-informative"]);
    assert_eq!(malformed.status.code(), Some(3));
    assert!(stderr_text(&malformed).contains("row 1"));
}

#[test]
fn custom_literal_reproduces_preset_parameters() {
    let dir = workdir("fit-literal");
    let data = dir.join("sim.csv");
    simulate_into(&data, &["--seed", "9", "--log-hr", "0.4"]);
    let literal = run(&["fit", "--data", data.to_str().unwrap(), "--prior", "lognormal:0,31.62"]);
    let preset = run(&["fit", "--data", data.to_str().unwrap(), "--prior", "grok-noninformative"]);
    let literal_record: serde_json::Value =
        serde_json::from_str(&stdout_text(&literal)).unwrap();
    let preset_record: serde_json::Value = serde_json::from_str(&stdout_text(&preset)).unwrap();
    assert_eq!(literal_record["prior_label"], "lognormal:0,31.62");
    for field in ["pr_hr_gt_1", "median_hr", "hr_2_5", "hr_97_5"] {
        assert_eq!(
            literal_record[field], preset_record[field],
            "{field} must match the preset exactly"
        );
    }
}

#[test]
fn mcmc_fit_passes_diagnostics_on_defaults() {
    let dir = workdir("fit-mcmc");
    let data = dir.join("sim.csv");
    simulate_into(&data, &["--seed", "31", "--log-hr", "0.5"]);
    let output = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--prior",
        "chatgpt-noninformative",
        "--method",
        "mcmc",
        "--seed",
        "3",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_text(&output));
    let record: serde_json::Value = serde_json::from_str(&stdout_text(&output)).unwrap();
    assert!(record["rhat"].as_f64().unwrap() < 1.01);
    assert!(record["ess"].as_f64().unwrap() > 1000.0);
}

#[test]
fn unconverged_mcmc_exits_5_with_diagnostics() {
    let dir = workdir("fit-unconverged");
    let data = dir.join("sim.csv");
    simulate_into(&data, &["--seed", "8"]);
    // Nearly no warmup and far-flung diffuse-prior starting points
    // leave the chains unmixed after 30 kept draws apiece.
    let output = run(&[
        "fit",
        "--data",
        data.to_str().unwrap(),
        "--prior",
        "grok-noninformative",
        "--method",
        "mcmc",
        "--warmup",
        "5",
        "--iters",
        "30",
        "--seed",
        "1",
    ]);
    assert_eq!(output.status.code(), Some(5), "{}", stderr_text(&output));
    let err = stderr_text(&output);
    assert!(err.contains("R-hat"), "{err}");
    assert!(err.contains("chains have not mixed"), "{err}");
}

#[test]
fn sensitivity_reports_all_six_presets() {
    let dir = workdir("sensitivity-all");
    let data = dir.join("sim.csv");
    simulate_into(&data, &["--seed", "21", "--log-hr", "0.7"]);
    let output = run(&["sensitivity", "--data", data.to_str().unwrap(), "--priors", "all"]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_text(&output));
    let text = stdout_text(&output);
    assert_eq!(
        text.lines().next(),
        Some("Prior,Pr(HR > 1),Median HR,2.5%,97.5%")
    );
    let rows = sensitivity::parse_report_csv(&text).expect("own CSV parses");
    assert_eq!(rows.len(), 6);
    let labels: Vec<&str> = rows.iter().map(|r| r.0.as_str()).collect();
    assert!(labels.contains(&"chatgpt-informative"));
    assert!(labels.contains(&"grok-noninformative"));
    for (label, pr, _, lo, hi) in &rows {
        assert!((0.0..=1.0).contains(pr), "{label}");
        assert!(lo < hi, "{label}");
    }
    let again = run(&["sensitivity", "--data", data.to_str().unwrap(), "--priors", "all"]);
    assert_eq!(output.stdout, again.stdout, "report must be byte-stable");
    assert!(stderr_text(&output).contains("spread Pr(HR > 1)"));
    assert!(stderr_text(&output).contains("unanimous at 0.95"));
}

#[test]
fn sensitivity_renders_markdown_and_plain_tables() {
    let dir = workdir("sensitivity-formats");
    let data = dir.join("sim.csv");
    simulate_into(&data, &[]);
    let markdown = run(&[
        "sensitivity", "--data", data.to_str().unwrap(), "--priors", "all", "--format", "markdown",
    ]);
    assert!(stdout_text(&markdown).starts_with("| Prior |"));
    let table = run(&[
        "sensitivity", "--data", data.to_str().unwrap(), "--priors", "all", "--format", "table",
    ]);
    let table_text = stdout_text(&table);
    assert!(table_text.starts_with("Prior"));
    assert_eq!(table_text.lines().count(), 7, "header plus six rows");
}

#[test]
fn sensitivity_accepts_a_priors_file_with_quoted_labels() {
    let dir = workdir("sensitivity-file");
    let data = dir.join("sim.csv");
    simulate_into(&data, &[]);
    let custom = vec![
        priors::LogHrPrior::custom(0.0, 1.0).unwrap(),
        priors::LogHrPrior::custom(0.2, 0.5).unwrap(),
    ];
    let priors_path = dir.join("priors.json");
    fs::write(&priors_path, priors::write_priors_json(&custom)).unwrap();
    let output = run(&[
        "sensitivity",
        "--data",
        data.to_str().unwrap(),
        "--priors",
        priors_path.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_text(&output));
    let text = stdout_text(&output);
    assert!(text.contains("\"lognormal:0,1\""), "comma labels need quoting: {text}");
    let rows = sensitivity::parse_report_csv(&text).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].0, "lognormal:0,1");
}

#[test]
fn sensitivity_rejects_out_of_range_threshold() {
    let output = run(&[
        "sensitivity", "--data", "x.csv", "--priors", "all", "--threshold", "1.5",
    ]);
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("threshold"));
}

#[test]
fn priors_list_json_round_trips_through_the_library() {
    let output = run(&["priors", "list", "--json"]);
    assert!(output.status.success());
    let parsed = priors::read_priors_json(&stdout_text(&output)).unwrap();
    assert_eq!(parsed, priors::preset_priors());

    let table = stdout_text(&run(&["priors", "list"]));
    assert!(table.contains("grok-noninformative"));
    assert!(table.contains("31.62"));
}

#[test]
fn priors_summarize_prints_hr_scale_summaries() {
    let output = run(&["priors", "summarize", "--prior", "gemini-informative"]);
    assert!(output.status.success());
    let text = stdout_text(&output);
    assert_eq!(
        text.trim(),
        "gemini-informative: median HR 1.10, 95% interval (0.77, 1.56)"
    );
    let all = stdout_text(&run(&["priors", "summarize"]));
    assert_eq!(all.lines().count(), 6);
    let custom = stdout_text(&run(&["priors", "summarize", "--prior", "lognormal:0,1"]));
    assert!(custom.contains("median HR 1.00"));
}

#[test]
fn elicit_mock_writes_prior_file_and_transcript() {
    let dir = workdir("elicit-mock");
    let out = dir.join("priors.json");
    let transcript = dir.join("transcript.txt");
    let args = [
        "elicit",
        "--mock",
        "gemini",
        "--out",
        out.to_str().unwrap(),
        "--transcript",
        transcript.to_str().unwrap(),
    ];
    let output = run(&args);
    assert_eq!(output.status.code(), Some(0), "{}", stderr_text(&output));

    let pair = priors::read_priors_json(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(pair.len(), 2);
    assert_eq!(pair[0].label, "gemini-informative");
    assert_eq!((pair[0].mu, pair[0].sigma), (0.095, 0.18));
    assert_eq!((pair[1].mu, pair[1].sigma), (0.0, 2.0));

    let transcript_text = fs::read_to_string(&transcript).unwrap();
    assert!(transcript_text.contains("# prompt"));
    assert!(transcript_text.contains("You are a radiation oncologist assisting"));
    assert!(transcript_text.contains("# response"));
    assert!(transcript_text.contains("LogNormal(μ = 0.095, σ = 0.18)"));

    let first_bytes = (fs::read(&out).unwrap(), fs::read(&transcript).unwrap());
    let rerun = run(&args);
    assert!(rerun.status.success());
    assert_eq!(fs::read(&out).unwrap(), first_bytes.0);
    assert_eq!(fs::read(&transcript).unwrap(), first_bytes.1);
}

#[test]
fn elicit_requires_exactly_one_mode() {
    let neither = run(&["elicit", "--out", "p.json"]);
    assert_eq!(neither.status.code(), Some(2));
    let both = run(&[
        "elicit", "--provider", "cfg.json", "--mock", "chatgpt", "--out", "p.json",
    ]);
    assert_eq!(both.status.code(), Some(2));
}

#[test]
fn elicit_live_fails_fast_without_the_key_variable() {
    let dir = workdir("elicit-live");
    let config = dir.join("provider.json");
    fs::write(
        &config,
        r#"{"base_url": "http://127.0.0.1:9/v1/chat", "api_key_env": "COXPRIOR_KEY_DEFINITELY_UNSET", "model_name": "gpt-test"}"#,
    )
    .unwrap();
    let output = bin()
        .args([
            "elicit",
            "--provider",
            config.to_str().unwrap(),
            "--out",
            dir.join("p.json").to_str().unwrap(),
        ])
        .env_remove("COXPRIOR_KEY_DEFINITELY_UNSET")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr_text(&output).contains("COXPRIOR_KEY_DEFINITELY_UNSET"));
}

#[test]
fn plot_priors_emits_csv_grid_and_svg() {
    let csv = run(&["plot-priors"]);
    assert!(csv.status.success());
    let text = stdout_text(&csv);
    assert_eq!(text.lines().count(), 3001, "header plus 6 x 500 rows");
    assert_eq!(text.lines().next(), Some("prior_label,hr,density"));

    let dir = workdir("plot");
    let svg_path = dir.join("curves.svg");
    let svg = run(&["plot-priors", "--out", svg_path.to_str().unwrap()]);
    assert!(svg.status.success());
    let svg_text = fs::read_to_string(&svg_path).unwrap();
    assert_eq!(svg_text.matches("<polyline").count(), 6);
    assert!(svg_text.contains("</svg>"));
    for label in ["chatgpt-informative", "grok-noninformative"] {
        assert!(svg_text.contains(label), "legend missing {label}");
    }
    // Informative and non-informative families use distinct palettes.
    assert!(svg_text.contains("#1b4f9c"));
    assert!(svg_text.contains("#b03a2e"));
}

#[test]
fn plot_priors_validates_the_grid() {
    let bad_range = run(&["plot-priors", "--hr-min", "0"]);
    assert_eq!(bad_range.status.code(), Some(2));
    let bad_points = run(&["plot-priors", "--points", "1"]);
    assert_eq!(bad_points.status.code(), Some(2));
}
