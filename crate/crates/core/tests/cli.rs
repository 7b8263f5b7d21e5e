use std::process::Command;

fn bsdenoise(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bsdenoise")).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = bsdenoise(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: [&str; 9] = ["--trials", "20", "--bits", "3", "--snr-start", "0", "--snr-stop", "5", "--seed=3"];

#[test]
fn mse_csv_shape() {
    let mut args = vec!["mse"];
    args.extend(SMALL);
    let text = stdout(&args);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "estimator,bits,snr_db,mse_linear,mse_db,ber,trials,seconds_per_vector");
    assert_eq!(lines.len(), 1 + 2 * 4);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 8));
    assert!(!text.contains('\r'));
}

#[test]
fn thread_count_does_not_change_results() {
    let mut a = vec!["mse", "--threads", "1"];
    a.extend(SMALL);
    let mut b = vec!["mse", "--threads", "3"];
    b.extend(SMALL);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# defaults\ntrials = 10\nbits = 2\nestimators = ls\nsnr-start = 0\nsnr-stop = 0\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let text = stdout(&["mse", "--config", cfg]);
    assert_eq!(text.lines().count(), 2);
    assert!(text.lines().nth(1).unwrap().starts_with("ls,2,0,"));
    let text = stdout(&["mse", "--config", cfg, "--bits", "4", "--trials", "5"]);
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("ls,4,0,") && row.ends_with(",5,"), "{row}");
}

#[test]
fn known_noise_replaces_blind_estimator() {
    let mut args = vec!["mse", "--estimators", "proposed-blind,ls", "--known-noise"];
    args.extend(SMALL);
    let text = stdout(&args);
    assert!(text.contains("proposed-known,") && !text.contains("proposed-blind,"));
}

#[test]
fn fixed_point_rows_are_labelled() {
    let mut args = vec!["mse", "--estimators", "proposed-blind", "--fixed-point", "--fx-formats", "extended"];
    args.extend(SMALL);
    assert!(stdout(&args).lines().skip(1).all(|l| l.starts_with("proposed-blind-fx,")));
}

#[test]
fn denoise_one_dumps_hex() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let text = stdout(&["denoise-one", "--fixed-point", "--dump-dir", d]);
    assert!(text.contains("saturations,0"));
    let stim = std::fs::read_to_string(dir.path().join("trial0_stimulus.hex")).unwrap();
    assert_eq!(stim.lines().count(), 128);
    assert!(stim.lines().all(|l| l.len() == 3 && u32::from_str_radix(l, 16).is_ok()));
    let text = stdout(&["denoise-one", "--bits", "inf", "--snr", "-3"]);
    assert!(text.contains("d0_trajectory"));
}

#[test]
fn bad_arguments_fail() {
    assert!(!bsdenoise(&["mse", "--params", "bogus=1"]).status.success());
    assert!(!bsdenoise(&["mse", "--bits", "9"]).status.success());
    assert!(!bsdenoise(&["mse", "--trials", "0"]).status.success());
    assert!(!bsdenoise(&["scaling", "--m", "100"]).status.success());
}
