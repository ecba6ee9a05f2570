//! Pins the schema line, the header and the first two data rows of every
//! output for the reference configurations. Set `ARP_UPDATE_GOLDEN=1` to
//! regenerate after an intentional format change.

use std::path::{Path, PathBuf};

use arp_cli::config::{parse_run_config, RunConfig};
use arp_cli::{cmd_compare, cmd_dressed, cmd_propagate, cmd_sweep};

const PINNED_LINES: usize = 4;

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn head(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().take(PINNED_LINES).map(|l| format!("{l}\n")).collect()
}

fn check(prefix: &str, files: &[PathBuf]) {
    for f in files {
        let name = format!("{prefix}__{}", f.file_name().unwrap().to_str().unwrap());
        let golden = golden_dir().join(&name);
        let got = head(f);
        if std::env::var_os("ARP_UPDATE_GOLDEN").is_some() {
            std::fs::write(&golden, &got).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(&golden).unwrap_or_else(|_| panic!("missing golden file {name}"));
        assert_eq!(got, want, "{name} drifted");
    }
}

fn reference() -> RunConfig {
    RunConfig::default()
}

fn slow() -> RunConfig {
    parse_run_config("[pulse]\nchirp_rate = -0.092\n").unwrap()
}

#[test]
fn propagate_outputs() {
    for (prefix, cfg) in [("adiabatic", reference()), ("slow", slow())] {
        let dir = tempfile::tempdir().unwrap();
        check(&format!("propagate_{prefix}"), &cmd_propagate(&cfg, dir.path()).unwrap().files);
    }
}

#[test]
fn dressed_outputs() {
    for (prefix, cfg) in [("adiabatic", reference()), ("slow", slow())] {
        let dir = tempfile::tempdir().unwrap();
        check(&format!("dressed_{prefix}"), &cmd_dressed(&cfg, dir.path()).unwrap().files);
    }
}

#[test]
fn compare_outputs() {
    let dir = tempfile::tempdir().unwrap();
    check("compare_adiabatic", &cmd_compare(&reference(), dir.path()).unwrap().files);
}

#[test]
fn sweep_outputs() {
    let cfg = parse_run_config("[sweep]\nfwhm = [2.5, 3.0]\nchirp = [-3.0, -2.0]\n").unwrap();
    let dir = tempfile::tempdir().unwrap();
    check("sweep_small", &cmd_sweep(&cfg, dir.path()).unwrap().files);
}
