#![allow(dead_code)]

use std::path::{Path, PathBuf};

use trialmatch::pipeline;
use trialmatch::synth::{generate, SynthOptions};
use trialmatch::Config;

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/synthetic")
}

/// Bundled fixture config with its output redirected to `out`.
pub fn fixture_config(out: &Path) -> Config {
    let mut cfg = Config::load(&fixture_dir().join("trialmatch.toml")).unwrap();
    cfg.out_dir = out.to_path_buf();
    cfg
}

/// Writes a synthetic cohort into `dir` and returns its config, output
/// under `dir/out`.
pub fn synth_config(dir: &Path, options: &SynthOptions) -> Config {
    let cohort = generate(options).unwrap();
    let path = cohort.write(dir, options.seed).unwrap();
    Config::load(&path).unwrap()
}

/// ingest through rank with the configured gateway.
pub fn run_to_rank(cfg: &Config) {
    let gw = cfg.gateway().unwrap();
    pipeline::ingest(cfg).unwrap();
    pipeline::index(cfg).unwrap();
    pipeline::retrieve(cfg, &gw).unwrap();
    pipeline::match_stage(cfg, &gw).unwrap();
    pipeline::rank(cfg, &gw).unwrap();
}

/// Every file under `root` as (relative path, bytes), sorted.
pub fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
