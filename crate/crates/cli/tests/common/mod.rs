#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const STAGES: [&str; 8] = [
    "ingest",
    "track",
    "stats",
    "mine-code",
    "mine-fix",
    "match",
    "apply",
    "report",
];

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for e in fs::read_dir(from).unwrap() {
        let e = e.unwrap();
        let target = to.join(e.file_name());
        if e.file_type().unwrap().is_dir() {
            copy_dir(&e.path(), &target);
        } else {
            fs::copy(e.path(), &target).unwrap();
        }
    }
}

/// A private copy of the fixture corpus and its config.
pub struct Workspace {
    _dir: tempfile::TempDir,
    pub root: PathBuf,
}

impl Workspace {
    pub fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().join("corpus");
        copy_dir(
            &Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus"),
            &root,
        );
        Workspace { _dir: dir, root }
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("viopat.conf")
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.root.join("out").join(name)
    }

    pub fn run(&self, stage: &str) -> Output {
        self.run_with(&["--config", self.config().to_str().unwrap(), stage])
    }

    pub fn run_with(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_viopat"))
            .args(args)
            .current_dir(&self.root)
            .output()
            .unwrap()
    }

    /// Run every stage, asserting each succeeds.
    pub fn run_all(&self) {
        for s in STAGES {
            let out = self.run(s);
            assert!(
                out.status.success(),
                "{s}: {}",
                String::from_utf8_lossy(&out.stderr)
            );
        }
    }
}
