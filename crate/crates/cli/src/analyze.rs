//! `analyze`: feature rows for a directory of frames.

use std::fs;
use std::path::{Path, PathBuf};

use evoimage_core::features;

use crate::config::format_sig;
use crate::error::CliError;
use crate::imageio::load_png;
use crate::run::FRAME_DIR;

pub const FEATURE_HEADER: &str = "frame,benford,gcf,hue,colorfulness";

/// PNG files of `dir` in lexicographic (= emission) order. A run directory
/// is accepted in place of its `frames/` subdirectory.
pub fn frame_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let nested = dir.join(FRAME_DIR);
    let dir = if nested.is_dir() { nested } else { dir.to_path_buf() };
    let mut files = Vec::new();
    for entry in fs::read_dir(&dir).map_err(|e| CliError::io(&dir, e))? {
        let path = entry.map_err(|e| CliError::io(&dir, e))?.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn feature_csv(dir: &Path) -> Result<String, CliError> {
    let mut out = String::from(FEATURE_HEADER);
    out.push('\n');
    for path in frame_files(dir)? {
        let image = load_png(&path)?;
        let f = features::evaluate(&image);
        let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        out.push_str(&name);
        for v in [f.benford, f.gcf, f.hue, f.colorfulness] {
            out.push(',');
            out.push_str(&format_sig(v, 9));
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn analyze(frames: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let csv = feature_csv(frames)?;
    match out {
        Some(path) => fs::write(path, csv).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
