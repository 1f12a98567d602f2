//! File helpers shared by the subcommands.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use fce_core::annotations::{parse_jsonl, AnnotatedImage};
use fce_core::tensor::Tensor;
use fce_core::Level;

use crate::error::{CliError, CliResult};

pub fn read_annotations(path: &Path) -> CliResult<Vec<AnnotatedImage>> {
    let file = File::open(path).map_err(|e| CliError::at(path, e))?;
    let parsed = parse_jsonl(BufReader::new(file)).map_err(|e| CliError::at(path, e))?;
    if parsed.clamped_coords > 0 {
        eprintln!(
            "warning: {}: clamped {} coordinates onto the image border",
            path.display(),
            parsed.clamped_coords
        );
    }
    Ok(parsed.images)
}

/// Non-empty JSON lines with their 1-based line numbers.
pub fn read_json_lines(path: &Path) -> CliResult<Vec<(usize, serde_json::Value)>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::at(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (i + 1, v))
                .map_err(|e| CliError::Input(format!("{}: line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

/// Buffered writer for `path`, or stdout.
pub fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| CliError::at(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_lines(path: Option<&Path>, lines: &[String]) -> CliResult<()> {
    let mut w = output(path)?;
    for line in lines {
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::at(path, e))
}

pub fn ensure_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| CliError::at(path, e))
}

/// Image ids become file names, so they must not act as paths.
pub fn check_file_stem(image_id: &str) -> CliResult<()> {
    if image_id.is_empty() || image_id == "." || image_id == ".." || image_id.contains(['/', '\\', '\0']) {
        return Err(CliError::Input(format!(
            "image id {image_id:?} cannot be used as a file name"
        )));
    }
    Ok(())
}

pub fn tensor_file_name(image_id: &str, level: Level) -> String {
    format!("{image_id}.{level}.fct")
}

/// `{image_id}.{level}.fct` files of a directory, grouped by image id in
/// sorted order, levels ascending.
pub fn list_tensor_dir(dir: &Path) -> CliResult<BTreeMap<String, Vec<(Level, PathBuf)>>> {
    let mut out: BTreeMap<String, Vec<(Level, PathBuf)>> = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::at(dir, e))? {
        let path = entry.map_err(|e| CliError::at(dir, e))?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_suffix(".fct") else {
            continue;
        };
        let (image_id, level) = stem
            .rsplit_once('.')
            .and_then(|(id, lv)| lv.parse::<Level>().ok().map(|l| (id.to_string(), l)))
            .ok_or_else(|| CliError::Input(format!("{}: expected <image_id>.<P3|P4|P5>.fct", path.display())))?;
        out.entry(image_id).or_default().push((level, path));
    }
    for levels in out.values_mut() {
        levels.sort();
        if levels.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(CliError::Input(format!("{}: duplicate level files", dir.display())));
        }
    }
    Ok(out)
}

pub fn read_tensor(path: &Path) -> CliResult<Tensor> {
    let bytes = fs::read(path).map_err(|e| CliError::at(path, e))?;
    Tensor::from_bytes(&bytes).map_err(|e| CliError::at(path, e))
}
