//! Writes one PNG per task kind into the given directory.

use plotbench::plotrender::{render_task, PlotSpec};
use plotbench::synthgen::{build_task_matrix, MatrixSpec, TaskKind};

fn main() -> plotbench::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "samples".into());
    std::fs::create_dir_all(&out).map_err(|e| plotbench::Error::Io { path: out.clone().into(), source: e })?;
    for kind in TaskKind::SYNTHETIC {
        let mut spec = MatrixSpec::standard(kind);
        spec.repeats = 1;
        let inst = build_task_matrix(kind, &spec, 7)?.swap_remove(7);
        for (i, img) in render_task(&inst, &PlotSpec::for_task(kind))?.iter().enumerate() {
            let p = format!("{out}/{}-{i}.png", kind.name());
            std::fs::write(&p, &img.png).map_err(|e| plotbench::Error::Io { path: p.clone().into(), source: e })?;
        }
    }
    Ok(())
}
