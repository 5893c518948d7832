//! Experiment drivers, QMPSO composition and artifact emission.

pub mod config;
pub mod experiments;
pub mod output;
pub mod compose;

use std::path::{Path, PathBuf};

pub use config::{Decomposition, QmpsoSchedule, RunConfig, EXPERIMENTS};
pub use experiments::{fig2, fig4, fig5, fig6, fig7, fig8, fig9, Fig2, Fig4, Fig5, Fig6, Fig7, Fig8, Fig9};
pub use output::{write_output, ExperimentOutput, Table};
pub use compose::{compose_qmpso, detect_t_max_mpo, QmpsoRun};

use crate::error::{Error, Result};

/// Run `cfg.experiment` and return its tables, figures and summary.
pub fn experiment_output(cfg: &RunConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    match cfg.experiment.as_str() {
        "fig2" => fig2(cfg)?.render(),
        "fig4" => fig4(cfg)?.render(),
        "fig5" => fig5(cfg)?.render(),
        "fig6" => fig6(cfg)?.render(),
        "fig7" => fig7(cfg)?.render(),
        "fig8" => fig8(cfg)?.render(),
        "fig9" => fig9(cfg)?.render(),
        other => Err(Error::invalid(format!("unknown experiment '{other}'; expected one of {EXPERIMENTS:?}"))),
    }
}

/// Run the experiment and write its CSV, SVG and manifest files into `out_dir`.
pub fn run_experiment(cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let out = experiment_output(cfg)?;
    write_output(out_dir, cfg, &out)
}
