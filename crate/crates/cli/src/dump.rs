//! `dump-matrix`: writes one named intermediate matrix as two dense CSV
//! files, real and imaginary parts, with row and column labels.

use spdc_core::{propagate_pump, BlockMatrix, MatrixContext};

use crate::config::LoadedConfig;
use crate::error::CliResult;
use crate::output::{fmt_num, OutDir};

pub fn named(cfg: &LoadedConfig, name: &str) -> CliResult<BlockMatrix> {
    let c = &cfg.config;
    let structure = cfg.structure()?;
    let pump = c.pump.spec()?;
    let setup = c.basis.setup(&pump)?;
    let field = propagate_pump(&structure, &pump, setup.pairs.omegas())?;
    let ctx = MatrixContext::new(&structure, &setup, &field)?;
    Ok(ctx.named_matrix(name, &c.simulate.emission_options())?)
}

pub fn write(dir: &OutDir, m: &BlockMatrix) -> CliResult<Vec<String>> {
    let (rows, cols) = m.matrix.shape();
    let labels: Vec<String> = (0..cols).map(|j| m.col_label(j)).collect();
    let mut header: Vec<&str> = vec!["row"];
    header.extend(labels.iter().map(String::as_str));
    let safe = m.name.replace(',', "_");
    let mut files = Vec::new();
    for (suffix, part) in [("re", 0), ("im", 1)] {
        let body: Vec<Vec<String>> = (0..rows)
            .map(|i| {
                let mut r = vec![m.row_label(i)];
                r.extend(m.matrix.row(i).iter().map(|z| fmt_num(if part == 0 { z.re } else { z.im })));
                r
            })
            .collect();
        let name = format!("{safe}_{suffix}.csv");
        dir.csv_text(&name, &header, &body)?;
        files.push(name);
    }
    Ok(files)
}
