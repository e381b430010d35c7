use std::io::{self, Write};

use super::FacetComplex;

/// Plain-text dump: a header line `n m facet_count`, then the 2m symmetrized
/// vertex rows (row `i + m` is `-P_i`), then one row of vertex ids per facet.
pub fn write_off<W: Write>(fc: &FacetComplex, mut out: W) -> io::Result<()> {
    writeln!(out, "{} {} {}", fc.n, fc.m, fc.facets.len())?;
    for i in 0..fc.vertex_count() {
        let row: Vec<String> = fc.vertex(i).iter().map(|c| format!("{c:.16e}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    for f in &fc.facets {
        let row: Vec<String> = f.vertex_ids.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    Ok(())
}
