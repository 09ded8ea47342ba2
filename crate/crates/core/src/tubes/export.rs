//! Explicit tube export for plotting.

use std::io;
use std::path::Path;

use crate::tubes::tube::Tube;

/// One row per tube vertex: `tube, weight, radius, vertex, t, x0[, x1]`.
pub fn tubes_to_csv<W: io::Write>(tubes: &[Tube], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let dim = tubes.first().map(|t| t.dim()).unwrap_or(1);
    let mut header = vec!["tube".to_string(), "weight".into(), "radius".into(), "vertex".into(), "t".into()];
    header.extend((0..dim).map(|a| format!("x{a}")));
    w.write_record(&header)?;
    for (i, tube) in tubes.iter().enumerate() {
        for (k, (t, p)) in tube.times.iter().zip(&tube.points).enumerate() {
            let mut row = vec![
                i.to_string(),
                format!("{:e}", tube.weight),
                tube.radius.to_string(),
                k.to_string(),
                t.to_string(),
            ];
            row.extend(p.iter().map(|x| x.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_tubes_csv(tubes: &[Tube], path: &Path) -> csv::Result<()> {
    let file = std::fs::File::create(path)?;
    tubes_to_csv(tubes, file)
}
