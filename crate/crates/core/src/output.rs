//! Iteration history as CSV and meshes as SVG.

use std::fmt::Write as _;
use std::io::Write;

use crate::adapt::IterationRecord;
use crate::error::Result;
use crate::mesh::PolyMesh;

pub const CSV_COLUMNS: [&str; 26] = [
    "iter",
    "n_cells",
    "n_points",
    "n_dofs",
    "marked",
    "eta_r",
    "err",
    "effectivity",
    "stab_ratio",
    "e_ratio",
    "r_tri",
    "r_quad",
    "ar_rr_max",
    "ar_rr_mean",
    "ar_rr_std",
    "ar_edge_max",
    "ar_edge_mean",
    "ar_edge_std",
    "ar_hr_max",
    "ar_hr_mean",
    "ar_hr_std",
    "ar_hh_max",
    "ar_hh_mean",
    "ar_hh_std",
    "kappa_max",
    "kappa_mean",
];

fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// One CSV line, without the newline. Absent values are empty fields.
pub fn csv_row(r: &IterationRecord) -> String {
    let s = &r.stats;
    let mut fields = vec![
        r.iter.to_string(),
        r.n_cells.to_string(),
        r.n_points.to_string(),
        r.n_dofs.to_string(),
        r.marked.to_string(),
        opt(r.eta_r),
        opt(r.err),
        opt(r.effectivity),
        opt(r.stab_ratio),
        real(s.e_ratio),
        real(s.r_tri),
        real(s.r_quad),
    ];
    for q in [s.ar_rr, s.ar_edge, s.ar_hr, s.ar_hh] {
        fields.extend([real(q.max), real(q.mean), real(q.std)]);
    }
    fields.push(opt(r.kappa_max));
    fields.push(opt(r.kappa_mean));
    fields.join(",")
}

pub fn csv_header() -> String {
    CSV_COLUMNS.join(",")
}

pub fn write_iteration_csv<W: Write>(mut out: W, records: &[IterationRecord]) -> Result<()> {
    writeln!(out, "{}", csv_header())?;
    for r in records {
        writeln!(out, "{}", csv_row(r))?;
    }
    Ok(())
}

/// Blue at 0, red at 1.
fn colour(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let r = (255.0 * t).round() as u8;
    let b = (255.0 * (1.0 - t)).round() as u8;
    format!("#{r:02x}40{b:02x}")
}

/// One `<polygon>` per alive cell. With `scalar` (indexed by cell id) the
/// cells are filled on a blue-to-red scale between its minimum and maximum.
pub fn render_svg(mesh: &PolyMesh, scalar: Option<&[f64]>) -> String {
    let pts = mesh.points();
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        lo_x = lo_x.min(p.x);
        lo_y = lo_y.min(p.y);
        hi_x = hi_x.max(p.x);
        hi_y = hi_y.max(p.y);
    }
    if pts.is_empty() {
        (lo_x, lo_y, hi_x, hi_y) = (0.0, 0.0, 1.0, 1.0);
    }
    let (w, h) = ((hi_x - lo_x).max(f64::MIN_POSITIVE), (hi_y - lo_y).max(f64::MIN_POSITIVE));
    let size = 800.0;
    let scale = size / w.max(h);
    let stroke = 0.5;

    let range = scalar.map(|v| {
        mesh.cells()
            .map(|c| v[c.index()])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    });

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{:.0}" height="{:.0}" viewBox="0 0 {:.3} {:.3}">"#,
        w * scale,
        h * scale,
        w * scale,
        h * scale
    );
    for c in mesh.cells() {
        let coords: Vec<String> = mesh
            .cell_points(c)
            .iter()
            .map(|p| format!("{:.3},{:.3}", (p.x - lo_x) * scale, (hi_y - p.y) * scale))
            .collect();
        let fill = match (scalar, range) {
            (Some(v), Some((lo, hi))) => {
                let t = if hi > lo { (v[c.index()] - lo) / (hi - lo) } else { 0.0 };
                colour(t)
            }
            _ => "none".to_string(),
        };
        let _ = writeln!(
            s,
            r#"<polygon points="{}" fill="{fill}" stroke="black" stroke-width="{stroke}"/>"#,
            coords.join(" ")
        );
    }
    s.push_str("</svg>\n");
    s
}
