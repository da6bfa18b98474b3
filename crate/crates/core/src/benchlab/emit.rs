//! Curve output: CSV tables and SVG plots.
//!
//! CSV header (fixed):
//! `solver,x_axis,x,y_axis,y,n,rank,density,error_rate,lambda,trials,failures`.
//! `y` is the largest admissible scan value or `below_grid`; `density` and
//! `error_rate` hold whichever of the two was held fixed (the other is empty).

use std::fs::File;
use std::path::{Path, PathBuf};

use plotters::prelude::*;

use super::{CurveRow, CurveTable, PhaseValue};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Csv,
    Svg,
}

impl CurveTable {
    pub fn emit(&self, format: PlotFormat, path: &Path) -> Result<()> {
        match format {
            PlotFormat::Csv => write_csv(self, path),
            PlotFormat::Svg => write_svg(self, path),
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format("curve csv", format!("{}: {other:?}", path.display())),
    }
}

/// Writes curve rows one at a time, flushing after each, so an interrupted
/// sweep leaves every finished row on disk.
pub struct CsvRowWriter {
    path: PathBuf,
    inner: csv::Writer<File>,
}

impl CsvRowWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner: csv::WriterBuilder::new().has_headers(true).from_writer(file),
        })
    }

    pub fn write(&mut self, row: &CurveRow) -> Result<()> {
        self.inner.serialize(row).map_err(|e| csv_err(&self.path, e))?;
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub fn write_csv(table: &CurveTable, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::arg("no curve rows to write"));
    }
    let mut w = CsvRowWriter::create(path)?;
    table.rows.iter().try_for_each(|row| w.write(row))
}

pub fn read_csv(path: &Path) -> Result<CurveTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(file);
    let rows = r
        .deserialize::<CurveRow>()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_err(path, e))?;
    Ok(CurveTable { rows })
}

const PALETTE: [RGBColor; 4] = [RGBColor(31, 119, 180), RGBColor(214, 39, 40), RGBColor(44, 160, 44), RGBColor(148, 103, 189)];

/// One line series per solver; below-grid points are drawn at 0.
pub fn write_svg(table: &CurveTable, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::arg("no curve rows to plot"));
    }
    // Probe writability first so a bad path is an I/O error, not a plot error.
    File::create(path).map_err(|e| Error::io(path, e))?;
    let plot_err = |e: &dyn std::fmt::Display| Error::format("plot", e.to_string());

    let first = &table.rows[0];
    let (mut x_lo, mut x_hi) = table
        .rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.x), hi.max(r.x)));
    if x_hi - x_lo < 1e-12 {
        x_lo -= 0.5 * x_lo.abs().max(1e-3);
        x_hi += 0.5 * x_hi.abs().max(1e-3);
    }
    let pad = 0.05 * (x_hi - x_lo);

    let root = SVGBackend::new(path, (720, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(
            format!("max admissible {} (n = {}, rank {})", first.y_axis, first.n, first.rank),
            ("sans-serif", 18),
        )
        .margin(12)
        .x_label_area_size(40)
        .y_label_area_size(50)
        .build_cartesian_2d((x_lo - pad)..(x_hi + pad), 0.0..1.0)
        .map_err(|e| plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc(first.x_axis.to_string())
        .y_desc(format!("max admissible {}", first.y_axis))
        .draw()
        .map_err(|e| plot_err(&e))?;

    for (k, solver) in table.solvers().into_iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = table
            .curve(solver)
            .into_iter()
            .map(|(x, y)| (x, match y {
                PhaseValue::Admissible(v) => v,
                PhaseValue::BelowGrid => 0.0,
            }))
            .collect();
        chart
            .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
            .map_err(|e| plot_err(&e))?
            .label(solver.to_string())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        chart
            .draw_series(pts.into_iter().map(|p| Circle::new(p, 3, color.filled())))
            .map_err(|e| plot_err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(&e))?;
    root.present().map_err(|e| plot_err(&e))?;
    Ok(())
}
