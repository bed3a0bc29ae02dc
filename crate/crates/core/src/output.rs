//! Field snapshot writers: legacy ASCII VTK and plain CSV.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fem::ProblemSpec;
use crate::mesh::Mesh;
use crate::stepper::{Observer, Operators, SimState};

/// Shortest decimal that round-trips, switching to exponent form for very
/// small or large magnitudes.
pub fn fmt_number(v: f64) -> String {
    format!("{v:?}")
}

/// VTK cell type of a linear triangle.
const VTK_TRIANGLE: u8 = 5;

fn check_len(mesh: &Mesh, field: &[f64]) -> Result<()> {
    if field.len() == mesh.num_nodes() {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: mesh.num_nodes(),
            got: field.len(),
        })
    }
}

/// Write an unstructured grid with the nodal scalar `C`.
pub fn write_vtk(path: &Path, mesh: &Mesh, field: &[f64]) -> Result<()> {
    check_len(mesh, field)?;
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let body = (|| -> std::io::Result<()> {
        writeln!(w, "# vtk DataFile Version 3.0")?;
        writeln!(w, "concentration")?;
        writeln!(w, "ASCII")?;
        writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(w, "POINTS {} double", mesh.num_nodes())?;
        for p in mesh.nodes() {
            writeln!(w, "{} {} 0", fmt_number(p[0]), fmt_number(p[1]))?;
        }
        let nt = mesh.num_triangles();
        writeln!(w, "CELLS {} {}", nt, 4 * nt)?;
        for t in mesh.triangles() {
            writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(w, "CELL_TYPES {nt}")?;
        for _ in 0..nt {
            writeln!(w, "{VTK_TRIANGLE}")?;
        }
        writeln!(w, "POINT_DATA {}", mesh.num_nodes())?;
        writeln!(w, "SCALARS C double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in field {
            writeln!(w, "{}", fmt_number(*v))?;
        }
        w.flush()
    })();
    body.map_err(io)
}

/// Write `x,y,C` rows, one per node.
pub fn write_field_csv(path: &Path, mesh: &Mesh, field: &[f64]) -> Result<()> {
    check_len(mesh, field)?;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "C"])?;
    for (p, v) in mesh.nodes().iter().zip(field) {
        w.write_record([fmt_number(p[0]), fmt_number(p[1]), fmt_number(*v)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Observer writing `field_<step>.vtk` and `field_<step>.csv` into a directory.
#[derive(Clone, Debug)]
pub struct FieldDump {
    dir: PathBuf,
    stride: usize,
    written: Vec<usize>,
}

impl FieldDump {
    pub fn new(dir: impl Into<PathBuf>, stride: usize) -> Self {
        Self {
            dir: dir.into(),
            stride: stride.max(1),
            written: Vec::new(),
        }
    }

    /// Steps dumped so far.
    pub fn steps(&self) -> &[usize] {
        &self.written
    }
}

impl Observer for FieldDump {
    fn stride(&self) -> usize {
        self.stride
    }

    fn observe(&mut self, mesh: &Mesh, _spec: &ProblemSpec, _ops: &Operators, state: &SimState) -> Result<()> {
        let stem = format!("field_{}", state.step);
        write_vtk(&self.dir.join(format!("{stem}.vtk")), mesh, &state.c)?;
        write_field_csv(&self.dir.join(format!("{stem}.csv")), mesh, &state.c)?;
        self.written.push(state.step);
        Ok(())
    }
}
