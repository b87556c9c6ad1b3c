//! Legacy ASCII VTK unstructured-grid output.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::mesh::TriMesh;

const VTK_TRIANGLE: u8 = 5;

pub fn vtk_string(mesh: &TriMesh, u: &[f64], z: &[f64], title: &str) -> String {
    let n = mesh.num_nodes();
    let m = mesh.num_triangles();
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "{}", title.lines().next().unwrap_or("pff"));
    let _ = writeln!(s, "ASCII");
    let _ = writeln!(s, "DATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {n} double");
    for p in mesh.nodes() {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {m} {}", 4 * m);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {m}");
    for _ in 0..m {
        let _ = writeln!(s, "{VTK_TRIANGLE}");
    }
    let _ = writeln!(s, "POINT_DATA {n}");
    let _ = writeln!(s, "VECTORS displacement double");
    for c in u.chunks(2) {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", c[0], c[1]);
    }
    let _ = writeln!(s, "SCALARS phase double 1");
    let _ = writeln!(s, "LOOKUP_TABLE default");
    for v in z {
        let _ = writeln!(s, "{v:.16e}");
    }
    s
}

pub fn write_vtk(path: impl AsRef<Path>, mesh: &TriMesh, u: &[f64], z: &[f64]) -> Result<()> {
    let path = path.as_ref();
    if u.len() != 2 * mesh.num_nodes() || z.len() != mesh.num_nodes() {
        return Err(Error::InvalidArgument("state does not match the mesh".into()));
    }
    std::fs::write(path, vtk_string(mesh, u, z, "pff state")).map_err(|e| Error::io(path, e))
}

/// Point and cell counts plus the phase array, read back from a file written by
/// [`write_vtk`].
#[derive(Debug, Clone, PartialEq)]
pub struct VtkSummary {
    pub points: usize,
    pub cells: usize,
    pub phase: Vec<f64>,
}

pub fn read_vtk_summary(path: impl AsRef<Path>) -> Result<VtkSummary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, msg: &str| Error::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.to_string(),
    };
    let lines: Vec<&str> = text.lines().collect();
    let count = |key: &str| -> Result<(usize, usize)> {
        let (i, l) = lines
            .iter()
            .enumerate()
            .find(|(_, l)| l.starts_with(key))
            .ok_or_else(|| perr(0, &format!("missing {key}")))?;
        let n = l
            .split_whitespace()
            .nth(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| perr(i + 1, &format!("bad {key} line")))?;
        Ok((i, n))
    };
    let (_, points) = count("POINTS")?;
    let (_, cells) = count("CELLS")?;
    let (lt, _) = lines
        .iter()
        .enumerate()
        .find(|(_, l)| l.starts_with("LOOKUP_TABLE"))
        .map(|(i, l)| (i, *l))
        .ok_or_else(|| perr(0, "missing phase array"))?;
    let phase = lines[lt + 1..lt + 1 + points.min(lines.len() - lt - 1)]
        .iter()
        .enumerate()
        .map(|(k, l)| l.trim().parse::<f64>().map_err(|_| perr(lt + 2 + k, "bad phase value")))
        .collect::<Result<Vec<_>>>()?;
    Ok(VtkSummary { points, cells, phase })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_structured_mesh, EdgeMarker};

    #[test]
    fn two_triangle_file() {
        let mesh = build_structured_mesh(1, 1, 1.0, 1.0, |_, _| EdgeMarker::Dirichlet).unwrap();
        let s = vtk_string(&mesh, &[0.0; 8], &[1.0, 0.5, 0.25, 0.0], "t");
        assert!(s.contains("POINTS 4 double"));
        assert!(s.contains("CELLS 2 8"));
        assert!(s.contains("CELL_TYPES 2"));
        assert!(s.contains("VECTORS displacement double"));
        assert!(s.contains("SCALARS phase double 1"));
    }

    #[test]
    fn round_trip_counts() {
        let mesh = build_structured_mesh(3, 2, 1.0, 1.0, |_, _| EdgeMarker::Dirichlet).unwrap();
        let n = mesh.num_nodes();
        let z: Vec<f64> = (0..n).map(|i| i as f64 / n as f64).collect();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.vtk");
        write_vtk(&p, &mesh, &vec![0.0; 2 * n], &z).unwrap();
        let back = read_vtk_summary(&p).unwrap();
        assert_eq!(back.points, n);
        assert_eq!(back.cells, mesh.num_triangles());
        assert_eq!(back.phase, z);
    }

    #[test]
    fn unwritable_path_is_an_io_error() {
        let mesh = build_structured_mesh(1, 1, 1.0, 1.0, |_, _| EdgeMarker::Dirichlet).unwrap();
        let e = write_vtk("/nonexistent-dir/x.vtk", &mesh, &[0.0; 8], &[1.0; 4]).unwrap_err();
        assert!(matches!(e, Error::Io { .. }));
    }
}
