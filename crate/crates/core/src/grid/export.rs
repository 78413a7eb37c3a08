use std::io::{self, Write};

use crate::grid::TriMesh;

/// Writes `index,x,y,<columns...>`, one row per vertex.
pub fn write_vertex_csv<W: Write>(mesh: &TriMesh, columns: &[(&str, &[f64])], mut out: W) -> io::Result<()> {
    write!(out, "index,x,y")?;
    for (name, _) in columns {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for (i, p) in mesh.vertices().iter().enumerate() {
        write!(out, "{i},{},{}", p[0], p[1])?;
        for (_, col) in columns {
            write!(out, ",{}", col[i])?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes `index,v0,v1,v2,x,y,<columns...>` with the barycenter, one row per triangle.
pub fn write_triangle_csv<W: Write>(mesh: &TriMesh, columns: &[(&str, &[f64])], mut out: W) -> io::Result<()> {
    write!(out, "index,v0,v1,v2,x,y")?;
    for (name, _) in columns {
        write!(out, ",{name}")?;
    }
    writeln!(out)?;
    for (i, (t, g)) in mesh.triangles().iter().zip(mesh.geometry()).enumerate() {
        write!(out, "{i},{},{},{},{},{}", t[0], t[1], t[2], g.barycenter[0], g.barycenter[1])?;
        for (_, col) in columns {
            write!(out, ",{}", col[i])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
